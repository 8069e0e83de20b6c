mod common;

use std::path::Path;

use common::{ok, schema_dir, stderr, violations, write, xvad};
use serde_json::Value;

fn gen_audio(dir: &Path, name: &str, kind: &str, duration: &str, seed: &str) -> Value {
    ok(dir, &["gen-test-audio", "--out", name, "--kind", kind, "--duration", duration, "--seed", seed])
}

#[test]
fn segment_file_contract() {
    let tmp = tempfile::tempdir().unwrap();
    let dir = tmp.path();
    let m = ok(dir, &["gen-test-model", "--out", "m", "--arch", "small", "--per-class", "40", "--seed", "3"]);
    assert_eq!(m["training_examples"], 80);
    ok(dir, &["gen-test-audio", "--out", "a.wav", "--ref", "a.ref.tsv", "--seed", "4"]);
    let r = ok(dir, &["segment", "--strategy", "xvector_filt", "--model", "m", "--audio", "a.wav", "--out", "d/"]);
    for f in ["a.seg.tsv", "a.rttm", "a.xvec", "a.decisions.log"] {
        assert!(dir.join("d").join(f).is_file(), "missing {f}");
    }
    assert_eq!(r["files"][0]["xvectors"], 13);
    let log = std::fs::read_to_string(dir.join("d/a.decisions.log")).unwrap();
    assert_eq!(log.lines().count(), 13);
    let vectors = xvad::xvector::read_archive(dir.join("d/a.xvec")).unwrap();
    assert_eq!(vectors.len(), 13);
    assert!(vectors.iter().all(|v| v.values.len() == xvad::EMBEDDING_DIM));
    let rttm = std::fs::read_to_string(dir.join("d/a.rttm")).unwrap();
    assert!(rttm.lines().all(|l| l.starts_with("SPEAKER a 1 ")), "{rttm}");

    for strategy in ["baseline", "xvector_seg_filt"] {
        let out = format!("d_{strategy}");
        let r = ok(dir, &["segment", "--strategy", strategy, "--model", "m", "--audio", "a.wav", "--out", &out]);
        assert_eq!(r["strategy"], strategy);
    }

    let e = ok(dir, &["eval-vad", "--hyp", "d/a.seg.tsv", "--ref", "a.ref.tsv", "--decisions", "d/a.decisions.log"]);
    assert_eq!(e["frames"], 1000);
    assert!(e["tpr"]["clean_speech"].as_f64().unwrap() > 0.9);
}

#[test]
fn full_workflow() {
    let tmp = tempfile::tempdir().unwrap();
    let dir = tmp.path();
    ok(dir, &["gen-test-model", "--out", "m", "--arch", "small", "--no-classifier", "--seed", "5"]);
    let mut wavs = String::new();
    for i in 0..4 {
        let seed = (10 + i).to_string();
        gen_audio(dir, &format!("s{i}.wav"), "speech", "3", &seed);
        gen_audio(dir, &format!("n{i}.wav"), if i % 2 == 0 { "tone" } else { "noise" }, "3", &seed);
        wavs += &format!("s{i}.wav\tspeech\tsrc{i}\nn{i}.wav\tnoise\tsrc{}\n", i + 4);
    }
    write(dir, "wavs.tsv", &wavs);

    let f = ok(dir, &["mfcc", "--audio", "s0.wav", "--out", "s0.feats", "--cmvn"]);
    assert_eq!((f["frames"].as_u64(), f["dim"].as_u64()), (Some(298), Some(30)));
    let feats = xvad::FeatureMatrix::load(dir.join("s0.feats")).unwrap();
    assert_eq!(feats.num_frames(), 298);

    let x = ok(dir, &["extract", "--model", "m", "--manifest", "wavs.tsv", "--out", "xv", "--jobs", "2"]);
    assert_eq!(x["files"].as_array().unwrap().len(), 8);
    assert!(x["files"].as_array().unwrap().iter().all(|f| f["vectors"] == 3));
    let single = ok(dir, &["extract", "--net", "m/net.xvnw", "--audio", "s1.wav", "--out", "s1.xvec"]);
    assert_eq!(single["files"][0]["vectors"], 3);
    assert_eq!(
        xvad::xvector::read_archive(dir.join("s1.xvec")).unwrap(),
        xvad::xvector::read_archive(dir.join("xv/s1.xvec")).unwrap()
    );

    let s = ok(dir, &["split", "--manifest", "xv/manifest.tsv", "--fraction", "0.5", "--seed", "1", "--out-dir", "sp"]);
    assert_eq!((s["train_entries"].as_u64(), s["eval_entries"].as_u64()), (Some(4), Some(4)));

    let t = ok(dir, &["train", "--manifest", "sp/train.tsv", "--out", "clf.json", "--seed", "2"]);
    assert_eq!((t["num_speech"].as_u64(), t["num_noise"].as_u64()), (Some(6), Some(6)));
    ok(dir, &["calibrate", "--model", "clf.json", "--manifest", "sp/eval.tsv", "--out", "clf2.json"]);
    let th = ok(
        dir,
        &[
            "threshold",
            "--model",
            "clf2.json",
            "--manifest",
            "sp/eval.tsv",
            "--target-fpr",
            "0.315",
            "--out",
            "clf3.json",
        ],
    );
    assert!(th["fpr"].as_f64().unwrap() <= 0.315);
    let saved = xvad::CalibratedLinearModel::load(dir.join("clf3.json")).unwrap();
    assert_eq!(saved.decision_threshold, th["threshold"].as_f64().unwrap().min(1.0));

    let seg = ok(
        dir,
        &["segment", "--net", "m/net.xvnw", "--classifier", "clf3.json", "--manifest", "wavs.tsv", "--out", "seg"],
    );
    assert_eq!(seg["files"].as_array().unwrap().len(), 8);
    assert_eq!(seg["vad_threshold"].as_f64(), Some(saved.decision_threshold));

    let r = ok(
        dir,
        &["reduce", "--manifest", "xv/manifest.tsv", "--out", "proj.csv", "--perplexity", "5", "--iterations", "300"],
    );
    assert_eq!(r["points"], 24);
    let csv = std::fs::read_to_string(dir.join("proj.csv")).unwrap();
    assert_eq!(csv.lines().next(), Some("x,y,label,source-id"));
    assert_eq!(csv.lines().count(), 25);

    write(dir, "w.ctm", "f1 1 0.0 0.3 hello\nf1 1 0.4 0.5 world\nf1 1 3.0 0.2 x\nf2 1 1.0 1.0 long\n");
    let ra = ok(dir, &["realign", "--ctm", "w.ctm", "--out", "w.rttm"]);
    assert_eq!((ra["files"].as_u64(), ra["segments"].as_u64()), (Some(2), Some(2)));
    let rttm = std::fs::read_to_string(dir.join("w.rttm")).unwrap();
    assert_eq!(
        rttm,
        "SPEAKER f1 1 0.000 0.900 <NA> <NA> speech <NA> <NA>\nSPEAKER f2 1 1.000 1.000 <NA> <NA> speech <NA> <NA>\n"
    );

    gen_audio(dir, "mix.wav", "mixed", "9", "1");
}

#[test]
fn eval_wer_identical_files() {
    let tmp = tempfile::tempdir().unwrap();
    let dir = tmp.path();
    write(dir, "r.txt", "f1\tThe cat sat on the mat.\nf2\tHello world\n");
    write(dir, "h.txt", "f1\tThe cat sat on the mat.\nf2\tHello world\n");
    let r = ok(dir, &["eval-wer", "--ref", "r.txt", "--hyp", "h.txt"]);
    assert_eq!(r["total"]["wer"].as_f64(), Some(0.0));
    assert_eq!(r["total"]["tot"], 8);

    write(dir, "h2.txt", "f1\tthe cat sat on mat\nf2\thello there world\n");
    let r = ok(dir, &["--report", "rep.json", "eval-wer", "--ref", "r.txt", "--hyp", "h2.txt"]);
    assert_eq!((r["total"]["del"].as_u64(), r["total"]["ins"].as_u64()), (Some(1), Some(1)));
    assert_eq!(r["total"]["wer"].as_f64(), Some(25.0));
    let saved: Value = serde_json::from_str(&std::fs::read_to_string(dir.join("rep.json")).unwrap()).unwrap();
    assert_eq!(saved, r);
}

#[test]
fn bogus_strategy_is_usage_error() {
    let tmp = tempfile::tempdir().unwrap();
    let o = xvad(tmp.path(), &["segment", "--strategy", "bogus", "--model", "m", "--audio", "a.wav", "--out", "d/"]);
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("--strategy"), "{}", stderr(&o));
}

#[test]
fn config_precedence_and_unknown_keys() {
    let tmp = tempfile::tempdir().unwrap();
    let dir = tmp.path();
    write(dir, "r.txt", "f1\tA b\n");
    write(dir, "h.txt", "f1\ta B\n");
    write(dir, "c.toml", "[eval-wer]\nreference = \"r.txt\"\nhyp = \"h.txt\"\nnormalize = false\n");
    let r = ok(dir, &["--config", "c.toml", "eval-wer"]);
    assert_eq!(r["total"]["sub"], 2);
    // Flags override the file.
    write(dir, "same.txt", "f1\tA b\n");
    let r = ok(dir, &["--config", "c.toml", "eval-wer", "--hyp", "same.txt"]);
    assert_eq!(r["total"]["err"], 0);

    write(dir, "bad.toml", "[eval-wer]\nrefrence = \"r.txt\"\n");
    let o = xvad(dir, &["--config", "bad.toml", "eval-wer"]);
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("refrence"), "{}", stderr(&o));

    write(dir, "bad2.toml", "[segment.pipeline]\nstrategy = \"bogus\"\n");
    assert_eq!(xvad(dir, &["--config", "bad2.toml", "eval-wer"]).status.code(), Some(2));
}

#[test]
fn usage_and_domain_exit_codes() {
    let tmp = tempfile::tempdir().unwrap();
    let dir = tmp.path();
    let o = xvad(dir, &["eval-wer", "--hyp", "h.txt"]);
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("--ref"));

    write(dir, "bad.wav", "RIFF\x10\0\0\0WAVEjunk");
    ok(dir, &["gen-test-model", "--out", "m", "--arch", "small", "--no-classifier"]);
    let o = xvad(dir, &["segment", "--strategy", "baseline", "--model", "m", "--audio", "bad.wav", "--out", "d"]);
    assert_eq!(o.status.code(), Some(1));
    assert!(stderr(&o).contains("Frontend"), "{}", stderr(&o));

    ok(dir, &["gen-test-audio", "--out", "a.wav", "--duration", "3", "--speech-duration", "1"]);
    let o = xvad(dir, &["segment", "--strategy", "xvector_filt", "--model", "m", "--audio", "a.wav", "--out", "d"]);
    assert_eq!(o.status.code(), Some(1));
    assert!(stderr(&o).contains("MissingModel"), "{}", stderr(&o));

    let o = xvad(dir, &["--jobs", "0", "eval-wer", "--ref", "a", "--hyp", "b"]);
    assert_eq!(o.status.code(), Some(2));

    let o = xvad(dir, &["--version"]);
    assert_eq!(o.status.code(), Some(0));
    assert!(String::from_utf8_lossy(&o.stdout).contains("v1"));
}

#[test]
fn schemas_cover_every_command_and_reject_bad_reports() {
    let commands = [
        "mfcc",
        "extract",
        "train",
        "calibrate",
        "threshold",
        "segment",
        "eval-vad",
        "eval-wer",
        "realign",
        "split",
        "reduce",
        "gen-test-model",
        "gen-test-audio",
    ];
    let shipped = std::fs::read_dir(schema_dir()).unwrap().count();
    assert_eq!(shipped, commands.len());
    for c in commands {
        let missing = serde_json::json!({"schema_version": 1, "command": c});
        assert!(!violations(&missing, c).is_empty(), "{c} accepts an empty report");
    }

    let tmp = tempfile::tempdir().unwrap();
    write(tmp.path(), "r.txt", "f1\ta b\n");
    let mut r = ok(tmp.path(), &["eval-wer", "--ref", "r.txt", "--hyp", "r.txt"]);
    r["schema_version"] = 2.into();
    assert!(!violations(&r, "eval-wer").is_empty());
    r["schema_version"] = 1.into();
    r["total"]["ins"] = (-1).into();
    assert!(!violations(&r, "eval-wer").is_empty());
}
