//! Acceptance checks, one line per criterion. Runs without the libtest
//! harness so that every line is printed whether or not it passes.

mod common;

use std::collections::HashMap;
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::time::{Duration, Instant};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use xvad::analysis::{pca_reduce, tsne_embed, TsneConfig};
use xvad::baseline::{median_filter, merge_segments};
use xvad::classifier::{platt_calibrate, predict, Label, TrainConfig};
use xvad::metrics::{
    align_wer, frame_vad_eval, rasterize, roc_curve, tpr_at_fpr, wer_from_counts, ConditionLabel, RocCurve, RocPoint,
};
use xvad::pipeline::{compute_features, run_pipeline};
use xvad::segment::union_intervals;
use xvad::synth;
use xvad::xvector::{extract_sequence, extract_windows, window_grid, Layer, BN_EPSILON};
use xvad::{FrameDecisionTrack, PipelineConfig, Segment, Strategy, XVectorNet};

type Check = Result<String, String>;

fn ensure(cond: bool, msg: impl FnOnce() -> String) -> Result<(), String> {
    if cond {
        Ok(())
    } else {
        Err(msg())
    }
}

// ---------------------------------------------------------------- 1

fn wer_table_arithmetic() -> Check {
    // (#TOT, #ERR, #INS, #DEL, #SUB, %WER)
    let rows: [(usize, usize, usize, usize, usize, f64); 6] = [
        (82361, 22128, 3776, 7795, 10557, 26.9),
        (82364, 21712, 3115, 8259, 10338, 26.4),
        (82368, 22012, 2862, 9125, 10025, 26.7),
        (35936, 11144, 5458, 1886, 3800, 31.0),
        (35937, 10206, 4438, 1939, 3829, 28.4),
        (35936, 8821, 3021, 2004, 3796, 24.5),
    ];
    for (tot, err, ins, del, sub, pct) in rows {
        ensure(err == ins + del + sub, || format!("#ERR {err} != {ins}+{del}+{sub}"))?;
        let got = wer_from_counts(tot, ins, del, sub).map_err(|e| e.to_string())?;
        ensure(got == pct, || format!("WER {got} != {pct} for #TOT {tot}"))?;
    }
    Ok("6/6 rows".into())
}

// ---------------------------------------------------------------- 2

/// Plain top-down memoised edit distance.
fn edit_distance_oracle(r: &[u8], h: &[u8]) -> usize {
    fn go(r: &[u8], h: &[u8], i: usize, j: usize, memo: &mut HashMap<(usize, usize), usize>) -> usize {
        if i == r.len() {
            return h.len() - j;
        }
        if j == h.len() {
            return r.len() - i;
        }
        if let Some(&v) = memo.get(&(i, j)) {
            return v;
        }
        let sub = go(r, h, i + 1, j + 1, memo) + usize::from(r[i] != h[j]);
        let del = go(r, h, i + 1, j, memo) + 1;
        let ins = go(r, h, i, j + 1, memo) + 1;
        let v = sub.min(del).min(ins);
        memo.insert((i, j), v);
        v
    }
    go(r, h, 0, 0, &mut HashMap::new())
}

fn wer_oracle() -> Check {
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    for case in 0..200 {
        let r: Vec<u8> = (0..rng.random_range(1..=12)).map(|_| rng.random_range(0..10)).collect();
        let h: Vec<u8> = (0..rng.random_range(0..=12)).map(|_| rng.random_range(0..10)).collect();
        let words = |v: &[u8]| v.iter().map(|w| format!("w{w}")).collect::<Vec<_>>();
        let rep = align_wer(&words(&r), &words(&h)).map_err(|e| e.to_string())?;
        let want = edit_distance_oracle(&r, &h);
        ensure(rep.err == want, || format!("case {case}: err {} != oracle {want} for {r:?} / {h:?}", rep.err))?;
        ensure(rep.err == rep.ins + rep.del + rep.sub && r.len() + rep.ins - rep.del == h.len(), || {
            format!("case {case}: inconsistent counts {rep:?}")
        })?;
    }
    Ok("200/200 pairs".into())
}

// ---------------------------------------------------------------- 3

fn brute_force_roc(items: &[(f64, bool)]) -> Vec<RocPoint> {
    let n_pos = items.iter().filter(|i| i.1).count() as f64;
    let n_neg = items.len() as f64 - n_pos;
    let mut thresholds: Vec<f64> = items.iter().map(|i| i.0).collect();
    thresholds.push(f64::INFINITY);
    thresholds.sort_by(|a, b| b.total_cmp(a));
    thresholds.dedup();
    thresholds
        .into_iter()
        .map(|t| {
            let tp = items.iter().filter(|i| i.1 && i.0 >= t).count() as f64;
            let fp = items.iter().filter(|i| !i.1 && i.0 >= t).count() as f64;
            RocPoint { fpr: fp / n_neg, tpr: tp / n_pos, threshold: t }
        })
        .collect()
}

fn roc_oracle() -> Check {
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    for case in 0..100 {
        let n = rng.random_range(2..=500);
        let grid = rng.random_range(2..60);
        let mut items: Vec<(f64, bool)> =
            (0..n).map(|_| (rng.random_range(0..grid) as f64 / 7.0, rng.random_bool(0.4))).collect();
        items[0].1 = true;
        items[1].1 = false;
        let got = roc_curve(&items).map_err(|e| e.to_string())?;
        let want = brute_force_roc(&items);
        ensure(got.points == want, || format!("case {case}: curve differs from enumeration"))?;
    }
    let fixture = RocCurve {
        points: vec![
            RocPoint { fpr: 0.2, tpr: 0.6, threshold: 0.9 },
            RocPoint { fpr: 0.4, tpr: 0.8, threshold: 0.5 },
            RocPoint { fpr: 1.0, tpr: 1.0, threshold: 0.0 },
        ],
    };
    let t = tpr_at_fpr(&fixture, 0.315);
    let hand = 0.6 + (0.315 - 0.2) / (0.4 - 0.2) * 0.2;
    ensure((t - hand).abs() < 1e-9 && (t - 0.715).abs() < 1e-9, || format!("interpolated TPR {t}, expected 0.715"))?;
    Ok(format!("100/100 sets, TPR@0.315 = {t:.9}"))
}

// ---------------------------------------------------------------- 4

/// Layer-by-layer forward pass in f64 straight from the layer definitions.
fn forward_oracle(net: &XVectorNet, x: &[Vec<f64>]) -> Vec<f64> {
    let affine = |p: &xvad::xvector::AffineParams, v: &[f64], nonlinear: bool| -> Vec<f64> {
        (0..p.output_dim())
            .map(|o| {
                let mut y = p.bias[o] as f64;
                for (i, vi) in v.iter().enumerate() {
                    y += p.weights[[o, i]] as f64 * vi;
                }
                if nonlinear && p.relu_bn {
                    let eps = BN_EPSILON as f64;
                    y = (y.max(0.0) - p.bn_mean[o] as f64) / (p.bn_var[o] as f64 + eps).sqrt();
                }
                y
            })
            .collect()
    };
    let mut h: Vec<Vec<f64>> = x.to_vec();
    for layer in net.layers() {
        match layer {
            Layer::Frame(f) => {
                let lo = -f.offsets.iter().copied().min().unwrap().min(0);
                let hi = f.offsets.iter().copied().max().unwrap().max(0);
                let mut next = Vec::new();
                for t in lo..(h.len() as i32 - hi) {
                    let spliced: Vec<f64> = f.offsets.iter().flat_map(|&o| h[(t + o) as usize].clone()).collect();
                    next.push(affine(&f.params, &spliced, true));
                }
                h = next;
            }
            Layer::StatsPool { .. } => {
                let d = h[0].len();
                let n = h.len() as f64;
                let mean: Vec<f64> = (0..d).map(|k| h.iter().map(|r| r[k]).sum::<f64>() / n).collect();
                let std: Vec<f64> =
                    (0..d).map(|k| (h.iter().map(|r| (r[k] - mean[k]).powi(2)).sum::<f64>() / n).sqrt()).collect();
                h = vec![[mean, std].concat()];
            }
            // The embedding is taken before the segment layer's nonlinearity.
            Layer::Segment(p) => return affine(p, &h[0], false),
        }
    }
    unreachable!("network ends with a segment layer")
}

fn forward_oracle_check() -> Check {
    let mut worst = 0.0f64;
    for seed in 0..20u64 {
        let net = synth::random_net(&synth::NetSpec::standard(), seed);
        let mut rng = ChaCha8Rng::seed_from_u64(1000 + seed);
        let x: Vec<Vec<f64>> =
            (0..150).map(|_| (0..30).map(|_| rng.sample::<f64, _>(StandardNormal) as f32 as f64).collect()).collect();
        let flat: Vec<f64> = x.concat();
        let got = net.forward_rows(&flat, 150).map_err(|e| e.to_string())?;
        let want = forward_oracle(&net, &x);
        ensure(got.len() == 512 && want.len() == 512, || "embedding length".into())?;
        let scale = want.iter().fold(0.0f64, |m, v| m.max(v.abs()));
        let err = got.iter().zip(&want).fold(0.0f64, |m, (g, w)| m.max((*g as f64 - w).abs())) / scale;
        worst = worst.max(err);
        ensure(err <= 1e-5, || format!("seed {seed}: relative error {err:e}"))?;
    }
    Ok(format!("20 nets, worst relative error {worst:.2e}"))
}

// ---------------------------------------------------------------- 5

fn extraction_protocol() -> Check {
    let net = synth::calibrated_random_net(&synth::NetSpec::small(), 5);
    let audio = synth::speech_proxy(3.0, 16000, 5);
    let cfg = PipelineConfig::default();
    let feats = compute_features(&audio, &cfg.mfcc, cfg.cmvn_window).map_err(|e| e.to_string())?;
    let grid = window_grid(audio.duration_s(), &cfg.extraction).map_err(|e| e.to_string())?;
    let by_audio = extract_windows(&net, &feats, &grid).map_err(|e| e.to_string())?;
    let by_feats = extract_sequence(&net, &feats, &cfg.extraction).map_err(|e| e.to_string())?;
    for vs in [&by_audio, &by_feats] {
        let starts: Vec<f64> = vs.iter().map(|v| v.window_start_s).collect();
        ensure(starts.len() == 3, || format!("{} windows", starts.len()))?;
        for (s, want) in starts.iter().zip([0.0, 0.75, 1.5]) {
            ensure((s - want).abs() < 1e-9, || format!("starts {starts:?}"))?;
        }
        ensure(vs.iter().all(|v| v.values.len() == 512), || "embedding length".into())?;
    }
    let spans: Vec<(f64, f64)> = by_audio.iter().map(|v| (v.window_start_s, v.window_end_s)).collect();
    ensure(spans.iter().all(|(a, b)| (b - a - 1.5).abs() < 1e-9), || format!("spans {spans:?}"))?;
    Ok(format!("windows {spans:?}"))
}

// ---------------------------------------------------------------- 6

fn classifier_blobs() -> Check {
    let all = synth::gaussian_blobs(250, 512, 0.5, 0.01, 6);
    let (train, holdout) = all.split_at(400);
    let model = platt_calibrate(train, &TrainConfig::default()).map_err(|e| e.to_string())?;
    let mut correct = 0;
    for e in holdout {
        correct += usize::from(predict(&model, &e.values).map_err(|e| e.to_string())?.0 == e.label);
    }
    let acc = correct as f64 / holdout.len() as f64;
    ensure(acc >= 0.99, || format!("holdout accuracy {acc}"))?;

    let mut scored: Vec<(f64, f64)> = all
        .iter()
        .map(|e| {
            let s = model.score(&xvad::classifier::l1_normalize(&e.values).unwrap());
            (s, model.probability_from_score(s))
        })
        .collect();
    scored.sort_by(|a, b| a.0.total_cmp(&b.0));
    ensure(scored.windows(2).all(|w| w[1].1 >= w[0].1), || "probability not monotone in score".into())?;
    ensure(scored.first().unwrap().1 < scored.last().unwrap().1, || "probability is flat".into())?;

    // Power-of-two factors scale every coordinate without rounding, so the
    // prediction must match bit for bit.
    for e in holdout {
        let base = predict(&model, &e.values).unwrap();
        for s in [0.125, 2.0, 1024.0, 2f64.powi(-20)] {
            let scaled: Vec<f64> = e.values.iter().map(|v| v * s).collect();
            let got = predict(&model, &scaled).unwrap();
            ensure(got.0 == base.0 && got.1.to_bits() == base.1.to_bits(), || {
                format!("scale {s}: {got:?} vs {base:?}")
            })?;
        }
        for s in [0.37, 3.0, 1e3] {
            let scaled: Vec<f64> = e.values.iter().map(|v| v * s).collect();
            let got = predict(&model, &scaled).unwrap();
            ensure(got.0 == base.0 && (got.1 - base.1).abs() <= 1e-12, || format!("scale {s}: {got:?} vs {base:?}"))?;
        }
    }
    Ok(format!("holdout accuracy {acc:.3}, A = {:.3}", model.calib_a))
}

// ---------------------------------------------------------------- 7

fn pipeline_end_to_end() -> Check {
    let net = synth::test_model(0);
    let cfg = PipelineConfig::default();
    let data = synth::matched_training_embeddings(&net, &cfg, 500, 1);
    let model = platt_calibrate(&data, &TrainConfig::default()).map_err(|e| e.to_string())?;
    let (audio, truth) = synth::speech_then_tone(4.0, 10.0, 16000, 100);
    let period = 0.010;
    let n = (10.0 / period) as usize;
    let reference: Vec<ConditionLabel> = (0..n)
        .map(|i| {
            if truth.contains((i as f64 + 0.5) * period) {
                ConditionLabel::CleanSpeech
            } else {
                ConditionLabel::NoSpeech
            }
        })
        .collect();
    let mut details = Vec::new();
    for strategy in [Strategy::XvectorFilt, Strategy::XvectorSegFilt] {
        let c = PipelineConfig { strategy, ..cfg.clone() };
        let out = run_pipeline(&audio, &net, Some(&model), &c).map_err(|e| e.to_string())?;
        let union = union_intervals(&out.segments);
        ensure(union.len() == 1, || format!("{strategy}: speech spans {union:?}"))?;
        let (s, e) = union[0];
        let (ds, de) = ((s - truth.start_s).abs(), (e - truth.end_s).abs());
        ensure(ds <= 0.75 && de <= 0.75, || format!("{strategy}: span [{s}, {e}) vs [0, 4)"))?;
        let spans: Vec<Segment> = union.iter().map(|&(a, b)| Segment::new(a, b, "speech")).collect();
        let track: FrameDecisionTrack = rasterize(&spans, period, 10.0).map_err(|e| e.to_string())?;
        let r = frame_vad_eval(&track, &reference).map_err(|e| e.to_string())?;
        let (tpr, fpr) = (r.all.unwrap(), r.fpr.unwrap());
        ensure(tpr >= 0.9 && fpr <= 0.1, || format!("{strategy}: TPR {tpr}, FPR {fpr}"))?;
        details.push(format!("{strategy} [{s:.2},{e:.2}) TPR {tpr:.3} FPR {fpr:.3}"));
    }
    Ok(details.join("; "))
}

// ---------------------------------------------------------------- 8

fn brute_median(d: &[u8], width: usize) -> Vec<u8> {
    let n = d.len();
    (0..n)
        .map(|i| {
            let mut r = width / 2;
            while r > i || i + r >= n {
                r -= 1;
            }
            let ones = d[i - r..=i + r].iter().filter(|&&v| v == 1).count();
            u8::from(ones > r)
        })
        .collect()
}

fn baseline_postprocessing() -> Check {
    let mut rng = ChaCha8Rng::seed_from_u64(8);
    for case in 0..1000 {
        let n = rng.random_range(1..=200);
        let p = rng.random_range(0.05..0.95);
        let d: Vec<u8> = (0..n).map(|_| u8::from(rng.random_bool(p))).collect();
        let width = 2 * rng.random_range(0..6) + 1;
        let got = median_filter(&FrameDecisionTrack::new(d.clone(), 0.03), width).map_err(|e| e.to_string())?;
        ensure(got.decisions == brute_median(&d, width), || format!("case {case}: width {width} on {d:?}"))?;
    }
    for case in 0..1000 {
        let mut t = 0.0;
        let segs: Vec<Segment> = (0..rng.random_range(0..30))
            .map(|_| {
                t += rng.random_range(0.0..1.2);
                let s = Segment::new(t, t + rng.random_range(0.01..2.0), "speech");
                t = s.end_s;
                s
            })
            .collect();
        let once = merge_segments(&segs, 0.5).map_err(|e| e.to_string())?;
        let twice = merge_segments(&once, 0.5).map_err(|e| e.to_string())?;
        ensure(once == twice, || format!("case {case}: merge not idempotent"))?;
        ensure(once.windows(2).all(|w| w[1].start_s - w[0].end_s > 0.5), || format!("case {case}: gap <= 0.5 s left"))?;
    }
    Ok("1000 median tracks, 1000 merge lists".into())
}

// ---------------------------------------------------------------- 9

/// Lloyd's 2-means in the plane seeded with a far-apart pair; returns the
/// fraction of points whose cluster matches their label (up to swapping).
fn two_means_agreement(pts: &[[f64; 2]], labels: &[Label]) -> f64 {
    let d2 = |a: [f64; 2], b: [f64; 2]| (a[0] - b[0]).powi(2) + (a[1] - b[1]).powi(2);
    let far = |from: [f64; 2]| *pts.iter().max_by(|a, b| d2(**a, from).total_cmp(&d2(**b, from))).unwrap();
    let mut c = [far(pts[0]), far(far(pts[0]))];
    let mut assign = vec![0usize; pts.len()];
    for _ in 0..100 {
        for (a, p) in assign.iter_mut().zip(pts) {
            *a = usize::from(d2(*p, c[1]) < d2(*p, c[0]));
        }
        for (k, ck) in c.iter_mut().enumerate() {
            let members: Vec<&[f64; 2]> = pts.iter().zip(&assign).filter(|(_, a)| **a == k).map(|(p, _)| p).collect();
            if !members.is_empty() {
                let m = members.len() as f64;
                *ck = [members.iter().map(|p| p[0]).sum::<f64>() / m, members.iter().map(|p| p[1]).sum::<f64>() / m];
            }
        }
    }
    let same = assign.iter().zip(labels).filter(|(a, l)| (**a == 0) == (**l == Label::Speech)).count();
    let frac = same as f64 / pts.len() as f64;
    frac.max(1.0 - frac)
}

fn pca_tsne() -> Check {
    let rows: Vec<Vec<f64>> = (0..50).map(|i| vec![3.0 + 2.0 * i as f64, -1.0 + 0.5 * i as f64]).collect();
    let pca = pca_reduce(&rows, 0.95).map_err(|e| e.to_string())?;
    ensure(pca.k() == 1 && (pca.ratios[0] - 1.0).abs() <= 1e-9, || format!("k {} ratios {:?}", pca.k(), pca.ratios))?;
    let mut agreements = Vec::new();
    for seed in 0..3u64 {
        let blobs = synth::gaussian_blobs(100, 512, 10.0, 1.0, 90 + seed);
        let rows: Vec<Vec<f64>> = blobs.iter().map(|e| e.values.clone()).collect();
        let labels: Vec<Label> = blobs.iter().map(|e| e.label).collect();
        let out = tsne_embed(&rows, &TsneConfig { seed, ..TsneConfig::default() }).map_err(|e| e.to_string())?;
        let agree = two_means_agreement(&out.coords, &labels);
        ensure(agree >= 0.95, || format!("seed {seed}: 2-means agreement {agree}"))?;
        agreements.push(agree);
    }
    Ok(format!("rank-1 ratio {:.12}, t-SNE agreement {agreements:?}", pca.ratios[0]))
}

// ---------------------------------------------------------------- 10

fn determinism() -> Check {
    use common::{ok, read_bytes, write};
    let tmp = tempfile::tempdir().map_err(|e| e.to_string())?;
    let dir = tmp.path();
    ok(dir, &["gen-test-model", "--out", "m", "--per-class", "100", "--seed", "7"]);
    ok(dir, &["gen-test-model", "--out", "m2", "--per-class", "100", "--seed", "7"]);
    let mut compared = vec![("m/net.xvnw".to_string(), "m2/net.xvnw".to_string())];
    compared.push(("m/classifier.json".into(), "m2/classifier.json".into()));
    ok(dir, &["gen-test-audio", "--out", "a.wav", "--seed", "8"]);
    let mut wavs = String::new();
    for i in 0..4 {
        let seed = (20 + i).to_string();
        ok(
            dir,
            &["gen-test-audio", "--out", &format!("s{i}.wav"), "--kind", "speech", "--duration", "3", "--seed", &seed],
        );
        ok(
            dir,
            &["gen-test-audio", "--out", &format!("n{i}.wav"), "--kind", "tone", "--duration", "3", "--seed", &seed],
        );
        wavs += &format!("s{i}.wav\tspeech\tsrc{i}\nn{i}.wav\tnoise\tsrc{}\n", i + 4);
    }
    write(dir, "wavs.tsv", &wavs);
    ok(dir, &["extract", "--model", "m", "--manifest", "wavs.tsv", "--out", "xv"]);
    for run in ["1", "2"] {
        ok(
            dir,
            &[
                "segment",
                "--strategy",
                "xvector_seg_filt",
                "--model",
                "m",
                "--audio",
                "a.wav",
                "--out",
                &format!("seg{run}"),
            ],
        );
        ok(dir, &["train", "--manifest", "xv/manifest.tsv", "--seed", "3", "--out", &format!("clf{run}.json")]);
        ok(
            dir,
            &[
                "reduce",
                "--manifest",
                "xv/manifest.tsv",
                "--perplexity",
                "5",
                "--seed",
                "4",
                "--out",
                &format!("proj{run}.csv"),
            ],
        );
    }
    for ext in ["seg.tsv", "rttm", "xvec", "decisions.log"] {
        compared.push((format!("seg1/a.{ext}"), format!("seg2/a.{ext}")));
    }
    compared.push(("clf1.json".into(), "clf2.json".into()));
    compared.push(("proj1.csv".into(), "proj2.csv".into()));
    for (a, b) in &compared {
        let (x, y) = (read_bytes(&dir.join(a)), read_bytes(&dir.join(b)));
        ensure(!x.is_empty() || a.ends_with("seg.tsv"), || format!("{a} is empty"))?;
        ensure(x == y, || format!("{a} and {b} differ"))?;
    }
    Ok(format!("{} output pairs byte-identical", compared.len()))
}

// ----------------------------------------------------------------

/// Number, name, time limit in seconds, check.
type Criterion = (u32, &'static str, u64, fn() -> Check);

fn main() {
    let criteria: [Criterion; 10] = [
        (1, "WER table arithmetic", 1, wer_table_arithmetic),
        (2, "WER alignment oracle", 10, wer_oracle),
        (3, "ROC oracle", 10, roc_oracle),
        (4, "TDNN forward oracle", 30, forward_oracle_check),
        (5, "extraction windows", 5, extraction_protocol),
        (6, "classifier on separable blobs", 30, classifier_blobs),
        (7, "pipeline synthetic end-to-end", 120, pipeline_end_to_end),
        (8, "baseline post-processing", 10, baseline_postprocessing),
        (9, "PCA and t-SNE", 120, pca_tsne),
        (10, "CLI determinism", 180, determinism),
    ];
    let filter: Vec<u32> = std::env::args().skip(1).filter_map(|a| a.parse().ok()).collect();
    let mut failed = 0;
    for (n, name, limit, check) in criteria {
        if !filter.is_empty() && !filter.contains(&n) {
            continue;
        }
        let t = Instant::now();
        let result = catch_unwind(AssertUnwindSafe(check)).unwrap_or_else(|p| {
            let msg = p.downcast_ref::<String>().cloned().or_else(|| p.downcast_ref::<&str>().map(|s| s.to_string()));
            Err(format!("panicked: {}", msg.unwrap_or_default()))
        });
        let elapsed = t.elapsed();
        let result = result.and_then(|d| {
            if elapsed > Duration::from_secs(limit) {
                Err(format!("{d}; exceeded {limit} s"))
            } else {
                Ok(d)
            }
        });
        let (status, detail) = match &result {
            Ok(d) => ("PASS", d),
            Err(e) => ("FAIL", e),
        };
        println!("criterion {n:>2} {status} [{name}] {:.2}s/{limit}s: {detail}", elapsed.as_secs_f64());
        failed += usize::from(result.is_err());
    }
    if failed > 0 {
        println!("{failed} criteria failed");
        std::process::exit(1);
    }
}
