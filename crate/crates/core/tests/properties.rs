use proptest::prelude::*;
use xvad::analysis::pca_reduce;
use xvad::baseline::{decisions_to_segments, median_filter, merge_segments};
use xvad::classifier::l1_normalize;
use xvad::dataprep::{build_dataset, realign_segments, ManifestEntry, WordAlignment};
use xvad::metrics::{align_wer, rasterize, roc_curve, tpr_at_fpr};
use xvad::pipeline::cluster_ahc;
use xvad::segment::{from_tsv, to_tsv};
use xvad::xvector::window_grid;
use xvad::{ExtractionConfig, FrameDecisionTrack, Label, Segment};

fn levenshtein(a: &[u8], b: &[u8]) -> usize {
    let mut prev: Vec<usize> = (0..=b.len()).collect();
    for (i, x) in a.iter().enumerate() {
        let mut cur = vec![i + 1];
        for (j, y) in b.iter().enumerate() {
            cur.push((prev[j] + usize::from(x != y)).min(prev[j + 1] + 1).min(cur[j] + 1));
        }
        prev = cur;
    }
    prev[b.len()]
}

fn words(v: &[u8]) -> Vec<String> {
    v.iter().map(|w| format!("w{w}")).collect()
}

fn segments_strategy() -> impl Strategy<Value = Vec<Segment>> {
    prop::collection::vec((0u32..2000, 1u32..300), 0..20).prop_map(|v| {
        let mut segs: Vec<Segment> =
            v.into_iter().map(|(s, d)| Segment::new(s as f64 / 100.0, (s + d) as f64 / 100.0, "speech")).collect();
        segs.sort_by(|a, b| a.start_s.total_cmp(&b.start_s));
        segs
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(128))]

    #[test]
    fn median_filter_equals_sorted_window(bits in prop::collection::vec(0u8..2, 1..200), half in 0usize..6) {
        let width = 2 * half + 1;
        let track = FrameDecisionTrack::new(bits.clone(), 0.03);
        let out = median_filter(&track, width).unwrap();
        let n = bits.len();
        for i in 0..n {
            // The window shrinks symmetrically at the edges.
            let h = half.min(i).min(n - 1 - i);
            let mut win = bits[i - h..=i + h].to_vec();
            win.sort();
            prop_assert_eq!(out.decisions[i], win[h]);
        }
    }

    #[test]
    fn run_extraction_covers_exactly_the_ones(bits in prop::collection::vec(0u8..2, 0..200)) {
        let track = FrameDecisionTrack::new(bits.clone(), 0.03);
        let segs = decisions_to_segments(&track);
        let back = rasterize(&segs, 0.03, bits.len() as f64 * 0.03).unwrap();
        prop_assert_eq!(back.decisions, bits);
    }

    #[test]
    fn merge_is_idempotent_and_separates(segs in segments_strategy(), gap in 0.0f64..1.0) {
        let once = merge_segments(&segs, gap).unwrap();
        let twice = merge_segments(&once, gap).unwrap();
        prop_assert_eq!(&once, &twice);
        for w in once.windows(2) {
            prop_assert!(w[1].start_s - w[0].end_s > gap);
        }
        let total: f64 = segs.iter().map(|s| s.duration_s()).sum();
        let covered: f64 = once.iter().map(|s| s.duration_s()).sum();
        prop_assert!(covered <= total + gap * segs.len() as f64 + 1e-9 || segs.is_empty());
    }

    #[test]
    fn roc_is_monotone_and_matches_brute_force(
        items in prop::collection::vec((0u8..20, any::<bool>()), 2..60)
            .prop_filter("both classes", |v| v.iter().any(|x| x.1) && v.iter().any(|x| !x.1))
    ) {
        let items: Vec<(f64, bool)> = items.into_iter().map(|(s, t)| (s as f64 / 20.0, t)).collect();
        let curve = roc_curve(&items).unwrap();
        let pos = items.iter().filter(|x| x.1).count() as f64;
        let neg = items.len() as f64 - pos;
        for w in curve.points.windows(2) {
            prop_assert!(w[1].fpr >= w[0].fpr && w[1].tpr >= w[0].tpr);
        }
        let last = curve.points.last().unwrap();
        prop_assert_eq!((last.fpr, last.tpr), (1.0, 1.0));
        for p in &curve.points[1..] {
            let tp = items.iter().filter(|x| x.1 && x.0 >= p.threshold).count() as f64;
            let fp = items.iter().filter(|x| !x.1 && x.0 >= p.threshold).count() as f64;
            prop_assert_eq!((p.fpr, p.tpr), (fp / neg, tp / pos));
        }
        let mut prev = 0.0;
        for k in 0..=20 {
            let t = tpr_at_fpr(&curve, k as f64 / 20.0);
            prop_assert!(t >= prev - 1e-12 && t <= 1.0);
            prev = t;
        }
    }

    #[test]
    fn wer_counts_are_consistent(
        r in prop::collection::vec(0u8..6, 1..12),
        h in prop::collection::vec(0u8..6, 0..12),
    ) {
        let rep = align_wer(&words(&r), &words(&h)).unwrap();
        prop_assert_eq!(rep.err, levenshtein(&r, &h));
        prop_assert_eq!(rep.err, rep.ins + rep.del + rep.sub);
        prop_assert_eq!(rep.tot, r.len());
        prop_assert_eq!(rep.ins as isize - rep.del as isize, h.len() as isize - r.len() as isize);
        prop_assert_eq!(align_wer(&words(&r), &words(&r)).unwrap().err, 0);
    }

    #[test]
    fn realigned_segments_respect_gap_and_duration(
        raw in prop::collection::vec((0u32..50, 1u32..80), 1..40),
        gap in 0.0f64..1.0,
        min_dur in 0.0f64..1.0,
    ) {
        let mut t = 0.0;
        let words: Vec<WordAlignment> = raw
            .iter()
            .map(|&(pause, dur)| {
                t += pause as f64 / 50.0;
                let w = WordAlignment { file_id: "f".into(), word: "w".into(), start_s: t, end_s: t + dur as f64 / 100.0 };
                t = w.end_s;
                w
            })
            .collect();
        let segs = realign_segments(&words, gap, min_dur).unwrap();
        for s in &segs {
            prop_assert!(s.duration_s() >= min_dur);
            prop_assert!(words.iter().any(|w| w.start_s == s.start_s));
            prop_assert!(words.iter().any(|w| w.end_s == s.end_s));
        }
        for w in segs.windows(2) {
            prop_assert!(w[1].start_s - w[0].end_s > gap);
        }
        // Every word ends up inside a kept segment or in a dropped short run.
        let all = realign_segments(&words, gap, 0.0).unwrap();
        for w in &words {
            prop_assert!(all.iter().any(|s| s.start_s <= w.start_s && w.end_s <= s.end_s));
        }
    }

    #[test]
    fn dataset_split_never_leaks_sources(
        speech_sources in 2usize..12,
        noise_sources in 2usize..12,
        shared in 0usize..3,
        fraction in 0.05f64..0.95,
        seed in any::<u64>(),
    ) {
        let entry = |label, s: usize| ManifestEntry { path: format!("{label}{s}.xvec"), label, source_id: format!("src{s}") };
        let speech: Vec<_> = (0..speech_sources).map(|s| entry(Label::Speech, s)).collect();
        let noise: Vec<_> = (0..noise_sources).map(|s| entry(Label::Noise, s + speech_sources - shared.min(speech_sources))).collect();
        let (train, eval) = build_dataset(&speech, &noise, fraction, seed).unwrap();
        prop_assert_eq!(train.len() + eval.len(), speech.len() + noise.len());
        for e in &train {
            prop_assert!(eval.iter().all(|x| x.source_id != e.source_id));
        }
        prop_assert!(!train.is_empty() && !eval.is_empty());
        prop_assert_eq!(build_dataset(&speech, &noise, fraction, seed).unwrap(), (train, eval));
    }

    #[test]
    fn pca_ratios_and_axes(
        rows in prop::collection::vec(prop::collection::vec(-5.0f64..5.0, 6), 8..30),
        target in 0.5f64..0.99,
    ) {
        prop_assume!(rows.iter().any(|r| r != &rows[0]));
        let pca = pca_reduce(&rows, target).unwrap();
        prop_assert!(pca.ratios.windows(2).all(|w| w[0] >= w[1] - 1e-12));
        prop_assert!((pca.ratios.iter().sum::<f64>() - 1.0).abs() < 1e-9);
        prop_assert!(pca.ratios[..pca.k()].iter().sum::<f64>() >= target - 1e-12);
        for (i, a) in pca.components.iter().enumerate() {
            for (j, b) in pca.components.iter().enumerate() {
                let dot: f64 = a.iter().zip(b).map(|(x, y)| x * y).sum();
                prop_assert!((dot - f64::from(u8::from(i == j))).abs() < 1e-9);
            }
        }
    }

    #[test]
    fn l1_normalisation_properties(x in prop::collection::vec(-100.0f64..100.0, 1..40), scale in 0.01f64..100.0) {
        let y = l1_normalize(&x).unwrap();
        if x.iter().all(|v| *v == 0.0) {
            prop_assert_eq!(y, x);
        } else {
            prop_assert!((y.iter().map(|v| v.abs()).sum::<f64>() - 1.0).abs() < 1e-12);
            for (a, b) in x.iter().zip(&y) {
                prop_assert!(a.signum() == b.signum() || *a == 0.0);
            }
            let scaled: Vec<f64> = x.iter().map(|v| v * scale).collect();
            let z = l1_normalize(&scaled).unwrap();
            prop_assert!(y.iter().zip(&z).all(|(a, b)| (a - b).abs() < 1e-12));
        }
    }

    #[test]
    fn window_grid_tiles_the_stream(duration in 0.5f64..60.0) {
        let cfg = ExtractionConfig::default();
        let grid = window_grid(duration, &cfg).unwrap();
        prop_assert_eq!(grid[0].0, 0.0);
        prop_assert!((grid.last().unwrap().1 - duration).abs() < 1e-9);
        for (a, b) in &grid {
            prop_assert!(b - a >= cfg.min_window_s - 1e-9 && b - a <= cfg.window_s + 1e-9);
        }
        for w in grid.windows(2) {
            prop_assert!(w[1].0 > w[0].0 && w[1].0 - w[0].0 <= cfg.stride_s + 1e-9);
            prop_assert!(w[1].0 <= w[0].1);
        }
    }

    #[test]
    fn clusters_are_dense_and_ordered(
        vecs in prop::collection::vec(prop::collection::vec(-1.0f64..1.0, 4), 1..25),
        delta in 0.0f64..2.5,
    ) {
        let ids = cluster_ahc(&vecs, delta).unwrap();
        let mut next = 0;
        for &c in &ids {
            prop_assert!(c <= next);
            if c == next {
                next += 1;
            }
        }
        if delta >= 2.0 {
            prop_assert!(ids.iter().all(|&c| c == 0));
        }
    }

    #[test]
    fn tsv_roundtrip_at_millisecond_resolution(segs in segments_strategy()) {
        prop_assert_eq!(from_tsv(&to_tsv(&segs)).unwrap(), segs);
    }
}
