//! Seeded synthetic fixtures: random-weight networks, test signals and
//! matched training embeddings.

use std::f64::consts::PI;

use ndarray::{Array1, Array2, Axis};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal, StandardNormal};

use crate::classifier::{Label, LabeledEmbedding};
use crate::frontend::AudioBuffer;
use crate::pipeline::{compute_features, PipelineConfig};
use crate::segment::Segment;
use crate::xvector::{
    extract_windows, stats_pool, window_grid, AffineParams, FrameLayer, Layer, XVectorNet, EMBEDDING_DIM, FEATURE_DIM,
};

/// Layer sizes of a TDNN x-vector network.
#[derive(Debug, Clone, PartialEq)]
pub struct NetSpec {
    pub input_dim: usize,
    /// `(context offsets, output dim)` per frame layer.
    pub frame_layers: Vec<(Vec<i32>, usize)>,
    /// Output dims of the segment layers; the first is the embedding.
    pub segment_dims: Vec<usize>,
}

impl NetSpec {
    /// The usual x-vector topology on 30-dimensional MFCCs.
    pub fn standard() -> Self {
        Self {
            input_dim: FEATURE_DIM,
            frame_layers: vec![
                (vec![-2, -1, 0, 1, 2], 512),
                (vec![-2, 0, 2], 512),
                (vec![-3, 0, 3], 512),
                (vec![0], 512),
                (vec![0], 1500),
            ],
            segment_dims: vec![EMBEDDING_DIM, 512],
        }
    }

    /// A narrower variant for quick tests; same context and embedding size.
    pub fn small() -> Self {
        Self {
            input_dim: FEATURE_DIM,
            frame_layers: vec![
                (vec![-2, -1, 0, 1, 2], 64),
                (vec![-2, 0, 2], 64),
                (vec![-3, 0, 3], 64),
                (vec![0], 64),
                (vec![0], 128),
            ],
            segment_dims: vec![EMBEDDING_DIM],
        }
    }
}

fn random_affine(rng: &mut ChaCha8Rng, input: usize, output: usize, relu_bn: bool) -> AffineParams {
    let scale = 1.0 / (input as f64).sqrt();
    let weights =
        Array2::from_shape_simple_fn((output, input), || (rng.sample::<f64, _>(StandardNormal) * scale) as f32);
    let bias = Array1::from_shape_simple_fn(output, || (0.1 * rng.sample::<f64, _>(StandardNormal)) as f32);
    let bn_mean = Array1::from_shape_simple_fn(output, || rng.random_range(0.0..0.5f32));
    let bn_var = Array1::from_shape_simple_fn(output, || rng.random_range(0.5..1.5f32));
    AffineParams { weights, bias, bn_mean, bn_var, relu_bn }
}

/// Random weights with arbitrary batch-norm statistics.
pub fn random_net(spec: &NetSpec, seed: u64) -> XVectorNet {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut layers = Vec::new();
    let mut dim = spec.input_dim;
    for (offsets, out) in &spec.frame_layers {
        let params = random_affine(&mut rng, dim * offsets.len(), *out, true);
        layers.push(Layer::Frame(FrameLayer { offsets: offsets.clone(), input_dim: dim, params }));
        dim = *out;
    }
    layers.push(Layer::StatsPool { input_dim: dim });
    dim *= 2;
    for &out in &spec.segment_dims {
        layers.push(Layer::Segment(random_affine(&mut rng, dim, out, true)));
        dim = out;
    }
    XVectorNet::new(layers).expect("spec builds a valid network")
}

fn set_bn_from(params: &mut AffineParams, activations: &Array2<f32>) {
    let relu = activations.mapv(|v| v.max(0.0));
    let mean = relu.mean_axis(Axis(0)).expect("non-empty");
    let var = relu.var_axis(Axis(0), 0.0).mapv(|v| v.max(1e-4));
    params.bn_mean = mean;
    params.bn_var = var;
}

/// Random network whose batch-norm statistics are measured on standard
/// normal input, so activations stay well scaled on normalised features.
pub fn calibrated_random_net(spec: &NetSpec, seed: u64) -> XVectorNet {
    let net = random_net(spec, seed);
    let mut layers = net.layers().to_vec();
    let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0x5eed_ca1b);
    const WINDOWS: usize = 24;
    const FRAMES: usize = 150;
    let mut hs: Vec<Array2<f32>> = (0..WINDOWS)
        .map(|_| Array2::from_shape_simple_fn((FRAMES, spec.input_dim), || rng.sample::<f64, _>(StandardNormal) as f32))
        .collect();
    let mut pooled: Vec<Array1<f32>> = Vec::new();
    for layer in &mut layers {
        match layer {
            Layer::Frame(f) => {
                let probe = FrameLayer { params: AffineParams { relu_bn: false, ..f.params.clone() }, ..f.clone() };
                let pre: Vec<Array2<f32>> = hs.iter().map(|h| probe.forward(h.view())).collect();
                let stacked = ndarray::concatenate(Axis(0), &pre.iter().map(|a| a.view()).collect::<Vec<_>>())
                    .expect("same width");
                set_bn_from(&mut f.params, &stacked);
                hs = hs.iter().map(|h| f.forward(h.view())).collect();
            }
            Layer::StatsPool { .. } => {
                pooled = hs.iter().map(|h| stats_pool(h.view()).expect("non-empty")).collect();
            }
            Layer::Segment(p) => {
                let x = ndarray::stack(Axis(0), &pooled.iter().map(|a| a.view()).collect::<Vec<_>>()).expect("stack");
                let mut pre = x.dot(&p.weights.t());
                pre += &p.bias;
                set_bn_from(p, &pre);
                let scale = p.bn_var.mapv(|v| 1.0 / (v + crate::xvector::BN_EPSILON).sqrt());
                let post = (pre.mapv(|v| v.max(0.0)) - &p.bn_mean) * &scale;
                pooled = post.axis_iter(Axis(0)).map(|r| r.to_owned()).collect();
            }
        }
    }
    XVectorNet::new(layers).expect("calibration keeps the network valid")
}

/// The network written by `gen-test-model`.
pub fn test_model(seed: u64) -> XVectorNet {
    calibrated_random_net(&NetSpec::standard(), seed)
}

fn n_samples(duration_s: f64, sample_rate: u32) -> usize {
    (duration_s * sample_rate as f64).round() as usize
}

/// Harmonic "syllables" with gliding pitch and moving formants, separated
/// by short pauses, under a 4 Hz-ish amplitude envelope.
pub fn speech_proxy(duration_s: f64, sample_rate: u32, seed: u64) -> AudioBuffer {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let n = n_samples(duration_s, sample_rate);
    let sr = sample_rate as f64;
    let nyquist = sr / 2.0;
    let mut out = vec![0.0f64; n];
    let mut pos = 0usize;
    while pos < n {
        let syl = n_samples(rng.random_range(0.12..0.30), sample_rate).max(1);
        let pause = n_samples(rng.random_range(0.03..0.12), sample_rate);
        let f0_start: f64 = rng.random_range(100.0..220.0);
        let f0_end = f0_start * rng.random_range(0.8..1.25);
        let f1: f64 = rng.random_range(300.0..850.0);
        let f2: f64 = rng.random_range(900.0..2300.0);
        let f3: f64 = rng.random_range(2400.0..3200.0);
        let amp = rng.random_range(0.15..0.35);
        let end = (pos + syl).min(n);
        let mut phase = 0.0f64;
        for (k, sample) in out[pos..end].iter_mut().enumerate() {
            let frac = k as f64 / syl as f64;
            let f0 = f0_start + (f0_end - f0_start) * frac;
            phase += 2.0 * PI * f0 / sr;
            let env = (PI * frac).sin().powi(2);
            let mut v = 0.0;
            let mut h = 1.0;
            while h * f0 < nyquist.min(4000.0) {
                let f = h * f0;
                let shape = |fc: f64, bw: f64| 1.0 / (1.0 + ((f - fc) / bw).powi(2));
                let gain = shape(f1, 90.0) + 0.6 * shape(f2, 120.0) + 0.3 * shape(f3, 180.0);
                v += gain * (h * phase).sin() / h.sqrt();
                h += 1.0;
            }
            *sample = amp * env * v;
        }
        pos = end + pause;
    }
    // Low aspiration noise so pauses are not digital silence.
    let noise = Normal::new(0.0, 1e-3).expect("valid");
    let peak = out.iter().fold(0.0f64, |m, v| m.max(v.abs())).max(1e-9);
    let samples = out.iter().map(|v| (0.5 * v / peak + noise.sample(&mut rng)) as f32).collect();
    AudioBuffer::new(samples, sample_rate)
}

/// Steady sinusoid with a faint noise floor.
pub fn tone(duration_s: f64, sample_rate: u32, freq_hz: f64, amplitude: f64, seed: u64) -> AudioBuffer {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let noise = Normal::new(0.0, 1e-3).expect("valid");
    let sr = sample_rate as f64;
    let samples = (0..n_samples(duration_s, sample_rate))
        .map(|i| (amplitude * (2.0 * PI * freq_hz * i as f64 / sr).sin() + noise.sample(&mut rng)) as f32)
        .collect();
    AudioBuffer::new(samples, sample_rate)
}

pub fn white_noise(duration_s: f64, sample_rate: u32, amplitude: f64, seed: u64) -> AudioBuffer {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let samples =
        (0..n_samples(duration_s, sample_rate)).map(|_| rng.random_range(-amplitude..amplitude) as f32).collect();
    AudioBuffer::new(samples, sample_rate)
}

pub fn silence(duration_s: f64, sample_rate: u32) -> AudioBuffer {
    AudioBuffer::new(vec![0.0; n_samples(duration_s, sample_rate)], sample_rate)
}

pub fn concat(parts: &[AudioBuffer]) -> AudioBuffer {
    let sr = parts.first().map_or(16000, |p| p.sample_rate);
    AudioBuffer::new(parts.iter().flat_map(|p| p.samples.iter().copied()).collect(), sr)
}

/// Speech-proxy for `speech_s` seconds followed by a 440 Hz tone up to
/// `total_s`, with the reference speech segment.
pub fn speech_then_tone(speech_s: f64, total_s: f64, sample_rate: u32, seed: u64) -> (AudioBuffer, Segment) {
    let audio = concat(&[
        speech_proxy(speech_s, sample_rate, seed),
        tone(total_s - speech_s, sample_rate, 440.0, 0.3, seed.wrapping_add(1)),
    ]);
    (audio, Segment::new(0.0, speech_s, "speech"))
}

/// Alternating speech-proxy and tone blocks; returns the audio and the
/// labelled blocks.
pub fn mixed_stream(blocks: usize, sample_rate: u32, seed: u64) -> (AudioBuffer, Vec<(f64, f64, Label)>) {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut parts = Vec::new();
    let mut spans = Vec::new();
    let mut t = 0.0;
    let speech_first = rng.random_bool(0.5);
    for b in 0..blocks {
        let dur = (rng.random_range(3.0..6.0f64) * 100.0).round() / 100.0;
        let sub_seed = rng.random::<u64>();
        let (part, label) = if speech_first == (b % 2 == 0) {
            (speech_proxy(dur, sample_rate, sub_seed), Label::Speech)
        } else {
            let f = rng.random_range(150.0..2500.0);
            let a = rng.random_range(0.1..0.5);
            (tone(dur, sample_rate, f, a, sub_seed), Label::Noise)
        };
        spans.push((t, t + dur, label));
        parts.push(part);
        t += dur;
    }
    (concat(&parts), spans)
}

/// Embeddings from windows lying entirely inside one block of synthetic
/// mixed streams, computed exactly as the pipeline computes them. Stops
/// once both classes have `per_class` examples.
pub fn matched_training_embeddings(
    net: &XVectorNet,
    cfg: &PipelineConfig,
    per_class: usize,
    seed: u64,
) -> Vec<LabeledEmbedding> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut out = Vec::new();
    let (mut n_speech, mut n_noise) = (0usize, 0usize);
    let mut stream = 0usize;
    while n_speech < per_class || n_noise < per_class {
        let (audio, spans) = mixed_stream(4, 16000, rng.random());
        let feats = compute_features(&audio, &cfg.mfcc, cfg.cmvn_window).expect("synthetic audio is valid");
        let grid = window_grid(audio.duration_s(), &cfg.extraction).expect("stream long enough");
        let mut wanted = Vec::new();
        for &(a, b) in &grid {
            if let Some(&(_, _, label)) = spans.iter().find(|&&(s, e, _)| a >= s - 1e-9 && b <= e + 1e-9) {
                let need = match label {
                    Label::Speech => n_speech < per_class,
                    Label::Noise => n_noise < per_class,
                };
                if need {
                    match label {
                        Label::Speech => n_speech += 1,
                        Label::Noise => n_noise += 1,
                    }
                    wanted.push(((a, b), label));
                }
            }
        }
        let windows: Vec<(f64, f64)> = wanted.iter().map(|w| w.0).collect();
        let vectors = extract_windows(net, &feats, &windows).expect("extraction succeeds");
        for (v, (_, label)) in vectors.into_iter().zip(wanted) {
            out.push(LabeledEmbedding { values: v.as_f64(), label, source_id: format!("synth{stream}") });
        }
        stream += 1;
    }
    out
}

/// Two Gaussian blobs at `±margin/2` along a random unit direction.
pub fn gaussian_blobs(per_class: usize, dim: usize, margin: f64, sigma: f64, seed: u64) -> Vec<LabeledEmbedding> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut dir: Vec<f64> = (0..dim).map(|_| rng.sample(StandardNormal)).collect();
    let norm = dir.iter().map(|v| v * v).sum::<f64>().sqrt();
    dir.iter_mut().for_each(|v| *v /= norm);
    let noise = Normal::new(0.0, sigma).expect("valid sigma");
    let mut out = Vec::with_capacity(2 * per_class);
    for i in 0..2 * per_class {
        let label = if i % 2 == 0 { Label::Speech } else { Label::Noise };
        let values = dir.iter().map(|d| label.sign() * 0.5 * margin * d + noise.sample(&mut rng)).collect();
        out.push(LabeledEmbedding { values, label, source_id: format!("blob{}", i % 10) });
    }
    out
}
