//! Shared inputs for the criterion benches.

use xvad::synth::{concat, speech_proxy, tone};
use xvad::{AudioBuffer, XVector};

pub const SAMPLE_RATE: u32 = 16000;

/// Alternating speech-proxy and tone blocks, `seconds` long in total.
pub fn mixed_audio(seconds: f64) -> AudioBuffer {
    let block = 2.0;
    let n = (seconds / block).ceil() as usize;
    let parts: Vec<AudioBuffer> = (0..n)
        .map(|i| {
            if i % 2 == 0 {
                speech_proxy(block, SAMPLE_RATE, i as u64)
            } else {
                tone(block, SAMPLE_RATE, 500.0 + 100.0 * i as f64, 0.3, i as u64)
            }
        })
        .collect();
    concat(&parts)
}

/// `n` embeddings drawn from a handful of directions, as AHC sees them.
pub fn clustered_vectors(n: usize, dim: usize) -> Vec<Vec<f64>> {
    (0..n)
        .map(|i| {
            let c = i % 4;
            (0..dim).map(|d| if d % 4 == c { 1.0 } else { 0.0 } + ((i * 31 + d * 17) % 97) as f64 * 1e-3).collect()
        })
        .collect()
}

/// Reference and hypothesis word lists of length `n` with sparse edits.
pub fn transcripts(n: usize) -> (Vec<String>, Vec<String>) {
    let r: Vec<String> = (0..n).map(|i| format!("w{}", (i * 7) % 50)).collect();
    let h = r
        .iter()
        .enumerate()
        .filter(|(i, _)| i % 13 != 0)
        .map(|(i, w)| if i % 9 == 0 { "x".into() } else { w.clone() })
        .collect();
    (r, h)
}

pub fn blank_vectors(n: usize) -> Vec<XVector> {
    (0..n)
        .map(|i| XVector {
            values: vec![i as f32; xvad::EMBEDDING_DIM],
            window_start_s: i as f64 * 0.75,
            window_end_s: i as f64 * 0.75 + 1.5,
        })
        .collect()
}
