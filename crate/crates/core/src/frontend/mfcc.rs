use std::f64::consts::PI;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use rustfft::num_complex::Complex;
use rustfft::FftPlanner;
use serde::{Deserialize, Serialize};

use super::{AudioBuffer, FeatureMatrix, FrontendError, Result};

/// Filterbank energies are clamped here before taking the log.
pub const LOG_FLOOR: f64 = 1e-10;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum WindowKind {
    /// Raised cosine, `0.5 - 0.5 cos(2πn/(N-1))`.
    Hann,
    Hamming,
    /// Hann raised to the power 0.85.
    Povey,
    Rectangular,
}

impl WindowKind {
    pub fn coefficients(self, n: usize) -> Vec<f64> {
        if n == 1 {
            return vec![1.0];
        }
        let denom = (n - 1) as f64;
        (0..n)
            .map(|i| {
                let c = (2.0 * PI * i as f64 / denom).cos();
                match self {
                    WindowKind::Hann => 0.5 - 0.5 * c,
                    WindowKind::Hamming => 0.54 - 0.46 * c,
                    WindowKind::Povey => (0.5 - 0.5 * c).powf(0.85),
                    WindowKind::Rectangular => 1.0,
                }
            })
            .collect()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct MfccConfig {
    pub frame_length_ms: f64,
    pub frame_shift_ms: f64,
    pub num_mel_bins: usize,
    pub num_ceps: usize,
    pub pre_emphasis: f64,
    pub window: WindowKind,
    /// Standard deviation of Gaussian dither in sample units; 0 disables it.
    pub dither: f64,
    pub dither_seed: u64,
    pub low_freq_hz: f64,
    /// Upper filterbank edge; values `<= 0` are offsets from Nyquist.
    pub high_freq_hz: f64,
}

impl Default for MfccConfig {
    fn default() -> Self {
        Self {
            frame_length_ms: 25.0,
            frame_shift_ms: 10.0,
            num_mel_bins: 40,
            num_ceps: 30,
            pre_emphasis: 0.97,
            window: WindowKind::Hann,
            dither: 0.0,
            dither_seed: 0,
            low_freq_hz: 20.0,
            high_freq_hz: 0.0,
        }
    }
}

impl MfccConfig {
    pub fn frame_length_samples(&self, sample_rate: u32) -> usize {
        (sample_rate as f64 * self.frame_length_ms / 1000.0).round() as usize
    }

    pub fn frame_shift_samples(&self, sample_rate: u32) -> usize {
        (sample_rate as f64 * self.frame_shift_ms / 1000.0).round() as usize
    }

    pub fn high_freq(&self, sample_rate: u32) -> f64 {
        let nyquist = sample_rate as f64 / 2.0;
        if self.high_freq_hz <= 0.0 {
            nyquist + self.high_freq_hz
        } else {
            self.high_freq_hz
        }
    }

    pub fn validate(&self, sample_rate: u32) -> Result<()> {
        let bad = |m: String| Err(FrontendError::InvalidConfig(m));
        if !(self.frame_length_ms > 0.0 && self.frame_shift_ms > 0.0) {
            return bad("frame length and shift must be positive".into());
        }
        if self.frame_shift_ms > self.frame_length_ms {
            return bad("frame shift exceeds frame length".into());
        }
        if self.num_ceps == 0 || self.num_ceps > self.num_mel_bins {
            return bad(format!("num_ceps {} must be in 1..={}", self.num_ceps, self.num_mel_bins));
        }
        if !(0.0..=1.0).contains(&self.pre_emphasis) || self.dither < 0.0 {
            return bad("pre_emphasis must be in [0, 1] and dither non-negative".into());
        }
        let high = self.high_freq(sample_rate);
        if self.low_freq_hz < 0.0 || high <= self.low_freq_hz {
            return bad(format!("mel range [{}, {high}] is empty", self.low_freq_hz));
        }
        if 2.0 * high > sample_rate as f64 {
            return bad(format!("mel edge {high} Hz above Nyquist of {sample_rate} Hz"));
        }
        if self.frame_shift_samples(sample_rate) == 0 || self.frame_length_samples(sample_rate) < 2 {
            return bad("frame too short for the sample rate".into());
        }
        Ok(())
    }
}

pub fn hz_to_mel(hz: f64) -> f64 {
    1127.0 * (1.0 + hz / 700.0).ln()
}

/// Triangular filters, equally spaced on the mel scale, evaluated at FFT bins
/// `0..=fft_len/2`. Returned as `(first_bin, weights)` per filter.
pub fn mel_filterbank(
    num_bins: usize,
    fft_len: usize,
    sample_rate: u32,
    low_hz: f64,
    high_hz: f64,
) -> Vec<(usize, Vec<f64>)> {
    let mel_low = hz_to_mel(low_hz);
    let mel_high = hz_to_mel(high_hz);
    let delta = (mel_high - mel_low) / (num_bins + 1) as f64;
    let bin_hz = sample_rate as f64 / fft_len as f64;
    (0..num_bins)
        .map(|j| {
            let left = mel_low + j as f64 * delta;
            let center = left + delta;
            let right = center + delta;
            let mut first = None;
            let mut weights = Vec::new();
            for k in 0..=fft_len / 2 {
                let m = hz_to_mel(k as f64 * bin_hz);
                let w = if m > left && m <= center {
                    (m - left) / (center - left)
                } else if m > center && m < right {
                    (right - m) / (right - center)
                } else {
                    0.0
                };
                if w > 0.0 {
                    first.get_or_insert(k);
                    weights.push(w);
                } else if first.is_some() {
                    break;
                }
            }
            (first.unwrap_or(0), weights)
        })
        .collect()
}

fn dct_matrix(num_ceps: usize, num_bins: usize) -> Vec<f64> {
    let m = num_bins as f64;
    let mut out = Vec::with_capacity(num_ceps * num_bins);
    for k in 0..num_ceps {
        let scale = if k == 0 { (1.0 / m).sqrt() } else { (2.0 / m).sqrt() };
        for n in 0..num_bins {
            out.push(scale * (PI * k as f64 * (n as f64 + 0.5) / m).cos());
        }
    }
    out
}

/// MFCCs with C0 included: per frame, pre-emphasis and windowing, power
/// spectrum, mel filterbank, log with floor [`LOG_FLOOR`], orthonormal DCT-II.
///
/// Frames never reach past the end of the signal, so
/// `T = (len - frame_len) / frame_shift + 1`.
pub fn compute_mfcc(audio: &AudioBuffer, cfg: &MfccConfig) -> Result<FeatureMatrix> {
    let sr = audio.sample_rate;
    cfg.validate(sr)?;
    let frame_len = cfg.frame_length_samples(sr);
    let shift = cfg.frame_shift_samples(sr);
    if audio.len() < frame_len {
        return Err(FrontendError::AudioTooShort { samples: audio.len(), needed: frame_len });
    }
    let num_frames = (audio.len() - frame_len) / shift + 1;
    let fft_len = frame_len.next_power_of_two();
    let fft = FftPlanner::<f64>::new().plan_fft_forward(fft_len);
    let window = cfg.window.coefficients(frame_len);
    let bank = mel_filterbank(cfg.num_mel_bins, fft_len, sr, cfg.low_freq_hz, cfg.high_freq(sr));
    let dct = dct_matrix(cfg.num_ceps, cfg.num_mel_bins);
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.dither_seed);

    let mut data = Vec::with_capacity(num_frames * cfg.num_ceps);
    let mut frame = vec![0.0f64; frame_len];
    let mut spectrum = vec![Complex::new(0.0, 0.0); fft_len];
    let mut power = vec![0.0f64; fft_len / 2 + 1];
    let mut log_mel = vec![0.0f64; cfg.num_mel_bins];
    for t in 0..num_frames {
        let start = t * shift;
        for (dst, &src) in frame.iter_mut().zip(&audio.samples[start..start + frame_len]) {
            *dst = src as f64;
        }
        if cfg.dither > 0.0 {
            for v in frame.iter_mut() {
                let g: f64 = StandardNormal.sample(&mut rng);
                *v += cfg.dither * g;
            }
        }
        if cfg.pre_emphasis != 0.0 {
            for i in (1..frame_len).rev() {
                frame[i] -= cfg.pre_emphasis * frame[i - 1];
            }
            frame[0] -= cfg.pre_emphasis * frame[0];
        }
        for (i, c) in spectrum.iter_mut().enumerate() {
            *c = if i < frame_len { Complex::new(frame[i] * window[i], 0.0) } else { Complex::new(0.0, 0.0) };
        }
        fft.process(&mut spectrum);
        for (p, c) in power.iter_mut().zip(&spectrum) {
            *p = c.norm_sqr();
        }
        for (out, (first, weights)) in log_mel.iter_mut().zip(&bank) {
            let e: f64 = weights.iter().zip(&power[*first..]).map(|(w, p)| w * p).sum();
            *out = e.max(LOG_FLOOR).ln();
        }
        for k in 0..cfg.num_ceps {
            let row = &dct[k * cfg.num_mel_bins..(k + 1) * cfg.num_mel_bins];
            data.push(row.iter().zip(&log_mel).map(|(a, b)| a * b).sum());
        }
    }
    Ok(FeatureMatrix::from_vec(data, num_frames, cfg.num_ceps, shift as f64 / sr as f64))
}
