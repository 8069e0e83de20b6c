use std::io::ErrorKind;
use std::path::Path;

use hound::{SampleFormat, WavReader, WavSpec, WavWriter};

use super::{FrontendError, Result};

/// Mono PCM audio with amplitudes in `[-1, 1]`.
#[derive(Debug, Clone, PartialEq)]
pub struct AudioBuffer {
    pub samples: Vec<f32>,
    pub sample_rate: u32,
}

impl AudioBuffer {
    pub fn new(samples: Vec<f32>, sample_rate: u32) -> Self {
        assert!(sample_rate > 0, "sample rate must be positive");
        Self { samples, sample_rate }
    }

    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    pub fn duration_s(&self) -> f64 {
        self.samples.len() as f64 / self.sample_rate as f64
    }

    /// Copy of the samples in `[start_s, end_s)`, clamped to the buffer.
    pub fn slice_seconds(&self, start_s: f64, end_s: f64) -> AudioBuffer {
        let sr = self.sample_rate as f64;
        let a = ((start_s * sr).round().max(0.0) as usize).min(self.len());
        let b = ((end_s * sr).round().max(0.0) as usize).clamp(a, self.len());
        AudioBuffer::new(self.samples[a..b].to_vec(), self.sample_rate)
    }
}

fn map_hound(err: hound::Error) -> FrontendError {
    match err {
        // hound reports a short read as a custom `Other` error.
        hound::Error::IoError(e) if e.kind() == ErrorKind::UnexpectedEof || e.to_string().contains("enough bytes") => {
            FrontendError::TruncatedFile(e.to_string())
        }
        hound::Error::IoError(e) => FrontendError::Io(e),
        hound::Error::Unsupported => FrontendError::UnsupportedEncoding("compressed or unknown WAVE format".into()),
        hound::Error::FormatError(msg) if msg.contains("EOF") || msg.contains("truncat") => {
            FrontendError::TruncatedFile(msg.to_string())
        }
        other => FrontendError::UnsupportedEncoding(other.to_string()),
    }
}

/// Decodes a RIFF/WAVE file holding 16-bit PCM or 32-bit IEEE float samples.
///
/// Multi-channel input is averaged to mono when `downmix` is set and
/// rejected with [`FrontendError::ChannelMismatch`] otherwise. Integer
/// samples are scaled by 1/32768.
pub fn read_wav(path: impl AsRef<Path>, downmix: bool) -> Result<AudioBuffer> {
    let reader = WavReader::open(path.as_ref()).map_err(map_hound)?;
    let spec = reader.spec();
    if spec.channels == 0 {
        return Err(FrontendError::UnsupportedEncoding("zero channels".into()));
    }
    if spec.channels != 1 && !downmix {
        return Err(FrontendError::ChannelMismatch(spec.channels));
    }
    let interleaved: Vec<f32> = match (spec.sample_format, spec.bits_per_sample) {
        (SampleFormat::Int, 16) => reader
            .into_samples::<i16>()
            .map(|s| s.map(|v| v as f32 / 32768.0))
            .collect::<std::result::Result<_, _>>()
            .map_err(map_hound)?,
        (SampleFormat::Float, 32) => {
            reader.into_samples::<f32>().collect::<std::result::Result<_, _>>().map_err(map_hound)?
        }
        (fmt, bits) => return Err(FrontendError::UnsupportedEncoding(format!("{bits}-bit {fmt:?} samples"))),
    };
    let channels = spec.channels as usize;
    if !interleaved.len().is_multiple_of(channels) {
        return Err(FrontendError::TruncatedFile("partial sample frame".into()));
    }
    let samples: Vec<f32> = if channels == 1 {
        interleaved
    } else {
        interleaved.chunks_exact(channels).map(|frame| frame.iter().sum::<f32>() / channels as f32).collect()
    };
    if let Some(bad) = samples.iter().find(|s| !s.is_finite()) {
        return Err(FrontendError::UnsupportedEncoding(format!("non-finite sample {bad}")));
    }
    let samples = samples.into_iter().map(|s| s.clamp(-1.0, 1.0)).collect();
    Ok(AudioBuffer::new(samples, spec.sample_rate))
}

/// Writes mono 16-bit PCM. Amplitudes are clipped to `[-1, 1)`.
pub fn write_wav(path: impl AsRef<Path>, audio: &AudioBuffer) -> Result<()> {
    let spec =
        WavSpec { channels: 1, sample_rate: audio.sample_rate, bits_per_sample: 16, sample_format: SampleFormat::Int };
    let mut writer = WavWriter::create(path.as_ref(), spec).map_err(map_hound)?;
    for &s in &audio.samples {
        let v = (s as f64 * 32768.0).round().clamp(-32768.0, 32767.0) as i16;
        writer.write_sample(v).map_err(map_hound)?;
    }
    writer.finalize().map_err(map_hound)
}
