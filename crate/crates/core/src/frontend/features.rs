use std::io::{Read, Write};
use std::path::Path;

use super::{FrontendError, Result};

const MAGIC: &[u8; 4] = b"FEAT";

/// Row-major `T x D` matrix of per-frame features.
#[derive(Debug, Clone, PartialEq)]
pub struct FeatureMatrix {
    data: Vec<f64>,
    num_frames: usize,
    dim: usize,
    pub frame_shift_s: f64,
    pub start_time_s: f64,
}

impl FeatureMatrix {
    pub fn from_vec(data: Vec<f64>, num_frames: usize, dim: usize, frame_shift_s: f64) -> Self {
        assert_eq!(data.len(), num_frames * dim, "data length must equal T*D");
        Self { data, num_frames, dim, frame_shift_s, start_time_s: 0.0 }
    }

    pub fn from_rows(rows: &[Vec<f64>], frame_shift_s: f64) -> Self {
        let dim = rows.first().map_or(0, Vec::len);
        assert!(rows.iter().all(|r| r.len() == dim), "ragged rows");
        Self::from_vec(rows.concat(), rows.len(), dim, frame_shift_s)
    }

    pub fn num_frames(&self) -> usize {
        self.num_frames
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn is_empty(&self) -> bool {
        self.num_frames == 0
    }

    pub fn data(&self) -> &[f64] {
        &self.data
    }

    pub fn row(&self, t: usize) -> &[f64] {
        &self.data[t * self.dim..(t + 1) * self.dim]
    }

    pub fn rows(&self) -> impl Iterator<Item = &[f64]> {
        self.data.chunks_exact(self.dim.max(1)).take(self.num_frames)
    }

    /// Time covered by the frame grid, `T * frame_shift`.
    pub fn duration_s(&self) -> f64 {
        self.num_frames as f64 * self.frame_shift_s
    }

    /// Frames `[a, b)`, clamped; the start time moves with the slice.
    pub fn slice_frames(&self, a: usize, b: usize) -> FeatureMatrix {
        let b = b.min(self.num_frames);
        let a = a.min(b);
        FeatureMatrix {
            data: self.data[a * self.dim..b * self.dim].to_vec(),
            num_frames: b - a,
            dim: self.dim,
            frame_shift_s: self.frame_shift_s,
            start_time_s: self.start_time_s + a as f64 * self.frame_shift_s,
        }
    }

    /// Frame range whose start times fall in `[start_s, end_s)` relative to
    /// the matrix start.
    pub fn frame_range(&self, start_s: f64, end_s: f64) -> (usize, usize) {
        let to_frame = |s: f64| ((s / self.frame_shift_s).round().max(0.0) as usize).min(self.num_frames);
        let a = to_frame(start_s);
        (a, to_frame(end_s).max(a))
    }

    pub fn write_to(&self, mut w: impl Write) -> Result<()> {
        let t = u32::try_from(self.num_frames).map_err(|_| FrontendError::BadFeatureFile("too many frames".into()))?;
        w.write_all(MAGIC)?;
        w.write_all(&t.to_le_bytes())?;
        w.write_all(&(self.dim as u32).to_le_bytes())?;
        w.write_all(&self.frame_shift_s.to_le_bytes())?;
        let mut buf = Vec::with_capacity(self.data.len() * 4);
        for &v in &self.data {
            buf.extend_from_slice(&(v as f32).to_le_bytes());
        }
        w.write_all(&buf)?;
        Ok(())
    }

    pub fn read_from(mut r: impl Read) -> Result<Self> {
        let mut header = [0u8; 20];
        r.read_exact(&mut header).map_err(|_| FrontendError::BadFeatureFile("short header".into()))?;
        if &header[..4] != MAGIC {
            return Err(FrontendError::BadFeatureFile("bad magic".into()));
        }
        let t = u32::from_le_bytes(header[4..8].try_into().unwrap()) as usize;
        let d = u32::from_le_bytes(header[8..12].try_into().unwrap()) as usize;
        let shift = f64::from_le_bytes(header[12..20].try_into().unwrap());
        let mut payload = Vec::new();
        r.read_to_end(&mut payload)?;
        if payload.len() != t * d * 4 {
            return Err(FrontendError::BadFeatureFile(format!(
                "expected {} payload bytes, found {}",
                t * d * 4,
                payload.len()
            )));
        }
        let data = payload.chunks_exact(4).map(|c| f32::from_le_bytes(c.try_into().unwrap()) as f64).collect();
        Ok(Self::from_vec(data, t, d, shift))
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        let file = std::fs::File::create(path)?;
        let mut w = std::io::BufWriter::new(file);
        self.write_to(&mut w)?;
        w.flush()?;
        Ok(())
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let file = std::fs::File::open(path)?;
        Self::read_from(std::io::BufReader::new(file))
    }
}
