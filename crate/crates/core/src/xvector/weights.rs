//! Little-endian weight file:
//!
//! ```text
//! "XVNW" u16 version u16 layer_count
//! per layer: u8 tag
//!   tag 1 (frame):   u32 in u32 out u16 n_offsets i32[n] u8 flags AFFINE
//!   tag 2 (pooling): u32 in
//!   tag 3 (segment): u32 in u32 out u8 flags AFFINE
//! AFFINE = f32[out * in'] weights (row-major), f32[out] bias,
//!          f32[out] bn mean, f32[out] bn var
//! u32 CRC32 of everything before it
//! ```
//!
//! `in'` is `in * n_offsets` for frame layers. Flag bit 0 enables ReLU +
//! batch norm.

use std::path::Path;

use ndarray::{Array1, Array2};

use super::{AffineParams, FrameLayer, Layer, Result, XVectorError, XVectorNet};
use crate::FORMAT_VERSION;

const MAGIC: &[u8; 4] = b"XVNW";
const TAG_FRAME: u8 = 1;
const TAG_POOL: u8 = 2;
const TAG_SEGMENT: u8 = 3;

fn put_f32s<'a>(buf: &mut Vec<u8>, vals: impl IntoIterator<Item = &'a f32>) {
    for v in vals {
        buf.extend_from_slice(&v.to_le_bytes());
    }
}

fn put_affine(buf: &mut Vec<u8>, p: &AffineParams) {
    buf.push(u8::from(p.relu_bn));
    put_f32s(buf, p.weights.iter());
    put_f32s(buf, p.bias.iter());
    put_f32s(buf, p.bn_mean.iter());
    put_f32s(buf, p.bn_var.iter());
}

pub fn write_weights(net: &XVectorNet) -> Vec<u8> {
    let mut buf = Vec::new();
    buf.extend_from_slice(MAGIC);
    buf.extend_from_slice(&FORMAT_VERSION.to_le_bytes());
    buf.extend_from_slice(&(net.layers().len() as u16).to_le_bytes());
    for layer in net.layers() {
        match layer {
            Layer::Frame(f) => {
                buf.push(TAG_FRAME);
                buf.extend_from_slice(&(f.input_dim as u32).to_le_bytes());
                buf.extend_from_slice(&(f.output_dim() as u32).to_le_bytes());
                buf.extend_from_slice(&(f.offsets.len() as u16).to_le_bytes());
                for o in &f.offsets {
                    buf.extend_from_slice(&o.to_le_bytes());
                }
                put_affine(&mut buf, &f.params);
            }
            Layer::StatsPool { input_dim } => {
                buf.push(TAG_POOL);
                buf.extend_from_slice(&(*input_dim as u32).to_le_bytes());
            }
            Layer::Segment(p) => {
                buf.push(TAG_SEGMENT);
                buf.extend_from_slice(&(p.input_dim() as u32).to_le_bytes());
                buf.extend_from_slice(&(p.output_dim() as u32).to_le_bytes());
                put_affine(&mut buf, p);
            }
        }
    }
    let crc = crc32fast::hash(&buf);
    buf.extend_from_slice(&crc.to_le_bytes());
    buf
}

struct Cursor<'a> {
    bytes: &'a [u8],
    pos: usize,
}

impl<'a> Cursor<'a> {
    fn take(&mut self, n: usize) -> Result<&'a [u8]> {
        let end = self
            .pos
            .checked_add(n)
            .filter(|&e| e <= self.bytes.len())
            .ok_or_else(|| XVectorError::DimMismatch(format!("weight file truncated at byte {}", self.pos)))?;
        let out = &self.bytes[self.pos..end];
        self.pos = end;
        Ok(out)
    }

    fn u8(&mut self) -> Result<u8> {
        Ok(self.take(1)?[0])
    }

    fn u16(&mut self) -> Result<u16> {
        Ok(u16::from_le_bytes(self.take(2)?.try_into().unwrap()))
    }

    fn u32(&mut self) -> Result<usize> {
        Ok(u32::from_le_bytes(self.take(4)?.try_into().unwrap()) as usize)
    }

    fn i32(&mut self) -> Result<i32> {
        Ok(i32::from_le_bytes(self.take(4)?.try_into().unwrap()))
    }

    fn f32s(&mut self, n: usize) -> Result<Vec<f32>> {
        let bytes = self.take(n.checked_mul(4).ok_or_else(|| XVectorError::DimMismatch("size overflow".into()))?)?;
        Ok(bytes.chunks_exact(4).map(|c| f32::from_le_bytes(c.try_into().unwrap())).collect())
    }

    fn affine(&mut self, input: usize, output: usize) -> Result<AffineParams> {
        let relu_bn = self.u8()? & 1 == 1;
        let weights = Array2::from_shape_vec((output, input), self.f32s(output * input)?)
            .map_err(|e| XVectorError::DimMismatch(e.to_string()))?;
        Ok(AffineParams {
            weights,
            bias: Array1::from(self.f32s(output)?),
            bn_mean: Array1::from(self.f32s(output)?),
            bn_var: Array1::from(self.f32s(output)?),
            relu_bn,
        })
    }
}

pub fn read_weights(bytes: &[u8]) -> Result<XVectorNet> {
    if bytes.len() < 12 || &bytes[..4] != MAGIC {
        return Err(XVectorError::BadMagic { expected: "XVNW" });
    }
    let (body, crc) = bytes.split_at(bytes.len() - 4);
    if crc32fast::hash(body) != u32::from_le_bytes(crc.try_into().unwrap()) {
        return Err(XVectorError::CorruptArchive("weight file checksum mismatch".into()));
    }
    let mut cur = Cursor { bytes: body, pos: 4 };
    let version = cur.u16()?;
    if version != FORMAT_VERSION {
        return Err(XVectorError::UnsupportedVersion(version));
    }
    let count = cur.u16()? as usize;
    let mut layers = Vec::with_capacity(count);
    for i in 0..count {
        let layer = match cur.u8()? {
            TAG_FRAME => {
                let input_dim = cur.u32()?;
                let output = cur.u32()?;
                let n = cur.u16()? as usize;
                let offsets = (0..n).map(|_| cur.i32()).collect::<Result<Vec<_>>>()?;
                let params = cur.affine(input_dim * n, output)?;
                Layer::Frame(FrameLayer { offsets, input_dim, params })
            }
            TAG_POOL => Layer::StatsPool { input_dim: cur.u32()? },
            TAG_SEGMENT => {
                let input = cur.u32()?;
                let output = cur.u32()?;
                Layer::Segment(cur.affine(input, output)?)
            }
            tag => return Err(XVectorError::DimMismatch(format!("layer {i}: unknown type tag {tag}"))),
        };
        layers.push(layer);
    }
    if cur.pos != body.len() {
        return Err(XVectorError::DimMismatch(format!("{} trailing bytes", body.len() - cur.pos)));
    }
    XVectorNet::new(layers)
}

pub fn load_weights(path: impl AsRef<Path>) -> Result<XVectorNet> {
    read_weights(&std::fs::read(path)?)
}

pub fn save_weights(net: &XVectorNet, path: impl AsRef<Path>) -> Result<()> {
    std::fs::write(path, write_weights(net))?;
    Ok(())
}
