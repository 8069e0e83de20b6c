//! `"XVEC" u32 count { f64 start_s, f64 end_s, f32[512] } u32 crc32`, little-endian.

use std::path::Path;

use super::{Result, XVector, XVectorError, EMBEDDING_DIM};

const MAGIC: &[u8; 4] = b"XVEC";
const RECORD_BYTES: usize = 16 + 4 * EMBEDDING_DIM;

pub fn archive_file_size(count: usize) -> usize {
    8 + count * RECORD_BYTES + 4
}

pub fn write_archive(path: impl AsRef<Path>, vectors: &[XVector]) -> Result<()> {
    let mut buf = Vec::with_capacity(archive_file_size(vectors.len()));
    buf.extend_from_slice(MAGIC);
    let count = u32::try_from(vectors.len()).map_err(|_| XVectorError::CorruptArchive("too many vectors".into()))?;
    buf.extend_from_slice(&count.to_le_bytes());
    for v in vectors {
        if v.values.len() != EMBEDDING_DIM {
            return Err(XVectorError::DimMismatch(format!(
                "x-vector has {} values, archive stores {EMBEDDING_DIM}",
                v.values.len()
            )));
        }
        buf.extend_from_slice(&v.window_start_s.to_le_bytes());
        buf.extend_from_slice(&v.window_end_s.to_le_bytes());
        for x in &v.values {
            buf.extend_from_slice(&x.to_le_bytes());
        }
    }
    let crc = crc32fast::hash(&buf);
    buf.extend_from_slice(&crc.to_le_bytes());
    std::fs::write(path, buf)?;
    Ok(())
}

pub fn read_archive(path: impl AsRef<Path>) -> Result<Vec<XVector>> {
    let bytes = std::fs::read(path)?;
    if bytes.len() < 12 || &bytes[..4] != MAGIC {
        return Err(XVectorError::BadMagic { expected: "XVEC" });
    }
    let (body, crc) = bytes.split_at(bytes.len() - 4);
    if crc32fast::hash(body) != u32::from_le_bytes(crc.try_into().unwrap()) {
        return Err(XVectorError::CorruptArchive("checksum mismatch".into()));
    }
    let count = u32::from_le_bytes(body[4..8].try_into().unwrap()) as usize;
    if body.len() != 8 + count * RECORD_BYTES {
        return Err(XVectorError::CorruptArchive(format!(
            "{count} records need {} bytes, found {}",
            archive_file_size(count),
            bytes.len()
        )));
    }
    Ok(body[8..]
        .chunks_exact(RECORD_BYTES)
        .map(|rec| XVector {
            window_start_s: f64::from_le_bytes(rec[0..8].try_into().unwrap()),
            window_end_s: f64::from_le_bytes(rec[8..16].try_into().unwrap()),
            values: rec[16..].chunks_exact(4).map(|c| f32::from_le_bytes(c.try_into().unwrap())).collect(),
        })
        .collect())
}
