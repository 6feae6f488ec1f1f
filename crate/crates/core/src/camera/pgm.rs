//! Binary PGM (P5) I/O: 16-bit big-endian depth in millimeters, 8-bit masks.

use std::io::Write;
use std::path::Path;

use thiserror::Error;

use super::{DepthImage, SegmentationMask};
use crate::se3::Timestamp;

#[derive(Debug, Error)]
pub enum PgmError {
    #[error("malformed PGM: {0}")]
    Format(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

fn header(w: usize, h: usize, maxval: u32) -> Vec<u8> {
    format!("P5\n{w} {h}\n{maxval}\n").into_bytes()
}

pub fn encode_depth(d: &DepthImage) -> Vec<u8> {
    let mut out = header(d.width, d.height, 65535);
    out.reserve(d.data.len() * 2);
    for &mm in &d.data {
        out.extend_from_slice(&mm.to_be_bytes());
    }
    out
}

pub fn encode_mask(m: &SegmentationMask) -> Vec<u8> {
    let mut out = header(m.width, m.height, 255);
    out.extend(m.bitmap.iter().map(|&b| if b { 255u8 } else { 0 }));
    out
}

/// Parses the header and returns `(width, height, maxval, pixel bytes)`.
fn decode(bytes: &[u8]) -> Result<(usize, usize, u32, &[u8]), PgmError> {
    let mut pos = 0;
    let mut fields: Vec<String> = Vec::with_capacity(4);
    while fields.len() < 4 {
        while pos < bytes.len() && bytes[pos].is_ascii_whitespace() {
            pos += 1;
        }
        if pos < bytes.len() && bytes[pos] == b'#' {
            while pos < bytes.len() && bytes[pos] != b'\n' {
                pos += 1;
            }
            continue;
        }
        let start = pos;
        while pos < bytes.len() && !bytes[pos].is_ascii_whitespace() {
            pos += 1;
        }
        if start == pos {
            return Err(PgmError::Format("truncated header".into()));
        }
        fields.push(String::from_utf8_lossy(&bytes[start..pos]).into_owned());
    }
    // Exactly one whitespace byte separates the header from the raster.
    pos += 1;
    if fields[0] != "P5" {
        return Err(PgmError::Format(format!("expected P5, got {}", fields[0])));
    }
    let num = |s: &str| s.parse::<usize>().map_err(|_| PgmError::Format(format!("bad number '{s}'")));
    let (w, h, maxval) = (num(&fields[1])?, num(&fields[2])?, num(&fields[3])? as u32);
    if maxval == 0 || maxval > 65535 {
        return Err(PgmError::Format(format!("maxval {maxval} out of range")));
    }
    let bpp = if maxval > 255 { 2 } else { 1 };
    let need = w * h * bpp;
    let raster = bytes.get(pos..pos + need).ok_or_else(|| {
        PgmError::Format(format!("raster too short: need {need} bytes"))
    })?;
    Ok((w, h, maxval, raster))
}

pub fn decode_depth(bytes: &[u8]) -> Result<DepthImage, PgmError> {
    let (w, h, maxval, raster) = decode(bytes)?;
    let data = if maxval > 255 {
        raster.chunks_exact(2).map(|c| u16::from_be_bytes([c[0], c[1]])).collect()
    } else {
        raster.iter().map(|&b| b as u16).collect()
    };
    Ok(DepthImage { width: w, height: h, data, timestamp: Timestamp::default() })
}

pub fn decode_mask(bytes: &[u8]) -> Result<SegmentationMask, PgmError> {
    let (w, h, maxval, raster) = decode(bytes)?;
    let bitmap = if maxval > 255 {
        raster.chunks_exact(2).map(|c| c != [0, 0]).collect()
    } else {
        raster.iter().map(|&b| b != 0).collect()
    };
    Ok(SegmentationMask { width: w, height: h, bitmap, timestamp: Timestamp::default() })
}

fn write_bytes(path: &Path, bytes: &[u8]) -> Result<(), PgmError> {
    let mut f = std::io::BufWriter::new(std::fs::File::create(path)?);
    f.write_all(bytes)?;
    f.flush()?;
    Ok(())
}

pub fn write_depth(path: impl AsRef<Path>, d: &DepthImage) -> Result<(), PgmError> {
    write_bytes(path.as_ref(), &encode_depth(d))
}

pub fn write_mask(path: impl AsRef<Path>, m: &SegmentationMask) -> Result<(), PgmError> {
    write_bytes(path.as_ref(), &encode_mask(m))
}

pub fn read_depth(path: impl AsRef<Path>) -> Result<DepthImage, PgmError> {
    decode_depth(&std::fs::read(path)?)
}

pub fn read_mask(path: impl AsRef<Path>) -> Result<SegmentationMask, PgmError> {
    decode_mask(&std::fs::read(path)?)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn depth_round_trip_and_byte_order() {
        let d = DepthImage { width: 3, height: 2, data: vec![0, 1, 256, 1000, 65535, 7], timestamp: Timestamp(0) };
        let bytes = encode_depth(&d);
        assert!(bytes.starts_with(b"P5\n3 2\n65535\n"));
        let raster = &bytes[bytes.len() - 12..];
        assert_eq!(&raster[4..6], &[1, 0]);
        assert_eq!(decode_depth(&bytes).unwrap(), d);
    }

    #[test]
    fn mask_round_trip() {
        let m = SegmentationMask {
            width: 2,
            height: 2,
            bitmap: vec![true, false, false, true],
            timestamp: Timestamp(0),
        };
        let bytes = encode_mask(&m);
        assert_eq!(&bytes[bytes.len() - 4..], &[255, 0, 0, 255]);
        assert_eq!(decode_mask(&bytes).unwrap(), m);
    }

    #[test]
    fn header_comments_and_errors() {
        let bytes = b"P5\n# a comment\n2 1\n255\n\x00\x09";
        let m = decode_mask(bytes).unwrap();
        assert_eq!(m.bitmap, vec![false, true]);
        assert!(decode_depth(b"P2\n1 1\n255\n0").is_err());
        assert!(decode_depth(b"P5\n4 4\n65535\n\x00").is_err());
    }
}
