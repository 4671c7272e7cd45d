//! `QTLD` dataset cache: little-endian header then one label byte and
//! `H*W` f64 values per sample.

use std::path::Path;

use super::dataset::Dataset;
use crate::error::{Error, Result};

pub const CACHE_MAGIC: &[u8; 4] = b"QTLD";
pub const CACHE_VERSION: u16 = 1;
const HEADER_LEN: usize = 4 + 2 + 3 * 8 + 2 * 8;

pub fn encode_dataset(ds: &Dataset) -> Vec<u8> {
    let per = ds.sample_len();
    let mut out = Vec::with_capacity(HEADER_LEN + ds.len() * (1 + 8 * per));
    out.extend_from_slice(CACHE_MAGIC);
    out.extend_from_slice(&CACHE_VERSION.to_le_bytes());
    for v in [ds.len(), ds.height(), ds.width()] {
        out.extend_from_slice(&(v as u64).to_le_bytes());
    }
    out.extend_from_slice(&ds.mean().to_le_bytes());
    out.extend_from_slice(&ds.std().to_le_bytes());
    for (i, &label) in ds.labels().iter().enumerate() {
        out.push(label);
        for v in ds.sample(i) {
            out.extend_from_slice(&v.to_le_bytes());
        }
    }
    out
}

fn u64_at(b: &[u8], off: usize) -> u64 {
    u64::from_le_bytes(b[off..off + 8].try_into().unwrap())
}

fn f64_at(b: &[u8], off: usize) -> f64 {
    f64::from_le_bytes(b[off..off + 8].try_into().unwrap())
}

pub fn decode_dataset(bytes: &[u8]) -> Result<Dataset> {
    if bytes.len() < 6 || &bytes[..4] != CACHE_MAGIC {
        return Err(Error::format("dataset cache", "missing QTLD magic"));
    }
    let version = u16::from_le_bytes([bytes[4], bytes[5]]);
    if version != CACHE_VERSION {
        return Err(Error::Version { what: "dataset cache", found: version, expected: CACHE_VERSION });
    }
    if bytes.len() < HEADER_LEN {
        return Err(Error::format("dataset cache", "header truncated"));
    }
    let count = u64_at(bytes, 6) as usize;
    let height = u64_at(bytes, 14) as usize;
    let width = u64_at(bytes, 22) as usize;
    let mean = f64_at(bytes, 30);
    let std = f64_at(bytes, 38);
    let per = height
        .checked_mul(width)
        .and_then(|p| p.checked_mul(8))
        .and_then(|p| p.checked_add(1))
        .ok_or_else(|| Error::format("dataset cache", "sample size overflows"))?;
    let expected = count.checked_mul(per).and_then(|b| b.checked_add(HEADER_LEN));
    if expected != Some(bytes.len()) {
        return Err(Error::format(
            "dataset cache",
            format!("{} bytes for {count} samples of {height}x{width}", bytes.len()),
        ));
    }
    let mut labels = Vec::with_capacity(count);
    let mut data = Vec::with_capacity(count * height * width);
    for s in 0..count {
        let off = HEADER_LEN + s * per;
        labels.push(bytes[off]);
        data.extend((0..height * width).map(|j| f64_at(bytes, off + 1 + 8 * j)));
    }
    Dataset::from_parts(height, width, mean, std, labels, data)
}

pub fn write_cache(path: &Path, ds: &Dataset) -> Result<()> {
    crate::io::write_atomic(path, &encode_dataset(ds))
}

pub fn read_cache(path: &Path) -> Result<Dataset> {
    let bytes = std::fs::read(path).map_err(|e| Error::io(path, e))?;
    decode_dataset(&bytes)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::datapipe::synth_dataset;

    #[test]
    fn round_trip_bitwise() {
        let ds = synth_dataset(4, 8, 2).unwrap();
        let bytes = encode_dataset(&ds);
        assert_eq!(bytes.len(), HEADER_LEN + 8 * (1 + 8 * 64));
        assert_eq!(decode_dataset(&bytes).unwrap(), ds);
    }

    #[test]
    fn corrupt_inputs() {
        let ds = synth_dataset(2, 8, 2).unwrap();
        let bytes = encode_dataset(&ds);
        assert!(decode_dataset(&bytes[..bytes.len() - 1]).is_err());
        let mut extra = bytes.clone();
        extra.push(0);
        assert!(decode_dataset(&extra).is_err());
        let mut magic = bytes.clone();
        magic[0] = b'X';
        assert!(matches!(decode_dataset(&magic), Err(Error::Format { .. })));
        let mut ver = bytes;
        ver[4] = 9;
        let err = decode_dataset(&ver).unwrap_err().to_string();
        assert!(err.contains('9') && err.contains('1'), "{err}");
    }
}
