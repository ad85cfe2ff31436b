//! Binary epoch (`EEGB`) and label (`EEGL`) files.
//!
//! `EEGB`, little-endian: magic, `u16` version, `u32` epochs, `u32`
//! channels, `u32` samples, `f32` samples epoch-major then channel-major,
//! then a `u64` FNV-1a checksum over every preceding byte.
//!
//! `EEGL`, little-endian: magic, `u16` version, `u32` count, `i32` labels.

use std::hash::Hasher;
use std::path::Path;

use fnv::FnvHasher;

use crate::{Error, Result};

pub const EPOCH_MAGIC: &[u8; 4] = b"EEGB";
pub const LABEL_MAGIC: &[u8; 4] = b"EEGL";
pub const FORMAT_VERSION: u16 = 1;

/// Raw epoch tensor, `[epoch][channel][sample]`.
pub type EpochArray = Vec<Vec<Vec<f32>>>;

pub fn checksum(bytes: &[u8]) -> u64 {
    let mut h = FnvHasher::default();
    h.write(bytes);
    h.finish()
}

pub fn encode_epochs(epochs: &EpochArray) -> Result<Vec<u8>> {
    let n_epochs = epochs.len();
    let n_channels = epochs.first().map_or(0, Vec::len);
    let n_samples = epochs.first().and_then(|e| e.first()).map_or(0, Vec::len);
    if epochs
        .iter()
        .any(|e| e.len() != n_channels || e.iter().any(|c| c.len() != n_samples))
    {
        return Err(Error::invalid("ragged epoch array"));
    }
    let mut out = Vec::with_capacity(18 + 4 * n_epochs * n_channels * n_samples + 8);
    out.extend_from_slice(EPOCH_MAGIC);
    out.extend_from_slice(&FORMAT_VERSION.to_le_bytes());
    for n in [n_epochs, n_channels, n_samples] {
        out.extend_from_slice(&(n as u32).to_le_bytes());
    }
    for v in epochs.iter().flatten().flatten() {
        out.extend_from_slice(&v.to_le_bytes());
    }
    let sum = checksum(&out);
    out.extend_from_slice(&sum.to_le_bytes());
    Ok(out)
}

fn u16_at(b: &[u8], at: usize) -> u16 {
    u16::from_le_bytes([b[at], b[at + 1]])
}

fn u32_at(b: &[u8], at: usize) -> u32 {
    u32::from_le_bytes(b[at..at + 4].try_into().unwrap())
}

pub fn decode_epochs(bytes: &[u8], path: &Path) -> Result<EpochArray> {
    let fail = |why: String| Error::format(path, why);
    if bytes.len() < 26 || &bytes[..4] != EPOCH_MAGIC {
        return Err(fail("not an EEGB file".into()));
    }
    let version = u16_at(bytes, 4);
    if version != FORMAT_VERSION {
        return Err(fail(format!("unsupported EEGB version {version}")));
    }
    let (ne, nc, ns) = (
        u32_at(bytes, 6) as usize,
        u32_at(bytes, 10) as usize,
        u32_at(bytes, 14) as usize,
    );
    let payload = ne
        .checked_mul(nc)
        .and_then(|v| v.checked_mul(ns))
        .and_then(|v| v.checked_mul(4))
        .ok_or_else(|| fail("header dimensions overflow".into()))?;
    if bytes.len() != 18 + payload + 8 {
        return Err(fail(format!(
            "expected {} bytes for {ne}x{nc}x{ns}, found {}",
            18 + payload + 8,
            bytes.len()
        )));
    }
    let body_end = 18 + payload;
    let stored = u64::from_le_bytes(bytes[body_end..].try_into().unwrap());
    if stored != checksum(&bytes[..body_end]) {
        return Err(fail("checksum mismatch".into()));
    }
    let mut values = bytes[18..body_end]
        .chunks_exact(4)
        .map(|c| f32::from_le_bytes(c.try_into().unwrap()));
    let epochs = (0..ne)
        .map(|_| {
            (0..nc)
                .map(|_| values.by_ref().take(ns).collect())
                .collect()
        })
        .collect();
    Ok(epochs)
}

pub fn encode_labels(labels: &[usize]) -> Vec<u8> {
    let mut out = Vec::with_capacity(10 + 4 * labels.len());
    out.extend_from_slice(LABEL_MAGIC);
    out.extend_from_slice(&FORMAT_VERSION.to_le_bytes());
    out.extend_from_slice(&(labels.len() as u32).to_le_bytes());
    for &l in labels {
        out.extend_from_slice(&(l as i32).to_le_bytes());
    }
    out
}

pub fn decode_labels(bytes: &[u8], path: &Path) -> Result<Vec<usize>> {
    let fail = |why: String| Error::format(path, why);
    if bytes.len() < 10 || &bytes[..4] != LABEL_MAGIC {
        return Err(fail("not an EEGL file".into()));
    }
    let version = u16_at(bytes, 4);
    if version != FORMAT_VERSION {
        return Err(fail(format!("unsupported EEGL version {version}")));
    }
    let n = u32_at(bytes, 6) as usize;
    if bytes.len() != 10 + 4 * n {
        return Err(fail(format!("expected {n} labels")));
    }
    bytes[10..]
        .chunks_exact(4)
        .map(|c| {
            let v = i32::from_le_bytes(c.try_into().unwrap());
            usize::try_from(v).map_err(|_| fail(format!("negative label {v}")))
        })
        .collect()
}

pub fn write_epochs(path: &Path, epochs: &EpochArray) -> Result<()> {
    std::fs::write(path, encode_epochs(epochs)?).map_err(|e| Error::io(path, e))
}

pub fn read_epochs(path: &Path) -> Result<EpochArray> {
    let bytes = std::fs::read(path).map_err(|e| Error::io(path, e))?;
    decode_epochs(&bytes, path)
}

pub fn write_labels(path: &Path, labels: &[usize]) -> Result<()> {
    std::fs::write(path, encode_labels(labels)).map_err(|e| Error::io(path, e))
}

pub fn read_labels(path: &Path) -> Result<Vec<usize>> {
    let bytes = std::fs::read(path).map_err(|e| Error::io(path, e))?;
    decode_labels(&bytes, path)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn p() -> &'static Path {
        Path::new("mem")
    }

    proptest! {
        #[test]
        fn epochs_round_trip(ne in 0usize..4, nc in 1usize..3, ns in 1usize..6, seed in any::<u32>()) {
            let arr: EpochArray = (0..ne)
                .map(|e| (0..nc).map(|c| (0..ns).map(|s| ((e * 31 + c * 7 + s) as u32 ^ seed) as f32 * 1e-3).collect()).collect())
                .collect();
            let bytes = encode_epochs(&arr).unwrap();
            let back = decode_epochs(&bytes, p()).unwrap();
            prop_assert_eq!(back, arr);
        }
    }

    #[test]
    fn header_layout() {
        let b = encode_epochs(&vec![vec![vec![1.5f32, -2.0]]]).unwrap();
        assert_eq!(&b[..4], b"EEGB");
        assert_eq!(&b[4..6], &[1, 0]);
        assert_eq!(&b[6..18], &[1, 0, 0, 0, 1, 0, 0, 0, 2, 0, 0, 0]);
        assert_eq!(&b[18..22], &1.5f32.to_le_bytes());
        assert_eq!(b.len(), 18 + 8 + 8);
    }

    #[test]
    fn corruption_is_detected() {
        let mut b = encode_epochs(&vec![vec![vec![1.0f32; 4]; 2]; 3]).unwrap();
        b[20] ^= 0x40;
        assert!(decode_epochs(&b, p()).unwrap_err().to_string().contains("checksum"));
        let mut b = encode_epochs(&vec![vec![vec![1.0f32; 4]]]).unwrap();
        b[4] = 2;
        assert!(decode_epochs(&b, p()).unwrap_err().to_string().contains("version"));
    }

    #[test]
    fn labels_round_trip_and_guard() {
        let l = vec![0, 2, 1, 1];
        assert_eq!(decode_labels(&encode_labels(&l), p()).unwrap(), l);
        let mut b = encode_labels(&l);
        b[4] = 7;
        assert!(decode_labels(&b, p()).is_err());
        let mut b = encode_labels(&l);
        b[10..14].copy_from_slice(&(-1i32).to_le_bytes());
        assert!(decode_labels(&b, p()).is_err());
    }
}
