//! Flat parameter snapshots and their binary blob encoding.
//!
//! Blob layout (little-endian): `b"LPRM"`, `u16` version, `u32` tag byte
//! length, UTF-8 tag, `u64` value count, then `f64` values.

use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::{Error, Result};

const BLOB_MAGIC: &[u8; 4] = b"LPRM";
pub const BLOB_VERSION: u16 = 1;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LearnerParams {
    pub values: Vec<f64>,
    pub shape_tag: String,
}

impl LearnerParams {
    pub fn new(values: Vec<f64>, shape_tag: impl Into<String>) -> Result<Self> {
        if values.iter().any(|v| !v.is_finite()) {
            return Err(Error::invalid("non-finite parameter value"));
        }
        Ok(Self {
            values,
            shape_tag: shape_tag.into(),
        })
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn ensure_compatible(&self, other: &Self) -> Result<()> {
        if self.shape_tag != other.shape_tag || self.values.len() != other.values.len() {
            return Err(Error::shape(&self.shape_tag, &other.shape_tag));
        }
        Ok(())
    }

    pub fn to_bytes(&self) -> Vec<u8> {
        let tag = self.shape_tag.as_bytes();
        let mut out = Vec::with_capacity(18 + tag.len() + 8 * self.values.len());
        out.extend_from_slice(BLOB_MAGIC);
        out.extend_from_slice(&BLOB_VERSION.to_le_bytes());
        out.extend_from_slice(&(tag.len() as u32).to_le_bytes());
        out.extend_from_slice(tag);
        out.extend_from_slice(&(self.values.len() as u64).to_le_bytes());
        for v in &self.values {
            out.extend_from_slice(&v.to_le_bytes());
        }
        out
    }

    pub fn from_bytes(bytes: &[u8]) -> Result<Self> {
        let bad = |why: &str| Error::invalid(format!("parameter blob: {why}"));
        let mut cur = bytes;
        let mut take = |n: usize| -> Result<&[u8]> {
            if cur.len() < n {
                return Err(bad("truncated"));
            }
            let (head, tail) = cur.split_at(n);
            cur = tail;
            Ok(head)
        };
        if take(4)? != BLOB_MAGIC {
            return Err(bad("bad magic"));
        }
        let version = u16::from_le_bytes(take(2)?.try_into().unwrap());
        if version != BLOB_VERSION {
            return Err(bad(&format!("unsupported version {version}")));
        }
        let tag_len = u32::from_le_bytes(take(4)?.try_into().unwrap()) as usize;
        let tag = std::str::from_utf8(take(tag_len)?)
            .map_err(|_| bad("tag is not UTF-8"))?
            .to_owned();
        let count = u64::from_le_bytes(take(8)?.try_into().unwrap()) as usize;
        let raw = take(count.checked_mul(8).ok_or_else(|| bad("count overflow"))?)?;
        let values = raw
            .chunks_exact(8)
            .map(|c| f64::from_le_bytes(c.try_into().unwrap()))
            .collect();
        if !cur.is_empty() {
            return Err(bad("trailing bytes"));
        }
        Self::new(values, tag)
    }

    pub fn write_blob(&self, path: &Path) -> Result<()> {
        std::fs::write(path, self.to_bytes()).map_err(|e| Error::io(path, e))
    }

    pub fn read_blob(path: &Path) -> Result<Self> {
        let bytes = std::fs::read(path).map_err(|e| Error::io(path, e))?;
        Self::from_bytes(&bytes)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    proptest! {
        #[test]
        fn blob_round_trip(values in prop::collection::vec(-1e6f64..1e6, 0..64), tag in "[a-z0-9:=;]{0,24}") {
            let p = LearnerParams::new(values, tag).unwrap();
            prop_assert_eq!(LearnerParams::from_bytes(&p.to_bytes()).unwrap(), p);
        }
    }

    #[test]
    fn rejects_unknown_version_and_truncation() {
        let p = LearnerParams::new(vec![1.0, 2.0], "t").unwrap();
        let mut b = p.to_bytes();
        b[4] = 9;
        assert!(LearnerParams::from_bytes(&b).is_err());
        let b = p.to_bytes();
        assert!(LearnerParams::from_bytes(&b[..b.len() - 1]).is_err());
    }

    #[test]
    fn layout_is_fixed() {
        let p = LearnerParams::new(vec![1.0], "ab").unwrap();
        let b = p.to_bytes();
        assert_eq!(&b[..4], b"LPRM");
        assert_eq!(&b[4..6], &[1, 0]);
        assert_eq!(&b[6..10], &[2, 0, 0, 0]);
        assert_eq!(&b[10..12], b"ab");
        assert_eq!(&b[12..20], &[1, 0, 0, 0, 0, 0, 0, 0]);
        assert_eq!(&b[20..], &1.0f64.to_le_bytes());
    }
}
