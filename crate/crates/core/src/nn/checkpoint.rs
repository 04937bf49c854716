//! Binary checkpoint container: the magic `CVRK`, a little-endian `u32`
//! format version, a `u64`-length-prefixed UTF-8 JSON block, then a `u32`
//! count of named arrays. Each array is a `u32`-prefixed UTF-8 name, a
//! `u32` rank, `u64` dimensions and `f32` little-endian values.

use std::path::Path;

use serde::de::DeserializeOwned;
use serde::Serialize;
use serde_json::Value;

use super::tensor::{Parameters, Tensor};
use crate::error::{Error, Result};

pub const CHECKPOINT_MAGIC: &[u8; 4] = b"CVRK";
pub const CHECKPOINT_VERSION: u32 = 1;

#[derive(Clone, Debug, PartialEq)]
pub struct NamedArray {
    pub name: String,
    pub shape: Vec<usize>,
    pub data: Vec<f32>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct Checkpoint {
    pub meta: Value,
    pub arrays: Vec<NamedArray>,
}

impl Checkpoint {
    pub fn new(meta: &impl Serialize) -> Result<Self> {
        Ok(Self {
            meta: serde_json::to_value(meta)?,
            arrays: Vec::new(),
        })
    }

    pub fn meta<T: DeserializeOwned>(&self) -> Result<T> {
        Ok(serde_json::from_value(self.meta.clone())?)
    }

    pub fn push(&mut self, name: impl Into<String>, tensor: &Tensor) {
        self.arrays.push(NamedArray {
            name: name.into(),
            shape: tensor.shape().to_vec(),
            data: tensor.data().iter().map(|&x| x as f32).collect(),
        });
    }

    pub fn push_params(&mut self, prefix: &str, params: &impl Parameters) {
        for (name, t) in params.names().into_iter().zip(params.tensors()) {
            self.push(format!("{prefix}.{name}"), t);
        }
    }

    pub fn array(&self, name: &str) -> Result<&NamedArray> {
        self.arrays
            .iter()
            .find(|a| a.name == name)
            .ok_or_else(|| Error::Checkpoint(format!("missing array `{name}`")))
    }

    pub fn tensor(&self, name: &str) -> Result<Tensor> {
        let a = self.array(name)?;
        Tensor::from_vec(&a.shape, a.data.iter().map(|&x| x as f64).collect())
    }

    /// Fills every tensor of `params` from arrays named `prefix.<name>`; the
    /// stored shapes must match.
    pub fn load_params<P: Parameters>(&self, prefix: &str, params: &mut P) -> Result<()> {
        for (name, t) in params.names().into_iter().zip(params.tensors_mut()) {
            let full = format!("{prefix}.{name}");
            let loaded = self.tensor(&full)?;
            if loaded.shape() != t.shape() {
                return Err(Error::Checkpoint(format!(
                    "array `{full}` has shape {:?}, expected {:?}",
                    loaded.shape(),
                    t.shape()
                )));
            }
            *t = loaded;
        }
        Ok(())
    }

    pub fn to_bytes(&self) -> Result<Vec<u8>> {
        let meta = serde_json::to_vec(&self.meta)?;
        let mut out = Vec::new();
        out.extend_from_slice(CHECKPOINT_MAGIC);
        out.extend_from_slice(&CHECKPOINT_VERSION.to_le_bytes());
        out.extend_from_slice(&(meta.len() as u64).to_le_bytes());
        out.extend_from_slice(&meta);
        out.extend_from_slice(&(self.arrays.len() as u32).to_le_bytes());
        for a in &self.arrays {
            out.extend_from_slice(&(a.name.len() as u32).to_le_bytes());
            out.extend_from_slice(a.name.as_bytes());
            out.extend_from_slice(&(a.shape.len() as u32).to_le_bytes());
            for &d in &a.shape {
                out.extend_from_slice(&(d as u64).to_le_bytes());
            }
            for &x in &a.data {
                out.extend_from_slice(&x.to_le_bytes());
            }
        }
        Ok(out)
    }

    pub fn from_bytes(bytes: &[u8]) -> Result<Self> {
        let mut r = Reader { bytes, pos: 0 };
        if r.take(4, "magic").map_err(|_| Error::BadMagic)? != CHECKPOINT_MAGIC {
            return Err(Error::BadMagic);
        }
        let version = r.u32("version")?;
        if version != CHECKPOINT_VERSION {
            return Err(Error::UnsupportedVersion {
                found: version,
                supported: CHECKPOINT_VERSION,
            });
        }
        let meta_len = r.len_u64("metadata length")?;
        let meta = serde_json::from_slice(r.take(meta_len, "metadata")?)?;
        let n = r.u32("array count")?;
        let mut arrays = Vec::new();
        for _ in 0..n {
            let name_len = r.u32("array name length")? as usize;
            let name = String::from_utf8(r.take(name_len, "array name")?.to_vec())
                .map_err(|_| Error::Checkpoint("array name is not UTF-8".into()))?;
            let rank = r.u32("array rank")?;
            let mut shape = Vec::new();
            for _ in 0..rank {
                shape.push(r.len_u64("array dimension")?);
            }
            let count = shape
                .iter()
                .try_fold(1usize, |acc, &d| acc.checked_mul(d))
                .and_then(|c| c.checked_mul(4))
                .ok_or_else(|| Error::Checkpoint(format!("array `{name}` is too large")))?;
            let data = r
                .take(count, &name)?
                .chunks_exact(4)
                .map(|c| f32::from_le_bytes([c[0], c[1], c[2], c[3]]))
                .collect();
            arrays.push(NamedArray { name, shape, data });
        }
        if r.pos != bytes.len() {
            return Err(Error::Checkpoint(format!("{} trailing bytes", bytes.len() - r.pos)));
        }
        Ok(Self { meta, arrays })
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        std::fs::write(path, self.to_bytes()?).map_err(|e| Error::io(path, e))
    }

    pub fn load(path: &Path) -> Result<Self> {
        let bytes = std::fs::read(path).map_err(|e| Error::io(path, e))?;
        Self::from_bytes(&bytes)
    }
}

struct Reader<'a> {
    bytes: &'a [u8],
    pos: usize,
}

impl<'a> Reader<'a> {
    fn take(&mut self, n: usize, what: &str) -> Result<&'a [u8]> {
        let end = self.pos.checked_add(n).filter(|&e| e <= self.bytes.len());
        match end {
            Some(end) => {
                let s = &self.bytes[self.pos..end];
                self.pos = end;
                Ok(s)
            }
            None => Err(Error::Truncated(format!("while reading {what}"))),
        }
    }

    fn u32(&mut self, what: &str) -> Result<u32> {
        let b = self.take(4, what)?;
        Ok(u32::from_le_bytes([b[0], b[1], b[2], b[3]]))
    }

    fn len_u64(&mut self, what: &str) -> Result<usize> {
        let b = self.take(8, what)?;
        let v = u64::from_le_bytes(b.try_into().unwrap());
        usize::try_from(v).map_err(|_| Error::Checkpoint(format!("{what} overflows")))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use serde_json::json;

    fn sample() -> Checkpoint {
        let mut c = Checkpoint::new(&json!({"kind": "test", "sizes": [1, 2]})).unwrap();
        c.push("a", &Tensor::from_vec(&[2, 2], vec![1.0, -0.5, 0.25, 3.0]).unwrap());
        c.push("b", &Tensor::zeros(&[0]));
        c
    }

    #[test]
    fn round_trip() {
        let c = sample();
        assert_eq!(Checkpoint::from_bytes(&c.to_bytes().unwrap()).unwrap(), c);
    }

    #[test]
    fn distinct_errors() {
        let bytes = sample().to_bytes().unwrap();
        let mut bad = bytes.clone();
        bad[0] = b'X';
        assert!(matches!(Checkpoint::from_bytes(&bad), Err(Error::BadMagic)));
        assert!(matches!(Checkpoint::from_bytes(b"CV"), Err(Error::BadMagic)));
        let mut newer = bytes.clone();
        newer[4..8].copy_from_slice(&(CHECKPOINT_VERSION + 1).to_le_bytes());
        assert!(matches!(
            Checkpoint::from_bytes(&newer),
            Err(Error::UnsupportedVersion { found: 2, supported: 1 })
        ));
        for cut in [6, 20, bytes.len() - 1] {
            assert!(
                matches!(Checkpoint::from_bytes(&bytes[..cut]), Err(Error::Truncated(_))),
                "cut {cut}"
            );
        }
        let mut longer = bytes;
        longer.push(0);
        assert!(matches!(Checkpoint::from_bytes(&longer), Err(Error::Checkpoint(_))));
    }

    #[test]
    fn missing_array_and_shape_mismatch() {
        let c = sample();
        assert!(c.tensor("nope").is_err());
        let mut layer = crate::nn::Dense::zeros(3, 2);
        let mut c2 = Checkpoint::new(&json!({})).unwrap();
        c2.push("l.w", &Tensor::zeros(&[2, 2]));
        c2.push("l.b", &Tensor::zeros(&[2]));
        assert!(c2.load_params("l", &mut layer).is_err());
    }
}
