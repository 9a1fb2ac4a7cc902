//! Binary weights file and seeded initialization.
//!
//! # Layout
//!
//! ```text
//! magic  "SACW"  (4 bytes)
//! u32    version (= 1, little-endian)
//! u32    tensor count
//! per tensor:
//!   u16   name length, then that many UTF-8 bytes
//!   u8    rank
//!   u32   dims[rank]      little-endian
//!   f32   data            little-endian, row-major
//! ```
//!
//! Tensors are written in sorted name order, and initialization draws from a
//! single seeded stream in a fixed manifest order, so the same seed and
//! config always produce byte-identical files.

use crate::error::{Error, Result};
use crate::kernels::Tensor;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use std::collections::BTreeMap;
use std::io::{Read, Write};
use std::path::Path;

const MAGIC: &[u8; 4] = b"SACW";
const VERSION: u32 = 1;

/// Named tensors, ordered by name.
#[derive(Debug, Clone, Default)]
pub struct WeightMap {
    tensors: BTreeMap<String, Tensor>,
}

impl WeightMap {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn insert(&mut self, name: impl Into<String>, t: Tensor) {
        self.tensors.insert(name.into(), t);
    }

    pub fn len(&self) -> usize {
        self.tensors.len()
    }

    pub fn is_empty(&self) -> bool {
        self.tensors.is_empty()
    }

    pub fn names(&self) -> impl Iterator<Item = &str> {
        self.tensors.keys().map(|s| s.as_str())
    }

    /// Tensor by name; missing names are a weights error, not a panic.
    pub fn get(&self, name: &str) -> Result<&Tensor> {
        self.tensors
            .get(name)
            .ok_or_else(|| Error::Weights(format!("missing tensor '{name}'")))
    }

    /// Tensor by name with a shape check.
    pub fn get_shaped(&self, name: &str, shape: &[usize]) -> Result<&Tensor> {
        let t = self.get(name)?;
        if t.shape() != shape {
            return Err(Error::Weights(format!(
                "tensor '{name}': expected shape {:?}, file has {:?}",
                shape,
                t.shape()
            )));
        }
        Ok(t)
    }

    /// Rank-1 tensor by name, as a slice.
    pub fn get_vec(&self, name: &str, len: usize) -> Result<&[f32]> {
        Ok(self.get_shaped(name, &[len])?.data())
    }

    pub fn write_to(&self, mut w: impl Write) -> Result<()> {
        w.write_all(MAGIC)?;
        w.write_all(&VERSION.to_le_bytes())?;
        w.write_all(&(self.tensors.len() as u32).to_le_bytes())?;
        for (name, t) in &self.tensors {
            if name.len() > u16::MAX as usize {
                return Err(Error::Weights(format!("tensor name too long: {name}")));
            }
            w.write_all(&(name.len() as u16).to_le_bytes())?;
            w.write_all(name.as_bytes())?;
            if t.rank() > u8::MAX as usize {
                return Err(Error::Weights(format!("tensor rank too large: {name}")));
            }
            w.write_all(&[t.rank() as u8])?;
            for &d in t.shape() {
                w.write_all(&(d as u32).to_le_bytes())?;
            }
            for &v in t.data() {
                w.write_all(&v.to_le_bytes())?;
            }
        }
        Ok(())
    }

    pub fn read_from(mut r: impl Read) -> Result<Self> {
        let mut magic = [0u8; 4];
        r.read_exact(&mut magic)?;
        if &magic != MAGIC {
            return Err(Error::Weights(format!(
                "bad magic {:?}, not a weights file",
                magic
            )));
        }
        let version = read_u32(&mut r)?;
        if version != VERSION {
            return Err(Error::Weights(format!(
                "unsupported version {version}, expected {VERSION}"
            )));
        }
        let count = read_u32(&mut r)? as usize;
        let mut map = WeightMap::new();
        for _ in 0..count {
            let name_len = read_u16(&mut r)? as usize;
            let mut name_bytes = vec![0u8; name_len];
            r.read_exact(&mut name_bytes)?;
            let name = String::from_utf8(name_bytes)
                .map_err(|e| Error::Weights(format!("tensor name not UTF-8: {e}")))?;
            let mut rank = [0u8; 1];
            r.read_exact(&mut rank)?;
            let mut shape = Vec::with_capacity(rank[0] as usize);
            for _ in 0..rank[0] {
                shape.push(read_u32(&mut r)? as usize);
            }
            let n: usize = shape.iter().product();
            let mut data = Vec::with_capacity(n);
            let mut buf = [0u8; 4];
            for _ in 0..n {
                r.read_exact(&mut buf)?;
                data.push(f32::from_le_bytes(buf));
            }
            map.insert(name, Tensor::from_vec(&shape, data)?);
        }
        Ok(map)
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        let mut buf = Vec::new();
        self.write_to(&mut buf)?;
        std::fs::write(path, buf)?;
        Ok(())
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let bytes = std::fs::read(path)?;
        Self::read_from(bytes.as_slice())
    }
}

fn read_u32(r: &mut impl Read) -> Result<u32> {
    let mut b = [0u8; 4];
    r.read_exact(&mut b)?;
    Ok(u32::from_le_bytes(b))
}

fn read_u16(r: &mut impl Read) -> Result<u16> {
    let mut b = [0u8; 2];
    r.read_exact(&mut b)?;
    Ok(u16::from_le_bytes(b))
}

/// Draws tensors for a fixed manifest from one seeded stream.
///
/// Values are uniform in `[-1/sqrt(fan_in), +1/sqrt(fan_in)]`; the caller
/// states the fan-in of each tensor explicitly so the bound does not depend
/// on guessing which axis feeds the op.
pub struct Initializer {
    rng: ChaCha8Rng,
}

impl Initializer {
    pub fn new(seed: u64) -> Self {
        Initializer {
            rng: ChaCha8Rng::seed_from_u64(seed),
        }
    }

    pub fn tensor(&mut self, shape: &[usize], fan_in: usize) -> Tensor {
        let bound = 1.0 / (fan_in.max(1) as f32).sqrt();
        let n: usize = shape.iter().product();
        let data = (0..n).map(|_| self.rng.gen_range(-bound..=bound)).collect();
        Tensor::from_vec(shape, data).expect("shape/product always consistent")
    }
}

/// One entry of a model's weight manifest.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TensorSpec {
    pub name: String,
    pub shape: Vec<usize>,
    pub fan_in: usize,
}

impl TensorSpec {
    pub fn new(name: impl Into<String>, shape: &[usize], fan_in: usize) -> Self {
        TensorSpec {
            name: name.into(),
            shape: shape.to_vec(),
            fan_in,
        }
    }
}

impl WeightMap {
    /// Draw every manifest entry, in manifest order, from one seeded stream.
    /// Same specs + same seed always yields byte-identical maps.
    pub fn generate(specs: &[TensorSpec], seed: u64) -> WeightMap {
        let mut init = Initializer::new(seed);
        let mut map = WeightMap::new();
        for spec in specs {
            map.insert(&spec.name, init.tensor(&spec.shape, spec.fan_in));
        }
        map
    }
}
