//! Binary checkpoint format.
//!
//! ```text
//! "DSNN" | version u32 | count u32 |
//!   count × (name_len u32 | name utf-8 | rank u32 | rank × extent u32 | f32 values)
//! | adam_flag u8 | [step u64 | count × (m f32 values | v f32 values)]
//! ```
//! All integers and floats little-endian.

use super::{ParamStore, Real, Tensor};
use crate::{Error, Result};
use std::path::Path;

const MAGIC: &[u8; 4] = b"DSNN";
const VERSION: u32 = 1;

#[derive(Debug, Clone, PartialEq)]
pub struct CheckpointEntry {
    pub name: String,
    pub shape: Vec<usize>,
    pub values: Vec<f32>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct AdamState {
    pub step: u64,
    /// `(m, v)` per entry, same order.
    pub moments: Vec<(Vec<f32>, Vec<f32>)>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Checkpoint {
    pub entries: Vec<CheckpointEntry>,
    pub adam: Option<AdamState>,
}

fn to_f32<T: Real>(t: &Tensor<T>) -> Vec<f32> {
    t.data().iter().map(|v| v.as_f64() as f32).collect()
}

impl Checkpoint {
    pub fn from_store<T: Real>(store: &ParamStore<T>, with_adam: bool) -> Self {
        let entries = store
            .params
            .iter()
            .map(|p| CheckpointEntry {
                name: p.name.clone(),
                shape: p.value.shape().to_vec(),
                values: to_f32(&p.value),
            })
            .collect();
        let adam = with_adam.then(|| AdamState {
            step: store.step,
            moments: store.params.iter().map(|p| (to_f32(&p.m), to_f32(&p.v))).collect(),
        });
        Self { entries, adam }
    }

    /// Copies values (and Adam state, if present) into a store whose
    /// parameters have the same names and shapes.
    pub fn restore_into<T: Real>(&self, store: &mut ParamStore<T>) -> Result<()> {
        if self.entries.len() != store.len() {
            return Err(Error::Format(format!(
                "checkpoint has {} parameters, model has {}",
                self.entries.len(),
                store.len()
            )));
        }
        for e in &self.entries {
            let id = store.id(&e.name)?;
            if store.value(id).shape() != e.shape.as_slice() {
                return Err(Error::Format(format!(
                    "{}: checkpoint shape {:?}, model shape {:?}",
                    e.name,
                    e.shape,
                    store.value(id).shape()
                )));
            }
        }
        let conv = |v: &[f32]| v.iter().map(|&x| T::from_f64(f64::from(x))).collect::<Vec<_>>();
        for (i, e) in self.entries.iter().enumerate() {
            let id = store.id(&e.name)?;
            let p = &mut store.params[id.0];
            p.value = Tensor::from_vec(&e.shape, conv(&e.values))?;
            p.grad = None;
            if let Some(adam) = &self.adam {
                p.m = Tensor::from_vec(&e.shape, conv(&adam.moments[i].0))?;
                p.v = Tensor::from_vec(&e.shape, conv(&adam.moments[i].1))?;
            }
        }
        if let Some(adam) = &self.adam {
            store.step = adam.step;
        }
        Ok(())
    }

    pub fn to_bytes(&self) -> Vec<u8> {
        let mut out = Vec::new();
        out.extend_from_slice(MAGIC);
        out.extend_from_slice(&VERSION.to_le_bytes());
        out.extend_from_slice(&(self.entries.len() as u32).to_le_bytes());
        let put_f32 = |out: &mut Vec<u8>, vals: &[f32]| {
            for v in vals {
                out.extend_from_slice(&v.to_le_bytes());
            }
        };
        for e in &self.entries {
            out.extend_from_slice(&(e.name.len() as u32).to_le_bytes());
            out.extend_from_slice(e.name.as_bytes());
            out.extend_from_slice(&(e.shape.len() as u32).to_le_bytes());
            for &d in &e.shape {
                out.extend_from_slice(&(d as u32).to_le_bytes());
            }
            put_f32(&mut out, &e.values);
        }
        match &self.adam {
            None => out.push(0),
            Some(a) => {
                out.push(1);
                out.extend_from_slice(&a.step.to_le_bytes());
                for (m, v) in &a.moments {
                    put_f32(&mut out, m);
                    put_f32(&mut out, v);
                }
            }
        }
        out
    }

    pub fn from_bytes(bytes: &[u8]) -> Result<Self> {
        let mut r = Reader { bytes, pos: 0 };
        if r.take(4)? != MAGIC {
            return Err(Error::Format("checkpoint magic mismatch".into()));
        }
        let version = r.u32()?;
        if version != VERSION {
            return Err(Error::Format(format!("unsupported checkpoint version {version}")));
        }
        let count = r.u32()? as usize;
        let mut entries = Vec::with_capacity(count);
        for _ in 0..count {
            let len = r.u32()? as usize;
            let name = String::from_utf8(r.take(len)?.to_vec())
                .map_err(|_| Error::Format("parameter name is not utf-8".into()))?;
            let rank = r.u32()? as usize;
            let shape = (0..rank).map(|_| r.u32().map(|d| d as usize)).collect::<Result<Vec<_>>>()?;
            let values = r.f32s(shape.iter().product())?;
            entries.push(CheckpointEntry { name, shape, values });
        }
        let adam = match r.take(1)?[0] {
            0 => None,
            1 => {
                let step = u64::from_le_bytes(r.take(8)?.try_into().unwrap());
                let mut moments = Vec::with_capacity(count);
                for e in &entries {
                    let n = e.values.len();
                    moments.push((r.f32s(n)?, r.f32s(n)?));
                }
                Some(AdamState { step, moments })
            }
            f => return Err(Error::Format(format!("bad adam flag {f}"))),
        };
        if r.pos != bytes.len() {
            return Err(Error::Format("trailing bytes after checkpoint".into()));
        }
        Ok(Self { entries, adam })
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        std::fs::write(path, self.to_bytes()).map_err(|e| Error::io(path, e))
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let bytes = std::fs::read(path).map_err(|e| Error::io(path, e))?;
        Self::from_bytes(&bytes)
    }
}

struct Reader<'a> {
    bytes: &'a [u8],
    pos: usize,
}

impl<'a> Reader<'a> {
    fn take(&mut self, n: usize) -> Result<&'a [u8]> {
        let end = self.pos.checked_add(n).filter(|&e| e <= self.bytes.len());
        let end = end.ok_or_else(|| Error::Format("truncated checkpoint".into()))?;
        let s = &self.bytes[self.pos..end];
        self.pos = end;
        Ok(s)
    }

    fn u32(&mut self) -> Result<u32> {
        Ok(u32::from_le_bytes(self.take(4)?.try_into().unwrap()))
    }

    fn f32s(&mut self, n: usize) -> Result<Vec<f32>> {
        let raw = self.take(n.checked_mul(4).ok_or_else(|| Error::Format("overflow".into()))?)?;
        Ok(raw
            .chunks_exact(4)
            .map(|c| f32::from_le_bytes(c.try_into().unwrap()))
            .collect())
    }
}
