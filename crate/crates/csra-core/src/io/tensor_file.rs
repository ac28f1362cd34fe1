//! Binary container for named tensors.
//!
//! Layout (all integers little-endian):
//!
//! ```text
//! magic   4 bytes   "CSRA" (0x43 0x53 0x52 0x41)
//! version u32       currently 1
//! count   u32       number of entries
//! entry   repeated:
//!   name length  u16, then that many UTF-8 bytes
//!   rank         u8 (1..=4)
//!   dims         rank x u32, each >= 1
//!   payload      product(dims) x f32, row-major
//! ```
//!
//! Payloads are stored as 32-bit floats and widened to f64 for computation,
//! so a write/read round trip is bitwise lossless for the stored payload.

use std::fs;
use std::path::Path;

use crate::error::{Error, Result};
use crate::tensor::Tensor;

pub const MAGIC: [u8; 4] = *b"CSRA";
pub const VERSION: u32 = 1;

/// Guards against absurd entry sizes from corrupt headers.
const MAX_ELEMENTS: u64 = 1 << 31;

/// One named tensor as stored on disk (32-bit payload).
#[derive(Debug, Clone, PartialEq)]
pub struct TensorEntry {
    name: String,
    dims: Vec<usize>,
    data: Vec<f32>,
}

impl TensorEntry {
    pub fn new(name: impl Into<String>, dims: Vec<usize>, data: Vec<f32>) -> Result<Self> {
        let name = name.into();
        if name.len() > u16::MAX as usize {
            return Err(Error::InvalidParameter {
                message: format!("entry name too long ({} bytes)", name.len()),
            });
        }
        if dims.is_empty() || dims.len() > 4 || dims.iter().any(|&d| d == 0) {
            return Err(Error::InvalidParameter {
                message: format!("entry dims must be rank 1..=4 with extents >= 1, got {dims:?}"),
            });
        }
        let expected: usize = dims.iter().product();
        if data.len() != expected {
            return Err(Error::ShapeMismatch {
                op: "TensorEntry::new",
                left: dims,
                right: vec![data.len()],
            });
        }
        Ok(Self { name, dims, data })
    }

    /// Narrows an f64 tensor to its 32-bit storage form.
    pub fn from_tensor(name: impl Into<String>, t: &Tensor) -> Result<Self> {
        Self::new(
            name,
            t.dims().to_vec(),
            t.data().iter().map(|&v| v as f32).collect(),
        )
    }

    /// Widens to an f64 [`Tensor`] (rejects non-finite payloads, which are
    /// legal on disk only for special entries such as temperatures).
    pub fn to_tensor(&self) -> Result<Tensor> {
        Tensor::new(self.dims.clone(), self.widened())
    }

    pub fn widened(&self) -> Vec<f64> {
        self.data.iter().map(|&v| v as f64).collect()
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn dims(&self) -> &[usize] {
        &self.dims
    }

    pub fn data(&self) -> &[f32] {
        &self.data
    }
}

/// Serializes entries to the container format.
pub fn encode(entries: &[TensorEntry]) -> Vec<u8> {
    let payload: usize = entries.iter().map(|e| e.data.len() * 4 + e.name.len() + 32).sum();
    let mut out = Vec::with_capacity(12 + payload);
    out.extend_from_slice(&MAGIC);
    out.extend_from_slice(&VERSION.to_le_bytes());
    out.extend_from_slice(&(entries.len() as u32).to_le_bytes());
    for entry in entries {
        out.extend_from_slice(&(entry.name.len() as u16).to_le_bytes());
        out.extend_from_slice(entry.name.as_bytes());
        out.push(entry.dims.len() as u8);
        for &d in &entry.dims {
            out.extend_from_slice(&(d as u32).to_le_bytes());
        }
        for &v in &entry.data {
            out.extend_from_slice(&v.to_le_bytes());
        }
    }
    out
}

struct Reader<'a> {
    buf: &'a [u8],
    pos: usize,
}

impl<'a> Reader<'a> {
    fn take(&mut self, n: usize, what: &str) -> Result<&'a [u8]> {
        if self.pos + n > self.buf.len() {
            return Err(Error::Format {
                offset: self.buf.len() as u64,
                message: format!(
                    "truncated file: {what} needs {n} bytes at offset {}, {} available",
                    self.pos,
                    self.buf.len() - self.pos
                ),
            });
        }
        let slice = &self.buf[self.pos..self.pos + n];
        self.pos += n;
        Ok(slice)
    }

    fn u16(&mut self, what: &str) -> Result<u16> {
        Ok(u16::from_le_bytes(self.take(2, what)?.try_into().unwrap()))
    }

    fn u32(&mut self, what: &str) -> Result<u32> {
        Ok(u32::from_le_bytes(self.take(4, what)?.try_into().unwrap()))
    }
}

/// Parses the container format, reporting the byte offset of any defect.
pub fn decode(bytes: &[u8]) -> Result<Vec<TensorEntry>> {
    let mut r = Reader { buf: bytes, pos: 0 };
    let magic = r.take(4, "magic")?;
    if magic != MAGIC {
        return Err(Error::Format {
            offset: 0,
            message: format!("bad magic {magic:02x?}, expected {MAGIC:02x?}"),
        });
    }
    let version = r.u32("version")?;
    if version != VERSION {
        return Err(Error::Format {
            offset: 4,
            message: format!("unsupported version {version}, expected {VERSION}"),
        });
    }
    let count = r.u32("entry count")?;
    let mut entries = Vec::with_capacity(count.min(1024) as usize);
    for i in 0..count {
        let name_len = r.u16("name length")? as usize;
        let name_offset = r.pos as u64;
        let name = std::str::from_utf8(r.take(name_len, "name")?)
            .map_err(|e| Error::Format {
                offset: name_offset,
                message: format!("entry {i} name is not UTF-8: {e}"),
            })?
            .to_string();
        let rank_offset = r.pos as u64;
        let rank = r.take(1, "rank")?[0] as usize;
        if !(1..=4).contains(&rank) {
            return Err(Error::Format {
                offset: rank_offset,
                message: format!("entry {name:?} has rank {rank}, expected 1..=4"),
            });
        }
        let dims_offset = r.pos as u64;
        let mut dims = Vec::with_capacity(rank);
        let mut elements: u64 = 1;
        for _ in 0..rank {
            let d = r.u32("dim")? as usize;
            if d == 0 {
                return Err(Error::Format {
                    offset: dims_offset,
                    message: format!("entry {name:?} has a zero extent"),
                });
            }
            elements = elements.saturating_mul(d as u64);
            dims.push(d);
        }
        if elements > MAX_ELEMENTS {
            return Err(Error::Format {
                offset: dims_offset,
                message: format!("entry {name:?} declares {elements} elements"),
            });
        }
        let payload = r.take(elements as usize * 4, "payload")?;
        let data: Vec<f32> = payload
            .chunks_exact(4)
            .map(|b| f32::from_le_bytes(b.try_into().unwrap()))
            .collect();
        entries.push(TensorEntry {
            name,
            dims,
            data,
        });
    }
    if r.pos != bytes.len() {
        return Err(Error::Format {
            offset: r.pos as u64,
            message: format!("{} trailing bytes after the last entry", bytes.len() - r.pos),
        });
    }
    Ok(entries)
}

pub fn write_tensor_file(path: impl AsRef<Path>, entries: &[TensorEntry]) -> Result<()> {
    fs::write(path, encode(entries))?;
    Ok(())
}

pub fn read_tensor_file(path: impl AsRef<Path>) -> Result<Vec<TensorEntry>> {
    decode(&fs::read(path)?)
}

/// First entry with the given name, if present.
pub fn find_entry<'a>(entries: &'a [TensorEntry], name: &str) -> Option<&'a TensorEntry> {
    entries.iter().find(|e| e.name() == name)
}
