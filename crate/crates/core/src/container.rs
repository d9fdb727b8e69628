//! Versioned binary container shared by checkpoints and PosCE tables.
//!
//! Layout (all integers little-endian):
//!
//! ```text
//! magic      8 bytes
//! version    u32
//! header_len u64
//! header     header_len bytes of UTF-8 JSON (object)
//! payload    f64 values of every tensor, in header order
//! ```
//!
//! The header carries a `tensors` array of `{name, shape}` descriptors. Raw
//! IEEE-754 payloads make save/load round trips bit-exact.

use std::path::Path;

use serde::{Deserialize, Serialize};
use serde_json::Value;

use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq)]
pub struct Tensor {
    pub name: String,
    pub shape: Vec<usize>,
    pub data: Vec<f64>,
}

impl Tensor {
    pub fn new(name: &str, shape: Vec<usize>, data: Vec<f64>) -> Self {
        debug_assert_eq!(shape.iter().product::<usize>(), data.len());
        Tensor {
            name: name.to_owned(),
            shape,
            data,
        }
    }
}

#[derive(Serialize, Deserialize)]
struct TensorDesc {
    name: String,
    shape: Vec<usize>,
}

pub fn encode(magic: &[u8; 8], version: u32, header: Value, tensors: &[Tensor]) -> Result<Vec<u8>> {
    let Value::Object(mut map) = header else {
        return Err(Error::format("container header", "header must be a JSON object"));
    };
    let descs: Vec<TensorDesc> = tensors
        .iter()
        .map(|t| TensorDesc {
            name: t.name.clone(),
            shape: t.shape.clone(),
        })
        .collect();
    map.insert(
        "tensors".into(),
        serde_json::to_value(descs).expect("descriptors serialize"),
    );
    let header = serde_json::to_vec(&Value::Object(map)).expect("header serializes");

    let payload: usize = tensors.iter().map(|t| t.data.len() * 8).sum();
    let mut out = Vec::with_capacity(20 + header.len() + payload);
    out.extend_from_slice(magic);
    out.extend_from_slice(&version.to_le_bytes());
    out.extend_from_slice(&(header.len() as u64).to_le_bytes());
    out.extend_from_slice(&header);
    for t in tensors {
        for v in &t.data {
            out.extend_from_slice(&v.to_le_bytes());
        }
    }
    Ok(out)
}

pub struct Decoded {
    pub version: u32,
    pub header: Value,
    pub tensors: Vec<Tensor>,
}

impl Decoded {
    pub fn take(&mut self, name: &str) -> Result<Tensor> {
        let idx = self
            .tensors
            .iter()
            .position(|t| t.name == name)
            .ok_or_else(|| Error::format("container", format!("missing tensor `{name}`")))?;
        Ok(self.tensors.remove(idx))
    }

    pub fn field<T: serde::de::DeserializeOwned>(&self, key: &str) -> Result<T> {
        let v = self
            .header
            .get(key)
            .ok_or_else(|| Error::format("container header", format!("missing field `{key}`")))?;
        serde_json::from_value(v.clone()).map_err(|e| Error::format("container header", format!("field `{key}`: {e}")))
    }
}

pub fn decode(bytes: &[u8], magic: &[u8; 8], max_version: u32) -> Result<Decoded> {
    let mut cursor = Cursor { bytes, pos: 0 };
    if cursor.take(8)? != magic {
        return Err(Error::format("container", "bad magic bytes"));
    }
    let version = u32::from_le_bytes(cursor.take(4)?.try_into().unwrap());
    if version == 0 || version > max_version {
        return Err(Error::format(
            "container",
            format!("unsupported format version {version} (this build reads up to {max_version})"),
        ));
    }
    let header_len = u64::from_le_bytes(cursor.take(8)?.try_into().unwrap()) as usize;
    let mut header: Value = serde_json::from_slice(cursor.take(header_len)?)
        .map_err(|e| Error::format("container header", e.to_string()))?;
    let descs: Vec<TensorDesc> = header
        .as_object_mut()
        .and_then(|m| m.remove("tensors"))
        .map(serde_json::from_value)
        .transpose()
        .map_err(|e| Error::format("container header", e.to_string()))?
        .unwrap_or_default();

    let mut tensors = Vec::with_capacity(descs.len());
    for d in descs {
        let count: usize = d.shape.iter().product();
        let raw = cursor.take(count * 8)?;
        let data = raw
            .chunks_exact(8)
            .map(|c| f64::from_le_bytes(c.try_into().unwrap()))
            .collect();
        tensors.push(Tensor {
            name: d.name,
            shape: d.shape,
            data,
        });
    }
    if cursor.pos != bytes.len() {
        return Err(Error::format("container", "trailing bytes after payload"));
    }
    Ok(Decoded {
        version,
        header,
        tensors,
    })
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
            .ok_or_else(|| Error::format("container", "truncated file"))?;
        let s = &self.bytes[self.pos..end];
        self.pos = end;
        Ok(s)
    }
}

pub(crate) fn write_file(path: &Path, bytes: &[u8]) -> Result<()> {
    std::fs::write(path, bytes).map_err(|e| Error::io(path, e))
}

pub(crate) fn read_file(path: &Path) -> Result<Vec<u8>> {
    std::fs::read(path).map_err(|e| Error::io(path, e))
}
