//! Reader/writer for the tensor archive format used by weight
//! checkpoints: an 8-byte little-endian unsigned header length, a UTF-8
//! JSON header mapping tensor name to `{dtype, shape, data_offsets}`,
//! then the contiguous raw little-endian tensor payload.
//!
//! Only `F32` tensors are accepted; anything else is reported by name.

use std::collections::BTreeMap;
use std::io::{Read, Write};
use std::path::Path;

use serde::Deserialize;

use crate::error::{Error, Result};
use crate::linalg::Tensor;

#[derive(Deserialize)]
struct HeaderEntry {
    dtype: String,
    shape: Vec<usize>,
    data_offsets: [usize; 2],
}

/// Read every tensor in the archive, keyed by name.
pub fn read_archive(path: impl AsRef<Path>) -> Result<BTreeMap<String, Tensor>> {
    let path = path.as_ref();
    let mut file = std::fs::File::open(path)?;
    let mut raw = Vec::new();
    file.read_to_end(&mut raw)?;
    read_archive_bytes(&raw).map_err(|e| match e {
        Error::Load(msg) => Error::Load(format!("{}: {msg}", path.display())),
        other => other,
    })
}

/// Parse an archive already in memory.
pub fn read_archive_bytes(raw: &[u8]) -> Result<BTreeMap<String, Tensor>> {
    if raw.len() < 8 {
        return Err(Error::Load("corrupt header: file shorter than 8 bytes".into()));
    }
    let header_len = u64::from_le_bytes(raw[0..8].try_into().unwrap()) as usize;
    let body_start = 8 + header_len;
    if body_start > raw.len() {
        return Err(Error::Load(format!(
            "corrupt header: declared header length {header_len} exceeds file size {}",
            raw.len()
        )));
    }
    let header_json = std::str::from_utf8(&raw[8..body_start])
        .map_err(|e| Error::Load(format!("corrupt header: not UTF-8: {e}")))?;
    let header: BTreeMap<String, serde_json::Value> = serde_json::from_str(header_json)
        .map_err(|e| Error::Load(format!("corrupt header: invalid JSON: {e}")))?;

    let body = &raw[body_start..];
    let mut tensors = BTreeMap::new();
    for (name, value) in header {
        if name == "__metadata__" {
            continue;
        }
        let entry: HeaderEntry = serde_json::from_value(value)
            .map_err(|e| Error::Load(format!("bad header entry for tensor {name}: {e}")))?;
        if entry.dtype != "F32" {
            return Err(Error::Load(format!(
                "tensor {name} has dtype {} but only F32 is supported",
                entry.dtype
            )));
        }
        let [start, end] = entry.data_offsets;
        let count: usize = entry.shape.iter().product();
        if end < start || end > body.len() || end - start != count * 4 {
            return Err(Error::Load(format!(
                "tensor {name}: offsets {start}..{end} inconsistent with shape {:?}",
                entry.shape
            )));
        }
        let mut data = Vec::with_capacity(count);
        for chunk in body[start..end].chunks_exact(4) {
            data.push(f32::from_le_bytes(chunk.try_into().unwrap()));
        }
        tensors.insert(name, Tensor::new(entry.shape, data)?);
    }
    Ok(tensors)
}

/// Write tensors to an archive file. Entries are laid out in the order
/// given; names must be unique.
pub fn write_archive<'a, I>(path: impl AsRef<Path>, entries: I) -> Result<()>
where
    I: IntoIterator<Item = (&'a str, &'a Tensor)>,
{
    let mut header_parts = Vec::new();
    let mut payload: Vec<u8> = Vec::new();
    for (name, tensor) in entries {
        let start = payload.len();
        for v in tensor.data() {
            payload.extend_from_slice(&v.to_le_bytes());
        }
        let shape_json: Vec<String> = tensor.shape().iter().map(|d| d.to_string()).collect();
        header_parts.push(format!(
            "{}:{{\"dtype\":\"F32\",\"shape\":[{}],\"data_offsets\":[{},{}]}}",
            serde_json::to_string(name).unwrap(),
            shape_json.join(","),
            start,
            payload.len()
        ));
    }
    let header = format!("{{{}}}", header_parts.join(","));
    let mut file = std::fs::File::create(path)?;
    file.write_all(&(header.len() as u64).to_le_bytes())?;
    file.write_all(header.as_bytes())?;
    file.write_all(&payload)?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn round_trip() {
        let dir = std::env::temp_dir().join("matchprobe-archive-test");
        std::fs::create_dir_all(&dir).unwrap();
        let path = dir.join("roundtrip.safetensors");
        let a = Tensor::new(vec![2, 3], vec![1., 2., 3., 4., 5., 6.]).unwrap();
        let b = Tensor::new(vec![4], vec![-0.5, 0.0, 0.5, 1.0]).unwrap();
        write_archive(&path, [("alpha", &a), ("beta", &b)]).unwrap();
        let loaded = read_archive(&path).unwrap();
        assert_eq!(loaded.len(), 2);
        assert_eq!(loaded["alpha"], a);
        assert_eq!(loaded["beta"], b);
    }

    #[test]
    fn rejects_truncated_file() {
        assert!(matches!(
            read_archive_bytes(&[1, 2, 3]),
            Err(Error::Load(_))
        ));
    }

    #[test]
    fn rejects_oversized_header_length() {
        let mut raw = (1_000_000u64).to_le_bytes().to_vec();
        raw.extend_from_slice(b"{}");
        assert!(matches!(read_archive_bytes(&raw), Err(Error::Load(_))));
    }

    #[test]
    fn rejects_non_f32_naming_tensor() {
        let header = r#"{"w":{"dtype":"F16","shape":[1],"data_offsets":[0,2]}}"#;
        let mut raw = (header.len() as u64).to_le_bytes().to_vec();
        raw.extend_from_slice(header.as_bytes());
        raw.extend_from_slice(&[0, 0]);
        match read_archive_bytes(&raw) {
            Err(Error::Load(msg)) => assert!(msg.contains('w') && msg.contains("F16")),
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn rejects_offset_shape_mismatch() {
        let header = r#"{"w":{"dtype":"F32","shape":[2],"data_offsets":[0,4]}}"#;
        let mut raw = (header.len() as u64).to_le_bytes().to_vec();
        raw.extend_from_slice(header.as_bytes());
        raw.extend_from_slice(&[0, 0, 0, 0]);
        assert!(matches!(read_archive_bytes(&raw), Err(Error::Load(_))));
    }

    #[test]
    fn metadata_entry_is_ignored() {
        let header = r#"{"__metadata__":{"format":"pt"},"w":{"dtype":"F32","shape":[1],"data_offsets":[0,4]}}"#;
        let mut raw = (header.len() as u64).to_le_bytes().to_vec();
        raw.extend_from_slice(header.as_bytes());
        raw.extend_from_slice(&1.5f32.to_le_bytes());
        let tensors = read_archive_bytes(&raw).unwrap();
        assert_eq!(tensors.len(), 1);
        assert_eq!(tensors["w"].data(), &[1.5]);
    }
}
