//! Binary array persistence: little-endian f64 blobs with JSON headers,
//! plus SHA-256 helpers for artifact manifests.

use std::io::{Read, Write};
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::{Error, Result};

#[derive(Debug, Serialize, Deserialize)]
struct ArrayHeader {
    dtype: String,
    shape: Vec<usize>,
}

/// Write `name.bin` (f64 little-endian) and `name.json` (dtype + shape).
pub fn write_f64_array(dir: &Path, name: &str, data: &[f64], shape: &[usize]) -> Result<()> {
    if shape.iter().product::<usize>() != data.len() {
        return Err(Error::InvalidConfig {
            message: format!("shape {shape:?} does not match {} elements", data.len()),
        });
    }
    let bin_path = dir.join(format!("{name}.bin"));
    let mut file = std::io::BufWriter::new(
        std::fs::File::create(&bin_path).map_err(|e| Error::io(&bin_path, e))?,
    );
    for v in data {
        file.write_all(&v.to_le_bytes())
            .map_err(|e| Error::io(&bin_path, e))?;
    }
    file.flush().map_err(|e| Error::io(&bin_path, e))?;

    let header = ArrayHeader {
        dtype: "f64le".into(),
        shape: shape.to_vec(),
    };
    let header_path = dir.join(format!("{name}.json"));
    std::fs::write(&header_path, serde_json::to_string_pretty(&header)?)
        .map_err(|e| Error::io(&header_path, e))?;
    Ok(())
}

/// Read an array written by [`write_f64_array`]; returns (data, shape).
pub fn read_f64_array(dir: &Path, name: &str) -> Result<(Vec<f64>, Vec<usize>)> {
    let header_path = dir.join(format!("{name}.json"));
    let header: ArrayHeader = serde_json::from_str(
        &std::fs::read_to_string(&header_path).map_err(|e| Error::io(&header_path, e))?,
    )?;
    if header.dtype != "f64le" {
        return Err(Error::malformed(
            &header_path,
            format!("unsupported dtype {}", header.dtype),
        ));
    }
    let bin_path = dir.join(format!("{name}.bin"));
    let mut raw = Vec::new();
    std::fs::File::open(&bin_path)
        .map_err(|e| Error::io(&bin_path, e))?
        .read_to_end(&mut raw)
        .map_err(|e| Error::io(&bin_path, e))?;
    let expected = header.shape.iter().product::<usize>();
    if raw.len() != expected * 8 {
        return Err(Error::malformed(
            &bin_path,
            format!("expected {} bytes, found {}", expected * 8, raw.len()),
        ));
    }
    let data = raw
        .chunks_exact(8)
        .map(|c| f64::from_le_bytes(c.try_into().expect("chunk of 8")))
        .collect();
    Ok((data, header.shape))
}

const TENSOR_MAGIC: &[u8; 4] = b"ADTN";
const TENSOR_VERSION: u32 = 1;

/// Write named f64 tensors into a single container file.
pub fn write_tensors(path: &Path, tensors: &[(&str, &[f64], &[usize])]) -> Result<()> {
    let mut file = std::io::BufWriter::new(
        std::fs::File::create(path).map_err(|e| Error::io(path, e))?,
    );
    let io_err = |e| Error::io(path, e);
    file.write_all(TENSOR_MAGIC).map_err(io_err)?;
    file.write_all(&TENSOR_VERSION.to_le_bytes()).map_err(io_err)?;
    file.write_all(&(tensors.len() as u32).to_le_bytes())
        .map_err(io_err)?;
    for (name, data, shape) in tensors {
        if shape.iter().product::<usize>() != data.len() {
            return Err(Error::InvalidConfig {
                message: format!("tensor {name}: shape {shape:?} != {} elements", data.len()),
            });
        }
        let name_bytes = name.as_bytes();
        file.write_all(&(name_bytes.len() as u32).to_le_bytes())
            .map_err(io_err)?;
        file.write_all(name_bytes).map_err(io_err)?;
        file.write_all(&(shape.len() as u32).to_le_bytes())
            .map_err(io_err)?;
        for &d in *shape {
            file.write_all(&(d as u64).to_le_bytes()).map_err(io_err)?;
        }
        for v in *data {
            file.write_all(&v.to_le_bytes()).map_err(io_err)?;
        }
    }
    file.flush().map_err(io_err)
}

/// Read a container written by [`write_tensors`], preserving order.
pub fn read_tensors(path: &Path) -> Result<Vec<(String, Vec<f64>, Vec<usize>)>> {
    let mut raw = Vec::new();
    std::fs::File::open(path)
        .map_err(|e| Error::io(path, e))?
        .read_to_end(&mut raw)
        .map_err(|e| Error::io(path, e))?;
    let mut cursor = 0usize;
    let take = |cursor: &mut usize, n: usize| -> Result<&[u8]> {
        if *cursor + n > raw.len() {
            return Err(Error::malformed(path, "truncated tensor container"));
        }
        let out = &raw[*cursor..*cursor + n];
        *cursor += n;
        Ok(out)
    };
    if take(&mut cursor, 4)? != TENSOR_MAGIC {
        return Err(Error::malformed(path, "not a tensor container"));
    }
    let version = u32::from_le_bytes(take(&mut cursor, 4)?.try_into().expect("4 bytes"));
    if version > TENSOR_VERSION {
        return Err(Error::SchemaVersion {
            found: version,
            supported: TENSOR_VERSION,
        });
    }
    let count = u32::from_le_bytes(take(&mut cursor, 4)?.try_into().expect("4 bytes")) as usize;
    let mut tensors = Vec::with_capacity(count);
    for _ in 0..count {
        let name_len =
            u32::from_le_bytes(take(&mut cursor, 4)?.try_into().expect("4 bytes")) as usize;
        let name = String::from_utf8(take(&mut cursor, name_len)?.to_vec())
            .map_err(|e| Error::malformed(path, e.to_string()))?;
        let ndim = u32::from_le_bytes(take(&mut cursor, 4)?.try_into().expect("4 bytes")) as usize;
        let mut shape = Vec::with_capacity(ndim);
        for _ in 0..ndim {
            shape.push(
                u64::from_le_bytes(take(&mut cursor, 8)?.try_into().expect("8 bytes")) as usize,
            );
        }
        let len = shape.iter().product::<usize>();
        let data: Vec<f64> = take(&mut cursor, len * 8)?
            .chunks_exact(8)
            .map(|c| f64::from_le_bytes(c.try_into().expect("8 bytes")))
            .collect();
        tensors.push((name, data, shape));
    }
    Ok(tensors)
}

/// SHA-256 of a file's contents as a lowercase hex string.
pub fn sha256_file(path: &Path) -> Result<String> {
    let mut file = std::fs::File::open(path).map_err(|e| Error::io(path, e))?;
    let mut hasher = Sha256::new();
    std::io::copy(&mut file, &mut hasher).map_err(|e| Error::io(path, e))?;
    Ok(format!("{:x}", hasher.finalize()))
}

/// Checksum every regular file under `dir` (recursively), keyed by its
/// path relative to `dir`. Deterministic ordering.
pub fn checksum_tree(dir: &Path, skip: &[&str]) -> Result<Vec<(String, String)>> {
    let mut files = Vec::new();
    collect_files(dir, dir, &mut files)?;
    files.sort();
    let mut out = Vec::new();
    for rel in files {
        if skip.contains(&rel.as_str()) {
            continue;
        }
        let digest = sha256_file(&dir.join(&rel))?;
        out.push((rel, digest));
    }
    Ok(out)
}

fn collect_files(root: &Path, dir: &Path, out: &mut Vec<String>) -> Result<()> {
    for entry in std::fs::read_dir(dir).map_err(|e| Error::io(dir, e))? {
        let entry = entry.map_err(|e| Error::io(dir, e))?;
        let path = entry.path();
        if path.is_dir() {
            collect_files(root, &path, out)?;
        } else {
            let rel: PathBuf = path.strip_prefix(root).expect("under root").to_path_buf();
            out.push(rel.to_string_lossy().replace('\\', "/"));
        }
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn f64_array_round_trip_is_bit_exact() {
        let dir = tempfile::tempdir().unwrap();
        let data = vec![0.1, -2.5e-300, f64::MAX, 0.0, 1.0 / 3.0];
        write_f64_array(dir.path(), "w", &data, &[5]).unwrap();
        let (back, shape) = read_f64_array(dir.path(), "w").unwrap();
        assert_eq!(shape, vec![5]);
        for (a, b) in data.iter().zip(&back) {
            assert_eq!(a.to_bits(), b.to_bits());
        }
    }

    #[test]
    fn tensor_container_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("weights.bin");
        let a = vec![1.0, 2.0, 3.0, 4.0, 5.0, 6.0];
        let b = vec![-0.5];
        write_tensors(&path, &[("layer.w", &a, &[2, 3]), ("layer.b", &b, &[1])]).unwrap();
        let back = read_tensors(&path).unwrap();
        assert_eq!(back.len(), 2);
        assert_eq!(back[0], ("layer.w".to_string(), a, vec![2, 3]));
        assert_eq!(back[1].0, "layer.b");
    }

    #[test]
    fn tensor_container_rejects_newer_version() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("weights.bin");
        write_tensors(&path, &[("w", &[1.0], &[1])]).unwrap();
        let mut raw = std::fs::read(&path).unwrap();
        raw[4..8].copy_from_slice(&99u32.to_le_bytes());
        std::fs::write(&path, raw).unwrap();
        assert!(matches!(
            read_tensors(&path),
            Err(Error::SchemaVersion { found: 99, .. })
        ));
    }

    #[test]
    fn truncated_blob_is_detected() {
        let dir = tempfile::tempdir().unwrap();
        write_f64_array(dir.path(), "w", &[1.0, 2.0], &[2]).unwrap();
        let bin = dir.path().join("w.bin");
        let raw = std::fs::read(&bin).unwrap();
        std::fs::write(&bin, &raw[..8]).unwrap();
        assert!(read_f64_array(dir.path(), "w").is_err());
    }
}
