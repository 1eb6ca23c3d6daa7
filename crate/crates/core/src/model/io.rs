//! Versioned, checksummed model files.
//!
//! Layout: 8-byte magic, `u32` format version, `u32` header length, JSON
//! header, `u64` payload length, JSON payload, then the SHA-256 of every
//! preceding byte. All integers are little-endian.

use std::io::{Read, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use super::{Family, TrainedClassifier};
use crate::error::{Error, Result};

const MAGIC: &[u8; 8] = b"VFMODEL\0";
pub const FORMAT_VERSION: u32 = 1;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModelHeader {
    pub format_version: u32,
    pub family: Family,
    pub width: usize,
    pub layout_fingerprint: Option<String>,
    pub seed: u64,
}

fn encode(model: &TrainedClassifier, version: u32) -> Result<Vec<u8>> {
    let header = ModelHeader {
        format_version: version,
        family: model.family,
        width: model.width,
        layout_fingerprint: model.layout_fingerprint.clone(),
        seed: model.seed,
    };
    let header = serde_json::to_vec(&header)?;
    let payload = serde_json::to_vec(model)?;
    let mut buf = Vec::with_capacity(header.len() + payload.len() + 56);
    buf.extend_from_slice(MAGIC);
    buf.extend_from_slice(&version.to_le_bytes());
    buf.extend_from_slice(&(header.len() as u32).to_le_bytes());
    buf.extend_from_slice(&header);
    buf.extend_from_slice(&(payload.len() as u64).to_le_bytes());
    buf.extend_from_slice(&payload);
    let digest = Sha256::digest(&buf);
    buf.extend_from_slice(&digest);
    Ok(buf)
}

pub fn save<W: Write>(model: &TrainedClassifier, mut sink: W) -> Result<()> {
    sink.write_all(&encode(model, FORMAT_VERSION)?)?;
    sink.flush()?;
    Ok(())
}

pub fn save_to_path(model: &TrainedClassifier, path: &Path) -> Result<()> {
    save(model, std::io::BufWriter::new(std::fs::File::create(path)?))
}

fn take<'a>(buf: &'a [u8], at: &mut usize, n: usize) -> Result<&'a [u8]> {
    let end = at.checked_add(n).filter(|&e| e <= buf.len()).ok_or(Error::Checksum)?;
    let s = &buf[*at..end];
    *at = end;
    Ok(s)
}

pub fn load<R: Read>(mut source: R) -> Result<TrainedClassifier> {
    let mut buf = Vec::new();
    source.read_to_end(&mut buf)?;
    if buf.len() < MAGIC.len() + 32 || &buf[..MAGIC.len()] != MAGIC {
        return Err(Error::invalid("not a model file"));
    }
    let (body, digest) = buf.split_at(buf.len() - 32);
    if Sha256::digest(body).as_slice() != digest {
        return Err(Error::Checksum);
    }
    let mut at = MAGIC.len();
    let version = u32::from_le_bytes(take(body, &mut at, 4)?.try_into().expect("4 bytes"));
    if version != FORMAT_VERSION {
        return Err(Error::FormatVersion { found: version, expected: FORMAT_VERSION });
    }
    let header_len = u32::from_le_bytes(take(body, &mut at, 4)?.try_into().expect("4 bytes")) as usize;
    let header: ModelHeader = serde_json::from_slice(take(body, &mut at, header_len)?)?;
    let payload_len = u64::from_le_bytes(take(body, &mut at, 8)?.try_into().expect("8 bytes")) as usize;
    let model: TrainedClassifier = serde_json::from_slice(take(body, &mut at, payload_len)?)?;
    if header.family != model.family || header.width != model.width {
        return Err(Error::invalid("model header disagrees with payload"));
    }
    Ok(model)
}

pub fn load_from_path(path: &Path) -> Result<TrainedClassifier> {
    load(std::io::BufReader::new(std::fs::File::open(path)?))
}
