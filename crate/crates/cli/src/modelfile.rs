//! Model files.
//!
//! Layout, all integers little-endian:
//!
//! ```text
//! magic      8 bytes  "SEQLABMF"
//! version    u32
//! header_len u64
//! header     JSON (tag set, hash bits, template version, provenance)
//! weights    f64 × (2^bits · L + L·L + 2L): encoder rows, transitions, start, stop
//! checksum   SHA-256 of everything above
//! ```

use std::path::Path;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use seqlab_core::crf::TransitionTable;
use seqlab_core::encoder::EncoderModel;
use seqlab_core::{CrfModel, TagSet};

use crate::error::IoError;

pub const MAGIC: &[u8; 8] = b"SEQLABMF";
pub const FORMAT_VERSION: u32 = 1;

const PREFIX: usize = 8 + 4 + 8;
const DIGEST: usize = 32;

/// Where a model came from.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Provenance {
    pub command: String,
    pub config_hash: String,
    pub seed: u64,
    pub stage: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
struct Header {
    tags: TagSet,
    hash_bits: u32,
    num_labels: usize,
    template_version: String,
    provenance: Provenance,
}

pub fn encode(model: &CrfModel, provenance: &Provenance) -> Vec<u8> {
    let header = Header {
        tags: model.tags.clone(),
        hash_bits: model.encoder.hash_bits(),
        num_labels: model.num_labels(),
        template_version: model.template_version().to_string(),
        provenance: provenance.clone(),
    };
    let header = serde_json::to_vec(&header).expect("model headers serialize to JSON");
    let tr = &model.transitions;
    let weights = model
        .encoder
        .weights()
        .iter()
        .chain(tr.trans_scores())
        .chain(tr.start())
        .chain(tr.stop());
    let mut out = Vec::with_capacity(PREFIX + header.len() + 8 * model.encoder.weights().len() + DIGEST);
    out.extend_from_slice(MAGIC);
    out.extend_from_slice(&FORMAT_VERSION.to_le_bytes());
    out.extend_from_slice(&(header.len() as u64).to_le_bytes());
    out.extend_from_slice(&header);
    for w in weights {
        out.extend_from_slice(&w.to_le_bytes());
    }
    let digest = Sha256::digest(&out);
    out.extend_from_slice(&digest);
    out
}

pub fn decode(bytes: &[u8], path: &Path) -> Result<(CrfModel, Provenance), IoError> {
    if bytes.len() < 12 || &bytes[..8] != MAGIC {
        return Err(IoError::model(path, "not a seqlab model file"));
    }
    let version = u32::from_le_bytes(bytes[8..12].try_into().expect("4 bytes"));
    if version != FORMAT_VERSION {
        return Err(IoError::Version {
            path: path.to_path_buf(),
            found: version,
            expected: FORMAT_VERSION,
        });
    }
    if bytes.len() < PREFIX + DIGEST {
        return Err(IoError::Checksum {
            path: path.to_path_buf(),
        });
    }
    let (body, digest) = bytes.split_at(bytes.len() - DIGEST);
    if Sha256::digest(body).as_slice() != digest {
        return Err(IoError::Checksum {
            path: path.to_path_buf(),
        });
    }
    let header_len = u64::from_le_bytes(body[12..20].try_into().expect("8 bytes")) as usize;
    let header_end = PREFIX
        .checked_add(header_len)
        .filter(|&e| e <= body.len())
        .ok_or_else(|| IoError::model(path, "header length exceeds file"))?;
    let header: Header = serde_json::from_slice(&body[PREFIX..header_end])
        .map_err(|e| IoError::model(path, format!("bad header: {e}")))?;
    if header.template_version != seqlab_core::encoder::TEMPLATE_VERSION {
        return Err(IoError::model(
            path,
            format!(
                "feature templates {:?} differ from this build's {:?}",
                header.template_version,
                seqlab_core::encoder::TEMPLATE_VERSION
            ),
        ));
    }
    let l = header.tags.num_labels();
    if l != header.num_labels || !(1..=26).contains(&header.hash_bits) {
        return Err(IoError::model(path, "inconsistent header"));
    }
    let enc_len = (1usize << header.hash_bits) * l;
    let total = enc_len + l * l + 2 * l;
    let raw = &body[header_end..];
    if raw.len() != 8 * total {
        return Err(IoError::model(
            path,
            format!("expected {total} weights, found {} bytes", raw.len()),
        ));
    }
    let mut w: Vec<f64> = raw
        .chunks_exact(8)
        .map(|c| f64::from_le_bytes(c.try_into().expect("8 bytes")))
        .collect();
    let stop = w.split_off(total - l);
    let start = w.split_off(total - 2 * l);
    let trans = w.split_off(enc_len);
    let bad = |e: seqlab_core::Error| IoError::model(path, e.to_string());
    let encoder = EncoderModel::from_weights(header.hash_bits, l, w).map_err(bad)?;
    let transitions = TransitionTable::for_tags(&header.tags)
        .with_scores(trans, start, stop)
        .map_err(bad)?;
    let model = CrfModel::from_parts(header.tags, encoder, transitions).map_err(bad)?;
    Ok((model, header.provenance))
}

pub fn save(path: &Path, model: &CrfModel, provenance: &Provenance) -> Result<(), IoError> {
    crate::fsio::write_atomic(path, &encode(model, provenance))
}

pub fn load(path: &Path) -> Result<(CrfModel, Provenance), IoError> {
    decode(&crate::fsio::read_bytes(path)?, path)
}
