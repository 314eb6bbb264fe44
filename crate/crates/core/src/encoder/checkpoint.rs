//! Checkpoint format: a plain-text metadata record plus an opaque parameter
//! blob. The pipeline crate maps these onto a directory; this module only
//! defines the content and its versioning.

use alloc::string::ToString;
use alloc::vec::Vec;

use serde::{Deserialize, Serialize};

use super::model::TinyArch;
use super::{ClassifierHandle, EncoderError, EncoderSpec, HyperParams};

/// Current checkpoint format version. Readers accept anything up to this.
pub const CHECKPOINT_VERSION: u32 = 1;

const MAGIC: &[u8; 8] = b"SARCCKPT";

/// Inspectable metadata stored next to the parameter blob.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct CheckpointMeta {
    pub version: u32,
    pub spec: EncoderSpec,
    pub hparams: HyperParams,
    pub arch: TinyArch,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub best_val_f1: Option<f64>,
    pub param_count: usize,
}

/// Parameter blob: magic, format version, count, then little-endian f64s.
pub fn encode_params(params: &[f64]) -> Vec<u8> {
    let mut bytes = Vec::with_capacity(MAGIC.len() + 4 + 8 + params.len() * 8);
    bytes.extend_from_slice(MAGIC);
    bytes.extend_from_slice(&CHECKPOINT_VERSION.to_le_bytes());
    bytes.extend_from_slice(&(params.len() as u64).to_le_bytes());
    for value in params {
        bytes.extend_from_slice(&value.to_le_bytes());
    }
    bytes
}

pub fn decode_params(bytes: &[u8]) -> Result<Vec<f64>, EncoderError> {
    let corrupt = |reason: &str| EncoderError::CheckpointCorrupt {
        reason: reason.to_string(),
    };
    if bytes.len() < MAGIC.len() + 4 + 8 {
        return Err(corrupt("blob shorter than its header"));
    }
    let (magic, rest) = bytes.split_at(MAGIC.len());
    if magic != MAGIC {
        return Err(corrupt("bad magic"));
    }
    let (version_bytes, rest) = rest.split_at(4);
    let version = u32::from_le_bytes(version_bytes.try_into().expect("4 bytes"));
    if version > CHECKPOINT_VERSION {
        return Err(EncoderError::CheckpointVersion {
            found: version,
            supported: CHECKPOINT_VERSION,
        });
    }
    let (count_bytes, data) = rest.split_at(8);
    let count = u64::from_le_bytes(count_bytes.try_into().expect("8 bytes")) as usize;
    if data.len() != count * 8 {
        return Err(corrupt("parameter data length does not match the declared count"));
    }
    let mut params = Vec::with_capacity(count);
    for chunk in data.chunks_exact(8) {
        params.push(f64::from_le_bytes(chunk.try_into().expect("8 bytes")));
    }
    Ok(params)
}

impl ClassifierHandle {
    /// Splits the handle into inspectable metadata and the parameter blob.
    pub fn to_checkpoint(&self) -> (CheckpointMeta, Vec<u8>) {
        let meta = CheckpointMeta {
            version: CHECKPOINT_VERSION,
            spec: self.spec.clone(),
            hparams: self.hparams.clone(),
            arch: self.arch,
            best_val_f1: self.best_val_f1,
            param_count: self.params.len(),
        };
        (meta, encode_params(&self.params))
    }

    /// Rebuilds a handle from checkpoint content, checking versions and
    /// parameter counts.
    pub fn from_checkpoint(meta: CheckpointMeta, blob: &[u8]) -> Result<ClassifierHandle, EncoderError> {
        if meta.version > CHECKPOINT_VERSION {
            return Err(EncoderError::CheckpointVersion {
                found: meta.version,
                supported: CHECKPOINT_VERSION,
            });
        }
        meta.arch.validate().map_err(|reason| EncoderError::CheckpointCorrupt {
            reason: reason.to_string(),
        })?;
        let params = decode_params(blob)?;
        let layout = super::model::Layout::new(meta.arch, meta.spec.num_classes);
        if params.len() != layout.total || params.len() != meta.param_count {
            return Err(EncoderError::CheckpointCorrupt {
                reason: alloc::format!(
                    "parameter count {} does not match architecture ({}) or metadata ({})",
                    params.len(),
                    layout.total,
                    meta.param_count
                ),
            });
        }
        Ok(ClassifierHandle {
            spec: meta.spec,
            hparams: meta.hparams,
            arch: meta.arch,
            params,
            best_val_f1: meta.best_val_f1,
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use alloc::vec;

    #[test]
    fn blob_round_trip_is_exact() {
        let params = vec![0.0, -1.5, 3.25e-7, f64::MIN_POSITIVE, 1e300];
        let bytes = encode_params(&params);
        assert_eq!(decode_params(&bytes).unwrap(), params);
    }

    #[test]
    fn truncated_blob_is_corrupt() {
        let bytes = encode_params(&[1.0, 2.0, 3.0]);
        let err = decode_params(&bytes[..bytes.len() - 5]).unwrap_err();
        assert!(matches!(err, EncoderError::CheckpointCorrupt { .. }));
        assert!(decode_params(&bytes[..4]).is_err());
    }

    #[test]
    fn newer_version_is_rejected_with_both_versions() {
        let mut bytes = encode_params(&[1.0]);
        bytes[8..12].copy_from_slice(&99u32.to_le_bytes());
        match decode_params(&bytes).unwrap_err() {
            EncoderError::CheckpointVersion { found, supported } => {
                assert_eq!(found, 99);
                assert_eq!(supported, CHECKPOINT_VERSION);
            }
            other => panic!("unexpected {other:?}"),
        }
    }
}
