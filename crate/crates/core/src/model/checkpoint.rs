//! Self-describing model checkpoints.
//!
//! A checkpoint is a JSON container holding a format version, the model
//! config, the full training history, and every parameter tensor. JSON
//! round-trips f64 exactly, so reloaded models predict identically.

use std::path::Path;

use serde::{Deserialize, Serialize};

use super::nets::NetKind;
use super::{Architecture, EpochStats, ModelConfig, TrainedModel};
use crate::error::{Error, Result};

pub const CHECKPOINT_FORMAT_VERSION: u32 = 1;

#[derive(Serialize, Deserialize)]
struct CheckpointFile {
    format_version: u32,
    config: ModelConfig,
    history: Vec<EpochStats>,
    net: NetKind,
}

pub fn save_checkpoint(model: &TrainedModel, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    let file = CheckpointFile {
        format_version: CHECKPOINT_FORMAT_VERSION,
        config: model.config.clone(),
        history: model.history.clone(),
        net: model.net.clone(),
    };
    let json = serde_json::to_vec(&file).map_err(|e| Error::Checkpoint(e.to_string()))?;
    std::fs::write(path, json).map_err(|e| Error::io(path, e))
}

pub fn load_checkpoint(path: impl AsRef<Path>) -> Result<TrainedModel> {
    let path = path.as_ref();
    let bytes = std::fs::read(path).map_err(|e| Error::io(path, e))?;
    let file: CheckpointFile = serde_json::from_slice(&bytes).map_err(|e| Error::Format {
        path: path.to_path_buf(),
        reason: format!("not a readable checkpoint: {e}"),
    })?;
    if file.format_version != CHECKPOINT_FORMAT_VERSION {
        return Err(Error::Checkpoint(format!(
            "format version {} unsupported (expected {CHECKPOINT_FORMAT_VERSION})",
            file.format_version
        )));
    }
    if file.net.architecture() != file.config.architecture {
        return Err(Error::Checkpoint(format!(
            "stored network is {} but config says {}",
            file.net.architecture(),
            file.config.architecture
        )));
    }
    file.config.validate()?;
    Ok(TrainedModel {
        config: file.config,
        history: file.history,
        net: file.net,
    })
}

/// Load and require a specific architecture.
pub fn load_checkpoint_expecting(
    path: impl AsRef<Path>,
    expected: Architecture,
) -> Result<TrainedModel> {
    let model = load_checkpoint(path)?;
    if model.config.architecture != expected {
        return Err(Error::Checkpoint(format!(
            "expected a {} checkpoint, found {}",
            expected, model.config.architecture
        )));
    }
    Ok(model)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::corpus::BinaryLabel;
    use crate::embedding::stub_embed;
    use crate::model::{build_model, train, ModelInput, SampleSet, TrainConfig};

    fn quick_model(architecture: Architecture) -> TrainedModel {
        let config = ModelConfig {
            architecture,
            input_dim: 24,
            kernel_sizes: [2, 3, 4],
            conv_filters: 3,
            pool_size: 2,
            hidden_units: 4,
            sequence_length: 12,
        };
        let vectors: Vec<_> = (0..8).map(|i| stub_embed(&format!("t{i}"), 24, 2)).collect();
        let labels: Vec<_> = (0..8)
            .map(|i| if i % 2 == 0 { BinaryLabel::Racism } else { BinaryLabel::NonRacism })
            .collect();
        let set = SampleSet::from_single(vectors, labels).unwrap();
        let tcfg = TrainConfig {
            epochs: 3,
            ..TrainConfig::default()
        };
        train(build_model(&config, 5).unwrap(), &set, &set, &tcfg).unwrap()
    }

    #[test]
    fn round_trip_preserves_predictions_config_and_history() {
        for arch in Architecture::ALL {
            let model = quick_model(arch);
            let f = tempfile::NamedTempFile::new().unwrap();
            save_checkpoint(&model, f.path()).unwrap();
            let loaded = load_checkpoint(f.path()).unwrap();
            assert_eq!(loaded.config, model.config);
            assert_eq!(loaded.history, model.history);
            for i in 0..10 {
                let v = stub_embed(&format!("probe {i}"), 24, 7);
                let a = model.predict(&ModelInput::Single(v.clone())).unwrap();
                let b = loaded.predict(&ModelInput::Single(v)).unwrap();
                assert!(
                    (a.probability - b.probability).abs() <= 1e-7,
                    "{arch}: {} vs {}",
                    a.probability,
                    b.probability
                );
                assert_eq!(a.label, b.label);
            }
        }
    }

    #[test]
    fn loading_the_wrong_architecture_is_a_checkpoint_error() {
        let model = quick_model(Architecture::BiRnn);
        let f = tempfile::NamedTempFile::new().unwrap();
        save_checkpoint(&model, f.path()).unwrap();
        match load_checkpoint_expecting(f.path(), Architecture::BiLstm) {
            Err(Error::Checkpoint(msg)) => assert!(msg.contains("bi-lstm")),
            other => panic!("expected checkpoint error, got {:?}", other.map(|_| ())),
        }
        assert!(load_checkpoint_expecting(f.path(), Architecture::BiRnn).is_ok());
    }

    #[test]
    fn garbage_bytes_are_a_format_error() {
        let f = tempfile::NamedTempFile::new().unwrap();
        std::fs::write(f.path(), b"not json at all").unwrap();
        assert!(matches!(load_checkpoint(f.path()), Err(Error::Format { .. })));
    }

    #[test]
    fn unsupported_version_is_a_checkpoint_error() {
        let model = quick_model(Architecture::BiRnn);
        let f = tempfile::NamedTempFile::new().unwrap();
        save_checkpoint(&model, f.path()).unwrap();
        let body = std::fs::read_to_string(f.path()).unwrap();
        let bumped = body.replacen("\"format_version\":1", "\"format_version\":9", 1);
        std::fs::write(f.path(), bumped).unwrap();
        assert!(matches!(load_checkpoint(f.path()), Err(Error::Checkpoint(_))));
    }
}
