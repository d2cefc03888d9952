//! Pipeline configuration file (TOML). Flags override file keys, which
//! override the defaults baked in here.

use std::collections::BTreeSet;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::{Architecture, ModelConfig, TrainConfig};
use crate::preprocess::{default_drop_tags, CharSets, CleanConfig, PosTag, StopPosLexicon};

#[derive(Debug, Clone, Default, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PipelineConfig {
    pub data: DataSection,
    pub preprocess: PreprocessSection,
    pub embedding: EmbeddingSection,
    pub split: SplitSection,
    pub model: ModelSection,
    pub train: TrainSection,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct DataSection {
    pub dataset: PathBuf,
    pub out_dir: PathBuf,
}

impl Default for DataSection {
    fn default() -> Self {
        DataSection {
            dataset: PathBuf::from("data/synthetic_corpus.csv"),
            out_dir: PathBuf::from("out"),
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PreprocessSection {
    pub numbers: bool,
    pub punctuation: bool,
    pub emoji: bool,
    pub pos: bool,
    pub drop_tags: Vec<String>,
    /// Lexicon file; the bundled lexicon is used when unset.
    pub lexicon: Option<PathBuf>,
    /// Drop rows that clean to the empty string.
    pub drop_empty: bool,
}

impl Default for PreprocessSection {
    fn default() -> Self {
        PreprocessSection {
            numbers: true,
            punctuation: true,
            emoji: true,
            pos: true,
            drop_tags: default_drop_tags().iter().map(|t| t.to_string()).collect(),
            lexicon: None,
            drop_empty: true,
        }
    }
}

impl PreprocessSection {
    pub fn to_clean_config(&self) -> Result<CleanConfig> {
        let drop_tags: BTreeSet<PosTag> = self
            .drop_tags
            .iter()
            .map(|s| s.parse().map_err(Error::Config))
            .collect::<Result<_>>()?;
        let lexicon = match &self.lexicon {
            Some(path) => StopPosLexicon::from_file(path)?,
            None => StopPosLexicon::bundled(),
        };
        Ok(CleanConfig {
            numbers: self.numbers,
            punctuation: self.punctuation,
            emoji: self.emoji,
            pos: self.pos,
            drop_tags,
            lexicon,
            charsets: CharSets::default(),
        })
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct EmbeddingSection {
    /// bangla-bert | bangla-bert-base | sahaj-bert | stub
    pub provider: String,
    /// Required for the stub provider; fixed by name for the others.
    pub dimension: Option<usize>,
    pub seed: u64,
    pub batch_size: usize,
    /// Out-of-process embedding command for the pretrained encoders.
    pub command: Option<String>,
}

impl Default for EmbeddingSection {
    fn default() -> Self {
        EmbeddingSection {
            provider: "stub".into(),
            dimension: None,
            seed: 42,
            batch_size: 32,
            command: None,
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SplitSection {
    pub ratio: f64,
    pub seed: u64,
    pub stratify: bool,
}

impl Default for SplitSection {
    fn default() -> Self {
        SplitSection {
            ratio: 0.8,
            seed: 42,
            stratify: true,
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ModelSection {
    pub hidden_units: usize,
    pub conv_filters: usize,
    pub pool_size: usize,
    /// Sequence view of the flat embedding; unset means one scalar per step.
    pub sequence_length: Option<usize>,
    pub kernel_sizes: [usize; 3],
}

impl Default for ModelSection {
    fn default() -> Self {
        ModelSection {
            hidden_units: 64,
            conv_filters: 64,
            pool_size: 2,
            sequence_length: None,
            kernel_sizes: [4, 6, 8],
        }
    }
}

impl ModelSection {
    pub fn to_model_config(&self, architecture: Architecture, input_dim: usize) -> ModelConfig {
        ModelConfig {
            architecture,
            input_dim,
            kernel_sizes: self.kernel_sizes,
            conv_filters: self.conv_filters,
            pool_size: self.pool_size,
            hidden_units: self.hidden_units,
            sequence_length: self.sequence_length.unwrap_or(input_dim),
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TrainSection {
    /// Unset means the per-architecture default (10, 10, 18).
    pub epochs: Option<usize>,
    pub batch_size: usize,
    pub learning_rate: f64,
    pub seed: u64,
}

impl Default for TrainSection {
    fn default() -> Self {
        TrainSection {
            epochs: None,
            batch_size: 10,
            learning_rate: 1e-4,
            seed: 42,
        }
    }
}

impl TrainSection {
    pub fn to_train_config(&self, architecture: Architecture) -> TrainConfig {
        TrainConfig {
            epochs: self.epochs.unwrap_or_else(|| architecture.default_epochs()),
            batch_size: self.batch_size,
            learning_rate: self.learning_rate,
            seed: self.seed,
            ..TrainConfig::default()
        }
    }
}

impl PipelineConfig {
    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let body = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        toml::from_str(&body).map_err(|e| Error::Config(format!("{}: {e}", path.display())))
    }
}
