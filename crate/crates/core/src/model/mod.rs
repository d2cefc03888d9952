//! Classifier heads over sentence embeddings: configuration, training,
//! prediction, and checkpointing.

mod adam;
mod checkpoint;
mod layers;
pub(crate) mod nets;

pub use checkpoint::{load_checkpoint, load_checkpoint_expecting, save_checkpoint};

use std::fmt;
use std::str::FromStr;

use ndarray::Array2;
use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::corpus::BinaryLabel;
use crate::embedding::EmbeddingVector;
use crate::error::{Error, Result};
use adam::Adam;
use nets::{BiLstm, BiRnn, McnnLstm, NetInput, NetKind};

/// The three classifier heads.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Architecture {
    BiRnn,
    BiLstm,
    McnnLstm,
}

impl Architecture {
    pub const ALL: [Architecture; 3] =
        [Architecture::BiRnn, Architecture::BiLstm, Architecture::McnnLstm];

    pub fn as_str(&self) -> &'static str {
        match self {
            Architecture::BiRnn => "bi-rnn",
            Architecture::BiLstm => "bi-lstm",
            Architecture::McnnLstm => "mcnn-lstm",
        }
    }

    /// Name used in report tables.
    pub fn display_name(&self) -> &'static str {
        match self {
            Architecture::BiRnn => "Bi-RNN",
            Architecture::BiLstm => "Bi-LSTM",
            Architecture::McnnLstm => "MCNN-LSTM",
        }
    }

    /// Default epoch budget: 10 for the recurrent heads, 18 for MCNN-LSTM.
    pub fn default_epochs(&self) -> usize {
        match self {
            Architecture::McnnLstm => 18,
            _ => 10,
        }
    }
}

impl FromStr for Architecture {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, String> {
        match s.trim().to_lowercase().replace('_', "-").as_str() {
            "bi-rnn" | "birnn" => Ok(Architecture::BiRnn),
            "bi-lstm" | "bilstm" => Ok(Architecture::BiLstm),
            "mcnn-lstm" | "mcnnlstm" => Ok(Architecture::McnnLstm),
            other => Err(format!("unknown model '{other}' (expected bi-rnn|bi-lstm|mcnn-lstm)")),
        }
    }
}

impl fmt::Display for Architecture {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

/// Architecture plus the shape knobs.
///
/// The flat embedding is viewed as a sequence of `sequence_length` steps of
/// width `input_dim / sequence_length`; the default view is one scalar per
/// step.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ModelConfig {
    pub architecture: Architecture,
    pub input_dim: usize,
    /// Per-channel convolution kernel sizes (MCNN-LSTM only).
    pub kernel_sizes: [usize; 3],
    pub conv_filters: usize,
    pub pool_size: usize,
    pub hidden_units: usize,
    pub sequence_length: usize,
}

impl ModelConfig {
    pub fn new(architecture: Architecture, input_dim: usize) -> Self {
        ModelConfig {
            architecture,
            input_dim,
            kernel_sizes: [4, 6, 8],
            conv_filters: 64,
            pool_size: 2,
            hidden_units: 64,
            sequence_length: input_dim,
        }
    }

    pub fn feature_width(&self) -> usize {
        self.input_dim / self.sequence_length
    }

    pub fn validate(&self) -> Result<()> {
        if self.input_dim == 0 {
            return Err(Error::Config("input_dim must be >= 1".into()));
        }
        if self.sequence_length == 0 || self.input_dim % self.sequence_length != 0 {
            return Err(Error::Config(format!(
                "sequence_length {} does not divide input_dim {}",
                self.sequence_length, self.input_dim
            )));
        }
        if self.hidden_units == 0 {
            return Err(Error::Config("hidden_units must be >= 1".into()));
        }
        if self.architecture == Architecture::McnnLstm {
            if self.conv_filters == 0 || self.pool_size == 0 {
                return Err(Error::Config("conv_filters and pool_size must be >= 1".into()));
            }
            for k in self.kernel_sizes {
                if k == 0 || k >= self.sequence_length {
                    return Err(Error::Config(format!(
                        "kernel size {k} must be in [1, sequence_length {})",
                        self.sequence_length
                    )));
                }
                if (self.sequence_length - k + 1) < self.pool_size {
                    return Err(Error::Config(format!(
                        "kernel {k} with pool {} leaves an empty pooled sequence",
                        self.pool_size
                    )));
                }
            }
        }
        Ok(())
    }
}

/// Optimization knobs. Defaults follow the fine-tuned settings: batch 10,
/// learning rate 1e-4, adaptive-moment optimizer, binary cross-entropy.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrainConfig {
    pub epochs: usize,
    pub batch_size: usize,
    pub learning_rate: f64,
    pub optimizer: String,
    pub loss: String,
    pub seed: u64,
}

impl Default for TrainConfig {
    fn default() -> Self {
        TrainConfig {
            epochs: 10,
            batch_size: 10,
            learning_rate: 1e-4,
            optimizer: "adam".into(),
            loss: "binary-cross-entropy".into(),
            seed: 42,
        }
    }
}

impl TrainConfig {
    pub fn for_architecture(architecture: Architecture) -> Self {
        TrainConfig {
            epochs: architecture.default_epochs(),
            ..TrainConfig::default()
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.epochs == 0 {
            return Err(Error::Config("epochs must be >= 1".into()));
        }
        if self.batch_size == 0 {
            return Err(Error::Config("batch_size must be >= 1".into()));
        }
        if !(self.learning_rate > 0.0 && self.learning_rate.is_finite()) {
            return Err(Error::Config("learning_rate must be positive".into()));
        }
        if self.optimizer != "adam" {
            return Err(Error::Config(format!(
                "unsupported optimizer '{}' (only 'adam')",
                self.optimizer
            )));
        }
        Ok(())
    }
}

/// View a flat embedding as a (sequence_length x feature_width) matrix.
/// Concatenating the rows in order reproduces the vector exactly.
pub fn reshape_embedding(v: &EmbeddingVector, config: &ModelConfig) -> Result<Array2<f64>> {
    config.validate()?;
    if v.dimension() != config.input_dim {
        return Err(Error::Config(format!(
            "embedding dimension {} does not match model input_dim {}",
            v.dimension(),
            config.input_dim
        )));
    }
    let values: Vec<f64> = v.values.iter().map(|x| f64::from(*x)).collect();
    Array2::from_shape_vec((config.sequence_length, config.feature_width()), values)
        .map_err(|e| Error::Config(e.to_string()))
}

/// Per-sample model input: one embedding, or three for the multi-channel
/// per-provider mode (all of the model's input dimension).
#[derive(Debug, Clone)]
pub enum ModelInput {
    Single(EmbeddingVector),
    Triple(Box<[EmbeddingVector; 3]>),
}

impl ModelInput {
    fn to_net_input(&self, config: &ModelConfig) -> Result<NetInput> {
        match self {
            ModelInput::Single(v) => Ok(NetInput::Single(reshape_embedding(v, config)?)),
            ModelInput::Triple(t) => {
                let views = [
                    reshape_embedding(&t[0], config)?,
                    reshape_embedding(&t[1], config)?,
                    reshape_embedding(&t[2], config)?,
                ];
                Ok(NetInput::Triple(Box::new(views)))
            }
        }
    }
}

/// Inputs paired with binary labels.
#[derive(Debug, Clone, Default)]
pub struct SampleSet {
    pub inputs: Vec<ModelInput>,
    pub labels: Vec<BinaryLabel>,
}

impl SampleSet {
    pub fn from_single(vectors: Vec<EmbeddingVector>, labels: Vec<BinaryLabel>) -> Result<Self> {
        if vectors.len() != labels.len() {
            return Err(Error::Input(format!(
                "{} embeddings vs {} labels",
                vectors.len(),
                labels.len()
            )));
        }
        Ok(SampleSet {
            inputs: vectors.into_iter().map(ModelInput::Single).collect(),
            labels,
        })
    }

    /// Zip three per-provider embedding lists into triple inputs.
    pub fn from_triple(
        a: Vec<EmbeddingVector>,
        b: Vec<EmbeddingVector>,
        c: Vec<EmbeddingVector>,
        labels: Vec<BinaryLabel>,
    ) -> Result<Self> {
        if a.len() != labels.len() || b.len() != labels.len() || c.len() != labels.len() {
            return Err(Error::Input("triple embedding lists must align with labels".into()));
        }
        let inputs = a
            .into_iter()
            .zip(b)
            .zip(c)
            .map(|((x, y), z)| ModelInput::Triple(Box::new([x, y, z])))
            .collect();
        Ok(SampleSet { inputs, labels })
    }

    pub fn len(&self) -> usize {
        self.inputs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.inputs.is_empty()
    }
}

/// One row of the training history.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EpochStats {
    pub epoch: usize,
    pub train_loss: f64,
    pub train_acc: f64,
    pub val_loss: f64,
    pub val_acc: f64,
}

/// A built, untrained network.
#[derive(Debug, Clone)]
pub struct Model {
    pub config: ModelConfig,
    net: NetKind,
}

/// Construct a network per the config, with seeded fan-in initialization.
pub fn build_model(config: &ModelConfig, seed: u64) -> Result<Model> {
    config.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let width = config.feature_width();
    let net = match config.architecture {
        Architecture::BiRnn => NetKind::BiRnn(BiRnn::new(config.hidden_units, width, &mut rng)),
        Architecture::BiLstm => NetKind::BiLstm(BiLstm::new(config.hidden_units, width, &mut rng)),
        Architecture::McnnLstm => NetKind::McnnLstm(McnnLstm::new(
            config.kernel_sizes,
            config.conv_filters,
            config.pool_size,
            config.hidden_units,
            width,
            &mut rng,
        )),
    };
    Ok(Model {
        config: config.clone(),
        net,
    })
}

impl Model {
    /// Probability of class 1 for one input, before any training.
    pub fn predict_untrained(&self, input: &ModelInput) -> Result<Prediction> {
        let x = input.to_net_input(&self.config)?;
        Ok(Prediction::from_probability(sigmoid(self.net.infer(&x)?)))
    }

    pub fn param_count(&self) -> usize {
        self.net.param_count()
    }
}

/// A classifier with learned parameters and its training history.
#[derive(Debug, Clone)]
pub struct TrainedModel {
    pub config: ModelConfig,
    pub history: Vec<EpochStats>,
    pub(crate) net: NetKind,
}

/// Probability of class 1 plus the thresholded label (>= 0.5 is racism).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Prediction {
    pub probability: f64,
    pub label: BinaryLabel,
}

impl Prediction {
    pub fn from_probability(probability: f64) -> Self {
        let label = if probability >= 0.5 {
            BinaryLabel::Racism
        } else {
            BinaryLabel::NonRacism
        };
        Prediction { probability, label }
    }
}

pub(crate) fn sigmoid(z: f64) -> f64 {
    if z >= 0.0 {
        1.0 / (1.0 + (-z).exp())
    } else {
        let e = z.exp();
        e / (1.0 + e)
    }
}

/// Numerically stable binary cross-entropy from the logit.
fn bce_from_logit(z: f64, y: f64) -> f64 {
    z.max(0.0) - z * y + (1.0 + (-z.abs()).exp()).ln()
}

fn eval_pass(net: &NetKind, inputs: &[NetInput], labels: &[BinaryLabel]) -> Result<(f64, f64)> {
    let mut loss = 0.0;
    let mut correct = 0usize;
    for (x, label) in inputs.iter().zip(labels) {
        let z = net.infer(x)?;
        let y = label.target();
        loss += bce_from_logit(z, y);
        if (z >= 0.0) == (*label == BinaryLabel::Racism) {
            correct += 1;
        }
    }
    let n = inputs.len() as f64;
    Ok((loss / n, correct as f64 / n))
}

/// Mini-batch gradient descent with the adaptive-moment optimizer.
///
/// Deterministic for a fixed seed: weight init, epoch shuffles, and update
/// order all draw from one seeded stream, and all math is single-threaded.
pub fn train(
    model: Model,
    train_set: &SampleSet,
    val_set: &SampleSet,
    tcfg: &TrainConfig,
) -> Result<TrainedModel> {
    tcfg.validate()?;
    if train_set.is_empty() {
        return Err(Error::Input("training set is empty".into()));
    }
    if val_set.is_empty() {
        return Err(Error::Input("validation set is empty".into()));
    }

    let Model { config, mut net } = model;
    let train_inputs: Vec<NetInput> = train_set
        .inputs
        .iter()
        .map(|i| i.to_net_input(&config))
        .collect::<Result<_>>()?;
    let val_inputs: Vec<NetInput> = val_set
        .inputs
        .iter()
        .map(|i| i.to_net_input(&config))
        .collect::<Result<_>>()?;

    let mut rng = ChaCha8Rng::seed_from_u64(tcfg.seed);
    let mut adam = Adam::new(tcfg.learning_rate, net.param_count());
    let mut history = Vec::with_capacity(tcfg.epochs);

    let n = train_inputs.len();
    let mut order: Vec<usize> = (0..n).collect();
    for epoch in 1..=tcfg.epochs {
        order.shuffle(&mut rng);
        let mut epoch_loss = 0.0;
        let mut correct = 0usize;
        for batch in order.chunks(tcfg.batch_size) {
            net.zero_grads();
            let scale = 1.0 / batch.len() as f64;
            let mut batch_loss = 0.0;
            for &i in batch {
                let z = net.forward_train(&train_inputs[i])?;
                let y = train_set.labels[i].target();
                batch_loss += bce_from_logit(z, y);
                if (z >= 0.0) == (train_set.labels[i] == BinaryLabel::Racism) {
                    correct += 1;
                }
                net.backward((sigmoid(z) - y) * scale);
            }
            if !batch_loss.is_finite() {
                return Err(Error::Divergence { epoch });
            }
            epoch_loss += batch_loss;
            adam.step(&mut net);
        }
        let (val_loss, val_acc) = eval_pass(&net, &val_inputs, &val_set.labels)?;
        if !val_loss.is_finite() {
            return Err(Error::Divergence { epoch });
        }
        history.push(EpochStats {
            epoch,
            train_loss: epoch_loss / n as f64,
            train_acc: correct as f64 / n as f64,
            val_loss,
            val_acc,
        });
    }

    net.zero_grads();
    Ok(TrainedModel {
        config,
        history,
        net,
    })
}

impl TrainedModel {
    /// Probability and thresholded label for one input.
    pub fn predict(&self, input: &ModelInput) -> Result<Prediction> {
        let x = input.to_net_input(&self.config)?;
        Ok(Prediction::from_probability(sigmoid(self.net.infer(&x)?)))
    }

    /// Convenience wrapper for the common single-embedding case.
    pub fn predict_vector(&self, v: &EmbeddingVector) -> Result<Prediction> {
        self.predict(&ModelInput::Single(v.clone()))
    }

    /// Elementwise batch prediction, order-preserving.
    pub fn predict_batch(&self, inputs: &[ModelInput]) -> Result<Vec<Prediction>> {
        inputs.iter().map(|i| self.predict(i)).collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::embedding::stub_embed;

    fn vector(dim: usize, seed: u64, text: &str) -> EmbeddingVector {
        stub_embed(text, dim, seed)
    }

    fn tiny_config(architecture: Architecture) -> ModelConfig {
        ModelConfig {
            architecture,
            input_dim: 24,
            kernel_sizes: [2, 3, 4],
            conv_filters: 3,
            pool_size: 2,
            hidden_units: 4,
            sequence_length: 12,
        }
    }

    fn separable_set(n: usize, dim: usize) -> SampleSet {
        // Keyword-separable bag-of-words stubs.
        let mut vectors = Vec::new();
        let mut labels = Vec::new();
        for i in 0..n {
            if i % 2 == 0 {
                vectors.push(stub_embed(&format!("bad awful slur{}", i % 4), dim, 1));
                labels.push(BinaryLabel::Racism);
            } else {
                vectors.push(stub_embed(&format!("kind gentle word{}", i % 4), dim, 1));
                labels.push(BinaryLabel::NonRacism);
            }
        }
        SampleSet::from_single(vectors, labels).unwrap()
    }

    #[test]
    fn reshape_default_view_is_one_scalar_per_step() {
        let config = ModelConfig::new(Architecture::BiRnn, 768);
        let v = vector(768, 0, "x");
        let m = reshape_embedding(&v, &config).unwrap();
        assert_eq!(m.dim(), (768, 1));
    }

    #[test]
    fn reshape_rejects_non_divisor_sequence_length() {
        let mut config = ModelConfig::new(Architecture::BiRnn, 768);
        config.sequence_length = 7;
        let v = vector(768, 0, "x");
        assert!(matches!(reshape_embedding(&v, &config), Err(Error::Config(_))));
    }

    #[test]
    fn reshape_matches_hand_layout_and_flattens_back() {
        let mut config = ModelConfig::new(Architecture::BiRnn, 8);
        config.sequence_length = 4;
        let v = EmbeddingVector {
            values: (1..=8).map(|x| x as f32).collect(),
            source_hash: 0,
        };
        let m = reshape_embedding(&v, &config).unwrap();
        assert_eq!(m.row(0).to_vec(), vec![1.0, 2.0]);
        assert_eq!(m.row(1).to_vec(), vec![3.0, 4.0]);
        assert_eq!(m.row(2).to_vec(), vec![5.0, 6.0]);
        assert_eq!(m.row(3).to_vec(), vec![7.0, 8.0]);
        let flat: Vec<f64> = m.iter().copied().collect();
        assert_eq!(flat, (1..=8).map(f64::from).collect::<Vec<_>>());
    }

    #[test]
    fn reshape_rejects_wrong_vector_length() {
        let config = ModelConfig::new(Architecture::BiRnn, 16);
        let v = vector(8, 0, "x");
        assert!(matches!(reshape_embedding(&v, &config), Err(Error::Config(_))));
    }

    #[test]
    fn forward_pass_is_a_probability_for_every_architecture() {
        for arch in Architecture::ALL {
            let config = tiny_config(arch);
            let model = build_model(&config, 11).unwrap();
            for seed in 0..5 {
                let v = vector(24, seed, "some text here");
                let p = model
                    .predict_untrained(&ModelInput::Single(v))
                    .unwrap()
                    .probability;
                assert!((0.0..=1.0).contains(&p), "{arch}: {p}");
            }
        }
    }

    #[test]
    fn wide_embeddings_feed_the_recurrent_heads() {
        // The 1024-wide provider path: one input, sequence view 64 x 16.
        let config = ModelConfig {
            sequence_length: 64,
            hidden_units: 8,
            ..ModelConfig::new(Architecture::BiLstm, 1024)
        };
        let model = build_model(&config, 3).unwrap();
        let v = vector(1024, 1, "kichu bangla kotha");
        let p = model.predict_untrained(&ModelInput::Single(v)).unwrap();
        assert!((0.0..=1.0).contains(&p.probability));
    }

    #[test]
    fn mcnn_rejects_kernels_at_or_beyond_sequence_length() {
        let mut config = tiny_config(Architecture::McnnLstm);
        config.kernel_sizes = [2, 3, 12];
        assert!(matches!(build_model(&config, 0), Err(Error::Config(_))));
    }

    #[test]
    fn permuting_kernel_sizes_keeps_output_shape_and_param_count() {
        let mut a = tiny_config(Architecture::McnnLstm);
        a.kernel_sizes = [2, 3, 4];
        let mut b = tiny_config(Architecture::McnnLstm);
        b.kernel_sizes = [4, 3, 2];
        let ma = build_model(&a, 5).unwrap();
        let mb = build_model(&b, 5).unwrap();
        assert_eq!(ma.param_count(), mb.param_count());
        let v = vector(24, 3, "words to score");
        let pa = ma.predict_untrained(&ModelInput::Single(v.clone())).unwrap();
        let pb = mb.predict_untrained(&ModelInput::Single(v)).unwrap();
        assert!((0.0..=1.0).contains(&pa.probability));
        assert!((0.0..=1.0).contains(&pb.probability));
    }

    #[test]
    fn triple_input_feeds_the_channels_and_is_rejected_by_recurrent_heads() {
        let config = tiny_config(Architecture::McnnLstm);
        let model = build_model(&config, 2).unwrap();
        let t = ModelInput::Triple(Box::new([
            vector(24, 0, "a"),
            vector(24, 1, "b"),
            vector(24, 2, "c"),
        ]));
        assert!(model.predict_untrained(&t).is_ok());

        let rnn = build_model(&tiny_config(Architecture::BiRnn), 2).unwrap();
        assert!(matches!(rnn.predict_untrained(&t), Err(Error::Input(_))));
    }

    #[test]
    fn history_has_one_entry_per_epoch() {
        let set = separable_set(12, 24);
        let config = tiny_config(Architecture::BiRnn);
        let tcfg = TrainConfig {
            epochs: 7,
            ..TrainConfig::default()
        };
        let trained = train(build_model(&config, 1).unwrap(), &set, &set, &tcfg).unwrap();
        assert_eq!(trained.history.len(), 7);
        for (i, row) in trained.history.iter().enumerate() {
            assert_eq!(row.epoch, i + 1);
            assert!(row.train_loss.is_finite() && row.val_loss.is_finite());
        }
    }

    #[test]
    fn training_is_deterministic_for_a_fixed_seed() {
        let set = separable_set(16, 24);
        for arch in Architecture::ALL {
            let config = tiny_config(arch);
            let tcfg = TrainConfig {
                epochs: 3,
                learning_rate: 1e-3,
                ..TrainConfig::default()
            };
            let a = train(build_model(&config, 9).unwrap(), &set, &set, &tcfg).unwrap();
            let b = train(build_model(&config, 9).unwrap(), &set, &set, &tcfg).unwrap();
            assert_eq!(a.history, b.history, "{arch} not reproducible");
        }
    }

    #[test]
    fn training_loss_falls_on_separable_data() {
        let set = separable_set(24, 24);
        for arch in Architecture::ALL {
            let config = tiny_config(arch);
            let tcfg = TrainConfig {
                epochs: 25,
                learning_rate: 5e-3,
                ..TrainConfig::default()
            };
            let trained = train(build_model(&config, 3).unwrap(), &set, &set, &tcfg).unwrap();
            let first = trained.history.first().unwrap().train_loss;
            let last = trained.history.last().unwrap().train_loss;
            assert!(last < first, "{arch}: {first} -> {last}");
        }
    }

    #[test]
    fn non_finite_loss_is_reported_as_divergence_with_the_epoch() {
        let set = separable_set(8, 24);
        let config = tiny_config(Architecture::BiRnn);
        let mut model = build_model(&config, 1).unwrap();
        // Poison one weight; the first forward pass then yields a NaN loss.
        let mut first = true;
        model.net.for_each_param_grad(&mut |p, _| {
            if first {
                *p = f64::NAN;
                first = false;
            }
        });
        let tcfg = TrainConfig {
            epochs: 5,
            ..TrainConfig::default()
        };
        match train(model, &set, &set, &tcfg) {
            Err(Error::Divergence { epoch }) => assert_eq!(epoch, 1),
            other => panic!("expected divergence, got {:?}", other.map(|m| m.history)),
        }
    }

    #[test]
    fn probability_half_is_racism_by_the_tie_rule() {
        let p = Prediction::from_probability(0.5);
        assert_eq!(p.label, BinaryLabel::Racism);
        let p = Prediction::from_probability(0.4999);
        assert_eq!(p.label, BinaryLabel::NonRacism);
    }

    #[test]
    fn batch_prediction_equals_elementwise_single_prediction() {
        let set = separable_set(10, 24);
        let config = tiny_config(Architecture::BiLstm);
        let tcfg = TrainConfig {
            epochs: 2,
            ..TrainConfig::default()
        };
        let trained = train(build_model(&config, 4).unwrap(), &set, &set, &tcfg).unwrap();
        let batch = trained.predict_batch(&set.inputs).unwrap();
        for (input, b) in set.inputs.iter().zip(&batch) {
            let single = trained.predict(input).unwrap();
            assert_eq!(single.probability, b.probability);
            assert_eq!(single.label, b.label);
        }
    }

    #[test]
    fn gradients_match_central_finite_differences() {
        // Small nets, a few samples; analytic gradients must agree with
        // numeric differentiation of the batch loss.
        for arch in Architecture::ALL {
            let config = ModelConfig {
                architecture: arch,
                input_dim: 12,
                kernel_sizes: [2, 3, 4],
                conv_filters: 2,
                pool_size: 2,
                hidden_units: 3,
                sequence_length: 6,
            };
            let Model { config, mut net } = build_model(&config, 17).unwrap();
            let samples: Vec<(NetInput, f64)> = (0..3)
                .map(|i| {
                    let v = vector(12, 100 + i, &format!("sample {i}"));
                    let x = ModelInput::Single(v).to_net_input(&config).unwrap();
                    (x, (i % 2) as f64)
                })
                .collect();

            let loss_of = |net: &NetKind| -> f64 {
                samples
                    .iter()
                    .map(|(x, y)| bce_from_logit(net.infer(x).unwrap(), *y))
                    .sum()
            };

            net.zero_grads();
            for (x, y) in &samples {
                let z = net.forward_train(x).unwrap();
                net.backward(sigmoid(z) - y);
            }
            let mut analytic = Vec::new();
            net.for_each_param_grad(&mut |_, g| analytic.push(*g));

            let h = 1e-5;
            let count = net.param_count();
            let mut worst = 0.0f64;
            for target in 0..count {
                let mut idx = 0;
                net.for_each_param_grad(&mut |p, _| {
                    if idx == target {
                        *p += h;
                    }
                    idx += 1;
                });
                let plus = loss_of(&net);
                let mut idx = 0;
                net.for_each_param_grad(&mut |p, _| {
                    if idx == target {
                        *p -= 2.0 * h;
                    }
                    idx += 1;
                });
                let minus = loss_of(&net);
                let mut idx = 0;
                net.for_each_param_grad(&mut |p, _| {
                    if idx == target {
                        *p += h;
                    }
                    idx += 1;
                });
                let numeric = (plus - minus) / (2.0 * h);
                let denom = analytic[target].abs().max(numeric.abs()).max(1e-6);
                worst = worst.max((analytic[target] - numeric).abs() / denom);
            }
            assert!(worst < 1e-4, "{arch}: worst relative gradient error {worst}");
        }
    }
}
