//! Combine the three trained heads into one decision by averaging.
//!
//! Soft voting (the default) averages member probabilities; hard voting
//! first snaps each member to its {0, 1} label and averages those, which
//! reduces to 2-of-3 majority. Either way the mean is thresholded at 0.5
//! with ties going to the racism class.

use serde::{Deserialize, Serialize};

use crate::corpus::BinaryLabel;
use crate::error::{Error, Result};
use crate::model::{ModelInput, Prediction, TrainedModel};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum VoteMode {
    /// Average raw probabilities.
    Soft,
    /// Average thresholded labels (the literal label-averaging reading).
    Hard,
}

/// The three member probabilities and their combined verdict.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EnsemblePrediction {
    pub member_probabilities: [f64; 3],
    pub mean_probability: f64,
    pub label: BinaryLabel,
}

fn check_probability(p: f64) -> Result<f64> {
    if !(0.0..=1.0).contains(&p) {
        return Err(Error::Input(format!("probability {p} outside [0, 1]")));
    }
    Ok(p)
}

fn combine(members: [f64; 3], mode: VoteMode) -> EnsemblePrediction {
    let mut votes = match mode {
        VoteMode::Soft => members,
        VoteMode::Hard => members.map(|p| if p >= 0.5 { 1.0 } else { 0.0 }),
    };
    // Sum in sorted order so the mean is bit-identical under any permutation
    // of the members.
    votes.sort_by(|a, b| a.partial_cmp(b).expect("probabilities are finite"));
    let mean = (votes[0] + votes[1] + votes[2]) / 3.0;
    let label = if mean >= 0.5 {
        BinaryLabel::Racism
    } else {
        BinaryLabel::NonRacism
    };
    EnsemblePrediction {
        member_probabilities: members,
        mean_probability: mean,
        label,
    }
}

/// Soft-vote combination of the three member predictions.
pub fn ensemble_proba(
    p_rnn: &Prediction,
    p_lstm: &Prediction,
    p_mcnn: &Prediction,
) -> Result<EnsemblePrediction> {
    ensemble_proba_mode(p_rnn, p_lstm, p_mcnn, VoteMode::Soft)
}

pub fn ensemble_proba_mode(
    p_rnn: &Prediction,
    p_lstm: &Prediction,
    p_mcnn: &Prediction,
    mode: VoteMode,
) -> Result<EnsemblePrediction> {
    let members = [
        check_probability(p_rnn.probability)?,
        check_probability(p_lstm.probability)?,
        check_probability(p_mcnn.probability)?,
    ];
    Ok(combine(members, mode))
}

/// Run every model over the same inputs and combine row by row. The ensemble
/// is exactly three members.
pub fn ensemble_dataset(
    models: &[&TrainedModel],
    inputs: &[ModelInput],
    mode: VoteMode,
) -> Result<Vec<EnsemblePrediction>> {
    if models.len() != 3 {
        return Err(Error::Config(format!(
            "the ensemble takes exactly 3 models, got {}",
            models.len()
        )));
    }
    let input_dim = models[0].config.input_dim;
    if models.iter().any(|m| m.config.input_dim != input_dim) {
        return Err(Error::Config(
            "ensemble members disagree on embedding dimension".into(),
        ));
    }
    let per_model: Vec<Vec<Prediction>> = models
        .iter()
        .map(|m| m.predict_batch(inputs))
        .collect::<Result<_>>()?;
    (0..inputs.len())
        .map(|row| {
            ensemble_proba_mode(
                &per_model[0][row],
                &per_model[1][row],
                &per_model[2][row],
                mode,
            )
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn pred(p: f64) -> Prediction {
        Prediction::from_probability(p)
    }

    #[test]
    fn soft_vote_is_the_arithmetic_mean() {
        let e = ensemble_proba(&pred(0.2), &pred(0.4), &pred(0.6)).unwrap();
        assert!((e.mean_probability - 0.4).abs() < 1e-15);
        assert_eq!(e.label, BinaryLabel::NonRacism);
        assert_eq!(e.member_probabilities, [0.2, 0.4, 0.6]);
    }

    #[test]
    fn unanimous_members_are_preserved() {
        let e = ensemble_proba(&pred(1.0), &pred(1.0), &pred(1.0)).unwrap();
        assert_eq!(e.mean_probability, 1.0);
        assert_eq!(e.label, BinaryLabel::Racism);
    }

    #[test]
    fn exact_half_mean_is_racism() {
        let e = ensemble_proba(&pred(0.5), &pred(0.5), &pred(0.5)).unwrap();
        assert_eq!(e.mean_probability, 0.5);
        assert_eq!(e.label, BinaryLabel::Racism);
    }

    #[test]
    fn out_of_range_probability_is_rejected() {
        let bad = Prediction {
            probability: 1.2,
            label: BinaryLabel::Racism,
        };
        assert!(matches!(
            ensemble_proba(&bad, &pred(0.5), &pred(0.5)),
            Err(Error::Input(_))
        ));
    }

    #[test]
    fn hard_vote_is_two_of_three_majority() {
        for a in [0, 1] {
            for b in [0, 1] {
                for c in [0, 1] {
                    let probs = [a, b, c].map(|x| if x == 1 { 0.9 } else { 0.1 });
                    let e = ensemble_proba_mode(
                        &pred(probs[0]),
                        &pred(probs[1]),
                        &pred(probs[2]),
                        VoteMode::Hard,
                    )
                    .unwrap();
                    let majority = a + b + c >= 2;
                    assert_eq!(e.label == BinaryLabel::Racism, majority, "{a}{b}{c}");
                }
            }
        }
    }

    #[test]
    fn hard_vote_ignores_calibration() {
        // Two weak positives outvote one confident negative.
        let e = ensemble_proba_mode(&pred(0.51), &pred(0.52), &pred(0.01), VoteMode::Hard).unwrap();
        assert_eq!(e.label, BinaryLabel::Racism);
        // Soft voting on the same members says non-racism.
        let soft = ensemble_proba(&pred(0.51), &pred(0.52), &pred(0.01)).unwrap();
        assert_eq!(soft.label, BinaryLabel::NonRacism);
    }

    #[test]
    fn ensemble_requires_exactly_three_models() {
        let out = ensemble_dataset(&[], &[], VoteMode::Soft);
        assert!(matches!(out, Err(Error::Config(_))));
    }

    #[test]
    fn dataset_ensemble_equals_rowwise_combination() {
        use crate::embedding::stub_embed;
        use crate::model::{build_model, train, Architecture, ModelConfig, SampleSet, TrainConfig};

        let config = ModelConfig {
            sequence_length: 8,
            hidden_units: 4,
            ..ModelConfig::new(Architecture::BiRnn, 16)
        };
        let vectors: Vec<_> = (0..8).map(|i| stub_embed(&format!("r{i}"), 16, 2)).collect();
        let labels: Vec<_> = (0..8)
            .map(|i| if i % 2 == 0 { BinaryLabel::Racism } else { BinaryLabel::NonRacism })
            .collect();
        let set = SampleSet::from_single(vectors, labels).unwrap();
        let tcfg = TrainConfig {
            epochs: 2,
            ..TrainConfig::default()
        };
        // Three members trained from different seeds; plus the degenerate
        // case of three identical members.
        let models: Vec<_> = (0..3)
            .map(|seed| train(build_model(&config, seed).unwrap(), &set, &set, &tcfg).unwrap())
            .collect();
        let members: Vec<&TrainedModel> = models.iter().collect();
        let combined = ensemble_dataset(&members, &set.inputs, VoteMode::Soft).unwrap();
        assert_eq!(combined.len(), set.inputs.len());
        for (input, e) in set.inputs.iter().zip(&combined) {
            let per_row = ensemble_proba(
                &models[0].predict(input).unwrap(),
                &models[1].predict(input).unwrap(),
                &models[2].predict(input).unwrap(),
            )
            .unwrap();
            assert_eq!(per_row.mean_probability.to_bits(), e.mean_probability.to_bits());
            assert_eq!(per_row.label, e.label);
        }

        let clones: Vec<&TrainedModel> = vec![&models[0], &models[0], &models[0]];
        let unanimous = ensemble_dataset(&clones, &set.inputs, VoteMode::Soft).unwrap();
        for (input, e) in set.inputs.iter().zip(&unanimous) {
            assert_eq!(e.label, models[0].predict(input).unwrap().label);
        }
    }

    proptest! {
        #[test]
        fn mean_is_bounded_and_permutation_invariant(
            a in 0.0f64..=1.0,
            b in 0.0f64..=1.0,
            c in 0.0f64..=1.0,
        ) {
            let e = ensemble_proba(&pred(a), &pred(b), &pred(c)).unwrap();
            let lo = a.min(b).min(c);
            let hi = a.max(b).max(c);
            prop_assert!(e.mean_probability >= lo - 1e-12);
            prop_assert!(e.mean_probability <= hi + 1e-12);

            let p = ensemble_proba(&pred(c), &pred(a), &pred(b)).unwrap();
            prop_assert!((e.mean_probability - p.mean_probability).abs() < 1e-15);
            prop_assert_eq!(e.label, p.label);

            // Unanimity: all on one side of 0.5 keeps the side.
            if a >= 0.5 && b >= 0.5 && c >= 0.5 {
                prop_assert_eq!(e.label, BinaryLabel::Racism);
            }
            if a < 0.5 && b < 0.5 && c < 0.5 {
                prop_assert_eq!(e.label, BinaryLabel::NonRacism);
            }
        }
    }
}
