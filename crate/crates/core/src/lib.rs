//! Detecting racist Bengali social-media text with an ensemble of recurrent
//! and convolutional classifiers over pretrained sentence embeddings.
//!
//! The pipeline: load the annotated corpus ([`corpus`]), clean each comment
//! ([`preprocess`]), turn cleaned text into fixed-size vectors behind a
//! pluggable provider with a persistent cache ([`embedding`]), train the
//! Bi-RNN / Bi-LSTM / MCNN-LSTM heads ([`model`]), average them
//! ([`ensemble`]), and report metrics, tables, and plots ([`metrics`],
//! [`plots`]). The `racism-detect` binary drives it end to end.

pub mod cli;
pub mod config;
pub mod corpus;
pub mod embedding;
pub mod ensemble;
pub mod error;
pub mod metrics;
pub mod model;
pub mod plots;
pub mod preprocess;
pub mod synthetic;

pub use error::{Error, Result};
