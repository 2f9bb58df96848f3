//! Core library of `vs`, a toolkit that predicts whether startups raise a
//! follow-on round within a time horizon. Alongside the usual intrinsic
//! features it models two extrinsic ones: competition measured through
//! description similarity, and the position of a startup's investors in the
//! co-investment network.
//!
//! Modules follow the pipeline order:
//!
//! - [`ingest`]: entity files, snapshots, labeled samples
//! - [`text`]: tokenization, word vectors, document similarity, competitors
//! - [`network`]: co-investment graph and betweenness centrality
//! - [`features`]: feature assembly and power-transform scaling
//! - [`models`]: random forest, graph convolutional network, attributions
//! - [`eval`]: metrics, experiments, ablations
//! - [`synth`]: seeded generator of ecosystems with plantable signals
//! - [`config`] / [`pipeline`]: run configuration and stage orchestration

pub mod dates;
pub mod error;
pub mod features;
pub mod ingest;
pub mod network;
pub mod text;

pub use error::{Error, Result};
