//! Cross-target stance detection from post text and user networks.
//!
//! Four independent classifiers vote on each post: one over target-conditioned
//! document vectors and one each over node2vec embeddings of the followers,
//! friends and likes graphs. Their predictions are combined by majority vote
//! and evaluated under a few-shot cross-target protocol.
//!
//! The pipeline, bottom-up:
//!
//! - [`graph`]: interned CSR adjacency per relation.
//! - [`alias`] and [`walk`]: second-order biased random walks.
//! - [`embed`]: skip-gram with negative sampling over the walks.
//! - [`text`]: `[CLS] target [SEP] text` composition and document vectors.
//! - [`head`]: per-modality feed-forward classifiers.
//! - [`ensemble`]: majority voting with ablation subsets.
//! - [`harness`]: splits, metrics, seeded runs and sweeps, synthetic data.
//! - [`config`] and [`pipeline`]: file-driven runs behind the CLI.

pub mod alias;
pub mod config;
pub mod embed;
pub mod embedding_io;
pub mod ensemble;
pub mod error;
pub mod graph;
pub mod harness;
pub mod head;
pub mod pipeline;
pub mod seeding;
pub mod stance;
pub mod text;
pub mod walk;

pub use error::{Error, Result};
pub use stance::{Modality, StanceLabel};
