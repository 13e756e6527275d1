//! Few-shot cross-target evaluation: data model, splits, metrics, seeded
//! experiments, sweeps, synthetic data and result files.

pub mod dataset;
pub mod experiment;
pub mod features;
pub mod metrics;
pub mod output;
pub mod split;
pub mod synth;

pub use dataset::{read_posts, write_posts, Dataset, LabeledPost};
pub use experiment::{
    ordered_pairs, CellResult, Experiment, HeadSettings, PostPrediction, ResultsTable, RunResult, DEFAULT_SEEDS,
    DEFAULT_SHOTS,
};
pub use features::{embed_bundle, embed_relation, FeatureStore};
pub use metrics::{macro_f1, ConfusionMatrix};
pub use split::{check_split, few_shot_split, FewShotSplit, Partition};
pub use synth::{synth_generate, SynthData, SynthParams};
