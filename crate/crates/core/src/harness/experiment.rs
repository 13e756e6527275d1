//! Seeded few-shot runs, seed averaging and shot/pair sweeps.

use std::collections::BTreeSet;
use std::fmt::Write as _;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::ensemble::{decide, Decision, EnsembleConfig, Vote};
use crate::error::{Error, Result};
use crate::harness::dataset::Dataset;
use crate::harness::features::FeatureStore;
use crate::harness::metrics::ConfusionMatrix;
use crate::harness::split::{few_shot_split, FewShotSplit, Partition};
use crate::head::{train_head, HeadParams, TrainedHead};
use crate::stance::{Modality, StanceLabel};

pub const DEFAULT_SEEDS: [u64; 5] = [24, 524, 1024, 1524, 2024];
pub const DEFAULT_SHOTS: [usize; 4] = [100, 200, 300, 400];

/// Label used when no active modality has a vote for a post.
pub const ABSTAIN_LABEL: StanceLabel = StanceLabel::Against;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct HeadSettings {
    pub text: HeadParams,
    pub graph: HeadParams,
}

impl Default for HeadSettings {
    fn default() -> Self {
        HeadSettings {
            text: HeadParams::text_default(0),
            graph: HeadParams::graph_default(0),
        }
    }
}

impl HeadSettings {
    /// Parameters for one modality's head, with input size and seed filled in.
    pub fn for_modality(&self, m: Modality, input_dim: usize, seed: u64) -> HeadParams {
        let base = if m == Modality::Text { &self.text } else { &self.graph };
        HeadParams {
            input_dim,
            seed,
            ..base.clone()
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PostPrediction {
    pub post_id: String,
    pub gold: StanceLabel,
    pub predicted: StanceLabel,
    /// `None` when no active vote was present and [`ABSTAIN_LABEL`] was used.
    pub decision: Option<Decision>,
    pub votes: Vec<Vote>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RunResult {
    pub source: String,
    pub destination: String,
    pub shots: usize,
    pub seed: u64,
    pub config: EnsembleConfig,
    pub macro_f1: f64,
    pub f1_favor: f64,
    pub f1_against: f64,
    pub confusion: ConfusionMatrix,
    pub abstained: usize,
    pub predictions: Vec<PostPrediction>,
}

impl RunResult {
    /// Macro-F1 recomputed from the stored predictions.
    pub fn recompute_macro_f1(&self) -> f64 {
        let preds: Vec<_> = self.predictions.iter().map(|p| p.predicted).collect();
        let gold: Vec<_> = self.predictions.iter().map(|p| p.gold).collect();
        ConfusionMatrix::from_predictions(&preds, &gold)
            .map(|m| m.macro_f1())
            .unwrap_or(0.0)
    }
}

/// Seed-averaged result for one (source, destination, shots, config) cell.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CellResult {
    pub source: String,
    pub destination: String,
    pub shots: usize,
    pub config: EnsembleConfig,
    pub seeds: Vec<u64>,
    pub macro_f1: f64,
    pub f1_favor: f64,
    pub f1_against: f64,
    pub min_macro_f1: f64,
    pub max_macro_f1: f64,
    pub per_seed: Vec<RunResult>,
}

impl CellResult {
    fn from_runs(runs: Vec<RunResult>) -> Self {
        let n = runs.len() as f64;
        let mean = |f: fn(&RunResult) -> f64| runs.iter().map(f).sum::<f64>() / n;
        let first = &runs[0];
        CellResult {
            source: first.source.clone(),
            destination: first.destination.clone(),
            shots: first.shots,
            config: first.config,
            seeds: runs.iter().map(|r| r.seed).collect(),
            macro_f1: mean(|r| r.macro_f1),
            f1_favor: mean(|r| r.f1_favor),
            f1_against: mean(|r| r.f1_against),
            min_macro_f1: runs.iter().map(|r| r.macro_f1).fold(f64::INFINITY, f64::min),
            max_macro_f1: runs.iter().map(|r| r.macro_f1).fold(f64::NEG_INFINITY, f64::max),
            per_seed: runs,
        }
    }
}

/// Everything needed to run cells: the posts, their features, the fixed
/// test/pool partition and the head hyperparameters.
pub struct Experiment<'a> {
    pub dataset: &'a Dataset,
    pub features: &'a FeatureStore,
    pub partition: &'a Partition,
    pub heads: HeadSettings,
}

/// Trained per-modality heads for one split plus their votes on its test posts.
pub struct SplitVotes {
    pub split: FewShotSplit,
    pub heads: Vec<TrainedHead>,
    /// One vote per modality (in [`Modality::ALL`] order) for each test post.
    pub votes: Vec<[Vote; 4]>,
}

impl<'a> Experiment<'a> {
    pub fn new(dataset: &'a Dataset, features: &'a FeatureStore, partition: &'a Partition, heads: HeadSettings) -> Self {
        Experiment {
            dataset,
            features,
            partition,
            heads,
        }
    }

    pub fn train_head(&self, split: &FewShotSplit, m: Modality) -> Result<Option<TrainedHead>> {
        let Some(dim) = self.features.dim(m) else {
            return Ok(None);
        };
        let mut xs = Vec::with_capacity(split.train.len());
        let mut ys = Vec::with_capacity(split.train.len());
        for &i in &split.train {
            let post = self.dataset.post(i);
            if let Some(x) = self.features.feature(post, m) {
                xs.push(x);
                ys.push(post.stance);
            }
        }
        if xs.is_empty() {
            log::warn!("{m}: no training posts with features; modality absent");
            return Ok(None);
        }
        let params = self.heads.for_modality(m, dim, split.seed);
        train_head(m, &xs, &ys, &params).map(Some)
    }

    /// Trains the heads for `modalities` on the split and collects their votes.
    pub fn split_votes(&self, split: FewShotSplit, modalities: &BTreeSet<Modality>) -> Result<SplitVotes> {
        let heads: Vec<Option<TrainedHead>> = Modality::ALL
            .par_iter()
            .map(|&m| {
                if modalities.contains(&m) {
                    self.train_head(&split, m)
                } else {
                    Ok(None)
                }
            })
            .collect::<Result<_>>()?;

        let mut votes = Vec::with_capacity(split.test.len());
        for &i in &split.test {
            let post = self.dataset.post(i);
            let mut row = Modality::ALL.map(Vote::absent);
            for (k, head) in heads.iter().enumerate() {
                let (Some(head), Some(x)) = (head, self.features.feature(post, Modality::ALL[k])) else {
                    continue;
                };
                let (label, conf) = head.predict(x)?;
                row[k] = Vote::new(Modality::ALL[k], label, conf);
            }
            votes.push(row);
        }
        Ok(SplitVotes {
            split,
            heads: heads.into_iter().flatten().collect(),
            votes,
        })
    }

    pub fn score(&self, sv: &SplitVotes, config: EnsembleConfig) -> Result<RunResult> {
        let mut predictions = Vec::with_capacity(sv.votes.len());
        let mut abstained = 0;
        for (&i, votes) in sv.split.test.iter().zip(&sv.votes) {
            let post = self.dataset.post(i);
            let (predicted, decision) = match decide(votes, &config) {
                Ok((l, d)) => (l, Some(d)),
                Err(Error::NoVotes) => {
                    abstained += 1;
                    (ABSTAIN_LABEL, None)
                }
                Err(e) => return Err(e),
            };
            predictions.push(PostPrediction {
                post_id: post.post_id.clone(),
                gold: post.stance,
                predicted,
                decision,
                votes: votes.iter().filter(|v| config.is_active(v.modality)).copied().collect(),
            });
        }
        let preds: Vec<_> = predictions.iter().map(|p| p.predicted).collect();
        let gold: Vec<_> = predictions.iter().map(|p| p.gold).collect();
        let confusion = ConfusionMatrix::from_predictions(&preds, &gold)?;
        Ok(RunResult {
            source: sv.split.source.clone(),
            destination: sv.split.destination.clone(),
            shots: sv.split.n_shots,
            seed: sv.split.seed,
            config,
            macro_f1: confusion.macro_f1(),
            f1_favor: confusion.f1(StanceLabel::Favor),
            f1_against: confusion.f1(StanceLabel::Against),
            confusion,
            abstained,
            predictions,
        })
    }

    /// One seed, every config in `configs`; heads are shared across configs.
    pub fn run_seed(
        &self,
        source: &str,
        destination: &str,
        shots: usize,
        seed: u64,
        configs: &[EnsembleConfig],
    ) -> Result<Vec<RunResult>> {
        let split = few_shot_split(self.dataset, self.partition, source, destination, shots, seed)?;
        let needed: BTreeSet<Modality> = configs.iter().flat_map(|c| c.modalities()).collect();
        let sv = self.split_votes(split, &needed)?;
        configs.iter().map(|&c| self.score(&sv, c)).collect()
    }

    /// Seed-averaged results, one cell per config (in `configs` order).
    pub fn run(
        &self,
        source: &str,
        destination: &str,
        shots: usize,
        configs: &[EnsembleConfig],
        seeds: &[u64],
    ) -> Result<Vec<CellResult>> {
        if seeds.is_empty() {
            return Err(Error::param("seeds", "empty seed list"));
        }
        if configs.is_empty() {
            return Err(Error::param("configs", "empty config list"));
        }
        let per_seed: Vec<Vec<RunResult>> = seeds
            .par_iter()
            .map(|&s| self.run_seed(source, destination, shots, s, configs))
            .collect::<Result<_>>()?;
        Ok((0..configs.len())
            .map(|c| CellResult::from_runs(per_seed.iter().map(|runs| runs[c].clone()).collect()))
            .collect())
    }

    /// Full cross product pairs x shots x configs, in that nesting order.
    pub fn sweep(
        &self,
        pairs: &[(String, String)],
        shots: &[usize],
        configs: &[EnsembleConfig],
        seeds: &[u64],
    ) -> Result<ResultsTable> {
        let mut cells = Vec::new();
        for (s, d) in pairs {
            for &n in shots {
                log::info!("cell {s} -> {d}, {n} shots");
                cells.extend(self.run(s, d, n, configs, seeds)?);
            }
        }
        Ok(ResultsTable { cells })
    }
}

/// All ordered (source, destination) pairs of distinct targets: for each
/// `i < j`, `(i, j)` then `(j, i)`.
pub fn ordered_pairs(targets: &[String]) -> Vec<(String, String)> {
    let mut out = Vec::new();
    for i in 0..targets.len() {
        for j in i + 1..targets.len() {
            out.push((targets[i].clone(), targets[j].clone()));
            out.push((targets[j].clone(), targets[i].clone()));
        }
    }
    out
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct ResultsTable {
    pub cells: Vec<CellResult>,
}

/// One rendered row: a (config, shots) combination across all pairs.
#[derive(Clone, Debug, PartialEq)]
pub struct TableRow {
    pub config: EnsembleConfig,
    pub shots: usize,
    /// Per-pair seed-averaged macro-F1, in pair order.
    pub values: Vec<f64>,
    pub average: f64,
}

impl ResultsTable {
    pub fn pairs(&self) -> Vec<(String, String)> {
        let mut out: Vec<(String, String)> = Vec::new();
        for c in &self.cells {
            let p = (c.source.clone(), c.destination.clone());
            if !out.contains(&p) {
                out.push(p);
            }
        }
        out
    }

    /// Rows keyed by (config, shots) in first-appearance order, with the
    /// mean over pairs as the average column.
    pub fn rows(&self) -> Vec<TableRow> {
        let pairs = self.pairs();
        let mut keys: Vec<(EnsembleConfig, usize)> = Vec::new();
        for c in &self.cells {
            if !keys.contains(&(c.config, c.shots)) {
                keys.push((c.config, c.shots));
            }
        }
        keys.into_iter()
            .map(|(config, shots)| {
                let values: Vec<f64> = pairs
                    .iter()
                    .map(|(s, d)| {
                        self.cells
                            .iter()
                            .find(|c| c.config == config && c.shots == shots && &c.source == s && &c.destination == d)
                            .map_or(f64::NAN, |c| c.macro_f1)
                    })
                    .collect();
                let present: Vec<f64> = values.iter().copied().filter(|v| !v.is_nan()).collect();
                let average = present.iter().sum::<f64>() / present.len().max(1) as f64;
                TableRow {
                    config,
                    shots,
                    values,
                    average,
                }
            })
            .collect()
    }

    /// Mean over rows for each pair column (plus the average column).
    pub fn column_means(&self) -> Vec<f64> {
        let rows = self.rows();
        let width = self.pairs().len() + 1;
        (0..width)
            .map(|k| {
                let vals: Vec<f64> = rows
                    .iter()
                    .map(|r| if k < r.values.len() { r.values[k] } else { r.average })
                    .filter(|v| !v.is_nan())
                    .collect();
                vals.iter().sum::<f64>() / vals.len().max(1) as f64
            })
            .collect()
    }

    pub fn render(&self) -> String {
        let pairs = self.pairs();
        let mut out = String::new();
        let _ = write!(out, "{:<14} {:>5}", "config", "shots");
        for (s, d) in &pairs {
            let _ = write!(out, " {:>17}", format!("{}>{}", short(s), short(d)));
        }
        let _ = writeln!(out, " {:>8}", "Average");
        for r in self.rows() {
            let _ = write!(out, "{:<14} {:>5}", r.config.to_string(), r.shots);
            for v in &r.values {
                let _ = write!(out, " {v:>17.4}");
            }
            let _ = writeln!(out, " {:>8.4}", r.average);
        }
        let _ = write!(out, "{:<14} {:>5}", "mean", "");
        let means = self.column_means();
        for v in &means[..means.len() - 1] {
            let _ = write!(out, " {v:>17.4}");
        }
        let _ = writeln!(out, " {:>8.4}", means[means.len() - 1]);
        out
    }
}

fn short(target: &str) -> &str {
    target.rsplit(' ').next().unwrap_or(target)
}
