//! Skip-gram with negative sampling over walk corpora.
//!
//! Nodes play the role of words and walks the role of sentences. Training
//! runs either strictly sequentially (bitwise reproducible) or lock-free in
//! parallel, where workers race on the shared matrices without locks.

use std::cell::Cell;
use std::sync::atomic::{AtomicU64, AtomicUsize, Ordering};

use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::alias::AliasTable;
use crate::embedding_io::EmbeddingTable;
use crate::error::{Error, Result};
use crate::graph::{Interner, NodeIdx};
use crate::seeding;
use crate::walk::WalkCorpus;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SgnsParams {
    pub dim: usize,
    pub window: usize,
    pub negatives: usize,
    /// Exponent applied to node counts in the negative-sampling distribution.
    pub power: f64,
    pub initial_lr: f64,
    pub min_lr: f64,
    pub epochs: usize,
    pub seed: u64,
    pub deterministic: bool,
}

impl Default for SgnsParams {
    fn default() -> Self {
        SgnsParams {
            dim: 128,
            window: 10,
            negatives: 5,
            power: 0.75,
            initial_lr: 0.025,
            min_lr: 1e-4,
            epochs: 1,
            seed: 0,
            deterministic: true,
        }
    }
}

impl SgnsParams {
    pub fn validate(&self, prefix: &str) -> Result<()> {
        let field = |f: &str| format!("{prefix}{f}");
        if self.dim < 1 {
            return Err(Error::param(field("dim"), "must be >= 1"));
        }
        if self.window < 1 {
            return Err(Error::param(field("window"), "must be >= 1"));
        }
        if self.negatives < 1 {
            return Err(Error::param(field("negatives"), "must be >= 1"));
        }
        if self.epochs < 1 {
            return Err(Error::param(field("epochs"), "must be >= 1"));
        }
        if !(self.initial_lr > 0.0 && self.initial_lr.is_finite()) {
            return Err(Error::param(field("initial_lr"), "must be > 0"));
        }
        if !(self.min_lr >= 0.0 && self.min_lr <= self.initial_lr) {
            return Err(Error::param(field("min_lr"), "must be in [0, initial_lr]"));
        }
        if !self.power.is_finite() {
            return Err(Error::param(field("power"), "must be finite"));
        }
        Ok(())
    }
}

/// Input (node) and output (context) vectors, row-major `n x dim`.
#[derive(Clone, Debug, PartialEq)]
pub struct NodeEmbeddings {
    dim: usize,
    input: Vec<f64>,
    output: Vec<f64>,
    trained: Vec<bool>,
}

impl NodeEmbeddings {
    /// Input rows uniform in `[-0.5/dim, 0.5/dim]`, output rows zero.
    pub fn init(n: usize, dim: usize, seed: u64) -> Self {
        let mut rng = seeding::stream(seed, &[0x1417]);
        let half = 0.5 / dim as f64;
        let input = (0..n * dim).map(|_| rng.gen_range(-half..half)).collect();
        NodeEmbeddings {
            dim,
            input,
            output: vec![0.0; n * dim],
            trained: vec![false; n],
        }
    }

    pub fn from_parts(dim: usize, input: Vec<f64>, output: Vec<f64>) -> Self {
        assert_eq!(input.len(), output.len());
        assert_eq!(input.len() % dim, 0);
        let n = input.len() / dim;
        NodeEmbeddings {
            dim,
            input,
            output,
            trained: vec![true; n],
        }
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn len(&self) -> usize {
        self.trained.len()
    }

    pub fn is_empty(&self) -> bool {
        self.trained.is_empty()
    }

    pub fn input(&self, v: NodeIdx) -> &[f64] {
        &self.input[v.index() * self.dim..(v.index() + 1) * self.dim]
    }

    pub fn output(&self, v: NodeIdx) -> &[f64] {
        &self.output[v.index() * self.dim..(v.index() + 1) * self.dim]
    }

    pub fn input_mut(&mut self, v: NodeIdx) -> &mut [f64] {
        &mut self.input[v.index() * self.dim..(v.index() + 1) * self.dim]
    }

    pub fn output_mut(&mut self, v: NodeIdx) -> &mut [f64] {
        &mut self.output[v.index() * self.dim..(v.index() + 1) * self.dim]
    }

    /// False for nodes that never appeared in the training corpus; their
    /// rows still hold the seeded initialization.
    pub fn is_trained(&self, v: NodeIdx) -> bool {
        self.trained[v.index()]
    }

    pub fn input_matrix(&self) -> &[f64] {
        &self.input
    }

    pub fn output_matrix(&self) -> &[f64] {
        &self.output
    }

    /// Input vectors of trained nodes keyed by external id. Untrained nodes
    /// are left out so readers see them as absent.
    pub fn to_table(&self, interner: &Interner) -> EmbeddingTable {
        assert_eq!(interner.len(), self.len(), "interner does not match embeddings");
        let mut ids = Vec::new();
        let mut data = Vec::new();
        for (i, id) in interner.ids().iter().enumerate() {
            if self.trained[i] {
                ids.push(id.clone());
                data.extend_from_slice(&self.input[i * self.dim..(i + 1) * self.dim]);
            }
        }
        EmbeddingTable::new(ids, self.dim, data).expect("interned ids are unique")
    }
}

/// Negative-sampling distribution: `count(v)^power`, normalized.
pub fn unigram_table(corpus: &WalkCorpus, n: usize, power: f64) -> Result<Vec<f64>> {
    let mut counts = vec![0u64; n];
    for walk in &corpus.walks {
        for &v in walk {
            counts[v.index()] += 1;
        }
    }
    unigram_from_counts(&counts, power)
}

pub fn unigram_from_counts(counts: &[u64], power: f64) -> Result<Vec<f64>> {
    let weights: Vec<f64> = counts
        .iter()
        .map(|&c| if c == 0 { 0.0 } else { (c as f64).powf(power) })
        .collect();
    let total: f64 = weights.iter().sum();
    if total <= 0.0 {
        return Err(Error::EmptyCorpus);
    }
    Ok(weights.into_iter().map(|w| w / total).collect())
}

#[inline]
fn sigmoid(x: f64) -> f64 {
    if x >= 0.0 {
        1.0 / (1.0 + (-x).exp())
    } else {
        let e = x.exp();
        e / (1.0 + e)
    }
}

/// `-ln sigmoid(x)`, stable for large |x|.
#[inline]
fn neg_log_sigmoid(x: f64) -> f64 {
    if x >= 0.0 {
        (-x).exp().ln_1p()
    } else {
        -x + x.exp().ln_1p()
    }
}

/// Shared-parameter access so the same update runs over plain cells
/// (sequential) or relaxed atomics (lock-free parallel).
trait ParamCells {
    fn get(&self, i: usize) -> f64;
    fn set(&self, i: usize, v: f64);
}

impl ParamCells for [Cell<f64>] {
    #[inline]
    fn get(&self, i: usize) -> f64 {
        self[i].get()
    }
    #[inline]
    fn set(&self, i: usize, v: f64) {
        self[i].set(v)
    }
}

impl ParamCells for [AtomicU64] {
    #[inline]
    fn get(&self, i: usize) -> f64 {
        f64::from_bits(self[i].load(Ordering::Relaxed))
    }
    #[inline]
    fn set(&self, i: usize, v: f64) {
        self[i].store(v.to_bits(), Ordering::Relaxed)
    }
}

/// Loss and update for one positive pair plus negatives. All gradients are
/// taken at the pre-update parameters, then applied.
#[allow(clippy::too_many_arguments)]
fn step_impl<P: ParamCells + ?Sized>(
    input: &P,
    output: &P,
    dim: usize,
    center: NodeIdx,
    context: NodeIdx,
    negatives: &[NodeIdx],
    lr: f64,
    coefs: &mut Vec<f64>,
    grad_center: &mut [f64],
) -> f64 {
    let c0 = center.index() * dim;
    coefs.clear();
    let mut loss = 0.0;
    let targets = std::iter::once((context, true)).chain(negatives.iter().map(|&n| (n, false)));
    for (target, positive) in targets.clone() {
        let o0 = target.index() * dim;
        let mut s = 0.0;
        for d in 0..dim {
            s += input.get(c0 + d) * output.get(o0 + d);
        }
        if positive {
            loss += neg_log_sigmoid(s);
            coefs.push(sigmoid(s) - 1.0);
        } else {
            loss += neg_log_sigmoid(-s);
            coefs.push(sigmoid(s));
        }
    }

    grad_center.iter_mut().for_each(|g| *g = 0.0);
    for ((target, _), &coef) in targets.clone().zip(coefs.iter()) {
        let o0 = target.index() * dim;
        for (d, g) in grad_center.iter_mut().enumerate() {
            *g += coef * output.get(o0 + d);
        }
    }
    for ((target, _), &coef) in targets.zip(coefs.iter()) {
        let o0 = target.index() * dim;
        for d in 0..dim {
            let u = output.get(o0 + d);
            output.set(o0 + d, u - lr * coef * input.get(c0 + d));
        }
    }
    for (d, g) in grad_center.iter().enumerate() {
        input.set(c0 + d, input.get(c0 + d) - lr * g);
    }
    loss
}

/// One SGD step on `-ln σ(u_ctx·v_c) - Σ ln σ(-u_neg·v_c)`, returning the loss
/// before the update.
pub fn sgns_step(
    center: NodeIdx,
    context: NodeIdx,
    negatives: &[NodeIdx],
    emb: &mut NodeEmbeddings,
    lr: f64,
) -> Result<f64> {
    let n = emb.len();
    for v in std::iter::once(&center).chain(std::iter::once(&context)).chain(negatives) {
        if v.index() >= n {
            return Err(Error::param("node", format!("index {} out of range {n}", v.index())));
        }
    }
    let dim = emb.dim;
    let mut coefs = Vec::with_capacity(negatives.len() + 1);
    let mut grad = vec![0.0; dim];
    let input = Cell::from_mut(emb.input.as_mut_slice()).as_slice_of_cells();
    let output = Cell::from_mut(emb.output.as_mut_slice()).as_slice_of_cells();
    let loss = step_impl(input, output, dim, center, context, negatives, lr, &mut coefs, &mut grad);
    if !loss.is_finite() {
        return Err(Error::NonFiniteLoss {
            loss,
            context: format!("center={} context={} negatives={negatives:?} lr={lr}", center.0, context.0),
        });
    }
    Ok(loss)
}

#[derive(Clone, Debug, Default, PartialEq)]
pub struct TrainStats {
    /// Mean per-pair loss for each epoch.
    pub epoch_loss: Vec<f64>,
    pub pairs: u64,
}

/// Trains embeddings for `n` nodes (the interner size) from `corpus`.
pub fn train_embeddings(corpus: &WalkCorpus, n: usize, params: &SgnsParams) -> Result<NodeEmbeddings> {
    train_embeddings_with_stats(corpus, n, params).map(|(e, _)| e)
}

pub fn train_embeddings_with_stats(
    corpus: &WalkCorpus,
    n: usize,
    params: &SgnsParams,
) -> Result<(NodeEmbeddings, TrainStats)> {
    params.validate("embed.")?;
    let probs = unigram_table(corpus, n, params.power)?;
    let sampler = AliasTable::new(&probs)?;
    let mut emb = NodeEmbeddings::init(n, params.dim, params.seed);
    let total_tokens = corpus.token_count() as u64 * params.epochs as u64;

    let stats = if params.deterministic {
        train_sequential(corpus, params, &sampler, &mut emb, total_tokens)?
    } else {
        train_parallel(corpus, params, &sampler, &mut emb, total_tokens)?
    };

    for walk in &corpus.walks {
        for &v in walk {
            emb.trained[v.index()] = true;
        }
    }
    Ok((emb, stats))
}

#[inline]
fn learning_rate(params: &SgnsParams, done: u64, total: u64) -> f64 {
    let progress = done as f64 / total.max(1) as f64;
    (params.initial_lr - (params.initial_lr - params.min_lr) * progress).max(params.min_lr)
}

/// Visits every (center, context) pair of one walk, with word2vec-style
/// random window shrinking. Returns (loss sum, pair count).
#[allow(clippy::too_many_arguments)]
fn train_walk<P: ParamCells + ?Sized, R: Rng>(
    walk: &[NodeIdx],
    input: &P,
    output: &P,
    params: &SgnsParams,
    sampler: &AliasTable,
    rng: &mut R,
    lr: f64,
    negs: &mut Vec<NodeIdx>,
    coefs: &mut Vec<f64>,
    grad: &mut [f64],
) -> (f64, u64) {
    let mut loss = 0.0;
    let mut pairs = 0;
    for (i, &center) in walk.iter().enumerate() {
        let reduced = rng.gen_range(0..params.window);
        let w = params.window - reduced;
        let lo = i.saturating_sub(w);
        let hi = (i + w).min(walk.len() - 1);
        for (j, &context) in walk.iter().enumerate().take(hi + 1).skip(lo) {
            if j == i {
                continue;
            }
            negs.clear();
            for _ in 0..params.negatives {
                let neg = NodeIdx::from(sampler.sample(rng));
                if neg != context {
                    negs.push(neg);
                }
            }
            loss += step_impl(input, output, params.dim, center, context, negs, lr, coefs, grad);
            pairs += 1;
        }
    }
    (loss, pairs)
}

fn train_sequential(
    corpus: &WalkCorpus,
    params: &SgnsParams,
    sampler: &AliasTable,
    emb: &mut NodeEmbeddings,
    total_tokens: u64,
) -> Result<TrainStats> {
    let mut rng = seeding::stream(params.seed, &[0x5695]);
    let dim = params.dim;
    let input = Cell::from_mut(emb.input.as_mut_slice()).as_slice_of_cells();
    let output = Cell::from_mut(emb.output.as_mut_slice()).as_slice_of_cells();
    let (mut negs, mut coefs, mut grad) = (Vec::new(), Vec::new(), vec![0.0; dim]);
    let mut stats = TrainStats::default();
    let mut done = 0u64;
    for epoch in 0..params.epochs {
        let (mut loss, mut pairs) = (0.0, 0u64);
        for walk in &corpus.walks {
            let lr = learning_rate(params, done, total_tokens);
            let (l, p) = train_walk(walk, input, output, params, sampler, &mut rng, lr, &mut negs, &mut coefs, &mut grad);
            loss += l;
            pairs += p;
            done += walk.len() as u64;
        }
        let mean = if pairs > 0 { loss / pairs as f64 } else { 0.0 };
        if !mean.is_finite() {
            return Err(Error::NonFiniteLoss {
                loss: mean,
                context: format!("epoch {epoch}"),
            });
        }
        stats.epoch_loss.push(mean);
        stats.pairs += pairs;
    }
    Ok(stats)
}

fn train_parallel(
    corpus: &WalkCorpus,
    params: &SgnsParams,
    sampler: &AliasTable,
    emb: &mut NodeEmbeddings,
    total_tokens: u64,
) -> Result<TrainStats> {
    const CHUNK: usize = 64;
    let to_atomic = |v: &[f64]| v.iter().map(|x| AtomicU64::new(x.to_bits())).collect::<Vec<_>>();
    let input = to_atomic(&emb.input);
    let output = to_atomic(&emb.output);
    let done = AtomicUsize::new(0);
    let mut stats = TrainStats::default();

    for epoch in 0..params.epochs {
        let (loss, pairs) = corpus
            .walks
            .par_chunks(CHUNK)
            .enumerate()
            .map(|(c, chunk)| {
                let mut rng = seeding::stream(params.seed, &[0x5695, epoch as u64, c as u64]);
                let (mut negs, mut coefs, mut grad) = (Vec::new(), Vec::new(), vec![0.0; params.dim]);
                let (mut loss, mut pairs) = (0.0, 0u64);
                for walk in chunk {
                    let lr = learning_rate(params, done.load(Ordering::Relaxed) as u64, total_tokens);
                    let (l, p) = train_walk(
                        walk, input.as_slice(), output.as_slice(), params, sampler, &mut rng, lr,
                        &mut negs, &mut coefs, &mut grad,
                    );
                    loss += l;
                    pairs += p;
                    done.fetch_add(walk.len(), Ordering::Relaxed);
                }
                (loss, pairs)
            })
            .reduce(|| (0.0, 0), |a, b| (a.0 + b.0, a.1 + b.1));
        let mean = if pairs > 0 { loss / pairs as f64 } else { 0.0 };
        if !mean.is_finite() {
            return Err(Error::NonFiniteLoss {
                loss: mean,
                context: format!("epoch {epoch}"),
            });
        }
        stats.epoch_loss.push(mean);
        stats.pairs += pairs;
    }

    let from_atomic = |v: Vec<AtomicU64>| v.into_iter().map(|a| f64::from_bits(a.into_inner())).collect::<Vec<_>>();
    emb.input = from_atomic(input);
    emb.output = from_atomic(output);
    Ok(stats)
}

pub fn cosine(a: &[f64], b: &[f64]) -> f64 {
    let dot: f64 = a.iter().zip(b).map(|(x, y)| x * y).sum();
    let na: f64 = a.iter().map(|x| x * x).sum::<f64>().sqrt();
    let nb: f64 = b.iter().map(|x| x * x).sum::<f64>().sqrt();
    if na == 0.0 || nb == 0.0 {
        0.0
    } else {
        dot / (na * nb)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn ix(i: u32) -> NodeIdx {
        NodeIdx(i)
    }

    #[test]
    fn unigram_examples() {
        let p = unigram_from_counts(&[1, 1], 1.0).unwrap();
        assert_eq!(p, vec![0.5, 0.5]);

        let p = unigram_from_counts(&[1, 8], 0.75).unwrap();
        let big = 8f64.powf(0.75);
        assert!((p[0] - 1.0 / (1.0 + big)).abs() < 1e-12);
        assert!((p[0] - 0.174).abs() < 1e-3 && (p[1] - 0.826).abs() < 1e-3);

        let p = unigram_from_counts(&[5, 0, 5], 0.75).unwrap();
        assert_eq!(p[1], 0.0);
        assert!((p.iter().sum::<f64>() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn unigram_empty_corpus() {
        assert!(matches!(
            unigram_table(&WalkCorpus::default(), 3, 0.75),
            Err(Error::EmptyCorpus)
        ));
    }

    #[test]
    fn zero_vectors_loss() {
        let mut emb = NodeEmbeddings::from_parts(4, vec![0.0; 12], vec![0.0; 12]);
        let loss = sgns_step(ix(0), ix(1), &[ix(2)], &mut emb, 0.1).unwrap();
        assert!((loss - 2.0 * 2f64.ln()).abs() < 1e-12);
        assert!((loss - 1.3863).abs() < 1e-4);
    }

    #[test]
    fn single_pair_converges() {
        let dim = 16;
        let mut emb = NodeEmbeddings::init(3, dim, 5);
        for _ in 0..200 {
            sgns_step(ix(0), ix(1), &[ix(2)], &mut emb, 0.25).unwrap();
        }
        let s: f64 = emb.input(ix(0)).iter().zip(emb.output(ix(1))).map(|(a, b)| a * b).sum();
        assert!(sigmoid(s) > 0.9, "sigma = {}", sigmoid(s));
    }

    #[test]
    fn out_of_range_index_rejected() {
        let mut emb = NodeEmbeddings::init(2, 4, 0);
        assert!(sgns_step(ix(0), ix(5), &[], &mut emb, 0.1).is_err());
    }

    #[test]
    fn non_finite_loss_aborts() {
        let mut emb = NodeEmbeddings::from_parts(1, vec![f64::NAN, 1.0], vec![1.0, 1.0]);
        assert!(matches!(
            sgns_step(ix(0), ix(1), &[], &mut emb, 0.1),
            Err(Error::NonFiniteLoss { .. })
        ));
    }

    #[test]
    fn absent_nodes_keep_init_and_are_flagged() {
        let corpus = WalkCorpus {
            walks: vec![vec![ix(0), ix(1), ix(0), ix(1)]],
        };
        let params = SgnsParams { dim: 8, ..Default::default() };
        let emb = train_embeddings(&corpus, 3, &params).unwrap();
        let init = NodeEmbeddings::init(3, 8, params.seed);
        assert!(emb.is_trained(ix(0)) && emb.is_trained(ix(1)));
        assert!(!emb.is_trained(ix(2)));
        assert_eq!(emb.input(ix(2)), init.input(ix(2)));
    }

    #[test]
    fn invalid_params() {
        let corpus = WalkCorpus { walks: vec![vec![ix(0), ix(1)]] };
        for p in [
            SgnsParams { dim: 0, ..Default::default() },
            SgnsParams { window: 0, ..Default::default() },
            SgnsParams { negatives: 0, ..Default::default() },
        ] {
            assert!(train_embeddings(&corpus, 2, &p).is_err());
        }
    }

    #[test]
    fn parallel_mode_produces_finite_embeddings() {
        let walks = (0..200)
            .map(|i| (0..20).map(|j| ix(((i + j) % 10) as u32)).collect())
            .collect();
        let corpus = WalkCorpus { walks };
        let params = SgnsParams { dim: 16, deterministic: false, epochs: 2, ..Default::default() };
        let emb = train_embeddings(&corpus, 10, &params).unwrap();
        assert!(emb.input_matrix().iter().all(|x| x.is_finite()));
    }
}
