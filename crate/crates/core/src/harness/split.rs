//! Few-shot cross-target splits.
//!
//! Every target's posts are divided once, by a dataset-level seed, into a
//! held-out test half and a shot pool. A split trains on all source-target
//! posts plus `N` label-stratified shots from the destination pool, and
//! tests on the destination's held-out half. For a fixed seed, the shots for
//! a smaller `N` are a subset of those for a larger `N`.

use std::collections::HashMap;

use rand::seq::SliceRandom;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::harness::dataset::Dataset;
use crate::seeding::{self, hash_str};
use crate::stance::StanceLabel;

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Partition {
    seed: u64,
    test: HashMap<String, Vec<usize>>,
    pool: HashMap<String, Vec<usize>>,
}

impl Partition {
    /// Held-out test set is `floor(n/2)` posts per target; the rest is the shot pool.
    pub fn new(dataset: &Dataset, seed: u64) -> Self {
        let mut test = HashMap::new();
        let mut pool = HashMap::new();
        for target in dataset.targets() {
            let mut idx = dataset.indices_for(target);
            let mut rng = seeding::stream(seed, &[0xBA27, hash_str(target)]);
            idx.shuffle(&mut rng);
            let n_test = idx.len() / 2;
            let mut t = idx[..n_test].to_vec();
            let mut p = idx[n_test..].to_vec();
            t.sort_unstable();
            p.sort_unstable();
            test.insert(target.clone(), t);
            pool.insert(target.clone(), p);
        }
        Partition { seed, test, pool }
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn test(&self, target: &str) -> &[usize] {
        self.test.get(target).map(Vec::as_slice).unwrap_or(&[])
    }

    pub fn pool(&self, target: &str) -> &[usize] {
        self.pool.get(target).map(Vec::as_slice).unwrap_or(&[])
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct FewShotSplit {
    pub source: String,
    pub destination: String,
    pub n_shots: usize,
    pub seed: u64,
    /// Sorted post indices.
    pub train: Vec<usize>,
    /// Sorted post indices, destination only.
    pub test: Vec<usize>,
    /// The destination posts injected into `train`, sorted.
    pub shots: Vec<usize>,
}

/// Splits `total` into per-class quotas proportional to `counts`, by largest
/// remainder (ties to the lower class index).
pub fn largest_remainder(total: usize, counts: &[usize]) -> Vec<usize> {
    let sum: usize = counts.iter().sum();
    if sum == 0 {
        return vec![0; counts.len()];
    }
    let exact: Vec<f64> = counts
        .iter()
        .map(|&c| total as f64 * c as f64 / sum as f64)
        .collect();
    let mut quota: Vec<usize> = exact.iter().map(|e| e.floor() as usize).collect();
    let short = total - quota.iter().sum::<usize>();
    let mut order: Vec<usize> = (0..counts.len()).collect();
    order.sort_by(|&a, &b| {
        let ra = exact[a] - exact[a].floor();
        let rb = exact[b] - exact[b].floor();
        rb.partial_cmp(&ra).expect("finite").then(a.cmp(&b))
    });
    for &i in order.iter().take(short) {
        quota[i] += 1;
    }
    quota
}

pub fn few_shot_split(
    dataset: &Dataset,
    partition: &Partition,
    source: &str,
    destination: &str,
    n_shots: usize,
    seed: u64,
) -> Result<FewShotSplit> {
    for t in [source, destination] {
        if !dataset.targets().iter().any(|x| x == t) {
            return Err(Error::UnknownTarget(t.to_owned()));
        }
    }
    if source == destination {
        return Err(Error::param("destination", "must differ from source"));
    }
    let pool = partition.pool(destination);
    let test = partition.test(destination);
    if pool.len() < n_shots || test.is_empty() {
        // Smallest target size whose pool half holds n_shots with a non-empty test half.
        let required = (2 * n_shots).saturating_sub(1).max(2);
        return Err(Error::InsufficientPosts {
            target: destination.to_owned(),
            required,
            available: pool.len() + test.len(),
        });
    }

    let mut by_class: [Vec<usize>; 2] = [Vec::new(), Vec::new()];
    for &i in pool {
        by_class[dataset.post(i).stance.index()].push(i);
    }
    let mut quota = largest_remainder(n_shots, &[by_class[0].len(), by_class[1].len()]);
    // Shift any overflow to the other class.
    for c in 0..2 {
        let extra = quota[c].saturating_sub(by_class[c].len());
        quota[c] -= extra;
        quota[1 - c] += extra;
    }

    let mut rng = seeding::stream(seed, &[0x5407, hash_str(destination)]);
    let mut shots = Vec::with_capacity(n_shots);
    for label in StanceLabel::ALL {
        let c = label.index();
        let mut cls = by_class[c].clone();
        cls.shuffle(&mut rng);
        shots.extend_from_slice(&cls[..quota[c]]);
    }
    shots.sort_unstable();

    let mut train = dataset.indices_for(source);
    train.extend_from_slice(&shots);
    train.sort_unstable();

    Ok(FewShotSplit {
        source: source.to_owned(),
        destination: destination.to_owned(),
        n_shots,
        seed,
        train,
        test: test.to_vec(),
        shots,
    })
}

/// Checks the split invariants, returning a description of the first violation.
pub fn check_split(dataset: &Dataset, split: &FewShotSplit) -> std::result::Result<(), String> {
    let train: std::collections::HashSet<_> = split.train.iter().collect();
    if let Some(i) = split.test.iter().find(|i| train.contains(i)) {
        return Err(format!("post {i} in both train and test"));
    }
    if let Some(&i) = split.test.iter().find(|&&i| dataset.post(i).target != split.destination) {
        return Err(format!("test post {i} is not about the destination"));
    }
    let dest_in_train = split
        .train
        .iter()
        .filter(|&&i| dataset.post(i).target == split.destination)
        .count();
    if dest_in_train != split.n_shots {
        return Err(format!("{dest_in_train} destination posts in train, expected {}", split.n_shots));
    }
    Ok(())
}
