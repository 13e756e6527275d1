//! Second-order (node2vec) biased random walks.
//!
//! Given the previous node `t` and current node `v`, the unnormalized weight
//! of moving to neighbor `x` of `v` is `1/p` when `x == t`, `1` when `x` is
//! also adjacent to `t`, and `1/q` otherwise. With `p = q = 1` every weight is
//! one and the walk is a plain uniform (DeepWalk) walk.
//!
//! Each walk owns an RNG stream derived from `(seed, start, walk_index)`, so
//! the corpus does not depend on how rayon schedules the work.

use std::collections::HashMap;
use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::Path;

use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::alias::AliasTable;
use crate::error::{Error, Result};
use crate::graph::{Graph, Interner, NodeIdx};
use crate::seeding;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct WalkParams {
    /// Return parameter.
    pub p: f64,
    /// In-out parameter.
    pub q: f64,
    pub walks_per_node: usize,
    pub walk_length: usize,
    pub seed: u64,
    pub alias_mode: AliasMode,
}

impl Default for WalkParams {
    fn default() -> Self {
        WalkParams {
            p: 1.0,
            q: 1.0,
            walks_per_node: 10,
            walk_length: 80,
            seed: 0,
            alias_mode: AliasMode::default(),
        }
    }
}

impl WalkParams {
    pub fn validate(&self, prefix: &str) -> Result<()> {
        let field = |f: &str| format!("{prefix}{f}");
        if !(self.p > 0.0 && self.p.is_finite()) {
            return Err(Error::param(field("p"), "must be > 0"));
        }
        if !(self.q > 0.0 && self.q.is_finite()) {
            return Err(Error::param(field("q"), "must be > 0"));
        }
        if self.walks_per_node < 1 {
            return Err(Error::param(field("walks_per_node"), "must be >= 1"));
        }
        if self.walk_length < 2 {
            return Err(Error::param(field("walk_length"), "must be >= 2"));
        }
        if let AliasMode::Lazy { capacity } = self.alias_mode {
            if capacity == 0 {
                return Err(Error::param(field("alias_mode.capacity"), "must be >= 1"));
            }
        }
        Ok(())
    }

    fn is_unbiased(&self) -> bool {
        self.p == 1.0 && self.q == 1.0
    }
}

/// How second-order alias tables are materialized.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum AliasMode {
    /// One table per arc, built up front. Memory grows with sum of degree^2.
    Precompute,
    /// Built on first use and kept in a per-worker cache of at most
    /// `capacity` tables; the cache is flushed when full.
    Lazy { capacity: usize },
}

impl Default for AliasMode {
    fn default() -> Self {
        AliasMode::Lazy { capacity: 65_536 }
    }
}

/// Unnormalized transition weights over `neighbors(v)` after arriving from `t`.
///
/// Panics if the walk could not have come from `t` (no arc `t -> v`).
pub fn transition_weights(g: &Graph, t: NodeIdx, v: NodeIdx, p: f64, q: f64) -> Vec<f64> {
    assert!(g.has_edge(t, v), "no arc {t:?} -> {v:?}");
    let from_t = g.neighbors(t);
    g.neighbors(v)
        .iter()
        .map(|&x| {
            if x == t {
                1.0 / p
            } else if from_t.binary_search(&x).is_ok() {
                1.0
            } else {
                1.0 / q
            }
        })
        .collect()
}

/// Samples successive walk steps over a shared graph.
pub struct StepSampler<'g> {
    graph: &'g Graph,
    p: f64,
    q: f64,
    unbiased: bool,
    mode: AliasMode,
    /// Indexed by arc id of `t -> v`; empty unless precomputed.
    tables: Vec<Option<AliasTable>>,
}

/// Per-worker lazy table cache.
#[derive(Default)]
pub struct StepCache {
    tables: HashMap<usize, AliasTable>,
}

impl<'g> StepSampler<'g> {
    pub fn new(graph: &'g Graph, params: &WalkParams) -> Self {
        let unbiased = params.is_unbiased();
        let tables = if params.alias_mode == AliasMode::Precompute && !unbiased {
            (0..graph.node_count())
                .into_par_iter()
                .flat_map_iter(|t| {
                    let t = NodeIdx::from(t);
                    graph.neighbors(t).iter().map(move |&v| {
                        if graph.degree(v) == 0 {
                            None
                        } else {
                            let w = transition_weights(graph, t, v, params.p, params.q);
                            Some(AliasTable::new(&w).expect("weights are positive"))
                        }
                    })
                })
                .collect()
        } else {
            Vec::new()
        };
        StepSampler {
            graph,
            p: params.p,
            q: params.q,
            unbiased,
            mode: params.alias_mode,
            tables,
        }
    }

    pub fn graph(&self) -> &Graph {
        self.graph
    }

    /// Next node after `cur`, given the predecessor (if any). `None` when `cur`
    /// has no neighbors.
    pub fn step<R: Rng + ?Sized>(
        &self,
        prev: Option<NodeIdx>,
        cur: NodeIdx,
        rng: &mut R,
        cache: &mut StepCache,
    ) -> Option<NodeIdx> {
        let nbrs = self.graph.neighbors(cur);
        if nbrs.is_empty() {
            return None;
        }
        let prev = match prev {
            Some(t) if !self.unbiased => t,
            _ => return Some(nbrs[rng.gen_range(0..nbrs.len())]),
        };
        let arc = self
            .graph
            .arc_id(prev, cur)
            .expect("consecutive walk nodes must be adjacent");
        let pick = match self.mode {
            AliasMode::Precompute => self.tables[arc]
                .as_ref()
                .expect("table exists for non-dangling arc")
                .sample(rng),
            AliasMode::Lazy { capacity } => {
                if !cache.tables.contains_key(&arc) && cache.tables.len() >= capacity {
                    cache.tables.clear();
                }
                cache
                    .tables
                    .entry(arc)
                    .or_insert_with(|| {
                        let w = transition_weights(self.graph, prev, cur, self.p, self.q);
                        AliasTable::new(&w).expect("weights are positive")
                    })
                    .sample(rng)
            }
        };
        Some(nbrs[pick])
    }

    fn walk(&self, start: NodeIdx, len: usize, seed: u64, walk_index: usize, cache: &mut StepCache) -> Vec<NodeIdx> {
        let mut rng = seeding::stream(seed, &[start.0 as u64, walk_index as u64]);
        let mut walk = Vec::with_capacity(len);
        walk.push(start);
        let mut prev = None;
        let mut cur = start;
        while walk.len() < len {
            match self.step(prev, cur, &mut rng, cache) {
                Some(next) => {
                    walk.push(next);
                    prev = Some(cur);
                    cur = next;
                }
                None => break,
            }
        }
        walk
    }
}

/// Walks ordered by `(start node, walk index)`.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct WalkCorpus {
    pub walks: Vec<Vec<NodeIdx>>,
}

impl WalkCorpus {
    pub fn len(&self) -> usize {
        self.walks.len()
    }

    pub fn is_empty(&self) -> bool {
        self.walks.iter().all(|w| w.is_empty())
    }

    pub fn token_count(&self) -> usize {
        self.walks.iter().map(Vec::len).sum()
    }

    /// One walk per line, space-separated external ids.
    pub fn write_text(&self, interner: &Interner, path: &Path) -> Result<()> {
        let file = File::create(path).map_err(|e| Error::io(path, e))?;
        let mut w = BufWriter::new(file);
        let mut write = || -> std::io::Result<()> {
            for walk in &self.walks {
                let mut first = true;
                for &n in walk {
                    if !first {
                        w.write_all(b" ")?;
                    }
                    w.write_all(interner.id(n).as_bytes())?;
                    first = false;
                }
                w.write_all(b"\n")?;
            }
            w.flush()
        };
        write().map_err(|e| Error::io(path, e))
    }
}

/// `walks_per_node` walks from every non-isolated node, in parallel on the
/// current rayon pool. Output is independent of the worker count.
pub fn generate_walks(g: &Graph, params: &WalkParams) -> Result<WalkCorpus> {
    params.validate("walk.")?;
    let sampler = StepSampler::new(g, params);
    let starts: Vec<NodeIdx> = (0..g.node_count())
        .map(NodeIdx::from)
        .filter(|&v| !g.is_isolated(v))
        .collect();
    let walks = starts
        .par_iter()
        .map_init(StepCache::default, |cache, &start| {
            (0..params.walks_per_node)
                .map(|i| sampler.walk(start, params.walk_length, params.seed, i, cache))
                .collect::<Vec<_>>()
        })
        .flatten_iter()
        .collect();
    Ok(WalkCorpus { walks })
}
