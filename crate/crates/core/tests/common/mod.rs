//! Independent oracles shared by the property tests and the acceptance run.
//! Each check returns an [`Outcome`] instead of panicking so the acceptance
//! target can report every criterion.

#![allow(dead_code)]

use std::collections::BTreeSet;
use std::time::Instant;

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use stance_graph::alias::AliasTable;
use stance_graph::embed::{sgns_step, NodeEmbeddings};
use stance_graph::ensemble::{majority_vote, EnsembleConfig, Vote};
use stance_graph::graph::{Graph, NodeIdx, Relation};
use stance_graph::harness::{check_split, few_shot_split, macro_f1, Dataset, LabeledPost, Partition};
use stance_graph::head::{HeadParams, HeadTensors, TrainedHead};
use stance_graph::walk::{transition_weights, AliasMode, StepCache, StepSampler, WalkParams};
use stance_graph::{Error, Modality, StanceLabel};

pub struct Outcome {
    pub pass: bool,
    pub detail: String,
    pub seconds: f64,
}

impl Outcome {
    fn new(pass: bool, detail: String, start: Instant) -> Self {
        Outcome {
            pass,
            detail,
            seconds: start.elapsed().as_secs_f64(),
        }
    }
}

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

// ---------------------------------------------------------------- graphs

/// One representative per isomorphism class of connected simple graphs with
/// `2..=max_n` nodes, as (node count, edge list).
pub fn connected_graph_classes(max_n: usize) -> Vec<(usize, Vec<(usize, usize)>)> {
    let mut out = Vec::new();
    for n in 2..=max_n {
        let pairs: Vec<(usize, usize)> = (0..n).flat_map(|a| (a + 1..n).map(move |b| (a, b))).collect();
        let index = |a: usize, b: usize| pairs.iter().position(|&p| p == (a.min(b), a.max(b))).unwrap();
        let perms = permutations(n);
        let mut seen = BTreeSet::new();
        for mask in 0u32..(1 << pairs.len()) {
            let edges: Vec<(usize, usize)> = (0..pairs.len()).filter(|k| mask >> k & 1 == 1).map(|k| pairs[k]).collect();
            if !is_connected(n, &edges) {
                continue;
            }
            let canon = perms
                .iter()
                .map(|p| edges.iter().fold(0u32, |m, &(a, b)| m | 1 << index(p[a], p[b])))
                .min()
                .unwrap();
            if seen.insert(canon) {
                out.push((n, edges));
            }
        }
    }
    out
}

fn permutations(n: usize) -> Vec<Vec<usize>> {
    if n == 0 {
        return vec![Vec::new()];
    }
    let mut out = Vec::new();
    for p in permutations(n - 1) {
        for pos in 0..n {
            let mut q = p.clone();
            q.insert(pos, n - 1);
            out.push(q);
        }
    }
    out
}

fn is_connected(n: usize, edges: &[(usize, usize)]) -> bool {
    let mut seen = vec![false; n];
    let mut stack = vec![0];
    seen[0] = true;
    while let Some(v) = stack.pop() {
        for &(a, b) in edges {
            for (x, y) in [(a, b), (b, a)] {
                if x == v && !seen[y] {
                    seen[y] = true;
                    stack.push(y);
                }
            }
        }
    }
    seen.into_iter().all(|s| s)
}

pub fn build(n: usize, edges: &[(usize, usize)]) -> Graph {
    let e = edges.iter().map(|&(a, b)| (NodeIdx(a as u32), NodeIdx(b as u32)));
    Graph::from_edges(n, e, Relation::Friends, true)
}

/// Exact next-step law from an adjacency matrix: neighbors of `v` in
/// ascending order with probabilities.
fn exact_law(adj: &[Vec<bool>], t: usize, v: usize, p: f64, q: f64) -> Vec<(usize, f64)> {
    let w: Vec<(usize, f64)> = (0..adj.len())
        .filter(|&x| adj[v][x])
        .map(|x| {
            let w = if x == t {
                1.0 / p
            } else if adj[t][x] {
                1.0
            } else {
                1.0 / q
            };
            (x, w)
        })
        .collect();
    let total: f64 = w.iter().map(|x| x.1).sum();
    w.into_iter().map(|(x, wx)| (x, wx / total)).collect()
}

/// Second-order step law on every connected graph with at most 6 nodes.
pub fn walk_law(samples: usize) -> Outcome {
    let start = Instant::now();
    let classes = connected_graph_classes(6);
    let settings = [
        (1.0, 1.0, AliasMode::Lazy { capacity: 64 }),
        (0.5, 2.0, AliasMode::Precompute),
        (4.0, 0.25, AliasMode::Lazy { capacity: 3 }),
    ];
    let mut worst: f64 = 0.0;
    let mut arcs = 0usize;
    let mut ones_ok = true;
    let mut rng = rng(0x3A1C);
    for (n, edges) in &classes {
        let g = build(*n, edges);
        let mut adj = vec![vec![false; *n]; *n];
        for &(a, b) in edges {
            adj[a][b] = true;
            adj[b][a] = true;
        }
        for &(p, q, mode) in &settings {
            let params = WalkParams {
                p,
                q,
                alias_mode: mode,
                ..WalkParams::default()
            };
            let sampler = StepSampler::new(&g, &params);
            let mut cache = StepCache::default();
            for &(a, b) in edges {
                for (t, v) in [(a, b), (b, a)] {
                    let (tn, vn) = (NodeIdx(t as u32), NodeIdx(v as u32));
                    if p == 1.0 && q == 1.0 && transition_weights(&g, tn, vn, 1.0, 1.0).iter().any(|&w| w != 1.0) {
                        ones_ok = false;
                    }
                    let law = exact_law(&adj, t, v, p, q);
                    let mut counts = vec![0usize; *n];
                    for _ in 0..samples {
                        let x = sampler.step(Some(tn), vn, &mut rng, &mut cache).expect("v has neighbors");
                        counts[x.index()] += 1;
                    }
                    let mut tv = 0.0;
                    let mut covered = 0;
                    for &(x, px) in &law {
                        tv += (counts[x] as f64 / samples as f64 - px).abs();
                        covered += counts[x];
                    }
                    // Mass on non-neighbors counts fully against the sampler.
                    tv += (samples - covered) as f64 / samples as f64;
                    worst = worst.max(tv / 2.0);
                    arcs += 1;
                }
            }
        }
    }
    let pass = classes.len() == 142 && worst <= 0.01 && ones_ok;
    Outcome::new(
        pass,
        format!(
            "{} graph classes, {arcs} (arc, p, q) laws x {samples} steps, max TV {worst:.5}, p=q=1 all-ones {ones_ok}",
            classes.len()
        ),
        start,
    )
}

// ----------------------------------------------------------------- alias

pub fn alias_law(vectors: usize, draws: usize) -> Outcome {
    let start = Instant::now();
    let mut rng = rng(0xA11A5);
    let mut worst: f64 = 0.0;
    for _ in 0..vectors {
        let k = rng.gen_range(1..=32);
        let mut w: Vec<f64> = (0..k)
            .map(|_| if rng.gen_bool(0.15) { 0.0 } else { rng.gen_range(0.0..10.0) })
            .collect();
        if w.iter().all(|&x| x == 0.0) {
            w[0] = 1.0;
        }
        let total: f64 = w.iter().sum();
        let table = AliasTable::new(&w).expect("valid weights");
        let mut counts = vec![0usize; k];
        for _ in 0..draws {
            counts[table.sample(&mut rng)] += 1;
        }
        for (c, wi) in counts.iter().zip(&w) {
            worst = worst.max((*c as f64 / draws as f64 - wi / total).abs());
        }
    }
    Outcome::new(
        worst <= 0.003,
        format!("{vectors} vectors x {draws} draws, max |freq - weight| {worst:.5}"),
        start,
    )
}

// ------------------------------------------------------------- gradients

fn sigmoid(x: f64) -> f64 {
    1.0 / (1.0 + (-x).exp())
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

fn sgns_loss(input: &[f64], output: &[f64], dim: usize, c: usize, ctx: usize, negs: &[usize]) -> f64 {
    let u = &input[c * dim..(c + 1) * dim];
    let row = |k: usize| &output[k * dim..(k + 1) * dim];
    let mut l = -sigmoid(dot(u, row(ctx))).ln();
    for &k in negs {
        l -= sigmoid(-dot(u, row(k))).ln();
    }
    l
}

/// `||a - b|| / max(||a|| + ||b||, tiny)`.
fn rel_error(a: &[f64], b: &[f64]) -> f64 {
    let diff = a.iter().zip(b).map(|(x, y)| (x - y).powi(2)).sum::<f64>().sqrt();
    let norm = a.iter().map(|x| x * x).sum::<f64>().sqrt() + b.iter().map(|x| x * x).sum::<f64>().sqrt();
    if norm < 1e-12 {
        diff
    } else {
        diff / norm
    }
}

fn central_difference(params: &[f64], h: f64, mut f: impl FnMut(&[f64]) -> f64) -> Vec<f64> {
    let mut p = params.to_vec();
    (0..p.len())
        .map(|k| {
            let orig = p[k];
            p[k] = orig + h;
            let up = f(&p);
            p[k] = orig - h;
            let down = f(&p);
            p[k] = orig;
            (up - down) / (2.0 * h)
        })
        .collect()
}

/// Compares the update applied by one SGNS step (at lr 1, the update is the
/// negated gradient) against central differences of an independent loss.
pub fn sgns_gradcheck(configs: usize) -> Outcome {
    let start = Instant::now();
    let mut rng = rng(0x56A5);
    let h = 1e-5;
    let mut worst: f64 = 0.0;
    let mut loss_gap: f64 = 0.0;
    for _ in 0..configs {
        let n = rng.gen_range(2..8);
        let dim = rng.gen_range(1..12);
        let input: Vec<f64> = (0..n * dim).map(|_| rng.gen_range(-1.0..1.0)).collect();
        let output: Vec<f64> = (0..n * dim).map(|_| rng.gen_range(-1.0..1.0)).collect();
        let c = rng.gen_range(0..n);
        let ctx = rng.gen_range(0..n);
        let negs: Vec<usize> = (0..rng.gen_range(1..6)).map(|_| rng.gen_range(0..n)).collect();

        let mut emb = NodeEmbeddings::from_parts(dim, input.clone(), output.clone());
        let node = |k: usize| NodeIdx(k as u32);
        let neg_nodes: Vec<NodeIdx> = negs.iter().map(|&k| node(k)).collect();
        let loss = sgns_step(node(c), node(ctx), &neg_nodes, &mut emb, 1.0).expect("finite");
        loss_gap = loss_gap.max((loss - sgns_loss(&input, &output, dim, c, ctx, &negs)).abs());

        let mut analytic: Vec<f64> = input.iter().zip(emb.input_matrix()).map(|(o, n)| o - n).collect();
        analytic.extend(output.iter().zip(emb.output_matrix()).map(|(o, n)| o - n));
        let mut all = input.clone();
        all.extend_from_slice(&output);
        let numeric = central_difference(&all, h, |p| {
            let (i, o) = p.split_at(n * dim);
            sgns_loss(i, o, dim, c, ctx, &negs)
        });
        worst = worst.max(rel_error(&analytic, &numeric));
    }
    Outcome::new(
        worst <= 1e-4 && loss_gap < 1e-12,
        format!("{configs} configs, max rel err {worst:.2e}, max loss gap {loss_gap:.1e}"),
        start,
    )
}

struct HeadShape {
    input: usize,
    hidden: usize,
}

/// Pre-activations of the hidden layer, for kink avoidance.
fn hidden_pre(t: &HeadTensors, s: &HeadShape, x: &[f64]) -> Vec<f64> {
    (0..s.hidden)
        .map(|r| t.b1[r] + dot(&t.w1[r * s.input..(r + 1) * s.input], x))
        .collect()
}

fn head_loss(t: &HeadTensors, s: &HeadShape, xs: &[Vec<f64>], ys: &[StanceLabel], masks: &[Vec<f64>]) -> f64 {
    let mut total = 0.0;
    for (n, (x, y)) in xs.iter().zip(ys).enumerate() {
        let a: Vec<f64> = hidden_pre(t, s, x)
            .iter()
            .enumerate()
            .map(|(r, z)| z.max(0.0) * masks.get(n).map_or(1.0, |m| m[r]))
            .collect();
        let l0 = t.b2[0] + dot(&t.w2[..s.hidden], &a);
        let l1 = t.b2[1] + dot(&t.w2[s.hidden..], &a);
        let m = l0.max(l1);
        let lse = m + ((l0 - m).exp() + (l1 - m).exp()).ln();
        total += lse - if *y == StanceLabel::Favor { l0 } else { l1 };
    }
    total / xs.len() as f64
}

fn flatten(t: &HeadTensors) -> Vec<f64> {
    [&t.w1, &t.b1, &t.w2, &t.b2].iter().flat_map(|v| v.iter().copied()).collect()
}

fn unflatten(p: &[f64], s: &HeadShape) -> HeadTensors {
    let (a, rest) = p.split_at(s.hidden * s.input);
    let (b, rest) = rest.split_at(s.hidden);
    let (c, d) = rest.split_at(2 * s.hidden);
    HeadTensors {
        w1: a.to_vec(),
        b1: b.to_vec(),
        w2: c.to_vec(),
        b2: d.to_vec(),
    }
}

/// Head backprop (with and without dropout masks) against central
/// differences of an independent forward pass.
pub fn head_gradcheck(configs: usize) -> Outcome {
    let start = Instant::now();
    let mut rng = rng(0x4EAD);
    let h = 1e-5;
    let mut worst: f64 = 0.0;
    let mut loss_gap: f64 = 0.0;
    let mut done = 0;
    while done < configs {
        let s = HeadShape {
            input: rng.gen_range(1..10),
            hidden: rng.gen_range(1..8),
        };
        let mut g = |len: usize| -> Vec<f64> { (0..len).map(|_| rng.gen_range(-1.0..1.0)).collect() };
        let tensors = HeadTensors {
            w1: g(s.hidden * s.input),
            b1: g(s.hidden),
            w2: g(2 * s.hidden),
            b2: g(2),
        };
        let batch = rng.gen_range(1..6);
        let xs: Vec<Vec<f64>> = (0..batch).map(|_| (0..s.input).map(|_| rng.gen_range(-2.0..2.0)).collect()).collect();
        // Finite differences are invalid across a ReLU kink.
        if xs.iter().any(|x| hidden_pre(&tensors, &s, x).iter().any(|z| z.abs() < 1e-3)) {
            continue;
        }
        let ys: Vec<StanceLabel> = (0..batch)
            .map(|_| if rng.gen() { StanceLabel::Favor } else { StanceLabel::Against })
            .collect();
        let masks: Vec<Vec<f64>> = if done % 2 == 0 {
            Vec::new()
        } else {
            let keep: f64 = 0.8;
            (0..batch)
                .map(|_| (0..s.hidden).map(|_| if rng.gen_bool(keep) { 1.0 / keep } else { 0.0 }).collect())
                .collect()
        };

        let cfg = HeadParams {
            input_dim: s.input,
            hidden_dim: s.hidden,
            ..HeadParams::graph_default(s.input)
        };
        let head = TrainedHead::from_tensors(Modality::Likes, &cfg, tensors.clone()).expect("shapes");
        let refs: Vec<&[f64]> = xs.iter().map(Vec::as_slice).collect();
        let m = (!masks.is_empty()).then_some(masks.as_slice());
        let (loss, grads) = head.loss_and_grads(&refs, &ys, m);
        loss_gap = loss_gap.max((loss - head_loss(&tensors, &s, &xs, &ys, &masks)).abs());
        let numeric = central_difference(&flatten(&tensors), h, |p| head_loss(&unflatten(p, &s), &s, &xs, &ys, &masks));
        worst = worst.max(rel_error(&flatten(&grads), &numeric));
        done += 1;
    }
    Outcome::new(
        worst <= 1e-4 && loss_gap < 1e-12,
        format!("{configs} configs, max rel err {worst:.2e}, max loss gap {loss_gap:.1e}"),
        start,
    )
}

// --------------------------------------------------------------- metrics

/// Per-class F1 by explicit counting over the pairs.
pub fn naive_macro_f1(preds: &[StanceLabel], gold: &[StanceLabel]) -> f64 {
    let mut sum = 0.0;
    for class in [StanceLabel::Favor, StanceLabel::Against] {
        let (mut tp, mut fp, mut fneg) = (0u64, 0u64, 0u64);
        for (p, g) in preds.iter().zip(gold) {
            match (*p == class, *g == class) {
                (true, true) => tp += 1,
                (true, false) => fp += 1,
                (false, true) => fneg += 1,
                _ => {}
            }
        }
        if tp + fp + fneg > 0 {
            sum += 2.0 * tp as f64 / (2 * tp + fp + fneg) as f64;
        }
    }
    sum / 2.0
}

/// Gold-major `[[against->against, against->favor], [favor->against, favor->favor]]`.
pub fn labels_from_counts(counts: [[usize; 2]; 2]) -> (Vec<StanceLabel>, Vec<StanceLabel>) {
    use StanceLabel::*;
    let mut preds = Vec::new();
    let mut gold = Vec::new();
    for (g, row) in [Against, Favor].iter().zip(counts) {
        for (p, n) in [Against, Favor].iter().zip(row) {
            preds.extend(std::iter::repeat_n(*p, n));
            gold.extend(std::iter::repeat_n(*g, n));
        }
    }
    (preds, gold)
}

pub fn metric_oracle(cases: usize) -> Outcome {
    let start = Instant::now();
    let (p, g) = labels_from_counts([[985, 232], [340, 837]]);
    let aggregate = macro_f1(&p, &g).expect("non-empty");
    let mut rng = rng(0xF1);
    let mut mismatches = 0;
    for _ in 0..cases {
        let n = rng.gen_range(1..200);
        let bias: f64 = rng.gen();
        let draw = |rng: &mut ChaCha8Rng| if rng.gen_bool(bias) { StanceLabel::Favor } else { StanceLabel::Against };
        let preds: Vec<_> = (0..n).map(|_| draw(&mut rng)).collect();
        let gold: Vec<_> = (0..n).map(|_| draw(&mut rng)).collect();
        if macro_f1(&preds, &gold).unwrap() != naive_macro_f1(&preds, &gold) {
            mismatches += 1;
        }
    }
    Outcome::new(
        (aggregate - 0.7602).abs() <= 0.0005 && mismatches == 0,
        format!("aggregate matrix macro-F1 {aggregate:.5} (target 0.7602 +- 0.0005); {mismatches}/{cases} mismatches vs naive"),
        start,
    )
}

// -------------------------------------------------------------- ensemble

/// The voting rule restated from its definition over a fixed modality order.
pub fn brute_force_vote(votes: &[Vote], active: &[bool; 4]) -> Option<StanceLabel> {
    // (order position, label, confidence) for active, present votes.
    let order = [Modality::Text, Modality::Likes, Modality::Friends, Modality::Followers];
    let mut live = Vec::new();
    for v in votes {
        let pos = order.iter().position(|m| *m == v.modality).unwrap();
        if let (true, Some((l, c))) = (active[pos], v.prediction) {
            live.push((pos, l, c));
        }
    }
    if live.is_empty() {
        return None;
    }
    let mut tally = [0i32; 2];
    for &(_, l, _) in &live {
        tally[if l == StanceLabel::Favor { 0 } else { 1 }] += 1;
    }
    if tally[0] > tally[1] {
        return Some(StanceLabel::Favor);
    }
    if tally[1] > tally[0] {
        return Some(StanceLabel::Against);
    }
    let best = live.iter().map(|x| x.2).fold(0.0, f64::max);
    let top_labels: BTreeSet<usize> = live
        .iter()
        .filter(|x| x.2 == best)
        .map(|x| x.1.index())
        .collect();
    if top_labels.len() == 1 {
        return Some(StanceLabel::from_index(*top_labels.iter().next().unwrap()));
    }
    if let Some(t) = live.iter().find(|x| x.0 == 0) {
        return Some(t.1);
    }
    live.iter().filter(|x| x.2 == best).min_by_key(|x| x.0).map(|x| x.1)
}

pub fn all_configs() -> Vec<EnsembleConfig> {
    (1u32..16)
        .map(|mask| {
            let ms: Vec<Modality> = (0..4).filter(|k| mask >> k & 1 == 1).map(|k| Modality::ALL[k]).collect();
            EnsembleConfig::new(&ms).unwrap()
        })
        .collect()
}

fn active_mask(cfg: &EnsembleConfig) -> [bool; 4] {
    let order = [Modality::Text, Modality::Likes, Modality::Friends, Modality::Followers];
    order.map(|m| cfg.is_active(m))
}

pub fn ensemble_oracle(draws: usize) -> Outcome {
    let start = Instant::now();
    let mut rng = rng(0xE75E);
    let (mut cases, mut mismatches, mut perm_fail, mut mono_fail, mut single_fail) = (0, 0, 0, 0, 0);
    for cfg in all_configs() {
        let active = active_mask(&cfg);
        for presence in 0u32..16 {
            for labels in 0u32..16 {
                for d in 0..draws {
                    let mut votes: Vec<Vote> = Modality::ALL
                        .iter()
                        .enumerate()
                        .map(|(k, &m)| {
                            if presence >> k & 1 == 0 {
                                return Vote::absent(m);
                            }
                            let label = if labels >> k & 1 == 1 { StanceLabel::Favor } else { StanceLabel::Against };
                            // Half the draws use a coarse grid so confidence ties occur.
                            let conf = if d % 2 == 0 {
                                rng.gen_range(0.5..=1.0)
                            } else {
                                [0.6, 0.75, 0.9][rng.gen_range(0..3)]
                            };
                            Vote::new(m, label, conf)
                        })
                        .collect();
                    cases += 1;
                    let got = majority_vote(&votes, &cfg);
                    let want = brute_force_vote(&votes, &active);
                    match (&got, want) {
                        (Ok(a), Some(b)) if *a == b => {}
                        (Err(Error::NoVotes), None) => {}
                        _ => mismatches += 1,
                    }
                    let Ok(winner) = got else { continue };

                    votes.shuffle(&mut rng);
                    if majority_vote(&votes, &cfg).ok() != Some(winner) {
                        perm_fail += 1;
                    }
                    if let Some(v) = votes
                        .iter_mut()
                        .find(|v| cfg.is_active(v.modality) && v.prediction.is_some_and(|(l, _)| l != winner))
                    {
                        let (_, c) = v.prediction.unwrap();
                        v.prediction = Some((winner, c));
                        if majority_vote(&votes, &cfg).ok() != Some(winner) {
                            mono_fail += 1;
                        }
                    }
                    if cfg.len() == 1 {
                        let m = cfg.modalities().next().unwrap();
                        let own = votes.iter().find(|v| v.modality == m).and_then(|v| v.prediction).map(|p| p.0);
                        if own != Some(winner) {
                            single_fail += 1;
                        }
                    }
                }
            }
        }
    }
    let pass = mismatches + perm_fail + mono_fail + single_fail == 0;
    Outcome::new(
        pass,
        format!(
            "{cases} cases (15 configs x 16 presence x 16 labels x {draws} draws): {mismatches} oracle mismatches, \
             {perm_fail} permutation, {mono_fail} monotonicity, {single_fail} single-modality failures"
        ),
        start,
    )
}

// ---------------------------------------------------------------- splits

/// Three targets with uneven sizes and label mixes.
pub fn split_dataset(seed: u64) -> Dataset {
    let mut rng = rng(seed);
    let mut posts = Vec::new();
    for (t, (n, favor_rate)) in ["Alpha", "Beta", "Gamma"].iter().zip([(120, 0.3), (90, 0.5), (151, 0.8)]) {
        for _ in 0..n {
            let k = posts.len();
            posts.push(LabeledPost {
                post_id: format!("p{k}"),
                user_id: format!("u{}", rng.gen_range(0..40)),
                target: t.to_string(),
                stance: if rng.gen_bool(favor_rate) { StanceLabel::Favor } else { StanceLabel::Against },
                text: String::new(),
            });
        }
    }
    Dataset::new(posts).unwrap()
}

pub fn split_protocol(count: usize) -> Outcome {
    let start = Instant::now();
    let data = split_dataset(5);
    let partition = Partition::new(&data, 11);
    let targets = data.targets().to_vec();
    let mut rng = rng(0x5911);
    let (mut bad, mut nondeterministic) = (0, 0);
    let mut first_error = None;
    for _ in 0..count {
        let s = rng.gen_range(0..targets.len());
        let d = (s + rng.gen_range(1..targets.len())) % targets.len();
        let pool = partition.pool(&targets[d]).len();
        let n = rng.gen_range(0..=pool);
        let seed = rng.gen();
        let split = few_shot_split(&data, &partition, &targets[s], &targets[d], n, seed).unwrap();
        let shot_count = split.train.iter().filter(|&&i| data.post(i).target == targets[d]).count();
        let result = check_split(&data, &split).and_then(|_| {
            if shot_count == n && split.shots.len() == n {
                Ok(())
            } else {
                Err(format!("{shot_count} destination posts in train, expected {n}"))
            }
        });
        if let Err(e) = result {
            bad += 1;
            first_error.get_or_insert(e);
        }
        let again = few_shot_split(&data, &partition, &targets[s], &targets[d], n, seed).unwrap();
        if again.train != split.train || again.test != split.test {
            nondeterministic += 1;
        }
    }
    Outcome::new(
        bad == 0 && nondeterministic == 0,
        format!(
            "{count} splits: {bad} invalid, {nondeterministic} non-reproducible{}",
            first_error.map(|e| format!(" (first: {e})")).unwrap_or_default()
        ),
        start,
    )
}

// ------------------------------------------------------------------- cli

pub const BIN: &str = env!("CARGO_BIN_EXE_stance-graph");

/// Small enough that every command finishes in about a second.
pub const TINY_CONFIG: &str = r#"
[synth]
n_users = 90
n_posts = 360
mean_degree = 6.0
seed = 3

[walk]
walks_per_node = 4
walk_length = 20

[embed]
dim = 16
window = 4

[heads.text]
epochs = 3

[heads.graph]
epochs = 8

[harness]
seeds = [24, 524]
shots = [10, 20]
ablation_shots = 20
"#;

pub struct CliRun {
    pub status: std::process::ExitStatus,
    pub stdout: String,
    pub stderr: String,
}

pub fn cli(args: &[&str]) -> CliRun {
    let out = std::process::Command::new(BIN).args(args).output().expect("binary runs");
    CliRun {
        status: out.status,
        stdout: String::from_utf8_lossy(&out.stdout).into_owned(),
        stderr: String::from_utf8_lossy(&out.stderr).into_owned(),
    }
}

/// Writes the tiny config into `dir` and generates a corpus under
/// `dir/run`; returns the path of the generated `run.toml`.
pub fn tiny_corpus(dir: &std::path::Path) -> String {
    let cfg = dir.join("tiny.toml");
    std::fs::write(&cfg, TINY_CONFIG).unwrap();
    let out = dir.join("run");
    let r = cli(&["synth", "--config", cfg.to_str().unwrap(), "--out", out.to_str().unwrap()]);
    assert!(r.status.success(), "synth failed: {}", r.stderr);
    out.join("run.toml").to_str().unwrap().to_owned()
}

fn snapshot(dir: &std::path::Path) -> std::collections::BTreeMap<String, Vec<u8>> {
    let mut out = std::collections::BTreeMap::new();
    let mut stack = vec![dir.to_path_buf()];
    while let Some(d) = stack.pop() {
        for entry in std::fs::read_dir(&d).unwrap() {
            let path = entry.unwrap().path();
            if path.is_dir() {
                stack.push(path);
            } else {
                let key = path.strip_prefix(dir).unwrap().display().to_string();
                out.insert(key, std::fs::read(&path).unwrap());
            }
        }
    }
    out
}

/// Runs every command twice (with different worker counts) in deterministic
/// mode and compares every artifact byte for byte.
pub fn cli_determinism() -> Outcome {
    let start = Instant::now();
    let tmp = tempfile::tempdir().unwrap();
    let cfg_path = tmp.path().join("tiny.toml");
    std::fs::write(&cfg_path, TINY_CONFIG).unwrap();
    let cfg = cfg_path.to_str().unwrap();
    let out = tmp.path().join("run");
    let out_s = out.to_str().unwrap();
    let run_toml = out.join("run.toml");
    let run_cfg = run_toml.to_str().unwrap();

    let mut snapshots = Vec::new();
    let mut failures = Vec::new();
    for workers in ["1", "3"] {
        let common = ["--workers", workers, "--deterministic"];
        let steps: Vec<Vec<&str>> = vec![
            vec!["synth", "--config", cfg, "--out", out_s],
            vec!["embed-graph", "--config", run_cfg],
            vec!["train", "--config", run_cfg, "--source", "Trump", "--dest", "Sanders", "--shots", "20"],
            vec!["evaluate", "--config", run_cfg, "--source", "Trump", "--dest", "Sanders", "--shots", "20"],
            vec!["ablate", "--config", run_cfg],
            vec!["sweep-shots", "--config", run_cfg],
            vec!["report", "--config", run_cfg],
        ];
        for step in steps {
            let mut args = step.clone();
            args.extend_from_slice(&common);
            let r = cli(&args);
            if !r.status.success() {
                failures.push(format!("{} failed: {}", step[0], r.stderr.trim()));
            }
        }
        snapshots.push(snapshot(&out));
    }
    let (a, b) = (&snapshots[0], &snapshots[1]);
    let differing: Vec<&String> = a.keys().filter(|k| b.get(*k) != a.get(*k)).collect();
    let jsonl = a.keys().filter(|k| k.ends_with(".jsonl")).count();
    Outcome::new(
        failures.is_empty() && differing.is_empty() && a.len() == b.len() && jsonl == 3,
        format!(
            "7 commands x 2 runs (1 and 3 workers): {} artifacts, {jsonl} result files, {} differing{}{}",
            a.len(),
            differing.len(),
            if differing.is_empty() { String::new() } else { format!(" {differing:?}") },
            if failures.is_empty() { String::new() } else { format!("; {}", failures.join("; ")) }
        ),
        start,
    )
}
