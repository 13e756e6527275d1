//! Synthetic stance data with homophilous user networks.
//!
//! Users are split into (target, stance) communities. For each relation,
//! every user pair is linked independently with probability `p_in` inside a
//! community and `p_out = p_in (1 - h) / max(h, eps)` across communities,
//! with `p_in` calibrated to the requested mean degree. Post text carries a
//! stance word with probability `text_signal`.

use std::collections::BTreeMap;

use rand::seq::SliceRandom;
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::graph::{EdgeList, Relation};
use crate::harness::dataset::{Dataset, LabeledPost};
use crate::harness::split::largest_remainder;
use crate::seeding;
use crate::stance::StanceLabel;
use crate::text::{DocEmbeddings, HashEncoder};

const EPS: f64 = 1e-9;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SynthParams {
    pub n_users: usize,
    pub n_posts: usize,
    pub targets: Vec<String>,
    /// `(favor, against)` counts per target; rescaled to `n_posts`.
    pub label_mix: Vec<(usize, usize)>,
    pub homophily: f64,
    /// Optional per-relation override of `homophily`.
    pub relation_homophily: BTreeMap<Relation, f64>,
    pub mean_degree: f64,
    /// Probability that a post contains a word from its stance lexicon.
    pub text_signal: f64,
    pub seed: u64,
    pub encoder: HashEncoder,
}

impl Default for SynthParams {
    fn default() -> Self {
        SynthParams {
            n_users: 600,
            n_posts: 3000,
            targets: vec!["Donald Trump".into(), "Joe Biden".into(), "Bernie Sanders".into()],
            label_mix: vec![(519, 947), (702, 716), (776, 553)],
            homophily: 0.9,
            relation_homophily: BTreeMap::new(),
            mean_degree: 20.0,
            text_signal: 0.7,
            seed: 0,
            encoder: HashEncoder::default(),
        }
    }
}

impl SynthParams {
    pub fn validate(&self, prefix: &str) -> Result<()> {
        let field = |f: &str| format!("{prefix}{f}");
        if self.n_users < 30 {
            return Err(Error::param(field("n_users"), "must be >= 30"));
        }
        if self.targets.len() != 3 {
            return Err(Error::param(field("targets"), "exactly 3 targets required"));
        }
        if self.targets.iter().any(String::is_empty) {
            return Err(Error::param(field("targets"), "target names must be non-empty"));
        }
        if self.label_mix.len() != self.targets.len() {
            return Err(Error::param(field("label_mix"), "one (favor, against) pair per target"));
        }
        if self.label_mix.iter().any(|&(f, a)| f + a == 0) {
            return Err(Error::param(field("label_mix"), "every target needs posts"));
        }
        if self.n_posts < 6 {
            return Err(Error::param(field("n_posts"), "must be >= 6"));
        }
        for (name, h) in std::iter::once(("homophily".to_owned(), self.homophily))
            .chain(self.relation_homophily.iter().map(|(r, h)| (format!("relation_homophily.{r}"), *h)))
        {
            if !(0.0..=1.0).contains(&h) {
                return Err(Error::param(field(&name), "must be in [0, 1]"));
            }
        }
        if !(self.mean_degree > 0.0 && self.mean_degree.is_finite()) {
            return Err(Error::param(field("mean_degree"), "must be > 0"));
        }
        if !(0.0..=1.0).contains(&self.text_signal) {
            return Err(Error::param(field("text_signal"), "must be in [0, 1]"));
        }
        self.encoder.validate(&field("encoder."))
    }

    pub fn homophily_for(&self, r: Relation) -> f64 {
        self.relation_homophily.get(&r).copied().unwrap_or(self.homophily)
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Community {
    pub target: String,
    pub stance: StanceLabel,
}

#[derive(Clone, Debug)]
pub struct SynthData {
    pub dataset: Dataset,
    pub edges: Vec<(Relation, EdgeList)>,
    /// `(user_id, community)` for every user.
    pub communities: Vec<(String, Community)>,
    pub docs: DocEmbeddings,
    /// Realized `(p_in, p_out)` per relation.
    pub edge_probs: Vec<(Relation, f64, f64)>,
}

/// `(p_in, p_out)` for community sizes `sizes` so that the expected mean
/// degree is `mean_degree`.
pub fn edge_probabilities(sizes: &[usize], homophily: f64, mean_degree: f64) -> Result<(f64, f64)> {
    let n: usize = sizes.iter().sum();
    let within: f64 = sizes.iter().map(|&s| (s * s.saturating_sub(1)) as f64 / 2.0).sum();
    let all = (n * (n - 1)) as f64 / 2.0;
    let across = all - within;
    let ratio = (1.0 - homophily) / homophily.max(EPS);
    // Expected edges = p_in (within + ratio * across) = n * mean_degree / 2.
    let target_edges = n as f64 * mean_degree / 2.0;
    let p_in = target_edges / (within + ratio * across);
    let p_out = p_in * ratio;
    if p_in > 1.0 || p_out > 1.0 {
        return Err(Error::Infeasible(format!(
            "mean degree {mean_degree} needs p_in={p_in:.4}, p_out={p_out:.4} with {n} users"
        )));
    }
    Ok((p_in, p_out))
}

const FAVOR_WORDS: [&str; 8] = ["support", "love", "proud", "great", "hope", "win", "yes", "best"];
const AGAINST_WORDS: [&str; 8] = ["against", "never", "fail", "corrupt", "lies", "worst", "stop", "shame"];
const NEUTRAL_WORDS: [&str; 32] = [
    "today", "debate", "news", "people", "campaign", "rally", "speech", "policy", "vote", "election", "watch",
    "tonight", "country", "america", "said", "about", "live", "state", "primary", "poll", "media", "town", "hall",
    "plan", "health", "jobs", "economy", "week", "again", "just", "time", "says",
];

fn make_text<R: Rng>(rng: &mut R, target: &str, stance: StanceLabel, signal: f64) -> String {
    let surname = target.rsplit(' ').next().unwrap_or(target);
    let mut words: Vec<String> = (0..rng.gen_range(5..9))
        .map(|_| NEUTRAL_WORDS[rng.gen_range(0..NEUTRAL_WORDS.len())].to_owned())
        .collect();
    let at = rng.gen_range(0..=words.len());
    words.insert(at, format!("#{surname}"));
    if rng.gen::<f64>() < signal {
        let lex: &[&str] = match stance {
            StanceLabel::Favor => &FAVOR_WORDS,
            StanceLabel::Against => &AGAINST_WORDS,
        };
        let at = rng.gen_range(0..=words.len());
        words.insert(at, lex[rng.gen_range(0..lex.len())].to_owned());
    }
    words.join(" ")
}

pub fn synth_generate(params: &SynthParams) -> Result<SynthData> {
    params.validate("synth.")?;
    let cells: Vec<(usize, StanceLabel)> = (0..params.targets.len())
        .flat_map(|t| StanceLabel::ALL.map(|s| (t, s)))
        .collect();
    let weights: Vec<usize> = cells
        .iter()
        .map(|&(t, s)| match s {
            StanceLabel::Favor => params.label_mix[t].0,
            StanceLabel::Against => params.label_mix[t].1,
        })
        .collect();
    let post_counts = largest_remainder(params.n_posts, &weights);
    let mut user_counts = largest_remainder(params.n_users, &weights);
    // Every community with posts needs at least one user.
    for c in 0..cells.len() {
        if post_counts[c] > 0 && user_counts[c] == 0 {
            let donor = (0..cells.len()).max_by_key(|&k| user_counts[k]).expect("non-empty");
            user_counts[donor] -= 1;
            user_counts[c] += 1;
        }
    }

    let width = params.n_users.to_string().len();
    let mut communities = Vec::with_capacity(params.n_users);
    let mut member_of = Vec::with_capacity(params.n_users);
    let mut members: Vec<Vec<usize>> = vec![Vec::new(); cells.len()];
    for (c, &count) in user_counts.iter().enumerate() {
        for _ in 0..count {
            let u = communities.len();
            members[c].push(u);
            member_of.push(c);
            communities.push((
                format!("u{u:0width$}"),
                Community {
                    target: params.targets[cells[c].0].clone(),
                    stance: cells[c].1,
                },
            ));
        }
    }

    // Posts: round-robin over a shuffled member list so activity is balanced.
    let mut rng = seeding::stream(params.seed, &[0x9057]);
    let mut posts = Vec::with_capacity(params.n_posts);
    for (c, &count) in post_counts.iter().enumerate() {
        let mut who = members[c].clone();
        who.shuffle(&mut rng);
        let (t, stance) = cells[c];
        for k in 0..count {
            let user = who[k % who.len()];
            let target = &params.targets[t];
            posts.push(LabeledPost {
                post_id: String::new(),
                user_id: communities[user].0.clone(),
                target: target.clone(),
                stance,
                text: make_text(&mut rng, target, stance, params.text_signal),
            });
        }
    }
    posts.shuffle(&mut rng);
    let pw = params.n_posts.to_string().len();
    for (i, p) in posts.iter_mut().enumerate() {
        p.post_id = format!("p{i:0pw$}");
    }
    let dataset = Dataset::new(posts)?;

    let n = params.n_users;
    let mut edges = Vec::new();
    let mut edge_probs = Vec::new();
    for r in Relation::ALL {
        let (p_in, p_out) = edge_probabilities(&user_counts, params.homophily_for(r), params.mean_degree)?;
        let mut rng = seeding::stream(params.seed, &[0xED6E, r as u64]);
        let mut list = EdgeList::new();
        for a in 0..n {
            for b in a + 1..n {
                let p = if member_of[a] == member_of[b] { p_in } else { p_out };
                if rng.gen::<f64>() < p {
                    let (s, d) = if rng.gen::<bool>() { (a, b) } else { (b, a) };
                    list.push((communities[s].0.clone(), communities[d].0.clone()));
                }
            }
        }
        edges.push((r, list));
        edge_probs.push((r, p_in, p_out));
    }

    let docs = DocEmbeddings::encode(
        dataset
            .posts()
            .iter()
            .map(|p| (p.post_id.as_str(), p.target.as_str(), p.text.as_str())),
        &params.encoder,
    )?;

    Ok(SynthData {
        dataset,
        edges,
        communities,
        docs,
        edge_probs,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::collections::HashMap;

    fn small(h: f64) -> SynthParams {
        SynthParams {
            n_users: 120,
            n_posts: 600,
            homophily: h,
            mean_degree: 10.0,
            encoder: HashEncoder { dim: 32, ..Default::default() },
            ..Default::default()
        }
    }

    fn cross_edges(data: &SynthData) -> usize {
        let comm: HashMap<&str, &Community> = data.communities.iter().map(|(u, c)| (u.as_str(), c)).collect();
        data.edges
            .iter()
            .flat_map(|(_, l)| l)
            .filter(|(a, b)| comm[a.as_str()] != comm[b.as_str()])
            .count()
    }

    #[test]
    fn full_homophily_has_no_cross_edges() {
        let data = synth_generate(&small(1.0)).unwrap();
        assert_eq!(cross_edges(&data), 0);
        assert!(data.edges.iter().all(|(_, l)| !l.is_empty()));
    }

    #[test]
    fn label_mix_is_rescaled() {
        let data = synth_generate(&small(0.9)).unwrap();
        let d = &data.dataset;
        assert_eq!(d.len(), 600);
        let want = largest_remainder(600, &[519, 947, 702, 716, 776, 553]);
        let got: Vec<usize> = ["Donald Trump", "Joe Biden", "Bernie Sanders"]
            .iter()
            .flat_map(|t| {
                let (f, a) = d.label_counts(t);
                [f, a]
            })
            .collect();
        assert_eq!(got, want);
    }

    #[test]
    fn deterministic_per_seed() {
        let a = synth_generate(&small(0.8)).unwrap();
        let b = synth_generate(&small(0.8)).unwrap();
        assert_eq!(a.dataset, b.dataset);
        assert_eq!(a.edges, b.edges);
        let c = synth_generate(&SynthParams { seed: 1, ..small(0.8) }).unwrap();
        assert_ne!(a.edges, c.edges);
    }

    #[test]
    fn infeasible_degree() {
        assert!(matches!(
            edge_probabilities(&[10, 10, 10], 0.9, 100.0),
            Err(Error::Infeasible(_))
        ));
        let p = SynthParams { mean_degree: 500.0, ..small(0.5) };
        assert!(synth_generate(&p).is_err());
    }

    #[test]
    fn too_few_users() {
        assert!(synth_generate(&SynthParams { n_users: 29, ..small(0.5) }).is_err());
    }

    #[test]
    fn edge_probabilities_hit_mean_degree() {
        let sizes = [50, 50, 100];
        let (p_in, p_out) = edge_probabilities(&sizes, 0.7, 12.0).unwrap();
        let within: f64 = sizes.iter().map(|&s| (s * (s - 1)) as f64 / 2.0).sum();
        let across = 200.0 * 199.0 / 2.0 - within;
        let mean_deg = 2.0 * (p_in * within + p_out * across) / 200.0;
        assert!((mean_deg - 12.0).abs() < 1e-9);
        assert!((p_out / p_in - 0.3 / 0.7).abs() < 1e-12);
    }
}
