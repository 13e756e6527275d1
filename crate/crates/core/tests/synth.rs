use std::collections::HashMap;

use stance_graph::harness::synth::{edge_probabilities, Community};
use stance_graph::harness::{synth_generate, SynthData, SynthParams};
use stance_graph::Error;

/// `(within edges / within pairs, across edges / across pairs)` per relation.
fn edge_rates(data: &SynthData) -> Vec<(f64, f64)> {
    let of: HashMap<&str, &Community> = data.communities.iter().map(|(u, c)| (u.as_str(), c)).collect();
    let mut sizes: HashMap<&Community, usize> = HashMap::new();
    for (_, c) in &data.communities {
        *sizes.entry(c).or_default() += 1;
    }
    let n = data.communities.len();
    let within_pairs: usize = sizes.values().map(|s| s * (s - 1) / 2).sum();
    let across_pairs = n * (n - 1) / 2 - within_pairs;
    data.edges
        .iter()
        .map(|(_, list)| {
            let within = list.iter().filter(|(a, b)| of[a.as_str()] == of[b.as_str()]).count();
            let across = list.len() - within;
            (within as f64 / within_pairs as f64, across as f64 / across_pairs as f64)
        })
        .collect()
}

#[test]
fn no_homophily_gives_equal_edge_rates() {
    let data = synth_generate(&SynthParams {
        homophily: 0.5,
        n_users: 600,
        mean_degree: 20.0,
        ..SynthParams::default()
    })
    .unwrap();
    for (within, across) in edge_rates(&data) {
        assert!((within / across - 1.0).abs() <= 0.10, "within {within:.5} across {across:.5}");
    }
}

#[test]
fn full_homophily_has_no_cross_edges() {
    let data = synth_generate(&SynthParams {
        homophily: 1.0,
        n_users: 120,
        n_posts: 600,
        mean_degree: 8.0,
        ..SynthParams::default()
    })
    .unwrap();
    for (_, across) in edge_rates(&data) {
        assert_eq!(across, 0.0);
    }
}

#[test]
fn mean_degree_is_calibrated() {
    let data = synth_generate(&SynthParams::default()).unwrap();
    for (_, list) in &data.edges {
        let degree = 2.0 * list.len() as f64 / 600.0;
        assert!((degree - 20.0).abs() < 1.0, "mean degree {degree:.2}");
    }
}

#[test]
fn default_label_mix_follows_source_statistics() {
    let p = SynthParams::default();
    assert_eq!(p.label_mix, [(519, 947), (702, 716), (776, 553)]);
    let data = synth_generate(&p).unwrap();
    let total: usize = p.label_mix.iter().map(|(f, a)| f + a).sum();
    for (t, &(f, a)) in p.targets.iter().zip(&p.label_mix) {
        let (cf, ca) = data.dataset.label_counts(t);
        let ef = f as f64 * p.n_posts as f64 / total as f64;
        let ea = a as f64 * p.n_posts as f64 / total as f64;
        assert!((cf as f64 - ef).abs() < 1.0 && (ca as f64 - ea).abs() < 1.0, "{t}: {cf}/{ca}");
    }
}

#[test]
fn infeasible_degree_is_an_error() {
    assert!(matches!(edge_probabilities(&[10, 10], 0.9, 50.0), Err(Error::Infeasible(_))));
}
