// Generate a homophilous synthetic corpus and export it for graph viewers.

use stance_graph::graph::{EdgeList, GraphBundle, Relation};
use stance_graph::harness::output::export_graph_csv;
use stance_graph::harness::{synth_generate, SynthParams};

pub fn run_example() -> Result<(), Box<dyn std::error::Error>> {
    let params = SynthParams {
        n_users: 150,
        n_posts: 600,
        mean_degree: 10.0,
        homophily: 0.9,
        seed: 1,
        ..SynthParams::default()
    };
    let data = synth_generate(&params)?;
    for t in data.dataset.targets() {
        let (f, a) = data.dataset.label_counts(t);
        println!("{t}: {f} favor, {a} against");
    }
    for (r, p_in, p_out) in &data.edge_probs {
        println!("{r}: p_in {p_in:.4}, p_out {p_out:.4}");
    }
    println!("example post: {}", data.dataset.post(0).text);

    let lists: Vec<(Relation, &EdgeList)> = data.edges.iter().map(|(r, l)| (*r, l)).collect();
    let bundle = GraphBundle::build(data.dataset.users(), &lists, |_| true);
    let dir = tempfile::tempdir()?;
    export_graph_csv(&bundle, &data.communities, dir.path())?;
    let nodes = std::fs::read_to_string(dir.path().join("nodes.csv"))?;
    println!("nodes.csv starts with:\n{}", nodes.lines().take(3).collect::<Vec<_>>().join("\n"));
    Ok(())
}

#[allow(dead_code)]
fn main() {
    run_example().unwrap();
}
