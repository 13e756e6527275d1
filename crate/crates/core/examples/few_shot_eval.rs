// Few-shot cross-target evaluation on synthetic data, seed averaged.

use stance_graph::embed::SgnsParams;
use stance_graph::ensemble::EnsembleConfig;
use stance_graph::graph::{EdgeList, GraphBundle, Relation};
use stance_graph::harness::{
    embed_bundle, few_shot_split, synth_generate, Experiment, FeatureStore, HeadSettings, Partition, SynthParams,
};
use stance_graph::walk::WalkParams;
use stance_graph::Modality;

pub fn run_example() -> Result<(), Box<dyn std::error::Error>> {
    let data = synth_generate(&SynthParams {
        n_users: 150,
        n_posts: 1500,
        mean_degree: 10.0,
        seed: 2,
        ..SynthParams::default()
    })?;
    let lists: Vec<(Relation, &EdgeList)> = data.edges.iter().map(|(r, l)| (*r, l)).collect();
    let bundle = GraphBundle::build(data.dataset.users(), &lists, |_| true);
    let walks = WalkParams { walks_per_node: 5, walk_length: 30, ..WalkParams::default() };
    let sgns = SgnsParams { dim: 32, window: 5, ..SgnsParams::default() };
    let features = FeatureStore::new(data.docs.clone(), embed_bundle(&bundle, &walks, &sgns)?);

    let partition = Partition::new(&data.dataset, 0);
    let split = few_shot_split(&data.dataset, &partition, "Donald Trump", "Bernie Sanders", 100, 24)?;
    println!("train {} posts ({} shots), test {} posts", split.train.len(), split.shots.len(), split.test.len());

    let exp = Experiment::new(&data.dataset, &features, &partition, HeadSettings::default());
    let configs = [EnsembleConfig::single(Modality::Text), EnsembleConfig::single(Modality::Likes), EnsembleConfig::full()];
    for cell in exp.run("Donald Trump", "Bernie Sanders", 100, &configs, &[24, 524])? {
        println!(
            "{:<12} macro-F1 {:.4} (seeds {:?}: min {:.4}, max {:.4})",
            cell.config.to_string(),
            cell.macro_f1,
            cell.seeds,
            cell.min_macro_f1,
            cell.max_macro_f1
        );
    }
    Ok(())
}

#[allow(dead_code)]
fn main() {
    run_example().unwrap();
}
