// File-driven runs: a TOML config, a synthetic corpus and an evaluation,
// each leaving a manifest with the resolved config and input hashes.

use stance_graph::config::RunConfig;
use stance_graph::pipeline;

const CONFIG: &str = r#"
[synth]
n_users = 90
n_posts = 360
mean_degree = 6.0

[walk]
walks_per_node = 4
walk_length = 20

[embed]
dim = 16

[heads.text]
epochs = 3

[heads.graph]
epochs = 8

[harness]
seeds = [24]
"#;

pub fn run_example() -> Result<(), Box<dyn std::error::Error>> {
    let dir = tempfile::tempdir()?;
    let mut cfg = RunConfig::parse(CONFIG)?;
    cfg.paths.output = dir.path().to_path_buf();
    cfg.validate()?;
    pipeline::synth(&cfg)?;

    // synth leaves a run.toml that points at the generated files.
    let run = RunConfig::load(&dir.path().join("run.toml"))?;
    let out = pipeline::evaluate(&run, "Trump", "Biden", 20)?;
    for cell in &out.cells {
        println!("{} -> {}: macro-F1 {:.4}", cell.source, cell.destination, cell.macro_f1);
    }
    for input in &out.manifest.inputs {
        println!("input {} sha256 {}", input.path, &input.sha256[..16]);
    }
    Ok(())
}

#[allow(dead_code)]
fn main() {
    run_example().unwrap();
}
