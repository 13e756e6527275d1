//! File-driven commands behind the CLI. Each command writes its artifacts
//! under the configured output directory together with a manifest holding the
//! resolved config and SHA-256 hashes of every input file.

use std::collections::BTreeMap;
use std::fs;
use std::io::Read;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::config::RunConfig;
use crate::embedding_io::EmbeddingTable;
use crate::ensemble::{ablation_grid, EnsembleConfig};
use crate::error::{Error, Result};
use crate::graph::{read_edge_list, write_edge_list, EdgeList, GraphBundle, Relation};
use crate::harness::features::embed_relation;
use crate::harness::output::{export_graph_csv, read_results_jsonl, write_results_csv, write_results_jsonl};
use crate::harness::{
    few_shot_split, ordered_pairs, read_posts, synth_generate, write_posts, CellResult, Dataset, Experiment,
    FeatureStore, Partition, ResultsTable, SynthParams,
};
use crate::stance::Modality;
use crate::text::{load_doc_embeddings, DocEmbeddings};
use crate::walk::generate_walks;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FileHash {
    pub path: String,
    pub sha256: String,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Manifest {
    pub command: String,
    /// Command-specific flags (source, destination, shots, ...).
    pub args: BTreeMap<String, String>,
    pub config: RunConfig,
    pub inputs: Vec<FileHash>,
    pub outputs: Vec<String>,
}

pub fn sha256_file(path: &Path) -> Result<String> {
    let mut file = fs::File::open(path).map_err(|e| Error::io(path, e))?;
    let mut hasher = Sha256::new();
    let mut buf = vec![0u8; 1 << 16];
    loop {
        let n = file.read(&mut buf).map_err(|e| Error::io(path, e))?;
        if n == 0 {
            break;
        }
        hasher.update(&buf[..n]);
    }
    Ok(hasher
        .finalize()
        .iter()
        .map(|b| format!("{b:02x}"))
        .collect())
}

fn hash_inputs(paths: &[PathBuf]) -> Result<Vec<FileHash>> {
    paths
        .iter()
        .map(|p| {
            Ok(FileHash {
                path: p.display().to_string(),
                sha256: sha256_file(p)?,
            })
        })
        .collect()
}

fn create_dir(dir: &Path) -> Result<()> {
    fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))
}

fn write_json<T: Serialize>(value: &T, path: &Path) -> Result<()> {
    let mut text = serde_json::to_string_pretty(value)?;
    text.push('\n');
    fs::write(path, text).map_err(|e| Error::io(path, e))
}

/// What a command produced; the manifest is already on disk.
#[derive(Clone, Debug)]
pub struct CommandOutput {
    pub manifest: Manifest,
    pub manifest_path: PathBuf,
    pub cells: Vec<CellResult>,
}

fn finish(
    cfg: &RunConfig,
    command: &str,
    args: BTreeMap<String, String>,
    inputs: &[PathBuf],
    outputs: Vec<PathBuf>,
    cells: Vec<CellResult>,
) -> Result<CommandOutput> {
    let out = &cfg.paths.output;
    let rel = |p: &Path| p.strip_prefix(out).unwrap_or(p).display().to_string();
    let manifest = Manifest {
        command: command.to_owned(),
        args,
        config: cfg.clone(),
        inputs: hash_inputs(inputs)?,
        outputs: outputs.iter().map(|p| rel(p)).collect(),
    };
    let manifest_path = out.join(format!("manifest.{command}.json"));
    write_json(&manifest, &manifest_path)?;
    Ok(CommandOutput {
        manifest,
        manifest_path,
        cells,
    })
}

/// Posts plus the three relation graphs, as read from the configured files.
pub struct Inputs {
    pub dataset: Dataset,
    pub bundle: GraphBundle,
    pub files: Vec<PathBuf>,
}

fn required<'a>(p: Option<&'a Path>, field: &str) -> Result<&'a Path> {
    p.ok_or_else(|| Error::param(field, "required"))
}

pub fn load_inputs(cfg: &RunConfig) -> Result<Inputs> {
    cfg.validate_inputs()?;
    let posts_path = required(cfg.paths.posts.as_deref(), "paths.posts")?;
    let dataset = read_posts(posts_path)?;
    let mut files = vec![posts_path.to_path_buf()];
    let mut lists: Vec<(Relation, EdgeList)> = Vec::new();
    for r in Relation::ALL {
        let path = required(cfg.paths.edges(r), &format!("paths.{r}"))?;
        lists.push((r, read_edge_list(path)?));
        files.push(path.to_path_buf());
    }
    let refs: Vec<(Relation, &EdgeList)> = lists.iter().map(|(r, l)| (*r, l)).collect();
    let bundle = GraphBundle::build(dataset.users(), &refs, |r| cfg.graph.is_undirected(r));
    for g in bundle.graphs() {
        log::info!("{}: {} nodes, {} edges", g.relation(), g.node_count(), g.edge_count());
    }
    Ok(Inputs { dataset, bundle, files })
}

/// Document vectors from the configured file, or the hashing encoder.
fn doc_features(cfg: &RunConfig, inputs: &mut Inputs) -> Result<DocEmbeddings> {
    match &cfg.paths.doc_embeddings {
        Some(path) => {
            inputs.files.push(path.clone());
            let ids = inputs.dataset.posts().iter().map(|p| p.post_id.as_str());
            load_doc_embeddings(path, ids, None)
        }
        None => DocEmbeddings::encode(
            inputs
                .dataset
                .posts()
                .iter()
                .map(|p| (p.post_id.as_str(), p.target.as_str(), p.text.as_str())),
            &cfg.text,
        ),
    }
}

fn graph_features(cfg: &RunConfig, inputs: &mut Inputs) -> Result<Vec<(Relation, EmbeddingTable)>> {
    match &cfg.paths.graph_embeddings {
        Some(dir) => Relation::ALL
            .iter()
            .map(|&r| {
                let path = dir.join(format!("{r}.emb"));
                let table = EmbeddingTable::read(&path)?;
                inputs.files.push(path);
                Ok((r, table))
            })
            .collect(),
        None => inputs
            .bundle
            .graphs()
            .iter()
            .map(|g| Ok((g.relation(), embed_relation(g, &inputs.bundle, &cfg.walk, &cfg.embed)?)))
            .collect(),
    }
}

pub fn load_features(cfg: &RunConfig, inputs: &mut Inputs) -> Result<FeatureStore> {
    let docs = doc_features(cfg, inputs)?;
    let graphs = graph_features(cfg, inputs)?;
    Ok(FeatureStore::new(docs, graphs))
}

/// Writes a synthetic corpus plus a ready-to-use `run.toml` that points at it.
pub fn synth(cfg: &RunConfig) -> Result<CommandOutput> {
    cfg.validate()?;
    let out = &cfg.paths.output;
    let data_dir = out.join("data");
    create_dir(&data_dir)?;
    let params = SynthParams {
        encoder: cfg.text.clone(),
        ..cfg.synth.clone()
    };
    let data = synth_generate(&params)?;
    for (r, p_in, p_out) in &data.edge_probs {
        log::info!("{r}: p_in {p_in:.5}, p_out {p_out:.5}");
    }

    let mut outputs = Vec::new();
    let posts = data_dir.join("posts.tsv");
    write_posts(&data.dataset, &posts)?;
    outputs.push(posts);

    let refs: Vec<(Relation, &EdgeList)> = data.edges.iter().map(|(r, l)| (*r, l)).collect();
    let users: Vec<&str> = data.communities.iter().map(|(u, _)| u.as_str()).collect();
    let bundle = GraphBundle::build(users, &refs, |r| cfg.graph.is_undirected(r));
    for g in bundle.graphs() {
        let path = data_dir.join(format!("{}.tsv", g.relation()));
        write_edge_list(g, bundle.interner(), &path)?;
        outputs.push(path);
    }
    let docs = data_dir.join("docs.emb");
    data.docs.table().write_text(&docs)?;
    outputs.push(docs);

    let graph_dir = out.join("graph");
    export_graph_csv(&bundle, &data.communities, &graph_dir)?;
    outputs.push(graph_dir.join("nodes.csv"));
    outputs.push(graph_dir.join("edges.csv"));

    let mut run = cfg.clone();
    run.paths = crate::config::Paths {
        posts: Some("data/posts.tsv".into()),
        followers: Some("data/followers.tsv".into()),
        friends: Some("data/friends.tsv".into()),
        likes: Some("data/likes.tsv".into()),
        doc_embeddings: Some("data/docs.emb".into()),
        graph_embeddings: None,
        output: ".".into(),
    };
    let run_path = out.join("run.toml");
    fs::write(&run_path, run.to_toml()).map_err(|e| Error::io(&run_path, e))?;
    outputs.push(run_path);

    finish(cfg, "synth", BTreeMap::new(), &[], outputs, Vec::new())
}

/// Trains node embeddings for every relation and writes `<relation>.emb`.
pub fn embed_graph(cfg: &RunConfig) -> Result<CommandOutput> {
    cfg.validate()?;
    let inputs = load_inputs(cfg)?;
    let dir = cfg.paths.output.join("embeddings");
    create_dir(&dir)?;
    let mut outputs = Vec::new();
    for g in inputs.bundle.graphs() {
        let r = g.relation();
        let table = embed_relation(g, &inputs.bundle, &cfg.walk, &cfg.embed)?;
        let path = dir.join(format!("{r}.emb"));
        table.write_text(&path)?;
        outputs.push(path);
        if cfg.output.binary_embeddings {
            let path = dir.join(format!("{r}.bin"));
            table.write_binary(&path)?;
            outputs.push(path);
        }
        if cfg.output.dump_walks {
            // Same stream as embed_relation uses.
            let walk = crate::walk::WalkParams {
                seed: crate::seeding::derive_seed(cfg.walk.seed, &[r as u64]),
                ..cfg.walk.clone()
            };
            let path = dir.join(format!("{r}.walks"));
            generate_walks(g, &walk)?.write_text(inputs.bundle.interner(), &path)?;
            outputs.push(path);
        }
    }
    finish(cfg, "embed-graph", BTreeMap::new(), &inputs.files, outputs, Vec::new())
}

fn resolve_pair(dataset: &Dataset, source: &str, dest: &str) -> Result<(String, String)> {
    let s = dataset.resolve_target(source)?.to_owned();
    let d = dataset.resolve_target(dest)?.to_owned();
    if s == d {
        return Err(Error::param("destination", "must differ from source"));
    }
    Ok((s, d))
}

fn configured_pairs(cfg: &RunConfig, dataset: &Dataset) -> Result<Vec<(String, String)>> {
    if cfg.harness.pairs.is_empty() {
        return Ok(ordered_pairs(dataset.targets()));
    }
    cfg.harness
        .pairs
        .iter()
        .map(|(s, d)| resolve_pair(dataset, s, d))
        .collect()
}

fn strip_traces(cfg: &RunConfig, cells: &mut [CellResult]) {
    if !cfg.output.vote_traces {
        for c in cells {
            for r in &mut c.per_seed {
                r.predictions.clear();
            }
        }
    }
}

fn write_results(cfg: &RunConfig, stem: &str, cells: &[CellResult]) -> Result<Vec<PathBuf>> {
    let out = &cfg.paths.output;
    let jsonl = out.join(format!("{stem}.jsonl"));
    let csv = out.join(format!("{stem}.csv"));
    write_results_jsonl(cells, &jsonl)?;
    write_results_csv(cells, &csv)?;
    Ok(vec![jsonl, csv])
}

/// Trains the four heads on one split and saves them as checkpoints.
pub fn train(cfg: &RunConfig, source: &str, dest: &str, shots: usize, seed: u64) -> Result<CommandOutput> {
    cfg.validate()?;
    let mut inputs = load_inputs(cfg)?;
    let features = load_features(cfg, &mut inputs)?;
    let (s, d) = resolve_pair(&inputs.dataset, source, dest)?;
    let partition = Partition::new(&inputs.dataset, cfg.harness.partition_seed);
    let exp = Experiment::new(&inputs.dataset, &features, &partition, cfg.heads.clone());
    let split = few_shot_split(&inputs.dataset, &partition, &s, &d, shots, seed)?;

    let dir = cfg.paths.output.join("heads");
    create_dir(&dir)?;
    let mut outputs = Vec::new();
    for m in Modality::ALL {
        if let Some(head) = exp.train_head(&split, m)? {
            let path = dir.join(format!("{}.head", m.as_str()));
            head.save(&path)?;
            outputs.push(path);
        }
    }
    let ids = |v: &[usize]| -> Vec<String> { v.iter().map(|&i| inputs.dataset.post(i).post_id.clone()).collect() };
    let split_path = dir.join("split.json");
    write_json(
        &serde_json::json!({
            "source": s,
            "destination": d,
            "shots": shots,
            "seed": seed,
            "train": ids(&split.train),
            "test": ids(&split.test),
        }),
        &split_path,
    )?;
    outputs.push(split_path);

    let args = BTreeMap::from([
        ("source".to_owned(), s),
        ("destination".to_owned(), d),
        ("shots".to_owned(), shots.to_string()),
        ("seed".to_owned(), seed.to_string()),
    ]);
    finish(cfg, "train", args, &inputs.files, outputs, Vec::new())
}

/// One (source, destination, shots) cell per configured ensemble config,
/// averaged over the seed list.
pub fn evaluate(cfg: &RunConfig, source: &str, dest: &str, shots: usize) -> Result<CommandOutput> {
    cfg.validate()?;
    let mut inputs = load_inputs(cfg)?;
    let features = load_features(cfg, &mut inputs)?;
    let (s, d) = resolve_pair(&inputs.dataset, source, dest)?;
    let partition = Partition::new(&inputs.dataset, cfg.harness.partition_seed);
    let exp = Experiment::new(&inputs.dataset, &features, &partition, cfg.heads.clone());
    let mut cells = exp.run(&s, &d, shots, &cfg.harness.configs, &cfg.harness.seeds)?;
    strip_traces(cfg, &mut cells);
    let outputs = write_results(cfg, "evaluate", &cells)?;
    let args = BTreeMap::from([
        ("source".to_owned(), s),
        ("destination".to_owned(), d),
        ("shots".to_owned(), shots.to_string()),
    ]);
    finish(cfg, "evaluate", args, &inputs.files, outputs, cells)
}

fn table_command(
    cfg: &RunConfig,
    command: &str,
    pairs: Option<Vec<(String, String)>>,
    shots: &[usize],
    configs: &[EnsembleConfig],
) -> Result<CommandOutput> {
    cfg.validate()?;
    let mut inputs = load_inputs(cfg)?;
    let features = load_features(cfg, &mut inputs)?;
    let pairs = match pairs {
        Some(p) => p
            .iter()
            .map(|(s, d)| resolve_pair(&inputs.dataset, s, d))
            .collect::<Result<_>>()?,
        None => configured_pairs(cfg, &inputs.dataset)?,
    };
    let partition = Partition::new(&inputs.dataset, cfg.harness.partition_seed);
    let exp = Experiment::new(&inputs.dataset, &features, &partition, cfg.heads.clone());
    let table = exp.sweep(&pairs, shots, configs, &cfg.harness.seeds)?;
    let mut cells = table.cells;
    strip_traces(cfg, &mut cells);
    let mut outputs = write_results(cfg, command, &cells)?;
    let rendered = cfg.paths.output.join(format!("{command}.txt"));
    let text = ResultsTable { cells: cells.clone() }.render();
    fs::write(&rendered, text).map_err(|e| Error::io(&rendered, e))?;
    outputs.push(rendered);
    let args = BTreeMap::from([(
        "shots".to_owned(),
        shots.iter().map(ToString::to_string).collect::<Vec<_>>().join(","),
    )]);
    finish(cfg, command, args, &inputs.files, outputs, cells)
}

/// The nine component subsets for each pair at `ablation_shots`.
pub fn ablate(cfg: &RunConfig, pair: Option<(&str, &str)>, shots: Option<usize>) -> Result<CommandOutput> {
    let pairs = pair.map(|(s, d)| vec![(s.to_owned(), d.to_owned())]);
    let shots = shots.unwrap_or(cfg.harness.ablation_shots);
    table_command(cfg, "ablate", pairs, &[shots], &ablation_grid())
}

/// Pairs x shot list x configured ensembles.
pub fn sweep_shots(cfg: &RunConfig) -> Result<CommandOutput> {
    table_command(cfg, "sweep-shots", None, &cfg.harness.shots, &cfg.harness.configs)
}

/// Renders a results file as a table; writes `<stem>.report.txt` next to the
/// output directory's other artifacts.
pub fn report(cfg: &RunConfig, results: &Path) -> Result<(String, CommandOutput)> {
    let table = read_results_jsonl(results)?;
    let text = table.render();
    create_dir(&cfg.paths.output)?;
    let stem = results
        .file_stem()
        .map_or_else(|| "results".to_owned(), |s| s.to_string_lossy().into_owned());
    let path = cfg.paths.output.join(format!("{stem}.report.txt"));
    fs::write(&path, &text).map_err(|e| Error::io(&path, e))?;
    let args = BTreeMap::from([("results".to_owned(), results.display().to_string())]);
    let out = finish(cfg, "report", args, &[results.to_path_buf()], vec![path], Vec::new())?;
    Ok((text, out))
}

/// Compact per-cell summary printed by the CLI.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CellSummary {
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
    pub per_seed_macro_f1: Vec<f64>,
}

impl From<&CellResult> for CellSummary {
    fn from(c: &CellResult) -> Self {
        CellSummary {
            source: c.source.clone(),
            destination: c.destination.clone(),
            shots: c.shots,
            config: c.config,
            seeds: c.seeds.clone(),
            macro_f1: c.macro_f1,
            f1_favor: c.f1_favor,
            f1_against: c.f1_against,
            min_macro_f1: c.min_macro_f1,
            max_macro_f1: c.max_macro_f1,
            per_seed_macro_f1: c.per_seed.iter().map(|r| r.macro_f1).collect(),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn sha256_known_value() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("abc");
        fs::write(&p, "abc").unwrap();
        assert_eq!(
            sha256_file(&p).unwrap(),
            "ba7816bf8f01cfea414140de5dae2223b00361a396177a9cb410ff61f20015ad"
        );
    }
}
