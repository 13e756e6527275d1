//! Result and graph export files.

use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::Path;

use serde::Serialize;

use crate::error::{Error, Result};
use crate::graph::GraphBundle;
use crate::harness::experiment::{CellResult, ResultsTable};
use crate::harness::synth::Community;

/// One JSON record per cell, per-seed details included.
pub fn write_results_jsonl(cells: &[CellResult], path: &Path) -> Result<()> {
    let file = File::create(path).map_err(|e| Error::io(path, e))?;
    let mut w = BufWriter::new(file);
    for c in cells {
        serde_json::to_writer(&mut w, c)?;
        w.write_all(b"\n").map_err(|e| Error::io(path, e))?;
    }
    w.flush().map_err(|e| Error::io(path, e))
}

pub fn read_results_jsonl(path: &Path) -> Result<ResultsTable> {
    let file = File::open(path).map_err(|e| Error::io(path, e))?;
    let mut cells = Vec::new();
    for line in BufReader::new(file).lines() {
        let line = line.map_err(|e| Error::io(path, e))?;
        if !line.trim().is_empty() {
            cells.push(serde_json::from_str(&line)?);
        }
    }
    Ok(ResultsTable { cells })
}

#[derive(Serialize)]
struct FlatRow<'a> {
    source: &'a str,
    dest: &'a str,
    shots: usize,
    config: String,
    seed: u64,
    macro_f1: f64,
    f1_favor: f64,
    f1_against: f64,
}

/// One row per (cell, seed) for plotting.
pub fn write_results_csv(cells: &[CellResult], path: &Path) -> Result<()> {
    let mut w = csv::Writer::from_path(path)?;
    for c in cells {
        for r in &c.per_seed {
            w.serialize(FlatRow {
                source: &c.source,
                dest: &c.destination,
                shots: c.shots,
                config: c.config.to_string(),
                seed: r.seed,
                macro_f1: r.macro_f1,
                f1_favor: r.f1_favor,
                f1_against: r.f1_against,
            })?;
        }
    }
    w.flush().map_err(|e| Error::io(path, e))
}

/// `nodes.csv` (`id,target,stance`, blank when unknown) and `edges.csv`
/// (`source,target,relation`) for external graph viewers.
pub fn export_graph_csv(bundle: &GraphBundle, communities: &[(String, Community)], dir: &Path) -> Result<()> {
    std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    let lookup: std::collections::HashMap<&str, &Community> =
        communities.iter().map(|(u, c)| (u.as_str(), c)).collect();

    let mut nodes = csv::Writer::from_path(dir.join("nodes.csv"))?;
    nodes.write_record(["id", "target", "stance"])?;
    for id in bundle.interner().ids() {
        match lookup.get(id.as_str()) {
            Some(c) => nodes.write_record([id.as_str(), &c.target, c.stance.as_upper()])?,
            None => nodes.write_record([id.as_str(), "", ""])?,
        }
    }
    nodes.flush().map_err(|e| Error::io(dir, e))?;

    let mut edges = csv::Writer::from_path(dir.join("edges.csv"))?;
    edges.write_record(["source", "target", "relation"])?;
    for g in bundle.graphs() {
        for (a, b) in g.edges() {
            edges.write_record([bundle.interner().id(a), bundle.interner().id(b), g.relation().as_str()])?;
        }
    }
    edges.flush().map_err(|e| Error::io(dir, e))
}
