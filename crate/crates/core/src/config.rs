//! Run configuration: TOML with one section per parameter block.
//!
//! Every field has a default, so an empty file is a complete config. Relative
//! paths are resolved against the directory of the config file.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::embed::SgnsParams;
use crate::ensemble::EnsembleConfig;
use crate::error::{Error, Result};
use crate::graph::Relation;
use crate::harness::experiment::{HeadSettings, DEFAULT_SEEDS, DEFAULT_SHOTS};
use crate::harness::synth::SynthParams;
use crate::text::HashEncoder;
use crate::walk::WalkParams;

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Paths {
    pub posts: Option<PathBuf>,
    pub followers: Option<PathBuf>,
    pub friends: Option<PathBuf>,
    pub likes: Option<PathBuf>,
    /// External document vectors; the hashing encoder is used when unset.
    pub doc_embeddings: Option<PathBuf>,
    /// Directory of `<relation>.emb` files from `embed-graph`; embeddings are
    /// trained in process when unset.
    pub graph_embeddings: Option<PathBuf>,
    pub output: PathBuf,
}

impl Paths {
    pub fn edges(&self, r: Relation) -> Option<&Path> {
        match r {
            Relation::Followers => self.followers.as_deref(),
            Relation::Friends => self.friends.as_deref(),
            Relation::Likes => self.likes.as_deref(),
        }
    }

    fn resolve(&mut self, base: &Path) {
        let fix = |p: &mut PathBuf| {
            if p.is_relative() {
                *p = base.join(&*p);
            }
        };
        for p in [
            &mut self.posts,
            &mut self.followers,
            &mut self.friends,
            &mut self.likes,
            &mut self.doc_embeddings,
            &mut self.graph_embeddings,
        ]
        .into_iter()
        .flatten()
        {
            fix(p);
        }
        fix(&mut self.output);
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct GraphSettings {
    pub undirected: bool,
    /// Relations kept directed even when `undirected` is set.
    pub directed_relations: Vec<Relation>,
}

impl Default for GraphSettings {
    fn default() -> Self {
        GraphSettings {
            undirected: true,
            directed_relations: Vec::new(),
        }
    }
}

impl GraphSettings {
    pub fn is_undirected(&self, r: Relation) -> bool {
        self.undirected && !self.directed_relations.contains(&r)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct OutputSettings {
    /// Also write the binary embedding variant.
    pub binary_embeddings: bool,
    /// Dump walk corpora as text.
    pub dump_walks: bool,
    /// Include per-post vote traces in the results file.
    pub vote_traces: bool,
}

impl Default for OutputSettings {
    fn default() -> Self {
        OutputSettings {
            binary_embeddings: false,
            dump_walks: false,
            vote_traces: true,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct HarnessSettings {
    pub seeds: Vec<u64>,
    pub shots: Vec<usize>,
    /// Shot count used by `ablate`.
    pub ablation_shots: usize,
    /// Fixes the per-target test/pool partition.
    pub partition_seed: u64,
    /// `[source, destination]` pairs; empty means all ordered pairs.
    pub pairs: Vec<(String, String)>,
    /// Ensemble configs for `evaluate` and `sweep-shots`.
    pub configs: Vec<EnsembleConfig>,
}

impl Default for HarnessSettings {
    fn default() -> Self {
        HarnessSettings {
            seeds: DEFAULT_SEEDS.to_vec(),
            shots: DEFAULT_SHOTS.to_vec(),
            ablation_shots: 400,
            partition_seed: 0,
            pairs: Vec::new(),
            configs: vec![EnsembleConfig::full()],
        }
    }
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    pub paths: Paths,
    pub graph: GraphSettings,
    pub walk: WalkParams,
    pub embed: SgnsParams,
    pub text: HashEncoder,
    pub heads: HeadSettings,
    pub harness: HarnessSettings,
    pub synth: SynthParams,
    pub output: OutputSettings,
}

impl RunConfig {
    pub fn parse(text: &str) -> Result<Self> {
        toml::from_str(text).map_err(|e| Error::Config(e.to_string()))
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        let mut cfg = Self::parse(&text)?;
        let base = path.parent().unwrap_or(Path::new("."));
        cfg.paths.resolve(base);
        Ok(cfg)
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("config serializes")
    }

    /// Checks every parameter block, reporting the first violation with its
    /// field path (e.g. `walk.p`).
    pub fn validate(&self) -> Result<()> {
        self.walk.validate("walk.")?;
        self.embed.validate("embed.")?;
        self.text.validate("text.")?;
        // input_dim is filled per modality at run time.
        self.heads.text.validate_with_dim("heads.text.")?;
        self.heads.graph.validate_with_dim("heads.graph.")?;
        self.synth.validate("synth.")?;
        let h = &self.harness;
        if h.seeds.is_empty() {
            return Err(Error::param("harness.seeds", "must not be empty"));
        }
        if h.shots.is_empty() {
            return Err(Error::param("harness.shots", "must not be empty"));
        }
        if h.configs.is_empty() {
            return Err(Error::param("harness.configs", "must not be empty"));
        }
        if let Some((s, _)) = h.pairs.iter().find(|(s, d)| s == d) {
            return Err(Error::param("harness.pairs", format!("source and destination are both {s:?}")));
        }
        Ok(())
    }

    /// Input files required by data-consuming commands must exist.
    pub fn validate_inputs(&self) -> Result<()> {
        let p = &self.paths;
        let mut required = vec![("paths.posts", p.posts.as_deref())];
        for r in Relation::ALL {
            let name = match r {
                Relation::Followers => "paths.followers",
                Relation::Friends => "paths.friends",
                Relation::Likes => "paths.likes",
            };
            required.push((name, p.edges(r)));
        }
        for (field, path) in required {
            match path {
                None => return Err(Error::param(field, "required")),
                Some(path) if !path.is_file() => {
                    return Err(Error::param(field, format!("file not found: {}", path.display())))
                }
                _ => {}
            }
        }
        if let Some(d) = &p.doc_embeddings {
            if !d.is_file() {
                return Err(Error::param(
                    "paths.doc_embeddings",
                    format!("file not found: {}", d.display()),
                ));
            }
        }
        if let Some(d) = &p.graph_embeddings {
            for r in Relation::ALL {
                let f = d.join(format!("{r}.emb"));
                if !f.is_file() {
                    return Err(Error::param(
                        "paths.graph_embeddings",
                        format!("file not found: {}", f.display()),
                    ));
                }
            }
        }
        Ok(())
    }
}

impl crate::head::HeadParams {
    /// Validation for config blocks, where `input_dim` is not yet known.
    pub fn validate_with_dim(&self, prefix: &str) -> Result<()> {
        crate::head::HeadParams {
            input_dim: self.input_dim.max(1),
            ..self.clone()
        }
        .validate(prefix)
    }
}
