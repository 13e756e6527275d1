//! Interned, compressed (CSR) adjacency for the three user relations.
//!
//! User ids from the posts file and from every edge list are interned into
//! one dense index space shared by all relations. Each relation is then
//! frozen into an immutable [`Graph`] whose neighbor lists are sorted, so a
//! seeded walk over it is fully deterministic.

use std::collections::HashMap;
use std::fmt;
use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::Path;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Dense 0-based node index.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct NodeIdx(pub u32);

impl NodeIdx {
    #[inline]
    pub fn index(self) -> usize {
        self.0 as usize
    }
}

impl From<usize> for NodeIdx {
    fn from(i: usize) -> Self {
        NodeIdx(u32::try_from(i).expect("node index exceeds u32"))
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Relation {
    Followers,
    Friends,
    Likes,
}

impl Relation {
    pub const ALL: [Relation; 3] = [Relation::Followers, Relation::Friends, Relation::Likes];

    pub fn as_str(self) -> &'static str {
        match self {
            Relation::Followers => "followers",
            Relation::Friends => "friends",
            Relation::Likes => "likes",
        }
    }
}

impl fmt::Display for Relation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Relation {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "followers" => Ok(Relation::Followers),
            "friends" => Ok(Relation::Friends),
            "likes" => Ok(Relation::Likes),
            other => Err(Error::param("relation", format!("unknown relation {other:?}"))),
        }
    }
}

/// Bidirectional external-id <-> [`NodeIdx`] table.
#[derive(Clone, Debug, Default)]
pub struct Interner {
    ids: Vec<String>,
    index: HashMap<String, NodeIdx>,
}

impl Interner {
    pub fn new() -> Self {
        Self::default()
    }

    /// Returns the existing index for `id`, or assigns the next unused one.
    pub fn intern(&mut self, id: &str) -> NodeIdx {
        if let Some(&idx) = self.index.get(id) {
            return idx;
        }
        let idx = NodeIdx::from(self.ids.len());
        self.ids.push(id.to_owned());
        self.index.insert(id.to_owned(), idx);
        idx
    }

    pub fn get(&self, id: &str) -> Option<NodeIdx> {
        self.index.get(id).copied()
    }

    pub fn id(&self, idx: NodeIdx) -> &str {
        &self.ids[idx.index()]
    }

    pub fn ids(&self) -> &[String] {
        &self.ids
    }

    pub fn len(&self) -> usize {
        self.ids.len()
    }

    pub fn is_empty(&self) -> bool {
        self.ids.is_empty()
    }
}

/// Immutable compressed adjacency for one relation.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Graph {
    relation: Relation,
    offsets: Vec<usize>,
    targets: Vec<NodeIdx>,
    undirected: bool,
}

impl Graph {
    /// Builds CSR adjacency over `n` nodes. Duplicate edges and self-loops are
    /// dropped; undirected graphs store each edge in both directions.
    pub fn from_edges(
        n: usize,
        edges: impl IntoIterator<Item = (NodeIdx, NodeIdx)>,
        relation: Relation,
        undirected: bool,
    ) -> Self {
        let mut arcs: Vec<(NodeIdx, NodeIdx)> = Vec::new();
        for (a, b) in edges {
            assert!(a.index() < n && b.index() < n, "edge endpoint out of range");
            if a == b {
                continue;
            }
            arcs.push((a, b));
            if undirected {
                arcs.push((b, a));
            }
        }
        arcs.sort_unstable();
        arcs.dedup();

        let mut offsets = vec![0usize; n + 1];
        for &(a, _) in &arcs {
            offsets[a.index() + 1] += 1;
        }
        for i in 0..n {
            offsets[i + 1] += offsets[i];
        }
        let targets = arcs.into_iter().map(|(_, b)| b).collect();

        Graph {
            relation,
            offsets,
            targets,
            undirected,
        }
    }

    pub fn relation(&self) -> Relation {
        self.relation
    }

    pub fn is_undirected(&self) -> bool {
        self.undirected
    }

    pub fn node_count(&self) -> usize {
        self.offsets.len() - 1
    }

    /// Number of stored arcs (twice the edge count when undirected).
    pub fn arc_count(&self) -> usize {
        self.targets.len()
    }

    pub fn edge_count(&self) -> usize {
        if self.undirected {
            self.targets.len() / 2
        } else {
            self.targets.len()
        }
    }

    pub fn offsets(&self) -> &[usize] {
        &self.offsets
    }

    /// Sorted neighbor slice of `v`. Panics if `v` is out of range.
    #[inline]
    pub fn neighbors(&self, v: NodeIdx) -> &[NodeIdx] {
        let i = v.index();
        assert!(i < self.node_count(), "node {i} out of range");
        &self.targets[self.offsets[i]..self.offsets[i + 1]]
    }

    #[inline]
    pub fn degree(&self, v: NodeIdx) -> usize {
        let i = v.index();
        self.offsets[i + 1] - self.offsets[i]
    }

    #[inline]
    pub fn has_edge(&self, from: NodeIdx, to: NodeIdx) -> bool {
        self.neighbors(from).binary_search(&to).is_ok()
    }

    /// Position of `to` within `neighbors(from)`.
    #[inline]
    pub fn arc_position(&self, from: NodeIdx, to: NodeIdx) -> Option<usize> {
        self.neighbors(from).binary_search(&to).ok()
    }

    /// Global arc id of `from -> to` (index into the targets array).
    #[inline]
    pub fn arc_id(&self, from: NodeIdx, to: NodeIdx) -> Option<usize> {
        self.arc_position(from, to)
            .map(|p| self.offsets[from.index()] + p)
    }

    pub fn is_isolated(&self, v: NodeIdx) -> bool {
        self.degree(v) == 0
    }

    /// Normalized edge set: `(u, v)` with `u < v` for undirected graphs, every
    /// stored arc otherwise. Sorted.
    pub fn edges(&self) -> Vec<(NodeIdx, NodeIdx)> {
        let mut out = Vec::with_capacity(self.edge_count());
        for u in 0..self.node_count() {
            let u = NodeIdx::from(u);
            for &v in self.neighbors(u) {
                if !self.undirected || u < v {
                    out.push((u, v));
                }
            }
        }
        out
    }
}

/// Builds a graph from string-id edges, interning endpoints as needed.
pub fn build_graph<'a>(
    edges: impl IntoIterator<Item = (&'a str, &'a str)>,
    relation: Relation,
    undirected: bool,
    interner: &mut Interner,
) -> Graph {
    let idx: Vec<_> = edges
        .into_iter()
        .map(|(a, b)| (interner.intern(a), interner.intern(b)))
        .collect();
    Graph::from_edges(interner.len(), idx, relation, undirected)
}

/// Raw `(src, dst)` id pairs as read from an edge-list file.
pub type EdgeList = Vec<(String, String)>;

/// Parses `src<TAB>dst` lines. Blank lines and `#` comments are skipped.
pub fn parse_edge_list(reader: impl BufRead, source_name: &str) -> Result<EdgeList> {
    let mut edges = Vec::new();
    for (lineno, line) in reader.lines().enumerate() {
        let line = line.map_err(|e| Error::io(source_name, e))?;
        let line = line.trim_end_matches('\r');
        if line.trim().is_empty() || line.trim_start().starts_with('#') {
            continue;
        }
        let mut fields = line.split('\t');
        let (src, dst) = match (fields.next(), fields.next(), fields.next()) {
            (Some(a), Some(b), None) if !a.trim().is_empty() && !b.trim().is_empty() => {
                (a.trim(), b.trim())
            }
            _ => {
                return Err(Error::Parse {
                    path: source_name.to_owned(),
                    line: lineno + 1,
                    message: format!("expected `src<TAB>dst`, got {line:?}"),
                })
            }
        };
        edges.push((src.to_owned(), dst.to_owned()));
    }
    Ok(edges)
}

pub fn read_edge_list(path: &Path) -> Result<EdgeList> {
    let file = File::open(path).map_err(|e| Error::io(path, e))?;
    parse_edge_list(BufReader::new(file), &path.display().to_string())
}

pub fn write_edge_list(graph: &Graph, interner: &Interner, path: &Path) -> Result<()> {
    let file = File::create(path).map_err(|e| Error::io(path, e))?;
    let mut w = BufWriter::new(file);
    let mut write = || -> std::io::Result<()> {
        writeln!(w, "# {} edges ({})", graph.relation(), graph.edge_count())?;
        for (a, b) in graph.edges() {
            writeln!(w, "{}\t{}", interner.id(a), interner.id(b))?;
        }
        w.flush()
    };
    write().map_err(|e| Error::io(path, e))
}

/// One graph per relation over a shared interner.
#[derive(Clone, Debug)]
pub struct GraphBundle {
    interner: Interner,
    graphs: Vec<Graph>,
}

impl GraphBundle {
    /// Interns `users` first (in order), then every edge endpoint, and builds
    /// all relations over the final node count so they share one index space.
    pub fn build<'a>(
        users: impl IntoIterator<Item = &'a str>,
        relations: &[(Relation, &EdgeList)],
        undirected: impl Fn(Relation) -> bool,
    ) -> Self {
        let mut interner = Interner::new();
        for u in users {
            interner.intern(u);
        }
        let indexed: Vec<(Relation, Vec<(NodeIdx, NodeIdx)>)> = relations
            .iter()
            .map(|(rel, edges)| {
                let e = edges
                    .iter()
                    .map(|(a, b)| (interner.intern(a), interner.intern(b)))
                    .collect();
                (*rel, e)
            })
            .collect();
        let n = interner.len();
        let graphs = indexed
            .into_iter()
            .map(|(rel, e)| Graph::from_edges(n, e, rel, undirected(rel)))
            .collect();
        GraphBundle { interner, graphs }
    }

    pub fn interner(&self) -> &Interner {
        &self.interner
    }

    pub fn graph(&self, relation: Relation) -> Option<&Graph> {
        self.graphs.iter().find(|g| g.relation() == relation)
    }

    pub fn graphs(&self) -> &[Graph] {
        &self.graphs
    }

    pub fn node_count(&self) -> usize {
        self.interner.len()
    }
}
