//! Per-modality feature lookup for posts.

use std::collections::BTreeMap;

use crate::embed::{train_embeddings, SgnsParams};
use crate::embedding_io::EmbeddingTable;
use crate::error::Result;
use crate::graph::{Graph, GraphBundle, Relation};
use crate::harness::dataset::LabeledPost;
use crate::seeding::derive_seed;
use crate::stance::Modality;
use crate::text::DocEmbeddings;
use crate::walk::{generate_walks, WalkParams};

/// Document vectors keyed by post id and node vectors keyed by user id. A
/// user with no row in a relation's table has that modality absent.
#[derive(Clone, Debug)]
pub struct FeatureStore {
    docs: DocEmbeddings,
    graphs: BTreeMap<Relation, EmbeddingTable>,
}

impl FeatureStore {
    pub fn new(docs: DocEmbeddings, graphs: impl IntoIterator<Item = (Relation, EmbeddingTable)>) -> Self {
        FeatureStore {
            docs,
            graphs: graphs.into_iter().collect(),
        }
    }

    pub fn docs(&self) -> &DocEmbeddings {
        &self.docs
    }

    pub fn graph_table(&self, r: Relation) -> Option<&EmbeddingTable> {
        self.graphs.get(&r)
    }

    pub fn feature(&self, post: &LabeledPost, m: Modality) -> Option<&[f64]> {
        match m.relation() {
            None => self.docs.get(&post.post_id),
            Some(r) => self.graphs.get(&r)?.get(&post.user_id),
        }
    }

    pub fn dim(&self, m: Modality) -> Option<usize> {
        match m.relation() {
            None => Some(self.docs.dim()),
            Some(r) => self.graphs.get(&r).map(EmbeddingTable::dim),
        }
    }
}

/// Walks plus skip-gram for one relation. Seeds are offset per relation so
/// the three graphs get independent streams. Only nodes that appear in the
/// corpus get a row.
pub fn embed_relation(
    graph: &Graph,
    bundle: &GraphBundle,
    walk: &WalkParams,
    sgns: &SgnsParams,
) -> Result<EmbeddingTable> {
    let r = graph.relation() as u64;
    let walk = WalkParams {
        seed: derive_seed(walk.seed, &[r]),
        ..walk.clone()
    };
    let sgns = SgnsParams {
        seed: derive_seed(sgns.seed, &[r]),
        ..sgns.clone()
    };
    let corpus = generate_walks(graph, &walk)?;
    let emb = train_embeddings(&corpus, bundle.node_count(), &sgns)?;
    log::info!(
        "{}: {} walks, {} tokens, {} embedded nodes",
        graph.relation(),
        corpus.len(),
        corpus.token_count(),
        (0..emb.len()).filter(|&i| emb.is_trained(i.into())).count()
    );
    Ok(emb.to_table(bundle.interner()))
}

pub fn embed_bundle(bundle: &GraphBundle, walk: &WalkParams, sgns: &SgnsParams) -> Result<Vec<(Relation, EmbeddingTable)>> {
    bundle
        .graphs()
        .iter()
        .map(|g| Ok((g.relation(), embed_relation(g, bundle, walk, sgns)?)))
        .collect()
}
