// node2vec-style embeddings: walks plus skip-gram with negative sampling.

use stance_graph::embed::{cosine, train_embeddings, SgnsParams};
use stance_graph::graph::{Graph, NodeIdx, Relation};
use stance_graph::walk::{generate_walks, WalkParams};

pub fn run_example() -> Result<(), Box<dyn std::error::Error>> {
    // Two 8-cliques joined by a single bridge 7-8.
    let mut edges = Vec::new();
    for base in [0u32, 8] {
        for a in base..base + 8 {
            for b in a + 1..base + 8 {
                edges.push((NodeIdx(a), NodeIdx(b)));
            }
        }
    }
    edges.push((NodeIdx(7), NodeIdx(8)));
    let g = Graph::from_edges(16, edges, Relation::Likes, true);

    let corpus = generate_walks(&g, &WalkParams { walk_length: 40, seed: 3, ..WalkParams::default() })?;
    let params = SgnsParams {
        dim: 32,
        window: 5,
        epochs: 3,
        seed: 3,
        ..SgnsParams::default()
    };
    let emb = train_embeddings(&corpus, g.node_count(), &params)?;
    let same = cosine(emb.input(NodeIdx(0)), emb.input(NodeIdx(1)));
    let other = cosine(emb.input(NodeIdx(0)), emb.input(NodeIdx(12)));
    println!("cos(0, 1) = {same:.3} (same clique), cos(0, 12) = {other:.3} (other clique)");
    assert!(same > other);
    Ok(())
}

#[allow(dead_code)]
fn main() {
    run_example().unwrap();
}
