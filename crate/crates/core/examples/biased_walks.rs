// Second-order random walks: return parameter p and in-out parameter q.

use stance_graph::graph::{Graph, NodeIdx, Relation};
use stance_graph::walk::{generate_walks, transition_weights, WalkParams};

pub fn run_example() -> Result<(), Box<dyn std::error::Error>> {
    // Path 0-1-2-3 with a triangle 1-2-4.
    let edges = [(0, 1), (1, 2), (2, 3), (1, 4), (2, 4)].map(|(a, b)| (NodeIdx(a), NodeIdx(b)));
    let g = Graph::from_edges(5, edges, Relation::Friends, true);

    // Arrived at 2 from 1: back to 1 costs 1/p, 4 is adjacent to 1, 3 is not.
    let w = transition_weights(&g, NodeIdx(1), NodeIdx(2), 0.5, 2.0);
    println!("neighbors of 2: {:?}, weights {w:?}", g.neighbors(NodeIdx(2)));
    assert_eq!(w, vec![2.0, 0.5, 1.0]);

    let params = WalkParams {
        p: 0.5,
        q: 2.0,
        walks_per_node: 2,
        walk_length: 8,
        seed: 42,
        ..WalkParams::default()
    };
    let corpus = generate_walks(&g, &params)?;
    for w in corpus.walks.iter().take(4) {
        println!("{:?}", w.iter().map(|v| v.0).collect::<Vec<_>>());
    }
    // Same seed, same corpus, whatever the thread count.
    assert_eq!(corpus, generate_walks(&g, &params)?);
    Ok(())
}

#[allow(dead_code)]
fn main() {
    run_example().unwrap();
}
