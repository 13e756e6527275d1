// Build relation graphs from edge lists and inspect the CSR adjacency.

use stance_graph::graph::{parse_edge_list, GraphBundle, Relation};

pub fn run_example() -> Result<(), Box<dyn std::error::Error>> {
    let followers = parse_edge_list("# who follows whom\nana\tbo\nbo\tcy\ncy\tana\ncy\tcy\nana\tbo\n".as_bytes(), "inline")?;
    let likes = parse_edge_list("ana\tdee\n".as_bytes(), "inline")?;

    // Post authors are interned first so their indices are stable.
    let bundle = GraphBundle::build(
        ["ana", "bo", "cy"],
        &[(Relation::Followers, &followers), (Relation::Likes, &likes)],
        |_| true,
    );
    let ids = bundle.interner();
    let g = bundle.graph(Relation::Followers).unwrap();
    println!("{} nodes, {} followers edges (duplicates and loops dropped)", g.node_count(), g.edge_count());
    for v in 0..g.node_count() {
        let names: Vec<&str> = g.neighbors(v.into()).iter().map(|&u| ids.id(u)).collect();
        println!("  {:>4}: {names:?}", ids.id(v.into()));
    }
    let dee = ids.get("dee").unwrap();
    println!("dee is isolated in followers: {}", g.is_isolated(dee));
    assert_eq!(g.edge_count(), 3);
    Ok(())
}

#[allow(dead_code)]
fn main() {
    run_example().unwrap();
}
