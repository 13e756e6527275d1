// Target-conditioned document vectors from hashed word and character n-grams.

use stance_graph::embed::cosine;
use stance_graph::text::{compose_input, HashEncoder};

pub fn run_example() -> Result<(), Box<dyn std::error::Error>> {
    let input = compose_input("Bernie Sanders", "Feel the Bern tonight!")?;
    println!("{input}");

    let encoder = HashEncoder::default();
    let a = encoder.encode(input.as_str());
    let b = encoder.encode(compose_input("Bernie Sanders", "feel the bern tonight")?.as_str());
    let c = encoder.encode(compose_input("Donald Trump", "tax plan numbers")?.as_str());
    println!("dim {}, |a| = {:.3}", a.len(), a.iter().map(|x| x * x).sum::<f64>().sqrt());
    println!("cos(a, b) = {:.3}, cos(a, c) = {:.3}", cosine(&a, &b), cosine(&a, &c));
    assert!(cosine(&a, &b) > cosine(&a, &c));
    assert!(compose_input("", "text").is_err());
    Ok(())
}

#[allow(dead_code)]
fn main() {
    run_example().unwrap();
}
