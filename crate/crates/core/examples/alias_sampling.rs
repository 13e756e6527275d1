// Constant-time sampling from a fixed discrete distribution.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use stance_graph::alias::AliasTable;

pub fn run_example() -> Result<(), Box<dyn std::error::Error>> {
    let weights = [1.0, 3.0, 0.0, 6.0];
    let table = AliasTable::new(&weights)?;
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    let draws = 200_000;
    let mut counts = [0usize; 4];
    for _ in 0..draws {
        counts[table.sample(&mut rng)] += 1;
    }
    for (i, (c, p)) in counts.iter().zip(table.distribution()).enumerate() {
        println!("index {i}: exact {p:.3}, empirical {:.3}", *c as f64 / draws as f64);
    }
    assert_eq!(counts[2], 0);
    assert!(AliasTable::new(&[0.0, 0.0]).is_err());
    Ok(())
}

#[allow(dead_code)]
fn main() {
    run_example().unwrap();
}
