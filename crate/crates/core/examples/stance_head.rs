// Train a per-modality classifier head, then checkpoint and reload it.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use stance_graph::head::{train_head, HeadParams, Optimizer, TrainedHead};
use stance_graph::{Modality, StanceLabel};

pub fn run_example() -> Result<(), Box<dyn std::error::Error>> {
    // Two Gaussian blobs in 8 dimensions.
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let mut xs = Vec::new();
    let mut ys = Vec::new();
    for i in 0..400 {
        let label = if i % 2 == 0 { StanceLabel::Favor } else { StanceLabel::Against };
        let center = if label == StanceLabel::Favor { 1.0 } else { -1.0 };
        xs.push((0..8).map(|_| center + rng.gen_range(-1.0..1.0)).collect::<Vec<f64>>());
        ys.push(label);
    }
    let refs: Vec<&[f64]> = xs.iter().map(Vec::as_slice).collect();

    let params = HeadParams {
        lr: 0.05,
        optimizer: Optimizer::Sgd,
        epochs: 30,
        batch_size: 32,
        ..HeadParams::graph_default(8)
    };
    let head = train_head(Modality::Likes, &refs, &ys, &params)?;
    let correct = refs
        .iter()
        .zip(&ys)
        .filter(|(x, y)| head.predict(x).map(|p| p.0 == **y).unwrap_or(false))
        .count();
    println!("training accuracy {:.3}", correct as f64 / ys.len() as f64);

    let dir = tempfile::tempdir()?;
    let path = dir.path().join("likes.head");
    head.save(&path)?;
    let back = TrainedHead::load(&path)?;
    assert_eq!(back.predict(refs[0])?, head.predict(refs[0])?);
    println!("checkpoint reloaded: {} -> {:?}", back.modality, back.predict(refs[0])?);
    Ok(())
}

#[allow(dead_code)]
fn main() {
    run_example().unwrap();
}
