// Combine the four component votes and list the ablation subsets.

use stance_graph::ensemble::{ablation_grid, decide, EnsembleConfig, Vote};
use stance_graph::{Modality, StanceLabel};

pub fn run_example() -> Result<(), Box<dyn std::error::Error>> {
    use Modality::*;
    use StanceLabel::*;
    let votes = [
        Vote::new(Text, Against, 0.80),
        Vote::new(Likes, Favor, 0.93),
        Vote::new(Friends, Favor, 0.70),
        Vote::new(Followers, Against, 0.75),
    ];
    // 2-2 split: the most confident vote (likes) decides.
    let (label, how) = decide(&votes, &EnsembleConfig::full())?;
    println!("full ensemble: {label} ({how:?})");
    assert_eq!(label, Favor);

    for cfg in ablation_grid() {
        let (label, how) = decide(&votes, &cfg)?;
        println!("{cfg:<12} -> {label} ({how:?})");
    }

    // A user with no network data: graph votes are absent and do not count.
    let sparse = [Vote::new(Text, Against, 0.6), Vote::absent(Likes), Vote::absent(Friends), Vote::absent(Followers)];
    let cfg: EnsembleConfig = "Li+Fr+Fl+Rb".parse()?;
    println!("text only user: {}", decide(&sparse, &cfg)?.0);
    Ok(())
}

#[allow(dead_code)]
fn main() {
    run_example().unwrap();
}
