// Macro-averaged F1 over favor and against.

use stance_graph::harness::{macro_f1, ConfusionMatrix};
use stance_graph::StanceLabel::{self, *};

fn expand(rows: [(StanceLabel, StanceLabel, usize); 4]) -> (Vec<StanceLabel>, Vec<StanceLabel>) {
    let mut preds = Vec::new();
    let mut gold = Vec::new();
    for (g, p, n) in rows {
        gold.extend(std::iter::repeat_n(g, n));
        preds.extend(std::iter::repeat_n(p, n));
    }
    (preds, gold)
}

pub fn run_example() -> Result<(), Box<dyn std::error::Error>> {
    // (gold, predicted, count)
    let (preds, gold) = expand([
        (Against, Against, 985),
        (Against, Favor, 232),
        (Favor, Against, 340),
        (Favor, Favor, 837),
    ]);
    let m = ConfusionMatrix::from_predictions(&preds, &gold)?;
    println!(
        "F1 favor {:.4}, F1 against {:.4}, macro {:.4}",
        m.f1(Favor),
        m.f1(Against),
        m.macro_f1()
    );
    assert!((macro_f1(&preds, &gold)? - 0.7602).abs() < 5e-4);
    assert!(macro_f1(&preds[..3], &gold).is_err());
    Ok(())
}

#[allow(dead_code)]
fn main() {
    run_example().unwrap();
}
