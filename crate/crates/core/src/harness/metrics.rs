//! Confusion matrices and macro-averaged F1 over {favor, against}.
//!
//! A class that is neither predicted nor present in the gold labels scores
//! F1 = 0.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::stance::StanceLabel;

/// `counts[gold][predicted]`, indexed by [`StanceLabel::index`].
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct ConfusionMatrix {
    pub counts: [[u64; 2]; 2],
}

impl ConfusionMatrix {
    pub fn from_predictions(preds: &[StanceLabel], gold: &[StanceLabel]) -> Result<Self> {
        if preds.len() != gold.len() {
            return Err(Error::param(
                "predictions",
                format!("{} predictions vs {} gold labels", preds.len(), gold.len()),
            ));
        }
        let mut m = ConfusionMatrix::default();
        for (p, g) in preds.iter().zip(gold) {
            m.counts[g.index()][p.index()] += 1;
        }
        Ok(m)
    }

    pub fn get(&self, gold: StanceLabel, predicted: StanceLabel) -> u64 {
        self.counts[gold.index()][predicted.index()]
    }

    pub fn total(&self) -> u64 {
        self.counts.iter().flatten().sum()
    }

    pub fn add(&mut self, other: &ConfusionMatrix) {
        for g in 0..2 {
            for p in 0..2 {
                self.counts[g][p] += other.counts[g][p];
            }
        }
    }

    /// `2 TP / (2 TP + FP + FN)`, or 0 when the class never occurs.
    pub fn f1(&self, class: StanceLabel) -> f64 {
        let c = class.index();
        let o = 1 - c;
        let tp = self.counts[c][c] as f64;
        let fn_ = self.counts[c][o] as f64;
        let fp = self.counts[o][c] as f64;
        let denom = 2.0 * tp + fp + fn_;
        if denom == 0.0 {
            0.0
        } else {
            2.0 * tp / denom
        }
    }

    pub fn macro_f1(&self) -> f64 {
        (self.f1(StanceLabel::Favor) + self.f1(StanceLabel::Against)) / 2.0
    }
}

pub fn macro_f1(preds: &[StanceLabel], gold: &[StanceLabel]) -> Result<f64> {
    if preds.is_empty() {
        return Err(Error::param("predictions", "empty"));
    }
    Ok(ConfusionMatrix::from_predictions(preds, gold)?.macro_f1())
}

#[cfg(test)]
mod tests {
    use super::*;
    use StanceLabel::*;

    #[test]
    fn perfect() {
        let g = [Favor, Against, Favor];
        assert_eq!(macro_f1(&g, &g).unwrap(), 1.0);
    }

    #[test]
    fn all_against_on_balanced_gold() {
        let gold = [Favor, Against, Favor, Against];
        let preds = [Against; 4];
        assert!((macro_f1(&preds, &gold).unwrap() - 1.0 / 3.0).abs() < 1e-15);
    }

    #[test]
    fn aggregate_matrix() {
        let mut m = ConfusionMatrix::default();
        m.counts[Against.index()] = [232, 985];
        m.counts[Favor.index()] = [837, 340];
        assert_eq!(m.get(Against, Against), 985);
        assert!((m.macro_f1() - 0.7602).abs() < 5e-4);
    }

    #[test]
    fn length_mismatch_and_empty() {
        assert!(macro_f1(&[Favor], &[]).is_err());
        assert!(macro_f1(&[], &[]).is_err());
    }

    #[test]
    fn absent_class_scores_zero() {
        let m = ConfusionMatrix::from_predictions(&[Favor, Favor], &[Favor, Favor]).unwrap();
        assert_eq!(m.f1(Against), 0.0);
        assert_eq!(m.macro_f1(), 0.5);
    }
}
