//! Walker/Vose alias tables for O(1) sampling from a fixed discrete distribution.

use rand::Rng;

use crate::error::{Error, Result};

#[derive(Clone, Debug, PartialEq)]
pub struct AliasTable {
    prob: Vec<f64>,
    alias: Vec<u32>,
}

impl AliasTable {
    /// Builds a table whose sampling distribution is `weights / sum(weights)`.
    pub fn new(weights: &[f64]) -> Result<Self> {
        let k = weights.len();
        if k == 0 {
            return Err(Error::ZeroWeights);
        }
        if let Some(w) = weights.iter().find(|w| !w.is_finite() || **w < 0.0) {
            return Err(Error::param("weights", format!("invalid weight {w}")));
        }
        let total: f64 = weights.iter().sum();
        if total <= 0.0 {
            return Err(Error::ZeroWeights);
        }

        let scale = k as f64 / total;
        let mut scaled: Vec<f64> = weights.iter().map(|w| w * scale).collect();
        let mut prob = vec![0.0; k];
        let mut alias: Vec<u32> = (0..k as u32).collect();

        let mut small = Vec::with_capacity(k);
        let mut large = Vec::with_capacity(k);
        for (i, &s) in scaled.iter().enumerate() {
            if s < 1.0 {
                small.push(i);
            } else {
                large.push(i);
            }
        }

        while let (Some(&s), Some(&l)) = (small.last(), large.last()) {
            small.pop();
            prob[s] = scaled[s].clamp(0.0, 1.0);
            alias[s] = l as u32;
            scaled[l] = (scaled[l] + scaled[s]) - 1.0;
            if scaled[l] < 1.0 {
                large.pop();
                small.push(l);
            }
        }
        // Leftovers are 1 up to rounding.
        for i in large.into_iter().chain(small) {
            prob[i] = 1.0;
            alias[i] = i as u32;
        }

        Ok(AliasTable { prob, alias })
    }

    pub fn len(&self) -> usize {
        self.prob.len()
    }

    pub fn is_empty(&self) -> bool {
        self.prob.is_empty()
    }

    pub fn prob(&self) -> &[f64] {
        &self.prob
    }

    pub fn alias(&self) -> &[u32] {
        &self.alias
    }

    #[inline]
    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> usize {
        let i = rng.gen_range(0..self.prob.len());
        if rng.gen::<f64>() < self.prob[i] {
            i
        } else {
            self.alias[i] as usize
        }
    }

    /// Exact probability mass the table assigns to each index.
    pub fn distribution(&self) -> Vec<f64> {
        let k = self.prob.len() as f64;
        let mut out = vec![0.0; self.prob.len()];
        for (i, (&p, &a)) in self.prob.iter().zip(&self.alias).enumerate() {
            out[i] += p / k;
            out[a as usize] += (1.0 - p) / k;
        }
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn single_weight_always_zero() {
        let t = AliasTable::new(&[1.0]).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        assert!((0..1000).all(|_| t.sample(&mut rng) == 0));
    }

    #[test]
    fn uniform_weights() {
        let t = AliasTable::new(&[1.0; 4]).unwrap();
        for p in t.distribution() {
            assert!((p - 0.25).abs() < 1e-12);
        }
    }

    #[test]
    fn one_three_monte_carlo() {
        let t = AliasTable::new(&[1.0, 3.0]).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        let n = 1_000_000;
        let ones = (0..n).filter(|_| t.sample(&mut rng) == 1).count();
        assert!((ones as f64 / n as f64 - 0.75).abs() < 0.003);
    }

    #[test]
    fn zero_weights_rejected() {
        assert!(matches!(AliasTable::new(&[0.0, 0.0]), Err(Error::ZeroWeights)));
        assert!(AliasTable::new(&[]).is_err());
        assert!(AliasTable::new(&[1.0, -1.0]).is_err());
    }

    #[test]
    fn zero_weight_never_sampled() {
        let t = AliasTable::new(&[5.0, 0.0, 5.0]).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        assert!((0..10_000).all(|_| t.sample(&mut rng) != 1));
    }

    proptest! {
        #[test]
        fn table_reproduces_weights(w in prop::collection::vec(0.0f64..10.0, 1..40)) {
            prop_assume!(w.iter().sum::<f64>() > 1e-6);
            let t = AliasTable::new(&w).unwrap();
            let total: f64 = w.iter().sum();
            for (got, wi) in t.distribution().iter().zip(&w) {
                prop_assert!((got - wi / total).abs() < 1e-9);
            }
            prop_assert!(t.prob().iter().all(|p| (0.0..=1.0).contains(p)));
            prop_assert!(t.alias().iter().all(|&a| (a as usize) < w.len()));
        }
    }
}
