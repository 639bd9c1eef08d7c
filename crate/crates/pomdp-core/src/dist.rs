use crate::{Error, Result};
use rand::Rng;

/// Tolerance on the total mass of a [`DiscreteDistribution`].
pub const SUM_TOLERANCE: f64 = 1e-9;

/// A probability distribution over `0..n` encoded as a dense weight vector.
///
/// Valid distributions have non-negative finite entries summing to 1 within
/// [`SUM_TOLERANCE`]. Table builders and the file loader construct rows with
/// [`DiscreteDistribution::from_weights_unchecked`] and defer the numeric
/// checks to model validation, which is what lets validation *report* broken
/// rows instead of making them unrepresentable.
#[derive(Debug, Clone, PartialEq)]
pub struct DiscreteDistribution {
    weights: Vec<f64>,
}

impl DiscreteDistribution {
    /// Builds a checked distribution.
    pub fn new(weights: Vec<f64>) -> Result<Self> {
        let d = Self { weights };
        d.check()?;
        Ok(d)
    }

    /// Builds a distribution without checking the simplex invariant.
    pub fn from_weights_unchecked(weights: Vec<f64>) -> Self {
        Self { weights }
    }

    /// Uniform distribution over `n` outcomes.
    pub fn uniform(n: usize) -> Self {
        Self {
            weights: vec![1.0 / n as f64; n],
        }
    }

    /// Point mass on `index` among `n` outcomes.
    pub fn delta(index: usize, n: usize) -> Self {
        let mut weights = vec![0.0; n];
        weights[index] = 1.0;
        Self { weights }
    }

    /// Verifies the simplex invariant.
    pub fn check(&self) -> Result<()> {
        if self.weights.is_empty() {
            return Err(Error::EmptyDistribution);
        }
        for (index, &value) in self.weights.iter().enumerate() {
            if !value.is_finite() || value < 0.0 {
                return Err(Error::NegativeWeight { index, value });
            }
        }
        let sum: f64 = self.weights.iter().sum();
        if (sum - 1.0).abs() > SUM_TOLERANCE {
            return Err(Error::WeightSum {
                sum,
                tol: SUM_TOLERANCE,
            });
        }
        Ok(())
    }

    pub fn len(&self) -> usize {
        self.weights.len()
    }

    pub fn is_empty(&self) -> bool {
        self.weights.is_empty()
    }

    /// Probability of outcome `i`.
    pub fn prob(&self, i: usize) -> f64 {
        self.weights[i]
    }

    pub fn probs(&self) -> &[f64] {
        &self.weights
    }

    /// Expectation of `values` under this distribution.
    pub fn expectation(&self, values: &[f64]) -> f64 {
        self.weights
            .iter()
            .zip(values)
            .map(|(p, v)| p * v)
            .sum()
    }

    /// Draws an outcome by inverse-CDF walk.
    ///
    /// Assumes a valid distribution; rounding in the partial sums is absorbed
    /// by falling back to the last outcome with positive weight.
    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> usize {
        let u: f64 = rng.gen();
        let mut acc = 0.0;
        let mut last_positive = 0;
        for (i, &w) in self.weights.iter().enumerate() {
            if w > 0.0 {
                last_positive = i;
                acc += w;
                if u < acc {
                    return i;
                }
            }
        }
        last_positive
    }

    /// Outcomes with strictly positive probability.
    pub fn support(&self) -> impl Iterator<Item = usize> + '_ {
        self.weights
            .iter()
            .enumerate()
            .filter(|(_, &w)| w > 0.0)
            .map(|(i, _)| i)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha12Rng;

    // ── Construction ──

    #[test]
    fn uniform_and_delta_are_valid() {
        DiscreteDistribution::uniform(4).check().unwrap();
        DiscreteDistribution::delta(2, 5).check().unwrap();
        assert_eq!(DiscreteDistribution::delta(2, 5).prob(2), 1.0);
    }

    #[test]
    fn negative_weight_is_rejected() {
        let err = DiscreteDistribution::new(vec![0.5, -0.5, 1.0]).unwrap_err();
        assert!(matches!(err, Error::NegativeWeight { index: 1, .. }));
    }

    #[test]
    fn bad_sum_is_rejected() {
        let err = DiscreteDistribution::new(vec![0.5, 0.4]).unwrap_err();
        assert!(matches!(err, Error::WeightSum { .. }));
    }

    #[test]
    fn sum_within_tolerance_is_accepted() {
        DiscreteDistribution::new(vec![0.5, 0.5 + 0.5e-9]).unwrap();
    }

    // ── Sampling ──

    #[test]
    fn sample_frequencies_match_weights() {
        let d = DiscreteDistribution::new(vec![0.2, 0.0, 0.5, 0.3]).unwrap();
        let mut rng = ChaCha12Rng::seed_from_u64(7);
        let n = 100_000;
        let mut counts = [0usize; 4];
        for _ in 0..n {
            counts[d.sample(&mut rng)] += 1;
        }
        assert_eq!(counts[1], 0);
        for (i, &c) in counts.iter().enumerate() {
            let p = d.prob(i);
            let se = (p * (1.0 - p) / n as f64).sqrt();
            assert!(
                (c as f64 / n as f64 - p).abs() <= 4.0 * se + 1e-12,
                "outcome {i}: freq {} vs prob {p}",
                c as f64 / n as f64
            );
        }
    }

    #[test]
    fn sample_never_returns_zero_weight_outcome() {
        let d = DiscreteDistribution::new(vec![0.0, 1.0, 0.0]).unwrap();
        let mut rng = ChaCha12Rng::seed_from_u64(3);
        for _ in 0..1000 {
            assert_eq!(d.sample(&mut rng), 1);
        }
    }

    // ── Properties ──

    proptest! {
        #[test]
        fn normalized_weights_always_validate(raw in proptest::collection::vec(0.0f64..10.0, 1..12)) {
            let sum: f64 = raw.iter().sum();
            prop_assume!(sum > 1e-6);
            let normed: Vec<f64> = raw.iter().map(|w| w / sum).collect();
            DiscreteDistribution::new(normed).unwrap();
        }

        #[test]
        fn expectation_is_convex_combination(raw in proptest::collection::vec(0.01f64..1.0, 2..8)) {
            let sum: f64 = raw.iter().sum();
            let normed: Vec<f64> = raw.iter().map(|w| w / sum).collect();
            let d = DiscreteDistribution::new(normed).unwrap();
            let values: Vec<f64> = (0..d.len()).map(|i| i as f64).collect();
            let e = d.expectation(&values);
            prop_assert!(e >= 0.0 && e <= (d.len() - 1) as f64);
        }
    }
}
