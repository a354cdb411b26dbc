//! Monte Carlo estimates of terminal wealth.
//!
//! All wealth formulas depend on the path only through `B(T)`, so samples
//! are terminal draws `B_k(T) ~ N(0, T)`. Draw `k` comes from the stream
//! keyed by `(seed, k / BLOCK_SIZE)`, and sums are reduced in a fixed
//! pairwise tree over blocks, so every result is bit-identical for any
//! number of rayon workers.

use rand::Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::market::{terminal_wealth, AllocationStrategy, Interpretation, MarketParams};
use crate::rng::{keyed, Purpose};

pub const BLOCK_SIZE: usize = 1024;

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct EstimatorResult {
    pub mean: f64,
    pub std_error: f64,
    pub n_samples: usize,
    pub seed: u64,
}

/// Sorted terminal wealth draws and where they came from.
#[derive(Debug, Clone, PartialEq)]
pub struct WealthSample {
    values: Vec<f64>,
    mean: f64,
    params: MarketParams,
    strategy: AllocationStrategy,
    interp: Interpretation,
    seed: u64,
}

impl WealthSample {
    /// Builds a sample from arbitrary values, sorting them. Used for
    /// comparisons against external or synthetic data.
    pub fn from_values(
        mut values: Vec<f64>,
        params: MarketParams,
        strategy: AllocationStrategy,
        interp: Interpretation,
        seed: u64,
    ) -> Result<Self> {
        if values.is_empty() {
            return Err(Error::EmptySample);
        }
        let mean = summarize(&values).0;
        values.sort_by(|a, b| a.total_cmp(b));
        Ok(WealthSample {
            values,
            mean,
            params,
            strategy,
            interp,
            seed,
        })
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    /// Mean over the draws in generation order, reduced exactly like
    /// [`estimate_expected_wealth`].
    pub fn mean(&self) -> f64 {
        self.mean
    }

    pub fn min(&self) -> f64 {
        self.values[0]
    }

    pub fn max(&self) -> f64 {
        self.values[self.values.len() - 1]
    }

    pub fn params(&self) -> &MarketParams {
        &self.params
    }

    pub fn strategy(&self) -> &AllocationStrategy {
        &self.strategy
    }

    pub fn interpretation(&self) -> Interpretation {
        self.interp
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }
}

/// Runs `op` on a dedicated pool with `workers` threads.
pub fn with_workers<R: Send>(workers: usize, op: impl FnOnce() -> R + Send) -> R {
    rayon::ThreadPoolBuilder::new()
        .num_threads(workers.max(1))
        .build()
        .expect("thread pool")
        .install(op)
}

/// Fixed-shape pairwise summation.
pub(crate) fn pairwise_sum(xs: &[f64]) -> f64 {
    if xs.len() <= 8 {
        return xs.iter().sum();
    }
    let mid = xs.len() / 2;
    pairwise_sum(&xs[..mid]) + pairwise_sum(&xs[mid..])
}

/// Pairwise sum of `map(x)` with the leaves at block granularity evaluated in
/// parallel. The tree does not depend on the worker count.
fn blocked_sum(xs: &[f64], map: impl Fn(f64) -> f64 + Sync) -> f64 {
    let partials: Vec<f64> = xs
        .par_chunks(BLOCK_SIZE)
        .map(|chunk| {
            let mapped: Vec<f64> = chunk.iter().map(|x| map(*x)).collect();
            pairwise_sum(&mapped)
        })
        .collect();
    pairwise_sum(&partials)
}

/// `(mean, std_error)`. The mean is accumulated around the first draw, so a
/// degenerate sample returns its common value exactly.
fn summarize(xs: &[f64]) -> (f64, f64) {
    let n = xs.len() as f64;
    let pivot = xs[0];
    let mean = pivot + blocked_sum(xs, |x| x - pivot) / n;
    if xs.len() < 2 {
        return (mean, 0.0);
    }
    let ss = blocked_sum(xs, |x| (x - mean) * (x - mean));
    (mean, (ss / (n - 1.0) / n).sqrt())
}

/// `B_k(T)` for `k in 0..n`.
pub fn terminal_draws(horizon: f64, n: usize, seed: u64) -> Vec<f64> {
    let sd = horizon.sqrt();
    let blocks = n.div_ceil(BLOCK_SIZE);
    let chunks: Vec<Vec<f64>> = (0..blocks)
        .into_par_iter()
        .map(|block| {
            let len = BLOCK_SIZE.min(n - block * BLOCK_SIZE);
            let mut rng = keyed(seed, 0, Purpose::Terminal, block as u64);
            (0..len)
                .map(|_| {
                    let z: f64 = rng.sample(StandardNormal);
                    sd * z
                })
                .collect()
        })
        .collect();
    chunks.concat()
}

fn wealth_draws(
    params: &MarketParams,
    strategy: &AllocationStrategy,
    interp: Interpretation,
    n: usize,
    seed: u64,
) -> Result<Vec<f64>> {
    strategy.validate()?;
    let draws = terminal_draws(params.horizon(), n, seed);
    draws
        .par_iter()
        .map(|b| terminal_wealth(params, strategy, interp, *b).map(|w| w.total))
        .collect()
}

pub fn estimate_expected_wealth(
    params: &MarketParams,
    strategy: &AllocationStrategy,
    interp: Interpretation,
    n: usize,
    seed: u64,
) -> Result<EstimatorResult> {
    if n < 2 {
        return Err(Error::TooFewSamples { min: 2, got: n });
    }
    let totals = wealth_draws(params, strategy, interp, n, seed)?;
    let (mean, std_error) = summarize(&totals);
    Ok(EstimatorResult {
        mean,
        std_error,
        n_samples: n,
        seed,
    })
}

pub fn sample_wealth_distribution(
    params: &MarketParams,
    strategy: &AllocationStrategy,
    interp: Interpretation,
    n: usize,
    seed: u64,
) -> Result<WealthSample> {
    if n < 1 {
        return Err(Error::EmptySample);
    }
    let totals = wealth_draws(params, strategy, interp, n, seed)?;
    WealthSample::from_values(totals, *params, strategy.clone(), interp, seed)
}

/// Both sides of `E[f(B(T) - sigma T) e^{sigma B(T) - sigma^2 T / 2}] = E[f(B(T))]`
/// estimated on common draws.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct GirsanovCheck {
    pub lhs: f64,
    pub rhs: f64,
    /// Mean paired difference over its standard error.
    pub z_score: f64,
    pub n_samples: usize,
    pub seed: u64,
}

pub fn girsanov_identity_check(
    params: &MarketParams,
    strategy: &AllocationStrategy,
    n: usize,
    seed: u64,
) -> Result<GirsanovCheck> {
    if n < 2 {
        return Err(Error::TooFewSamples { min: 2, got: n });
    }
    strategy.validate()?;
    let s = params.volatility();
    let t = params.horizon();
    let draws = terminal_draws(t, n, seed);
    let lhs_draws: Vec<f64> = draws
        .par_iter()
        .map(|x| strategy.evaluate(x - s * t) * (s * x - 0.5 * s * s * t).exp())
        .collect();
    let rhs_draws: Vec<f64> = draws.par_iter().map(|x| strategy.evaluate(*x)).collect();
    let diffs: Vec<f64> = lhs_draws
        .iter()
        .zip(&rhs_draws)
        .map(|(l, r)| l - r)
        .collect();
    let (lhs, _) = summarize(&lhs_draws);
    let (rhs, _) = summarize(&rhs_draws);
    let (mean_diff, se_diff) = summarize(&diffs);
    let z_score = if se_diff > 0.0 {
        mean_diff / se_diff
    } else if mean_diff == 0.0 {
        0.0
    } else {
        mean_diff.signum() * f64::INFINITY
    };
    Ok(GirsanovCheck {
        lhs,
        rhs,
        z_score,
        n_samples: n,
        seed,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn pairwise_matches_exact_small_sums() {
        let xs: Vec<f64> = (1..=100).map(|i| i as f64).collect();
        assert_eq!(pairwise_sum(&xs), 5050.0);
        assert_eq!(pairwise_sum(&[]), 0.0);
    }

    #[test]
    fn degenerate_sample_is_exact() {
        let xs = vec![1.0202013400267558; 5000];
        let (mean, se) = summarize(&xs);
        assert_eq!(mean, xs[0]);
        assert_eq!(se, 0.0);
    }

    #[test]
    fn too_few_samples() {
        let p = MarketParams::reference();
        let one = AllocationStrategy::constant(1.0).unwrap();
        assert!(estimate_expected_wealth(&p, &one, Interpretation::AyedKuo, 1, 0).is_err());
        assert!(sample_wealth_distribution(&p, &one, Interpretation::AyedKuo, 0, 0).is_err());
        assert!(girsanov_identity_check(&p, &one, 1, 0).is_err());
    }

    #[test]
    fn ito_mismatch_propagates() {
        let p = MarketParams::reference();
        let thr = AllocationStrategy::threshold(0.0).unwrap();
        assert!(matches!(
            estimate_expected_wealth(&p, &thr, Interpretation::Ito, 100, 0),
            Err(Error::InterpretationMismatch { .. })
        ));
    }

    #[test]
    fn draws_do_not_depend_on_length() {
        let long = terminal_draws(1.0, 3000, 9);
        let short = terminal_draws(1.0, 1500, 9);
        assert_eq!(&long[..1500], &short[..]);
    }
}
