//! Grid searches for the insider's optimal allocation.
//!
//! All searches score strategies with the analytic expectation from
//! [`crate::analytics`], so argmax recovery is exact up to grid resolution.

use rand::Rng;
use rayon::prelude::*;
use serde::Serialize;

use crate::analytics::{
    anticipating_expected_wealth, critical_threshold, honest_expected_wealth, normal_cdf,
};
use crate::error::{Error, Result};
use crate::market::{AllocationStrategy, Interpretation, MarketParams};
use crate::rng::{keyed, Purpose};

/// Slack used when checking that random candidates do not beat the
/// bang-bang table; covers quadrature error only.
const CANDIDATE_SLACK: f64 = 1e-10;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct OptimizationResult {
    pub best_strategy: AllocationStrategy,
    pub best_value: f64,
    /// `(family parameter, expected wealth)`: the cutoff for thresholds, the
    /// fraction for constants, the candidate index for step tables (0 is the
    /// bang-bang table).
    pub value_curve: Vec<(f64, f64)>,
    pub interpretation: Interpretation,
    /// Set for Ayed-Kuo and Hitsuda-Skorokhod: the expectation-maximizing
    /// strategy does not dominate the bank account pathwise or in any
    /// stochastic order, so its value is not a risk-free improvement.
    pub non_dominance_warning: bool,
}

fn check_increasing(grid: &[f64], what: &str) -> Result<()> {
    if grid.is_empty() {
        return Err(Error::InvalidGrid(format!("{what} grid is empty")));
    }
    if grid.iter().any(|x| !x.is_finite()) {
        return Err(Error::InvalidGrid(format!(
            "{what} grid has non-finite entries"
        )));
    }
    if grid.windows(2).any(|w| w[0] >= w[1]) {
        return Err(Error::InvalidGrid(format!(
            "{what} grid must be strictly increasing"
        )));
    }
    Ok(())
}

/// First index attaining the maximum.
fn argmax(curve: &[(f64, f64)]) -> usize {
    let mut best = 0;
    for (i, (_, v)) in curve.iter().enumerate() {
        if *v > curve[best].1 {
            best = i;
        }
    }
    best
}

fn evaluate_family(
    params: &MarketParams,
    interp: Interpretation,
    grid: &[f64],
    build: impl Fn(f64) -> Result<AllocationStrategy> + Sync,
) -> Result<Vec<(f64, f64)>> {
    grid.par_iter()
        .map(|x| {
            let strategy = build(*x)?;
            Ok((*x, anticipating_expected_wealth(params, &strategy, interp)?))
        })
        .collect()
}

/// Scores `1{x > c}` for every cutoff `c` in `grid`; ties go to the
/// smallest cutoff.
pub fn optimize_threshold(
    params: &MarketParams,
    interp: Interpretation,
    grid: &[f64],
) -> Result<OptimizationResult> {
    check_increasing(grid, "cutoff")?;
    let curve = evaluate_family(params, interp, grid, AllocationStrategy::threshold)?;
    let best = argmax(&curve);
    Ok(OptimizationResult {
        best_strategy: AllocationStrategy::threshold(curve[best].0)?,
        best_value: curve[best].1,
        value_curve: curve,
        interpretation: interp,
        non_dominance_warning: interp.is_shifted(),
    })
}

/// Scores constant allocations `c` in `grid`, each in `[0, 1]`.
pub fn optimize_constant(
    params: &MarketParams,
    interp: Interpretation,
    grid: &[f64],
) -> Result<OptimizationResult> {
    check_increasing(grid, "fraction")?;
    let curve = evaluate_family(params, interp, grid, AllocationStrategy::constant)?;
    let best = argmax(&curve);
    Ok(OptimizationResult {
        best_strategy: AllocationStrategy::constant(curve[best].0)?,
        best_value: curve[best].1,
        value_curve: curve,
        interpretation: interp,
        non_dominance_warning: interp.is_shifted(),
    })
}

/// The honest trader's problem over `c in {0, 0.1, ..., 1}`.
pub fn honest_optimum(params: &MarketParams) -> OptimizationResult {
    let curve: Vec<(f64, f64)> = (0..=10)
        .map(|i| {
            let c = i as f64 / 10.0;
            (c, honest_expected_wealth(params, c))
        })
        .collect();
    let best = argmax(&curve);
    OptimizationResult {
        best_strategy: AllocationStrategy::Constant {
            fraction: curve[best].0,
        },
        best_value: curve[best].1,
        value_curve: curve,
        interpretation: Interpretation::Ito,
        non_dominance_warning: false,
    }
}

/// Forward-integral gain of investing in the stock on an unbounded cell,
/// `int_cell phi_T(x) (e^{(mu - sigma^2/2) T + sigma x} - e^{rho T}) dx`.
fn open_cell_gain(params: &MarketParams, edge: f64, upper: bool) -> f64 {
    let root_t = params.horizon().sqrt();
    let shifted = normal_cdf((edge - params.volatility() * params.horizon()) / root_t);
    let plain = normal_cdf(edge / root_t);
    let (stock_mass, bank_mass) = if upper {
        (1.0 - shifted, 1.0 - plain)
    } else {
        (shifted, plain)
    };
    params.stock_mean_growth() * stock_mass - params.bank_growth() * bank_mass
}

/// Bang-bang table on the cells cut by `breakpoints`.
///
/// Under the forward integral a bounded cell is set to 1 exactly when the
/// pointwise gain `e^{(mu - sigma^2/2) T + sigma x} - e^{rho T}` is positive
/// at its midpoint; the two open outer cells use the sign of their
/// integrated gain. Under Ayed-Kuo and Hitsuda-Skorokhod the expectation is
/// increasing in `E[f(B(T))]`, so every cell is 1.
pub fn bang_bang_table(
    params: &MarketParams,
    interp: Interpretation,
    breakpoints: &[f64],
) -> Result<AllocationStrategy> {
    let cells = breakpoints.len() + 1;
    let values = match interp {
        Interpretation::Ito => {
            return Err(Error::InterpretationMismatch {
                interp,
                strategy: "step-table".into(),
            })
        }
        Interpretation::AyedKuo | Interpretation::HitsudaSkorokhod => vec![1.0; cells],
        Interpretation::RussoVallois => (0..cells)
            .map(|j| {
                let gain = if breakpoints.is_empty() {
                    params.stock_mean_growth() - params.bank_growth()
                } else if j == 0 {
                    open_cell_gain(params, breakpoints[0], false)
                } else if j == cells - 1 {
                    open_cell_gain(params, breakpoints[j - 1], true)
                } else {
                    let mid = 0.5 * (breakpoints[j - 1] + breakpoints[j]);
                    params.stock_growth(mid) - params.bank_growth()
                };
                if gain > 0.0 {
                    1.0
                } else {
                    0.0
                }
            })
            .collect(),
    };
    AllocationStrategy::step_table(breakpoints.to_vec(), values)
}

/// Returns the bang-bang table and scores it against `n_candidates` random
/// tables on the same cells (values uniform in `[0, 1]`). The curve starts
/// with the bang-bang table at parameter 0, followed by candidate `j` at
/// parameter `j`.
pub fn optimize_step_table(
    params: &MarketParams,
    interp: Interpretation,
    breakpoints: &[f64],
    n_candidates: usize,
    seed: u64,
) -> Result<OptimizationResult> {
    if breakpoints.windows(2).any(|w| w[0] >= w[1]) {
        return Err(Error::InvalidGrid(
            "breakpoints must be strictly increasing".into(),
        ));
    }
    let table = bang_bang_table(params, interp, breakpoints)?;
    let table_value = anticipating_expected_wealth(params, &table, interp)?;
    let candidates = random_tables(breakpoints, n_candidates, seed)?;
    let scores: Vec<f64> = candidates
        .par_iter()
        .map(|c| anticipating_expected_wealth(params, c, interp))
        .collect::<Result<_>>()?;
    let mut curve = Vec::with_capacity(n_candidates + 1);
    curve.push((0.0, table_value));
    curve.extend(scores.iter().enumerate().map(|(j, v)| ((j + 1) as f64, *v)));
    // the table keeps the argmax unless a candidate beats it beyond quadrature noise
    let best = curve
        .iter()
        .enumerate()
        .skip(1)
        .filter(|(_, (_, v))| *v > table_value + CANDIDATE_SLACK)
        .max_by(|a, b| a.1 .1.total_cmp(&b.1 .1))
        .map_or(0, |(i, _)| i);
    let best_strategy = if best == 0 {
        table
    } else {
        candidates[best - 1].clone()
    };
    Ok(OptimizationResult {
        best_strategy,
        best_value: curve[best].1,
        value_curve: curve,
        interpretation: interp,
        non_dominance_warning: interp.is_shifted(),
    })
}

/// Random step tables on the cells cut by `breakpoints`.
pub fn random_tables(
    breakpoints: &[f64],
    count: usize,
    seed: u64,
) -> Result<Vec<AllocationStrategy>> {
    (0..count)
        .map(|j| {
            let mut rng = keyed(seed, 0, Purpose::StepTables, j as u64);
            let values = (0..=breakpoints.len())
                .map(|_| rng.random::<f64>())
                .collect();
            AllocationStrategy::step_table(breakpoints.to_vec(), values)
        })
        .collect()
}

/// Search space shared by the experiment runner.
#[derive(Debug, Clone, PartialEq)]
pub struct SearchSpace {
    pub cutoffs: Vec<f64>,
    pub fractions: Vec<f64>,
    pub breakpoints: Vec<f64>,
    pub n_candidates: usize,
    pub seed: u64,
}

impl SearchSpace {
    /// Cutoffs on `[-1, 1]` in steps of 0.01, fractions `0, 0.1, ..., 1`, and
    /// step-table breakpoints on `[-3, 3]` in steps of 0.5.
    pub fn standard(seed: u64) -> Self {
        SearchSpace {
            cutoffs: (0..=200).map(|i| -1.0 + i as f64 / 100.0).collect(),
            fractions: (0..=10).map(|i| i as f64 / 10.0).collect(),
            breakpoints: (0..=12).map(|i| -3.0 + i as f64 / 2.0).collect(),
            n_candidates: 100,
            seed,
        }
    }
}

/// Per-family results and the overall winner. Families are tried in the
/// order constants, thresholds, step tables; a later family wins only with
/// a strictly larger value. The honest trader only has constants.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SearchOutcome {
    pub families: Vec<(String, OptimizationResult)>,
    pub best: OptimizationResult,
}

pub fn optimize(
    params: &MarketParams,
    interp: Interpretation,
    space: &SearchSpace,
) -> Result<SearchOutcome> {
    let mut families = Vec::new();
    if interp == Interpretation::Ito {
        families.push(("constant".to_string(), honest_optimum(params)));
    } else {
        families.push((
            "constant".to_string(),
            optimize_constant(params, interp, &space.fractions)?,
        ));
        families.push((
            "threshold".to_string(),
            optimize_threshold(params, interp, &space.cutoffs)?,
        ));
        families.push((
            "step-table".to_string(),
            optimize_step_table(
                params,
                interp,
                &space.breakpoints,
                space.n_candidates,
                space.seed,
            )?,
        ));
    }
    let mut best = &families[0].1;
    for (_, r) in &families[1..] {
        if r.best_value > best.best_value {
            best = r;
        }
    }
    let best = best.clone();
    Ok(SearchOutcome { families, best })
}

/// The cutoff grid `[x_c - 2 sqrt(T), x_c + 2 sqrt(T)]` with `points` nodes.
pub fn centered_cutoffs(params: &MarketParams, points: usize) -> Vec<f64> {
    let xc = critical_threshold(params);
    let half = 2.0 * params.horizon().sqrt();
    let steps = points.max(2) - 1;
    (0..=steps)
        .map(|i| xc - half + 2.0 * half * i as f64 / steps as f64)
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::analytics::rv_optimal_expected_wealth;

    fn tenth_grid() -> Vec<f64> {
        (0..=20).map(|i| -1.0 + i as f64 / 10.0).collect()
    }

    #[test]
    fn rv_threshold_recovers_critical_cutoff() {
        let p = MarketParams::reference();
        let r = optimize_threshold(&p, Interpretation::RussoVallois, &tenth_grid()).unwrap();
        match r.best_strategy {
            AllocationStrategy::Threshold { cutoff } => assert!((cutoff + 0.2).abs() < 1e-9),
            ref other => panic!("unexpected {other}"),
        }
        assert!(!r.non_dominance_warning);
        let max = r.value_curve.iter().map(|x| x.1).fold(f64::MIN, f64::max);
        assert_eq!(r.best_value, max);
    }

    #[test]
    fn ak_threshold_prefers_leftmost_cutoff() {
        let p = MarketParams::reference();
        let r = optimize_threshold(&p, Interpretation::AyedKuo, &tenth_grid()).unwrap();
        assert_eq!(
            r.best_strategy,
            AllocationStrategy::Threshold { cutoff: -1.0 }
        );
        assert!(r.non_dominance_warning);
    }

    #[test]
    fn singleton_grid() {
        let p = MarketParams::reference();
        let xc = critical_threshold(&p);
        let r = optimize_threshold(&p, Interpretation::RussoVallois, &[xc]).unwrap();
        assert_eq!(
            r.best_strategy,
            AllocationStrategy::Threshold { cutoff: xc }
        );
        assert!((r.best_value - rv_optimal_expected_wealth(&p)).abs() < 1e-9);
    }

    #[test]
    fn invalid_grids() {
        let p = MarketParams::reference();
        assert!(optimize_threshold(&p, Interpretation::RussoVallois, &[]).is_err());
        assert!(optimize_threshold(&p, Interpretation::RussoVallois, &[0.0, 0.0]).is_err());
        assert!(optimize_step_table(&p, Interpretation::RussoVallois, &[1.0, 0.0], 1, 0).is_err());
        assert!(optimize_constant(&p, Interpretation::AyedKuo, &[0.5, 1.5]).is_err());
    }

    #[test]
    fn honest_optimum_examples() {
        let p = MarketParams::reference();
        let r = honest_optimum(&p);
        assert_eq!(
            r.best_strategy,
            AllocationStrategy::Constant { fraction: 1.0 }
        );
        assert_eq!(r.best_value, 0.08f64.exp());
        assert!((r.best_value - 1.08329).abs() < 1e-5);
        assert!(r.value_curve.windows(2).all(|w| w[1].1 > w[0].1));
        assert_eq!(r.value_curve.len(), 11);
    }

    #[test]
    fn step_table_rv_is_indicator_of_midpoint() {
        let p = MarketParams::reference();
        let xc = critical_threshold(&p);
        let bps: Vec<f64> = (0..=12).map(|i| -3.0 + i as f64 / 2.0).collect();
        let r = optimize_step_table(&p, Interpretation::RussoVallois, &bps, 100, 3).unwrap();
        let AllocationStrategy::StepTable { values, .. } = &r.best_strategy else {
            panic!("expected a step table");
        };
        for j in 1..bps.len() {
            let mid = 0.5 * (bps[j - 1] + bps[j]);
            assert_eq!(values[j], if mid > xc { 1.0 } else { 0.0 });
        }
        assert_eq!(values[0], 0.0);
        assert_eq!(values[bps.len()], 1.0);
        assert_eq!(r.best_value, r.value_curve[0].1);
    }

    #[test]
    fn step_table_ak_is_all_ones() {
        let p = MarketParams::reference();
        let bps = [-1.0, 0.0, 1.0];
        for interp in [Interpretation::AyedKuo, Interpretation::HitsudaSkorokhod] {
            let r = optimize_step_table(&p, interp, &bps, 100, 5).unwrap();
            let AllocationStrategy::StepTable { values, .. } = &r.best_strategy else {
                panic!("expected a step table");
            };
            assert!(values.iter().all(|v| *v == 1.0));
            assert!(r.value_curve[1..]
                .iter()
                .all(|(_, v)| *v <= r.best_value + 1e-12));
            assert!((r.best_value - p.stock_mean_growth()).abs() < 1e-9);
        }
    }

    #[test]
    fn ito_has_no_step_tables() {
        let p = MarketParams::reference();
        assert!(optimize_step_table(&p, Interpretation::Ito, &[0.0], 3, 0).is_err());
        let out = optimize(&p, Interpretation::Ito, &SearchSpace::standard(0)).unwrap();
        assert_eq!(out.families.len(), 1);
        assert_eq!(out.best.best_value, p.stock_mean_growth());
    }

    #[test]
    fn combined_search_prefers_constant_one_under_ak() {
        let p = MarketParams::reference();
        let out = optimize(&p, Interpretation::AyedKuo, &SearchSpace::standard(1)).unwrap();
        assert_eq!(
            out.best.best_strategy,
            AllocationStrategy::Constant { fraction: 1.0 }
        );
        assert!(out.best.non_dominance_warning);
    }

    #[test]
    fn centered_grid_spans_two_root_t() {
        let p = MarketParams::reference();
        let g = centered_cutoffs(&p, 41);
        assert_eq!(g.len(), 41);
        assert!((g[0] - (-2.2)).abs() < 1e-12);
        assert!((g[40] - 1.8).abs() < 1e-12);
    }
}
