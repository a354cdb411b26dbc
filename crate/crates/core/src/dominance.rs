//! Stochastic-order diagnostics between wealth distributions.
//!
//! Order 0 is the pathwise comparison of conditional wealth given `B(T)`,
//! done analytically. Orders `m >= 1` compare iterated integrals of
//! empirical CDFs: `D^1 = F`, `D^{k+1}(x) = int_{-inf}^x D^k`. Sample `a`
//! dominates `b` at order `m` when `D_a^m <= D_b^m` everywhere, up to a
//! DKW confidence slack.

use serde::Serialize;

use crate::analytics::conditional_expected_wealth;
use crate::error::{Error, Result};
use crate::market::{AllocationStrategy, Interpretation, MarketParams};
use crate::monte_carlo::WealthSample;

/// Confidence level of the DKW band.
pub const DKW_DELTA: f64 = 0.01;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DominanceVerdict {
    pub order: u32,
    pub a_dominates_b: bool,
    pub b_dominates_a: bool,
    /// `max_x (D_a^m - D_b^m)(x)`; positive values are evidence against
    /// `a` dominating `b`.
    pub violation_a_over_b: f64,
    /// `max_x (D_b^m - D_a^m)(x)`.
    pub violation_b_over_a: f64,
    /// Grid locations where `D_a^m - D_b^m` changes sign.
    pub crossing_points: Vec<f64>,
    /// Uniform slack on the CDFs; integrated `m - 1` times for order `m`.
    pub cdf_slack: f64,
}

impl DominanceVerdict {
    /// Largest violation in either direction, clamped at zero.
    pub fn max_violation(&self) -> f64 {
        self.violation_a_over_b
            .max(self.violation_b_over_a)
            .max(0.0)
    }
}

/// `2 sqrt(ln(2 / delta) / 2n)`.
pub fn dkw_slack(n: usize, delta: f64) -> f64 {
    2.0 * ((2.0 / delta).ln() / (2.0 * n as f64)).sqrt()
}

/// Compares at order `m` with the DKW slack for the smaller sample size.
pub fn empirical_cdf_compare(
    a: &WealthSample,
    b: &WealthSample,
    m: u32,
) -> Result<DominanceVerdict> {
    let n = a.len().min(b.len());
    if n == 0 {
        return Err(Error::EmptySample);
    }
    compare_sorted(a.values(), b.values(), m, dkw_slack(n, DKW_DELTA))
}

/// Compares two ascending samples at order `m` with an explicit CDF slack.
/// A slack of zero gives the exact empirical verdict.
pub fn compare_sorted(a: &[f64], b: &[f64], m: u32, cdf_slack: f64) -> Result<DominanceVerdict> {
    if a.is_empty() || b.is_empty() {
        return Err(Error::EmptySample);
    }
    if m == 0 {
        return Err(Error::InvalidGrid(
            "empirical comparison needs order m >= 1".into(),
        ));
    }
    let mut grid: Vec<f64> = Vec::with_capacity(a.len() + b.len());
    grid.extend_from_slice(a);
    grid.extend_from_slice(b);
    grid.sort_by(|x, y| x.total_cmp(y));
    grid.dedup();

    let mut da = ecdf_on_grid(a, &grid);
    let mut db = ecdf_on_grid(b, &grid);
    for _ in 1..m {
        da = integrate_trapezoid(&grid, &da);
        db = integrate_trapezoid(&grid, &db);
    }

    let origin = grid[0];
    let factorial: f64 = (1..m).map(f64::from).product();
    let slack_at = |x: f64| cdf_slack * (x - origin).powi(m as i32 - 1) / factorial;

    let mut violation_ab = f64::NEG_INFINITY;
    let mut violation_ba = f64::NEG_INFINITY;
    let mut a_dom = true;
    let mut b_dom = true;
    let mut crossings = Vec::new();
    let mut last: Option<(f64, f64)> = None;
    for (i, &x) in grid.iter().enumerate() {
        let d = da[i] - db[i];
        violation_ab = violation_ab.max(d);
        violation_ba = violation_ba.max(-d);
        let slack = slack_at(x);
        if d > slack {
            a_dom = false;
        }
        if -d > slack {
            b_dom = false;
        }
        if d != 0.0 {
            if let Some((x0, d0)) = last {
                if d0.signum() != d.signum() {
                    crossings.push(x0 + (x - x0) * d0 / (d0 - d));
                }
            }
            last = Some((x, d));
        }
    }
    Ok(DominanceVerdict {
        order: m,
        a_dominates_b: a_dom,
        b_dominates_a: b_dom,
        violation_a_over_b: violation_ab,
        violation_b_over_a: violation_ba,
        crossing_points: crossings,
        cdf_slack,
    })
}

/// Right-continuous empirical CDF of an ascending sample at ascending points.
fn ecdf_on_grid(sorted: &[f64], grid: &[f64]) -> Vec<f64> {
    let n = sorted.len() as f64;
    let mut k = 0;
    grid.iter()
        .map(|x| {
            while k < sorted.len() && sorted[k] <= *x {
                k += 1;
            }
            k as f64 / n
        })
        .collect()
}

fn integrate_trapezoid(grid: &[f64], values: &[f64]) -> Vec<f64> {
    let mut out = Vec::with_capacity(values.len());
    let mut acc = 0.0;
    out.push(acc);
    for i in 1..grid.len() {
        acc += 0.5 * (values[i] + values[i - 1]) * (grid[i] - grid[i - 1]);
        out.push(acc);
    }
    out
}

/// Zeroth-order check: `E[M_a(T) | B(T) = b] >= E[M_b(T) | B(T) = b]` at
/// every grid point.
pub fn pathwise_dominance_check(
    params: &MarketParams,
    strategy_a: &AllocationStrategy,
    strategy_b: &AllocationStrategy,
    interp: Interpretation,
    grid: &[f64],
) -> Result<bool> {
    if grid.is_empty() {
        return Err(Error::InvalidGrid("pathwise grid is empty".into()));
    }
    for &b in grid {
        let wa = conditional_expected_wealth(params, strategy_a, interp, b)?;
        let wb = conditional_expected_wealth(params, strategy_b, interp, b)?;
        if wa < wb {
            return Ok(false);
        }
    }
    Ok(true)
}

/// `points` equally spaced values on `[lo, hi]`.
pub fn uniform_grid(lo: f64, hi: f64, points: usize) -> Vec<f64> {
    if points < 2 {
        return vec![lo];
    }
    let steps = (points - 1) as f64;
    (0..points)
        .map(|i| lo + (hi - lo) * i as f64 / steps)
        .collect()
}
