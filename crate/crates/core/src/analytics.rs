//! Closed-form and quadrature expectations of terminal wealth.

use libm::erfc;
use serde::Serialize;

use crate::error::Result;
use crate::market::{bank_terminal, AllocationStrategy, Interpretation, MarketParams};
use crate::quadrature;

/// Absolute tolerance of every Gaussian expectation.
pub const QUADRATURE_TOLERANCE: f64 = 1e-11;

/// Standard normal cumulative distribution function.
pub fn normal_cdf(x: f64) -> f64 {
    0.5 * erfc(-x / std::f64::consts::SQRT_2)
}

fn gaussian_density(x: f64, variance: f64) -> f64 {
    (-0.5 * x * x / variance).exp() / (2.0 * std::f64::consts::PI * variance).sqrt()
}

/// `E[g(B(T))]` for `B(T) ~ N(0, T)`. The integration window covers ten
/// standard deviations plus `extra_shift` on each side, split at `breakpoints`.
fn gaussian_expectation<G: Fn(f64) -> f64>(
    g: G,
    horizon: f64,
    extra_shift: f64,
    breakpoints: &[f64],
) -> Result<f64> {
    let half_width = 10.0 * horizon.sqrt() + extra_shift.abs();
    let integrand = |x: f64| g(x) * gaussian_density(x, horizon);
    quadrature::integrate_split(
        &integrand,
        -half_width,
        half_width,
        breakpoints,
        QUADRATURE_TOLERANCE,
    )
}

/// `M (1 - c) e^{rho T} + M c e^{mu T}`: the honest trader holding a stock
/// fraction `c`.
pub fn honest_expected_wealth(params: &MarketParams, fraction: f64) -> f64 {
    let (bank, stock) = params.honest_split(fraction);
    bank * params.bank_growth() + stock * params.stock_mean_growth()
}

/// `x_c = (T / sigma) (rho - mu + sigma^2 / 2)`, the terminal Brownian value
/// above which the stock beats the bank at maturity.
pub fn critical_threshold(params: &MarketParams) -> f64 {
    let s = params.volatility();
    params.horizon() / s * (params.interest_rate() - params.appreciation_rate() + 0.5 * s * s)
}

/// Expected wealth of the forward-integral insider playing the optimal
/// indicator strategy `1{B(T) > x_c}`.
pub fn rv_optimal_expected_wealth(params: &MarketParams) -> f64 {
    let s = params.volatility();
    let rho = params.interest_rate();
    let mu = params.appreciation_rate();
    let root_t = params.horizon().sqrt();
    let m = params.total_wealth();
    m * normal_cdf((s * s + 2.0 * rho - 2.0 * mu) * root_t / (2.0 * s)) * params.bank_growth()
        + m * normal_cdf((s * s - 2.0 * rho + 2.0 * mu) * root_t / (2.0 * s))
            * params.stock_mean_growth()
}

/// `E[f(B(T))]`.
pub fn expected_allocation(params: &MarketParams, strategy: &AllocationStrategy) -> Result<f64> {
    if let AllocationStrategy::Constant { fraction } = strategy {
        return Ok(*fraction);
    }
    gaussian_expectation(
        |x| strategy.evaluate(x),
        params.horizon(),
        0.0,
        &strategy.breakpoints(),
    )
}

/// `E[M(T)]` under the given interpretation.
///
/// Ayed-Kuo and Hitsuda-Skorokhod reduce, through the Girsanov change of
/// variables, to the convex combination
/// `M [e^{rho T} + (e^{mu T} - e^{rho T}) E[f(B(T))]]`. The forward integral
/// gives `M [e^{rho T} + int f(x) phi_T(x) (e^{(mu - sigma^2/2) T + sigma x} - e^{rho T}) dx]`.
pub fn anticipating_expected_wealth(
    params: &MarketParams,
    strategy: &AllocationStrategy,
    interp: Interpretation,
) -> Result<f64> {
    strategy.validate()?;
    interp.check_strategy(strategy)?;
    let m = params.total_wealth();
    let bank = params.bank_growth();
    let stock = params.stock_mean_growth();
    match (interp, strategy) {
        (Interpretation::Ito, AllocationStrategy::Constant { fraction }) => {
            Ok(honest_expected_wealth(params, *fraction))
        }
        (Interpretation::RussoVallois, AllocationStrategy::Constant { fraction }) => {
            Ok(m * (bank + fraction * (stock - bank)))
        }
        (Interpretation::RussoVallois, _) => {
            let gain = gaussian_expectation(
                |x| strategy.evaluate(x) * (params.stock_growth(x) - bank),
                params.horizon(),
                params.volatility() * params.horizon(),
                &strategy.breakpoints(),
            )?;
            Ok(m * (bank + gain))
        }
        _ => {
            let mean_allocation = expected_allocation(params, strategy)?;
            Ok(m * (bank + (stock - bank) * mean_allocation))
        }
    }
}

/// `E[M(T) | B(T) = b]`. Wealth is a function of `B(T)` alone, so this is the
/// pathwise terminal wealth.
pub fn conditional_expected_wealth(
    params: &MarketParams,
    strategy: &AllocationStrategy,
    interp: Interpretation,
    b_terminal: f64,
) -> Result<f64> {
    interp.check_strategy(strategy)?;
    let argument = if interp.is_shifted() {
        b_terminal - params.volatility() * params.horizon()
    } else {
        b_terminal
    };
    let stock =
        params.total_wealth() * strategy.evaluate(argument) * params.stock_growth(b_terminal);
    Ok(bank_terminal(params, strategy, b_terminal) + stock)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum FormulaId {
    Honest,
    RvPhi,
    RvQuadrature,
    ConvexCombination,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ExpectedWealthReport {
    pub interpretation: Interpretation,
    pub strategy: AllocationStrategy,
    pub analytic_value: f64,
    pub formula_id: FormulaId,
}

pub fn expected_wealth_report(
    params: &MarketParams,
    strategy: &AllocationStrategy,
    interp: Interpretation,
) -> Result<ExpectedWealthReport> {
    let (analytic_value, formula_id) = match (interp, strategy) {
        (Interpretation::Ito, _) => (
            anticipating_expected_wealth(params, strategy, interp)?,
            FormulaId::Honest,
        ),
        (Interpretation::RussoVallois, AllocationStrategy::Threshold { cutoff })
            if *cutoff == critical_threshold(params) =>
        {
            (rv_optimal_expected_wealth(params), FormulaId::RvPhi)
        }
        (Interpretation::RussoVallois, _) => (
            anticipating_expected_wealth(params, strategy, interp)?,
            FormulaId::RvQuadrature,
        ),
        _ => (
            anticipating_expected_wealth(params, strategy, interp)?,
            FormulaId::ConvexCombination,
        ),
    };
    Ok(ExpectedWealthReport {
        interpretation: interp,
        strategy: strategy.clone(),
        analytic_value,
        formula_id,
    })
}
