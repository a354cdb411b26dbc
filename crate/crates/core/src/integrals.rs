//! Riemann-sum approximations of the forward and Ayed-Kuo integrals on a
//! discretized path, and the residual of the stock equation
//! `S1(T) = S1(0) + mu int S1 dt + sigma int S1 dB` along a path.
//!
//! The forward integral is approximated by the left-point sum
//! `sum phi(t_{i-1}) (B(t_i) - B(t_{i-1}))`. The Ayed-Kuo sum evaluates the
//! adapted factor at the left endpoint and the instantly independent factor
//! at the right endpoint, and extends to finite sums of such products by
//! linearity.

use std::fmt;
use std::sync::Arc;

use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::market::{AllocationStrategy, Interpretation, MarketParams};
use crate::paths::{generate, refine, BrownianPath};

/// `(t, B(t_0..=t))` -> value. The slice holds the path up to and including `t`.
pub type AdaptedRule = Arc<dyn Fn(f64, &[f64]) -> f64 + Send + Sync>;
/// `(t, B(T) - B(t))` -> value.
pub type IndependentRule = Arc<dyn Fn(f64, f64) -> f64 + Send + Sync>;

#[derive(Clone)]
pub enum IntegrandSpec {
    AdaptedOnly(AdaptedRule),
    InstantIndependent(IndependentRule),
    Product(AdaptedRule, IndependentRule),
    /// The closed-form stock leg `S1(t)` of the market model.
    SolutionProcess {
        params: MarketParams,
        strategy: AllocationStrategy,
        interp: Interpretation,
    },
    /// `sum c_j X_j`, integrated term by term.
    Combination(Vec<(f64, IntegrandSpec)>),
}

impl IntegrandSpec {
    pub fn adapted(rule: impl Fn(f64, &[f64]) -> f64 + Send + Sync + 'static) -> Self {
        IntegrandSpec::AdaptedOnly(Arc::new(rule))
    }

    pub fn independent(rule: impl Fn(f64, f64) -> f64 + Send + Sync + 'static) -> Self {
        IntegrandSpec::InstantIndependent(Arc::new(rule))
    }

    pub fn product(
        adapted: impl Fn(f64, &[f64]) -> f64 + Send + Sync + 'static,
        independent: impl Fn(f64, f64) -> f64 + Send + Sync + 'static,
    ) -> Self {
        IntegrandSpec::Product(Arc::new(adapted), Arc::new(independent))
    }

    pub fn solution(
        params: MarketParams,
        strategy: AllocationStrategy,
        interp: Interpretation,
    ) -> Self {
        IntegrandSpec::SolutionProcess {
            params,
            strategy,
            interp,
        }
    }

    pub fn combination(terms: Vec<(f64, IntegrandSpec)>) -> Self {
        IntegrandSpec::Combination(terms)
    }

    /// `B(t)`.
    pub fn brownian() -> Self {
        IntegrandSpec::adapted(|_, hist| hist[hist.len() - 1])
    }

    /// `B(T)` written as `B(t) + (B(T) - B(t))`.
    pub fn terminal_decomposed() -> Self {
        IntegrandSpec::combination(vec![
            (1.0, IntegrandSpec::brownian()),
            (1.0, IntegrandSpec::independent(|_, future| future)),
        ])
    }
}

impl fmt::Debug for IntegrandSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            IntegrandSpec::AdaptedOnly(_) => f.write_str("AdaptedOnly(..)"),
            IntegrandSpec::InstantIndependent(_) => f.write_str("InstantIndependent(..)"),
            IntegrandSpec::Product(_, _) => f.write_str("Product(..)"),
            IntegrandSpec::SolutionProcess {
                strategy, interp, ..
            } => write!(f, "SolutionProcess({strategy}, {interp})"),
            IntegrandSpec::Combination(terms) => f.debug_list().entries(terms).finish(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct IntegralResult {
    pub value: f64,
    pub grid_steps: usize,
}

#[derive(Clone, Copy, PartialEq)]
enum Scheme {
    Forward,
    AyedKuo,
}

pub fn forward_riemann_sum(
    integrand: &IntegrandSpec,
    path: &BrownianPath,
) -> Result<IntegralResult> {
    Ok(IntegralResult {
        value: riemann_sum(integrand, path, Scheme::Forward)?,
        grid_steps: path.step_count(),
    })
}

pub fn ayed_kuo_riemann_sum(
    integrand: &IntegrandSpec,
    path: &BrownianPath,
) -> Result<IntegralResult> {
    Ok(IntegralResult {
        value: riemann_sum(integrand, path, Scheme::AyedKuo)?,
        grid_steps: path.step_count(),
    })
}

fn checked(value: f64, t: f64) -> Result<f64> {
    if value.is_finite() {
        Ok(value)
    } else {
        Err(Error::EvaluationFailure {
            t,
            reason: format!("integrand evaluated to {value}"),
        })
    }
}

fn riemann_sum(integrand: &IntegrandSpec, path: &BrownianPath, scheme: Scheme) -> Result<f64> {
    let b = path.values();
    let b_terminal = path.terminal();
    let n = path.step_count();
    match integrand {
        IntegrandSpec::AdaptedOnly(rule) => {
            let mut acc = 0.0;
            for i in 1..=n {
                let t = path.time(i - 1);
                acc += checked(rule(t, &b[..i]), t)? * (b[i] - b[i - 1]);
            }
            Ok(acc)
        }
        IntegrandSpec::InstantIndependent(rule) => {
            let mut acc = 0.0;
            for i in 1..=n {
                let j = match scheme {
                    Scheme::Forward => i - 1,
                    Scheme::AyedKuo => i,
                };
                let t = path.time(j);
                acc += checked(rule(t, b_terminal - b[j]), t)? * (b[i] - b[i - 1]);
            }
            Ok(acc)
        }
        IntegrandSpec::Product(adapted, independent) => {
            let mut acc = 0.0;
            for i in 1..=n {
                let t_left = path.time(i - 1);
                let j = match scheme {
                    Scheme::Forward => i - 1,
                    Scheme::AyedKuo => i,
                };
                let t_phi = path.time(j);
                let a = checked(adapted(t_left, &b[..i]), t_left)?;
                let phi = checked(independent(t_phi, b_terminal - b[j]), t_phi)?;
                acc += a * phi * (b[i] - b[i - 1]);
            }
            Ok(acc)
        }
        IntegrandSpec::SolutionProcess {
            params,
            strategy,
            interp,
        } => match scheme {
            Scheme::Forward => {
                let s1 = solution_profile(params, strategy, *interp, path)?;
                Ok((1..=n).map(|i| s1[i - 1] * (b[i] - b[i - 1])).sum())
            }
            Scheme::AyedKuo => {
                let decomposed = decompose_solution(params, strategy, *interp)?;
                riemann_sum(&decomposed, path, scheme)
            }
        },
        IntegrandSpec::Combination(terms) => {
            let mut acc = 0.0;
            for (coef, term) in terms {
                acc += coef * riemann_sum(term, path, scheme)?;
            }
            Ok(acc)
        }
    }
}

/// Exponential kernel `(theta, k)` with `f(x) = k e^{theta x}` before capping.
/// Only constants and exponential strategies have one.
fn exponential_kernel(strategy: &AllocationStrategy) -> Option<(f64, f64)> {
    match strategy {
        AllocationStrategy::Constant { fraction } => Some((0.0, *fraction)),
        AllocationStrategy::ExpDecomposable { theta, scale } => Some((*theta, *scale)),
        _ => None,
    }
}

/// Splits `S1(t) = M k e^{theta (B(T) - shift(t))} e^{(mu - sigma^2/2) t + sigma B(t)}`
/// into `[M k e^{theta (B(t) - shift(t))} e^{(mu - sigma^2/2) t + sigma B(t)}] * [e^{theta (B(T) - B(t))}]`.
fn decompose_solution(
    params: &MarketParams,
    strategy: &AllocationStrategy,
    interp: Interpretation,
) -> Result<IntegrandSpec> {
    interp.check_strategy(strategy)?;
    let (theta, k) = exponential_kernel(strategy).ok_or_else(|| {
        Error::NotDecomposable(format!("{strategy} is not a product of exponentials"))
    })?;
    let p = *params;
    let shift_rate = if interp.is_shifted() {
        p.volatility()
    } else {
        0.0
    };
    let adapted = move |t: f64, hist: &[f64]| {
        let b_t = hist[hist.len() - 1];
        p.total_wealth() * k * (theta * (b_t - shift_rate * t)).exp() * p.stock_growth_at(t, b_t)
    };
    if theta == 0.0 {
        return Ok(IntegrandSpec::adapted(adapted));
    }
    Ok(IntegrandSpec::product(adapted, move |_, future| {
        (theta * future).exp()
    }))
}

/// `S1(t_i)` on the grid. Under the shifted interpretations an exponential
/// strategy is represented by its uncapped kernel `k e^{theta x}`, the only
/// form with a product decomposition.
fn solution_profile(
    params: &MarketParams,
    strategy: &AllocationStrategy,
    interp: Interpretation,
    path: &BrownianPath,
) -> Result<Vec<f64>> {
    interp.check_strategy(strategy)?;
    let b_terminal = path.terminal();
    let m = params.total_wealth();
    let s = params.volatility();
    let kernel = exponential_kernel(strategy);
    let profile = path
        .values()
        .iter()
        .enumerate()
        .map(|(i, &b_t)| {
            let t = path.time(i);
            let weight = if interp.is_shifted() {
                let x = b_terminal - s * t;
                match kernel {
                    Some((theta, k)) => k * (theta * x).exp(),
                    None => strategy.evaluate(x),
                }
            } else {
                strategy.evaluate(b_terminal)
            };
            m * weight * params.stock_growth_at(t, b_t)
        })
        .collect();
    Ok(profile)
}

/// `|S1(T) - S1(0) - mu int_0^T S1 dt - sigma int_0^T S1 dB|` along `path`,
/// with the drift integral by the trapezoid rule and the stochastic integral
/// by the forward sum (Ito, Russo-Vallois) or the Ayed-Kuo sum.
///
/// Ayed-Kuo needs a product decomposition, so only constant and exponential
/// strategies are accepted there; the exponential strategy is verified
/// through its uncapped kernel.
pub fn integral_equation_residual(
    params: &MarketParams,
    strategy: &AllocationStrategy,
    interp: Interpretation,
    path: &BrownianPath,
) -> Result<f64> {
    if (path.horizon() - params.horizon()).abs() > 1e-12 * params.horizon() {
        return Err(Error::InvalidGrid(format!(
            "path horizon {} does not match market horizon {}",
            path.horizon(),
            params.horizon()
        )));
    }
    let integrand = IntegrandSpec::solution(*params, strategy.clone(), interp);
    let stochastic = match interp {
        Interpretation::Ito | Interpretation::RussoVallois => {
            forward_riemann_sum(&integrand, path)?.value
        }
        Interpretation::AyedKuo => ayed_kuo_riemann_sum(&integrand, path)?.value,
        Interpretation::HitsudaSkorokhod => {
            return Err(Error::UnsupportedInterpretation(interp));
        }
    };
    let s1 = solution_profile(params, strategy, interp, path)?;
    let dt = path.dt();
    let drift: f64 = s1.windows(2).map(|w| 0.5 * (w[0] + w[1]) * dt).sum();
    let residual = s1[s1.len() - 1]
        - s1[0]
        - params.appreciation_rate() * drift
        - params.volatility() * stochastic;
    Ok(residual.abs())
}

/// Median residual at one grid size.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ResidualLevel {
    pub grid_steps: usize,
    pub median_residual: f64,
}

/// Median of [`integral_equation_residual`] over `n_paths` paths, each
/// generated on `base_steps` steps (stream ids `0..n_paths`) and refined by
/// every factor in `factors` (1 keeps the base grid). All levels share the
/// same underlying Brownian paths.
pub fn residual_study(
    params: &MarketParams,
    strategy: &AllocationStrategy,
    interp: Interpretation,
    base_steps: usize,
    factors: &[usize],
    n_paths: usize,
    seed: u64,
) -> Result<Vec<ResidualLevel>> {
    if n_paths == 0 {
        return Err(Error::InvalidGrid(
            "residual study needs at least one path".into(),
        ));
    }
    let bases: Vec<BrownianPath> = (0..n_paths as u64)
        .into_par_iter()
        .map(|k| generate(params.horizon(), base_steps, seed, k))
        .collect::<Result<_>>()?;
    factors
        .iter()
        .map(|&factor| {
            let mut residuals: Vec<f64> = bases
                .par_iter()
                .map(|base| {
                    let path = if factor == 1 {
                        base.clone()
                    } else {
                        refine(base, factor)?
                    };
                    integral_equation_residual(params, strategy, interp, &path)
                })
                .collect::<Result<_>>()?;
            Ok(ResidualLevel {
                grid_steps: base_steps * factor,
                median_residual: median(&mut residuals),
            })
        })
        .collect()
}

/// Median of a non-empty slice; the mean of the two middle values for even
/// lengths. Reorders the slice.
pub fn median(values: &mut [f64]) -> f64 {
    values.sort_by(|a, b| a.total_cmp(b));
    let n = values.len();
    if n % 2 == 1 {
        values[n / 2]
    } else {
        0.5 * (values[n / 2 - 1] + values[n / 2])
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn unit_integrand_telescopes() {
        let path = generate(1.0, 64, 5, 1).unwrap();
        let one = IntegrandSpec::adapted(|_, _| 1.0);
        let fwd = forward_riemann_sum(&one, &path).unwrap();
        assert_eq!(fwd.grid_steps, 64);
        assert!((fwd.value - path.terminal()).abs() < 1e-12);
        let prod = IntegrandSpec::product(|_, _| 1.0, |_, _| 1.0);
        let ak = ayed_kuo_riemann_sum(&prod, &path).unwrap();
        assert!((ak.value - path.terminal()).abs() < 1e-12);
    }

    #[test]
    fn constant_anticipating_integrand() {
        let path = generate(1.0, 128, 8, 2).unwrap();
        let bt = path.terminal();
        let integrand = IntegrandSpec::adapted(move |_, _| bt);
        let r = forward_riemann_sum(&integrand, &path).unwrap();
        assert!((r.value - bt * bt).abs() < 1e-12);
    }

    #[test]
    fn adapted_only_sums_coincide() {
        let path = generate(1.0, 256, 9, 4).unwrap();
        let integrand = IntegrandSpec::adapted(|t, hist| t * hist[hist.len() - 1].sin());
        let fwd = forward_riemann_sum(&integrand, &path).unwrap();
        let ak = ayed_kuo_riemann_sum(&integrand, &path).unwrap();
        assert_eq!(fwd.value, ak.value);
    }

    #[test]
    fn threshold_is_not_decomposable() {
        let p = MarketParams::reference();
        let path = generate(1.0, 16, 1, 1).unwrap();
        let thr = AllocationStrategy::threshold(-0.2).unwrap();
        let spec = IntegrandSpec::solution(p, thr.clone(), Interpretation::AyedKuo);
        assert!(matches!(
            ayed_kuo_riemann_sum(&spec, &path),
            Err(Error::NotDecomposable(_))
        ));
        assert!(matches!(
            integral_equation_residual(&p, &thr, Interpretation::AyedKuo, &path),
            Err(Error::NotDecomposable(_))
        ));
        // forward sums accept any strategy
        assert!(integral_equation_residual(&p, &thr, Interpretation::RussoVallois, &path).is_ok());
    }

    #[test]
    fn hitsuda_skorokhod_has_no_riemann_sum() {
        let p = MarketParams::reference();
        let path = generate(1.0, 16, 1, 1).unwrap();
        let one = AllocationStrategy::constant(1.0).unwrap();
        assert!(matches!(
            integral_equation_residual(&p, &one, Interpretation::HitsudaSkorokhod, &path),
            Err(Error::UnsupportedInterpretation(_))
        ));
    }

    #[test]
    fn non_finite_integrand_fails() {
        let path = generate(1.0, 8, 1, 1).unwrap();
        let bad = IntegrandSpec::adapted(|t, _| if t > 0.5 { f64::NAN } else { 1.0 });
        assert!(matches!(
            forward_riemann_sum(&bad, &path),
            Err(Error::EvaluationFailure { .. })
        ));
    }

    #[test]
    fn constant_solution_decomposes_to_forward_sum() {
        // a constant strategy has no instantly independent factor, so both
        // sums reduce to the same left-point sum
        let p = MarketParams::reference();
        let path = generate(1.0, 512, 3, 7).unwrap();
        let c = AllocationStrategy::constant(0.4).unwrap();
        let spec = IntegrandSpec::solution(p, c, Interpretation::AyedKuo);
        let fwd = forward_riemann_sum(&spec, &path).unwrap().value;
        let ak = ayed_kuo_riemann_sum(&spec, &path).unwrap().value;
        assert!((fwd - ak).abs() < 1e-12 * fwd.abs().max(1.0));
    }
}
