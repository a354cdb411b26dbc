//! Market parameters, insider allocation strategies and the closed-form
//! terminal wealth of the buy-and-hold insider under each notion of
//! stochastic integration.
//!
//! The bank account grows deterministically from `M (1 - f(B(T)))`. The stock
//! leg starts from `M f(B(T))` and solves a linear SDE whose meaning depends
//! on the [`Interpretation`]:
//!
//! * Russo-Vallois forward integral: `S1(T) = M f(B(T)) e^{(mu - sigma^2/2) T + sigma B(T)}`
//! * Ayed-Kuo and Hitsuda-Skorokhod: the strategy argument is shifted,
//!   `S1(T) = M f(B(T) - sigma T) e^{(mu - sigma^2/2) T + sigma B(T)}`
//! * Ito (honest trader): only constant allocations are adapted.

use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::paths::BrownianPath;

/// The five economic constants of the two-asset market.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RawMarketParams", into = "RawMarketParams")]
pub struct MarketParams {
    total_wealth: f64,
    interest_rate: f64,
    appreciation_rate: f64,
    volatility: f64,
    horizon: f64,
}

#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawMarketParams {
    total_wealth: f64,
    interest_rate: f64,
    appreciation_rate: f64,
    volatility: f64,
    horizon: f64,
}

impl TryFrom<RawMarketParams> for MarketParams {
    type Error = Error;

    fn try_from(raw: RawMarketParams) -> Result<Self> {
        MarketParams::new(
            raw.total_wealth,
            raw.interest_rate,
            raw.appreciation_rate,
            raw.volatility,
            raw.horizon,
        )
    }
}

impl From<MarketParams> for RawMarketParams {
    fn from(p: MarketParams) -> Self {
        RawMarketParams {
            total_wealth: p.total_wealth,
            interest_rate: p.interest_rate,
            appreciation_rate: p.appreciation_rate,
            volatility: p.volatility,
            horizon: p.horizon,
        }
    }
}

impl MarketParams {
    /// Builds a validated parameter set. Requires `M > 0`, `sigma > 0`,
    /// `T > 0` and `mu > rho`, all finite.
    pub fn new(
        total_wealth: f64,
        interest_rate: f64,
        appreciation_rate: f64,
        volatility: f64,
        horizon: f64,
    ) -> Result<Self> {
        let all = [
            ("total_wealth", total_wealth),
            ("interest_rate", interest_rate),
            ("appreciation_rate", appreciation_rate),
            ("volatility", volatility),
            ("horizon", horizon),
        ];
        if let Some((name, v)) = all.iter().find(|(_, v)| !v.is_finite()) {
            return Err(Error::InvalidParams(format!(
                "{name} must be finite, got {v}"
            )));
        }
        if total_wealth <= 0.0 {
            return Err(Error::InvalidParams(format!(
                "total_wealth must be positive, got {total_wealth}"
            )));
        }
        if volatility <= 0.0 {
            return Err(Error::InvalidParams(format!(
                "volatility must be positive, got {volatility}"
            )));
        }
        if horizon <= 0.0 {
            return Err(Error::InvalidParams(format!(
                "horizon must be positive, got {horizon}"
            )));
        }
        if appreciation_rate <= interest_rate {
            return Err(Error::InvalidParams(format!(
                "appreciation_rate ({appreciation_rate}) must exceed interest_rate ({interest_rate})"
            )));
        }
        Ok(MarketParams {
            total_wealth,
            interest_rate,
            appreciation_rate,
            volatility,
            horizon,
        })
    }

    /// M = 1, rho = 0.02, mu = 0.08, sigma = 0.2, T = 1.
    pub fn reference() -> Self {
        MarketParams::new(1.0, 0.02, 0.08, 0.2, 1.0).expect("reference parameters are valid")
    }

    pub fn total_wealth(&self) -> f64 {
        self.total_wealth
    }

    pub fn interest_rate(&self) -> f64 {
        self.interest_rate
    }

    pub fn appreciation_rate(&self) -> f64 {
        self.appreciation_rate
    }

    pub fn volatility(&self) -> f64 {
        self.volatility
    }

    pub fn horizon(&self) -> f64 {
        self.horizon
    }

    /// Same market with the initial wealth multiplied by `factor`.
    pub fn scaled(&self, factor: f64) -> Result<Self> {
        MarketParams::new(
            self.total_wealth * factor,
            self.interest_rate,
            self.appreciation_rate,
            self.volatility,
            self.horizon,
        )
    }

    /// Honest split `(M0, M1) = (M (1 - c), M c)` for a stock fraction `c`.
    pub fn honest_split(&self, fraction: f64) -> (f64, f64) {
        (
            self.total_wealth * (1.0 - fraction),
            self.total_wealth * fraction,
        )
    }

    /// `e^{rho T}`
    pub fn bank_growth(&self) -> f64 {
        (self.interest_rate * self.horizon).exp()
    }

    /// `e^{mu T}`
    pub fn stock_mean_growth(&self) -> f64 {
        (self.appreciation_rate * self.horizon).exp()
    }

    /// `e^{(mu - sigma^2/2) T + sigma b}`, the geometric Brownian factor at
    /// maturity given `B(T) = b`.
    pub fn stock_growth(&self, b_terminal: f64) -> f64 {
        self.stock_growth_at(self.horizon, b_terminal)
    }

    pub(crate) fn stock_growth_at(&self, t: f64, b_t: f64) -> f64 {
        let s = self.volatility;
        ((self.appreciation_rate - 0.5 * s * s) * t + s * b_t).exp()
    }
}

/// Fraction of wealth placed in the stock as a function of the terminal
/// Brownian value `B(T)`. Every variant evaluates into `[0, 1]`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case", deny_unknown_fields)]
pub enum AllocationStrategy {
    Constant {
        fraction: f64,
    },
    /// `x -> 1{x > cutoff}`
    Threshold {
        cutoff: f64,
    },
    /// Piecewise constant: `values[j]` on `[breakpoints[j-1], breakpoints[j])`
    /// with open outer cells, so `values.len() == breakpoints.len() + 1`.
    StepTable {
        breakpoints: Vec<f64>,
        values: Vec<f64>,
    },
    /// `x -> min(1, scale * e^{theta x})`
    ExpDecomposable {
        theta: f64,
        scale: f64,
    },
}

impl AllocationStrategy {
    pub fn constant(fraction: f64) -> Result<Self> {
        let s = AllocationStrategy::Constant { fraction };
        s.validate()?;
        Ok(s)
    }

    pub fn threshold(cutoff: f64) -> Result<Self> {
        let s = AllocationStrategy::Threshold { cutoff };
        s.validate()?;
        Ok(s)
    }

    pub fn step_table(breakpoints: Vec<f64>, values: Vec<f64>) -> Result<Self> {
        let s = AllocationStrategy::StepTable {
            breakpoints,
            values,
        };
        s.validate()?;
        Ok(s)
    }

    pub fn exp_decomposable(theta: f64, scale: f64) -> Result<Self> {
        let s = AllocationStrategy::ExpDecomposable { theta, scale };
        s.validate()?;
        Ok(s)
    }

    pub fn validate(&self) -> Result<()> {
        let fraction_ok = |v: f64| (0.0..=1.0).contains(&v);
        match self {
            AllocationStrategy::Constant { fraction } => {
                if !fraction_ok(*fraction) {
                    return Err(Error::InvalidStrategy(format!(
                        "constant fraction {fraction} outside [0, 1]"
                    )));
                }
            }
            AllocationStrategy::Threshold { cutoff } => {
                if !cutoff.is_finite() {
                    return Err(Error::InvalidStrategy(format!(
                        "threshold cutoff must be finite, got {cutoff}"
                    )));
                }
            }
            AllocationStrategy::StepTable {
                breakpoints,
                values,
            } => {
                if values.len() != breakpoints.len() + 1 {
                    return Err(Error::InvalidStrategy(format!(
                        "step table needs {} values for {} breakpoints, got {}",
                        breakpoints.len() + 1,
                        breakpoints.len(),
                        values.len()
                    )));
                }
                if breakpoints.iter().any(|b| !b.is_finite()) {
                    return Err(Error::InvalidStrategy(
                        "step table breakpoints must be finite".into(),
                    ));
                }
                if breakpoints.windows(2).any(|w| w[0] >= w[1]) {
                    return Err(Error::InvalidStrategy(
                        "step table breakpoints must be strictly increasing".into(),
                    ));
                }
                if let Some(v) = values.iter().find(|v| !fraction_ok(**v)) {
                    return Err(Error::InvalidStrategy(format!(
                        "step table value {v} outside [0, 1]"
                    )));
                }
            }
            AllocationStrategy::ExpDecomposable { theta, scale } => {
                if !theta.is_finite() {
                    return Err(Error::InvalidStrategy(format!(
                        "theta must be finite, got {theta}"
                    )));
                }
                if !(scale.is_finite() && *scale > 0.0) {
                    return Err(Error::InvalidStrategy(format!(
                        "scale must be positive, got {scale}"
                    )));
                }
            }
        }
        Ok(())
    }

    /// `f(x)`, always in `[0, 1]`.
    pub fn evaluate(&self, x: f64) -> f64 {
        match self {
            AllocationStrategy::Constant { fraction } => *fraction,
            AllocationStrategy::Threshold { cutoff } => {
                if x > *cutoff {
                    1.0
                } else {
                    0.0
                }
            }
            AllocationStrategy::StepTable {
                breakpoints,
                values,
            } => values[breakpoints.partition_point(|b| *b <= x)],
            AllocationStrategy::ExpDecomposable { theta, scale } => {
                (scale * (theta * x).exp()).min(1.0)
            }
        }
    }

    pub fn is_constant(&self) -> bool {
        matches!(self, AllocationStrategy::Constant { .. })
    }

    /// Points where `f` is discontinuous or changes analytic form.
    pub fn breakpoints(&self) -> Vec<f64> {
        match self {
            AllocationStrategy::Constant { .. } => Vec::new(),
            AllocationStrategy::Threshold { cutoff } => vec![*cutoff],
            AllocationStrategy::StepTable { breakpoints, .. } => breakpoints.clone(),
            AllocationStrategy::ExpDecomposable { theta, scale } => {
                if *theta == 0.0 {
                    Vec::new()
                } else {
                    // scale * e^{theta x} = 1
                    vec![-scale.ln() / theta]
                }
            }
        }
    }
}

impl fmt::Display for AllocationStrategy {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            AllocationStrategy::Constant { fraction } => write!(f, "constant {fraction}"),
            AllocationStrategy::Threshold { cutoff } => write!(f, "threshold {cutoff}"),
            AllocationStrategy::StepTable {
                breakpoints,
                values,
            } => write!(f, "step-table {breakpoints:?} {values:?}"),
            AllocationStrategy::ExpDecomposable { theta, scale } => {
                write!(f, "exp-decomposable theta={theta} scale={scale}")
            }
        }
    }
}

/// Which stochastic differential drives the stock equation.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Interpretation {
    Ito,
    RussoVallois,
    AyedKuo,
    HitsudaSkorokhod,
}

impl Interpretation {
    pub const ANTICIPATING: [Interpretation; 3] = [
        Interpretation::RussoVallois,
        Interpretation::AyedKuo,
        Interpretation::HitsudaSkorokhod,
    ];

    pub fn as_str(&self) -> &'static str {
        match self {
            Interpretation::Ito => "ito",
            Interpretation::RussoVallois => "russo-vallois",
            Interpretation::AyedKuo => "ayed-kuo",
            Interpretation::HitsudaSkorokhod => "hitsuda-skorokhod",
        }
    }

    /// True when the strategy argument is shifted to `B(T) - sigma t`.
    pub fn is_shifted(&self) -> bool {
        matches!(
            self,
            Interpretation::AyedKuo | Interpretation::HitsudaSkorokhod
        )
    }

    pub(crate) fn check_strategy(&self, strategy: &AllocationStrategy) -> Result<()> {
        if *self == Interpretation::Ito && !strategy.is_constant() {
            return Err(Error::InterpretationMismatch {
                interp: *self,
                strategy: strategy.to_string(),
            });
        }
        Ok(())
    }
}

impl fmt::Display for Interpretation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

/// Terminal value of both legs of the insider portfolio.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct WealthOutcome {
    pub bank_terminal: f64,
    pub stock_terminal: f64,
    pub total: f64,
}

/// `S0(T) = M (1 - f(b_T)) e^{rho T}`. The bank leg always sees the
/// unshifted terminal value.
pub fn bank_terminal(params: &MarketParams, strategy: &AllocationStrategy, b_terminal: f64) -> f64 {
    params.total_wealth * (1.0 - strategy.evaluate(b_terminal)) * params.bank_growth()
}

/// `S1(T)` for the given interpretation.
pub fn stock_terminal(
    params: &MarketParams,
    strategy: &AllocationStrategy,
    interp: Interpretation,
    b_terminal: f64,
) -> Result<f64> {
    interp.check_strategy(strategy)?;
    let argument = if interp.is_shifted() {
        b_terminal - params.volatility * params.horizon
    } else {
        b_terminal
    };
    Ok(params.total_wealth * strategy.evaluate(argument) * params.stock_growth(b_terminal))
}

pub fn terminal_wealth(
    params: &MarketParams,
    strategy: &AllocationStrategy,
    interp: Interpretation,
    b_terminal: f64,
) -> Result<WealthOutcome> {
    let stock = stock_terminal(params, strategy, interp, b_terminal)?;
    let bank = bank_terminal(params, strategy, b_terminal);
    Ok(WealthOutcome {
        bank_terminal: bank,
        stock_terminal: stock,
        total: bank + stock,
    })
}

/// Ingredients of the Girsanov-shift representation of the
/// Hitsuda-Skorokhod solution at time `t`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GirsanovFactors {
    /// `B(T) - sigma t`
    pub shifted_terminal: f64,
    /// `X_t = e^{sigma B(t) - sigma^2 t / 2}`
    pub exponential_factor: f64,
}

impl GirsanovFactors {
    /// `S1(t) = M f(B(T) - sigma t) e^{mu t} X_t`
    pub fn stock_value(&self, params: &MarketParams, strategy: &AllocationStrategy, t: f64) -> f64 {
        params.total_wealth
            * strategy.evaluate(self.shifted_terminal)
            * (params.appreciation_rate * t).exp()
            * self.exponential_factor
    }
}

/// Evaluates the shift and the exponential factor on `path`. `B(t)` is read
/// off the grid, linearly interpolated between grid times.
pub fn hs_girsanov_factors(
    params: &MarketParams,
    t: f64,
    path: &BrownianPath,
) -> Result<GirsanovFactors> {
    if !(0.0..=params.horizon).contains(&t) {
        return Err(Error::TimeOutOfRange {
            t,
            horizon: params.horizon,
        });
    }
    if (path.horizon() - params.horizon).abs() > 1e-12 * params.horizon {
        return Err(Error::InvalidGrid(format!(
            "path horizon {} does not match market horizon {}",
            path.horizon(),
            params.horizon
        )));
    }
    let s = params.volatility;
    let b_t = path.value_at(t);
    Ok(GirsanovFactors {
        shifted_terminal: path.terminal() - s * t,
        exponential_factor: (s * b_t - 0.5 * s * s * t).exp(),
    })
}
