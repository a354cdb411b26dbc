//! Insider-trading portfolio model under anticipating stochastic integrals.
//!
//! An insider who knows `B(T)` splits wealth `M` between a bank account and a
//! geometric Brownian stock with a buy-and-hold fraction `f(B(T))`. Because
//! the initial condition anticipates the future, the stock equation is read
//! with the Russo-Vallois forward, Ayed-Kuo or Hitsuda-Skorokhod integral.
//! This crate evaluates the resulting closed forms, optimizes the allocation,
//! checks the solutions against Riemann sums and Monte Carlo, and compares
//! the wealth distributions by stochastic dominance.

pub mod analytics;
pub mod cli;
pub mod dominance;
pub mod error;
pub mod integrals;
pub mod market;
pub mod monte_carlo;
pub mod optimizer;
pub mod paths;
mod quadrature;
mod rng;

pub use error::{Error, Result};
pub use market::{AllocationStrategy, Interpretation, MarketParams, WealthOutcome};
