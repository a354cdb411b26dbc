//! Closed forms checked against independent composite-Simpson quadrature.

use insider_wealth::analytics::{
    anticipating_expected_wealth, conditional_expected_wealth, critical_threshold, normal_cdf,
    rv_optimal_expected_wealth,
};
use insider_wealth::optimizer::random_tables;
use insider_wealth::{AllocationStrategy, Interpretation, MarketParams};

fn density(x: f64, var: f64) -> f64 {
    (-0.5 * x * x / var).exp() / (2.0 * std::f64::consts::PI * var).sqrt()
}

/// Composite Simpson on `[a, b]` with `n` (even) panels.
fn simpson(f: impl Fn(f64) -> f64, a: f64, b: f64, n: usize) -> f64 {
    let h = (b - a) / n as f64;
    let mut acc = f(a) + f(b);
    for i in 1..n {
        let w = if i % 2 == 1 { 4.0 } else { 2.0 };
        acc += w * f(a + i as f64 * h);
    }
    acc * h / 3.0
}

fn phi_oracle(x: f64) -> f64 {
    simpson(|s| density(s, 1.0), -14.0, x, 400_000)
}

#[test]
fn normal_cdf_matches_quadrature_oracle() {
    for x in [-6.0, -2.5, -0.2, 0.0, 0.4, 1.0, 3.3] {
        let oracle = phi_oracle(x);
        assert!(
            (normal_cdf(x) - oracle).abs() <= 1e-12,
            "x={x}: {} vs {oracle}",
            normal_cdf(x)
        );
    }
    // frozen from the oracle above
    assert!((normal_cdf(0.4) - 0.655422).abs() < 5e-7);
    assert!((normal_cdf(-0.2) - 0.420740).abs() < 5e-7);
}

#[test]
fn rv_optimum_matches_max_payoff_quadrature() {
    let p = MarketParams::reference();
    let xc = critical_threshold(&p);
    let payoff = |x: f64| p.bank_growth().max(p.stock_growth(x)) * density(x, p.horizon());
    // split at the kink so Simpson sees smooth pieces
    let oracle = simpson(payoff, -14.0, xc, 400_000) + simpson(payoff, xc, 14.0, 400_000);
    let v = rv_optimal_expected_wealth(&p);
    assert!((v - oracle).abs() < 1e-9, "{v} vs {oracle}");

    let other = MarketParams::new(2.5, 0.01, 0.15, 0.6, 3.0).unwrap();
    let xc = critical_threshold(&other);
    let payoff = |x: f64| {
        other.total_wealth() * other.bank_growth().max(other.stock_growth(x)) * density(x, 3.0)
    };
    let oracle = simpson(payoff, -30.0, xc, 600_000) + simpson(payoff, xc, 30.0, 600_000);
    assert!((rv_optimal_expected_wealth(&other) - oracle).abs() < 1e-9);
}

#[test]
fn step_table_expectation_matches_cell_probabilities() {
    let p = MarketParams::new(1.0, 0.02, 0.08, 0.2, 2.0).unwrap();
    let bps = vec![-1.5, -0.25, 0.75, 2.0];
    let vals = vec![0.1, 0.9, 0.3, 1.0, 0.0];
    let f = AllocationStrategy::step_table(bps.clone(), vals.clone()).unwrap();
    let rt = p.horizon().sqrt();
    let mut edges = vec![f64::NEG_INFINITY];
    edges.extend(&bps);
    edges.push(f64::INFINITY);
    let cdf = |x: f64| {
        if x.is_infinite() {
            if x > 0.0 {
                1.0
            } else {
                0.0
            }
        } else {
            phi_oracle(x / rt)
        }
    };
    let mean_f: f64 = (0..vals.len())
        .map(|j| vals[j] * (cdf(edges[j + 1]) - cdf(edges[j])))
        .sum();
    let expected = p.bank_growth() + (p.stock_mean_growth() - p.bank_growth()) * mean_f;
    for interp in [Interpretation::AyedKuo, Interpretation::HitsudaSkorokhod] {
        let v = anticipating_expected_wealth(&p, &f, interp).unwrap();
        assert!((v - expected).abs() < 1e-9, "{v} vs {expected}");
    }
}

#[test]
fn exp_strategy_rv_expectation_matches_oracle() {
    let p = MarketParams::reference();
    let f = AllocationStrategy::exp_decomposable(0.5, 0.5).unwrap();
    let cap = 2.0 * 2f64.ln();
    let integrand =
        |x: f64| f.evaluate(x) * (p.stock_growth(x) - p.bank_growth()) * density(x, 1.0);
    let oracle = p.bank_growth()
        + simpson(integrand, -14.0, cap, 400_000)
        + simpson(integrand, cap, 14.0, 400_000);
    let v = anticipating_expected_wealth(&p, &f, Interpretation::RussoVallois).unwrap();
    assert!((v - oracle).abs() < 1e-9);
}

#[test]
fn shifted_expectation_is_a_convex_combination() {
    let p = MarketParams::reference();
    let lo = p.bank_growth();
    let hi = p.stock_mean_growth();
    let bps: Vec<f64> = (0..9).map(|i| -2.0 + 0.5 * i as f64).collect();
    let mut strategies = random_tables(&bps, 50, 17).unwrap();
    strategies.push(AllocationStrategy::threshold(0.3).unwrap());
    strategies.push(AllocationStrategy::exp_decomposable(-1.0, 0.7).unwrap());
    for f in &strategies {
        for interp in [Interpretation::AyedKuo, Interpretation::HitsudaSkorokhod] {
            let v = anticipating_expected_wealth(&p, f, interp).unwrap();
            assert!(v >= lo - 1e-12 && v <= hi + 1e-12, "{v}");
        }
    }
    let zero = AllocationStrategy::constant(0.0).unwrap();
    let one = AllocationStrategy::constant(1.0).unwrap();
    assert_eq!(
        anticipating_expected_wealth(&p, &zero, Interpretation::AyedKuo).unwrap(),
        lo
    );
    assert!(
        (anticipating_expected_wealth(&p, &one, Interpretation::AyedKuo).unwrap() - hi).abs()
            < 1e-15
    );
}

#[test]
fn rv_indicator_beats_random_step_tables() {
    let p = MarketParams::reference();
    let best = anticipating_expected_wealth(
        &p,
        &AllocationStrategy::threshold(critical_threshold(&p)).unwrap(),
        Interpretation::RussoVallois,
    )
    .unwrap();
    let bps: Vec<f64> = (0..13).map(|i| -3.0 + 0.5 * i as f64).collect();
    for f in random_tables(&bps, 100, 99).unwrap() {
        let v = anticipating_expected_wealth(&p, &f, Interpretation::RussoVallois).unwrap();
        assert!(v <= best, "{v} > {best}");
    }
}

#[test]
fn rv_indicator_dominates_pathwise() {
    let p = MarketParams::reference();
    let opt = AllocationStrategy::threshold(critical_threshold(&p)).unwrap();
    let bps: Vec<f64> = (0..7).map(|i| -1.5 + 0.5 * i as f64).collect();
    let mut others = random_tables(&bps, 20, 4).unwrap();
    others.push(AllocationStrategy::constant(0.0).unwrap());
    others.push(AllocationStrategy::constant(1.0).unwrap());
    others.push(AllocationStrategy::exp_decomposable(0.5, 0.5).unwrap());
    for i in 0..1000 {
        let b = -4.0 + 8.0 * i as f64 / 999.0;
        let top = conditional_expected_wealth(&p, &opt, Interpretation::RussoVallois, b).unwrap();
        for f in &others {
            let v = conditional_expected_wealth(&p, f, Interpretation::RussoVallois, b).unwrap();
            assert!(top >= v, "b={b}: {top} < {v} for {f}");
        }
    }
}
