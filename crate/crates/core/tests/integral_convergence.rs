use insider_wealth::analytics::critical_threshold;
use insider_wealth::integrals::{
    ayed_kuo_riemann_sum, forward_riemann_sum, integral_equation_residual, median, residual_study,
    IntegrandSpec,
};
use insider_wealth::market::{hs_girsanov_factors, stock_terminal};
use insider_wealth::paths::{generate, refine};
use insider_wealth::{AllocationStrategy, Interpretation, MarketParams};

fn median_gap(
    steps: &[usize],
    base: usize,
    sum: impl Fn(&insider_wealth::paths::BrownianPath) -> f64,
    limit: impl Fn(f64) -> f64,
) -> Vec<f64> {
    let bases: Vec<_> = (0..100)
        .map(|k| generate(1.0, base, 31, k).unwrap())
        .collect();
    steps
        .iter()
        .map(|&n| {
            let mut gaps: Vec<f64> = bases
                .iter()
                .map(|b| {
                    let p = if n == base {
                        b.clone()
                    } else {
                        refine(b, n / base).unwrap()
                    };
                    (sum(&p) - limit(p.terminal())).abs()
                })
                .collect();
            median(&mut gaps)
        })
        .collect()
}

#[test]
fn ito_sum_of_brownian_motion_converges() {
    let integrand = IntegrandSpec::brownian();
    let gaps = median_gap(
        &[1 << 10, 1 << 14],
        1 << 10,
        |p| forward_riemann_sum(&integrand, p).unwrap().value,
        |bt| 0.5 * (bt * bt - 1.0),
    );
    assert!(gaps[1] < gaps[0], "{gaps:?}");
}

#[test]
fn ayed_kuo_sum_of_terminal_value_converges() {
    let integrand = IntegrandSpec::terminal_decomposed();
    let gaps = median_gap(
        &[1 << 8, 1 << 12],
        1 << 8,
        |p| ayed_kuo_riemann_sum(&integrand, p).unwrap().value,
        |bt| bt * bt - 1.0,
    );
    assert!(gaps[1] < gaps[0], "{gaps:?}");
    // the forward sum of the same integrand is B(T)^2, not B(T)^2 - T
    let path = generate(1.0, 4096, 1, 1).unwrap();
    let fwd = forward_riemann_sum(&integrand, &path).unwrap().value;
    assert!((fwd - path.terminal().powi(2)).abs() < 1e-9);
}

#[test]
fn sums_are_linear() {
    let path = generate(1.0, 300, 4, 4).unwrap();
    let x = IntegrandSpec::product(|t, h| t + h[h.len() - 1], |_, fut| fut.cos());
    let y = IntegrandSpec::independent(|t, fut| t * fut);
    let (a, b) = (0.7, -2.3);
    let combo = IntegrandSpec::combination(vec![(a, x.clone()), (b, y.clone())]);
    for sum in [forward_riemann_sum, ayed_kuo_riemann_sum] {
        let lhs = sum(&combo, &path).unwrap().value;
        let rhs = a * sum(&x, &path).unwrap().value + b * sum(&y, &path).unwrap().value;
        assert_eq!(lhs, rhs);
    }
}

#[test]
fn ito_constant_residual_decreases() {
    let p = MarketParams::reference();
    let c = AllocationStrategy::constant(0.6).unwrap();
    let levels = residual_study(&p, &c, Interpretation::Ito, 256, &[1, 4, 16], 100, 8).unwrap();
    assert!(
        levels
            .windows(2)
            .all(|w| w[1].median_residual < w[0].median_residual),
        "{levels:?}"
    );
}

#[test]
fn rv_exp_strategy_residual_decreases() {
    let p = MarketParams::reference();
    let f = AllocationStrategy::exp_decomposable(0.5, 0.5).unwrap();
    let levels = residual_study(
        &p,
        &f,
        Interpretation::RussoVallois,
        256,
        &[1, 4, 16],
        100,
        2,
    )
    .unwrap();
    assert!(
        levels
            .windows(2)
            .all(|w| w[1].median_residual < w[0].median_residual),
        "{levels:?}"
    );
}

#[test]
fn residual_is_zero_for_zero_allocation() {
    let p = MarketParams::reference();
    let zero = AllocationStrategy::constant(0.0).unwrap();
    let path = generate(1.0, 64, 1, 0).unwrap();
    for interp in [Interpretation::RussoVallois, Interpretation::AyedKuo] {
        assert_eq!(
            integral_equation_residual(&p, &zero, interp, &path).unwrap(),
            0.0
        );
    }
    let bad_horizon = generate(2.0, 64, 1, 0).unwrap();
    assert!(integral_equation_residual(&p, &zero, Interpretation::AyedKuo, &bad_horizon).is_err());
}

#[test]
fn girsanov_factors_reproduce_hs_closed_form() {
    let p = MarketParams::reference();
    let strategies = [
        AllocationStrategy::constant(0.4).unwrap(),
        AllocationStrategy::threshold(critical_threshold(&p)).unwrap(),
        AllocationStrategy::exp_decomposable(0.5, 0.5).unwrap(),
    ];
    for k in 0..100 {
        let path = generate(1.0, 32, 12, k).unwrap();
        let factors = hs_girsanov_factors(&p, p.horizon(), &path).unwrap();
        for f in &strategies {
            let via_factors = factors.stock_value(&p, f, p.horizon());
            let closed =
                stock_terminal(&p, f, Interpretation::HitsudaSkorokhod, path.terminal()).unwrap();
            assert!(
                (via_factors - closed).abs() <= 1e-12 * closed.abs().max(1.0),
                "{via_factors} vs {closed}"
            );
        }
    }
}
