//! Adaptive Gauss-Kronrod (7/15) quadrature on finite intervals.

use crate::error::{Error, Result};

const XGK: [f64; 8] = [
    0.991_455_371_120_812_6,
    0.949_107_912_342_758_5,
    0.864_864_423_359_769_1,
    0.741_531_185_599_394_4,
    0.586_087_235_467_691_1,
    0.405_845_151_377_397_2,
    0.207_784_955_007_898_47,
    0.0,
];
const WGK: [f64; 8] = [
    0.022_935_322_010_529_225,
    0.063_092_092_629_978_55,
    0.104_790_010_322_250_18,
    0.140_653_259_715_525_92,
    0.169_004_726_639_267_9,
    0.190_350_578_064_785_4,
    0.204_432_940_075_298_9,
    0.209_482_141_084_727_83,
];
// Gauss weights for the nodes XGK[1], XGK[3], XGK[5], XGK[7]
const WG: [f64; 4] = [
    0.129_484_966_168_869_7,
    0.279_705_391_489_276_7,
    0.381_830_050_505_118_9,
    0.417_959_183_673_469_4,
];

const MAX_DEPTH: u32 = 60;

fn kronrod<F: Fn(f64) -> f64>(f: &F, a: f64, b: f64) -> (f64, f64) {
    let c = 0.5 * (a + b);
    let h = 0.5 * (b - a);
    let fc = f(c);
    let mut kron = WGK[7] * fc;
    let mut gauss = WG[3] * fc;
    for j in 0..7 {
        let dx = h * XGK[j];
        let pair = f(c - dx) + f(c + dx);
        kron += WGK[j] * pair;
        if j % 2 == 1 {
            gauss += WG[j / 2] * pair;
        }
    }
    (kron * h, ((kron - gauss) * h).abs())
}

/// Integrates `f` over `[a, b]` to absolute error `tol`.
pub(crate) fn integrate<F: Fn(f64) -> f64>(f: &F, a: f64, b: f64, tol: f64) -> Result<f64> {
    if a == b {
        return Ok(0.0);
    }
    let (whole, err) = kronrod(f, a, b);
    refine(f, a, b, whole, err, tol, 0)
}

fn refine<F: Fn(f64) -> f64>(
    f: &F,
    a: f64,
    b: f64,
    whole: f64,
    err: f64,
    tol: f64,
    depth: u32,
) -> Result<f64> {
    if !whole.is_finite() {
        return Err(Error::QuadratureFailure {
            tolerance: tol,
            estimate: whole,
        });
    }
    if err <= tol {
        return Ok(whole);
    }
    if depth >= MAX_DEPTH {
        return Err(Error::QuadratureFailure {
            tolerance: tol,
            estimate: err,
        });
    }
    let m = 0.5 * (a + b);
    let (left, el) = kronrod(f, a, m);
    let (right, er) = kronrod(f, m, b);
    Ok(refine(f, a, m, left, el, 0.5 * tol, depth + 1)?
        + refine(f, m, b, right, er, 0.5 * tol, depth + 1)?)
}

/// Integrates over `[a, b]` split at every breakpoint strictly inside it.
pub(crate) fn integrate_split<F: Fn(f64) -> f64>(
    f: &F,
    a: f64,
    b: f64,
    breakpoints: &[f64],
    tol: f64,
) -> Result<f64> {
    let mut cuts: Vec<f64> = breakpoints
        .iter()
        .copied()
        .filter(|x| *x > a && *x < b)
        .collect();
    cuts.sort_by(|x, y| x.total_cmp(y));
    cuts.dedup();
    let pieces = cuts.len() + 1;
    let mut edges = Vec::with_capacity(pieces + 1);
    edges.push(a);
    edges.extend(cuts);
    edges.push(b);
    let piece_tol = tol / pieces as f64;
    edges
        .windows(2)
        .map(|w| integrate(f, w[0], w[1], piece_tol))
        .sum()
}
