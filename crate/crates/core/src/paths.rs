//! Discretized Brownian paths on uniform grids, with deterministic
//! Brownian-bridge refinement.

use rand::Rng;
use rand_distr::StandardNormal;

use crate::error::{Error, Result};
use crate::rng::{keyed, Purpose};

/// Brownian trajectory sampled at `t_i = i T / n`, `values[0] = 0`.
#[derive(Debug, Clone, PartialEq)]
pub struct BrownianPath {
    horizon: f64,
    values: Vec<f64>,
    seed: u64,
    stream_id: u64,
}

impl BrownianPath {
    /// Wraps explicit grid values, e.g. a path recorded elsewhere.
    pub fn from_values(horizon: f64, values: Vec<f64>, seed: u64, stream_id: u64) -> Result<Self> {
        check_grid(horizon, values.len().saturating_sub(1))?;
        if values[0] != 0.0 {
            return Err(Error::InvalidGrid(format!(
                "path must start at 0, got {}",
                values[0]
            )));
        }
        Ok(BrownianPath {
            horizon,
            values,
            seed,
            stream_id,
        })
    }

    pub fn horizon(&self) -> f64 {
        self.horizon
    }

    pub fn step_count(&self) -> usize {
        self.values.len() - 1
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn stream_id(&self) -> u64 {
        self.stream_id
    }

    pub fn dt(&self) -> f64 {
        self.horizon / self.step_count() as f64
    }

    pub fn time(&self, i: usize) -> f64 {
        self.horizon * i as f64 / self.step_count() as f64
    }

    pub fn terminal(&self) -> f64 {
        self.values[self.values.len() - 1]
    }

    /// `B(t_i) - B(t_{i-1})` for `i = 1..=n`.
    pub fn increments(&self) -> impl Iterator<Item = f64> + '_ {
        self.values.windows(2).map(|w| w[1] - w[0])
    }

    /// `B(t)` with linear interpolation between grid times; `t` is clamped
    /// to `[0, T]`.
    pub fn value_at(&self, t: f64) -> f64 {
        let n = self.step_count();
        let pos = (t / self.horizon).clamp(0.0, 1.0) * n as f64;
        let i = (pos.floor() as usize).min(n);
        if i == n {
            return self.terminal();
        }
        let w = pos - i as f64;
        if w == 0.0 {
            self.values[i]
        } else {
            self.values[i] + w * (self.values[i + 1] - self.values[i])
        }
    }
}

fn check_grid(horizon: f64, steps: usize) -> Result<()> {
    if !(horizon.is_finite() && horizon > 0.0) {
        return Err(Error::InvalidGrid(format!(
            "horizon must be positive, got {horizon}"
        )));
    }
    if steps == 0 {
        return Err(Error::InvalidGrid("step count must be at least 1".into()));
    }
    Ok(())
}

/// Samples a path with `n` independent `N(0, T/n)` increments. The stream
/// is keyed by `(seed, stream_id, n)`.
pub fn generate(horizon: f64, steps: usize, seed: u64, stream_id: u64) -> Result<BrownianPath> {
    check_grid(horizon, steps)?;
    let mut rng = keyed(seed, stream_id, Purpose::PathIncrements, steps as u64);
    let sd = (horizon / steps as f64).sqrt();
    let mut values = Vec::with_capacity(steps + 1);
    let mut b = 0.0;
    values.push(b);
    for _ in 0..steps {
        let z: f64 = rng.sample(StandardNormal);
        b += sd * z;
        values.push(b);
    }
    Ok(BrownianPath {
        horizon,
        values,
        seed,
        stream_id,
    })
}

/// Refines the grid by `factor`, keeping every existing value. Powers of two
/// are applied as repeated midpoint insertion, so refining by 2 twice is the
/// same as refining by 4 once. Other factors fill each coarse interval by
/// sequential bridge sampling. Randomness is keyed to the refined step count.
pub fn refine(path: &BrownianPath, factor: usize) -> Result<BrownianPath> {
    if factor < 2 {
        return Err(Error::InvalidGrid(format!(
            "refinement factor must be at least 2, got {factor}"
        )));
    }
    if factor.is_power_of_two() {
        let mut out = bisect(path);
        for _ in 1..factor.trailing_zeros() {
            out = bisect(&out);
        }
        return Ok(out);
    }
    let n = path.step_count();
    let fine_steps = n * factor;
    let h = path.dt() / factor as f64;
    let mut rng = keyed(
        path.seed,
        path.stream_id,
        Purpose::Bridge,
        fine_steps as u64,
    );
    let mut values = Vec::with_capacity(fine_steps + 1);
    values.push(path.values[0]);
    for w in path.values.windows(2) {
        let end = w[1];
        let mut prev = w[0];
        for j in 1..factor {
            // remaining time from the previous fine point to the coarse end
            let remaining = (factor - j + 1) as f64 * h;
            let mean = prev + (end - prev) * h / remaining;
            let var = h * (remaining - h) / remaining;
            let z: f64 = rng.sample(StandardNormal);
            prev = mean + var.sqrt() * z;
            values.push(prev);
        }
        values.push(end);
    }
    Ok(BrownianPath {
        horizon: path.horizon,
        values,
        seed: path.seed,
        stream_id: path.stream_id,
    })
}

fn bisect(path: &BrownianPath) -> BrownianPath {
    let n = path.step_count();
    let mut rng = keyed(path.seed, path.stream_id, Purpose::Bridge, 2 * n as u64);
    let sd = (path.dt() / 4.0).sqrt();
    let mut values = Vec::with_capacity(2 * n + 1);
    values.push(path.values[0]);
    for w in path.values.windows(2) {
        let z: f64 = rng.sample(StandardNormal);
        values.push(0.5 * (w[0] + w[1]) + sd * z);
        values.push(w[1]);
    }
    BrownianPath {
        horizon: path.horizon,
        values,
        seed: path.seed,
        stream_id: path.stream_id,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn invalid_grids() {
        assert!(matches!(generate(1.0, 0, 1, 0), Err(Error::InvalidGrid(_))));
        assert!(matches!(generate(0.0, 4, 1, 0), Err(Error::InvalidGrid(_))));
        assert!(matches!(
            generate(-1.0, 4, 1, 0),
            Err(Error::InvalidGrid(_))
        ));
        let p = generate(1.0, 4, 1, 0).unwrap();
        assert!(matches!(refine(&p, 1), Err(Error::InvalidGrid(_))));
        assert!(BrownianPath::from_values(1.0, vec![0.1, 0.2], 0, 0).is_err());
    }

    #[test]
    fn single_step_path() {
        let p = generate(1.0, 1, 7, 3).unwrap();
        assert_eq!(p.values().len(), 2);
        assert_eq!(p.values()[0], 0.0);
        let mut rng = keyed(7, 3, Purpose::PathIncrements, 1);
        let g: f64 = rng.sample(StandardNormal);
        assert_eq!(p.terminal(), g);
    }

    #[test]
    fn regeneration_is_bit_identical() {
        let a = generate(2.0, 64, 11, 5).unwrap();
        let b = generate(2.0, 64, 11, 5).unwrap();
        assert_eq!(a, b);
        let c = generate(2.0, 64, 11, 6).unwrap();
        assert_ne!(a.values(), c.values());
    }

    #[test]
    fn refine_keeps_coarse_points() {
        let p = generate(1.0, 16, 3, 9).unwrap();
        for factor in [2, 3, 4, 5, 8] {
            let r = refine(&p, factor).unwrap();
            assert_eq!(r.step_count(), 16 * factor);
            assert_eq!(r.terminal(), p.terminal());
            for i in 0..=16 {
                assert_eq!(r.values()[i * factor], p.values()[i]);
            }
        }
    }

    #[test]
    fn refine_twice_by_two_equals_once_by_four() {
        let p = generate(1.0, 8, 21, 2).unwrap();
        let twice = refine(&refine(&p, 2).unwrap(), 2).unwrap();
        let once = refine(&p, 4).unwrap();
        assert_eq!(twice, once);
    }

    #[test]
    fn value_at_interpolates() {
        let p = BrownianPath::from_values(1.0, vec![0.0, 1.0, -1.0], 0, 0).unwrap();
        assert_eq!(p.value_at(0.0), 0.0);
        assert_eq!(p.value_at(0.5), 1.0);
        assert_eq!(p.value_at(0.25), 0.5);
        assert_eq!(p.value_at(1.0), -1.0);
    }
}
