//! Reference sampler for the normalized Brownian excursion and two-sample
//! Kolmogorov-Smirnov comparisons, used to test diffusive convergence of
//! interfaces and conditioned walks at desk scale.
//!
//! Two independent constructions are provided: the Vervaat rotation of a
//! Brownian bridge at its minimum (the workhorse), and rejection sampling of
//! a bridge conditioned to stay positive (the oracle; for cyclically
//! exchangeable increments with continuous law, rotation at the unique
//! argmin has exactly the conditioned-bridge law on the grid).

use rand::Rng;
use rand_distr::{Distribution, StandardNormal};

use crate::error::{Error, Result};

/// Default reference grid size; discretisation bias at interior times is
/// far below the KS tolerances in use.
pub const DEFAULT_GRID: usize = 1024;

/// One excursion path on the uniform grid `j/m`, `j = 0..=m`, with zero
/// endpoints and nonnegative values.
#[derive(Debug, Clone)]
pub struct ExcursionSample {
    values: Vec<f64>,
}

impl ExcursionSample {
    pub fn grid_size(&self) -> usize {
        self.values.len() - 1
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    /// Linear interpolation at `t` in `[0, 1]`.
    pub fn eval(&self, t: f64) -> f64 {
        let m = self.grid_size() as f64;
        let s = (t.clamp(0.0, 1.0)) * m;
        let i = (s.floor() as usize).min(self.grid_size() - 1);
        let frac = s - i as f64;
        self.values[i] * (1.0 - frac) + self.values[i + 1] * frac
    }
}

/// Brownian bridge values on the grid `0..=m` (endpoints zero).
fn sample_bridge(m: usize, rng: &mut impl Rng) -> Vec<f64> {
    let step = (1.0 / m as f64).sqrt();
    let mut w = Vec::with_capacity(m + 1);
    let mut acc = 0.0;
    w.push(0.0);
    for _ in 0..m {
        let g: f64 = StandardNormal.sample(rng);
        acc += g * step;
        w.push(acc);
    }
    let end = *w.last().unwrap();
    for (j, x) in w.iter_mut().enumerate() {
        *x -= end * j as f64 / m as f64;
    }
    w
}

/// Excursion via the Vervaat construction: rotate the bridge at its argmin.
pub fn sample_excursion(m: usize, rng: &mut impl Rng) -> Result<ExcursionSample> {
    if m < 2 {
        return Err(Error::config("grid size must be >= 2"));
    }
    let bridge = sample_bridge(m, rng);
    let rho = bridge
        .iter()
        .take(m) // index m duplicates index 0 cyclically
        .enumerate()
        .min_by(|a, b| a.1.partial_cmp(b.1).unwrap())
        .map(|(i, _)| i)
        .unwrap();
    let min = bridge[rho];
    let values: Vec<f64> = (0..=m)
        .map(|j| {
            let k = rho + j;
            let b = if k <= m { bridge[k] } else { bridge[k - m] };
            b - min
        })
        .collect();
    Ok(ExcursionSample { values })
}

/// Oracle sampler: bridge conditioned to be strictly positive at interior
/// grid points, by rejection. Practical only at coarse grids.
pub fn sample_excursion_rejection(m: usize, rng: &mut impl Rng) -> Result<ExcursionSample> {
    if m < 2 {
        return Err(Error::config("grid size must be >= 2"));
    }
    loop {
        let bridge = sample_bridge(m, rng);
        if bridge[1..m].iter().all(|&x| x > 0.0) {
            return Ok(ExcursionSample { values: bridge });
        }
    }
}

/// Two-sample Kolmogorov-Smirnov statistic: sup distance between the
/// empirical CDFs.
pub fn ks_statistic(a: &[f64], b: &[f64]) -> f64 {
    assert!(!a.is_empty() && !b.is_empty(), "samples must be nonempty");
    let mut a = a.to_vec();
    let mut b = b.to_vec();
    a.sort_by(|x, y| x.partial_cmp(y).unwrap());
    b.sort_by(|x, y| x.partial_cmp(y).unwrap());
    let (na, nb) = (a.len() as f64, b.len() as f64);
    let (mut i, mut j) = (0usize, 0usize);
    let mut sup: f64 = 0.0;
    while i < a.len() || j < b.len() {
        // Advance past ties together before measuring.
        let x = match (a.get(i), b.get(j)) {
            (Some(&x), Some(&y)) => x.min(y),
            (Some(&x), None) => x,
            (None, Some(&y)) => y,
            (None, None) => break,
        };
        while i < a.len() && a[i] <= x {
            i += 1;
        }
        while j < b.len() && b[j] <= x {
            j += 1;
        }
        sup = sup.max((i as f64 / na - j as f64 / nb).abs());
    }
    sup
}

/// KS distance between empirical values and `sqrt(chi) * e(t)` reference
/// draws from `n_ref` fresh excursions on the default grid.
pub fn marginal_compare(
    empirical: &[f64],
    chi: f64,
    t: f64,
    n_ref: usize,
    rng: &mut impl Rng,
) -> Result<f64> {
    if !(chi > 0.0) {
        return Err(Error::config("chi must be positive"));
    }
    if !(t > 0.0 && t < 1.0) {
        return Err(Error::config("t must lie in (0, 1)"));
    }
    if empirical.is_empty() || n_ref == 0 {
        return Err(Error::config("empty sample"));
    }
    let scale = chi.sqrt();
    let reference: Vec<f64> = (0..n_ref)
        .map(|_| sample_excursion(DEFAULT_GRID, rng).map(|e| scale * e.eval(t)))
        .collect::<Result<_>>()?;
    Ok(ks_statistic(empirical, &reference))
}
