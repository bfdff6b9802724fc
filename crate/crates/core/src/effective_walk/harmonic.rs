//! Harmonic functions of the vertical walk killed at leaving the positive
//! half-line, normalised so that `h(x)/x -> 1`.
//!
//! With that normalisation `h(x) = x - g(x)` where `g(x)` is the expected
//! (nonpositive) position at the first entry of `(-inf, 0]`. On a finite
//! range `g` solves a banded linear system: condition on the first step,
//! absorb the overshoot term into the right-hand side, and close the system
//! by flat extrapolation beyond the solve horizon (the true `g` approaches
//! its limit exponentially fast for finite-support steps). The horizon is
//! certified a posteriori by doubling it until the values stop moving.

use crate::error::{Error, Result};

use super::{Side, StepLaw};

/// Tabulated harmonic function on `1..=x_max` with the certified horizon
/// error carried along.
#[derive(Debug, Clone)]
pub struct HarmonicFn {
    values: Vec<f64>,
    tail_bound: f64,
}

impl HarmonicFn {
    pub fn h(&self, x: i64) -> f64 {
        self.values[(x - 1) as usize]
    }

    /// `values()[i] = h(i + 1)`.
    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn x_max(&self) -> i64 {
        self.values.len() as i64
    }

    /// Achieved bound from the horizon-doubling check.
    pub fn tail_bound(&self) -> f64 {
        self.tail_bound
    }
}

/// Solves the banded system for `g(x) = E_x[U_tau]` on `1..=size`.
///
/// Row `x`: `g(x) - sum_{zeta: 1 <= x+zeta <= size} p_z g(x+zeta)
///          - (sum_{zeta: x+zeta > size} p_z) g(size) = sum_{x+zeta <= 0} p_z (x+zeta)`.
fn solve_overshoot(marginal: &[(i64, f64)], size: usize, zmax: i64) -> Vec<f64> {
    let w = zmax as usize;
    let width = 2 * w + 1;
    // band[i][k] is the coefficient of column i - w + k in row i.
    let mut band = vec![vec![0.0f64; width]; size];
    let mut rhs = vec![0.0f64; size];
    for i in 0..size {
        let x = (i + 1) as i64;
        band[i][w] += 1.0;
        for &(zeta, p) in marginal {
            let y = x + zeta;
            if y <= 0 {
                rhs[i] += p * y as f64;
            } else {
                let j = (y.min(size as i64) - 1) as usize;
                band[i][j + w - i] -= p;
            }
        }
    }
    // Banded Gaussian elimination without pivoting (the matrix is weakly
    // diagonally dominant with strict rows near the absorbing boundary).
    for i in 0..size {
        let piv = band[i][w];
        let hi = (i + w).min(size - 1);
        for r in i + 1..=hi {
            let k = i + w - r;
            let factor = band[r][k] / piv;
            if factor == 0.0 {
                continue;
            }
            for c in i..=(i + w).min(size - 1) {
                band[r][c + w - r] -= factor * band[i][c + w - i];
            }
            rhs[r] -= factor * rhs[i];
        }
    }
    let mut g = vec![0.0f64; size];
    for i in (0..size).rev() {
        let mut acc = rhs[i];
        for c in i + 1..=(i + w).min(size - 1) {
            acc -= band[i][c + w - i] * g[c];
        }
        g[i] = acc / band[i][w];
    }
    g
}

/// Harmonic function table for the killed vertical walk on `1..=x_max`.
pub fn harmonic_table(law: &StepLaw, x_max: i64, side: Side, tol: f64) -> Result<HarmonicFn> {
    if x_max < 1 {
        return Err(Error::config("x_max must be >= 1"));
    }
    if law.var_zeta() == 0.0 {
        return Err(Error::Degenerate(
            "vertical component never moves (Var(zeta) = 0); the killed walk never exits".into(),
        ));
    }
    let marginal = law.zeta_marginal(side);
    let zmax = law.zeta_max();
    let mut size = (4 * x_max).max(x_max + 32 * zmax).max(256) as usize;
    let mut g = solve_overshoot(&marginal, size, zmax);
    let mut achieved = f64::INFINITY;
    for _ in 0..5 {
        let bigger = solve_overshoot(&marginal, 2 * size, zmax);
        achieved = (0..x_max as usize)
            .map(|i| (g[i] - bigger[i]).abs())
            .fold(0.0, f64::max);
        g = bigger;
        size *= 2;
        if achieved <= tol {
            let values = (0..x_max as usize)
                .map(|i| (i + 1) as f64 - g[i])
                .collect();
            return Ok(HarmonicFn {
                values,
                tail_bound: achieved,
            });
        }
    }
    Err(Error::NoConvergence {
        what: "harmonic-function horizon",
        achieved,
    })
}

/// `h(x)` for the one-dimensional vertical walk, default tolerance 1e-9.
pub fn harmonic_h(law: &StepLaw, x: i64, side: Side) -> Result<f64> {
    if x < 1 {
        return Err(Error::config("x must be >= 1"));
    }
    Ok(harmonic_table(law, x, side, 1e-9)?.h(x))
}

/// Max residual of the harmonic equation
/// `h(x) = E[h(x + zeta); x + zeta > 0]` over `x_lo..=x_hi`.
///
/// `h_values[i]` is `h(i + 1)` and must extend `zeta_max` beyond `x_hi`.
pub fn check_harmonicity(law: &StepLaw, h_values: &[f64], x_lo: i64, x_hi: i64) -> Result<f64> {
    if x_lo < 1 || x_hi < x_lo {
        return Err(Error::config("need 1 <= x_lo <= x_hi"));
    }
    if (h_values.len() as i64) < x_hi + law.zeta_max() {
        return Err(Error::config(format!(
            "h table too short: need {} values, got {}",
            x_hi + law.zeta_max(),
            h_values.len()
        )));
    }
    let marginal = law.zeta_marginal(Side::Plus);
    let mut worst = 0.0f64;
    for x in x_lo..=x_hi {
        let mut expect = 0.0;
        for &(zeta, p) in &marginal {
            let y = x + zeta;
            if y > 0 {
                expect += p * h_values[(y - 1) as usize];
            }
        }
        worst = worst.max((h_values[(x - 1) as usize] - expect).abs());
    }
    Ok(worst)
}
