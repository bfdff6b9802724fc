//! Curvature of the local parametrisation of the equilibrium-shape boundary
//! through the step law's Laplace transform, cross-checking the diffusivity
//! constant.
//!
//! With `G(r, h) = E[exp(-r theta + h zeta)]`, the boundary near the
//! rightmost point is `{(tau - r(h), h) : G(r(h), h) = 1}`; the curvature
//! `r''(0)` must equal `Var(zeta)/E(theta)`.

use crate::error::{Error, Result};

use super::StepLaw;

/// `G(r, h) = E[e^{-r theta + h zeta}]`.
pub fn mgf(law: &StepLaw, r: f64, h: f64) -> f64 {
    law.support()
        .iter()
        .map(|&(t, z, p)| p * (-r * t as f64 + h * z as f64).exp())
        .sum()
}

/// Solves `G(r, h) = 1` for `r` by safeguarded Newton iteration.
///
/// `G` is strictly decreasing in `r` (all `theta >= 1`), `G(0, h) >= 1` by
/// Jensen, and `G(r, h) <= e^{-r} E[e^{h zeta}]`, which brackets the root in
/// `[0, log E[e^{h zeta}]]`.
pub fn solve_rate(law: &StepLaw, h: f64) -> Result<f64> {
    let m_h: f64 = law
        .support()
        .iter()
        .map(|&(_, z, p)| p * (h * z as f64).exp())
        .sum();
    let (mut lo, mut hi) = (0.0f64, m_h.ln().max(0.0) + 1e-12);
    let mut r = 0.5 * (lo + hi);
    for _ in 0..200 {
        let g = mgf(law, r, h) - 1.0;
        if g.abs() < 1e-15 {
            return Ok(r);
        }
        if g > 0.0 {
            lo = r;
        } else {
            hi = r;
        }
        // dG/dr = -E[theta e^{-r theta + h zeta}] < 0
        let dg: f64 = law
            .support()
            .iter()
            .map(|&(t, z, p)| -p * t as f64 * (-r * t as f64 + h * z as f64).exp())
            .sum();
        let newton = r - g / dg;
        r = if newton > lo && newton < hi {
            newton
        } else {
            0.5 * (lo + hi)
        };
        if hi - lo < 1e-16 * (1.0 + hi.abs()) {
            return Ok(r);
        }
    }
    Err(Error::NoConvergence {
        what: "Newton solve of G(r, h) = 1",
        achieved: (mgf(law, r, h) - 1.0).abs(),
    })
}

/// Curvature `r''(0)` by a 5-point second difference at `h0 = 1e-2`,
/// Richardson-extrapolated once. Must equal `chi = Var(zeta)/E(theta)`.
pub fn wulff_curvature(law: &StepLaw) -> Result<f64> {
    let second_diff = |h0: f64| -> Result<f64> {
        let r_1 = solve_rate(law, h0)?;
        let r_2 = solve_rate(law, 2.0 * h0)?;
        let r_m1 = solve_rate(law, -h0)?;
        let r_m2 = solve_rate(law, -2.0 * h0)?;
        // r(0) = 0 exactly: G(0,0) = 1.
        Ok((-r_2 + 16.0 * r_1 + 16.0 * r_m1 - r_m2) / (12.0 * h0 * h0))
    };
    let h0 = 1e-2;
    let d1 = second_diff(h0)?;
    let d2 = second_diff(h0 / 2.0)?;
    Ok((16.0 * d2 - d1) / 15.0)
}
