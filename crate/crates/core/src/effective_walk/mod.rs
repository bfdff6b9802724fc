//! Fluctuation theory of the effective random walk: finite-support step
//! laws, exact first-passage DP kernels, harmonic functions of the killed
//! vertical walk, soft-core expectations, exactly conditioned bridges,
//! diffusive rescaling, and the curvature cross-check tying the step law's
//! diffusivity to the local geometry of the equilibrium crystal shape.

mod bridge;
mod dp;
mod harmonic;
mod step_law;
mod wulff;

pub use bridge::{sample_conditioned_bridge, BridgeSampler};
pub use dp::{
    enumerate_hit_prob, enumerate_soft_core, hit_prob_dp, hit_prob_dp_detailed, soft_core_dp,
    soft_core_dp_detailed, tpf_ratio_scan, DpDetail, RatioScan,
};
pub use harmonic::{check_harmonicity, harmonic_h, harmonic_table, HarmonicFn};
pub use step_law::StepLaw;
pub use wulff::{mgf, solve_rate, wulff_curvature};

use crate::error::{Error, Result};

/// Which killed one-dimensional walk a harmonic function refers to:
/// `Plus` for the vertical component itself, `Minus` for its negation.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Side {
    Plus,
    Minus,
}

/// Trajectory of the effective walk: a start point and i.i.d.-law steps
/// `(theta, zeta)` with strictly increasing horizontal component.
#[derive(Debug, Clone)]
pub struct WalkPath {
    pub start: (i64, i64),
    pub steps: Vec<(i64, i64)>,
}

impl WalkPath {
    /// Positions `S_0, S_1, ..., S_M`.
    pub fn positions(&self) -> Vec<(i64, i64)> {
        let mut out = Vec::with_capacity(self.steps.len() + 1);
        let mut pos = self.start;
        out.push(pos);
        for &(dt, dz) in &self.steps {
            pos = (pos.0 + dt, pos.1 + dz);
            out.push(pos);
        }
        out
    }

    pub fn end(&self) -> (i64, i64) {
        self.steps
            .iter()
            .fold(self.start, |p, &(dt, dz)| (p.0 + dt, p.1 + dz))
    }

    /// One step per line: `theta zeta`.
    pub fn to_text(&self) -> String {
        let mut s = format!("start {} {}\n", self.start.0, self.start.1);
        for &(dt, dz) in &self.steps {
            s.push_str(&format!("{dt} {dz}\n"));
        }
        s
    }
}

/// Piecewise-linear interpolation through the diffusively rescaled vertices
/// `(T_i / n, Z_i / sqrt(chi n))`, evaluable at any `t` in `[0, 1]`.
#[derive(Debug, Clone)]
pub struct RescaledPath {
    ts: Vec<f64>,
    zs: Vec<f64>,
}

pub fn rescale_path(path: &WalkPath, n: usize, chi: f64) -> Result<RescaledPath> {
    if !(chi > 0.0) {
        return Err(Error::config(format!("chi must be positive, got {chi}")));
    }
    let denom = (chi * n as f64).sqrt();
    let positions = path.positions();
    let ts = positions.iter().map(|p| p.0 as f64 / n as f64).collect();
    let zs = positions.iter().map(|p| p.1 as f64 / denom).collect();
    Ok(RescaledPath { ts, zs })
}

impl RescaledPath {
    pub fn nodes(&self) -> impl Iterator<Item = (f64, f64)> + '_ {
        self.ts.iter().copied().zip(self.zs.iter().copied())
    }

    pub fn eval(&self, t: f64) -> f64 {
        let t = t.clamp(self.ts[0], *self.ts.last().unwrap());
        // First node with ts >= t.
        let hi = self.ts.partition_point(|&x| x < t);
        if hi == 0 {
            return self.zs[0];
        }
        if hi >= self.ts.len() {
            return *self.zs.last().unwrap();
        }
        let (t0, t1) = (self.ts[hi - 1], self.ts[hi]);
        let (z0, z1) = (self.zs[hi - 1], self.zs[hi]);
        if t1 == t0 {
            return z1;
        }
        z0 + (z1 - z0) * (t - t0) / (t1 - t0)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rescale_flat_path_is_zero() {
        let path = WalkPath {
            start: (0, 0),
            steps: vec![(1, 0); 8],
        };
        let r = rescale_path(&path, 8, 1.0).unwrap();
        for i in 0..=20 {
            assert_eq!(r.eval(i as f64 / 20.0), 0.0);
        }
    }

    #[test]
    fn rescale_endpoint_and_chi_scaling() {
        let path = WalkPath {
            start: (0, 1),
            steps: vec![(1, 1), (2, -1), (1, 3)],
        };
        let n = 4;
        let r1 = rescale_path(&path, n, 1.0).unwrap();
        let r2 = rescale_path(&path, n, 2.0).unwrap();
        let end = path.end();
        let at_end = end.0 as f64 / n as f64;
        assert!((r1.eval(at_end) - end.1 as f64 / (n as f64).sqrt()).abs() < 1e-12);
        // Doubling chi scales pointwise by 1/sqrt(2).
        for i in 0..=10 {
            let t = i as f64 / 10.0;
            assert!((r2.eval(t) - r1.eval(t) / 2f64.sqrt()).abs() < 1e-12);
        }
        assert!(rescale_path(&path, n, 0.0).is_err());
    }

    #[test]
    fn walk_path_text() {
        let path = WalkPath {
            start: (0, 2),
            steps: vec![(1, -1), (3, 0)],
        };
        assert_eq!(path.to_text(), "start 0 2\n1 -1\n3 0\n");
        assert_eq!(path.positions(), vec![(0, 2), (1, 1), (4, 1)]);
    }
}
