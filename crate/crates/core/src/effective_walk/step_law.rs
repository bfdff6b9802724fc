//! Finite-support step laws of the effective walk.

use std::collections::BTreeMap;

use crate::error::{Error, Result};

use super::Side;

const SYMMETRY_TOL: f64 = 1e-9;

/// Validated step law on `N x Z`: horizontal steps `theta >= 1`, vertical
/// steps with a symmetric conditional law given `theta`. Finite support
/// makes the exponential-tail assumption automatic and the DP windows exact.
#[derive(Debug, Clone)]
pub struct StepLaw {
    /// Sorted `(theta, zeta, probability)` with probabilities summing to 1.
    support: Vec<(i64, i64, f64)>,
    theta_max: i64,
    zeta_max: i64,
    mean_theta: f64,
    var_zeta: f64,
}

impl StepLaw {
    /// Normalises, merges duplicates and checks the structural assumptions:
    /// `theta >= 1`, nonnegative weights, and per-`theta` symmetry of the
    /// vertical component.
    pub fn validate(raw: &[((i64, i64), f64)]) -> Result<StepLaw> {
        let mut merged: BTreeMap<(i64, i64), f64> = BTreeMap::new();
        for &((theta, zeta), p) in raw {
            if theta < 1 {
                return Err(Error::StepLaw(format!(
                    "horizontal step must be >= 1, got theta = {theta}"
                )));
            }
            if !(p >= 0.0) || !p.is_finite() {
                return Err(Error::StepLaw(format!("weight {p} is not a finite nonnegative number")));
            }
            *merged.entry((theta, zeta)).or_insert(0.0) += p;
        }
        let total: f64 = merged.values().sum();
        if !(total > 0.0) {
            return Err(Error::StepLaw("law is not normalizable (zero total weight)".into()));
        }
        let support: Vec<(i64, i64, f64)> = merged
            .iter()
            .filter(|(_, &p)| p > 0.0)
            .map(|(&(t, z), &p)| (t, z, p / total))
            .collect();
        for &(t, z, p) in &support {
            let mirror = support
                .iter()
                .find(|&&(t2, z2, _)| t2 == t && z2 == -z)
                .map(|&(_, _, p2)| p2)
                .unwrap_or(0.0);
            if (p - mirror).abs() > SYMMETRY_TOL * p.max(1.0) {
                return Err(Error::StepLaw(format!(
                    "conditional law of zeta given theta = {t} is not symmetric: \
                     P({t},{z}) = {p} vs P({t},{}) = {mirror}",
                    -z
                )));
            }
        }
        let mean_theta: f64 = support.iter().map(|&(t, _, p)| t as f64 * p).sum();
        let mean_zeta: f64 = support.iter().map(|&(_, z, p)| z as f64 * p).sum();
        let var_zeta: f64 = support
            .iter()
            .map(|&(_, z, p)| (z as f64 - mean_zeta).powi(2) * p)
            .sum();
        Ok(StepLaw {
            theta_max: support.iter().map(|&(t, _, _)| t).max().unwrap(),
            zeta_max: support.iter().map(|&(_, z, _)| z.abs()).max().unwrap(),
            support,
            mean_theta,
            var_zeta,
        })
    }

    pub fn from_triples(triples: &[(i64, i64, f64)]) -> Result<StepLaw> {
        let raw: Vec<((i64, i64), f64)> = triples.iter().map(|&(t, z, p)| ((t, z), p)).collect();
        Self::validate(&raw)
    }

    /// `{(1, -1): 1/2, (1, +1): 1/2}`.
    pub fn unit_step() -> StepLaw {
        Self::from_triples(&[(1, -1, 0.5), (1, 1, 0.5)]).unwrap()
    }

    /// `{(1, -1), (1, 0), (1, +1)}` uniform; diffusivity 2/3.
    pub fn three_point() -> StepLaw {
        Self::from_triples(&[(1, -1, 1.0), (1, 0, 1.0), (1, 1, 1.0)]).unwrap()
    }

    /// `theta = 1`, `zeta` uniform on `-zmax..=zmax`.
    pub fn uniform_zeta(zmax: i64) -> StepLaw {
        let triples: Vec<(i64, i64, f64)> = (-zmax..=zmax).map(|z| (1, z, 1.0)).collect();
        Self::from_triples(&triples).unwrap()
    }

    pub fn support(&self) -> &[(i64, i64, f64)] {
        &self.support
    }

    pub fn theta_max(&self) -> i64 {
        self.theta_max
    }

    pub fn zeta_max(&self) -> i64 {
        self.zeta_max
    }

    pub fn mean_theta(&self) -> f64 {
        self.mean_theta
    }

    pub fn var_zeta(&self) -> f64 {
        self.var_zeta
    }

    /// Diffusivity constant `chi = Var(zeta) / E(theta)`.
    pub fn chi(&self) -> f64 {
        self.var_zeta / self.mean_theta
    }

    /// Marginal law of the vertical component (negated for `Side::Minus`),
    /// merged over `theta`.
    pub fn zeta_marginal(&self, side: Side) -> Vec<(i64, f64)> {
        let mut map: BTreeMap<i64, f64> = BTreeMap::new();
        for &(_, z, p) in &self.support {
            let z = match side {
                Side::Plus => z,
                Side::Minus => -z,
            };
            *map.entry(z).or_insert(0.0) += p;
        }
        map.into_iter().collect()
    }
}
