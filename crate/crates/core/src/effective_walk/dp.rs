//! Exact forward DP kernels for first-passage probabilities of the
//! effective walk, the soft-core expectation, and the `n^{3/2}` ratio scan.
//!
//! Height windows are truncated with a certified discarded-mass bound
//! (Hoeffding for excursions above the window, geometric in the soft-core
//! penalty below it); the bound is recomputed and reported per call.

use crate::error::{Error, Result};

use super::{harmonic_h, Side, StepLaw};

/// Additive truncation target for the window bounds.
const TRUNCATION_TARGET: f64 = 1e-13;

/// Memory budget for the DP ring buffer, in f64 cells.
const CELL_BUDGET: usize = 64_000_000;

/// DP value plus the certified additive truncation error and the window.
#[derive(Debug, Clone)]
pub struct DpDetail {
    pub value: f64,
    pub truncation_bound: f64,
    pub window_bottom: i64,
    pub window_top: i64,
}

/// Window margin above `max(u, v)` so that the discarded mass (Hoeffding
/// union bound over the at most `n` steps) stays below the target.
fn window_margin(zeta_max: i64, n: usize) -> i64 {
    if zeta_max == 0 {
        return 1;
    }
    let nf = n as f64;
    (zeta_max as f64 * (2.0 * nf * (nf / TRUNCATION_TARGET).ln()).sqrt()).ceil() as i64 + 1
}

fn hoeffding_mass(zeta_max: i64, n: usize, excess: i64) -> f64 {
    if zeta_max == 0 || excess <= 0 {
        return 0.0;
    }
    let nf = n as f64;
    nf * (-(excess as f64).powi(2) / (2.0 * nf * (zeta_max as f64).powi(2))).exp()
}

/// Forward DP over columns `0..=n` in the window `[bottom, top]`, with a
/// per-height landing multiplier. Returns the mass arriving at `(n, v)`.
fn dp_run(
    law: &StepLaw,
    n: usize,
    u: i64,
    v: i64,
    bottom: i64,
    top: i64,
    landing: impl Fn(i64) -> f64,
) -> Result<f64> {
    debug_assert!(bottom <= 0 && u <= top && v <= top && v >= bottom);
    let height = (top - bottom + 1) as usize;
    let cols = law.theta_max() as usize + 1;
    if cols.saturating_mul(height) > CELL_BUDGET {
        return Err(Error::WindowOverflow {
            required: cols * height,
            budget: CELL_BUDGET,
        });
    }
    let mut ring: Vec<Vec<f64>> = vec![vec![0.0; height]; cols];
    ring[0][(u - bottom) as usize] = 1.0;
    for t in 1..=n {
        let idx = t % cols;
        let mut col = std::mem::take(&mut ring[idx]);
        for (i, cell) in col.iter_mut().enumerate() {
            let z = bottom + i as i64;
            let mut acc = 0.0;
            for &(theta, zeta, p) in law.support() {
                let theta = theta as usize;
                if theta <= t {
                    let pz = z - zeta;
                    if pz >= bottom && pz <= top {
                        acc += p * ring[(t - theta) % cols][(pz - bottom) as usize];
                    }
                }
            }
            *cell = acc * landing(z);
        }
        ring[idx] = col;
    }
    Ok(ring[n % cols][(v - bottom) as usize])
}

fn check_endpoints(n: usize, u: i64, v: i64) -> Result<()> {
    if n < 1 {
        return Err(Error::config("n must be >= 1"));
    }
    if u < 1 || v < 1 {
        return Err(Error::config(format!("u, v must be >= 1, got u={u} v={v}")));
    }
    Ok(())
}

/// Exact probability that the walk started at `(0, u)` visits `(n, v)`
/// strictly before visiting any height `< -floor_k`.
pub fn hit_prob_dp_detailed(
    law: &StepLaw,
    n: usize,
    u: i64,
    v: i64,
    floor_k: i64,
) -> Result<DpDetail> {
    check_endpoints(n, u, v)?;
    if floor_k < 0 {
        return Err(Error::config("floor_k must be >= 0"));
    }
    let top = u.max(v) + window_margin(law.zeta_max(), n);
    let bottom = -floor_k;
    let value = dp_run(law, n, u, v, bottom, top, |_| 1.0)?;
    Ok(DpDetail {
        value,
        truncation_bound: hoeffding_mass(law.zeta_max(), n, top - u.max(v)),
        window_bottom: bottom,
        window_top: top,
    })
}

pub fn hit_prob_dp(law: &StepLaw, n: usize, u: i64, v: i64, floor_k: i64) -> Result<f64> {
    hit_prob_dp_detailed(law, n, u, v, floor_k).map(|d| d.value)
}

/// Exact `E_{(0,u)}[ 1{hit (n,v)} delta^{#negative-height landings} ]`.
///
/// `delta = 0` degenerates to the hard-floor hitting probability (`0^0 = 1`
/// on paths with no negative visit), `delta = 1` to the unconstrained
/// hitting probability within the window.
pub fn soft_core_dp_detailed(
    law: &StepLaw,
    n: usize,
    u: i64,
    v: i64,
    delta: f64,
) -> Result<DpDetail> {
    check_endpoints(n, u, v)?;
    if !(0.0..=1.0).contains(&delta) {
        return Err(Error::config(format!("delta must lie in [0, 1], got {delta}")));
    }
    let zmax = law.zeta_max();
    let margin = window_margin(zmax, n);
    let top = u.max(v) + margin;
    // Below the floor the mass is suppressed either by the Hoeffding bound
    // or geometrically by delta per landing: a path reaching depth -K spends
    // at least K/zmax consecutive landings below zero.
    let depth = if delta == 0.0 {
        0
    } else if delta < 1.0 {
        let geometric =
            (zmax as f64 * ((1.0 / TRUNCATION_TARGET).ln() / (1.0 / delta).ln() + 1.0)).ceil() as i64;
        geometric.min(margin)
    } else {
        margin
    };
    let bottom = -depth;
    let value = dp_run(law, n, u, v, bottom, top, |z| if z < 0 { delta } else { 1.0 })?;
    let bottom_mass = if delta == 0.0 {
        0.0
    } else {
        let geometric = if delta < 1.0 && zmax > 0 {
            delta.powf((depth as f64 / zmax as f64 - 1.0).max(0.0))
        } else {
            f64::INFINITY
        };
        geometric.min(hoeffding_mass(zmax, n, depth))
    };
    Ok(DpDetail {
        value,
        truncation_bound: hoeffding_mass(zmax, n, top - u.max(v)) + bottom_mass,
        window_bottom: bottom,
        window_top: top,
    })
}

pub fn soft_core_dp(law: &StepLaw, n: usize, u: i64, v: i64, delta: f64) -> Result<f64> {
    soft_core_dp_detailed(law, n, u, v, delta).map(|d| d.value)
}

/// Brute-force path enumeration of the hard-floor hitting probability.
/// Independent reference for the DP; cost is `|support|^n`.
pub fn enumerate_hit_prob(law: &StepLaw, n: usize, u: i64, v: i64, floor_k: i64) -> f64 {
    fn rec(law: &StepLaw, n: i64, v: i64, floor_k: i64, t: i64, z: i64, p: f64, acc: &mut f64) {
        if t == n && z == v {
            *acc += p;
            return;
        }
        if t >= n {
            return;
        }
        for &(theta, zeta, ps) in law.support() {
            let (nt, nz) = (t + theta, z + zeta);
            if nz < -floor_k {
                continue;
            }
            rec(law, n, v, floor_k, nt, nz, p * ps, acc);
        }
    }
    let mut acc = 0.0;
    rec(law, n as i64, v, floor_k, 0, u, 1.0, &mut acc);
    acc
}

/// Brute-force path enumeration of the soft-core expectation.
pub fn enumerate_soft_core(law: &StepLaw, n: usize, u: i64, v: i64, delta: f64) -> f64 {
    fn rec(law: &StepLaw, n: i64, v: i64, delta: f64, t: i64, z: i64, w: f64, acc: &mut f64) {
        if t == n && z == v {
            *acc += w;
            return;
        }
        if t >= n || w == 0.0 {
            return;
        }
        for &(theta, zeta, ps) in law.support() {
            let (nt, nz) = (t + theta, z + zeta);
            let mult = if nz < 0 { delta } else { 1.0 };
            rec(law, n, v, delta, nt, nz, w * ps * mult, acc);
        }
    }
    let mut acc = 0.0;
    rec(law, n as i64, v, delta, 0, u, 1.0, &mut acc);
    acc
}

/// Ratio scan `r(n) = P * n^{3/2} / (h^+(u) h^-(v))`, with a stabilisation
/// flag when the last two ratios differ by less than 10%.
#[derive(Debug, Clone)]
pub struct RatioScan {
    /// `(n, probability, ratio)` per grid point.
    pub points: Vec<(usize, f64, f64)>,
    pub stabilized: bool,
}

pub fn tpf_ratio_scan(law: &StepLaw, u: i64, v: i64, n_grid: &[usize]) -> Result<RatioScan> {
    if n_grid.is_empty() || n_grid.windows(2).any(|w| w[1] <= w[0]) {
        return Err(Error::config("n grid must be nonempty and increasing"));
    }
    let hu = harmonic_h(law, u, Side::Plus)?;
    let hv = harmonic_h(law, v, Side::Minus)?;
    let mut points = Vec::with_capacity(n_grid.len());
    for &n in n_grid {
        let p = hit_prob_dp(law, n, u, v, 0)?;
        let ratio = p * (n as f64).powf(1.5) / (hu * hv);
        points.push((n, p, ratio));
    }
    let stabilized = points.len() >= 2 && {
        let r1 = points[points.len() - 2].2;
        let r2 = points[points.len() - 1].2;
        r1 > 0.0 && (r2 / r1 - 1.0).abs() < 0.10
    };
    Ok(RatioScan { points, stabilized })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn two_step_unit_law_example() {
        // Four two-step paths; (+1,-1) and (-1,+1) hit (2,1) alive.
        let law = StepLaw::unit_step();
        let p = hit_prob_dp(&law, 2, 1, 1, 0).unwrap();
        assert!((p - 0.5).abs() < 1e-15);
    }

    #[test]
    fn unreachable_targets_have_zero_mass() {
        let law = StepLaw::unit_step();
        // Parity: cannot be at odd height after two +-1 steps from 1.
        assert_eq!(hit_prob_dp(&law, 2, 1, 2, 0).unwrap(), 0.0);
        // Range: cannot climb by 3 in two steps.
        assert_eq!(hit_prob_dp(&law, 2, 1, 4, 0).unwrap(), 0.0);
    }

    #[test]
    fn deterministic_law_single_column() {
        let law = StepLaw::from_triples(&[(1, 0, 1.0)]).unwrap();
        assert_eq!(hit_prob_dp(&law, 1, 3, 3, 0).unwrap(), 1.0);
        assert_eq!(hit_prob_dp(&law, 5, 3, 3, 0).unwrap(), 1.0);
        assert_eq!(hit_prob_dp(&law, 5, 3, 4, 0).unwrap(), 0.0);
    }

    #[test]
    fn dp_matches_enumeration_small_instances() {
        let laws = [
            StepLaw::unit_step(),
            StepLaw::three_point(),
            StepLaw::from_triples(&[(1, -1, 0.25), (1, 1, 0.25), (2, -2, 0.25), (2, 2, 0.25)])
                .unwrap(),
        ];
        for law in &laws {
            for n in 1..=4usize {
                for u in 1..=2i64 {
                    for v in 1..=2i64 {
                        for floor_k in 0..=1i64 {
                            let dp = hit_prob_dp(law, n, u, v, floor_k).unwrap();
                            let brute = enumerate_hit_prob(law, n, u, v, floor_k);
                            assert!(
                                (dp - brute).abs() < 1e-12,
                                "law chi={} n={n} u={u} v={v} k={floor_k}: {dp} vs {brute}",
                                law.chi()
                            );
                        }
                    }
                }
            }
        }
    }

    #[test]
    fn soft_core_sixteen_path_example() {
        // Unit-step law, n=4, u=v=1, delta=1/2: only the (-,-,+,+) path
        // dips negative (once), so the value is (5 + delta)/16.
        let law = StepLaw::unit_step();
        let delta = 0.5;
        let dp = soft_core_dp(&law, 4, 1, 1, delta).unwrap();
        let brute = enumerate_soft_core(&law, 4, 1, 1, delta);
        assert!((dp - brute).abs() < 1e-13);
        assert!((dp - (5.0 + delta) / 16.0).abs() < 1e-13);
    }

    #[test]
    fn soft_core_degenerations() {
        let law = StepLaw::three_point();
        for (n, u, v) in [(6usize, 1i64, 1i64), (5, 2, 1), (7, 1, 2)] {
            // delta = 0 is the hard floor at zero.
            let hard = hit_prob_dp(&law, n, u, v, 0).unwrap();
            let soft0 = soft_core_dp(&law, n, u, v, 0.0).unwrap();
            assert!((hard - soft0).abs() < 1e-13);
            // delta = 1 is the unconstrained hitting probability.
            let soft1 = soft_core_dp(&law, n, u, v, 1.0).unwrap();
            let free = enumerate_hit_prob(&law, n, u, v, i64::MAX / 2);
            assert!((soft1 - free).abs() < 1e-9, "{soft1} vs {free}");
        }
    }

    #[test]
    fn monotone_in_floor_and_delta() {
        let law = StepLaw::three_point();
        for (u, v) in [(1i64, 1i64), (2, 1)] {
            let mut prev = 0.0;
            for k in 0..4 {
                let p = hit_prob_dp(&law, 12, u, v, k).unwrap();
                assert!(p >= prev - 1e-15);
                prev = p;
            }
            let lo = soft_core_dp(&law, 12, u, v, 0.0).unwrap();
            let hi = soft_core_dp(&law, 12, u, v, 1.0).unwrap();
            let mut prev = lo;
            for d in [0.2, 0.5, 0.8] {
                let s = soft_core_dp(&law, 12, u, v, d).unwrap();
                assert!(s >= prev - 1e-15 && s <= hi + 1e-15);
                prev = s;
            }
        }
    }

    #[test]
    fn truncation_bound_is_reported_small() {
        let law = StepLaw::unit_step();
        let d = hit_prob_dp_detailed(&law, 200, 1, 1, 0).unwrap();
        assert!(d.truncation_bound < 1e-12);
        assert!(d.window_top > 1);
        let d = soft_core_dp_detailed(&law, 200, 1, 1, 0.5).unwrap();
        assert!(d.truncation_bound < 1e-12);
        assert!(d.window_bottom < 0);
    }

    #[test]
    fn scan_symmetric_in_u_v() {
        let law = StepLaw::three_point();
        let grid = [50usize, 100, 200];
        let a = tpf_ratio_scan(&law, 1, 2, &grid).unwrap();
        let b = tpf_ratio_scan(&law, 2, 1, &grid).unwrap();
        for (pa, pb) in a.points.iter().zip(&b.points) {
            assert!((pa.1 - pb.1).abs() <= 1e-12 * pa.1.max(1e-300));
        }
    }

    #[test]
    fn rejects_bad_arguments() {
        let law = StepLaw::unit_step();
        assert!(hit_prob_dp(&law, 0, 1, 1, 0).is_err());
        assert!(hit_prob_dp(&law, 5, 0, 1, 0).is_err());
        assert!(hit_prob_dp(&law, 5, 1, 1, -1).is_err());
        assert!(soft_core_dp(&law, 5, 1, 1, 1.5).is_err());
        assert!(tpf_ratio_scan(&law, 1, 1, &[100, 50]).is_err());
    }
}
