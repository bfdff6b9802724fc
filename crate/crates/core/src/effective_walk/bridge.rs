//! Exact sampling of the walk conditioned to hit `(n, v)` before entering
//! the lower half-plane, by a Doob transform of the backward DP table (no
//! rejection).

use rand::Rng;

use crate::error::{Error, Result};

use super::{StepLaw, WalkPath};

/// Memory budget for the backward table, in f64 cells.
const CELL_BUDGET: usize = 200_000_000;

/// Backward success probabilities `B(t, z) = P_{(t,z)}(hit (n,v) before
/// height < 0)` for all columns; reusable across start heights.
pub struct BridgeSampler {
    law: StepLaw,
    n: usize,
    v: i64,
    top: i64,
    /// Row-major by column: `table[t * (top + 1) + z]`.
    table: Vec<f64>,
}

impl BridgeSampler {
    pub fn new(law: &StepLaw, n: usize, v: i64) -> Result<Self> {
        if n < 1 || v < 1 {
            return Err(Error::config("need n >= 1 and v >= 1"));
        }
        let zmax = law.zeta_max() as f64;
        let margin = if zmax == 0.0 {
            1.0
        } else {
            zmax * (2.0 * n as f64 * (n as f64 / 1e-13).ln()).sqrt() + 1.0
        };
        let top = v + margin.ceil() as i64;
        let height = (top + 1) as usize;
        let cells = (n + 1) * height;
        if cells > CELL_BUDGET {
            return Err(Error::WindowOverflow {
                required: cells,
                budget: CELL_BUDGET,
            });
        }
        let mut table = vec![0.0f64; cells];
        table[n * height + v as usize] = 1.0;
        for t in (0..n).rev() {
            for z in 0..=top {
                let mut acc = 0.0;
                for &(theta, zeta, p) in law.support() {
                    let (nt, nz) = (t + theta as usize, z + zeta);
                    if nt > n || nz < 0 || nz > top {
                        continue;
                    }
                    acc += p * table[nt * height + nz as usize];
                }
                table[t * height + z as usize] = acc;
            }
        }
        Ok(BridgeSampler {
            law: law.clone(),
            n,
            v,
            top,
            table,
        })
    }

    fn b(&self, t: usize, z: i64) -> f64 {
        if z < 0 || z > self.top {
            0.0
        } else {
            self.table[t * (self.top as usize + 1) + z as usize]
        }
    }

    /// Success probability from `(0, u)`; equals the forward DP value.
    pub fn hit_prob_from(&self, u: i64) -> f64 {
        if u < 1 {
            return 0.0;
        }
        self.b(0, u)
    }

    /// One exact conditioned trajectory from `(0, u)` to `(n, v)`.
    pub fn sample(&self, u: i64, rng: &mut impl Rng) -> Result<WalkPath> {
        if self.hit_prob_from(u) <= 0.0 {
            return Err(Error::ZeroProbability(format!(
                "bridge from (0,{u}) to ({},{})",
                self.n, self.v
            )));
        }
        let mut steps = Vec::new();
        let (mut t, mut z) = (0usize, u);
        while t < self.n {
            // Doob transform: step weights p * B(next) / B(current).
            let mut weights: Vec<((i64, i64), f64)> = Vec::with_capacity(self.law.support().len());
            let mut total = 0.0;
            for &(theta, zeta, p) in self.law.support() {
                let (nt, nz) = (t + theta as usize, z + zeta);
                let w = if nt > self.n { 0.0 } else { p * self.b(nt, nz) };
                weights.push(((theta, zeta), w));
                total += w;
            }
            if total <= 0.0 {
                return Err(Error::Internal("bridge sampler reached a dead state".into()));
            }
            let mut r = rng.random::<f64>() * total;
            let mut chosen = weights[weights.len() - 1].0;
            for &(step, w) in &weights {
                if r < w {
                    chosen = step;
                    break;
                }
                r -= w;
            }
            t += chosen.0 as usize;
            z += chosen.1;
            steps.push(chosen);
        }
        debug_assert_eq!((t, z), (self.n, self.v));
        Ok(WalkPath {
            start: (0, u),
            steps,
        })
    }

    /// Doob-transformed step kernel at a state, for verification.
    pub fn step_kernel(&self, t: usize, z: i64) -> Vec<((i64, i64), f64)> {
        let denom = self.b(t, z);
        self.law
            .support()
            .iter()
            .map(|&(theta, zeta, p)| {
                let nt = t + theta as usize;
                let w = if nt > self.n || denom == 0.0 {
                    0.0
                } else {
                    p * self.b(nt, z + zeta) / denom
                };
                ((theta, zeta), w)
            })
            .collect()
    }
}

/// Convenience wrapper: build the table and draw one conditioned bridge.
pub fn sample_conditioned_bridge(
    law: &StepLaw,
    n: usize,
    u: i64,
    v: i64,
    rng: &mut impl Rng,
) -> Result<WalkPath> {
    BridgeSampler::new(law, n, v)?.sample(u, rng)
}
