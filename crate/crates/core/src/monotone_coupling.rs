//! Sequential monotone coupling of two random-cluster measures with ordered
//! weights: the chains share one uniform per edge and open it below their
//! respective exact conditional probabilities, edge by edge in the canonical
//! order. The joint law is computed exactly by splitting `[0,1]` at the two
//! thresholds, and the per-lower-edge decoupling bounds are verified
//! exhaustively from that tree.
//!
//! Weights: the upper chain has weight `b` on every edge; the lower chain
//! has `b` off the designated lower edge set and `a <= b` on it.

use std::collections::HashMap;

use crate::error::{Error, Result};
use crate::lattice::Edge;
use crate::random_cluster::{
    exact_measure, unnormalized_weights, BondConfig, BoundaryWiring, ExactMeasure, Graph,
    WeightProfile,
};

/// Edge limit for threshold evaluation (2^E prefix tables).
pub const MAX_COUPLING_EDGES: usize = 18;

/// Edge limit for the full joint-law tree (3^E leaves).
pub const MAX_JOINT_EDGES: usize = 12;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Chain {
    Upper,
    Lower,
}

/// A coupling instance: graph, cluster weight, the ordered pair of edge
/// weights and the designated lower edge set.
#[derive(Debug, Clone)]
pub struct CouplingInstance {
    pub graph: Graph,
    pub q: f64,
    /// Lower-chain weight on the lower edge set.
    pub a: f64,
    /// Weight everywhere else (and the upper chain's weight on all edges).
    pub b: f64,
    lower_edges: Vec<bool>,
}

impl CouplingInstance {
    pub fn new(graph: Graph, q: f64, a: f64, b: f64, lower_edges: Vec<bool>) -> Result<Self> {
        if graph.edge_count() > MAX_COUPLING_EDGES {
            return Err(Error::TooLarge {
                edges: graph.edge_count(),
                limit: MAX_COUPLING_EDGES,
            });
        }
        if !(q >= 1.0) {
            return Err(Error::config(format!("q must be >= 1, got {q}")));
        }
        if !(0.0 <= a && a <= b) || !(b > 0.0) {
            return Err(Error::config(format!(
                "weights must satisfy 0 <= a <= b and b > 0, got a={a} b={b}"
            )));
        }
        if lower_edges.len() != graph.edge_count() {
            return Err(Error::config("lower-edge mask length mismatch"));
        }
        Ok(CouplingInstance {
            graph,
            q,
            a,
            b,
            lower_edges,
        })
    }

    /// Lower edge set = edges with an endpoint of negative height, matching
    /// the wall convention.
    pub fn from_wall_graph(graph: Graph, q: f64, a: f64, b: f64) -> Result<Self> {
        let lower: Vec<bool> = graph.edges().iter().map(Edge::touches_lower_half).collect();
        Self::new(graph, q, a, b, lower)
    }

    pub fn lower_edges(&self) -> &[bool] {
        &self.lower_edges
    }

    pub fn lower_mask(&self) -> u64 {
        self.lower_edges
            .iter()
            .enumerate()
            .fold(0, |m, (i, &l)| m | (l as u64) << i)
    }

    fn profile(&self, chain: Chain) -> Result<WeightProfile> {
        let edges = self.graph.edges();
        let lower = &self.lower_edges;
        WeightProfile::from_fn(&self.graph, self.q, |e| {
            let idx = edges.iter().position(|x| x == e).unwrap();
            match chain {
                Chain::Upper => self.b,
                Chain::Lower => {
                    if lower[idx] {
                        self.a
                    } else {
                        self.b
                    }
                }
            }
        })
    }

    /// Exact measure of one chain (enumeration oracle).
    pub fn chain_measure(&self, chain: Chain) -> Result<ExactMeasure> {
        exact_measure(&self.graph, &self.profile(chain)?, &BoundaryWiring::free())
    }

    /// Decoupling rate `epsilon(a, b) = (b - a) / ((b + q) b)`.
    pub fn epsilon(&self) -> f64 {
        (self.b - self.a) / ((self.b + self.q) * self.b)
    }

    /// Per-lower-edge conditional discrepancy bound `(b-a)/((b+q)(b+1))`.
    pub fn claim_bound(&self) -> f64 {
        (self.b - self.a) / ((self.b + self.q) * (self.b + 1.0))
    }
}

/// Prefix sums of configuration weights: `levels[i][p]` is the total weight
/// of all configurations whose first `i` edges equal the bits of `p`.
/// Conditionals given a prefix are then O(1) ratios.
struct PrefixTable {
    levels: Vec<Vec<f64>>,
}

impl PrefixTable {
    fn build(graph: &Graph, w: &WeightProfile) -> Result<Self> {
        let m = graph.edge_count();
        let mut levels = vec![Vec::new(); m + 1];
        levels[m] = unnormalized_weights(graph, w, &BoundaryWiring::free())?;
        for i in (0..m).rev() {
            let next = std::mem::take(&mut levels[i + 1]);
            levels[i] = (0..1usize << i)
                .map(|p| next[p] + next[p | 1 << i])
                .collect();
            levels[i + 1] = next;
        }
        Ok(PrefixTable { levels })
    }

    /// `P(edge i open | first i edges = history)`; `None` on an
    /// unreachable (zero-weight) history.
    fn conditional(&self, history: u64, i: usize) -> Option<f64> {
        let denom = self.levels[i][history as usize];
        if denom <= 0.0 {
            return None;
        }
        Some(self.levels[i + 1][(history as usize) | 1 << i] / denom)
    }
}

/// Exact marginal conditional `P(X_{e_i} = 1 | X_{E_{i-1}} = history)` for
/// one chain, summing the measure over all completions.
pub fn conditional_open_prob(
    instance: &CouplingInstance,
    chain: Chain,
    history: u64,
    i: usize,
) -> Result<f64> {
    let table = PrefixTable::build(&instance.graph, &instance.profile(chain)?)?;
    table
        .conditional(history, i)
        .ok_or_else(|| Error::ZeroProbability(format!("history {history:#b} before edge {i}")))
}

fn threshold_pair(
    upper: &PrefixTable,
    lower: &PrefixTable,
    hist_up: u64,
    hist_lo: u64,
    i: usize,
) -> Result<(f64, f64)> {
    let t_up = upper
        .conditional(hist_up, i)
        .ok_or_else(|| Error::ZeroProbability(format!("upper history {hist_up:#b} at edge {i}")))?;
    let t_lo = lower
        .conditional(hist_lo, i)
        .ok_or_else(|| Error::ZeroProbability(format!("lower history {hist_lo:#b} at edge {i}")))?;
    // t_up >= t_lo is the monotonicity mechanism; a material violation
    // would be a bug, not rounding.
    if t_up < t_lo - 1e-9 {
        return Err(Error::Internal(format!(
            "threshold ordering violated at edge {i}: {t_up} < {t_lo}"
        )));
    }
    Ok((t_up, t_lo.min(t_up)))
}

/// Runs the sequential construction for one vector of uniforms; exact and
/// deterministic. Returns `(omega, eta)` with `omega >= eta` coordinatewise.
pub fn coupled_sample(
    instance: &CouplingInstance,
    uniforms: &[f64],
) -> Result<(BondConfig, BondConfig)> {
    let m = instance.graph.edge_count();
    if uniforms.len() != m {
        return Err(Error::config(format!(
            "need {m} uniforms, got {}",
            uniforms.len()
        )));
    }
    let upper = PrefixTable::build(&instance.graph, &instance.profile(Chain::Upper)?)?;
    let lower = PrefixTable::build(&instance.graph, &instance.profile(Chain::Lower)?)?;
    let (mut omega, mut eta) = (0u64, 0u64);
    for (i, &u) in uniforms.iter().enumerate() {
        let (t_up, t_lo) = threshold_pair(&upper, &lower, omega, eta, i)?;
        if u < t_up {
            omega |= 1 << i;
        }
        if u < t_lo {
            eta |= 1 << i;
        }
    }
    debug_assert_eq!(omega | eta, omega);
    Ok((
        BondConfig::from_mask(omega, m),
        BondConfig::from_mask(eta, m),
    ))
}

/// Exact joint law of the coupled pair, as `(omega, eta, probability)`
/// triples over the reachable leaves of the interval-splitting tree.
#[derive(Debug, Clone)]
pub struct JointLaw {
    pub pairs: Vec<(u64, u64, f64)>,
    pub edge_count: usize,
    /// Minimum of `t_upper - t_lower` over all reachable nodes.
    pub threshold_min_gap: f64,
}

impl JointLaw {
    pub fn marginal(&self, chain: Chain) -> Vec<f64> {
        let mut out = vec![0.0; 1 << self.edge_count];
        for &(w, e, p) in &self.pairs {
            let mask = match chain {
                Chain::Upper => w,
                Chain::Lower => e,
            };
            out[mask as usize] += p;
        }
        out
    }

    /// Probability mass on `{omega >= eta}`; 1 by construction.
    pub fn monotone_mass(&self) -> f64 {
        self.pairs
            .iter()
            .filter(|&&(w, e, _)| w & e == e)
            .map(|&(_, _, p)| p)
            .sum()
    }
}

pub fn exact_joint_law(instance: &CouplingInstance) -> Result<JointLaw> {
    let m = instance.graph.edge_count();
    if m > MAX_JOINT_EDGES {
        return Err(Error::TooLarge {
            edges: m,
            limit: MAX_JOINT_EDGES,
        });
    }
    let upper = PrefixTable::build(&instance.graph, &instance.profile(Chain::Upper)?)?;
    let lower = PrefixTable::build(&instance.graph, &instance.profile(Chain::Lower)?)?;
    let mut pairs = Vec::new();
    let mut min_gap = f64::INFINITY;
    // Depth-first over (edge index, omega prefix, eta prefix, probability).
    let mut stack: Vec<(usize, u64, u64, f64)> = vec![(0, 0, 0, 1.0)];
    while let Some((i, w, e, p)) = stack.pop() {
        if i == m {
            pairs.push((w, e, p));
            continue;
        }
        let (t_up, t_lo) = threshold_pair(&upper, &lower, w, e, i)?;
        min_gap = min_gap.min(t_up - t_lo);
        let bit = 1u64 << i;
        // u < t_lo: both open; t_lo <= u < t_up: only omega; else: both closed.
        for (len, nw, ne) in [
            (t_lo, w | bit, e | bit),
            (t_up - t_lo, w | bit, e),
            (1.0 - t_up, w, e),
        ] {
            if len > 0.0 {
                stack.push((i + 1, nw, ne, p * len));
            }
        }
    }
    pairs.sort_unstable_by(|x, y| (x.0, x.1).cmp(&(y.0, y.1)));
    Ok(JointLaw {
        pairs,
        edge_count: m,
        threshold_min_gap: min_gap,
    })
}

/// Exhaustive verification report for the coupling's two quantitative
/// bounds, plus the marginal and monotonicity checks.
#[derive(Debug, Clone)]
pub struct BoundsReport {
    pub claim_bound: f64,
    /// Min over reachable nodes at lower edges of
    /// `Psi(omega_e = 1, eta_e = 0 | history) - claim_bound`.
    pub claim_min_margin: f64,
    pub claim_worst: Option<ClaimWitness>,
    pub epsilon: f64,
    /// Min over `(psi, A)` of `(1-eps)^{|A|} Phi_b(psi) - Psi(omega = psi,
    /// eta open on A)`.
    pub strict_min_margin: f64,
    pub strict_worst: Option<(u64, u64)>,
    pub tv_upper: f64,
    pub tv_lower: f64,
    pub monotone_mass: f64,
    pub nodes_checked: usize,
    pub threshold_min_gap: f64,
}

/// Witnessing history for the worst per-edge conditional margin.
#[derive(Debug, Clone)]
pub struct ClaimWitness {
    pub edge: usize,
    pub omega_history: u64,
    pub eta_history: u64,
}

impl BoundsReport {
    pub fn pass(&self, tol: f64) -> bool {
        self.claim_min_margin >= -tol
            && self.strict_min_margin >= -tol
            && self.tv_upper <= tol
            && self.tv_lower <= tol
            && (self.monotone_mass - 1.0).abs() <= tol
            && self.threshold_min_gap >= -tol
    }

    pub fn summary(&self) -> String {
        format!(
            "claim bound {:.6}: min margin {:+.3e}; epsilon {:.6}: min margin {:+.3e}; \
             TV(upper) {:.3e}, TV(lower) {:.3e}; P(omega >= eta) = {:.12}; \
             min threshold gap {:+.3e}; {} nodes",
            self.claim_bound,
            self.claim_min_margin,
            self.epsilon,
            self.strict_min_margin,
            self.tv_upper,
            self.tv_lower,
            self.monotone_mass,
            self.threshold_min_gap,
            self.nodes_checked,
        )
    }
}

pub fn verify_bounds(instance: &CouplingInstance) -> Result<BoundsReport> {
    let m = instance.graph.edge_count();
    if m > MAX_JOINT_EDGES {
        return Err(Error::TooLarge {
            edges: m,
            limit: MAX_JOINT_EDGES,
        });
    }
    let upper = PrefixTable::build(&instance.graph, &instance.profile(Chain::Upper)?)?;
    let lower = PrefixTable::build(&instance.graph, &instance.profile(Chain::Lower)?)?;
    let claim_bound = instance.claim_bound();
    let epsilon = instance.epsilon();

    let mut pairs: Vec<(u64, u64, f64)> = Vec::new();
    let mut claim_min_margin = f64::INFINITY;
    let mut claim_worst = None;
    let mut min_gap = f64::INFINITY;
    let mut nodes = 0usize;
    let mut stack: Vec<(usize, u64, u64, f64)> = vec![(0, 0, 0, 1.0)];
    while let Some((i, w, e, p)) = stack.pop() {
        if i == m {
            pairs.push((w, e, p));
            continue;
        }
        nodes += 1;
        let (t_up, t_lo) = threshold_pair(&upper, &lower, w, e, i)?;
        min_gap = min_gap.min(t_up - t_lo);
        if instance.lower_edges[i] {
            let margin = (t_up - t_lo) - claim_bound;
            if margin < claim_min_margin {
                claim_min_margin = margin;
                claim_worst = Some(ClaimWitness {
                    edge: i,
                    omega_history: w,
                    eta_history: e,
                });
            }
        }
        let bit = 1u64 << i;
        for (len, nw, ne) in [
            (t_lo, w | bit, e | bit),
            (t_up - t_lo, w | bit, e),
            (1.0 - t_up, w, e),
        ] {
            if len > 0.0 {
                stack.push((i + 1, nw, ne, p * len));
            }
        }
    }

    // Marginals against the two exact measures.
    let law = JointLaw {
        pairs,
        edge_count: m,
        threshold_min_gap: min_gap,
    };
    let upper_exact = instance.chain_measure(Chain::Upper)?;
    let lower_exact = instance.chain_measure(Chain::Lower)?;
    let tv = |marg: &[f64], exact: &ExactMeasure| -> f64 {
        0.5 * marg
            .iter()
            .zip(exact.probs())
            .map(|(a, b)| (a - b).abs())
            .sum::<f64>()
    };
    let tv_upper = tv(&law.marginal(Chain::Upper), &upper_exact);
    let tv_lower = tv(&law.marginal(Chain::Lower), &lower_exact);

    // Decoupling inequality: for every psi and every subset A of lower
    // edges open in psi, Psi(omega = psi, eta open on A) <= (1-eps)^|A| Phi_b(psi).
    let mut by_psi: HashMap<u64, Vec<(u64, f64)>> = HashMap::new();
    for &(w, e, p) in &law.pairs {
        by_psi.entry(w).or_default().push((e, p));
    }
    let lower_mask = instance.lower_mask();
    let mut strict_min_margin = f64::INFINITY;
    let mut strict_worst = None;
    for (&psi, etas) in &by_psi {
        let phi_b = upper_exact.prob(psi);
        let l = psi & lower_mask;
        let mut a_mask = l;
        loop {
            let lhs: f64 = etas
                .iter()
                .filter(|&&(eta, _)| eta & a_mask == a_mask)
                .map(|&(_, p)| p)
                .sum();
            let rhs = (1.0 - epsilon).powi(a_mask.count_ones() as i32) * phi_b;
            let margin = rhs - lhs;
            if margin < strict_min_margin {
                strict_min_margin = margin;
                strict_worst = Some((psi, a_mask));
            }
            if a_mask == 0 {
                break;
            }
            a_mask = (a_mask - 1) & l;
        }
    }

    Ok(BoundsReport {
        claim_bound,
        claim_min_margin,
        claim_worst,
        epsilon,
        strict_min_margin,
        strict_worst,
        tv_upper,
        tv_lower,
        monotone_mass: law.monotone_mass(),
        nodes_checked: nodes,
        threshold_min_gap: law.threshold_min_gap,
    })
}
