//! Random-cluster measures with per-edge weights, exact enumeration on small
//! graphs, single-edge heat-bath dynamics, duality and pivotal-edge analysis.
//!
//! Configurations are weighted by `prod_{e open} w_e * q^{kappa(omega)}` where
//! `kappa` counts clusters after identifying the pre-wired boundary blocks.

use std::collections::HashMap;

use rand::Rng;

use crate::error::{Error, Result};
use crate::lattice::{Edge, Vertex};

/// Hard cap for exact enumeration: 2^22 configurations stay within a few
/// hundred MB and under a minute, and cover the 5x3- and 3x2-vertex boxes.
pub const MAX_ENUM_EDGES: usize = 22;

/// Union-find with union by size and path halving.
#[derive(Debug, Clone)]
pub struct UnionFind {
    parent: Vec<u32>,
    size: Vec<u32>,
}

impl UnionFind {
    pub fn new(n: usize) -> Self {
        UnionFind {
            parent: (0..n as u32).collect(),
            size: vec![1; n],
        }
    }

    pub fn find(&mut self, mut x: usize) -> usize {
        while self.parent[x] as usize != x {
            let p = self.parent[x] as usize;
            self.parent[x] = self.parent[p];
            x = p;
        }
        x
    }

    pub fn union(&mut self, x: usize, y: usize) {
        let (mut a, mut b) = (self.find(x), self.find(y));
        if a == b {
            return;
        }
        if self.size[a] < self.size[b] {
            std::mem::swap(&mut a, &mut b);
        }
        self.parent[b] = a as u32;
        self.size[a] += self.size[b];
    }

    pub fn same(&mut self, x: usize, y: usize) -> bool {
        self.find(x) == self.find(y)
    }

    /// Number of distinct classes.
    pub fn count(&mut self) -> usize {
        (0..self.parent.len()).filter(|&i| self.find(i) == i).count()
    }

    fn reset_from(&mut self, template: &UnionFind) {
        self.parent.copy_from_slice(&template.parent);
        self.size.copy_from_slice(&template.size);
    }
}

/// Finite graph with a canonical (lexicographic) edge enumeration.
#[derive(Debug, Clone)]
pub struct Graph {
    vertices: Vec<Vertex>,
    edges: Vec<Edge>,
    vertex_index: HashMap<Vertex, usize>,
    edge_index: HashMap<Edge, usize>,
    /// Per vertex: `(edge index, other endpoint index)`.
    adjacency: Vec<Vec<(usize, usize)>>,
}

impl Graph {
    pub fn new(mut edges: Vec<Edge>) -> Self {
        edges.sort();
        edges.dedup();
        let mut vertices: Vec<Vertex> = edges
            .iter()
            .flat_map(|e| {
                let (a, b) = e.endpoints();
                [a, b]
            })
            .collect();
        vertices.sort();
        vertices.dedup();
        let vertex_index: HashMap<Vertex, usize> =
            vertices.iter().enumerate().map(|(i, &v)| (v, i)).collect();
        let edge_index: HashMap<Edge, usize> =
            edges.iter().enumerate().map(|(i, &e)| (e, i)).collect();
        let mut adjacency = vec![Vec::new(); vertices.len()];
        for (i, e) in edges.iter().enumerate() {
            let (a, b) = e.endpoints();
            let (ia, ib) = (vertex_index[&a], vertex_index[&b]);
            adjacency[ia].push((i, ib));
            adjacency[ib].push((i, ia));
        }
        Graph {
            vertices,
            edges,
            vertex_index,
            edge_index,
            adjacency,
        }
    }

    pub fn vertex_count(&self) -> usize {
        self.vertices.len()
    }

    pub fn edge_count(&self) -> usize {
        self.edges.len()
    }

    pub fn edges(&self) -> &[Edge] {
        &self.edges
    }

    pub fn vertices(&self) -> &[Vertex] {
        &self.vertices
    }

    pub fn vertex_id(&self, v: Vertex) -> Option<usize> {
        self.vertex_index.get(&v).copied()
    }

    pub fn edge_id(&self, e: Edge) -> Option<usize> {
        self.edge_index.get(&e).copied()
    }

    pub fn adjacency(&self, v: usize) -> &[(usize, usize)] {
        &self.adjacency[v]
    }

    pub fn endpoints_ids(&self, edge: usize) -> (usize, usize) {
        let (a, b) = self.edges[edge].endpoints();
        (self.vertex_index[&a], self.vertex_index[&b])
    }
}

/// Bond configuration over a graph's canonical edge order.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct BondConfig {
    open: Vec<bool>,
}

impl BondConfig {
    pub fn all_closed(edges: usize) -> Self {
        BondConfig {
            open: vec![false; edges],
        }
    }

    pub fn all_open(edges: usize) -> Self {
        BondConfig {
            open: vec![true; edges],
        }
    }

    pub fn from_mask(mask: u64, edges: usize) -> Self {
        assert!(edges <= 64);
        BondConfig {
            open: (0..edges).map(|i| mask >> i & 1 == 1).collect(),
        }
    }

    pub fn mask(&self) -> u64 {
        assert!(self.open.len() <= 64);
        self.open
            .iter()
            .enumerate()
            .fold(0u64, |m, (i, &o)| m | (o as u64) << i)
    }

    pub fn len(&self) -> usize {
        self.open.len()
    }

    pub fn is_empty(&self) -> bool {
        self.open.is_empty()
    }

    pub fn is_open(&self, edge: usize) -> bool {
        self.open[edge]
    }

    pub fn set(&mut self, edge: usize, open: bool) {
        self.open[edge] = open;
    }

    pub fn flip(&mut self, edge: usize) {
        self.open[edge] = !self.open[edge];
    }

    pub fn open_count(&self) -> usize {
        self.open.iter().filter(|&&o| o).count()
    }

    /// Coordinatewise domination `self >= other`.
    pub fn dominates(&self, other: &BondConfig) -> bool {
        self.open
            .iter()
            .zip(&other.open)
            .all(|(&a, &b)| a || !b)
    }

    /// Compact bit-per-edge record, LSB first within each byte.
    pub fn to_bits(&self) -> Vec<u8> {
        let mut out = vec![0u8; self.open.len().div_ceil(8)];
        for (i, &o) in self.open.iter().enumerate() {
            if o {
                out[i / 8] |= 1 << (i % 8);
            }
        }
        out
    }

    pub fn from_bits(bits: &[u8], edges: usize) -> Result<Self> {
        if bits.len() != edges.div_ceil(8) {
            return Err(Error::config(format!(
                "bit record has {} bytes, expected {}",
                bits.len(),
                edges.div_ceil(8)
            )));
        }
        Ok(BondConfig {
            open: (0..edges).map(|i| bits[i / 8] >> (i % 8) & 1 == 1).collect(),
        })
    }

    /// Human-readable edge list: one `x1,y1;x2,y2` line per open edge, in
    /// canonical order. Coordinates are halves of the doubled convention.
    pub fn to_edge_list_text(&self, graph: &Graph) -> String {
        let mut s = String::new();
        for (i, e) in graph.edges().iter().enumerate() {
            if self.open[i] {
                let (a, b) = e.endpoints();
                let (ax, ay) = a.to_point();
                let (bx, by) = b.to_point();
                s.push_str(&format!("{ax},{ay};{bx},{by}\n"));
            }
        }
        s
    }

    pub fn from_edge_list_text(graph: &Graph, text: &str) -> Result<Self> {
        let mut cfg = BondConfig::all_closed(graph.edge_count());
        for line in text.lines().filter(|l| !l.trim().is_empty()) {
            let mut pts = line.trim().split(';');
            let parse = |s: Option<&str>| -> Result<Vertex> {
                let s = s.ok_or_else(|| Error::config("malformed edge line"))?;
                let mut it = s.split(',');
                let x: f64 = it
                    .next()
                    .and_then(|t| t.parse().ok())
                    .ok_or_else(|| Error::config("malformed coordinate"))?;
                let y: f64 = it
                    .next()
                    .and_then(|t| t.parse().ok())
                    .ok_or_else(|| Error::config("malformed coordinate"))?;
                Ok(Vertex {
                    x: (2.0 * x).round() as i64,
                    y: (2.0 * y).round() as i64,
                })
            };
            let e = Edge::new(parse(pts.next())?, parse(pts.next())?);
            let id = graph
                .edge_id(e)
                .ok_or_else(|| Error::config(format!("edge {e:?} not in graph")))?;
            cfg.set(id, true);
        }
        Ok(cfg)
    }
}

/// Cluster weight and per-edge weights aligned with a graph's edge order.
#[derive(Debug, Clone)]
pub struct WeightProfile {
    pub q: f64,
    weights: Vec<f64>,
}

impl WeightProfile {
    pub fn from_fn(graph: &Graph, q: f64, mut f: impl FnMut(&Edge) -> f64) -> Result<Self> {
        if !(q >= 1.0) {
            return Err(Error::config(format!("cluster weight q must be >= 1, got {q}")));
        }
        let weights: Vec<f64> = graph.edges().iter().map(|e| f(e)).collect();
        if let Some(w) = weights.iter().find(|w| !(**w >= 0.0)) {
            return Err(Error::config(format!("edge weights must be >= 0, got {w}")));
        }
        Ok(WeightProfile { q, weights })
    }

    pub fn uniform(graph: &Graph, q: f64, w: f64) -> Result<Self> {
        Self::from_fn(graph, q, |_| w)
    }

    /// Uniform weight `e^beta - 1`.
    pub fn from_beta(graph: &Graph, q: f64, beta: f64) -> Result<Self> {
        Self::from_fn(graph, q, |_| beta.exp_m1())
    }

    /// Wall profile: weight `e^beta - 1` on edges inside the upper half
    /// plane, `a` on edges with an endpoint of negative height.
    pub fn wall(graph: &Graph, q: f64, beta: f64, a: f64) -> Result<Self> {
        let w = beta.exp_m1();
        Self::from_fn(graph, q, |e| if e.touches_lower_half() { a } else { w })
    }

    /// Line-coupling profile: `e^{J beta} - 1` on the wall line,
    /// `e^{J' beta} - 1` on edges touching the lower half, `e^beta - 1`
    /// elsewhere.
    pub fn line_couplings(graph: &Graph, q: f64, beta: f64, j_line: f64, j_lower: f64) -> Result<Self> {
        Self::from_fn(graph, q, |e| {
            if e.touches_lower_half() {
                (j_lower * beta).exp_m1()
            } else if e.on_wall_line() {
                (j_line * beta).exp_m1()
            } else {
                beta.exp_m1()
            }
        })
    }

    pub fn weight(&self, edge: usize) -> f64 {
        self.weights[edge]
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }
}

/// Partition of boundary vertices into pre-wired blocks. `free()` = none.
#[derive(Debug, Clone, Default)]
pub struct BoundaryWiring {
    blocks: Vec<Vec<Vertex>>,
}

impl BoundaryWiring {
    pub fn free() -> Self {
        BoundaryWiring { blocks: Vec::new() }
    }

    pub fn new(blocks: Vec<Vec<Vertex>>) -> Result<Self> {
        let mut seen = std::collections::HashSet::new();
        for b in blocks.iter().flatten() {
            if !seen.insert(*b) {
                return Err(Error::config(format!("wiring blocks are not disjoint at {b:?}")));
            }
        }
        Ok(BoundaryWiring { blocks })
    }

    pub fn is_free(&self) -> bool {
        self.blocks.is_empty()
    }

    /// Union-find over the graph's vertices with the blocks pre-merged.
    fn seed_union_find(&self, graph: &Graph) -> Result<UnionFind> {
        let mut uf = UnionFind::new(graph.vertex_count());
        for block in &self.blocks {
            let mut ids = block.iter().map(|&v| {
                graph
                    .vertex_id(v)
                    .ok_or_else(|| Error::config(format!("wired vertex {v:?} not in graph")))
            });
            if let Some(first) = ids.next() {
                let first = first?;
                for id in ids {
                    uf.union(first, id?);
                }
            }
        }
        Ok(uf)
    }
}

/// Dual inverse temperature: `(e^beta - 1)(e^{beta*} - 1) = q`.
pub fn dual_beta(beta: f64, q: f64) -> f64 {
    (q / beta.exp_m1()).ln_1p()
}

/// Full probability table of the random-cluster measure on a small graph.
#[derive(Debug, Clone)]
pub struct ExactMeasure {
    probs: Vec<f64>,
    edges: usize,
}

/// Unnormalised configuration weights `prod w_e * q^kappa`, indexed by the
/// open-edge bitmask over the canonical edge order.
pub fn unnormalized_weights(
    graph: &Graph,
    w: &WeightProfile,
    wiring: &BoundaryWiring,
) -> Result<Vec<f64>> {
    let m = graph.edge_count();
    if m > MAX_ENUM_EDGES {
        return Err(Error::TooLarge {
            edges: m,
            limit: MAX_ENUM_EDGES,
        });
    }
    let template = wiring.seed_union_find(graph)?;
    let mut uf = template.clone();
    let ends: Vec<(usize, usize)> = (0..m).map(|e| graph.endpoints_ids(e)).collect();
    let mut out = Vec::with_capacity(1usize << m);
    for mask in 0..(1u64 << m) {
        uf.reset_from(&template);
        let mut w_prod = 1.0;
        for e in 0..m {
            if mask >> e & 1 == 1 {
                w_prod *= w.weight(e);
                uf.union(ends[e].0, ends[e].1);
            }
        }
        let weight = if w_prod == 0.0 {
            0.0
        } else {
            w_prod * w.q.powi(uf.count() as i32)
        };
        out.push(weight);
    }
    Ok(out)
}

/// Exact measure by full enumeration; graphs up to [`MAX_ENUM_EDGES`] edges.
pub fn exact_measure(graph: &Graph, w: &WeightProfile, wiring: &BoundaryWiring) -> Result<ExactMeasure> {
    let mut probs = unnormalized_weights(graph, w, wiring)?;
    let total: f64 = probs.iter().sum();
    if !(total > 0.0) {
        return Err(Error::Internal("partition function vanished".into()));
    }
    for p in &mut probs {
        *p /= total;
    }
    Ok(ExactMeasure {
        probs,
        edges: graph.edge_count(),
    })
}

impl ExactMeasure {
    pub fn edge_count(&self) -> usize {
        self.edges
    }

    pub fn prob(&self, mask: u64) -> f64 {
        self.probs[mask as usize]
    }

    pub fn probs(&self) -> &[f64] {
        &self.probs
    }

    /// Marginal probability that `edge` is open.
    pub fn edge_marginal(&self, edge: usize) -> f64 {
        self.probs
            .iter()
            .enumerate()
            .filter(|(mask, _)| *mask as u64 >> edge & 1 == 1)
            .map(|(_, p)| p)
            .sum()
    }

    /// Conditioned measure on `{mask : event(mask)}`.
    pub fn conditioned(&self, event: impl Fn(u64) -> bool) -> Result<ExactMeasure> {
        let mut probs = self.probs.clone();
        let mut total = 0.0;
        for (mask, p) in probs.iter_mut().enumerate() {
            if event(mask as u64) {
                total += *p;
            } else {
                *p = 0.0;
            }
        }
        if !(total > 0.0) {
            return Err(Error::ZeroProbability("conditioning event".into()));
        }
        for p in &mut probs {
            *p /= total;
        }
        Ok(ExactMeasure {
            probs,
            edges: self.edges,
        })
    }

    /// Total variation distance to another measure on the same edge set.
    pub fn total_variation(&self, other: &ExactMeasure) -> f64 {
        assert_eq!(self.probs.len(), other.probs.len());
        0.5 * self
            .probs
            .iter()
            .zip(&other.probs)
            .map(|(a, b)| (a - b).abs())
            .sum::<f64>()
    }

    /// Expectation of a bounded function of the configuration mask.
    pub fn expect(&self, f: impl Fn(u64) -> f64) -> f64 {
        self.probs
            .iter()
            .enumerate()
            .map(|(mask, p)| p * f(mask as u64))
            .sum()
    }
}

/// Open-path reachability (ignores boundary wiring).
pub fn connectivity(graph: &Graph, config: &BondConfig, u: Vertex, v: Vertex) -> bool {
    let (Some(su), Some(sv)) = (graph.vertex_id(u), graph.vertex_id(v)) else {
        return false;
    };
    connected_ids(graph, config, su, sv, usize::MAX)
}

fn connected_ids(graph: &Graph, config: &BondConfig, u: usize, v: usize, skip_edge: usize) -> bool {
    if u == v {
        return true;
    }
    let mut visited = vec![false; graph.vertex_count()];
    let mut stack = vec![u];
    visited[u] = true;
    while let Some(x) = stack.pop() {
        for &(e, to) in graph.adjacency(x) {
            if e != skip_edge && config.is_open(e) && !visited[to] {
                if to == v {
                    return true;
                }
                visited[to] = true;
                stack.push(to);
            }
        }
    }
    false
}

/// Component labels of the open subgraph (wiring-free).
pub fn open_components(graph: &Graph, config: &BondConfig) -> Vec<u32> {
    let n = graph.vertex_count();
    let mut comp = vec![u32::MAX; n];
    let mut stack = Vec::new();
    let mut next = 0;
    for s in 0..n {
        if comp[s] != u32::MAX {
            continue;
        }
        comp[s] = next;
        stack.push(s);
        while let Some(x) = stack.pop() {
            for &(e, to) in graph.adjacency(x) {
                if config.is_open(e) && comp[to] == u32::MAX {
                    comp[to] = next;
                    stack.push(to);
                }
            }
        }
        next += 1;
    }
    comp
}

/// Heat-bath conditional for a single edge: `w/(w+1)` if the endpoints are
/// connected off the edge (through open edges and the wiring), `w/(w+q)`
/// otherwise.
pub fn heat_bath_conditional(
    graph: &Graph,
    config: &BondConfig,
    edge: usize,
    w: &WeightProfile,
    wiring: &BoundaryWiring,
) -> Result<f64> {
    let we = w.weight(edge);
    let (a, b) = graph.endpoints_ids(edge);
    let joined = if wiring.is_free() {
        connected_ids(graph, config, a, b, edge)
    } else {
        // Wired blocks short-circuit connectivity; do a union-find pass.
        let mut uf = wiring.seed_union_find(graph)?;
        for e in 0..graph.edge_count() {
            if e != edge && config.is_open(e) {
                let (x, y) = graph.endpoints_ids(e);
                uf.union(x, y);
            }
        }
        uf.same(a, b)
    };
    Ok(if joined { we / (we + 1.0) } else { we / (we + w.q) })
}

/// Resamples one edge from its exact conditional law.
pub fn heat_bath_step(
    graph: &Graph,
    config: &mut BondConfig,
    edge: usize,
    w: &WeightProfile,
    wiring: &BoundaryWiring,
    rng: &mut impl Rng,
) -> Result<()> {
    let p = heat_bath_conditional(graph, config, edge, w, wiring)?;
    config.set(edge, rng.random::<f64>() < p);
    Ok(())
}

/// Systematic-scan heat-bath chain from the all-closed configuration.
pub fn sample_chain(
    graph: &Graph,
    w: &WeightProfile,
    wiring: &BoundaryWiring,
    sweeps: usize,
    rng: &mut impl Rng,
) -> Result<BondConfig> {
    if sweeps == 0 {
        return Err(Error::config("sweeps must be >= 1"));
    }
    let mut config = BondConfig::all_closed(graph.edge_count());
    let mut scratch = ChainScratch::new(graph, wiring)?;
    for _ in 0..sweeps {
        sweep_chain(graph, &mut config, w, &mut scratch, rng);
    }
    Ok(config)
}

/// Reusable buffers for repeated heat-bath sweeps.
pub struct ChainScratch {
    wired_template: Option<UnionFind>,
    uf: UnionFind,
    visited: Vec<u32>,
    epoch: u32,
    stack: Vec<usize>,
}

impl ChainScratch {
    pub fn new(graph: &Graph, wiring: &BoundaryWiring) -> Result<Self> {
        let wired_template = if wiring.is_free() {
            None
        } else {
            Some(wiring.seed_union_find(graph)?)
        };
        Ok(ChainScratch {
            uf: UnionFind::new(graph.vertex_count()),
            wired_template,
            visited: vec![0; graph.vertex_count()],
            epoch: 0,
            stack: Vec::new(),
        })
    }
}

/// One full systematic scan over the edges in canonical order.
pub fn sweep_chain(
    graph: &Graph,
    config: &mut BondConfig,
    w: &WeightProfile,
    scratch: &mut ChainScratch,
    rng: &mut impl Rng,
) {
    for edge in 0..graph.edge_count() {
        let we = w.weight(edge);
        let (a, b) = graph.endpoints_ids(edge);
        let joined = match &scratch.wired_template {
            None => {
                // Epoch-stamped BFS avoids clearing the visited array.
                scratch.epoch += 1;
                let epoch = scratch.epoch;
                scratch.visited[a] = epoch;
                scratch.stack.clear();
                scratch.stack.push(a);
                let mut found = a == b;
                'bfs: while let Some(x) = scratch.stack.pop() {
                    for &(e, to) in graph.adjacency(x) {
                        if e != edge && config.is_open(e) && scratch.visited[to] != epoch {
                            if to == b {
                                found = true;
                                break 'bfs;
                            }
                            scratch.visited[to] = epoch;
                            scratch.stack.push(to);
                        }
                    }
                }
                found
            }
            Some(template) => {
                scratch.uf.reset_from(template);
                for e in 0..graph.edge_count() {
                    if e != edge && config.is_open(e) {
                        let (x, y) = graph.endpoints_ids(e);
                        scratch.uf.union(x, y);
                    }
                }
                scratch.uf.same(a, b)
            }
        };
        let p = if joined { we / (we + 1.0) } else { we / (we + w.q) };
        config.set(edge, rng.random::<f64>() < p);
    }
}

/// Exactly the edges whose flip changes `1_{u <-> v}`.
///
/// On `{u <-> v}` these are the open bridges separating `u` from `v`
/// (found via a lowlink pass); off the event they are the closed edges
/// joining the two components. The brute-force flip definition is kept as a
/// test oracle.
pub fn pivotal_edges(graph: &Graph, config: &BondConfig, u: Vertex, v: Vertex) -> Vec<usize> {
    let (Some(su), Some(sv)) = (graph.vertex_id(u), graph.vertex_id(v)) else {
        return Vec::new();
    };
    let comp = open_components(graph, config);
    if comp[su] != comp[sv] {
        return (0..graph.edge_count())
            .filter(|&e| {
                if config.is_open(e) {
                    return false;
                }
                let (a, b) = graph.endpoints_ids(e);
                (comp[a] == comp[su] && comp[b] == comp[sv])
                    || (comp[a] == comp[sv] && comp[b] == comp[su])
            })
            .collect();
    }
    if su == sv {
        return Vec::new();
    }
    bridges_separating(graph, config, su, sv)
}

/// Open bridges on every path between `root` and `target`, via an iterative
/// DFS lowlink computation rooted at `root`.
fn bridges_separating(graph: &Graph, config: &BondConfig, root: usize, target: usize) -> Vec<usize> {
    const UNSET: u32 = u32::MAX;
    let n = graph.vertex_count();
    let mut tin = vec![UNSET; n];
    let mut tout = vec![UNSET; n];
    let mut low = vec![UNSET; n];
    let mut timer: u32 = 0;

    struct Frame {
        v: usize,
        parent_edge: usize,
        next: usize,
    }
    let mut out = Vec::new();
    let mut stack = vec![Frame {
        v: root,
        parent_edge: usize::MAX,
        next: 0,
    }];
    tin[root] = timer;
    low[root] = timer;
    timer += 1;

    while let Some(frame) = stack.last_mut() {
        let v = frame.v;
        if frame.next < graph.adjacency(v).len() {
            let (e, to) = graph.adjacency(v)[frame.next];
            frame.next += 1;
            if !config.is_open(e) || e == frame.parent_edge {
                continue;
            }
            if tin[to] == UNSET {
                tin[to] = timer;
                low[to] = timer;
                timer += 1;
                stack.push(Frame {
                    v: to,
                    parent_edge: e,
                    next: 0,
                });
            } else {
                low[v] = low[v].min(tin[to]);
            }
        } else {
            tout[v] = timer;
            timer += 1;
            let parent_edge = frame.parent_edge;
            stack.pop();
            if let Some(parent) = stack.last() {
                let pv = parent.v;
                low[pv] = low[pv].min(low[v]);
                if low[v] > tin[pv] {
                    // Tree edge (pv -> v) is a bridge; it separates the DFS
                    // subtree of v. It is pivotal iff the target sits inside
                    // that subtree (the root never does).
                    let inside =
                        tin[v] <= tin[target] && tout[target] != UNSET && tout[target] <= tout[v];
                    let inside = inside || target == v;
                    if inside {
                        out.push(parent_edge);
                    }
                }
            }
        }
    }
    out.sort_unstable();
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::lattice::HalfBox;
    use proptest::prelude::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha12Rng;

    fn path_graph(len: i64) -> Graph {
        Graph::new(
            (0..len)
                .map(|i| Edge::new(Vertex::primal(i, 0), Vertex::primal(i + 1, 0)))
                .collect(),
        )
    }

    /// 2x2-cell box {0..2}^2: 9 vertices, 12 edges.
    fn box_2x2() -> Graph {
        let mut edges = Vec::new();
        for x in 0..=2i64 {
            for y in 0..=2i64 {
                if x < 2 {
                    edges.push(Edge::new(Vertex::primal(x, y), Vertex::primal(x + 1, y)));
                }
                if y < 2 {
                    edges.push(Edge::new(Vertex::primal(x, y), Vertex::primal(x, y + 1)));
                }
            }
        }
        Graph::new(edges)
    }

    #[test]
    fn dual_beta_examples() {
        // Self-dual points.
        assert!((dual_beta(3f64.ln(), 4.0) - 3f64.ln()).abs() < 1e-14);
        let bc2 = (1.0 + 2f64.sqrt()).ln();
        assert!((dual_beta(bc2, 2.0) - bc2).abs() < 1e-14);
        assert!((dual_beta(2f64.ln(), 1.0) - 2f64.ln()).abs() < 1e-14);
    }

    #[test]
    fn dual_beta_round_trip_grid() {
        for i in 1..=30 {
            let beta = 0.1 * i as f64;
            for q in [1.0, 1.5, 2.0, 3.0, 4.0] {
                let back = dual_beta(dual_beta(beta, q), q);
                assert!((back - beta).abs() < 1e-10, "beta={beta} q={q} back={back}");
            }
        }
    }

    #[test]
    fn exact_measure_single_edge() {
        let g = path_graph(1);
        for (w, q) in [(1.0, 2.0), (0.5, 1.0), (2.3, 3.5)] {
            let profile = WeightProfile::uniform(&g, q, w).unwrap();
            let m = exact_measure(&g, &profile, &BoundaryWiring::free()).unwrap();
            assert!((m.edge_marginal(0) - w / (w + q)).abs() < 1e-12);
        }
    }

    #[test]
    fn exact_measure_q1_is_bernoulli_product() {
        let g = box_2x2();
        let profile = WeightProfile::from_fn(&g, 1.0, |e| {
            let (a, _) = e.endpoints();
            if a.x == 0 {
                0.7
            } else {
                1.4
            }
        })
        .unwrap();
        let m = exact_measure(&g, &profile, &BoundaryWiring::free()).unwrap();
        for mask in 0..(1u64 << g.edge_count()) {
            let mut expected = 1.0;
            for e in 0..g.edge_count() {
                let w = profile.weight(e);
                let p = w / (1.0 + w);
                expected *= if mask >> e & 1 == 1 { p } else { 1.0 - p };
            }
            assert!((m.prob(mask) - expected).abs() < 1e-12);
        }
    }

    #[test]
    fn exact_measure_zero_weight_edge_closed() {
        let g = path_graph(2);
        let profile = WeightProfile::from_fn(&g, 2.0, |e| {
            if e.endpoints().0 == Vertex::primal(0, 0) {
                0.0
            } else {
                1.0
            }
        })
        .unwrap();
        let m = exact_measure(&g, &profile, &BoundaryWiring::free()).unwrap();
        assert!(m.edge_marginal(0) == 0.0);
    }

    #[test]
    fn exact_measure_probabilities_sum_to_one() {
        let g = box_2x2();
        let profile = WeightProfile::uniform(&g, 2.5, 0.8).unwrap();
        let m = exact_measure(&g, &profile, &BoundaryWiring::free()).unwrap();
        let total: f64 = m.probs().iter().sum();
        assert!((total - 1.0).abs() < 1e-12);
    }

    #[test]
    fn exact_measure_invariant_under_edge_relabeling() {
        // Same graph built from a shuffled edge list must give identical
        // probabilities per configuration (the canonical order fixes the
        // mask meaning).
        let edges: Vec<Edge> = box_2x2().edges().to_vec();
        let mut shuffled = edges.clone();
        shuffled.reverse();
        shuffled.swap(0, 5);
        let g1 = Graph::new(edges);
        let g2 = Graph::new(shuffled);
        let w1 = WeightProfile::uniform(&g1, 2.0, 1.3).unwrap();
        let w2 = WeightProfile::uniform(&g2, 2.0, 1.3).unwrap();
        let m1 = exact_measure(&g1, &w1, &BoundaryWiring::free()).unwrap();
        let m2 = exact_measure(&g2, &w2, &BoundaryWiring::free()).unwrap();
        assert_eq!(m1.probs(), m2.probs());
    }

    #[test]
    fn wiring_blocks_change_cluster_count() {
        // Single edge with both endpoints wired together: kappa is the same
        // whether open or closed, so P(open) = w/(w+1).
        let g = path_graph(1);
        let profile = WeightProfile::uniform(&g, 2.0, 1.0).unwrap();
        let wiring =
            BoundaryWiring::new(vec![vec![Vertex::primal(0, 0), Vertex::primal(1, 0)]]).unwrap();
        let m = exact_measure(&g, &profile, &wiring).unwrap();
        assert!((m.edge_marginal(0) - 0.5).abs() < 1e-12);
    }

    #[test]
    fn heat_bath_conditional_examples() {
        // Isolated endpoints, q=2, w=1 -> 1/3.
        let g = path_graph(1);
        let profile = WeightProfile::uniform(&g, 2.0, 1.0).unwrap();
        let cfg = BondConfig::all_closed(1);
        let p = heat_bath_conditional(&g, &cfg, 0, &profile, &BoundaryWiring::free()).unwrap();
        assert!((p - 1.0 / 3.0).abs() < 1e-12);

        // Endpoints joined by an open path around a 4-cycle -> w/(1+w).
        let square = Graph::new(vec![
            Edge::new(Vertex::primal(0, 0), Vertex::primal(1, 0)),
            Edge::new(Vertex::primal(1, 0), Vertex::primal(1, 1)),
            Edge::new(Vertex::primal(0, 1), Vertex::primal(1, 1)),
            Edge::new(Vertex::primal(0, 0), Vertex::primal(0, 1)),
        ]);
        let wp = WeightProfile::uniform(&square, 3.0, 1.7).unwrap();
        let mut cfg = BondConfig::all_open(4);
        let e = square
            .edge_id(Edge::new(Vertex::primal(0, 0), Vertex::primal(1, 0)))
            .unwrap();
        cfg.set(e, false);
        let p = heat_bath_conditional(&square, &cfg, e, &wp, &BoundaryWiring::free()).unwrap();
        assert!((p - 1.7 / 2.7).abs() < 1e-12);

        // Cross-check against the exact conditional from enumeration.
        let m = exact_measure(&square, &wp, &BoundaryWiring::free()).unwrap();
        let rest = cfg.mask() & !(1 << e);
        let open_mask = rest | 1 << e;
        let exact = m.prob(open_mask) / (m.prob(open_mask) + m.prob(rest));
        assert!((p - exact).abs() < 1e-12);

        // Zero weight -> always closed.
        let wp0 = WeightProfile::uniform(&square, 3.0, 0.0).unwrap();
        let p0 = heat_bath_conditional(&square, &cfg, e, &wp0, &BoundaryWiring::free()).unwrap();
        assert_eq!(p0, 0.0);
    }

    #[test]
    fn connectivity_examples() {
        let hb = HalfBox::symmetric(2);
        let g = Graph::new(hb.edges());
        let all_open = BondConfig::all_open(g.edge_count());
        let all_closed = BondConfig::all_closed(g.edge_count());
        let (u, v) = (Vertex::primal(-2, 0), Vertex::primal(2, 2));
        assert!(connectivity(&g, &all_open, u, v));
        assert!(!connectivity(&g, &all_closed, u, v));
        assert!(connectivity(&g, &all_closed, u, u));
    }

    /// Brute-force pivotality oracle: flip each edge and compare indicators.
    fn pivotal_brute(graph: &Graph, config: &BondConfig, u: Vertex, v: Vertex) -> Vec<usize> {
        let before = connectivity(graph, config, u, v);
        (0..graph.edge_count())
            .filter(|&e| {
                let mut flipped = config.clone();
                flipped.flip(e);
                connectivity(graph, &flipped, u, v) != before
            })
            .collect()
    }

    #[test]
    fn pivotal_examples() {
        // Single open path: every edge pivotal.
        let g = path_graph(4);
        let cfg = BondConfig::all_open(4);
        let (u, v) = (Vertex::primal(0, 0), Vertex::primal(4, 0));
        assert_eq!(pivotal_edges(&g, &cfg, u, v), vec![0, 1, 2, 3]);

        // Two disjoint open paths: nothing pivotal.
        let ladder = Graph::new(vec![
            Edge::new(Vertex::primal(0, 0), Vertex::primal(1, 0)),
            Edge::new(Vertex::primal(0, 0), Vertex::primal(0, 1)),
            Edge::new(Vertex::primal(0, 1), Vertex::primal(1, 1)),
            Edge::new(Vertex::primal(1, 0), Vertex::primal(1, 1)),
        ]);
        let cfg = BondConfig::all_open(4);
        assert!(pivotal_edges(&ladder, &cfg, Vertex::primal(0, 0), Vertex::primal(1, 0)).is_empty());

        // Disconnected with a single joining candidate.
        let g = path_graph(2);
        let mut cfg = BondConfig::all_open(2);
        cfg.set(1, false);
        let piv = pivotal_edges(&g, &cfg, Vertex::primal(0, 0), Vertex::primal(2, 0));
        assert_eq!(piv, vec![1]);
    }

    #[test]
    fn pivotal_matches_brute_force_on_random_configs() {
        let g = box_2x2();
        let mut rng = ChaCha12Rng::seed_from_u64(7);
        let (u, v) = (Vertex::primal(0, 0), Vertex::primal(2, 2));
        for _ in 0..500 {
            let mask: u64 = rng.random_range(0..1 << g.edge_count());
            let cfg = BondConfig::from_mask(mask, g.edge_count());
            assert_eq!(
                pivotal_edges(&g, &cfg, u, v),
                pivotal_brute(&g, &cfg, u, v),
                "mask {mask:b}"
            );
        }
    }

    #[test]
    fn chain_marginals_match_exact_measure_q1() {
        // q = 1: per-edge frequencies must match w/(1+w).
        let g = path_graph(3);
        let w = WeightProfile::uniform(&g, 1.0, 0.8).unwrap();
        let mut rng = ChaCha12Rng::seed_from_u64(11);
        let mut counts = vec![0u64; 3];
        let mut cfg = BondConfig::all_closed(3);
        let mut scratch = ChainScratch::new(&g, &BoundaryWiring::free()).unwrap();
        let n = 60_000;
        for _ in 0..n {
            sweep_chain(&g, &mut cfg, &w, &mut scratch, &mut rng);
            for e in 0..3 {
                counts[e] += cfg.is_open(e) as u64;
            }
        }
        for e in 0..3 {
            let freq = counts[e] as f64 / n as f64;
            assert!((freq - 0.8 / 1.8).abs() < 0.01, "edge {e}: {freq}");
        }
    }

    #[test]
    fn chain_full_law_close_to_exact() {
        // Heat-bath convergence on a 7-edge box: empirical configuration law
        // within 0.02 TV of the exact measure.
        let hb = HalfBox::new(-1, 1, 1).unwrap();
        let g = Graph::new(hb.edges());
        let w = WeightProfile::uniform(&g, 2.0, 1.2).unwrap();
        let exact = exact_measure(&g, &w, &BoundaryWiring::free()).unwrap();
        let mut rng = ChaCha12Rng::seed_from_u64(3);
        let mut cfg = BondConfig::all_closed(g.edge_count());
        let mut scratch = ChainScratch::new(&g, &BoundaryWiring::free()).unwrap();
        let mut counts = vec![0u64; 1 << g.edge_count()];
        let burn = 1000;
        let n = 400_000;
        for _ in 0..burn {
            sweep_chain(&g, &mut cfg, &w, &mut scratch, &mut rng);
        }
        for _ in 0..n {
            sweep_chain(&g, &mut cfg, &w, &mut scratch, &mut rng);
            counts[cfg.mask() as usize] += 1;
        }
        let tv: f64 = counts
            .iter()
            .enumerate()
            .map(|(mask, &c)| (c as f64 / n as f64 - exact.prob(mask as u64)).abs())
            .sum::<f64>()
            / 2.0;
        assert!(tv < 0.02, "tv = {tv}");
    }

    #[test]
    fn chain_zero_weight_wall_edges_stay_closed() {
        let g = Graph::new(crate::lattice::build_geometry(4, 0.05)
            .map(|g| g.full_box_edges())
            .unwrap_or_else(|_| HalfBox::symmetric(4).edges()));
        // Wall profile with a = 0 on the lower half.
        let w = WeightProfile::wall(&g, 2.0, 0.6, 0.0).unwrap();
        let mut rng = ChaCha12Rng::seed_from_u64(5);
        // Small graph guard: skip if too large for the chain test budget.
        let cfg = {
            let mut cfg = BondConfig::all_closed(g.edge_count());
            let mut scratch = ChainScratch::new(&g, &BoundaryWiring::free()).unwrap();
            for _ in 0..20 {
                sweep_chain(&g, &mut cfg, &w, &mut scratch, &mut rng);
            }
            cfg
        };
        for (i, e) in g.edges().iter().enumerate() {
            if e.touches_lower_half() {
                assert!(!cfg.is_open(i));
            }
        }
    }

    #[test]
    fn fkg_spot_check_on_2x2_box() {
        // P(A and B) >= P(A) P(B) for single-edge-open events, q = 2.
        let g = box_2x2();
        let w = WeightProfile::from_beta(&g, 2.0, 0.9).unwrap();
        let m = exact_measure(&g, &w, &BoundaryWiring::free()).unwrap();
        let marg: Vec<f64> = (0..g.edge_count()).map(|e| m.edge_marginal(e)).collect();
        for a in 0..g.edge_count() {
            for b in 0..g.edge_count() {
                let joint = m.expect(|mask| ((mask >> a & 1) & (mask >> b & 1)) as f64);
                assert!(
                    joint >= marg[a] * marg[b] - 1e-12,
                    "edges {a},{b}: {joint} < {}",
                    marg[a] * marg[b]
                );
            }
        }
    }

    #[test]
    fn bond_config_bits_round_trip() {
        let cfg = BondConfig::from_mask(0b1011001, 7);
        let bits = cfg.to_bits();
        assert_eq!(BondConfig::from_bits(&bits, 7).unwrap(), cfg);
        let g = Graph::new(HalfBox::new(-1, 1, 1).unwrap().edges());
        let cfg = BondConfig::from_mask(0b0110011, g.edge_count());
        let text = cfg.to_edge_list_text(&g);
        assert_eq!(BondConfig::from_edge_list_text(&g, &text).unwrap(), cfg);
    }

    proptest! {
        #[test]
        fn prop_flipping_non_pivotal_preserves_event(mask in 0u64..4096) {
            let g = box_2x2();
            let cfg = BondConfig::from_mask(mask, g.edge_count());
            let (u, v) = (Vertex::primal(0, 0), Vertex::primal(2, 1));
            let piv = pivotal_edges(&g, &cfg, u, v);
            let before = connectivity(&g, &cfg, u, v);
            for e in 0..g.edge_count() {
                if !piv.contains(&e) {
                    let mut f = cfg.clone();
                    f.flip(e);
                    prop_assert_eq!(connectivity(&g, &f, u, v), before);
                }
            }
        }

        #[test]
        fn prop_bits_round_trip(mask in 0u64..(1 << 17), edges in 1usize..17) {
            let mask = mask & ((1 << edges) - 1);
            let cfg = BondConfig::from_mask(mask, edges);
            prop_assert_eq!(BondConfig::from_bits(&cfg.to_bits(), edges).unwrap(), cfg);
        }
    }
}
