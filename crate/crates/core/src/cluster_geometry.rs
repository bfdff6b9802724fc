//! Geometry of the sampled interface cluster: extraction, column envelopes
//! with diffusive rescaling, cone points, the irreducible decomposition into
//! cone-separated pieces, and the repulsion/regularity statistics.

use std::collections::HashMap;
use std::collections::HashSet;

use crate::effective_walk::StepLaw;
use crate::error::{Error, Result};
use crate::lattice::{in_double_cone, Cone, Edge, Geometry, HalfBox, Vertex};
use crate::random_cluster::{BondConfig, Graph};

/// Common open cluster of the two marked corners, as a subgraph.
#[derive(Debug, Clone)]
pub struct Cluster {
    pub half_box: HalfBox,
    /// Sorted lexicographically.
    pub vertices: Vec<Vertex>,
    /// Sorted canonically.
    pub edges: Vec<Edge>,
}

impl Cluster {
    /// Builds a cluster from explicit parts (synthetic inputs in tests).
    pub fn from_parts(half_box: HalfBox, mut vertices: Vec<Vertex>, mut edges: Vec<Edge>) -> Self {
        vertices.sort();
        vertices.dedup();
        edges.sort();
        edges.dedup();
        Cluster {
            half_box,
            vertices,
            edges,
        }
    }

    pub fn contains(&self, v: Vertex) -> bool {
        self.vertices.binary_search(&v).is_ok()
    }

    /// Box scale `N` used for diffusive rescaling (half the horizontal span).
    pub fn scale(&self) -> f64 {
        (self.half_box.x_max - self.half_box.x_min) as f64 / 2.0
    }
}

/// Breadth-first closure of `v_L` over open edges; fails unless it reaches
/// `v_R`.
pub fn extract_cluster(graph: &Graph, config: &BondConfig, half_box: HalfBox) -> Result<Cluster> {
    let v_l = half_box.v_l();
    let v_r = half_box.v_r();
    let start = graph
        .vertex_id(v_l)
        .ok_or_else(|| Error::config("v_L is not a vertex of the graph"))?;
    let mut visited = vec![false; graph.vertex_count()];
    let mut stack = vec![start];
    visited[start] = true;
    while let Some(x) = stack.pop() {
        for &(e, to) in graph.adjacency(x) {
            if config.is_open(e) && !visited[to] {
                visited[to] = true;
                stack.push(to);
            }
        }
    }
    let target = graph
        .vertex_id(v_r)
        .ok_or_else(|| Error::config("v_R is not a vertex of the graph"))?;
    if !visited[target] {
        return Err(Error::config("v_L and v_R are not connected"));
    }
    let vertices: Vec<Vertex> = graph
        .vertices()
        .iter()
        .enumerate()
        .filter(|(i, _)| visited[*i])
        .map(|(_, &v)| v)
        .collect();
    let edges: Vec<Edge> = graph
        .edges()
        .iter()
        .enumerate()
        .filter(|(i, e)| {
            config.is_open(*i) && {
                let (a, _) = e.endpoints();
                visited[graph.vertex_id(a).unwrap()]
            }
        })
        .map(|(_, &e)| e)
        .collect();
    Ok(Cluster::from_parts(half_box, vertices, edges))
}

/// Column-wise upper and lower vertex boundaries and their rescaled forms.
#[derive(Debug, Clone)]
pub struct Envelopes {
    pub x_min: i64,
    /// `upper[k]`, `lower[k]` are the extreme heights in column `x_min + k`.
    pub upper: Vec<i64>,
    pub lower: Vec<i64>,
    scale: f64,
}

impl Envelopes {
    fn index(&self, t: f64) -> usize {
        let columns = self.upper.len() as i64;
        let idx = (2.0 * self.scale * t).floor() as i64;
        idx.clamp(0, columns - 1) as usize
    }

    /// Rescaled upper envelope at `t in [0,1]`: column `-N + floor(2Nt)`
    /// divided by `sqrt(N)` (the `t = 1` index is clamped to `N`).
    pub fn hat_plus(&self, t: f64) -> f64 {
        self.upper[self.index(t)] as f64 / self.scale.sqrt()
    }

    pub fn hat_minus(&self, t: f64) -> f64 {
        self.lower[self.index(t)] as f64 / self.scale.sqrt()
    }

    /// `sup_t |hat_plus(t) - hat_minus(t)|`.
    pub fn sup_gap_rescaled(&self) -> f64 {
        self.upper
            .iter()
            .zip(&self.lower)
            .map(|(&u, &l)| (u - l) as f64)
            .fold(0.0, f64::max)
            / self.scale.sqrt()
    }
}

/// Exact column maxima/minima over every column of the box.
pub fn envelopes(cluster: &Cluster) -> Result<Envelopes> {
    let (x_min, x_max) = (cluster.half_box.x_min, cluster.half_box.x_max);
    let columns = (x_max - x_min + 1) as usize;
    let mut upper = vec![i64::MIN; columns];
    let mut lower = vec![i64::MAX; columns];
    for v in &cluster.vertices {
        let (x, y) = v.primal_coords();
        let k = (x - x_min) as usize;
        upper[k] = upper[k].max(y);
        lower[k] = lower[k].min(y);
    }
    if upper.iter().any(|&u| u == i64::MIN) {
        return Err(Error::Internal(
            "empty envelope column; cluster does not span the box".into(),
        ));
    }
    Ok(Envelopes {
        x_min,
        upper,
        lower,
        scale: cluster.scale(),
    })
}

/// Cone points of an arbitrary finite vertex set: vertices `v` with the
/// whole set inside `v + (forward cone u backward cone)`, sorted by first
/// coordinate.
///
/// Only singleton columns can qualify (any other vertex of the same column
/// fails the test), and within each other column it is enough to test the
/// two extreme heights, so the scan is quadratic in the number of columns
/// rather than in the number of vertices.
pub fn cone_points_of(vertices: &[Vertex]) -> Vec<Vertex> {
    if vertices.is_empty() {
        return Vec::new();
    }
    let xs: Vec<i64> = vertices.iter().map(|v| v.x).collect();
    let (x_min, x_max) = (
        *xs.iter().min().unwrap(),
        *xs.iter().max().unwrap(),
    );
    let columns = ((x_max - x_min) / 2 + 1) as usize;
    let mut extremes: Vec<Option<(i64, i64)>> = vec![None; columns];
    for v in vertices {
        let k = ((v.x - x_min) / 2) as usize;
        let e = extremes[k].get_or_insert((v.y, v.y));
        e.0 = e.0.min(v.y);
        e.1 = e.1.max(v.y);
    }
    let mut out = Vec::new();
    'cols: for (k, e) in extremes.iter().enumerate() {
        let Some((lo, hi)) = *e else { continue };
        if lo != hi {
            continue;
        }
        let apex = Vertex {
            x: x_min + 2 * k as i64,
            y: lo,
        };
        for (j, other) in extremes.iter().enumerate() {
            let Some((olo, ohi)) = *other else { continue };
            if !in_double_cone(apex, Vertex { x: x_min + 2 * j as i64, y: olo })
                || !in_double_cone(apex, Vertex { x: x_min + 2 * j as i64, y: ohi })
            {
                continue 'cols;
            }
        }
        out.push(apex);
    }
    out
}

/// Cone points of a cluster.
pub fn cone_points(cluster: &Cluster) -> Vec<Vertex> {
    cone_points_of(&cluster.vertices)
}

/// One piece of the decomposition: a subgraph with its left anchor (the
/// marked vertex) and right anchor (the backward cone apex).
#[derive(Debug, Clone)]
pub struct Piece {
    pub vertices: Vec<Vertex>,
    pub edges: Vec<Edge>,
    pub mark: Vertex,
    pub end: Vertex,
}

impl Piece {
    /// Displacement `X = (theta, zeta)` in primal units.
    pub fn displacement(&self) -> (i64, i64) {
        ((self.end.x - self.mark.x) / 2, (self.end.y - self.mark.y) / 2)
    }

    /// Euclidean diameter of the vertex set, via the convex hull.
    pub fn diameter(&self) -> f64 {
        diameter_of(&self.vertices)
    }

    fn translated(&self, dx: i64, dy: i64) -> (Vec<Vertex>, Vec<Edge>) {
        let vs = self.vertices.iter().map(|v| v.translate(dx, dy)).collect();
        let es = self
            .edges
            .iter()
            .map(|e| {
                let (a, b) = e.endpoints();
                Edge::new(a.translate(dx, dy), b.translate(dx, dy))
            })
            .collect();
        (vs, es)
    }
}

/// Irreducible decomposition of a cluster at its cone points.
#[derive(Debug, Clone)]
pub struct Decomposition {
    pub gamma_l: Piece,
    pub interior: Vec<Piece>,
    pub gamma_r: Piece,
    pub cone_points: Vec<Vertex>,
    /// Fewer than two cone points: the whole cluster is one piece.
    pub degenerate: bool,
}

impl Decomposition {
    /// Displacements of every piece in order, primal units.
    pub fn displacements(&self) -> Vec<(i64, i64)> {
        let mut out = vec![self.gamma_l.displacement()];
        out.extend(self.interior.iter().map(|p| p.displacement()));
        out.push(self.gamma_r.displacement());
        out
    }

    pub fn interior_displacements(&self) -> Vec<(i64, i64)> {
        self.interior.iter().map(|p| p.displacement()).collect()
    }

    /// Concatenates the pieces (each translated so its mark sits at the
    /// running displacement) and returns the resulting vertex/edge sets.
    pub fn concatenated(&self) -> (Vec<Vertex>, Vec<Edge>) {
        let mut vs: HashSet<Vertex> = HashSet::new();
        let mut es: HashSet<Edge> = HashSet::new();
        let mut anchor = self.gamma_l.mark;
        for piece in std::iter::once(&self.gamma_l)
            .chain(&self.interior)
            .chain(std::iter::once(&self.gamma_r))
        {
            let (dx, dy) = (anchor.x - piece.mark.x, anchor.y - piece.mark.y);
            let (pv, pe) = piece.translated(dx, dy);
            vs.extend(pv);
            es.extend(pe);
            anchor = piece.end.translate(dx, dy);
        }
        let mut vs: Vec<Vertex> = vs.into_iter().collect();
        let mut es: Vec<Edge> = es.into_iter().collect();
        vs.sort();
        es.sort();
        (vs, es)
    }

    /// Exact reconstruction check against the source cluster.
    pub fn reconstructs(&self, cluster: &Cluster) -> bool {
        let (vs, es) = self.concatenated();
        vs == cluster.vertices && es == cluster.edges
    }

    /// Diamond confinement and irreducibility of every interior piece.
    pub fn pieces_confined_and_irreducible(&self) -> bool {
        self.interior.iter().all(|p| {
            let fwd = Cone::forward(p.mark);
            let bwd = Cone::backward(p.end);
            let confined = p
                .vertices
                .iter()
                .all(|&v| fwd.contains(v) && bwd.contains(v));
            let cps = cone_points_of(&p.vertices);
            let irreducible = if p.mark == p.end {
                cps == vec![p.mark]
            } else {
                cps == vec![p.mark, p.end]
            };
            confined && irreducible
        })
    }

    /// Piece-list text: one `theta zeta vertex_count` line per piece.
    pub fn to_piece_list_text(&self) -> String {
        let mut s = String::new();
        for piece in std::iter::once(&self.gamma_l)
            .chain(&self.interior)
            .chain(std::iter::once(&self.gamma_r))
        {
            let (theta, zeta) = piece.displacement();
            s.push_str(&format!("{theta} {zeta} {}\n", piece.vertices.len()));
        }
        s
    }
}

fn slab_piece(cluster: &Cluster, lo_x: i64, hi_x: i64, mark: Vertex, end: Vertex) -> Piece {
    let vertices: Vec<Vertex> = cluster
        .vertices
        .iter()
        .filter(|v| lo_x <= v.x && v.x <= hi_x)
        .copied()
        .collect();
    let edges: Vec<Edge> = cluster
        .edges
        .iter()
        .filter(|e| {
            let (a, b) = e.endpoints();
            lo_x <= a.x && b.x <= hi_x && a.x <= hi_x && lo_x <= b.x
        })
        .copied()
        .collect();
    Piece {
        vertices,
        edges,
        mark,
        end,
    }
}

/// Splits the cluster at every cone point. Pieces between consecutive cone
/// points are automatically irreducible: a cone point of an interior piece
/// is a cone point of the whole cluster, because the remaining pieces lie
/// inside the cones attached at the splitting vertices.
pub fn irreducible_decomposition(cluster: &Cluster) -> Decomposition {
    let v_l = cluster.half_box.v_l();
    let v_r = cluster.half_box.v_r();
    let cps = cone_points(cluster);
    let span = (cluster.half_box.x_min, cluster.half_box.x_max);
    if cps.len() < 2 {
        let whole = slab_piece(cluster, 2 * span.0, 2 * span.1, v_l, v_r);
        let trivial = Piece {
            vertices: vec![v_r],
            edges: Vec::new(),
            mark: v_r,
            end: v_r,
        };
        return Decomposition {
            gamma_l: whole,
            interior: Vec::new(),
            gamma_r: trivial,
            cone_points: cps,
            degenerate: true,
        };
    }
    let first = cps[0];
    let last = *cps.last().unwrap();
    let gamma_l = slab_piece(cluster, 2 * span.0, first.x, v_l, first);
    let gamma_r = slab_piece(cluster, last.x, 2 * span.1, last, v_r);
    let interior = cps
        .windows(2)
        .map(|w| slab_piece(cluster, w[0].x, w[1].x, w[0], w[1]))
        .collect();
    Decomposition {
        gamma_l,
        interior,
        gamma_r,
        cone_points: cps,
        degenerate: false,
    }
}

/// Euclidean diameter of a vertex set (convex hull + pairwise scan).
pub fn diameter_of(vertices: &[Vertex]) -> f64 {
    if vertices.len() <= 1 {
        return 0.0;
    }
    let mut pts: Vec<(i64, i64)> = vertices.iter().map(|v| (v.x, v.y)).collect();
    pts.sort();
    pts.dedup();
    let hull = convex_hull(&pts);
    let mut best = 0i64;
    for i in 0..hull.len() {
        for j in i + 1..hull.len() {
            let dx = hull[i].0 - hull[j].0;
            let dy = hull[i].1 - hull[j].1;
            best = best.max(dx * dx + dy * dy);
        }
    }
    (best as f64).sqrt() / 2.0
}

fn convex_hull(sorted: &[(i64, i64)]) -> Vec<(i64, i64)> {
    let cross = |o: (i64, i64), a: (i64, i64), b: (i64, i64)| {
        (a.0 - o.0) * (b.1 - o.1) - (a.1 - o.1) * (b.0 - o.0)
    };
    if sorted.len() < 3 {
        return sorted.to_vec();
    }
    let mut hull: Vec<(i64, i64)> = Vec::with_capacity(2 * sorted.len());
    for &p in sorted.iter().chain(sorted.iter().rev().skip(1)) {
        while hull.len() >= 2 && cross(hull[hull.len() - 2], hull[hull.len() - 1], p) <= 0 {
            hull.pop();
        }
        hull.push(p);
    }
    hull.pop();
    hull
}

/// Regularity statistics of one sampled cluster.
#[derive(Debug, Clone)]
pub struct RegularityReport {
    pub cone_count: usize,
    /// `cone_count / 2N`.
    pub cone_density: f64,
    /// Largest horizontal gap between consecutive cone points (primal
    /// units); the full span when fewer than two cone points exist.
    pub max_gap: i64,
    /// Hausdorff distance from the cluster's vertex set to its cone points;
    /// infinite when there are none.
    pub hausdorff: f64,
    /// Largest Euclidean piece diameter in the decomposition.
    pub max_piece_diam: f64,
    /// Whether the cluster meets the repulsion rectangle.
    pub touches_delta: bool,
    /// `sup_t |hat Gamma+(t) - hat Gamma-(t)|`.
    pub sup_envelope_gap: f64,
}

pub fn regularity_report(cluster: &Cluster, geometry: &Geometry) -> Result<RegularityReport> {
    let env = envelopes(cluster)?;
    let decomp = irreducible_decomposition(cluster);
    let cps = &decomp.cone_points;
    let max_gap = if cps.len() < 2 {
        cluster.half_box.x_max - cluster.half_box.x_min
    } else {
        cps.windows(2).map(|w| (w[1].x - w[0].x) / 2).max().unwrap()
    };
    let hausdorff = if cps.is_empty() {
        f64::INFINITY
    } else {
        cluster
            .vertices
            .iter()
            .map(|v| {
                cps.iter()
                    .map(|c| {
                        let (dx, dy) = (v.x - c.x, v.y - c.y);
                        (dx * dx + dy * dy) as f64
                    })
                    .fold(f64::INFINITY, f64::min)
            })
            .fold(0.0, f64::max)
            .sqrt()
            / 2.0
    };
    let max_piece_diam = std::iter::once(&decomp.gamma_l)
        .chain(&decomp.interior)
        .chain(std::iter::once(&decomp.gamma_r))
        .map(|p| p.diameter())
        .fold(0.0, f64::max);
    // Delta has integer corners and the cluster's segments have unit length,
    // so a segment meets the rectangle iff one of its endpoints does.
    let touches_delta = cluster
        .vertices
        .iter()
        .any(|&v| geometry.delta.contains_vertex(v));
    Ok(RegularityReport {
        cone_count: cps.len(),
        cone_density: cps.len() as f64 / (2.0 * cluster.scale()),
        max_gap,
        hausdorff,
        max_piece_diam,
        touches_delta,
        sup_envelope_gap: env.sup_gap_rescaled(),
    })
}

/// Effective step-law estimate from a batch of synthetic or measured
/// interior displacements, symmetrised in the vertical coordinate, together
/// with the diffusivity estimate `chi = Var(zeta) / E(theta)`.
pub fn step_law_from_displacements(disps: &[(i64, i64)]) -> Result<(StepLaw, f64)> {
    if disps.is_empty() {
        return Err(Error::config("empty displacement batch"));
    }
    let mut counts: HashMap<(i64, i64), f64> = HashMap::new();
    for &(theta, zeta) in disps {
        *counts.entry((theta, zeta)).or_insert(0.0) += 0.5;
        *counts.entry((theta, -zeta)).or_insert(0.0) += 0.5;
    }
    let total = disps.len() as f64;
    let support: Vec<((i64, i64), f64)> = counts
        .into_iter()
        .map(|(xy, c)| (xy, c / total))
        .collect();
    let law = StepLaw::validate(&support)?;
    let chi = law.chi();
    Ok((law, chi))
}

/// Histogram of interior-piece displacements over a batch of decompositions.
pub fn empirical_step_law(decomps: &[Decomposition]) -> Result<(StepLaw, f64)> {
    let disps: Vec<(i64, i64)> = decomps
        .iter()
        .flat_map(|d| d.interior_displacements())
        .collect();
    if disps.is_empty() {
        return Err(Error::config(
            "no interior pieces in the decomposition batch",
        ));
    }
    step_law_from_displacements(&disps)
}
