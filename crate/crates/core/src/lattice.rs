//! Integer-lattice geometry: boxes, duality, cones and the repulsion
//! rectangles shared by every other module.
//!
//! All coordinates are stored *doubled*: primal vertices have both
//! coordinates even, dual vertices both odd. Half-integer dual coordinates
//! thus become exact integers and every geometric test (duality, cone
//! membership) is pure integer arithmetic with no floating-point ties.

use crate::error::{Error, Result};

/// Lattice vertex in doubled coordinates (even/even = primal, odd/odd = dual).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Vertex {
    pub x: i64,
    pub y: i64,
}

impl Vertex {
    /// Primal vertex from undoubled integer coordinates.
    pub fn primal(x: i64, y: i64) -> Self {
        Vertex { x: 2 * x, y: 2 * y }
    }

    /// Dual vertex at `(x + 1/2, y + 1/2)` for integer `(x, y)`.
    pub fn dual(x: i64, y: i64) -> Self {
        Vertex {
            x: 2 * x + 1,
            y: 2 * y + 1,
        }
    }

    pub fn is_primal(&self) -> bool {
        self.x.rem_euclid(2) == 0 && self.y.rem_euclid(2) == 0
    }

    pub fn is_dual(&self) -> bool {
        self.x.rem_euclid(2) == 1 && self.y.rem_euclid(2) == 1
    }

    /// Undoubled coordinates of a primal vertex.
    pub fn primal_coords(&self) -> (i64, i64) {
        debug_assert!(self.is_primal());
        (self.x / 2, self.y / 2)
    }

    /// Position in the plane (halves of the doubled coordinates).
    pub fn to_point(&self) -> (f64, f64) {
        (self.x as f64 / 2.0, self.y as f64 / 2.0)
    }

    pub fn translate(&self, dx: i64, dy: i64) -> Vertex {
        Vertex {
            x: self.x + dx,
            y: self.y + dy,
        }
    }
}

/// Nearest-neighbour edge with lexicographically ordered endpoints.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Edge {
    a: Vertex,
    b: Vertex,
}

impl Edge {
    /// Canonicalises the endpoint order. Panics unless the endpoints are
    /// nearest neighbours of the same (primal or dual) lattice.
    pub fn new(u: Vertex, v: Vertex) -> Self {
        let (dx, dy) = ((u.x - v.x).abs(), (u.y - v.y).abs());
        assert!(
            (dx == 2 && dy == 0) || (dx == 0 && dy == 2),
            "not a nearest-neighbour pair: {u:?} {v:?}"
        );
        if u <= v {
            Edge { a: u, b: v }
        } else {
            Edge { a: v, b: u }
        }
    }

    pub fn endpoints(&self) -> (Vertex, Vertex) {
        (self.a, self.b)
    }

    pub fn is_horizontal(&self) -> bool {
        self.a.y == self.b.y
    }

    /// The unique edge of the other lattice crossing this one. Involution.
    pub fn dual_edge(&self) -> Edge {
        let mid = Vertex {
            x: (self.a.x + self.b.x) / 2,
            y: (self.a.y + self.b.y) / 2,
        };
        // Rotate the half-step direction by 90 degrees.
        let (hx, hy) = ((self.b.x - self.a.x) / 2, (self.b.y - self.a.y) / 2);
        let (px, py) = (-hy, hx);
        Edge::new(mid.translate(-px, -py), mid.translate(px, py))
    }

    /// True if the edge has at least one endpoint of strictly negative height.
    pub fn touches_lower_half(&self) -> bool {
        self.a.y < 0 || self.b.y < 0
    }

    /// True if both endpoints lie at height zero (the line of the wall).
    pub fn on_wall_line(&self) -> bool {
        self.a.y == 0 && self.b.y == 0
    }
}

/// Free-standing duality map, mirroring [`Edge::dual_edge`].
pub fn dual_edge(e: Edge) -> Edge {
    e.dual_edge()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ConeOrientation {
    /// Opens towards +x: `delta * d_x >= |d_y|`.
    Forward,
    /// Opens towards -x.
    Backward,
}

/// Cone with apex, orientation and rational aperture `delta = num/den > 0`.
#[derive(Debug, Clone, Copy)]
pub struct Cone {
    pub apex: Vertex,
    pub orientation: ConeOrientation,
    pub delta_num: i64,
    pub delta_den: i64,
}

impl Cone {
    pub fn forward(apex: Vertex) -> Self {
        Cone {
            apex,
            orientation: ConeOrientation::Forward,
            delta_num: 1,
            delta_den: 1,
        }
    }

    pub fn backward(apex: Vertex) -> Self {
        Cone {
            apex,
            orientation: ConeOrientation::Backward,
            delta_num: 1,
            delta_den: 1,
        }
    }

    pub fn with_aperture(mut self, num: i64, den: i64) -> Self {
        assert!(num > 0 && den > 0, "aperture must be positive");
        self.delta_num = num;
        self.delta_den = den;
        self
    }

    /// Exact membership test. The inequality is homogeneous, so it is
    /// indifferent to the doubled-coordinate convention.
    pub fn contains(&self, p: Vertex) -> bool {
        let dx = p.x - self.apex.x;
        let dy = (p.y - self.apex.y).abs();
        match self.orientation {
            ConeOrientation::Forward => self.delta_num * dx >= self.delta_den * dy,
            ConeOrientation::Backward => self.delta_num * (-dx) >= self.delta_den * dy,
        }
    }
}

/// Free-standing form of [`Cone::contains`].
pub fn cone_contains(cone: &Cone, p: Vertex) -> bool {
    cone.contains(p)
}

/// True if `p - apex` lies in the union of the forward and backward unit
/// cones, i.e. `|d_x| >= |d_y|`. This is the cone-point test.
pub fn in_double_cone(apex: Vertex, p: Vertex) -> bool {
    (p.x - apex.x).abs() >= (p.y - apex.y).abs()
}

/// Axis-aligned rectangle in undoubled (primal) coordinates, inclusive.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Rect {
    pub x_min: i64,
    pub x_max: i64,
    pub y_min: i64,
    pub y_max: i64,
}

impl Rect {
    pub fn is_empty(&self) -> bool {
        self.x_min > self.x_max || self.y_min > self.y_max
    }

    pub fn contains_vertex(&self, v: Vertex) -> bool {
        // Doubled comparison keeps dual vertices exact as well.
        2 * self.x_min <= v.x && v.x <= 2 * self.x_max && 2 * self.y_min <= v.y && v.y <= 2 * self.y_max
    }

    fn contains_rect(&self, other: &Rect) -> bool {
        self.x_min <= other.x_min
            && other.x_max <= self.x_max
            && self.y_min <= other.y_min
            && other.y_max <= self.y_max
    }
}

/// Upper half-box `{x_min..x_max} x {0..height}` with marked bottom corners.
///
/// The canonical box is symmetric (`x_min = -N`, `x_max = N`, `height = N`)
/// but small exact-enumeration tests also use other aspect ratios.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct HalfBox {
    pub x_min: i64,
    pub x_max: i64,
    pub height: i64,
}

impl HalfBox {
    pub fn new(x_min: i64, x_max: i64, height: i64) -> Result<Self> {
        if x_max <= x_min || height < 1 {
            return Err(Error::config(format!(
                "half box needs x_max > x_min and height >= 1, got [{x_min},{x_max}] x [0,{height}]"
            )));
        }
        Ok(HalfBox { x_min, x_max, height })
    }

    pub fn symmetric(n: i64) -> Self {
        HalfBox {
            x_min: -n,
            x_max: n,
            height: n,
        }
    }

    /// Left marked vertex `v_L`.
    pub fn v_l(&self) -> Vertex {
        Vertex::primal(self.x_min, 0)
    }

    /// Right marked vertex `v_R`.
    pub fn v_r(&self) -> Vertex {
        Vertex::primal(self.x_max, 0)
    }

    pub fn contains(&self, v: Vertex) -> bool {
        v.is_primal()
            && 2 * self.x_min <= v.x
            && v.x <= 2 * self.x_max
            && 0 <= v.y
            && v.y <= 2 * self.height
    }

    pub fn vertex_count(&self) -> usize {
        ((self.x_max - self.x_min + 1) * (self.height + 1)) as usize
    }

    pub fn vertices(&self) -> Vec<Vertex> {
        let mut out = Vec::with_capacity(self.vertex_count());
        for x in self.x_min..=self.x_max {
            for y in 0..=self.height {
                out.push(Vertex::primal(x, y));
            }
        }
        out
    }

    /// Nearest-neighbour edges with both endpoints in the box, in canonical
    /// lexicographic order.
    pub fn edges(&self) -> Vec<Edge> {
        let mut out = Vec::new();
        for x in self.x_min..=self.x_max {
            for y in 0..=self.height {
                let v = Vertex::primal(x, y);
                if x < self.x_max {
                    out.push(Edge::new(v, Vertex::primal(x + 1, y)));
                }
                if y < self.height {
                    out.push(Edge::new(v, Vertex::primal(x, y + 1)));
                }
            }
        }
        out.sort();
        out
    }

    /// Number of dual columns of the upper dual box.
    pub fn dual_cols(&self) -> usize {
        (self.x_max - self.x_min) as usize
    }

    /// Number of dual rows of the upper dual box (heights -1/2 .. height-1/2).
    pub fn dual_rows(&self) -> usize {
        (self.height + 1) as usize
    }

    /// Dual vertex of the upper dual box at `(col, row)`; row 0 sits at
    /// height -1/2.
    pub fn dual_vertex(&self, col: usize, row: usize) -> Vertex {
        Vertex {
            x: 2 * (self.x_min + col as i64) + 1,
            y: 2 * row as i64 - 1,
        }
    }

    /// Inverse of [`HalfBox::dual_vertex`]; `None` for vertices outside.
    pub fn dual_index(&self, v: Vertex) -> Option<(usize, usize)> {
        if !v.is_dual() {
            return None;
        }
        let col = (v.x - 1) / 2 - self.x_min;
        let row = (v.y + 1) / 2;
        if col < 0 || col >= self.dual_cols() as i64 || row < 0 || row >= self.dual_rows() as i64 {
            None
        } else {
            Some((col as usize, row as usize))
        }
    }
}

/// Full geometry of the wall problem at scale `N`: the half boxes, marked
/// vertices and the entropic-repulsion rectangles.
#[derive(Debug, Clone)]
pub struct Geometry {
    pub n: i64,
    pub eps: f64,
    pub upper: HalfBox,
    /// Repulsion rectangle `Delta(N, eps)`.
    pub delta: Rect,
    /// Doubled version `Delta~(N, eps)`.
    pub delta_tilde: Rect,
}

/// Builds the geometry at scale `N` with repulsion exponent `eps`.
///
/// Rectangle bounds take the floor of the real powers `N^{8 eps}`, `N^{eps}`.
pub fn build_geometry(n: i64, eps: f64) -> Result<Geometry> {
    if n < 4 {
        return Err(Error::config(format!("N must be >= 4, got {n}")));
    }
    if !(eps > 0.0 && eps < 0.125) {
        return Err(Error::config(format!("eps must lie in (0, 1/8), got {eps}")));
    }
    let nf = n as f64;
    let pow8 = nf.powf(8.0 * eps);
    if !(pow8 < nf / 4.0) {
        return Err(Error::config(format!(
            "N^(8 eps) = {pow8:.3} must be < N/4 = {:.3} for a proper Delta",
            nf / 4.0
        )));
    }
    let margin = (2.0 * pow8).floor() as i64;
    let margin_tilde = pow8.floor() as i64;
    let h = nf.powf(eps).floor() as i64;
    let h_tilde = (2.0 * nf.powf(eps)).floor() as i64;
    let delta = Rect {
        x_min: -n + margin,
        x_max: n - margin,
        y_min: 0,
        y_max: h,
    };
    let delta_tilde = Rect {
        x_min: -n + margin_tilde,
        x_max: n - margin_tilde,
        y_min: 0,
        y_max: h_tilde,
    };
    if delta.is_empty() {
        return Err(Error::config(format!("Delta(N={n}, eps={eps}) is empty")));
    }
    let upper = HalfBox::symmetric(n);
    let lambda_plus = Rect {
        x_min: -n,
        x_max: n,
        y_min: 0,
        y_max: n,
    };
    debug_assert!(lambda_plus.contains_rect(&delta_tilde) && delta_tilde.contains_rect(&delta));
    Ok(Geometry {
        n,
        eps,
        upper,
        delta,
        delta_tilde,
    })
}

impl Geometry {
    pub fn v_l(&self) -> Vertex {
        self.upper.v_l()
    }

    pub fn v_r(&self) -> Vertex {
        self.upper.v_r()
    }

    /// Vertices of the lower half-box `{-N..N} x {-1..-N}`.
    pub fn lower_vertices(&self) -> Vec<Vertex> {
        let mut out = Vec::new();
        for x in -self.n..=self.n {
            for y in -self.n..=-1 {
                out.push(Vertex::primal(x, y));
            }
        }
        out
    }

    /// Edges of the full box `Lambda = Lambda_+ u Lambda_-` (both endpoints
    /// in `{-N..N} x {-N..N}`), canonical order.
    pub fn full_box_edges(&self) -> Vec<Edge> {
        let n = self.n;
        let mut out = Vec::new();
        for x in -n..=n {
            for y in -n..=n {
                let v = Vertex::primal(x, y);
                if x < n {
                    out.push(Edge::new(v, Vertex::primal(x + 1, y)));
                }
                if y < n {
                    out.push(Edge::new(v, Vertex::primal(x, y + 1)));
                }
            }
        }
        out.sort();
        out
    }

    /// Structured-text description embedded in experiment outputs.
    pub fn describe(&self) -> String {
        format!(
            "geometry: N={} eps={} lambda_plus=[{},{}]x[0,{}] delta=[{},{}]x[{},{}] delta_tilde=[{},{}]x[{},{}] v_L=({},0) v_R=({},0)",
            self.n,
            self.eps,
            self.upper.x_min,
            self.upper.x_max,
            self.upper.height,
            self.delta.x_min,
            self.delta.x_max,
            self.delta.y_min,
            self.delta.y_max,
            self.delta_tilde.x_min,
            self.delta_tilde.x_max,
            self.delta_tilde.y_min,
            self.delta_tilde.y_max,
            self.upper.x_min,
            self.upper.x_max,
        )
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn doubled_parity_round_trip() {
        let p = Vertex::primal(-3, 7);
        assert!(p.is_primal() && !p.is_dual());
        assert_eq!(p.primal_coords(), (-3, 7));
        let d = Vertex::dual(0, 0);
        assert!(d.is_dual());
        assert_eq!(d.to_point(), (0.5, 0.5));
    }

    #[test]
    fn dual_edge_geometry() {
        // Horizontal primal edge {(0,0),(1,0)} -> vertical dual edge
        // {(1/2,-1/2),(1/2,1/2)}.
        let e = Edge::new(Vertex::primal(0, 0), Vertex::primal(1, 0));
        let d = e.dual_edge();
        let (a, b) = d.endpoints();
        assert_eq!((a.to_point(), b.to_point()), ((0.5, -0.5), (0.5, 0.5)));

        // Vertical primal edge {(0,0),(0,1)} -> horizontal dual edge
        // {(-1/2,1/2),(1/2,1/2)}.
        let e = Edge::new(Vertex::primal(0, 0), Vertex::primal(0, 1));
        let d = e.dual_edge();
        let (a, b) = d.endpoints();
        assert_eq!((a.to_point(), b.to_point()), ((-0.5, 0.5), (0.5, 0.5)));
    }

    #[test]
    fn dual_edge_involution_exhaustive() {
        // Every edge of boxes up to N = 8, both primal and dual side.
        for n in 1..=8 {
            let hb = HalfBox::symmetric(n);
            for e in hb.edges() {
                assert_eq!(e.dual_edge().dual_edge(), e);
                assert_eq!(e.dual_edge().dual_edge().dual_edge(), e.dual_edge());
            }
        }
    }

    #[test]
    fn cone_membership_examples() {
        let c = Cone::forward(Vertex::primal(0, 0));
        assert!(c.contains(Vertex::primal(1, 1))); // boundary included
        assert!(!c.contains(Vertex::primal(0, 1)));
        let b = Cone::backward(Vertex::primal(2, 0));
        assert!(b.contains(Vertex::primal(1, 1)));
        assert!(!b.contains(Vertex::primal(3, 0)));
    }

    #[test]
    fn cone_vertical_reflection_symmetry() {
        let apex = Vertex::primal(3, -2);
        for &orient in &[ConeOrientation::Forward, ConeOrientation::Backward] {
            let c = Cone {
                apex,
                orientation: orient,
                delta_num: 2,
                delta_den: 3,
            };
            for dx in -5..=5 {
                for dy in -5..=5i64 {
                    let p = apex.translate(2 * dx, 2 * dy);
                    let q = apex.translate(2 * dx, -2 * dy);
                    assert_eq!(c.contains(p), c.contains(q));
                }
            }
        }
    }

    #[test]
    fn geometry_small_cases() {
        // N=4, eps=0.1: Delta would be [2,-2] x [0,1], i.e. empty: rejected.
        assert!(build_geometry(4, 0.1).is_err());

        // N=64, eps=0.05, bounds by direct arithmetic on the formula.
        let g = build_geometry(64, 0.05).unwrap();
        let margin = (2.0 * 64f64.powf(0.4)).floor() as i64;
        assert_eq!(g.delta.x_min, -64 + margin);
        assert_eq!(g.delta.x_max, 64 - margin);
        assert_eq!(g.delta.y_max, 64f64.powf(0.05).floor() as i64);
        assert_eq!(g.delta_tilde.x_min, -64 + 64f64.powf(0.4).floor() as i64);
        assert_eq!(g.delta_tilde.y_max, (2.0 * 64f64.powf(0.05)).floor() as i64);

        // |V(Lambda_+)| = 9 * 5 = 45 at N = 4.
        assert_eq!(HalfBox::symmetric(4).vertex_count(), 45);
    }

    #[test]
    fn geometry_rejects_bad_parameters() {
        assert!(build_geometry(3, 0.05).is_err());
        assert!(build_geometry(64, 0.0).is_err());
        assert!(build_geometry(64, 0.2).is_err());
    }

    #[test]
    fn delta_nesting() {
        for (n, eps) in [(32, 0.05), (64, 0.05), (128, 0.05), (64, 0.1), (1024, 0.12)] {
            let g = build_geometry(n, eps).unwrap();
            assert!(g.delta.x_min >= g.delta_tilde.x_min);
            assert!(g.delta.x_max <= g.delta_tilde.x_max);
            assert!(g.delta.y_max <= g.delta_tilde.y_max);
            assert!(g.delta_tilde.x_min >= -n && g.delta_tilde.x_max <= n);
            assert!(g.delta_tilde.y_max <= n);
        }
    }

    #[test]
    fn dual_box_indexing() {
        let hb = HalfBox::symmetric(3);
        assert_eq!(hb.dual_cols(), 6);
        assert_eq!(hb.dual_rows(), 4);
        for c in 0..hb.dual_cols() {
            for r in 0..hb.dual_rows() {
                let v = hb.dual_vertex(c, r);
                assert!(v.is_dual());
                assert_eq!(hb.dual_index(v), Some((c, r)));
            }
        }
        assert_eq!(hb.dual_index(Vertex::dual(-4, 0)), None);
        // Bottom row sits below the wall line.
        assert!(hb.dual_vertex(0, 0).y < 0);
    }
}
