//! Hexagons with Wulff-shape normals: support values, vertices, incenters.
//!
//! Every region appearing in the flow — envelopes of discrete sets, ODE
//! states, comparison shapes — is a convex hexagon whose outer normals are
//! the six side normals n₁..n₆ of the Wulff shape W_hex. Such a hexagon is
//! determined by support values s₁..s₆, where side i lies on the line
//! ⟨x, n_i⟩ = s_i. This module keeps that representation honest (all six
//! sides present, origin strictly inside) and derives the geometry used by
//! the rest of the crate: side lengths, vertices, anisotropic perimeter,
//! Hausdorff distance, and the set of incenters, i.e. the centers of maximal
//! inscribed scaled copies of W_hex.

use crate::lattice::{phi_hex_dual, Vec2, NORMAL_VECTORS, PHI_HEX_OF_NORMAL, SQRT3};
use serde::{Deserialize, Serialize};

/// Why a support vector fails to describe a hexagon of the admissible class.
#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum HexagonError {
    /// Support values must be positive (origin strictly inside) and finite.
    #[error("support value s{index} = {value} must be positive and finite")]
    BadSupport { index: usize, value: f64 },
    /// Consecutive support planes must cut out a side of nonnegative length.
    #[error("side {index} would have length {length} < 0; the support values do not describe a hexagon with six sides")]
    NegativeSide { index: usize, length: f64 },
}

/// A convex hexagon {x : ⟨x, n_i⟩ ≤ s_i, i = 1..6} with the Wulff normals.
///
/// Invariants enforced at construction: every s_i is positive and finite, and
/// every side length L_i = (2/√3)(s_{i−1} + s_{i+1} − s_i) is nonnegative, so
/// each support plane actually touches the hexagon.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct WulffHexagon {
    s: [f64; 6],
}

/// The set of centers of maximal inscribed scaled Wulff shapes.
///
/// The inradius function x ↦ min_i (√3/2)(s_i − ⟨x, n_i⟩) is piecewise affine
/// and concave; its maximizer set is a face of a shrunk hexagon and has
/// dimension 0 or 1.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub enum IncenterSet {
    Point(Vec2),
    /// The two endpoints of the maximizing segment, in lexicographic
    /// (x, then y) order.
    Segment(Vec2, Vec2),
}

impl IncenterSet {
    /// Euclidean distance from `p` to this set.
    pub fn distance_to(&self, p: Vec2) -> f64 {
        match *self {
            IncenterSet::Point(c) => (p - c).norm(),
            IncenterSet::Segment(a, b) => point_segment_distance(p, a, b),
        }
    }

    /// Some point of the set (the point itself, or the segment midpoint).
    pub fn representative(&self) -> Vec2 {
        match *self {
            IncenterSet::Point(c) => c,
            IncenterSet::Segment(a, b) => (a + b) * 0.5,
        }
    }
}

/// Apothem of the unscaled Wulff shape: ⟨v, n⟩ = 2/√3 on each side.
const WULFF_APOTHEM: f64 = 2.0 / SQRT3;

impl WulffHexagon {
    /// Build from the six support values, checking the class invariants.
    pub fn new(s: [f64; 6]) -> Result<Self, HexagonError> {
        for (i, &v) in s.iter().enumerate() {
            if !(v.is_finite() && v > 0.0) {
                return Err(HexagonError::BadSupport { index: i + 1, value: v });
            }
        }
        // Validate the raw (unclamped) lengths; side_lengths() clamps at 0
        // and would hide a genuinely negative side.
        for i in 0..6 {
            let l = (2.0 / SQRT3) * (s[(i + 5) % 6] + s[(i + 1) % 6] - s[i]);
            if l < -1e-12 * scale_of(&s) {
                return Err(HexagonError::NegativeSide { index: i + 1, length: l });
            }
        }
        Ok(WulffHexagon { s })
    }

    /// Origin-symmetric hexagon from three support values (s₄ = s₁ etc.).
    pub fn origin_symmetric(s123: [f64; 3]) -> Result<Self, HexagonError> {
        let [s1, s2, s3] = s123;
        WulffHexagon::new([s1, s2, s3, s1, s2, s3])
    }

    /// Regular hexagon (all sides equal) with the given side length.
    /// Its apothem is (√3/2)·side.
    pub fn regular(side: f64) -> Result<Self, HexagonError> {
        WulffHexagon::new([(SQRT3 / 2.0) * side; 6])
    }

    /// The Wulff shape scaled by `rho`: support `rho`·2/√3, side `rho`·4/3.
    pub fn wulff_scaled(rho: f64) -> Result<Self, HexagonError> {
        WulffHexagon::new([rho * WULFF_APOTHEM; 6])
    }

    /// Origin-symmetric hexagon with side lengths (L₁, L₂, L₃, L₁, L₂, L₃).
    ///
    /// Inverts the side-length formula: s₁ = (√3/4)(L₂+L₃), cyclically.
    pub fn symmetric_from_side_lengths(l123: [f64; 3]) -> Result<Self, HexagonError> {
        let [l1, l2, l3] = l123;
        let q = SQRT3 / 4.0;
        WulffHexagon::origin_symmetric([q * (l2 + l3), q * (l3 + l1), q * (l1 + l2)])
    }

    /// The support values s₁..s₆ (index 0 holds s₁).
    pub fn supports(&self) -> [f64; 6] {
        self.s
    }

    pub fn support(&self, i: usize) -> f64 {
        self.s[i]
    }

    /// Side lengths L_i = (2/√3)(s_{i−1} + s_{i+1} − s_i), clamped at 0 to
    /// absorb roundoff on degenerate sides.
    pub fn side_lengths(&self) -> [f64; 6] {
        std::array::from_fn(|i| {
            let l = (2.0 / SQRT3) * (self.s[(i + 5) % 6] + self.s[(i + 1) % 6] - self.s[i]);
            l.max(0.0)
        })
    }

    /// Vertices in counterclockwise order; vertex i joins sides i and i+1.
    ///
    /// With u = n_i, w = n_{i+1} (unit, 60° apart) the corner solves the two
    /// support equations: v = (4/3)[(s_i − s_{i+1}/2)·u + (s_{i+1} − s_i/2)·w].
    pub fn vertices(&self) -> [Vec2; 6] {
        std::array::from_fn(|i| {
            let j = (i + 1) % 6;
            let u = NORMAL_VECTORS[i];
            let w = NORMAL_VECTORS[j];
            (u * (self.s[i] - 0.5 * self.s[j]) + w * (self.s[j] - 0.5 * self.s[i])) * (4.0 / 3.0)
        })
    }

    /// Perimeter weighted by the surface tension: ∮ φ_hex(ν) dH¹ = (2/√3)·Σ L_i.
    pub fn anisotropic_perimeter(&self) -> f64 {
        PHI_HEX_OF_NORMAL * self.side_lengths().iter().sum::<f64>()
    }

    /// Euclidean perimeter Σ L_i.
    pub fn perimeter(&self) -> f64 {
        self.side_lengths().iter().sum()
    }

    /// Area by the shoelace formula over the vertex loop.
    pub fn area(&self) -> f64 {
        let v = self.vertices();
        let mut twice = 0.0;
        for i in 0..6 {
            let j = (i + 1) % 6;
            twice += v[i].x * v[j].y - v[j].x * v[i].y;
        }
        0.5 * twice
    }

    /// Membership test with absolute slack `tol` on each support constraint.
    pub fn contains(&self, p: Vec2, tol: f64) -> bool {
        (0..6).all(|i| p.dot(NORMAL_VECTORS[i]) <= self.s[i] + tol)
    }

    /// Euclidean distance from `p` to the hexagon (0 if inside).
    pub fn distance_to_point(&self, p: Vec2) -> f64 {
        if self.contains(p, 0.0) {
            return 0.0;
        }
        let v = self.vertices();
        let mut best = f64::INFINITY;
        for i in 0..6 {
            best = best.min(point_segment_distance(p, v[i], v[(i + 1) % 6]));
        }
        best
    }

    /// Largest `rho` with x + rho·W_hex ⊆ hexagon for some x, together with
    /// the full set of optimal centers x.
    ///
    /// Solved as the linear program max r s.t. ⟨x, n_i⟩ + (2/√3)·r ≤ s_i by
    /// enumerating the 20 potential active triples; the optimal centers are
    /// then the (0- or 1-dimensional) hexagon shrunk by (2/√3)·r*.
    pub fn incenters(&self) -> (f64, IncenterSet) {
        let scale = scale_of(&self.s);
        let tol = 1e-9 * scale.max(1.0);
        let mut r_star = f64::NEG_INFINITY;
        for i in 0..6 {
            for j in (i + 1)..6 {
                for k in (j + 1)..6 {
                    if let Some((x, r)) = self.solve_active_triple(i, j, k) {
                        if r > r_star && self.lp_feasible(x, r, tol) {
                            r_star = r;
                        }
                    }
                }
            }
        }
        debug_assert!(r_star.is_finite(), "bounded hexagon must have an incenter");

        // Optimal centers: extreme points of {⟨x, n_i⟩ ≤ s_i − (2/√3)·r*}.
        let shrunk: [f64; 6] = std::array::from_fn(|i| self.s[i] - WULFF_APOTHEM * r_star);
        let mut pts: Vec<Vec2> = Vec::new();
        for i in 0..6 {
            for j in (i + 1)..6 {
                if let Some(x) = line_intersection(
                    NORMAL_VECTORS[i],
                    shrunk[i],
                    NORMAL_VECTORS[j],
                    shrunk[j],
                ) {
                    let feasible = (0..6).all(|m| x.dot(NORMAL_VECTORS[m]) <= shrunk[m] + tol);
                    if feasible && !pts.iter().any(|p| (*p - x).norm() <= 10.0 * tol) {
                        pts.push(x);
                    }
                }
            }
        }
        let set = match pts.len() {
            0 => unreachable!("optimal shrunk hexagon is nonempty"),
            1 => IncenterSet::Point(pts[0]),
            _ => {
                // The extreme points are collinear; keep the farthest pair.
                let (mut a, mut b, mut d) = (pts[0], pts[0], 0.0);
                for (u, p) in pts.iter().enumerate() {
                    for q in &pts[u + 1..] {
                        let dd = (*p - *q).norm();
                        if dd > d {
                            a = *p;
                            b = *q;
                            d = dd;
                        }
                    }
                }
                if d <= 10.0 * tol {
                    IncenterSet::Point(a)
                } else if (a.x, a.y) <= (b.x, b.y) {
                    IncenterSet::Segment(a, b)
                } else {
                    IncenterSet::Segment(b, a)
                }
            }
        };
        (r_star, set)
    }

    fn solve_active_triple(&self, i: usize, j: usize, k: usize) -> Option<(Vec2, f64)> {
        // Rows: n_m.x · x + n_m.y · y + (2/√3) · r = s_m for m in {i, j, k}.
        let rows = [i, j, k].map(|m| [NORMAL_VECTORS[m].x, NORMAL_VECTORS[m].y, WULFF_APOTHEM]);
        let rhs = [self.s[i], self.s[j], self.s[k]];
        solve3(rows, rhs).map(|[x, y, r]| (Vec2::new(x, y), r))
    }

    fn lp_feasible(&self, x: Vec2, r: f64, tol: f64) -> bool {
        (0..6).all(|m| x.dot(NORMAL_VECTORS[m]) + WULFF_APOTHEM * r <= self.s[m] + tol)
    }
}

fn scale_of(s: &[f64; 6]) -> f64 {
    s.iter().fold(0.0f64, |m, v| m.max(v.abs()))
}

/// Symmetric Hausdorff distance between two hexagons.
///
/// For convex sets the directed distance sup_{x∈A} d(x, B) is a convex
/// function's supremum over A, hence attained at a vertex of A.
pub fn hausdorff_distance(a: &WulffHexagon, b: &WulffHexagon) -> f64 {
    let d_ab = a
        .vertices()
        .iter()
        .map(|&v| b.distance_to_point(v))
        .fold(0.0f64, f64::max);
    let d_ba = b
        .vertices()
        .iter()
        .map(|&v| a.distance_to_point(v))
        .fold(0.0f64, f64::max);
    d_ab.max(d_ba)
}

/// Distance from `p` to the segment [a, b].
pub(crate) fn point_segment_distance(p: Vec2, a: Vec2, b: Vec2) -> f64 {
    let ab = b - a;
    let len2 = ab.dot(ab);
    if len2 == 0.0 {
        return (p - a).norm();
    }
    let t = ((p - a).dot(ab) / len2).clamp(0.0, 1.0);
    (p - (a + ab * t)).norm()
}

/// Intersection of ⟨x,u⟩ = p and ⟨x,w⟩ = q, unless the normals are parallel.
fn line_intersection(u: Vec2, p: f64, w: Vec2, q: f64) -> Option<Vec2> {
    let det = u.x * w.y - u.y * w.x;
    if det.abs() < 1e-12 {
        return None;
    }
    Some(Vec2::new((p * w.y - q * u.y) / det, (u.x * q - w.x * p) / det))
}

/// Cramer's rule for a 3×3 system; None if near-singular.
fn solve3(m: [[f64; 3]; 3], b: [f64; 3]) -> Option<[f64; 3]> {
    let det = det3(m);
    if det.abs() < 1e-12 {
        return None;
    }
    let mut out = [0.0; 3];
    for c in 0..3 {
        let mut mc = m;
        for r in 0..3 {
            mc[r][c] = b[r];
        }
        out[c] = det3(mc) / det;
    }
    Some(out)
}

fn det3(m: [[f64; 3]; 3]) -> f64 {
    m[0][0] * (m[1][1] * m[2][2] - m[1][2] * m[2][1])
        - m[0][1] * (m[1][0] * m[2][2] - m[1][2] * m[2][0])
        + m[0][2] * (m[1][0] * m[2][1] - m[1][1] * m[2][0])
}

/// Check that every vertex of `h` satisfies φ°_hex ≤ rho + tol and at least
/// one attains it, i.e. h ⊆ rho·W_hex tightly. Used by shape tests.
pub fn circumscribed_wulff_radius(h: &WulffHexagon) -> f64 {
    h.vertices()
        .iter()
        .map(|&v| phi_hex_dual(v))
        .fold(0.0f64, f64::max)
}
