//! The triangular lattice, its hexagonal anisotropy and the dual norm.
//!
//! Lattice points are stored in axial integer coordinates (a, b) meaning
//! a·η₁ + b·η₂ with η₁ = (1, 0) and η₂ = (1/2, √3/2). The third unit
//! direction η₃ := η₁ − η₂ makes ±η₁, ±η₂, ±η₃ the six nearest-neighbor
//! steps. Geometry at spacing ε is obtained by scaling Cartesian output,
//! never by scaling the integer coordinates.
//!
//! Two positively one-homogeneous functions drive everything else:
//!
//! - the surface tension φ_hex(ν) = (2/3)·Σₖ |⟨ν, ηₖ⟩|, the anisotropy whose
//!   integral over a boundary the lattice perimeter approximates;
//! - its dual φ°_hex(ξ) = (√3/2)·maxₖ |⟨ξ, ηₖ⊥⟩|, whose unit ball is the
//!   Wulff shape W_hex = (4/3)·conv(±η₁, ±η₂, ±η₃).
//!
//! On lattice points the dual norm is quantized: φ°_hex(a·η₁ + b·η₂) =
//! (3/4)·max(|a|, |b|, |a+b|) ∈ (3/4)·ℕ, and the integer part coincides with
//! the hex graph distance to the origin.

use serde::{Deserialize, Serialize};

/// √3 to f64 precision.
pub const SQRT3: f64 = 1.732_050_807_568_877_2;

/// Mobility constant of the hexagonal anisotropy: α = 16/9.
///
/// It is the product φ_hex(n)·Λ(n) = (2/√3)·(4/3)·(2/√3) ... more usefully, it
/// is the unique constant for which a flat side of length L is pinned exactly
/// when L ≥ α·γ: the energy balance of removing one layer of cells,
/// √3·ε·(−2/3 + (3/8)·L/γ) ≥ 0, flips sign at L = (16/9)·γ.
pub const ALPHA_HEX: f64 = 16.0 / 9.0;

/// φ_hex evaluated on any side normal of the Wulff shape: 2/√3.
pub const PHI_HEX_OF_NORMAL: f64 = 2.0 / SQRT3;

/// Side length of the Wulff shape W_hex = {φ°_hex ≤ 1}: 4/3.
pub const WULFF_SIDE_LENGTH: f64 = 4.0 / 3.0;

/// A plane vector. Just enough linear algebra for 2D convex geometry.
#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct Vec2 {
    pub x: f64,
    pub y: f64,
}

impl Vec2 {
    pub const fn new(x: f64, y: f64) -> Self {
        Vec2 { x, y }
    }

    pub fn dot(self, other: Vec2) -> f64 {
        self.x * other.x + self.y * other.y
    }

    pub fn norm(self) -> f64 {
        self.dot(self).sqrt()
    }

    /// Counterclockwise rotation by π/2.
    pub fn perp(self) -> Vec2 {
        Vec2::new(-self.y, self.x)
    }
}

impl std::ops::Add for Vec2 {
    type Output = Vec2;
    fn add(self, o: Vec2) -> Vec2 {
        Vec2::new(self.x + o.x, self.y + o.y)
    }
}

impl std::ops::Sub for Vec2 {
    type Output = Vec2;
    fn sub(self, o: Vec2) -> Vec2 {
        Vec2::new(self.x - o.x, self.y - o.y)
    }
}

impl std::ops::Mul<f64> for Vec2 {
    type Output = Vec2;
    fn mul(self, t: f64) -> Vec2 {
        Vec2::new(self.x * t, self.y * t)
    }
}

impl std::ops::Neg for Vec2 {
    type Output = Vec2;
    fn neg(self) -> Vec2 {
        Vec2::new(-self.x, -self.y)
    }
}

/// η₁ = (1, 0).
pub const ETA1: Vec2 = Vec2::new(1.0, 0.0);
/// η₂ = (1/2, √3/2).
pub const ETA2: Vec2 = Vec2::new(0.5, SQRT3 / 2.0);
/// η₃ = η₁ − η₂ = (1/2, −√3/2).
pub const ETA3: Vec2 = Vec2::new(0.5, -SQRT3 / 2.0);

/// A lattice point in axial integer coordinates: a·η₁ + b·η₂.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct LatticePoint {
    pub a: i64,
    pub b: i64,
}

/// Neighbor offsets in counterclockwise order starting from +η₁:
/// η₁, η₂, η₂−η₁, −η₁, −η₂, η₁−η₂.
pub const NEIGHBOR_OFFSETS: [(i64, i64); 6] = [(1, 0), (0, 1), (-1, 1), (-1, 0), (0, -1), (1, -1)];

impl LatticePoint {
    pub const ORIGIN: LatticePoint = LatticePoint { a: 0, b: 0 };

    pub const fn new(a: i64, b: i64) -> Self {
        LatticePoint { a, b }
    }

    /// Cartesian position at lattice spacing `eps`.
    pub fn cart(self, eps: f64) -> Vec2 {
        Vec2::new(
            eps * (self.a as f64 + 0.5 * self.b as f64),
            eps * (SQRT3 / 2.0) * self.b as f64,
        )
    }

    /// The six nearest neighbors, counterclockwise starting from +η₁.
    pub fn neighbors(self) -> [LatticePoint; 6] {
        NEIGHBOR_OFFSETS.map(|(da, db)| LatticePoint::new(self.a + da, self.b + db))
    }

    /// φ°_hex of this point (at ε = 1) in units of 3/4, i.e.
    /// max(|a|, |b|, |a+b|). Equals the hex graph distance to the origin.
    pub fn dual_norm_units(self) -> i64 {
        self.a.abs().max(self.b.abs()).max((self.a + self.b).abs())
    }

    /// Signed slab coordinate toward side normal n_i (`i` is 0-based):
    /// ⟨cart(ε), n_i⟩ = (√3/2)·ε·slab(i). Integer for every lattice point.
    pub fn slab(self, i: usize) -> i64 {
        debug_assert!(i < 6);
        match i {
            0 => self.b,
            1 => -self.a,
            2 => -(self.a + self.b),
            3 => -self.b,
            4 => self.a,
            _ => self.a + self.b,
        }
    }
}

impl std::ops::Sub for LatticePoint {
    type Output = LatticePoint;
    fn sub(self, o: LatticePoint) -> LatticePoint {
        LatticePoint::new(self.a - o.a, self.b - o.b)
    }
}

/// One of the six side normals of the Wulff shape, labeled 1..=6.
///
/// n_i points at angle 90° + (i−1)·60°, so consecutive labels are 60° apart
/// (⟨n_i, n_{i+1}⟩ = 1/2) and opposite labels are antipodal (n_{i+3} = −n_i).
/// As a set these are {±η₁⊥, ±η₂⊥, ±η₃⊥}, the outer normals of W_hex.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Normal(u8);

impl Normal {
    /// All six normals in label order.
    pub fn all() -> [Normal; 6] {
        [0, 1, 2, 3, 4, 5].map(Normal)
    }

    /// From a 1-based label in 1..=6.
    pub fn from_index(index: usize) -> Option<Normal> {
        (1..=6).contains(&index).then(|| Normal(index as u8 - 1))
    }

    /// 1-based label.
    pub fn index(self) -> usize {
        self.0 as usize + 1
    }

    /// 0-based position, for array indexing.
    pub fn pos(self) -> usize {
        self.0 as usize
    }

    pub fn vector(self) -> Vec2 {
        NORMAL_VECTORS[self.0 as usize]
    }

    pub fn opposite(self) -> Normal {
        Normal((self.0 + 3) % 6)
    }

    pub fn next(self) -> Normal {
        Normal((self.0 + 1) % 6)
    }

    pub fn prev(self) -> Normal {
        Normal((self.0 + 5) % 6)
    }
}

/// n_i for i = 1..6 (0-based array): unit vectors at 90° + (i−1)·60°.
pub const NORMAL_VECTORS: [Vec2; 6] = [
    Vec2::new(0.0, 1.0),
    Vec2::new(-SQRT3 / 2.0, 0.5),
    Vec2::new(-SQRT3 / 2.0, -0.5),
    Vec2::new(0.0, -1.0),
    Vec2::new(SQRT3 / 2.0, -0.5),
    Vec2::new(SQRT3 / 2.0, 0.5),
];

/// The hexagonal surface tension φ_hex(ν) = (2/3)·Σₖ |⟨ν, ηₖ⟩|.
///
/// The three projections satisfy ⟨ν,η₁⟩ = ⟨ν,η₂⟩ + ⟨ν,η₃⟩, which makes the sum
/// form equal to (4/3)·maxₖ |⟨ν, ηₖ⟩|.
pub fn phi_hex(v: Vec2) -> f64 {
    (2.0 / 3.0) * (v.dot(ETA1).abs() + v.dot(ETA2).abs() + v.dot(ETA3).abs())
}

/// The dual norm φ°_hex(ξ) = (√3/2)·maxₖ |⟨ξ, ηₖ⊥⟩|.
///
/// Its unit ball is the Wulff shape W_hex = (4/3)·conv(±η₁, ±η₂, ±η₃).
pub fn phi_hex_dual(v: Vec2) -> f64 {
    let p1 = v.dot(ETA1.perp()).abs();
    let p2 = v.dot(ETA2.perp()).abs();
    let p3 = v.dot(ETA3.perp()).abs();
    (SQRT3 / 2.0) * p1.max(p2).max(p3)
}

/// Vertices of W_hex = {φ°_hex ≤ 1} in counterclockwise order starting at
/// (4/3)·η₁. A regular hexagon of circumradius (and side length) 4/3.
pub fn wulff_shape_vertices() -> [Vec2; 6] {
    [ETA1, ETA2, ETA2 - ETA1, -ETA1, -ETA2, ETA1 - ETA2].map(|v| v * WULFF_SIDE_LENGTH)
}
