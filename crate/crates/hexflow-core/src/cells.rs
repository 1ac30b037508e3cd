//! Finite cell sets on the triangular lattice and discrete convex hexagons.
//!
//! Every lattice point owns a closed hexagonal cell of circumradius (√3/3)ε
//! and area (√3/2)ε²; a finite union of cells is a [`CellSet`]. The central
//! geometric object is the [`DiscreteHexagon`]: all cells contained in a
//! Wulff-like hexagon K = {x : ⟨x, n_j⟩ ≤ s_j}. Since the cell of p pushes
//! farthest toward n_j at ⟨p, n_j⟩ + (√3/3)ε and ⟨p, n_j⟩ = (√3/2)·ε·t_j(p)
//! with the integer slab coordinate t_j, containment reduces to six integer
//! inequalities t_j(p) ≤ T_j. The whole module therefore runs on exact
//! integer arithmetic: membership, perimeter counts, and the lattice distance
//! d^ε (always a multiple of (3/4)ε) are computed without rounding, and f64
//! enters only when converting to physical lengths and energies.
//!
//! Offsets are kept *canonical*: T_j ≤ T_{j−1} + T_{j+1}. In that form every
//! offset is attained by some cell, the envelope (smallest Wulff-like hexagon
//! containing the set) reads off directly as s_j = (√3/2)ε(T_j + 2/3), side
//! lengths are ε(u_j + 2/3) with u_j = T_{j−1} + T_{j+1} − T_j ≥ 0, the
//! outermost layer of side j holds u_j + 1 cells, and the boundary consists
//! of exactly 2(ΣT_j + 3) cell/non-cell contacts.

use std::collections::HashSet;

use serde::de::Error as _;
use serde::ser::SerializeStruct;
use serde::{Deserialize, Deserializer, Serialize, Serializer};
use thiserror::Error;

use crate::lattice::{LatticePoint, SQRT3};
use crate::wulff::{HexagonError, WulffHexagon};

/// Area of one hexagonal lattice cell at spacing `eps`: (√3/2)·ε².
pub fn cell_area(eps: f64) -> f64 {
    SQRT3 / 2.0 * eps * eps
}

/// The distance quantum: φ°_hex of a single lattice step, (3/4)·ε. Every
/// lattice distance in this module is an integer multiple of this value.
pub fn distance_unit(eps: f64) -> f64 {
    0.75 * eps
}

/// Failure to produce a nonempty discrete hexagon.
#[derive(Clone, Copy, Debug, Error, PartialEq, Eq)]
pub enum DiscretizeError {
    /// No lattice cell fits inside the requested hexagon.
    #[error("no lattice cell fits inside the hexagon")]
    EmptyDiscretization,
}

/// Failure of a lattice distance query.
#[derive(Clone, Copy, Debug, Error, PartialEq, Eq)]
pub enum DistanceError {
    /// Distance to the interface of an empty set is undefined.
    #[error("lattice distance to the interface of an empty set is undefined")]
    UndefinedDistance,
}

/// A finite set of lattice cells at spacing `eps`.
///
/// Cells are identified by the axial coordinates of their centers, so
/// membership queries are exact. The set represents the union of the closed
/// hexagonal cells of its members.
#[derive(Clone, Debug, PartialEq)]
pub struct CellSet {
    eps: f64,
    cells: HashSet<LatticePoint>,
}

impl CellSet {
    /// Collects cells into a set at spacing `eps` (> 0).
    pub fn new(eps: f64, cells: impl IntoIterator<Item = LatticePoint>) -> Self {
        assert!(
            eps > 0.0 && eps.is_finite(),
            "lattice spacing must be positive and finite"
        );
        CellSet {
            eps,
            cells: cells.into_iter().collect(),
        }
    }

    /// The empty set at spacing `eps`.
    pub fn empty(eps: f64) -> Self {
        Self::new(eps, std::iter::empty())
    }

    pub fn eps(&self) -> f64 {
        self.eps
    }

    pub fn len(&self) -> usize {
        self.cells.len()
    }

    pub fn is_empty(&self) -> bool {
        self.cells.is_empty()
    }

    pub fn contains(&self, p: LatticePoint) -> bool {
        self.cells.contains(&p)
    }

    /// Iterates over member cells in arbitrary order.
    pub fn iter(&self) -> impl Iterator<Item = LatticePoint> + '_ {
        self.cells.iter().copied()
    }

    /// Member cells sorted lexicographically by (a, b) — the canonical order
    /// used by the JSON form.
    pub fn sorted_cells(&self) -> Vec<LatticePoint> {
        let mut v: Vec<LatticePoint> = self.cells.iter().copied().collect();
        v.sort();
        v
    }

    /// The set translated by the lattice vector `v`.
    pub fn translate(&self, v: LatticePoint) -> CellSet {
        CellSet {
            eps: self.eps,
            cells: self
                .cells
                .iter()
                .map(|p| LatticePoint::new(p.a + v.a, p.b + v.b))
                .collect(),
        }
    }

    /// Number of ordered (member, non-member) nearest-neighbor pairs. Each
    /// unordered contact is counted once, so a single cell reports 6.
    pub fn boundary_edge_count(&self) -> i64 {
        self.cells
            .iter()
            .map(|p| p.neighbors().iter().filter(|q| !self.contains(**q)).count() as i64)
            .sum()
    }

    /// Boundary length of the union of cells: every cell/non-cell contact
    /// contributes one hexagon edge of length (√3/3)·ε.
    pub fn perimeter_energy(&self) -> f64 {
        SQRT3 / 3.0 * self.eps * self.boundary_edge_count() as f64
    }
}

impl Serialize for CellSet {
    fn serialize<S: Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        serialize_cells(serializer, "CellSet", self.eps, self.sorted_cells())
    }
}

impl<'de> Deserialize<'de> for CellSet {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> Result<Self, D::Error> {
        let raw = RawCells::deserialize(deserializer)?;
        if !(raw.eps > 0.0 && raw.eps.is_finite()) {
            return Err(D::Error::custom("lattice spacing must be positive"));
        }
        Ok(CellSet {
            eps: raw.eps,
            cells: raw
                .cells
                .into_iter()
                .map(|[a, b]| LatticePoint::new(a, b))
                .collect(),
        })
    }
}

#[derive(Deserialize)]
struct RawCells {
    eps: f64,
    cells: Vec<[i64; 2]>,
}

fn serialize_cells<S: Serializer>(
    serializer: S,
    name: &'static str,
    eps: f64,
    sorted: Vec<LatticePoint>,
) -> Result<S::Ok, S::Error> {
    let pairs: Vec<[i64; 2]> = sorted.iter().map(|p| [p.a, p.b]).collect();
    let mut st = serializer.serialize_struct(name, 2)?;
    st.serialize_field("eps", &eps)?;
    st.serialize_field("cells", &pairs)?;
    st.end()
}

/// A discrete convex hexagon: all cells whose closed cell lies inside a
/// Wulff-like hexagon, stored as six canonical integer slab offsets so that
/// the set is { p : t_j(p) ≤ T_j for all j }.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct DiscreteHexagon {
    eps: f64,
    t: [i64; 6],
}

impl DiscreteHexagon {
    /// All cells contained in `k` at spacing `eps`.
    ///
    /// The cell of p fits in the slab ⟨x, n_j⟩ ≤ s_j exactly when
    /// t_j(p) ≤ 2·s_j/(√3·ε) − 2/3; the integer thresholds are floors of the
    /// right-hand side, taken with a tiny forward snap so cells touching the
    /// boundary to within floating-point noise are admitted.
    pub fn discretize(k: &WulffHexagon, eps: f64) -> Result<Self, DiscretizeError> {
        assert!(
            eps > 0.0 && eps.is_finite(),
            "lattice spacing must be positive and finite"
        );
        let s = k.supports();
        let mut t = [0i64; 6];
        for j in 0..6 {
            t[j] = floor_with_snap(2.0 * s[j] / (SQRT3 * eps) - 2.0 / 3.0);
        }
        Self::from_offsets(eps, t)
    }

    /// Builds the hexagon { p : t_j(p) ≤ t[j] }, tightening redundant offsets
    /// to the canonical form.
    pub fn from_offsets(eps: f64, t: [i64; 6]) -> Result<Self, DiscretizeError> {
        assert!(
            eps > 0.0 && eps.is_finite(),
            "lattice spacing must be positive and finite"
        );
        let t = canonicalize(t).ok_or(DiscretizeError::EmptyDiscretization)?;
        Ok(DiscreteHexagon { eps, t })
    }

    /// The smallest discrete hexagon containing the given cells (per-slab
    /// maxima), or `None` for empty input. The result equals the input set
    /// exactly when the input is itself a discrete convex hexagon.
    pub fn hull_of_cells(
        eps: f64,
        cells: impl IntoIterator<Item = LatticePoint>,
    ) -> Option<DiscreteHexagon> {
        assert!(
            eps > 0.0 && eps.is_finite(),
            "lattice spacing must be positive and finite"
        );
        let mut t = [i64::MIN; 6];
        let mut any = false;
        for p in cells {
            any = true;
            for (j, slot) in t.iter_mut().enumerate() {
                *slot = (*slot).max(p.slab(j));
            }
        }
        // Per-slab maxima are already canonical: picking a cell attaining T_j
        // gives T_{j−1} + T_{j+1} ≥ t_{j−1}(p) + t_{j+1}(p) = t_j(p) = T_j.
        any.then_some(DiscreteHexagon { eps, t })
    }

    pub fn eps(&self) -> f64 {
        self.eps
    }

    /// The canonical slab offsets T_1..T_6 (0-indexed array).
    pub fn offsets(&self) -> [i64; 6] {
        self.t
    }

    /// Support values of the envelope: s_j = (√3/2)·ε·(T_j + 2/3). These can
    /// be non-positive when the set lies far from the origin.
    pub fn envelope_supports(&self) -> [f64; 6] {
        std::array::from_fn(|j| SQRT3 / 2.0 * self.eps * (self.t[j] as f64 + 2.0 / 3.0))
    }

    /// The smallest Wulff-like hexagon containing the set. Fails when the set
    /// does not contain the origin cell (some T_j < 0), since a support value
    /// is then non-positive.
    pub fn envelope(&self) -> Result<WulffHexagon, HexagonError> {
        WulffHexagon::new(self.envelope_supports())
    }

    /// Slack of side j in the canonical form: u_j = T_{j−1} + T_{j+1} − T_j ≥ 0.
    fn side_units(&self, j: usize) -> i64 {
        self.t[(j + 5) % 6] + self.t[(j + 1) % 6] - self.t[j]
    }

    /// Envelope side lengths L_j = ε·(u_j + 2/3); always positive.
    pub fn side_lengths(&self) -> [f64; 6] {
        std::array::from_fn(|j| self.eps * (self.side_units(j) as f64 + 2.0 / 3.0))
    }

    /// Number of cells in the outermost layer of side j: u_j + 1.
    pub fn side_cell_counts(&self) -> [i64; 6] {
        std::array::from_fn(|j| self.side_units(j) + 1)
    }

    pub fn contains_cell(&self, p: LatticePoint) -> bool {
        (0..6).all(|j| p.slab(j) <= self.t[j])
    }

    /// Lattice distance from a member cell to the complement, in units of
    /// (3/4)·ε: min_j (T_j − t_j(p)) + 1. Values ≤ 0 indicate p is outside.
    pub fn depth_units(&self, p: LatticePoint) -> i64 {
        (0..6)
            .map(|j| self.t[j] - p.slab(j))
            .min()
            .expect("six slabs")
            + 1
    }

    /// Lattice distance from an outside cell to the set, in units of (3/4)·ε:
    /// max_j (t_j(p) − T_j), clamped at 0 for members.
    pub fn exterior_units(&self, p: LatticePoint) -> i64 {
        (0..6)
            .map(|j| p.slab(j) - self.t[j])
            .max()
            .expect("six slabs")
            .max(0)
    }

    /// Inclusive range of occupied columns (axial a-coordinates).
    pub fn column_bounds(&self) -> (i64, i64) {
        (-self.t[1], self.t[4])
    }

    /// Inclusive range of occupied b-coordinates in column `a`, or `None`
    /// outside [`Self::column_bounds`]. Canonical offsets guarantee every
    /// column in bounds is nonempty.
    pub fn row_interval(&self, a: i64) -> Option<(i64, i64)> {
        let (a0, a1) = self.column_bounds();
        if a < a0 || a > a1 {
            return None;
        }
        let lo = (-self.t[3]).max(-self.t[2] - a);
        let hi = self.t[0].min(self.t[5] - a);
        debug_assert!(lo <= hi, "canonical hexagons have no empty columns");
        Some((lo, hi))
    }

    /// Iterates over all cells in lexicographic (a, b) order.
    pub fn cells(&self) -> impl Iterator<Item = LatticePoint> + '_ {
        let (a0, a1) = self.column_bounds();
        (a0..=a1).flat_map(move |a| {
            let (lo, hi) = self.row_interval(a).expect("column in bounds");
            (lo..=hi).map(move |b| LatticePoint::new(a, b))
        })
    }

    pub fn cell_count(&self) -> u64 {
        let (a0, a1) = self.column_bounds();
        (a0..=a1)
            .map(|a| {
                let (lo, hi) = self.row_interval(a).expect("column in bounds");
                (hi - lo + 1) as u64
            })
            .sum()
    }

    pub fn to_cell_set(&self) -> CellSet {
        CellSet::new(self.eps, self.cells())
    }

    /// Number of ordered (member, non-member) neighbor pairs: 2·(ΣT_j + 3).
    ///
    /// Each of the T_0 + T_3 + 1 occupied rows contributes its left and right
    /// end, and likewise for the two diagonal sweep directions.
    pub fn boundary_edge_count(&self) -> i64 {
        2 * (self.t.iter().sum::<i64>() + 3)
    }

    /// Boundary length of the union of cells: (√3/3)·ε per boundary contact.
    /// Equals the envelope's anisotropic perimeter minus (2/√3)·ε.
    pub fn perimeter_energy(&self) -> f64 {
        SQRT3 / 3.0 * self.eps * self.boundary_edge_count() as f64
    }

    /// True when the set is invariant under the point reflection p ↦ −p,
    /// i.e. opposite offsets agree.
    pub fn is_origin_symmetric(&self) -> bool {
        (0..3).all(|j| self.t[j] == self.t[j + 3])
    }
}

impl Serialize for DiscreteHexagon {
    fn serialize<S: Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        serialize_cells(
            serializer,
            "DiscreteHexagon",
            self.eps,
            self.cells().collect(),
        )
    }
}

impl<'de> Deserialize<'de> for DiscreteHexagon {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> Result<Self, D::Error> {
        let raw = RawCells::deserialize(deserializer)?;
        if !(raw.eps > 0.0 && raw.eps.is_finite()) {
            return Err(D::Error::custom("lattice spacing must be positive"));
        }
        let cells: HashSet<LatticePoint> = raw
            .cells
            .into_iter()
            .map(|[a, b]| LatticePoint::new(a, b))
            .collect();
        let hex = DiscreteHexagon::hull_of_cells(raw.eps, cells.iter().copied())
            .ok_or_else(|| D::Error::custom("a discrete hexagon needs at least one cell"))?;
        // The hull contains every listed cell by construction, so equality of
        // counts is equality of sets.
        if hex.cell_count() != cells.len() as u64 {
            return Err(D::Error::custom(
                "cells do not form a discrete convex hexagon",
            ));
        }
        Ok(hex)
    }
}

/// Tightens offsets to canonical form without changing the cell set;
/// `None` when the set is empty.
///
/// Each sweep replaces T_j by min(T_j, T_{j−1} + T_{j+1}), which preserves
/// the set because t_j = t_{j−1} + t_{j+1} pointwise. While all three
/// opposite-pair sums stay nonnegative, ΣT is nonnegative and strictly
/// decreases on every changing sweep, so the loop either reaches a fixpoint
/// (canonical, hence nonempty) or drives a pair sum negative (empty set:
/// the two opposing half-planes are disjoint).
fn canonicalize(mut t: [i64; 6]) -> Option<[i64; 6]> {
    loop {
        for j in 0..3 {
            if t[j].checked_add(t[j + 3])? < 0 {
                return None;
            }
        }
        let mut changed = false;
        for j in 0..6 {
            let bound = t[(j + 5) % 6].checked_add(t[(j + 1) % 6])?;
            if t[j] > bound {
                t[j] = bound;
                changed = true;
            }
        }
        if !changed {
            return Some(t);
        }
    }
}

/// floor with a tiny forward snap: values within relative 1e−9 below an
/// integer round to it, admitting boundary-touching cells despite
/// floating-point noise in support values.
fn floor_with_snap(x: f64) -> i64 {
    (x + 1e-9 * (1.0 + x.abs())).floor() as i64
}

/// Cells of `f` with at least one neighbor outside `f`.
fn inner_shell(f: &CellSet) -> Vec<LatticePoint> {
    f.iter()
        .filter(|p| p.neighbors().iter().any(|q| !f.contains(*q)))
        .collect()
}

/// Cells outside `f` with at least one neighbor in `f`.
fn outer_shell(f: &CellSet) -> Vec<LatticePoint> {
    let mut shell = HashSet::new();
    for p in f.iter() {
        for q in p.neighbors() {
            if !f.contains(q) {
                shell.insert(q);
            }
        }
    }
    shell.into_iter().collect()
}

/// Lattice distance between `p` and the interface of `f`, in units of
/// (3/4)·ε: for p outside f, the least hex graph distance to a cell of f;
/// for p in f, the least hex graph distance to a cell of the complement.
///
/// A shortest path from outside enters f first at a cell with an outside
/// neighbor (and vice versa), so the minimum over the matching boundary
/// shell is exact while staying O(boundary) instead of O(area).
pub fn discrete_distance_units(p: LatticePoint, f: &CellSet) -> Result<i64, DistanceError> {
    if f.is_empty() {
        return Err(DistanceError::UndefinedDistance);
    }
    let shell = if f.contains(p) {
        outer_shell(f)
    } else {
        inner_shell(f)
    };
    Ok(shell
        .iter()
        .map(|q| (p - *q).dual_norm_units())
        .min()
        .expect("boundary shells of a finite nonempty set are nonempty"))
}

/// φ°_hex-distance between `p` and the interface of `f`:
/// (3/4)·ε times [`discrete_distance_units`].
pub fn discrete_distance(p: LatticePoint, f: &CellSet) -> Result<f64, DistanceError> {
    Ok(distance_unit(f.eps()) * discrete_distance_units(p, f)? as f64)
}

/// One-step movement energy of candidate `e` against the previous set `f`:
///
/// P_ε(E) + (√3/2)·(ε²/τ)·[ Σ_{E∖F} d^ε(·, F) + Σ_{F∖E} d^ε(·, complement of F) ]
///
/// — the perimeter of the candidate plus, for every changed cell, its cell
/// area times the lattice distance to the previous interface over τ.
pub fn step_energy(e: &CellSet, f: &CellSet, tau: f64, eps: f64) -> Result<f64, DistanceError> {
    assert!(tau > 0.0 && tau.is_finite(), "time step must be positive");
    assert!(
        e.eps() == eps && f.eps() == eps,
        "cell sets must share the lattice spacing"
    );
    let mut inner: Option<Vec<LatticePoint>> = None;
    let mut outer: Option<Vec<LatticePoint>> = None;
    let mut units_total: i64 = 0;
    for p in e.iter().chain(f.iter()) {
        let in_e = e.contains(p);
        let in_f = f.contains(p);
        if in_e == in_f {
            continue;
        }
        if f.is_empty() {
            return Err(DistanceError::UndefinedDistance);
        }
        let shell = if in_f {
            outer.get_or_insert_with(|| outer_shell(f))
        } else {
            inner.get_or_insert_with(|| inner_shell(f))
        };
        units_total += shell
            .iter()
            .map(|q| (p - *q).dual_norm_units())
            .min()
            .expect("boundary shells of a finite nonempty set are nonempty");
    }
    Ok(e.perimeter_energy()
        + cell_area(eps) / tau * distance_unit(eps) * units_total as f64)
}
