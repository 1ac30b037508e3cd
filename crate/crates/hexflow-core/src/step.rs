//! One minimizing-movement step of a discrete hexagon.
//!
//! A step removes N_j ∈ ℕ whole cell layers from each of the six sides. Its
//! energy relative to keeping the set, modeled with each removed layer of
//! side j carrying L_j/ε cells at depth (3/4)kε, is the separable quadratic
//!
//!   f(N) = √3·ε·Σ_j ( −(2/3)·N_j + (3/(8γ))·N_j(N_j+1)/2·L_j ),
//!
//! minimized per side by the integer closest to αγ/L_j − 1/2, i.e.
//! ⌊αγ/L_j⌋ generically, with α = 16/9. Near-integer values of αγ/L_j are
//! flagged as ties: there the neglected corner cells (an O(ε²) effect the
//! quadratic drops) could tip the balance, so both candidate layer counts
//! are reported and a deterministic policy picks one.
//!
//! [`brute_force_step`] is the ground truth the closed form is tested
//! against: it evaluates the exact one-step energy — true cell-count
//! perimeter plus the exact per-cell depth dissipation — over every envelope
//! shift up to `max_layers`, and [`exhaustive_subset_step`] drops even the
//! hexagonal ansatz, searching all subsets of the current cells on tiny
//! instances.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::cells::{cell_area, distance_unit, CellSet, DiscreteHexagon};
use crate::lattice::{ALPHA_HEX, SQRT3};

#[cfg(feature = "parallel")]
use rayon::prelude::*;

/// Which of two near-tied layer counts a step takes.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum TiePolicy {
    /// The smaller layer count (slower motion). Default.
    #[default]
    Lower,
    /// The larger layer count (faster motion).
    Upper,
}

/// Tunables of the closed-form layer optimizer.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct StepOptions {
    /// Tie window constant C̄: side j is flagged when αγ/L_j is within
    /// C̄·ε of a positive integer.
    pub c_bar: f64,
    /// Deterministic choice between the two candidates of a flagged side.
    pub tie_policy: TiePolicy,
}

impl Default for StepOptions {
    fn default() -> Self {
        StepOptions {
            c_bar: 0.25,
            tie_policy: TiePolicy::Lower,
        }
    }
}

/// The layer counts of one step, with tie diagnostics.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct StepPlan {
    /// Layers removed per side (all ≥ 0).
    pub n: [i64; 6],
    /// Per-side flag: αγ/L_j fell inside the tie window, so n[j] was chosen
    /// by policy between two near-optimal values.
    pub tie: [bool; 6],
    pub gamma: f64,
    pub eps: f64,
}

impl StepPlan {
    /// True when the plan moves nothing.
    pub fn is_pinned(&self) -> bool {
        self.n == [0; 6]
    }

    /// Bitmask of flagged sides, bit j for side j+1.
    pub fn tie_mask(&self) -> u8 {
        self.tie
            .iter()
            .enumerate()
            .fold(0u8, |m, (j, &t)| if t { m | (1 << j) } else { m })
    }
}

/// Failure to apply a step plan.
#[derive(Clone, Copy, Debug, Error, PartialEq, Eq)]
pub enum StepError {
    /// Removing the requested layers drives the length of `side` (1-based)
    /// to zero or below; the six-sided evolution cannot continue.
    #[error("side {side} vanishes under the requested layer removal")]
    SideVanished { side: usize },
}

/// Failure of the exhaustive envelope-shift search.
#[derive(Clone, Copy, Debug, Error, PartialEq, Eq)]
pub enum BruteForceError {
    /// The minimizer uses `max_layers` on some side, so the true optimum may
    /// lie outside the searched cube.
    #[error("minimizer hit the search boundary of {max_layers} layers per side")]
    SearchTruncated { max_layers: i64 },
}

/// Result of a brute-force step search.
#[derive(Clone, Debug, PartialEq)]
pub struct BruteForceOutcome {
    /// The minimizing hexagon.
    pub hexagon: DiscreteHexagon,
    /// Layers removed per side.
    pub plan: [i64; 6],
    /// The exact one-step energy of the minimizer.
    pub energy: f64,
}

/// The separable quadratic model of the one-step energy change:
///
///   √3·ε·Σ_j ( −(2/3)·N_j + (3/(8γ))·N_j(N_j+1)/2·L_j ).
///
/// The linear term is the exact perimeter drop; the quadratic term models the
/// dissipation of N_j removed layers of L_j/ε cells each, ignoring the
/// O(max N³·ε²) corner-cell corrections.
pub fn reduced_energy(n: &[i64; 6], l: &[f64; 6], gamma: f64, eps: f64) -> f64 {
    debug_assert!(n.iter().all(|&v| v >= 0), "layer counts must be nonnegative");
    debug_assert!(l.iter().all(|&v| v > 0.0), "side lengths must be positive");
    debug_assert!(gamma > 0.0 && eps > 0.0);
    let sum: f64 = (0..6)
        .map(|j| {
            let nj = n[j] as f64;
            -(2.0 / 3.0) * nj + 3.0 / (8.0 * gamma) * nj * (nj + 1.0) / 2.0 * l[j]
        })
        .sum();
    SQRT3 * eps * sum
}

/// Per-side closed-form minimizer of [`reduced_energy`] with default options
/// (tie window C̄ = 1/4, lower tie policy).
pub fn optimal_layers(l: &[f64; 6], gamma: f64, eps: f64) -> StepPlan {
    optimal_layers_with(l, gamma, eps, StepOptions::default())
}

/// Per-side closed-form minimizer of [`reduced_energy`].
///
/// Side j takes the integer closest to x_j − 1/2 where x_j = αγ/L_j, which is
/// ⌊x_j⌋ for x_j away from integers; in particular a side with L_j ≥ αγ
/// (x_j ≤ 1) stays put. When dist(x_j, ℤ) < C̄·ε the two neighboring counts
/// are within the model's blind spot of each other: the side is flagged and
/// `opts.tie_policy` picks. An exactly integer x_j — where the quadratic has
/// two true minimizers — is additionally logged.
pub fn optimal_layers_with(l: &[f64; 6], gamma: f64, eps: f64, opts: StepOptions) -> StepPlan {
    assert!(gamma > 0.0 && gamma.is_finite(), "gamma must be positive");
    assert!(eps > 0.0 && eps.is_finite(), "eps must be positive");
    assert!(opts.c_bar >= 0.0, "tie window must be nonnegative");
    let mut n = [0i64; 6];
    let mut tie = [false; 6];
    for j in 0..6 {
        assert!(l[j] > 0.0 && l[j].is_finite(), "side lengths must be positive");
        let x = ALPHA_HEX * gamma / l[j];
        let nearest = x.round();
        if (x - nearest).abs() < opts.c_bar * eps && nearest >= 1.0 {
            if x == nearest {
                log::info!(
                    "side {}: layer balance αγ/L = {x} is exactly integer; \
                     both {} and {} layers minimize the model",
                    j + 1,
                    nearest - 1.0,
                    nearest
                );
            }
            tie[j] = true;
            n[j] = match opts.tie_policy {
                TiePolicy::Lower => nearest as i64 - 1,
                TiePolicy::Upper => nearest as i64,
            };
        } else {
            n[j] = ((x - 0.5).round() as i64).max(0);
        }
    }
    StepPlan {
        n,
        tie,
        gamma,
        eps,
    }
}

/// Shrinks the hexagon by the planned layers: offsets drop by n[j], hence
/// supports by (√3/2)·n[j]·ε and side lengths by (n_{j−1} + n_{j+1} − n_j)·ε.
/// The result is contained in `e`.
pub fn apply_plan(e: &DiscreteHexagon, plan: &StepPlan) -> Result<DiscreteHexagon, StepError> {
    assert!(
        plan.eps == e.eps(),
        "plan and hexagon must share the lattice spacing"
    );
    debug_assert!(plan.n.iter().all(|&v| v >= 0));
    let t = e.offsets();
    let shifted: [i64; 6] = std::array::from_fn(|j| t[j] - plan.n[j]);
    if let Some(side) = first_vanished_side(&shifted) {
        return Err(StepError::SideVanished { side });
    }
    Ok(DiscreteHexagon::from_offsets(e.eps(), shifted)
        .expect("offsets with nonnegative side slack form a nonempty hexagon"))
}

/// 1-based index of the first side whose slack goes negative, if any.
/// Negative slack means the side's length would drop below zero cells.
fn first_vanished_side(t: &[i64; 6]) -> Option<usize> {
    (0..6).find(|&j| t[(j + 5) % 6] + t[(j + 1) % 6] - t[j] < 0).map(|j| j + 1)
}

/// Exhaustive exact minimization over envelope shifts: every candidate
/// removing 0..=`max_layers` layers per side (the symmetric cube when `e` is
/// origin-symmetric), scored by the exact one-step energy at τ = γ·ε. Shifts
/// that annihilate a side leave the six-sided class and are skipped.
///
/// Energy ties break toward the lexicographically smallest plan, so the
/// result does not depend on evaluation order.
pub fn brute_force_step(
    e: &DiscreteHexagon,
    gamma: f64,
    max_layers: i64,
) -> Result<BruteForceOutcome, BruteForceError> {
    #[cfg(feature = "parallel")]
    {
        brute_force_with(e, gamma, max_layers, true)
    }
    #[cfg(not(feature = "parallel"))]
    {
        brute_force_with(e, gamma, max_layers, false)
    }
}

/// [`brute_force_step`] on a single thread regardless of the `parallel`
/// feature; the benchmark baseline.
pub fn brute_force_step_sequential(
    e: &DiscreteHexagon,
    gamma: f64,
    max_layers: i64,
) -> Result<BruteForceOutcome, BruteForceError> {
    brute_force_with(e, gamma, max_layers, false)
}

fn brute_force_with(
    e: &DiscreteHexagon,
    gamma: f64,
    max_layers: i64,
    parallel: bool,
) -> Result<BruteForceOutcome, BruteForceError> {
    assert!(gamma > 0.0 && gamma.is_finite(), "gamma must be positive");
    assert!(max_layers >= 1, "the search needs at least one layer");
    let plans = candidate_plans(e.is_origin_symmetric(), max_layers);
    let best = if parallel {
        evaluate_plans_parallel(e, gamma, &plans)
    } else {
        plans
            .iter()
            .filter_map(|&n| candidate_energy(e, n, gamma).map(|energy| (energy, n)))
            .min_by(compare_scored)
    };
    let (energy, plan) = best.expect("the zero shift is always a valid candidate");
    if plan.contains(&max_layers) && plan != [0; 6] {
        return Err(BruteForceError::SearchTruncated { max_layers });
    }
    let shifted: [i64; 6] = std::array::from_fn(|j| e.offsets()[j] - plan[j]);
    let hexagon = DiscreteHexagon::from_offsets(e.eps(), shifted)
        .expect("accepted candidates keep every side slack nonnegative");
    Ok(BruteForceOutcome {
        hexagon,
        plan,
        energy,
    })
}

#[cfg(feature = "parallel")]
fn evaluate_plans_parallel(
    e: &DiscreteHexagon,
    gamma: f64,
    plans: &[[i64; 6]],
) -> Option<(f64, [i64; 6])> {
    plans
        .par_iter()
        .filter_map(|&n| candidate_energy(e, n, gamma).map(|energy| (energy, n)))
        .min_by(compare_scored)
}

#[cfg(not(feature = "parallel"))]
fn evaluate_plans_parallel(
    _e: &DiscreteHexagon,
    _gamma: f64,
    _plans: &[[i64; 6]],
) -> Option<(f64, [i64; 6])> {
    unreachable!("parallel evaluation requires the `parallel` feature")
}

/// Total order on scored candidates: energy first, then lexicographic plan.
/// Energies are finite, so the order is total and any reduction order yields
/// the same minimum.
fn compare_scored(a: &(f64, [i64; 6]), b: &(f64, [i64; 6])) -> std::cmp::Ordering {
    a.0.partial_cmp(&b.0)
        .expect("step energies are finite")
        .then_with(|| a.1.cmp(&b.1))
}

fn candidate_plans(symmetric: bool, max_layers: i64) -> Vec<[i64; 6]> {
    let m = max_layers;
    let mut plans = Vec::new();
    if symmetric {
        // Origin symmetry is preserved by minimizers, so opposite sides move
        // together and the cube collapses to three free counts.
        for n0 in 0..=m {
            for n1 in 0..=m {
                for n2 in 0..=m {
                    plans.push([n0, n1, n2, n0, n1, n2]);
                }
            }
        }
    } else {
        let mut n = [0i64; 6];
        loop {
            plans.push(n);
            let mut j = 5;
            loop {
                n[j] += 1;
                if n[j] <= m {
                    break;
                }
                n[j] = 0;
                if j == 0 {
                    return plans;
                }
                j -= 1;
            }
        }
    }
    plans
}

/// Exact one-step energy of the envelope shift `n` against previous set `e`:
/// true boundary-count perimeter of the shrunk hexagon plus, for every
/// removed cell, its cell area times its depth inside `e` over τ = γ·ε.
/// `None` when the shift annihilates a side.
fn candidate_energy(e: &DiscreteHexagon, n: [i64; 6], gamma: f64) -> Option<f64> {
    let t = e.offsets();
    let shifted: [i64; 6] = std::array::from_fn(|j| t[j] - n[j]);
    if first_vanished_side(&shifted).is_some() {
        return None;
    }
    let eps = e.eps();
    let tau = gamma * eps;

    // Depth units of the removed cells, column by column. The shifted offsets
    // are canonical (nonnegative slack), so both row intervals are exact.
    let mut units: i64 = 0;
    let (a0, a1) = e.column_bounds();
    let (c0, c1) = (-shifted[1], shifted[4]);
    for a in a0..=a1 {
        let (lo, hi) = e.row_interval(a)?;
        let kept = if a >= c0 && a <= c1 {
            let klo = (-shifted[3]).max(-shifted[2] - a);
            let khi = shifted[0].min(shifted[5] - a);
            Some((klo, khi))
        } else {
            None
        };
        match kept {
            None => units += column_depth_sum(&t, a, lo, hi),
            Some((klo, khi)) => {
                if lo < klo {
                    units += column_depth_sum(&t, a, lo, klo - 1);
                }
                if khi < hi {
                    units += column_depth_sum(&t, a, khi + 1, hi);
                }
            }
        }
    }

    let perimeter = SQRT3 / 3.0 * eps * (2 * (shifted.iter().sum::<i64>() + 3)) as f64;
    Some(perimeter + cell_area(eps) / tau * distance_unit(eps) * units as f64)
}

/// Σ_b min_j(T_j − t_j(a, b)) + 1 over b in [b_lo, b_hi] — total depth units
/// of one column segment inside the hexagon with offsets `t`.
fn column_depth_sum(t: &[i64; 6], a: i64, b_lo: i64, b_hi: i64) -> i64 {
    let mut sum = 0;
    for b in b_lo..=b_hi {
        let depth = (t[0] - b)
            .min(t[1] + a)
            .min(t[2] + a + b)
            .min(t[3] + b)
            .min(t[4] - a)
            .min(t[5] - a - b)
            + 1;
        debug_assert!(depth >= 1);
        sum += depth;
    }
    sum
}

/// The slow, assumption-free oracle: minimizes the exact one-step energy over
/// *every* subset of the current cells, hexagonal or not, plus the empty set.
/// Exponential in the cell count — refuse beyond 25 cells.
///
/// Competitors adding cells outside `e` are never cheaper (they pay both
/// perimeter and dissipation for the additions); tests cross-check this
/// separately by perturbing the winner outward.
///
/// Ties break toward the subset whose sorted-cell bitmask is smallest, i.e.
/// deterministically.
pub fn exhaustive_subset_step(e: &DiscreteHexagon, gamma: f64) -> (CellSet, f64) {
    let eps = e.eps();
    let tau = gamma * eps;
    let cells = e.to_cell_set().sorted_cells();
    let count = cells.len();
    assert!(
        count <= 25,
        "exhaustive subset search over {count} cells is infeasible"
    );
    let depths: Vec<i64> = cells.iter().map(|&p| e.depth_units(p)).collect();

    let mut best_mask = 0u64;
    let mut best_energy = f64::INFINITY;
    for mask in 0..(1u64 << count) {
        let subset = CellSet::new(
            eps,
            cells
                .iter()
                .enumerate()
                .filter(|(i, _)| mask & (1 << i) != 0)
                .map(|(_, &p)| p),
        );
        let units: i64 = depths
            .iter()
            .enumerate()
            .filter(|(i, _)| mask & (1 << i) == 0)
            .map(|(_, &d)| d)
            .sum();
        let energy =
            subset.perimeter_energy() + cell_area(eps) / tau * distance_unit(eps) * units as f64;
        if energy < best_energy {
            best_energy = energy;
            best_mask = mask;
        }
    }

    let winner = CellSet::new(
        eps,
        cells
            .iter()
            .enumerate()
            .filter(|(i, _)| best_mask & (1 << i) != 0)
            .map(|(_, &p)| p),
    );
    (winner, best_energy)
}
