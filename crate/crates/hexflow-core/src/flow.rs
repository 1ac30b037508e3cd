//! Iterated one-step minimization at time step τ = γε: the discrete
//! evolution driver.
//!
//! Each step starts from a lattice hexagon, asks a stepper for the layer
//! counts to peel (the closed-form per-side minimizer or the exhaustive
//! search), records the state together with the plan chosen *from* it, and
//! applies the plan. The trajectory therefore pairs every recorded state
//! with the decision made there; the last record is either the absorbing
//! pinned state, the state whose plan would annihilate a side, or the state
//! standing when the horizon ran out.

use crate::cells::DiscreteHexagon;
use crate::lattice::SQRT3;
use crate::ode::regular_crystalline_extinction;
use crate::step::{
    apply_plan, brute_force_step, optimal_layers_with, reduced_energy, BruteForceError,
    StepError, StepOptions, StepPlan, TiePolicy,
};
use crate::wulff::{hausdorff_distance, WulffHexagon};
use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Which one-step minimizer drives the evolution.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Stepper {
    /// Per-side closed form: ⌊αγ/L_j⌋ with tie handling.
    #[default]
    ClosedForm,
    /// Exhaustive envelope-shift search; exact but exponential in the side
    /// thickness, intended for small cross-check instances.
    BruteForce,
}

/// Failure to start a flow.
#[derive(Clone, Debug, Error, PartialEq)]
pub enum FlowError {
    /// A precondition on the configuration or the initial datum is violated.
    #[error("invalid flow configuration: {message}")]
    Config { message: String },
    /// The brute-force stepper could not certify its minimizer.
    #[error("exhaustive stepper failed: {0}")]
    Truncated(#[from] BruteForceError),
}

fn config_error<T>(message: String) -> Result<T, FlowError> {
    Err(FlowError::Config { message })
}

/// Tunables of [`run_with`].
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct FlowOptions {
    /// Time horizon; the flow stops at the last step time ≤ `t_max`.
    pub t_max: f64,
    pub stepper: Stepper,
    /// Tie window and policy of the closed-form stepper (also used to flag
    /// ties when the exhaustive stepper chooses the layers).
    pub step: StepOptions,
    /// Hard cap on the number of steps.
    pub max_steps: usize,
    /// Search radius of the exhaustive stepper; `None` sizes it to the
    /// thickest side so the search can never be truncated.
    pub brute_max_layers: Option<i64>,
}

impl FlowOptions {
    /// Defaults with the given horizon.
    pub fn until(t_max: f64) -> Self {
        FlowOptions {
            t_max,
            stepper: Stepper::ClosedForm,
            step: StepOptions::default(),
            max_steps: 1_000_000,
            brute_max_layers: None,
        }
    }
}

/// One step of the discrete evolution: the state at time `t = k·τ` and the
/// plan chosen from it.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct FlowRecord {
    pub k: usize,
    pub t: f64,
    /// Envelope supports of the state.
    pub s: [f64; 6],
    /// Realized side lengths of the state.
    pub l: [f64; 6],
    /// Layers the stepper removes from this state (all zero in the final
    /// pinned record; hypothetical in a horizon-closing record).
    pub n: [i64; 6],
    /// Sides whose layer count was a tie-window policy choice.
    pub tie: [bool; 6],
    /// Boundary energy of the state.
    pub perimeter: f64,
    /// Reduced (per-side quadratic) energy of the chosen plan.
    pub step_energy: f64,
}

impl FlowRecord {
    /// Bitmask of flagged sides, bit j for side j+1.
    pub fn tie_mask(&self) -> u8 {
        self.tie
            .iter()
            .enumerate()
            .fold(0u8, |m, (j, &t)| if t { m | (1 << j) } else { m })
    }
}

/// Why the discrete evolution stopped.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum FlowTerminal {
    /// The minimizer moves nothing; the state repeats forever.
    Pinned,
    /// The next step would remove the last layers of `side` (1-based); the
    /// hexagonal evolution cannot continue.
    SideVanished { side: usize },
    /// Horizon or step cap reached.
    MaxSteps,
}

/// The recorded discrete evolution.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Trajectory {
    pub eps: f64,
    pub gamma: f64,
    /// Time step τ = γε.
    pub tau: f64,
    /// Envelope offsets of the initial discretization.
    pub initial_offsets: [i64; 6],
    pub records: Vec<FlowRecord>,
    pub terminal: FlowTerminal,
}

impl Trajectory {
    /// Envelope offsets of the state in record `k`, reconstructed exactly
    /// from the integer plans.
    pub fn offsets_at(&self, k: usize) -> [i64; 6] {
        assert!(k < self.records.len(), "record index out of range");
        let mut t = self.initial_offsets;
        for r in &self.records[..k] {
            for (tj, nj) in t.iter_mut().zip(&r.n) {
                *tj -= nj;
            }
        }
        t
    }

    /// The lattice hexagon of record `k`.
    pub fn hexagon_at(&self, k: usize) -> DiscreteHexagon {
        DiscreteHexagon::from_offsets(self.eps, self.offsets_at(k))
            .expect("recorded states are valid hexagons")
    }

    /// The lattice hexagon of the last record.
    pub fn final_hexagon(&self) -> DiscreteHexagon {
        self.hexagon_at(self.records.len() - 1)
    }

    /// Time at which the vanishing step would complete, when the flow ended
    /// by side vanishing.
    pub fn extinction_time(&self) -> Option<f64> {
        match self.terminal {
            FlowTerminal::SideVanished { .. } => {
                let last = self.records.last().expect("non-empty trajectory");
                Some((last.k + 1) as f64 * self.tau)
            }
            _ => None,
        }
    }

    /// Time of the last record.
    pub fn final_time(&self) -> f64 {
        self.records.last().map(|r| r.t).unwrap_or(0.0)
    }
}

/// Validate γ, ε and the initial datum; return its discretization.
fn validated_start(
    e0: &WulffHexagon,
    eps: f64,
    gamma: f64,
) -> Result<DiscreteHexagon, FlowError> {
    if !(eps > 0.0 && eps.is_finite()) {
        return config_error(format!("eps must be positive and finite, got {eps}"));
    }
    if !(gamma > 0.0 && gamma.is_finite()) {
        return config_error(format!("gamma must be positive and finite, got {gamma}"));
    }
    let s = e0.supports();
    let scale = s.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    for j in 0..3 {
        if (s[j] - s[j + 3]).abs() > 1e-12 * scale {
            return config_error(format!(
                "initial hexagon is not origin-symmetric: s{} = {} but s{} = {}",
                j + 1,
                s[j],
                j + 4,
                s[j + 3],
            ));
        }
    }
    let l = e0.side_lengths();
    for (j, &lj) in l.iter().enumerate() {
        if lj <= 1e-12 * scale {
            return config_error(format!(
                "initial hexagon is degenerate: side {} has length {lj}",
                j + 1,
            ));
        }
    }
    let e = DiscreteHexagon::discretize(e0, eps).map_err(|_| FlowError::Config {
        message: format!("no lattice cell fits inside the initial hexagon at eps = {eps}"),
    })?;
    let env = e.envelope().map_err(|err| FlowError::Config {
        message: format!("discretized envelope is invalid: {err}"),
    })?;
    let dh = hausdorff_distance(&env, e0);
    if dh >= eps {
        return config_error(format!(
            "discretization moves the boundary by {dh:.3e} ≥ eps = {eps:.3e}; \
             the initial hexagon is too small for this resolution",
        ));
    }
    Ok(e)
}

/// Choose the plan for one state under the configured stepper. Tie flags
/// always come from the closed-form tie window, whichever stepper picks the
/// layer counts.
fn plan_for(
    state: &DiscreteHexagon,
    gamma: f64,
    opts: &FlowOptions,
) -> Result<StepPlan, FlowError> {
    let l = state.side_lengths();
    let closed = optimal_layers_with(&l, gamma, state.eps(), opts.step);
    match opts.stepper {
        Stepper::ClosedForm => Ok(closed),
        Stepper::BruteForce => {
            let max_layers = opts
                .brute_max_layers
                .unwrap_or_else(|| *state.side_cell_counts().iter().max().unwrap());
            let outcome = brute_force_step(state, gamma, max_layers.max(1))?;
            Ok(StepPlan {
                n: outcome.plan,
                ..closed
            })
        }
    }
}

fn record_for(state: &DiscreteHexagon, plan: &StepPlan, k: usize, tau: f64, gamma: f64) -> FlowRecord {
    FlowRecord {
        k,
        t: k as f64 * tau,
        s: state.envelope_supports(),
        l: state.side_lengths(),
        n: plan.n,
        tie: plan.tie,
        perimeter: state.perimeter_energy(),
        step_energy: reduced_energy(&plan.n, &state.side_lengths(), gamma, state.eps()),
    }
}

/// Run the discrete evolution from `e0` with default options; see
/// [`run_with`].
pub fn run(
    e0: &WulffHexagon,
    eps: f64,
    gamma: f64,
    t_max: f64,
    stepper: Stepper,
) -> Result<Trajectory, FlowError> {
    let opts = FlowOptions {
        stepper,
        ..FlowOptions::until(t_max)
    };
    run_with(e0, eps, gamma, &opts)
}

/// Run the discrete evolution: discretize `e0` at resolution ε, then peel
/// layers step by step at time step τ = γε until the state pins, a side is
/// about to vanish, or the horizon is reached.
///
/// Preconditions (verified, violations return [`FlowError::Config`]):
/// ε, γ, `t_max` positive and finite; `e0` origin-symmetric and
/// nondegenerate; the discretization nonempty and within Hausdorff distance
/// ε of `e0`.
pub fn run_with(
    e0: &WulffHexagon,
    eps: f64,
    gamma: f64,
    opts: &FlowOptions,
) -> Result<Trajectory, FlowError> {
    if !(opts.t_max > 0.0 && opts.t_max.is_finite()) {
        return config_error(format!(
            "t_max must be positive and finite, got {}",
            opts.t_max
        ));
    }
    let mut state = validated_start(e0, eps, gamma)?;
    let tau = gamma * eps;
    let initial_offsets = state.offsets();
    let mut records = Vec::new();
    let mut k = 0usize;

    let terminal = loop {
        let plan = plan_for(&state, gamma, opts)?;
        records.push(record_for(&state, &plan, k, tau, gamma));
        if plan.is_pinned() {
            break FlowTerminal::Pinned;
        }
        if (k + 1) as f64 * tau > opts.t_max || k + 1 > opts.max_steps {
            break FlowTerminal::MaxSteps;
        }
        match apply_plan(&state, &plan) {
            Ok(next) => state = next,
            Err(StepError::SideVanished { side }) => {
                break FlowTerminal::SideVanished { side };
            }
        }
        k += 1;
    };

    Ok(Trajectory {
        eps,
        gamma,
        tau,
        initial_offsets,
        records,
        terminal,
    })
}

/// Horizon heuristic: four times the crystalline extinction time of the
/// regular hexagon inscribed in `e0` (apothem = smallest support).
pub fn default_horizon(e0: &WulffHexagon) -> f64 {
    let rho = e0.supports().iter().cloned().fold(f64::INFINITY, f64::min);
    let side = 2.0 / SQRT3 * rho;
    4.0 * regular_crystalline_extinction(side)
}

/// One branch of a tie-forking exploration.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BranchRun {
    /// One letter per tie-bearing step: 'L' when the lower plan was taken,
    /// 'U' for the upper. Empty when no step had a tie.
    pub label: String,
    pub trajectory: Trajectory,
}

/// Explore both tie resolutions over a bounded horizon of `max_steps` steps.
///
/// At every step whose closed-form plan has at least one flagged side, the
/// evolution forks: one branch resolves all that step's ties low, the other
/// high. Forking stops once `max_branches` leaves exist; further ties follow
/// the lower policy. Branches are returned in depth-first order, lower
/// before upper, so the first entry is the all-lower (default-policy) run.
pub fn run_branches(
    e0: &WulffHexagon,
    eps: f64,
    gamma: f64,
    max_steps: usize,
    step: StepOptions,
    max_branches: usize,
) -> Result<Vec<BranchRun>, FlowError> {
    let start = validated_start(e0, eps, gamma)?;
    let tau = gamma * eps;
    let initial_offsets = start.offsets();
    let mut out = Vec::new();
    let mut budget = max_branches.max(1) - 1; // extra leaves allowed beyond the first

    struct Frame {
        state: DiscreteHexagon,
        k: usize,
        label: String,
        records: Vec<FlowRecord>,
    }
    let mut stack = vec![Frame {
        state: start,
        k: 0,
        label: String::new(),
        records: Vec::new(),
    }];

    while let Some(mut frame) = stack.pop() {
        let terminal = loop {
            let l = frame.state.side_lengths();
            let lower = optimal_layers_with(
                &l,
                gamma,
                eps,
                StepOptions {
                    tie_policy: TiePolicy::Lower,
                    ..step
                },
            );
            let has_tie = lower.tie.iter().any(|&t| t);
            let plan = if has_tie && budget > 0 {
                budget -= 1;
                let upper = optimal_layers_with(
                    &l,
                    gamma,
                    eps,
                    StepOptions {
                        tie_policy: TiePolicy::Upper,
                        ..step
                    },
                );
                // Defer the upper branch; continue here with the lower.
                let mut upper_records = frame.records.clone();
                upper_records.push(record_for(&frame.state, &upper, frame.k, tau, gamma));
                let upper_frame = match apply_plan(&frame.state, &upper) {
                    Ok(next) => Some(Frame {
                        state: next,
                        k: frame.k + 1,
                        label: format!("{}U", frame.label),
                        records: upper_records.clone(),
                    }),
                    Err(StepError::SideVanished { side }) => {
                        out.push(BranchRun {
                            label: format!("{}U", frame.label),
                            trajectory: Trajectory {
                                eps,
                                gamma,
                                tau,
                                initial_offsets,
                                records: upper_records,
                                terminal: FlowTerminal::SideVanished { side },
                            },
                        });
                        None
                    }
                };
                if let Some(f) = upper_frame {
                    stack.push(f);
                }
                frame.label.push('L');
                lower
            } else {
                lower
            };

            frame
                .records
                .push(record_for(&frame.state, &plan, frame.k, tau, gamma));
            if plan.is_pinned() {
                break FlowTerminal::Pinned;
            }
            if frame.k + 1 > max_steps {
                break FlowTerminal::MaxSteps;
            }
            match apply_plan(&frame.state, &plan) {
                Ok(next) => frame.state = next,
                Err(StepError::SideVanished { side }) => {
                    break FlowTerminal::SideVanished { side };
                }
            }
            frame.k += 1;
        };
        out.push(BranchRun {
            label: frame.label,
            trajectory: Trajectory {
                eps,
                gamma,
                tau,
                initial_offsets,
                records: frame.records,
                terminal,
            },
        });
    }
    // Depth-first, lower-first: the stack interleaves; sort by label for a
    // stable, readable order (all-lower run first).
    out.sort_by(|a, b| a.label.cmp(&b.label));
    Ok(out)
}

/// Piecewise-affine interpolation of recorded envelope supports.
#[derive(Clone, Debug, PartialEq)]
pub struct AffineTrajectory {
    times: Vec<f64>,
    knots: Vec<[f64; 6]>,
}

impl AffineTrajectory {
    /// Supports at time `t`, affine between records and clamped outside the
    /// recorded range.
    pub fn sample(&self, t: f64) -> [f64; 6] {
        if t <= self.times[0] {
            return self.knots[0];
        }
        let last = self.times.len() - 1;
        if t >= self.times[last] {
            return self.knots[last];
        }
        let hi = self.times.partition_point(|&v| v <= t);
        let (t0, t1) = (self.times[hi - 1], self.times[hi]);
        let w = (t - t0) / (t1 - t0);
        std::array::from_fn(|j| self.knots[hi - 1][j] + w * (self.knots[hi][j] - self.knots[hi - 1][j]))
    }

    /// First recorded time.
    pub fn start(&self) -> f64 {
        self.times[0]
    }

    /// Last recorded time.
    pub fn end(&self) -> f64 {
        *self.times.last().unwrap()
    }
}

/// The affine interpolant s̄ of a trajectory's envelope supports.
pub fn interpolate_affine(traj: &Trajectory) -> AffineTrajectory {
    assert!(!traj.records.is_empty(), "trajectory has no records");
    AffineTrajectory {
        times: traj.records.iter().map(|r| r.t).collect(),
        knots: traj.records.iter().map(|r| r.s).collect(),
    }
}

/// Sup-distance between a discrete trajectory and a reference at one
/// resolution.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ConvergenceRow {
    pub eps: f64,
    /// sup over the sampled window of max_j |s̄^ε_j(t) − s^ref_j(t)|.
    pub sup_gap: f64,
}

/// Run the closed-form flow at each resolution and measure the uniform
/// distance of its affine interpolant to `reference` over `window`, sampled
/// at `samples`+1 evenly spaced times.
pub fn convergence_study<F: Fn(f64) -> [f64; 6]>(
    e0: &WulffHexagon,
    gamma: f64,
    eps_list: &[f64],
    reference: F,
    window: (f64, f64),
    samples: usize,
) -> Result<Vec<ConvergenceRow>, FlowError> {
    assert!(window.1 > window.0 && samples > 0);
    let mut rows = Vec::new();
    for &eps in eps_list {
        let opts = FlowOptions::until(window.1 + 20.0 * gamma * eps);
        let traj = run_with(e0, eps, gamma, &opts)?;
        let affine = interpolate_affine(&traj);
        let mut sup = 0.0f64;
        for i in 0..=samples {
            let t = window.0 + (window.1 - window.0) * i as f64 / samples as f64;
            let s_eps = affine.sample(t);
            let s_ref = reference(t);
            for j in 0..6 {
                sup = sup.max((s_eps[j] - s_ref[j]).abs());
            }
        }
        rows.push(ConvergenceRow { eps, sup_gap: sup });
    }
    Ok(rows)
}
