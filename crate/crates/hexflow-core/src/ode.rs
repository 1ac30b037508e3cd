//! Event-driven integration of the quantized limit dynamics and of the
//! crystalline comparison flow with natural mobility.
//!
//! The quantized system moves each side of an origin-symmetric hexagon with
//! normal velocity (√3/2)(1/γ)·⌊αγ/L_i⌋. Between integer crossings of any
//! αγ/L_i every velocity is constant, so the trajectory is exactly piecewise
//! affine and event times solve linear equations — no time stepping is
//! involved. The crystalline flow replaces the floor by the identity,
//! ṡ_i = −(8/(3√3))/L_i, and is integrated with an adaptive embedded
//! Runge–Kutta pair since its right-hand side is genuinely nonlinear.
//!
//! Side indices in errors and terminals are 1-based, matching the rest of
//! the crate.

use crate::lattice::{ALPHA_HEX, PHI_HEX_OF_NORMAL, SQRT3};
use serde::{Deserialize, Serialize};

/// Side lengths L_j = (2/√3)(s_{j−1} + s_{j+1} − s_j), unclamped.
pub fn side_lengths_from_supports(s: &[f64; 6]) -> [f64; 6] {
    std::array::from_fn(|j| (2.0 / SQRT3) * (s[(j + 5) % 6] + s[(j + 1) % 6] - s[j]))
}

/// Supports of the origin-symmetric hexagon with the given side lengths:
/// s_j = (√3/4)(L_{j−1} + L_{j+1}).
///
/// Inverts [`side_lengths_from_supports`] exactly when L_{j+3} = L_j; for
/// non-symmetric input the result solves no support system (the inverse
/// problem is underdetermined up to translation), so callers must pass
/// origin-symmetric data.
pub fn supports_from_symmetric_lengths(l: &[f64; 6]) -> [f64; 6] {
    std::array::from_fn(|j| (SQRT3 / 4.0) * (l[(j + 5) % 6] + l[(j + 1) % 6]))
}

/// What to do when the dynamics reaches a state whose continuation is not
/// unique (some αγ/L_i sits exactly on an integer with zero drift).
#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PlateauPolicy {
    /// Stop and report the velocity intervals (default).
    #[default]
    Report,
    /// For the motionless plateau (all levels zero): hold the hexagon
    /// constant until the given absolute time, then continue along the
    /// strictly shrinking branch. Mirrors the one-parameter family of
    /// solutions admitted by the singular datum L ≡ αγ.
    HoldThenShrink { hold_until: f64 },
}

/// Tuning knobs for [`integrate_quantized_with`].
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct QuantizedOptions {
    /// Integration horizon.
    pub t_max: f64,
    /// A side is declared vanishing when it falls below this fraction of the
    /// smallest initial side. Events accumulate at extinction (each integer
    /// level of αγ/L is one event), so integration stops at the threshold and
    /// extrapolates the remaining sliver; the extrapolation error is
    /// O(l_stop²/(αγ)).
    pub l_stop_rel: f64,
    /// Hard cap on the number of events.
    pub max_events: usize,
    /// Relative tolerance for detecting αγ/L_i exactly on an integer.
    pub integer_tol: f64,
    /// Continuation policy at non-unique states.
    pub plateau: PlateauPolicy,
}

impl QuantizedOptions {
    /// Defaults with the given horizon.
    pub fn until(t_max: f64) -> Self {
        QuantizedOptions {
            t_max,
            l_stop_rel: 1e-4,
            max_events: 100_000,
            integer_tol: 1e-9,
            plateau: PlateauPolicy::Report,
        }
    }
}

/// One breakpoint of the piecewise-affine quantized trajectory. The floor
/// levels `m` are the ones active from `t` onward (right-continuous).
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct OdeRecord {
    pub event_index: usize,
    pub t: f64,
    pub s: [f64; 6],
    pub l: [f64; 6],
    pub m: [i64; 6],
}

impl OdeRecord {
    /// Anisotropic perimeter of the hexagon at this record.
    pub fn perimeter(&self) -> f64 {
        PHI_HEX_OF_NORMAL * self.l.iter().sum::<f64>()
    }
}

/// Velocity interval of one side at a non-unique state: ṡ may lie anywhere
/// in [s_dot_lower, s_dot_upper] (both ≤ 0).
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct NonUniqueSide {
    /// 1-based side index.
    pub side: usize,
    pub s_dot_lower: f64,
    pub s_dot_upper: f64,
}

/// Why the quantized integration stopped.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum OdeTerminal {
    /// All floor levels are zero: the solution is constant forever.
    Pinned,
    /// A side length crossed the stop threshold; `t` extrapolates the
    /// remaining sliver to actual extinction.
    Extinction { side: usize, t: f64 },
    /// Horizon reached.
    MaxTime,
    /// Event cap reached.
    MaxEvents,
    /// A persistent exact-integer plateau makes the continuation non-unique;
    /// the velocity intervals at time `t` are reported, not resolved.
    NonUniqueVelocity { t: f64, sides: Vec<NonUniqueSide> },
}

/// Piecewise-affine trajectory of the quantized system.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct QuantizedTrajectory {
    pub gamma: f64,
    pub records: Vec<OdeRecord>,
    pub terminal: OdeTerminal,
}

impl QuantizedTrajectory {
    /// Affine interpolation of (s, L) at time `t`, clamped to the recorded
    /// time range.
    pub fn sample(&self, t: f64) -> ([f64; 6], [f64; 6]) {
        let records = &self.records;
        let first = records.first().expect("trajectory has at least one record");
        if t <= first.t {
            return (first.s, first.l);
        }
        let last = records.last().unwrap();
        if t >= last.t {
            return (last.s, last.l);
        }
        // Locate the segment: records are sorted by time.
        let hi = records.partition_point(|r| r.t <= t);
        let a = &records[hi - 1];
        let b = &records[hi];
        let w = (t - a.t) / (b.t - a.t);
        let s = std::array::from_fn(|j| a.s[j] + w * (b.s[j] - a.s[j]));
        let l = std::array::from_fn(|j| a.l[j] + w * (b.l[j] - a.l[j]));
        (s, l)
    }

    /// Extinction time, when the trajectory reached one.
    pub fn extinction_time(&self) -> Option<f64> {
        match self.terminal {
            OdeTerminal::Extinction { t, .. } => Some(t),
            _ => None,
        }
    }

    /// Time of the last record.
    pub fn final_time(&self) -> f64 {
        self.records.last().map(|r| r.t).unwrap_or(0.0)
    }
}

/// How one at-integer side behaves under a candidate level assignment.
#[derive(Clone, Copy, PartialEq)]
enum SideFate {
    Strict,
    Plateau,
    Bad,
}

/// Outcome of resolving right-continuous levels at one instant.
enum Resolution {
    Levels([i64; 6]),
    Hold { m: [i64; 6] },
    NonUnique(Vec<NonUniqueSide>),
}

/// Classify the at-integer side `j` under assignment `m`: does choosing this
/// level produce a consistent floor on the following time interval?
///
/// With L̇_j = −d_j/γ and d_j = m_{j−1} + m_{j+1} − m_j (an exact integer),
/// x_j = αγ/L_j moves opposite to L_j. Choosing the upper level n requires
/// x non-decreasing (d_j ≥ 0); choosing n−1 requires x strictly decreasing
/// (d_j < 0). d_j = 0 keeps x pinned on the integer — a plateau.
fn classify(upper_chosen: bool, d: i64) -> SideFate {
    if d == 0 {
        SideFate::Plateau
    } else if upper_chosen == (d > 0) {
        SideFate::Strict
    } else {
        SideFate::Bad
    }
}

/// Resolve the floor levels at the current instant. `at_int[j]` holds the
/// integer n_j when x_j sits exactly on it; other sides keep `base[j]`.
fn resolve_levels(
    base: [i64; 6],
    at_int: [Option<i64>; 6],
    gamma: f64,
    skip_plateau: bool,
    policy: PlateauPolicy,
    t: f64,
) -> Resolution {
    let sides: Vec<usize> = (0..6).filter(|&j| at_int[j].is_some()).collect();
    if sides.is_empty() {
        return Resolution::Levels(base);
    }
    let mut strict: Vec<[i64; 6]> = Vec::new();
    let mut holdable: Option<[i64; 6]> = None;
    let mut any_plateau = false;
    for mask in 0u32..1 << sides.len() {
        let mut m = base;
        for (bit, &j) in sides.iter().enumerate() {
            let n = at_int[j].unwrap();
            m[j] = if mask >> bit & 1 == 1 { n } else { n - 1 };
        }
        let mut ok = true;
        let mut plateau_here = false;
        for (bit, &j) in sides.iter().enumerate() {
            let d = m[(j + 5) % 6] + m[(j + 1) % 6] - m[j];
            match classify(mask >> bit & 1 == 1, d) {
                SideFate::Strict => {}
                SideFate::Plateau => plateau_here = true,
                SideFate::Bad => {
                    ok = false;
                    break;
                }
            }
        }
        if !ok {
            continue;
        }
        if plateau_here {
            any_plateau = true;
            if m == [0; 6] {
                holdable = Some(m);
            }
        } else {
            strict.push(m);
        }
    }
    let unique_strict = strict.len() == 1 && (!any_plateau || skip_plateau);
    if unique_strict {
        return Resolution::Levels(strict[0]);
    }
    if !skip_plateau {
        if let (PlateauPolicy::HoldThenShrink { hold_until }, Some(m)) = (policy, holdable) {
            if hold_until > t && strict.len() <= 1 {
                return Resolution::Hold { m };
            }
        }
    }
    let report = sides
        .iter()
        .map(|&j| {
            let n = at_int[j].unwrap();
            NonUniqueSide {
                side: j + 1,
                s_dot_lower: -(SQRT3 / (2.0 * gamma)) * n as f64,
                s_dot_upper: -(SQRT3 / (2.0 * gamma)) * (n - 1) as f64,
            }
        })
        .collect();
    Resolution::NonUnique(report)
}

/// Integrate the quantized dynamics from the given supports with default
/// options; see [`integrate_quantized_with`].
pub fn integrate_quantized(s0: [f64; 6], gamma: f64, t_max: f64) -> QuantizedTrajectory {
    integrate_quantized_with(s0, gamma, &QuantizedOptions::until(t_max))
}

/// Exact event-driven integration of ṡ_i = −(√3/2)(1/γ)·⌊αγ/L_i⌋.
///
/// Between events every s_i is affine; events are the earliest times some
/// αγ/L_i crosses an integer or some L_i hits the stop threshold. Levels are
/// right-continuous: at each event every consistent {n−1, n} assignment for
/// the crossing sides is examined, and integration continues only when
/// exactly one assignment is strictly consistent and none rests on an
/// exact-integer plateau — otherwise the terminal reports the velocity
/// intervals (see [`PlateauPolicy`] for the singular-datum continuation).
///
/// Panics if γ ≤ 0 or any initial side length is not strictly positive.
pub fn integrate_quantized_with(
    s0: [f64; 6],
    gamma: f64,
    opts: &QuantizedOptions,
) -> QuantizedTrajectory {
    assert!(gamma > 0.0, "gamma must be positive");
    let l0 = side_lengths_from_supports(&s0);
    assert!(
        l0.iter().all(|&l| l > 0.0),
        "initial side lengths must be positive, got {l0:?}"
    );
    let l_stop = opts.l_stop_rel * l0.iter().cloned().fold(f64::INFINITY, f64::min);

    let mut s = s0;
    let mut t = 0.0f64;
    let mut records: Vec<OdeRecord> = Vec::new();
    let mut skip_plateau = false;
    let mut event_index = 0usize;

    loop {
        if event_index > opts.max_events {
            return QuantizedTrajectory {
                gamma,
                records,
                terminal: OdeTerminal::MaxEvents,
            };
        }
        let l = side_lengths_from_supports(&s);

        // Detect exact-integer ratios and compute base floor levels.
        let mut base = [0i64; 6];
        let mut at_int = [None; 6];
        for j in 0..6 {
            let x = ALPHA_HEX * gamma / l[j];
            let nearest = x.round();
            if nearest >= 1.0 && (x - nearest).abs() <= opts.integer_tol * (1.0 + x.abs()) {
                at_int[j] = Some(nearest as i64);
                base[j] = nearest as i64; // overwritten by the resolution
            } else {
                base[j] = x.floor() as i64;
            }
        }

        let m = match resolve_levels(base, at_int, gamma, skip_plateau, opts.plateau, t) {
            Resolution::Levels(m) => m,
            Resolution::Hold { m } => {
                let hold_until = match opts.plateau {
                    PlateauPolicy::HoldThenShrink { hold_until } => hold_until,
                    PlateauPolicy::Report => unreachable!("hold requires the hold policy"),
                };
                records.push(OdeRecord {
                    event_index,
                    t,
                    s,
                    l,
                    m,
                });
                event_index += 1;
                let until = hold_until.min(opts.t_max);
                if until >= opts.t_max {
                    records.push(OdeRecord {
                        event_index,
                        t: opts.t_max,
                        s,
                        l,
                        m,
                    });
                    return QuantizedTrajectory {
                        gamma,
                        records,
                        terminal: OdeTerminal::MaxTime,
                    };
                }
                t = until;
                skip_plateau = true;
                continue;
            }
            Resolution::NonUnique(sides) => {
                records.push(OdeRecord {
                    event_index,
                    t,
                    s,
                    l,
                    m: base,
                });
                return QuantizedTrajectory {
                    gamma,
                    records,
                    terminal: OdeTerminal::NonUniqueVelocity { t, sides },
                };
            }
        };

        records.push(OdeRecord {
            event_index,
            t,
            s,
            l,
            m,
        });
        event_index += 1;

        if m == [0; 6] {
            return QuantizedTrajectory {
                gamma,
                records,
                terminal: OdeTerminal::Pinned,
            };
        }

        // Constant slopes on this segment.
        let s_dot: [f64; 6] = std::array::from_fn(|j| -(SQRT3 / (2.0 * gamma)) * m[j] as f64);
        let d: [i64; 6] = std::array::from_fn(|j| m[(j + 5) % 6] + m[(j + 1) % 6] - m[j]);

        // Earliest event: an integer crossing of some αγ/L_j or a stop-
        // threshold crossing. All candidate durations solve linear equations.
        // The segment length is tracked directly (not as a difference of
        // absolute times): near extinction durations shrink like 1/m³ and
        // rounding them through `t` would wreck the landing precision.
        let mut duration = f64::INFINITY;
        let mut vanish: Option<usize> = None;
        for j in 0..6 {
            if d[j] > 0 {
                // L_j decreases: next crossing is at level m_j + 1, the stop
                // threshold possibly earlier.
                let rate = d[j] as f64 / gamma;
                let l_target = ALPHA_HEX * gamma / (m[j] + 1) as f64;
                if l_target > l_stop {
                    let dur = (l[j] - l_target).max(0.0) / rate;
                    if dur < duration {
                        duration = dur;
                        vanish = None;
                    }
                } else {
                    let dur = (l[j] - l_stop).max(0.0) / rate;
                    if dur < duration {
                        duration = dur;
                        vanish = Some(j);
                    }
                }
            } else if d[j] < 0 && m[j] >= 1 {
                // L_j grows: x_j sinks to level m_j from above.
                let rate = (-d[j]) as f64 / gamma;
                let l_target = ALPHA_HEX * gamma / m[j] as f64;
                let dur = (l_target - l[j]).max(0.0) / rate;
                if dur < duration {
                    duration = dur;
                    vanish = None;
                }
            }
        }

        if t + duration >= opts.t_max {
            let dt = opts.t_max - t;
            let s_end = std::array::from_fn(|j| s[j] + s_dot[j] * dt);
            let l_end = side_lengths_from_supports(&s_end);
            records.push(OdeRecord {
                event_index,
                t: opts.t_max,
                s: s_end,
                l: l_end,
                m,
            });
            return QuantizedTrajectory {
                gamma,
                records,
                terminal: OdeTerminal::MaxTime,
            };
        }

        s = std::array::from_fn(|j| s[j] + s_dot[j] * duration);
        t += duration;

        if let Some(j) = vanish {
            let l_end = side_lengths_from_supports(&s);
            records.push(OdeRecord {
                event_index,
                t,
                s,
                l: l_end,
                m,
            });
            // Extrapolate the sliver below the threshold at the current
            // rate. The true remainder is smaller (the side keeps speeding
            // up), by at most ~γ·l_stop²/(2αγ) — negligible for any
            // reasonable threshold.
            let t_ext = t + l_end[j].max(0.0) * gamma / d[j] as f64;
            return QuantizedTrajectory {
                gamma,
                records,
                terminal: OdeTerminal::Extinction { side: j + 1, t: t_ext },
            };
        }
    }
}

/// Trigamma function ψ₁(x) = Σ_{k≥0} 1/(x+k)² for x > 0.
///
/// Recurrence ψ₁(x) = ψ₁(x+1) + 1/x² pushes the argument above 10, where the
/// asymptotic series in Bernoulli numbers is accurate to ~1e−15.
pub fn trigamma(x: f64) -> f64 {
    assert!(x > 0.0, "trigamma needs a positive argument");
    let mut acc = 0.0;
    let mut y = x;
    while y < 15.0 {
        acc += 1.0 / (y * y);
        y += 1.0;
    }
    let inv = 1.0 / y;
    let inv2 = inv * inv;
    // 1/y + 1/(2y²) + 1/(6y³) − 1/(30y⁵) + 1/(42y⁷) − 1/(30y⁹) + 5/(66y¹¹)
    let tail = inv
        + 0.5 * inv2
        + inv * inv2
            * (1.0 / 6.0
                - inv2 * (1.0 / 30.0 - inv2 * (1.0 / 42.0 - inv2 * (1.0 / 30.0 - inv2 * 5.0 / 66.0))));
    acc + tail
}

/// Extinction time of the quantized flow for regular data, in closed form,
/// or `None` when L₀ ≥ αγ (total pinning).
///
/// Level n is active while L ∈ (αγ/(n+1), αγ/n], where L̇ = −n/γ, so the
/// full level-n segment lasts αγ²/(n²(n+1)) and the telescoped tail is
/// αγ²·(ψ₁(m+1) − 1/(m+1)).
pub fn regular_quantized_extinction(l0: f64, gamma: f64) -> Option<f64> {
    assert!(l0 > 0.0 && gamma > 0.0);
    let a = ALPHA_HEX * gamma;
    if l0 >= a {
        return None;
    }
    let m0 = (a / l0).floor() as i64;
    let m = m0 as f64;
    let first = gamma * (l0 - a / (m + 1.0)) / m;
    let tail = ALPHA_HEX * gamma * gamma * (trigamma(m + 1.0) - 1.0 / (m + 1.0));
    Some(first + tail)
}

/// Extinction time of the crystalline flow for regular data:
/// L·L̇ = −α integrates to T = L₀²/(2α).
pub fn regular_crystalline_extinction(l0: f64) -> f64 {
    l0 * l0 / (2.0 * ALPHA_HEX)
}

/// Tuning knobs for [`integrate_crystalline_with`].
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct CrystallineOptions {
    pub t_max: f64,
    /// Relative tolerance of the embedded Runge–Kutta pair.
    pub rel_tol: f64,
    /// Absolute tolerance floor, scaled by the largest initial side.
    pub abs_tol_rel: f64,
    /// Stop threshold as a fraction of the largest initial side.
    pub l_stop_rel: f64,
    pub max_steps: usize,
}

impl CrystallineOptions {
    /// Defaults with the given horizon. The default step tolerance 1e−12 is
    /// tighter than the 1e−9 accuracy asked of the trajectory because local
    /// errors accumulate over the run; it keeps the first integral of the
    /// regular flow conserved to better than 1e−10 end to end.
    pub fn until(t_max: f64) -> Self {
        CrystallineOptions {
            t_max,
            rel_tol: 1e-12,
            abs_tol_rel: 1e-15,
            l_stop_rel: 1e-6,
            max_steps: 1_000_000,
        }
    }
}

/// One accepted integration step of the crystalline flow.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct CrystallineRecord {
    pub t: f64,
    pub l: [f64; 6],
}

impl CrystallineRecord {
    /// Supports of the origin-symmetric hexagon at this record.
    pub fn supports(&self) -> [f64; 6] {
        supports_from_symmetric_lengths(&self.l)
    }

    /// Anisotropic perimeter at this record.
    pub fn perimeter(&self) -> f64 {
        PHI_HEX_OF_NORMAL * self.l.iter().sum::<f64>()
    }
}

/// Why the crystalline integration stopped.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum CrystallineTerminal {
    /// The hexagon shrank to the stop threshold; `t` extrapolates to the
    /// self-similar extinction.
    Extinction { t: f64 },
    MaxTime,
    MaxSteps,
}

/// Trajectory of the crystalline comparison flow.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CrystallineTrajectory {
    pub records: Vec<CrystallineRecord>,
    pub terminal: CrystallineTerminal,
}

impl CrystallineTrajectory {
    /// Linear interpolation of L at time `t`, clamped to the recorded range.
    /// Records are one accepted integrator step apart, so the interpolation
    /// error is of the same order as the step error itself.
    pub fn sample_l(&self, t: f64) -> [f64; 6] {
        let records = &self.records;
        let first = records.first().expect("trajectory has at least one record");
        if t <= first.t {
            return first.l;
        }
        let last = records.last().unwrap();
        if t >= last.t {
            return last.l;
        }
        let hi = records.partition_point(|r| r.t <= t);
        let a = &records[hi - 1];
        let b = &records[hi];
        let w = (t - a.t) / (b.t - a.t);
        std::array::from_fn(|j| a.l[j] + w * (b.l[j] - a.l[j]))
    }

    /// Extinction time, when the trajectory reached one.
    pub fn extinction_time(&self) -> Option<f64> {
        match self.terminal {
            CrystallineTerminal::Extinction { t } => Some(t),
            _ => None,
        }
    }
}

/// L̇_j = −α(1/L_{j−1} + 1/L_{j+1} − 1/L_j): the side-length form of
/// ṡ_i = −(2/√3)(4/3)/L_i under L_j = (2/√3)(s_{j−1}+s_{j+1}−s_j).
fn crystalline_rhs(l: &[f64; 6]) -> [f64; 6] {
    std::array::from_fn(|j| {
        -ALPHA_HEX * (1.0 / l[(j + 5) % 6] + 1.0 / l[(j + 1) % 6] - 1.0 / l[j])
    })
}

/// One Dormand–Prince 5(4) step: returns the 5th-order solution and the
/// embedded error estimate.
fn dp45_step(l: &[f64; 6], h: f64) -> ([f64; 6], [f64; 6]) {
    #[rustfmt::skip]
    const A: [[f64; 6]; 6] = [
        [1.0 / 5.0, 0.0, 0.0, 0.0, 0.0, 0.0],
        [3.0 / 40.0, 9.0 / 40.0, 0.0, 0.0, 0.0, 0.0],
        [44.0 / 45.0, -56.0 / 15.0, 32.0 / 9.0, 0.0, 0.0, 0.0],
        [19372.0 / 6561.0, -25360.0 / 2187.0, 64448.0 / 6561.0, -212.0 / 729.0, 0.0, 0.0],
        [9017.0 / 3168.0, -355.0 / 33.0, 46732.0 / 5247.0, 49.0 / 176.0, -5103.0 / 18656.0, 0.0],
        [35.0 / 384.0, 0.0, 500.0 / 1113.0, 125.0 / 192.0, -2187.0 / 6784.0, 11.0 / 84.0],
    ];
    const B5: [f64; 7] = [
        35.0 / 384.0,
        0.0,
        500.0 / 1113.0,
        125.0 / 192.0,
        -2187.0 / 6784.0,
        11.0 / 84.0,
        0.0,
    ];
    const B4: [f64; 7] = [
        5179.0 / 57600.0,
        0.0,
        7571.0 / 16695.0,
        393.0 / 640.0,
        -92097.0 / 339200.0,
        187.0 / 2100.0,
        1.0 / 40.0,
    ];
    let mut k = [[0.0f64; 6]; 7];
    k[0] = crystalline_rhs(l);
    for stage in 1..7 {
        let mut y = *l;
        for (i, row) in A[stage - 1].iter().enumerate().take(stage) {
            for j in 0..6 {
                y[j] += h * row * k[i][j];
            }
        }
        k[stage] = crystalline_rhs(&y);
    }
    let mut y5 = *l;
    let mut err = [0.0f64; 6];
    for i in 0..7 {
        for j in 0..6 {
            y5[j] += h * B5[i] * k[i][j];
            err[j] += h * (B5[i] - B4[i]) * k[i][j];
        }
    }
    (y5, err)
}

/// Integrate the crystalline flow from the given side lengths with default
/// options; see [`integrate_crystalline_with`].
pub fn integrate_crystalline(l0: [f64; 6], t_max: f64) -> CrystallineTrajectory {
    integrate_crystalline_with(l0, &CrystallineOptions::until(t_max))
}

/// Adaptive Dormand–Prince 5(4) integration of the crystalline flow in
/// side-length form, with side-vanishing detection.
///
/// Short sides move faster (velocity ∝ 1/L), which lengthens them: the flow
/// regularizes toward the self-similar regular shrinkage, all sides vanishing
/// together. Integration stops when the smallest side falls below the stop
/// threshold and extrapolates extinction via the regular first integral
/// L² = L₀² − 2αt.
///
/// Panics if any initial side length is not strictly positive.
pub fn integrate_crystalline_with(
    l0: [f64; 6],
    opts: &CrystallineOptions,
) -> CrystallineTrajectory {
    assert!(
        l0.iter().all(|&l| l > 0.0),
        "initial side lengths must be positive, got {l0:?}"
    );
    let scale = l0.iter().cloned().fold(0.0f64, f64::max);
    let l_stop = opts.l_stop_rel * scale;
    let abs_tol = opts.abs_tol_rel * scale;

    let mut t = 0.0f64;
    let mut l = l0;
    let mut records = vec![CrystallineRecord { t, l }];
    // Initial step guess from the regular time scale L²/(2α).
    let mut h = (scale * scale / (2.0 * ALPHA_HEX) * 1e-3).min(opts.t_max);

    for _ in 0..opts.max_steps {
        if t >= opts.t_max {
            return CrystallineTrajectory {
                records,
                terminal: CrystallineTerminal::MaxTime,
            };
        }
        h = h.min(opts.t_max - t);
        let (l_new, err) = dp45_step(&l, h);
        let err_norm = (0..6)
            .map(|j| {
                let sc = abs_tol + opts.rel_tol * l[j].abs().max(l_new[j].abs());
                (err[j] / sc).powi(2)
            })
            .sum::<f64>()
            .sqrt()
            / 6f64.sqrt();
        if err_norm <= 1.0 && l_new.iter().all(|&v| v.is_finite()) {
            let min_new = l_new.iter().cloned().fold(f64::INFINITY, f64::min);
            if min_new <= l_stop {
                // Locate the threshold crossing linearly inside the step
                // (the step is tiny here: the right-hand side blows up),
                // then extrapolate the remaining sliver self-similarly.
                let min_old = l.iter().cloned().fold(f64::INFINITY, f64::min);
                let w = if min_old > min_new {
                    ((min_old - l_stop) / (min_old - min_new)).clamp(0.0, 1.0)
                } else {
                    1.0
                };
                let t_cross = t + w * h;
                let l_cross: [f64; 6] = std::array::from_fn(|j| l[j] + w * (l_new[j] - l[j]));
                records.push(CrystallineRecord {
                    t: t_cross,
                    l: l_cross,
                });
                let l_mean = l_cross.iter().sum::<f64>() / 6.0;
                let t_ext = t_cross + regular_crystalline_extinction(l_mean.max(0.0));
                return CrystallineTrajectory {
                    records,
                    terminal: CrystallineTerminal::Extinction { t: t_ext },
                };
            }
            t += h;
            l = l_new;
            records.push(CrystallineRecord { t, l });
        }
        let grow = if err_norm > 0.0 {
            0.9 * err_norm.powf(-0.2)
        } else {
            5.0
        };
        h *= grow.clamp(0.2, 5.0);
    }
    CrystallineTrajectory {
        records,
        terminal: CrystallineTerminal::MaxSteps,
    }
}

/// One row of the γ→∞ comparison table.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct GammaLimitRow {
    pub gamma: f64,
    pub t_quantized: f64,
    pub t_crystalline: f64,
    /// (T_γ − T_crys)/T_crys; non-negative since the quantized flow is slower.
    pub rel_err: f64,
}

/// Compare quantized and crystalline extinction times for regular data
/// across a γ sweep, in closed form.
///
/// Panics unless L₀ < α·γ for every γ (all quantized flows must move).
pub fn gamma_limit_check(l0: f64, gammas: &[f64]) -> Vec<GammaLimitRow> {
    let t_crystalline = regular_crystalline_extinction(l0);
    gammas
        .iter()
        .map(|&gamma| {
            let t_quantized = regular_quantized_extinction(l0, gamma)
                .expect("gamma_limit_check requires L0 < alpha*gamma (moving data)");
            GammaLimitRow {
                gamma,
                t_quantized,
                t_crystalline,
                rel_err: (t_quantized - t_crystalline) / t_crystalline,
            }
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    const ALPHA: f64 = ALPHA_HEX;

    fn regular_supports(l: f64) -> [f64; 6] {
        supports_from_symmetric_lengths(&[l; 6])
    }

    #[test]
    fn support_length_roundtrip_is_exact_for_symmetric_data() {
        let l = [2.5, 1.0, 1.75, 2.5, 1.0, 1.75];
        let s = supports_from_symmetric_lengths(&l);
        let back = side_lengths_from_supports(&s);
        for j in 0..6 {
            assert_relative_eq!(back[j], l[j], max_relative = 1e-14);
        }
        // Regular data: the support is the apothem (√3/2)·L.
        let s_reg = regular_supports(2.0);
        for v in s_reg {
            assert_relative_eq!(v, SQRT3, max_relative = 1e-15);
        }
    }

    #[test]
    fn threshold_constant_marks_the_sign_change_of_the_layer_tradeoff() {
        // One layer trades a fence saving of 2/3 per cell against a transport
        // cost of (3/8)L/γ per cell: the gain −2/3 + (3/8)L/γ changes sign
        // exactly at L = (16/9)γ.
        for gamma in [0.5, 1.0, 3.7] {
            let gain = |l: f64| -2.0 / 3.0 + 3.0 / 8.0 * l / gamma;
            assert_relative_eq!(gain(ALPHA * gamma), 0.0, epsilon = 1e-15);
            assert!(gain(ALPHA * gamma * (1.0 + 1e-9)) > 0.0);
            assert!(gain(ALPHA * gamma * (1.0 - 1e-9)) < 0.0);
            assert_relative_eq!(ALPHA * gamma, 16.0 / 9.0 * gamma, max_relative = 1e-15);
        }
    }

    #[test]
    fn trigamma_reference_values() {
        let pi2 = std::f64::consts::PI * std::f64::consts::PI;
        assert_relative_eq!(trigamma(1.0), pi2 / 6.0, max_relative = 1e-13);
        assert_relative_eq!(trigamma(2.0), pi2 / 6.0 - 1.0, max_relative = 1e-13);
        assert_relative_eq!(trigamma(0.5), pi2 / 2.0, max_relative = 1e-13);
        for x in [0.3, 1.7, 9.5, 23.0] {
            assert_relative_eq!(
                trigamma(x) - trigamma(x + 1.0),
                1.0 / (x * x),
                max_relative = 1e-12
            );
        }
    }

    #[test]
    fn total_pinning_is_a_constant_one_record_trajectory() {
        let traj = integrate_quantized(regular_supports(3.0), 1.0, 10.0);
        assert_eq!(traj.terminal, OdeTerminal::Pinned);
        assert_eq!(traj.records.len(), 1);
        assert_eq!(traj.records[0].m, [0; 6]);
        let (s, l) = traj.sample(7.3);
        for j in 0..6 {
            assert_relative_eq!(s[j], traj.records[0].s[j]);
            assert_relative_eq!(l[j], 3.0, max_relative = 1e-14);
        }
    }

    #[test]
    fn staircase_slopes_and_event_times_match_the_closed_form() {
        // γ = 9/16 makes αγ = 1: events at L = 1/2, 1/3, 1/4, …
        let gamma = 9.0 / 16.0;
        let traj = integrate_quantized(regular_supports(0.9), gamma, 10.0);
        assert!(matches!(traj.terminal, OdeTerminal::Extinction { .. }));
        assert_eq!(traj.records[0].m, [1; 6]);
        // First segment: L̇ = −1/γ = −16/9 until L = 1/2 at t = 9/40.
        assert_relative_eq!(traj.records[1].t, 9.0 / 40.0, max_relative = 1e-12);
        for j in 0..6 {
            assert_relative_eq!(traj.records[1].l[j], 0.5, max_relative = 1e-10);
        }
        assert_eq!(traj.records[1].m, [2; 6]);
        let (_, l_mid) = traj.sample(0.1125);
        assert_relative_eq!(l_mid[0], 0.9 - 16.0 / 9.0 * 0.1125, max_relative = 1e-12);
        // Second segment: L̇ = −32/9 until L = 1/3, lasting 3/64.
        assert_relative_eq!(
            traj.records[2].t,
            9.0 / 40.0 + 3.0 / 64.0,
            max_relative = 1e-12
        );
        for j in 0..6 {
            assert_relative_eq!(traj.records[2].l[j], 1.0 / 3.0, max_relative = 1e-10);
        }
        // Extinction agrees with the trigamma closed form.
        let t_closed = regular_quantized_extinction(0.9, gamma).unwrap();
        assert_relative_eq!(
            traj.extinction_time().unwrap(),
            t_closed,
            max_relative = 1e-6
        );
    }

    #[test]
    fn event_loop_matches_the_closed_form_extinction_tightly() {
        // The stop-threshold extrapolation misses the true extinction by
        // ~l_stop²/(2α); at l_stop = 1e−3 that is below 3e−7.
        let gamma = 1.0;
        let opts = QuantizedOptions {
            l_stop_rel: 1e-3,
            ..QuantizedOptions::until(10.0)
        };
        let traj = integrate_quantized_with(regular_supports(1.0), gamma, &opts);
        let t_closed = regular_quantized_extinction(1.0, gamma).unwrap();
        let t_loop = traj.extinction_time().unwrap();
        assert!(
            (t_loop - t_closed).abs() < 1e-6,
            "event loop {t_loop} vs closed form {t_closed}"
        );
        // The quantized flow is slower than the crystalline one.
        assert!(t_closed >= regular_crystalline_extinction(1.0));
    }

    #[test]
    fn partial_pinning_holds_short_sides_until_the_switch() {
        // Long sides 1.5·αγ are pinned; short sides 0.6·αγ move one layer.
        // The long sides' lengths shrink at rate 2 while the short lengths
        // stay exactly constant, until L₁ = αγ at T = 4/9.
        let gamma = 1.0;
        let long = 1.5 * ALPHA;
        let short = 0.6 * ALPHA;
        let l0 = [long, short, short, long, short, short];
        let traj = integrate_quantized(supports_from_symmetric_lengths(&l0), gamma, 10.0);
        assert_eq!(traj.records[0].m, [0, 1, 1, 0, 1, 1]);
        let t_switch = gamma * (long - ALPHA * gamma) / 2.0;
        assert_relative_eq!(t_switch, 4.0 / 9.0, max_relative = 1e-14);
        assert_relative_eq!(traj.records[1].t, t_switch, max_relative = 1e-10);
        // Before the switch: short sides exactly constant, long sides affine
        // with slope −2·⌊αγ/L_short⌋/γ = −2.
        let (_, l_mid) = traj.sample(0.2);
        for j in [1, 2, 4, 5] {
            assert_relative_eq!(l_mid[j], short, epsilon = 1e-12);
        }
        assert_relative_eq!(l_mid[0], long - 2.0 * 0.2, max_relative = 1e-12);
        // At the switch the long sides sit at αγ and everything moves.
        assert_relative_eq!(traj.records[1].l[0], ALPHA * gamma, max_relative = 1e-10);
        assert_eq!(traj.records[1].m, [1; 6]);
        // After the switch the short sides shrink at rate 1.
        let dt = 0.05;
        let (_, l_after) = traj.sample(t_switch + dt);
        assert_relative_eq!(l_after[1], short - dt, max_relative = 1e-9);
    }

    #[test]
    fn segments_have_no_interior_level_crossings() {
        // Dense sampling inside every affine segment: the floor levels stay
        // exactly at the recorded values (away from the endpoints).
        let cases: Vec<(f64, [f64; 6])> = vec![
            (9.0 / 16.0, [0.9; 6]),
            (
                1.0,
                [
                    1.5 * ALPHA,
                    0.6 * ALPHA,
                    0.6 * ALPHA,
                    1.5 * ALPHA,
                    0.6 * ALPHA,
                    0.6 * ALPHA,
                ],
            ),
        ];
        for (gamma, l0) in cases {
            let opts = QuantizedOptions {
                l_stop_rel: 1e-2,
                ..QuantizedOptions::until(10.0)
            };
            let traj =
                integrate_quantized_with(supports_from_symmetric_lengths(&l0), gamma, &opts);
            assert!(matches!(traj.terminal, OdeTerminal::Extinction { .. }));
            let records = &traj.records;
            assert!(records.len() > 3);
            for w in records.windows(2) {
                let (a, b) = (&w[0], &w[1]);
                for i in 1..1000 {
                    let t = a.t + (b.t - a.t) * i as f64 / 1000.0;
                    let (_, l) = traj.sample(t);
                    for (lj, mj) in l.iter().zip(&a.m) {
                        let x = ALPHA * gamma / lj;
                        assert_eq!(
                            x.floor() as i64,
                            *mj,
                            "level crossing inside a segment at t = {t}"
                        );
                    }
                }
            }
        }
    }

    #[test]
    fn singular_datum_reports_the_velocity_interval() {
        // All sides exactly at L = αγ: the state can stay put forever or
        // start shrinking — genuinely non-unique.
        let gamma = 1.0;
        let traj = integrate_quantized(regular_supports(ALPHA * gamma), gamma, 5.0);
        match &traj.terminal {
            OdeTerminal::NonUniqueVelocity { t, sides } => {
                assert_eq!(*t, 0.0);
                assert_eq!(sides.len(), 6);
                for side in sides {
                    assert_relative_eq!(side.s_dot_lower, -SQRT3 / 2.0, max_relative = 1e-14);
                    assert_relative_eq!(side.s_dot_upper, 0.0);
                }
            }
            other => panic!("expected NonUniqueVelocity, got {other:?}"),
        }
        assert_eq!(traj.records.len(), 1);
    }

    #[test]
    fn hold_then_shrink_continues_along_the_strict_branch() {
        let gamma = 1.0;
        let hold = 0.25;
        let opts = QuantizedOptions {
            plateau: PlateauPolicy::HoldThenShrink { hold_until: hold },
            ..QuantizedOptions::until(10.0)
        };
        let traj = integrate_quantized_with(regular_supports(ALPHA), gamma, &opts);
        assert!(matches!(traj.terminal, OdeTerminal::Extinction { .. }));
        // Holding segment: levels zero, state constant.
        assert_eq!(traj.records[0].m, [0; 6]);
        let (_, l_during) = traj.sample(hold / 2.0);
        assert_relative_eq!(l_during[0], ALPHA, max_relative = 1e-14);
        // From the hold time on: the strictly shrinking branch.
        assert_eq!(traj.records[1].t, hold);
        assert_eq!(traj.records[1].m, [1; 6]);
        let dt = 0.05;
        let (_, l_after) = traj.sample(hold + dt);
        assert_relative_eq!(l_after[0], ALPHA - dt / gamma, max_relative = 1e-10);
        // Total time = hold + shrink time from exactly L = αγ, which runs
        // the full level-n segments for n = 1, 2, …: αγ²·Σ 1/(n²(n+1))
        // = αγ²(ψ₁(1) − 1).
        let shrink = ALPHA * gamma * gamma * (trigamma(1.0) - 1.0);
        assert_relative_eq!(
            traj.extinction_time().unwrap(),
            hold + shrink,
            max_relative = 1e-4
        );
    }

    #[test]
    fn crystalline_regular_flow_keeps_its_first_integral() {
        let traj = integrate_crystalline([1.0; 6], 1.0);
        for r in &traj.records {
            for j in 0..6 {
                assert_relative_eq!(
                    r.l[j] * r.l[j] + 2.0 * ALPHA * r.t,
                    1.0,
                    epsilon = 1e-9
                );
            }
        }
        let t_ext = traj.extinction_time().unwrap();
        assert_relative_eq!(t_ext, 9.0 / 32.0, epsilon = 1e-9);
        assert_relative_eq!(t_ext, regular_crystalline_extinction(1.0), epsilon = 1e-9);
    }

    #[test]
    fn crystalline_extinction_scales_quadratically() {
        let t1 = integrate_crystalline([1.0; 6], 2.0).extinction_time().unwrap();
        let t2 = integrate_crystalline([2.0; 6], 2.0).extinction_time().unwrap();
        assert_relative_eq!(t2, 4.0 * t1, max_relative = 1e-8);
    }

    #[test]
    fn crystalline_flow_preserves_symmetry_and_shrinks_the_perimeter() {
        let l0 = [1.2, 0.8, 1.0, 1.2, 0.8, 1.0];
        let traj = integrate_crystalline(l0, 2.0);
        assert!(matches!(traj.terminal, CrystallineTerminal::Extinction { .. }));
        let mut last_perimeter = f64::INFINITY;
        for r in &traj.records {
            for j in 0..3 {
                assert_relative_eq!(r.l[j], r.l[j + 3], epsilon = 1e-9);
            }
            assert!(r.l.iter().all(|&v| v > 0.0));
            let p = r.perimeter();
            assert!(p <= last_perimeter + 1e-12);
            last_perimeter = p;
        }
        // The short side's ratio to the long one improves (regularization).
        let first = &traj.records[0];
        let late = traj.sample_l(0.9 * traj.extinction_time().unwrap());
        let ratio0 = first.l[1] / first.l[0];
        let ratio1 = late[1] / late[0];
        assert!(ratio1 > ratio0);
    }

    #[test]
    fn quantized_velocity_never_exceeds_the_crystalline_one() {
        for gamma in [0.5, 1.0, 7.0] {
            for l in [0.05, 0.3, 1.0, 1.7] {
                let quantized = SQRT3 / (2.0 * gamma) * (ALPHA * gamma / l).floor();
                let crystalline = 8.0 / (3.0 * SQRT3) / l;
                assert!(quantized <= crystalline + 1e-12);
            }
        }
    }

    #[test]
    fn gamma_sweep_shows_the_crystalline_limit() {
        let l0 = 1.0;
        let rows = gamma_limit_check(l0, &[10.0, 100.0, 1000.0, 10000.0]);
        let mut prev = f64::INFINITY;
        for row in &rows {
            assert!(row.t_quantized >= row.t_crystalline, "quantized is slower");
            assert!(row.rel_err >= 0.0);
            // One-floor-level bound, the stricter 2×-form.
            assert!(
                row.rel_err <= 2.0 * l0 / (ALPHA * row.gamma),
                "γ = {}: rel_err = {}",
                row.gamma,
                row.rel_err
            );
            assert!(row.rel_err < prev, "errors must decrease along the sweep");
            prev = row.rel_err;
        }
    }

    #[test]
    fn growing_sides_cross_levels_downward() {
        // A very short side between two pinned long ones: its neighbors'
        // supports stand still while its own retreats, so the side lengthens
        // and its level drops through successive integers.
        let gamma = 1.0;
        let long = 3.0 * ALPHA;
        let short = ALPHA / 2.5; // x = 2.5
        let l0 = [short, long, long, short, long, long];
        let traj = integrate_quantized(supports_from_symmetric_lengths(&l0), gamma, 100.0);
        assert_eq!(traj.records[0].m, [2, 0, 0, 2, 0, 0]);
        // d₁ = m₆ + m₂ − m₁ = −2 < 0: L₁ grows at rate 2/γ, hitting
        // x = 2 when L = αγ/2, i.e. at t = 4/45.
        let t_hit = gamma * (ALPHA / 2.0 - short) / 2.0;
        assert_relative_eq!(t_hit, 4.0 / 45.0, max_relative = 1e-14);
        assert_relative_eq!(traj.records[1].t, t_hit, max_relative = 1e-12);
        assert_eq!(traj.records[1].m, [1, 0, 0, 1, 0, 0]);
        // The sides keep lengthening at rate 1/γ until x = 1 at t = 44/45.
        // There the floor law jams: level 1 would keep the side growing and
        // immediately drop x below 1, while level 0 parks x exactly on the
        // integer — a persistent plateau, reported as non-unique.
        match &traj.terminal {
            OdeTerminal::NonUniqueVelocity { t, sides } => {
                assert_relative_eq!(*t, 44.0 / 45.0, max_relative = 1e-10);
                let indices: Vec<usize> = sides.iter().map(|s| s.side).collect();
                assert_eq!(indices, vec![1, 4]);
                for side in sides {
                    assert_relative_eq!(
                        side.s_dot_lower,
                        -SQRT3 / (2.0 * gamma),
                        max_relative = 1e-14
                    );
                    assert_relative_eq!(side.s_dot_upper, 0.0);
                }
            }
            other => panic!("expected NonUniqueVelocity, got {other:?}"),
        }
        let last = traj.records.last().unwrap();
        assert_relative_eq!(last.l[0], ALPHA * gamma, max_relative = 1e-10);
        // The long sides shrank meanwhile but stayed above the threshold.
        assert!(last.l[1] > ALPHA * gamma);
    }
}
