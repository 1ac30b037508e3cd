//! Curvature-driven motion of discrete interfaces on the triangular lattice.
//!
//! A set of spins on the triangular lattice 𝕋 = {a·η₁ + b·η₂ : a, b ∈ ℤ}
//! carries a ferromagnetic interfacial energy equal to the Euclidean length of
//! the boundary of the union of hexagonal dual cells. Evolving such sets by a
//! discrete-in-time minimizing-movement scheme, with time step τ proportional
//! to the lattice spacing ε (τ = γε), produces a quantized crystalline flow:
//! hexagonal shapes shrink by whole layers of cells, with velocities locked to
//! the grid of multiples of (√3/2)ε per step.
//!
//! The crate covers the full pipeline:
//!
//! - [`lattice`]: the triangular lattice, its hexagonal anisotropy φ_hex and
//!   dual norm φ°_hex, and the Wulff shape.
//! - [`wulff`]: hexagons with Wulff-shape normals parameterized by the six
//!   side distances s₁..s₆, plus incenter and Hausdorff-distance machinery.
//! - [`cells`]: discretization of hexagons into cell sets, perimeter energy,
//!   lattice distances and the dissipation term of the incremental functional.
//! - [`step`]: one minimizing-movement step, both as the closed-form layer
//!   count N_i = ⌊α γ / L_i⌋ and as exact brute-force search; α = 16/9.
//! - [`flow`]: the iterated discrete evolution, affine interpolants and
//!   discrete-to-limit convergence studies.
//! - [`ode`]: the limit dynamics as ε → 0 (an event-driven ODE system with
//!   floor-quantized velocities), the crystalline comparison flow with natural
//!   mobility, and the γ → ∞ consistency check between the two.
//! - [`export`]: trajectory tables with stable CSV/JSON schemas.

pub mod cells;
pub mod export;
pub mod flow;
pub mod lattice;
pub mod ode;
pub mod step;
pub mod wulff;

pub use cells::{CellSet, DiscreteHexagon};
pub use flow::{run, run_with, FlowOptions, FlowTerminal, Stepper, Trajectory};
pub use lattice::{LatticePoint, Normal, Vec2, ALPHA_HEX};
pub use ode::{
    integrate_crystalline, integrate_quantized, CrystallineTrajectory, QuantizedTrajectory,
};
pub use step::{optimal_layers, StepPlan, TiePolicy};
pub use wulff::{IncenterSet, WulffHexagon};
