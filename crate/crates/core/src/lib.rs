//! Altruism-weighted decision models for two-agent driving interactions.
//!
//! * [`game`]: reward matrices, effective-reward transforms, decisions and
//!   conflicts.
//! * [`aoc`]: Area of Conflict closed forms, Monte Carlo estimates and
//!   region boundaries.
//! * [`vehicle`]: kinematic bicycle model and polynomial prediction of the
//!   other vehicle.
//! * [`planner`]: receding-horizon trajectory optimisation with ellipse
//!   collision constraints.
//! * [`sim`]: the lane-change experiment harness and parameter sweeps.

// `!(x > 0.0)` is used on purpose so that NaN fails validation.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod aoc;
pub mod error;
pub mod format;
pub mod game;
pub mod planner;
pub mod sim;
pub mod vehicle;

pub use aoc::{
    aoc_analytical, aoc_curve, aoc_monte_carlo, conflict_region_bounds, gaps, AocResult, GapPair, McEstimate,
    RegionBounds,
};
pub use error::{Error, Result};
pub use game::{
    augmented_fixed_point, decide, detect_conflict, effective_rewards, validate_matrix, Action, AgentId, Category,
    DecisionOutcome, ModelKind, RewardMatrix, RewardPair, SocialModel, ValidatedMatrix,
};
pub use planner::{audit, plan, PlanResult, PlannerConfig, Violations};
pub use sim::{conflict_grid, run_experiment, run_sweep, ExperimentRecord, ScenarioConfig, SweepGrid};
pub use vehicle::{
    destination, fit_polynomial, sample, step, ControlInput, Destination, DiscretizedTrajectory, ManeuverOffset,
    PolyTrajectory, VehicleParams, VehicleState,
};
