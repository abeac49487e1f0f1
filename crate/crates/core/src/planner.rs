//! Receding-horizon trajectory optimisation against a fixed prediction of
//! the other vehicle.
//!
//! The decision variables are the `N` controls (single shooting), so the
//! dynamics hold by construction. Control bounds are enforced by projection
//! onto the box; state bounds and the collision ellipse enter as quadratic
//! penalties whose weight grows over a fixed number of rounds. Each round is
//! a projected gradient descent with Barzilai-Borwein step lengths and
//! Armijo backtracking, using central finite-difference gradients.

use std::f64::consts::{FRAC_PI_2, FRAC_PI_4};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::vehicle::{step, ControlInput, Destination, DiscretizedTrajectory, VehicleParams, VehicleState};

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Bounds {
    pub lo: f64,
    pub hi: f64,
}

impl Bounds {
    pub const fn new(lo: f64, hi: f64) -> Self {
        Bounds { lo, hi }
    }

    fn width(&self) -> f64 {
        self.hi - self.lo
    }

    /// Signed violation normalised by the bound width; `<= 0` when inside.
    fn violation(&self, value: f64) -> f64 {
        (self.lo - value).max(value - self.hi) / self.width()
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PlannerBounds {
    pub accel: Bounds,
    pub steer: Bounds,
    pub x: Bounds,
    pub v: Bounds,
    pub theta: Bounds,
}

impl Default for PlannerBounds {
    fn default() -> Self {
        PlannerBounds {
            accel: Bounds::new(-3.0, 3.0),
            steer: Bounds::new(-0.0175, 0.0175),
            x: Bounds::new(0.0, 7.4),
            v: Bounds::new(0.0, 15.0),
            theta: Bounds::new(FRAC_PI_4, 3.0 * FRAC_PI_4),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PenaltySchedule {
    pub initial: f64,
    pub growth: f64,
    pub rounds: usize,
}

impl Default for PenaltySchedule {
    fn default() -> Self {
        PenaltySchedule {
            initial: 100.0,
            growth: 10.0,
            rounds: 5,
        }
    }
}

/// Half axes of the collision ellipse, lateral then longitudinal.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Ellipse {
    pub rx: f64,
    pub ry: f64,
}

impl Ellipse {
    /// `1 - (dx/rx)^2 - (dy/ry)^2`; positive inside the ellipse.
    pub fn intrusion(&self, dx: f64, dy: f64) -> f64 {
        let (u, w) = (dx / self.rx, dy / self.ry);
        1.0 - u * u - w * w
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PlannerConfig {
    pub dt: f64,
    pub horizon_steps: usize,
    /// Weights on squared `(x, y, v, theta)` deviation. The `y` weight is
    /// ignored when the destination leaves `y` free.
    pub weights: [f64; 4],
    pub bounds: PlannerBounds,
    pub ellipse: Ellipse,
    pub penalty: PenaltySchedule,
    /// Descent iterations per penalty round.
    pub max_iterations: usize,
    pub gradient_tolerance: f64,
    /// Central-difference step in normalised control units.
    pub fd_step: f64,
    /// The collision penalty acts on `intrusion + margin`, keeping the
    /// residual of the penalty method outside the true ellipse.
    pub collision_margin: f64,
    /// Plans with every normalised violation below this are accepted.
    pub violation_tolerance: f64,
    /// Plan anyway when the current state is already inside the ellipse.
    pub allow_infeasible_start: bool,
}

impl Default for PlannerConfig {
    fn default() -> Self {
        PlannerConfig {
            dt: 0.2,
            horizon_steps: 20,
            weights: [1.0, 0.0, 1.0, 10.0],
            bounds: PlannerBounds::default(),
            ellipse: Ellipse { rx: 2.0, ry: 6.0 },
            penalty: PenaltySchedule::default(),
            max_iterations: 150,
            gradient_tolerance: 1e-6,
            fd_step: 1e-6,
            collision_margin: 0.05,
            violation_tolerance: 1e-3,
            allow_infeasible_start: false,
        }
    }
}

impl PlannerConfig {
    pub fn validate(&self) -> Result<()> {
        let b = &self.bounds;
        let ordered = [b.accel, b.steer, b.x, b.v, b.theta].iter().all(|r| r.lo < r.hi);
        if !ordered {
            return Err(Error::InvalidInput("planner bounds must satisfy lo < hi".into()));
        }
        if !(self.dt > 0.0) || self.horizon_steps == 0 {
            return Err(Error::InvalidInput("planner needs dt > 0 and at least one step".into()));
        }
        if self.weights.iter().any(|w| !(*w >= 0.0)) {
            return Err(Error::InvalidInput("planner weights must be nonnegative".into()));
        }
        if !(self.penalty.initial > 0.0) || !(self.penalty.growth >= 1.0) || self.penalty.rounds == 0 {
            return Err(Error::InvalidInput(
                "penalty schedule needs initial > 0, growth >= 1, rounds >= 1".into(),
            ));
        }
        if !(self.ellipse.rx > 0.0 && self.ellipse.ry > 0.0) {
            return Err(Error::InvalidInput("ellipse half axes must be positive".into()));
        }
        Ok(())
    }
}

/// Largest signed normalised constraint value per family; `<= 0` means
/// satisfied everywhere.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Violations {
    pub x: f64,
    pub v: f64,
    pub theta: f64,
    pub accel: f64,
    pub steer: f64,
    pub collision: f64,
}

impl Violations {
    fn none() -> Self {
        let n = f64::NEG_INFINITY;
        Violations {
            x: n,
            v: n,
            theta: n,
            accel: n,
            steer: n,
            collision: n,
        }
    }

    pub fn max(&self) -> f64 {
        [self.x, self.v, self.theta, self.accel, self.steer, self.collision]
            .into_iter()
            .fold(f64::NEG_INFINITY, f64::max)
    }

    pub fn max_abs_diff(&self, other: &Violations) -> f64 {
        let a = [self.x, self.v, self.theta, self.accel, self.steer, self.collision];
        let b = [other.x, other.v, other.theta, other.accel, other.steer, other.collision];
        a.iter()
            .zip(b)
            .map(|(p, q)| if p == &q { 0.0 } else { (p - q).abs() })
            .fold(0.0, f64::max)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct RoundSummary {
    pub weight: f64,
    pub iterations: usize,
    /// Cost plus penalty at the start and end of the round.
    pub start_objective: f64,
    pub end_objective: f64,
    pub converged: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PlanResult {
    pub controls: Vec<ControlInput>,
    pub states: Vec<VehicleState>,
    pub cost: f64,
    pub max_violation: Violations,
    /// Collision value at the (fixed) initial state.
    pub start_intrusion: f64,
    pub rounds: Vec<RoundSummary>,
    pub budget_exhausted: bool,
    /// Every normalised violation below the configured tolerance.
    pub accepted: bool,
}

struct Problem<'a> {
    cfg: &'a PlannerConfig,
    params: &'a VehicleParams,
    start: VehicleState,
    goal: [f64; 4],
    weights: [f64; 4],
    other: Vec<(f64, f64)>,
    center: [f64; 2],
    half: [f64; 2],
}

impl Problem<'_> {
    fn control(&self, z: &[f64], k: usize) -> ControlInput {
        ControlInput::new(
            self.center[0] + self.half[0] * z[2 * k],
            self.center[1] + self.half[1] * z[2 * k + 1],
        )
    }

    fn controls(&self, z: &[f64]) -> Vec<ControlInput> {
        (0..self.cfg.horizon_steps).map(|k| self.control(z, k)).collect()
    }

    fn rollout(&self, controls: &[ControlInput]) -> Vec<VehicleState> {
        let mut states = Vec::with_capacity(controls.len() + 1);
        states.push(self.start);
        for u in controls {
            let next = step(states.last().unwrap(), u, self.cfg.dt, self.params);
            states.push(next);
        }
        states
    }

    fn stage_cost(&self, s: &VehicleState) -> f64 {
        let d = s.as_array();
        (0..4).map(|i| self.weights[i] * (d[i] - self.goal[i]).powi(2)).sum()
    }

    fn stage_penalty(&self, j: usize, s: &VehicleState) -> f64 {
        let b = &self.cfg.bounds;
        let sq = |g: f64| if g > 0.0 { g * g } else { 0.0 };
        let (ox, oy) = self.other[j];
        sq(b.x.violation(s.x))
            + sq(b.v.violation(s.v))
            + sq(b.theta.violation(s.theta))
            + sq(self.cfg.ellipse.intrusion(s.x - ox, s.y - oy) + self.cfg.collision_margin)
    }

    fn stage(&self, j: usize, s: &VehicleState, weight: f64) -> f64 {
        if j == 0 {
            self.stage_cost(s)
        } else {
            self.stage_cost(s) + weight * self.stage_penalty(j, s)
        }
    }

    fn objective(&self, z: &[f64], weight: f64) -> f64 {
        let states = self.rollout(&self.controls(z));
        states.iter().enumerate().map(|(j, s)| self.stage(j, s, weight)).sum()
    }

    /// Central differences. Perturbing control `k` only changes states after
    /// `k`, so each perturbed rollout restarts from the cached state `k`.
    fn gradient(&self, z: &[f64], weight: f64, grad: &mut [f64]) {
        let controls = self.controls(z);
        let states = self.rollout(&controls);
        let h = self.cfg.fd_step;
        let n = controls.len();
        for k in 0..n {
            for c in 0..2 {
                let mut tail = [0.0; 2];
                for (slot, sign) in [1.0, -1.0].into_iter().enumerate() {
                    let mut u = controls[k];
                    if c == 0 {
                        u.accel += sign * h * self.half[0];
                    } else {
                        u.steer += sign * h * self.half[1];
                    }
                    let mut s = step(&states[k], &u, self.cfg.dt, self.params);
                    let mut acc = self.stage(k + 1, &s, weight);
                    for (j, u) in controls.iter().enumerate().skip(k + 1) {
                        s = step(&s, u, self.cfg.dt, self.params);
                        acc += self.stage(j + 1, &s, weight);
                    }
                    tail[slot] = acc;
                }
                // Stages up to k are unchanged and cancel in the difference.
                grad[2 * k + c] = (tail[0] - tail[1]) / (2.0 * h);
            }
        }
    }
}

fn project(z: &mut [f64]) {
    for v in z.iter_mut() {
        *v = v.clamp(-1.0, 1.0);
    }
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// Projected gradient descent at fixed penalty weight.
fn descend(problem: &Problem<'_>, z: &mut [f64], weight: f64) -> RoundSummary {
    let cfg = problem.cfg;
    let dim = z.len();
    let mut f = problem.objective(z, weight);
    let start_objective = f;
    let mut g = vec![0.0; dim];
    problem.gradient(z, weight, &mut g);
    let mut step_len = 1e-3;
    let mut iterations = 0;
    let mut converged = false;
    let mut trial = vec![0.0; dim];
    let mut g_new = vec![0.0; dim];

    while iterations < cfg.max_iterations {
        // Norm of the projected gradient step at unit length.
        let pg: f64 = z
            .iter()
            .zip(&g)
            .map(|(zi, gi)| (zi - (zi - gi).clamp(-1.0, 1.0)).powi(2))
            .sum::<f64>()
            .sqrt();
        if pg < cfg.gradient_tolerance {
            converged = true;
            break;
        }
        iterations += 1;

        let mut t = step_len;
        let accepted = loop {
            for i in 0..dim {
                trial[i] = z[i] - t * g[i];
            }
            project(&mut trial);
            let moved: f64 = z.iter().zip(&trial).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
            if moved == 0.0 {
                break None;
            }
            let f_trial = problem.objective(&trial, weight);
            let decrease: f64 = z.iter().zip(&trial).zip(&g).map(|((a, b), gi)| gi * (a - b)).sum();
            if f_trial <= f - 1e-4 * decrease {
                break Some(f_trial);
            }
            t *= 0.5;
            if t < 1e-14 {
                break None;
            }
        };
        let Some(f_trial) = accepted else {
            // No descent possible at this resolution.
            converged = true;
            break;
        };

        problem.gradient(&trial, weight, &mut g_new);
        let s: Vec<f64> = trial.iter().zip(z.iter()).map(|(a, b)| a - b).collect();
        let y: Vec<f64> = g_new.iter().zip(&g).map(|(a, b)| a - b).collect();
        let sy = dot(&s, &y);
        step_len = if sy > 0.0 {
            (dot(&s, &s) / sy).clamp(1e-8, 1e3)
        } else {
            (2.0 * t).min(1e3)
        };

        z.copy_from_slice(&trial);
        std::mem::swap(&mut g, &mut g_new);
        f = f_trial;
    }
    RoundSummary {
        weight,
        iterations,
        start_objective,
        end_objective: f,
        converged,
    }
}

pub fn plan(
    own: &VehicleState,
    dest: &Destination,
    other: &DiscretizedTrajectory,
    cfg: &PlannerConfig,
    params: &VehicleParams,
) -> Result<PlanResult> {
    plan_with_warm_start(own, dest, other, cfg, params, None)
}

/// Like [`plan`], starting the descent from `warm` (clamped to the control
/// bounds, padded with zero controls) instead of all-zero controls.
pub fn plan_with_warm_start(
    own: &VehicleState,
    dest: &Destination,
    other: &DiscretizedTrajectory,
    cfg: &PlannerConfig,
    params: &VehicleParams,
    warm: Option<&[ControlInput]>,
) -> Result<PlanResult> {
    cfg.validate()?;
    let other_positions = aligned_positions(other, cfg)?;
    let start_intrusion = cfg
        .ellipse
        .intrusion(own.x - other_positions[0].0, own.y - other_positions[0].1);
    if start_intrusion > 0.0 && !cfg.allow_infeasible_start {
        return Err(Error::InfeasibleStart { value: start_intrusion });
    }

    let b = &cfg.bounds;
    let mut weights = cfg.weights;
    if dest.y_free {
        weights[1] = 0.0;
    }
    let problem = Problem {
        cfg,
        params,
        start: *own,
        goal: dest.state.as_array(),
        weights,
        other: other_positions,
        center: [(b.accel.lo + b.accel.hi) / 2.0, (b.steer.lo + b.steer.hi) / 2.0],
        half: [b.accel.width() / 2.0, b.steer.width() / 2.0],
    };

    let n = cfg.horizon_steps;
    let mut z = vec![0.0; 2 * n];
    let zero = ControlInput::ZERO;
    for k in 0..n {
        let u = warm.and_then(|w| w.get(k)).unwrap_or(&zero);
        z[2 * k] = (u.accel - problem.center[0]) / problem.half[0];
        z[2 * k + 1] = (u.steer - problem.center[1]) / problem.half[1];
    }
    project(&mut z);

    let mut rounds = Vec::with_capacity(cfg.penalty.rounds);
    let mut weight = cfg.penalty.initial;
    let mut budget_exhausted = false;
    for _ in 0..cfg.penalty.rounds {
        let summary = descend(&problem, &mut z, weight);
        budget_exhausted = !summary.converged;
        rounds.push(summary);
        let controls = problem.controls(&z);
        let states = problem.rollout(&controls);
        if constraint_maxima(&states, &controls, &problem.other, cfg).max() <= 0.0 {
            break;
        }
        weight *= cfg.penalty.growth;
    }

    let controls = problem.controls(&z);
    let states = problem.rollout(&controls);
    let cost = states.iter().map(|s| problem.stage_cost(s)).sum();
    let max_violation = constraint_maxima(&states, &controls, &problem.other, cfg);
    Ok(PlanResult {
        accepted: max_violation.max() < cfg.violation_tolerance,
        controls,
        states,
        cost,
        max_violation,
        start_intrusion,
        rounds,
        budget_exhausted,
    })
}

/// Other-vehicle positions at steps `0..=N`, extrapolated when the
/// prediction is shorter than the horizon.
fn aligned_positions(other: &DiscretizedTrajectory, cfg: &PlannerConfig) -> Result<Vec<(f64, f64)>> {
    if other.is_empty() {
        return Err(Error::InvalidInput("other-vehicle trajectory is empty".into()));
    }
    if (other.dt - cfg.dt).abs() > 1e-9 * cfg.dt {
        return Err(Error::InvalidInput(format!(
            "other-vehicle trajectory spacing {} differs from planner dt {}",
            other.dt, cfg.dt
        )));
    }
    let mut padded = other.clone();
    padded.extend_to(cfg.horizon_steps + 1);
    Ok(padded.states[..=cfg.horizon_steps].iter().map(|s| (s.x, s.y)).collect())
}

fn constraint_maxima(
    states: &[VehicleState],
    controls: &[ControlInput],
    other: &[(f64, f64)],
    cfg: &PlannerConfig,
) -> Violations {
    let b = &cfg.bounds;
    let mut m = Violations::none();
    for (j, s) in states.iter().enumerate().skip(1) {
        m.x = m.x.max(b.x.violation(s.x));
        m.v = m.v.max(b.v.violation(s.v));
        m.theta = m.theta.max(b.theta.violation(s.theta));
        let (ox, oy) = other[j];
        m.collision = m.collision.max(cfg.ellipse.intrusion(s.x - ox, s.y - oy));
    }
    for u in controls {
        m.accel = m.accel.max(b.accel.violation(u.accel));
        m.steer = m.steer.max(b.steer.violation(u.steer));
    }
    m
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct AuditReport {
    pub violations: Violations,
    /// Largest absolute difference between stored and re-simulated states.
    pub dynamics_error: f64,
}

/// Re-simulates the stored controls and re-evaluates every constraint.
/// States after the initial one are checked; the initial state is fixed and
/// reported separately as `start_intrusion`.
pub fn audit(
    result: &PlanResult,
    other: &DiscretizedTrajectory,
    cfg: &PlannerConfig,
    params: &VehicleParams,
) -> AuditReport {
    let mut padded = other.clone();
    padded.extend_to(result.states.len());
    let b = &cfg.bounds;
    let norm = |r: &Bounds, value: f64| -> f64 {
        let below = r.lo - value;
        let above = value - r.hi;
        if below > above {
            below / (r.hi - r.lo)
        } else {
            above / (r.hi - r.lo)
        }
    };

    let mut v = Violations::none();
    let mut dynamics_error: f64 = 0.0;
    let mut s = result.states.first().copied().unwrap_or_default();
    for (k, u) in result.controls.iter().enumerate() {
        s = step(&s, u, cfg.dt, params);
        let stored = result.states.get(k + 1).copied().unwrap_or(s);
        for (p, q) in s.as_array().iter().zip(stored.as_array()) {
            dynamics_error = dynamics_error.max((p - q).abs());
        }
        v.x = v.x.max(norm(&b.x, s.x));
        v.v = v.v.max(norm(&b.v, s.v));
        v.theta = v.theta.max(norm(&b.theta, s.theta));
        let o = padded.states[k + 1];
        let ex = (s.x - o.x) / cfg.ellipse.rx;
        let ey = (s.y - o.y) / cfg.ellipse.ry;
        v.collision = v.collision.max(1.0 - ex * ex - ey * ey);
        v.accel = v.accel.max(norm(&b.accel, u.accel));
        v.steer = v.steer.max(norm(&b.steer, u.steer));
    }
    AuditReport {
        violations: v,
        dynamics_error,
    }
}

/// Straight cruising along the road.
pub fn straight_ahead(x: f64, y: f64, v: f64) -> VehicleState {
    VehicleState::new(x, y, v, FRAC_PI_2)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::vehicle::{destination, ManeuverOffset};

    fn far_away() -> DiscretizedTrajectory {
        DiscretizedTrajectory::constant_velocity(straight_ahead(5.55, 1e6, 15.0), 0.2, 21)
    }

    #[test]
    fn already_at_goal() {
        let own = straight_ahead(1.85, 0.0, 15.0);
        let dest = destination(&own, &ManeuverOffset::default());
        let cfg = PlannerConfig::default();
        let r = plan(&own, &dest, &far_away(), &cfg, &VehicleParams::default()).unwrap();
        assert!(r.cost < 1e-6);
        assert!(r.controls.iter().all(|u| u.accel.abs() < 1e-6 && u.steer.abs() < 1e-9));
        assert!(r.accepted);
        assert_eq!(r.states.len(), 21);
    }

    #[test]
    fn empty_road_lane_change() {
        let own = straight_ahead(1.85, 0.0, 15.0);
        let dest = destination(&own, &ManeuverOffset::new(3.7, 0.0));
        let cfg = PlannerConfig::default();
        let params = VehicleParams::default();
        let r = plan(&own, &dest, &far_away(), &cfg, &params).unwrap();
        let last = r.states.last().unwrap();
        assert!((last.x - dest.state.x).abs() < 0.5, "final x {}", last.x);
        assert!(r.max_violation.max() < 1e-3, "{:?}", r.max_violation);
        let a = audit(&r, &far_away(), &cfg, &params);
        assert!(a.violations.max_abs_diff(&r.max_violation) < 1e-9);
        assert_eq!(a.dynamics_error, 0.0);
    }

    #[test]
    fn keeps_clear_of_adjacent_vehicle() {
        // Other car 2 m to the side and pacing us; goal pushes toward it.
        let own = straight_ahead(1.85, 0.0, 15.0);
        let other = DiscretizedTrajectory::constant_velocity(straight_ahead(3.85, 0.0, 15.0), 0.2, 21);
        let dest = destination(&own, &ManeuverOffset::new(3.7, 0.0));
        let cfg = PlannerConfig {
            ellipse: Ellipse { rx: 2.5, ry: 6.0 },
            allow_infeasible_start: true,
            ..Default::default()
        };
        let params = VehicleParams::default();
        let r = plan(&own, &dest, &other, &cfg, &params).unwrap();
        assert!(r.start_intrusion > 0.0);
        // Lateral gap 2 m < 2.5 m: the start is inside; later steps must leave.
        let a = audit(&r, &other, &cfg, &params);
        assert!(a.violations.max_abs_diff(&r.max_violation) < 1e-9);

        let clear = DiscretizedTrajectory::constant_velocity(straight_ahead(5.85, 0.0, 15.0), 0.2, 21);
        let cfg = PlannerConfig {
            ellipse: Ellipse { rx: 2.5, ry: 6.0 },
            ..Default::default()
        };
        let r = plan(&own, &dest, &clear, &cfg, &params).unwrap();
        assert!(r.max_violation.collision < 1e-3, "{:?}", r.max_violation);
        assert!(r.accepted);
    }

    #[test]
    fn infeasible_start_rejected() {
        let own = straight_ahead(1.85, 0.0, 15.0);
        let other = DiscretizedTrajectory::constant_velocity(straight_ahead(2.85, 1.0, 15.0), 0.2, 21);
        let dest = destination(&own, &ManeuverOffset::default());
        let err = plan(
            &own,
            &dest,
            &other,
            &PlannerConfig::default(),
            &VehicleParams::default(),
        )
        .unwrap_err();
        assert!(matches!(err, Error::InfeasibleStart { .. }));
    }

    #[test]
    fn audit_flags_road_edge() {
        let cfg = PlannerConfig::default();
        let params = VehicleParams::default();
        let own = VehicleState::new(7.0, 0.0, 15.0, FRAC_PI_4 + 0.1);
        let controls = vec![ControlInput::ZERO; 20];
        let mut states = vec![own];
        for u in &controls {
            let next = step(states.last().unwrap(), u, cfg.dt, &params);
            states.push(next);
        }
        let r = PlanResult {
            controls,
            states,
            cost: 0.0,
            max_violation: Violations::none(),
            start_intrusion: -1.0,
            rounds: Vec::new(),
            budget_exhausted: false,
            accepted: false,
        };
        let a = audit(&r, &far_away(), &cfg, &params);
        assert!(a.violations.x > 0.0);
        assert!(a.violations.collision < 0.0);

        let straight = straight_ahead(1.85, 0.0, 15.0);
        let mut states = vec![straight];
        let controls = vec![ControlInput::ZERO; 20];
        for u in &controls {
            let next = step(states.last().unwrap(), u, cfg.dt, &params);
            states.push(next);
        }
        let r = PlanResult { controls, states, ..r };
        let a = audit(&r, &far_away(), &cfg, &params);
        assert!(a.violations.max() <= 0.0, "{:?}", a.violations);
    }

    #[test]
    fn deterministic_and_monotone() {
        let own = straight_ahead(1.85, 0.0, 15.0);
        let other = DiscretizedTrajectory::constant_velocity(straight_ahead(5.55, 3.0, 15.0), 0.2, 21);
        let dest = destination(&own, &ManeuverOffset::new(3.7, 0.0));
        let cfg = PlannerConfig::default();
        let params = VehicleParams::default();
        let a = plan(&own, &dest, &other, &cfg, &params).unwrap();
        let b = plan(&own, &dest, &other, &cfg, &params).unwrap();
        assert_eq!(a, b);
        for r in &a.rounds {
            assert!(r.end_objective <= r.start_objective);
        }
        assert!(a.max_violation.collision < 1e-3, "{:?}", a.max_violation);
    }

    #[test]
    fn short_prediction_is_extrapolated() {
        let own = straight_ahead(1.85, 0.0, 15.0);
        let dest = destination(&own, &ManeuverOffset::default());
        let short = DiscretizedTrajectory::constant_velocity(straight_ahead(5.55, 1e6, 15.0), 0.2, 3);
        let r = plan(
            &own,
            &dest,
            &short,
            &PlannerConfig::default(),
            &VehicleParams::default(),
        )
        .unwrap();
        assert_eq!(r.states.len(), 21);
        let wrong_dt = DiscretizedTrajectory::constant_velocity(straight_ahead(5.55, 1e6, 15.0), 0.1, 21);
        assert!(plan(
            &own,
            &dest,
            &wrong_dt,
            &PlannerConfig::default(),
            &VehicleParams::default()
        )
        .is_err());
    }
}
