//! Lane-change experiment harness.
//!
//! Car C1 (row agent) starts in the left lane and wants to change lanes;
//! car C2 (column agent) drives in the adjacent lane and prefers to
//! continue. Each agent decides once, predicts the other from the action it
//! expects, and then drives a receding-horizon plan, replanning periodically
//! from fresh observations of the other car.

use std::io::{self, Write};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::format::sig;
use crate::game::{
    detect_conflict, Action, AgentId, Category, DecisionOutcome, ModelKind, RewardMatrix, RewardPair, SocialModel,
    ValidatedMatrix,
};
use crate::planner::{plan_with_warm_start, Bounds, PlannerConfig};
use crate::vehicle::{
    destination, fit_polynomial, sample, ControlInput, Destination, DiscretizedTrajectory, ManeuverOffset,
    PolyTrajectory, VehicleParams, VehicleState,
};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ScenarioConfig {
    pub lane_width: f64,
    pub car_length: f64,
    pub initial_speed: f64,
    pub speed_limit: f64,
    /// Either car may start up to this far ahead of the other.
    pub longitudinal_jitter: f64,
    /// Offset from the lane centre, drawn from `[-j, j]`.
    pub lateral_jitter: f64,
    /// C1 manoeuvres indexed by row action: `[D, LC]`.
    pub row_maneuvers: [ManeuverOffset; 2],
    /// C2 manoeuvres indexed by column action: `[GW, C]`.
    pub col_maneuvers: [ManeuverOffset; 2],
    /// Goal radius in the weighted `(x, v, theta)` norm.
    pub goal_tolerance: f64,
    pub replan_period: f64,
    pub dt: f64,
    pub max_time: f64,
    /// Length of the polynomial prediction of the other car.
    pub prediction_horizon: f64,
    pub matrix: RewardMatrix,
    pub vehicle: VehicleParams,
}

impl Default for ScenarioConfig {
    fn default() -> Self {
        let lw = 3.7;
        let car_length = 4.5;
        ScenarioConfig {
            lane_width: lw,
            car_length,
            initial_speed: 15.0,
            speed_limit: 15.0,
            longitudinal_jitter: car_length,
            lateral_jitter: lw / 4.0,
            row_maneuvers: [ManeuverOffset::new(0.0, -10.0), ManeuverOffset::new(lw, 0.0)],
            col_maneuvers: [ManeuverOffset::new(0.0, -5.0), ManeuverOffset::new(0.0, 0.0)],
            goal_tolerance: 0.5,
            replan_period: 1.0,
            dt: 0.2,
            max_time: 30.0,
            prediction_horizon: 4.0,
            matrix: RewardMatrix::lane_change(),
            vehicle: VehicleParams {
                body_length: car_length,
                ..VehicleParams::default()
            },
        }
    }
}

impl ScenarioConfig {
    fn maneuver(&self, action: Action) -> ManeuverOffset {
        match action.agent() {
            AgentId::Row => self.row_maneuvers[action.index()],
            AgentId::Col => self.col_maneuvers[action.index()],
        }
    }

    fn steps_per_replan(&self) -> usize {
        ((self.replan_period / self.dt).round() as usize).max(1)
    }

    /// Planner settings used inside episodes: road edges from the lane
    /// width, speed limit from the scenario, same step as the simulation.
    pub fn planner_for_episode(&self, base: &PlannerConfig) -> PlannerConfig {
        let mut cfg = base.clone();
        cfg.dt = self.dt;
        cfg.bounds.x = Bounds::new(0.0, 2.0 * self.lane_width);
        cfg.bounds.v = Bounds::new(0.0, self.speed_limit);
        cfg.allow_infeasible_start = true;
        cfg
    }

    pub fn validate(&self) -> Result<()> {
        let positive = [
            self.lane_width,
            self.car_length,
            self.goal_tolerance,
            self.replan_period,
            self.dt,
            self.max_time,
            self.prediction_horizon,
        ];
        if positive.iter().any(|v| !(*v > 0.0)) {
            return Err(Error::InvalidInput(
                "scenario lengths, times and tolerances must be positive".into(),
            ));
        }
        if self.longitudinal_jitter < 0.0 || self.lateral_jitter < 0.0 {
            return Err(Error::InvalidInput("perturbation ranges must be nonnegative".into()));
        }
        self.matrix.validate()?;
        Ok(())
    }
}

/// Decision-level outcome for every coefficient pair; `grid[i][j]` pairs
/// `coeffs[i]` for the row agent with `coeffs[j]` for the column agent.
pub fn conflict_grid(kind: ModelKind, coeffs: &[f64], m: &ValidatedMatrix) -> Result<Vec<Vec<DecisionOutcome>>> {
    coeffs
        .iter()
        .map(|&c1| {
            coeffs
                .iter()
                .map(|&c2| detect_conflict(&kind.with_coeffs(c1, c2), m))
                .collect()
        })
        .collect()
}

/// `(conflict cells, non-conflict cells)`.
pub fn count_conflicts(grid: &[Vec<DecisionOutcome>]) -> (usize, usize) {
    let total: usize = grid.iter().map(Vec::len).sum();
    let conflicts = grid.iter().flatten().filter(|o| o.conflict).count();
    (conflicts, total - conflicts)
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ExperimentRecord {
    pub seed: u64,
    pub t_c1: f64,
    pub t_c2: f64,
    pub total_time: f64,
    pub row_action: Action,
    pub col_action: Action,
    pub r1: f64,
    pub r2: f64,
    /// `max(r1, r2) * total_time`.
    pub signed_time: f64,
    pub conflict: bool,
    pub category: Category,
    pub timeout: bool,
    /// Simulation steps during which the cars were inside each other's ellipse.
    pub intrusion_steps: u32,
    /// Plans returned with a violation above the planner tolerance.
    pub rejected_plans: u32,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Phase {
    /// Driving toward the initially decided objective.
    Initial,
    /// Driving toward the objective that maximises the agent's own true reward.
    True,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct LogRow {
    pub t: f64,
    pub agent: AgentId,
    pub state: VehicleState,
    pub phase: Phase,
}

/// `t,agent,x,y,v,theta,phase`, six significant digits.
pub fn write_episode_csv<W: Write>(rows: &[LogRow], mut w: W) -> io::Result<()> {
    writeln!(w, "t,agent,x,y,v,theta,phase")?;
    for r in rows {
        let agent = match r.agent {
            AgentId::Row => "C1",
            AgentId::Col => "C2",
        };
        let phase = match r.phase {
            Phase::Initial => "initial",
            Phase::True => "true",
        };
        writeln!(
            w,
            "{},{},{},{},{},{},{}",
            sig(r.t, 6),
            agent,
            sig(r.state.x, 6),
            sig(r.state.y, 6),
            sig(r.state.v, 6),
            sig(r.state.theta, 6),
            phase
        )?;
    }
    Ok(())
}

struct Driver {
    id: AgentId,
    state: VehicleState,
    objective: Destination,
    true_objective: Destination,
    phase: Phase,
    /// Where this agent believes the other car is heading.
    other_goal: Destination,
    /// Last prediction of the other car and the step it was fitted at.
    prediction: Option<(PolyTrajectory, usize)>,
    controls: Vec<ControlInput>,
    cursor: usize,
    next_replan: usize,
    /// Step at which the agent last entered its true goal ball.
    entered: Option<usize>,
}

fn goal_distance(s: &VehicleState, goal: &Destination, weights: &[f64; 4]) -> f64 {
    let g = &goal.state;
    (weights[0] * (s.x - g.x).powi(2) + weights[2] * (s.v - g.v).powi(2) + weights[3] * (s.theta - g.theta).powi(2))
        .sqrt()
}

/// The action maximising `agent`'s own true reward, assuming the other agent
/// complies.
fn true_action(m: &RewardMatrix, agent: AgentId) -> Action {
    let best = |a: Action| cell_for(m, a).get(agent);
    let (agg, pas) = (Action::aggressive(agent), Action::passive(agent));
    if best(agg) >= best(pas) {
        agg
    } else {
        pas
    }
}

/// The cell reached when `action` is taken and the other agent responds
/// as `action` expects.
fn cell_for(m: &RewardMatrix, action: Action) -> RewardPair {
    let other = action.expected_response();
    match action.agent() {
        AgentId::Row => m.cell(action, other),
        AgentId::Col => m.cell(other, action),
    }
}

pub fn run_experiment(
    model: &SocialModel,
    sc: &ScenarioConfig,
    planner: &PlannerConfig,
    seed: u64,
) -> Result<ExperimentRecord> {
    run_episode(model, sc, planner, seed, false).map(|(r, _)| r)
}

/// [`run_experiment`] that also returns the per-step state log.
pub fn run_experiment_logged(
    model: &SocialModel,
    sc: &ScenarioConfig,
    planner: &PlannerConfig,
    seed: u64,
) -> Result<(ExperimentRecord, Vec<LogRow>)> {
    run_episode(model, sc, planner, seed, true)
}

fn run_episode(
    model: &SocialModel,
    sc: &ScenarioConfig,
    base_planner: &PlannerConfig,
    seed: u64,
    keep_log: bool,
) -> Result<(ExperimentRecord, Vec<LogRow>)> {
    sc.validate()?;
    let matrix = sc.matrix.validate()?;
    let outcome = detect_conflict(model, &matrix)?;
    let cfg = sc.planner_for_episode(base_planner);
    cfg.validate()?;

    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let lw = sc.lane_width;
    let jitter = |rng: &mut ChaCha8Rng, r: f64| if r > 0.0 { rng.random_range(-r..=r) } else { 0.0 };
    let c1 = VehicleState::new(
        lw / 2.0 + jitter(&mut rng, sc.lateral_jitter),
        0.0,
        sc.initial_speed,
        std::f64::consts::FRAC_PI_2,
    );
    let c2 = VehicleState::new(
        1.5 * lw + jitter(&mut rng, sc.lateral_jitter),
        jitter(&mut rng, sc.longitudinal_jitter),
        sc.initial_speed,
        std::f64::consts::FRAC_PI_2,
    );

    let make = |id: AgentId, own: VehicleState, other: VehicleState, chosen: Action| {
        let objective = destination(&own, &sc.maneuver(chosen));
        let true_objective = destination(&own, &sc.maneuver(true_action(&sc.matrix, id)));
        let phase = if objective == true_objective {
            Phase::True
        } else {
            Phase::Initial
        };
        Driver {
            id,
            state: own,
            objective,
            true_objective,
            phase,
            other_goal: destination(&other, &sc.maneuver(chosen.expected_response())),
            prediction: None,
            controls: Vec::new(),
            cursor: 0,
            next_replan: 0,
            entered: None,
        }
    };
    let mut drivers = [
        make(AgentId::Row, c1, c2, outcome.row_choice),
        make(AgentId::Col, c2, c1, outcome.col_choice),
    ];

    let dt = sc.dt;
    let period = sc.steps_per_replan();
    let max_steps = (sc.max_time / dt).round() as usize;
    let mut log = Vec::new();
    let mut intrusion_steps = 0;
    let mut rejected_plans = 0;
    let mut finished = false;
    let mut k = 0;

    let record_log = |log: &mut Vec<LogRow>, k: usize, drivers: &[Driver; 2]| {
        if keep_log {
            for d in drivers {
                log.push(LogRow {
                    t: k as f64 * dt,
                    agent: d.id,
                    state: d.state,
                    phase: d.phase,
                });
            }
        }
    };
    let update_goals = |drivers: &mut [Driver; 2], k: usize| {
        for d in drivers.iter_mut() {
            if d.phase == Phase::Initial && goal_distance(&d.state, &d.objective, &cfg.weights) < sc.goal_tolerance {
                d.phase = Phase::True;
                d.objective = d.true_objective;
                d.next_replan = k;
            }
            let inside = goal_distance(&d.state, &d.true_objective, &cfg.weights) < sc.goal_tolerance;
            d.entered = match (inside, d.entered) {
                (true, Some(t)) => Some(t),
                (true, None) => Some(k),
                (false, _) => None,
            };
        }
        drivers.iter().all(|d| d.phase == Phase::True && d.entered.is_some())
    };

    record_log(&mut log, 0, &drivers);
    if update_goals(&mut drivers, 0) {
        finished = true;
    }

    while !finished && k < max_steps {
        let snapshot = [drivers[0].state, drivers[1].state];
        for i in 0..2 {
            let d = &mut drivers[i];
            if k >= d.next_replan || d.cursor >= d.controls.len() {
                let observed = snapshot[1 - i];
                let accel = match d.prediction {
                    Some((traj, fitted)) => traj.accel_at((k - fitted) as f64 * dt),
                    None => (0.0, 0.0),
                };
                let traj = fit_polynomial(&observed, accel, &d.other_goal, sc.prediction_horizon)?;
                let predicted: DiscretizedTrajectory = sample(&traj, dt)?;
                d.prediction = Some((traj, k));
                let warm: Vec<ControlInput> = d.controls.iter().skip(d.cursor).copied().collect();
                let result = plan_with_warm_start(&d.state, &d.objective, &predicted, &cfg, &sc.vehicle, Some(&warm))?;
                if !result.accepted {
                    rejected_plans += 1;
                }
                d.controls = result.controls;
                d.cursor = 0;
                d.next_replan = k + period;
            }
        }
        for d in drivers.iter_mut() {
            let u = d.controls[d.cursor];
            d.cursor += 1;
            d.state = crate::vehicle::step(&d.state, &u, dt, &sc.vehicle);
        }
        k += 1;
        let gap = cfg.ellipse.intrusion(
            drivers[0].state.x - drivers[1].state.x,
            drivers[0].state.y - drivers[1].state.y,
        );
        if gap > 0.0 {
            intrusion_steps += 1;
        }
        record_log(&mut log, k, &drivers);
        finished = update_goals(&mut drivers, k);
    }

    let completion = |d: &Driver| match (finished, d.entered) {
        (true, Some(step)) => step as f64 * dt,
        _ => sc.max_time,
    };
    let t_c1 = completion(&drivers[0]);
    let t_c2 = completion(&drivers[1]);
    let reward = sc.matrix.cell(outcome.row_choice, outcome.col_choice);
    let total_time = t_c1 + t_c2;
    Ok((
        ExperimentRecord {
            seed,
            t_c1,
            t_c2,
            total_time,
            row_action: outcome.row_choice,
            col_action: outcome.col_choice,
            r1: reward.row,
            r2: reward.col,
            signed_time: reward.row.max(reward.col) * total_time,
            conflict: outcome.conflict,
            category: outcome.category,
            timeout: !finished,
            intrusion_steps,
            rejected_plans,
        },
        log,
    ))
}

/// Seed of repetition `rep` in grid cell `cell`.
pub fn episode_seed(base_seed: u64, cell: usize, rep: usize) -> u64 {
    fn splitmix(mut z: u64) -> u64 {
        z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
        z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
        z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
        z ^ (z >> 31)
    }
    splitmix(splitmix(splitmix(base_seed) ^ cell as u64) ^ rep as u64)
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct SweepGrid {
    pub model: ModelKind,
    pub coeffs: Vec<f64>,
    /// Mean signed time per cell; `None` when every episode failed.
    pub grid: Vec<Vec<Option<f64>>>,
    pub conflict: Vec<Vec<bool>>,
    /// Episodes that finished before the time limit.
    pub completed: Vec<Vec<usize>>,
    pub failed: Vec<Vec<bool>>,
    pub reps: usize,
    pub base_seed: u64,
    pub seeds: Vec<Vec<Vec<u64>>>,
    pub records: Vec<Vec<Vec<Option<ExperimentRecord>>>>,
}

impl SweepGrid {
    pub fn any_failed(&self) -> bool {
        self.failed.iter().flatten().any(|f| *f)
    }
}

/// Runs `reps` seeded episodes for every coefficient pair. Episodes are
/// dispatched through rayon; results do not depend on the pool size.
pub fn run_sweep(
    kind: ModelKind,
    coeffs: &[f64],
    reps: usize,
    sc: &ScenarioConfig,
    planner: &PlannerConfig,
    base_seed: u64,
) -> Result<SweepGrid> {
    if reps == 0 {
        return Err(Error::InvalidInput("sweep needs at least one repetition".into()));
    }
    let matrix = sc.matrix.validate()?;
    let decisions = conflict_grid(kind, coeffs, &matrix)?;
    let n = coeffs.len();
    let jobs: Vec<(usize, usize, usize)> = (0..n * n)
        .flat_map(|cell| (0..reps).map(move |rep| (cell / n, cell % n, rep)))
        .collect();
    let outcomes: Vec<Result<ExperimentRecord>> = jobs
        .par_iter()
        .map(|&(i, j, rep)| {
            let seed = episode_seed(base_seed, i * n + j, rep);
            run_experiment(&kind.with_coeffs(coeffs[i], coeffs[j]), sc, planner, seed)
        })
        .collect();

    let mut grid = vec![vec![None; n]; n];
    let mut completed = vec![vec![0; n]; n];
    let mut failed = vec![vec![false; n]; n];
    let mut seeds = vec![vec![Vec::with_capacity(reps); n]; n];
    let mut records = vec![vec![Vec::with_capacity(reps); n]; n];
    for (&(i, j, rep), outcome) in jobs.iter().zip(outcomes) {
        seeds[i][j].push(episode_seed(base_seed, i * n + j, rep));
        match outcome {
            Ok(r) => {
                if !r.timeout {
                    completed[i][j] += 1;
                }
                records[i][j].push(Some(r));
            }
            Err(_) => {
                failed[i][j] = true;
                records[i][j].push(None);
            }
        }
    }
    for i in 0..n {
        for j in 0..n {
            let values: Vec<f64> = records[i][j].iter().flatten().map(|r| r.signed_time).collect();
            if !values.is_empty() {
                grid[i][j] = Some(values.iter().sum::<f64>() / values.len() as f64);
            }
        }
    }
    Ok(SweepGrid {
        model: kind,
        coeffs: coeffs.to_vec(),
        grid,
        conflict: decisions
            .iter()
            .map(|row| row.iter().map(|o| o.conflict).collect())
            .collect(),
        completed,
        failed,
        reps,
        base_seed,
        seeds,
        records,
    })
}
