//! Kinematic bicycle dynamics and polynomial prediction of the other vehicle.
//!
//! Coordinates: `x` is lateral (across lanes), `y` longitudinal. Heading is
//! measured from `+x`, so driving straight down the road is `theta = pi/2`.

use std::f64::consts::FRAC_PI_2;
use std::io::{self, Write};

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::format::sig;

#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct VehicleState {
    pub x: f64,
    pub y: f64,
    pub v: f64,
    pub theta: f64,
}

impl VehicleState {
    pub const fn new(x: f64, y: f64, v: f64, theta: f64) -> Self {
        VehicleState { x, y, v, theta }
    }

    pub fn as_array(&self) -> [f64; 4] {
        [self.x, self.y, self.v, self.theta]
    }

    /// Velocity components `(x_dot, y_dot)`.
    pub fn velocity(&self) -> (f64, f64) {
        (self.v * self.theta.cos(), self.v * self.theta.sin())
    }
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct ControlInput {
    /// m/s^2
    pub accel: f64,
    /// rad
    pub steer: f64,
}

impl ControlInput {
    pub const ZERO: ControlInput = ControlInput { accel: 0.0, steer: 0.0 };

    pub const fn new(accel: f64, steer: f64) -> Self {
        ControlInput { accel, steer }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct VehicleParams {
    /// Inter-axle length `L`.
    pub wheelbase: f64,
    pub body_length: f64,
    pub body_width: f64,
}

impl Default for VehicleParams {
    fn default() -> Self {
        VehicleParams {
            wheelbase: 2.7,
            body_length: 4.5,
            body_width: 1.8,
        }
    }
}

/// Intended change in lateral position and speed for one manoeuvre.
#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ManeuverOffset {
    pub dx: f64,
    pub dv: f64,
}

impl ManeuverOffset {
    pub const fn new(dx: f64, dv: f64) -> Self {
        ManeuverOffset { dx, dv }
    }
}

/// Goal state of a manoeuvre. The longitudinal position is left free when
/// `y_free` is set and `state.y` is then only informational.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Destination {
    pub state: VehicleState,
    pub y_free: bool,
}

impl Destination {
    pub fn fixed(state: VehicleState) -> Self {
        Destination { state, y_free: false }
    }
}

/// One step of the discrete kinematic bicycle model. All right-hand sides
/// use the pre-update state; speed is clamped at zero.
pub fn step(s: &VehicleState, u: &ControlInput, dt: f64, p: &VehicleParams) -> VehicleState {
    let dir = s.theta + u.steer;
    VehicleState {
        x: s.x + s.v * dir.cos() * dt,
        y: s.y + s.v * dir.sin() * dt,
        v: (s.v + u.accel * dt).max(0.0),
        theta: s.theta + (2.0 * s.v / p.wheelbase) * u.steer.sin() * dt,
    }
}

pub fn destination(s: &VehicleState, m: &ManeuverOffset) -> Destination {
    Destination {
        state: VehicleState::new(s.x + m.dx, s.y, s.v + m.dv, s.theta),
        y_free: true,
    }
}

/// `x(t)` quintic and `y(t)` quartic, in local time `t in [0, duration]`.
/// Coefficients are stored highest power first.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct PolyTrajectory {
    pub x_coeffs: [f64; 6],
    pub y_coeffs: [f64; 5],
    pub duration: f64,
}

/// Value, first and second derivative of a polynomial (highest power first).
fn horner(coeffs: &[f64], t: f64) -> (f64, f64, f64) {
    let (mut p, mut dp, mut ddp) = (0.0, 0.0, 0.0);
    for &c in coeffs {
        ddp = ddp * t + 2.0 * dp;
        dp = dp * t + p;
        p = p * t + c;
    }
    (p, dp, ddp)
}

impl PolyTrajectory {
    /// `(x, y)`, `(x', y')`, `(x'', y'')` at local time `t`.
    pub fn eval(&self, t: f64) -> [(f64, f64); 3] {
        let (x, dx, ddx) = horner(&self.x_coeffs, t);
        let (y, dy, ddy) = horner(&self.y_coeffs, t);
        [(x, y), (dx, dy), (ddx, ddy)]
    }

    pub fn accel_at(&self, t: f64) -> (f64, f64) {
        self.eval(t)[2]
    }

    /// Boundary-condition residuals in the order
    /// `x(0), x'(0), x''(0), x(T), x'(T), x''(T), y(0), y'(0), y''(0), y'(T), y''(T)`.
    pub fn boundary_residuals(&self, init: &VehicleState, init_accel: (f64, f64), dest: &Destination) -> [f64; 11] {
        let [p0, v0, a0] = self.eval(0.0);
        let [p1, v1, a1] = self.eval(self.duration);
        let (vx0, vy0) = init.velocity();
        let (vx1, vy1) = dest.state.velocity();
        [
            p0.0 - init.x,
            v0.0 - vx0,
            a0.0 - init_accel.0,
            p1.0 - dest.state.x,
            v1.0 - vx1,
            a1.0,
            p0.1 - init.y,
            v0.1 - vy0,
            a0.1 - init_accel.1,
            v1.1 - vy1,
            a1.1,
        ]
    }
}

/// Row of derivative `order` of the monomial basis `t^(n-1) .. t^0` at `t`.
fn basis_row<const N: usize>(t: f64, order: u32) -> [f64; N] {
    let mut row = [0.0; N];
    for (i, slot) in row.iter_mut().enumerate() {
        let power = (N - 1 - i) as u32;
        if power >= order {
            let falling: f64 = (0..order).map(|k| (power - k) as f64).product();
            *slot = falling * t.powi((power - order) as i32);
        }
    }
    row
}

fn solve<const N: usize>(rows: [[f64; N]; N], rhs: [f64; N]) -> Result<[f64; N]> {
    let a = DMatrix::<f64>::from_fn(N, N, |i, j| rows[i][j]);
    let b = DVector::<f64>::from_column_slice(&rhs);
    let lu = a.lu();
    if !lu.is_invertible() {
        return Err(Error::SingularSystem("boundary matrix is not invertible".into()));
    }
    let x = lu
        .solve(&b)
        .ok_or_else(|| Error::SingularSystem("LU solve failed".into()))?;
    if x.iter().any(|c| !c.is_finite()) {
        return Err(Error::SingularSystem("non-finite coefficients".into()));
    }
    let mut out = [0.0; N];
    out.copy_from_slice(x.as_slice());
    Ok(out)
}

/// Fits the lateral quintic and longitudinal quartic through the current
/// state and the manoeuvre destination, arriving with zero acceleration.
/// The final longitudinal position is unconstrained.
pub fn fit_polynomial(
    init: &VehicleState,
    init_accel: (f64, f64),
    dest: &Destination,
    duration: f64,
) -> Result<PolyTrajectory> {
    if !(duration > 0.0 && duration.is_finite()) {
        return Err(Error::SingularSystem(format!(
            "duration must be positive, got {duration}"
        )));
    }
    let t = duration;
    let (vx0, vy0) = init.velocity();
    let (vx1, vy1) = dest.state.velocity();

    let x_rows = [
        basis_row::<6>(0.0, 0),
        basis_row::<6>(0.0, 1),
        basis_row::<6>(0.0, 2),
        basis_row::<6>(t, 0),
        basis_row::<6>(t, 1),
        basis_row::<6>(t, 2),
    ];
    let x_coeffs = solve(x_rows, [init.x, vx0, init_accel.0, dest.state.x, vx1, 0.0])?;

    let y_rows = [
        basis_row::<5>(0.0, 0),
        basis_row::<5>(0.0, 1),
        basis_row::<5>(0.0, 2),
        basis_row::<5>(t, 1),
        basis_row::<5>(t, 2),
    ];
    let y_coeffs = solve(y_rows, [init.y, vy0, init_accel.1, vy1, 0.0])?;

    Ok(PolyTrajectory {
        x_coeffs,
        y_coeffs,
        duration,
    })
}

/// States at `k * dt`, `k = 0..=floor(T / dt)`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DiscretizedTrajectory {
    pub dt: f64,
    pub states: Vec<VehicleState>,
    /// Samples whose speed fell below `1e-9`; their heading is carried over
    /// from the previous sample.
    pub zero_speed: Vec<usize>,
}

impl DiscretizedTrajectory {
    /// Straight-line motion from `s` for `len` samples.
    pub fn constant_velocity(s: VehicleState, dt: f64, len: usize) -> Self {
        let mut t = DiscretizedTrajectory {
            dt,
            states: vec![s],
            zero_speed: Vec::new(),
        };
        t.extend_to(len);
        t
    }

    /// Pads with constant-velocity, constant-heading extrapolation of the
    /// last sample until there are at least `len` samples.
    pub fn extend_to(&mut self, len: usize) {
        let Some(&last) = self.states.last() else {
            return;
        };
        let (vx, vy) = last.velocity();
        let base = self.states.len();
        for k in base..len {
            let h = (k + 1 - base) as f64 * self.dt;
            self.states
                .push(VehicleState::new(last.x + vx * h, last.y + vy * h, last.v, last.theta));
        }
    }

    pub fn len(&self) -> usize {
        self.states.len()
    }

    pub fn is_empty(&self) -> bool {
        self.states.is_empty()
    }
}

pub fn sample(traj: &PolyTrajectory, dt: f64) -> Result<DiscretizedTrajectory> {
    if !(dt > 0.0 && dt <= traj.duration * (1.0 + 1e-12)) {
        return Err(Error::InvalidInput(format!(
            "sample spacing {dt} must lie in (0, {}]",
            traj.duration
        )));
    }
    let count = (traj.duration / dt + 1e-9).floor() as usize + 1;
    let mut states = Vec::with_capacity(count);
    let mut zero_speed = Vec::new();
    let mut heading = FRAC_PI_2;
    for k in 0..count {
        let [(x, y), (dx, dy), _] = traj.eval(k as f64 * dt);
        let v = dx.hypot(dy);
        if v < 1e-9 {
            zero_speed.push(k);
        } else {
            heading = dy.atan2(dx);
        }
        states.push(VehicleState::new(x, y, v, heading));
    }
    Ok(DiscretizedTrajectory { dt, states, zero_speed })
}

/// `t,x,y,v,theta` with six significant digits.
pub fn write_trajectory_csv<W: Write>(states: &[VehicleState], dt: f64, mut w: W) -> io::Result<()> {
    writeln!(w, "t,x,y,v,theta")?;
    for (k, s) in states.iter().enumerate() {
        writeln!(
            w,
            "{},{},{},{},{}",
            sig(k as f64 * dt, 6),
            sig(s.x, 6),
            sig(s.y, 6),
            sig(s.v, 6),
            sig(s.theta, 6)
        )?;
    }
    Ok(())
}
