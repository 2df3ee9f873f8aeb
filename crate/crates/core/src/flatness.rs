//! Quasi-steady flat map from position derivatives to vehicle states and
//! inputs, plus a forward-Euler rollout of the full dynamic bicycle model.
//!
//! Tire forces are linear in the slip angles
//! `α_f = δ − (v_y + l_f ω)/v_x` and `α_r = −(v_y − l_r ω)/v_x`.

use nalgebra::{Matrix2, Vector2};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::bezier::{BezierError, Trajectory};
use crate::geometry::{cross, Vec2};

pub const DEFAULT_V_FLOOR: f64 = 0.5;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum FlatnessError {
    #[error("speed {speed:.4} m/s is below the floor {floor} m/s")]
    SpeedBelowFloor { speed: f64, floor: f64 },
    #[error("quasi-steady system is singular (det {0:e})")]
    Singular(f64),
    #[error("longitudinal speed fell to {vx:.4} m/s at step {step}")]
    Underflow { step: usize, vx: f64 },
    #[error("time step must be positive and finite, got {0}")]
    BadStep(f64),
    #[error("vehicle parameter {0} must be strictly positive and finite")]
    InvalidParams(&'static str),
    #[error(transparent)]
    Bezier(#[from] BezierError),
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct VehicleParams {
    pub m: f64,
    pub i_z: f64,
    pub l_f: f64,
    pub l_r: f64,
    pub c_f: f64,
    pub c_r: f64,
}

impl Default for VehicleParams {
    fn default() -> Self {
        VehicleParams {
            m: 1500.0,
            i_z: 2500.0,
            l_f: 1.35,
            l_r: 1.35,
            c_f: 8e4,
            c_r: 8e4,
        }
    }
}

impl VehicleParams {
    pub fn validate(&self) -> Result<(), FlatnessError> {
        let fields = [
            ("m", self.m),
            ("i_z", self.i_z),
            ("l_f", self.l_f),
            ("l_r", self.l_r),
            ("c_f", self.c_f),
            ("c_r", self.c_r),
        ];
        for (name, value) in fields {
            if !(value.is_finite() && value > 0.0) {
                return Err(FlatnessError::InvalidParams(name));
            }
        }
        Ok(())
    }

    pub fn wheelbase(&self) -> f64 {
        self.l_f + self.l_r
    }

    /// Side-slip from the lateral balance alone, given `δ` and `ω`.
    pub fn quasi_steady_beta(&self, v: f64, delta: f64, omega: f64) -> f64 {
        let c = self.c_f + self.c_r;
        self.c_f / c * delta
            + ((self.c_r * self.l_r - self.c_f * self.l_f) / v - self.m * v) * omega / c
    }

    /// Residuals of the lateral (acceleration units) and yaw (moment units)
    /// quasi-steady balances.
    pub fn balance_residuals(
        &self,
        v: f64,
        beta: f64,
        delta: f64,
        omega: f64,
        omega_dot: f64,
    ) -> (f64, f64) {
        let p = self;
        let lateral = -((p.c_f + p.c_r) / p.m) * beta - omega * v
            + (p.c_f / p.m) * delta
            + ((p.c_r * p.l_r - p.c_f * p.l_f) / (p.m * v)) * omega;
        let yaw = p.l_f * p.c_f * (delta - beta - p.l_f * omega / v)
            + p.l_r * p.c_r * (beta - p.l_r * omega / v)
            - p.i_z * omega_dot;
        (lateral, yaw)
    }
}

/// Everything the flat map recovers at one instant.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FlatState {
    pub v: f64,
    pub theta: f64,
    pub k: f64,
    pub k_dot: f64,
    pub v_dot: f64,
    pub omega: f64,
    pub omega_dot: f64,
    pub beta: f64,
    pub psi: f64,
    pub v_x: f64,
    pub v_y: f64,
    pub a: f64,
    pub delta: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FullState {
    pub p_x: f64,
    pub p_y: f64,
    pub psi: f64,
    pub v_x: f64,
    pub v_y: f64,
    pub omega: f64,
}

impl FullState {
    pub fn position(&self) -> Vec2 {
        Vec2::new(self.p_x, self.p_y)
    }

    pub fn from_flat(position: Vec2, flat: &FlatState) -> FullState {
        FullState {
            p_x: position.x,
            p_y: position.y,
            psi: flat.psi,
            v_x: flat.v_x,
            v_y: flat.v_y,
            omega: flat.omega,
        }
    }

    fn is_finite(&self) -> bool {
        [self.p_x, self.p_y, self.psi, self.v_x, self.v_y, self.omega]
            .iter()
            .all(|x| x.is_finite())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ControlInput {
    pub a: f64,
    pub delta: f64,
}

/// Recover the full state and inputs from `q̇, q̈, q⃛`.
///
/// `(β, δ)` come from solving the lateral and yaw quasi-steady balances
/// jointly.
pub fn flat_reconstruct(
    vel: &Vec2,
    acc: &Vec2,
    jerk: &Vec2,
    params: &VehicleParams,
    v_floor: f64,
) -> Result<FlatState, FlatnessError> {
    let v = vel.norm();
    if !(v >= v_floor) {
        return Err(FlatnessError::SpeedBelowFloor {
            speed: v,
            floor: v_floor,
        });
    }
    let theta = vel.y.atan2(vel.x);
    let v_dot = vel.dot(acc) / v;
    let k = cross(vel, acc) / v.powi(3);
    let k_dot = cross(vel, jerk) / v.powi(3) - 3.0 * cross(vel, acc) * v_dot / v.powi(4);
    let omega = v * k;
    let omega_dot = v_dot * k + v * k_dot;

    let p = params;
    let system = Matrix2::new(
        -(p.c_f + p.c_r) / p.m,
        p.c_f / p.m,
        p.l_r * p.c_r - p.l_f * p.c_f,
        p.l_f * p.c_f,
    );
    let rhs = Vector2::new(
        omega * v - (p.c_r * p.l_r - p.c_f * p.l_f) / (p.m * v) * omega,
        p.i_z * omega_dot + (p.l_f * p.l_f * p.c_f + p.l_r * p.l_r * p.c_r) * omega / v,
    );
    let det = system.determinant();
    if det.abs() < 1e-9 {
        return Err(FlatnessError::Singular(det));
    }
    let sol = system
        .lu()
        .solve(&rhs)
        .ok_or(FlatnessError::Singular(det))?;
    let (beta, delta) = (sol[0], sol[1]);

    Ok(FlatState {
        v,
        theta,
        k,
        k_dot,
        v_dot,
        omega,
        omega_dot,
        beta,
        psi: theta - beta,
        v_x: v,
        v_y: v * beta,
        a: v_dot - v * v * k * beta,
        delta,
    })
}

fn derivative(params: &VehicleParams, s: &FullState, u: &ControlInput) -> [f64; 6] {
    let p = params;
    let alpha_f = u.delta - (s.v_y + p.l_f * s.omega) / s.v_x;
    let alpha_r = -(s.v_y - p.l_r * s.omega) / s.v_x;
    let f_f = p.c_f * alpha_f;
    let f_r = p.c_r * alpha_r;
    let (sin, cos) = s.psi.sin_cos();
    [
        s.v_x * cos - s.v_y * sin,
        s.v_x * sin + s.v_y * cos,
        s.omega,
        u.a + s.omega * s.v_y,
        -s.omega * s.v_x + (f_f + f_r) / p.m,
        (f_f * p.l_f - f_r * p.l_r) / p.i_z,
    ]
}

/// Forward-Euler integration; returns `inputs.len() + 1` states starting
/// with `x0`.
pub fn rollout(
    params: &VehicleParams,
    x0: FullState,
    inputs: &[ControlInput],
    dt: f64,
) -> Result<Vec<FullState>, FlatnessError> {
    rollout_with_floor(params, x0, inputs, dt, DEFAULT_V_FLOOR)
}

pub fn rollout_with_floor(
    params: &VehicleParams,
    x0: FullState,
    inputs: &[ControlInput],
    dt: f64,
    v_floor: f64,
) -> Result<Vec<FullState>, FlatnessError> {
    if !(dt.is_finite() && dt > 0.0) {
        return Err(FlatnessError::BadStep(dt));
    }
    params.validate()?;
    let mut states = Vec::with_capacity(inputs.len() + 1);
    let mut s = x0;
    for (step, u) in inputs.iter().enumerate() {
        if !(s.v_x >= v_floor) || !s.is_finite() {
            return Err(FlatnessError::Underflow { step, vx: s.v_x });
        }
        states.push(s);
        let d = derivative(params, &s, u);
        s = FullState {
            p_x: s.p_x + dt * d[0],
            p_y: s.p_y + dt * d[1],
            psi: s.psi + dt * d[2],
            v_x: s.v_x + dt * d[3],
            v_y: s.v_y + dt * d[4],
            omega: s.omega + dt * d[5],
        };
    }
    if !(s.v_x >= v_floor) || !s.is_finite() {
        return Err(FlatnessError::Underflow {
            step: inputs.len(),
            vx: s.v_x,
        });
    }
    states.push(s);
    Ok(states)
}

/// Flat states sampled every `dt` along a trajectory (last sample lands on
/// the end time exactly), paired with their times and planned positions.
pub fn sample_flat(
    traj: &Trajectory,
    params: &VehicleParams,
    dt: f64,
    v_floor: f64,
) -> Result<Vec<(f64, Vec2, FlatState)>, FlatnessError> {
    if !(dt.is_finite() && dt > 0.0) {
        return Err(FlatnessError::BadStep(dt));
    }
    let t0 = traj.start_time();
    let n = (traj.duration() / dt).ceil() as usize;
    (0..=n)
        .map(|i| {
            let t = (t0 + i as f64 * dt).min(traj.end_time());
            let k = traj.kinematics_at(t)?;
            let flat = flat_reconstruct(&k.velocity, &k.acceleration, &k.jerk, params, v_floor)?;
            Ok((t, k.position, flat))
        })
        .collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ConsistencyReport {
    pub max_deviation: f64,
    pub rms_deviation: f64,
    pub path_length: f64,
    pub dt: f64,
}

impl ConsistencyReport {
    pub fn relative_max(&self) -> f64 {
        if self.path_length > 0.0 {
            self.max_deviation / self.path_length
        } else {
            0.0
        }
    }
}

/// Reconstruct inputs along the plan, roll the full model from the flat
/// initial state, and measure how far the rolled positions drift from the
/// planned ones.
pub fn rollout_consistency(
    traj: &Trajectory,
    params: &VehicleParams,
    dt: f64,
    v_floor: f64,
) -> Result<ConsistencyReport, FlatnessError> {
    params.validate()?;
    let samples = sample_flat(traj, params, dt, v_floor)?;
    let inputs: Vec<ControlInput> = samples[..samples.len() - 1]
        .iter()
        .map(|(_, _, f)| ControlInput {
            a: f.a,
            delta: f.delta,
        })
        .collect();
    let (_, p0, f0) = &samples[0];
    let x0 = FullState::from_flat(*p0, f0);

    // The last sample may be closer than dt; Euler steps use the exact gap.
    let mut states = Vec::with_capacity(samples.len());
    let mut s = x0;
    states.push(s);
    for (i, u) in inputs.iter().enumerate() {
        let h = samples[i + 1].0 - samples[i].0;
        if h <= 0.0 {
            states.push(s);
            continue;
        }
        s = *rollout_with_floor(params, s, std::slice::from_ref(u), h, v_floor)?
            .last()
            .expect("two states");
        states.push(s);
    }

    let deviations: Vec<f64> = samples
        .iter()
        .zip(&states)
        .map(|((_, p, _), x)| (x.position() - p).norm())
        .collect();
    let max_deviation = deviations.iter().cloned().fold(0.0, f64::max);
    let rms_deviation =
        (deviations.iter().map(|d| d * d).sum::<f64>() / deviations.len() as f64).sqrt();
    Ok(ConsistencyReport {
        max_deviation,
        rms_deviation,
        path_length: traj.path_length(),
        dt,
    })
}
