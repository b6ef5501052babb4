//! Longitudinal dynamics of a single heterogeneous follower vehicle.
//!
//! State is `[position, velocity, torque]`, output is `[position, velocity]`.
//! Units are SI throughout; torque and the control input share torque units.

use nalgebra::{Matrix3, Vector2, Vector3};
use serde::{Deserialize, Serialize};

use crate::error::ConfigError;

/// Default gravity constant used when a scenario does not override it.
pub const DEFAULT_GRAVITY: f64 = 9.8;

/// Per-vehicle physical constants and input bounds.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct VehicleParams {
    pub id: u32,
    pub mass_kg: f64,
    pub aero_drag_coeff: f64,
    pub rolling_resist_coeff: f64,
    pub inertial_lag_s: f64,
    pub tire_radius_m: f64,
    pub driveline_efficiency: f64,
    pub u_min: f64,
    pub u_max: f64,
}

impl VehicleParams {
    /// Builds a parameter set with torque bounds derived from acceleration
    /// limits: `u = a * m * r / eta` for `a` in `[-brake_mps2, accel_mps2]`.
    pub fn with_accel_limits(
        id: u32,
        mass_kg: f64,
        inertial_lag_s: f64,
        aero_drag_coeff: f64,
        tire_radius_m: f64,
        accel_mps2: f64,
        brake_mps2: f64,
    ) -> Self {
        let eta = 0.9;
        let per_accel = mass_kg * tire_radius_m / eta;
        Self {
            id,
            mass_kg,
            aero_drag_coeff,
            rolling_resist_coeff: 0.01,
            inertial_lag_s,
            tire_radius_m,
            driveline_efficiency: eta,
            u_min: (-brake_mps2 * per_accel).round(),
            u_max: (accel_mps2 * per_accel).round(),
        }
    }

    pub fn validate(&self) -> Result<(), ConfigError> {
        let finite = [
            self.mass_kg,
            self.aero_drag_coeff,
            self.rolling_resist_coeff,
            self.inertial_lag_s,
            self.tire_radius_m,
            self.driveline_efficiency,
            self.u_min,
            self.u_max,
        ]
        .iter()
        .all(|x| x.is_finite());
        let invalid = |what: &str| ConfigError::InvalidVehicle {
            id: self.id,
            reason: what.to_string(),
        };
        if !finite {
            return Err(invalid("non-finite parameter"));
        }
        if self.mass_kg <= 0.0 {
            return Err(invalid("mass_kg must be positive"));
        }
        if self.inertial_lag_s <= 0.0 {
            return Err(invalid("inertial_lag_s must be positive"));
        }
        if self.tire_radius_m <= 0.0 {
            return Err(invalid("tire_radius_m must be positive"));
        }
        if !(self.driveline_efficiency > 0.0 && self.driveline_efficiency <= 1.0) {
            return Err(invalid("driveline_efficiency must lie in (0, 1]"));
        }
        if self.u_min >= self.u_max {
            return Err(invalid("u_min must be below u_max"));
        }
        Ok(())
    }

    /// Width of the admissible input range, `u_max - u_min`.
    #[inline]
    pub fn input_span(&self) -> f64 {
        self.u_max - self.u_min
    }

    /// Clamps a control input into `[u_min, u_max]`.
    #[inline]
    pub fn clamp_input(&self, u: f64) -> f64 {
        u.clamp(self.u_min, self.u_max)
    }
}

/// Default heterogeneous fleet used when a scenario does not list vehicles.
///
/// These values are a documented engineering default, not measured data.
/// Scenarios with more followers than entries cycle through the list.
pub fn default_fleet() -> Vec<VehicleParams> {
    const TABLE: [(f64, f64, f64, f64); 7] = [
        (1035.7, 0.51, 0.99, 0.30),
        (1849.2, 0.75, 1.10, 0.38),
        (1934.8, 0.78, 1.07, 0.39),
        (1678.5, 0.70, 1.15, 0.35),
        (1757.7, 0.71, 0.94, 0.37),
        (1743.1, 0.71, 0.90, 0.36),
        (1392.9, 0.60, 0.96, 0.32),
    ];
    TABLE
        .iter()
        .enumerate()
        .map(|(k, &(m, tau, ca, r))| VehicleParams::with_accel_limits(k as u32 + 1, m, tau, ca, r, 4.0, 6.0))
        .collect()
}

/// Default parameters for a vehicle with the given id, drawn from [`default_fleet`].
pub fn default_vehicle(id: u32) -> VehicleParams {
    let fleet = default_fleet();
    let mut p = fleet[(id.max(1) as usize - 1) % fleet.len()];
    p.id = id;
    p
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PhysicalConstants {
    #[serde(default = "default_gravity")]
    pub gravity_mps2: f64,
    #[serde(default = "default_dt")]
    pub dt_s: f64,
}

fn default_gravity() -> f64 {
    DEFAULT_GRAVITY
}

fn default_dt() -> f64 {
    0.1
}

impl Default for PhysicalConstants {
    fn default() -> Self {
        Self { gravity_mps2: DEFAULT_GRAVITY, dt_s: 0.1 }
    }
}

impl PhysicalConstants {
    pub fn validate(&self) -> Result<(), ConfigError> {
        if !(self.gravity_mps2 > 0.0 && self.gravity_mps2.is_finite()) {
            return Err(ConfigError::Invalid("gravity_mps2 must be positive".into()));
        }
        if !(self.dt_s > 0.0 && self.dt_s.is_finite()) {
            return Err(ConfigError::Invalid("dt_s must be positive".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct VehicleState {
    pub position_m: f64,
    pub velocity_mps: f64,
    pub torque: f64,
}

impl VehicleState {
    pub fn new(position_m: f64, velocity_mps: f64, torque: f64) -> Self {
        Self { position_m, velocity_mps, torque }
    }

    pub fn output(&self) -> OutputVec {
        OutputVec::new(self.position_m, self.velocity_mps)
    }

    pub fn as_vector(&self) -> Vector3<f64> {
        Vector3::new(self.position_m, self.velocity_mps, self.torque)
    }

    pub fn is_finite(&self) -> bool {
        self.position_m.is_finite() && self.velocity_mps.is_finite() && self.torque.is_finite()
    }
}

/// Position/velocity output, the quantity vehicles exchange.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct OutputVec {
    pub position_m: f64,
    pub velocity_mps: f64,
}

impl OutputVec {
    pub fn new(position_m: f64, velocity_mps: f64) -> Self {
        Self { position_m, velocity_mps }
    }

    pub fn as_vector(&self) -> Vector2<f64> {
        Vector2::new(self.position_m, self.velocity_mps)
    }
}

/// Aerodynamic drag plus rolling resistance, `C_A v^2 + m g f`.
#[inline]
pub fn drag_force(params: &VehicleParams, consts: &PhysicalConstants, v: f64) -> f64 {
    params.aero_drag_coeff * v * v + params.mass_kg * consts.gravity_mps2 * params.rolling_resist_coeff
}

/// Torque that holds velocity `v` constant against drag, `(r/eta) * drag(v)`.
#[inline]
pub fn equilibrium_torque(params: &VehicleParams, consts: &PhysicalConstants, v: f64) -> f64 {
    params.tire_radius_m / params.driveline_efficiency * drag_force(params, consts, v)
}

/// Derivative of [`equilibrium_torque`] with respect to velocity.
#[inline]
pub fn equilibrium_torque_slope(params: &VehicleParams, v: f64) -> f64 {
    params.tire_radius_m / params.driveline_efficiency * 2.0 * params.aero_drag_coeff * v
}

/// One sampling period of the discrete dynamics.
pub fn step(params: &VehicleParams, consts: &PhysicalConstants, x: &VehicleState, u: f64) -> VehicleState {
    let dt = consts.dt_s;
    let lag = dt / params.inertial_lag_s;
    let traction = params.driveline_efficiency / params.tire_radius_m * x.torque;
    VehicleState {
        position_m: x.position_m + x.velocity_mps * dt,
        velocity_mps: x.velocity_mps + dt / params.mass_kg * (traction - drag_force(params, consts, x.velocity_mps)),
        torque: x.torque - lag * x.torque + lag * u,
    }
}

/// Jacobian of [`step`] with respect to the state at `x`.
pub fn step_state_jacobian(params: &VehicleParams, consts: &PhysicalConstants, x: &VehicleState) -> Matrix3<f64> {
    let dt = consts.dt_s;
    let m = params.mass_kg;
    Matrix3::new(
        1.0,
        dt,
        0.0,
        0.0,
        1.0 - dt / m * 2.0 * params.aero_drag_coeff * x.velocity_mps,
        dt / m * params.driveline_efficiency / params.tire_radius_m,
        0.0,
        0.0,
        1.0 - dt / params.inertial_lag_s,
    )
}

/// Input column of the dynamics; the control enters only the torque channel.
pub fn input_gain(params: &VehicleParams, consts: &PhysicalConstants) -> Vector3<f64> {
    Vector3::new(0.0, 0.0, consts.dt_s / params.inertial_lag_s)
}

/// Desired state of the follower at platoon slot `index`, given the leader pose.
pub fn desired_state(
    leader_pos: f64,
    leader_vel: f64,
    index_gap_m: f64,
    params: &VehicleParams,
    consts: &PhysicalConstants,
) -> VehicleState {
    VehicleState {
        position_m: leader_pos - index_gap_m,
        velocity_mps: leader_vel,
        torque: equilibrium_torque(params, consts, leader_vel),
    }
}
