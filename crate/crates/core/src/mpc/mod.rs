//! Local finite-horizon nonlinear MPC for one follower.
//!
//! Single shooting over the control sequence: the predicted states are
//! always the exact rollout of the controls, box bounds are enforced by
//! projection, and the terminal equality constraints go through an
//! augmented-Lagrangian penalty whose residual is reported back.

mod objective;
mod solve;

pub use objective::{objective, objective_gradient, weight_gradients, WeightGradient};
pub use solve::{solve, SolveReport, SolveStatus, SolverOptions};

use nalgebra::Matrix2;
use serde::{Deserialize, Serialize};

use crate::error::SolverError;
use crate::vehicle::{self, OutputVec, PhysicalConstants, VehicleParams, VehicleState};

/// Predicted (or assumed) plan over the horizon. Always the exact rollout
/// of `controls` from `states[0]`.
#[derive(Debug, Clone, PartialEq)]
pub struct HorizonTrajectory {
    controls: Vec<f64>,
    states: Vec<VehicleState>,
    outputs: Vec<OutputVec>,
}

impl HorizonTrajectory {
    pub fn rollout(
        x0: VehicleState,
        controls: Vec<f64>,
        params: &VehicleParams,
        consts: &PhysicalConstants,
    ) -> Self {
        let mut states = Vec::with_capacity(controls.len() + 1);
        states.push(x0);
        for &u in &controls {
            let next = vehicle::step(params, consts, states.last().unwrap(), u);
            states.push(next);
        }
        let outputs = states.iter().map(VehicleState::output).collect();
        Self { controls, states, outputs }
    }

    /// Constant-input plan holding the equilibrium torque of the initial speed.
    pub fn hold_equilibrium(x0: VehicleState, horizon: usize, params: &VehicleParams, consts: &PhysicalConstants) -> Self {
        let u = vehicle::equilibrium_torque(params, consts, x0.velocity_mps);
        Self::rollout(x0, vec![u; horizon], params, consts)
    }

    pub fn horizon_len(&self) -> usize {
        self.controls.len()
    }

    pub fn controls(&self) -> &[f64] {
        &self.controls
    }

    pub fn states(&self) -> &[VehicleState] {
        &self.states
    }

    pub fn outputs(&self) -> &[OutputVec] {
        &self.outputs
    }

    pub fn initial_state(&self) -> VehicleState {
        self.states[0]
    }

    pub fn terminal_state(&self) -> VehicleState {
        *self.states.last().unwrap()
    }
}

/// Assumed plan for the next sampling instant: drop the first control,
/// append the equilibrium torque of the terminal speed, and roll out again
/// from the second predicted state.
pub fn shift_assumed(prev: &HorizonTrajectory, params: &VehicleParams, consts: &PhysicalConstants) -> HorizonTrajectory {
    let n = prev.horizon_len();
    if n == 0 {
        return prev.clone();
    }
    let hold = vehicle::equilibrium_torque(params, consts, prev.terminal_state().velocity_mps);
    let mut controls = Vec::with_capacity(n);
    controls.extend_from_slice(&prev.controls[1..]);
    controls.push(hold);
    HorizonTrajectory::rollout(prev.states[1], controls, params, consts)
}

/// Quadratic-form weights of the local cost.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct WeightSet {
    /// Deviation from the desired output (only used when pinned).
    #[serde(with = "mat2_serde")]
    pub q: Matrix2<f64>,
    /// Deviation of the input from the equilibrium torque, measured as a
    /// fraction of the input range.
    pub r: f64,
    /// Deviation from the vehicle's own assumed output.
    #[serde(with = "mat2_serde")]
    pub f: Matrix2<f64>,
    /// Deviation from each in-neighbor's shifted assumed output.
    #[serde(with = "mat2_serde")]
    pub g: Matrix2<f64>,
}

impl Default for WeightSet {
    fn default() -> Self {
        Self {
            q: Matrix2::identity(),
            r: 50.0,
            f: Matrix2::identity() * 100.0,
            g: Matrix2::identity() * 50.0,
        }
    }
}

impl WeightSet {
    /// Symmetric, PSD weights and non-negative `r`.
    pub fn validate(&self) -> Result<(), String> {
        for (name, m) in [("q", &self.q), ("f", &self.f), ("g", &self.g)] {
            if m.iter().any(|x| !x.is_finite()) {
                return Err(format!("weight {name} is not finite"));
            }
            if (m[(0, 1)] - m[(1, 0)]).abs() > 1e-12 * m.amax().max(1.0) {
                return Err(format!("weight {name} is not symmetric"));
            }
            if crate::metric::min_eigenvalue2(m) < -1e-12 {
                return Err(format!("weight {name} is not positive semi-definite"));
            }
        }
        if !(self.r >= 0.0 && self.r.is_finite()) {
            return Err("weight r must be non-negative".into());
        }
        Ok(())
    }
}

/// Assumed output of one in-neighbor and its desired gap offset.
#[derive(Debug, Clone, PartialEq)]
pub struct NeighborTrajectory {
    pub id: u32,
    pub outputs: Vec<OutputVec>,
    /// `d_ij`: desired distance from neighbor `j` to this vehicle, `(i - j) d`.
    pub gap_m: f64,
}

/// Everything the vehicle hears from its information set.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct NeighborData {
    pub neighbors: Vec<NeighborTrajectory>,
    /// When pinned, the leader's constant-speed extrapolation enters through
    /// the desired outputs.
    pub pinned: bool,
}

impl NeighborData {
    pub fn info_set_len(&self) -> usize {
        self.neighbors.len() + usize::from(self.pinned)
    }
}

/// One follower's local optimal control problem at a sampling instant.
#[derive(Debug, Clone, Copy)]
pub struct LocalProblem<'a> {
    pub params: &'a VehicleParams,
    pub consts: &'a PhysicalConstants,
    pub x0: VehicleState,
    /// The vehicle's own assumed plan; its controls also seed the solver.
    pub assumed_self: &'a HorizonTrajectory,
    pub neighbors: &'a NeighborData,
    /// Desired outputs `[s_0 + v_0 k dt - i d, v_0]`, length `N_p + 1`.
    pub desired: &'a [OutputVec],
    pub weights: &'a WeightSet,
}

impl LocalProblem<'_> {
    pub fn horizon_len(&self) -> usize {
        self.assumed_self.horizon_len()
    }

    pub fn validate(&self) -> Result<(), SolverError> {
        let np = self.horizon_len();
        if np == 0 {
            return Err(SolverError::EmptyHorizon);
        }
        let expect = np + 1;
        let check = |what: &'static str, got: usize| {
            if got != expect {
                Err(SolverError::LengthMismatch { what, got, expected: expect })
            } else {
                Ok(())
            }
        };
        check("desired outputs", self.desired.len())?;
        check("assumed outputs", self.assumed_self.outputs().len())?;
        for n in &self.neighbors.neighbors {
            check("neighbor outputs", n.outputs.len())?;
        }
        if self.neighbors.info_set_len() == 0 {
            return Err(SolverError::EmptyInformationSet);
        }
        if !self.x0.is_finite() {
            return Err(SolverError::NonFinite("initial state"));
        }
        Ok(())
    }

    /// Terminal output target: mean over the information set of the senders'
    /// assumed terminal outputs shifted back by the desired gap.
    pub fn terminal_target(&self) -> OutputVec {
        let np = self.horizon_len();
        let mut s = 0.0;
        let mut v = 0.0;
        for n in &self.neighbors.neighbors {
            s += n.outputs[np].position_m - n.gap_m;
            v += n.outputs[np].velocity_mps;
        }
        if self.neighbors.pinned {
            s += self.desired[np].position_m;
            v += self.desired[np].velocity_mps;
        }
        let count = self.neighbors.info_set_len() as f64;
        OutputVec::new(s / count, v / count)
    }
}

mod mat2_serde {
    use nalgebra::Matrix2;
    use serde::{Deserialize, Deserializer, Serialize, Serializer};

    pub fn serialize<S: Serializer>(m: &Matrix2<f64>, s: S) -> Result<S::Ok, S::Error> {
        [[m[(0, 0)], m[(0, 1)]], [m[(1, 0)], m[(1, 1)]]].serialize(s)
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<Matrix2<f64>, D::Error> {
        let rows = <[[f64; 2]; 2]>::deserialize(d)?;
        Ok(Matrix2::new(rows[0][0], rows[0][1], rows[1][0], rows[1][1]))
    }
}
