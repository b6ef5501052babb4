use serde::{Deserialize, Serialize};

use crate::mpc::{SolveStatus, WeightSet};
use crate::vehicle::{OutputVec, VehicleState};

/// Horizon data of one vehicle's solve, kept when snapshots are enabled.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HorizonSnapshot {
    pub predicted: Vec<OutputVec>,
    pub assumed: Vec<OutputVec>,
    pub desired: Vec<OutputVec>,
    /// Mean of the in-neighbors' assumed outputs shifted by the desired gaps;
    /// empty without in-neighbors.
    pub neighbor_reference: Vec<OutputVec>,
    pub controls: Vec<f64>,
    /// `h(v)` along the predicted velocities.
    pub equilibrium: Vec<f64>,
    /// `u_max - u_min`, the scale of the input term.
    pub input_span: f64,
    pub weights: WeightSet,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VehicleRecord {
    pub id: u32,
    /// One-based platoon slot at this step.
    pub slot: usize,
    pub state: VehicleState,
    pub control: f64,
    /// `s_{i-1} - s_i - d`, with the leader as predecessor of slot 1.
    pub spacing_error: f64,
    pub velocity_error: f64,
    pub cost: f64,
    pub terminal_residual: f64,
    pub status: SolveStatus,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub horizon: Option<HorizonSnapshot>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StepRecord {
    pub step: usize,
    pub time_s: f64,
    pub leader: OutputVec,
    /// Whether a maneuver was applied at this step (before solving).
    pub maneuver: bool,
    pub vehicles: Vec<VehicleRecord>,
    /// Sum of the local optimal costs.
    pub total_cost: f64,
}

/// Append-only record of a run with strictly increasing time.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct PlatoonLog {
    pub dt_s: f64,
    pub desired_gap_m: f64,
    steps: Vec<StepRecord>,
}

impl PlatoonLog {
    pub fn new(dt_s: f64, desired_gap_m: f64) -> Self {
        Self { dt_s, desired_gap_m, steps: Vec::new() }
    }

    /// Appends a step; panics if time does not increase.
    pub fn push(&mut self, record: StepRecord) {
        if let Some(last) = self.steps.last() {
            assert!(record.time_s > last.time_s, "log time must increase");
        }
        self.steps.push(record);
    }

    pub fn steps(&self) -> &[StepRecord] {
        &self.steps
    }

    pub fn len(&self) -> usize {
        self.steps.len()
    }

    pub fn is_empty(&self) -> bool {
        self.steps.is_empty()
    }

    pub fn last_maneuver_index(&self) -> Option<usize> {
        self.steps.iter().rposition(|s| s.maneuver)
    }

    pub fn max_abs_spacing_error(&self) -> f64 {
        self.fold_vehicles(|v| v.spacing_error.abs())
    }

    pub fn max_abs_velocity_error(&self) -> f64 {
        self.fold_vehicles(|v| v.velocity_error.abs())
    }

    fn fold_vehicles(&self, f: impl Fn(&VehicleRecord) -> f64) -> f64 {
        self.steps.iter().flat_map(|s| s.vehicles.iter()).map(f).fold(0.0, f64::max)
    }
}

/// First logged time at or after the last maneuver from which every vehicle
/// stays within both tolerances until the end of the log.
pub fn detect_convergence(log: &PlatoonLog, tol_pos: f64, tol_vel: f64) -> Option<f64> {
    let steps = log.steps();
    let start = log.last_maneuver_index().unwrap_or(0);
    let within = |s: &StepRecord| {
        s.vehicles.iter().all(|v| v.spacing_error.abs() <= tol_pos && v.velocity_error.abs() <= tol_vel)
    };
    let mut first = steps.len();
    while first > start && within(&steps[first - 1]) {
        first -= 1;
    }
    (first < steps.len()).then(|| steps[first].time_s)
}

/// True iff every consecutive pair (leader included) keeps a gap strictly
/// above `margin_m` at every logged step.
pub fn check_collision_free(log: &PlatoonLog, margin_m: f64) -> bool {
    log.steps().iter().all(|s| {
        let mut ahead = s.leader.position_m;
        s.vehicles.iter().all(|v| {
            let ok = ahead - v.state.position_m > margin_m;
            ahead = v.state.position_m;
            ok
        })
    })
}
