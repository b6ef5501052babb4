use serde::{Deserialize, Serialize};

use crate::vehicle::{VehicleParams, VehicleState};

/// A vehicle joining or leaving the platoon.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum ManeuverEvent {
    /// The newcomer takes platoon slot `position` (one-based); vehicles from
    /// that slot on move back by one.
    CutIn {
        time_s: f64,
        position: usize,
        params: VehicleParams,
        /// Entry state; defaults to the predecessor's speed at the midpoint
        /// of the gap being entered.
        #[serde(default, skip_serializing_if = "Option::is_none")]
        initial_state: Option<VehicleState>,
    },
    /// The vehicle with this id leaves.
    CutOut { time_s: f64, vehicle_id: u32 },
}

impl ManeuverEvent {
    pub fn time_s(&self) -> f64 {
        match self {
            Self::CutIn { time_s, .. } | Self::CutOut { time_s, .. } => *time_s,
        }
    }

    pub fn is_cut_in(&self) -> bool {
        matches!(self, Self::CutIn { .. })
    }

    /// Sampling step at which the event is applied.
    pub fn step_index(&self, dt: f64) -> usize {
        (self.time_s() / dt).round().max(0.0) as usize
    }
}
