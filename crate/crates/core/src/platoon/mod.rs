//! Platoon orchestration: leader profile, synchronous distributed solves,
//! assumed-trajectory exchange, maneuvers and convergence checks.

mod event;
mod leader;
mod log;
mod sim;

pub use event::ManeuverEvent;
pub use leader::LeaderProfile;
pub use log::{check_collision_free, detect_convergence, HorizonSnapshot, PlatoonLog, StepRecord, VehicleRecord};
pub use sim::{run, AdmmTrace, RunError, RunOptions, RunOutput};

use serde::{Deserialize, Serialize};

use crate::error::ConfigError;

/// Re-convergence bound after maneuvers, in sampling steps and in the
/// seconds convention where vehicle counts are added to event times
/// directly.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ConvergenceBound {
    pub steps: usize,
    pub seconds: f64,
}

/// `max(event times) + N + N_ci - N_co`; the max is 0 without events.
pub fn t_conv_bound(n_initial: usize, events: &[ManeuverEvent], dt: f64) -> Result<ConvergenceBound, ConfigError> {
    if !(dt > 0.0 && dt.is_finite()) {
        return Err(ConfigError::Invalid("dt must be positive".into()));
    }
    let cut_ins = events.iter().filter(|e| e.is_cut_in()).count() as i64;
    let cut_outs = events.len() as i64 - cut_ins;
    let count = n_initial as i64 + cut_ins - cut_outs;
    if count <= 0 {
        return Err(ConfigError::Invalid(format!(
            "degenerate platoon: N + N_ci - N_co = {count} must be positive"
        )));
    }
    let last = events.iter().map(ManeuverEvent::time_s).fold(0.0, f64::max);
    let last_step = events.iter().map(|e| e.step_index(dt)).max().unwrap_or(0);
    Ok(ConvergenceBound { steps: last_step + count as usize, seconds: last + count as f64 })
}
