use serde::{Deserialize, Serialize};

use crate::error::ConfigError;

/// Leader speed as a piecewise-linear function of time through `speed_knots`
/// `(t, v)`, held constant before the first and after the last knot.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LeaderProfile {
    #[serde(default)]
    pub initial_position_m: f64,
    pub speed_knots: Vec<(f64, f64)>,
}

impl Default for LeaderProfile {
    fn default() -> Self {
        Self::constant(20.0)
    }
}

impl LeaderProfile {
    pub fn constant(speed_mps: f64) -> Self {
        Self { initial_position_m: 0.0, speed_knots: vec![(0.0, speed_mps)] }
    }

    /// 20 m/s, a 2 m/s^2 ramp during `[1, 2]` s, then 22 m/s.
    pub fn ramp_20_to_22() -> Self {
        Self { initial_position_m: 0.0, speed_knots: vec![(0.0, 20.0), (1.0, 20.0), (2.0, 22.0)] }
    }

    pub fn validate(&self) -> Result<(), ConfigError> {
        if self.speed_knots.is_empty() {
            return Err(ConfigError::Invalid("leader profile needs at least one speed knot".into()));
        }
        if !self.initial_position_m.is_finite() {
            return Err(ConfigError::Invalid("leader initial position must be finite".into()));
        }
        for (k, &(t, v)) in self.speed_knots.iter().enumerate() {
            if !(t.is_finite() && v.is_finite()) || t < 0.0 {
                return Err(ConfigError::Invalid(format!("leader knot {k} must have finite t >= 0")));
            }
            if v < 0.0 {
                return Err(ConfigError::Invalid(format!("leader knot {k} has negative speed")));
            }
            if k > 0 && t <= self.speed_knots[k - 1].0 {
                return Err(ConfigError::Invalid("leader knot times must be strictly increasing".into()));
            }
        }
        Ok(())
    }

    pub fn velocity(&self, t: f64) -> f64 {
        let knots = &self.speed_knots;
        let (t0, v0) = knots[0];
        if t <= t0 {
            return v0;
        }
        for w in knots.windows(2) {
            let ((ta, va), (tb, vb)) = (w[0], w[1]);
            if t <= tb {
                return va + (vb - va) * (t - ta) / (tb - ta);
            }
        }
        knots[knots.len() - 1].1
    }

    /// Exact integral of the speed profile from 0 to `t`.
    pub fn position(&self, t: f64) -> f64 {
        let t = t.max(0.0);
        let knots = &self.speed_knots;
        let mut s = self.initial_position_m;
        let mut prev_t = 0.0;
        let mut prev_v = self.velocity(0.0);
        let mut breaks: Vec<f64> = knots.iter().map(|k| k.0).filter(|&kt| kt > 0.0 && kt < t).collect();
        breaks.push(t);
        for b in breaks {
            let vb = self.velocity(b);
            s += 0.5 * (prev_v + vb) * (b - prev_t);
            prev_t = b;
            prev_v = vb;
        }
        s
    }
}
