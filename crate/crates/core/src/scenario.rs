//! JSON scenario files: schema, defaults and validation.
//!
//! Only `topology`, `n_followers` and `duration_s` are required. Defaults:
//! vehicles from [`default_vehicle`], `dt = 0.1 s`, `g = 9.8`, horizon 20,
//! desired gap 10 m, a constant 20 m/s leader starting at 0, followers at
//! the desired spacing moving at the leader's speed with equilibrium torque,
//! no events, metric learning off, tolerances 0.1 m / 0.05 m/s, collision
//! margin 0.

use std::path::Path;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::error::TopologyError;
use crate::metric::admm::AdmmConfig;
use crate::mpc::{SolverOptions, WeightSet};
use crate::platoon::{LeaderProfile, ManeuverEvent};
use crate::topology::{Topology, TopologyKind};
use crate::vehicle::{self, default_vehicle, PhysicalConstants, VehicleParams, VehicleState};

/// The golden scenario of the reference experiment.
pub const REFERENCE_SCENARIO_JSON: &str = include_str!("../scenarios/paper_sec6.json");

#[derive(Debug, Error)]
pub enum ScenarioError {
    #[error("cannot read {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error("parse error at line {line}, column {column}: {message}")]
    Parse { line: usize, column: usize, message: String },
    #[error("invalid scenario: {0}")]
    Invalid(String),
}

/// Either a canonical topology name or an explicit graph.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged, try_from = "RawTopologySpec")]
pub enum TopologySpec {
    Kind(TopologyKind),
    Custom { adjacency: Vec<Vec<u8>>, pinned: Vec<u8> },
}

/// Reads names as plain strings so an unknown name gets a specific message.
#[derive(Deserialize)]
#[serde(untagged)]
enum RawTopologySpec {
    Name(String),
    Custom { adjacency: Vec<Vec<u8>>, pinned: Vec<u8> },
}

impl TryFrom<RawTopologySpec> for TopologySpec {
    type Error = String;

    fn try_from(raw: RawTopologySpec) -> Result<Self, String> {
        match raw {
            RawTopologySpec::Name(name) => name.parse().map(Self::Kind),
            RawTopologySpec::Custom { adjacency, pinned } => Ok(Self::Custom { adjacency, pinned }),
        }
    }
}

impl TopologySpec {
    pub fn build(&self, n: usize) -> Result<Topology, TopologyError> {
        match self {
            Self::Kind(kind) => Topology::build(*kind, n),
            Self::Custom { adjacency, pinned } => {
                if adjacency.len() != n {
                    return Err(TopologyError::Shape { n, rows: adjacency.len() });
                }
                Topology::from_parts(adjacency, pinned)
            }
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize, Default)]
pub struct MetricLearningOptions {
    #[serde(default)]
    pub enabled: bool,
    #[serde(default)]
    pub seed: u64,
    #[serde(flatten)]
    pub admm: AdmmConfig,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct Tolerances {
    pub position_m: f64,
    pub velocity_mps: f64,
    /// Minimum bumper-free gap for the collision check.
    pub collision_margin_m: f64,
}

impl Default for Tolerances {
    fn default() -> Self {
        Self { position_m: 0.1, velocity_mps: 0.05, collision_margin_m: 0.0 }
    }
}

fn default_horizon() -> usize {
    20
}

fn default_gap() -> f64 {
    10.0
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Scenario {
    /// Free-form note; not interpreted.
    #[serde(default, skip_serializing_if = "String::is_empty")]
    pub description: String,
    pub topology: TopologySpec,
    pub n_followers: usize,
    /// One entry per initial follower in platoon order; empty means defaults.
    #[serde(default)]
    pub vehicles: Vec<VehicleParams>,
    #[serde(default)]
    pub constants: PhysicalConstants,
    #[serde(default = "default_horizon")]
    pub horizon: usize,
    #[serde(default = "default_gap")]
    pub desired_gap_m: f64,
    #[serde(default)]
    pub leader: LeaderProfile,
    /// Empty means desired spacing at the leader's initial speed.
    #[serde(default)]
    pub initial_states: Vec<VehicleState>,
    #[serde(default)]
    pub events: Vec<ManeuverEvent>,
    #[serde(default)]
    pub weights: WeightSet,
    #[serde(default)]
    pub solver: SolverOptions,
    #[serde(default)]
    pub metric_learning: MetricLearningOptions,
    pub duration_s: f64,
    #[serde(default)]
    pub tolerances: Tolerances,
}

impl Scenario {
    /// A validated scenario with defaults for the given graph and size.
    pub fn new(topology: TopologyKind, n_followers: usize, duration_s: f64) -> Self {
        let mut s = Self {
            description: String::new(),
            topology: TopologySpec::Kind(topology),
            n_followers,
            vehicles: Vec::new(),
            constants: PhysicalConstants::default(),
            horizon: default_horizon(),
            desired_gap_m: default_gap(),
            leader: LeaderProfile::default(),
            initial_states: Vec::new(),
            events: Vec::new(),
            weights: WeightSet::default(),
            solver: SolverOptions::default(),
            metric_learning: MetricLearningOptions::default(),
            duration_s,
            tolerances: Tolerances::default(),
        };
        s.fill_defaults();
        s
    }

    pub fn reference() -> Self {
        parse_scenario_str(REFERENCE_SCENARIO_JSON).expect("bundled scenario is valid")
    }

    /// Fills default vehicles and initial states and orders events by time.
    pub fn fill_defaults(&mut self) {
        if self.vehicles.is_empty() {
            self.vehicles = (1..=self.n_followers as u32).map(default_vehicle).collect();
        }
        if self.initial_states.is_empty() && self.vehicles.len() == self.n_followers {
            self.initial_states = self.desired_initial_states();
        }
        self.events.sort_by(|a, b| a.time_s().total_cmp(&b.time_s()));
    }

    fn desired_initial_states(&self) -> Vec<VehicleState> {
        let s0 = self.leader.initial_position_m;
        let v0 = self.leader.speed_knots.first().map_or(0.0, |k| k.1);
        self.vehicles
            .iter()
            .enumerate()
            .map(|(k, p)| {
                vehicle::desired_state(s0, v0, (k + 1) as f64 * self.desired_gap_m, p, &self.constants)
            })
            .collect()
    }

    /// Initial follower states in platoon order.
    pub fn initial_state_list(&self) -> Vec<VehicleState> {
        if self.initial_states.is_empty() {
            self.desired_initial_states()
        } else {
            self.initial_states.clone()
        }
    }

    pub fn topology_kind(&self) -> Option<TopologyKind> {
        match self.topology {
            TopologySpec::Kind(k) => Some(k),
            TopologySpec::Custom { .. } => None,
        }
    }

    pub fn validate(&self) -> Result<(), ScenarioError> {
        let bad = |m: String| Err(ScenarioError::Invalid(m));
        if self.n_followers == 0 {
            return bad("n_followers must be at least 1".into());
        }
        if self.vehicles.len() != self.n_followers {
            return bad(format!("{} vehicles listed for n_followers = {}", self.vehicles.len(), self.n_followers));
        }
        if self.initial_states.len() != self.n_followers {
            return bad(format!(
                "{} initial states listed for n_followers = {}",
                self.initial_states.len(),
                self.n_followers
            ));
        }
        if let Some(x) = self.initial_states.iter().find(|x| !x.is_finite()) {
            return bad(format!("non-finite initial state {x:?}"));
        }
        let c = &self.constants;
        if !(c.dt_s > 0.0 && c.dt_s.is_finite()) || !(c.gravity_mps2 > 0.0 && c.gravity_mps2.is_finite()) {
            return bad("dt_s and gravity_mps2 must be positive".into());
        }
        if self.horizon == 0 {
            return bad("horizon must be at least 1".into());
        }
        if !(self.desired_gap_m > 0.0 && self.desired_gap_m.is_finite()) {
            return bad("desired_gap_m must be positive".into());
        }
        if !(self.duration_s > 0.0 && self.duration_s.is_finite()) {
            return bad("duration_s must be positive".into());
        }
        let tol = &self.tolerances;
        if !(tol.position_m > 0.0 && tol.velocity_mps > 0.0 && tol.collision_margin_m >= 0.0) {
            return bad("tolerances must be positive (collision margin non-negative)".into());
        }
        self.leader.validate().map_err(|e| ScenarioError::Invalid(e.to_string()))?;
        self.weights.validate().map_err(ScenarioError::Invalid)?;
        self.solver.validate().map_err(ScenarioError::Invalid)?;
        self.metric_learning.admm.validate().map_err(ScenarioError::Invalid)?;

        let mut ids = Vec::new();
        for p in &self.vehicles {
            p.validate().map_err(|e| ScenarioError::Invalid(e.to_string()))?;
            if ids.contains(&p.id) {
                return bad(format!("duplicate vehicle id {}", p.id));
            }
            ids.push(p.id);
        }

        let mut topo = self.topology.build(self.n_followers).map_err(|e| ScenarioError::Invalid(e.to_string()))?;
        if !topo.has_leader_spanning_tree() {
            return bad("spanning-tree requirement violated at t = 0: some follower is not reachable from the leader".into());
        }
        let mut last_t = 0.0f64;
        for ev in &self.events {
            let t = ev.time_s();
            if !(t >= 0.0 && t.is_finite()) {
                return bad(format!("event time {t} must be finite and non-negative"));
            }
            if t < last_t {
                return bad("events must be ordered by time".into());
            }
            last_t = t;
            match ev {
                ManeuverEvent::CutIn { position, params, initial_state, .. } => {
                    if *position == 0 || *position > ids.len() + 1 {
                        return bad(format!(
                            "cut-in at t = {t} s targets slot {position}, valid slots are 1..={}",
                            ids.len() + 1
                        ));
                    }
                    params.validate().map_err(|e| ScenarioError::Invalid(e.to_string()))?;
                    if ids.contains(&params.id) {
                        return bad(format!("cut-in at t = {t} s reuses vehicle id {}", params.id));
                    }
                    if initial_state.is_some_and(|x| !x.is_finite()) {
                        return bad(format!("cut-in at t = {t} s has a non-finite initial state"));
                    }
                    ids.insert(position - 1, params.id);
                    topo = topo.insert_vehicle(*position).map_err(|e| ScenarioError::Invalid(e.to_string()))?;
                }
                ManeuverEvent::CutOut { vehicle_id, .. } => {
                    let Some(idx) = ids.iter().position(|id| id == vehicle_id) else {
                        return bad(format!("cut-out at t = {t} s names vehicle {vehicle_id}, which is not in the platoon"));
                    };
                    if ids.len() == 1 {
                        return bad(format!("cut-out at t = {t} s would leave the platoon empty"));
                    }
                    ids.remove(idx);
                    topo = topo.remove_vehicle(idx + 1).map_err(|e| ScenarioError::Invalid(e.to_string()))?;
                }
            }
            if !topo.has_leader_spanning_tree() {
                return bad(format!(
                    "spanning-tree requirement violated after the event at t = {t} s: some follower is no longer reachable from the leader"
                ));
            }
        }
        if last_t > self.duration_s {
            return bad(format!("duration_s = {} ends before the last event at {last_t} s", self.duration_s));
        }
        Ok(())
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("scenario serializes")
    }
}

/// Parses, fills defaults and validates a scenario from JSON text.
pub fn parse_scenario_str(text: &str) -> Result<Scenario, ScenarioError> {
    let mut scenario: Scenario = serde_json::from_str(text).map_err(|e| {
        let full = e.to_string();
        let suffix = format!(" at line {} column {}", e.line(), e.column());
        let message = full.strip_suffix(&suffix).unwrap_or(&full).to_string();
        ScenarioError::Parse { line: e.line(), column: e.column(), message }
    })?;
    scenario.fill_defaults();
    scenario.validate()?;
    Ok(scenario)
}

pub fn parse_scenario(path: &Path) -> Result<Scenario, ScenarioError> {
    let text = std::fs::read_to_string(path)
        .map_err(|source| ScenarioError::Io { path: path.display().to_string(), source })?;
    parse_scenario_str(&text)
}
