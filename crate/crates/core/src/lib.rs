//! Distributed nonlinear MPC for heterogeneous vehicle platoons.

pub mod error;
pub mod metric;
pub mod mpc;
pub mod output;
pub mod platoon;
pub mod scenario;
pub mod topology;
pub mod vehicle;

pub use error::{ConfigError, MetricError, SolverError, TopologyError};
pub use metric::admm::{AdmmConfig, AdmmState};
pub use mpc::{HorizonTrajectory, LocalProblem, SolveReport, SolveStatus, SolverOptions, WeightSet};
pub use platoon::{run, ManeuverEvent, PlatoonLog, RunError, RunOptions, RunOutput};
pub use scenario::{parse_scenario, Scenario, ScenarioError};
pub use topology::{Topology, TopologyKind};
pub use vehicle::{OutputVec, PhysicalConstants, VehicleParams, VehicleState};
