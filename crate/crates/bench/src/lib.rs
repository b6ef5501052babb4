//! Fixtures shared by the benchmarks.

use platoon_core::metric::admm::VehicleContext;
use platoon_core::mpc::{HorizonTrajectory, LocalProblem, NeighborData, NeighborTrajectory, WeightSet};
use platoon_core::vehicle::{default_fleet, equilibrium_torque, OutputVec, PhysicalConstants, VehicleParams, VehicleState};

/// Owned data for one follower's horizon problem.
pub struct ProblemData {
    pub params: VehicleParams,
    pub consts: PhysicalConstants,
    pub x0: VehicleState,
    pub assumed: HorizonTrajectory,
    pub neighbors: NeighborData,
    pub desired: Vec<OutputVec>,
    pub weights: WeightSet,
}

impl ProblemData {
    /// Second follower of a predecessor-following platoon, displaced by `ds` metres and
    /// `dv` m/s from its desired state.
    pub fn perturbed(horizon: usize, ds: f64, dv: f64) -> Self {
        let params = default_fleet()[1];
        let consts = PhysicalConstants::default();
        let dt = consts.dt_s;
        let v0 = 20.0;
        let v = v0 + dv;
        let x0 = VehicleState::new(-20.0 + ds, v, equilibrium_torque(&params, &consts, v));
        let assumed = HorizonTrajectory::hold_equilibrium(x0, horizon, &params, &consts);
        let line = |s0: f64| (0..=horizon).map(|k| OutputVec::new(s0 + v0 * dt * k as f64, v0)).collect::<Vec<_>>();
        let neighbors = NeighborData {
            neighbors: vec![NeighborTrajectory { id: 1, outputs: line(-10.0), gap_m: 10.0 }],
            pinned: true,
        };
        Self { params, consts, x0, assumed, neighbors, desired: line(-20.0), weights: WeightSet::default() }
    }

    pub fn problem(&self) -> LocalProblem<'_> {
        LocalProblem {
            params: &self.params,
            consts: &self.consts,
            x0: self.x0,
            assumed_self: &self.assumed,
            neighbors: &self.neighbors,
            desired: &self.desired,
            weights: &self.weights,
        }
    }
}

/// Metric-learning contexts for a predecessor-following chain of `n` vehicles.
pub fn chain_contexts(n: usize) -> Vec<VehicleContext> {
    (0..n)
        .map(|i| VehicleContext {
            pinned: i == 0,
            has_in_neighbors: i > 0,
            out_neighbors: if i + 1 < n { vec![i + 1] } else { vec![] },
        })
        .collect()
}
