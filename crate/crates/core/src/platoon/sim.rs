use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use super::log::{HorizonSnapshot, PlatoonLog, StepRecord, VehicleRecord};
use super::ManeuverEvent;
use crate::error::{ConfigError, MetricError, SolverError, TopologyError};
use crate::metric::admm::{AdmmState, SweepReport, VehicleContext, VehicleMetric};
use crate::mpc::{
    self, shift_assumed, weight_gradients, HorizonTrajectory, LocalProblem, NeighborData, NeighborTrajectory,
    SolveReport, WeightSet,
};
use crate::scenario::Scenario;
use crate::topology::Topology;
use crate::vehicle::{self, OutputVec, VehicleParams, VehicleState};

#[derive(Debug, Error)]
pub enum RunError {
    #[error("invalid configuration: {0}")]
    Config(#[from] ConfigError),
    #[error("topology: {0}")]
    Topology(#[from] TopologyError),
    #[error("at t = {time_s} s the leader no longer reaches every follower (spanning-tree requirement)")]
    SpanningTree { time_s: f64 },
    #[error("solver failed for vehicle {vehicle_id} at t = {time_s} s: {source}")]
    Solver {
        time_s: f64,
        vehicle_id: u32,
        #[source]
        source: SolverError,
    },
    #[error("metric learning: {0}")]
    Metric(#[from] MetricError),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct RunOptions {
    /// Keep per-vehicle horizon snapshots in the log.
    pub record_horizons: bool,
}

/// ADMM history: one entry per sampling step, one report per sweep.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct AdmmTrace {
    pub sweeps: Vec<Vec<SweepReport>>,
    /// Invariant violations detected after any sweep; empty on a clean run.
    pub violations: Vec<String>,
}

impl AdmmTrace {
    /// Primal residual per sweep index, summed over all sampling steps.
    pub fn residual_by_iteration(&self) -> Vec<f64> {
        let len = self.sweeps.iter().map(Vec::len).max().unwrap_or(0);
        (0..len)
            .map(|k| self.sweeps.iter().filter_map(|s| s.get(k)).map(|r| r.primal_residual).sum())
            .collect()
    }

    pub fn min_stability_margin(&self) -> f64 {
        self.sweeps.iter().flatten().map(|r| r.stability_margin).fold(f64::INFINITY, f64::min)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunOutput {
    pub log: PlatoonLog,
    pub admm: Option<AdmmTrace>,
}

struct Follower {
    params: VehicleParams,
    state: VehicleState,
    assumed: HorizonTrajectory,
}

/// Per-vehicle inputs of one step's local problems.
struct StepInputs {
    neighbors: NeighborData,
    desired: Vec<OutputVec>,
}

struct Platoon<'a> {
    scenario: &'a Scenario,
    followers: Vec<Follower>,
    topology: Topology,
    admm: Option<AdmmState>,
    rng: ChaCha8Rng,
}

impl Platoon<'_> {
    fn contexts(&self) -> Vec<VehicleContext> {
        (1..=self.followers.len())
            .map(|i| VehicleContext {
                pinned: self.topology.is_pinned(i),
                has_in_neighbors: self.topology.in_neighbors(i).map(|s| !s.is_empty()).unwrap_or(false),
                out_neighbors: self
                    .topology
                    .out_neighbors(i)
                    .map(|s| s.into_iter().map(|j| j - 1).collect())
                    .unwrap_or_default(),
            })
            .collect()
    }

    fn apply(&mut self, event: &ManeuverEvent, time_s: f64) -> Result<(), RunError> {
        let sc = self.scenario;
        let (dt_consts, np, d) = (&sc.constants, sc.horizon, sc.desired_gap_m);
        match event {
            ManeuverEvent::CutIn { position, params, initial_state, .. } => {
                let slot = *position;
                if slot == 0 || slot > self.followers.len() + 1 {
                    return Err(TopologyError::IndexOutOfRange { index: slot, n: self.followers.len() + 1 }.into());
                }
                let entry = match initial_state {
                    Some(x) => *x,
                    None => {
                        let ahead = if slot == 1 {
                            OutputVec::new(sc.leader.position(time_s), sc.leader.velocity(time_s))
                        } else {
                            self.followers[slot - 2].state.output()
                        };
                        let behind = self.followers.get(slot - 1).map(|f| f.state.position_m);
                        let s = match behind {
                            Some(b) => 0.5 * (ahead.position_m + b),
                            None => ahead.position_m - d,
                        };
                        let v = ahead.velocity_mps;
                        VehicleState::new(s, v, vehicle::equilibrium_torque(params, dt_consts, v))
                    }
                };
                let assumed = HorizonTrajectory::hold_equilibrium(entry, np, params, dt_consts);
                self.followers.insert(slot - 1, Follower { params: *params, state: entry, assumed });
                self.topology = self.topology.insert_vehicle(slot)?;
                if let Some(admm) = self.admm.as_mut() {
                    let ctx = VehicleContext { pinned: true, has_in_neighbors: true, out_neighbors: vec![] };
                    let fresh = VehicleMetric::random(&mut self.rng, admm.config.epsilon, &ctx);
                    admm.vehicles.insert(slot - 1, fresh);
                }
            }
            ManeuverEvent::CutOut { vehicle_id, .. } => {
                let idx = self.followers.iter().position(|f| f.params.id == *vehicle_id).ok_or_else(|| {
                    ConfigError::Invalid(format!("cut-out at t = {time_s} s names absent vehicle {vehicle_id}"))
                })?;
                self.topology = self.topology.remove_vehicle(idx + 1)?;
                self.followers.remove(idx);
                if let Some(admm) = self.admm.as_mut() {
                    admm.vehicles.remove(idx);
                }
            }
        }
        if !self.topology.has_leader_spanning_tree() {
            return Err(RunError::SpanningTree { time_s });
        }
        let ctx = self.contexts();
        if let Some(admm) = self.admm.as_mut() {
            admm.restore_feasibility(&ctx);
        }
        Ok(())
    }

    fn inputs(&self, time_s: f64) -> Vec<StepInputs> {
        let sc = self.scenario;
        let (s0, v0) = (sc.leader.position(time_s), sc.leader.velocity(time_s));
        let dt = sc.constants.dt_s;
        let d = sc.desired_gap_m;
        (1..=self.followers.len())
            .map(|i| {
                let desired = (0..=sc.horizon)
                    .map(|k| OutputVec::new(s0 + v0 * k as f64 * dt - i as f64 * d, v0))
                    .collect();
                let neighbors = self
                    .topology
                    .in_neighbors(i)
                    .expect("index in range")
                    .into_iter()
                    .map(|j| {
                        let f = &self.followers[j - 1];
                        NeighborTrajectory {
                            id: f.params.id,
                            outputs: f.assumed.outputs().to_vec(),
                            gap_m: (i - j) as f64 * d,
                        }
                    })
                    .collect();
                StepInputs { neighbors: NeighborData { neighbors, pinned: self.topology.is_pinned(i) }, desired }
            })
            .collect()
    }

    fn weights(&self, ctx: &[VehicleContext]) -> Vec<WeightSet> {
        match &self.admm {
            Some(admm) => admm.vehicles.iter().zip(ctx).map(|(m, c)| m.weights(c.pinned)).collect(),
            None => vec![self.scenario.weights; self.followers.len()],
        }
    }
}

fn neighbor_reference(inputs: &StepInputs) -> Vec<OutputVec> {
    let n = inputs.neighbors.neighbors.len();
    if n == 0 {
        return Vec::new();
    }
    let len = inputs.desired.len();
    (0..len)
        .map(|k| {
            let (mut s, mut v) = (0.0, 0.0);
            for nb in &inputs.neighbors.neighbors {
                s += nb.outputs[k].position_m - nb.gap_m;
                v += nb.outputs[k].velocity_mps;
            }
            OutputVec::new(s / n as f64, v / n as f64)
        })
        .collect()
}

/// Simulates the scenario. The scenario is expected to be validated.
pub fn run(scenario: &Scenario, options: RunOptions) -> Result<RunOutput, RunError> {
    let consts = &scenario.constants;
    let dt = consts.dt_s;
    let np = scenario.horizon;
    let topology = scenario.topology.build(scenario.n_followers)?;
    if !topology.has_leader_spanning_tree() {
        return Err(RunError::SpanningTree { time_s: 0.0 });
    }
    let followers = scenario
        .vehicles
        .iter()
        .zip(scenario.initial_state_list())
        .map(|(p, x)| Follower { params: *p, state: x, assumed: HorizonTrajectory::hold_equilibrium(x, np, p, consts) })
        .collect();
    let ml = &scenario.metric_learning;
    let mut platoon = Platoon {
        scenario,
        followers,
        topology,
        admm: None,
        rng: ChaCha8Rng::seed_from_u64(ml.seed),
    };
    let mut trace = None;
    if ml.enabled {
        let ctx = platoon.contexts();
        platoon.admm = Some(AdmmState::random(ml.admm, &ctx, &mut platoon.rng));
        trace = Some(AdmmTrace::default());
    }

    let mut log = PlatoonLog::new(dt, scenario.desired_gap_m);
    let total_steps = (scenario.duration_s / dt).round() as usize;
    let mut pending = scenario.events.iter().peekable();
    for step in 0..=total_steps {
        let time_s = (step as f64 * dt * 1e9).round() / 1e9;
        let mut maneuver = false;
        while let Some(ev) = pending.next_if(|e| e.step_index(dt) <= step) {
            platoon.apply(ev, time_s)?;
            maneuver = true;
        }

        let ctx = platoon.contexts();
        let inputs = platoon.inputs(time_s);
        let mut weights = platoon.weights(&ctx);
        let mut reports = solve_all(&platoon.followers, scenario, &inputs, &weights, time_s)?;

        if let (Some(admm), Some(trace)) = (platoon.admm.as_mut(), trace.as_mut()) {
            let mut sweeps = Vec::with_capacity(admm.config.iterations);
            for kappa in 0..admm.config.iterations {
                let grads = reports
                    .iter()
                    .enumerate()
                    .map(|(idx, rep)| {
                        let f = &platoon.followers[idx];
                        weight_gradients(&rep.trajectory, &local_problem(f, scenario, &inputs[idx], &weights[idx]))
                            .map_err(|source| RunError::Solver { time_s, vehicle_id: f.params.id, source })
                    })
                    .collect::<Result<Vec<_>, _>>()?;
                sweeps.push(admm.sweep(&ctx, &grads)?);
                if let Err(msg) = admm.check_invariants(&ctx) {
                    trace.violations.push(format!("t = {time_s:.1} s, sweep {}: {msg}", kappa + 1));
                }
                if kappa + 1 < admm.config.iterations {
                    weights = admm.vehicles.iter().zip(&ctx).map(|(m, c)| m.weights(c.pinned)).collect();
                    reports = solve_all(&platoon.followers, scenario, &inputs, &weights, time_s)?;
                }
            }
            trace.sweeps.push(sweeps);
        }

        let (s0, v0) = (scenario.leader.position(time_s), scenario.leader.velocity(time_s));
        let mut ahead = s0;
        let mut total_cost = 0.0;
        let mut records = Vec::with_capacity(platoon.followers.len());
        for (idx, (f, rep)) in platoon.followers.iter().zip(&reports).enumerate() {
            let horizon = options.record_horizons.then(|| HorizonSnapshot {
                predicted: rep.trajectory.outputs().to_vec(),
                assumed: f.assumed.outputs().to_vec(),
                desired: inputs[idx].desired.clone(),
                neighbor_reference: neighbor_reference(&inputs[idx]),
                controls: rep.controls().to_vec(),
                equilibrium: rep
                    .trajectory
                    .states()
                    .iter()
                    .map(|x| vehicle::equilibrium_torque(&f.params, consts, x.velocity_mps))
                    .collect(),
                input_span: f.params.input_span(),
                weights: weights[idx],
            });
            records.push(VehicleRecord {
                id: f.params.id,
                slot: idx + 1,
                state: f.state,
                control: rep.controls()[0],
                spacing_error: ahead - f.state.position_m - scenario.desired_gap_m,
                velocity_error: f.state.velocity_mps - v0,
                cost: rep.objective,
                terminal_residual: rep.terminal_residual,
                status: rep.status,
                horizon,
            });
            ahead = f.state.position_m;
            total_cost += rep.objective;
        }
        log.push(StepRecord {
            step,
            time_s,
            leader: OutputVec::new(s0, v0),
            maneuver,
            vehicles: records,
            total_cost,
        });

        for (f, rep) in platoon.followers.iter_mut().zip(&reports) {
            f.state = rep.trajectory.states()[1];
            f.assumed = shift_assumed(&rep.trajectory, &f.params, consts);
        }
    }
    Ok(RunOutput { log, admm: trace })
}

fn local_problem<'a>(
    f: &'a Follower,
    scenario: &'a Scenario,
    inputs: &'a StepInputs,
    weights: &'a WeightSet,
) -> LocalProblem<'a> {
    LocalProblem {
        params: &f.params,
        consts: &scenario.constants,
        x0: f.state,
        assumed_self: &f.assumed,
        neighbors: &inputs.neighbors,
        desired: &inputs.desired,
        weights,
    }
}

/// Solves every follower's local problem; the solves are independent given
/// the previous step's assumed trajectories.
fn solve_all(
    followers: &[Follower],
    scenario: &Scenario,
    inputs: &[StepInputs],
    weights: &[WeightSet],
    time_s: f64,
) -> Result<Vec<SolveReport>, RunError> {
    (0..followers.len())
        .into_par_iter()
        .map(|idx| {
            let f = &followers[idx];
            mpc::solve(&local_problem(f, scenario, &inputs[idx], &weights[idx]), &scenario.solver)
                .map_err(|source| RunError::Solver { time_s, vehicle_id: f.params.id, source })
        })
        .collect()
}
