use nalgebra::{DMatrix, DVector, Vector3};
use serde::{Deserialize, Serialize};

use super::objective::{cost_model, objective_unchecked, rollout_with_sensitivity, Sensitivity};
use super::{HorizonTrajectory, LocalProblem};
use crate::error::SolverError;
use crate::vehicle::{self, VehicleParams};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SolverOptions {
    /// Augmented-Lagrangian multiplier/penalty updates.
    pub max_outer: usize,
    /// Projected Gauss-Newton iterations per outer update.
    pub max_inner: usize,
    /// Terminal residual accepted as satisfied.
    pub terminal_tol: f64,
    /// Penalty multiplier applied when the residual stalls.
    pub penalty_growth: f64,
}

impl Default for SolverOptions {
    fn default() -> Self {
        Self { max_outer: 20, max_inner: 30, terminal_tol: 1e-4, penalty_growth: 10.0 }
    }
}

impl SolverOptions {
    // Negated comparisons also reject NaN.
    #[allow(clippy::neg_cmp_op_on_partial_ord)]
    pub fn validate(&self) -> Result<(), String> {
        if self.max_outer == 0 || self.max_inner == 0 {
            return Err("solver iteration limits must be positive".into());
        }
        if !(self.terminal_tol > 0.0) {
            return Err("terminal_tol must be positive".into());
        }
        if !(self.penalty_growth > 1.0) {
            return Err("penalty_growth must exceed 1".into());
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SolveStatus {
    Converged,
    /// Terminal constraints met but the inner iterations ran out.
    MaxIterations,
    /// Terminal residual still above tolerance; the best iterate is returned.
    InfeasibleTerminal,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SolveReport {
    pub trajectory: HorizonTrajectory,
    pub objective: f64,
    /// Cost of the shifted warm start the solve started from.
    pub warm_start_objective: f64,
    pub iterations: usize,
    pub outer_iterations: usize,
    /// `max(|s_N - s*|, |v_N - v*|, |T_N - h(v_N)| * eta / (m r))`; the torque
    /// mismatch is expressed as the acceleration it would produce.
    pub terminal_residual: f64,
    pub status: SolveStatus,
}

impl SolveReport {
    pub fn controls(&self) -> &[f64] {
        self.trajectory.controls()
    }
}

fn torque_scale(p: &VehicleParams) -> f64 {
    p.driveline_efficiency / (p.mass_kg * p.tire_radius_m)
}

/// Scaled terminal constraint values and their Jacobian in the controls.
fn terminal_constraints(sens: &Sensitivity, problem: &LocalProblem) -> (Vector3<f64>, DMatrix<f64>) {
    let np = sens.traj.horizon_len();
    let target = problem.terminal_target();
    let xn = sens.traj.terminal_state();
    let p = problem.params;
    let ts = torque_scale(p);
    let c = Vector3::new(
        xn.position_m - target.position_m,
        xn.velocity_mps - target.velocity_mps,
        ts * (xn.torque - vehicle::equilibrium_torque(p, problem.consts, xn.velocity_mps)),
    );
    let jn = &sens.jac[np];
    let slope = vehicle::equilibrium_torque_slope(p, xn.velocity_mps);
    let mut jc = DMatrix::zeros(3, np);
    jc.row_mut(0).copy_from(&jn.row(0));
    jc.row_mut(1).copy_from(&jn.row(1));
    let torque_row = (jn.row(2) - slope * jn.row(1)) * ts;
    jc.row_mut(2).copy_from(&torque_row);
    (c, jc)
}

/// Terminal residual of a trajectory in the units documented on [`SolveReport`].
pub(crate) fn terminal_residual(traj: &HorizonTrajectory, problem: &LocalProblem) -> f64 {
    let target = problem.terminal_target();
    let xn = traj.terminal_state();
    let p = problem.params;
    let dt = torque_scale(p) * (xn.torque - vehicle::equilibrium_torque(p, problem.consts, xn.velocity_mps));
    (xn.position_m - target.position_m)
        .abs()
        .max((xn.velocity_mps - target.velocity_mps).abs())
        .max(dt.abs())
}

struct Merit {
    value: f64,
    grad: DVector<f64>,
    hess: DMatrix<f64>,
    constraint: Vector3<f64>,
    sens: Sensitivity,
}

fn merit_value(u: &[f64], problem: &LocalProblem, lambda: &Vector3<f64>, mu: f64) -> f64 {
    let traj = HorizonTrajectory::rollout(problem.x0, u.to_vec(), problem.params, problem.consts);
    let target = problem.terminal_target();
    let xn = traj.terminal_state();
    let p = problem.params;
    let c = Vector3::new(
        xn.position_m - target.position_m,
        xn.velocity_mps - target.velocity_mps,
        torque_scale(p) * (xn.torque - vehicle::equilibrium_torque(p, problem.consts, xn.velocity_mps)),
    );
    objective_unchecked(&traj, problem) + lambda.dot(&c) + 0.5 * mu * c.norm_squared()
}

fn merit(u: &[f64], problem: &LocalProblem, lambda: &Vector3<f64>, mu: f64) -> Merit {
    let sens = rollout_with_sensitivity(u, problem);
    let cost = cost_model(&sens, problem);
    let (c, jc) = terminal_constraints(&sens, problem);
    let mult = lambda + mu * c;
    let grad = cost.grad + jc.transpose() * mult;
    let hess = cost.hess + mu * jc.transpose() * &jc;
    Merit { value: cost.value + lambda.dot(&c) + 0.5 * mu * c.norm_squared(), grad, hess, constraint: c, sens }
}

fn project(u: &mut [f64], p: &VehicleParams) {
    for x in u.iter_mut() {
        *x = p.clamp_input(*x);
    }
}

/// Solves `H_ff d = -g_f` on the free set with Levenberg damping as needed.
fn newton_direction(hess: &DMatrix<f64>, grad: &DVector<f64>, free: &[usize]) -> DVector<f64> {
    let n = grad.len();
    let mut dir = DVector::zeros(n);
    if free.is_empty() {
        return dir;
    }
    let m = free.len();
    let hff = DMatrix::from_fn(m, m, |a, b| hess[(free[a], free[b])]);
    let gf = DVector::from_fn(m, |a, _| -grad[free[a]]);
    let scale = (0..m).map(|a| hff[(a, a)].abs()).fold(0.0f64, f64::max).max(1e-300);
    let mut damping = 1e-12 * scale;
    for _ in 0..12 {
        let mut h = hff.clone();
        for a in 0..m {
            h[(a, a)] += damping;
        }
        if let Some(chol) = h.cholesky() {
            let sol = chol.solve(&gf);
            if sol.iter().all(|x| x.is_finite()) {
                for (a, &i) in free.iter().enumerate() {
                    dir[i] = sol[a];
                }
                return dir;
            }
        }
        damping *= 100.0;
    }
    // Fall back to steepest descent on the free set.
    for &i in free {
        dir[i] = -grad[i] / scale;
    }
    dir
}

/// Projected Gauss-Newton on the augmented Lagrangian. Returns iterations used.
fn inner_solve(u: &mut Vec<f64>, problem: &LocalProblem, lambda: &Vector3<f64>, mu: f64, max_inner: usize) -> usize {
    let p = problem.params;
    let span = p.u_max - p.u_min;
    let bound_tol = 1e-9 * span;
    for it in 0..max_inner {
        let m = merit(u, problem, lambda, mu);
        let free: Vec<usize> = (0..u.len())
            .filter(|&i| {
                let at_low = u[i] <= p.u_min + bound_tol && m.grad[i] > 0.0;
                let at_high = u[i] >= p.u_max - bound_tol && m.grad[i] < 0.0;
                !(at_low || at_high)
            })
            .collect();
        let dir = newton_direction(&m.hess, &m.grad, &free);
        let mut alpha = 1.0;
        let mut accepted = None;
        for _ in 0..40 {
            let mut trial: Vec<f64> = u.iter().zip(dir.iter()).map(|(a, d)| a + alpha * d).collect();
            project(&mut trial, p);
            let step: f64 = trial.iter().zip(u.iter()).zip(m.grad.iter()).map(|((t, a), g)| (t - a) * g).sum();
            let value = merit_value(&trial, problem, lambda, mu);
            if value <= m.value + 1e-4 * step.min(0.0) {
                accepted = Some((trial, value));
                break;
            }
            alpha *= 0.5;
        }
        let Some((trial, value)) = accepted else {
            return it + 1;
        };
        let moved = trial.iter().zip(u.iter()).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
        let decrease = m.value - value;
        *u = trial;
        if moved <= 1e-12 * span || decrease <= 1e-15 * m.value.abs().max(1e-300) {
            return it + 1;
        }
    }
    max_inner
}

/// Solves the local MPC problem starting from the controls of the vehicle's
/// assumed plan.
pub fn solve(problem: &LocalProblem, opts: &SolverOptions) -> Result<SolveReport, SolverError> {
    problem.validate()?;
    let p = problem.params;
    let mut warm: Vec<f64> = problem.assumed_self.controls().to_vec();
    if warm.iter().any(|x| !x.is_finite()) {
        return Err(SolverError::NonFinite("warm start"));
    }
    project(&mut warm, p);
    let warm_traj = HorizonTrajectory::rollout(problem.x0, warm.clone(), p, problem.consts);
    let warm_cost = objective_unchecked(&warm_traj, problem);
    let warm_res = terminal_residual(&warm_traj, problem);

    // Scale the initial penalty so the constraint curvature dominates the cost curvature.
    let start = merit(&warm, problem, &Vector3::zeros(), 0.0);
    let (_, jc0) = terminal_constraints(&start.sens, problem);
    let jtj = jc0.transpose() * &jc0;
    let mut mu = 10.0 * start.hess.norm().max(1.0) / jtj.norm().max(1e-300);
    let mut lambda = Vector3::zeros();

    let mut u = warm;
    let mut iterations = 0;
    let mut outer = 0;
    let mut last_res = f64::INFINITY;
    let mut inner_exhausted = false;
    let mut residual = warm_res;
    while outer < opts.max_outer {
        outer += 1;
        let used = inner_solve(&mut u, problem, &lambda, mu, opts.max_inner);
        iterations += used;
        inner_exhausted = used >= opts.max_inner;
        let m = merit(&u, problem, &lambda, mu);
        let c = m.constraint;
        residual = c.amax();
        if residual <= opts.terminal_tol && !inner_exhausted {
            break;
        }
        if residual <= opts.terminal_tol * 1e-3 {
            break;
        }
        lambda += mu * c;
        if residual > 0.25 * last_res {
            mu *= opts.penalty_growth;
        }
        last_res = residual;
    }

    let traj = HorizonTrajectory::rollout(problem.x0, u, p, problem.consts);
    let cost = objective_unchecked(&traj, problem);
    residual = residual.max(terminal_residual(&traj, problem));

    let warm_feasible = warm_res <= opts.terminal_tol;
    let (trajectory, objective, residual) =
        if warm_feasible && (residual > opts.terminal_tol || cost > warm_cost) {
            (warm_traj, warm_cost, warm_res)
        } else {
            (traj, cost, residual)
        };
    let status = if residual > opts.terminal_tol {
        SolveStatus::InfeasibleTerminal
    } else if inner_exhausted && outer >= opts.max_outer {
        SolveStatus::MaxIterations
    } else {
        SolveStatus::Converged
    };
    if !objective.is_finite() || trajectory.states().iter().any(|x| !x.is_finite()) {
        return Err(SolverError::NonFinite("solution"));
    }
    Ok(SolveReport {
        trajectory,
        objective,
        warm_start_objective: warm_cost,
        iterations,
        outer_iterations: outer,
        terminal_residual: residual,
        status,
    })
}
