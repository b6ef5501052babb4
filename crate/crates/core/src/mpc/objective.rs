use nalgebra::{DMatrix, DVector, Matrix2, RowDVector, Vector2};

use super::{HorizonTrajectory, LocalProblem};
use crate::error::SolverError;
use crate::metric::quad_form2;
use crate::vehicle::{self, OutputVec};

fn diff(a: &OutputVec, b: &OutputVec) -> Vector2<f64> {
    Vector2::new(a.position_m - b.position_m, a.velocity_mps - b.velocity_mps)
}

/// Per-stage residuals of the local cost at stage `k`.
pub(super) struct StageResiduals {
    pub desired: Option<Vector2<f64>>,
    /// `(u - h(v)) / (u_max - u_min)`: input deviation as a fraction of the
    /// actuator range, so `R` is dimensionless like the learned metrics.
    pub input: f64,
    pub assumed: Vector2<f64>,
    pub neighbors: Vec<Vector2<f64>>,
}

pub(super) fn stage_residuals(traj: &HorizonTrajectory, problem: &LocalProblem, k: usize) -> StageResiduals {
    let y = &traj.outputs()[k];
    let x = &traj.states()[k];
    StageResiduals {
        desired: problem.neighbors.pinned.then(|| diff(y, &problem.desired[k])),
        input: (traj.controls()[k] - vehicle::equilibrium_torque(problem.params, problem.consts, x.velocity_mps))
            / problem.params.input_span(),
        assumed: diff(y, &problem.assumed_self.outputs()[k]),
        neighbors: problem
            .neighbors
            .neighbors
            .iter()
            .map(|n| diff(y, &n.outputs[k]) + Vector2::new(n.gap_m, 0.0))
            .collect(),
    }
}

fn check_traj(traj: &HorizonTrajectory, problem: &LocalProblem) -> Result<(), SolverError> {
    problem.validate()?;
    if traj.horizon_len() != problem.horizon_len() {
        return Err(SolverError::LengthMismatch {
            what: "trajectory controls",
            got: traj.horizon_len(),
            expected: problem.horizon_len(),
        });
    }
    Ok(())
}

/// Local cost: stage sums over `k = 0..N_p-1` of the desired (pinned only),
/// input-equilibrium, self-consistency and neighbor terms.
pub fn objective(traj: &HorizonTrajectory, problem: &LocalProblem) -> Result<f64, SolverError> {
    check_traj(traj, problem)?;
    Ok(objective_unchecked(traj, problem))
}

pub(super) fn objective_unchecked(traj: &HorizonTrajectory, problem: &LocalProblem) -> f64 {
    let w = problem.weights;
    (0..traj.horizon_len())
        .map(|k| {
            let r = stage_residuals(traj, problem, k);
            let mut cost = w.r * r.input * r.input + quad_form2(&r.assumed, &w.f);
            if let Some(e) = r.desired {
                cost += quad_form2(&e, &w.q);
            }
            cost + r.neighbors.iter().map(|e| quad_form2(e, &w.g)).sum::<f64>()
        })
        .sum()
}

/// Gradient of the local cost with respect to the weights. The cost is linear
/// in every weight, so `J = tr(S_q Q) + s_r R + tr(S_f F) + tr(S_g G)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct WeightGradient {
    pub q: Matrix2<f64>,
    pub r: f64,
    pub f: Matrix2<f64>,
    pub g: Matrix2<f64>,
}

pub fn weight_gradients(traj: &HorizonTrajectory, problem: &LocalProblem) -> Result<WeightGradient, SolverError> {
    check_traj(traj, problem)?;
    let mut out = WeightGradient { q: Matrix2::zeros(), r: 0.0, f: Matrix2::zeros(), g: Matrix2::zeros() };
    for k in 0..traj.horizon_len() {
        let r = stage_residuals(traj, problem, k);
        if let Some(e) = r.desired {
            out.q += e * e.transpose();
        }
        out.r += r.input * r.input;
        out.f += r.assumed * r.assumed.transpose();
        for e in &r.neighbors {
            out.g += e * e.transpose();
        }
    }
    Ok(out)
}

/// Rollout with forward sensitivities `d x_k / d u` (3 x N_p each).
pub(super) struct Sensitivity {
    pub traj: HorizonTrajectory,
    pub jac: Vec<DMatrix<f64>>,
}

pub(super) fn rollout_with_sensitivity(controls: &[f64], problem: &LocalProblem) -> Sensitivity {
    let np = controls.len();
    let traj = HorizonTrajectory::rollout(problem.x0, controls.to_vec(), problem.params, problem.consts);
    let b = vehicle::input_gain(problem.params, problem.consts);
    let mut jac = Vec::with_capacity(np + 1);
    jac.push(DMatrix::zeros(3, np));
    for k in 0..np {
        let a = vehicle::step_state_jacobian(problem.params, problem.consts, &traj.states()[k]);
        let prev = &jac[k];
        let mut next = DMatrix::zeros(3, np);
        // Only columns < k are non-zero in `prev`.
        for col in 0..k {
            let c = a * prev.fixed_view::<3, 1>(0, col);
            next.fixed_view_mut::<3, 1>(0, col).copy_from(&c);
        }
        next.fixed_view_mut::<3, 1>(0, k).copy_from(&b);
        jac.push(next);
    }
    Sensitivity { traj, jac }
}

/// Value, gradient and Gauss-Newton Hessian of the local cost in the controls.
pub(super) struct CostModel {
    pub value: f64,
    pub grad: DVector<f64>,
    pub hess: DMatrix<f64>,
}

pub(super) fn cost_model(sens: &Sensitivity, problem: &LocalProblem) -> CostModel {
    let traj = &sens.traj;
    let np = traj.horizon_len();
    let w = problem.weights;
    let mut value = 0.0;
    let mut grad = DVector::zeros(np);
    let mut hess = DMatrix::zeros(np, np);

    let mut w_out = w.f + w.g * problem.neighbors.neighbors.len() as f64;
    if problem.neighbors.pinned {
        w_out += w.q;
    }

    for k in 0..np {
        let r = stage_residuals(traj, problem, k);
        let jx = &sens.jac[k];
        let jy = jx.rows(0, 2);

        // Output terms share the Jacobian d y_k / d u.
        let mut weighted = w.f * r.assumed;
        value += quad_form2(&r.assumed, &w.f);
        if let Some(e) = r.desired {
            weighted += w.q * e;
            value += quad_form2(&e, &w.q);
        }
        for e in &r.neighbors {
            weighted += w.g * e;
            value += quad_form2(e, &w.g);
        }
        if k > 0 {
            grad += 2.0 * jy.transpose() * weighted;
            let wj = w_out * jy;
            hess += 2.0 * jy.transpose() * wj;
        }

        // Input term: (u_k - h(v_k)) / span.
        value += w.r * r.input * r.input;
        let span = problem.params.input_span();
        let slope = vehicle::equilibrium_torque_slope(problem.params, traj.states()[k].velocity_mps);
        let mut jr = RowDVector::zeros(np);
        jr[k] = 1.0 / span;
        if k > 0 {
            jr -= (slope / span) * jx.row(1);
        }
        grad += 2.0 * w.r * r.input * jr.transpose();
        hess += 2.0 * w.r * jr.transpose() * &jr;
    }
    CostModel { value, grad, hess }
}

/// Analytic gradient of [`objective`] with respect to the control sequence,
/// for the rollout from `problem.x0`.
pub fn objective_gradient(controls: &[f64], problem: &LocalProblem) -> Result<DVector<f64>, SolverError> {
    problem.validate()?;
    if controls.len() != problem.horizon_len() {
        return Err(SolverError::LengthMismatch {
            what: "controls",
            got: controls.len(),
            expected: problem.horizon_len(),
        });
    }
    let sens = rollout_with_sensitivity(controls, problem);
    Ok(cost_model(&sens, problem).grad)
}
