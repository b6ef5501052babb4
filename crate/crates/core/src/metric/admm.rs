//! Consensus ADMM over the local cost weights.
//!
//! Each follower keeps its desired-output weight `Q` split from a cone copy
//! `Theta` with scaled dual `Omega`; `R`, `G` and `F` are updated by
//! projected gradient. The cost is linear in every weight, so the gradients
//! are the residual outer products accumulated over the horizon.

use nalgebra::Matrix2;
use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use super::{min_eigenvalue2, project_above2, project_epd2};
use crate::error::MetricError;
use crate::mpc::{WeightGradient, WeightSet};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct AdmmConfig {
    pub rho: f64,
    pub epsilon: f64,
    /// ADMM sweeps per sampling instant.
    pub iterations: usize,
    /// Projected-gradient iterations inside each weight update.
    pub inner_iterations: usize,
    pub learning_rate: f64,
}

impl Default for AdmmConfig {
    fn default() -> Self {
        Self { rho: 0.1, epsilon: 0.01, iterations: 10, inner_iterations: 10, learning_rate: 0.1 }
    }
}

impl AdmmConfig {
    pub fn validate(&self) -> Result<(), String> {
        if !(self.rho > 0.0 && self.rho.is_finite()) {
            return Err("rho must be positive".into());
        }
        if !(self.epsilon > 0.0 && self.epsilon.is_finite()) {
            return Err("epsilon must be positive".into());
        }
        if self.iterations == 0 || self.inner_iterations == 0 {
            return Err("ADMM iteration counts must be positive".into());
        }
        if !(self.learning_rate > 0.0 && self.learning_rate.is_finite()) {
            return Err("learning_rate must be positive".into());
        }
        Ok(())
    }
}

/// Graph facts about one follower that the constraints depend on.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct VehicleContext {
    pub pinned: bool,
    pub has_in_neighbors: bool,
    /// Platoon indices (zero-based) of the followers this vehicle sends to.
    pub out_neighbors: Vec<usize>,
}

/// Metric-learning variables of one follower.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct VehicleMetric {
    pub q: Matrix2<f64>,
    pub theta: Matrix2<f64>,
    pub omega: Matrix2<f64>,
    pub r: f64,
    pub f: Matrix2<f64>,
    pub g: Matrix2<f64>,
}

fn sym_gaussian<R: Rng + ?Sized>(rng: &mut R) -> Matrix2<f64> {
    let a: f64 = rng.sample(StandardNormal);
    let b: f64 = rng.sample(StandardNormal);
    let c: f64 = rng.sample(StandardNormal);
    Matrix2::new(a, b, b, c)
}

fn eps_pd<R: Rng + ?Sized>(rng: &mut R, eps: f64) -> Matrix2<f64> {
    // Symmetric Gaussian input, so projection cannot fail.
    project_epd2(&sym_gaussian(rng), eps).expect("symmetric input")
}

impl VehicleMetric {
    /// Random feasible start inside the epsilon-PD cone. `F` still has to be
    /// reconciled with the out-neighbors' `G` via [`AdmmState::restore_feasibility`].
    pub fn random<R: Rng + ?Sized>(rng: &mut R, eps: f64, ctx: &VehicleContext) -> Self {
        let theta = eps_pd(rng, eps);
        let r_draw: f64 = rng.sample(StandardNormal);
        let f = eps_pd(rng, eps);
        let g = eps_pd(rng, eps);
        Self {
            q: if ctx.pinned { theta } else { Matrix2::zeros() },
            theta,
            omega: Matrix2::zeros(),
            r: r_draw.abs().max(eps),
            f,
            g: if ctx.has_in_neighbors { g } else { Matrix2::zeros() },
        }
    }

    /// Weights handed to the MPC solve. The desired-output weight comes from
    /// the cone copy `Theta`, which is always a valid metric.
    pub fn weights(&self, pinned: bool) -> WeightSet {
        WeightSet { q: if pinned { self.theta } else { Matrix2::zeros() }, r: self.r, f: self.f, g: self.g }
    }
}

/// Outcome of one sweep over all followers.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SweepReport {
    /// `sqrt(sum_i ||Q_i - Theta_i||_F^2)` over pinned followers.
    pub primal_residual: f64,
    /// `sqrt(sum_i ||Theta_i^+ - Theta_i||_F^2)` scaled by rho.
    pub dual_residual: f64,
    /// `min_i lambda_min(F_i - sum_{j in O_i} G_j)`.
    pub stability_margin: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct AdmmState {
    pub config: AdmmConfig,
    pub vehicles: Vec<VehicleMetric>,
    pub iteration: usize,
}

fn frob2(m: &Matrix2<f64>) -> f64 {
    m.norm_squared()
}

impl AdmmState {
    pub fn new(config: AdmmConfig, vehicles: Vec<VehicleMetric>) -> Self {
        Self { config, vehicles, iteration: 0 }
    }

    pub fn random<R: Rng + ?Sized>(config: AdmmConfig, ctx: &[VehicleContext], rng: &mut R) -> Self {
        let vehicles = ctx.iter().map(|c| VehicleMetric::random(rng, config.epsilon, c)).collect();
        let mut state = Self::new(config, vehicles);
        state.restore_feasibility(ctx);
        state
    }

    fn out_sum(&self, ctx: &VehicleContext) -> Matrix2<f64> {
        ctx.out_neighbors.iter().map(|&j| self.vehicles[j].g).sum()
    }

    fn project_f(&self, f: &Matrix2<f64>, ctx: &VehicleContext) -> Matrix2<f64> {
        let sym = (f + f.transpose()) * 0.5;
        let out = if ctx.out_neighbors.is_empty() {
            project_epd2(&sym, self.config.epsilon)
        } else {
            project_above2(&sym, &self.out_sum(ctx))
        };
        out.expect("symmetrized input")
    }

    /// Re-imposes every constraint after the graph changed (maneuvers flip
    /// pinning and neighbor sets).
    pub fn restore_feasibility(&mut self, ctx: &[VehicleContext]) {
        let eps = self.config.epsilon;
        for (v, c) in self.vehicles.iter_mut().zip(ctx) {
            v.theta = project_epd2(&((v.theta + v.theta.transpose()) * 0.5), eps).expect("symmetric");
            if c.pinned {
                if v.q == Matrix2::zeros() {
                    v.q = v.theta;
                    v.omega = Matrix2::zeros();
                }
            } else {
                v.q = Matrix2::zeros();
            }
            v.r = v.r.max(eps);
            if c.has_in_neighbors {
                let start = if v.g == Matrix2::zeros() { Matrix2::identity() * eps } else { v.g };
                v.g = project_epd2(&((start + start.transpose()) * 0.5), eps).expect("symmetric");
            } else {
                v.g = Matrix2::zeros();
            }
        }
        for (i, c) in ctx.iter().enumerate() {
            self.vehicles[i].f = self.project_f(&self.vehicles[i].f, c);
        }
    }

    /// One ADMM sweep given each follower's weight gradients from the MPC
    /// solve with the current weights. `G` updates finish for every vehicle
    /// before any `F` update so each `F` sees the new out-neighbor `G`.
    pub fn sweep(&mut self, ctx: &[VehicleContext], grads: &[WeightGradient]) -> Result<SweepReport, MetricError> {
        if ctx.len() != self.vehicles.len() || grads.len() != self.vehicles.len() {
            return Err(MetricError::DimensionMismatch(ctx.len().max(grads.len()), self.vehicles.len()));
        }
        let AdmmConfig { rho, epsilon: eps, inner_iterations, learning_rate: lr, .. } = self.config;
        let mut primal = 0.0;
        let mut dual = 0.0;
        for ((v, c), grad) in self.vehicles.iter_mut().zip(ctx).zip(grads) {
            if c.pinned {
                // J is linear in Q, so the proximal subproblem is an isotropic
                // quadratic with minimizer Theta - Omega - S_q / rho.
                v.q = v.theta - v.omega - grad.q / rho;
                let z = v.q + v.omega;
                let theta_next = project_epd2(&((z + z.transpose()) * 0.5), eps)?;
                dual += frob2(&(theta_next - v.theta)) * rho * rho;
                v.theta = theta_next;
                v.omega += v.q - v.theta;
                primal += frob2(&(v.q - v.theta));
            } else {
                v.q = Matrix2::zeros();
            }

            let mut r = v.r;
            for _ in 0..inner_iterations {
                r = (r - lr * grad.r).max(eps);
            }
            v.r = r;

            if c.has_in_neighbors {
                let mut g = v.g;
                for _ in 0..inner_iterations {
                    g = project_epd2(&(g - lr * grad.g), eps)?;
                }
                v.g = g;
            } else {
                v.g = Matrix2::zeros();
            }
        }
        for (i, (c, grad)) in ctx.iter().zip(grads).enumerate() {
            let mut f = self.vehicles[i].f;
            for _ in 0..inner_iterations {
                f = self.project_f(&(f - lr * grad.f), c);
            }
            self.vehicles[i].f = f;
        }
        self.iteration += 1;
        Ok(SweepReport {
            primal_residual: primal.sqrt(),
            dual_residual: dual.sqrt(),
            stability_margin: self.stability_margin(ctx),
        })
    }

    /// Smallest eigenvalue of `F_i - sum_{j in O_i} G_j` over all followers.
    pub fn stability_margin(&self, ctx: &[VehicleContext]) -> f64 {
        ctx.iter()
            .enumerate()
            .map(|(i, c)| min_eigenvalue2(&(self.vehicles[i].f - self.out_sum(c))))
            .fold(f64::INFINITY, f64::min)
    }

    /// Checks every cone and stability constraint; returns the first violation.
    pub fn check_invariants(&self, ctx: &[VehicleContext]) -> Result<(), String> {
        let eps = self.config.epsilon;
        let tol = 1e-10;
        let symmetric = |m: &Matrix2<f64>| (m[(0, 1)] - m[(1, 0)]).abs() <= 1e-12 * m.amax().max(1.0);
        for (i, (v, c)) in self.vehicles.iter().zip(ctx).enumerate() {
            let who = i + 1;
            if !symmetric(&v.theta) || min_eigenvalue2(&v.theta) < eps - 1e-12 {
                return Err(format!("vehicle {who}: Theta left the epsilon-PD cone"));
            }
            if v.r < eps {
                return Err(format!("vehicle {who}: R below epsilon"));
            }
            if !c.pinned && v.q != Matrix2::zeros() {
                return Err(format!("vehicle {who}: Q must vanish when unpinned"));
            }
            if c.has_in_neighbors {
                if !symmetric(&v.g) || min_eigenvalue2(&v.g) < eps - 1e-12 {
                    return Err(format!("vehicle {who}: G left the epsilon-PD cone"));
                }
            } else if v.g != Matrix2::zeros() {
                return Err(format!("vehicle {who}: G must vanish without in-neighbors"));
            }
            if !symmetric(&v.f) {
                return Err(format!("vehicle {who}: F not symmetric"));
            }
            if c.out_neighbors.is_empty() {
                if min_eigenvalue2(&v.f) < eps - 1e-12 {
                    return Err(format!("vehicle {who}: F left the epsilon-PD cone"));
                }
            } else if min_eigenvalue2(&(v.f - self.out_sum(c))) < -tol {
                return Err(format!("vehicle {who}: F - sum of out-neighbor G is not PSD"));
            }
        }
        Ok(())
    }
}
