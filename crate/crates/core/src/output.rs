//! Run artifacts: per-step trace CSV, JSON summary and metric-subspace CSVs.

use std::fs;
use std::io::{self, Write};
use std::path::Path;

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::metric::{factorize, project_subspace, to_dmatrix};
use crate::mpc::SolveStatus;
use crate::platoon::{
    check_collision_free, detect_convergence, t_conv_bound, ConvergenceBound, PlatoonLog, RunOutput,
};
use crate::scenario::Scenario;
use crate::vehicle::OutputVec;

pub const TRACE_HEADER: &str = "t,vehicle_id,s,v,T,u,spacing_error,velocity_error";
pub const SUBSPACE_HEADER: &str = "t,vehicle_id,horizon_index,which,coord1,coord2";

/// Decimal text with 9 significant digits and no exponent noise.
pub fn fmt_sig9(x: f64) -> String {
    if !x.is_finite() {
        return x.to_string();
    }
    let rounded: f64 = format!("{x:.8e}").parse().expect("formatted float parses");
    if rounded == 0.0 {
        return "0".into();
    }
    rounded.to_string()
}

pub fn write_trace_csv<W: Write>(log: &PlatoonLog, mut w: W) -> io::Result<()> {
    writeln!(w, "{TRACE_HEADER}")?;
    for step in log.steps() {
        let t = fmt_sig9(step.time_s);
        for v in &step.vehicles {
            writeln!(
                w,
                "{t},{},{},{},{},{},{},{}",
                v.id,
                fmt_sig9(v.state.position_m),
                fmt_sig9(v.state.velocity_mps),
                fmt_sig9(v.state.torque),
                fmt_sig9(v.control),
                fmt_sig9(v.spacing_error),
                fmt_sig9(v.velocity_error),
            )?;
        }
    }
    Ok(())
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunSummary {
    pub topology: String,
    pub t_conv_bound: ConvergenceBound,
    /// `None` when the tolerances are never met for the rest of the run.
    pub convergence_time_s: Option<f64>,
    pub converged_within_bound: bool,
    pub collision_free: bool,
    pub max_abs_spacing_error: f64,
    pub max_abs_velocity_error: f64,
    /// Solves whose terminal residual stayed above tolerance.
    pub infeasible_solves: usize,
    pub total_cost: Vec<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub admm_residual_by_iteration: Option<Vec<f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub admm_min_stability_margin: Option<f64>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub admm_violations: Vec<String>,
}

impl RunSummary {
    pub fn new(scenario: &Scenario, out: &RunOutput) -> Self {
        let log = &out.log;
        let tol = &scenario.tolerances;
        let bound = t_conv_bound(scenario.n_followers, &scenario.events, scenario.constants.dt_s)
            .unwrap_or(ConvergenceBound { steps: 0, seconds: f64::NAN });
        let convergence_time_s = detect_convergence(log, tol.position_m, tol.velocity_mps);
        let topology = scenario.topology_kind().map_or_else(|| "custom".to_string(), |k| k.to_string());
        Self {
            topology,
            t_conv_bound: bound,
            convergence_time_s,
            converged_within_bound: convergence_time_s.is_some_and(|t| t <= bound.seconds + 1e-9),
            collision_free: check_collision_free(log, tol.collision_margin_m),
            max_abs_spacing_error: log.max_abs_spacing_error(),
            max_abs_velocity_error: log.max_abs_velocity_error(),
            infeasible_solves: log
                .steps()
                .iter()
                .flat_map(|s| &s.vehicles)
                .filter(|v| v.status == SolveStatus::InfeasibleTerminal)
                .count(),
            total_cost: log.steps().iter().map(|s| s.total_cost).collect(),
            admm_residual_by_iteration: out.admm.as_ref().map(|a| a.residual_by_iteration()),
            admm_min_stability_margin: out.admm.as_ref().map(|a| a.min_stability_margin()),
            admm_violations: out.admm.as_ref().map(|a| a.violations.clone()).unwrap_or_default(),
        }
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("summary serializes")
    }
}

/// Which learned weight a subspace file projects onto.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum WeightKind {
    Q,
    R,
    F,
    G,
}

impl WeightKind {
    pub const ALL: [WeightKind; 4] = [Self::Q, Self::R, Self::F, Self::G];

    pub fn file_name(self) -> &'static str {
        match self {
            Self::Q => "subspace_Q.csv",
            Self::R => "subspace_R.csv",
            Self::F => "subspace_F.csv",
            Self::G => "subspace_G.csv",
        }
    }
}

fn project_outputs(points: &[OutputVec], a: &DMatrix<f64>) -> Vec<DVector<f64>> {
    let pts: Vec<DVector<f64>> = points.iter().map(|p| DVector::from_vec(vec![p.position_m, p.velocity_mps])).collect();
    // Logged weights are PSD by construction.
    project_subspace(&pts, a).expect("weights are PSD")
}

/// Writes one subspace CSV. Requires a log recorded with horizon snapshots;
/// steps without snapshots are skipped.
pub fn write_subspace_csv<W: Write>(log: &PlatoonLog, which: WeightKind, mut w: W) -> io::Result<()> {
    writeln!(w, "{SUBSPACE_HEADER}")?;
    for step in log.steps() {
        let t = fmt_sig9(step.time_s);
        for v in &step.vehicles {
            let Some(h) = &v.horizon else { continue };
            let mut emit = |label: &str, coords: &[DVector<f64>]| -> io::Result<()> {
                for (k, c) in coords.iter().enumerate() {
                    let c2 = if c.len() > 1 { fmt_sig9(c[1]) } else { String::new() };
                    writeln!(w, "{t},{},{k},{label},{},{c2}", v.id, fmt_sig9(c[0]))?;
                }
                Ok(())
            };
            match which {
                WeightKind::R => {
                    let scale = h.weights.r.max(0.0).sqrt() / h.input_span;
                    let map = |xs: &[f64]| -> Vec<DVector<f64>> {
                        xs.iter().map(|x| DVector::from_element(1, scale * x)).collect()
                    };
                    emit("predicted", &map(&h.controls))?;
                    emit("equilibrium", &map(&h.equilibrium[..h.controls.len()]))?;
                }
                WeightKind::Q | WeightKind::F | WeightKind::G => {
                    let (weight, reference, label) = match which {
                        WeightKind::Q => (h.weights.q, &h.desired, "desired"),
                        WeightKind::F => (h.weights.f, &h.assumed, "assumed"),
                        _ => (h.weights.g, &h.neighbor_reference, "assumed"),
                    };
                    if reference.is_empty() || weight == nalgebra::Matrix2::zeros() {
                        continue;
                    }
                    let a = to_dmatrix(&weight);
                    emit("predicted", &project_outputs(&h.predicted, &a))?;
                    emit(label, &project_outputs(reference, &a))?;
                }
            }
        }
    }
    Ok(())
}

/// Per-step separation `||B^T (y_pred - y_ref)||` summed over the horizon,
/// for one vehicle and weight. `None` without a snapshot.
pub fn subspace_separation(log: &PlatoonLog, step: usize, vehicle_id: u32, which: WeightKind) -> Option<f64> {
    let rec = log.steps().get(step)?.vehicles.iter().find(|v| v.id == vehicle_id)?;
    let h = rec.horizon.as_ref()?;
    let (weight, reference) = match which {
        WeightKind::Q => (h.weights.q, &h.desired),
        WeightKind::F => (h.weights.f, &h.assumed),
        WeightKind::G => (h.weights.g, &h.neighbor_reference),
        WeightKind::R => {
            let r = h.weights.r.max(0.0).sqrt() / h.input_span;
            return Some(h.controls.iter().zip(&h.equilibrium).map(|(u, e)| r * (u - e).abs()).sum());
        }
    };
    if reference.is_empty() {
        return Some(0.0);
    }
    let b = factorize(&to_dmatrix(&weight)).ok()?;
    Some(
        h.predicted
            .iter()
            .zip(reference.iter())
            .map(|(p, r)| {
                let d = DVector::from_vec(vec![p.position_m - r.position_m, p.velocity_mps - r.velocity_mps]);
                (b.transpose() * d).norm()
            })
            .sum(),
    )
}

/// Writes `trace.csv`, `summary.json` and, when requested, the four
/// subspace CSVs into `dir`.
pub fn write_artifacts(
    dir: &Path,
    scenario: &Scenario,
    out: &RunOutput,
    subspaces: bool,
) -> io::Result<RunSummary> {
    fs::create_dir_all(dir)?;
    let mut trace = io::BufWriter::new(fs::File::create(dir.join("trace.csv"))?);
    write_trace_csv(&out.log, &mut trace)?;
    trace.flush()?;
    let summary = RunSummary::new(scenario, out);
    fs::write(dir.join("summary.json"), summary.to_json() + "\n")?;
    if subspaces {
        for which in WeightKind::ALL {
            let mut f = io::BufWriter::new(fs::File::create(dir.join(which.file_name()))?);
            write_subspace_csv(&out.log, which, &mut f)?;
            f.flush()?;
        }
    }
    Ok(summary)
}
