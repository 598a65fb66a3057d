//! Task drivers. Each task maps a config to CSV rows plus JSON details.
//! Columns (fixed second-axis value) run in parallel and are merged in
//! axis order.

use meanfield_core::classical::{ClassicalState, DenseSolver};
use meanfield_core::continuation::{scan_transition, BranchSolver, TransitionReport};
use meanfield_core::ed::{build_dense_sector_hamiltonian, build_sparse_full_hamiltonian, ed_solve};
use meanfield_core::saddle::{SaddleSolution, SaddleSolver};
use meanfield_core::spinwave::{gaps_at, min_gap, optimize_catalyst};
use meanfield_core::{Coupling, Error, ModelSpec};
use rayon::prelude::*;
use serde::Serialize;
use serde_json::{json, Value};

use crate::config::{Axis2, ExperimentConfig, ModelKind, Task};
use crate::output::ScanRow;
use crate::CliError;

/// Default system sizes for the ed-check task.
pub const ED_N_DENSE: usize = 200;
pub const ED_N_SPARSE: usize = 12;

/// Result of one task on one config.
#[derive(Debug, Clone, Default)]
pub struct TaskOutput {
    pub rows: Vec<ScanRow>,
    pub reports: Vec<ColumnReport>,
    pub xi_star: Option<f64>,
    pub details: Value,
    /// Points that failed; the rows carry a `failed` flag.
    pub failed_points: usize,
}

#[derive(Debug, Clone, Serialize)]
pub struct ColumnReport {
    pub axis2: Option<f64>,
    /// λ = −ξ/2 in the reference convention, for intercluster ξ columns.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub lambda: Option<f64>,
    #[serde(flatten)]
    pub report: TransitionReport,
}

struct Column {
    rows: Vec<ScanRow>,
    report: Option<TransitionReport>,
    failed: usize,
    details: Value,
}

fn solver_error(e: Error) -> CliError {
    CliError::Solver(e.to_string())
}

fn require_dense(cfg: &ExperimentConfig, task: Task) -> Result<(), CliError> {
    if cfg.model != ModelKind::Dense {
        return Err(CliError::Config(format!("task {} needs model = dense", task.name())));
    }
    Ok(())
}

fn dense_solver(cfg: &ExperimentConfig, spec: ModelSpec) -> DenseSolver {
    DenseSolver { seed: cfg.seed, ..DenseSolver::new(spec) }
}

fn indeterminate(spec: &ModelSpec, s: f64) -> bool {
    spec.cluster_is_free(s, 0) || spec.cluster_is_free(s, 1)
}

fn dense_row(spec: &ModelSpec, st: &ClassicalState, axis2: Option<f64>, branch: &str) -> ScanRow {
    let mut flags = Vec::new();
    if st.indeterminate || indeterminate(spec, st.s) {
        flags.push("indeterminate");
    }
    let (d1, d2) = match gaps_at(spec, st) {
        Ok(g) => (Some(g.delta1), Some(g.delta2)),
        Err(_) => {
            flags.push("instability");
            (None, None)
        }
    };
    ScanRow {
        s: st.s,
        axis2,
        m1x: Some(st.m.m1[0]),
        m1z: Some(st.m.m1[2]),
        m2x: Some(st.m.m2[0]),
        m2z: Some(st.m.m2[2]),
        energy: Some(st.energy),
        delta1: d1,
        delta2: d2,
        branch: branch.into(),
        flags,
    }
}

fn sparse_row(spec: &ModelSpec, sol: &SaddleSolution, axis2: Option<f64>, branch: &str) -> ScanRow {
    let mut flags = Vec::new();
    if indeterminate(spec, sol.s) {
        flags.push("indeterminate");
    }
    if !sol.converged {
        flags.push("unconverged");
    }
    ScanRow {
        s: sol.s,
        axis2,
        m1x: Some(sol.m.m1[0]),
        m1z: Some(sol.m.m1[2]),
        m2x: Some(sol.m.m2[0]),
        m2z: Some(sol.m.m2[2]),
        energy: Some(sol.u),
        delta1: None,
        delta2: None,
        branch: branch.into(),
        flags,
    }
}

/// Transition scan of one column; falls back to independent global solves
/// per point when continuation fails.
fn scan_with<B: BranchSolver>(
    solver: &B,
    grid: &[f64],
    threshold: f64,
    axis2: Option<f64>,
    row: impl Fn(&B::State, &str) -> ScanRow,
) -> Column {
    match scan_transition(solver, grid, threshold) {
        Ok(scan) => {
            let eq = scan.equilibrium();
            let rows = eq.iter().enumerate().map(|(i, st)| row(st, scan.branch_tag(i))).collect();
            Column { rows, report: Some(scan.report), failed: 0, details: Value::Null }
        }
        Err(e) => {
            log::warn!("continuation failed for column {axis2:?}: {e}; solving points independently");
            let mut failed = 0;
            let rows = grid
                .iter()
                .map(|&s| match solver.solve_global(s) {
                    Ok(st) => row(&st, "global"),
                    Err(e) => {
                        log::warn!("point s = {s}, axis2 = {axis2:?} failed: {e}");
                        failed += 1;
                        ScanRow::failed(s, axis2)
                    }
                })
                .collect();
            Column { rows, report: None, failed, details: Value::Null }
        }
    }
}

fn scan_column(cfg: &ExperimentConfig, axis2: Option<f64>, spec: ModelSpec, grid: &[f64]) -> Column {
    match spec.coupling {
        Coupling::DenseIntercluster => scan_with(&dense_solver(cfg, spec), grid, cfg.jump_threshold, axis2, |st, b| {
            dense_row(&spec, st, axis2, b)
        }),
        Coupling::SparseIntercluster => {
            scan_with(&SaddleSolver::new(spec), grid, cfg.jump_threshold, axis2, |st, b| sparse_row(&spec, st, axis2, b))
        }
    }
}

fn global_row(cfg: &ExperimentConfig, spec: &ModelSpec, s: f64, axis2: Option<f64>) -> Result<ScanRow, Error> {
    let st = dense_solver(cfg, *spec).solve_global(s)?;
    Ok(dense_row(spec, &st, axis2, "global"))
}

fn gap_column(cfg: &ExperimentConfig, axis2: Option<f64>, spec: ModelSpec, grid: &[f64]) -> Column {
    let mut failed = 0;
    let rows = grid
        .iter()
        .map(|&s| {
            global_row(cfg, &spec, s, axis2).unwrap_or_else(|e| {
                log::warn!("point s = {s}, axis2 = {axis2:?} failed: {e}");
                failed += 1;
                ScanRow::failed(s, axis2)
            })
        })
        .collect();
    Column { rows, report: None, failed, details: Value::Null }
}

fn min_gap_column(cfg: &ExperimentConfig, axis2: Option<f64>, spec: ModelSpec, grid: &[f64]) -> Column {
    let result = min_gap(&spec, grid).and_then(|m| Ok((global_row(cfg, &spec, m.s_min, axis2)?, m)));
    match result {
        Ok((mut row, m)) => {
            // The refined minimum replaces the recomputed gap at s_min.
            row.delta1 = Some(m.delta1_min);
            let details = json!({"axis2": axis2, "s_min": m.s_min, "delta1_min": m.delta1_min, "warning": m.warning});
            Column { rows: vec![row], report: None, failed: 0, details }
        }
        Err(e) => {
            log::warn!("min-gap failed for column {axis2:?}: {e}");
            let details = json!({"axis2": axis2, "error": e.to_string()});
            Column { rows: vec![ScanRow::failed(f64::NAN, axis2)], report: None, failed: 1, details }
        }
    }
}

fn ed_column(cfg: &ExperimentConfig, axis2: Option<f64>, spec: ModelSpec, grid: &[f64]) -> Column {
    let (mut rows, mut details, mut failed) = (Vec::new(), Vec::new(), 0);
    for &s in grid {
        let point = || -> Result<(ScanRow, Value), Error> {
            match spec.coupling {
                Coupling::DenseIntercluster => {
                    let n = cfg.ed_n.unwrap_or(ED_N_DENSE);
                    let st = dense_solver(cfg, spec).solve_global(s)?;
                    let row = dense_row(&spec, &st, axis2, "global");
                    let ed = ed_solve(&build_dense_sector_hamiltonian(&spec, s, n)?, 2)?;
                    let d = json!({
                        "axis2": axis2, "s": s, "n": n,
                        "mean_field_m2z": st.m.m2[2], "ed_m2z": ed.m2z,
                        "m2z_diff": (st.m.m2[2] - ed.m2z).abs(),
                        "spin_wave_delta1": row.delta1, "ed_gap": ed.gap,
                    });
                    Ok((row, d))
                }
                Coupling::SparseIntercluster => {
                    let n = cfg.ed_n.unwrap_or(ED_N_SPARSE);
                    let sol = SaddleSolver::new(spec).solve_global(s)?;
                    let ed = ed_solve(&build_sparse_full_hamiltonian(&spec, s, n)?, 2)?;
                    let d = json!({
                        "axis2": axis2, "s": s, "n": n,
                        "mean_field_m2z": sol.m.m2[2], "ed_m2z": ed.m2z,
                        "m2z_diff": (sol.m.m2[2] - ed.m2z).abs(),
                    });
                    Ok((sparse_row(&spec, &sol, axis2, "global"), d))
                }
            }
        };
        match point() {
            Ok((r, d)) => {
                rows.push(r);
                details.push(d);
            }
            Err(e) => {
                log::warn!("ed-check at s = {s}, axis2 = {axis2:?} failed: {e}");
                failed += 1;
                rows.push(ScanRow::failed(s, axis2));
                details.push(json!({"axis2": axis2, "s": s, "error": e.to_string()}));
            }
        }
    }
    Column { rows, report: None, failed, details: Value::Array(details) }
}

fn run_columns(
    cfg: &ExperimentConfig,
    f: impl Fn(&ExperimentConfig, Option<f64>, ModelSpec, &[f64]) -> Column + Sync,
) -> TaskOutput {
    let grid = cfg.s_grid();
    let columns: Vec<Column> = cfg.columns().into_par_iter().map(|(v, spec)| f(cfg, v, spec, &grid)).collect();
    let axis: Vec<Option<f64>> = cfg.columns().into_iter().map(|c| c.0).collect();
    let mut out = TaskOutput::default();
    let mut details = Vec::new();
    for (col, v) in columns.into_iter().zip(axis) {
        out.rows.extend(col.rows);
        out.failed_points += col.failed;
        if let Some(report) = col.report {
            let lambda = (cfg.is_intercluster_xi()).then(|| v.map(|xi| -xi / 2.0)).flatten();
            out.reports.push(ColumnReport { axis2: v, lambda, report });
        }
        match col.details {
            Value::Null => {}
            Value::Array(a) => details.extend(a),
            d => details.push(d),
        }
    }
    out.details = if details.is_empty() { Value::Null } else { Value::Array(details) };
    out
}

pub fn run_task(task: Task, cfg: &ExperimentConfig) -> Result<TaskOutput, CliError> {
    if let Some(t) = cfg.task {
        if t != task {
            return Err(CliError::Config(format!("config names task {} but {} was requested", t.name(), task.name())));
        }
    }
    match task {
        Task::Scan => Ok(run_columns(cfg, scan_column)),
        Task::Gap => {
            require_dense(cfg, task)?;
            Ok(run_columns(cfg, gap_column))
        }
        Task::MinGap => {
            require_dense(cfg, task)?;
            Ok(run_columns(cfg, min_gap_column))
        }
        Task::EdCheck => Ok(run_columns(cfg, ed_column)),
        Task::OptimizeXi => optimize_xi(cfg),
    }
}

fn optimize_xi(cfg: &ExperimentConfig) -> Result<TaskOutput, CliError> {
    require_dense(cfg, Task::OptimizeXi)?;
    let (Some(Axis2::Xi), Some(lo), Some(hi)) = (cfg.axis2, cfg.axis2_min, cfg.axis2_max) else {
        return Err(CliError::Config("optimize-xi needs axis2 = xi with axis2_min and axis2_max".into()));
    };
    let grid = cfg.s_grid();
    let opt = optimize_catalyst(|xi| cfg.spec_at(Some(xi)), (lo, hi), cfg.xi_tol, &grid).map_err(solver_error)?;
    let spec = cfg.spec_at(Some(opt.xi_star));
    let column = gap_column(cfg, Some(opt.xi_star), spec, &grid);
    let mut details = json!({
        "gap_at_star": opt.gap_at_star,
        "evaluations": opt.evaluations.iter().map(|(x, g)| json!({"xi": x, "min_delta1": g})).collect::<Vec<_>>(),
    });
    if cfg.is_intercluster_xi() {
        details["lambda_star"] = json!(-opt.xi_star / 2.0);
    }
    Ok(TaskOutput {
        rows: column.rows,
        reports: Vec::new(),
        xi_star: Some(opt.xi_star),
        details,
        failed_points: column.failed,
    })
}
