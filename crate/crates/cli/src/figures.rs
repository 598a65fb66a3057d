//! Built-in configs for each figure dataset. Default resolution is 201
//! s-points by 101 second-axis points.

use meanfield_core::Placement;

use crate::config::{Axis2, ExperimentConfig, ModelKind, Task};
use crate::CliError;

pub const FIGURES: &[&str] = &["fig2", "fig3", "fig4", "fig5", "fig6", "fig8", "fig9", "fig10", "appC"];

pub const S_STEPS: usize = 201;
pub const AXIS2_STEPS: usize = 101;

/// One dataset of a figure: written to `<name>.csv`.
#[derive(Debug, Clone)]
pub struct Panel {
    pub name: String,
    pub task: Task,
    pub config: ExperimentConfig,
}

fn xi_scan(model: ModelKind, placement: Placement, lo: f64, hi: f64) -> ExperimentConfig {
    ExperimentConfig {
        model,
        placement: Some(placement),
        axis2: Some(Axis2::Xi),
        axis2_min: Some(lo),
        axis2_max: Some(hi),
        axis2_steps: Some(AXIS2_STEPS),
        s_steps: S_STEPS,
        ..ExperimentConfig::default()
    }
}

fn gamma_scan(model: ModelKind, axis: Axis2) -> ExperimentConfig {
    ExperimentConfig {
        model,
        axis2: Some(axis),
        axis2_min: Some(0.0),
        axis2_max: Some(1.0),
        axis2_steps: Some(AXIS2_STEPS),
        s_steps: S_STEPS,
        ..ExperimentConfig::default()
    }
}

fn panel(name: &str, task: Task, config: ExperimentConfig) -> Panel {
    Panel { name: name.into(), task, config }
}

pub fn panels(id: &str) -> Result<Vec<Panel>, CliError> {
    use ModelKind::{Dense, Sparse};
    let v = match id {
        // Magnetizations over (s, ξ) with the intercluster catalyst.
        "fig2" => vec![panel("fig2", Task::Scan, xi_scan(Dense, Placement::Intercluster, -10.0, 2.0))],
        // Gap profiles at three catalyst strengths.
        "fig3" => {
            let mut c = xi_scan(Dense, Placement::Intercluster, 0.0, 0.0);
            (c.axis2_min, c.axis2_max, c.axis2_steps) = (None, None, None);
            c.axis2_values = Some(vec![0.0, -4.0, -10.0]);
            vec![panel("fig3", Task::Gap, c)]
        }
        // Minimum gap across the no-transition window.
        "fig4" => vec![panel("fig4", Task::MinGap, xi_scan(Dense, Placement::Intercluster, -5.0, -3.0))],
        "fig5" => vec![
            panel("fig5_strong_intra", Task::Scan, xi_scan(Dense, Placement::StrongIntra, -10.0, 10.0)),
            panel("fig5_weak_intra", Task::Scan, xi_scan(Dense, Placement::WeakIntra, -10.0, 10.0)),
        ],
        "fig6" => vec![
            panel("fig6_gamma1", Task::Scan, gamma_scan(Dense, Axis2::Gamma1)),
            panel("fig6_gamma2", Task::Scan, gamma_scan(Dense, Axis2::Gamma2)),
        ],
        "fig8" => vec![panel("fig8", Task::Scan, xi_scan(Sparse, Placement::Intercluster, -10.0, 10.0))],
        "fig9" => vec![
            panel("fig9_strong_intra", Task::Scan, xi_scan(Sparse, Placement::StrongIntra, -10.0, 10.0)),
            panel("fig9_weak_intra", Task::Scan, xi_scan(Sparse, Placement::WeakIntra, -10.0, 10.0)),
        ],
        "fig10" => vec![
            panel("fig10_gamma1", Task::Scan, gamma_scan(Sparse, Axis2::Gamma1)),
            panel("fig10_gamma2", Task::Scan, gamma_scan(Sparse, Axis2::Gamma2)),
        ],
        "appC" => vec![
            panel("appC_dense", Task::Scan, xi_scan(Dense, Placement::Total, -10.0, 10.0)),
            panel("appC_sparse", Task::Scan, xi_scan(Sparse, Placement::Total, -10.0, 10.0)),
        ],
        other => {
            return Err(CliError::Config(format!("unknown figure id {other:?}; known: {}", FIGURES.join(", "))))
        }
    };
    for p in &v {
        p.config.validate()?;
    }
    Ok(v)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn every_figure_has_valid_panels() {
        for id in FIGURES {
            let p = panels(id).unwrap();
            assert!(!p.is_empty());
            for q in p {
                assert_eq!(q.config.s_steps, S_STEPS);
            }
        }
        assert!(matches!(panels("fig7"), Err(CliError::Config(_))));
    }

    #[test]
    fn gamma_panels_include_the_indeterminate_cell() {
        let p = &panels("fig6").unwrap()[1];
        let cols = p.config.columns();
        let (g, spec) = cols.last().unwrap();
        assert_eq!(*g, Some(1.0));
        assert!(spec.cluster_is_free(0.0, 1));
    }
}
