//! Run reports and their on-disk forms.
//!
//! A [`TrainReport`] is the unit of persistence and aggregation: one run of
//! one experiment, serialized as JSON (`report.json`) alongside CSV traces.
//! CSV schemas (fixed column headers):
//!
//! - `loss_trace.csv`: `epoch,phase,loss,loss_residual,loss_data`
//! - `added_points.csv`: `iteration,criterion,<axis...>,value`
//! - `residual_points.csv` / `boundary_points.csv`: `<axis...>,tag`
//! - `extras_trace.csv` (inverse runs): `epoch,<name>`

use crate::error::{Error, Result};
use crate::sampler::{PointOrigin, PointSet, TaggedPoint};
use serde::{Deserialize, Serialize};
use std::io::Write;
use std::path::Path;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "status", rename_all = "kebab-case")]
pub enum RunStatus {
    Completed,
    Diverged { epoch: usize, detail: String },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AddedPoint {
    pub iteration: usize,
    pub criterion: String,
    pub coords: Vec<f64>,
    pub value: f64,
}

impl AddedPoint {
    pub fn from_tagged(p: &TaggedPoint) -> Option<Self> {
        match &p.origin {
            PointOrigin::Initial => None,
            PointOrigin::Added { iteration, criterion, value } => Some(AddedPoint {
                iteration: *iteration,
                criterion: criterion.as_str().to_string(),
                coords: p.coords.clone(),
                value: *value,
            }),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricsRecord {
    pub relative_l2: f64,
    pub relative_linf: f64,
    /// Euler only: midpoint of the steepest-descent band of ρ at the
    /// evaluation slice.
    pub contact_location: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IterationRecord {
    pub iteration: usize,
    pub adam_epochs: usize,
    pub lbfgs_iterations: usize,
    pub loss: f64,
    pub loss_residual: f64,
    pub loss_data: f64,
    /// Max subdomain mean |R| after this iteration's training.
    pub e_max: f64,
    pub grad_max: Option<f64>,
    pub n_residual_points: usize,
    pub n_boundary_points: usize,
    pub added: Vec<AddedPoint>,
    pub metrics: MetricsRecord,
    pub extras: Vec<(String, f64)>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrainReport {
    pub problem: String,
    pub variant: String,
    pub seed: u64,
    pub config_hash: String,
    pub status: RunStatus,
    pub iterations: Vec<IterationRecord>,
    pub added_residual_points: usize,
    pub added_boundary_points: usize,
    /// Metrics of the final iteration, duplicated for aggregation.
    pub final_metrics: Option<MetricsRecord>,
    pub final_extras: Vec<(String, f64)>,
}

impl TrainReport {
    pub fn save(&self, path: &Path) -> Result<()> {
        let json = serde_json::to_vec_pretty(self)
            .map_err(|e| Error::Format { what: "report".into(), detail: e.to_string() })?;
        std::fs::write(path, json)?;
        Ok(())
    }

    pub fn load(path: &Path) -> Result<Self> {
        let bytes = std::fs::read(path)
            .map_err(|_| Error::MissingFile(path.display().to_string()))?;
        serde_json::from_slice(&bytes)
            .map_err(|e| Error::Format { what: path.display().to_string(), detail: e.to_string() })
    }

    /// All added points across iterations, in order.
    pub fn added_points(&self) -> impl Iterator<Item = &AddedPoint> {
        self.iterations.iter().flat_map(|it| it.added.iter())
    }
}

/// Streaming CSV writers for one run directory.
pub struct RunTraces {
    loss: std::io::BufWriter<std::fs::File>,
    extras: Option<std::io::BufWriter<std::fs::File>>,
    /// Global epoch counter across iterations and phases.
    pub epoch: usize,
}

impl RunTraces {
    pub fn create(dir: &Path, axis_names: &[String], extras: &[String]) -> Result<Self> {
        std::fs::create_dir_all(dir)?;
        let mut loss = std::io::BufWriter::new(std::fs::File::create(dir.join("loss_trace.csv"))?);
        writeln!(loss, "epoch,phase,loss,loss_residual,loss_data")?;
        let extras_w = if extras.is_empty() {
            None
        } else {
            let mut w =
                std::io::BufWriter::new(std::fs::File::create(dir.join("extras_trace.csv"))?);
            writeln!(w, "epoch,{}", extras.join(","))?;
            Some(w)
        };
        let _ = axis_names;
        Ok(RunTraces { loss, extras: extras_w, epoch: 0 })
    }

    pub fn record(&mut self, phase: &str, loss: f64, loss_r: f64, loss_d: f64) -> Result<()> {
        self.epoch += 1;
        writeln!(self.loss, "{},{},{:.17e},{:.17e},{:.17e}", self.epoch, phase, loss, loss_r, loss_d)?;
        Ok(())
    }

    pub fn record_extras(&mut self, values: &[f64]) -> Result<()> {
        if let Some(w) = &mut self.extras {
            let vals: Vec<String> = values.iter().map(|v| format!("{v:.17e}")).collect();
            writeln!(w, "{},{}", self.epoch, vals.join(","))?;
        }
        Ok(())
    }

    pub fn flush(&mut self) -> Result<()> {
        self.loss.flush()?;
        if let Some(w) = &mut self.extras {
            w.flush()?;
        }
        Ok(())
    }
}

/// `added_points.csv` for a report.
pub fn write_added_points(path: &Path, axis_names: &[String], report: &TrainReport) -> Result<()> {
    let mut f = std::io::BufWriter::new(std::fs::File::create(path)?);
    writeln!(f, "iteration,criterion,{},value", axis_names.join(","))?;
    for p in report.added_points() {
        let coords: Vec<String> = p.coords.iter().map(|c| format!("{c:.17e}")).collect();
        writeln!(f, "{},{},{},{:.17e}", p.iteration, p.criterion, coords.join(","), p.value)?;
    }
    Ok(())
}

/// Point-set CSV: one row per point, coordinates then provenance tag.
pub fn write_point_set(path: &Path, axis_names: &[String], set: &PointSet) -> Result<()> {
    let mut f = std::io::BufWriter::new(std::fs::File::create(path)?);
    writeln!(f, "{},tag", axis_names.join(","))?;
    for p in set.points() {
        let coords: Vec<String> = p.coords.iter().map(|c| format!("{c:.17e}")).collect();
        let tag = match &p.origin {
            PointOrigin::Initial => "initial".to_string(),
            PointOrigin::Added { iteration, criterion, .. } => {
                format!("added@{}/{}", iteration, criterion.as_str())
            }
        };
        writeln!(f, "{},{}", coords.join(","), tag)?;
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::sampler::Criterion;

    fn report_fixture() -> TrainReport {
        TrainReport {
            problem: "burgers-fwd".into(),
            variant: "asm2".into(),
            seed: 1,
            config_hash: "abc".into(),
            status: RunStatus::Completed,
            iterations: vec![IterationRecord {
                iteration: 0,
                adam_epochs: 10,
                lbfgs_iterations: 5,
                loss: 0.5,
                loss_residual: 0.3,
                loss_data: 0.2,
                e_max: 0.1,
                grad_max: Some(0.7),
                n_residual_points: 2000,
                n_boundary_points: 300,
                added: vec![AddedPoint {
                    iteration: 0,
                    criterion: "residual".into(),
                    coords: vec![0.01, 0.5],
                    value: 1.5,
                }],
                metrics: MetricsRecord {
                    relative_l2: 0.05,
                    relative_linf: 0.2,
                    contact_location: None,
                },
                extras: vec![],
            }],
            added_residual_points: 1,
            added_boundary_points: 0,
            final_metrics: None,
            final_extras: vec![],
        }
    }

    #[test]
    fn report_roundtrip_is_bit_identical() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("report.json");
        let r = report_fixture();
        r.save(&path).unwrap();
        let r2 = TrainReport::load(&path).unwrap();
        assert_eq!(r, r2);
        // serialized form is stable byte-for-byte
        r2.save(&dir.path().join("report2.json")).unwrap();
        let a = std::fs::read(&path).unwrap();
        let b = std::fs::read(dir.path().join("report2.json")).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn csv_headers_are_fixed() {
        let dir = tempfile::tempdir().unwrap();
        let axes = vec!["x".to_string(), "t".to_string()];
        let mut traces = RunTraces::create(dir.path(), &axes, &["nu_hat".into()]).unwrap();
        traces.record("adam", 1.0, 0.6, 0.4).unwrap();
        traces.record_extras(&[2.0]).unwrap();
        traces.flush().unwrap();
        let loss = std::fs::read_to_string(dir.path().join("loss_trace.csv")).unwrap();
        assert!(loss.starts_with("epoch,phase,loss,loss_residual,loss_data\n"));
        assert!(loss.contains("1,adam,"));
        let extras = std::fs::read_to_string(dir.path().join("extras_trace.csv")).unwrap();
        assert!(extras.starts_with("epoch,nu_hat\n"));

        let r = report_fixture();
        write_added_points(&dir.path().join("added_points.csv"), &axes, &r).unwrap();
        let added = std::fs::read_to_string(dir.path().join("added_points.csv")).unwrap();
        assert!(added.starts_with("iteration,criterion,x,t,value\n"));
        assert_eq!(added.lines().count(), 2);

        let mut set = PointSet::initial(vec![vec![0.0, 0.0]]);
        set.extend(vec![TaggedPoint {
            coords: vec![0.1, 0.2],
            origin: PointOrigin::Added {
                iteration: 3,
                criterion: Criterion::Gradient,
                value: 0.9,
            },
        }]);
        write_point_set(&dir.path().join("residual_points.csv"), &axes, &set).unwrap();
        let pts = std::fs::read_to_string(dir.path().join("residual_points.csv")).unwrap();
        assert!(pts.starts_with("x,t,tag\n"));
        assert!(pts.contains("added@3/gradient"));
    }
}
