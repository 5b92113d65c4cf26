//! Command implementations behind the `pinn-asm` binary.
//!
//! - `run`: one experiment from a bundled default or a TOML config.
//! - `sweep`: the same experiment over a seed list, with a Table-shaped
//!   aggregate summary (mean ± sample std of added points and errors).
//! - `plotdata`: convergence series and slice extracts from saved reports.

use crate::config::{ConfigOverrides, ExperimentConfig};
use crate::error::{Error, Result};
use crate::metrics::aggregate_runs;
use crate::network::load_checkpoint;
use crate::report::{RunStatus, TrainReport};
use crate::sampler::AsmVariant;
use crate::trainer::run_experiment;
use rayon::prelude::*;
use std::io::Write;
use std::path::{Path, PathBuf};

/// Resolve a config from `--config` and/or a positional problem name plus
/// command-line overrides.
pub fn resolve_config(
    problem: Option<&str>,
    config_path: Option<&Path>,
    asm: Option<AsmVariant>,
    max_iters: Option<usize>,
    out: Option<&Path>,
) -> Result<ExperimentConfig> {
    let mut cfg = match (problem, config_path) {
        (None, Some(path)) => ExperimentConfig::load(path)?,
        (Some(name), None) => {
            ExperimentConfig::defaults(name, asm.unwrap_or(AsmVariant::Asm2))?
        }
        (Some(name), Some(path)) => {
            let mut c = ExperimentConfig::load(path)?;
            if c.problem != name {
                return Err(Error::config(format!(
                    "problem '{name}' conflicts with config problem '{}'",
                    c.problem
                )));
            }
            c.apply(ConfigOverrides::default());
            c
        }
        (None, None) => {
            return Err(Error::config("specify a problem name or --config <file>"))
        }
    };
    if let Some(v) = asm {
        if cfg.variant != v {
            // re-derive variant-dependent defaults only when no file was given
            if config_path.is_none() {
                cfg = ExperimentConfig::defaults(&cfg.problem, v)?;
            } else {
                cfg.variant = v;
            }
        }
    }
    if let Some(n) = max_iters {
        cfg.max_iterations = n;
    }
    if let Some(o) = out {
        cfg.out_dir = Some(o.to_path_buf());
    }
    cfg.validate()?;
    Ok(cfg)
}

/// Run one seed; writes report, traces, added-point log and checkpoints into
/// the run directory.
pub fn cmd_run(cfg: &ExperimentConfig, seed: u64) -> Result<TrainReport> {
    let report = run_experiment(cfg, seed)?;
    if let Some(dir) = cfg.run_dir(seed) {
        eprintln!("run written to {}", dir.display());
    }
    match &report.status {
        RunStatus::Completed => {}
        RunStatus::Diverged { epoch, detail } => {
            eprintln!("warning: run diverged at epoch {epoch}: {detail}");
        }
    }
    Ok(report)
}

/// Relative error of the learned ν̂ against the true value 1.
fn nu_relative_error(report: &TrainReport) -> Option<f64> {
    report
        .final_extras
        .iter()
        .find(|(n, _)| n == "nu_hat")
        .map(|(_, v)| (v - 1.0).abs())
}

/// One aggregate row over the successful runs of a sweep.
#[derive(Debug, Clone)]
pub struct SweepSummary {
    pub problem: String,
    pub variant: String,
    pub runs: usize,
    pub failures: usize,
    pub added_mean: f64,
    pub added_std: f64,
    pub l2_mean: f64,
    pub l2_std: f64,
    pub linf_mean: f64,
    pub linf_std: f64,
    pub nu_err_mean: Option<f64>,
    pub nu_err_std: Option<f64>,
}

pub fn summarize(reports: &[TrainReport], failures: usize) -> Result<SweepSummary> {
    if reports.is_empty() {
        return Err(Error::config("no successful runs to aggregate"));
    }
    let added: Vec<f64> = reports
        .iter()
        .map(|r| (r.added_residual_points + r.added_boundary_points) as f64)
        .collect();
    let l2: Vec<f64> = reports
        .iter()
        .filter_map(|r| r.final_metrics.as_ref().map(|m| m.relative_l2))
        .collect();
    let linf: Vec<f64> = reports
        .iter()
        .filter_map(|r| r.final_metrics.as_ref().map(|m| m.relative_linf))
        .collect();
    let a = aggregate_runs(&added)?;
    let l = aggregate_runs(&l2)?;
    let li = aggregate_runs(&linf)?;
    let nu: Vec<f64> = reports.iter().filter_map(nu_relative_error).collect();
    let (nu_err_mean, nu_err_std) = if nu.is_empty() {
        (None, None)
    } else {
        let s = aggregate_runs(&nu)?;
        (Some(s.mean), Some(s.std))
    };
    Ok(SweepSummary {
        problem: reports[0].problem.clone(),
        variant: reports[0].variant.clone(),
        runs: reports.len(),
        failures,
        added_mean: a.mean,
        added_std: a.std,
        l2_mean: l.mean,
        l2_std: l.std,
        linf_mean: li.mean,
        linf_std: li.std,
        nu_err_mean,
        nu_err_std,
    })
}

pub fn write_summary_csv(path: &Path, rows: &[SweepSummary]) -> Result<()> {
    let mut f = std::io::BufWriter::new(std::fs::File::create(path)?);
    writeln!(
        f,
        "problem,variant,runs,failures,added_points_mean,added_points_std,l2_mean,l2_std,linf_mean,linf_std,nu_err_mean,nu_err_std"
    )?;
    for r in rows {
        let opt = |v: Option<f64>| v.map(|x| format!("{x:.6e}")).unwrap_or_default();
        writeln!(
            f,
            "{},{},{},{},{:.3},{:.3},{:.6e},{:.6e},{:.6e},{:.6e},{},{}",
            r.problem,
            r.variant,
            r.runs,
            r.failures,
            r.added_mean,
            r.added_std,
            r.l2_mean,
            r.l2_std,
            r.linf_mean,
            r.linf_std,
            opt(r.nu_err_mean),
            opt(r.nu_err_std)
        )?;
    }
    Ok(())
}

/// Run every seed (in parallel), aggregate the successes, and write
/// `sweep_summary.csv` when an output directory is set.
pub fn cmd_sweep(cfg: &ExperimentConfig, seeds: &[u64]) -> Result<SweepSummary> {
    if seeds.is_empty() {
        return Err(Error::config("sweep needs at least one seed"));
    }
    let results: Vec<(u64, Result<TrainReport>)> = seeds
        .par_iter()
        .map(|&s| (s, run_experiment(cfg, s)))
        .collect();
    let mut ok = Vec::new();
    let mut failures = 0;
    for (seed, res) in results {
        match res {
            Ok(r) if matches!(r.status, RunStatus::Completed) => ok.push(r),
            Ok(r) => {
                failures += 1;
                eprintln!("seed {seed}: diverged ({:?})", r.status);
            }
            Err(e) => {
                failures += 1;
                eprintln!("seed {seed}: failed: {e}");
            }
        }
    }
    let summary = summarize(&ok, failures)?;
    if let Some(out) = &cfg.out_dir {
        std::fs::create_dir_all(out)?;
        write_summary_csv(&out.join("sweep_summary.csv"), std::slice::from_ref(&summary))?;
    }
    println!(
        "{} {} ({} runs, {} failures): added {:.1} ± {:.1}, L2 {:.3}% ± {:.3}%, L∞ {:.3}% ± {:.3}%{}",
        summary.problem,
        summary.variant,
        summary.runs,
        summary.failures,
        summary.added_mean,
        summary.added_std,
        100.0 * summary.l2_mean,
        100.0 * summary.l2_std,
        100.0 * summary.linf_mean,
        100.0 * summary.linf_std,
        match (summary.nu_err_mean, summary.nu_err_std) {
            (Some(m), Some(s)) => format!(", ν err {:.2}% ± {:.2}%", 100.0 * m, 100.0 * s),
            _ => String::new(),
        }
    );
    Ok(summary)
}

/// Convergence series and slice extracts for saved reports.
///
/// Writes `<stem>_convergence.csv` per report; when the report's directory
/// holds per-iteration checkpoints, also writes a solution slice
/// (`u(x, t = 0.9)` for Burgers, `ρ(x, t = 2)` for Euler) against the
/// reference.
pub fn cmd_plotdata(report_paths: &[PathBuf], out: &Path) -> Result<()> {
    if report_paths.is_empty() {
        return Ok(());
    }
    std::fs::create_dir_all(out)?;
    for path in report_paths {
        let report = TrainReport::load(path)?;
        let stem = path
            .parent()
            .and_then(|p| p.file_name())
            .map(|s| s.to_string_lossy().to_string())
            .unwrap_or_else(|| "report".to_string());
        let conv = out.join(format!("{stem}_convergence.csv"));
        let mut f = std::io::BufWriter::new(std::fs::File::create(&conv)?);
        writeln!(f, "iteration,added_points,relative_l2,relative_linf")?;
        let mut added = 0usize;
        for it in &report.iterations {
            writeln!(
                f,
                "{},{},{:.6e},{:.6e}",
                it.iteration, added, it.metrics.relative_l2, it.metrics.relative_linf
            )?;
            added += it.added.len();
        }
        drop(f);
        write_slice_extract(path, &report, out, &stem)?;
    }
    Ok(())
}

fn write_slice_extract(
    report_path: &Path,
    report: &TrainReport,
    out: &Path,
    stem: &str,
) -> Result<()> {
    let dir = match report_path.parent() {
        Some(d) => d,
        None => return Ok(()),
    };
    let last_iter = match report.iterations.last() {
        Some(it) => it.iteration,
        None => return Ok(()),
    };
    let ckpt = dir.join(format!("params_iter_{last_iter}.ckpt"));
    if !ckpt.exists() {
        return Ok(());
    }
    let params = load_checkpoint(&ckpt)?;
    match report.problem.as_str() {
        "burgers-fwd" | "burgers-inv" => {
            let t = 0.9;
            let path = out.join(format!("{stem}_slice_t0.9.csv"));
            let mut f = std::io::BufWriter::new(std::fs::File::create(path)?);
            writeln!(f, "x,u_pred,u_ref")?;
            for i in 0..256 {
                let x = -1.0 + 2.0 * i as f64 / 255.0;
                let pred = crate::network::forward(&params, &[x, t])?[0];
                let r = crate::reference::burgers_reference(x, t, crate::problems::BURGERS_NU0);
                writeln!(f, "{x:.6},{pred:.6e},{r:.6e}")?;
            }
        }
        "euler-sod-contact" => {
            let t = 2.0;
            let path = out.join(format!("{stem}_slice_t2.csv"));
            let mut f = std::io::BufWriter::new(std::fs::File::create(path)?);
            writeln!(f, "x,rho_pred,rho_exact")?;
            for i in 0..512 {
                let x = i as f64 / 511.0;
                let pred = crate::network::forward(&params, &[x, t])?[0];
                let (rho, _, _) = crate::reference::euler_exact(x, t);
                writeln!(f, "{x:.6},{pred:.6e},{rho:.6e}")?;
            }
        }
        _ => {}
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn mini_report(seed: u64, l2: f64, nu: Option<f64>) -> TrainReport {
        TrainReport {
            problem: "burgers-inv".into(),
            variant: "asm2".into(),
            seed,
            config_hash: "x".into(),
            status: RunStatus::Completed,
            iterations: vec![],
            added_residual_points: 30,
            added_boundary_points: 0,
            final_metrics: Some(crate::report::MetricsRecord {
                relative_l2: l2,
                relative_linf: 2.0 * l2,
                contact_location: None,
            }),
            final_extras: nu.map(|v| vec![("nu_hat".to_string(), v)]).unwrap_or_default(),
        }
    }

    #[test]
    fn summary_aggregates_and_counts_failures() {
        let reports = vec![mini_report(1, 0.04, Some(1.05)), mini_report(2, 0.06, Some(0.9))];
        let s = summarize(&reports, 1).unwrap();
        assert_eq!(s.runs, 2);
        assert_eq!(s.failures, 1);
        assert!((s.l2_mean - 0.05).abs() < 1e-12);
        let nu = s.nu_err_mean.unwrap();
        assert!((nu - 0.075).abs() < 1e-12); // (0.05 + 0.10)/2
    }

    #[test]
    fn single_run_summary_has_zero_std() {
        let s = summarize(&[mini_report(1, 0.05, None)], 0).unwrap();
        assert_eq!(s.l2_std, 0.0);
        assert!(s.nu_err_mean.is_none());
    }

    #[test]
    fn empty_plotdata_is_ok() {
        let dir = tempfile::tempdir().unwrap();
        cmd_plotdata(&[], dir.path()).unwrap();
    }

    #[test]
    fn missing_report_is_an_error_naming_the_path() {
        let dir = tempfile::tempdir().unwrap();
        let missing = dir.path().join("nope/report.json");
        let err = cmd_plotdata(&[missing.clone()], dir.path()).unwrap_err();
        assert!(err.to_string().contains("nope"));
    }

    #[test]
    fn resolve_rejects_unknown_problem() {
        let err = resolve_config(Some("bogus"), None, None, None, None).unwrap_err();
        assert!(err.to_string().contains("bogus"));
    }
}
