use clap::{Parser, Subcommand};
use pinn_asm::cli::{cmd_plotdata, cmd_run, cmd_sweep, resolve_config};
use pinn_asm::error::Error;
use pinn_asm::sampler::AsmVariant;
use std::path::PathBuf;

#[derive(Parser)]
#[command(
    name = "pinn-asm",
    about = "Adaptive-sampling PINN experiment runner",
    after_help = "Worker count: set PINN_ASM_THREADS to bound the rayon pool."
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

fn parse_asm(s: &str) -> Result<AsmVariant, String> {
    match s {
        "1" | "asm1" => Ok(AsmVariant::Asm1),
        "2" | "asm2" => Ok(AsmVariant::Asm2),
        "3" | "asm3" => Ok(AsmVariant::Asm3),
        "random" => Ok(AsmVariant::RandomBaseline),
        other => Err(format!("unknown ASM variant '{other}' (expected 1, 2, 3 or random)")),
    }
}

#[derive(Subcommand)]
enum Command {
    /// Run one experiment (bundled defaults or a TOML config).
    Run {
        /// Registered problem name (burgers-fwd, burgers-inv,
        /// euler-sod-contact, poisson-lshape, poisson-hd).
        problem: Option<String>,
        #[arg(long)]
        config: Option<PathBuf>,
        /// Sampling variant: 1, 2, 3 or random.
        #[arg(long, value_parser = parse_asm)]
        asm: Option<AsmVariant>,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Output directory (runs land in <out>/<problem>_<variant>_<seed>/).
        #[arg(long)]
        out: Option<PathBuf>,
        /// Cap on adaptive iterations.
        #[arg(long)]
        max_iters: Option<usize>,
    },
    /// Run a seed sweep and aggregate the results.
    Sweep {
        problem: Option<String>,
        #[arg(long)]
        config: Option<PathBuf>,
        #[arg(long, value_parser = parse_asm)]
        asm: Option<AsmVariant>,
        /// Comma-separated seed list, e.g. --seeds 1,2,3.
        #[arg(long, value_delimiter = ',', num_args = 1..)]
        seeds: Vec<u64>,
        #[arg(long)]
        out: Option<PathBuf>,
        #[arg(long)]
        max_iters: Option<usize>,
    },
    /// Emit plot-ready CSV series from saved reports.
    Plotdata {
        /// Paths to report.json files.
        reports: Vec<PathBuf>,
        #[arg(long, default_value = "plotdata")]
        out: PathBuf,
    },
}

fn main() {
    if let Ok(n) = std::env::var("PINN_ASM_THREADS") {
        if let Ok(n) = n.parse::<usize>() {
            let _ = rayon::ThreadPoolBuilder::new().num_threads(n).build_global();
        }
    }
    let cli = Cli::parse();
    let code = match run(cli) {
        Ok(()) => 0,
        Err(e @ (Error::Config(_) | Error::MissingFile(_))) => {
            eprintln!("error: {e}");
            2
        }
        Err(e) => {
            eprintln!("error: {e}");
            1
        }
    };
    std::process::exit(code);
}

fn run(cli: Cli) -> pinn_asm::Result<()> {
    match cli.command {
        Command::Run { problem, config, asm, seed, out, max_iters } => {
            let cfg = resolve_config(
                problem.as_deref(),
                config.as_deref(),
                asm,
                max_iters,
                out.as_deref(),
            )?;
            let report = cmd_run(&cfg, seed)?;
            if let Some(m) = &report.final_metrics {
                println!(
                    "{} {} seed {}: L2 {:.3}%, L∞ {:.3}%, added {}{}",
                    report.problem,
                    report.variant,
                    seed,
                    100.0 * m.relative_l2,
                    100.0 * m.relative_linf,
                    report.added_residual_points + report.added_boundary_points,
                    report
                        .final_extras
                        .iter()
                        .find(|(n, _)| n == "nu_hat")
                        .map(|(_, v)| format!(", ν̂ {v:.4}"))
                        .unwrap_or_default()
                );
            }
            Ok(())
        }
        Command::Sweep { problem, config, asm, seeds, out, max_iters } => {
            let mut cfg = resolve_config(
                problem.as_deref(),
                config.as_deref(),
                asm,
                max_iters,
                out.as_deref(),
            )?;
            let seeds = if seeds.is_empty() { std::mem::take(&mut cfg.seeds) } else { seeds };
            cmd_sweep(&cfg, &seeds)?;
            Ok(())
        }
        Command::Plotdata { reports, out } => cmd_plotdata(&reports, &out),
    }
}
