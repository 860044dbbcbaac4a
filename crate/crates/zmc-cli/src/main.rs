//! `zmc`: build, verify, classify and export zero-mean-curvature
//! time-like surfaces from a JSON run configuration.

use anyhow::Context;
use clap::{Args, Parser, Subcommand};
use std::path::PathBuf;
use std::process::ExitCode;
use zmc::config::RunConfig;
use zmc::pipeline::{run_pipeline, Mode, Outcome};

#[derive(Parser)]
#[command(name = "zmc", version, about = "Zero-mean-curvature surface toolkit")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct CommonArgs {
    /// Path to the JSON run configuration
    #[arg(long)]
    config: PathBuf,
    /// Override every grid point count in the config
    #[arg(long)]
    grid: Option<usize>,
    /// Override the verdict / residual-gate tolerance
    #[arg(long)]
    tol: Option<f64>,
    /// Directory for reports and exports
    #[arg(long, default_value = "out")]
    out: PathBuf,
}

#[derive(Subcommand)]
enum Command {
    /// Full pipeline: solve, build, verify, classify, integrate, export
    Run(CommonArgs),
    /// Build and check residual gates only
    Check(CommonArgs),
    /// Build and emit the classification report without gating
    Classify(CommonArgs),
    /// Solve the configured Goursat problem and emit the fields as CSV
    Solve(CommonArgs),
}

fn load_config(args: &CommonArgs) -> anyhow::Result<RunConfig> {
    let mut config = RunConfig::from_path(&args.config)
        .with_context(|| format!("loading {}", args.config.display()))?;
    if let Some(n) = args.grid {
        if let Some(g) = &mut config.grid {
            g.n_u = n;
            g.n_v = n;
        }
        if let Some(s) = &mut config.solve {
            s.grid.n_s = n;
            s.grid.n_t = n;
        }
    }
    if let Some(tol) = args.tol {
        config.tolerances.verdict = Some(tol);
    }
    Ok(config)
}

fn summarize(outcome: &Outcome) {
    if let Some(report) = &outcome.report {
        let r = &report.residuals;
        println!(
            "residual maxima (tolerance {:.3e}): gauss {:.3e}, codazzi {:.3e}, ricci {:.3e}, compatibility {:.3e}",
            r.tolerance, r.gauss_max, r.codazzi_max, r.ricci_max, r.compatibility_max
        );
        if let Some(p) = r.paraholomorphy_max {
            println!("paraholomorphy max {p:.3e}");
        }
        let c = &report.classification;
        println!(
            "classification: K==L0 {} (dev {:.3e}), normal flat {} (dev {:.3e}), Q {:?}",
            c.k_equals_l0.pass,
            c.k_equals_l0.max_deviation,
            c.normal_flat.pass,
            c.normal_flat.max_deviation,
            c.q_status
        );
        if let (Some(lp), Some(lm)) = (&c.lift_plus, &c.lift_minus) {
            println!("twistor lifts: plus {:?}, minus {:?}", lp.status, lm.status);
        }
        for e in &report.expectations {
            println!(
                "  expectation {}: {} ({})",
                e.name,
                if e.pass { "pass" } else { "FAIL" },
                e.detail
            );
        }
        if let Some(f) = &report.frame {
            println!(
                "frame: holonomy {:.3e}, gram {:.3e}, mean curvature defect {:.3e}{}",
                f.holonomy,
                f.gram_max,
                f.mean_h_max,
                f.quadric_max
                    .map(|q| format!(", quadric {q:.3e}"))
                    .unwrap_or_default()
            );
        }
        if !report.failures.is_empty() {
            println!("FAILED gates: {}", report.failures.join(", "));
        }
    }
    for a in &outcome.artifacts {
        println!("wrote {}", a.display());
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let (args, mode) = match &cli.command {
        Command::Run(a) => (a, Mode::Run),
        Command::Check(a) => (a, Mode::Check),
        Command::Classify(a) => (a, Mode::Classify),
        Command::Solve(a) => (a, Mode::Solve),
    };
    let outcome = load_config(args)
        .and_then(|config| run_pipeline(&config, mode, &args.out).map_err(Into::into));
    match outcome {
        Ok(outcome) => {
            summarize(&outcome);
            if outcome.pass {
                println!("PASS");
                ExitCode::SUCCESS
            } else {
                println!("FAIL");
                ExitCode::FAILURE
            }
        }
        Err(err) => {
            eprintln!("error: {err:#}");
            ExitCode::FAILURE
        }
    }
}
