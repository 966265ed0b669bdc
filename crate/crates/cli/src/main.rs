use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use serde_json::json;
use srdae_cli::commands::{self, Artifacts, Result};
use srdae_cli::config::RunConfig;
use srdae_core::kernel::AsymptoticClass;

#[derive(Parser)]
#[command(name = "srdae", version, about = "Feasibility checks and simulations for nonlocal stochastic reaction equations")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Admissibility conditions, noise verdict and Hölder window for a config.
    Analyze {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        out: Option<PathBuf>,
        /// Print line-delimited JSON instead of text.
        #[arg(long)]
        jsonl: bool,
    },
    /// Unit mass, L_r norm and self-convolution table of the Bessel kernel
    /// of order δ₀(1−γ).
    Kernel {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Monte-Carlo check of the subordinator Laplace transform and the
    /// subordinate Brownian motion characteristic function.
    VerifySbm {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        out: Option<PathBuf>,
        #[arg(long, default_value_t = 100_000)]
        paths: usize,
        #[arg(long, value_delimiter = ',', default_values_t = [0.5, 1.0, 2.0, 4.0])]
        lambda: Vec<f64>,
        #[arg(long, value_delimiter = ',', default_values_t = [0.5, 1.0, 2.0, 4.0])]
        xi: Vec<f64>,
    },
    /// Runs the solver and writes one record per path.
    Simulate {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Hölder fits from a records.jsonl file written by `simulate`.
    Regularity {
        #[arg(long)]
        records: PathBuf,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Exact-fraction checks of the published comparison examples.
    Reproduce {
        /// Restrict to these case ids (repeatable).
        #[arg(long = "case")]
        cases: Vec<String>,
        #[arg(long)]
        jsonl: bool,
    },
}

fn out_dir(out: Option<PathBuf>, config: &RunConfig) -> PathBuf {
    out.unwrap_or_else(|| PathBuf::from(&config.output))
}

fn execute(cli: Cli) -> Result<bool> {
    let mut stdout = std::io::stdout().lock();
    match cli.command {
        Command::Analyze { config, out, jsonl } => {
            let config = commands::load_config(&config)?;
            let analysis = commands::analyze(&config)?;
            let artifacts = Artifacts::new(out_dir(out, &config), &config)?;
            let path = artifacts.jsonl("analysis.jsonl", &analysis.json_lines())?;
            if jsonl {
                let body = std::fs::read_to_string(&path).map_err(|e| srdae_cli::CliError::io(&path, e))?;
                commands::print(&mut stdout, &body)?;
            } else {
                commands::print(&mut stdout, &analysis.text())?;
            }
            Ok(true)
        }
        Command::Kernel { config, out } => {
            let config = commands::load_config(&config)?;
            let k = commands::kernel(&config)?;
            let artifacts = Artifacts::new(out_dir(out, &config), &config)?;
            let rows: Vec<String> = k
                .rows
                .iter()
                .map(|r| format!("{:e},{:e},{}", r.radius, r.value, r.fitted_slope_window))
                .collect();
            artifacts.csv("kernel_conv.csv", "radius,value,fitted_slope_window", &rows)?;
            let class = match k.class {
                AsymptoticClass::Bounded => "bounded".to_string(),
                AsymptoticClass::Logarithmic => "logarithmic".to_string(),
                AsymptoticClass::Power(e) => format!("power |x|^{e}"),
            };
            let lr = k.lr_norm.finite().map_or("divergent".to_string(), |v| format!("{v:e}"));
            let mut text = format!(
                "beta={} d={} r={}\nunit mass: {:.9}\nL_r norm: {lr}\nnear-origin class: {class}\n",
                k.beta, k.d, k.r, k.unit_mass
            );
            if let Some(s) = k.fitted_slope {
                text.push_str(&format!("fitted slope over radii 2^-3..2^-8: {s:.4}\n"));
            }
            text.push_str(&format!("table: {}\n", artifacts.dir().join("kernel_conv.csv").display()));
            commands::print(&mut stdout, &text)?;
            Ok(true)
        }
        Command::VerifySbm {
            config,
            out,
            paths,
            lambda,
            xi,
        } => {
            let config = commands::load_config(&config)?;
            let report = commands::verify_sbm(&config, paths, &lambda, &xi)?;
            let artifacts = Artifacts::new(out_dir(out, &config), &config)?;
            let mut rows = Vec::new();
            let mut text = String::new();
            for (which, set) in [("laplace", &report.laplace), ("characteristic", &report.characteristic)] {
                for r in set.iter() {
                    rows.push(format!(
                        "{which},{},{:e},{:e},{:e},{}",
                        r.argument, r.empirical, r.standard_error, r.theory, r.pass
                    ));
                    text.push_str(&format!(
                        "{} {which:<15} arg={:<6} empirical={:.6} theory={:.6} se={:.2e}\n",
                        if r.pass { "PASS" } else { "FAIL" },
                        r.argument,
                        r.empirical,
                        r.theory,
                        r.standard_error
                    ));
                }
            }
            artifacts.csv("sbm.csv", "identity,argument,empirical,standard_error,theory,pass", &rows)?;
            commands::print(&mut stdout, &text)?;
            Ok(report.all_pass())
        }
        Command::Simulate { config, out } => {
            let config = commands::load_config(&config)?;
            let records = commands::simulate(&config)?;
            let artifacts = Artifacts::new(out_dir(out, &config), &config)?;
            let path = commands::write_records(&artifacts, &config, &records)?;
            artifacts.csv("summary.csv", commands::SUMMARY_HEADER, &commands::summary_rows(&records))?;
            let blowups = records.iter().filter(|r| r.blowup.is_some()).count();
            let mut text = format!(
                "{} paths, {} blowups, config hash {}\n",
                records.len(),
                blowups,
                config.hash()
            );
            if records.iter().all(|r| r.initial_min >= 0.0) {
                text.push_str(&commands::nonnegativity_line(&records)?);
                text.push('\n');
            }
            text.push_str(&format!("records: {}\n", path.display()));
            commands::print(&mut stdout, &text)?;
            Ok(true)
        }
        Command::Regularity { records, out } => {
            let (config, recs) = commands::read_records(&records)?;
            let report = commands::regularity(&config, &recs)?;
            let dir = out.unwrap_or_else(|| records.parent().map(PathBuf::from).unwrap_or_default());
            let artifacts = Artifacts::new(dir, &config)?;
            let time_rows: Vec<String> = report.time.samples.iter().enumerate().map(|(i, e)| format!("{i},{e}")).collect();
            artifacts.csv("holder_time.csv", "sample,fitted_exponent", &time_rows)?;
            let mut text = format!(
                "alpha={} beta={} temporal exponent (median) {:.4} vs bound {:.4}: {}\n",
                report.alpha,
                report.beta,
                report.time.fitted_exponent,
                report.time_threshold,
                if report.time_pass() { "PASS" } else { "FAIL" }
            );
            if let Some(space) = &report.space {
                let rows: Vec<String> = space
                    .rows
                    .iter()
                    .map(|r| format!("{:e},{:e},{:e},{:e}", r.lag, r.value, r.modulus, r.ratio))
                    .collect();
                artifacts.csv("holder_space.csv", "lag,value,modulus,ratio", &rows)?;
                text.push_str(&format!(
                    "spatial ratio: max {:.4e}, small-lag slope {:.3}\n",
                    space.max_ratio, space.small_lag_slope
                ));
            }
            let summary = json!({
                "record": "regularity",
                "alpha": report.alpha,
                "beta": report.beta,
                "time_exponent": report.time.fitted_exponent,
                "time_threshold": report.time_threshold,
                "time_pass": report.time_pass(),
                "degenerate": report.time.degenerate,
            });
            artifacts.jsonl("regularity.jsonl", &[summary])?;
            commands::print(&mut stdout, &text)?;
            Ok(report.time_pass())
        }
        Command::Reproduce { cases, jsonl } => {
            let rep = commands::reproduce(&cases)?;
            let text = if jsonl { rep.jsonl() } else { rep.text() };
            commands::print(&mut stdout, &text)?;
            Ok(rep.all_pass())
        }
    }
}

fn main() -> ExitCode {
    match execute(Cli::parse()) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(1),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(2)
        }
    }
}
