//! `zeno` — drive the measurement-cycle engine from the command line.
//!
//! Subcommands: `scan` (survival over a (tau, pi-nu) grid, CSV + SVG),
//! `paper-check` (built-in reference-point acceptance run), `estimate`
//! (adaptive transition-strength estimation from a model file), and
//! `model-info` (model summary). Exit codes: 0 success, 1 acceptance or
//! runtime failure, 2 usage/parse error.

use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use zeno_cli::descriptor::ModelFile;
use zeno_cli::scan::{run_scan, ScanConfig, ScanMode};
use zeno_cli::{paper_check, reports, Failure};

#[derive(Parser)]
#[command(name = "zeno", version, about = "Zeno-protected measurement simulator and estimator")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Survival scan over a (tau, pi-nu) grid; emits CSV and SVG heatmaps.
    Scan {
        /// Scan configuration JSON; defaults to the built-in 25x25 grid on
        /// the equal-coupling two-level model.
        #[arg(long)]
        config: Option<PathBuf>,
        #[arg(long)]
        out_csv: Option<PathBuf>,
        #[arg(long)]
        out_svg_exact: Option<PathBuf>,
        #[arg(long = "out-svg-2nd")]
        out_svg_second_order: Option<PathBuf>,
    },
    /// Reference-point check: analytic survival forecasts plus sampled
    /// campaigns; exits 1 if any acceptance window fails.
    PaperCheck {
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Also write the full report as JSON (byte-identical per seed).
        #[arg(long)]
        out_json: Option<PathBuf>,
    },
    /// Adaptive estimation of the transition strength; prints JSON.
    Estimate {
        #[arg(long)]
        model: PathBuf,
        /// Inter-measurement period (reference units).
        #[arg(long)]
        tau: f64,
        /// Conditional phase in (0, pi).
        #[arg(long)]
        nu: f64,
        /// Total round budget across all stages.
        #[arg(long, default_value_t = 400)]
        budget: u64,
        #[arg(long, default_value_t = 0)]
        seed: u64,
    },
    /// Dimension, transition strength, coupling bound, and applied shift.
    ModelInfo {
        #[arg(long)]
        model: PathBuf,
    },
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli.command) {
        Ok(code) => ExitCode::from(code),
        Err(failure) => {
            eprintln!("error: {}", failure.message());
            ExitCode::from(failure.exit_code() as u8)
        }
    }
}

fn run(command: Command) -> Result<u8, Failure> {
    match command {
        Command::Scan {
            config,
            out_csv,
            out_svg_exact,
            out_svg_second_order,
        } => {
            let mut cfg = match config {
                Some(path) => ScanConfig::from_json(&read(&path)?).map_err(Failure::Usage)?,
                None => ScanConfig::default_for(ModelFile::TwoLevel {
                    omega: 1.0,
                    delta: 1.0,
                }),
            };
            // Command-line paths take precedence over config fields.
            if let Some(p) = out_csv {
                cfg.out_csv = Some(p.display().to_string());
            }
            if let Some(p) = out_svg_exact {
                cfg.out_svg_exact = Some(p.display().to_string());
            }
            if let Some(p) = out_svg_second_order {
                cfg.out_svg_second_order = Some(p.display().to_string());
            }
            let csv_path = cfg.out_csv.clone().ok_or_else(|| {
                Failure::Usage(anyhow::anyhow!("missing --out-csv (or out_csv in config)"))
            })?;
            let want_exact = matches!(cfg.mode, ScanMode::Exact | ScanMode::Both);
            let want_second = matches!(cfg.mode, ScanMode::SecondOrder | ScanMode::Both);
            if want_exact && cfg.out_svg_exact.is_none() {
                return Err(Failure::Usage(anyhow::anyhow!(
                    "missing --out-svg-exact (or out_svg_exact in config)"
                )));
            }
            if want_second && cfg.out_svg_second_order.is_none() {
                return Err(Failure::Usage(anyhow::anyhow!(
                    "missing --out-svg-2nd (or out_svg_second_order in config)"
                )));
            }

            let result = run_scan(&cfg)?;
            write(Path::new(&csv_path), &result.to_csv())?;
            if want_exact {
                write(
                    Path::new(cfg.out_svg_exact.as_ref().unwrap()),
                    &result.svg_exact(),
                )?;
            }
            if want_second {
                write(
                    Path::new(cfg.out_svg_second_order.as_ref().unwrap()),
                    &result.svg_second_order(),
                )?;
            }
            eprintln!(
                "scan: {} cells -> {}",
                result.cells.len(),
                csv_path
            );
            Ok(0)
        }
        Command::PaperCheck { seed, out_json } => {
            let report = paper_check::run(seed)?;
            print!("{}", paper_check::render_text(&report));
            if let Some(path) = out_json {
                let json = serde_json::to_string_pretty(&report)
                    .map_err(|e| Failure::Runtime(e.into()))?;
                write(&path, &json)?;
            }
            Ok(if report.pass { 0 } else { 1 })
        }
        Command::Estimate {
            model,
            tau,
            nu,
            budget,
            seed,
        } => {
            let file = ModelFile::from_json(&read(&model)?).map_err(Failure::Usage)?;
            let report = reports::estimate(&file, tau, nu, budget, seed)?;
            let json =
                serde_json::to_string_pretty(&report).map_err(|e| Failure::Runtime(e.into()))?;
            println!("{json}");
            Ok(0)
        }
        Command::ModelInfo { model } => {
            let file = ModelFile::from_json(&read(&model)?).map_err(Failure::Usage)?;
            let report = reports::model_info(&file)?;
            let json =
                serde_json::to_string_pretty(&report).map_err(|e| Failure::Runtime(e.into()))?;
            println!("{json}");
            Ok(0)
        }
    }
}

fn read(path: &Path) -> Result<String, Failure> {
    fs::read_to_string(path)
        .map_err(|e| Failure::Usage(anyhow::anyhow!("cannot read {}: {e}", path.display())))
}

fn write(path: &Path, contents: &str) -> Result<(), Failure> {
    fs::write(path, contents)
        .map_err(|e| Failure::Runtime(anyhow::anyhow!("cannot write {}: {e}", path.display())))
}
