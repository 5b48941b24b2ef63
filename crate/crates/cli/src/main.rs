use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use v2v3d_cli::run::{execute, write_angles, Overrides, Plan};
use v2v3d_cli::scenario::{load, Scenario};

#[derive(Parser)]
#[command(name = "v2v3d", version, about = "3D MIMO V2V channel model and sum-of-sinusoids simulator")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Check a scenario file and report problems with line numbers.
    Validate { path: PathBuf },
    /// Compute statistics and write one CSV per (statistic, model).
    Run {
        path: PathBuf,
        /// Comma-separated: acf, ccf, psd, lcr, afd, pdfs, all.
        #[arg(long)]
        stats: Option<String>,
        /// Comma-separated: reference, sos, empirical, all.
        #[arg(long)]
        model: Option<String>,
        #[arg(long)]
        seed: Option<u64>,
        /// Samples in the generated realization.
        #[arg(long)]
        samples: Option<usize>,
        #[arg(long)]
        out: Option<PathBuf>,
        /// Force every elevation angle to zero.
        #[arg(long = "2d")]
        mode_2d: bool,
    },
    /// Write the discrete angle sets used by the simulator.
    Angles {
        path: PathBuf,
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

fn load_or_report(path: &Path) -> Option<Scenario> {
    match load(path) {
        Ok(s) => {
            for w in &s.warnings {
                eprintln!("{}: warning: {w}", path.display());
            }
            Some(s)
        }
        Err(diags) => {
            for d in diags {
                match d.line {
                    Some(l) => eprintln!("{}:{l}: error: {}", path.display(), d.message),
                    None => eprintln!("{}: error: {}", path.display(), d.message),
                }
            }
            None
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    if let Err(e) = v2v3d_cli::init_workers() {
        eprintln!("error: {e:#}");
        return ExitCode::from(2);
    }
    match cli.command {
        Command::Validate { path } => match load_or_report(&path) {
            Some(s) => {
                println!("{}: ok ({})", path.display(), s.config.name);
                ExitCode::SUCCESS
            }
            None => ExitCode::FAILURE,
        },
        Command::Run { path, stats, model, seed, samples, out, mode_2d } => {
            let Some(scenario) = load_or_report(&path) else {
                return ExitCode::FAILURE;
            };
            let ov = Overrides {
                seed,
                samples,
                stats: stats.map(|s| vec![s]),
                models: model.map(|m| vec![m]),
                out,
                mode_2d,
            };
            let result = Plan::new(&scenario, &ov).and_then(|plan| {
                let m = execute(&scenario, &plan)?;
                Ok((plan, m))
            });
            match result {
                Ok((plan, m)) => {
                    for name in m.outputs.keys() {
                        println!("{}", plan.out.join(name).display());
                    }
                    for f in &m.failures {
                        eprintln!("error: {} / {}: {}", f.stat, f.model, f.error);
                    }
                    if m.failures.is_empty() {
                        ExitCode::SUCCESS
                    } else {
                        ExitCode::FAILURE
                    }
                }
                Err(e) => {
                    eprintln!("error: {e:#}");
                    ExitCode::FAILURE
                }
            }
        }
        Command::Angles { path, out } => {
            let Some(scenario) = load_or_report(&path) else {
                return ExitCode::FAILURE;
            };
            match write_angles(&scenario, out.as_deref()) {
                Ok(csv) => {
                    if out.is_none() {
                        print!("{csv}");
                    }
                    ExitCode::SUCCESS
                }
                Err(e) => {
                    eprintln!("error: {e:#}");
                    ExitCode::FAILURE
                }
            }
        }
    }
}
