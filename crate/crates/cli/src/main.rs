use std::fs;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use lcflow::steady::BoostSpec;
use lcflow_cli::{commands, parse_config, CliError, RunConfig};

#[derive(Parser)]
#[command(name = "lcflow", version, about = "Ricci flow on the sphere as null mean curvature flow in the lightcone")]
struct Cli {
    /// Configuration file (`key = value` lines).
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Output directory, overrides `output.directory`.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Leave wall-clock fields out of reports and default the seed to 0.
    #[arg(long, global = true)]
    deterministic: bool,
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Subcommand)]
enum Cmd {
    /// Run the flow and write diagnostics, snapshots and a report.
    Run,
    /// Run the identity checks on the initial cross section.
    Verify,
    /// Write a member of the constant-curvature family, optionally boosted.
    Steady {
        #[arg(long, allow_hyphen_values = true)]
        rapidity: Option<f64>,
        /// Unit boost axis, `x,y,z`.
        #[arg(long, value_delimiter = ',', allow_hyphen_values = true)]
        axis: Option<Vec<f64>>,
    },
    /// Fit a snapshot to the constant-curvature family.
    Fit { snapshot: PathBuf },
    /// Summarize an output directory.
    Report { dir: Option<PathBuf> },
}

fn load(cli: &Cli) -> Result<RunConfig, CliError> {
    let mut cfg = match &cli.config {
        Some(path) => {
            let text = fs::read_to_string(path).map_err(|source| CliError::Io {
                path: path.clone(),
                source,
            })?;
            parse_config(&text)?
        }
        None => RunConfig::default(),
    };
    if let Some(out) = &cli.out {
        cfg.output.directory = out.clone();
    }
    if cli.seed.is_some() {
        cfg.seed = cli.seed;
    }
    cfg.output.deterministic |= cli.deterministic;
    cfg.validate()?;
    Ok(cfg)
}

fn dispatch(cli: Cli) -> Result<bool, CliError> {
    let cfg = load(&cli)?;
    match cli.cmd {
        Cmd::Run => {
            let r = commands::run(cfg.clone())?;
            let meta = r.meta.as_ref().expect("run sets metadata");
            let last = r.final_record.as_ref().expect("run sets final record");
            println!("stop: {:?} at t = {}, {} steps", meta.stop_reason, last.t, meta.accepted_steps);
            if let Some(f) = &r.fit {
                println!("fit: c = {}, a = {:?}, residual = {:e}", f.c, f.a, f.residual);
            }
            for rep in &r.reports {
                println!("{}", rep.summary());
            }
            println!("wrote {}", cfg.output.directory.display());
            Ok(r.all_pass())
        }
        Cmd::Verify => {
            let r = commands::verify(cfg)?;
            for rep in &r.reports {
                println!("{}", rep.summary());
            }
            for (k, v) in &r.errors {
                println!("SKIP {k}: {v}");
            }
            Ok(r.reports.iter().all(|r| r.pass))
        }
        Cmd::Steady { rapidity, axis } => {
            let axis = match axis.as_deref() {
                None => None,
                Some(&[x, y, z]) => Some([x, y, z]),
                Some(_) => return Err(CliError::Usage("--axis takes three components".into())),
            };
            let boost = match (rapidity, axis) {
                (Some(b), Some(n)) => Some(BoostSpec::new(b, n)?),
                (Some(b), None) => Some(BoostSpec::new(b, [0.0, 0.0, 1.0])?),
                (None, _) => None,
            };
            let r = commands::steady(cfg.clone(), boost)?;
            let f = r.fit.as_ref().expect("steady sets fit");
            println!("fit: c = {}, a = {:?}, residual = {:e}", f.c, f.a, f.residual);
            println!("wrote {}", cfg.output.directory.display());
            Ok(true)
        }
        Cmd::Fit { snapshot } => {
            let f = commands::fit(&cfg, &snapshot)?;
            println!("{}", serde_json::to_string_pretty(&f)?);
            Ok(true)
        }
        Cmd::Report { dir } => {
            let dir = dir.unwrap_or(cfg.output.directory);
            print!("{}", commands::report(&dir)?);
            Ok(true)
        }
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    match dispatch(Cli::parse()) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::FAILURE,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(2)
        }
    }
}
