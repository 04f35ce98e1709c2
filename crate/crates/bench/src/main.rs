use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use spdflow_bench::commands::{cmd_bounds, cmd_convergence, cmd_run, ConvergenceModel, Field};
use spdflow_bench::config::ExperimentConfig;
use spdflow_bench::report::fmt_num;
use spdflow_bench::{parse_seed, BenchError, EXIT_OK, SEED_ENV};

#[derive(Parser)]
#[command(name = "spdflow", version, about = "Integrators for ODEs on SPD matrices")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
#[group(required = true, multiple = false)]
struct Source {
    /// JSON experiment file.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Builtin experiment: case1 or case2.
    #[arg(long)]
    preset: Option<String>,
}

#[derive(Subcommand)]
enum Command {
    /// Integrate, compare with the reference and write CSV files.
    Run {
        #[command(flatten)]
        source: Source,
        #[arg(long)]
        out: Option<PathBuf>,
        /// Initial mean for GBM models, comma separated.
        #[arg(long, value_delimiter = ',', allow_negative_numbers = true)]
        m0: Option<Vec<f64>>,
        #[arg(long)]
        refine: Option<usize>,
    },
    /// Step-size bounds at the initial point.
    Bounds {
        #[command(flatten)]
        source: Source,
        /// euler or rk4; both when omitted.
        #[arg(long)]
        field: Option<String>,
    },
    /// Observed order of every integrator on a step-size ladder.
    Convergence {
        /// frozen, sinusoidal, case1 or case2.
        #[arg(long)]
        model: String,
        #[arg(long, value_delimiter = ',', required = true)]
        hs: Vec<f64>,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Directory for convergence.csv.
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

fn load(source: &Source, seed: Option<u64>) -> Result<ExperimentConfig, BenchError> {
    let mut cfg = match (&source.config, &source.preset) {
        (Some(path), _) => ExperimentConfig::from_path(path)?,
        (None, Some(name)) => ExperimentConfig::preset(name)?,
        (None, None) => return Err(BenchError::Config("one of --config or --preset is required".into())),
    };
    if let Some(seed) = seed {
        cfg.seed = seed;
    }
    Ok(cfg)
}

fn execute(cli: Cli) -> Result<(), BenchError> {
    let env_seed = parse_seed(std::env::var(SEED_ENV).ok().as_deref())?;
    match cli.command {
        Command::Run { source, out, m0, refine } => {
            let mut cfg = load(&source, env_seed)?;
            if out.is_some() {
                cfg.out = out;
            }
            if m0.is_some() {
                cfg.m0 = m0;
            }
            if let Some(r) = refine {
                cfg.refine = r;
            }
            let result = cmd_run(&cfg)?;
            println!("integrator,final_frob,final_affine,max_frob,non_spd_points,failure");
            for s in &result.report.summaries {
                let opt = |v: Option<f64>| v.map_or_else(|| "NA".to_string(), fmt_num);
                let failure = s
                    .failure
                    .as_ref()
                    .map_or_else(|| "none".to_string(), |(k, msg)| format!("interval {k}: {msg}"));
                println!(
                    "{},{},{},{},{},{failure}",
                    s.integrator,
                    opt(s.final_frob),
                    opt(s.final_affine),
                    fmt_num(s.max_frob),
                    s.non_spd_points
                );
            }
        }
        Command::Bounds { source, field } => {
            let cfg = load(&source, env_seed)?;
            let fields = match field {
                Some(f) => vec![f.parse::<Field>()?],
                None => vec![Field::Euler, Field::Rk4],
            };
            for f in fields {
                println!("{}", cmd_bounds(&cfg, f)?);
            }
        }
        Command::Convergence { model, hs, seed, out } => {
            let id: ConvergenceModel = model.parse()?;
            let report = cmd_convergence(id, &hs, env_seed.unwrap_or(seed))?;
            for row in &report.rows {
                println!("{} slope={}", row.integrator, row.slope);
            }
            if let Some(dir) = out {
                std::fs::create_dir_all(&dir).map_err(|e| BenchError::Io(e.to_string()))?;
                let path = dir.join("convergence.csv");
                std::fs::write(&path, report.to_csv())
                    .map_err(|e| BenchError::Io(format!("{}: {e}", path.display())))?;
            }
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) if !e.use_stderr() => {
            let _ = e.print();
            return ExitCode::from(EXIT_OK as u8);
        }
        Err(e) => {
            let err = BenchError::Config(e.to_string().lines().next().unwrap_or_default().to_string());
            eprintln!("{}", err.line());
            return ExitCode::from(err.exit_code() as u8);
        }
    };
    match execute(cli) {
        Ok(()) => ExitCode::from(EXIT_OK as u8),
        Err(e) => {
            eprintln!("{}", e.line());
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
