use std::io::Write;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};
use xcghmc::{ess_initial_monotone, Budget, LegSpec, Limit, Observable, RefreshAngle};
use xcghmc_harness::experiment::ReplicaSummary;
use xcghmc_harness::output::{plot_data_from_file, read_column, write_samples, write_samples_to};
use xcghmc_harness::spec::{PointSettings, TargetSpec};
use xcghmc_harness::{
    load_spec, run_experiment_with, run_replica, verify, HarnessError, RunOptions, Suite,
};

#[derive(Parser)]
#[command(
    name = "xcghmc",
    version,
    about = "Extra chance generalized hybrid Monte Carlo"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, ValueEnum)]
enum Format {
    Csv,
    Json,
}

#[derive(Subcommand)]
enum Command {
    /// Run a single chain.
    Sample {
        #[arg(long, default_value = "gaussian")]
        target: String,
        #[arg(long, default_value_t = 1)]
        dims: usize,
        /// Comma-separated gaussian variances.
        #[arg(long, value_delimiter = ',')]
        variances: Option<Vec<f64>>,
        /// Banana curvature.
        #[arg(long)]
        curvature: Option<f64>,
        #[arg(long)]
        dt: f64,
        /// Verlet steps per leg (L).
        #[arg(long, default_value_t = 10)]
        steps: usize,
        #[arg(long, default_value_t = 1.0)]
        sin_psi: f64,
        /// Extra chances (K).
        #[arg(long, default_value_t = 0)]
        extra_chances: usize,
        #[arg(long, default_value_t = 0.05)]
        jitter: f64,
        /// Production force-evaluation budget.
        #[arg(long, default_value_t = 1_000_000)]
        budget: u64,
        /// Exact number of production transitions; overrides --budget.
        #[arg(long)]
        transitions: Option<usize>,
        #[arg(long, default_value_t = 500)]
        burn_in: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long, default_value = "coord:0")]
        observable: String,
        /// Output file; standard output when absent.
        #[arg(long)]
        out: Option<PathBuf>,
        #[arg(long, value_enum, default_value = "csv")]
        format: Format,
        /// Include momenta in CSV output.
        #[arg(long)]
        momenta: bool,
    },
    /// Run a parameter sweep described by a spec file.
    Sweep {
        #[arg(long)]
        spec: PathBuf,
        /// Worker threads (0 = one per core).
        #[arg(long, default_value_t = 0)]
        workers: usize,
        /// Override the spec's output directory.
        #[arg(long)]
        out_dir: Option<PathBuf>,
        #[arg(long)]
        momenta: bool,
    },
    /// Run invariant verification suites.
    Verify {
        #[arg(long, default_value = "all")]
        suite: Suite,
        /// Print the report as JSON.
        #[arg(long)]
        json: bool,
    },
    /// Effective sample size of one CSV column.
    Ess {
        #[arg(long)]
        input: PathBuf,
        #[arg(long)]
        column: String,
    },
    /// Emit `value,ess_mean,ess_std,ess_stderr` from a summary file.
    PlotData {
        #[arg(long)]
        summary: PathBuf,
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

enum Failure {
    Harness(HarnessError),
    Verification,
}

impl From<HarnessError> for Failure {
    fn from(e: HarnessError) -> Self {
        Self::Harness(e)
    }
}

impl From<xcghmc::Error> for Failure {
    fn from(e: xcghmc::Error) -> Self {
        Self::Harness(e.into())
    }
}

fn emit(out: Option<&PathBuf>, text: &str) -> Result<(), HarnessError> {
    match out {
        Some(path) => std::fs::write(path, text).map_err(|e| HarnessError::io(path, e)),
        None => std::io::stdout()
            .write_all(text.as_bytes())
            .map_err(|e| HarnessError::io("<stdout>", e)),
    }
}

fn run(cli: Cli) -> Result<(), Failure> {
    match cli.command {
        Command::Sample {
            target,
            dims,
            variances,
            curvature,
            dt,
            steps,
            sin_psi,
            extra_chances,
            jitter,
            budget,
            transitions,
            burn_in,
            seed,
            observable,
            out,
            format,
            momenta,
        } => {
            let spec = TargetSpec {
                variances,
                curvature,
                ..TargetSpec::new(target, dims)
            };
            let model = spec.build()?;
            let observable = Observable::parse(&observable)?;
            if observable.min_dim() > dims {
                return Err(
                    HarnessError::spec("observable", "index exceeds the target dimension").into(),
                );
            }
            if !(0.0..1.0).contains(&jitter) {
                return Err(HarnessError::spec(
                    "jitter",
                    format!("must lie in [0, 1), got {jitter}"),
                )
                .into());
            }
            let settings = PointSettings {
                leg: LegSpec::new(dt, steps)?,
                angle: RefreshAngle::from_sin(sin_psi)?,
                extra_chances,
                jitter,
            };
            let limit = match transitions {
                Some(n) => Limit::Transitions(n),
                None => Limit::ForceEvals(budget),
            };
            let record = run_replica(&model, &settings, Budget { limit, burn_in }, seed)?;
            match format {
                Format::Csv => match &out {
                    Some(path) => write_samples(path, &record, momenta)?,
                    None => write_samples_to(
                        csv::Writer::from_writer(std::io::stdout().lock()),
                        &record,
                        momenta,
                        Path::new("<stdout>"),
                    )?,
                },
                Format::Json => {
                    let summary = ReplicaSummary::from_record(0, seed, &record, &observable);
                    let mut text =
                        serde_json::to_string_pretty(&summary).map_err(HarnessError::from)?;
                    text.push('\n');
                    emit(out.as_ref(), &text)?;
                }
            }
        }
        Command::Sweep {
            spec,
            workers,
            out_dir,
            momenta,
        } => {
            let mut spec = load_spec(&spec)?;
            if let Some(dir) = out_dir {
                spec.out_dir = dir;
            }
            let options = RunOptions {
                workers,
                write_outputs: true,
                momenta,
            };
            let report = run_experiment_with(&spec, &options)?;
            for p in &report.points {
                let a = &p.aggregate;
                eprintln!(
                    "{} = {}: ess {:.1} ± {:.1} over {} replicas",
                    spec.sweep.axis.name(),
                    p.value,
                    a.ess_mean.unwrap_or(f64::NAN),
                    a.ess_std.unwrap_or(f64::NAN),
                    a.ess_count
                );
            }
            eprintln!(
                "wrote {}",
                xcghmc_harness::experiment::summary_path(&spec.out_dir).display()
            );
        }
        Command::Verify { suite, json } => {
            let report = verify(suite);
            if json {
                let text = serde_json::to_string_pretty(&report).map_err(HarnessError::from)?;
                println!("{text}");
            } else {
                print!("{report}");
            }
            if !report.passed() {
                return Err(Failure::Verification);
            }
        }
        Command::Ess { input, column } => {
            let series = read_column(&input, &column)?;
            let est = ess_initial_monotone(&series)?;
            let text = serde_json::json!({
                "column": column,
                "len": est.len,
                "ess": est.ess,
                "relative": est.relative(),
                "pairs": est.pairs,
                "clamped": est.clamped,
                "nonpositive_variance": est.nonpositive_variance,
            });
            println!("{text}");
        }
        Command::PlotData { summary, out } => {
            let text = plot_data_from_file(&summary)?;
            emit(out.as_ref(), &text)?;
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure::Verification) => ExitCode::from(2),
        Err(Failure::Harness(e)) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
