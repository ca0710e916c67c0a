use std::collections::BTreeMap;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use fourier_width::exact::best_constant_error;
use fourier_width::harness::{run_sweep, ExperimentConfig, FamilySpec, HarnessError, Threads};
use fourier_width::kernel::eval_kernel;
use fourier_width::validation;
use fourier_width::{asymptotics, Error, FormulaId, KernelSpec, PsiSequence};

#[derive(Parser)]
#[command(
    name = "fourier-width",
    version,
    about = "Exact uniform error of Fourier sums on convolution classes"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct FamilyArgs {
    /// gen_poisson, loglog_power, exp_log_squared, exp_over_log or custom
    #[arg(long, default_value = "gen_poisson")]
    family: String,
    #[arg(long, allow_negative_numbers = true)]
    alpha: Option<f64>,
    /// Exponent of gen_poisson
    #[arg(long, default_value_t = 1.0)]
    r: f64,
    /// gen_poisson with r = 1 given through q = e^{-alpha}
    #[arg(long, conflicts_with = "alpha")]
    q: Option<f64>,
    /// Custom coefficients as "k:v,k:v,..."
    #[arg(long)]
    table: Option<String>,
    /// Custom family with the single coefficient psi(k) = 1
    #[arg(long, conflicts_with = "table")]
    harmonic: Option<u64>,
}

#[derive(Subcommand)]
enum Command {
    /// Kernel value at one point, printed as "value ± radius"
    EvalKernel {
        #[command(flatten)]
        family: FamilyArgs,
        #[arg(long, default_value_t = 0.0, allow_negative_numbers = true)]
        beta: f64,
        #[arg(long)]
        n: u64,
        #[arg(long, allow_negative_numbers = true)]
        t: f64,
        #[arg(long, default_value_t = 1e-10)]
        tol: f64,
    },
    /// Exact error with its bounds, as json
    Exact {
        #[command(flatten)]
        family: FamilyArgs,
        #[arg(long, default_value_t = 0.0, allow_negative_numbers = true)]
        beta: f64,
        #[arg(long)]
        n: u64,
        #[arg(long, default_value_t = 1e-10)]
        tol: f64,
    },
    /// Main term and remainder scale of one formula, as json
    Predict {
        #[command(flatten)]
        family: FamilyArgs,
        #[arg(long)]
        formula: FormulaId,
        #[arg(long)]
        n: u64,
        #[arg(long, default_value_t = 1e-10)]
        tol: f64,
    },
    /// Run a sweep described by a json config and write its report
    Sweep {
        config: PathBuf,
        /// Overrides the config's thread count
        #[arg(long)]
        threads: Option<Threads>,
    },
    /// Run the acceptance suite; exits 0 iff every criterion passes
    Validate {
        #[arg(long, default_value = "auto")]
        threads: Threads,
        /// Criterion ids to run, comma separated
        #[arg(long, value_delimiter = ',')]
        only: Vec<u8>,
    },
}

enum Failure {
    Usage(String),
    Compute(String),
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        match e {
            Error::InvalidParameter(_) | Error::DomainError(_) | Error::NotDifferentiable(_) => {
                Failure::Usage(e.to_string())
            }
            _ => Failure::Compute(e.to_string()),
        }
    }
}

impl From<HarnessError> for Failure {
    fn from(e: HarnessError) -> Self {
        match e {
            HarnessError::Config { .. } => Failure::Usage(e.to_string()),
            _ => Failure::Compute(e.to_string()),
        }
    }
}

fn parse_table(s: &str) -> Result<BTreeMap<u64, f64>, Failure> {
    s.split(',')
        .filter(|p| !p.trim().is_empty())
        .map(|p| {
            let (k, v) = p
                .split_once(':')
                .ok_or_else(|| Failure::Usage(format!("table entry {p:?} is not k:v")))?;
            let k = k
                .trim()
                .parse()
                .map_err(|_| Failure::Usage(format!("bad index in {p:?}")))?;
            let v = v
                .trim()
                .parse()
                .map_err(|_| Failure::Usage(format!("bad value in {p:?}")))?;
            Ok((k, v))
        })
        .collect()
}

impl FamilyArgs {
    fn build(&self) -> Result<PsiSequence, Failure> {
        let mut spec = FamilySpec::named(&self.family);
        if self.family == "gen_poisson" {
            spec.alpha = self.alpha;
            spec.q = self.q;
            if self.q.is_none() || self.r != 1.0 {
                spec.r = Some(self.r);
            }
        } else {
            spec.alpha = self.alpha;
            spec.q = self.q;
        }
        spec.table = self.table.as_deref().map(parse_table).transpose()?;
        spec.harmonic = self.harmonic;
        spec.build().map_err(Failure::Usage)
    }
}

fn json<T: serde::Serialize>(v: &T) -> Result<(), Failure> {
    let s = serde_json::to_string_pretty(v).map_err(|e| Failure::Compute(e.to_string()))?;
    println!("{s}");
    Ok(())
}

fn run(cmd: Command) -> Result<bool, Failure> {
    match cmd {
        Command::EvalKernel {
            family,
            beta,
            n,
            t,
            tol,
        } => {
            let spec = KernelSpec::new(family.build()?, beta, n)?;
            let v = eval_kernel(&spec, t, tol)?;
            println!("{:e} ± {:e}", v.absolute(), v.absolute_radius());
        }
        Command::Exact {
            family,
            beta,
            n,
            tol,
        } => {
            let spec = KernelSpec::new(family.build()?, beta, n)?;
            json(&best_constant_error(&spec, tol)?)?;
        }
        Command::Predict {
            family,
            formula,
            n,
            tol,
        } => {
            json(&asymptotics::predict(formula, &family.build()?, n, tol)?)?;
        }
        Command::Sweep { config, threads } => {
            let mut cfg = ExperimentConfig::from_path(&config)?;
            if let Some(t) = threads {
                cfg.threads = t;
            }
            let report = run_sweep(&cfg)?;
            let failed = report
                .rows
                .iter()
                .filter(|r| r.error.is_some() || r.sandwich_holds == Some(false))
                .count();
            eprintln!(
                "{} rows written to {} ({failed} with errors)",
                report.rows.len(),
                cfg.output.path.display()
            );
        }
        Command::Validate { threads, only } => {
            let results = if only.is_empty() {
                validation::run_all(threads.pool_size())
            } else {
                if let Some(bad) = only.iter().find(|&&id| validation::criterion(id).is_none()) {
                    return Err(Failure::Usage(format!("no criterion {bad}")));
                }
                validation::run_selected(threads.pool_size(), &only)
            };
            for r in &results {
                println!("{}", r.line());
            }
            let passed = results.iter().filter(|r| r.passed).count();
            println!("{passed}/{} criteria passed", results.len());
            return Ok(passed == results.len());
        }
    }
    Ok(true)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli.command) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(1),
        Err(Failure::Usage(m)) => {
            eprintln!("error: {m}");
            ExitCode::from(2)
        }
        Err(Failure::Compute(m)) => {
            eprintln!("error: {m}");
            ExitCode::from(1)
        }
    }
}
