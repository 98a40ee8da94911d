//! Experiment runner CLI. Exit codes: 0 success, 1 config error,
//! 2 unsupported parameters, 3 verification failure.

use std::fs;
use std::io::Write;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use ura_sim::access_codes::{self, CodeError};
use ura_sim::analytics::{self, AnalyticsError, ScenarioParams};
use ura_sim::config::RawConfig;
use ura_sim::experiments::{
    write_diversity_csv, write_interferers_csv, write_outage_csv, ExperimentError, OutageSpec,
    SweepSpec,
};
use ura_sim::montecarlo::SimError;
use ura_sim::oracle;

#[derive(Parser)]
#[command(
    name = "ura-sim",
    version,
    about = "Reliability of K-repetition multichannel random access: analytic curves and Monte-Carlo outage"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct RunArgs {
    /// Flat key = value config file
    #[arg(long)]
    config: PathBuf,
    /// Output CSV path (stdout when omitted)
    #[arg(long)]
    out: Option<PathBuf>,
    /// Override the config seed
    #[arg(long)]
    seed: Option<u64>,
    /// Override the worker thread count
    #[arg(long)]
    workers: Option<usize>,
}

#[derive(Subcommand)]
enum Command {
    /// Surviving-diversity distribution over a lambda sweep (CSV)
    Diversity(RunArgs),
    /// Per-subchannel interferer distribution over a lambda sweep (CSV)
    Interferers(RunArgs),
    /// Outage curves: Monte-Carlo for all receivers plus the analytic
    /// collision model (CSV)
    Outage(RunArgs),
    /// Construct an S(2,K,M) code file
    GenCode {
        #[arg(short = 'M', long = "subchannels")]
        m: usize,
        #[arg(short = 'K', long = "repetitions")]
        k: usize,
        #[arg(long)]
        out: PathBuf,
    },
    /// Verify a code file against every design invariant
    VerifyCode { path: PathBuf },
    /// Spot-check the closed forms against exhaustive enumeration
    OracleCheck {
        #[arg(long, default_value = "dsa")]
        scheme: String,
        #[arg(short = 'M', long = "subchannels")]
        m: u64,
        #[arg(short = 'K', long = "repetitions")]
        k: u64,
        /// Total active users N
        #[arg(short = 'N', long = "users")]
        n: u64,
    },
}

const EXIT_CONFIG: u8 = 1;
const EXIT_UNSUPPORTED: u8 = 2;
const EXIT_VERIFICATION: u8 = 3;

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::new().filter("URA_SIM_LOG")).init();
    let cli = Cli::parse();
    match run(cli) {
        Ok(code) => code,
        Err(err) => {
            eprintln!("error: {err}");
            ExitCode::from(exit_code_for(&err))
        }
    }
}

#[derive(Debug, thiserror::Error)]
enum CliError {
    #[error(transparent)]
    Experiment(#[from] ExperimentError),
    #[error(transparent)]
    Code(#[from] CodeError),
    #[error(transparent)]
    Analytics(#[from] AnalyticsError),
    #[error(transparent)]
    Oracle(#[from] oracle::OracleError),
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error("{0}")]
    Usage(String),
}

fn exit_code_for(err: &CliError) -> u8 {
    match err {
        CliError::Code(
            CodeError::InadmissibleParameters { .. } | CodeError::UnsupportedParameters { .. },
        ) => EXIT_UNSUPPORTED,
        CliError::Analytics(AnalyticsError::InvalidParameters(_)) => EXIT_UNSUPPORTED,
        CliError::Oracle(_) => EXIT_UNSUPPORTED,
        CliError::Experiment(ExperimentError::Analytics(_)) => EXIT_UNSUPPORTED,
        CliError::Experiment(ExperimentError::Sim(SimError::Code(
            CodeError::InadmissibleParameters { .. } | CodeError::UnsupportedParameters { .. },
        ))) => EXIT_UNSUPPORTED,
        _ => EXIT_CONFIG,
    }
}

fn run(cli: Cli) -> Result<ExitCode, CliError> {
    match cli.command {
        Command::Diversity(args) => {
            let mut raw = load_config(&args.config)?;
            let spec = SweepSpec::from_raw(&mut raw).map_err(ExperimentError::from)?;
            emit(&args, |w| write_diversity_csv(&spec, w))?;
            Ok(ExitCode::SUCCESS)
        }
        Command::Interferers(args) => {
            let mut raw = load_config(&args.config)?;
            let spec = SweepSpec::from_raw(&mut raw).map_err(ExperimentError::from)?;
            emit(&args, |w| write_interferers_csv(&spec, w))?;
            Ok(ExitCode::SUCCESS)
        }
        Command::Outage(args) => {
            let mut raw = load_config(&args.config)?;
            let spec = OutageSpec::from_raw(&mut raw, args.seed, args.workers)
                .map_err(ExperimentError::from)?;
            log::info!(
                "outage run: M={} K={} lambda={} trials={}",
                spec.m,
                spec.k,
                spec.lambda,
                spec.trials
            );
            emit(&args, |w| write_outage_csv(&spec, w))?;
            Ok(ExitCode::SUCCESS)
        }
        Command::GenCode { m, k, out } => {
            let code = access_codes::build_steiner_code(m, k)?;
            access_codes::write_code(&out, &code)?;
            println!(
                "wrote S(2,{},{}) with C={} D={} to {}",
                k,
                m,
                code.capacity(),
                code.overlap_bound(),
                out.display()
            );
            Ok(ExitCode::SUCCESS)
        }
        Command::VerifyCode { path } => {
            let (code, report) = access_codes::read_code(&path)?;
            print!("{report}");
            if report.is_valid() {
                println!(
                    "S(2,{},{}): C={} D={}",
                    code.k(),
                    code.m(),
                    code.capacity(),
                    code.overlap_bound()
                );
                Ok(ExitCode::SUCCESS)
            } else {
                Ok(ExitCode::from(EXIT_VERIFICATION))
            }
        }
        Command::OracleCheck { scheme, m, k, n } => oracle_check(&scheme, m, k, n),
    }
}

fn load_config(path: &PathBuf) -> Result<RawConfig, CliError> {
    let text = fs::read_to_string(path)?;
    RawConfig::parse(&text)
        .map_err(|e| CliError::Experiment(ExperimentError::Config(e)))
}

fn emit<F>(args: &RunArgs, write: F) -> Result<(), CliError>
where
    F: FnOnce(&mut dyn Write) -> Result<(), ExperimentError>,
{
    match &args.out {
        Some(path) => {
            let mut buf: Vec<u8> = Vec::new();
            write(&mut buf)?;
            fs::write(path, buf)?;
        }
        None => {
            let stdout = std::io::stdout();
            let mut lock = stdout.lock();
            write(&mut lock)?;
        }
    }
    Ok(())
}

fn oracle_check(scheme: &str, m: u64, k: u64, n: u64) -> Result<ExitCode, CliError> {
    let tolerance = 1e-12;
    let (enumerated, analytic): (Vec<f64>, Vec<f64>) = match scheme {
        "dsa" => {
            let enumerated = oracle::enumerate_dsa_diversity(m, k, n)?;
            let analytic = (0..=k)
                .map(|kp| analytics::p_dsa_diversity_given_n(m, k, kp, n))
                .collect::<Result<Vec<_>, _>>()?;
            (enumerated, analytic)
        }
        "steiner" => {
            let code = access_codes::build_steiner_code(m as usize, k as usize)?;
            let params = ScenarioParams::steiner(m, k, 0.0)?;
            let enumerated = oracle::enumerate_steiner_diversity(&code, n)?;
            let analytic = (0..=k)
                .map(|kp| analytics::p_det_diversity_given_n(&params, kp, n))
                .collect::<Result<Vec<_>, _>>()?;
            (enumerated, analytic)
        }
        other => {
            return Err(CliError::Usage(format!(
                "unknown scheme '{other}', expected dsa or steiner"
            )))
        }
    };
    println!("k_prime,enumeration,closed_form,abs_diff");
    let mut max_diff = 0.0f64;
    for (kp, (&e, &a)) in enumerated.iter().zip(&analytic).enumerate() {
        let diff = (e - a).abs();
        max_diff = max_diff.max(diff);
        println!("{kp},{e},{a},{diff}");
    }
    if max_diff <= tolerance {
        println!("max |diff| = {max_diff:e} (within {tolerance:e})");
        Ok(ExitCode::SUCCESS)
    } else {
        eprintln!("mismatch: max |diff| = {max_diff:e} exceeds {tolerance:e}");
        Ok(ExitCode::from(EXIT_VERIFICATION))
    }
}
