//! Experiment runners: turn a flat config into swept analytic or simulated
//! curves and emit schema-stable CSV (one `#` metadata block, then a header
//! row, then data rows).

use std::io::Write;

use thiserror::Error;

use crate::analytics::{
    collision_outage, diversity_distribution, interferer_distribution, AnalyticsError,
    ScenarioParams,
};
use crate::channel_mrc::Receiver;
use crate::config::{db_to_linear, ConfigError, RawConfig};
use crate::montecarlo::{estimate_outage, SimConfig, SimError};

pub const TOOL_VERSION: &str = env!("CARGO_PKG_VERSION");

#[derive(Debug, Error)]
pub enum ExperimentError {
    #[error(transparent)]
    Config(#[from] ConfigError),
    #[error(transparent)]
    Analytics(#[from] AnalyticsError),
    #[error(transparent)]
    Sim(#[from] SimError),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

/// Which coding schemes a run covers.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SchemeSelection {
    Dsa,
    Steiner,
    Both,
}

impl SchemeSelection {
    fn parse(s: &str) -> Option<Self> {
        match s {
            "dsa" => Some(SchemeSelection::Dsa),
            "steiner" => Some(SchemeSelection::Steiner),
            "both" => Some(SchemeSelection::Both),
            _ => None,
        }
    }

    fn scenarios(&self, m: u64, k: u64, lambda: f64) -> Result<Vec<ScenarioParams>, AnalyticsError> {
        let mut out = Vec::new();
        if matches!(self, SchemeSelection::Dsa | SchemeSelection::Both) {
            out.push(ScenarioParams::dsa(m, k, lambda)?);
        }
        if matches!(self, SchemeSelection::Steiner | SchemeSelection::Both) {
            out.push(ScenarioParams::steiner(m, k, lambda)?);
        }
        Ok(out)
    }
}

fn read_scheme(raw: &mut RawConfig) -> Result<SchemeSelection, ConfigError> {
    match raw.get_str("scheme") {
        None => Ok(SchemeSelection::Both),
        Some(v) => SchemeSelection::parse(&v)
            .ok_or_else(|| ConfigError::field("scheme", format!("expected dsa|steiner|both, got '{v}'"))),
    }
}

/// Lambda sweep for the diversity and interferer experiments.
#[derive(Debug, Clone)]
pub struct SweepSpec {
    pub m: u64,
    pub k: u64,
    pub scheme: SchemeSelection,
    pub lambdas: Vec<f64>,
}

impl SweepSpec {
    pub fn from_raw(raw: &mut RawConfig) -> Result<Self, ConfigError> {
        let m: u64 = raw.require_parsed("M")?;
        let k: u64 = raw.require_parsed("K")?;
        let scheme = read_scheme(raw)?;
        let lambdas = match raw.get_f64_list("lambdas")? {
            Some(list) => {
                if list.iter().any(|&l| l < 0.0) {
                    return Err(ConfigError::field("lambdas", "lambda must be nonnegative"));
                }
                list
            }
            None => {
                let min: f64 = raw.get_or("lambda_min", 1e-2)?;
                let max: f64 = raw.get_or("lambda_max", 1e2)?;
                let points: usize = raw.get_or("lambda_points", 50)?;
                let scale: String = raw.get_or("lambda_scale", "log".to_string())?;
                if points == 0 {
                    return Err(ConfigError::field("lambda_points", "must be >= 1"));
                }
                if !(min >= 0.0) || max < min {
                    return Err(ConfigError::field(
                        "lambda_min",
                        "need 0 <= lambda_min <= lambda_max",
                    ));
                }
                match scale.as_str() {
                    "log" => {
                        if min <= 0.0 {
                            return Err(ConfigError::field(
                                "lambda_min",
                                "log scale needs lambda_min > 0",
                            ));
                        }
                        Ok::<_, ConfigError>(grid(min.log10(), max.log10(), points)
                            .into_iter()
                            .map(|e| 10f64.powf(e))
                            .collect())
                    }
                    "linear" => Ok(grid(min, max, points)),
                    other => Err(ConfigError::field(
                        "lambda_scale",
                        format!("expected log|linear, got '{other}'"),
                    )),
                }?
            }
        };
        raw.reject_unknown()?;
        Ok(Self {
            m,
            k,
            scheme,
            lambdas,
        })
    }
}

fn grid(min: f64, max: f64, points: usize) -> Vec<f64> {
    if points == 1 {
        return vec![min];
    }
    (0..points)
        .map(|i| min + (max - min) * i as f64 / (points - 1) as f64)
        .collect()
}

fn write_metadata<W: Write + ?Sized>(
    w: &mut W,
    command: &str,
    extra: &[(&str, String)],
) -> std::io::Result<()> {
    writeln!(w, "# ura-sim {TOOL_VERSION}")?;
    writeln!(w, "# command = {command}")?;
    for (key, value) in extra {
        writeln!(w, "# {key} = {value}")?;
    }
    Ok(())
}

/// Rows (scheme, lambda, k_prime, probability) over the lambda sweep.
pub fn write_diversity_csv<W: Write + ?Sized>(spec: &SweepSpec, w: &mut W) -> Result<(), ExperimentError> {
    let mut max_discarded = 0.0f64;
    let mut rows = Vec::new();
    for &lambda in &spec.lambdas {
        for scenario in spec.scheme.scenarios(spec.m, spec.k, lambda)? {
            let dist = diversity_distribution(&scenario)?;
            max_discarded = max_discarded.max(dist.discarded_tail_mass());
            for (k_prime, &p) in dist.probabilities().iter().enumerate() {
                rows.push(format!("{},{},{},{}", scenario.code().label(), lambda, k_prime, p));
            }
        }
    }
    write_metadata(
        w,
        "diversity",
        &[
            ("M", spec.m.to_string()),
            ("K", spec.k.to_string()),
            ("max_discarded_tail_mass", format!("{max_discarded:e}")),
        ],
    )?;
    writeln!(w, "scheme,lambda,k_prime,probability")?;
    for row in rows {
        writeln!(w, "{row}")?;
    }
    Ok(())
}

/// Rows (scheme, lambda, l_prime, probability) over the lambda sweep.
pub fn write_interferers_csv<W: Write + ?Sized>(spec: &SweepSpec, w: &mut W) -> Result<(), ExperimentError> {
    let mut max_discarded = 0.0f64;
    let mut rows = Vec::new();
    for &lambda in &spec.lambdas {
        for scenario in spec.scheme.scenarios(spec.m, spec.k, lambda)? {
            let dist = interferer_distribution(&scenario)?;
            max_discarded = max_discarded.max(dist.discarded_tail_mass());
            for (l_prime, &p) in dist.probabilities().iter().enumerate() {
                rows.push(format!("{},{},{},{}", scenario.code().label(), lambda, l_prime, p));
            }
        }
    }
    write_metadata(
        w,
        "interferers",
        &[
            ("M", spec.m.to_string()),
            ("K", spec.k.to_string()),
            ("max_discarded_tail_mass", format!("{max_discarded:e}")),
        ],
    )?;
    writeln!(w, "scheme,lambda,l_prime,probability")?;
    for row in rows {
        writeln!(w, "{row}")?;
    }
    Ok(())
}

/// Full outage experiment: simulation for every receiver, plus the analytic
/// Gamma mixture alongside the collision-model rows.
#[derive(Debug, Clone)]
pub struct OutageSpec {
    pub m: u64,
    pub k: u64,
    pub scheme: SchemeSelection,
    pub lambda: f64,
    pub gamma_db: f64,
    pub theta_db_grid: Vec<f64>,
    pub trials: u64,
    pub seed: u64,
    pub receivers: Vec<Receiver>,
    pub workers: Option<usize>,
}

impl OutageSpec {
    pub fn from_raw(
        raw: &mut RawConfig,
        seed_override: Option<u64>,
        workers_override: Option<usize>,
    ) -> Result<Self, ConfigError> {
        let m: u64 = raw.require_parsed("M")?;
        let k: u64 = raw.require_parsed("K")?;
        let scheme = read_scheme(raw)?;
        let lambda: f64 = raw.require_parsed("lambda")?;
        let gamma_db: f64 = raw.get_or("gamma_db", 30.0)?;
        let theta_db_grid = match raw.get_f64_list("theta_db_grid")? {
            Some(list) => list,
            None => {
                let min: f64 = raw.get_or("theta_db_min", -10.0)?;
                let max: f64 = raw.get_or("theta_db_max", 30.0)?;
                let points: usize = raw.get_or("theta_points", 20)?;
                if points == 0 || max <= min {
                    return Err(ConfigError::field(
                        "theta_points",
                        "need theta_db_min < theta_db_max and theta_points >= 1",
                    ));
                }
                grid(min, max, points)
            }
        };
        let trials: u64 = raw.get_or("trials", 1_000_000)?;
        let seed = match seed_override {
            Some(s) => {
                let _ = raw.get_str("seed");
                s
            }
            None => raw.require_parsed("seed")?,
        };
        let receivers = match raw.get_str("receivers") {
            None => Receiver::ALL.to_vec(),
            Some(list) => list
                .split(',')
                .map(|t| {
                    Receiver::parse(t.trim()).ok_or_else(|| {
                        ConfigError::field("receivers", format!("unknown receiver '{t}'"))
                    })
                })
                .collect::<Result<Vec<_>, _>>()?,
        };
        let workers = match workers_override {
            Some(n) => {
                let _ = raw.get_str("workers");
                Some(n)
            }
            None => raw.get_parsed::<usize>("workers")?,
        };
        raw.reject_unknown()?;
        Ok(Self {
            m,
            k,
            scheme,
            lambda,
            gamma_db,
            theta_db_grid,
            trials,
            seed,
            receivers,
            workers,
        })
    }
}

/// Rows (scheme, receiver, theta_db, p_out, ci_halfwidth, source).
pub fn write_outage_csv<W: Write + ?Sized>(spec: &OutageSpec, w: &mut W) -> Result<(), ExperimentError> {
    let gamma_bar = db_to_linear(spec.gamma_db);
    let theta_grid: Vec<f64> = spec.theta_db_grid.iter().map(|&d| db_to_linear(d)).collect();

    let mut rows = Vec::new();
    let mut discarded = 0.0f64;
    for scenario in spec.scheme.scenarios(spec.m, spec.k, spec.lambda)? {
        let config = SimConfig {
            scenario,
            gamma_bar,
            theta_grid: theta_grid.clone(),
            trials: spec.trials,
            seed: spec.seed,
            receivers: spec.receivers.clone(),
            workers: spec.workers,
        };
        let curves = estimate_outage(&config)?;
        for curve in &curves {
            discarded = discarded.max(curve.discarded_tail_mass);
            if curve.receiver == Receiver::CollisionMrc {
                for (i, &theta) in theta_grid.iter().enumerate() {
                    let analytic = collision_outage(&scenario, theta, gamma_bar)?;
                    rows.push(format!(
                        "{},{},{},{},{},analytic",
                        scenario.code().label(),
                        curve.receiver.label(),
                        spec.theta_db_grid[i],
                        analytic,
                        0.0
                    ));
                }
            }
            for (i, point) in curve.points.iter().enumerate() {
                rows.push(format!(
                    "{},{},{},{},{},mc",
                    scenario.code().label(),
                    curve.receiver.label(),
                    spec.theta_db_grid[i],
                    point.p_out,
                    point.ci_halfwidth
                ));
            }
        }
    }

    write_metadata(
        w,
        "outage",
        &[
            ("M", spec.m.to_string()),
            ("K", spec.k.to_string()),
            ("lambda", spec.lambda.to_string()),
            ("gamma_db", spec.gamma_db.to_string()),
            ("trials", spec.trials.to_string()),
            ("seed", spec.seed.to_string()),
            ("steiner_discarded_tail_mass", format!("{discarded:e}")),
        ],
    )?;
    writeln!(w, "scheme,receiver,theta_db,p_out,ci_halfwidth,source")?;
    for row in rows {
        writeln!(w, "{row}")?;
    }
    Ok(())
}
