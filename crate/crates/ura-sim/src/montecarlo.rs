//! Trial engine: draws arrivals, patterns and channels, evaluates every
//! requested receiver on the same realization, and estimates outage curves
//! with Wilson confidence intervals.
//!
//! Randomness is counter-based: every trial derives its own ChaCha stream
//! from (seed, trial index), so results are identical for any worker count
//! and any dispatch order.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Poisson};
use rayon::prelude::*;
use thiserror::Error;

use crate::access_codes::{
    allocate_steiner_patterns, build_steiner_code, sample_dsa_pattern, CodeError,
    SteinerCode,
};
use crate::analytics::{AnalyticsError, CodeKind, ScenarioParams};
use crate::channel_mrc::{
    draw_channel, sinr_collision_model, sinr_weighted_mrc, sinr_wn_mf, ChannelError, Receiver,
};

#[derive(Debug, Error)]
pub enum SimError {
    #[error("invalid config: {0}")]
    InvalidConfig(String),
    #[error(transparent)]
    Code(#[from] CodeError),
    #[error(transparent)]
    Analytics(#[from] AnalyticsError),
    #[error(transparent)]
    Channel(#[from] ChannelError),
}

/// Everything one outage estimation run needs.
#[derive(Debug, Clone)]
pub struct SimConfig {
    pub scenario: ScenarioParams,
    /// Mean per-packet SNR (linear).
    pub gamma_bar: f64,
    /// SINR thresholds (linear), strictly increasing.
    pub theta_grid: Vec<f64>,
    pub trials: u64,
    pub seed: u64,
    pub receivers: Vec<Receiver>,
    /// Worker threads; `None` uses the machine parallelism of the global pool.
    pub workers: Option<usize>,
}

impl SimConfig {
    pub fn validate(&self) -> Result<(), SimError> {
        if self.trials == 0 {
            return Err(SimError::InvalidConfig("trials must be >= 1".into()));
        }
        if self.theta_grid.is_empty() {
            return Err(SimError::InvalidConfig("theta grid must be nonempty".into()));
        }
        if self.theta_grid.iter().any(|&t| !(t > 0.0)) {
            return Err(SimError::InvalidConfig(
                "all thresholds must be positive".into(),
            ));
        }
        if self.theta_grid.windows(2).any(|w| w[0] >= w[1]) {
            return Err(SimError::InvalidConfig(
                "theta grid must be strictly increasing".into(),
            ));
        }
        if !(self.gamma_bar > 0.0) {
            return Err(SimError::InvalidConfig(format!(
                "gamma_bar must be positive, got {}",
                self.gamma_bar
            )));
        }
        if self.receivers.is_empty() {
            return Err(SimError::InvalidConfig(
                "at least one receiver required".into(),
            ));
        }
        Ok(())
    }
}

/// One estimated point of an outage curve.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OutagePoint {
    pub theta: f64,
    pub p_out: f64,
    /// Wilson 95% confidence half-width.
    pub ci_halfwidth: f64,
    pub trials: u64,
}

/// Estimated outage curve for one (scheme, receiver) pair.
#[derive(Debug, Clone, PartialEq)]
pub struct OutageCurve {
    pub scheme: CodeKind,
    pub receiver: Receiver,
    pub seed: u64,
    /// Poisson mass discarded by conditioning on N <= C (steiner only).
    pub discarded_tail_mass: f64,
    pub points: Vec<OutagePoint>,
}

const WILSON_Z: f64 = 1.959963984540054; // 95% two-sided normal quantile

/// Wilson score half-width for `successes` out of `trials`.
pub fn wilson_halfwidth(successes: u64, trials: u64) -> f64 {
    let n = trials as f64;
    let p = successes as f64 / n;
    let z2 = WILSON_Z * WILSON_Z;
    WILSON_Z / (1.0 + z2 / n) * (p * (1.0 - p) / n + z2 / (4.0 * n * n)).sqrt()
}

/// Wilson score interval center (differs from p-hat for small counts).
pub fn wilson_center(successes: u64, trials: u64) -> f64 {
    let n = trials as f64;
    let p = successes as f64 / n;
    let z2 = WILSON_Z * WILSON_Z;
    (p + z2 / (2.0 * n)) / (1.0 + z2 / n)
}

/// The per-trial RNG keyed by (seed, trial index).
pub fn trial_rng(seed: u64, trial: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(trial);
    rng
}

/// Draw N-1, the number of simultaneously active other users. For steiner
/// scenarios the Poisson is conditioned on N <= C by rejection.
fn draw_other_arrivals<R: Rng + ?Sized>(lambda: f64, cap: Option<u64>, rng: &mut R) -> u64 {
    if lambda == 0.0 {
        return 0;
    }
    let poisson = Poisson::new(lambda).expect("validated lambda");
    loop {
        let draw = poisson.sample(rng) as u64;
        match cap {
            Some(c) if draw > c - 1 => continue,
            _ => return draw,
        }
    }
}

/// Post-combining SINR of the tagged user for each requested receiver,
/// all evaluated on the same arrival/pattern/channel realization.
pub fn run_trial<R: Rng + ?Sized>(
    scenario: &ScenarioParams,
    code: Option<&SteinerCode>,
    gamma_bar: f64,
    receivers: &[Receiver],
    rng: &mut R,
) -> Result<Vec<f64>, SimError> {
    let m = scenario.m() as usize;
    let k = scenario.k() as usize;
    let patterns = match scenario.code() {
        CodeKind::Dsa => {
            let others = draw_other_arrivals(scenario.lambda(), None, rng) as usize;
            let mut pats = Vec::with_capacity(others + 1);
            for _ in 0..=others {
                pats.push(sample_dsa_pattern(m, k, rng)?);
            }
            pats
        }
        CodeKind::Steiner { capacity, .. } => {
            let code = code.ok_or_else(|| {
                SimError::InvalidConfig("steiner scenario requires a codebook".into())
            })?;
            let others = draw_other_arrivals(scenario.lambda(), Some(capacity), rng) as usize;
            allocate_steiner_patterns(code, others + 1, rng)?
        }
    };

    let ch = draw_channel(&patterns, 0, gamma_bar, rng)?;
    let collided = ch.collided_branches();
    Ok(receivers
        .iter()
        .map(|r| match r {
            Receiver::CollisionMrc => sinr_collision_model(&ch, &collided).gamma,
            Receiver::WeightedMrc => sinr_weighted_mrc(&ch).gamma,
            Receiver::WnMf => sinr_wn_mf(&ch).gamma,
        })
        .collect())
}

fn poisson_tail_beyond(lambda: f64, max_arrivals: u64) -> f64 {
    if lambda == 0.0 {
        return 0.0;
    }
    let mut weight = (-lambda).exp();
    let mut mass = weight;
    for i in 1..=max_arrivals {
        weight *= lambda / i as f64;
        mass += weight;
    }
    (1.0 - mass).max(0.0)
}

/// Run the full experiment: one outage curve per requested receiver, all
/// receivers sharing common random numbers within each trial.
pub fn estimate_outage(config: &SimConfig) -> Result<Vec<OutageCurve>, SimError> {
    config.validate()?;
    let scenario = &config.scenario;
    let (code, discarded) = match scenario.code() {
        CodeKind::Steiner { capacity, .. } => (
            Some(build_steiner_code(scenario.m() as usize, scenario.k() as usize)?),
            poisson_tail_beyond(scenario.lambda(), capacity - 1),
        ),
        CodeKind::Dsa => (None, 0.0),
    };

    let run = || -> Result<Vec<u64>, SimError> { count_outages(config, code.as_ref()) };
    let counts = match config.workers {
        Some(w) => rayon::ThreadPoolBuilder::new()
            .num_threads(w.max(1))
            .build()
            .map_err(|e| SimError::InvalidConfig(format!("worker pool: {e}")))?
            .install(run),
        None => run(),
    }?;

    let n_thetas = config.theta_grid.len();
    let curves = config
        .receivers
        .iter()
        .enumerate()
        .map(|(ri, &receiver)| OutageCurve {
            scheme: scenario.code(),
            receiver,
            seed: config.seed,
            discarded_tail_mass: discarded,
            points: config
                .theta_grid
                .iter()
                .enumerate()
                .map(|(ti, &theta)| {
                    let successes = counts[ri * n_thetas + ti];
                    OutagePoint {
                        theta,
                        p_out: successes as f64 / config.trials as f64,
                        ci_halfwidth: wilson_halfwidth(successes, config.trials),
                        trials: config.trials,
                    }
                })
                .collect(),
        })
        .collect();
    Ok(curves)
}

fn count_outages(config: &SimConfig, code: Option<&SteinerCode>) -> Result<Vec<u64>, SimError> {
    let n_thetas = config.theta_grid.len();
    let n_receivers = config.receivers.len();
    let counts = (0..config.trials)
        .into_par_iter()
        .try_fold(
            || vec![0u64; n_receivers * n_thetas],
            |mut counts, trial| -> Result<Vec<u64>, SimError> {
                let mut rng = trial_rng(config.seed, trial);
                let gammas = run_trial(
                    &config.scenario,
                    code,
                    config.gamma_bar,
                    &config.receivers,
                    &mut rng,
                )?;
                for (ri, &gamma) in gammas.iter().enumerate() {
                    // thresholds ascend, so count from the first exceeded one
                    for (ti, &theta) in config.theta_grid.iter().enumerate() {
                        if gamma < theta {
                            for slot in &mut counts[ri * n_thetas + ti..(ri + 1) * n_thetas] {
                                *slot += 1;
                            }
                            break;
                        }
                    }
                }
                Ok(counts)
            },
        )
        .try_reduce(
            || vec![0u64; n_receivers * n_thetas],
            |mut a, b| {
                for (x, y) in a.iter_mut().zip(b) {
                    *x += y;
                }
                Ok(a)
            },
        )?;
    Ok(counts)
}

/// Comparison of a Monte-Carlo curve against a closed-form reference.
#[derive(Debug, Clone, PartialEq)]
pub struct ConvergenceReport {
    pub max_z: f64,
    /// Indices of points whose |z| exceeds 4.
    pub flagged: Vec<usize>,
}

/// Z-scores of a Monte-Carlo curve against per-point reference values,
/// using the binomial standard error implied by the reference probability.
pub fn convergence_report(curve: &OutageCurve, reference: &[f64]) -> ConvergenceReport {
    let mut max_z = 0.0f64;
    let mut flagged = Vec::new();
    for (i, point) in curve.points.iter().enumerate() {
        let p_ref = reference.get(i).copied().unwrap_or(f64::NAN);
        let se = (p_ref * (1.0 - p_ref) / point.trials as f64).sqrt();
        let z = if se > 0.0 {
            (point.p_out - p_ref).abs() / se
        } else if point.p_out == p_ref {
            0.0
        } else {
            f64::INFINITY
        };
        max_z = max_z.max(z);
        if z > 4.0 {
            flagged.push(i);
        }
    }
    ConvergenceReport { max_z, flagged }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::analytics::{collision_outage, diversity_distribution};

    fn base_config(scenario: ScenarioParams) -> SimConfig {
        SimConfig {
            scenario,
            gamma_bar: 1000.0,
            theta_grid: vec![0.1, 1.0, 10.0],
            trials: 10_000,
            seed: 7,
            receivers: vec![Receiver::CollisionMrc, Receiver::WeightedMrc, Receiver::WnMf],
            workers: Some(2),
        }
    }

    #[test]
    fn zero_load_receivers_agree() {
        let scenario = ScenarioParams::dsa(25, 4, 0.0).unwrap();
        for trial in 0..2_000u64 {
            let mut rng = trial_rng(3, trial);
            let gammas = run_trial(&scenario, None, 100.0, &Receiver::ALL, &mut rng).unwrap();
            let rel = |a: f64, b: f64| ((a - b) / a.max(1e-300)).abs();
            assert!(rel(gammas[1], gammas[0]) < 1e-12);
            assert!(rel(gammas[1], gammas[2]) < 1e-12);
        }
    }

    #[test]
    fn steiner_collisions_bounded_by_arrivals() {
        let code = build_steiner_code(25, 4).unwrap();
        for trial in 0..5_000u64 {
            let mut rng = trial_rng(4, trial);
            // replicate the engine's draw to observe N and the realization
            let others = draw_other_arrivals(2.0, Some(50), &mut rng) as usize;
            let pats = allocate_steiner_patterns(&code, others + 1, &mut rng).unwrap();
            let ch = draw_channel(&pats, 0, 100.0, &mut rng).unwrap();
            assert!(ch.collided_branches().len() <= others.min(4));
        }
    }

    #[test]
    fn empirical_diversity_matches_analytics() {
        let scenario = ScenarioParams::dsa(25, 4, 2.0).unwrap();
        let dist = diversity_distribution(&scenario).unwrap();
        let trials = 200_000u64;
        let mut full_diversity = 0u64;
        for trial in 0..trials {
            let mut rng = trial_rng(5, trial);
            let others = draw_other_arrivals(2.0, None, &mut rng) as usize;
            let mut pats = Vec::with_capacity(others + 1);
            for _ in 0..=others {
                pats.push(sample_dsa_pattern(25, 4, &mut rng).unwrap());
            }
            let ch = draw_channel(&pats, 0, 100.0, &mut rng).unwrap();
            if ch.collided_branches().is_empty() {
                full_diversity += 1;
            }
        }
        let p_hat = full_diversity as f64 / trials as f64;
        let p = dist.probability(4);
        let se = (p * (1.0 - p) / trials as f64).sqrt();
        assert!((p_hat - p).abs() < 4.0 * se, "{p_hat} vs {p}");
    }

    #[test]
    fn reproducible_and_worker_count_independent() {
        let scenario = ScenarioParams::steiner(25, 4, 0.5).unwrap();
        let mut config = base_config(scenario);
        config.trials = 5_000;
        let a = estimate_outage(&config).unwrap();
        let b = estimate_outage(&config).unwrap();
        assert_eq!(a, b);
        config.workers = Some(4);
        let c = estimate_outage(&config).unwrap();
        assert_eq!(a, c);
        config.workers = Some(1);
        let d = estimate_outage(&config).unwrap();
        assert_eq!(a, d);
    }

    #[test]
    fn per_trial_receiver_ordering_orders_curves() {
        let scenario = ScenarioParams::dsa(25, 4, 5.0).unwrap();
        let config = base_config(scenario);
        let curves = estimate_outage(&config).unwrap();
        let coll = &curves[0];
        let weighted = &curves[1];
        let wn = &curves[2];
        for i in 0..config.theta_grid.len() {
            assert!(weighted.points[i].p_out <= wn.points[i].p_out);
            assert!(weighted.points[i].p_out <= coll.points[i].p_out);
        }
    }

    #[test]
    fn collision_mc_matches_gamma_mixture() {
        let scenario = ScenarioParams::dsa(25, 4, 0.5).unwrap();
        let mut config = base_config(scenario);
        config.trials = 100_000;
        config.receivers = vec![Receiver::CollisionMrc];
        config.theta_grid = vec![0.1, 1.0, 3.1622776601683795, 10.0];
        let curves = estimate_outage(&config).unwrap();
        let reference: Vec<f64> = config
            .theta_grid
            .iter()
            .map(|&t| collision_outage(&scenario, t, config.gamma_bar).unwrap())
            .collect();
        let report = convergence_report(&curves[0], &reference);
        assert!(report.flagged.is_empty(), "max z = {}", report.max_z);
    }

    #[test]
    fn convergence_report_negative_control() {
        let scenario = ScenarioParams::dsa(25, 4, 0.5).unwrap();
        let mut config = base_config(scenario);
        config.trials = 100_000;
        config.receivers = vec![Receiver::CollisionMrc];
        let curves = estimate_outage(&config).unwrap();
        // curve against itself: zero discrepancy
        let self_ref: Vec<f64> = curves[0].points.iter().map(|p| p.p_out).collect();
        let report = convergence_report(&curves[0], &self_ref);
        assert_eq!(report.max_z, 0.0);
        assert!(report.flagged.is_empty());
        // deliberately wrong reference gets flagged
        let wrong: Vec<f64> = config
            .theta_grid
            .iter()
            .map(|&t| collision_outage(&scenario, t, config.gamma_bar / 100.0).unwrap())
            .collect();
        let report = convergence_report(&curves[0], &wrong);
        assert!(!report.flagged.is_empty());
    }

    #[test]
    fn invalid_configs_rejected() {
        let scenario = ScenarioParams::dsa(25, 4, 0.5).unwrap();
        let mut config = base_config(scenario);
        config.theta_grid = vec![1.0, 0.5];
        assert!(matches!(
            estimate_outage(&config),
            Err(SimError::InvalidConfig(_))
        ));
        let mut config = base_config(scenario);
        config.trials = 0;
        assert!(estimate_outage(&config).is_err());
    }
}
