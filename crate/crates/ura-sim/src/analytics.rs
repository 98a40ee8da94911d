//! Closed-form probability machinery: surviving-diversity and
//! per-subchannel interferer distributions, Poisson marginalization, and
//! collision-model outage through the Gamma mixture.

use statrs::function::gamma::gamma_lr;
use thiserror::Error;

use crate::access_codes::{steiner_capacity, steiner_overlap};

#[derive(Debug, Error)]
pub enum AnalyticsError {
    #[error("invalid parameters: {0}")]
    InvalidParameters(String),
    #[error("population exceeded: N={n} with codebook capacity C={capacity}")]
    PopulationExceeded { n: u64, capacity: u64 },
    #[error("internal consistency failure: alternating sum evaluated to {value}, below -1e-9")]
    Inconsistency { value: f64 },
}

/// Coding strategy of the population.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CodeKind {
    Dsa,
    Steiner { capacity: u64, overlap: u64 },
}

impl CodeKind {
    pub fn label(&self) -> &'static str {
        match self {
            CodeKind::Dsa => "dsa",
            CodeKind::Steiner { .. } => "steiner",
        }
    }
}

/// The (M, K, lambda, code) tuple everything downstream consumes.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ScenarioParams {
    m: u64,
    k: u64,
    lambda: f64,
    code: CodeKind,
}

impl ScenarioParams {
    pub fn dsa(m: u64, k: u64, lambda: f64) -> Result<Self, AnalyticsError> {
        Self::validate(m, k, lambda)?;
        Ok(Self {
            m,
            k,
            lambda,
            code: CodeKind::Dsa,
        })
    }

    pub fn steiner(m: u64, k: u64, lambda: f64) -> Result<Self, AnalyticsError> {
        Self::validate(m, k, lambda)?;
        let capacity = steiner_capacity(m as usize, k as usize).ok_or_else(|| {
            AnalyticsError::InvalidParameters(format!(
                "no S(2,{k},{m}) parameters: K(K-1) must divide M(M-1)"
            ))
        })? as u64;
        let overlap = steiner_overlap(m as usize, k as usize).ok_or_else(|| {
            AnalyticsError::InvalidParameters(format!(
                "no S(2,{k},{m}) parameters: (K-1) must divide (M-K)"
            ))
        })? as u64;
        Ok(Self {
            m,
            k,
            lambda,
            code: CodeKind::Steiner { capacity, overlap },
        })
    }

    fn validate(m: u64, k: u64, lambda: f64) -> Result<(), AnalyticsError> {
        if k == 0 || k > m {
            return Err(AnalyticsError::InvalidParameters(format!(
                "need 1 <= K <= M, got M={m}, K={k}"
            )));
        }
        if !(lambda >= 0.0) || !lambda.is_finite() {
            return Err(AnalyticsError::InvalidParameters(format!(
                "lambda must be finite and nonnegative, got {lambda}"
            )));
        }
        Ok(())
    }

    pub fn m(&self) -> u64 {
        self.m
    }

    pub fn k(&self) -> u64 {
        self.k
    }

    pub fn lambda(&self) -> f64 {
        self.lambda
    }

    pub fn code(&self) -> CodeKind {
        self.code
    }

    pub fn with_lambda(mut self, lambda: f64) -> Result<Self, AnalyticsError> {
        Self::validate(self.m, self.k, lambda)?;
        self.lambda = lambda;
        Ok(self)
    }

    /// Codebook capacity when the scheme is deterministic.
    pub fn capacity(&self) -> Option<u64> {
        match self.code {
            CodeKind::Steiner { capacity, .. } => Some(capacity),
            CodeKind::Dsa => None,
        }
    }
}

/// Probability vector over surviving diversity K' = 0..=K.
#[derive(Debug, Clone, PartialEq)]
pub struct DiversityDistribution {
    probabilities: Vec<f64>,
    discarded_tail_mass: f64,
}

impl DiversityDistribution {
    pub fn from_probabilities(
        probabilities: Vec<f64>,
        discarded_tail_mass: f64,
    ) -> Result<Self, AnalyticsError> {
        let mut probabilities = probabilities;
        for p in probabilities.iter_mut() {
            if *p < -1e-15 {
                return Err(AnalyticsError::Inconsistency { value: *p });
            }
            if *p < 0.0 {
                *p = 0.0;
            }
        }
        let sum: f64 = probabilities.iter().sum();
        if (sum - 1.0).abs() > 1e-9 {
            return Err(AnalyticsError::InvalidParameters(format!(
                "diversity probabilities sum to {sum}, expected 1 within 1e-9"
            )));
        }
        Ok(Self {
            probabilities,
            discarded_tail_mass,
        })
    }

    pub fn probabilities(&self) -> &[f64] {
        &self.probabilities
    }

    /// p(K' = k_prime)
    pub fn probability(&self, k_prime: usize) -> f64 {
        self.probabilities.get(k_prime).copied().unwrap_or(0.0)
    }

    pub fn max_diversity(&self) -> usize {
        self.probabilities.len() - 1
    }

    pub fn discarded_tail_mass(&self) -> f64 {
        self.discarded_tail_mass
    }
}

/// Probability vector over per-subchannel interferer count L' = 0..=l_max.
#[derive(Debug, Clone, PartialEq)]
pub struct InterfererDistribution {
    probabilities: Vec<f64>,
    discarded_tail_mass: f64,
}

impl InterfererDistribution {
    pub fn probabilities(&self) -> &[f64] {
        &self.probabilities
    }

    pub fn probability(&self, l_prime: usize) -> f64 {
        self.probabilities.get(l_prime).copied().unwrap_or(0.0)
    }

    pub fn l_max(&self) -> usize {
        self.probabilities.len() - 1
    }

    pub fn discarded_tail_mass(&self) -> f64 {
        self.discarded_tail_mass
    }
}

/// Neumaier-compensated accumulator for alternating sums.
#[derive(Default)]
struct CompensatedSum {
    sum: f64,
    compensation: f64,
}

impl CompensatedSum {
    fn add(&mut self, value: f64) {
        let t = self.sum + value;
        if self.sum.abs() >= value.abs() {
            self.compensation += (self.sum - t) + value;
        } else {
            self.compensation += (value - t) + self.sum;
        }
        self.sum = t;
    }

    fn total(&self) -> f64 {
        self.sum + self.compensation
    }
}

/// C(a, r) / C(b, r) for 0 <= r <= b and a <= b, evaluated as a product of
/// r factors in [0, 1] (no overflow, relative error ~r machine epsilons).
/// `None` encodes a zero numerator (a < r or a < 0).
fn choose_ratio(a: i64, b: i64, r: i64) -> Option<f64> {
    debug_assert!(r >= 0 && r <= b && a <= b);
    if a < 0 || a < r {
        return None;
    }
    let mut acc = 1.0f64;
    for i in 0..r {
        acc *= (a - i) as f64 / (b - i) as f64;
    }
    Some(acc)
}

/// Exact binomial coefficient, `None` on u128 overflow.
fn choose_u128(n: u64, r: u64) -> Option<u128> {
    if r > n {
        return Some(0);
    }
    let r = r.min(n - r);
    let mut acc = 1u128;
    for i in 0..r {
        // acc holds C(n, i), so acc * (n - i) is divisible by i + 1
        acc = acc.checked_mul((n - i) as u128)? / (i + 1) as u128;
    }
    Some(acc)
}

/// Exact small binomial coefficient as f64.
fn choose_exact(n: u64, r: u64) -> f64 {
    if r > n {
        return 0.0;
    }
    let r = r.min(n - r);
    let mut acc = 1u128;
    for i in 0..r {
        acc = acc * (n - i) as u128 / (i + 1) as u128;
    }
    acc as f64
}

fn clamp_probability(value: f64) -> Result<f64, AnalyticsError> {
    if value < -1e-9 {
        return Err(AnalyticsError::Inconsistency { value });
    }
    Ok(value.clamp(0.0, 1.0))
}

/// Probability that K' of user U's K subchannels stay interference-free in
/// DSA with N total active users (the classical occupancy form).
pub fn p_dsa_diversity_given_n(
    m: u64,
    k: u64,
    k_prime: u64,
    n: u64,
) -> Result<f64, AnalyticsError> {
    if n == 0 || k == 0 || k > m || k_prime > k {
        return Err(AnalyticsError::InvalidParameters(format!(
            "need N >= 1 and 0 <= K' <= K <= M, got M={m}, K={k}, K'={k_prime}, N={n}"
        )));
    }
    if n == 1 {
        return Ok(if k_prime == k { 1.0 } else { 0.0 });
    }
    let k_diff = k - k_prime;
    let mut acc = CompensatedSum::default();
    for j in 0..=k_diff {
        // X_j = C(M-K'-j, K) / C(M, K): chance one interferer misses a
        // fixed set of K'+j subchannels
        let x = match choose_ratio((m - k_prime - j) as i64, m as i64, k as i64) {
            Some(v) => v,
            None => continue, // X_j = 0 and N >= 2, so the term vanishes
        };
        let term = choose_exact(k_diff, j) * x.powf((n - 1) as f64);
        acc.add(if j % 2 == 0 { term } else { -term });
    }
    let value = choose_exact(k, k_diff) * acc.total();
    clamp_probability(value)
}

/// Same conditional for a deterministic S(2,K,M) codebook of capacity C and
/// per-point overlap bound D.
pub fn p_det_diversity_given_n(
    params: &ScenarioParams,
    k_prime: u64,
    n: u64,
) -> Result<f64, AnalyticsError> {
    let (capacity, overlap) = match params.code {
        CodeKind::Steiner { capacity, overlap } => (capacity, overlap),
        CodeKind::Dsa => {
            return Err(AnalyticsError::InvalidParameters(
                "deterministic conditional requires steiner parameters".into(),
            ))
        }
    };
    let k = params.k;
    if n == 0 || k_prime > k {
        return Err(AnalyticsError::InvalidParameters(format!(
            "need N >= 1 and 0 <= K' <= K, got K={k}, K'={k_prime}, N={n}"
        )));
    }
    if n > capacity {
        return Err(AnalyticsError::PopulationExceeded { n, capacity });
    }
    if n == 1 {
        return Ok(if k_prime == k { 1.0 } else { 0.0 });
    }
    // All terms share the denominator C(C-1, N-1); integer arithmetic on the
    // numerator makes structural zeros (e.g. K' = 0, N = 2) exactly zero.
    if let Some(value) = det_diversity_exact(capacity, overlap, k, k_prime, n) {
        return clamp_probability(value);
    }
    // fallback for designs too large for 128-bit coefficients
    let k_diff = k - k_prime;
    let mut acc = CompensatedSum::default();
    for j in 0..=k_diff {
        // Y_s = C(C-1-sD, N-1) / C(C-1, N-1) with s = K'+j: chance every
        // interferer avoids the sD patterns crossing a fixed s-subset
        let available = capacity as i64 - 1 - (overlap as i64) * (j as i64 + k_prime as i64);
        let y = match choose_ratio(available, capacity as i64 - 1, n as i64 - 1) {
            Some(v) => v,
            None => continue, // C(a,b) = 0 when a < b or a < 0
        };
        let term = choose_exact(k_diff, j) * y;
        acc.add(if j % 2 == 0 { term } else { -term });
    }
    let value = choose_exact(k, k_diff) * acc.total();
    clamp_probability(value)
}

/// Integer-exact evaluation of the deterministic diversity conditional:
/// C(K, K-K') sum_j (-1)^j C(K-K', j) C(C-1-D(K'+j), N-1) / C(C-1, N-1).
/// `None` when a coefficient overflows u128 (caller falls back to floats).
fn det_diversity_exact(
    capacity: u64,
    overlap: u64,
    k: u64,
    k_prime: u64,
    n: u64,
) -> Option<f64> {
    let total = choose_u128(capacity - 1, n - 1)?;
    let k_diff = k - k_prime;
    let mut num: i128 = 0;
    for j in 0..=k_diff {
        let blocked = overlap.checked_mul(k_prime + j)?;
        let coeff = match (capacity - 1).checked_sub(blocked) {
            Some(available) => choose_u128(available, n - 1)?,
            None => 0,
        };
        let term = i128::try_from(choose_u128(k_diff, j)?)
            .ok()?
            .checked_mul(i128::try_from(coeff).ok()?)?;
        num = if j % 2 == 0 {
            num.checked_add(term)?
        } else {
            num.checked_sub(term)?
        };
    }
    let prefactor = i128::try_from(choose_u128(k, k_diff)?).ok()?;
    let num = num.checked_mul(prefactor)?;
    Some(num as f64 / total as f64)
}

/// Result of marginalizing a conditional over the Poisson arrival process.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Marginalized {
    pub value: f64,
    /// Poisson mass beyond the truncation point. For capacity-limited
    /// (steiner) scenarios this mass is redistributed by renormalization.
    pub discarded_tail_mass: f64,
}

/// Sum conditional(N) * Poisson(N-1; lambda) over N >= 1.
///
/// The sum truncates once the remaining Poisson tail mass drops below
/// `tail_eps`. With `max_population = Some(C)` the Poisson is conditioned on
/// N <= C and the included weights renormalized; the discarded mass is
/// reported either way.
pub fn marginalize_poisson<F>(
    mut conditional: F,
    lambda: f64,
    tail_eps: f64,
    max_population: Option<u64>,
) -> Result<Marginalized, AnalyticsError>
where
    F: FnMut(u64) -> Result<f64, AnalyticsError>,
{
    if !(lambda >= 0.0) || !lambda.is_finite() {
        return Err(AnalyticsError::InvalidParameters(format!(
            "lambda must be finite and nonnegative, got {lambda}"
        )));
    }
    if lambda == 0.0 {
        return Ok(Marginalized {
            value: conditional(1)?,
            discarded_tail_mass: 0.0,
        });
    }
    let hard_cap = max_population.unwrap_or(u64::MAX);
    let mut weight = (-lambda).exp(); // Poisson(0; lambda)
    let mut mass = 0.0f64;
    let mut acc = CompensatedSum::default();
    let mut n: u64 = 1;
    loop {
        acc.add(conditional(n)? * weight);
        mass += weight;
        if n >= hard_cap {
            break;
        }
        if 1.0 - mass < tail_eps && n as f64 > lambda {
            break;
        }
        // next Poisson weight: P(N-1 = n) = P(N-1 = n-1) * lambda / n
        weight *= lambda / n as f64;
        n += 1;
        if n > 1_000_000 {
            break;
        }
    }
    let discarded = (1.0 - mass).max(0.0);
    let value = if max_population.is_some() && mass > 0.0 {
        acc.total() / mass
    } else {
        acc.total()
    };
    Ok(Marginalized {
        value,
        discarded_tail_mass: discarded,
    })
}

const DEFAULT_TAIL_EPS: f64 = 1e-12;

/// Full marginal distribution of the surviving diversity K'.
pub fn diversity_distribution(
    params: &ScenarioParams,
) -> Result<DiversityDistribution, AnalyticsError> {
    let k = params.k;
    let mut probabilities = Vec::with_capacity(k as usize + 1);
    let mut discarded = 0.0;
    for k_prime in 0..=k {
        let marg = match params.code {
            CodeKind::Dsa => marginalize_poisson(
                |n| p_dsa_diversity_given_n(params.m, k, k_prime, n),
                params.lambda,
                DEFAULT_TAIL_EPS,
                None,
            )?,
            CodeKind::Steiner { capacity, .. } => marginalize_poisson(
                |n| p_det_diversity_given_n(params, k_prime, n),
                params.lambda,
                DEFAULT_TAIL_EPS,
                Some(capacity),
            )?,
        };
        probabilities.push(marg.value);
        discarded = marg.discarded_tail_mass;
    }
    DiversityDistribution::from_probabilities(probabilities, discarded)
}

/// Probability of L' interferers in one given subchannel of U under DSA with
/// N total users: binomial with per-interferer hit probability K/M.
pub fn p_dsa_interferers_given_n(
    m: u64,
    k: u64,
    l_prime: u64,
    n: u64,
) -> Result<f64, AnalyticsError> {
    if n == 0 || k == 0 || k > m {
        return Err(AnalyticsError::InvalidParameters(format!(
            "need N >= 1 and 1 <= K <= M, got M={m}, K={k}, N={n}"
        )));
    }
    if l_prime > n - 1 {
        return Err(AnalyticsError::InvalidParameters(format!(
            "need 0 <= L' <= N-1, got L'={l_prime}, N={n}"
        )));
    }
    let p = k as f64 / m as f64;
    if p == 1.0 {
        return Ok(if l_prime == n - 1 { 1.0 } else { 0.0 });
    }
    // C(N-1, L') p^L' (1-p)^(N-1-L'), folding the binomial coefficient into
    // the p factors to keep intermediates in range
    let mut value = (1.0 - p).powf((n - 1 - l_prime) as f64);
    for i in 1..=l_prime {
        value *= (n - 1 - l_prime + i) as f64 / i as f64 * p;
    }
    clamp_probability(value)
}

/// Same conditional for the deterministic codebook: hypergeometric over the
/// D patterns sharing the subchannel.
pub fn p_det_interferers_given_n(
    params: &ScenarioParams,
    l_prime: u64,
    n: u64,
) -> Result<f64, AnalyticsError> {
    let (capacity, overlap) = match params.code {
        CodeKind::Steiner { capacity, overlap } => (capacity, overlap),
        CodeKind::Dsa => {
            return Err(AnalyticsError::InvalidParameters(
                "deterministic conditional requires steiner parameters".into(),
            ))
        }
    };
    if n == 0 {
        return Err(AnalyticsError::InvalidParameters("need N >= 1".into()));
    }
    if n > capacity {
        return Err(AnalyticsError::PopulationExceeded { n, capacity });
    }
    // Hypergeometric C(D,L') C(C-1-D, N-1-L') / C(C-1, N-1), factored as
    //   C(D,L') * [C(C-1-D, r-L')/C(C-1, r-L')] * [C(C-1, r-L')/C(C-1, r)]
    // with r = N-1; every piece is overflow-free.
    let r = n as i64 - 1;
    let l = l_prime as i64;
    if l_prime > overlap || l > r {
        return Ok(0.0);
    }
    let misses = match choose_ratio(
        capacity as i64 - 1 - overlap as i64,
        capacity as i64 - 1,
        r - l,
    ) {
        Some(v) => v,
        None => return Ok(0.0),
    };
    // C(b, r-l)/C(b, r) = prod_{i=0}^{l-1} (r-i)/(b-r+i+1), b = C-1
    let b = capacity as i64 - 1;
    let mut shrink = 1.0f64;
    for i in 0..l {
        shrink *= (r - i) as f64 / (b - r + i + 1) as f64;
    }
    clamp_probability(choose_exact(overlap, l_prime) * misses * shrink)
}

/// Full marginal distribution of the per-subchannel interferer count L'.
pub fn interferer_distribution(
    params: &ScenarioParams,
) -> Result<InterfererDistribution, AnalyticsError> {
    match params.code {
        CodeKind::Steiner { capacity, overlap } => {
            let mut probabilities = Vec::with_capacity(overlap as usize + 1);
            let mut discarded = 0.0;
            for l_prime in 0..=overlap {
                let marg = marginalize_poisson(
                    |n| {
                        if l_prime > n - 1 {
                            Ok(0.0)
                        } else {
                            p_det_interferers_given_n(params, l_prime, n)
                        }
                    },
                    params.lambda,
                    DEFAULT_TAIL_EPS,
                    Some(capacity),
                )?;
                probabilities.push(marg.value);
                discarded = marg.discarded_tail_mass;
            }
            Ok(InterfererDistribution {
                probabilities,
                discarded_tail_mass: discarded,
            })
        }
        CodeKind::Dsa => {
            // truncation point of the Poisson fixes the largest reachable L'
            let n_max = poisson_truncation_point(params.lambda, DEFAULT_TAIL_EPS);
            let l_max = n_max.saturating_sub(1);
            let mut probabilities = Vec::with_capacity(l_max as usize + 1);
            let mut discarded = 0.0;
            for l_prime in 0..=l_max {
                let marg = marginalize_poisson(
                    |n| {
                        if l_prime > n - 1 {
                            Ok(0.0)
                        } else {
                            p_dsa_interferers_given_n(params.m, params.k, l_prime, n)
                        }
                    },
                    params.lambda,
                    DEFAULT_TAIL_EPS,
                    None,
                )?;
                probabilities.push(marg.value);
                discarded = marg.discarded_tail_mass;
            }
            Ok(InterfererDistribution {
                probabilities,
                discarded_tail_mass: discarded,
            })
        }
    }
}

/// Smallest N such that P(N-1 > n-1) < tail_eps.
fn poisson_truncation_point(lambda: f64, tail_eps: f64) -> u64 {
    if lambda == 0.0 {
        return 1;
    }
    let mut weight = (-lambda).exp();
    let mut mass = weight;
    let mut arrivals: u64 = 0;
    while 1.0 - mass >= tail_eps || (arrivals as f64) < lambda {
        arrivals += 1;
        weight *= lambda / arrivals as f64;
        mass += weight;
        if arrivals > 1_000_000 {
            break;
        }
    }
    arrivals + 1
}

/// Regularized lower incomplete gamma at integer shape: the CDF of the sum
/// of `shape` unit-mean exponentials evaluated at x.
pub fn erlang_cdf(shape: u64, x: f64) -> f64 {
    if shape == 0 {
        return 1.0;
    }
    if x <= 0.0 {
        return 0.0;
    }
    gamma_lr(shape as f64, x)
}

/// Collision-model outage: Gamma mixture over the surviving diversity.
pub fn collision_outage(
    params: &ScenarioParams,
    theta: f64,
    gamma_bar: f64,
) -> Result<f64, AnalyticsError> {
    let dist = diversity_distribution(params)?;
    collision_outage_mixture(&dist, theta, gamma_bar)
}

/// Outage of the Gamma mixture for an explicit diversity distribution.
/// The K'=0 component is certain outage for any positive threshold.
pub fn collision_outage_mixture(
    dist: &DiversityDistribution,
    theta: f64,
    gamma_bar: f64,
) -> Result<f64, AnalyticsError> {
    if !(theta > 0.0) || !(gamma_bar > 0.0) {
        return Err(AnalyticsError::InvalidParameters(format!(
            "need theta > 0 and gamma_bar > 0, got theta={theta}, gamma_bar={gamma_bar}"
        )));
    }
    let x = theta / gamma_bar;
    let mut out = 0.0;
    for (k_prime, &p) in dist.probabilities().iter().enumerate() {
        out += p * erlang_cdf(k_prime as u64, x);
    }
    Ok(out.clamp(0.0, 1.0))
}
