//! Brute-force enumerators for validating the closed forms at small scale.
//! Everything here counts integer events exhaustively and divides once at
//! the end, independent of the analytic code paths.

use thiserror::Error;

use crate::access_codes::SteinerCode;

#[derive(Debug, Error)]
pub enum OracleError {
    #[error("instance too large: enumeration space {space} exceeds limit {limit}")]
    InstanceTooLarge { space: u128, limit: u128 },
    #[error("invalid parameters: {0}")]
    InvalidParameters(String),
}

const ENUMERATION_LIMIT: u128 = 10_000_000;

fn binomial_u128(n: u64, r: u64) -> u128 {
    if r > n {
        return 0;
    }
    let r = r.min(n - r);
    let mut acc: u128 = 1;
    for i in 0..r {
        acc = acc * (n - i) as u128 / (i + 1) as u128;
    }
    acc
}

/// All K-subsets of [0, M) as bitmasks, lexicographic order.
fn all_subsets(m: u64, k: u64) -> Vec<u64> {
    let mut out = Vec::new();
    let mut idx: Vec<u64> = (0..k).collect();
    loop {
        out.push(idx.iter().fold(0u64, |acc, &i| acc | (1 << i)));
        // advance the combination odometer
        let mut pos = k as i64 - 1;
        while pos >= 0 && idx[pos as usize] == m - k + pos as u64 {
            pos -= 1;
        }
        if pos < 0 {
            break;
        }
        idx[pos as usize] += 1;
        for j in (pos as usize + 1)..k as usize {
            idx[j] = idx[j - 1] + 1;
        }
    }
    out
}

/// Odometer over (N-1) independent choices from `count` options.
struct TupleOdometer {
    digits: Vec<usize>,
    count: usize,
    done: bool,
}

impl TupleOdometer {
    fn new(positions: usize, count: usize) -> Self {
        Self {
            digits: vec![0; positions],
            count,
            done: count == 0 && positions > 0,
        }
    }

    fn next(&mut self) -> Option<&[usize]> {
        if self.done {
            return None;
        }
        Some(&self.digits)
    }

    fn advance(&mut self) {
        for d in self.digits.iter_mut() {
            *d += 1;
            if *d < self.count {
                return;
            }
            *d = 0;
        }
        self.done = true;
    }
}

/// Exact conditional distribution of surviving diversity K' for DSA with N
/// users, by iterating every (N-1)-tuple of interferer patterns.
pub fn enumerate_dsa_diversity(m: u64, k: u64, n: u64) -> Result<Vec<f64>, OracleError> {
    if k == 0 || k > m || n == 0 || m > 63 {
        return Err(OracleError::InvalidParameters(format!(
            "need 1 <= K <= M <= 63 and N >= 1, got M={m}, K={k}, N={n}"
        )));
    }
    let mut counts = vec![0u64; k as usize + 1];
    if n == 1 {
        let mut p = vec![0.0; k as usize + 1];
        p[k as usize] = 1.0;
        return Ok(p);
    }
    let subsets = all_subsets(m, k);
    let space = (subsets.len() as u128).pow((n - 1) as u32);
    if space > ENUMERATION_LIMIT {
        return Err(OracleError::InstanceTooLarge {
            space,
            limit: ENUMERATION_LIMIT,
        });
    }
    // by symmetry the tagged user's pattern can be fixed
    let u_mask = (1u64 << k) - 1;
    let mut odo = TupleOdometer::new((n - 1) as usize, subsets.len());
    while let Some(digits) = odo.next() {
        let mut occupied = 0u64;
        for &d in digits {
            occupied |= subsets[d];
        }
        let survivors = k - (occupied & u_mask).count_ones() as u64;
        counts[survivors as usize] += 1;
        odo.advance();
    }
    let total = space as f64;
    Ok(counts.iter().map(|&c| c as f64 / total).collect())
}

/// Exact conditional distribution of K' for a deterministic codebook with N
/// users: every choice of the tagged pattern and every (N-1)-subset of the
/// remaining patterns.
pub fn enumerate_steiner_diversity(code: &SteinerCode, n: u64) -> Result<Vec<f64>, OracleError> {
    let c = code.patterns().len() as u64;
    let k = code.k() as u64;
    if n == 0 || n > c {
        return Err(OracleError::InvalidParameters(format!(
            "need 1 <= N <= C, got N={n}, C={c}"
        )));
    }
    if code.m() > 63 {
        return Err(OracleError::InvalidParameters("M must be <= 63".into()));
    }
    let per_user = binomial_u128(c - 1, n - 1);
    let space = per_user * c as u128;
    if space > ENUMERATION_LIMIT {
        return Err(OracleError::InstanceTooLarge {
            space,
            limit: ENUMERATION_LIMIT,
        });
    }
    let masks: Vec<u64> = code
        .patterns()
        .iter()
        .map(|p| p.subchannels().iter().fold(0u64, |acc, &s| acc | (1 << s)))
        .collect();

    let mut counts = vec![0u64; k as usize + 1];
    for (u, &u_mask) in masks.iter().enumerate() {
        let others: Vec<u64> = masks
            .iter()
            .enumerate()
            .filter(|&(i, _)| i != u)
            .map(|(_, &mask)| mask)
            .collect();
        for_each_combination(others.len(), (n - 1) as usize, |chosen| {
            let mut occupied = 0u64;
            for &i in chosen {
                occupied |= others[i];
            }
            let survivors = k - (occupied & u_mask).count_ones() as u64;
            counts[survivors as usize] += 1;
        });
    }
    let total = space as f64;
    Ok(counts.iter().map(|&c| c as f64 / total).collect())
}

/// Exact per-subchannel interferer distribution for DSA with N users:
/// counts interferers covering one fixed subchannel of the tagged pattern.
pub fn enumerate_dsa_interferers(m: u64, k: u64, n: u64) -> Result<Vec<f64>, OracleError> {
    if k == 0 || k > m || n == 0 || m > 63 {
        return Err(OracleError::InvalidParameters(format!(
            "need 1 <= K <= M <= 63 and N >= 1, got M={m}, K={k}, N={n}"
        )));
    }
    if n == 1 {
        return Ok(vec![1.0]);
    }
    let subsets = all_subsets(m, k);
    let space = (subsets.len() as u128).pow((n - 1) as u32);
    if space > ENUMERATION_LIMIT {
        return Err(OracleError::InstanceTooLarge {
            space,
            limit: ENUMERATION_LIMIT,
        });
    }
    // the tagged user occupies subchannel 0 by symmetry
    let mut counts = vec![0u64; n as usize];
    let mut odo = TupleOdometer::new((n - 1) as usize, subsets.len());
    while let Some(digits) = odo.next() {
        let hits = digits.iter().filter(|&&d| subsets[d] & 1 != 0).count();
        counts[hits] += 1;
        odo.advance();
    }
    let total = space as f64;
    Ok(counts.iter().map(|&c| c as f64 / total).collect())
}

/// Exact per-subchannel interferer distribution for a deterministic codebook
/// with N users, averaged over the tagged pattern and its subchannels.
pub fn enumerate_steiner_interferers(code: &SteinerCode, n: u64) -> Result<Vec<f64>, OracleError> {
    let c = code.patterns().len() as u64;
    let k = code.k() as u64;
    if n == 0 || n > c {
        return Err(OracleError::InvalidParameters(format!(
            "need 1 <= N <= C, got N={n}, C={c}"
        )));
    }
    let per_case = binomial_u128(c - 1, n - 1);
    let space = per_case * (c * k) as u128;
    if space > ENUMERATION_LIMIT {
        return Err(OracleError::InstanceTooLarge {
            space,
            limit: ENUMERATION_LIMIT,
        });
    }
    let l_max = (n - 1).min(code.overlap_bound() as u64) as usize;
    let mut counts = vec![0u64; l_max + 1];
    for (u, pattern) in code.patterns().iter().enumerate() {
        let others: Vec<&crate::access_codes::AccessPattern> = code
            .patterns()
            .iter()
            .enumerate()
            .filter(|&(i, _)| i != u)
            .map(|(_, p)| p)
            .collect();
        for &s in pattern.subchannels() {
            for_each_combination(others.len(), (n - 1) as usize, |chosen| {
                let hits = chosen.iter().filter(|&&i| others[i].contains(s)).count();
                counts[hits] += 1;
            });
        }
    }
    let total = space as f64;
    Ok(counts.iter().map(|&c| c as f64 / total).collect())
}

/// Visit every r-combination of [0, n) in lexicographic order.
fn for_each_combination<F: FnMut(&[usize])>(n: usize, r: usize, mut visit: F) {
    if r > n {
        return;
    }
    if r == 0 {
        visit(&[]);
        return;
    }
    let mut idx: Vec<usize> = (0..r).collect();
    loop {
        visit(&idx);
        let mut pos = r as i64 - 1;
        while pos >= 0 && idx[pos as usize] == n - r + pos as usize {
            pos -= 1;
        }
        if pos < 0 {
            break;
        }
        idx[pos as usize] += 1;
        for j in (pos as usize + 1)..r {
            idx[j] = idx[j - 1] + 1;
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::access_codes::build_steiner_code;

    #[test]
    fn dsa_diversity_tiny_cases() {
        let p = enumerate_dsa_diversity(3, 2, 2).unwrap();
        assert!((p[0] - 1.0 / 3.0).abs() < 1e-14);
        assert!((p[1] - 2.0 / 3.0).abs() < 1e-14);
        assert_eq!(p[2], 0.0);

        let p = enumerate_dsa_diversity(2, 1, 2).unwrap();
        assert!((p[0] - 0.5).abs() < 1e-14);
        assert!((p[1] - 0.5).abs() < 1e-14);

        let p = enumerate_dsa_diversity(8, 3, 1).unwrap();
        assert_eq!(p, vec![0.0, 0.0, 0.0, 1.0]);
    }

    #[test]
    fn fano_every_line_pair_meets_once() {
        let fano = build_steiner_code(7, 3).unwrap();
        let p = enumerate_steiner_diversity(&fano, 2).unwrap();
        assert_eq!(p[3], 0.0);
        assert!((p[2] - 1.0).abs() < 1e-14);
        let p = enumerate_steiner_diversity(&fano, 1).unwrap();
        assert_eq!(p[3], 1.0);
    }

    #[test]
    fn steiner_25_4_two_users() {
        let code = build_steiner_code(25, 4).unwrap();
        let p = enumerate_steiner_diversity(&code, 2).unwrap();
        assert!((p[3] - 28.0 / 49.0).abs() < 1e-14);
        assert!((p[4] - 21.0 / 49.0).abs() < 1e-14);
        assert_eq!(p[0], 0.0);
        assert_eq!(p[1], 0.0);
        assert_eq!(p[2], 0.0);
    }

    #[test]
    fn interferer_tiny_cases() {
        let fano = build_steiner_code(7, 3).unwrap();
        let p = enumerate_steiner_interferers(&fano, 2).unwrap();
        assert!((p[1] - 2.0 / 6.0).abs() < 1e-14);
        assert!((p[0] - 4.0 / 6.0).abs() < 1e-14);

        let p = enumerate_dsa_interferers(2, 1, 2).unwrap();
        assert!((p[0] - 0.5).abs() < 1e-14);
        assert!((p[1] - 0.5).abs() < 1e-14);

        let p = enumerate_dsa_interferers(6, 2, 1).unwrap();
        assert_eq!(p, vec![1.0]);
    }

    #[test]
    fn guard_rejects_large_instances() {
        assert!(matches!(
            enumerate_dsa_diversity(20, 5, 6),
            Err(OracleError::InstanceTooLarge { .. })
        ));
    }
}
