//! Repetition-pattern codebooks: random DSA patterns and deterministic
//! Steiner S(2,K,M) access codes.

use std::fmt;
use std::fs;
use std::io::{self, Write};
use std::path::Path;

use rand::Rng;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum CodeError {
    #[error("invalid parameters: need 1 <= K <= M, got M={m}, K={k}")]
    InvalidParameters { m: usize, k: usize },
    #[error("inadmissible parameters for S(2,{k},{m}): {reason}")]
    InadmissibleParameters { m: usize, k: usize, reason: String },
    #[error("no S(2,{k},{m}) construction found")]
    UnsupportedParameters { m: usize, k: usize },
    #[error("population exceeded: requested {requested} patterns from a code of capacity {capacity}")]
    PopulationExceeded { requested: usize, capacity: usize },
    #[error("parse error at line {line}: {message}")]
    Parse { line: usize, message: String },
    #[error(transparent)]
    Io(#[from] io::Error),
}

/// One user's repetition positions: K distinct subchannels out of M.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct AccessPattern {
    subchannels: Vec<usize>,
    m: usize,
}

impl AccessPattern {
    pub fn new(subchannels: impl IntoIterator<Item = usize>, m: usize) -> Result<Self, CodeError> {
        let mut subchannels: Vec<usize> = subchannels.into_iter().collect();
        subchannels.sort_unstable();
        let k = subchannels.len();
        let distinct = {
            let mut s = subchannels.clone();
            s.dedup();
            s.len()
        };
        if k == 0 || k > m || distinct != k || subchannels.iter().any(|&s| s >= m) {
            return Err(CodeError::InvalidParameters { m, k });
        }
        Ok(Self { subchannels, m })
    }

    pub fn subchannels(&self) -> &[usize] {
        &self.subchannels
    }

    pub fn k(&self) -> usize {
        self.subchannels.len()
    }

    pub fn m(&self) -> usize {
        self.m
    }

    pub fn contains(&self, subchannel: usize) -> bool {
        self.subchannels.binary_search(&subchannel).is_ok()
    }

    /// Number of subchannels shared with another pattern.
    pub fn overlap(&self, other: &AccessPattern) -> usize {
        self.subchannels
            .iter()
            .filter(|&&s| other.contains(s))
            .count()
    }
}

impl fmt::Display for AccessPattern {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let mut first = true;
        for s in &self.subchannels {
            if !first {
                write!(f, " ")?;
            }
            write!(f, "{s}")?;
            first = false;
        }
        Ok(())
    }
}

/// Draw one K-subset of the M subchannels uniformly at random.
///
/// Successive calls are independent; DSA users select their patterns with
/// replacement across the population.
pub fn sample_dsa_pattern<R: Rng + ?Sized>(
    m: usize,
    k: usize,
    rng: &mut R,
) -> Result<AccessPattern, CodeError> {
    if k == 0 || k > m {
        return Err(CodeError::InvalidParameters { m, k });
    }
    let mut subchannels = rand::seq::index::sample(rng, m, k).into_vec();
    subchannels.sort_unstable();
    Ok(AccessPattern { subchannels, m })
}

/// Capacity C = M(M-1)/(K(K-1)) of an S(2,K,M) design, if the division is exact.
pub fn steiner_capacity(m: usize, k: usize) -> Option<usize> {
    if k < 2 || k > m {
        return None;
    }
    let num = m * (m - 1);
    let den = k * (k - 1);
    (num % den == 0).then(|| num / den)
}

/// Per-point overlap bound D = (M-K)/(K-1) of an S(2,K,M) design, if exact.
pub fn steiner_overlap(m: usize, k: usize) -> Option<usize> {
    if k < 2 || k > m {
        return None;
    }
    ((m - k) % (k - 1) == 0).then(|| (m - k) / (k - 1))
}

/// A verified S(2,K,M) codebook of C patterns.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SteinerCode {
    patterns: Vec<AccessPattern>,
    m: usize,
    k: usize,
    capacity: usize,
    overlap: usize,
}

impl SteinerCode {
    /// Wrap a pattern list without verifying the design properties.
    /// Callers should run [`verify_steiner`] on the result.
    pub fn from_patterns(
        patterns: Vec<AccessPattern>,
        m: usize,
        k: usize,
    ) -> Result<Self, CodeError> {
        let capacity = steiner_capacity(m, k).ok_or_else(|| CodeError::InadmissibleParameters {
            m,
            k,
            reason: "K(K-1) must divide M(M-1) and K must be at least 2".into(),
        })?;
        let overlap = steiner_overlap(m, k).ok_or_else(|| CodeError::InadmissibleParameters {
            m,
            k,
            reason: "(K-1) must divide (M-K)".into(),
        })?;
        Ok(Self {
            patterns,
            m,
            k,
            capacity,
            overlap,
        })
    }

    pub fn patterns(&self) -> &[AccessPattern] {
        &self.patterns
    }

    pub fn m(&self) -> usize {
        self.m
    }

    pub fn k(&self) -> usize {
        self.k
    }

    /// Design strength t; always 2 here.
    pub fn t(&self) -> usize {
        2
    }

    /// Codebook capacity C.
    pub fn capacity(&self) -> usize {
        self.capacity
    }

    /// Per-point overlap bound D.
    pub fn overlap_bound(&self) -> usize {
        self.overlap
    }
}

/// Construct the S(2,K,M) code for admissible (M,K).
///
/// Tries a cyclic difference family over Z_M first (base blocks whose
/// developments tile all pair differences), then falls back to a
/// backtracking pair-coverage search for small M. Output is sorted
/// lexicographically, so the construction is deterministic.
pub fn build_steiner_code(m: usize, k: usize) -> Result<SteinerCode, CodeError> {
    if k == 0 || k > m {
        return Err(CodeError::InvalidParameters { m, k });
    }
    let capacity = steiner_capacity(m, k).ok_or_else(|| CodeError::InadmissibleParameters {
        m,
        k,
        reason: "K(K-1) must divide M(M-1) and K must be at least 2".into(),
    })?;
    let overlap = steiner_overlap(m, k).ok_or_else(|| CodeError::InadmissibleParameters {
        m,
        k,
        reason: "(K-1) must divide (M-K)".into(),
    })?;

    let blocks = difference_family_blocks(m, k)
        .or_else(|| square_difference_family_blocks(m, k))
        .or_else(|| backtrack_blocks(m, k, capacity))
        .ok_or(CodeError::UnsupportedParameters { m, k })?;

    let mut patterns: Vec<AccessPattern> = blocks
        .into_iter()
        .map(|b| AccessPattern::new(b, m).expect("constructed block is a valid pattern"))
        .collect();
    patterns.sort();
    patterns.dedup();

    let code = SteinerCode {
        patterns,
        m,
        k,
        capacity,
        overlap,
    };
    let report = verify_steiner(&code);
    if !report.is_valid() {
        return Err(CodeError::UnsupportedParameters { m, k });
    }
    Ok(code)
}

/// Abelian group Z_a x Z_b with elements encoded as x*b + y. The cyclic
/// group Z_M is the a = 1 case.
#[derive(Clone, Copy)]
struct AbelianGroup {
    a: usize,
    b: usize,
}

impl AbelianGroup {
    fn cyclic(m: usize) -> Self {
        AbelianGroup { a: 1, b: m }
    }

    fn order(self) -> usize {
        self.a * self.b
    }

    fn add(self, u: usize, v: usize) -> usize {
        ((u / self.b + v / self.b) % self.a) * self.b + (u % self.b + v % self.b) % self.b
    }

    fn diff(self, u: usize, v: usize) -> usize {
        ((u / self.b + self.a - v / self.b) % self.a) * self.b
            + (u % self.b + self.b - v % self.b) % self.b
    }
}

/// Search for base blocks over Z_M whose pairwise differences cover
/// Z_M \ {0} exactly once, then develop each by all M translations.
fn difference_family_blocks(m: usize, k: usize) -> Option<Vec<Vec<usize>>> {
    group_difference_family_blocks(AbelianGroup::cyclic(m), k)
}

/// Same search over Z_p x Z_p when M = p^2; some admissible parameter
/// sets (e.g. M = 25, K = 4) admit a difference family over the
/// elementary abelian group but not over the cyclic one.
fn square_difference_family_blocks(m: usize, k: usize) -> Option<Vec<Vec<usize>>> {
    let p = (m as f64).sqrt().round() as usize;
    if p < 2 || p * p != m {
        return None;
    }
    group_difference_family_blocks(AbelianGroup { a: p, b: p }, k)
}

fn group_difference_family_blocks(group: AbelianGroup, k: usize) -> Option<Vec<Vec<usize>>> {
    let m = group.order();
    if k < 2 || m < 3 {
        return None;
    }
    let per_block = k * (k - 1);
    if (m - 1) % per_block != 0 {
        return None;
    }
    let family_size = (m - 1) / per_block;

    let mut covered = vec![false; m]; // covered[d] for nonzero differences d
    let mut bases: Vec<Vec<usize>> = Vec::new();
    let mut budget: u64 = 5_000_000;
    if !df_search(group, k, family_size, &mut covered, &mut bases, &mut budget) {
        return None;
    }

    let mut blocks = Vec::with_capacity(family_size * m);
    for base in &bases {
        for t in 0..m {
            let mut b: Vec<usize> = base.iter().map(|&x| group.add(x, t)).collect();
            b.sort_unstable();
            blocks.push(b);
        }
    }
    Some(blocks)
}

fn df_search(
    group: AbelianGroup,
    k: usize,
    family_size: usize,
    covered: &mut [bool],
    bases: &mut Vec<Vec<usize>>,
    budget: &mut u64,
) -> bool {
    if bases.len() == family_size {
        return covered[1..].iter().all(|&c| c);
    }
    let mut block = vec![0usize];
    df_extend(group, k, family_size, covered, bases, &mut block, 1, budget)
}

#[allow(clippy::too_many_arguments)]
fn df_extend(
    group: AbelianGroup,
    k: usize,
    family_size: usize,
    covered: &mut [bool],
    bases: &mut Vec<Vec<usize>>,
    block: &mut Vec<usize>,
    start: usize,
    budget: &mut u64,
) -> bool {
    if *budget == 0 {
        return false;
    }
    *budget -= 1;
    if block.len() == k {
        bases.push(block.clone());
        if df_search(group, k, family_size, covered, bases, budget) {
            return true;
        }
        bases.pop();
        return false;
    }
    for cand in start..group.order() {
        // differences the candidate introduces against the current block
        let mut new_diffs = Vec::with_capacity(2 * block.len());
        let mut ok = true;
        for &x in block.iter() {
            let d = group.diff(cand, x);
            let d2 = group.diff(x, cand);
            if covered[d] || covered[d2] || new_diffs.contains(&d) || new_diffs.contains(&d2) {
                ok = false;
                break;
            }
            new_diffs.push(d);
            if d2 != d {
                new_diffs.push(d2);
            }
        }
        if !ok {
            continue;
        }
        for &d in &new_diffs {
            covered[d] = true;
        }
        block.push(cand);
        if df_extend(group, k, family_size, covered, bases, block, cand + 1, budget) {
            return true;
        }
        block.pop();
        for &d in &new_diffs {
            covered[d] = false;
        }
    }
    false
}

/// Exhaustive pair-coverage backtracking for small parameter sets,
/// e.g. S(2,3,9) which admits no cyclic difference family.
fn backtrack_blocks(m: usize, k: usize, capacity: usize) -> Option<Vec<Vec<usize>>> {
    if m > 27 || capacity > 200 {
        return None;
    }
    let mut covered = vec![vec![false; m]; m];
    let mut blocks: Vec<Vec<usize>> = Vec::new();
    let mut budget: u64 = 20_000_000;
    if bt_search(m, k, capacity, &mut covered, &mut blocks, &mut budget) {
        Some(blocks)
    } else {
        None
    }
}

fn bt_search(
    m: usize,
    k: usize,
    capacity: usize,
    covered: &mut Vec<Vec<bool>>,
    blocks: &mut Vec<Vec<usize>>,
    budget: &mut u64,
) -> bool {
    // find the lexicographically smallest uncovered pair
    let mut target = None;
    'outer: for p in 0..m {
        for q in (p + 1)..m {
            if !covered[p][q] {
                target = Some((p, q));
                break 'outer;
            }
        }
    }
    let (p, q) = match target {
        None => return blocks.len() == capacity,
        Some(t) => t,
    };
    if blocks.len() == capacity {
        return false;
    }
    let mut block = vec![p, q];
    bt_extend(m, k, capacity, covered, blocks, &mut block, q + 1, budget)
}

fn bt_extend(
    m: usize,
    k: usize,
    capacity: usize,
    covered: &mut Vec<Vec<bool>>,
    blocks: &mut Vec<Vec<usize>>,
    block: &mut Vec<usize>,
    start: usize,
    budget: &mut u64,
) -> bool {
    if *budget == 0 {
        return false;
    }
    *budget -= 1;
    if block.len() == k {
        for i in 0..k {
            for j in (i + 1)..k {
                covered[block[i]][block[j]] = true;
            }
        }
        blocks.push(block.clone());
        if bt_search(m, k, capacity, covered, blocks, budget) {
            return true;
        }
        blocks.pop();
        for i in 0..k {
            for j in (i + 1)..k {
                covered[block[i]][block[j]] = false;
            }
        }
        return false;
    }
    for cand in start..m {
        if block.iter().any(|&x| covered[x][cand]) {
            continue;
        }
        block.push(cand);
        if bt_extend(m, k, capacity, covered, blocks, block, cand + 1, budget) {
            return true;
        }
        block.pop();
    }
    false
}

/// A single failed design invariant.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Violation {
    MalformedPattern { index: usize, message: String },
    WrongCapacity { expected: usize, actual: usize },
    PairCoverage { a: usize, b: usize, count: usize },
    PointReplication {
        pattern: usize,
        subchannel: usize,
        other_blocks: usize,
        expected: usize,
    },
    ExcessOverlap { first: usize, second: usize, shared: usize },
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Violation::MalformedPattern { index, message } => {
                write!(f, "pattern {index} is malformed: {message}")
            }
            Violation::WrongCapacity { expected, actual } => {
                write!(f, "wrong capacity: expected C={expected}, found {actual} patterns")
            }
            Violation::PairCoverage { a, b, count } => {
                write!(f, "pair ({a},{b}) covered {count} times, expected exactly 1")
            }
            Violation::PointReplication {
                pattern,
                subchannel,
                other_blocks,
                expected,
            } => write!(
                f,
                "pattern {pattern}, subchannel {subchannel}: {other_blocks} other blocks contain it, expected D={expected}"
            ),
            Violation::ExcessOverlap {
                first,
                second,
                shared,
            } => write!(
                f,
                "patterns {first} and {second} share {shared} subchannels, expected at most 1"
            ),
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct VerificationReport {
    violations: Vec<Violation>,
}

impl VerificationReport {
    pub fn is_valid(&self) -> bool {
        self.violations.is_empty()
    }

    pub fn violations(&self) -> &[Violation] {
        &self.violations
    }
}

impl fmt::Display for VerificationReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.violations.is_empty() {
            writeln!(f, "valid: all design invariants hold")
        } else {
            for v in &self.violations {
                writeln!(f, "{v}")?;
            }
            Ok(())
        }
    }
}

/// Check every S(2,K,M) invariant and list all failures.
pub fn verify_steiner(code: &SteinerCode) -> VerificationReport {
    let mut violations = Vec::new();
    let m = code.m;
    let k = code.k;
    let c = code.capacity;
    let d = code.overlap;

    for (i, p) in code.patterns.iter().enumerate() {
        if p.m() != m || p.k() != k {
            violations.push(Violation::MalformedPattern {
                index: i,
                message: format!("expected K={k} indices below M={m}, got {} below {}", p.k(), p.m()),
            });
        }
    }

    if code.patterns.len() != c {
        violations.push(Violation::WrongCapacity {
            expected: c,
            actual: code.patterns.len(),
        });
    }

    // pair coverage
    let mut pair_count = vec![vec![0usize; m]; m];
    for p in &code.patterns {
        let s = p.subchannels();
        for i in 0..s.len() {
            for j in (i + 1)..s.len() {
                if s[i] < m && s[j] < m {
                    pair_count[s[i]][s[j]] += 1;
                }
            }
        }
    }
    for a in 0..m {
        for b in (a + 1)..m {
            if pair_count[a][b] != 1 {
                violations.push(Violation::PairCoverage {
                    a,
                    b,
                    count: pair_count[a][b],
                });
            }
        }
    }

    // per-point replication relative to each pattern
    let mut point_count = vec![0usize; m];
    for p in &code.patterns {
        for &s in p.subchannels() {
            if s < m {
                point_count[s] += 1;
            }
        }
    }
    for (i, p) in code.patterns.iter().enumerate() {
        for &s in p.subchannels() {
            if s < m {
                let others = point_count[s] - 1;
                if others != d {
                    violations.push(Violation::PointReplication {
                        pattern: i,
                        subchannel: s,
                        other_blocks: others,
                        expected: d,
                    });
                }
            }
        }
    }

    // pairwise overlap bound
    for i in 0..code.patterns.len() {
        for j in (i + 1)..code.patterns.len() {
            let shared = code.patterns[i].overlap(&code.patterns[j]);
            if shared > 1 {
                violations.push(Violation::ExcessOverlap {
                    first: i,
                    second: j,
                    shared,
                });
            }
        }
    }

    VerificationReport { violations }
}

/// Draw N distinct patterns uniformly without replacement from the codebook.
pub fn allocate_steiner_patterns<R: Rng + ?Sized>(
    code: &SteinerCode,
    n: usize,
    rng: &mut R,
) -> Result<Vec<AccessPattern>, CodeError> {
    if n == 0 || n > code.patterns.len() {
        return Err(CodeError::PopulationExceeded {
            requested: n,
            capacity: code.patterns.len(),
        });
    }
    let idx = rand::seq::index::sample(rng, code.patterns.len(), n);
    Ok(idx.iter().map(|i| code.patterns[i].clone()).collect())
}

/// Serialize a code in the text format:
/// header `steiner t=2 M=<M> K=<K> C=<C>`, then C sorted rows of K indices.
pub fn write_code_to<W: Write>(w: &mut W, code: &SteinerCode) -> Result<(), CodeError> {
    writeln!(
        w,
        "steiner t=2 M={} K={} C={}",
        code.m, code.k, code.capacity
    )?;
    for p in &code.patterns {
        writeln!(w, "{p}")?;
    }
    Ok(())
}

pub fn write_code<P: AsRef<Path>>(path: P, code: &SteinerCode) -> Result<(), CodeError> {
    let mut buf = Vec::new();
    write_code_to(&mut buf, code)?;
    fs::write(path, buf)?;
    Ok(())
}

/// Parse a code file. Structural problems are parse errors; design-property
/// failures are returned in the verification report alongside the code.
pub fn parse_code(text: &str) -> Result<(SteinerCode, VerificationReport), CodeError> {
    let mut lines = text.lines().enumerate();
    let (_, header) = lines.next().ok_or(CodeError::Parse {
        line: 1,
        message: "empty file, expected header".into(),
    })?;
    let tokens: Vec<&str> = header.split_whitespace().collect();
    if tokens.len() != 5 || tokens[0] != "steiner" || tokens[1] != "t=2" {
        return Err(CodeError::Parse {
            line: 1,
            message: format!("expected header 'steiner t=2 M=<M> K=<K> C=<C>', got '{header}'"),
        });
    }
    let field = |tok: &str, name: &str| -> Result<usize, CodeError> {
        tok.strip_prefix(&format!("{name}="))
            .and_then(|v| v.parse::<usize>().ok())
            .ok_or_else(|| CodeError::Parse {
                line: 1,
                message: format!("bad header field '{tok}', expected {name}=<count>"),
            })
    };
    let m = field(tokens[2], "M")?;
    let k = field(tokens[3], "K")?;
    let c = field(tokens[4], "C")?;
    let expected_c = steiner_capacity(m, k).ok_or_else(|| CodeError::Parse {
        line: 1,
        message: format!("inadmissible header parameters M={m}, K={k}"),
    })?;
    if c != expected_c {
        return Err(CodeError::Parse {
            line: 1,
            message: format!("header declares C={c} but M(M-1)/(K(K-1)) = {expected_c}"),
        });
    }

    let mut patterns = Vec::new();
    for (idx, line) in lines {
        let lineno = idx + 1;
        if line.trim().is_empty() {
            continue;
        }
        let indices: Result<Vec<usize>, _> = line
            .split_whitespace()
            .map(|t| t.parse::<usize>())
            .collect();
        let indices = indices.map_err(|e| CodeError::Parse {
            line: lineno,
            message: format!("bad index: {e}"),
        })?;
        if indices.len() != k {
            return Err(CodeError::Parse {
                line: lineno,
                message: format!("expected {k} indices, found {}", indices.len()),
            });
        }
        let pattern = AccessPattern::new(indices, m).map_err(|_| CodeError::Parse {
            line: lineno,
            message: format!("indices must be {k} distinct values below {m}"),
        })?;
        patterns.push(pattern);
    }

    let code = SteinerCode::from_patterns(patterns, m, k).map_err(|e| CodeError::Parse {
        line: 1,
        message: e.to_string(),
    })?;
    let report = verify_steiner(&code);
    Ok((code, report))
}

pub fn read_code<P: AsRef<Path>>(path: P) -> Result<(SteinerCode, VerificationReport), CodeError> {
    let text = fs::read_to_string(path)?;
    parse_code(&text)
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn rng(seed: u64) -> ChaCha8Rng {
        ChaCha8Rng::seed_from_u64(seed)
    }

    #[test]
    fn dsa_only_subset_of_two() {
        let mut r = rng(1);
        for _ in 0..20 {
            let p = sample_dsa_pattern(2, 2, &mut r).unwrap();
            assert_eq!(p.subchannels(), &[0, 1]);
        }
    }

    #[test]
    fn dsa_rejects_bad_parameters() {
        let mut r = rng(2);
        assert!(matches!(
            sample_dsa_pattern(3, 4, &mut r),
            Err(CodeError::InvalidParameters { .. })
        ));
        assert!(matches!(
            sample_dsa_pattern(3, 0, &mut r),
            Err(CodeError::InvalidParameters { .. })
        ));
    }

    #[test]
    fn dsa_three_choose_two_frequencies() {
        // each of {0,1},{0,2},{1,2} should appear with frequency 1/3 +- 3 sigma
        let mut r = rng(3);
        let n = 100_000usize;
        let mut counts = [0usize; 3];
        for _ in 0..n {
            let p = sample_dsa_pattern(3, 2, &mut r).unwrap();
            let id = match p.subchannels() {
                [0, 1] => 0,
                [0, 2] => 1,
                [1, 2] => 2,
                other => panic!("unexpected pattern {other:?}"),
            };
            counts[id] += 1;
        }
        let p = 1.0 / 3.0;
        let sigma = (p * (1.0 - p) / n as f64).sqrt();
        for &c in &counts {
            let freq = c as f64 / n as f64;
            assert!((freq - p).abs() < 3.0 * sigma, "freq {freq} too far from 1/3");
        }
    }

    /// Rank of a sorted K-subset in colexicographic order.
    fn subset_rank(subset: &[usize]) -> usize {
        subset
            .iter()
            .enumerate()
            .map(|(i, &s)| binomial(s, i + 1))
            .sum()
    }

    fn binomial(n: usize, r: usize) -> usize {
        if r > n {
            return 0;
        }
        let mut acc = 1usize;
        for i in 0..r.min(n - r) {
            acc = acc * (n - i) / (i + 1);
        }
        acc
    }

    #[test]
    fn dsa_uniform_over_all_subsets_chi_square() {
        // chi-square uniformity over all C(25,4)=12650 subsets at 1e6 draws
        let cells = binomial(25, 4);
        assert_eq!(cells, 12650);
        let mut counts = vec![0u32; cells];
        let mut r = rng(4);
        let n = 1_000_000usize;
        for _ in 0..n {
            let p = sample_dsa_pattern(25, 4, &mut r).unwrap();
            counts[subset_rank(p.subchannels())] += 1;
        }
        let expected = n as f64 / cells as f64;
        let chi2: f64 = counts
            .iter()
            .map(|&c| {
                let d = c as f64 - expected;
                d * d / expected
            })
            .sum();
        // critical value ~ dof + 4*sqrt(2*dof), far beyond the 0.1% quantile
        let dof = (cells - 1) as f64;
        let critical = dof + 4.0 * (2.0 * dof).sqrt();
        assert!(chi2 < critical, "chi2 {chi2} exceeds {critical}");
    }

    #[test]
    fn dsa_marginal_occupancy() {
        // each subchannel occupied with probability K/M
        let (m, k, n) = (25usize, 4usize, 100_000usize);
        let mut counts = vec![0usize; m];
        let mut r = rng(5);
        for _ in 0..n {
            let p = sample_dsa_pattern(m, k, &mut r).unwrap();
            for &s in p.subchannels() {
                counts[s] += 1;
            }
        }
        let p = k as f64 / m as f64;
        let sigma = (p * (1.0 - p) / n as f64).sqrt();
        for &c in &counts {
            let freq = c as f64 / n as f64;
            assert!((freq - p).abs() < 5.0 * sigma);
        }
    }

    #[test]
    fn builds_2_4_25() {
        let code = build_steiner_code(25, 4).unwrap();
        assert_eq!(code.capacity(), 50);
        assert_eq!(code.overlap_bound(), 7);
        assert_eq!(code.patterns().len(), 50);
        assert!(verify_steiner(&code).is_valid());
        // deterministic output
        let again = build_steiner_code(25, 4).unwrap();
        assert_eq!(code, again);
    }

    #[test]
    fn builds_fano_plane() {
        let code = build_steiner_code(7, 3).unwrap();
        assert_eq!(code.capacity(), 7);
        assert_eq!(code.overlap_bound(), 2);
        assert!(verify_steiner(&code).is_valid());
    }

    #[test]
    fn builds_2_3_9() {
        let code = build_steiner_code(9, 3).unwrap();
        assert_eq!(code.capacity(), 12);
        assert_eq!(code.overlap_bound(), 3);
        assert!(verify_steiner(&code).is_valid());
    }

    #[test]
    fn rejects_inadmissible_parameters() {
        assert!(matches!(
            build_steiner_code(8, 3),
            Err(CodeError::InadmissibleParameters { .. })
        ));
        assert!(matches!(
            build_steiner_code(10, 4),
            Err(CodeError::InadmissibleParameters { .. })
        ));
    }

    #[test]
    fn verify_flags_duplicated_block() {
        let code = build_steiner_code(25, 4).unwrap();
        let mut patterns = code.patterns().to_vec();
        patterns.push(patterns[0].clone());
        let broken = SteinerCode::from_patterns(patterns, 25, 4).unwrap();
        let report = verify_steiner(&broken);
        assert!(!report.is_valid());
        let doubly_covered = report
            .violations()
            .iter()
            .filter(|v| matches!(v, Violation::PairCoverage { count: 2, .. }))
            .count();
        assert_eq!(doubly_covered, 6, "a duplicated 4-set double-covers C(4,2)=6 pairs");
        assert!(report
            .violations()
            .iter()
            .any(|v| matches!(v, Violation::WrongCapacity { .. })));
    }

    #[test]
    fn verify_flags_empty_code() {
        let empty = SteinerCode::from_patterns(Vec::new(), 7, 3).unwrap();
        let report = verify_steiner(&empty);
        let uncovered = report
            .violations()
            .iter()
            .filter(|v| matches!(v, Violation::PairCoverage { count: 0, .. }))
            .count();
        assert_eq!(uncovered, 21);
    }

    #[test]
    fn allocate_all_and_too_many() {
        let code = build_steiner_code(25, 4).unwrap();
        let mut r = rng(6);
        let all = allocate_steiner_patterns(&code, 50, &mut r).unwrap();
        let mut sorted = all.clone();
        sorted.sort();
        sorted.dedup();
        assert_eq!(sorted.len(), 50);
        assert!(matches!(
            allocate_steiner_patterns(&code, 51, &mut r),
            Err(CodeError::PopulationExceeded { .. })
        ));
    }

    #[test]
    fn allocate_pairs_uniform() {
        // each unordered pattern pair with probability 1/C(50,2)
        let code = build_steiner_code(25, 4).unwrap();
        let mut r = rng(7);
        let cells = binomial(50, 2);
        let mut counts = vec![0u32; cells];
        let index_of = |a: usize, b: usize| -> usize {
            let (a, b) = if a < b { (a, b) } else { (b, a) };
            // colex rank of the pair {a, b}
            b * (b - 1) / 2 + a
        };
        let trials = 1_000_000usize;
        let pos = |p: &AccessPattern| code.patterns().iter().position(|q| q == p).unwrap();
        for _ in 0..trials {
            let pair = allocate_steiner_patterns(&code, 2, &mut r).unwrap();
            counts[index_of(pos(&pair[0]), pos(&pair[1]))] += 1;
        }
        let expected = trials as f64 / cells as f64;
        let chi2: f64 = counts
            .iter()
            .map(|&c| {
                let d = c as f64 - expected;
                d * d / expected
            })
            .sum();
        let dof = (cells - 1) as f64;
        assert!(chi2 < dof + 4.0 * (2.0 * dof).sqrt());
    }

    #[test]
    fn allocation_never_duplicates() {
        let code = build_steiner_code(7, 3).unwrap();
        let mut r = rng(8);
        for _ in 0..2_000 {
            let picked = allocate_steiner_patterns(&code, 4, &mut r).unwrap();
            let mut s = picked.clone();
            s.sort();
            s.dedup();
            assert_eq!(s.len(), picked.len());
        }
    }

    #[test]
    fn code_file_round_trip() {
        let code = build_steiner_code(25, 4).unwrap();
        let mut buf = Vec::new();
        write_code_to(&mut buf, &code).unwrap();
        let text = String::from_utf8(buf).unwrap();
        let (parsed, report) = parse_code(&text).unwrap();
        assert!(report.is_valid());
        assert_eq!(parsed, code);
    }

    #[test]
    fn parse_error_names_row() {
        let text = "steiner t=2 M=7 K=3 C=7\n0 1 3\n0 2\n";
        match parse_code(text) {
            Err(CodeError::Parse { line, .. }) => assert_eq!(line, 3),
            other => panic!("expected parse error, got {other:?}"),
        }
    }

    #[test]
    fn hand_edited_file_fails_verification() {
        let code = build_steiner_code(7, 3).unwrap();
        let mut buf = Vec::new();
        write_code_to(&mut buf, &code).unwrap();
        let mut text = String::from_utf8(buf).unwrap();
        // duplicate the second data row over the third, breaking pair coverage
        let lines: Vec<&str> = text.lines().collect();
        let mut edited: Vec<String> = lines.iter().map(|s| s.to_string()).collect();
        edited[3] = edited[2].clone();
        text = edited.join("\n");
        text.push('\n');
        let (_, report) = parse_code(&text).unwrap();
        assert!(!report.is_valid());
    }

    #[test]
    fn steiner_blocks_share_at_most_one_point() {
        for (m, k) in [(7, 3), (9, 3), (13, 4), (25, 4)] {
            let code = build_steiner_code(m, k).unwrap();
            for (i, a) in code.patterns().iter().enumerate() {
                for b in code.patterns().iter().skip(i + 1) {
                    assert!(a.overlap(b) <= 1);
                }
            }
        }
    }

    proptest::proptest! {
        #[test]
        fn sampled_patterns_satisfy_invariants(m in 1usize..24, extra in 0usize..8, seed in 0u64..1000) {
            let k = 1 + extra % m.min(8);
            let mut r = rng(seed);
            let p = sample_dsa_pattern(m, k, &mut r).unwrap();
            proptest::prop_assert_eq!(p.k(), k);
            proptest::prop_assert!(p.subchannels().windows(2).all(|w| w[0] < w[1]));
            proptest::prop_assert!(p.subchannels().iter().all(|&s| s < m));
        }
    }
}
