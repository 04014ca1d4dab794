//! Automatic sequences composed with index maps: `a(n)`, `a(⌊n^c⌋)`,
//! `a(⌊p_n^c⌋)` and `a(P(n))`, with frequency and weighted-sum statistics.

use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;

use num_bigint::{BigInt, BigUint};
use num_rational::BigRational;
use num_traits::{Signed, Zero};
use rayon::prelude::*;

use crate::arith::{self, CompensatedSum, SieveConfig};
use crate::automaton::{is_synchronizing, Dfa, Letter};
use crate::error::{domain, invalid, resource, Error, Result};
use crate::exactmath::{ps_floor, ps_floor_u128, ExponentC};
use crate::par;

/// Integer polynomial `z_0 + z_1 X + … + z_d X^d`.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct IntPolynomial {
    coeffs: Vec<i64>,
}

impl IntPolynomial {
    /// Coefficients in increasing degree; trailing zeros are dropped.
    pub fn new(mut coeffs: Vec<i64>) -> Self {
        while coeffs.len() > 1 && coeffs.last() == Some(&0) {
            coeffs.pop();
        }
        if coeffs.is_empty() {
            coeffs.push(0);
        }
        IntPolynomial { coeffs }
    }

    pub fn coeffs(&self) -> &[i64] {
        &self.coeffs
    }

    pub fn degree(&self) -> usize {
        self.coeffs.len() - 1
    }

    /// `P(n)` if it fits in an `i128`.
    pub fn eval_i128(&self, n: i128) -> Option<i128> {
        self.coeffs
            .iter()
            .rev()
            .try_fold(0i128, |acc, &z| acc.checked_mul(n)?.checked_add(z as i128))
    }

    pub fn eval_big(&self, n: &BigInt) -> BigInt {
        self.coeffs.iter().rev().fold(BigInt::zero(), |acc, &z| acc * n + z)
    }

    /// `P(n) mod q` in `{0..q-1}`.
    pub fn eval_mod(&self, n: u64, q: u64) -> u64 {
        let q = q as i128;
        let n = n as i128 % q;
        self.coeffs
            .iter()
            .rev()
            .fold(0i128, |acc, &z| (acc * n + z as i128).rem_euclid(q)) as u64
    }
}

impl fmt::Display for IntPolynomial {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let parts: Vec<String> = self.coeffs.iter().map(|z| z.to_string()).collect();
        write!(f, "{}", parts.join(","))
    }
}

impl FromStr for IntPolynomial {
    type Err = Error;

    /// Comma-separated coefficients `z0,z1,...,zd`.
    fn from_str(s: &str) -> Result<Self> {
        let coeffs = s
            .split(',')
            .map(|t| t.trim().parse::<i64>())
            .collect::<std::result::Result<Vec<_>, _>>()
            .map_err(|e| Error::Parse(format!("polynomial `{s}`: {e}")))?;
        Ok(IntPolynomial::new(coeffs))
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum IndexMode {
    Direct,
    Piatetski(ExponentC),
    /// Index `n` refers to the `n`-th prime (`p_1 = 2`).
    PiatetskiPrimes(ExponentC),
    Polynomial(IntPolynomial),
}

impl fmt::Display for IndexMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            IndexMode::Direct => write!(f, "direct"),
            IndexMode::Piatetski(c) => write!(f, "piatetski({c})"),
            IndexMode::PiatetskiPrimes(c) => write!(f, "piatetski_primes({c})"),
            IndexMode::Polynomial(p) => write!(f, "polynomial({p})"),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SequenceSpec {
    pub dfa: Dfa,
    pub mode: IndexMode,
}

/// Indices per parallel work unit.
const CHUNK: u64 = 1 << 16;

impl SequenceSpec {
    pub fn new(dfa: Dfa, mode: IndexMode) -> Self {
        SequenceSpec { dfa, mode }
    }

    pub fn direct(dfa: Dfa) -> Self {
        Self::new(dfa, IndexMode::Direct)
    }

    pub fn piatetski(dfa: Dfa, c: ExponentC) -> Self {
        Self::new(dfa, IndexMode::Piatetski(c))
    }

    fn letter_for(&self, n: u64, mapped: u64) -> Result<Letter> {
        let dfa = &self.dfa;
        match &self.mode {
            IndexMode::Direct => Ok(dfa.eval(mapped as u128)),
            IndexMode::Piatetski(c) | IndexMode::PiatetskiPrimes(c) => Ok(match ps_floor_u128(mapped, *c) {
                Some(v) => dfa.eval(v),
                None => dfa.eval_big(&ps_floor(mapped, *c)),
            }),
            IndexMode::Polynomial(p) => match p.eval_i128(mapped as i128) {
                Some(v) if v >= 0 => Ok(dfa.eval(v as u128)),
                Some(_) => Err(domain!("polynomial {p} is negative at index {n}")),
                None => {
                    let v = p.eval_big(&BigInt::from(mapped));
                    if v.is_negative() {
                        return Err(domain!("polynomial {p} is negative at index {n}"));
                    }
                    Ok(dfa.eval_big(&v.to_biguint().expect("nonnegative")))
                }
            },
        }
    }

    /// `a(g(n))` for a single index.
    pub fn letter_at(&self, n: u64) -> Result<Letter> {
        match self.mode {
            IndexMode::PiatetskiPrimes(_) => Ok(self.stream(n, 1)?[0]),
            _ => self.letter_for(n, n),
        }
    }

    /// Letters for indices `start..start+count`.
    pub fn stream(&self, start: u64, count: u64) -> Result<Vec<Letter>> {
        self.stream_with(start, count, 1)
    }

    /// [`SequenceSpec::stream`] split into fixed chunks over `workers` threads.
    pub fn stream_with(&self, start: u64, count: u64, workers: usize) -> Result<Vec<Letter>> {
        if count == 0 {
            return Ok(Vec::new());
        }
        let end = start
            .checked_add(count)
            .ok_or_else(|| invalid!("index range overflows"))?;
        let primes = match self.mode {
            IndexMode::PiatetskiPrimes(_) => {
                if start == 0 {
                    return Err(domain!("prime indices start at 1 (p_1 = 2)"));
                }
                Some(primes_in_index_range(start, end))
            }
            _ => None,
        };
        let chunks = par::chunks(start, end, CHUNK);
        let parts: Vec<Result<Vec<Letter>>> = par::install(workers, || {
            chunks
                .par_iter()
                .map(|&(a, b)| {
                    (a..b)
                        .map(|n| {
                            let mapped = match &primes {
                                Some(p) => p[(n - start) as usize],
                                None => n,
                            };
                            self.letter_for(n, mapped)
                        })
                        .collect()
                })
                .collect()
        });
        let mut out = Vec::with_capacity(count as usize);
        for p in parts {
            out.extend(p?);
        }
        Ok(out)
    }

    /// Index value `g(n)` (for reports and tests).
    pub fn index_value(&self, n: u64) -> Result<BigUint> {
        match &self.mode {
            IndexMode::Direct => Ok(BigUint::from(n)),
            IndexMode::Piatetski(c) => Ok(ps_floor(n, *c)),
            IndexMode::PiatetskiPrimes(c) => Ok(ps_floor(arith::nth_prime(n)?, *c)),
            IndexMode::Polynomial(p) => {
                let v = p.eval_big(&BigInt::from(n));
                v.to_biguint().ok_or_else(|| domain!("polynomial {p} is negative at index {n}"))
            }
        }
    }
}

/// `p_start, …, p_{end-1}`.
fn primes_in_index_range(start: u64, end: u64) -> Vec<u64> {
    let last = end - 1;
    arith::primes_up_to(arith::nth_prime_upper_bound(last))
        .skip((start - 1) as usize)
        .take((end - start) as usize)
        .collect()
}

/// Letter counts over `n = 1..=N`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct FrequencyReport {
    pub n: u64,
    pub counts: BTreeMap<Letter, u64>,
}

impl FrequencyReport {
    pub fn count(&self, a: Letter) -> u64 {
        self.counts.get(&a).copied().unwrap_or(0)
    }

    pub fn rate(&self, a: Letter) -> f64 {
        self.count(a) as f64 / self.n as f64
    }

    pub fn rate_exact(&self, a: Letter) -> BigRational {
        BigRational::new(self.count(a).into(), self.n.into())
    }

    pub fn rates(&self) -> BTreeMap<Letter, f64> {
        self.counts.keys().map(|&a| (a, self.rate(a))).collect()
    }

    /// `Σ_α counts_α / N` in exact arithmetic.
    pub fn rate_sum_exact(&self) -> BigRational {
        self.counts.keys().map(|&a| self.rate_exact(a)).fold(BigRational::zero(), |s, r| s + r)
    }
}

fn count_letters(letters: &[Letter], counts: &mut BTreeMap<Letter, u64>) {
    for &a in letters {
        *counts.entry(a).or_insert(0) += 1;
    }
}

/// Counts `a(g(n)) = α` for `n = 1..=N` (in prime mode, for `p_1..p_N`).
pub fn letter_frequencies(spec: &SequenceSpec, n: u64) -> Result<FrequencyReport> {
    letter_frequencies_with(spec, n, 1)
}

pub fn letter_frequencies_with(spec: &SequenceSpec, n: u64, workers: usize) -> Result<FrequencyReport> {
    if n == 0 {
        return Err(invalid!("N must be at least 1"));
    }
    let mut counts: BTreeMap<Letter, u64> = spec.dfa.alphabet().into_iter().map(|a| (a, 0)).collect();
    // Bounded memory: stream in blocks.
    let block = 1u64 << 22;
    let mut a = 1;
    while a <= n {
        let len = block.min(n + 1 - a);
        count_letters(&spec.stream_with(a, len, workers)?, &mut counts);
        a += len;
    }
    Ok(FrequencyReport { n, counts })
}

/// Exact `θ̂_α = |{u < k^{n1} : a(u) = α}| / k^{n1}`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ThetaEstimate {
    pub n1: u32,
    pub total: u128,
    pub counts: BTreeMap<Letter, u128>,
}

impl ThetaEstimate {
    pub fn theta(&self, a: Letter) -> BigRational {
        let c = self.counts.get(&a).copied().unwrap_or(0);
        BigRational::new(BigInt::from(c), BigInt::from(self.total))
    }

    pub fn theta_f64(&self, a: Letter) -> f64 {
        self.counts.get(&a).copied().unwrap_or(0) as f64 / self.total as f64
    }
}

/// Default budget for `k^{n1}` in [`theta_estimate`].
pub const DEFAULT_THETA_BUDGET: u128 = 1 << 64;

/// Computed by propagating state multiplicities over all digit words of
/// length `n1`; leading zeros are harmless so these are exactly `u < k^{n1}`.
pub fn theta_estimate(dfa: &Dfa, n1: u32) -> Result<ThetaEstimate> {
    theta_estimate_with_budget(dfa, n1, DEFAULT_THETA_BUDGET)
}

pub fn theta_estimate_with_budget(dfa: &Dfa, n1: u32, budget: u128) -> Result<ThetaEstimate> {
    let total = (dfa.base() as u128)
        .checked_pow(n1)
        .filter(|&t| t <= budget)
        .ok_or_else(|| resource!("k^n1 = {}^{n1} exceeds the budget {budget}", dfa.base()))?;
    let mut mult = vec![0u128; dfa.num_states()];
    mult[dfa.initial() as usize] = 1;
    for _ in 0..n1 {
        let mut next = vec![0u128; mult.len()];
        for (s, &m) in mult.iter().enumerate() {
            if m == 0 {
                continue;
            }
            for &t in &dfa.transitions()[s] {
                next[t as usize] += m;
            }
        }
        mult = next;
    }
    let mut counts: BTreeMap<Letter, u128> = dfa.alphabet().into_iter().map(|a| (a, 0)).collect();
    for (s, m) in mult.into_iter().enumerate() {
        *counts.get_mut(&dfa.output_of(s as u32)).expect("letter in alphabet") += m;
    }
    Ok(ThetaEstimate { n1, total, counts })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Weight {
    Unit,
    Mobius,
    Mangoldt,
}

impl fmt::Display for Weight {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Weight::Unit => "unit",
            Weight::Mobius => "mobius",
            Weight::Mangoldt => "mangoldt",
        })
    }
}

impl FromStr for Weight {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "unit" => Ok(Weight::Unit),
            "mobius" => Ok(Weight::Mobius),
            "mangoldt" => Ok(Weight::Mangoldt),
            _ => Err(Error::Parse(format!("unknown weight `{s}` (unit, mobius, mangoldt)"))),
        }
    }
}

/// Per-letter `Σ_{n≤N} w(n)·1[a(g(n)) = α]`.
#[derive(Debug, Clone, PartialEq)]
pub struct WeightedTotals {
    pub weight: Weight,
    pub n: u64,
    /// Exact integer totals for unit and Möbius weights.
    pub exact: Option<BTreeMap<Letter, i64>>,
    pub totals: BTreeMap<Letter, f64>,
    /// The unrestricted sum `Σ_{n≤N} w(n)` accumulated in the same order.
    pub grand_total: f64,
}

impl WeightedTotals {
    pub fn get(&self, a: Letter) -> f64 {
        self.totals.get(&a).copied().unwrap_or(0.0)
    }
}

struct SegmentPartial {
    ints: BTreeMap<Letter, i64>,
    reals: BTreeMap<Letter, CompensatedSum>,
    all: CompensatedSum,
}

/// All per-letter weighted totals in one pass over sieve segments.
pub fn weighted_totals(spec: &SequenceSpec, weight: Weight, n: u64, cfg: &SieveConfig) -> Result<WeightedTotals> {
    if n == 0 {
        return Err(invalid!("N must be at least 1"));
    }
    if !matches!(spec.mode, IndexMode::Direct | IndexMode::Piatetski(_)) {
        return Err(invalid!("weighted sums need direct or piatetski index mode, got {}", spec.mode));
    }
    let inner = SieveConfig { workers: 1, ..*cfg };
    let segs = arith::segments(1, n + 1, cfg.segment_len);
    let parts: Vec<Result<SegmentPartial>> = par::install(cfg.workers, || {
        segs.par_iter()
            .map(|&(a, b)| {
                let letters = spec.stream(a, b - a)?;
                let mut part = SegmentPartial { ints: BTreeMap::new(), reals: BTreeMap::new(), all: CompensatedSum::new() };
                match weight {
                    Weight::Unit => {
                        for &l in &letters {
                            *part.ints.entry(l).or_insert(0) += 1;
                        }
                    }
                    Weight::Mobius => {
                        let t = arith::sieve_segment_with(a, b, &inner)?;
                        for (&l, &mu) in letters.iter().zip(t.mobius_values()) {
                            *part.ints.entry(l).or_insert(0) += mu as i64;
                        }
                    }
                    Weight::Mangoldt => {
                        let t = arith::sieve_segment_with(a, b, &inner)?;
                        for (&l, &p) in letters.iter().zip(t.mangoldt_primes()) {
                            if p != 0 {
                                let v = (p as f64).ln();
                                part.reals.entry(l).or_default().add(v);
                                part.all.add(v);
                            }
                        }
                    }
                }
                Ok(part)
            })
            .collect()
    });
    let letters = spec.dfa.alphabet();
    let mut ints: BTreeMap<Letter, i64> = letters.iter().map(|&a| (a, 0)).collect();
    let mut reals: BTreeMap<Letter, CompensatedSum> = letters.iter().map(|&a| (a, CompensatedSum::new())).collect();
    let mut all = CompensatedSum::new();
    for p in parts {
        let p = p?;
        for (a, v) in p.ints {
            *ints.get_mut(&a).expect("letter in alphabet") += v;
        }
        for (a, v) in p.reals {
            reals.get_mut(&a).expect("letter in alphabet").absorb(&v);
        }
        all.absorb(&p.all);
    }
    Ok(match weight {
        Weight::Mangoldt => WeightedTotals {
            weight,
            n,
            exact: None,
            totals: reals.iter().map(|(&a, s)| (a, s.value())).collect(),
            grand_total: all.value(),
        },
        _ => WeightedTotals {
            weight,
            n,
            grand_total: ints.values().sum::<i64>() as f64,
            totals: ints.iter().map(|(&a, &v)| (a, v as f64)).collect(),
            exact: Some(ints),
        },
    })
}

/// `Σ_{n≤N} w(n)·1[a(g(n)) = target]`.
pub fn weighted_sum(spec: &SequenceSpec, weight: Weight, target: Letter, n: u64) -> Result<f64> {
    Ok(weighted_totals(spec, weight, n, &SieveConfig::default())?.get(target))
}

#[derive(Debug, Clone, PartialEq)]
pub struct PntRow {
    pub letter: Letter,
    pub sum: f64,
    pub theta: f64,
    pub prediction: f64,
    /// `sum / prediction`; `None` when the prediction vanishes.
    pub ratio: Option<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct PntReport {
    pub n: u64,
    pub n1: u32,
    pub psi: f64,
    pub synchronizing: bool,
    pub rows: Vec<PntRow>,
}

/// `n1 = ⌊θ·log_k N⌋`, at least 1.
pub fn default_n1(k: u32, n: u64, theta: f64) -> u32 {
    let mut n1 = (theta * (n as f64).ln() / (k as f64).ln()).floor().max(1.0) as u32;
    // Guard the float log against an off-by-one at exact powers.
    while (k as u128).checked_pow(n1 + 1).is_some_and(|v| (v as f64) <= (n as f64).powf(theta)) {
        n1 += 1;
    }
    n1
}

/// Compares `S_α = Σ Λ(n)·1[a(g(n)) = α]` with `θ̂_α·Ψ(N)`.
pub fn pnt_report(spec: &SequenceSpec, n: u64, n1: Option<u32>, cfg: &SieveConfig) -> Result<PntReport> {
    let n1 = n1.unwrap_or_else(|| default_n1(spec.dfa.base(), n, 0.5));
    let theta = theta_estimate(&spec.dfa, n1)?;
    let sums = weighted_totals(spec, Weight::Mangoldt, n, cfg)?;
    let psi = sums.grand_total;
    let rows = sums
        .totals
        .iter()
        .map(|(&letter, &sum)| {
            let th = theta.theta_f64(letter);
            let prediction = th * psi;
            let ratio = (prediction != 0.0).then(|| sum / prediction);
            PntRow { letter, sum, theta: th, prediction, ratio }
        })
        .collect();
    Ok(PntReport { n, n1, psi, synchronizing: is_synchronizing(&spec.dfa).synchronizing, rows })
}

/// Convenience: [`pnt_report`] with default settings.
pub fn pnt_report_default(spec: &SequenceSpec, n: u64) -> Result<PntReport> {
    pnt_report(spec, n, None, &SieveConfig::default())
}

/// Average over letters of `|freq_α(N) − θ̂_α|`.
pub fn mean_theta_deviation(freq: &FrequencyReport, theta: &ThetaEstimate) -> f64 {
    let letters: Vec<Letter> = freq.counts.keys().copied().collect();
    letters.iter().map(|&a| (freq.rate(a) - theta.theta_f64(a)).abs()).sum::<f64>() / letters.len() as f64
}
