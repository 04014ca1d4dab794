//! Segmented sieving of μ, the von Mangoldt carrier and primality, with
//! summatory functions accumulated segment by segment.

use rayon::prelude::*;

use crate::error::{invalid, resource, Result};
use crate::par;

pub const DEFAULT_GLOBAL_BOUND: u64 = 100_000_000;
pub const DEFAULT_SEGMENT_LEN: u64 = 1 << 20;
/// Environment variable holding the memory budget in bytes.
pub const MEMORY_BUDGET_ENV: &str = "AUTOSEQ_MEMORY_BUDGET";
pub const DEFAULT_MEMORY_BUDGET: u64 = 2 << 30;

/// Bytes held per sieved integer in a [`SieveTable`].
const BYTES_PER_ENTRY: u64 = 10;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct SieveConfig {
    pub global_bound: u64,
    pub segment_len: u64,
    pub memory_budget: u64,
    pub workers: usize,
}

impl Default for SieveConfig {
    fn default() -> Self {
        SieveConfig {
            global_bound: DEFAULT_GLOBAL_BOUND,
            segment_len: DEFAULT_SEGMENT_LEN,
            memory_budget: memory_budget_from_env(),
            workers: 1,
        }
    }
}

/// Reads [`MEMORY_BUDGET_ENV`], falling back to [`DEFAULT_MEMORY_BUDGET`].
pub fn memory_budget_from_env() -> u64 {
    std::env::var(MEMORY_BUDGET_ENV)
        .ok()
        .and_then(|v| v.trim().parse().ok())
        .unwrap_or(DEFAULT_MEMORY_BUDGET)
}

/// Arithmetic-function table over the half-open range `[lo, hi)`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SieveTable {
    lo: u64,
    hi: u64,
    mobius: Vec<i8>,
    mangoldt_prime: Vec<u64>,
    is_prime: Vec<bool>,
}

impl SieveTable {
    pub fn lo(&self) -> u64 {
        self.lo
    }

    pub fn hi(&self) -> u64 {
        self.hi
    }

    pub fn len(&self) -> usize {
        self.mobius.len()
    }

    pub fn is_empty(&self) -> bool {
        self.mobius.is_empty()
    }

    fn slot(&self, n: u64) -> usize {
        assert!(self.lo <= n && n < self.hi, "{n} outside sieved range [{}, {})", self.lo, self.hi);
        (n - self.lo) as usize
    }

    pub fn mobius(&self, n: u64) -> i8 {
        self.mobius[self.slot(n)]
    }

    /// `p` if `n = p^j` with `j ≥ 1`, else `0`.
    pub fn mangoldt_prime(&self, n: u64) -> u64 {
        self.mangoldt_prime[self.slot(n)]
    }

    pub fn is_prime(&self, n: u64) -> bool {
        self.is_prime[self.slot(n)]
    }

    /// `Λ(n)`.
    pub fn mangoldt(&self, n: u64) -> f64 {
        match self.mangoldt_prime(n) {
            0 => 0.0,
            p => (p as f64).ln(),
        }
    }

    pub fn mobius_values(&self) -> &[i8] {
        &self.mobius
    }

    pub fn mangoldt_primes(&self) -> &[u64] {
        &self.mangoldt_prime
    }

    pub fn prime_flags(&self) -> &[bool] {
        &self.is_prime
    }

    /// Concatenates adjacent tables.
    pub fn concat(parts: Vec<SieveTable>) -> Result<SieveTable> {
        let mut iter = parts.into_iter();
        let mut out = iter.next().ok_or_else(|| invalid!("no tables to concatenate"))?;
        for t in iter {
            if t.lo != out.hi {
                return Err(invalid!("tables [{}, {}) and [{}, {}) are not adjacent", out.lo, out.hi, t.lo, t.hi));
            }
            out.hi = t.hi;
            out.mobius.extend(t.mobius);
            out.mangoldt_prime.extend(t.mangoldt_prime);
            out.is_prime.extend(t.is_prime);
        }
        Ok(out)
    }
}

/// Primes `≤ n` by a plain sieve of Eratosthenes (for sieving primes).
pub fn small_primes(n: u64) -> Vec<u64> {
    if n < 2 {
        return Vec::new();
    }
    let n = n as usize;
    let mut composite = vec![false; n + 1];
    let mut out = Vec::new();
    for i in 2..=n {
        if !composite[i] {
            out.push(i as u64);
            let mut j = i * i;
            while j <= n {
                composite[j] = true;
                j += i;
            }
        }
    }
    out
}

fn sieving_primes(hi: u64) -> Vec<u64> {
    small_primes(hi.saturating_sub(1).isqrt())
}

/// Sieves `[lo, hi)` with the configured bounds.
pub fn sieve_segment_with(lo: u64, hi: u64, cfg: &SieveConfig) -> Result<SieveTable> {
    if lo >= hi {
        return Err(invalid!("empty sieve range [{lo}, {hi})"));
    }
    if hi > cfg.global_bound.saturating_add(1) {
        return Err(invalid!("range end {hi} exceeds the global bound {}", cfg.global_bound));
    }
    let bytes = (hi - lo).saturating_mul(BYTES_PER_ENTRY);
    if bytes > cfg.memory_budget {
        return Err(resource!(
            "sieving [{lo}, {hi}) needs {bytes} bytes, budget is {}",
            cfg.memory_budget
        ));
    }
    let primes = sieving_primes(hi);
    Ok(sieve_with_primes(lo, hi, &primes))
}

/// Sieves `[lo, hi)` with default configuration.
pub fn sieve_segment(lo: u64, hi: u64) -> Result<SieveTable> {
    sieve_segment_with(lo, hi, &SieveConfig::default())
}

/// Core segment sieve. `primes` must contain every prime `≤ √(hi − 1)`.
fn sieve_with_primes(lo: u64, hi: u64, primes: &[u64]) -> SieveTable {
    let len = (hi - lo) as usize;
    let mut rem: Vec<u64> = (lo..hi).collect();
    let mut mobius = vec![1i8; len];
    let mut distinct = vec![0u8; len];
    let mut carrier = vec![0u64; len];
    for &p in primes {
        if p * p >= hi {
            break;
        }
        let first = lo.div_ceil(p) * p;
        let mut n = first.max(p);
        while n < hi {
            let i = (n - lo) as usize;
            let mut r = rem[i] / p;
            if r.is_multiple_of(p) {
                mobius[i] = 0;
                while r.is_multiple_of(p) {
                    r /= p;
                }
            } else {
                mobius[i] = -mobius[i];
            }
            rem[i] = r;
            distinct[i] = distinct[i].saturating_add(1);
            carrier[i] = p;
            n += p;
        }
    }
    let mut is_prime = vec![false; len];
    for i in 0..len {
        let n = lo + i as u64;
        if n <= 1 {
            carrier[i] = 0;
            continue;
        }
        if rem[i] > 1 {
            mobius[i] = -mobius[i];
            distinct[i] = distinct[i].saturating_add(1);
            carrier[i] = rem[i];
        }
        if distinct[i] != 1 {
            carrier[i] = 0;
        }
        is_prime[i] = carrier[i] == n;
    }
    if lo == 0 {
        mobius[0] = 0;
    }
    SieveTable { lo, hi, mobius, mangoldt_prime: carrier, is_prime }
}

/// Fixed segment boundaries covering `[lo, hi)`; independent of worker count.
pub fn segments(lo: u64, hi: u64, seg_len: u64) -> Vec<(u64, u64)> {
    let seg_len = seg_len.max(1);
    let mut out = Vec::new();
    let mut a = lo;
    while a < hi {
        let b = a.saturating_add(seg_len).min(hi);
        out.push((a, b));
        a = b;
    }
    out
}

/// Runs `f` on every sieved segment of `[lo, hi)` and returns results in
/// segment order.
pub fn map_segments<R, F>(lo: u64, hi: u64, cfg: &SieveConfig, f: F) -> Result<Vec<R>>
where
    R: Send,
    F: Fn(&SieveTable) -> R + Sync + Send,
{
    if hi > cfg.global_bound.saturating_add(1) {
        return Err(invalid!("range end {hi} exceeds the global bound {}", cfg.global_bound));
    }
    let per_worker = cfg.segment_len.saturating_mul(BYTES_PER_ENTRY).saturating_mul(cfg.workers.max(1) as u64);
    if per_worker > cfg.memory_budget {
        return Err(resource!(
            "{} workers with segments of {} need {per_worker} bytes, budget is {}",
            cfg.workers,
            cfg.segment_len,
            cfg.memory_budget
        ));
    }
    if lo >= hi {
        return Ok(Vec::new());
    }
    let primes = sieving_primes(hi);
    let segs = segments(lo, hi, cfg.segment_len);
    Ok(par::install(cfg.workers, || {
        segs.par_iter().map(|&(a, b)| f(&sieve_with_primes(a, b, &primes))).collect()
    }))
}

/// `M(N) = Σ_{n≤N} μ(n)`.
pub fn mertens_with(n: u64, cfg: &SieveConfig) -> Result<i64> {
    if n == 0 {
        return Err(invalid!("mertens needs N >= 1"));
    }
    let parts = map_segments(1, n + 1, cfg, |t| t.mobius_values().iter().map(|&m| m as i64).sum::<i64>())?;
    Ok(parts.into_iter().sum())
}

pub fn mertens(n: u64) -> Result<i64> {
    mertens_with(n, &SieveConfig::default())
}

/// `Ψ(N) = Σ_{n≤N} Λ(n)`, compensated per segment and merged in segment order.
pub fn chebyshev_psi_with(n: u64, cfg: &SieveConfig) -> Result<f64> {
    if n == 0 {
        return Err(invalid!("chebyshev_psi needs N >= 1"));
    }
    let parts = map_segments(1, n + 1, cfg, |t| {
        let mut s = CompensatedSum::new();
        for &p in t.mangoldt_primes() {
            if p != 0 {
                s.add((p as f64).ln());
            }
        }
        s
    })?;
    Ok(CompensatedSum::merge_all(parts).value())
}

pub fn chebyshev_psi(n: u64) -> Result<f64> {
    chebyshev_psi_with(n, &SieveConfig::default())
}

/// Lazily sieved increasing primes `≤ limit`.
pub struct Primes {
    limit: u64,
    next_lo: u64,
    seg_len: u64,
    base: Vec<u64>,
    buf: Vec<u64>,
    pos: usize,
}

impl Iterator for Primes {
    type Item = u64;

    fn next(&mut self) -> Option<u64> {
        loop {
            if self.pos < self.buf.len() {
                self.pos += 1;
                return Some(self.buf[self.pos - 1]);
            }
            if self.next_lo > self.limit {
                return None;
            }
            let hi = self.next_lo.saturating_add(self.seg_len).min(self.limit + 1);
            let t = sieve_with_primes(self.next_lo, hi, &self.base);
            self.buf = (self.next_lo..hi).filter(|&n| t.is_prime(n)).collect();
            self.pos = 0;
            self.next_lo = hi;
        }
    }
}

/// Increasing primes `≤ limit`.
pub fn primes_up_to(limit: u64) -> Primes {
    Primes {
        limit,
        next_lo: 2,
        seg_len: DEFAULT_SEGMENT_LEN,
        base: sieving_primes(limit.saturating_add(1)),
        buf: Vec::new(),
        pos: 0,
    }
}

/// Upper bound for the `n`-th prime (`n ≥ 1`, Rosser–Schoenfeld for `n ≥ 6`).
pub fn nth_prime_upper_bound(n: u64) -> u64 {
    if n < 6 {
        return 13;
    }
    let x = n as f64;
    (x * (x.ln() + x.ln().ln())).ceil() as u64 + 1
}

/// `p_1, …, p_count`.
pub fn first_primes(count: u64) -> Vec<u64> {
    if count == 0 {
        return Vec::new();
    }
    primes_up_to(nth_prime_upper_bound(count)).take(count as usize).collect()
}

/// `p_n` (1-based).
pub fn nth_prime(n: u64) -> Result<u64> {
    if n == 0 {
        return Err(invalid!("primes are indexed from 1"));
    }
    Ok(primes_up_to(nth_prime_upper_bound(n)).nth((n - 1) as usize).expect("bound holds"))
}

/// Neumaier compensated summation.
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct CompensatedSum {
    sum: f64,
    comp: f64,
}

impl CompensatedSum {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn add(&mut self, x: f64) {
        let t = self.sum + x;
        if self.sum.abs() >= x.abs() {
            self.comp += (self.sum - t) + x;
        } else {
            self.comp += (x - t) + self.sum;
        }
        self.sum = t;
    }

    /// Adds another partial sum (its running sum, then its compensation).
    pub fn absorb(&mut self, other: &CompensatedSum) {
        self.add(other.sum);
        self.add(other.comp);
    }

    /// Merges partial sums in the given order.
    pub fn merge_all<I: IntoIterator<Item = CompensatedSum>>(parts: I) -> CompensatedSum {
        let mut acc = CompensatedSum::new();
        for p in parts {
            acc.absorb(&p);
        }
        acc
    }

    pub fn value(&self) -> f64 {
        self.sum + self.comp
    }
}

impl FromIterator<f64> for CompensatedSum {
    fn from_iter<I: IntoIterator<Item = f64>>(iter: I) -> Self {
        let mut s = CompensatedSum::new();
        for x in iter {
            s.add(x);
        }
        s
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn brute_mobius(n: u64) -> i8 {
        let mut m = n;
        let mut sign = 1i8;
        let mut p = 2;
        while p * p <= m {
            if m.is_multiple_of(p) {
                m /= p;
                if m.is_multiple_of(p) {
                    return 0;
                }
                sign = -sign;
            }
            p += 1;
        }
        if m > 1 {
            sign = -sign;
        }
        sign
    }

    fn brute_carrier(n: u64) -> u64 {
        if n < 2 {
            return 0;
        }
        let p = (2..=n).find(|p| n.is_multiple_of(*p)).unwrap();
        let mut m = n;
        while m.is_multiple_of(p) {
            m /= p;
        }
        if m == 1 {
            p
        } else {
            0
        }
    }

    fn brute_prime(n: u64) -> bool {
        n >= 2 && (2..).take_while(|p| p * p <= n).all(|p| !n.is_multiple_of(p))
    }

    #[test]
    fn small_table() {
        let t = sieve_segment(1, 11).unwrap();
        assert_eq!(t.mobius_values(), &[1, -1, -1, 0, -1, 1, -1, 0, 0, 1]);
        assert_eq!(t.mangoldt_prime(9), 3);
        assert_eq!(t.mangoldt_prime(6), 0);
        assert_eq!(t.mangoldt_prime(1), 0);
        assert!(t.is_prime(7) && !t.is_prime(9) && !t.is_prime(1));
    }

    #[test]
    fn matches_brute_force() {
        let t = sieve_segment(0, 10_001).unwrap();
        for n in 1..=10_000 {
            assert_eq!(t.mobius(n), brute_mobius(n), "mu({n})");
            assert_eq!(t.mangoldt_prime(n), brute_carrier(n), "carrier({n})");
            assert_eq!(t.is_prime(n), brute_prime(n), "prime({n})");
        }
        assert_eq!(t.mobius(0), 0);
    }

    #[test]
    fn far_segment_matches_trial_division() {
        let t = sieve_segment(1_000_000, 1_000_100).unwrap();
        for n in 1_000_000..1_000_100 {
            assert_eq!(t.mobius(n), brute_mobius(n));
            assert_eq!(t.is_prime(n), brute_prime(n));
            let carrier = if t.is_prime(n) { n } else { brute_carrier(n) };
            assert_eq!(t.mangoldt_prime(n), carrier);
        }
    }

    #[test]
    fn segment_independence() {
        let whole = sieve_segment(1, 200_000).unwrap();
        let parts: Vec<_> = segments(1, 200_000, 20_000)
            .into_iter()
            .map(|(a, b)| sieve_segment(a, b).unwrap())
            .collect();
        assert_eq!(parts.len(), 10);
        assert_eq!(SieveTable::concat(parts).unwrap(), whole);
    }

    #[test]
    fn mertens_values() {
        assert_eq!(mertens(1).unwrap(), 1);
        assert_eq!(mertens(2).unwrap(), 0);
        assert_eq!(mertens(10).unwrap(), -1);
        assert_eq!(mertens(100).unwrap(), 1);
        assert_eq!(mertens(1000).unwrap(), 2);
        assert!(mertens(0).is_err());
    }

    #[test]
    fn psi_values() {
        assert_eq!(chebyshev_psi(1).unwrap(), 0.0);
        assert!((chebyshev_psi(10).unwrap() - 2520f64.ln()).abs() < 1e-12);
        let psi = chebyshev_psi(1_000_000).unwrap();
        assert!((psi / 1e6 - 1.0).abs() < 0.001, "{psi}");
    }

    #[test]
    fn psi_independent_of_segmentation() {
        let base = SieveConfig { segment_len: 1 << 16, ..SieveConfig::default() };
        let one = chebyshev_psi_with(300_000, &base).unwrap();
        let four = chebyshev_psi_with(300_000, &SieveConfig { workers: 4, ..base }).unwrap();
        assert_eq!(one.to_bits(), four.to_bits());
        let m1 = mertens_with(300_000, &base).unwrap();
        let m2 = mertens_with(300_000, &SieveConfig { segment_len: 777, ..base }).unwrap();
        assert_eq!(m1, m2);
    }

    #[test]
    fn prime_iteration() {
        assert_eq!(primes_up_to(10).collect::<Vec<_>>(), vec![2, 3, 5, 7]);
        assert_eq!(primes_up_to(100).count(), 25);
        assert_eq!(primes_up_to(1_000_000).count(), 78_498);
        assert_eq!(primes_up_to(1_000_000).count(), small_primes(1_000_000).len());
        assert_eq!(primes_up_to(1).count(), 0);
        assert_eq!(nth_prime(1).unwrap(), 2);
        assert_eq!(nth_prime(25).unwrap(), 97);
        assert_eq!(first_primes(5), vec![2, 3, 5, 7, 11]);
        assert_eq!(*first_primes(78_498).last().unwrap(), 999_983);
    }

    #[test]
    fn budget_enforced() {
        let cfg = SieveConfig { memory_budget: 1000, ..SieveConfig::default() };
        assert!(matches!(sieve_segment_with(1, 1_000_000, &cfg), Err(crate::Error::ResourceLimit(_))));
        let cfg = SieveConfig { global_bound: 100, ..SieveConfig::default() };
        assert!(sieve_segment_with(1, 1000, &cfg).is_err());
        assert!(sieve_segment(5, 5).is_err());
    }

    #[test]
    fn compensated_sum_beats_naive() {
        let mut s = CompensatedSum::new();
        s.add(1e16);
        for _ in 0..1000 {
            s.add(1.0);
        }
        s.add(-1e16);
        assert_eq!(s.value(), 1000.0);
    }
}
