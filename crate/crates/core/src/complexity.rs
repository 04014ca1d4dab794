//! Subword complexity of streamed sequences, determinism statistics, the
//! explicit lower-bound words `u_{ℓ,i}`, and polynomial-family sweeps.

use std::collections::{BTreeMap, BTreeSet, HashMap, HashSet};

use num_traits::PrimInt;
use rayon::prelude::*;

use crate::arith::memory_budget_from_env;
use crate::automaton::{Dfa, Letter};
use crate::error::{invalid, resource, Result};
use crate::par;
use crate::sequences::{IndexMode, IntPolynomial, SequenceSpec};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct SubwordOptions {
    pub workers: usize,
    pub memory_budget: u64,
    /// Skip exact confirmation of hash collisions; counts become lower bounds.
    pub hashes_only: bool,
    /// Keep exact factor sets for `H ≤ h_exact`.
    pub h_exact: usize,
}

impl Default for SubwordOptions {
    fn default() -> Self {
        SubwordOptions { workers: 1, memory_budget: memory_budget_from_env(), hashes_only: false, h_exact: 0 }
    }
}

/// How the counts of a profile were obtained.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CountMethod {
    /// Windows packed injectively into machine words.
    Packed,
    /// Rolling hash, every collision confirmed letter by letter.
    HashConfirmed,
    /// Rolling hash without confirmation (lower bounds).
    HashOnly,
}

/// Distinct-factor counts over the windows starting at `start..start+n`.
/// Every window reads `h_max` letters, so `n + h_max − 1` letters are scanned.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SubwordProfile {
    pub start: u64,
    pub n: u64,
    pub h_max: usize,
    pub alphabet_size: usize,
    /// `counts[H - 1] = N_H`.
    pub counts: Vec<u64>,
    pub method: CountMethod,
    pub factor_sets: BTreeMap<usize, BTreeSet<Vec<Letter>>>,
}

impl SubwordProfile {
    pub fn count(&self, h: usize) -> u64 {
        self.counts[h - 1]
    }

    /// True when counts are only lower bounds.
    pub fn is_lower_bound(&self) -> bool {
        self.method == CountMethod::HashOnly
    }

    /// Checks `N_H ≤ N_{H+1} ≤ |A|·N_H`, `N_H ≤ n` and `N_H ≤ |A|^H`.
    pub fn check_invariants(&self) -> std::result::Result<(), String> {
        let a = self.alphabet_size as u128;
        for (i, &c) in self.counts.iter().enumerate() {
            let h = i + 1;
            if c == 0 || c > self.n {
                return Err(format!("N_{h} = {c} outside [1, {}]", self.n));
            }
            if let Some(cap) = a.checked_pow(h as u32) {
                if c as u128 > cap {
                    return Err(format!("N_{h} = {c} exceeds |A|^{h} = {cap}"));
                }
            }
            if let Some(&next) = self.counts.get(i + 1) {
                if !self.is_lower_bound() && (next < c || next as u128 > a * c as u128) {
                    return Err(format!("N_{h} = {c}, N_{} = {next} breaks the growth chain", h + 1));
                }
            }
        }
        Ok(())
    }
}

/// Dense codes for letters, in alphabet order.
struct Coder {
    letters: Vec<Letter>,
    index: HashMap<Letter, u8>,
    bits: u32,
}

impl Coder {
    fn new(alphabet: Vec<Letter>) -> Result<Coder> {
        if alphabet.len() > 256 {
            return Err(invalid!("alphabet of {} letters exceeds 256", alphabet.len()));
        }
        let bits = (usize::BITS - (alphabet.len().max(2) - 1).leading_zeros()).max(1);
        let index = alphabet.iter().enumerate().map(|(i, &a)| (a, i as u8)).collect();
        Ok(Coder { letters: alphabet, index, bits })
    }

    fn encode(&self, letters: &[Letter]) -> Vec<u8> {
        letters.iter().map(|a| self.index[a]).collect()
    }
}

/// `N_H` for `H = 1..=h_max` over the windows `start..start+n` of the sequence.
pub fn subword_count(spec: &SequenceSpec, start: u64, n: u64, h_max: usize) -> Result<SubwordProfile> {
    subword_count_with(spec, start, n, h_max, &SubwordOptions::default())
}

pub fn subword_count_with(
    spec: &SequenceSpec,
    start: u64,
    n: u64,
    h_max: usize,
    opts: &SubwordOptions,
) -> Result<SubwordProfile> {
    if h_max == 0 || n < h_max as u64 {
        return Err(invalid!("need N >= H_max >= 1, got N = {n}, H_max = {h_max}"));
    }
    let coder = Coder::new(spec.dfa.alphabet())?;
    let total = n + h_max as u64 - 1;
    let key_bytes: u64 = if coder.bits as usize * h_max <= 64 { 8 } else { 16 };
    let need = total.saturating_mul(4 + 1).saturating_add(n.saturating_mul(key_bytes));
    if need > opts.memory_budget {
        return Err(resource!(
            "scanning {total} letters needs about {need} bytes, budget is {}; \
             lower N or use hashes-only mode for lower bounds",
            opts.memory_budget
        ));
    }
    let letters = spec.stream_with(start, total, opts.workers)?;
    let mut profile = profile_of_letters(&letters, &coder, h_max, opts)?;
    profile.start = start;
    Ok(profile)
}

/// Profile of an explicit letter sequence (all windows of length `h_max`).
pub fn subword_profile_of(letters: &[Letter], h_max: usize, opts: &SubwordOptions) -> Result<SubwordProfile> {
    if h_max == 0 || letters.len() < h_max {
        return Err(invalid!("need at least H_max = {h_max} letters"));
    }
    let alphabet: Vec<Letter> = letters.iter().copied().collect::<BTreeSet<_>>().into_iter().collect();
    profile_of_letters(letters, &Coder::new(alphabet)?, h_max, opts)
}

fn profile_of_letters(letters: &[Letter], coder: &Coder, h_max: usize, opts: &SubwordOptions) -> Result<SubwordProfile> {
    let codes = coder.encode(letters);
    let n = codes.len() - h_max + 1;
    let packed_bits = coder.bits as usize * h_max;
    let (counts, method) = par::install(opts.workers, || {
        if packed_bits <= 64 {
            (packed_counts::<u64>(&codes, n, h_max, coder.bits), CountMethod::Packed)
        } else if packed_bits <= 128 {
            (packed_counts::<u128>(&codes, n, h_max, coder.bits), CountMethod::Packed)
        } else {
            let method = if opts.hashes_only { CountMethod::HashOnly } else { CountMethod::HashConfirmed };
            let counts = (1..=h_max).map(|h| hashed_count(&codes, n, h, !opts.hashes_only)).collect();
            (counts, method)
        }
    });
    let mut factor_sets = BTreeMap::new();
    for h in 1..=opts.h_exact.min(h_max) {
        let set: HashSet<&[u8]> = (0..n).map(|i| &codes[i..i + h]).collect();
        let decoded = set
            .into_iter()
            .map(|w| w.iter().map(|&c| coder.letters[c as usize]).collect())
            .collect();
        factor_sets.insert(h, decoded);
    }
    Ok(SubwordProfile {
        start: 0,
        n: n as u64,
        h_max,
        alphabet_size: coder.letters.len(),
        counts,
        method,
        factor_sets,
    })
}

/// Sorts left-aligned packed windows once; `N_H` is one plus the number of
/// adjacent sorted pairs whose common prefix is shorter than `H` letters.
fn packed_counts<K>(codes: &[u8], n: usize, h_max: usize, bits: u32) -> Vec<u64>
where
    K: PrimInt + Send + Sync,
{
    let width = (std::mem::size_of::<K>() * 8) as u32;
    let chunks = par::chunks(0, n as u64, 1 << 16);
    let mut keys: Vec<K> = chunks
        .par_iter()
        .flat_map_iter(|&(a, b)| {
            let (a, b) = (a as usize, b as usize);
            let mut key = K::zero();
            for j in 0..h_max {
                key = key | (K::from(codes[a + j]).unwrap() << (width - bits * (j as u32 + 1)) as usize);
            }
            let last_shift = (width - bits * h_max as u32) as usize;
            let mut out = Vec::with_capacity(b - a);
            out.push(key);
            for i in a + 1..b {
                key = (key << bits as usize) | (K::from(codes[i + h_max - 1]).unwrap() << last_shift);
                out.push(key);
            }
            out
        })
        .collect();
    keys.par_sort_unstable();
    let mut hist = vec![0u64; h_max + 1];
    for w in keys.windows(2) {
        let x = w[0] ^ w[1];
        let lcp = if x.is_zero() { h_max } else { (x.leading_zeros() / bits) as usize };
        hist[lcp.min(h_max)] += 1;
    }
    let mut counts = Vec::with_capacity(h_max);
    let mut acc = 1u64;
    for h in 1..=h_max {
        acc += hist[h - 1];
        counts.push(acc);
    }
    counts
}

const HASH_MOD: u64 = (1 << 61) - 1;
const HASH_BASE: u64 = 0x1f35_a7bd_94c3_d2e1 % HASH_MOD;

fn mulmod(a: u64, b: u64) -> u64 {
    ((a as u128 * b as u128) % HASH_MOD as u128) as u64
}

/// Polynomial rolling hashes of all length-`h` windows.
fn rolling_hashes(codes: &[u8], n: usize, h: usize) -> Vec<u64> {
    let mut top = 1u64;
    for _ in 1..h {
        top = mulmod(top, HASH_BASE);
    }
    let mut out = Vec::with_capacity(n);
    let mut x = 0u64;
    for &c in &codes[..h] {
        x = (mulmod(x, HASH_BASE) + c as u64 + 1) % HASH_MOD;
    }
    out.push(x);
    for i in 1..n {
        let drop = mulmod(top, codes[i - 1] as u64 + 1);
        x = (x + HASH_MOD - drop) % HASH_MOD;
        x = (mulmod(x, HASH_BASE) + codes[i + h - 1] as u64 + 1) % HASH_MOD;
        out.push(x);
    }
    out
}

/// Distinct length-`h` windows via hashing; equal-hash groups are split
/// exactly when `confirm` is set.
fn hashed_count(codes: &[u8], n: usize, h: usize, confirm: bool) -> u64 {
    let hashes = rolling_hashes(codes, n, h);
    let mut pairs: Vec<(u64, u32)> = hashes.into_iter().enumerate().map(|(i, x)| (x, i as u32)).collect();
    pairs.par_sort_unstable();
    count_hash_groups(&pairs, codes, h, confirm)
}

/// Counts distinct windows among `(hash, position)` pairs sorted by hash.
fn count_hash_groups(pairs: &[(u64, u32)], codes: &[u8], h: usize, confirm: bool) -> u64 {
    let mut count = 0u64;
    let mut i = 0;
    while i < pairs.len() {
        let mut j = i + 1;
        while j < pairs.len() && pairs[j].0 == pairs[i].0 {
            j += 1;
        }
        if confirm && j - i > 1 {
            let distinct: HashSet<&[u8]> =
                pairs[i..j].iter().map(|&(_, p)| &codes[p as usize..p as usize + h]).collect();
            count += distinct.len() as u64;
        } else {
            count += 1;
        }
        i = j;
    }
    count
}

/// Distinct length-`h` factors of a letter slice (set-based oracle).
pub fn distinct_factors(letters: &[Letter], h: usize) -> BTreeSet<Vec<Letter>> {
    if h == 0 || letters.len() < h {
        return BTreeSet::new();
    }
    letters.windows(h).map(|w| w.to_vec()).collect()
}

#[derive(Debug, Clone, PartialEq)]
pub struct DeterminismDiagnostic {
    /// `max (log₂ N_H)/H` over `entropy_range`.
    pub entropy_slope: f64,
    pub entropy_range: (usize, usize),
    /// Least-squares slope of `ln N_H` against `ln H` over `fit_range`.
    pub exponent_fit: f64,
    pub fit_range: (usize, usize),
    /// `(H, N_H, log₂ N_H)`.
    pub table: Vec<(usize, u64, f64)>,
}

/// Entropy slope over the upper half `⌊H_max/2⌋+1..=H_max` and exponent fit
/// over `8..=H_max`.
pub fn determinism_diagnostic(profile: &SubwordProfile) -> Result<DeterminismDiagnostic> {
    let h = profile.h_max;
    if h < 8 {
        return Err(invalid!("determinism diagnostic needs H_max >= 8, got {h}"));
    }
    Ok(DeterminismDiagnostic {
        entropy_slope: entropy_slope(profile, h / 2 + 1, h),
        entropy_range: (h / 2 + 1, h),
        exponent_fit: exponent_fit(profile, 8, h),
        fit_range: (8, h),
        table: (1..=h).map(|k| (k, profile.count(k), (profile.count(k) as f64).log2())).collect(),
    })
}

/// `max_{lo ≤ H ≤ hi} (log₂ N_H)/H`.
pub fn entropy_slope(profile: &SubwordProfile, lo: usize, hi: usize) -> f64 {
    (lo..=hi)
        .map(|h| (profile.count(h) as f64).log2() / h as f64)
        .fold(f64::NEG_INFINITY, f64::max)
}

/// Least-squares slope of `ln N_H` against `ln H` for `lo ≤ H ≤ hi`.
pub fn exponent_fit(profile: &SubwordProfile, lo: usize, hi: usize) -> f64 {
    let pts: Vec<(f64, f64)> =
        (lo..=hi).map(|h| ((h as f64).ln(), (profile.count(h) as f64).ln())).collect();
    least_squares_slope(&pts)
}

pub fn least_squares_slope(pts: &[(f64, f64)]) -> f64 {
    let n = pts.len() as f64;
    let mx = pts.iter().map(|p| p.0).sum::<f64>() / n;
    let my = pts.iter().map(|p| p.1).sum::<f64>() / n;
    let sxy: f64 = pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    let sxx: f64 = pts.iter().map(|p| (p.0 - mx) * (p.0 - mx)).sum();
    if sxx == 0.0 {
        0.0
    } else {
        sxy / sxx
    }
}

/// `u_{ℓ,i}(h) = ⌊m·{(i+h)/ℓ}⌋` for `h < H`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct LowerBoundWord {
    pub ell: u32,
    pub i: u32,
    pub word: Vec<Letter>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct LowerBoundWords {
    pub m: u32,
    pub h: u32,
    pub words: Vec<LowerBoundWord>,
    /// `H ≤ 2m`: the counting argument for long words does not apply and
    /// the `m²` short-word argument is the relevant one.
    pub short_regime: bool,
}

impl LowerBoundWords {
    /// The distinct words, sorted.
    pub fn distinct(&self) -> BTreeSet<Vec<Letter>> {
        self.words.iter().map(|w| w.word.clone()).collect()
    }
}

pub fn lower_bound_word(m: u32, h: u32, ell: u32, i: u32) -> Vec<Letter> {
    (0..h).map(|t| ((m as u64 * ((i + t) % ell) as u64) / ell as u64) as Letter).collect()
}

/// All `u_{ℓ,i}` for `ℓ ∈ m..H`, `i ∈ 0..ℓ`; there are `H(H−1)/2 − m(m−1)/2`.
pub fn lower_bound_words(m: u32, h: u32) -> Result<LowerBoundWords> {
    if m == 0 || h == 0 {
        return Err(invalid!("m and H must be positive"));
    }
    let words = (m..h)
        .flat_map(|ell| (0..ell).map(move |i| LowerBoundWord { ell, i, word: lower_bound_word(m, h, ell, i) }))
        .collect();
    Ok(LowerBoundWords { m, h, words, short_regime: h <= 2 * m })
}

/// Smallest `p ≥ 1` with `w[t] = w[t+p]` wherever both exist.
pub fn least_period(w: &[Letter]) -> usize {
    (1..=w.len()).find(|&p| (0..w.len() - p).all(|t| w[t] == w[t + p])).unwrap_or(w.len())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Occurrence {
    Found(u64),
    /// Not found at any `n ≤ limit`; says nothing about larger `n`.
    NotFoundWithin(u64),
}

impl Occurrence {
    pub fn index(&self) -> Option<u64> {
        match self {
            Occurrence::Found(n) => Some(*n),
            Occurrence::NotFoundWithin(_) => None,
        }
    }
}

fn first_index(spec: &SequenceSpec) -> u64 {
    match spec.mode {
        IndexMode::PiatetskiPrimes(_) => 1,
        _ => 0,
    }
}

/// Smallest `n ≤ limit` with `stream(spec, n, |word|) = word`.
pub fn word_occurs(spec: &SequenceSpec, word: &[Letter], limit: u64) -> Result<Occurrence> {
    Ok(find_occurrences(spec, &[word.to_vec()], limit, 1)?[0])
}

/// First occurrence of each word in one scan of `n ≤ limit`.
pub fn find_occurrences(spec: &SequenceSpec, words: &[Vec<Letter>], limit: u64, workers: usize) -> Result<Vec<Occurrence>> {
    let mut result: Vec<Occurrence> = vec![Occurrence::NotFoundWithin(limit); words.len()];
    let first = first_index(spec);
    let mut by_len: BTreeMap<usize, HashMap<&[Letter], Vec<usize>>> = BTreeMap::new();
    for (idx, w) in words.iter().enumerate() {
        if w.is_empty() {
            result[idx] = Occurrence::Found(first);
            continue;
        }
        by_len.entry(w.len()).or_default().entry(w.as_slice()).or_default().push(idx);
    }
    let Some(&max_len) = by_len.keys().last() else {
        return Ok(result);
    };
    if limit < first {
        return Ok(result);
    }
    let mut remaining: usize = by_len.values().map(|m| m.len()).sum();
    let block = 1u64 << 20;
    let mut a = first;
    while a <= limit && remaining > 0 {
        let starts = block.min(limit - a + 1);
        let letters = spec.stream_with(a, starts + max_len as u64 - 1, workers)?;
        for off in 0..starts as usize {
            for (&len, map) in by_len.iter_mut() {
                if map.is_empty() {
                    continue;
                }
                if let Some(ids) = map.remove(&letters[off..off + len]) {
                    for id in ids {
                        result[id] = Occurrence::Found(a + off as u64);
                    }
                    remaining -= 1;
                }
            }
            if remaining == 0 {
                break;
            }
        }
        a += starts;
    }
    Ok(result)
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SweepReport {
    pub distinct: u64,
    pub polynomials: u64,
    pub windows: u64,
    pub skipped_negative: u64,
}

pub const DEFAULT_SWEEP_BUDGET: u64 = 1 << 32;

/// Distinct words `(a(P(n+ℓ)))_{ℓ<H}` over all `P` of degree `≤ d` with
/// coefficients in `[−B, B]`, `n ≤ start_bound`, `P ≥ 0` on the window.
pub fn poly_subword_sweep(dfa: &Dfa, d: u32, coeff_bound: u32, h: usize, start_bound: u64, budget: u64) -> Result<SweepReport> {
    if h == 0 {
        return Err(invalid!("H must be positive"));
    }
    let side = 2 * coeff_bound as u64 + 1;
    let polys = side
        .checked_pow(d + 1)
        .ok_or_else(|| resource!("coefficient box overflows"))?;
    polys
        .checked_mul(start_bound + 1)
        .and_then(|v| v.checked_mul(h as u64))
        .filter(|&v| v <= budget)
        .ok_or_else(|| resource!("sweep needs more than the budget of {budget} evaluations"))?;
    let b = coeff_bound as i64;
    let mut seen: HashSet<Vec<Letter>> = HashSet::new();
    let mut windows = 0u64;
    let mut skipped = 0u64;
    let mut coeffs = vec![-b; d as usize + 1];
    loop {
        let p = IntPolynomial::new(coeffs.clone());
        for n in 0..=start_bound {
            let mut word = Vec::with_capacity(h);
            let mut ok = true;
            for l in 0..h as u64 {
                match p.eval_i128((n + l) as i128) {
                    Some(v) if v >= 0 => word.push(dfa.eval(v as u128)),
                    Some(_) => {
                        ok = false;
                        break;
                    }
                    None => {
                        let spec = SequenceSpec::new(dfa.clone(), IndexMode::Polynomial(p.clone()));
                        word.push(spec.letter_at(n + l)?);
                    }
                }
            }
            if ok {
                windows += 1;
                seen.insert(word);
            } else {
                skipped += 1;
            }
        }
        // Next coefficient vector in odometer order.
        let mut j = 0;
        loop {
            if j == coeffs.len() {
                return Ok(SweepReport { distinct: seen.len() as u64, polynomials: polys, windows, skipped_negative: skipped });
            }
            if coeffs[j] < b {
                coeffs[j] += 1;
                break;
            }
            coeffs[j] = -b;
            j += 1;
        }
    }
}
