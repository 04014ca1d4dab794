//! Discrepancy, Erdős–Turán bounds, exponential sums along `n^c`, residue
//! classes of `⌊n^c⌋`, polynomial residues and the Weyl dichotomy search.

use std::f64::consts::TAU;

use num_bigint::BigInt;
use num_integer::Integer;
use num_rational::BigRational;
use num_traits::{One, ToPrimitive, Zero};
use rayon::prelude::*;

use crate::arith::{self, CompensatedSum, SieveConfig};
use crate::error::{invalid, resource, Result};
use crate::exactmath::{frac_rational, frac_scaled_power, ps_floor_u128, ps_residue, ExponentC};
use crate::par;
use crate::sequences::{IntPolynomial, Weight};

/// Largest sample for the exact extreme-discrepancy enumeration.
pub const EXTREME_EXACT_LIMIT: usize = 10_000;
pub const DEFAULT_ET_CONSTANT: f64 = 3.0;

#[derive(Debug, Clone, PartialEq)]
pub struct ErdosTuran {
    pub k: u32,
    pub c: f64,
    pub bound: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct DiscrepancyReport {
    pub n: usize,
    pub d_star: f64,
    /// Exact extreme discrepancy, when `n ≤ EXTREME_EXACT_LIMIT`.
    pub d_extreme: Option<f64>,
    /// Always-valid bracket for the extreme discrepancy.
    pub d_extreme_bracket: (f64, f64),
    pub erdos_turan: Option<ErdosTuran>,
}

impl DiscrepancyReport {
    /// Whether the Erdős–Turán bound dominates the measured discrepancy.
    pub fn et_dominates(&self) -> Option<bool> {
        let et = self.erdos_turan.as_ref()?;
        Some(self.d_extreme.unwrap_or(self.d_star) <= et.bound)
    }
}

fn check_points(points: &[f64]) -> Result<()> {
    if points.is_empty() {
        return Err(invalid!("discrepancy of an empty point set"));
    }
    if let Some(x) = points.iter().find(|x| !(0.0..1.0).contains(*x)) {
        return Err(invalid!("point {x} outside [0, 1)"));
    }
    Ok(())
}

fn sorted(points: &[f64]) -> Vec<f64> {
    let mut v = points.to_vec();
    v.sort_by(f64::total_cmp);
    v
}

/// `max_i max(i/N − x_(i), x_(i) − (i−1)/N)` over the sorted sample.
pub fn star_discrepancy(points: &[f64]) -> Result<f64> {
    check_points(points)?;
    let xs = sorted(points);
    let n = xs.len() as f64;
    Ok(xs
        .iter()
        .enumerate()
        .map(|(i, &x)| ((i + 1) as f64 / n - x).max(x - i as f64 / n))
        .fold(0.0, f64::max))
}

/// `sup_{0≤α<β≤1} |#{α ≤ x < β}/N − (β − α)|` by enumerating endpoint
/// pairs among the distinct sample values and `0`, `1`.
pub fn extreme_discrepancy(points: &[f64]) -> Result<f64> {
    check_points(points)?;
    if points.len() > EXTREME_EXACT_LIMIT {
        return Err(resource!("exact extreme discrepancy limited to {EXTREME_EXACT_LIMIT} points"));
    }
    let xs = sorted(points);
    let n = xs.len() as f64;
    let mut vals: Vec<f64> = Vec::new();
    let mut below: Vec<usize> = Vec::new(); // points strictly below vals[i]
    for (i, &x) in xs.iter().enumerate() {
        if vals.last() != Some(&x) {
            vals.push(x);
            below.push(i);
        }
    }
    let u = vals.len();
    let through = |j: usize| if j + 1 < u { below[j + 1] } else { xs.len() }; // points ≤ vals[j]
    let mut best = 0.0f64;
    for i in 0..u {
        for j in i..u {
            // Too many: [v_i, v_j + 0).
            let many = (through(j) - below[i]) as f64 / n - (vals[j] - vals[i]);
            best = best.max(many);
            // Too few: (v_i, v_j), open on both sides.
            if j > i {
                let few = (vals[j] - vals[i]) - (below[j] - through(i)) as f64 / n;
                best = best.max(few);
            }
        }
        // [0, v_i) and (v_i, 1).
        best = best.max(vals[i] - below[i] as f64 / n);
        best = best.max((1.0 - vals[i]) - (xs.len() - through(i)) as f64 / n);
    }
    Ok(best)
}

/// Star discrepancy plus extreme discrepancy (exact below the size gate).
pub fn discrepancy(points: &[f64]) -> Result<DiscrepancyReport> {
    let d_star = star_discrepancy(points)?;
    let d_extreme = if points.len() <= EXTREME_EXACT_LIMIT { Some(extreme_discrepancy(points)?) } else { None };
    Ok(DiscrepancyReport {
        n: points.len(),
        d_star,
        d_extreme,
        d_extreme_bracket: (d_star, (2.0 * d_star).min(1.0)),
        erdos_turan: None,
    })
}

/// [`discrepancy`] with the Erdős–Turán bound for cutoff `k` and constant `c`.
pub fn discrepancy_with_et(points: &[f64], k: u32, c: f64) -> Result<DiscrepancyReport> {
    let mut r = discrepancy(points)?;
    r.erdos_turan = Some(ErdosTuran { k, c, bound: erdos_turan_bound(points, k, c)? });
    Ok(r)
}

/// `C·(1/K + Σ_{k≤K} (1/k)·|(1/N) Σ_n e(k x_n)|)`.
pub fn erdos_turan_bound(points: &[f64], k: u32, c: f64) -> Result<f64> {
    if k == 0 {
        return Err(invalid!("K must be at least 1"));
    }
    if points.is_empty() {
        return Err(invalid!("empty point set"));
    }
    let n = points.len() as f64;
    let mut total = CompensatedSum::new();
    for kk in 1..=k {
        let mut re = CompensatedSum::new();
        let mut im = CompensatedSum::new();
        for &x in points {
            let phase = (kk as f64 * x).fract();
            let (s, co) = (TAU * phase).sin_cos();
            re.add(co);
            im.add(s);
        }
        total.add(re.value().hypot(im.value()) / n / kk as f64);
    }
    Ok(c * (1.0 / k as f64 + total.value()))
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ExpSum {
    pub re: f64,
    pub im: f64,
}

impl ExpSum {
    pub fn magnitude(&self) -> f64 {
        self.re.hypot(self.im)
    }
}

/// Fixed-point bits for the phase `{A n^c}`: enough that the summed phase
/// error stays far below `10^-6`.
fn phase_bits(a: f64, n: u64) -> u32 {
    let a_bits = a.abs().max(1.0).log2().ceil() as u32;
    64 + a_bits + 64 - n.max(1).leading_zeros()
}

/// `Σ_{n≤N} w(n) e(A n^c)` with every phase reduced mod 1 from the exact
/// integer `⌊n^c·2^b⌋`.
pub fn exp_sum_power(a: f64, c: ExponentC, n: u64, weight: Weight, cfg: &SieveConfig) -> Result<ExpSum> {
    if n == 0 {
        return Err(invalid!("N must be at least 1"));
    }
    if !a.is_finite() {
        return Err(invalid!("A must be finite"));
    }
    let bits = phase_bits(a, n);
    let inner = SieveConfig { workers: 1, ..*cfg };
    let segs = arith::segments(1, n + 1, cfg.segment_len.min(1 << 16));
    let parts: Vec<Result<(CompensatedSum, CompensatedSum)>> = par::install(cfg.workers, || {
        segs.par_iter()
            .map(|&(lo, hi)| {
                let table = match weight {
                    Weight::Unit => None,
                    _ => Some(arith::sieve_segment_with(lo, hi, &inner)?),
                };
                let mut re = CompensatedSum::new();
                let mut im = CompensatedSum::new();
                for m in lo..hi {
                    let w = match (&table, weight) {
                        (None, _) => 1.0,
                        (Some(t), Weight::Mobius) => t.mobius(m) as f64,
                        (Some(t), _) => t.mangoldt(m),
                    };
                    if w == 0.0 {
                        continue;
                    }
                    let phase = frac_scaled_power(m, c, a, bits);
                    let (s, co) = (TAU * phase).sin_cos();
                    re.add(w * co);
                    im.add(w * s);
                }
                Ok((re, im))
            })
            .collect()
    });
    let mut re = CompensatedSum::new();
    let mut im = CompensatedSum::new();
    for p in parts {
        let (r, i) = p?;
        re.absorb(&r);
        im.absorb(&i);
    }
    Ok(ExpSum { re: re.value(), im: im.value() })
}

#[derive(Debug, Clone, PartialEq)]
pub struct ResidueReport {
    pub c: ExponentC,
    pub m: u64,
    pub n: u64,
    pub weight: Weight,
    pub totals: Vec<f64>,
    /// Exact totals for unit and Möbius weights.
    pub exact: Option<Vec<i64>>,
    /// `N/m`, `Ψ(N)/m` or `M(N)/m`.
    pub main_term: f64,
    pub grand_total: f64,
    pub max_abs_dev: f64,
    /// `max_abs_dev / |main_term|`; `None` when the main term vanishes.
    pub max_rel_dev: Option<f64>,
}

/// Totals of `w(n)` over `n ≤ N` split by `⌊n^c⌋ mod m`.
pub fn residue_counts(c: ExponentC, m: u64, n: u64, weight: Weight, cfg: &SieveConfig) -> Result<ResidueReport> {
    if m == 0 {
        return Err(invalid!("modulus must be positive"));
    }
    if n == 0 {
        return Err(invalid!("N must be at least 1"));
    }
    if m > 1 << 24 {
        return Err(resource!("modulus {m} exceeds the per-class table limit"));
    }
    let residue = move |x: u64| -> Result<usize> {
        Ok(match ps_floor_u128(x, c) {
            Some(v) => (v % m as u128) as usize,
            None => ps_residue(x, c, m)? as usize,
        })
    };
    let parts = arith::map_segments(1, n + 1, cfg, |t| -> Result<(Vec<i64>, Vec<CompensatedSum>, CompensatedSum)> {
        let mut ints = vec![0i64; m as usize];
        let mut reals = vec![CompensatedSum::new(); m as usize];
        let mut all = CompensatedSum::new();
        for x in t.lo()..t.hi() {
            match weight {
                Weight::Unit => ints[residue(x)?] += 1,
                Weight::Mobius => {
                    let mu = t.mobius(x);
                    if mu != 0 {
                        ints[residue(x)?] += mu as i64;
                    }
                }
                Weight::Mangoldt => {
                    let p = t.mangoldt_prime(x);
                    if p != 0 {
                        let v = (p as f64).ln();
                        reals[residue(x)?].add(v);
                        all.add(v);
                    }
                }
            }
        }
        Ok((ints, reals, all))
    })?;
    let mut ints = vec![0i64; m as usize];
    let mut reals = vec![CompensatedSum::new(); m as usize];
    let mut all = CompensatedSum::new();
    for p in parts {
        let (pi, pr, pa) = p?;
        for (acc, v) in ints.iter_mut().zip(pi) {
            *acc += v;
        }
        for (acc, v) in reals.iter_mut().zip(&pr) {
            acc.absorb(v);
        }
        all.absorb(&pa);
    }
    let (totals, exact, grand_total) = match weight {
        Weight::Mangoldt => (reals.iter().map(|s| s.value()).collect::<Vec<_>>(), None, all.value()),
        _ => (ints.iter().map(|&v| v as f64).collect(), Some(ints.clone()), ints.iter().sum::<i64>() as f64),
    };
    let main_term = grand_total / m as f64;
    let max_abs_dev = totals.iter().map(|t| (t - main_term).abs()).fold(0.0, f64::max);
    let max_rel_dev = (main_term != 0.0).then(|| max_abs_dev / main_term.abs());
    Ok(ResidueReport { c, m, n, weight, totals, exact, main_term, grand_total, max_abs_dev, max_rel_dev })
}

pub const POLY_MOD_LIMIT: u64 = 10_000_000;

#[derive(Debug, Clone, PartialEq)]
pub struct PolyModReport {
    pub q: u64,
    pub degree: usize,
    pub g: u64,
    /// Exact star discrepancy of `{P(n)/q}`, `0 ≤ n < q`.
    pub d_star: BigRational,
    /// `(q/g)^{−1/(d+1)}`, without the implied constant.
    pub bound: f64,
}

impl PolyModReport {
    /// `d_star / bound`: the constant the bound would need.
    pub fn implied_constant(&self) -> f64 {
        self.d_star.to_f64().unwrap_or(f64::NAN) / self.bound
    }
}

/// Star discrepancy of `{P(n)/q}` over one full period, in exact arithmetic.
pub fn poly_mod_discrepancy(p: &IntPolynomial, q: u64) -> Result<PolyModReport> {
    if q == 0 {
        return Err(invalid!("q must be positive"));
    }
    if p.degree() == 0 {
        return Err(invalid!("polynomial must have degree at least 1"));
    }
    if q > POLY_MOD_LIMIT {
        return Err(resource!("full-period scan limited to q <= {POLY_MOD_LIMIT}, got {q}"));
    }
    let mut counts = vec![0u64; q as usize];
    for n in 0..q {
        counts[p.eval_mod(n, q) as usize] += 1;
    }
    // With residues sorted, the i-th point (1-based) r gives max(i − r, r − i + 1) in units of 1/q.
    let mut best: i64 = 0;
    let mut i: i64 = 0;
    for (r, &cnt) in counts.iter().enumerate() {
        if cnt == 0 {
            continue;
        }
        let r = r as i64;
        let first = i + 1;
        let last = i + cnt as i64;
        best = best.max(last - r).max(r - first + 1);
        i = last;
    }
    let g = p.coeffs()[1..]
        .iter()
        .fold(q as i64, |g, &z| g.gcd(&z))
        .unsigned_abs();
    let d = p.degree();
    Ok(PolyModReport {
        q,
        degree: d,
        g,
        d_star: BigRational::new(BigInt::from(best), BigInt::from(q)),
        bound: (q as f64 / g as f64).powf(-1.0 / (d as f64 + 1.0)),
    })
}

pub const HIGH_DIGIT_LIMIT: u64 = 10_000_000;

#[derive(Debug, Clone, PartialEq)]
pub struct HighDigitReport {
    pub k: u32,
    pub lambda: u32,
    pub mu: u32,
    pub w: u64,
    pub count: u64,
    /// `k^{λ(1 − r/(d+1))}` with `r = log_k(p₀)`, `p₀` the least prime factor of `k`.
    pub threshold: f64,
}

fn least_prime_factor(k: u64) -> u64 {
    (2..).take_while(|p| p * p <= k).find(|p| k.is_multiple_of(*p)).unwrap_or(k)
}

fn high_digit_params(k: u32, lambda: u32, mu: u32) -> Result<(u64, u64)> {
    if k < 2 {
        return Err(invalid!("base must be at least 2"));
    }
    if mu >= lambda {
        return Err(invalid!("need μ < λ, got μ = {mu}, λ = {lambda}"));
    }
    let kl = (k as u64)
        .checked_pow(lambda)
        .filter(|&v| v <= HIGH_DIGIT_LIMIT)
        .ok_or_else(|| invalid!("k^λ = {k}^{lambda} exceeds {HIGH_DIGIT_LIMIT}"))?;
    Ok((kl, (k as u64).pow(mu)))
}

/// Checks `k ≥ 2`, `μ < λ`, `k^λ ≤ 10^7` and, if given, `w < k^{λ−μ}`.
pub fn check_high_digit_args(k: u32, lambda: u32, mu: u32, w: Option<u64>) -> Result<()> {
    let (kl, km) = high_digit_params(k, lambda, mu)?;
    match w {
        Some(w) if w >= kl / km => Err(invalid!("w = {w} must be below k^(λ−μ) = {}", kl / km)),
        _ => Ok(()),
    }
}

pub fn high_digit_threshold(k: u32, lambda: u32, degree: usize) -> f64 {
    let r = (least_prime_factor(k as u64) as f64).ln() / (k as f64).ln();
    (k as f64).powf(lambda as f64 * (1.0 - r / (degree as f64 + 1.0)))
}

/// `#{n < k^λ : P(n) ∈ [w]_μ^λ}` where membership means the base-`k` digits
/// of `P(n) mod k^λ` at positions `μ..λ` spell `w`.
pub fn high_digit_counts(p: &IntPolynomial, k: u32, lambda: u32, mu: u32, w: u64) -> Result<HighDigitReport> {
    check_high_digit_args(k, lambda, mu, Some(w))?;
    let (kl, km) = high_digit_params(k, lambda, mu)?;
    let count = (0..kl).filter(|&n| p.eval_mod(n, kl) / km == w).count() as u64;
    Ok(HighDigitReport { k, lambda, mu, w, count, threshold: high_digit_threshold(k, lambda, p.degree()) })
}

/// Counts for every `w < k^{λ−μ}` in one scan.
pub fn high_digit_histogram(p: &IntPolynomial, k: u32, lambda: u32, mu: u32) -> Result<Vec<u64>> {
    let (kl, km) = high_digit_params(k, lambda, mu)?;
    let mut hist = vec![0u64; (kl / km) as usize];
    for n in 0..kl {
        hist[(p.eval_mod(n, kl) / km) as usize] += 1;
    }
    Ok(hist)
}

#[derive(Debug, Clone, PartialEq)]
pub enum DichotomyOutcome {
    /// `d_star < δ`.
    Equidistributed { d_star: f64 },
    /// `sup_j N^j ‖ℓ β_j‖ ≤ threshold` for the returned `ℓ`.
    Rational { d_star: f64, ell: u64, witness: BigRational },
    /// Neither branch certified within `ℓ ≤ ℓ_max`.
    Unresolved { d_star: f64, best_ell: u64, best_witness: BigRational },
}

/// Distance to the nearest integer.
pub fn dist_to_int(x: &BigRational) -> BigRational {
    let f = frac_rational(x);
    let g = BigRational::one() - &f;
    if f < g {
        f
    } else {
        g
    }
}

/// Either `{Σ β_j n^j}` (`1 ≤ n ≤ N`) has discrepancy below `δ`, or some
/// `ℓ ≤ ℓ_max` makes every `N^j ‖ℓ β_j‖` at most `threshold` (default `1/δ`).
pub fn weyl_dichotomy(
    betas: &[BigRational],
    n: u64,
    delta: f64,
    ell_max: u64,
    threshold: Option<BigRational>,
) -> Result<DichotomyOutcome> {
    if betas.is_empty() {
        return Err(invalid!("need at least one coefficient"));
    }
    if !(delta > 0.0 && delta < 1.0) {
        return Err(invalid!("δ must lie in (0, 1), got {delta}"));
    }
    if ell_max == 0 || n == 0 {
        return Err(invalid!("ℓ_max and N must be positive"));
    }
    let reduced: Vec<BigRational> = betas.iter().map(frac_rational).collect();
    let points: Vec<f64> = (1..=n)
        .into_par_iter()
        .map(|m| {
            let m = BigInt::from(m);
            let mut pw = m.clone();
            let mut acc = BigRational::zero();
            for b in &reduced {
                acc += b * BigRational::from_integer(pw.clone());
                pw *= &m;
            }
            frac_rational(&acc).to_f64().unwrap_or(0.0).clamp(0.0, 1.0 - f64::EPSILON / 2.0)
        })
        .collect();
    let d_star = star_discrepancy(&points)?;
    if d_star < delta {
        return Ok(DichotomyOutcome::Equidistributed { d_star });
    }
    let threshold = threshold.unwrap_or_else(|| crate::exactmath::f64_to_rational(1.0 / delta));
    let nn = BigInt::from(n);
    let witness = |ell: u64| -> BigRational {
        let l = BigRational::from_integer(BigInt::from(ell));
        let mut scale = nn.clone();
        let mut worst = BigRational::zero();
        for b in &reduced {
            let v = dist_to_int(&(&l * b)) * BigRational::from_integer(scale.clone());
            if v > worst {
                worst = v;
            }
            scale *= &nn;
        }
        worst
    };
    let (best_ell, best_witness) = (1..=ell_max)
        .map(|l| (l, witness(l)))
        .fold(None::<(u64, BigRational)>, |best, (l, w)| match best {
            Some((bl, bw)) if bw <= w => Some((bl, bw)),
            _ => Some((l, w)),
        })
        .expect("ℓ_max ≥ 1");
    if best_witness <= threshold {
        Ok(DichotomyOutcome::Rational { d_star, ell: best_ell, witness: best_witness })
    } else {
        Ok(DichotomyOutcome::Unresolved { d_star, best_ell, best_witness })
    }
}

/// Parses `"p/q"`, an integer, or a decimal (read exactly) as a rational.
pub fn parse_rational(s: &str) -> Result<BigRational> {
    let s = s.trim();
    let bad = || crate::Error::Parse(format!("cannot read `{s}` as a rational"));
    if let Some((a, b)) = s.split_once('/') {
        let a: BigInt = a.trim().parse().map_err(|_| bad())?;
        let b: BigInt = b.trim().parse().map_err(|_| bad())?;
        if b.is_zero() {
            return Err(bad());
        }
        return Ok(BigRational::new(a, b));
    }
    let (neg, body) = match s.strip_prefix('-') {
        Some(rest) => (true, rest),
        None => (false, s),
    };
    let (int, dec) = body.split_once('.').unwrap_or((body, ""));
    if int.is_empty() && dec.is_empty() {
        return Err(bad());
    }
    let digits = format!("{int}{dec}");
    if !digits.chars().all(|c| c.is_ascii_digit()) {
        return Err(bad());
    }
    let num: BigInt = digits.parse().map_err(|_| bad())?;
    let den = num_traits::pow(BigInt::from(10), dec.len());
    let v = BigRational::new(num, den);
    Ok(if neg { -v } else { v })
}
