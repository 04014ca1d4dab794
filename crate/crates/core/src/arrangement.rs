//! The strip model for words of `⌊(n+h)^c⌋ mod m`: strips in coefficient
//! space, exact word enumeration for `d = 1`, Monte Carlo sampling for
//! general `d`, the cell-count bound and the Vandermonde identity.

use std::collections::{BTreeMap, BTreeSet};

use num_bigint::{BigInt, BigUint};
use num_rational::BigRational;
use num_traits::{One, Signed, ToPrimitive, Zero};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::error::{invalid, resource, Result};
use crate::exactmath::{floor_rational, frac_rational, ExponentC};

pub type Word = Vec<u32>;

/// Largest `m·H²` accepted by [`enumerate_words_2d`].
pub const MAX_LINES_2D: u64 = 2000;

fn rat(n: i64, d: i64) -> BigRational {
    BigRational::new(BigInt::from(n), BigInt::from(d))
}

fn int(n: i64) -> BigRational {
    BigRational::from_integer(BigInt::from(n))
}

fn pow_rat(base: &BigRational, e: u32) -> BigRational {
    num_traits::pow(base.clone(), e as usize)
}

/// Exponents of the error family `E(κ₂, κ₃)` and the threshold `κ₁`.
///
/// `κ₂ = (d² + 7d + 4)/2`, which is the same number as `2d + 2 + (d² + 3d)/2`.
#[derive(Debug, Clone, PartialEq)]
pub struct ModelParams {
    pub d: u32,
    pub kappa1: BigRational,
    pub kappa2: BigRational,
    pub kappa3: BigRational,
}

impl ModelParams {
    /// Requires `c < d + 1`.
    pub fn new(d: u32, c: ExponentC) -> Result<Self> {
        let d_r = int(d as i64);
        let gap = &d_r + BigRational::one() - c.to_rational();
        if !gap.is_positive() {
            return Err(invalid!("need c < d + 1, got c = {c}, d = {d}"));
        }
        let k2num = int((d * d + 7 * d + 4) as i64);
        let kappa2 = &k2num / int(2);
        let kappa3 = int(d as i64 + 2);
        let k1 = &k2num / (int(2) * gap);
        let kappa1 = k1.max(int(d as i64 + 3));
        Ok(ModelParams { d, kappa1, kappa2, kappa3 })
    }

    /// `H^{−κ₂}`, the upper end for `ε`.
    pub fn eps_max(&self, h: u32) -> BigRational {
        let k2 = self.kappa2.to_integer().to_u32().expect("κ₂ is a small integer");
        pow_rat(&int(h as i64), k2).recip()
    }

    /// `H^{−κ₃}`, the bound for `|g_h|`.
    pub fn g_max(&self, h: u32) -> BigRational {
        let k3 = self.kappa3.to_integer().to_u32().expect("κ₃ is a small integer");
        pow_rat(&int(h as i64), k3).recip()
    }
}

/// `Σ_{i=0}^{d+1} C(m·H^{d+2}, i)`.
pub fn count_cells_bound(m: u64, h: u64, d: u32) -> Result<BigUint> {
    if m == 0 || h == 0 || d == 0 {
        return Err(invalid!("m, H and d must be at least 1"));
    }
    let lines = BigUint::from(m) * num_traits::pow(BigUint::from(h), d as usize + 2);
    let mut term = BigUint::one();
    let mut total = BigUint::one();
    for i in 0..=d {
        // C(L, i+1) = C(L, i) · (L − i)/(i + 1)
        if lines <= BigUint::from(i) {
            break;
        }
        term = term * (&lines - BigUint::from(i)) / BigUint::from(i + 1);
        total += &term;
    }
    Ok(total)
}

/// Error values `f_h = ε·h^{d+1}·(1 + g_h)`.
#[derive(Debug, Clone, PartialEq)]
pub struct ErrorModel {
    pub eps: BigRational,
    /// Empty means all `g_h = 0`.
    pub g: Vec<BigRational>,
}

impl ErrorModel {
    pub fn new(eps: BigRational, g: Vec<BigRational>) -> Result<Self> {
        if eps.is_negative() {
            return Err(invalid!("ε must be nonnegative"));
        }
        if g.iter().any(|x| x <= &-BigRational::one()) {
            return Err(invalid!("need g_h > −1"));
        }
        Ok(ErrorModel { eps, g })
    }

    pub fn errors(&self, h_len: u32, d: u32) -> Result<Vec<BigRational>> {
        if !self.g.is_empty() && self.g.len() != h_len as usize {
            return Err(invalid!("g has {} entries, H = {h_len}", self.g.len()));
        }
        Ok((0..h_len)
            .map(|h| {
                let base = &self.eps * pow_rat(&int(h as i64), d + 1);
                match self.g.get(h as usize) {
                    Some(g) => base * (BigRational::one() + g),
                    None => base,
                }
            })
            .collect())
    }
}

/// `Σ_j x_j h^j`.
fn poly_at(point: &[BigRational], h: u32) -> BigRational {
    let hh = int(h as i64);
    point.iter().rev().fold(BigRational::zero(), |acc, x| acc * &hh + x)
}

/// `u_h = ⌊m·{x_0 + x_1 h + … + x_d h^d + f_h/m}⌋` for `h < H`.
pub fn word_at(point: &[BigRational], m: u32, h_len: u32, f: &[BigRational]) -> Word {
    let mr = int(m as i64);
    (0..h_len)
        .map(|h| {
            let mut v = poly_at(point, h);
            if let Some(fh) = f.get(h as usize) {
                v += fh / &mr;
            }
            floor_rational(&(frac_rational(&v) * &mr)).to_u32().expect("residue below m")
        })
        .collect()
}

/// A point of coefficient space with the word it induces.
#[derive(Debug, Clone, PartialEq)]
pub struct CellSample {
    pub point: Vec<BigRational>,
    pub word: Word,
}

impl CellSample {
    pub fn recompute(&self, m: u32, f: &[BigRational]) -> Word {
        word_at(&self.point, m, self.word.len() as u32, f)
    }

    /// The strips through this sample, with `z_h = ⌊P(h) + f_h/m⌋`.
    pub fn strips(&self, m: u32, f: &[BigRational]) -> Result<Vec<Strip>> {
        let mr = int(m as i64);
        let h_len = self.word.len() as u32;
        let z: Vec<u64> = (0..h_len)
            .map(|h| {
                let mut v = poly_at(&self.point, h);
                if let Some(fh) = f.get(h as usize) {
                    v += fh / &mr;
                }
                floor_rational(&v).to_u64().ok_or_else(|| invalid!("negative shift at h = {h}"))
            })
            .collect::<Result<_>>()?;
        let f = if f.is_empty() { vec![BigRational::zero(); h_len as usize] } else { f.to_vec() };
        strips_for_word(&self.word, &z, &f, m, self.point.len() as u32 - 1)
    }
}

/// `u/m + z − f/m ≤ x_0 + x_1 h + … + x_d h^d < (u+1)/m + z − f/m`.
#[derive(Debug, Clone, PartialEq)]
pub struct Strip {
    pub h: u32,
    pub m: u32,
    pub u: u32,
    pub z: u64,
    pub f: BigRational,
    pub d: u32,
}

impl Strip {
    pub fn lower(&self) -> BigRational {
        let m = int(self.m as i64);
        (int(self.u as i64) - &self.f) / &m + BigRational::from_integer(BigInt::from(self.z))
    }

    pub fn upper(&self) -> BigRational {
        self.lower() + int(self.m as i64).recip()
    }

    /// Lower boundary inclusive, upper exclusive.
    pub fn contains(&self, point: &[BigRational]) -> bool {
        debug_assert_eq!(point.len(), self.d as usize + 1);
        let v = poly_at(point, self.h);
        self.lower() <= v && v < self.upper()
    }
}

pub fn strips_for_word(u: &[u32], z: &[u64], f: &[BigRational], m: u32, d: u32) -> Result<Vec<Strip>> {
    if u.len() != z.len() || u.len() != f.len() {
        return Err(invalid!("length mismatch: u {}, z {}, f {}", u.len(), z.len(), f.len()));
    }
    if m == 0 {
        return Err(invalid!("m must be positive"));
    }
    let h_len = u.len() as u64;
    let z_max = h_len.checked_pow(d + 1).unwrap_or(u64::MAX);
    for (h, (&uh, &zh)) in u.iter().zip(z).enumerate() {
        if uh >= m {
            return Err(invalid!("u_{h} = {uh} is not below m = {m}"));
        }
        if zh > z_max {
            return Err(invalid!("z_{h} = {zh} exceeds H^(d+1) = {z_max}"));
        }
    }
    Ok(u.iter()
        .zip(z)
        .zip(f)
        .enumerate()
        .map(|(h, ((&u, &z), f))| Strip { h: h as u32, m, u, z, f: f.clone(), d })
        .collect())
}

pub fn in_all_strips(strips: &[Strip], point: &[BigRational]) -> bool {
    strips.iter().all(|s| s.contains(point))
}

/// Every word realized by `(x_0, x_1) ∈ [0,1)²` for `d = 1`, with one
/// witness point each.
///
/// Both coordinates act modulo 1. For fixed `x_1` the word is constant on
/// the arcs between the points `x_0 ≡ j/m − h x_1 − f_h/m`; the cyclic order
/// of those points only changes at values of `x_1` where two of them meet.
/// Sampling every such value, one interior point of each gap between them,
/// and then every breakpoint and arc midpoint in `x_0`, visits every face.
pub fn enumerate_words_2d(m: u32, h_len: u32, model: Option<&ErrorModel>) -> Result<BTreeMap<Word, CellSample>> {
    enumerate_words_2d_refined(m, h_len, model, 1)
}

/// [`enumerate_words_2d`] with `per_gap` interior samples in every gap.
pub fn enumerate_words_2d_refined(
    m: u32,
    h_len: u32,
    model: Option<&ErrorModel>,
    per_gap: u32,
) -> Result<BTreeMap<Word, CellSample>> {
    if m == 0 || h_len == 0 || per_gap == 0 {
        return Err(invalid!("m, H and the sampling density must be positive"));
    }
    let lines = m as u64 * (h_len as u64).pow(2);
    if lines > MAX_LINES_2D {
        return Err(resource!("m·H² = {lines} exceeds {MAX_LINES_2D}"));
    }
    let f = match model {
        Some(e) => e.errors(h_len, 1)?,
        None => vec![BigRational::zero(); h_len as usize],
    };
    let mr = int(m as i64);
    let off: Vec<BigRational> = f.iter().map(|x| x / &mr).collect();

    let mut crit: BTreeSet<BigRational> = BTreeSet::new();
    crit.insert(BigRational::zero());
    for h1 in 0..h_len {
        for h2 in h1 + 1..h_len {
            let dh = int((h2 - h1) as i64);
            for dj in -(m as i64) + 1..m as i64 {
                let base = rat(dj, m as i64) - (&off[h2 as usize] - &off[h1 as usize]);
                let z0 = floor_rational(&-&base).to_i64().expect("small shift");
                for z in z0..=z0 + (h2 - h1) as i64 + 1 {
                    let x = (&base + int(z)) / &dh;
                    if !x.is_negative() && x < BigRational::one() {
                        crit.insert(x);
                    }
                }
            }
        }
    }
    let xs1 = refine_cycle(&crit.into_iter().collect::<Vec<_>>(), per_gap);

    let found: Vec<BTreeMap<Word, CellSample>> = xs1
        .par_iter()
        .map(|x1| {
            let mut bps: BTreeSet<BigRational> = BTreeSet::new();
            for h in 0..h_len {
                let hx = int(h as i64) * x1 + &off[h as usize];
                for j in 0..m {
                    bps.insert(frac_rational(&(rat(j as i64, m as i64) - &hx)));
                }
            }
            let mut out = BTreeMap::new();
            for x0 in refine_cycle(&bps.into_iter().collect::<Vec<_>>(), per_gap) {
                let point = vec![x0, x1.clone()];
                let word = word_at(&point, m, h_len, &f);
                out.entry(word.clone()).or_insert(CellSample { point, word });
            }
            out
        })
        .collect();
    let mut all = BTreeMap::new();
    for part in found {
        for (w, s) in part {
            all.entry(w).or_insert(s);
        }
    }
    Ok(all)
}

/// The sorted points of `[0,1)` plus `per_gap` evenly spaced interior points
/// of every gap, the last gap wrapping around to `first + 1`.
fn refine_cycle(sorted: &[BigRational], per_gap: u32) -> Vec<BigRational> {
    let mut out = Vec::with_capacity(sorted.len() * (per_gap as usize + 1));
    let steps = int(per_gap as i64 + 1);
    for (i, a) in sorted.iter().enumerate() {
        out.push(a.clone());
        let b = match sorted.get(i + 1) {
            Some(b) => b.clone(),
            None => &sorted[0] + BigRational::one(),
        };
        let gap = (&b - a) / &steps;
        for k in 1..=per_gap {
            out.push(frac_rational(&(a + &gap * int(k as i64))));
        }
    }
    out
}

fn uniform_unit(rng: &mut ChaCha8Rng) -> BigRational {
    BigRational::new(BigInt::from(rng.gen::<u64>()), BigInt::one() << 64)
}

fn uniform_open_unit(rng: &mut ChaCha8Rng) -> BigRational {
    loop {
        let v = rng.gen::<u64>();
        if v != 0 {
            return BigRational::new(BigInt::from(v), BigInt::one() << 64);
        }
    }
}

fn sample_rng(seed: u64, i: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(i);
    rng
}

/// Words from `samples` random points of `[0,1)^{d+1}` with `d = ⌊c⌋`, each
/// with its own `ε ∈ (0, H^{−κ₂})` and `g_h ∈ [−H^{−κ₃}, H^{−κ₃}]`.
/// Sample `i` depends only on `(seed, i)`.
pub fn sample_words(c: ExponentC, m: u32, h_len: u32, samples: u64, seed: u64) -> Result<BTreeMap<Word, CellSample>> {
    let params = ModelParams::new(c.degree(), c)?;
    let (eps_max, g_max) = (params.eps_max(h_len), params.g_max(h_len));
    sample_generic(params.d, m, h_len, samples, seed, |rng| {
        let eps = &eps_max * uniform_open_unit(rng);
        let g = (0..h_len).map(|_| (int(2) * uniform_unit(rng) - BigRational::one()) * &g_max).collect();
        Some(ErrorModel { eps, g })
    })
}

/// Words from random points under one fixed error model (or none).
pub fn sample_words_fixed(
    d: u32,
    m: u32,
    h_len: u32,
    samples: u64,
    seed: u64,
    model: Option<&ErrorModel>,
) -> Result<BTreeMap<Word, CellSample>> {
    sample_generic(d, m, h_len, samples, seed, |_| model.cloned())
}

fn sample_generic<G>(d: u32, m: u32, h_len: u32, samples: u64, seed: u64, model: G) -> Result<BTreeMap<Word, CellSample>>
where
    G: Fn(&mut ChaCha8Rng) -> Option<ErrorModel> + Sync,
{
    if m == 0 || h_len == 0 || samples == 0 {
        return Err(invalid!("m, H and the sample count must be positive"));
    }
    let words: Vec<Result<(Word, CellSample)>> = (0..samples)
        .into_par_iter()
        .map(|i| {
            let mut rng = sample_rng(seed, i);
            let point: Vec<BigRational> = (0..=d).map(|_| uniform_unit(&mut rng)).collect();
            let f = match model(&mut rng) {
                Some(e) => e.errors(h_len, d)?,
                None => Vec::new(),
            };
            let word = word_at(&point, m, h_len, &f);
            Ok((word.clone(), CellSample { point, word }))
        })
        .collect();
    let mut out = BTreeMap::new();
    for r in words {
        let (w, s) = r?;
        out.entry(w).or_insert(s);
    }
    Ok(out)
}

#[derive(Debug, Clone, PartialEq)]
pub struct VandermondeCheck {
    pub lhs: BigRational,
    pub rhs: BigRational,
    pub equal: bool,
}

/// `Σ_j h_j^{n} / Π_{k≠j}(h_j − h_k)` against `Σ_j h_j`, `n` the tuple length.
pub fn vandermonde_identity_check(hs: &[i64]) -> Result<VandermondeCheck> {
    if hs.len() < 2 {
        return Err(invalid!("need at least two values"));
    }
    let distinct: BTreeSet<i64> = hs.iter().copied().collect();
    if distinct.len() != hs.len() {
        return Err(invalid!("values must be pairwise distinct"));
    }
    let n = hs.len();
    let mut lhs = BigRational::zero();
    for (j, &hj) in hs.iter().enumerate() {
        let num = num_traits::pow(BigInt::from(hj), n);
        let den = hs
            .iter()
            .enumerate()
            .filter(|&(k, _)| k != j)
            .fold(BigInt::one(), |acc, (_, &hk)| acc * BigInt::from(hj - hk));
        lhs += BigRational::new(num, den);
    }
    let rhs = BigRational::from_integer(hs.iter().map(|&h| BigInt::from(h)).sum());
    let equal = lhs == rhs;
    Ok(VandermondeCheck { lhs, rhs, equal })
}
