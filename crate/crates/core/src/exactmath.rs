//! Exact arithmetic around `⌊n^c⌋` for rational exponents `c = p/q`.
//!
//! Everything here is computed with big integers. Irrational quantities
//! (roots, Taylor coefficients) are returned as [`Enclosure`]s: dyadic
//! rational intervals that are guaranteed to contain the true value.

use std::fmt;
use std::str::FromStr;

use num_bigint::{BigInt, BigUint};
use num_integer::Integer;
use num_rational::BigRational;
use num_traits::{One, Signed, ToPrimitive, Zero};

use crate::error::{invalid, resource, Error, Result};

/// Largest working precision (in bits) the refinement loops may reach.
pub const MAX_PRECISION_BITS: u32 = 4096;

/// A non-integer exponent `c = p/q > 1` held in lowest terms.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct ExponentC {
    p: u32,
    q: u32,
}

impl ExponentC {
    /// Builds `p/q`, reducing to lowest terms. Rejects integers and `c <= 1`.
    pub fn new(p: u32, q: u32) -> Result<Self> {
        if q == 0 {
            return Err(invalid!("exponent denominator must be positive"));
        }
        let g = p.gcd(&q);
        let (p, q) = (p / g, q / g);
        if q < 2 {
            return Err(invalid!("exponent {p}/{q} is an integer; c must be non-integer"));
        }
        if p <= q {
            return Err(invalid!("exponent {p}/{q} must exceed 1"));
        }
        Ok(ExponentC { p, q })
    }

    pub fn numer(&self) -> u32 {
        self.p
    }

    pub fn denom(&self) -> u32 {
        self.q
    }

    /// `d = ⌊c⌋`, the degree of the Taylor model.
    pub fn degree(&self) -> u32 {
        self.p / self.q
    }

    pub fn to_f64(&self) -> f64 {
        self.p as f64 / self.q as f64
    }

    pub fn to_rational(&self) -> BigRational {
        BigRational::new(BigInt::from(self.p), BigInt::from(self.q))
    }
}

impl fmt::Display for ExponentC {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}/{}", self.p, self.q)
    }
}

impl FromStr for ExponentC {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let (a, b) = s
            .trim()
            .split_once('/')
            .ok_or_else(|| Error::Parse(format!("exponent `{s}` is not of the form p/q")))?;
        let p = a
            .trim()
            .parse::<u32>()
            .map_err(|e| Error::Parse(format!("exponent numerator `{a}`: {e}")))?;
        let q = b
            .trim()
            .parse::<u32>()
            .map_err(|e| Error::Parse(format!("exponent denominator `{b}`: {e}")))?;
        ExponentC::new(p, q)
    }
}

/// Integer `q`-th root: the unique `r` with `r^q <= x < (r+1)^q`.
pub fn iroot(x: &BigUint, q: u32) -> Result<BigUint> {
    if q == 0 {
        return Err(invalid!("root index must be positive"));
    }
    Ok(x.nth_root(q))
}

/// `u128` fast path of [`iroot`]. Returns `None` only if an intermediate
/// power would overflow, in which case callers fall back to big integers.
pub fn iroot_u128(x: u128, q: u32) -> Option<u128> {
    if q == 0 {
        return None;
    }
    if x < 2 || q == 1 {
        return Some(x);
    }
    let guess = (x as f64).powf(1.0 / q as f64);
    // Start strictly above the root; integer Newton then descends to the floor.
    let mut r = (guess * (1.0 + 1e-9)) as u128 + 2;
    while r.checked_pow(q).is_some_and(|v| v <= x) {
        r = r.checked_mul(2)?;
    }
    loop {
        let rq1 = r.checked_pow(q - 1)?;
        let y = ((q as u128 - 1).checked_mul(r)? + x / rq1) / q as u128;
        if y >= r {
            break;
        }
        r = y;
    }
    Some(r)
}

/// `⌊n^c⌋` in exact integer arithmetic.
pub fn ps_floor(n: u64, c: ExponentC) -> BigUint {
    if let Some(v) = ps_floor_u128(n, c) {
        return BigUint::from(v);
    }
    BigUint::from(n).pow(c.p).nth_root(c.q)
}

/// `⌊n^c⌋` when `n^p` fits in a `u128`.
pub fn ps_floor_u128(n: u64, c: ExponentC) -> Option<u128> {
    let x = (n as u128).checked_pow(c.p)?;
    iroot_u128(x, c.q)
}

/// `⌊n^c⌋ mod m`.
pub fn ps_residue(n: u64, c: ExponentC, m: u64) -> Result<u64> {
    if m == 0 {
        return Err(invalid!("modulus must be positive"));
    }
    Ok(match ps_floor_u128(n, c) {
        Some(v) => (v % m as u128) as u64,
        None => (ps_floor(n, c) % m).to_u64().expect("residue below modulus"),
    })
}

/// Generalized binomial coefficient `c(c-1)...(c-t+1)/t!`.
pub fn gen_binom(c: ExponentC, t: u32) -> BigRational {
    let c = c.to_rational();
    let mut acc = BigRational::one();
    for j in 0..t {
        let j = BigRational::from_integer(BigInt::from(j));
        acc = acc * (&c - &j) / (&j + BigRational::one());
    }
    acc
}

/// A closed rational interval `[lo, hi]` known to contain some real value.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Enclosure {
    lo: BigRational,
    hi: BigRational,
}

impl Enclosure {
    pub fn new(lo: BigRational, hi: BigRational) -> Result<Self> {
        if lo > hi {
            return Err(invalid!("enclosure lower end exceeds upper end"));
        }
        Ok(Enclosure { lo, hi })
    }

    pub fn exact(v: BigRational) -> Self {
        Enclosure { lo: v.clone(), hi: v }
    }

    pub fn lo(&self) -> &BigRational {
        &self.lo
    }

    pub fn hi(&self) -> &BigRational {
        &self.hi
    }

    pub fn width(&self) -> BigRational {
        &self.hi - &self.lo
    }

    pub fn midpoint(&self) -> BigRational {
        (&self.lo + &self.hi) / BigRational::from_integer(BigInt::from(2))
    }

    pub fn contains(&self, v: &BigRational) -> bool {
        &self.lo <= v && v <= &self.hi
    }

    /// True when `other` lies inside `self`.
    pub fn contains_enclosure(&self, other: &Enclosure) -> bool {
        self.lo <= other.lo && other.hi <= self.hi
    }

    pub fn width_at_most_pow2(&self, prec: u32) -> bool {
        self.width() <= pow2_inv(prec)
    }

    pub fn add(&self, other: &Enclosure) -> Enclosure {
        Enclosure { lo: &self.lo + &other.lo, hi: &self.hi + &other.hi }
    }

    pub fn sub(&self, other: &Enclosure) -> Enclosure {
        Enclosure { lo: &self.lo - &other.hi, hi: &self.hi - &other.lo }
    }

    pub fn scale(&self, k: &BigRational) -> Enclosure {
        let a = &self.lo * k;
        let b = &self.hi * k;
        if a <= b {
            Enclosure { lo: a, hi: b }
        } else {
            Enclosure { lo: b, hi: a }
        }
    }

    /// Intersects with `[floor, ∞)`; valid only when the enclosed value is
    /// known to be at least `floor`.
    fn clamp_below(mut self, floor: &BigRational) -> Enclosure {
        if &self.lo < floor {
            self.lo = floor.clone();
        }
        if self.hi < self.lo {
            self.hi = self.lo.clone();
        }
        self
    }

    pub fn to_f64(&self) -> f64 {
        self.midpoint().to_f64().unwrap_or(f64::NAN)
    }
}

impl fmt::Display for Enclosure {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "[{:.17e}, {:.17e}]",
            self.lo.to_f64().unwrap_or(f64::NAN),
            self.hi.to_f64().unwrap_or(f64::NAN)
        )
    }
}

fn pow2_inv(bits: u32) -> BigRational {
    BigRational::new(BigInt::one(), BigInt::one() << bits as usize)
}

/// Encloses `base^(num/q)` to absolute width at most `2^-bits`
/// (and exactly when the root is rational).
pub fn enclose_rational_power(base: &BigUint, num: i64, q: u32, bits: u32) -> Result<Enclosure> {
    if q == 0 {
        return Err(invalid!("root index must be positive"));
    }
    if num < 0 && base.is_zero() {
        return Err(invalid!("zero base with negative exponent"));
    }
    let x = base.pow(num.unsigned_abs() as u32);
    let scaled = x << (q as usize * bits as usize);
    let r = scaled.nth_root(q);
    let den = BigInt::one() << bits as usize;
    let lo = BigRational::new(BigInt::from(r.clone()), den.clone());
    let hi = if r.pow(q) == scaled {
        lo.clone()
    } else {
        BigRational::new(BigInt::from(r + 1u32), den)
    };
    if num >= 0 {
        Ok(Enclosure { lo, hi })
    } else {
        // base >= 1, so lo >= 1 and the reciprocal narrows the interval.
        Ok(Enclosure { lo: hi.recip(), hi: lo.recip() })
    }
}

fn refine<F>(prec: u32, mut eval: F) -> Result<Enclosure>
where
    F: FnMut(u32) -> Result<(Enclosure, bool)>,
{
    let mut bits = prec.saturating_add(16).max(32);
    loop {
        let (enc, ok) = eval(bits)?;
        if ok && enc.width_at_most_pow2(prec) {
            return Ok(enc);
        }
        if bits >= MAX_PRECISION_BITS {
            return Err(resource!(
                "enclosure did not reach 2^-{prec} within {MAX_PRECISION_BITS} bits"
            ));
        }
        bits = (bits * 2).min(MAX_PRECISION_BITS);
    }
}

/// Taylor coefficient `A_t = binom(c, t) n^(c-t)` as an enclosure of width
/// at most `2^-prec`. Accepts `t <= d + 1`; the `d + 1` term is the leading
/// factor of the Taylor remainder.
pub fn taylor_coeff(n: u64, c: ExponentC, t: u32, prec: u32) -> Result<Enclosure> {
    if n == 0 {
        return Err(invalid!("taylor coefficients need n >= 1"));
    }
    let d = c.degree();
    if t > d + 1 {
        return Err(invalid!("coefficient index {t} exceeds d + 1 = {}", d + 1));
    }
    let binom = gen_binom(c, t);
    let num = c.p as i64 - (t as i64) * c.q as i64;
    let base = BigUint::from(n);
    refine(prec, |bits| {
        let extra = binom.abs().to_integer().bits() as u32 + 1;
        let root = enclose_rational_power(&base, num, c.q, bits + extra)?;
        Ok((root.scale(&binom), true))
    })
}

/// Taylor remainder `f_h = (n+h)^c - Σ_{t<=d} A_t h^t`, enclosed to width at
/// most `2^-prec`. The remainder is non-negative, and for `n >= 2, h >= 1`
/// the refinement continues until the lower end is strictly positive.
pub fn taylor_error(n: u64, h: u64, c: ExponentC, prec: u32) -> Result<Enclosure> {
    if n == 0 {
        return Err(invalid!("taylor remainder needs n >= 1"));
    }
    if h == 0 {
        return Ok(Enclosure::exact(BigRational::zero()));
    }
    let d = c.degree();
    let need_positive = n >= 2;
    let shifted = BigUint::from(n) + BigUint::from(h);
    let base = BigUint::from(n);
    let coeffs: Vec<(BigRational, i64)> = (0..=d)
        .map(|t| (gen_binom(c, t), c.p as i64 - t as i64 * c.q as i64))
        .collect();
    let zero = BigRational::zero();
    refine(prec, |bits| {
        let hb = BigInt::from(h);
        let mut acc = enclose_rational_power(&shifted, c.p as i64, c.q, bits + 4)?;
        for (t, (binom, num)) in coeffs.iter().enumerate() {
            let scale = binom * BigRational::from_integer(hb.pow(t as u32));
            let extra = scale.abs().to_integer().bits() as u32 + 4 + d;
            let term = enclose_rational_power(&base, *num, c.q, bits + extra)?.scale(&scale);
            acc = acc.sub(&term);
        }
        let acc = acc.clamp_below(&zero);
        let ok = !need_positive || acc.lo() > &zero;
        Ok((acc, ok))
    })
}

/// `{a · n^c}` computed from the exact integer `⌊n^c · 2^bits⌋`; the absolute
/// error is at most `|a| · 2^-bits` plus one rounding of the final division.
pub fn frac_scaled_power(n: u64, c: ExponentC, a: f64, bits: u32) -> f64 {
    if a == 0.0 || n == 0 {
        return 0.0;
    }
    let (mant, exp) = decompose_f64(a);
    let scaled = BigUint::from(n).pow(c.p) << (c.q as usize * bits as usize);
    let r = BigInt::from(scaled.nth_root(c.q));
    // a · n^c ≈ mant · r · 2^(exp - bits)
    let shift = bits as i64 - exp as i64;
    if shift <= 0 {
        return 0.0;
    }
    let modulus = BigInt::one() << shift as usize;
    let prod = BigInt::from(mant) * r;
    let rem = prod.mod_floor(&modulus);
    ratio_to_f64(&rem, shift as u64)
}

/// `{n^c / m}` to absolute accuracy `2^-bits / m`.
pub fn frac_power_over(n: u64, c: ExponentC, m: u64, bits: u32) -> f64 {
    let scaled = BigUint::from(n).pow(c.p) << (c.q as usize * bits as usize);
    let r = scaled.nth_root(c.q);
    let modulus = BigUint::from(m) << bits as usize;
    let rem = r % &modulus;
    let num = BigInt::from(rem);
    // rem / (m · 2^bits)
    ratio_to_f64(&num, bits as u64) / m as f64
}

fn ratio_to_f64(num: &BigInt, shift: u64) -> f64 {
    // num / 2^shift with num in [0, 2^shift · k); keep the top 64 bits.
    let nb = num.bits();
    if nb == 0 {
        return 0.0;
    }
    let drop = nb.saturating_sub(64);
    let top = (num >> drop as usize).to_u64().unwrap_or(u64::MAX) as f64;
    top * 2f64.powi(drop as i32 - shift as i32)
}

/// Splits a finite `f64` into `(mantissa, exponent)` with `x = mantissa · 2^exponent`.
pub(crate) fn decompose_f64(x: f64) -> (i64, i32) {
    let bits = x.to_bits();
    let sign = if bits >> 63 == 0 { 1i64 } else { -1 };
    let exp = ((bits >> 52) & 0x7ff) as i32;
    let frac = (bits & ((1u64 << 52) - 1)) as i64;
    if exp == 0 {
        (sign * frac, -1074)
    } else {
        (sign * (frac | (1i64 << 52)), exp - 1075)
    }
}

/// Exact rational value of a finite `f64`.
pub fn f64_to_rational(x: f64) -> BigRational {
    let (m, e) = decompose_f64(x);
    if e >= 0 {
        BigRational::from_integer(BigInt::from(m) << e as usize)
    } else {
        BigRational::new(BigInt::from(m), BigInt::one() << (-e) as usize)
    }
}

/// Floor of a rational as a big integer.
pub(crate) fn floor_rational(x: &BigRational) -> BigInt {
    x.numer().div_floor(x.denom())
}

/// Fractional part `{x}` of a rational.
pub(crate) fn frac_rational(x: &BigRational) -> BigRational {
    x - BigRational::from_integer(floor_rational(x))
}
