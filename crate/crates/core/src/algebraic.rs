//! Exact arithmetic for cylinder weights.
//!
//! A node of length `d` in the binary tree has cylinder weight `2^(-s*d)`
//! where the dimension parameter `s = a/b` is rational.  Writing
//! `u = 2^(-1/b)`, every such weight is `u^(a*d)`, and `u^b = 1/2`, so sums
//! of cylinder weights live in the ring of values
//!
//! ```text
//!     2^(-e) * (c_0 + c_1*u + ... + c_{b-1}*u^(b-1)),    c_i integers.
//! ```
//!
//! [`RootWeight`] stores exactly that: a scale `e` and `b` arbitrary-size
//! coefficients.  The powers `1, u, ..., u^(b-1)` are linearly independent
//! over the rationals (the reversal of `2x^b - 1` is Eisenstein at 2), so a
//! canonical form with `e = 0` or some odd coefficient is unique and the
//! zero test is syntactic.  Signs of nonzero values are decided by refining
//! a dyadic enclosure of `u` until the interval evaluation of the
//! coefficient polynomial excludes zero, which must happen because the value
//! is not zero.  Nothing in this module rounds.

use num_bigint::BigInt;
use num_integer::Integer;
use num_traits::{One, Signed, Zero};
use std::cmp::Ordering;
use std::collections::HashMap;
use std::fmt;
use std::ops::{Add, Neg, Sub};
use std::str::FromStr;
use std::sync::{Mutex, OnceLock};

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum AlgebraicError {
    #[error("dimension parameter {num}/{den} is not strictly between 0 and 1")]
    ExponentRange { num: u32, den: u32 },
    #[error("dimension parameter has zero denominator")]
    ZeroDenominator,
    #[error("cannot parse {input:?} as a fraction a/b")]
    ParseExponent { input: String },
    #[error("modulus must be at least 1")]
    ZeroModulus,
    #[error("expected {modulus} coefficients, got {got}")]
    CoefficientCount { modulus: u32, got: usize },
}

/// A rational dimension parameter `s = a/b` in lowest terms, `0 < a < b`.
///
/// The denominator also fixes the working root `u = 2^(-1/b)` for every
/// weight produced under this parameter.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct SIndex {
    num: u32,
    den: u32,
}

impl SIndex {
    pub fn new(num: u32, den: u32) -> Result<Self, AlgebraicError> {
        if den == 0 {
            return Err(AlgebraicError::ZeroDenominator);
        }
        if num == 0 || num >= den {
            return Err(AlgebraicError::ExponentRange { num, den });
        }
        let g = num.gcd(&den);
        Ok(SIndex {
            num: num / g,
            den: den / g,
        })
    }

    pub fn num(&self) -> u32 {
        self.num
    }

    pub fn den(&self) -> u32 {
        self.den
    }
}

impl PartialOrd for SIndex {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for SIndex {
    fn cmp(&self, other: &Self) -> Ordering {
        let left = self.num as u64 * other.den as u64;
        let right = other.num as u64 * self.den as u64;
        left.cmp(&right)
    }
}

impl fmt::Display for SIndex {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}/{}", self.num, self.den)
    }
}

impl FromStr for SIndex {
    type Err = AlgebraicError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let bad = || AlgebraicError::ParseExponent {
            input: s.to_string(),
        };
        let (a, b) = s.split_once('/').ok_or_else(bad)?;
        let num: u32 = a.trim().parse().map_err(|_| bad())?;
        let den: u32 = b.trim().parse().map_err(|_| bad())?;
        SIndex::new(num, den)
    }
}

/// A dyadic rational `num / 2^exp`, stored with `num` odd or `exp = 0`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Dyadic {
    num: BigInt,
    exp: u64,
}

impl Dyadic {
    pub fn new(num: BigInt, exp: u64) -> Self {
        let mut d = Dyadic { num, exp };
        d.normalize();
        d
    }

    pub fn from_int(n: impl Into<BigInt>) -> Self {
        Dyadic {
            num: n.into(),
            exp: 0,
        }
    }

    fn normalize(&mut self) {
        if self.num.is_zero() {
            self.exp = 0;
            return;
        }
        let tz = self.num.trailing_zeros().unwrap_or(0);
        let k = tz.min(self.exp);
        if k > 0 {
            self.num >>= k;
            self.exp -= k;
        }
    }

    pub fn num(&self) -> &BigInt {
        &self.num
    }

    pub fn exp(&self) -> u64 {
        self.exp
    }

    pub fn is_zero(&self) -> bool {
        self.num.is_zero()
    }

    fn aligned(&self, other: &Dyadic) -> (BigInt, BigInt, u64) {
        let exp = self.exp.max(other.exp);
        let a = &self.num << (exp - self.exp) as usize;
        let b = &other.num << (exp - other.exp) as usize;
        (a, b, exp)
    }

    pub fn midpoint(&self, other: &Dyadic) -> Dyadic {
        let (a, b, exp) = self.aligned(other);
        Dyadic::new(a + b, exp + 1)
    }
}

impl PartialOrd for Dyadic {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for Dyadic {
    fn cmp(&self, other: &Self) -> Ordering {
        let (a, b, _) = self.aligned(other);
        a.cmp(&b)
    }
}

impl Sub<&Dyadic> for &Dyadic {
    type Output = Dyadic;

    fn sub(self, rhs: &Dyadic) -> Dyadic {
        let (a, b, exp) = self.aligned(rhs);
        Dyadic::new(a - b, exp)
    }
}

impl fmt::Display for Dyadic {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.exp == 0 {
            write!(f, "{}", self.num)
        } else {
            write!(f, "{}/2^{}", self.num, self.exp)
        }
    }
}

/// A closed interval with dyadic endpoints, `lo <= hi`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct DyadicInterval {
    pub lo: Dyadic,
    pub hi: Dyadic,
}

impl DyadicInterval {
    pub fn contains(&self, other: &DyadicInterval) -> bool {
        self.lo <= other.lo && other.hi <= self.hi
    }

    pub fn width(&self) -> Dyadic {
        &self.hi - &self.lo
    }
}

/// `floor(2^bits * 2^(-1/modulus))`, i.e. the integer part of the scaled
/// root, computed as the floor `modulus`-th root of `2^(modulus*bits - 1)`.
fn root_floor(modulus: u32, bits: u64) -> BigInt {
    static CACHE: OnceLock<Mutex<HashMap<(u32, u64), BigInt>>> = OnceLock::new();
    let cache = CACHE.get_or_init(Default::default);
    if let Some(v) = cache.lock().unwrap().get(&(modulus, bits)) {
        return v.clone();
    }
    let shift = (modulus as u64 * bits - 1) as usize;
    let v = (BigInt::one() << shift).nth_root(modulus);
    cache
        .lock()
        .unwrap()
        .insert((modulus, bits), v.clone());
    v
}

/// An exact element `2^(-scale) * sum_i coeffs[i] * u^i` with
/// `u = 2^(-1/modulus)`.
///
/// Values with different moduli are compatible: arithmetic and comparison
/// lift both operands to the least common multiple of the moduli, under
/// which `u_b = u_lcm^(lcm/b)`.  Equality and ordering are by value, not by
/// representation.
#[derive(Debug, Clone)]
pub struct RootWeight {
    modulus: u32,
    scale: u64,
    coeffs: Vec<BigInt>,
}

impl RootWeight {
    pub fn zero(modulus: u32) -> Self {
        assert!(modulus >= 1, "modulus must be at least 1");
        RootWeight {
            modulus,
            scale: 0,
            coeffs: vec![BigInt::zero(); modulus as usize],
        }
    }

    pub fn integer(n: impl Into<BigInt>) -> Self {
        RootWeight {
            modulus: 1,
            scale: 0,
            coeffs: vec![n.into()],
        }
    }

    pub fn one() -> Self {
        RootWeight::integer(1)
    }

    pub fn from_parts(
        modulus: u32,
        scale: u64,
        coeffs: Vec<BigInt>,
    ) -> Result<Self, AlgebraicError> {
        if modulus == 0 {
            return Err(AlgebraicError::ZeroModulus);
        }
        if coeffs.len() != modulus as usize {
            return Err(AlgebraicError::CoefficientCount {
                modulus,
                got: coeffs.len(),
            });
        }
        let mut w = RootWeight {
            modulus,
            scale,
            coeffs,
        };
        w.canonicalize();
        Ok(w)
    }

    /// The weight `2^(-s*depth)` of a single node of length `depth`.
    pub fn cylinder(s: SIndex, depth: u64) -> Self {
        let total = s.num as u128 * depth as u128;
        let b = s.den as u128;
        let q = (total / b) as u64;
        let r = (total % b) as usize;
        let mut coeffs = vec![BigInt::zero(); s.den as usize];
        coeffs[r] = BigInt::one();
        RootWeight {
            modulus: s.den,
            scale: q,
            coeffs,
        }
    }

    pub fn modulus(&self) -> u32 {
        self.modulus
    }

    pub fn scale(&self) -> u64 {
        self.scale
    }

    pub fn coeffs(&self) -> &[BigInt] {
        &self.coeffs
    }

    pub fn is_zero(&self) -> bool {
        self.coeffs.iter().all(|c| c.is_zero())
    }

    fn canonicalize(&mut self) {
        if self.is_zero() {
            self.scale = 0;
            return;
        }
        if self.scale == 0 {
            return;
        }
        let tz = self
            .coeffs
            .iter()
            .filter(|c| !c.is_zero())
            .map(|c| c.trailing_zeros().unwrap_or(0))
            .min()
            .unwrap_or(0);
        let k = tz.min(self.scale);
        if k > 0 {
            for c in &mut self.coeffs {
                *c >>= k;
            }
            self.scale -= k;
        }
    }

    /// Rewrites the value over a modulus that is a multiple of the current
    /// one; `u_b = u_m^(m/b)` sends coefficient `i` to slot `i*(m/b)`.
    fn lift(&self, modulus: u32) -> RootWeight {
        debug_assert!(modulus % self.modulus == 0);
        if modulus == self.modulus {
            return self.clone();
        }
        let step = (modulus / self.modulus) as usize;
        let mut coeffs = vec![BigInt::zero(); modulus as usize];
        for (i, c) in self.coeffs.iter().enumerate() {
            coeffs[i * step] = c.clone();
        }
        RootWeight {
            modulus,
            scale: self.scale,
            coeffs,
        }
    }

    fn common(a: &RootWeight, b: &RootWeight) -> (RootWeight, RootWeight) {
        let l = (a.modulus as u64).lcm(&(b.modulus as u64));
        let l = u32::try_from(l).expect("modulus lcm exceeds u32");
        (a.lift(l), b.lift(l))
    }

    /// Multiplies by the integer `k`.
    pub fn scalar_mul(&self, k: &BigInt) -> RootWeight {
        let mut out = RootWeight {
            modulus: self.modulus,
            scale: self.scale,
            coeffs: self.coeffs.iter().map(|c| c * k).collect(),
        };
        out.canonicalize();
        out
    }

    /// Multiplies by `2^k`.
    pub fn times_pow2(&self, k: u64) -> RootWeight {
        let mut out = self.clone();
        if k <= out.scale {
            out.scale -= k;
        } else {
            let extra = (k - out.scale) as usize;
            out.scale = 0;
            for c in &mut out.coeffs {
                *c <<= extra;
            }
        }
        out.canonicalize();
        out
    }

    /// Numerator bounds of an enclosure at working precision `bits`: the
    /// value lies in `[lo, hi] / 2^den` where `den = bits*(modulus-1) +
    /// scale`.  Bounds for each power come from one floor root; positive
    /// coefficients take the lower power bound for `lo`, negative ones the
    /// upper, and symmetrically for `hi`.
    fn raw_bounds(&self, bits: u64) -> (BigInt, BigInt, u64) {
        let b = self.modulus as u64;
        let den = bits * (b - 1) + self.scale;
        let mut lo = BigInt::zero();
        let mut hi = BigInt::zero();
        let needs_root = self.coeffs.iter().skip(1).any(|c| !c.is_zero());
        let v = if needs_root {
            root_floor(self.modulus, bits)
        } else {
            BigInt::zero()
        };
        let w = &v + 1;
        let mut v_pow = BigInt::one();
        let mut w_pow = BigInt::one();
        for (i, c) in self.coeffs.iter().enumerate() {
            if i > 0 {
                v_pow *= &v;
                w_pow *= &w;
            }
            if c.is_zero() {
                continue;
            }
            let shift = (bits * (b - 1 - i as u64)) as usize;
            let low_pow = if c.is_negative() { &w_pow } else { &v_pow };
            let high_pow = if c.is_negative() { &v_pow } else { &w_pow };
            lo += (c * low_pow) << shift;
            hi += (c * high_pow) << shift;
        }
        (lo, hi, den)
    }

    /// The sign of the value, decided exactly.
    pub fn sign(&self) -> Ordering {
        if self.is_zero() {
            return Ordering::Equal;
        }
        if self.coeffs.iter().skip(1).all(|c| c.is_zero()) {
            return if self.coeffs[0].is_negative() {
                Ordering::Less
            } else {
                Ordering::Greater
            };
        }
        let mut bits = 32;
        loop {
            let (lo, hi, _) = self.raw_bounds(bits);
            if lo.is_positive() {
                return Ordering::Greater;
            }
            if hi.is_negative() {
                return Ordering::Less;
            }
            bits *= 2;
        }
    }

    /// A dyadic enclosure of width at most `2^(-bits)`.
    pub fn interval(&self, bits: u64) -> DyadicInterval {
        if self.coeffs.iter().skip(1).all(|c| c.is_zero()) {
            let point = Dyadic::new(self.coeffs[0].clone(), self.scale);
            return DyadicInterval {
                lo: point.clone(),
                hi: point,
            };
        }
        let mut work = bits.max(1);
        loop {
            let (lo, hi, den) = self.raw_bounds(work);
            let diff = &hi - &lo;
            let narrow_enough = if den >= bits {
                diff <= (BigInt::one() << (den - bits) as usize)
            } else {
                (diff << (bits - den) as usize) <= BigInt::one()
            };
            if narrow_enough {
                return DyadicInterval {
                    lo: Dyadic::new(lo, den),
                    hi: Dyadic::new(hi, den),
                };
            }
            work *= 2;
        }
    }

    /// A decimal approximation to `digits` fractional digits, correct to
    /// within one unit in the last place.
    pub fn decimal(&self, digits: usize) -> String {
        if self.is_zero() {
            return if digits == 0 {
                "0".to_string()
            } else {
                format!("0.{}", "0".repeat(digits))
            };
        }
        let bits = digits as u64 * 4 + 8;
        let iv = self.interval(bits);
        let mid = iv.lo.midpoint(&iv.hi);
        let scaled = mid.num() * BigInt::from(10u32).pow(digits as u32);
        let exp = mid.exp() as usize;
        let rounded = if exp == 0 {
            scaled
        } else {
            (scaled + (BigInt::one() << (exp - 1))) >> exp
        };
        let sign = if rounded.is_negative() { "-" } else { "" };
        let abs = rounded.magnitude();
        let ten_d = num_bigint::BigUint::from(10u32).pow(digits as u32);
        let (int_part, frac_part) = abs.div_rem(&ten_d);
        if digits == 0 {
            format!("{}{}", sign, int_part)
        } else {
            format!(
                "{}{}.{:0>width$}",
                sign,
                int_part,
                frac_part.to_string(),
                width = digits
            )
        }
    }
}

impl PartialEq for RootWeight {
    fn eq(&self, other: &Self) -> bool {
        let (a, b) = RootWeight::common(self, other);
        a.scale == b.scale && a.coeffs == b.coeffs
    }
}

impl Eq for RootWeight {}

impl PartialOrd for RootWeight {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for RootWeight {
    fn cmp(&self, other: &Self) -> Ordering {
        (self - other).sign()
    }
}

impl Add<&RootWeight> for &RootWeight {
    type Output = RootWeight;

    fn add(self, rhs: &RootWeight) -> RootWeight {
        let (mut a, mut b) = RootWeight::common(self, rhs);
        let scale = a.scale.max(b.scale);
        let sa = (scale - a.scale) as usize;
        let sb = (scale - b.scale) as usize;
        for (ca, cb) in a.coeffs.iter_mut().zip(b.coeffs.iter_mut()) {
            if sa > 0 {
                *ca <<= sa;
            }
            if sb > 0 {
                *cb <<= sb;
            }
            *ca += &*cb;
        }
        a.scale = scale;
        a.canonicalize();
        a
    }
}

impl Sub<&RootWeight> for &RootWeight {
    type Output = RootWeight;

    fn sub(self, rhs: &RootWeight) -> RootWeight {
        self + &(-rhs)
    }
}

impl Neg for &RootWeight {
    type Output = RootWeight;

    fn neg(self) -> RootWeight {
        RootWeight {
            modulus: self.modulus,
            scale: self.scale,
            coeffs: self.coeffs.iter().map(|c| -c).collect(),
        }
    }
}

impl Add for RootWeight {
    type Output = RootWeight;

    fn add(self, rhs: RootWeight) -> RootWeight {
        &self + &rhs
    }
}

impl Sub for RootWeight {
    type Output = RootWeight;

    fn sub(self, rhs: RootWeight) -> RootWeight {
        &self - &rhs
    }
}

impl Neg for RootWeight {
    type Output = RootWeight;

    fn neg(self) -> RootWeight {
        -&self
    }
}

impl fmt::Display for RootWeight {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.is_zero() {
            return write!(f, "0");
        }
        let mut poly = String::new();
        let mut first = true;
        for (i, c) in self.coeffs.iter().enumerate() {
            if c.is_zero() {
                continue;
            }
            let mag = c.magnitude();
            let body = if i == 0 {
                mag.to_string()
            } else {
                let base = if i == 1 {
                    "u".to_string()
                } else {
                    format!("u^{}", i)
                };
                if mag.is_one() {
                    base
                } else {
                    format!("{}*{}", mag, base)
                }
            };
            if first {
                if c.is_negative() {
                    poly.push('-');
                }
                first = false;
            } else {
                poly.push_str(if c.is_negative() { " - " } else { " + " });
            }
            poly.push_str(&body);
        }
        let single = self.coeffs.iter().filter(|c| !c.is_zero()).count() == 1;
        if self.scale == 0 {
            write!(f, "{}", poly)
        } else if single && poly == "1" {
            write!(f, "2^-{}", self.scale)
        } else if single && !poly.starts_with('-') {
            write!(f, "2^-{} * {}", self.scale, poly)
        } else {
            write!(f, "2^-{} * ({})", self.scale, poly)
        }
    }
}
