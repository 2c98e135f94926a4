//! Midpoint–radius ("ball") arithmetic over dyadic midpoints.
//!
//! A [`BallReal`] is the closed interval `[mid - rad, mid + rad]` where `mid`
//! is an exact dyadic rational rounded to a working precision and `rad` is an
//! upward-rounded magnitude. Every operation returns a ball that contains the
//! exact result of the operation applied to any points of the input balls.

use std::cmp::Ordering;
use std::collections::HashMap;
use std::fmt;
use std::sync::{Mutex, OnceLock};

use num_bigint::{BigInt, BigUint};
use num_integer::Integer;
use num_rational::BigRational;
use num_traits::{One, Signed, ToPrimitive, Zero};

use crate::error::{Error, Result};

/// Default working precision in bits.
pub const DEFAULT_PRECISION: u32 = 128;
/// Default ceiling for automatic precision escalation.
pub const DEFAULT_MAX_PRECISION: u32 = 4096;

const MAG_BITS: u32 = 30;

/// An exact dyadic rational `man * 2^exp`.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct Dyadic {
    man: BigInt,
    exp: i64,
}

impl Dyadic {
    pub fn zero() -> Self {
        Dyadic { man: BigInt::zero(), exp: 0 }
    }

    pub fn new(man: impl Into<BigInt>, exp: i64) -> Self {
        Dyadic { man: man.into(), exp }
    }

    pub fn from_int(v: impl Into<BigInt>) -> Self {
        Dyadic::new(v, 0)
    }

    /// Exact conversion; panics on non-finite input.
    pub fn from_f64(x: f64) -> Self {
        assert!(x.is_finite(), "non-finite float {x}");
        if x == 0.0 {
            return Dyadic::zero();
        }
        let bits = x.to_bits();
        let sign = if bits >> 63 == 1 { -1 } else { 1 };
        let biased = ((bits >> 52) & 0x7ff) as i64;
        let frac = bits & ((1u64 << 52) - 1);
        let (man, exp) = if biased == 0 {
            (frac, -1074)
        } else {
            (frac | (1u64 << 52), biased - 1075)
        };
        Dyadic::new(BigInt::from(man) * sign, exp)
    }

    pub fn mantissa(&self) -> &BigInt {
        &self.man
    }

    pub fn exponent(&self) -> i64 {
        self.exp
    }

    pub fn is_zero(&self) -> bool {
        self.man.is_zero()
    }

    pub fn is_negative(&self) -> bool {
        self.man.is_negative()
    }

    fn aligned(&self, other: &Dyadic) -> (BigInt, BigInt, i64) {
        match self.exp.cmp(&other.exp) {
            Ordering::Equal => (self.man.clone(), other.man.clone(), self.exp),
            Ordering::Greater => (
                &self.man << (self.exp - other.exp) as usize,
                other.man.clone(),
                other.exp,
            ),
            Ordering::Less => (
                self.man.clone(),
                &other.man << (other.exp - self.exp) as usize,
                self.exp,
            ),
        }
    }

    pub fn add(&self, other: &Dyadic) -> Dyadic {
        if self.is_zero() {
            return other.clone();
        }
        if other.is_zero() {
            return self.clone();
        }
        let (a, b, exp) = self.aligned(other);
        Dyadic::new(a + b, exp)
    }

    pub fn sub(&self, other: &Dyadic) -> Dyadic {
        self.add(&other.neg())
    }

    pub fn neg(&self) -> Dyadic {
        Dyadic::new(-&self.man, self.exp)
    }

    pub fn abs(&self) -> Dyadic {
        Dyadic::new(self.man.abs(), self.exp)
    }

    pub fn mul(&self, other: &Dyadic) -> Dyadic {
        Dyadic::new(&self.man * &other.man, self.exp + other.exp)
    }

    pub fn mul_2exp(&self, k: i64) -> Dyadic {
        Dyadic::new(self.man.clone(), self.exp + k)
    }

    pub fn floor(&self) -> BigInt {
        if self.exp >= 0 {
            &self.man << self.exp as usize
        } else {
            self.man.div_floor(&(BigInt::one() << (-self.exp) as usize))
        }
    }

    pub fn ceil(&self) -> BigInt {
        -self.neg().floor()
    }

    /// Bit length of the magnitude, i.e. `|self| < 2^log2_ceil()`.
    pub fn log2_ceil(&self) -> i64 {
        self.man.bits() as i64 + self.exp
    }

    /// Truncate toward zero to at most `prec` significant bits; returns the
    /// truncated value and an upper bound on the discarded part.
    pub fn round_to(&self, prec: u32) -> (Dyadic, Mag) {
        let bits = self.man.bits();
        if bits <= prec as u64 {
            return (self.clone(), Mag::ZERO);
        }
        let shift = bits - prec as u64;
        let (sign, mag) = self.man.clone().into_parts();
        let kept = &mag >> shift as usize;
        let exact = (&kept << shift as usize) == mag;
        let man = BigInt::from_biguint(sign, kept);
        let exp = self.exp + shift as i64;
        let err = if exact { Mag::ZERO } else { Mag::pow2(exp) };
        (Dyadic::new(man, exp), err)
    }

    pub fn to_f64(&self) -> f64 {
        if self.is_zero() {
            return 0.0;
        }
        let bits = self.man.bits();
        let (m, e) = if bits > 60 {
            let s = bits - 60;
            ((&self.man >> s as usize).to_f64().unwrap_or(0.0), self.exp + s as i64)
        } else {
            (self.man.to_f64().unwrap_or(0.0), self.exp)
        };
        ldexp(m, e)
    }

    pub fn to_rational(&self) -> BigRational {
        if self.exp >= 0 {
            BigRational::from_integer(&self.man << self.exp as usize)
        } else {
            BigRational::new(self.man.clone(), BigInt::one() << (-self.exp) as usize)
        }
    }

    /// Decimal expansion truncated toward negative infinity to `digits` places.
    pub fn to_decimal(&self, digits: usize) -> String {
        let scaled = self.mul(&Dyadic::from_int(BigInt::from(10u32).pow(digits as u32)));
        let q = scaled.floor();
        let neg = q.is_negative();
        let s = q.abs().to_string();
        let s = if s.len() <= digits {
            format!("{}{}", "0".repeat(digits + 1 - s.len()), s)
        } else {
            s
        };
        let (int, frac) = s.split_at(s.len() - digits);
        let sign = if neg { "-" } else { "" };
        if digits == 0 {
            format!("{sign}{int}")
        } else {
            format!("{sign}{int}.{frac}")
        }
    }
}

impl Ord for Dyadic {
    fn cmp(&self, other: &Self) -> Ordering {
        if self.is_zero() || other.is_zero() {
            return self.man.sign().cmp(&other.man.sign()).then_with(|| {
                if self.is_zero() {
                    BigInt::zero().cmp(&other.man)
                } else {
                    self.man.cmp(&BigInt::zero())
                }
            });
        }
        let (a, b, _) = self.aligned(other);
        a.cmp(&b)
    }
}

impl PartialOrd for Dyadic {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

pub(crate) fn ldexp(mut x: f64, mut e: i64) -> f64 {
    while e > 1000 {
        x *= 2f64.powi(1000);
        e -= 1000;
        if x.is_infinite() {
            return x;
        }
    }
    while e < -1000 {
        x *= 2f64.powi(-1000);
        e += 1000;
        if x == 0.0 {
            return x;
        }
    }
    x * 2f64.powi(e as i32)
}

/// A nonnegative magnitude `man * 2^exp` with a short mantissa, used for
/// radii. All operations round up.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct Mag {
    man: u64,
    exp: i64,
}

impl Mag {
    pub const ZERO: Mag = Mag { man: 0, exp: 0 };

    pub fn pow2(exp: i64) -> Mag {
        Mag { man: 1, exp }
    }

    fn from_u128_up(man: u128, exp: i64) -> Mag {
        if man == 0 {
            return Mag::ZERO;
        }
        let bits = 128 - man.leading_zeros();
        if bits <= MAG_BITS {
            return Mag { man: man as u64, exp };
        }
        let s = bits - MAG_BITS;
        let mut m = (man >> s) as u64;
        if (u128::from(m) << s) != man {
            m += 1;
        }
        Mag { man: m, exp: exp + i64::from(s) }
    }

    pub fn from_u64(v: u64) -> Mag {
        Mag::from_u128_up(u128::from(v), 0)
    }

    fn from_biguint(v: &BigUint, exp: i64, up: bool) -> Mag {
        let bits = v.bits();
        if bits <= MAG_BITS as u64 {
            return Mag { man: v.to_u64().unwrap_or(0), exp };
        }
        let s = bits - MAG_BITS as u64;
        let kept = v >> s as usize;
        let mut m = kept.to_u64().unwrap_or(0);
        if up && (&kept << s as usize) != *v {
            m += 1;
        }
        Mag::from_u128_up(u128::from(m), exp + s as i64)
    }

    /// Upper bound for `|d|`.
    pub fn from_dyadic_up(d: &Dyadic) -> Mag {
        Mag::from_biguint(d.man.magnitude(), d.exp, true)
    }

    /// Lower bound for `|d|`.
    pub fn from_dyadic_down(d: &Dyadic) -> Mag {
        Mag::from_biguint(d.man.magnitude(), d.exp, false)
    }

    pub fn from_f64_up(x: f64) -> Mag {
        let x = x.abs();
        if x == 0.0 {
            return Mag::ZERO;
        }
        let d = Dyadic::from_f64(x);
        Mag::from_dyadic_up(&d)
    }

    pub fn is_zero(&self) -> bool {
        self.man == 0
    }

    pub fn add(self, o: Mag) -> Mag {
        if self.is_zero() {
            return o;
        }
        if o.is_zero() {
            return self;
        }
        let (big, small) = if self.exp >= o.exp { (self, o) } else { (o, self) };
        let diff = big.exp - small.exp;
        if diff > 62 {
            // `small < 2^(30 + small.exp) <= 2^big.exp`: one unit of `big` covers it.
            return Mag::from_u128_up(u128::from(big.man) + 1, big.exp);
        }
        let sum = (u128::from(big.man) << diff) + u128::from(small.man);
        Mag::from_u128_up(sum, small.exp)
    }

    pub fn mul(self, o: Mag) -> Mag {
        if self.is_zero() || o.is_zero() {
            return Mag::ZERO;
        }
        Mag::from_u128_up(u128::from(self.man) * u128::from(o.man), self.exp + o.exp)
    }

    pub fn mul_2exp(self, k: i64) -> Mag {
        if self.is_zero() {
            self
        } else {
            Mag { man: self.man, exp: self.exp + k }
        }
    }

    /// Upper bound of `self / o`; `o` must be nonzero.
    pub fn div(self, o: Mag) -> Mag {
        assert!(!o.is_zero(), "division of a magnitude by zero");
        if self.is_zero() {
            return Mag::ZERO;
        }
        let num = u128::from(self.man) << 64;
        let q = num / u128::from(o.man) + 1;
        Mag::from_u128_up(q, self.exp - o.exp - 64)
    }

    pub fn to_dyadic(self) -> Dyadic {
        Dyadic::new(BigInt::from(self.man), self.exp)
    }

    pub fn to_f64(self) -> f64 {
        ldexp(self.man as f64, self.exp)
    }

    /// `self < 2^log2_ceil()`.
    pub fn log2_ceil(self) -> i64 {
        if self.is_zero() {
            i64::MIN
        } else {
            i64::from(64 - self.man.leading_zeros()) + self.exp
        }
    }
}

impl PartialOrd for Mag {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.to_dyadic().cmp(&other.to_dyadic()))
    }
}

/// Arbitrary-precision real with an explicit error radius.
#[derive(Clone, Debug)]
pub struct BallReal {
    mid: Dyadic,
    rad: Mag,
    prec: u32,
}

impl BallReal {
    pub fn new(mid: Dyadic, rad: Mag, prec: u32) -> Self {
        let (mid, err) = mid.round_to(prec);
        BallReal { mid, rad: rad.add(err), prec }
    }

    pub fn zero(prec: u32) -> Self {
        BallReal { mid: Dyadic::zero(), rad: Mag::ZERO, prec }
    }

    pub fn from_int(v: impl Into<BigInt>, prec: u32) -> Self {
        BallReal::new(Dyadic::from_int(v), Mag::ZERO, prec)
    }

    pub fn from_dyadic(d: Dyadic, prec: u32) -> Self {
        BallReal::new(d, Mag::ZERO, prec)
    }

    pub fn from_f64(x: f64, prec: u32) -> Self {
        BallReal::new(Dyadic::from_f64(x), Mag::ZERO, prec.max(53))
    }

    pub fn from_rational(q: &BigRational, prec: u32) -> Self {
        let num = q.numer();
        let den = q.denom();
        if den.is_one() {
            return BallReal::from_int(num.clone(), prec);
        }
        let shift = (prec as i64 + den.bits() as i64 - num.bits() as i64 + 2).max(0);
        let scaled = num << shift as usize;
        let (quot, rem) = scaled.div_rem(den);
        let rad = if rem.is_zero() { Mag::ZERO } else { Mag::pow2(-shift) };
        BallReal::new(Dyadic::new(quot, -shift), rad, prec)
    }

    /// Enclosure of the closed interval `[lo, hi]`.
    pub fn from_endpoints(lo: &Dyadic, hi: &Dyadic, prec: u32) -> Self {
        let (lo, hi) = if lo <= hi { (lo, hi) } else { (hi, lo) };
        let mid = lo.add(hi).mul_2exp(-1);
        let half = hi.sub(lo).mul_2exp(-1);
        BallReal::new(mid, Mag::from_dyadic_up(&half), prec)
    }

    /// Enclosure of `floor(sqrt(v * 4^k)) * 2^-k` style square roots of integers.
    pub fn sqrt_int(v: &BigInt, prec: u32) -> Result<Self> {
        if v.is_negative() {
            return Err(Error::InvalidParameter(format!("square root of negative {v}")));
        }
        let k = prec as i64 + 2;
        let scaled = v << (2 * k) as usize;
        let s = scaled.sqrt();
        let exact = &s * &s == scaled;
        // sqrt lies in [s, s + 1) * 2^-k.
        let lo = Dyadic::new(s.clone(), -k);
        let ball = if exact {
            BallReal::from_dyadic(lo, prec)
        } else {
            BallReal::from_endpoints(&lo, &Dyadic::new(s + 1, -k), prec)
        };
        Ok(ball)
    }

    pub fn mid(&self) -> &Dyadic {
        &self.mid
    }

    pub fn rad(&self) -> Mag {
        self.rad
    }

    pub fn prec(&self) -> u32 {
        self.prec
    }

    pub fn with_prec(&self, prec: u32) -> Self {
        BallReal::new(self.mid.clone(), self.rad, prec)
    }

    pub fn is_exact(&self) -> bool {
        self.rad.is_zero()
    }

    pub fn lower(&self) -> Dyadic {
        self.mid.sub(&self.rad.to_dyadic())
    }

    pub fn upper(&self) -> Dyadic {
        self.mid.add(&self.rad.to_dyadic())
    }

    pub fn to_f64(&self) -> f64 {
        self.mid.to_f64()
    }

    pub fn rad_f64(&self) -> f64 {
        self.rad.to_f64()
    }

    /// Upper bound of `|x|` over the ball.
    pub fn abs_upper(&self) -> Mag {
        Mag::from_dyadic_up(&self.mid).add(self.rad)
    }

    fn combine_prec(&self, other: &BallReal) -> u32 {
        self.prec.max(other.prec)
    }

    pub fn add(&self, other: &BallReal) -> BallReal {
        BallReal::new(self.mid.add(&other.mid), self.rad.add(other.rad), self.combine_prec(other))
    }

    pub fn sub(&self, other: &BallReal) -> BallReal {
        BallReal::new(self.mid.sub(&other.mid), self.rad.add(other.rad), self.combine_prec(other))
    }

    pub fn neg(&self) -> BallReal {
        BallReal { mid: self.mid.neg(), rad: self.rad, prec: self.prec }
    }

    pub fn mul(&self, other: &BallReal) -> BallReal {
        let ma = Mag::from_dyadic_up(&self.mid);
        let mb = Mag::from_dyadic_up(&other.mid);
        let rad = ma.mul(other.rad).add(mb.mul(self.rad)).add(self.rad.mul(other.rad));
        BallReal::new(self.mid.mul(&other.mid), rad, self.combine_prec(other))
    }

    pub fn sqr(&self) -> BallReal {
        self.mul(self)
    }

    pub fn mul_int(&self, k: impl Into<BigInt>) -> BallReal {
        let k: BigInt = k.into();
        let km = Mag::from_dyadic_up(&Dyadic::from_int(k.clone()));
        BallReal::new(self.mid.mul(&Dyadic::from_int(k)), self.rad.mul(km), self.prec)
    }

    pub fn mul_2exp(&self, k: i64) -> BallReal {
        BallReal { mid: self.mid.mul_2exp(k), rad: self.rad.mul_2exp(k), prec: self.prec }
    }

    /// Division by a nonzero integer.
    pub fn div_int(&self, q: impl Into<BigInt>) -> BallReal {
        let q: BigInt = q.into();
        assert!(!q.is_zero(), "division by zero");
        let shift = (self.prec as i64 + q.bits() as i64 - self.mid.man.bits() as i64 + 2).max(0);
        let scaled = &self.mid.man << shift as usize;
        let (quot, rem) = scaled.div_rem(&q);
        let round = if rem.is_zero() { Mag::ZERO } else { Mag::pow2(self.mid.exp - shift) };
        let qm = Mag::from_dyadic_down(&Dyadic::from_int(q));
        BallReal::new(Dyadic::new(quot, self.mid.exp - shift), self.rad.div(qm).add(round), self.prec)
    }

    /// Division; `None` when the divisor ball contains zero.
    pub fn div(&self, other: &BallReal) -> Option<BallReal> {
        if other.contains_zero() {
            return None;
        }
        let prec = self.combine_prec(other);
        let b_low = other.mid.abs().sub(&other.rad.to_dyadic());
        let b_low = Mag::from_dyadic_down(&b_low);
        let b_mid_low = Mag::from_dyadic_down(&other.mid);
        let a_up = Mag::from_dyadic_up(&self.mid);
        let b_up = Mag::from_dyadic_up(&other.mid);
        let rad = self
            .rad
            .mul(b_up)
            .add(a_up.mul(other.rad))
            .div(b_mid_low.mul(b_low));
        let shift = (prec as i64 + other.mid.man.bits() as i64 - self.mid.man.bits() as i64 + 2).max(0);
        let scaled = &self.mid.man << shift as usize;
        let (quot, rem) = scaled.div_rem(&other.mid.man);
        let exp = self.mid.exp - shift - other.mid.exp;
        let round = if rem.is_zero() { Mag::ZERO } else { Mag::pow2(exp) };
        Some(BallReal::new(Dyadic::new(quot, exp), rad.add(round), prec))
    }

    pub fn abs(&self) -> BallReal {
        match self.sign() {
            Some(Ordering::Less) => self.neg(),
            Some(_) => self.clone(),
            None => {
                let hi = self.mid.abs().add(&self.rad.to_dyadic());
                BallReal::from_endpoints(&Dyadic::zero(), &hi, self.prec)
            }
        }
    }

    /// Sign of every point in the ball, when they all agree.
    pub fn sign(&self) -> Option<Ordering> {
        if self.rad.is_zero() {
            return Some(self.mid.cmp(&Dyadic::zero()));
        }
        let r = self.rad.to_dyadic();
        if self.mid > r {
            Some(Ordering::Greater)
        } else if self.mid.neg() > r {
            Some(Ordering::Less)
        } else {
            None
        }
    }

    /// Decided ordering: `Less`/`Greater` only when the enclosures are disjoint
    /// (or both exact).
    pub fn cmp_decided(&self, other: &BallReal) -> Option<Ordering> {
        let diff = BallReal {
            mid: self.mid.sub(&other.mid),
            rad: self.rad.add(other.rad),
            prec: u32::MAX,
        };
        match diff.sign() {
            Some(Ordering::Equal) if !diff.rad.is_zero() => None,
            s => s,
        }
    }

    pub fn contains_zero(&self) -> bool {
        self.contains(&Dyadic::zero())
    }

    pub fn contains(&self, x: &Dyadic) -> bool {
        self.lower() <= *x && *x <= self.upper()
    }

    /// True when `other`'s interval lies inside this one.
    pub fn contains_ball(&self, other: &BallReal) -> bool {
        self.lower() <= other.lower() && other.upper() <= self.upper()
    }

    pub fn overlaps(&self, other: &BallReal) -> bool {
        !(self.upper() < other.lower() || other.upper() < self.lower())
    }

    pub fn floor(&self) -> Option<BigInt> {
        let lo = self.lower().floor();
        let hi = self.upper().floor();
        (lo == hi).then_some(lo)
    }

    pub fn floor_mid(&self) -> BigInt {
        self.mid.floor()
    }

    /// Subtract `floor(mid)`, landing the midpoint in `[0, 1)`.
    pub fn frac_mid(&self) -> BallReal {
        let k = self.mid.floor();
        if k.is_zero() {
            return self.clone();
        }
        BallReal::new(self.mid.sub(&Dyadic::from_int(k)), self.rad, self.prec)
    }

    /// Enclosure of `min(self, other)`.
    pub fn min(&self, other: &BallReal) -> BallReal {
        match self.cmp_decided(other) {
            Some(Ordering::Less) | Some(Ordering::Equal) => self.clone(),
            Some(Ordering::Greater) => other.clone(),
            None => {
                let lo = self.lower().min(other.lower());
                let hi = self.upper().min(other.upper());
                BallReal::from_endpoints(&lo, &hi, self.combine_prec(other))
            }
        }
    }

    /// Enclosure of `max(self, other)`.
    pub fn max(&self, other: &BallReal) -> BallReal {
        self.neg().min(&other.neg()).neg()
    }

    /// Convex hull of the two balls.
    pub fn hull(&self, other: &BallReal) -> BallReal {
        let lo = self.lower().min(other.lower());
        let hi = self.upper().max(other.upper());
        BallReal::from_endpoints(&lo, &hi, self.combine_prec(other))
    }

    /// `cos(2πx)` and `sin(2πx)`.
    pub fn cos_sin_2pi(&self) -> (BallReal, BallReal) {
        let prec = self.prec;
        let work = prec + 24;
        let unit = || BallReal::from_endpoints(&Dyadic::from_int(-1), &Dyadic::from_int(1), prec);
        if self.rad.log2_ceil() > -4 {
            return (unit(), unit());
        }
        // Periodicity: subtracting the nearest integer is exact.
        let k = self.mid.add(&Dyadic::new(1, -1)).floor();
        let r = BallReal::new(self.mid.sub(&Dyadic::from_int(k)), self.rad, work);
        let theta = pi(work).mul(&r).mul_2exp(1);
        // |theta| <= pi + small, so 4 bounds it.
        let mut term = BallReal::from_int(1, work);
        let mut cos = BallReal::zero(work);
        let mut sin = BallReal::zero(work);
        let mut j: u32 = 0;
        loop {
            match j % 4 {
                0 => cos = cos.add(&term),
                1 => sin = sin.add(&term),
                2 => cos = cos.sub(&term),
                _ => sin = sin.sub(&term),
            }
            j += 1;
            term = term.mul(&theta).div_int(j);
            if j > 8 && term.abs_upper().log2_ceil() < -(work as i64) - 2 {
                break;
            }
        }
        // Remaining terms are bounded by a geometric series of ratio <= 1/2.
        let tail = term.abs_upper().mul_2exp(1);
        let cos = BallReal::new(cos.mid, cos.rad.add(tail), prec);
        let sin = BallReal::new(sin.mid, sin.rad.add(tail), prec);
        (cos, sin)
    }

    /// Decimal rendering of the midpoint.
    pub fn to_decimal(&self, digits: usize) -> String {
        self.mid.to_decimal(digits)
    }
}

impl fmt::Display for BallReal {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "[{} +/- {:.3e}]", self.mid.to_f64(), self.rad.to_f64())
    }
}

fn atan_inv(n: u64, prec: u32) -> BallReal {
    // atan(1/n) = sum (-1)^k / ((2k+1) n^(2k+1))
    let n2 = BigInt::from(n) * BigInt::from(n);
    let mut power = BallReal::from_int(1, prec).div_int(n);
    let mut sum = BallReal::zero(prec);
    let mut k: u64 = 0;
    loop {
        let term = power.div_int(2 * k + 1);
        sum = if k.is_multiple_of(2) { sum.add(&term) } else { sum.sub(&term) };
        power = power.div_int(n2.clone());
        k += 1;
        if power.abs_upper().log2_ceil() < -(prec as i64) - 4 {
            break;
        }
    }
    BallReal::new(sum.mid, sum.rad.add(power.abs_upper()), prec)
}

/// Enclosure of π at `prec` bits (Machin's formula), cached per precision.
pub fn pi(prec: u32) -> BallReal {
    static CACHE: OnceLock<Mutex<HashMap<u32, BallReal>>> = OnceLock::new();
    let cache = CACHE.get_or_init(|| Mutex::new(HashMap::new()));
    if let Some(v) = cache.lock().expect("pi cache poisoned").get(&prec) {
        return v.clone();
    }
    let work = prec + 16;
    let v = atan_inv(5, work)
        .mul_int(16)
        .sub(&atan_inv(239, work).mul_int(4))
        .with_prec(prec);
    cache.lock().expect("pi cache poisoned").insert(prec, v.clone());
    v
}

/// Precision schedule for computations that may need to retry with more bits.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct PrecisionPolicy {
    pub bits: u32,
    pub max_bits: u32,
}

impl Default for PrecisionPolicy {
    fn default() -> Self {
        PrecisionPolicy { bits: DEFAULT_PRECISION, max_bits: DEFAULT_MAX_PRECISION }
    }
}

impl PrecisionPolicy {
    pub fn new(bits: u32) -> Self {
        PrecisionPolicy { bits, max_bits: DEFAULT_MAX_PRECISION.max(bits) }
    }

    /// Run `f` at increasing precision (doubling) until it stops failing with
    /// a precision-limited error or the ceiling is reached.
    pub fn escalate<T>(&self, mut f: impl FnMut(u32) -> Result<T>) -> Result<T> {
        let mut bits = self.bits;
        loop {
            match f(bits) {
                Err(e) if e.is_precision_limited() && bits < self.max_bits => {
                    bits = (bits * 2).min(self.max_bits);
                }
                other => return other,
            }
        }
    }
}

pub(crate) fn rational_floor(q: &BigRational) -> BigInt {
    q.numer().div_floor(q.denom())
}
