//! The devil's staircases `F` (right-continuous) and `f` (left-continuous),
//! their common inverse `h̃`, and the circle factor map `h`.
//!
//! Both staircases are evaluated through the rotation coding
//! `d_k = ⌊x+(k+1)α⌋ - ⌊x+kα⌋ ∈ {0, 1}`:
//!
//! ```text
//! F(x) = ⌊x⌋ + Σ_k 2^{-k-1} d_k
//! f(x) = ⌈x⌉ - 1 + Σ_k 2^{-k-1} (⌈x+(k+1)α⌉ - ⌈x+kα⌉)
//! ```
//!
//! Truncating after `N` digits leaves a tail in `[0, 2^-N]`, which is carried
//! in the radius of the result.

use std::sync::Arc;

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Zero};

use crate::alpha::AlphaSpec;
use crate::ball::{rational_floor, BallReal, Dyadic, Mag, PrecisionPolicy};
use crate::circle::{CirclePoint, LatticePoint, Side};
use crate::error::{Error, Result};

/// Minimum number of series terms.
pub const MIN_DEPTH: usize = 200;
/// Default output radius of [`StaircaseContext::inverse`], as a power of two.
pub const INVERSE_RADIUS_BITS: u32 = 80;

/// Argument of a staircase evaluation.
#[derive(Clone, Debug)]
pub enum StairArg {
    /// `base + coef·α`, exact.
    Lattice { base: BigRational, coef: i64 },
    /// Any real enclosure.
    Ball(BallReal),
}

impl From<BallReal> for StairArg {
    fn from(b: BallReal) -> Self {
        StairArg::Ball(b)
    }
}

impl From<BigRational> for StairArg {
    fn from(q: BigRational) -> Self {
        StairArg::Lattice { base: q, coef: 0 }
    }
}

impl From<&LatticePoint> for StairArg {
    fn from(l: &LatticePoint) -> Self {
        StairArg::Lattice { base: l.base.clone(), coef: l.coef }
    }
}

/// Truncated binary expansion of a staircase value: `head + 0.d_0 d_1 ...`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct StairExpansion {
    pub head: BigInt,
    pub digits: Vec<u8>,
}

impl StairExpansion {
    /// Enclosure of `head + Σ 2^{-k-1} d_k + [0, 2^-N]`.
    pub fn to_ball(&self, prec: u32) -> BallReal {
        let n = self.digits.len();
        let mut s = BigInt::zero();
        for &d in &self.digits {
            s <<= 1;
            if d == 1 {
                s += 1;
            }
        }
        let lo = Dyadic::new((&self.head << n) + &s, -(n as i64));
        let hi = Dyadic::new((&self.head << n) + &s + 1, -(n as i64));
        BallReal::from_endpoints(&lo, &hi, prec.max(n as u32 + 8))
    }
}

/// Staircase evaluation context for one rotation number.
#[derive(Clone, Debug)]
pub struct StaircaseContext {
    alpha: Arc<AlphaSpec>,
    policy: PrecisionPolicy,
    min_depth: usize,
    inverse_bits: u32,
}

impl StaircaseContext {
    pub fn new(alpha: Arc<AlphaSpec>) -> Self {
        StaircaseContext::with_policy(alpha, PrecisionPolicy::default())
    }

    pub fn with_policy(alpha: Arc<AlphaSpec>, policy: PrecisionPolicy) -> Self {
        StaircaseContext { alpha, policy, min_depth: MIN_DEPTH, inverse_bits: INVERSE_RADIUS_BITS }
    }

    pub fn with_min_depth(mut self, depth: usize) -> Self {
        self.min_depth = depth;
        self
    }

    pub fn with_inverse_radius_bits(mut self, bits: u32) -> Self {
        self.inverse_bits = bits;
        self
    }

    pub fn alpha(&self) -> &Arc<AlphaSpec> {
        &self.alpha
    }

    pub fn policy(&self) -> PrecisionPolicy {
        self.policy
    }

    /// Number of series terms used at `bits` of precision.
    pub fn truncation_depth(&self, bits: u32) -> usize {
        self.min_depth.max(bits as usize + 8)
    }

    /// Bound on the discarded tail at `bits` of precision.
    pub fn tail_bound(&self, bits: u32) -> Mag {
        Mag::pow2(-(self.truncation_depth(bits) as i64))
    }

    /// Floors (`upper`) or ceilings (`lower`) of `x + kα` for `k = 0..=count`.
    fn roundings(&self, x: &StairArg, side: Side, count: usize, bits: u32) -> Result<Vec<BigInt>> {
        if let Some(a) = self.alpha.exact_rational() {
            return Ok(self.exact_roundings(x, &a, side, count));
        }
        let coef = match x {
            StairArg::Lattice { coef, .. } => *coef,
            StairArg::Ball(_) => 0,
        };
        let span = (count as u64).saturating_add(coef.unsigned_abs()) + 1;
        let p = bits + 64 + 64 - span.leading_zeros();
        let (alo, ahi) = self.alpha.fixed_point(p);
        let width = &ahi - &alo;
        let (xlo, xhi, exact_base) = match x {
            StairArg::Lattice { base, .. } => {
                let scaled = base * BigRational::from_integer(BigInt::one() << p as usize);
                (scaled.floor().to_integer(), scaled.ceil().to_integer(), Some(base))
            }
            StairArg::Ball(b) => {
                (b.lower().mul_2exp(p as i64).floor(), b.upper().mul_2exp(p as i64).ceil(), None)
            }
        };
        let round = |v: &BigInt| -> BigInt {
            match side {
                Side::Upper => v >> p as usize,
                Side::Lower => -((-v) >> p as usize),
            }
        };
        let mut out = Vec::with_capacity(count + 1);
        let mut i = coef;
        // lo_acc = xlo + i·alo, hi_acc = xhi + i·ahi
        let mut lo_acc = &xlo + &alo * i;
        let mut hi_acc = &xhi + &ahi * i;
        for k in 0..=count {
            if i == 0 {
                if let Some(base) = exact_base {
                    out.push(match side {
                        Side::Upper => rational_floor(base),
                        Side::Lower => base.ceil().to_integer(),
                    });
                    lo_acc += &alo;
                    hi_acc += &ahi;
                    i += 1;
                    continue;
                }
            }
            let (lo, hi) = if i < 0 {
                let adj = &width * i;
                (&lo_acc + &adj, &hi_acc - &adj)
            } else {
                (lo_acc.clone(), hi_acc.clone())
            };
            let r_lo = round(&lo);
            let r_hi = round(&hi);
            if r_lo != r_hi {
                return Err(Error::UndecidableFloor { k: coef + k as i64, bits });
            }
            out.push(r_lo);
            lo_acc += &alo;
            hi_acc += &ahi;
            i += 1;
        }
        Ok(out)
    }

    fn exact_roundings(&self, x: &StairArg, a: &BigRational, side: Side, count: usize) -> Vec<BigInt> {
        let (base, coef) = match x {
            StairArg::Lattice { base, coef } => (base.clone(), *coef),
            StairArg::Ball(b) => (b.mid().to_rational(), 0),
        };
        let frac_a = a - BigRational::from_integer(rational_floor(a));
        (0..=count as i64)
            .map(|k| {
                let v = &base + &frac_a * BigRational::from_integer((coef + k).into());
                match side {
                    Side::Upper => rational_floor(&v),
                    Side::Lower => v.ceil().to_integer(),
                }
            })
            .collect()
    }

    /// Truncated expansion of `F(x)` or `f(x)` with `N` digits.
    pub fn expansion(&self, x: &StairArg, side: Side, digits: usize, bits: u32) -> Result<StairExpansion> {
        let r = self.roundings(x, side, digits, bits)?;
        let head = match side {
            Side::Upper => r[0].clone(),
            Side::Lower => &r[0] - 1,
        };
        let digits = r
            .windows(2)
            .map(|w| {
                let d = &w[1] - &w[0];
                debug_assert!(d.is_zero() || d.is_one());
                u8::from(d.is_one())
            })
            .collect();
        Ok(StairExpansion { head, digits })
    }

    /// One attempt at `bits` of precision, without escalation.
    pub fn eval_at(&self, x: &StairArg, side: Side, bits: u32) -> Result<BallReal> {
        let n = self.truncation_depth(bits);
        Ok(self.expansion(x, side, n, bits)?.to_ball(bits))
    }

    pub(crate) fn eval_lattice_at(&self, l: &LatticePoint, side: Side, bits: u32) -> Result<BallReal> {
        self.policy.escalate(|b| self.eval_at(&StairArg::from(l), side, b.max(bits)))
    }

    /// `F(x)`, escalating precision until every floor is decided.
    pub fn upper(&self, x: impl Into<StairArg>) -> Result<BallReal> {
        let x = x.into();
        self.policy.escalate(|bits| self.eval_at(&x, Side::Upper, bits))
    }

    /// `f(x)`, escalating precision until every ceiling is decided.
    pub fn lower(&self, x: impl Into<StairArg>) -> Result<BallReal> {
        let x = x.into();
        self.policy.escalate(|bits| self.eval_at(&x, Side::Lower, bits))
    }

    /// `F` or `f` by side.
    pub fn eval(&self, x: impl Into<StairArg>, side: Side) -> Result<BallReal> {
        match side {
            Side::Upper => self.upper(x),
            Side::Lower => self.lower(x),
        }
    }

    /// The first `n` letters `⌊u+(k+1)α⌋ - ⌊u+kα⌋` of the mechanical word of `u`.
    pub fn mechanical_word(&self, u: impl Into<StairArg>, n: usize) -> Result<Vec<u8>> {
        let u = u.into();
        self.policy
            .escalate(|bits| self.expansion(&u, Side::Upper, n, bits))
            .map(|e| e.digits)
    }

    /// Is `F(x) >= e`? Equivalent to `x >= h̃(e)`.
    fn upper_at_least(&self, x: &Dyadic, e: &Dyadic) -> Result<bool> {
        let arg = StairArg::Lattice { base: x.to_rational(), coef: 0 };
        let target = BallReal::from_dyadic(e.clone(), 64);
        self.policy.escalate(|bits| {
            let v = self.eval_at(&arg, Side::Upper, bits)?;
            match v.cmp_decided(&target) {
                Some(std::cmp::Ordering::Less) => Ok(false),
                Some(_) if v.lower() >= *e => Ok(true),
                _ => Err(Error::Undecidable { what: "staircase comparison", bits }),
            }
        })
    }

    /// Bracket `h̃(e)` in `(lo, hi]` with `hi - lo <= 2^-radius_bits`, or the
    /// bracket reached when a probe becomes undecidable at maximum precision.
    ///
    /// `F` varies by about `2^{-1/δ}` over distance `δ` on `K`, so near a point
    /// of `K` the achievable radius is limited by precision, not by effort.
    fn inverse_point(&self, e: &Dyadic, radius_bits: u32) -> Result<(Dyadic, Dyadic)> {
        let k = e.floor();
        let mut lo = Dyadic::from_int(&k - 1);
        let mut hi = Dyadic::from_int(&k + 1);
        let target = Dyadic::new(1, -(radius_bits as i64));
        while hi.sub(&lo) > target {
            let mid = lo.add(&hi).mul_2exp(-1);
            match self.upper_at_least(&mid, e) {
                Ok(true) => hi = mid,
                Ok(false) => lo = mid,
                Err(err) if err.is_precision_limited() => break,
                Err(err) => return Err(err),
            }
        }
        Ok((lo, hi))
    }

    /// `h̃(y)`, the unique `x` with `f(x) <= y <= F(x)`, to the default radius.
    pub fn inverse(&self, y: &BallReal) -> Result<BallReal> {
        self.inverse_to(y, self.inverse_bits)
    }

    /// `h̃(y)` by bisection to radius `2^-radius_bits` (plus the image of
    /// the input radius under the monotone map).
    pub fn inverse_to(&self, y: &BallReal, radius_bits: u32) -> Result<BallReal> {
        let prec = radius_bits + 16;
        let (lo, _) = self.inverse_point(&y.lower(), radius_bits)?;
        let hi = if y.is_exact() {
            self.inverse_point(y.mid(), radius_bits)?.1
        } else {
            self.inverse_point(&y.upper(), radius_bits)?.1
        };
        Ok(BallReal::from_endpoints(&lo, &hi, prec))
    }

    /// `h(x) = π(h̃(x))` computed by staircase inversion.
    ///
    /// Staircase points `π(F(u))` map exactly to `π(u)`.
    pub fn factor_map_h(&self, x: &CirclePoint) -> Result<CirclePoint> {
        match x {
            CirclePoint::Staircase { param, .. } => Ok(CirclePoint::Lattice(param.clone())),
            other => {
                let y = other.realize(self.inverse_bits + 32)?;
                Ok(CirclePoint::from_ball(self.inverse(&y)?))
            }
        }
    }

    /// `F(x)` by direct summation of `2^{-n-1}⌊x+nα⌋` over `n < terms`, with
    /// the tail enclosed. Slow; kept as an independent reference.
    pub fn upper_by_direct_sum(&self, x: &BigRational, terms: usize, bits: u32) -> Result<BallReal> {
        let floors = self.roundings(&StairArg::from(x.clone()), Side::Upper, terms, bits)?;
        let mut acc = BigRational::zero();
        for (n, fl) in floors.iter().take(terms).enumerate() {
            acc += BigRational::new(fl.clone(), BigInt::one() << (n + 1));
        }
        // Remaining terms: x - 1 < ⌊x+nα⌋ <= x + n since 0 < α < 1.
        let t = terms as i64;
        let lo_tail = (x - BigRational::one()) * BigRational::new(BigInt::one(), BigInt::one() << terms);
        let hi_tail = tail_sum(x.clone(), t);
        let lo = BallReal::from_rational(&(&acc + lo_tail), bits);
        let hi = BallReal::from_rational(&(&acc + hi_tail), bits);
        Ok(lo.hull(&hi))
    }
}

/// `Σ_{n >= t} 2^{-n-1} (c + n)` for rational `c`.
fn tail_sum(c: BigRational, t: i64) -> BigRational {
    // Σ_{n>=t} 2^{-n-1} = 2^{-t}, Σ_{n>=t} n 2^{-n-1} = (t + 1) 2^{-t}
    let scale = BigRational::new(BigInt::one(), BigInt::one() << t as usize);
    (c + BigRational::from_integer((t + 1).into())) * scale
}
