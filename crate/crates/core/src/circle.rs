//! Points of the circle `ℝ/ℤ` and the two base maps: doubling and rotation.

use std::fmt;
use std::sync::Arc;

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, ToPrimitive, Zero};

use crate::alpha::AlphaSpec;
use crate::ball::{rational_floor, BallReal, Dyadic, DEFAULT_PRECISION};
use crate::error::Result;

/// `base + coef·α` for a rational `base`; the lattice reached by rotating a
/// rational point. Exact under rotation.
#[derive(Clone, Debug)]
pub struct LatticePoint {
    pub base: BigRational,
    pub coef: i64,
    pub alpha: Arc<AlphaSpec>,
}

impl LatticePoint {
    pub fn new(base: BigRational, coef: i64, alpha: Arc<AlphaSpec>) -> Self {
        LatticePoint { base, coef, alpha }
    }

    /// Enclosure of `base + coef·frac(α)` (not reduced mod 1).
    pub fn value(&self, prec: u32) -> BallReal {
        let a = self.alpha.frac_value(prec + 64 + 64);
        a.mul_int(self.coef)
            .add(&BallReal::from_rational(&self.base, prec + 64))
            .with_prec(prec)
    }

    pub fn shifted(&self, dk: i64) -> Self {
        LatticePoint { base: self.base.clone(), coef: self.coef + dk, alpha: self.alpha.clone() }
    }
}

/// Which side of the staircase a [`CirclePoint::Staircase`] refers to.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Side {
    /// The right-continuous staircase `F`.
    Upper,
    /// The left-continuous staircase `f`.
    Lower,
}

/// A point of the circle.
///
/// Rationals and rotation-lattice points are carried exactly. A staircase
/// point `π(F(u))` (or `π(f(u))`) is carried symbolically through its
/// parameter `u`, which makes doubling exact on the Cantor set: `D` sends
/// `π(F(u))` to `π(F(u + α))`.
#[derive(Clone, Debug)]
pub enum CirclePoint {
    Rational(BigRational),
    Lattice(LatticePoint),
    Ball(BallReal),
    Staircase { param: LatticePoint, side: Side },
}

fn reduce_rational(q: BigRational) -> BigRational {
    let k = rational_floor(&q);
    if k.is_zero() {
        q
    } else {
        q - BigRational::from_integer(k)
    }
}

impl CirclePoint {
    pub fn zero() -> Self {
        CirclePoint::Rational(BigRational::zero())
    }

    pub fn rational(p: i64, q: i64) -> Self {
        CirclePoint::from_rational(BigRational::new(p.into(), q.into()))
    }

    pub fn from_rational(q: BigRational) -> Self {
        CirclePoint::Rational(reduce_rational(q))
    }

    /// The exact binary value of `x`, reduced mod 1.
    pub fn from_f64(x: f64) -> Self {
        CirclePoint::from_rational(Dyadic::from_f64(x).to_rational())
    }

    pub fn from_ball(b: BallReal) -> Self {
        CirclePoint::Ball(b.frac_mid())
    }

    /// `π(F(u))` for the rotation number `alpha`.
    pub fn staircase_upper(u: BigRational, alpha: Arc<AlphaSpec>) -> Self {
        CirclePoint::Staircase { param: LatticePoint::new(u, 0, alpha), side: Side::Upper }
    }

    /// Enclosure of a representative in `[0, 1)` (up to the radius).
    ///
    /// Staircase points need the series for `F` and are evaluated by
    /// [`crate::staircase::StaircaseContext`]; here they go through a
    /// default-depth context.
    pub fn realize(&self, prec: u32) -> Result<BallReal> {
        let v = match self {
            CirclePoint::Rational(q) => BallReal::from_rational(q, prec),
            CirclePoint::Lattice(l) => l.value(prec).frac_mid(),
            CirclePoint::Ball(b) => b.frac_mid(),
            CirclePoint::Staircase { param, side } => {
                let ctx = crate::staircase::StaircaseContext::new(param.alpha.clone());
                ctx.eval_lattice_at(param, *side, prec)?.frac_mid()
            }
        };
        Ok(v)
    }

    /// Midpoint of a 64-bit realization, reduced to `[0, 1)`.
    pub fn to_f64(&self) -> f64 {
        match self {
            CirclePoint::Rational(q) => {
                let v = BallReal::from_rational(q, 64).to_f64();
                if v >= 1.0 { 0.0 } else { v }
            }
            _ => match self.realize(DEFAULT_PRECISION) {
                Ok(b) => b.to_f64().rem_euclid(1.0),
                Err(_) => f64::NAN,
            },
        }
    }

    pub fn as_rational(&self) -> Option<&BigRational> {
        match self {
            CirclePoint::Rational(q) => Some(q),
            _ => None,
        }
    }

    /// `D(x) = 2x mod 1`.
    pub fn doubling(&self) -> CirclePoint {
        match self {
            CirclePoint::Rational(q) => {
                CirclePoint::from_rational(q * BigRational::from_integer(BigInt::from(2)))
            }
            CirclePoint::Lattice(l) => match l.coef.checked_mul(2) {
                Some(coef) => CirclePoint::Lattice(LatticePoint {
                    base: reduce_rational(&l.base * BigRational::from_integer(2.into())),
                    coef,
                    alpha: l.alpha.clone(),
                }),
                None => CirclePoint::Ball(l.value(DEFAULT_PRECISION).mul_2exp(1).frac_mid()),
            },
            CirclePoint::Ball(b) => CirclePoint::Ball(b.mul_2exp(1).frac_mid()),
            // 2F(u) = ⌊u⌋ + F(u + α), 2f(u) = ⌈u⌉ - 1 + f(u + α)
            CirclePoint::Staircase { param, side } => {
                CirclePoint::Staircase { param: param.shifted(1), side: *side }
            }
        }
    }

    /// One of the two `D`-preimages: `x/2`.
    pub fn halving(&self) -> CirclePoint {
        match self {
            CirclePoint::Rational(q) => {
                CirclePoint::Rational(q / BigRational::from_integer(BigInt::from(2)))
            }
            other => CirclePoint::Ball(
                other.realize(DEFAULT_PRECISION).unwrap_or_else(|_| BallReal::zero(DEFAULT_PRECISION)).mul_2exp(-1),
            ),
        }
    }

    /// `R_α(x) = x + α mod 1`.
    pub fn rotate(&self, alpha: &Arc<AlphaSpec>) -> CirclePoint {
        self.rotate_by(alpha, 1)
    }

    /// `R_α^k(x)`.
    pub fn rotate_by(&self, alpha: &Arc<AlphaSpec>, k: i64) -> CirclePoint {
        match self {
            CirclePoint::Rational(q) => {
                CirclePoint::Lattice(LatticePoint::new(q.clone(), k, alpha.clone()))
            }
            CirclePoint::Lattice(l) if *l.alpha == **alpha => CirclePoint::Lattice(l.shifted(k)),
            other => {
                let prec = match other {
                    CirclePoint::Ball(b) => b.prec(),
                    _ => DEFAULT_PRECISION,
                };
                let x = other.realize(prec).unwrap_or_else(|_| BallReal::zero(prec));
                let a = alpha.frac_value(prec + 64).mul_int(k);
                CirclePoint::Ball(x.add(&a).with_prec(prec).frac_mid())
            }
        }
    }

    /// Arc-length distance `min_k |x - y - k|`, in `[0, 1/2]`.
    pub fn distance(&self, other: &CirclePoint, prec: u32) -> Result<BallReal> {
        if let (CirclePoint::Rational(a), CirclePoint::Rational(b)) = (self, other) {
            return Ok(BallReal::from_rational(&rational_circle_distance(a, b), prec));
        }
        Ok(circle_distance_ball(&self.realize(prec)?, &other.realize(prec)?))
    }

    /// Exact equality mod 1 when it can be decided without approximation.
    pub fn exact_eq(&self, other: &CirclePoint) -> Option<bool> {
        match (self, other) {
            (CirclePoint::Rational(a), CirclePoint::Rational(b)) => Some(a == b),
            (CirclePoint::Lattice(a), CirclePoint::Lattice(b)) if a.alpha == b.alpha => {
                if a.alpha.is_rational() {
                    return None;
                }
                let diff = &a.base - &b.base;
                Some(a.coef == b.coef && diff.is_integer())
            }
            (CirclePoint::Rational(q), CirclePoint::Lattice(l))
            | (CirclePoint::Lattice(l), CirclePoint::Rational(q)) => {
                if l.alpha.is_rational() {
                    None
                } else {
                    Some(l.coef == 0 && (&l.base - q).is_integer())
                }
            }
            _ => None,
        }
    }
}

/// `min_k |a - b - k|` for rationals.
pub fn rational_circle_distance(a: &BigRational, b: &BigRational) -> BigRational {
    let r = reduce_rational(a - b);
    let other = BigRational::one() - &r;
    if r <= other { r } else { other }
}

/// Arc-length distance between two real enclosures.
pub fn circle_distance_ball(x: &BallReal, y: &BallReal) -> BallReal {
    let d = x.sub(y);
    // Subtracting the nearest integer to the midpoint is exact; the result is
    // then |r| whenever the radius is below 1/2 - |mid r|.
    let k = d.mid().add(&Dyadic::new(1, -1)).floor();
    let r = if k.is_zero() { d } else { d.sub(&BallReal::from_int(k, d.prec())) };
    let abs = r.abs();
    let half = BallReal::from_dyadic(Dyadic::new(1, -1), abs.prec());
    abs.min(&half)
}

impl fmt::Display for CirclePoint {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CirclePoint::Rational(q) => write!(f, "{q}"),
            CirclePoint::Lattice(l) => {
                let sign = if l.coef.is_negative() { '-' } else { '+' };
                write!(f, "{} {} {}α", l.base, sign, l.coef.unsigned_abs())
            }
            CirclePoint::Ball(b) => write!(f, "{b}"),
            CirclePoint::Staircase { param, side } => {
                let name = match side {
                    Side::Upper => "F",
                    Side::Lower => "f",
                };
                let sign = if param.coef.is_negative() { '-' } else { '+' };
                write!(f, "π({name}({} {} {}α))", param.base, sign, param.coef.unsigned_abs())
            }
        }
    }
}

/// Convenience for tests and examples: the nearest `f64` to an exact value.
pub fn rational_to_f64(q: &BigRational) -> f64 {
    q.numer().to_f64().unwrap_or(f64::NAN) / q.denom().to_f64().unwrap_or(f64::NAN)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn d(a: f64, b: f64) -> f64 {
        CirclePoint::from_f64(a).distance(&CirclePoint::from_f64(b), 128).unwrap().to_f64()
    }

    #[test]
    fn distance_examples() {
        assert!((d(0.1, 0.9) - 0.2).abs() < 1e-15);
        assert_eq!(d(0.3, 0.3), 0.0);
        assert_eq!(d(0.25, 0.75), 0.5);
    }

    #[test]
    fn doubling_examples() {
        assert!((CirclePoint::from_f64(0.3).doubling().to_f64() - 0.6).abs() < 1e-15);
        assert_eq!(CirclePoint::from_f64(0.75).doubling().to_f64(), 0.5);
        let third = CirclePoint::rational(1, 3).doubling();
        assert_eq!(third.as_rational(), Some(&BigRational::new(2.into(), 3.into())));
    }

    #[test]
    fn rotation_examples() {
        let a = Arc::new(AlphaSpec::gold2());
        let alpha = a.frac_value(128);
        let x = CirclePoint::zero().rotate(&a);
        assert!(x.realize(128).unwrap().overlaps(&alpha));
        let one_minus = CirclePoint::Ball(BallReal::from_int(1, 128).sub(&alpha));
        let back = one_minus.rotate(&a).realize(128).unwrap();
        let dist = circle_distance_ball(&back, &BallReal::zero(128));
        assert!(dist.contains_zero());
        assert!(dist.upper().to_f64() < 1e-30);
    }

    #[test]
    fn rotation_by_convergent_denominator_returns_near_zero() {
        let a = Arc::new(AlphaSpec::gold2());
        for c in a.convergents(1000).unwrap() {
            let q = c.denom().to_i64().unwrap();
            let mut x = CirclePoint::zero();
            for _ in 0..q {
                x = x.rotate(&a);
            }
            let dist = x.distance(&CirclePoint::zero(), 128).unwrap();
            assert!(dist.upper().to_f64() < 1.0 / q as f64, "q = {q}");
        }
    }

    #[test]
    fn lattice_equality_is_exact() {
        let a = Arc::new(AlphaSpec::gold2());
        let x = CirclePoint::rational(1, 3).rotate_by(&a, 5);
        let y = CirclePoint::rational(4, 3).rotate_by(&a, 5);
        let z = CirclePoint::rational(1, 3).rotate_by(&a, 4);
        assert_eq!(x.exact_eq(&y), Some(true));
        assert_eq!(x.exact_eq(&z), Some(false));
    }
}
