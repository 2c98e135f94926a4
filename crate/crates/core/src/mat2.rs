//! 2×2 real matrices in double precision and in ball arithmetic.

use std::f64::consts::TAU;
use std::fmt;
use std::ops::Mul;

use serde::Serialize;

use crate::ball::{BallReal, Dyadic, Mag};

/// `[[a, b], [c, d]]`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct Mat2 {
    pub a: f64,
    pub b: f64,
    pub c: f64,
    pub d: f64,
}

impl Mat2 {
    pub const IDENTITY: Mat2 = Mat2 { a: 1.0, b: 0.0, c: 0.0, d: 1.0 };

    pub const fn new(a: f64, b: f64, c: f64, d: f64) -> Self {
        Mat2 { a, b, c, d }
    }

    pub const fn diag(x: f64, y: f64) -> Self {
        Mat2 { a: x, b: 0.0, c: 0.0, d: y }
    }

    /// Rotation by the angle `2πx`.
    pub fn rotation(x: f64) -> Self {
        let (s, c) = (TAU * x.rem_euclid(1.0)).sin_cos();
        Mat2 { a: c, b: -s, c: s, d: c }
    }

    pub fn det(&self) -> f64 {
        self.a * self.d - self.b * self.c
    }

    pub fn trace(&self) -> f64 {
        self.a + self.d
    }

    pub fn transpose(&self) -> Self {
        Mat2 { a: self.a, b: self.c, c: self.b, d: self.d }
    }

    pub fn inverse(&self) -> Self {
        let det = self.det();
        Mat2 { a: self.d / det, b: -self.b / det, c: -self.c / det, d: self.a / det }
    }

    pub fn scale(&self, k: f64) -> Self {
        Mat2 { a: self.a * k, b: self.b * k, c: self.c * k, d: self.d * k }
    }

    pub fn sub(&self, o: &Mat2) -> Self {
        Mat2 { a: self.a - o.a, b: self.b - o.b, c: self.c - o.c, d: self.d - o.d }
    }

    pub fn max_abs(&self) -> f64 {
        self.a.abs().max(self.b.abs()).max(self.c.abs()).max(self.d.abs())
    }

    pub fn apply(&self, v: [f64; 2]) -> [f64; 2] {
        [self.a * v[0] + self.b * v[1], self.c * v[0] + self.d * v[1]]
    }

    /// Singular values `s1 >= s2` from the closed form for 2×2 matrices.
    pub fn singular_values(&self) -> (f64, f64) {
        let p = (self.a + self.d).hypot(self.b - self.c);
        let q = (self.a - self.d).hypot(self.b + self.c);
        let s1 = 0.5 * (p + q);
        let s2 = 0.5 * (p - q).abs();
        (s1, s2)
    }

    /// Spectral norm.
    pub fn norm(&self) -> f64 {
        self.singular_values().0
    }

    /// Largest eigenvalue modulus.
    pub fn spectral_radius(&self) -> f64 {
        let tr = self.trace();
        let det = self.det();
        let disc = tr * tr - 4.0 * det;
        if disc >= 0.0 {
            let r = disc.sqrt();
            // Avoid cancellation: the larger root is (|tr| + r)/2.
            0.5 * (tr.abs() + r)
        } else {
            det.abs().sqrt()
        }
    }
}

impl Mul for Mat2 {
    type Output = Mat2;

    fn mul(self, o: Mat2) -> Mat2 {
        Mat2 {
            a: self.a * o.a + self.b * o.c,
            b: self.a * o.b + self.b * o.d,
            c: self.c * o.a + self.d * o.c,
            d: self.c * o.b + self.d * o.d,
        }
    }
}

impl fmt::Display for Mat2 {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "[[{:.6}, {:.6}], [{:.6}, {:.6}]]", self.a, self.b, self.c, self.d)
    }
}

/// `e^{log_scale} · m`, renormalized so long products never overflow.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ScaledMat2 {
    pub m: Mat2,
    pub log_scale: f64,
}

impl ScaledMat2 {
    pub const IDENTITY: ScaledMat2 = ScaledMat2 { m: Mat2::IDENTITY, log_scale: 0.0 };

    /// `a · self` (left multiplication, the order of cocycle products).
    pub fn left_mul(&self, a: &Mat2) -> ScaledMat2 {
        let mut out = ScaledMat2 { m: *a * self.m, log_scale: self.log_scale };
        let s = out.m.max_abs();
        if !(1e-100..=1e100).contains(&s) && s > 0.0 {
            out.m = out.m.scale(1.0 / s);
            out.log_scale += s.ln();
        }
        out
    }

    /// `log ||·||`.
    pub fn log_norm(&self) -> f64 {
        self.m.norm().ln() + self.log_scale
    }

    pub fn log_det(&self) -> f64 {
        self.m.det().abs().ln() + 2.0 * self.log_scale
    }

    /// The plain matrix, when it fits in a double.
    pub fn to_mat(&self) -> Mat2 {
        self.m.scale(self.log_scale.exp())
    }
}

/// A 2×2 matrix of balls.
#[derive(Clone, Debug)]
pub struct BallMat2 {
    pub a: BallReal,
    pub b: BallReal,
    pub c: BallReal,
    pub d: BallReal,
}

impl BallMat2 {
    pub fn identity(prec: u32) -> Self {
        let one = BallReal::from_int(1, prec);
        let zero = BallReal::zero(prec);
        BallMat2 { a: one.clone(), b: zero.clone(), c: zero, d: one }
    }

    pub fn diag(x: BallReal, y: BallReal) -> Self {
        let prec = x.prec();
        BallMat2 { a: x, b: BallReal::zero(prec), c: BallReal::zero(prec), d: y }
    }

    /// Rotation by `2πx`.
    pub fn rotation(x: &BallReal) -> Self {
        let (c, s) = x.cos_sin_2pi();
        BallMat2 { a: c.clone(), b: s.neg(), c: s, d: c }
    }

    pub fn mul(&self, o: &BallMat2) -> BallMat2 {
        BallMat2 {
            a: self.a.mul(&o.a).add(&self.b.mul(&o.c)),
            b: self.a.mul(&o.b).add(&self.b.mul(&o.d)),
            c: self.c.mul(&o.a).add(&self.d.mul(&o.c)),
            d: self.c.mul(&o.b).add(&self.d.mul(&o.d)),
        }
    }

    pub fn sub(&self, o: &BallMat2) -> BallMat2 {
        BallMat2 { a: self.a.sub(&o.a), b: self.b.sub(&o.b), c: self.c.sub(&o.c), d: self.d.sub(&o.d) }
    }

    pub fn neg(&self) -> BallMat2 {
        BallMat2 { a: self.a.neg(), b: self.b.neg(), c: self.c.neg(), d: self.d.neg() }
    }

    pub fn det(&self) -> BallReal {
        self.a.mul(&self.d).sub(&self.b.mul(&self.c))
    }

    /// Enclosure `[0, u]` of the spectral norm, with `u` the Frobenius bound.
    pub fn norm_enclosure(&self) -> BallReal {
        let sum = [&self.a, &self.b, &self.c, &self.d]
            .iter()
            .fold(Mag::ZERO, |acc, e| acc.add(e.abs_upper().mul(e.abs_upper())));
        let upper = mag_sqrt_upper(sum);
        BallReal::from_endpoints(&Dyadic::zero(), &upper, 64)
    }

    pub fn to_f64(&self) -> Mat2 {
        Mat2::new(self.a.to_f64(), self.b.to_f64(), self.c.to_f64(), self.d.to_f64())
    }
}

/// A dyadic `u >= sqrt(m)`.
fn mag_sqrt_upper(m: Mag) -> Dyadic {
    if m.is_zero() {
        return Dyadic::zero();
    }
    let f = m.to_f64();
    if f.is_finite() && f > 0.0 && f > f64::MIN_POSITIVE {
        let mut u = f.sqrt() * (1.0 + 4.0 * f64::EPSILON);
        let target = m.to_dyadic();
        while {
            let d = Dyadic::from_f64(u);
            d.mul(&d) < target
        } {
            u *= 1.0 + 4.0 * f64::EPSILON;
        }
        return Dyadic::from_f64(u);
    }
    Dyadic::new(1, (m.log2_ceil() + 1) / 2 + 1)
}
