//! Linear cocycles over the doubling map or a rotation: products along
//! orbits and three Lyapunov-exponent estimators.

use std::sync::Arc;

use rand::Rng;

use crate::alpha::AlphaSpec;
use crate::circle::CirclePoint;
use crate::error::{Error, Result};
use crate::mat2::{Mat2, ScaledMat2};

/// The base dynamics of a cocycle.
#[derive(Clone, Debug)]
pub enum BaseMap {
    Doubling,
    Rotation(Arc<AlphaSpec>),
}

impl BaseMap {
    pub fn apply(&self, x: &CirclePoint) -> CirclePoint {
        match self {
            BaseMap::Doubling => x.doubling(),
            BaseMap::Rotation(a) => x.rotate(a),
        }
    }

    /// Name used in reports.
    pub fn name(&self) -> &'static str {
        match self {
            BaseMap::Doubling => "doubling",
            BaseMap::Rotation(_) => "rotation",
        }
    }
}

/// A matrix-valued generator over a base map.
pub trait Cocycle: Send + Sync {
    fn base(&self) -> BaseMap;

    fn eval(&self, x: &CirclePoint) -> Result<Mat2>;

    /// Double-precision fast path for rotation-based cocycles, where floating
    /// orbits stay accurate. `None` forces exact orbits.
    fn eval_f64(&self, _x: f64) -> Option<Mat2> {
        None
    }
}

/// `A^{(n)}(x) = A(T^{n-1}x) ··· A(x)` along an exact orbit.
pub fn product<C: Cocycle + ?Sized>(spec: &C, x: &CirclePoint, n: usize) -> Result<ScaledMat2> {
    let base = spec.base();
    let mut p = ScaledMat2::IDENTITY;
    let mut y = x.clone();
    for k in 0..n {
        p = p.left_mul(&spec.eval(&y)?);
        if k + 1 < n {
            y = base.apply(&y);
        }
    }
    Ok(p)
}

/// The matrices `A(x), A(Tx), ..., A(T^{n-1}x)`.
pub fn orbit_matrices<C: Cocycle + ?Sized>(spec: &C, x: &CirclePoint, n: usize) -> Result<Vec<Mat2>> {
    let base = spec.base();
    let mut out = Vec::with_capacity(n);
    let mut y = x.clone();
    for _ in 0..n {
        out.push(spec.eval(&y)?);
        y = base.apply(&y);
    }
    Ok(out)
}

/// Streams `A(T^k x)` either on the double-precision fast path or exactly.
fn for_each_matrix<C: Cocycle + ?Sized>(
    spec: &C,
    x0: &CirclePoint,
    n: usize,
    mut f: impl FnMut(&Mat2),
) -> Result<()> {
    if let BaseMap::Rotation(alpha) = spec.base() {
        let x = x0.to_f64();
        if spec.eval_f64(x).is_some() {
            let a = alpha.frac_value(64).to_f64();
            for k in 0..n {
                // Direct evaluation keeps the angle error at O(k·ulp).
                let y = (x + k as f64 * a).rem_euclid(1.0);
                f(&spec.eval_f64(y).expect("fast path available"));
            }
            return Ok(());
        }
    }
    let base = spec.base();
    let mut y = x0.clone();
    for _ in 0..n {
        f(&spec.eval(&y)?);
        y = base.apply(&y);
    }
    Ok(())
}

/// Two independent estimates of the top exponent and the QR estimate of the
/// bottom one.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct BirkhoffEstimate {
    /// Growth of a tracked vector.
    pub vector: f64,
    /// Top diagonal of a tracked QR frame.
    pub qr: f64,
    /// Bottom diagonal of the QR frame; `-qr` for SL(2,ℝ).
    pub qr_second: f64,
}

/// `(1/N) log ||A^{(N)}(x0)||` estimated by per-step renormalization.
pub fn birkhoff_exponent<C: Cocycle + ?Sized>(spec: &C, x0: &CirclePoint, n: usize) -> Result<BirkhoffEstimate> {
    if n == 0 {
        return Err(Error::InvalidParameter("N must be at least 1".into()));
    }
    // A fixed irrational direction avoids starting on an invariant line.
    let (s, c) = 0.7548776662466927f64.sin_cos();
    let mut v = [c, s];
    let mut log_v = 0.0;
    let mut q = Mat2::IDENTITY;
    let (mut r1, mut r2) = (0.0, 0.0);
    for_each_matrix(spec, x0, n, |a| {
        let w = a.apply(v);
        let norm = w[0].hypot(w[1]);
        log_v += norm.ln();
        v = [w[0] / norm, w[1] / norm];

        // A·Q = Q'·R via Gram–Schmidt on the columns.
        let m = *a * q;
        let n1 = m.a.hypot(m.c);
        let (e1, e2) = (m.a / n1, m.c / n1);
        let proj = e1 * m.b + e2 * m.d;
        let (u1, u2) = (m.b - proj * e1, m.d - proj * e2);
        let n2 = u1.hypot(u2);
        r1 += n1.ln();
        r2 += n2.ln();
        q = Mat2::new(e1, u1 / n2, e2, u2 / n2);
    })?;
    let nf = n as f64;
    Ok(BirkhoffEstimate { vector: log_v / nf, qr: r1 / nf, qr_second: r2 / nf })
}

/// `(1/k) log ρ(P)` for the period product `P` of a verified cycle; exactly
/// zero for elliptic or parabolic SL(2,ℝ) products.
pub fn periodic_exponent<C: Cocycle + ?Sized>(spec: &C, orbit: &[CirclePoint]) -> Result<f64> {
    let k = orbit.len();
    if k == 0 {
        return Err(Error::NotPeriodic("empty orbit".into()));
    }
    let base = spec.base();
    for i in 0..k {
        let next = base.apply(&orbit[i]);
        if next.exact_eq(&orbit[(i + 1) % k]) != Some(true) {
            return Err(Error::NotPeriodic(format!("T(x_{i}) != x_{}", (i + 1) % k)));
        }
    }
    let mut p = ScaledMat2::IDENTITY;
    for x in orbit {
        p = p.left_mul(&spec.eval(x)?);
    }
    Ok(exponent_of_period_product(&p, k))
}

/// `(1/k) log ρ(P)`, returning exactly zero when `P` is an elliptic or
/// parabolic element of SL(2,ℝ).
pub fn exponent_of_period_product(p: &ScaledMat2, k: usize) -> f64 {
    let scale = p.log_scale.exp();
    let unimodular = p.log_det().abs() < 1e-9;
    let tr = p.m.trace().abs() * scale;
    if unimodular && tr.is_finite() && tr <= 2.0 + 1e-12 {
        return 0.0;
    }
    let rho = if tr.is_finite() && unimodular {
        // Larger root of t² - tr·t + 1, written to avoid cancellation.
        (0.5 * (tr + (tr * tr - 4.0).max(0.0).sqrt())).ln()
    } else {
        p.m.spectral_radius().ln() + p.log_scale
    };
    rho / k as f64
}

/// Monte Carlo estimate of `(1/n) ∫ log ||A^{(n)}|| dμ` with its standard error.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct KingmanEstimate {
    pub n: usize,
    pub mean: f64,
    pub std_err: f64,
}

pub fn kingman_upper_bound<C, R, S>(spec: &C, sampler: S, rng: &mut R, n: usize, samples: usize) -> Result<KingmanEstimate>
where
    C: Cocycle + ?Sized,
    R: Rng,
    S: Fn(&mut R) -> CirclePoint,
{
    if n == 0 || samples < 2 {
        return Err(Error::InvalidParameter("need n >= 1 and at least two samples".into()));
    }
    let mut sum = 0.0;
    let mut sum_sq = 0.0;
    for _ in 0..samples {
        let x = sampler(rng);
        let mut p = ScaledMat2::IDENTITY;
        for_each_matrix(spec, &x, n, |a| p = p.left_mul(a))?;
        let v = p.log_norm() / n as f64;
        sum += v;
        sum_sq += v * v;
    }
    let m = samples as f64;
    let mean = sum / m;
    let var = ((sum_sq - m * mean * mean) / (m - 1.0)).max(0.0);
    Ok(KingmanEstimate { n, mean, std_err: (var / m).sqrt() })
}

/// A constant matrix over any base.
pub struct ConstantCocycle {
    pub matrix: Mat2,
    pub base: BaseMap,
}

impl Cocycle for ConstantCocycle {
    fn base(&self) -> BaseMap {
        self.base.clone()
    }

    fn eval(&self, _x: &CirclePoint) -> Result<Mat2> {
        Ok(self.matrix)
    }

    fn eval_f64(&self, _x: f64) -> Option<Mat2> {
        Some(self.matrix)
    }
}

/// `x ↦ U(x)`, rotation by `2πx`.
pub struct RotationCocycle {
    pub base: BaseMap,
}

impl Cocycle for RotationCocycle {
    fn base(&self) -> BaseMap {
        self.base.clone()
    }

    fn eval(&self, x: &CirclePoint) -> Result<Mat2> {
        Ok(Mat2::rotation(x.to_f64()))
    }

    fn eval_f64(&self, x: f64) -> Option<Mat2> {
        Some(Mat2::rotation(x))
    }
}

/// Two-symbol cocycle over the doubling map: `diag(2, 1/2)` on `[0, 1/2)`
/// and the quarter turn `[[0, -1], [1, 0]]` on `[1/2, 1)`.
pub struct TwoSymbolCocycle;

impl TwoSymbolCocycle {
    pub const HYPERBOLIC: Mat2 = Mat2::diag(2.0, 0.5);
    pub const QUARTER_TURN: Mat2 = Mat2::new(0.0, -1.0, 1.0, 0.0);

    pub fn for_symbol(s: u8) -> Mat2 {
        if s == 0 { Self::HYPERBOLIC } else { Self::QUARTER_TURN }
    }

    /// Exponent of the periodic measure on the shift orbit of `word^∞`.
    pub fn word_exponent(word: &[u8]) -> f64 {
        let mut p = ScaledMat2::IDENTITY;
        for &s in word {
            p = p.left_mul(&Self::for_symbol(s));
        }
        exponent_of_period_product(&p, word.len())
    }

    /// `1/(2^k - 1)`, whose binary itinerary is `(0^{k-1} 1)^∞`.
    pub fn orbit_of_single_one(k: u32) -> Vec<CirclePoint> {
        let den = (1i64 << k) - 1;
        let mut x = CirclePoint::rational(1, den);
        let mut out = Vec::with_capacity(k as usize);
        for _ in 0..k {
            out.push(x.clone());
            x = x.doubling();
        }
        out
    }
}

impl Cocycle for TwoSymbolCocycle {
    fn base(&self) -> BaseMap {
        BaseMap::Doubling
    }

    fn eval(&self, x: &CirclePoint) -> Result<Mat2> {
        let half = num_rational::BigRational::new(1.into(), 2.into());
        let s = match x.as_rational() {
            Some(q) => u8::from(*q >= half),
            None => u8::from(x.to_f64() >= 0.5),
        };
        Ok(Self::for_symbol(s))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn rot_base() -> BaseMap {
        BaseMap::Rotation(Arc::new(AlphaSpec::gold2()))
    }

    #[test]
    fn empty_product_is_identity() {
        let c = ConstantCocycle { matrix: Mat2::diag(3.0, 1.0 / 3.0), base: BaseMap::Doubling };
        let p = product(&c, &CirclePoint::zero(), 0).unwrap();
        assert_eq!(p.to_mat(), Mat2::IDENTITY);
    }

    #[test]
    fn constant_hyperbolic_exponent() {
        let c = ConstantCocycle { matrix: Mat2::diag(3.0, 1.0 / 3.0), base: rot_base() };
        let e = birkhoff_exponent(&c, &CirclePoint::zero(), 1000).unwrap();
        assert!((e.vector - 3f64.ln()).abs() < 1e-3);
        assert!((e.qr - 3f64.ln()).abs() < 1e-9);
        assert!((e.qr_second + 3f64.ln()).abs() < 1e-9);
    }

    #[test]
    fn rotations_have_zero_exponent() {
        let c = RotationCocycle { base: rot_base() };
        let n = 10_000;
        let e = birkhoff_exponent(&c, &CirclePoint::rational(1, 7), n).unwrap();
        assert!(e.vector.abs() < 10.0 / n as f64 && e.qr.abs() < 10.0 / n as f64);
    }

    #[test]
    fn trace_two_and_a_half() {
        // t² - 2.5t + 1 = (t - 2)(t - 1/2)
        let m = Mat2::new(2.0, 1.0, 0.0, 0.5);
        let c = ConstantCocycle { matrix: m, base: BaseMap::Doubling };
        let e = periodic_exponent(&c, &[CirclePoint::zero()]).unwrap();
        assert!((e - 2f64.ln()).abs() < 1e-15);
    }

    #[test]
    fn non_periodic_orbit_rejected() {
        let c = RotationCocycle { base: BaseMap::Doubling };
        let err = periodic_exponent(&c, &[CirclePoint::rational(1, 3), CirclePoint::rational(1, 3)]);
        assert!(matches!(err, Err(Error::NotPeriodic(_))));
    }

    #[test]
    fn two_symbol_demo_is_elliptic() {
        for k in 1..=8usize {
            let mut word = vec![0u8; k - 1];
            word.push(1);
            assert_eq!(TwoSymbolCocycle::word_exponent(&word), 0.0, "k = {k}");
        }
        for k in 2..=8 {
            let orbit = TwoSymbolCocycle::orbit_of_single_one(k);
            assert_eq!(periodic_exponent(&TwoSymbolCocycle, &orbit).unwrap(), 0.0);
        }
        // The all-hyperbolic fixed point is not elliptic.
        assert!((TwoSymbolCocycle::word_exponent(&[0]) - 2f64.ln()).abs() < 1e-15);
    }

    #[test]
    fn kingman_constant() {
        let c = ConstantCocycle { matrix: Mat2::diag(3.0, 1.0 / 3.0), base: rot_base() };
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        let k = kingman_upper_bound(&c, |r: &mut ChaCha8Rng| CirclePoint::from_f64(r.gen()), &mut rng, 5, 10)
            .unwrap();
        assert!((k.mean - 3f64.ln()).abs() < 1e-12);
    }
}
