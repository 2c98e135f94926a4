//! Herman's cocycle over the rotation, one-parameter families `B_t` with
//! product bounds `||B_t^{(n)}|| <= e^{M(t)}`, and the assembled cocycle
//! `A(x) = B_{ψ(x)}(h(x))` over the doubling map.

use std::sync::Arc;

use num_rational::BigRational;
use num_traits::Zero;
use serde::Serialize;

use crate::alpha::AlphaSpec;
use crate::ball::{BallReal, Dyadic};
use crate::circle::{CirclePoint, LatticePoint};
use crate::cocycle::{BaseMap, Cocycle};
use crate::error::{Error, Result};
use crate::gaps::GapStructure;
use crate::mat2::{BallMat2, Mat2};
use crate::modulation::ModulationContext;

/// `γ > 1` and the rotation number; the exponent is `c = log((γ+γ⁻¹)/2)`.
#[derive(Clone, Debug)]
pub struct HermanParams {
    gamma: f64,
    alpha: Arc<AlphaSpec>,
}

impl HermanParams {
    pub fn from_gamma(gamma: f64, alpha: Arc<AlphaSpec>) -> Result<Self> {
        if !(gamma > 1.0 && gamma.is_finite()) {
            return Err(Error::InvalidParameter(format!("γ must exceed 1, got {gamma}")));
        }
        Ok(HermanParams { gamma, alpha })
    }

    /// Inverts `c = log((γ+γ⁻¹)/2)` on `γ > 1`: `γ = e^c + √(e^{2c} - 1)`.
    pub fn from_c(c: f64, alpha: Arc<AlphaSpec>) -> Result<Self> {
        if !(c > 0.0 && c.is_finite()) {
            return Err(Error::InvalidParameter(format!("c must be positive, got {c}")));
        }
        let e = c.exp();
        HermanParams::from_gamma(e + (e * e - 1.0).sqrt(), alpha)
    }

    pub fn gamma(&self) -> f64 {
        self.gamma
    }

    pub fn alpha(&self) -> &Arc<AlphaSpec> {
        &self.alpha
    }

    /// `log((γ+γ⁻¹)/2)`.
    pub fn c(&self) -> f64 {
        (0.5 * (self.gamma + 1.0 / self.gamma)).ln()
    }

    /// `diag(γ, γ⁻¹) U(x)`.
    pub fn matrix(&self, x: f64) -> Mat2 {
        Mat2::diag(self.gamma, 1.0 / self.gamma) * Mat2::rotation(x)
    }

    /// Ball version of [`HermanParams::matrix`], treating `γ` as exact.
    pub fn ball_matrix(&self, x: &BallReal) -> BallMat2 {
        let prec = x.prec();
        let g = BallReal::from_dyadic(Dyadic::from_f64(self.gamma), prec);
        let inv = BallReal::from_int(1, prec).div(&g).expect("γ > 1");
        BallMat2::diag(g, inv).mul(&BallMat2::rotation(x))
    }

    /// Ball product `A^{(n)}(x)` along the rotation orbit of an exact point.
    pub fn ball_product(&self, x: &CirclePoint, n: usize, prec: u32) -> Result<BallMat2> {
        let mut p = BallMat2::identity(prec);
        let mut y = x.clone();
        for _ in 0..n {
            p = self.ball_matrix(&y.realize(prec)?).mul(&p);
            y = y.rotate(&self.alpha);
        }
        Ok(p)
    }

    pub fn cocycle(&self) -> HermanCocycle {
        HermanCocycle { params: self.clone() }
    }
}

/// Herman's cocycle `x ↦ diag(γ, γ⁻¹) U(x)` over the rotation.
#[derive(Clone, Debug)]
pub struct HermanCocycle {
    pub params: HermanParams,
}

impl Cocycle for HermanCocycle {
    fn base(&self) -> BaseMap {
        BaseMap::Rotation(self.params.alpha.clone())
    }

    fn eval(&self, x: &CirclePoint) -> Result<Mat2> {
        Ok(self.params.matrix(x.to_f64()))
    }

    fn eval_f64(&self, x: f64) -> Option<Mat2> {
        Some(self.params.matrix(x))
    }
}

/// The two shipped realizations of the family `B_t`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize)]
pub enum FamilyKind {
    /// `B_t = U(y)` for `t > 0`.
    PureRotation,
    /// `B_t = C_t U(y) C_t⁻¹` with `C_t = diag(e^{M(t)/2}, e^{-M(t)/2})`.
    MaxStress,
}

impl FamilyKind {
    pub fn name(self) -> &'static str {
        match self {
            FamilyKind::PureRotation => "pure",
            FamilyKind::MaxStress => "stress",
        }
    }
}

impl std::str::FromStr for FamilyKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "pure" | "pure-rotation" => Ok(FamilyKind::PureRotation),
            "stress" | "max-stress" => Ok(FamilyKind::MaxStress),
            other => Err(Error::InvalidParameter(format!("unknown family {other:?}"))),
        }
    }
}

/// A documented gap between the shipped families and a continuous family.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub struct KnownLimitation {
    pub id: &'static str,
    pub summary: &'static str,
}

/// Limitations of every shipped family.
pub const KNOWN_LIMITATIONS: &[KnownLimitation] = &[
    KnownLimitation {
        id: "assembled-cocycle-not-continuous",
        summary: "Both families jump at t = 0 (Herman's matrix at t = 0, a bounded family for t > 0), \
so the assembled cocycle is discontinuous at the boundary points of the gaps. \
Exponent statements are checked; C0 continuity of the assembled cocycle is out of scope.",
    },
    KnownLimitation {
        id: "periodic-measures-only",
        summary: "Ergodic measures other than the Sturmian one are tested through periodic orbits only.",
    },
];

/// `B_t(y)` for `t ∈ [0, 1]`, with `B_0` Herman's matrix.
#[derive(Clone, Debug)]
pub struct BFamily {
    kind: FamilyKind,
    herman: HermanParams,
    modulation: Arc<ModulationContext>,
}

impl BFamily {
    pub fn new(kind: FamilyKind, herman: HermanParams, modulation: Arc<ModulationContext>) -> Self {
        BFamily { kind, herman, modulation }
    }

    pub fn kind(&self) -> FamilyKind {
        self.kind
    }

    pub fn herman(&self) -> &HermanParams {
        &self.herman
    }

    pub fn modulation(&self) -> &Arc<ModulationContext> {
        &self.modulation
    }

    /// Both realizations jump at `t = 0`.
    pub fn is_continuous_at_zero(&self) -> bool {
        false
    }

    pub fn known_limitations(&self) -> &'static [KnownLimitation] {
        KNOWN_LIMITATIONS
    }

    /// `log` of the declared product bound, `M(t)`.
    pub fn log_bound(&self, t: f64) -> Result<f64> {
        self.modulation.m(t)
    }

    /// `C_t = diag(e^{M/2}, e^{-M/2})` for a given `M`.
    pub fn conjugator(m: f64) -> Mat2 {
        let h = (0.5 * m).exp();
        Mat2::diag(h, 1.0 / h)
    }

    /// `B_t(y)`.
    pub fn eval(&self, t: f64, y: f64) -> Result<Mat2> {
        if t == 0.0 {
            return Ok(self.herman.matrix(y));
        }
        if !(t > 0.0 && t <= 1.0) {
            return Err(Error::InvalidParameter(format!("t must lie in [0, 1], got {t}")));
        }
        Ok(match self.kind {
            FamilyKind::PureRotation => Mat2::rotation(y),
            FamilyKind::MaxStress => {
                let m = self.modulation.m(t)?;
                let u = Mat2::rotation(y);
                let h = (0.5 * m).exp();
                // C U C⁻¹ written out to keep det = 1 to rounding.
                Mat2::new(u.a, u.b * h * h, u.c / (h * h), u.d)
            }
        })
    }

    /// `B_t^{(n)}(y)` along the rotation orbit, with `t` held fixed.
    pub fn product(&self, t: f64, y: f64, n: usize) -> Result<Mat2> {
        let a = self.herman.alpha.frac_value(64).to_f64();
        let mut p = Mat2::IDENTITY;
        for k in 0..n {
            p = self.eval(t, (y + k as f64 * a).rem_euclid(1.0))? * p;
        }
        Ok(p)
    }
}

/// Everything the assembled generator computed at one point.
#[derive(Clone, Debug)]
pub struct Evaluation {
    pub gap: Option<usize>,
    pub psi: f64,
    pub h: CirclePoint,
    pub matrix: Mat2,
}

/// `A(x) = B_{ψ(x)}(h(x))` over the doubling map.
#[derive(Clone, Debug)]
pub struct AssembledCocycle {
    family: BFamily,
}

impl AssembledCocycle {
    pub fn new(family: BFamily) -> Self {
        AssembledCocycle { family }
    }

    /// Gap structure, modulation and family for `α`, `ε` and Herman's `c`.
    pub fn build(alpha: Arc<AlphaSpec>, epsilon: f64, c: f64, kind: FamilyKind) -> Result<Self> {
        let gaps = Arc::new(GapStructure::for_alpha(alpha.clone()));
        let modulation = Arc::new(ModulationContext::new(gaps, epsilon)?);
        let herman = HermanParams::from_c(c, alpha)?;
        Ok(AssembledCocycle::new(BFamily::new(kind, herman, modulation)))
    }

    pub fn family(&self) -> &BFamily {
        &self.family
    }

    pub fn modulation(&self) -> &Arc<ModulationContext> {
        self.family.modulation()
    }

    pub fn epsilon(&self) -> f64 {
        self.modulation().epsilon()
    }

    /// Classify, read `ψ`, locate `h(x)`, then evaluate the family.
    pub fn evaluate(&self, x: &CirclePoint) -> Result<Evaluation> {
        let profile = self
            .modulation()
            .profile(x)
            .map_err(|e| if e.is_precision_limited() { Error::EvaluationUndecidable(Box::new(e)) } else { e })?;
        let gaps = self.modulation().gaps();
        let h = match (profile.gap, x) {
            (Some(n), _) => CirclePoint::Lattice(LatticePoint::new(
                BigRational::zero(),
                -(n as i64),
                gaps.alpha().clone(),
            )),
            (None, CirclePoint::Staircase { param, .. }) => CirclePoint::Lattice(param.clone()),
            (None, other) => gaps.staircase().factor_map_h(other)?,
        };
        let psi = profile.psi.to_f64();
        let y = h.to_f64();
        let matrix = match profile.gap {
            None => self.family.herman.matrix(y),
            Some(_) => self.family.eval(psi, y)?,
        };
        Ok(Evaluation { gap: profile.gap, psi, h, matrix })
    }

    /// On `K` the generator is Herman's cocycle read through `h`, so the
    /// product along a doubling orbit equals Herman's product along the
    /// rotation orbit of `h(x)`. Returns that cocycle and starting point.
    pub fn rotation_side(&self, x: &CirclePoint) -> Result<(HermanCocycle, CirclePoint)> {
        match x {
            CirclePoint::Staircase { param, .. } => {
                Ok((self.family.herman.cocycle(), CirclePoint::Lattice(param.clone())))
            }
            _ => Err(Error::InvalidParameter(
                "rotation-side reduction needs a point of K given as π(F(u))".into(),
            )),
        }
    }
}

impl Cocycle for AssembledCocycle {
    fn base(&self) -> BaseMap {
        BaseMap::Doubling
    }

    fn eval(&self, x: &CirclePoint) -> Result<Mat2> {
        Ok(self.evaluate(x)?.matrix)
    }
}
