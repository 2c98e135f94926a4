//! The modulation layer: the slowly growing integer sequence `ℓ(n)`, the
//! gap-profile functions `φ` and `ψ = φ/ℓ`, and the decreasing function `M`
//! interpolating the control points `(δ(n+1)/ℓ(n), ε(n+2)^{1/4}/√2)`.

use std::sync::Arc;

use num_integer::Roots;

use crate::ball::{BallReal, Dyadic};
use crate::circle::CirclePoint;
use crate::error::{Error, Result};
use crate::gaps::{GapClassification, GapStructure, DEFAULT_MAX_DEPTH};

/// Default number of control points.
pub const DEFAULT_CONTROL_DEPTH: usize = 64;
/// Default `ε`.
pub const DEFAULT_EPSILON: f64 = 0.1;

/// `⌊(n+2)^{1/root}⌋` in integer arithmetic.
pub fn ell_with_root(n: usize, root: u32) -> u64 {
    (n as u64 + 2).nth_root(root)
}

/// `⌊(n+2)^{1/4}⌋`.
pub fn ell(n: usize) -> u64 {
    ell_with_root(n, 4)
}

/// One control point of `M`.
#[derive(Clone, Debug)]
pub struct ControlPoint {
    pub n: usize,
    /// `δ(n+1)`.
    pub delta: BallReal,
    pub ell: u64,
    /// `δ(n+1)/ℓ(n)`.
    pub t: f64,
    /// `ε(n+2)^{1/root}/√2`.
    pub v: f64,
    /// False when `t` repeats the previous control point's abscissa; `M`
    /// then passes through the first (smaller) value.
    pub first_of_run: bool,
}

/// `φ(x)`, `ψ(x)` and the gap they were read from.
#[derive(Clone, Debug)]
pub struct Profile {
    /// Gap index, or `None` on `K`.
    pub gap: Option<usize>,
    pub phi: BallReal,
    pub psi: BallReal,
}

/// Everything needed to evaluate `φ`, `ψ` and `M`.
#[derive(Debug)]
pub struct ModulationContext {
    gaps: Arc<GapStructure>,
    epsilon: f64,
    root: u32,
    max_depth: usize,
    control: Vec<ControlPoint>,
    /// `(t, M(t))` with `t` strictly decreasing from `(1, 0)`.
    knots: Vec<(f64, f64)>,
}

impl ModulationContext {
    pub fn new(gaps: Arc<GapStructure>, epsilon: f64) -> Result<Self> {
        ModulationContext::build(gaps, epsilon, 4, DEFAULT_CONTROL_DEPTH, DEFAULT_MAX_DEPTH)
    }

    /// `root` selects `ℓ(n) = ⌊(n+2)^{1/root}⌋`; `depth` is the number of
    /// control points; `max_depth` the number of gaps scanned by `φ`.
    pub fn build(
        gaps: Arc<GapStructure>,
        epsilon: f64,
        root: u32,
        depth: usize,
        max_depth: usize,
    ) -> Result<Self> {
        if !(epsilon > 0.0 && epsilon.is_finite()) {
            return Err(Error::InvalidParameter(format!("ε must be positive, got {epsilon}")));
        }
        if root == 0 || depth == 0 {
            return Err(Error::InvalidParameter("root and depth must be positive".into()));
        }
        let deltas = gaps.deltas(depth)?;
        let mut control = Vec::with_capacity(depth);
        let mut knots = vec![(1.0, 0.0)];
        let mut prev_key = None;
        for n in 0..depth {
            let d = &deltas[n];
            let l = ell_with_root(n, root);
            let t = d.value.div_int(l).to_f64();
            let v = epsilon * ((n + 2) as f64).powf(1.0 / root as f64) / std::f64::consts::SQRT_2;
            let key = (d.argmin, l);
            let first_of_run = prev_key != Some(key);
            prev_key = Some(key);
            if first_of_run {
                let &(t_prev, v_prev) = knots.last().expect("nonempty");
                if !(t < t_prev && v > v_prev) {
                    return Err(Error::InvalidParameter(format!(
                        "control points not strictly monotone at n = {n}: t = {t}, previous {t_prev}"
                    )));
                }
                knots.push((t, v));
            }
            control.push(ControlPoint { n, delta: d.value.clone(), ell: l, t, v, first_of_run });
        }
        Ok(ModulationContext { gaps, epsilon, root, max_depth, control, knots })
    }

    pub fn gaps(&self) -> &Arc<GapStructure> {
        &self.gaps
    }

    pub fn epsilon(&self) -> f64 {
        self.epsilon
    }

    pub fn max_depth(&self) -> usize {
        self.max_depth
    }

    pub fn control_points(&self) -> &[ControlPoint] {
        &self.control
    }

    /// Interpolation nodes of `M`, starting at `(1, 0)`.
    pub fn knots(&self) -> &[(f64, f64)] {
        &self.knots
    }

    /// Smallest `t` at which `M` is defined.
    pub fn t_min(&self) -> f64 {
        self.knots.last().expect("nonempty").0
    }

    pub fn ell(&self, n: usize) -> u64 {
        ell_with_root(n, self.root)
    }

    /// `M(t)` for `t ∈ [t_min, 1]`, linear in `log t` between nodes.
    pub fn m(&self, t: f64) -> Result<f64> {
        if !(t <= 1.0) || t.is_nan() {
            return Err(Error::InvalidParameter(format!("M is defined on (0, 1], got {t}")));
        }
        let t_min = self.t_min();
        if t < t_min {
            return Err(Error::DepthExceeded { t, t_min });
        }
        // First knot with abscissa <= t; knots are sorted by decreasing t.
        let i = self.knots.partition_point(|&(tk, _)| tk > t);
        let (t1, v1) = self.knots[i];
        if t == t1 {
            return Ok(v1);
        }
        let (t0, v0) = self.knots[i - 1];
        let s = (t0.ln() - t.ln()) / (t0.ln() - t1.ln());
        Ok(v0 + (v1 - v0) * s)
    }

    /// Enclosure of `M(t)` over a ball of arguments.
    pub fn m_of(&self, t: &BallReal) -> Result<BallReal> {
        if t.is_exact() {
            let tf = t.to_f64();
            if Dyadic::from_f64(tf) == *t.mid() {
                let v = self.m(tf)?;
                if self.knots.iter().any(|&(tk, _)| tk == tf) {
                    return Ok(BallReal::from_f64(v, 64));
                }
                return Ok(widen(v, v));
            }
        }
        let t_min = self.t_min();
        let mut lo = next_down(t.lower().to_f64());
        if lo < t_min {
            if t.lower() < Dyadic::from_f64(t_min) {
                return Err(Error::DepthExceeded { t: lo, t_min });
            }
            lo = t_min;
        }
        let hi = next_up(t.upper().to_f64()).min(1.0);
        let m_hi = self.m(lo)?;
        let m_lo = self.m(hi)?;
        Ok(widen(m_lo, m_hi))
    }

    /// `φ` and `ψ` at `x`.
    pub fn profile(&self, x: &CirclePoint) -> Result<Profile> {
        match self.gaps.classify(x, self.max_depth)? {
            GapClassification::InGap { n, distance } => {
                let phi = distance.mul_2exp(n as i64 + 2);
                let psi = phi.div_int(self.ell(n));
                Ok(Profile { gap: Some(n), phi, psi })
            }
            GapClassification::InK { .. } => {
                let z = BallReal::zero(self.gaps.policy().bits);
                Ok(Profile { gap: None, phi: z.clone(), psi: z })
            }
            GapClassification::OnBoundary { n } => Err(Error::OnBoundary { index: n }),
        }
    }

    /// `φ(x) = 2^{n+2} d(x, ∂I_n)` on `I_n`, zero on `K`.
    pub fn phi(&self, x: &CirclePoint) -> Result<BallReal> {
        Ok(self.profile(x)?.phi)
    }

    /// `ψ(x) = φ(x)/ℓ(n)` on `I_n`, zero on `K`.
    pub fn psi(&self, x: &CirclePoint) -> Result<BallReal> {
        Ok(self.profile(x)?.psi)
    }

    /// `ψ` with every gap of index above `n` zeroed out.
    pub fn psi_truncated(&self, x: &CirclePoint, n: usize) -> Result<BallReal> {
        let p = self.profile(x)?;
        Ok(match p.gap {
            Some(k) if k > n => BallReal::zero(p.psi.prec()),
            _ => p.psi,
        })
    }
}

/// Ball covering `[lo, hi]` plus a few ulps of floating-point slack.
fn widen(lo: f64, hi: f64) -> BallReal {
    let slack = 4.0 * f64::EPSILON * hi.abs().max(lo.abs()).max(f64::MIN_POSITIVE);
    BallReal::from_endpoints(&Dyadic::from_f64(lo - slack), &Dyadic::from_f64(hi + slack), 64)
}

pub(crate) fn next_up(x: f64) -> f64 {
    if x.is_nan() || x == f64::INFINITY {
        return x;
    }
    if x == 0.0 {
        return f64::from_bits(1);
    }
    let b = x.to_bits();
    f64::from_bits(if x > 0.0 { b + 1 } else { b - 1 })
}

pub(crate) fn next_down(x: f64) -> f64 {
    -next_up(-x)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::alpha::AlphaSpec;

    fn ctx() -> ModulationContext {
        let gaps = Arc::new(GapStructure::for_alpha(Arc::new(AlphaSpec::gold2())));
        ModulationContext::new(gaps, 0.1).unwrap()
    }

    #[test]
    fn ell_values() {
        assert_eq!(ell(0), 1);
        assert_eq!(ell(13), 1);
        assert_eq!(ell(14), 2);
        assert_eq!(ell(78), 2);
        assert_eq!(ell(79), 3);
    }

    #[test]
    fn m_passes_through_nodes() {
        let c = ctx();
        assert_eq!(c.m(1.0).unwrap(), 0.0);
        for p in c.control_points().iter().filter(|p| p.first_of_run) {
            assert_eq!(c.m(p.t).unwrap(), p.v);
        }
        for p in c.control_points() {
            assert!(c.m(p.t).unwrap() <= p.v);
        }
    }

    #[test]
    fn m_rejects_out_of_range() {
        let c = ctx();
        assert!(matches!(c.m(c.t_min() / 2.0), Err(Error::DepthExceeded { .. })));
        assert!(c.m(1.5).is_err());
    }

    #[test]
    fn m_enclosure_brackets_pointwise_values() {
        let c = ctx();
        let t = BallReal::from_endpoints(&Dyadic::from_f64(0.01), &Dyadic::from_f64(0.02), 64);
        let m = c.m_of(&t).unwrap();
        for s in [0.01, 0.015, 0.02] {
            assert!(m.contains(&Dyadic::from_f64(c.m(s).unwrap())));
        }
    }

    #[test]
    fn ulp_steps() {
        assert!(next_up(1.0) > 1.0 && next_down(1.0) < 1.0);
        assert!(next_up(-1.0) > -1.0);
        assert!(next_down(0.0) < 0.0);
    }
}
