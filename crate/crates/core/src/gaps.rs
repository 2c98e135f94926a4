//! The gaps `I_n = π((f(-nα), F(-nα)))`, the Cantor set `K` they leave
//! behind, the separation sequence `δ(n)`, and sampling from the measure
//! carried by `K`.

use std::collections::BTreeMap;
use std::sync::{Arc, RwLock};

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::Zero;

use crate::alpha::AlphaSpec;
use crate::ball::{BallReal, Dyadic, PrecisionPolicy};
use crate::circle::{circle_distance_ball, CirclePoint, LatticePoint, Side};
use crate::error::{Error, Result};
use crate::staircase::{StairArg, StaircaseContext};

/// Default number of gaps scanned by [`GapStructure::classify`].
pub const DEFAULT_MAX_DEPTH: usize = 60;

/// One gap `I_n`, with endpoint enclosures.
#[derive(Clone, Debug)]
pub struct GapInterval {
    pub index: usize,
    /// `f(-nα)` reduced so the midpoint lies in `[0, 1)`.
    pub left: BallReal,
    /// `left + length`; may exceed 1 when the gap wraps through 0.
    pub right: BallReal,
    /// `F(-nα) - f(-nα)`.
    pub length: BallReal,
    alpha: Arc<AlphaSpec>,
}

impl GapInterval {
    fn lattice(&self) -> LatticePoint {
        LatticePoint::new(BigRational::zero(), -(self.index as i64), self.alpha.clone())
    }

    /// `π(f(-nα))`, exact.
    pub fn left_point(&self) -> CirclePoint {
        CirclePoint::Staircase { param: self.lattice(), side: Side::Lower }
    }

    /// `π(F(-nα))`, exact.
    pub fn right_point(&self) -> CirclePoint {
        CirclePoint::Staircase { param: self.lattice(), side: Side::Upper }
    }

    /// The value of `h` on the closure of the gap: `π(-nα)`.
    pub fn h_value(&self) -> CirclePoint {
        CirclePoint::Lattice(self.lattice())
    }

    /// The point `left + s·length` for `s ∈ (0, 1)`, reduced mod 1.
    pub fn point_at(&self, s: &BigRational) -> BallReal {
        let s = BallReal::from_rational(s, self.left.prec());
        self.left.add(&self.length.mul(&s)).frac_mid()
    }

    /// A dyadic rational inside the gap at relative position `s`, accurate to
    /// `2^-bits`; suitable as an exact sample point.
    pub fn rational_at(&self, s: &BigRational, bits: u32) -> BigRational {
        let p = self.point_at(s);
        let (rounded, _) = p.mid().round_to(bits.max(8));
        let q = rounded.to_rational();
        let k = q.floor();
        q - k
    }

    pub fn midpoint(&self) -> BallReal {
        self.point_at(&BigRational::new(1.into(), 2.into()))
    }
}

/// Endpoints of `I_0 .. I_{depth-1}` at one precision.
#[derive(Debug)]
pub struct GapTable {
    pub bits: u32,
    pub gaps: Vec<GapInterval>,
}

/// Where a point sits relative to the gaps.
#[derive(Clone, Debug)]
pub enum GapClassification {
    /// Inside `I_n`, at the given distance from its nearer endpoint.
    InGap { n: usize, distance: BallReal },
    /// Outside `I_0 .. I_depth`.
    InK { depth: usize },
    /// Comparison with an endpoint of `I_n` stayed undecidable.
    OnBoundary { n: usize },
}

impl GapClassification {
    pub fn gap_index(&self) -> Option<usize> {
        match self {
            GapClassification::InGap { n, .. } => Some(*n),
            _ => None,
        }
    }

    pub fn is_in_k(&self) -> bool {
        matches!(self, GapClassification::InK { .. })
    }
}

/// Running minimum defining `δ(n)`.
#[derive(Clone, Debug)]
pub struct DeltaEntry {
    pub n: usize,
    pub value: BallReal,
    /// Gap index and endpoint side realizing the minimum.
    pub argmin: (usize, Side),
}

/// Gap endpoints for one rotation number, cached per precision.
#[derive(Debug)]
pub struct GapStructure {
    staircase: StaircaseContext,
    tables: RwLock<BTreeMap<u32, Arc<GapTable>>>,
}

impl GapStructure {
    pub fn new(staircase: StaircaseContext) -> Self {
        GapStructure { staircase, tables: RwLock::new(BTreeMap::new()) }
    }

    pub fn for_alpha(alpha: Arc<AlphaSpec>) -> Self {
        GapStructure::new(StaircaseContext::new(alpha))
    }

    pub fn staircase(&self) -> &StaircaseContext {
        &self.staircase
    }

    pub fn alpha(&self) -> &Arc<AlphaSpec> {
        self.staircase.alpha()
    }

    pub fn policy(&self) -> PrecisionPolicy {
        self.staircase.policy()
    }

    fn build_gap(&self, n: usize, bits: u32) -> Result<GapInterval> {
        let arg = StairArg::Lattice { base: BigRational::zero(), coef: -(n as i64) };
        let (lo, hi) = self.policy().escalate(|b| {
            let b = b.max(bits);
            let lo = self.staircase.eval_at(&arg, Side::Lower, b)?;
            let hi = self.staircase.eval_at(&arg, Side::Upper, b)?;
            Ok((lo, hi))
        })?;
        let length = hi.sub(&lo);
        let shift = BallReal::from_int(lo.floor_mid(), lo.prec());
        let left = lo.sub(&shift);
        let right = hi.sub(&shift);
        Ok(GapInterval { index: n, left, right, length, alpha: self.alpha().clone() })
    }

    /// Endpoints of at least `depth` gaps at `bits` of precision.
    pub fn table(&self, bits: u32, depth: usize) -> Result<Arc<GapTable>> {
        if let Some(t) = self.tables.read().expect("gap cache poisoned").get(&bits) {
            if t.gaps.len() >= depth {
                return Ok(t.clone());
            }
        }
        let mut tables = self.tables.write().expect("gap cache poisoned");
        let mut gaps = match tables.get(&bits) {
            Some(t) if t.gaps.len() >= depth => return Ok(t.clone()),
            Some(t) => t.gaps.clone(),
            None => Vec::new(),
        };
        for n in gaps.len()..depth {
            gaps.push(self.build_gap(n, bits)?);
        }
        let t = Arc::new(GapTable { bits, gaps });
        tables.insert(bits, t.clone());
        Ok(t)
    }

    /// `I_n` at the default precision.
    pub fn gap(&self, n: usize) -> Result<GapInterval> {
        Ok(self.table(self.policy().bits, n + 1)?.gaps[n].clone())
    }

    /// Locate `x` among `I_0 .. I_max_depth`.
    ///
    /// Staircase points `π(F(u))`, `π(f(u))` lie in `K` by construction.
    pub fn classify(&self, x: &CirclePoint, max_depth: usize) -> Result<GapClassification> {
        if let CirclePoint::Staircase { .. } = x {
            return Ok(GapClassification::InK { depth: max_depth });
        }
        let res = self.policy().escalate(|bits| {
            let table = self.table(bits, max_depth + 1)?;
            let xb = x.realize(bits + 32)?;
            classify_ball(&xb, &table, max_depth)
        });
        match res {
            Err(Error::OnBoundary { index }) => Ok(GapClassification::OnBoundary { n: index }),
            other => other,
        }
    }

    /// `δ(1), ..., δ(n_max)` with the endpoint realizing each minimum.
    pub fn deltas(&self, n_max: usize) -> Result<Vec<DeltaEntry>> {
        self.policy().escalate(|bits| self.deltas_at(n_max, bits.max(256)))
    }

    fn deltas_at(&self, n_max: usize, bits: u32) -> Result<Vec<DeltaEntry>> {
        let table = self.table(bits, n_max + 1)?;
        let g0 = &table.gaps[0];
        let to_boundary = |p: &BallReal| {
            circle_distance_ball(p, &g0.left).min(&circle_distance_ball(p, &g0.right)).mul_2exp(2)
        };
        let mut out: Vec<DeltaEntry> = Vec::with_capacity(n_max);
        for k in 1..=n_max {
            let g = &table.gaps[k];
            let a = to_boundary(&g.left);
            let b = to_boundary(&g.right);
            let (cand, side) = match a.cmp_decided(&b) {
                Some(std::cmp::Ordering::Greater) => (b, Side::Upper),
                Some(_) => (a, Side::Lower),
                None => return Err(Error::Undecidable { what: "δ endpoint order", bits }),
            };
            let entry = match out.last() {
                None => DeltaEntry { n: k, value: cand, argmin: (k, side) },
                Some(prev) => match cand.cmp_decided(&prev.value) {
                    Some(std::cmp::Ordering::Less) => DeltaEntry { n: k, value: cand, argmin: (k, side) },
                    Some(std::cmp::Ordering::Greater) => DeltaEntry { n: k, ..prev.clone() },
                    _ => return Err(Error::Undecidable { what: "δ running minimum", bits }),
                },
            };
            out.push(entry);
        }
        Ok(out)
    }

    /// `δ(n) = min_{1<=k<=n} 4·d(∂I_k, ∂I_0)`.
    pub fn delta(&self, n: usize) -> Result<BallReal> {
        if n == 0 {
            return Err(Error::InvalidParameter("δ(n) needs n >= 1".into()));
        }
        Ok(self.deltas(n)?.pop().expect("n >= 1").value)
    }

    /// `π(F(u))`: pushing uniform `u` forward gives the measure carried by `K`.
    pub fn sample_sturmian(&self, u: BigRational) -> CirclePoint {
        CirclePoint::staircase_upper(u, self.alpha().clone())
    }

    /// `h(x)`: `π(-nα)` on `I_n`, exact on staircase points, and staircase
    /// inversion elsewhere.
    pub fn factor_map(&self, x: &CirclePoint, max_depth: usize) -> Result<CirclePoint> {
        match x {
            CirclePoint::Staircase { param, .. } => Ok(CirclePoint::Lattice(param.clone())),
            _ => match self.classify(x, max_depth)? {
                GapClassification::InGap { n, .. } => Ok(CirclePoint::Lattice(LatticePoint::new(
                    BigRational::zero(),
                    -(n as i64),
                    self.alpha().clone(),
                ))),
                _ => self.staircase.factor_map_h(x),
            },
        }
    }
}

fn classify_ball(x: &BallReal, table: &GapTable, max_depth: usize) -> Result<GapClassification> {
    use std::cmp::Ordering::*;
    let one = BallReal::from_int(1, x.prec());
    for g in table.gaps.iter().take(max_depth + 1) {
        let y = x.sub(&g.left);
        let k = y.mid().floor();
        let r = if k.is_zero() { y } else { y.sub(&BallReal::from_int(k, x.prec())) };
        let above_left = r.sign();
        let vs_len = r.cmp_decided(&g.length);
        match (above_left, vs_len) {
            (Some(Greater), Some(Less)) => {
                let distance = r.min(&g.length.sub(&r));
                return Ok(GapClassification::InGap { n: g.index, distance });
            }
            (Some(Greater), Some(Greater)) if r.cmp_decided(&one) == Some(Less) => continue,
            _ => return Err(Error::OnBoundary { index: g.index }),
        }
    }
    Ok(GapClassification::InK { depth: max_depth })
}

/// Helper for samplers: a uniform dyadic rational in `[0, 1)` from 53 random bits.
pub fn dyadic_from_bits(bits: u64) -> BigRational {
    let m = bits >> 11;
    Dyadic::new(BigInt::from(m), -53).to_rational()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn gs() -> GapStructure {
        GapStructure::for_alpha(Arc::new(AlphaSpec::gold2()))
    }

    #[test]
    fn zero_lies_in_first_gap() {
        let g = gs();
        let c = g.classify(&CirclePoint::zero(), 60).unwrap();
        assert_eq!(c.gap_index(), Some(0));
        let g0 = g.gap(0).unwrap();
        assert!((g0.left.to_f64() - 0.6450982785693543).abs() < 1e-15);
    }

    #[test]
    fn lengths_halve() {
        let g = gs();
        for n in 0..=30 {
            let gap = g.gap(n).unwrap();
            let want = BallReal::from_dyadic(Dyadic::new(1, -(n as i64) - 1), 128);
            let diff = gap.length.sub(&want);
            assert!(diff.contains_zero() && diff.rad().log2_ceil() < -60, "n = {n}");
        }
    }

    #[test]
    fn nudged_endpoint_is_inside() {
        let g = gs();
        let gap = g.gap(3).unwrap();
        let x = gap.left.add(&BallReal::from_dyadic(Dyadic::new(1, -20), 128));
        match g.classify(&CirclePoint::Ball(x), 60).unwrap() {
            GapClassification::InGap { n, distance } => {
                assert_eq!(n, 3);
                assert!((distance.to_f64() - 2f64.powi(-20)).abs() < 1e-25);
            }
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn deltas_decrease_and_match_known_plateaus() {
        let g = gs();
        let d = g.deltas(13).unwrap();
        assert!((d[0].value.to_f64() - 0.2902).abs() < 1e-4);
        for w in d.windows(2) {
            assert_ne!(w[1].value.cmp_decided(&w[0].value), Some(std::cmp::Ordering::Greater));
        }
        assert!(d.iter().all(|e| e.value.to_f64() > 0.0 && e.value.to_f64() < 1.0));
    }

    #[test]
    fn staircase_points_are_in_k() {
        let g = gs();
        let x = g.sample_sturmian(BigRational::new(1.into(), 7.into()));
        assert!(g.classify(&x, 40).unwrap().is_in_k());
        // Numerically, too: the realized point avoids every gap up to depth 40.
        let b = x.realize(256).unwrap();
        let t = g.table(256, 41).unwrap();
        assert!(matches!(classify_ball(&b, &t, 40), Ok(GapClassification::InK { .. })));
    }
}
