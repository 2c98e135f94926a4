//! End-to-end numerical checks shared by the command-line drivers and the
//! acceptance tests.

use std::sync::Arc;

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::ToPrimitive;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;

use crate::alpha::AlphaSpec;
use crate::circle::{CirclePoint, LatticePoint};
use crate::cocycle::{birkhoff_exponent, periodic_exponent, Cocycle, TwoSymbolCocycle};
use crate::error::{Error, Result};
use crate::families::{AssembledCocycle, BFamily, HermanParams};
use crate::lab::{orbit_record, BOUND_TOLERANCE};
use crate::mat2::{BallMat2, Mat2};
use crate::modulation::ModulationContext;
use crate::periodic::{mechanical_orbit, HittingDecomposition};

/// Birkhoff estimate of Herman's exponent from one starting point.
#[derive(Clone, Debug, Serialize)]
pub struct HermanStart {
    pub x0: f64,
    pub vector: f64,
    pub qr: f64,
    /// `|qr - c|`.
    pub error: f64,
}

/// Seeded uniform starting points in `[0, 1)`.
pub fn seeded_starts(seed: u64, count: usize) -> Vec<f64> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..count).map(|_| rng.gen::<f64>()).collect()
}

/// Herman's exponent from each starting point, `iters` steps each.
pub fn herman_exponent(params: &HermanParams, iters: usize, starts: &[f64]) -> Result<Vec<HermanStart>> {
    let spec = params.cocycle();
    let c = params.c();
    starts
        .par_iter()
        .map(|&x0| {
            let e = birkhoff_exponent(&spec, &CirclePoint::from_f64(x0), iters)?;
            Ok(HermanStart { x0, vector: e.vector, qr: e.qr, error: (e.qr - c).abs() })
        })
        .collect()
}

/// `A^{(2n)}(R^{-n}(p)) - (-1)^n U(-nα)` in ball arithmetic.
#[derive(Clone, Debug, Serialize)]
pub struct IdentityRow {
    pub n: usize,
    /// Upper bound on the spectral norm of the difference.
    pub residual_upper: f64,
    /// Some entry of the difference provably nonzero.
    pub refuted: bool,
}

pub fn nonuniform_identity(params: &HermanParams, base: &BigRational, n: usize, prec: u32) -> Result<IdentityRow> {
    let alpha = params.alpha();
    let start = CirclePoint::Lattice(LatticePoint::new(base.clone(), -(n as i64), alpha.clone()));
    let product = params.ball_product(&start, 2 * n, prec)?;
    let angle = LatticePoint::new(BigRational::from_integer(BigInt::from(0)), -(n as i64), alpha.clone()).value(prec);
    let mut target = BallMat2::rotation(&angle);
    if n % 2 == 1 {
        target = target.neg();
    }
    let diff = product.sub(&target);
    let refuted = [&diff.a, &diff.b, &diff.c, &diff.d].iter().any(|e| !e.contains_zero());
    Ok(IdentityRow { n, residual_upper: diff.norm_enclosure().upper().to_f64(), refuted })
}

/// The identity rows for `n = 0..=n_max` at base point `p`.
pub fn nonuniform_identity_rows(params: &HermanParams, base: &BigRational, n_max: usize, prec: u32) -> Result<Vec<IdentityRow>> {
    (0..=n_max).into_par_iter().map(|n| nonuniform_identity(params, base, n, prec)).collect()
}

/// The largest `log ||B_t^{(n)}(y)||` over `n <= n_max` for one `(t, y)`.
#[derive(Clone, Debug, Serialize)]
pub struct AuditRow {
    pub t: f64,
    pub y: f64,
    pub max_log_norm: f64,
    /// `n` at which the maximum occurs.
    pub argmax: usize,
    pub bound: f64,
    pub excess: f64,
}

/// `t` values for the contract audit: every control abscissa plus a geometric
/// mesh from `t_min` to 1.
pub fn audit_ts(modulation: &ModulationContext, mesh: usize) -> Vec<f64> {
    let mut ts: Vec<f64> = modulation.control_points().iter().map(|p| p.t).collect();
    let lo = modulation.t_min().ln();
    for i in 0..mesh {
        let s = i as f64 / (mesh.max(2) - 1) as f64;
        ts.push((lo + s * (0.0 - lo)).exp().clamp(modulation.t_min(), 1.0));
    }
    ts.sort_by(|a, b| b.partial_cmp(a).expect("finite"));
    ts.dedup();
    ts
}

/// Base points `y` for the audit; `1/4` attains the bound at `n = 1` for the
/// max-stress realization.
pub fn audit_ys(seed: u64, random: usize) -> Vec<f64> {
    let mut ys = vec![0.0, 0.25, 0.5, 0.75];
    ys.extend(seeded_starts(seed, random));
    ys
}

/// Checks `log ||B_t^{(n)}(y)|| <= M(t)` for every `n <= n_max`.
pub fn family_audit(family: &BFamily, ts: &[f64], ys: &[f64], n_max: usize) -> Result<Vec<AuditRow>> {
    let alpha = family.herman().alpha().frac_value(64).to_f64();
    let cells: Vec<(f64, f64)> = ts.iter().flat_map(|&t| ys.iter().map(move |&y| (t, y))).collect();
    cells
        .par_iter()
        .map(|&(t, y)| {
            let bound = family.log_bound(t)?;
            let mut p = Mat2::IDENTITY;
            let (mut best, mut argmax) = (f64::NEG_INFINITY, 0);
            for k in 0..n_max {
                p = family.eval(t, (y + k as f64 * alpha).rem_euclid(1.0))? * p;
                let v = p.norm().ln();
                if v > best {
                    best = v;
                    argmax = k + 1;
                }
            }
            Ok(AuditRow { t, y, max_log_norm: best, argmax, bound, excess: best - bound })
        })
        .collect()
}

/// Exponent of the assembled cocycle on a Sturmian point `π(F(u))`.
#[derive(Clone, Debug, Serialize)]
pub struct SturmianRun {
    pub u: f64,
    pub vector: f64,
    pub qr: f64,
    /// Steps on which the doubling-side and rotation-side matrices were
    /// compared for bitwise equality.
    pub compared: usize,
    pub mismatches: usize,
}

/// `λ_1(D, A, ν)` via the rotation-side product of Herman's cocycle at `u`,
/// after confirming the first `compare` matrices agree on both sides.
pub fn sturmian_exponent(a: &AssembledCocycle, u: &BigRational, iters: usize, compare: usize) -> Result<SturmianRun> {
    let alpha = a.modulation().gaps().alpha().clone();
    let x = CirclePoint::staircase_upper(u.clone(), alpha.clone());
    let (herman, start) = a.rotation_side(&x)?;
    let mut mismatches = 0;
    let (mut dx, mut ry) = (x, start.clone());
    for _ in 0..compare {
        if a.eval(&dx)? != herman.eval(&ry)? {
            mismatches += 1;
        }
        dx = dx.doubling();
        ry = ry.rotate(&alpha);
    }
    let e = birkhoff_exponent(&herman, &start, iters)?;
    Ok(SturmianRun { u: u.to_f64().unwrap_or(f64::NAN), vector: e.vector, qr: e.qr, compared: compare, mismatches })
}

/// Seeded dyadic parameters `u ∈ [0, 1)`.
pub fn seeded_parameters(seed: u64, count: usize) -> Vec<BigRational> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..count)
        .map(|_| BigRational::new(BigInt::from(rng.gen::<u64>() >> 11), BigInt::from(1u64 << 53)))
        .collect()
}

/// A mechanical orbit of a convergent `p/q` of `α`.
#[derive(Clone, Debug, Serialize)]
pub struct MechanicalRow {
    pub p: u64,
    pub q: u64,
    pub hits: usize,
    pub mu_i0: f64,
    pub lambda1: f64,
    pub bound: f64,
}

/// Rows for every convergent with `2 <= q <= max_q`.
pub fn mechanical_convergents(a: &AssembledCocycle, max_q: u64) -> Result<Vec<MechanicalRow>> {
    let alpha: &Arc<AlphaSpec> = a.modulation().gaps().alpha();
    let mut rows = Vec::new();
    for c in alpha.convergents(max_q)? {
        let q = c.denom().to_u64().expect("q fits");
        if q < 2 {
            continue;
        }
        let frac = &c - c.floor();
        let p = frac.numer().to_u64().expect("p fits");
        let orbit = mechanical_orbit(p, q)?;
        let record = orbit_record(a, &orbit)?;
        let hitting = HittingDecomposition::classify(&orbit, a.modulation().gaps(), a.modulation().max_depth())?;
        rows.push(MechanicalRow {
            p,
            q,
            hits: hitting.hits.len(),
            mu_i0: hitting.hits.len() as f64 / q as f64,
            lambda1: record.lambda1,
            bound: record.bound,
        });
    }
    Ok(rows)
}

impl MechanicalRow {
    /// `μ(I_0) <= 2/q` and `λ_1 <= ε√(2/q)`.
    pub fn within(&self, epsilon: f64) -> bool {
        let q = self.q as f64;
        self.mu_i0 <= 2.0 / q && self.lambda1 <= epsilon * (2.0 / q).sqrt() + BOUND_TOLERANCE
    }
}

/// Two-symbol demo: word exponent and circle-orbit exponent of `(0^{k-1}1)^∞`.
#[derive(Clone, Debug, Serialize)]
pub struct ShiftRow {
    pub k: u32,
    pub word_exponent: f64,
    /// `None` for `k = 1`, whose circle point `1/(2^1 - 1) = 0` codes `0^∞`.
    pub circle_exponent: Option<f64>,
}

pub fn demo_shift(k_max: u32) -> Result<Vec<ShiftRow>> {
    if k_max > 62 {
        return Err(Error::CapExceeded { requested: k_max as usize, cap: 62 });
    }
    (1..=k_max)
        .map(|k| {
            let mut word = vec![0u8; k as usize - 1];
            word.push(1);
            let circle_exponent = if k >= 2 {
                Some(periodic_exponent(&TwoSymbolCocycle, &TwoSymbolCocycle::orbit_of_single_one(k))?)
            } else {
                None
            };
            Ok(ShiftRow { k, word_exponent: TwoSymbolCocycle::word_exponent(&word), circle_exponent })
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::families::FamilyKind;

    fn herman(gamma: f64) -> HermanParams {
        HermanParams::from_gamma(gamma, Arc::new(AlphaSpec::gold2())).unwrap()
    }

    #[test]
    fn identity_holds_at_quarter_and_fails_at_half() {
        let p = herman(2.0);
        let quarter = BigRational::new(1.into(), 4.into());
        let half = BigRational::new(1.into(), 2.into());
        for n in [0, 1, 2, 7] {
            let r = nonuniform_identity(&p, &quarter, n, 128).unwrap();
            assert!(r.residual_upper < 1e-20 && !r.refuted, "{r:?}");
        }
        for n in [1, 2, 7] {
            assert!(nonuniform_identity(&p, &half, n, 128).unwrap().refuted);
        }
    }

    #[test]
    fn max_stress_attains_bound_at_quarter() {
        let a = AssembledCocycle::build(Arc::new(AlphaSpec::gold2()), 0.1, 1.25f64.ln(), FamilyKind::MaxStress).unwrap();
        let ts = audit_ts(a.modulation(), 5);
        let rows = family_audit(a.family(), &ts, &[0.25], 20).unwrap();
        for r in rows {
            assert!(r.excess <= 1e-9);
            assert!(r.excess > -1e-6, "{r:?}");
        }
    }

    #[test]
    fn shift_demo_exponents_vanish() {
        for row in demo_shift(8).unwrap() {
            assert_eq!(row.word_exponent, 0.0);
            assert_eq!(row.circle_exponent.unwrap_or(0.0), 0.0);
        }
    }
}
