use std::sync::{Arc, OnceLock};

use num_bigint::BigInt;
use num_rational::BigRational;
use proptest::prelude::*;
use sturmian_cocycle::alpha::AlphaSpec;
use sturmian_cocycle::checks::{audit_ts, audit_ys, family_audit};
use sturmian_cocycle::circle::{CirclePoint, LatticePoint};
use sturmian_cocycle::cocycle::{birkhoff_exponent, product, Cocycle};
use sturmian_cocycle::families::{AssembledCocycle, FamilyKind, HermanParams, KNOWN_LIMITATIONS};
use sturmian_cocycle::mat2::Mat2;

fn alpha() -> Arc<AlphaSpec> {
    Arc::new(AlphaSpec::gold2())
}

fn assembled(kind: FamilyKind) -> &'static AssembledCocycle {
    static PURE: OnceLock<AssembledCocycle> = OnceLock::new();
    static STRESS: OnceLock<AssembledCocycle> = OnceLock::new();
    let cell = match kind {
        FamilyKind::PureRotation => &PURE,
        FamilyKind::MaxStress => &STRESS,
    };
    cell.get_or_init(|| AssembledCocycle::build(alpha(), 0.1, 1.25f64.ln(), kind).unwrap())
}

fn rat(p: i64, q: i64) -> BigRational {
    BigRational::new(BigInt::from(p), BigInt::from(q))
}

#[test]
fn herman_parameter_examples() {
    let p = HermanParams::from_c(2f64.ln(), alpha()).unwrap();
    assert!((p.gamma() - (2.0 + 3f64.sqrt())).abs() < 1e-12);
    assert!((0.5 * (p.gamma() + 1.0 / p.gamma()) - 2.0).abs() < 1e-12);
    assert!(HermanParams::from_gamma(1.0, alpha()).is_err());
    assert!(HermanParams::from_gamma(0.5, alpha()).is_err());
    let h = HermanParams::from_gamma(2.0, alpha()).unwrap();
    assert_eq!(h.matrix(0.0), Mat2::diag(2.0, 0.5));
    let e = birkhoff_exponent(&h.cocycle(), &CirclePoint::from_f64(0.1), 100_000).unwrap();
    assert!((e.qr - 1.25f64.ln()).abs() < 5e-3);
}

#[test]
fn both_families_start_at_herman() {
    for kind in [FamilyKind::PureRotation, FamilyKind::MaxStress] {
        let f = assembled(kind).family();
        for y in [0.0, 0.2, 0.7] {
            assert_eq!(f.eval(0.0, y).unwrap(), f.herman().matrix(y));
        }
        assert!(!f.is_continuous_at_zero());
    }
    assert!(KNOWN_LIMITATIONS.iter().any(|l| l.id == "assembled-cocycle-not-continuous"));
}

#[test]
fn pure_rotation_products_are_isometries() {
    let f = assembled(FamilyKind::PureRotation).family();
    for t in [1.0, 0.3, 1e-5, 1e-20] {
        let p = f.product(t, 0.123, 1_000).unwrap();
        assert!((p.norm() - 1.0).abs() < 1e-12);
    }
}

#[test]
fn max_stress_contract_on_audit_grid() {
    let a = assembled(FamilyKind::MaxStress);
    let ts = audit_ts(a.modulation(), 40);
    let rows = family_audit(a.family(), &ts, &audit_ys(3, 4), 1_000).unwrap();
    for r in &rows {
        assert!(r.excess <= 1e-9, "{r:?}");
    }
    // y = 1/4 reaches the bound after one step.
    for r in rows.iter().filter(|r| r.y == 0.25) {
        assert!(r.excess > -1e-6, "{r:?}");
    }
}

#[test]
fn pure_rotation_contract_on_audit_grid() {
    let a = assembled(FamilyKind::PureRotation);
    let ts = audit_ts(a.modulation(), 20);
    for r in family_audit(a.family(), &ts, &audit_ys(3, 4), 1_000).unwrap() {
        assert!(r.max_log_norm.abs() < 1e-12 && r.excess <= 1e-9);
    }
}

#[test]
fn gap_midpoint_evaluates_to_rotation() {
    let a = assembled(FamilyKind::PureRotation);
    let gap = a.modulation().gaps().gap(5).unwrap();
    let x = CirclePoint::from_rational(gap.rational_at(&rat(1, 2), 256));
    let e = a.evaluate(&x).unwrap();
    assert_eq!(e.gap, Some(5));
    assert_eq!(e.h.exact_eq(&CirclePoint::Lattice(LatticePoint::new(rat(0, 1), -5, alpha()))), Some(true));
    let angle = (-5.0 * alpha().frac_value(64).to_f64()).rem_euclid(1.0);
    assert!(e.matrix.sub(&Mat2::rotation(angle)).max_abs() < 1e-14);
}

#[test]
fn assembled_products_on_k_match_rotation_side() {
    for kind in [FamilyKind::PureRotation, FamilyKind::MaxStress] {
        let a = assembled(kind);
        for u in [rat(1, 7), rat(2, 3), rat(123, 1000)] {
            let x = a.modulation().gaps().sample_sturmian(u);
            let (herman, start) = a.rotation_side(&x).unwrap();
            let n = 1_000;
            let lhs = product(a, &x, n).unwrap();
            let rhs = product(&herman, &start, n).unwrap();
            assert_eq!(lhs, rhs);
        }
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(300))]

    #[test]
    fn assembled_values_are_unimodular(p in 0i64..1_000_003) {
        for kind in [FamilyKind::PureRotation, FamilyKind::MaxStress] {
            let m = assembled(kind).eval(&CirclePoint::rational(p, 1_000_003)).unwrap();
            prop_assert!((m.det() - 1.0).abs() < 1e-12);
            prop_assert!(m.norm() >= 1.0 - 1e-12);
        }
    }

    #[test]
    fn assembled_on_k_factors_through_h(num in 0i64..1_000_000, shift in 0i64..50) {
        let a = assembled(FamilyKind::MaxStress);
        let x = a.modulation().gaps().sample_sturmian(rat(num, 1_000_000));
        let y = (0..shift).fold(x, |y, _| y.doubling());
        let h = a.modulation().gaps().factor_map(&y, 60).unwrap();
        prop_assert_eq!(a.eval(&y).unwrap(), a.family().herman().matrix(h.to_f64()));
    }
}
