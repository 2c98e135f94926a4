use std::sync::{Arc, OnceLock};

use num_bigint::BigInt;
use num_rational::BigRational;
use proptest::prelude::*;
use sturmian_cocycle::alpha::AlphaSpec;
use sturmian_cocycle::ball::BallReal;
use sturmian_cocycle::circle::CirclePoint;
use sturmian_cocycle::gaps::GapStructure;
use sturmian_cocycle::modulation::{ell, ModulationContext};
use sturmian_cocycle::Error;

fn context() -> &'static ModulationContext {
    static CTX: OnceLock<ModulationContext> = OnceLock::new();
    CTX.get_or_init(|| {
        ModulationContext::new(Arc::new(GapStructure::for_alpha(Arc::new(AlphaSpec::gold2()))), 0.1).unwrap()
    })
}

fn rat(p: i64, q: i64) -> BigRational {
    BigRational::new(BigInt::from(p), BigInt::from(q))
}

#[test]
fn ell_examples() {
    assert_eq!(ell(0), 1);
    assert_eq!(ell(13), 1);
    assert_eq!(ell(14), 2);
    assert_eq!(ell(78), 2);
    assert_eq!(ell(79), 3);
    // Oracle: largest j with j^4 <= n + 2.
    for n in 0..5_000usize {
        let j = (1..).take_while(|j: &u64| j.pow(4) <= n as u64 + 2).last().unwrap();
        assert_eq!(ell(n), j);
    }
}

#[test]
fn phi_is_one_at_gap_midpoints() {
    let m = context();
    for n in 0..=10 {
        let x = CirclePoint::from_rational(m.gaps().gap(n).unwrap().rational_at(&rat(1, 2), 256));
        let phi = m.phi(&x).unwrap();
        assert!((phi.to_f64() - 1.0).abs() < 1e-30, "n = {n}");
    }
}

#[test]
fn phi_and_psi_vanish_on_k() {
    let m = context();
    for k in 1..10 {
        let x = m.gaps().sample_sturmian(rat(k, 10));
        assert!(m.phi(&x).unwrap().is_exact() && m.phi(&x).unwrap().contains_zero());
        assert!(m.psi(&x).unwrap().contains_zero());
    }
}

#[test]
fn phi_is_constant_along_gap_towers() {
    let m = context();
    for n in 0..=10 {
        let gap = m.gaps().gap(n).unwrap();
        for i in 1..=50 {
            let mut x = CirclePoint::from_rational(gap.rational_at(&rat(i, 51), 256));
            let phi = m.phi(&x).unwrap();
            for k in 1..=n {
                x = x.doubling();
                let p = m.profile(&x).unwrap();
                assert_eq!(p.gap, Some(n - k));
                assert!(p.phi.overlaps(&phi), "n = {n}, sample {i}, step {k}");
            }
        }
    }
}

#[test]
fn psi_on_gap_is_bounded_by_reciprocal_ell() {
    let m = context();
    for n in 0..=20 {
        let gap = m.gaps().gap(n).unwrap();
        let bound = 1.0 / ell(n) as f64;
        for i in 1..40 {
            let x = CirclePoint::from_rational(gap.rational_at(&rat(i, 40), 256));
            assert!(m.psi(&x).unwrap().to_f64() <= bound + 1e-15);
        }
    }
    let x = CirclePoint::from_rational(m.gaps().gap(14).unwrap().rational_at(&rat(1, 2), 256));
    assert!((m.psi(&x).unwrap().to_f64() - 0.5).abs() < 1e-30);
}

#[test]
fn truncated_psi_is_uniformly_close() {
    let m = context();
    let grid = 20_000;
    for n in [5, 14, 30] {
        let bound = 1.0 / ell(n) as f64;
        let mut worst: f64 = 0.0;
        for i in 0..grid {
            let x = CirclePoint::rational(2 * i + 1, 2 * grid);
            let full = m.psi(&x).unwrap();
            let cut = m.psi_truncated(&x, n).unwrap();
            worst = worst.max(full.sub(&cut).abs().to_f64());
        }
        assert!(worst <= bound, "n = {n}: {worst}");
    }
}

#[test]
fn m_passes_through_first_control_points() {
    let m = context();
    assert_eq!(m.m(1.0).unwrap(), 0.0);
    for p in m.control_points() {
        let v = m.m(p.t).unwrap();
        if p.first_of_run {
            assert_eq!(v, p.v, "n = {}", p.n);
        } else {
            assert!(v < p.v, "n = {}", p.n);
        }
    }
    for n in 0..=10 {
        let want = 0.1 * ((n + 2) as f64).powf(0.25) / std::f64::consts::SQRT_2;
        assert!((m.control_points()[n].v - want).abs() < 1e-15);
    }
}

#[test]
fn control_abscissae_are_nonincreasing_and_values_increasing() {
    let m = context();
    for w in m.control_points().windows(2) {
        assert!(w[1].t <= w[0].t);
        assert!(w[1].v > w[0].v);
    }
    for w in m.knots().windows(2) {
        assert!(w[1].0 < w[0].0 && w[1].1 > w[0].1);
    }
}

#[test]
fn m_is_strictly_decreasing_on_a_log_mesh() {
    let m = context();
    let lo = m.t_min().ln();
    let mesh: Vec<f64> = (0..1_000).map(|i| (lo * (1.0 - i as f64 / 999.0)).exp()).collect();
    for w in mesh.windows(2) {
        assert!(m.m(w[0]).unwrap() > m.m(w[1]).unwrap(), "{} {}", w[0], w[1]);
    }
}

#[test]
fn m_refuses_to_extrapolate() {
    let m = context();
    assert!(matches!(m.m(m.t_min() / 2.0), Err(Error::DepthExceeded { .. })));
    assert!(m.m(1.5).is_err());
}

#[test]
fn m_of_encloses_pointwise_values() {
    let m = context();
    for p in m.control_points().iter().take(8) {
        let b = BallReal::from_f64(p.t, 64);
        assert!(m.m_of(&b).unwrap().contains_ball(&BallReal::from_f64(m.m(p.t).unwrap(), 64)));
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(1_000))]

    #[test]
    fn m_is_monotone(a in 0.0f64..1.0, b in 0.0f64..1.0) {
        let m = context();
        let lo = m.t_min().ln();
        let (s, t) = ((lo * a).exp(), (lo * b).exp());
        prop_assume!(s != t);
        let (ms, mt) = (m.m(s).unwrap(), m.m(t).unwrap());
        prop_assert_eq!(s < t, ms > mt);
    }
}
