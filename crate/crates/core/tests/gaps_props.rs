use std::sync::Arc;

use num_bigint::BigInt;
use num_rational::BigRational;
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use sturmian_cocycle::alpha::AlphaSpec;
use sturmian_cocycle::ball::{BallReal, Dyadic};
use sturmian_cocycle::circle::{circle_distance_ball, CirclePoint};
use sturmian_cocycle::gaps::{dyadic_from_bits, GapClassification, GapStructure};
use sturmian_cocycle::staircase::{StairArg, StaircaseContext};

fn gs() -> GapStructure {
    GapStructure::for_alpha(Arc::new(AlphaSpec::gold2()))
}

fn rat(p: i64, q: i64) -> BigRational {
    BigRational::new(BigInt::from(p), BigInt::from(q))
}

fn frac(b: &BallReal) -> BallReal {
    b.sub(&BallReal::from_int(b.floor_mid(), b.prec()))
}

#[test]
fn lengths_are_powers_of_two() {
    let g = gs();
    let table = g.table(128, 31).unwrap();
    for gap in &table.gaps {
        let want = BallReal::from_dyadic(Dyadic::new(1, -(gap.index as i64 + 1)), 128);
        assert!(gap.length.sub(&want).abs().upper().to_f64() < 2f64.powi(-60), "n = {}", gap.index);
    }
}

#[test]
fn doubling_maps_each_gap_onto_the_previous() {
    let g = gs();
    let table = g.table(128, 21).unwrap();
    for n in 1..=20 {
        let (cur, prev) = (&table.gaps[n], &table.gaps[n - 1]);
        for (a, b) in [(&cur.left, &prev.left), (&cur.right, &prev.right)] {
            let d = circle_distance_ball(&a.mul_2exp(1), b);
            assert!(d.upper().to_f64() < 2f64.powi(-50), "n = {n}");
        }
        assert!(cur.length.mul_2exp(1).overlaps(&prev.length));
    }
}

#[test]
fn gap_closures_are_disjoint() {
    let g = gs();
    let table = g.table(128, 25).unwrap();
    for i in 0..25 {
        for j in 0..i {
            let (a, b) = (&table.gaps[i], &table.gaps[j]);
            // Arc from a.left to b.left must exceed a's length and fall short
            // of 1 - b's length.
            let r = frac(&b.left.sub(&a.left));
            assert_eq!(r.cmp_decided(&a.length), Some(std::cmp::Ordering::Greater), "{i} vs {j}");
            let room = BallReal::from_int(1, 128).sub(&b.length);
            assert_eq!(r.cmp_decided(&room), Some(std::cmp::Ordering::Less), "{i} vs {j}");
        }
    }
}

#[test]
fn zero_lies_in_the_first_gap() {
    let c = gs().classify(&CirclePoint::zero(), 60).unwrap();
    assert_eq!(c.gap_index(), Some(0));
}

#[test]
fn nudged_endpoint_is_classified_with_its_distance() {
    let g = gs();
    let gap = g.gap(3).unwrap();
    let x = gap.left.add(&BallReal::from_dyadic(Dyadic::new(1, -20), 128));
    match g.classify(&CirclePoint::from_rational(x.mid().to_rational()), 60).unwrap() {
        GapClassification::InGap { n, distance } => {
            assert_eq!(n, 3);
            assert!((distance.to_f64() - 2f64.powi(-20)).abs() < 1e-12);
        }
        other => panic!("{other:?}"),
    }
}

#[test]
fn staircase_samples_avoid_the_gaps() {
    // Realized as plain balls, so classification runs the interval tests.
    let g = gs();
    let c = StaircaseContext::new(g.alpha().clone());
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    for _ in 0..200 {
        let u = dyadic_from_bits(rng.gen());
        let y = c.upper(u).unwrap();
        let x = CirclePoint::Ball(y.frac_mid());
        match g.classify(&x, 40) {
            Ok(GapClassification::InK { .. }) | Ok(GapClassification::OnBoundary { .. }) => {}
            other => panic!("{other:?}"),
        }
    }
}

#[test]
fn first_delta_matches_endpoint_enumeration() {
    let g = gs();
    let c = StaircaseContext::new(g.alpha().clone());
    let at = |coef| StairArg::Lattice { base: rat(0, 1), coef };
    let i0 = [c.lower(at(0)).unwrap(), c.upper(at(0)).unwrap()];
    let i1 = [c.lower(at(-1)).unwrap(), c.upper(at(-1)).unwrap()];
    let mut best: Option<BallReal> = None;
    for p in &i1 {
        for q in &i0 {
            let d = circle_distance_ball(p, q).mul_2exp(2);
            best = Some(match best {
                None => d,
                Some(b) => b.min(&d),
            });
        }
    }
    let oracle = best.unwrap();
    let delta = g.delta(1).unwrap();
    assert!(delta.overlaps(&oracle), "{delta} vs {oracle}");
}

#[test]
fn deltas_are_nonincreasing_in_the_unit_interval() {
    let ds = gs().deltas(12).unwrap();
    let mut prev = 1.0;
    for d in ds {
        let v = d.value.to_f64();
        assert!(v > 0.0 && v <= prev && v < 1.0);
        prev = v;
    }
}

#[test]
fn preimages_in_first_gap_stay_away_from_its_boundary() {
    // I_0 ∩ D^{-1}(I_n) = I_{n+1} + 1/2.
    let g = gs();
    let table = g.table(256, 14).unwrap();
    let half = BallReal::from_dyadic(Dyadic::new(1, -1), 256);
    let g0 = &table.gaps[0];
    let deltas = g.deltas(13).unwrap();
    for n in 0..12 {
        let gap = &table.gaps[n + 1];
        for i in 1..20 {
            let s = BallReal::from_rational(&rat(i, 20), 256);
            let x = gap.left.add(&half).add(&gap.length.mul(&s));
            let d = circle_distance_ball(&x, &g0.left).min(&circle_distance_ball(&x, &g0.right)).mul_2exp(2);
            assert_ne!(d.cmp_decided(&deltas[n].value), Some(std::cmp::Ordering::Less));
        }
    }
}

#[test]
fn grid_classification_reproduces_gap_measure() {
    let g = gs();
    let grid = 4096;
    let depth = 10;
    let mut covered = 0usize;
    for i in 0..grid {
        let x = CirclePoint::rational(2 * i as i64 + 1, 2 * grid as i64);
        if let GapClassification::InGap { .. } = g.classify(&x, depth).unwrap() {
            covered += 1;
        }
    }
    let want = 1.0 - 2f64.powi(-(depth as i32) - 1);
    assert!((covered as f64 / grid as f64 - want).abs() <= 2.0 / grid as f64 + 2f64.powi(-(depth as i32) - 1));
}

#[test]
fn semiconjugacy_on_gap_points() {
    let g = gs();
    let alpha = g.alpha().clone();
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    let mut checked = 0;
    while checked < 10_000 {
        let x = CirclePoint::from_rational(dyadic_from_bits(rng.gen()));
        if g.classify(&x, 60).unwrap().gap_index() == Some(0) {
            continue;
        }
        let lhs = g.factor_map(&x.doubling(), 60).unwrap();
        let rhs = g.factor_map(&x, 60).unwrap().rotate(&alpha);
        let d = lhs.distance(&rhs, 128).unwrap();
        assert!(d.contains_zero(), "{x}");
        checked += 1;
    }
}

#[test]
fn semiconjugacy_through_staircase_inversion() {
    let g = gs();
    let alpha = g.alpha().clone();
    let c = StaircaseContext::new(alpha.clone());
    let mut rng = ChaCha8Rng::seed_from_u64(13);
    for _ in 0..20 {
        let y = c.upper(dyadic_from_bits(rng.gen())).unwrap();
        let x = CirclePoint::Ball(y.frac_mid());
        let lhs = c.factor_map_h(&x.doubling()).unwrap();
        let rhs = c.factor_map_h(&x).unwrap().rotate(&alpha);
        assert!(lhs.distance(&rhs, 128).unwrap().contains_zero());
    }
}

#[test]
fn factor_map_is_zero_on_the_first_gap() {
    let g = gs();
    let gap = g.gap(0).unwrap();
    for i in 1..=20 {
        let x = CirclePoint::from_rational(gap.rational_at(&rat(i, 21), 128));
        let h = g.factor_map(&x, 60).unwrap();
        assert_eq!(h.exact_eq(&CirclePoint::zero()), Some(true));
    }
}

#[test]
fn sturmian_measure_gives_no_mass_to_gaps() {
    // 10^5 samples with zero hits bounds ν(∪ I_n) below 3e-5 at the 3σ level.
    let g = gs();
    let c = StaircaseContext::new(g.alpha().clone());
    let table = g.table(128, 13).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(17);
    let mut hits = 0;
    for _ in 0..100_000 {
        let u = dyadic_from_bits(rng.gen());
        let y = frac(&c.eval_at(&StairArg::from(u), sturmian_cocycle::circle::Side::Upper, 96).unwrap());
        for gap in &table.gaps {
            let r = frac(&y.sub(&gap.left));
            if r.sign() == Some(std::cmp::Ordering::Greater) && r.cmp_decided(&gap.length) == Some(std::cmp::Ordering::Less) {
                hits += 1;
            }
        }
    }
    assert_eq!(hits, 0);
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(200))]

    #[test]
    fn factor_map_recovers_sturmian_parameter(bits in any::<u64>()) {
        let g = gs();
        let u = dyadic_from_bits(bits);
        let x = g.sample_sturmian(u.clone());
        prop_assert_eq!(g.factor_map(&x, 60).unwrap().exact_eq(&CirclePoint::from_rational(u)), Some(true));
    }
}
