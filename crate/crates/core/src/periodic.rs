//! Periodic orbits of the doubling map: necklace enumeration, mechanical
//! (Sturmian) approximants, and hitting-time decompositions.

use num_bigint::BigInt;
use num_integer::Integer;
use num_rational::BigRational;
use num_traits::{One, Zero};
use serde::Serialize;

use crate::circle::CirclePoint;
use crate::error::{Error, Result};
use crate::gaps::{GapClassification, GapStructure};

/// Largest period [`enumerate_orbits`] accepts by default.
pub const DEFAULT_PERIOD_CAP: usize = 16;

/// A periodic orbit `p, Dp, ..., D^{k-1}p` with `p = W/(2^k - 1)`, where `W`
/// is the binary word read most significant digit first.
#[derive(Clone, Debug)]
pub struct PeriodicOrbit {
    pub id: String,
    pub word: Vec<u8>,
    pub points: Vec<CirclePoint>,
}

fn word_value(word: &[u8]) -> BigInt {
    word.iter().fold(BigInt::zero(), |acc, &d| (acc << 1) + BigInt::from(d))
}

fn word_string(word: &[u8]) -> String {
    word.iter().map(|&d| if d == 1 { '1' } else { '0' }).collect()
}

impl PeriodicOrbit {
    /// The orbit whose binary itinerary is `word` repeated.
    pub fn from_word(word: &[u8], id: impl Into<String>) -> Self {
        let k = word.len();
        let den = (BigInt::one() << k) - 1;
        let base = CirclePoint::from_rational(BigRational::new(word_value(word), den));
        let mut points = Vec::with_capacity(k);
        let mut x = base;
        for _ in 0..k {
            let next = x.doubling();
            points.push(x);
            x = next;
        }
        PeriodicOrbit { id: id.into(), word: word.to_vec(), points }
    }

    pub fn period(&self) -> usize {
        self.points.len()
    }

    pub fn base(&self) -> &BigRational {
        self.points[0].as_rational().expect("orbit points are rational")
    }

    /// `D^k p = p` exactly.
    pub fn is_cycle(&self) -> bool {
        let mut x = self.points[0].clone();
        for _ in 0..self.period() {
            x = x.doubling();
        }
        x.exact_eq(&self.points[0]) == Some(true)
    }
}

/// Lyndon words are strictly smaller than each of their proper rotations.
fn is_lyndon(w: u32, k: u32) -> bool {
    let mask = if k == 32 { u32::MAX } else { (1u32 << k) - 1 };
    (1..k).all(|r| w < (((w << r) | (w >> (k - r))) & mask))
}

/// One orbit per binary necklace of length at most `max_period`, ordered by
/// period then word. The all-ones word is dropped: it codes the point `1 = 0`.
pub fn enumerate_orbits(max_period: usize, cap: usize) -> Result<Vec<PeriodicOrbit>> {
    if max_period > cap || max_period > 31 {
        return Err(Error::CapExceeded { requested: max_period, cap: cap.min(31) });
    }
    let mut out = Vec::new();
    for k in 1..=max_period as u32 {
        let all_ones = (1u32 << k) - 1;
        for w in 0..(1u32 << k) {
            if (k > 1 || w == 0) && w != all_ones && is_lyndon(w, k) {
                let word: Vec<u8> = (0..k).rev().map(|i| ((w >> i) & 1) as u8).collect();
                let id = format!("{k}:{}", word_string(&word));
                out.push(PeriodicOrbit::from_word(&word, id));
            }
        }
    }
    Ok(out)
}

/// Number of binary necklaces of exact period `k` (Lyndon words):
/// `(1/k) Σ_{d | k} μ(d) 2^{k/d}`.
pub fn lyndon_count(k: u64) -> u64 {
    let mut total: i64 = 0;
    for d in 1..=k {
        if k.is_multiple_of(d) {
            total += mobius(d) * (1i64 << (k / d));
        }
    }
    (total / k as i64) as u64
}

fn mobius(mut n: u64) -> i64 {
    let mut result = 1;
    let mut p = 2;
    while p * p <= n {
        if n.is_multiple_of(p) {
            n /= p;
            if n.is_multiple_of(p) {
                return 0;
            }
            result = -result;
        }
        p += 1;
    }
    if n > 1 {
        result = -result;
    }
    result
}

/// The lower mechanical word of slope `p/q`:
/// `⌊(k+1)p/q⌋ - ⌊kp/q⌋` for `k = 0..q`.
pub fn mechanical_word(p: u64, q: u64) -> Vec<u8> {
    (0..q).map(|k| ((k + 1) * p / q - k * p / q) as u8).collect()
}

/// The period-`q` orbit whose itinerary is the mechanical word of `p/q`.
pub fn mechanical_orbit(p: u64, q: u64) -> Result<PeriodicOrbit> {
    if !(0 < p && p < q) || p.gcd(&q) != 1 {
        return Err(Error::InvalidParameter(format!("need 0 < p < q coprime, got {p}/{q}")));
    }
    Ok(PeriodicOrbit::from_word(&mechanical_word(p, q), format!("mech:{p}/{q}")))
}

/// Visits of one period of an orbit to `I_0`.
#[derive(Clone, Debug, Serialize)]
pub struct HittingDecomposition {
    pub period: usize,
    /// Indices `k` with `D^k p ∈ I_0`, increasing.
    pub hits: Vec<usize>,
    /// Return times `n_i = k_{i+1} - k_i`, cyclically.
    pub returns: Vec<usize>,
    /// `a_i = (n_i + n_{i+1})/2`.
    pub a: Vec<f64>,
}

impl HittingDecomposition {
    /// From the gap indices of the orbit points (`Some(0)` marks `I_0`).
    pub fn from_gap_indices(gaps: &[Option<usize>]) -> Self {
        let period = gaps.len();
        let hits: Vec<usize> = (0..period).filter(|&k| gaps[k] == Some(0)).collect();
        let j = hits.len();
        let returns: Vec<usize> = (0..j)
            .map(|i| if i + 1 < j { hits[i + 1] - hits[i] } else { hits[0] + period - hits[i] })
            .collect();
        let a = (0..j).map(|i| 0.5 * (returns[i] + returns[(i + 1) % j]) as f64).collect();
        HittingDecomposition { period, hits, returns, a }
    }

    pub fn classify(orbit: &PeriodicOrbit, gaps: &GapStructure, max_depth: usize) -> Result<Self> {
        let mut idx = Vec::with_capacity(orbit.period());
        for x in &orbit.points {
            match gaps.classify(x, max_depth)? {
                GapClassification::InGap { n, .. } => idx.push(Some(n)),
                GapClassification::InK { .. } => idx.push(None),
                GapClassification::OnBoundary { n } => {
                    return Err(Error::EvaluationUndecidable(Box::new(Error::OnBoundary { index: n })));
                }
            }
        }
        Ok(HittingDecomposition::from_gap_indices(&idx))
    }

    /// `μ(I_0)` for the periodic measure: visits over period, reduced.
    pub fn frequency(&self) -> BigRational {
        BigRational::new(BigInt::from(self.hits.len()), BigInt::from(self.period))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn r(p: i64, q: i64) -> BigRational {
        BigRational::new(p.into(), q.into())
    }

    #[test]
    fn small_periods() {
        let o1 = enumerate_orbits(1, 16).unwrap();
        assert_eq!(o1.len(), 1);
        assert_eq!(o1[0].base(), &r(0, 1));
        let o2 = enumerate_orbits(2, 16).unwrap();
        assert_eq!(o2.len(), 2);
        assert_eq!(o2[1].points.iter().map(|p| p.as_rational().unwrap().clone()).collect::<Vec<_>>(), vec![r(1, 3), r(2, 3)]);
        assert!(enumerate_orbits(17, 16).is_err());
    }

    #[test]
    fn counts_match_necklace_formula() {
        let orbits = enumerate_orbits(12, 16).unwrap();
        for k in 2..=12 {
            let got = orbits.iter().filter(|o| o.period() == k).count() as u64;
            assert_eq!(got, lyndon_count(k as u64), "k = {k}");
        }
        assert_eq!(lyndon_count(4), 3);
    }

    #[test]
    fn orbits_are_exact_cycles_with_distinct_points() {
        for o in enumerate_orbits(10, 16).unwrap() {
            assert!(o.is_cycle(), "{}", o.id);
            for i in 0..o.period() {
                for j in 0..i {
                    assert_eq!(o.points[i].exact_eq(&o.points[j]), Some(false));
                }
            }
        }
    }

    #[test]
    fn mechanical_examples() {
        assert_eq!(mechanical_word(1, 2), vec![0, 1]);
        assert_eq!(mechanical_word(2, 5), vec![0, 0, 1, 0, 1]);
        let o = mechanical_orbit(1, 2).unwrap();
        assert_eq!(o.base(), &r(1, 3));
        assert!(mechanical_orbit(2, 4).is_err());
    }

    #[test]
    fn hitting_decomposition_sums_to_period() {
        let h = HittingDecomposition::from_gap_indices(&[Some(0), Some(2), Some(1), Some(0), Some(0)]);
        assert_eq!(h.hits, vec![0, 3, 4]);
        assert_eq!(h.returns, vec![3, 1, 1]);
        assert_eq!(h.returns.iter().sum::<usize>(), 5);
        assert_eq!(h.frequency(), r(3, 5));
        assert_eq!(h.a, vec![2.0, 1.0, 2.0]);
    }
}
