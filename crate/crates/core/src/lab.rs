//! Verification harnesses over the assembled cocycle: the gap-traversal
//! bound, the return-time chain, and the periodic-orbit sweep.

use num_bigint::BigInt;
use num_integer::Integer;
use num_rational::BigRational;
use rayon::prelude::*;
use serde::Serialize;

use crate::ball::{BallReal, Dyadic};
use crate::circle::CirclePoint;
use crate::cocycle::{exponent_of_period_product, Cocycle};
use crate::error::{Error, Result};
use crate::families::AssembledCocycle;
use crate::gaps::GapClassification;
use crate::mat2::{Mat2, ScaledMat2};
use crate::modulation::ell;
use crate::periodic::{HittingDecomposition, PeriodicOrbit};

/// Slack for floating-point comparisons against proven bounds.
pub const BOUND_TOLERANCE: f64 = 1e-9;

/// Block boundaries `0 = n_1 < n_2 < ... < n_{s+1} = n + 1` with
/// `n_j = j⁴ - 2`, on which `ℓ` is constant.
pub fn block_boundaries(n: usize) -> Vec<usize> {
    let s = ell(n) as usize;
    let mut out = vec![0];
    out.extend((2..=s).map(|j| j.pow(4) - 2));
    out.push(n + 1);
    out
}

/// One block `P_j` of a gap traversal.
#[derive(Clone, Debug, Serialize)]
pub struct BlockReport {
    pub j: usize,
    /// Gap indices `[start, end)` covered by the block.
    pub start: usize,
    pub end: usize,
    pub log_norm: f64,
    /// `M(t/j)` with `t = φ(x)`.
    pub bound: f64,
}

/// One sample of a gap traversal.
#[derive(Clone, Debug, Serialize)]
pub struct TraversalSample {
    pub x: f64,
    pub phi: f64,
    pub log_norm: f64,
    pub blocks: Vec<BlockReport>,
}

/// Result of checking `log ||A^{(n+1)}(x)|| <= ε√((n+m+2)/2)` on samples of
/// `I_n ∩ D^{-(n+1)}(I_m)`.
#[derive(Clone, Debug, Serialize)]
pub struct GapTraversalReport {
    pub n: usize,
    pub m: usize,
    pub bound: f64,
    pub samples: Vec<TraversalSample>,
    /// Samples that failed to land in the target set at working precision.
    pub skipped: usize,
    pub violations: usize,
    pub block_violations: usize,
}

impl GapTraversalReport {
    pub fn max_log_norm(&self) -> f64 {
        self.samples.iter().map(|s| s.log_norm).fold(f64::NEG_INFINITY, f64::max)
    }
}

const SAMPLE_BITS: u32 = 256;

/// Exact dyadic points of `I_n ∩ D^{-(n+1)}(I_m)`.
///
/// The target set is the preimage of `I_{m+1} + 1/2 ⊂ I_0` under the branch
/// of `D^n` mapping `I_n` onto `I_0`; positions are evenly spread.
pub fn traversal_points(a: &AssembledCocycle, n: usize, m: usize, samples: usize) -> Result<Vec<BigRational>> {
    let gaps = a.modulation().gaps();
    let table = gaps.table(SAMPLE_BITS, n.max(m + 1) + 1)?;
    let g0 = &table.gaps[0];
    let gn = &table.gaps[n];
    let gm = &table.gaps[m + 1];
    let half = BallReal::from_dyadic(Dyadic::new(1, -1), SAMPLE_BITS);
    let mut out = Vec::with_capacity(samples);
    for i in 0..samples {
        let s = BallReal::from_rational(
            &BigRational::new(BigInt::from(2 * i + 1), BigInt::from(2 * samples)),
            SAMPLE_BITS,
        );
        let z = gm.left.add(&half).add(&gm.length.mul(&s));
        let offset = z.sub(&g0.left).frac_mid();
        let x = gn.left.add(&offset.mul_2exp(-(n as i64))).frac_mid();
        let (mid, _) = x.mid().round_to(SAMPLE_BITS);
        let q = mid.to_rational();
        out.push(q.clone() - BigRational::from_integer(q.floor().to_integer()));
    }
    Ok(out)
}

/// Direct-product check of the gap-traversal bound.
pub fn verify_gap_traversal(a: &AssembledCocycle, n: usize, m: usize, samples: usize) -> Result<GapTraversalReport> {
    let eps = a.epsilon();
    let bound = eps * (((n + m + 2) as f64) / 2.0).sqrt();
    let gaps = a.modulation().gaps();
    let depth = a.modulation().max_depth();
    let blocks = block_boundaries(n);
    let mut report = GapTraversalReport {
        n,
        m,
        bound,
        samples: Vec::new(),
        skipped: 0,
        violations: 0,
        block_violations: 0,
    };
    for q in traversal_points(a, n, m, samples)? {
        let x = CirclePoint::from_rational(q);
        // orbit[k] = D^k x, which lies in I_{n-k}
        let mut orbit = Vec::with_capacity(n + 2);
        let mut y = x.clone();
        for _ in 0..=n + 1 {
            let next = y.doubling();
            orbit.push(y);
            y = next;
        }
        let lands = |p: &CirclePoint, want: usize| -> Result<bool> {
            Ok(matches!(gaps.classify(p, depth)?, GapClassification::InGap { n, .. } if n == want))
        };
        if !lands(&orbit[0], n)? || !lands(&orbit[n + 1], m)? {
            report.skipped += 1;
            continue;
        }
        let evals = orbit[..=n].iter().map(|p| a.evaluate(p)).collect::<Result<Vec<_>>>()?;
        let phi = a.modulation().phi(&orbit[0])?.to_f64();
        let mut total = ScaledMat2::IDENTITY;
        for e in &evals {
            total = total.left_mul(&e.matrix);
        }
        let log_norm = total.log_norm();
        if log_norm > bound + BOUND_TOLERANCE {
            report.violations += 1;
        }
        // P_j = A(x_{n_j}) ··· A(x_{n_{j+1}-1}) with x_k = D^{n-k} x ∈ I_k.
        let mut block_reports = Vec::with_capacity(blocks.len() - 1);
        for (j, w) in blocks.windows(2).enumerate() {
            let j = j + 1;
            let mut p = Mat2::IDENTITY;
            for k in (w[0]..w[1]).rev() {
                p = evals[n - k].matrix * p;
            }
            let block_bound = a.family().log_bound(phi / j as f64)?;
            let log_norm = p.norm().ln();
            if log_norm > block_bound + BOUND_TOLERANCE {
                report.block_violations += 1;
            }
            block_reports.push(BlockReport { j, start: w[0], end: w[1], log_norm, bound: block_bound });
        }
        report.samples.push(TraversalSample { x: x.to_f64(), phi, log_norm, blocks: block_reports });
    }
    Ok(report)
}

/// [`verify_gap_traversal`] over every `(n, m) ∈ [0, n_max] × [0, m_max]`,
/// in row-major order.
pub fn traversal_grid(a: &AssembledCocycle, n_max: usize, m_max: usize, samples: usize) -> Result<Vec<GapTraversalReport>> {
    // Warm the shared gap table once so workers only read it.
    a.modulation().gaps().table(SAMPLE_BITS, n_max.max(m_max + 1) + 1)?;
    let cells: Vec<(usize, usize)> = (0..=n_max).flat_map(|n| (0..=m_max).map(move |m| (n, m))).collect();
    cells.par_iter().map(|&(n, m)| verify_gap_traversal(a, n, m, samples)).collect()
}

/// The return-time chain along a periodic orbit unrolled over several periods:
/// `log ||A^{(k_j+1)}(x)|| <= C + ε Σ_{i<j} √a_i <= C + ε √j √(Σ_{i<j} a_i)`.
#[derive(Clone, Debug, Serialize)]
pub struct ChainReport {
    pub checked: usize,
    pub violations: usize,
    /// Largest `lhs - (C + ε√j√Σa)`; nonpositive when the chain holds.
    pub worst_gap: f64,
}

fn chain_check(eps: f64, gap_idx: &[Option<usize>], matrices: &[Mat2], periods: usize) -> ChainReport {
    let k = gap_idx.len();
    let len = k * periods;
    let hits: Vec<usize> = (0..len).filter(|&t| gap_idx[t % k] == Some(0)).collect();
    let mut prefix = Vec::with_capacity(len + 1);
    let mut p = ScaledMat2::IDENTITY;
    prefix.push(p);
    for t in 0..len {
        p = p.left_mul(&matrices[t % k]);
        prefix.push(p);
    }
    let mut report = ChainReport { checked: 0, violations: 0, worst_gap: f64::NEG_INFINITY };
    if hits.len() < 3 {
        return report;
    }
    let c = prefix[hits[0] + 1].log_norm();
    let n: Vec<usize> = hits.windows(2).map(|w| w[1] - w[0]).collect();
    let mut sum_sqrt = 0.0;
    let mut sum_a = 0.0;
    for j in 1..n.len() {
        let a = 0.5 * (n[j - 1] + n[j]) as f64;
        sum_sqrt += a.sqrt();
        sum_a += a;
        let lhs = prefix[hits[j] + 1].log_norm();
        let term = c + eps * sum_sqrt;
        let cs = c + eps * (j as f64).sqrt() * sum_a.sqrt();
        report.checked += 1;
        if lhs > term + BOUND_TOLERANCE || term > cs + BOUND_TOLERANCE {
            report.violations += 1;
        }
        report.worst_gap = report.worst_gap.max(lhs - cs);
    }
    report
}

/// One row of the periodic-orbit scatter.
#[derive(Clone, Debug, Serialize)]
pub struct SweepRecord {
    pub orbit_id: String,
    pub period: usize,
    #[serde(rename = "mu_I0_num")]
    pub mu_i0_num: u64,
    #[serde(rename = "mu_I0_den")]
    pub mu_i0_den: u64,
    pub lambda1: f64,
    pub bound: f64,
    pub margin: f64,
    #[serde(skip)]
    pub chain: Option<ChainReport>,
}

/// Orbit exponent, `μ(I_0)` and the chain check for one periodic orbit.
pub fn orbit_record(a: &AssembledCocycle, orbit: &PeriodicOrbit) -> Result<SweepRecord> {
    if !orbit.is_cycle() {
        return Err(Error::NotPeriodic(orbit.id.clone()));
    }
    let evals = orbit.points.iter().map(|p| a.evaluate(p)).collect::<Result<Vec<_>>>()?;
    let gaps: Vec<Option<usize>> = evals.iter().map(|e| e.gap).collect();
    let hitting = HittingDecomposition::from_gap_indices(&gaps);
    let k = orbit.period();
    let mut p = ScaledMat2::IDENTITY;
    for e in &evals {
        p = p.left_mul(&e.matrix);
    }
    let lambda1 = exponent_of_period_product(&p, k);
    let hits = hitting.hits.len() as u64;
    let g = hits.gcd(&(k as u64)).max(1);
    let mu = hits as f64 / k as f64;
    let bound = a.epsilon() * mu.sqrt();
    let matrices: Vec<Mat2> = evals.iter().map(|e| e.matrix).collect();
    Ok(SweepRecord {
        orbit_id: orbit.id.clone(),
        period: k,
        mu_i0_num: hits / g,
        mu_i0_den: k as u64 / g,
        lambda1,
        bound,
        margin: bound - lambda1,
        chain: Some(chain_check(a.epsilon(), &gaps, &matrices, 3)),
    })
}

/// Orbits whose evaluation stayed undecidable.
#[derive(Clone, Debug, Serialize)]
pub struct SkippedOrbit {
    pub orbit_id: String,
    pub reason: String,
}

/// All records, in input order regardless of thread count.
pub fn sweep(a: &AssembledCocycle, orbits: &[PeriodicOrbit]) -> Result<(Vec<SweepRecord>, Vec<SkippedOrbit>)> {
    let results: Vec<(String, Result<SweepRecord>)> =
        orbits.par_iter().map(|o| (o.id.clone(), orbit_record(a, o))).collect();
    let mut records = Vec::with_capacity(results.len());
    let mut skipped = Vec::new();
    for (id, r) in results {
        match r {
            Ok(rec) => records.push(rec),
            Err(Error::EvaluationUndecidable(e)) => skipped.push(SkippedOrbit { orbit_id: id, reason: e.to_string() }),
            Err(e) => return Err(e),
        }
    }
    Ok((records, skipped))
}

/// `λ_1` of a periodic orbit under a generic cocycle over the doubling map.
pub fn orbit_exponent<C: Cocycle + ?Sized>(spec: &C, orbit: &PeriodicOrbit) -> Result<f64> {
    crate::cocycle::periodic_exponent(spec, &orbit.points)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn blocks_follow_fourth_powers() {
        assert_eq!(block_boundaries(0), vec![0, 1]);
        assert_eq!(block_boundaries(5), vec![0, 6]);
        assert_eq!(block_boundaries(20), vec![0, 14, 21]);
        assert_eq!(block_boundaries(79), vec![0, 14, 79, 80]);
        for n in 0..200 {
            let b = block_boundaries(n);
            for (j, w) in b.windows(2).enumerate() {
                for k in w[0]..w[1] {
                    assert_eq!(ell(k), j as u64 + 1);
                }
            }
        }
    }
}
