//! Rotation numbers: parsing presets, enclosures at any precision, and
//! continued-fraction convergents.

use std::collections::HashMap;
use std::fmt;
use std::sync::Mutex;

use num_bigint::BigInt;
use num_integer::Integer;
use num_rational::BigRational;
use num_traits::{One, Signed, Zero};

use crate::ball::{rational_floor, BallReal, Dyadic};
use crate::error::{Error, Result};

/// How a rotation number was specified.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum AlphaKind {
    /// `(a + b√d) / c`.
    Surd { a: BigInt, b: BigInt, c: BigInt, d: BigInt },
    /// `[head; period, period, ...]`; an empty period means a finite expansion.
    ContinuedFraction { head: Vec<BigInt>, period: Vec<BigInt> },
    /// A plain decimal literal. Always rational, so flagged unsafe.
    Decimal(BigRational),
}

/// A rotation number together with cached enclosures of its fractional part.
///
/// All circle dynamics use `α mod 1`, which lies in `(0, 1)` for irrational
/// inputs; convergents are reported for `α` itself.
pub struct AlphaSpec {
    kind: AlphaKind,
    label: String,
    floor: BigInt,
    cache: Mutex<HashMap<u32, BallReal>>,
}

impl fmt::Debug for AlphaSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("AlphaSpec").field("label", &self.label).field("kind", &self.kind).finish()
    }
}

impl PartialEq for AlphaSpec {
    fn eq(&self, other: &Self) -> bool {
        self.kind == other.kind
    }
}

fn parse_int(s: &str) -> Result<BigInt> {
    s.trim()
        .parse::<BigInt>()
        .map_err(|_| Error::InvalidAlpha(format!("not an integer: {s:?}")))
}

fn is_perfect_square(d: &BigInt) -> bool {
    let s = d.sqrt();
    &s * &s == *d
}

/// The golden-mean rotation number `(3 - √5)/2`.
pub const GOLD2: &str = "gold2";

impl AlphaSpec {
    /// Parse one of the preset forms:
    /// `gold2`, `cf:a0,a1,...` (a parenthesised tail repeats, a trailing
    /// `...` repeats the last term), `surd:a,b,c,d` for `(a+b√d)/c`, or a
    /// decimal literal.
    pub fn parse(s: &str) -> Result<AlphaSpec> {
        let s = s.trim();
        if s == GOLD2 {
            return AlphaSpec::surd(3, -1, 2, 5).map(|a| a.with_label(GOLD2));
        }
        if let Some(rest) = s.strip_prefix("surd:") {
            let parts: Vec<_> = rest.split(',').collect();
            if parts.len() != 4 {
                return Err(Error::InvalidAlpha(format!("surd needs a,b,c,d: {s:?}")));
            }
            let [a, b, c, d] = [parts[0], parts[1], parts[2], parts[3]].map(parse_int);
            return AlphaSpec::surd(a?, b?, c?, d?).map(|a| a.with_label(s));
        }
        if let Some(rest) = s.strip_prefix("cf:") {
            return AlphaSpec::parse_cf(rest).map(|a| a.with_label(s));
        }
        let q = parse_decimal(s)?;
        Ok(AlphaSpec::from_kind(AlphaKind::Decimal(q)).with_label(s))
    }

    fn parse_cf(rest: &str) -> Result<AlphaSpec> {
        let mut head = Vec::new();
        let mut period = Vec::new();
        let mut in_period = false;
        let mut repeat_last = false;
        for raw in rest.split(',') {
            let mut tok = raw.trim();
            if tok == "..." {
                repeat_last = true;
                continue;
            }
            if repeat_last {
                return Err(Error::InvalidAlpha("'...' must be the last item".into()));
            }
            if let Some(t) = tok.strip_prefix('(') {
                in_period = true;
                tok = t;
            }
            let closes = tok.ends_with(')');
            let tok = tok.trim_end_matches(')');
            let v = parse_int(tok)?;
            if in_period {
                period.push(v);
            } else {
                head.push(v);
            }
            if closes {
                in_period = false;
            }
        }
        if repeat_last {
            if !period.is_empty() {
                return Err(Error::InvalidAlpha("use either (...) or '...', not both".into()));
            }
            let last = head.pop().ok_or_else(|| Error::InvalidAlpha("empty expansion".into()))?;
            period.push(last);
        }
        if head.is_empty() && period.is_empty() {
            return Err(Error::InvalidAlpha("empty expansion".into()));
        }
        let skip_first = usize::from(!head.is_empty());
        if head.iter().skip(skip_first).chain(period.iter()).any(|a| !a.is_positive()) {
            return Err(Error::InvalidAlpha("partial quotients after a0 must be positive".into()));
        }
        if head.is_empty() && period[0].is_negative() {
            return Err(Error::InvalidAlpha("periodic partial quotients must be positive".into()));
        }
        Ok(AlphaSpec::from_kind(AlphaKind::ContinuedFraction { head, period }))
    }

    /// `(a + b√d) / c`; rejects rational inputs.
    pub fn surd(
        a: impl Into<BigInt>,
        b: impl Into<BigInt>,
        c: impl Into<BigInt>,
        d: impl Into<BigInt>,
    ) -> Result<AlphaSpec> {
        let (a, b, c, d) = (a.into(), b.into(), c.into(), d.into());
        if c.is_zero() {
            return Err(Error::InvalidAlpha("surd denominator is zero".into()));
        }
        if b.is_zero() || !d.is_positive() || is_perfect_square(&d) {
            return Err(Error::InvalidAlpha(format!(
                "({a} + {b}√{d})/{c} is rational or not real"
            )));
        }
        Ok(AlphaSpec::from_kind(AlphaKind::Surd { a, b, c, d }))
    }

    pub fn gold2() -> AlphaSpec {
        AlphaSpec::parse(GOLD2).expect("preset parses")
    }

    fn from_kind(kind: AlphaKind) -> AlphaSpec {
        let mut spec = AlphaSpec {
            kind,
            label: String::new(),
            floor: BigInt::zero(),
            cache: Mutex::new(HashMap::new()),
        };
        let floor = spec.partial_quotients().next().unwrap_or_default();
        spec.floor = floor;
        spec
    }

    fn with_label(mut self, label: &str) -> Self {
        self.label = label.to_string();
        self
    }

    pub fn label(&self) -> &str {
        &self.label
    }

    pub fn kind(&self) -> &AlphaKind {
        &self.kind
    }

    /// Exact value when the number is rational.
    pub fn exact_rational(&self) -> Option<BigRational> {
        match &self.kind {
            AlphaKind::Decimal(q) => Some(q.clone()),
            AlphaKind::ContinuedFraction { head, period } if period.is_empty() => {
                let mut value: Option<BigRational> = None;
                for a in head.iter().rev() {
                    let a = BigRational::from_integer(a.clone());
                    value = Some(match value {
                        None => a,
                        Some(v) => a + v.recip(),
                    });
                }
                value
            }
            _ => None,
        }
    }

    /// Rational inputs are accepted but unsafe: the gap construction needs an
    /// irrational rotation number.
    pub fn is_rational(&self) -> bool {
        self.exact_rational().is_some()
    }

    /// `⌊α⌋`.
    pub fn floor(&self) -> &BigInt {
        &self.floor
    }

    /// Partial quotients `a0, a1, ...` (finite for rational inputs).
    pub fn partial_quotients(&self) -> Box<dyn Iterator<Item = BigInt> + '_> {
        match &self.kind {
            AlphaKind::Surd { a, b, c, d } => Box::new(SurdExpansion::new(a, b, c, d)),
            AlphaKind::ContinuedFraction { head, period } => {
                Box::new(head.iter().cloned().chain(period.iter().cloned().cycle()))
            }
            AlphaKind::Decimal(q) => Box::new(RationalExpansion { rest: Some(q.clone()) }),
        }
    }

    /// Enclosure of `α` itself.
    pub fn value(&self, prec: u32) -> BallReal {
        self.frac_value(prec).add(&BallReal::from_int(self.floor.clone(), prec))
    }

    /// Enclosure of `α - ⌊α⌋` at `prec` bits, cached.
    pub fn frac_value(&self, prec: u32) -> BallReal {
        if let Some(v) = self.cache.lock().expect("alpha cache poisoned").get(&prec) {
            return v.clone();
        }
        let v = self.compute_value(prec).sub(&BallReal::from_int(self.floor.clone(), prec));
        self.cache.lock().expect("alpha cache poisoned").insert(prec, v.clone());
        v
    }

    fn compute_value(&self, prec: u32) -> BallReal {
        let work = prec + 16;
        let v = match &self.kind {
            AlphaKind::Surd { a, b, c, d } => {
                let extra = b.bits() as u32 + c.bits() as u32;
                let root = BallReal::sqrt_int(d, work + extra).expect("d > 0 checked");
                root.mul_int(b.clone())
                    .add(&BallReal::from_int(a.clone(), work + extra))
                    .div_int(c.clone())
            }
            AlphaKind::Decimal(q) => BallReal::from_rational(q, work),
            AlphaKind::ContinuedFraction { .. } => match self.exact_rational() {
                Some(q) => BallReal::from_rational(&q, work),
                None => {
                    // α lies between consecutive convergents, which are at most
                    // 1/(q_k q_{k+1}) apart.
                    let target = BigInt::one() << (work as usize / 2 + 2);
                    let mut conv = Convergents::new(self.partial_quotients());
                    let mut prev = conv.next().expect("nonempty expansion");
                    loop {
                        let next = conv.next().expect("infinite expansion");
                        if prev.denom() > &target {
                            let lo = BallReal::from_rational(&prev, work);
                            let hi = BallReal::from_rational(&next, work);
                            break lo.hull(&hi);
                        }
                        prev = next;
                    }
                }
            },
        };
        v.with_prec(prec)
    }

    /// Integer bounds `lo <= frac(α) * 2^bits <= hi` with `hi - lo <= 2`.
    pub fn fixed_point(&self, bits: u32) -> (BigInt, BigInt) {
        let v = self.frac_value(bits + 8);
        let lo = v.lower().mul_2exp(bits as i64).floor();
        let hi = v.upper().mul_2exp(bits as i64).ceil();
        (lo, hi)
    }

    /// All convergents `p/q` of `α` with `q <= max_q`, in order.
    pub fn convergents(&self, max_q: u64) -> Result<Vec<BigRational>> {
        if let AlphaKind::Decimal(_) = self.kind {
            return Err(Error::RationalAlpha(self.label.clone()));
        }
        let max_q = BigInt::from(max_q);
        Ok(Convergents::new(self.partial_quotients())
            .take_while(|c| c.denom() <= &max_q)
            .collect())
    }
}

fn parse_decimal(s: &str) -> Result<BigRational> {
    let bad = || Error::InvalidAlpha(format!("unrecognised rotation number {s:?}"));
    let (neg, body) = match s.strip_prefix('-') {
        Some(rest) => (true, rest),
        None => (false, s),
    };
    let (int, frac) = body.split_once('.').unwrap_or((body, ""));
    if int.is_empty() && frac.is_empty() {
        return Err(bad());
    }
    if !int.chars().chain(frac.chars()).all(|c| c.is_ascii_digit()) {
        return Err(bad());
    }
    let digits = format!("{int}{frac}");
    let num: BigInt = if digits.is_empty() { BigInt::zero() } else { digits.parse().map_err(|_| bad())? };
    let den = BigInt::from(10u32).pow(frac.len() as u32);
    let q = BigRational::new(num, den);
    Ok(if neg { -q } else { q })
}

/// Continued-fraction expansion of `(P + √D)/Q` with `Q | D - P²`.
struct SurdExpansion {
    p: BigInt,
    q: BigInt,
    d: BigInt,
    root: BigInt,
}

impl SurdExpansion {
    fn new(a: &BigInt, b: &BigInt, c: &BigInt, d: &BigInt) -> Self {
        // (a + b√d)/c with b < 0 becomes (-a + |b|√d)/(-c).
        let (mut p, b, mut q) = if b.is_negative() {
            (-a, -b, -c)
        } else {
            (a.clone(), b.clone(), c.clone())
        };
        let mut dd = &b * &b * d;
        if !(&dd - &p * &p).is_multiple_of(&q) {
            let qa = q.abs();
            p *= &qa;
            dd *= &q * &q;
            q *= &qa;
        }
        let root = dd.sqrt();
        SurdExpansion { p, q, d: dd, root }
    }
}

impl Iterator for SurdExpansion {
    type Item = BigInt;

    fn next(&mut self) -> Option<BigInt> {
        // √D ∈ (root, root + 1), so the floor is decided by integer division.
        let a = if self.q.is_positive() {
            (&self.p + &self.root).div_floor(&self.q)
        } else {
            (&self.p + &self.root + BigInt::one()).div_floor(&self.q)
        };
        let p_next = &a * &self.q - &self.p;
        let q_next = (&self.d - &p_next * &p_next) / &self.q;
        self.p = p_next;
        self.q = q_next;
        Some(a)
    }
}

struct RationalExpansion {
    rest: Option<BigRational>,
}

impl Iterator for RationalExpansion {
    type Item = BigInt;

    fn next(&mut self) -> Option<BigInt> {
        let x = self.rest.take()?;
        let a = rational_floor(&x);
        let f = x - BigRational::from_integer(a.clone());
        if !f.is_zero() {
            self.rest = Some(f.recip());
        }
        Some(a)
    }
}

/// Convergents of a sequence of partial quotients.
pub struct Convergents<I> {
    quotients: I,
    p: (BigInt, BigInt),
    q: (BigInt, BigInt),
}

impl<I: Iterator<Item = BigInt>> Convergents<I> {
    pub fn new(quotients: I) -> Self {
        Convergents {
            quotients,
            p: (BigInt::zero(), BigInt::one()),
            q: (BigInt::one(), BigInt::zero()),
        }
    }
}

impl<I: Iterator<Item = BigInt>> Iterator for Convergents<I> {
    type Item = BigRational;

    fn next(&mut self) -> Option<BigRational> {
        let a = self.quotients.next()?;
        let p = &a * &self.p.1 + &self.p.0;
        let q = &a * &self.q.1 + &self.q.0;
        self.p = (std::mem::take(&mut self.p.1), p.clone());
        self.q = (std::mem::take(&mut self.q.1), q.clone());
        Some(BigRational::new(p, q))
    }
}

/// `α` as a dyadic midpoint, handy for printing.
pub fn describe(alpha: &AlphaSpec) -> String {
    let v = alpha.value(128);
    format!("{} = {}", alpha.label(), Dyadic::to_decimal(v.mid(), 30))
}
