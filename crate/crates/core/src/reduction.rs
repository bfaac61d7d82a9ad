//! Distributions built from a disjointness input `(x, y)`.
//!
//! Both bidders get `n + 2` value levels `v^k = n^2 + k`. With
//! `b = 10 n^6` and `a = (b - n^5)/(n + 1)`, Bidder One's day1 and day2
//! tables are integer multiples of `1/(2b)` carrying mass 1/2 each, and
//! Bidder Two's day1 table is an integer multiple of `1/b` carrying all
//! of its mass. Each table is filled greedily: a helper `z_{k+1}` spreads
//! the remaining budget evenly over the remaining levels, and the next
//! scaled probability is a floor or ceiling of a shift of `z_{k+1}`
//! selected by the input bit.

use std::fmt;

use num_bigint::BigInt;
use num_traits::One;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::numerics::{make_instance, render, render_all, BidderSpec, Instance, Rational};

/// A disjointness instance. "Yes" means no index has `x_i = y_i = 1`.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct DisjInput {
    x: Vec<bool>,
    y: Vec<bool>,
}

impl DisjInput {
    pub fn new(x: Vec<bool>, y: Vec<bool>) -> Result<Self> {
        if x.is_empty() {
            return Err(Error::Shape("disjointness input must have n >= 1".into()));
        }
        if x.len() != y.len() {
            return Err(Error::LengthMismatch {
                expected: x.len(),
                actual: y.len(),
            });
        }
        Ok(DisjInput { x, y })
    }

    pub fn from_bits(x: &str, y: &str) -> Result<Self> {
        DisjInput::new(parse_bits(x)?, parse_bits(y)?)
    }

    pub fn n(&self) -> usize {
        self.x.len()
    }

    pub fn x(&self) -> &[bool] {
        &self.x
    }

    pub fn y(&self) -> &[bool] {
        &self.y
    }

    /// 1-based indices `k` with `x_k = y_k = 1`.
    pub fn intersections(&self) -> Vec<usize> {
        (1..=self.n())
            .filter(|&k| self.x[k - 1] && self.y[k - 1])
            .collect()
    }

    pub fn is_disjoint(&self) -> bool {
        self.intersections().is_empty()
    }
}

impl fmt::Display for DisjInput {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "x={} y={}", render_bits(&self.x), render_bits(&self.y))
    }
}

pub fn parse_bits(text: &str) -> Result<Vec<bool>> {
    text.trim()
        .chars()
        .map(|c| match c {
            '0' => Ok(false),
            '1' => Ok(true),
            _ => Err(Error::ParseBits(text.to_string())),
        })
        .collect()
}

pub fn render_bits(bits: &[bool]) -> String {
    bits.iter().map(|&b| if b { '1' } else { '0' }).collect()
}

/// Construction constants and helper sequence for one probability table.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ReductionTrace {
    pub n: usize,
    /// `b = 10 n^6`.
    pub b: BigInt,
    /// `a = (b - n^5)/(n + 1)`.
    pub a: Rational,
    /// Helpers `z_2 .. z_{n+2}`; see [`ReductionTrace::z`].
    pub helpers: Vec<Rational>,
    /// Denominator of the table: `2b` for Bidder One, `b` for Bidder Two.
    pub scale: BigInt,
    /// `f(v^k) * scale` for `k = 1 ..= n + 2`.
    pub scaled: Vec<BigInt>,
}

impl ReductionTrace {
    /// Helper `z_k` for `k` in `2 ..= n + 2`.
    pub fn z(&self, k: usize) -> &Rational {
        &self.helpers[k - 2]
    }

    pub fn probs(&self) -> Vec<Rational> {
        self.scaled
            .iter()
            .map(|s| Rational::new(s.clone(), self.scale.clone()))
            .collect()
    }
}

pub fn b_constant(n: usize) -> BigInt {
    BigInt::from(10u32) * BigInt::from(n).pow(6)
}

pub fn a_constant(n: usize) -> Rational {
    let b = b_constant(n);
    Rational::new(b - BigInt::from(n).pow(5), BigInt::from(n + 1))
}

fn nk(n: usize, power: u32) -> Rational {
    Rational::from_integer(BigInt::from(n).pow(power))
}

/// Shared greedy fill. `first` is the scaled probability at level 1; `step`
/// maps `(k, z_{k+1})` to the scaled probability at level `k + 1` for
/// `k = 1 ..= n`; the last level takes the remaining budget `b`.
fn fill(n: usize, scale: BigInt, first: BigInt, step: impl Fn(usize, &Rational) -> BigInt) -> ReductionTrace {
    let b = b_constant(n);
    let mut scaled = vec![first];
    let mut helpers = Vec::with_capacity(n + 1);
    let mut used: BigInt = scaled[0].clone();
    for k in 1..=n {
        let z = Rational::new(&b - &used, BigInt::from(n - k + 2));
        let next = step(k, &z);
        used += &next;
        scaled.push(next);
        helpers.push(z);
    }
    let last = &b - &used;
    helpers.push(Rational::from_integer(last.clone()));
    scaled.push(last);
    ReductionTrace {
        n,
        a: a_constant(n),
        b,
        helpers,
        scale,
        scaled,
    }
}

fn floor_int(q: &Rational) -> BigInt {
    q.floor().to_integer()
}

fn ceil_int(q: &Rational) -> BigInt {
    q.ceil().to_integer()
}

/// Bidder One's day1 table; independent of `x`. Sums to 1/2.
pub fn bidder1_day1(n: usize) -> Result<(Vec<Rational>, ReductionTrace)> {
    bidder1_day2(n, &vec![false; n])
}

/// Bidder One's day2 table. `x_k = 1` replaces the upward-shifted floor at
/// level `k + 1` by a plain ceiling, lowering that level's mass.
pub fn bidder1_day2(n: usize, x: &[bool]) -> Result<(Vec<Rational>, ReductionTrace)> {
    check_size(n, x)?;
    let b = b_constant(n);
    let n3 = nk(n, 3);
    let trace = fill(n, &b * 2, nk(n, 5).to_integer(), |k, z| {
        if x[k - 1] {
            ceil_int(z)
        } else {
            floor_int(&(z + &n3 / Rational::from_integer(BigInt::from(n - k + 2))))
        }
    });
    Ok((trace.probs(), trace))
}

/// Bidder Two's day1 table; day2 mass is identically zero. Sums to 1.
pub fn bidder2(n: usize, y: &[bool]) -> Result<(Vec<Rational>, ReductionTrace)> {
    check_size(n, y)?;
    let b = b_constant(n);
    let n2 = nk(n, 2);
    let first = nk(n, 5).to_integer() - BigInt::one();
    let trace = fill(n, b, first, |k, z| {
        if y[k - 1] {
            floor_int(&(z + &n2 / Rational::from_integer(BigInt::from(n - k + 2))))
        } else {
            floor_int(&(z - Rational::one()))
        }
    });
    Ok((trace.probs(), trace))
}

fn check_size(n: usize, bits: &[bool]) -> Result<()> {
    if n == 0 {
        return Err(Error::Shape("reduction needs n >= 1".into()));
    }
    if bits.len() != n {
        return Err(Error::LengthMismatch {
            expected: n,
            actual: bits.len(),
        });
    }
    Ok(())
}

/// The three traces behind one constructed instance.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ReductionTraces {
    pub day1: ReductionTrace,
    pub day2: ReductionTrace,
    pub bidder2: ReductionTrace,
}

pub fn reduction_values(n: usize) -> Vec<u64> {
    let base = (n * n) as u64;
    (1..=(n + 2) as u64).map(|k| base + k).collect()
}

pub fn build_instance(d: &DisjInput) -> Result<(Instance, ReductionTraces)> {
    let n = d.n();
    let (c, day1) = bidder1_day1(n)?;
    let (dd, day2) = bidder1_day2(n, d.x())?;
    let (e, b2) = bidder2(n, d.y())?;
    let values = reduction_values(n);
    let inst = make_instance(
        BidderSpec::new(values.clone(), c, dd),
        BidderSpec::single_interest(values, e),
    )?;
    Ok((
        inst,
        ReductionTraces {
            day1,
            day2,
            bidder2: b2,
        },
    ))
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct TraceDoc {
    pub scale: String,
    pub z: Vec<String>,
    pub scaled_probs: Vec<String>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct TracesDoc {
    pub n: usize,
    pub b: String,
    pub a: String,
    pub bidder1_day1: TraceDoc,
    pub bidder1_day2: TraceDoc,
    pub bidder2_day1: TraceDoc,
}

impl ReductionTraces {
    pub fn to_doc(&self) -> TracesDoc {
        let doc = |t: &ReductionTrace| TraceDoc {
            scale: t.scale.to_string(),
            z: render_all(&t.helpers),
            scaled_probs: t.scaled.iter().map(|s| s.to_string()).collect(),
        };
        TracesDoc {
            n: self.day1.n,
            b: self.day1.b.to_string(),
            a: render(&self.day1.a),
            bidder1_day1: doc(&self.day1),
            bidder1_day2: doc(&self.day2),
            bidder2_day1: doc(&self.bidder2),
        }
    }
}

#[cfg(test)]
fn is_nonneg_int_sum(trace: &ReductionTrace) -> bool {
    trace.scaled.iter().all(|s| s >= &BigInt::from(0))
        && trace.scaled.iter().sum::<BigInt>() == trace.b
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::numerics::{int, ratio, Bidder, Interest};

    fn ints(v: &[i64]) -> Vec<BigInt> {
        v.iter().map(|&x| BigInt::from(x)).collect()
    }

    #[test]
    fn day1_small_case() {
        let (probs, trace) = bidder1_day1(2).unwrap();
        assert_eq!(trace.b, BigInt::from(640));
        assert_eq!(trace.scaled, ints(&[32, 205, 205, 198]));
        assert_eq!(probs[0], ratio(1, 40));
        assert_eq!(probs.iter().sum::<Rational>(), ratio(1, 2));
        assert!(is_nonneg_int_sum(&trace));
    }

    #[test]
    fn first_level_mass() {
        for n in [1usize, 3, 7, 12] {
            let (c, _) = bidder1_day1(n).unwrap();
            assert_eq!(c[0], ratio(1, 20 * n as i64));
            let (e, t) = bidder2(n, &vec![true; n]).unwrap();
            let expect = Rational::new(t.b.clone() / BigInt::from(10 * n) - 1, t.b.clone());
            assert_eq!(e[0], expect);
        }
    }

    #[test]
    fn day2_small_case() {
        let (_, t) = bidder1_day2(2, &[true, false]).unwrap();
        assert_eq!(t.scaled, ints(&[32, 203, 206, 199]));
        let (zeros, _) = bidder1_day2(5, &[false; 5]).unwrap();
        assert_eq!(zeros, bidder1_day1(5).unwrap().0);
    }

    #[test]
    fn bidder2_small_case() {
        let (probs, t) = bidder2(2, &[true, false]).unwrap();
        assert_eq!(t.scaled, ints(&[31, 204, 201, 204]));
        assert_eq!(probs.iter().sum::<Rational>(), int(1));
    }

    #[test]
    fn length_mismatch() {
        assert_eq!(
            bidder1_day2(3, &[true]).unwrap_err(),
            Error::LengthMismatch {
                expected: 3,
                actual: 1
            }
        );
        assert!(DisjInput::from_bits("10", "1").is_err());
        assert!(DisjInput::from_bits("1a", "10").is_err());
    }

    #[test]
    fn instance_shape() {
        let d = DisjInput::from_bits("10", "10").unwrap();
        let (inst, _) = build_instance(&d).unwrap();
        assert_eq!(inst.bidder(Bidder::One).values, vec![5, 6, 7, 8]);
        assert_eq!(inst.bidder(Bidder::Two).values, vec![5, 6, 7, 8]);
        assert_eq!(inst.bidder(Bidder::Two).interest_mass(Interest::Day2), int(0));
        assert_eq!(
            inst.bidder(Bidder::One).reverse_mass(2, Interest::Day1).unwrap(),
            ratio(19, 40)
        );
        assert_eq!(
            inst.bidder(Bidder::One).reverse_mass(1, Interest::Day1).unwrap(),
            ratio(1, 2)
        );
    }

    #[test]
    fn disjointness_polarity() {
        assert!(DisjInput::from_bits("10", "01").unwrap().is_disjoint());
        assert!(!DisjInput::from_bits("10", "10").unwrap().is_disjoint());
        assert_eq!(
            DisjInput::from_bits("1101", "0111").unwrap().intersections(),
            vec![2, 4]
        );
    }
}
