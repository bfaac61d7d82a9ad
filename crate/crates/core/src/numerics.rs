//! Exact rationals and the two-bidder FedEx instance model.
//!
//! Every probability, payment, allocation and multiplier in the crate is a
//! [`Rational`]; there is no floating point on any certification path.
//!
//! Types of a bidder with `n` value levels are addressed either by a
//! [`TypeLabel`] `(k, interest)` or by the flat index used for
//! serialization: `t0, (v1,1), (v1,2), (v2,1), ...`, i.e. `(k, j)` sits at
//! `2k + j - 2` and the null type `t0` at 0.

use std::fmt;

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Signed, Zero};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub type Rational = BigRational;

pub fn int(v: i64) -> Rational {
    Rational::from_integer(BigInt::from(v))
}

pub fn ratio(num: i64, den: i64) -> Rational {
    Rational::new(BigInt::from(num), BigInt::from(den))
}

pub fn from_u64(v: u64) -> Rational {
    Rational::from_integer(BigInt::from(v))
}

/// Lowest-terms `p/q` text. Integers render as `p/1`.
pub fn render(q: &Rational) -> String {
    format!("{}/{}", q.numer(), q.denom())
}

/// Parses `p/q` (or a bare integer `p`) into a reduced rational.
pub fn parse(text: &str) -> Result<Rational> {
    let bad = || Error::ParseRational(text.to_string());
    let t = text.trim();
    let (num, den) = match t.split_once('/') {
        Some((p, q)) => (p.trim(), q.trim()),
        None => (t, "1"),
    };
    let num: BigInt = num.parse().map_err(|_| bad())?;
    let den: BigInt = den.parse().map_err(|_| bad())?;
    if den.is_zero() {
        return Err(bad());
    }
    Ok(Rational::new(num, den))
}

pub fn render_all(qs: &[Rational]) -> Vec<String> {
    qs.iter().map(render).collect()
}

pub fn parse_all(texts: &[String]) -> Result<Vec<Rational>> {
    texts.iter().map(|t| parse(t)).collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum Interest {
    Day1,
    Day2,
}

impl Interest {
    pub const ALL: [Interest; 2] = [Interest::Day1, Interest::Day2];

    /// 0 for day1, 1 for day2; used to index per-interest tables.
    pub fn index(self) -> usize {
        match self {
            Interest::Day1 => 0,
            Interest::Day2 => 1,
        }
    }

    /// The day number, 1 or 2.
    pub fn day(self) -> usize {
        self.index() + 1
    }

    pub fn from_day(day: usize) -> Option<Interest> {
        match day {
            1 => Some(Interest::Day1),
            2 => Some(Interest::Day2),
            _ => None,
        }
    }
}

impl fmt::Display for Interest {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "day{}", self.day())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum Bidder {
    One,
    Two,
}

impl Bidder {
    pub const ALL: [Bidder; 2] = [Bidder::One, Bidder::Two];

    pub fn index(self) -> usize {
        match self {
            Bidder::One => 0,
            Bidder::Two => 1,
        }
    }

    pub fn other(self) -> Bidder {
        match self {
            Bidder::One => Bidder::Two,
            Bidder::Two => Bidder::One,
        }
    }
}

impl fmt::Display for Bidder {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.index() + 1)
    }
}

/// A bidder type `(v^k, interest)`; `k == 0` is the null type and ignores
/// its interest.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct TypeLabel {
    pub k: usize,
    pub interest: Interest,
}

impl TypeLabel {
    pub fn new(k: usize, interest: Interest) -> Self {
        TypeLabel { k, interest }
    }

    pub fn null() -> Self {
        TypeLabel {
            k: 0,
            interest: Interest::Day1,
        }
    }

    pub fn is_null(&self) -> bool {
        self.k == 0
    }

    pub fn flat(&self) -> usize {
        if self.k == 0 {
            0
        } else {
            2 * self.k + self.interest.day() - 2
        }
    }

    pub fn from_flat(idx: usize) -> Self {
        if idx == 0 {
            return TypeLabel::null();
        }
        let k = (idx + 1) / 2;
        let interest = if idx % 2 == 1 {
            Interest::Day1
        } else {
            Interest::Day2
        };
        TypeLabel { k, interest }
    }
}

impl fmt::Display for TypeLabel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.is_null() {
            write!(f, "t0")
        } else {
            write!(f, "(v{},{})", self.k, self.interest.day())
        }
    }
}

/// One bidder's discrete FedEx distribution: strictly increasing values
/// `v^1 < ... < v^n` and a probability per `(level, interest)`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct BidderSpec {
    pub values: Vec<u64>,
    /// `probs[interest.index()][k - 1] = f((v^k, interest))`.
    pub probs: [Vec<Rational>; 2],
}

impl BidderSpec {
    pub fn new(values: Vec<u64>, day1: Vec<Rational>, day2: Vec<Rational>) -> Self {
        BidderSpec {
            values,
            probs: [day1, day2],
        }
    }

    /// Single-interest bidder: all mass on day1, day2 identically zero.
    pub fn single_interest(values: Vec<u64>, day1: Vec<Rational>) -> Self {
        let zeros = vec![Rational::zero(); values.len()];
        BidderSpec::new(values, day1, zeros)
    }

    pub fn levels(&self) -> usize {
        self.values.len()
    }

    /// Number of types including the null type.
    pub fn num_types(&self) -> usize {
        2 * self.levels() + 1
    }

    /// `v^k` with `v^0 = 0` and `v^{n+1} = v^n`.
    pub fn value(&self, k: usize) -> u64 {
        match k {
            0 => 0,
            k if k > self.levels() => *self.values.last().unwrap_or(&0),
            k => self.values[k - 1],
        }
    }

    pub fn value_q(&self, k: usize) -> Rational {
        from_u64(self.value(k))
    }

    /// `f((v^k, j))`; zero for the null type.
    pub fn prob(&self, k: usize, interest: Interest) -> Rational {
        if k == 0 || k > self.levels() {
            Rational::zero()
        } else {
            self.probs[interest.index()][k - 1].clone()
        }
    }

    pub fn prob_of(&self, t: TypeLabel) -> Rational {
        self.prob(t.k, t.interest)
    }

    pub fn prob_flat(&self, idx: usize) -> Rational {
        self.prob_of(TypeLabel::from_flat(idx))
    }

    pub fn interest_mass(&self, interest: Interest) -> Rational {
        self.probs[interest.index()]
            .iter()
            .fold(Rational::zero(), |acc, p| acc + p)
    }

    pub fn total_mass(&self) -> Rational {
        self.interest_mass(Interest::Day1) + self.interest_mass(Interest::Day2)
    }

    /// Tail mass `R((v^k, j)) = sum_{k' >= k} f((v^{k'}, j))`, for `1 <= k <= n+1`.
    pub fn reverse_mass(&self, k: usize, interest: Interest) -> Result<Rational> {
        let n = self.levels();
        if k < 1 || k > n + 1 {
            return Err(Error::Index {
                index: k,
                min: 1,
                max: n + 1,
            });
        }
        Ok(self.probs[interest.index()][k - 1..]
            .iter()
            .fold(Rational::zero(), |acc, p| acc + p))
    }

    /// All tails `R(v^1) .. R(v^{n+1})` for one interest, indexed by `k - 1`.
    pub fn tails(&self, interest: Interest) -> Vec<Rational> {
        let probs = &self.probs[interest.index()];
        let mut out = vec![Rational::zero(); probs.len() + 1];
        for k in (0..probs.len()).rev() {
            out[k] = &out[k + 1] + &probs[k];
        }
        out
    }

    pub(crate) fn validate(&self, bidder: Bidder) -> Result<()> {
        let n = self.levels();
        if n == 0 {
            return Err(Error::Shape(format!("bidder {bidder} has no value levels")));
        }
        for interest in Interest::ALL {
            if self.probs[interest.index()].len() != n {
                return Err(Error::Shape(format!(
                    "bidder {bidder}: {} {interest} probabilities for {n} values",
                    self.probs[interest.index()].len()
                )));
            }
        }
        for i in 1..n {
            if self.values[i] <= self.values[i - 1] {
                return Err(Error::ValueOrder { bidder, index: i });
            }
        }
        for interest in Interest::ALL {
            for (i, p) in self.probs[interest.index()].iter().enumerate() {
                if p.is_negative() {
                    return Err(Error::NegativeProbability {
                        bidder,
                        k: i + 1,
                        interest,
                    });
                }
            }
        }
        let total = self.total_mass();
        if !total.is_one() {
            return Err(Error::ProbabilitySum { bidder, total });
        }
        Ok(())
    }
}

/// Two validated FedEx bidders. Construct with [`make_instance`].
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Instance {
    bidders: [BidderSpec; 2],
}

pub fn make_instance(b1: BidderSpec, b2: BidderSpec) -> Result<Instance> {
    b1.validate(Bidder::One)?;
    b2.validate(Bidder::Two)?;
    Ok(Instance { bidders: [b1, b2] })
}

pub fn reverse_mass(inst: &Instance, bidder: Bidder, k: usize, interest: Interest) -> Result<Rational> {
    inst.bidder(bidder).reverse_mass(k, interest)
}

impl Instance {
    pub fn bidder(&self, b: Bidder) -> &BidderSpec {
        &self.bidders[b.index()]
    }

    pub fn bidders(&self) -> &[BidderSpec; 2] {
        &self.bidders
    }

    pub fn to_doc(&self) -> InstanceDoc {
        InstanceDoc {
            bidders: self
                .bidders
                .iter()
                .map(|b| BidderDoc {
                    n: b.levels(),
                    values: b.values.clone(),
                    probs: ProbsDoc {
                        day1: render_all(&b.probs[0]),
                        day2: render_all(&b.probs[1]),
                    },
                })
                .collect(),
        }
    }

    pub fn from_doc(doc: &InstanceDoc) -> Result<Instance> {
        if doc.bidders.len() != 2 {
            return Err(Error::Shape(format!(
                "expected 2 bidders, found {}",
                doc.bidders.len()
            )));
        }
        let mut specs = Vec::with_capacity(2);
        for b in &doc.bidders {
            if b.values.len() != b.n {
                return Err(Error::Shape(format!(
                    "n = {} but {} values",
                    b.n,
                    b.values.len()
                )));
            }
            specs.push(BidderSpec::new(
                b.values.clone(),
                parse_all(&b.probs.day1)?,
                parse_all(&b.probs.day2)?,
            ));
        }
        let b2 = specs.pop().unwrap();
        let b1 = specs.pop().unwrap();
        make_instance(b1, b2)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(&self.to_doc()).expect("instance serializes")
    }

    pub fn from_json(text: &str) -> Result<Instance> {
        let doc: InstanceDoc = serde_json::from_str(text)?;
        Instance::from_doc(&doc)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct InstanceDoc {
    pub bidders: Vec<BidderDoc>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct BidderDoc {
    pub n: usize,
    pub values: Vec<u64>,
    pub probs: ProbsDoc,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ProbsDoc {
    pub day1: Vec<String>,
    pub day2: Vec<String>,
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn uniform_spec(values: Vec<u64>) -> BidderSpec {
        let m = 2 * values.len() as i64;
        let p = vec![ratio(1, m); values.len()];
        BidderSpec::new(values, p.clone(), p)
    }

    #[test]
    fn flat_index_bijection() {
        for idx in 0..40 {
            assert_eq!(TypeLabel::from_flat(idx).flat(), idx);
        }
        assert_eq!(TypeLabel::new(1, Interest::Day1).flat(), 1);
        assert_eq!(TypeLabel::new(1, Interest::Day2).flat(), 2);
        assert_eq!(TypeLabel::new(3, Interest::Day2).flat(), 6);
    }

    #[test]
    fn rejects_mass_deficit() {
        let b = BidderSpec::single_interest(vec![1, 2], vec![ratio(1, 2), ratio(2, 5)]);
        let err = make_instance(b, uniform_spec(vec![1])).unwrap_err();
        assert_eq!(
            err,
            Error::ProbabilitySum {
                bidder: Bidder::One,
                total: ratio(9, 10)
            }
        );
    }

    #[test]
    fn rejects_non_strict_values() {
        let b = uniform_spec(vec![5, 5, 7]);
        let err = make_instance(uniform_spec(vec![1]), b).unwrap_err();
        assert_eq!(
            err,
            Error::ValueOrder {
                bidder: Bidder::Two,
                index: 1
            }
        );
    }

    #[test]
    fn rejects_negative_probability() {
        let b = BidderSpec::single_interest(vec![1, 2], vec![ratio(3, 2), ratio(-1, 2)]);
        assert!(matches!(
            make_instance(b, uniform_spec(vec![1])),
            Err(Error::NegativeProbability { k: 2, .. })
        ));
    }

    #[test]
    fn reverse_mass_range() {
        let inst = make_instance(uniform_spec(vec![1, 2, 3]), uniform_spec(vec![4])).unwrap();
        assert_eq!(
            reverse_mass(&inst, Bidder::One, 4, Interest::Day1).unwrap(),
            int(0)
        );
        assert_eq!(
            reverse_mass(&inst, Bidder::One, 2, Interest::Day2).unwrap(),
            ratio(1, 3)
        );
        assert!(matches!(
            reverse_mass(&inst, Bidder::One, 5, Interest::Day1),
            Err(Error::Index { .. })
        ));
        assert!(reverse_mass(&inst, Bidder::One, 0, Interest::Day1).is_err());
    }

    #[test]
    fn json_round_trip() {
        let inst = make_instance(uniform_spec(vec![1, 2, 3]), uniform_spec(vec![4])).unwrap();
        let back = Instance::from_json(&inst.to_json()).unwrap();
        assert_eq!(inst, back);
        assert!(inst.to_json().contains("\"1/6\""));
    }

    #[test]
    fn parse_edge_cases() {
        assert_eq!(parse("6/4").unwrap(), ratio(3, 2));
        assert_eq!(parse("-7").unwrap(), int(-7));
        assert!(parse("1/0").is_err());
        assert!(parse("x/2").is_err());
        assert_eq!(render(&ratio(-4, 6)), "-2/3");
        assert_eq!(render(&int(0)), "0/1");
    }

    proptest! {
        #[test]
        fn render_parse_round_trip(p in any::<i64>(), q in 1i64..i64::MAX) {
            let r = ratio(p, q);
            prop_assert_eq!(parse(&render(&r)).unwrap(), r);
        }

        #[test]
        fn tails_telescope(weights in proptest::collection::vec(1u32..50, 1..8)) {
            let total: u32 = weights.iter().sum::<u32>() * 2;
            let probs: Vec<Rational> = weights.iter().map(|w| ratio(*w as i64, total as i64)).collect();
            let values: Vec<u64> = (1..=weights.len() as u64).collect();
            let spec = BidderSpec::new(values, probs.clone(), probs);
            let inst = make_instance(spec.clone(), spec).unwrap();
            let b = inst.bidder(Bidder::One);
            for j in Interest::ALL {
                for k in 1..=b.levels() {
                    let diff = b.reverse_mass(k, j).unwrap() - b.reverse_mass(k + 1, j).unwrap();
                    prop_assert_eq!(diff, b.prob(k, j));
                }
            }
            prop_assert_eq!(
                b.reverse_mass(1, Interest::Day1).unwrap() + b.reverse_mass(1, Interest::Day2).unwrap(),
                int(1)
            );
        }
    }
}
