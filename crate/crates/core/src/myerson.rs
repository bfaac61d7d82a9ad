//! Single-dimensional virtual values, ironing, and the optimal single-item auction.

use num_traits::{Signed, Zero};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::numerics::{from_u64, parse_all, render, render_all, BidderSpec, Rational};

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SingleDimDistribution {
    values: Vec<u64>,
    probs: Vec<Rational>,
}

impl SingleDimDistribution {
    pub fn new(values: Vec<u64>, probs: Vec<Rational>) -> Result<Self> {
        if values.is_empty() || values.len() != probs.len() {
            return Err(Error::Shape(format!(
                "{} values but {} probabilities",
                values.len(),
                probs.len()
            )));
        }
        if let Some(k) = values.windows(2).position(|w| w[0] >= w[1]) {
            return Err(Error::Shape(format!("values not strictly increasing at index {}", k + 2)));
        }
        if let Some(k) = probs.iter().position(|p| p.is_negative()) {
            return Err(Error::Shape(format!("negative probability at index {}", k + 1)));
        }
        let total: Rational = probs.iter().sum();
        if total != Rational::from_integer(1.into()) {
            return Err(Error::Shape(format!("probabilities sum to {}", render(&total))));
        }
        Ok(SingleDimDistribution { values, probs })
    }

    pub fn point_mass(v: u64) -> Self {
        SingleDimDistribution {
            values: vec![v],
            probs: vec![Rational::from_integer(1.into())],
        }
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn values(&self) -> &[u64] {
        &self.values
    }

    pub fn probs(&self) -> &[Rational] {
        &self.probs
    }

    /// `v^k` for `1 <= k <= n + 1`, with `v^{n+1} = v^n`.
    pub fn value(&self, k: usize) -> Rational {
        from_u64(self.values[k.min(self.len()) - 1])
    }

    /// `R(v^k) = sum_{l >= k} f(v^l)` for `1 <= k <= n + 1`.
    pub fn tail(&self, k: usize) -> Rational {
        self.probs[k - 1..].iter().sum()
    }

    /// 1-based support position of `v`.
    pub fn position(&self, v: u64) -> Result<usize> {
        self.values
            .binary_search(&v)
            .map(|i| i + 1)
            .map_err(|_| Error::ValueNotInSupport(v))
    }

    fn require_positive(&self) -> Result<()> {
        match self.probs.iter().position(|p| p.is_zero()) {
            Some(k) => Err(Error::ZeroMass(k + 1)),
            None => Ok(()),
        }
    }

    /// The same distribution as a FedEx bidder with no day2 mass.
    pub fn to_fedex(&self) -> BidderSpec {
        BidderSpec::single_interest(self.values.clone(), self.probs.clone())
    }

    pub fn to_doc(&self) -> SingleDimDoc {
        SingleDimDoc {
            values: self.values.clone(),
            probs: render_all(&self.probs),
        }
    }

    pub fn from_doc(doc: &SingleDimDoc) -> Result<Self> {
        Self::new(doc.values.clone(), parse_all(&doc.probs)?)
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SingleDimDoc {
    pub values: Vec<u64>,
    pub probs: Vec<String>,
}

/// `phi(v^k) = v^k - (v^{k+1} - v^k) R(v^{k+1}) / f(v^k)`.
pub fn single_dim_virtuals(d: &SingleDimDistribution) -> Result<Vec<Rational>> {
    d.require_positive()?;
    Ok((1..=d.len())
        .map(|k| d.value(k) - (d.value(k + 1) - d.value(k)) * d.tail(k + 1) / &d.probs[k - 1])
        .collect())
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct IronedTable {
    /// 1-based inclusive blocks partitioning `[1, n]`, in order.
    pub blocks: Vec<(usize, usize)>,
    pub phi: Vec<Rational>,
    pub phi_bar: Vec<Rational>,
}

impl IronedTable {
    /// 0-based id of the block containing level `k`.
    pub fn block_of(&self, k: usize) -> Option<usize> {
        self.blocks.iter().position(|&(a, b)| a <= k && k <= b)
    }

    pub fn to_csv(&self, d: &SingleDimDistribution) -> String {
        let mut out = String::from("k,value,phi,phi_bar,block\n");
        for k in 1..=self.phi.len() {
            out.push_str(&format!(
                "{k},{},{},{},{}\n",
                d.values[k - 1],
                render(&self.phi[k - 1]),
                render(&self.phi_bar[k - 1]),
                self.block_of(k).expect("blocks partition the support")
            ));
        }
        out
    }
}

/// Ironing via the upper concave envelope of the revenue curve
/// `(R(v^k), v^k R(v^k))`, `k = 1..=n+1`. Points on a hull segment stay
/// breakpoints, so blocks only merge across strict violations.
pub fn iron(d: &SingleDimDistribution) -> Result<IronedTable> {
    let phi = single_dim_virtuals(d)?;
    let n = d.len();
    let point = |k: usize| -> (Rational, Rational) {
        let r = d.tail(k);
        let rev = if k > n { Rational::zero() } else { d.value(k) * &r };
        (r, rev)
    };
    // walk by increasing quantile: k = n+1 down to 1
    let mut hull: Vec<usize> = Vec::new();
    for k in (1..=n + 1).rev() {
        while hull.len() >= 2 {
            let (a, b) = (hull[hull.len() - 2], hull[hull.len() - 1]);
            let (pa, pb, pk) = (point(a), point(b), point(k));
            // b strictly below segment a-k
            let cross = (&pb.0 - &pa.0) * (&pk.1 - &pa.1) - (&pb.1 - &pa.1) * (&pk.0 - &pa.0);
            if cross.is_positive() {
                hull.pop();
            } else {
                break;
            }
        }
        hull.push(k);
    }
    // consecutive hull points (l+1, k0) bound block [k0, l]
    let mut blocks = Vec::new();
    let mut phi_bar = vec![Rational::zero(); n];
    for w in hull.windows(2).rev() {
        let (hi, lo) = (w[0], w[1]);
        let (ph, pl) = (point(hi), point(lo));
        let slope = (&pl.1 - &ph.1) / (&pl.0 - &ph.0);
        for v in phi_bar.iter_mut().take(hi - 1).skip(lo - 1) {
            *v = slope.clone();
        }
        blocks.push((lo, hi - 1));
    }
    Ok(IronedTable { blocks, phi, phi_bar })
}

/// Pool-adjacent-violators ironing of `phi` with weights `f`; merges only
/// on strict violations.
pub fn iron_weighted(f: &[Rational], phi: &[Rational]) -> (Vec<(usize, usize)>, Vec<Rational>) {
    // (start, end, weight, weighted sum), 1-based inclusive
    let mut stack: Vec<(usize, usize, Rational, Rational)> = Vec::new();
    for (i, (w, p)) in f.iter().zip(phi).enumerate() {
        stack.push((i + 1, i + 1, w.clone(), w * p));
        while stack.len() >= 2 {
            let (a, b) = (&stack[stack.len() - 2], &stack[stack.len() - 1]);
            // a.sum / a.w > b.sum / b.w, weights positive
            if &a.3 * &b.2 > &b.3 * &a.2 {
                let b = stack.pop().expect("two blocks");
                let a = stack.last_mut().expect("two blocks");
                a.1 = b.1;
                a.2 += b.2;
                a.3 += b.3;
            } else {
                break;
            }
        }
    }
    let mut out = Vec::with_capacity(phi.len());
    let mut blocks = Vec::with_capacity(stack.len());
    for (s, e, w, sum) in stack {
        let avg = sum / w;
        out.extend(std::iter::repeat(avg).take(e - s + 1));
        blocks.push((s, e));
    }
    (blocks, out)
}

/// Compact form of an ironed virtual value: `(top - bottom) / mass`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct IronedCode {
    /// `v^{k0} R(v^{k0})` at the block's first level.
    pub top: Rational,
    /// `v^{l+1} R(v^{l+1})` past the block's last level.
    pub bottom: Rational,
    /// Block mass `R(v^{k0}) - R(v^{l+1})`.
    pub mass: Rational,
}

impl IronedCode {
    pub fn decode(&self) -> Rational {
        (&self.top - &self.bottom) / &self.mass
    }
}

pub fn encode_ironed(d: &SingleDimDistribution, k: usize) -> Result<IronedCode> {
    if k < 1 || k > d.len() {
        return Err(Error::Index {
            index: k,
            min: 1,
            max: d.len(),
        });
    }
    let table = iron(d)?;
    let (k0, l) = table.blocks[table.block_of(k).expect("blocks partition the support")];
    let revenue_at = |j: usize| -> Rational {
        if j > d.len() {
            Rational::zero()
        } else {
            d.value(j) * d.tail(j)
        }
    };
    Ok(IronedCode {
        top: revenue_at(k0),
        bottom: revenue_at(l + 1),
        mass: d.tail(k0) - d.tail(l + 1),
    })
}

/// Winner among ironed virtual values: lowest index among the maximal
/// nonnegative entries.
pub fn argmax_nonnegative(phis: &[Rational]) -> Option<usize> {
    let mut best: Option<usize> = None;
    for (i, p) in phis.iter().enumerate() {
        if p.is_negative() {
            continue;
        }
        if best.map_or(true, |b| p > &phis[b]) {
            best = Some(i);
        }
    }
    best
}

/// Smallest support value at which `winner` still wins against the other
/// bidders' ironed virtual values: strictly above lower-indexed bidders,
/// weakly above higher-indexed ones, and nonnegative.
pub fn threshold_price(d: &SingleDimDistribution, phi_bar: &[Rational], winner: usize, others: &[Rational]) -> Option<Rational> {
    (1..=d.len())
        .find(|&k| {
            let mine = &phi_bar[k - 1];
            !mine.is_negative()
                && others.iter().enumerate().all(|(i, o)| {
                    if i == winner {
                        true
                    } else if i < winner {
                        mine > o
                    } else {
                        mine >= o
                    }
                })
        })
        .map(|k| d.value(k))
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct AuctionOutcome {
    pub winner: Option<usize>,
    pub price: Option<Rational>,
}

pub fn myerson_winner(ds: &[SingleDimDistribution], vals: &[u64]) -> Result<AuctionOutcome> {
    if ds.len() != vals.len() {
        return Err(Error::Shape(format!(
            "{} distributions but {} values",
            ds.len(),
            vals.len()
        )));
    }
    let tables: Vec<IronedTable> = ds.iter().map(iron).collect::<Result<_>>()?;
    let mut phis = Vec::with_capacity(ds.len());
    for ((d, t), v) in ds.iter().zip(&tables).zip(vals) {
        phis.push(t.phi_bar[d.position(*v)? - 1].clone());
    }
    let Some(w) = argmax_nonnegative(&phis) else {
        return Ok(AuctionOutcome {
            winner: None,
            price: None,
        });
    };
    let price = threshold_price(&ds[w], &tables[w].phi_bar, w, &phis);
    Ok(AuctionOutcome { winner: Some(w), price })
}

/// Exact expected revenue of the ironed auction with threshold prices.
pub fn expected_revenue(ds: &[SingleDimDistribution]) -> Result<Rational> {
    let mut total = Rational::zero();
    let mut idx = vec![0usize; ds.len()];
    loop {
        let vals: Vec<u64> = ds.iter().zip(&idx).map(|(d, &i)| d.values[i]).collect();
        let prob: Rational = ds.iter().zip(&idx).map(|(d, &i)| d.probs[i].clone()).product();
        if !prob.is_zero() {
            if let Some(p) = myerson_winner(ds, &vals)?.price {
                total += prob * p;
            }
        }
        // odometer over support positions
        let mut pos = 0;
        loop {
            if pos == ds.len() {
                return Ok(total);
            }
            idx[pos] += 1;
            if idx[pos] < ds[pos].len() {
                break;
            }
            idx[pos] = 0;
            pos += 1;
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::numerics::{int, ratio};

    fn uniform56() -> SingleDimDistribution {
        SingleDimDistribution::new(vec![5, 6], vec![ratio(1, 2), ratio(1, 2)]).unwrap()
    }

    #[test]
    fn two_point_virtuals() {
        assert_eq!(single_dim_virtuals(&uniform56()).unwrap(), vec![int(4), int(6)]);
        let pm = SingleDimDistribution::point_mass(9);
        assert_eq!(single_dim_virtuals(&pm).unwrap(), vec![int(9)]);
    }

    #[test]
    fn zero_mass_rejected() {
        let d = SingleDimDistribution::new(vec![1, 2], vec![int(0), int(1)]).unwrap();
        assert_eq!(single_dim_virtuals(&d), Err(Error::ZeroMass(1)));
        assert_eq!(iron(&d), Err(Error::ZeroMass(1)));
    }

    #[test]
    fn monotone_sequence_untouched() {
        let d = SingleDimDistribution::new(vec![1, 2, 3], vec![ratio(1, 10), ratio(8, 10), ratio(1, 10)]).unwrap();
        let t = iron(&d).unwrap();
        assert_eq!(t.phi, vec![int(-8), ratio(15, 8), int(3)]);
        assert_eq!(t.phi_bar, t.phi);
        assert_eq!(t.blocks, vec![(1, 1), (2, 2), (3, 3)]);
    }

    #[test]
    fn ironing_merges_violation() {
        // phi = (1 - 1 * (1/2)/(1/2), 2 - 8 * (1/4)/(1/4), 10) = (0, -6, 10)
        let d = SingleDimDistribution::new(vec![1, 2, 10], vec![ratio(1, 2), ratio(1, 4), ratio(1, 4)]).unwrap();
        let t = iron(&d).unwrap();
        assert_eq!(t.phi, vec![int(0), int(-6), int(10)]);
        assert_eq!(t.blocks, vec![(1, 2), (3, 3)]);
        assert_eq!(t.phi_bar, vec![int(-2), int(-2), int(10)]);
        let (blocks, pav) = iron_weighted(d.probs(), &t.phi);
        assert_eq!(blocks, t.blocks);
        assert_eq!(pav, t.phi_bar);
        let code = encode_ironed(&d, 2).unwrap();
        assert_eq!(code.decode(), int(-2));
        assert_eq!(code.mass, ratio(3, 4));
    }

    #[test]
    fn encode_bounds() {
        let d = uniform56();
        assert!(matches!(encode_ironed(&d, 0), Err(Error::Index { .. })));
        assert!(matches!(encode_ironed(&d, 3), Err(Error::Index { .. })));
        assert_eq!(encode_ironed(&d, 1).unwrap().decode(), int(4));
    }

    #[test]
    fn winner_rules() {
        let out = myerson_winner(&[SingleDimDistribution::point_mass(4)], &[4]).unwrap();
        assert_eq!(out.winner, Some(0));
        assert_eq!(out.price, Some(int(4)));

        let d = uniform56();
        let out = myerson_winner(&[d.clone(), d.clone()], &[6, 6]).unwrap();
        assert_eq!(out.winner, Some(0));
        assert_eq!(out.price, Some(int(6)));
        let out = myerson_winner(&[d.clone(), d.clone()], &[5, 6]).unwrap();
        assert_eq!(out.winner, Some(1));
        assert_eq!(out.price, Some(int(6)));
        let out = myerson_winner(&[d.clone(), d.clone()], &[6, 5]).unwrap();
        assert_eq!(out.price, Some(int(5)));

        assert_eq!(
            myerson_winner(&[d.clone()], &[7]),
            Err(Error::ValueNotInSupport(7))
        );

        let neg = SingleDimDistribution::new(vec![1, 2, 10], vec![ratio(1, 2), ratio(1, 4), ratio(1, 4)]).unwrap();
        let out = myerson_winner(&[neg.clone(), neg], &[2, 1]).unwrap();
        assert_eq!(out, AuctionOutcome { winner: None, price: None });
    }

    #[test]
    fn uniform_pair_revenue() {
        // prices 5, 6, 5, 6 over the four equally likely profiles
        let d = uniform56();
        assert_eq!(expected_revenue(&[d.clone(), d]).unwrap(), ratio(11, 2));
    }
}
