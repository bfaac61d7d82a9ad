//! Ex-post mechanisms, their interim forms, BIC and witness certificates.
//!
//! Tables are indexed by flat type index (`t0 = 0`, `(k, j)` at `2k + j - 2`).
//! Interim quantities weight the opponent's types by the opponent's density.

use num_traits::{One, Signed, ToPrimitive, Zero};
use rand::distributions::WeightedIndex;
use rand::prelude::*;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::duality::{is_flow, virtual_values, Flow};
use crate::error::{Error, Result};
use crate::numerics::{render_all, Bidder, Instance, Interest, Rational, TypeLabel};
use crate::report::{CertificateReport, Condition, Location};

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Mechanism {
    /// `x[i][t1][t2]`: probability bidder `i` receives the item.
    pub x: [Vec<Vec<Rational>>; 2],
    /// `p[i][t1][t2]`: ex-post payment of bidder `i`.
    pub p: [Vec<Vec<Rational>>; 2],
}

impl Mechanism {
    pub fn zero(inst: &Instance) -> Mechanism {
        let rows = inst.bidder(Bidder::One).num_types();
        let cols = inst.bidder(Bidder::Two).num_types();
        let table = || vec![vec![Rational::zero(); cols]; rows];
        Mechanism {
            x: [table(), table()],
            p: [table(), table()],
        }
    }

    pub fn alloc(&self, b: Bidder, t1: TypeLabel, t2: TypeLabel) -> &Rational {
        &self.x[b.index()][t1.flat()][t2.flat()]
    }

    /// Allocation of `b` when its own type is `own` and the opponent's is `opp`.
    fn alloc_own(&self, b: Bidder, own: usize, opp: usize) -> &Rational {
        match b {
            Bidder::One => &self.x[0][own][opp],
            Bidder::Two => &self.x[1][opp][own],
        }
    }

    fn pay_own(&self, b: Bidder, own: usize, opp: usize) -> &Rational {
        match b {
            Bidder::One => &self.p[0][own][opp],
            Bidder::Two => &self.p[1][opp][own],
        }
    }

    /// Outcomes with positive probability at a profile.
    pub fn support(&self, t1: TypeLabel, t2: TypeLabel) -> Vec<Option<Bidder>> {
        let x1 = self.alloc(Bidder::One, t1, t2);
        let x2 = self.alloc(Bidder::Two, t1, t2);
        let mut out = Vec::new();
        if x1.is_positive() {
            out.push(Some(Bidder::One));
        }
        if x2.is_positive() {
            out.push(Some(Bidder::Two));
        }
        if x1 + x2 < Rational::one() {
            out.push(None);
        }
        out
    }

    /// Checks `0 <= X <= 1`, `X1 + X2 <= 1` and zero rows at null reports.
    pub fn check_feasible(&self) -> Result<()> {
        let rows = self.x[0].len();
        let cols = self.x[0].first().map_or(0, Vec::len);
        for t1 in 0..rows {
            for t2 in 0..cols {
                let x1 = &self.x[0][t1][t2];
                let x2 = &self.x[1][t1][t2];
                let sum = x1 + x2;
                if x1.is_negative() || x2.is_negative() || sum > Rational::one() {
                    return Err(Error::Shape(format!(
                        "infeasible allocation at ({}, {})",
                        TypeLabel::from_flat(t1),
                        TypeLabel::from_flat(t2)
                    )));
                }
                let null_violation = (t1 == 0 && !(x1.is_zero() && self.p[0][t1][t2].is_zero()))
                    || (t2 == 0 && !(x2.is_zero() && self.p[1][t1][t2].is_zero()));
                if null_violation {
                    return Err(Error::Shape(format!(
                        "null report receives an allocation or payment at ({}, {})",
                        TypeLabel::from_flat(t1),
                        TypeLabel::from_flat(t2)
                    )));
                }
            }
        }
        Ok(())
    }
}

/// Interim allocation `pi` and payment `p` per bidder, flat-indexed.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct InterimForm {
    pub pi: [Vec<Rational>; 2],
    pub p: [Vec<Rational>; 2],
}

impl InterimForm {
    pub fn zero(inst: &Instance) -> InterimForm {
        let z = |b: Bidder| vec![Rational::zero(); inst.bidder(b).num_types()];
        InterimForm {
            pi: [z(Bidder::One), z(Bidder::Two)],
            p: [z(Bidder::One), z(Bidder::Two)],
        }
    }

    pub fn pi(&self, b: Bidder, t: TypeLabel) -> &Rational {
        &self.pi[b.index()][t.flat()]
    }

    pub fn p(&self, b: Bidder, t: TypeLabel) -> &Rational {
        &self.p[b.index()][t.flat()]
    }

    pub fn to_doc(&self) -> InterimDoc {
        InterimDoc {
            pi: self.pi.iter().map(|v| render_all(v)).collect(),
            p: self.p.iter().map(|v| render_all(v)).collect(),
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct InterimDoc {
    pub pi: Vec<Vec<String>>,
    pub p: Vec<Vec<String>>,
}

pub fn interim_form(inst: &Instance, m: &Mechanism) -> InterimForm {
    let mut out = InterimForm::zero(inst);
    for b in Bidder::ALL {
        let opp = inst.bidder(b.other());
        for own in 1..inst.bidder(b).num_types() {
            let mut pi = Rational::zero();
            let mut p = Rational::zero();
            for o in 1..opp.num_types() {
                let f = opp.prob_flat(o);
                if f.is_zero() {
                    continue;
                }
                pi += &f * m.alloc_own(b, own, o);
                p += f * m.pay_own(b, own, o);
            }
            out.pi[b.index()][own] = pi;
            out.p[b.index()][own] = p;
        }
    }
    out
}

/// `sum_{l <= k} v^l (pi(v^l, j) - pi(v^{l-1}, j))` with `pi(v^0, j) = 0`.
fn identity_payments_unchecked(inst: &Instance, b: Bidder, pi: &[Rational]) -> Vec<Rational> {
    let spec = inst.bidder(b);
    let mut out = vec![Rational::zero(); spec.num_types()];
    for j in Interest::ALL {
        let mut acc = Rational::zero();
        let mut prev = Rational::zero();
        for k in 1..=spec.levels() {
            let idx = TypeLabel::new(k, j).flat();
            acc += spec.value_q(k) * (&pi[idx] - &prev);
            prev = pi[idx].clone();
            out[idx] = acc.clone();
        }
    }
    out
}

/// Interim payments from the payment identity; `pi` must be nondecreasing
/// in the level along each interest.
pub fn payments_from_identity(inst: &Instance, pi: &[Vec<Rational>; 2]) -> Result<[Vec<Rational>; 2]> {
    for b in Bidder::ALL {
        let spec = inst.bidder(b);
        if pi[b.index()].len() != spec.num_types() {
            return Err(Error::Shape(format!(
                "interim allocation for bidder {b} has {} entries, expected {}",
                pi[b.index()].len(),
                spec.num_types()
            )));
        }
        for j in Interest::ALL {
            let mut prev = Rational::zero();
            for k in 1..=spec.levels() {
                let cur = &pi[b.index()][TypeLabel::new(k, j).flat()];
                if cur < &prev {
                    return Err(Error::NotMonotone {
                        bidder: b,
                        interest: j,
                        k,
                    });
                }
                prev = cur.clone();
            }
        }
    }
    Ok([
        identity_payments_unchecked(inst, Bidder::One, &pi[0]),
        identity_payments_unchecked(inst, Bidder::Two, &pi[1]),
    ])
}

/// Expected utility of a bidder of type `truth` reporting `report`.
/// A day2 allocation is worthless to a day1 type.
pub fn utility(inst: &Instance, b: Bidder, f: &InterimForm, truth: TypeLabel, report: TypeLabel) -> Rational {
    if report.is_null() {
        return Rational::zero();
    }
    let useless = truth.is_null() || report.interest > truth.interest;
    let value = if useless {
        Rational::zero()
    } else {
        inst.bidder(b).value_q(truth.k)
    };
    value * f.pi(b, report) - f.p(b, report)
}

fn bidder_types(inst: &Instance, b: Bidder) -> impl Iterator<Item = TypeLabel> {
    (0..inst.bidder(b).num_types()).map(TypeLabel::from_flat)
}

/// Every BIC constraint: types at level `k >= 1` against all reports of
/// weakly lower interest including `t0`; the null type against every report.
pub fn bic_violations(inst: &Instance, f: &InterimForm) -> CertificateReport {
    let mut report = CertificateReport::new();
    for b in Bidder::ALL {
        for truth in bidder_types(inst, b) {
            let honest = utility(inst, b, f, truth, truth);
            for dev in bidder_types(inst, b) {
                if dev == truth || (!truth.is_null() && !dev.is_null() && dev.interest > truth.interest) {
                    continue;
                }
                let lie = utility(inst, b, f, truth, dev);
                let ok = honest >= lie;
                report.record(
                    Condition::Bic,
                    Location::Deviation {
                        bidder: b,
                        truth,
                        report: dev,
                    },
                    honest.clone(),
                    lie,
                    ok,
                );
            }
        }
    }
    report
}

/// Sets interim payments by the payment identity and ex-post payments
/// constant in the opponent's type.
fn with_identity_payments(inst: &Instance, x: [Vec<Vec<Rational>>; 2]) -> Result<Mechanism> {
    let mut m = Mechanism::zero(inst);
    m.x = x;
    let interim = interim_form(inst, &m);
    let pay = payments_from_identity(inst, &interim.pi)?;
    for (t1, row) in m.p[0].iter_mut().enumerate() {
        for cell in row.iter_mut() {
            *cell = pay[0][t1].clone();
        }
    }
    for row in m.p[1].iter_mut() {
        for (t2, cell) in row.iter_mut().enumerate() {
            *cell = pay[1][t2].clone();
        }
    }
    Ok(m)
}

/// Highest value wins; `tie(t1, t2)` gives Bidder One's share on equal values.
fn highest_value<F>(inst: &Instance, tie: F) -> [Vec<Vec<Rational>>; 2]
where
    F: Fn(TypeLabel, TypeLabel) -> Rational,
{
    let one = inst.bidder(Bidder::One);
    let two = inst.bidder(Bidder::Two);
    let mut x = Mechanism::zero(inst).x;
    for t1 in bidder_types(inst, Bidder::One) {
        for t2 in bidder_types(inst, Bidder::Two) {
            let share_one = match (t1.is_null(), t2.is_null()) {
                (true, true) => continue,
                (false, true) => Rational::one(),
                (true, false) => Rational::zero(),
                (false, false) => {
                    let (v1, v2) = (one.value(t1.k), two.value(t2.k));
                    if v1 > v2 {
                        Rational::one()
                    } else if v1 < v2 {
                        Rational::zero()
                    } else {
                        tie(t1, t2)
                    }
                }
            };
            x[1][t1.flat()][t2.flat()] = Rational::one() - &share_one;
            x[0][t1.flat()][t2.flat()] = share_one;
        }
    }
    x
}

/// Second-price auction, ties to Bidder One, identity payments.
pub fn spa_bidder1(inst: &Instance) -> Mechanism {
    let x = highest_value(inst, |_, _| Rational::one());
    with_identity_payments(inst, x).expect("highest-value allocation is monotone")
}

/// Second-price auction with the randomized tie split at `k_star`.
pub fn spa_careful(inst: &Instance, k_star: usize) -> Result<Mechanism> {
    let two = inst.bidder(Bidder::Two);
    let levels = inst.bidder(Bidder::One).levels();
    if k_star < 2 || k_star + 1 > levels {
        return Err(Error::Index {
            index: k_star,
            min: 2,
            max: levels.saturating_sub(1),
        });
    }
    let low = two.prob(1, Interest::Day1);
    let high = two.prob(k_star, Interest::Day1);
    if low >= high {
        return Err(Error::InfeasibleTieSplit { k_star, low, high });
    }
    let keep = Rational::one() - &low / &high;
    let x = highest_value(inst, |t1, _| match t1.interest {
        Interest::Day1 if t1.k == 1 => Rational::zero(),
        Interest::Day2 if t1.k == k_star => keep.clone(),
        _ => Rational::one(),
    });
    with_identity_payments(inst, x)
}

/// Expected revenue `sum_i sum_t f_i(t) p_i(t)`.
pub fn revenue(inst: &Instance, m: &Mechanism) -> Rational {
    revenue_of(inst, &interim_form(inst, m))
}

pub fn revenue_of(inst: &Instance, f: &InterimForm) -> Rational {
    let mut total = Rational::zero();
    for b in Bidder::ALL {
        let spec = inst.bidder(b);
        for (idx, p) in f.p[b.index()].iter().enumerate().skip(1) {
            total += spec.prob_flat(idx) * p;
        }
    }
    total
}

/// Complementary-slackness certificate for `(fl, m)`, plus BIC of `m`.
pub fn witness_report(inst: &Instance, fl: &Flow, m: &Mechanism) -> Result<CertificateReport> {
    let flow_report = is_flow(inst, fl)?;
    if !flow_report.passed() {
        return Err(Error::FlowInvalid(flow_report.summary()));
    }
    let f = interim_form(inst, m);
    let mut report = CertificateReport::new();

    for b in Bidder::ALL {
        let identity = identity_payments_unchecked(inst, b, &f.pi[b.index()]);
        for idx in 1..identity.len() {
            let t = TypeLabel::from_flat(idx);
            let p = f.p[b.index()][idx].clone();
            let ok = p == identity[idx];
            report.record(
                Condition::PaymentIdentity,
                Location::Type { bidder: b, t },
                p,
                identity[idx].clone(),
                ok,
            );
        }
        for k in 1..=inst.bidder(b).levels() {
            if fl.alpha(b, k).is_positive() {
                let d = TypeLabel::new(k, Interest::Day2);
                let c = TypeLabel::new(k, Interest::Day1);
                let lhs = utility(inst, b, &f, d, d);
                let rhs = utility(inst, b, &f, d, c);
                let ok = lhs == rhs;
                report.record(Condition::AlphaIndifference, Location::Level { bidder: b, k }, lhs, rhs, ok);
            }
        }
    }

    let phi = virtual_values(inst, fl)?;
    let one = inst.bidder(Bidder::One);
    let two = inst.bidder(Bidder::Two);
    for t1 in bidder_types(inst, Bidder::One).skip(1) {
        for t2 in bidder_types(inst, Bidder::Two).skip(1) {
            if one.prob_of(t1).is_zero() || two.prob_of(t2).is_zero() {
                continue;
            }
            let phis = [
                phi.of(Bidder::One, t1).expect("positive mass"),
                phi.of(Bidder::Two, t2).expect("positive mass"),
            ];
            let best = phis[0].max(phis[1]).clone();
            let x1 = m.alloc(Bidder::One, t1, t2);
            let x2 = m.alloc(Bidder::Two, t1, t2);
            let total = x1 + x2;
            if best.is_negative() {
                let ok = total.is_zero();
                let loc = Location::Profile { t1, t2, winner: None };
                report.record(Condition::NoAllocationBelowZero, loc, total, Rational::zero(), ok);
                continue;
            }
            for b in Bidder::ALL {
                if m.alloc(b, t1, t2).is_positive() {
                    let mine = phis[b.index()].clone();
                    let ok = mine == best;
                    let loc = Location::Profile {
                        t1,
                        t2,
                        winner: Some(b),
                    };
                    report.record(Condition::HighestVirtualValue, loc, mine, best.clone(), ok);
                }
            }
            if best.is_positive() {
                let ok = total.is_one();
                let loc = Location::Profile { t1, t2, winner: None };
                report.record(Condition::FullAllocation, loc, total, Rational::one(), ok);
            }
        }
    }

    report.absorb(bic_violations(inst, &f));
    Ok(report)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SimulationSummary {
    pub rounds: u64,
    pub mean_revenue: f64,
    /// Rounds won by Bidder One, Bidder Two, and left unallocated.
    pub wins: [u64; 3],
}

/// Monte Carlo execution with types drawn from the instance.
pub fn simulate(inst: &Instance, m: &Mechanism, rounds: u64, seed: u64) -> Result<SimulationSummary> {
    let sampler = |b: Bidder| -> Result<WeightedIndex<f64>> {
        let spec = inst.bidder(b);
        let weights: Vec<f64> = (0..spec.num_types())
            .map(|idx| spec.prob_flat(idx).to_f64().unwrap_or(0.0))
            .collect();
        WeightedIndex::new(weights).map_err(|e| Error::Shape(e.to_string()))
    };
    let (s1, s2) = (sampler(Bidder::One)?, sampler(Bidder::Two)?);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut wins = [0u64; 3];
    let mut total = 0.0;
    for _ in 0..rounds {
        let t1 = s1.sample(&mut rng);
        let t2 = s2.sample(&mut rng);
        let x1 = m.x[0][t1][t2].to_f64().unwrap_or(0.0);
        let x2 = m.x[1][t1][t2].to_f64().unwrap_or(0.0);
        let u: f64 = rng.gen();
        let slot = if u < x1 {
            0
        } else if u < x1 + x2 {
            1
        } else {
            2
        };
        wins[slot] += 1;
        total += m.p[0][t1][t2].to_f64().unwrap_or(0.0) + m.p[1][t1][t2].to_f64().unwrap_or(0.0);
    }
    Ok(SimulationSummary {
        rounds,
        mean_revenue: if rounds == 0 { 0.0 } else { total / rounds as f64 },
        wins,
    })
}
