//! Lagrangian flows on the BIC constraints and the virtual values they induce.
//!
//! For bidder `i`, `alpha(k)` sits on the "day2 type at level k must not
//! pose as day1 at level k" constraint and `lambda^j(k)` on "type (k, j)
//! must not pose as (k - 1, j)". Conventions: `lambda^j(n + 1) = 0` and
//! `v^{n+1} = v^n`.

use num_traits::{Signed, Zero};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::mechanisms::InterimForm;
use crate::numerics::{parse_all, render, render_all, Bidder, Instance, Interest, Rational, TypeLabel};
use crate::report::{CertificateReport, Condition, Location};

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Flow {
    /// `alpha[bidder][k - 1]`.
    pub alpha: [Vec<Rational>; 2],
    /// `lambda[bidder][interest][k - 1]`.
    pub lambda: [[Vec<Rational>; 2]; 2],
}

impl Flow {
    pub fn zero(inst: &Instance) -> Flow {
        let z = |b: Bidder| vec![Rational::zero(); inst.bidder(b).levels()];
        Flow {
            alpha: [z(Bidder::One), z(Bidder::Two)],
            lambda: [
                [z(Bidder::One), z(Bidder::One)],
                [z(Bidder::Two), z(Bidder::Two)],
            ],
        }
    }

    pub fn alpha(&self, b: Bidder, k: usize) -> &Rational {
        &self.alpha[b.index()][k - 1]
    }

    /// `lambda^j(k)` for `1 <= k <= n + 1`.
    pub fn lambda(&self, b: Bidder, interest: Interest, k: usize) -> Rational {
        let row = &self.lambda[b.index()][interest.index()];
        if k > row.len() {
            Rational::zero()
        } else {
            row[k - 1].clone()
        }
    }

    pub fn check_shape(&self, inst: &Instance) -> Result<()> {
        for b in Bidder::ALL {
            let n = inst.bidder(b).levels();
            let ok = self.alpha[b.index()].len() == n
                && self.lambda[b.index()].iter().all(|row| row.len() == n);
            if !ok {
                return Err(Error::Shape(format!(
                    "flow tables for bidder {b} do not have {n} levels"
                )));
            }
        }
        Ok(())
    }

    pub fn to_doc(&self) -> FlowDoc {
        FlowDoc {
            bidders: Bidder::ALL
                .iter()
                .map(|b| BidderFlowDoc {
                    alpha: render_all(&self.alpha[b.index()]),
                    lambda1: render_all(&self.lambda[b.index()][0]),
                    lambda2: render_all(&self.lambda[b.index()][1]),
                })
                .collect(),
        }
    }

    pub fn from_doc(doc: &FlowDoc) -> Result<Flow> {
        if doc.bidders.len() != 2 {
            return Err(Error::Shape("flow document needs two bidders".into()));
        }
        let b = |i: usize| -> Result<(Vec<Rational>, [Vec<Rational>; 2])> {
            let d = &doc.bidders[i];
            Ok((
                parse_all(&d.alpha)?,
                [parse_all(&d.lambda1)?, parse_all(&d.lambda2)?],
            ))
        };
        let (a1, l1) = b(0)?;
        let (a2, l2) = b(1)?;
        Ok(Flow {
            alpha: [a1, a2],
            lambda: [l1, l2],
        })
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct BidderFlowDoc {
    pub alpha: Vec<String>,
    pub lambda1: Vec<String>,
    pub lambda2: Vec<String>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct FlowDoc {
    pub bidders: Vec<BidderFlowDoc>,
}

/// Checks the four balance equations and nonnegativity for both bidders.
pub fn is_flow(inst: &Instance, fl: &Flow) -> Result<CertificateReport> {
    fl.check_shape(inst)?;
    let mut report = CertificateReport::new();
    for b in Bidder::ALL {
        let spec = inst.bidder(b);
        let n = spec.levels();
        for k in 1..=n {
            let loc = Location::Level { bidder: b, k };
            let alpha = fl.alpha(b, k).clone();
            let l1 = fl.lambda(b, Interest::Day1, k);
            let l1_next = fl.lambda(b, Interest::Day1, k + 1);
            let l2 = fl.lambda(b, Interest::Day2, k);
            let l2_next = fl.lambda(b, Interest::Day2, k + 1);
            let (c1, c2) = if k < n {
                (Condition::FlowDay1, Condition::FlowDay2)
            } else {
                (Condition::FlowDay1Top, Condition::FlowDay2Top)
            };
            let lhs = spec.prob(k, Interest::Day1) + &l1_next + &alpha;
            let ok = lhs == l1;
            report.record(c1, loc.clone(), lhs, l1.clone(), ok);
            let lhs = spec.prob(k, Interest::Day2) + &l2_next;
            let rhs = &alpha + &l2;
            let ok = lhs == rhs;
            report.record(c2, loc.clone(), lhs, rhs, ok);
            for m in [alpha, l1, l2] {
                let ok = !m.is_negative();
                report.record(Condition::MultiplierNonnegative, loc.clone(), m, Rational::zero(), ok);
            }
        }
    }
    Ok(report)
}

/// Virtual values by `(bidder, interest, level)`; `None` at zero-mass types.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct VirtualValueTable {
    pub phi: [[Vec<Option<Rational>>; 2]; 2],
}

impl VirtualValueTable {
    pub fn get(&self, b: Bidder, k: usize, interest: Interest) -> Option<&Rational> {
        if k == 0 {
            return None;
        }
        self.phi[b.index()][interest.index()]
            .get(k - 1)
            .and_then(|p| p.as_ref())
    }

    pub fn of(&self, b: Bidder, t: TypeLabel) -> Option<&Rational> {
        self.get(b, t.k, t.interest)
    }

    /// Defined entries in bidder/level/interest order.
    pub fn defined(&self) -> impl Iterator<Item = (Bidder, usize, Interest, &Rational)> {
        Bidder::ALL.into_iter().flat_map(move |b| {
            let levels = self.phi[b.index()][0].len();
            (1..=levels).flat_map(move |k| {
                Interest::ALL
                    .into_iter()
                    .filter_map(move |j| self.get(b, k, j).map(|p| (b, k, j, p)))
            })
        })
    }

    /// `bidder,k,interest,phi` rows with a header; zero-mass types print `undefined`.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("bidder,k,interest,phi\n");
        for b in Bidder::ALL {
            let levels = self.phi[b.index()][0].len();
            for k in 1..=levels {
                for j in Interest::ALL {
                    let phi = self
                        .get(b, k, j)
                        .map(render)
                        .unwrap_or_else(|| "undefined".to_string());
                    out.push_str(&format!("{b},{k},{},{phi}\n", j.day()));
                }
            }
        }
        out
    }
}

/// `f((v^k, j)) * Phi((v^k, j)) = f v^k - (v^{k+1} - v^k) lambda^j(k+1)`,
/// well defined even at zero-mass types.
pub(crate) fn weighted_virtual_value(inst: &Instance, fl: &Flow, b: Bidder, k: usize, j: Interest) -> Rational {
    let spec = inst.bidder(b);
    let dv = spec.value_q(k + 1) - spec.value_q(k);
    spec.prob(k, j) * spec.value_q(k) - dv * fl.lambda(b, j, k + 1)
}

pub fn virtual_values(inst: &Instance, fl: &Flow) -> Result<VirtualValueTable> {
    fl.check_shape(inst)?;
    let table = |b: Bidder| -> [Vec<Option<Rational>>; 2] {
        let spec = inst.bidder(b);
        Interest::ALL.map(|j| {
            (1..=spec.levels())
                .map(|k| {
                    let f = spec.prob(k, j);
                    if f.is_zero() {
                        None
                    } else {
                        Some(weighted_virtual_value(inst, fl, b, k, j) / f)
                    }
                })
                .collect()
        })
    };
    Ok(VirtualValueTable {
        phi: [table(Bidder::One), table(Bidder::Two)],
    })
}

/// `alpha = 0`, `lambda^j(k) = R((v^k, j))`: per-interest Myerson virtual values.
pub fn canonical_flow(inst: &Instance) -> Flow {
    let mut fl = Flow::zero(inst);
    for b in Bidder::ALL {
        let spec = inst.bidder(b);
        for j in Interest::ALL {
            let tails = spec.tails(j);
            fl.lambda[b.index()][j.index()] = tails[..spec.levels()].to_vec();
        }
    }
    fl
}

/// Moves `eps` of flow from the day2 chain onto the day1 chain below level
/// `k`, routed through `alpha(k)`. Raises day2 virtual values and lowers
/// day1 virtual values strictly below `k`.
pub fn boost(inst: &Instance, fl: &Flow, bidder: Bidder, k: usize, eps: &Rational) -> Result<Flow> {
    fl.check_shape(inst)?;
    let n = inst.bidder(bidder).levels();
    if k < 1 || k > n {
        return Err(Error::Index {
            index: k,
            min: 1,
            max: n,
        });
    }
    if eps.is_negative() {
        return Err(Error::Shape(format!("boost amount {} is negative", render(eps))));
    }
    for kk in 1..=k {
        let available = fl.lambda(bidder, Interest::Day2, kk);
        if eps > &available {
            return Err(Error::BoostTooLarge {
                bidder,
                k: kk,
                eps: eps.clone(),
                available,
            });
        }
    }
    let mut out = fl.clone();
    let b = bidder.index();
    out.alpha[b][k - 1] += eps;
    for kk in 0..k {
        out.lambda[b][Interest::Day2.index()][kk] -= eps;
        out.lambda[b][Interest::Day1.index()][kk] += eps;
    }
    Ok(out)
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ModifiedFlow {
    pub flow: Flow,
    pub eps: Rational,
    /// Smallest level below the top with `Phi_1((v^k,2)) = Phi_2((v^k,1))`
    /// after the boost; `None` when no boost was needed.
    pub k_star: Option<usize>,
}

/// Canonical flow boosted for Bidder One at the top level by the least
/// amount that lifts every day2 virtual value of Bidder One to at least
/// Bidder Two's day1 virtual value at the same level.
///
/// Both bidders must share the same value grid.
pub fn modified_flow(inst: &Instance) -> Result<ModifiedFlow> {
    let one = inst.bidder(Bidder::One);
    let two = inst.bidder(Bidder::Two);
    if one.values != two.values {
        return Err(Error::Shape(
            "modified flow needs both bidders on the same value grid".into(),
        ));
    }
    let top = one.levels();
    let canonical = canonical_flow(inst);
    let phi = virtual_values(inst, &canonical)?;

    let mut eps = Rational::zero();
    for k in 1..top {
        let (Some(d), Some(e)) = (
            phi.get(Bidder::One, k, Interest::Day2),
            phi.get(Bidder::Two, k, Interest::Day1),
        ) else {
            continue;
        };
        // boosting by eps lifts Phi_1((v^k,2)) by eps * dv / f
        let dv = one.value_q(k + 1) - one.value_q(k);
        let need = (e - d) * one.prob(k, Interest::Day2) / dv;
        if need > eps {
            eps = need;
        }
    }

    let flow = boost(inst, &canonical, Bidder::One, top, &eps)?;
    let k_star = if eps.is_zero() {
        None
    } else {
        let after = virtual_values(inst, &flow)?;
        (1..top).find(|&k| {
            matches!(
                (
                    after.get(Bidder::One, k, Interest::Day2),
                    after.get(Bidder::Two, k, Interest::Day1),
                ),
                (Some(d), Some(e)) if d == e
            )
        })
    };
    Ok(ModifiedFlow { flow, eps, k_star })
}

/// `L = sum_i sum_t f(t) pi(t) Phi(t)` for a flow.
pub fn lagrangian_value(inst: &Instance, fl: &Flow, interim: &InterimForm) -> Result<Rational> {
    let report = is_flow(inst, fl)?;
    if !report.passed() {
        return Err(Error::FlowInvalid(report.summary()));
    }
    let mut total = Rational::zero();
    for b in Bidder::ALL {
        for k in 1..=inst.bidder(b).levels() {
            for j in Interest::ALL {
                let pi = interim.pi(b, TypeLabel::new(k, j));
                if !pi.is_zero() {
                    total += pi * weighted_virtual_value(inst, fl, b, k, j);
                }
            }
        }
    }
    Ok(total)
}

/// The Lagrangian with its payment terms written out: revenue plus each
/// multiplier times the slack of its BIC constraint. Valid for any
/// multipliers; equals [`lagrangian_value`] exactly when they form a flow.
pub fn lagrangian_long_form(inst: &Instance, fl: &Flow, interim: &InterimForm) -> Result<Rational> {
    fl.check_shape(inst)?;
    let mut total = Rational::zero();
    for b in Bidder::ALL {
        let spec = inst.bidder(b);
        // the truth has the higher interest in every constraint, so the report is always useful
        let util = |truth_k: usize, report: TypeLabel| -> Rational {
            if report.is_null() {
                return Rational::zero();
            }
            interim.pi(b, report) * spec.value_q(truth_k) - interim.p(b, report)
        };
        for k in 1..=spec.levels() {
            for j in Interest::ALL {
                let t = TypeLabel::new(k, j);
                total += spec.prob_of(t) * interim.p(b, t);
            }
            let d = TypeLabel::new(k, Interest::Day2);
            let c = TypeLabel::new(k, Interest::Day1);
            total += fl.alpha(b, k) * (util(k, d) - util(k, c));
            for j in Interest::ALL {
                let below = if k == 1 {
                    TypeLabel::null()
                } else {
                    TypeLabel::new(k - 1, j)
                };
                total += fl.lambda(b, j, k) * (util(k, TypeLabel::new(k, j)) - util(k, below));
            }
        }
    }
    Ok(total)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::numerics::{int, make_instance, ratio, BidderSpec};
    use crate::reduction::{build_instance, DisjInput};

    fn small() -> Instance {
        build_instance(&DisjInput::from_bits("10", "10").unwrap()).unwrap().0
    }

    #[test]
    fn canonical_is_flow() {
        let inst = small();
        let fl = canonical_flow(&inst);
        assert!(is_flow(&inst, &fl).unwrap().passed());
        for b in Bidder::ALL {
            assert!(fl.alpha[b.index()].iter().all(|a| a.is_zero()));
        }
        assert_eq!(fl.lambda(Bidder::One, Interest::Day1, 1), ratio(1, 2));
        assert!(fl.lambda[1][1].iter().all(|l| l.is_zero()));
    }

    #[test]
    fn zero_multipliers_are_not_a_flow() {
        let inst = small();
        let report = is_flow(&inst, &Flow::zero(&inst)).unwrap();
        assert!(!report.passed());
        assert!(report.failures_of(Condition::FlowDay1).count() > 0);
    }

    #[test]
    fn shape_error() {
        let inst = small();
        let mut fl = canonical_flow(&inst);
        fl.alpha[0].pop();
        assert!(matches!(is_flow(&inst, &fl), Err(Error::Shape(_))));
    }

    #[test]
    fn small_case_virtual_values() {
        let inst = small();
        let phi = virtual_values(&inst, &canonical_flow(&inst)).unwrap();
        assert_eq!(phi.get(Bidder::One, 2, Interest::Day1).unwrap(), &ratio(827, 205));
        // top level carries no information rent
        assert_eq!(phi.get(Bidder::One, 4, Interest::Day2).unwrap(), &int(8));
        assert_eq!(phi.get(Bidder::Two, 4, Interest::Day1).unwrap(), &int(8));
        assert!(phi.get(Bidder::Two, 2, Interest::Day2).is_none());
        // n^2 - 10n + 2 at n = 2
        assert_eq!(phi.get(Bidder::One, 1, Interest::Day1).unwrap(), &int(-14));
    }

    #[test]
    fn boost_identity_and_bounds() {
        let inst = small();
        let fl = canonical_flow(&inst);
        assert_eq!(boost(&inst, &fl, Bidder::One, 3, &int(0)).unwrap(), fl);
        let too_much = fl.lambda(Bidder::One, Interest::Day2, 3) + ratio(1, 1000);
        assert!(matches!(
            boost(&inst, &fl, Bidder::One, 3, &too_much),
            Err(Error::BoostTooLarge { k: 3, .. })
        ));
    }

    #[test]
    fn boost_shifts_lower_virtual_values() {
        let inst = small();
        let fl = canonical_flow(&inst);
        let eps = ratio(1, 640);
        let boosted = boost(&inst, &fl, Bidder::One, 3, &eps).unwrap();
        assert!(is_flow(&inst, &boosted).unwrap().passed());
        let before = virtual_values(&inst, &fl).unwrap();
        let after = virtual_values(&inst, &boosted).unwrap();
        let spec = inst.bidder(Bidder::One);
        for k in 1..=4 {
            for j in Interest::ALL {
                let shift = after.get(Bidder::One, k, j).unwrap() - before.get(Bidder::One, k, j).unwrap();
                let expected = if k < 3 {
                    let mag = &eps * (spec.value_q(k + 1) - spec.value_q(k)) / spec.prob(k, j);
                    if j == Interest::Day2 {
                        mag
                    } else {
                        -mag
                    }
                } else {
                    int(0)
                };
                assert_eq!(shift, expected, "level {k} {j}");
            }
        }
    }

    #[test]
    fn lagrangian_of_zero_allocation() {
        let inst = small();
        let fl = canonical_flow(&inst);
        let interim = InterimForm::zero(&inst);
        assert_eq!(lagrangian_value(&inst, &fl, &interim).unwrap(), int(0));
        assert!(matches!(
            lagrangian_value(&inst, &Flow::zero(&inst), &interim),
            Err(Error::FlowInvalid(_))
        ));
    }

    #[test]
    fn modified_flow_needs_shared_grid() {
        let b1 = BidderSpec::single_interest(vec![1, 2], vec![ratio(1, 2), ratio(1, 2)]);
        let b2 = BidderSpec::single_interest(vec![1, 3], vec![ratio(1, 2), ratio(1, 2)]);
        let inst = make_instance(b1, b2).unwrap();
        assert!(matches!(modified_flow(&inst), Err(Error::Shape(_))));
    }
}
