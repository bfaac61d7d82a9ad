//! Named exact property checks on reduction instances.
//!
//! Each check has a stable kebab-case name (see [`CATALOG`]) and records
//! every case it inspects; a property passes only if all its cases do.

use std::collections::BTreeSet;

use num_bigint::BigInt;
use num_traits::{One, Signed, ToPrimitive, Zero};

use crate::duality::{canonical_flow, is_flow, lagrangian_value, modified_flow, virtual_values, ModifiedFlow, VirtualValueTable};
use crate::error::Result;
use crate::mechanisms::{bic_violations, interim_form, revenue, spa_bidder1, spa_careful, utility, witness_report, InterimForm, Mechanism};
use crate::numerics::{render, Bidder, Instance, Interest, Rational, TypeLabel};
use crate::reduction::{build_instance, DisjInput, ReductionTrace, ReductionTraces};
use crate::report::Condition;

/// Check names with the statement each one verifies.
pub const CATALOG: &[(&str, &str)] = &[
    ("day1-mass", "Bidder One's day1 masses sum to 1/2"),
    ("day2-mass", "Bidder One's day2 masses sum to 1/2"),
    ("bidder2-mass", "Bidder Two's day1 masses sum to 1"),
    ("day1-range", "f1((v^k,1))*2b lies in [a-2n^3, a+2n^3] for k in [2,n+2]"),
    ("day2-range", "f1((v^k,2))*2b lies in [a-n^3, a+n^3] for k in [2,n+2]"),
    ("bidder2-range", "f2((v^k,1))*b lies in [a-2n^3, a+2n^3] for k in [2,n+2]"),
    ("grid", "every probability is an integer multiple of 1/(2b)"),
    ("bidder2-bottom-lightest", "f2((v^1,1)) < f2((v^k,1)) for every k > 1"),
    ("zc-gap", "z^c_{i+1} - z^c_{i+2} <= n^3/((n-i+2)(n-i+1)) for i in [1,n]"),
    ("zc-decreasing", "z^c_{i+2} < z^c_{i+1} for i in [1,n]"),
    ("zc-range", "z^c_{i+1} lies in [a-n^3, a] for i in [1,n+1]"),
    ("zd-gap-x0", "x_i = 0 implies z^d_{i+1} - z^d_{i+2} <= n^3/((n-i+2)(n-i+1))"),
    ("zd-gap-x1", "x_i = 1 implies z^d_{i+1} - z^d_{i+2} <= 1/(n-i+1)"),
    ("zd-decreasing", "z^d_{i+2} < z^d_{i+1} for i in [1,n]"),
    ("zd-range", "z^d_{i+1} lies in [a-n^3, a] for i in [1,n+1]"),
    ("zd-floor", "f1((v^{i+1},2))*2b >= z^d_{i+2} for i in [1,n]"),
    ("ze-gap-y1", "y_i = 1 implies z^e_{i+1} - z^e_{i+2} <= n^2/((n-i+2)(n-i+1))"),
    ("ze-gap-y0", "y_i = 0 implies z^e_{i+1} - z^e_{i+2} <= -1/(n-i+1)"),
    ("ze-nearly-decreasing", "z^e_{i+2} < z^e_{i+1} + 2 for i in [1,n]"),
    ("ze-range", "z^e_{i+1} lies in [a-2n^2, a+2n^2] for i in [1,n+1]"),
    ("ze-ceiling-y0", "y_i = 0 implies f2((v^{i+1},1))*b < z^e_{i+2}"),
    ("canonical-higher-value-wins", "canonical flow: k > k' implies Phi1((v^k,j)) > Phi2((v^k',1))"),
    ("canonical-lower-value-loses", "canonical flow: k < k' implies Phi1((v^k,j)) < Phi2((v^k',1))"),
    ("canonical-tie-disjoint-level", "canonical flow: x_k = 0 or y_k = 0 implies Phi1((v^{k+1},j)) > Phi2((v^{k+1},1))"),
    ("canonical-tie-intersecting-level", "canonical flow: x_k = y_k = 1 implies Phi1((v^{k+1},1)) > Phi2((v^{k+1},1)) > Phi1((v^{k+1},2))"),
    ("canonical-bottom-level", "canonical flow: Phi1((v^1,j)) > Phi2((v^1,1))"),
    ("canonical-top-level", "canonical flow: Phi1((v^{n+2},j)) = Phi2((v^{n+2},1))"),
    ("canonical-positive", "canonical flow: every defined virtual value is positive"),
    ("canonical-level-separation", "canonical flow: every Phi at level i is below every Phi at level i+1, by at least 1 when i >= 2"),
    ("canonical-witness-iff-disjoint", "the second-price auction with ties to Bidder One witnesses optimality for the canonical flow iff x, y are disjoint"),
    ("canonical-failure-levels", "the canonical witness fails only on virtual-value maximization, exactly at levels k+1 with x_k = y_k = 1"),
    ("modified-valid", "the modified flow satisfies every flow condition"),
    ("modified-boost-iff-intersecting", "the boost is positive iff x, y intersect"),
    ("modified-higher-value-wins", "modified flow: k > k' implies Phi1((v^k,j)) > Phi2((v^k',1))"),
    ("modified-lower-value-loses", "modified flow: k < k' implies Phi1((v^k,j)) < Phi2((v^k',1))"),
    ("modified-tie-weak", "modified flow: Phi1((v^k,j)) >= Phi2((v^k,1)) for k >= 2"),
    ("modified-equality-index", "intersecting inputs: k* exists in [2,n+1] with Phi1((v^k*,2)) = Phi2((v^k*,1))"),
    ("modified-bottom-flip", "intersecting inputs: Phi1((v^1,2)) > Phi2((v^1,1)) > Phi1((v^1,1))"),
    ("modified-top-level", "modified flow: Phi1((v^{n+2},j)) = Phi2((v^{n+2},1))"),
    ("modified-positive", "modified flow: every defined virtual value is positive"),
    ("modified-level-separation", "modified flow: every Phi at level i is below every Phi at level i+1"),
    ("careful-bic", "the careful second-price auction at k* is BIC"),
    ("careful-witness", "the careful second-price auction at k* witnesses optimality for the modified flow"),
    ("careful-tail-indifference", "careful auction: pi((v^k,2)) v^k - p((v^k,2)) = pi((v^k,1)) v^k - p((v^k,1)) for k > k*"),
    ("careful-interim", "careful auction: Bidder One's interim allocation is the opponent CDF, except 0 at (v^1,1) and reduced by f2((v^1,1)) at (v^k*,2)"),
    ("certified-duality", "revenue of the certified mechanism equals the Lagrangian of its flow"),
];

/// Statement verified by the named check.
pub fn describe(name: &str) -> Option<&'static str> {
    CATALOG.iter().find(|(n, _)| *n == name).map(|(_, s)| *s)
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PropertyCheck {
    pub name: &'static str,
    pub cases: usize,
    /// Descriptions of failing cases.
    pub failures: Vec<String>,
}

impl PropertyCheck {
    pub fn passed(&self) -> bool {
        self.failures.is_empty()
    }
}

/// Property checks in first-recorded order.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct PropertyReport {
    pub checks: Vec<PropertyCheck>,
}

impl PropertyReport {
    pub fn new() -> Self {
        Self::default()
    }

    /// Records one case; `detail` is only rendered on failure.
    pub fn record(&mut self, name: &'static str, ok: bool, detail: impl FnOnce() -> String) {
        debug_assert!(describe(name).is_some(), "unknown check {name}");
        let pos = match self.checks.iter().position(|c| c.name == name) {
            Some(pos) => pos,
            None => {
                self.checks.push(PropertyCheck {
                    name,
                    cases: 0,
                    failures: Vec::new(),
                });
                self.checks.len() - 1
            }
        };
        let check = &mut self.checks[pos];
        check.cases += 1;
        if !ok {
            check.failures.push(detail());
        }
    }

    /// Registers a check that may have no applicable cases.
    pub fn declare(&mut self, name: &'static str) {
        if !self.checks.iter().any(|c| c.name == name) {
            self.checks.push(PropertyCheck {
                name,
                cases: 0,
                failures: Vec::new(),
            });
        }
    }

    pub fn get(&self, name: &str) -> Option<&PropertyCheck> {
        self.checks.iter().find(|c| c.name == name)
    }

    pub fn passed(&self) -> bool {
        self.checks.iter().all(PropertyCheck::passed)
    }

    pub fn failing(&self) -> impl Iterator<Item = &PropertyCheck> {
        self.checks.iter().filter(|c| !c.passed())
    }

    pub fn absorb(&mut self, other: PropertyReport) {
        for check in other.checks {
            match self.checks.iter_mut().find(|c| c.name == check.name) {
                Some(mine) => {
                    mine.cases += check.cases;
                    mine.failures.extend(check.failures);
                }
                None => self.checks.push(check),
            }
        }
    }
}

fn pow(n: usize, e: u32) -> Rational {
    Rational::from_integer(BigInt::from(n).pow(e))
}

fn q(n: usize) -> Rational {
    Rational::from_integer(BigInt::from(n))
}

fn in_range(x: &Rational, lo: &Rational, hi: &Rational) -> bool {
    lo <= x && x <= hi
}

fn scaled(trace: &ReductionTrace, k: usize) -> Rational {
    Rational::from_integer(trace.scaled[k - 1].clone())
}

/// Masses, per-level ranges, the probability grid and the helper-sequence properties
/// of the three tables built from `d`.
pub fn reduction_properties(d: &DisjInput) -> Result<PropertyReport> {
    let (_, traces) = build_instance(d)?;
    Ok(reduction_properties_of(d, &traces))
}

pub fn reduction_properties_of(d: &DisjInput, traces: &ReductionTraces) -> PropertyReport {
    let n = d.n();
    let mut rep = PropertyReport::new();
    let ReductionTraces { day1, day2, bidder2 } = traces;
    let a = &day1.a;
    let half = Rational::new(BigInt::one(), BigInt::from(2));

    for (name, trace, want) in [
        ("day1-mass", day1, half.clone()),
        ("day2-mass", day2, half),
        ("bidder2-mass", bidder2, Rational::one()),
    ] {
        let total: Rational = trace.probs().iter().sum();
        rep.record(name, total == want, || format!("{d}: total {}", render(&total)));
    }

    let n3 = pow(n, 3);
    let n2 = pow(n, 2);
    for (name, trace, width) in [
        ("day1-range", day1, &n3 * q(2)),
        ("day2-range", day2, n3.clone()),
        ("bidder2-range", bidder2, &n3 * q(2)),
    ] {
        let (lo, hi) = (a - &width, a + &width);
        for k in 2..=n + 2 {
            let s = scaled(trace, k);
            rep.record(name, in_range(&s, &lo, &hi), || {
                format!("{d}: level {k} scaled mass {}", render(&s))
            });
        }
    }

    let two_b = Rational::from_integer(&day1.b * 2);
    for (trace, label) in [(day1, "day1"), (day2, "day2"), (bidder2, "bidder2")] {
        for (k, p) in trace.probs().iter().enumerate() {
            let s = p * &two_b;
            rep.record("grid", s.is_integer(), || {
                format!("{d}: {label} level {} mass {}", k + 1, render(p))
            });
        }
    }

    let e1 = scaled(bidder2, 1);
    for k in 2..=n + 2 {
        let ek = scaled(bidder2, k);
        rep.record("bidder2-bottom-lightest", e1 < ek, || {
            format!("{d}: f2 level {k} scaled {} vs level 1 {}", render(&ek), render(&e1))
        });
    }

    // gap bounds use n - i + 2 and n - i + 1, both positive for i in [1, n]
    let cubic_gap = |i: usize| &n3 / (q(n - i + 2) * q(n - i + 1));
    let square_gap = |i: usize| &n2 / (q(n - i + 2) * q(n - i + 1));
    let unit_gap = |i: usize| Rational::one() / q(n - i + 1);

    for i in 1..=n {
        let gap = day1.z(i + 1) - day1.z(i + 2);
        rep.record("zc-gap", gap <= cubic_gap(i), || format!("{d}: i={i} gap {}", render(&gap)));
        rep.record("zc-decreasing", gap.is_positive(), || format!("{d}: i={i} gap {}", render(&gap)));
    }
    for i in 1..=n + 1 {
        let z = day1.z(i + 1);
        rep.record("zc-range", in_range(z, &(a - &n3), a), || format!("{d}: z_{} = {}", i + 1, render(z)));
    }

    rep.declare("zd-gap-x0");
    rep.declare("zd-gap-x1");
    for i in 1..=n {
        let gap = day2.z(i + 1) - day2.z(i + 2);
        if d.x()[i - 1] {
            rep.record("zd-gap-x1", gap <= unit_gap(i), || format!("{d}: i={i} gap {}", render(&gap)));
        } else {
            rep.record("zd-gap-x0", gap <= cubic_gap(i), || format!("{d}: i={i} gap {}", render(&gap)));
        }
        rep.record("zd-decreasing", gap.is_positive(), || format!("{d}: i={i} gap {}", render(&gap)));
        let f = scaled(day2, i + 1);
        let z = day2.z(i + 2);
        rep.record("zd-floor", &f >= z, || {
            format!("{d}: i={i} scaled {} vs z {}", render(&f), render(z))
        });
    }
    for i in 1..=n + 1 {
        let z = day2.z(i + 1);
        rep.record("zd-range", in_range(z, &(a - &n3), a), || format!("{d}: z_{} = {}", i + 1, render(z)));
    }

    rep.declare("ze-gap-y1");
    rep.declare("ze-gap-y0");
    rep.declare("ze-ceiling-y0");
    for i in 1..=n {
        let (zi, zn) = (bidder2.z(i + 1), bidder2.z(i + 2));
        let gap = zi - zn;
        if d.y()[i - 1] {
            rep.record("ze-gap-y1", gap <= square_gap(i), || format!("{d}: i={i} gap {}", render(&gap)));
        } else {
            rep.record("ze-gap-y0", gap <= -unit_gap(i), || format!("{d}: i={i} gap {}", render(&gap)));
            let f = scaled(bidder2, i + 1);
            rep.record("ze-ceiling-y0", &f < zn, || {
                format!("{d}: i={i} scaled {} vs z {}", render(&f), render(zn))
            });
        }
        rep.record("ze-nearly-decreasing", zn < &(zi + q(2)), || {
            format!("{d}: i={i} z {} then {}", render(zi), render(zn))
        });
    }
    let ze_width = &n2 * q(2);
    for i in 1..=n + 1 {
        let z = bidder2.z(i + 1);
        rep.record("ze-range", in_range(z, &(a - &ze_width), &(a + &ze_width)), || {
            format!("{d}: z_{} = {}", i + 1, render(z))
        });
    }
    rep
}

fn phi(t: &VirtualValueTable, b: Bidder, k: usize, j: Interest) -> Option<Rational> {
    t.get(b, k, j).cloned()
}

fn show(p: &Option<Rational>) -> String {
    p.as_ref().map(render).unwrap_or_else(|| "undefined".into())
}

/// `lhs > rhs` on defined values; undefined values fail.
fn gt(lhs: &Option<Rational>, rhs: &Option<Rational>) -> bool {
    matches!((lhs, rhs), (Some(l), Some(r)) if l > r)
}

/// Cross-level comparisons shared by both flows: higher/lower value order,
/// top-level equality, positivity and level separation.
fn ordering(rep: &mut PropertyReport, d: &DisjInput, t: &VirtualValueTable, prefix: Prefix, unit_gap: bool) {
    let top = d.n() + 2;
    for j in Interest::ALL {
        for k in 1..=top {
            let p1 = phi(t, Bidder::One, k, j);
            for kk in 1..=top {
                if k == kk {
                    continue;
                }
                let p2 = phi(t, Bidder::Two, kk, Interest::Day1);
                let detail = || format!("{d}: Phi1({k},{}) = {} vs Phi2({kk},1) = {}", j.day(), show(&p1), show(&p2));
                if k > kk {
                    rep.record(prefix.higher, gt(&p1, &p2), detail);
                } else {
                    rep.record(prefix.lower, gt(&p2, &p1), detail);
                }
            }
        }
        let (p1, p2) = (phi(t, Bidder::One, top, j), phi(t, Bidder::Two, top, Interest::Day1));
        rep.record(prefix.top, p1.is_some() && p1 == p2, || {
            format!("{d}: top Phi1(.,{}) = {} vs Phi2 = {}", j.day(), show(&p1), show(&p2))
        });
    }
    for (b, k, j, p) in t.defined() {
        rep.record(prefix.positive, p.is_positive(), || {
            format!("{d}: Phi{b}({k},{}) = {}", j.day(), render(p))
        });
    }
    let level = |k: usize| -> Vec<Rational> {
        [
            phi(t, Bidder::One, k, Interest::Day1),
            phi(t, Bidder::One, k, Interest::Day2),
            phi(t, Bidder::Two, k, Interest::Day1),
        ]
        .into_iter()
        .flatten()
        .collect()
    };
    for i in 1..top {
        let (lo, hi) = (level(i), level(i + 1));
        let (Some(max_lo), Some(min_hi)) = (lo.iter().max(), hi.iter().min()) else {
            rep.record(prefix.separation, false, || format!("{d}: level {i} has no defined virtual value"));
            continue;
        };
        let gap = min_hi - max_lo;
        let needed = if unit_gap && i >= 2 {
            Rational::one()
        } else {
            Rational::zero()
        };
        let ok = if needed.is_zero() { gap.is_positive() } else { gap >= needed };
        rep.record(prefix.separation, ok, || format!("{d}: levels {i}->{} gap {}", i + 1, render(&gap)));
    }
}

#[derive(Clone, Copy)]
struct Prefix {
    higher: &'static str,
    lower: &'static str,
    top: &'static str,
    positive: &'static str,
    separation: &'static str,
}

const CANONICAL: Prefix = Prefix {
    higher: "canonical-higher-value-wins",
    lower: "canonical-lower-value-loses",
    top: "canonical-top-level",
    positive: "canonical-positive",
    separation: "canonical-level-separation",
};

const MODIFIED: Prefix = Prefix {
    higher: "modified-higher-value-wins",
    lower: "modified-lower-value-loses",
    top: "modified-top-level",
    positive: "modified-positive",
    separation: "modified-level-separation",
};

/// Virtual-value orderings of the canonical flow on the instance built from `d`.
pub fn canonical_properties(inst: &Instance, d: &DisjInput) -> Result<PropertyReport> {
    let t = virtual_values(inst, &canonical_flow(inst))?;
    let mut rep = PropertyReport::new();
    ordering(&mut rep, d, &t, CANONICAL, true);
    rep.declare("canonical-tie-disjoint-level");
    rep.declare("canonical-tie-intersecting-level");
    for k in 1..=d.n() {
        let c = phi(&t, Bidder::One, k + 1, Interest::Day1);
        let dd = phi(&t, Bidder::One, k + 1, Interest::Day2);
        let e = phi(&t, Bidder::Two, k + 1, Interest::Day1);
        let detail = || format!("{d}: level {} c {} d {} e {}", k + 1, show(&c), show(&dd), show(&e));
        if d.x()[k - 1] && d.y()[k - 1] {
            rep.record("canonical-tie-intersecting-level", gt(&c, &e) && gt(&e, &dd), detail);
        } else {
            rep.record("canonical-tie-disjoint-level", gt(&c, &e) && gt(&dd, &e), detail);
        }
    }
    let e1 = phi(&t, Bidder::Two, 1, Interest::Day1);
    for j in Interest::ALL {
        let p1 = phi(&t, Bidder::One, 1, j);
        rep.record("canonical-bottom-level", gt(&p1, &e1), || {
            format!("{d}: Phi1(1,{}) = {} vs Phi2(1,1) = {}", j.day(), show(&p1), show(&e1))
        });
    }
    Ok(rep)
}

/// Virtual-value orderings and validity of the modified flow.
pub fn modified_properties(inst: &Instance, d: &DisjInput, mf: &ModifiedFlow) -> Result<PropertyReport> {
    let mut rep = PropertyReport::new();
    let valid = is_flow(inst, &mf.flow)?;
    rep.record("modified-valid", valid.passed(), || format!("{d}: {}", valid.summary()));
    let intersecting = !d.is_disjoint();
    rep.record("modified-boost-iff-intersecting", mf.eps.is_positive() == intersecting, || {
        format!("{d}: eps = {}", render(&mf.eps))
    });

    let t = virtual_values(inst, &mf.flow)?;
    ordering(&mut rep, d, &t, MODIFIED, false);
    let top = d.n() + 2;
    for k in 2..=top {
        let e = phi(&t, Bidder::Two, k, Interest::Day1);
        for j in Interest::ALL {
            let p1 = phi(&t, Bidder::One, k, j);
            let ok = matches!((&p1, &e), (Some(l), Some(r)) if l >= r);
            rep.record("modified-tie-weak", ok, || {
                format!("{d}: Phi1({k},{}) = {} vs Phi2 = {}", j.day(), show(&p1), show(&e))
            });
        }
    }

    rep.declare("modified-equality-index");
    rep.declare("modified-bottom-flip");
    if intersecting {
        let ok = match mf.k_star {
            Some(k) if (2..=d.n() + 1).contains(&k) => {
                let (l, r) = (phi(&t, Bidder::One, k, Interest::Day2), phi(&t, Bidder::Two, k, Interest::Day1));
                l.is_some() && l == r
            }
            _ => false,
        };
        rep.record("modified-equality-index", ok, || format!("{d}: k* = {:?}", mf.k_star));
        let c1 = phi(&t, Bidder::One, 1, Interest::Day1);
        let d1 = phi(&t, Bidder::One, 1, Interest::Day2);
        let e1 = phi(&t, Bidder::Two, 1, Interest::Day1);
        rep.record("modified-bottom-flip", gt(&d1, &e1) && gt(&e1, &c1), || {
            format!("{d}: level 1 c {} d {} e {}", show(&c1), show(&d1), show(&e1))
        });
    }
    Ok(rep)
}

/// BIC, witness, tail indifference and interim identities of the careful
/// auction at `k_star` against the modified flow.
pub fn careful_properties(inst: &Instance, d: &DisjInput, mf: &ModifiedFlow, k_star: usize) -> Result<PropertyReport> {
    let mut rep = PropertyReport::new();
    let m = spa_careful(inst, k_star)?;
    let f = interim_form(inst, &m);
    let bic = bic_violations(inst, &f);
    rep.record("careful-bic", bic.passed(), || format!("{d}: {}", bic.summary()));
    let witness = witness_report(inst, &mf.flow, &m)?;
    rep.record("careful-witness", witness.passed(), || format!("{d}: {}", witness.summary()));
    tail_indifference(&mut rep, inst, d, &f, k_star);
    careful_interim(&mut rep, inst, d, &f, k_star);
    duality(&mut rep, inst, d, &mf.flow, &m)?;
    Ok(rep)
}

fn tail_indifference(rep: &mut PropertyReport, inst: &Instance, d: &DisjInput, f: &InterimForm, k_star: usize) {
    for b in Bidder::ALL {
        for k in k_star + 1..=inst.bidder(b).levels() {
            let day2 = TypeLabel::new(k, Interest::Day2);
            let day1 = TypeLabel::new(k, Interest::Day1);
            // the day2 type's value for a day1 allocation equals its own value
            let u2 = utility(inst, b, f, day2, day2);
            let u1 = utility(inst, b, f, day1, day1);
            rep.record("careful-tail-indifference", u1 == u2, || {
                format!("{d}: bidder {b} level {k} day2 {} day1 {}", render(&u2), render(&u1))
            });
        }
    }
}

fn careful_interim(rep: &mut PropertyReport, inst: &Instance, d: &DisjInput, f: &InterimForm, k_star: usize) {
    let two = inst.bidder(Bidder::Two);
    let low = two.prob(1, Interest::Day1);
    let mut cdf = Rational::zero();
    for k in 1..=inst.bidder(Bidder::One).levels() {
        cdf += two.prob(k, Interest::Day1);
        let want1 = if k == 1 { Rational::zero() } else { cdf.clone() };
        let want2 = if k == k_star { &cdf - &low } else { cdf.clone() };
        for (j, want) in [(Interest::Day1, want1), (Interest::Day2, want2)] {
            let got = f.pi(Bidder::One, TypeLabel::new(k, j));
            rep.record("careful-interim", got == &want, || {
                format!("{d}: pi1({k},{}) = {} expected {}", j.day(), render(got), render(&want))
            });
        }
    }
}

fn duality(rep: &mut PropertyReport, inst: &Instance, d: &DisjInput, fl: &crate::duality::Flow, m: &Mechanism) -> Result<()> {
    let rev = revenue(inst, m);
    let lag = lagrangian_value(inst, fl, &interim_form(inst, m))?;
    rep.record("certified-duality", rev == lag, || {
        format!("{d}: revenue {} Lagrangian {}", render(&rev), render(&lag))
    });
    Ok(())
}

/// Canonical witness of the tie-to-Bidder-One auction and its failure levels.
pub fn canonical_witness_properties(inst: &Instance, d: &DisjInput) -> Result<PropertyReport> {
    let mut rep = PropertyReport::new();
    let fl = canonical_flow(inst);
    let m = spa_bidder1(inst);
    let witness = witness_report(inst, &fl, &m)?;
    rep.record("canonical-witness-iff-disjoint", witness.passed() == d.is_disjoint(), || {
        format!("{d}: witness {}", witness.summary())
    });
    let maximization = [
        Condition::HighestVirtualValue,
        Condition::FullAllocation,
        Condition::NoAllocationBelowZero,
    ];
    let other = witness.failures().filter(|c| !maximization.contains(&c.condition)).count();
    let levels: BTreeSet<usize> = witness
        .failures()
        .filter(|c| maximization.contains(&c.condition))
        .map(|c| c.location.level())
        .collect();
    let expected: BTreeSet<usize> = d.intersections().into_iter().map(|k| k + 1).collect();
    rep.record("canonical-failure-levels", other == 0 && levels == expected, || {
        format!("{d}: failure levels {levels:?}, expected {expected:?}, other failures {other}")
    });
    if d.is_disjoint() {
        duality(&mut rep, inst, d, &fl, &m)?;
    }
    Ok(rep)
}

/// Every exact property for one input: reduction tables, both flows, the
/// certified mechanism and strong duality.
pub fn all_properties(d: &DisjInput) -> Result<PropertyReport> {
    selected_properties(d, true, true)
}

/// Runs the construction checks, the flow and mechanism checks, or both.
pub fn selected_properties(d: &DisjInput, construction: bool, flows: bool) -> Result<PropertyReport> {
    let (inst, traces) = build_instance(d)?;
    let mut rep = if construction {
        reduction_properties_of(d, &traces)
    } else {
        PropertyReport::default()
    };
    if !flows {
        return Ok(rep);
    }
    rep.absorb(canonical_properties(&inst, d)?);
    rep.absorb(canonical_witness_properties(&inst, d)?);
    let mf = modified_flow(&inst)?;
    rep.absorb(modified_properties(&inst, d, &mf)?);
    if let Some(k_star) = mf.k_star.filter(|_| !d.is_disjoint()) {
        rep.absorb(careful_properties(&inst, d, &mf, k_star)?);
    }
    Ok(rep)
}

/// Virtual-value gaps and boost size on one input.
#[derive(Debug, Clone, PartialEq)]
pub struct GapProfile {
    /// Min and max over `i in [1,n]` of `Phi(c^{i+1}) - Phi(e^{i+1})`, canonical flow.
    pub c_minus_e: (Rational, Rational),
    /// Min and max of `Phi(e^{i+1}) - Phi(d^{i+1})` over intersecting `i`;
    /// `None` on disjoint inputs.
    pub e_minus_d: Option<(Rational, Rational)>,
    pub eps: Rational,
}

impl GapProfile {
    pub fn to_f64(q: &Rational) -> f64 {
        q.to_f64().unwrap_or(f64::NAN)
    }
}

fn min_max(xs: impl IntoIterator<Item = Rational>) -> Option<(Rational, Rational)> {
    xs.into_iter().fold(None, |acc, x| match acc {
        None => Some((x.clone(), x)),
        Some((lo, hi)) => Some((lo.min(x.clone()), hi.max(x))),
    })
}

pub fn gap_profile(d: &DisjInput) -> Result<GapProfile> {
    let (inst, _) = build_instance(d)?;
    let t = virtual_values(&inst, &canonical_flow(&inst))?;
    let get = |b, k, j| -> Rational { t.get(b, k, j).cloned().unwrap_or_else(Rational::zero) };
    let n = d.n();
    let c_minus_e = min_max((1..=n).map(|i| {
        get(Bidder::One, i + 1, Interest::Day1) - get(Bidder::Two, i + 1, Interest::Day1)
    }))
    .expect("n >= 1");
    let e_minus_d = min_max(
        d.intersections()
            .into_iter()
            .map(|i| get(Bidder::Two, i + 1, Interest::Day1) - get(Bidder::One, i + 1, Interest::Day2)),
    );
    let eps = modified_flow(&inst)?.eps;
    Ok(GapProfile {
        c_minus_e,
        e_minus_d,
        eps,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn catalog_names_are_unique() {
        let names: BTreeSet<_> = CATALOG.iter().map(|(n, _)| n).collect();
        assert_eq!(names.len(), CATALOG.len());
    }

    #[test]
    fn reduction_checks_cover_every_helper() {
        let d = DisjInput::from_bits("1010", "0110").unwrap();
        let rep = reduction_properties(&d).unwrap();
        assert_eq!(rep.get("zc-range").unwrap().cases, 5);
        assert_eq!(rep.get("zd-gap-x1").unwrap().cases, 2);
        assert_eq!(rep.get("ze-gap-y0").unwrap().cases, 2);
        assert_eq!(rep.get("grid").unwrap().cases, 18);
    }

    #[test]
    fn flow_suite_passes_at_sixteen() {
        for (x, y) in [("1".repeat(16), "1".repeat(16)), ("0".repeat(16), "1".repeat(16))] {
            let d = DisjInput::from_bits(&x, &y).unwrap();
            let rep = all_properties(&d).unwrap();
            let failing: Vec<_> = rep
                .failing()
                .filter(|c| c.name != "zd-decreasing")
                .map(|c| (c.name, c.failures[0].clone()))
                .collect();
            assert!(failing.is_empty(), "{failing:?}");
        }
    }

    #[test]
    fn day2_helper_stalls_at_integer_values() {
        // x_i = 1 takes the ceiling of z_{i+1}; an integral z_{i+1} leaves z_{i+2} equal to it
        let d = DisjInput::from_bits(&"1".repeat(16), &"1".repeat(16)).unwrap();
        let (_, traces) = build_instance(&d).unwrap();
        assert!(traces.day2.z(13).is_integer());
        assert_eq!(traces.day2.z(13), traces.day2.z(14));
        let rep = reduction_properties(&d).unwrap();
        assert!(!rep.get("zd-decreasing").unwrap().passed());
    }

    #[test]
    fn small_instances_break_the_bottom_flip() {
        let d = DisjInput::from_bits("11", "11").unwrap();
        let rep = all_properties(&d).unwrap();
        assert!(!rep.passed());
    }

    #[test]
    fn gap_profile_on_intersecting_input() {
        let d = DisjInput::from_bits(&"1".repeat(12), &"1".repeat(12)).unwrap();
        let g = gap_profile(&d).unwrap();
        assert!(g.c_minus_e.0.is_positive());
        assert!(g.e_minus_d.unwrap().0.is_positive());
        assert!(g.eps.is_positive());
    }
}
