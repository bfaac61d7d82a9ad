//! Exact revenue-maximization LP over ex-post allocations and interim payments.
//!
//! Interim allocations are substituted out as `pi_i(t) = sum_l f_{-i}(l) X_i(t, l)`;
//! ex-post payments never appear. Every BIC constraint is included, with
//! deviations to and from the null type giving IR and `p >= 0`.

mod simplex;

use std::collections::{BTreeMap, HashMap};
use std::fmt::Write as _;

use num_traits::{One, Signed, Zero};
use serde::Serialize;

pub use simplex::solve_exact;

use crate::duality::{canonical_flow, modified_flow};
use crate::error::{Error, Result};
use crate::mechanisms::{spa_bidder1, spa_careful, witness_report, Mechanism};
use crate::numerics::{render, render_all, Bidder, Instance, Rational, TypeLabel};

/// Largest number of value levels per bidder the LP backend accepts.
pub const LP_LEVEL_CAP: usize = 20;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Relation {
    Le,
    Eq,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Domain {
    NonNeg,
    Free,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Constraint {
    pub name: String,
    pub coeffs: Vec<(usize, Rational)>,
    pub relation: Relation,
    pub rhs: Rational,
}

/// `maximize objective . x` subject to the constraints and variable domains.
#[derive(Debug, Clone, Default)]
pub struct LinearProgram {
    names: Vec<String>,
    index: HashMap<String, usize>,
    objective: Vec<Rational>,
    domains: Vec<Domain>,
    upper: Vec<Option<Rational>>,
    constraints: Vec<Constraint>,
}

impl LinearProgram {
    pub fn new() -> Self {
        Self::default()
    }

    /// Adds a variable and returns its column. Names must be unique.
    pub fn add_var(&mut self, name: &str, objective: Rational, domain: Domain, upper: Option<Rational>) -> usize {
        assert!(
            !self.index.contains_key(name),
            "duplicate variable name {name}"
        );
        let col = self.names.len();
        self.names.push(name.to_string());
        self.index.insert(name.to_string(), col);
        self.objective.push(objective);
        self.domains.push(domain);
        self.upper.push(upper);
        col
    }

    /// Adds a constraint, merging repeated columns and dropping zeros.
    pub fn add_constraint(&mut self, name: &str, coeffs: Vec<(usize, Rational)>, relation: Relation, rhs: Rational) {
        let mut merged: BTreeMap<usize, Rational> = BTreeMap::new();
        for (c, a) in coeffs {
            *merged.entry(c).or_insert_with(Rational::zero) += a;
        }
        self.constraints.push(Constraint {
            name: name.to_string(),
            coeffs: merged.into_iter().filter(|(_, a)| !a.is_zero()).collect(),
            relation,
            rhs,
        });
    }

    pub fn num_vars(&self) -> usize {
        self.names.len()
    }

    pub fn num_constraints(&self) -> usize {
        self.constraints.len()
    }

    pub fn var(&self, name: &str) -> Option<usize> {
        self.index.get(name).copied()
    }

    pub fn name(&self, col: usize) -> &str {
        &self.names[col]
    }

    pub fn constraints(&self) -> &[Constraint] {
        &self.constraints
    }

    /// Plain-text dump: an objective line, one line per constraint, then one
    /// bounds line per variable. Coefficients are signed `p/q`.
    pub fn to_text(&self) -> String {
        let term_list = |coeffs: &mut dyn Iterator<Item = (usize, &Rational)>| -> String {
            let terms: Vec<String> = coeffs
                .map(|(c, a)| {
                    let sign = if a.is_negative() { "-" } else { "+" };
                    format!("{sign} {} {}", render(&a.abs()), self.names[c])
                })
                .collect();
            if terms.is_empty() {
                "0".to_string()
            } else {
                terms.join(" ")
            }
        };
        let mut out = String::new();
        let mut obj = self
            .objective
            .iter()
            .enumerate()
            .filter(|(_, a)| !a.is_zero());
        let _ = writeln!(out, "maximize: {}", term_list(&mut obj));
        for con in &self.constraints {
            let rel = match con.relation {
                Relation::Le => "<=",
                Relation::Eq => "=",
            };
            let mut it = con.coeffs.iter().map(|(c, a)| (*c, a));
            let _ = writeln!(out, "{}: {} {rel} {}", con.name, term_list(&mut it), render(&con.rhs));
        }
        for (j, name) in self.names.iter().enumerate() {
            let lower = match self.domains[j] {
                Domain::NonNeg => "0/1".to_string(),
                Domain::Free => "-inf".to_string(),
            };
            let upper = self.upper[j].as_ref().map_or("+inf".to_string(), render);
            let _ = writeln!(out, "bound: {lower} <= {name} <= {upper}");
        }
        out
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct LpSolution {
    pub value: Rational,
    /// One optimal vertex, indexed like the program's variables.
    pub values: Vec<Rational>,
    pub pivots: usize,
}

/// The revenue LP of an instance, with column lookups.
#[derive(Debug, Clone)]
pub struct FedExLp {
    pub lp: LinearProgram,
    /// `x_col[i][t1][t2]`; `None` at null-type profiles.
    x_col: [Vec<Vec<Option<usize>>>; 2],
    /// `p_col[i][t]`; `None` at the null type.
    p_col: [Vec<Option<usize>>; 2],
}

fn x_name(b: Bidder, t1: TypeLabel, t2: TypeLabel) -> String {
    format!("X{b}[{t1};{t2}]")
}

fn p_name(b: Bidder, t: TypeLabel) -> String {
    format!("p{b}[{t}]")
}

pub fn assemble_lp(inst: &Instance) -> FedExLp {
    let sizes = [
        inst.bidder(Bidder::One).num_types(),
        inst.bidder(Bidder::Two).num_types(),
    ];
    let mut lp = LinearProgram::new();
    let mut p_col: [Vec<Option<usize>>; 2] = [vec![None; sizes[0]], vec![None; sizes[1]]];
    for b in Bidder::ALL {
        let spec = inst.bidder(b);
        for idx in 1..sizes[b.index()] {
            let t = TypeLabel::from_flat(idx);
            p_col[b.index()][idx] = Some(lp.add_var(&p_name(b, t), spec.prob_flat(idx), Domain::Free, None));
        }
    }
    let mut x_col: [Vec<Vec<Option<usize>>>; 2] = [
        vec![vec![None; sizes[1]]; sizes[0]],
        vec![vec![None; sizes[1]]; sizes[0]],
    ];
    for t1 in 1..sizes[0] {
        for t2 in 1..sizes[1] {
            let (l1, l2) = (TypeLabel::from_flat(t1), TypeLabel::from_flat(t2));
            let mut row = Vec::with_capacity(2);
            for b in Bidder::ALL {
                let col = lp.add_var(&x_name(b, l1, l2), Rational::zero(), Domain::NonNeg, Some(Rational::one()));
                x_col[b.index()][t1][t2] = Some(col);
                row.push((col, Rational::one()));
            }
            lp.add_constraint(&format!("feasible[{l1};{l2}]"), row, Relation::Le, Rational::one());
        }
    }

    let out = FedExLp { lp, x_col, p_col };
    let mut lp = out.lp.clone();
    for b in Bidder::ALL {
        let spec = inst.bidder(b);
        // coefficients of `value * pi(r) - p(r)`
        let utility_terms = |value: &Rational, r: usize| -> Vec<(usize, Rational)> {
            if r == 0 {
                return Vec::new();
            }
            let opp = inst.bidder(b.other());
            let mut terms = Vec::new();
            if !value.is_zero() {
                for o in 1..opp.num_types() {
                    let f = opp.prob_flat(o);
                    if !f.is_zero() {
                        terms.push((out.x_own(b, r, o), value * f));
                    }
                }
            }
            terms.push((out.p_col[b.index()][r].expect("non-null type"), -Rational::one()));
            terms
        };
        for truth in 0..sizes[b.index()] {
            let lt = TypeLabel::from_flat(truth);
            for dev in 0..sizes[b.index()] {
                let ld = TypeLabel::from_flat(dev);
                if dev == truth || (!lt.is_null() && !ld.is_null() && ld.interest > lt.interest) {
                    continue;
                }
                let value = if lt.is_null() {
                    Rational::zero()
                } else {
                    spec.value_q(lt.k)
                };
                // u(truth, dev) - u(truth, truth) <= 0
                let mut coeffs = utility_terms(&value, dev);
                coeffs.extend(
                    utility_terms(&value, truth)
                        .into_iter()
                        .map(|(c, a)| (c, -a)),
                );
                lp.add_constraint(&format!("bic{b}[{lt}->{ld}]"), coeffs, Relation::Le, Rational::zero());
            }
        }
    }
    FedExLp { lp, ..out }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct FedExSolution {
    pub value: Rational,
    pub pivots: usize,
    /// `x[i][t1][t2]` including zero rows at null types.
    pub x: [Vec<Vec<Rational>>; 2],
    /// Interim payments `p[i][t]`.
    pub p: [Vec<Rational>; 2],
}

impl FedExSolution {
    pub fn support(&self, t1: TypeLabel, t2: TypeLabel) -> Vec<Option<Bidder>> {
        let x1 = &self.x[0][t1.flat()][t2.flat()];
        let x2 = &self.x[1][t1.flat()][t2.flat()];
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

    pub fn to_doc(&self) -> SolutionDoc {
        SolutionDoc {
            value: render(&self.value),
            x: self
                .x
                .iter()
                .map(|t| t.iter().map(|row| render_all(row)).collect())
                .collect(),
            p: self.p.iter().map(|v| render_all(v)).collect(),
        }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct SolutionDoc {
    pub value: String,
    pub x: Vec<Vec<Vec<String>>>,
    pub p: Vec<Vec<String>>,
}

impl FedExLp {
    fn x_own(&self, b: Bidder, own: usize, opp: usize) -> usize {
        match b {
            Bidder::One => self.x_col[0][own][opp],
            Bidder::Two => self.x_col[1][opp][own],
        }
        .expect("non-null profile")
    }

    pub fn num_allocation_vars(&self) -> usize {
        self.x_col.iter().flatten().flatten().filter(|c| c.is_some()).count()
    }

    pub fn num_payment_vars(&self) -> usize {
        self.p_col.iter().flatten().filter(|c| c.is_some()).count()
    }

    pub fn solve(&self) -> Result<FedExSolution> {
        let sol = solve_exact(&self.lp)?;
        let read = |c: &Option<usize>| c.map_or_else(Rational::zero, |c| sol.values[c].clone());
        let x = [0, 1].map(|i| {
            self.x_col[i]
                .iter()
                .map(|row| row.iter().map(read).collect())
                .collect()
        });
        let p = [0, 1].map(|i| self.p_col[i].iter().map(read).collect());
        Ok(FedExSolution {
            value: sol.value,
            pivots: sol.pivots,
            x,
            p,
        })
    }
}

/// Optimal revenue and one optimal mechanism, refusing instances over the cap.
pub fn solve_instance(inst: &Instance) -> Result<FedExSolution> {
    let levels = inst.bidders().iter().map(|b| b.levels()).max().unwrap_or(0);
    if levels > LP_LEVEL_CAP {
        return Err(Error::BackendUnavailable(format!(
            "{levels} value levels exceed the LP cap of {LP_LEVEL_CAP}"
        )));
    }
    assemble_lp(inst).solve()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Backend {
    Lp,
    Flow,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum CertifiedKind {
    /// Ties to Bidder One under the canonical flow.
    Canonical,
    /// Careful tie-breaking at `k_star` under the modified flow.
    Modified { k_star: usize },
}

#[derive(Debug, Clone)]
pub struct Certified {
    pub kind: CertifiedKind,
    pub flow: crate::duality::Flow,
    pub eps: Rational,
    pub mechanism: Mechanism,
}

/// A mechanism together with a flow that witnesses its optimality:
/// the canonical pair when it certifies, else the modified flow with careful
/// tie-breaking.
pub fn certified_auction(inst: &Instance) -> Result<Certified> {
    let flow = canonical_flow(inst);
    let spa = spa_bidder1(inst);
    if witness_report(inst, &flow, &spa)?.passed() {
        return Ok(Certified {
            kind: CertifiedKind::Canonical,
            flow,
            eps: Rational::zero(),
            mechanism: spa,
        });
    }
    let modified = modified_flow(inst)?;
    let k_star = modified.k_star.ok_or_else(|| {
        Error::BackendUnavailable("canonical certificate failed and no boost was needed".into())
    })?;
    let careful = spa_careful(inst, k_star)?;
    let report = witness_report(inst, &modified.flow, &careful)?;
    if !report.passed() {
        return Err(Error::BackendUnavailable(format!(
            "modified flow does not certify careful tie-breaking: {}",
            report.summary()
        )));
    }
    Ok(Certified {
        kind: CertifiedKind::Modified { k_star },
        flow: modified.flow,
        eps: modified.eps,
        mechanism: careful,
    })
}

/// Outcomes with positive probability at `(t1, t2)` in a revenue-optimal
/// mechanism.
pub fn select_outcome(inst: &Instance, t1: TypeLabel, t2: TypeLabel, backend: Backend) -> Result<Vec<Option<Bidder>>> {
    for (b, t) in [(Bidder::One, t1), (Bidder::Two, t2)] {
        let max = inst.bidder(b).num_types() - 1;
        if t.flat() > max {
            return Err(Error::Index {
                index: t.flat(),
                min: 0,
                max,
            });
        }
    }
    if t1.is_null() && t2.is_null() {
        return Ok(vec![None]);
    }
    match backend {
        Backend::Lp => Ok(solve_instance(inst)?.support(t1, t2)),
        Backend::Flow => Ok(certified_auction(inst)?.mechanism.support(t1, t2)),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::numerics::{int, make_instance, ratio, BidderSpec, Interest};
    use crate::reduction::{build_instance, DisjInput};

    fn single(values: Vec<u64>, probs: Vec<Rational>) -> BidderSpec {
        BidderSpec::single_interest(values, probs)
    }

    #[test]
    fn posted_price_program() {
        let mut lp = LinearProgram::new();
        let p = lp.add_var("p", int(1), Domain::Free, None);
        lp.add_constraint("cap", vec![(p, int(1))], Relation::Le, int(9));
        assert_eq!(solve_exact(&lp).unwrap().value, int(9));
    }

    #[test]
    fn infeasible_and_unbounded() {
        let mut lp = LinearProgram::new();
        let x = lp.add_var("x", int(1), Domain::NonNeg, None);
        lp.add_constraint("low", vec![(x, int(1))], Relation::Le, int(-1));
        assert_eq!(solve_exact(&lp), Err(Error::Infeasible));

        let mut lp = LinearProgram::new();
        let x = lp.add_var("x", int(1), Domain::NonNeg, None);
        let y = lp.add_var("y", int(0), Domain::NonNeg, None);
        lp.add_constraint("diff", vec![(x, int(1)), (y, int(-1))], Relation::Le, int(1));
        assert_eq!(solve_exact(&lp), Err(Error::Unbounded));
    }

    #[test]
    fn equality_rows_use_phase_one() {
        // max x + 2y, x + y = 3, x - y <= 1, y <= 2
        let mut lp = LinearProgram::new();
        let x = lp.add_var("x", int(1), Domain::NonNeg, None);
        let y = lp.add_var("y", int(2), Domain::NonNeg, Some(int(2)));
        lp.add_constraint("sum", vec![(x, int(1)), (y, int(1))], Relation::Eq, int(3));
        lp.add_constraint("gap", vec![(x, int(1)), (y, int(-1))], Relation::Le, int(1));
        let sol = solve_exact(&lp).unwrap();
        assert_eq!(sol.value, int(5));
        assert_eq!(sol.values, vec![int(1), int(2)]);
    }

    #[test]
    fn equal_single_type_bidders() {
        let b = single(vec![5], vec![int(1)]);
        let inst = make_instance(b.clone(), b).unwrap();
        let f = assemble_lp(&inst);
        assert_eq!(f.num_allocation_vars(), 8);
        assert_eq!(f.num_payment_vars(), 4);
        assert_eq!(f.solve().unwrap().value, int(5));
    }

    #[test]
    fn two_level_single_bidder_posted_price() {
        // a value-0 opponent contributes nothing: max(5, 6 * 1/2) = 5
        let b1 = single(vec![5, 6], vec![ratio(1, 2), ratio(1, 2)]);
        let b2 = single(vec![0], vec![int(1)]);
        let inst = make_instance(b1, b2).unwrap();
        assert_eq!(solve_instance(&inst).unwrap().value, int(5));
    }

    #[test]
    fn reduction_counts() {
        let d = DisjInput::from_bits("10", "01").unwrap();
        let (inst, _) = build_instance(&d).unwrap();
        let f = assemble_lp(&inst);
        assert_eq!(f.num_allocation_vars(), 128);
        assert_eq!(f.num_payment_vars(), 16);
    }

    #[test]
    fn text_dump_lines() {
        let b = single(vec![3], vec![int(1)]);
        let inst = make_instance(b.clone(), b).unwrap();
        let f = assemble_lp(&inst);
        let text = f.lp.to_text();
        assert!(text.starts_with("maximize: + 1/1 p1[(v1,1)]"));
        assert_eq!(
            text.lines().count(),
            1 + f.lp.num_constraints() + f.lp.num_vars()
        );
    }

    #[test]
    fn null_profile_selects_nothing() {
        let d = DisjInput::from_bits("10", "01").unwrap();
        let (inst, _) = build_instance(&d).unwrap();
        let out = select_outcome(&inst, TypeLabel::null(), TypeLabel::null(), Backend::Lp).unwrap();
        assert_eq!(out, vec![None]);
        let bad = TypeLabel::new(9, Interest::Day1);
        assert!(matches!(
            select_outcome(&inst, bad, TypeLabel::null(), Backend::Lp),
            Err(Error::Index { .. })
        ));
    }

    #[test]
    fn cap_is_enforced() {
        let values: Vec<u64> = (1..=21).collect();
        let probs = vec![ratio(1, 21); 21];
        let b = single(values, probs);
        let inst = make_instance(b.clone(), b).unwrap();
        assert!(matches!(solve_instance(&inst), Err(Error::BackendUnavailable(_))));
    }
}
