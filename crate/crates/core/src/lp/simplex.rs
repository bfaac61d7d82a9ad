//! Sparse-row tableau primal simplex over exact rationals.
//!
//! Pricing is Dantzig's largest reduced cost; after a run of degenerate
//! pivots it switches to Bland's lowest-index rule until the objective
//! strictly improves. The ratio test breaks ties by lowest basic column.

use std::collections::HashMap;

use num_traits::{Signed, Zero};

use super::{Domain, LinearProgram, LpSolution, Relation};
use crate::error::{Error, Result};
use crate::numerics::Rational;

/// Degenerate pivots tolerated before falling back to Bland's rule.
const DEGENERATE_STREAK: usize = 32;

/// How an original variable maps onto internal columns.
#[derive(Debug, Clone)]
enum Column {
    Fixed(Rational),
    Shifted(usize),
    Split(usize, usize),
}

struct Row {
    coeffs: Vec<(usize, Rational)>,
    relation: Relation,
    rhs: Rational,
}

/// Sparse row sorted by column.
type SparseRow = Vec<(usize, Rational)>;

fn entry(row: &SparseRow, c: usize) -> Option<&Rational> {
    row.binary_search_by_key(&c, |(j, _)| *j)
        .ok()
        .map(|pos| &row[pos].1)
}

/// `row - factor * pivot`, dropping cancelled entries.
fn axpy(row: &SparseRow, factor: &Rational, pivot: &SparseRow) -> SparseRow {
    let mut out = Vec::with_capacity(row.len() + pivot.len());
    let (mut a, mut b) = (row.iter().peekable(), pivot.iter().peekable());
    loop {
        match (a.peek(), b.peek()) {
            (Some((ja, va)), Some((jb, vb))) => {
                if ja < jb {
                    out.push((*ja, va.clone()));
                    a.next();
                } else if jb < ja {
                    out.push((*jb, -(factor * vb)));
                    b.next();
                } else {
                    let v = va - factor * vb;
                    if !v.is_zero() {
                        out.push((*ja, v));
                    }
                    a.next();
                    b.next();
                }
            }
            (Some((ja, va)), None) => {
                out.push((*ja, va.clone()));
                a.next();
            }
            (None, Some((jb, vb))) => {
                out.push((*jb, -(factor * vb)));
                b.next();
            }
            (None, None) => break,
        }
    }
    out
}

struct Tableau {
    rows: Vec<SparseRow>,
    rhs: Vec<Rational>,
    basis: Vec<usize>,
    /// Reduced costs `c_j - z_j`; a column may enter when positive.
    cost: Vec<Rational>,
    value: Rational,
    /// Columns allowed to enter.
    eligible: Vec<bool>,
    pivots: usize,
}

impl Tableau {
    fn pivot(&mut self, r: usize, c: usize) {
        let inv = entry(&self.rows[r], c).expect("pivot entry is nonzero").recip();
        for (_, a) in self.rows[r].iter_mut() {
            *a *= &inv;
        }
        self.rhs[r] *= &inv;
        let pivot_row = std::mem::take(&mut self.rows[r]);
        let pivot_rhs = self.rhs[r].clone();
        for i in 0..self.rows.len() {
            if i == r {
                continue;
            }
            let Some(factor) = entry(&self.rows[i], c).cloned() else {
                continue;
            };
            self.rows[i] = axpy(&self.rows[i], &factor, &pivot_row);
            self.rhs[i] -= &factor * &pivot_rhs;
        }
        if !self.cost[c].is_zero() {
            let factor = self.cost[c].clone();
            for (j, a) in &pivot_row {
                self.cost[*j] -= &factor * a;
            }
            self.value += &factor * &pivot_rhs;
        }
        self.rows[r] = pivot_row;
        self.basis[r] = c;
        self.pivots += 1;
    }

    fn entering(&self, bland: bool) -> Option<usize> {
        let mut best: Option<usize> = None;
        for (j, d) in self.cost.iter().enumerate() {
            if !self.eligible[j] || !d.is_positive() {
                continue;
            }
            if bland {
                return Some(j);
            }
            if best.map_or(true, |b| d > &self.cost[b]) {
                best = Some(j);
            }
        }
        best
    }

    fn leaving(&self, c: usize) -> Option<usize> {
        let mut best: Option<(usize, Rational)> = None;
        for (i, row) in self.rows.iter().enumerate() {
            let Some(a) = entry(row, c) else { continue };
            if !a.is_positive() {
                continue;
            }
            let ratio = &self.rhs[i] / a;
            let better = match &best {
                None => true,
                Some((b, r)) => ratio < *r || (ratio == *r && self.basis[i] < self.basis[*b]),
            };
            if better {
                best = Some((i, ratio));
            }
        }
        best.map(|(i, _)| i)
    }

    /// Runs to optimality for the current cost row.
    fn optimize(&mut self) -> Result<()> {
        let mut streak = 0;
        loop {
            let Some(c) = self.entering(streak >= DEGENERATE_STREAK) else {
                return Ok(());
            };
            let Some(r) = self.leaving(c) else {
                return Err(Error::Unbounded);
            };
            let degenerate = self.rhs[r].is_zero();
            self.pivot(r, c);
            streak = if degenerate { streak + 1 } else { 0 };
        }
    }

    /// Rebuilds the reduced-cost row for objective `c` over the current basis.
    fn price(&mut self, c: &[Rational]) {
        self.cost = c.to_vec();
        self.value = Rational::zero();
        for (i, &b) in self.basis.iter().enumerate() {
            if c[b].is_zero() {
                continue;
            }
            let cb = c[b].clone();
            for (j, a) in &self.rows[i] {
                self.cost[*j] -= &cb * a;
            }
            self.value += &cb * &self.rhs[i];
        }
    }
}

/// Presolved internal problem: maximize `objective . y` with `y >= 0`.
struct Internal {
    columns: Vec<Column>,
    objective: Vec<Rational>,
    rows: Vec<Row>,
}

fn presolve(lp: &LinearProgram) -> Internal {
    let nvars = lp.num_vars();
    let mut uses: Vec<Vec<usize>> = vec![Vec::new(); nvars];
    for (r, con) in lp.constraints.iter().enumerate() {
        for &(j, _) in &con.coeffs {
            uses[j].push(r);
        }
    }
    let mut dropped = vec![false; lp.constraints.len()];

    // a free variable with a singleton row `a x <= 0`, `a < 0`, is nonnegative
    let mut nonneg = vec![false; nvars];
    for j in 0..nvars {
        nonneg[j] = lp.domains[j] == Domain::NonNeg;
        if nonneg[j] {
            continue;
        }
        for &r in &uses[j] {
            let con = &lp.constraints[r];
            if con.relation == Relation::Le
                && con.rhs.is_zero()
                && con.coeffs.len() == 1
                && con.coeffs[0].1.is_negative()
            {
                nonneg[j] = true;
                dropped[r] = true;
            }
        }
    }

    // a zero-cost column entering only `<=` rows with nonnegative
    // coefficients can sit at zero in some optimum
    let mut fixed = vec![false; nvars];
    for j in 0..nvars {
        if !nonneg[j] || lp.objective[j].is_positive() {
            continue;
        }
        let dominated = uses[j].iter().all(|&r| {
            let con = &lp.constraints[r];
            dropped[r]
                || (con.relation == Relation::Le
                    && con.coeffs.iter().all(|(v, a)| *v != j || !a.is_negative()))
        });
        if dominated {
            fixed[j] = true;
        }
    }

    let mut columns = Vec::with_capacity(nvars);
    let mut objective = Vec::new();
    for j in 0..nvars {
        if fixed[j] {
            columns.push(Column::Fixed(Rational::zero()));
        } else if nonneg[j] {
            columns.push(Column::Shifted(objective.len()));
            objective.push(lp.objective[j].clone());
        } else {
            let pos = objective.len();
            columns.push(Column::Split(pos, pos + 1));
            objective.push(lp.objective[j].clone());
            objective.push(-lp.objective[j].clone());
        }
    }

    let translate = |coeffs: &[(usize, Rational)]| -> Vec<(usize, Rational)> {
        let mut out: Vec<(usize, Rational)> = Vec::new();
        for (j, a) in coeffs {
            match &columns[*j] {
                Column::Fixed(_) => {}
                Column::Shifted(c) => out.push((*c, a.clone())),
                Column::Split(p, m) => {
                    out.push((*p, a.clone()));
                    out.push((*m, -a.clone()));
                }
            }
        }
        out.retain(|(_, a)| !a.is_zero());
        out
    };

    let mut rows: Vec<Row> = lp
        .constraints
        .iter()
        .zip(&dropped)
        .filter(|(_, d)| !**d)
        .map(|(con, _)| Row {
            coeffs: translate(&con.coeffs),
            relation: con.relation,
            rhs: con.rhs.clone(),
        })
        .collect();

    // upper bounds not implied by a nonnegative `<=` row become rows
    let internal_nonneg_row = |row: &Row| -> bool {
        row.relation == Relation::Le
            && !row.rhs.is_negative()
            && row.coeffs.iter().all(|(_, a)| !a.is_negative())
    };
    let mut implied: HashMap<usize, Rational> = HashMap::new();
    for row in rows.iter().filter(|r| internal_nonneg_row(r)) {
        for (c, a) in &row.coeffs {
            let bound = &row.rhs / a;
            let entry = implied.entry(*c).or_insert_with(|| bound.clone());
            if bound < *entry {
                *entry = bound;
            }
        }
    }
    for j in 0..nvars {
        let Some(upper) = &lp.upper[j] else { continue };
        match &columns[j] {
            Column::Fixed(_) => {}
            Column::Shifted(c) => {
                if implied.get(c).map_or(true, |b| b > upper) {
                    rows.push(Row {
                        coeffs: vec![(*c, Rational::from_integer(1.into()))],
                        relation: Relation::Le,
                        rhs: upper.clone(),
                    });
                }
            }
            Column::Split(p, m) => rows.push(Row {
                coeffs: vec![
                    (*p, Rational::from_integer(1.into())),
                    (*m, Rational::from_integer((-1).into())),
                ],
                relation: Relation::Le,
                rhs: upper.clone(),
            }),
        }
    }

    Internal {
        columns,
        objective,
        rows,
    }
}

/// Exact optimum of `lp` (a maximization) and one optimal vertex.
pub fn solve_exact(lp: &LinearProgram) -> Result<LpSolution> {
    let internal = presolve(lp);
    let n = internal.objective.len();
    let m = internal.rows.len();

    // slack per `<=` row, artificial per row whose slack cannot start basic
    let mut needs_artificial = Vec::with_capacity(m);
    let mut slack_of = Vec::with_capacity(m);
    let mut next = n;
    for row in &internal.rows {
        if row.relation == Relation::Le {
            slack_of.push(Some(next));
            next += 1;
        } else {
            slack_of.push(None);
        }
        needs_artificial.push(row.relation == Relation::Eq || row.rhs.is_negative());
    }
    let first_artificial = next;
    let width = first_artificial + needs_artificial.iter().filter(|a| **a).count();

    let mut tab = Tableau {
        rows: Vec::with_capacity(m),
        rhs: Vec::with_capacity(m),
        basis: Vec::with_capacity(m),
        cost: Vec::new(),
        value: Rational::zero(),
        eligible: vec![true; width],
        pivots: 0,
    };
    let mut art = first_artificial;
    for (i, row) in internal.rows.iter().enumerate() {
        let mut sparse: SparseRow = row.coeffs.clone();
        sparse.sort_by_key(|(c, _)| *c);
        let mut rhs = row.rhs.clone();
        if let Some(s) = slack_of[i] {
            sparse.push((s, Rational::from_integer(1.into())));
        }
        if rhs.is_negative() {
            for (_, a) in sparse.iter_mut() {
                *a = -a.clone();
            }
            rhs = -rhs;
        }
        if needs_artificial[i] {
            sparse.push((art, Rational::from_integer(1.into())));
            tab.basis.push(art);
            art += 1;
        } else {
            tab.basis.push(slack_of[i].expect("slack-basic rows are <= rows"));
        }
        tab.rows.push(sparse);
        tab.rhs.push(rhs);
    }

    if width > first_artificial {
        let mut phase1 = vec![Rational::zero(); width];
        for c in phase1.iter_mut().skip(first_artificial) {
            *c = Rational::from_integer((-1).into());
        }
        tab.price(&phase1);
        tab.optimize()?;
        if tab.value.is_negative() {
            return Err(Error::Infeasible);
        }
        // drive zero-valued artificials out of the basis; drop redundant rows
        let mut i = 0;
        while i < tab.rows.len() {
            if tab.basis[i] >= first_artificial {
                match tab.rows[i].iter().map(|(j, _)| *j).find(|&j| j < first_artificial) {
                    Some(j) => tab.pivot(i, j),
                    None => {
                        tab.rows.remove(i);
                        tab.rhs.remove(i);
                        tab.basis.remove(i);
                        continue;
                    }
                }
            }
            i += 1;
        }
        for e in tab.eligible.iter_mut().skip(first_artificial) {
            *e = false;
        }
    }

    let mut phase2 = vec![Rational::zero(); width];
    phase2[..n].clone_from_slice(&internal.objective);
    tab.price(&phase2);
    tab.optimize()?;

    let mut y = vec![Rational::zero(); width];
    for (i, &b) in tab.basis.iter().enumerate() {
        y[b] = tab.rhs[i].clone();
    }
    let values: Vec<Rational> = internal
        .columns
        .iter()
        .map(|col| match col {
            Column::Fixed(v) => v.clone(),
            Column::Shifted(c) => y[*c].clone(),
            Column::Split(p, m) => &y[*p] - &y[*m],
        })
        .collect();
    let value = lp
        .objective
        .iter()
        .zip(&values)
        .map(|(c, v)| c * v)
        .fold(Rational::zero(), |acc, t| acc + t);
    Ok(LpSolution {
        value,
        values,
        pivots: tab.pivots,
    })
}
