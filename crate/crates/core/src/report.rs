//! Pass/fail diagnostics shared by flow, BIC and witness certificates.

use std::fmt;

use serde::{Deserialize, Serialize};

use crate::numerics::{render, Bidder, Rational, TypeLabel};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Condition {
    /// `f(c^k) + lambda^1(k+1) + alpha(k) = lambda^1(k)`, `k < n`.
    FlowDay1,
    /// `f(c^n) + alpha(n) = lambda^1(n)`.
    FlowDay1Top,
    /// `f(d^k) + lambda^2(k+1) = alpha(k) + lambda^2(k)`, `k < n`.
    FlowDay2,
    /// `f(d^n) = alpha(n) + lambda^2(n)`.
    FlowDay2Top,
    MultiplierNonnegative,
    PaymentIdentity,
    AlphaIndifference,
    HighestVirtualValue,
    FullAllocation,
    NoAllocationBelowZero,
    Bic,
}

impl fmt::Display for Condition {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let name = match self {
            Condition::FlowDay1 => "flow-day1",
            Condition::FlowDay1Top => "flow-day1-top",
            Condition::FlowDay2 => "flow-day2",
            Condition::FlowDay2Top => "flow-day2-top",
            Condition::MultiplierNonnegative => "multiplier-nonnegative",
            Condition::PaymentIdentity => "payment-identity",
            Condition::AlphaIndifference => "alpha-indifference",
            Condition::HighestVirtualValue => "highest-virtual-value",
            Condition::FullAllocation => "full-allocation",
            Condition::NoAllocationBelowZero => "no-allocation-below-zero",
            Condition::Bic => "bic",
        };
        f.write_str(name)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub enum Location {
    Level { bidder: Bidder, k: usize },
    Type { bidder: Bidder, t: TypeLabel },
    Deviation {
        bidder: Bidder,
        truth: TypeLabel,
        report: TypeLabel,
    },
    Profile {
        t1: TypeLabel,
        t2: TypeLabel,
        winner: Option<Bidder>,
    },
}

impl Location {
    /// Value level of the location (for a profile, Bidder One's level).
    pub fn level(&self) -> usize {
        match self {
            Location::Level { k, .. } => *k,
            Location::Type { t, .. } => t.k,
            Location::Deviation { truth, .. } => truth.k,
            Location::Profile { t1, .. } => t1.k,
        }
    }
}

impl fmt::Display for Location {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Location::Level { bidder, k } => write!(f, "bidder {bidder} level {k}"),
            Location::Type { bidder, t } => write!(f, "bidder {bidder} type {t}"),
            Location::Deviation {
                bidder,
                truth,
                report,
            } => write!(f, "bidder {bidder} {truth} reports {report}"),
            Location::Profile { t1, t2, winner } => match winner {
                Some(w) => write!(f, "profile ({t1}, {t2}) bidder {w}"),
                None => write!(f, "profile ({t1}, {t2})"),
            },
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Check {
    pub condition: Condition,
    pub location: Location,
    pub lhs: Rational,
    pub rhs: Rational,
    pub passed: bool,
}

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct CertificateReport {
    pub checks: Vec<Check>,
}

impl CertificateReport {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn record(&mut self, condition: Condition, location: Location, lhs: Rational, rhs: Rational, passed: bool) {
        self.checks.push(Check {
            condition,
            location,
            lhs,
            rhs,
            passed,
        });
    }

    pub fn passed(&self) -> bool {
        self.checks.iter().all(|c| c.passed)
    }

    pub fn failures(&self) -> impl Iterator<Item = &Check> {
        self.checks.iter().filter(|c| !c.passed)
    }

    pub fn failures_of(&self, condition: Condition) -> impl Iterator<Item = &Check> {
        self.failures().filter(move |c| c.condition == condition)
    }

    pub fn absorb(&mut self, other: CertificateReport) {
        self.checks.extend(other.checks);
    }

    pub fn summary(&self) -> String {
        let failed = self.failures().count();
        match self.failures().next() {
            None => format!("{} checks passed", self.checks.len()),
            Some(first) => format!(
                "{failed}/{} checks failed; first: {} at {} ({} vs {})",
                self.checks.len(),
                first.condition,
                first.location,
                render(&first.lhs),
                render(&first.rhs)
            ),
        }
    }

    pub fn to_doc(&self) -> ReportDoc {
        ReportDoc {
            passed: self.passed(),
            checks: self
                .checks
                .iter()
                .map(|c| CheckDoc {
                    condition: c.condition.to_string(),
                    location: c.location.to_string(),
                    lhs: render(&c.lhs),
                    rhs: render(&c.rhs),
                    verdict: if c.passed { "pass" } else { "fail" }.to_string(),
                })
                .collect(),
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct CheckDoc {
    pub condition: String,
    pub location: String,
    pub lhs: String,
    pub rhs: String,
    pub verdict: String,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ReportDoc {
    pub passed: bool,
    pub checks: Vec<CheckDoc>,
}
