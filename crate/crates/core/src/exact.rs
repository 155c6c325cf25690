//! Exact violation counting by recursive bisection.
//!
//! At each box the postcondition and its negation are decided over the box:
//! if the postcondition is unsatisfiable the box is a safe leaf contributing
//! zero; if the negation is unsatisfiable every grid point violates and the
//! box contributes its full cardinality; otherwise the box is split at the
//! widest axis and both halves are counted. Boxes at or below the leaf
//! threshold are enumerated directly, which is exact and bounds the
//! recursion depth. Both queries being UNSAT on a nonempty box is
//! impossible and asserted.

use crate::decision::{classify_box, decide, interval_bounds, BoxStatus, Budget, VerdictKind};
use crate::domain::InputDomain;
use crate::error::Result;
use crate::property::{Postcondition, VerificationInstance};
use num_bigint::BigUint;
use num_rational::BigRational;
use num_traits::{ToPrimitive, Zero};
use serde::Serialize;
use std::time::{Duration, Instant};

/// Result of an exact count.
#[derive(Debug, Clone, Serialize)]
pub struct CountReport {
    #[serde(serialize_with = "crate::exact::ser_biguint")]
    pub violations: BigUint,
    #[serde(serialize_with = "crate::exact::ser_biguint")]
    pub total: BigUint,
    /// `violations / total` as an exact rational string.
    pub violation_rate: String,
    /// Decimal rendering of the violation rate.
    pub violation_rate_decimal: f64,
    /// Leaves certified fully violating (rate 1).
    pub leaves_full: u64,
    /// Leaves certified safe (rate 0).
    pub leaves_empty: u64,
    /// Leaves decided by exhaustive enumeration.
    pub leaves_enumerated: u64,
    pub elapsed_ms: u64,
}

impl CountReport {
    pub fn rate(&self) -> BigRational {
        BigRational::new(self.violations.clone().into(), self.total.clone().into())
    }
}

/// Either a completed count or a timeout carrying what was explored.
#[derive(Debug, Clone)]
pub enum ExactOutcome {
    Counted(CountReport),
    Timeout {
        boxes_explored: u64,
        elapsed: Duration,
    },
}

impl ExactOutcome {
    pub fn report(self) -> Option<CountReport> {
        match self {
            ExactOutcome::Counted(r) => Some(r),
            ExactOutcome::Timeout { .. } => None,
        }
    }
}

pub(crate) fn ser_biguint<S: serde::Serializer>(v: &BigUint, s: S) -> std::result::Result<S::Ok, S::Error> {
    s.serialize_str(&v.to_string())
}

struct Counter<'a> {
    inst: &'a VerificationInstance,
    negated: Postcondition,
    budget: Budget,
    leaf_threshold: u64,
    boxes: u64,
    violations: BigUint,
    leaves_full: u64,
    leaves_empty: u64,
    leaves_enumerated: u64,
}

enum Step {
    Done,
    Timeout,
}

impl Counter<'_> {
    fn visit(&mut self, bx: &InputDomain) -> Result<Step> {
        self.boxes += 1;
        if self.budget_exhausted() {
            return Ok(Step::Timeout);
        }

        if bx.total_points_u64().is_some_and(|n| n <= self.leaf_threshold) {
            self.leaves_enumerated += 1;
            let mut count: u64 = 0;
            for p in bx.enumerate_points() {
                if self.inst.violates(&p)? {
                    count += 1;
                }
            }
            self.violations += BigUint::from(count);
            return Ok(Step::Done);
        }

        // one bound computation serves both the Q and the not-Q query
        let bounds = interval_bounds(&self.inst.network, bx);
        let q_unsat = match classify_box(&self.inst.post, &bounds) {
            BoxStatus::AllFalse => true,
            BoxStatus::AllTrue => false,
            BoxStatus::Unknown => {
                match self.decide_on(bx, &self.inst.post)? {
                    Some(unsat) => unsat,
                    None => return Ok(Step::Timeout),
                }
            }
        };
        if q_unsat {
            self.leaves_empty += 1;
            return Ok(Step::Done);
        }

        let nq_unsat = match classify_box(&self.negated, &bounds) {
            BoxStatus::AllFalse => true,
            BoxStatus::AllTrue => false,
            BoxStatus::Unknown => {
                let negated = self.negated.clone();
                match self.decide_on(bx, &negated)? {
                    Some(unsat) => unsat,
                    None => return Ok(Step::Timeout),
                }
            }
        };
        if nq_unsat {
            self.leaves_full += 1;
            self.violations += bx.total_points();
            return Ok(Step::Done);
        }

        let axis = bx
            .widest_splittable_axis()
            .expect("mixed box above leaf threshold must be splittable");
        let (low, high) = bx.split_equal(axis)?;
        match self.visit(&low)? {
            Step::Timeout => Ok(Step::Timeout),
            Step::Done => self.visit(&high),
        }
    }

    /// Complete decision of `post` over `bx`. Returns Some(is_unsat), or
    /// None on timeout.
    fn decide_on(&mut self, bx: &InputDomain, post: &Postcondition) -> Result<Option<bool>> {
        let sub = VerificationInstance {
            network: self.inst.network.clone(),
            domain: bx.clone(),
            post: post.clone(),
        };
        let verdict = decide(&sub, self.budget, self.leaf_threshold)?;
        self.boxes += verdict.stats.boxes_explored;
        Ok(match verdict.kind {
            VerdictKind::Sat { .. } => Some(false),
            VerdictKind::Unsat => Some(true),
            VerdictKind::Timeout => None,
        })
    }

    fn budget_exhausted(&self) -> bool {
        if let Some(limit) = self.budget.node_limit {
            if self.boxes >= limit {
                return true;
            }
        }
        if let Some(deadline) = self.budget.deadline {
            if Instant::now() >= deadline {
                return true;
            }
        }
        false
    }
}

/// Count the violation points of `inst` exactly.
pub fn count_exact(
    inst: &VerificationInstance,
    budget: Budget,
    leaf_threshold: u64,
) -> Result<ExactOutcome> {
    let started = Instant::now();
    let negated = inst.post.negate(crate::property::DEFAULT_NEGATION_TERM_LIMIT)?;
    let mut counter = Counter {
        inst,
        negated,
        budget,
        leaf_threshold,
        boxes: 0,
        violations: BigUint::zero(),
        leaves_full: 0,
        leaves_empty: 0,
        leaves_enumerated: 0,
    };
    match counter.visit(&inst.domain)? {
        Step::Timeout => Ok(ExactOutcome::Timeout {
            boxes_explored: counter.boxes,
            elapsed: started.elapsed(),
        }),
        Step::Done => {
            let total = inst.domain.total_points();
            debug_assert!(counter.violations <= total);
            let rate = BigRational::new(counter.violations.clone().into(), total.clone().into());
            Ok(ExactOutcome::Counted(CountReport {
                violation_rate: rate.to_string(),
                violation_rate_decimal: rate.to_f64().unwrap_or(f64::NAN),
                violations: counter.violations,
                total,
                leaves_full: counter.leaves_full,
                leaves_empty: counter.leaves_empty,
                leaves_enumerated: counter.leaves_enumerated,
                elapsed_ms: started.elapsed().as_millis() as u64,
            }))
        }
    }
}
