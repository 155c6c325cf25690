//! Brute-force counting by full grid enumeration.
//!
//! This is the independent reference every other counting path is tested
//! against: no bounds, no splitting, just a forward pass and a
//! postcondition evaluation per grid point.

use crate::error::{Error, Result};
use crate::exact::CountReport;
use crate::property::VerificationInstance;
use num_bigint::BigUint;
use num_rational::BigRational;
use num_traits::ToPrimitive;
use std::time::Instant;

/// Default refusal cap on enumerable grid points.
pub const DEFAULT_BRUTE_CAP: u64 = 10_000_000;

/// Count violation points by enumerating every grid point. Refuses domains
/// larger than `cap` points.
pub fn count_brute(inst: &VerificationInstance, cap: u64) -> Result<CountReport> {
    let total = inst.domain.total_points();
    if total > BigUint::from(cap) {
        return Err(Error::BudgetRefused(format!(
            "domain has {total} grid points, enumeration cap is {cap}"
        )));
    }
    let started = Instant::now();
    let mut violations = BigUint::ZERO;
    let mut run: u64 = 0;
    for p in inst.domain.enumerate_points() {
        if inst.violates(&p)? {
            run += 1;
        }
    }
    violations += BigUint::from(run);
    let rate = BigRational::new(violations.clone().into(), total.clone().into());
    Ok(CountReport {
        violation_rate: rate.to_string(),
        violation_rate_decimal: rate.to_f64().unwrap_or(f64::NAN),
        violations,
        total,
        leaves_full: 0,
        leaves_empty: 0,
        leaves_enumerated: 1,
        elapsed_ms: started.elapsed().as_millis() as u64,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::domain::InputDomain;
    use crate::network::{Activation, Layer, Network};
    use crate::property::{LinearAtom, Postcondition, Relation};
    use num_traits::Zero;

    fn constant_net(bias: f64) -> Network {
        Network::new(vec![Layer {
            weights: vec![vec![0.0]],
            biases: vec![bias],
            activation: Activation::Identity,
        }])
        .unwrap()
    }

    fn inst(bias: f64) -> VerificationInstance {
        VerificationInstance::new(
            constant_net(bias),
            InputDomain::from_bounds(&[(0.0, 1.0)], 0.1).unwrap(),
            Postcondition::atom(LinearAtom::new(vec![1.0], 0.0, Relation::Lt)),
        )
        .unwrap()
    }

    #[test]
    fn constant_positive_counts_zero() {
        assert!(count_brute(&inst(1.0), 1000).unwrap().violations.is_zero());
    }

    #[test]
    fn constant_negative_counts_all() {
        let r = count_brute(&inst(-1.0), 1000).unwrap();
        assert_eq!(r.violations, r.total);
    }

    #[test]
    fn cap_refusal() {
        assert!(matches!(count_brute(&inst(-1.0), 5), Err(Error::BudgetRefused(_))));
    }
}
