//! Counting input configurations of feed-forward ReLU networks that violate
//! a safety property.
//!
//! A verification instance is a triple: a network, a discretized
//! hyperrectangular input domain (the precondition), and a postcondition
//! given as a DNF of linear inequalities over the network outputs. The
//! postcondition conventionally encodes the *negation* of the desired safety
//! property, so every grid point satisfying it is a violation point.
//!
//! The crate provides:
//!
//! - [`decision`]: a sound and complete branch-and-bound decision procedure
//!   (SAT/UNSAT/timeout) backed by interval bound propagation.
//! - [`exact`]: the exact violation counter, recursive bisection driven by
//!   paired SAT queries on the postcondition and its negation.
//! - [`oracle`]: brute-force enumeration, the independent reference for every
//!   counting result.
//! - [`approx`]: the randomized approximation returning a lower bound on the
//!   violation rate that is correct with probability at least 1 - 2^(-beta*t),
//!   plus the complementary upper bound and confidence interval.
//! - [`reduction`]: the 3-CNF gadget compiler mapping model counting of a
//!   formula onto violation counting for a constructed network.

pub mod approx;
pub mod decision;
pub mod domain;
pub mod error;
pub mod exact;
pub mod network;
pub mod nnet;
pub mod oracle;
pub mod property;
pub mod reduction;

pub use approx::{confidence_interval, counting_prove, ApproxConfig, ApproxReport};
pub use decision::{decide, interval_bounds, Budget, Verdict, VerdictKind};
pub use domain::{GridAxis, InputDomain};
pub use error::Error;
pub use exact::{count_exact, CountReport};
pub use network::{Activation, Layer, Network};
pub use oracle::count_brute;
pub use property::{LinearAtom, Postcondition, Relation, VerificationInstance};

/// Crate version, echoed in every CLI report.
pub const VERSION: &str = env!("CARGO_PKG_VERSION");
