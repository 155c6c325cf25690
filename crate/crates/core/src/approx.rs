//! Randomized approximate counting with provable probabilistic bounds.
//!
//! Each of `t` independent iterations repeatedly halves the domain: sample
//! violation points, split the current box near their median on a
//! cyclically chosen axis, keep one side uniformly at random (recording the
//! kept fraction alpha), until the exact counter finishes within its time
//! budget on the remaining leaf. The iteration's estimate is
//! `2^(s - beta) * leaf_rate * prod(alpha_i)`; the minimum over iterations
//! is a correct lower bound on the true violation rate with probability at
//! least `1 - 2^(-beta * t)`, whatever the splitting heuristic does.
//! Running the same procedure on the negated postcondition lower-bounds the
//! safe rate, whose complement is an upper bound on the violation rate.

use crate::decision::Budget;
use crate::domain::{InputDomain, Split};
use crate::error::{Error, Result};
use crate::exact::{count_exact, CountReport, ExactOutcome};
use crate::property::VerificationInstance;
use num_rational::BigRational;
use num_traits::{One, ToPrimitive};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha12Rng;
use rayon::prelude::*;
use serde::Serialize;
use std::time::{Duration, Instant};

/// Number of preliminary median splits performed before the first exact
/// count attempt. `Auto` resolves to `floor(log2 N) - 1` for a domain of
/// `N` grid points.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum PrelimSplits {
    Auto,
    Fixed(u64),
}

impl PrelimSplits {
    pub fn resolve(self, domain: &InputDomain) -> u64 {
        match self {
            PrelimSplits::Fixed(k) => k,
            PrelimSplits::Auto => domain.total_points().bits().saturating_sub(2),
        }
    }
}

/// Where to place the split point. The probabilistic bound does not depend
/// on this choice; only the tightness of the estimate does.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum SplitStrategy {
    /// Split at the median coordinate of sampled violation points
    /// (grid midpoint when no violations are found).
    MedianOfViolations,
    /// Always split at a fixed fraction of the axis range. Exists to
    /// exercise the heuristic-independence of the bound under a
    /// deliberately unbalanced splitter.
    FixedFraction(f64),
}

#[derive(Debug, Clone, Serialize)]
pub struct ApproxConfig {
    /// Error tolerance factor beta > 0; each iteration overestimates the
    /// true rate with probability below 2^(-beta).
    pub beta: f64,
    /// Number of iterations t.
    pub iterations: u64,
    /// Violation points sampled per split (m).
    pub samples_per_split: u64,
    /// Maximum uniform draws per split while hunting for those m points.
    pub sample_budget: u64,
    pub prelim_splits: PrelimSplits,
    /// Per-leaf exact-count time budget; a timeout triggers one more split.
    pub exact_time_limit: Duration,
    pub leaf_threshold: u64,
    pub seed: u64,
    pub strategy: SplitStrategy,
}

impl ApproxConfig {
    pub fn new(beta: f64, iterations: u64, samples_per_split: u64, seed: u64) -> ApproxConfig {
        ApproxConfig {
            beta,
            iterations,
            samples_per_split,
            sample_budget: samples_per_split.saturating_mul(10),
            prelim_splits: PrelimSplits::Auto,
            exact_time_limit: Duration::from_secs(1),
            leaf_threshold: crate::decision::DEFAULT_LEAF_THRESHOLD,
            seed,
            strategy: SplitStrategy::MedianOfViolations,
        }
    }

    fn validate(&self) -> Result<()> {
        if self.beta.is_nan() || self.beta <= 0.0 {
            return Err(Error::InvalidConfig(format!("beta must be > 0, got {}", self.beta)));
        }
        if self.iterations == 0 {
            return Err(Error::InvalidConfig("iterations must be >= 1".into()));
        }
        if self.samples_per_split == 0 {
            return Err(Error::InvalidConfig("samples_per_split must be >= 1".into()));
        }
        if let SplitStrategy::FixedFraction(f) = self.strategy {
            if !(0.0 < f && f < 1.0) {
                return Err(Error::InvalidConfig(format!("split fraction {f} outside (0,1)")));
            }
        }
        Ok(())
    }

    /// Confidence that the returned bound is correct: `1 - 2^(-beta * t)`.
    pub fn confidence(&self) -> f64 {
        1.0 - (-self.beta * self.iterations as f64).exp2()
    }
}

/// Everything one iteration did, sufficient to audit its estimate.
#[derive(Debug, Clone, Serialize)]
pub struct IterationTrace {
    pub iteration: u64,
    /// Number of splits performed.
    pub s: u64,
    /// Kept-side fraction of each split, exact.
    pub alphas: Vec<String>,
    /// Random side choices, one character per split ('0' = low side).
    pub sides: String,
    /// Grid points of the final leaf.
    pub leaf_points: String,
    pub leaf_violations: String,
    /// Exact leaf violation rate.
    pub leaf_vr: f64,
    pub leaf_vr_rational: String,
    /// Unclamped estimate 2^(s-beta) * leaf_vr * prod(alphas).
    pub vr_raw: f64,
    /// Estimate clamped into [0, 1].
    pub vr: f64,
    pub clamped: bool,
}

#[derive(Debug, Clone, Serialize)]
pub struct ApproxReport {
    /// Probabilistic lower bound on the violation rate.
    pub lower_bound: f64,
    /// Present after a confidence-interval run: `1 - SR lower bound`.
    pub upper_bound: Option<f64>,
    /// Per-bound confidence `1 - 2^(-beta t)`.
    pub confidence: f64,
    /// Conservative joint confidence for the interval by union bound:
    /// `1 - 2 * 2^(-beta t)`.
    pub confidence_union_bound: Option<f64>,
    pub interval_size: Option<f64>,
    /// True when `upper < lower` had to be repaired.
    pub interval_clamped: bool,
    pub config: ApproxConfig,
    pub traces: Vec<IterationTrace>,
    /// Traces of the safe-rate run backing the upper bound.
    pub safe_rate_traces: Option<Vec<IterationTrace>>,
    pub elapsed_ms: u64,
}

/// Draw uniform grid points from `bx`, keeping violations, until `m` are
/// found or `budget` draws are consumed. An empty result is a valid
/// outcome handled by the split fallback.
pub fn sample_violations<R: Rng>(
    inst: &VerificationInstance,
    bx: &InputDomain,
    m: u64,
    budget: u64,
    rng: &mut R,
) -> Result<Vec<Vec<f64>>> {
    let mut kept = Vec::new();
    for _ in 0..budget {
        if kept.len() as u64 >= m {
            break;
        }
        let p = bx.sample_point(rng);
        if inst.violates(&p)? {
            kept.push(p);
        }
    }
    Ok(kept)
}

/// Split `axis` at the median of the samples' coordinates (lower median on
/// even counts); with no samples, split at the axis' middle grid index.
pub fn median_split(bx: &InputDomain, axis: usize, samples: &[Vec<f64>]) -> Result<Split> {
    let value = if samples.is_empty() {
        let a = &bx.axes()[axis];
        a.coord((a.index_lo() + a.index_hi()) / 2)
    } else {
        let mut coords: Vec<f64> = samples.iter().map(|p| p[axis]).collect();
        coords.sort_by(|a, b| a.partial_cmp(b).unwrap());
        coords[(coords.len() - 1) / 2]
    };
    bx.split_at_value(axis, value)
}

fn iteration_rng(seed: u64, iteration: u64) -> ChaCha12Rng {
    // splitmix64 over (seed, iteration) gives independent streams that are
    // identical whether iterations run sequentially or in parallel
    let mut z = seed ^ iteration.wrapping_mul(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    ChaCha12Rng::seed_from_u64(z ^ (z >> 31))
}

fn resolve_prelim(cfg: &ApproxConfig, domain: &InputDomain) -> u64 {
    cfg.prelim_splits.resolve(domain)
}

struct IterationState {
    bx: InputDomain,
    axis_cursor: usize,
    alphas: Vec<BigRational>,
    sides: String,
}

impl IterationState {
    /// One median split with a uniformly random side kept. Returns false
    /// when no axis can be split (single-point box).
    fn split_once(
        &mut self,
        inst: &VerificationInstance,
        cfg: &ApproxConfig,
        rng: &mut ChaCha12Rng,
    ) -> Result<bool> {
        let Some(axis) = self.bx.next_splittable_axis(self.axis_cursor) else {
            return Ok(false);
        };
        self.axis_cursor = (axis + 1) % self.bx.dim();
        let split = match cfg.strategy {
            SplitStrategy::MedianOfViolations => {
                let samples = sample_violations(
                    inst,
                    &self.bx,
                    cfg.samples_per_split,
                    cfg.sample_budget,
                    rng,
                )?;
                median_split(&self.bx, axis, &samples)?
            }
            SplitStrategy::FixedFraction(frac) => {
                let a = &self.bx.axes()[axis];
                self.bx.split_at_value(axis, a.lo() + frac * (a.hi() - a.lo()))?
            }
        };
        let take_high = rng.random_bool(0.5);
        self.sides.push(if take_high { '1' } else { '0' });
        let (kept, alpha) = if take_high {
            (split.high, split.alpha_high)
        } else {
            (split.low, split.alpha_low)
        };
        self.bx = kept;
        self.alphas.push(alpha);
        Ok(true)
    }
}

fn run_iteration(
    inst: &VerificationInstance,
    cfg: &ApproxConfig,
    prelim: u64,
    iteration: u64,
) -> Result<IterationTrace> {
    let mut rng = iteration_rng(cfg.seed, iteration);
    let mut state = IterationState {
        bx: inst.domain.clone(),
        axis_cursor: 0,
        alphas: Vec::new(),
        sides: String::new(),
    };

    for _ in 0..prelim {
        if !state.split_once(inst, cfg, &mut rng)? {
            break;
        }
    }

    let leaf: CountReport = loop {
        let leaf_inst = VerificationInstance {
            network: inst.network.clone(),
            domain: state.bx.clone(),
            post: inst.post.clone(),
        };
        let budget = Budget {
            deadline: Some(Instant::now() + cfg.exact_time_limit),
            node_limit: None,
        };
        match count_exact(&leaf_inst, budget, cfg.leaf_threshold)? {
            ExactOutcome::Counted(report) => break report,
            ExactOutcome::Timeout { .. } => {
                if !state.split_once(inst, cfg, &mut rng)? {
                    // single-point box; enumeration cannot time out
                    break count_exact(&leaf_inst, Budget::UNLIMITED, cfg.leaf_threshold)?
                        .report()
                        .expect("single-point exact count is immediate");
                }
            }
        }
    };

    let s = state.alphas.len() as u64;
    let total = inst.domain.total_points();
    // leaf_points = total * prod(alphas) exactly, so the rational part of
    // the estimator telescopes to 2^s * leaf_violations / total
    debug_assert_eq!(
        BigRational::from(num_bigint::BigInt::from(leaf.total.clone())),
        state
            .alphas
            .iter()
            .fold(BigRational::one(), |acc, a| acc * a)
            * BigRational::from(num_bigint::BigInt::from(total.clone()))
    );
    let scaled = BigRational::new(
        num_bigint::BigInt::from(leaf.violations.clone() << s),
        num_bigint::BigInt::from(total),
    );
    let vr_raw = scaled.to_f64().unwrap_or(f64::INFINITY) * (-cfg.beta).exp2();
    let vr = vr_raw.clamp(0.0, 1.0);

    let leaf_rate = leaf.rate();
    Ok(IterationTrace {
        iteration,
        s,
        alphas: state.alphas.iter().map(|a| a.to_string()).collect(),
        sides: state.sides,
        leaf_points: leaf.total.to_string(),
        leaf_violations: leaf.violations.to_string(),
        leaf_vr: leaf_rate.to_f64().unwrap_or(f64::NAN),
        leaf_vr_rational: leaf_rate.to_string(),
        vr_raw,
        vr,
        clamped: vr != vr_raw,
    })
}

/// Run the full randomized lower-bound procedure.
pub fn counting_prove(inst: &VerificationInstance, cfg: &ApproxConfig) -> Result<ApproxReport> {
    cfg.validate()?;
    let started = Instant::now();
    let prelim = resolve_prelim(cfg, &inst.domain);
    let traces: Vec<IterationTrace> = (0..cfg.iterations)
        .into_par_iter()
        .map(|i| run_iteration(inst, cfg, prelim, i))
        .collect::<Result<_>>()?;
    let lower_bound = traces.iter().map(|t| t.vr).fold(1.0_f64, f64::min);
    Ok(ApproxReport {
        lower_bound,
        upper_bound: None,
        confidence: cfg.confidence(),
        confidence_union_bound: None,
        interval_size: None,
        interval_clamped: false,
        config: cfg.clone(),
        traces,
        safe_rate_traces: None,
        elapsed_ms: started.elapsed().as_millis() as u64,
    })
}

/// Lower bound from the postcondition plus upper bound from the negated
/// postcondition, each correct with probability `1 - 2^(-beta t)`.
pub fn confidence_interval(inst: &VerificationInstance, cfg: &ApproxConfig) -> Result<ApproxReport> {
    cfg.validate()?;
    let started = Instant::now();
    let lower_run = counting_prove(inst, cfg)?;

    let negated = inst.negated(crate::property::DEFAULT_NEGATION_TERM_LIMIT)?;
    let mut sr_cfg = cfg.clone();
    // independent stream for the safe-rate run
    sr_cfg.seed = cfg.seed ^ 0xA5A5_5A5A_0F0F_F0F0;
    let sr_run = counting_prove(&negated, &sr_cfg)?;

    let lower = lower_run.lower_bound;
    let mut upper = 1.0 - sr_run.lower_bound;
    let interval_clamped = upper < lower;
    if interval_clamped {
        upper = lower;
    }
    let per_bound_miss = (-cfg.beta * cfg.iterations as f64).exp2();
    Ok(ApproxReport {
        lower_bound: lower,
        upper_bound: Some(upper),
        confidence: cfg.confidence(),
        confidence_union_bound: Some(1.0 - 2.0 * per_bound_miss),
        interval_size: Some(upper - lower),
        interval_clamped,
        config: cfg.clone(),
        traces: lower_run.traces,
        safe_rate_traces: Some(sr_run.traces),
        elapsed_ms: started.elapsed().as_millis() as u64,
    })
}
