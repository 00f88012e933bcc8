use serde::Serialize;

use crate::error::{MmcError, Result};
use crate::patterns::{search_theorem1_partition, theorem2_min_p};
use crate::rng::derive_seed;
use crate::synth::sample_bernoulli;

/// Random partitions tried per mask after the greedy one.
pub const CAMPAIGN_SEARCH_BUDGET: usize = 8;

/// Monte-Carlo check of the sampling bound on Bernoulli masks.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Theorem2Campaign {
    pub d: usize,
    pub r: usize,
    pub eps: f64,
    pub n: usize,
    pub p: f64,
    pub trials: usize,
    /// Masks for which no passing partition was found.
    pub failures: usize,
    pub failure_rate: f64,
    /// `2(r+1)ε`.
    pub bound: f64,
    /// Trial indices that failed.
    pub failed_trials: Vec<usize>,
}

impl Theorem2Campaign {
    pub fn within_bound(&self) -> bool {
        self.failure_rate <= self.bound
    }
}

/// Samples `trials` masks of size `d × (r+1)(d−r+1)` at the minimal
/// sampling rate and searches each for a passing partition. Mask `t`
/// uses seed `derive_seed(seed, [t, 0])`, its search `derive_seed(seed, [t, 1])`.
pub fn run_theorem2_campaign(d: usize, r: usize, eps: f64, trials: usize, seed: u64) -> Result<Theorem2Campaign> {
    let bound = theorem2_min_p(d, r, eps)?;
    if bound.vacuous {
        return Err(MmcError::Precondition(format!(
            "required sampling rate {:.4} exceeds 1 at d = {d}, epsilon = {eps}; increase d or epsilon",
            bound.p
        )));
    }
    if trials == 0 {
        return Err(MmcError::InvalidParameter("trials must be positive".into()));
    }
    let n = (r + 1) * (d - r + 1);
    let mut failed_trials = Vec::new();
    for t in 0..trials {
        let mask = sample_bernoulli(d, n, bound.p, derive_seed(seed, &[t as u64, 0]))?;
        let passed = match search_theorem1_partition(&mask, r, CAMPAIGN_SEARCH_BUDGET, derive_seed(seed, &[t as u64, 1])) {
            Ok(report) => report.passed(),
            Err(MmcError::Precondition(_)) => false,
            Err(e) => return Err(e),
        };
        if !passed {
            failed_trials.push(t);
        }
    }
    let failures = failed_trials.len();
    Ok(Theorem2Campaign {
        d,
        r,
        eps,
        n,
        p: bound.p,
        trials,
        failures,
        failure_rate: failures as f64 / trials as f64,
        bound: 2.0 * (r + 1) as f64 * eps,
        failed_trials,
    })
}
