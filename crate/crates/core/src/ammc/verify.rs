use crate::error::{MmcError, Result};
use crate::linalg::singular_values;
use crate::model::{AssignmentMasks, DenseMatrix, ObservedMixture};

/// Relative size of `σ_{r+1}` below which a candidate counts as rank `r`.
pub const RANK_TOL: f64 = 1e-8;
/// Absolute agreement required between an observed entry and a candidate.
pub const MATCH_TOL: f64 = 1e-9;

#[derive(Debug, Clone, PartialEq)]
pub struct MixtureCheck {
    pub agrees: bool,
    /// Lowest matching candidate per observed entry, when every entry matches.
    pub assignment: Option<AssignmentMasks>,
    /// Per candidate: rank at most `r`.
    pub low_rank: Vec<bool>,
    /// Observed entries matched by no candidate.
    pub unmatched: Vec<(usize, usize)>,
}

/// Whether `candidates` explain `obs`: each has rank at most `r` and every
/// observed entry equals at least one candidate's entry.
pub fn verify_mixture(candidates: &[DenseMatrix], obs: &ObservedMixture, r: usize) -> Result<MixtureCheck> {
    if candidates.is_empty() || candidates.len() > u8::MAX as usize {
        return Err(MmcError::InvalidParameter(format!(
            "need 1..=255 candidates, got {}",
            candidates.len()
        )));
    }
    let (d, n) = obs.shape();
    for c in candidates {
        if c.shape() != (d, n) {
            return Err(MmcError::Shape(format!(
                "candidate {:?} vs observations {:?}",
                c.shape(),
                (d, n)
            )));
        }
    }
    let low_rank: Vec<bool> = candidates
        .iter()
        .map(|c| {
            let s = singular_values(&c.to_nalgebra());
            s.get(r).is_none_or(|&next| next < RANK_TOL * s[0])
        })
        .collect();
    let mut labels = vec![0u8; d * n];
    let mut unmatched = Vec::new();
    for i in 0..d {
        for j in 0..n {
            let Some(v) = obs.get(i, j) else { continue };
            match candidates.iter().position(|c| (c.get(i, j) - v).abs() <= MATCH_TOL) {
                Some(k) => labels[i * n + j] = k as u8 + 1,
                None => unmatched.push((i, j)),
            }
        }
    }
    let agrees = unmatched.is_empty() && low_rank.iter().all(|&b| b);
    let assignment = if agrees {
        Some(AssignmentMasks::from_labels(d, n, &labels, candidates.len())?)
    } else {
        None
    };
    Ok(MixtureCheck {
        agrees,
        assignment,
        low_rank,
        unmatched,
    })
}
