use itertools::Itertools;

use crate::error::{MmcError, Result};
use crate::model::{AssignmentMasks, DenseMatrix};

/// Largest `K` for which matching enumerates every permutation.
pub const MAX_EXACT_K: usize = 6;

/// Component alignment between ground truth and estimates.
#[derive(Debug, Clone, PartialEq)]
pub struct Matching {
    /// `permutation[k]` is the estimate matched to truth `k`.
    pub permutation: Vec<usize>,
    /// `‖X^k − X̂^{π(k)}‖_F / ‖X^k‖_F` per truth component.
    pub errors: Vec<f64>,
    /// Produced by the greedy matcher rather than full enumeration.
    pub approximate: bool,
}

impl Matching {
    pub fn max_error(&self) -> f64 {
        self.errors.iter().copied().fold(0.0, f64::max)
    }
}

fn error_table(truth: &[DenseMatrix], estimates: &[DenseMatrix]) -> Result<Vec<Vec<f64>>> {
    if truth.is_empty() || truth.len() != estimates.len() {
        return Err(MmcError::Shape(format!(
            "{} truth components vs {} estimates",
            truth.len(),
            estimates.len()
        )));
    }
    truth
        .iter()
        .map(|t| estimates.iter().map(|e| t.relative_error(e)).collect())
        .collect()
}

/// Permutation minimizing the largest normalized error, then the total;
/// the first in lexicographic order wins remaining ties.
pub fn match_and_score(truth: &[DenseMatrix], estimates: &[DenseMatrix]) -> Result<Matching> {
    let k = truth.len();
    if k > MAX_EXACT_K {
        return Err(MmcError::InvalidParameter(format!(
            "exact matching supports K <= {MAX_EXACT_K}, got {k}; use match_greedy"
        )));
    }
    let table = error_table(truth, estimates)?;
    let mut best: Option<(f64, f64, Vec<usize>)> = None;
    for perm in (0..k).permutations(k) {
        let errs = perm.iter().enumerate().map(|(t, &e)| table[t][e]);
        let worst = errs.clone().fold(0.0, f64::max);
        let total: f64 = errs.sum();
        let better = match &best {
            None => true,
            Some((w, s, _)) => worst < *w || (worst == *w && total < *s),
        };
        if better {
            best = Some((worst, total, perm));
        }
    }
    let (_, _, permutation) = best.expect("at least one permutation");
    let errors = permutation.iter().enumerate().map(|(t, &e)| table[t][e]).collect();
    Ok(Matching {
        permutation,
        errors,
        approximate: false,
    })
}

/// Repeatedly pairs the closest remaining truth and estimate.
pub fn match_greedy(truth: &[DenseMatrix], estimates: &[DenseMatrix]) -> Result<Matching> {
    let table = error_table(truth, estimates)?;
    let k = truth.len();
    let mut permutation = vec![usize::MAX; k];
    let mut used = vec![false; k];
    for _ in 0..k {
        let (t, e) = (0..k)
            .filter(|&t| permutation[t] == usize::MAX)
            .cartesian_product((0..k).filter(|&e| !used[e]))
            .min_by(|a, b| table[a.0][a.1].total_cmp(&table[b.0][b.1]))
            .expect("unmatched pair remains");
        permutation[t] = e;
        used[e] = true;
    }
    let errors = permutation.iter().enumerate().map(|(t, &e)| table[t][e]).collect();
    Ok(Matching {
        permutation,
        errors,
        approximate: true,
    })
}

/// Exact matching up to [`MAX_EXACT_K`], greedy beyond.
pub fn match_components(truth: &[DenseMatrix], estimates: &[DenseMatrix]) -> Result<Matching> {
    if truth.len() <= MAX_EXACT_K {
        match_and_score(truth, estimates)
    } else {
        match_greedy(truth, estimates)
    }
}

/// Fraction of distinguishable entries given the wrong label.
///
/// Only entries labelled in `truth` where the components differ count;
/// `values[k]` is component `k` and `permutation` maps truth labels to
/// estimated ones. Entries left unlabelled by `estimate` count as wrong.
/// `None` when no entry is distinguishable.
pub fn classification_error(
    truth: &AssignmentMasks,
    estimate: &AssignmentMasks,
    values: &[DenseMatrix],
    permutation: &[usize],
) -> Result<Option<f64>> {
    let k = truth.k();
    if estimate.shape() != truth.shape() || values.len() != k || permutation.len() != k {
        return Err(MmcError::Shape("classification inputs disagree".into()));
    }
    let (d, n) = truth.shape();
    let t_labels = truth.labels();
    let e_labels = estimate.labels();
    let (mut counted, mut wrong) = (0usize, 0usize);
    for i in 0..d {
        for j in 0..n {
            let t = t_labels[i * n + j];
            if t == 0 {
                continue;
            }
            let v = values[0].get(i, j);
            if values.iter().all(|x| x.get(i, j) == v) {
                continue;
            }
            counted += 1;
            if e_labels[i * n + j] as usize != permutation[t as usize - 1] + 1 {
                wrong += 1;
            }
        }
    }
    Ok((counted > 0).then(|| wrong as f64 / counted as f64))
}
