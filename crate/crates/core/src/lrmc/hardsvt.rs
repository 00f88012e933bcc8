use super::{observed_residual, relative_change, underdetermined_columns, Completion, LrmcOptions, LrmcSolver};
use crate::error::Result;
use crate::linalg::truncate_rank;
use crate::model::{DenseMatrix, ObservedMixture};

/// Iterative hard singular-value thresholding: starting from zero, repeat
/// `X ← P_r(X + (X_Ω − X)_Ω)` where `P_r` keeps the top `r` singular triplets.
#[derive(Debug, Clone, Copy, Default)]
pub struct HardSvt;

impl HardSvt {
    pub const NAME: &'static str = "hard-svt";
}

impl LrmcSolver for HardSvt {
    fn name(&self) -> &'static str {
        Self::NAME
    }

    fn complete(&self, obs: &ObservedMixture, opts: &LrmcOptions) -> Result<Completion> {
        let (d, n) = obs.shape();
        let target = obs.zero_filled().to_nalgebra();
        let mut x = nalgebra::DMatrix::<f64>::zeros(d, n);
        let mut history = Vec::new();
        let mut converged = false;
        let mut iters = 0;
        while iters < opts.max_iters {
            iters += 1;
            let mut y = x.clone();
            for i in 0..d {
                for j in 0..n {
                    if obs.mask().get(i, j) {
                        y[(i, j)] = target[(i, j)];
                    }
                }
            }
            let next = truncate_rank(&y, opts.rank);
            let change = relative_change(&next, &x);
            x = next;
            history.push(observed_residual(obs, &x).0);
            if change < opts.tol {
                converged = true;
                break;
            }
        }
        let (res, norm) = observed_residual(obs, &x);
        Ok(Completion {
            matrix: DenseMatrix::from_nalgebra(&x)?,
            converged,
            iters,
            residual: if norm > 0.0 { (res / norm).sqrt() } else { res.sqrt() },
            residual_history: history,
            ridge_used: false,
            underdetermined_columns: underdetermined_columns(obs, opts.rank),
        })
    }
}
