use rayon::prelude::*;

use super::{leading_subspace, underdetermined_columns, Completion, LrmcOptions, LrmcSolver};
use crate::error::Result;
use crate::linalg::{normal_equations, solve_spd_small};
use crate::model::{DenseMatrix, ObservedMixture};

/// Alternating least squares over the observed entries: `X = U Θ`, solving
/// for every column of `Θ` with `U` fixed and then for every row of `U`
/// with `Θ` fixed. `U` starts at the leading subspace of the zero-filled
/// observations.
#[derive(Debug, Clone, Copy, Default)]
pub struct AltMin;

impl AltMin {
    pub const NAME: &'static str = "alt-min";
}

impl LrmcSolver for AltMin {
    fn name(&self) -> &'static str {
        Self::NAME
    }

    fn complete(&self, obs: &ObservedMixture, opts: &LrmcOptions) -> Result<Completion> {
        let (d, n) = obs.shape();
        let r = opts.rank;
        let col_rows: Vec<Vec<usize>> = (0..n).map(|j| obs.observed_rows(j)).collect();
        let row_cols: Vec<Vec<usize>> = (0..d)
            .map(|i| (0..n).filter(|&j| obs.mask().get(i, j)).collect())
            .collect();
        let vals = obs.zero_filled();

        let init = leading_subspace(vals, r)?.basis;
        let mut u: Vec<f64> = init.into_vec();
        let mut theta = vec![0.0; n * r];
        let mut x_prev: Option<Vec<f64>> = None;
        let mut ridge_used = false;
        let mut history = Vec::new();
        let mut converged = false;
        let mut iters = 0;
        let mut x = vec![0.0; d * n];

        while iters < opts.max_iters {
            iters += 1;
            let ridge_theta: bool = theta
                .par_chunks_mut(r)
                .enumerate()
                .map(|(j, th)| {
                    let mut gram = vec![0.0; r * r];
                    normal_equations(
                        col_rows[j].iter().map(|&i| (&u[i * r..(i + 1) * r], vals.get(i, j))),
                        r,
                        &mut gram,
                        th,
                    );
                    solve_spd_small(&mut gram, th, r)
                })
                .reduce(|| false, |a, b| a | b);
            let ridge_u: bool = u
                .par_chunks_mut(r)
                .enumerate()
                .map(|(i, ui)| {
                    let mut gram = vec![0.0; r * r];
                    normal_equations(
                        row_cols[i].iter().map(|&j| (&theta[j * r..(j + 1) * r], vals.get(i, j))),
                        r,
                        &mut gram,
                        ui,
                    );
                    solve_spd_small(&mut gram, ui, r)
                })
                .reduce(|| false, |a, b| a | b);
            ridge_used |= ridge_theta | ridge_u;

            x.par_chunks_mut(n).enumerate().for_each(|(i, row)| {
                let ui = &u[i * r..(i + 1) * r];
                for (j, slot) in row.iter_mut().enumerate() {
                    let th = &theta[j * r..(j + 1) * r];
                    *slot = ui.iter().zip(th).map(|(a, b)| a * b).sum();
                }
            });

            let mut res = 0.0;
            for (j, rows) in col_rows.iter().enumerate() {
                for &i in rows {
                    res += (x[i * n + j] - vals.get(i, j)).powi(2);
                }
            }
            history.push(res);

            if let Some(prev) = &x_prev {
                let diff: f64 = x.iter().zip(prev).map(|(a, b)| (a - b).powi(2)).sum::<f64>().sqrt();
                let base: f64 = prev.iter().map(|v| v * v).sum::<f64>().sqrt();
                let change = if base > 0.0 { diff / base } else { diff };
                if change < opts.tol {
                    converged = true;
                    break;
                }
            }
            match &mut x_prev {
                Some(prev) => prev.copy_from_slice(&x),
                None => x_prev = Some(x.clone()),
            }
        }

        let norm: f64 = col_rows
            .iter()
            .enumerate()
            .flat_map(|(j, rows)| rows.iter().map(move |&i| (i, j)))
            .map(|(i, j)| vals.get(i, j).powi(2))
            .sum();
        let last = history.last().copied().unwrap_or(0.0);
        Ok(Completion {
            matrix: DenseMatrix::new(d, n, x)?,
            converged,
            iters,
            residual: if norm > 0.0 { (last / norm).sqrt() } else { last.sqrt() },
            residual_history: history,
            ridge_used,
            underdetermined_columns: underdetermined_columns(obs, r),
        })
    }
}
