use nalgebra::DMatrix;
use rand::seq::index::sample;

use crate::error::{MmcError, Result};
use crate::linalg::{normal_equations, solve_spd_small, RIDGE};
use crate::model::DenseMatrix;
use crate::rng::substream;

/// Steps between full refactorizations of the downdated inverse Gram.
const REFRESH_EVERY: usize = 32;
/// Removal candidates with `1 − h_i` below this would leave the basis rank deficient.
const LEVERAGE_FLOOR: f64 = 1e-10;

/// Stopping rule and restart count for [`erase`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ErasureParams {
    pub tol: f64,
    pub min_keep: usize,
    pub restarts: usize,
    pub seed: u64,
}

/// Result of one erasure run.
#[derive(Debug, Clone, PartialEq)]
pub struct Erasure {
    /// Retained positions into the input vector, ascending.
    pub kept: Vec<usize>,
    /// `(‖x_υ‖ − ‖P_υ x_υ‖) / ‖x_υ‖` on the retained set.
    pub relative_gap: f64,
    pub removed: usize,
}

/// Greedy erasure: repeatedly drops the coordinate whose removal most
/// shrinks `‖x_υ‖ − ‖P_υ x_υ‖`, until the relative gap is at most `tol`
/// or only `max(r, min_keep)` coordinates remain.
///
/// `basis` holds the rows of the subspace basis at the observed positions
/// of `x`. Ties go to the lowest position. With `restarts > 0` the search
/// is repeated from random subsets of half the coordinates, and the
/// largest retained set that meets `tol` wins.
pub fn erase(x: &[f64], basis: &DenseMatrix, params: &ErasureParams) -> Result<Erasure> {
    let m = x.len();
    let r = basis.cols();
    if basis.rows() != m {
        return Err(MmcError::Shape(format!(
            "basis has {} rows for a vector of length {m}",
            basis.rows()
        )));
    }
    if m < r {
        return Err(MmcError::Precondition(format!(
            "cannot erase: {m} observations for rank {r}"
        )));
    }
    let floor = r.max(params.min_keep);
    let mut best = greedy(x, basis.as_slice(), r, (0..m).collect(), params.tol, floor);
    for attempt in 0..params.restarts {
        let size = m.div_ceil(2);
        if size <= floor {
            break;
        }
        let mut rng = substream(params.seed, &[attempt as u64]);
        let mut start = sample(&mut rng, m, size).into_vec();
        start.sort_unstable();
        let candidate = greedy(x, basis.as_slice(), r, start, params.tol, floor);
        if better(&candidate, &best, params.tol) {
            best = candidate;
        }
    }
    Ok(best)
}

fn better(a: &Erasure, b: &Erasure, tol: f64) -> bool {
    match (a.relative_gap <= tol, b.relative_gap <= tol) {
        (true, false) => true,
        (false, true) => false,
        (true, true) => a.kept.len() > b.kept.len(),
        (false, false) => a.relative_gap < b.relative_gap,
    }
}

fn relative_gap(rss: f64, xx: f64) -> f64 {
    if xx <= 0.0 {
        return 0.0;
    }
    let norm = xx.sqrt();
    let proj = (xx - rss).max(0.0).sqrt();
    rss.max(0.0) / (norm * (norm + proj))
}

/// Least-squares state over the active rows: inverse Gram `g`, coefficients,
/// residuals `e` and leverages `h` (indexed by position).
struct Fit<'a> {
    a: &'a [f64],
    x: &'a [f64],
    r: usize,
    g: Vec<f64>,
    theta: Vec<f64>,
    e: Vec<f64>,
    h: Vec<f64>,
}

impl<'a> Fit<'a> {
    fn new(a: &'a [f64], x: &'a [f64], r: usize) -> Self {
        let m = x.len();
        Fit {
            a,
            x,
            r,
            g: vec![0.0; r * r],
            theta: vec![0.0; r],
            e: vec![0.0; m],
            h: vec![0.0; m],
        }
    }

    fn row(&self, i: usize) -> &'a [f64] {
        &self.a[i * self.r..(i + 1) * self.r]
    }

    fn refresh(&mut self, active: &[usize]) {
        let r = self.r;
        let mut gram = DMatrix::<f64>::zeros(r, r);
        let mut rhs = vec![0.0; r];
        for &i in active {
            let ai = self.row(i);
            for p in 0..r {
                rhs[p] += ai[p] * self.x[i];
                for q in 0..=p {
                    gram[(p, q)] += ai[p] * ai[q];
                }
            }
        }
        for p in 0..r {
            for q in p + 1..r {
                gram[(p, q)] = gram[(q, p)];
            }
        }
        let inv = match gram.clone().cholesky() {
            Some(ch) => ch.inverse(),
            None => {
                let scale = (0..r).map(|p| gram[(p, p)]).fold(1.0f64, f64::max);
                let mut reg = gram;
                for p in 0..r {
                    reg[(p, p)] += RIDGE * scale;
                }
                reg.cholesky().map(|c| c.inverse()).unwrap_or_else(|| DMatrix::zeros(r, r))
            }
        };
        for p in 0..r {
            for q in 0..r {
                self.g[p * r + q] = inv[(p, q)];
            }
        }
        for p in 0..r {
            self.theta[p] = (0..r).map(|q| self.g[p * r + q] * rhs[q]).sum();
        }
        for &i in active {
            let ai = self.row(i);
            let fit: f64 = ai.iter().zip(&self.theta).map(|(u, t)| u * t).sum();
            self.e[i] = self.x[i] - fit;
            let mut lev = 0.0;
            for p in 0..r {
                let gp: f64 = (0..r).map(|q| self.g[p * r + q] * ai[q]).sum();
                lev += ai[p] * gp;
            }
            self.h[i] = lev;
        }
    }

    /// Rank-one downdate after removing row `i`; returns `1 − h_i`.
    fn remove(&mut self, i: usize, active: &[usize]) -> f64 {
        let r = self.r;
        let ai = self.row(i);
        let w: Vec<f64> = (0..r)
            .map(|p| (0..r).map(|q| self.g[p * r + q] * ai[q]).sum())
            .collect();
        let den = 1.0 - self.h[i];
        let ei = self.e[i];
        for p in 0..r {
            for q in 0..r {
                self.g[p * r + q] += w[p] * w[q] / den;
            }
            self.theta[p] -= w[p] * ei / den;
        }
        for &j in active {
            let c: f64 = self.row(j).iter().zip(&w).map(|(u, v)| u * v).sum();
            self.e[j] += c * ei / den;
            self.h[j] += c * c / den;
        }
        den
    }
}

fn greedy(x: &[f64], a: &[f64], r: usize, mut active: Vec<usize>, tol: f64, floor: usize) -> Erasure {
    let mut fit = Fit::new(a, x, r);
    fit.refresh(&active);
    let mut since_refresh = 0;
    let mut removed = 0;
    loop {
        let xx: f64 = active.iter().map(|&i| x[i] * x[i]).sum();
        let rss: f64 = active.iter().map(|&i| fit.e[i] * fit.e[i]).sum();
        let gap = relative_gap(rss, xx);
        if gap <= tol || active.len() <= floor {
            return Erasure {
                kept: active,
                relative_gap: gap,
                removed,
            };
        }
        let mut pick: Option<(usize, f64)> = None;
        for (pos, &i) in active.iter().enumerate() {
            let den = 1.0 - fit.h[i];
            if den < LEVERAGE_FLOOR {
                continue;
            }
            let rss_i = (rss - fit.e[i] * fit.e[i] / den).max(0.0);
            let xx_i = xx - x[i] * x[i];
            let value = if xx_i <= 0.0 {
                0.0
            } else {
                rss_i / (xx_i.sqrt() + (xx_i - rss_i).max(0.0).sqrt())
            };
            if pick.is_none_or(|(_, v)| value < v) {
                pick = Some((pos, value));
            }
        }
        let Some((pos, _)) = pick else {
            return Erasure {
                kept: active,
                relative_gap: gap,
                removed,
            };
        };
        let i = active.remove(pos);
        removed += 1;
        let den = fit.remove(i, &active);
        since_refresh += 1;
        if since_refresh >= REFRESH_EVERY || den < 1e-8 {
            fit.refresh(&active);
            since_refresh = 0;
        }
    }
}

/// Least-squares coefficients `(UᵀU)⁻¹ Uᵀ x` for a basis restricted to the
/// rows of `x`. Returns the coefficients and whether the ridge fallback was
/// needed.
pub fn estimate_coefficient(basis: &DenseMatrix, x: &[f64]) -> Result<(Vec<f64>, bool)> {
    let r = basis.cols();
    if basis.rows() != x.len() {
        return Err(MmcError::Shape(format!(
            "basis has {} rows for a vector of length {}",
            basis.rows(),
            x.len()
        )));
    }
    if x.len() < r {
        return Err(MmcError::Precondition(format!(
            "{} entries cannot determine {r} coefficients",
            x.len()
        )));
    }
    let mut gram = vec![0.0; r * r];
    let mut theta = vec![0.0; r];
    normal_equations(
        (0..x.len()).map(|i| (basis.row(i), x[i])),
        r,
        &mut gram,
        &mut theta,
    );
    let ridge = solve_spd_small(&mut gram, &mut theta, r);
    Ok((theta, ridge))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::substream;
    use crate::synth::{gaussian_matrix, random_orthonormal};
    use rand::Rng;

    fn params(tol: f64) -> ErasureParams {
        ErasureParams {
            tol,
            min_keep: 0,
            restarts: 0,
            seed: 0,
        }
    }

    fn gap_of(x: &[f64], basis: &DenseMatrix, keep: &[usize]) -> f64 {
        let sub = basis.select_rows(keep).unwrap();
        let xs: Vec<f64> = keep.iter().map(|&i| x[i]).collect();
        let (theta, _) = estimate_coefficient(&sub, &xs).unwrap();
        let mut rss = 0.0;
        for (row, v) in xs.iter().enumerate() {
            let fit: f64 = sub.row(row).iter().zip(&theta).map(|(a, b)| a * b).sum();
            rss += (v - fit).powi(2);
        }
        let xx: f64 = xs.iter().map(|v| v * v).sum();
        xx.sqrt() - (xx - rss).max(0.0).sqrt()
    }

    #[test]
    fn removes_the_outlier_first() {
        let basis = DenseMatrix::from_fn(6, 1, |_, _| 1.0 / 6f64.sqrt()).unwrap();
        let x = [1.0, 1.0, 1.0, 1.0, 1.0, 9.0];
        // Brute force over the six single removals.
        let all: Vec<usize> = (0..6).collect();
        let gaps: Vec<f64> = (0..6)
            .map(|i| {
                let keep: Vec<usize> = all.iter().copied().filter(|&j| j != i).collect();
                gap_of(&x, &basis, &keep)
            })
            .collect();
        let argmin = (0..6).min_by(|&a, &b| gaps[a].total_cmp(&gaps[b])).unwrap();
        assert_eq!(argmin, 5);
        let out = erase(&x, &basis, &params(1e-9)).unwrap();
        assert_eq!(out.kept, vec![0, 1, 2, 3, 4]);
        assert_eq!(out.removed, 1);
    }

    #[test]
    fn vector_in_span_is_kept_whole() {
        let mut rng = substream(1, &[]);
        let u = DenseMatrix::from_nalgebra(&random_orthonormal(20, 3, &mut rng)).unwrap();
        let theta = [0.3, -1.2, 2.0];
        let x: Vec<f64> = (0..20)
            .map(|i| u.row(i).iter().zip(&theta).map(|(a, b)| a * b).sum())
            .collect();
        let out = erase(&x, &u, &params(1e-9)).unwrap();
        assert_eq!(out.kept.len(), 20);
        let (est, ridge) = estimate_coefficient(&u, &x).unwrap();
        assert!(!ridge);
        for (a, b) in est.iter().zip(&theta) {
            assert!((a - b).abs() < 1e-10);
        }
    }

    #[test]
    fn square_system_returns_immediately() {
        let mut rng = substream(2, &[]);
        let u = DenseMatrix::from_nalgebra(&gaussian_matrix(3, 3, &mut rng)).unwrap();
        let x = [1.0, -2.0, 0.5];
        let out = erase(&x, &u, &params(1e-9)).unwrap();
        assert_eq!(out.kept, vec![0, 1, 2]);
        let (theta, _) = estimate_coefficient(&u, &x).unwrap();
        for i in 0..3 {
            let fit: f64 = u.row(i).iter().zip(&theta).map(|(a, b)| a * b).sum();
            assert!((fit - x[i]).abs() < 1e-10);
        }
        let short = DenseMatrix::from_fn(2, 3, |i, j| u.get(i, j)).unwrap();
        assert!(erase(&x[..2], &short, &params(1e-9)).is_err());
    }

    #[test]
    fn fast_path_matches_direct_refits() {
        // Mixed column: half the entries from another subspace.
        let mut rng = substream(3, &[]);
        let (m, r) = (80, 4);
        let u = DenseMatrix::from_nalgebra(&random_orthonormal(m, r, &mut rng)).unwrap();
        let other = gaussian_matrix(m, 1, &mut rng);
        let theta: Vec<f64> = (0..r).map(|_| rng.random::<f64>() * 2.0 - 1.0).collect();
        let x: Vec<f64> = (0..m)
            .map(|i| {
                if i % 2 == 0 {
                    u.row(i).iter().zip(&theta).map(|(a, b)| a * b).sum()
                } else {
                    other[(i, 0)]
                }
            })
            .collect();
        let out = erase(&x, &u, &params(1e-9)).unwrap();
        assert!(out.relative_gap <= 1e-9);
        let direct = gap_of(&x, &u, &out.kept);
        let xx: f64 = out.kept.iter().map(|&i| x[i] * x[i]).sum();
        assert!(direct / xx.sqrt() <= 1e-8);
        assert!(out.kept.iter().all(|i| i % 2 == 0), "{:?}", out.kept);
        assert!(out.kept.len() >= 36);
    }

    #[test]
    fn min_keep_bounds_removal() {
        let basis = DenseMatrix::from_fn(6, 1, |_, _| 1.0 / 6f64.sqrt()).unwrap();
        let x = [1.0, 2.0, 3.0, 4.0, 5.0, 6.0];
        let out = erase(
            &x,
            &basis,
            &ErasureParams {
                min_keep: 4,
                ..params(1e-12)
            },
        )
        .unwrap();
        assert_eq!(out.kept.len(), 4);
        assert!(out.relative_gap > 1e-12);
    }

    #[test]
    fn restarts_never_worsen_the_result() {
        let mut rng = substream(4, &[]);
        let (m, r) = (30, 2);
        let u = DenseMatrix::from_nalgebra(&random_orthonormal(m, r, &mut rng)).unwrap();
        let x: Vec<f64> = (0..m).map(|_| rng.random::<f64>()).collect();
        let base = erase(&x, &u, &params(1e-9)).unwrap();
        let more = erase(
            &x,
            &u,
            &ErasureParams {
                restarts: 5,
                ..params(1e-9)
            },
        )
        .unwrap();
        assert!(more.kept.len() >= base.kept.len());
        assert!(more.relative_gap <= 1e-9);
    }

    #[test]
    fn coefficient_is_least_squares_optimal() {
        let mut rng = substream(5, &[]);
        let (m, r) = (25, 3);
        let u = DenseMatrix::from_nalgebra(&gaussian_matrix(m, r, &mut rng)).unwrap();
        let x: Vec<f64> = (0..m).map(|_| rng.random::<f64>() * 4.0 - 2.0).collect();
        let rss = |t: &[f64]| -> f64 {
            (0..m)
                .map(|i| (x[i] - u.row(i).iter().zip(t).map(|(a, b)| a * b).sum::<f64>()).powi(2))
                .sum()
        };
        let (theta, _) = estimate_coefficient(&u, &x).unwrap();
        let best = rss(&theta);
        for _ in 0..100 {
            let cand: Vec<f64> = theta.iter().map(|t| t + rng.random::<f64>() - 0.5).collect();
            assert!(best <= rss(&cand));
        }
    }
}
