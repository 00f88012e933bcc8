//! Small dense linear-algebra helpers on top of nalgebra.

use faer::Mat;
use nalgebra::{DMatrix, DVector};

use crate::model::DenseMatrix;

/// Ridge added to normal equations that fail to factor.
pub const RIDGE: f64 = 1e-10;

/// Thin SVD with singular values sorted in descending order.
pub struct SortedSvd {
    pub u: DMatrix<f64>,
    pub singular_values: Vec<f64>,
    pub v_t: DMatrix<f64>,
}

pub fn sorted_svd(m: &DMatrix<f64>) -> SortedSvd {
    let (rows, cols) = m.shape();
    let k = rows.min(cols);
    if k == 0 {
        return SortedSvd {
            u: DMatrix::zeros(rows, 0),
            singular_values: Vec::new(),
            v_t: DMatrix::zeros(0, cols),
        };
    }
    let svd = to_faer(m).thin_svd().expect("SVD of a finite matrix");
    let s = svd.S().column_vector();
    let (u, v) = (svd.U(), svd.V());
    let mut order: Vec<usize> = (0..k).collect();
    order.sort_by(|&a, &b| s[b].total_cmp(&s[a]).then(a.cmp(&b)));
    SortedSvd {
        u: DMatrix::from_fn(rows, k, |i, j| u[(i, order[j])]),
        singular_values: order.iter().map(|&j| s[j]).collect(),
        v_t: DMatrix::from_fn(k, cols, |i, j| v[(j, order[i])]),
    }
}

fn to_faer(m: &DMatrix<f64>) -> Mat<f64> {
    Mat::from_fn(m.nrows(), m.ncols(), |i, j| m[(i, j)])
}

/// Singular values in descending order.
pub fn singular_values(m: &DMatrix<f64>) -> Vec<f64> {
    if m.is_empty() {
        return Vec::new();
    }
    let mut s = to_faer(m).singular_values().expect("SVD of a finite matrix");
    s.sort_by(|a, b| b.total_cmp(a));
    s
}

/// Number of singular values above `rel_tol · σ₁`.
pub fn numerical_rank(x: &DenseMatrix, rel_tol: f64) -> usize {
    let s = singular_values(&x.to_nalgebra());
    match s.first() {
        Some(&top) if top > 0.0 => s.iter().filter(|&&v| v > rel_tol * top).count(),
        _ => 0,
    }
}

/// Best rank-`r` approximation.
pub fn truncate_rank(m: &DMatrix<f64>, r: usize) -> DMatrix<f64> {
    let svd = sorted_svd(m);
    let r = r.min(svd.singular_values.len());
    let mut out = DMatrix::zeros(m.nrows(), m.ncols());
    for k in 0..r {
        let s = svd.singular_values[k];
        if s == 0.0 {
            break;
        }
        out += (svd.u.column(k) * s) * svd.v_t.row(k);
    }
    out
}

/// Orthonormal basis of the column span via thin QR.
pub fn orthonormalize(m: &DMatrix<f64>) -> DMatrix<f64> {
    m.clone().qr().q()
}

/// Solves `G x = b` for symmetric positive (semi)definite `G`.
/// Returns `(x, ridge_used)`; a ridge of [`RIDGE`] times the scale of `G` is
/// added when the plain Cholesky factorization fails or is ill conditioned.
pub fn solve_spd(g: &DMatrix<f64>, b: &DVector<f64>) -> (DVector<f64>, bool) {
    if let Some(ch) = g.clone().cholesky() {
        let l = ch.l_dirty();
        let (mut lo, mut hi) = (f64::INFINITY, 0.0f64);
        for i in 0..g.nrows() {
            lo = lo.min(l[(i, i)].abs());
            hi = hi.max(l[(i, i)].abs());
        }
        if lo > 1e-7 * hi {
            return (ch.solve(b), false);
        }
    }
    let scale = (0..g.nrows()).map(|i| g[(i, i)]).fold(0.0f64, f64::max).max(1.0);
    let mut reg = g.clone();
    for i in 0..g.nrows() {
        reg[(i, i)] += RIDGE * scale;
    }
    let x = match reg.clone().cholesky() {
        Some(ch) => ch.solve(b),
        None => pseudo_solve(&reg, b),
    };
    (x, true)
}

fn pseudo_solve(g: &DMatrix<f64>, b: &DVector<f64>) -> DVector<f64> {
    let svd = sorted_svd(g);
    let cutoff = 1e-14 * svd.singular_values.first().copied().unwrap_or(0.0);
    let mut x = DVector::zeros(g.ncols());
    for (k, &s) in svd.singular_values.iter().enumerate() {
        if s > cutoff {
            let coef = svd.u.column(k).dot(b) / s;
            x += svd.v_t.row(k).transpose() * coef;
        }
    }
    x
}

/// In-place Cholesky solve of a small dense `r×r` system stored row-major.
///
/// `g` is overwritten with its factor and `b` with the solution. Returns
/// `true` when the ridge fallback was needed.
pub fn solve_spd_small(g: &mut [f64], b: &mut [f64], r: usize) -> bool {
    debug_assert_eq!(g.len(), r * r);
    debug_assert_eq!(b.len(), r);
    let scale = (0..r).map(|i| g[i * r + i]).fold(0.0f64, f64::max);
    if scale <= 0.0 {
        b.iter_mut().for_each(|v| *v = 0.0);
        return true;
    }
    let original: Vec<f64> = g.to_vec();
    if cholesky_in_place(g, r, scale) {
        forward_back(g, b, r);
        return false;
    }
    g.copy_from_slice(&original);
    for i in 0..r {
        g[i * r + i] += RIDGE * scale.max(1.0);
    }
    if !cholesky_in_place(g, r, 0.0) {
        b.iter_mut().for_each(|v| *v = 0.0);
        return true;
    }
    forward_back(g, b, r);
    true
}

/// Lower Cholesky factor in place; fails when a pivot drops below
/// `1e-14 · scale` (relative breakdown) or is not positive.
fn cholesky_in_place(g: &mut [f64], r: usize, scale: f64) -> bool {
    for j in 0..r {
        let mut diag = g[j * r + j];
        for k in 0..j {
            diag -= g[j * r + k] * g[j * r + k];
        }
        if diag <= 1e-14 * scale || diag <= 0.0 {
            return false;
        }
        let ljj = diag.sqrt();
        g[j * r + j] = ljj;
        for i in j + 1..r {
            let mut v = g[i * r + j];
            for k in 0..j {
                v -= g[i * r + k] * g[j * r + k];
            }
            g[i * r + j] = v / ljj;
        }
    }
    true
}

fn forward_back(l: &[f64], b: &mut [f64], r: usize) {
    for i in 0..r {
        let mut v = b[i];
        for k in 0..i {
            v -= l[i * r + k] * b[k];
        }
        b[i] = v / l[i * r + i];
    }
    for i in (0..r).rev() {
        let mut v = b[i];
        for k in i + 1..r {
            v -= l[k * r + i] * b[k];
        }
        b[i] = v / l[i * r + i];
    }
}

/// Accumulates the normal equations `AᵀA`, `Aᵀx` for the rows of `a`
/// (each of length `r`) selected by `rows`.
pub fn normal_equations<'a>(
    rows: impl Iterator<Item = (&'a [f64], f64)>,
    r: usize,
    gram: &mut [f64],
    rhs: &mut [f64],
) {
    gram.iter_mut().for_each(|v| *v = 0.0);
    rhs.iter_mut().for_each(|v| *v = 0.0);
    for (a, x) in rows {
        for p in 0..r {
            let ap = a[p];
            rhs[p] += ap * x;
            for q in 0..=p {
                gram[p * r + q] += ap * a[q];
            }
        }
    }
    for p in 0..r {
        for q in p + 1..r {
            gram[p * r + q] = gram[q * r + p];
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn svd_reconstructs_rank_deficient_products() {
        for seed in 0..6 {
            let x = crate::synth::gaussian_low_rank(60, 40, 3, seed, 0).to_nalgebra();
            let svd = sorted_svd(&x);
            let s = DMatrix::from_diagonal(&DVector::from_vec(svd.singular_values.clone()));
            let back = &svd.u * s * &svd.v_t;
            assert!((back - &x).amax() < 1e-10 * x.amax(), "seed {seed}");
            let id = svd.u.transpose() * &svd.u;
            assert!((id - DMatrix::identity(40, 40)).amax() < 1e-12);
            assert!(svd.singular_values[3] < 1e-12 * svd.singular_values[0]);
            assert_eq!(singular_values(&x).len(), 40);
        }
    }

    #[test]
    fn small_solver_matches_nalgebra() {
        let a = DMatrix::from_row_slice(4, 3, &[1.0, 2.0, 0.5, -1.0, 0.3, 2.0, 0.0, 1.0, 1.0, 4.0, -2.0, 0.1]);
        let x = DVector::from_vec(vec![1.0, -2.0, 0.5, 3.0]);
        let g = a.transpose() * &a;
        let b = a.transpose() * &x;
        let expected = g.clone().cholesky().unwrap().solve(&b);
        let mut gs: Vec<f64> = (0..9).map(|k| g[(k / 3, k % 3)]).collect();
        let mut bs: Vec<f64> = b.iter().copied().collect();
        assert!(!solve_spd_small(&mut gs, &mut bs, 3));
        for (u, v) in bs.iter().zip(expected.iter()) {
            assert!((u - v).abs() < 1e-12);
        }
        let mut gram = vec![0.0; 9];
        let mut rhs = vec![0.0; 3];
        let rows: Vec<Vec<f64>> = (0..4).map(|i| a.row(i).iter().copied().collect()).collect();
        normal_equations(rows.iter().map(|r| r.as_slice()).zip(x.iter().copied()), 3, &mut gram, &mut rhs);
        for k in 0..9 {
            assert!((gram[k] - g[(k / 3, k % 3)]).abs() < 1e-12);
        }
    }

    #[test]
    fn small_solver_ridges_singular_systems() {
        let mut g = vec![1.0, 1.0, 1.0, 1.0];
        let mut b = vec![2.0, 2.0];
        assert!(solve_spd_small(&mut g, &mut b, 2));
        assert!((b[0] + b[1] - 2.0).abs() < 1e-6);
    }

    #[test]
    fn svd_is_sorted_and_reconstructs() {
        let m = DMatrix::from_row_slice(3, 2, &[1.0, 0.0, 0.0, 5.0, 0.0, 0.0]);
        let svd = sorted_svd(&m);
        assert_eq!(svd.singular_values.len(), 2);
        assert!((svd.singular_values[0] - 5.0).abs() < 1e-12);
        let back = &svd.u * DMatrix::from_diagonal(&DVector::from_vec(svd.singular_values.clone())) * &svd.v_t;
        assert!((back - m).norm() < 1e-12);
    }

    #[test]
    fn truncation_drops_small_directions() {
        let m = DMatrix::from_row_slice(2, 2, &[3.0, 0.0, 0.0, 1.0]);
        let t = truncate_rank(&m, 1);
        assert!((t - DMatrix::from_row_slice(2, 2, &[3.0, 0.0, 0.0, 0.0])).norm() < 1e-12);
    }

    #[test]
    fn singular_system_falls_back_to_ridge() {
        let g = DMatrix::from_row_slice(2, 2, &[1.0, 1.0, 1.0, 1.0]);
        let b = DVector::from_vec(vec![2.0, 2.0]);
        let (x, ridge) = solve_spd(&g, &b);
        assert!(ridge);
        assert!((&g * x - b).norm() < 1e-6);
    }
}
