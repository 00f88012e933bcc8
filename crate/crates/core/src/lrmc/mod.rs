//! Low-rank matrix completion backends.
//!
//! Each backend implements [`LrmcSolver`] and is registered under a name;
//! [`complete_lowrank`] looks the backend up from [`LrmcOptions::method`].

mod altmin;
mod hardsvt;

pub use altmin::AltMin;
pub use hardsvt::HardSvt;

use nalgebra::DMatrix;

use crate::error::{MmcError, Result};
use crate::linalg::sorted_svd;
use crate::model::{DenseMatrix, ObservedMixture};

#[derive(Debug, Clone, PartialEq)]
pub struct LrmcOptions {
    /// Registered backend name, see [`solver_names`].
    pub method: String,
    pub rank: usize,
    pub max_iters: usize,
    /// Stop once `‖X_t − X_{t−1}‖_F / ‖X_{t−1}‖_F` drops below this.
    pub tol: f64,
    /// Seed for randomized backends. The built-in ones are deterministic.
    pub seed: u64,
}

impl LrmcOptions {
    pub fn new(rank: usize) -> Self {
        Self {
            method: AltMin::NAME.to_owned(),
            rank,
            max_iters: 500,
            tol: 1e-12,
            seed: 0,
        }
    }

    pub fn with_method(mut self, method: &str) -> Self {
        self.method = method.to_owned();
        self
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.tol > 0.0) {
            return Err(MmcError::InvalidParameter("tol must be positive".into()));
        }
        if self.max_iters == 0 {
            return Err(MmcError::InvalidParameter("max_iters must be at least 1".into()));
        }
        if self.rank == 0 {
            return Err(MmcError::InvalidParameter("rank must be at least 1".into()));
        }
        Ok(())
    }
}

/// Output of a completion run.
#[derive(Debug, Clone, PartialEq)]
pub struct Completion {
    pub matrix: DenseMatrix,
    pub converged: bool,
    pub iters: usize,
    /// `‖(X̂ − X)_Ω‖_F / ‖X_Ω‖_F` at exit.
    pub residual: f64,
    /// Squared observed-entry residual after each iteration.
    pub residual_history: Vec<f64>,
    /// A normal-equation solve needed the ridge fallback.
    pub ridge_used: bool,
    /// Columns observed on fewer than `rank + 1` entries.
    pub underdetermined_columns: Vec<usize>,
}

pub trait LrmcSolver: Send + Sync {
    fn name(&self) -> &'static str;
    fn complete(&self, obs: &ObservedMixture, opts: &LrmcOptions) -> Result<Completion>;
}

static SOLVERS: [&dyn LrmcSolver; 2] = [&AltMin, &HardSvt];

pub fn solvers() -> &'static [&'static dyn LrmcSolver] {
    &SOLVERS
}

pub fn solver_names() -> Vec<&'static str> {
    SOLVERS.iter().map(|s| s.name()).collect()
}

pub fn solver(name: &str) -> Result<&'static dyn LrmcSolver> {
    SOLVERS
        .iter()
        .copied()
        .find(|s| s.name() == name)
        .ok_or_else(|| MmcError::UnknownStrategy {
            kind: "LRMC method",
            name: name.to_owned(),
            available: solver_names().join(", "),
        })
}

/// Completes `obs` to a rank-`opts.rank` matrix with the selected backend.
pub fn complete_lowrank(obs: &ObservedMixture, opts: &LrmcOptions) -> Result<Completion> {
    opts.validate()?;
    if obs.num_observed() == 0 {
        return Err(MmcError::Precondition("no observed entries to complete from".into()));
    }
    let (d, n) = obs.shape();
    if opts.rank > d.min(n) {
        return Err(MmcError::InvalidParameter(format!(
            "rank {} exceeds min(d, n) = {}",
            opts.rank,
            d.min(n)
        )));
    }
    solver(&opts.method)?.complete(obs, opts)
}

pub(crate) fn underdetermined_columns(obs: &ObservedMixture, rank: usize) -> Vec<usize> {
    (0..obs.cols())
        .filter(|&j| obs.mask().column_count(j) < rank + 1)
        .collect()
}

pub(crate) fn observed_residual(obs: &ObservedMixture, x: &DMatrix<f64>) -> (f64, f64) {
    let (d, n) = obs.shape();
    let (mut res, mut norm) = (0.0, 0.0);
    for i in 0..d {
        for j in 0..n {
            if let Some(v) = obs.get(i, j) {
                res += (x[(i, j)] - v).powi(2);
                norm += v * v;
            }
        }
    }
    (res, norm)
}

pub(crate) fn relative_change(new: &DMatrix<f64>, old: &DMatrix<f64>) -> f64 {
    let diff = (new - old).norm();
    let base = old.norm();
    if base > 0.0 {
        diff / base
    } else if diff == 0.0 {
        0.0
    } else {
        f64::INFINITY
    }
}

/// Top-`r` left singular vectors.
#[derive(Debug, Clone, PartialEq)]
pub struct LeadingSubspace {
    pub basis: DenseMatrix,
    pub singular_values: Vec<f64>,
    /// `σ_r` and `σ_{r+1}` coincide within `1e-12·σ₁`, so the span is not unique.
    pub degenerate: bool,
}

/// Leading `r` left singular vectors, each signed so that its
/// largest-magnitude entry is positive.
pub fn leading_subspace(x: &DenseMatrix, r: usize) -> Result<LeadingSubspace> {
    let (d, n) = x.shape();
    if r == 0 || r > d.min(n) {
        return Err(MmcError::InvalidParameter(format!(
            "rank {r} outside 1..={}",
            d.min(n)
        )));
    }
    let svd = sorted_svd(&x.to_nalgebra());
    let s = &svd.singular_values;
    let top = s[0];
    let degenerate = r < s.len() && (s[r - 1] - s[r]).abs() <= 1e-12 * top.max(f64::MIN_POSITIVE);
    let mut basis = svd.u.columns(0, r).into_owned();
    canonical_signs(&mut basis);
    let basis = complete_orthonormal(basis);
    Ok(LeadingSubspace {
        basis: DenseMatrix::from_nalgebra(&basis)?,
        singular_values: s.clone(),
        degenerate,
    })
}

fn canonical_signs(basis: &mut DMatrix<f64>) {
    for mut col in basis.column_iter_mut() {
        let mut best = 0;
        for i in 1..col.len() {
            if col[i].abs() > col[best].abs() {
                best = i;
            }
        }
        if col[best] < 0.0 {
            col.neg_mut();
        }
    }
}

/// Re-orthonormalizes `basis` column by column, replacing any column that
/// is (numerically) dependent on the previous ones by the first standard
/// basis vector that is not. Columns already orthonormal pass through.
pub fn complete_orthonormal(mut basis: DMatrix<f64>) -> DMatrix<f64> {
    let (d, r) = basis.shape();
    let mut next_unit = 0;
    for j in 0..r {
        let mut col = basis.column(j).into_owned();
        let mut ok = orthogonalize_against(&basis, j, &mut col);
        while !ok && next_unit < d {
            col = nalgebra::DVector::zeros(d);
            col[next_unit] = 1.0;
            next_unit += 1;
            ok = orthogonalize_against(&basis, j, &mut col);
        }
        basis.set_column(j, &col);
    }
    basis
}

fn orthogonalize_against(basis: &DMatrix<f64>, j: usize, col: &mut nalgebra::DVector<f64>) -> bool {
    let before = col.norm();
    if before == 0.0 {
        return false;
    }
    for _ in 0..2 {
        for k in 0..j {
            let q = basis.column(k);
            let dot = q.dot(col);
            col.axpy(-dot, &q, 1.0);
        }
    }
    let after = col.norm();
    if after <= 1e-8 * before {
        return false;
    }
    *col /= after;
    true
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{check_orthonormal, Mask};
    use crate::synth::{gaussian_low_rank, subspace_distance};

    #[test]
    fn registry_lists_both_backends() {
        assert_eq!(solver_names(), vec!["alt-min", "hard-svt"]);
        assert!(matches!(
            solver("nuclear"),
            Err(MmcError::UnknownStrategy { .. })
        ));
    }

    #[test]
    fn rejects_empty_observation_and_bad_options() {
        let obs = ObservedMixture::new(DenseMatrix::zeros(3, 3), Mask::zeros(3, 3)).unwrap();
        assert!(complete_lowrank(&obs, &LrmcOptions::new(1)).is_err());
        let full = ObservedMixture::full(DenseMatrix::zeros(3, 3));
        let mut bad = LrmcOptions::new(1);
        bad.tol = 0.0;
        assert!(complete_lowrank(&full, &bad).is_err());
        assert!(complete_lowrank(&full, &LrmcOptions::new(4)).is_err());
    }

    #[test]
    fn leading_subspace_recovers_span() {
        let x = gaussian_low_rank(30, 20, 4, 1, 0);
        let lead = leading_subspace(&x, 4).unwrap();
        check_orthonormal(&lead.basis, 1e-10).unwrap();
        let truth = crate::linalg::orthonormalize(&x.to_nalgebra().columns(0, 4).into_owned());
        let truth = DenseMatrix::from_nalgebra(&truth).unwrap();
        assert!(subspace_distance(&lead.basis, &truth).unwrap() < 1e-8);
        assert!(!lead.degenerate);
    }

    #[test]
    fn leading_subspace_residual_against_full_svd() {
        let x = gaussian_low_rank(50, 40, 8, 2, 0);
        let u = leading_subspace(&x, 8).unwrap().basis.to_nalgebra();
        let xm = x.to_nalgebra();
        let resid = (&xm - &u * (u.transpose() * &xm)).norm() / xm.norm();
        // Oracle: the full SVD has exactly 8 non-negligible singular values,
        // so the rank-8 residual is the tail energy.
        let s = crate::linalg::singular_values(&xm);
        let tail: f64 = s[8..].iter().map(|v| v * v).sum::<f64>().sqrt() / xm.norm();
        assert!(tail < 1e-12);
        assert!(resid < 1e-10);
    }

    #[test]
    fn full_rank_basis_spans_column_space() {
        let x = gaussian_low_rank(6, 4, 4, 3, 0);
        let lead = leading_subspace(&x, 4).unwrap();
        let u = lead.basis.to_nalgebra();
        let xm = x.to_nalgebra();
        assert!((&xm - &u * (u.transpose() * &xm)).norm() < 1e-10 * xm.norm());
    }

    #[test]
    fn sign_convention_and_degeneracy() {
        let x = DenseMatrix::new(3, 3, vec![-2.0, 0.0, 0.0, 0.0, 1.0, 0.0, 0.0, 0.0, 1.0]).unwrap();
        let lead = leading_subspace(&x, 1).unwrap();
        assert!(lead.basis.get(0, 0) > 0.0);
        assert!(!lead.degenerate);
        let tie = leading_subspace(&x, 2).unwrap();
        assert!(tie.degenerate);
        check_orthonormal(&tie.basis, 1e-12).unwrap();
        let zero = leading_subspace(&DenseMatrix::zeros(4, 3), 2).unwrap();
        check_orthonormal(&zero.basis, 1e-12).unwrap();
        assert!(leading_subspace(&x, 4).is_err());
    }

    #[test]
    fn padding_replaces_dependent_columns() {
        let b = DMatrix::from_row_slice(3, 2, &[1.0, 1.0, 0.0, 0.0, 0.0, 0.0]);
        let q = complete_orthonormal(b);
        let g = q.transpose() * &q;
        assert!((g - DMatrix::identity(2, 2)).norm() < 1e-12);
    }
}
