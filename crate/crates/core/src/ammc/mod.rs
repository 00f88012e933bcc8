//! Alternating mixture matrix completion.
//!
//! Each outer iteration clusters the observed entries given the current
//! subspace estimates, then completes every cluster on its own and takes
//! the leading subspace of the result:
//!
//! 1. for every column and component, erase coordinates until the
//!    remaining ones fit the component's subspace, and fit coefficients on
//!    what is left;
//! 2. hand each observed entry to the component whose reconstruction is
//!    closest (lowest index on ties);
//! 3. complete each component from its entries and refresh its basis.
//!
//! The loop stops when two consecutive clusterings agree exactly.

mod erasure;
mod verify;

pub use erasure::{erase, estimate_coefficient, Erasure, ErasureParams};
pub use verify::{verify_mixture, MixtureCheck, MATCH_TOL, RANK_TOL};

use std::collections::HashSet;

use rayon::prelude::*;

use crate::error::{MmcError, Result};
use crate::lrmc::{complete_lowrank, leading_subspace, LrmcOptions};
use crate::model::{check_orthonormal, AssignmentMasks, DenseMatrix, Mask, ObservedMixture};
use crate::rng::derive_seed;

#[derive(Debug, Clone, PartialEq)]
pub struct AmmcOptions {
    pub k: usize,
    pub r: usize,
    pub max_outer_iters: usize,
    /// Erasure stops once `(‖x_υ‖ − ‖P_υ x_υ‖)/‖x_υ‖` is at most this.
    pub erasure_tol: f64,
    /// Erasure never keeps fewer than `max(r, min_keep)` entries.
    pub min_keep: usize,
    /// Keep at most this many best-fitting entries per component and column.
    pub assignment_cap: Option<usize>,
    /// Entries whose best squared residual exceeds this become outliers.
    pub noise_sigma2: Option<f64>,
    /// Extra erasure searches from random half-size starting sets.
    pub restarts: usize,
    pub lrmc: LrmcOptions,
    pub seed: u64,
}

impl AmmcOptions {
    pub fn new(k: usize, r: usize) -> Self {
        Self {
            k,
            r,
            max_outer_iters: 100,
            erasure_tol: 1e-9,
            min_keep: r,
            assignment_cap: None,
            noise_sigma2: None,
            restarts: 0,
            lrmc: LrmcOptions::new(r),
            seed: 0,
        }
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |msg: String| Err(MmcError::InvalidParameter(msg));
        if self.k == 0 || self.k > u8::MAX as usize {
            return bad(format!("K must be in 1..=255, got {}", self.k));
        }
        if self.r == 0 {
            return bad("r must be at least 1".into());
        }
        if !(self.erasure_tol > 0.0) {
            return bad("erasure_tol must be positive".into());
        }
        if self.min_keep < self.r {
            return bad(format!("min_keep {} is below r = {}", self.min_keep, self.r));
        }
        if self.max_outer_iters == 0 {
            return bad("max_outer_iters must be at least 1".into());
        }
        if self.assignment_cap == Some(0) {
            return bad("assignment cap must be at least 1".into());
        }
        if let Some(s) = self.noise_sigma2 {
            if !(s >= 0.0) || !s.is_finite() {
                return bad(format!("sigma2 = {s} must be finite and non-negative"));
            }
        }
        if self.lrmc.rank != self.r {
            return bad(format!(
                "LRMC rank {} differs from r = {}",
                self.lrmc.rank, self.r
            ));
        }
        self.lrmc.validate()
    }

    /// Restart subsets depend on the column only, so every component
    /// searches from the same starting sets.
    fn erasure_params(&self, j: usize) -> ErasureParams {
        ErasureParams {
            tol: self.erasure_tol,
            min_keep: self.min_keep,
            restarts: self.restarts,
            seed: derive_seed(self.seed, &[j as u64]),
        }
    }
}

/// Estimates carried between outer iterations.
#[derive(Debug, Clone, PartialEq)]
pub struct ClusterState {
    pub bases: Vec<DenseMatrix>,
    pub assignments: AssignmentMasks,
    pub completions: Vec<DenseMatrix>,
    /// Observed entries assigned to no component.
    pub outliers: Mask,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Clustering {
    pub assignments: AssignmentMasks,
    pub outliers: Mask,
    /// Per component: `U θ̂` on each column's observed rows, zero elsewhere.
    pub reconstructions: Vec<DenseMatrix>,
    /// Columns with fewer than `r` observations; all their entries are outliers.
    pub skipped_columns: Vec<usize>,
    pub ridge_used: bool,
}

struct ColumnResult {
    labels: Vec<u8>,
    fits: Vec<Vec<f64>>,
    ridge: bool,
}

fn cluster_column(
    obs: &ObservedMixture,
    bases: &[DenseMatrix],
    opts: &AmmcOptions,
    j: usize,
    omega: &[usize],
) -> Result<ColumnResult> {
    let x = obs.column_restrict(j, omega)?;
    let mut fits: Vec<Vec<f64>> = Vec::with_capacity(bases.len());
    let mut ridge = false;
    for basis in bases {
        let restricted = basis.select_rows(omega)?;
        let kept = erase(&x, &restricted, &opts.erasure_params(j))?.kept;
        let xs: Vec<f64> = kept.iter().map(|&p| x[p]).collect();
        let (theta, flag) = estimate_coefficient(&restricted.select_rows(&kept)?, &xs)?;
        ridge |= flag;
        fits.push(
            (0..omega.len())
                .map(|p| restricted.row(p).iter().zip(&theta).map(|(a, b)| a * b).sum())
                .collect(),
        );
    }
    let mut labels = vec![0u8; omega.len()];
    let mut best_err = vec![0.0; omega.len()];
    for p in 0..omega.len() {
        let mut best = 0;
        let mut err = (x[p] - fits[0][p]).abs();
        for (k, fit) in fits.iter().enumerate().skip(1) {
            let e = (x[p] - fit[p]).abs();
            if e < err {
                best = k;
                err = e;
            }
        }
        best_err[p] = err;
        if opts.noise_sigma2.is_none_or(|s2| err * err <= s2) {
            labels[p] = best as u8 + 1;
        }
    }
    if let Some(cap) = opts.assignment_cap {
        for k in 1..=bases.len() as u8 {
            let mut mine: Vec<usize> = (0..omega.len()).filter(|&p| labels[p] == k).collect();
            if mine.len() > cap {
                mine.sort_by(|&a, &b| best_err[a].total_cmp(&best_err[b]).then(a.cmp(&b)));
                for &p in &mine[cap..] {
                    labels[p] = 0;
                }
            }
        }
    }
    Ok(ColumnResult { labels, fits, ridge })
}

fn check_bases(obs: &ObservedMixture, bases: &[DenseMatrix], opts: &AmmcOptions) -> Result<()> {
    if bases.len() != opts.k {
        return Err(MmcError::InvalidParameter(format!(
            "{} bases for K = {}",
            bases.len(),
            opts.k
        )));
    }
    for b in bases {
        if b.shape() != (obs.rows(), opts.r) {
            return Err(MmcError::Shape(format!(
                "basis {:?}, expected {:?}",
                b.shape(),
                (obs.rows(), opts.r)
            )));
        }
        check_orthonormal(b, 1e-8)?;
    }
    Ok(())
}

/// Assigns every observed entry to its closest component reconstruction.
pub fn cluster_step(obs: &ObservedMixture, bases: &[DenseMatrix], opts: &AmmcOptions) -> Result<Clustering> {
    opts.validate()?;
    check_bases(obs, bases, opts)?;
    let (d, n) = obs.shape();
    let columns: Vec<Option<(Vec<usize>, ColumnResult)>> = (0..n)
        .into_par_iter()
        .map(|j| {
            let omega = obs.observed_rows(j);
            if omega.len() < opts.r {
                return Ok(None);
            }
            cluster_column(obs, bases, opts, j, &omega).map(|res| Some((omega, res)))
        })
        .collect::<Result<_>>()?;

    let mut labels = vec![0u8; d * n];
    let mut recon = vec![vec![0.0; d * n]; opts.k];
    let mut skipped = Vec::new();
    let mut ridge_used = false;
    for (j, col) in columns.into_iter().enumerate() {
        let Some((omega, res)) = col else {
            if !obs.observed_rows(j).is_empty() {
                skipped.push(j);
            }
            continue;
        };
        ridge_used |= res.ridge;
        for (p, &i) in omega.iter().enumerate() {
            labels[i * n + j] = res.labels[p];
            for (k, fit) in res.fits.iter().enumerate() {
                recon[k][i * n + j] = fit[p];
            }
        }
    }
    let assignments = AssignmentMasks::from_labels(d, n, &labels, opts.k)?;
    let outliers = Mask::from_fn(d, n, |i, j| obs.mask().get(i, j) && labels[i * n + j] == 0)?;
    let reconstructions = recon
        .into_iter()
        .map(|v| DenseMatrix::new(d, n, v))
        .collect::<Result<_>>()?;
    Ok(Clustering {
        assignments,
        outliers,
        reconstructions,
        skipped_columns: skipped,
        ridge_used,
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct ComponentFit {
    pub completion: DenseMatrix,
    pub basis: DenseMatrix,
    /// No entries were assigned; basis and completion carried over.
    pub empty: bool,
    /// Too few columns, or some column below `r + 1` entries.
    pub underdetermined: bool,
    /// Columns holding none of this component's entries; zero in the completion.
    pub unrecovered_columns: Vec<usize>,
    pub ridge_used: bool,
}

/// Completes each component from its own entries and refreshes its basis.
///
/// `previous` supplies the basis and completion kept by components that
/// received no entries.
pub fn complete_step(
    obs: &ObservedMixture,
    assignments: &AssignmentMasks,
    previous: &[(DenseMatrix, DenseMatrix)],
    opts: &AmmcOptions,
) -> Result<Vec<ComponentFit>> {
    opts.validate()?;
    if assignments.k() != opts.k || previous.len() != opts.k {
        return Err(MmcError::InvalidParameter(format!(
            "expected K = {} assignments and previous estimates",
            opts.k
        )));
    }
    if assignments.shape() != obs.shape() {
        return Err(MmcError::Shape("assignments vs observations".into()));
    }
    let (d, n) = obs.shape();
    (0..opts.k)
        .into_par_iter()
        .map(|k| {
            let mask = assignments.mask(k);
            let (cols, empty_cols): (Vec<usize>, Vec<usize>) =
                (0..n).partition(|&j| mask.column_count(j) > 0);
            if cols.is_empty() {
                let (basis, completion) = previous[k].clone();
                return Ok(ComponentFit {
                    completion,
                    basis,
                    empty: true,
                    underdetermined: true,
                    unrecovered_columns: empty_cols,
                    ridge_used: false,
                });
            }
            let sub = obs.restrict_to(mask)?.select_columns(&cols)?;
            let rank = opts.r.min(d).min(cols.len());
            let lrmc = LrmcOptions {
                rank,
                ..opts.lrmc.clone()
            };
            let done = complete_lowrank(&sub, &lrmc)?;
            let mut full = vec![0.0; d * n];
            for i in 0..d {
                for (c, &j) in cols.iter().enumerate() {
                    full[i * n + j] = done.matrix.get(i, c);
                }
            }
            let completion = DenseMatrix::new(d, n, full)?;
            let basis = leading_subspace(&completion, opts.r)?.basis;
            Ok(ComponentFit {
                completion,
                basis,
                empty: false,
                underdetermined: rank < opts.r || !done.underdetermined_columns.is_empty(),
                unrecovered_columns: empty_cols,
                ridge_used: done.ridge_used,
            })
        })
        .collect()
}

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct AmmcFlags {
    /// The clustering returned to an earlier non-adjacent state, so the
    /// iteration would cycle; the run stopped there.
    pub cycle_detected: bool,
    pub skipped_columns: Vec<usize>,
    pub empty_components: Vec<usize>,
    pub underdetermined_components: Vec<usize>,
    pub ridge_used: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct AmmcRun {
    pub state: ClusterState,
    /// Entries whose label changed in each outer iteration; the first
    /// iteration counts every assigned entry.
    pub history: Vec<usize>,
    pub iterations: usize,
    pub converged: bool,
    /// From the last clustering and completion performed.
    pub flags: AmmcFlags,
}

/// Alternates [`cluster_step`] and [`complete_step`] from `init_bases`
/// until the assignments repeat or `max_outer_iters` is reached. A return
/// to an older clustering also ends the run, unconverged, with the state of
/// the last completed iteration.
pub fn run_ammc(obs: &ObservedMixture, init_bases: &[DenseMatrix], opts: &AmmcOptions) -> Result<AmmcRun> {
    opts.validate()?;
    check_bases(obs, init_bases, opts)?;
    let (d, n) = obs.shape();
    if opts.r > d.min(n) {
        return Err(MmcError::InvalidParameter(format!(
            "rank {} exceeds min(d, n) = {}",
            opts.r,
            d.min(n)
        )));
    }
    let mut state = ClusterState {
        bases: init_bases.to_vec(),
        assignments: AssignmentMasks::from_labels(d, n, &vec![0; d * n], opts.k)?,
        completions: vec![DenseMatrix::zeros(d, n); opts.k],
        outliers: obs.mask().clone(),
    };
    let mut history = Vec::new();
    let mut flags = AmmcFlags::default();
    let mut converged = false;
    let mut iterations = 0;
    let mut seen: HashSet<Vec<u8>> = HashSet::new();
    while iterations < opts.max_outer_iters {
        iterations += 1;
        let clustering = cluster_step(obs, &state.bases, opts)?;
        let changes = clustering.assignments.count_changes(&state.assignments);
        history.push(changes);
        flags.skipped_columns = clustering.skipped_columns;
        flags.ridge_used = clustering.ridge_used;
        if iterations > 1 && changes == 0 {
            converged = true;
            break;
        }
        if !seen.insert(clustering.assignments.labels()) {
            flags.cycle_detected = true;
            break;
        }
        let previous: Vec<(DenseMatrix, DenseMatrix)> = state
            .bases
            .iter()
            .cloned()
            .zip(state.completions.iter().cloned())
            .collect();
        let fits = complete_step(obs, &clustering.assignments, &previous, opts)?;
        flags.empty_components = (0..opts.k).filter(|&k| fits[k].empty).collect();
        flags.underdetermined_components = (0..opts.k).filter(|&k| fits[k].underdetermined).collect();
        flags.ridge_used |= fits.iter().any(|f| f.ridge_used);
        let (completions, bases) = fits.into_iter().map(|f| (f.completion, f.basis)).unzip();
        state = ClusterState {
            bases,
            assignments: clustering.assignments,
            completions,
            outliers: clustering.outliers,
        };
    }
    Ok(AmmcRun {
        state,
        history,
        iterations,
        converged,
        flags,
    })
}
