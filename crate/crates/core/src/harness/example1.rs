//! Two rank-1 matrices whose observed mixture is also explained by a
//! different pair of rank-1 matrices.

use serde::Serialize;

use crate::ammc::verify_mixture;
use crate::error::Result;
use crate::linalg::singular_values;
use crate::model::{AssignmentMasks, DenseMatrix, Mask, ObservedMixture};

/// `σ₂/σ₁` below which a matrix counts as rank 1.
pub const RANK1_TOL: f64 = 1e-10;

#[derive(Debug, Clone, PartialEq)]
pub struct Example1Data {
    pub truth: [DenseMatrix; 2],
    pub false_pair: [DenseMatrix; 2],
    /// Entries of each true component that are observed.
    pub omega: [Mask; 2],
}

impl Example1Data {
    pub fn shipped() -> Self {
        let x1 = DenseMatrix::from_fn(5, 4, |_, j| (j + 1) as f64).unwrap();
        let x2 = DenseMatrix::from_fn(5, 4, |i, j| ((i + 1) * (j + 1)) as f64).unwrap();
        let f1 = DenseMatrix::from_rows(&[
            vec![60.0, 40.0, 15.0, 4.0],
            vec![1.0, 2.0 / 3.0, 1.0 / 4.0, 1.0 / 15.0],
            vec![3.0, 2.0, 3.0 / 4.0, 1.0 / 5.0],
            vec![12.0, 8.0, 3.0, 4.0 / 5.0],
            vec![60.0, 40.0, 15.0, 4.0],
        ])
        .unwrap();
        let f2 = DenseMatrix::from_rows(&[
            vec![1.0, 1.0 / 4.0, 3.0, 1.0],
            vec![8.0, 2.0, 24.0, 8.0],
            vec![1.0, 1.0 / 4.0, 3.0, 1.0],
            vec![4.0, 1.0, 12.0, 4.0],
            vec![40.0, 10.0, 120.0, 40.0],
        ])
        .unwrap();
        let omega1 = Mask::from_column_supports(5, &[vec![0, 1], vec![1, 2], vec![2, 3], vec![3, 4]]).unwrap();
        let omega2 = Mask::from_column_supports(5, &[vec![2, 3], vec![3, 4], vec![0, 4], vec![0, 1]]).unwrap();
        Self {
            truth: [x1, x2],
            false_pair: [f1, f2],
            omega: [omega1, omega2],
        }
    }

    /// The true components sampled on their masks.
    pub fn observed(&self) -> Result<ObservedMixture> {
        let union = crate::model::masks_union(&self.omega)?;
        let (d, n) = union.shape();
        let values = DenseMatrix::from_fn(d, n, |i, j| {
            if self.omega[0].get(i, j) {
                self.truth[0].get(i, j)
            } else if self.omega[1].get(i, j) {
                self.truth[1].get(i, j)
            } else {
                0.0
            }
        })?;
        ObservedMixture::new(values, union)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Clause {
    pub name: &'static str,
    pub passed: bool,
    pub detail: String,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Example1Report {
    pub clauses: Vec<Clause>,
    /// Observing one more entry of the first true component outside the
    /// pattern: whether each pair still agrees. Informational only.
    pub extra_entry: (usize, usize),
    pub extra_true_agrees: bool,
    pub extra_false_agrees: bool,
}

impl Example1Report {
    pub fn passed(&self) -> bool {
        self.clauses.iter().all(|c| c.passed)
    }

    pub fn failed_clauses(&self) -> Vec<&'static str> {
        self.clauses.iter().filter(|c| !c.passed).map(|c| c.name).collect()
    }
}

fn sv_ratio(m: &DenseMatrix) -> f64 {
    let s = singular_values(&m.to_nalgebra());
    if s[0] == 0.0 {
        0.0
    } else {
        s.get(1).copied().unwrap_or(0.0) / s[0]
    }
}

fn columns_hold_exactly(masks: &[Mask], count: usize) -> bool {
    masks
        .iter()
        .all(|m| (0..m.cols()).all(|j| m.column_count(j) == count))
}

pub fn run_example1_suite() -> Result<Example1Report> {
    run_example1_with(&Example1Data::shipped())
}

/// Checks four clauses on `data`:
/// (a) all four matrices are rank 1,
/// (b) both pairs agree with the observed mixture,
/// (c) the pairs induce different assignments,
/// (d) every column of each true mask holds exactly 2 entries.
pub fn run_example1_with(data: &Example1Data) -> Result<Example1Report> {
    let obs = data.observed()?;
    let mut clauses = Vec::new();

    let ratios: Vec<f64> = data.truth.iter().chain(&data.false_pair).map(sv_ratio).collect();
    clauses.push(Clause {
        name: "a",
        passed: ratios.iter().all(|&q| q < RANK1_TOL),
        detail: format!(
            "sigma2/sigma1 = [{}]",
            ratios.iter().map(|q| format!("{q:.1e}")).collect::<Vec<_>>().join(", ")
        ),
    });

    let true_check = verify_mixture(&data.truth, &obs, 1)?;
    let false_check = verify_mixture(&data.false_pair, &obs, 1)?;
    clauses.push(Clause {
        name: "b",
        passed: true_check.agrees && false_check.agrees,
        detail: format!(
            "true pair agrees: {}, false pair agrees: {}",
            true_check.agrees, false_check.agrees
        ),
    });

    let (c_passed, c_detail) = match (&true_check.assignment, &false_check.assignment) {
        (Some(a), Some(b)) => {
            let changed = a.count_changes(b);
            (changed > 0, format!("{changed} of {} entries change label", obs.num_observed()))
        }
        _ => (false, "an assignment is missing".to_owned()),
    };
    clauses.push(Clause {
        name: "c",
        passed: c_passed,
        detail: c_detail,
    });

    let d_passed = columns_hold_exactly(&data.omega, 2)
        && AssignmentMasks::new(data.omega.to_vec()).is_ok();
    clauses.push(Clause {
        name: "d",
        passed: d_passed,
        detail: format!(
            "column counts: [{}]",
            data.omega
                .iter()
                .map(|m| (0..m.cols()).map(|j| m.column_count(j).to_string()).collect::<Vec<_>>().join(" "))
                .collect::<Vec<_>>()
                .join(" | ")
        ),
    });

    let extra_entry = first_unobserved(obs.mask());
    let extended = with_extra_entry(&obs, extra_entry, data.truth[0].get(extra_entry.0, extra_entry.1))?;
    let extra_true_agrees = verify_mixture(&data.truth, &extended, 1)?.agrees;
    let extra_false_agrees = verify_mixture(&data.false_pair, &extended, 1)?.agrees;

    Ok(Example1Report {
        clauses,
        extra_entry,
        extra_true_agrees,
        extra_false_agrees,
    })
}

fn first_unobserved(mask: &Mask) -> (usize, usize) {
    let (d, n) = mask.shape();
    (0..d)
        .flat_map(|i| (0..n).map(move |j| (i, j)))
        .find(|&(i, j)| !mask.get(i, j))
        .expect("pattern leaves an entry unobserved")
}

fn with_extra_entry(obs: &ObservedMixture, at: (usize, usize), value: f64) -> Result<ObservedMixture> {
    let (d, n) = obs.shape();
    let values = DenseMatrix::from_fn(d, n, |i, j| {
        if (i, j) == at {
            value
        } else {
            obs.get(i, j).unwrap_or(0.0)
        }
    })?;
    let mask = Mask::from_fn(d, n, |i, j| (i, j) == at || obs.mask().get(i, j))?;
    ObservedMixture::new(values, mask)
}
