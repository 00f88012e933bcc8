//! Matrices, masks and mixtures.
//!
//! All matrices are stored row-major. Missing entries of an observed mixture
//! are tracked only by its [`Mask`]; the value slot under a zero mask entry is
//! stored as `0.0` and must never be read as data.

pub mod io;

use nalgebra::DMatrix;

use crate::error::{MmcError, Result};

/// Dense real matrix, row-major, all entries finite.
#[derive(Debug, Clone, PartialEq)]
pub struct DenseMatrix {
    rows: usize,
    cols: usize,
    data: Vec<f64>,
}

impl DenseMatrix {
    pub fn new(rows: usize, cols: usize, data: Vec<f64>) -> Result<Self> {
        if rows == 0 || cols == 0 {
            return Err(MmcError::Shape(format!(
                "matrix must be at least 1x1, got {rows}x{cols}"
            )));
        }
        if data.len() != rows * cols {
            return Err(MmcError::Shape(format!(
                "{rows}x{cols} matrix needs {} entries, got {}",
                rows * cols,
                data.len()
            )));
        }
        if let Some(pos) = data.iter().position(|v| !v.is_finite()) {
            return Err(MmcError::NonFinite {
                row: pos / cols,
                col: pos % cols,
            });
        }
        Ok(Self { rows, cols, data })
    }

    pub fn zeros(rows: usize, cols: usize) -> Self {
        assert!(rows > 0 && cols > 0, "empty matrix");
        Self {
            rows,
            cols,
            data: vec![0.0; rows * cols],
        }
    }

    pub fn from_fn(rows: usize, cols: usize, mut f: impl FnMut(usize, usize) -> f64) -> Result<Self> {
        let mut data = Vec::with_capacity(rows * cols);
        for i in 0..rows {
            for j in 0..cols {
                data.push(f(i, j));
            }
        }
        Self::new(rows, cols, data)
    }

    /// Build from nested rows, e.g. literal test matrices.
    pub fn from_rows(rows: &[Vec<f64>]) -> Result<Self> {
        let d = rows.len();
        let n = rows.first().map_or(0, Vec::len);
        if rows.iter().any(|r| r.len() != n) {
            return Err(MmcError::Shape("ragged rows".into()));
        }
        Self::new(d, n, rows.concat())
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn shape(&self) -> (usize, usize) {
        (self.rows, self.cols)
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.data[i * self.cols + j]
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.data
    }

    pub fn into_vec(self) -> Vec<f64> {
        self.data
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.data[i * self.cols..(i + 1) * self.cols]
    }

    pub fn column(&self, j: usize) -> Vec<f64> {
        (0..self.rows).map(|i| self.get(i, j)).collect()
    }

    pub fn frobenius_norm(&self) -> f64 {
        self.data.iter().map(|v| v * v).sum::<f64>().sqrt()
    }

    /// `‖self − other‖_F`.
    pub fn distance(&self, other: &DenseMatrix) -> Result<f64> {
        self.check_same_shape(other)?;
        Ok(self
            .data
            .iter()
            .zip(&other.data)
            .map(|(a, b)| (a - b) * (a - b))
            .sum::<f64>()
            .sqrt())
    }

    /// `‖self − other‖_F / ‖self‖_F`, or the absolute distance when `self` is zero.
    pub fn relative_error(&self, estimate: &DenseMatrix) -> Result<f64> {
        let diff = self.distance(estimate)?;
        let norm = self.frobenius_norm();
        Ok(if norm > 0.0 { diff / norm } else { diff })
    }

    pub fn check_same_shape(&self, other: &DenseMatrix) -> Result<()> {
        if self.shape() != other.shape() {
            return Err(MmcError::Shape(format!(
                "{}x{} vs {}x{}",
                self.rows, self.cols, other.rows, other.cols
            )));
        }
        Ok(())
    }

    pub fn to_nalgebra(&self) -> DMatrix<f64> {
        DMatrix::from_row_slice(self.rows, self.cols, &self.data)
    }

    pub fn from_nalgebra(m: &DMatrix<f64>) -> Result<Self> {
        Self::from_fn(m.nrows(), m.ncols(), |i, j| m[(i, j)])
    }

    /// Keep only the listed columns, in the given order.
    pub fn select_columns(&self, cols: &[usize]) -> Result<Self> {
        if let Some(&bad) = cols.iter().find(|&&c| c >= self.cols) {
            return Err(MmcError::IndexOutOfRange {
                index: bad,
                len: self.cols,
            });
        }
        Self::from_fn(self.rows, cols.len(), |i, j| self.get(i, cols[j]))
    }

    /// Keep only the listed rows, in the given order.
    pub fn select_rows(&self, rows: &[usize]) -> Result<Self> {
        let mut data = Vec::with_capacity(rows.len() * self.cols);
        for &i in rows {
            if i >= self.rows {
                return Err(MmcError::IndexOutOfRange {
                    index: i,
                    len: self.rows,
                });
            }
            data.extend_from_slice(self.row(i));
        }
        Ok(Self {
            rows: rows.len(),
            cols: self.cols,
            data,
        })
    }
}

/// Binary matrix marking observed (1) or missing (0) entries.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct Mask {
    rows: usize,
    cols: usize,
    bits: Vec<u8>,
}

impl Mask {
    pub fn new(rows: usize, cols: usize, bits: Vec<u8>) -> Result<Self> {
        if rows == 0 || cols == 0 {
            return Err(MmcError::Shape(format!(
                "mask must be at least 1x1, got {rows}x{cols}"
            )));
        }
        if bits.len() != rows * cols {
            return Err(MmcError::Shape(format!(
                "{rows}x{cols} mask needs {} entries, got {}",
                rows * cols,
                bits.len()
            )));
        }
        if let Some(pos) = bits.iter().position(|&b| b > 1) {
            return Err(MmcError::NotBinary {
                row: pos / cols,
                col: pos % cols,
                value: bits[pos],
            });
        }
        Ok(Self { rows, cols, bits })
    }

    pub fn zeros(rows: usize, cols: usize) -> Self {
        assert!(rows > 0 && cols > 0, "empty mask");
        Self {
            rows,
            cols,
            bits: vec![0; rows * cols],
        }
    }

    pub fn ones(rows: usize, cols: usize) -> Self {
        assert!(rows > 0 && cols > 0, "empty mask");
        Self {
            rows,
            cols,
            bits: vec![1; rows * cols],
        }
    }

    pub fn from_fn(rows: usize, cols: usize, mut f: impl FnMut(usize, usize) -> bool) -> Result<Self> {
        let mut bits = Vec::with_capacity(rows * cols);
        for i in 0..rows {
            for j in 0..cols {
                bits.push(u8::from(f(i, j)));
            }
        }
        Self::new(rows, cols, bits)
    }

    /// Build a mask whose column `j` has ones exactly at `supports[j]`.
    pub fn from_column_supports(rows: usize, supports: &[Vec<usize>]) -> Result<Self> {
        let cols = supports.len();
        if rows == 0 || cols == 0 {
            return Err(MmcError::Shape("mask must be at least 1x1".into()));
        }
        let mut bits = vec![0u8; rows * cols];
        for (j, support) in supports.iter().enumerate() {
            for &i in support {
                if i >= rows {
                    return Err(MmcError::IndexOutOfRange { index: i, len: rows });
                }
                bits[i * cols + j] = 1;
            }
        }
        Self::new(rows, cols, bits)
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn shape(&self) -> (usize, usize) {
        (self.rows, self.cols)
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> bool {
        self.bits[i * self.cols + j] == 1
    }

    pub fn as_bytes(&self) -> &[u8] {
        &self.bits
    }

    pub fn count_ones(&self) -> usize {
        self.bits.iter().filter(|&&b| b == 1).count()
    }

    /// Row indices with a one in column `j`, ascending.
    pub fn column_support(&self, j: usize) -> Vec<usize> {
        (0..self.rows).filter(|&i| self.get(i, j)).collect()
    }

    pub fn column_count(&self, j: usize) -> usize {
        (0..self.rows).filter(|&i| self.get(i, j)).count()
    }

    pub fn select_columns(&self, cols: &[usize]) -> Result<Self> {
        if let Some(&bad) = cols.iter().find(|&&c| c >= self.cols) {
            return Err(MmcError::IndexOutOfRange {
                index: bad,
                len: self.cols,
            });
        }
        Self::from_fn(self.rows, cols.len(), |i, j| self.get(i, cols[j]))
    }

    pub fn is_disjoint(&self, other: &Mask) -> bool {
        self.bits.iter().zip(&other.bits).all(|(a, b)| a & b == 0)
    }
}

/// Partially observed data matrix `X_Ω`.
#[derive(Debug, Clone, PartialEq)]
pub struct ObservedMixture {
    values: DenseMatrix,
    observed: Mask,
}

impl ObservedMixture {
    /// Values under unobserved entries are discarded (stored as zero).
    pub fn new(values: DenseMatrix, observed: Mask) -> Result<Self> {
        if values.shape() != observed.shape() {
            return Err(MmcError::Shape(format!(
                "values {:?} vs mask {:?}",
                values.shape(),
                observed.shape()
            )));
        }
        let cols = values.cols;
        let data = values
            .data
            .iter()
            .zip(&observed.bits)
            .map(|(&v, &b)| if b == 1 { v } else { 0.0 })
            .collect();
        Ok(Self {
            values: DenseMatrix {
                rows: values.rows,
                cols,
                data,
            },
            observed,
        })
    }

    /// Fully observed mixture.
    pub fn full(values: DenseMatrix) -> Self {
        let observed = Mask::ones(values.rows, values.cols);
        Self { values, observed }
    }

    pub fn rows(&self) -> usize {
        self.values.rows
    }

    pub fn cols(&self) -> usize {
        self.values.cols
    }

    pub fn shape(&self) -> (usize, usize) {
        self.values.shape()
    }

    pub fn mask(&self) -> &Mask {
        &self.observed
    }

    /// Zero-filled values. Entries outside the mask are zero.
    pub fn zero_filled(&self) -> &DenseMatrix {
        &self.values
    }

    pub fn get(&self, i: usize, j: usize) -> Option<f64> {
        self.observed.get(i, j).then(|| self.values.get(i, j))
    }

    pub fn num_observed(&self) -> usize {
        self.observed.count_ones()
    }

    /// Observed row indices of column `j` (the set `ω`), ascending.
    pub fn observed_rows(&self, j: usize) -> Vec<usize> {
        self.observed.column_support(j)
    }

    /// Values of column `j` at the rows `idx`, in ascending row order.
    pub fn column_restrict(&self, j: usize, idx: &[usize]) -> Result<Vec<f64>> {
        if j >= self.cols() {
            return Err(MmcError::IndexOutOfRange {
                index: j,
                len: self.cols(),
            });
        }
        let mut sorted = idx.to_vec();
        sorted.sort_unstable();
        sorted
            .into_iter()
            .map(|i| {
                if i >= self.rows() {
                    Err(MmcError::IndexOutOfRange {
                        index: i,
                        len: self.rows(),
                    })
                } else if !self.observed.get(i, j) {
                    Err(MmcError::Unobserved { index: i })
                } else {
                    Ok(self.values.get(i, j))
                }
            })
            .collect()
    }

    /// The same data seen through a sub-mask.
    pub fn restrict_to(&self, mask: &Mask) -> Result<Self> {
        if mask.shape() != self.shape() {
            return Err(MmcError::Shape("restriction mask shape".into()));
        }
        if let Some(pos) = mask
            .bits
            .iter()
            .zip(&self.observed.bits)
            .position(|(&m, &o)| m == 1 && o == 0)
        {
            return Err(MmcError::Precondition(format!(
                "restriction mask selects unobserved entry ({}, {})",
                pos / self.cols(),
                pos % self.cols()
            )));
        }
        Self::new(self.values.clone(), mask.clone())
    }

    pub fn select_columns(&self, cols: &[usize]) -> Result<Self> {
        Self::new(
            self.values.select_columns(cols)?,
            self.observed.select_columns(cols)?,
        )
    }
}

/// Union of pairwise-disjoint masks; fails at the first collision in row-major order.
pub fn masks_union(masks: &[Mask]) -> Result<Mask> {
    let first = masks
        .first()
        .ok_or_else(|| MmcError::InvalidParameter("need at least one mask".into()))?;
    let (rows, cols) = first.shape();
    if let Some(m) = masks.iter().find(|m| m.shape() != (rows, cols)) {
        return Err(MmcError::Shape(format!(
            "mask {:?} vs {:?}",
            m.shape(),
            (rows, cols)
        )));
    }
    let mut bits = vec![0u8; rows * cols];
    for (pos, slot) in bits.iter_mut().enumerate() {
        for m in masks {
            if m.bits[pos] == 1 {
                if *slot == 1 {
                    return Err(MmcError::Collision {
                        row: pos / cols,
                        col: pos % cols,
                    });
                }
                *slot = 1;
            }
        }
    }
    Mask::new(rows, cols, bits)
}

/// K pairwise-disjoint masks `Ω¹..Ωᴷ`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct AssignmentMasks {
    masks: Vec<Mask>,
}

impl AssignmentMasks {
    pub fn new(masks: Vec<Mask>) -> Result<Self> {
        masks_union(&masks)?;
        Ok(Self { masks })
    }

    /// Build from a label matrix: 0 = unassigned, `k` in `1..=K` = component `k`.
    pub fn from_labels(rows: usize, cols: usize, labels: &[u8], k: usize) -> Result<Self> {
        if labels.len() != rows * cols {
            return Err(MmcError::Shape("label count".into()));
        }
        if k == 0 {
            return Err(MmcError::InvalidParameter("K must be at least 1".into()));
        }
        if let Some(pos) = labels.iter().position(|&l| l as usize > k) {
            return Err(MmcError::InvalidParameter(format!(
                "label {} at ({}, {}) exceeds K={k}",
                labels[pos],
                pos / cols,
                pos % cols
            )));
        }
        let masks = (1..=k)
            .map(|c| {
                Mask::new(
                    rows,
                    cols,
                    labels.iter().map(|&l| u8::from(l as usize == c)).collect(),
                )
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(Self { masks })
    }

    pub fn k(&self) -> usize {
        self.masks.len()
    }

    pub fn masks(&self) -> &[Mask] {
        &self.masks
    }

    pub fn mask(&self, k: usize) -> &Mask {
        &self.masks[k]
    }

    pub fn shape(&self) -> (usize, usize) {
        self.masks[0].shape()
    }

    pub fn union(&self) -> Mask {
        masks_union(&self.masks).expect("disjoint by construction")
    }

    /// Per-entry label: 0 when unassigned, else the 1-based component.
    pub fn labels(&self) -> Vec<u8> {
        let (rows, cols) = self.shape();
        let mut labels = vec![0u8; rows * cols];
        for (k, m) in self.masks.iter().enumerate() {
            for (slot, &b) in labels.iter_mut().zip(m.as_bytes()) {
                if b == 1 {
                    *slot = (k + 1) as u8;
                }
            }
        }
        labels
    }

    /// Number of entries whose label differs between the two assignments.
    pub fn count_changes(&self, other: &AssignmentMasks) -> usize {
        self.labels()
            .iter()
            .zip(other.labels())
            .filter(|(a, b)| **a != *b)
            .count()
    }

    pub fn permuted(&self, perm: &[usize]) -> Self {
        Self {
            masks: perm.iter().map(|&p| self.masks[p].clone()).collect(),
        }
    }
}

/// Orthonormal basis `U` (d×r) with coefficients `Θ` (r×n).
#[derive(Debug, Clone, PartialEq)]
pub struct LowRankFactorization {
    basis: DenseMatrix,
    coefficients: DenseMatrix,
}

impl LowRankFactorization {
    pub const ORTHONORMAL_TOL: f64 = 1e-10;

    pub fn new(basis: DenseMatrix, coefficients: DenseMatrix) -> Result<Self> {
        if basis.cols() != coefficients.rows() {
            return Err(MmcError::Shape(format!(
                "basis has {} columns, coefficients {} rows",
                basis.cols(),
                coefficients.rows()
            )));
        }
        check_orthonormal(&basis, Self::ORTHONORMAL_TOL)?;
        Ok(Self {
            basis,
            coefficients,
        })
    }

    pub fn basis(&self) -> &DenseMatrix {
        &self.basis
    }

    pub fn coefficients(&self) -> &DenseMatrix {
        &self.coefficients
    }

    pub fn rank(&self) -> usize {
        self.basis.cols()
    }

    pub fn product(&self) -> DenseMatrix {
        let m = self.basis.to_nalgebra() * self.coefficients.to_nalgebra();
        DenseMatrix::from_nalgebra(&m).expect("finite product")
    }
}

/// Fails unless `‖UᵀU − I‖_max ≤ tol`.
pub fn check_orthonormal(basis: &DenseMatrix, tol: f64) -> Result<()> {
    let u = basis.to_nalgebra();
    let gram = u.transpose() * &u;
    let r = gram.nrows();
    let mut deviation = 0.0f64;
    for i in 0..r {
        for j in 0..r {
            let target = if i == j { 1.0 } else { 0.0 };
            deviation = deviation.max((gram[(i, j)] - target).abs());
        }
    }
    if deviation > tol {
        return Err(MmcError::NotOrthonormal { deviation });
    }
    Ok(())
}

/// Ground truth together with the mixture it produced.
#[derive(Debug, Clone, PartialEq)]
pub struct MixtureProblem {
    truth: Vec<DenseMatrix>,
    assignments: AssignmentMasks,
    observed: ObservedMixture,
    rank: usize,
    seed: u64,
}

impl MixtureProblem {
    /// Checks that every assigned entry matches its component exactly,
    /// that the assignment union is the observed mask, and that each
    /// component has numerical rank at most `rank`.
    pub fn new(
        truth: Vec<DenseMatrix>,
        assignments: AssignmentMasks,
        observed: ObservedMixture,
        rank: usize,
        seed: u64,
    ) -> Result<Self> {
        if truth.len() != assignments.k() {
            return Err(MmcError::Shape(format!(
                "{} truth matrices for {} masks",
                truth.len(),
                assignments.k()
            )));
        }
        for x in &truth {
            if x.shape() != observed.shape() {
                return Err(MmcError::Shape("truth vs observed shape".into()));
            }
        }
        if assignments.shape() != observed.shape() {
            return Err(MmcError::Shape("assignment vs observed shape".into()));
        }
        if &assignments.union() != observed.mask() {
            return Err(MmcError::Precondition(
                "assignment union differs from the observed mask".into(),
            ));
        }
        for (k, (x, m)) in truth.iter().zip(assignments.masks()).enumerate() {
            let (d, n) = x.shape();
            for i in 0..d {
                for j in 0..n {
                    if m.get(i, j) && observed.get(i, j) != Some(x.get(i, j)) {
                        return Err(MmcError::Precondition(format!(
                            "observed ({i}, {j}) disagrees with component {}",
                            k + 1
                        )));
                    }
                }
            }
            let rk = crate::linalg::numerical_rank(x, 1e-8);
            if rk > rank {
                return Err(MmcError::Precondition(format!(
                    "component {} has rank {rk} > {rank}",
                    k + 1
                )));
            }
        }
        Ok(Self {
            truth,
            assignments,
            observed,
            rank,
            seed,
        })
    }

    pub fn truth(&self) -> &[DenseMatrix] {
        &self.truth
    }

    pub fn assignments(&self) -> &AssignmentMasks {
        &self.assignments
    }

    pub fn observed(&self) -> &ObservedMixture {
        &self.observed
    }

    pub fn rank(&self) -> usize {
        self.rank
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn k(&self) -> usize {
        self.truth.len()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn example1_observed() -> ObservedMixture {
        let na = f64::NAN;
        let rows = [
            [1.0, na, 3.0, 4.0],
            [1.0, 2.0, na, 8.0],
            [3.0, 2.0, 3.0, na],
            [4.0, 8.0, 3.0, 4.0],
            [na, 10.0, 15.0, 4.0],
        ];
        let mask = Mask::from_fn(5, 4, |i, j| !rows[i][j].is_nan()).unwrap();
        let values =
            DenseMatrix::from_fn(5, 4, |i, j| if rows[i][j].is_nan() { 0.0 } else { rows[i][j] })
                .unwrap();
        ObservedMixture::new(values, mask).unwrap()
    }

    #[test]
    fn rejects_non_finite_and_bad_shapes() {
        assert!(matches!(
            DenseMatrix::new(1, 2, vec![1.0, f64::INFINITY]),
            Err(MmcError::NonFinite { row: 0, col: 1 })
        ));
        assert!(DenseMatrix::new(2, 2, vec![1.0; 3]).is_err());
        assert!(DenseMatrix::new(0, 2, vec![]).is_err());
        assert!(matches!(
            Mask::new(1, 2, vec![0, 2]),
            Err(MmcError::NotBinary { value: 2, .. })
        ));
    }

    #[test]
    fn column_restrict_selects_in_ascending_order() {
        let values = DenseMatrix::new(5, 1, vec![1.0, 0.0, 3.0, 0.0, 5.0]).unwrap();
        let mask = Mask::new(5, 1, vec![1, 0, 1, 0, 1]).unwrap();
        let obs = ObservedMixture::new(values, mask).unwrap();
        assert_eq!(obs.column_restrict(0, &[4, 0]).unwrap(), vec![1.0, 5.0]);
        assert_eq!(
            obs.column_restrict(0, &obs.observed_rows(0)).unwrap(),
            vec![1.0, 3.0, 5.0]
        );
        assert!(matches!(
            obs.column_restrict(0, &[1]),
            Err(MmcError::Unobserved { index: 1 })
        ));
        assert!(matches!(
            obs.column_restrict(0, &[7]),
            Err(MmcError::IndexOutOfRange { index: 7, .. })
        ));
    }

    #[test]
    fn column_restrict_on_example1() {
        let obs = example1_observed();
        assert_eq!(obs.column_restrict(0, &[0, 1]).unwrap(), vec![1.0, 1.0]);
    }

    #[test]
    fn union_of_disjoint_masks() {
        let a = Mask::new(2, 2, vec![1, 0, 0, 0]).unwrap();
        let b = Mask::new(2, 2, vec![0, 0, 0, 1]).unwrap();
        let u = masks_union(&[a.clone(), b]).unwrap();
        assert_eq!(u.count_ones(), 2);
        assert_eq!(masks_union(std::slice::from_ref(&a)).unwrap(), a);
    }

    #[test]
    fn overlapping_masks_report_first_collision() {
        let a = Mask::new(2, 2, vec![0, 1, 1, 0]).unwrap();
        let b = Mask::new(2, 2, vec![0, 1, 1, 1]).unwrap();
        assert!(matches!(
            AssignmentMasks::new(vec![a, b]),
            Err(MmcError::Collision { row: 0, col: 1 })
        ));
    }

    #[test]
    fn example1_union_is_observed_pattern() {
        let cyan = Mask::from_column_supports(5, &[vec![0, 1], vec![1, 2], vec![2, 3], vec![3, 4]])
            .unwrap();
        let magenta =
            Mask::from_column_supports(5, &[vec![2, 3], vec![3, 4], vec![0, 4], vec![0, 1]])
                .unwrap();
        let union = masks_union(&[cyan, magenta]).unwrap();
        assert_eq!(&union, example1_observed().mask());
        assert_eq!(union.count_ones(), 16);
    }

    #[test]
    fn labels_round_trip_through_masks() {
        let labels = vec![0, 1, 2, 2, 1, 0];
        let a = AssignmentMasks::from_labels(2, 3, &labels, 2).unwrap();
        assert_eq!(a.labels(), labels);
        assert!(AssignmentMasks::from_labels(2, 3, &[3, 0, 0, 0, 0, 0], 2).is_err());
    }

    #[test]
    fn factorization_requires_orthonormal_basis() {
        let u = DenseMatrix::new(2, 1, vec![1.0, 1.0]).unwrap();
        let t = DenseMatrix::new(1, 2, vec![1.0, 2.0]).unwrap();
        assert!(LowRankFactorization::new(u, t.clone()).is_err());
        let s = std::f64::consts::FRAC_1_SQRT_2;
        let u = DenseMatrix::new(2, 1, vec![s, s]).unwrap();
        let f = LowRankFactorization::new(u, t).unwrap();
        assert_eq!(f.product().shape(), (2, 2));
    }
}
