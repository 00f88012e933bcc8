//! Synthetic mixtures, sampling patterns and perturbed subspace estimates.

use nalgebra::DMatrix;
use rand::Rng;
use rand_distr::StandardNormal;

use crate::error::{MmcError, Result};
use crate::model::{check_orthonormal, AssignmentMasks, DenseMatrix, Mask, MixtureProblem, ObservedMixture};
use crate::rng::{substream, Stream};

const TAG_BASIS: u64 = 1;
const TAG_COEF: u64 = 2;
const TAG_OBS: u64 = 3;
const TAG_HRMC: u64 = 4;

/// Parameters of one synthetic mixture.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SynthConfig {
    pub d: usize,
    pub n: usize,
    pub r: usize,
    pub k: usize,
    /// Probability that an entry is observed at all; each component then
    /// receives it with probability `p / K`.
    pub p: f64,
    /// Target initialization distance.
    pub delta: f64,
    pub seed: u64,
}

impl SynthConfig {
    pub fn validate(&self) -> Result<()> {
        if self.d == 0 || self.n == 0 || self.r == 0 {
            return Err(MmcError::InvalidParameter("d, n and r must be positive".into()));
        }
        if self.r > self.d.min(self.n) {
            return Err(MmcError::InvalidParameter(format!(
                "rank {} exceeds min(d, n) = {}",
                self.r,
                self.d.min(self.n)
            )));
        }
        if self.k == 0 || self.k > u8::MAX as usize {
            return Err(MmcError::InvalidParameter(format!(
                "K must be in 1..=255, got {}",
                self.k
            )));
        }
        if !(0.0..=1.0).contains(&self.p) {
            return Err(MmcError::InvalidParameter(format!("p = {} outside [0, 1]", self.p)));
        }
        if !(0.0..=1.0).contains(&self.delta) {
            return Err(MmcError::InvalidParameter(format!(
                "delta = {} outside [0, 1]",
                self.delta
            )));
        }
        Ok(())
    }
}

pub fn gaussian_matrix(rows: usize, cols: usize, rng: &mut Stream) -> DMatrix<f64> {
    DMatrix::from_fn(rows, cols, |_, _| rng.sample(StandardNormal))
}

/// Random `d×r` orthonormal basis (QR of a Gaussian matrix).
pub fn random_orthonormal(d: usize, r: usize, rng: &mut Stream) -> DMatrix<f64> {
    crate::linalg::orthonormalize(&gaussian_matrix(d, r, rng))
}

/// Product of two independent standard-normal factors, `d×r` and `r×n`.
pub fn gaussian_low_rank(d: usize, n: usize, r: usize, seed: u64, tag: u64) -> DenseMatrix {
    let u = gaussian_matrix(d, r, &mut substream(seed, &[TAG_BASIS, tag]));
    let theta = gaussian_matrix(r, n, &mut substream(seed, &[TAG_COEF, tag]));
    DenseMatrix::from_nalgebra(&(u * theta)).expect("finite product")
}

fn components(cfg: &SynthConfig) -> Vec<DenseMatrix> {
    (0..cfg.k)
        .map(|k| gaussian_low_rank(cfg.d, cfg.n, cfg.r, cfg.seed, k as u64))
        .collect()
}

fn assemble(cfg: &SynthConfig, truth: Vec<DenseMatrix>, labels: Vec<u8>) -> Result<MixtureProblem> {
    let (d, n) = (cfg.d, cfg.n);
    let assignments = AssignmentMasks::from_labels(d, n, &labels, cfg.k)?;
    let values = DenseMatrix::from_fn(d, n, |i, j| match labels[i * n + j] {
        0 => 0.0,
        l => truth[l as usize - 1].get(i, j),
    })?;
    let observed = ObservedMixture::new(values, assignments.union())?;
    MixtureProblem::new(truth, assignments, observed, cfg.r, cfg.seed)
}

/// Entry-level mixture: each entry is missing with probability `1 − p` and
/// otherwise taken from component `k` with probability `p / K`.
pub fn generate_mixture(cfg: &SynthConfig) -> Result<MixtureProblem> {
    cfg.validate()?;
    let (d, n, k) = (cfg.d, cfg.n, cfg.k);
    let truth = components(cfg);
    let mut labels = vec![0u8; d * n];
    for j in 0..n {
        let mut rng = substream(cfg.seed, &[TAG_OBS, j as u64]);
        for i in 0..d {
            let u: f64 = rng.random();
            if u < cfg.p {
                let c = ((u * k as f64 / cfg.p) as usize).min(k - 1);
                labels[i * n + j] = (c + 1) as u8;
            }
        }
    }
    assemble(cfg, truth, labels)
}

/// Column-level mixture: every column comes from one component chosen
/// uniformly, and its entries are observed with probability `p`.
pub fn generate_hrmc(cfg: &SynthConfig) -> Result<MixtureProblem> {
    cfg.validate()?;
    let (d, n, k) = (cfg.d, cfg.n, cfg.k);
    let truth = components(cfg);
    let mut labels = vec![0u8; d * n];
    for j in 0..n {
        let mut rng = substream(cfg.seed, &[TAG_HRMC, j as u64]);
        let c = rng.random_range(0..k);
        for i in 0..d {
            if rng.random::<f64>() < cfg.p {
                labels[i * n + j] = (c + 1) as u8;
            }
        }
    }
    assemble(cfg, truth, labels)
}

/// Orthonormal bases of the true components, from their leading singular vectors.
pub fn true_bases(problem: &MixtureProblem) -> Vec<DenseMatrix> {
    problem
        .truth()
        .iter()
        .map(|x| crate::lrmc::leading_subspace(x, problem.rank()).map(|s| s.basis))
        .collect::<Result<Vec<_>>>()
        .expect("rank validated at construction")
}

/// Mask with exactly `m` ones per column, positions uniform without
/// replacement and independent across columns.
pub fn sample_fixed_m(d: usize, n_cols: usize, m: usize, seed: u64) -> Result<Mask> {
    if m > d {
        return Err(MmcError::InvalidParameter(format!("m = {m} exceeds d = {d}")));
    }
    let supports: Vec<Vec<usize>> = (0..n_cols)
        .map(|j| {
            let mut rng = substream(seed, &[j as u64]);
            rand::seq::index::sample(&mut rng, d, m).into_vec()
        })
        .collect();
    Mask::from_column_supports(d, &supports)
}

/// Bernoulli(`p`) mask, one stream per column.
pub fn sample_bernoulli(d: usize, n_cols: usize, p: f64, seed: u64) -> Result<Mask> {
    if !(0.0..=1.0).contains(&p) {
        return Err(MmcError::InvalidParameter(format!("p = {p} outside [0, 1]")));
    }
    let mut bits = vec![0u8; d * n_cols];
    for j in 0..n_cols {
        let mut rng = substream(seed, &[j as u64]);
        for i in 0..d {
            if rng.random::<f64>() < p {
                bits[i * n_cols + j] = 1;
            }
        }
    }
    Mask::new(d, n_cols, bits)
}

/// `‖AAᵀ − BBᵀ‖_F / √(2r)` for orthonormal `A`, `B` of equal shape.
///
/// Evaluated as `‖B − AAᵀB‖_F / √r`, which equals the projector form and
/// keeps full relative precision near zero. Averaged over both argument
/// orders so the result is exactly symmetric.
pub fn subspace_distance(a: &DenseMatrix, b: &DenseMatrix) -> Result<f64> {
    if a.shape() != b.shape() {
        return Err(MmcError::Shape(format!("{:?} vs {:?}", a.shape(), b.shape())));
    }
    let (a, b) = (a.to_nalgebra(), b.to_nalgebra());
    let r = a.ncols() as f64;
    let one_way = |x: &DMatrix<f64>, y: &DMatrix<f64>| (y - x * (x.transpose() * y)).norm_squared();
    let sq = 0.5 * (one_way(&a, &b) + one_way(&b, &a));
    Ok((sq / r).sqrt().min(1.0))
}

/// Largest normalized distance reachable from a `d×r` basis.
pub fn max_distance(d: usize, r: usize) -> f64 {
    let q = r.min(d.saturating_sub(r));
    (q as f64 / r as f64).sqrt()
}

/// Moves each basis along a Grassmannian geodesic towards a random subspace
/// orthogonal to it, stopping at normalized distance `delta`.
///
/// The geodesic rotates `q = min(r, d − r)` directions of a randomly rotated
/// copy of the basis by a common angle `t`, which gives distance
/// `sin(t)·√(q/r)`; `t` is solved for in closed form and the result is
/// re-measured.
pub fn perturb_subspaces(bases: &[DenseMatrix], delta: f64, seed: u64) -> Result<Vec<DenseMatrix>> {
    if !(0.0..=1.0).contains(&delta) {
        return Err(MmcError::InvalidParameter(format!("delta = {delta} outside [0, 1]")));
    }
    bases
        .iter()
        .enumerate()
        .map(|(k, basis)| {
            check_orthonormal(basis, 1e-8)?;
            perturb_one(basis, delta, &mut substream(seed, &[k as u64]))
        })
        .collect()
}

fn perturb_one(basis: &DenseMatrix, delta: f64, rng: &mut Stream) -> Result<DenseMatrix> {
    let (d, r) = basis.shape();
    if delta == 0.0 {
        return Ok(basis.clone());
    }
    let q = r.min(d - r);
    let reach = max_distance(d, r);
    if delta > reach + 1e-12 {
        return Err(MmcError::InvalidParameter(format!(
            "delta = {delta} unreachable for a {d}x{r} basis (max {reach:.6})"
        )));
    }
    let a = basis.to_nalgebra() * random_orthonormal(r, r, rng);
    let mut w = gaussian_matrix(d, q, rng);
    for _ in 0..2 {
        w -= &a * (a.transpose() * &w);
    }
    let b = crate::linalg::orthonormalize(&w);
    let t = (delta / reach).min(1.0).asin();
    let (c, s) = (t.cos(), t.sin());
    let mut out = a.clone();
    for i in 0..q {
        let col = a.column(i) * c + b.column(i) * s;
        out.set_column(i, &col);
    }
    let out = DenseMatrix::from_nalgebra(&out)?;
    let measured = subspace_distance(basis, &out)?;
    if (measured - delta).abs() > 1e-6 {
        return Err(MmcError::Precondition(format!(
            "perturbation landed at distance {measured}, wanted {delta}"
        )));
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn cfg(d: usize, n: usize, r: usize, k: usize, p: f64, seed: u64) -> SynthConfig {
        SynthConfig {
            d,
            n,
            r,
            k,
            p,
            delta: 0.0,
            seed,
        }
    }

    fn random_basis(d: usize, r: usize, seed: u64) -> DenseMatrix {
        DenseMatrix::from_nalgebra(&random_orthonormal(d, r, &mut substream(seed, &[99]))).unwrap()
    }

    #[test]
    fn generation_is_deterministic() {
        let c = cfg(100, 100, 5, 2, 0.8, 11);
        assert_eq!(generate_mixture(&c).unwrap(), generate_mixture(&c).unwrap());
        let other = generate_mixture(&SynthConfig { seed: 12, ..c }).unwrap();
        assert_ne!(generate_mixture(&c).unwrap(), other);
    }

    #[test]
    fn components_have_exact_rank() {
        let p = generate_mixture(&cfg(30, 20, 4, 3, 0.5, 1)).unwrap();
        for x in p.truth() {
            assert_eq!(crate::linalg::numerical_rank(x, 1e-10), 4);
        }
    }

    #[test]
    fn invalid_configs_are_rejected() {
        assert!(generate_mixture(&cfg(5, 5, 6, 2, 0.5, 0)).is_err());
        assert!(generate_mixture(&cfg(5, 5, 2, 2, 1.5, 0)).is_err());
        assert!(generate_mixture(&cfg(5, 5, 2, 0, 0.5, 0)).is_err());
    }

    #[test]
    fn fill_fraction_concentrates() {
        // Hoeffding: P(|fraction − 0.25| ≥ 0.02) ≤ 2·exp(−2·N·0.02²) with N = 40000.
        let tail = 2.0 * (-2.0 * 40000.0 * 0.02f64.powi(2)).exp();
        assert!(tail < 1e-13);
        let p = generate_mixture(&cfg(200, 200, 2, 2, 0.5, 3)).unwrap();
        for m in p.assignments().masks() {
            let frac = m.count_ones() as f64 / 40000.0;
            assert!((0.23..=0.27).contains(&frac), "fill {frac}");
        }
    }

    #[test]
    fn p_zero_observes_nothing_and_p_one_everything() {
        let none = generate_mixture(&cfg(10, 10, 2, 2, 0.0, 5)).unwrap();
        assert_eq!(none.observed().num_observed(), 0);
        let all = generate_mixture(&cfg(10, 10, 2, 2, 1.0, 5)).unwrap();
        assert_eq!(all.observed().num_observed(), 100);
    }

    #[test]
    fn hrmc_columns_come_from_one_component() {
        let p = generate_hrmc(&cfg(20, 30, 2, 3, 0.7, 9)).unwrap();
        let labels = p.assignments().labels();
        for j in 0..30 {
            let mut seen: Vec<u8> = (0..20).map(|i| labels[i * 30 + j]).filter(|&l| l > 0).collect();
            seen.dedup();
            assert!(seen.len() <= 1);
        }
    }

    #[test]
    fn fixed_m_columns() {
        let full = sample_fixed_m(6, 4, 6, 1).unwrap();
        assert_eq!(full, Mask::ones(6, 4));
        let m = sample_fixed_m(30, 50, 10, 2).unwrap();
        for j in 0..50 {
            assert_eq!(m.column_count(j), 10);
        }
        assert!(sample_fixed_m(3, 2, 4, 0).is_err());
    }

    #[test]
    fn fixed_m_row_marginals() {
        // Rows are hit independently across columns with probability 1/3, so
        // Hoeffding bounds each row's miss probability by 2·exp(−2·10⁴·0.025²).
        let tail = 2.0 * (-2.0 * 1e4 * 0.025f64.powi(2)).exp();
        assert!(30.0 * tail < 1e-3);
        let m = sample_fixed_m(30, 10_000, 10, 4).unwrap();
        for i in 0..30 {
            let frac = (0..10_000).filter(|&j| m.get(i, j)).count() as f64 / 1e4;
            assert!((frac - 1.0 / 3.0).abs() <= 0.025, "row {i}: {frac}");
        }
    }

    #[test]
    fn distance_hand_computed() {
        let s = std::f64::consts::FRAC_1_SQRT_2;
        let a = DenseMatrix::new(4, 1, vec![1.0, 0.0, 0.0, 0.0]).unwrap();
        let b = DenseMatrix::new(4, 1, vec![s, s, 0.0, 0.0]).unwrap();
        // P_A − P_B = [[1/2, −1/2], [−1/2, −1/2]] padded: Frobenius norm 1, / √2.
        assert!((subspace_distance(&a, &b).unwrap() - s).abs() < 1e-12);
        assert_eq!(subspace_distance(&a, &a).unwrap(), 0.0);
        let c = DenseMatrix::new(4, 1, vec![0.0, 0.0, 1.0, 0.0]).unwrap();
        assert!((subspace_distance(&a, &c).unwrap() - 1.0).abs() < 1e-12);
        assert!(subspace_distance(&a, &random_basis(4, 2, 0)).is_err());
    }

    #[test]
    fn distance_ignores_rotation_within_span() {
        let a = random_basis(12, 3, 1);
        let rot = random_orthonormal(3, 3, &mut substream(5, &[]));
        let ar = DenseMatrix::from_nalgebra(&(a.to_nalgebra() * rot)).unwrap();
        assert!(subspace_distance(&a, &ar).unwrap() < 1e-12);
    }

    #[test]
    fn perturbation_hits_requested_distance() {
        let bases = vec![random_basis(20, 3, 2), random_basis(20, 3, 3)];
        assert_eq!(perturb_subspaces(&bases, 0.0, 1).unwrap(), bases);
        for &delta in &[0.1, 0.5, 0.9, 1.0] {
            let out = perturb_subspaces(&bases, delta, 7).unwrap();
            for (a, b) in bases.iter().zip(&out) {
                check_orthonormal(b, 1e-10).unwrap();
                assert!((subspace_distance(a, b).unwrap() - delta).abs() < 1e-6);
            }
        }
        let far = perturb_subspaces(&bases, 1.0, 7).unwrap();
        let overlap = bases[0].to_nalgebra().transpose() * far[0].to_nalgebra();
        assert!(overlap.norm() < 1e-10);
    }

    #[test]
    fn perturbation_is_monotone() {
        let bases = vec![random_basis(15, 4, 8)];
        let mut last = 0.0;
        for step in 0..=20 {
            let delta = step as f64 / 20.0;
            let d = subspace_distance(&bases[0], &perturb_subspaces(&bases, delta, 3).unwrap()[0]).unwrap();
            assert!(d + 1e-9 >= last);
            last = d;
        }
    }

    #[test]
    fn perturbation_rejects_bad_input() {
        let skew = DenseMatrix::new(3, 1, vec![1.0, 1.0, 0.0]).unwrap();
        assert!(perturb_subspaces(&[skew], 0.2, 0).is_err());
        let b = random_basis(5, 4, 1);
        assert!(perturb_subspaces(&[b], 0.9, 0).is_err());
    }
}
