//! Dense vectors, norms, seeded randomness and Gaussians with a prescribed
//! covariance spectrum.

use std::fmt;
use std::ops::Deref;

use nalgebra::DMatrix;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::Serialize;

use crate::error::{Error, Result};

/// A finite dense real vector, used for gradients and iterates alike.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct GradientVector(Vec<f64>);

impl GradientVector {
    pub fn new(entries: Vec<f64>) -> Result<Self> {
        if entries.is_empty() {
            return Err(Error::InvalidArgument("empty vector".into()));
        }
        if let Some(i) = entries.iter().position(|x| !x.is_finite()) {
            return Err(Error::InvalidArgument(format!(
                "non-finite entry {} at index {i}",
                entries[i]
            )));
        }
        Ok(GradientVector(entries))
    }

    pub fn zeros(dim: usize) -> Self {
        GradientVector(vec![0.0; dim])
    }

    pub fn dim(&self) -> usize {
        self.0.len()
    }

    pub fn entries(&self) -> &[f64] {
        &self.0
    }

    pub fn into_inner(self) -> Vec<f64> {
        self.0
    }

    pub fn norm(&self, which: Norm) -> f64 {
        norm(&self.0, which)
    }

    pub fn scaled(&self, factor: f64) -> GradientVector {
        GradientVector(self.0.iter().map(|x| x * factor).collect())
    }
}

impl Deref for GradientVector {
    type Target = [f64];

    fn deref(&self) -> &[f64] {
        &self.0
    }
}

impl TryFrom<Vec<f64>> for GradientVector {
    type Error = Error;

    fn try_from(v: Vec<f64>) -> Result<Self> {
        GradientVector::new(v)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum Norm {
    L1,
    L2,
    Linf,
}

impl Norm {
    /// The dual norm: L1 and Linf are dual to each other, L2 is self-dual.
    pub fn dual(self) -> Norm {
        match self {
            Norm::L1 => Norm::Linf,
            Norm::L2 => Norm::L2,
            Norm::Linf => Norm::L1,
        }
    }
}

impl fmt::Display for Norm {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Norm::L1 => write!(f, "L1"),
            Norm::L2 => write!(f, "L2"),
            Norm::Linf => write!(f, "Linf"),
        }
    }
}

pub fn norm(v: &[f64], which: Norm) -> f64 {
    match which {
        Norm::L1 => v.iter().map(|x| x.abs()).sum(),
        Norm::L2 => v.iter().map(|x| x * x).sum::<f64>().sqrt(),
        Norm::Linf => v.iter().fold(0.0, |m, x| m.max(x.abs())),
    }
}

pub fn dot(a: &[f64], b: &[f64]) -> f64 {
    debug_assert_eq!(a.len(), b.len());
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

pub fn clip(x: f64, lo: f64, hi: f64) -> f64 {
    x.max(lo).min(hi)
}

/// Name recorded in run metadata for the generator behind [`SeededRng`].
pub const RNG_ALGORITHM: &str = "chacha8";

/// A reproducible random source: ChaCha8 keyed by `seed`, on a numbered stream.
///
/// Distinct streams of one seed are independent, which is how the harness
/// derives problem, holdout and training randomness from a single seed.
#[derive(Debug, Clone)]
pub struct SeededRng {
    seed: u64,
    stream: u64,
    inner: ChaCha8Rng,
}

impl SeededRng {
    pub fn new(seed: u64) -> Self {
        Self::with_stream(seed, 0)
    }

    pub fn with_stream(seed: u64, stream: u64) -> Self {
        let mut inner = ChaCha8Rng::seed_from_u64(seed);
        inner.set_stream(stream);
        SeededRng {
            seed,
            stream,
            inner,
        }
    }

    pub fn algorithm_id(&self) -> &'static str {
        RNG_ALGORITHM
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn stream(&self) -> u64 {
        self.stream
    }

    /// Number of 32-bit words consumed so far.
    pub fn position(&self) -> u128 {
        self.inner.get_word_pos()
    }

    pub fn standard_normal(&mut self) -> f64 {
        self.inner.sample(StandardNormal)
    }

    pub fn uniform(&mut self, lo: f64, hi: f64) -> f64 {
        self.inner.random_range(lo..hi)
    }

    pub fn rademacher(&mut self) -> f64 {
        if self.inner.random::<bool>() {
            1.0
        } else {
            -1.0
        }
    }

    pub fn index(&mut self, n: usize) -> usize {
        self.inner.random_range(0..n)
    }

    pub fn bool(&mut self) -> bool {
        self.inner.random()
    }
}

/// Σ = Q·diag(λ)·Qᵀ stored in factored form.
#[derive(Debug, Clone)]
pub struct CovarianceFactor {
    basis: DMatrix<f64>,
    eigenvalues: Vec<f64>,
    // Q·diag(√λ), row-major, cached for sampling.
    sqrt_factor: Vec<f64>,
}

impl CovarianceFactor {
    /// Builds a factor from an explicit basis and spectrum.
    ///
    /// Unlike [`make_covariance`], zero eigenvalues are accepted here so that
    /// degenerate (rank-deficient) covariances can be represented.
    pub fn from_parts(basis: DMatrix<f64>, eigenvalues: Vec<f64>) -> Result<Self> {
        let dim = eigenvalues.len();
        if basis.nrows() != dim || basis.ncols() != dim {
            return Err(Error::DimensionMismatch {
                expected: dim,
                got: basis.nrows(),
            });
        }
        if eigenvalues.iter().any(|l| !(l.is_finite() && *l >= 0.0)) {
            return Err(Error::InvalidArgument(
                "eigenvalues must be finite and nonnegative".into(),
            ));
        }
        if eigenvalues.windows(2).any(|w| w[0] < w[1]) {
            return Err(Error::InvalidArgument(
                "eigenvalues must be sorted descending".into(),
            ));
        }
        let gram = basis.transpose() * &basis;
        let off = (&gram - DMatrix::<f64>::identity(dim, dim)).amax();
        if off > 1e-10 {
            return Err(Error::InvalidArgument(format!(
                "basis is not orthonormal (max |QᵀQ - I| = {off:e})"
            )));
        }
        let mut sqrt_factor = Vec::with_capacity(dim * dim);
        for r in 0..dim {
            for (c, lambda) in eigenvalues.iter().enumerate() {
                sqrt_factor.push(basis[(r, c)] * lambda.sqrt());
            }
        }
        Ok(CovarianceFactor {
            basis,
            eigenvalues,
            sqrt_factor,
        })
    }

    pub fn dim(&self) -> usize {
        self.eigenvalues.len()
    }

    pub fn basis(&self) -> &DMatrix<f64> {
        &self.basis
    }

    pub fn eigenvalues(&self) -> &[f64] {
        &self.eigenvalues
    }

    pub fn eigenvector(&self, i: usize) -> Vec<f64> {
        self.basis.column(i).iter().copied().collect()
    }

    pub fn condition_number(&self) -> f64 {
        self.eigenvalues[0] / self.eigenvalues[self.dim() - 1]
    }

    /// Σ as a dense matrix.
    pub fn covariance(&self) -> DMatrix<f64> {
        let lambda = DMatrix::from_diagonal(&nalgebra::DVector::from_column_slice(
            &self.eigenvalues,
        ));
        &self.basis * lambda * self.basis.transpose()
    }

    /// xᵀΣx without forming Σ.
    pub fn quadratic_form(&self, x: &[f64]) -> f64 {
        let d = self.dim();
        (0..d)
            .map(|c| {
                let proj: f64 = (0..d).map(|r| self.basis[(r, c)] * x[r]).sum();
                self.eigenvalues[c] * proj * proj
            })
            .sum()
    }
}

/// Random orthogonal basis with an exponentially decaying spectrum
/// λ_i = r^(i-1), r = cond^(-1/(dim-1)), so λ_1 = 1 and λ_dim = 1/cond.
pub fn make_covariance(
    dim: usize,
    condition_number: f64,
    rng: &mut SeededRng,
) -> Result<CovarianceFactor> {
    if dim < 2 {
        return Err(Error::InvalidArgument(format!("dim must be >= 2, got {dim}")));
    }
    if !(condition_number >= 1.0) || !condition_number.is_finite() {
        return Err(Error::InvalidArgument(format!(
            "condition number must be >= 1, got {condition_number}"
        )));
    }
    let mut entries = Vec::with_capacity(dim * dim);
    for _ in 0..dim * dim {
        entries.push(rng.standard_normal());
    }
    let gaussian = DMatrix::from_row_slice(dim, dim, &entries);
    let qr = gaussian.qr();
    let mut q = qr.q();
    let r = qr.r();
    // Fix the sign ambiguity of QR: make diag(R) positive.
    for i in 0..dim {
        if r[(i, i)] < 0.0 {
            q.column_mut(i).neg_mut();
        }
    }
    let ratio = condition_number.powf(-1.0 / (dim as f64 - 1.0));
    let mut eigenvalues: Vec<f64> = (0..dim).map(|i| ratio.powi(i as i32)).collect();
    // Pin the last eigenvalue so the condition number is exact.
    eigenvalues[dim - 1] = 1.0 / condition_number;
    CovarianceFactor::from_parts(q, eigenvalues)
}

/// Draws x = Q·diag(√λ)·z with z standard normal.
pub fn sample_gaussian(cov: &CovarianceFactor, rng: &mut SeededRng) -> GradientVector {
    let d = cov.dim();
    let z: Vec<f64> = (0..d).map(|_| rng.standard_normal()).collect();
    let x = (0..d)
        .map(|r| dot(&cov.sqrt_factor[r * d..(r + 1) * d], &z))
        .collect();
    GradientVector(x)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use proptest::prelude::*;

    #[test]
    fn norms_of_small_vectors() {
        let v = GradientVector::new(vec![3.0, -4.0]).unwrap();
        assert_eq!(v.norm(Norm::L2), 5.0);
        assert_eq!(v.norm(Norm::L1), 7.0);
        assert_eq!(v.norm(Norm::Linf), 4.0);
        let z = GradientVector::zeros(2);
        for n in [Norm::L1, Norm::L2, Norm::Linf] {
            assert_eq!(z.norm(n), 0.0);
        }
        assert_eq!(Norm::Linf.dual(), Norm::L1);
        assert_eq!(Norm::L2.dual(), Norm::L2);
    }

    #[test]
    fn rejects_non_finite() {
        assert!(GradientVector::new(vec![1.0, f64::NAN]).is_err());
        assert!(GradientVector::new(vec![f64::INFINITY]).is_err());
        assert!(GradientVector::new(vec![]).is_err());
    }

    #[test]
    fn two_dim_spectrum() {
        let cov = make_covariance(2, 4.0, &mut SeededRng::new(1)).unwrap();
        assert_eq!(cov.eigenvalues(), &[1.0, 0.25]);
    }

    #[test]
    fn paper_scale_condition_number() {
        let cov = make_covariance(100, 750.0, &mut SeededRng::new(7)).unwrap();
        let l = cov.eigenvalues();
        assert_relative_eq!(l[99] / l[0], 1.0 / 750.0, max_relative = 1e-9);
        assert_relative_eq!(cov.condition_number(), 750.0, max_relative = 1e-9);
        assert!(l.windows(2).all(|w| w[0] > w[1]));
        let q = cov.basis();
        let err = (q.transpose() * q - DMatrix::<f64>::identity(100, 100)).amax();
        assert!(err < 1e-10, "orthonormality error {err:e}");
    }

    #[test]
    fn unit_condition_number_gives_identity() {
        let cov = make_covariance(3, 1.0, &mut SeededRng::new(3)).unwrap();
        assert_eq!(cov.eigenvalues(), &[1.0, 1.0, 1.0]);
        let sigma = cov.covariance();
        assert!((sigma - DMatrix::<f64>::identity(3, 3)).amax() < 1e-12);
    }

    #[test]
    fn invalid_covariance_arguments() {
        let mut rng = SeededRng::new(0);
        assert!(matches!(
            make_covariance(3, 0.5, &mut rng),
            Err(Error::InvalidArgument(_))
        ));
        assert!(make_covariance(1, 2.0, &mut rng).is_err());
    }

    #[test]
    fn qr_sign_convention_is_positive_diagonal() {
        // Rebuild the Gaussian matrix from the same stream and check QᵀG is upper
        // triangular with a positive diagonal.
        let mut rng = SeededRng::new(11);
        let cov = make_covariance(5, 10.0, &mut rng).unwrap();
        let mut rng = SeededRng::new(11);
        let entries: Vec<f64> = (0..25).map(|_| rng.standard_normal()).collect();
        let g = DMatrix::from_row_slice(5, 5, &entries);
        let r = cov.basis().transpose() * g;
        for i in 0..5 {
            assert!(r[(i, i)] > 0.0);
            for j in 0..i {
                assert!(r[(i, j)].abs() < 1e-10);
            }
        }
    }

    #[test]
    fn degenerate_direction_sampling() {
        let cov =
            CovarianceFactor::from_parts(DMatrix::identity(2, 2), vec![1.0, 0.0]).unwrap();
        let mut rng = SeededRng::new(5);
        for _ in 0..100 {
            let x = sample_gaussian(&cov, &mut rng);
            assert_eq!(x[1], 0.0);
        }
    }

    #[test]
    fn sampling_is_deterministic() {
        let cov = make_covariance(4, 9.0, &mut SeededRng::new(2)).unwrap();
        let a = sample_gaussian(&cov, &mut SeededRng::new(99));
        let b = sample_gaussian(&cov, &mut SeededRng::new(99));
        assert_eq!(a, b);
        let c = sample_gaussian(&cov, &mut SeededRng::with_stream(99, 1));
        assert_ne!(a, c);
    }

    #[test]
    fn identity_sample_covariance() {
        let cov =
            CovarianceFactor::from_parts(DMatrix::identity(3, 3), vec![1.0, 1.0, 1.0]).unwrap();
        let mut rng = SeededRng::new(2024);
        let n = 100_000;
        let mut acc = [[0.0; 3]; 3];
        for _ in 0..n {
            let x = sample_gaussian(&cov, &mut rng);
            for i in 0..3 {
                for j in 0..3 {
                    acc[i][j] += x[i] * x[j];
                }
            }
        }
        for (i, row) in acc.iter().enumerate() {
            for (j, s) in row.iter().enumerate() {
                let expected = if i == j { 1.0 } else { 0.0 };
                assert!((s / n as f64 - expected).abs() < 0.05);
            }
        }
    }

    #[test]
    fn sample_covariance_converges_to_sigma() {
        let cov = make_covariance(4, 20.0, &mut SeededRng::new(8)).unwrap();
        let sigma = cov.covariance();
        let mut rng = SeededRng::new(9);
        let n = 100_000;
        let mut acc = DMatrix::<f64>::zeros(4, 4);
        for _ in 0..n {
            let x = sample_gaussian(&cov, &mut rng);
            for i in 0..4 {
                for j in 0..4 {
                    acc[(i, j)] += x[i] * x[j];
                }
            }
        }
        let err = (acc / n as f64 - sigma).amax();
        let tol = 5.0 / (n as f64).sqrt() * cov.eigenvalues()[0];
        assert!(err <= tol, "err {err} > {tol}");
    }

    #[test]
    fn reconstructed_sigma_is_symmetric_psd() {
        let cov = make_covariance(6, 750.0, &mut SeededRng::new(4)).unwrap();
        let sigma = cov.covariance();
        assert!((&sigma - sigma.transpose()).amax() < 1e-10);
        let mut rng = SeededRng::new(5);
        for _ in 0..1000 {
            let x: Vec<f64> = (0..6).map(|_| rng.uniform(-10.0, 10.0)).collect();
            let xv = nalgebra::DVector::from_column_slice(&x);
            let q = (xv.transpose() * &sigma * &xv)[(0, 0)];
            assert!(q >= -1e-10);
            assert!(cov.quadratic_form(&x) >= 0.0);
            assert_relative_eq!(q, cov.quadratic_form(&x), max_relative = 1e-8, epsilon = 1e-10);
        }
    }

    proptest! {
        #[test]
        fn norm_triangle_and_homogeneity(
            a in prop::collection::vec(-1e3f64..1e3, 1..16),
            b_seed in any::<u64>(),
            s in -50.0f64..50.0,
        ) {
            let mut rng = SeededRng::new(b_seed);
            let b: Vec<f64> = a.iter().map(|_| rng.uniform(-1e3, 1e3)).collect();
            let sum: Vec<f64> = a.iter().zip(&b).map(|(x, y)| x + y).collect();
            let scaled: Vec<f64> = a.iter().map(|x| s * x).collect();
            for n in [Norm::L1, Norm::L2, Norm::Linf] {
                prop_assert!(norm(&sum, n) <= norm(&a, n) + norm(&b, n) + 1e-9);
                let lhs = norm(&scaled, n);
                let rhs = s.abs() * norm(&a, n);
                prop_assert!((lhs - rhs).abs() <= 1e-9 * (1.0 + rhs));
            }
        }
    }
}
