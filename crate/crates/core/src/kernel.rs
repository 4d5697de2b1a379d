//! Kernel functions and bias-augmented Gram matrices.
//!
//! Every dual in this crate works with the augmented kernel
//! `K̃(x, y) = k(x, y) + 1`. For the linear kernel this is exactly the dot
//! product of rows with an appended ones column, so the linear and nonlinear
//! training paths share one assembly.

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::error::{MvtpmError, Result};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum KernelKind {
    /// `⟨x, y⟩`
    Linear,
    /// `exp(-‖x − y‖ / (2σ²))` with the unsquared Euclidean norm.
    GaussianPaper,
    /// `exp(-‖x − y‖² / (2σ²))`
    GaussianSquared,
}

impl KernelKind {
    pub fn is_gaussian(self) -> bool {
        !matches!(self, KernelKind::Linear)
    }

    pub fn name(self) -> &'static str {
        match self {
            KernelKind::Linear => "linear",
            KernelKind::GaussianPaper => "gaussian-paper",
            KernelKind::GaussianSquared => "gaussian-squared",
        }
    }
}

impl std::str::FromStr for KernelKind {
    type Err = MvtpmError;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "linear" => Ok(KernelKind::Linear),
            "gaussian-paper" | "gaussian" => Ok(KernelKind::GaussianPaper),
            "gaussian-squared" | "rbf" => Ok(KernelKind::GaussianSquared),
            other => Err(MvtpmError::invalid(format!("unknown kernel kind '{other}'"))),
        }
    }
}

impl std::fmt::Display for KernelKind {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.name())
    }
}

/// A kernel choice plus its width. `sigma` is ignored by the linear kernel.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct KernelSpec {
    pub kind: KernelKind,
    pub sigma: f64,
}

impl KernelSpec {
    pub fn linear() -> Self {
        KernelSpec {
            kind: KernelKind::Linear,
            sigma: 1.0,
        }
    }

    pub fn gaussian_paper(sigma: f64) -> Result<Self> {
        Self::new(KernelKind::GaussianPaper, sigma)
    }

    pub fn gaussian_squared(sigma: f64) -> Result<Self> {
        Self::new(KernelKind::GaussianSquared, sigma)
    }

    pub fn new(kind: KernelKind, sigma: f64) -> Result<Self> {
        let spec = KernelSpec { kind, sigma };
        spec.validate()?;
        Ok(spec)
    }

    pub fn validate(&self) -> Result<()> {
        if self.kind.is_gaussian() && !(self.sigma > 0.0 && self.sigma.is_finite()) {
            return Err(MvtpmError::invalid(format!(
                "gaussian kernel width must be positive and finite, got {}",
                self.sigma
            )));
        }
        Ok(())
    }

    /// Kernel value on two equal-length slices; no dimension check.
    #[inline]
    pub(crate) fn eval_unchecked(&self, x: &[f64], y: &[f64]) -> f64 {
        match self.kind {
            KernelKind::Linear => x.iter().zip(y).map(|(a, b)| a * b).sum(),
            KernelKind::GaussianPaper => {
                let d2: f64 = x.iter().zip(y).map(|(a, b)| (a - b) * (a - b)).sum();
                (-d2.sqrt() / (2.0 * self.sigma * self.sigma)).exp()
            }
            KernelKind::GaussianSquared => {
                let d2: f64 = x.iter().zip(y).map(|(a, b)| (a - b) * (a - b)).sum();
                (-d2 / (2.0 * self.sigma * self.sigma)).exp()
            }
        }
    }
}

/// `k(x, y)` for the given spec.
pub fn kernel_value(spec: &KernelSpec, x: &[f64], y: &[f64]) -> Result<f64> {
    spec.validate()?;
    if x.len() != y.len() {
        return Err(MvtpmError::invalid(format!(
            "kernel arguments have dimensions {} and {}",
            x.len(),
            y.len()
        )));
    }
    Ok(spec.eval_unchecked(x, y))
}

/// Rows of `x` as one contiguous row-major buffer.
pub(crate) fn row_major(x: &DMatrix<f64>) -> Vec<f64> {
    x.transpose().as_slice().to_vec()
}

/// `G[i, j] = k(X_i, Y_j) + 1` for an `n×d` matrix `X` and `p×d` matrix `Y`.
pub fn augmented_gram(spec: &KernelSpec, x: &DMatrix<f64>, y: &DMatrix<f64>) -> Result<DMatrix<f64>> {
    spec.validate()?;
    if x.ncols() != y.ncols() {
        return Err(MvtpmError::invalid(format!(
            "gram operands have feature dimensions {} and {}",
            x.ncols(),
            y.ncols()
        )));
    }
    let d = x.ncols();
    let (n, p) = (x.nrows(), y.nrows());
    let xr = row_major(x);
    let yr = row_major(y);
    let mut g = DMatrix::zeros(n, p);
    for j in 0..p {
        let yj = &yr[j * d..(j + 1) * d];
        for i in 0..n {
            g[(i, j)] = spec.eval_unchecked(&xr[i * d..(i + 1) * d], yj) + 1.0;
        }
    }
    Ok(g)
}

/// Symmetric `augmented_gram(spec, X, X)`; only the upper triangle is
/// evaluated and mirrored, so the result is exactly symmetric.
pub fn augmented_gram_symmetric(spec: &KernelSpec, x: &DMatrix<f64>) -> Result<DMatrix<f64>> {
    spec.validate()?;
    let d = x.ncols();
    let n = x.nrows();
    let xr = row_major(x);
    let mut g = DMatrix::zeros(n, n);
    for j in 0..n {
        let xj = &xr[j * d..(j + 1) * d];
        for i in 0..=j {
            let v = spec.eval_unchecked(&xr[i * d..(i + 1) * d], xj) + 1.0;
            g[(i, j)] = v;
            g[(j, i)] = v;
        }
    }
    Ok(g)
}

/// `[K̃(x, Y_0), …, K̃(x, Y_{p-1})]` for a single point against the rows of `Y`
/// given in row-major form. `x` must be non-empty.
pub(crate) fn augmented_row(spec: &KernelSpec, x: &[f64], y_rows: &[f64], out: &mut Vec<f64>) {
    let d = x.len();
    out.clear();
    out.extend(y_rows.chunks_exact(d).map(|y| spec.eval_unchecked(x, y) + 1.0));
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn random_matrix(rng: &mut ChaCha8Rng, n: usize, d: usize) -> DMatrix<f64> {
        DMatrix::from_fn(n, d, |_, _| rng.random_range(-2.0..2.0))
    }

    #[test]
    fn gaussian_paper_zero_distance_is_one() {
        let k = KernelSpec::gaussian_paper(0.37).unwrap();
        assert_eq!(kernel_value(&k, &[1.5, -2.0], &[1.5, -2.0]).unwrap(), 1.0);
    }

    #[test]
    fn gaussian_paper_uses_unsquared_norm() {
        let k = KernelSpec::gaussian_paper(1.0).unwrap();
        let v = kernel_value(&k, &[0.0], &[2.0]).unwrap();
        assert_abs_diff_eq!(v, (-1.0f64).exp(), epsilon = 1e-15);
        assert_abs_diff_eq!(v, 0.367879, epsilon = 1e-6);

        let sq = KernelSpec::gaussian_squared(1.0).unwrap();
        assert_abs_diff_eq!(kernel_value(&sq, &[0.0], &[2.0]).unwrap(), (-2.0f64).exp(), epsilon = 1e-15);
    }

    #[test]
    fn linear_is_dot_product() {
        let k = KernelSpec::linear();
        assert_eq!(kernel_value(&k, &[1.0, 2.0], &[3.0, 4.0]).unwrap(), 11.0);
    }

    #[test]
    fn dimension_mismatch_is_rejected() {
        let k = KernelSpec::linear();
        assert!(matches!(
            kernel_value(&k, &[1.0], &[1.0, 2.0]),
            Err(MvtpmError::InvalidArgument(_))
        ));
        let x = DMatrix::zeros(2, 3);
        let y = DMatrix::zeros(2, 2);
        assert!(augmented_gram(&k, &x, &y).is_err());
    }

    #[test]
    fn nonpositive_sigma_is_rejected() {
        assert!(KernelSpec::gaussian_paper(0.0).is_err());
        assert!(KernelSpec::gaussian_squared(-1.0).is_err());
        assert!(KernelSpec::gaussian_paper(f64::NAN).is_err());
    }

    #[test]
    fn augmented_gram_small_cases() {
        let x = DMatrix::from_row_slice(1, 2, &[1.0, 2.0]);
        let y = DMatrix::from_row_slice(1, 2, &[3.0, 4.0]);
        let g = augmented_gram(&KernelSpec::linear(), &x, &y).unwrap();
        assert_eq!(g[(0, 0)], 12.0);

        let k = KernelSpec::gaussian_paper(0.5).unwrap();
        let g = augmented_gram(&k, &x, &x).unwrap();
        assert_eq!(g[(0, 0)], 2.0);
    }

    #[test]
    fn augmented_gram_symmetric_with_kernel_diagonal() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let x = random_matrix(&mut rng, 5, 3);
        for kind in [KernelKind::Linear, KernelKind::GaussianPaper, KernelKind::GaussianSquared] {
            let k = KernelSpec::new(kind, 0.8).unwrap();
            let g = augmented_gram(&k, &x, &x).unwrap();
            for i in 0..5 {
                let xi: Vec<f64> = x.row(i).iter().copied().collect();
                assert_abs_diff_eq!(g[(i, i)], kernel_value(&k, &xi, &xi).unwrap() + 1.0, epsilon = 1e-12);
                for j in 0..5 {
                    assert_abs_diff_eq!(g[(i, j)], g[(j, i)], epsilon = 1e-12);
                }
            }
            let gs = augmented_gram_symmetric(&k, &x).unwrap();
            assert_abs_diff_eq!((g - gs).abs().max(), 0.0, epsilon = 1e-12);
        }
    }

    #[test]
    fn linear_gram_matches_ones_column_product() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let x = random_matrix(&mut rng, 6, 4);
        let y = random_matrix(&mut rng, 3, 4);
        let g = augmented_gram(&KernelSpec::linear(), &x, &y).unwrap();
        let xa = x.clone().insert_column(4, 1.0);
        let ya = y.clone().insert_column(4, 1.0);
        let expected = &xa * ya.transpose();
        assert_abs_diff_eq!((g - expected).abs().max(), 0.0, epsilon = 1e-12);
    }

    #[test]
    fn gaussian_grams_are_psd_up_to_roundoff() {
        let mut rng = ChaCha8Rng::seed_from_u64(29);
        for trial in 0..10 {
            let n = 4 + trial * 3;
            let x = random_matrix(&mut rng, n, 3);
            for kind in [KernelKind::GaussianPaper, KernelKind::GaussianSquared] {
                let k = KernelSpec::new(kind, 0.3 + 0.2 * trial as f64).unwrap();
                let g = augmented_gram_symmetric(&k, &x).unwrap();
                let min_eig = g.symmetric_eigen().eigenvalues.min();
                assert!(min_eig >= -1e-8 * n as f64, "{kind}: {min_eig}");
            }
        }
    }
}
