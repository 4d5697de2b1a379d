//! Per-feature scaling and PCA, the latter used to synthesize view B from a
//! single-view dataset.

use nalgebra::{DMatrix, DVector, SymmetricEigen};
use serde::{Deserialize, Serialize};

use crate::error::{MvtpmError, Result};

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ScalingMode {
    None,
    #[default]
    Minmax01,
    Zscore,
}

impl std::str::FromStr for ScalingMode {
    type Err = MvtpmError;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "none" => Ok(ScalingMode::None),
            "minmax01" => Ok(ScalingMode::Minmax01),
            "zscore" => Ok(ScalingMode::Zscore),
            other => Err(MvtpmError::invalid(format!("unknown scaling mode '{other}'"))),
        }
    }
}

/// Affine per-feature map `x ↦ (x − offset)·scale`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Scaler {
    pub mode: ScalingMode,
    pub offsets: Vec<f64>,
    pub scales: Vec<f64>,
}

impl Scaler {
    pub fn identity(dim: usize) -> Self {
        Scaler {
            mode: ScalingMode::None,
            offsets: vec![0.0; dim],
            scales: vec![1.0; dim],
        }
    }

    /// Learns per-feature statistics. Constant features get scale 0, so they
    /// map to 0 under both minmax01 and zscore.
    pub fn fit(x: &DMatrix<f64>, mode: ScalingMode) -> Result<Self> {
        let d = x.ncols();
        if mode == ScalingMode::None {
            return Ok(Self::identity(d));
        }
        if x.nrows() == 0 {
            return Err(MvtpmError::invalid("cannot fit a scaler on zero rows"));
        }
        if x.iter().any(|v| !v.is_finite()) {
            return Err(MvtpmError::invalid("non-finite feature value"));
        }
        let mut offsets = Vec::with_capacity(d);
        let mut scales = Vec::with_capacity(d);
        for col in x.column_iter() {
            let (off, spread) = match mode {
                ScalingMode::Minmax01 => {
                    let lo = col.min();
                    (lo, col.max() - lo)
                }
                ScalingMode::Zscore => {
                    let n = col.len() as f64;
                    let mean = col.sum() / n;
                    let var = if col.len() > 1 {
                        col.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / (n - 1.0)
                    } else {
                        0.0
                    };
                    (mean, var.sqrt())
                }
                ScalingMode::None => unreachable!(),
            };
            offsets.push(off);
            scales.push(if spread > 0.0 { 1.0 / spread } else { 0.0 });
        }
        Ok(Scaler { mode, offsets, scales })
    }

    pub fn dim(&self) -> usize {
        self.offsets.len()
    }

    pub fn apply(&self, x: &DMatrix<f64>) -> Result<DMatrix<f64>> {
        if x.ncols() != self.dim() {
            return Err(MvtpmError::invalid(format!(
                "scaler fitted on {} features, input has {}",
                self.dim(),
                x.ncols()
            )));
        }
        Ok(DMatrix::from_fn(x.nrows(), x.ncols(), |i, j| (x[(i, j)] - self.offsets[j]) * self.scales[j]))
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PcaBasis {
    #[serde(with = "crate::serde_matrix::vector")]
    pub mean: DVector<f64>,
    /// `r×d`, orthonormal rows.
    #[serde(with = "crate::serde_matrix")]
    pub components: DMatrix<f64>,
    /// Variance of each retained component (covariance eigenvalues).
    pub eigenvalues: Vec<f64>,
    pub explained_variance_ratio: Vec<f64>,
    pub threshold: f64,
}

/// Principal components retaining at least `threshold` of the total variance.
pub fn fit_pca(x: &DMatrix<f64>, threshold: f64) -> Result<PcaBasis> {
    let (n, d) = x.shape();
    if n < 2 {
        return Err(MvtpmError::invalid(format!("PCA needs at least 2 rows, got {n}")));
    }
    if !(threshold > 0.0 && threshold <= 1.0) {
        return Err(MvtpmError::invalid(format!("PCA threshold must lie in (0, 1], got {threshold}")));
    }
    if x.iter().any(|v| !v.is_finite()) {
        return Err(MvtpmError::invalid("non-finite feature value"));
    }
    let mean = x.row_mean().transpose();
    let centered = DMatrix::from_fn(n, d, |i, j| x[(i, j)] - mean[j]);
    let mut cov = centered.tr_mul(&centered) / (n as f64 - 1.0);
    for i in 0..d {
        for j in 0..i {
            let v = 0.5 * (cov[(i, j)] + cov[(j, i)]);
            cov[(i, j)] = v;
            cov[(j, i)] = v;
        }
    }
    let eig = SymmetricEigen::new(cov);
    let mut order: Vec<usize> = (0..d).collect();
    order.sort_by(|&a, &b| eig.eigenvalues[b].total_cmp(&eig.eigenvalues[a]).then(a.cmp(&b)));
    let values: Vec<f64> = order.iter().map(|&k| eig.eigenvalues[k].max(0.0)).collect();
    let total: f64 = values.iter().sum();
    if !(total > 0.0) {
        return Err(MvtpmError::Numerical("PCA input has zero total variance".into()));
    }

    let mut r = 0;
    let mut cumulative = 0.0;
    while r < d {
        cumulative += values[r];
        r += 1;
        if cumulative / total >= threshold - 1e-12 {
            break;
        }
    }

    let mut components = DMatrix::zeros(r, d);
    for (row, &k) in order.iter().take(r).enumerate() {
        let v = eig.eigenvectors.column(k);
        let lead = v.iter().copied().enumerate().fold((0, 0.0f64), |best, (i, x)| if x.abs() > best.1.abs() { (i, x) } else { best });
        let sign = if v[lead.0] < 0.0 { -1.0 } else { 1.0 };
        for j in 0..d {
            components[(row, j)] = sign * v[j];
        }
    }
    Ok(PcaBasis {
        mean,
        components,
        eigenvalues: values[..r].to_vec(),
        explained_variance_ratio: values[..r].iter().map(|v| v / total).collect(),
        threshold,
    })
}

/// `(X − mean)·componentsᵀ`.
pub fn project(basis: &PcaBasis, x: &DMatrix<f64>) -> Result<DMatrix<f64>> {
    let d = basis.mean.len();
    if x.ncols() != d {
        return Err(MvtpmError::invalid(format!("PCA basis has dimension {d}, input has {}", x.ncols())));
    }
    let centered = DMatrix::from_fn(x.nrows(), d, |i, j| x[(i, j)] - basis.mean[j]);
    Ok(centered * basis.components.transpose())
}

/// Inverse of [`project`] on the retained subspace.
pub fn back_project(basis: &PcaBasis, y: &DMatrix<f64>) -> Result<DMatrix<f64>> {
    if y.ncols() != basis.components.nrows() {
        return Err(MvtpmError::invalid(format!(
            "basis keeps {} components, input has {}",
            basis.components.nrows(),
            y.ncols()
        )));
    }
    let mut x = y * &basis.components;
    for mut row in x.row_iter_mut() {
        row += basis.mean.transpose();
    }
    Ok(x)
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct PreprocessConfig {
    pub scaling: ScalingMode,
    /// When set and no view B is supplied, view B is the PCA projection of
    /// the scaled view A.
    pub pca_threshold: Option<f64>,
}

/// Fitted preprocessing for both views.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Preprocessor {
    pub scaler_a: Scaler,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub pca: Option<PcaBasis>,
    /// Applied to the supplied view B, or to the PCA scores when view B is
    /// synthesized.
    pub scaler_b: Scaler,
}

impl Preprocessor {
    pub fn identity(dim_a: usize, dim_b: usize) -> Self {
        Preprocessor {
            scaler_a: Scaler::identity(dim_a),
            pca: None,
            scaler_b: Scaler::identity(dim_b),
        }
    }

    pub fn fit(view_a: &DMatrix<f64>, view_b: Option<&DMatrix<f64>>, cfg: &PreprocessConfig) -> Result<Self> {
        let scaler_a = Scaler::fit(view_a, cfg.scaling)?;
        match view_b {
            Some(b) => Ok(Preprocessor {
                scaler_a,
                pca: None,
                scaler_b: Scaler::fit(b, cfg.scaling)?,
            }),
            None => {
                let threshold = cfg
                    .pca_threshold
                    .ok_or_else(|| MvtpmError::invalid("view B is absent and no PCA threshold is configured"))?;
                let scaled = scaler_a.apply(view_a)?;
                let basis = fit_pca(&scaled, threshold)?;
                let scores = project(&basis, &scaled)?;
                Ok(Preprocessor {
                    scaler_a,
                    pca: Some(basis),
                    scaler_b: Scaler::fit(&scores, cfg.scaling)?,
                })
            }
        }
    }

    pub fn pca(&self) -> Option<&PcaBasis> {
        self.pca.as_ref()
    }

    /// Output feature dimensions `(dA, dB)`.
    pub fn output_dims(&self) -> (usize, usize) {
        (self.scaler_a.dim(), self.scaler_b.dim())
    }

    /// Both views after preprocessing. A PCA-fitted preprocessor requires view
    /// B to be absent, and a plain one requires it present.
    pub fn transform(&self, view_a: &DMatrix<f64>, view_b: Option<&DMatrix<f64>>) -> Result<(DMatrix<f64>, DMatrix<f64>)> {
        let a = self.scaler_a.apply(view_a)?;
        let b = match (&self.pca, view_b) {
            (Some(basis), None) => self.scaler_b.apply(&project(basis, &a)?)?,
            (None, Some(b)) => self.scaler_b.apply(b)?,
            (Some(_), Some(_)) => {
                return Err(MvtpmError::invalid("view B was synthesized by PCA during training; do not supply a view-B file"))
            }
            (None, None) => {
                return Err(MvtpmError::invalid("view B is absent and the model has no PCA basis to synthesize it"))
            }
        };
        if a.nrows() != b.nrows() {
            return Err(MvtpmError::invalid(format!(
                "view A has {} rows but view B has {}",
                a.nrows(),
                b.nrows()
            )));
        }
        Ok((a, b))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;
    use proptest::prelude::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn random(seed: u64, n: usize, d: usize) -> DMatrix<f64> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        DMatrix::from_fn(n, d, |_, _| rng.random_range(-3.0..3.0))
    }

    #[test]
    fn single_direction_of_variance() {
        let x = DMatrix::from_row_slice(4, 2, &[0.0, 5.0, 1.0, 5.0, 2.0, 5.0, 3.0, 5.0]);
        let b = fit_pca(&x, 0.95).unwrap();
        assert_eq!(b.components.nrows(), 1);
        assert_abs_diff_eq!(b.components[(0, 0)], 1.0, epsilon = 1e-12);
        assert_abs_diff_eq!(b.components[(0, 1)], 0.0, epsilon = 1e-12);
    }

    #[test]
    fn full_retention_reconstructs() {
        let x = random(1, 12, 4);
        let b = fit_pca(&x, 1.0).unwrap();
        assert_eq!(b.components.nrows(), 4);
        let y = project(&b, &x).unwrap();
        let back = back_project(&b, &y).unwrap();
        assert_abs_diff_eq!((back - &x).abs().max(), 0.0, epsilon = 1e-8);
        for i in 0..12 {
            for j in 0..12 {
                let dx = (x.row(i) - x.row(j)).norm();
                let dy = (y.row(i) - y.row(j)).norm();
                assert_abs_diff_eq!(dx, dy, epsilon = 1e-8);
            }
        }
    }

    #[test]
    fn ratios_match_svd_oracle() {
        let x = random(2, 10, 4);
        let b = fit_pca(&x, 1.0).unwrap();
        let mean = x.row_mean();
        let mut c = x.clone();
        for mut row in c.row_iter_mut() {
            row -= &mean;
        }
        let mut sv: Vec<f64> = c.svd(false, false).singular_values.iter().map(|s| s * s / 9.0).collect();
        sv.sort_by(|a, b| b.total_cmp(a));
        let total: f64 = sv.iter().sum();
        for (k, r) in b.explained_variance_ratio.iter().enumerate() {
            assert_abs_diff_eq!(*r, sv[k] / total, epsilon = 1e-8);
            assert_abs_diff_eq!(b.eigenvalues[k], sv[k], epsilon = 1e-8);
        }
    }

    #[test]
    fn minimal_component_count() {
        let x = random(3, 30, 5);
        for t in [0.3, 0.6, 0.9, 0.99] {
            let b = fit_pca(&x, t).unwrap();
            let full = fit_pca(&x, 1.0).unwrap();
            let r = b.components.nrows();
            let cum: f64 = full.explained_variance_ratio[..r].iter().sum();
            assert!(cum >= t - 1e-12);
            if r > 1 {
                let prev: f64 = full.explained_variance_ratio[..r - 1].iter().sum();
                assert!(prev < t);
            }
        }
    }

    #[test]
    fn orthonormal_components_and_sign_convention() {
        let b = fit_pca(&random(4, 20, 5), 0.9).unwrap();
        let gram = &b.components * b.components.transpose();
        let r = gram.nrows();
        assert_abs_diff_eq!((gram - DMatrix::identity(r, r)).abs().max(), 0.0, epsilon = 1e-8);
        for row in b.components.row_iter() {
            let lead = row.iter().copied().fold(0.0f64, |a, v| if v.abs() > a.abs() { v } else { a });
            assert!(lead > 0.0);
        }
        let mut pts = b.components.clone();
        for mut row in pts.row_iter_mut() {
            row += b.mean.transpose();
        }
        let p = project(&b, &pts).unwrap();
        assert_abs_diff_eq!((p - DMatrix::identity(r, r)).abs().max(), 0.0, epsilon = 1e-8);
    }

    #[test]
    fn projection_variances_are_eigenvalues() {
        let x = random(5, 25, 4);
        let b = fit_pca(&x, 0.8).unwrap();
        let y = project(&b, &x).unwrap();
        for (k, col) in y.column_iter().enumerate() {
            assert_abs_diff_eq!(col.mean(), 0.0, epsilon = 1e-10);
            let var = col.iter().map(|v| v * v).sum::<f64>() / 24.0;
            assert_abs_diff_eq!(var, b.eigenvalues[k], epsilon = 1e-8);
        }
    }

    #[test]
    fn mean_rows_project_to_zero() {
        let x = random(6, 8, 3);
        let b = fit_pca(&x, 0.95).unwrap();
        let means = DMatrix::from_fn(3, 3, |_, j| b.mean[j]);
        assert_abs_diff_eq!(project(&b, &means).unwrap().abs().max(), 0.0, epsilon = 1e-12);
        assert!(project(&b, &DMatrix::zeros(2, 4)).is_err());
    }

    #[test]
    fn pca_errors_and_determinism() {
        assert!(fit_pca(&DMatrix::zeros(1, 3), 0.9).is_err());
        assert!(fit_pca(&DMatrix::from_element(5, 2, 1.0), 0.9).is_err());
        let x = random(7, 15, 4);
        let a = fit_pca(&x, 0.9).unwrap();
        let b = fit_pca(&x, 0.9).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn preprocessor_requires_a_view_b_source() {
        let x = random(8, 10, 3);
        let cfg = PreprocessConfig {
            scaling: ScalingMode::Minmax01,
            pca_threshold: Some(0.9),
        };
        let pre = Preprocessor::fit(&x, None, &cfg).unwrap();
        assert!(pre.transform(&x, None).is_ok());
        assert!(pre.transform(&x, Some(&x)).is_err());
        let plain = Preprocessor::fit(&x, Some(&x), &cfg).unwrap();
        assert!(plain.transform(&x, None).is_err());
    }

    proptest! {
        #[test]
        fn minmax_maps_training_data_into_unit_box(seed in 0u64..1000, n in 1usize..20, d in 1usize..5) {
            let mut x = random(seed, n, d);
            x.column_mut(0).fill(2.5);
            let s = Scaler::fit(&x, ScalingMode::Minmax01).unwrap();
            let y = s.apply(&x).unwrap();
            prop_assert!(y.iter().all(|v| (0.0..=1.0).contains(v)));
            prop_assert!(y.column(0).iter().all(|&v| v == 0.0));
        }

        #[test]
        fn scaling_is_affine(seed in 0u64..1000, t in -2.0f64..2.0) {
            let x = random(seed, 6, 3);
            let s = Scaler::fit(&x, ScalingMode::Zscore).unwrap();
            let p = random(seed + 1, 1, 3);
            let q = random(seed + 2, 1, 3);
            let mix = &p * t + &q * (1.0 - t);
            let lhs = s.apply(&mix).unwrap();
            let rhs = s.apply(&p).unwrap() * t + s.apply(&q).unwrap() * (1.0 - t);
            prop_assert!((lhs - rhs).abs().max() < 1e-10);
        }
    }
}
