//! Kernel principal component analysis.
//!
//! Fits by solving K α = λ α on the centered Gram matrix and keeps the
//! leading eigenpairs. With α scaled so that λ (αᵀα) = 1, the implicit
//! principal directions have unit length, and projecting new points is
//! just a centered cross-Gram times the α matrix.

use nalgebra::{DMatrix, SymmetricEigen};

use crate::data::Dataset;
use crate::error::{Error, Result};
use crate::kernel::{gram, GramCentering, GramMatrix, KernelSpec};

/// Default eigenvalue cutoff relative to the largest eigenvalue.
pub const DEFAULT_TOL_EIG_REL: f64 = 1e-10;

/// Outcome of a fit: either all requested components were kept, or the
/// Gram matrix did not have enough spectrum above the cutoff.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum FitStatus {
    Full,
    Truncated { requested: usize, retained: usize },
}

#[derive(Debug, Clone)]
pub struct KpcaModel {
    alphas: DMatrix<f64>,      // n×q
    eigenvalues: Vec<f64>,     // nonincreasing, all > tol
    spec: KernelSpec,
    training_features: DMatrix<f64>,
    centering: GramCentering,
    training_scores: DMatrix<f64>, // n×q
    status: FitStatus,
}

impl KpcaModel {
    pub fn alphas(&self) -> &DMatrix<f64> {
        &self.alphas
    }

    pub fn eigenvalues(&self) -> &[f64] {
        &self.eigenvalues
    }

    pub fn retained(&self) -> usize {
        self.eigenvalues.len()
    }

    pub fn status(&self) -> FitStatus {
        self.status
    }

    pub fn training_scores(&self) -> &DMatrix<f64> {
        &self.training_scores
    }

    /// Project new rows onto the retained kernel principal components.
    pub fn project(&self, x_new: &DMatrix<f64>) -> Result<DMatrix<f64>> {
        if x_new.ncols() != self.training_features.ncols() {
            return Err(Error::DimensionMismatch {
                expected: self.training_features.ncols(),
                got: x_new.ncols(),
            });
        }
        let cross = gram(&self.spec, x_new, &self.training_features)?;
        let centered = self.centering.center_cross(&cross)?;
        Ok(&centered.values * &self.alphas)
    }
}

/// Fit kernel PCA with up to `q` components, discarding eigenvalues at
/// or below `tol_eig` (default `1e-10 · λ₁`). A rank-deficient Gram
/// yields fewer components, reported through [`FitStatus::Truncated`].
pub fn fit_kpca(
    ds: &Dataset,
    spec: &KernelSpec,
    q: usize,
    tol_eig: Option<f64>,
) -> Result<KpcaModel> {
    fit_kpca_matrix(ds.features(), spec, q, tol_eig)
}

/// [`fit_kpca`] on a bare feature matrix (no response needed).
pub fn fit_kpca_matrix(
    features: &DMatrix<f64>,
    spec: &KernelSpec,
    q: usize,
    tol_eig: Option<f64>,
) -> Result<KpcaModel> {
    let n = features.nrows();
    if q == 0 || q > n {
        return Err(Error::InvalidParameter(format!(
            "component count q must satisfy 1 <= q <= n = {n}, got {q}"
        )));
    }
    if let Some(t) = tol_eig {
        if !(t > 0.0) {
            return Err(Error::InvalidParameter("tol_eig must be positive".into()));
        }
    }
    let k = gram(spec, features, features)?;
    let centering = GramCentering::from_self_gram(&k)?;
    let kc = centering.center_self(&k)?;

    let eigen = SymmetricEigen::new(kc.values.clone());
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| {
        eigen.eigenvalues[b]
            .partial_cmp(&eigen.eigenvalues[a])
            .unwrap()
    });
    let lambda_max = eigen.eigenvalues[order[0]].max(0.0);
    let tol = tol_eig.unwrap_or(DEFAULT_TOL_EIG_REL * lambda_max);

    let mut eigenvalues = Vec::new();
    let mut columns: Vec<nalgebra::DVector<f64>> = Vec::new();
    for &idx in order.iter().take(q) {
        let lambda = eigen.eigenvalues[idx];
        if lambda <= tol {
            break;
        }
        let mut alpha = eigen.eigenvectors.column(idx).clone_owned();
        // normalization: λ (αᵀα) = 1
        alpha /= lambda.sqrt();
        // sign convention: largest-magnitude entry positive
        let mut max_abs = 0.0;
        let mut max_val = 0.0;
        for &v in alpha.iter() {
            if v.abs() > max_abs {
                max_abs = v.abs();
                max_val = v;
            }
        }
        if max_val < 0.0 {
            alpha = -alpha;
        }
        eigenvalues.push(lambda);
        columns.push(alpha);
    }
    if columns.is_empty() {
        return Err(Error::InvalidParameter(
            "no eigenvalues above tol_eig; Gram matrix is numerically null".into(),
        ));
    }
    let retained = columns.len();
    let alphas = DMatrix::from_columns(&columns);
    let training_scores = &kc.values * &alphas;
    let status = if retained == q {
        FitStatus::Full
    } else {
        FitStatus::Truncated {
            requested: q,
            retained,
        }
    };
    Ok(KpcaModel {
        alphas,
        eigenvalues,
        spec: *spec,
        training_features: features.clone(),
        centering,
        training_scores,
        status,
    })
}

/// Handle on the uncentered/centered Grams for diagnostics and tests.
pub fn centered_gram(features: &DMatrix<f64>, spec: &KernelSpec) -> Result<GramMatrix> {
    let k = gram(spec, features, features)?;
    let centering = GramCentering::from_self_gram(&k)?;
    centering.center_self(&k)
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::Rng;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn random_matrix(n: usize, d: usize, seed: u64) -> DMatrix<f64> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        DMatrix::from_fn(n, d, |_, _| rng.random_range(-1.5..1.5))
    }

    fn column_center(x: &DMatrix<f64>) -> DMatrix<f64> {
        let mut out = x.clone();
        for j in 0..x.ncols() {
            let mean = x.column(j).sum() / x.nrows() as f64;
            for i in 0..x.nrows() {
                out[(i, j)] -= mean;
            }
        }
        out
    }

    /// Classical PCA oracle: eigenvectors of S = XᵀX on centered data,
    /// scores X u_j, eigenvalues descending.
    fn classical_pca_scores(x: &DMatrix<f64>, q: usize) -> DMatrix<f64> {
        let xc = column_center(x);
        let s = xc.transpose() * &xc;
        let eig = SymmetricEigen::new(s);
        let mut order: Vec<usize> = (0..eig.eigenvalues.len()).collect();
        order.sort_by(|&a, &b| eig.eigenvalues[b].partial_cmp(&eig.eigenvalues[a]).unwrap());
        let cols: Vec<_> = order
            .iter()
            .take(q)
            .map(|&j| eig.eigenvectors.column(j).clone_owned())
            .collect();
        let u = DMatrix::from_columns(&cols);
        xc * u
    }

    fn assert_scores_match_up_to_sign(a: &DMatrix<f64>, b: &DMatrix<f64>, tol: f64) {
        assert_eq!(a.shape(), b.shape());
        for j in 0..a.ncols() {
            let direct: f64 = (0..a.nrows()).map(|i| (a[(i, j)] - b[(i, j)]).abs()).fold(0.0, f64::max);
            let flipped: f64 = (0..a.nrows()).map(|i| (a[(i, j)] + b[(i, j)]).abs()).fold(0.0, f64::max);
            assert!(
                direct.min(flipped) <= tol,
                "component {j}: direct {direct}, flipped {flipped}"
            );
        }
    }

    #[test]
    fn linear_kernel_matches_classical_pca() {
        for seed in 0..20u64 {
            let n = 12 + (seed % 5) as usize;
            let d = 3 + (seed % 3) as usize;
            let x = random_matrix(n, d, 200 + seed);
            let q = 2;
            let model = fit_kpca_matrix(&x, &KernelSpec::Linear, q, None).unwrap();
            assert_eq!(model.retained(), q);
            let oracle = classical_pca_scores(&x, q);
            assert_scores_match_up_to_sign(model.training_scores(), &oracle, 1e-6);
        }
    }

    #[test]
    fn rank_one_symmetric_pair_keeps_single_component() {
        let x = DMatrix::from_row_slice(2, 2, &[1.0, 1.0, -1.0, -1.0]);
        let model = fit_kpca_matrix(&x, &KernelSpec::Linear, 2, None).unwrap();
        assert_eq!(model.retained(), 1);
        assert!(matches!(
            model.status(),
            FitStatus::Truncated {
                requested: 2,
                retained: 1
            }
        ));
    }

    #[test]
    fn duplicate_rows_reported_not_silently_dropped() {
        let mut x = random_matrix(6, 3, 77);
        for j in 0..3 {
            let v = x[(0, j)];
            x[(1, j)] = v; // duplicate row 0 into row 1
        }
        let model = fit_kpca_matrix(&x, &KernelSpec::Linear, 6, None).unwrap();
        assert!(model.retained() < 6);
        assert!(matches!(model.status(), FitStatus::Truncated { .. }));
    }

    #[test]
    fn projecting_training_rows_reproduces_scores() {
        let x = random_matrix(15, 4, 3);
        let spec = KernelSpec::gaussian(0.9).unwrap();
        let model = fit_kpca_matrix(&x, &spec, 3, None).unwrap();
        let projected = model.project(&x).unwrap();
        for i in 0..15 {
            for j in 0..model.retained() {
                assert!(
                    (projected[(i, j)] - model.training_scores()[(i, j)]).abs() <= 1e-9,
                    "mismatch at ({i},{j})"
                );
            }
        }
    }

    #[test]
    fn linear_projection_matches_reconstructed_direction() {
        // u_j = Xᵀ α_j on centered data; project new rows directly.
        let x = column_center(&random_matrix(10, 3, 8));
        let model = fit_kpca_matrix(&x, &KernelSpec::Linear, 2, None).unwrap();
        let x_new = column_center(&random_matrix(4, 3, 9));
        // x_new is centered by its own means; re-center against training means (zero here)
        let projected = model.project(&x_new).unwrap();
        let u = x.transpose() * model.alphas();
        let oracle = &x_new * &u;
        for i in 0..4 {
            for j in 0..2 {
                assert!((projected[(i, j)] - oracle[(i, j)]).abs() <= 1e-8);
            }
        }
    }

    #[test]
    fn eigen_residual_and_orthogonality() {
        let x = random_matrix(18, 4, 55);
        let spec = KernelSpec::gaussian(0.6).unwrap();
        let model = fit_kpca_matrix(&x, &spec, 5, None).unwrap();
        let kc = centered_gram(&x, &spec).unwrap();
        let lambda1 = model.eigenvalues()[0];
        for j in 0..model.retained() {
            let alpha_j = model.alphas().column(j);
            let resid = &kc.values * alpha_j - model.eigenvalues()[j] * alpha_j;
            let norm = resid.norm();
            assert!(norm <= 1e-8 * lambda1, "residual {norm} at component {j}");
            for i in 0..j {
                let alpha_i = model.alphas().column(i);
                let cross = (alpha_i.transpose() * &kc.values * alpha_j)[(0, 0)];
                assert!(cross.abs() <= 1e-8 * lambda1);
            }
        }
    }

    #[test]
    fn rejects_bad_q() {
        let x = random_matrix(5, 2, 1);
        assert!(fit_kpca_matrix(&x, &KernelSpec::Linear, 0, None).is_err());
        assert!(fit_kpca_matrix(&x, &KernelSpec::Linear, 6, None).is_err());
    }
}
