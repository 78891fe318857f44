//! Kernel evaluation, Gram matrices, and feature-space centering.
//!
//! A linear algorithm that touches the data only through the pairwise
//! inner-product matrix K = XXᵀ can be kernelized by replacing each
//! entry with K_h(xᵢ, xⱼ). This module builds those matrices densely
//! and implements the implicit-feature double-centering needed when the
//! "centered data matrix" assumption has to hold in kernel space.

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};

/// Kernel choice. Gaussian uses the h-inside convention
/// `K_h(u, v) = exp(-h ‖u - v‖²)`, so h is the axis you sweep directly.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum KernelSpec {
    Linear,
    Gaussian { h: f64 },
}

impl KernelSpec {
    pub fn gaussian(h: f64) -> Result<Self> {
        if !(h > 0.0) {
            return Err(Error::InvalidParameter(format!(
                "gaussian bandwidth h must be positive, got {h}"
            )));
        }
        Ok(KernelSpec::Gaussian { h })
    }

    /// Evaluate the kernel on two points.
    pub fn eval(&self, u: &[f64], v: &[f64]) -> Result<f64> {
        if u.len() != v.len() {
            return Err(Error::DimensionMismatch {
                expected: u.len(),
                got: v.len(),
            });
        }
        Ok(match self {
            KernelSpec::Linear => u.iter().zip(v).map(|(a, b)| a * b).sum(),
            KernelSpec::Gaussian { h } => {
                let d2: f64 = u.iter().zip(v).map(|(a, b)| (a - b) * (a - b)).sum();
                (-h * d2).exp()
            }
        })
    }
}

/// Dense n×m matrix of pairwise kernel values.
#[derive(Debug, Clone, PartialEq)]
pub struct GramMatrix {
    pub values: DMatrix<f64>,
    pub centered: bool,
}

impl GramMatrix {
    pub fn nrows(&self) -> usize {
        self.values.nrows()
    }

    pub fn ncols(&self) -> usize {
        self.values.ncols()
    }

    pub fn is_square(&self) -> bool {
        self.values.is_square()
    }
}

fn row_kernel(spec: &KernelSpec, a: &DMatrix<f64>, i: usize, b: &DMatrix<f64>, j: usize) -> f64 {
    match spec {
        KernelSpec::Linear => {
            let mut s = 0.0;
            for k in 0..a.ncols() {
                s += a[(i, k)] * b[(j, k)];
            }
            s
        }
        KernelSpec::Gaussian { h } => {
            let mut d2 = 0.0;
            for k in 0..a.ncols() {
                let diff = a[(i, k)] - b[(j, k)];
                d2 += diff * diff;
            }
            (-h * d2).exp()
        }
    }
}

/// Gram matrix with `values[i][j] = K(aᵢ, bⱼ)`.
///
/// When `a == b` the upper triangle is mirrored, so the self-Gram is
/// exactly symmetric and the Gaussian diagonal is exactly 1.
pub fn gram(spec: &KernelSpec, a: &DMatrix<f64>, b: &DMatrix<f64>) -> Result<GramMatrix> {
    if a.ncols() != b.ncols() {
        return Err(Error::DimensionMismatch {
            expected: a.ncols(),
            got: b.ncols(),
        });
    }
    let self_case = std::ptr::eq(a, b) || a == b;
    let (n, m) = (a.nrows(), b.nrows());
    let mut values = DMatrix::zeros(n, m);
    if self_case {
        for i in 0..n {
            for j in i..n {
                let v = row_kernel(spec, a, i, b, j);
                values[(i, j)] = v;
                values[(j, i)] = v;
            }
        }
    } else {
        for i in 0..n {
            for j in 0..m {
                values[(i, j)] = row_kernel(spec, a, i, b, j);
            }
        }
    }
    Ok(GramMatrix {
        values,
        centered: false,
    })
}

/// Column means and grand mean of a training self-Gram, retained so that
/// later cross-Grams are centered against the same training statistics.
#[derive(Debug, Clone, PartialEq)]
pub struct GramCentering {
    col_means: DVector<f64>,
    grand_mean: f64,
}

impl GramCentering {
    pub fn from_self_gram(k: &GramMatrix) -> Result<Self> {
        if !k.is_square() {
            return Err(Error::DimensionMismatch {
                expected: k.nrows(),
                got: k.ncols(),
            });
        }
        if k.centered {
            return Err(Error::AlreadyCentered);
        }
        let n = k.nrows() as f64;
        let col_means = DVector::from_fn(k.ncols(), |j, _| k.values.column(j).sum() / n);
        let grand_mean = col_means.sum() / n;
        Ok(GramCentering {
            col_means,
            grand_mean,
        })
    }

    /// Kc = K − 1ₙK − K1ₙ + 1ₙK1ₙ, with 1ₙ the all-(1/n) matrix.
    pub fn center_self(&self, k: &GramMatrix) -> Result<GramMatrix> {
        if k.centered {
            return Err(Error::AlreadyCentered);
        }
        let n = k.nrows();
        if n != self.col_means.len() || !k.is_square() {
            return Err(Error::DimensionMismatch {
                expected: self.col_means.len(),
                got: k.nrows(),
            });
        }
        let mut values = k.values.clone();
        for i in 0..n {
            // symmetric: row means equal column means
            let ri = self.col_means[i];
            for j in 0..n {
                values[(i, j)] += self.grand_mean - ri - self.col_means[j];
            }
        }
        Ok(GramMatrix {
            values,
            centered: true,
        })
    }

    /// K'c = K' − 1'ₙK − K'1ₙ + 1'ₙK1ₙ for an m×n cross-Gram whose rows
    /// are new points against the training set.
    pub fn center_cross(&self, k_cross: &GramMatrix) -> Result<GramMatrix> {
        if k_cross.centered {
            return Err(Error::AlreadyCentered);
        }
        let n = self.col_means.len();
        if k_cross.ncols() != n {
            return Err(Error::DimensionMismatch {
                expected: n,
                got: k_cross.ncols(),
            });
        }
        let m = k_cross.nrows();
        let mut values = k_cross.values.clone();
        for i in 0..m {
            let row_mean = k_cross.values.row(i).sum() / n as f64;
            for j in 0..n {
                values[(i, j)] += self.grand_mean - row_mean - self.col_means[j];
            }
        }
        Ok(GramMatrix {
            values,
            centered: true,
        })
    }
}

/// Center a self-Gram (and optionally a cross-Gram against the same
/// training set) in feature space.
pub fn center_gram(
    self_gram: &GramMatrix,
    cross_gram: Option<&GramMatrix>,
) -> Result<(GramMatrix, Option<GramMatrix>)> {
    let stats = GramCentering::from_self_gram(self_gram)?;
    let centered_self = stats.center_self(self_gram)?;
    let centered_cross = match cross_gram {
        Some(kc) => Some(stats.center_cross(kc)?),
        None => None,
    };
    Ok((centered_self, centered_cross))
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;
    use proptest::prelude::*;
    use rand::Rng;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn random_matrix(n: usize, d: usize, seed: u64) -> DMatrix<f64> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        DMatrix::from_fn(n, d, |_, _| rng.random_range(-2.0..2.0))
    }

    #[test]
    fn gaussian_zero_distance_is_one() {
        let spec = KernelSpec::gaussian(3.7).unwrap();
        let u = [1.0, -2.0, 0.5];
        assert_eq!(spec.eval(&u, &u).unwrap(), 1.0);
    }

    #[test]
    fn linear_inner_product() {
        assert_eq!(
            KernelSpec::Linear.eval(&[1.0, 2.0], &[3.0, 4.0]).unwrap(),
            11.0
        );
    }

    #[test]
    fn gaussian_hand_value() {
        // h=1, u=(0,0), v=(1,0) -> exp(-1)
        let spec = KernelSpec::gaussian(1.0).unwrap();
        let v = spec.eval(&[0.0, 0.0], &[1.0, 0.0]).unwrap();
        assert_abs_diff_eq!(v, (-1.0f64).exp(), epsilon = 1e-15);
        assert_abs_diff_eq!(v, 0.367879, epsilon = 1e-6);
    }

    #[test]
    fn eval_rejects_dimension_mismatch() {
        assert!(KernelSpec::Linear.eval(&[1.0], &[1.0, 2.0]).is_err());
    }

    #[test]
    fn linear_gram_on_orthonormal_rows_is_identity() {
        let a = DMatrix::from_row_slice(2, 2, &[1.0, 0.0, 0.0, 1.0]);
        let g = gram(&KernelSpec::Linear, &a, &a).unwrap();
        assert_eq!(g.values, DMatrix::identity(2, 2));
        assert!(!g.centered);
    }

    #[test]
    fn gaussian_self_gram_symmetric_unit_diagonal() {
        let a = random_matrix(3, 4, 42);
        let g = gram(&KernelSpec::gaussian(0.8).unwrap(), &a, &a).unwrap();
        for i in 0..3 {
            assert_eq!(g.values[(i, i)], 1.0);
            for j in 0..3 {
                assert!((g.values[(i, j)] - g.values[(j, i)]).abs() <= 1e-12);
            }
        }
    }

    #[test]
    fn linear_gram_matches_matrix_product() {
        let a = random_matrix(7, 4, 9);
        let g = gram(&KernelSpec::Linear, &a, &a).unwrap();
        // independent dense product oracle
        let oracle = &a * a.transpose();
        for i in 0..7 {
            for j in 0..7 {
                assert!((g.values[(i, j)] - oracle[(i, j)]).abs() <= 1e-12);
            }
        }
    }

    #[test]
    fn centered_gram_rows_and_columns_sum_to_zero() {
        let a = random_matrix(9, 3, 5);
        let g = gram(&KernelSpec::gaussian(0.5).unwrap(), &a, &a).unwrap();
        let (gc, _) = center_gram(&g, None).unwrap();
        assert!(gc.centered);
        for i in 0..9 {
            assert!(gc.values.row(i).sum().abs() <= 1e-9);
            assert!(gc.values.column(i).sum().abs() <= 1e-9);
        }
    }

    #[test]
    fn centering_is_identity_on_centered_linear_data() {
        let mut a = random_matrix(12, 3, 17);
        for j in 0..3 {
            let mean = a.column(j).sum() / 12.0;
            for i in 0..12 {
                a[(i, j)] -= mean;
            }
        }
        let g = gram(&KernelSpec::Linear, &a, &a).unwrap();
        let (gc, _) = center_gram(&g, None).unwrap();
        for i in 0..12 {
            for j in 0..12 {
                assert!((gc.values[(i, j)] - g.values[(i, j)]).abs() <= 1e-9);
            }
        }
    }

    #[test]
    fn linear_centering_equals_column_centering_oracle() {
        let a = random_matrix(10, 4, 23);
        let g = gram(&KernelSpec::Linear, &a, &a).unwrap();
        let (gc, _) = center_gram(&g, None).unwrap();
        // explicit column-centering oracle
        let mut centered = a.clone();
        for j in 0..4 {
            let mean = a.column(j).sum() / 10.0;
            for i in 0..10 {
                centered[(i, j)] -= mean;
            }
        }
        let oracle = &centered * centered.transpose();
        for i in 0..10 {
            for j in 0..10 {
                assert!((gc.values[(i, j)] - oracle[(i, j)]).abs() <= 1e-9);
            }
        }
    }

    #[test]
    fn cross_gram_centering_matches_column_centering_oracle() {
        let a = random_matrix(8, 3, 31);
        let b = random_matrix(5, 3, 32);
        let g = gram(&KernelSpec::Linear, &a, &a).unwrap();
        let gx = gram(&KernelSpec::Linear, &b, &a).unwrap();
        let (_, cross) = center_gram(&g, Some(&gx)).unwrap();
        let cross = cross.unwrap();
        // center both by the *training* column means
        let means: Vec<f64> = (0..3).map(|j| a.column(j).sum() / 8.0).collect();
        let mut ac = a.clone();
        let mut bc = b.clone();
        for j in 0..3 {
            for i in 0..8 {
                ac[(i, j)] -= means[j];
            }
            for i in 0..5 {
                bc[(i, j)] -= means[j];
            }
        }
        let oracle = &bc * ac.transpose();
        for i in 0..5 {
            for j in 0..8 {
                assert!((cross.values[(i, j)] - oracle[(i, j)]).abs() <= 1e-9);
            }
        }
    }

    #[test]
    fn recentering_is_rejected() {
        let a = random_matrix(4, 2, 3);
        let g = gram(&KernelSpec::Linear, &a, &a).unwrap();
        let (gc, _) = center_gram(&g, None).unwrap();
        assert!(matches!(
            center_gram(&gc, None).unwrap_err(),
            Error::AlreadyCentered
        ));
    }

    #[test]
    fn gaussian_gram_positive_semidefinite() {
        for seed in 0..5u64 {
            let n = 20 + 6 * seed as usize;
            let a = random_matrix(n.min(50), 4, 100 + seed);
            let g = gram(&KernelSpec::gaussian(0.7).unwrap(), &a, &a).unwrap();
            let eig = nalgebra::SymmetricEigen::new(g.values.clone());
            let max = eig.eigenvalues.iter().cloned().fold(f64::MIN, f64::max);
            let min = eig.eigenvalues.iter().cloned().fold(f64::MAX, f64::min);
            assert!(min >= -1e-8 * max, "min eig {min} vs max {max}");
        }
    }

    proptest! {
        #[test]
        fn kernel_eval_is_symmetric(
            u in proptest::collection::vec(-10.0..10.0f64, 3),
            v in proptest::collection::vec(-10.0..10.0f64, 3),
            h in 0.01..5.0f64,
        ) {
            for spec in [KernelSpec::Linear, KernelSpec::Gaussian { h }] {
                let a = spec.eval(&u, &v).unwrap();
                let b = spec.eval(&v, &u).unwrap();
                prop_assert_eq!(a, b);
            }
        }

        #[test]
        fn gaussian_decreases_with_distance(
            scale1 in 0.1..3.0f64,
            scale2 in 0.1..3.0f64,
            h in 0.01..5.0f64,
        ) {
            let (near, far) = if scale1 < scale2 { (scale1, scale2) } else { (scale2, scale1) };
            prop_assume!(far > near + 1e-9);
            let spec = KernelSpec::Gaussian { h };
            let origin = [0.0, 0.0];
            let kn = spec.eval(&origin, &[near, 0.0]).unwrap();
            let kf = spec.eval(&origin, &[far, 0.0]).unwrap();
            prop_assert!(kf < kn);
        }
    }
}
