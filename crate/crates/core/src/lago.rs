//! LAGO rare-target ranking.
//!
//! Every rare-class training point becomes a kernel center. Each
//! center's radius is the average distance to its K nearest background
//! neighbors, and the ranking score is a determinant-weighted sum of
//! Gaussian kernels over all centers:
//!
//! ```text
//! f(x) = Σ_{xᵢ ∈ C₁} |Rᵢ| φ(x; xᵢ, αRᵢ)
//! ```
//!
//! The spherical variant uses one radius per center (Rᵢ = rᵢI); the
//! elliptical variant averages per-coordinate absolute displacements
//! over the same Euclidean neighbor set. No coefficients are fitted:
//! β₀ = 0 and βᵢ = |Rᵢ|.

use nalgebra::DMatrix;

use crate::data::Dataset;
use crate::error::{Error, Result};
use crate::metrics::{average_precision, rank_order, FoldPlan};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum LagoVariant {
    Spherical,
    Elliptical,
}

#[derive(Debug, Clone, PartialEq)]
pub enum Radii {
    /// One radius per center.
    Spherical(Vec<f64>),
    /// Per-center, per-coordinate radii (n₁×d).
    Elliptical(DMatrix<f64>),
}

#[derive(Debug, Clone)]
pub struct LagoModel {
    centers: DMatrix<f64>,
    radii: Radii,
    alpha: f64,
    k: usize,
    r_floor: f64,
}

impl LagoModel {
    pub fn centers(&self) -> &DMatrix<f64> {
        &self.centers
    }

    pub fn radii(&self) -> &Radii {
        &self.radii
    }

    pub fn alpha(&self) -> f64 {
        self.alpha
    }

    pub fn k(&self) -> usize {
        self.k
    }

    pub fn r_floor(&self) -> f64 {
        self.r_floor
    }

    /// Ranking score f(x). Larger means more likely rare-class.
    pub fn score(&self, x: &[f64]) -> Result<f64> {
        let d = self.centers.ncols();
        if x.len() != d {
            return Err(Error::DimensionMismatch {
                expected: d,
                got: x.len(),
            });
        }
        let norm_const = (2.0 * std::f64::consts::PI).powf(d as f64 / 2.0);
        let mut total = 0.0;
        for i in 0..self.centers.nrows() {
            let mut det = 1.0; // |Rᵢ| = product of diagonal radii
            let mut quad = 0.0; // (x−μ)ᵀ (αRᵢ)⁻² (x−μ)
            for j in 0..d {
                let r = match &self.radii {
                    Radii::Spherical(rs) => rs[i],
                    Radii::Elliptical(rm) => rm[(i, j)],
                };
                det *= r;
                let z = (x[j] - self.centers[(i, j)]) / (self.alpha * r);
                quad += z * z;
            }
            let scaled_det = det * self.alpha.powi(d as i32);
            total += det / (norm_const * scaled_det) * (-quad / 2.0).exp();
        }
        Ok(total)
    }

    /// Score each row of `x_new` and return the descending-score
    /// permutation (ties broken by row index) plus the raw scores in
    /// row order.
    pub fn rank(&self, x_new: &DMatrix<f64>) -> Result<Ranking> {
        let mut scores = Vec::with_capacity(x_new.nrows());
        for i in 0..x_new.nrows() {
            let row: Vec<f64> = x_new.row(i).iter().copied().collect();
            scores.push(self.score(&row)?);
        }
        let order = rank_order(&scores);
        Ok(Ranking { order, scores })
    }
}

#[derive(Debug, Clone)]
pub struct Ranking {
    /// Row indices in descending score order.
    pub order: Vec<usize>,
    /// Scores in original row order.
    pub scores: Vec<f64>,
}

/// Indices of the K nearest rows of `background` to `center` by
/// Euclidean distance, ties broken by lowest row index.
pub fn nearest_background(center: &[f64], background: &DMatrix<f64>, k: usize) -> Result<Vec<usize>> {
    let n0 = background.nrows();
    if k == 0 || k > n0 {
        return Err(Error::InvalidParameter(format!(
            "neighbor count K must satisfy 1 <= K <= n0 = {n0}, got {k}"
        )));
    }
    if background.ncols() != center.len() {
        return Err(Error::DimensionMismatch {
            expected: center.len(),
            got: background.ncols(),
        });
    }
    let mut dist_idx: Vec<(f64, usize)> = (0..n0)
        .map(|i| {
            let d2: f64 = (0..center.len())
                .map(|j| {
                    let diff = center[j] - background[(i, j)];
                    diff * diff
                })
                .sum();
            (d2, i)
        })
        .collect();
    // partial selection: the first k after sorting (distance, index)
    dist_idx.sort_by(|a, b| a.0.partial_cmp(&b.0).unwrap().then(a.1.cmp(&b.1)));
    Ok(dist_idx[..k].iter().map(|&(_, i)| i).collect())
}

/// Mean Euclidean distance from `center` to its K nearest background
/// points.
pub fn knn_background_radius(center: &[f64], background: &DMatrix<f64>, k: usize) -> Result<f64> {
    let neighbors = nearest_background(center, background, k)?;
    let mut sum = 0.0;
    for &i in &neighbors {
        let d2: f64 = (0..center.len())
            .map(|j| {
                let diff = center[j] - background[(i, j)];
                diff * diff
            })
            .sum();
        sum += d2.sqrt();
    }
    Ok(sum / k as f64)
}

/// Radius floor relative to the widest single-feature range, so that
/// duplicate points cannot produce zero radii (the kernel divides by
/// the determinant).
fn radius_floor(features: &DMatrix<f64>) -> f64 {
    let mut max_range = 0.0f64;
    for j in 0..features.ncols() {
        let col = features.column(j);
        let (mut lo, mut hi) = (f64::INFINITY, f64::NEG_INFINITY);
        for &v in col.iter() {
            lo = lo.min(v);
            hi = hi.max(v);
        }
        max_range = max_range.max(hi - lo);
    }
    1e-9 * if max_range > 0.0 { max_range } else { 1.0 }
}

/// Fit a LAGO model: centers are all rare-class (+1) rows; radii come
/// from each center's K nearest background (−1) rows.
pub fn fit_lago(ds: &Dataset, k: usize, alpha: f64, variant: LagoVariant) -> Result<LagoModel> {
    let labels = ds.labels()?;
    if !(alpha > 0.0) {
        return Err(Error::InvalidParameter("alpha must be positive".into()));
    }
    let rare_idx: Vec<usize> = (0..ds.n()).filter(|&i| labels[i] == 1).collect();
    let bg_idx: Vec<usize> = (0..ds.n()).filter(|&i| labels[i] == -1).collect();
    if rare_idx.is_empty() {
        return Err(Error::EmptyClass("rare (+1)"));
    }
    if bg_idx.len() < k {
        return Err(Error::InvalidParameter(format!(
            "background count {} smaller than K = {k}",
            bg_idx.len()
        )));
    }
    let d = ds.d();
    let centers = DMatrix::from_fn(rare_idx.len(), d, |i, j| ds.features()[(rare_idx[i], j)]);
    let background = DMatrix::from_fn(bg_idx.len(), d, |i, j| ds.features()[(bg_idx[i], j)]);
    let r_floor = radius_floor(ds.features());

    let radii = match variant {
        LagoVariant::Spherical => {
            let mut rs = Vec::with_capacity(centers.nrows());
            for i in 0..centers.nrows() {
                let center: Vec<f64> = centers.row(i).iter().copied().collect();
                let r = knn_background_radius(&center, &background, k)?;
                rs.push(r.max(r_floor));
            }
            Radii::Spherical(rs)
        }
        LagoVariant::Elliptical => {
            let mut rm = DMatrix::zeros(centers.nrows(), d);
            for i in 0..centers.nrows() {
                let center: Vec<f64> = centers.row(i).iter().copied().collect();
                let neighbors = nearest_background(&center, &background, k)?;
                for j in 0..d {
                    let mean_abs: f64 = neighbors
                        .iter()
                        .map(|&w| (center[j] - background[(w, j)]).abs())
                        .sum::<f64>()
                        / k as f64;
                    rm[(i, j)] = mean_abs.max(r_floor);
                }
            }
            Radii::Elliptical(rm)
        }
    };
    Ok(LagoModel {
        centers,
        radii,
        alpha,
        k,
        r_floor,
    })
}

#[derive(Debug, Clone)]
pub struct AlphaTuning {
    pub best_alpha: f64,
    /// (alpha, mean cross-validated average precision)
    pub per_alpha: Vec<(f64, f64)>,
    /// Folds skipped because a training part lacked a class or a test
    /// part had no positives, as (alpha index, fold index).
    pub skipped: Vec<(usize, usize)>,
}

/// Cross-validated average precision per candidate α; ties go to the
/// earlier grid entry.
pub fn tune_alpha(
    ds: &Dataset,
    k: usize,
    alphas: &[f64],
    folds: usize,
    seed: u64,
    variant: LagoVariant,
) -> Result<AlphaTuning> {
    if alphas.is_empty() {
        return Err(Error::InvalidParameter("alpha grid must be nonempty".into()));
    }
    let labels = ds.labels()?;
    let plan = FoldPlan::new(ds.n(), folds, seed)?;
    let mut per_alpha = Vec::with_capacity(alphas.len());
    let mut skipped = Vec::new();
    for (ai, &alpha) in alphas.iter().enumerate() {
        let mut fold_aps = Vec::new();
        for fold in 0..plan.k {
            let (train_idx, test_idx) = plan.fold_indices(fold);
            let has_both = train_idx.iter().any(|&i| labels[i] == 1)
                && train_idx.iter().any(|&i| labels[i] == -1)
                && train_idx.iter().filter(|&&i| labels[i] == -1).count() >= k;
            let test_has_pos = test_idx.iter().any(|&i| labels[i] == 1);
            if !has_both || !test_has_pos {
                skipped.push((ai, fold));
                continue;
            }
            let train = ds.subset(&train_idx)?;
            let test = ds.subset(&test_idx)?;
            let model = fit_lago(&train, k, alpha, variant)?;
            let ranking = model.rank(test.features())?;
            fold_aps.push(average_precision(&ranking.scores, test.labels()?)?);
        }
        if fold_aps.is_empty() {
            return Err(Error::InvalidParameter(
                "every fold was skipped; dataset too degenerate to tune".into(),
            ));
        }
        per_alpha.push((alpha, fold_aps.iter().sum::<f64>() / fold_aps.len() as f64));
    }
    let mut best = 0usize;
    for i in 1..per_alpha.len() {
        if per_alpha[i].1 > per_alpha[best].1 {
            best = i;
        }
    }
    Ok(AlphaTuning {
        best_alpha: per_alpha[best].0,
        per_alpha,
        skipped,
    })
}

/// Default logarithmic α grid, 10⁻² to 10².
pub fn default_alpha_grid() -> Vec<f64> {
    (-8..=8).map(|e| 10f64.powf(e as f64 / 4.0)).collect()
}

/// Default neighbor count; results are far more sensitive to α than
/// to K, so K is rarely worth tuning.
pub const DEFAULT_K: usize = 5;
