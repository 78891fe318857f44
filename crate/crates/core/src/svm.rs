//! Hyperplane geometry and a kernelized large-margin classifier.
//!
//! The classifier minimizes the hinge+ridge objective
//! `Σ [1 − yᵢ f(xᵢ)]₊ + λ‖β‖²` over the kernel expansion
//! `f(x) = Σ αᵢ yᵢ K(x, xᵢ) + β₀`. No dual quadratic program is solved:
//! training is epoch-based stochastic subgradient descent with step
//! size 1/(λ̃·t) where λ̃ = 2λ/n is the strong-convexity modulus of the
//! per-sample objective, the model for each epoch being the average of
//! that epoch's iterates. β₀ is an unpenalized coordinate and takes the
//! plain 1/t subgradient step (nothing strongly convex backs the faster
//! rate for it). The returned
//! model is the best epoch average by training objective (the zero
//! model included), so the final objective never exceeds the initial
//! one.

use nalgebra::{DMatrix, DVector};
use rand::Rng;
use rayon::prelude::*;

use crate::data::{Dataset, SeedTree};
use crate::error::{Error, Result};
use crate::kernel::{gram, KernelSpec};
use crate::metrics::misclassification;

/// A hyperplane βᵀx + β₀ = 0.
#[derive(Debug, Clone, PartialEq)]
pub struct Hyperplane {
    pub beta: DVector<f64>,
    pub beta0: f64,
}

impl Hyperplane {
    pub fn new(beta: Vec<f64>, beta0: f64) -> Result<Self> {
        let beta = DVector::from_vec(beta);
        if beta.norm() == 0.0 {
            return Err(Error::InvalidParameter("beta must not be all zero".into()));
        }
        Ok(Hyperplane { beta, beta0 })
    }

    /// Signed distance (βᵀx + β₀)/‖β‖.
    pub fn signed_distance(&self, x: &[f64]) -> Result<f64> {
        if x.len() != self.beta.len() {
            return Err(Error::DimensionMismatch {
                expected: self.beta.len(),
                got: x.len(),
            });
        }
        let fx: f64 = self.beta.iter().zip(x).map(|(b, v)| b * v).sum::<f64>() + self.beta0;
        Ok(fx / self.beta.norm())
    }

    /// Margin 2/‖β‖ of a canonical separating hyperplane.
    pub fn margin(&self) -> f64 {
        2.0 / self.beta.norm()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CanonicalStatus {
    Canonical,
    SeparatingNotCanonical,
    NotSeparating,
}

/// Classify a hyperplane against a labeled dataset: canonical means the
/// smallest yᵢ(βᵀxᵢ + β₀) equals 1 (to tolerance); merely positive
/// means separating.
pub fn check_canonical(h: &Hyperplane, ds: &Dataset) -> Result<CanonicalStatus> {
    let labels = ds.labels()?;
    let mut min_margin = f64::INFINITY;
    for i in 0..ds.n() {
        let fx: f64 = h
            .beta
            .iter()
            .zip(ds.features().row(i).iter())
            .map(|(b, v)| b * v)
            .sum::<f64>()
            + h.beta0;
        min_margin = min_margin.min(labels[i] as f64 * fx);
    }
    if min_margin >= 1.0 - 1e-9 && (min_margin - 1.0).abs() <= 1e-6 {
        Ok(CanonicalStatus::Canonical)
    } else if min_margin > 0.0 {
        Ok(CanonicalStatus::SeparatingNotCanonical)
    } else {
        Ok(CanonicalStatus::NotSeparating)
    }
}

/// Hinge+ridge objective Σᵢ [1 − yᵢ fᵢ]₊ + λ·‖β‖².
pub fn hinge_objective(labels: &[i8], f_values: &[f64], beta_norm_sq: f64, lambda: f64) -> f64 {
    let hinge: f64 = labels
        .iter()
        .zip(f_values)
        .map(|(&y, &f)| (1.0 - y as f64 * f).max(0.0))
        .sum();
    hinge + lambda * beta_norm_sq
}

/// Kernel expansion classifier f(x) = Σ αᵢ yᵢ K(x, xᵢ) + β₀.
#[derive(Debug, Clone)]
pub struct KernelClassifier {
    alphas: DVector<f64>,
    beta0: f64,
    spec: KernelSpec,
    train_features: DMatrix<f64>,
    train_labels: Vec<i8>,
    lambda: f64,
    objective_trace: Vec<f64>,
}

impl KernelClassifier {
    pub fn alphas(&self) -> &DVector<f64> {
        &self.alphas
    }

    pub fn beta0(&self) -> f64 {
        self.beta0
    }

    pub fn lambda(&self) -> f64 {
        self.lambda
    }

    /// Raw per-epoch training objectives (of each epoch's averaged
    /// iterate), in epoch order.
    pub fn objective_trace(&self) -> &[f64] {
        &self.objective_trace
    }

    pub fn decision_value(&self, x: &[f64]) -> Result<f64> {
        let mut f = self.beta0;
        for j in 0..self.train_features.nrows() {
            let row: Vec<f64> = self.train_features.row(j).iter().copied().collect();
            f += self.alphas[j] * self.train_labels[j] as f64 * self.spec.eval(x, &row)?;
        }
        Ok(f)
    }

    pub fn predict(&self, x: &[f64]) -> Result<i8> {
        Ok(if self.decision_value(x)? >= 0.0 { 1 } else { -1 })
    }

    /// Decision values for the rows of a precomputed cross-Gram
    /// (m queries × n training points).
    pub fn decision_values_from_cross(&self, cross: &DMatrix<f64>) -> Result<Vec<f64>> {
        if cross.ncols() != self.alphas.len() {
            return Err(Error::DimensionMismatch {
                expected: self.alphas.len(),
                got: cross.ncols(),
            });
        }
        let weighted: DVector<f64> = DVector::from_fn(self.alphas.len(), |j, _| {
            self.alphas[j] * self.train_labels[j] as f64
        });
        Ok((cross * weighted).iter().map(|v| v + self.beta0).collect())
    }

    pub fn predict_matrix(&self, x_new: &DMatrix<f64>) -> Result<Vec<i8>> {
        let cross = gram(&self.spec, x_new, &self.train_features)?;
        Ok(self
            .decision_values_from_cross(&cross.values)?
            .into_iter()
            .map(|f| if f >= 0.0 { 1 } else { -1 })
            .collect())
    }
}

/// Training objective of an expansion (c, β₀) against a training Gram.
/// ‖β‖² in kernel form is Σᵢⱼ cᵢcⱼ yᵢyⱼ K(xᵢ,xⱼ).
fn expansion_objective(
    g: &DMatrix<f64>,
    labels: &[i8],
    c: &DVector<f64>,
    beta0: f64,
    lambda: f64,
) -> f64 {
    let n = labels.len();
    let cy = DVector::from_fn(n, |i, _| c[i] * labels[i] as f64);
    let gcy = g * &cy;
    let f_values: Vec<f64> = (0..n).map(|i| gcy[i] + beta0).collect();
    let beta_norm_sq = cy.dot(&gcy);
    hinge_objective(labels, &f_values, beta_norm_sq, lambda)
}

fn optimize_hinge(
    g: &DMatrix<f64>,
    labels: &[i8],
    lambda: f64,
    epochs: usize,
    seed: u64,
) -> (DVector<f64>, f64, Vec<f64>) {
    let n = labels.len();
    let lambda_mod = 2.0 * lambda / n as f64;
    let mut rng = SeedTree::new(seed).rng();
    let mut c = DVector::zeros(n);
    let mut beta0 = 0.0f64;
    let mut t = 0usize;

    let mut best_c = DVector::zeros(n);
    let mut best_b0 = 0.0;
    let mut best_obj = expansion_objective(g, labels, &best_c, best_b0, lambda);
    let mut trace = Vec::with_capacity(epochs);

    for _epoch in 0..epochs {
        let mut acc_c = DVector::zeros(n);
        let mut acc_b0 = 0.0;
        for _step in 0..n {
            t += 1;
            let eta = 1.0 / (lambda_mod * t as f64);
            let i = rng.random_range(0..n);
            let yi = labels[i] as f64;
            let mut fi = beta0;
            for j in 0..n {
                fi += c[j] * labels[j] as f64 * g[(i, j)];
            }
            // (1 − η·λ̃) shrink on the penalized part only
            let shrink = 1.0 - eta * lambda_mod;
            c *= shrink;
            if yi * fi < 1.0 {
                c[i] += eta;
                // β₀ has no strong convexity backing the 1/(λ̃t) rate;
                // the plain 1/t subgradient step keeps it bounded
                beta0 += yi / t as f64;
            }
            acc_c += &c;
            acc_b0 += beta0;
        }
        let avg_c = &acc_c / n as f64;
        let avg_b0 = acc_b0 / n as f64;
        let obj = expansion_objective(g, labels, &avg_c, avg_b0, lambda);
        trace.push(obj);
        if obj < best_obj {
            best_obj = obj;
            best_c = avg_c;
            best_b0 = avg_b0;
        }
    }
    (best_c, best_b0, trace)
}

/// Train the kernel hinge+ridge classifier.
pub fn train_kernel_hinge(
    ds: &Dataset,
    spec: &KernelSpec,
    lambda: f64,
    epochs: usize,
    seed: u64,
) -> Result<KernelClassifier> {
    let labels = ds.labels()?.to_vec();
    if !(lambda > 0.0) {
        return Err(Error::InvalidParameter("lambda must be positive".into()));
    }
    if epochs < 1 {
        return Err(Error::InvalidParameter("epochs must be >= 1".into()));
    }
    let g = gram(spec, ds.features(), ds.features())?;
    let (alphas, beta0, trace) = optimize_hinge(&g.values, &labels, lambda, epochs, seed);
    Ok(KernelClassifier {
        alphas,
        beta0,
        spec: *spec,
        train_features: ds.features().clone(),
        train_labels: labels,
        lambda,
        objective_trace: trace,
    })
}

/// Test-error surface over a (γ, h) grid with Gaussian kernels.
#[derive(Debug, Clone)]
pub struct SensitivityGrid {
    pub gammas: Vec<f64>,
    pub hs: Vec<f64>,
    /// errors[gamma index][h index]
    pub errors: Vec<Vec<usize>>,
}

/// Penalty-parameter mapping: the soft-margin cost γ corresponds to the
/// ridge weight λ = 1/(2γ).
pub fn lambda_from_gamma(gamma: f64) -> f64 {
    1.0 / (2.0 * gamma)
}

/// Fit one classifier per (γ, h) pair and count test misclassifications.
/// Cells draw seeds from the master via their grid coordinates, so the
/// surface is independent of evaluation order and parallelism.
pub fn sensitivity_grid(
    train: &Dataset,
    test: &Dataset,
    gammas: &[f64],
    hs: &[f64],
    epochs: usize,
    seed: u64,
) -> Result<SensitivityGrid> {
    if gammas.is_empty() || hs.is_empty() {
        return Err(Error::InvalidParameter("grids must be nonempty".into()));
    }
    let train_labels = train.labels()?.to_vec();
    let test_labels = test.labels()?.to_vec();
    let tree = SeedTree::new(seed);

    // columns of the surface, one per h (the expensive Grams are shared
    // across the γ axis)
    let columns: Result<Vec<Vec<usize>>> = hs
        .par_iter()
        .enumerate()
        .map(|(hi, &h)| {
            let spec = KernelSpec::gaussian(h)?;
            let g_train = gram(&spec, train.features(), train.features())?;
            let g_cross = gram(&spec, test.features(), train.features())?;
            let mut column = Vec::with_capacity(gammas.len());
            for (gi, &gamma) in gammas.iter().enumerate() {
                let lambda = lambda_from_gamma(gamma);
                let cell_seed = tree.child(gi as u32).child(hi as u32).seed();
                let (alphas, beta0, _) =
                    optimize_hinge(&g_train.values, &train_labels, lambda, epochs, cell_seed);
                let weighted = DVector::from_fn(train_labels.len(), |j, _| {
                    alphas[j] * train_labels[j] as f64
                });
                let decisions = &g_cross.values * weighted;
                let preds: Vec<i8> = decisions
                    .iter()
                    .map(|v| if v + beta0 >= 0.0 { 1 } else { -1 })
                    .collect();
                column.push(misclassification(&preds, &test_labels)?);
            }
            Ok(column)
        })
        .collect();
    let columns = columns?;
    let errors: Vec<Vec<usize>> = (0..gammas.len())
        .map(|gi| (0..hs.len()).map(|hi| columns[hi][gi]).collect())
        .collect();
    Ok(SensitivityGrid {
        gammas: gammas.to_vec(),
        hs: hs.to_vec(),
        errors,
    })
}
