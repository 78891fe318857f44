//! Seeded synthetic data generators used by the experiment harness and
//! the acceptance tests.

use nalgebra::DMatrix;
use rand::Rng;
use rand_distr::StandardNormal;

use crate::data::{Dataset, Response, SeedTree};
use crate::error::Result;

/// Linear-toy defaults: n = 50, d = 10, y = x₂ + x₅ + x₈ + ε with all
/// variables and noise iid N(0,1) (variable numbers 1-based).
pub const LINEAR_TOY_N: usize = 50;
pub const LINEAR_TOY_D: usize = 10;
/// Zero-based indices of the true variables {2, 5, 8}.
pub const LINEAR_TOY_TRUE: [usize; 3] = [1, 4, 7];

/// 2-D points at uniform angles with radii uniform on [0, 3]; returns
/// the coordinates and the true radii.
pub fn spherical_toy(n: usize, seed: u64) -> (DMatrix<f64>, Vec<f64>) {
    let mut rng = SeedTree::new(seed).rng();
    let mut points = DMatrix::zeros(n, 2);
    let mut radii = Vec::with_capacity(n);
    for i in 0..n {
        let theta = rng.random_range(0.0..std::f64::consts::TAU);
        let r = rng.random_range(0.0..3.0);
        points[(i, 0)] = r * theta.cos();
        points[(i, 1)] = r * theta.sin();
        radii.push(r);
    }
    (points, radii)
}

/// The variable-selection toy regression instance.
pub fn linear_toy(seed: u64) -> Dataset {
    linear_toy_sized(LINEAR_TOY_N, LINEAR_TOY_D, seed)
}

/// [`linear_toy`] with configurable size; true variables stay {2, 5, 8}
/// (1-based) with unit coefficients.
pub fn linear_toy_sized(n: usize, d: usize, seed: u64) -> Dataset {
    assert!(d >= 8, "toy generator needs d >= 8 for the true set {{2,5,8}}");
    let mut rng = SeedTree::new(seed).rng();
    let x = DMatrix::from_fn(n, d, |_, _| rng.sample::<f64, _>(StandardNormal));
    let y: Vec<f64> = (0..n)
        .map(|i| {
            let signal: f64 = LINEAR_TOY_TRUE.iter().map(|&j| x[(i, j)]).sum();
            signal + rng.sample::<f64, _>(StandardNormal)
        })
        .collect();
    Dataset::from_parts(x, Response::Real(y)).unwrap()
}

/// Rare-class mixture parameters: P(C₁) = 5%, background N(0, I),
/// rare class N((2,2), 0.7²·I), both 2-D.
pub const MIXTURE_RARE_PI: f64 = 0.05;
pub const MIXTURE_RARE_MU: [f64; 2] = [2.0, 2.0];
pub const MIXTURE_RARE_SIGMA: f64 = 0.7;

/// Draw n labeled points from the rare-class mixture; also returns the
/// closed-form posterior P(C₁ | x) for every point.
pub fn mixture_rare(n: usize, seed: u64) -> (Dataset, Vec<f64>) {
    let mut rng = SeedTree::new(seed).rng();
    let mut x = DMatrix::zeros(n, 2);
    let mut labels = Vec::with_capacity(n);
    for i in 0..n {
        let rare = rng.random::<f64>() < MIXTURE_RARE_PI;
        for j in 0..2 {
            let z: f64 = rng.sample(StandardNormal);
            x[(i, j)] = if rare {
                MIXTURE_RARE_MU[j] + MIXTURE_RARE_SIGMA * z
            } else {
                z
            };
        }
        labels.push(if rare { 1i8 } else { -1 });
    }
    let posterior: Vec<f64> = (0..n)
        .map(|i| mixture_posterior(&[x[(i, 0)], x[(i, 1)]]))
        .collect();
    let ds = Dataset::from_parts(x, Response::Class(labels)).unwrap();
    (ds, posterior)
}

/// Closed-form P(C₁ | x) for the rare-class mixture.
pub fn mixture_posterior(x: &[f64]) -> f64 {
    let q0: f64 = x.iter().map(|&v| v * v).sum();
    let q1: f64 = x
        .iter()
        .zip(MIXTURE_RARE_MU)
        .map(|(&v, mu)| ((v - mu) / MIXTURE_RARE_SIGMA).powi(2))
        .sum();
    // bivariate normal densities up to the common (2π)^{-1} factor
    let f0 = (-q0 / 2.0).exp();
    let f1 = (-q1 / 2.0).exp() / (MIXTURE_RARE_SIGMA * MIXTURE_RARE_SIGMA);
    let pi1 = MIXTURE_RARE_PI;
    pi1 * f1 / (pi1 * f1 + (1.0 - pi1) * f0)
}

/// Classification benchmark: standard-normal features of which (up to)
/// ten matter through the additive rule 2x₁ + 2x₂ + x₃ + … + x₁₀ > 0
/// (1-based), with 10% label noise. The two dominant features pull
/// greedy trees toward the same early splits, so feature subsampling
/// pays off; the remaining columns are pure noise. Sized for the
/// sensitivity-grid experiments (default n = 1500, d = 30).
pub fn classification_synthetic(n: usize, d: usize, seed: u64) -> Dataset {
    assert!(d >= 1, "need at least one feature");
    let coef = [2.0, 2.0, 1.0, 1.0, 1.0, 1.0, 1.0, 1.0, 1.0, 1.0];
    let relevant = d.min(coef.len());
    let mut rng = SeedTree::new(seed).rng();
    let x = DMatrix::from_fn(n, d, |_, _| rng.sample::<f64, _>(StandardNormal));
    let labels: Vec<i8> = (0..n)
        .map(|i| {
            let score: f64 = (0..relevant).map(|j| coef[j] * x[(i, j)]).sum();
            let y = if score > 0.0 { 1i8 } else { -1 };
            if rng.random::<f64>() < 0.10 {
                -y
            } else {
                y
            }
        })
        .collect();
    Dataset::from_parts(x, Response::Class(labels)).unwrap()
}

/// Two well-separated Gaussian blobs, the simplest sanity dataset for
/// classifiers.
pub fn separable_blobs(n: usize, gap: f64, seed: u64) -> Dataset {
    let mut rng = SeedTree::new(seed).rng();
    let mut x = DMatrix::zeros(n, 2);
    let mut labels = Vec::with_capacity(n);
    for i in 0..n {
        let positive = i % 2 == 0;
        let center = if positive { gap / 2.0 } else { -gap / 2.0 };
        for j in 0..2 {
            let z: f64 = rng.sample(StandardNormal);
            x[(i, j)] = center + 0.5 * z;
        }
        labels.push(if positive { 1i8 } else { -1 });
    }
    Dataset::from_parts(x, Response::Class(labels)).unwrap()
}

/// Standalone check for generated data used by `Result`-returning
/// callers: generators themselves panic only on programmer error.
pub fn validate(ds: &Dataset) -> Result<()> {
    ds.labels().map(|_| ()).or_else(|_| ds.reals().map(|_| ()))
}
