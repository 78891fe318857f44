//! Shared evaluation: misclassification counts, average precision for
//! rare-target ranking, and k-fold cross-validation.

use rand::seq::SliceRandom;

use crate::data::{Dataset, SeedTree};
use crate::error::{Error, Result};

/// Count of disagreements between two ±1 sequences.
pub fn misclassification(preds: &[i8], truth: &[i8]) -> Result<usize> {
    if preds.len() != truth.len() {
        return Err(Error::DimensionMismatch {
            expected: truth.len(),
            got: preds.len(),
        });
    }
    Ok(preds.iter().zip(truth).filter(|(p, t)| p != t).count())
}

/// Rank order for descending scores with ties broken by row index.
pub fn rank_order(scores: &[f64]) -> Vec<usize> {
    let mut order: Vec<usize> = (0..scores.len()).collect();
    order.sort_by(|&a, &b| {
        scores[b]
            .partial_cmp(&scores[a])
            .unwrap_or(std::cmp::Ordering::Equal)
            .then(a.cmp(&b))
    });
    order
}

/// Average precision: mean over positives of precision at each
/// positive's rank, with scores descending and ties broken by index.
pub fn average_precision(scores: &[f64], truth: &[i8]) -> Result<f64> {
    if scores.len() != truth.len() {
        return Err(Error::DimensionMismatch {
            expected: truth.len(),
            got: scores.len(),
        });
    }
    let positives = truth.iter().filter(|&&y| y == 1).count();
    if positives == 0 {
        return Err(Error::EmptyClass("positive"));
    }
    let order = rank_order(scores);
    let mut hits = 0usize;
    let mut sum = 0.0;
    for (rank0, &idx) in order.iter().enumerate() {
        if truth[idx] == 1 {
            hits += 1;
            sum += hits as f64 / (rank0 + 1) as f64;
        }
    }
    Ok(sum / positives as f64)
}

/// Hit counts at the given cutoffs of the score-descending ordering.
pub fn hits_at(scores: &[f64], truth: &[i8], cutoffs: &[usize]) -> Result<Vec<(usize, usize)>> {
    if scores.len() != truth.len() {
        return Err(Error::DimensionMismatch {
            expected: truth.len(),
            got: scores.len(),
        });
    }
    let order = rank_order(scores);
    let mut out = Vec::with_capacity(cutoffs.len());
    for &k in cutoffs {
        let k = k.min(order.len());
        let hits = order[..k].iter().filter(|&&i| truth[i] == 1).count();
        out.push((k, hits));
    }
    Ok(out)
}

/// Average rank (1-based, ties averaged) of each entry.
fn average_ranks(values: &[f64]) -> Vec<f64> {
    let n = values.len();
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| values[a].partial_cmp(&values[b]).unwrap().then(a.cmp(&b)));
    let mut ranks = vec![0.0; n];
    let mut i = 0;
    while i < n {
        let mut j = i;
        while j + 1 < n && values[order[j + 1]] == values[order[i]] {
            j += 1;
        }
        let avg = (i + j) as f64 / 2.0 + 1.0;
        for &idx in &order[i..=j] {
            ranks[idx] = avg;
        }
        i = j + 1;
    }
    ranks
}

/// Spearman rank correlation with average ranks for ties.
pub fn spearman(a: &[f64], b: &[f64]) -> Result<f64> {
    if a.len() != b.len() {
        return Err(Error::DimensionMismatch {
            expected: a.len(),
            got: b.len(),
        });
    }
    if a.len() < 2 {
        return Err(Error::InvalidParameter(
            "spearman needs at least two observations".into(),
        ));
    }
    let ra = average_ranks(a);
    let rb = average_ranks(b);
    let n = a.len() as f64;
    let mean = (n + 1.0) / 2.0;
    let mut cov = 0.0;
    let mut va = 0.0;
    let mut vb = 0.0;
    for i in 0..a.len() {
        let da = ra[i] - mean;
        let db = rb[i] - mean;
        cov += da * db;
        va += da * da;
        vb += db * db;
    }
    if va == 0.0 || vb == 0.0 {
        return Err(Error::InvalidParameter(
            "spearman undefined for a constant sequence".into(),
        ));
    }
    Ok(cov / (va.sqrt() * vb.sqrt()))
}

/// Deterministic assignment of n rows to k folds with sizes differing
/// by at most one.
#[derive(Debug, Clone)]
pub struct FoldPlan {
    pub k: usize,
    assignment: Vec<usize>,
}

impl FoldPlan {
    pub fn new(n: usize, k: usize, seed: u64) -> Result<Self> {
        if k < 2 || k > n {
            return Err(Error::InvalidParameter(format!(
                "fold count must satisfy 2 <= k <= n, got k = {k}, n = {n}"
            )));
        }
        let mut indices: Vec<usize> = (0..n).collect();
        let mut rng = SeedTree::new(seed).rng();
        indices.shuffle(&mut rng);
        let mut assignment = vec![0usize; n];
        for (pos, &row) in indices.iter().enumerate() {
            assignment[row] = pos % k;
        }
        Ok(FoldPlan { k, assignment })
    }

    pub fn assignment(&self) -> &[usize] {
        &self.assignment
    }

    pub fn fold_indices(&self, fold: usize) -> (Vec<usize>, Vec<usize>) {
        let mut train = Vec::new();
        let mut test = Vec::new();
        for (row, &f) in self.assignment.iter().enumerate() {
            if f == fold {
                test.push(row);
            } else {
                train.push(row);
            }
        }
        (train, test)
    }
}

#[derive(Debug, Clone)]
pub struct KfoldResult {
    pub per_fold: Vec<f64>,
    pub mean: f64,
}

/// Standard k-fold loop. The trainer receives the fold index so it can
/// derive a per-fold seed; trainer errors propagate with the fold index.
pub fn kfold<M>(
    ds: &Dataset,
    plan: &FoldPlan,
    trainer: impl Fn(&Dataset, usize) -> Result<M>,
    evaluator: impl Fn(&M, &Dataset) -> Result<f64>,
) -> Result<KfoldResult> {
    let mut per_fold = Vec::with_capacity(plan.k);
    for fold in 0..plan.k {
        let (train_idx, test_idx) = plan.fold_indices(fold);
        let train = ds.subset(&train_idx)?;
        let test = ds.subset(&test_idx)?;
        let model = trainer(&train, fold).map_err(|e| Error::FoldRejected {
            fold,
            reason: e.to_string(),
        })?;
        per_fold.push(evaluator(&model, &test)?);
    }
    let mean = per_fold.iter().sum::<f64>() / per_fold.len() as f64;
    Ok(KfoldResult { per_fold, mean })
}
