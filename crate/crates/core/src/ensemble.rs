//! Tree base learners and the two ensemble constructions: AdaBoost by
//! observation reweighting and bootstrap forests with random feature
//! subsets (plain bagging is the m = d special case).
//!
//! AdaBoost follows the classical table verbatim: weights start at 1/n,
//! a misclassified point's weight is multiplied by R_b = (1−ε_b)/ε_b,
//! and members vote with a_b = log R_b. Weights are deliberately never
//! renormalized — the weighted-error formula divides by Σwᵢ, so
//! normalization is immaterial. After every update the just-fitted
//! member's reweighted error is exactly 1/2: each round decouples the
//! next member from the last.

use nalgebra::DMatrix;
use rayon::prelude::*;

use crate::data::{Dataset, SeedTree};
use crate::error::{Error, Result};
use crate::metrics::misclassification;

/// Binary decision tree stored as an arena; index 0 is the root.
#[derive(Debug, Clone, PartialEq)]
pub struct DecisionTree {
    nodes: Vec<Node>,
}

#[derive(Debug, Clone, PartialEq)]
enum Node {
    Leaf(i8),
    Split {
        feature: usize,
        threshold: f64,
        left: usize,
        right: usize,
    },
}

impl DecisionTree {
    fn leaf(label: i8) -> Self {
        DecisionTree {
            nodes: vec![Node::Leaf(label)],
        }
    }

    pub fn node_count(&self) -> usize {
        self.nodes.len()
    }

    pub fn depth(&self) -> usize {
        fn walk(nodes: &[Node], at: usize) -> usize {
            match nodes[at] {
                Node::Leaf(_) => 0,
                Node::Split { left, right, .. } => 1 + walk(nodes, left).max(walk(nodes, right)),
            }
        }
        walk(&self.nodes, 0)
    }

    /// Root split as (feature, threshold, left label, right label) when
    /// the tree is a stump.
    pub fn as_stump(&self) -> Option<(usize, f64, i8, i8)> {
        match self.nodes[0] {
            Node::Split {
                feature,
                threshold,
                left,
                right,
            } => match (&self.nodes[left], &self.nodes[right]) {
                (Node::Leaf(l), Node::Leaf(r)) => Some((feature, threshold, *l, *r)),
                _ => None,
            },
            Node::Leaf(l) => Some((0, f64::NEG_INFINITY, l, l)),
        }
    }

    pub fn predict_row(&self, x: &[f64]) -> i8 {
        let mut at = 0;
        loop {
            match self.nodes[at] {
                Node::Leaf(label) => return label,
                Node::Split {
                    feature,
                    threshold,
                    left,
                    right,
                } => {
                    at = if x[feature] <= threshold { left } else { right };
                }
            }
        }
    }

    pub fn predict(&self, x: &DMatrix<f64>) -> Vec<i8> {
        (0..x.nrows())
            .map(|i| {
                let row: Vec<f64> = x.row(i).iter().copied().collect();
                self.predict_row(&row)
            })
            .collect()
    }
}

/// Exhaustive weighted decision stump: minimizes weighted
/// misclassification over every (feature, midpoint threshold, polarity),
/// including the constant stump (threshold −∞). Ties break toward the
/// lowest feature index, then the lowest threshold, then the (−1 left,
/// +1 right) polarity.
pub fn fit_stump(ds: &Dataset, weights: &[f64]) -> Result<DecisionTree> {
    let labels = ds.labels()?;
    let n = ds.n();
    if weights.len() != n {
        return Err(Error::DimensionMismatch {
            expected: n,
            got: weights.len(),
        });
    }
    if weights.iter().any(|&w| !(w >= 0.0)) {
        return Err(Error::InvalidParameter("weights must be nonnegative".into()));
    }
    let total: f64 = weights.iter().sum();
    if !(total > 0.0) {
        return Err(Error::InvalidParameter("weights sum to zero".into()));
    }
    let pos_weight: f64 = (0..n).filter(|&i| labels[i] == 1).map(|i| weights[i]).sum();
    let neg_weight = total - pos_weight;

    // constant stump baseline: threshold −∞ sends everything right
    let mut best_err = pos_weight.min(neg_weight);
    let mut best = (
        0usize,
        f64::NEG_INFINITY,
        if neg_weight <= pos_weight { 1 } else { -1 },
        if neg_weight <= pos_weight { 1 } else { -1 },
    );
    // tie-break within the constant case already fixed: prefer +1 on ties
    for feature in 0..ds.d() {
        let mut order: Vec<usize> = (0..n).collect();
        order.sort_by(|&a, &b| {
            ds.features()[(a, feature)]
                .partial_cmp(&ds.features()[(b, feature)])
                .unwrap()
                .then(a.cmp(&b))
        });
        // walk thresholds left to right, maintaining left-side class weights
        let mut left_pos = 0.0;
        let mut left_neg = 0.0;
        let mut i = 0;
        while i < n {
            let v = ds.features()[(order[i], feature)];
            // absorb the tied block into the left side
            while i < n && ds.features()[(order[i], feature)] == v {
                let w = weights[order[i]];
                if labels[order[i]] == 1 {
                    left_pos += w;
                } else {
                    left_neg += w;
                }
                i += 1;
            }
            if i == n {
                break; // no midpoint after the largest value
            }
            let next = ds.features()[(order[i], feature)];
            let threshold = v + (next - v) / 2.0;
            let right_pos = pos_weight - left_pos;
            let right_neg = neg_weight - left_neg;
            // polarity (−1 left, +1 right), then (+1 left, −1 right)
            for (ll, lr, err) in [
                (-1i8, 1i8, left_pos + right_neg),
                (1, -1, left_neg + right_pos),
            ] {
                if err < best_err - 1e-15 {
                    best_err = err;
                    best = (feature, threshold, ll, lr);
                }
            }
        }
    }
    if best.1 == f64::NEG_INFINITY {
        return Ok(DecisionTree::leaf(best.2));
    }
    Ok(DecisionTree {
        nodes: vec![
            Node::Split {
                feature: best.0,
                threshold: best.1,
                left: 1,
                right: 2,
            },
            Node::Leaf(best.2),
            Node::Leaf(best.3),
        ],
    })
}

/// Weighted majority label with ties going to +1.
fn majority(labels: &[i8], idx: &[usize], weights: Option<&[f64]>) -> i8 {
    let mut pos = 0.0;
    let mut neg = 0.0;
    for &i in idx {
        let w = weights.map_or(1.0, |w| w[i]);
        if labels[i] == 1 {
            pos += w;
        } else {
            neg += w;
        }
    }
    if pos >= neg {
        1
    } else {
        -1
    }
}

fn weighted_gini(pos: f64, neg: f64) -> f64 {
    let total = pos + neg;
    if total <= 0.0 {
        return 0.0;
    }
    let p = pos / total;
    2.0 * p * (1.0 - p) * total
}

struct TreeBuilder<'a> {
    features: &'a DMatrix<f64>,
    labels: &'a [i8],
    weights: Option<&'a [f64]>,
    m: usize,
    max_depth: Option<usize>,
    nodes: Vec<Node>,
}

impl<'a> TreeBuilder<'a> {
    /// Best (feature, threshold) over a uniform size-m feature subset by
    /// summed weighted Gini impurity of the children; ties break toward
    /// the lowest feature, then the lowest threshold.
    fn best_split(&self, idx: &[usize], rng: &mut impl rand::Rng) -> Option<(usize, f64)> {
        let d = self.features.ncols();
        let candidates: Vec<usize> = if self.m >= d {
            (0..d).collect() // m = d: no sampling, tree is deterministic given data
        } else {
            rand::seq::index::sample(rng, d, self.m).into_vec()
        };
        let mut sorted_candidates = candidates;
        sorted_candidates.sort_unstable();

        let mut best: Option<(f64, usize, f64)> = None;
        for &feature in &sorted_candidates {
            let mut order: Vec<usize> = idx.to_vec();
            order.sort_by(|&a, &b| {
                self.features[(a, feature)]
                    .partial_cmp(&self.features[(b, feature)])
                    .unwrap()
                    .then(a.cmp(&b))
            });
            let total_pos: f64 = order
                .iter()
                .filter(|&&i| self.labels[i] == 1)
                .map(|&i| self.weights.map_or(1.0, |w| w[i]))
                .sum();
            let total_neg: f64 = order
                .iter()
                .filter(|&&i| self.labels[i] == -1)
                .map(|&i| self.weights.map_or(1.0, |w| w[i]))
                .sum();
            let mut left_pos = 0.0;
            let mut left_neg = 0.0;
            let mut i = 0;
            while i < order.len() {
                let v = self.features[(order[i], feature)];
                while i < order.len() && self.features[(order[i], feature)] == v {
                    let w = self.weights.map_or(1.0, |w| w[order[i]]);
                    if self.labels[order[i]] == 1 {
                        left_pos += w;
                    } else {
                        left_neg += w;
                    }
                    i += 1;
                }
                if i == order.len() {
                    break;
                }
                let next = self.features[(order[i], feature)];
                let threshold = v + (next - v) / 2.0;
                let impurity = weighted_gini(left_pos, left_neg)
                    + weighted_gini(total_pos - left_pos, total_neg - left_neg);
                let better = match best {
                    None => true,
                    Some((b, _, _)) => impurity < b - 1e-12,
                };
                if better {
                    best = Some((impurity, feature, threshold));
                }
            }
        }
        best.map(|(_, f, t)| (f, t))
    }

    fn grow(&mut self, idx: &[usize], depth: usize, rng: &mut impl rand::Rng) -> usize {
        let label = majority(self.labels, idx, self.weights);
        let pure = idx.iter().all(|&i| self.labels[i] == self.labels[idx[0]]);
        let at_depth = self.max_depth.is_some_and(|d| depth >= d);
        if pure || at_depth {
            self.nodes.push(Node::Leaf(label));
            return self.nodes.len() - 1;
        }
        let Some((feature, threshold)) = self.best_split(idx, rng) else {
            self.nodes.push(Node::Leaf(label));
            return self.nodes.len() - 1;
        };
        let (left_idx, right_idx): (Vec<usize>, Vec<usize>) = idx
            .iter()
            .partition(|&&i| self.features[(i, feature)] <= threshold);
        if left_idx.is_empty() || right_idx.is_empty() {
            // subset contained no separating feature at this node
            self.nodes.push(Node::Leaf(label));
            return self.nodes.len() - 1;
        }
        let here = self.nodes.len();
        self.nodes.push(Node::Leaf(label)); // placeholder
        let left = self.grow(&left_idx, depth + 1, rng);
        let right = self.grow(&right_idx, depth + 1, rng);
        self.nodes[here] = Node::Split {
            feature,
            threshold,
            left,
            right,
        };
        here
    }
}

/// Grow a Gini tree on the given index multiset: maximal depth unless
/// capped, size-m random feature subset before each split (no sampling
/// when m = d, so the tree is deterministic conditional on the data).
pub fn fit_tree(
    ds: &Dataset,
    sample: &[usize],
    m: usize,
    max_depth: Option<usize>,
    seed: u64,
) -> Result<DecisionTree> {
    let labels = ds.labels()?;
    if sample.is_empty() {
        return Err(Error::InvalidParameter("empty bootstrap sample".into()));
    }
    if m == 0 || m > ds.d() {
        return Err(Error::InvalidParameter(format!(
            "feature subset size must satisfy 1 <= m <= d = {}, got {m}",
            ds.d()
        )));
    }
    if let Some(&bad) = sample.iter().find(|&&i| i >= ds.n()) {
        return Err(Error::InvalidParameter(format!(
            "sample index {bad} out of range for n = {}",
            ds.n()
        )));
    }
    let mut builder = TreeBuilder {
        features: ds.features(),
        labels,
        weights: None,
        m,
        max_depth,
        nodes: Vec::new(),
    };
    let mut rng = SeedTree::new(seed).rng();
    let root = builder.grow(sample, 0, &mut rng);
    debug_assert_eq!(root, 0);
    let mut nodes = builder.nodes;
    // grow() appends the root placeholder first, so index 0 is the root
    if nodes.is_empty() {
        nodes.push(Node::Leaf(1));
    }
    Ok(DecisionTree { nodes })
}

/// Weighted Gini tree on all rows — the configurable-depth AdaBoost base
/// learner (depth 1 delegates to the exhaustive stump).
fn fit_weighted_tree(ds: &Dataset, weights: &[f64], depth: usize) -> Result<DecisionTree> {
    if depth == 1 {
        return fit_stump(ds, weights);
    }
    let labels = ds.labels()?;
    let idx: Vec<usize> = (0..ds.n()).collect();
    let mut builder = TreeBuilder {
        features: ds.features(),
        labels,
        weights: Some(weights),
        m: ds.d(),
        max_depth: Some(depth),
        nodes: Vec::new(),
    };
    let mut rng = SeedTree::new(0).rng(); // unused: m = d draws nothing
    builder.grow(&idx, 0, &mut rng);
    Ok(DecisionTree {
        nodes: builder.nodes,
    })
}

#[derive(Debug, Clone)]
pub struct BoostEnsemble {
    pub members: Vec<(DecisionTree, f64)>,
    /// Per-round (epsilon, R) for diagnostics.
    pub rounds: Vec<(f64, f64)>,
    /// Final observation weights (never renormalized).
    pub weights: Vec<f64>,
    /// True when a perfect member ended construction early.
    pub stopped_perfect: bool,
}

impl BoostEnsemble {
    pub fn decision_value(&self, x: &[f64]) -> f64 {
        self.members
            .iter()
            .map(|(tree, a)| a * tree.predict_row(x) as f64)
            .sum()
    }

    pub fn predict_row(&self, x: &[f64]) -> i8 {
        if self.decision_value(x) >= 0.0 {
            1
        } else {
            -1
        }
    }

    pub fn predict(&self, x: &DMatrix<f64>) -> Vec<i8> {
        (0..x.nrows())
            .map(|i| {
                let row: Vec<f64> = x.row(i).iter().copied().collect();
                self.predict_row(&row)
            })
            .collect()
    }
}

/// AdaBoost with observation reweighting. `base_depth` = 1 uses
/// exhaustive stumps. A perfect member (ε = 0) gets R capped at
/// (1−εmin)/εmin with εmin = 1/(2n) and stops construction; ε ≥ 0.5 at
/// round 1 is a base-learner failure, at later rounds it stops quietly.
pub fn adaboost(ds: &Dataset, b_max: usize, base_depth: usize) -> Result<BoostEnsemble> {
    let labels = ds.labels()?;
    let n = ds.n();
    if b_max == 0 {
        return Err(Error::InvalidParameter("B must be at least 1".into()));
    }
    if base_depth == 0 {
        return Err(Error::InvalidParameter("base depth must be at least 1".into()));
    }
    let mut weights = vec![1.0 / n as f64; n];
    let mut members = Vec::new();
    let mut rounds = Vec::new();
    let mut stopped_perfect = false;
    for b in 0..b_max {
        let tree = fit_weighted_tree(ds, &weights, base_depth)?;
        let preds = tree.predict(ds.features());
        let total: f64 = weights.iter().sum();
        let wrong: f64 = (0..n)
            .filter(|&i| preds[i] != labels[i])
            .map(|i| weights[i])
            .sum();
        let epsilon = wrong / total;
        if epsilon >= 0.5 {
            if b == 0 {
                return Err(Error::BaseLearnerFailure { epsilon });
            }
            break;
        }
        if epsilon == 0.0 {
            let eps_min = 1.0 / (2.0 * n as f64);
            let r_cap = (1.0 - eps_min) / eps_min;
            members.push((tree, r_cap.ln()));
            rounds.push((0.0, r_cap));
            stopped_perfect = true;
            break;
        }
        let r = (1.0 - epsilon) / epsilon;
        for i in 0..n {
            if preds[i] != labels[i] {
                weights[i] *= r;
            }
        }
        members.push((tree, r.ln()));
        rounds.push((epsilon, r));
    }
    Ok(BoostEnsemble {
        members,
        rounds,
        weights,
        stopped_perfect,
    })
}

#[derive(Debug, Clone)]
pub struct Forest {
    pub members: Vec<DecisionTree>,
    pub m: usize,
    pub seed: u64,
}

impl Forest {
    /// Unweighted majority vote; ties go to +1.
    pub fn predict(&self, x: &DMatrix<f64>) -> Vec<i8> {
        let votes = self.vote_sums(x);
        votes.iter().map(|&v| if v >= 0 { 1 } else { -1 }).collect()
    }

    pub fn vote_sums(&self, x: &DMatrix<f64>) -> Vec<i64> {
        let mut sums = vec![0i64; x.nrows()];
        for tree in &self.members {
            for (s, p) in sums.iter_mut().zip(tree.predict(x)) {
                *s += p as i64;
            }
        }
        sums
    }
}

fn bootstrap_indices(n: usize, rng: &mut impl rand::Rng) -> Vec<usize> {
    (0..n).map(|_| rng.random_range(0..n)).collect()
}

fn forest_with_options(
    ds: &Dataset,
    b: usize,
    m: usize,
    seed: u64,
    bootstrap: bool,
) -> Result<Forest> {
    ds.labels()?;
    if b == 0 {
        return Err(Error::InvalidParameter("B must be at least 1".into()));
    }
    if m == 0 || m > ds.d() {
        return Err(Error::InvalidParameter(format!(
            "feature subset size must satisfy 1 <= m <= d = {}, got {m}",
            ds.d()
        )));
    }
    let tree_seeds = SeedTree::new(seed);
    let members: Vec<DecisionTree> = (0..b)
        .into_par_iter()
        .map(|t| {
            let node = tree_seeds.child(t as u32);
            let sample = if bootstrap {
                let mut rng = node.child(0).rng();
                bootstrap_indices(ds.n(), &mut rng)
            } else {
                (0..ds.n()).collect()
            };
            fit_tree(ds, &sample, m, None, node.child(1).seed())
        })
        .collect::<Result<_>>()?;
    Ok(Forest { members, m, seed })
}

/// Breiman-style random forest: B maximal-depth Gini trees, each on an
/// independent bootstrap resample with a fresh size-m feature subset
/// before every split. Trees train concurrently on derived seeds, so
/// the forest is identical for any worker count.
pub fn random_forest(ds: &Dataset, b: usize, m: usize, seed: u64) -> Result<Forest> {
    forest_with_options(ds, b, m, seed, true)
}

/// Bagging is the forest with the subset step removed (m = d).
pub fn bagging(ds: &Dataset, b: usize, seed: u64) -> Result<Forest> {
    random_forest(ds, b, ds.d(), seed)
}

#[cfg(test)]
pub(crate) fn forest_without_bootstrap(ds: &Dataset, b: usize, m: usize, seed: u64) -> Result<Forest> {
    forest_with_options(ds, b, m, seed, false)
}

/// Misclassification counts on `test` for every (m, B) pair. For each m
/// the maximal B's trees are grown once and vote prefixes give the
/// smaller B columns, so rows of the grid share trees. `errors[i][j]`
/// corresponds to `(ms[i], bs[j])`.
pub fn forest_grid(
    train: &Dataset,
    test: &Dataset,
    ms: &[usize],
    bs: &[usize],
    seed: u64,
) -> Result<Vec<Vec<usize>>> {
    if ms.is_empty() || bs.is_empty() {
        return Err(Error::InvalidParameter("grids must be nonempty".into()));
    }
    let truth = test.labels()?.to_vec();
    let b_max = *bs.iter().max().unwrap();
    let tree = SeedTree::new(seed);
    let rows: Vec<Result<Vec<usize>>> = ms
        .par_iter()
        .enumerate()
        .map(|(mi, &m)| {
            let forest = forest_with_options(train, b_max, m, tree.child(mi as u32).seed(), true)?;
            let mut sums = vec![0i64; test.n()];
            let mut by_prefix = vec![0usize; bs.len()];
            let mut cuts: Vec<(usize, usize)> = bs.iter().copied().enumerate().collect();
            cuts.sort_by_key(|&(_, b)| b);
            let mut cut_pos = 0;
            for (t, member) in forest.members.iter().enumerate() {
                for (s, p) in sums.iter_mut().zip(member.predict(test.features())) {
                    *s += p as i64;
                }
                while cut_pos < cuts.len() && cuts[cut_pos].1 == t + 1 {
                    let preds: Vec<i8> = sums.iter().map(|&v| if v >= 0 { 1 } else { -1 }).collect();
                    by_prefix[cuts[cut_pos].0] = misclassification(&preds, &truth)?;
                    cut_pos += 1;
                }
            }
            Ok(by_prefix)
        })
        .collect();
    rows.into_iter().collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::data::Response;
    use rand::Rng;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn ds_1d(xs: &[f64], ys: &[i8]) -> Dataset {
        let features = DMatrix::from_column_slice(xs.len(), 1, xs);
        Dataset::from_parts(features, Response::Class(ys.to_vec())).unwrap()
    }

    fn ds_2d(rows: &[(f64, f64, i8)]) -> Dataset {
        let features = DMatrix::from_fn(rows.len(), 2, |i, j| if j == 0 { rows[i].0 } else { rows[i].1 });
        let labels: Vec<i8> = rows.iter().map(|r| r.2).collect();
        Dataset::from_parts(features, Response::Class(labels)).unwrap()
    }

    fn stump_error(ds: &Dataset, weights: &[f64], tree: &DecisionTree) -> f64 {
        let labels = ds.labels().unwrap();
        let preds = tree.predict(ds.features());
        (0..ds.n())
            .filter(|&i| preds[i] != labels[i])
            .map(|i| weights[i])
            .sum()
    }

    #[test]
    fn stump_separable_1d() {
        let ds = ds_1d(&[1.0, 2.0, 3.0, 4.0], &[-1, -1, 1, 1]);
        let w = vec![0.25; 4];
        let stump = fit_stump(&ds, &w).unwrap();
        let (f, t, l, r) = stump.as_stump().unwrap();
        assert_eq!(f, 0);
        assert!(t > 2.0 && t < 3.0);
        assert_eq!((l, r), (-1, 1));
        assert_eq!(stump_error(&ds, &w, &stump), 0.0);
    }

    #[test]
    fn stump_degenerate_weights_unique() {
        let ds = ds_1d(&[1.0, 2.0, 3.0, 4.0], &[1, -1, 1, -1]);
        let mut w = vec![0.0; 4];
        w[2] = 1.0;
        let a = fit_stump(&ds, &w).unwrap();
        let b = fit_stump(&ds, &w).unwrap();
        assert_eq!(a, b);
        assert_eq!(stump_error(&ds, &w, &a), 0.0);
        assert_eq!(a.predict_row(&[3.0]), 1);
    }

    /// Brute-force enumeration oracle over every (feature, midpoint,
    /// polarity) candidate including the constant stump.
    fn stump_oracle_error(ds: &Dataset, weights: &[f64]) -> f64 {
        let labels = ds.labels().unwrap();
        let n = ds.n();
        let constant = |label: i8| -> f64 {
            (0..n)
                .filter(|&i| labels[i] != label)
                .map(|i| weights[i])
                .sum()
        };
        let mut best = constant(1).min(constant(-1));
        for f in 0..ds.d() {
            let mut values: Vec<f64> = (0..n).map(|i| ds.features()[(i, f)]).collect();
            values.sort_by(|a, b| a.partial_cmp(b).unwrap());
            values.dedup();
            for w in values.windows(2) {
                let thr = (w[0] + w[1]) / 2.0;
                for (ll, lr) in [(-1i8, 1i8), (1, -1)] {
                    let err: f64 = (0..n)
                        .filter(|&i| {
                            let pred = if ds.features()[(i, f)] <= thr { ll } else { lr };
                            pred != labels[i]
                        })
                        .map(|i| weights[i])
                        .sum();
                    best = best.min(err);
                }
            }
        }
        best
    }

    #[test]
    fn stump_matches_enumeration_oracle() {
        let mut rng = ChaCha8Rng::seed_from_u64(21);
        for trial in 0..30 {
            let n = 12;
            let features = DMatrix::from_fn(n, 3, |_, _| rng.random_range(-2.0..2.0));
            let labels: Vec<i8> = (0..n).map(|_| if rng.random::<bool>() { 1 } else { -1 }).collect();
            let ds = Dataset::from_parts(features, Response::Class(labels)).unwrap();
            let weights: Vec<f64> = (0..n).map(|_| rng.random_range(0.1..1.0)).collect();
            let stump = fit_stump(&ds, &weights).unwrap();
            let got = stump_error(&ds, &weights, &stump);
            let oracle = stump_oracle_error(&ds, &weights);
            assert!((got - oracle).abs() < 1e-12, "trial {trial}: {got} vs {oracle}");
        }
    }

    #[test]
    fn stump_rejects_zero_weights() {
        let ds = ds_1d(&[1.0, 2.0], &[1, -1]);
        assert!(fit_stump(&ds, &[0.0, 0.0]).is_err());
    }

    #[test]
    fn adaboost_single_round_closed_form() {
        // stump errs on exactly one of four equally weighted points
        let ds = ds_2d(&[(0.0, 0.0, 1), (1.0, 0.0, -1), (0.0, 1.0, -1), (2.0, 2.0, 1)]);
        let ensemble = adaboost(&ds, 1, 1).unwrap();
        assert_eq!(ensemble.members.len(), 1);
        let (epsilon, r) = ensemble.rounds[0];
        assert!((epsilon - 0.25).abs() < 1e-12);
        assert!((r - 3.0).abs() < 1e-12);
        assert!((ensemble.members[0].1 - 3.0f64.ln()).abs() < 1e-12);
        // the wrong point's weight went from 0.25 to 0.75
        let labels = ds.labels().unwrap();
        let preds = ensemble.members[0].0.predict(ds.features());
        let wrong: Vec<usize> = (0..4).filter(|&i| preds[i] != labels[i]).collect();
        assert_eq!(wrong.len(), 1);
        assert!((ensemble.weights[wrong[0]] - 0.75).abs() < 1e-12);
        // reweighted error of the member is exactly 1/2
        let total: f64 = ensemble.weights.iter().sum();
        let werr: f64 = wrong.iter().map(|&i| ensemble.weights[i]).sum();
        assert!((werr / total - 0.5).abs() < 1e-10);
    }

    #[test]
    fn adaboost_separable_single_stump() {
        let ds = ds_1d(&[1.0, 2.0, 3.0, 4.0], &[-1, -1, 1, 1]);
        let ensemble = adaboost(&ds, 1, 1).unwrap();
        assert_eq!(ensemble.members.len(), 1);
        assert!(ensemble.stopped_perfect);
        let preds = ensemble.predict(ds.features());
        assert_eq!(misclassification(&preds, ds.labels().unwrap()).unwrap(), 0);
    }

    #[test]
    fn adaboost_beats_best_single_stump_on_xor_like_set() {
        let ds = ds_2d(&[(0.0, 0.0, 1), (1.0, 0.0, -1), (0.0, 1.0, -1), (2.0, 2.0, 1)]);
        // exhaustive enumeration: no stump scores below 1 error
        let equal = vec![1.0; 4];
        assert!((stump_oracle_error(&ds, &equal) - 1.0).abs() < 1e-12);
        let ensemble = adaboost(&ds, 10, 1).unwrap();
        let preds = ensemble.predict(ds.features());
        assert_eq!(misclassification(&preds, ds.labels().unwrap()).unwrap(), 0);
    }

    #[test]
    fn adaboost_base_failure_on_pure_xor() {
        // every stump errs on exactly half the weight: ε = 0.5 at round 1
        let ds = ds_2d(&[(0.0, 0.0, 1), (1.0, 1.0, 1), (0.0, 1.0, -1), (1.0, 0.0, -1)]);
        assert!(matches!(
            adaboost(&ds, 5, 1).unwrap_err(),
            Error::BaseLearnerFailure { .. }
        ));
    }

    #[test]
    fn adaboost_half_weight_identity_randomized() {
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        for trial in 0..20 {
            let n = 30;
            let features = DMatrix::from_fn(n, 4, |_, _| rng.random_range(-1.0..1.0));
            let labels: Vec<i8> = (0..n)
                .map(|i| {
                    let x = features[(i, 0)] + features[(i, 1)] * features[(i, 2)];
                    if x + rng.random_range(-0.3..0.3) > 0.0 { 1 } else { -1 }
                })
                .collect();
            let ds = Dataset::from_parts(features, Response::Class(labels.clone())).unwrap();
            let Ok(ensemble) = adaboost(&ds, 8, 1) else { continue };
            // replay the weight trajectory and check the identity per round
            let mut w = vec![1.0 / n as f64; n];
            for (round, ((tree, _), &(epsilon, r))) in
                ensemble.members.iter().zip(&ensemble.rounds).enumerate()
            {
                if epsilon == 0.0 {
                    break; // capped perfect member: no update applied
                }
                let preds = tree.predict(ds.features());
                for i in 0..n {
                    if preds[i] != labels[i] {
                        w[i] *= r;
                    }
                }
                let total: f64 = w.iter().sum();
                let wrong: f64 = (0..n)
                    .filter(|&i| preds[i] != labels[i])
                    .map(|i| w[i])
                    .sum();
                assert!(
                    (wrong / total - 0.5).abs() < 1e-10,
                    "trial {trial} round {round}: {}",
                    wrong / total
                );
                assert!(w.iter().all(|&wi| wi > 0.0));
            }
        }
    }

    #[test]
    fn tree_pure_sample_is_single_leaf() {
        let ds = ds_1d(&[1.0, 2.0, 3.0], &[1, 1, 1]);
        let tree = fit_tree(&ds, &[0, 1, 2], 1, None, 0).unwrap();
        assert_eq!(tree.node_count(), 1);
        assert_eq!(tree.predict_row(&[5.0]), 1);
    }

    #[test]
    fn tree_full_m_is_deterministic() {
        let mut rng = ChaCha8Rng::seed_from_u64(10);
        let features = DMatrix::from_fn(25, 3, |_, _| rng.random_range(-1.0..1.0));
        let labels: Vec<i8> = (0..25).map(|i| if i % 3 == 0 { 1 } else { -1 }).collect();
        let ds = Dataset::from_parts(features, Response::Class(labels)).unwrap();
        let sample: Vec<usize> = (0..25).collect();
        // different seeds, same tree: m = d never consults the stream
        let a = fit_tree(&ds, &sample, 3, None, 1).unwrap();
        let b = fit_tree(&ds, &sample, 3, None, 999).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn maximal_tree_shatters_checkerboard() {
        let ds = ds_2d(&[
            (0.0, 0.0, 1),
            (1.0, 0.0, -1),
            (2.0, 0.0, 1),
            (3.0, 0.0, -1),
            (0.0, 1.0, -1),
            (1.0, 1.0, 1),
            (2.0, 1.0, -1),
            (3.0, 1.0, 1),
        ]);
        let sample: Vec<usize> = (0..8).collect();
        for seed in 0..5 {
            let tree = fit_tree(&ds, &sample, 2, None, seed).unwrap();
            let preds = tree.predict(ds.features());
            assert_eq!(misclassification(&preds, ds.labels().unwrap()).unwrap(), 0);
        }
    }

    #[test]
    fn maximal_tree_zero_error_on_own_sample() {
        let mut rng = ChaCha8Rng::seed_from_u64(17);
        for trial in 0..10 {
            let n = 40;
            let features = DMatrix::from_fn(n, 4, |_, _| rng.random_range(-3.0..3.0));
            let labels: Vec<i8> = (0..n).map(|_| if rng.random::<bool>() { 1 } else { -1 }).collect();
            let ds = Dataset::from_parts(features, Response::Class(labels.clone())).unwrap();
            let sample: Vec<usize> = (0..n).map(|_| rng.random_range(0..n)).collect();
            let tree = fit_tree(&ds, &sample, 2, None, trial).unwrap();
            for &i in &sample {
                let row: Vec<f64> = ds.features().row(i).iter().copied().collect();
                assert_eq!(tree.predict_row(&row), labels[i], "trial {trial} row {i}");
            }
        }
    }

    #[test]
    fn forest_reduces_to_single_tree_without_bootstrap() {
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let features = DMatrix::from_fn(30, 3, |_, _| rng.random_range(-1.0..1.0));
        let labels: Vec<i8> = (0..30).map(|i| if i % 2 == 0 { 1 } else { -1 }).collect();
        let ds = Dataset::from_parts(features, Response::Class(labels)).unwrap();
        let forest = forest_without_bootstrap(&ds, 1, 3, 7).unwrap();
        let sample: Vec<usize> = (0..30).collect();
        let direct = fit_tree(&ds, &sample, 3, None, 0).unwrap();
        assert_eq!(forest.members[0], direct);
    }

    #[test]
    fn forest_determinism_and_member_order_invariance() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let features = DMatrix::from_fn(60, 4, |_, _| rng.random_range(-1.0..1.0));
        let labels: Vec<i8> = (0..60)
            .map(|i| if features[(i, 0)] + features[(i, 1)] > 0.0 { 1 } else { -1 })
            .collect();
        let ds = Dataset::from_parts(features, Response::Class(labels)).unwrap();
        let queries = DMatrix::from_fn(100, 4, |_, _| rng.random_range(-1.0..1.0));
        let a = random_forest(&ds, 15, 2, 42).unwrap();
        let b = random_forest(&ds, 15, 2, 42).unwrap();
        assert_eq!(a.predict(&queries), b.predict(&queries));
        // member order must not matter for the vote
        let mut shuffled = a.clone();
        shuffled.members.reverse();
        assert_eq!(a.predict(&queries), shuffled.predict(&queries));
    }

    #[test]
    fn bagging_equals_forest_with_full_m() {
        let mut rng = ChaCha8Rng::seed_from_u64(13);
        let features = DMatrix::from_fn(40, 3, |_, _| rng.random_range(-1.0..1.0));
        let labels: Vec<i8> = (0..40).map(|i| if i % 3 == 0 { 1 } else { -1 }).collect();
        let ds = Dataset::from_parts(features, Response::Class(labels)).unwrap();
        let bagged = bagging(&ds, 10, 5).unwrap();
        let forest = random_forest(&ds, 10, 3, 5).unwrap();
        assert_eq!(bagged.members, forest.members);
    }

    #[test]
    fn single_class_forest_is_constant() {
        let ds = ds_1d(&[1.0, 2.0, 3.0, 4.0], &[1, 1, 1, 1]);
        let forest = random_forest(&ds, 5, 1, 0).unwrap();
        let queries = DMatrix::from_column_slice(3, 1, &[-10.0, 0.0, 10.0]);
        assert_eq!(forest.predict(&queries), vec![1, 1, 1]);
    }

    #[test]
    fn grid_single_cell_matches_direct_forest() {
        let mut rng = ChaCha8Rng::seed_from_u64(6);
        let features = DMatrix::from_fn(50, 3, |_, _| rng.random_range(-1.0..1.0));
        let labels: Vec<i8> = (0..50)
            .map(|i| if features[(i, 0)] > 0.0 { 1 } else { -1 })
            .collect();
        let ds = Dataset::from_parts(features, Response::Class(labels)).unwrap();
        let test_features = DMatrix::from_fn(30, 3, |_, _| rng.random_range(-1.0..1.0));
        let test_labels: Vec<i8> = (0..30)
            .map(|i| if test_features[(i, 0)] > 0.0 { 1 } else { -1 })
            .collect();
        let test = Dataset::from_parts(test_features, Response::Class(test_labels)).unwrap();
        let grid = forest_grid(&ds, &test, &[2], &[7], 11).unwrap();
        let forest = random_forest(&ds, 7, 2, SeedTree::new(11).child(0).seed()).unwrap();
        let preds = forest.predict(test.features());
        let direct = misclassification(&preds, test.labels().unwrap()).unwrap();
        assert_eq!(grid, vec![vec![direct]]);
    }

    #[test]
    fn grid_prefix_votes_match_unsorted_b_order() {
        let mut rng = ChaCha8Rng::seed_from_u64(26);
        let features = DMatrix::from_fn(40, 2, |_, _| rng.random_range(-1.0..1.0));
        let labels: Vec<i8> = (0..40)
            .map(|i| if features[(i, 1)] > 0.0 { 1 } else { -1 })
            .collect();
        let ds = Dataset::from_parts(features.clone(), Response::Class(labels.clone())).unwrap();
        let test = Dataset::from_parts(features, Response::Class(labels)).unwrap();
        let a = forest_grid(&ds, &test, &[1, 2], &[5, 3, 9], 4).unwrap();
        let b = forest_grid(&ds, &test, &[1, 2], &[3, 5, 9], 4).unwrap();
        assert_eq!(a[0][0], b[0][1]);
        assert_eq!(a[0][1], b[0][0]);
        assert_eq!(a[1][2], b[1][2]);
    }
}
