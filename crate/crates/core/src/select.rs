//! Variable selection for linear regression: the penalized criterion
//! F(ω) = n·ln(RSS(ω)/n) + γ(|ω|+1), exhaustive enumeration for small d,
//! a small genetic algorithm, the parallel-universes vote (many short
//! independent runs, per-variable majority), and a bagged stepwise
//! baseline.

use nalgebra::{DMatrix, DVector};
use rand::Rng;
use rayon::prelude::*;

use crate::data::{Dataset, SeedTree};
use crate::error::{Error, Result};

/// Hard cap for exhaustive enumeration (2^20 ≈ 10⁶ fits).
pub const EXHAUSTIVE_CAP: usize = 20;

/// RSS floor relative to TSS, applied before the logarithm so an exact
/// interpolation cannot produce −∞.
pub const RSS_FLOOR_REL: f64 = 1e-12;

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct SubsetMask {
    bits: Vec<bool>,
}

impl SubsetMask {
    pub fn empty(d: usize) -> Self {
        SubsetMask { bits: vec![false; d] }
    }

    pub fn from_bits(bits: Vec<bool>) -> Self {
        SubsetMask { bits }
    }

    /// Mask from an integer encoding: bit j set means variable j is in.
    pub fn from_integer(value: u64, d: usize) -> Self {
        SubsetMask {
            bits: (0..d).map(|j| value >> j & 1 == 1).collect(),
        }
    }

    pub fn to_integer(&self) -> u64 {
        self.bits
            .iter()
            .enumerate()
            .fold(0, |acc, (j, &b)| if b { acc | 1 << j } else { acc })
    }

    pub fn d(&self) -> usize {
        self.bits.len()
    }

    pub fn len(&self) -> usize {
        self.bits.iter().filter(|&&b| b).count()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn contains(&self, j: usize) -> bool {
        self.bits[j]
    }

    pub fn set(&mut self, j: usize, on: bool) {
        self.bits[j] = on;
    }

    pub fn toggle(&mut self, j: usize) {
        self.bits[j] = !self.bits[j];
    }

    /// Selected column indices, ascending.
    pub fn indices(&self) -> Vec<usize> {
        (0..self.bits.len()).filter(|&j| self.bits[j]).collect()
    }

    pub fn bits(&self) -> &[bool] {
        &self.bits
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CriterionSpec {
    pub gamma: f64,
}

impl CriterionSpec {
    pub fn aic() -> Self {
        CriterionSpec { gamma: 2.0 }
    }

    pub fn bic(n: usize) -> Self {
        CriterionSpec {
            gamma: (n as f64).ln(),
        }
    }

    pub fn custom(gamma: f64) -> Result<Self> {
        if !(gamma > 0.0) {
            return Err(Error::InvalidParameter("gamma must be positive".into()));
        }
        Ok(CriterionSpec { gamma })
    }
}

/// Centered total sum of squares of the response.
fn total_ss(y: &[f64]) -> f64 {
    let n = y.len() as f64;
    let mean = y.iter().sum::<f64>() / n;
    y.iter().map(|v| (v - mean).powi(2)).sum()
}

/// RSS of an intercept-always least-squares fit on the masked columns,
/// via SVD. Rank deficiency returns +∞ (the subset is unusable, not an
/// error).
fn masked_rss(ds: &Dataset, mask: &SubsetMask) -> Result<f64> {
    let y_slice = ds.reals()?;
    let n = ds.n();
    let cols = mask.indices();
    let p = cols.len() + 1;
    if n <= p {
        return Err(Error::Unfittable { n, size: mask.len() });
    }
    let x = DMatrix::from_fn(n, p, |i, j| {
        if j == 0 {
            1.0
        } else {
            ds.features()[(i, cols[j - 1])]
        }
    });
    let y = DVector::from_column_slice(y_slice);
    let svd = x.clone().svd(true, true);
    let scale = svd.singular_values.max();
    let eps = 1e-12 * scale.max(1.0);
    if svd.rank(eps) < p {
        return Ok(f64::INFINITY);
    }
    let beta = svd
        .solve(&y, eps)
        .map_err(|e| Error::InvalidParameter(e.to_string()))?;
    let resid = &y - x * beta;
    Ok(resid.norm_squared())
}

/// F(ω) = n·ln(max(RSS, floor)/n) + γ(|ω|+1); lower is better. A
/// rank-deficient masked design yields +∞.
pub fn criterion(ds: &Dataset, mask: &SubsetMask, spec: &CriterionSpec) -> Result<f64> {
    if mask.d() != ds.d() {
        return Err(Error::DimensionMismatch {
            expected: ds.d(),
            got: mask.d(),
        });
    }
    let rss = masked_rss(ds, mask)?;
    if rss.is_infinite() {
        return Ok(f64::INFINITY);
    }
    let n = ds.n() as f64;
    let floor = RSS_FLOOR_REL * total_ss(ds.reals()?);
    let penalty = spec.gamma * (mask.len() as f64 + 1.0);
    Ok(n * (rss.max(floor) / n).ln() + penalty)
}

/// All 2^d masks with their F values, in mask-integer order, plus the
/// argmin (ties to the lowest mask integer).
pub fn exhaustive_search(
    ds: &Dataset,
    spec: &CriterionSpec,
) -> Result<(SubsetMask, Vec<(SubsetMask, f64)>)> {
    let d = ds.d();
    if d > EXHAUSTIVE_CAP {
        return Err(Error::SubsetTooLarge {
            d,
            cap: EXHAUSTIVE_CAP,
        });
    }
    let table: Vec<(SubsetMask, f64)> = (0..1u64 << d)
        .into_par_iter()
        .map(|v| {
            let mask = SubsetMask::from_integer(v, d);
            let f = criterion(ds, &mask, spec)?;
            Ok((mask, f))
        })
        .collect::<Result<_>>()?;
    let mut best = 0usize;
    for i in 1..table.len() {
        if table[i].1 < table[best].1 {
            best = i;
        }
    }
    Ok((table[best].0.clone(), table))
}

#[derive(Debug, Clone)]
pub struct GaParams {
    pub population: usize,
    /// Per-bit probability of taking the gene from the second parent.
    pub crossover_rate: f64,
    /// Per-bit mutation probability; `None` means 1/d.
    pub mutation_rate: Option<f64>,
    pub elitism: usize,
}

impl Default for GaParams {
    fn default() -> Self {
        GaParams {
            population: 50,
            crossover_rate: 0.5,
            mutation_rate: None,
            elitism: 1,
        }
    }
}

#[derive(Debug, Clone)]
pub struct UniverseResult {
    pub best_mask: SubsetMask,
    pub best_score: f64,
    pub generations_run: usize,
    pub universe_seed: u64,
}

/// Default: stop evolution after six generations. Short runs keep the
/// universes diverse, which is what makes the majority vote work.
pub const DEFAULT_GENERATIONS: usize = 6;

fn tournament<'a>(
    pop: &'a [(SubsetMask, f64)],
    rng: &mut impl Rng,
) -> &'a SubsetMask {
    let a = rng.random_range(0..pop.len());
    let b = rng.random_range(0..pop.len());
    if pop[a].1 <= pop[b].1 {
        &pop[a].0
    } else {
        &pop[b].0
    }
}

/// One short evolutionary run. Generation 1 is the evaluated initial
/// Bernoulli(0.5) population; each later generation keeps the best
/// individual (elitism) and fills the rest by binary-tournament
/// selection, uniform crossover, and per-bit mutation. Returns the
/// best-ever mask, which is nonincreasing in score across generations.
pub fn evolve(
    ds: &Dataset,
    spec: &CriterionSpec,
    ga: &GaParams,
    generations: usize,
    seed: u64,
) -> Result<UniverseResult> {
    evolve_seeded(ds, spec, ga, generations, seed, &[])
}

/// [`evolve`] with chosen masks injected at the front of the initial
/// population (the rest stays random). Elitism guarantees the result is
/// never worse than the best injected mask.
pub fn evolve_seeded(
    ds: &Dataset,
    spec: &CriterionSpec,
    ga: &GaParams,
    generations: usize,
    seed: u64,
    initial: &[SubsetMask],
) -> Result<UniverseResult> {
    let d = ds.d();
    if generations == 0 {
        return Err(Error::InvalidParameter("generations must be at least 1".into()));
    }
    if ga.population < 2 || ga.population % 2 != 0 {
        return Err(Error::InvalidParameter(
            "population must be even and at least 2".into(),
        ));
    }
    let mutation = ga.mutation_rate.unwrap_or(1.0 / d as f64);
    if initial.len() > ga.population {
        return Err(Error::InvalidParameter(
            "injected masks exceed the population size".into(),
        ));
    }
    let mut rng = SeedTree::new(seed).rng();
    let mut pop: Vec<(SubsetMask, f64)> = Vec::with_capacity(ga.population);
    for mask in initial {
        if mask.d() != d {
            return Err(Error::DimensionMismatch {
                expected: d,
                got: mask.d(),
            });
        }
        let f = criterion(ds, mask, spec)?;
        pop.push((mask.clone(), f));
    }
    while pop.len() < ga.population {
        let mask = SubsetMask::from_bits((0..d).map(|_| rng.random::<bool>()).collect());
        let f = criterion(ds, &mask, spec)?;
        pop.push((mask, f));
    }
    let best_of = |pop: &[(SubsetMask, f64)]| {
        let mut b = 0usize;
        for i in 1..pop.len() {
            if pop[i].1 < pop[b].1 {
                b = i;
            }
        }
        pop[b].clone()
    };
    let mut best = best_of(&pop);
    for _ in 1..generations {
        let mut next: Vec<(SubsetMask, f64)> = Vec::with_capacity(ga.population);
        let mut by_score: Vec<usize> = (0..pop.len()).collect();
        by_score.sort_by(|&a, &b| pop[a].1.partial_cmp(&pop[b].1).unwrap().then(a.cmp(&b)));
        for &i in by_score.iter().take(ga.elitism) {
            next.push(pop[i].clone());
        }
        while next.len() < ga.population {
            let p1 = tournament(&pop, &mut rng).clone();
            let p2 = tournament(&pop, &mut rng).clone();
            let mut child: Vec<bool> = (0..d)
                .map(|j| {
                    if rng.random::<f64>() < ga.crossover_rate {
                        p2.contains(j)
                    } else {
                        p1.contains(j)
                    }
                })
                .collect();
            for bit in child.iter_mut() {
                if rng.random::<f64>() < mutation {
                    *bit = !*bit;
                }
            }
            let mask = SubsetMask::from_bits(child);
            let f = criterion(ds, &mask, spec)?;
            next.push((mask, f));
        }
        pop = next;
        let gen_best = best_of(&pop);
        if gen_best.1 < best.1 {
            best = gen_best;
        }
    }
    Ok(UniverseResult {
        best_mask: best.0,
        best_score: best.1,
        generations_run: generations,
        universe_seed: seed,
    })
}

#[derive(Debug, Clone)]
pub struct VoteTally {
    /// Per-variable membership counts among the B best masks.
    pub frequencies: Vec<usize>,
    pub b: usize,
    pub selected: SubsetMask,
}

fn tally(masks: &[&SubsetMask], d: usize, tau: f64) -> VoteTally {
    let b = masks.len();
    let mut frequencies = vec![0usize; d];
    for mask in masks {
        for j in 0..d {
            if mask.contains(j) {
                frequencies[j] += 1;
            }
        }
    }
    let threshold = (tau * b as f64).ceil() as usize;
    let selected = SubsetMask::from_bits(
        frequencies.iter().map(|&f| f >= threshold.max(1)).collect(),
    );
    VoteTally {
        frequencies,
        b,
        selected,
    }
}

/// B independent short evolutionary runs on derived seeds, combined by
/// per-variable majority vote: variable j is selected when it appears in
/// at least ceil(τ·B) universe winners. The full frequency table is
/// returned so the vote gap can be inspected.
pub fn parallel_universes(
    ds: &Dataset,
    spec: &CriterionSpec,
    ga: &GaParams,
    b: usize,
    generations: usize,
    tau: f64,
    master_seed: u64,
) -> Result<(VoteTally, Vec<UniverseResult>)> {
    if b == 0 {
        return Err(Error::InvalidParameter("B must be at least 1".into()));
    }
    if !(tau > 0.0 && tau <= 1.0) {
        return Err(Error::InvalidParameter("tau must be in (0, 1]".into()));
    }
    let tree = SeedTree::new(master_seed);
    let results: Vec<UniverseResult> = (0..b)
        .into_par_iter()
        .map(|u| evolve(ds, spec, ga, generations, tree.child(u as u32).seed()))
        .collect::<Result<_>>()?;
    let masks: Vec<&SubsetMask> = results.iter().map(|r| &r.best_mask).collect();
    Ok((tally(&masks, ds.d(), tau), results))
}

/// Forward-backward stepwise from the empty mask with first-improvement
/// sweeps: repeatedly scan variables in index order, keeping any toggle
/// that lowers F, until a full sweep changes nothing.
pub fn stepwise(ds: &Dataset, spec: &CriterionSpec) -> Result<(SubsetMask, f64)> {
    let d = ds.d();
    let mut mask = SubsetMask::empty(d);
    let mut score = criterion(ds, &mask, spec)?;
    loop {
        let mut improved = false;
        for j in 0..d {
            mask.toggle(j);
            // toggling on may exceed the fittable size; treat as no-improvement
            match criterion(ds, &mask, spec) {
                Ok(f) if f < score - 1e-12 => {
                    score = f;
                    improved = true;
                }
                _ => mask.toggle(j),
            }
        }
        if !improved {
            return Ok((mask, score));
        }
    }
}

/// Bagged stepwise baseline: per replicate, a bootstrap resample and a
/// stepwise run; winners vote exactly as in [`parallel_universes`]
/// (τ = 0.5).
pub fn bagged_stepwise(
    ds: &Dataset,
    spec: &CriterionSpec,
    b: usize,
    seed: u64,
) -> Result<VoteTally> {
    if b == 0 {
        return Err(Error::InvalidParameter("B must be at least 1".into()));
    }
    let tree = SeedTree::new(seed);
    let masks: Vec<SubsetMask> = (0..b)
        .into_par_iter()
        .map(|r| {
            let mut rng = tree.child(r as u32).rng();
            let sample: Vec<usize> = (0..ds.n()).map(|_| rng.random_range(0..ds.n())).collect();
            let boot = ds.subset(&sample)?;
            Ok(stepwise(&boot, spec)?.0)
        })
        .collect::<Result<_>>()?;
    let refs: Vec<&SubsetMask> = masks.iter().collect();
    Ok(tally(&refs, ds.d(), 0.5))
}
