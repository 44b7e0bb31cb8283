//! Repeated double cross validation and the model selection protocol.
//!
//! Each simulation holds out a random test set, tunes the tree models by a
//! randomized search with an inner 5-fold cross validation on the training
//! rows, refits on all training rows and records test and train MAPE plus
//! the coefficient or importance vector. Three outcomes are read off the
//! simulations: accuracy (test MAPE), stability (spread of the fitted
//! vectors) and over-fitting (test minus train MAPE).

use crate::error::{Error, Result};
use crate::indicators::FeatureMatrix;
use crate::models::{HyperparameterSpace, Hyperparameters, Matrix, ModelKind, SignBound, TrainedModel};
use crate::rng::{derive_path, derive_seed, Stream};
use crate::stats::{self, BoxWhisker, Describe};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use std::collections::BTreeMap;

pub const DEFAULT_SIMULATIONS: usize = 30;
pub const DEFAULT_TEST_SIZE: usize = 6;
pub const DEFAULT_CANDIDATES: usize = 20;
pub const DEFAULT_FOLDS: usize = 5;
pub const DEFAULT_OVERFIT_THRESHOLD: f64 = 4.2;

/// Mean absolute percentage error, in percent.
pub fn mape(actual: &[f64], predicted: &[f64]) -> Result<f64> {
    if actual.len() != predicted.len() {
        return Err(Error::DimensionMismatch {
            what: "predictions",
            expected: actual.len(),
            found: predicted.len(),
        });
    }
    if actual.is_empty() {
        return Err(Error::EmptyInput);
    }
    let mut total = 0.0;
    for (index, (a, p)) in actual.iter().zip(predicted).enumerate() {
        if *a == 0.0 {
            return Err(Error::UndefinedRelativeError { index });
        }
        total += (a - p).abs() / a.abs();
    }
    Ok(100.0 * total / actual.len() as f64)
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SplitPlan {
    pub simulation: usize,
    pub seed: u64,
    pub train: Vec<usize>,
    pub test: Vec<usize>,
}

pub fn make_splits(n_rows: usize, n_simulations: usize, test_size: usize, master_seed: u64) -> Result<Vec<SplitPlan>> {
    if test_size == 0 || n_rows < test_size + 1 || n_rows < 7 {
        return Err(Error::InsufficientHistory {
            needed: (test_size + 1).max(7),
            available: n_rows,
        });
    }
    Ok((0..n_simulations)
        .map(|simulation| {
            let seed = derive_seed(master_seed, simulation as u64);
            let mut rows: Vec<usize> = (0..n_rows).collect();
            Stream::new(derive_seed(seed, 0)).shuffle(&mut rows);
            let mut test = rows[..test_size].to_vec();
            let mut train = rows[test_size..].to_vec();
            test.sort_unstable();
            train.sort_unstable();
            SplitPlan {
                simulation,
                seed,
                train,
                test,
            }
        })
        .collect())
}

/// Contiguous folds over a seeded shuffle of `0..n`; earlier folds take the remainder.
fn folds(n: usize, k: usize, rng: &mut Stream) -> Vec<Vec<usize>> {
    let mut order: Vec<usize> = (0..n).collect();
    rng.shuffle(&mut order);
    let (base, extra) = (n / k, n % k);
    let mut out = Vec::with_capacity(k);
    let mut start = 0;
    for f in 0..k {
        let len = base + usize::from(f < extra);
        out.push(order[start..start + len].to_vec());
        start += len;
    }
    out
}

#[derive(Debug, Clone, PartialEq)]
pub struct SearchOutcome {
    pub best: Hyperparameters,
    /// Mean validation MAPE of every candidate, in draw order.
    pub scores: Vec<(Hyperparameters, f64)>,
}

/// Randomized search scored by mean validation MAPE over `n_folds` folds.
/// Every candidate sees the same folds and the same per-fold fit seeds.
pub fn randomized_search(
    x: &Matrix,
    y: &[f64],
    kind: ModelKind,
    space: &HyperparameterSpace,
    n_candidates: usize,
    n_folds: usize,
    seed: u64,
) -> Result<SearchOutcome> {
    if !kind.is_ensemble() {
        return Err(Error::InvalidArgument(format!("{kind} has no hyperparameters")));
    }
    if n_candidates == 0 {
        return Err(Error::InvalidArgument("randomized search needs at least one candidate".into()));
    }
    if x.nrows() < 10 || n_folds < 2 {
        return Err(Error::InsufficientHistory {
            needed: 10,
            available: x.nrows(),
        });
    }
    let mut draw = Stream::new(derive_seed(seed, 0));
    let candidates: Vec<Hyperparameters> = (0..n_candidates).map(|_| space.sample(&mut draw)).collect();
    let fold_sets = folds(x.nrows(), n_folds, &mut Stream::new(derive_seed(seed, 1)));
    let split: Vec<(Vec<usize>, Vec<usize>)> = fold_sets
        .iter()
        .enumerate()
        .map(|(f, val)| {
            let train: Vec<usize> = fold_sets
                .iter()
                .enumerate()
                .filter(|(g, _)| *g != f)
                .flat_map(|(_, v)| v.iter().copied())
                .collect();
            (train, val.clone())
        })
        .collect();

    let mut scores = Vec::with_capacity(n_candidates);
    for hp in &candidates {
        let mut total = 0.0;
        for (f, (tr, va)) in split.iter().enumerate() {
            let y_tr: Vec<f64> = tr.iter().map(|&i| y[i]).collect();
            let y_va: Vec<f64> = va.iter().map(|&i| y[i]).collect();
            let model = TrainedModel::fit(kind, &x.select_rows(tr), &y_tr, &[], Some(hp), derive_path(seed, &[2, f as u64]))?;
            total += mape(&y_va, &model.predict(&x.select_rows(va))?)?;
        }
        scores.push((*hp, total / split.len() as f64));
    }
    let mut best = 0;
    for (i, s) in scores.iter().enumerate() {
        if s.1 < scores[best].1 {
            best = i;
        }
    }
    Ok(SearchOutcome {
        best: scores[best].0,
        scores,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SimulationResult {
    pub simulation: usize,
    pub kind: ModelKind,
    pub hyperparameters: Option<Hyperparameters>,
    pub test_mape: f64,
    pub train_mape: f64,
    pub overfit: f64,
    pub weights: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StudyConfig {
    pub simulations: usize,
    pub test_size: usize,
    pub candidates: usize,
    pub folds: usize,
    pub space: HyperparameterSpace,
    pub seed: u64,
}

impl Default for StudyConfig {
    fn default() -> Self {
        Self {
            simulations: DEFAULT_SIMULATIONS,
            test_size: DEFAULT_TEST_SIZE,
            candidates: DEFAULT_CANDIDATES,
            folds: DEFAULT_FOLDS,
            space: HyperparameterSpace::default(),
            seed: 42,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct KindSummary {
    pub kind: ModelKind,
    pub test_mape: Describe,
    pub train_mape: Describe,
    pub overfit: Describe,
    /// Distribution of each coefficient or importance across simulations.
    pub weights: Vec<Describe>,
    pub stability: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StudySummary {
    pub features: Vec<String>,
    pub results: Vec<SimulationResult>,
    pub kinds: Vec<KindSummary>,
    /// Number of randomized searches performed.
    pub searches: usize,
}

impl StudySummary {
    /// Aggregate simulation results; kinds appear in LS, RF, ET order.
    pub fn from_results(features: Vec<String>, results: Vec<SimulationResult>, searches: usize) -> Result<Self> {
        let mut kinds = Vec::new();
        for kind in ModelKind::ALL {
            let rs: Vec<&SimulationResult> = results.iter().filter(|r| r.kind == kind).collect();
            if rs.is_empty() {
                continue;
            }
            let vectors: Vec<Vec<f64>> = rs.iter().map(|r| r.weights.clone()).collect();
            if let Some(bad) = vectors.iter().find(|v| v.len() != features.len()) {
                return Err(Error::DimensionMismatch {
                    what: "weight vector",
                    expected: features.len(),
                    found: bad.len(),
                });
            }
            let column = |j: usize| vectors.iter().map(|v| v[j]).collect::<Vec<f64>>();
            kinds.push(KindSummary {
                kind,
                test_mape: Describe::of(&rs.iter().map(|r| r.test_mape).collect::<Vec<_>>()),
                train_mape: Describe::of(&rs.iter().map(|r| r.train_mape).collect::<Vec<_>>()),
                overfit: Describe::of(&rs.iter().map(|r| r.overfit).collect::<Vec<_>>()),
                weights: (0..features.len()).map(|j| Describe::of(&column(j))).collect(),
                stability: stability_score(&vectors)?,
            });
        }
        Ok(Self {
            features,
            results,
            kinds,
            searches,
        })
    }

    pub fn kind(&self, kind: ModelKind) -> Option<&KindSummary> {
        self.kinds.iter().find(|k| k.kind == kind)
    }

    pub fn results_for(&self, kind: ModelKind) -> impl Iterator<Item = &SimulationResult> {
        self.results.iter().filter(move |r| r.kind == kind)
    }
}

fn kind_index(kind: ModelKind) -> u64 {
    ModelKind::ALL.iter().position(|&k| k == kind).expect("known kind") as u64
}

fn evaluate(
    plan: &SplitPlan,
    x: &Matrix,
    y: &[f64],
    signs: &[SignBound],
    kind: ModelKind,
    config: &StudyConfig,
) -> Result<SimulationResult> {
    let x_tr = x.select_rows(&plan.train);
    let y_tr: Vec<f64> = plan.train.iter().map(|&i| y[i]).collect();
    let x_te = x.select_rows(&plan.test);
    let y_te: Vec<f64> = plan.test.iter().map(|&i| y[i]).collect();
    let k = kind_index(kind);
    let hyperparameters = if kind.is_ensemble() {
        let search_seed = derive_path(plan.seed, &[1, k]);
        Some(randomized_search(&x_tr, &y_tr, kind, &config.space, config.candidates, config.folds, search_seed)?.best)
    } else {
        None
    };
    let model = TrainedModel::fit(kind, &x_tr, &y_tr, signs, hyperparameters.as_ref(), derive_path(plan.seed, &[2, k]))?;
    let test_mape = mape(&y_te, &model.predict(&x_te)?)?;
    let train_mape = mape(&y_tr, &model.predict(&x_tr)?)?;
    Ok(SimulationResult {
        simulation: plan.simulation,
        kind,
        hyperparameters,
        test_mape,
        train_mape,
        overfit: test_mape - train_mape,
        weights: model.feature_weights().to_vec(),
    })
}

/// Run every simulation for every requested kind. Simulations run in
/// parallel; results are collected in simulation order.
pub fn run_study(features: &FeatureMatrix, kinds: &[ModelKind], config: &StudyConfig) -> Result<StudySummary> {
    let x = features.annual_matrix();
    let y = &features.target;
    let signs = features.signs();
    let plans = make_splits(x.nrows(), config.simulations, config.test_size, config.seed)?;
    let mut kinds: Vec<ModelKind> = kinds.to_vec();
    kinds.sort();
    kinds.dedup();
    let per_sim: Vec<Vec<SimulationResult>> = plans
        .par_iter()
        .map(|plan| {
            kinds
                .iter()
                .map(|&kind| {
                    evaluate(plan, &x, y, &signs, kind, config).map_err(|e| Error::Simulation {
                        index: plan.simulation,
                        source: Box::new(e),
                    })
                })
                .collect::<Result<Vec<_>>>()
        })
        .collect::<Result<_>>()?;
    let searches = plans.len() * kinds.iter().filter(|k| k.is_ensemble()).count();
    let names = features.codes.iter().map(|c| c.to_string()).collect();
    StudySummary::from_results(names, per_sim.into_iter().flatten().collect(), searches)
}

/// Sum over features of the box-plot whisker span; lower is more stable.
pub fn stability_score(vectors: &[Vec<f64>]) -> Result<f64> {
    let first = vectors.first().ok_or(Error::EmptyInput)?;
    let p = first.len();
    if let Some(bad) = vectors.iter().find(|v| v.len() != p) {
        return Err(Error::DimensionMismatch {
            what: "weight vector",
            expected: p,
            found: bad.len(),
        });
    }
    Ok((0..p)
        .map(|j| BoxWhisker::of(&vectors.iter().map(|v| v[j]).collect::<Vec<_>>()).span())
        .sum())
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SelectionOutcome {
    pub eliminated_for_accuracy: ModelKind,
    pub eliminated_for_stability: ModelKind,
    /// Kind left after both eliminations.
    pub survivor: ModelKind,
    /// The survivor, if it passes the over-fitting check.
    pub selected: Option<ModelKind>,
    pub overfit_acceptable: bool,
    pub overfit_threshold: f64,
    pub survivor_mean_overfit: f64,
}

/// Drop the least accurate kind, then the less stable of the rest, then
/// check the survivor for over-fitting. Ties eliminate the later kind in
/// LS, RF, ET order.
pub fn select_model(summary: &StudySummary, overfit_threshold: f64) -> Result<SelectionOutcome> {
    let get = |k: ModelKind| {
        summary
            .kind(k)
            .ok_or_else(|| Error::InvalidArgument(format!("study has no results for {k}")))
    };
    let all: Vec<&KindSummary> = ModelKind::ALL.iter().map(|&k| get(k)).collect::<Result<_>>()?;

    let worst = all
        .iter()
        .max_by(|a, b| {
            a.test_mape
                .median
                .total_cmp(&b.test_mape.median)
                .then(a.test_mape.mean.total_cmp(&b.test_mape.mean))
                .then(a.kind.cmp(&b.kind))
        })
        .expect("three kinds")
        .kind;
    let rest: Vec<&&KindSummary> = all.iter().filter(|k| k.kind != worst).collect();
    let unstable = rest
        .iter()
        .max_by(|a, b| a.stability.total_cmp(&b.stability).then(a.kind.cmp(&b.kind)))
        .expect("two kinds")
        .kind;
    let survivor = rest.iter().find(|k| k.kind != unstable).expect("one kind");
    let mean_overfit = survivor.overfit.mean;
    let ok = mean_overfit <= overfit_threshold;
    Ok(SelectionOutcome {
        eliminated_for_accuracy: worst,
        eliminated_for_stability: unstable,
        survivor: survivor.kind,
        selected: ok.then_some(survivor.kind),
        overfit_acceptable: ok,
        overfit_threshold,
        survivor_mean_overfit: mean_overfit,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CompositeWeights {
    pub accuracy: f64,
    pub stability: f64,
    pub overfit: f64,
}

impl Default for CompositeWeights {
    fn default() -> Self {
        Self {
            accuracy: 1.0,
            stability: 1.0,
            overfit: 1.0,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CompositeScore {
    pub accuracy: f64,
    pub stability: f64,
    pub overfit: f64,
    pub total: f64,
}

/// Per-simulation L1 distance of the fitted vector from the per-feature median vector.
pub fn stability_distribution(vectors: &[Vec<f64>]) -> Vec<f64> {
    let p = vectors.first().map_or(0, Vec::len);
    let centre: Vec<f64> = (0..p)
        .map(|j| stats::median(&vectors.iter().map(|v| v[j]).collect::<Vec<_>>()))
        .collect();
    vectors
        .iter()
        .map(|v| v.iter().zip(&centre).map(|(a, c)| (a - c).abs()).sum())
        .collect()
}

/// Interquartile-range based score per kind; lower is better.
pub fn composite_score(summary: &StudySummary, weights: &CompositeWeights) -> Result<BTreeMap<ModelKind, CompositeScore>> {
    for (name, w) in [("accuracy", weights.accuracy), ("stability", weights.stability), ("overfit", weights.overfit)] {
        if !(w >= 0.0) {
            return Err(Error::InvalidArgument(format!("{name} weight must be nonnegative, got {w}")));
        }
    }
    let mut out = BTreeMap::new();
    for ks in &summary.kinds {
        let vectors: Vec<Vec<f64>> = summary.results_for(ks.kind).map(|r| r.weights.clone()).collect();
        let spread = Describe::of(&stability_distribution(&vectors));
        let accuracy = ks.test_mape.iqr() * ks.test_mape.mean;
        let stability = spread.iqr() * spread.mean;
        let overfit = ks.overfit.iqr();
        out.insert(
            ks.kind,
            CompositeScore {
                accuracy,
                stability,
                overfit,
                total: weights.accuracy * accuracy + weights.stability * stability + weights.overfit * overfit,
            },
        );
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn mape_examples() {
        assert_eq!(mape(&[3.0, 4.0], &[3.0, 4.0]).unwrap(), 0.0);
        assert!((mape(&[100.0, 200.0], &[110.0, 180.0]).unwrap() - 10.0).abs() < 1e-12);
        assert_eq!(mape(&[100.0], &[0.0]).unwrap(), 100.0);
        let err = mape(&[1.0, 0.0], &[1.0, 1.0]).unwrap_err();
        assert!(err.to_string().contains("undefined relative error"));
    }

    #[test]
    fn splits_partition_rows() {
        let plans = make_splits(31, 30, 6, 42).unwrap();
        assert_eq!(plans.len(), 30);
        for p in &plans {
            assert_eq!(p.test.len(), 6);
            assert_eq!(p.train.len(), 25);
            let mut all: Vec<usize> = p.test.iter().chain(&p.train).copied().collect();
            all.sort_unstable();
            assert_eq!(all, (0..31).collect::<Vec<_>>());
        }
        assert_eq!(plans, make_splits(31, 30, 6, 42).unwrap());
        assert_ne!(plans, make_splits(31, 30, 6, 43).unwrap());
        assert!(make_splits(6, 30, 6, 1).is_err());
    }

    #[test]
    fn folds_are_contiguous_blocks_of_a_shuffle() {
        let f = folds(25, 5, &mut Stream::new(3));
        assert!(f.iter().all(|b| b.len() == 5));
        let mut all: Vec<usize> = f.concat();
        all.sort_unstable();
        assert_eq!(all, (0..25).collect::<Vec<_>>());
        let g = folds(12, 5, &mut Stream::new(3));
        assert_eq!(g.iter().map(Vec::len).collect::<Vec<_>>(), vec![3, 3, 2, 2, 2]);
    }

    fn fixture() -> (Matrix, Vec<f64>) {
        let mut rng = Stream::new(99);
        let cols: Vec<Vec<f64>> = (0..3).map(|_| (0..25).map(|_| rng.next_f64()).collect()).collect();
        let y = cols[0].iter().map(|v| if *v > 0.5 { 20.0 } else { 10.0 }).collect();
        (Matrix::from_columns(&cols).unwrap(), y)
    }

    fn point(hp: Hyperparameters) -> HyperparameterSpace {
        HyperparameterSpace {
            n_trees: (hp.n_trees, hp.n_trees),
            max_depth: (hp.max_depth, hp.max_depth),
            min_samples_split: (hp.min_samples_split, hp.min_samples_split),
            min_samples_leaf: (hp.min_samples_leaf, hp.min_samples_leaf),
        }
    }

    #[test]
    fn collapsed_space_returns_its_point() {
        let (x, y) = fixture();
        let hp = Hyperparameters {
            n_trees: 205,
            max_depth: 2,
            min_samples_split: 3,
            min_samples_leaf: 4,
        };
        let out = randomized_search(&x, &y, ModelKind::ET, &point(hp), 3, 5, 1).unwrap();
        assert_eq!(out.best, hp);
    }

    #[test]
    fn single_candidate_is_returned() {
        let (x, y) = fixture();
        let space = HyperparameterSpace::default();
        let out = randomized_search(&x, &y, ModelKind::RF, &space, 1, 5, 17).unwrap();
        let expected = space.sample(&mut Stream::new(derive_seed(17, 0)));
        assert_eq!(out.best, expected);
    }

    #[test]
    fn search_picks_the_lowest_validation_mape() {
        let (x, y) = fixture();
        let out = randomized_search(&x, &y, ModelKind::RF, &HyperparameterSpace::default(), 6, 5, 5).unwrap();
        let best = out
            .scores
            .iter()
            .fold(f64::INFINITY, |m, s| m.min(s.1));
        let first = out.scores.iter().find(|s| s.1 == best).unwrap();
        assert_eq!(out.best, first.0);
    }

    #[test]
    fn stability_examples() {
        let same = vec![vec![0.3, 2.0]; 30];
        assert_eq!(stability_score(&same).unwrap(), 0.0);
        let mut rng = Stream::new(4);
        let vs: Vec<Vec<f64>> = (0..30).map(|_| vec![rng.next_f64(), 1.0]).collect();
        let col: Vec<f64> = vs.iter().map(|v| v[0]).collect();
        let span = BoxWhisker::of(&col).span();
        assert_eq!(stability_score(&vs).unwrap(), span);
        let doubled: Vec<Vec<f64>> = vs.iter().map(|v| v.iter().map(|x| 2.0 * x).collect()).collect();
        assert_eq!(stability_score(&doubled).unwrap(), 2.0 * span);
    }

    fn result(kind: ModelKind, sim: usize, test: f64, train: f64, w: Vec<f64>) -> SimulationResult {
        SimulationResult {
            simulation: sim,
            kind,
            hyperparameters: None,
            test_mape: test,
            train_mape: train,
            overfit: test - train,
            weights: w,
        }
    }

    fn summary(medians: [f64; 3], spreads: [f64; 3], overfit: f64) -> StudySummary {
        let mut rs = Vec::new();
        for (k, kind) in ModelKind::ALL.into_iter().enumerate() {
            for s in 0..30 {
                let t = medians[k] + if s % 2 == 0 { 0.1 } else { -0.1 };
                let w = vec![spreads[k] * (s % 3) as f64];
                rs.push(result(kind, s, t, t - overfit, w));
            }
        }
        StudySummary::from_results(vec!["A".into()], rs, 0).unwrap()
    }

    #[test]
    fn selection_follows_the_protocol() {
        let s = summary([2.0, 1.4, 1.3], [1.0, 0.5, 0.2], 1.0);
        let out = select_model(&s, DEFAULT_OVERFIT_THRESHOLD).unwrap();
        assert_eq!(out.eliminated_for_accuracy, ModelKind::LS);
        assert_eq!(out.eliminated_for_stability, ModelKind::RF);
        assert_eq!(out.selected, Some(ModelKind::ET));
        let strict = select_model(&s, 0.5).unwrap();
        assert_eq!(strict.selected, None);
        assert_eq!(strict.survivor, ModelKind::ET);
        assert!(!strict.overfit_acceptable);
    }

    #[test]
    fn selection_ties_eliminate_later_kinds() {
        let s = summary([1.0; 3], [1.0; 3], 0.0);
        let out = select_model(&s, 4.2).unwrap();
        assert_eq!(out.eliminated_for_accuracy, ModelKind::ET);
        assert_eq!(out.eliminated_for_stability, ModelKind::RF);
        assert_eq!(out.selected, Some(ModelKind::LS));
    }

    #[test]
    fn composite_examples() {
        let s = summary([2.0, 1.4, 1.3], [1.0, 0.5, 0.2], 1.0);
        let zero = CompositeWeights {
            accuracy: 0.0,
            stability: 0.0,
            overfit: 0.0,
        };
        assert!(composite_score(&s, &zero).unwrap().values().all(|c| c.total == 0.0));
        let neg = CompositeWeights { accuracy: -1.0, ..zero };
        assert!(composite_score(&s, &neg).is_err());

        let scores = composite_score(&s, &CompositeWeights::default()).unwrap();
        let ls = scores[&ModelKind::LS];
        // Test MAPE alternates 2.1/1.9: Q1 = 1.9, Q3 = 2.1, mean 2.0.
        assert!((ls.accuracy - (2.1 - 1.9) * 2.0).abs() < 1e-12);
        // Overfit is constant.
        assert!(ls.overfit.abs() < 1e-12);
        // Weights cycle 0, 1, 2 with median 1: deviations 1, 0, 1, Q1 = 0, Q3 = 1, mean 2/3.
        assert!((ls.stability - 1.0 * (2.0 / 3.0)).abs() < 1e-12);
    }

    #[test]
    fn degenerate_distributions_score_zero() {
        let mut rs = Vec::new();
        for kind in ModelKind::ALL {
            for s in 0..30 {
                rs.push(result(kind, s, 3.0, 1.0, vec![0.5, 0.5]));
            }
        }
        let s = StudySummary::from_results(vec!["A".into(), "B".into()], rs, 0).unwrap();
        assert!(composite_score(&s, &CompositeWeights::default()).unwrap().values().all(|c| c.total == 0.0));
    }
}
