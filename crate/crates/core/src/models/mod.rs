//! Regressors: bounded-variable least squares (LS), random forest (RF) and
//! extra trees (ET).

mod bvls;
mod ensemble;
mod matrix;
pub mod tree;

pub use bvls::{fit_bvls, fit_unbounded};
pub use ensemble::{fit_ensemble, Ensemble};
pub use matrix::Matrix;
pub use tree::{fit_tree, Tree, TreeNode};

use crate::error::{Error, Result};
use crate::rng::Stream;
use serde::{Deserialize, Serialize};
use std::fmt;
use std::str::FromStr;

/// Version written into serialized models.
pub const MODEL_FORMAT_VERSION: u32 = 1;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SignBound {
    NonNegative,
    NonPositive,
}

impl SignBound {
    pub fn admits(self, v: f64) -> bool {
        match self {
            SignBound::NonNegative => v >= 0.0,
            SignBound::NonPositive => v <= 0.0,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum ModelKind {
    LS,
    RF,
    ET,
}

impl ModelKind {
    pub const ALL: [ModelKind; 3] = [ModelKind::LS, ModelKind::RF, ModelKind::ET];

    pub fn as_str(self) -> &'static str {
        match self {
            ModelKind::LS => "LS",
            ModelKind::RF => "RF",
            ModelKind::ET => "ET",
        }
    }

    pub fn is_ensemble(self) -> bool {
        self != ModelKind::LS
    }
}

impl fmt::Display for ModelKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for ModelKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        ModelKind::ALL
            .into_iter()
            .find(|k| k.as_str().eq_ignore_ascii_case(s.trim()))
            .ok_or_else(|| Error::InvalidArgument(format!("unknown model kind '{s}'")))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LinearFit {
    pub coefficients: Vec<f64>,
    pub intercept: f64,
    /// Set when the centered design is rank deficient and the optimum is not unique.
    pub degenerate: bool,
}

impl LinearFit {
    pub fn predict(&self, x: &Matrix) -> Result<Vec<f64>> {
        if x.ncols() != self.coefficients.len() {
            return Err(Error::DimensionMismatch {
                what: "feature columns",
                expected: self.coefficients.len(),
                found: x.ncols(),
            });
        }
        Ok(x.rows()
            .map(|r| r.iter().zip(&self.coefficients).fold(self.intercept, |acc, (v, c)| acc + v * c))
            .collect())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Hyperparameters {
    pub n_trees: usize,
    pub max_depth: usize,
    pub min_samples_split: usize,
    pub min_samples_leaf: usize,
}

impl Hyperparameters {
    /// Structural sanity; the search space is checked separately.
    pub fn validate(&self) -> Result<()> {
        if self.n_trees == 0 || self.max_depth == 0 || self.min_samples_split < 2 || self.min_samples_leaf == 0 {
            return Err(Error::InvalidArgument(format!("invalid hyperparameters {self:?}")));
        }
        Ok(())
    }
}

/// Closed ranges the randomized search draws from.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct HyperparameterSpace {
    pub n_trees: (usize, usize),
    pub max_depth: (usize, usize),
    pub min_samples_split: (usize, usize),
    pub min_samples_leaf: (usize, usize),
}

impl Default for HyperparameterSpace {
    fn default() -> Self {
        Self {
            n_trees: (200, 219),
            max_depth: (1, 3),
            min_samples_split: (2, 4),
            min_samples_leaf: (2, 4),
        }
    }
}

impl HyperparameterSpace {
    pub fn sample(&self, rng: &mut Stream) -> Hyperparameters {
        let mut draw = |(lo, hi): (usize, usize)| rng.between(lo, hi);
        Hyperparameters {
            n_trees: draw(self.n_trees),
            max_depth: draw(self.max_depth),
            min_samples_split: draw(self.min_samples_split),
            min_samples_leaf: draw(self.min_samples_leaf),
        }
    }

    pub fn check(&self, hp: &Hyperparameters) -> Result<()> {
        let fields = [
            ("n_trees", hp.n_trees, self.n_trees),
            ("max_depth", hp.max_depth, self.max_depth),
            ("min_samples_split", hp.min_samples_split, self.min_samples_split),
            ("min_samples_leaf", hp.min_samples_leaf, self.min_samples_leaf),
        ];
        for (name, v, (lo, hi)) in fields {
            if v < lo || v > hi {
                return Err(Error::InvalidArgument(format!("{name} = {v} outside {lo}..={hi}")));
            }
        }
        Ok(())
    }
}

/// A fitted regressor of any family.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "family", rename_all = "lowercase")]
pub enum TrainedModel {
    Linear(LinearFit),
    Ensemble(Ensemble),
}

#[derive(Serialize, Deserialize)]
struct Envelope {
    format_version: u32,
    kind: ModelKind,
    model: TrainedModel,
}

impl TrainedModel {
    /// Fit a model of `kind`; ensembles need hyperparameters.
    pub fn fit(
        kind: ModelKind,
        x: &Matrix,
        y: &[f64],
        signs: &[SignBound],
        hp: Option<&Hyperparameters>,
        seed: u64,
    ) -> Result<Self> {
        match kind {
            ModelKind::LS => fit_bvls(x, y, signs).map(TrainedModel::Linear),
            _ => {
                let hp = hp.ok_or_else(|| Error::InvalidArgument(format!("{kind} needs hyperparameters")))?;
                fit_ensemble(x, y, hp, kind, seed).map(TrainedModel::Ensemble)
            }
        }
    }

    pub fn kind(&self) -> ModelKind {
        match self {
            TrainedModel::Linear(_) => ModelKind::LS,
            TrainedModel::Ensemble(e) => e.kind,
        }
    }

    pub fn predict(&self, x: &Matrix) -> Result<Vec<f64>> {
        match self {
            TrainedModel::Linear(l) => l.predict(x),
            TrainedModel::Ensemble(e) => e.predict(x),
        }
    }

    /// Coefficients for LS, importances for the ensembles.
    pub fn feature_weights(&self) -> &[f64] {
        match self {
            TrainedModel::Linear(l) => &l.coefficients,
            TrainedModel::Ensemble(e) => &e.importances,
        }
    }

    pub fn to_json(&self) -> Result<String> {
        let env = Envelope {
            format_version: MODEL_FORMAT_VERSION,
            kind: self.kind(),
            model: self.clone(),
        };
        serde_json::to_string_pretty(&env).map_err(|e| Error::Serialization(e.to_string()))
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let env: Envelope = serde_json::from_str(text).map_err(|e| Error::Serialization(e.to_string()))?;
        if env.format_version != MODEL_FORMAT_VERSION {
            return Err(Error::Serialization(format!(
                "unsupported model format version {}",
                env.format_version
            )));
        }
        if env.model.kind() != env.kind {
            return Err(Error::Serialization("model kind does not match its content".into()));
        }
        Ok(env.model)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn zero_coefficients_predict_intercept() {
        let fit = LinearFit {
            coefficients: vec![0.0, 0.0],
            intercept: 3.25,
            degenerate: false,
        };
        let x = Matrix::from_rows(&[vec![1.0, 9.0], vec![-4.0, 2.0]]).unwrap();
        assert_eq!(fit.predict(&x).unwrap(), vec![3.25, 3.25]);
    }

    #[test]
    fn sampled_hyperparameters_stay_in_range() {
        let space = HyperparameterSpace::default();
        let mut rng = Stream::new(11);
        let mut seen_trees = std::collections::BTreeSet::new();
        for _ in 0..2000 {
            let hp = space.sample(&mut rng);
            space.check(&hp).unwrap();
            seen_trees.insert(hp.n_trees);
        }
        assert_eq!(seen_trees.len(), 20);
    }

    #[test]
    fn single_tree_prediction_matches_hand_traversal() {
        let hp = Hyperparameters {
            n_trees: 1,
            max_depth: 1,
            min_samples_split: 2,
            min_samples_leaf: 2,
        };
        let tree = Tree {
            nodes: vec![
                TreeNode::Split {
                    feature: 0,
                    threshold: 1.5,
                    left: 1,
                    right: 2,
                    samples: 4,
                    gain: 4.0,
                },
                TreeNode::Leaf { value: 1.0, samples: 2 },
                TreeNode::Leaf { value: 5.0, samples: 2 },
            ],
        };
        let e = Ensemble {
            kind: ModelKind::ET,
            hyperparameters: hp,
            seed: 0,
            n_features: 1,
            trees: vec![tree],
            importances: vec![1.0],
        };
        let probe = Matrix::from_columns(&[vec![1.5, 1.6, -10.0]]).unwrap();
        assert_eq!(e.predict(&probe).unwrap(), vec![1.0, 5.0, 1.0]);
    }

    #[test]
    fn json_round_trip_is_exact() {
        let x = Matrix::from_rows(&[vec![0.1, 0.7], vec![0.3, 0.2], vec![0.9, 0.4], vec![0.6, 0.8], vec![0.2, 0.5]]).unwrap();
        let y = [1.0 / 3.0, 2.0f64.sqrt(), 0.1, 7.0 / 9.0, 1e-7];
        let signs = [SignBound::NonNegative, SignBound::NonPositive];
        let hp = Hyperparameters {
            n_trees: 200,
            max_depth: 2,
            min_samples_split: 2,
            min_samples_leaf: 2,
        };
        for kind in ModelKind::ALL {
            let m = TrainedModel::fit(kind, &x, &y, &signs, Some(&hp), 5).unwrap();
            let back = TrainedModel::from_json(&m.to_json().unwrap()).unwrap();
            assert_eq!(m, back);
            assert_eq!(m.predict(&x).unwrap(), back.predict(&x).unwrap());
        }
    }

    #[test]
    fn rejects_other_format_versions() {
        let m = TrainedModel::Linear(LinearFit {
            coefficients: vec![1.0],
            intercept: 0.0,
            degenerate: false,
        });
        let text = m.to_json().unwrap().replace("\"format_version\": 1", "\"format_version\": 99");
        assert!(TrainedModel::from_json(&text).is_err());
    }
}
