use super::tree::{fit_tree, Tree};
use super::{Hyperparameters, Matrix, ModelKind};
use crate::error::{Error, Result};
use crate::rng::{derive_seed, Stream};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Ensemble {
    pub kind: ModelKind,
    pub hyperparameters: Hyperparameters,
    pub seed: u64,
    pub n_features: usize,
    pub trees: Vec<Tree>,
    pub importances: Vec<f64>,
}

/// Fit `n_trees` trees in parallel; tree `i` draws from `derive_seed(seed, i)`.
pub fn fit_ensemble(x: &Matrix, y: &[f64], hp: &Hyperparameters, kind: ModelKind, seed: u64) -> Result<Ensemble> {
    if kind == ModelKind::LS {
        return Err(Error::InvalidArgument("LS is not a tree ensemble".into()));
    }
    hp.validate()?;
    if x.nrows() == 0 || x.ncols() == 0 {
        return Err(Error::EmptyInput);
    }
    if y.len() != x.nrows() {
        return Err(Error::DimensionMismatch {
            what: "target length",
            expected: x.nrows(),
            found: y.len(),
        });
    }
    let trees: Vec<Tree> = (0..hp.n_trees as u64)
        .into_par_iter()
        .map(|i| fit_tree(x, y, hp, kind, &mut Stream::new(derive_seed(seed, i))))
        .collect();
    let mut gains = vec![0.0; x.ncols()];
    for t in &trees {
        t.add_gains(&mut gains);
    }
    let total: f64 = gains.iter().sum();
    let importances = if total > 0.0 {
        gains.iter().map(|g| g / total).collect()
    } else {
        vec![0.0; x.ncols()]
    };
    Ok(Ensemble {
        kind,
        hyperparameters: *hp,
        seed,
        n_features: x.ncols(),
        trees,
        importances,
    })
}

impl Ensemble {
    /// Mean of the tree predictions. Leaf values are summed in sorted order
    /// so the result does not depend on tree order.
    pub fn predict_row(&self, row: &[f64]) -> f64 {
        let mut leaf: Vec<f64> = self.trees.iter().map(|t| t.predict_row(row)).collect();
        leaf.sort_by(f64::total_cmp);
        let (lo, hi) = (leaf[0], leaf[leaf.len() - 1]);
        (leaf.iter().sum::<f64>() / leaf.len() as f64).clamp(lo, hi)
    }

    pub fn predict(&self, x: &Matrix) -> Result<Vec<f64>> {
        if x.ncols() != self.n_features {
            return Err(Error::DimensionMismatch {
                what: "feature columns",
                expected: self.n_features,
                found: x.ncols(),
            });
        }
        Ok(x.rows().map(|r| self.predict_row(r)).collect())
    }
}
