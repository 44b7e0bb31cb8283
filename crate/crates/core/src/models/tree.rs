//! CART regression trees grown on squared-error reduction.

use super::{Hyperparameters, Matrix, ModelKind};
use crate::rng::Stream;
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "node", rename_all = "lowercase")]
pub enum TreeNode {
    Leaf {
        value: f64,
        samples: usize,
    },
    Split {
        feature: usize,
        threshold: f64,
        left: usize,
        right: usize,
        samples: usize,
        /// Squared-error reduction of this split divided by the tree's sample count.
        gain: f64,
    },
}

/// A tree stored as an arena; node 0 is the root. Rows with
/// `x[feature] <= threshold` go left.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Tree {
    pub nodes: Vec<TreeNode>,
}

impl Tree {
    pub fn predict_row(&self, row: &[f64]) -> f64 {
        let mut k = 0;
        loop {
            match &self.nodes[k] {
                TreeNode::Leaf { value, .. } => return *value,
                TreeNode::Split {
                    feature,
                    threshold,
                    left,
                    right,
                    ..
                } => k = if row[*feature] <= *threshold { *left } else { *right },
            }
        }
    }

    pub fn depth(&self) -> usize {
        fn go(nodes: &[TreeNode], k: usize) -> usize {
            match &nodes[k] {
                TreeNode::Leaf { .. } => 0,
                TreeNode::Split { left, right, .. } => 1 + go(nodes, *left).max(go(nodes, *right)),
            }
        }
        go(&self.nodes, 0)
    }

    pub fn leaves(&self) -> impl Iterator<Item = (f64, usize)> + '_ {
        self.nodes.iter().filter_map(|n| match n {
            TreeNode::Leaf { value, samples } => Some((*value, *samples)),
            _ => None,
        })
    }

    /// Accumulate per-feature gains into `out`.
    pub fn add_gains(&self, out: &mut [f64]) {
        for n in &self.nodes {
            if let TreeNode::Split { feature, gain, .. } = n {
                out[*feature] += gain;
            }
        }
    }
}

struct Candidate {
    feature: usize,
    threshold: f64,
    gain: f64,
}

struct Grower<'a> {
    x: &'a Matrix,
    y: &'a [f64],
    hp: &'a Hyperparameters,
    kind: ModelKind,
    total: f64,
    nodes: Vec<TreeNode>,
}

fn sse(y: &[f64], idx: &[usize]) -> (f64, f64) {
    let n = idx.len() as f64;
    let mean = idx.iter().map(|&i| y[i]).sum::<f64>() / n;
    let s = idx.iter().map(|&i| (y[i] - mean).powi(2)).sum();
    (mean, s)
}

/// SSE of a group from the sums of centered values.
fn group_sse(s1: f64, s2: f64, n: usize) -> f64 {
    (s2 - s1 * s1 / n as f64).max(0.0)
}

impl Grower<'_> {
    fn grow(&mut self, idx: Vec<usize>, depth: usize, rng: &mut Stream) -> usize {
        let slot = self.nodes.len();
        let (mean, node_sse) = sse(self.y, &idx);
        self.nodes.push(TreeNode::Leaf {
            value: mean,
            samples: idx.len(),
        });
        if depth >= self.hp.max_depth || idx.len() < self.hp.min_samples_split || node_sse <= 0.0 {
            return slot;
        }
        let Some(best) = self.best_split(&idx, mean, node_sse, rng) else {
            return slot;
        };
        let (l, r): (Vec<usize>, Vec<usize>) = idx.iter().partition(|&&i| self.x.get(i, best.feature) <= best.threshold);
        let left = self.grow(l, depth + 1, rng);
        let right = self.grow(r, depth + 1, rng);
        self.nodes[slot] = TreeNode::Split {
            feature: best.feature,
            threshold: best.threshold,
            left,
            right,
            samples: idx.len(),
            gain: best.gain / self.total,
        };
        slot
    }

    /// Examine ⌈√p⌉ randomly chosen features, in index order; if none of them
    /// admits a valid split keep drawing from the remaining features.
    fn best_split(&self, idx: &[usize], mean: f64, node_sse: f64, rng: &mut Stream) -> Option<Candidate> {
        let p = self.x.ncols();
        let k = (p as f64).sqrt().ceil() as usize;
        let mut order: Vec<usize> = (0..p).collect();
        rng.shuffle(&mut order);
        let mut first: Vec<usize> = order[..k.min(p)].to_vec();
        first.sort_unstable();
        let mut best: Option<Candidate> = None;
        for &f in &first {
            self.consider(f, idx, mean, node_sse, rng, &mut best);
        }
        for &f in &order[k.min(p)..] {
            if best.is_some() {
                break;
            }
            self.consider(f, idx, mean, node_sse, rng, &mut best);
        }
        best
    }

    fn consider(&self, f: usize, idx: &[usize], mean: f64, node_sse: f64, rng: &mut Stream, best: &mut Option<Candidate>) {
        let found = match self.kind {
            ModelKind::ET => self.random_cut(f, idx, mean, node_sse, rng),
            _ => self.exhaustive(f, idx, mean, node_sse),
        };
        if let Some(c) = found {
            let better = match best {
                None => true,
                Some(b) => c.gain > b.gain || (c.gain == b.gain && (c.feature, c.threshold) < (b.feature, b.threshold)),
            };
            if better {
                *best = Some(c);
            }
        }
    }

    fn exhaustive(&self, f: usize, idx: &[usize], mean: f64, node_sse: f64) -> Option<Candidate> {
        let mut pairs: Vec<(f64, f64)> = idx.iter().map(|&i| (self.x.get(i, f), self.y[i] - mean)).collect();
        pairs.sort_by(|a, b| a.0.total_cmp(&b.0));
        let n = pairs.len();
        let (t1, t2) = pairs.iter().fold((0.0, 0.0), |(a, b), &(_, r)| (a + r, b + r * r));
        let leaf = self.hp.min_samples_leaf;
        let (mut l1, mut l2) = (0.0, 0.0);
        let mut best: Option<Candidate> = None;
        for i in 0..n - 1 {
            let r = pairs[i].1;
            l1 += r;
            l2 += r * r;
            let nl = i + 1;
            if nl < leaf || n - nl < leaf || pairs[i].0 == pairs[i + 1].0 {
                continue;
            }
            let children = group_sse(l1, l2, nl) + group_sse(t1 - l1, t2 - l2, n - nl);
            let gain = node_sse - children;
            if gain > 0.0 && best.as_ref().is_none_or(|b| gain > b.gain) {
                let (lo, hi) = (pairs[i].0, pairs[i + 1].0);
                let mut threshold = lo + (hi - lo) / 2.0;
                if threshold >= hi {
                    threshold = lo;
                }
                best = Some(Candidate {
                    feature: f,
                    threshold,
                    gain,
                });
            }
        }
        best
    }

    fn random_cut(&self, f: usize, idx: &[usize], mean: f64, node_sse: f64, rng: &mut Stream) -> Option<Candidate> {
        let (lo, hi) = idx
            .iter()
            .map(|&i| self.x.get(i, f))
            .fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), v| (a.min(v), b.max(v)));
        if lo >= hi {
            return None;
        }
        let mut threshold = lo + rng.next_f64() * (hi - lo);
        if threshold >= hi {
            threshold = lo;
        }
        let (mut l, mut r) = ((0.0, 0.0, 0usize), (0.0, 0.0, 0usize));
        for &i in idx {
            let d = self.y[i] - mean;
            let g = if self.x.get(i, f) <= threshold { &mut l } else { &mut r };
            g.0 += d;
            g.1 += d * d;
            g.2 += 1;
        }
        let leaf = self.hp.min_samples_leaf;
        if l.2 < leaf || r.2 < leaf {
            return None;
        }
        let gain = node_sse - group_sse(l.0, l.1, l.2) - group_sse(r.0, r.1, r.2);
        (gain > 0.0).then_some(Candidate {
            feature: f,
            threshold,
            gain,
        })
    }
}

/// Grow one tree. Random forests train on a bootstrap resample of the rows
/// and search every midpoint; extra trees use every row once and one random
/// cut per candidate feature.
pub fn fit_tree(x: &Matrix, y: &[f64], hp: &Hyperparameters, kind: ModelKind, rng: &mut Stream) -> Tree {
    let n = x.nrows();
    let idx: Vec<usize> = match kind {
        ModelKind::RF => (0..n).map(|_| rng.below(n as u64) as usize).collect(),
        _ => (0..n).collect(),
    };
    let mut g = Grower {
        x,
        y,
        hp,
        kind,
        total: n as f64,
        nodes: Vec::new(),
    };
    g.grow(idx, 0, rng);
    Tree { nodes: g.nodes }
}
