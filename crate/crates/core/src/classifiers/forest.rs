// SPDX-License-Identifier: MIT OR Apache-2.0

//! Bagged CART classification trees with Gini splits.

use rand::seq::index::sample;
use rand::Rng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::{FittedClassifier, TrainSet};
use crate::error::{Error, Result};
use crate::rng::stream;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ForestConfig {
    pub n_trees: usize,
    /// `None` grows until leaves are pure or too small to split.
    pub max_depth: Option<usize>,
    /// Minimum number of bootstrap samples in a leaf.
    pub min_leaf: usize,
    /// Features tried per node; `None` means `floor(sqrt(p))`.
    pub mtry: Option<usize>,
    pub bootstrap: bool,
}

impl Default for ForestConfig {
    fn default() -> Self {
        Self {
            n_trees: 100,
            max_depth: None,
            min_leaf: 5,
            mtry: None,
            bootstrap: true,
        }
    }
}

impl ForestConfig {
    pub fn validate(&self) -> Result<()> {
        if self.n_trees == 0 {
            return Err(Error::InvalidConfig("n_trees must be >= 1".into()));
        }
        if self.min_leaf == 0 {
            return Err(Error::InvalidConfig("min_leaf must be >= 1".into()));
        }
        if self.mtry == Some(0) {
            return Err(Error::InvalidConfig("mtry must be >= 1".into()));
        }
        Ok(())
    }

    fn mtry_for(&self, p: usize) -> usize {
        self.mtry
            .unwrap_or_else(|| ((p as f64).sqrt().floor() as usize).max(1))
            .min(p)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub enum Node {
    Leaf {
        vote: u8,
    },
    Split {
        feature: usize,
        threshold: f64,
        left: usize,
        right: usize,
    },
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Tree {
    nodes: Vec<Node>,
}

impl Tree {
    pub fn vote(&self, z: &[f64]) -> u8 {
        let mut at = 0;
        loop {
            match self.nodes[at] {
                Node::Leaf { vote } => return vote,
                Node::Split {
                    feature,
                    threshold,
                    left,
                    right,
                } => at = if z[feature] <= threshold { left } else { right },
            }
        }
    }

    pub fn nodes(&self) -> &[Node] {
        &self.nodes
    }

    pub fn depth(&self) -> usize {
        fn go(nodes: &[Node], at: usize) -> usize {
            match nodes[at] {
                Node::Leaf { .. } => 0,
                Node::Split { left, right, .. } => 1 + go(nodes, left).max(go(nodes, right)),
            }
        }
        go(&self.nodes, 0)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RandomForest {
    trees: Vec<Tree>,
    dim: usize,
}

impl RandomForest {
    pub fn from_trees(trees: Vec<Tree>, dim: usize) -> Self {
        Self { trees, dim }
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn trees(&self) -> &[Tree] {
        &self.trees
    }

    /// Fraction of trees voting for class 1.
    pub fn predict_proba(&self, z: &[f64]) -> f64 {
        let ones: usize = self.trees.iter().map(|t| usize::from(t.vote(z))).sum();
        ones as f64 / self.trees.len() as f64
    }
}

struct Builder<'a> {
    data: &'a TrainSet,
    cfg: &'a ForestConfig,
    mtry: usize,
    rng: ChaCha8Rng,
    nodes: Vec<Node>,
    // scratch
    pairs: Vec<(f64, u8)>,
}

impl Builder<'_> {
    fn leaf(&mut self, ones: usize, total: usize) -> Node {
        let zeros = total - ones;
        let vote = match ones.cmp(&zeros) {
            std::cmp::Ordering::Greater => 1,
            std::cmp::Ordering::Less => 0,
            std::cmp::Ordering::Equal => u8::from(self.rng.gen::<bool>()),
        };
        Node::Leaf { vote }
    }

    /// Best Gini split over a random feature subset: `(feature, threshold, score)`
    /// where `score = sum over children of (c0^2 + c1^2) / n_child`.
    fn best_split(&mut self, idx: &[usize], ones: usize) -> Option<(usize, f64)> {
        let n = idx.len();
        let p = self.data.dim();
        let min_leaf = self.cfg.min_leaf;
        let parent = {
            let (c1, c0) = (ones as f64, (n - ones) as f64);
            (c1 * c1 + c0 * c0) / n as f64
        };
        let mut best: Option<(usize, f64, f64)> = None;
        let features = sample(&mut self.rng, p, self.mtry);
        for feature in features.iter() {
            self.pairs.clear();
            self.pairs.extend(
                idx.iter()
                    .map(|&i| (self.data.row(i)[feature], self.data.labels()[i])),
            );
            self.pairs.sort_unstable_by(|a, b| a.0.total_cmp(&b.0));
            let mut left_ones = 0usize;
            for s in 0..n - 1 {
                left_ones += usize::from(self.pairs[s].1);
                let nl = s + 1;
                let nr = n - nl;
                if nl < min_leaf {
                    continue;
                }
                if nr < min_leaf {
                    break;
                }
                if self.pairs[s].0 >= self.pairs[s + 1].0 {
                    continue;
                }
                let (l1, l0) = (left_ones as f64, (nl - left_ones) as f64);
                let (r1, r0) = ((ones - left_ones) as f64, (nr + left_ones - ones) as f64);
                let score = (l1 * l1 + l0 * l0) / nl as f64 + (r1 * r1 + r0 * r0) / nr as f64;
                if score > parent + 1e-12 && best.is_none_or(|b| score > b.2) {
                    let threshold = 0.5 * (self.pairs[s].0 + self.pairs[s + 1].0);
                    best = Some((feature, threshold, score));
                }
            }
        }
        best.map(|(f, t, _)| (f, t))
    }

    fn grow(&mut self, idx: Vec<usize>, depth: usize) -> usize {
        let at = self.nodes.len();
        self.nodes.push(Node::Leaf { vote: 0 });
        let labels = self.data.labels();
        let ones = idx.iter().filter(|&&i| labels[i] == 1).count();
        let n = idx.len();
        let stop = ones == 0
            || ones == n
            || n < 2 * self.cfg.min_leaf
            || self.cfg.max_depth.is_some_and(|d| depth >= d);
        let split = if stop {
            None
        } else {
            self.best_split(&idx, ones)
        };
        match split {
            None => self.nodes[at] = self.leaf(ones, n),
            Some((feature, threshold)) => {
                let (l, r): (Vec<usize>, Vec<usize>) = idx
                    .into_iter()
                    .partition(|&i| self.data.row(i)[feature] <= threshold);
                let left = self.grow(l, depth + 1);
                let right = self.grow(r, depth + 1);
                self.nodes[at] = Node::Split {
                    feature,
                    threshold,
                    left,
                    right,
                };
            }
        }
        at
    }
}

fn build_tree(data: &TrainSet, cfg: &ForestConfig, seed: u64, index: usize) -> Tree {
    let mut rng = stream(seed, "forest-tree", index as u64);
    let n = data.len();
    let idx: Vec<usize> = if cfg.bootstrap {
        (0..n).map(|_| rng.gen_range(0..n)).collect()
    } else {
        (0..n).collect()
    };
    let mut b = Builder {
        data,
        cfg,
        mtry: cfg.mtry_for(data.dim()),
        rng,
        nodes: Vec::new(),
        pairs: Vec::with_capacity(n),
    };
    b.grow(idx, 0);
    Tree { nodes: b.nodes }
}

/// Grows `cfg.n_trees` trees; tree `i` draws from its own stream derived
/// from `(seed, i)`, so the forest is identical however the work is scheduled.
pub fn train_forest(data: &TrainSet, cfg: &ForestConfig, seed: u64) -> Result<FittedClassifier> {
    cfg.validate()?;
    let trees: Vec<Tree> = (0..cfg.n_trees)
        .into_par_iter()
        .map(|i| build_tree(data, cfg, seed, i))
        .collect();
    Ok(FittedClassifier::RandomForest(RandomForest {
        trees,
        dim: data.dim(),
    }))
}
