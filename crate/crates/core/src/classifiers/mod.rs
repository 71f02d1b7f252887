// SPDX-License-Identifier: MIT OR Apache-2.0

//! Probabilistic binary classifiers trained on the two ends of a series.
//!
//! Each fitted model returns `P(v = 1 | z)`, the estimated probability that
//! `z` was drawn from the same distribution as the tail block.

mod forest;
mod logistic;

pub use forest::{train_forest, ForestConfig, RandomForest, Tree};
pub use logistic::{train_logistic_l1, LambdaRule, LogisticL1Config, LogisticModel};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::{ClassifierKind, RunConfig, Series, SplitPlan};

/// Labelled design matrix, row-major.
#[derive(Clone, Debug, PartialEq)]
pub struct TrainSet {
    features: Vec<f64>,
    labels: Vec<u8>,
    dim: usize,
}

impl TrainSet {
    pub fn new(features: Vec<f64>, labels: Vec<u8>, dim: usize) -> Result<Self> {
        if dim == 0 || features.len() != labels.len() * dim {
            return Err(Error::InvalidConfig(format!(
                "feature buffer of {} values does not match {} rows x {dim}",
                features.len(),
                labels.len()
            )));
        }
        if let Some(&bad) = labels.iter().find(|&&l| l > 1) {
            return Err(Error::InvalidConfig(format!("label {bad} is not 0/1")));
        }
        if features.iter().any(|v| !v.is_finite()) {
            return Err(Error::InvalidSeries("non-finite training feature".into()));
        }
        let ones = labels.iter().filter(|&&l| l == 1).count();
        if ones == 0 || ones == labels.len() {
            return Err(Error::SingleClass);
        }
        Ok(Self {
            features,
            labels,
            dim,
        })
    }

    /// Rows of `d0` labelled 0 followed by rows of `d1` labelled 1.
    pub fn from_split(series: &Series, plan: &SplitPlan) -> Result<Self> {
        if series.len() != plan.len() {
            return Err(Error::InvalidTrim(format!(
                "plan built for T={} used with T={}",
                plan.len(),
                series.len()
            )));
        }
        let m = plan.m();
        let mut features = Vec::with_capacity(2 * m * series.dim());
        let mut labels = Vec::with_capacity(2 * m);
        for t in plan.d0() {
            features.extend_from_slice(series.at(t));
            labels.push(0);
        }
        for t in plan.d1() {
            features.extend_from_slice(series.at(t));
            labels.push(1);
        }
        Self::new(features, labels, series.dim())
    }

    pub fn len(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.features[i * self.dim..(i + 1) * self.dim]
    }

    pub fn labels(&self) -> &[u8] {
        &self.labels
    }
}

/// A trained scorer.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum FittedClassifier {
    LogisticL1(LogisticModel),
    RandomForest(RandomForest),
    ConstantGuess { dim: usize },
}

impl FittedClassifier {
    pub fn kind(&self) -> ClassifierKind {
        match self {
            FittedClassifier::LogisticL1(_) => ClassifierKind::LogisticL1,
            FittedClassifier::RandomForest(_) => ClassifierKind::RandomForest,
            FittedClassifier::ConstantGuess { .. } => ClassifierKind::ConstantGuess,
        }
    }

    pub fn dim(&self) -> usize {
        match self {
            FittedClassifier::LogisticL1(m) => m.dim(),
            FittedClassifier::RandomForest(f) => f.dim(),
            FittedClassifier::ConstantGuess { dim } => *dim,
        }
    }

    pub fn predict_proba(&self, z: &[f64]) -> Result<f64> {
        if z.len() != self.dim() {
            return Err(Error::DimMismatch {
                expected: self.dim(),
                got: z.len(),
            });
        }
        Ok(match self {
            FittedClassifier::LogisticL1(m) => m.predict_proba(z),
            FittedClassifier::RandomForest(f) => f.predict_proba(z),
            FittedClassifier::ConstantGuess { .. } => 0.5,
        })
    }
}

pub fn predict_proba(model: &FittedClassifier, z: &[f64]) -> Result<f64> {
    model.predict_proba(z)
}

/// Trains the classifier selected in `cfg`.
pub fn train(data: &TrainSet, cfg: &RunConfig, seed: u64) -> Result<FittedClassifier> {
    match cfg.classifier {
        ClassifierKind::LogisticL1 => train_logistic_l1(data, &cfg.logistic, seed),
        ClassifierKind::RandomForest => train_forest(data, &cfg.forest, seed),
        ClassifierKind::ConstantGuess => Ok(FittedClassifier::ConstantGuess { dim: data.dim() }),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn single_class_rejected() {
        assert!(matches!(
            TrainSet::new(vec![1.0, 2.0, 3.0], vec![0, 0, 0], 1),
            Err(Error::SingleClass)
        ));
    }

    #[test]
    fn constant_guess_is_half() {
        let m = FittedClassifier::ConstantGuess { dim: 2 };
        assert_eq!(m.predict_proba(&[3.0, -1.0]).unwrap(), 0.5);
        assert!(matches!(
            m.predict_proba(&[1.0]),
            Err(Error::DimMismatch {
                expected: 2,
                got: 1
            })
        ));
    }

    #[test]
    fn train_set_uses_only_the_ends() {
        let rows: Vec<Vec<f64>> = (1..=20).map(|t| vec![t as f64]).collect();
        let s = Series::from_rows(&rows).unwrap();
        let plan = SplitPlan::new(20, 0.15, 0.05).unwrap();
        let ts = TrainSet::from_split(&s, &plan).unwrap();
        assert_eq!(ts.len(), 6);
        let xs: Vec<f64> = (0..6).map(|i| ts.row(i)[0]).collect();
        assert_eq!(xs, vec![1.0, 2.0, 3.0, 18.0, 19.0, 20.0]);
        assert_eq!(ts.labels(), &[0, 0, 0, 1, 1, 1]);
    }
}
