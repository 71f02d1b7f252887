// SPDX-License-Identifier: MIT OR Apache-2.0

//! L1-penalized logistic regression.
//!
//! Minimizes `mean BCE + lambda * ||w||_1` by proximal Newton steps: each
//! outer iteration builds the weighted least-squares model of the loss at
//! the current fit, solves its L1 problem by cyclic coordinate descent, and
//! backtracks along the resulting step until the penalized objective does
//! not increase. The intercept is not penalized.

use serde::{Deserialize, Serialize};

use super::{FittedClassifier, TrainSet};
use crate::error::{Error, Result};

/// How the penalty weight is chosen.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "rule", content = "value", rename_all = "snake_case")]
pub enum LambdaRule {
    Fixed(f64),
    /// Fraction of `lambda_max`, the smallest penalty that zeroes all weights.
    RelativeToMax(f64),
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LogisticL1Config {
    pub lambda: LambdaRule,
    pub max_iters: usize,
    pub tol: f64,
    pub standardize: bool,
}

impl Default for LogisticL1Config {
    fn default() -> Self {
        Self {
            lambda: LambdaRule::RelativeToMax(0.01),
            max_iters: 100,
            tol: 1e-6,
            standardize: true,
        }
    }
}

impl LogisticL1Config {
    pub fn validate(&self) -> Result<()> {
        let lam = match self.lambda {
            LambdaRule::Fixed(v) | LambdaRule::RelativeToMax(v) => v,
        };
        if !(lam >= 0.0 && lam.is_finite()) {
            return Err(Error::InvalidConfig(format!("lambda={lam} must be >= 0")));
        }
        if !(self.tol > 0.0) {
            return Err(Error::InvalidConfig("tol must be > 0".into()));
        }
        if self.max_iters == 0 {
            return Err(Error::InvalidConfig("max_iters must be >= 1".into()));
        }
        Ok(())
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LogisticModel {
    /// Weights on the (possibly standardized) training features.
    pub weights: Vec<f64>,
    pub intercept: f64,
    /// Column centers and scales; identity when standardization is off.
    pub centers: Vec<f64>,
    pub scales: Vec<f64>,
    /// Columns dropped for having zero variance.
    pub dropped: Vec<usize>,
    pub lambda: f64,
    pub lambda_max: f64,
    pub iterations: usize,
    pub converged: bool,
    /// Penalized objective after each outer step.
    pub objective_trace: Vec<f64>,
}

#[inline]
fn sigmoid(x: f64) -> f64 {
    if x >= 0.0 {
        1.0 / (1.0 + (-x).exp())
    } else {
        let e = x.exp();
        e / (1.0 + e)
    }
}

#[inline]
fn softplus(x: f64) -> f64 {
    if x > 0.0 {
        x + (-x).exp().ln_1p()
    } else {
        x.exp().ln_1p()
    }
}

impl LogisticModel {
    pub fn dim(&self) -> usize {
        self.weights.len()
    }

    pub fn linear_predictor(&self, z: &[f64]) -> f64 {
        self.intercept
            + self
                .weights
                .iter()
                .zip(z)
                .zip(self.centers.iter().zip(&self.scales))
                .filter(|((w, _), _)| **w != 0.0)
                .map(|((w, x), (c, s))| w * (x - c) / s)
                .sum::<f64>()
    }

    pub fn predict_proba(&self, z: &[f64]) -> f64 {
        sigmoid(self.linear_predictor(z))
    }
}

fn objective(eta: &[f64], y: &[f64], weights: &[f64], lambda: f64) -> f64 {
    let n = y.len() as f64;
    let loss: f64 = eta
        .iter()
        .zip(y)
        .map(|(&e, &yi)| softplus(e) - yi * e)
        .sum::<f64>()
        / n;
    loss + lambda * weights.iter().map(|w| w.abs()).sum::<f64>()
}

/// Floor on the IRLS weights `p (1 - p)` for nearly separated data.
const MIN_WEIGHT: f64 = 1e-5;
const MAX_INNER_SWEEPS: usize = 100;
const MAX_HALVINGS: usize = 40;

#[inline]
fn soft_threshold(z: f64, t: f64) -> f64 {
    if z > t {
        z - t
    } else if z < -t {
        z + t
    } else {
        0.0
    }
}

/// Fits the model. The result is deterministic; `_seed` is accepted for
/// interface symmetry with the stochastic learners.
pub fn train_logistic_l1(
    data: &TrainSet,
    cfg: &LogisticL1Config,
    _seed: u64,
) -> Result<FittedClassifier> {
    cfg.validate()?;
    let n = data.len();
    let p = data.dim();
    let nf = n as f64;
    let y: Vec<f64> = data.labels().iter().map(|&l| f64::from(l)).collect();

    // Column-major design, transformed.
    let mut cols = vec![0.0; n * p];
    let mut centers = vec![0.0; p];
    let mut scales = vec![1.0; p];
    let mut dropped = Vec::new();
    let mut active = vec![false; p];
    for j in 0..p {
        let col = &mut cols[j * n..(j + 1) * n];
        for (i, c) in col.iter_mut().enumerate() {
            *c = data.row(i)[j];
        }
        if cfg.standardize {
            let mean = col.iter().sum::<f64>() / nf;
            let var = col.iter().map(|x| (x - mean) * (x - mean)).sum::<f64>() / nf;
            let sd = var.sqrt();
            if sd <= 1e-12 * mean.abs().max(1.0) {
                log::warn!("logistic: column {j} is constant; dropped");
                dropped.push(j);
                col.iter_mut().for_each(|c| *c = 0.0);
                continue;
            }
            centers[j] = mean;
            scales[j] = sd;
            col.iter_mut().for_each(|c| *c = (*c - mean) / sd);
        }
        active[j] = col.iter().any(|&x| x != 0.0);
    }

    let ybar = y.iter().sum::<f64>() / nf;
    let mut intercept = (ybar / (1.0 - ybar)).ln();
    let mut weights = vec![0.0; p];

    let lambda_max = (0..p)
        .map(|j| {
            cols[j * n..(j + 1) * n]
                .iter()
                .zip(&y)
                .map(|(x, yi)| x * (ybar - yi))
                .sum::<f64>()
                .abs()
                / nf
        })
        .fold(0.0, f64::max);
    let lambda = match cfg.lambda {
        LambdaRule::Fixed(v) => v,
        LambdaRule::RelativeToMax(f) => f * lambda_max,
    };

    let mut eta = vec![intercept; n];
    let mut f = objective(&eta, &y, &weights, lambda);
    let mut trace = vec![f];
    let mut converged = false;
    let mut iterations = 0;

    let mut wts = vec![0.0; n];
    let mut u = vec![0.0; n];
    let mut step = vec![0.0; p];
    let mut lin = vec![0.0; n];
    let mut trial = vec![0.0; n];
    let mut a = vec![0.0; p];
    for _ in 0..cfg.max_iters {
        iterations += 1;
        // Weighted least-squares model of the loss around the current fit,
        // in terms of the step (step, step_b).
        for i in 0..n {
            let pi = sigmoid(eta[i]);
            wts[i] = (pi * (1.0 - pi)).max(MIN_WEIGHT);
            u[i] = (y[i] - pi) / wts[i];
        }
        let a_b = wts.iter().sum::<f64>() / nf;
        for j in 0..p {
            let col = &cols[j * n..(j + 1) * n];
            a[j] = col.iter().zip(&wts).map(|(x, w)| w * x * x).sum::<f64>() / nf;
        }
        step.iter_mut().for_each(|d| *d = 0.0);
        let mut step_b = 0.0;
        // Inexact inner solve: far from the optimum a rough step suffices.
        let mut inner_tol = 0.1 * cfg.tol;
        for sweep in 0..MAX_INNER_SWEEPS {
            let mut moved: f64 = 0.0;
            for j in 0..p {
                if !active[j] || a[j] <= 0.0 {
                    continue;
                }
                let col = &cols[j * n..(j + 1) * n];
                let g = col
                    .iter()
                    .zip(&wts)
                    .zip(&u)
                    .map(|((x, w), r)| w * x * r)
                    .sum::<f64>()
                    / nf;
                let cur = weights[j] + step[j];
                let d = soft_threshold(cur + g / a[j], lambda / a[j]) - cur;
                if d != 0.0 {
                    step[j] += d;
                    u.iter_mut().zip(col).for_each(|(r, x)| *r -= d * x);
                    moved = moved.max(d.abs() * a[j].sqrt());
                }
            }
            let d = wts.iter().zip(&u).map(|(w, r)| w * r).sum::<f64>() / nf / a_b;
            step_b += d;
            u.iter_mut().for_each(|r| *r -= d);
            moved = moved.max(d.abs() * a_b.sqrt());
            if sweep == 0 {
                inner_tol = inner_tol.max(0.01 * moved);
            }
            if moved < inner_tol {
                break;
            }
        }

        lin.iter_mut().for_each(|l| *l = step_b);
        for j in (0..p).filter(|&j| step[j] != 0.0) {
            let col = &cols[j * n..(j + 1) * n];
            lin.iter_mut().zip(col).for_each(|(l, x)| *l += step[j] * x);
        }
        // Backtrack until the penalized objective does not increase.
        let mut t = 1.0;
        let mut accepted = None;
        for _ in 0..MAX_HALVINGS {
            let w_try: Vec<f64> = weights.iter().zip(&step).map(|(w, d)| w + t * d).collect();
            trial
                .iter_mut()
                .zip(eta.iter().zip(&lin))
                .for_each(|(e, (e0, l))| *e = e0 + t * l);
            let f_try = objective(&trial, &y, &w_try, lambda);
            if f_try <= f {
                accepted = Some((w_try, f_try));
                break;
            }
            t *= 0.5;
        }
        let Some((w_new, f_new)) = accepted else {
            converged = true;
            break;
        };
        let change = step
            .iter()
            .zip(&a)
            .map(|(d, aj)| (t * d).abs() * aj.sqrt())
            .fold((t * step_b).abs() * a_b.sqrt(), f64::max);
        weights = w_new;
        intercept += t * step_b;
        std::mem::swap(&mut eta, &mut trial);
        let decrease = f - f_new;
        f = f_new;
        trace.push(f);
        if change < cfg.tol || decrease <= 1e-14 * f.abs().max(1.0) {
            converged = true;
            break;
        }
    }

    Ok(FittedClassifier::LogisticL1(LogisticModel {
        weights,
        intercept,
        centers,
        scales,
        dropped,
        lambda,
        lambda_max,
        iterations,
        converged,
        objective_trace: trace,
    }))
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn separated_1d() -> TrainSet {
        let mut x = vec![-1.0; 20];
        x.extend(vec![1.0; 20]);
        let mut y = vec![0u8; 20];
        y.extend(vec![1u8; 20]);
        TrainSet::new(x, y, 1).unwrap()
    }

    fn logistic(m: &FittedClassifier) -> &LogisticModel {
        match m {
            FittedClassifier::LogisticL1(l) => l,
            _ => unreachable!(),
        }
    }

    /// Penalized loss evaluated directly on raw 1-D data.
    fn raw_objective(w: f64, b: f64, lambda: f64) -> f64 {
        // label 0 at x = -1, label 1 at x = +1, equal weight
        0.5 * softplus(-w + b) + 0.5 * (softplus(w + b) - (w + b)) + lambda * w.abs()
    }

    #[test]
    fn separated_data_matches_grid_search() {
        let cfg = LogisticL1Config {
            lambda: LambdaRule::Fixed(0.01),
            max_iters: 1_000,
            tol: 1e-10,
            standardize: false,
        };
        let fit = train_logistic_l1(&separated_1d(), &cfg, 0).unwrap();
        let model = logistic(&fit);

        // brute-force grid over (w, b)
        let mut best = (f64::INFINITY, 0.0, 0.0);
        for wi in 0..=2000 {
            let w = wi as f64 * 0.005;
            for bi in -20..=20 {
                let b = bi as f64 * 0.01;
                let v = raw_objective(w, b, 0.01);
                if v < best.0 {
                    best = (v, w, b);
                }
            }
        }
        assert!(
            (model.weights[0] - best.1).abs() < 0.01,
            "{model:?} vs {best:?}"
        );
        assert!((model.intercept - best.2).abs() < 0.01);
        assert!(fit.predict_proba(&[1.0]).unwrap() > 0.9);
        assert!(fit.predict_proba(&[-1.0]).unwrap() < 0.1);
    }

    #[test]
    fn lambda_above_max_zeroes_weights() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let n = 60;
        let p = 4;
        let x: Vec<f64> = (0..n * p).map(|_| rng.gen_range(-1.0..1.0)).collect();
        let y: Vec<u8> = (0..n).map(|i| u8::from(i >= n / 2)).collect();
        let data = TrainSet::new(x, y, p).unwrap();
        let fit = train_logistic_l1(
            &data,
            &LogisticL1Config {
                lambda: LambdaRule::RelativeToMax(1.0),
                ..Default::default()
            },
            0,
        )
        .unwrap();
        let model = logistic(&fit);
        assert!(model.weights.iter().all(|&w| w == 0.0));
        assert!((fit.predict_proba(&[0.3, 0.1, -0.9, 0.0]).unwrap() - 0.5).abs() < 1e-12);
    }

    #[test]
    fn zero_model_predicts_half() {
        let model = LogisticModel {
            weights: vec![0.0, 0.0],
            intercept: 0.0,
            centers: vec![0.0, 0.0],
            scales: vec![1.0, 1.0],
            dropped: vec![],
            lambda: 0.0,
            lambda_max: 0.0,
            iterations: 0,
            converged: true,
            objective_trace: vec![],
        };
        assert_eq!(model.predict_proba(&[5.0, -2.0]), 0.5);
    }

    #[test]
    fn constant_column_dropped_not_fatal() {
        let x = vec![1.0, 0.0, 1.0, 1.0, 1.0, 2.0, 1.0, 3.0];
        let data = TrainSet::new(x, vec![0, 0, 1, 1], 2).unwrap();
        let fit = train_logistic_l1(&data, &LogisticL1Config::default(), 0).unwrap();
        let model = logistic(&fit);
        assert_eq!(model.dropped, vec![0]);
        assert_eq!(model.weights[0], 0.0);
        let p = fit.predict_proba(&[1.0, 3.0]).unwrap();
        assert!(p.is_finite() && (0.0..=1.0).contains(&p));
    }

    #[test]
    fn objective_never_increases() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        for trial in 0..20 {
            let n = 40 + trial * 5;
            let p = 1 + trial % 7;
            let x: Vec<f64> = (0..n * p).map(|_| rng.gen::<f64>() * 4.0 - 2.0).collect();
            let y: Vec<u8> = (0..n)
                .map(|i| u8::from(x[i * p] + 0.5 * rng.gen::<f64>() > 0.2))
                .collect();
            if y.iter().all(|&v| v == y[0]) {
                continue;
            }
            let data = TrainSet::new(x, y, p).unwrap();
            let fit = train_logistic_l1(&data, &LogisticL1Config::default(), 0).unwrap();
            let trace = &logistic(&fit).objective_trace;
            for w in trace.windows(2) {
                assert!(w[1] <= w[0] + 1e-12, "objective rose: {} -> {}", w[0], w[1]);
            }
        }
    }
}
