// SPDX-License-Identifier: MIT OR Apache-2.0

use rand::Rng;
use rand_distr::{Exp1, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::Series;
use crate::rng::stream;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DgpKind {
    StandardNull,
    BandedNull,
    ExponentialNull,
    DenseMean,
    SparseMean,
    DenseCov,
    BandedCov,
    DenseDiagCov,
    SparseDiagCov,
    DenseDist,
    SparseDist,
}

impl DgpKind {
    pub const ALL: [DgpKind; 11] = [
        DgpKind::StandardNull,
        DgpKind::BandedNull,
        DgpKind::ExponentialNull,
        DgpKind::DenseMean,
        DgpKind::SparseMean,
        DgpKind::DenseCov,
        DgpKind::BandedCov,
        DgpKind::DenseDiagCov,
        DgpKind::SparseDiagCov,
        DgpKind::DenseDist,
        DgpKind::SparseDist,
    ];

    pub fn is_null(&self) -> bool {
        matches!(
            self,
            DgpKind::StandardNull | DgpKind::BandedNull | DgpKind::ExponentialNull
        )
    }

    pub fn as_str(&self) -> &'static str {
        match self {
            DgpKind::StandardNull => "standard_null",
            DgpKind::BandedNull => "banded_null",
            DgpKind::ExponentialNull => "exponential_null",
            DgpKind::DenseMean => "dense_mean",
            DgpKind::SparseMean => "sparse_mean",
            DgpKind::DenseCov => "dense_cov",
            DgpKind::BandedCov => "banded_cov",
            DgpKind::DenseDiagCov => "dense_diag_cov",
            DgpKind::SparseDiagCov => "sparse_diag_cov",
            DgpKind::DenseDist => "dense_dist",
            DgpKind::SparseDist => "sparse_dist",
        }
    }

    /// Number of affected coordinates: `floor(p/5)` for dense kinds,
    /// `floor(p/100)` for sparse ones.
    pub fn affected(&self, dim: usize) -> usize {
        match self {
            DgpKind::DenseMean | DgpKind::DenseDiagCov | DgpKind::DenseDist => dim / 5,
            DgpKind::SparseMean | DgpKind::SparseDiagCov | DgpKind::SparseDist => dim / 100,
            _ => dim,
        }
    }
}

impl std::str::FromStr for DgpKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        DgpKind::ALL
            .into_iter()
            .find(|k| k.as_str() == s)
            .ok_or_else(|| Error::InvalidConfig(format!("unknown dgp '{s}'")))
    }
}

/// A data-generating process. Rows after each change-point switch law:
/// mean kinds add another copy of the shift vector at every change, the
/// other kinds alternate between the pre- and post-change laws.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DgpSpec {
    pub kind: DgpKind,
    pub len: usize,
    pub dim: usize,
    /// Last index of each pre-change segment, strictly increasing.
    pub change_points: Vec<usize>,
    /// Scales the departure from the pre-change law; 0 gives no change.
    pub magnitude: f64,
}

impl DgpSpec {
    /// Null kinds get no change; change kinds get one at `floor(T/2)`.
    pub fn single(kind: DgpKind, len: usize, dim: usize) -> Self {
        let change_points = if kind.is_null() {
            vec![]
        } else {
            vec![len / 2]
        };
        Self {
            kind,
            len,
            dim,
            change_points,
            magnitude: 1.0,
        }
    }

    pub fn with_change_points(mut self, cps: Vec<usize>) -> Self {
        self.change_points = cps;
        self
    }

    pub fn with_magnitude(mut self, magnitude: f64) -> Self {
        self.magnitude = magnitude;
        self
    }

    pub fn validate(&self) -> Result<()> {
        if self.len == 0 || self.dim == 0 {
            return Err(Error::InvalidConfig("T and p must be positive".into()));
        }
        if self.kind.is_null() && !self.change_points.is_empty() {
            return Err(Error::InvalidConfig(format!(
                "{} has no change-points",
                self.kind.as_str()
            )));
        }
        if !self.change_points.windows(2).all(|w| w[0] < w[1])
            || self.change_points.iter().any(|&c| c == 0 || c >= self.len)
        {
            return Err(Error::InvalidChangePoints(format!(
                "{:?} must be strictly increasing inside [1, {})",
                self.change_points, self.len
            )));
        }
        if !(self.magnitude >= 0.0 && self.magnitude.is_finite()) {
            return Err(Error::InvalidConfig("magnitude must be >= 0".into()));
        }
        // Otherwise the "change" would silently be a null process.
        if !self.kind.is_null() && self.kind.affected(self.dim) == 0 {
            return Err(Error::InvalidConfig(format!(
                "{} changes no coordinate at p={}",
                self.kind.as_str(),
                self.dim
            )));
        }
        Ok(())
    }
}

/// Lower-triangular `L` with `L L' = sigma` (row-major `p x p`).
pub fn cholesky(sigma: &[f64], p: usize) -> Result<Vec<f64>> {
    let mut l = vec![0.0; p * p];
    for i in 0..p {
        for j in 0..=i {
            let s: f64 = (0..j).map(|k| l[i * p + k] * l[j * p + k]).sum();
            if i == j {
                let d = sigma[i * p + i] - s;
                if d <= 0.0 {
                    return Err(Error::InvalidConfig(
                        "covariance not positive definite".into(),
                    ));
                }
                l[i * p + i] = d.sqrt();
            } else {
                l[i * p + j] = (sigma[i * p + j] - s) / l[j * p + j];
            }
        }
    }
    Ok(l)
}

fn banded(p: usize, rho: f64) -> Vec<f64> {
    let mut s = vec![0.0; p * p];
    for i in 0..p {
        for j in 0..p {
            s[i * p + j] = rho.powi((i as i32 - j as i32).abs());
        }
    }
    s
}

fn equicorrelated(p: usize, rho: f64) -> Vec<f64> {
    let mut s = vec![rho; p * p];
    for i in 0..p {
        s[i * p + i] = 1.0;
    }
    s
}

fn apply_lower(l: &[f64], z: &[f64], out: &mut [f64]) {
    let p = z.len();
    for i in 0..p {
        out[i] = l[i * p..i * p + i + 1]
            .iter()
            .zip(&z[..=i])
            .map(|(a, b)| a * b)
            .sum();
    }
}

/// Draws a series from `spec`; deterministic under `seed`.
pub fn generate(spec: &DgpSpec, seed: u64) -> Result<Series> {
    spec.validate()?;
    let p = spec.dim;
    let q = spec.kind.affected(p);
    if q == 0 {
        log::warn!(
            "{} with p={p} affects no coordinates; the series has no change",
            spec.kind.as_str()
        );
    }
    let mag = spec.magnitude;
    let mut rng = stream(seed, "dgp", 0);

    let chol = match spec.kind {
        DgpKind::BandedNull => Some(cholesky(&banded(p, 0.8), p)?),
        DgpKind::BandedCov => Some(cholesky(&banded(p, 0.8 * mag), p)?),
        DgpKind::DenseCov => Some(cholesky(&equicorrelated(p, 0.1 * mag), p)?),
        _ => None,
    };
    let shift = if q > 0 { 2.0 / (q as f64).sqrt() } else { 0.0 };
    let sd_post = if q > 0 {
        (1.0 + mag * 5.0 / (q as f64).sqrt()).sqrt()
    } else {
        1.0
    };

    let mut values = Vec::with_capacity(spec.len * p);
    let mut z = vec![0.0; p];
    let mut row = vec![0.0; p];
    for t in 1..=spec.len {
        let segment = spec.change_points.iter().filter(|&&c| c < t).count();
        let post = segment % 2 == 1;
        for v in z.iter_mut() {
            *v = rng.sample(StandardNormal);
        }
        match spec.kind {
            DgpKind::StandardNull => row.copy_from_slice(&z),
            DgpKind::BandedNull => apply_lower(chol.as_deref().unwrap(), &z, &mut row),
            DgpKind::ExponentialNull => {
                for v in row.iter_mut() {
                    *v = rng.sample(Exp1);
                }
            }
            DgpKind::DenseMean | DgpKind::SparseMean => {
                row.copy_from_slice(&z);
                for v in row.iter_mut().take(q) {
                    *v += segment as f64 * mag * shift;
                }
            }
            DgpKind::DenseCov | DgpKind::BandedCov => {
                if post {
                    apply_lower(chol.as_deref().unwrap(), &z, &mut row);
                } else {
                    row.copy_from_slice(&z);
                }
            }
            DgpKind::DenseDiagCov | DgpKind::SparseDiagCov => {
                row.copy_from_slice(&z);
                if post {
                    for v in row.iter_mut().take(q) {
                        *v *= sd_post;
                    }
                }
            }
            DgpKind::DenseDist | DgpKind::SparseDist => {
                row.copy_from_slice(&z);
                if post && mag > 0.0 {
                    for v in row.iter_mut().take(q) {
                        let e: f64 = rng.sample(Exp1);
                        *v = e - 1.0;
                    }
                }
            }
        }
        values.extend_from_slice(&row);
    }
    Series::new(values, spec.len, p)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn column(s: &Series, j: usize, range: std::ops::RangeInclusive<usize>) -> Vec<f64> {
        range.map(|t| s.at(t)[j]).collect()
    }

    fn mean(v: &[f64]) -> f64 {
        v.iter().sum::<f64>() / v.len() as f64
    }

    fn moment(v: &[f64], k: i32) -> f64 {
        let m = mean(v);
        v.iter().map(|x| (x - m).powi(k)).sum::<f64>() / v.len() as f64
    }

    #[test]
    fn standard_null_means_near_zero() {
        let s = generate(&DgpSpec::single(DgpKind::StandardNull, 1000, 10), 1).unwrap();
        let band = 4.0 / 1000f64.sqrt();
        for j in 0..10 {
            assert!(mean(&column(&s, j, 1..=1000)).abs() < band);
        }
    }

    #[test]
    fn dense_diag_cov_post_variance() {
        let spec = DgpSpec::single(DgpKind::DenseDiagCov, 4000, 500);
        let s = generate(&spec, 2).unwrap();
        // 1 + 5 / sqrt(100) = 1.5 on the first 100 coordinates
        let mut pooled = Vec::new();
        for j in 0..100 {
            pooled.extend(column(&s, j, 2001..=4000));
        }
        assert!((moment(&pooled, 2) - 1.5).abs() < 0.02);
        let untouched = column(&s, 200, 2001..=4000);
        assert!((moment(&untouched, 2) - 1.0).abs() < 0.1);
    }

    #[test]
    fn dense_dist_post_moments() {
        // Exp(1) - 1: mean 0, variance 1, skewness 2
        let spec = DgpSpec::single(DgpKind::DenseDist, 2002, 500);
        let s = generate(&spec, 3).unwrap();
        let mut pooled = Vec::new();
        for j in 0..100 {
            pooled.extend(column(&s, j, 1002..=2002));
        }
        assert!(pooled.len() >= 100_000);
        assert!(mean(&pooled).abs() < 0.01);
        let var = moment(&pooled, 2);
        assert!((var - 1.0).abs() < 0.03);
        let skew = moment(&pooled, 3) / var.powf(1.5);
        assert!((skew - 2.0).abs() < 0.15, "skew {skew}");
    }

    #[test]
    fn banded_null_covariance() {
        let p = 5;
        let n = 20_000;
        let s = generate(&DgpSpec::single(DgpKind::BandedNull, n, p), 4).unwrap();
        let mut frob = 0.0;
        for i in 0..p {
            for j in 0..p {
                let c: f64 = s.rows().map(|r| r[i] * r[j]).sum::<f64>() / n as f64;
                frob += (c - 0.8f64.powi((i as i32 - j as i32).abs())).powi(2);
            }
        }
        assert!(
            frob.sqrt() < 6.0 * p as f64 / (n as f64).sqrt(),
            "{}",
            frob.sqrt()
        );
    }

    #[test]
    fn dense_mean_shift_size() {
        let spec = DgpSpec::single(DgpKind::DenseMean, 4000, 50);
        let s = generate(&spec, 5).unwrap();
        // mu_i = 2 / sqrt(10) on the first 10 coordinates
        let post = mean(&column(&s, 0, 2001..=4000));
        assert!((post - 2.0 / 10f64.sqrt()).abs() < 0.1);
        assert!(mean(&column(&s, 20, 2001..=4000)).abs() < 0.1);
    }

    #[test]
    fn change_must_touch_a_coordinate() {
        assert!(DgpSpec::single(DgpKind::SparseMean, 200, 99)
            .validate()
            .is_err());
        assert!(DgpSpec::single(DgpKind::SparseMean, 200, 100)
            .validate()
            .is_ok());
        assert!(DgpSpec::single(DgpKind::DenseDist, 200, 4)
            .validate()
            .is_err());
        assert!(DgpSpec::single(DgpKind::BandedCov, 200, 2)
            .validate()
            .is_ok());
    }

    #[test]
    fn zero_magnitude_is_null_and_seed_is_reproducible() {
        let spec = DgpSpec::single(DgpKind::DenseMean, 200, 10).with_magnitude(0.0);
        let a = generate(&spec, 9).unwrap();
        let null = generate(&DgpSpec::single(DgpKind::StandardNull, 200, 10), 9).unwrap();
        assert_eq!(a, null);
        assert_eq!(a, generate(&spec, 9).unwrap());
    }

    #[test]
    fn cholesky_reconstructs() {
        let p = 6;
        let sigma = banded(p, 0.8);
        let l = cholesky(&sigma, p).unwrap();
        for i in 0..p {
            for j in 0..p {
                let v: f64 = (0..p).map(|k| l[i * p + k] * l[j * p + k]).sum();
                assert!((v - sigma[i * p + j]).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn invalid_change_points_rejected() {
        let spec = DgpSpec::single(DgpKind::DenseMean, 100, 5).with_change_points(vec![60, 40]);
        assert!(generate(&spec, 0).is_err());
        let null = DgpSpec::single(DgpKind::StandardNull, 100, 5).with_change_points(vec![50]);
        assert!(generate(&null, 0).is_err());
    }
}
