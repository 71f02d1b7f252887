// SPDX-License-Identifier: MIT OR Apache-2.0

use crate::error::{Error, Result};

fn validate(cps: &[usize], len: usize) -> Result<()> {
    if !cps.windows(2).all(|w| w[0] < w[1]) || cps.iter().any(|&c| c == 0 || c >= len) {
        return Err(Error::InvalidChangePoints(format!(
            "{cps:?} must be strictly increasing inside [1, {len})"
        )));
    }
    Ok(())
}

/// Segment label of every time index `1..=len`.
pub fn segment_labels(cps: &[usize], len: usize) -> Vec<usize> {
    (1..=len)
        .map(|t| cps.iter().filter(|&&c| c < t).count())
        .collect()
}

fn choose2(n: u64) -> u128 {
    u128::from(n) * u128::from(n.saturating_sub(1)) / 2
}

/// Segment lengths induced by change-points `cps` on `[1, len]`.
fn segment_sizes(cps: &[usize], len: usize) -> Vec<u64> {
    let mut prev = 0;
    let mut out = Vec::with_capacity(cps.len() + 1);
    for &c in cps.iter().chain(std::iter::once(&len)) {
        out.push((c - prev) as u64);
        prev = c;
    }
    out
}

/// Adjusted Rand index between the segmentations of `[1, len]` induced by
/// two change-point sets. An empty estimate scores 0.
pub fn adjusted_rand_index(true_cps: &[usize], est_cps: &[usize], len: usize) -> Result<f64> {
    validate(true_cps, len)?;
    validate(est_cps, len)?;
    if est_cps.is_empty() {
        return Ok(0.0);
    }
    // Contingency cells are overlaps of consecutive segments; walk both
    // boundary lists in order.
    let mut cells: u128 = 0;
    let (mut i, mut j) = (0, 0);
    let mut start = 0;
    while start < len {
        let a_end = true_cps.get(i).copied().unwrap_or(len);
        let b_end = est_cps.get(j).copied().unwrap_or(len);
        let end = a_end.min(b_end);
        cells += choose2((end - start) as u64);
        start = end;
        if a_end == end {
            i += 1;
        }
        if b_end == end {
            j += 1;
        }
    }
    let rows: u128 = segment_sizes(true_cps, len).into_iter().map(choose2).sum();
    let cols: u128 = segment_sizes(est_cps, len).into_iter().map(choose2).sum();
    let total = choose2(len as u64) as f64;
    let expected = rows as f64 * cols as f64 / total;
    let max = 0.5 * (rows + cols) as f64;
    if max == expected {
        return Ok(if true_cps == est_cps { 1.0 } else { 0.0 });
    }
    Ok((cells as f64 - expected) / (max - expected))
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    /// Pair-counting over all index pairs.
    fn brute(a: &[usize], b: &[usize], len: usize) -> f64 {
        let la = segment_labels(a, len);
        let lb = segment_labels(b, len);
        let (mut n11, mut n10, mut n01, mut n00) = (0f64, 0f64, 0f64, 0f64);
        for x in 0..len {
            for y in x + 1..len {
                match (la[x] == la[y], lb[x] == lb[y]) {
                    (true, true) => n11 += 1.0,
                    (true, false) => n10 += 1.0,
                    (false, true) => n01 += 1.0,
                    (false, false) => n00 += 1.0,
                }
            }
        }
        let n = n11 + n10 + n01 + n00;
        let exp = (n11 + n10) * (n11 + n01) / n;
        let max = 0.5 * ((n11 + n10) + (n11 + n01));
        (n11 - exp) / (max - exp)
    }

    #[test]
    fn identical_partitions_score_one() {
        assert_eq!(adjusted_rand_index(&[500], &[500], 1000).unwrap(), 1.0);
    }

    #[test]
    fn empty_estimate_scores_zero() {
        assert_eq!(adjusted_rand_index(&[500], &[], 1000).unwrap(), 0.0);
    }

    #[test]
    fn off_by_one_matches_pair_count() {
        let v = adjusted_rand_index(&[5], &[6], 10).unwrap();
        let oracle = brute(&[5], &[6], 10);
        assert!((v - oracle).abs() < 1e-12);
        // frozen from the pair count: n11=16, n10=4, n01=5, N=45
        assert!((v - 0.597_014_925_373_134_3).abs() < 1e-12, "{v}");
    }

    #[test]
    fn invalid_change_points() {
        assert!(adjusted_rand_index(&[0], &[3], 10).is_err());
        assert!(adjusted_rand_index(&[3], &[10], 10).is_err());
        assert!(adjusted_rand_index(&[5, 3], &[3], 10).is_err());
    }

    fn cps_strategy(len: usize) -> impl Strategy<Value = Vec<usize>> {
        prop::collection::btree_set(1..len, 1..5).prop_map(|s| s.into_iter().collect())
    }

    proptest! {
        #[test]
        fn matches_brute_force_and_is_symmetric(
            a in cps_strategy(40),
            b in cps_strategy(40),
        ) {
            let x = adjusted_rand_index(&a, &b, 40).unwrap();
            let y = adjusted_rand_index(&b, &a, 40).unwrap();
            prop_assert!((x - y).abs() < 1e-12);
            prop_assert!((x - brute(&a, &b, 40)).abs() < 1e-12);
            prop_assert!((-1.0..=1.0).contains(&x));
            if a == b {
                prop_assert_eq!(x, 1.0);
            } else {
                prop_assert!(x < 1.0);
            }
        }
    }
}
