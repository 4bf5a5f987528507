//! Pairwise statistics over per-bug metric vectors: Kendall's τ-b, the paired
//! Wilcoxon signed-rank test and Cliff's δ.

use std::cmp::Ordering;

use serde::Serialize;
use statrs::distribution::{ContinuousCDF, Normal};

use crate::error::{Error, Result};

/// Two metric vectors over the same bugs, in the same order.
#[derive(Debug, Clone, PartialEq)]
pub struct PairedVectors {
    pub bug_ids: Vec<String>,
    pub values_a: Vec<f64>,
    pub values_b: Vec<f64>,
}

impl PairedVectors {
    pub fn new(bug_ids: Vec<String>, values_a: Vec<f64>, values_b: Vec<f64>) -> Result<Self> {
        if values_a.len() != values_b.len() || bug_ids.len() != values_a.len() {
            return Err(Error::InvalidSample(format!(
                "length mismatch: {} ids, {} and {} values",
                bug_ids.len(),
                values_a.len(),
                values_b.len()
            )));
        }
        if values_a.is_empty() {
            return Err(Error::InvalidSample("empty vectors".into()));
        }
        if values_a.iter().chain(&values_b).any(|v| !v.is_finite()) {
            return Err(Error::InvalidSample("non-finite value".into()));
        }
        Ok(Self {
            bug_ids,
            values_a,
            values_b,
        })
    }

    /// Vectors with positional ids, for callers that do not track bugs.
    pub fn unlabeled(values_a: Vec<f64>, values_b: Vec<f64>) -> Result<Self> {
        let ids = (0..values_a.len()).map(|i| i.to_string()).collect();
        Self::new(ids, values_a, values_b)
    }

    pub fn len(&self) -> usize {
        self.values_a.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values_a.is_empty()
    }

    pub fn swapped(&self) -> Self {
        Self {
            bug_ids: self.bug_ids.clone(),
            values_a: self.values_b.clone(),
            values_b: self.values_a.clone(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum CorrelationBand {
    Negligible,
    Weak,
    Medium,
    Strong,
}

pub fn correlation_band(tau: f64) -> CorrelationBand {
    let t = tau.abs();
    if t <= 0.3 {
        CorrelationBand::Negligible
    } else if t <= 0.5 {
        CorrelationBand::Weak
    } else if t <= 0.7 {
        CorrelationBand::Medium
    } else {
        CorrelationBand::Strong
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum EffectBand {
    Negligible,
    Small,
    Medium,
    Large,
}

pub fn effect_band(delta: f64) -> EffectBand {
    let d = delta.abs();
    if d < 0.147 {
        EffectBand::Negligible
    } else if d < 0.33 {
        EffectBand::Small
    } else if d < 0.474 {
        EffectBand::Medium
    } else {
        EffectBand::Large
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Tau {
    pub tau: f64,
    pub band: CorrelationBand,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Delta {
    pub delta: f64,
    pub band: EffectBand,
}

/// Sum of `t(t-1)/2` over runs of equal adjacent elements.
fn tied_pairs<T>(sorted: &[T], eq: impl Fn(&T, &T) -> bool) -> u64 {
    let mut total = 0u64;
    let mut run = 1u64;
    for w in sorted.windows(2) {
        if eq(&w[0], &w[1]) {
            run += 1;
        } else {
            total += run * (run - 1) / 2;
            run = 1;
        }
    }
    total + run * (run - 1) / 2
}

/// Stable merge sort of `v` returning the number of inversions removed.
fn merge_sort_count(v: &mut [f64], buf: &mut Vec<f64>) -> u64 {
    let n = v.len();
    if n < 2 {
        return 0;
    }
    let mid = n / 2;
    let mut swaps = merge_sort_count(&mut v[..mid], buf) + merge_sort_count(&mut v[mid..], buf);
    buf.clear();
    let (mut i, mut j) = (0, mid);
    while i < mid && j < n {
        if v[j] < v[i] {
            swaps += (mid - i) as u64;
            buf.push(v[j]);
            j += 1;
        } else {
            buf.push(v[i]);
            i += 1;
        }
    }
    buf.extend_from_slice(&v[i..mid]);
    buf.extend_from_slice(&v[j..n]);
    v.copy_from_slice(buf);
    swaps
}

/// Kendall's τ-b by Knight's O(n log n) algorithm.
pub fn kendall_tau(pair: &PairedVectors) -> Result<Tau> {
    let n = pair.len();
    if n < 2 {
        return Err(Error::InvalidSample("kendall tau needs at least 2 pairs".into()));
    }
    let mut points: Vec<(f64, f64)> = pair
        .values_a
        .iter()
        .copied()
        .zip(pair.values_b.iter().copied())
        .collect();
    points.sort_by(|x, y| x.0.total_cmp(&y.0).then(x.1.total_cmp(&y.1)));

    let n0 = (n as u64) * (n as u64 - 1) / 2;
    let ties_a = tied_pairs(&points, |x, y| x.0 == y.0);
    let ties_joint = tied_pairs(&points, |x, y| x == y);

    let mut b: Vec<f64> = points.iter().map(|p| p.1).collect();
    let mut buf = Vec::with_capacity(n);
    let discordant = merge_sort_count(&mut b, &mut buf);
    let ties_b = tied_pairs(&b, |x, y| x == y);

    if ties_a == n0 || ties_b == n0 {
        return Err(Error::UndefinedTau("a vector has no variation".into()));
    }
    let s = n0 as f64 - ties_a as f64 - ties_b as f64 + ties_joint as f64 - 2.0 * discordant as f64;
    let tau = s / (((n0 - ties_a) as f64) * ((n0 - ties_b) as f64)).sqrt();
    let tau = tau.clamp(-1.0, 1.0);
    Ok(Tau {
        tau,
        band: correlation_band(tau),
    })
}

/// Average 1-based ranks of `values`, ties sharing their mean rank, together
/// with the tie-correction term `sum(t^3 - t)`.
fn average_ranks(values: &[f64]) -> (Vec<f64>, f64) {
    let mut order: Vec<usize> = (0..values.len()).collect();
    order.sort_by(|&i, &j| values[i].total_cmp(&values[j]));
    let mut ranks = vec![0.0; values.len()];
    let mut correction = 0.0;
    let mut i = 0;
    while i < order.len() {
        let mut j = i + 1;
        while j < order.len() && values[order[j]] == values[order[i]] {
            j += 1;
        }
        let rank = (i + j + 1) as f64 / 2.0;
        for &k in &order[i..j] {
            ranks[k] = rank;
        }
        let t = (j - i) as f64;
        correction += t * t * t - t;
        i = j;
    }
    (ranks, correction)
}

pub const WILCOXON_MIN_NONZERO: usize = 5;

/// Two-sided p-value of the paired Wilcoxon signed-rank test.
///
/// Zero differences are discarded. The statistic uses average ranks for tied
/// magnitudes, the matching variance correction, and a 0.5 continuity
/// correction under the normal approximation.
pub fn wilcoxon_signed_rank(pair: &PairedVectors) -> Result<f64> {
    let diffs: Vec<f64> = pair
        .values_a
        .iter()
        .zip(&pair.values_b)
        .map(|(a, b)| a - b)
        .filter(|d| *d != 0.0)
        .collect();
    if diffs.is_empty() {
        return Err(Error::DegenerateTest("all differences are zero".into()));
    }
    let n = diffs.len();
    if n < WILCOXON_MIN_NONZERO {
        return Err(Error::InvalidSample(format!(
            "{n} nonzero differences, need at least {WILCOXON_MIN_NONZERO}"
        )));
    }
    let magnitudes: Vec<f64> = diffs.iter().map(|d| d.abs()).collect();
    let (ranks, correction) = average_ranks(&magnitudes);
    let w_plus: f64 = diffs
        .iter()
        .zip(&ranks)
        .filter(|(d, _)| **d > 0.0)
        .map(|(_, r)| r)
        .sum();
    let nf = n as f64;
    let mean = nf * (nf + 1.0) / 4.0;
    let variance = nf * (nf + 1.0) * (2.0 * nf + 1.0) / 24.0 - correction / 48.0;
    let z = ((w_plus - mean).abs() - 0.5).max(0.0) / variance.sqrt();
    let normal = Normal::standard();
    Ok((2.0 * normal.sf(z)).min(1.0))
}

/// Cliff's δ over all cross pairs of two samples (paired or not).
pub fn cliffs_delta_samples(a: &[f64], b: &[f64]) -> Result<Delta> {
    if a.is_empty() || b.is_empty() {
        return Err(Error::InvalidSample("cliff's delta needs nonempty samples".into()));
    }
    let mut sorted_b = b.to_vec();
    sorted_b.sort_by(f64::total_cmp);
    let mut dominance: i64 = 0;
    for &x in a {
        let below = sorted_b.partition_point(|&y| y.total_cmp(&x) == Ordering::Less);
        let not_above = sorted_b.partition_point(|&y| y.total_cmp(&x) != Ordering::Greater);
        let above = sorted_b.len() - not_above;
        dominance += below as i64 - above as i64;
    }
    let delta = dominance as f64 / (a.len() as f64 * b.len() as f64);
    Ok(Delta {
        delta,
        band: effect_band(delta),
    })
}

pub fn cliffs_delta(pair: &PairedVectors) -> Result<Delta> {
    cliffs_delta_samples(&pair.values_a, &pair.values_b)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn pv(a: &[f64], b: &[f64]) -> PairedVectors {
        PairedVectors::unlabeled(a.to_vec(), b.to_vec()).unwrap()
    }

    fn tau_b_oracle(a: &[f64], b: &[f64]) -> f64 {
        let (mut c, mut d, mut ta, mut tb) = (0.0f64, 0.0f64, 0.0f64, 0.0f64);
        for i in 0..a.len() {
            for j in i + 1..a.len() {
                let x = a[i].partial_cmp(&a[j]).unwrap();
                let y = b[i].partial_cmp(&b[j]).unwrap();
                if x.is_eq() && y.is_eq() {
                    continue;
                } else if x.is_eq() {
                    ta += 1.0;
                } else if y.is_eq() {
                    tb += 1.0;
                } else if x == y {
                    c += 1.0;
                } else {
                    d += 1.0;
                }
            }
        }
        (c - d) / ((c + d + ta) * (c + d + tb)).sqrt()
    }

    #[test]
    fn identical_and_reversed() {
        let a = [1.0, 2.0, 3.0, 4.0, 5.0];
        let t = kendall_tau(&pv(&a, &a)).unwrap();
        assert_eq!(t.tau, 1.0);
        assert_eq!(t.band, CorrelationBand::Strong);
        let rev: Vec<f64> = a.iter().rev().copied().collect();
        assert_eq!(kendall_tau(&pv(&a, &rev)).unwrap().tau, -1.0);
    }

    #[test]
    fn six_pairs_with_one_tie() {
        let a = [1.0, 2.0, 3.0, 4.0, 5.0, 6.0];
        let b = [2.0, 1.0, 4.0, 4.0, 6.0, 3.0];
        let got = kendall_tau(&pv(&a, &b)).unwrap().tau;
        assert!((got - tau_b_oracle(&a, &b)).abs() < 1e-12);
    }

    #[test]
    fn constant_vector_undefined() {
        let err = kendall_tau(&pv(&[1.0, 2.0, 3.0], &[5.0, 5.0, 5.0])).unwrap_err();
        assert!(matches!(err, Error::UndefinedTau(_)));
        assert!(kendall_tau(&pv(&[1.0], &[1.0])).is_err());
    }

    #[test]
    fn bands_at_boundaries() {
        assert_eq!(correlation_band(0.3), CorrelationBand::Negligible);
        assert_eq!(correlation_band(0.31), CorrelationBand::Weak);
        assert_eq!(correlation_band(-0.5), CorrelationBand::Weak);
        assert_eq!(correlation_band(0.7), CorrelationBand::Medium);
        assert_eq!(correlation_band(0.71), CorrelationBand::Strong);
        assert_eq!(effect_band(0.146), EffectBand::Negligible);
        assert_eq!(effect_band(0.147), EffectBand::Small);
        assert_eq!(effect_band(0.33), EffectBand::Medium);
        assert_eq!(effect_band(-0.474), EffectBand::Large);
    }

    #[test]
    fn wilcoxon_shift_is_significant() {
        let a: Vec<f64> = (0..20).map(|i| f64::from(i) * 0.37 % 3.0).collect();
        let b: Vec<f64> = a.iter().map(|x| x + 10.0).collect();
        assert!(wilcoxon_signed_rank(&pv(&a, &b)).unwrap() < 0.001);
    }

    #[test]
    fn wilcoxon_degenerate_and_small() {
        let a = [1.0, 2.0, 3.0, 4.0, 5.0, 6.0];
        assert!(matches!(wilcoxon_signed_rank(&pv(&a, &a)), Err(Error::DegenerateTest(_))));
        let b = [1.0, 2.0, 3.0, 4.0, 5.5, 6.5];
        assert!(matches!(wilcoxon_signed_rank(&pv(&a, &b)), Err(Error::InvalidSample(_))));
    }

    #[test]
    fn cliffs_extremes() {
        let d = cliffs_delta(&pv(&[5.0, 6.0, 7.0], &[1.0, 2.0, 3.0])).unwrap();
        assert_eq!((d.delta, d.band), (1.0, EffectBand::Large));
        let d = cliffs_delta(&pv(&[1.0, 2.0, 2.0], &[2.0, 1.0, 2.0])).unwrap();
        assert_eq!((d.delta, d.band), (0.0, EffectBand::Negligible));
    }

    #[test]
    fn paired_vectors_reject_bad_input() {
        assert!(PairedVectors::unlabeled(vec![], vec![]).is_err());
        assert!(PairedVectors::unlabeled(vec![1.0], vec![1.0, 2.0]).is_err());
        assert!(PairedVectors::unlabeled(vec![f64::NAN], vec![1.0]).is_err());
    }

    fn paired(max: usize) -> impl Strategy<Value = (Vec<f64>, Vec<f64>)> {
        (2..max).prop_flat_map(|n| {
            (
                prop::collection::vec((0i32..6).prop_map(f64::from), n),
                prop::collection::vec((0i32..6).prop_map(f64::from), n),
            )
        })
    }

    proptest! {
        #[test]
        fn knight_matches_pair_counting((a, b) in paired(40)) {
            match kendall_tau(&pv(&a, &b)) {
                Ok(t) => prop_assert!((t.tau - tau_b_oracle(&a, &b)).abs() < 1e-12),
                Err(Error::UndefinedTau(_)) => {
                    prop_assert!(a.iter().all(|x| *x == a[0]) || b.iter().all(|x| *x == b[0]));
                }
                Err(e) => prop_assert!(false, "{e}"),
            }
        }

        #[test]
        fn swapping_negates_tau_and_delta_keeps_p((a, b) in paired(30)) {
            let p = pv(&a, &b);
            let q = p.swapped();
            if let (Ok(x), Ok(y)) = (kendall_tau(&p), kendall_tau(&q)) {
                prop_assert!((x.tau - y.tau).abs() < 1e-12);
            }
            prop_assert!((cliffs_delta(&p).unwrap().delta + cliffs_delta(&q).unwrap().delta).abs() < 1e-12);
            if let (Ok(x), Ok(y)) = (wilcoxon_signed_rank(&p), wilcoxon_signed_rank(&q)) {
                prop_assert!((x - y).abs() < 1e-12);
                prop_assert!(x > 0.0 && x <= 1.0);
            }
        }

        #[test]
        fn invariant_under_joint_monotone_map((a, b) in paired(30)) {
            let f = |v: &Vec<f64>| v.iter().map(|x| x.powi(3) + 2.0 * x).collect::<Vec<f64>>();
            let (p, q) = (pv(&a, &b), pv(&f(&a), &f(&b)));
            if let (Ok(x), Ok(y)) = (kendall_tau(&p), kendall_tau(&q)) {
                prop_assert!((x.tau - y.tau).abs() < 1e-12);
            }
            prop_assert_eq!(cliffs_delta(&p).unwrap().delta, cliffs_delta(&q).unwrap().delta);
        }
    }
}
