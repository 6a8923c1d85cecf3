//! Episode-level metrics: normalized map error, quality-percentile buckets,
//! and the paired sign test used to compare benchmark arms.

use crate::error::{Error, Result};
use crate::priors::ScoreMap;

use super::episode::EpisodeResult;

/// Root-mean-squared error between two maps after each is independently
/// min-max normalized to [0,1] (a constant map normalizes to all zeros).
/// The result lives in [0,1]; multiply by 100 for percentage display.
pub fn rmse(pred: &ScoreMap, gt: &ScoreMap) -> Result<f64> {
    if pred.side() != gt.side() {
        return Err(Error::Bounds(format!(
            "map sides differ: {} vs {}",
            pred.side(),
            gt.side()
        )));
    }
    let a = minmax_normalize(pred.values());
    let b = minmax_normalize(gt.values());
    Ok(rmse_core(&a, &b))
}

fn minmax_normalize(values: &[f64]) -> Vec<f64> {
    let min = values.iter().copied().fold(f64::INFINITY, f64::min);
    let max = values.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let span = max - min;
    if span > 0.0 {
        values.iter().map(|v| (v - min) / span).collect()
    } else {
        vec![0.0; values.len()]
    }
}

/// Plain RMSE of two equal-length slices (no normalization).
pub(crate) fn rmse_core(a: &[f64], b: &[f64]) -> f64 {
    debug_assert_eq!(a.len(), b.len());
    let mse: f64 = a
        .iter()
        .zip(b)
        .map(|(x, y)| (x - y) * (x - y))
        .sum::<f64>()
        / a.len() as f64;
    mse.sqrt()
}

/// Mean found-fraction over the episodes whose starting-map quality ranks
/// in the bottom `fraction` of the run.
#[derive(Debug, Clone, serde::Serialize, serde::Deserialize)]
pub struct Bucket {
    pub fraction: f64,
    pub count: usize,
    pub mean_found_fraction: f64,
}

#[derive(Debug, Clone, serde::Serialize, serde::Deserialize)]
pub struct PercentileBuckets {
    pub overall_mean_found: f64,
    pub buckets: Vec<Bucket>,
}

/// Sort episodes by starting-map quality (ascending, ties by episode id for
/// determinism) and aggregate the bottom ⌈f·N⌉ episodes for each fraction.
pub fn percentile_buckets(
    results: &[(f64, &EpisodeResult)],
    fractions: &[f64],
) -> Result<PercentileBuckets> {
    if results.is_empty() {
        return Err(Error::Degenerate(
            "percentile buckets need at least one episode".into(),
        ));
    }
    let mut sorted: Vec<&(f64, &EpisodeResult)> = results.iter().collect();
    sorted.sort_by(|a, b| {
        a.0.partial_cmp(&b.0)
            .expect("qualities are finite")
            .then_with(|| a.1.id.cmp(&b.1.id))
    });

    let mean_found = |slice: &[&(f64, &EpisodeResult)]| -> f64 {
        slice.iter().map(|(_, r)| r.found_fraction).sum::<f64>() / slice.len() as f64
    };

    let buckets = fractions
        .iter()
        .map(|&f| {
            if !(0.0..=1.0).contains(&f) {
                return Err(Error::Config(format!(
                    "percentile fraction {f} outside [0,1]"
                )));
            }
            let count = ((f * sorted.len() as f64).ceil() as usize).clamp(1, sorted.len());
            Ok(Bucket {
                fraction: f,
                count,
                mean_found_fraction: mean_found(&sorted[..count]),
            })
        })
        .collect::<Result<Vec<_>>>()?;

    Ok(PercentileBuckets {
        overall_mean_found: mean_found(&sorted),
        buckets,
    })
}

/// One-sided paired sign test: p = P(wins ≥ observed | win/lose equally
/// likely), ties dropped. Small p ⇒ the first arm beats the second more
/// often than chance explains.
#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct SignTest {
    pub wins: usize,
    pub losses: usize,
    pub ties: usize,
    pub p_one_sided: f64,
}

pub fn paired_sign_test(diffs: impl IntoIterator<Item = f64>) -> SignTest {
    let (mut wins, mut losses, mut ties) = (0usize, 0usize, 0usize);
    for d in diffs {
        if d > 0.0 {
            wins += 1;
        } else if d < 0.0 {
            losses += 1;
        } else {
            ties += 1;
        }
    }
    SignTest {
        wins,
        losses,
        ties,
        p_one_sided: binomial_upper_tail(wins, wins + losses),
    }
}

/// P(X ≥ k) for X ~ Binomial(m, 1/2), by iterating the pmf recurrence
/// pmf(i+1) = pmf(i)·(m−i)/(i+1) from pmf(0) = 2^−m. Exact enough for any
/// m this crate produces (pmf stays within normal f64 range for m ≤ ~1000).
fn binomial_upper_tail(k: usize, m: usize) -> f64 {
    if m == 0 {
        return 1.0;
    }
    let mut pmf = 0.5f64.powi(m as i32);
    let mut tail = if k == 0 { pmf } else { 0.0 };
    for i in 0..m {
        pmf *= (m - i) as f64 / (i + 1) as f64;
        if i + 1 >= k {
            tail += pmf;
        }
    }
    tail.min(1.0)
}
