//! Between-class-variance thresholding over histogram sub-ranges.
//!
//! The returned threshold `T` splits a range `[lo, hi)` into a dark class
//! `[lo, T)` and a bright class `[T, hi)`; the dark class is the foreground.
//! Ties on the criterion are broken toward the smallest `T`.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::histogram::{BinRange, Histogram};

/// Range holds fewer than two distinct populated bins, so no split exists.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Error)]
#[error("range holds fewer than two distinct populated bins")]
pub struct DegenerateRange;

/// Between-class criterion variant.
///
/// `ClassMean` is the classical criterion where the class terms are mean
/// intensities. `CumulativeSum` instead uses unnormalized cumulative sums
/// `Σ x·y(x)` for the class terms; it is kept for comparison only and is
/// not the default.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Criterion {
    #[default]
    ClassMean,
    CumulativeSum,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct OtsuResult {
    /// Foreground is intensity < threshold.
    pub threshold: u16,
    /// Criterion value at the threshold.
    pub sigma2: f64,
    pub omega0: f64,
    pub omega1: f64,
    pub mu0: f64,
    pub mu1: f64,
}

struct RangeSums {
    count: u64,
    weighted: u64,
}

fn range_sums(h: &Histogram, lo: u16, hi: u16) -> RangeSums {
    let mut count = 0u64;
    let mut weighted = 0u64;
    for x in lo..hi {
        let c = h.counts[x as usize];
        count += c;
        weighted += c * x as u64;
    }
    RangeSums { count, weighted }
}

// Both implementations evaluate the criterion through this exact expression
// from integer class sums, so a mathematical tie is a bitwise tie and the
// lowest-T tie-break agrees between them.
fn evaluate_split(
    criterion: Criterion,
    total: u64,
    cnt0: u64,
    sum0: u64,
    cnt1: u64,
    sum1: u64,
) -> OtsuResult {
    let n = total as f64;
    let omega0 = cnt0 as f64 / n;
    let omega1 = cnt1 as f64 / n;
    let mu0 = sum0 as f64 / cnt0 as f64;
    let mu1 = sum1 as f64 / cnt1 as f64;
    let diff = match criterion {
        Criterion::ClassMean => mu0 - mu1,
        Criterion::CumulativeSum => sum0 as f64 - sum1 as f64,
    };
    OtsuResult {
        threshold: 0,
        sigma2: omega0 * omega1 * diff * diff,
        omega0,
        omega1,
        mu0,
        mu1,
    }
}

/// Threshold maximizing the between-class variance over `[r.lo, r.hi)`,
/// computed with running class sums.
pub fn otsu_threshold(h: &Histogram, r: BinRange) -> Result<OtsuResult, DegenerateRange> {
    otsu_threshold_with(h, r, Criterion::ClassMean)
}

pub fn otsu_threshold_with(
    h: &Histogram,
    r: BinRange,
    criterion: Criterion,
) -> Result<OtsuResult, DegenerateRange> {
    if h.populated_bins(r) < 2 {
        return Err(DegenerateRange);
    }
    let whole = range_sums(h, r.lo, r.hi);
    let mut cnt0 = 0u64;
    let mut sum0 = 0u64;
    let mut best: Option<OtsuResult> = None;
    for t in r.lo + 1..r.hi {
        let c = h.counts[(t - 1) as usize];
        cnt0 += c;
        sum0 += c * (t - 1) as u64;
        let cnt1 = whole.count - cnt0;
        if cnt0 == 0 || cnt1 == 0 {
            continue;
        }
        let sum1 = whole.weighted - sum0;
        let mut candidate = evaluate_split(criterion, whole.count, cnt0, sum0, cnt1, sum1);
        candidate.threshold = t;
        // strictly greater keeps the smallest maximizing T
        if best.is_none_or(|b| candidate.sigma2 > b.sigma2) {
            best = Some(candidate);
        }
    }
    best.ok_or(DegenerateRange)
}

/// Reference oracle: evaluates the criterion from scratch at every
/// candidate split. Identical contract to [`otsu_threshold`].
pub fn otsu_bruteforce(h: &Histogram, r: BinRange) -> Result<OtsuResult, DegenerateRange> {
    otsu_bruteforce_with(h, r, Criterion::ClassMean)
}

pub fn otsu_bruteforce_with(
    h: &Histogram,
    r: BinRange,
    criterion: Criterion,
) -> Result<OtsuResult, DegenerateRange> {
    if h.populated_bins(r) < 2 {
        return Err(DegenerateRange);
    }
    let mut best: Option<OtsuResult> = None;
    for t in r.lo + 1..r.hi {
        let low = range_sums(h, r.lo, t);
        let high = range_sums(h, t, r.hi);
        if low.count == 0 || high.count == 0 {
            continue;
        }
        let mut candidate = evaluate_split(
            criterion,
            low.count + high.count,
            low.count,
            low.weighted,
            high.count,
            high.weighted,
        );
        candidate.threshold = t;
        if best.is_none_or(|b| candidate.sigma2 > b.sigma2) {
            best = Some(candidate);
        }
    }
    best.ok_or(DegenerateRange)
}
