//! Intensity histograms and class statistics over bin sub-ranges.

use serde::{Deserialize, Serialize};

use crate::imaging::GrayImage;

pub const BINS: usize = 256;

/// 256-bin pixel-count histogram.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Histogram {
    pub counts: Vec<u64>,
    pub total: u64,
}

impl Histogram {
    pub fn from_counts(counts: Vec<u64>) -> Self {
        assert_eq!(counts.len(), BINS);
        let total = counts.iter().sum();
        Self { counts, total }
    }

    /// Number of populated bins within `r`.
    pub fn populated_bins(&self, r: BinRange) -> usize {
        self.counts[r.lo as usize..r.hi as usize]
            .iter()
            .filter(|&&c| c > 0)
            .count()
    }
}

/// Half-open intensity range `[lo, hi)` over histogram bins.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct BinRange {
    pub lo: u16,
    pub hi: u16,
}

impl BinRange {
    pub fn new(lo: u16, hi: u16) -> Self {
        assert!(lo < hi && hi <= BINS as u16, "invalid bin range [{lo},{hi})");
        Self { lo, hi }
    }

    pub fn full() -> Self {
        Self { lo: 0, hi: BINS as u16 }
    }
}

/// Pixel count and mean intensity of a histogram sub-range.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RangeStats {
    pub pixel_count: u64,
    /// Absent when the range holds no pixels.
    pub mean: Option<f64>,
}

pub fn build_histogram(img: &GrayImage) -> Histogram {
    let mut counts = vec![0u64; BINS];
    for &p in img.pixels() {
        counts[p as usize] += 1;
    }
    Histogram {
        counts,
        total: img.pixels().len() as u64,
    }
}

/// Count and mean intensity over `[lo, hi)`.
///
/// Sums are accumulated in integers and divided once, so the mean is exact
/// up to a single rounding.
pub fn range_stats(h: &Histogram, r: BinRange) -> RangeStats {
    let mut count = 0u64;
    let mut weighted = 0u64;
    for x in r.lo..r.hi {
        let c = h.counts[x as usize];
        count += c;
        weighted += c * x as u64;
    }
    RangeStats {
        pixel_count: count,
        mean: (count > 0).then(|| weighted as f64 / count as f64),
    }
}
