//! Recursive dark-tail thresholding: the ultimate-threshold search.
//!
//! Each iteration runs Otsu on the current region of interest `[0, T^{k-1})`,
//! splits it at `T^k` into a new dark tail and its complement, and measures
//! the interclass contrast `|μ_roi − μ_b| / (μ_roi + μ_b)` between the two.
//! The loop stops the first time the contrast exceeds the stop level `C_s`;
//! the threshold of that iteration is the ultimate threshold.

use serde::{Deserialize, Serialize};

use crate::histogram::{range_stats, BinRange, Histogram};
use crate::imaging::{GrayImage, Method, SegMask, LABEL_BACKGROUND, LABEL_CRACK};
use crate::otsu::otsu_threshold;

/// One iteration of the recursion.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RoiState {
    pub k: u32,
    /// Upper bound of the region the iteration ran on (256 for the first).
    pub t_prev: u16,
    /// Threshold produced by this iteration.
    pub t_k: u16,
    /// Mean intensity of the dark tail `[0, t_k)`.
    pub mu_roi: f64,
    /// Mean intensity of the complement `[t_k, t_prev)`.
    pub mu_b: f64,
    /// Interclass contrast of this split, in [0, 1].
    pub contrast: f64,
    pub roi_pixels: u64,
    pub bg_pixels: u64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RecursiveOtsuConfig {
    /// Stop level for the interclass contrast.
    pub c_s: f64,
    /// Safety cap on iterations.
    pub max_iters: u32,
}

impl Default for RecursiveOtsuConfig {
    fn default() -> Self {
        Self {
            c_s: 0.25,
            max_iters: 64,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum StopReason {
    ContrastExceeded,
    DegenerateRoi,
    MaxIters,
}

/// Full record of the recursion: every iteration plus the final threshold.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ThresholdTrace {
    pub states: Vec<RoiState>,
    /// Ultimate threshold: intensities below it are crack.
    pub t_u: u16,
    pub stop_reason: StopReason,
}

/// Runs the recursive threshold search on a histogram.
///
/// When the region of interest can no longer be split (fewer than two
/// populated bins) the search stops with the last valid threshold. A
/// histogram that is degenerate from the start yields the single populated
/// intensity plus one, so the lone bin ends up as foreground.
pub fn recursive_otsu(h: &Histogram, cfg: &RecursiveOtsuConfig) -> ThresholdTrace {
    let mut states = Vec::new();
    let mut t_prev: u16 = 256;
    let mut k = 0u32;
    loop {
        k += 1;
        let roi = BinRange::new(0, t_prev);
        let result = match otsu_threshold(h, roi) {
            Ok(r) => r,
            Err(_) => {
                let t_u = if states.is_empty() {
                    // whole histogram has a single populated bin
                    let lone = h.counts.iter().position(|&c| c > 0).unwrap_or(0) as u16;
                    lone + 1
                } else {
                    t_prev
                };
                return ThresholdTrace {
                    states,
                    t_u,
                    stop_reason: StopReason::DegenerateRoi,
                };
            }
        };
        let t_k = result.threshold;
        let dark = range_stats(h, BinRange::new(0, t_k));
        let bright = range_stats(h, BinRange::new(t_k, t_prev));
        // both classes are populated: otsu_threshold guarantees nonempty sides
        let mu_roi = dark.mean.expect("dark class populated");
        let mu_b = bright.mean.expect("bright class populated");
        let contrast = (mu_roi - mu_b).abs() / (mu_roi + mu_b);
        states.push(RoiState {
            k,
            t_prev,
            t_k,
            mu_roi,
            mu_b,
            contrast,
            roi_pixels: dark.pixel_count,
            bg_pixels: bright.pixel_count,
        });
        if contrast > cfg.c_s {
            return ThresholdTrace {
                states,
                t_u: t_k,
                stop_reason: StopReason::ContrastExceeded,
            };
        }
        if k >= cfg.max_iters {
            return ThresholdTrace {
                states,
                t_u: t_k,
                stop_reason: StopReason::MaxIters,
            };
        }
        t_prev = t_k;
    }
}

/// Labels intensities below `t_u` as crack, the rest as background.
pub fn apply_threshold(img: &GrayImage, t_u: u16) -> SegMask {
    apply_threshold_as(img, t_u, Method::RecursiveOtsu)
}

pub(crate) fn apply_threshold_as(img: &GrayImage, t_u: u16, method: Method) -> SegMask {
    let labels = img
        .pixels()
        .iter()
        .map(|&p| {
            if (p as u16) < t_u {
                LABEL_CRACK
            } else {
                LABEL_BACKGROUND
            }
        })
        .collect();
    SegMask::new(img.width(), img.height(), labels, method, Some(t_u))
}
