//! Baseline binarizers: global Otsu labeling, iterative tri-class
//! thresholding (ITTT), and Sauvola local thresholding.

use serde::{Deserialize, Serialize};

use crate::histogram::{build_histogram, range_stats, BinRange};
use crate::imaging::{GrayImage, Method, SegMask, LABEL_BACKGROUND, LABEL_CRACK};
use crate::otsu::otsu_threshold;
use crate::recursive::apply_threshold_as;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct IttConfig {
    /// Stop when the threshold moves by less than this between iterations.
    pub epsilon: u16,
    pub max_iters: u32,
}

impl Default for IttConfig {
    fn default() -> Self {
        Self {
            epsilon: 1,
            max_iters: 64,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SauvolaConfig {
    /// Window side length in pixels; odd.
    pub window: u32,
    /// Sensitivity.
    pub k: f64,
    /// Dynamic range of the standard deviation.
    pub r_dyn: f64,
}

impl Default for SauvolaConfig {
    fn default() -> Self {
        Self {
            window: 31,
            k: 0.5,
            r_dyn: 128.0,
        }
    }
}

fn all_background(img: &GrayImage, method: Method) -> SegMask {
    let mut mask = SegMask::new(
        img.width(),
        img.height(),
        vec![LABEL_BACKGROUND; img.pixels().len()],
        method,
        None,
    );
    mask.degenerate = true;
    mask
}

/// Global Otsu segmentation of the whole image.
///
/// Constant images cannot be split; they yield an all-background mask with
/// the `degenerate` flag set.
pub fn otsu_segment(img: &GrayImage) -> SegMask {
    let h = build_histogram(img);
    match otsu_threshold(&h, BinRange::full()) {
        Ok(r) => apply_threshold_as(img, r.threshold, Method::Otsu),
        Err(_) => all_background(img, Method::Otsu),
    }
}

/// Iterative tri-class thresholding.
///
/// Each pass thresholds the still-undetermined band by Otsu, finalizes
/// pixels below the dark-class mean as foreground and above the bright-class
/// mean as background, and recurses on the middle band. Bands nest, so the
/// final decision reduces to a single intensity threshold: the last Otsu
/// value once the threshold moves by less than `epsilon` or the band can no
/// longer be split.
pub fn ittt_segment(img: &GrayImage, cfg: &IttConfig) -> SegMask {
    let h = build_histogram(img);
    let mut region = BinRange::full();
    // 256 marks "no previous threshold"; the whole histogram lies below it
    let mut prev_t: u16 = 256;
    let mut last_t: Option<u16> = None;
    for _ in 0..cfg.max_iters.max(1) {
        let t = match otsu_threshold(&h, region) {
            Ok(r) => r.threshold,
            Err(_) => break, // band degenerate: last t classifies it
        };
        last_t = Some(t);
        if prev_t.abs_diff(t) < cfg.epsilon {
            break;
        }
        let dark = range_stats(&h, BinRange::new(region.lo, t));
        let bright = range_stats(&h, BinRange::new(t, region.hi));
        let mu_fg = dark.mean.expect("dark class populated");
        let mu_bg = bright.mean.expect("bright class populated");
        // middle band [mu_fg, mu_bg] becomes the new undetermined region
        let lo = (mu_fg.ceil() as u16).max(region.lo);
        let hi = (mu_bg.floor() as u16 + 1).min(region.hi);
        if lo >= hi {
            break;
        }
        prev_t = t;
        region = BinRange::new(lo, hi);
    }
    match last_t {
        Some(t) => apply_threshold_as(img, t, Method::Ittt),
        None => all_background(img, Method::Ittt),
    }
}

/// Sauvola local thresholding via summed-area tables.
///
/// The per-pixel threshold is `m (1 + k (s / R − 1))` with `m` and `s` the
/// mean and standard deviation over the window, clamped to the image
/// bounds at the edges. Pixels below their local threshold become crack.
pub fn sauvola_segment(img: &GrayImage, cfg: &SauvolaConfig) -> SegMask {
    assert!(cfg.window >= 3 && cfg.window % 2 == 1, "window must be odd and >= 3");
    assert!(cfg.k > 0.0 && cfg.k <= 1.0, "k must be in (0, 1]");
    let (w, h) = (img.width() as usize, img.height() as usize);
    let px = img.pixels();

    // integral images with a zero top row and left column
    let stride = w + 1;
    let mut sum = vec![0u64; stride * (h + 1)];
    let mut sq = vec![0u64; stride * (h + 1)];
    for y in 0..h {
        for x in 0..w {
            let v = px[y * w + x] as u64;
            let i = (y + 1) * stride + (x + 1);
            sum[i] = v + sum[i - 1] + sum[i - stride] - sum[i - stride - 1];
            sq[i] = v * v + sq[i - 1] + sq[i - stride] - sq[i - stride - 1];
        }
    }

    let half = (cfg.window / 2) as usize;
    let mut labels = vec![LABEL_BACKGROUND; w * h];
    for y in 0..h {
        let y0 = y.saturating_sub(half);
        let y1 = (y + half).min(h - 1);
        for x in 0..w {
            let x0 = x.saturating_sub(half);
            let x1 = (x + half).min(w - 1);
            let area = ((x1 - x0 + 1) * (y1 - y0 + 1)) as f64;
            let rect = |t: &[u64]| {
                t[(y1 + 1) * stride + x1 + 1] + t[y0 * stride + x0]
                    - t[y0 * stride + x1 + 1]
                    - t[(y1 + 1) * stride + x0]
            };
            let m = rect(&sum) as f64 / area;
            let var = (rect(&sq) as f64 / area - m * m).max(0.0);
            let t = m * (1.0 + cfg.k * (var.sqrt() / cfg.r_dyn - 1.0));
            if (px[y * w + x] as f64) < t {
                labels[y * w + x] = LABEL_CRACK;
            }
        }
    }
    SegMask::new(img.width(), img.height(), labels, Method::Sauvola, None)
}
