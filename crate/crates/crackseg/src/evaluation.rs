//! Reference-free Q scoring of segmentation masks, plus standard
//! ground-truth metrics for synthetic fixtures. Lower Q is better.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::imaging::{GrayImage, SegMask, LABEL_BACKGROUND, LABEL_CRACK};

#[derive(Debug, Error)]
pub enum EvalError {
    #[error("dimension mismatch: {expected} vs {actual}")]
    DimensionMismatch { expected: String, actual: String },
}

/// How the per-class color error is measured.
///
/// `LiteralLabel` treats the segmented image as literally holding the class
/// ids 1 and 2, so the error of a class is the squared intensity distance of
/// its pixels to its label value. `ClassMean` is the classical variant that
/// measures deviation from the class's own mean intensity instead.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ColorError {
    #[default]
    LiteralLabel,
    ClassMean,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum LogBase {
    #[default]
    Ten,
    Natural,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct QConfig {
    pub color_error: ColorError,
    pub log_base: LogBase,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ClassStats {
    pub label: u8,
    /// Pixel count of the class.
    pub a_n: u64,
    /// Color error of the class.
    pub e2_n: f64,
    /// Number of classes sharing this pixel count.
    pub same_area_count: u32,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct QReport {
    pub q: f64,
    pub n_c: u32,
    pub per_class: Vec<ClassStats>,
}

pub fn q_evaluate(original: &GrayImage, mask: &SegMask) -> Result<QReport, EvalError> {
    q_evaluate_with(original, mask, QConfig::default())
}

pub fn q_evaluate_with(
    original: &GrayImage,
    mask: &SegMask,
    cfg: QConfig,
) -> Result<QReport, EvalError> {
    if original.width() != mask.width() || original.height() != mask.height() {
        return Err(EvalError::DimensionMismatch {
            expected: format!("{}x{}", original.width(), original.height()),
            actual: format!("{}x{}", mask.width(), mask.height()),
        });
    }
    let area = original.pixels().len() as u64;

    // per-label integer accumulators; exact up to the final division
    let mut count = [0u64; 2];
    let mut sum = [0u64; 2];
    let mut sq_err = [0u64; 2]; // against the literal label value
    let mut sq_sum = [0u64; 2];
    for (&p, &l) in original.pixels().iter().zip(mask.labels()) {
        let i = (l - LABEL_BACKGROUND) as usize;
        let p = p as u64;
        count[i] += 1;
        sum[i] += p;
        sq_sum[i] += p * p;
        let d = p as i64 - l as i64;
        sq_err[i] += (d * d) as u64;
    }

    let log = |v: f64| match cfg.log_base {
        LogBase::Ten => v.log10(),
        LogBase::Natural => v.ln(),
    };

    let classes: Vec<(u8, usize)> = [(LABEL_BACKGROUND, 0), (LABEL_CRACK, 1)]
        .into_iter()
        .filter(|&(_, i)| count[i] > 0)
        .collect();
    let n_c = classes.len() as u32;

    let mut per_class = Vec::with_capacity(classes.len());
    let mut total_term = 0.0f64;
    for &(label, i) in &classes {
        let a_n = count[i];
        let e2_n = match cfg.color_error {
            ColorError::LiteralLabel => sq_err[i] as f64,
            ColorError::ClassMean => {
                // sum of squared deviations from the class mean
                sq_sum[i] as f64 - (sum[i] as f64) * (sum[i] as f64) / a_n as f64
            }
        };
        let same_area_count = classes
            .iter()
            .filter(|&&(_, j)| count[j] == a_n)
            .count() as u32;
        total_term += e2_n / (1.0 + log(a_n as f64))
            + (same_area_count as f64 / a_n as f64).powi(2);
        per_class.push(ClassStats {
            label,
            a_n,
            e2_n,
            same_area_count,
        });
    }

    let q = (n_c as f64).sqrt() * total_term / (10_000.0 * area as f64);
    Ok(QReport { q, n_c, per_class })
}

/// Header matching [`QReport::csv_row`].
pub const Q_CSV_HEADER: &str = "image,method,q,n_c,a_1,a_2,e2_1,e2_2";

impl QReport {
    /// One CSV row per scored mask; class columns are empty when the class
    /// is absent.
    pub fn csv_row(&self, image: &str, method: crate::imaging::Method) -> String {
        let class = |label: u8| self.per_class.iter().find(|c| c.label == label);
        let area = |label: u8| class(label).map_or(String::new(), |c| c.a_n.to_string());
        let err = |label: u8| class(label).map_or(String::new(), |c| format!("{:.6e}", c.e2_n));
        format!(
            "{image},{method},{:.12e},{},{},{},{},{}",
            self.q,
            self.n_c,
            area(LABEL_BACKGROUND),
            area(LABEL_CRACK),
            err(LABEL_BACKGROUND),
            err(LABEL_CRACK)
        )
    }
}

/// Ground-truth comparison with crack (label 2) as the positive class.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GtMetrics {
    pub precision: Option<f64>,
    pub recall: Option<f64>,
    pub f1: Option<f64>,
    pub iou: Option<f64>,
    /// Set when some value is absent (no predicted or true positives).
    pub note: Option<String>,
}

pub fn gt_metrics(mask: &SegMask, truth: &SegMask) -> Result<GtMetrics, EvalError> {
    if mask.width() != truth.width() || mask.height() != truth.height() {
        return Err(EvalError::DimensionMismatch {
            expected: format!("{}x{}", truth.width(), truth.height()),
            actual: format!("{}x{}", mask.width(), mask.height()),
        });
    }
    let mut tp = 0u64;
    let mut fp = 0u64;
    let mut fn_ = 0u64;
    for (&m, &t) in mask.labels().iter().zip(truth.labels()) {
        match (m == LABEL_CRACK, t == LABEL_CRACK) {
            (true, true) => tp += 1,
            (true, false) => fp += 1,
            (false, true) => fn_ += 1,
            (false, false) => {}
        }
    }
    let ratio = |num: u64, den: u64| (den > 0).then(|| num as f64 / den as f64);
    let precision = ratio(tp, tp + fp);
    let recall = ratio(tp, tp + fn_);
    let f1 = match (precision, recall) {
        (Some(p), Some(r)) if p + r > 0.0 => Some(2.0 * p * r / (p + r)),
        (Some(_), Some(_)) => Some(0.0),
        _ => None,
    };
    let iou = ratio(tp, tp + fp + fn_);
    let mut note = None;
    if precision.is_none() {
        note = Some("no predicted positives".to_string());
    } else if recall.is_none() {
        note = Some("no true positives in ground truth".to_string());
    }
    Ok(GtMetrics {
        precision,
        recall,
        f1,
        iou,
        note,
    })
}
