//! Crack segmentation via recursive histogram thresholding.
//!
//! The core algorithm repeatedly re-applies Otsu's thresholding to the dark
//! tail of the intensity histogram until the interclass contrast between the
//! tail and its complement exceeds a stop level, producing a threshold that
//! isolates dark crack-like features even when they hold a tiny fraction of
//! the pixel mass. Three baseline binarizers (global Otsu, iterative
//! tri-class thresholding, Sauvola) and a reference-free Q quality score are
//! included, along with a batch benchmark harness and a synthetic fixture
//! generator.

pub mod baselines;
pub mod bench;
pub mod evaluation;
pub mod histogram;
pub mod imaging;
pub mod otsu;
pub mod recursive;
pub mod synth;

pub use baselines::{ittt_segment, otsu_segment, sauvola_segment, IttConfig, SauvolaConfig};
pub use evaluation::{gt_metrics, q_evaluate, GtMetrics, QReport};
pub use histogram::{build_histogram, BinRange, Histogram};
pub use imaging::{load_gray, mask_to_image, GrayImage, Method, SegMask};
pub use otsu::{otsu_bruteforce, otsu_threshold, OtsuResult};
pub use recursive::{apply_threshold, recursive_otsu, RecursiveOtsuConfig, StopReason, ThresholdTrace};
