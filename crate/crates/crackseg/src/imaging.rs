//! Image decoding, grayscale conversion, and mask rendering.

use std::path::Path;

use image::{DynamicImage, ImageBuffer, Luma, Rgb};
use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Class id for background pixels in a [`SegMask`].
pub const LABEL_BACKGROUND: u8 = 1;
/// Class id for crack pixels in a [`SegMask`].
pub const LABEL_CRACK: u8 = 2;

#[derive(Debug, Error)]
pub enum ImagingError {
    #[error("failed to read {path}: {source}")]
    Io {
        path: String,
        source: std::io::Error,
    },
    #[error("failed to decode {path}: {source}")]
    Decode {
        path: String,
        source: image::ImageError,
    },
    #[error("unsupported pixel depth (only 8-bit images are accepted)")]
    UnsupportedDepth,
    #[error("image has a zero dimension")]
    ZeroDimension,
    #[error("dimension mismatch: {expected} vs {actual}")]
    DimensionMismatch { expected: String, actual: String },
    #[error("failed to encode {path}: {source}")]
    Encode {
        path: String,
        source: image::ImageError,
    },
}

/// 8-bit grayscale image, row-major.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct GrayImage {
    width: u32,
    height: u32,
    data: Vec<u8>,
}

impl GrayImage {
    /// Builds an image from raw row-major intensities.
    ///
    /// Panics if `data.len() != width * height` or a dimension is zero.
    pub fn from_raw(width: u32, height: u32, data: Vec<u8>) -> Self {
        assert!(width > 0 && height > 0, "image dimensions must be nonzero");
        assert_eq!(
            data.len(),
            width as usize * height as usize,
            "data length must equal width*height"
        );
        Self {
            width,
            height,
            data,
        }
    }

    pub fn width(&self) -> u32 {
        self.width
    }

    pub fn height(&self) -> u32 {
        self.height
    }

    pub fn pixels(&self) -> &[u8] {
        &self.data
    }

    pub fn get(&self, x: u32, y: u32) -> u8 {
        self.data[y as usize * self.width as usize + x as usize]
    }
}

/// Segmentation method provenance.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Method {
    Otsu,
    Ittt,
    Sauvola,
    RecursiveOtsu,
}

impl Method {
    pub const ALL: [Method; 4] = [
        Method::Otsu,
        Method::Ittt,
        Method::Sauvola,
        Method::RecursiveOtsu,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Method::Otsu => "otsu",
            Method::Ittt => "ittt",
            Method::Sauvola => "sauvola",
            Method::RecursiveOtsu => "recursive_otsu",
        }
    }
}

impl std::str::FromStr for Method {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.to_ascii_lowercase().replace('-', "_").as_str() {
            "otsu" => Ok(Method::Otsu),
            "ittt" => Ok(Method::Ittt),
            "sauvola" => Ok(Method::Sauvola),
            "recursive_otsu" => Ok(Method::RecursiveOtsu),
            other => Err(format!("unknown method '{other}'")),
        }
    }
}

impl std::fmt::Display for Method {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.name())
    }
}

/// Per-pixel class labels: 1 = background, 2 = crack.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SegMask {
    width: u32,
    height: u32,
    labels: Vec<u8>,
    pub method: Method,
    /// Global threshold that produced the mask; absent for per-pixel methods.
    pub final_threshold: Option<u16>,
    /// Set when the input was degenerate (e.g. constant) and the mask is a fallback.
    pub degenerate: bool,
}

impl SegMask {
    pub fn new(
        width: u32,
        height: u32,
        labels: Vec<u8>,
        method: Method,
        final_threshold: Option<u16>,
    ) -> Self {
        assert_eq!(labels.len(), width as usize * height as usize);
        debug_assert!(labels.iter().all(|&l| l == LABEL_BACKGROUND || l == LABEL_CRACK));
        Self {
            width,
            height,
            labels,
            method,
            final_threshold,
            degenerate: false,
        }
    }

    pub fn width(&self) -> u32 {
        self.width
    }

    pub fn height(&self) -> u32 {
        self.height
    }

    pub fn labels(&self) -> &[u8] {
        &self.labels
    }

    pub fn crack_pixel_count(&self) -> usize {
        self.labels.iter().filter(|&&l| l == LABEL_CRACK).count()
    }
}

/// Mask rendering palette.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Palette {
    /// Crack black (0), background white (255); 8-bit grayscale output.
    Bw,
    /// Crack pixels tinted red over the base image; RGB output.
    Overlay,
}

/// Loads a PNG or JPEG and converts it to 8-bit grayscale.
///
/// RGB inputs are converted with integer-rounded BT.601 luma
/// (`round(0.299 R + 0.587 G + 0.114 B)`); gray inputs pass through
/// unchanged. 16-bit inputs are rejected so histogram semantics stay at
/// 256 bins.
pub fn load_gray(path: impl AsRef<Path>) -> Result<GrayImage, ImagingError> {
    let path = path.as_ref();
    let bytes = std::fs::read(path).map_err(|source| ImagingError::Io {
        path: path.display().to_string(),
        source,
    })?;
    let img = image::load_from_memory(&bytes).map_err(|source| ImagingError::Decode {
        path: path.display().to_string(),
        source,
    })?;
    gray_from_dynamic(img)
}

fn gray_from_dynamic(img: DynamicImage) -> Result<GrayImage, ImagingError> {
    if img.width() == 0 || img.height() == 0 {
        return Err(ImagingError::ZeroDimension);
    }
    let (width, height) = (img.width(), img.height());
    let data = match img {
        DynamicImage::ImageLuma8(g) => g.into_raw(),
        DynamicImage::ImageLumaA8(g) => g.pixels().map(|p| p[0]).collect(),
        DynamicImage::ImageRgb8(rgb) => rgb.pixels().map(|p| bt601_luma(p[0], p[1], p[2])).collect(),
        DynamicImage::ImageRgba8(rgba) => {
            rgba.pixels().map(|p| bt601_luma(p[0], p[1], p[2])).collect()
        }
        _ => return Err(ImagingError::UnsupportedDepth),
    };
    Ok(GrayImage::from_raw(width, height, data))
}

/// Integer-rounded BT.601 luma. Computed in integer arithmetic so the
/// result is identical across platforms.
pub fn bt601_luma(r: u8, g: u8, b: u8) -> u8 {
    // round(0.299r + 0.587g + 0.114b) via scaled integers.
    let v = 299u32 * r as u32 + 587 * g as u32 + 114 * b as u32;
    ((v + 500) / 1000) as u8
}

/// Renders a mask to an encodable image.
///
/// `Bw` maps crack to black and background to white. `Overlay` requires the
/// source image and recolors crack pixels red, leaving background pixels as
/// the original gray value.
pub fn mask_to_image(
    mask: &SegMask,
    palette: Palette,
    base: Option<&GrayImage>,
) -> Result<DynamicImage, ImagingError> {
    match palette {
        Palette::Bw => {
            let buf: Vec<u8> = mask
                .labels
                .iter()
                .map(|&l| if l == LABEL_CRACK { 0 } else { 255 })
                .collect();
            let img: ImageBuffer<Luma<u8>, _> =
                ImageBuffer::from_raw(mask.width, mask.height, buf).expect("sized buffer");
            Ok(DynamicImage::ImageLuma8(img))
        }
        Palette::Overlay => {
            let base = base.ok_or_else(|| ImagingError::DimensionMismatch {
                expected: "base image for overlay".into(),
                actual: "none".into(),
            })?;
            if base.width != mask.width || base.height != mask.height {
                return Err(ImagingError::DimensionMismatch {
                    expected: format!("{}x{}", mask.width, mask.height),
                    actual: format!("{}x{}", base.width, base.height),
                });
            }
            let mut buf = Vec::with_capacity(mask.labels.len() * 3);
            for (&l, &v) in mask.labels.iter().zip(base.data.iter()) {
                if l == LABEL_CRACK {
                    buf.extend_from_slice(&[220, 20, 20]);
                } else {
                    buf.extend_from_slice(&[v, v, v]);
                }
            }
            let img: ImageBuffer<Rgb<u8>, _> =
                ImageBuffer::from_raw(mask.width, mask.height, buf).expect("sized buffer");
            Ok(DynamicImage::ImageRgb8(img))
        }
    }
}

/// Writes a rendered mask to a PNG file.
pub fn save_mask_png(
    mask: &SegMask,
    palette: Palette,
    base: Option<&GrayImage>,
    path: impl AsRef<Path>,
) -> Result<(), ImagingError> {
    let path = path.as_ref();
    let img = mask_to_image(mask, palette, base)?;
    img.save(path).map_err(|source| ImagingError::Encode {
        path: path.display().to_string(),
        source,
    })
}

/// Writes a grayscale image to a PNG file.
pub fn save_gray_png(img: &GrayImage, path: impl AsRef<Path>) -> Result<(), ImagingError> {
    let path = path.as_ref();
    let buf: ImageBuffer<Luma<u8>, _> =
        ImageBuffer::from_raw(img.width, img.height, img.data.clone()).expect("sized buffer");
    buf.save(path).map_err(|source| ImagingError::Encode {
        path: path.display().to_string(),
        source,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn luma_of_white_is_255() {
        assert_eq!(bt601_luma(255, 255, 255), 255);
    }

    #[test]
    fn luma_of_pure_red() {
        // round(0.299 * 255) = 76
        assert_eq!(bt601_luma(255, 0, 0), 76);
    }

    #[test]
    fn gray_png_round_trips_identically() {
        let img = GrayImage::from_raw(2, 2, vec![0, 255, 255, 0]);
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("checker.png");
        save_gray_png(&img, &path).unwrap();
        let back = load_gray(&path).unwrap();
        assert_eq!(back, img);
    }

    #[test]
    fn rgb_png_converts_via_luma() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("red.png");
        let rgb: ImageBuffer<Rgb<u8>, Vec<u8>> =
            ImageBuffer::from_raw(1, 1, vec![255, 0, 0]).unwrap();
        rgb.save(&path).unwrap();
        let gray = load_gray(&path).unwrap();
        assert_eq!(gray.pixels(), &[76]);
    }

    #[test]
    fn sixteen_bit_png_is_rejected() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("deep.png");
        let deep: ImageBuffer<image::Luma<u16>, Vec<u16>> =
            ImageBuffer::from_raw(2, 1, vec![0u16, 65535]).unwrap();
        deep.save(&path).unwrap();
        assert!(matches!(load_gray(&path), Err(ImagingError::UnsupportedDepth)));
    }

    #[test]
    fn bw_palette_maps_labels() {
        let mask = SegMask::new(2, 1, vec![1, 2], Method::Otsu, Some(128));
        let img = mask_to_image(&mask, Palette::Bw, None).unwrap();
        assert_eq!(img.as_luma8().unwrap().as_raw(), &vec![255, 0]);
    }

    #[test]
    fn bw_all_background_is_white() {
        let mask = SegMask::new(2, 2, vec![1; 4], Method::Otsu, None);
        let img = mask_to_image(&mask, Palette::Bw, None).unwrap();
        assert!(img.as_luma8().unwrap().as_raw().iter().all(|&v| v == 255));
    }

    #[test]
    fn overlay_tints_crack_pixels_only() {
        let base = GrayImage::from_raw(2, 2, vec![10, 20, 30, 40]);
        let mask = SegMask::new(2, 2, vec![1, 2, 1, 1], Method::Sauvola, None);
        let img = mask_to_image(&mask, Palette::Overlay, Some(&base)).unwrap();
        let rgb = img.as_rgb8().unwrap();
        assert_eq!(rgb.get_pixel(0, 0).0, [10, 10, 10]);
        assert_eq!(rgb.get_pixel(1, 0).0, [220, 20, 20]);
        assert_eq!(rgb.get_pixel(1, 1).0, [40, 40, 40]);
    }

    #[test]
    fn overlay_rejects_dimension_mismatch() {
        let base = GrayImage::from_raw(1, 1, vec![0]);
        let mask = SegMask::new(2, 1, vec![1, 2], Method::Otsu, None);
        assert!(mask_to_image(&mask, Palette::Overlay, Some(&base)).is_err());
    }

    #[test]
    fn bw_round_trip_recovers_partition() {
        let mask = SegMask::new(3, 1, vec![2, 1, 2], Method::RecursiveOtsu, Some(5));
        let img = mask_to_image(&mask, Palette::Bw, None).unwrap();
        let relabeled: Vec<u8> = img
            .as_luma8()
            .unwrap()
            .as_raw()
            .iter()
            .map(|&v| if v < 128 { 2 } else { 1 })
            .collect();
        assert_eq!(relabeled, mask.labels());
    }
}
