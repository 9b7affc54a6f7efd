//! Seeded synthetic crack fixtures with ground truth.
//!
//! Each fixture is a bright, lightly noisy background crossed by one or two
//! thin dark random-walk cracks, optionally under a linear shadow gradient.
//! Everything is driven by a counter-based ChaCha stream, so a (seed, index)
//! pair always produces the same bytes.

use std::path::{Path, PathBuf};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::imaging::{save_gray_png, save_mask_png, GrayImage, Method, Palette, SegMask, LABEL_BACKGROUND, LABEL_CRACK};

pub const BACKGROUND_INTENSITY: u8 = 160;
pub const CRACK_INTENSITY: u8 = 40;
/// Intensity drop from the left to the right edge when the shadow is on.
pub const SHADOW_DEPTH: f64 = 60.0;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SynthConfig {
    pub width: u32,
    pub height: u32,
    pub count: u32,
    pub seed: u64,
    pub shadow: bool,
    pub noise_sigma: f64,
}

impl Default for SynthConfig {
    fn default() -> Self {
        Self {
            width: 128,
            height: 128,
            count: 1,
            seed: 0,
            shadow: false,
            noise_sigma: 6.0,
        }
    }
}

pub struct SynthImage {
    pub image: GrayImage,
    pub truth: SegMask,
}

fn gaussian(rng: &mut impl Rng, sigma: f64) -> f64 {
    // Box-Muller
    let u1: f64 = rng.gen_range(f64::EPSILON..1.0);
    let u2: f64 = rng.gen_range(0.0..1.0);
    sigma * (-2.0 * u1.ln()).sqrt() * (std::f64::consts::TAU * u2).cos()
}

/// Generates fixture `index` of the set. Independent of `count`, so
/// extending a set keeps earlier images identical.
pub fn generate_one(cfg: &SynthConfig, index: u32) -> SynthImage {
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    rng.set_stream(index as u64);
    let (w, h) = (cfg.width as usize, cfg.height as usize);

    // background with optional left-to-right shadow, pre-noise
    let mut base = vec![0f64; w * h];
    for y in 0..h {
        for x in 0..w {
            let mut v = BACKGROUND_INTENSITY as f64;
            if cfg.shadow && w > 1 {
                v -= SHADOW_DEPTH * x as f64 / (w - 1) as f64;
            }
            base[y * w + x] = v;
        }
    }

    // 1-2 dark random-walk cracks, drawn after the shadow so crack
    // intensity stays fixed and well below 100 pre-noise
    let mut truth = vec![LABEL_BACKGROUND; w * h];
    let n_cracks = rng.gen_range(1..=2usize);
    for _ in 0..n_cracks {
        let mut x = rng.gen_range(w / 8..w * 7 / 8) as i64;
        let thickness = rng.gen_range(1..=4usize) as i64;
        for y in 0..h {
            for dx in 0..thickness {
                let px = x + dx;
                if (0..w as i64).contains(&px) {
                    base[y * w + px as usize] = CRACK_INTENSITY as f64;
                    truth[y * w + px as usize] = LABEL_CRACK;
                }
            }
            x += rng.gen_range(-2i64..=2);
        }
    }

    let data: Vec<u8> = base
        .iter()
        .map(|&v| (v + gaussian(&mut rng, cfg.noise_sigma)).round().clamp(0.0, 255.0) as u8)
        .collect();

    SynthImage {
        image: GrayImage::from_raw(cfg.width, cfg.height, data),
        truth: SegMask::new(
            cfg.width,
            cfg.height,
            truth,
            Method::RecursiveOtsu,
            None,
        ),
    }
}

pub fn generate(cfg: &SynthConfig) -> Vec<SynthImage> {
    (0..cfg.count).map(|i| generate_one(cfg, i)).collect()
}

/// Writes `count` image + ground-truth pairs into `dir` as
/// `crack_NNN.png` / `crack_NNN.truth.png`.
pub fn write_fixtures(
    cfg: &SynthConfig,
    dir: impl AsRef<Path>,
) -> Result<Vec<(PathBuf, PathBuf)>, crate::imaging::ImagingError> {
    let dir = dir.as_ref();
    std::fs::create_dir_all(dir).map_err(|source| crate::imaging::ImagingError::Io {
        path: dir.display().to_string(),
        source,
    })?;
    let mut pairs = Vec::new();
    for (i, fixture) in generate(cfg).into_iter().enumerate() {
        let img_path = dir.join(format!("crack_{i:03}.png"));
        let truth_path = dir.join(format!("crack_{i:03}.truth.png"));
        save_gray_png(&fixture.image, &img_path)?;
        save_mask_png(&fixture.truth, Palette::Bw, None, &truth_path)?;
        pairs.push((img_path, truth_path));
    }
    Ok(pairs)
}

/// Reads a bw truth PNG back into a mask (black = crack).
pub fn load_truth_mask(path: impl AsRef<Path>) -> Result<SegMask, crate::imaging::ImagingError> {
    let img = crate::imaging::load_gray(path)?;
    let labels = img
        .pixels()
        .iter()
        .map(|&v| if v < 128 { LABEL_CRACK } else { LABEL_BACKGROUND })
        .collect();
    Ok(SegMask::new(
        img.width(),
        img.height(),
        labels,
        Method::RecursiveOtsu,
        None,
    ))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn seeded_generation_is_deterministic() {
        let cfg = SynthConfig {
            seed: 7,
            shadow: true,
            ..Default::default()
        };
        let a = generate_one(&cfg, 0);
        let b = generate_one(&cfg, 0);
        assert_eq!(a.image, b.image);
        assert_eq!(a.truth.labels(), b.truth.labels());
    }

    #[test]
    fn index_stream_is_independent_of_count() {
        let cfg = SynthConfig {
            seed: 3,
            count: 1,
            ..Default::default()
        };
        let wider = SynthConfig { count: 5, ..cfg };
        assert_eq!(generate(&cfg)[0].image, generate(&wider)[0].image);
    }

    #[test]
    fn truth_pixels_are_dark_pre_noise() {
        let cfg = SynthConfig {
            seed: 11,
            noise_sigma: 0.0,
            shadow: true,
            ..Default::default()
        };
        let fixture = generate_one(&cfg, 0);
        for (&p, &l) in fixture.image.pixels().iter().zip(fixture.truth.labels()) {
            if l == LABEL_CRACK {
                assert!(p < 100, "crack pixel has intensity {p}");
            }
        }
        assert!(fixture.truth.crack_pixel_count() > 0);
    }

    #[test]
    fn fixtures_round_trip_through_png() {
        let dir = tempfile::tempdir().unwrap();
        let cfg = SynthConfig {
            seed: 5,
            count: 2,
            ..Default::default()
        };
        let pairs = write_fixtures(&cfg, dir.path()).unwrap();
        assert_eq!(pairs.len(), 2);
        let truth = load_truth_mask(&pairs[0].1).unwrap();
        let generated = generate_one(&cfg, 0);
        assert_eq!(truth.labels(), generated.truth.labels());
        let img = crate::imaging::load_gray(&pairs[0].0).unwrap();
        assert_eq!(img, generated.image);
    }
}
