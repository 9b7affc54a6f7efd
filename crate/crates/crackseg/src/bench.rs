//! Batch benchmark harness: runs a set of methods over an image directory
//! and aggregates Q scores into CSV/JSON reports.

use std::io::Write;
use std::path::{Path, PathBuf};
use std::time::Instant;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::baselines::{ittt_segment, otsu_segment, sauvola_segment, IttConfig, SauvolaConfig};
use crate::evaluation::q_evaluate;
use crate::histogram::build_histogram;
use crate::imaging::{load_gray, save_mask_png, GrayImage, Method, Palette, SegMask};
use crate::recursive::{apply_threshold, recursive_otsu, RecursiveOtsuConfig, StopReason, ThresholdTrace};

#[derive(Debug, Error)]
pub enum BenchError {
    #[error("input directory {0} contains no decodable images")]
    EmptyInputDir(PathBuf),
    #[error("failed to read input directory {path}: {source}")]
    ReadDir {
        path: PathBuf,
        source: std::io::Error,
    },
    #[error("failed to write output {path}: {source}")]
    WriteOutput {
        path: PathBuf,
        source: std::io::Error,
    },
    #[error("no methods selected")]
    NoMethods,
}

#[derive(Debug, Clone, Default, Serialize, Deserialize)]
pub struct MethodParams {
    pub recursive: RecursiveOtsuConfig,
    pub ittt: IttConfig,
    pub sauvola: SauvolaConfig,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct BenchConfig {
    pub input_dir: PathBuf,
    pub methods: Vec<Method>,
    pub params: MethodParams,
    pub output_dir: Option<PathBuf>,
    pub emit_masks: bool,
    pub emit_traces: bool,
    pub parallelism: usize,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct BenchRow {
    pub image: String,
    pub method: Method,
    pub q: Option<f64>,
    pub final_threshold: Option<u16>,
    pub iterations: Option<u32>,
    pub stop_reason: Option<String>,
    pub wall_time_ms: f64,
    pub error: Option<String>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct MethodAggregate {
    pub method: Method,
    pub mean_q: Option<f64>,
    pub rank: Option<u32>,
    pub images: u32,
    pub failures: u32,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct BenchReport {
    pub version: String,
    pub config: BenchConfig,
    pub per_image: Vec<BenchRow>,
    pub aggregate: Vec<MethodAggregate>,
}

pub fn is_supported_image(path: &Path) -> bool {
    let name = path.file_name().and_then(|n| n.to_str()).unwrap_or("");
    // truth companions emitted by the fixture generator are not inputs
    if name.ends_with(".truth.png") {
        return false;
    }
    matches!(
        path.extension().and_then(|e| e.to_str()).map(|e| e.to_ascii_lowercase()).as_deref(),
        Some("png") | Some("jpg") | Some("jpeg")
    )
}

pub fn list_images(dir: &Path) -> Result<Vec<PathBuf>, BenchError> {
    let entries = std::fs::read_dir(dir).map_err(|source| BenchError::ReadDir {
        path: dir.to_path_buf(),
        source,
    })?;
    let mut images: Vec<PathBuf> = entries
        .filter_map(|e| e.ok().map(|e| e.path()))
        .filter(|p| p.is_file() && is_supported_image(p))
        .collect();
    images.sort();
    if images.is_empty() {
        return Err(BenchError::EmptyInputDir(dir.to_path_buf()));
    }
    Ok(images)
}

/// Segments one image with one method. Returns the mask and, for the
/// recursive method, the full trace.
pub fn segment_with(
    img: &GrayImage,
    method: Method,
    params: &MethodParams,
) -> (SegMask, Option<ThresholdTrace>) {
    match method {
        Method::Otsu => (otsu_segment(img), None),
        Method::Ittt => (ittt_segment(img, &params.ittt), None),
        Method::Sauvola => (sauvola_segment(img, &params.sauvola), None),
        Method::RecursiveOtsu => {
            let h = build_histogram(img);
            let trace = recursive_otsu(&h, &params.recursive);
            let mask = apply_threshold(img, trace.t_u);
            (mask, Some(trace))
        }
    }
}

fn stop_reason_name(r: StopReason) -> &'static str {
    match r {
        StopReason::ContrastExceeded => "contrast_exceeded",
        StopReason::DegenerateRoi => "degenerate_roi",
        StopReason::MaxIters => "max_iters",
    }
}

fn run_one(
    path: &Path,
    image_name: &str,
    method: Method,
    cfg: &BenchConfig,
) -> BenchRow {
    let start = Instant::now();
    let mut row = BenchRow {
        image: image_name.to_string(),
        method,
        q: None,
        final_threshold: None,
        iterations: None,
        stop_reason: None,
        wall_time_ms: 0.0,
        error: None,
    };
    let img = match load_gray(path) {
        Ok(i) => i,
        Err(e) => {
            row.error = Some(e.to_string());
            row.wall_time_ms = start.elapsed().as_secs_f64() * 1e3;
            return row;
        }
    };
    let (mask, trace) = segment_with(&img, method, &cfg.params);
    row.final_threshold = mask.final_threshold;
    if let Some(t) = &trace {
        row.iterations = Some(t.states.len() as u32);
        row.stop_reason = Some(stop_reason_name(t.stop_reason).to_string());
    } else if mask.degenerate {
        row.stop_reason = Some("degenerate_image".to_string());
    }
    match q_evaluate(&img, &mask) {
        Ok(report) => row.q = Some(report.q),
        Err(e) => row.error = Some(e.to_string()),
    }

    if let Some(out) = &cfg.output_dir {
        if cfg.emit_masks {
            let p = out.join("masks").join(format!("{image_name}.{method}.png"));
            if let Err(e) = save_mask_png(&mask, Palette::Bw, None, &p) {
                row.error = Some(e.to_string());
            }
        }
        if cfg.emit_traces {
            if let Some(t) = &trace {
                let p = out
                    .join("traces")
                    .join(format!("{image_name}.recursive_otsu.json"));
                match serde_json::to_vec_pretty(t) {
                    Ok(bytes) => {
                        if let Err(e) = std::fs::write(&p, bytes) {
                            row.error = Some(e.to_string());
                        }
                    }
                    Err(e) => row.error = Some(e.to_string()),
                }
            }
        }
    }

    row.wall_time_ms = start.elapsed().as_secs_f64() * 1e3;
    row
}

pub fn run_bench(cfg: &BenchConfig) -> Result<BenchReport, BenchError> {
    if cfg.methods.is_empty() {
        return Err(BenchError::NoMethods);
    }
    let images = list_images(&cfg.input_dir)?;
    if let Some(out) = &cfg.output_dir {
        let mut dirs = vec![out.clone()];
        if cfg.emit_masks {
            dirs.push(out.join("masks"));
        }
        if cfg.emit_traces {
            dirs.push(out.join("traces"));
        }
        for d in dirs {
            std::fs::create_dir_all(&d).map_err(|source| BenchError::WriteOutput {
                path: d.clone(),
                source,
            })?;
        }
    }

    let mut methods = cfg.methods.clone();
    methods.sort();
    methods.dedup();

    let work: Vec<(&PathBuf, Method)> = images
        .iter()
        .flat_map(|img| methods.iter().map(move |&m| (img, m)))
        .collect();

    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(cfg.parallelism.max(1))
        .build()
        .expect("thread pool");
    let mut per_image: Vec<BenchRow> = pool.install(|| {
        work.par_iter()
            .map(|(path, method)| {
                let name = path
                    .file_stem()
                    .and_then(|s| s.to_str())
                    .unwrap_or("image")
                    .to_string();
                run_one(path, &name, *method, cfg)
            })
            .collect()
    });
    per_image.sort_by(|a, b| (&a.image, a.method).cmp(&(&b.image, b.method)));

    let mut aggregate: Vec<MethodAggregate> = methods
        .iter()
        .map(|&method| {
            let qs: Vec<f64> = per_image
                .iter()
                .filter(|r| r.method == method)
                .filter_map(|r| r.q)
                .collect();
            let failures = per_image
                .iter()
                .filter(|r| r.method == method && r.error.is_some())
                .count() as u32;
            MethodAggregate {
                method,
                mean_q: (!qs.is_empty()).then(|| qs.iter().sum::<f64>() / qs.len() as f64),
                rank: None,
                images: qs.len() as u32,
                failures,
            }
        })
        .collect();

    // rank 1 = smallest mean Q
    let mut order: Vec<usize> = (0..aggregate.len())
        .filter(|&i| aggregate[i].mean_q.is_some())
        .collect();
    order.sort_by(|&a, &b| {
        aggregate[a]
            .mean_q
            .partial_cmp(&aggregate[b].mean_q)
            .unwrap()
    });
    for (rank, &i) in order.iter().enumerate() {
        aggregate[i].rank = Some(rank as u32 + 1);
    }

    let report = BenchReport {
        version: env!("CARGO_PKG_VERSION").to_string(),
        config: cfg.clone(),
        per_image,
        aggregate,
    };

    if let Some(out) = &cfg.output_dir {
        let csv_path = out.join("report.csv");
        let mut buf = Vec::new();
        write_csv(&report, &mut buf).map_err(|source| BenchError::WriteOutput {
            path: csv_path.clone(),
            source,
        })?;
        std::fs::write(&csv_path, buf).map_err(|source| BenchError::WriteOutput {
            path: csv_path,
            source,
        })?;
        let json_path = out.join("report.json");
        let json = serde_json::to_vec_pretty(&report).expect("report serializes");
        std::fs::write(&json_path, json).map_err(|source| BenchError::WriteOutput {
            path: json_path,
            source,
        })?;
    }

    Ok(report)
}

/// Writes the per-image rows as CSV with the stable column set.
pub fn write_csv(report: &BenchReport, w: &mut impl Write) -> std::io::Result<()> {
    writeln!(
        w,
        "image,method,q,final_threshold,iterations,stop_reason,wall_time_ms"
    )?;
    for row in &report.per_image {
        let fmt_opt = |v: Option<String>| v.unwrap_or_default();
        writeln!(
            w,
            "{},{},{},{},{},{},{:.3}",
            row.image,
            row.method,
            fmt_opt(row.q.map(|q| format!("{q:.12e}"))),
            fmt_opt(row.final_threshold.map(|t| t.to_string())),
            fmt_opt(row.iterations.map(|i| i.to_string())),
            fmt_opt(row.stop_reason.clone().or_else(|| row
                .error
                .as_ref()
                .map(|e| format!("error: {}", e.replace(',', ";"))))),
            row.wall_time_ms
        )?;
    }
    Ok(())
}

/// CSV rows with the timing column removed, for determinism comparisons.
pub fn csv_without_timing(csv: &str) -> String {
    csv.lines()
        .map(|l| match l.rsplit_once(',') {
            Some((rest, _)) => rest.to_string(),
            None => l.to_string(),
        })
        .collect::<Vec<_>>()
        .join("\n")
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::synth::{write_fixtures, SynthConfig};

    fn bench_config(dir: &Path, methods: Vec<Method>, jobs: usize) -> BenchConfig {
        BenchConfig {
            input_dir: dir.to_path_buf(),
            methods,
            params: MethodParams::default(),
            output_dir: None,
            emit_masks: false,
            emit_traces: false,
            parallelism: jobs,
        }
    }

    #[test]
    fn single_image_single_method() {
        let dir = tempfile::tempdir().unwrap();
        write_fixtures(
            &SynthConfig {
                seed: 1,
                count: 1,
                ..Default::default()
            },
            dir.path(),
        )
        .unwrap();
        let report = run_bench(&bench_config(dir.path(), vec![Method::Otsu], 1)).unwrap();
        assert_eq!(report.per_image.len(), 1);
        let agg = &report.aggregate[0];
        assert_eq!(agg.mean_q, report.per_image[0].q);
        assert_eq!(agg.rank, Some(1));
    }

    #[test]
    fn truth_masks_are_not_inputs() {
        let dir = tempfile::tempdir().unwrap();
        write_fixtures(
            &SynthConfig {
                seed: 1,
                count: 2,
                ..Default::default()
            },
            dir.path(),
        )
        .unwrap();
        let images = list_images(dir.path()).unwrap();
        assert_eq!(images.len(), 2);
    }

    #[test]
    fn all_methods_produce_rows_and_aggregate_mean_checks_out() {
        let dir = tempfile::tempdir().unwrap();
        write_fixtures(
            &SynthConfig {
                seed: 2,
                count: 3,
                shadow: true,
                ..Default::default()
            },
            dir.path(),
        )
        .unwrap();
        let report = run_bench(&bench_config(dir.path(), Method::ALL.to_vec(), 2)).unwrap();
        assert_eq!(report.per_image.len(), 12);
        for agg in &report.aggregate {
            let qs: Vec<f64> = report
                .per_image
                .iter()
                .filter(|r| r.method == agg.method)
                .filter_map(|r| r.q)
                .collect();
            let mean = qs.iter().sum::<f64>() / qs.len() as f64;
            assert!((agg.mean_q.unwrap() - mean).abs() <= 1e-9 * mean.abs().max(1e-12));
        }
    }

    #[test]
    fn reruns_and_worker_counts_are_deterministic() {
        let dir = tempfile::tempdir().unwrap();
        write_fixtures(
            &SynthConfig {
                seed: 3,
                count: 4,
                shadow: true,
                ..Default::default()
            },
            dir.path(),
        )
        .unwrap();
        let mut csvs = Vec::new();
        for jobs in [1usize, 8, 1] {
            let report =
                run_bench(&bench_config(dir.path(), Method::ALL.to_vec(), jobs)).unwrap();
            let mut buf = Vec::new();
            write_csv(&report, &mut buf).unwrap();
            csvs.push(csv_without_timing(&String::from_utf8(buf).unwrap()));
        }
        assert_eq!(csvs[0], csvs[1]);
        assert_eq!(csvs[0], csvs[2]);
    }

    #[test]
    fn empty_directory_is_an_error() {
        let dir = tempfile::tempdir().unwrap();
        let err = run_bench(&bench_config(dir.path(), vec![Method::Otsu], 1)).unwrap_err();
        assert!(matches!(err, BenchError::EmptyInputDir(_)));
    }

    #[test]
    fn corrupt_file_becomes_failure_row() {
        let dir = tempfile::tempdir().unwrap();
        std::fs::write(dir.path().join("junk.png"), b"not a png").unwrap();
        write_fixtures(
            &SynthConfig {
                seed: 4,
                count: 1,
                ..Default::default()
            },
            dir.path(),
        )
        .unwrap();
        let report = run_bench(&bench_config(dir.path(), vec![Method::Otsu], 1)).unwrap();
        assert_eq!(report.per_image.len(), 2);
        let junk = report.per_image.iter().find(|r| r.image == "junk").unwrap();
        assert!(junk.error.is_some());
        assert!(junk.q.is_none());
        assert_eq!(report.aggregate[0].failures, 1);
    }

    #[test]
    fn output_files_are_written() {
        let dir = tempfile::tempdir().unwrap();
        let out = tempfile::tempdir().unwrap();
        write_fixtures(
            &SynthConfig {
                seed: 5,
                count: 1,
                ..Default::default()
            },
            dir.path(),
        )
        .unwrap();
        let mut cfg = bench_config(dir.path(), vec![Method::Otsu, Method::RecursiveOtsu], 1);
        cfg.output_dir = Some(out.path().to_path_buf());
        cfg.emit_masks = true;
        cfg.emit_traces = true;
        run_bench(&cfg).unwrap();
        assert!(out.path().join("report.csv").is_file());
        assert!(out.path().join("report.json").is_file());
        assert!(out.path().join("masks/crack_000.otsu.png").is_file());
        assert!(out
            .path()
            .join("traces/crack_000.recursive_otsu.json")
            .is_file());
    }
}
