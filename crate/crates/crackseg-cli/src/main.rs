//! `crackseg` command line: segmentation, benchmarking, trace inspection,
//! and synthetic fixture generation.
//!
//! Machine-readable results go to stdout as single-line JSON; human tables
//! and diagnostics go to stderr. Exit codes: 0 success, 2 bad arguments,
//! 3 I/O failure, 4 degenerate image.

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use serde_json::json;

use crackseg::baselines::{IttConfig, SauvolaConfig};
use crackseg::bench::{run_bench, segment_with, BenchConfig, MethodParams};
use crackseg::evaluation::q_evaluate;
use crackseg::histogram::{build_histogram, BinRange};
use crackseg::imaging::{load_gray, save_mask_png, Method, Palette};
use crackseg::otsu::otsu_threshold;
use crackseg::recursive::RecursiveOtsuConfig;
use crackseg::synth::{write_fixtures, SynthConfig};

const EXIT_IO: u8 = 3;
const EXIT_DEGENERATE: u8 = 4;

#[derive(Parser)]
#[command(name = "crackseg", version, about = "Crack segmentation by recursive histogram thresholding")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Clone)]
struct MethodFlags {
    /// Stop level for the recursive interclass contrast
    #[arg(long = "cs", default_value_t = 0.25)]
    cs: f64,
    /// Sauvola window side (odd)
    #[arg(long, default_value_t = 31)]
    window: u32,
    /// Sauvola sensitivity
    #[arg(long, default_value_t = 0.5)]
    k: f64,
    /// Sauvola dynamic range of the standard deviation
    #[arg(long = "r-dyn", default_value_t = 128.0)]
    r_dyn: f64,
    /// ITTT threshold-movement stop value
    #[arg(long, default_value_t = 1)]
    epsilon: u16,
    /// Iteration cap for the iterative methods
    #[arg(long = "max-iters", default_value_t = 64)]
    max_iters: u32,
}

impl MethodFlags {
    fn params(&self) -> MethodParams {
        MethodParams {
            recursive: RecursiveOtsuConfig {
                c_s: self.cs,
                max_iters: self.max_iters,
            },
            ittt: IttConfig {
                epsilon: self.epsilon,
                max_iters: self.max_iters,
            },
            sauvola: SauvolaConfig {
                window: self.window,
                k: self.k,
                r_dyn: self.r_dyn,
            },
        }
    }
}

#[derive(Subcommand)]
enum Command {
    /// Segment one image and write the mask PNG
    Segment {
        /// Method: otsu | ittt | sauvola | recursive-otsu
        #[arg(long)]
        method: Method,
        #[command(flatten)]
        flags: MethodFlags,
        /// Write the recursion trace JSON here (recursive-otsu only)
        #[arg(long)]
        trace: Option<PathBuf>,
        /// Render crack pixels red over the input instead of black/white
        #[arg(long)]
        overlay: bool,
        input: PathBuf,
        /// Output mask PNG
        #[arg(short, long)]
        output: Option<PathBuf>,
    },
    /// Run methods over an image directory and report Q statistics
    Bench {
        #[arg(long)]
        dir: PathBuf,
        /// Comma-separated subset of otsu,ittt,sauvola,recursive-otsu
        #[arg(long, value_delimiter = ',', default_value = "otsu,ittt,sauvola,recursive-otsu")]
        methods: Vec<Method>,
        #[command(flatten)]
        flags: MethodFlags,
        /// Output directory for report.csv / report.json
        #[arg(long)]
        out: Option<PathBuf>,
        /// Worker count
        #[arg(long, default_value_t = 1)]
        jobs: usize,
        /// Also write per-method mask PNGs
        #[arg(long)]
        masks: bool,
        /// Also write recursion trace JSONs
        #[arg(long)]
        traces: bool,
    },
    /// Generate seeded synthetic crack fixtures with ground truth
    Synth {
        #[arg(long)]
        out: PathBuf,
        #[arg(long, default_value_t = 1)]
        n: u32,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Apply a linear shadow gradient across the width
        #[arg(long)]
        shadow: bool,
        /// Gaussian noise sigma
        #[arg(long, default_value_t = 6.0)]
        noise: f64,
        #[arg(long, default_value_t = 128)]
        width: u32,
        #[arg(long, default_value_t = 128)]
        height: u32,
    },
    /// Print histogram, global Otsu split, and recursion trace for an image
    Inspect {
        input: PathBuf,
        #[command(flatten)]
        flags: MethodFlags,
    },
}

fn verbose() -> bool {
    std::env::var("CRACKSEG_LOG").is_ok_and(|v| !v.is_empty())
}

struct Failure {
    code: u8,
    message: String,
}

fn io_failure(e: impl std::fmt::Display) -> Failure {
    Failure {
        code: EXIT_IO,
        message: e.to_string(),
    }
}

fn run(cli: Cli) -> Result<(), Failure> {
    match cli.command {
        Command::Segment {
            method,
            flags,
            trace,
            overlay,
            input,
            output,
        } => {
            let img = load_gray(&input).map_err(io_failure)?;
            let params = flags.params();
            let (mask, rec_trace) = segment_with(&img, method, &params);
            if mask.degenerate {
                return Err(Failure {
                    code: EXIT_DEGENERATE,
                    message: format!(
                        "degenerate image: {} needs at least two distinct intensities; mask would be all background",
                        method
                    ),
                });
            }
            if let Some(out) = &output {
                let palette = if overlay { Palette::Overlay } else { Palette::Bw };
                save_mask_png(&mask, palette, Some(&img), out).map_err(io_failure)?;
                if verbose() {
                    eprintln!("wrote mask to {}", out.display());
                }
            }
            if let Some(trace_path) = &trace {
                if let Some(t) = &rec_trace {
                    let bytes = serde_json::to_vec_pretty(t).expect("trace serializes");
                    std::fs::write(trace_path, bytes).map_err(io_failure)?;
                }
            }
            let q = q_evaluate(&img, &mask).map_err(io_failure)?;
            let mut line = json!({
                "input": input.display().to_string(),
                "method": method.name(),
                "final_threshold": mask.final_threshold,
                "q": q.q,
            });
            if let Some(t) = &rec_trace {
                line["t_u"] = json!(t.t_u);
                line["iterations"] = json!(t.states.len());
                line["stop_reason"] = serde_json::to_value(t.stop_reason).unwrap();
                line["contrast_sequence"] =
                    json!(t.states.iter().map(|s| s.contrast).collect::<Vec<_>>());
            }
            println!("{line}");
            Ok(())
        }
        Command::Bench {
            dir,
            methods,
            flags,
            out,
            jobs,
            masks,
            traces,
        } => {
            let cfg = BenchConfig {
                input_dir: dir,
                methods,
                params: flags.params(),
                output_dir: out,
                emit_masks: masks,
                emit_traces: traces,
                parallelism: jobs,
            };
            let report = run_bench(&cfg).map_err(io_failure)?;
            eprintln!("{:<16} {:>14} {:>6} {:>8} {:>9}", "method", "mean Q", "rank", "images", "failures");
            for agg in &report.aggregate {
                eprintln!(
                    "{:<16} {:>14} {:>6} {:>8} {:>9}",
                    agg.method.name(),
                    agg.mean_q.map_or("-".into(), |q| format!("{q:.6}")),
                    agg.rank.map_or("-".into(), |r| r.to_string()),
                    agg.images,
                    agg.failures
                );
            }
            println!(
                "{}",
                json!({ "aggregate": report.aggregate, "rows": report.per_image.len() })
            );
            Ok(())
        }
        Command::Synth {
            out,
            n,
            seed,
            shadow,
            noise,
            width,
            height,
        } => {
            let cfg = SynthConfig {
                width,
                height,
                count: n,
                seed,
                shadow,
                noise_sigma: noise,
            };
            let pairs = write_fixtures(&cfg, &out).map_err(io_failure)?;
            println!(
                "{}",
                json!({
                    "out": out.display().to_string(),
                    "count": pairs.len(),
                    "seed": seed,
                    "shadow": shadow,
                })
            );
            Ok(())
        }
        Command::Inspect { input, flags } => {
            let img = load_gray(&input).map_err(io_failure)?;
            let h = build_histogram(&img);
            let trace = crackseg::recursive::recursive_otsu(&h, &flags.params().recursive);
            let global = otsu_threshold(&h, BinRange::full()).ok();
            println!(
                "{}",
                json!({
                    "input": input.display().to_string(),
                    "width": img.width(),
                    "height": img.height(),
                    "histogram": h.counts,
                    "global_otsu": global,
                    "trace": trace,
                })
            );
            Ok(())
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(f) => {
            eprintln!("error: {}", f.message);
            ExitCode::from(f.code)
        }
    }
}
