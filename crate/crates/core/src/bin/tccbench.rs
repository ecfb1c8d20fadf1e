//! `tccbench`: evaluation, dataset tooling and network training.
//!
//! Errors are reported as one JSON line on stderr,
//! `{"error":{"kind":"...","message":"..."}}`, with exit code 1.

use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};
use serde_json::json;

use tcc_core::bench::{run_benchmark, FoldSelection, RunConfig, TableFormat, METHOD_NAMES};
use tcc_core::dataset::{
    apply_split_file, dataset_statistics, fixed_split, write_suite, DatasetManifest, Fold, SceneSpec, SuiteSpec,
};
use tcc_core::net::checkpoint::{load_checkpoint, manifest_path};
use tcc_core::net::{gradient_check, save_checkpoint, train_from, TccNetConfig, TccNetParams, TrainConfig, TrainingSample};
use tcc_core::{Error, Illuminant, Result};

#[derive(Parser)]
#[command(name = "tccbench", version, about = "Temporal color constancy benchmark")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, ValueEnum)]
enum FoldArg {
    Train,
    Test,
    All,
}

#[derive(Clone, Copy, ValueEnum)]
enum FormatArg {
    Markdown,
    Csv,
}

#[derive(Clone, Copy, ValueEnum)]
enum ScenePreset {
    Default,
    Balanced,
    MaxWhite,
}

#[derive(Subcommand)]
enum Command {
    /// Evaluate methods over a manifest and print the statistics table.
    Eval {
        #[arg(long)]
        manifest: PathBuf,
        /// Method spec, e.g. "shades-of-gray --p 4". Repeat for more rows.
        #[arg(long = "method", required = true, allow_hyphen_values = true)]
        methods: Vec<String>,
        #[arg(long, value_enum, default_value = "all")]
        fold: FoldArg,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long, value_enum, default_value = "markdown")]
        format: FormatArg,
        /// Write the table here instead of stdout.
        #[arg(long)]
        table: Option<PathBuf>,
        /// Per-sequence error log (CSV).
        #[arg(long)]
        log: Option<PathBuf>,
    },
    /// Dataset statistics; optional CSVs for plotting.
    Stats {
        #[arg(long)]
        manifest: PathBuf,
        #[arg(long)]
        chroma_csv: Option<PathBuf>,
        #[arg(long)]
        histogram_csv: Option<PathBuf>,
    },
    /// Label a manifest train/test, by seeded shuffle or from a split file.
    Split {
        #[arg(long)]
        manifest: PathBuf,
        #[arg(long)]
        out: PathBuf,
        #[arg(long, default_value_t = 0.5)]
        ratio: f64,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// `<id> <train|test>` lines; overrides --ratio/--seed.
        #[arg(long)]
        split_file: Option<PathBuf>,
    },
    /// Generate a synthetic dataset with exact ground truth.
    Synth {
        #[arg(long)]
        out: PathBuf,
        #[arg(long, default_value_t = 20)]
        count: usize,
        /// Sequence lengths, used cyclically.
        #[arg(long, value_delimiter = ',', default_value = "3,5,7")]
        lengths: Vec<usize>,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long, default_value_t = 64)]
        width: usize,
        #[arg(long, default_value_t = 64)]
        height: usize,
        #[arg(long, value_enum, default_value = "default")]
        scene: ScenePreset,
        /// Frames from this index on contain no achromatic patches.
        #[arg(long)]
        gray_until: Option<usize>,
    },
    /// Train the recurrent network on a manifest.
    Train {
        #[arg(long)]
        manifest: PathBuf,
        #[arg(long, value_enum, default_value = "train")]
        fold: FoldArg,
        /// tiny, desk or model-g.
        #[arg(long, default_value = "desk")]
        preset: String,
        /// Continue from this checkpoint instead of a fresh init.
        #[arg(long)]
        resume: Option<PathBuf>,
        #[arg(long, default_value_t = 2000)]
        epochs: usize,
        #[arg(long, default_value_t = 3e-5)]
        lr: f64,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long)]
        no_augment: bool,
        #[arg(long)]
        out: PathBuf,
        /// Per-epoch loss curve (CSV).
        #[arg(long)]
        curve: Option<PathBuf>,
    },
    /// Finite-difference check of every network parameter tensor.
    Gradcheck {
        #[arg(long, default_value = "tiny")]
        preset: String,
        #[arg(long, default_value_t = 3)]
        length: usize,
        #[arg(long, default_value_t = 1e-4)]
        step: f64,
        #[arg(long, default_value_t = 1e-3)]
        tolerance: f64,
        #[arg(long, default_value_t = 0)]
        seed: u64,
    },
    /// List registered method names.
    Methods,
}

fn fold(f: FoldArg) -> FoldSelection {
    match f {
        FoldArg::Train => FoldSelection::Train,
        FoldArg::Test => FoldSelection::Test,
        FoldArg::All => FoldSelection::All,
    }
}

fn write(path: &Path, bytes: impl AsRef<[u8]>) -> Result<()> {
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        fs::create_dir_all(dir).map_err(|e| Error::Io { path: dir.into(), source: e })?;
    }
    fs::write(path, bytes).map_err(|e| Error::Io { path: path.into(), source: e })
}

fn stdout(bytes: &[u8]) -> Result<()> {
    std::io::stdout()
        .write_all(bytes)
        .map_err(|e| Error::Io { path: "<stdout>".into(), source: e })
}

fn run(cli: Cli) -> Result<()> {
    match cli.command {
        Command::Eval { manifest, methods, fold: f, seed, format, table, log } => {
            let format = match format {
                FormatArg::Markdown => TableFormat::Markdown,
                FormatArg::Csv => TableFormat::Csv,
            };
            let config = RunConfig {
                manifest,
                methods,
                fold: fold(f),
                seed,
                table_path: table.clone(),
                format,
                log_path: log,
            };
            let results = run_benchmark(&config)?;
            if table.is_none() {
                stdout(&tcc_core::bench::emit_table(&results, format)?)?;
            }
        }
        Command::Stats { manifest, chroma_csv, histogram_csv } => {
            let m = DatasetManifest::load(&manifest)?;
            let stats = dataset_statistics(&m)?;
            if let Some(p) = chroma_csv {
                write(&p, stats.chroma_csv())?;
            }
            if let Some(p) = histogram_csv {
                write(&p, stats.histogram_csv())?;
            }
            let report = json!({
                "sequences": m.records.len(),
                "mean_length": stats.mean_length,
                "median_length": stats.median_length,
                "length_histogram": stats.length_histogram,
                "length_chroma_correlation": {
                    "r": stats.length_chroma_correlation[0],
                    "g": stats.length_chroma_correlation[1],
                    "b": stats.length_chroma_correlation[2],
                },
            });
            stdout(format!("{}\n", serde_json::to_string_pretty(&report).unwrap()).as_bytes())?;
        }
        Command::Split { manifest, out, ratio, seed, split_file } => {
            let m = DatasetManifest::load(&manifest)?;
            let split = match split_file {
                Some(p) => apply_split_file(&m, p)?,
                None => fixed_split(&m, ratio, seed)?,
            };
            let dir = out.parent().unwrap_or(Path::new(""));
            split.rebased(dir)?.save(&out)?;
            let train = split.fold(Fold::Train).count();
            eprintln!("{train} train / {} test", split.records.len() - train);
            eprintln!("wrote {}", out.display());
        }
        Command::Synth { out, count, lengths, seed, width, height, scene, gray_until } => {
            let mut spec = match scene {
                ScenePreset::Default => SceneSpec::default(),
                ScenePreset::Balanced => SceneSpec::balanced(),
                ScenePreset::MaxWhite => SceneSpec::max_white(),
            };
            spec.width = width;
            spec.height = height;
            spec.gray_until = gray_until;
            let suite = SuiteSpec { count, lengths, scene: spec, seed };
            let m = write_suite(&suite, &out)?;
            eprintln!("wrote {} sequences to {}", m.records.len(), out.display());
        }
        Command::Train { manifest, fold: f, preset, resume, epochs, lr, seed, no_augment, out, curve } => {
            let m = DatasetManifest::load(&manifest)?;
            let records: Vec<_> = match fold(f) {
                FoldSelection::All => m.records.iter().collect(),
                FoldSelection::Train => m.fold(Fold::Train).collect(),
                FoldSelection::Test => m.fold(Fold::Test).collect(),
            };
            if records.is_empty() {
                return Err(Error::EmptyInput("no training sequences in the selected fold"));
            }
            let data = records
                .iter()
                .map(|r| Ok(TrainingSample { frames: m.load_frames(r)?, illuminant: r.illuminant }))
                .collect::<Result<Vec<_>>>()?;
            let (config, params) = match resume {
                Some(p) => load_checkpoint(p)?,
                None => {
                    let c = TccNetConfig::preset(&preset)?;
                    let p = TccNetParams::init(&c, seed)?;
                    (c, p)
                }
            };
            let mut hyper = TrainConfig { epochs, learning_rate: lr, seed, ..TrainConfig::default() };
            if no_augment {
                hyper.augmentation = None;
            }
            let (params, report) = train_from(params, &data, &config, &hyper)?;
            save_checkpoint(&out, &config, &params)?;
            if let Some(p) = curve {
                let mut csv = String::from("epoch,loss_deg,clean_deg\n");
                for (e, (l, c)) in report.epoch_loss.iter().zip(&report.clean_loss).enumerate() {
                    csv.push_str(&format!("{e},{l:.6},{c:.6}\n"));
                }
                write(&p, csv)?;
            }
            let last = report.clean_loss.last().copied().unwrap_or(f64::NAN);
            let summary = json!({
                "checkpoint": out,
                "manifest": manifest_path(&out),
                "sequences": data.len(),
                "epochs": epochs,
                "learning_rate": lr,
                "augmentation": !no_augment,
                "final_training_error_deg": last,
            });
            stdout(format!("{summary}\n").as_bytes())?;
        }
        Command::Gradcheck { preset, length, step, tolerance, seed } => {
            let config = TccNetConfig::preset(&preset)?;
            let params = TccNetParams::init(&config, seed)?;
            let spec = SceneSpec { width: config.input_width * 2, height: config.input_height * 2, ..SceneSpec::default() };
            let light = Illuminant::new(0.35, 0.45, 0.2)?;
            let (_, frames) = tcc_core::dataset::generate_synthetic_sequence(&spec, light, length, seed, "gradcheck")?;
            let truth = Illuminant::new(0.5, 0.3, 0.4)?;
            let report = gradient_check(&frames, &config, &params, truth, step)?;
            let mut out = String::from("tensor,len,relative_error,max_abs_error\n");
            for t in &report.tensors {
                out.push_str(&format!("{},{},{:.3e},{:.3e}\n", t.name, t.len, t.relative_error, t.max_abs_error));
            }
            stdout(out.as_bytes())?;
            if !report.passed(tolerance) {
                return Err(Error::Numerical(format!(
                    "max relative error {:.3e} exceeds {tolerance:e}",
                    report.max_relative_error()
                )));
            }
        }
        Command::Methods => {
            stdout(format!("{}\n", METHOD_NAMES.join("\n")).as_bytes())?;
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            let line = json!({ "error": { "kind": e.kind(), "message": e.to_string() } });
            eprintln!("{line}");
            ExitCode::FAILURE
        }
    }
}
