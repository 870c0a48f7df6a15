//! Command-line front end for dataset generation, statistics, QA and label export.

use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};
use floodsynth::pipeline::{self, DatasetManifest, MANIFEST_FILE};
use floodsynth::Error;

#[derive(Parser)]
#[command(name = "floodsynth", version, about = "Synthetic urban-flood dataset generator")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Generate a dataset from a JSON config.
    Generate {
        #[arg(long)]
        config: PathBuf,
        /// Output directory; overrides `output_dir` in the config.
        #[arg(long)]
        out: PathBuf,
        /// Master seed; overrides `master_seed` in the config.
        #[arg(long)]
        seed: Option<u64>,
        /// Worker threads, 0 = all cores.
        #[arg(long, env = "FLOODSYNTH_JOBS", default_value_t = 0)]
        jobs: usize,
    },
    /// Print per-level image and instance counts of a manifest.
    Stats {
        #[arg(long)]
        manifest: PathBuf,
    },
    /// Check a generated dataset; exits 1 when any violation is found.
    Validate {
        #[arg(long)]
        dataset: PathBuf,
    },
    /// Re-emit the label files of a dataset from its manifest.
    ExportLabels {
        #[arg(long)]
        dataset: PathBuf,
        #[arg(long, value_enum)]
        format: LabelFormat,
        /// Destination directory, `<dataset>/labels/<format>` by default.
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

#[derive(Clone, Copy, ValueEnum)]
enum LabelFormat {
    Yolo,
}

enum Failure {
    Validation,
    Error(Error),
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        Failure::Error(e)
    }
}

fn exit_code(e: &Error) -> u8 {
    match e {
        Error::Frame { source, .. } => exit_code(source),
        Error::Io { .. } | Error::Decode { .. } | Error::Encode { .. } => 3,
        Error::Consistency(_) => 1,
        _ => 2,
    }
}

fn read_text(path: &Path) -> Result<String, Error> {
    std::fs::read_to_string(path).map_err(|source| Error::Io {
        context: format!("reading {}", path.display()),
        source,
    })
}

fn generate(config: &Path, out: &Path, seed: Option<u64>, jobs: usize) -> Result<(), Failure> {
    let text = read_text(config)?;
    let mut doc: serde_json::Value =
        serde_json::from_str(&text).map_err(|e| Error::Config(format!("{}: malformed JSON: {e}", config.display())))?;
    let Some(obj) = doc.as_object_mut() else {
        return Err(Error::Config("config must be a JSON object".into()).into());
    };
    obj.insert("output_dir".into(), out.to_string_lossy().into_owned().into());
    if let Some(seed) = seed {
        obj.insert("master_seed".into(), seed.into());
    }
    let parsed = pipeline::parse_config(&doc.to_string())?;
    for w in &parsed.warnings {
        eprintln!("warning: {w}");
    }
    let manifest = pipeline::generate_dataset(&parsed.config, jobs)?;
    let notices = manifest.frames.iter().map(|f| f.notices.len()).sum::<usize>();
    println!("wrote {} frames to {}", manifest.frames.len(), out.display());
    if notices > 0 {
        println!("{notices} notice(s) recorded in {MANIFEST_FILE}");
    }
    print!("{}", manifest.stats.to_text());
    Ok(())
}

fn run(cli: Cli) -> Result<(), Failure> {
    match cli.command {
        Command::Generate { config, out, seed, jobs } => generate(&config, &out, seed, jobs),
        Command::Stats { manifest } => {
            let m = DatasetManifest::load(&manifest)?;
            let table = pipeline::dataset_stats(&m);
            print!("{}", table.to_text());
            println!("{}", serde_json::to_string_pretty(&table).expect("stats serialize"));
            Ok(())
        }
        Command::Validate { dataset } => {
            let report = pipeline::validate_dataset(&dataset)?;
            for v in &report.violations {
                println!("{v}");
            }
            println!(
                "checked {} frames ({} for tightness): {} violation(s)",
                report.frames_checked,
                report.tightness_checked,
                report.violations.len()
            );
            if report.is_empty() {
                Ok(())
            } else {
                Err(Failure::Validation)
            }
        }
        Command::ExportLabels { dataset, format: LabelFormat::Yolo, out } => {
            let out = out.unwrap_or_else(|| dataset.join("labels").join("yolo"));
            let n = pipeline::export_labels(&dataset, &out)?;
            println!("wrote {n} label files to {}", out.display());
            Ok(())
        }
    }
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure::Validation) => ExitCode::from(1),
        Err(Failure::Error(e)) => {
            eprintln!("error: {e}");
            ExitCode::from(exit_code(&e))
        }
    }
}
