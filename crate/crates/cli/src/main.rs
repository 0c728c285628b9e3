//! Command-line driver: corpus synthesis, feature extraction, information
//! analysis and plot-data dumps.

mod analyze;
mod dump;
mod error;
mod extract;
mod table;

use std::fs::File;
use std::io::{self, BufWriter, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::error::ErrorKind;
use clap::{Parser, Subcommand};
use phonia::pipeline::front_end;
use phonia::{load_audio, synth_corpus, AnalysisConfig};

use crate::dump::DumpKind;
use crate::error::{CliError, CliResult};

#[derive(Debug, Parser)]
#[command(name = "phonia", version, about = "Voice quality features and their class information")]
struct Cli {
    /// Analysis sampling rate in Hz (overrides the config file).
    #[arg(long, global = true, value_name = "HZ")]
    rate: Option<u32>,

    /// Key-value configuration file with analysis defaults.
    #[arg(long, global = true, value_name = "PATH")]
    config: Option<PathBuf>,

    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Extract frame-level features for every file of a manifest.
    Extract {
        /// CSV with `path` (or `audio_path`) and `label` columns.
        manifest: PathBuf,
        /// Output feature table (CSV).
        #[arg(short, long)]
        out: PathBuf,
    },
    /// Compute relevance, joint information and redundancy of a feature table.
    Analyze {
        table: PathBuf,
        /// Report JSON; the matrix CSV goes next to it unless --matrix is given.
        #[arg(short, long)]
        out: PathBuf,
        #[arg(long)]
        matrix: Option<PathBuf>,
        /// Histogram bins per feature (default 50, or the config value).
        #[arg(long)]
        bins: Option<usize>,
    },
    /// Write plot data for one audio file.
    Dump {
        #[arg(value_enum)]
        what: DumpKind,
        audio: PathBuf,
        /// Output CSV; standard output when omitted.
        #[arg(short, long)]
        out: Option<PathBuf>,
        /// Speech frame to show in a spectrum dump (default: middle frame).
        #[arg(long)]
        frame: Option<usize>,
    },
    /// Generate the two-class synthetic corpus with its manifest.
    Synth {
        #[arg(short, long)]
        out_dir: PathBuf,
        #[arg(short = 'n', long, default_value_t = 50)]
        n_per_class: usize,
        #[arg(long, default_value_t = 7)]
        seed: u64,
    },
}

fn load_config(cli: &Cli) -> CliResult<AnalysisConfig> {
    let mut cfg = match &cli.config {
        Some(path) => AnalysisConfig::load(path).map_err(|e| match e {
            phonia::Error::Io(err) => CliError::io(path, err),
            other => CliError::Usage(format!("{}: {other}", path.display())),
        })?,
        None => AnalysisConfig::default(),
    };
    if let Some(rate) = cli.rate {
        cfg.target_rate = rate;
    }
    cfg.validate().map_err(|e| CliError::Usage(e.to_string()))?;
    Ok(cfg)
}

fn create(path: &Path) -> CliResult<BufWriter<File>> {
    File::create(path).map(BufWriter::new).map_err(|e| CliError::io(path, e))
}

fn run(cli: Cli) -> CliResult<()> {
    let cfg = load_config(&cli)?;
    match cli.command {
        Command::Extract { manifest, out } => {
            let stats = extract::extract(&manifest, &out, &cfg)?;
            println!(
                "{} rows from {} files ({} without frames) -> {}",
                stats.rows,
                stats.files - stats.unreadable,
                stats.empty,
                out.display()
            );
            if stats.unreadable > 0 {
                return Err(CliError::Io(format!(
                    "{} of {} files could not be read; table written without them",
                    stats.unreadable, stats.files
                )));
            }
        }
        Command::Analyze {
            table,
            out,
            matrix,
            bins,
        } => {
            let bins = bins.unwrap_or(cfg.bins);
            if bins < 2 {
                return Err(CliError::Usage("--bins must be at least 2".into()));
            }
            let matrix = match matrix {
                Some(m) => m,
                None => analyze::default_matrix_path(&out)?,
            };
            let report = analyze::analyze(&table, &out, &matrix, bins)?;
            println!(
                "{} records (normal {}, pathological {}), H(C) = {:.6} bits, {} bins",
                report.class_counts.normal + report.class_counts.pathological,
                report.class_counts.normal,
                report.class_counts.pathological,
                report.class_entropy_bits,
                report.n_bins
            );
            for (rank, (name, v)) in analyze::ranking(&report).iter().enumerate() {
                println!("{:>2}. {name:<10} {:5.1}%", rank + 1, 100.0 * v);
            }
            for w in &report.warnings {
                eprintln!("warning: {w}");
            }
        }
        Command::Dump {
            what,
            audio,
            out,
            frame,
        } => {
            let buf = load_audio(&audio).map_err(|e| CliError::at(&audio, e))?;
            let fe = front_end(&buf, &cfg)?;
            match out {
                Some(path) => {
                    let mut w = create(&path)?;
                    dump::dump(what, &fe, frame, &mut w)?;
                    w.flush().map_err(|e| CliError::io(&path, e))?;
                }
                None => {
                    let mut w = io::stdout().lock();
                    dump::dump(what, &fe, frame, &mut w)?;
                }
            }
        }
        Command::Synth {
            out_dir,
            n_per_class,
            seed,
        } => {
            if n_per_class < 10 {
                return Err(CliError::Usage(format!("--n-per-class must be at least 10, got {n_per_class}")));
            }
            let entries = synth_corpus(&out_dir, n_per_class, seed)?;
            println!(
                "{} files and {} written to {}",
                entries.len(),
                phonia::synth::MANIFEST_NAME,
                out_dir.display()
            );
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return match e.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => ExitCode::SUCCESS,
                _ => ExitCode::from(1),
            };
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("phonia: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}
