use std::fs::File;
use std::io::BufWriter;
use std::path::{Path, PathBuf};

use phonia::{analyze_buffer, load_audio, AnalysisConfig, ClassLabel, FileFeatures, FEATURE_NAMES};
use rayon::prelude::*;

use crate::error::{CliError, CliResult};
use crate::table::{TableRow, TableWriter};

#[derive(Debug, Clone, PartialEq)]
pub struct ManifestEntry {
    /// Path as written in the manifest; used as `file_id`.
    pub id: String,
    pub path: PathBuf,
    pub label: ClassLabel,
}

/// Reads a manifest CSV with a `path` (or `audio_path`) and a `label`
/// column. Relative paths are taken relative to the manifest's directory.
pub fn read_manifest(path: &Path) -> CliResult<Vec<ManifestEntry>> {
    let file = File::open(path).map_err(|e| CliError::io(path, e))?;
    let base = path.parent().unwrap_or(Path::new("."));
    let mut reader = csv::Reader::from_reader(file);
    let header = reader.headers()?.clone();
    let col = |names: &[&str]| header.iter().position(|h| names.contains(&h.trim()));
    let path_col = col(&["path", "audio_path"])
        .ok_or_else(|| CliError::Data(format!("{}: no 'path' or 'audio_path' column", path.display())))?;
    let label_col =
        col(&["label"]).ok_or_else(|| CliError::Data(format!("{}: no 'label' column", path.display())))?;

    let mut entries = Vec::new();
    for (n, record) in reader.records().enumerate() {
        let record = record?;
        let id = record[path_col].trim().to_string();
        let label = record[label_col]
            .parse()
            .map_err(|e: phonia::Error| CliError::Data(format!("{} line {}: {e}", path.display(), n + 2)))?;
        entries.push(ManifestEntry {
            path: base.join(&id),
            id,
            label,
        });
    }
    Ok(entries)
}

#[derive(Debug, Default)]
pub struct ExtractStats {
    pub files: usize,
    pub rows: usize,
    pub unreadable: usize,
    pub empty: usize,
}

/// Analyzes every manifest entry in parallel and writes the rows in manifest
/// order. Unreadable files are reported and skipped.
pub fn extract(manifest: &Path, out: &Path, cfg: &AnalysisConfig) -> CliResult<ExtractStats> {
    let entries = read_manifest(manifest)?;
    if entries.is_empty() {
        return Err(CliError::Data(format!("{}: manifest lists no files", manifest.display())));
    }
    let results: Vec<Result<FileFeatures, phonia::Error>> = entries
        .par_iter()
        .map(|e| load_audio(&e.path).and_then(|buf| analyze_buffer(&buf, cfg)))
        .collect();

    let file = File::create(out).map_err(|e| CliError::io(out, e))?;
    let mut table = TableWriter::new(BufWriter::new(file), &FEATURE_NAMES)?;
    let mut stats = ExtractStats {
        files: entries.len(),
        ..ExtractStats::default()
    };
    for (entry, result) in entries.iter().zip(results) {
        let features = match result {
            Ok(f) => f,
            Err(e) => {
                eprintln!("warning: skipping {}: {e}", entry.id);
                stats.unreadable += 1;
                continue;
            }
        };
        if features.frames.is_empty() {
            eprintln!("warning: {} produced no frames ({} GCIs)", entry.id, features.n_gcis);
            stats.empty += 1;
        }
        println!(
            "{}: {} frames from {} GCIs, dropped: {}",
            entry.id,
            features.frames.len(),
            features.n_gcis,
            features.drops
        );
        for frame in &features.frames {
            table.write(&TableRow {
                file_id: &entry.id,
                frame_index: frame.gci_index,
                label: entry.label,
                values: &frame.values,
            })?;
        }
    }
    stats.rows = table.rows();
    table.finish()?;
    if stats.rows == 0 {
        return Err(CliError::Data("no frames extracted from any file".into()));
    }
    Ok(stats)
}
