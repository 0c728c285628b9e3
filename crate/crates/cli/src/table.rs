//! Frame-level feature table: `file_id,frame_index,label,<features...>`.

use std::io::{Read, Write};

use phonia::{ClassLabel, LabeledDataset};

use crate::error::{CliError, CliResult};

pub const KEY_COLUMNS: [&str; 3] = ["file_id", "frame_index", "label"];

pub struct TableRow<'a> {
    pub file_id: &'a str,
    pub frame_index: usize,
    pub label: ClassLabel,
    pub values: &'a [f64],
}

pub struct TableWriter<W: Write> {
    inner: csv::Writer<W>,
    n_features: usize,
    rows: usize,
}

impl<W: Write> TableWriter<W> {
    pub fn new(out: W, feature_names: &[&str]) -> CliResult<Self> {
        let mut inner = csv::Writer::from_writer(out);
        inner.write_record(KEY_COLUMNS.iter().chain(feature_names))?;
        Ok(Self {
            inner,
            n_features: feature_names.len(),
            rows: 0,
        })
    }

    pub fn write(&mut self, row: &TableRow<'_>) -> CliResult<()> {
        debug_assert_eq!(row.values.len(), self.n_features);
        let mut record = vec![row.file_id.to_string(), row.frame_index.to_string(), row.label.to_string()];
        record.extend(row.values.iter().map(|v| v.to_string()));
        self.inner.write_record(&record)?;
        self.rows += 1;
        Ok(())
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn finish(mut self) -> CliResult<()> {
        self.inner.flush().map_err(|e| CliError::Io(e.to_string()))
    }
}

/// Parses a feature table into a labelled dataset over its feature columns.
pub fn read_table<R: Read>(input: R) -> CliResult<LabeledDataset> {
    let mut reader = csv::Reader::from_reader(input);
    let header = reader.headers()?.clone();
    let names: Vec<&str> = header.iter().collect();
    if names.len() < KEY_COLUMNS.len() || names[..3] != KEY_COLUMNS {
        return Err(CliError::Data(format!(
            "table header must start with {}",
            KEY_COLUMNS.join(",")
        )));
    }
    let feature_names: Vec<String> = names[3..].iter().map(|s| s.to_string()).collect();
    let mut columns = vec![Vec::new(); feature_names.len()];
    let mut labels = Vec::new();
    for (n, record) in reader.records().enumerate() {
        let record = record?;
        let line = n + 2;
        let label: ClassLabel = record[2]
            .parse()
            .map_err(|e: phonia::Error| CliError::Data(format!("table line {line}: {e}")))?;
        for (i, col) in columns.iter_mut().enumerate() {
            let v: f64 = record[3 + i].trim().parse().map_err(|_| {
                CliError::Data(format!("table line {line}: bad value {:?} for {}", &record[3 + i], feature_names[i]))
            })?;
            if !v.is_finite() {
                return Err(CliError::Data(format!("table line {line}: non-finite {}", feature_names[i])));
            }
            col.push(v);
        }
        labels.push(label);
    }
    if labels.is_empty() {
        return Err(CliError::Data("feature table has no rows".into()));
    }
    Ok(LabeledDataset::new(feature_names, columns, labels)?)
}
