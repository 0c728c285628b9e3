//! Histogram (plug-in) estimates of class entropy, feature relevance, joint
//! relevance and the redundancy/synergy interaction term, in bits.
//!
//! For features `Xi`, `Xj` and class `C`:
//!
//! * `I(Xi;C)` is the relevance of one feature,
//! * `I(Xi,Xj;C)` is the relevance of the pair used together,
//! * `I(Xi;Xj;C) = I(Xi;C) + I(Xj;C) - I(Xi,Xj;C)` is positive when the pair
//!   is redundant and negative when it is synergic.
//!
//! Report values are also given relative to `H(C)`.

use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::stats::percentile_sorted;

pub const DEFAULT_BINS: usize = 50;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ClassLabel {
    Normal,
    Pathological,
}

impl ClassLabel {
    pub const ALL: [ClassLabel; 2] = [ClassLabel::Normal, ClassLabel::Pathological];

    pub fn index(self) -> usize {
        match self {
            ClassLabel::Normal => 0,
            ClassLabel::Pathological => 1,
        }
    }
}

impl fmt::Display for ClassLabel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            ClassLabel::Normal => "normal",
            ClassLabel::Pathological => "pathological",
        })
    }
}

impl FromStr for ClassLabel {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "normal" | "normophonic" | "0" => Ok(ClassLabel::Normal),
            "pathological" | "dysphonic" | "1" => Ok(ClassLabel::Pathological),
            other => Err(Error::Data(format!("unknown class label '{other}'"))),
        }
    }
}

/// Column-oriented feature table with one class label per record.
#[derive(Debug, Clone, PartialEq)]
pub struct LabeledDataset {
    pub feature_names: Vec<String>,
    /// `columns[f][r]` is feature `f` of record `r`.
    pub columns: Vec<Vec<f64>>,
    pub labels: Vec<ClassLabel>,
}

impl LabeledDataset {
    pub fn new(feature_names: Vec<String>, columns: Vec<Vec<f64>>, labels: Vec<ClassLabel>) -> Result<Self> {
        if feature_names.len() != columns.len() {
            return Err(Error::Data(format!(
                "{} feature names for {} columns",
                feature_names.len(),
                columns.len()
            )));
        }
        if let Some((name, col)) = feature_names.iter().zip(&columns).find(|(_, c)| c.len() != labels.len()) {
            return Err(Error::Data(format!(
                "feature {name} has {} values for {} labels",
                col.len(),
                labels.len()
            )));
        }
        Ok(Self {
            feature_names,
            columns,
            labels,
        })
    }

    /// Builds a dataset from row-major records.
    pub fn from_rows(feature_names: Vec<String>, rows: &[(Vec<f64>, ClassLabel)]) -> Result<Self> {
        let mut columns = vec![Vec::with_capacity(rows.len()); feature_names.len()];
        for (values, _) in rows {
            if values.len() != feature_names.len() {
                return Err(Error::Data(format!(
                    "record has {} values, expected {}",
                    values.len(),
                    feature_names.len()
                )));
            }
            for (col, v) in columns.iter_mut().zip(values) {
                col.push(*v);
            }
        }
        let labels = rows.iter().map(|(_, l)| *l).collect();
        Self::new(feature_names, columns, labels)
    }

    pub fn len(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }

    pub fn class_counts(&self) -> [u64; 2] {
        class_counts(&self.labels)
    }
}

pub fn class_counts(labels: &[ClassLabel]) -> [u64; 2] {
    let mut counts = [0u64; 2];
    for l in labels {
        counts[l.index()] += 1;
    }
    counts
}

/// How the histogram range of a feature is chosen.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum BinRange {
    /// Equal-width bins between two percentiles; values outside are clamped
    /// into the extreme bins.
    Percentile { low: f64, high: f64 },
    MinMax,
}

impl Default for BinRange {
    fn default() -> Self {
        BinRange::Percentile { low: 1.0, high: 99.0 }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct DiscretizedFeature {
    pub bins: Vec<u32>,
    /// `n_bins + 1` strictly increasing edges.
    pub edges: Vec<f64>,
    pub n_bins: usize,
}

impl DiscretizedFeature {
    pub fn occupancy(&self) -> Vec<u64> {
        let mut occ = vec![0u64; self.n_bins];
        for &b in &self.bins {
            occ[b as usize] += 1;
        }
        occ
    }
}

pub fn discretize(values: &[f64], n_bins: usize) -> Result<DiscretizedFeature> {
    discretize_with(values, n_bins, BinRange::default())
}

pub fn discretize_with(values: &[f64], n_bins: usize, range: BinRange) -> Result<DiscretizedFeature> {
    if n_bins < 2 {
        return Err(Error::InvalidParameter(format!("need at least 2 bins, got {n_bins}")));
    }
    if values.is_empty() {
        return Err(Error::InvalidParameter("cannot discretize an empty feature".into()));
    }
    if values.iter().any(|v| !v.is_finite()) {
        return Err(Error::InvalidParameter("feature contains non-finite values".into()));
    }
    let mut sorted = values.to_vec();
    sorted.sort_by(f64::total_cmp);
    let (mut lo, mut hi) = match range {
        BinRange::Percentile { low, high } => (percentile_sorted(&sorted, low), percentile_sorted(&sorted, high)),
        BinRange::MinMax => (sorted[0], sorted[sorted.len() - 1]),
    };
    if !(hi > lo) {
        // Degenerate spread: one unit-wide range around the value.
        lo -= 0.5;
        hi += 0.5;
    }
    let width = hi - lo;
    let edges = (0..=n_bins).map(|i| lo + width * i as f64 / n_bins as f64).collect();
    let top = (n_bins - 1) as f64;
    let bins = values
        .iter()
        .map(|&v| ((v - lo) / width * n_bins as f64).floor().clamp(0.0, top) as u32)
        .collect();
    Ok(DiscretizedFeature { bins, edges, n_bins })
}

fn entropy_of_counts(counts: &[u64]) -> f64 {
    let total: u64 = counts.iter().sum();
    if total == 0 {
        return 0.0;
    }
    let n = total as f64;
    let mut terms: Vec<f64> = counts
        .iter()
        .filter(|&&c| c > 0)
        .map(|&c| {
            let p = c as f64 / n;
            -p * p.log2()
        })
        .collect();
    sum_sorted(&mut terms)
}

/// Order-independent summation: identical term multisets give identical sums.
fn sum_sorted(terms: &mut [f64]) -> f64 {
    terms.sort_by(f64::total_cmp);
    terms.iter().sum()
}

/// Class entropy `H(C)` in bits from empirical class frequencies.
pub fn class_entropy(labels: &[ClassLabel]) -> f64 {
    entropy_of_counts(&class_counts(labels))
}

/// Sparse contingency table of a discrete key against the binary class.
/// Tables built on record shards merge by cell-wise addition.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct ClassHistogram<K: Ord> {
    cells: BTreeMap<K, [u64; 2]>,
}

impl<K: Ord + Copy> ClassHistogram<K> {
    pub fn new() -> Self {
        Self { cells: BTreeMap::new() }
    }

    pub fn add(&mut self, key: K, label: ClassLabel) {
        self.cells.entry(key).or_insert([0, 0])[label.index()] += 1;
    }

    pub fn merge(&mut self, other: &Self) {
        for (k, c) in &other.cells {
            let e = self.cells.entry(*k).or_insert([0, 0]);
            e[0] += c[0];
            e[1] += c[1];
        }
    }

    pub fn total(&self) -> u64 {
        self.cells.values().map(|c| c[0] + c[1]).sum()
    }

    /// Number of occupied (key, class) cells.
    pub fn occupied_cells(&self) -> usize {
        self.cells.values().map(|c| (c[0] > 0) as usize + (c[1] > 0) as usize).sum()
    }

    fn class_totals(&self) -> [u64; 2] {
        self.cells.values().fold([0, 0], |acc, c| [acc[0] + c[0], acc[1] + c[1]])
    }

    /// Plug-in `I(K;C)` in bits.
    pub fn mutual_information(&self) -> f64 {
        let n = self.total();
        if n == 0 {
            return 0.0;
        }
        let nf = n as f64;
        let class_totals = self.class_totals();
        let mut terms = Vec::with_capacity(2 * self.cells.len());
        for c in self.cells.values() {
            let n_key = (c[0] + c[1]) as f64;
            for (cls, &n_kc) in c.iter().enumerate() {
                if n_kc == 0 {
                    continue;
                }
                let n_kc = n_kc as f64;
                terms.push(n_kc / nf * (n_kc * nf / (n_key * class_totals[cls] as f64)).log2());
            }
        }
        sum_sorted(&mut terms)
    }
}

fn check_aligned(len: usize, labels: &[ClassLabel]) -> Result<()> {
    if len != labels.len() {
        return Err(Error::Data(format!("{len} feature values for {} labels", labels.len())));
    }
    Ok(())
}

/// `I(X;C)` in bits.
pub fn mutual_information(x: &DiscretizedFeature, labels: &[ClassLabel]) -> Result<f64> {
    check_aligned(x.bins.len(), labels)?;
    let mut h = ClassHistogram::new();
    for (&b, &l) in x.bins.iter().zip(labels) {
        h.add(b, l);
    }
    Ok(h.mutual_information())
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PairInformation {
    /// `I(Xi,Xj;C)` in bits.
    pub joint: f64,
    /// `I(Xi;Xj;C)` in bits; negative values indicate synergy.
    pub redundancy: f64,
    /// Occupied cells of the three-way table exceed a fifth of the records.
    pub sparse: bool,
}

pub fn pair_histogram(xi: &DiscretizedFeature, xj: &DiscretizedFeature, labels: &[ClassLabel]) -> Result<ClassHistogram<(u32, u32)>> {
    check_aligned(xi.bins.len(), labels)?;
    check_aligned(xj.bins.len(), labels)?;
    let mut h = ClassHistogram::new();
    for ((&a, &b), &l) in xi.bins.iter().zip(&xj.bins).zip(labels) {
        h.add((a, b), l);
    }
    Ok(h)
}

/// Joint relevance from the three-way table and the interaction term
/// `I(Xi;C) + I(Xj;C) - I(Xi,Xj;C)`.
pub fn pairwise_joint_mi(xi: &DiscretizedFeature, xj: &DiscretizedFeature, labels: &[ClassLabel]) -> Result<PairInformation> {
    let ii = mutual_information(xi, labels)?;
    let ij = mutual_information(xj, labels)?;
    let table = pair_histogram(xi, xj, labels)?;
    Ok(combine_pair(ii, ij, &table))
}

fn combine_pair(ii: f64, ij: f64, table: &ClassHistogram<(u32, u32)>) -> PairInformation {
    let raw_joint = table.mutual_information();
    let sum = ii + ij;
    let redundancy = sum - raw_joint;
    // Re-deriving the joint term from the stored redundancy makes
    // `joint == (ii + ij) - redundancy` hold bit for bit.
    let joint = sum - redundancy;
    PairInformation {
        joint,
        redundancy,
        sparse: table.occupied_cells() as f64 > table.total() as f64 / 5.0,
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClassCounts {
    pub normal: u64,
    pub pathological: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PairEntry {
    pub i: usize,
    pub j: usize,
    pub feature_i: String,
    pub feature_j: String,
    pub joint_bits: f64,
    pub redundancy_bits: f64,
    pub relative_joint: f64,
    pub relative_redundancy: f64,
    pub sparse: bool,
    /// A single feature carries more information than the pair (binning artefact).
    pub monotonicity_violation: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MiReport {
    pub feature_names: Vec<String>,
    pub n_bins: usize,
    pub class_counts: ClassCounts,
    pub class_entropy_bits: f64,
    pub intrinsic_bits: Vec<f64>,
    pub relative_intrinsic: Vec<f64>,
    /// Every unordered pair `i < j`, in row-major order.
    pub pairs: Vec<PairEntry>,
    pub warnings: Vec<String>,
}

impl MiReport {
    pub fn pair(&self, i: usize, j: usize) -> Option<&PairEntry> {
        let (a, b) = if i < j { (i, j) } else { (j, i) };
        self.pairs.iter().find(|p| p.i == a && p.j == b)
    }

    /// Square matrix of relative measures: intrinsic information on the
    /// diagonal, redundancy below it and joint information above it.
    pub fn matrix(&self) -> Vec<Vec<f64>> {
        let n = self.feature_names.len();
        let mut m = vec![vec![0.0; n]; n];
        for (i, row) in m.iter_mut().enumerate() {
            row[i] = self.relative_intrinsic[i];
        }
        for p in &self.pairs {
            m[p.i][p.j] = p.relative_joint;
            m[p.j][p.i] = p.relative_redundancy;
        }
        m
    }

    /// The matrix as CSV, values in percent rounded to one decimal.
    pub fn matrix_csv(&self) -> String {
        let mut out = String::from("feature");
        for name in &self.feature_names {
            out.push(',');
            out.push_str(name);
        }
        out.push('\n');
        for (name, row) in self.feature_names.iter().zip(self.matrix()) {
            out.push_str(name);
            for v in row {
                let pct = (v * 1000.0).round() / 10.0;
                // Avoid printing "-0.0".
                let pct = if pct == 0.0 { 0.0 } else { pct };
                out.push_str(&format!(",{pct:.1}"));
            }
            out.push('\n');
        }
        out
    }

    /// `joint == (Ii + Ij) - redundancy` on every stored pair, exactly.
    pub fn identity_holds(&self) -> bool {
        self.pairs.iter().all(|p| {
            let ii = self.intrinsic_bits[p.i];
            let ij = self.intrinsic_bits[p.j];
            p.joint_bits == (ii + ij) - p.redundancy_bits
        })
    }

    /// Competition rank (1 = best) of a feature's intrinsic information;
    /// tied features share the better rank.
    pub fn intrinsic_rank(&self, name: &str) -> Option<usize> {
        let idx = self.feature_names.iter().position(|n| n == name)?;
        let v = self.relative_intrinsic[idx];
        Some(1 + self.relative_intrinsic.iter().filter(|&&o| o > v).count())
    }
}

/// Computes every relevance, joint and redundancy measure over a dataset.
pub fn build_report(ds: &LabeledDataset, n_bins: usize) -> Result<MiReport> {
    build_report_with(ds, n_bins, BinRange::default())
}

pub fn build_report_with(ds: &LabeledDataset, n_bins: usize, range: BinRange) -> Result<MiReport> {
    if ds.feature_names.len() < 2 {
        return Err(Error::Data("report needs at least two features".into()));
    }
    let counts = ds.class_counts();
    for cls in ClassLabel::ALL {
        if counts[cls.index()] == 0 {
            return Err(Error::Data(format!(
                "no records labelled '{cls}'; relative measures need both classes"
            )));
        }
        if counts[cls.index()] < 2 {
            return Err(Error::Data(format!("class '{cls}' has fewer than 2 records")));
        }
    }
    let h = class_entropy(&ds.labels);
    let discretized = ds
        .columns
        .iter()
        .map(|c| discretize_with(c, n_bins, range))
        .collect::<Result<Vec<_>>>()?;
    let intrinsic_bits = discretized
        .iter()
        .map(|d| mutual_information(d, &ds.labels))
        .collect::<Result<Vec<_>>>()?;
    let relative_intrinsic = intrinsic_bits.iter().map(|v| v / h).collect();

    let mut pairs = Vec::new();
    let mut warnings = Vec::new();
    let n = ds.feature_names.len();
    for i in 0..n {
        for j in i + 1..n {
            let table = pair_histogram(&discretized[i], &discretized[j], &ds.labels)?;
            let info = combine_pair(intrinsic_bits[i], intrinsic_bits[j], &table);
            let violation = intrinsic_bits[i] > info.joint + 1e-12 || intrinsic_bits[j] > info.joint + 1e-12;
            if info.sparse {
                warnings.push(format!(
                    "sparse histogram for ({}, {}): occupied cells exceed N/5",
                    ds.feature_names[i], ds.feature_names[j]
                ));
            }
            if violation {
                warnings.push(format!(
                    "joint information of ({}, {}) below an individual relevance",
                    ds.feature_names[i], ds.feature_names[j]
                ));
            }
            if info.joint != (intrinsic_bits[i] + intrinsic_bits[j]) - info.redundancy {
                return Err(Error::Data(format!(
                    "interaction identity broken for ({}, {})",
                    ds.feature_names[i], ds.feature_names[j]
                )));
            }
            pairs.push(PairEntry {
                i,
                j,
                feature_i: ds.feature_names[i].clone(),
                feature_j: ds.feature_names[j].clone(),
                joint_bits: info.joint,
                redundancy_bits: info.redundancy,
                relative_joint: info.joint / h,
                relative_redundancy: info.redundancy / h,
                sparse: info.sparse,
                monotonicity_violation: violation,
            });
        }
    }
    Ok(MiReport {
        feature_names: ds.feature_names.clone(),
        n_bins,
        class_counts: ClassCounts {
            normal: counts[0],
            pathological: counts[1],
        },
        class_entropy_bits: h,
        intrinsic_bits,
        relative_intrinsic,
        pairs,
        warnings,
    })
}
