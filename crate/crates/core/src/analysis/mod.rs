//! Exploratory analysis of feature tables with outcomes: class balance,
//! missing-value handling, per-class distributions, Spearman correlation,
//! Mann–Whitney testing, univariate ROC, volume analysis, and basic
//! statistics.
//!
//! A loaded [`FeatureTable`] is immutable; every analysis reads it and
//! returns plain result structs ordered by feature name, so output never
//! depends on execution order.

pub mod mw;
pub mod rank;
pub mod roc;

use std::collections::{BTreeMap, BTreeSet};
use std::path::{Path, PathBuf};

use crate::catalog::Table;

pub use mw::{mann_whitney, MwRow};
pub use rank::{spearman, spearman_matrix, SpearmanMatrix};
pub use roc::{univariate_roc, volume_analysis, PrCurve, RocRow, VolumeAnalysis, VolumeCorrRow};

#[derive(Debug, thiserror::Error)]
pub enum AnalysisError {
    #[error("cannot read {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("malformed CSV: {0}")]
    BadCsv(String),
    #[error("outcome column {0:?} not found")]
    MissingOutcomeColumn(String),
    #[error("no feature columns remain after filtering")]
    NoFeatureColumns,
    #[error("duplicate patient id {0:?}")]
    DuplicatePatient(String),
    #[error("every row/column was dropped; nothing left to analyze")]
    EverythingDropped,
    #[error("unknown class label {0:?}")]
    UnknownClass(String),
    #[error("unknown feature {0:?}")]
    UnknownFeature(String),
    #[error("analysis requires a binary outcome, found {found} classes")]
    NotBinary { found: usize },
    #[error("class {label:?} has only {n} usable samples")]
    TooFewSamples { label: String, n: usize },
}

/// A feature matrix with outcomes. Row order is load order; the outcome is
/// kept as raw text with the empty string meaning "missing label".
#[derive(Debug, Clone, PartialEq)]
pub struct FeatureTable {
    pub source: PathBuf,
    pub patients: Vec<String>,
    pub outcome_name: String,
    pub outcomes: Vec<String>,
    pub features: Vec<String>,
    /// `values[row][col]`, aligned with `patients` × `features`.
    pub values: Vec<Vec<Option<f64>>>,
}

/// Outcome labels (lexicographic, empty string first when present) with
/// counts and fractions over all loaded patients.
#[derive(Debug, Clone, PartialEq)]
pub struct ClassSummary {
    pub labels: Vec<String>,
    pub counts: Vec<usize>,
    pub balance: Vec<f64>,
}

impl ClassSummary {
    pub fn of(outcomes: &[String]) -> Self {
        let mut counts: BTreeMap<&str, usize> = BTreeMap::new();
        for o in outcomes {
            *counts.entry(o.as_str()).or_insert(0) += 1;
        }
        let total = outcomes.len() as f64;
        let labels: Vec<String> = counts.keys().map(|s| s.to_string()).collect();
        let counts_v: Vec<usize> = counts.values().copied().collect();
        let balance = counts_v.iter().map(|&c| c as f64 / total).collect();
        ClassSummary {
            labels,
            counts: counts_v,
            balance,
        }
    }
}

/// Column filters applied at load time, in order: drop patients, then
/// include/exclude feature columns.
#[derive(Debug, Clone, Default)]
pub struct LoadSpec {
    pub outcome: String,
    pub include: Option<Vec<String>>,
    pub exclude: Vec<String>,
    pub drop_patients: Vec<String>,
}

fn parse_cell(text: &str) -> Option<f64> {
    let t = text.trim();
    if t.is_empty() || t.eq_ignore_ascii_case("nan") || t.eq_ignore_ascii_case("na") {
        return None;
    }
    t.parse().ok()
}

fn read_csv(path: &Path) -> Result<(Vec<String>, Vec<Vec<String>>), AnalysisError> {
    let file = std::fs::File::open(path).map_err(|source| AnalysisError::Io {
        path: path.to_path_buf(),
        source,
    })?;
    let mut reader = csv::ReaderBuilder::new().flexible(false).from_reader(file);
    let headers: Vec<String> = reader
        .headers()
        .map_err(|e| AnalysisError::BadCsv(e.to_string()))?
        .iter()
        .map(|h| h.trim().to_string())
        .collect();
    if headers.is_empty() {
        return Err(AnalysisError::BadCsv(format!("{} has an empty header", path.display())));
    }
    let mut rows = Vec::new();
    for record in reader.records() {
        let record = record.map_err(|e| AnalysisError::BadCsv(e.to_string()))?;
        rows.push(record.iter().map(|c| c.to_string()).collect());
    }
    Ok((headers, rows))
}

/// Load a feature CSV (first column = patient id), optionally merging a
/// clinical CSV on patient id. Feature columns come from the feature CSV
/// only; the outcome column may live in either file (the clinical file wins
/// when both have it).
pub fn load(
    path: &Path,
    clinical: Option<&Path>,
    spec: &LoadSpec,
) -> Result<(FeatureTable, ClassSummary), AnalysisError> {
    let (headers, rows) = read_csv(path)?;

    let clinical_data: Option<(Vec<String>, BTreeMap<String, Vec<String>>)> = match clinical {
        None => None,
        Some(cpath) => {
            let (cheaders, crows) = read_csv(cpath)?;
            let mut by_id = BTreeMap::new();
            for row in crows {
                if row.is_empty() {
                    continue;
                }
                let id = row[0].clone();
                if by_id.insert(id.clone(), row).is_some() {
                    return Err(AnalysisError::DuplicatePatient(format!("{id} (clinical table)")));
                }
            }
            Some((cheaders, by_id))
        }
    };

    let outcome_in_clinical = clinical_data
        .as_ref()
        .and_then(|(h, _)| h.iter().position(|c| *c == spec.outcome));
    let outcome_in_features = headers.iter().skip(1).position(|c| *c == spec.outcome).map(|i| i + 1);
    if outcome_in_clinical.is_none() && outcome_in_features.is_none() {
        return Err(AnalysisError::MissingOutcomeColumn(spec.outcome.clone()));
    }

    // Feature columns: everything except the id column and the outcome.
    let mut feature_cols: Vec<(usize, String)> = headers
        .iter()
        .enumerate()
        .skip(1)
        .filter(|(i, name)| Some(*i) != outcome_in_features && !name.is_empty())
        .map(|(i, name)| (i, name.clone()))
        .collect();
    if let Some(include) = &spec.include {
        feature_cols.retain(|(_, name)| include.contains(name));
    }
    feature_cols.retain(|(_, name)| !spec.exclude.contains(name));
    if feature_cols.is_empty() {
        return Err(AnalysisError::NoFeatureColumns);
    }

    let mut patients = Vec::new();
    let mut outcomes = Vec::new();
    let mut values = Vec::new();
    let mut seen = BTreeSet::new();
    for row in &rows {
        if row.is_empty() {
            continue;
        }
        let id = row[0].clone();
        if spec.drop_patients.contains(&id) {
            continue;
        }
        if !seen.insert(id.clone()) {
            return Err(AnalysisError::DuplicatePatient(id));
        }
        let outcome = match (outcome_in_clinical, &clinical_data) {
            (Some(ci), Some((_, by_id))) => by_id
                .get(&id)
                .and_then(|crow| crow.get(ci))
                .map(|s| s.trim().to_string())
                .unwrap_or_default(),
            _ => outcome_in_features
                .and_then(|fi| row.get(fi))
                .map(|s| s.trim().to_string())
                .unwrap_or_default(),
        };
        let cells: Vec<Option<f64>> = feature_cols
            .iter()
            .map(|(i, _)| row.get(*i).map(|c| c.as_str()).and_then(parse_cell))
            .collect();
        patients.push(id);
        outcomes.push(outcome);
        values.push(cells);
    }

    let summary = ClassSummary::of(&outcomes);
    let table = FeatureTable {
        source: path.to_path_buf(),
        patients,
        outcome_name: spec.outcome.clone(),
        outcomes,
        features: feature_cols.into_iter().map(|(_, name)| name).collect(),
        values,
    };
    Ok((table, summary))
}

impl FeatureTable {
    pub fn feature_index(&self, name: &str) -> Option<usize> {
        self.features.iter().position(|f| f == name)
    }

    /// Distinct non-empty outcome labels in lexicographic order.
    pub fn class_labels(&self) -> Vec<String> {
        let mut set: BTreeSet<&str> = self.outcomes.iter().map(|s| s.as_str()).collect();
        set.remove("");
        set.into_iter().map(|s| s.to_string()).collect()
    }

    /// The two labels of a binary table, sorted; `NotBinary` otherwise. The
    /// second label (lexicographically larger) is the positive class.
    pub fn binary_labels(&self) -> Result<(String, String), AnalysisError> {
        let labels = self.class_labels();
        if labels.len() != 2 {
            return Err(AnalysisError::NotBinary { found: labels.len() });
        }
        Ok((labels[0].clone(), labels[1].clone()))
    }

    /// Feature names in output order (sorted).
    pub fn sorted_features(&self) -> Vec<String> {
        let mut names = self.features.clone();
        names.sort();
        names
    }
}

/// Which axis `handle_nan` prunes.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum NanAxis {
    Patients,
    Features,
}

/// Drop incomplete rows (patients axis: any missing feature or a missing
/// outcome) or incomplete columns (features axis). Returns the pruned table
/// and the dropped ids/names.
pub fn handle_nan(table: &FeatureTable, axis: NanAxis) -> Result<(FeatureTable, Vec<String>), AnalysisError> {
    let mut out = table.clone();
    let mut dropped = Vec::new();
    match axis {
        NanAxis::Patients => {
            let keep: Vec<bool> = table
                .values
                .iter()
                .zip(&table.outcomes)
                .map(|(row, outcome)| !outcome.is_empty() && row.iter().all(|c| c.is_some()))
                .collect();
            for (i, &k) in keep.iter().enumerate() {
                if !k {
                    dropped.push(table.patients[i].clone());
                }
            }
            let filter = |i: &usize| keep[*i];
            out.patients = (0..table.patients.len()).filter(filter).map(|i| table.patients[i].clone()).collect();
            out.outcomes = (0..table.outcomes.len()).filter(filter).map(|i| table.outcomes[i].clone()).collect();
            out.values = (0..table.values.len()).filter(filter).map(|i| table.values[i].clone()).collect();
            if out.patients.is_empty() {
                return Err(AnalysisError::EverythingDropped);
            }
        }
        NanAxis::Features => {
            let keep: Vec<bool> = (0..table.features.len())
                .map(|c| table.values.iter().all(|row| row[c].is_some()))
                .collect();
            for (c, &k) in keep.iter().enumerate() {
                if !k {
                    dropped.push(table.features[c].clone());
                }
            }
            out.features = (0..table.features.len()).filter(|c| keep[*c]).map(|c| table.features[c].clone()).collect();
            out.values = table
                .values
                .iter()
                .map(|row| (0..row.len()).filter(|c| keep[*c]).map(|c| row[c]).collect())
                .collect();
            if out.features.is_empty() {
                return Err(AnalysisError::EverythingDropped);
            }
        }
    }
    Ok((out, dropped))
}

/// Per-class histogram of one feature over 20 equal-width bins spanning the
/// pooled range of the selected classes (a constant feature collapses to a
/// single bin).
#[derive(Debug, Clone, PartialEq)]
pub struct DistributionPlot {
    pub feature: String,
    /// `bins + 1` edges, ascending.
    pub bin_edges: Vec<f64>,
    /// (class label, per-bin counts), one entry per selected class.
    pub series: Vec<(String, Vec<u64>)>,
}

pub fn distributions(
    table: &FeatureTable,
    feature: &str,
    classes: Option<&[String]>,
) -> Result<DistributionPlot, AnalysisError> {
    let col = table
        .feature_index(feature)
        .ok_or_else(|| AnalysisError::UnknownFeature(feature.to_string()))?;

    let mut present: BTreeSet<&str> = table.outcomes.iter().map(|s| s.as_str()).collect();
    present.remove("");
    let selected: Vec<String> = match classes {
        Some(subset) => {
            for c in subset {
                if !present.contains(c.as_str()) {
                    return Err(AnalysisError::UnknownClass(c.clone()));
                }
            }
            let mut s = subset.to_vec();
            s.sort();
            s.dedup();
            s
        }
        None => present.into_iter().map(|s| s.to_string()).collect(),
    };

    let pooled: Vec<f64> = table
        .outcomes
        .iter()
        .zip(&table.values)
        .filter(|(o, _)| selected.iter().any(|s| s == *o))
        .filter_map(|(_, row)| row[col])
        .collect();
    if pooled.is_empty() {
        return Err(AnalysisError::EverythingDropped);
    }
    let min = pooled.iter().copied().fold(f64::INFINITY, f64::min);
    let max = pooled.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let bins = if max > min { 20 } else { 1 };
    let width = if max > min { (max - min) / bins as f64 } else { 1.0 };

    let bin_edges: Vec<f64> = (0..=bins).map(|b| min + b as f64 * width).collect();
    let mut series = Vec::new();
    for class in &selected {
        let mut counts = vec![0u64; bins];
        for (o, row) in table.outcomes.iter().zip(&table.values) {
            if o == class {
                if let Some(x) = row[col] {
                    let b = (((x - min) / width) as usize).min(bins - 1);
                    counts[b] += 1;
                }
            }
        }
        series.push((class.clone(), counts));
    }
    Ok(DistributionPlot {
        feature: feature.to_string(),
        bin_edges,
        series,
    })
}

/// One row of the basic-statistics report. Binary-only fields stay `None`
/// for multi-class tables; `volume_spearman` is `|ρ|` against the named
/// volume column when one was given.
#[derive(Debug, Clone, PartialEq)]
pub struct StatRow {
    pub feature: String,
    pub n_missing: usize,
    pub mean: Option<f64>,
    pub std: Option<f64>,
    pub min: Option<f64>,
    pub max: Option<f64>,
    pub mw_p_corrected: Option<f64>,
    pub roc_auc: Option<f64>,
    pub volume_spearman: Option<f64>,
}

/// Thresholds used for highlighting and significance, defaulting to the
/// documented alpha 0.05 / AUC 0.70 / correlation 0.75.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Thresholds {
    pub alpha: f64,
    pub auc: f64,
    pub corr: f64,
}

impl Default for Thresholds {
    fn default() -> Self {
        Thresholds {
            alpha: 0.05,
            auc: 0.70,
            corr: 0.75,
        }
    }
}

/// Basic per-feature statistics, with Mann–Whitney and ROC columns only for
/// binary tables and the volume correlation only when a volume column is
/// named (and exists).
pub fn basic_stats(
    table: &FeatureTable,
    volume_feature: Option<&str>,
    thresholds: &Thresholds,
) -> Vec<StatRow> {
    let binary = table.binary_labels().is_ok();
    let mw: BTreeMap<String, Option<f64>> = if binary {
        mann_whitney(table, thresholds.alpha)
            .map(|rows| rows.into_iter().map(|r| (r.feature, r.p_corrected)).collect())
            .unwrap_or_default()
    } else {
        BTreeMap::new()
    };
    let auc: BTreeMap<String, Option<f64>> = if binary {
        univariate_roc(table, thresholds.auc)
            .map(|rows| rows.into_iter().map(|r| (r.feature, r.auc)).collect())
            .unwrap_or_default()
    } else {
        BTreeMap::new()
    };
    let volume_col = volume_feature.and_then(|name| table.feature_index(name));

    let mut out = Vec::new();
    for name in table.sorted_features() {
        let col = table.feature_index(&name).expect("listed feature");
        let values: Vec<f64> = table.values.iter().filter_map(|row| row[col]).collect();
        let n_missing = table.values.len() - values.len();
        let (mean, std, min, max) = if values.is_empty() {
            (None, None, None, None)
        } else {
            let s = crate::util::IntensityStats::of(&values).expect("non-empty");
            (Some(s.mean), Some(s.std), Some(s.min), Some(s.max))
        };
        let volume_spearman = volume_col.and_then(|vc| {
            let pairs: Vec<(f64, f64)> = table
                .values
                .iter()
                .filter_map(|row| match (row[col], row[vc]) {
                    (Some(a), Some(b)) => Some((a, b)),
                    _ => None,
                })
                .collect();
            spearman(&pairs).map(f64::abs)
        });
        out.push(StatRow {
            feature: name.clone(),
            n_missing,
            mean,
            std,
            min,
            max,
            mw_p_corrected: mw.get(&name).copied().flatten(),
            roc_auc: auc.get(&name).copied().flatten(),
            volume_spearman,
        });
    }
    out
}

fn fmt_opt(x: Option<f64>) -> String {
    x.map(|v| format!("{v}")).unwrap_or_default()
}

/// Render stat rows as a CSV-ready table. Binary-only columns appear only
/// when `binary` is set, the volume column only when `volume` is set.
pub fn stats_table(rows: &[StatRow], binary: bool, volume: bool) -> Table {
    let mut columns = vec![
        "feature".to_string(),
        "n_missing".to_string(),
        "mean".to_string(),
        "std".to_string(),
        "min".to_string(),
        "max".to_string(),
    ];
    if binary {
        columns.push("mw_p_corrected".to_string());
        columns.push("roc_auc".to_string());
    }
    if volume {
        columns.push("volume_spearman".to_string());
    }
    let rows_out = rows
        .iter()
        .map(|r| {
            let mut cells = vec![
                r.feature.clone(),
                r.n_missing.to_string(),
                fmt_opt(r.mean),
                fmt_opt(r.std),
                fmt_opt(r.min),
                fmt_opt(r.max),
            ];
            if binary {
                cells.push(fmt_opt(r.mw_p_corrected));
                cells.push(fmt_opt(r.roc_auc));
            }
            if volume {
                cells.push(fmt_opt(r.volume_spearman));
            }
            cells
        })
        .collect();
    Table {
        columns,
        rows: rows_out,
    }
}

#[cfg(test)]
pub(crate) fn table_from(
    features: &[&str],
    rows: &[(&str, &str, &[Option<f64>])],
) -> FeatureTable {
    FeatureTable {
        source: PathBuf::from("test.csv"),
        patients: rows.iter().map(|(id, _, _)| id.to_string()).collect(),
        outcome_name: "outcome".into(),
        outcomes: rows.iter().map(|(_, o, _)| o.to_string()).collect(),
        features: features.iter().map(|f| f.to_string()).collect(),
        values: rows.iter().map(|(_, _, v)| v.to_vec()).collect(),
    }
}
