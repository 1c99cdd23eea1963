//! Series-level quality control.
//!
//! Nine checks cover the defects that make a CT series unusable for
//! radiomics: wrong modality, non-axial projection, missing or overlapping
//! slices, too few slices, slice thickness problems, pixel spacing out of
//! range, an unknown reconstruction kernel, wrong in-plane resolution, and
//! absent rescale tags. A check runs only when the spec carries its
//! parameter (or its boolean toggle for the parameterless checks); disabled
//! checks are reported as skipped and stay out of the overall verdict.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::catalog::{report_ids, ExcludedSeries, SeriesRecord, Table};

/// The only projection the toolkit accepts.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Projection {
    Axial,
}

/// What a dataset must look like. Leaving a field out of the JSON disables
/// the corresponding check.
#[derive(Debug, Clone, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct QualitySpec {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub target_modality: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub projection: Option<Projection>,
    /// Toggle for the slice-consistency (missing/overlapping slices) check.
    #[serde(default, skip_serializing_if = "std::ops::Not::not")]
    pub check_slice_consistency: bool,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub min_slice_count: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub thickness_range: Option<(f64, f64)>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub spacing_range: Option<(f64, f64)>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub kernel_whitelist: Option<Vec<String>>,
    /// Required (rows, columns).
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub required_in_plane: Option<(u32, u32)>,
    /// Toggle for the rescale slope/intercept presence check.
    #[serde(default, skip_serializing_if = "std::ops::Not::not")]
    pub check_slope_intercept: bool,
}

#[derive(Debug, thiserror::Error)]
pub enum QcError {
    #[error("invalid quality spec: {0}")]
    InvalidSpec(String),
}

impl QualitySpec {
    /// Every range must be ordered and counts positive.
    pub fn validate(&self) -> Result<(), QcError> {
        let check_range = |name: &str, r: Option<(f64, f64)>| -> Result<(), QcError> {
            if let Some((lo, hi)) = r {
                if !(lo.is_finite() && hi.is_finite() && lo <= hi) {
                    return Err(QcError::InvalidSpec(format!("{name} range ({lo}, {hi}) is not ordered")));
                }
            }
            Ok(())
        };
        check_range("thickness", self.thickness_range)?;
        check_range("spacing", self.spacing_range)?;
        if let Some(n) = self.min_slice_count {
            if n == 0 {
                return Err(QcError::InvalidSpec("min_slice_count must be at least 1".into()));
            }
        }
        if let Some((r, c)) = self.required_in_plane {
            if r == 0 || c == 0 {
                return Err(QcError::InvalidSpec("required_in_plane must be positive".into()));
            }
        }
        Ok(())
    }
}

/// The nine checks, in report column order.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
pub enum CheckKind {
    Modality,
    Projection,
    SliceConsistency,
    SliceCount,
    Thickness,
    Spacing,
    Kernel,
    Resolution,
    SlopeIntercept,
}

impl CheckKind {
    pub const ALL: [CheckKind; 9] = [
        CheckKind::Modality,
        CheckKind::Projection,
        CheckKind::SliceConsistency,
        CheckKind::SliceCount,
        CheckKind::Thickness,
        CheckKind::Spacing,
        CheckKind::Kernel,
        CheckKind::Resolution,
        CheckKind::SlopeIntercept,
    ];

    pub fn name(&self) -> &'static str {
        match self {
            CheckKind::Modality => "modality",
            CheckKind::Projection => "projection",
            CheckKind::SliceConsistency => "slice_consistency",
            CheckKind::SliceCount => "slice_count",
            CheckKind::Thickness => "thickness",
            CheckKind::Spacing => "spacing",
            CheckKind::Kernel => "kernel",
            CheckKind::Resolution => "resolution",
            CheckKind::SlopeIntercept => "slope_intercept",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CheckFlag {
    Pass,
    Fail,
    Skipped,
}

impl CheckFlag {
    fn of(pass: bool) -> CheckFlag {
        if pass {
            CheckFlag::Pass
        } else {
            CheckFlag::Fail
        }
    }

    pub fn as_cell(&self) -> &'static str {
        match self {
            CheckFlag::Pass => "1",
            CheckFlag::Fail => "0",
            CheckFlag::Skipped => "skipped",
        }
    }
}

/// Verdict for one series.
#[derive(Debug, Clone, PartialEq)]
pub struct SeriesQuality {
    /// Patient id, suffixed when the patient has several series.
    pub report_id: String,
    pub patient_id: String,
    pub series_uid: String,
    pub flags: BTreeMap<CheckKind, CheckFlag>,
    /// AND of the enabled checks; skipped checks do not participate.
    pub overall: bool,
    pub notes: Vec<String>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct QualityReport {
    pub rows: Vec<SeriesQuality>,
}

impl QualityReport {
    pub fn to_table(&self) -> Table {
        let mut columns = vec!["patient".to_string(), "series_uid".to_string()];
        columns.extend(CheckKind::ALL.iter().map(|c| c.name().to_string()));
        columns.push("overall".into());
        columns.push("notes".into());
        let rows = self
            .rows
            .iter()
            .map(|r| {
                let mut row = vec![r.report_id.clone(), r.series_uid.clone()];
                row.extend(CheckKind::ALL.iter().map(|c| r.flags[c].as_cell().to_string()));
                row.push(if r.overall { "1" } else { "0" }.to_string());
                row.push(r.notes.join("; "));
                row
            })
            .collect();
        Table { columns, rows }
    }
}

const COSINE_TOL: f64 = 1e-3;
const THICKNESS_EQ_TOL: f64 = 1e-3;

/// Run every enabled check against every record.
///
/// `excluded` series (those that failed the scan's geometry invariants) are
/// appended as all-fail rows carrying the exclusion reason, so the report
/// always accounts for everything the scan saw.
pub fn quality_check(records: &[SeriesRecord], excluded: &[ExcludedSeries], spec: &QualitySpec) -> QualityReport {
    let ids = report_ids(records);
    let mut rows: Vec<SeriesQuality> = records
        .iter()
        .zip(&ids)
        .map(|(record, id)| check_record(record, id.clone(), spec))
        .collect();

    for ex in excluded {
        let flags = CheckKind::ALL.iter().map(|&k| (k, CheckFlag::Fail)).collect();
        rows.push(SeriesQuality {
            report_id: ex.patient_id.clone(),
            patient_id: ex.patient_id.clone(),
            series_uid: ex.series_uid.clone(),
            flags,
            overall: false,
            notes: vec![format!("unusable series: {}", ex.reason)],
        });
    }

    rows.sort_by(|a, b| a.report_id.cmp(&b.report_id).then(a.series_uid.cmp(&b.series_uid)));
    QualityReport { rows }
}

fn check_record(record: &SeriesRecord, report_id: String, spec: &QualitySpec) -> SeriesQuality {
    let slices = &record.slices;
    let mut flags = BTreeMap::new();
    let mut notes = Vec::new();

    let modality = match &spec.target_modality {
        Some(target) => CheckFlag::of(slices.iter().all(|s| &s.modality == target)),
        None => CheckFlag::Skipped,
    };
    flags.insert(CheckKind::Modality, modality);

    let projection = match spec.projection {
        Some(Projection::Axial) => CheckFlag::of(slices.iter().all(|s| {
            let o = &s.orientation;
            let row_ok =
                (o[0] - 1.0).abs() <= COSINE_TOL && o[1].abs() <= COSINE_TOL && o[2].abs() <= COSINE_TOL;
            let col_ok =
                o[3].abs() <= COSINE_TOL && (o[4] - 1.0).abs() <= COSINE_TOL && o[5].abs() <= COSINE_TOL;
            row_ok && col_ok
        })),
        None => CheckFlag::Skipped,
    };
    flags.insert(CheckKind::Projection, projection);

    let consistency = if spec.check_slice_consistency {
        let keys: Vec<f64> = slices.iter().map(|s| s.position_along_normal()).collect();
        let gaps: Vec<f64> = keys.windows(2).map(|w| w[1] - w[0]).collect();
        match crate::util::median(&gaps) {
            Some(m) if m > 0.0 => {
                let bad = gaps.iter().any(|&g| g > 1.5 * m || g < 0.5 * m);
                if bad {
                    notes.push(format!("slice gaps deviate from the median {m} mm"));
                }
                CheckFlag::of(!bad)
            }
            Some(_) => {
                notes.push("slices share positions".into());
                CheckFlag::Fail
            }
            // A single slice has no gaps to judge.
            None => CheckFlag::Pass,
        }
    } else {
        CheckFlag::Skipped
    };
    flags.insert(CheckKind::SliceConsistency, consistency);

    let count = match spec.min_slice_count {
        Some(min) => CheckFlag::of(slices.len() >= min),
        None => CheckFlag::Skipped,
    };
    flags.insert(CheckKind::SliceCount, count);

    let thickness = match spec.thickness_range {
        Some((lo, hi)) => {
            let values: Vec<f64> = slices.iter().filter_map(|s| s.slice_thickness).collect();
            if values.len() != slices.len() {
                notes.push("slice thickness tag missing on some slices".into());
                CheckFlag::Fail
            } else {
                let consistent = values.windows(2).all(|w| (w[0] - w[1]).abs() <= THICKNESS_EQ_TOL);
                let in_range = values.iter().all(|&t| t >= lo && t <= hi);
                CheckFlag::of(consistent && in_range)
            }
        }
        None => CheckFlag::Skipped,
    };
    flags.insert(CheckKind::Thickness, thickness);

    let spacing = match spec.spacing_range {
        Some((lo, hi)) => CheckFlag::of(slices.iter().all(|s| {
            let (r, c) = s.pixel_spacing;
            r >= lo && r <= hi && c >= lo && c <= hi
        })),
        None => CheckFlag::Skipped,
    };
    flags.insert(CheckKind::Spacing, spacing);

    let kernel = match &spec.kernel_whitelist {
        Some(whitelist) => {
            let allowed: Vec<String> = whitelist.iter().map(|k| k.to_ascii_uppercase()).collect();
            CheckFlag::of(slices.iter().all(|s| {
                s.convolution_kernel
                    .as_ref()
                    .map(|k| allowed.contains(&k.to_ascii_uppercase()))
                    .unwrap_or(false)
            }))
        }
        None => CheckFlag::Skipped,
    };
    flags.insert(CheckKind::Kernel, kernel);

    let resolution = match spec.required_in_plane {
        Some((rows, cols)) => CheckFlag::of(slices.iter().all(|s| s.rows == rows && s.cols == cols)),
        None => CheckFlag::Skipped,
    };
    flags.insert(CheckKind::Resolution, resolution);

    let slope_intercept = if spec.check_slope_intercept {
        CheckFlag::of(slices.iter().all(|s| s.rescale_slope.is_some() && s.rescale_intercept.is_some()))
    } else {
        CheckFlag::Skipped
    };
    flags.insert(CheckKind::SlopeIntercept, slope_intercept);

    let overall = flags.values().all(|&f| f != CheckFlag::Fail);
    SeriesQuality {
        report_id,
        patient_id: record.patient_id.clone(),
        series_uid: record.series_uid.clone(),
        flags,
        overall,
        notes,
    }
}
