//! Handcrafted radiomics features: first-order statistics, shape
//! descriptors, and gray-level co-occurrence texture, extracted from a
//! (volume, mask) pair into a per-patient feature table.
//!
//! The catalog is deliberately bounded — 14 first-order + 5 shape + 6 GLCM
//! features — with every formula spelled out in the submodules so each value
//! can be re-derived by brute force in tests. Names follow the
//! `original_<family>_<FeatureName>` convention.

pub mod firstorder;
pub mod glcm;
pub mod shape;

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::preprocess::{discretize, reshape, reshape_mask, Discretization, Interpolation, ReshapeTarget};
use crate::volume::{Mask, Volume};

pub use firstorder::FIRST_ORDER_NAMES;
pub use glcm::GLCM_NAMES;
pub use shape::SHAPE_NAMES;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Family {
    Firstorder,
    Shape,
    Glcm,
}

impl Family {
    pub fn prefix(self) -> &'static str {
        match self {
            Family::Firstorder => "firstorder",
            Family::Shape => "shape",
            Family::Glcm => "glcm",
        }
    }

    fn names(self) -> &'static [&'static str] {
        match self {
            Family::Firstorder => FIRST_ORDER_NAMES,
            Family::Shape => SHAPE_NAMES,
            Family::Glcm => GLCM_NAMES,
        }
    }
}

const ALL_FAMILIES: [Family; 3] = [Family::Firstorder, Family::Shape, Family::Glcm];

fn default_discretization() -> Discretization {
    Discretization::FixedBinWidth(25.0)
}

fn default_families() -> Vec<Family> {
    ALL_FAMILIES.to_vec()
}

fn default_distance() -> usize {
    1
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExtractionParams {
    #[serde(default = "default_discretization")]
    pub discretization: Discretization,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub resample_spacing: Option<[f64; 3]>,
    #[serde(default = "default_families")]
    pub feature_families: Vec<Family>,
    #[serde(default = "default_distance")]
    pub glcm_distance: usize,
}

impl Default for ExtractionParams {
    fn default() -> Self {
        ExtractionParams {
            discretization: default_discretization(),
            resample_spacing: None,
            feature_families: default_families(),
            glcm_distance: default_distance(),
        }
    }
}

impl ExtractionParams {
    pub fn validate(&self) -> Result<(), FeatureError> {
        let bad = |msg: &str| Err(FeatureError::InvalidParams(msg.to_string()));
        match self.discretization {
            Discretization::FixedBinCount(n) if n < 2 => return bad("fixed_bin_count must be at least 2"),
            Discretization::FixedBinWidth(w) if !(w > 0.0) || !w.is_finite() => {
                return bad("fixed_bin_width must be positive and finite")
            }
            _ => {}
        }
        if self.feature_families.is_empty() {
            return bad("feature_families must not be empty");
        }
        if let Some(s) = self.resample_spacing {
            if s.iter().any(|&x| !(x > 0.0) || !x.is_finite()) {
                return bad("resample_spacing must be positive and finite");
            }
        }
        if self.glcm_distance == 0 {
            return bad("glcm_distance must be at least 1");
        }
        Ok(())
    }
}

#[derive(Debug, thiserror::Error, PartialEq)]
pub enum FeatureError {
    #[error("mask selects no voxels")]
    EmptyMask,
    #[error("volume and mask geometry differ: {0}")]
    GeometryMismatch(String),
    #[error("invalid extraction parameters: {0}")]
    InvalidParams(String),
}

/// The fixed column order: families in catalog order, feature names
/// alphabetical within each family.
pub fn feature_columns(params: &ExtractionParams) -> Vec<String> {
    let mut out = Vec::new();
    for family in ALL_FAMILIES {
        if params.feature_families.contains(&family) {
            for name in family.names() {
                out.push(format!("original_{}_{}", family.prefix(), name));
            }
        }
    }
    out
}

/// Collect the masked voxel values, checking geometry first.
fn roi_values(v: &Volume, m: &Mask) -> Result<Vec<f64>, FeatureError> {
    if !v.geom.compatible(&m.geom) {
        return Err(FeatureError::GeometryMismatch(format!(
            "volume dims {:?} vs mask dims {:?}",
            v.geom.dims, m.geom.dims
        )));
    }
    let values: Vec<f64> = v
        .data
        .iter()
        .zip(&m.data)
        .filter(|(_, &flag)| flag == 1)
        .map(|(&x, _)| x)
        .collect();
    if values.is_empty() {
        return Err(FeatureError::EmptyMask);
    }
    Ok(values)
}

/// Discretize ROI values to 1-based levels. A constant ROI collapses to a
/// single level regardless of mode, so downstream entropy-style features get
/// their defined degenerate values instead of an error.
pub fn roi_levels(values: &[f64], mode: &Discretization) -> Vec<u32> {
    let min = values.iter().copied().fold(f64::INFINITY, f64::min);
    let max = values.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    if min == max {
        return vec![1; values.len()];
    }
    discretize(values, mode).expect("non-constant values cannot be degenerate")
}

/// Extract every enabled feature for one patient. Values are `None` when a
/// feature is undefined for this ROI (e.g. GLCM Correlation on a single
/// gray level).
pub fn extract_one(
    v: &Volume,
    m: &Mask,
    params: &ExtractionParams,
) -> Result<BTreeMap<String, Option<f64>>, FeatureError> {
    params.validate()?;
    if !v.geom.compatible(&m.geom) {
        return Err(FeatureError::GeometryMismatch(format!(
            "volume dims {:?} vs mask dims {:?}",
            v.geom.dims, m.geom.dims
        )));
    }

    let resampled = params.resample_spacing.map(|s| {
        let target = ReshapeTarget::Spacing(s);
        (reshape(v, &target, Interpolation::Trilinear), reshape_mask(m, &target))
    });
    let (vol, mask) = match &resampled {
        Some((rv, rm)) => (rv, rm),
        None => (v, m),
    };

    let values = roi_values(vol, mask)?;
    let mut out = BTreeMap::new();

    if params.feature_families.contains(&Family::Firstorder) {
        for (name, value) in firstorder::first_order(&values, &params.discretization) {
            out.insert(format!("original_firstorder_{name}"), Some(value));
        }
    }
    if params.feature_families.contains(&Family::Shape) {
        for (name, value) in shape::shape(mask)? {
            out.insert(format!("original_shape_{name}"), Some(value));
        }
    }
    if params.feature_families.contains(&Family::Glcm) {
        for (name, value) in glcm::glcm(vol, mask, &params.discretization, params.glcm_distance) {
            out.insert(format!("original_glcm_{name}"), value);
        }
    }
    Ok(out)
}

/// One table row: either a full feature vector or a recorded failure with
/// every value missing.
#[derive(Debug, Clone, PartialEq)]
pub struct FeatureRow {
    pub patient_id: String,
    pub values: BTreeMap<String, Option<f64>>,
    pub failure: Option<String>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct FeatureTable {
    pub columns: Vec<String>,
    pub rows: Vec<FeatureRow>,
}

impl FeatureTable {
    pub fn new(params: &ExtractionParams) -> Self {
        FeatureTable {
            columns: feature_columns(params),
            rows: Vec::new(),
        }
    }

    pub fn push_success(&mut self, patient_id: &str, values: BTreeMap<String, Option<f64>>) {
        self.rows.push(FeatureRow {
            patient_id: patient_id.to_string(),
            values,
            failure: None,
        });
    }

    pub fn push_failure(&mut self, patient_id: &str, reason: &str) {
        self.rows.push(FeatureRow {
            patient_id: patient_id.to_string(),
            values: BTreeMap::new(),
            failure: Some(reason.to_string()),
        });
    }

    /// Fix row order by patient id so output does not depend on extraction
    /// order.
    pub fn finish(&mut self) {
        self.rows.sort_by(|a, b| a.patient_id.cmp(&b.patient_id));
    }

    /// CSV with `patient` first; missing values are empty cells.
    pub fn to_csv_bytes(&self) -> Vec<u8> {
        let mut w = csv::Writer::from_writer(Vec::new());
        let mut header = vec!["patient".to_string()];
        header.extend(self.columns.iter().cloned());
        w.write_record(&header).expect("in-memory csv");
        for row in &self.rows {
            let mut record = vec![row.patient_id.clone()];
            for col in &self.columns {
                record.push(match row.values.get(col) {
                    Some(Some(x)) => format!("{x}"),
                    _ => String::new(),
                });
            }
            w.write_record(&record).expect("in-memory csv");
        }
        w.into_inner().expect("in-memory csv")
    }
}

/// Run extraction over a set of named cases, containing per-patient failures
/// as all-missing rows with a reason.
pub fn extract(cases: &[(String, Volume, Mask)], params: &ExtractionParams) -> FeatureTable {
    let mut table = FeatureTable::new(params);
    for (patient_id, v, m) in cases {
        match extract_one(v, m, params) {
            Ok(values) => table.push_success(patient_id, values),
            Err(e) => table.push_failure(patient_id, &e.to_string()),
        }
    }
    table.finish();
    table
}
