//! Univariate ROC / precision–recall analysis with the volume study.
//!
//! Orientation rule, stated once: the positive class is the
//! lexicographically larger outcome label. Curves are shown as computed —
//! an AUC below 0.5 is reported below 0.5, not flipped.

use super::{rank::spearman, AnalysisError, FeatureTable};

/// Threshold sweep over descending unique scores. Returns (points, auc)
/// where points start at (0,0), end at (1,1), and x never decreases. The
/// AUC is assembled from integer pair counts (ties at ½) and divided once,
/// which keeps simple fractions exact and equal to the trapezoid rule.
pub fn roc_points(scores_and_positives: &[(f64, bool)]) -> Option<(Vec<(f64, f64)>, f64)> {
    let pos_total = scores_and_positives.iter().filter(|(_, y)| *y).count() as u64;
    let neg_total = scores_and_positives.len() as u64 - pos_total;
    if pos_total == 0 || neg_total == 0 {
        return None;
    }

    let mut sorted: Vec<(f64, bool)> = scores_and_positives.to_vec();
    sorted.sort_by(|a, b| b.0.partial_cmp(&a.0).unwrap());

    let mut points = vec![(0.0, 0.0)];
    let mut tp = 0u64; // positives at or above the current threshold
    let mut fp = 0u64;
    let mut numerator = 0u64; // Σ q_k·(P_k + P_{k−1}) = 2·U
    let mut i = 0;
    while i < sorted.len() {
        let threshold = sorted[i].0;
        let mut p_here = 0u64;
        let mut q_here = 0u64;
        while i < sorted.len() && sorted[i].0 == threshold {
            if sorted[i].1 {
                p_here += 1;
            } else {
                q_here += 1;
            }
            i += 1;
        }
        let tp_prev = tp;
        tp += p_here;
        fp += q_here;
        numerator += q_here * (tp + tp_prev);
        points.push((fp as f64 / neg_total as f64, tp as f64 / pos_total as f64));
    }
    let auc = numerator as f64 / (2 * pos_total * neg_total) as f64;
    Some((points, auc))
}

/// Precision–recall sweep with the same descending-threshold convention.
/// Returns (points, average precision), points starting at (0, 1). The
/// summary is step-interpolated average precision, Σ(R_k − R_{k−1})·P_k.
pub fn pr_points(scores_and_positives: &[(f64, bool)]) -> Option<(Vec<(f64, f64)>, f64)> {
    let pos_total = scores_and_positives.iter().filter(|(_, y)| *y).count() as u64;
    if pos_total == 0 || scores_and_positives.len() as u64 == pos_total {
        return None;
    }

    let mut sorted: Vec<(f64, bool)> = scores_and_positives.to_vec();
    sorted.sort_by(|a, b| b.0.partial_cmp(&a.0).unwrap());

    let mut points = vec![(0.0, 1.0)];
    let mut tp = 0u64;
    let mut classified = 0u64;
    let mut ap = 0.0;
    let mut recall_prev = 0.0;
    let mut i = 0;
    while i < sorted.len() {
        let threshold = sorted[i].0;
        while i < sorted.len() && sorted[i].0 == threshold {
            if sorted[i].1 {
                tp += 1;
            }
            classified += 1;
            i += 1;
        }
        let precision = tp as f64 / classified as f64;
        let recall = tp as f64 / pos_total as f64;
        ap += (recall - recall_prev) * precision;
        recall_prev = recall;
        points.push((recall, precision));
    }
    Some((points, ap))
}

/// Per-feature ROC result; `auc` is `None` when a class has no usable
/// values for this feature.
#[derive(Debug, Clone, PartialEq)]
pub struct RocRow {
    pub feature: String,
    pub positive_class: String,
    pub n: (usize, usize),
    pub points: Vec<(f64, f64)>,
    pub auc: Option<f64>,
    pub highlight: bool,
}

pub fn univariate_roc(table: &FeatureTable, auc_threshold: f64) -> Result<Vec<RocRow>, AnalysisError> {
    let (negative, positive) = table.binary_labels()?;
    let mut out = Vec::new();
    for feature in table.sorted_features() {
        let col = table.feature_index(&feature).expect("listed feature");
        let data: Vec<(f64, bool)> = table
            .outcomes
            .iter()
            .zip(&table.values)
            .filter(|(o, _)| **o == negative || **o == positive)
            .filter_map(|(o, row)| row[col].map(|x| (x, *o == positive)))
            .collect();
        let n_pos = data.iter().filter(|(_, y)| *y).count();
        let n_neg = data.len() - n_pos;
        match roc_points(&data) {
            Some((points, auc)) => out.push(RocRow {
                feature,
                positive_class: positive.clone(),
                n: (n_neg, n_pos),
                points,
                auc: Some(auc),
                highlight: auc >= auc_threshold,
            }),
            None => out.push(RocRow {
                feature,
                positive_class: positive.clone(),
                n: (n_neg, n_pos),
                points: Vec::new(),
                auc: None,
                highlight: false,
            }),
        }
    }
    Ok(out)
}

/// Volume-as-classifier PR curve.
#[derive(Debug, Clone, PartialEq)]
pub struct PrCurve {
    pub positive_class: String,
    pub points: Vec<(f64, f64)>,
    pub average_precision: f64,
    /// summary convention, recorded in output metadata
    pub summary_kind: &'static str,
}

/// `|ρ|` of one feature against the volume column.
#[derive(Debug, Clone, PartialEq)]
pub struct VolumeCorrRow {
    pub feature: String,
    pub abs_rho: Option<f64>,
    pub highlight: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct VolumeAnalysis {
    pub volume_feature: String,
    /// `None` for non-binary outcomes (the correlation part still runs).
    pub pr: Option<PrCurve>,
    pub correlations: Vec<VolumeCorrRow>,
}

pub fn volume_analysis(
    table: &FeatureTable,
    volume_feature: &str,
    corr_threshold: f64,
) -> Result<VolumeAnalysis, AnalysisError> {
    let vol_col = table
        .feature_index(volume_feature)
        .ok_or_else(|| AnalysisError::UnknownFeature(volume_feature.to_string()))?;

    let pr = match table.binary_labels() {
        Err(_) => None,
        Ok((negative, positive)) => {
            let data: Vec<(f64, bool)> = table
                .outcomes
                .iter()
                .zip(&table.values)
                .filter(|(o, _)| **o == negative || **o == positive)
                .filter_map(|(o, row)| row[vol_col].map(|x| (x, *o == positive)))
                .collect();
            pr_points(&data).map(|(points, ap)| PrCurve {
                positive_class: positive,
                points,
                average_precision: ap,
                summary_kind: "average_precision_step",
            })
        }
    };

    let mut correlations = Vec::new();
    for feature in table.sorted_features() {
        let col = table.feature_index(&feature).expect("listed feature");
        let pairs: Vec<(f64, f64)> = table
            .values
            .iter()
            .filter_map(|row| match (row[col], row[vol_col]) {
                (Some(a), Some(b)) => Some((a, b)),
                _ => None,
            })
            .collect();
        let abs_rho = spearman(&pairs).map(f64::abs);
        correlations.push(VolumeCorrRow {
            feature,
            abs_rho,
            highlight: abs_rho.is_some_and(|r| r > corr_threshold),
        });
    }

    Ok(VolumeAnalysis {
        volume_feature: volume_feature.to_string(),
        pr,
        correlations,
    })
}
