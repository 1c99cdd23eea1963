//! First-order (intensity histogram) features over the ROI voxel values.

use std::collections::BTreeMap;

use crate::preprocess::Discretization;

use super::roi_levels;

/// Alphabetical, matching the fixed column order.
pub const FIRST_ORDER_NAMES: &[&str] = &[
    "Energy",
    "Entropy",
    "Kurtosis",
    "Maximum",
    "Mean",
    "Median",
    "Minimum",
    "Percentile10",
    "Percentile90",
    "Range",
    "RootMeanSquared",
    "Skewness",
    "Uniformity",
    "Variance",
];

/// Linear-interpolation percentile with the `(n−1)`-rank convention:
/// `rank = q·(n−1)`, value interpolated between the flanking order
/// statistics.
pub fn percentile(sorted: &[f64], q: f64) -> f64 {
    let rank = q * (sorted.len() - 1) as f64;
    let lo = rank.floor() as usize;
    let frac = rank - lo as f64;
    if frac == 0.0 || lo + 1 == sorted.len() {
        sorted[lo]
    } else {
        sorted[lo] + frac * (sorted[lo + 1] - sorted[lo])
    }
}

/// Compute all 14 first-order features. `values` must be nonempty (the
/// caller enforces this when collecting the ROI).
///
/// Conventions, stated once: Variance/Skewness/Kurtosis use population
/// moments; Kurtosis is uncorrected (normal distribution → 3); both Skewness
/// and Kurtosis are defined as 0 on zero variance; Entropy (log base 2) and
/// Uniformity are computed over the discretized level distribution.
pub fn first_order(values: &[f64], mode: &Discretization) -> BTreeMap<&'static str, f64> {
    let n = values.len() as f64;
    let mean = values.iter().sum::<f64>() / n;
    let variance = values.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / n;
    let (skewness, kurtosis) = if variance > 0.0 {
        let m3 = values.iter().map(|x| (x - mean).powi(3)).sum::<f64>() / n;
        let m4 = values.iter().map(|x| (x - mean).powi(4)).sum::<f64>() / n;
        (m3 / variance.powf(1.5), m4 / (variance * variance))
    } else {
        (0.0, 0.0)
    };

    let mut sorted = values.to_vec();
    sorted.sort_by(|a, b| a.partial_cmp(b).unwrap());
    let min = sorted[0];
    let max = sorted[sorted.len() - 1];
    let median = crate::util::median(&sorted).expect("nonempty");

    let energy: f64 = values.iter().map(|x| x * x).sum();

    let levels = roi_levels(values, mode);
    let mut counts: BTreeMap<u32, u64> = BTreeMap::new();
    for level in levels {
        *counts.entry(level).or_insert(0) += 1;
    }
    let mut entropy = 0.0;
    let mut uniformity = 0.0;
    for &count in counts.values() {
        let p = count as f64 / n;
        entropy -= p * p.log2();
        uniformity += p * p;
    }

    BTreeMap::from([
        ("Energy", energy),
        ("Entropy", entropy),
        ("Kurtosis", kurtosis),
        ("Maximum", max),
        ("Mean", mean),
        ("Median", median),
        ("Minimum", min),
        ("Percentile10", percentile(&sorted, 0.10)),
        ("Percentile90", percentile(&sorted, 0.90)),
        ("Range", max - min),
        ("RootMeanSquared", (energy / n).sqrt()),
        ("Skewness", skewness),
        ("Uniformity", uniformity),
        ("Variance", variance),
    ])
}
