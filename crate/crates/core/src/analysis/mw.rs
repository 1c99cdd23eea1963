//! Two-sided Mann–Whitney U test with Bonferroni correction.
//!
//! Small tie-free samples (combined n ≤ 25) get the exact null distribution
//! by dynamic programming; everything else uses the normal approximation
//! with tie-corrected variance and a 0.5 continuity correction.

use statrs::distribution::{ContinuousCDF, Normal};
use std::collections::BTreeMap;

use super::{rank::midranks, AnalysisError, FeatureTable};

const EXACT_LIMIT: usize = 25;

/// Number of group-A assignments yielding each U value, for samples of size
/// `n1` and `n2` with no ties. Index = U, so the vector has `n1·n2 + 1`
/// entries and sums to C(n1+n2, n1).
fn exact_counts(n1: usize, n2: usize) -> Vec<u64> {
    // f(a, b, u) = f(a−1, b, u−b) + f(a, b−1, u): the largest remaining
    // observation either joins A (beating all b of B) or joins B.
    let mut table: Vec<Vec<Vec<u64>>> = vec![vec![Vec::new(); n2 + 1]; n1 + 1];
    for a in 0..=n1 {
        for b in 0..=n2 {
            if a == 0 || b == 0 {
                table[a][b] = vec![1];
                continue;
            }
            let mut dist = vec![0u64; a * b + 1];
            for (u, slot) in dist.iter_mut().enumerate() {
                let mut c = 0;
                if u >= b {
                    c += table[a - 1][b].get(u - b).copied().unwrap_or(0);
                }
                c += table[a][b - 1].get(u).copied().unwrap_or(0);
                *slot = c;
            }
            table[a][b] = dist;
        }
    }
    std::mem::take(&mut table[n1][n2])
}

/// Exact two-sided p: `min(1, 2·P(U ≤ min(U_A, U_B)))`.
fn exact_p(u_min: f64, n1: usize, n2: usize) -> f64 {
    let counts = exact_counts(n1, n2);
    let total: u64 = counts.iter().sum();
    let cutoff = u_min.round() as usize;
    let tail: u64 = counts.iter().take(cutoff + 1).sum();
    (2.0 * tail as f64 / total as f64).min(1.0)
}

/// Normal approximation with tie correction and continuity correction.
fn approx_p(u: f64, n1: usize, n2: usize, combined: &[f64]) -> f64 {
    let n = (n1 + n2) as f64;
    let mean = n1 as f64 * n2 as f64 / 2.0;
    let mut tie_counts: BTreeMap<u64, f64> = BTreeMap::new();
    for &x in combined {
        *tie_counts.entry(x.to_bits()).or_insert(0.0) += 1.0;
    }
    let tie_term: f64 = tie_counts.values().map(|&t| t * t * t - t).sum();
    let var = n1 as f64 * n2 as f64 / 12.0 * ((n + 1.0) - tie_term / (n * (n - 1.0)));
    if var <= 0.0 {
        return 1.0;
    }
    let z = ((u - mean).abs() - 0.5).max(0.0) / var.sqrt();
    let normal = Normal::new(0.0, 1.0).expect("standard normal");
    (2.0 * (1.0 - normal.cdf(z))).min(1.0)
}

/// Raw two-sided p for two samples. Exposed so oracles can hit the switch
/// between the exact and approximate paths directly.
pub fn mann_whitney_p(a: &[f64], b: &[f64]) -> (f64, f64, &'static str) {
    let (n1, n2) = (a.len(), b.len());
    let combined: Vec<f64> = a.iter().chain(b).copied().collect();
    let ranks = midranks(&combined);
    let r_a: f64 = ranks[..n1].iter().sum();
    let u_a = r_a - (n1 * (n1 + 1)) as f64 / 2.0;
    let u_b = n1 as f64 * n2 as f64 - u_a;

    let mut sorted = combined.clone();
    sorted.sort_by(|x, y| x.partial_cmp(y).unwrap());
    let has_ties = sorted.windows(2).any(|w| w[0] == w[1]);

    if !has_ties && n1 + n2 <= EXACT_LIMIT {
        (u_a, exact_p(u_a.min(u_b), n1, n2), "exact")
    } else {
        (u_a, approx_p(u_a, n1, n2, &combined), "normal")
    }
}

/// Per-feature Mann–Whitney result. `u` is the U statistic of the
/// lexicographically smaller class.
#[derive(Debug, Clone, PartialEq)]
pub struct MwRow {
    pub feature: String,
    pub n: (usize, usize),
    pub u: Option<f64>,
    pub p_raw: Option<f64>,
    pub p_corrected: Option<f64>,
    pub method: &'static str,
    pub highlight: bool,
}

/// Test every feature against the binary outcome and Bonferroni-correct over
/// the features actually tested. Features with fewer than two usable values
/// in either class are reported as skipped rows.
pub fn mann_whitney(table: &FeatureTable, alpha: f64) -> Result<Vec<MwRow>, AnalysisError> {
    let (label_a, label_b) = table.binary_labels()?;
    for label in [&label_a, &label_b] {
        let count = table.outcomes.iter().filter(|o| *o == label).count();
        if count < 2 {
            return Err(AnalysisError::TooFewSamples {
                label: label.clone(),
                n: count,
            });
        }
    }

    let mut rows: Vec<MwRow> = Vec::new();
    for feature in table.sorted_features() {
        let col = table.feature_index(&feature).expect("listed feature");
        let mut a = Vec::new();
        let mut b = Vec::new();
        for (outcome, row) in table.outcomes.iter().zip(&table.values) {
            if let Some(x) = row[col] {
                if *outcome == label_a {
                    a.push(x);
                } else if *outcome == label_b {
                    b.push(x);
                }
            }
        }
        if a.len() < 2 || b.len() < 2 {
            rows.push(MwRow {
                feature,
                n: (a.len(), b.len()),
                u: None,
                p_raw: None,
                p_corrected: None,
                method: "skipped",
                highlight: false,
            });
            continue;
        }
        let (u, p, method) = mann_whitney_p(&a, &b);
        rows.push(MwRow {
            feature,
            n: (a.len(), b.len()),
            u: Some(u),
            p_raw: Some(p),
            p_corrected: None,
            method,
            highlight: false,
        });
    }

    let k = rows.iter().filter(|r| r.p_raw.is_some()).count() as f64;
    for row in &mut rows {
        if let Some(p) = row.p_raw {
            let corrected = (p * k).min(1.0);
            row.p_corrected = Some(corrected);
            row.highlight = corrected < alpha;
        }
    }
    Ok(rows)
}
