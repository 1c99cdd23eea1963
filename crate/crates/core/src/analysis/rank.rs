//! Rank statistics: midranks and Spearman correlation.

use super::FeatureTable;

/// 1-based ranks with ties replaced by their midrank.
pub fn midranks(values: &[f64]) -> Vec<f64> {
    let mut idx: Vec<usize> = (0..values.len()).collect();
    idx.sort_by(|&a, &b| values[a].partial_cmp(&values[b]).unwrap());
    let mut ranks = vec![0.0; values.len()];
    let mut i = 0;
    while i < idx.len() {
        let mut j = i;
        while j + 1 < idx.len() && values[idx[j + 1]] == values[idx[i]] {
            j += 1;
        }
        let mid = (i + j + 2) as f64 / 2.0;
        for &slot in &idx[i..=j] {
            ranks[slot] = mid;
        }
        i = j + 1;
    }
    ranks
}

/// Spearman's ρ: Pearson correlation of midranks. `None` when fewer than two
/// pairs or when either side is constant (ρ undefined).
pub fn spearman(pairs: &[(f64, f64)]) -> Option<f64> {
    if pairs.len() < 2 {
        return None;
    }
    let xs: Vec<f64> = pairs.iter().map(|p| p.0).collect();
    let ys: Vec<f64> = pairs.iter().map(|p| p.1).collect();
    let rx = midranks(&xs);
    let ry = midranks(&ys);
    let n = pairs.len() as f64;
    let mx = rx.iter().sum::<f64>() / n;
    let my = ry.iter().sum::<f64>() / n;
    let mut cov = 0.0;
    let mut vx = 0.0;
    let mut vy = 0.0;
    for (a, b) in rx.iter().zip(&ry) {
        cov += (a - mx) * (b - my);
        vx += (a - mx) * (a - mx);
        vy += (b - my) * (b - my);
    }
    if vx <= 0.0 || vy <= 0.0 {
        return None;
    }
    Some(cov / (vx.sqrt() * vy.sqrt()))
}

/// Feature × feature matrix of `|ρ|`, axes sorted by feature name. Cells are
/// `None` where ρ is undefined (constant feature or < 2 complete pairs).
#[derive(Debug, Clone, PartialEq)]
pub struct SpearmanMatrix {
    pub features: Vec<String>,
    /// `rho[r][c]`, symmetric.
    pub rho: Vec<Vec<Option<f64>>>,
}

pub fn spearman_matrix(table: &FeatureTable) -> SpearmanMatrix {
    let features = table.sorted_features();
    let cols: Vec<usize> = features.iter().map(|f| table.feature_index(f).expect("sorted from table")).collect();
    let n = features.len();
    let mut rho = vec![vec![None; n]; n];
    for r in 0..n {
        for c in r..n {
            let pairs: Vec<(f64, f64)> = table
                .values
                .iter()
                .filter_map(|row| match (row[cols[r]], row[cols[c]]) {
                    (Some(a), Some(b)) => Some((a, b)),
                    _ => None,
                })
                .collect();
            let value = spearman(&pairs).map(f64::abs);
            rho[r][c] = value;
            rho[c][r] = value;
        }
    }
    SpearmanMatrix { features, rho }
}
