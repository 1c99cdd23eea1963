//! Gray-level co-occurrence matrix features.
//!
//! Co-occurrence pairs are counted over the 13 unique 3-D directions (one
//! per axis through a voxel's 26-neighborhood, signs folded by the
//! symmetrization). Only pairs with both voxels inside the ROI count. Each
//! direction's matrix is symmetrized by adding its transpose, features are
//! computed per direction from the integer counts (one final division keeps
//! simple fractions exact), and the reported value is the unweighted mean
//! over directions that saw at least one pair.

use std::collections::BTreeMap;

use crate::preprocess::Discretization;
use crate::volume::{Mask, Volume};

use super::roi_levels;

/// Alphabetical, matching the fixed column order.
pub const GLCM_NAMES: &[&str] = &[
    "AngularSecondMoment",
    "Contrast",
    "Correlation",
    "Dissimilarity",
    "InverseDifferenceMoment",
    "JointEntropy",
];

/// One representative for every ± pair of 26-neighborhood offsets.
pub const DIRECTIONS: [[i32; 3]; 13] = [
    [1, 0, 0],
    [0, 1, 0],
    [0, 0, 1],
    [1, 1, 0],
    [1, -1, 0],
    [1, 0, 1],
    [1, 0, -1],
    [0, 1, 1],
    [0, 1, -1],
    [1, 1, 1],
    [1, 1, -1],
    [1, -1, 1],
    [1, -1, -1],
];

/// ROI voxels replaced by their 1-based discretized level, everything else
/// `None`.
pub struct LevelGrid {
    pub dims: [usize; 3],
    pub levels: Vec<Option<u32>>,
}

pub fn level_grid(v: &Volume, m: &Mask, mode: &Discretization) -> LevelGrid {
    let roi: Vec<f64> = v
        .data
        .iter()
        .zip(&m.data)
        .filter(|(_, &flag)| flag == 1)
        .map(|(&x, _)| x)
        .collect();
    let levels = roi_levels(&roi, mode);
    let mut grid = vec![None; v.data.len()];
    let mut next = levels.into_iter();
    for (slot, &flag) in grid.iter_mut().zip(&m.data) {
        if flag == 1 {
            *slot = Some(next.next().expect("one level per ROI voxel"));
        }
    }
    LevelGrid {
        dims: v.geom.dims,
        levels: grid,
    }
}

/// Symmetrized co-occurrence counts for one direction. `total` is the sum of
/// all counts (twice the raw pair count).
pub struct DirectionMatrix {
    pub counts: BTreeMap<(u32, u32), u64>,
    pub total: u64,
}

/// Count co-occurrences along `dir·distance`; `None` when the direction sees
/// no in-ROI pair at all.
pub fn direction_matrix(grid: &LevelGrid, dir: [i32; 3], distance: usize) -> Option<DirectionMatrix> {
    let [nx, ny, nz] = grid.dims;
    let step = [
        dir[0] * distance as i32,
        dir[1] * distance as i32,
        dir[2] * distance as i32,
    ];
    let mut counts: BTreeMap<(u32, u32), u64> = BTreeMap::new();
    let mut total = 0u64;
    for k in 0..nz {
        for j in 0..ny {
            for i in 0..nx {
                let Some(a) = grid.levels[i + nx * (j + ny * k)] else { continue };
                let (qi, qj, qk) = (i as i64 + step[0] as i64, j as i64 + step[1] as i64, k as i64 + step[2] as i64);
                if qi < 0 || qj < 0 || qk < 0 || qi >= nx as i64 || qj >= ny as i64 || qk >= nz as i64 {
                    continue;
                }
                let Some(b) = grid.levels[qi as usize + nx * (qj as usize + ny * qk as usize)] else {
                    continue;
                };
                // add the pair and its transpose in one go
                *counts.entry((a, b)).or_insert(0) += 1;
                *counts.entry((b, a)).or_insert(0) += 1;
                total += 2;
            }
        }
    }
    if total == 0 {
        None
    } else {
        Some(DirectionMatrix { counts, total })
    }
}

impl DirectionMatrix {
    pub fn contrast(&self) -> f64 {
        let num: u64 = self
            .counts
            .iter()
            .map(|(&(a, b), &c)| c * (i64::from(a) - i64::from(b)).pow(2) as u64)
            .sum();
        num as f64 / self.total as f64
    }

    pub fn dissimilarity(&self) -> f64 {
        let num: u64 = self
            .counts
            .iter()
            .map(|(&(a, b), &c)| c * (i64::from(a) - i64::from(b)).unsigned_abs())
            .sum();
        num as f64 / self.total as f64
    }

    pub fn inverse_difference_moment(&self) -> f64 {
        let sum: f64 = self
            .counts
            .iter()
            .map(|(&(a, b), &c)| c as f64 / (1.0 + ((i64::from(a) - i64::from(b)).pow(2)) as f64))
            .sum();
        sum / self.total as f64
    }

    pub fn angular_second_moment(&self) -> f64 {
        let num: u64 = self.counts.values().map(|&c| c * c).sum();
        num as f64 / (self.total as f64 * self.total as f64)
    }

    pub fn joint_entropy(&self) -> f64 {
        let total = self.total as f64;
        -self
            .counts
            .values()
            .map(|&c| {
                let p = c as f64 / total;
                p * p.log2()
            })
            .sum::<f64>()
    }

    /// `None` when the direction sees a single gray level (zero marginal
    /// variance).
    pub fn correlation(&self) -> Option<f64> {
        let total = self.total as f64;
        let mut marginal: BTreeMap<u32, u64> = BTreeMap::new();
        for (&(a, _), &c) in &self.counts {
            *marginal.entry(a).or_insert(0) += c;
        }
        let mean: f64 = marginal.iter().map(|(&a, &c)| f64::from(a) * c as f64).sum::<f64>() / total;
        let var: f64 =
            marginal.iter().map(|(&a, &c)| f64::from(a) * f64::from(a) * c as f64).sum::<f64>() / total - mean * mean;
        if var <= 0.0 {
            return None;
        }
        let joint: f64 = self
            .counts
            .iter()
            .map(|(&(a, b), &c)| f64::from(a) * f64::from(b) * c as f64)
            .sum::<f64>()
            / total;
        // symmetric matrix: both marginals coincide
        Some((joint - mean * mean) / var)
    }
}

/// Direction-averaged GLCM features. Directions without pairs are dropped
/// from every average; directions whose matrix has a single level are
/// additionally dropped from Correlation. A feature with no surviving
/// direction is reported missing.
pub fn glcm(
    v: &Volume,
    m: &Mask,
    mode: &Discretization,
    distance: usize,
) -> BTreeMap<&'static str, Option<f64>> {
    let grid = level_grid(v, m, mode);

    let mut sums = [0.0f64; 5]; // asm, contrast, dissimilarity, idm, entropy
    let mut dirs = 0u32;
    let mut corr_sum = 0.0;
    let mut corr_dirs = 0u32;

    for dir in DIRECTIONS {
        let Some(mat) = direction_matrix(&grid, dir, distance) else { continue };
        sums[0] += mat.angular_second_moment();
        sums[1] += mat.contrast();
        sums[2] += mat.dissimilarity();
        sums[3] += mat.inverse_difference_moment();
        sums[4] += mat.joint_entropy();
        dirs += 1;
        if let Some(c) = mat.correlation() {
            corr_sum += c;
            corr_dirs += 1;
        }
    }

    let avg = |sum: f64| (dirs > 0).then(|| sum / f64::from(dirs));
    BTreeMap::from([
        ("AngularSecondMoment", avg(sums[0])),
        ("Contrast", avg(sums[1])),
        ("Correlation", (corr_dirs > 0).then(|| corr_sum / f64::from(corr_dirs))),
        ("Dissimilarity", avg(sums[2])),
        ("InverseDifferenceMoment", avg(sums[3])),
        ("JointEntropy", avg(sums[4])),
    ])
}
