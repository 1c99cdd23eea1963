//! Turn planar contours into voxel masks on a reference geometry.
//!
//! Each contour is mapped into continuous voxel-index space and filled on its
//! nearest slice with an even-odd scanline sweep. The boundary conventions are
//! fixed so results are reproducible down to the voxel:
//!
//! * an edge spans rows `y1 <= j < y2` (half-open, so a vertex lying exactly
//!   on a row contributes once, not twice);
//! * a voxel center is inside when an odd number of edge crossings lie
//!   strictly to its right (`i < x_cross`), so centers on a left boundary are
//!   in and centers on a right boundary are out;
//! * contours on the same slice combine with XOR, which lets a second polygon
//!   cut a hole into the first.

use crate::dicom::ContourSet;
use crate::volume::{Geometry, Mask};

/// Rasterize every contour of `set` onto `geom`. Contours that miss the
/// volume or do not lie flat on a slice are skipped and reported as warnings;
/// the mask is still produced from whatever remains.
pub fn rasterize(set: &ContourSet, geom: &Geometry) -> (Mask, Vec<String>) {
    let mut mask = Mask {
        geom: geom.clone(),
        data: vec![0; geom.voxel_count()],
    };
    let mut warnings = Vec::new();
    let [nx, ny, nz] = geom.dims;

    for (ci, contour) in set.planar_contours.iter().enumerate() {
        let verts: Vec<[f64; 3]> = contour.iter().map(|p| geom.position_to_index(*p)).collect();

        let mean_k = verts.iter().map(|v| v[2]).sum::<f64>() / verts.len() as f64;
        let flat = verts.iter().all(|v| (v[2] - mean_k).abs() <= 0.5);
        if !flat {
            warnings.push(format!("contour {ci}: not aligned with a slice plane, skipped"));
            continue;
        }
        let k = mean_k.round();
        if (k - mean_k).abs() > 0.5 || k < 0.0 || k as usize >= nz {
            warnings.push(format!("contour {ci}: plane outside volume, skipped"));
            continue;
        }
        let k = k as usize;

        for j in 0..ny {
            let crossings = row_crossings(&verts, j as f64);
            for (a, b) in fill_intervals(&crossings) {
                let start = a.max(0.0).ceil() as usize;
                let end = (b.ceil().max(0.0) as usize).min(nx);
                for i in start.min(nx)..end {
                    let idx = geom.index_of(i, j, k);
                    mask.data[idx] ^= 1;
                }
            }
        }
    }

    (mask, warnings)
}

/// X coordinates where the polygon outline crosses the horizontal line `y`,
/// sorted ascending. Horizontal edges never cross; the shared vertex of two
/// edges counts once because spans are half-open in y.
fn row_crossings(verts: &[[f64; 3]], y: f64) -> Vec<f64> {
    let n = verts.len();
    let mut xs = Vec::new();
    for e in 0..n {
        let (x1, y1) = (verts[e][0], verts[e][1]);
        let (x2, y2) = (verts[(e + 1) % n][0], verts[(e + 1) % n][1]);
        if (y1 <= y && y < y2) || (y2 <= y && y < y1) {
            xs.push(x1 + (y - y1) * (x2 - x1) / (y2 - y1));
        }
    }
    xs.sort_by(|a, b| a.partial_cmp(b).unwrap());
    xs
}

/// Convert a sorted crossing list into half-open x intervals whose integer
/// points have an odd number of crossings strictly to their right.
fn fill_intervals(crossings: &[f64]) -> Vec<(f64, f64)> {
    let mut spans = Vec::new();
    let mut inside = crossings.len() % 2 == 1;
    let mut start = f64::NEG_INFINITY;
    for &c in crossings {
        if inside {
            spans.push((start, c));
        }
        inside = !inside;
        start = c;
    }
    spans
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::collections::BTreeSet;

    fn set(contours: Vec<Vec<[f64; 3]>>) -> ContourSet {
        ContourSet {
            roi_name: "GTV".into(),
            referenced_series_uid: String::new(),
            planar_contours: contours,
        }
    }

    fn ones(mask: &Mask) -> BTreeSet<(usize, usize, usize)> {
        let [nx, ny, nz] = mask.geom.dims;
        let mut out = BTreeSet::new();
        for k in 0..nz {
            for j in 0..ny {
                for i in 0..nx {
                    if mask.at(i, j, k) == 1 {
                        out.insert((i, j, k));
                    }
                }
            }
        }
        out
    }

    #[test]
    fn square_fills_expected_block() {
        let geom = Geometry::axial([8, 8, 3], [1.0, 1.0, 2.0], [0.0, 0.0, 0.0]);
        let square = vec![
            [1.5, 1.5, 2.0],
            [4.5, 1.5, 2.0],
            [4.5, 4.5, 2.0],
            [1.5, 4.5, 2.0],
        ];
        let (mask, warnings) = rasterize(&set(vec![square]), &geom);
        assert!(warnings.is_empty());
        let expected: BTreeSet<_> = (2..5).flat_map(|j| (2..5).map(move |i| (i, j, 1))).collect();
        assert_eq!(ones(&mask), expected);
    }

    #[test]
    fn xor_cuts_a_hole() {
        let geom = Geometry::axial([10, 10, 1], [1.0; 3], [0.0; 3]);
        let outer = vec![
            [0.5, 0.5, 0.0],
            [8.5, 0.5, 0.0],
            [8.5, 8.5, 0.0],
            [0.5, 8.5, 0.0],
        ];
        let inner = vec![
            [2.5, 2.5, 0.0],
            [6.5, 2.5, 0.0],
            [6.5, 6.5, 0.0],
            [2.5, 6.5, 0.0],
        ];
        let (mask, _) = rasterize(&set(vec![outer, inner]), &geom);
        assert_eq!(mask.at(1, 1, 0), 1, "ring voxel");
        assert_eq!(mask.at(4, 4, 0), 0, "hole voxel");
        assert_eq!(mask.ones_count(), 64 - 16);
    }

    #[test]
    fn vertex_on_row_counts_once() {
        // Diamond with vertices exactly on voxel centers: the left vertex is
        // inside (crossing strictly right of it), the right vertex is out.
        let geom = Geometry::axial([6, 6, 1], [1.0; 3], [0.0; 3]);
        let diamond = vec![
            [2.0, 0.0, 0.0],
            [4.0, 2.0, 0.0],
            [2.0, 4.0, 0.0],
            [0.0, 2.0, 0.0],
        ];
        let (mask, _) = rasterize(&set(vec![diamond]), &geom);
        assert_eq!(mask.at(0, 2, 0), 1);
        assert_eq!(mask.at(4, 2, 0), 0);
        assert_eq!(mask.at(2, 2, 0), 1);
    }

    #[test]
    fn plane_outside_volume_warns_and_skips() {
        let geom = Geometry::axial([4, 4, 2], [1.0, 1.0, 2.0], [0.0, 0.0, 0.0]);
        let far = vec![[0.5, 0.5, 40.0], [2.5, 0.5, 40.0], [2.5, 2.5, 40.0]];
        let (mask, warnings) = rasterize(&set(vec![far]), &geom);
        assert_eq!(mask.ones_count(), 0);
        assert_eq!(warnings.len(), 1);
        assert!(warnings[0].contains("outside volume"));
    }

    #[test]
    fn tilted_contour_warns_and_skips() {
        let geom = Geometry::axial([4, 4, 4], [1.0; 3], [0.0; 3]);
        let tilted = vec![[0.5, 0.5, 0.0], [2.5, 0.5, 0.0], [2.5, 2.5, 3.0]];
        let (mask, warnings) = rasterize(&set(vec![tilted]), &geom);
        assert_eq!(mask.ones_count(), 0);
        assert!(warnings[0].contains("not aligned"));
    }

    #[test]
    fn matches_pointwise_even_odd_oracle() {
        // Independent route: count crossings strictly right of each center.
        let geom = Geometry::axial([12, 12, 1], [1.0; 3], [0.0; 3]);
        let poly = vec![
            [1.2, 1.7, 0.0],
            [9.8, 2.4, 0.0],
            [6.1, 9.9, 0.0],
            [4.0, 5.5, 0.0],
            [2.3, 8.8, 0.0],
        ];
        let (mask, _) = rasterize(&set(vec![poly.clone()]), &geom);
        for j in 0..12 {
            for i in 0..12 {
                let x = i as f64;
                let y = j as f64;
                let mut count = 0;
                for e in 0..poly.len() {
                    let (x1, y1) = (poly[e][0], poly[e][1]);
                    let q = &poly[(e + 1) % poly.len()];
                    let (x2, y2) = (q[0], q[1]);
                    if (y1 <= y && y < y2) || (y2 <= y && y < y1) {
                        let xc = x1 + (y - y1) * (x2 - x1) / (y2 - y1);
                        if x < xc {
                            count += 1;
                        }
                    }
                }
                assert_eq!(mask.at(i, j, 0), u8::from(count % 2 == 1), "voxel ({i},{j})");
            }
        }
    }
}
