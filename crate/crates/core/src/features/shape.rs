//! Shape features: voxel-counting volume, exposed-face surface area, and the
//! exact maximum diameter over surface voxel centers.

use std::collections::BTreeMap;

use crate::volume::Mask;

use super::FeatureError;

/// Alphabetical, matching the fixed column order.
pub const SHAPE_NAMES: &[&str] = &[
    "Maximum3DDiameter",
    "Sphericity",
    "SurfaceArea",
    "SurfaceVolumeRatio",
    "VoxelVolume",
];

/// Compute the 5 shape features from the mask alone (spacing comes from its
/// geometry). Surface area counts exposed faces in the 6-neighborhood, with
/// the grid edge counting as outside.
pub fn shape(m: &Mask) -> Result<BTreeMap<&'static str, f64>, FeatureError> {
    let [nx, ny, nz] = m.geom.dims;
    let [sx, sy, sz] = m.geom.spacing;
    let inside = |i: isize, j: isize, k: isize| -> bool {
        i >= 0
            && j >= 0
            && k >= 0
            && (i as usize) < nx
            && (j as usize) < ny
            && (k as usize) < nz
            && m.at(i as usize, j as usize, k as usize) == 1
    };

    let face_x = sy * sz;
    let face_y = sx * sz;
    let face_z = sx * sy;

    let mut count = 0u64;
    let mut area = 0.0;
    let mut surface: Vec<[f64; 3]> = Vec::new();

    for k in 0..nz {
        for j in 0..ny {
            for i in 0..nx {
                if m.at(i, j, k) != 1 {
                    continue;
                }
                count += 1;
                let (ii, jj, kk) = (i as isize, j as isize, k as isize);
                let mut exposed = 0.0;
                if !inside(ii - 1, jj, kk) {
                    exposed += face_x;
                }
                if !inside(ii + 1, jj, kk) {
                    exposed += face_x;
                }
                if !inside(ii, jj - 1, kk) {
                    exposed += face_y;
                }
                if !inside(ii, jj + 1, kk) {
                    exposed += face_y;
                }
                if !inside(ii, jj, kk - 1) {
                    exposed += face_z;
                }
                if !inside(ii, jj, kk + 1) {
                    exposed += face_z;
                }
                if exposed > 0.0 {
                    area += exposed;
                    surface.push([i as f64 * sx, j as f64 * sy, k as f64 * sz]);
                }
            }
        }
    }

    if count == 0 {
        return Err(FeatureError::EmptyMask);
    }

    let volume = count as f64 * sx * sy * sz;
    let sphericity = (36.0 * std::f64::consts::PI * volume * volume).cbrt() / area;

    // The farthest voxel pair always has both ends on the surface, so the
    // exact diameter only needs the boundary set.
    let mut diameter2: f64 = 0.0;
    for (a, p) in surface.iter().enumerate() {
        for q in &surface[a + 1..] {
            let d2 = (p[0] - q[0]).powi(2) + (p[1] - q[1]).powi(2) + (p[2] - q[2]).powi(2);
            diameter2 = diameter2.max(d2);
        }
    }

    Ok(BTreeMap::from([
        ("Maximum3DDiameter", diameter2.sqrt()),
        ("Sphericity", sphericity),
        ("SurfaceArea", area),
        ("SurfaceVolumeRatio", area / volume),
        ("VoxelVolume", volume),
    ]))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::volume::Geometry;
    use approx::assert_abs_diff_eq;

    fn block(dims: [usize; 3], spacing: [f64; 3], from: [usize; 3], to: [usize; 3]) -> Mask {
        let geom = Geometry::axial(dims, spacing, [0.0; 3]);
        let mut data = vec![0u8; geom.voxel_count()];
        for k in from[2]..to[2] {
            for j in from[1]..to[1] {
                for i in from[0]..to[0] {
                    data[geom.index_of(i, j, k)] = 1;
                }
            }
        }
        Mask { geom, data }
    }

    #[test]
    fn ten_cube_at_one_millimeter() {
        let m = block([12, 12, 12], [1.0; 3], [1, 1, 1], [11, 11, 11]);
        let f = shape(&m).unwrap();
        assert_eq!(f["VoxelVolume"], 1000.0);
        assert_eq!(f["SurfaceArea"], 600.0);
        assert_eq!(f["SurfaceVolumeRatio"], 0.6);
        let expected = (36.0 * std::f64::consts::PI * 1e6f64).cbrt() / 600.0;
        assert_abs_diff_eq!(f["Sphericity"], expected, epsilon = 1e-12);
        assert_abs_diff_eq!(f["Sphericity"], 0.806, epsilon = 1e-3);
        // corner-to-corner of the 9-mm-wide center lattice
        assert_abs_diff_eq!(f["Maximum3DDiameter"], (3.0f64 * 81.0).sqrt(), epsilon = 1e-12);
    }

    #[test]
    fn single_voxel_anisotropic() {
        let m = block([3, 3, 3], [1.0, 2.0, 3.0], [1, 1, 1], [2, 2, 2]);
        let f = shape(&m).unwrap();
        assert_eq!(f["VoxelVolume"], 6.0);
        assert_eq!(f["SurfaceArea"], 22.0);
        assert_eq!(f["Maximum3DDiameter"], 0.0);
    }

    #[test]
    fn mask_touching_the_edge_still_counts_faces() {
        let m = block([2, 2, 2], [1.0; 3], [0, 0, 0], [2, 2, 2]);
        let f = shape(&m).unwrap();
        assert_eq!(f["VoxelVolume"], 8.0);
        assert_eq!(f["SurfaceArea"], 24.0);
    }

    #[test]
    fn volume_scales_linearly_with_slice_spacing() {
        let a = shape(&block([6, 6, 6], [1.0, 1.0, 1.0], [1, 1, 1], [5, 5, 5])).unwrap();
        let b = shape(&block([6, 6, 6], [1.0, 1.0, 2.5], [1, 1, 1], [5, 5, 5])).unwrap();
        assert_abs_diff_eq!(b["VoxelVolume"], 2.5 * a["VoxelVolume"], epsilon = 1e-12);
    }

    #[test]
    fn empty_mask_is_an_error() {
        let m = block([3, 3, 3], [1.0; 3], [1, 1, 1], [1, 1, 1]);
        assert_eq!(shape(&m), Err(FeatureError::EmptyMask));
    }
}
