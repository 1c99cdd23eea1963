//! Quick-check slice export: window a volume to 8-bit and write one portable
//! pixmap per axial slice, painting mask boundary voxels pure red.
//!
//! Binary PGM (P5) is used for plain volumes and binary PPM (P6) when a mask
//! overlay is requested — lossless and byte-deterministic, unlike JPEG.

use std::path::{Path, PathBuf};

use crate::util::write_atomic;
use crate::volume::{Mask, Volume, VolumeError};

/// Map one voxel value to 8-bit through the half-open window `[lo, hi]`.
pub fn window_value(value: f64, lo: f64, hi: f64) -> u8 {
    if value <= lo {
        0
    } else if value >= hi {
        255
    } else {
        ((value - lo) / (hi - lo) * 255.0).round() as u8
    }
}

/// A mask voxel is a boundary voxel when it is 1 and any of its four in-plane
/// neighbors is 0 (voxels beyond the grid edge count as 0).
fn is_boundary(m: &Mask, i: usize, j: usize, k: usize) -> bool {
    if m.at(i, j, k) != 1 {
        return false;
    }
    let [nx, ny, _] = m.geom.dims;
    let neighbor = |di: isize, dj: isize| -> u8 {
        let (ni, nj) = (i as isize + di, j as isize + dj);
        if ni < 0 || nj < 0 || ni >= nx as isize || nj >= ny as isize {
            0
        } else {
            m.at(ni as usize, nj as usize, k)
        }
    };
    neighbor(-1, 0) == 0 || neighbor(1, 0) == 0 || neighbor(0, -1) == 0 || neighbor(0, 1) == 0
}

/// Render slice `k` to a complete PGM/PPM file. `range` is the window as
/// `(lo, hi)`; `None` means the degenerate fallback where every pixel is
/// mid-gray 128.
pub fn render_slice(v: &Volume, mask: Option<&Mask>, k: usize, range: Option<(f64, f64)>) -> Vec<u8> {
    let [nx, ny, _] = v.geom.dims;
    let gray = |i: usize, j: usize| match range {
        Some((lo, hi)) => window_value(v.at(i, j, k), lo, hi),
        None => 128,
    };
    match mask {
        None => {
            let mut out = format!("P5\n{nx} {ny}\n255\n").into_bytes();
            for j in 0..ny {
                for i in 0..nx {
                    out.push(gray(i, j));
                }
            }
            out
        }
        Some(m) => {
            let mut out = format!("P6\n{nx} {ny}\n255\n").into_bytes();
            for j in 0..ny {
                for i in 0..nx {
                    if is_boundary(m, i, j, k) {
                        out.extend_from_slice(&[255, 0, 0]);
                    } else {
                        let g = gray(i, j);
                        out.extend_from_slice(&[g, g, g]);
                    }
                }
            }
            out
        }
    }
}

/// Resolve the window request against the volume. An explicit `(level,
/// width)` must have positive finite width; the default is the volume's
/// min–max range, degenerating to `None` (mid-gray) for constant volumes.
pub fn resolve_window(v: &Volume, window: Option<(f64, f64)>) -> Result<Option<(f64, f64)>, VolumeError> {
    match window {
        Some((level, width)) => {
            if !width.is_finite() || width <= 0.0 || !level.is_finite() {
                return Err(VolumeError::InvalidWindow(width));
            }
            Ok(Some((level - width / 2.0, level + width / 2.0)))
        }
        None => {
            let min = v.data.iter().copied().fold(f64::INFINITY, f64::min);
            let max = v.data.iter().copied().fold(f64::NEG_INFINITY, f64::max);
            Ok(if min < max { Some((min, max)) } else { None })
        }
    }
}

/// Write one image per axial slice into `out_dir`, named
/// `{patient_id}_slice{k:03}.pgm` (or `.ppm` with a mask overlay). Returns
/// the paths in slice order.
pub fn unroll(
    v: &Volume,
    mask: Option<&Mask>,
    window: Option<(f64, f64)>,
    patient_id: &str,
    out_dir: &Path,
) -> Result<Vec<PathBuf>, VolumeError> {
    if let Some(m) = mask {
        if !m.geom.compatible(&v.geom) {
            return Err(VolumeError::GeometryMismatch(
                "mask geometry differs from the volume it overlays".into(),
            ));
        }
    }
    let range = resolve_window(v, window)?;
    let ext = if mask.is_some() { "ppm" } else { "pgm" };
    let mut paths = Vec::new();
    for k in 0..v.geom.dims[2] {
        let path = out_dir.join(format!("{patient_id}_slice{k:03}.{ext}"));
        write_atomic(&path, &render_slice(v, mask, k, range))?;
        paths.push(path);
    }
    Ok(paths)
}
