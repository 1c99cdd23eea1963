//! Voxel volumes, masks and assembly of DICOM series into volumes.

use crate::catalog::SeriesRecord;
use crate::dicom::PixelGrid;

/// Regular-grid geometry shared by volumes and masks.
///
/// `direction[k]` is the patient-space unit vector along voxel axis `k`.
/// Axis 0 runs along image columns (fastest-varying in memory), axis 1 along
/// image rows, axis 2 across slices. The affine map is
/// `position(i,j,k) = origin + i*sx*d0 + j*sy*d1 + k*sz*d2`.
#[derive(Debug, Clone, PartialEq)]
pub struct Geometry {
    pub dims: [usize; 3],
    pub spacing: [f64; 3],
    pub origin: [f64; 3],
    pub direction: [[f64; 3]; 3],
}

impl Geometry {
    /// Axis-aligned geometry with identity direction.
    pub fn axial(dims: [usize; 3], spacing: [f64; 3], origin: [f64; 3]) -> Geometry {
        Geometry {
            dims,
            spacing,
            origin,
            direction: [[1.0, 0.0, 0.0], [0.0, 1.0, 0.0], [0.0, 0.0, 1.0]],
        }
    }

    pub fn voxel_count(&self) -> usize {
        self.dims[0] * self.dims[1] * self.dims[2]
    }

    pub fn index_of(&self, i: usize, j: usize, k: usize) -> usize {
        i + self.dims[0] * (j + self.dims[1] * k)
    }

    /// Patient-space position of the centre of voxel (i, j, k).
    pub fn index_to_position(&self, idx: [f64; 3]) -> [f64; 3] {
        let mut p = self.origin;
        for axis in 0..3 {
            for c in 0..3 {
                p[c] += self.direction[axis][c] * self.spacing[axis] * idx[axis];
            }
        }
        p
    }

    /// Continuous voxel index of a patient-space point. Valid because the
    /// direction matrix is orthonormal, so its inverse is its transpose.
    pub fn position_to_index(&self, p: [f64; 3]) -> [f64; 3] {
        let d = [p[0] - self.origin[0], p[1] - self.origin[1], p[2] - self.origin[2]];
        let mut idx = [0.0; 3];
        for axis in 0..3 {
            let dot = d[0] * self.direction[axis][0] + d[1] * self.direction[axis][1] + d[2] * self.direction[axis][2];
            idx[axis] = dot / self.spacing[axis];
        }
        idx
    }

    /// Loose geometric equality for pairing a volume with its mask: same
    /// dims, spacing/origin/direction within an absolute 1e-6.
    pub fn compatible(&self, other: &Geometry) -> bool {
        const TOL: f64 = 1e-6;
        if self.dims != other.dims {
            return false;
        }
        let close = |a: f64, b: f64| (a - b).abs() <= TOL;
        (0..3).all(|i| {
            close(self.spacing[i], other.spacing[i])
                && close(self.origin[i], other.origin[i])
                && (0..3).all(|c| close(self.direction[i][c], other.direction[i][c]))
        })
    }
}

/// On-disk scalar type of a volume. Assembly keeps CT volumes as int16 when
/// the rescaled values allow it, so NRRD payloads round-trip bit for bit;
/// preprocessing promotes to float64.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ScalarType {
    Int16,
    Uint8,
    Float64,
}

/// A scalar image volume. Values are held as f64 in memory regardless of
/// `stored`, which only governs serialization.
#[derive(Debug, Clone, PartialEq)]
pub struct Volume {
    pub geom: Geometry,
    pub data: Vec<f64>,
    pub stored: ScalarType,
    pub intensity_unit: String,
}

impl Volume {
    pub fn at(&self, i: usize, j: usize, k: usize) -> f64 {
        self.data[self.geom.index_of(i, j, k)]
    }

    /// Pick the narrowest storage type that represents every value exactly.
    pub fn tighten_storage(&mut self) {
        let int16_ok = self
            .data
            .iter()
            .all(|&v| v.fract() == 0.0 && (f64::from(i16::MIN)..=f64::from(i16::MAX)).contains(&v));
        self.stored = if int16_ok { ScalarType::Int16 } else { ScalarType::Float64 };
    }
}

/// A binary ROI mask on the same grid type as [`Volume`]; voxel values are
/// strictly 0 or 1.
#[derive(Debug, Clone, PartialEq)]
pub struct Mask {
    pub geom: Geometry,
    pub data: Vec<u8>,
}

impl Mask {
    pub fn ones_count(&self) -> usize {
        self.data.iter().filter(|&&v| v == 1).count()
    }

    pub fn at(&self, i: usize, j: usize, k: usize) -> u8 {
        self.data[self.geom.index_of(i, j, k)]
    }

    /// Reinterpret a volume as a mask; every voxel must be exactly 0 or 1.
    pub fn from_volume(v: &Volume) -> Result<Mask, VolumeError> {
        let mut data = Vec::with_capacity(v.data.len());
        for &x in &v.data {
            if x == 0.0 {
                data.push(0);
            } else if x == 1.0 {
                data.push(1);
            } else {
                return Err(VolumeError::MaskNotBinary(x));
            }
        }
        Ok(Mask { geom: v.geom.clone(), data })
    }
}

#[derive(Debug, thiserror::Error)]
pub enum VolumeError {
    #[error("a volume needs at least two slices")]
    SingleSlice,
    #[error("geometry mismatch: {0}")]
    GeometryMismatch(String),
    #[error("bad NRRD header: {0}")]
    BadHeader(String),
    #[error("payload holds {found} values, header promises {expected}")]
    SizeMismatch { expected: usize, found: usize },
    #[error("mask voxel value {0} is neither 0 nor 1")]
    MaskNotBinary(f64),
    #[error("window width must be positive, got {0}")]
    InvalidWindow(f64),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

/// Assemble a sorted, rescaled volume from one series.
///
/// `grids` holds the decoded pixel grid of each slice, parallel to
/// `record.slices`. Slices are ordered by the projection of their position
/// onto the slice normal, so the input order does not matter. The z spacing
/// is the median inter-slice distance rather than the SliceThickness tag;
/// non-uniform gaps produce a warning (returned alongside the volume) and
/// are otherwise left to quality control. Stored values are mapped through
/// slope/intercept whenever both tags are present on a slice.
pub fn build_volume(record: &SeriesRecord, grids: &[PixelGrid]) -> Result<(Volume, Vec<String>), VolumeError> {
    let slices = &record.slices;
    if slices.len() != grids.len() {
        return Err(VolumeError::GeometryMismatch(format!(
            "{} slices but {} pixel grids",
            slices.len(),
            grids.len()
        )));
    }
    if slices.len() < 2 {
        return Err(VolumeError::SingleSlice);
    }

    let rows = slices[0].rows as usize;
    let cols = slices[0].cols as usize;
    for (meta, grid) in slices.iter().zip(grids) {
        if meta.rows as usize != rows || meta.cols as usize != cols {
            return Err(VolumeError::GeometryMismatch("slice dimensions differ within the series".into()));
        }
        if grid.rows != rows || grid.cols != cols {
            return Err(VolumeError::GeometryMismatch("pixel grid does not match slice metadata".into()));
        }
    }

    let mut order: Vec<usize> = (0..slices.len()).collect();
    order.sort_by(|&a, &b| {
        slices[a]
            .position_along_normal()
            .partial_cmp(&slices[b].position_along_normal())
            .unwrap()
    });

    let keys: Vec<f64> = order.iter().map(|&i| slices[i].position_along_normal()).collect();
    let gaps: Vec<f64> = keys.windows(2).map(|w| w[1] - w[0]).collect();
    if gaps.iter().any(|&g| g <= 0.0) {
        return Err(VolumeError::GeometryMismatch("duplicate slice positions".into()));
    }
    let sz = crate::util::median(&gaps).unwrap();

    let mut warnings = Vec::new();
    if gaps.iter().any(|&g| (g - sz).abs() > 1e-3) {
        warnings.push(format!(
            "non-uniform slice spacing: gaps range {:.4}..{:.4} mm around median {:.4} mm",
            gaps.iter().cloned().fold(f64::INFINITY, f64::min),
            gaps.iter().cloned().fold(f64::NEG_INFINITY, f64::max),
            sz
        ));
    }

    let first = &slices[order[0]];
    let geom = Geometry {
        dims: [cols, rows, slices.len()],
        // PixelSpacing is (row spacing, column spacing); axis 0 runs along
        // columns, so its step is the column spacing.
        spacing: [first.pixel_spacing.1, first.pixel_spacing.0, sz],
        origin: [first.image_position.0, first.image_position.1, first.image_position.2],
        direction: [first.row_cosines(), first.col_cosines(), first.normal()],
    };

    let mut data = Vec::with_capacity(geom.voxel_count());
    let mut rescaled_everywhere = true;
    for &si in &order {
        let meta = &slices[si];
        let grid = &grids[si];
        match (meta.rescale_slope, meta.rescale_intercept) {
            (Some(slope), Some(intercept)) => {
                data.extend(grid.data.iter().map(|&v| f64::from(v) * slope + intercept));
            }
            _ => {
                rescaled_everywhere = false;
                data.extend(grid.data.iter().map(|&v| f64::from(v)));
            }
        }
    }

    let intensity_unit = if rescaled_everywhere && first.modality == "CT" { "HU" } else { "stored" };
    let mut volume = Volume { geom, data, stored: ScalarType::Float64, intensity_unit: intensity_unit.into() };
    volume.tighten_storage();
    Ok((volume, warnings))
}
