//! Per-slice metadata extraction.

use super::{tags, DicomError, DicomObject, DicomTag};

/// Everything the pipeline needs to know about one image slice.
///
/// Geometry fields are mandatory because the volume builder cannot place a
/// slice without them; acquisition parameters are optional and stay `None`
/// when the tag is absent so that quality control can tell "missing" from
/// any default.
#[derive(Debug, Clone, PartialEq)]
pub struct SliceMeta {
    pub patient_id: String,
    pub sop_uid: String,
    pub series_uid: String,
    pub modality: String,
    pub rows: u32,
    pub cols: u32,
    /// (row spacing, column spacing) in mm, i.e. PixelSpacing order.
    pub pixel_spacing: (f64, f64),
    /// Patient-space position of the first transmitted voxel centre, mm.
    pub image_position: (f64, f64, f64),
    /// Row direction cosines followed by column direction cosines.
    pub orientation: [f64; 6],
    pub slice_thickness: Option<f64>,
    pub rescale_slope: Option<f64>,
    pub rescale_intercept: Option<f64>,
    pub convolution_kernel: Option<String>,
    pub kvp: Option<f64>,
    pub exposure: Option<f64>,
    pub tube_current: Option<f64>,
    pub series_date: Option<String>,
    pub manufacturer: Option<String>,
}

impl SliceMeta {
    /// Unit row/column cosines as vectors.
    pub fn row_cosines(&self) -> [f64; 3] {
        [self.orientation[0], self.orientation[1], self.orientation[2]]
    }

    pub fn col_cosines(&self) -> [f64; 3] {
        [self.orientation[3], self.orientation[4], self.orientation[5]]
    }

    /// Slice normal: cross product of the row and column cosines.
    pub fn normal(&self) -> [f64; 3] {
        let r = self.row_cosines();
        let c = self.col_cosines();
        [
            r[1] * c[2] - r[2] * c[1],
            r[2] * c[0] - r[0] * c[2],
            r[0] * c[1] - r[1] * c[0],
        ]
    }

    /// Signed distance of this slice along the normal, the sort key for
    /// volume assembly.
    pub fn position_along_normal(&self) -> f64 {
        let n = self.normal();
        let p = self.image_position;
        p.0 * n[0] + p.1 * n[1] + p.2 * n[2]
    }
}

fn decimals_exact(obj: &DicomObject, tag: DicomTag, n: usize) -> Result<Vec<f64>, DicomError> {
    let v = obj.decode(tag)?.into_decimals(tag)?;
    if v.len() != n {
        return Err(DicomError::BadMultiplicity { tag, expected: n, found: v.len() });
    }
    Ok(v)
}

fn opt_first_decimal(obj: &DicomObject, tag: DicomTag) -> Result<Option<f64>, DicomError> {
    match obj.decode(tag) {
        Ok(v) => Ok(v.into_decimals(tag)?.first().copied()),
        Err(DicomError::TagAbsent(_)) => Ok(None),
        Err(e) => Err(e),
    }
}

fn opt_text(obj: &DicomObject, tag: DicomTag) -> Result<Option<String>, DicomError> {
    match obj.decode(tag) {
        Ok(v) => Ok(Some(v.into_text(tag)?)),
        Err(DicomError::TagAbsent(_)) => Ok(None),
        Err(e) => Err(e),
    }
}

/// Pull a [`SliceMeta`] out of a parsed image object.
///
/// Intended for image slices: rows, columns, pixel spacing and the patient
/// geometry are required. An object that carries pixel data but no
/// position/orientation reports `MissingGeometry`; validation failures of
/// spacing or cosines report `InvalidGeometry`.
pub fn extract_slice_meta(obj: &DicomObject) -> Result<SliceMeta, DicomError> {
    let modality = obj.decode_text(tags::MODALITY)?;
    let image_bearing = obj.get(tags::PIXEL_DATA).is_some();

    if image_bearing
        && (obj.get(tags::IMAGE_POSITION_PATIENT).is_none() || obj.get(tags::IMAGE_ORIENTATION_PATIENT).is_none())
    {
        return Err(DicomError::MissingGeometry);
    }

    let rows = obj.decode(tags::ROWS)?.into_integers(tags::ROWS)?;
    let cols = obj.decode(tags::COLUMNS)?.into_integers(tags::COLUMNS)?;
    let (rows, cols) = match (rows.first(), cols.first()) {
        (Some(&r), Some(&c)) if r > 0 && c > 0 => (r as u32, c as u32),
        _ => {
            return Err(DicomError::InvalidGeometry {
                tag: tags::ROWS,
                reason: "rows/columns must be positive".into(),
            })
        }
    };

    let spacing = decimals_exact(obj, tags::PIXEL_SPACING, 2)?;
    if spacing[0] <= 0.0 || spacing[1] <= 0.0 {
        return Err(DicomError::InvalidGeometry {
            tag: tags::PIXEL_SPACING,
            reason: format!("non-positive spacing {spacing:?}"),
        });
    }

    let pos = decimals_exact(obj, tags::IMAGE_POSITION_PATIENT, 3)?;
    let orient = decimals_exact(obj, tags::IMAGE_ORIENTATION_PATIENT, 6)?;
    let orientation: [f64; 6] = orient.as_slice().try_into().unwrap();
    validate_orientation(&orientation)?;

    Ok(SliceMeta {
        patient_id: obj.decode_text(tags::PATIENT_ID)?,
        sop_uid: obj.decode_text(tags::SOP_INSTANCE_UID)?,
        series_uid: obj.decode_text(tags::SERIES_INSTANCE_UID)?,
        modality,
        rows,
        cols,
        pixel_spacing: (spacing[0], spacing[1]),
        image_position: (pos[0], pos[1], pos[2]),
        orientation,
        slice_thickness: opt_first_decimal(obj, tags::SLICE_THICKNESS)?,
        rescale_slope: opt_first_decimal(obj, tags::RESCALE_SLOPE)?,
        rescale_intercept: opt_first_decimal(obj, tags::RESCALE_INTERCEPT)?,
        convolution_kernel: opt_text(obj, tags::CONVOLUTION_KERNEL)?,
        kvp: opt_first_decimal(obj, tags::KVP)?,
        exposure: opt_first_decimal(obj, tags::EXPOSURE)?,
        tube_current: opt_first_decimal(obj, tags::TUBE_CURRENT)?,
        series_date: opt_text(obj, tags::SERIES_DATE)?,
        manufacturer: opt_text(obj, tags::MANUFACTURER)?,
    })
}

const COSINE_TOL: f64 = 1e-3;

fn validate_orientation(o: &[f64; 6]) -> Result<(), DicomError> {
    let norm = |v: &[f64]| (v[0] * v[0] + v[1] * v[1] + v[2] * v[2]).sqrt();
    let row = &o[0..3];
    let col = &o[3..6];
    if (norm(row) - 1.0).abs() > COSINE_TOL || (norm(col) - 1.0).abs() > COSINE_TOL {
        return Err(DicomError::InvalidGeometry {
            tag: tags::IMAGE_ORIENTATION_PATIENT,
            reason: "direction cosines are not unit length".into(),
        });
    }
    let dot = row[0] * col[0] + row[1] * col[1] + row[2] * col[2];
    if dot.abs() > COSINE_TOL {
        return Err(DicomError::InvalidGeometry {
            tag: tags::IMAGE_ORIENTATION_PATIENT,
            reason: "row and column cosines are not orthogonal".into(),
        });
    }
    Ok(())
}
