//! RT structure set handling: turning ROIContourSequence into point lists.

use std::collections::BTreeMap;

use super::{decode_element, tags, DicomError, DicomObject, ElementMap};

/// One region of interest: its name and the planar polygons that trace it,
/// in patient coordinates (mm). Polygons are closed implicitly (no repeated
/// final point) and each one lies in a single axial plane.
#[derive(Debug, Clone, PartialEq)]
pub struct ContourSet {
    pub roi_name: String,
    pub referenced_series_uid: String,
    pub planar_contours: Vec<Vec<[f64; 3]>>,
}

const PLANE_TOL_MM: f64 = 1e-3;

fn item_text(item: &ElementMap, tag: super::DicomTag) -> Option<String> {
    let el = item.get(&tag)?;
    decode_element(tag, el).ok()?.into_text(tag).ok()
}

fn item_integer(item: &ElementMap, tag: super::DicomTag) -> Option<i64> {
    let el = item.get(&tag)?;
    decode_element(tag, el).ok()?.into_integers(tag).ok()?.first().copied()
}

/// Find the SeriesInstanceUID of the image series an RTSTRUCT refers to by
/// walking ReferencedFrameOfReference -> RTReferencedStudy ->
/// RTReferencedSeries. Empty string when the chain is absent.
fn referenced_series_uid(obj: &DicomObject) -> String {
    let frames = match obj.get(tags::REFERENCED_FRAME_OF_REFERENCE_SEQ).and_then(|el| el.items()) {
        Some(items) => items,
        None => return String::new(),
    };
    for frame in frames {
        let studies = match frame.get(&tags::RT_REFERENCED_STUDY_SEQ).and_then(|el| el.items()) {
            Some(items) => items,
            None => continue,
        };
        for study in studies {
            let series = match study.get(&tags::RT_REFERENCED_SERIES_SEQ).and_then(|el| el.items()) {
                Some(items) => items,
                None => continue,
            };
            for s in series {
                if let Some(uid) = item_text(s, tags::SERIES_INSTANCE_UID) {
                    return uid;
                }
            }
        }
    }
    String::new()
}

/// Extract all ROIs of a structure set, in ROIContourSequence order.
///
/// Names come from StructureSetROISequence, matched on ROINumber; an ROI
/// without a name entry falls back to `roi_<number>`. Contours with fewer
/// than three points cannot enclose any area and are dropped. ContourData
/// whose length is not a multiple of three, and contours that are not planar
/// in z (within 1e-3 mm), are rejected.
pub fn parse_rtstruct(obj: &DicomObject) -> Result<Vec<ContourSet>, DicomError> {
    let roi_contours = obj
        .get(tags::ROI_CONTOUR_SEQ)
        .and_then(|el| el.items())
        .filter(|items| !items.is_empty())
        .ok_or(DicomError::NoContours)?;

    let mut names: BTreeMap<i64, String> = BTreeMap::new();
    if let Some(rois) = obj.get(tags::STRUCTURE_SET_ROI_SEQ).and_then(|el| el.items()) {
        for roi in rois {
            if let (Some(number), Some(name)) = (item_integer(roi, tags::ROI_NUMBER), item_text(roi, tags::ROI_NAME)) {
                names.insert(number, name);
            }
        }
    }

    let series_uid = referenced_series_uid(obj);

    let mut sets = Vec::new();
    for roi in roi_contours {
        let number = item_integer(roi, tags::REFERENCED_ROI_NUMBER).unwrap_or(-1);
        let roi_name = names.get(&number).cloned().unwrap_or_else(|| format!("roi_{number}"));

        let mut planar_contours = Vec::new();
        if let Some(contours) = roi.get(&tags::CONTOUR_SEQ).and_then(|el| el.items()) {
            for contour in contours {
                let el = match contour.get(&tags::CONTOUR_DATA) {
                    Some(el) => el,
                    None => continue,
                };
                let coords = decode_element(tags::CONTOUR_DATA, el)?.into_decimals(tags::CONTOUR_DATA)?;
                if coords.len() % 3 != 0 {
                    return Err(DicomError::OddContourData(coords.len()));
                }
                let points: Vec<[f64; 3]> = coords.chunks_exact(3).map(|c| [c[0], c[1], c[2]]).collect();
                if points.len() < 3 {
                    continue;
                }
                let z0 = points[0][2];
                if points.iter().any(|p| (p[2] - z0).abs() > PLANE_TOL_MM) {
                    return Err(DicomError::InvalidGeometry {
                        tag: tags::CONTOUR_DATA,
                        reason: "contour is not planar in z".into(),
                    });
                }
                planar_contours.push(points);
            }
        }

        sets.push(ContourSet { roi_name, referenced_series_uid: series_uid.clone(), planar_contours });
    }

    Ok(sets)
}
