//! Seeded synthetic fixtures: CT series (clean and defective), structure
//! sets, config files, and feature tables with planted effect sizes.
//!
//! Everything here is deterministic in the seed. The generator writes real
//! part-10 files through its own little encoder, so the parser is exercised
//! end to end rather than fed hand-built element maps; the nine defect kinds
//! line up one-to-one with the nine quality checks.

use std::f64::consts::{FRAC_1_SQRT_2, TAU};
use std::io;
use std::path::Path;

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::{ChaCha8Rng, ChaCha12Rng};

use crate::catalog::SeriesRecord;
use crate::dicom::{
    lookup_vr, parse_file, tags, DicomElement, DicomObject, DicomTag, ElementMap, ElementValue,
    TransferSyntax, Vr,
};
use crate::preprocess::{PreprocessParams, Scope, Step};
use crate::features::ExtractionParams;
use crate::qc::{CheckKind, Projection, QualitySpec};
use crate::util::write_atomic;

pub const CT_IMAGE_SOP_CLASS: &str = "1.2.840.10008.5.1.4.1.1.2";
pub const RTSTRUCT_SOP_CLASS: &str = "1.2.840.10008.5.1.4.1.1.481.3";

const PRIVATE_CREATOR: DicomTag = DicomTag::new(0x0009, 0x0010);

// ---------------------------------------------------------------------------
// part-10 encoding

const UNDEFINED: u32 = 0xFFFF_FFFF;

fn write_tag(buf: &mut Vec<u8>, tag: DicomTag) {
    buf.extend_from_slice(&tag.group.to_le_bytes());
    buf.extend_from_slice(&tag.element.to_le_bytes());
}

fn encode_element(buf: &mut Vec<u8>, tag: DicomTag, el: &DicomElement, implicit: bool) {
    write_tag(buf, tag);
    match &el.value {
        ElementValue::Bytes(bytes) => {
            assert!(bytes.len() % 2 == 0, "odd value length on {tag}");
            if implicit {
                buf.extend_from_slice(&(bytes.len() as u32).to_le_bytes());
            } else if el.vr.has_long_header() {
                buf.extend_from_slice(&el.vr.0);
                buf.extend_from_slice(&[0, 0]);
                buf.extend_from_slice(&(bytes.len() as u32).to_le_bytes());
            } else {
                buf.extend_from_slice(&el.vr.0);
                buf.extend_from_slice(&(bytes.len() as u16).to_le_bytes());
            }
            buf.extend_from_slice(bytes);
        }
        ElementValue::Sequence(items) => {
            if implicit {
                buf.extend_from_slice(&UNDEFINED.to_le_bytes());
            } else {
                buf.extend_from_slice(&el.vr.0);
                buf.extend_from_slice(&[0, 0]);
                buf.extend_from_slice(&UNDEFINED.to_le_bytes());
            }
            // an undefined-length UN element is read back as an implicit
            // sequence, so it must be written as one
            let inner_implicit = implicit || el.vr == Vr::new(b"UN");
            for item in items {
                write_tag(buf, tags::ITEM);
                buf.extend_from_slice(&UNDEFINED.to_le_bytes());
                for (t, e) in item {
                    encode_element(buf, *t, e, inner_implicit);
                }
                write_tag(buf, tags::ITEM_DELIMITER);
                buf.extend_from_slice(&0u32.to_le_bytes());
            }
            write_tag(buf, tags::SEQUENCE_DELIMITER);
            buf.extend_from_slice(&0u32.to_le_bytes());
        }
    }
}

/// Serialize a dataset to part-10 bytes: preamble, magic, file-meta group in
/// explicit VR, then the main dataset in the object's transfer syntax.
pub fn encode_object(obj: &DicomObject) -> Vec<u8> {
    let implicit = obj.transfer_syntax == TransferSyntax::ImplicitVrLittleEndian;
    let mut buf = vec![0u8; 128];
    buf.extend_from_slice(b"DICM");
    for (tag, el) in &obj.elements {
        if tag.group == 0x0002 {
            encode_element(&mut buf, *tag, el, false);
        } else {
            encode_element(&mut buf, *tag, el, implicit);
        }
    }
    buf
}

// ---------------------------------------------------------------------------
// element builders

fn pad(mut bytes: Vec<u8>, pad_byte: u8) -> Vec<u8> {
    if bytes.len() % 2 == 1 {
        bytes.push(pad_byte);
    }
    bytes
}

fn latin1_bytes(s: &str) -> Vec<u8> {
    s.chars().map(|c| if (c as u32) < 256 { c as u8 } else { b'?' }).collect()
}

/// Text element with the dictionary VR (UIs pad with NUL, the rest with
/// space, per the standard).
fn text_el(tag: DicomTag, s: &str) -> DicomElement {
    let vr = lookup_vr(tag).expect("text builder is only used for dictionary tags");
    let pad_byte = if vr == Vr::new(b"UI") { 0u8 } else { b' ' };
    DicomElement { vr, value: ElementValue::Bytes(pad(latin1_bytes(s), pad_byte)) }
}

fn ds_el(tag: DicomTag, values: &[f64]) -> DicomElement {
    debug_assert_eq!(lookup_vr(tag), Some(Vr::new(b"DS")));
    let joined = values.iter().map(|v| format!("{v}")).collect::<Vec<_>>().join("\\");
    DicomElement { vr: Vr::new(b"DS"), value: ElementValue::Bytes(pad(joined.into_bytes(), b' ')) }
}

fn is_el(tag: DicomTag, value: i64) -> DicomElement {
    debug_assert_eq!(lookup_vr(tag), Some(Vr::new(b"IS")));
    DicomElement { vr: Vr::new(b"IS"), value: ElementValue::Bytes(pad(format!("{value}").into_bytes(), b' ')) }
}

fn us_el(value: u16) -> DicomElement {
    DicomElement { vr: Vr::new(b"US"), value: ElementValue::Bytes(value.to_le_bytes().to_vec()) }
}

fn seq_el(items: Vec<ElementMap>) -> DicomElement {
    DicomElement { vr: Vr::new(b"SQ"), value: ElementValue::Sequence(items) }
}

/// A private element round-trips as LO in explicit files but as UN (raw
/// bytes) in implicit ones, so the stored VR depends on the target syntax.
fn private_el(syntax: TransferSyntax, s: &str) -> DicomElement {
    let vr = match syntax {
        TransferSyntax::ExplicitVrLittleEndian => Vr::new(b"LO"),
        TransferSyntax::ImplicitVrLittleEndian => Vr::new(b"UN"),
    };
    DicomElement { vr, value: ElementValue::Bytes(pad(latin1_bytes(s), b' ')) }
}

/// Compute and insert the file-meta group length, (0002,0000).
fn seal_file_meta(elements: &mut ElementMap) {
    let mut buf = Vec::new();
    for (tag, el) in elements.range(DicomTag::new(0x0002, 0x0001)..DicomTag::new(0x0003, 0x0000)) {
        encode_element(&mut buf, *tag, el, false);
    }
    elements.insert(
        tags::FILE_META_GROUP_LENGTH,
        DicomElement {
            vr: Vr::new(b"UL"),
            value: ElementValue::Bytes((buf.len() as u32).to_le_bytes().to_vec()),
        },
    );
}

// ---------------------------------------------------------------------------
// CT series

/// The nine single-defect kinds, one per quality check.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Defect {
    WrongModality,
    WrongProjection,
    MissingSlice,
    TooFewSlices,
    ThicknessOutOfRange,
    SpacingOutOfRange,
    BadKernel,
    WrongResolution,
    MissingRescale,
}

impl Defect {
    pub const ALL: [Defect; 9] = [
        Defect::WrongModality,
        Defect::WrongProjection,
        Defect::MissingSlice,
        Defect::TooFewSlices,
        Defect::ThicknessOutOfRange,
        Defect::SpacingOutOfRange,
        Defect::BadKernel,
        Defect::WrongResolution,
        Defect::MissingRescale,
    ];

    pub fn kind_name(&self) -> &'static str {
        match self {
            Defect::WrongModality => "wrong-modality",
            Defect::WrongProjection => "wrong-projection",
            Defect::MissingSlice => "missing-slice",
            Defect::TooFewSlices => "too-few-slices",
            Defect::ThicknessOutOfRange => "thickness-out-of-range",
            Defect::SpacingOutOfRange => "spacing-out-of-range",
            Defect::BadKernel => "bad-kernel",
            Defect::WrongResolution => "wrong-resolution",
            Defect::MissingRescale => "missing-rescale",
        }
    }

    /// The one check this defect must trip.
    pub fn failing_check(&self) -> CheckKind {
        match self {
            Defect::WrongModality => CheckKind::Modality,
            Defect::WrongProjection => CheckKind::Projection,
            Defect::MissingSlice => CheckKind::SliceConsistency,
            Defect::TooFewSlices => CheckKind::SliceCount,
            Defect::ThicknessOutOfRange => CheckKind::Thickness,
            Defect::SpacingOutOfRange => CheckKind::Spacing,
            Defect::BadKernel => CheckKind::Kernel,
            Defect::WrongResolution => CheckKind::Resolution,
            Defect::MissingRescale => CheckKind::SlopeIntercept,
        }
    }

    pub fn from_name(name: &str) -> Option<Defect> {
        Defect::ALL.iter().copied().find(|d| d.kind_name() == name)
    }
}

/// Everything that determines a generated series, so that the same spec
/// always yields the same bytes.
#[derive(Debug, Clone, PartialEq)]
pub struct CtSeriesSpec {
    pub patient_id: String,
    pub syntax: TransferSyntax,
    pub modality: String,
    pub n_slices: usize,
    /// Index removed after positions are assigned (creates a gap).
    pub drop_slice: Option<usize>,
    pub rows: u16,
    pub cols: u16,
    /// (row spacing, column spacing) in mm.
    pub pixel_spacing: (f64, f64),
    pub slice_thickness: f64,
    pub slice_gap: f64,
    pub origin: [f64; 3],
    pub orientation: [f64; 6],
    pub kernel: String,
    pub rescale: Option<(f64, f64)>,
    uid_key: (u32, u32),
    noise_seed: u64,
}

/// The spec every check accepts, matching [`CtSeriesSpec::sample`] ranges.
pub fn default_quality_spec() -> QualitySpec {
    QualitySpec {
        target_modality: Some("CT".into()),
        projection: Some(Projection::Axial),
        check_slice_consistency: true,
        min_slice_count: Some(5),
        thickness_range: Some((1.0, 5.0)),
        spacing_range: Some((0.5, 2.0)),
        kernel_whitelist: Some(vec!["STANDARD".into(), "B30f".into(), "LUNG".into()]),
        required_in_plane: Some((64, 64)),
        check_slope_intercept: true,
    }
}

impl CtSeriesSpec {
    /// Draw a clean series: every parameter inside the ranges that
    /// [`default_quality_spec`] accepts.
    pub fn sample(rng: &mut impl Rng, patient_id: &str) -> CtSeriesSpec {
        let syntax = if rng.gen::<bool>() {
            TransferSyntax::ExplicitVrLittleEndian
        } else {
            TransferSyntax::ImplicitVrLittleEndian
        };
        let thickness = *[1.5, 2.0, 2.5, 3.0, 4.0].choose(rng).unwrap();
        let spacing = rng.gen_range(0.6..1.4);
        let kernel = ["STANDARD", "B30f", "LUNG"].choose(rng).unwrap().to_string();
        CtSeriesSpec {
            patient_id: patient_id.to_string(),
            syntax,
            modality: "CT".into(),
            n_slices: rng.gen_range(8..=12),
            drop_slice: None,
            rows: 64,
            cols: 64,
            pixel_spacing: (spacing, spacing),
            slice_thickness: thickness,
            slice_gap: thickness,
            origin: [rng.gen_range(-250.0..-150.0), rng.gen_range(-250.0..-150.0), rng.gen_range(-60.0..60.0)],
            orientation: [1.0, 0.0, 0.0, 0.0, 1.0, 0.0],
            kernel,
            rescale: Some((1.0, -1024.0)),
            uid_key: (rng.next_u32(), rng.next_u32()),
            noise_seed: rng.next_u64(),
        }
    }

    /// Plant one defect; all other parameters stay clean.
    pub fn with_defect(mut self, defect: Defect) -> CtSeriesSpec {
        match defect {
            Defect::WrongModality => self.modality = "MR".into(),
            Defect::WrongProjection => {
                // in-plane rotation by 45 degrees: still orthonormal, not axial
                let c = FRAC_1_SQRT_2;
                self.orientation = [c, c, 0.0, -c, c, 0.0];
            }
            Defect::MissingSlice => self.drop_slice = Some(self.n_slices / 2),
            Defect::TooFewSlices => self.n_slices = 3,
            Defect::ThicknessOutOfRange => self.slice_thickness = 7.5,
            Defect::SpacingOutOfRange => self.pixel_spacing = (2.5, 2.5),
            Defect::BadKernel => self.kernel = "SMOOTH_X".into(),
            Defect::WrongResolution => {
                self.rows = 32;
                self.cols = 32;
            }
            Defect::MissingRescale => self.rescale = None,
        }
        self
    }

    fn uid(&self, branch: u32, leaf: u32) -> String {
        format!("1.2.826.0.1.3680043.10.511.{}.{}.{branch}.{leaf}", self.uid_key.0, self.uid_key.1)
    }

    pub fn study_uid(&self) -> String {
        self.uid(1, 0)
    }

    pub fn series_uid(&self) -> String {
        self.uid(2, 0)
    }

    pub fn frame_uid(&self) -> String {
        self.uid(3, 0)
    }

    pub fn sop_uid(&self, index: usize) -> String {
        self.uid(4, index as u32 + 1)
    }
}

/// A built series: file stems plus the objects behind them.
#[derive(Debug, Clone, PartialEq)]
pub struct GeneratedSeries {
    pub spec: CtSeriesSpec,
    /// `(file name, dataset)`, slice order.
    pub files: Vec<(String, DicomObject)>,
    /// z position of each kept slice, ascending.
    pub zs: Vec<f64>,
    pub sop_uids: Vec<String>,
}

impl GeneratedSeries {
    /// Patient-space centre of the in-plane grid.
    pub fn center(&self) -> (f64, f64) {
        let s = &self.spec;
        (
            s.origin[0] + s.pixel_spacing.1 * f64::from(s.cols - 1) / 2.0,
            s.origin[1] + s.pixel_spacing.0 * f64::from(s.rows - 1) / 2.0,
        )
    }

    pub fn write(&self, dir: &Path) -> io::Result<()> {
        for (name, obj) in &self.files {
            write_atomic(&dir.join(name), &encode_object(obj))?;
        }
        Ok(())
    }

    /// Encode, reparse, and assemble a [`SeriesRecord`], exercising the full
    /// read path instead of trusting the in-memory objects.
    pub fn to_series_record(&self) -> SeriesRecord {
        let mut slices: Vec<(crate::dicom::SliceMeta, std::path::PathBuf)> = self
            .files
            .iter()
            .map(|(name, obj)| {
                let parsed = parse_file(&encode_object(obj)).expect("generated file parses");
                (crate::dicom::extract_slice_meta(&parsed).expect("generated slice has metadata"), name.into())
            })
            .collect();
        slices.sort_by(|a, b| a.0.position_along_normal().partial_cmp(&b.0.position_along_normal()).unwrap());
        let (slices, slice_paths): (Vec<_>, Vec<_>) = slices.into_iter().unzip();
        SeriesRecord {
            patient_id: self.spec.patient_id.clone(),
            series_uid: self.spec.series_uid(),
            modality: self.spec.modality.clone(),
            slices,
            slice_paths,
            rtstruct_paths: vec![],
        }
    }
}

fn pixel_bytes(spec: &CtSeriesSpec, k: usize, n_total: usize) -> Vec<u8> {
    let mut prng =
        ChaCha8Rng::seed_from_u64(spec.noise_seed.wrapping_add((k as u64).wrapping_mul(0x9E37_79B9_7F4A_7C15)));
    let rows = spec.rows as usize;
    let cols = spec.cols as usize;
    let dz = (k as f64 + 0.5) / n_total as f64 - 0.5;
    let mut bytes = Vec::with_capacity(rows * cols * 2);
    for j in 0..rows {
        for i in 0..cols {
            let dx = (i as f64 + 0.5) / cols as f64 - 0.5;
            let dy = (j as f64 + 0.5) / rows as f64 - 0.5;
            let inside = dx * dx + dy * dy < 0.45 * 0.45 && dz.abs() < 0.4;
            let stored: i16 = if inside {
                prng.gen_range(1900..2100)
            } else {
                prng.gen_range(0..150)
            };
            bytes.extend_from_slice(&stored.to_le_bytes());
        }
    }
    bytes
}

/// Build every slice object of a series.
pub fn build_ct_series(spec: &CtSeriesSpec) -> GeneratedSeries {
    let mut files = Vec::new();
    let mut zs = Vec::new();
    let mut sop_uids = Vec::new();
    for k in 0..spec.n_slices {
        if spec.drop_slice == Some(k) {
            continue;
        }
        let z = spec.origin[2] + spec.slice_gap * k as f64;
        let sop = spec.sop_uid(k);
        let mut e = ElementMap::new();

        e.insert(tags::MEDIA_STORAGE_SOP_CLASS_UID, text_el(tags::MEDIA_STORAGE_SOP_CLASS_UID, CT_IMAGE_SOP_CLASS));
        e.insert(tags::MEDIA_STORAGE_SOP_INSTANCE_UID, text_el(tags::MEDIA_STORAGE_SOP_INSTANCE_UID, &sop));
        e.insert(tags::TRANSFER_SYNTAX_UID, text_el(tags::TRANSFER_SYNTAX_UID, spec.syntax.uid()));
        seal_file_meta(&mut e);

        e.insert(tags::SOP_CLASS_UID, text_el(tags::SOP_CLASS_UID, CT_IMAGE_SOP_CLASS));
        e.insert(tags::SOP_INSTANCE_UID, text_el(tags::SOP_INSTANCE_UID, &sop));
        e.insert(tags::STUDY_DATE, text_el(tags::STUDY_DATE, "20190704"));
        e.insert(tags::SERIES_DATE, text_el(tags::SERIES_DATE, "20190704"));
        e.insert(tags::MODALITY, text_el(tags::MODALITY, &spec.modality));
        e.insert(tags::MANUFACTURER, text_el(tags::MANUFACTURER, "RadGate Synthetics"));
        e.insert(tags::PATIENT_NAME, text_el(tags::PATIENT_NAME, &spec.patient_id));
        e.insert(tags::PATIENT_ID, text_el(tags::PATIENT_ID, &spec.patient_id));
        e.insert(tags::SLICE_THICKNESS, ds_el(tags::SLICE_THICKNESS, &[spec.slice_thickness]));
        e.insert(tags::KVP, ds_el(tags::KVP, &[120.0]));
        e.insert(tags::TUBE_CURRENT, is_el(tags::TUBE_CURRENT, 200));
        e.insert(tags::EXPOSURE, is_el(tags::EXPOSURE, 80));
        e.insert(tags::CONVOLUTION_KERNEL, text_el(tags::CONVOLUTION_KERNEL, &spec.kernel));
        e.insert(tags::STUDY_INSTANCE_UID, text_el(tags::STUDY_INSTANCE_UID, &spec.study_uid()));
        e.insert(tags::SERIES_INSTANCE_UID, text_el(tags::SERIES_INSTANCE_UID, &spec.series_uid()));
        e.insert(tags::INSTANCE_NUMBER, is_el(tags::INSTANCE_NUMBER, k as i64 + 1));
        e.insert(
            tags::IMAGE_POSITION_PATIENT,
            ds_el(tags::IMAGE_POSITION_PATIENT, &[spec.origin[0], spec.origin[1], z]),
        );
        e.insert(tags::IMAGE_ORIENTATION_PATIENT, ds_el(tags::IMAGE_ORIENTATION_PATIENT, &spec.orientation));
        e.insert(tags::FRAME_OF_REFERENCE_UID, text_el(tags::FRAME_OF_REFERENCE_UID, &spec.frame_uid()));
        e.insert(tags::SAMPLES_PER_PIXEL, us_el(1));
        e.insert(tags::ROWS, us_el(spec.rows));
        e.insert(tags::COLUMNS, us_el(spec.cols));
        e.insert(tags::PIXEL_SPACING, ds_el(tags::PIXEL_SPACING, &[spec.pixel_spacing.0, spec.pixel_spacing.1]));
        e.insert(tags::BITS_ALLOCATED, us_el(16));
        e.insert(tags::BITS_STORED, us_el(16));
        e.insert(tags::HIGH_BIT, us_el(15));
        e.insert(tags::PIXEL_REPRESENTATION, us_el(1));
        if let Some((slope, intercept)) = spec.rescale {
            e.insert(tags::RESCALE_INTERCEPT, ds_el(tags::RESCALE_INTERCEPT, &[intercept]));
            e.insert(tags::RESCALE_SLOPE, ds_el(tags::RESCALE_SLOPE, &[slope]));
        }
        e.insert(PRIVATE_CREATOR, private_el(spec.syntax, "RADGATE FIXTURES"));
        e.insert(
            tags::PIXEL_DATA,
            DicomElement { vr: Vr::new(b"OW"), value: ElementValue::Bytes(pixel_bytes(spec, k, spec.n_slices)) },
        );

        files.push((format!("ct_{k:03}.dcm"), DicomObject { transfer_syntax: spec.syntax, elements: e }));
        zs.push(z);
        sop_uids.push(sop);
    }
    GeneratedSeries { spec: spec.clone(), files, zs, sop_uids }
}

// ---------------------------------------------------------------------------
// structure sets

/// Plantable ROI shapes. Planar shapes extrude through every slice; the
/// sphere is cut per slice into circles of the right radius.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum RoiShape {
    Square { half: f64 },
    Triangle { half: f64 },
    Ngon { vertices: usize, radius: f64 },
    Sphere { radius: f64 },
}

/// Vertex list of a planar shape at height `z`, counter-clockwise.
pub fn shape_outline(shape: RoiShape, cx: f64, cy: f64, z: f64) -> Vec<[f64; 3]> {
    match shape {
        RoiShape::Square { half: h } => vec![
            [cx - h, cy - h, z],
            [cx + h, cy - h, z],
            [cx + h, cy + h, z],
            [cx - h, cy + h, z],
        ],
        RoiShape::Triangle { half: h } => vec![[cx - h, cy - h, z], [cx + h, cy - h, z], [cx, cy + h, z]],
        RoiShape::Ngon { vertices, radius } => (0..vertices)
            .map(|i| {
                let a = TAU * i as f64 / vertices as f64;
                [cx + radius * a.cos(), cy + radius * a.sin(), z]
            })
            .collect(),
        RoiShape::Sphere { radius } => shape_outline(RoiShape::Ngon { vertices: 24, radius }, cx, cy, z),
    }
}

fn roi_polygons(shape: RoiShape, series: &GeneratedSeries) -> Vec<Vec<[f64; 3]>> {
    let (cx, cy) = series.center();
    match shape {
        RoiShape::Sphere { radius } => {
            let cz = (series.zs[0] + series.zs[series.zs.len() - 1]) / 2.0;
            series
                .zs
                .iter()
                .filter_map(|&z| {
                    let dz = z - cz;
                    let r2 = radius * radius - dz * dz;
                    if r2 <= 0.0 {
                        return None;
                    }
                    let r = r2.sqrt();
                    if r < series.spec.pixel_spacing.1 * 0.5 {
                        return None;
                    }
                    Some(shape_outline(RoiShape::Ngon { vertices: 24, radius: r }, cx, cy, z))
                })
                .collect()
        }
        planar => series.zs.iter().map(|&z| shape_outline(planar, cx, cy, z)).collect(),
    }
}

/// ROI set sized to a clean series: a sphere-ish tumor stand-in plus the
/// three planar test shapes.
pub fn standard_rois(series: &GeneratedSeries) -> Vec<(String, RoiShape)> {
    let s = &series.spec;
    let extent = s.pixel_spacing.1 * f64::from(s.cols);
    let z_span = series.zs[series.zs.len() - 1] - series.zs[0];
    vec![
        ("GTV-1".to_string(), RoiShape::Sphere { radius: 0.35 * extent.min(z_span) }),
        ("block".to_string(), RoiShape::Square { half: 0.22 * extent }),
        ("wedge".to_string(), RoiShape::Triangle { half: 0.25 * extent }),
        ("disc16".to_string(), RoiShape::Ngon { vertices: 16, radius: 0.30 * extent }),
    ]
}

/// Build an RTSTRUCT object referencing `series`, one ROI per entry.
pub fn build_rtstruct(series: &GeneratedSeries, rois: &[(String, RoiShape)]) -> DicomObject {
    let spec = &series.spec;
    let rt_sop = spec.uid(5, 0);
    let rt_series = spec.uid(6, 0);

    let mut referenced_series = ElementMap::new();
    referenced_series.insert(tags::SERIES_INSTANCE_UID, text_el(tags::SERIES_INSTANCE_UID, &spec.series_uid()));
    let mut referenced_study = ElementMap::new();
    referenced_study.insert(tags::RT_REFERENCED_SERIES_SEQ, seq_el(vec![referenced_series]));
    let mut frame_item = ElementMap::new();
    frame_item.insert(
        tags::REFERENCED_FRAME_OF_REFERENCE_UID,
        text_el(tags::REFERENCED_FRAME_OF_REFERENCE_UID, &spec.frame_uid()),
    );
    frame_item.insert(tags::RT_REFERENCED_STUDY_SEQ, seq_el(vec![referenced_study]));

    let mut roi_items = Vec::new();
    let mut contour_items = Vec::new();
    for (number, (name, shape)) in rois.iter().enumerate() {
        let number = number as i64 + 1;
        let mut roi = ElementMap::new();
        roi.insert(tags::ROI_NUMBER, is_el(tags::ROI_NUMBER, number));
        roi.insert(
            tags::REFERENCED_FRAME_OF_REFERENCE_UID,
            text_el(tags::REFERENCED_FRAME_OF_REFERENCE_UID, &spec.frame_uid()),
        );
        roi.insert(tags::ROI_NAME, text_el(tags::ROI_NAME, name));
        roi_items.push(roi);

        let mut contours = Vec::new();
        for polygon in roi_polygons(*shape, series) {
            let z = polygon[0][2];
            let slice_index = series.zs.iter().position(|&sz| (sz - z).abs() < 1e-9).unwrap_or(0);
            let mut image_item = ElementMap::new();
            image_item.insert(tags::REFERENCED_SOP_CLASS_UID, text_el(tags::REFERENCED_SOP_CLASS_UID, CT_IMAGE_SOP_CLASS));
            image_item.insert(
                tags::REFERENCED_SOP_INSTANCE_UID,
                text_el(tags::REFERENCED_SOP_INSTANCE_UID, &series.sop_uids[slice_index]),
            );
            let coords: Vec<f64> = polygon.iter().flat_map(|p| p.iter().copied()).collect();
            let mut c = ElementMap::new();
            c.insert(tags::CONTOUR_IMAGE_SEQ, seq_el(vec![image_item]));
            c.insert(tags::CONTOUR_GEOMETRIC_TYPE, text_el(tags::CONTOUR_GEOMETRIC_TYPE, "CLOSED_PLANAR"));
            c.insert(tags::NUMBER_OF_CONTOUR_POINTS, is_el(tags::NUMBER_OF_CONTOUR_POINTS, polygon.len() as i64));
            c.insert(tags::CONTOUR_DATA, ds_el(tags::CONTOUR_DATA, &coords));
            contours.push(c);
        }
        let mut item = ElementMap::new();
        item.insert(tags::CONTOUR_SEQ, seq_el(contours));
        item.insert(tags::REFERENCED_ROI_NUMBER, is_el(tags::REFERENCED_ROI_NUMBER, number));
        contour_items.push(item);
    }

    let mut e = ElementMap::new();
    e.insert(tags::MEDIA_STORAGE_SOP_CLASS_UID, text_el(tags::MEDIA_STORAGE_SOP_CLASS_UID, RTSTRUCT_SOP_CLASS));
    e.insert(tags::MEDIA_STORAGE_SOP_INSTANCE_UID, text_el(tags::MEDIA_STORAGE_SOP_INSTANCE_UID, &rt_sop));
    e.insert(tags::TRANSFER_SYNTAX_UID, text_el(tags::TRANSFER_SYNTAX_UID, spec.syntax.uid()));
    seal_file_meta(&mut e);
    e.insert(tags::SOP_CLASS_UID, text_el(tags::SOP_CLASS_UID, RTSTRUCT_SOP_CLASS));
    e.insert(tags::SOP_INSTANCE_UID, text_el(tags::SOP_INSTANCE_UID, &rt_sop));
    e.insert(tags::STUDY_DATE, text_el(tags::STUDY_DATE, "20190705"));
    e.insert(tags::SERIES_DATE, text_el(tags::SERIES_DATE, "20190705"));
    e.insert(tags::MODALITY, text_el(tags::MODALITY, "RTSTRUCT"));
    e.insert(tags::MANUFACTURER, text_el(tags::MANUFACTURER, "RadGate Synthetics"));
    e.insert(tags::PATIENT_NAME, text_el(tags::PATIENT_NAME, &spec.patient_id));
    e.insert(tags::PATIENT_ID, text_el(tags::PATIENT_ID, &spec.patient_id));
    e.insert(tags::STUDY_INSTANCE_UID, text_el(tags::STUDY_INSTANCE_UID, &spec.study_uid()));
    e.insert(tags::SERIES_INSTANCE_UID, text_el(tags::SERIES_INSTANCE_UID, &rt_series));
    e.insert(tags::REFERENCED_FRAME_OF_REFERENCE_SEQ, seq_el(vec![frame_item]));
    e.insert(tags::STRUCTURE_SET_ROI_SEQ, seq_el(roi_items));
    e.insert(tags::ROI_CONTOUR_SEQ, seq_el(contour_items));

    DicomObject { transfer_syntax: spec.syntax, elements: e }
}

// ---------------------------------------------------------------------------
// metadata variants for round-trip testing

/// One randomized image object: random syntax, random presence of optional
/// tags, Latin-1 names, a private element. Always parses back identical.
pub fn metadata_variant(rng: &mut impl Rng, serial: u64) -> DicomObject {
    let mut spec = CtSeriesSpec::sample(rng, &format!("VAR_{serial:04}"));
    spec.rows = 8;
    spec.cols = 8;
    spec.n_slices = 1;
    if rng.gen_bool(0.3) {
        spec.rescale = None;
    }
    let series = build_ct_series(&spec);
    let (_, mut obj) = series.files.into_iter().next().unwrap();

    if rng.gen_bool(0.3) {
        obj.elements.remove(&tags::CONVOLUTION_KERNEL);
    }
    if rng.gen_bool(0.3) {
        obj.elements.remove(&tags::SLICE_THICKNESS);
    }
    if rng.gen_bool(0.3) {
        obj.elements.remove(&tags::SERIES_DATE);
        obj.elements.remove(&tags::STUDY_DATE);
    }
    if rng.gen_bool(0.5) {
        let name = ["Müller^José", "O'Brien^Seán", "Ärzte^Øyvind", "Plain^Name"].choose(rng).unwrap();
        obj.elements.insert(tags::PATIENT_NAME, text_el(tags::PATIENT_NAME, name));
    }
    if rng.gen_bool(0.3) {
        // empty value: allowed, decodes to the empty string
        obj.elements.insert(tags::MANUFACTURER, text_el(tags::MANUFACTURER, ""));
    }
    if rng.gen_bool(0.4) {
        // small nested sequence, dictionary tags only so both syntaxes carry it
        let mut inner = ElementMap::new();
        inner.insert(tags::REFERENCED_SOP_CLASS_UID, text_el(tags::REFERENCED_SOP_CLASS_UID, CT_IMAGE_SOP_CLASS));
        inner.insert(tags::REFERENCED_SOP_INSTANCE_UID, text_el(tags::REFERENCED_SOP_INSTANCE_UID, &spec.sop_uid(7)));
        obj.elements.insert(tags::CONTOUR_IMAGE_SEQ, seq_el(vec![inner]));
    }
    obj
}

// ---------------------------------------------------------------------------
// feature tables

fn normal(rng: &mut impl Rng, mean: f64, sd: f64) -> f64 {
    let u1: f64 = rng.gen_range(f64::EPSILON..1.0);
    let u2: f64 = rng.gen::<f64>();
    mean + sd * (-2.0 * u1.ln()).sqrt() * (TAU * u2).cos()
}

fn csv_bytes(header: &[&str], rows: Vec<Vec<String>>) -> Vec<u8> {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(header).unwrap();
    for row in rows {
        w.write_record(&row).unwrap();
    }
    w.into_inner().unwrap()
}

/// 100-patient binary table, class balance 42/58, with planted columns:
/// `feat_perfect` separates the classes completely (AUC 1), `feat_shift` is
/// offset by about one standard deviation (significant, AUC ≈ 0.8),
/// `feat_noise` carries nothing, and `feat_volume_twin` tracks the volume
/// column almost monotonically (|rho| ≈ 1).
pub fn binary_feature_csv(rng: &mut impl Rng) -> Vec<u8> {
    let mut labels: Vec<&str> = std::iter::repeat("0").take(42).chain(std::iter::repeat("1").take(58)).collect();
    labels.shuffle(rng);

    let header = [
        "patient",
        "1yearsurvival",
        "original_shape_VoxelVolume",
        "feat_noise",
        "feat_perfect",
        "feat_shift",
        "feat_volume_twin",
    ];
    let mut rows = Vec::new();
    for (i, label) in labels.iter().enumerate() {
        let volume = 10f64.powf(rng.gen_range(2.7..4.7));
        let perfect = if *label == "1" { rng.gen_range(10.0..20.0) } else { rng.gen_range(0.0..5.0) };
        let shift = normal(rng, if *label == "1" { 1.2 } else { 0.0 }, 1.0);
        let noise = normal(rng, 0.0, 1.0);
        let twin = 2.5 * volume + normal(rng, 0.0, 0.001 * volume);
        rows.push(vec![
            format!("PAT_{i:03}"),
            label.to_string(),
            format!("{volume}"),
            format!("{noise}"),
            format!("{perfect}"),
            format!("{shift}"),
            format!("{twin}"),
        ]);
    }
    csv_bytes(&header, rows)
}

/// 149-patient multi-class table: stages I/II/IIIa/IIIb plus one patient
/// with an empty outcome, shares 36/14/34/64/1.
pub fn multiclass_feature_csv(rng: &mut impl Rng) -> Vec<u8> {
    let mut labels: Vec<&str> = Vec::new();
    for (label, count) in [("I", 36), ("II", 14), ("IIIa", 34), ("IIIb", 64), ("", 1)] {
        labels.extend(std::iter::repeat(label).take(count));
    }
    labels.shuffle(rng);

    let header = ["patient", "Overall.Stage", "original_shape_VoxelVolume", "feat_grade", "feat_noise"];
    let mut rows = Vec::new();
    for (i, label) in labels.iter().enumerate() {
        let grade_center = match *label {
            "I" => 1.0,
            "II" => 2.0,
            "IIIa" => 3.0,
            "IIIb" => 4.0,
            _ => 0.0,
        };
        let volume = 10f64.powf(rng.gen_range(2.7..4.7));
        let grade = normal(rng, grade_center, 0.8);
        let noise = normal(rng, 0.0, 1.0);
        rows.push(vec![
            format!("MC_{i:03}"),
            label.to_string(),
            format!("{volume}"),
            format!("{grade}"),
            format!("{noise}"),
        ]);
    }
    csv_bytes(&header, rows)
}

// ---------------------------------------------------------------------------
// config files and the full tree

pub fn default_preprocess_params() -> PreprocessParams {
    PreprocessParams {
        steps: vec![
            Step::Rescale { out_min: 0.0, out_max: 1.0 },
            Step::Zscore { scope: Scope::Whole },
        ],
    }
}

pub fn default_extraction_params() -> ExtractionParams {
    ExtractionParams {
        discretization: crate::preprocess::Discretization::FixedBinCount(32),
        ..ExtractionParams::default()
    }
}

/// Write the complete fixture tree:
///
/// ```text
/// root/
///   dicom/CLEAN_000/ct_*.dcm + rtstruct.dcm
///   dicom/DEFECT_<KIND>/ct_*.dcm          (one per defect kind)
///   configs/{qc_spec,preprocess,extraction}.json
///   tables/features_{binary,multiclass}.csv
/// ```
///
/// Byte-identical for the same seed.
pub fn generate_tree(root: &Path, seed: u64) -> io::Result<()> {
    let mut rng = ChaCha12Rng::seed_from_u64(seed);

    let clean = build_ct_series(&CtSeriesSpec::sample(&mut rng, "CLEAN_000"));
    let dicom_root = root.join("dicom");
    clean.write(&dicom_root.join("CLEAN_000"))?;
    let rt = build_rtstruct(&clean, &standard_rois(&clean));
    write_atomic(&dicom_root.join("CLEAN_000").join("rtstruct.dcm"), &encode_object(&rt))?;

    for defect in Defect::ALL {
        let pid = format!("DEFECT_{}", defect.kind_name().replace('-', "_").to_uppercase());
        let spec = CtSeriesSpec::sample(&mut rng, &pid).with_defect(defect);
        build_ct_series(&spec).write(&dicom_root.join(&pid))?;
    }

    let configs = root.join("configs");
    write_atomic(
        &configs.join("qc_spec.json"),
        format!("{}\n", serde_json::to_string_pretty(&default_quality_spec()).unwrap()).as_bytes(),
    )?;
    write_atomic(
        &configs.join("preprocess.json"),
        format!("{}\n", serde_json::to_string_pretty(&default_preprocess_params()).unwrap()).as_bytes(),
    )?;
    write_atomic(
        &configs.join("extraction.json"),
        format!("{}\n", serde_json::to_string_pretty(&default_extraction_params()).unwrap()).as_bytes(),
    )?;

    let tables = root.join("tables");
    write_atomic(&tables.join("features_binary.csv"), &binary_feature_csv(&mut rng))?;
    write_atomic(&tables.join("features_multiclass.csv"), &multiclass_feature_csv(&mut rng))?;
    Ok(())
}
