//! Reading DICOM part-10 files.
//!
//! Only the two uncompressed little-endian transfer syntaxes are supported:
//! explicit VR (1.2.840.10008.1.2.1) and implicit VR (1.2.840.10008.1.2).
//! Implicit files are resolved against the built-in dictionary in [`dict`],
//! which covers exactly the attributes this toolkit consumes; anything else
//! is carried along as opaque bytes so that no data is silently dropped.

mod dict;
mod meta;
mod parse;
mod pixels;
mod rtstruct;
mod value;

pub use dict::lookup_vr;
pub use meta::{extract_slice_meta, SliceMeta};
pub use parse::parse_file;
pub use pixels::{decode_pixels, PixelGrid};
pub use rtstruct::{parse_rtstruct, ContourSet};
pub use value::{decode_element, Value};

use std::collections::BTreeMap;
use std::fmt;

/// A DICOM attribute tag: (group, element) pair.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct DicomTag {
    pub group: u16,
    pub element: u16,
}

impl DicomTag {
    pub const fn new(group: u16, element: u16) -> DicomTag {
        DicomTag { group, element }
    }
}

impl fmt::Display for DicomTag {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "({:04X},{:04X})", self.group, self.element)
    }
}

/// Tags the toolkit addresses by name.
pub mod tags {
    use super::DicomTag;

    pub const FILE_META_GROUP_LENGTH: DicomTag = DicomTag::new(0x0002, 0x0000);
    pub const MEDIA_STORAGE_SOP_CLASS_UID: DicomTag = DicomTag::new(0x0002, 0x0002);
    pub const MEDIA_STORAGE_SOP_INSTANCE_UID: DicomTag = DicomTag::new(0x0002, 0x0003);
    pub const TRANSFER_SYNTAX_UID: DicomTag = DicomTag::new(0x0002, 0x0010);

    pub const SOP_CLASS_UID: DicomTag = DicomTag::new(0x0008, 0x0016);
    pub const SOP_INSTANCE_UID: DicomTag = DicomTag::new(0x0008, 0x0018);
    pub const STUDY_DATE: DicomTag = DicomTag::new(0x0008, 0x0020);
    pub const SERIES_DATE: DicomTag = DicomTag::new(0x0008, 0x0021);
    pub const MODALITY: DicomTag = DicomTag::new(0x0008, 0x0060);
    pub const MANUFACTURER: DicomTag = DicomTag::new(0x0008, 0x0070);
    pub const REFERENCED_SOP_CLASS_UID: DicomTag = DicomTag::new(0x0008, 0x1150);
    pub const REFERENCED_SOP_INSTANCE_UID: DicomTag = DicomTag::new(0x0008, 0x1155);

    pub const PATIENT_NAME: DicomTag = DicomTag::new(0x0010, 0x0010);
    pub const PATIENT_ID: DicomTag = DicomTag::new(0x0010, 0x0020);

    pub const SLICE_THICKNESS: DicomTag = DicomTag::new(0x0018, 0x0050);
    pub const KVP: DicomTag = DicomTag::new(0x0018, 0x0060);
    pub const TUBE_CURRENT: DicomTag = DicomTag::new(0x0018, 0x1151);
    pub const EXPOSURE: DicomTag = DicomTag::new(0x0018, 0x1152);
    pub const CONVOLUTION_KERNEL: DicomTag = DicomTag::new(0x0018, 0x1210);

    pub const STUDY_INSTANCE_UID: DicomTag = DicomTag::new(0x0020, 0x000D);
    pub const SERIES_INSTANCE_UID: DicomTag = DicomTag::new(0x0020, 0x000E);
    pub const INSTANCE_NUMBER: DicomTag = DicomTag::new(0x0020, 0x0013);
    pub const IMAGE_POSITION_PATIENT: DicomTag = DicomTag::new(0x0020, 0x0032);
    pub const IMAGE_ORIENTATION_PATIENT: DicomTag = DicomTag::new(0x0020, 0x0037);
    pub const FRAME_OF_REFERENCE_UID: DicomTag = DicomTag::new(0x0020, 0x0052);

    pub const SAMPLES_PER_PIXEL: DicomTag = DicomTag::new(0x0028, 0x0002);
    pub const ROWS: DicomTag = DicomTag::new(0x0028, 0x0010);
    pub const COLUMNS: DicomTag = DicomTag::new(0x0028, 0x0011);
    pub const PIXEL_SPACING: DicomTag = DicomTag::new(0x0028, 0x0030);
    pub const BITS_ALLOCATED: DicomTag = DicomTag::new(0x0028, 0x0100);
    pub const BITS_STORED: DicomTag = DicomTag::new(0x0028, 0x0101);
    pub const HIGH_BIT: DicomTag = DicomTag::new(0x0028, 0x0102);
    pub const PIXEL_REPRESENTATION: DicomTag = DicomTag::new(0x0028, 0x0103);
    pub const RESCALE_INTERCEPT: DicomTag = DicomTag::new(0x0028, 0x1052);
    pub const RESCALE_SLOPE: DicomTag = DicomTag::new(0x0028, 0x1053);

    pub const REFERENCED_FRAME_OF_REFERENCE_SEQ: DicomTag = DicomTag::new(0x3006, 0x0010);
    pub const RT_REFERENCED_STUDY_SEQ: DicomTag = DicomTag::new(0x3006, 0x0012);
    pub const RT_REFERENCED_SERIES_SEQ: DicomTag = DicomTag::new(0x3006, 0x0014);
    pub const CONTOUR_IMAGE_SEQ: DicomTag = DicomTag::new(0x3006, 0x0016);
    pub const STRUCTURE_SET_ROI_SEQ: DicomTag = DicomTag::new(0x3006, 0x0020);
    pub const ROI_NUMBER: DicomTag = DicomTag::new(0x3006, 0x0022);
    pub const REFERENCED_FRAME_OF_REFERENCE_UID: DicomTag = DicomTag::new(0x3006, 0x0024);
    pub const ROI_NAME: DicomTag = DicomTag::new(0x3006, 0x0026);
    pub const ROI_CONTOUR_SEQ: DicomTag = DicomTag::new(0x3006, 0x0039);
    pub const CONTOUR_SEQ: DicomTag = DicomTag::new(0x3006, 0x0040);
    pub const CONTOUR_GEOMETRIC_TYPE: DicomTag = DicomTag::new(0x3006, 0x0042);
    pub const NUMBER_OF_CONTOUR_POINTS: DicomTag = DicomTag::new(0x3006, 0x0046);
    pub const CONTOUR_DATA: DicomTag = DicomTag::new(0x3006, 0x0050);
    pub const REFERENCED_ROI_NUMBER: DicomTag = DicomTag::new(0x3006, 0x0084);

    pub const ITEM: DicomTag = DicomTag::new(0xFFFE, 0xE000);
    pub const ITEM_DELIMITER: DicomTag = DicomTag::new(0xFFFE, 0xE00D);
    pub const SEQUENCE_DELIMITER: DicomTag = DicomTag::new(0xFFFE, 0xE0DD);

    pub const PIXEL_DATA: DicomTag = DicomTag::new(0x7FE0, 0x0010);
}

/// Two-character value representation code.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Vr(pub [u8; 2]);

impl Vr {
    pub const fn new(code: &[u8; 2]) -> Vr {
        Vr(*code)
    }

    pub fn as_str(&self) -> &str {
        std::str::from_utf8(&self.0).unwrap_or("??")
    }

    /// VRs whose explicit encoding carries a 2-byte reserved field and a
    /// 4-byte length.
    pub fn has_long_header(&self) -> bool {
        matches!(&self.0, b"OB" | b"OW" | b"OF" | b"OD" | b"OL" | b"SQ" | b"UC" | b"UR" | b"UT" | b"UN")
    }
}

impl fmt::Display for Vr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

/// Supported transfer syntaxes. Anything beyond uncompressed little endian is
/// rejected at parse time.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TransferSyntax {
    ExplicitVrLittleEndian,
    ImplicitVrLittleEndian,
}

impl TransferSyntax {
    pub fn uid(&self) -> &'static str {
        match self {
            TransferSyntax::ExplicitVrLittleEndian => "1.2.840.10008.1.2.1",
            TransferSyntax::ImplicitVrLittleEndian => "1.2.840.10008.1.2",
        }
    }

    pub fn from_uid(uid: &str) -> Option<TransferSyntax> {
        match uid {
            "1.2.840.10008.1.2.1" => Some(TransferSyntax::ExplicitVrLittleEndian),
            "1.2.840.10008.1.2" => Some(TransferSyntax::ImplicitVrLittleEndian),
            _ => None,
        }
    }
}

/// Ordered attribute map of one dataset level. Sequence items reuse the same
/// shape, so nesting is just maps inside maps.
pub type ElementMap = BTreeMap<DicomTag, DicomElement>;

#[derive(Debug, Clone, PartialEq)]
pub struct DicomElement {
    pub vr: Vr,
    pub value: ElementValue,
}

#[derive(Debug, Clone, PartialEq)]
pub enum ElementValue {
    /// Raw little-endian value bytes exactly as stored in the file.
    Bytes(Vec<u8>),
    /// Parsed sequence items.
    Sequence(Vec<ElementMap>),
}

impl DicomElement {
    pub fn bytes(&self) -> Option<&[u8]> {
        match &self.value {
            ElementValue::Bytes(b) => Some(b),
            ElementValue::Sequence(_) => None,
        }
    }

    pub fn items(&self) -> Option<&[ElementMap]> {
        match &self.value {
            ElementValue::Sequence(items) => Some(items),
            ElementValue::Bytes(_) => None,
        }
    }
}

/// A parsed DICOM dataset: the transfer syntax it was stored with plus the
/// top-level element map (file-meta elements included, under group 0002).
#[derive(Debug, Clone, PartialEq)]
pub struct DicomObject {
    pub transfer_syntax: TransferSyntax,
    pub elements: ElementMap,
}

impl DicomObject {
    pub fn get(&self, tag: DicomTag) -> Option<&DicomElement> {
        self.elements.get(&tag)
    }

    /// Decode the value of `tag`, see [`decode_element`].
    pub fn decode(&self, tag: DicomTag) -> Result<Value, DicomError> {
        let el = self.get(tag).ok_or(DicomError::TagAbsent(tag))?;
        decode_element(tag, el)
    }

    /// Decode `tag` as a single trimmed string.
    pub fn decode_text(&self, tag: DicomTag) -> Result<String, DicomError> {
        self.decode(tag)?.into_text(tag)
    }
}

#[derive(Debug, thiserror::Error)]
pub enum DicomError {
    #[error("not a DICOM part-10 file: missing DICM magic")]
    MissingMagic,
    #[error("unsupported transfer syntax {0}")]
    UnsupportedTransferSyntax(String),
    #[error("truncated element near offset {offset}: {context}")]
    TruncatedElement { offset: usize, context: &'static str },
    #[error("undefined length on non-sequence element {0}")]
    UndefinedLengthOutsideSequence(DicomTag),
    #[error("tag {0} absent")]
    TagAbsent(DicomTag),
    #[error("tag {tag} holds no decodable value (VR {vr})")]
    Undecodable { tag: DicomTag, vr: String },
    #[error("malformed numeric value in {tag}: {text:?}")]
    MalformedNumeric { tag: DicomTag, text: String },
    #[error("wrong value multiplicity in {tag}: expected {expected}, found {found}")]
    BadMultiplicity { tag: DicomTag, expected: usize, found: usize },
    #[error("image object carries no ImagePositionPatient/ImageOrientationPatient")]
    MissingGeometry,
    #[error("invalid geometry in {tag}: {reason}")]
    InvalidGeometry { tag: DicomTag, reason: String },
    #[error("pixel data length {found} does not match rows*cols*2 = {expected}")]
    PixelLengthMismatch { expected: usize, found: usize },
    #[error("unsupported BitsAllocated {0}, only 16 is handled")]
    UnsupportedBitsAllocated(u16),
    #[error("object carries no contours")]
    NoContours,
    #[error("ContourData length {0} is not a multiple of 3")]
    OddContourData(usize),
}
