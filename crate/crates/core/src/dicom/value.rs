//! Typed decoding of element values.

use super::{DicomElement, DicomError, DicomTag, ElementValue};
use crate::util::latin1_to_string;

/// A decoded attribute value. Text VRs come back as a single trimmed string,
/// numeric VRs as lists (DICOM values are multi-valued in general).
#[derive(Debug, Clone, PartialEq)]
pub enum Value {
    Text(String),
    Decimals(Vec<f64>),
    Integers(Vec<i64>),
}

impl Value {
    pub fn into_text(self, tag: DicomTag) -> Result<String, DicomError> {
        match self {
            Value::Text(s) => Ok(s),
            _ => Err(DicomError::Undecodable { tag, vr: "numeric".into() }),
        }
    }

    pub fn into_decimals(self, tag: DicomTag) -> Result<Vec<f64>, DicomError> {
        match self {
            Value::Decimals(v) => Ok(v),
            Value::Integers(v) => Ok(v.into_iter().map(|i| i as f64).collect()),
            Value::Text(_) => Err(DicomError::Undecodable { tag, vr: "text".into() }),
        }
    }

    pub fn into_integers(self, tag: DicomTag) -> Result<Vec<i64>, DicomError> {
        match self {
            Value::Integers(v) => Ok(v),
            _ => Err(DicomError::Undecodable { tag, vr: "non-integer".into() }),
        }
    }
}

/// Decode one element according to its VR. Sequences and bulk-data VRs
/// (OB/OW/OF/UN) have no typed value and report `Undecodable`; their bytes
/// stay available through [`DicomElement::bytes`].
pub fn decode_element(tag: DicomTag, el: &DicomElement) -> Result<Value, DicomError> {
    let bytes = match &el.value {
        ElementValue::Bytes(b) => b.as_slice(),
        ElementValue::Sequence(_) => return Err(DicomError::Undecodable { tag, vr: "SQ".into() }),
    };
    match &el.vr.0 {
        b"DS" => Ok(Value::Decimals(parse_numeric_list(tag, bytes, |s| s.parse::<f64>().ok())?)),
        b"IS" => Ok(Value::Integers(parse_numeric_list(tag, bytes, |s| s.parse::<i64>().ok())?)),
        b"US" => Ok(Value::Integers(chunked(bytes, 2, |c| i64::from(u16::from_le_bytes([c[0], c[1]]))))),
        b"SS" => Ok(Value::Integers(chunked(bytes, 2, |c| i64::from(i16::from_le_bytes([c[0], c[1]]))))),
        b"UL" => Ok(Value::Integers(chunked(bytes, 4, |c| i64::from(u32::from_le_bytes([c[0], c[1], c[2], c[3]]))))),
        b"SL" => Ok(Value::Integers(chunked(bytes, 4, |c| i64::from(i32::from_le_bytes([c[0], c[1], c[2], c[3]]))))),
        b"FL" => Ok(Value::Decimals(chunked(bytes, 4, |c| f64::from(f32::from_le_bytes([c[0], c[1], c[2], c[3]]))))),
        b"FD" => Ok(Value::Decimals(chunked(bytes, 8, |c| {
            f64::from_le_bytes([c[0], c[1], c[2], c[3], c[4], c[5], c[6], c[7]])
        }))),
        b"AE" | b"AS" | b"CS" | b"DA" | b"DT" | b"LO" | b"LT" | b"PN" | b"SH" | b"ST" | b"TM" | b"UC"
        | b"UI" | b"UR" | b"UT" => {
            let text = latin1_to_string(bytes);
            Ok(Value::Text(text.trim_end_matches([' ', '\0']).to_string()))
        }
        other => Err(DicomError::Undecodable { tag, vr: latin1_to_string(other) }),
    }
}

fn chunked<T>(bytes: &[u8], width: usize, f: impl Fn(&[u8]) -> T) -> Vec<T> {
    bytes.chunks_exact(width).map(f).collect()
}

/// Split a DS/IS value on backslashes and parse each component. Components
/// are padded with spaces or NULs per the standard; an entirely empty value
/// decodes to an empty list, but an empty component among others is malformed.
fn parse_numeric_list<T>(
    tag: DicomTag,
    bytes: &[u8],
    parse: impl Fn(&str) -> Option<T>,
) -> Result<Vec<T>, DicomError> {
    let text = latin1_to_string(bytes);
    let trimmed = text.trim_matches([' ', '\0']);
    if trimmed.is_empty() {
        return Ok(Vec::new());
    }
    trimmed
        .split('\\')
        .map(|part| {
            let part = part.trim_matches([' ', '\0']);
            parse(part).ok_or_else(|| DicomError::MalformedNumeric { tag, text: part.to_string() })
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dicom::{tags, Vr};

    fn el(vr: &[u8; 2], bytes: &[u8]) -> DicomElement {
        DicomElement { vr: Vr::new(vr), value: ElementValue::Bytes(bytes.to_vec()) }
    }

    #[test]
    fn ds_multivalue_with_padding() {
        let v = decode_element(tags::PIXEL_SPACING, &el(b"DS", b"0.9765625\\0.9765625 ")).unwrap();
        assert_eq!(v, Value::Decimals(vec![0.9765625, 0.9765625]));
    }

    #[test]
    fn ds_negative_and_exponent() {
        let v = decode_element(tags::RESCALE_INTERCEPT, &el(b"DS", b"-1024")).unwrap();
        assert_eq!(v, Value::Decimals(vec![-1024.0]));
        let v = decode_element(tags::KVP, &el(b"DS", b"1.2e2\0")).unwrap();
        assert_eq!(v, Value::Decimals(vec![120.0]));
    }

    #[test]
    fn ds_garbage_is_malformed() {
        match decode_element(tags::SLICE_THICKNESS, &el(b"DS", b"3.0\\x")) {
            Err(DicomError::MalformedNumeric { text, .. }) => assert_eq!(text, "x"),
            other => panic!("expected malformed numeric, got {other:?}"),
        }
    }

    #[test]
    fn cs_trailing_space_stripped() {
        let v = decode_element(tags::MODALITY, &el(b"CS", b"CT ")).unwrap();
        assert_eq!(v, Value::Text("CT".into()));
    }

    #[test]
    fn ui_trailing_nul_stripped() {
        let v = decode_element(tags::SOP_INSTANCE_UID, &el(b"UI", b"1.2.3\0")).unwrap();
        assert_eq!(v, Value::Text("1.2.3".into()));
    }

    #[test]
    fn us_binary_pairs() {
        let v = decode_element(tags::ROWS, &el(b"US", &[0x00, 0x02])).unwrap();
        assert_eq!(v, Value::Integers(vec![512]));
    }

    #[test]
    fn ss_is_signed() {
        let v = decode_element(tags::ROWS, &el(b"SS", &[0xFF, 0xFF])).unwrap();
        assert_eq!(v, Value::Integers(vec![-1]));
    }

    #[test]
    fn is_integer_list() {
        let v = decode_element(tags::EXPOSURE, &el(b"IS", b"80 ")).unwrap();
        assert_eq!(v, Value::Integers(vec![80]));
    }

    #[test]
    fn integers_promote_to_decimals() {
        let v = decode_element(tags::EXPOSURE, &el(b"IS", b"80")).unwrap();
        assert_eq!(v.into_decimals(tags::EXPOSURE).unwrap(), vec![80.0]);
    }

    #[test]
    fn empty_ds_decodes_to_empty_list() {
        let v = decode_element(tags::SLICE_THICKNESS, &el(b"DS", b"")).unwrap();
        assert_eq!(v, Value::Decimals(vec![]));
    }
}
