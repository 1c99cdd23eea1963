//! Decoding stored pixel values.

use super::{tags, DicomError, DicomObject, DicomTag};

/// Row-major grid of stored (undecoded, unrescaled) pixel values.
#[derive(Debug, Clone, PartialEq)]
pub struct PixelGrid {
    pub rows: usize,
    pub cols: usize,
    pub data: Vec<i32>,
}

impl PixelGrid {
    pub fn get(&self, row: usize, col: usize) -> i32 {
        self.data[row * self.cols + col]
    }
}

fn required_u16(obj: &DicomObject, tag: DicomTag) -> Result<u16, DicomError> {
    let v = obj.decode(tag)?.into_integers(tag)?;
    v.first().map(|&x| x as u16).ok_or(DicomError::BadMultiplicity { tag, expected: 1, found: 0 })
}

/// Decode the PixelData of one slice into stored integer values.
///
/// Only the configuration the pipeline produces and consumes is accepted:
/// BitsAllocated 16, single sample per pixel, with PixelRepresentation
/// selecting unsigned (0) or two's-complement (1) interpretation.
pub fn decode_pixels(obj: &DicomObject) -> Result<PixelGrid, DicomError> {
    let bits = required_u16(obj, tags::BITS_ALLOCATED)?;
    if bits != 16 {
        return Err(DicomError::UnsupportedBitsAllocated(bits));
    }
    let representation = match obj.get(tags::PIXEL_REPRESENTATION) {
        Some(_) => required_u16(obj, tags::PIXEL_REPRESENTATION)?,
        None => 0,
    };
    let rows = required_u16(obj, tags::ROWS)? as usize;
    let cols = required_u16(obj, tags::COLUMNS)? as usize;

    let el = obj.get(tags::PIXEL_DATA).ok_or(DicomError::TagAbsent(tags::PIXEL_DATA))?;
    let bytes = el.bytes().ok_or(DicomError::Undecodable { tag: tags::PIXEL_DATA, vr: "SQ".into() })?;
    let expected = rows * cols * 2;
    if bytes.len() != expected {
        return Err(DicomError::PixelLengthMismatch { expected, found: bytes.len() });
    }

    let data = bytes
        .chunks_exact(2)
        .map(|c| {
            if representation == 1 {
                i32::from(i16::from_le_bytes([c[0], c[1]]))
            } else {
                i32::from(u16::from_le_bytes([c[0], c[1]]))
            }
        })
        .collect();

    Ok(PixelGrid { rows, cols, data })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dicom::{DicomElement, ElementMap, ElementValue, TransferSyntax, Vr};

    fn obj_with(rows: u16, cols: u16, representation: u16, pixel_bytes: Vec<u8>) -> DicomObject {
        let mut elements = ElementMap::new();
        let mut put_us = |tag, v: u16| {
            elements.insert(
                tag,
                DicomElement { vr: Vr::new(b"US"), value: ElementValue::Bytes(v.to_le_bytes().to_vec()) },
            );
        };
        put_us(tags::ROWS, rows);
        put_us(tags::COLUMNS, cols);
        put_us(tags::BITS_ALLOCATED, 16);
        put_us(tags::PIXEL_REPRESENTATION, representation);
        elements.insert(
            tags::PIXEL_DATA,
            DicomElement { vr: Vr::new(b"OW"), value: ElementValue::Bytes(pixel_bytes) },
        );
        DicomObject { transfer_syntax: TransferSyntax::ExplicitVrLittleEndian, elements }
    }

    #[test]
    fn unsigned_two_by_two() {
        let bytes = [1u16, 2, 3, 4].iter().flat_map(|v| v.to_le_bytes()).collect();
        let grid = decode_pixels(&obj_with(2, 2, 0, bytes)).unwrap();
        assert_eq!(grid.data, vec![1, 2, 3, 4]);
        assert_eq!(grid.get(1, 0), 3);
    }

    #[test]
    fn signed_interpretation() {
        // 0xFFFF is -1 for PixelRepresentation 1, 65535 for 0.
        let bytes = vec![0xFF, 0xFF, 0x00, 0x00];
        let signed = decode_pixels(&obj_with(1, 2, 1, bytes.clone())).unwrap();
        assert_eq!(signed.data, vec![-1, 0]);
        let unsigned = decode_pixels(&obj_with(1, 2, 0, bytes)).unwrap();
        assert_eq!(unsigned.data, vec![65535, 0]);
    }

    #[test]
    fn length_mismatch_is_reported() {
        let bytes = vec![0u8; 6];
        match decode_pixels(&obj_with(2, 2, 0, bytes)) {
            Err(DicomError::PixelLengthMismatch { expected: 8, found: 6 }) => {}
            other => panic!("expected length mismatch, got {other:?}"),
        }
    }

    #[test]
    fn eight_bit_is_refused() {
        let mut obj = obj_with(1, 1, 0, vec![0, 0]);
        obj.elements.insert(
            tags::BITS_ALLOCATED,
            DicomElement { vr: Vr::new(b"US"), value: ElementValue::Bytes(8u16.to_le_bytes().to_vec()) },
        );
        assert!(matches!(decode_pixels(&obj), Err(DicomError::UnsupportedBitsAllocated(8))));
    }
}
