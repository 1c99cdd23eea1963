//! Part-10 stream parser for the two uncompressed little-endian syntaxes.

use super::dict::lookup_vr;
use super::{tags, DicomElement, DicomError, DicomObject, DicomTag, ElementMap, ElementValue, TransferSyntax, Vr};

const UNDEFINED: u32 = 0xFFFF_FFFF;
const PREAMBLE: usize = 128;

#[derive(Clone, Copy, PartialEq)]
enum Mode {
    Explicit,
    Implicit,
}

struct Cursor<'a> {
    data: &'a [u8],
    pos: usize,
}

impl<'a> Cursor<'a> {
    fn new(data: &'a [u8]) -> Cursor<'a> {
        Cursor { data, pos: 0 }
    }

    fn remaining(&self) -> usize {
        self.data.len() - self.pos
    }

    fn need(&self, n: usize, context: &'static str) -> Result<(), DicomError> {
        if self.remaining() < n {
            Err(DicomError::TruncatedElement { offset: self.pos, context })
        } else {
            Ok(())
        }
    }

    fn take(&mut self, n: usize, context: &'static str) -> Result<&'a [u8], DicomError> {
        self.need(n, context)?;
        let s = &self.data[self.pos..self.pos + n];
        self.pos += n;
        Ok(s)
    }

    fn u16(&mut self, context: &'static str) -> Result<u16, DicomError> {
        let b = self.take(2, context)?;
        Ok(u16::from_le_bytes([b[0], b[1]]))
    }

    fn u32(&mut self, context: &'static str) -> Result<u32, DicomError> {
        let b = self.take(4, context)?;
        Ok(u32::from_le_bytes([b[0], b[1], b[2], b[3]]))
    }

    fn tag(&mut self, context: &'static str) -> Result<DicomTag, DicomError> {
        let group = self.u16(context)?;
        let element = self.u16(context)?;
        Ok(DicomTag::new(group, element))
    }

    /// Group number of the next element without consuming it.
    fn peek_group(&self) -> Option<u16> {
        if self.remaining() < 2 {
            return None;
        }
        Some(u16::from_le_bytes([self.data[self.pos], self.data[self.pos + 1]]))
    }
}

/// Parse a complete part-10 file held in memory.
///
/// The 128-byte preamble is skipped, the `DICM` magic checked, the file-meta
/// group read as explicit VR little endian, and the main dataset decoded with
/// the transfer syntax named in (0002,0010). Files using any compressed or
/// big-endian syntax are rejected with `UnsupportedTransferSyntax`.
pub fn parse_file(bytes: &[u8]) -> Result<DicomObject, DicomError> {
    if bytes.len() < PREAMBLE + 4 || &bytes[PREAMBLE..PREAMBLE + 4] != b"DICM" {
        return Err(DicomError::MissingMagic);
    }
    let mut cursor = Cursor::new(&bytes[PREAMBLE + 4..]);

    let mut elements = ElementMap::new();
    while cursor.peek_group() == Some(0x0002) {
        let (tag, el) = read_element(&mut cursor, Mode::Explicit)?;
        elements.insert(tag, el);
    }

    let ts_uid = match elements.get(&tags::TRANSFER_SYNTAX_UID) {
        Some(el) => super::decode_element(tags::TRANSFER_SYNTAX_UID, el)?.into_text(tags::TRANSFER_SYNTAX_UID)?,
        None => return Err(DicomError::UnsupportedTransferSyntax("missing (0002,0010)".into())),
    };
    let ts = TransferSyntax::from_uid(&ts_uid)
        .ok_or(DicomError::UnsupportedTransferSyntax(ts_uid))?;
    let mode = match ts {
        TransferSyntax::ExplicitVrLittleEndian => Mode::Explicit,
        TransferSyntax::ImplicitVrLittleEndian => Mode::Implicit,
    };

    while cursor.remaining() > 0 {
        let (tag, el) = read_element(&mut cursor, mode)?;
        elements.insert(tag, el);
    }

    Ok(DicomObject { transfer_syntax: ts, elements })
}

fn read_element(cursor: &mut Cursor, mode: Mode) -> Result<(DicomTag, DicomElement), DicomError> {
    let tag = cursor.tag("element tag")?;
    let (vr, length) = match mode {
        Mode::Explicit => {
            let code = cursor.take(2, "VR code")?;
            let vr = Vr::new(&[code[0], code[1]]);
            let length = if vr.has_long_header() {
                cursor.take(2, "VR reserved bytes")?;
                cursor.u32("long value length")?
            } else {
                u32::from(cursor.u16("value length")?)
            };
            (vr, length)
        }
        Mode::Implicit => {
            let length = cursor.u32("value length")?;
            let vr = lookup_vr(tag).unwrap_or(Vr::new(b"UN"));
            (vr, length)
        }
    };

    let value = if vr == Vr::new(b"SQ") {
        ElementValue::Sequence(read_items(cursor, mode, length)?)
    } else if length == UNDEFINED {
        // An undefined-length UN element is, per the standard, a sequence
        // written in implicit VR; everything else with undefined length is
        // malformed for uncompressed data.
        if vr == Vr::new(b"UN") {
            ElementValue::Sequence(read_items(cursor, Mode::Implicit, UNDEFINED)?)
        } else {
            return Err(DicomError::UndefinedLengthOutsideSequence(tag));
        }
    } else {
        ElementValue::Bytes(cursor.take(length as usize, "element value")?.to_vec())
    };

    Ok((tag, DicomElement { vr, value }))
}

fn read_items(cursor: &mut Cursor, mode: Mode, seq_length: u32) -> Result<Vec<ElementMap>, DicomError> {
    let mut items = Vec::new();
    let end = if seq_length == UNDEFINED {
        None
    } else {
        cursor.need(seq_length as usize, "sequence value")?;
        Some(cursor.pos + seq_length as usize)
    };

    loop {
        match end {
            Some(e) if cursor.pos >= e => break,
            None if cursor.remaining() == 0 => {
                return Err(DicomError::TruncatedElement { offset: cursor.pos, context: "unterminated sequence" })
            }
            _ => {}
        }
        let tag = cursor.tag("item tag")?;
        let length = cursor.u32("item length")?;
        if tag == tags::SEQUENCE_DELIMITER {
            if end.is_none() {
                break;
            }
            // A delimiter inside a defined-length sequence just ends it early.
            cursor.pos = end.unwrap();
            break;
        }
        if tag != tags::ITEM {
            return Err(DicomError::TruncatedElement { offset: cursor.pos, context: "expected sequence item tag" });
        }
        items.push(read_item_dataset(cursor, mode, length)?);
    }
    Ok(items)
}

fn read_item_dataset(cursor: &mut Cursor, mode: Mode, item_length: u32) -> Result<ElementMap, DicomError> {
    let mut map = ElementMap::new();
    if item_length == UNDEFINED {
        loop {
            if cursor.remaining() == 0 {
                return Err(DicomError::TruncatedElement { offset: cursor.pos, context: "unterminated item" });
            }
            if cursor.peek_group() == Some(0xFFFE) {
                let mark = cursor.pos;
                let tag = cursor.tag("delimiter tag")?;
                if tag == tags::ITEM_DELIMITER {
                    cursor.u32("item delimiter length")?;
                    break;
                }
                cursor.pos = mark;
            }
            let (tag, el) = read_element(cursor, mode)?;
            map.insert(tag, el);
        }
    } else {
        cursor.need(item_length as usize, "item value")?;
        let end = cursor.pos + item_length as usize;
        while cursor.pos < end {
            let (tag, el) = read_element(cursor, mode)?;
            map.insert(tag, el);
        }
        if cursor.pos != end {
            return Err(DicomError::TruncatedElement { offset: cursor.pos, context: "item overran its length" });
        }
    }
    Ok(map)
}
