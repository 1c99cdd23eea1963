//! Minimal data dictionary used to resolve VRs in implicit-VR files.
//!
//! The table covers the attributes this toolkit actually reads (patient and
//! series identification, CT acquisition parameters, image geometry, pixel
//! module, RT structure sets) plus the handful of UIDs our writers emit.
//! Tags outside the table decode as UN and their bytes are preserved.

use super::{DicomTag, Vr};

pub fn lookup_vr(tag: DicomTag) -> Option<Vr> {
    let vr: &[u8; 2] = match (tag.group, tag.element) {
        (0x0002, 0x0000) => b"UL",
        (0x0002, 0x0001) => b"OB",
        (0x0002, 0x0002) => b"UI",
        (0x0002, 0x0003) => b"UI",
        (0x0002, 0x0010) => b"UI",
        (0x0002, 0x0012) => b"UI",

        (0x0008, 0x0016) => b"UI",
        (0x0008, 0x0018) => b"UI",
        (0x0008, 0x0020) => b"DA",
        (0x0008, 0x0021) => b"DA",
        (0x0008, 0x0030) => b"TM",
        (0x0008, 0x0060) => b"CS",
        (0x0008, 0x0070) => b"LO",
        (0x0008, 0x103E) => b"LO",
        (0x0008, 0x1150) => b"UI",
        (0x0008, 0x1155) => b"UI",

        (0x0010, 0x0010) => b"PN",
        (0x0010, 0x0020) => b"LO",

        (0x0018, 0x0050) => b"DS",
        (0x0018, 0x0060) => b"DS",
        (0x0018, 0x1151) => b"IS",
        (0x0018, 0x1152) => b"IS",
        (0x0018, 0x1210) => b"SH",

        (0x0020, 0x000D) => b"UI",
        (0x0020, 0x000E) => b"UI",
        (0x0020, 0x0011) => b"IS",
        (0x0020, 0x0013) => b"IS",
        (0x0020, 0x0032) => b"DS",
        (0x0020, 0x0037) => b"DS",
        (0x0020, 0x0052) => b"UI",

        (0x0028, 0x0002) => b"US",
        (0x0028, 0x0004) => b"CS",
        (0x0028, 0x0010) => b"US",
        (0x0028, 0x0011) => b"US",
        (0x0028, 0x0030) => b"DS",
        (0x0028, 0x0100) => b"US",
        (0x0028, 0x0101) => b"US",
        (0x0028, 0x0102) => b"US",
        (0x0028, 0x0103) => b"US",
        (0x0028, 0x1052) => b"DS",
        (0x0028, 0x1053) => b"DS",

        (0x3006, 0x0002) => b"SH",
        (0x3006, 0x0010) => b"SQ",
        (0x3006, 0x0012) => b"SQ",
        (0x3006, 0x0014) => b"SQ",
        (0x3006, 0x0016) => b"SQ",
        (0x3006, 0x0020) => b"SQ",
        (0x3006, 0x0022) => b"IS",
        (0x3006, 0x0024) => b"UI",
        (0x3006, 0x0026) => b"LO",
        (0x3006, 0x0028) => b"ST",
        (0x3006, 0x002A) => b"IS",
        (0x3006, 0x0039) => b"SQ",
        (0x3006, 0x0040) => b"SQ",
        (0x3006, 0x0042) => b"CS",
        (0x3006, 0x0046) => b"IS",
        (0x3006, 0x0050) => b"DS",
        (0x3006, 0x0084) => b"IS",

        (0x7FE0, 0x0010) => b"OW",

        _ => return None,
    };
    Some(Vr::new(vr))
}
