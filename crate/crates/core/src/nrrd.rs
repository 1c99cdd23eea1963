//! NRRD serialization of volumes and masks.
//!
//! Files are written as NRRD0004 with attached raw little-endian data and a
//! fixed header field order, so equal volumes always serialize to identical
//! bytes. The reader is more liberal: NRRD0004 or NRRD0005, raw or gzip
//! encoding, and any of the common scalar types.

use std::fs;
use std::io::Read;
use std::path::Path;

use crate::util::write_atomic;
use crate::volume::{Geometry, Mask, ScalarType, Volume, VolumeError};

fn type_name(t: ScalarType) -> &'static str {
    match t {
        ScalarType::Int16 => "short",
        ScalarType::Uint8 => "uchar",
        ScalarType::Float64 => "double",
    }
}

fn vec3(v: [f64; 3]) -> String {
    format!("({},{},{})", v[0], v[1], v[2])
}

fn header(geom: &Geometry, t: ScalarType) -> String {
    let dir = |axis: usize| {
        let d = geom.direction[axis];
        let s = geom.spacing[axis];
        vec3([d[0] * s, d[1] * s, d[2] * s])
    };
    format!(
        "NRRD0004\n\
         type: {}\n\
         dimension: 3\n\
         sizes: {} {} {}\n\
         space: left-posterior-superior\n\
         space directions: {} {} {}\n\
         space origin: {}\n\
         endian: little\n\
         encoding: raw\n\n",
        type_name(t),
        geom.dims[0],
        geom.dims[1],
        geom.dims[2],
        dir(0),
        dir(1),
        dir(2),
        vec3(geom.origin),
    )
}

/// Serialize a volume using its `stored` scalar type.
pub fn volume_to_bytes(v: &Volume) -> Result<Vec<u8>, VolumeError> {
    let mut out = header(&v.geom, v.stored).into_bytes();
    match v.stored {
        ScalarType::Int16 => {
            for &x in &v.data {
                if x.fract() != 0.0 || x < f64::from(i16::MIN) || x > f64::from(i16::MAX) {
                    return Err(VolumeError::BadHeader(format!(
                        "value {x} is not representable as int16; volume storage is stale"
                    )));
                }
                out.extend_from_slice(&(x as i16).to_le_bytes());
            }
        }
        ScalarType::Uint8 => {
            for &x in &v.data {
                if x.fract() != 0.0 || !(0.0..=255.0).contains(&x) {
                    return Err(VolumeError::BadHeader(format!(
                        "value {x} is not representable as uint8; volume storage is stale"
                    )));
                }
                out.push(x as u8);
            }
        }
        ScalarType::Float64 => {
            for &x in &v.data {
                out.extend_from_slice(&x.to_le_bytes());
            }
        }
    }
    Ok(out)
}

/// Serialize a mask as uint8.
pub fn mask_to_bytes(m: &Mask) -> Vec<u8> {
    let mut out = header(&m.geom, ScalarType::Uint8).into_bytes();
    out.extend_from_slice(&m.data);
    out
}

pub fn write_volume(v: &Volume, path: &Path) -> Result<(), VolumeError> {
    Ok(write_atomic(path, &volume_to_bytes(v)?)?)
}

pub fn write_mask(m: &Mask, path: &Path) -> Result<(), VolumeError> {
    Ok(write_atomic(path, &mask_to_bytes(m))?)
}

pub fn read_volume(path: &Path) -> Result<Volume, VolumeError> {
    volume_from_bytes(&fs::read(path)?)
}

pub fn read_mask(path: &Path) -> Result<Mask, VolumeError> {
    Mask::from_volume(&read_volume(path)?)
}

/// Parse an in-memory NRRD file.
pub fn volume_from_bytes(bytes: &[u8]) -> Result<Volume, VolumeError> {
    let (fields, payload_start) = split_header(bytes)?;

    let field = |name: &str| fields.iter().find(|(k, _)| k == name).map(|(_, v)| v.as_str());
    let require = |name: &str| field(name).ok_or_else(|| VolumeError::BadHeader(format!("missing field {name:?}")));

    let dimension: usize = require("dimension")?
        .parse()
        .map_err(|_| VolumeError::BadHeader("dimension is not an integer".into()))?;
    if dimension != 3 {
        return Err(VolumeError::BadHeader(format!("only 3-D data is supported, got dimension {dimension}")));
    }

    let sizes: Vec<usize> = require("sizes")?
        .split_whitespace()
        .map(|s| s.parse().map_err(|_| VolumeError::BadHeader(format!("bad size {s:?}"))))
        .collect::<Result<_, _>>()?;
    if sizes.len() != 3 || sizes.iter().any(|&s| s == 0) {
        return Err(VolumeError::BadHeader(format!("expected 3 positive sizes, got {sizes:?}")));
    }
    let dims = [sizes[0], sizes[1], sizes[2]];

    let (spacing, direction) = match field("space directions") {
        Some(text) => parse_space_directions(text)?,
        None => ([1.0; 3], [[1.0, 0.0, 0.0], [0.0, 1.0, 0.0], [0.0, 0.0, 1.0]]),
    };
    let origin = match field("space origin") {
        Some(text) => parse_vec3(text)?,
        None => [0.0; 3],
    };

    let type_text = require("type")?.to_ascii_lowercase();
    let (width, stored) = match type_text.as_str() {
        "uchar" | "uint8" | "uint8_t" | "unsigned char" => (1, ScalarType::Uint8),
        "short" | "int16" | "int16_t" | "signed short" => (2, ScalarType::Int16),
        "ushort" | "uint16" | "uint16_t" | "unsigned short" => (2, ScalarType::Float64),
        "int" | "int32" | "int32_t" => (4, ScalarType::Float64),
        "float" | "float32" => (4, ScalarType::Float64),
        "double" | "float64" => (8, ScalarType::Float64),
        other => return Err(VolumeError::BadHeader(format!("unsupported type {other:?}"))),
    };

    if width > 1 {
        if let Some(endian) = field("endian") {
            if endian != "little" {
                return Err(VolumeError::BadHeader(format!("unsupported endian {endian:?}")));
            }
        }
    }

    let raw = &bytes[payload_start..];
    let decoded: Vec<u8> = match require("encoding")? {
        "raw" => raw.to_vec(),
        "gzip" | "gz" => {
            let mut out = Vec::new();
            flate2::read::GzDecoder::new(raw)
                .read_to_end(&mut out)
                .map_err(|e| VolumeError::BadHeader(format!("gzip payload: {e}")))?;
            out
        }
        other => return Err(VolumeError::BadHeader(format!("unsupported encoding {other:?}"))),
    };

    let count = dims[0] * dims[1] * dims[2];
    if decoded.len() != count * width {
        return Err(VolumeError::SizeMismatch { expected: count, found: decoded.len() / width });
    }

    let data: Vec<f64> = match type_text.as_str() {
        "uchar" | "uint8" | "uint8_t" | "unsigned char" => decoded.iter().map(|&b| f64::from(b)).collect(),
        "short" | "int16" | "int16_t" | "signed short" => decoded
            .chunks_exact(2)
            .map(|c| f64::from(i16::from_le_bytes([c[0], c[1]])))
            .collect(),
        "ushort" | "uint16" | "uint16_t" | "unsigned short" => decoded
            .chunks_exact(2)
            .map(|c| f64::from(u16::from_le_bytes([c[0], c[1]])))
            .collect(),
        "int" | "int32" | "int32_t" => decoded
            .chunks_exact(4)
            .map(|c| f64::from(i32::from_le_bytes([c[0], c[1], c[2], c[3]])))
            .collect(),
        "float" | "float32" => decoded
            .chunks_exact(4)
            .map(|c| f64::from(f32::from_le_bytes([c[0], c[1], c[2], c[3]])))
            .collect(),
        _ => decoded
            .chunks_exact(8)
            .map(|c| f64::from_le_bytes([c[0], c[1], c[2], c[3], c[4], c[5], c[6], c[7]]))
            .collect(),
    };

    Ok(Volume {
        geom: Geometry { dims, spacing, origin, direction },
        data,
        stored,
        intensity_unit: "unknown".into(),
    })
}

fn split_header(bytes: &[u8]) -> Result<(Vec<(String, String)>, usize), VolumeError> {
    let magic_ok = bytes.starts_with(b"NRRD0004\n") || bytes.starts_with(b"NRRD0005\n");
    if !magic_ok {
        return Err(VolumeError::BadHeader("missing NRRD0004/NRRD0005 magic".into()));
    }
    let mut fields = Vec::new();
    let mut pos = 9; // past magic and newline
    loop {
        let line_end = bytes[pos..]
            .iter()
            .position(|&b| b == b'\n')
            .map(|i| pos + i)
            .ok_or_else(|| VolumeError::BadHeader("header never ends".into()))?;
        let line = std::str::from_utf8(&bytes[pos..line_end])
            .map_err(|_| VolumeError::BadHeader("header is not valid UTF-8".into()))?;
        pos = line_end + 1;
        if line.is_empty() {
            break;
        }
        if line.starts_with('#') || line.contains(":=") {
            continue; // comment or key-value pair we do not use
        }
        if let Some((key, value)) = line.split_once(": ") {
            fields.push((key.to_string(), value.trim().to_string()));
        } else {
            return Err(VolumeError::BadHeader(format!("malformed header line {line:?}")));
        }
    }
    Ok((fields, pos))
}

fn parse_vec3(text: &str) -> Result<[f64; 3], VolumeError> {
    let inner = text
        .trim()
        .strip_prefix('(')
        .and_then(|s| s.strip_suffix(')'))
        .ok_or_else(|| VolumeError::BadHeader(format!("expected (x,y,z), got {text:?}")))?;
    let parts: Vec<f64> = inner
        .split(',')
        .map(|p| p.trim().parse().map_err(|_| VolumeError::BadHeader(format!("bad number in {text:?}"))))
        .collect::<Result<_, _>>()?;
    if parts.len() != 3 {
        return Err(VolumeError::BadHeader(format!("expected 3 components, got {text:?}")));
    }
    Ok([parts[0], parts[1], parts[2]])
}

fn parse_space_directions(text: &str) -> Result<([f64; 3], [[f64; 3]; 3]), VolumeError> {
    let vectors: Vec<[f64; 3]> = text
        .split(") ")
        .map(|part| {
            let part = part.trim();
            let part = if part.ends_with(')') { part.to_string() } else { format!("{part})") };
            parse_vec3(&part)
        })
        .collect::<Result<_, _>>()?;
    if vectors.len() != 3 {
        return Err(VolumeError::BadHeader(format!("expected 3 space directions, got {text:?}")));
    }
    let mut spacing = [0.0; 3];
    let mut direction = [[0.0; 3]; 3];
    for (axis, v) in vectors.iter().enumerate() {
        // Axis-aligned vectors recover their spacing exactly; the general
        // case pays one square root.
        let zeros = v.iter().filter(|&&c| c == 0.0).count();
        let norm = if zeros == 2 {
            v.iter().map(|c| c.abs()).fold(0.0, f64::max)
        } else {
            (v[0] * v[0] + v[1] * v[1] + v[2] * v[2]).sqrt()
        };
        if norm <= 0.0 {
            return Err(VolumeError::BadHeader("zero-length space direction".into()));
        }
        spacing[axis] = norm;
        direction[axis] = [v[0] / norm, v[1] / norm, v[2] / norm];
    }
    Ok((spacing, direction))
}
