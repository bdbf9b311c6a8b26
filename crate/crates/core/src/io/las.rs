//! Minimal LAS reader and writer.
//!
//! Reads uncompressed little-endian LAS 1.2 to 1.4 with point data record
//! formats 0, 1, 6 and 7. Variable length records are skipped by honouring
//! the header's offset to point data. The Point Source ID is the pass label.
//! The writer emits LAS 1.2 with format 1 when any point has a GPS time and
//! format 0 otherwise; no timestamps are written, so output is reproducible.

use std::fs;
use std::path::Path;

use crate::error::{Error, Result};
use crate::model::{Point, PointCloud};

const MAGIC: &[u8; 4] = b"LASF";
const HEADER_12: usize = 227;
const HEADER_14: usize = 375;

/// Default coordinate quantum, m.
pub const DEFAULT_SCALE: f64 = 0.001;

fn min_record_len(format: u8) -> Option<usize> {
    match format {
        0 => Some(20),
        1 => Some(28),
        6 => Some(30),
        7 => Some(36),
        _ => None,
    }
}

fn u16_at(b: &[u8], o: usize) -> u16 {
    u16::from_le_bytes([b[o], b[o + 1]])
}
fn u32_at(b: &[u8], o: usize) -> u32 {
    u32::from_le_bytes(b[o..o + 4].try_into().unwrap())
}
fn i32_at(b: &[u8], o: usize) -> i32 {
    i32::from_le_bytes(b[o..o + 4].try_into().unwrap())
}
fn u64_at(b: &[u8], o: usize) -> u64 {
    u64::from_le_bytes(b[o..o + 8].try_into().unwrap())
}
fn f64_at(b: &[u8], o: usize) -> f64 {
    f64::from_le_bytes(b[o..o + 8].try_into().unwrap())
}

/// Parsed fields of the public header block that the reader needs.
#[derive(Debug, Clone, PartialEq)]
pub struct LasHeader {
    pub version: (u8, u8),
    pub header_size: u16,
    pub point_offset: u32,
    pub format: u8,
    pub record_len: u16,
    pub point_count: u64,
    pub scale: [f64; 3],
    pub offset: [f64; 3],
}

pub fn parse_header(bytes: &[u8]) -> Result<LasHeader> {
    if bytes.len() < 4 || &bytes[..4] != MAGIC {
        return Err(Error::Format("missing LASF signature".into()));
    }
    if bytes.len() < HEADER_12 {
        return Err(Error::Corrupt {
            offset: bytes.len() as u64,
            message: format!("public header needs {HEADER_12} bytes"),
        });
    }
    let version = (bytes[24], bytes[25]);
    let header_size = u16_at(bytes, 94);
    let raw_format = bytes[104];
    if raw_format & 0xC0 != 0 {
        // Bits 6/7 flag LAZ compression.
        return Err(Error::UnsupportedFormat { code: raw_format });
    }
    let format = raw_format;
    let min_len = min_record_len(format).ok_or(Error::UnsupportedFormat { code: format })?;
    let record_len = u16_at(bytes, 105);
    if (record_len as usize) < min_len {
        return Err(Error::Format(format!(
            "record length {record_len} too short for point format {format} (needs {min_len})"
        )));
    }
    let legacy = u32_at(bytes, 107) as u64;
    let point_count = if version.1 >= 4 && header_size as usize >= HEADER_14 {
        if bytes.len() < HEADER_14 {
            return Err(Error::Corrupt {
                offset: bytes.len() as u64,
                message: format!("LAS 1.4 header needs {HEADER_14} bytes"),
            });
        }
        match u64_at(bytes, 247) {
            0 => legacy,
            n => n,
        }
    } else {
        legacy
    };
    Ok(LasHeader {
        version,
        header_size,
        point_offset: u32_at(bytes, 96),
        format,
        record_len,
        point_count,
        scale: [f64_at(bytes, 131), f64_at(bytes, 139), f64_at(bytes, 147)],
        offset: [f64_at(bytes, 155), f64_at(bytes, 163), f64_at(bytes, 171)],
    })
}

/// Decodes LAS bytes already in memory.
pub fn decode_las(bytes: &[u8]) -> Result<PointCloud> {
    let h = parse_header(bytes)?;
    let stride = h.record_len as usize;
    let start = h.point_offset as usize;
    let mut points = Vec::with_capacity(h.point_count.min(1 << 28) as usize);
    for k in 0..h.point_count {
        let o = start + k as usize * stride;
        if o + stride > bytes.len() {
            return Err(Error::Corrupt {
                offset: o as u64,
                message: format!(
                    "point record {k} of {} truncated (file is {} bytes)",
                    h.point_count,
                    bytes.len()
                ),
            });
        }
        let rec = &bytes[o..o + stride];
        let coord = |axis: usize| i32_at(rec, axis * 4) as f64 * h.scale[axis] + h.offset[axis];
        let intensity = u16_at(rec, 12) as f64;
        let (pass_id, gps_time) = match h.format {
            0 => (u16_at(rec, 18), None),
            1 => (u16_at(rec, 18), Some(f64_at(rec, 20))),
            _ => (u16_at(rec, 20), Some(f64_at(rec, 22))),
        };
        points.push(Point {
            x: coord(0),
            y: coord(1),
            z: coord(2),
            pass_id: pass_id as u32,
            intensity: Some(intensity),
            gps_time,
        });
    }
    PointCloud::new(points)
}

pub fn read_las(path: impl AsRef<Path>) -> Result<PointCloud> {
    let path = path.as_ref();
    let bytes = fs::read(path).map_err(|e| Error::io(path, e))?;
    decode_las(&bytes)
}

/// Quantisation used when writing.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LasWriteOptions {
    pub scale: [f64; 3],
    /// Offsets; `None` picks the floor of the cloud minimum on each axis.
    pub offset: Option<[f64; 3]>,
}

impl Default for LasWriteOptions {
    fn default() -> Self {
        LasWriteOptions {
            scale: [DEFAULT_SCALE; 3],
            offset: None,
        }
    }
}

/// Encodes a cloud as LAS 1.2 bytes.
pub fn encode_las(cloud: &PointCloud, options: &LasWriteOptions) -> Result<Vec<u8>> {
    let with_time = cloud.points().iter().any(|p| p.gps_time.is_some());
    let format: u8 = if with_time { 1 } else { 0 };
    let record_len = min_record_len(format).unwrap();
    let count = u32::try_from(cloud.len())
        .map_err(|_| Error::InvalidInput("LAS 1.2 holds at most 2^32-1 points".into()))?;
    let bounds = cloud.bounds();
    let offset = options.offset.unwrap_or_else(|| match bounds {
        Some(b) => b.min.map(f64::floor),
        None => [0.0; 3],
    });
    if options.scale.iter().any(|s| !(*s > 0.0)) {
        return Err(Error::InvalidInput("LAS scale factors must be positive".into()));
    }

    let mut out = Vec::with_capacity(HEADER_12 + cloud.len() * record_len);
    out.extend_from_slice(MAGIC);
    out.extend_from_slice(&[0u8; 20]); // file source id, encoding, GUID
    out.extend_from_slice(&[1, 2]);
    let mut text = [0u8; 64];
    text[..7].copy_from_slice(b"lidarqc");
    text[32..39].copy_from_slice(b"lidarqc");
    out.extend_from_slice(&text);
    out.extend_from_slice(&[0u8; 4]); // creation day/year left unset
    out.extend_from_slice(&(HEADER_12 as u16).to_le_bytes());
    out.extend_from_slice(&(HEADER_12 as u32).to_le_bytes());
    out.extend_from_slice(&0u32.to_le_bytes());
    out.push(format);
    out.extend_from_slice(&(record_len as u16).to_le_bytes());
    out.extend_from_slice(&count.to_le_bytes());
    out.extend_from_slice(&count.to_le_bytes());
    out.extend_from_slice(&[0u8; 16]);
    for s in options.scale {
        out.extend_from_slice(&s.to_le_bytes());
    }
    for o in offset {
        out.extend_from_slice(&o.to_le_bytes());
    }
    let (min, max) = match bounds {
        Some(b) => (b.min, b.max),
        None => ([0.0; 3], [0.0; 3]),
    };
    for axis in 0..3 {
        out.extend_from_slice(&max[axis].to_le_bytes());
        out.extend_from_slice(&min[axis].to_le_bytes());
    }
    debug_assert_eq!(out.len(), HEADER_12);

    for (i, p) in cloud.points().iter().enumerate() {
        for (axis, v) in [p.x, p.y, p.z].into_iter().enumerate() {
            let q = ((v - offset[axis]) / options.scale[axis]).round();
            if !(i32::MIN as f64..=i32::MAX as f64).contains(&q) {
                return Err(Error::InvalidInput(format!(
                    "point {i} does not fit the LAS integer range with scale {} and offset {}",
                    options.scale[axis], offset[axis]
                )));
            }
            out.extend_from_slice(&(q as i32).to_le_bytes());
        }
        let intensity = p.intensity.unwrap_or(0.0).round().clamp(0.0, u16::MAX as f64) as u16;
        out.extend_from_slice(&intensity.to_le_bytes());
        out.extend_from_slice(&[0x09, 1, 0, 0]); // single return, class 1, angle 0, user 0
        let source = u16::try_from(p.pass_id).map_err(|_| {
            Error::InvalidInput(format!("pass id {} exceeds the LAS Point Source ID range", p.pass_id))
        })?;
        out.extend_from_slice(&source.to_le_bytes());
        if with_time {
            out.extend_from_slice(&p.gps_time.unwrap_or(0.0).to_le_bytes());
        }
    }
    Ok(out)
}

pub fn write_las(cloud: &PointCloud, path: impl AsRef<Path>, options: &LasWriteOptions) -> Result<()> {
    let bytes = encode_las(cloud, options)?;
    super::write_atomic(path.as_ref(), &bytes)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn three() -> PointCloud {
        let mut pts = vec![
            Point::new(583_100.123_4, 4_506_200.5, 12.3456, 0),
            Point::new(583_101.0, 4_506_201.25, 13.0, 7),
            Point::new(583_099.9999, 4_506_199.0, 11.0001, 7),
        ];
        pts[1].gps_time = Some(12345.678);
        PointCloud::new(pts).unwrap()
    }

    #[test]
    fn round_trip_within_quantum() {
        let cloud = three();
        let back = decode_las(&encode_las(&cloud, &LasWriteOptions::default()).unwrap()).unwrap();
        assert_eq!(back.len(), 3);
        for (a, b) in cloud.points().iter().zip(back.points()) {
            assert!((a.x - b.x).abs() <= DEFAULT_SCALE / 2.0 + 1e-9);
            assert!((a.y - b.y).abs() <= DEFAULT_SCALE / 2.0 + 1e-9);
            assert!((a.z - b.z).abs() <= DEFAULT_SCALE / 2.0 + 1e-9);
            assert_eq!(a.pass_id, b.pass_id);
        }
        assert_eq!(back.points()[1].pass_id, 7);
        assert_eq!(back.points()[1].gps_time, Some(12345.678));
    }

    #[test]
    fn empty_file() {
        let bytes = encode_las(&PointCloud::empty(), &LasWriteOptions::default()).unwrap();
        let c = decode_las(&bytes).unwrap();
        assert!(c.is_empty());
        assert!(c.pass_ids().is_empty());
    }

    #[test]
    fn bad_magic() {
        let mut bytes = encode_las(&three(), &LasWriteOptions::default()).unwrap();
        bytes[0] = b'X';
        assert!(matches!(decode_las(&bytes), Err(Error::Format(_))));
    }

    #[test]
    fn unsupported_format_names_code() {
        let mut bytes = encode_las(&three(), &LasWriteOptions::default()).unwrap();
        bytes[104] = 3;
        let err = decode_las(&bytes).unwrap_err();
        assert!(matches!(err, Error::UnsupportedFormat { code: 3 }));
        assert!(err.to_string().contains('3'));
    }

    #[test]
    fn truncated_records_report_offset() {
        let bytes = encode_las(&three(), &LasWriteOptions::default()).unwrap();
        let cut = &bytes[..bytes.len() - 5];
        match decode_las(cut) {
            Err(Error::Corrupt { offset, .. }) => assert_eq!(offset, (HEADER_12 + 2 * 28) as u64),
            other => panic!("expected corrupt error, got {other:?}"),
        }
    }

    #[test]
    fn reads_las14_format6() {
        // Hand-built LAS 1.4 file with one format-6 point.
        let mut b = vec![0u8; HEADER_14];
        b[..4].copy_from_slice(MAGIC);
        b[24] = 1;
        b[25] = 4;
        b[94..96].copy_from_slice(&(HEADER_14 as u16).to_le_bytes());
        b[96..100].copy_from_slice(&(HEADER_14 as u32).to_le_bytes());
        b[104] = 6;
        b[105..107].copy_from_slice(&30u16.to_le_bytes());
        b[247..255].copy_from_slice(&1u64.to_le_bytes());
        for (i, s) in [0.01f64, 0.01, 0.001].iter().enumerate() {
            b[131 + 8 * i..139 + 8 * i].copy_from_slice(&s.to_le_bytes());
        }
        b[155..163].copy_from_slice(&1000.0f64.to_le_bytes());
        let mut rec = vec![0u8; 30];
        rec[0..4].copy_from_slice(&150i32.to_le_bytes());
        rec[4..8].copy_from_slice(&(-20i32).to_le_bytes());
        rec[8..12].copy_from_slice(&4500i32.to_le_bytes());
        rec[12..14].copy_from_slice(&77u16.to_le_bytes());
        rec[20..22].copy_from_slice(&42u16.to_le_bytes());
        rec[22..30].copy_from_slice(&3.5f64.to_le_bytes());
        b.extend(rec);
        let c = decode_las(&b).unwrap();
        let p = c.points()[0];
        assert!((p.x - 1001.5).abs() < 1e-9);
        assert!((p.y + 0.2).abs() < 1e-9);
        assert!((p.z - 4.5).abs() < 1e-9);
        assert_eq!(p.pass_id, 42);
        assert_eq!(p.intensity, Some(77.0));
        assert_eq!(p.gps_time, Some(3.5));
    }

    #[test]
    fn deterministic_bytes() {
        let a = encode_las(&three(), &LasWriteOptions::default()).unwrap();
        let b = encode_las(&three(), &LasWriteOptions::default()).unwrap();
        assert_eq!(a, b);
    }
}
