//! Bit-exact raster file formats.
//!
//! - Depth: grayscale PFM (`Pf`), 32-bit floats, bottom row first. The
//!   writer always emits little-endian with scale `-1.0`; the reader
//!   honors the scale sign for endianness and ignores its magnitude.
//! - Masks: binary PGM (`P5`), maxval 255, byte >= 128 means inside.
//! - Point clouds: ASCII PLY with float x, y, z properties.

use std::fs;
use std::io::Write;
use std::path::Path;

use crate::camera::Point3;
use crate::error::{Error, Result};
use crate::raster::{DepthMap, Mask};

const MAX_PIXELS: u64 = 1 << 31;

/// Mask pixels at or above this byte value are inside.
pub const PGM_INSIDE_THRESHOLD: u8 = 128;

fn is_ws(b: u8) -> bool {
    matches!(b, b' ' | b'\t' | b'\n' | b'\r' | 0x0b | 0x0c)
}

struct Cursor<'a> {
    buf: &'a [u8],
    pos: usize,
    comments: bool,
}

impl<'a> Cursor<'a> {
    fn new(buf: &'a [u8], comments: bool) -> Self {
        Self {
            buf,
            pos: 0,
            comments,
        }
    }

    fn fail(&self, offset: usize, message: impl Into<String>) -> Error {
        Error::Format {
            offset: offset as u64,
            message: message.into(),
        }
    }

    /// Next whitespace-delimited token. Consumes exactly one trailing
    /// whitespace byte, so after the final header token the cursor sits on
    /// the first payload byte.
    fn token(&mut self, what: &str) -> Result<String> {
        loop {
            while self.pos < self.buf.len() && is_ws(self.buf[self.pos]) {
                self.pos += 1;
            }
            if self.comments && self.pos < self.buf.len() && self.buf[self.pos] == b'#' {
                while self.pos < self.buf.len() && self.buf[self.pos] != b'\n' {
                    self.pos += 1;
                }
                continue;
            }
            break;
        }
        let start = self.pos;
        while self.pos < self.buf.len() && !is_ws(self.buf[self.pos]) {
            self.pos += 1;
        }
        if self.pos == start {
            return Err(self.fail(start, format!("unexpected end of header, expected {what}")));
        }
        let tok = std::str::from_utf8(&self.buf[start..self.pos])
            .map_err(|_| self.fail(start, format!("non-ASCII bytes in {what}")))?
            .to_owned();
        if self.pos < self.buf.len() {
            self.pos += 1; // the single separator byte
        }
        Ok(tok)
    }

    fn dimension(&mut self, what: &str) -> Result<u32> {
        let at = self.pos;
        let tok = self.token(what)?;
        tok.parse::<u32>()
            .map_err(|_| self.fail(at, format!("cannot parse {what} from {tok:?}")))
    }
}

fn check_dims(cursor: &Cursor<'_>, width: u32, height: u32) -> Result<usize> {
    let pixels = width as u64 * height as u64;
    if pixels > MAX_PIXELS {
        return Err(Error::Format {
            offset: cursor.pos as u64,
            message: format!("dimension overflow: {width}x{height}"),
        });
    }
    Ok(pixels as usize)
}

/// Serializes a depth map as grayscale PFM (little-endian, scale -1.0).
pub fn encode_pfm(d: &DepthMap) -> Vec<u8> {
    let mut out = Vec::with_capacity(32 + d.len() * 4);
    out.extend_from_slice(format!("Pf\n{} {}\n-1.0\n", d.width(), d.height()).as_bytes());
    let w = d.width() as usize;
    for row in (0..d.height() as usize).rev() {
        for &v in &d.values()[row * w..(row + 1) * w] {
            out.extend_from_slice(&(v as f32).to_le_bytes());
        }
    }
    out
}

/// Parses grayscale PFM bytes. Color (`PF`) headers are rejected.
pub fn parse_pfm(buf: &[u8]) -> Result<DepthMap> {
    let mut c = Cursor::new(buf, false);
    let magic_at = c.pos;
    let magic = c.token("magic")?;
    match magic.as_str() {
        "Pf" => {}
        "PF" => {
            return Err(c.fail(magic_at, "color PFM not supported (grayscale Pf only)"));
        }
        other => {
            return Err(c.fail(magic_at, format!("bad magic {other:?}, expected Pf")));
        }
    }
    let width = c.dimension("width")?;
    let height = c.dimension("height")?;
    let scale_at = c.pos;
    let scale_tok = c.token("scale")?;
    let scale: f64 = scale_tok
        .parse()
        .map_err(|_| c.fail(scale_at, format!("cannot parse scale from {scale_tok:?}")))?;
    if scale == 0.0 || !scale.is_finite() {
        return Err(c.fail(
            scale_at,
            format!("scale must be finite and non-zero, got {scale}"),
        ));
    }
    let little_endian = scale < 0.0;
    let pixels = check_dims(&c, width, height)?;
    let payload = &buf[c.pos..];
    if payload.len() < pixels * 4 {
        return Err(Error::Format {
            offset: buf.len() as u64,
            message: format!(
                "truncated payload: need {} bytes, have {}",
                pixels * 4,
                payload.len()
            ),
        });
    }
    let w = width as usize;
    let mut values = vec![0.0f64; pixels];
    for file_row in 0..height as usize {
        let image_row = height as usize - 1 - file_row;
        for col in 0..w {
            let at = (file_row * w + col) * 4;
            let raw: [u8; 4] = payload[at..at + 4].try_into().unwrap();
            let f = if little_endian {
                f32::from_le_bytes(raw)
            } else {
                f32::from_be_bytes(raw)
            };
            if !f.is_finite() || f < 0.0 {
                return Err(Error::Format {
                    offset: (c.pos + at) as u64,
                    message: format!("depth value {f} is not finite and non-negative"),
                });
            }
            values[image_row * w + col] = f as f64;
        }
    }
    DepthMap::new(width, height, values)
}

pub fn write_depth(d: &DepthMap, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    write_bytes(path, &encode_pfm(d))
}

pub fn read_depth(path: impl AsRef<Path>) -> Result<DepthMap> {
    let path = path.as_ref();
    let buf = fs::read(path).map_err(|e| Error::io(path.display().to_string(), e))?;
    parse_pfm(&buf)
}

/// Serializes a mask as binary PGM (maxval 255, inside = 255).
pub fn encode_pgm(m: &Mask) -> Vec<u8> {
    let mut out = Vec::with_capacity(32 + m.bits().len());
    out.extend_from_slice(format!("P5\n{} {}\n255\n", m.width(), m.height()).as_bytes());
    out.extend(m.bits().iter().map(|b| if *b { 255u8 } else { 0u8 }));
    out
}

/// Parses binary PGM bytes. `#` comments in the header are allowed.
pub fn parse_pgm(buf: &[u8]) -> Result<Mask> {
    let mut c = Cursor::new(buf, true);
    let magic_at = c.pos;
    let magic = c.token("magic")?;
    if magic != "P5" {
        return Err(c.fail(magic_at, format!("bad magic {magic:?}, expected P5")));
    }
    let width = c.dimension("width")?;
    let height = c.dimension("height")?;
    let maxval_at = c.pos;
    let maxval = c.dimension("maxval")?;
    if maxval == 0 || maxval > 255 {
        return Err(c.fail(
            maxval_at,
            format!("maxval {maxval} unsupported (need 1..=255)"),
        ));
    }
    let pixels = check_dims(&c, width, height)?;
    let payload = &buf[c.pos..];
    if payload.len() < pixels {
        return Err(Error::Format {
            offset: buf.len() as u64,
            message: format!(
                "truncated payload: need {} bytes, have {}",
                pixels,
                payload.len()
            ),
        });
    }
    let bits = payload[..pixels]
        .iter()
        .map(|b| *b >= PGM_INSIDE_THRESHOLD)
        .collect();
    Mask::new(width, height, bits)
}

pub fn write_mask(m: &Mask, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    write_bytes(path, &encode_pgm(m))
}

pub fn read_mask(path: impl AsRef<Path>) -> Result<Mask> {
    let path = path.as_ref();
    let buf = fs::read(path).map_err(|e| Error::io(path.display().to_string(), e))?;
    parse_pgm(&buf)
}

/// Writes a point cloud as ASCII PLY with x, y, z float properties.
pub fn write_ply(points: &[Point3], path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    let mut out = Vec::new();
    let header = format!(
        "ply\nformat ascii 1.0\nelement vertex {}\nproperty float x\nproperty float y\nproperty float z\nend_header\n",
        points.len()
    );
    out.extend_from_slice(header.as_bytes());
    for p in points {
        writeln!(&mut out, "{} {} {}", p[0], p[1], p[2])
            .map_err(|e| Error::io(path.display().to_string(), e))?;
    }
    write_bytes(path, &out)
}

fn write_bytes(path: &Path, bytes: &[u8]) -> Result<()> {
    fs::write(path, bytes).map_err(|e| Error::io(path.display().to_string(), e))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn pfm_roundtrip_bytes() {
        let d = DepthMap::new(3, 2, vec![0.5, 1.25, 2.0, 0.0, 0.75, 3.5]).unwrap();
        let bytes = encode_pfm(&d);
        let back = parse_pfm(&bytes).unwrap();
        assert_eq!(back, d);
        assert_eq!(encode_pfm(&back), bytes);
    }

    #[test]
    fn pfm_header_layout() {
        let d = DepthMap::new(2, 1, vec![1.0, 2.0]).unwrap();
        let bytes = encode_pfm(&d);
        assert!(bytes.starts_with(b"Pf\n2 1\n-1.0\n"));
        assert_eq!(bytes.len(), "Pf\n2 1\n-1.0\n".len() + 8);
    }

    #[test]
    fn pfm_bottom_row_first() {
        // image rows: top [1, 2], bottom [3, 4]; file stores bottom first
        let d = DepthMap::new(2, 2, vec![1.0, 2.0, 3.0, 4.0]).unwrap();
        let bytes = encode_pfm(&d);
        let payload = &bytes["Pf\n2 2\n-1.0\n".len()..];
        let first = f32::from_le_bytes(payload[0..4].try_into().unwrap());
        assert_eq!(first, 3.0);
    }

    #[test]
    fn pfm_reads_big_endian() {
        let mut bytes = b"Pf\n1 1\n1.0\n".to_vec();
        bytes.extend_from_slice(&1.5f32.to_be_bytes());
        let d = parse_pfm(&bytes).unwrap();
        assert_eq!(d.values(), &[1.5]);
    }

    #[test]
    fn pfm_rejects_color() {
        let bytes = b"PF\n1 1\n-1.0\n\x00\x00\x80\x3f".to_vec();
        match parse_pfm(&bytes) {
            Err(Error::Format { offset, message }) => {
                assert_eq!(offset, 0);
                assert!(message.contains("color"));
            }
            other => panic!("expected format error, got {other:?}"),
        }
    }

    #[test]
    fn pfm_truncated_payload() {
        let mut bytes = b"Pf\n2 2\n-1.0\n".to_vec();
        bytes.extend_from_slice(&1.0f32.to_le_bytes());
        assert!(matches!(parse_pfm(&bytes), Err(Error::Format { .. })));
    }

    #[test]
    fn pfm_rejects_nan_and_negative_with_offset() {
        let header = b"Pf\n2 1\n-1.0\n";
        let mut bytes = header.to_vec();
        bytes.extend_from_slice(&1.0f32.to_le_bytes());
        bytes.extend_from_slice(&f32::NAN.to_le_bytes());
        match parse_pfm(&bytes) {
            Err(Error::Format { offset, .. }) => {
                assert_eq!(offset, header.len() as u64 + 4);
            }
            other => panic!("expected format error, got {other:?}"),
        }

        let mut bytes = header.to_vec();
        bytes.extend_from_slice(&(-1.0f32).to_le_bytes());
        bytes.extend_from_slice(&1.0f32.to_le_bytes());
        assert!(matches!(parse_pfm(&bytes), Err(Error::Format { .. })));
    }

    #[test]
    fn pfm_dimension_overflow() {
        let bytes = b"Pf\n100000 100000\n-1.0\n".to_vec();
        match parse_pfm(&bytes) {
            Err(Error::Format { message, .. }) => assert!(message.contains("overflow")),
            other => panic!("expected overflow error, got {other:?}"),
        }
    }

    #[test]
    fn pgm_roundtrip_and_threshold() {
        let m = Mask::from_fn(3, 2, |u, v| (u + v) % 2 == 0);
        let bytes = encode_pgm(&m);
        assert!(bytes.starts_with(b"P5\n3 2\n255\n"));
        assert_eq!(parse_pgm(&bytes).unwrap(), m);

        // 127 is outside, 128 is inside
        let mut bytes = b"P5\n2 1\n255\n".to_vec();
        bytes.push(127);
        bytes.push(128);
        let m = parse_pgm(&bytes).unwrap();
        assert_eq!(m.bits(), &[false, true]);
    }

    #[test]
    fn pgm_comments_and_bad_maxval() {
        let mut bytes = b"P5\n# a comment\n1 1\n255\n".to_vec();
        bytes.push(255);
        assert_eq!(parse_pgm(&bytes).unwrap().popcount(), 1);

        let bytes = b"P5\n1 1\n65535\n".to_vec();
        assert!(matches!(parse_pgm(&bytes), Err(Error::Format { .. })));
    }

    #[test]
    fn file_roundtrip() {
        let dir = tempfile::tempdir().unwrap();
        let d = DepthMap::from_fn(5, 4, |u, v| (u * 7 + v) as f64 * 0.125).unwrap();
        let dp = dir.path().join("d.pfm");
        write_depth(&d, &dp).unwrap();
        assert_eq!(read_depth(&dp).unwrap(), d);

        let m = Mask::from_fn(5, 4, |u, v| u >= v);
        let mp = dir.path().join("m.pgm");
        write_mask(&m, &mp).unwrap();
        assert_eq!(read_mask(&mp).unwrap(), m);
    }

    #[test]
    fn ply_layout() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("cloud.ply");
        write_ply(&[[1.0, -2.0, 3.0], [0.5, 0.0, 1.0]], &p).unwrap();
        let text = std::fs::read_to_string(&p).unwrap();
        assert!(text.starts_with("ply\nformat ascii 1.0\nelement vertex 2\n"));
        assert!(text.contains("property float x"));
        assert!(text.ends_with("end_header\n1 -2 3\n0.5 0 1\n"));
    }
}
