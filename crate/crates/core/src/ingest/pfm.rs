//! Portable float map: `Pf` (gray) or `PF` (RGB) header, dimensions, and a
//! scale whose sign selects the byte order (negative = little endian). Rows
//! are stored bottom-to-top.

use std::path::Path;

use super::image::Image;
use crate::error::{Error, Result};

pub fn read_pfm(path: impl AsRef<Path>) -> Result<Image> {
    let path = path.as_ref();
    let bytes = std::fs::read(path).map_err(|e| Error::io(path, e))?;
    decode_pfm(&bytes)
}

/// Writes little-endian (scale -1.0).
pub fn write_pfm(img: &Image, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    std::fs::write(path, encode_pfm(img)).map_err(|e| Error::io(path, e))
}

pub fn encode_pfm(img: &Image) -> Vec<u8> {
    let magic = if img.channels() == 1 { "Pf" } else { "PF" };
    let mut out = format!("{magic}\n{} {}\n-1.0\n", img.width(), img.height()).into_bytes();
    let row_len = img.width() * img.channels();
    out.reserve(img.data().len() * 4);
    for row in img.data().chunks_exact(row_len.max(1)).rev() {
        for v in row {
            out.extend_from_slice(&v.to_le_bytes());
        }
    }
    out
}

fn header_err(reason: impl Into<String>) -> Error {
    Error::Header {
        format: "PFM",
        reason: reason.into(),
    }
}

/// Splits the next whitespace-delimited token, returning it and the offset
/// just past the single whitespace byte that terminates it.
fn next_token(bytes: &[u8], mut pos: usize) -> Result<(&str, usize)> {
    while pos < bytes.len() && bytes[pos].is_ascii_whitespace() {
        pos += 1;
    }
    let start = pos;
    while pos < bytes.len() && !bytes[pos].is_ascii_whitespace() {
        pos += 1;
    }
    if start == pos || pos >= bytes.len() {
        return Err(header_err("unexpected end of header"));
    }
    let tok = std::str::from_utf8(&bytes[start..pos]).map_err(|_| header_err("non-ASCII header"))?;
    Ok((tok, pos + 1))
}

pub fn decode_pfm(bytes: &[u8]) -> Result<Image> {
    let (magic, pos) = next_token(bytes, 0)?;
    let channels = match magic {
        "Pf" => 1,
        "PF" => 3,
        other => return Err(header_err(format!("bad magic {other:?}"))),
    };
    let (w, pos) = next_token(bytes, pos)?;
    let (h, pos) = next_token(bytes, pos)?;
    let (scale, pos) = next_token(bytes, pos)?;
    let width: usize = w.parse().map_err(|_| header_err(format!("bad width {w:?}")))?;
    let height: usize = h.parse().map_err(|_| header_err(format!("bad height {h:?}")))?;
    let scale: f64 = scale
        .parse()
        .map_err(|_| header_err(format!("bad scale {scale:?}")))?;
    if width == 0 || height == 0 {
        return Err(header_err("zero dimension"));
    }
    if scale == 0.0 || !scale.is_finite() {
        return Err(header_err("scale must be finite and non-zero"));
    }
    let little_endian = scale < 0.0;
    let count = width * height * channels;
    let payload = &bytes[pos..];
    if payload.len() < count * 4 {
        return Err(Error::Truncated {
            expected: count * 4,
            found: payload.len(),
        });
    }
    let row_len = width * channels;
    let mut data = vec![0f32; count];
    for (i, chunk) in payload[..count * 4].chunks_exact(4).enumerate() {
        let raw = [chunk[0], chunk[1], chunk[2], chunk[3]];
        let v = if little_endian {
            f32::from_le_bytes(raw)
        } else {
            f32::from_be_bytes(raw)
        };
        let (file_row, col) = (i / row_len, i % row_len);
        let row = height - 1 - file_row;
        let dst = row * row_len + col;
        if !v.is_finite() {
            return Err(Error::NonFinite(dst));
        }
        data[dst] = v;
    }
    Image::new(width, height, channels, data)
}
