use std::path::Path;

use nalgebra::Vector3;

use crate::error::{Error, Result};

use super::cloud::{FusedPoint, FusedPointCloud};

const VERTEX_BYTES: usize = 15;

fn header(count: usize) -> String {
    format!(
        "ply\nformat binary_little_endian 1.0\nelement vertex {count}\n\
         property float x\nproperty float y\nproperty float z\n\
         property uchar red\nproperty uchar green\nproperty uchar blue\nend_header\n"
    )
}

/// Binary little-endian PLY with float32 positions and uint8 colors.
/// Support counts are not stored.
pub fn encode_ply(cloud: &FusedPointCloud) -> Vec<u8> {
    let head = header(cloud.len());
    let mut out = Vec::with_capacity(head.len() + cloud.len() * VERTEX_BYTES);
    out.extend_from_slice(head.as_bytes());
    for p in &cloud.points {
        for k in 0..3 {
            out.extend_from_slice(&(p.position[k] as f32).to_le_bytes());
        }
        out.extend_from_slice(&p.color);
    }
    out
}

fn header_err(reason: impl Into<String>) -> Error {
    Error::Header {
        format: "PLY",
        reason: reason.into(),
    }
}

/// Parses the layout written by [`encode_ply`]. Read points have support 0.
pub fn decode_ply(bytes: &[u8]) -> Result<FusedPointCloud> {
    const END: &[u8] = b"end_header\n";
    let end = bytes
        .windows(END.len())
        .position(|w| w == END)
        .ok_or_else(|| header_err("missing end_header"))?;
    let text = std::str::from_utf8(&bytes[..end]).map_err(|_| header_err("header is not text"))?;
    let mut lines = text.lines();
    if lines.next() != Some("ply") {
        return Err(header_err("bad magic"));
    }
    let mut count = None;
    let mut props = Vec::new();
    for line in lines {
        let words: Vec<&str> = line.split_whitespace().collect();
        match words.as_slice() {
            ["format", "binary_little_endian", _] => {}
            ["format", other, ..] => return Err(header_err(format!("unsupported format {other}"))),
            ["comment", ..] | [] => {}
            ["element", "vertex", n] => {
                count = Some(n.parse::<usize>().map_err(|_| header_err("bad vertex count"))?);
            }
            ["element", other, ..] => return Err(header_err(format!("unsupported element {other}"))),
            ["property", ty, name] => props.push((ty.to_string(), name.to_string())),
            _ => return Err(header_err(format!("unexpected line {line:?}"))),
        }
    }
    let count = count.ok_or_else(|| header_err("no vertex element"))?;
    let expected = [
        ("float", "x"),
        ("float", "y"),
        ("float", "z"),
        ("uchar", "red"),
        ("uchar", "green"),
        ("uchar", "blue"),
    ];
    let normalize = |t: &str| match t {
        "float32" => "float".to_string(),
        "uint8" => "uchar".to_string(),
        t => t.to_string(),
    };
    let matches = props.len() == expected.len()
        && props
            .iter()
            .zip(expected)
            .all(|((t, n), (et, en))| normalize(t) == et && n == en);
    if !matches {
        return Err(header_err("expected float x y z and uchar red green blue"));
    }
    let body = &bytes[end + END.len()..];
    let need = count * VERTEX_BYTES;
    if body.len() < need {
        return Err(Error::Truncated {
            expected: need,
            found: body.len(),
        });
    }
    let mut points = Vec::with_capacity(count);
    for chunk in body[..need].chunks_exact(VERTEX_BYTES) {
        let f = |k: usize| f32::from_le_bytes(chunk[4 * k..4 * k + 4].try_into().expect("4 bytes")) as f64;
        let position = Vector3::new(f(0), f(1), f(2));
        if !position.iter().all(|v| v.is_finite()) {
            return Err(Error::NonFinite(points.len()));
        }
        points.push(FusedPoint {
            position,
            color: [chunk[12], chunk[13], chunk[14]],
            support: 0,
        });
    }
    Ok(FusedPointCloud { points })
}

pub fn write_ply(cloud: &FusedPointCloud, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    std::fs::write(path, encode_ply(cloud)).map_err(|e| Error::io(path, e))
}

pub fn read_ply(path: impl AsRef<Path>) -> Result<FusedPointCloud> {
    let path = path.as_ref();
    let bytes = std::fs::read(path).map_err(|e| Error::io(path, e))?;
    decode_ply(&bytes)
}
