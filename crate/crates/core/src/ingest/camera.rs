//! Pinhole cameras.
//!
//! Pixel coordinates are continuous with the origin at the top-left corner of
//! the image, so the center of sample `(col, row)` is `(col + 0.5, row + 0.5)`.
//! With this convention halving an image by 2×2 averaging halves every
//! intrinsic parameter exactly.

use std::fmt::Write as _;
use std::path::Path;

use nalgebra::{Matrix3, Point2, Vector3};

use crate::error::{Error, Result};

/// Rotation orthonormality tolerance applied when validating cameras.
pub const ROTATION_TOLERANCE: f64 = 1e-6;

/// DTU cameras with a two-number depth line describe 192 planes.
const DTU_DEFAULT_PLANES: f64 = 192.0;

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct DepthRange {
    pub min: f64,
    pub max: f64,
}

impl DepthRange {
    pub fn new(min: f64, max: f64) -> Result<Self> {
        if !(min > 0.0 && max > min && max.is_finite()) {
            return Err(Error::Camera(format!(
                "depth range must satisfy 0 < min < max, got [{min}, {max}]"
            )));
        }
        Ok(Self { min, max })
    }

    pub fn width(&self) -> f64 {
        self.max - self.min
    }

    pub fn clamp(&self, d: f64) -> f64 {
        d.clamp(self.min, self.max)
    }

    pub fn contains(&self, d: f64) -> bool {
        d >= self.min && d <= self.max
    }
}

/// Intrinsics, world-to-camera pose and scene depth range of one view.
#[derive(Clone, Debug, PartialEq)]
pub struct CameraParams {
    intrinsics: Matrix3<f64>,
    intrinsics_inv: Matrix3<f64>,
    rotation: Matrix3<f64>,
    translation: Vector3<f64>,
    range: DepthRange,
}

impl CameraParams {
    pub fn new(
        intrinsics: Matrix3<f64>,
        rotation: Matrix3<f64>,
        translation: Vector3<f64>,
        depth_min: f64,
        depth_max: f64,
    ) -> Result<Self> {
        let k = &intrinsics;
        if k.iter().any(|v| !v.is_finite())
            || rotation.iter().any(|v| !v.is_finite())
            || translation.iter().any(|v| !v.is_finite())
        {
            return Err(Error::Camera("non-finite entry".into()));
        }
        if k[(1, 0)] != 0.0 || k[(2, 0)] != 0.0 || k[(2, 1)] != 0.0 {
            return Err(Error::Camera("intrinsics must be upper triangular".into()));
        }
        if !(k[(0, 0)] > 0.0 && k[(1, 1)] > 0.0 && k[(2, 2)] > 0.0) {
            return Err(Error::Camera("intrinsics must have a positive diagonal".into()));
        }
        let gram_err = (rotation.transpose() * rotation - Matrix3::identity())
            .abs()
            .max();
        if gram_err > ROTATION_TOLERANCE {
            return Err(Error::Camera(format!(
                "rotation is not orthonormal (|RᵀR - I| = {gram_err:.3e})"
            )));
        }
        let det = rotation.determinant();
        if (det - 1.0).abs() > ROTATION_TOLERANCE {
            return Err(Error::Camera(format!(
                "rotation determinant is {det}, expected +1"
            )));
        }
        let range = DepthRange::new(depth_min, depth_max)?;
        let intrinsics_inv = intrinsics
            .try_inverse()
            .ok_or_else(|| Error::Camera("singular intrinsics".into()))?;
        Ok(Self {
            intrinsics,
            intrinsics_inv,
            rotation,
            translation,
            range,
        })
    }

    /// Camera with `K = [f 0 cx; 0 f cy; 0 0 1]` placed at `center` in world
    /// coordinates and rotated by `rotation` (world-to-camera).
    pub fn look(
        focal: f64,
        principal: (f64, f64),
        rotation: Matrix3<f64>,
        center: Vector3<f64>,
        range: DepthRange,
    ) -> Result<Self> {
        let k = Matrix3::new(focal, 0.0, principal.0, 0.0, focal, principal.1, 0.0, 0.0, 1.0);
        let t = -(rotation * center);
        Self::new(k, rotation, t, range.min, range.max)
    }

    pub fn intrinsics(&self) -> &Matrix3<f64> {
        &self.intrinsics
    }

    pub fn intrinsics_inv(&self) -> &Matrix3<f64> {
        &self.intrinsics_inv
    }

    pub fn rotation(&self) -> &Matrix3<f64> {
        &self.rotation
    }

    pub fn translation(&self) -> &Vector3<f64> {
        &self.translation
    }

    pub fn depth_min(&self) -> f64 {
        self.range.min
    }

    pub fn depth_max(&self) -> f64 {
        self.range.max
    }

    pub fn depth_range(&self) -> DepthRange {
        self.range
    }

    pub fn focal(&self) -> (f64, f64) {
        (self.intrinsics[(0, 0)], self.intrinsics[(1, 1)])
    }

    /// Optical center in world coordinates.
    pub fn center(&self) -> Vector3<f64> {
        -(self.rotation.transpose() * self.translation)
    }

    pub fn world_to_camera(&self, x: &Vector3<f64>) -> Vector3<f64> {
        self.rotation * x + self.translation
    }

    /// Projects a world point; `None` when it is not in front of the camera.
    /// The second value is the point's depth (camera z).
    pub fn project(&self, x: &Vector3<f64>) -> Option<(Point2<f64>, f64)> {
        let h = self.intrinsics * self.world_to_camera(x);
        if h.z <= 0.0 {
            return None;
        }
        Some((Point2::new(h.x / h.z, h.y / h.z), h.z))
    }

    /// Ray direction (camera frame) with unit z through pixel `p`.
    pub fn ray(&self, p: &Point2<f64>) -> Vector3<f64> {
        self.intrinsics_inv * Vector3::new(p.x, p.y, 1.0)
    }

    /// World point seen at pixel `p` with depth `d`.
    pub fn backproject(&self, p: &Point2<f64>, d: f64) -> Vector3<f64> {
        self.rotation.transpose() * (self.ray(p) * d - self.translation)
    }

    /// Same pose and range with focal lengths, skew and principal point scaled
    /// by `factor`.
    pub fn scaled(&self, factor: f64) -> CameraParams {
        let mut k = self.intrinsics;
        for c in 0..3 {
            k[(0, c)] *= factor;
            k[(1, c)] *= factor;
        }
        CameraParams::new(k, self.rotation, self.translation, self.range.min, self.range.max)
            .expect("scaling a valid camera keeps it valid")
    }

    pub fn with_depth_range(&self, range: DepthRange) -> CameraParams {
        CameraParams {
            range,
            ..self.clone()
        }
    }
}

fn parse_numbers(tokens: &[&str], what: &str) -> Result<Vec<f64>> {
    tokens
        .iter()
        .map(|t| {
            t.parse::<f64>()
                .map_err(|_| Error::Camera(format!("bad number {t:?} in {what}")))
        })
        .collect()
}

/// Parses the DTU `cam.txt` layout:
///
/// ```text
/// extrinsic
/// r11 r12 r13 t1
/// r21 r22 r23 t2
/// r31 r32 r33 t3
/// 0 0 0 1
///
/// intrinsic
/// fx 0 cx
/// 0 fy cy
/// 0 0 1
///
/// depth_min interval [num_planes [depth_max]]
/// ```
///
/// With four depth numbers the last one is the maximum. With three the
/// maximum is `depth_min + interval * (num_planes - 1)`, with two it assumes
/// 192 planes.
pub fn parse_camera_dtu(text: &str) -> Result<CameraParams> {
    let tokens: Vec<&str> = text.split_whitespace().collect();
    let ext = tokens
        .iter()
        .position(|&t| t.eq_ignore_ascii_case("extrinsic"))
        .ok_or_else(|| Error::Camera("missing 'extrinsic' block".into()))?;
    let int = tokens
        .iter()
        .position(|&t| t.eq_ignore_ascii_case("intrinsic"))
        .ok_or_else(|| Error::Camera("missing 'intrinsic' block".into()))?;
    if int != ext + 17 || tokens.len() < int + 10 {
        return Err(Error::Camera(
            "expected 16 extrinsic and 9 intrinsic numbers".into(),
        ));
    }
    let e = parse_numbers(&tokens[ext + 1..ext + 17], "extrinsic")?;
    let k = parse_numbers(&tokens[int + 1..int + 10], "intrinsic")?;
    let depth = parse_numbers(&tokens[int + 10..], "depth line")?;

    let rotation = Matrix3::new(e[0], e[1], e[2], e[4], e[5], e[6], e[8], e[9], e[10]);
    let translation = Vector3::new(e[3], e[7], e[11]);
    let intrinsics = Matrix3::from_row_slice(&k);

    let (depth_min, depth_max) = match depth.as_slice() {
        [min, interval] => (*min, min + interval * (DTU_DEFAULT_PLANES - 1.0)),
        [min, interval, planes] => (*min, min + interval * (planes - 1.0)),
        [min, _, _, max] => (*min, *max),
        _ => {
            return Err(Error::Camera(format!(
                "depth line needs 2 to 4 numbers, got {}",
                depth.len()
            )))
        }
    };
    if depth_min <= 0.0 || depth_max <= depth_min {
        return Err(Error::Camera(format!(
            "non-positive depth range [{depth_min}, {depth_max}]"
        )));
    }
    CameraParams::new(intrinsics, rotation, translation, depth_min, depth_max)
}

pub fn read_camera_dtu(path: impl AsRef<Path>) -> Result<CameraParams> {
    let path = path.as_ref();
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    parse_camera_dtu(&text)
}

/// Formats a camera in the DTU layout with a four-number depth line. Values
/// use shortest round-trip formatting, so parsing the output is exact.
pub fn format_camera_dtu(cam: &CameraParams) -> String {
    let r = cam.rotation();
    let t = cam.translation();
    let k = cam.intrinsics();
    let mut s = String::from("extrinsic\n");
    for i in 0..3 {
        let _ = writeln!(s, "{} {} {} {}", r[(i, 0)], r[(i, 1)], r[(i, 2)], t[i]);
    }
    s.push_str("0 0 0 1\n\nintrinsic\n");
    for i in 0..3 {
        let _ = writeln!(s, "{} {} {}", k[(i, 0)], k[(i, 1)], k[(i, 2)]);
    }
    let interval = cam.depth_range().width() / (DTU_DEFAULT_PLANES - 1.0);
    let _ = writeln!(
        s,
        "\n{} {} {} {}",
        cam.depth_min(),
        interval,
        DTU_DEFAULT_PLANES,
        cam.depth_max()
    );
    s
}

pub fn write_camera_dtu(cam: &CameraParams, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    std::fs::write(path, format_camera_dtu(cam)).map_err(|e| Error::io(path, e))
}

#[cfg(test)]
mod tests {
    use super::*;

    const IDENTITY_CAM: &str = "extrinsic
1 0 0 0
0 1 0 0
0 0 1 0
0 0 0 1

intrinsic
361.54 0 82.9
0 360.39 66.38
0 0 1

425 2.5 257 1065
";

    #[test]
    fn identity_extrinsic_parses_with_zero_translation() {
        let cam = parse_camera_dtu(IDENTITY_CAM).unwrap();
        assert_eq!(*cam.rotation(), Matrix3::identity());
        assert_eq!(*cam.translation(), Vector3::zeros());
        assert_eq!(cam.intrinsics()[(0, 2)], 82.9);
        assert_eq!(cam.depth_min(), 425.0);
        assert_eq!(cam.depth_max(), 1065.0);
    }

    #[test]
    fn short_depth_lines_follow_plane_count() {
        let two = IDENTITY_CAM.replace("425 2.5 257 1065", "425 2.5");
        let cam = parse_camera_dtu(&two).unwrap();
        assert!((cam.depth_max() - (425.0 + 2.5 * 191.0)).abs() < 1e-12);
        let three = IDENTITY_CAM.replace("425 2.5 257 1065", "425 2.5 257");
        let cam = parse_camera_dtu(&three).unwrap();
        assert!((cam.depth_max() - 1065.0).abs() < 1e-12);
    }

    #[test]
    fn non_orthonormal_rotation_is_rejected() {
        let bad = IDENTITY_CAM.replace("1 0 0 0\n0 1", "1.1 0 0 0\n0 1");
        assert!(matches!(parse_camera_dtu(&bad), Err(Error::Camera(_))));
    }

    #[test]
    fn reflection_is_rejected() {
        let bad = IDENTITY_CAM.replace("0 0 1 0\n0 0 0 1", "0 0 -1 0\n0 0 0 1");
        assert!(parse_camera_dtu(&bad).is_err());
    }

    #[test]
    fn non_positive_depth_is_rejected() {
        let bad = IDENTITY_CAM.replace("425 2.5 257 1065", "-5 2.5");
        assert!(parse_camera_dtu(&bad).is_err());
        let bad = IDENTITY_CAM.replace("425 2.5 257 1065", "425 -2.5");
        assert!(parse_camera_dtu(&bad).is_err());
    }

    #[test]
    fn missing_blocks_are_rejected() {
        assert!(parse_camera_dtu("intrinsic 1 0 0 0 1 0 0 0 1 1 2").is_err());
        assert!(parse_camera_dtu(&IDENTITY_CAM.replace("intrinsic", "intr")).is_err());
    }

    #[test]
    fn project_backproject_round_trip() {
        let rot = nalgebra::Rotation3::from_euler_angles(0.1, -0.2, 0.05).into_inner();
        let range = DepthRange::new(1.0, 100.0).unwrap();
        let cam = CameraParams::look(200.0, (64.0, 48.0), rot, Vector3::new(1.0, 2.0, -3.0), range).unwrap();
        let p = Point2::new(10.25, 70.5);
        let x = cam.backproject(&p, 17.0);
        let (q, z) = cam.project(&x).unwrap();
        assert!((q - p).norm() < 1e-9);
        assert!((z - 17.0).abs() < 1e-9);
        assert!((cam.center() - Vector3::new(1.0, 2.0, -3.0)).norm() < 1e-12);
    }
}
