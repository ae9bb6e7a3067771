//! Relative poses, plane-sweep warping and the epipolar depth step.

use nalgebra::{Matrix3, Point2, Vector2, Vector3};

use crate::error::{Error, Result};
use crate::ingest::CameraParams;

/// Below this epipolar speed (pixels per scene unit) a pair has no parallax.
pub const MIN_EPIPOLAR_SPEED: f64 = 1e-12;

/// Rigid transform taking reference-camera coordinates to source-camera
/// coordinates.
#[derive(Clone, Debug, PartialEq)]
pub struct RelativePose {
    pub rotation: Matrix3<f64>,
    pub translation: Vector3<f64>,
}

impl RelativePose {
    pub fn identity() -> Self {
        Self {
            rotation: Matrix3::identity(),
            translation: Vector3::zeros(),
        }
    }

    pub fn apply(&self, x: &Vector3<f64>) -> Vector3<f64> {
        self.rotation * x + self.translation
    }

    /// `next ∘ self`: first `self`, then `next`.
    pub fn then(&self, next: &RelativePose) -> RelativePose {
        RelativePose {
            rotation: next.rotation * self.rotation,
            translation: next.rotation * self.translation + next.translation,
        }
    }

    pub fn inverse(&self) -> RelativePose {
        let rt = self.rotation.transpose();
        RelativePose {
            rotation: rt,
            translation: -(rt * self.translation),
        }
    }
}

pub fn relative_pose(reference: &CameraParams, source: &CameraParams) -> RelativePose {
    let rotation = source.rotation() * reference.rotation().transpose();
    let translation = source.translation() - rotation * reference.translation();
    RelativePose {
        rotation,
        translation,
    }
}

/// Precomputed plane-sweep warp from a reference view into one source view.
///
/// For a reference pixel `p` at depth `d` the homogeneous source pixel is
/// `h(d) = d·(K_s R K_r⁻¹ p̃) + K_s t`, which is affine in `d`.
#[derive(Clone, Debug)]
pub struct ViewWarp {
    rotation_part: Matrix3<f64>,
    translation_part: Vector3<f64>,
}

impl ViewWarp {
    pub fn new(reference: &CameraParams, source: &CameraParams) -> Self {
        let rel = relative_pose(reference, source);
        Self {
            rotation_part: source.intrinsics() * rel.rotation * reference.intrinsics_inv(),
            translation_part: source.intrinsics() * rel.translation,
        }
    }

    #[inline]
    fn direction(&self, p: &Point2<f64>) -> Vector3<f64> {
        self.rotation_part * Vector3::new(p.x, p.y, 1.0)
    }

    /// Source pixel of `p` at depth `d`, or `None` if the point lies behind
    /// the source camera.
    #[inline]
    pub fn warp(&self, p: &Point2<f64>, d: f64) -> Option<Point2<f64>> {
        let h = self.direction(p) * d + self.translation_part;
        if h.z <= 0.0 {
            return None;
        }
        Some(Point2::new(h.x / h.z, h.y / h.z))
    }

    /// Image of `p` under the infinite homography (pure rotation).
    pub fn warp_at_infinity(&self, p: &Point2<f64>) -> Option<Point2<f64>> {
        let m = self.direction(p);
        if m.z <= 0.0 {
            return None;
        }
        Some(Point2::new(m.x / m.z, m.y / m.z))
    }

    /// Derivative of the warped pixel with respect to depth.
    pub fn jacobian(&self, p: &Point2<f64>, d: f64) -> Option<Vector2<f64>> {
        let m = self.direction(p);
        let n = self.translation_part;
        let hz = d * m.z + n.z;
        if hz <= 0.0 {
            return None;
        }
        let inv = 1.0 / (hz * hz);
        Some(Vector2::new(
            (m.x * n.z - n.x * m.z) * inv,
            (m.y * n.z - n.y * m.z) * inv,
        ))
    }

    /// Depth change that moves the warped pixel by one pixel along the
    /// epipolar line, from the analytic Jacobian.
    pub fn depth_per_pixel(&self, p: &Point2<f64>, d: f64) -> Result<f64> {
        if !(d > 0.0) {
            return Err(Error::InvalidArgument(format!("depth must be positive, got {d}")));
        }
        let j = self
            .jacobian(p, d)
            .ok_or_else(|| Error::InvalidArgument("warped point lies behind the source camera".into()))?;
        let speed = j.norm();
        if speed < MIN_EPIPOLAR_SPEED {
            return Err(Error::NoParallax);
        }
        Ok(1.0 / speed)
    }
}

/// Warps reference pixel `p` (continuous coordinates) at depth `d` into the
/// source view. Out-of-bounds results are returned as-is; `None` means the
/// point is behind the source camera.
pub fn warp_pixel(
    p: Point2<f64>,
    d: f64,
    reference: &CameraParams,
    source: &CameraParams,
) -> Option<Point2<f64>> {
    ViewWarp::new(reference, source).warp(&p, d)
}

/// Depth delta per one-pixel epipolar displacement at `(p, d)`.
pub fn depth_per_pixel_step(
    p: Point2<f64>,
    d: f64,
    reference: &CameraParams,
    source: &CameraParams,
) -> Result<f64> {
    ViewWarp::new(reference, source).depth_per_pixel(&p, d)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ingest::DepthRange;
    use nalgebra::Rotation3;

    fn range() -> DepthRange {
        DepthRange::new(1.0, 1e10).unwrap()
    }

    fn cam(f: f64, rot: Matrix3<f64>, center: Vector3<f64>) -> CameraParams {
        CameraParams::look(f, (64.0, 48.0), rot, center, range()).unwrap()
    }

    fn rectified(f: f64, baseline: f64) -> (CameraParams, CameraParams) {
        (
            cam(f, Matrix3::identity(), Vector3::zeros()),
            cam(f, Matrix3::identity(), Vector3::new(baseline, 0.0, 0.0)),
        )
    }

    #[test]
    fn relative_pose_of_same_camera_is_identity() {
        let c = cam(
            100.0,
            Rotation3::from_euler_angles(0.3, 0.1, -0.2).into_inner(),
            Vector3::new(1.0, 2.0, 3.0),
        );
        let rel = relative_pose(&c, &c);
        assert!((rel.rotation - Matrix3::identity()).abs().max() < 1e-12);
        assert!(rel.translation.norm() < 1e-12);
    }

    #[test]
    fn x_baseline_gives_negative_translation() {
        let (a, b) = rectified(100.0, 2.5);
        let rel = relative_pose(&a, &b);
        assert!((rel.translation - Vector3::new(-2.5, 0.0, 0.0)).norm() < 1e-12);
    }

    #[test]
    fn relative_poses_compose() {
        let a = cam(
            100.0,
            Rotation3::from_euler_angles(0.1, 0.2, 0.3).into_inner(),
            Vector3::new(0.0, 1.0, 0.0),
        );
        let b = cam(
            100.0,
            Rotation3::from_euler_angles(-0.2, 0.0, 0.1).into_inner(),
            Vector3::new(2.0, 0.0, 1.0),
        );
        let c = cam(
            100.0,
            Rotation3::from_euler_angles(0.0, -0.3, 0.05).into_inner(),
            Vector3::new(-1.0, 0.5, 0.0),
        );
        let ab = relative_pose(&a, &b);
        let bc = relative_pose(&b, &c);
        let ac = relative_pose(&a, &c);
        let composed = ab.then(&bc);
        assert!((composed.rotation - ac.rotation).abs().max() < 1e-9);
        assert!((composed.translation - ac.translation).norm() < 1e-9);
        let round = ab.then(&ab.inverse());
        assert!((round.rotation - Matrix3::identity()).abs().max() < 1e-9);
        assert!(round.translation.norm() < 1e-9);
    }

    #[test]
    fn identical_cameras_warp_is_identity() {
        let c = cam(
            120.0,
            Rotation3::from_euler_angles(0.1, 0.2, 0.0).into_inner(),
            Vector3::new(3.0, 0.0, 1.0),
        );
        for d in [1.5, 10.0, 700.0] {
            let p = Point2::new(13.25, 40.75);
            let q = warp_pixel(p, d, &c, &c).unwrap();
            assert!((q - p).norm() < 1e-9);
        }
    }

    #[test]
    fn rectified_disparity_is_fb_over_d() {
        let (a, b) = rectified(100.0, 1.0);
        let p = Point2::new(64.0, 48.0);
        let q = warp_pixel(p, 10.0, &a, &b).unwrap();
        assert!((p.x - q.x - 10.0).abs() < 1e-12);
        assert!((q.y - p.y).abs() < 1e-12);
    }

    #[test]
    fn far_depth_approaches_infinite_homography() {
        let a = cam(100.0, Matrix3::identity(), Vector3::zeros());
        let b = cam(
            100.0,
            Rotation3::from_euler_angles(0.05, -0.1, 0.02).into_inner(),
            Vector3::new(1.0, 0.2, 0.0),
        );
        let w = ViewWarp::new(&a, &b);
        let p = Point2::new(30.0, 20.0);
        let far = w.warp(&p, 1e9).unwrap();
        let inf = w.warp_at_infinity(&p).unwrap();
        assert!((far - inf).norm() < 1e-4);
    }

    #[test]
    fn behind_source_is_flagged() {
        let a = cam(100.0, Matrix3::identity(), Vector3::zeros());
        let b = cam(100.0, Matrix3::identity(), Vector3::new(0.0, 0.0, 20.0));
        assert!(warp_pixel(Point2::new(64.0, 48.0), 10.0, &a, &b).is_none());
    }

    #[test]
    fn rectified_depth_step_matches_closed_form() {
        let (a, b) = rectified(100.0, 1.0);
        let step = depth_per_pixel_step(Point2::new(64.0, 48.0), 10.0, &a, &b).unwrap();
        // d²/(fB) per pixel, so half a pixel is 0.5.
        assert!((0.5 * step - 0.5).abs() < 1e-12);
        let off_axis = depth_per_pixel_step(Point2::new(3.0, 90.0), 10.0, &a, &b).unwrap();
        assert!((off_axis - 1.0).abs() < 1e-12);
    }

    #[test]
    fn zero_baseline_has_no_parallax() {
        let (a, _) = rectified(100.0, 1.0);
        assert!(matches!(
            depth_per_pixel_step(Point2::new(10.0, 10.0), 5.0, &a, &a),
            Err(Error::NoParallax)
        ));
        let spun = cam(
            100.0,
            Rotation3::from_euler_angles(0.0, 0.2, 0.0).into_inner(),
            Vector3::zeros(),
        );
        assert!(matches!(
            depth_per_pixel_step(Point2::new(10.0, 10.0), 5.0, &a, &spun),
            Err(Error::NoParallax)
        ));
    }

    #[test]
    fn jacobian_matches_central_difference() {
        let a = cam(150.0, Matrix3::identity(), Vector3::zeros());
        let b = cam(
            150.0,
            Rotation3::from_euler_angles(0.02, -0.15, 0.01).into_inner(),
            Vector3::new(80.0, -10.0, 5.0),
        );
        let w = ViewWarp::new(&a, &b);
        for (px, d) in [
            ((20.0, 30.0), 500.0),
            ((100.0, 80.0), 700.0),
            ((64.0, 10.0), 450.0),
        ] {
            let p = Point2::new(px.0, px.1);
            let h = 1e-4 * d;
            let fd = (w.warp(&p, d + h).unwrap() - w.warp(&p, d - h).unwrap()) / (2.0 * h);
            let j = w.jacobian(&p, d).unwrap();
            assert!((fd - j).norm() / j.norm() < 1e-5);
        }
    }
}
