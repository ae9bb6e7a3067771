use nalgebra::{Point2, Vector3};

use crate::error::{Error, Result};
use crate::ingest::{CameraParams, DepthMap};

use super::cloud::FusionView;

/// Per-pixel outcome of the round-trip test for one reference view.
#[derive(Clone, Debug, PartialEq)]
pub struct Consistency {
    /// Number of source views that agree with the reference estimate.
    pub support: Vec<u16>,
    /// Mean of the reference depth and every agreeing reprojected depth;
    /// zero where the reference has no estimate.
    pub fused_depth: DepthMap,
}

/// Whether world point `x` projects in front of `camera` inside the area
/// covered by bilinear sampling of a `width`×`height` map, i.e. pixel
/// coordinates in `[0.5, width − 0.5] × [0.5, height − 0.5]`.
pub fn lands_in_grid(camera: &CameraParams, width: usize, height: usize, x: &Vector3<f64>) -> bool {
    match camera.project(x) {
        Some((q, _)) => q.x >= 0.5 && q.y >= 0.5 && q.x <= width as f64 - 0.5 && q.y <= height as f64 - 0.5,
        None => false,
    }
}

/// Reprojected depth of `(p, d)` through `source`, if the round trip stays
/// within the tolerances.
fn round_trip(
    reference: &CameraParams,
    source: &FusionView,
    p: &Point2<f64>,
    d: f64,
    tau_px: f64,
    tau_rel: f64,
) -> Option<f64> {
    let x = reference.backproject(p, d);
    let (q, _) = source.camera.project(&x)?;
    let ds = source.depth.sample_positive(q.x, q.y)?;
    let xs = source.camera.backproject(&q, ds);
    let (back, d_back) = reference.project(&xs)?;
    let px_err = (back - p).norm();
    let rel_err = (d_back - d).abs() / d;
    (px_err < tau_px && rel_err < tau_rel).then_some(d_back)
}

/// Round-trip reprojection test of every pixel of view `reference` against
/// every other view.
pub fn consistency_check(
    reference: usize,
    views: &[FusionView],
    tau_px: f64,
    tau_rel: f64,
) -> Result<Consistency> {
    if !(tau_px > 0.0 && tau_rel > 0.0) {
        return Err(Error::InvalidArgument(format!(
            "thresholds must be positive, got tau_px={tau_px}, tau_rel={tau_rel}"
        )));
    }
    let rv = views
        .get(reference)
        .ok_or_else(|| Error::InvalidArgument(format!("no view {reference}")))?;
    let (w, h) = (rv.depth.width(), rv.depth.height());
    let mut support = vec![0u16; w * h];
    let mut fused = vec![0.0; w * h];
    let ys: Vec<usize> = (0..h).collect();
    let rows: Vec<(Vec<u16>, Vec<f64>)> = crate::par::map_collect(&ys, |&y| {
        let mut s = vec![0u16; w];
        let mut f = vec![0.0; w];
        for x in 0..w {
            let d = rv.depth.get(x, y);
            if !(d > 0.0) {
                continue;
            }
            let p = Point2::new(x as f64 + 0.5, y as f64 + 0.5);
            let mut sum = d;
            let mut n = 1u16;
            for (k, src) in views.iter().enumerate() {
                if k == reference {
                    continue;
                }
                if let Some(db) = round_trip(&rv.camera, src, &p, d, tau_px, tau_rel) {
                    sum += db;
                    n += 1;
                }
            }
            s[x] = n - 1;
            f[x] = sum / n as f64;
        }
        (s, f)
    });
    for (y, (s, f)) in rows.into_iter().enumerate() {
        support[y * w..(y + 1) * w].copy_from_slice(&s);
        fused[y * w..(y + 1) * w].copy_from_slice(&f);
    }
    Ok(Consistency {
        support,
        fused_depth: DepthMap::new(w, h, fused)?,
    })
}
