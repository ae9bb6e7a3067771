use std::collections::HashMap;

use nalgebra::{Point2, Vector3};

use crate::error::{Error, Result};
use crate::ingest::{CameraParams, DepthMap, FusionParams, Image};

use super::consistency::consistency_check;

/// One input view: its depth map (non-positive = no estimate), camera and
/// optional color image of the same size.
#[derive(Clone, Debug)]
pub struct FusionView {
    pub depth: DepthMap,
    pub camera: CameraParams,
    pub image: Option<Image>,
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct FusedPoint {
    pub position: Vector3<f64>,
    pub color: [u8; 3],
    /// Number of agreeing source views, summed over merged duplicates.
    pub support: u32,
}

#[derive(Clone, Debug, Default, PartialEq)]
pub struct FusedPointCloud {
    pub points: Vec<FusedPoint>,
}

impl FusedPointCloud {
    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn positions(&self) -> Vec<Vector3<f64>> {
        self.points.iter().map(|p| p.position).collect()
    }
}

const NO_COLOR: [u8; 3] = [200, 200, 200];

/// Checks every view against the others and back-projects each pixel with at
/// least `min_support` agreeing sources at its fused depth.
///
/// Duplicates are then merged on a voxel grid: edge `params.voxel_size`, or
/// half of `finest_spacing` when unset; zero disables merging.
pub fn fuse(
    views: &[FusionView],
    params: &FusionParams,
    finest_spacing: Option<f64>,
) -> Result<FusedPointCloud> {
    if params.min_support < 1 {
        return Err(Error::InvalidArgument("min_support must be at least 1".into()));
    }
    if views.len() < 2 {
        return Err(Error::InvalidArgument(format!(
            "fusion needs at least 2 views, got {}",
            views.len()
        )));
    }
    for v in views {
        if let Some(img) = &v.image {
            if img.width() != v.depth.width() || img.height() != v.depth.height() {
                return Err(Error::Dimensions(
                    "color image and depth map differ in size".into(),
                ));
            }
        }
    }
    let mut points = Vec::new();
    for (r, view) in views.iter().enumerate() {
        let c = consistency_check(r, views, params.tau_px, params.tau_rel)?;
        let w = view.depth.width();
        for (i, s) in c.support.iter().enumerate() {
            if (*s as usize) < params.min_support {
                continue;
            }
            let (x, y) = (i % w, i / w);
            let p = Point2::new(x as f64 + 0.5, y as f64 + 0.5);
            let position = view.camera.backproject(&p, c.fused_depth.get(x, y));
            let color = view.image.as_ref().map_or(NO_COLOR, |img| img.rgb8(x, y));
            points.push(FusedPoint {
                position,
                color,
                support: *s as u32,
            });
        }
    }
    let voxel = params
        .voxel_size
        .or(finest_spacing.map(|s| 0.5 * s))
        .unwrap_or(0.0);
    let cloud = dedup(&FusedPointCloud { points }, voxel);
    if cloud.is_empty() {
        log::warn!("fusion produced an empty cloud");
    }
    Ok(cloud)
}

/// Voxel-hash duplicate suppression in point order: the first point in a
/// voxel keeps its position, the last one's color wins, supports are summed.
/// A non-positive `voxel` returns the cloud unchanged.
pub fn dedup(cloud: &FusedPointCloud, voxel: f64) -> FusedPointCloud {
    if !(voxel > 0.0) {
        return cloud.clone();
    }
    let mut index: HashMap<[i64; 3], usize> = HashMap::new();
    let mut out: Vec<FusedPoint> = Vec::new();
    for p in &cloud.points {
        let key = [0, 1, 2].map(|k| (p.position[k] / voxel).floor() as i64);
        match index.get(&key) {
            Some(&j) => {
                out[j].color = p.color;
                out[j].support += p.support;
            }
            None => {
                index.insert(key, out.len());
                out.push(*p);
            }
        }
    }
    FusedPointCloud { points: out }
}
