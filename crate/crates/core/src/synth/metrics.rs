use std::collections::HashMap;

use nalgebra::Vector3;

use crate::error::{Error, Result};
use crate::ingest::DepthMap;
use crate::sampling::median_sorted;

/// Per-pixel depth error summary over pixels with ground truth.
#[derive(Clone, Debug, PartialEq)]
pub struct DepthStats {
    pub count: usize,
    pub mean_abs: f64,
    pub median_abs: f64,
    /// Fractions with `|err| ≤ k·spacing` for k = 1, 2, 4.
    pub within: [f64; 3],
}

/// Compares `dm` with `gt` on pixels where `gt > 0` and `mask` (if given)
/// is set.
pub fn eval_depth(dm: &DepthMap, gt: &DepthMap, spacing: f64, mask: Option<&[bool]>) -> Result<DepthStats> {
    if !dm.same_dims(gt) || mask.is_some_and(|m| m.len() != gt.len()) {
        return Err(Error::Dimensions(
            "depth map, ground truth and mask differ in size".into(),
        ));
    }
    if !(spacing > 0.0) {
        return Err(Error::InvalidArgument(format!(
            "spacing must be positive, got {spacing}"
        )));
    }
    let mut errs: Vec<f64> = (0..gt.len())
        .filter(|&i| gt.data()[i] > 0.0 && mask.is_none_or(|m| m[i]))
        .map(|i| (dm.data()[i] - gt.data()[i]).abs())
        .collect();
    if errs.is_empty() {
        return Err(Error::InvalidArgument("no pixels to evaluate".into()));
    }
    let n = errs.len() as f64;
    let within = [1.0, 2.0, 4.0].map(|k| errs.iter().filter(|e| **e <= k * spacing).count() as f64 / n);
    let mean_abs = errs.iter().sum::<f64>() / n;
    errs.sort_by(f64::total_cmp);
    Ok(DepthStats {
        count: errs.len(),
        mean_abs,
        median_abs: median_sorted(&errs),
        within,
    })
}

/// Uniform hash grid for truncated nearest-neighbor queries.
pub struct PointGrid<'a> {
    points: &'a [Vector3<f64>],
    cell: f64,
    cells: HashMap<[i64; 3], Vec<u32>>,
}

impl<'a> PointGrid<'a> {
    /// `cell` must be at least the largest query radius.
    pub fn new(points: &'a [Vector3<f64>], cell: f64) -> Self {
        let mut cells: HashMap<[i64; 3], Vec<u32>> = HashMap::new();
        for (i, p) in points.iter().enumerate() {
            cells.entry(Self::key(p, cell)).or_default().push(i as u32);
        }
        Self { points, cell, cells }
    }

    fn key(p: &Vector3<f64>, cell: f64) -> [i64; 3] {
        [0, 1, 2].map(|k| (p[k] / cell).floor() as i64)
    }

    /// `min(distance to the nearest point, cap)`, exact for `cap ≤ cell`.
    pub fn truncated_distance(&self, q: &Vector3<f64>, cap: f64) -> f64 {
        let k = Self::key(q, self.cell);
        let mut best = cap * cap;
        for dx in -1..=1 {
            for dy in -1..=1 {
                for dz in -1..=1 {
                    if let Some(ids) = self.cells.get(&[k[0] + dx, k[1] + dy, k[2] + dz]) {
                        for &i in ids {
                            best = best.min((self.points[i as usize] - q).norm_squared());
                        }
                    }
                }
            }
        }
        best.sqrt()
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct CloudMetrics {
    pub accuracy: f64,
    pub completeness: f64,
    pub overall: f64,
}

fn mean_truncated(from: &[Vector3<f64>], to: &[Vector3<f64>], d_max: f64) -> f64 {
    let grid = PointGrid::new(to, d_max);
    let d = crate::par::map_collect(from, |p| grid.truncated_distance(p, d_max));
    d.iter().sum::<f64>() / from.len() as f64
}

/// Accuracy (reconstruction to ground truth), completeness (ground truth to
/// reconstruction) and their mean, with distances truncated at `d_max`.
pub fn eval_cloud(cloud: &[Vector3<f64>], gt: &[Vector3<f64>], d_max: f64) -> Result<CloudMetrics> {
    if cloud.is_empty() || gt.is_empty() {
        return Err(Error::InvalidArgument("cannot evaluate an empty cloud".into()));
    }
    if !(d_max > 0.0) {
        return Err(Error::InvalidArgument(format!(
            "d_max must be positive, got {d_max}"
        )));
    }
    let accuracy = mean_truncated(cloud, gt, d_max);
    let completeness = mean_truncated(gt, cloud, d_max);
    Ok(CloudMetrics {
        accuracy,
        completeness,
        overall: 0.5 * (accuracy + completeness),
    })
}
