//! Depth-hypothesis strategies and the per-stage schedule.
//!
//! * [`Strategy::Uniform`] spans the whole scene range at stage 1 and, when
//!   forced onto later stages, a hand-picked window around the upsampled
//!   estimate.
//! * [`Strategy::VarianceInterval`] centers an interval on the previous
//!   estimate and widens it with the standard deviation of the previous
//!   per-pixel distribution: `d̂ ± (α·√V̂ + β)`.
//! * [`Strategy::Epipolar`] sizes the interval so that consecutive hypotheses
//!   move the pixel by a fixed step along its epipolar line in the sources.

use std::fmt;
use std::str::FromStr;

use nalgebra::Point2;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::ViewWarp;
use crate::ingest::{CameraParams, DepthMap, DepthRange, VarianceMap};
use crate::matching::ProbabilityVolume;
use crate::par;

/// Sorted depth samples of one stage, either shared by every pixel or
/// stored per pixel.
#[derive(Clone, Debug, PartialEq)]
pub enum DepthHypotheses {
    Shared(Vec<f64>),
    PerPixel {
        width: usize,
        height: usize,
        count: usize,
        depths: Vec<f64>,
    },
}

fn check_sorted(depths: &[f64]) -> Result<()> {
    if depths.len() < 2 {
        return Err(Error::InvalidArgument(
            "at least two hypotheses are required".into(),
        ));
    }
    if !(depths[0] > 0.0) || depths.iter().any(|d| !d.is_finite()) {
        return Err(Error::InvalidArgument(format!(
            "hypotheses must be positive and finite, first is {}",
            depths[0]
        )));
    }
    if depths.windows(2).any(|w| !(w[1] > w[0])) {
        return Err(Error::InvalidArgument(
            "hypotheses must be strictly increasing".into(),
        ));
    }
    Ok(())
}

impl DepthHypotheses {
    pub fn shared(depths: Vec<f64>) -> Result<Self> {
        check_sorted(&depths)?;
        Ok(DepthHypotheses::Shared(depths))
    }

    pub fn per_pixel(width: usize, height: usize, count: usize, depths: Vec<f64>) -> Result<Self> {
        if depths.len() != width * height * count {
            return Err(Error::Dimensions(format!(
                "{width}x{height}x{count} hypotheses need {} values, got {}",
                width * height * count,
                depths.len()
            )));
        }
        for row in depths.chunks_exact(count.max(1)) {
            check_sorted(row)?;
        }
        Ok(DepthHypotheses::PerPixel {
            width,
            height,
            count,
            depths,
        })
    }

    pub fn count(&self) -> usize {
        match self {
            DepthHypotheses::Shared(d) => d.len(),
            DepthHypotheses::PerPixel { count, .. } => *count,
        }
    }

    pub fn is_shared(&self) -> bool {
        matches!(self, DepthHypotheses::Shared(_))
    }

    /// Grid size of per-pixel hypotheses.
    pub fn dims(&self) -> Option<(usize, usize)> {
        match self {
            DepthHypotheses::Shared(_) => None,
            DepthHypotheses::PerPixel { width, height, .. } => Some((*width, *height)),
        }
    }

    /// Checks that per-pixel hypotheses match a `width`×`height` grid.
    pub fn check_dims(&self, width: usize, height: usize) -> Result<()> {
        match self.dims() {
            Some(dims) if dims != (width, height) => Err(Error::Dimensions(format!(
                "hypotheses are {}x{}, volume is {width}x{height}",
                dims.0, dims.1
            ))),
            _ => Ok(()),
        }
    }

    /// Depths of the pixel with linear index `i`.
    #[inline]
    pub fn at_index(&self, i: usize) -> &[f64] {
        match self {
            DepthHypotheses::Shared(d) => d,
            DepthHypotheses::PerPixel { count, depths, .. } => &depths[i * count..(i + 1) * count],
        }
    }

    /// Spacing between first and last hypothesis of every pixel of a
    /// `width`×`height` grid.
    pub fn interval_widths(&self, width: usize, height: usize) -> Vec<f64> {
        (0..width * height)
            .map(|i| {
                let d = self.at_index(i);
                d[d.len() - 1] - d[0]
            })
            .collect()
    }

    pub fn byte_size(&self) -> usize {
        match self {
            DepthHypotheses::Shared(d) => d.len() * 8,
            DepthHypotheses::PerPixel { depths, .. } => depths.len() * 8,
        }
    }
}

/// Fills `out` with `out.len()` evenly spaced samples from `lo` to `hi`.
pub fn uniform_samples(lo: f64, hi: f64, out: &mut [f64]) {
    let n = out.len();
    let step = (hi - lo) / (n - 1) as f64;
    for (j, v) in out.iter_mut().enumerate() {
        *v = lo + j as f64 * step;
    }
    out[n - 1] = hi;
}

/// Stage-1 hypotheses: `count` planes spanning `[depth_min, depth_max]`.
pub fn dhs1_uniform(depth_min: f64, depth_max: f64, count: usize) -> Result<DepthHypotheses> {
    if count < 2 {
        return Err(Error::InvalidArgument(format!(
            "need >= 2 hypotheses, got {count}"
        )));
    }
    if !(depth_min < depth_max) {
        return Err(Error::InvalidArgument(format!(
            "empty depth range [{depth_min}, {depth_max}]"
        )));
    }
    let mut d = vec![0.0; count];
    uniform_samples(depth_min, depth_max, &mut d);
    DepthHypotheses::shared(d)
}

/// Probability-weighted variance of the hypothesis depths around `mean`.
#[inline]
pub fn distribution_variance(probs: &[f64], depths: &[f64], mean: f64) -> f64 {
    probs
        .iter()
        .zip(depths)
        .map(|(p, d)| p * (d - mean) * (d - mean))
        .sum()
}

/// Per-pixel variance `V̂_i = Σ_j P_ij (d_ij − d̂_i)²` around the regressed
/// depth map.
pub fn pixel_variance(pv: &ProbabilityVolume, dm: &DepthMap) -> Result<VarianceMap> {
    if dm.width() != pv.width() || dm.height() != pv.height() {
        return Err(Error::Dimensions(format!(
            "depth map {}x{} vs volume {}x{}",
            dm.width(),
            dm.height(),
            pv.width(),
            pv.height()
        )));
    }
    let data = (0..pv.pixel_count())
        .map(|i| distribution_variance(pv.row(i), pv.depths(i), dm.data()[i]))
        .collect();
    VarianceMap::new(pv.width(), pv.height(), data)
}

/// Non-negative scale and offset of the variance interval.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct IntervalParams {
    alpha: f64,
    beta: f64,
}

impl IntervalParams {
    /// Negative values are clamped to zero.
    pub fn new(alpha: f64, beta: f64) -> Self {
        if alpha < 0.0 || beta < 0.0 {
            log::warn!("interval parameters clamped to >= 0 (alpha {alpha}, beta {beta})");
        }
        Self {
            alpha: alpha.max(0.0),
            beta: beta.max(0.0),
        }
    }

    pub fn alpha(&self) -> f64 {
        self.alpha
    }

    pub fn beta(&self) -> f64 {
        self.beta
    }
}

/// Unclamped confidence interval `[d̂ − α√V − β, d̂ + α√V + β]`.
pub fn variance_interval(d_hat: f64, variance: f64, params: IntervalParams) -> (f64, f64) {
    let half = params.alpha * variance.max(0.0).sqrt() + params.beta;
    (d_hat - half, d_hat + half)
}

/// Widens intervals narrower than `min_width` symmetrically, then clamps to
/// the scene range.
fn finish_interval(lo: f64, hi: f64, center: f64, min_width: f64, range: DepthRange) -> (f64, f64) {
    let (mut lo, mut hi) = (lo, hi);
    if hi - lo < min_width {
        lo = center - 0.5 * min_width;
        hi = center + 0.5 * min_width;
    }
    let lo = range.clamp(lo);
    let hi = range.clamp(hi);
    if hi > lo {
        (lo, hi)
    } else if hi >= range.max {
        (range.max - min_width.min(range.width()), range.max)
    } else {
        (range.min, range.min + min_width.min(range.width()))
    }
}

fn per_pixel_intervals<F>(width: usize, height: usize, count: usize, interval: F) -> Result<DepthHypotheses>
where
    F: Fn(usize) -> (f64, f64) + Sync + Send,
{
    if count < 2 {
        return Err(Error::InvalidArgument(format!(
            "need >= 2 hypotheses, got {count}"
        )));
    }
    let mut depths = vec![0.0; width * height * count];
    par::for_each_row(&mut depths, width * count, |y, row| {
        for (x, px) in row.chunks_exact_mut(count).enumerate() {
            let (lo, hi) = interval(y * width + x);
            uniform_samples(lo, hi, px);
        }
    });
    Ok(DepthHypotheses::PerPixel {
        width,
        height,
        count,
        depths,
    })
}

/// Variance-interval hypotheses: `count` uniform samples per pixel inside the
/// interval, widened to `min_width` when degenerate and clamped to `range`.
pub fn dhs2_variance_interval(
    dm: &DepthMap,
    variance: &VarianceMap,
    params: IntervalParams,
    count: usize,
    range: DepthRange,
    min_width: f64,
) -> Result<DepthHypotheses> {
    if !dm.same_dims(variance) {
        return Err(Error::Dimensions("depth and variance maps differ in size".into()));
    }
    if !(min_width > 0.0) {
        return Err(Error::InvalidArgument("min_width must be positive".into()));
    }
    per_pixel_intervals(dm.width(), dm.height(), count, |i| {
        let d = dm.data()[i];
        let (lo, hi) = variance_interval(d, variance.data()[i], params);
        finish_interval(lo, hi, d, min_width, range)
    })
}

/// Degenerate-width floor for the variance interval at 1-based `stage`:
/// twice the stage-1 spacing, halved per stage.
pub fn variance_min_width(range: DepthRange, stage1_count: usize, stage: usize) -> f64 {
    let spacing = range.width() / (stage1_count.max(2) - 1) as f64;
    2.0 * spacing / (1u64 << stage.saturating_sub(1).min(60)) as f64
}

/// Mean depth-per-pixel step over the sources with parallax, or `None`.
pub fn mean_depth_step(p: &Point2<f64>, d: f64, warps: &[ViewWarp]) -> Option<f64> {
    let (sum, n) = warps
        .iter()
        .filter_map(|w| w.depth_per_pixel(p, d).ok())
        .fold((0.0, 0usize), |(s, n), v| (s + v, n + 1));
    (n > 0).then(|| sum / n as f64)
}

/// Epipolar hypotheses on an (already upsampled) depth map.
///
/// Each pixel gets `count` samples over `d̂ ± (count/2)·step_px·Δd`, where
/// `Δd` is the mean depth change per pixel of epipolar motion over the
/// sources. Pixels without parallax in any source use `fallback_half_width`.
pub fn dhs3_epipolar(
    dm: &DepthMap,
    reference: &CameraParams,
    sources: &[CameraParams],
    count: usize,
    step_px: f64,
    range: DepthRange,
    fallback_half_width: f64,
) -> Result<DepthHypotheses> {
    if sources.is_empty() {
        return Err(Error::InvalidArgument(
            "at least one source camera is required".into(),
        ));
    }
    if !(step_px > 0.0 && fallback_half_width > 0.0) {
        return Err(Error::InvalidArgument(
            "step and fallback width must be positive".into(),
        ));
    }
    let warps: Vec<ViewWarp> = sources.iter().map(|s| ViewWarp::new(reference, s)).collect();
    let width = dm.width();
    let half_steps = 0.5 * count as f64 * step_px;
    per_pixel_intervals(width, dm.height(), count, |i| {
        let d = dm.data()[i];
        let p = Point2::new((i % width) as f64 + 0.5, (i / width) as f64 + 0.5);
        let half = mean_depth_step(&p, d, &warps)
            .map(|step| half_steps * step)
            .unwrap_or(fallback_half_width);
        finish_interval(d - half, d + half, d, 0.0, range)
    })
}

/// Uniform window of total `width_scene` around each pixel's estimate.
pub fn uniform_window(
    dm: &DepthMap,
    width_scene: f64,
    count: usize,
    range: DepthRange,
) -> Result<DepthHypotheses> {
    if !(width_scene > 0.0) {
        return Err(Error::InvalidArgument("window width must be positive".into()));
    }
    per_pixel_intervals(dm.width(), dm.height(), count, |i| {
        let d = dm.data()[i];
        finish_interval(
            d - 0.5 * width_scene,
            d + 0.5 * width_scene,
            d,
            width_scene,
            range,
        )
    })
}

/// Bilinear resampling to `width`×`height`, aligning pixel centers; samples
/// beyond the outermost centers take the edge value.
pub fn upsample_depth(dm: &DepthMap, width: usize, height: usize) -> Result<DepthMap> {
    if width == 0 || height == 0 || dm.is_empty() {
        return Err(Error::Dimensions("cannot resample an empty map".into()));
    }
    let sx = dm.width() as f64 / width as f64;
    let sy = dm.height() as f64 / height as f64;
    let (sw, sh) = (dm.width(), dm.height());
    let tap = |f: f64, n: usize| -> (usize, usize, f64) {
        let f = f.clamp(0.0, (n - 1) as f64);
        let i0 = (f.floor() as usize).min(n - 1);
        let i1 = (i0 + 1).min(n - 1);
        (i0, i1, f - i0 as f64)
    };
    let mut out = vec![0.0; width * height];
    par::for_each_row(&mut out, width, |y, row| {
        let (y0, y1, ay) = tap((y as f64 + 0.5) * sy - 0.5, sh);
        for (x, v) in row.iter_mut().enumerate() {
            let (x0, x1, ax) = tap((x as f64 + 0.5) * sx - 0.5, sw);
            let top = dm.get(x0, y0) * (1.0 - ax) + dm.get(x1, y0) * ax;
            let bottom = dm.get(x0, y1) * (1.0 - ax) + dm.get(x1, y1) * ax;
            *v = top * (1.0 - ay) + bottom * ay;
        }
    });
    DepthMap::new(width, height, out)
}

/// Order statistics of per-pixel interval widths.
#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct WidthStats {
    pub min: f64,
    pub median: f64,
    pub max: f64,
    pub mean: f64,
}

impl WidthStats {
    pub fn from_widths(widths: &[f64]) -> Self {
        if widths.is_empty() {
            return Self::default();
        }
        let mut sorted = widths.to_vec();
        sorted.sort_by(f64::total_cmp);
        Self {
            min: sorted[0],
            median: median_sorted(&sorted),
            max: sorted[sorted.len() - 1],
            mean: sorted.iter().sum::<f64>() / sorted.len() as f64,
        }
    }
}

pub(crate) fn median_sorted(sorted: &[f64]) -> f64 {
    let n = sorted.len();
    if n % 2 == 1 {
        sorted[n / 2]
    } else {
        0.5 * (sorted[n / 2 - 1] + sorted[n / 2])
    }
}

/// Hypothesis placement rule of one stage.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Strategy {
    Uniform,
    VarianceInterval,
    Epipolar,
}

impl Strategy {
    pub fn name(self) -> &'static str {
        match self {
            Strategy::Uniform => "dhs1",
            Strategy::VarianceInterval => "dhs2",
            Strategy::Epipolar => "dhs3",
        }
    }
}

impl fmt::Display for Strategy {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

/// Assignment of strategies to stages.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(try_from = "String", into = "String")]
pub enum Schedule {
    /// Uniform sampling everywhere, with hand-picked windows after stage 1.
    Dhs1Only,
    /// Variance intervals from stage 2 on.
    Dhs1Dhs2,
    /// Epipolar intervals from stage 2 on.
    Dhs1Dhs3,
    /// Variance interval at stage 2, epipolar intervals afterwards.
    #[default]
    Full,
}

impl Schedule {
    pub const ALL: [Schedule; 4] = [
        Schedule::Dhs1Only,
        Schedule::Dhs1Dhs2,
        Schedule::Dhs1Dhs3,
        Schedule::Full,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Schedule::Dhs1Only => "dhs1",
            Schedule::Dhs1Dhs2 => "dhs1+dhs2",
            Schedule::Dhs1Dhs3 => "dhs1+dhs3",
            Schedule::Full => "full",
        }
    }

    /// Strategy of 1-based `stage`.
    pub fn strategy(self, stage: usize) -> Result<Strategy> {
        if stage == 0 {
            return Err(Error::InvalidArgument("stages are numbered from 1".into()));
        }
        Ok(match (self, stage) {
            (_, 1) | (Schedule::Dhs1Only, _) => Strategy::Uniform,
            (Schedule::Dhs1Dhs2, _) | (Schedule::Full, 2) => Strategy::VarianceInterval,
            (Schedule::Dhs1Dhs3, _) | (Schedule::Full, _) => Strategy::Epipolar,
        })
    }
}

/// Strategy of 1-based `stage` under `schedule`.
pub fn schedule(stage: usize, schedule: Schedule) -> Result<Strategy> {
    schedule.strategy(stage)
}

impl FromStr for Schedule {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "dhs1" => Ok(Schedule::Dhs1Only),
            "dhs1+dhs2" => Ok(Schedule::Dhs1Dhs2),
            "dhs1+dhs3" => Ok(Schedule::Dhs1Dhs3),
            "full" | "dhs1+dhs2+dhs3" => Ok(Schedule::Full),
            _ => Err(Error::UnknownStrategy(s.to_string())),
        }
    }
}

impl TryFrom<String> for Schedule {
    type Error = Error;

    fn try_from(s: String) -> Result<Self> {
        s.parse()
    }
}

impl From<Schedule> for String {
    fn from(s: Schedule) -> String {
        s.name().to_string()
    }
}

impl fmt::Display for Schedule {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

#[cfg(test)]
mod tests {
    use super::Strategy;
    use super::*;
    use crate::matching::ProbabilityVolume;
    use nalgebra::{Matrix3, Vector3};
    use proptest::prelude::*;

    fn range() -> DepthRange {
        DepthRange::new(425.0, 1065.0).unwrap()
    }

    #[test]
    fn uniform_full_range_endpoints_and_spacing() {
        let h = dhs1_uniform(425.0, 1065.0, 48).unwrap();
        let d = h.at_index(0);
        assert_eq!(d[0], 425.0);
        assert_eq!(d[47], 1065.0);
        assert!((d[1] - d[0] - 640.0 / 47.0).abs() < 1e-9);
        assert!((640.0_f64 / 47.0 - 13.6170).abs() < 1e-4);
        let unit = dhs1_uniform(0.5, 1.0, 2).unwrap();
        assert_eq!(unit.at_index(0), &[0.5, 1.0]);
        assert!(dhs1_uniform(1.0, 1.0, 4).is_err());
        assert!(dhs1_uniform(1.0, 2.0, 1).is_err());
    }

    fn single_pixel_volume(probs: Vec<f64>, depths: Vec<f64>) -> ProbabilityVolume {
        ProbabilityVolume::new(1, 1, probs, DepthHypotheses::Shared(depths), vec![true]).unwrap()
    }

    #[test]
    fn variance_examples() {
        let depths = vec![0.0, 1.0, 2.0];
        let cases = [
            (vec![0.0, 1.0, 0.0], 1.0, 0.0),
            (vec![0.25, 0.5, 0.25], 1.0, 0.5),
            (vec![1.0 / 3.0; 3], 1.0, 2.0 / 3.0),
        ];
        for (p, mean, expected) in cases {
            let pv = single_pixel_volume(p, depths.clone());
            let v = pixel_variance(&pv, &DepthMap::filled(1, 1, mean)).unwrap();
            assert!((v.get(0, 0) - expected).abs() < 1e-12);
        }
    }

    #[test]
    fn variance_interval_substitution() {
        let (lo, hi) = variance_interval(500.0, 100.0, IntervalParams::new(1.0, 5.0));
        assert!((lo - 485.0).abs() < 1e-12 && (hi - 515.0).abs() < 1e-12);
    }

    #[test]
    fn zero_parameters_fall_back_to_min_width() {
        let dm = DepthMap::filled(2, 1, 600.0);
        let var = VarianceMap::filled(2, 1, 0.0);
        let h = dhs2_variance_interval(&dm, &var, IntervalParams::new(0.0, 0.0), 4, range(), 10.0).unwrap();
        let d = h.at_index(1);
        assert!((d[0] - 595.0).abs() < 1e-12 && (d[3] - 605.0).abs() < 1e-12);
    }

    #[test]
    fn variance_interval_is_clamped_to_scene_range() {
        let dm = DepthMap::new(2, 1, vec![430.0, 1060.0]).unwrap();
        let var = VarianceMap::filled(2, 1, 400.0);
        let h = dhs2_variance_interval(&dm, &var, IntervalParams::new(1.0, 0.0), 5, range(), 1.0).unwrap();
        assert_eq!(h.at_index(0)[0], 425.0);
        assert_eq!(h.at_index(1)[4], 1065.0);
        let edge = DepthMap::new(1, 1, vec![1065.0]).unwrap();
        let h = dhs2_variance_interval(
            &edge,
            &VarianceMap::filled(1, 1, 0.0),
            IntervalParams::new(0.0, 0.0),
            3,
            range(),
            4.0,
        )
        .unwrap();
        assert_eq!(h.at_index(0), &[1063.0, 1064.0, 1065.0]);
    }

    #[test]
    fn min_width_halves_per_stage() {
        let w2 = variance_min_width(range(), 48, 2);
        assert!((w2 - 640.0 / 47.0).abs() < 1e-12);
        assert!((variance_min_width(range(), 48, 3) - w2 / 2.0).abs() < 1e-12);
    }

    fn rectified(f: f64, b: f64) -> (CameraParams, CameraParams) {
        let r = DepthRange::new(1.0, 100.0).unwrap();
        let a = CameraParams::look(f, (16.0, 16.0), Matrix3::identity(), Vector3::zeros(), r).unwrap();
        let s =
            CameraParams::look(f, (16.0, 16.0), Matrix3::identity(), Vector3::new(b, 0.0, 0.0), r).unwrap();
        (a, s)
    }

    #[test]
    fn epipolar_interval_on_rectified_rig() {
        let (a, s) = rectified(100.0, 1.0);
        let dm = DepthMap::filled(4, 4, 10.0);
        let h = dhs3_epipolar(&dm, &a, std::slice::from_ref(&s), 8, 0.5, a.depth_range(), 1.0).unwrap();
        for i in 0..16 {
            let d = h.at_index(i);
            assert!((d[0] - 8.0).abs() < 1e-9 && (d[7] - 12.0).abs() < 1e-9);
        }
        let mirrored = CameraParams::look(
            100.0,
            (16.0, 16.0),
            Matrix3::identity(),
            Vector3::new(-1.0, 0.0, 0.0),
            a.depth_range(),
        )
        .unwrap();
        let both = dhs3_epipolar(&dm, &a, &[s, mirrored], 8, 0.5, a.depth_range(), 1.0).unwrap();
        assert_eq!(both, h);
    }

    #[test]
    fn epipolar_falls_back_without_parallax() {
        let (a, _) = rectified(100.0, 1.0);
        let dm = DepthMap::filled(2, 2, 10.0);
        let h = dhs3_epipolar(&dm, &a, std::slice::from_ref(&a), 4, 0.5, a.depth_range(), 3.0).unwrap();
        assert_eq!(h.at_index(0), &[7.0, 9.0, 11.0, 13.0]);
    }

    #[test]
    fn upsample_constant_corners_and_ramp() {
        let c = upsample_depth(&DepthMap::filled(3, 2, 7.5), 6, 4).unwrap();
        assert!(c.data().iter().all(|&v| v == 7.5));

        let m = DepthMap::new(2, 2, vec![1.0, 2.0, 3.0, 4.0]).unwrap();
        let up = upsample_depth(&m, 4, 4).unwrap();
        assert_eq!(up.get(0, 0), 1.0);
        assert_eq!(up.get(3, 0), 2.0);
        assert_eq!(up.get(0, 3), 3.0);
        assert_eq!(up.get(3, 3), 4.0);

        // Affine in continuous coordinates: exact away from the clamped border.
        let f = |u: f64, v: f64| 500.0 + 3.0 * u - 2.0 * v;
        let coarse = DepthMap::from_fn(8, 6, |x, y| f(x as f64 + 0.5, y as f64 + 0.5));
        let fine = upsample_depth(&coarse, 16, 12).unwrap();
        for y in 1..11 {
            for x in 1..15 {
                let expected = f((x as f64 + 0.5) / 2.0, (y as f64 + 0.5) / 2.0);
                assert!((fine.get(x, y) - expected).abs() < 1e-9);
            }
        }
    }

    #[test]
    fn schedule_assignments() {
        assert_eq!(schedule(1, Schedule::Full).unwrap(), Strategy::Uniform);
        assert_eq!(schedule(2, Schedule::Full).unwrap(), Strategy::VarianceInterval);
        assert_eq!(schedule(5, Schedule::Full).unwrap(), Strategy::Epipolar);
        let o: Schedule = "DHS1+DHS3".parse().unwrap();
        assert_eq!(schedule(2, o).unwrap(), Strategy::Epipolar);
        assert_eq!(schedule(4, Schedule::Dhs1Only).unwrap(), Strategy::Uniform);
        assert_eq!(
            schedule(3, Schedule::Dhs1Dhs2).unwrap(),
            Strategy::VarianceInterval
        );
        assert!(matches!(
            "dhs4".parse::<Schedule>(),
            Err(Error::UnknownStrategy(_))
        ));
        assert!(schedule(0, Schedule::Full).is_err());
        for s in Schedule::ALL {
            assert_eq!(s.name().parse::<Schedule>().unwrap(), s);
        }
    }

    #[test]
    fn per_pixel_rejects_unsorted() {
        assert!(DepthHypotheses::per_pixel(1, 1, 3, vec![1.0, 3.0, 2.0]).is_err());
        assert!(DepthHypotheses::per_pixel(1, 1, 3, vec![1.0, 2.0]).is_err());
        assert!(DepthHypotheses::shared(vec![0.0, 1.0]).is_err());
    }

    proptest! {
        #[test]
        fn wider_variance_means_wider_interval(d in 450.0f64..1000.0, v1 in 0.0f64..1e4, dv in 1e-3f64..1e4, a in 0.01f64..5.0, b in 0.0f64..10.0) {
            let p = IntervalParams::new(a, b);
            let (lo1, hi1) = variance_interval(d, v1, p);
            let (lo2, hi2) = variance_interval(d, v1 + dv, p);
            prop_assert!(hi2 - lo2 > hi1 - lo1);
            prop_assert!(((lo1 + hi1) / 2.0 - d).abs() < 1e-9);
        }

        #[test]
        fn dhs2_stays_in_range(d in 425.0f64..1065.0, v in 0.0f64..1e5, a in 0.0f64..4.0, b in 0.0f64..50.0) {
            let h = dhs2_variance_interval(&DepthMap::filled(1, 1, d), &VarianceMap::filled(1, 1, v),
                IntervalParams::new(a, b), 8, range(), 5.0).unwrap();
            let s = h.at_index(0);
            prop_assert!(s[0] >= 425.0 && s[7] <= 1065.0);
            prop_assert!(s.windows(2).all(|w| w[1] > w[0]));
        }
    }
}
