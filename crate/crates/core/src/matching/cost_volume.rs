use nalgebra::Point2;

use super::features::FeatureMap;
use crate::error::{Error, Result};
use crate::geometry::ViewWarp;
use crate::ingest::CameraParams;
use crate::sampling::DepthHypotheses;

/// Grouped matching scores, `height × width × depths × groups`, plus the
/// number of source views that contributed to each `(pixel, depth)`.
#[derive(Clone, Debug, PartialEq)]
pub struct CostVolume {
    width: usize,
    height: usize,
    depths: usize,
    groups: usize,
    data: Vec<f32>,
    mask: Vec<u16>,
}

impl CostVolume {
    pub fn new(
        width: usize,
        height: usize,
        depths: usize,
        groups: usize,
        data: Vec<f32>,
        mask: Vec<u16>,
    ) -> Result<Self> {
        let cells = width * height * depths;
        if data.len() != cells * groups || mask.len() != cells {
            return Err(Error::Dimensions(format!(
                "{width}x{height}x{depths}x{groups} volume: got {} scores and {} mask entries",
                data.len(),
                mask.len()
            )));
        }
        Ok(Self {
            width,
            height,
            depths,
            groups,
            data,
            mask,
        })
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn depths(&self) -> usize {
        self.depths
    }

    pub fn groups(&self) -> usize {
        self.groups
    }

    pub fn data(&self) -> &[f32] {
        &self.data
    }

    pub fn mask(&self) -> &[u16] {
        &self.mask
    }

    /// Scores of `(pixel index, depth)` across groups.
    #[inline]
    pub fn cell(&self, pixel: usize, depth: usize) -> &[f32] {
        let s = (pixel * self.depths + depth) * self.groups;
        &self.data[s..s + self.groups]
    }

    #[inline]
    pub fn mask_at(&self, pixel: usize, depth: usize) -> u16 {
        self.mask[pixel * self.depths + depth]
    }

    /// Fraction of `(pixel, depth)` cells without any contributing view.
    pub fn invalid_fraction(&self) -> f64 {
        if self.mask.is_empty() {
            return 0.0;
        }
        self.mask.iter().filter(|&&m| m == 0).count() as f64 / self.mask.len() as f64
    }

    pub fn byte_size(&self) -> usize {
        self.data.len() * 4 + self.mask.len() * 2
    }
}

/// A source view's features and camera at the matching pyramid level.
#[derive(Clone, Copy, Debug)]
pub struct SourceView<'a> {
    pub features: &'a FeatureMap,
    pub camera: &'a CameraParams,
}

#[inline]
fn correlate_into(a: &[f32], b: &[f32], groups: usize, out: &mut [f32]) {
    let per = a.len() / groups;
    let scale = groups as f32 / a.len() as f32;
    for (g, o) in out.iter_mut().enumerate().take(groups) {
        let s = g * per;
        let dot: f32 = a[s..s + per].iter().zip(&b[s..s + per]).map(|(x, y)| x * y).sum();
        *o = scale * dot;
    }
}

/// Group-wise correlation `c_g = (G/C)·⟨a_g, b_g⟩` over the `g`-th channel
/// slice.
pub fn groupwise_correlation(a: &[f32], b: &[f32], groups: usize) -> Result<Vec<f32>> {
    if a.len() != b.len() {
        return Err(Error::Dimensions(format!(
            "feature lengths differ: {} vs {}",
            a.len(),
            b.len()
        )));
    }
    if groups == 0 || !a.len().is_multiple_of(groups) {
        return Err(Error::InvalidArgument(format!(
            "{} channels cannot be split into {groups} groups",
            a.len()
        )));
    }
    let mut out = vec![0.0; groups];
    correlate_into(a, b, groups, &mut out);
    Ok(out)
}

/// Plane-sweep cost volume. Every `(pixel, depth)` cell holds the group-wise
/// correlation averaged over the sources whose warp lands inside the image
/// (bilinear feature sampling); cells with no such source hold zeros and a
/// zero mask.
pub fn build_cost_volume(
    reference: &FeatureMap,
    reference_camera: &CameraParams,
    sources: &[SourceView<'_>],
    hypotheses: &DepthHypotheses,
    groups: usize,
) -> Result<CostVolume> {
    if sources.is_empty() {
        return Err(Error::InvalidArgument(
            "at least one source view is required".into(),
        ));
    }
    let (w, h, c) = (reference.width(), reference.height(), reference.channels());
    if groups == 0 || c % groups != 0 {
        return Err(Error::InvalidArgument(format!(
            "{c} channels cannot be split into {groups} groups"
        )));
    }
    if let Some(s) = sources.iter().find(|s| s.features.channels() != c) {
        return Err(Error::Dimensions(format!(
            "source has {} channels, reference {c}",
            s.features.channels()
        )));
    }
    hypotheses.check_dims(w, h)?;
    let depths = hypotheses.count();
    let warps: Vec<ViewWarp> = sources
        .iter()
        .map(|s| ViewWarp::new(reference_camera, s.camera))
        .collect();

    let rows: Vec<usize> = (0..h).collect();
    let row_results = crate::par::map_collect(&rows, |&y| {
        let mut data = vec![0f32; w * depths * groups];
        let mut mask = vec![0u16; w * depths];
        let mut sampled = vec![0f32; c];
        let mut corr = vec![0f32; groups];
        let mut acc = vec![0f32; groups];
        for x in 0..w {
            let p = Point2::new(x as f64 + 0.5, y as f64 + 0.5);
            let f_ref = reference.pixel(x, y);
            let hyps = hypotheses.at_index(y * w + x);
            for (j, &d) in hyps.iter().enumerate() {
                acc.iter_mut().for_each(|v| *v = 0.0);
                let mut count = 0u16;
                for (src, warp) in sources.iter().zip(&warps) {
                    let Some(q) = warp.warp(&p, d) else { continue };
                    if !src.features.sample_bilinear(q.x, q.y, &mut sampled) {
                        continue;
                    }
                    correlate_into(f_ref, &sampled, groups, &mut corr);
                    acc.iter_mut().zip(&corr).for_each(|(a, v)| *a += v);
                    count += 1;
                }
                if count > 0 {
                    let cell = (x * depths + j) * groups;
                    let inv = 1.0 / count as f32;
                    for g in 0..groups {
                        data[cell + g] = acc[g] * inv;
                    }
                    mask[x * depths + j] = count;
                }
            }
        }
        (data, mask)
    });

    let mut data = Vec::with_capacity(w * h * depths * groups);
    let mut mask = Vec::with_capacity(w * h * depths);
    for (d, m) in row_results {
        data.extend_from_slice(&d);
        mask.extend_from_slice(&m);
    }
    let cv = CostVolume::new(w, h, depths, groups, data, mask)?;
    let invalid = cv.invalid_fraction();
    if invalid >= 0.5 {
        log::warn!(
            "{:.0}% of cost volume cells have no valid source view",
            100.0 * invalid
        );
    }
    Ok(cv)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ingest::DepthRange;
    use nalgebra::{Matrix3, Vector3};
    use rand::{Rng, SeedableRng};

    #[test]
    fn normalized_identity_correlates_to_one() {
        // Each 2-channel group slice has squared norm C/G = 2.
        let r2 = std::f32::consts::SQRT_2;
        let a = [1.0f32, 1.0, r2, 0.0, 0.0, -r2, -1.0, 1.0];
        let c = groupwise_correlation(&a, &a, 4).unwrap();
        for v in c {
            assert!((v - 1.0).abs() < 1e-6);
        }
    }

    #[test]
    fn orthogonal_groups_correlate_to_zero() {
        let a = [1.0f32, 0.0, 0.0, 1.0];
        let b = [0.0f32, 1.0, 1.0, 0.0];
        assert_eq!(groupwise_correlation(&a, &b, 2).unwrap(), vec![0.0, 0.0]);
    }

    #[test]
    fn matches_naive_dot_products() {
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(11);
        for _ in 0..100 {
            let a: Vec<f32> = (0..16).map(|_| rng.gen_range(-2.0..2.0)).collect();
            let b: Vec<f32> = (0..16).map(|_| rng.gen_range(-2.0..2.0)).collect();
            let c = groupwise_correlation(&a, &b, 4).unwrap();
            for g in 0..4 {
                let mut dot = 0.0f64;
                for k in 0..4 {
                    dot += a[4 * g + k] as f64 * b[4 * g + k] as f64;
                }
                assert!((c[g] as f64 - dot * 4.0 / 16.0).abs() < 1e-6);
            }
        }
        assert!(groupwise_correlation(&[1.0; 4], &[1.0; 3], 2).is_err());
        assert!(groupwise_correlation(&[1.0; 4], &[1.0; 4], 3).is_err());
    }

    fn features(w: usize, h: usize, seed: u64) -> FeatureMap {
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
        FeatureMap::new(
            w,
            h,
            4,
            (0..w * h * 4).map(|_| rng.gen_range(-1.0..1.0)).collect(),
        )
        .unwrap()
    }

    fn camera(center_x: f64) -> CameraParams {
        CameraParams::look(
            20.0,
            (8.0, 8.0),
            Matrix3::identity(),
            Vector3::new(center_x, 0.0, 0.0),
            DepthRange::new(1.0, 100.0).unwrap(),
        )
        .unwrap()
    }

    #[test]
    fn out_of_bounds_view_is_masked() {
        let f = features(16, 16, 1);
        let r = camera(0.0);
        let far = camera(1e4);
        let hyps = DepthHypotheses::shared(vec![10.0, 20.0]).unwrap();
        let src = [SourceView {
            features: &f,
            camera: &far,
        }];
        let cv = build_cost_volume(&f, &r, &src, &hyps, 2).unwrap();
        assert!(cv.mask().iter().all(|&m| m == 0));
        assert!(cv.data().iter().all(|&v| v == 0.0));
        assert_eq!(cv.invalid_fraction(), 1.0);
    }

    #[test]
    fn equal_sources_average_to_single_source_cost() {
        let fr = features(16, 16, 2);
        let fs = features(16, 16, 3);
        let r = camera(0.0);
        let s = camera(0.5);
        let hyps = DepthHypotheses::shared(vec![5.0, 10.0, 40.0]).unwrap();
        let one = [SourceView {
            features: &fs,
            camera: &s,
        }];
        let two = [one[0], one[0]];
        let a = build_cost_volume(&fr, &r, &one, &hyps, 2).unwrap();
        let b = build_cost_volume(&fr, &r, &two, &hyps, 2).unwrap();
        for (x, y) in a.data().iter().zip(b.data()) {
            assert!((x - y).abs() < 1e-6);
        }
        assert!(a.mask().iter().zip(b.mask()).all(|(m1, m2)| *m2 == 2 * *m1));
    }
}
