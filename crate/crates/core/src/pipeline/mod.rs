//! Coarse-to-fine orchestration: one plane-sweep stage per pyramid level,
//! with hypotheses chosen by the configured strategy schedule.

mod ablation;
mod trace;

use crate::error::{Error, Result};
use crate::ingest::{
    build_pyramid, CameraParams, ConfidenceMap, DepthMap, Image, PipelineConfig, VarianceSource,
};
use crate::matching::{
    aggregate, build_cost_volume, extract_features, regress_depth, softmax_volume, FeatureMap,
    ProbabilityVolume, SourceView,
};
use crate::sampling::{
    dhs1_uniform, dhs2_variance_interval, dhs3_epipolar, pixel_variance, uniform_window, upsample_depth,
    variance_min_width, Strategy, WidthStats,
};
use crate::synth::SyntheticScene;
use crate::unimodal::auf_filter;

pub use self::ablation::{
    ablation_run, calibrate_interval, evaluate_output, evaluation_margin, interior_mask,
    scene_depth_at_level, AblationRow, CalibrationRow,
};
pub use self::trace::{StageRecord, StageSummary, StageTrace};

/// Reference image and camera first, then the sources.
#[derive(Clone, Debug)]
pub struct ViewSet {
    images: Vec<Image>,
    cameras: Vec<CameraParams>,
}

impl ViewSet {
    pub fn new(images: Vec<Image>, cameras: Vec<CameraParams>) -> Result<Self> {
        if images.len() < 2 || images.len() != cameras.len() {
            return Err(Error::InvalidArgument(format!(
                "need at least 2 views with one camera each, got {} images and {} cameras",
                images.len(),
                cameras.len()
            )));
        }
        let (w, h) = (images[0].width(), images[0].height());
        if images.iter().any(|i| i.width() != w || i.height() != h) {
            return Err(Error::Dimensions(
                "all views must share the reference size".into(),
            ));
        }
        Ok(Self { images, cameras })
    }

    /// Uses `reference` of the scene as the reference view and every other
    /// view as a source.
    pub fn from_scene(scene: &SyntheticScene, reference: usize) -> Result<Self> {
        if reference >= scene.view_count() {
            return Err(Error::InvalidArgument(format!("no view {reference}")));
        }
        let order = std::iter::once(reference).chain((0..scene.view_count()).filter(|k| *k != reference));
        let (images, cameras) = order
            .map(|k| (scene.images[k].clone(), scene.cameras[k].clone()))
            .unzip();
        Self::new(images, cameras)
    }

    pub fn images(&self) -> &[Image] {
        &self.images
    }

    pub fn cameras(&self) -> &[CameraParams] {
        &self.cameras
    }

    pub fn reference_camera(&self) -> &CameraParams {
        &self.cameras[0]
    }
}

#[derive(Clone, Debug)]
pub struct PipelineOutput {
    pub depth: DepthMap,
    pub confidence: ConfidenceMap,
    pub trace: StageTrace,
    /// Last stage's distributions when `keep_final_volume` is set.
    pub final_volume: Option<ProbabilityVolume>,
}

struct Level {
    features: Vec<FeatureMap>,
    cameras: Vec<CameraParams>,
}

/// Distribution and estimate handed from one stage to the next.
struct Carry {
    depth: DepthMap,
    /// Center and spread for a following variance-interval stage.
    variance_basis: Option<(DepthMap, DepthMap)>,
}

pub fn run_pipeline(views: &ViewSet, cfg: &PipelineConfig) -> Result<PipelineOutput> {
    run_pipeline_with(views, cfg, |_, _| {})
}

/// Same as [`run_pipeline`], calling `observe(stage, volume)` with every
/// stage's probability volume (e.g. to dump it).
pub fn run_pipeline_with<F>(views: &ViewSet, cfg: &PipelineConfig, mut observe: F) -> Result<PipelineOutput>
where
    F: FnMut(usize, &ProbabilityVolume),
{
    cfg.validate()?;
    let levels = cfg.num_levels;
    let pyramids = views
        .images
        .iter()
        .zip(&views.cameras)
        .map(|(img, cam)| build_pyramid(img, cam, levels))
        .collect::<Result<Vec<_>>>()?;
    let range = views.reference_camera().depth_range();
    let unimodal = cfg.unimodal_params();
    let d1 = cfg.hypotheses_for(1);

    let mut trace = StageTrace::default();
    let mut carry: Option<Carry> = None;
    let mut last = None;
    for stage in 1..=levels {
        let start = crate::par::Stopwatch::start();
        let li = stage - 1;
        let level = Level {
            features: pyramids
                .iter()
                .map(|p| extract_features(&p.levels[li], cfg.channels, cfg.groups))
                .collect::<Result<_>>()?,
            cameras: pyramids.iter().map(|p| p.cameras[li].clone()).collect(),
        };
        let (w, h) = (level.features[0].width(), level.features[0].height());
        let count = cfg.hypotheses_for(stage);
        let strategy = cfg.strategy.strategy(stage)?;

        let hyps = match (&carry, strategy) {
            (None, _) => dhs1_uniform(range.min, range.max, count)?,
            (Some(c), Strategy::Uniform) => uniform_window(
                &upsample_depth(&c.depth, w, h)?,
                cfg.handcrafted_width(stage),
                count,
                range,
            )?,
            (Some(c), Strategy::VarianceInterval) => {
                let (center, sigma) = c.variance_basis.as_ref().expect("prepared by the previous stage");
                let center = upsample_depth(center, w, h)?;
                let var = upsample_depth(sigma, w, h)?.map(|s| s * s);
                let floor = variance_min_width(range, d1, stage);
                dhs2_variance_interval(&center, &var, cfg.interval_params(stage), count, range, floor)?
            }
            (Some(c), Strategy::Epipolar) => dhs3_epipolar(
                &upsample_depth(&c.depth, w, h)?,
                &level.cameras[0],
                &level.cameras[1..],
                count,
                cfg.epipolar_step,
                range,
                0.5 * cfg.handcrafted_width(stage),
            )?,
        };
        drop(carry.take());
        let widths = WidthStats::from_widths(&hyps.interval_widths(w, h));

        let sources: Vec<SourceView<'_>> = level.features[1..]
            .iter()
            .zip(&level.cameras[1..])
            .map(|(features, camera)| SourceView { features, camera })
            .collect();
        let cv = build_cost_volume(&level.features[0], &level.cameras[0], &sources, &hyps, cfg.groups)?;
        let agg = aggregate(&cv, cfg.aggregation_radius)?;
        let cv_bytes = cv.byte_size();
        drop(cv);
        let pv = softmax_volume(&agg, hyps, cfg.score_scale)?;
        let peak_bytes = (cv_bytes + agg.byte_size()).max(agg.byte_size() + pv.byte_size());
        drop(agg);

        let invalid = pv.invalid_fraction();
        if invalid >= cfg.abort_invalid_fraction {
            return Err(Error::DegenerateStage {
                stage,
                invalid: 100.0 * invalid,
            });
        }
        let (depth, confidence) = regress_depth(&pv);
        if depth.data().iter().any(|d| !d.is_finite()) {
            return Err(Error::Numerical(format!("stage {stage} depth map")));
        }
        observe(stage, &pv);

        let next_uses_variance =
            stage < levels && cfg.strategy.strategy(stage + 1)? == Strategy::VarianceInterval;
        let variance_basis = if next_uses_variance {
            let filtered;
            let source = if cfg.auf && cfg.variance_source == VarianceSource::PostAuf {
                filtered = auf_filter(&pv, &confidence, &unimodal)?;
                &filtered
            } else {
                &pv
            };
            let (center, _) = regress_depth(source);
            let sigma = pixel_variance(source, &center)?.map(f64::sqrt);
            Some((center, sigma))
        } else {
            None
        };

        trace.stages.push(StageRecord {
            stage,
            strategy,
            width: w,
            height: h,
            hypotheses: count,
            widths,
            invalid_fraction: invalid,
            seconds: start.seconds(),
            volume_bytes: cv_bytes,
            peak_bytes,
            depth: depth.clone(),
            confidence: confidence.clone(),
        });
        carry = Some(Carry {
            depth: depth.clone(),
            variance_basis,
        });
        last = Some((depth, confidence, pv));
    }
    let (depth, confidence, pv) = last.expect("at least two stages");
    Ok(PipelineOutput {
        depth,
        confidence,
        trace,
        final_volume: cfg.keep_final_volume.then_some(pv),
    })
}
