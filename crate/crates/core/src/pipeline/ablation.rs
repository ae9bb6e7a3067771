use nalgebra::Point2;

use crate::error::{Error, Result};
use crate::ingest::{DepthMap, PipelineConfig};
use crate::sampling::{Schedule, WidthStats};
use crate::synth::{eval_depth, DepthStats, SyntheticScene};

use super::{run_pipeline, run_pipeline_with, PipelineOutput, ViewSet};

/// Pixels at least `margin` away from every border.
pub fn interior_mask(width: usize, height: usize, margin: usize) -> Vec<bool> {
    let mut m = vec![false; width * height];
    for y in margin..height.saturating_sub(margin) {
        for x in margin..width.saturating_sub(margin) {
            m[y * width + x] = true;
        }
    }
    m
}

/// Analytic reference-view depth on the grid of pyramid level `level`
/// (0 = finest) restricted to `width`×`height`.
pub fn scene_depth_at_level(
    scene: &SyntheticScene,
    reference: usize,
    level: usize,
    width: usize,
    height: usize,
) -> DepthMap {
    let s = (1usize << level) as f64;
    DepthMap::from_fn(width, height, |x, y| {
        scene
            .depth_at(
                reference,
                &Point2::new((x as f64 + 0.5) * s, (y as f64 + 0.5) * s),
            )
            .unwrap_or(0.0)
    })
}

/// Margin used for end-to-end evaluation: two pixels of the coarsest level.
pub fn evaluation_margin(levels: usize) -> usize {
    2 << (levels - 1)
}

/// Evaluates a finest-level estimate of view 0 against the scene.
pub fn evaluate_output(
    scene: &SyntheticScene,
    out: &PipelineOutput,
    levels: usize,
    spacing: f64,
) -> Result<DepthStats> {
    let (w, h) = (out.depth.width(), out.depth.height());
    let gt = scene_depth_at_level(scene, 0, 0, w, h);
    let mask = interior_mask(w, h, evaluation_margin(levels));
    eval_depth(&out.depth, &gt, spacing, Some(&mask))
}

#[derive(Clone, Debug)]
pub struct AblationRow {
    pub schedule: Schedule,
    pub stats: DepthStats,
    /// Spacing the stats were measured against.
    pub spacing: f64,
    /// This schedule's own final median spacing.
    pub own_spacing: f64,
    pub stage_widths: Vec<WidthStats>,
    pub stage1_depth: DepthMap,
}

/// Runs the pipeline on view 0 of `scene` once per schedule and scores each
/// result against the analytic depth. All rows share one spacing: `spacing`
/// if given, else the full schedule's final median spacing.
pub fn ablation_run(
    scene: &SyntheticScene,
    cfg: &PipelineConfig,
    schedules: &[Schedule],
    spacing: Option<f64>,
) -> Result<Vec<AblationRow>> {
    if schedules.is_empty() {
        return Err(Error::InvalidArgument("no schedules to compare".into()));
    }
    let views = ViewSet::from_scene(scene, 0)?;
    let outputs = schedules
        .iter()
        .map(|s| {
            let cfg = PipelineConfig {
                strategy: *s,
                ..cfg.clone()
            };
            run_pipeline(&views, &cfg)
        })
        .collect::<Result<Vec<_>>>()?;
    let spacing = match spacing {
        Some(s) => s,
        None => match schedules.iter().position(|s| *s == Schedule::Full) {
            Some(i) => outputs[i].trace.finest_spacing().expect("non-empty trace"),
            None => {
                let full = PipelineConfig {
                    strategy: Schedule::Full,
                    ..cfg.clone()
                };
                run_pipeline(&views, &full)?
                    .trace
                    .finest_spacing()
                    .expect("non-empty trace")
            }
        },
    };
    schedules
        .iter()
        .zip(outputs)
        .map(|(s, out)| {
            Ok(AblationRow {
                schedule: *s,
                stats: evaluate_output(scene, &out, cfg.num_levels, spacing)?,
                spacing,
                own_spacing: out.trace.finest_spacing().expect("non-empty trace"),
                stage_widths: out.trace.stages.iter().map(|r| r.widths).collect(),
                stage1_depth: out.trace.stages[0].depth.clone(),
            })
        })
        .collect()
}

#[derive(Clone, Debug, PartialEq)]
pub struct CalibrationRow {
    pub alpha: f64,
    pub beta: f64,
    /// Fraction of interior pixels whose true depth lies inside the stage-2
    /// interval.
    pub coverage: f64,
    pub median_width: f64,
    /// Final fraction within one final spacing.
    pub within_one: f64,
}

/// Sweeps the stage-2 variance-interval parameters on `scene` under the
/// full schedule.
pub fn calibrate_interval(
    scene: &SyntheticScene,
    cfg: &PipelineConfig,
    alphas: &[f64],
    betas: &[f64],
) -> Result<Vec<CalibrationRow>> {
    let views = ViewSet::from_scene(scene, 0)?;
    let mut rows = Vec::new();
    for &alpha in alphas {
        for &beta in betas {
            let run_cfg = PipelineConfig {
                strategy: Schedule::Full,
                interval_alpha: vec![alpha],
                interval_beta: vec![beta],
                ..cfg.clone()
            };
            let level = run_cfg.num_levels - 2;
            let mut coverage = 0.0;
            let out = run_pipeline_with(&views, &run_cfg, |stage, pv| {
                if stage != 2 {
                    return;
                }
                let (w, h) = (pv.width(), pv.height());
                let gt = scene_depth_at_level(scene, 0, level, w, h);
                let mask = interior_mask(w, h, 2);
                let (mut hit, mut n) = (0usize, 0usize);
                for i in (0..w * h).filter(|i| mask[*i] && gt.data()[*i] > 0.0) {
                    let d = pv.depths(i);
                    let g = gt.data()[i];
                    n += 1;
                    if g >= d[0] && g <= d[d.len() - 1] {
                        hit += 1;
                    }
                }
                coverage = hit as f64 / n.max(1) as f64;
            })?;
            let spacing = out.trace.finest_spacing().expect("non-empty trace");
            let stats = evaluate_output(scene, &out, run_cfg.num_levels, spacing)?;
            rows.push(CalibrationRow {
                alpha,
                beta,
                coverage,
                median_width: out.trace.stages[1].widths.median,
                within_one: stats.within[0],
            });
        }
    }
    Ok(rows)
}
