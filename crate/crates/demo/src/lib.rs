//! Browser bindings: reconstruct a synthetic scene, inspect one pixel's
//! stage-1 distribution before and after unimodal filtering, and compare the
//! variance and epipolar hypothesis intervals.

use mvs_core::ingest::{CameraParams, DepthRange};
use mvs_core::matching::ProbabilityVolume;
use mvs_core::pipeline::{evaluate_output, run_pipeline_with, scene_depth_at_level, PipelineOutput, ViewSet};
use mvs_core::sampling::{dhs3_epipolar, distribution_variance, variance_interval, IntervalParams, Schedule};
use mvs_core::synth::{render_scene, DepthStats, SceneSpec, SyntheticScene};
use mvs_core::unimodal::{auf_filter_row, UnimodalParams};
use mvs_core::{DepthMap, PipelineConfig, ScalarMap};
use nalgebra::{Matrix3, Vector3};
use serde_json::json;
use wasm_bindgen::prelude::*;

const VIRIDIS: [[f64; 3]; 5] = [
    [68.0, 1.0, 84.0],
    [59.0, 82.0, 139.0],
    [33.0, 145.0, 140.0],
    [94.0, 201.0, 98.0],
    [253.0, 231.0, 37.0],
];

/// Maps `t` in [0, 1] onto a five-stop viridis ramp.
pub fn colormap(t: f64) -> [u8; 3] {
    let t = if t.is_finite() { t.clamp(0.0, 1.0) } else { 0.0 };
    let x = t * (VIRIDIS.len() - 1) as f64;
    let i = (x as usize).min(VIRIDIS.len() - 2);
    let f = x - i as f64;
    let mut out = [0u8; 3];
    for c in 0..3 {
        out[c] = (VIRIDIS[i][c] + f * (VIRIDIS[i + 1][c] - VIRIDIS[i][c])).round() as u8;
    }
    out
}

fn rgba_from_map(map: &ScalarMap, f: impl Fn(f64) -> Option<f64>) -> Vec<u8> {
    let mut out = Vec::with_capacity(map.len() * 4);
    for &v in map.data() {
        match f(v) {
            Some(t) => out.extend_from_slice(&colormap(t)),
            None => out.extend_from_slice(&[0, 0, 0]),
        }
        out.push(255);
    }
    out
}

/// One pipeline run on a synthetic scene, kept for inspection.
#[wasm_bindgen]
pub struct Reconstruction {
    preset: String,
    scene: SyntheticScene,
    cfg: PipelineConfig,
    out: PipelineOutput,
    stage1: ProbabilityVolume,
    gt: DepthMap,
    spacing: f64,
    stats: DepthStats,
}

impl Reconstruction {
    pub fn run(preset: &str, levels: usize, strategy: &str, auf: bool, seed: u64) -> Result<Self, String> {
        let spec = SceneSpec::preset(preset).map_err(|e| e.to_string())?;
        let scene = render_scene(&spec, seed).map_err(|e| e.to_string())?;
        let cfg = PipelineConfig {
            num_levels: levels,
            strategy: strategy.parse::<Schedule>().map_err(|e| e.to_string())?,
            auf,
            ..Default::default()
        };
        let views = ViewSet::from_scene(&scene, 0).map_err(|e| e.to_string())?;
        let mut stage1 = None;
        let out = run_pipeline_with(&views, &cfg, |stage, pv| {
            if stage == 1 {
                stage1 = Some(pv.clone());
            }
        })
        .map_err(|e| e.to_string())?;
        let spacing = out.trace.finest_spacing().ok_or("empty trace")?;
        let stats = evaluate_output(&scene, &out, levels, spacing).map_err(|e| e.to_string())?;
        let gt = scene_depth_at_level(&scene, 0, 0, out.depth.width(), out.depth.height());
        Ok(Self {
            preset: preset.to_string(),
            scene,
            cfg,
            out,
            stage1: stage1.ok_or("stage 1 never ran")?,
            gt,
            spacing,
            stats,
        })
    }

    pub fn stats(&self) -> &DepthStats {
        &self.stats
    }

    /// RGBA pixels of one layer: reference, depth, truth, error or confidence.
    pub fn layer(&self, kind: &str) -> Result<Vec<u8>, String> {
        let range = self.scene.spec.depth_range();
        let depth_t = |d: f64| (d > 0.0).then(|| (d - range.min) / range.width());
        Ok(match kind {
            "reference" => {
                let img = &self.scene.images[0];
                let (w, h) = (self.out.depth.width(), self.out.depth.height());
                let mut out = Vec::with_capacity(w * h * 4);
                for y in 0..h {
                    for x in 0..w {
                        out.extend_from_slice(&img.rgb8(x, y));
                        out.push(255);
                    }
                }
                out
            }
            "depth" => rgba_from_map(&self.out.depth, depth_t),
            "truth" => rgba_from_map(&self.gt, depth_t),
            "confidence" => rgba_from_map(&self.out.confidence, Some),
            "error" => {
                let err = ScalarMap::from_fn(self.gt.width(), self.gt.height(), |x, y| {
                    let g = self.gt.get(x, y);
                    if g > 0.0 {
                        (self.out.depth.get(x, y) - g).abs() / self.spacing
                    } else {
                        f64::NAN
                    }
                });
                rgba_from_map(&err, |e| e.is_finite().then_some(e / 4.0))
            }
            other => return Err(format!("unknown layer {other:?}")),
        })
    }

    /// Stage-1 distribution under full-resolution pixel `(x, y)`, before and
    /// after unimodal filtering with `(alpha_c, beta_c)`, and the variance
    /// intervals both would give with `(alpha, beta)`.
    pub fn probe(
        &self,
        x: usize,
        y: usize,
        alpha_c: f64,
        beta_c: f64,
        alpha: f64,
        beta: f64,
    ) -> Result<serde_json::Value, String> {
        let scale = 1usize << (self.cfg.num_levels - 1);
        let (sx, sy) = (x / scale, y / scale);
        if sx >= self.stage1.width() || sy >= self.stage1.height() {
            return Err(format!("pixel ({x}, {y}) is outside the image"));
        }
        let i = sy * self.stage1.width() + sx;
        let (p, d) = (self.stage1.row(i), self.stage1.depths(i));
        let confidence = p.iter().cloned().fold(0.0, f64::max);
        let base = self.cfg.unimodal_params();
        let params =
            UnimodalParams::new(alpha_c, beta_c, base.gamma, base.weighting).map_err(|e| e.to_string())?;
        let q = auf_filter_row(p, d, confidence, &params);
        let summary = |probs: &[f64]| {
            let mean: f64 = probs.iter().zip(d).map(|(a, b)| a * b).sum();
            let var = distribution_variance(probs, d, mean);
            let (lo, hi) = variance_interval(mean, var, IntervalParams::new(alpha, beta));
            json!({ "probs": probs, "mean": mean, "std": var.sqrt(), "interval": [lo, hi] })
        };
        Ok(json!({
            "depths": d,
            "confidence": confidence,
            "truth": self.gt.get(x, y),
            "before": summary(p),
            "after": summary(&q),
        }))
    }

    pub fn summary(&self) -> serde_json::Value {
        json!({
            "preset": self.preset,
            "width": self.out.depth.width(),
            "height": self.out.depth.height(),
            "spacing": self.spacing,
            "within_1": self.stats.within[0],
            "within_2": self.stats.within[1],
            "within_4": self.stats.within[2],
            "mean_abs": self.stats.mean_abs,
            "stages": self.out.trace.summaries(),
        })
    }
}

/// Variance interval around `d_hat` and the epipolar interval a rectified
/// pair with focal `focal` and baseline `baseline` gives at the same depth.
#[allow(clippy::too_many_arguments)]
pub fn intervals(
    d_hat: f64,
    variance: f64,
    alpha: f64,
    beta: f64,
    focal: f64,
    baseline: f64,
    step_px: f64,
    count: usize,
) -> Result<serde_json::Value, String> {
    if !(d_hat > 0.0 && focal > 0.0 && baseline > 0.0 && step_px > 0.0) || count < 2 {
        return Err("depth, focal, baseline and step must be positive, count >= 2".into());
    }
    let (lo, hi) = variance_interval(d_hat, variance, IntervalParams::new(alpha, beta));
    let range = DepthRange::new(1e-6 * d_hat, 1e6 * d_hat).map_err(|e| e.to_string())?;
    let cam = |cx: f64| {
        CameraParams::look(
            focal,
            (0.5, 0.5),
            Matrix3::identity(),
            Vector3::new(cx, 0.0, 0.0),
            range,
        )
    };
    let (r, s) = (
        cam(0.0).map_err(|e| e.to_string())?,
        cam(baseline).map_err(|e| e.to_string())?,
    );
    let hyps = dhs3_epipolar(
        &DepthMap::filled(1, 1, d_hat),
        &r,
        &[s],
        count,
        step_px,
        range,
        0.5 * d_hat,
    )
    .map_err(|e| e.to_string())?;
    let h = hyps.at_index(0);
    Ok(json!({
        "variance": [lo, hi],
        "epipolar": [h[0], h[count - 1]],
        "epipolar_samples": h,
        "closed_form_half_width": 0.5 * count as f64 * step_px * d_hat * d_hat / (focal * baseline),
    }))
}

#[wasm_bindgen]
impl Reconstruction {
    #[wasm_bindgen(constructor)]
    pub fn new(
        preset: &str,
        levels: usize,
        strategy: &str,
        auf: bool,
        seed: u32,
    ) -> Result<Reconstruction, JsError> {
        Self::run(preset, levels, strategy, auf, seed as u64).map_err(|e| JsError::new(&e))
    }

    #[wasm_bindgen(getter)]
    pub fn width(&self) -> usize {
        self.out.depth.width()
    }

    #[wasm_bindgen(getter)]
    pub fn height(&self) -> usize {
        self.out.depth.height()
    }

    #[wasm_bindgen(js_name = layerRgba)]
    pub fn layer_rgba(&self, kind: &str) -> Result<Vec<u8>, JsError> {
        self.layer(kind).map_err(|e| JsError::new(&e))
    }

    #[wasm_bindgen(js_name = summaryJson)]
    pub fn summary_json(&self) -> String {
        self.summary().to_string()
    }

    #[wasm_bindgen(js_name = probeJson)]
    pub fn probe_json(
        &self,
        x: usize,
        y: usize,
        alpha_c: f64,
        beta_c: f64,
        alpha: f64,
        beta: f64,
    ) -> Result<String, JsError> {
        self.probe(x, y, alpha_c, beta_c, alpha, beta)
            .map(|v| v.to_string())
            .map_err(|e| JsError::new(&e))
    }
}

#[allow(clippy::too_many_arguments)]
#[wasm_bindgen(js_name = intervalsJson)]
pub fn intervals_json(
    d_hat: f64,
    variance: f64,
    alpha: f64,
    beta: f64,
    focal: f64,
    baseline: f64,
    step_px: f64,
    count: usize,
) -> Result<String, JsError> {
    intervals(d_hat, variance, alpha, beta, focal, baseline, step_px, count)
        .map(|v| v.to_string())
        .map_err(|e| JsError::new(&e))
}
