use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::sampling::{IntervalParams, Schedule};
use crate::unimodal::{FocalWeighting, UnimodalParams};

/// Which stage-1 distribution feeds the stage-2 variance.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum VarianceSource {
    /// After adaptive unimodal filtering (when enabled).
    #[default]
    PostAuf,
    PreAuf,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct FusionParams {
    /// Round-trip reprojection tolerance in pixels.
    pub tau_px: f64,
    /// Relative depth tolerance.
    pub tau_rel: f64,
    /// Minimum number of supporting source views.
    pub min_support: usize,
    /// Voxel edge for duplicate suppression; `None` uses half the finest
    /// hypothesis spacing, `Some(0.0)` disables it.
    pub voxel_size: Option<f64>,
}

impl Default for FusionParams {
    fn default() -> Self {
        Self {
            tau_px: 1.0,
            tau_rel: 0.01,
            min_support: 2,
            voxel_size: None,
        }
    }
}

/// Run configuration. Every field has a default; a TOML document only needs
/// the keys it overrides.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PipelineConfig {
    /// Total number of pyramid levels (= stages).
    pub num_levels: usize,
    /// Hypotheses per stage; stages past the end reuse the last entry.
    pub hypotheses: Vec<usize>,
    pub channels: usize,
    pub groups: usize,
    pub aggregation_radius: usize,
    /// Inverse temperature applied to aggregated correlation before softmax.
    pub score_scale: f64,
    pub lambda_sf: f64,
    pub lambda_c: f64,
    /// Regression loss weight per stage; stages past the end reuse the last.
    pub stage_weights: Vec<f64>,
    /// Variance-interval scale per stage, starting at stage 2.
    pub interval_alpha: Vec<f64>,
    /// Variance-interval offset per stage (scene units), starting at stage 2.
    pub interval_beta: Vec<f64>,
    pub alpha_c: f64,
    pub beta_c: f64,
    pub gamma: f64,
    pub focal_weighting: FocalWeighting,
    /// Adaptive unimodal filtering of stage-1 distributions.
    pub auf: bool,
    pub variance_source: VarianceSource,
    /// Epipolar displacement in pixels per hypothesis step for the epipolar
    /// strategy.
    pub epipolar_step: f64,
    /// Interval widths (scene units) for uniform refinement, from stage 2.
    pub handcrafted_widths: Vec<f64>,
    pub strategy: Schedule,
    /// A stage with at least this fraction of invalid pixels aborts the run.
    pub abort_invalid_fraction: f64,
    /// Keep the last probability volume in the pipeline output.
    pub keep_final_volume: bool,
    pub fusion: FusionParams,
}

impl Default for PipelineConfig {
    fn default() -> Self {
        Self {
            num_levels: 3,
            hypotheses: vec![48, 32, 8],
            channels: 8,
            groups: 4,
            aggregation_radius: 2,
            score_scale: 16.0,
            lambda_sf: 10.0,
            lambda_c: 80.0,
            stage_weights: vec![0.5, 1.0, 2.0],
            interval_alpha: vec![1.0],
            interval_beta: vec![0.0],
            alpha_c: 13.0,
            beta_c: 9.0,
            gamma: 0.0,
            focal_weighting: FocalWeighting::default(),
            auf: true,
            variance_source: VarianceSource::default(),
            epipolar_step: 0.5,
            handcrafted_widths: vec![40.0, 20.0, 10.0, 5.0],
            strategy: Schedule::default(),
            abort_invalid_fraction: 0.9,
            keep_final_volume: false,
            fusion: FusionParams::default(),
        }
    }
}

fn per_stage<T: Copy>(values: &[T], index: usize) -> T {
    values[index.min(values.len() - 1)]
}

impl PipelineConfig {
    pub fn from_toml_str(text: &str) -> Result<Self> {
        let cfg: PipelineConfig = toml::from_str(text).map_err(|e| Error::Config(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::from_toml_str(&text)
    }

    pub fn to_toml_string(&self) -> String {
        toml::to_string(self).expect("config serializes")
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(Error::Config(m));
        if self.num_levels < 2 {
            return bad(format!("num_levels must be >= 2, got {}", self.num_levels));
        }
        if self.hypotheses.is_empty() || self.hypotheses.iter().any(|&d| d < 2) {
            return bad("every stage needs at least 2 hypotheses".into());
        }
        if ![4, 8, 16].contains(&self.channels) {
            return bad(format!("channels must be 4, 8 or 16, got {}", self.channels));
        }
        if self.groups == 0 || !self.channels.is_multiple_of(self.groups) {
            return bad(format!(
                "channels ({}) must be divisible by groups ({})",
                self.channels, self.groups
            ));
        }
        if !(self.score_scale > 0.0 && self.score_scale.is_finite()) {
            return bad("score_scale must be positive".into());
        }
        let weights = [self.lambda_sf, self.lambda_c];
        if weights
            .iter()
            .chain(&self.stage_weights)
            .any(|w| !(*w >= 0.0 && w.is_finite()))
            || self.stage_weights.is_empty()
        {
            return bad("loss weights must be finite and >= 0".into());
        }
        if self.interval_alpha.is_empty() || self.interval_beta.is_empty() {
            return bad("interval_alpha and interval_beta need at least one entry".into());
        }
        if self
            .interval_alpha
            .iter()
            .chain(&self.interval_beta)
            .any(|v| !v.is_finite())
        {
            return bad("interval parameters must be finite".into());
        }
        UnimodalParams::new(self.alpha_c, self.beta_c, self.gamma, self.focal_weighting)?;
        if !(self.epipolar_step > 0.0) {
            return bad("epipolar_step must be positive".into());
        }
        if self.handcrafted_widths.is_empty() || self.handcrafted_widths.iter().any(|w| !(*w > 0.0)) {
            return bad("handcrafted_widths must be positive".into());
        }
        if !(self.abort_invalid_fraction > 0.0 && self.abort_invalid_fraction <= 1.0) {
            return bad("abort_invalid_fraction must lie in (0, 1]".into());
        }
        let f = &self.fusion;
        if !(f.tau_px > 0.0 && f.tau_rel > 0.0) || f.min_support < 1 {
            return bad("fusion thresholds must be positive and min_support >= 1".into());
        }
        if matches!(f.voxel_size, Some(v) if !(v >= 0.0)) {
            return bad("voxel_size must be >= 0".into());
        }
        Ok(())
    }

    /// Hypothesis count of 1-based `stage`.
    pub fn hypotheses_for(&self, stage: usize) -> usize {
        per_stage(&self.hypotheses, stage.saturating_sub(1))
    }

    /// Regression loss weight of 1-based `stage`.
    pub fn stage_weight(&self, stage: usize) -> f64 {
        per_stage(&self.stage_weights, stage.saturating_sub(1))
    }

    /// Variance-interval parameters for 1-based `stage` (≥ 2), clamped to be
    /// non-negative.
    pub fn interval_params(&self, stage: usize) -> IntervalParams {
        let i = stage.saturating_sub(2);
        IntervalParams::new(
            per_stage(&self.interval_alpha, i),
            per_stage(&self.interval_beta, i),
        )
    }

    /// Uniform-refinement interval width for 1-based `stage` (≥ 2). Stages
    /// past the list keep halving the last width.
    pub fn handcrafted_width(&self, stage: usize) -> f64 {
        let i = stage.saturating_sub(2);
        let n = self.handcrafted_widths.len();
        if i < n {
            self.handcrafted_widths[i]
        } else {
            self.handcrafted_widths[n - 1] / (1u64 << (i + 1 - n).min(60)) as f64
        }
    }

    pub fn unimodal_params(&self) -> UnimodalParams {
        UnimodalParams::new(self.alpha_c, self.beta_c, self.gamma, self.focal_weighting)
            .expect("validated configuration")
    }
}
