use serde::Serialize;

use crate::ingest::{ConfidenceMap, DepthMap};
use crate::sampling::{Strategy, WidthStats};

/// What one stage did.
#[derive(Clone, Debug)]
pub struct StageRecord {
    /// 1-based, coarsest first.
    pub stage: usize,
    pub strategy: Strategy,
    pub width: usize,
    pub height: usize,
    pub hypotheses: usize,
    /// Per-pixel hypothesis interval widths (scene units).
    pub widths: WidthStats,
    pub invalid_fraction: f64,
    pub seconds: f64,
    /// Size of the grouped cost volume.
    pub volume_bytes: usize,
    /// Largest amount of volume data alive at once during the stage.
    pub peak_bytes: usize,
    pub depth: DepthMap,
    pub confidence: ConfidenceMap,
}

impl StageRecord {
    /// Median distance between neighboring hypotheses.
    pub fn median_spacing(&self) -> f64 {
        self.widths.median / (self.hypotheses - 1) as f64
    }

    pub fn summary(&self) -> StageSummary {
        StageSummary {
            stage: self.stage,
            strategy: self.strategy.name(),
            width: self.width,
            height: self.height,
            hypotheses: self.hypotheses,
            width_min: self.widths.min,
            width_median: self.widths.median,
            width_max: self.widths.max,
            median_spacing: self.median_spacing(),
            invalid_fraction: self.invalid_fraction,
            mean_confidence: self.confidence.data().iter().sum::<f64>() / self.confidence.len().max(1) as f64,
            seconds: self.seconds,
            volume_bytes: self.volume_bytes,
            peak_bytes: self.peak_bytes,
        }
    }
}

/// Flat, serializable view of a [`StageRecord`] without the maps.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct StageSummary {
    pub stage: usize,
    pub strategy: &'static str,
    pub width: usize,
    pub height: usize,
    pub hypotheses: usize,
    pub width_min: f64,
    pub width_median: f64,
    pub width_max: f64,
    pub median_spacing: f64,
    pub invalid_fraction: f64,
    pub mean_confidence: f64,
    pub seconds: f64,
    pub volume_bytes: usize,
    pub peak_bytes: usize,
}

/// Stage records in execution order.
#[derive(Clone, Debug, Default)]
pub struct StageTrace {
    pub stages: Vec<StageRecord>,
}

impl StageTrace {
    pub fn len(&self) -> usize {
        self.stages.len()
    }

    pub fn is_empty(&self) -> bool {
        self.stages.is_empty()
    }

    pub fn last(&self) -> Option<&StageRecord> {
        self.stages.last()
    }

    /// Median hypothesis spacing of the final stage.
    pub fn finest_spacing(&self) -> Option<f64> {
        self.last().map(StageRecord::median_spacing)
    }

    pub fn summaries(&self) -> Vec<StageSummary> {
        self.stages.iter().map(StageRecord::summary).collect()
    }

    pub fn peak_bytes(&self) -> usize {
        self.stages.iter().map(|s| s.peak_bytes).max().unwrap_or(0)
    }

    pub fn largest_volume_bytes(&self) -> usize {
        self.stages.iter().map(|s| s.volume_bytes).max().unwrap_or(0)
    }
}
