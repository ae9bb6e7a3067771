use std::path::Path;

use super::cost_volume::CostVolume;
use crate::error::{Error, Result};
use crate::ingest::{write_pfm, ConfidenceMap, DepthMap, Image};
use crate::sampling::DepthHypotheses;

const SUM_TOLERANCE: f64 = 1e-5;

/// Per-pixel distributions over the stage's depth hypotheses.
#[derive(Clone, Debug, PartialEq)]
pub struct ProbabilityVolume {
    width: usize,
    height: usize,
    count: usize,
    data: Vec<f64>,
    hypotheses: DepthHypotheses,
    valid: Vec<bool>,
}

impl ProbabilityVolume {
    /// Checks that every row is non-negative and sums to one.
    pub fn new(
        width: usize,
        height: usize,
        data: Vec<f64>,
        hypotheses: DepthHypotheses,
        valid: Vec<bool>,
    ) -> Result<Self> {
        let count = hypotheses.count();
        hypotheses.check_dims(width, height)?;
        if data.len() != width * height * count || valid.len() != width * height {
            return Err(Error::Dimensions(format!(
                "{width}x{height}x{count} volume: got {} probabilities, {} flags",
                data.len(),
                valid.len()
            )));
        }
        for (i, row) in data.chunks_exact(count).enumerate() {
            let sum: f64 = row.iter().sum();
            if row.iter().any(|p| !(*p >= 0.0)) || (sum - 1.0).abs() > SUM_TOLERANCE {
                return Err(Error::Numerical(format!(
                    "pixel {i} is not a distribution (sum {sum})"
                )));
            }
        }
        Ok(Self {
            width,
            height,
            count,
            data,
            hypotheses,
            valid,
        })
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn count(&self) -> usize {
        self.count
    }

    pub fn pixel_count(&self) -> usize {
        self.width * self.height
    }

    pub fn data(&self) -> &[f64] {
        &self.data
    }

    #[inline]
    pub fn row(&self, i: usize) -> &[f64] {
        &self.data[i * self.count..(i + 1) * self.count]
    }

    #[inline]
    pub fn depths(&self, i: usize) -> &[f64] {
        self.hypotheses.at_index(i)
    }

    pub fn hypotheses(&self) -> &DepthHypotheses {
        &self.hypotheses
    }

    /// Pixels with at least one valid hypothesis.
    pub fn valid(&self) -> &[bool] {
        &self.valid
    }

    pub fn invalid_fraction(&self) -> f64 {
        self.valid.iter().filter(|v| !**v).count() as f64 / self.valid.len().max(1) as f64
    }

    pub fn byte_size(&self) -> usize {
        self.data.len() * 8 + self.valid.len() + self.hypotheses.byte_size()
    }

    /// Same hypotheses and flags with new rows produced by `f(pixel, row)`.
    pub fn map_rows<F>(&self, f: F) -> Result<ProbabilityVolume>
    where
        F: Fn(usize, &[f64]) -> Vec<f64> + Sync + Send,
    {
        let count = self.count;
        let mut data = vec![0.0; self.data.len()];
        crate::par::for_each_row(&mut data, count, |i, out| {
            out.copy_from_slice(&f(i, self.row(i)));
        });
        ProbabilityVolume::new(
            self.width,
            self.height,
            data,
            self.hypotheses.clone(),
            self.valid.clone(),
        )
    }

    pub fn into_hypotheses(self) -> DepthHypotheses {
        self.hypotheses
    }
}

/// Max-subtracted softmax over the entries flagged `true` in `valid`;
/// excluded entries get probability zero. Returns `false` (and a uniform
/// distribution) when nothing is valid.
pub fn softmax_masked(scores: &[f64], valid: &[bool], out: &mut [f64]) -> bool {
    let max = scores
        .iter()
        .zip(valid)
        .filter(|(_, v)| **v)
        .map(|(s, _)| *s)
        .fold(f64::NEG_INFINITY, f64::max);
    if max == f64::NEG_INFINITY {
        let u = 1.0 / out.len() as f64;
        out.iter_mut().for_each(|p| *p = u);
        return false;
    }
    let mut sum = 0.0;
    for ((o, s), v) in out.iter_mut().zip(scores).zip(valid) {
        *o = if *v { (s - max).exp() } else { 0.0 };
        sum += *o;
    }
    out.iter_mut().for_each(|o| *o /= sum);
    true
}

/// Numerically stable softmax of a score vector.
pub fn softmax(scores: &[f64]) -> Vec<f64> {
    let mut out = vec![0.0; scores.len()];
    softmax_masked(scores, &vec![true; scores.len()], &mut out);
    out
}

/// Turns an aggregated single-group volume into probabilities with
/// `softmax(scale · score)`, skipping masked depths.
pub fn softmax_volume(
    scores: &CostVolume,
    hypotheses: DepthHypotheses,
    scale: f64,
) -> Result<ProbabilityVolume> {
    if scores.groups() != 1 {
        return Err(Error::InvalidArgument(format!(
            "softmax expects an aggregated volume, got {} groups",
            scores.groups()
        )));
    }
    if hypotheses.count() != scores.depths() {
        return Err(Error::Dimensions(format!(
            "{} hypotheses for a volume with {} depths",
            hypotheses.count(),
            scores.depths()
        )));
    }
    let (w, h, d) = (scores.width(), scores.height(), scores.depths());
    let mut data = vec![0.0; w * h * d];
    let mut valid = vec![false; w * h];
    let mut flags = vec![false; d];
    let mut s = vec![0.0; d];
    for (i, (row, ok)) in data.chunks_exact_mut(d).zip(valid.iter_mut()).enumerate() {
        for j in 0..d {
            s[j] = scale * scores.cell(i, j)[0] as f64;
            flags[j] = scores.mask_at(i, j) > 0;
        }
        *ok = softmax_masked(&s, &flags, row);
    }
    ProbabilityVolume::new(w, h, data, hypotheses, valid)
}

/// Soft-argmax depth `Σ_j P_j d_j` and peak probability as confidence.
pub fn regress_depth(pv: &ProbabilityVolume) -> (DepthMap, ConfidenceMap) {
    let n = pv.pixel_count();
    let mut depth = Vec::with_capacity(n);
    let mut conf = Vec::with_capacity(n);
    for i in 0..n {
        let (p, d) = (pv.row(i), pv.depths(i));
        let e: f64 = p.iter().zip(d).map(|(p, d)| p * d).sum();
        // Rounding can push the expectation a hair outside the span.
        depth.push(e.clamp(d[0], d[d.len() - 1]));
        conf.push(p.iter().cloned().fold(0.0, f64::max));
    }
    (
        DepthMap::new(pv.width(), pv.height(), depth).expect("sizes match"),
        ConfidenceMap::new(pv.width(), pv.height(), conf).expect("sizes match"),
    )
}

/// Writes one PFM per hypothesis slice, `{prefix}_{j:03}.pfm`.
pub fn dump_volume(pv: &ProbabilityVolume, dir: impl AsRef<Path>, prefix: &str) -> Result<()> {
    let dir = dir.as_ref();
    std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    for j in 0..pv.count() {
        let slice = (0..pv.pixel_count()).map(|i| pv.row(i)[j] as f32).collect();
        let img = Image::new(pv.width(), pv.height(), 1, slice)?;
        write_pfm(&img, dir.join(format!("{prefix}_{j:03}.pfm")))?;
    }
    Ok(())
}
