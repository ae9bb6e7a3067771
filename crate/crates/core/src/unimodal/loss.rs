use crate::error::{Error, Result};
use crate::ingest::{DepthMap, PipelineConfig};

use super::distribution::FocalWeighting;

/// Lower bound on `1 − P` inside the focal weight.
pub const FOCAL_CLAMP: f64 = 1e-6;

/// Loss value and its gradient with respect to the predicted logits.
#[derive(Clone, Debug, PartialEq)]
pub struct FocalLoss {
    pub value: f64,
    pub grad: Vec<f64>,
}

fn log_softmax(z: &[f64], out: &mut [f64]) {
    let max = z.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let lse = max + z.iter().map(|v| (v - max).exp()).sum::<f64>().ln();
    for (o, v) in out.iter_mut().zip(z) {
        *o = v - lse;
    }
}

fn focal_weight(p: f64, gamma: f64, weighting: FocalWeighting) -> f64 {
    let base = (1.0 - p).max(FOCAL_CLAMP);
    match weighting {
        FocalWeighting::Printed => base.powf(-gamma),
        FocalWeighting::Conventional => base.powf(gamma),
    }
}

/// Stereo focal loss between reference distributions `p_ref` and the
/// softmax of predicted `logits`, both laid out as pixels × `count`:
///
/// `L = (1/N) Σ_i Σ_d w_id · (−P_id · log P̂_id)` with focal weight
/// `w = (1 − P)^(∓γ)`, clamped at `1 − P ≥ FOCAL_CLAMP`.
pub fn stereo_focal_loss(
    p_ref: &[f64],
    logits: &[f64],
    count: usize,
    gamma: f64,
    weighting: FocalWeighting,
) -> Result<FocalLoss> {
    if count == 0 || p_ref.len() != logits.len() || !p_ref.len().is_multiple_of(count) || p_ref.is_empty() {
        return Err(Error::Dimensions(format!(
            "{} reference and {} predicted values for {count} hypotheses",
            p_ref.len(),
            logits.len()
        )));
    }
    if !(gamma >= 0.0) {
        return Err(Error::InvalidArgument(format!("gamma must be >= 0, got {gamma}")));
    }
    let pixels = p_ref.len() / count;
    let inv_n = 1.0 / pixels as f64;
    let mut value = 0.0;
    let mut grad = vec![0.0; logits.len()];
    let mut logp = vec![0.0; count];
    let mut coeff = vec![0.0; count];
    for ((p, z), g) in p_ref
        .chunks_exact(count)
        .zip(logits.chunks_exact(count))
        .zip(grad.chunks_exact_mut(count))
    {
        let sum: f64 = p.iter().sum();
        if p.iter().any(|v| !(*v >= 0.0)) || (sum - 1.0).abs() > 1e-6 {
            return Err(Error::InvalidArgument(format!(
                "reference row is not a distribution (sum {sum})"
            )));
        }
        log_softmax(z, &mut logp);
        for d in 0..count {
            coeff[d] = focal_weight(p[d], gamma, weighting) * p[d];
            value -= coeff[d] * logp[d];
        }
        let total: f64 = coeff.iter().sum();
        for d in 0..count {
            g[d] = inv_n * (total * logp[d].exp() - coeff[d]);
        }
    }
    Ok(FocalLoss {
        value: value * inv_n,
        grad,
    })
}

fn check_confidences(f: &[f64]) -> Result<()> {
    if f.is_empty() {
        return Err(Error::InvalidArgument("no confidences".into()));
    }
    if let Some(v) = f.iter().find(|v| !(**v > 0.0 && **v <= 1.0)) {
        return Err(Error::InvalidArgument(format!(
            "confidence must lie in (0, 1], got {v}"
        )));
    }
    Ok(())
}

/// Mean negative log confidence.
pub fn confidence_loss(f: &[f64]) -> Result<f64> {
    check_confidences(f)?;
    Ok(f.iter().map(|v| -v.ln()).sum::<f64>() / f.len() as f64)
}

pub fn confidence_loss_gradient(f: &[f64]) -> Result<Vec<f64>> {
    check_confidences(f)?;
    let n = f.len() as f64;
    Ok(f.iter().map(|v| -1.0 / (n * v)).collect())
}

fn checked_pairs<'a>(
    dm: &'a DepthMap,
    gt: &'a DepthMap,
    mask: &'a [bool],
) -> Result<impl Iterator<Item = (f64, f64)> + 'a> {
    if !dm.same_dims(gt) || mask.len() != dm.len() {
        return Err(Error::Dimensions(
            "depth, ground truth and mask differ in size".into(),
        ));
    }
    if !mask.iter().any(|m| *m) {
        return Err(Error::InvalidArgument("empty regression mask".into()));
    }
    Ok(dm
        .data()
        .iter()
        .zip(gt.data())
        .zip(mask)
        .filter(|(_, m)| **m)
        .map(|((d, g), _)| (*d, *g)))
}

/// Sum of absolute depth errors over masked pixels.
pub fn regression_loss(dm: &DepthMap, gt: &DepthMap, mask: &[bool]) -> Result<f64> {
    Ok(checked_pairs(dm, gt, mask)?.map(|(d, g)| (d - g).abs()).sum())
}

/// Mean absolute depth error over masked pixels.
pub fn regression_loss_mean(dm: &DepthMap, gt: &DepthMap, mask: &[bool]) -> Result<f64> {
    let (s, n) =
        checked_pairs(dm, gt, mask)?.fold((0.0, 0usize), |(s, n), (d, g)| (s + (d - g).abs(), n + 1));
    Ok(s / n as f64)
}

/// Balancing weights of the total loss.
#[derive(Clone, Debug, PartialEq)]
pub struct LossWeights {
    pub lambda_sf: f64,
    pub lambda_c: f64,
    /// Per-stage regression weights; extra stages reuse the last entry.
    pub stage: Vec<f64>,
}

impl Default for LossWeights {
    fn default() -> Self {
        Self::from_config(&PipelineConfig::default())
    }
}

impl LossWeights {
    pub fn from_config(cfg: &PipelineConfig) -> Self {
        Self {
            lambda_sf: cfg.lambda_sf,
            lambda_c: cfg.lambda_c,
            stage: cfg.stage_weights.clone(),
        }
    }

    fn stage_weight(&self, i: usize) -> f64 {
        self.stage[i.min(self.stage.len() - 1)]
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct LossParts {
    pub stereo_focal: f64,
    pub confidence: f64,
    pub regression: Vec<f64>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct LossBreakdown {
    pub stereo_focal: f64,
    pub confidence: f64,
    pub regression: Vec<f64>,
    pub total: f64,
}

/// `λ_SF·L_SF + λ_C·L_C + Σ_l ω_l·L_reg,l`.
pub fn total_loss(parts: &LossParts, weights: &LossWeights) -> Result<LossBreakdown> {
    if weights.stage.is_empty() {
        return Err(Error::InvalidArgument("no stage weights".into()));
    }
    let all = [parts.stereo_focal, parts.confidence];
    if all.iter().chain(&parts.regression).any(|v| !v.is_finite()) {
        return Err(Error::Numerical("loss part".into()));
    }
    let reg: f64 = parts
        .regression
        .iter()
        .enumerate()
        .map(|(i, r)| weights.stage_weight(i) * r)
        .sum();
    Ok(LossBreakdown {
        stereo_focal: parts.stereo_focal,
        confidence: parts.confidence,
        regression: parts.regression.clone(),
        total: weights.lambda_sf * parts.stereo_focal + weights.lambda_c * parts.confidence + reg,
    })
}

/// Partial derivatives of the total with respect to
/// `[L_SF, L_C, L_reg,1, …, L_reg,stages]`.
pub fn total_loss_gradient(weights: &LossWeights, stages: usize) -> Vec<f64> {
    let mut g = vec![weights.lambda_sf, weights.lambda_c];
    g.extend((0..stages).map(|i| weights.stage_weight(i)));
    g
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::matching::softmax;
    use rand::{Rng, SeedableRng};

    #[test]
    fn gamma_zero_is_cross_entropy() {
        let l = stereo_focal_loss(&[1.0, 0.0], &[0.3, 0.3], 2, 0.0, FocalWeighting::Printed).unwrap();
        assert!((l.value - std::f64::consts::LN_2).abs() < 1e-12);
        assert!((l.value - std::f64::consts::LN_2).abs() < 1e-12);
        let l = stereo_focal_loss(
            &[0.0, 1.0, 0.0],
            &[-60.0, 60.0, -60.0],
            3,
            0.0,
            FocalWeighting::Printed,
        )
        .unwrap();
        assert!(l.value.abs() < 1e-12);
    }

    #[test]
    fn one_hot_reference_with_focus_is_clamped() {
        let l = stereo_focal_loss(&[0.0, 1.0], &[0.0, 0.0], 2, 2.0, FocalWeighting::Printed).unwrap();
        let expected = FOCAL_CLAMP.powf(-2.0) * std::f64::consts::LN_2;
        assert!((l.value - expected).abs() / expected < 1e-12);
        assert!(l.value.is_finite());
    }

    #[test]
    fn weighting_signs_differ() {
        let p = [0.2, 0.7, 0.1];
        let z = [0.1, 0.5, -0.3];
        let a = stereo_focal_loss(&p, &z, 3, 1.0, FocalWeighting::Printed).unwrap();
        let b = stereo_focal_loss(&p, &z, 3, 1.0, FocalWeighting::Conventional).unwrap();
        let ce = stereo_focal_loss(&p, &z, 3, 0.0, FocalWeighting::Printed).unwrap();
        assert!(a.value > ce.value && b.value < ce.value);
    }

    #[test]
    fn descent_converges_to_reference() {
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(5);
        for _ in 0..5 {
            let raw: Vec<f64> = (0..5).map(|_| rng.gen_range(0.05..1.0)).collect();
            let s: f64 = raw.iter().sum();
            let target: Vec<f64> = raw.iter().map(|v| v / s).collect();
            let mut z: Vec<f64> = (0..5).map(|_| rng.gen_range(-2.0..2.0)).collect();
            for _ in 0..5000 {
                let l = stereo_focal_loss(&target, &z, 5, 0.0, FocalWeighting::Printed).unwrap();
                z.iter_mut().zip(&l.grad).for_each(|(v, g)| *v -= 2.0 * g);
            }
            let p = softmax(&z);
            let tv: f64 = 0.5 * p.iter().zip(&target).map(|(a, b)| (a - b).abs()).sum::<f64>();
            assert!(tv < 1e-3, "tv {tv}");
        }
    }

    #[test]
    fn focal_rejects_bad_input() {
        assert!(stereo_focal_loss(&[0.5, 0.5], &[0.0], 2, 0.0, FocalWeighting::Printed).is_err());
        assert!(stereo_focal_loss(&[0.5, 0.6], &[0.0, 0.0], 2, 0.0, FocalWeighting::Printed).is_err());
        assert!(stereo_focal_loss(&[0.5, 0.5], &[0.0, 0.0], 2, -1.0, FocalWeighting::Printed).is_err());
    }

    #[test]
    fn confidence_loss_examples() {
        assert_eq!(confidence_loss(&[1.0, 1.0]).unwrap(), 0.0);
        assert!((confidence_loss(&[(-1.0f64).exp()]).unwrap() - 1.0).abs() < 1e-15);
        assert!(confidence_loss_gradient(&[0.3, 0.9])
            .unwrap()
            .iter()
            .all(|g| *g < 0.0));
        assert!(confidence_loss(&[0.0]).is_err());
        assert!(confidence_loss(&[]).is_err());
    }

    #[test]
    fn regression_loss_examples() {
        let gt = DepthMap::filled(2, 2, 600.0);
        assert_eq!(regression_loss(&gt, &gt, &[true; 4]).unwrap(), 0.0);
        let mut dm = gt.clone();
        dm.set(1, 0, 602.5);
        assert_eq!(regression_loss(&dm, &gt, &[true; 4]).unwrap(), 2.5);
        assert_eq!(regression_loss_mean(&dm, &gt, &[true; 4]).unwrap(), 0.625);
        assert_eq!(
            regression_loss(&dm, &gt, &[true, false, true, true]).unwrap(),
            0.0
        );
        assert!(regression_loss(&dm, &gt, &[false; 4]).is_err());
        assert!(regression_loss(&dm, &gt, &[true; 3]).is_err());
    }

    #[test]
    fn total_loss_examples() {
        let w = LossWeights::default();
        let zero = LossParts {
            stereo_focal: 0.0,
            confidence: 0.0,
            regression: vec![0.0; 3],
        };
        assert_eq!(total_loss(&zero, &w).unwrap().total, 0.0);
        let ones = LossParts {
            stereo_focal: 1.0,
            confidence: 1.0,
            regression: vec![1.0; 3],
        };
        assert!((total_loss(&ones, &w).unwrap().total - 93.5).abs() < 1e-9);
        let mut doubled = ones.clone();
        doubled.regression[2] = 2.0;
        let diff = total_loss(&doubled, &w).unwrap().total - 93.5;
        assert!((diff - 2.0).abs() < 1e-12);
        assert_eq!(total_loss_gradient(&w, 3), vec![10.0, 80.0, 0.5, 1.0, 2.0]);
    }
}
