use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::matching::softmax;

/// Exponent sign of the focal weight `(1 − P)^(∓γ)`.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum FocalWeighting {
    /// `(1 − P)^(−γ)`: weight grows with the reference probability.
    #[default]
    Printed,
    /// `(1 − P)^(+γ)`: the usual focal-loss down-weighting.
    Conventional,
}

/// Sharpness parameters of the reference distribution and focal exponent.
///
/// `alpha_c` and `beta_c` are expressed in units of hypothesis spacing when
/// used by the filter.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct UnimodalParams {
    pub alpha_c: f64,
    pub beta_c: f64,
    pub gamma: f64,
    pub weighting: FocalWeighting,
}

impl UnimodalParams {
    pub fn new(alpha_c: f64, beta_c: f64, gamma: f64, weighting: FocalWeighting) -> Result<Self> {
        if !(beta_c > 0.0 && beta_c.is_finite()) {
            return Err(Error::Config(format!("beta_c must be positive, got {beta_c}")));
        }
        if !(alpha_c >= 0.0 && alpha_c.is_finite()) {
            return Err(Error::Config(format!("alpha_c must be >= 0, got {alpha_c}")));
        }
        if !(gamma >= 0.0 && gamma.is_finite()) {
            return Err(Error::Config(format!("gamma must be >= 0, got {gamma}")));
        }
        Ok(Self {
            alpha_c,
            beta_c,
            gamma,
            weighting,
        })
    }
}

impl Default for UnimodalParams {
    fn default() -> Self {
        Self {
            alpha_c: 13.0,
            beta_c: 9.0,
            gamma: 0.0,
            weighting: FocalWeighting::Printed,
        }
    }
}

/// `softmax_j(−|d_j − d_gt| / σ)` over the hypothesis depths.
pub fn reference_unimodal(hypotheses: &[f64], d_gt: f64, sigma: f64) -> Result<Vec<f64>> {
    if !(sigma > 0.0) {
        return Err(Error::InvalidArgument(format!(
            "sigma must be positive, got {sigma}"
        )));
    }
    let scores: Vec<f64> = hypotheses.iter().map(|d| -(d - d_gt).abs() / sigma).collect();
    Ok(softmax(&scores))
}

/// `σ = α_c·(1 − f) + β_c`.
pub fn sigma_from_confidence(confidence: f64, params: &UnimodalParams) -> f64 {
    params.alpha_c * (1.0 - confidence) + params.beta_c
}
