//! Reference unimodal distributions, the loss suite that supervises a
//! cost-volume pipeline, and adaptive unimodal filtering at inference.

mod auf;
mod distribution;
pub mod gradcheck;
mod loss;

pub use self::auf::{auf_filter, auf_filter_row};
pub use self::distribution::{reference_unimodal, sigma_from_confidence, FocalWeighting, UnimodalParams};
pub use self::loss::{
    confidence_loss, confidence_loss_gradient, regression_loss, regression_loss_mean, stereo_focal_loss,
    total_loss, total_loss_gradient, FocalLoss, LossBreakdown, LossParts, LossWeights, FOCAL_CLAMP,
};
