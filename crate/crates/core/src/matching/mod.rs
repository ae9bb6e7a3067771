//! Hand-crafted features, plane-sweep cost volumes, aggregation, softmax and
//! soft-argmax regression.

mod aggregate;
mod cost_volume;
mod features;
mod probability;

pub use self::aggregate::aggregate;
pub use self::cost_volume::{build_cost_volume, groupwise_correlation, CostVolume, SourceView};
pub use self::features::{extract_features, FeatureMap, FILTER_SUPPORT};
pub use self::probability::{dump_volume, regress_depth, softmax, softmax_volume, ProbabilityVolume};
