//! Synthetic scenes with analytic ground truth and DTU-style metrics.

mod metrics;
mod render;
mod scene;
mod texture;

pub use self::metrics::{eval_cloud, eval_depth, CloudMetrics, DepthStats, PointGrid};
pub use self::render::{render_scene, write_scene, SyntheticScene};
pub use self::scene::{RigSpec, SceneSpec, Surface, TextureSpec, PRESETS};
pub use self::texture::ValueNoise;
