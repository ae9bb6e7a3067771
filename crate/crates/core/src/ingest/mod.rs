//! Loading views, cameras and run configuration, and building image pyramids.

mod camera;
mod config;
mod image;
mod maps;
mod pfm;
mod pyramid;

pub use self::camera::{
    format_camera_dtu, parse_camera_dtu, read_camera_dtu, write_camera_dtu, CameraParams, DepthRange,
};
pub use self::config::{FusionParams, PipelineConfig, VarianceSource};
pub use self::image::{read_image, write_png, Image};
pub use self::maps::{ConfidenceMap, DepthMap, ScalarMap, VarianceMap};
pub use self::pfm::{decode_pfm, encode_pfm, read_pfm, write_pfm};
pub use self::pyramid::{build_pyramid, ImagePyramid, MIN_COARSEST_SIDE};
