//! Cross-view consistency filtering of per-view depth maps and fusion into a
//! colored point cloud.

mod cloud;
mod consistency;
mod ply;

pub use self::cloud::{dedup, fuse, FusedPoint, FusedPointCloud, FusionView};
pub use self::consistency::{consistency_check, lands_in_grid, Consistency};
pub use self::ply::{decode_ply, encode_ply, read_ply, write_ply};
