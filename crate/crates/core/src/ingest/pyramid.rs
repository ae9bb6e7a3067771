use super::camera::CameraParams;
use super::image::Image;
use crate::error::{Error, Result};

/// Smallest allowed side length of the coarsest level.
pub const MIN_COARSEST_SIDE: usize = 8;

/// Images and matching cameras, coarsest level first.
#[derive(Clone, Debug)]
pub struct ImagePyramid {
    pub levels: Vec<Image>,
    pub cameras: Vec<CameraParams>,
}

impl ImagePyramid {
    pub fn num_levels(&self) -> usize {
        self.levels.len()
    }

    pub fn finest(&self) -> &Image {
        self.levels.last().expect("pyramids are never empty")
    }

    pub fn coarsest(&self) -> &Image {
        &self.levels[0]
    }
}

fn downsample(img: &Image) -> Image {
    let (w, h, c) = (img.width() / 2, img.height() / 2, img.channels());
    let mut data = Vec::with_capacity(w * h * c);
    for y in 0..h {
        for x in 0..w {
            for ch in 0..c {
                let s = img.get(2 * x, 2 * y, ch)
                    + img.get(2 * x + 1, 2 * y, ch)
                    + img.get(2 * x, 2 * y + 1, ch)
                    + img.get(2 * x + 1, 2 * y + 1, ch);
                data.push(0.25 * s);
            }
        }
    }
    Image::new(w, h, c, data).expect("box filter keeps samples finite")
}

/// Builds an `levels`-level pyramid by repeated 2×2 box averaging.
///
/// The input is first cropped (right and bottom) to a multiple of
/// `2^(levels-1)` so every level halves exactly; level `j` then has
/// `W / 2^(levels-1-j)` columns and its intrinsics are scaled by the same
/// factor.
pub fn build_pyramid(img: &Image, cam: &CameraParams, levels: usize) -> Result<ImagePyramid> {
    if levels < 2 {
        return Err(Error::InvalidArgument(format!(
            "a pyramid needs at least 2 levels, got {levels}"
        )));
    }
    let factor = 1usize << (levels - 1);
    let (cw, ch) = (img.width() / factor, img.height() / factor);
    if cw < MIN_COARSEST_SIDE || ch < MIN_COARSEST_SIDE {
        return Err(Error::TooSmall {
            width: img.width(),
            height: img.height(),
            reason: format!("coarsest level of {levels} would be {cw}x{ch}, below {MIN_COARSEST_SIDE} px"),
        });
    }
    let finest = if img.width() == cw * factor && img.height() == ch * factor {
        img.clone()
    } else {
        img.crop(cw * factor, ch * factor)?
    };

    let mut levels_fine_first = vec![finest];
    let mut cameras_fine_first = vec![cam.clone()];
    for k in 1..levels {
        let next = downsample(levels_fine_first.last().unwrap());
        levels_fine_first.push(next);
        cameras_fine_first.push(cam.scaled(1.0 / (1u64 << k) as f64));
    }
    levels_fine_first.reverse();
    cameras_fine_first.reverse();
    Ok(ImagePyramid {
        levels: levels_fine_first,
        cameras: cameras_fine_first,
    })
}
