use crate::error::{Error, Result};
use crate::ingest::Image;

/// Smallest image side the filters accept (5×5 local statistics).
pub const FILTER_SUPPORT: usize = 5;

const STD_FLOOR: f64 = 1e-6;
const LOCAL_RADIUS: isize = 2;

/// Per-pixel feature vectors, `height × width × channels`, row-major.
#[derive(Clone, Debug, PartialEq)]
pub struct FeatureMap {
    width: usize,
    height: usize,
    channels: usize,
    data: Vec<f32>,
}

impl FeatureMap {
    pub fn new(width: usize, height: usize, channels: usize, data: Vec<f32>) -> Result<Self> {
        if data.len() != width * height * channels {
            return Err(Error::Dimensions(format!(
                "{width}x{height}x{channels} features need {} values, got {}",
                width * height * channels,
                data.len()
            )));
        }
        if let Some(i) = data.iter().position(|v| !v.is_finite()) {
            return Err(Error::NonFinite(i));
        }
        Ok(Self {
            width,
            height,
            channels,
            data,
        })
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn channels(&self) -> usize {
        self.channels
    }

    pub fn data(&self) -> &[f32] {
        &self.data
    }

    #[inline]
    pub fn pixel(&self, x: usize, y: usize) -> &[f32] {
        let s = (y * self.width + x) * self.channels;
        &self.data[s..s + self.channels]
    }

    /// One channel as a `height × width` plane.
    pub fn channel(&self, c: usize) -> Vec<f32> {
        self.data.iter().skip(c).step_by(self.channels).copied().collect()
    }

    /// Bilinear sample at continuous pixel coordinates (centers at
    /// `i + 0.5`). Returns `false` without touching `out` when the position is
    /// outside the sample grid.
    #[inline]
    pub fn sample_bilinear(&self, u: f64, v: f64, out: &mut [f32]) -> bool {
        let fx = u - 0.5;
        let fy = v - 0.5;
        if !(fx >= 0.0 && fy >= 0.0) || fx > (self.width - 1) as f64 || fy > (self.height - 1) as f64 {
            return false;
        }
        let x0 = (fx as usize).min(self.width.saturating_sub(2));
        let y0 = (fy as usize).min(self.height.saturating_sub(2));
        let x1 = (x0 + 1).min(self.width - 1);
        let y1 = (y0 + 1).min(self.height - 1);
        let ax = (fx - x0 as f64) as f32;
        let ay = (fy - y0 as f64) as f32;
        let w00 = (1.0 - ax) * (1.0 - ay);
        let w10 = ax * (1.0 - ay);
        let w01 = (1.0 - ax) * ay;
        let w11 = ax * ay;
        let (a, b, c, d) = (
            self.pixel(x0, y0),
            self.pixel(x1, y0),
            self.pixel(x0, y1),
            self.pixel(x1, y1),
        );
        for k in 0..self.channels {
            out[k] = w00 * a[k] + w10 * b[k] + w01 * c[k] + w11 * d[k];
        }
        true
    }
}

struct Plane<'a> {
    w: usize,
    h: usize,
    data: &'a [f32],
}

impl Plane<'_> {
    #[inline]
    fn at(&self, x: isize, y: isize) -> f32 {
        let x = x.clamp(0, self.w as isize - 1) as usize;
        let y = y.clamp(0, self.h as isize - 1) as usize;
        self.data[y * self.w + x]
    }
}

fn box_blur3(w: usize, h: usize, data: &[f32]) -> Vec<f32> {
    let p = Plane { w, h, data };
    let mut out = Vec::with_capacity(w * h);
    for y in 0..h as isize {
        for x in 0..w as isize {
            let mut s = 0.0;
            for dy in -1..=1 {
                for dx in -1..=1 {
                    s += p.at(x + dx, y + dy);
                }
            }
            out.push(s / 9.0);
        }
    }
    out
}

/// The eight base responses at one pixel: intensity, |∂x|, |∂y|, local mean,
/// local std, 45° and 135° derivatives, Laplacian.
fn base_responses(p: &Plane<'_>, x: isize, y: isize) -> [f32; 8] {
    let c = p.at(x, y);
    let gx = 0.5 * (p.at(x + 1, y) - p.at(x - 1, y));
    let gy = 0.5 * (p.at(x, y + 1) - p.at(x, y - 1));
    let (mut s, mut s2, mut n) = (0.0f64, 0.0f64, 0.0f64);
    for dy in -LOCAL_RADIUS..=LOCAL_RADIUS {
        for dx in -LOCAL_RADIUS..=LOCAL_RADIUS {
            let v = p.at(x + dx, y + dy) as f64;
            s += v;
            s2 += v * v;
            n += 1.0;
        }
    }
    let mean = s / n;
    let std = (s2 / n - mean * mean).max(0.0).sqrt();
    let inv = 1.0 / (2.0 * std::f32::consts::SQRT_2);
    let g45 = (p.at(x + 1, y + 1) - p.at(x - 1, y - 1)) * inv;
    let g135 = (p.at(x - 1, y + 1) - p.at(x + 1, y - 1)) * inv;
    let lap = p.at(x + 1, y) + p.at(x - 1, y) + p.at(x, y + 1) + p.at(x, y - 1) - 4.0 * c;
    [c, gx.abs(), gy.abs(), mean as f32, std as f32, g45, g135, lap]
}

/// Hand-crafted feature map with `channels` ∈ {4, 8, 16}.
///
/// The first `min(channels, 8)` channels are the base responses in the order
/// intensity, |∂x|, |∂y|, local mean, local std, 45° and 135° derivatives,
/// Laplacian. With 16 channels the same eight responses are repeated on a
/// 3×3 box-blurred copy of the image. Every channel is standardized to zero
/// mean and unit variance over the image.
pub fn extract_features(img: &Image, channels: usize, groups: usize) -> Result<FeatureMap> {
    if ![4, 8, 16].contains(&channels) {
        return Err(Error::InvalidArgument(format!(
            "channels must be 4, 8 or 16, got {channels}"
        )));
    }
    if groups == 0 || !channels.is_multiple_of(groups) {
        return Err(Error::InvalidArgument(format!(
            "channels ({channels}) must be divisible by groups ({groups})"
        )));
    }
    let (w, h) = (img.width(), img.height());
    if w < FILTER_SUPPORT || h < FILTER_SUPPORT {
        return Err(Error::TooSmall {
            width: w,
            height: h,
            reason: format!("filters need at least {FILTER_SUPPORT}x{FILTER_SUPPORT}"),
        });
    }
    let gray = img.to_gray();
    let blurred = (channels == 16).then(|| box_blur3(w, h, gray.data()));
    let planes: Vec<Plane<'_>> = std::iter::once(gray.data())
        .chain(blurred.as_deref())
        .map(|data| Plane { w, h, data })
        .collect();

    let mut data = vec![0f32; w * h * channels];
    crate::par::for_each_row(&mut data, w * channels, |y, row| {
        for x in 0..w {
            let px = &mut row[x * channels..(x + 1) * channels];
            for (k, plane) in planes.iter().enumerate() {
                let r = base_responses(plane, x as isize, y as isize);
                let n = (channels - 8 * k).min(8);
                px[8 * k..8 * k + n].copy_from_slice(&r[..n]);
            }
        }
    });

    for c in 0..channels {
        let (mut s, mut s2) = (0.0f64, 0.0f64);
        for v in data.iter().skip(c).step_by(channels) {
            s += *v as f64;
            s2 += (*v as f64) * (*v as f64);
        }
        let n = (w * h) as f64;
        let mean = s / n;
        let std = (s2 / n - mean * mean).max(0.0).sqrt().max(STD_FLOOR);
        for v in data.iter_mut().skip(c).step_by(channels) {
            *v = ((*v as f64 - mean) / std) as f32;
        }
    }
    FeatureMap::new(w, h, channels, data)
}
