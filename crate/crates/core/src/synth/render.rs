use std::path::Path;

use nalgebra::{Point2, Vector3};

use crate::error::{Error, Result};
use crate::fusion::lands_in_grid;
use crate::ingest::{write_camera_dtu, write_pfm, write_png, CameraParams, DepthMap, Image};

use super::scene::{SceneSpec, Surface};
use super::texture::{mix_seed, ValueNoise};

/// Rendered views with analytic per-pixel depth (0 where the ray misses
/// every surface).
#[derive(Clone, Debug)]
pub struct SyntheticScene {
    pub spec: SceneSpec,
    pub seed: u64,
    pub cameras: Vec<CameraParams>,
    pub images: Vec<Image>,
    pub gt_depths: Vec<DepthMap>,
}

/// Nearest positive ray parameter along `origin + t·dir`.
fn intersect_one(surface: &Surface, origin: &Vector3<f64>, dir: &Vector3<f64>) -> Option<f64> {
    let plane = |point: Vector3<f64>, normal: Vector3<f64>| {
        let denom = normal.dot(dir);
        if denom == 0.0 {
            return None;
        }
        let t = normal.dot(&(point - origin)) / denom;
        (t > 0.0).then_some(t)
    };
    match surface {
        Surface::Plane { point, normal } => plane(Vector3::from(*point), Vector3::from(*normal)),
        Surface::Sphere { center, radius } => {
            let oc = origin - Vector3::from(*center);
            let a = dir.dot(dir);
            let b = 2.0 * dir.dot(&oc);
            let c = oc.dot(&oc) - radius * radius;
            let disc = b * b - 4.0 * a * c;
            if disc < 0.0 {
                return None;
            }
            let sq = disc.sqrt();
            let near = (-b - sq) / (2.0 * a);
            let far = (-b + sq) / (2.0 * a);
            if near > 0.0 {
                Some(near)
            } else if far > 0.0 {
                Some(far)
            } else {
                None
            }
        }
        Surface::Step { near, far, edge_x } => {
            let z = Vector3::new(0.0, 0.0, 1.0);
            let hit_x = |t: f64| origin.x + t * dir.x;
            let a = plane(Vector3::new(0.0, 0.0, *near), z).filter(|t| hit_x(*t) < *edge_x);
            let b = plane(Vector3::new(0.0, 0.0, *far), z).filter(|t| hit_x(*t) >= *edge_x);
            match (a, b) {
                (Some(a), Some(b)) => Some(a.min(b)),
                (a, b) => a.or(b),
            }
        }
    }
}

fn intersect(surfaces: &[Surface], origin: &Vector3<f64>, dir: &Vector3<f64>) -> Option<f64> {
    surfaces
        .iter()
        .filter_map(|s| intersect_one(s, origin, dir))
        .fold(None, |best: Option<f64>, t| Some(best.map_or(t, |b| b.min(t))))
}

/// World ray through pixel `p` scaled so that the parameter equals camera
/// depth.
fn world_ray(camera: &CameraParams, p: &Point2<f64>) -> (Vector3<f64>, Vector3<f64>) {
    (camera.center(), camera.rotation().transpose() * camera.ray(p))
}

struct Shader {
    noise: [ValueNoise; 3],
    flat_band: Option<[f64; 2]>,
}

impl Shader {
    fn new(spec: &SceneSpec, seed: u64) -> Self {
        let base = mix_seed(spec.texture.seed, seed);
        let t = &spec.texture;
        Self {
            noise: [0u64, 1, 2].map(|c| ValueNoise::new(mix_seed(base, c), t.scale, t.octaves)),
            flat_band: t.flat_band,
        }
    }

    fn color(&self, x: &Vector3<f64>) -> [f64; 3] {
        if let Some([lo, hi]) = self.flat_band {
            if x.x >= lo && x.x <= hi {
                return [0.5; 3];
            }
        }
        self.noise
            .each_ref()
            .map(|n| (0.5 + 2.0 * (n.sample(x) - 0.5)).clamp(0.0, 1.0))
    }
}

fn render_view(spec: &SceneSpec, shader: &Shader, camera: &CameraParams) -> (Image, DepthMap) {
    let (w, h) = (spec.width, spec.height);
    let ss = spec.texture.supersample;
    let mut color = vec![0.0f32; w * h * 3];
    let mut depth = vec![0.0f64; w * h];
    crate::par::for_each_row(&mut color, w * 3, |y, row| {
        for x in 0..w {
            let mut acc = [0.0; 3];
            for sy in 0..ss {
                for sx in 0..ss {
                    let p = Point2::new(
                        x as f64 + (sx as f64 + 0.5) / ss as f64,
                        y as f64 + (sy as f64 + 0.5) / ss as f64,
                    );
                    let (o, d) = world_ray(camera, &p);
                    if let Some(t) = intersect(&spec.surfaces, &o, &d) {
                        let c = shader.color(&(o + d * t));
                        acc.iter_mut().zip(c).for_each(|(a, c)| *a += c);
                    }
                }
            }
            let n = (ss * ss) as f64;
            for c in 0..3 {
                row[3 * x + c] = (acc[c] / n) as f32;
            }
        }
    });
    crate::par::for_each_row(&mut depth, w, |y, row| {
        for (x, out) in row.iter_mut().enumerate() {
            let p = Point2::new(x as f64 + 0.5, y as f64 + 0.5);
            let (o, d) = world_ray(camera, &p);
            *out = intersect(&spec.surfaces, &o, &d).unwrap_or(0.0);
        }
    });
    (
        Image::new(w, h, 3, color).expect("sizes match"),
        DepthMap::new(w, h, depth).expect("sizes match"),
    )
}

/// Ray-cast rendering of every view. The output is a pure function of
/// `(spec, seed)`.
pub fn render_scene(spec: &SceneSpec, seed: u64) -> Result<SyntheticScene> {
    let cameras = spec.cameras()?;
    let shader = Shader::new(spec, seed);
    let range = spec.depth_range();
    let mut images = Vec::with_capacity(cameras.len());
    let mut gt_depths = Vec::with_capacity(cameras.len());
    for (k, cam) in cameras.iter().enumerate() {
        let (img, dm) = render_view(spec, &shader, cam);
        if let Some(d) = dm.data().iter().find(|d| **d > 0.0 && !range.contains(**d)) {
            return Err(Error::Scene(format!(
                "view {k} sees depth {d:.3} outside [{}, {}]",
                range.min, range.max
            )));
        }
        images.push(img);
        gt_depths.push(dm);
    }
    Ok(SyntheticScene {
        spec: spec.clone(),
        seed,
        cameras,
        images,
        gt_depths,
    })
}

impl SyntheticScene {
    pub fn view_count(&self) -> usize {
        self.cameras.len()
    }

    /// Analytic depth seen by `view` through continuous pixel `p`.
    pub fn depth_at(&self, view: usize, p: &Point2<f64>) -> Option<f64> {
        let (o, d) = world_ray(&self.cameras[view], p);
        intersect(&self.spec.surfaces, &o, &d)
    }

    /// Whether world point `x` is the first surface hit seen by `view` and
    /// lands inside its sampling grid.
    pub fn visible_from(&self, view: usize, x: &Vector3<f64>) -> bool {
        let cam = &self.cameras[view];
        if !lands_in_grid(cam, self.spec.width, self.spec.height, x) {
            return false;
        }
        let (q, z) = cam.project(x).expect("in front of camera");
        self.depth_at(view, &q).is_some_and(|d| (d - z).abs() <= 1e-6 * z)
    }

    /// Back-projected pixel centers of every view whose surface point is
    /// visible from at least `min_support` other views.
    pub fn covisible_samples(&self, min_support: usize) -> Vec<Vector3<f64>> {
        let mut out = Vec::new();
        for (k, cam) in self.cameras.iter().enumerate() {
            let dm = &self.gt_depths[k];
            for y in 0..dm.height() {
                for x in 0..dm.width() {
                    let d = dm.get(x, y);
                    if !(d > 0.0) {
                        continue;
                    }
                    let pt = cam.backproject(&Point2::new(x as f64 + 0.5, y as f64 + 0.5), d);
                    let seen = (0..self.view_count())
                        .filter(|j| *j != k && self.visible_from(*j, &pt))
                        .count();
                    if seen >= min_support {
                        out.push(pt);
                    }
                }
            }
        }
        out
    }
}

/// Writes `images/NNNNNNNN.png`, `depths/NNNNNNNN.pfm`,
/// `cams/NNNNNNNN_cam.txt` and `scene.toml` under `dir`.
pub fn write_scene(scene: &SyntheticScene, dir: impl AsRef<Path>) -> Result<()> {
    let dir = dir.as_ref();
    for sub in ["images", "depths", "cams"] {
        let p = dir.join(sub);
        std::fs::create_dir_all(&p).map_err(|e| Error::io(&p, e))?;
    }
    for k in 0..scene.view_count() {
        write_png(&scene.images[k], dir.join(format!("images/{k:08}.png")))?;
        let dm = &scene.gt_depths[k];
        let img = Image::new(dm.width(), dm.height(), 1, dm.to_f32())?;
        write_pfm(&img, dir.join(format!("depths/{k:08}.pfm")))?;
        write_camera_dtu(&scene.cameras[k], dir.join(format!("cams/{k:08}_cam.txt")))?;
    }
    let p = dir.join("scene.toml");
    std::fs::write(&p, scene.spec.to_toml_string()).map_err(|e| Error::io(&p, e))
}
