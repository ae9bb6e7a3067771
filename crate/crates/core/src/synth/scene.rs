use std::path::Path;

use nalgebra::{Matrix3, Vector3};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::ingest::{CameraParams, DepthRange};

/// Textured primitive. Points are world coordinates; the reference camera
/// sits at the origin looking down +z.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum Surface {
    Plane {
        point: [f64; 3],
        normal: [f64; 3],
    },
    Sphere {
        center: [f64; 3],
        radius: f64,
    },
    /// Fronto-parallel plane at `near` for world `x < edge_x`, at `far`
    /// otherwise.
    Step {
        near: f64,
        far: f64,
        edge_x: f64,
    },
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RigSpec {
    /// Total number of views; view 0 is the reference.
    pub views: usize,
    /// Radius of the ring of source cameras around the reference.
    pub baseline: f64,
    /// Angle of the first source on the ring, in degrees.
    pub phase_deg: f64,
    /// Rotate sources to look at `(0, 0, look_at_depth)`.
    pub toe_in: bool,
    pub look_at_depth: f64,
}

impl Default for RigSpec {
    fn default() -> Self {
        Self {
            views: 3,
            baseline: 120.0,
            phase_deg: 0.0,
            toe_in: false,
            look_at_depth: 600.0,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TextureSpec {
    pub seed: u64,
    /// Feature size of the coarsest noise octave, in scene units.
    pub scale: f64,
    pub octaves: u32,
    /// World-x interval rendered as flat gray.
    pub flat_band: Option<[f64; 2]>,
    /// Subsamples per pixel side.
    pub supersample: usize,
}

impl Default for TextureSpec {
    fn default() -> Self {
        Self {
            seed: 0,
            scale: 24.0,
            octaves: 3,
            flat_band: None,
            supersample: 2,
        }
    }
}

/// Text description of a synthetic scene.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SceneSpec {
    pub width: usize,
    pub height: usize,
    pub focal: f64,
    pub depth_min: f64,
    pub depth_max: f64,
    pub rig: RigSpec,
    pub texture: TextureSpec,
    pub surfaces: Vec<Surface>,
}

impl Default for SceneSpec {
    fn default() -> Self {
        Self::preset("plane").expect("built-in preset")
    }
}

pub const PRESETS: [&str; 5] = ["plane", "slanted", "step", "sphere", "textureless"];

impl SceneSpec {
    fn base(surfaces: Vec<Surface>) -> Self {
        Self {
            width: 256,
            height: 192,
            focal: 300.0,
            depth_min: 425.0,
            depth_max: 1065.0,
            rig: RigSpec::default(),
            texture: TextureSpec::default(),
            surfaces,
        }
    }

    pub fn preset(name: &str) -> Result<Self> {
        let fronto = |z: f64| Surface::Plane {
            point: [0.0, 0.0, z],
            normal: [0.0, 0.0, 1.0],
        };
        Ok(match name {
            "plane" => Self::base(vec![fronto(600.0)]),
            "slanted" => Self::base(vec![Surface::Plane {
                point: [0.0, 0.0, 650.0],
                normal: [0.25, 0.1, 1.0],
            }]),
            "step" => Self::base(vec![Surface::Step {
                near: 560.0,
                far: 760.0,
                edge_x: 0.0,
            }]),
            "sphere" => Self::base(vec![
                Surface::Sphere {
                    center: [0.0, 0.0, 700.0],
                    radius: 150.0,
                },
                fronto(950.0),
            ]),
            "textureless" => {
                let mut s = Self::base(vec![fronto(600.0)]);
                s.texture.flat_band = Some([-40.0, 40.0]);
                s
            }
            other => {
                return Err(Error::Scene(format!(
                    "unknown preset {other:?}; expected one of {}",
                    PRESETS.join(", ")
                )))
            }
        })
    }

    pub fn from_toml_str(text: &str) -> Result<Self> {
        let spec: Self = toml::from_str(text).map_err(|e| Error::Scene(e.to_string()))?;
        spec.validate()?;
        Ok(spec)
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::from_toml_str(&text)
    }

    pub fn to_toml_string(&self) -> String {
        toml::to_string(self).expect("scene specs serialize")
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(Error::Scene(m));
        if self.rig.views < 2 {
            return bad(format!("need at least 2 views, got {}", self.rig.views));
        }
        if self.width == 0 || self.height == 0 || !(self.focal > 0.0) {
            return bad("image size and focal length must be positive".into());
        }
        if self.texture.supersample == 0 || !(self.texture.scale > 0.0) {
            return bad("texture scale and supersampling must be positive".into());
        }
        DepthRange::new(self.depth_min, self.depth_max)?;
        if !(self.rig.baseline > 0.0) {
            return bad("baseline must be positive".into());
        }
        if self.surfaces.is_empty() {
            return bad("no surfaces".into());
        }
        for s in &self.surfaces {
            match s {
                Surface::Plane { normal, .. } if Vector3::from(*normal).norm() == 0.0 => {
                    return bad("plane normal is zero".into())
                }
                Surface::Sphere { radius, .. } if !(*radius > 0.0) => {
                    return bad("sphere radius must be positive".into())
                }
                Surface::Step { near, far, .. } if !(*near > 0.0 && *far > 0.0) => {
                    return bad("step depths must be positive".into())
                }
                _ => {}
            }
        }
        Ok(())
    }

    pub fn depth_range(&self) -> DepthRange {
        DepthRange::new(self.depth_min, self.depth_max).expect("validated range")
    }

    /// Reference camera followed by the ring of sources.
    pub fn cameras(&self) -> Result<Vec<CameraParams>> {
        self.validate()?;
        let pp = (self.width as f64 / 2.0, self.height as f64 / 2.0);
        let range = self.depth_range();
        let mut cams = vec![CameraParams::look(
            self.focal,
            pp,
            Matrix3::identity(),
            Vector3::zeros(),
            range,
        )?];
        let sources = self.rig.views - 1;
        for k in 0..sources {
            let a = self.rig.phase_deg.to_radians() + std::f64::consts::TAU * k as f64 / sources as f64;
            let center = Vector3::new(a.cos(), a.sin(), 0.0) * self.rig.baseline;
            let rotation = if self.rig.toe_in {
                look_at(&center, &Vector3::new(0.0, 0.0, self.rig.look_at_depth))
            } else {
                Matrix3::identity()
            };
            cams.push(CameraParams::look(self.focal, pp, rotation, center, range)?);
        }
        Ok(cams)
    }
}

/// World-to-camera rotation of a camera at `eye` whose optical axis passes
/// through `target`, keeping image y pointing down (world +y).
fn look_at(eye: &Vector3<f64>, target: &Vector3<f64>) -> Matrix3<f64> {
    let z = (target - eye).normalize();
    let x = Vector3::new(0.0, 1.0, 0.0).cross(&z).normalize();
    let y = z.cross(&x);
    Matrix3::from_rows(&[x.transpose(), y.transpose(), z.transpose()])
}
