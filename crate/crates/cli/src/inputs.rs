use std::fs::File;
use std::io::{self, BufWriter, Write};
use std::path::{Path, PathBuf};

use anyhow::{Context, Result};
use mvs_core::ingest::{read_camera_dtu, read_image, read_pfm, write_pfm, CameraParams};
use mvs_core::synth::SceneSpec;
use mvs_core::{DepthMap, Image, PipelineConfig, ScalarMap};

use crate::SceneArgs;

/// `<dir>/<stem>_cam.txt`, falling back to `<dir>/<stem>.txt`.
pub fn camera_for(cams: &Path, file: &Path) -> Result<CameraParams> {
    let stem = file
        .file_stem()
        .and_then(|s| s.to_str())
        .with_context(|| format!("cannot derive a camera name from {}", file.display()))?;
    let primary = cams.join(format!("{stem}_cam.txt"));
    let path = if primary.exists() {
        primary
    } else {
        cams.join(format!("{stem}.txt"))
    };
    Ok(read_camera_dtu(&path)?)
}

pub fn load_config(path: Option<&Path>) -> Result<PipelineConfig> {
    Ok(match path {
        Some(p) => PipelineConfig::load(p)?,
        None => PipelineConfig::default(),
    })
}

pub fn load_scene(args: &SceneArgs, default_preset: &str) -> Result<SceneSpec> {
    Ok(match (&args.scene, &args.preset) {
        (Some(p), _) => SceneSpec::load(p)?,
        (None, Some(name)) => SceneSpec::preset(name)?,
        (None, None) => SceneSpec::preset(default_preset)?,
    })
}

pub fn read_views(
    reference: &Path,
    sources: &[PathBuf],
    cams: &Path,
) -> Result<(Vec<Image>, Vec<CameraParams>)> {
    std::iter::once(reference)
        .chain(sources.iter().map(PathBuf::as_path))
        .map(|p| {
            let img = read_image(p).with_context(|| format!("reading {}", p.display()))?;
            Ok((img, camera_for(cams, p)?))
        })
        .collect::<Result<Vec<_>>>()
        .map(|v| v.into_iter().unzip())
}

pub fn read_map(path: &Path) -> Result<ScalarMap> {
    let img = read_pfm(path)?;
    anyhow::ensure!(
        img.channels() == 1,
        "{} has {} channels, expected 1",
        path.display(),
        img.channels()
    );
    let data = img.data().iter().map(|v| *v as f64).collect();
    Ok(DepthMap::new(img.width(), img.height(), data)?)
}

pub fn write_map(map: &ScalarMap, path: &Path) -> Result<()> {
    let img = Image::new(map.width(), map.height(), 1, map.to_f32())?;
    Ok(write_pfm(&img, path)?)
}

/// A file, or stdout for `-`.
pub fn output(path: &Path) -> Result<Box<dyn Write>> {
    if path.as_os_str() == "-" {
        return Ok(Box::new(io::stdout().lock()));
    }
    let f = File::create(path).with_context(|| format!("cannot create {}", path.display()))?;
    Ok(Box::new(BufWriter::new(f)))
}
