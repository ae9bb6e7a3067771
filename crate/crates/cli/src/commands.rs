use std::fmt;
use std::io::Write;

use anyhow::{bail, Context, Result};
use log::info;
use mvs_core::fusion::{fuse as fuse_views, read_ply, write_ply, FusionView};
use mvs_core::ingest::read_image;
use mvs_core::matching::dump_volume;
use mvs_core::pipeline::{ablation_run, calibrate_interval, interior_mask, run_pipeline_with, ViewSet};
use mvs_core::sampling::Schedule;
use mvs_core::synth::{eval_cloud, eval_depth, render_scene, write_scene};
use mvs_core::unimodal::gradcheck::run_losscheck;
use serde_json::json;

use crate::inputs::{camera_for, load_config, load_scene, output, read_map, read_views, write_map};
use crate::{AblationArgs, CalibrateArgs, DepthArgs, EvalArgs, FuseArgs, LosscheckArgs, OnOff, SynthArgs};

/// A run that completed but whose numbers are wrong.
#[derive(Debug)]
struct NumericalFailure(String);

impl fmt::Display for NumericalFailure {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

impl std::error::Error for NumericalFailure {}

/// The cause chain joined by `: `, skipping causes already quoted by the
/// message before them.
pub fn describe(err: &anyhow::Error) -> String {
    let mut out = String::new();
    for cause in err.chain() {
        let text = cause.to_string();
        if !out.contains(&text) {
            if !out.is_empty() {
                out.push_str(": ");
            }
            out.push_str(&text);
        }
    }
    out
}

/// 2 for numerical failures, 1 for everything else.
pub fn exit_code(err: &anyhow::Error) -> u8 {
    for cause in err.chain() {
        if let Some(e) = cause.downcast_ref::<mvs_core::Error>() {
            return if e.is_numerical() { 2 } else { 1 };
        }
        if cause.is::<NumericalFailure>() {
            return 2;
        }
    }
    1
}

pub fn depth(a: DepthArgs) -> Result<()> {
    let mut cfg = load_config(a.config.as_deref())?;
    if let Some(l) = a.levels {
        cfg.num_levels = l;
    }
    if let Some(s) = &a.strategy {
        cfg.strategy = s.parse::<Schedule>()?;
    }
    if let Some(auf) = a.auf {
        cfg.auf = auf == OnOff::On;
    }
    let (images, cameras) = read_views(&a.reference, &a.sources, &a.cams)?;
    let views = ViewSet::new(images, cameras)?;

    let mut dump_err = None;
    let out = run_pipeline_with(&views, &cfg, |stage, pv| {
        if let (Some(dir), None) = (&a.dump_volumes, &dump_err) {
            if let Err(e) = dump_volume(pv, dir, &format!("stage{stage}")) {
                dump_err = Some(e);
            }
        }
    })?;
    if let Some(e) = dump_err {
        return Err(e).context("dumping probability volumes");
    }

    write_map(&out.depth, &a.out)?;
    if let Some(p) = &a.confidence {
        write_map(&out.confidence, p)?;
    }
    if let Some(p) = &a.summary {
        let mut w = output(p)?;
        for s in out.trace.summaries() {
            writeln!(w, "{}", serde_json::to_string(&s)?)?;
        }
        w.flush()?;
    }
    info!(
        "{}x{} depth written to {} (finest spacing {:.3})",
        out.depth.width(),
        out.depth.height(),
        a.out.display(),
        out.trace.finest_spacing().unwrap_or(f64::NAN)
    );
    Ok(())
}

pub fn fuse(a: FuseArgs) -> Result<()> {
    let mut params = load_config(a.config.as_deref())?.fusion;
    if a.voxel.is_some() {
        params.voxel_size = a.voxel;
    }
    let views = a
        .depths
        .iter()
        .map(|p| {
            let depth = read_map(p)?;
            let camera = camera_for(&a.cams, p)?;
            let image = match &a.images {
                Some(dir) => {
                    let stem = p.file_stem().unwrap_or_default().to_string_lossy();
                    Some(read_image(dir.join(format!("{stem}.png")))?)
                }
                None => None,
            };
            Ok(FusionView { depth, camera, image })
        })
        .collect::<Result<Vec<_>>>()?;
    let cloud = fuse_views(&views, &params, a.spacing)?;
    write_ply(&cloud, &a.out)?;
    info!("{} points written to {}", cloud.len(), a.out.display());
    Ok(())
}

fn is_ply(p: &std::path::Path) -> bool {
    p.extension().is_some_and(|e| e.eq_ignore_ascii_case("ply"))
}

pub fn eval(a: EvalArgs) -> Result<()> {
    let report = match (is_ply(&a.pred), is_ply(&a.gt)) {
        (true, true) => {
            let pred = read_ply(&a.pred)?;
            let gt = read_ply(&a.gt)?;
            let m = eval_cloud(&pred.positions(), &gt.positions(), a.d_max)?;
            json!({
                "points": pred.len(),
                "gt_points": gt.len(),
                "d_max": a.d_max,
                "accuracy": m.accuracy,
                "completeness": m.completeness,
                "overall": m.overall,
            })
        }
        (false, false) => {
            let pred = read_map(&a.pred)?;
            let gt = read_map(&a.gt)?;
            let mask = interior_mask(gt.width(), gt.height(), a.margin);
            let s = eval_depth(&pred, &gt, a.spacing, Some(&mask))?;
            json!({
                "count": s.count,
                "spacing": a.spacing,
                "mean_abs": s.mean_abs,
                "median_abs": s.median_abs,
                "within_1": s.within[0],
                "within_2": s.within[1],
                "within_4": s.within[2],
            })
        }
        _ => bail!("prediction and ground truth must both be PFM depth maps or both PLY clouds"),
    };
    println!("{report}");
    Ok(())
}

pub fn synth(a: SynthArgs) -> Result<()> {
    let spec = load_scene(&a.scene, "plane")?;
    if a.print_spec {
        print!("{}", spec.to_toml_string());
        return Ok(());
    }
    let dir = a.out.expect("required unless printing the spec");
    let scene = render_scene(&spec, a.scene.seed)?;
    write_scene(&scene, &dir)?;
    info!("{} views written to {}", scene.view_count(), dir.display());
    Ok(())
}

pub fn losscheck(a: LosscheckArgs) -> Result<()> {
    let rows = run_losscheck(a.seed, a.instances);
    if a.json {
        for r in &rows {
            println!(
                "{}",
                json!({
                    "check": r.name,
                    "instances": r.instances,
                    "max_rel_error": r.max_rel_error,
                    "tolerance": r.tolerance,
                    "passed": r.passed,
                })
            );
        }
    } else {
        println!(
            "{:<36} {:>9} {:>13} {:>9}  result",
            "check", "instances", "max rel err", "tol"
        );
        for r in &rows {
            println!(
                "{:<36} {:>9} {:>13.3e} {:>9.0e}  {}",
                r.name,
                r.instances,
                r.max_rel_error,
                r.tolerance,
                if r.passed { "PASS" } else { "FAIL" }
            );
        }
    }
    let failed: Vec<&str> = rows
        .iter()
        .filter(|r| !r.passed)
        .map(|r| r.name.as_str())
        .collect();
    if !failed.is_empty() {
        return Err(NumericalFailure(format!("gradient checks failed: {}", failed.join(", "))).into());
    }
    Ok(())
}

pub fn calibrate(a: CalibrateArgs) -> Result<()> {
    let cfg = load_config(a.config.as_deref())?;
    let scene = render_scene(&load_scene(&a.scene, "plane")?, a.scene.seed)?;
    let rows = calibrate_interval(&scene, &cfg, &a.alpha, &a.beta)?;
    if !a.json {
        println!(
            "{:>6} {:>6} {:>9} {:>12} {:>10}",
            "alpha", "beta", "coverage", "median width", "within 1"
        );
    }
    for r in rows {
        if a.json {
            println!(
                "{}",
                json!({
                    "alpha": r.alpha,
                    "beta": r.beta,
                    "coverage": r.coverage,
                    "median_width": r.median_width,
                    "within_one": r.within_one,
                })
            );
        } else {
            println!(
                "{:>6} {:>6} {:>9.4} {:>12.3} {:>10.4}",
                r.alpha, r.beta, r.coverage, r.median_width, r.within_one
            );
        }
    }
    Ok(())
}

pub fn ablation(a: AblationArgs) -> Result<()> {
    let cfg = load_config(a.config.as_deref())?;
    let scene = render_scene(&load_scene(&a.scene, "step")?, a.scene.seed)?;
    let rows = ablation_run(&scene, &cfg, &Schedule::ALL, None)?;
    if !a.json {
        println!(
            "{:<10} {:>9} {:>9} {:>9} {:>9} {:>8}  stage median widths",
            "schedule", "within 1", "within 2", "within 4", "mean err", "spacing"
        );
    }
    for r in rows {
        let widths: Vec<f64> = r.stage_widths.iter().map(|w| w.median).collect();
        if a.json {
            println!(
                "{}",
                json!({
                    "schedule": r.schedule.name(),
                    "spacing": r.spacing,
                    "own_spacing": r.own_spacing,
                    "within_1": r.stats.within[0],
                    "within_2": r.stats.within[1],
                    "within_4": r.stats.within[2],
                    "mean_abs": r.stats.mean_abs,
                    "stage_median_widths": widths,
                })
            );
        } else {
            let widths: Vec<String> = widths.iter().map(|w| format!("{w:.1}")).collect();
            println!(
                "{:<10} {:>9.4} {:>9.4} {:>9.4} {:>9.3} {:>8.3}  {}",
                r.schedule.name(),
                r.stats.within[0],
                r.stats.within[1],
                r.stats.within[2],
                r.stats.mean_abs,
                r.spacing,
                widths.join(" ")
            );
        }
    }
    Ok(())
}
