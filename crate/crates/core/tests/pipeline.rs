use mvs_core::pipeline::{run_pipeline, run_pipeline_with, ViewSet};
use mvs_core::sampling::{Schedule, Strategy};
use mvs_core::synth::{render_scene, SceneSpec};
use mvs_core::PipelineConfig;

fn views(preset: &str, seed: u64) -> ViewSet {
    let scene = render_scene(&SceneSpec::preset(preset).unwrap(), seed).unwrap();
    ViewSet::from_scene(&scene, 0).unwrap()
}

#[test]
fn hypotheses_stay_inside_the_scene_range() {
    for preset in ["slanted", "sphere", "step"] {
        let v = views(preset, 1);
        let range = v.reference_camera().depth_range();
        for strategy in Schedule::ALL {
            let cfg = PipelineConfig {
                strategy,
                ..Default::default()
            };
            run_pipeline_with(&v, &cfg, |stage, pv| {
                for i in 0..pv.pixel_count() {
                    let d = pv.depths(i);
                    assert!(
                        d[0] >= range.min && d[d.len() - 1] <= range.max,
                        "{preset} {strategy:?} stage {stage}"
                    );
                    assert!(d.windows(2).all(|w| w[1] > w[0]));
                }
            })
            .unwrap();
        }
    }
}

#[test]
fn epipolar_widths_shrink_with_resolution() {
    let cfg = PipelineConfig {
        num_levels: 4,
        hypotheses: vec![48, 32, 8, 8],
        ..Default::default()
    };
    for preset in ["plane", "slanted"] {
        let out = run_pipeline(&views(preset, 0), &cfg).unwrap();
        let stages = &out.trace.stages;
        assert_eq!(stages[2].strategy, Strategy::Epipolar);
        assert_eq!(stages[3].strategy, Strategy::Epipolar);
        let (a, b) = (stages[2].widths.median, stages[3].widths.median);
        assert!(b <= a, "{preset}: {a} then {b}");
        assert!((b / a - 0.5).abs() < 0.05, "{preset}: ratio {}", b / a);
    }
}

#[test]
fn confidence_is_a_probability() {
    let out = run_pipeline(&views("sphere", 2), &PipelineConfig::default()).unwrap();
    for s in &out.trace.stages {
        assert!(s.confidence.data().iter().all(|c| *c > 0.0 && *c <= 1.0 + 1e-12));
        let (lo, hi) = (
            s.depth.data().iter().cloned().fold(f64::MAX, f64::min),
            s.depth.data().iter().cloned().fold(0.0, f64::max),
        );
        assert!(lo >= 425.0 && hi <= 1065.0);
    }
}

#[test]
fn full_schedule_tracks_every_preset() {
    for preset in ["plane", "slanted", "sphere"] {
        let scene = render_scene(&SceneSpec::preset(preset).unwrap(), 0).unwrap();
        let v = ViewSet::from_scene(&scene, 0).unwrap();
        let cfg = PipelineConfig::default();
        let out = run_pipeline(&v, &cfg).unwrap();
        let spacing = out.trace.finest_spacing().unwrap();
        let stats = mvs_core::pipeline::evaluate_output(&scene, &out, cfg.num_levels, spacing).unwrap();
        assert!(stats.within[2] > 0.85, "{preset}: {:?}", stats);
    }
}
