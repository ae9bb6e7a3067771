//! Acceptance suite: one PASS/FAIL line per criterion, then a single
//! assertion over all of them.

use std::time::Instant;

use mvs_core::fusion::{consistency_check, fuse, FusionView};
use mvs_core::geometry::{warp_pixel, ViewWarp};
use mvs_core::ingest::{
    decode_pfm, encode_pfm, parse_camera_dtu, CameraParams, DepthRange, FusionParams, Image,
};
use mvs_core::matching::{softmax, ProbabilityVolume};
use mvs_core::pipeline::{ablation_run, evaluate_output, run_pipeline, ViewSet};
use mvs_core::sampling::{
    dhs3_epipolar, distribution_variance, pixel_variance, variance_interval, DepthHypotheses, IntervalParams,
    Schedule,
};
use mvs_core::synth::{eval_cloud, render_scene, SceneSpec};
use mvs_core::unimodal::gradcheck::run_losscheck;
use mvs_core::unimodal::{
    auf_filter_row, confidence_loss, reference_unimodal, regression_loss, regression_loss_mean,
    stereo_focal_loss, total_loss, FocalWeighting, LossParts, LossWeights, UnimodalParams,
};
use mvs_core::{DepthMap, PipelineConfig};
use nalgebra::{Matrix3, Point2, Vector3};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

#[derive(Default)]
struct Report {
    failed: Vec<&'static str>,
}

impl Report {
    fn check(&mut self, name: &'static str, pass: bool, detail: String) {
        println!("{} {name}: {detail}", if pass { "PASS" } else { "FAIL" });
        if !pass {
            self.failed.push(name);
        }
    }
}

fn random_distribution(rng: &mut ChaCha8Rng, n: usize) -> Vec<f64> {
    let raw: Vec<f64> = (0..n).map(|_| rng.gen_range(0.0..1.0f64).powi(3)).collect();
    let s: f64 = raw.iter().sum::<f64>().max(1e-300);
    raw.iter().map(|v| v / s).collect()
}

fn variance_oracle(rep: &mut Report) {
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    let cases: Vec<(Vec<f64>, Vec<f64>)> = (0..1000)
        .map(|_| {
            let n = rng.gen_range(2..=64);
            let lo = rng.gen_range(425.0..900.0);
            let step = rng.gen_range(0.1..20.0);
            (
                random_distribution(&mut rng, n),
                (0..n).map(|j| lo + step * j as f64).collect(),
            )
        })
        .collect();
    let start = Instant::now();
    let mut worst: f64 = 0.0;
    for (p, d) in &cases {
        let mean: f64 = p.iter().zip(d).map(|(p, d)| p * d).sum();
        let got = distribution_variance(p, d, mean);
        // Pairwise form: V = ½ Σ_j Σ_k p_j p_k (d_j − d_k)².
        let mut pair = 0.0;
        for j in 0..p.len() {
            for k in 0..p.len() {
                pair += 0.5 * p[j] * p[k] * (d[j] - d[k]).powi(2);
            }
        }
        worst = worst.max((got - pair).abs() / pair.max(1.0));
    }
    // Same check through the volume API with regressed means.
    let d = 32;
    let hyps: Vec<f64> = (0..d).map(|j| 425.0 + 20.0 * j as f64).collect();
    let data: Vec<f64> = (0..1000).flat_map(|_| random_distribution(&mut rng, d)).collect();
    let pv = ProbabilityVolume::new(
        1000,
        1,
        data,
        DepthHypotheses::shared(hyps.clone()).unwrap(),
        vec![true; 1000],
    )
    .unwrap();
    let (dm, _) = mvs_core::matching::regress_depth(&pv);
    let var = pixel_variance(&pv, &dm).unwrap();
    for i in 0..1000 {
        let p = pv.row(i);
        let mut naive = 0.0;
        for j in 0..d {
            naive += p[j] * (hyps[j] - dm.data()[i]).powi(2);
        }
        worst = worst.max((var.data()[i] - naive).abs() / naive.max(1.0));
    }
    let secs = start.elapsed().as_secs_f64();
    rep.check(
        "variance matches double-loop oracle",
        worst < 1e-10 && secs < 1.0,
        format!("max rel err {worst:.2e} (tol 1e-10), {secs:.3}s (limit 1s)"),
    );
}

fn interval_example(rep: &mut Report) {
    let (lo, hi) = variance_interval(500.0, 100.0, IntervalParams::new(1.0, 5.0));
    let exact = (lo - 485.0).abs() <= 1e-12 && (hi - 515.0).abs() <= 1e-12;
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    let mut monotone = true;
    for _ in 0..1000 {
        let d = rng.gen_range(425.0..1065.0);
        let params = IntervalParams::new(rng.gen_range(0.0..3.0), rng.gen_range(0.0..10.0));
        let v1 = rng.gen_range(0.0..1e4);
        let v2 = v1 + rng.gen_range(0.0..1e4);
        let (a0, a1) = variance_interval(d, v1, params);
        let (b0, b1) = variance_interval(d, v2, params);
        monotone &= b0 <= a0 && b1 >= a1;
    }
    rep.check(
        "variance interval example and monotonicity",
        exact && monotone,
        format!("[{lo}, {hi}] vs [485, 515] (tol 1e-12); nested on 1000 pixels: {monotone}"),
    );
}

fn unimodal_reference(rep: &mut Report) {
    let p = reference_unimodal(&[0.0, 1.0, 2.0], 1.0, 1.0).unwrap();
    let expected = [0.21194, 0.57612, 0.21194];
    let err = p
        .iter()
        .zip(expected)
        .map(|(a, b)| (a - b).abs())
        .fold(0.0, f64::max);
    let one_hot = reference_unimodal(&[0.0, 1.0, 2.0], 1.0, 1e-4).unwrap();
    let uniform = reference_unimodal(&[0.0, 1.0, 2.0], 1.0, 1e8).unwrap();
    let limits = (one_hot[1] - 1.0).abs() < 1e-9 && uniform.iter().all(|v| (v - 1.0 / 3.0).abs() < 1e-6);
    rep.check(
        "reference unimodal distribution",
        err < 1e-5 && limits,
        format!("{p:.5?} max err {err:.1e} (tol 1e-5); sigma limits one-hot/uniform: {limits}"),
    );
}

fn focal_loss(rep: &mut Report) {
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let mut worst: f64 = 0.0;
    for _ in 0..50 {
        let (n, d) = (rng.gen_range(1..6), rng.gen_range(2..12));
        let p: Vec<f64> = (0..n).flat_map(|_| random_distribution(&mut rng, d)).collect();
        let z: Vec<f64> = (0..n * d).map(|_| rng.gen_range(-3.0..3.0)).collect();
        let got = stereo_focal_loss(&p, &z, d, 0.0, FocalWeighting::Printed)
            .unwrap()
            .value;
        let mut ce = 0.0;
        for i in 0..n {
            let q = softmax(&z[i * d..(i + 1) * d]);
            for j in 0..d {
                ce -= p[i * d + j] * q[j].ln();
            }
        }
        worst = worst.max((got - ce / n as f64).abs());
    }
    let start = Instant::now();
    let rows = run_losscheck(5, 50);
    let secs = start.elapsed().as_secs_f64();
    let grad_err = rows.iter().map(|r| r.max_rel_error).fold(0.0, f64::max);
    rep.check(
        "stereo focal loss and gradients",
        worst < 1e-9 && rows.iter().all(|r| r.passed) && secs < 10.0,
        format!(
            "gamma=0 vs cross-entropy {worst:.1e} (tol 1e-9); max grad rel err {grad_err:.1e} over {} checks x 50 (tol 1e-5); losscheck {secs:.2}s (limit 10s)",
            rows.len()
        ),
    );
}

fn total_loss_example(rep: &mut Report) {
    let parts = LossParts {
        stereo_focal: 1.0,
        confidence: 1.0,
        regression: vec![1.0; 3],
    };
    let total = total_loss(&parts, &LossWeights::default()).unwrap().total;
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    let (w, h) = (13, 7);
    let gt = DepthMap::new(w, h, (0..w * h).map(|_| rng.gen_range(425.0..1065.0)).collect()).unwrap();
    let dm = DepthMap::new(w, h, (0..w * h).map(|_| rng.gen_range(425.0..1065.0)).collect()).unwrap();
    let mask: Vec<bool> = (0..w * h).map(|_| rng.gen_bool(0.6)).collect();
    let (mut sum, mut n) = (0.0, 0);
    for ((m, a), b) in mask.iter().zip(dm.data()).zip(gt.data()) {
        if *m {
            sum += (a - b).abs();
            n += 1;
        }
    }
    let l1 = (regression_loss(&dm, &gt, &mask).unwrap() - sum)
        .abs()
        .max((regression_loss_mean(&dm, &gt, &mask).unwrap() - sum / n as f64).abs());
    let f: Vec<f64> = (0..200).map(|_| rng.gen_range(0.01..1.0)).collect();
    let naive = f.iter().map(|v| -v.ln()).sum::<f64>() / 200.0;
    let conf = (confidence_loss(&f).unwrap() - naive).abs();
    rep.check(
        "weighted total loss and component oracles",
        (total - 93.5).abs() <= 1e-9 && l1 < 1e-9 && conf < 1e-9,
        format!("total {total} vs 93.5 (tol 1e-9); L1 err {l1:.1e}; confidence err {conf:.1e}"),
    );
}

fn geometry(rep: &mut Report) {
    let range = DepthRange::new(1.0, 2000.0).unwrap();
    let cam = CameraParams::look(300.0, (128.0, 96.0), Matrix3::identity(), Vector3::zeros(), range).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(6);
    let mut id_err: f64 = 0.0;
    for _ in 0..1000 {
        let p = Point2::new(rng.gen_range(0.0..256.0), rng.gen_range(0.0..192.0));
        let q = warp_pixel(p, rng.gen_range(1.0..2000.0), &cam, &cam).unwrap();
        id_err = id_err.max((q - p).norm());
    }

    // Rectified rig: f = 100, baseline 1, d = 10, half-pixel steps, 8 samples.
    let r = CameraParams::look(100.0, (50.0, 50.0), Matrix3::identity(), Vector3::zeros(), range).unwrap();
    let s = CameraParams::look(
        100.0,
        (50.0, 50.0),
        Matrix3::identity(),
        Vector3::new(1.0, 0.0, 0.0),
        range,
    )
    .unwrap();
    let (d, delta, count) = (10.0, 0.5, 8);
    let hyps = dhs3_epipolar(
        &DepthMap::filled(1, 1, d),
        &r,
        std::slice::from_ref(&s),
        count,
        delta,
        range,
        1.0,
    )
    .unwrap();
    let h = hyps.at_index(0);
    let half = 0.5 * (h[count - 1] - h[0]);
    let step = d * d * delta / (100.0 * 1.0);
    let half_err = (half - 0.5 * count as f64 * step).abs() / (0.5 * count as f64 * step);

    // Linearized one-pixel depth step vs a bisection root of
    // ‖x'(d + Δ) − x'(d)‖ = 1 px, where Δ stays within 2% of d.
    let (mut root_err, mut roots): (f64, usize) = (0.0, 0);
    while roots < 200 {
        let (a, b) = mvs_core::unimodal::gradcheck::random_camera_pair(&mut rng);
        let w = ViewWarp::new(&a, &b);
        let p = Point2::new(rng.gen_range(0.0..256.0), rng.gen_range(0.0..192.0));
        let d = rng.gen_range(450.0..1000.0);
        let (Ok(lin), Some(x0)) = (w.depth_per_pixel(&p, d), w.warp(&p, d)) else {
            continue;
        };
        if lin > 0.02 * d {
            continue;
        }
        let moved = |dd: f64| w.warp(&p, d + dd).map_or(f64::INFINITY, |x| (x - x0).norm());
        let (mut lo, mut hi) = (0.0, 0.02 * d);
        if moved(hi) < 1.0 {
            continue;
        }
        for _ in 0..100 {
            let mid = 0.5 * (lo + hi);
            if moved(mid) < 1.0 {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        root_err = root_err.max((lin - lo).abs() / lo);
        roots += 1;
    }

    let mut jac_err: f64 = 0.0;
    for _ in 0..200 {
        let (a, b) = mvs_core::unimodal::gradcheck::random_camera_pair(&mut rng);
        let w = ViewWarp::new(&a, &b);
        let p = Point2::new(rng.gen_range(0.0..256.0), rng.gen_range(0.0..192.0));
        let d = rng.gen_range(450.0..1000.0);
        let (Some(j), Some(up), Some(dn)) = (
            w.jacobian(&p, d),
            w.warp(&p, d * (1.0 + 1e-4)),
            w.warp(&p, d * (1.0 - 1e-4)),
        ) else {
            continue;
        };
        let fd = (up - dn) / (2e-4 * d);
        jac_err = jac_err.max((j - fd).norm() / j.norm().max(1e-8));
    }
    rep.check(
        "geometry: identity warp, epipolar half-width, jacobian",
        id_err < 1e-9 && half_err < 0.05 && root_err < 0.05 && jac_err < 1e-5,
        format!(
            "identity err {id_err:.1e}px (tol 1e-9); rectified half-width {half:.6} = [{:.4}, {:.4}] vs (D/2)*d^2*delta/(fB) = {} err {:.2}%, one-pixel step vs root-finding {:.2}% (tol 5%); jacobian rel err {jac_err:.1e} (tol 1e-5)",
            h[0],
            h[count - 1],
            0.5 * count as f64 * step,
            100.0 * half_err,
            100.0 * root_err
        ),
    );
}

/// Peak holding the argmax plus up to three weaker modes. Returns the
/// distribution and the share of mass carried by the peak.
fn multimodal(rng: &mut ChaCha8Rng) -> (Vec<f64>, f64) {
    let n = rng.gen_range(8..=64);
    let mut bumps = vec![(rng.gen_range(0.0..n as f64), rng.gen_range(0.5..3.0), 1.0)];
    for _ in 0..rng.gen_range(1..=3) {
        bumps.push((
            rng.gen_range(0.0..n as f64),
            rng.gen_range(0.5..3.0),
            rng.gen_range(0.05..0.45),
        ));
    }
    let bump = |k: usize, j: usize| {
        let (c, w, a) = bumps[k];
        a * (-0.5 * ((j as f64 - c) / w).powi(2)).exp()
    };
    let raw: Vec<f64> = (0..n)
        .map(|j| 1e-4 + (0..bumps.len()).map(|k| bump(k, j)).sum::<f64>())
        .collect();
    let s: f64 = raw.iter().sum();
    let peak: f64 = (0..n).map(|j| bump(0, j)).sum::<f64>() / s;
    (raw.iter().map(|v| v / s).collect(), peak)
}

fn argmax(p: &[f64]) -> usize {
    let mut best = 0;
    for (j, v) in p.iter().enumerate() {
        if *v > p[best] {
            best = j;
        }
    }
    best
}

fn auf(rep: &mut Report) {
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let params = UnimodalParams::default();
    let var = |x: &[f64], d: &[f64]| {
        let m: f64 = x.iter().zip(d).map(|(a, b)| a * b).sum();
        distribution_variance(x, d, m)
    };
    // The property holds when the argmax mode carries most of the mass; a
    // narrow spike beside a heavier broad mode can gain variance, so those
    // draws are counted separately and not gated.
    let (mut cases, mut kept, mut narrowed, mut minority, mut minority_narrowed) = (0, 0, 0, 0, 0);
    while cases < 1000 {
        let (p, peak) = multimodal(&mut rng);
        let d: Vec<f64> = (0..p.len()).map(|j| 500.0 + 4.0 * j as f64).collect();
        let f = rng.gen_range(0.05..1.0);
        let q = auf_filter_row(&p, &d, f, &params);
        let ok = var(&q, &d) <= var(&p, &d) + 1e-9;
        if peak < 0.5 {
            minority += 1;
            minority_narrowed += ok as usize;
            continue;
        }
        cases += 1;
        kept += (argmax(&q) == argmax(&p)) as usize;
        narrowed += ok as usize;
    }

    let scene = render_scene(&SceneSpec::preset("textureless").unwrap(), 0).unwrap();
    let views = ViewSet::from_scene(&scene, 0).unwrap();
    let on = run_pipeline(&views, &PipelineConfig::default()).unwrap();
    let off = run_pipeline(
        &views,
        &PipelineConfig {
            auf: false,
            ..Default::default()
        },
    )
    .unwrap();
    let (w_on, w_off) = (
        on.trace.stages[1].widths.median,
        off.trace.stages[1].widths.median,
    );
    rep.check(
        "adaptive unimodal filtering",
        kept == 1000 && narrowed == 1000 && w_on <= w_off,
        format!(
            "argmax kept {kept}/1000, variance non-increasing {narrowed}/1000 (peak mass >= 0.5; {minority_narrowed}/{minority} when the peak is a minority); textureless stage-2 median width {w_on:.2} with vs {w_off:.2} without"
        ),
    );
}

fn end_to_end(rep: &mut Report) {
    let scene = render_scene(&SceneSpec::preset("plane").unwrap(), 0).unwrap();
    let views = ViewSet::from_scene(&scene, 0).unwrap();
    let cfg = PipelineConfig::default();
    let pool = rayon::ThreadPoolBuilder::new().num_threads(1).build().unwrap();
    let start = Instant::now();
    let out = pool.install(|| run_pipeline(&views, &cfg)).unwrap();
    let secs = start.elapsed().as_secs_f64();
    let spacing = out.trace.finest_spacing().unwrap();
    let stats = evaluate_output(&scene, &out, cfg.num_levels, spacing).unwrap();
    rep.check(
        "end-to-end textured plane",
        stats.within[0] >= 0.9 && secs < 60.0,
        format!(
            "{:.1}% of {} interior pixels within {spacing:.3} (need 90%); mean |err| {:.3}; {secs:.2}s single-threaded (limit 60s)",
            100.0 * stats.within[0],
            stats.count,
            stats.mean_abs
        ),
    );
}

fn ablation(rep: &mut Report) {
    let scene = render_scene(&SceneSpec::preset("step").unwrap(), 0).unwrap();
    let rows = ablation_run(&scene, &PipelineConfig::default(), &Schedule::ALL, None).unwrap();
    let full = rows
        .iter()
        .find(|r| r.schedule == Schedule::Full)
        .unwrap()
        .stats
        .within[0];
    let detail: Vec<String> = rows
        .iter()
        .map(|r| format!("{}={:.3}", r.schedule.name(), r.stats.within[0]))
        .collect();
    rep.check(
        "ablation directionality on step scene",
        rows.iter().all(|r| full >= r.stats.within[0]),
        format!("fraction within {:.3}: {}", rows[0].spacing, detail.join(" ")),
    );
}

fn fusion(rep: &mut Report) {
    let scene = render_scene(&SceneSpec::preset("plane").unwrap(), 0).unwrap();
    let views: Vec<FusionView> = (0..scene.view_count())
        .map(|k| FusionView {
            depth: scene.gt_depths[k].clone(),
            camera: scene.cameras[k].clone(),
            image: Some(scene.images[k].clone()),
        })
        .collect();
    let params = FusionParams {
        voxel_size: Some(0.0),
        ..Default::default()
    };
    let cloud = fuse(&views, &params, None).unwrap();
    let gt = scene.covisible_samples(params.min_support);
    let m = eval_cloud(&cloud.positions(), &gt, 20.0).unwrap();
    let exact = m.accuracy < 1e-6 && m.completeness < 1e-6 && m.overall < 1e-6;

    let mut perturbed = views[..2].to_vec();
    perturbed[1].depth = perturbed[1].depth.map(|d| d * 1.1);
    let c = consistency_check(0, &perturbed, params.tau_px, params.tau_rel).unwrap();
    let supported = c.support.iter().filter(|s| **s > 0).count() as f64 / c.support.len() as f64;
    rep.check(
        "fusion of exact depths and perturbed-view rejection",
        exact && supported < 1e-3,
        format!(
            "{} points; acc {:.1e} comp {:.1e} overall {:.1e} (tol 1e-6); x1.10 source supports {:.3}% of pixels",
            cloud.len(),
            m.accuracy,
            m.completeness,
            m.overall,
            100.0 * supported
        ),
    );
}

fn formats(rep: &mut Report) {
    let mut rng = ChaCha8Rng::seed_from_u64(9);
    let mut pfm_ok = true;
    for (w, h, c) in [(2, 2, 1), (37, 11, 3), (256, 192, 1)] {
        let img = Image::new(
            w,
            h,
            c,
            (0..w * h * c).map(|_| rng.gen_range(-1e6f32..1e6)).collect(),
        )
        .unwrap();
        let bytes = encode_pfm(&img);
        let back = decode_pfm(&bytes).unwrap();
        pfm_ok &= back
            .data()
            .iter()
            .zip(img.data())
            .all(|(a, b)| a.to_bits() == b.to_bits())
            && encode_pfm(&back) == bytes;
    }
    let points = (0..100_000)
        .map(|_| mvs_core::fusion::FusedPoint {
            position: Vector3::new(
                rng.gen::<f32>() as f64,
                rng.gen_range(-1e3f32..1e3) as f64,
                rng.gen_range(0.0f32..2e3) as f64,
            ),
            color: [rng.gen(), rng.gen(), rng.gen()],
            support: 0,
        })
        .collect();
    let cloud = mvs_core::fusion::FusedPointCloud { points };
    let bytes = mvs_core::fusion::encode_ply(&cloud);
    let back = mvs_core::fusion::decode_ply(&bytes).unwrap();
    let ply_ok = back == cloud && mvs_core::fusion::encode_ply(&back) == bytes;
    let cam = parse_camera_dtu(
        "extrinsic\n1 0 0 0\n0 1 0 0\n0 0 1 0\n0 0 0 1\n\nintrinsic\n361.54 0 82.9\n0 360.39 66.38\n0 0 1\n\n425 2.5 192 1065\n",
    )
    .unwrap();
    let dtu_ok = cam.depth_min() == 425.0 && cam.depth_max() == 1065.0;
    rep.check(
        "formats: PFM, PLY, DTU camera",
        pfm_ok && ply_ok && dtu_ok,
        format!(
            "PFM bit-exact {pfm_ok}; PLY 1e5 points bit-exact {ply_ok}; DTU range [{}, {}]",
            cam.depth_min(),
            cam.depth_max()
        ),
    );
}

fn main() {
    println!("\nacceptance");
    let mut rep = Report::default();
    variance_oracle(&mut rep);
    interval_example(&mut rep);
    unimodal_reference(&mut rep);
    focal_loss(&mut rep);
    total_loss_example(&mut rep);
    geometry(&mut rep);
    auf(&mut rep);
    end_to_end(&mut rep);
    ablation(&mut rep);
    fusion(&mut rep);
    formats(&mut rep);
    if !rep.failed.is_empty() {
        eprintln!("failed criteria: {:?}", rep.failed);
        std::process::exit(1);
    }
}
