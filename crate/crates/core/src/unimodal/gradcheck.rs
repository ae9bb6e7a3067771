//! Finite-difference checks of every analytic gradient in the loss suite and
//! of the warp Jacobian, on seeded random instances.

use nalgebra::{Point2, Rotation3, Vector3};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::geometry::ViewWarp;
use crate::ingest::{CameraParams, DepthMap, DepthRange};

use super::distribution::{reference_unimodal, FocalWeighting};
use super::loss::{
    confidence_loss, confidence_loss_gradient, regression_loss, stereo_focal_loss, total_loss,
    total_loss_gradient, LossParts, LossWeights,
};

/// Relative error denominator floor.
pub const GUARD: f64 = 1e-8;
/// Pass threshold for every check.
pub const TOLERANCE: f64 = 1e-5;

#[derive(Clone, Debug, PartialEq)]
pub struct CheckRow {
    pub name: String,
    pub instances: usize,
    pub max_rel_error: f64,
    pub tolerance: f64,
    pub passed: bool,
}

impl CheckRow {
    fn new(name: &str, instances: usize, max_rel_error: f64) -> Self {
        Self {
            name: name.to_string(),
            instances,
            max_rel_error,
            tolerance: TOLERANCE,
            passed: max_rel_error < TOLERANCE,
        }
    }
}

pub fn relative_error(analytic: f64, numeric: f64) -> f64 {
    (analytic - numeric).abs() / analytic.abs().max(numeric.abs()).max(GUARD)
}

fn central<F: FnMut(f64) -> f64>(x: f64, h: f64, mut f: F) -> f64 {
    (f(x + h) - f(x - h)) / (2.0 * h)
}

/// Fourth-order stencil; tolerates the large weights of the printed focal form.
fn central5<F: FnMut(f64) -> f64>(x: f64, h: f64, mut f: F) -> f64 {
    (f(x - 2.0 * h) - 8.0 * f(x - h) + 8.0 * f(x + h) - f(x + 2.0 * h)) / (12.0 * h)
}

fn random_reference(rng: &mut ChaCha8Rng, pixels: usize, count: usize) -> Vec<f64> {
    let depths: Vec<f64> = (0..count).map(|j| j as f64).collect();
    let mut out = Vec::with_capacity(pixels * count);
    for _ in 0..pixels {
        let gt = rng.gen_range(0.0..(count - 1) as f64);
        let sigma = rng.gen_range(0.3..3.0);
        out.extend(reference_unimodal(&depths, gt, sigma).expect("positive sigma"));
    }
    out
}

fn check_focal(rng: &mut ChaCha8Rng, instances: usize, gamma: f64, weighting: FocalWeighting) -> f64 {
    let mut worst: f64 = 0.0;
    for _ in 0..instances {
        let (pixels, count) = (rng.gen_range(1..4), rng.gen_range(3..9));
        let p = random_reference(rng, pixels, count);
        let mut z: Vec<f64> = (0..p.len()).map(|_| rng.gen_range(-2.0..2.0)).collect();
        let analytic = stereo_focal_loss(&p, &z, count, gamma, weighting)
            .expect("valid")
            .grad;
        for k in 0..z.len() {
            let x = z[k];
            let num = central5(x, 1e-3, |v| {
                z[k] = v;
                stereo_focal_loss(&p, &z, count, gamma, weighting)
                    .expect("valid")
                    .value
            });
            z[k] = x;
            worst = worst.max(relative_error(analytic[k], num));
        }
    }
    worst
}

fn check_confidence(rng: &mut ChaCha8Rng, instances: usize) -> f64 {
    let mut worst: f64 = 0.0;
    for _ in 0..instances {
        let mut f: Vec<f64> = (0..rng.gen_range(1..20))
            .map(|_| rng.gen_range(0.05..0.95))
            .collect();
        let analytic = confidence_loss_gradient(&f).expect("valid");
        for k in 0..f.len() {
            let x = f[k];
            let num = central(x, 1e-6 * x, |v| {
                f[k] = v;
                confidence_loss(&f).expect("valid")
            });
            f[k] = x;
            worst = worst.max(relative_error(analytic[k], num));
        }
    }
    worst
}

fn check_regression(rng: &mut ChaCha8Rng, instances: usize) -> f64 {
    let mut worst: f64 = 0.0;
    for _ in 0..instances {
        let (w, h) = (rng.gen_range(1..5), rng.gen_range(1..5));
        let gt = DepthMap::new(w, h, (0..w * h).map(|_| rng.gen_range(400.0..1000.0)).collect())
            .expect("sizes match");
        let mut dm = gt.clone();
        for v in dm.data_mut() {
            // Keep clear of the kink at zero error.
            let off = rng.gen_range(0.5..20.0);
            *v += if rng.gen_bool(0.5) { off } else { -off };
        }
        let mut mask: Vec<bool> = (0..w * h).map(|_| rng.gen_bool(0.7)).collect();
        mask[0] = true;
        for k in 0..w * h {
            let analytic = if mask[k] {
                (dm.data()[k] - gt.data()[k]).signum()
            } else {
                0.0
            };
            let x = dm.data()[k];
            let num = central(x, 1e-4, |v| {
                dm.data_mut()[k] = v;
                regression_loss(&dm, &gt, &mask).expect("valid")
            });
            dm.data_mut()[k] = x;
            worst = worst.max(relative_error(analytic, num));
        }
    }
    worst
}

fn check_total(rng: &mut ChaCha8Rng, instances: usize) -> f64 {
    let weights = LossWeights::default();
    let mut worst: f64 = 0.0;
    for _ in 0..instances {
        let stages = rng.gen_range(1..5);
        let mut x: Vec<f64> = (0..2 + stages).map(|_| rng.gen_range(0.0..5.0)).collect();
        let analytic = total_loss_gradient(&weights, stages);
        let eval = |x: &[f64]| {
            let parts = LossParts {
                stereo_focal: x[0],
                confidence: x[1],
                regression: x[2..].to_vec(),
            };
            total_loss(&parts, &weights).expect("finite").total
        };
        for k in 0..x.len() {
            let v0 = x[k];
            let num = central(v0, 1e-5, |v| {
                x[k] = v;
                eval(&x)
            });
            x[k] = v0;
            worst = worst.max(relative_error(analytic[k], num));
        }
    }
    worst
}

/// Reference at the origin looking down +z and a source displaced by a
/// random baseline with a small random rotation.
pub fn random_camera_pair(rng: &mut impl Rng) -> (CameraParams, CameraParams) {
    let range = DepthRange::new(425.0, 1065.0).expect("valid range");
    let f = rng.gen_range(200.0..600.0);
    let pp = (rng.gen_range(100.0..160.0), rng.gen_range(80.0..120.0));
    let reference = CameraParams::look(f, pp, Rotation3::identity().into_inner(), Vector3::zeros(), range)
        .expect("valid camera");
    let rot = Rotation3::from_euler_angles(
        rng.gen_range(-0.1..0.1),
        rng.gen_range(-0.2..0.2),
        rng.gen_range(-0.1..0.1),
    );
    let center = Vector3::new(
        rng.gen_range(-150.0..150.0),
        rng.gen_range(-40.0..40.0),
        rng.gen_range(-20.0..20.0),
    );
    let source = CameraParams::look(f, pp, rot.into_inner(), center, range).expect("valid camera");
    (reference, source)
}

fn check_jacobian(rng: &mut ChaCha8Rng, instances: usize) -> f64 {
    let mut worst: f64 = 0.0;
    let mut done = 0;
    while done < instances {
        let (r, s) = random_camera_pair(rng);
        let warp = ViewWarp::new(&r, &s);
        let p = Point2::new(rng.gen_range(0.0..256.0), rng.gen_range(0.0..192.0));
        let d = rng.gen_range(450.0..1000.0);
        let (Some(j), Some(a), Some(b)) = (
            warp.jacobian(&p, d),
            warp.warp(&p, d * (1.0 + 1e-4)),
            warp.warp(&p, d * (1.0 - 1e-4)),
        ) else {
            continue;
        };
        if j.norm() < 1e-6 {
            continue;
        }
        let num = (a - b) / (2e-4 * d);
        let err = (j - num).norm() / j.norm().max(num.norm()).max(GUARD);
        worst = worst.max(err);
        done += 1;
    }
    worst
}

/// Runs every gradient check with `instances` random cases each.
pub fn run_losscheck(seed: u64, instances: usize) -> Vec<CheckRow> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut rows = Vec::new();
    for gamma in [0.0, 0.5, 2.0] {
        for weighting in [FocalWeighting::Printed, FocalWeighting::Conventional] {
            if gamma == 0.0 && weighting == FocalWeighting::Conventional {
                continue;
            }
            let name = format!(
                "stereo_focal[gamma={gamma},{}]",
                match weighting {
                    FocalWeighting::Printed => "printed",
                    FocalWeighting::Conventional => "conventional",
                }
            );
            rows.push(CheckRow::new(
                &name,
                instances,
                check_focal(&mut rng, instances, gamma, weighting),
            ));
        }
    }
    rows.push(CheckRow::new(
        "confidence",
        instances,
        check_confidence(&mut rng, instances),
    ));
    rows.push(CheckRow::new(
        "regression_l1",
        instances,
        check_regression(&mut rng, instances),
    ));
    rows.push(CheckRow::new(
        "total",
        instances,
        check_total(&mut rng, instances),
    ));
    rows.push(CheckRow::new(
        "warp_jacobian",
        instances,
        check_jacobian(&mut rng, instances),
    ));
    rows
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn all_checks_pass() {
        for row in run_losscheck(7, 20) {
            assert!(row.passed, "{row:?}");
        }
    }

    #[test]
    fn relative_error_guard() {
        assert_eq!(relative_error(0.0, 0.0), 0.0);
        assert!((relative_error(1e-12, 0.0) - 1e-4).abs() < 1e-18);
        assert!((relative_error(2.0, 1.0) - 0.5).abs() < 1e-15);
    }
}
