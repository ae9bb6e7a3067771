use crate::error::{Error, Result};
use crate::ingest::ConfidenceMap;
use crate::matching::ProbabilityVolume;

use super::distribution::{sigma_from_confidence, UnimodalParams};

fn argmax(p: &[f64]) -> usize {
    let mut best = 0;
    for (j, v) in p.iter().enumerate() {
        if *v > p[best] {
            best = j;
        }
    }
    best
}

/// Multiplies one distribution by a Laplacian kernel centred on its mode and
/// renormalizes. The kernel width is `σ(f)` hypothesis spacings, so low
/// confidence keeps more of the original spread.
pub fn auf_filter_row(probs: &[f64], depths: &[f64], confidence: f64, params: &UnimodalParams) -> Vec<f64> {
    let n = probs.len();
    if n < 2 {
        return probs.to_vec();
    }
    let spacing = (depths[n - 1] - depths[0]).abs() / (n - 1) as f64;
    let sigma = sigma_from_confidence(confidence.clamp(0.0, 1.0), params) * spacing;
    let peak = argmax(probs);
    if !(sigma > 0.0) {
        let mut out = vec![0.0; n];
        out[peak] = 1.0;
        return out;
    }
    let centre = depths[peak];
    let mut out: Vec<f64> = probs
        .iter()
        .zip(depths)
        .map(|(p, d)| p * (-(d - centre).abs() / sigma).exp())
        .collect();
    let sum: f64 = out.iter().sum();
    if sum > 0.0 && sum.is_finite() {
        out.iter_mut().for_each(|v| *v /= sum);
    } else {
        out.iter_mut().for_each(|v| *v = 0.0);
        out[peak] = 1.0;
    }
    out
}

/// Applies [`auf_filter_row`] to every valid pixel of a stage volume.
pub fn auf_filter(
    pv: &ProbabilityVolume,
    confidence: &ConfidenceMap,
    params: &UnimodalParams,
) -> Result<ProbabilityVolume> {
    if confidence.len() != pv.pixel_count() || confidence.width() != pv.width() {
        return Err(Error::Dimensions(
            "confidence map does not match the volume".into(),
        ));
    }
    let valid = pv.valid();
    let conf = confidence.data();
    pv.map_rows(|i, row| {
        if valid[i] {
            auf_filter_row(row, pv.depths(i), conf[i], params)
        } else {
            row.to_vec()
        }
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::sampling::DepthHypotheses;
    use proptest::prelude::*;

    fn depths(n: usize) -> Vec<f64> {
        (0..n).map(|j| 500.0 + 4.0 * j as f64).collect()
    }

    #[test]
    fn sharpens_a_bimodal_row() {
        let d = depths(9);
        let p = [0.05, 0.3, 0.05, 0.05, 0.05, 0.05, 0.05, 0.35, 0.05];
        let p: Vec<f64> = p.iter().map(|v| v / p.iter().sum::<f64>()).collect();
        let params = UnimodalParams {
            alpha_c: 13.0,
            beta_c: 0.5,
            ..Default::default()
        };
        let out = auf_filter_row(&p, &d, 0.35, &params);
        assert_eq!(argmax(&out), 7);
        assert!(out[1] < p[1]);
        assert!((out.iter().sum::<f64>() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn volume_filter_keeps_invalid_rows() {
        let hyps = DepthHypotheses::shared(vec![1.0, 2.0, 3.0]).unwrap();
        let data = vec![0.2, 0.5, 0.3, 1.0 / 3.0, 1.0 / 3.0, 1.0 / 3.0];
        let pv = ProbabilityVolume::new(2, 1, data.clone(), hyps, vec![true, false]).unwrap();
        let conf = ConfidenceMap::new(2, 1, vec![0.5, 1.0 / 3.0]).unwrap();
        let out = auf_filter(&pv, &conf, &UnimodalParams::default()).unwrap();
        assert_eq!(out.row(1), &data[3..]);
        assert_eq!(argmax(out.row(0)), 1);
        assert!(out.row(0)[1] > 0.5);
        assert!(auf_filter(&pv, &ConfidenceMap::filled(1, 1, 0.5), &UnimodalParams::default()).is_err());
    }

    proptest! {
        #[test]
        fn keeps_mode_and_normalization(raw in prop::collection::vec(0.001f64..1.0, 2..40), f in 0.0f64..1.0) {
            let s: f64 = raw.iter().sum();
            let p: Vec<f64> = raw.iter().map(|v| v / s).collect();
            let out = auf_filter_row(&p, &depths(p.len()), f, &UnimodalParams::default());
            prop_assert_eq!(argmax(&out), argmax(&p));
            prop_assert!((out.iter().sum::<f64>() - 1.0).abs() < 1e-9);
            prop_assert!(out.iter().all(|v| *v >= 0.0));
        }
    }
}
