use super::cost_volume::CostVolume;
use crate::error::Result;

/// Masked box aggregation of a cost volume.
///
/// Groups are first averaged into one score per `(pixel, depth)`. Each depth
/// slice is then filtered with a `(2r+1)²` box that only averages cells with
/// a non-zero mask. The result has a single group; its mask counts the valid
/// cells inside each window.
pub fn aggregate(cv: &CostVolume, radius: usize) -> Result<CostVolume> {
    let (w, h, d, g) = (cv.width(), cv.height(), cv.depths(), cv.groups());
    let inv_g = 1.0 / g as f32;
    let mean: Vec<f32> = cv
        .data()
        .chunks_exact(g)
        .map(|cell| cell.iter().sum::<f32>() * inv_g)
        .collect();
    let mask = cv.mask();
    let r = radius as isize;

    let rows: Vec<usize> = (0..h).collect();
    let results = crate::par::map_collect(&rows, |&y| {
        let mut data = vec![0f32; w * d];
        let mut counts = vec![0u16; w * d];
        let mut sums = vec![0f32; d];
        let mut n = vec![0u32; d];
        for x in 0..w {
            sums.iter_mut().for_each(|v| *v = 0.0);
            n.iter_mut().for_each(|v| *v = 0);
            let y0 = (y as isize - r).max(0) as usize;
            let y1 = (y as isize + r).min(h as isize - 1) as usize;
            let x0 = (x as isize - r).max(0) as usize;
            let x1 = (x as isize + r).min(w as isize - 1) as usize;
            for yy in y0..=y1 {
                for xx in x0..=x1 {
                    let base = (yy * w + xx) * d;
                    for j in 0..d {
                        if mask[base + j] > 0 {
                            sums[j] += mean[base + j];
                            n[j] += 1;
                        }
                    }
                }
            }
            for j in 0..d {
                if n[j] > 0 {
                    data[x * d + j] = sums[j] / n[j] as f32;
                    counts[x * d + j] = n[j].min(u16::MAX as u32) as u16;
                }
            }
        }
        (data, counts)
    });
    let mut data = Vec::with_capacity(w * h * d);
    let mut out_mask = Vec::with_capacity(w * h * d);
    for (a, m) in results {
        data.extend_from_slice(&a);
        out_mask.extend_from_slice(&m);
    }
    CostVolume::new(w, h, d, 1, data, out_mask)
}
