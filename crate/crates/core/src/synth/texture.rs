use nalgebra::Vector3;

fn splitmix(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

pub(crate) fn mix_seed(a: u64, b: u64) -> u64 {
    splitmix(a ^ splitmix(b))
}

/// Seeded 3D value noise: hashed lattice values, smoothstep-trilinear
/// interpolation, summed over octaves.
#[derive(Clone, Debug)]
pub struct ValueNoise {
    seed: u64,
    scale: f64,
    octaves: u32,
}

impl ValueNoise {
    pub fn new(seed: u64, scale: f64, octaves: u32) -> Self {
        Self {
            seed,
            scale,
            octaves: octaves.max(1),
        }
    }

    fn lattice(&self, octave: u32, x: i64, y: i64, z: i64) -> f64 {
        let mut h = splitmix(self.seed ^ (octave as u64).wrapping_mul(0x51_7cc1_b727_220a));
        for v in [x, y, z] {
            h = splitmix(h ^ v as u64);
        }
        (h >> 11) as f64 / (1u64 << 53) as f64
    }

    fn octave(&self, octave: u32, p: Vector3<f64>) -> f64 {
        let fl = p.map(f64::floor);
        let f = p - fl;
        let s = f.map(|t| t * t * (3.0 - 2.0 * t));
        let (x, y, z) = (fl.x as i64, fl.y as i64, fl.z as i64);
        let mut acc = 0.0;
        for corner in 0..8 {
            let (dx, dy, dz) = (corner & 1, (corner >> 1) & 1, (corner >> 2) & 1);
            let w = (if dx == 1 { s.x } else { 1.0 - s.x })
                * (if dy == 1 { s.y } else { 1.0 - s.y })
                * (if dz == 1 { s.z } else { 1.0 - s.z });
            acc += w * self.lattice(octave, x + dx, y + dy, z + dz);
        }
        acc
    }

    /// Value in [0, 1].
    pub fn sample(&self, p: &Vector3<f64>) -> f64 {
        let mut total = 0.0;
        let mut norm = 0.0;
        let mut amp = 1.0;
        let mut freq = 1.0 / self.scale;
        for o in 0..self.octaves {
            total += amp * self.octave(o, p * freq);
            norm += amp;
            amp *= 0.5;
            freq *= 2.0;
        }
        total / norm
    }
}
