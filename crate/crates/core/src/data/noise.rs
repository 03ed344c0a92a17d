use rand::seq::index;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};

/// Axis along which a wave's position `r` is measured.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Orientation {
    /// `r = column`
    Horizontal,
    /// `r = row`
    Vertical,
    /// `r = row + column`
    Diagonal,
    /// `r = row + (W − 1 − column)`
    AntiDiagonal,
}

const ORIENTATIONS: [Orientation; 4] = [
    Orientation::Horizontal,
    Orientation::Vertical,
    Orientation::Diagonal,
    Orientation::AntiDiagonal,
];

/// Positional-encoding style noise patterns, all of size `H×W`.
#[derive(Clone, Debug, PartialEq)]
pub struct NoiseBank {
    height: usize,
    width: usize,
    alpha: f64,
    waves: Vec<f64>,
    kinds: Vec<(Orientation, usize)>,
}

impl NoiseBank {
    pub fn num_waves(&self) -> usize {
        self.kinds.len()
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn alpha(&self) -> f64 {
        self.alpha
    }

    pub fn wave(&self, n: usize) -> &[f64] {
        let hw = self.height * self.width;
        &self.waves[n * hw..(n + 1) * hw]
    }

    /// Orientation and frequency index of wave `n`.
    pub fn wave_kind(&self, n: usize) -> (Orientation, usize) {
        self.kinds[n]
    }

    /// `clip(x + α·wave_n, 0, 1)` in place.
    pub fn shift(&self, pixels: &mut [f64], n: usize) {
        for (p, w) in pixels.iter_mut().zip(self.wave(n)) {
            *p = (*p + self.alpha * w).clamp(0.0, 1.0);
        }
    }
}

fn wave_value(orientation: Orientation, c: usize, i: usize, j: usize, width: usize) -> f64 {
    let r = match orientation {
        Orientation::Horizontal => j,
        Orientation::Vertical => i,
        Orientation::Diagonal => i + j,
        Orientation::AntiDiagonal => i + (width - 1 - j),
    } as f64;
    let angle = r / 10000f64.powf(2.0 * (c / 2) as f64 / width as f64);
    if c % 2 == 0 {
        angle.sin()
    } else {
        angle.cos()
    }
}

/// Builds `num_waves` patterns; each picks an orientation and a frequency index
/// `c ∈ [0, W)`, distinct while the `4·W` combinations last.
pub fn make_noise_bank(height: usize, width: usize, num_waves: usize, alpha: f64, seed: u64) -> Result<NoiseBank> {
    if !(alpha > 0.0 && alpha <= 1.0) {
        return Err(Error::Config(format!("noise amplitude must be in (0,1], got {alpha}")));
    }
    if num_waves == 0 || height == 0 || width == 0 {
        return Err(Error::Config("noise bank needs at least one wave and a non-empty grid".into()));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let combos = ORIENTATIONS.len() * width;
    let picks: Vec<usize> = if num_waves <= combos {
        index::sample(&mut rng, combos, num_waves).into_vec()
    } else {
        (0..num_waves).map(|_| rng.gen_range(0..combos)).collect()
    };
    let kinds: Vec<(Orientation, usize)> = picks.iter().map(|&p| (ORIENTATIONS[p / width], p % width)).collect();
    let mut waves = Vec::with_capacity(num_waves * height * width);
    for &(o, c) in &kinds {
        for i in 0..height {
            for j in 0..width {
                waves.push(wave_value(o, c, i, j, width));
            }
        }
    }
    Ok(NoiseBank {
        height,
        width,
        alpha,
        waves,
        kinds,
    })
}
