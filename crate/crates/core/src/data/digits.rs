//! Procedural handwritten-style digits: each class is a set of strokes in the
//! unit square, jittered per sample and rendered with anti-aliased thickness.

use std::f64::consts::PI;

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::{DomainDataset, Split};
use crate::error::{Error, Result};
use crate::method::VoteLabel;

pub const DIGIT_SIZE: usize = 28;

type Point = (f64, f64);
type Stroke = Vec<Point>;

fn arc(cx: f64, cy: f64, rx: f64, ry: f64, from: f64, to: f64) -> Stroke {
    let n = 16;
    (0..=n)
        .map(|s| {
            let a = PI * (from + (to - from) * s as f64 / n as f64);
            (cx + rx * a.cos(), cy + ry * a.sin())
        })
        .collect()
}

// angles in units of π; y grows downwards so 1.5 is the top of an ellipse
fn glyph(digit: usize) -> Vec<Stroke> {
    match digit {
        0 => vec![arc(0.5, 0.5, 0.2, 0.32, 0.0, 2.0)],
        1 => vec![vec![(0.38, 0.27), (0.52, 0.16), (0.52, 0.84)]],
        2 => {
            let mut s = arc(0.5, 0.34, 0.2, 0.18, 1.0, 2.25);
            s.extend([(0.28, 0.84), (0.76, 0.84)]);
            vec![s]
        }
        3 => vec![arc(0.5, 0.33, 0.19, 0.16, 1.1, 2.5), arc(0.5, 0.66, 0.22, 0.18, 1.5, 2.85)],
        4 => vec![vec![(0.62, 0.16), (0.26, 0.62), (0.78, 0.62)], vec![(0.62, 0.16), (0.62, 0.84)]],
        5 => {
            let mut s = vec![(0.72, 0.16), (0.34, 0.16), (0.31, 0.47)];
            s.extend(arc(0.5, 0.64, 0.21, 0.2, 1.2, 2.8));
            vec![s]
        }
        6 => vec![
            vec![(0.68, 0.16), (0.42, 0.38), (0.3, 0.64)],
            arc(0.5, 0.66, 0.2, 0.18, 0.0, 2.0),
        ],
        7 => vec![vec![(0.25, 0.16), (0.76, 0.16), (0.42, 0.84)]],
        8 => vec![arc(0.5, 0.32, 0.17, 0.16, 0.0, 2.0), arc(0.5, 0.67, 0.21, 0.18, 0.0, 2.0)],
        9 => vec![arc(0.5, 0.34, 0.2, 0.18, 0.0, 2.0), vec![(0.7, 0.36), (0.62, 0.84)]],
        _ => unreachable!("digits are 0..10"),
    }
}

fn segment_distance(p: Point, a: Point, b: Point) -> f64 {
    let (dx, dy) = (b.0 - a.0, b.1 - a.1);
    let len2 = dx * dx + dy * dy;
    let t = if len2 > 0.0 {
        (((p.0 - a.0) * dx + (p.1 - a.1) * dy) / len2).clamp(0.0, 1.0)
    } else {
        0.0
    };
    let (qx, qy) = (a.0 + t * dx - p.0, a.1 + t * dy - p.1);
    (qx * qx + qy * qy).sqrt()
}

/// Renders one jittered digit into `out` (`size × size`, values in `[0,1]`).
fn render<R: Rng>(digit: usize, size: usize, rng: &mut R, out: &mut [f64]) {
    let angle = rng.gen_range(-0.25..0.25);
    let shear = rng.gen_range(-0.25..0.25);
    let (sx, sy) = (rng.gen_range(0.8..1.1), rng.gen_range(0.85..1.1));
    let (tx, ty) = (rng.gen_range(-0.07..0.07), rng.gen_range(-0.06..0.06));
    let thickness = rng.gen_range(0.035..0.07);
    let ink = rng.gen_range(0.75..1.0);
    let wobble = 0.025;
    let (sin, cos) = (f64::sin(angle), f64::cos(angle));

    let strokes: Vec<Stroke> = glyph(digit)
        .into_iter()
        .map(|stroke| {
            stroke
                .into_iter()
                .map(|(x, y)| {
                    let x = x + rng.gen_range(-wobble..wobble) - 0.5;
                    let y = y + rng.gen_range(-wobble..wobble) - 0.5;
                    let (x, y) = (sx * (x + shear * y), sy * y);
                    let (x, y) = (cos * x - sin * y, sin * x + cos * y);
                    ((x + 0.5 + tx) * size as f64, (y + 0.5 + ty) * size as f64)
                })
                .collect()
        })
        .collect();

    let half_width = thickness * size as f64;
    for i in 0..size {
        for j in 0..size {
            let p = (j as f64 + 0.5, i as f64 + 0.5);
            let mut d = f64::INFINITY;
            for s in &strokes {
                for w in s.windows(2) {
                    d = d.min(segment_distance(p, w[0], w[1]));
                }
            }
            out[i * size + j] = ink * (half_width - d + 0.5).clamp(0.0, 1.0);
        }
    }
}

/// `n` synthetic `28×28` digits with balanced labels in shuffled order; every domain id is 0.
pub fn generate_digits(n: usize, split: Split, seed: u64) -> Result<DomainDataset> {
    if n == 0 {
        return Err(Error::Config("synthetic dataset size must be positive".into()));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut labels: Vec<usize> = (0..n).map(|i| i % 10).collect();
    labels.shuffle(&mut rng);
    let hw = DIGIT_SIZE * DIGIT_SIZE;
    let mut pixels = vec![0.0; n * hw];
    for (i, &l) in labels.iter().enumerate() {
        render(l, DIGIT_SIZE, &mut rng, &mut pixels[i * hw..(i + 1) * hw]);
    }
    DomainDataset::new(
        DIGIT_SIZE,
        DIGIT_SIZE,
        pixels,
        labels.into_iter().map(VoteLabel::Single).collect(),
        vec![0; n],
        split,
    )
}
