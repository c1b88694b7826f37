//! Seeded procedural grayscale scenes.
//!
//! These stand in for natural photographs in tests, examples and the
//! property suite: smooth shading, hard edges, fine texture and thin strokes,
//! which are the structures halftoning destroys.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::image::GrayImage;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Scene {
    Clouds,
    Portrait,
    Facade,
    Landscape,
    Text,
}

impl Scene {
    pub const ALL: [Scene; 5] = [
        Scene::Clouds,
        Scene::Portrait,
        Scene::Facade,
        Scene::Landscape,
        Scene::Text,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Scene::Clouds => "clouds",
            Scene::Portrait => "portrait",
            Scene::Facade => "facade",
            Scene::Landscape => "landscape",
            Scene::Text => "text",
        }
    }
}

fn smoothstep(t: f64) -> f64 {
    t * t * (3.0 - 2.0 * t)
}

/// Value noise in `[0, 1]` on a lattice with the given cell size.
fn value_noise(h: usize, w: usize, cell: f64, rng: &mut ChaCha8Rng) -> Vec<f64> {
    let gh = (h as f64 / cell).ceil() as usize + 2;
    let gw = (w as f64 / cell).ceil() as usize + 2;
    let grid: Vec<f64> = (0..gh * gw).map(|_| rng.gen::<f64>()).collect();
    let mut out = Vec::with_capacity(h * w);
    for y in 0..h {
        let fy = y as f64 / cell;
        let (iy, ty) = (fy.floor() as usize, smoothstep(fy.fract()));
        for x in 0..w {
            let fx = x as f64 / cell;
            let (ix, tx) = (fx.floor() as usize, smoothstep(fx.fract()));
            let g = |yy: usize, xx: usize| grid[yy * gw + xx];
            let top = g(iy, ix) * (1.0 - tx) + g(iy, ix + 1) * tx;
            let bottom = g(iy + 1, ix) * (1.0 - tx) + g(iy + 1, ix + 1) * tx;
            out.push(top * (1.0 - ty) + bottom * ty);
        }
    }
    out
}

/// Octave sum of value noise, rescaled to `[0, 1]`.
fn fractal(h: usize, w: usize, base_cell: f64, octaves: usize, rng: &mut ChaCha8Rng) -> Vec<f64> {
    let mut acc = vec![0.0; h * w];
    let mut amp = 1.0;
    let mut cell = base_cell;
    for _ in 0..octaves {
        let layer = value_noise(h, w, cell.max(1.0), rng);
        acc.iter_mut().zip(&layer).for_each(|(a, l)| *a += amp * l);
        amp *= 0.5;
        cell /= 2.0;
    }
    let (lo, hi) = acc
        .iter()
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), &v| (lo.min(v), hi.max(v)));
    acc.iter().map(|v| (v - lo) / (hi - lo).max(1e-12)).collect()
}

/// Renders one scene of size `size × size`, values in `[0, 1]`.
pub fn scene(kind: Scene, size: usize, seed: u64) -> GrayImage {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let s = size as f64;
    let (h, w) = (size, size);
    let data = match kind {
        Scene::Clouds => fractal(h, w, s / 3.0, 5, &mut rng)
            .into_iter()
            .map(|v| 0.1 + 0.8 * v)
            .collect(),
        Scene::Portrait => {
            let tex = fractal(h, w, s / 8.0, 3, &mut rng);
            let (cy, cx) = (s * rng.gen_range(0.4..0.55), s * rng.gen_range(0.4..0.6));
            let (ry, rx) = (s * 0.32, s * 0.24);
            let (ey, ex) = (cy - ry * 0.2, rx * 0.35);
            let mut v = Vec::with_capacity(h * w);
            for y in 0..h {
                for x in 0..w {
                    let (fy, fx) = (y as f64, x as f64);
                    let bg = 0.25 + 0.35 * fx / s;
                    let d = ((fy - cy) / ry).powi(2) + ((fx - cx) / rx).powi(2);
                    let face = 1.0 / (1.0 + ((d - 1.0) * 12.0).exp());
                    let shade = 0.75 - 0.25 * (fx - cx) / rx;
                    let mut p = bg * (1.0 - face) + shade * face;
                    for side in [-1.0, 1.0] {
                        let de = ((fy - ey) / (s * 0.04)).powi(2) + ((fx - cx - side * ex) / (s * 0.06)).powi(2);
                        if de < 1.0 {
                            p = 0.1;
                        }
                    }
                    v.push(p + 0.08 * (tex[y * w + x] - 0.5));
                }
            }
            v
        }
        Scene::Facade => {
            let tex = fractal(h, w, s / 12.0, 3, &mut rng);
            let pitch = rng.gen_range(9..14) as f64;
            let win = pitch * 0.55;
            let mut v = Vec::with_capacity(h * w);
            for y in 0..h {
                for x in 0..w {
                    let (fy, fx) = (y as f64, x as f64);
                    let wall = 0.55 + 0.25 * (fy / s) - 0.15 * (fx / s);
                    let in_window = (fy % pitch) < win && (fx % pitch) < win && fy > pitch;
                    let p = if in_window {
                        0.15 + 0.1 * (fx % pitch) / win
                    } else {
                        wall
                    };
                    v.push(p + 0.06 * (tex[y * w + x] - 0.5));
                }
            }
            v
        }
        Scene::Landscape => {
            let ridge = fractal(1, w, s / 4.0, 4, &mut rng);
            let ground = fractal(h, w, s / 16.0, 4, &mut rng);
            let mut v = Vec::with_capacity(h * w);
            for y in 0..h {
                for x in 0..w {
                    let horizon = s * (0.35 + 0.25 * ridge[x]);
                    let fy = y as f64;
                    let p = if fy < horizon {
                        0.85 - 0.35 * fy / horizon
                    } else {
                        0.2 + 0.35 * ground[y * w + x] + 0.1 * (fy - horizon) / s
                    };
                    v.push(p);
                }
            }
            v
        }
        Scene::Text => {
            let paper = fractal(h, w, s / 6.0, 3, &mut rng);
            let mut img = vec![0.0; h * w];
            for (i, p) in img.iter_mut().enumerate() {
                *p = 0.82 + 0.1 * (paper[i] - 0.5);
            }
            let line_gap = rng.gen_range(10..14);
            let mut y0 = 4;
            while y0 + 7 < h {
                let mut x = 3;
                while x + 4 < w {
                    // a glyph: a few vertical and horizontal strokes in a 4x7 box
                    let glyph: u32 = rng.gen();
                    for gy in 0..7 {
                        for gx in 0..4 {
                            let stroke = (gx == 0 && glyph & 1 != 0)
                                || (gx == 3 && glyph & 2 != 0)
                                || (gy == 0 && glyph & 4 != 0)
                                || (gy == 3 && glyph & 8 != 0)
                                || (gy == 6 && glyph & 16 != 0);
                            if stroke {
                                img[(y0 + gy) * w + x + gx] = 0.12;
                            }
                        }
                    }
                    x += if glyph & 64 != 0 { 9 } else { 6 };
                }
                y0 += line_gap;
            }
            img
        }
    };
    GrayImage::new(h, w, data)
        .expect("scene dims")
        .clamp01()
}

/// The fixed five-scene evaluation set, one image per [`Scene`].
pub fn natural_test_set(size: usize) -> Vec<(&'static str, GrayImage)> {
    Scene::ALL
        .iter()
        .enumerate()
        .map(|(i, &k)| (k.name(), scene(k, size, 0x5A1D_0000 + i as u64)))
        .collect()
}

/// `count` scenes cycling through every kind, each from its own seed.
pub fn corpus(count: usize, size: usize, seed: u64) -> Vec<GrayImage> {
    (0..count)
        .map(|i| scene(Scene::ALL[i % Scene::ALL.len()], size, seed.wrapping_add(i as u64 * 7919)))
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn scenes_are_deterministic_and_in_range() {
        for k in Scene::ALL {
            let a = scene(k, 48, 3);
            assert_eq!(a, scene(k, 48, 3));
            assert!(a.is_in_unit_range());
            assert!(a.std() > 0.02, "{} is too flat", k.name());
        }
        assert_ne!(scene(Scene::Clouds, 48, 3), scene(Scene::Clouds, 48, 4));
    }
}
