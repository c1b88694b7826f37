//! Floyd–Steinberg error diffusion.
//!
//! Plain raster scan, threshold 0.5 with ties going to white, and error that
//! would land outside the image is dropped.

use crate::error::{Error, Result};
use crate::image::{BitImage, GrayImage};

/// One error-diffusion tap: `(dy, dx, weight)`.
pub type DiffusionTap = (isize, isize, f64);

pub const FLOYD_STEINBERG: [DiffusionTap; 4] = [
    (0, 1, 7.0 / 16.0),
    (1, -1, 3.0 / 16.0),
    (1, 0, 5.0 / 16.0),
    (1, 1, 1.0 / 16.0),
];

pub const THRESHOLD: f64 = 0.5;

/// Error-diffuses an image with the given taps. Taps must point to pixels
/// not yet visited in raster order.
pub fn error_diffuse(img: &GrayImage, taps: &[DiffusionTap]) -> Result<BitImage> {
    if let Some(v) = img.data().iter().find(|v| !(0.0..=1.0).contains(*v)) {
        return Err(Error::Range(format!(
            "halftoning needs samples in [0, 1], found {v}"
        )));
    }
    let (h, w) = img.dims();
    let mut work = img.data().to_vec();
    let mut out = vec![0u8; h * w];
    for y in 0..h {
        for x in 0..w {
            let v = work[y * w + x];
            let bit = u8::from(v >= THRESHOLD);
            out[y * w + x] = bit;
            let err = v - f64::from(bit);
            for &(dy, dx, weight) in taps {
                let (ny, nx) = (y as isize + dy, x as isize + dx);
                if ny < h as isize && nx >= 0 && nx < w as isize {
                    work[ny as usize * w + nx as usize] += err * weight;
                }
            }
        }
    }
    BitImage::new(h, w, out)
}

pub fn floyd_steinberg(img: &GrayImage) -> Result<BitImage> {
    error_diffuse(img, &FLOYD_STEINBERG)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn weights_sum_to_one() {
        let total: f64 = FLOYD_STEINBERG.iter().map(|t| t.2).sum();
        assert_eq!(total, 1.0);
    }

    #[test]
    fn constant_extremes() {
        let zeros = floyd_steinberg(&GrayImage::zeros(6, 5)).unwrap();
        assert!(zeros.data().iter().all(|&b| b == 0));
        let ones = floyd_steinberg(&GrayImage::filled(6, 5, 1.0)).unwrap();
        assert!(ones.data().iter().all(|&b| b == 1));
    }

    #[test]
    fn hand_traced_row() {
        let row = GrayImage::filled(1, 4, 0.5);
        assert_eq!(floyd_steinberg(&row).unwrap().data(), &[1, 0, 1, 0]);
    }

    #[test]
    fn rejects_out_of_range() {
        let img = GrayImage::new(1, 2, vec![0.2, 1.01]).unwrap();
        assert!(matches!(floyd_steinberg(&img), Err(Error::Range(_))));
    }

    #[test]
    fn tone_preserved_on_mid_gray() {
        let out = floyd_steinberg(&GrayImage::filled(64, 64, 0.5)).unwrap();
        assert!((out.mean() - 0.5).abs() <= 0.02);
    }
}
