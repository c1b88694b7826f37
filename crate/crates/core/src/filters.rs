//! Fixed linear filters: Gaussian smoothing, same-size convolution, and the
//! discrete Laplacian.
//!
//! Every fixed filter replicates edge pixels at the border. Convolution flips
//! the kernel; all kernels built here are symmetric, so it coincides with
//! correlation.

use crate::error::{Error, Result};
use crate::image::GrayImage;

/// Odd-sided square filter.
#[derive(Debug, Clone, PartialEq)]
pub struct Kernel {
    side: usize,
    taps: Vec<f64>,
}

impl Kernel {
    pub fn new(side: usize, taps: Vec<f64>) -> Result<Self> {
        if side % 2 == 0 {
            return Err(Error::Kernel(format!("side {side} is not odd")));
        }
        if taps.len() != side * side {
            return Err(Error::Kernel(format!(
                "{side}x{side} kernel needs {} taps, got {}",
                side * side,
                taps.len()
            )));
        }
        Ok(Self { side, taps })
    }

    #[inline]
    pub fn side(&self) -> usize {
        self.side
    }

    #[inline]
    pub fn taps(&self) -> &[f64] {
        &self.taps
    }

    #[inline]
    pub fn tap(&self, i: usize, j: usize) -> f64 {
        self.taps[i * self.side + j]
    }

    pub fn sum(&self) -> f64 {
        self.taps.iter().sum()
    }
}

/// Normalized isotropic Gaussian of the given standard deviation.
pub fn gaussian_kernel(sigma: f64, side: usize) -> Result<Kernel> {
    if !(sigma > 0.0) || !sigma.is_finite() {
        return Err(Error::Kernel(format!("sigma must be positive, got {sigma}")));
    }
    if side % 2 == 0 {
        return Err(Error::Kernel(format!("side {side} is not odd")));
    }
    let c = (side / 2) as f64;
    let mut taps = Vec::with_capacity(side * side);
    for i in 0..side {
        for j in 0..side {
            let (di, dj) = (i as f64 - c, j as f64 - c);
            taps.push((-(di * di + dj * dj) / (2.0 * sigma * sigma)).exp());
        }
    }
    let total: f64 = taps.iter().sum();
    taps.iter_mut().for_each(|t| *t /= total);
    Kernel::new(side, taps)
}

/// The 4-neighbour stencil `[[0,1,0],[1,-4,1],[0,1,0]]`.
pub fn laplacian_kernel() -> Kernel {
    Kernel::new(3, vec![0.0, 1.0, 0.0, 1.0, -4.0, 1.0, 0.0, 1.0, 0.0]).expect("3x3")
}

/// Same-size 2-D convolution with edge replication.
pub fn convolve_same(img: &GrayImage, k: &Kernel) -> Result<GrayImage> {
    let (h, w) = img.dims();
    let side = k.side();
    if side > h || side > w {
        return Err(Error::Dimension(format!(
            "{side}x{side} kernel is larger than {h}x{w} image"
        )));
    }
    let r = (side / 2) as isize;
    let src = img.data();
    let mut out = vec![0.0; h * w];
    for y in 0..h {
        for x in 0..w {
            let mut acc = 0.0;
            for i in 0..side {
                // flipped kernel: tap (i, j) reads the pixel at offset (c - i, c - j)
                let sy = (y as isize + r - i as isize).clamp(0, h as isize - 1) as usize;
                let row = &src[sy * w..(sy + 1) * w];
                for j in 0..side {
                    let sx = (x as isize + r - j as isize).clamp(0, w as isize - 1) as usize;
                    acc += k.tap(i, j) * row[sx];
                }
            }
            out[y * w + x] = acc;
        }
    }
    GrayImage::new(h, w, out)
}

/// Laplacian map of an image. Images smaller than 3x3 yield an error.
pub fn laplacian_map(img: &GrayImage) -> Result<GrayImage> {
    convolve_same(img, &laplacian_kernel())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn gaussian_rejects_bad_args() {
        assert!(gaussian_kernel(1.0, 4).is_err());
        assert!(gaussian_kernel(0.0, 5).is_err());
        assert!(gaussian_kernel(-1.0, 5).is_err());
        assert!(gaussian_kernel(f64::NAN, 5).is_err());
    }

    #[test]
    fn gaussian_sum_and_symmetry() {
        for &(sigma, side) in &[(1.0, 5), (0.5, 3), (2.3, 7), (1.0, 1)] {
            let k = gaussian_kernel(sigma, side).unwrap();
            assert!((k.sum() - 1.0).abs() <= 1e-12);
            for i in 0..side {
                for j in 0..side {
                    assert_eq!(k.tap(i, j), k.tap(j, i));
                    assert_eq!(k.tap(i, j), k.tap(side - 1 - i, j));
                    assert_eq!(k.tap(i, j), k.tap(i, side - 1 - j));
                }
            }
        }
    }

    #[test]
    fn gaussian_center_tap() {
        // independent route: separable 1-D normalization, squared
        let row: f64 = (-2i32..=2).map(|i| (-(i * i) as f64 / 2.0).exp()).sum();
        let expected = 1.0 / (row * row);
        let k = gaussian_kernel(1.0, 5).unwrap();
        assert!((k.tap(2, 2) - expected).abs() < 1e-15);
        assert!((k.tap(2, 2) - 0.162_102_9).abs() < 1e-6);
    }

    #[test]
    fn gaussian_decreases_along_axes() {
        let k = gaussian_kernel(1.0, 5).unwrap();
        assert!(k.tap(2, 2) > k.tap(2, 3) && k.tap(2, 3) > k.tap(2, 4));
        assert!(k.tap(2, 2) > k.tap(1, 2) && k.tap(1, 2) > k.tap(0, 2));
    }

    #[test]
    fn impulse_response() {
        let k = gaussian_kernel(1.0, 5).unwrap();
        let mut img = GrayImage::zeros(9, 9);
        img.set(4, 4, 1.0);
        let out = convolve_same(&img, &k).unwrap();
        for i in 0..5 {
            for j in 0..5 {
                assert_eq!(out.get(2 + i, 2 + j), k.tap(i, j));
            }
        }
    }

    #[test]
    fn constant_preserved() {
        let k = gaussian_kernel(1.0, 5).unwrap();
        let out = convolve_same(&GrayImage::filled(7, 6, 0.37), &k).unwrap();
        assert!(out.data().iter().all(|&v| (v - 0.37).abs() < 1e-15));
    }

    #[test]
    fn box_center() {
        let img = GrayImage::from_fn(3, 3, |y, x| (y * 3 + x + 1) as f64);
        let k = Kernel::new(3, vec![1.0 / 9.0; 9]).unwrap();
        let out = convolve_same(&img, &k).unwrap();
        assert!((out.get(1, 1) - 5.0).abs() < 1e-12);
    }

    #[test]
    fn kernel_larger_than_image() {
        let k = gaussian_kernel(1.0, 5).unwrap();
        assert!(matches!(
            convolve_same(&GrayImage::zeros(4, 8), &k),
            Err(Error::Dimension(_))
        ));
    }

    #[test]
    fn laplacian_cases() {
        let flat = laplacian_map(&GrayImage::filled(5, 5, 0.8)).unwrap();
        assert!(flat.data().iter().all(|&v| v.abs() < 1e-15));

        let mut delta = GrayImage::zeros(3, 3);
        delta.set(1, 1, 1.0);
        let lap = laplacian_map(&delta).unwrap();
        assert_eq!(lap.get(1, 1), -4.0);
        for (y, x) in [(0, 1), (1, 0), (1, 2), (2, 1)] {
            assert_eq!(lap.get(y, x), 1.0);
        }

        // columns 0 0 1 1: +1 on the dark side of the edge, -1 on the bright side
        let step = GrayImage::from_fn(4, 4, |_, x| if x >= 2 { 1.0 } else { 0.0 });
        let lap = laplacian_map(&step).unwrap();
        for y in 0..4 {
            assert_eq!(
                (0..4).map(|x| lap.get(y, x)).collect::<Vec<_>>(),
                vec![0.0, 1.0, -1.0, 0.0]
            );
        }
    }
}
