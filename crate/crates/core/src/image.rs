//! Pixel containers shared by every stage of the pipeline.
//!
//! All continuous-tone math runs in `f64`. Layers that carry signed values
//! (residuals, detail layers, Laplacian maps) use the same [`GrayImage`]
//! container; only final reconstructions are clamped to `[0, 1]`.

use crate::error::{Error, Result};

/// BT.601 luma weights.
pub const LUMA_WEIGHTS: [f64; 3] = [0.299, 0.587, 0.114];

/// Row-major single-plane raster.
#[derive(Debug, Clone, PartialEq)]
pub struct GrayImage {
    height: usize,
    width: usize,
    data: Vec<f64>,
}

impl GrayImage {
    pub fn new(height: usize, width: usize, data: Vec<f64>) -> Result<Self> {
        if height == 0 || width == 0 {
            return Err(Error::Dimension(format!(
                "image must be at least 1x1, got {height}x{width}"
            )));
        }
        if data.len() != height * width {
            return Err(Error::Dimension(format!(
                "{height}x{width} image needs {} samples, got {}",
                height * width,
                data.len()
            )));
        }
        Ok(Self {
            height,
            width,
            data,
        })
    }

    /// Constant image. Panics on a zero dimension.
    pub fn filled(height: usize, width: usize, value: f64) -> Self {
        assert!(height > 0 && width > 0, "image must be at least 1x1");
        Self {
            height,
            width,
            data: vec![value; height * width],
        }
    }

    pub fn zeros(height: usize, width: usize) -> Self {
        Self::filled(height, width, 0.0)
    }

    pub fn from_fn(height: usize, width: usize, mut f: impl FnMut(usize, usize) -> f64) -> Self {
        assert!(height > 0 && width > 0, "image must be at least 1x1");
        let mut data = Vec::with_capacity(height * width);
        for y in 0..height {
            for x in 0..width {
                data.push(f(y, x));
            }
        }
        Self {
            height,
            width,
            data,
        }
    }

    #[inline]
    pub fn height(&self) -> usize {
        self.height
    }

    #[inline]
    pub fn width(&self) -> usize {
        self.width
    }

    #[inline]
    pub fn dims(&self) -> (usize, usize) {
        (self.height, self.width)
    }

    #[inline]
    pub fn len(&self) -> usize {
        self.data.len()
    }

    #[inline]
    pub fn is_empty(&self) -> bool {
        self.data.is_empty()
    }

    #[inline]
    pub fn data(&self) -> &[f64] {
        &self.data
    }

    #[inline]
    pub fn data_mut(&mut self) -> &mut [f64] {
        &mut self.data
    }

    pub fn into_data(self) -> Vec<f64> {
        self.data
    }

    #[inline]
    pub fn get(&self, y: usize, x: usize) -> f64 {
        self.data[y * self.width + x]
    }

    #[inline]
    pub fn set(&mut self, y: usize, x: usize, v: f64) {
        self.data[y * self.width + x] = v;
    }

    pub fn map(&self, f: impl Fn(f64) -> f64) -> Self {
        Self {
            height: self.height,
            width: self.width,
            data: self.data.iter().map(|&v| f(v)).collect(),
        }
    }

    /// Pixelwise combination of two equally sized images.
    pub fn zip_map(&self, other: &GrayImage, f: impl Fn(f64, f64) -> f64) -> Result<Self> {
        self.check_same_dims(other)?;
        Ok(Self {
            height: self.height,
            width: self.width,
            data: self
                .data
                .iter()
                .zip(&other.data)
                .map(|(&a, &b)| f(a, b))
                .collect(),
        })
    }

    pub fn add(&self, other: &GrayImage) -> Result<Self> {
        self.zip_map(other, |a, b| a + b)
    }

    pub fn sub(&self, other: &GrayImage) -> Result<Self> {
        self.zip_map(other, |a, b| a - b)
    }

    pub fn check_same_dims(&self, other: &GrayImage) -> Result<()> {
        if self.dims() != other.dims() {
            return Err(Error::Dimension(format!(
                "{}x{} vs {}x{}",
                self.height, self.width, other.height, other.width
            )));
        }
        Ok(())
    }

    pub fn crop(&self, y0: usize, x0: usize, height: usize, width: usize) -> Result<Self> {
        if height == 0 || width == 0 || y0 + height > self.height || x0 + width > self.width {
            return Err(Error::Dimension(format!(
                "crop {height}x{width} at ({y0},{x0}) exceeds {}x{} image",
                self.height, self.width
            )));
        }
        let mut data = Vec::with_capacity(height * width);
        for y in y0..y0 + height {
            let row = y * self.width;
            data.extend_from_slice(&self.data[row + x0..row + x0 + width]);
        }
        Ok(Self {
            height,
            width,
            data,
        })
    }

    pub fn clamp01(&self) -> Self {
        self.map(|v| v.clamp(0.0, 1.0))
    }

    pub fn mean(&self) -> f64 {
        self.data.iter().sum::<f64>() / self.data.len() as f64
    }

    /// Population standard deviation.
    pub fn std(&self) -> f64 {
        let mean = self.mean();
        let var = self.data.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>()
            / self.data.len() as f64;
        var.sqrt()
    }

    pub fn min(&self) -> f64 {
        self.data.iter().copied().fold(f64::INFINITY, f64::min)
    }

    pub fn max(&self) -> f64 {
        self.data.iter().copied().fold(f64::NEG_INFINITY, f64::max)
    }

    pub fn max_abs_diff(&self, other: &GrayImage) -> Result<f64> {
        self.check_same_dims(other)?;
        Ok(self
            .data
            .iter()
            .zip(&other.data)
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max))
    }

    pub fn is_in_unit_range(&self) -> bool {
        self.data.iter().all(|v| (0.0..=1.0).contains(v))
    }

    /// Affine map `(v + 1) / 2` used to persist signed layers as 8-bit grays.
    pub fn offset_encode(&self) -> Self {
        self.map(|v| (v + 1.0) / 2.0)
    }

    /// Inverse of [`GrayImage::offset_encode`].
    pub fn offset_decode(&self) -> Self {
        self.map(|v| 2.0 * v - 1.0)
    }
}

/// Bilevel raster with values in `{0, 1}`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct BitImage {
    height: usize,
    width: usize,
    data: Vec<u8>,
}

impl BitImage {
    pub fn new(height: usize, width: usize, data: Vec<u8>) -> Result<Self> {
        if height == 0 || width == 0 || data.len() != height * width {
            return Err(Error::Dimension(format!(
                "bit image {height}x{width} with {} samples",
                data.len()
            )));
        }
        if let Some(bad) = data.iter().find(|&&b| b > 1) {
            return Err(Error::Range(format!("bit image value {bad} is not 0 or 1")));
        }
        Ok(Self {
            height,
            width,
            data,
        })
    }

    /// Interprets a gray image as bilevel; every sample must be exactly 0 or 1.
    pub fn from_gray_exact(img: &GrayImage) -> Result<Self> {
        let mut data = Vec::with_capacity(img.len());
        for &v in img.data() {
            if v == 0.0 {
                data.push(0);
            } else if v == 1.0 {
                data.push(1);
            } else {
                return Err(Error::Range(format!("{v} is not a bilevel sample")));
            }
        }
        Self::new(img.height(), img.width(), data)
    }

    #[inline]
    pub fn height(&self) -> usize {
        self.height
    }

    #[inline]
    pub fn width(&self) -> usize {
        self.width
    }

    #[inline]
    pub fn dims(&self) -> (usize, usize) {
        (self.height, self.width)
    }

    #[inline]
    pub fn data(&self) -> &[u8] {
        &self.data
    }

    #[inline]
    pub fn get(&self, y: usize, x: usize) -> u8 {
        self.data[y * self.width + x]
    }

    pub fn to_gray(&self) -> GrayImage {
        GrayImage {
            height: self.height,
            width: self.width,
            data: self.data.iter().map(|&b| f64::from(b)).collect(),
        }
    }

    pub fn crop(&self, y0: usize, x0: usize, height: usize, width: usize) -> Result<Self> {
        if height == 0 || width == 0 || y0 + height > self.height || x0 + width > self.width {
            return Err(Error::Dimension(format!(
                "crop {height}x{width} at ({y0},{x0}) exceeds {}x{} bit image",
                self.height, self.width
            )));
        }
        let mut data = Vec::with_capacity(height * width);
        for y in y0..y0 + height {
            let row = y * self.width;
            data.extend_from_slice(&self.data[row + x0..row + x0 + width]);
        }
        Ok(Self {
            height,
            width,
            data,
        })
    }

    pub fn mean(&self) -> f64 {
        self.data.iter().map(|&b| f64::from(b)).sum::<f64>() / self.data.len() as f64
    }
}

/// Three equally sized R, G, B planes.
#[derive(Debug, Clone, PartialEq)]
pub struct ColorImage {
    planes: [GrayImage; 3],
}

impl ColorImage {
    pub fn new(r: GrayImage, g: GrayImage, b: GrayImage) -> Result<Self> {
        r.check_same_dims(&g)?;
        r.check_same_dims(&b)?;
        Ok(Self { planes: [r, g, b] })
    }

    pub fn from_gray(gray: &GrayImage) -> Self {
        Self {
            planes: [gray.clone(), gray.clone(), gray.clone()],
        }
    }

    pub fn height(&self) -> usize {
        self.planes[0].height()
    }

    pub fn width(&self) -> usize {
        self.planes[0].width()
    }

    pub fn dims(&self) -> (usize, usize) {
        self.planes[0].dims()
    }

    pub fn planes(&self) -> &[GrayImage; 3] {
        &self.planes
    }

    pub fn into_planes(self) -> [GrayImage; 3] {
        self.planes
    }

    pub fn map_planes(&self, mut f: impl FnMut(&GrayImage) -> Result<GrayImage>) -> Result<Self> {
        let [r, g, b] = &self.planes;
        Self::new(f(r)?, f(g)?, f(b)?)
    }
}

/// BT.601 luma, clamped to `[0, 1]` to absorb rounding at the cube corners.
pub fn to_grayscale(c: &ColorImage) -> GrayImage {
    let [r, g, b] = c.planes();
    let [wr, wg, wb] = LUMA_WEIGHTS;
    let data = r
        .data()
        .iter()
        .zip(g.data())
        .zip(b.data())
        .map(|((&r, &g), &b)| (wr * r + wg * g + wb * b).clamp(0.0, 1.0))
        .collect();
    GrayImage {
        height: c.height(),
        width: c.width(),
        data,
    }
}

pub fn split_planes(c: &ColorImage) -> (GrayImage, GrayImage, GrayImage) {
    let [r, g, b] = c.planes().clone();
    (r, g, b)
}

pub fn merge_planes(r: GrayImage, g: GrayImage, b: GrayImage) -> Result<ColorImage> {
    ColorImage::new(r, g, b)
}

pub fn clamp01(img: &GrayImage) -> GrayImage {
    img.clamp01()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rejects_bad_dims() {
        assert!(GrayImage::new(0, 3, vec![]).is_err());
        assert!(GrayImage::new(2, 2, vec![0.0; 3]).is_err());
        assert!(BitImage::new(1, 2, vec![0, 2]).is_err());
    }

    #[test]
    fn grayscale_readoffs() {
        let px = |r, g, b| {
            ColorImage::new(
                GrayImage::filled(1, 1, r),
                GrayImage::filled(1, 1, g),
                GrayImage::filled(1, 1, b),
            )
            .unwrap()
        };
        assert!((to_grayscale(&px(1.0, 1.0, 1.0)).get(0, 0) - 1.0).abs() < 1e-12);
        assert_eq!(to_grayscale(&px(0.0, 0.0, 0.0)).get(0, 0), 0.0);
        assert!((to_grayscale(&px(1.0, 0.0, 0.0)).get(0, 0) - 0.299).abs() < 1e-15);
    }

    #[test]
    fn split_merge() {
        let uniform = ColorImage::from_gray(&GrayImage::filled(2, 3, 0.3));
        let (r, g, b) = split_planes(&uniform);
        assert_eq!(r, g);
        assert_eq!(g, b);

        let merged = merge_planes(
            GrayImage::filled(2, 2, 0.1),
            GrayImage::filled(2, 2, 0.2),
            GrayImage::filled(2, 2, 0.3),
        )
        .unwrap();
        assert_eq!(merged.planes()[1].get(1, 1), 0.2);
        let (r, g, b) = split_planes(&merged);
        assert_eq!(merge_planes(r, g, b).unwrap(), merged);

        let err = merge_planes(
            GrayImage::zeros(2, 2),
            GrayImage::zeros(2, 3),
            GrayImage::zeros(2, 2),
        );
        assert!(matches!(err, Err(Error::Dimension(_))));
    }

    #[test]
    fn clamp_cases() {
        let img = GrayImage::new(1, 3, vec![-0.1, 0.5, 1.2]).unwrap();
        assert_eq!(clamp01(&img).data(), &[0.0, 0.5, 1.0]);
        let inside = GrayImage::new(1, 3, vec![0.0, 0.25, 1.0]).unwrap();
        assert_eq!(clamp01(&inside), inside);
        assert!(clamp01(&GrayImage::filled(3, 3, -5.0))
            .data()
            .iter()
            .all(|&v| v == 0.0));
    }

    #[test]
    fn crop_and_bits() {
        let img = GrayImage::from_fn(4, 4, |y, x| (y * 4 + x) as f64);
        let c = img.crop(1, 2, 2, 2).unwrap();
        assert_eq!(c.data(), &[6.0, 7.0, 10.0, 11.0]);
        assert!(img.crop(3, 3, 2, 2).is_err());

        let bits = BitImage::from_gray_exact(&GrayImage::new(1, 2, vec![0.0, 1.0]).unwrap());
        assert_eq!(bits.unwrap().data(), &[0, 1]);
        assert!(BitImage::from_gray_exact(&GrayImage::filled(1, 1, 0.5)).is_err());
    }
}
