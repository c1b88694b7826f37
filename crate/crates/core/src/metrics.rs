//! Image quality metrics and the residual-spread analysis.

use std::fmt::Write as _;

use crate::error::{Error, Result};
use crate::filters::{convolve_same, gaussian_kernel, Kernel};
use crate::image::{to_grayscale, BitImage, ColorImage, GrayImage};

pub fn mse(a: &GrayImage, b: &GrayImage) -> Result<f64> {
    a.check_same_dims(b)?;
    Ok(a.data()
        .iter()
        .zip(b.data())
        .map(|(x, y)| (x - y) * (x - y))
        .sum::<f64>()
        / a.len() as f64)
}

fn psnr_from_mse(mse: f64, peak: f64) -> f64 {
    if mse == 0.0 {
        f64::INFINITY
    } else {
        10.0 * (peak * peak / mse).log10()
    }
}

/// `10·log10(peak² / MSE)` in dB; identical images give `f64::INFINITY`.
pub fn psnr(a: &GrayImage, b: &GrayImage, peak: f64) -> Result<f64> {
    Ok(psnr_from_mse(mse(a, b)?, peak))
}

/// PSNR over the merged RGB samples (one MSE across all three planes).
pub fn psnr_color(a: &ColorImage, b: &ColorImage, peak: f64) -> Result<f64> {
    let mut total = 0.0;
    for (pa, pb) in a.planes().iter().zip(b.planes()) {
        total += mse(pa, pb)?;
    }
    Ok(psnr_from_mse(total / 3.0, peak))
}

/// PSNR per plane, then averaged.
pub fn psnr_color_per_plane(a: &ColorImage, b: &ColorImage, peak: f64) -> Result<f64> {
    let mut total = 0.0;
    for (pa, pb) in a.planes().iter().zip(b.planes()) {
        total += psnr(pa, pb, peak)?;
    }
    Ok(total / 3.0)
}

pub const SSIM_WINDOW: usize = 11;
pub const SSIM_SIGMA: f64 = 1.5;
pub const SSIM_K1: f64 = 0.01;
pub const SSIM_K2: f64 = 0.03;

/// Mean SSIM over every window position fully inside the image, with an
/// 11×11 Gaussian window (σ = 1.5), K1 = 0.01, K2 = 0.03 and L = 1.
pub fn ssim(a: &GrayImage, b: &GrayImage) -> Result<f64> {
    a.check_same_dims(b)?;
    let (h, w) = a.dims();
    if h < SSIM_WINDOW || w < SSIM_WINDOW {
        return Err(Error::Dimension(format!(
            "SSIM needs at least {SSIM_WINDOW}x{SSIM_WINDOW}, got {h}x{w}"
        )));
    }
    let win = gaussian_kernel(SSIM_SIGMA, SSIM_WINDOW)?;
    let c1 = (SSIM_K1 * 1.0).powi(2);
    let c2 = (SSIM_K2 * 1.0).powi(2);
    let (ad, bd) = (a.data(), b.data());
    let mut total = 0.0;
    let mut count = 0usize;
    for y in 0..=h - SSIM_WINDOW {
        for x in 0..=w - SSIM_WINDOW {
            let (mut mx, mut my, mut sxx, mut syy, mut sxy) = (0.0, 0.0, 0.0, 0.0, 0.0);
            for i in 0..SSIM_WINDOW {
                let row = (y + i) * w + x;
                for j in 0..SSIM_WINDOW {
                    let k = win.tap(i, j);
                    let (p, q) = (ad[row + j], bd[row + j]);
                    mx += k * p;
                    my += k * q;
                    sxx += k * p * p;
                    syy += k * q * q;
                    sxy += k * p * q;
                }
            }
            let vx = sxx - mx * mx;
            let vy = syy - my * my;
            let cov = sxy - mx * my;
            total += ((2.0 * mx * my + c1) * (2.0 * cov + c2))
                / ((mx * mx + my * my + c1) * (vx + vy + c2));
            count += 1;
        }
    }
    Ok(total / count as f64)
}

/// How SSIM is taken on color images.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum ColorSsim {
    /// On the BT.601 luma plane.
    #[default]
    Luma,
    /// Mean of the three per-plane scores.
    PerPlane,
}

pub fn ssim_color(a: &ColorImage, b: &ColorImage, mode: ColorSsim) -> Result<f64> {
    match mode {
        ColorSsim::Luma => ssim(&to_grayscale(a), &to_grayscale(b)),
        ColorSsim::PerPlane => {
            let mut total = 0.0;
            for (pa, pb) in a.planes().iter().zip(b.planes()) {
                total += ssim(pa, pb)?;
            }
            Ok(total / 3.0)
        }
    }
}

/// Spread statistics of a residual layer.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ResidualStats {
    pub std: f64,
    pub min: f64,
    pub max: f64,
    /// Width of the interval holding the central 99% of samples.
    pub width99: f64,
}

impl ResidualStats {
    pub fn of(img: &GrayImage) -> Self {
        let mut sorted = img.data().to_vec();
        sorted.sort_by(f64::total_cmp);
        Self {
            std: img.std(),
            min: img.min(),
            max: img.max(),
            width99: quantile(&sorted, 0.995) - quantile(&sorted, 0.005),
        }
    }
}

/// Linearly interpolated quantile of sorted samples.
fn quantile(sorted: &[f64], q: f64) -> f64 {
    let pos = q * (sorted.len() - 1) as f64;
    let lo = pos.floor() as usize;
    let hi = pos.ceil() as usize;
    let t = pos - lo as f64;
    sorted[lo] * (1.0 - t) + sorted[hi] * t
}

pub const DEFAULT_BINS: usize = 201;

/// Histograms of the additive residual `x^o − x^i` and the Gaussian
/// convolution residual `(x^o − x^i) ⊗ k^g`, binned over `[−1, 1]`.
#[derive(Debug, Clone, PartialEq)]
pub struct HistogramReport {
    pub centers: Vec<f64>,
    pub additive: Vec<u64>,
    pub gcm: Vec<u64>,
    pub additive_stats: ResidualStats,
    pub gcm_stats: ResidualStats,
}

impl HistogramReport {
    pub fn bin_width(&self) -> f64 {
        2.0 / (self.centers.len() - 1) as f64
    }

    /// `bins + 1` edges; the outermost bins extend half a width past ±1.
    pub fn edges(&self) -> Vec<f64> {
        let half = self.bin_width() / 2.0;
        let mut e: Vec<f64> = self.centers.iter().map(|c| c - half).collect();
        e.push(self.centers.last().expect("non-empty") + half);
        e
    }

    pub fn std_ratio(&self) -> f64 {
        self.gcm_stats.std / self.additive_stats.std
    }

    pub fn width_ratio(&self) -> f64 {
        self.gcm_stats.width99 / self.additive_stats.width99
    }

    /// True when the GCM residual is strictly narrower by both measures.
    pub fn narrows(&self) -> bool {
        self.gcm_stats.std < self.additive_stats.std && self.gcm_stats.width99 < self.additive_stats.width99
    }

    pub fn to_csv(&self) -> String {
        let mut out = String::from("bin_center,additive_count,gcm_count\n");
        for ((c, a), g) in self.centers.iter().zip(&self.additive).zip(&self.gcm) {
            writeln!(out, "{c:.4},{a},{g}").expect("string write");
        }
        let (a, g) = (&self.additive_stats, &self.gcm_stats);
        writeln!(
            out,
            "# stats: additive_std={:.6} additive_min={:.6} additive_max={:.6} additive_width99={:.6} \
             gcm_std={:.6} gcm_min={:.6} gcm_max={:.6} gcm_width99={:.6} std_ratio={:.6} width_ratio={:.6}",
            a.std,
            a.min,
            a.max,
            a.width99,
            g.std,
            g.min,
            g.max,
            g.width99,
            self.std_ratio(),
            self.width_ratio()
        )
        .expect("string write");
        out
    }
}

fn bin_counts(img: &GrayImage, bins: usize) -> Vec<u64> {
    let width = 2.0 / (bins - 1) as f64;
    let mut counts = vec![0u64; bins];
    for &v in img.data() {
        let idx = ((v + 1.0) / width).round().clamp(0.0, (bins - 1) as f64) as usize;
        counts[idx] += 1;
    }
    counts
}

pub fn residual_histogram(
    original: &GrayImage,
    halftone: &BitImage,
    kernel: &Kernel,
    bins: usize,
) -> Result<HistogramReport> {
    if bins < 2 {
        return Err(Error::Range(format!("need at least 2 bins, got {bins}")));
    }
    if original.dims() != halftone.dims() {
        return Err(Error::Dimension(format!(
            "original {:?} vs halftone {:?}",
            original.dims(),
            halftone.dims()
        )));
    }
    let additive = original.sub(&halftone.to_gray())?;
    let gcm = convolve_same(&additive, kernel)?;
    let width = 2.0 / (bins - 1) as f64;
    Ok(HistogramReport {
        centers: (0..bins).map(|i| -1.0 + i as f64 * width).collect(),
        additive: bin_counts(&additive, bins),
        gcm: bin_counts(&gcm, bins),
        additive_stats: ResidualStats::of(&additive),
        gcm_stats: ResidualStats::of(&gcm),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::halftone::floyd_steinberg;
    use crate::networks::base_kernel;

    fn ramp(h: usize, w: usize) -> GrayImage {
        GrayImage::from_fn(h, w, |y, x| ((y * 13 + x * 7) % 31) as f64 / 30.0)
    }

    #[test]
    fn psnr_closed_forms() {
        let a = GrayImage::filled(4, 4, 0.3);
        assert_eq!(psnr(&a, &a, 1.0).unwrap(), f64::INFINITY);
        let b = a.map(|v| v + 0.1);
        assert!((psnr(&a, &b, 1.0).unwrap() - 20.0).abs() < 1e-9);
        let c = GrayImage::filled(4, 4, 0.8);
        assert!((psnr(&a, &c, 1.0).unwrap() - 6.020_599_913).abs() < 1e-6);
        assert!(psnr(&a, &GrayImage::zeros(4, 5), 1.0).is_err());
    }

    #[test]
    fn psnr_scale_consistent() {
        let a = ramp(16, 16);
        let b = a.map(|v| (v * 0.9 + 0.03).min(1.0));
        let unit = psnr(&a, &b, 1.0).unwrap();
        let scaled = psnr(&a.map(|v| v * 255.0), &b.map(|v| v * 255.0), 255.0).unwrap();
        assert!((unit - scaled).abs() < 1e-9);
    }

    #[test]
    fn ssim_cases() {
        let x = ramp(20, 24);
        assert!((ssim(&x, &x).unwrap() - 1.0).abs() < 1e-9);
        let flat = GrayImage::filled(12, 12, 0.5);
        assert!((ssim(&flat, &flat.map(|v| 1.0 - v)).unwrap() - 1.0).abs() < 1e-12);
        let y = x.map(|v| (1.0 - v) * 0.7);
        let (s1, s2) = (ssim(&x, &y).unwrap(), ssim(&y, &x).unwrap());
        assert!((s1 - s2).abs() < 1e-12);
        assert!((-1.0..=1.0).contains(&s1));
        assert!(s1 < 1.0);
        assert!(matches!(ssim(&GrayImage::zeros(10, 30), &GrayImage::zeros(10, 30)), Err(Error::Dimension(_))));
    }

    #[test]
    fn color_variants() {
        let a = ColorImage::new(ramp(12, 12), ramp(12, 12).map(|v| v * 0.5), ramp(12, 12).map(|v| 1.0 - v)).unwrap();
        let b = a.map_planes(|p| Ok(p.map(|v| (v + 0.1).min(1.0)))).unwrap();
        let merged = psnr_color(&a, &b, 1.0).unwrap();
        assert!(merged.is_finite());
        assert!(psnr_color_per_plane(&a, &b, 1.0).unwrap().is_finite());
        assert!((ssim_color(&a, &a, ColorSsim::Luma).unwrap() - 1.0).abs() < 1e-9);
        assert!((ssim_color(&a, &a, ColorSsim::PerPlane).unwrap() - 1.0).abs() < 1e-9);
    }

    #[test]
    fn histogram_bilevel_spike() {
        let bits = BitImage::new(6, 6, (0..36).map(|i| (i % 3 == 0) as u8).collect()).unwrap();
        let report = residual_histogram(&bits.to_gray(), &bits, &base_kernel(), DEFAULT_BINS).unwrap();
        assert_eq!(report.additive[100], 36);
        assert_eq!(report.gcm[100], 36);
        assert_eq!(report.centers[100], 0.0);
        assert!((report.bin_width() - 0.01).abs() < 1e-15);
        assert_eq!(report.edges().len(), DEFAULT_BINS + 1);
    }

    #[test]
    fn histogram_counts_and_narrowing() {
        let original = GrayImage::from_fn(32, 32, |y, x| 0.2 + 0.6 * ((x + y) as f64 / 62.0));
        let half = floyd_steinberg(&original).unwrap();
        let report = residual_histogram(&original, &half, &base_kernel(), DEFAULT_BINS).unwrap();
        assert_eq!(report.additive.iter().sum::<u64>(), 1024);
        assert_eq!(report.gcm.iter().sum::<u64>(), 1024);
        assert!(report.narrows());
        let csv = report.to_csv();
        assert!(csv.starts_with("bin_center,additive_count,gcm_count\n"));
        assert_eq!(csv.lines().count(), 1 + DEFAULT_BINS + 1);
        assert!(csv.lines().last().unwrap().starts_with("# stats:"));
    }
}
