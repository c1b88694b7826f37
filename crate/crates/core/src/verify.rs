//! The property suite run by `saldl verify`: gradient correctness on random
//! tiny networks, the Gaussian-residual identity, and residual narrowing.

use std::fmt;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::Result;
use crate::filters::{convolve_same, Kernel};
use crate::halftone::floyd_steinberg;
use crate::image::GrayImage;
use crate::metrics::residual_histogram;
use crate::networks::{JointBatch, JointProblem, LossWeights};
use crate::nn::gradcheck::StackProblem;
use crate::nn::{grad_check, ConvParams, ConvStack, Differentiable, GradCheckOptions, GradCheckReport, Tensor4};

/// Relative-error bound for analytic against finite-difference gradients.
pub const GRADCHECK_TOLERANCE: f64 = 1e-4;
/// Sup-norm bound for `(a − b) ⊗ k` against `a ⊗ k − b ⊗ k`.
pub const IDENTITY_TOLERANCE: f64 = 1e-10;

/// Measured value of one property against its threshold.
#[derive(Debug, Clone, PartialEq)]
pub struct PropertyResult {
    pub name: String,
    pub measured: f64,
    pub threshold: f64,
    pub passed: bool,
    /// Per-item lines, e.g. one per image or per network.
    pub details: Vec<String>,
}

impl fmt::Display for PropertyResult {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "{} {}: measured {:.3e}, threshold {:.3e}",
            if self.passed { "PASS" } else { "FAIL" },
            self.name,
            self.measured,
            self.threshold
        )
    }
}

fn random_stack(rng: &mut ChaCha8Rng, name: &str, in_ch: usize, blocks: usize, width: usize) -> Result<ConvStack<f64>> {
    let mut layers = Vec::with_capacity(blocks);
    let mut c = in_ch;
    for b in 0..blocks {
        let m = if b + 1 == blocks { 1 } else { width };
        let mut p = ConvParams::<f64>::glorot_uniform(m, c, rng);
        // nonzero biases move pre-activations off exact zeros
        p.bias.iter_mut().for_each(|v| *v = rng.gen_range(-0.1..0.1));
        layers.push(p);
        c = m;
    }
    ConvStack::new(name, layers)
}

fn random_tensor(rng: &mut ChaCha8Rng, n: usize, c: usize, side: usize) -> Tensor4<f64> {
    let data = (0..n * c * side * side).map(|_| rng.gen::<f64>()).collect();
    Tensor4::from_vec(n, c, side, side, data).expect("consistent dims")
}

/// A seeded random tiny problem on 8×8 inputs in 64-bit: a single conv stack
/// (1 to 3 blocks, 1 to 4 channels) or, for every third seed, the joint
/// IRS → head → SARDS wiring.
pub fn random_tiny_problem(seed: u64) -> Result<Box<dyn Differentiable>> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let side = 8;
    let n = rng.gen_range(1..=2);
    if seed % 3 == 2 {
        let width = rng.gen_range(1..=4);
        let depths: [usize; 3] = std::array::from_fn(|_| rng.gen_range(1..=3));
        let irs = random_stack(&mut rng, "irs", 1, depths[0], width)?;
        let head = random_stack(&mut rng, "ismp_head", 1, depths[1], width)?;
        let sards = random_stack(&mut rng, "sards", 3, depths[2], width)?;
        let batch = JointBatch {
            base: random_tensor(&mut rng, n, 1, side),
            halftone: random_tensor(&mut rng, n, 1, side).map(|v| if v < 0.5 { 0.0 } else { 1.0 }),
            detail_target: random_tensor(&mut rng, n, 1, side).map(|v| v - 0.5),
            laplacian_target: random_tensor(&mut rng, n, 1, side).map(|v| v - 0.5),
        };
        let weights = LossWeights {
            detail: rng.gen_range(0.5..1.5),
            laplacian: rng.gen_range(0.5..1.5),
        };
        return Ok(Box::new(JointProblem {
            irs,
            head,
            sards,
            batch,
            weights,
        }));
    }
    let in_ch = rng.gen_range(1..=3);
    let blocks = rng.gen_range(1..=3);
    let width = rng.gen_range(1..=4);
    let stack = random_stack(&mut rng, "tiny", in_ch, blocks, width)?;
    Ok(Box::new(StackProblem {
        input: random_tensor(&mut rng, n, in_ch, side),
        target: random_tensor(&mut rng, n, 1, side),
        stack,
        frozen_layers: Vec::new(),
    }))
}

/// Runs the gradient check on `cases` random tiny problems. `wrap` lets a
/// caller substitute a modified problem, e.g. one with a faulty backward.
pub fn gradcheck_suite(
    cases: usize,
    seed: u64,
    wrap: &dyn Fn(Box<dyn Differentiable>) -> Box<dyn Differentiable>,
) -> Result<PropertyResult> {
    let mut worst: f64 = 0.0;
    let mut details = Vec::with_capacity(cases);
    let mut all_checked = true;
    for i in 0..cases {
        let case_seed = seed.wrapping_add(i as u64);
        let mut problem = wrap(random_tiny_problem(case_seed)?);
        let report: GradCheckReport = grad_check(problem.as_mut(), &GradCheckOptions::default())?;
        all_checked &= report.checked > 0;
        worst = worst.max(report.max_rel_error);
        details.push(format!(
            "net {i} (seed {case_seed}): {} params checked, {} kink-skipped, max rel error {:.3e}",
            report.checked, report.kink_skipped, report.max_rel_error
        ));
    }
    Ok(PropertyResult {
        name: format!("gradcheck ({cases} random tiny networks)"),
        measured: worst,
        threshold: GRADCHECK_TOLERANCE,
        passed: all_checked && worst < GRADCHECK_TOLERANCE,
        details,
    })
}

/// A gradient fault for exercising the suite: scales every analytic
/// gradient entry while leaving the loss untouched.
pub struct ScaledGradient {
    pub inner: Box<dyn Differentiable>,
    pub factor: f64,
}

impl Differentiable for ScaledGradient {
    fn param_count(&self) -> usize {
        self.inner.param_count()
    }

    fn param(&self, index: usize) -> f64 {
        self.inner.param(index)
    }

    fn set_param(&mut self, index: usize, value: f64) {
        self.inner.set_param(index, value)
    }

    fn loss(&self) -> Result<f64> {
        self.inner.loss()
    }

    fn loss_and_grad(&self) -> Result<(f64, Vec<f64>)> {
        let (l, g) = self.inner.loss_and_grad()?;
        Ok((l, g.into_iter().map(|v| v * self.factor).collect()))
    }

    fn is_frozen(&self, index: usize) -> bool {
        self.inner.is_frozen(index)
    }

    fn activation_pattern(&self) -> Result<Vec<bool>> {
        self.inner.activation_pattern()
    }
}

/// `‖(a − b) ⊗ k − (a ⊗ k − b ⊗ k)‖∞` over `pairs` random image pairs.
pub fn gcm_identity(pairs: usize, seed: u64, kernel: &Kernel) -> Result<PropertyResult> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut worst: f64 = 0.0;
    let mut details = Vec::with_capacity(pairs);
    for i in 0..pairs {
        let h = rng.gen_range(kernel.side()..=40);
        let w = rng.gen_range(kernel.side()..=40);
        let a = GrayImage::from_fn(h, w, |_, _| rng.gen());
        let b = GrayImage::from_fn(h, w, |_, _| rng.gen());
        let lhs = convolve_same(&a.sub(&b)?, kernel)?;
        let rhs = convolve_same(&a, kernel)?.sub(&convolve_same(&b, kernel)?)?;
        let d = lhs.max_abs_diff(&rhs)?;
        worst = worst.max(d);
        details.push(format!("pair {i} ({h}x{w}): sup difference {d:.3e}"));
    }
    Ok(PropertyResult {
        name: format!("gcm identity ({pairs} random pairs)"),
        measured: worst,
        threshold: IDENTITY_TOLERANCE,
        passed: worst <= IDENTITY_TOLERANCE,
        details,
    })
}

/// For each image, the Gaussian residual must have a smaller standard
/// deviation and a strictly smaller central 99% width than the additive one.
/// `measured` is the largest ratio seen, std or width; it must be below 1.
pub fn narrowing(images: &[(String, GrayImage)], kernel: &Kernel) -> Result<PropertyResult> {
    let mut worst: f64 = 0.0;
    let mut passed = !images.is_empty();
    let mut details = Vec::with_capacity(images.len());
    for (name, img) in images {
        let half = floyd_steinberg(img)?;
        let report = residual_histogram(img, &half, kernel, crate::metrics::DEFAULT_BINS)?;
        let (sr, wr) = (report.std_ratio(), report.width_ratio());
        worst = worst.max(sr).max(wr);
        passed &= report.narrows();
        details.push(format!(
            "{name}: std ratio {sr:.4} ({:.4} / {:.4}), width99 ratio {wr:.4} ({:.4} / {:.4})",
            report.gcm_stats.std, report.additive_stats.std, report.gcm_stats.width99, report.additive_stats.width99
        ));
    }
    Ok(PropertyResult {
        name: format!("residual narrowing ({} images)", images.len()),
        measured: worst,
        threshold: 1.0,
        passed,
        details,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::networks::base_kernel;
    use crate::synth;

    #[test]
    fn small_suite_passes() {
        let r = gradcheck_suite(4, 100, &|p| p).unwrap();
        assert!(r.passed, "{r}\n{}", r.details.join("\n"));
        assert_eq!(r.details.len(), 4);
    }

    #[test]
    fn scaled_gradient_is_caught() {
        let r = gradcheck_suite(2, 100, &|p| Box::new(ScaledGradient { inner: p, factor: 1.01 })).unwrap();
        assert!(!r.passed);
        assert!(r.measured > 5e-3);
    }

    #[test]
    fn identity_and_narrowing() {
        assert!(gcm_identity(3, 1, &base_kernel()).unwrap().passed);
        let imgs: Vec<(String, GrayImage)> = synth::natural_test_set(48)
            .into_iter()
            .map(|(n, i)| (n.to_string(), i))
            .collect();
        let r = narrowing(&imgs, &base_kernel()).unwrap();
        assert!(r.passed, "{}", r.details.join("\n"));
        assert!(narrowing(&[], &base_kernel()).map(|r| !r.passed).unwrap());
    }
}
