//! Central finite-difference verification of analytic gradients (64-bit).

use rand::seq::index::sample;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::error::Result;
use crate::nn::ops::mse_loss;
use crate::nn::{ConvStack, Tensor4};

/// A scalar objective over a flat parameter vector with an analytic gradient.
pub trait Differentiable {
    fn param_count(&self) -> usize;
    fn param(&self, index: usize) -> f64;
    fn set_param(&mut self, index: usize, value: f64);
    fn loss(&self) -> Result<f64>;
    fn loss_and_grad(&self) -> Result<(f64, Vec<f64>)>;

    /// Frozen parameters are skipped and counted separately in the report.
    fn is_frozen(&self, _index: usize) -> bool {
        false
    }

    /// Sign pattern of every ReLU input. When a perturbation changes it the
    /// difference quotient straddles a kink and the sample is skipped.
    fn activation_pattern(&self) -> Result<Vec<bool>> {
        Ok(Vec::new())
    }
}

#[derive(Debug, Clone)]
pub struct GradCheckOptions {
    pub epsilon: f64,
    /// Check at most this many parameters, drawn without replacement.
    pub max_samples: Option<usize>,
    pub seed: u64,
}

impl Default for GradCheckOptions {
    fn default() -> Self {
        Self {
            epsilon: 1e-5,
            max_samples: None,
            seed: 0,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct GradCheckReport {
    pub max_rel_error: f64,
    /// Flat index of the worst parameter, if any was checked.
    pub worst_index: Option<usize>,
    pub checked: usize,
    pub frozen_skipped: usize,
    pub kink_skipped: usize,
}

/// `|a − b| / max(|a|, |b|, 1e-8)`
pub fn relative_error(analytic: f64, numeric: f64) -> f64 {
    (analytic - numeric).abs() / analytic.abs().max(numeric.abs()).max(1e-8)
}

pub fn grad_check<M: Differentiable + ?Sized>(model: &mut M, opts: &GradCheckOptions) -> Result<GradCheckReport> {
    let (_, analytic) = model.loss_and_grad()?;
    let base_pattern = model.activation_pattern()?;
    let total = model.param_count();
    let indices: Vec<usize> = match opts.max_samples {
        Some(k) if k < total => {
            let mut rng = ChaCha8Rng::seed_from_u64(opts.seed);
            let mut idx = sample(&mut rng, total, k).into_vec();
            idx.sort_unstable();
            idx
        }
        _ => (0..total).collect(),
    };
    let mut report = GradCheckReport {
        max_rel_error: 0.0,
        worst_index: None,
        checked: 0,
        frozen_skipped: 0,
        kink_skipped: 0,
    };
    for i in indices {
        if model.is_frozen(i) {
            report.frozen_skipped += 1;
            continue;
        }
        let original = model.param(i);
        model.set_param(i, original + opts.epsilon);
        let plus = model.loss()?;
        let plus_kink = model.activation_pattern()? != base_pattern;
        model.set_param(i, original - opts.epsilon);
        let minus = model.loss()?;
        let minus_kink = model.activation_pattern()? != base_pattern;
        model.set_param(i, original);
        if plus_kink || minus_kink {
            report.kink_skipped += 1;
            continue;
        }
        let numeric = (plus - minus) / (2.0 * opts.epsilon);
        let err = relative_error(analytic[i], numeric);
        report.checked += 1;
        if report.worst_index.is_none() || err > report.max_rel_error {
            report.max_rel_error = err;
            report.worst_index = Some(i);
        }
    }
    Ok(report)
}

/// A conv stack regressed onto a fixed target with the batch l2 loss.
#[derive(Debug, Clone)]
pub struct StackProblem {
    pub stack: ConvStack<f64>,
    pub input: Tensor4<f64>,
    pub target: Tensor4<f64>,
    pub frozen_layers: Vec<usize>,
}

impl Differentiable for StackProblem {
    fn param_count(&self) -> usize {
        self.stack.param_count()
    }

    fn param(&self, index: usize) -> f64 {
        self.stack.param(index)
    }

    fn set_param(&mut self, index: usize, value: f64) {
        *self.stack.param_mut(index) = value;
    }

    fn loss(&self) -> Result<f64> {
        let pred = self.stack.infer(&self.input)?;
        Ok(mse_loss(&pred, &self.target)?.0)
    }

    fn loss_and_grad(&self) -> Result<(f64, Vec<f64>)> {
        let (pred, cache) = self.stack.forward(&self.input)?;
        let (loss, grad) = mse_loss(&pred, &self.target)?;
        let (_, grads) = self.stack.backward(&cache, &grad, false)?;
        let flat = grads
            .iter()
            .flat_map(|g| g.weights.iter().chain(&g.bias).copied())
            .collect();
        Ok((loss, flat))
    }

    fn is_frozen(&self, index: usize) -> bool {
        self.frozen_layers.contains(&self.stack.layer_of(index))
    }

    fn activation_pattern(&self) -> Result<Vec<bool>> {
        Ok(self.stack.forward(&self.input)?.1.activation_pattern())
    }
}

/// Maximum relative gradient error of `stack` on `(input, target)`.
pub fn grad_check_stack(stack: &ConvStack<f64>, input: &Tensor4<f64>, target: &Tensor4<f64>) -> Result<f64> {
    let mut problem = StackProblem {
        stack: stack.clone(),
        input: input.clone(),
        target: target.clone(),
        frozen_layers: Vec::new(),
    };
    Ok(grad_check(&mut problem, &GradCheckOptions::default())?.max_rel_error)
}
