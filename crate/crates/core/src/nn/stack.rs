use crate::error::{Error, Result};
use crate::nn::conv::{conv_backward_impl, conv_forward, sgd_step, ConvParams, GradBundle};
use crate::nn::ops::{relu_in_place, relu_mask_in_place};
use crate::nn::{Scalar, Tensor4};

/// A chain of convolution blocks: every convolution except the last is
/// followed by a ReLU, so the final layer can emit signed values.
#[derive(Debug, Clone, PartialEq)]
pub struct ConvStack<T> {
    pub name: String,
    pub layers: Vec<ConvParams<T>>,
}

/// Per-layer inputs recorded by [`ConvStack::forward`].
#[derive(Debug, Clone)]
pub struct StackCache<T> {
    inputs: Vec<Tensor4<T>>,
}

impl<T: Scalar> StackCache<T> {
    pub fn input(&self) -> &Tensor4<T> {
        &self.inputs[0]
    }

    /// Which hidden units were active, flattened across layers.
    pub fn activation_pattern(&self) -> Vec<bool> {
        self.inputs[1..]
            .iter()
            .flat_map(|t| t.data().iter().map(|&v| v > T::ZERO))
            .collect()
    }
}

impl<T: Scalar> ConvStack<T> {
    pub fn new(name: impl Into<String>, layers: Vec<ConvParams<T>>) -> Result<Self> {
        let name = name.into();
        if layers.is_empty() {
            return Err(Error::Spec(format!("{name}: stack needs at least one layer")));
        }
        for (i, pair) in layers.windows(2).enumerate() {
            if pair[0].out_channels != pair[1].in_channels {
                return Err(Error::Spec(format!(
                    "{name}: layer {i} emits {} channels but layer {} expects {}",
                    pair[0].out_channels,
                    i + 1,
                    pair[1].in_channels
                )));
            }
        }
        Ok(Self { name, layers })
    }

    pub fn input_channels(&self) -> usize {
        self.layers[0].in_channels
    }

    pub fn output_channels(&self) -> usize {
        self.layers.last().expect("non-empty").out_channels
    }

    pub fn param_count(&self) -> usize {
        self.layers.iter().map(ConvParams::param_count).sum()
    }

    pub fn all_finite(&self) -> bool {
        self.layers.iter().all(ConvParams::all_finite)
    }

    /// All parameters, layer by layer, weights before bias.
    pub fn flat_params(&self) -> Vec<T> {
        let mut out = Vec::with_capacity(self.param_count());
        for l in &self.layers {
            out.extend_from_slice(&l.weights);
            out.extend_from_slice(&l.bias);
        }
        out
    }

    pub fn param(&self, index: usize) -> T {
        let layer = self.layer_of(index);
        let offset: usize = self.layers[..layer].iter().map(ConvParams::param_count).sum();
        let l = &self.layers[layer];
        let local = index - offset;
        if local < l.weights.len() {
            l.weights[local]
        } else {
            l.bias[local - l.weights.len()]
        }
    }

    pub fn param_mut(&mut self, mut index: usize) -> &mut T {
        for l in &mut self.layers {
            if index < l.weights.len() {
                return &mut l.weights[index];
            }
            index -= l.weights.len();
            if index < l.bias.len() {
                return &mut l.bias[index];
            }
            index -= l.bias.len();
        }
        panic!("parameter index out of range");
    }

    /// Layer index owning flat parameter `index`.
    pub fn layer_of(&self, mut index: usize) -> usize {
        for (i, l) in self.layers.iter().enumerate() {
            let count = l.param_count();
            if index < count {
                return i;
            }
            index -= count;
        }
        panic!("parameter index out of range");
    }

    pub fn cast<U: Scalar>(&self) -> ConvStack<U> {
        ConvStack {
            name: self.name.clone(),
            layers: self.layers.iter().map(ConvParams::cast).collect(),
        }
    }

    /// Sets every weight and bias to zero.
    pub fn zeroed(&self) -> Self {
        Self {
            name: self.name.clone(),
            layers: self
                .layers
                .iter()
                .map(|l| ConvParams::zeros(l.out_channels, l.in_channels))
                .collect(),
        }
    }

    pub fn infer(&self, x: &Tensor4<T>) -> Result<Tensor4<T>> {
        let mut act = conv_forward(x, &self.layers[0])?;
        for layer in &self.layers[1..] {
            relu_in_place(&mut act);
            act = conv_forward(&act, layer)?;
        }
        Ok(act)
    }

    pub fn forward(&self, x: &Tensor4<T>) -> Result<(Tensor4<T>, StackCache<T>)> {
        let mut inputs = Vec::with_capacity(self.layers.len());
        inputs.push(x.clone());
        let mut act = conv_forward(x, &self.layers[0])?;
        for layer in &self.layers[1..] {
            relu_in_place(&mut act);
            let next = conv_forward(&act, layer)?;
            inputs.push(act);
            act = next;
        }
        Ok((act, StackCache { inputs }))
    }

    /// Backpropagates `grad_out` through the stack. Returns the input
    /// gradient when requested and one [`GradBundle`] per layer. Fails with
    /// [`Error::Numeric`] naming the first layer whose gradient is not finite.
    pub fn backward(
        &self,
        cache: &StackCache<T>,
        grad_out: &Tensor4<T>,
        need_input_grad: bool,
    ) -> Result<(Option<Tensor4<T>>, Vec<GradBundle<T>>)> {
        let mut grads: Vec<Option<GradBundle<T>>> = vec![None; self.layers.len()];
        let mut upstream = grad_out.clone();
        for i in (0..self.layers.len()).rev() {
            let want_input = i > 0 || need_input_grad;
            let (gx, g) = conv_backward_impl(&cache.inputs[i], &self.layers[i], &upstream, want_input)?;
            if !g.all_finite() {
                return Err(Error::Numeric(format!(
                    "{}: non-finite gradient in layer {i}",
                    self.name
                )));
            }
            grads[i] = Some(g);
            match gx {
                Some(mut gx) if i > 0 => {
                    relu_mask_in_place(&cache.inputs[i], &mut gx);
                    upstream = gx;
                }
                Some(gx) => return Ok((Some(gx), grads.into_iter().map(Option::unwrap).collect())),
                None => break,
            }
        }
        Ok((None, grads.into_iter().map(Option::unwrap).collect()))
    }

    pub fn sgd_step(&mut self, grads: &[GradBundle<T>], lr: T) {
        for (layer, g) in self.layers.iter_mut().zip(grads) {
            sgd_step(layer, g, lr);
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn stack(seed: u64) -> ConvStack<f64> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        ConvStack::new(
            "t",
            vec![
                ConvParams::glorot_uniform(3, 2, &mut rng),
                ConvParams::glorot_uniform(3, 3, &mut rng),
                ConvParams::glorot_uniform(1, 3, &mut rng),
            ],
        )
        .unwrap()
    }

    #[test]
    fn rejects_channel_break() {
        let layers = vec![ConvParams::<f32>::zeros(3, 1), ConvParams::zeros(1, 2)];
        assert!(matches!(ConvStack::new("bad", layers), Err(Error::Spec(_))));
    }

    #[test]
    fn infer_matches_forward() {
        let s = stack(5);
        let x = Tensor4::from_vec(2, 2, 4, 4, (0..64).map(|i| (i as f64 * 0.37).sin()).collect()).unwrap();
        let (y, _) = s.forward(&x).unwrap();
        assert_eq!(s.infer(&x).unwrap(), y);
    }

    #[test]
    fn flat_param_indexing() {
        let mut s = stack(1);
        let flat = s.flat_params();
        assert_eq!(flat.len(), s.param_count());
        let idx = s.layers[0].param_count() + 4;
        assert_eq!(*s.param_mut(idx), flat[idx]);
        assert_eq!(s.layer_of(idx), 1);
        assert_eq!(s.layer_of(0), 0);
    }

    #[test]
    fn zeroed_stack_outputs_zero() {
        let s = stack(2).zeroed();
        let x = Tensor4::filled(1, 2, 5, 5, 0.7);
        assert!(s.infer(&x).unwrap().data().iter().all(|&v| v == 0.0));
    }
}
