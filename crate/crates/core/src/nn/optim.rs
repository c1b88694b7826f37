use crate::nn::conv::GradBundle;
use crate::nn::{ConvStack, Scalar};

/// Mini-batch gradient descent with optional heavy-ball momentum.
///
/// With `momentum == 0` every step is exactly `p ← p − lr·g`.
#[derive(Debug, Clone)]
pub struct Sgd<T> {
    momentum: f64,
    velocity: Vec<GradBundle<T>>,
}

impl<T: Scalar> Sgd<T> {
    pub fn new(momentum: f64) -> Self {
        Self {
            momentum,
            velocity: Vec::new(),
        }
    }

    pub fn step(&mut self, stack: &mut ConvStack<T>, grads: &[GradBundle<T>], lr: f64) {
        let lr_t = T::from_f64(lr);
        if self.momentum == 0.0 {
            stack.sgd_step(grads, lr_t);
            return;
        }
        if self.velocity.is_empty() {
            self.velocity = stack.layers.iter().map(GradBundle::zeros_like).collect();
        }
        let mu = T::from_f64(self.momentum);
        for (v, g) in self.velocity.iter_mut().zip(grads) {
            for (vi, &gi) in v.weights.iter_mut().zip(&g.weights) {
                *vi = mu * *vi + gi;
            }
            for (vi, &gi) in v.bias.iter_mut().zip(&g.bias) {
                *vi = mu * *vi + gi;
            }
        }
        stack.sgd_step(&self.velocity, lr_t);
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::nn::ConvParams;

    #[test]
    fn plain_and_momentum() {
        let mut s = ConvStack::new("s", vec![ConvParams::<f64>::zeros(1, 1)]).unwrap();
        let mut g = GradBundle::zeros_like(&s.layers[0]);
        g.bias[0] = 1.0;

        let mut plain = Sgd::new(0.0);
        plain.step(&mut s, std::slice::from_ref(&g), 0.5);
        plain.step(&mut s, std::slice::from_ref(&g), 0.5);
        assert_eq!(s.layers[0].bias[0], -1.0);

        let mut s2 = s.zeroed();
        let mut heavy = Sgd::new(0.5);
        heavy.step(&mut s2, std::slice::from_ref(&g), 1.0);
        heavy.step(&mut s2, std::slice::from_ref(&g), 1.0);
        // v1 = 1, v2 = 1.5
        assert_eq!(s2.layers[0].bias[0], -2.5);
    }
}
