//! 5×5 convolution layer with bias, stride 1, zero padding 2.
//!
//! Both passes lower each sample to an im2col matrix of shape
//! `(C·25) × (H·W)` and hand the products to a GEMM kernel.

use rand::Rng;

use crate::error::{Error, Result};
use crate::nn::{Scalar, Tensor4};

/// Spatial side of every network filter.
pub const KERNEL_SIDE: usize = 5;
pub const PADDING: usize = KERNEL_SIDE / 2;
const TAPS: usize = KERNEL_SIDE * KERNEL_SIDE;

/// Weights `m×c×5×5` and one bias per output channel.
#[derive(Debug, Clone, PartialEq)]
pub struct ConvParams<T> {
    pub out_channels: usize,
    pub in_channels: usize,
    pub weights: Vec<T>,
    pub bias: Vec<T>,
}

/// Gradients congruent with a [`ConvParams`].
#[derive(Debug, Clone, PartialEq)]
pub struct GradBundle<T> {
    pub weights: Vec<T>,
    pub bias: Vec<T>,
}

impl<T: Scalar> ConvParams<T> {
    pub fn zeros(out_channels: usize, in_channels: usize) -> Self {
        Self {
            out_channels,
            in_channels,
            weights: vec![T::ZERO; out_channels * in_channels * TAPS],
            bias: vec![T::ZERO; out_channels],
        }
    }

    pub fn from_parts(
        out_channels: usize,
        in_channels: usize,
        weights: Vec<T>,
        bias: Vec<T>,
    ) -> Result<Self> {
        if weights.len() != out_channels * in_channels * TAPS || bias.len() != out_channels {
            return Err(Error::Shape(format!(
                "conv ({out_channels},{in_channels},5,5) got {} weights and {} biases",
                weights.len(),
                bias.len()
            )));
        }
        Ok(Self {
            out_channels,
            in_channels,
            weights,
            bias,
        })
    }

    /// Glorot-uniform weights on `±sqrt(6 / (fan_in + fan_out))`, zero bias.
    pub fn glorot_uniform(out_channels: usize, in_channels: usize, rng: &mut impl Rng) -> Self {
        let fan_in = (in_channels * TAPS) as f64;
        let fan_out = (out_channels * TAPS) as f64;
        let bound = (6.0 / (fan_in + fan_out)).sqrt();
        let weights = (0..out_channels * in_channels * TAPS)
            .map(|_| T::from_f64(rng.gen_range(-bound..bound)))
            .collect();
        Self {
            out_channels,
            in_channels,
            weights,
            bias: vec![T::ZERO; out_channels],
        }
    }

    /// `(m, c, 5, 5)`
    pub fn shape(&self) -> (usize, usize, usize, usize) {
        (self.out_channels, self.in_channels, KERNEL_SIDE, KERNEL_SIDE)
    }

    pub fn param_count(&self) -> usize {
        self.weights.len() + self.bias.len()
    }

    #[inline]
    pub fn weight(&self, m: usize, c: usize, u: usize, v: usize) -> T {
        self.weights[((m * self.in_channels + c) * KERNEL_SIDE + u) * KERNEL_SIDE + v]
    }

    pub fn cast<U: Scalar>(&self) -> ConvParams<U> {
        ConvParams {
            out_channels: self.out_channels,
            in_channels: self.in_channels,
            weights: self.weights.iter().map(|w| U::from_f64(w.to_f64())).collect(),
            bias: self.bias.iter().map(|b| U::from_f64(b.to_f64())).collect(),
        }
    }

    pub fn all_finite(&self) -> bool {
        self.weights.iter().chain(&self.bias).all(|v| v.is_finite())
    }
}

impl<T: Scalar> GradBundle<T> {
    pub fn zeros_like(p: &ConvParams<T>) -> Self {
        Self {
            weights: vec![T::ZERO; p.weights.len()],
            bias: vec![T::ZERO; p.bias.len()],
        }
    }

    pub fn all_finite(&self) -> bool {
        self.weights.iter().chain(&self.bias).all(|v| v.is_finite())
    }

    pub fn accumulate(&mut self, other: &GradBundle<T>) {
        self.weights
            .iter_mut()
            .zip(&other.weights)
            .for_each(|(a, &b)| *a += b);
        self.bias
            .iter_mut()
            .zip(&other.bias)
            .for_each(|(a, &b)| *a += b);
    }
}

/// Lowers one `C×H×W` sample into `cols`, row `(c·25 + u·5 + v)` holding the
/// input shifted by `(u - 2, v - 2)` with zeros outside the image.
fn im2col<T: Scalar>(x: &[T], c: usize, h: usize, w: usize, cols: &mut [T]) {
    let hw = h * w;
    debug_assert_eq!(cols.len(), c * TAPS * hw);
    for ch in 0..c {
        let plane = &x[ch * hw..(ch + 1) * hw];
        for u in 0..KERNEL_SIDE {
            for v in 0..KERNEL_SIDE {
                let row = &mut cols[((ch * KERNEL_SIDE + u) * KERNEL_SIDE + v) * hw..][..hw];
                let dy = u as isize - PADDING as isize;
                let dx = v as isize - PADDING as isize;
                let x_lo = (-dx).max(0) as usize;
                let x_hi = (w as isize - dx).min(w as isize).max(0) as usize;
                for i in 0..h {
                    let out = &mut row[i * w..(i + 1) * w];
                    let sy = i as isize + dy;
                    if sy < 0 || sy >= h as isize || x_lo >= x_hi {
                        out.fill(T::ZERO);
                        continue;
                    }
                    let src = &plane[sy as usize * w..(sy as usize + 1) * w];
                    out[..x_lo].fill(T::ZERO);
                    out[x_hi..].fill(T::ZERO);
                    let s0 = (x_lo as isize + dx) as usize;
                    out[x_lo..x_hi].copy_from_slice(&src[s0..s0 + (x_hi - x_lo)]);
                }
            }
        }
    }
}

/// Adjoint of [`im2col`]: scatters `cols` back onto a `C×H×W` gradient.
fn col2im<T: Scalar>(cols: &[T], c: usize, h: usize, w: usize, x: &mut [T]) {
    let hw = h * w;
    for ch in 0..c {
        let plane = &mut x[ch * hw..(ch + 1) * hw];
        for u in 0..KERNEL_SIDE {
            for v in 0..KERNEL_SIDE {
                let row = &cols[((ch * KERNEL_SIDE + u) * KERNEL_SIDE + v) * hw..][..hw];
                let dy = u as isize - PADDING as isize;
                let dx = v as isize - PADDING as isize;
                let x_lo = (-dx).max(0) as usize;
                let x_hi = (w as isize - dx).min(w as isize).max(0) as usize;
                if x_lo >= x_hi {
                    continue;
                }
                for i in 0..h {
                    let sy = i as isize + dy;
                    if sy < 0 || sy >= h as isize {
                        continue;
                    }
                    let dst = &mut plane[sy as usize * w..(sy as usize + 1) * w];
                    let s0 = (x_lo as isize + dx) as usize;
                    for (d, &g) in dst[s0..s0 + (x_hi - x_lo)]
                        .iter_mut()
                        .zip(&row[i * w + x_lo..i * w + x_hi])
                    {
                        *d += g;
                    }
                }
            }
        }
    }
}

fn check_input<T: Scalar>(x: &Tensor4<T>, p: &ConvParams<T>) -> Result<()> {
    if x.c() != p.in_channels {
        return Err(Error::Shape(format!(
            "conv expects {} input channels, got {}",
            p.in_channels,
            x.c()
        )));
    }
    Ok(())
}

/// `out[n,m,i,j] = bias[m] + Σ w[m,c,u,v] · x_pad[n,c,i+u,j+v]`.
pub fn conv_forward<T: Scalar>(x: &Tensor4<T>, p: &ConvParams<T>) -> Result<Tensor4<T>> {
    check_input(x, p)?;
    let (n, c, h, w) = x.dims();
    let m = p.out_channels;
    let hw = h * w;
    let k = c * TAPS;
    let mut out = Tensor4::zeros(n, m, h, w);
    let mut cols = vec![T::ZERO; k * hw];
    for s in 0..n {
        im2col(x.sample(s), c, h, w, &mut cols);
        let dst = out.sample_mut(s);
        for (mi, row) in dst.chunks_exact_mut(hw).enumerate() {
            row.fill(p.bias[mi]);
        }
        T::gemm(m, k, hw, &p.weights, (k as isize, 1), &cols, (hw as isize, 1), T::ONE, dst);
    }
    Ok(out)
}

/// Gradients of [`conv_forward`] with respect to its input and parameters.
pub fn conv_backward<T: Scalar>(
    x: &Tensor4<T>,
    p: &ConvParams<T>,
    grad_out: &Tensor4<T>,
) -> Result<(Tensor4<T>, GradBundle<T>)> {
    let (gx, grads) = conv_backward_impl(x, p, grad_out, true)?;
    Ok((gx.expect("input gradient requested"), grads))
}

/// As [`conv_backward`], optionally skipping the input gradient (first layer).
pub(crate) fn conv_backward_impl<T: Scalar>(
    x: &Tensor4<T>,
    p: &ConvParams<T>,
    grad_out: &Tensor4<T>,
    need_input_grad: bool,
) -> Result<(Option<Tensor4<T>>, GradBundle<T>)> {
    check_input(x, p)?;
    let (n, c, h, w) = x.dims();
    let m = p.out_channels;
    if grad_out.dims() != (n, m, h, w) {
        return Err(Error::Shape(format!(
            "conv grad_out {:?} does not match forward output {:?}",
            grad_out.dims(),
            (n, m, h, w)
        )));
    }
    let hw = h * w;
    let k = c * TAPS;
    let mut grads = GradBundle::zeros_like(p);
    let mut grad_x = need_input_grad.then(|| Tensor4::zeros(n, c, h, w));
    let mut cols = vec![T::ZERO; k * hw];
    let mut grad_cols = vec![T::ZERO; k * hw];
    for s in 0..n {
        let go = grad_out.sample(s);
        for (mi, row) in go.chunks_exact(hw).enumerate() {
            let mut acc = T::ZERO;
            for &g in row {
                acc += g;
            }
            grads.bias[mi] += acc;
        }
        im2col(x.sample(s), c, h, w, &mut cols);
        // dW (m×k) += dOut (m×hw) · colsᵀ (hw×k)
        T::gemm(m, hw, k, go, (hw as isize, 1), &cols, (1, hw as isize), T::ONE, &mut grads.weights);
        if let Some(gx) = grad_x.as_mut() {
            // dCols (k×hw) = Wᵀ (k×m) · dOut (m×hw)
            T::gemm(k, m, hw, &p.weights, (1, k as isize), go, (hw as isize, 1), T::ZERO, &mut grad_cols);
            col2im(&grad_cols, c, h, w, gx.sample_mut(s));
        }
    }
    Ok((grad_x, grads))
}

/// Plain gradient step `p ← p − lr·g`.
pub fn sgd_step<T: Scalar>(params: &mut ConvParams<T>, grads: &GradBundle<T>, lr: T) {
    params
        .weights
        .iter_mut()
        .zip(&grads.weights)
        .for_each(|(p, &g)| *p -= lr * g);
    params
        .bias
        .iter_mut()
        .zip(&grads.bias)
        .for_each(|(p, &g)| *p -= lr * g);
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    /// Direct seven-loop convolution used as the reference.
    fn naive_forward(x: &Tensor4<f64>, p: &ConvParams<f64>) -> Tensor4<f64> {
        let (n, c, h, w) = x.dims();
        let mut out = Tensor4::zeros(n, p.out_channels, h, w);
        for s in 0..n {
            for m in 0..p.out_channels {
                for i in 0..h {
                    for j in 0..w {
                        let mut acc = p.bias[m];
                        for ch in 0..c {
                            for u in 0..5 {
                                for v in 0..5 {
                                    let (y, xx) = (i as isize + u as isize - 2, j as isize + v as isize - 2);
                                    if y >= 0 && xx >= 0 && (y as usize) < h && (xx as usize) < w {
                                        acc += p.weight(m, ch, u, v) * x.get(s, ch, y as usize, xx as usize);
                                    }
                                }
                            }
                        }
                        out.set(s, m, i, j, acc);
                    }
                }
            }
        }
        out
    }

    fn random_tensor(rng: &mut ChaCha8Rng, n: usize, c: usize, h: usize, w: usize) -> Tensor4<f64> {
        let data = (0..n * c * h * w).map(|_| rng.gen_range(-1.0..1.0)).collect();
        Tensor4::from_vec(n, c, h, w, data).unwrap()
    }

    fn random_params(rng: &mut ChaCha8Rng, m: usize, c: usize) -> ConvParams<f64> {
        let mut p = ConvParams::glorot_uniform(m, c, rng);
        p.bias.iter_mut().for_each(|b| *b = rng.gen_range(-0.5..0.5));
        p
    }

    #[test]
    fn identity_filter() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let x = random_tensor(&mut rng, 2, 1, 6, 7);
        let mut p = ConvParams::<f64>::zeros(1, 1);
        p.weights[2 * 5 + 2] = 1.0;
        assert_eq!(conv_forward(&x, &p).unwrap(), x);
        let (gx, _) = conv_backward(&x, &p, &x).unwrap();
        assert_eq!(gx, x);
    }

    #[test]
    fn bias_only() {
        let mut p = ConvParams::<f64>::zeros(2, 1);
        p.bias = vec![0.25, -3.0];
        let out = conv_forward(&Tensor4::filled(1, 1, 4, 4, 9.0), &p).unwrap();
        assert!(out.plane(0, 0).iter().all(|&v| v == 0.25));
        assert!(out.plane(0, 1).iter().all(|&v| v == -3.0));
    }

    #[test]
    fn zero_padding_counts() {
        let mut p = ConvParams::<f64>::zeros(1, 1);
        p.weights.fill(1.0);
        let out = conv_forward(&Tensor4::filled(1, 1, 5, 5, 1.0), &p).unwrap();
        assert_eq!(out.get(0, 0, 2, 2), 25.0);
        assert_eq!(out.get(0, 0, 0, 0), 9.0);
        assert_eq!(out.get(0, 0, 0, 2), 15.0);
    }

    #[test]
    fn matches_naive_reference() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        for &(n, c, m, h, w) in &[(1, 1, 1, 1, 1), (2, 3, 4, 6, 5), (1, 2, 3, 3, 9), (3, 4, 2, 8, 8)] {
            let x = random_tensor(&mut rng, n, c, h, w);
            let p = random_params(&mut rng, m, c);
            let fast = conv_forward(&x, &p).unwrap();
            let slow = naive_forward(&x, &p);
            for (a, b) in fast.data().iter().zip(slow.data()) {
                assert!((a - b).abs() < 1e-12, "{a} vs {b}");
            }
        }
    }

    #[test]
    fn zero_upstream_gradient() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let x = random_tensor(&mut rng, 2, 2, 5, 5);
        let p = random_params(&mut rng, 3, 2);
        let (gx, g) = conv_backward(&x, &p, &Tensor4::zeros(2, 3, 5, 5)).unwrap();
        assert!(gx.data().iter().all(|&v| v == 0.0));
        assert!(g.weights.iter().chain(&g.bias).all(|&v| v == 0.0));
    }

    #[test]
    fn backward_is_adjoint() {
        // <conv(x) - b, g> = <x, dx> and = <W, dW>, both by linearity
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let x = random_tensor(&mut rng, 2, 3, 7, 6);
        let p = random_params(&mut rng, 2, 3);
        let g = random_tensor(&mut rng, 2, 2, 7, 6);
        let y = conv_forward(&x, &p).unwrap();
        let (gx, gp) = conv_backward(&x, &p, &g).unwrap();
        let mut lhs = 0.0;
        for s in 0..2 {
            for m in 0..2 {
                for (yv, gv) in y.plane(s, m).iter().zip(g.plane(s, m)) {
                    lhs += (yv - p.bias[m]) * gv;
                }
            }
        }
        let via_x: f64 = x.data().iter().zip(gx.data()).map(|(a, b)| a * b).sum();
        let via_w: f64 = p.weights.iter().zip(&gp.weights).map(|(a, b)| a * b).sum();
        assert!((lhs - via_x).abs() < 1e-10);
        assert!((lhs - via_w).abs() < 1e-10);
        let bias_sum: f64 = (0..2).map(|s| g.plane(s, 1).iter().sum::<f64>()).sum();
        assert!((gp.bias[1] - bias_sum).abs() < 1e-12);
    }

    #[test]
    fn channel_mismatch() {
        let p = ConvParams::<f64>::zeros(1, 2);
        assert!(matches!(
            conv_forward(&Tensor4::zeros(1, 1, 4, 4), &p),
            Err(Error::Shape(_))
        ));
        assert!(conv_backward(&Tensor4::zeros(1, 2, 4, 4), &p, &Tensor4::zeros(1, 1, 4, 3)).is_err());
    }

    #[test]
    fn sgd_arithmetic() {
        let mut p = ConvParams::<f64>::zeros(1, 1);
        p.bias[0] = 1.0;
        let mut g = GradBundle::zeros_like(&p);
        g.bias[0] = 2.0;
        let before = p.clone();
        sgd_step(&mut p, &g, 0.0);
        assert_eq!(p, before);
        sgd_step(&mut p, &GradBundle::zeros_like(&before), 0.1);
        assert_eq!(p, before);
        sgd_step(&mut p, &g, 0.1);
        assert!((p.bias[0] - 0.8).abs() < 1e-15);
    }
}
