use crate::error::{Error, Result};
use crate::nn::{Scalar, Tensor4};

/// `max(x, 0)`, letting NaN through so that it reaches the loss.
pub fn relu_forward<T: Scalar>(x: &Tensor4<T>) -> Tensor4<T> {
    x.map(|v| if v < T::ZERO { T::ZERO } else { v })
}

/// Passes `grad_out` where `x > 0`. The subgradient at exactly 0 is 0.
///
/// `x` may be either the pre-activation or the ReLU output; both have the
/// same positive support.
pub fn relu_backward<T: Scalar>(x: &Tensor4<T>, grad_out: &Tensor4<T>) -> Result<Tensor4<T>> {
    x.zip_map(grad_out, |v, g| if v > T::ZERO { g } else { T::ZERO })
}

pub(crate) fn relu_in_place<T: Scalar>(x: &mut Tensor4<T>) {
    x.data_mut().iter_mut().for_each(|v| {
        if *v < T::ZERO {
            *v = T::ZERO;
        }
    });
}

pub(crate) fn relu_mask_in_place<T: Scalar>(activation: &Tensor4<T>, grad: &mut Tensor4<T>) {
    grad.data_mut()
        .iter_mut()
        .zip(activation.data())
        .for_each(|(g, &a)| {
            if !(a > T::ZERO) {
                *g = T::ZERO;
            }
        });
}

/// Stacks tensors along the channel axis, preserving order.
pub fn concat_channels<T: Scalar>(xs: &[&Tensor4<T>]) -> Result<Tensor4<T>> {
    let first = xs
        .first()
        .ok_or_else(|| Error::Shape("concat of zero tensors".into()))?;
    let (n, _, h, w) = first.dims();
    for t in xs {
        if (t.n(), t.h(), t.w()) != (n, h, w) {
            return Err(Error::Shape(format!(
                "concat needs equal n,h,w: {:?} vs {:?}",
                first.dims(),
                t.dims()
            )));
        }
    }
    let c_total: usize = xs.iter().map(|t| t.c()).sum();
    let mut data = Vec::with_capacity(n * c_total * h * w);
    for s in 0..n {
        for t in xs {
            data.extend_from_slice(t.sample(s));
        }
    }
    Tensor4::from_vec(n, c_total, h, w, data)
}

/// Inverse of [`concat_channels`]: splits at the given channel counts.
/// Also serves as the concat backward pass.
pub fn split_channels<T: Scalar>(x: &Tensor4<T>, channels: &[usize]) -> Result<Vec<Tensor4<T>>> {
    let (n, c, h, w) = x.dims();
    if channels.iter().sum::<usize>() != c {
        return Err(Error::Shape(format!(
            "cannot split {c} channels as {channels:?}"
        )));
    }
    let hw = h * w;
    let mut parts: Vec<Vec<T>> = channels
        .iter()
        .map(|&k| Vec::with_capacity(n * k * hw))
        .collect();
    for s in 0..n {
        let sample = x.sample(s);
        let mut offset = 0;
        for (part, &k) in parts.iter_mut().zip(channels) {
            part.extend_from_slice(&sample[offset * hw..(offset + k) * hw]);
            offset += k;
        }
    }
    parts
        .into_iter()
        .zip(channels)
        .map(|(data, &k)| Tensor4::from_vec(n, k, h, w, data))
        .collect()
}

/// Batch l2 loss `(1/M) Σ_i ‖pred_i − target_i‖²` with `M` the batch size,
/// and its gradient `(2/M)(pred − target)`.
pub fn mse_loss<T: Scalar>(pred: &Tensor4<T>, target: &Tensor4<T>) -> Result<(f64, Tensor4<T>)> {
    pred.check_same_shape(target, "loss")?;
    let m = pred.n() as f64;
    let mut total = 0.0f64;
    for (&p, &t) in pred.data().iter().zip(target.data()) {
        let d = (p - t).to_f64();
        total += d * d;
    }
    let scale = T::from_f64(2.0 / m);
    let grad = pred.zip_map(target, |p, t| scale * (p - t))?;
    Ok((total / m, grad))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn t(c: usize, data: Vec<f64>) -> Tensor4<f64> {
        let hw = data.len() / c;
        Tensor4::from_vec(1, c, 1, hw, data).unwrap()
    }

    #[test]
    fn relu_cases() {
        let neg = t(1, vec![-1.0, -0.5, -3.0]);
        assert!(relu_forward(&neg).data().iter().all(|&v| v == 0.0));
        assert!(relu_backward(&neg, &t(1, vec![1.0; 3]))
            .unwrap()
            .data()
            .iter()
            .all(|&v| v == 0.0));

        assert!(relu_forward(&t(1, vec![f64::NAN])).data()[0].is_nan());

        let pos = t(1, vec![0.5, 2.0]);
        assert_eq!(relu_forward(&pos), pos);
        let g = t(1, vec![3.0, -4.0]);
        assert_eq!(relu_backward(&pos, &g).unwrap(), g);

        let mixed = t(1, vec![-1.0, 2.0, 0.0]);
        assert_eq!(relu_forward(&mixed).data(), &[0.0, 2.0, 0.0]);
        assert_eq!(
            relu_backward(&mixed, &t(1, vec![5.0, 7.0, 9.0])).unwrap().data(),
            &[0.0, 7.0, 0.0]
        );
    }

    #[test]
    fn concat_and_split() {
        let a = Tensor4::from_vec(2, 1, 1, 2, vec![1.0, 2.0, 3.0, 4.0]).unwrap();
        let b = Tensor4::from_vec(2, 2, 1, 2, vec![5.0, 6.0, 7.0, 8.0, 9.0, 10.0, 11.0, 12.0]).unwrap();
        assert_eq!(concat_channels(&[&a]).unwrap(), a);
        let ab = concat_channels(&[&a, &b]).unwrap();
        assert_eq!(ab.dims(), (2, 3, 1, 2));
        assert_eq!(ab.plane(1, 0), a.plane(1, 0));
        assert_eq!(ab.plane(1, 2), b.plane(1, 1));
        let parts = split_channels(&ab, &[1, 2]).unwrap();
        assert_eq!(parts, vec![a.clone(), b]);
        assert!(split_channels(&ab, &[1, 1]).is_err());
        assert!(concat_channels(&[&a, &Tensor4::zeros(1, 1, 1, 2)]).is_err());
    }

    #[test]
    fn mse_cases() {
        let p = t(1, vec![0.3, -0.2]);
        let (loss, grad) = mse_loss(&p, &p).unwrap();
        assert_eq!(loss, 0.0);
        assert!(grad.data().iter().all(|&g| g == 0.0));

        let (loss, grad) = mse_loss(&t(1, vec![1.0]), &t(1, vec![0.0])).unwrap();
        assert_eq!(loss, 1.0);
        assert_eq!(grad.data(), &[2.0]);

        let target = t(1, vec![0.0, 0.0]);
        let (l1, _) = mse_loss(&t(1, vec![0.1, -0.3]), &target).unwrap();
        let (l2, _) = mse_loss(&t(1, vec![0.2, -0.6]), &target).unwrap();
        assert!((l2 - 4.0 * l1).abs() < 1e-15);

        assert!(mse_loss(&t(1, vec![0.0]), &t(1, vec![0.0, 1.0])).is_err());
    }

    #[test]
    fn mse_divides_by_batch_not_pixels() {
        let pred = Tensor4::from_vec(2, 1, 1, 2, vec![1.0, 1.0, 1.0, 1.0]).unwrap();
        let (loss, _) = mse_loss(&pred, &Tensor4::zeros(2, 1, 1, 2)).unwrap();
        assert_eq!(loss, 2.0);
    }
}
