//! Rectified linear activation.
//!
//! Backward uses the subgradient that is zero at exactly 0, so the pass is
//! deterministic everywhere including the kink.

use super::Tensor;

pub fn relu_forward(input: &Tensor) -> Tensor {
    let mut out = input.clone();
    for v in &mut out.data {
        if *v < 0.0 {
            *v = 0.0;
        }
    }
    out
}

/// Passes gradient where the forward input was strictly positive.
pub fn relu_backward(grad_out: &Tensor, forward_input: &Tensor) -> Tensor {
    let mut grad_in = grad_out.clone();
    for (g, &x) in grad_in.data.iter_mut().zip(&forward_input.data) {
        if x <= 0.0 {
            *g = 0.0;
        }
    }
    grad_in
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::net::gradcheck::{max_gradient_error, FD_TOLERANCE};
    use crate::rng::Rng;

    #[test]
    fn clamps_negatives_and_zero() {
        let x = Tensor::new(vec![3], vec![-1.0, 0.0, 2.0]).unwrap();
        assert_eq!(relu_forward(&x).data, vec![0.0, 0.0, 2.0]);
    }

    #[test]
    fn identity_on_positive_input() {
        let x = Tensor::new(vec![4], vec![0.5, 1.0, 3.0, 0.1]).unwrap();
        assert_eq!(relu_forward(&x).data, x.data);
    }

    #[test]
    fn zero_input_gets_zero_gradient() {
        let x = Tensor::new(vec![3], vec![-2.0, 0.0, 1.0]).unwrap();
        let g = Tensor::new(vec![3], vec![1.0, 1.0, 1.0]).unwrap();
        assert_eq!(relu_backward(&g, &x).data, vec![0.0, 0.0, 1.0]);
    }

    #[test]
    fn gradients_match_finite_differences() {
        for seed in 0..10u64 {
            let mut rng = Rng::from_seed(400 + seed);
            let data: Vec<f64> = (0..32).map(|_| rng.uniform(-1.0, 1.0)).collect();
            let coeff: Vec<f64> = (0..32).map(|_| rng.uniform(-1.0, 1.0)).collect();
            let x = Tensor::new(vec![32], data).unwrap();
            let g = Tensor::new(vec![32], coeff.clone()).unwrap();
            let gin = relu_backward(&g, &x);
            let mut xd = x.data.clone();
            let err = max_gradient_error(&mut xd, &gin.data, |v| {
                let xt = Tensor::new(vec![32], v.to_vec()).unwrap();
                relu_forward(&xt).data.iter().zip(&coeff).map(|(a, c)| a * c).sum()
            });
            assert!(err < FD_TOLERANCE, "seed {seed}: error {err}");
        }
    }
}
