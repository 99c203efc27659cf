//! Fully connected layer: out = W·in + b, weights [out][in] row-major.

use super::{NetError, Param, Tensor};
use crate::rng::Rng;

#[derive(Debug, Clone)]
pub struct Dense {
    in_dim: usize,
    out_dim: usize,
    pub w: Param,
    pub b: Param,
}

#[derive(Debug, Clone)]
pub struct DenseCache {
    input: Tensor,
}

impl Dense {
    /// Weights uniform on ±sqrt(1/in_dim), biases zero.
    pub fn new(in_dim: usize, out_dim: usize, rng: &mut Rng) -> Result<Self, NetError> {
        if in_dim == 0 || out_dim == 0 {
            return Err(NetError::BadSpec(format!(
                "dense dims must be >= 1, got in={in_dim} out={out_dim}"
            )));
        }
        Ok(Dense {
            in_dim,
            out_dim,
            w: Param::uniform_init(out_dim * in_dim, in_dim, rng),
            b: Param::zeros(out_dim),
        })
    }

    pub fn in_dim(&self) -> usize {
        self.in_dim
    }

    pub fn out_dim(&self) -> usize {
        self.out_dim
    }

    pub fn forward(&self, input: &Tensor) -> Result<(Tensor, DenseCache), NetError> {
        input.expect_shape("dense input", &[self.in_dim])?;
        let mut out = Tensor::zeros(vec![self.out_dim]);
        for o in 0..self.out_dim {
            let row = &self.w.value[o * self.in_dim..(o + 1) * self.in_dim];
            let mut acc = self.b.value[o];
            for (wv, xv) in row.iter().zip(&input.data) {
                acc += wv * xv;
            }
            out.data[o] = acc;
        }
        Ok((out, DenseCache { input: input.clone() }))
    }

    pub fn backward(&mut self, grad_out: &Tensor, cache: &DenseCache) -> Result<Tensor, NetError> {
        grad_out.expect_shape("dense grad_out", &[self.out_dim])?;
        let mut grad_in = Tensor::zeros(vec![self.in_dim]);
        for o in 0..self.out_dim {
            let g = grad_out.data[o];
            self.b.grad[o] += g;
            let wrow = &self.w.value[o * self.in_dim..(o + 1) * self.in_dim];
            let grow = &mut self.w.grad[o * self.in_dim..(o + 1) * self.in_dim];
            for i in 0..self.in_dim {
                grow[i] += g * cache.input.data[i];
                grad_in.data[i] += g * wrow[i];
            }
        }
        Ok(grad_in)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::net::gradcheck::{max_gradient_error, FD_TOLERANCE};

    #[test]
    fn zero_weights_pass_bias_through() {
        let mut rng = Rng::from_seed(1);
        let mut d = Dense::new(3, 2, &mut rng).unwrap();
        d.w.value.fill(0.0);
        d.b.value = vec![0.5, -1.5];
        let x = Tensor::new(vec![3], vec![9.0, 9.0, 9.0]).unwrap();
        let (y, _) = d.forward(&x).unwrap();
        assert_eq!(y.data, vec![0.5, -1.5]);
    }

    #[test]
    fn identity_matrix_is_identity() {
        let mut rng = Rng::from_seed(2);
        let mut d = Dense::new(3, 3, &mut rng).unwrap();
        d.w.value = vec![1.0, 0.0, 0.0, 0.0, 1.0, 0.0, 0.0, 0.0, 1.0];
        d.b.value.fill(0.0);
        let x = Tensor::new(vec![3], vec![1.0, -2.0, 3.0]).unwrap();
        let (y, _) = d.forward(&x).unwrap();
        assert_eq!(y.data, x.data);
    }

    #[test]
    fn rejects_wrong_input_length() {
        let mut rng = Rng::from_seed(3);
        let d = Dense::new(4, 2, &mut rng).unwrap();
        let x = Tensor::zeros(vec![5]);
        assert!(matches!(d.forward(&x), Err(NetError::ShapeMismatch { .. })));
    }

    #[test]
    fn gradients_match_finite_differences() {
        for seed in 0..10u64 {
            let mut rng = Rng::from_seed(200 + seed);
            let mut d = Dense::new(7, 5, &mut rng).unwrap();
            let x = Tensor::new(vec![7], (0..7).map(|_| rng.uniform(-1.0, 1.0)).collect())
                .unwrap();
            let coeff: Vec<f64> = (0..5).map(|_| rng.uniform(-1.0, 1.0)).collect();
            let (_, cache) = d.forward(&x).unwrap();
            let g = Tensor::new(vec![5], coeff.clone()).unwrap();
            let gin = d.backward(&g, &cache).unwrap();

            let w0 = d.w.value.clone();
            let b0 = d.b.value.clone();
            let loss_for = |w: &[f64], b: &[f64], xd: &[f64]| {
                let mut acc = 0.0;
                for o in 0..5 {
                    let mut y = b[o];
                    for i in 0..7 {
                        y += w[o * 7 + i] * xd[i];
                    }
                    acc += y * coeff[o];
                }
                acc
            };

            let mut xd = x.data.clone();
            let ex = max_gradient_error(&mut xd, &gin.data, |v| loss_for(&w0, &b0, v));
            let mut wd = d.w.value.clone();
            let ew = max_gradient_error(&mut wd, &d.w.grad, |v| loss_for(v, &b0, &x.data));
            let mut bd = d.b.value.clone();
            let eb = max_gradient_error(&mut bd, &d.b.grad, |v| loss_for(&w0, v, &x.data));
            assert!(ex < FD_TOLERANCE, "seed {seed}: input grad error {ex}");
            assert!(ew < FD_TOLERANCE, "seed {seed}: weight grad error {ew}");
            assert!(eb < FD_TOLERANCE, "seed {seed}: bias grad error {eb}");
        }
    }
}
