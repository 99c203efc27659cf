//! 1D convolution, stride 1, zero-padded so output length equals input
//! length.
//!
//! For an even kernel the padding is asymmetric: (K−1)/2 zeros on the left
//! and the remaining K−1−(K−1)/2 on the right, so kernel tap k reads padded
//! position i+k. Weights are laid out [filter][channel][tap] row-major.

use super::{NetError, Param, Tensor};
use crate::rng::Rng;

#[derive(Debug, Clone)]
pub struct Conv1d {
    in_ch: usize,
    out_ch: usize,
    kernel: usize,
    pub w: Param,
    pub b: Param,
}

/// Forward state needed by backward: the unpadded input.
#[derive(Debug, Clone)]
pub struct Conv1dCache {
    input: Tensor,
}

impl Conv1d {
    /// Weights uniform on ±sqrt(1/(in_ch·kernel)), biases zero.
    pub fn new(in_ch: usize, out_ch: usize, kernel: usize, rng: &mut Rng) -> Result<Self, NetError> {
        if in_ch == 0 || out_ch == 0 || kernel == 0 {
            return Err(NetError::BadSpec(format!(
                "conv1d dims must be >= 1, got in={in_ch} out={out_ch} kernel={kernel}"
            )));
        }
        Ok(Conv1d {
            in_ch,
            out_ch,
            kernel,
            w: Param::uniform_init(out_ch * in_ch * kernel, in_ch * kernel, rng),
            b: Param::zeros(out_ch),
        })
    }

    pub fn in_channels(&self) -> usize {
        self.in_ch
    }

    pub fn out_channels(&self) -> usize {
        self.out_ch
    }

    pub fn kernel(&self) -> usize {
        self.kernel
    }

    fn pad_left(&self) -> usize {
        (self.kernel - 1) / 2
    }

    /// out[f][i] = b[f] + Σ_{c,k} w[f][c][k] · padded_input[c][i+k].
    pub fn forward(&self, input: &Tensor) -> Result<(Tensor, Conv1dCache), NetError> {
        let shape = input.shape();
        if shape.len() != 2 || shape[0] != self.in_ch {
            return Err(NetError::ShapeMismatch {
                what: "conv1d input",
                expected: vec![self.in_ch, 0],
                actual: shape.to_vec(),
            });
        }
        let len = shape[1];
        let pad = self.pad_left();
        let mut out = Tensor::zeros(vec![self.out_ch, len]);
        for f in 0..self.out_ch {
            let row = &mut out.data[f * len..(f + 1) * len];
            row.fill(self.b.value[f]);
            for c in 0..self.in_ch {
                let x = &input.data[c * len..(c + 1) * len];
                for k in 0..self.kernel {
                    let wv = self.w.value[(f * self.in_ch + c) * self.kernel + k];
                    // Padded position i+k maps to source site i+k−pad.
                    let lo = pad.saturating_sub(k);
                    let hi = (len + pad - k).min(len);
                    for i in lo..hi {
                        row[i] += wv * x[i + k - pad];
                    }
                }
            }
        }
        Ok((out, Conv1dCache { input: input.clone() }))
    }

    /// Accumulates dW/db and returns the input gradient.
    pub fn backward(
        &mut self,
        grad_out: &Tensor,
        cache: &Conv1dCache,
    ) -> Result<Tensor, NetError> {
        let len = cache.input.shape()[1];
        grad_out.expect_shape("conv1d grad_out", &[self.out_ch, len])?;
        let pad = self.pad_left();
        let mut grad_in = Tensor::zeros(vec![self.in_ch, len]);
        for f in 0..self.out_ch {
            let g = &grad_out.data[f * len..(f + 1) * len];
            self.b.grad[f] += g.iter().sum::<f64>();
            for c in 0..self.in_ch {
                let x = &cache.input.data[c * len..(c + 1) * len];
                let gx = &mut grad_in.data[c * len..(c + 1) * len];
                for k in 0..self.kernel {
                    let widx = (f * self.in_ch + c) * self.kernel + k;
                    let wv = self.w.value[widx];
                    let lo = pad.saturating_sub(k);
                    let hi = (len + pad - k).min(len);
                    let mut dw = 0.0;
                    for i in lo..hi {
                        dw += g[i] * x[i + k - pad];
                        gx[i + k - pad] += g[i] * wv;
                    }
                    self.w.grad[widx] += dw;
                }
            }
        }
        Ok(grad_in)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::net::gradcheck::{max_gradient_error, FD_TOLERANCE};

    /// Independent oracle: convolution as an explicit sum over an actually
    /// zero-padded buffer, no index arithmetic shared with the layer.
    fn naive_conv(
        x: &[f64],
        w: &[f64],
        b: &[f64],
        in_ch: usize,
        out_ch: usize,
        kernel: usize,
        len: usize,
    ) -> Vec<f64> {
        let pad_left = (kernel - 1) / 2;
        let padded_len = len + kernel - 1;
        let mut padded = vec![0.0; in_ch * padded_len];
        for c in 0..in_ch {
            for i in 0..len {
                padded[c * padded_len + pad_left + i] = x[c * len + i];
            }
        }
        let mut out = vec![0.0; out_ch * len];
        for f in 0..out_ch {
            for i in 0..len {
                let mut acc = b[f];
                for c in 0..in_ch {
                    for k in 0..kernel {
                        acc += w[(f * in_ch + c) * kernel + k]
                            * padded[c * padded_len + i + k];
                    }
                }
                out[f * len + i] = acc;
            }
        }
        out
    }

    fn rand_tensor(shape: Vec<usize>, rng: &mut Rng) -> Tensor {
        let n = shape.iter().product();
        Tensor::new(shape, (0..n).map(|_| rng.uniform(-1.0, 1.0)).collect()).unwrap()
    }

    #[test]
    fn zero_input_zero_bias_gives_zero() {
        let mut rng = Rng::from_seed(1);
        let conv = Conv1d::new(2, 3, 8, &mut rng).unwrap();
        let x = Tensor::zeros(vec![2, 16]);
        let (y, _) = conv.forward(&x).unwrap();
        assert!(y.data.iter().all(|&v| v == 0.0));
    }

    #[test]
    fn centered_delta_kernel_is_identity() {
        let mut rng = Rng::from_seed(2);
        let mut conv = Conv1d::new(1, 1, 3, &mut rng).unwrap();
        // Kernel tap at padded offset pad_left reads source site i exactly.
        conv.w.value = vec![0.0, 1.0, 0.0];
        conv.b.value = vec![0.0];
        let x = rand_tensor(vec![1, 10], &mut rng);
        let (y, _) = conv.forward(&x).unwrap();
        assert_eq!(y.data, x.data);
    }

    #[test]
    fn matches_naive_oracle_at_production_size() {
        let mut rng = Rng::from_seed(3);
        let conv = Conv1d::new(2, 4, 8, &mut rng).unwrap();
        let x = rand_tensor(vec![2, 128], &mut rng);
        let (y, _) = conv.forward(&x).unwrap();
        assert_eq!(y.shape(), &[4, 128]);
        let oracle = naive_conv(&x.data, &conv.w.value, &conv.b.value, 2, 4, 8, 128);
        for (a, b) in y.data.iter().zip(&oracle) {
            assert!((a - b).abs() < 1e-12);
        }
    }

    #[test]
    fn matches_naive_oracle_odd_kernel() {
        let mut rng = Rng::from_seed(4);
        let conv = Conv1d::new(3, 2, 5, &mut rng).unwrap();
        let x = rand_tensor(vec![3, 17], &mut rng);
        let (y, _) = conv.forward(&x).unwrap();
        let oracle = naive_conv(&x.data, &conv.w.value, &conv.b.value, 3, 2, 5, 17);
        for (a, b) in y.data.iter().zip(&oracle) {
            assert!((a - b).abs() < 1e-12);
        }
    }

    #[test]
    fn rejects_wrong_channel_count() {
        let mut rng = Rng::from_seed(5);
        let conv = Conv1d::new(2, 4, 8, &mut rng).unwrap();
        let x = Tensor::zeros(vec![3, 16]);
        assert!(matches!(
            conv.forward(&x),
            Err(NetError::ShapeMismatch { .. })
        ));
    }

    #[test]
    fn zero_grad_out_accumulates_nothing() {
        let mut rng = Rng::from_seed(6);
        let mut conv = Conv1d::new(2, 3, 8, &mut rng).unwrap();
        let x = rand_tensor(vec![2, 12], &mut rng);
        let (_, cache) = conv.forward(&x).unwrap();
        let gin = conv.backward(&Tensor::zeros(vec![3, 12]), &cache).unwrap();
        assert!(gin.data.iter().all(|&v| v == 0.0));
        assert!(conv.w.grad.iter().all(|&v| v == 0.0));
        assert!(conv.b.grad.iter().all(|&v| v == 0.0));
    }

    #[test]
    fn grad_out_spike_stays_in_receptive_field() {
        let mut rng = Rng::from_seed(7);
        let mut conv = Conv1d::new(1, 1, 8, &mut rng).unwrap();
        let x = rand_tensor(vec![1, 32], &mut rng);
        let (_, cache) = conv.forward(&x).unwrap();
        let mut g = Tensor::zeros(vec![1, 32]);
        g.data[16] = 1.0;
        let gin = conv.backward(&g, &cache).unwrap();
        // Output position 16 reads padded 16..24, i.e. sources 13..=20.
        for (i, &v) in gin.data.iter().enumerate() {
            if !(13..=20).contains(&i) {
                assert_eq!(v, 0.0, "leak at site {i}");
            }
        }
        assert!(gin.data[13..=20].iter().any(|&v| v != 0.0));
    }

    /// Scalar probe: loss = Σ coeff_i · conv(x)_i, a random linear
    /// functional of the output, so backward(coeffs) must be its gradient.
    #[test]
    fn gradients_match_finite_differences() {
        for seed in 0..10u64 {
            let mut rng = Rng::from_seed(100 + seed);
            let mut conv = Conv1d::new(2, 3, 8, &mut rng).unwrap();
            let x = rand_tensor(vec![2, 11], &mut rng);
            let coeff = rand_tensor(vec![3, 11], &mut rng);
            let (_, cache) = conv.forward(&x).unwrap();
            let gin = conv.backward(&coeff, &cache).unwrap();

            let w_snapshot = conv.w.value.clone();
            let b_snapshot = conv.b.value.clone();
            let loss_for = |w: &[f64], b: &[f64], xd: &[f64]| {
                let probe = Conv1d {
                    in_ch: 2,
                    out_ch: 3,
                    kernel: 8,
                    w: Param { value: w.to_vec(), grad: vec![0.0; w.len()] },
                    b: Param { value: b.to_vec(), grad: vec![0.0; b.len()] },
                };
                let xt = Tensor::new(vec![2, 11], xd.to_vec()).unwrap();
                let (y, _) = probe.forward(&xt).unwrap();
                y.data.iter().zip(&coeff.data).map(|(a, c)| a * c).sum()
            };

            let mut xd = x.data.clone();
            let ex = max_gradient_error(&mut xd, &gin.data, |v| {
                loss_for(&w_snapshot, &b_snapshot, v)
            });
            let mut wd = conv.w.value.clone();
            let ew = max_gradient_error(&mut wd, &conv.w.grad, |v| {
                loss_for(v, &b_snapshot, &x.data)
            });
            let mut bd = conv.b.value.clone();
            let eb = max_gradient_error(&mut bd, &conv.b.grad, |v| {
                loss_for(&w_snapshot, v, &x.data)
            });
            assert!(ex < FD_TOLERANCE, "seed {seed}: input grad error {ex}");
            assert!(ew < FD_TOLERANCE, "seed {seed}: weight grad error {ew}");
            assert!(eb < FD_TOLERANCE, "seed {seed}: bias grad error {eb}");
        }
    }
}
