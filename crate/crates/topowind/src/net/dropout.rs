//! Inverted dropout.
//!
//! Training zeroes each element independently with probability `rate` and
//! scales survivors by 1/(1−rate), so evaluation is the identity and needs
//! no rescaling. The mask is cached for backward.

use super::{NetError, Tensor};
use crate::rng::Rng;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Mode {
    Train,
    Eval,
}

#[derive(Debug, Clone, Copy)]
pub struct Dropout {
    rate: f64,
}

/// Per-element multipliers applied in forward: 0 or 1/(1−rate); all ones in
/// eval mode.
#[derive(Debug, Clone)]
pub struct DropoutCache {
    mask: Vec<f64>,
}

impl Dropout {
    pub fn new(rate: f64) -> Result<Self, NetError> {
        if !(0.0..1.0).contains(&rate) {
            return Err(NetError::BadSpec(format!(
                "dropout rate must be in [0, 1), got {rate}"
            )));
        }
        Ok(Dropout { rate })
    }

    pub fn rate(&self) -> f64 {
        self.rate
    }

    pub fn forward(&self, input: &Tensor, mode: Mode, rng: &mut Rng) -> (Tensor, DropoutCache) {
        let mut out = input.clone();
        let mask = match mode {
            Mode::Eval => vec![1.0; input.len()],
            Mode::Train => {
                let keep = 1.0 / (1.0 - self.rate);
                let mask: Vec<f64> = (0..input.len())
                    .map(|_| if rng.next_f64() < self.rate { 0.0 } else { keep })
                    .collect();
                for (v, m) in out.data.iter_mut().zip(&mask) {
                    *v *= m;
                }
                mask
            }
        };
        (out, DropoutCache { mask })
    }

    pub fn backward(&self, grad_out: &Tensor, cache: &DropoutCache) -> Tensor {
        let mut grad_in = grad_out.clone();
        for (g, m) in grad_in.data.iter_mut().zip(&cache.mask) {
            *g *= m;
        }
        grad_in
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::net::gradcheck::{max_gradient_error, FD_TOLERANCE};

    #[test]
    fn eval_mode_is_identity() {
        let d = Dropout::new(0.5).unwrap();
        let mut rng = Rng::from_seed(1);
        let x = Tensor::new(vec![5], vec![1.0, -2.0, 3.0, 0.0, 7.0]).unwrap();
        let (y, _) = d.forward(&x, Mode::Eval, &mut rng);
        assert_eq!(y.data, x.data);
    }

    #[test]
    fn zero_rate_train_is_identity() {
        let d = Dropout::new(0.0).unwrap();
        let mut rng = Rng::from_seed(2);
        let x = Tensor::new(vec![4], vec![1.0, 2.0, 3.0, 4.0]).unwrap();
        let (y, _) = d.forward(&x, Mode::Train, &mut rng);
        assert_eq!(y.data, x.data);
    }

    #[test]
    fn train_mask_preserves_mean_at_half_rate() {
        let d = Dropout::new(0.5).unwrap();
        let mut rng = Rng::from_seed(3);
        let n = 100_000;
        let x = Tensor::new(vec![n], vec![1.0; n]).unwrap();
        let (y, _) = d.forward(&x, Mode::Train, &mut rng);
        let mean = y.data.iter().sum::<f64>() / n as f64;
        assert!((mean - 1.0).abs() < 0.01, "mean {mean}");
        // Survivors carry exactly the inverted-keep scale.
        assert!(y.data.iter().all(|&v| v == 0.0 || v == 2.0));
    }

    #[test]
    fn invalid_rates_are_rejected() {
        assert!(Dropout::new(1.0).is_err());
        assert!(Dropout::new(-0.1).is_err());
        assert!(Dropout::new(0.999).is_ok());
    }

    #[test]
    fn gradients_match_finite_differences_with_frozen_mask() {
        let d = Dropout::new(0.5).unwrap();
        for seed in 0..10u64 {
            let mut rng = Rng::from_seed(500 + seed);
            let data: Vec<f64> = (0..24).map(|_| rng.uniform(-1.0, 1.0)).collect();
            let coeff: Vec<f64> = (0..24).map(|_| rng.uniform(-1.0, 1.0)).collect();
            let x = Tensor::new(vec![24], data).unwrap();
            let (_, cache) = d.forward(&x, Mode::Train, &mut rng);
            let g = Tensor::new(vec![24], coeff.clone()).unwrap();
            let gin = d.backward(&g, &cache);
            // The FD probe reuses the cached mask directly, freezing the
            // stochastic part so the map under test is deterministic.
            let mut xd = x.data.clone();
            let err = max_gradient_error(&mut xd, &gin.data, |v| {
                v.iter()
                    .zip(&cache.mask)
                    .zip(&coeff)
                    .map(|((a, m), c)| a * m * c)
                    .sum()
            });
            assert!(err < FD_TOLERANCE, "seed {seed}: error {err}");
        }
    }
}
