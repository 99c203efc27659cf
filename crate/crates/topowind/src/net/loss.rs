//! Loss heads: mean squared error for reconstruction, softmax cross-entropy
//! for classification.

use super::{NetError, Tensor};

/// Mean squared error over the flattened pair of channels.
///
/// For a 2×L reconstruction this is (1/2L) Σ_i [(Re φ_i − out_{i,1})² +
/// (Im φ_i − out_{i,2})²], i.e. the plain mean of squared differences over
/// all 2L slots. Returns the loss and its gradient with respect to `output`
/// (= (2/n)(output − target), which is (1/L)(output − target) here).
pub fn mse_loss(output: &Tensor, target: &Tensor) -> Result<(f64, Tensor), NetError> {
    if output.shape() != target.shape() {
        return Err(NetError::ShapeMismatch {
            what: "mse target",
            expected: output.shape().to_vec(),
            actual: target.shape().to_vec(),
        });
    }
    let n = output.len() as f64;
    let mut grad = Tensor::zeros(output.shape().to_vec());
    let mut loss = 0.0;
    for (i, (&o, &t)) in output.data.iter().zip(&target.data).enumerate() {
        let d = o - t;
        loss += d * d;
        grad.data[i] = 2.0 * d / n;
    }
    Ok((loss / n, grad))
}

/// Softmax cross-entropy output bundle.
#[derive(Debug, Clone)]
pub struct SoftmaxXent {
    pub loss: f64,
    /// Normalized class probabilities.
    pub probs: Tensor,
    /// d loss / d logits = probs − onehot(true_class).
    pub grad: Tensor,
}

/// Numerically stabilized softmax + cross-entropy against a class index.
pub fn softmax_xent(logits: &Tensor, true_class: usize) -> Result<SoftmaxXent, NetError> {
    let classes = logits.len();
    if true_class >= classes {
        return Err(NetError::ClassOutOfRange { class: true_class, classes });
    }
    let max = logits.data.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let mut probs = Tensor::zeros(logits.shape().to_vec());
    let mut z = 0.0;
    for (p, &l) in probs.data.iter_mut().zip(&logits.data) {
        *p = (l - max).exp();
        z += *p;
    }
    for p in &mut probs.data {
        *p /= z;
    }
    // −log p[t], written against the stabilized logits so the result stays
    // finite even when p[t] underflows.
    let loss = z.ln() - (logits.data[true_class] - max);
    let mut grad = probs.clone();
    grad.data[true_class] -= 1.0;
    Ok(SoftmaxXent { loss, probs, grad })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::net::gradcheck::{max_gradient_error, FD_TOLERANCE};
    use crate::rng::Rng;

    #[test]
    fn mse_zero_when_equal() {
        let t = Tensor::new(vec![4], vec![1.0, 2.0, 3.0, 4.0]).unwrap();
        let (loss, grad) = mse_loss(&t, &t).unwrap();
        assert_eq!(loss, 0.0);
        assert!(grad.data.iter().all(|&g| g == 0.0));
    }

    #[test]
    fn mse_single_site_example() {
        // L=1: output (0,0) against target (1,0) → (1/2)(1+0).
        let out = Tensor::new(vec![2], vec![0.0, 0.0]).unwrap();
        let tgt = Tensor::new(vec![2], vec![1.0, 0.0]).unwrap();
        let (loss, grad) = mse_loss(&out, &tgt).unwrap();
        assert_eq!(loss, 0.5);
        assert_eq!(grad.data, vec![-1.0, 0.0]);
    }

    #[test]
    fn mse_rejects_length_mismatch() {
        let a = Tensor::zeros(vec![4]);
        let b = Tensor::zeros(vec![5]);
        assert!(matches!(mse_loss(&a, &b), Err(NetError::ShapeMismatch { .. })));
    }

    #[test]
    fn mse_gradient_matches_finite_differences() {
        for seed in 0..10u64 {
            let mut rng = Rng::from_seed(600 + seed);
            let out: Vec<f64> = (0..16).map(|_| rng.uniform(-1.0, 1.0)).collect();
            let tgt: Vec<f64> = (0..16).map(|_| rng.uniform(-1.0, 1.0)).collect();
            let o = Tensor::new(vec![16], out).unwrap();
            let t = Tensor::new(vec![16], tgt).unwrap();
            let (_, grad) = mse_loss(&o, &t).unwrap();
            let mut od = o.data.clone();
            let err = max_gradient_error(&mut od, &grad.data, |v| {
                let ot = Tensor::new(vec![16], v.to_vec()).unwrap();
                mse_loss(&ot, &t).unwrap().0
            });
            assert!(err < FD_TOLERANCE, "seed {seed}: error {err}");
        }
    }

    #[test]
    fn softmax_uniform_on_equal_logits() {
        let logits = Tensor::new(vec![11], vec![3.0; 11]).unwrap();
        let s = softmax_xent(&logits, 4).unwrap();
        for &p in &s.probs.data {
            assert!((p - 1.0 / 11.0).abs() < 1e-15);
        }
        assert!((s.loss - (11.0f64).ln()).abs() < 1e-12);
    }

    #[test]
    fn softmax_saturates_to_onehot() {
        let mut data = vec![0.0; 11];
        data[7] = 1000.0;
        let logits = Tensor::new(vec![11], data).unwrap();
        let s = softmax_xent(&logits, 7).unwrap();
        assert!(s.loss.abs() < 1e-12);
        assert!((s.probs.data[7] - 1.0).abs() < 1e-12);
    }

    #[test]
    fn softmax_probabilities_normalize_and_shift_invariant() {
        let mut rng = Rng::from_seed(9);
        for _ in 0..20 {
            let data: Vec<f64> = (0..11).map(|_| rng.uniform(-5.0, 5.0)).collect();
            let shifted: Vec<f64> = data.iter().map(|&v| v + 123.0).collect();
            let a = softmax_xent(&Tensor::new(vec![11], data).unwrap(), 0).unwrap();
            let b = softmax_xent(&Tensor::new(vec![11], shifted).unwrap(), 0).unwrap();
            let sum: f64 = a.probs.data.iter().sum();
            assert!((sum - 1.0).abs() < 1e-12);
            assert!(a.probs.data.iter().all(|&p| p >= 0.0));
            for (pa, pb) in a.probs.data.iter().zip(&b.probs.data) {
                assert!((pa - pb).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn softmax_rejects_out_of_range_class() {
        let logits = Tensor::zeros(vec![11]);
        assert_eq!(
            softmax_xent(&logits, 11).unwrap_err(),
            NetError::ClassOutOfRange { class: 11, classes: 11 }
        );
    }

    #[test]
    fn softmax_gradient_matches_finite_differences() {
        for seed in 0..10u64 {
            let mut rng = Rng::from_seed(700 + seed);
            let data: Vec<f64> = (0..11).map(|_| rng.uniform(-2.0, 2.0)).collect();
            let cls = (seed % 11) as usize;
            let logits = Tensor::new(vec![11], data).unwrap();
            let s = softmax_xent(&logits, cls).unwrap();
            let mut ld = logits.data.clone();
            let err = max_gradient_error(&mut ld, &s.grad.data, |v| {
                let lt = Tensor::new(vec![11], v.to_vec()).unwrap();
                softmax_xent(&lt, cls).unwrap().loss
            });
            assert!(err < FD_TOLERANCE, "seed {seed}: error {err}");
        }
    }
}
