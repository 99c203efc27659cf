//! Non-overlapping 1D max pooling (window equals stride).
//!
//! Gradient flows only to the position that produced each maximum; on ties
//! the first (lowest-index) maximum wins, so backward is deterministic.

use super::{NetError, Tensor};

#[derive(Debug, Clone, Copy)]
pub struct MaxPool1d {
    window: usize,
}

/// Argmax positions (absolute indices into the input) and the input shape.
#[derive(Debug, Clone)]
pub struct MaxPool1dCache {
    argmax: Vec<usize>,
    in_shape: Vec<usize>,
}

impl MaxPool1d {
    /// `window` doubles as the stride; overlapping pooling is out of scope.
    pub fn new(window: usize) -> Result<Self, NetError> {
        if window == 0 {
            return Err(NetError::BadSpec("pool window must be >= 1".into()));
        }
        Ok(MaxPool1d { window })
    }

    pub fn window(&self) -> usize {
        self.window
    }

    pub fn forward(&self, input: &Tensor) -> Result<(Tensor, MaxPool1dCache), NetError> {
        let shape = input.shape();
        if shape.len() != 2 {
            return Err(NetError::ShapeMismatch {
                what: "maxpool1d input",
                expected: vec![0, 0],
                actual: shape.to_vec(),
            });
        }
        let (ch, len) = (shape[0], shape[1]);
        if len % self.window != 0 {
            return Err(NetError::NotDivisible { len, stride: self.window });
        }
        let out_len = len / self.window;
        let mut out = Tensor::zeros(vec![ch, out_len]);
        let mut argmax = vec![0usize; ch * out_len];
        for c in 0..ch {
            let x = &input.data[c * len..(c + 1) * len];
            for j in 0..out_len {
                let base = j * self.window;
                let mut best = base;
                for i in base + 1..base + self.window {
                    if x[i] > x[best] {
                        best = i;
                    }
                }
                out.data[c * out_len + j] = x[best];
                argmax[c * out_len + j] = c * len + best;
            }
        }
        Ok((out, MaxPool1dCache { argmax, in_shape: shape.to_vec() }))
    }

    /// Scatters each output gradient to its cached argmax position.
    pub fn backward(
        &self,
        grad_out: &Tensor,
        cache: &MaxPool1dCache,
    ) -> Result<Tensor, NetError> {
        let out_len = cache.in_shape[1] / self.window;
        grad_out.expect_shape("maxpool1d grad_out", &[cache.in_shape[0], out_len])?;
        let mut grad_in = Tensor::zeros(cache.in_shape.clone());
        for (slot, &src) in cache.argmax.iter().enumerate() {
            grad_in.data[src] += grad_out.data[slot];
        }
        Ok(grad_in)
    }
}
