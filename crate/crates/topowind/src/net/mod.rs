//! Neural-network layers with hand-written forward and backward passes.
//!
//! Everything is f64 and allocation-simple: a layer's forward returns its
//! output plus a cache of exactly what backward needs, backward accumulates
//! parameter gradients additively and returns the input gradient. No graph
//! tracing, no implicit state. Analytic gradients are verified against
//! central finite differences in each layer's tests and again for the
//! composed models; [`gradcheck`] holds the shared machinery.

mod conv;
mod dense;
mod dropout;
pub mod gradcheck;
mod loss;
mod pool;
mod relu;

pub use conv::{Conv1d, Conv1dCache};
pub use dense::{Dense, DenseCache};
pub use dropout::{Dropout, DropoutCache, Mode};
pub use loss::{mse_loss, softmax_xent, SoftmaxXent};
pub use pool::{MaxPool1d, MaxPool1dCache};
pub use relu::{relu_backward, relu_forward};

use thiserror::Error;

#[derive(Debug, Error, PartialEq)]
pub enum NetError {
    #[error("{what}: expected shape {expected:?}, got {actual:?}")]
    ShapeMismatch {
        what: &'static str,
        expected: Vec<usize>,
        actual: Vec<usize>,
    },
    #[error("pool input length {len} is not divisible by stride {stride}")]
    NotDivisible { len: usize, stride: usize },
    #[error("class {class} out of range for {classes} classes")]
    ClassOutOfRange { class: usize, classes: usize },
    #[error("invalid layer hyperparameter: {0}")]
    BadSpec(String),
}

/// Shaped f64 buffer; the currency between layers.
#[derive(Debug, Clone, PartialEq)]
pub struct Tensor {
    shape: Vec<usize>,
    pub data: Vec<f64>,
}

impl Tensor {
    pub fn new(shape: Vec<usize>, data: Vec<f64>) -> Result<Self, NetError> {
        let n: usize = shape.iter().product();
        if n != data.len() {
            return Err(NetError::ShapeMismatch {
                what: "tensor data length",
                expected: shape.clone(),
                actual: vec![data.len()],
            });
        }
        Ok(Tensor { shape, data })
    }

    pub fn zeros(shape: Vec<usize>) -> Self {
        let n = shape.iter().product();
        Tensor { shape, data: vec![0.0; n] }
    }

    pub fn shape(&self) -> &[usize] {
        &self.shape
    }

    pub fn len(&self) -> usize {
        self.data.len()
    }

    pub fn is_empty(&self) -> bool {
        self.data.is_empty()
    }

    /// Reinterprets the buffer under a new shape of equal total size.
    pub fn reshaped(mut self, shape: Vec<usize>) -> Result<Self, NetError> {
        let n: usize = shape.iter().product();
        if n != self.data.len() {
            return Err(NetError::ShapeMismatch {
                what: "reshape",
                expected: shape,
                actual: self.shape,
            });
        }
        self.shape = shape;
        Ok(self)
    }

    pub(crate) fn expect_shape(
        &self,
        what: &'static str,
        shape: &[usize],
    ) -> Result<(), NetError> {
        if self.shape != shape {
            return Err(NetError::ShapeMismatch {
                what,
                expected: shape.to_vec(),
                actual: self.shape.clone(),
            });
        }
        Ok(())
    }
}

/// A parameter array with its gradient buffer; shapes always mirror.
#[derive(Debug, Clone, PartialEq)]
pub struct Param {
    pub value: Vec<f64>,
    pub grad: Vec<f64>,
}

impl Param {
    /// Uniform init on [−a, a] with a = sqrt(1/fan_in); the standard
    /// scale-stable choice for these layer sizes.
    pub fn uniform_init(n: usize, fan_in: usize, rng: &mut crate::rng::Rng) -> Self {
        let a = (1.0 / fan_in as f64).sqrt();
        let value = (0..n).map(|_| rng.uniform(-a, a)).collect();
        Param { value, grad: vec![0.0; n] }
    }

    pub fn zeros(n: usize) -> Self {
        Param { value: vec![0.0; n], grad: vec![0.0; n] }
    }
}

/// Scales every gradient buffer, turning per-sample sums into a batch mean.
pub fn scale_grads(params: &mut [&mut Param], factor: f64) {
    for p in params {
        for g in &mut p.grad {
            *g *= factor;
        }
    }
}

/// Plain gradient-descent update: w ← w − η·∇w, then gradients are zeroed.
///
/// Expects gradients already averaged over the mini-batch.
pub fn sgd_step(params: &mut [&mut Param], learning_rate: f64) {
    for p in params {
        for (w, g) in p.value.iter_mut().zip(&mut p.grad) {
            *w -= learning_rate * *g;
            *g = 0.0;
        }
    }
}
