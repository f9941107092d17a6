use crate::error::{Error, Result};
use crate::linalg::Matrix;

/// Fully connected layer `x ↦ W·x + b` with `W ∈ ℝ^{T×L}`.
#[derive(Clone, Debug, PartialEq)]
pub struct LinearLayer {
    pub weight: Matrix,
    pub bias: Vec<f64>,
}

impl LinearLayer {
    pub fn new(weight: Matrix, bias: Vec<f64>) -> Result<Self> {
        if bias.len() != weight.rows() {
            return Err(Error::DimensionMismatch(format!(
                "bias of length {} for a {}x{} weight",
                bias.len(),
                weight.rows(),
                weight.cols()
            )));
        }
        Ok(Self { weight, bias })
    }

    pub fn zeros(context_len: usize, horizon: usize) -> Self {
        Self {
            weight: Matrix::zeros(horizon, context_len),
            bias: vec![0.0; horizon],
        }
    }

    pub fn context_len(&self) -> usize {
        self.weight.cols()
    }

    pub fn horizon(&self) -> usize {
        self.weight.rows()
    }

    pub fn apply(&self, x: &[f64]) -> Result<Vec<f64>> {
        let mut y = self.weight.matvec(x)?;
        for (v, b) in y.iter_mut().zip(&self.bias) {
            *v += b;
        }
        Ok(y)
    }
}
