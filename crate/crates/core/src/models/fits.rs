use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::linalg::{irft, irft_operator, rft, rft_operator, ComplexMatrix, ComplexVector, Matrix};

/// Frequency-domain interpolation model without a low-pass filter.
///
/// The context is mapped to its half spectrum, multiplied by a complex
/// weight, shifted by a complex bias, returned to the time domain with the
/// inverse real transform at length `L + T` and scaled by `(L + T)/L`. The
/// last `T` outputs are the forecast; the first `L` reconstruct the context.
///
/// The imaginary parts of bias components `0` and `(L+T)/2` are discarded by
/// the inverse transform and therefore have no effect on the output.
#[derive(Clone, Debug, PartialEq)]
pub struct FitsModel {
    context_len: usize,
    horizon: usize,
    /// `((L+T)/2 + 1) × (L/2 + 1)`
    pub weight: ComplexMatrix,
    /// length `(L+T)/2 + 1`
    pub bias: ComplexVector,
}

pub(crate) fn check_even(context_len: usize, horizon: usize) -> Result<()> {
    if context_len == 0
        || horizon == 0
        || !context_len.is_multiple_of(2)
        || !horizon.is_multiple_of(2)
    {
        return Err(Error::UnsupportedShape(format!(
            "FITS requires even, nonzero L and T (got L = {context_len}, T = {horizon})"
        )));
    }
    Ok(())
}

impl FitsModel {
    pub fn new(
        context_len: usize,
        horizon: usize,
        weight: ComplexMatrix,
        bias: ComplexVector,
    ) -> Result<Self> {
        check_even(context_len, horizon)?;
        let (rows, cols) = Self::weight_shape(context_len, horizon);
        if weight.shape() != (rows, cols) || bias.len() != rows {
            return Err(Error::DimensionMismatch(format!(
                "FITS(L = {context_len}, T = {horizon}) needs a {rows}x{cols} weight and a \
                 length-{rows} bias, got {:?} and {}",
                weight.shape(),
                bias.len()
            )));
        }
        Ok(Self {
            context_len,
            horizon,
            weight,
            bias,
        })
    }

    pub fn zeros(context_len: usize, horizon: usize) -> Result<Self> {
        check_even(context_len, horizon)?;
        let (rows, cols) = Self::weight_shape(context_len, horizon);
        Self::new(
            context_len,
            horizon,
            ComplexMatrix::zeros(rows, cols),
            vec![Complex64::new(0.0, 0.0); rows],
        )
    }

    /// `((L+T)/2 + 1, L/2 + 1)`
    pub fn weight_shape(context_len: usize, horizon: usize) -> (usize, usize) {
        ((context_len + horizon) / 2 + 1, context_len / 2 + 1)
    }

    pub fn context_len(&self) -> usize {
        self.context_len
    }

    pub fn horizon(&self) -> usize {
        self.horizon
    }

    /// The `(L+T)/L` output scaling.
    pub fn output_scale(&self) -> f64 {
        (self.context_len + self.horizon) as f64 / self.context_len as f64
    }

    /// Reconstruction and forecast, length `L + T`.
    pub fn forward_full(&self, x: &[f64]) -> Result<Vec<f64>> {
        if x.len() != self.context_len {
            return Err(Error::DimensionMismatch(format!(
                "FITS expects a context of length {}, got {}",
                self.context_len,
                x.len()
            )));
        }
        let spectrum = rft(x)?;
        let mut mixed = self.weight.matvec(&spectrum)?;
        for (m, c) in mixed.iter_mut().zip(&self.bias) {
            *m += c;
        }
        let scale = self.output_scale();
        let out = irft(&mixed, self.context_len + self.horizon)?;
        Ok(out.into_iter().map(|v| v * scale).collect())
    }

    pub fn forward(&self, x: &[f64]) -> Result<Vec<f64>> {
        let mut full = self.forward_full(x)?;
        Ok(full.split_off(self.context_len))
    }
}

/// Real-valued operators for evaluating FITS on batches.
#[derive(Clone, Debug)]
pub struct FitsBasis {
    pub context_len: usize,
    pub horizon: usize,
    /// `(L/2+1) × L`
    pub rft_re: Matrix,
    pub rft_im: Matrix,
    /// forecast rows of the inverse transform, `T × ((L+T)/2+1)`
    pub irft_re: Matrix,
    pub irft_im: Matrix,
    pub scale: f64,
}

impl FitsBasis {
    pub fn new(context_len: usize, horizon: usize) -> Result<Self> {
        check_even(context_len, horizon)?;
        let (rft_re, rft_im) = rft_operator(context_len)?;
        let n = context_len + horizon;
        let (ire, iim) = irft_operator(n)?;
        Ok(Self {
            context_len,
            horizon,
            rft_re,
            rft_im,
            irft_re: ire.slice_rows(context_len, n),
            irft_im: iim.slice_rows(context_len, n),
            scale: n as f64 / context_len as f64,
        })
    }
}
