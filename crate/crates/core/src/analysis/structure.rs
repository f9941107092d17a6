use crate::error::{Error, Result};
use crate::linalg::Matrix;
use crate::models::{DLinearModel, LinearLayer, Normalization, RevinAffine};

use super::AffineModel;

/// The `L × L` matrix of the edge-replicated moving average, built as the
/// product of the averaging band and the padding operator.
pub fn moving_average_matrix(context_len: usize, kernel_size: usize) -> Result<Matrix> {
    crate::models::moving_average_trend(&vec![0.0; context_len], kernel_size)?;
    let l = context_len;
    let half = kernel_size / 2;
    let padded = l + kernel_size - 1;
    let pad = Matrix::from_fn(padded, l, |r, c| {
        let src = r.saturating_sub(half).min(l - 1);
        if src == c {
            1.0
        } else {
            0.0
        }
    });
    let inv = 1.0 / kernel_size as f64;
    let band = Matrix::from_fn(l, padded, |r, c| {
        if c >= r && c < r + kernel_size {
            inv
        } else {
            0.0
        }
    });
    band.matmul(&pad)
}

/// Every entry `1/L`, so `B·x = μ(x)·𝟙`.
pub fn mean_matrix(rows: usize, context_len: usize) -> Matrix {
    Matrix::filled(rows, context_len, 1.0 / context_len as f64)
}

/// Ones in the final column, so `B·x = x_L·𝟙`.
pub fn last_column_matrix(rows: usize, context_len: usize) -> Matrix {
    Matrix::from_fn(rows, context_len, |_, j| {
        if j + 1 == context_len {
            1.0
        } else {
            0.0
        }
    })
}

/// Direct assembly `A = B − B·D + C·D`, `b = c + d` of a DLinear model with
/// seasonal layer `(B, c)` and trend layer `(C, d)`.
pub fn dlinear_form(model: &DLinearModel) -> Result<AffineModel> {
    let d = moving_average_matrix(model.context_len(), model.kernel_size)?;
    let b = &model.seasonal.weight;
    let c = &model.trend.weight;
    let a = b.sub(&b.matmul(&d)?)?.add(&c.matmul(&d)?)?;
    let bias = model
        .seasonal
        .bias
        .iter()
        .zip(&model.trend.bias)
        .map(|(p, q)| p + q)
        .collect();
    AffineModel::new(a, bias, false)
}

/// Closed form of a linear layer `(A, c)` inside a normalisation wrapper,
/// with `ε` taken to zero for the instance-norm variants.
///
/// * NowNorm: `Ã = B_T + A − A·B_L` with last-column matrices, `b = c`.
/// * IN: `Ã = B_T + A − A·B_L` with mean matrices, `b = c`, coupled to `σ`.
/// * RevIN: `A' = diag(α_out)·A·diag(1/α_in)`, `Ã = B_T + A' − A'·B_L`,
///   `b = α_out ⊙ (c − A·(β_in ⊘ α_in)) + β_out`, coupled to `σ`.
pub fn normalized_linear_form(layer: &LinearLayer, norm: &Normalization) -> Result<AffineModel> {
    let (l, t) = (layer.context_len(), layer.horizon());
    let a = &layer.weight;
    let constrained =
        |a: &Matrix, bt: Matrix, bl: Matrix| -> Result<Matrix> { bt.add(a)?.sub(&a.matmul(&bl)?) };
    match norm {
        Normalization::None => AffineModel::new(a.clone(), layer.bias.clone(), false),
        Normalization::NowNorm => AffineModel::new(
            constrained(a, last_column_matrix(t, l), last_column_matrix(l, l))?,
            layer.bias.clone(),
            false,
        ),
        Normalization::InstanceNorm { .. } => AffineModel::new(
            constrained(a, mean_matrix(t, l), mean_matrix(l, l))?,
            layer.bias.clone(),
            true,
        ),
        Normalization::RevIn { affine, .. } => {
            let (ain, bin, aout, bout): (Vec<f64>, Vec<f64>, Vec<f64>, Vec<f64>) = match affine {
                RevinAffine::Scalar { alpha, beta } => (
                    vec![*alpha; l],
                    vec![*beta; l],
                    vec![*alpha; t],
                    vec![*beta; t],
                ),
                RevinAffine::PerPosition {
                    alpha_in,
                    beta_in,
                    alpha_out,
                    beta_out,
                } => (
                    alpha_in.clone(),
                    beta_in.clone(),
                    alpha_out.clone(),
                    beta_out.clone(),
                ),
            };
            if ain.len() != l || aout.len() != t {
                return Err(Error::DimensionMismatch("RevIN parameter lengths".into()));
            }
            let scaled = Matrix::from_fn(t, l, |i, j| aout[i] * a[(i, j)] / ain[j]);
            let shift: Vec<f64> = bin.iter().zip(&ain).map(|(b, a)| b / a).collect();
            let a_shift = a.matvec(&shift)?;
            let bias = (0..t)
                .map(|i| aout[i] * (layer.bias[i] - a_shift[i]) + bout[i])
                .collect();
            AffineModel::new(
                constrained(&scaled, mean_matrix(t, l), mean_matrix(l, l))?,
                bias,
                true,
            )
        }
    }
}
