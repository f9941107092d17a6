//! Batched forward pass and analytic gradients of the mean squared error.

use crate::error::{Error, Result};
use crate::linalg::{mean, population_std, Matrix};
use crate::models::{
    moving_average_adjoint_add, moving_average_into, Architecture, FitsBasis, FitsModel,
    ForecastModel, Normalization, RevinAffine,
};

/// Shape-dependent operators reused across batches.
#[derive(Clone, Debug, Default)]
pub struct Workspace {
    fits: Option<FitsBasis>,
}

impl Workspace {
    pub fn for_model(model: &ForecastModel) -> Result<Self> {
        let fits = match &model.arch {
            Architecture::Fits(f) => Some(FitsBasis::new(f.context_len(), f.horizon())?),
            _ => None,
        };
        Ok(Self { fits })
    }

    fn basis(&self, f: &FitsModel) -> Result<std::borrow::Cow<'_, FitsBasis>> {
        match &self.fits {
            Some(b) if b.context_len == f.context_len() && b.horizon == f.horizon() => {
                Ok(std::borrow::Cow::Borrowed(b))
            }
            _ => Ok(std::borrow::Cow::Owned(FitsBasis::new(
                f.context_len(),
                f.horizon(),
            )?)),
        }
    }
}

/// Per-row statistics of the normalisation wrapper.
struct NormCache {
    /// `μ`, `σ + ε` or the last value, per row
    shift: Vec<f64>,
    scale: Vec<f64>,
}

fn add_row_vector(m: &mut Matrix, v: &[f64]) {
    for i in 0..m.rows() {
        m.row_mut(i).iter_mut().zip(v).for_each(|(a, b)| *a += b);
    }
}

fn column_sums(m: &Matrix) -> Vec<f64> {
    let mut out = vec![0.0; m.cols()];
    for row in m.row_iter() {
        out.iter_mut().zip(row).for_each(|(a, b)| *a += b);
    }
    out
}

fn normalize(norm: &Normalization, x: &Matrix) -> (Matrix, NormCache) {
    let (b, l) = x.shape();
    let mut z = x.clone();
    let mut shift = vec![0.0; b];
    let mut scale = vec![1.0; b];
    match norm {
        Normalization::None => {}
        Normalization::NowNorm => {
            for i in 0..b {
                let last = x[(i, l - 1)];
                shift[i] = last;
                z.row_mut(i).iter_mut().for_each(|v| *v -= last);
            }
        }
        Normalization::InstanceNorm { eps } | Normalization::RevIn { eps, .. } => {
            for i in 0..b {
                let row = x.row(i);
                let (mu, s) = (mean(row), population_std(row) + eps);
                shift[i] = mu;
                scale[i] = s;
                z.row_mut(i).iter_mut().for_each(|v| *v = (*v - mu) / s);
            }
            if let Normalization::RevIn { affine, .. } = norm {
                for i in 0..b {
                    for (k, v) in z.row_mut(i).iter_mut().enumerate() {
                        *v = (*v - affine.beta_in(k)) / affine.alpha_in(k);
                    }
                }
            }
        }
    }
    (z, NormCache { shift, scale })
}

fn denormalize(norm: &Normalization, core: &Matrix, cache: &NormCache) -> Matrix {
    let mut out = core.clone();
    for i in 0..out.rows() {
        let (mu, s) = (cache.shift[i], cache.scale[i]);
        for (t, v) in out.row_mut(i).iter_mut().enumerate() {
            *v = match norm {
                Normalization::RevIn { affine, .. } => {
                    (affine.alpha_out(t) * *v + affine.beta_out(t)) * s + mu
                }
                _ => *v * s + mu,
            };
        }
    }
    out
}

/// Weight and bias of the affine map `z ↦ A·z + b` computed by the core.
///
/// Batches go through this composed `T × L` operator, and parameter
/// gradients are pulled back from `Ā = Gᵀ·Z` (for FITS via
/// `W̄ = M₁ᵀ·Ā·M₂ᵀ`), so a step costs about as much as one linear layer.
fn composed_core(arch: &Architecture, ws: &Workspace) -> Result<(Matrix, Vec<f64>)> {
    match arch {
        Architecture::Linear(layer) => Ok((layer.weight.clone(), layer.bias.clone())),
        Architecture::DLinear(d) => {
            // A = B − (B − C)·D
            let diff = d.seasonal.weight.sub(&d.trend.weight)?;
            let mut a = d.seasonal.weight.clone();
            let mut through = vec![0.0; a.cols()];
            for r in 0..a.rows() {
                through.iter_mut().for_each(|v| *v = 0.0);
                moving_average_adjoint_add(diff.row(r), d.kernel_size, &mut through);
                a.row_mut(r)
                    .iter_mut()
                    .zip(&through)
                    .for_each(|(v, s)| *v -= s);
            }
            let b = d
                .seasonal
                .bias
                .iter()
                .zip(&d.trend.bias)
                .map(|(p, q)| p + q)
                .collect();
            Ok((a, b))
        }
        Architecture::Fits(f) => {
            let basis = ws.basis(f)?;
            let (wr, wi) = (f.weight.re(), f.weight.im());
            let pr = wr.matmul(&basis.rft_re)?.sub(&wi.matmul(&basis.rft_im)?)?;
            let pi = wi.matmul(&basis.rft_re)?.add(&wr.matmul(&basis.rft_im)?)?;
            let a = basis
                .irft_re
                .matmul(&pr)?
                .add(&basis.irft_im.matmul(&pi)?)?
                .scale(basis.scale);
            let cr: Vec<f64> = f.bias.iter().map(|c| c.re).collect();
            let ci: Vec<f64> = f.bias.iter().map(|c| c.im).collect();
            let b = basis
                .irft_re
                .matvec(&cr)?
                .iter()
                .zip(basis.irft_im.matvec(&ci)?)
                .map(|(p, q)| (p + q) * basis.scale)
                .collect();
            Ok((a, b))
        }
    }
}

/// `mᵀ·v`
fn transpose_apply(m: &Matrix, v: &[f64]) -> Vec<f64> {
    let mut out = vec![0.0; m.cols()];
    for (row, &w) in m.row_iter().zip(v) {
        out.iter_mut().zip(row).for_each(|(o, r)| *o += w * r);
    }
    out
}

fn core_forward(arch: &Architecture, z: &Matrix, ws: &Workspace) -> Result<(Matrix, Matrix)> {
    let (a, b) = composed_core(arch, ws)?;
    let mut c = z.matmul_t(&a)?;
    add_row_vector(&mut c, &b);
    Ok((c, a))
}

/// Gradient of the core parameters (flat, in `ForecastModel::params`
/// order) and optionally of the core input. `a` is the composed weight from
/// the forward pass.
fn core_backward(
    arch: &Architecture,
    a: &Matrix,
    z: &Matrix,
    g: &Matrix,
    ws: &Workspace,
    want_input: bool,
    out: &mut Vec<f64>,
) -> Result<Option<Matrix>> {
    let a_bar = g.t_matmul(z)?;
    let b_bar = column_sums(g);
    match arch {
        Architecture::Linear(_) => {
            out.extend_from_slice(a_bar.as_slice());
            out.extend_from_slice(&b_bar);
        }
        Architecture::DLinear(d) => {
            // C̄ = Ā·Dᵀ (each row averaged), B̄ = Ā − C̄
            let mut c_bar = Matrix::zeros(a_bar.rows(), a_bar.cols());
            for r in 0..a_bar.rows() {
                moving_average_into(a_bar.row(r), d.kernel_size, c_bar.row_mut(r));
            }
            out.extend_from_slice(a_bar.sub(&c_bar)?.as_slice());
            out.extend_from_slice(&b_bar);
            out.extend_from_slice(c_bar.as_slice());
            out.extend_from_slice(&b_bar);
        }
        Architecture::Fits(f) => {
            let basis = ws.basis(f)?;
            let s = basis.scale;
            let qr = basis.irft_re.t_matmul(&a_bar)?;
            let qi = basis.irft_im.t_matmul(&a_bar)?;
            let dwr = qr
                .matmul_t(&basis.rft_re)?
                .add(&qi.matmul_t(&basis.rft_im)?)?
                .scale(s);
            let dwi = qi
                .matmul_t(&basis.rft_re)?
                .sub(&qr.matmul_t(&basis.rft_im)?)?
                .scale(s);
            out.extend_from_slice(dwr.as_slice());
            out.extend_from_slice(dwi.as_slice());
            out.extend(
                transpose_apply(&basis.irft_re, &b_bar)
                    .into_iter()
                    .map(|v| v * s),
            );
            out.extend(
                transpose_apply(&basis.irft_im, &b_bar)
                    .into_iter()
                    .map(|v| v * s),
            );
        }
    }
    want_input.then(|| g.matmul(a)).transpose()
}

fn check_batch(model: &ForecastModel, x: &Matrix) -> Result<()> {
    if x.cols() != model.context_len() {
        return Err(Error::DimensionMismatch(format!(
            "batch has {} columns, model expects L = {}",
            x.cols(),
            model.context_len()
        )));
    }
    if x.rows() == 0 {
        return Err(Error::EmptyData("batch"));
    }
    if !x.is_finite() {
        return Err(Error::NonFinite("batch input"));
    }
    Ok(())
}

/// Forecasts for every row of `x` (`B × L` → `B × T`).
pub fn predict_batch(model: &ForecastModel, x: &Matrix, ws: &Workspace) -> Result<Matrix> {
    check_batch(model, x)?;
    let (z, nc) = normalize(&model.norm, x);
    let (c, _) = core_forward(&model.arch, &z, ws)?;
    Ok(denormalize(&model.norm, &c, &nc))
}

/// Batch MSE and its gradient with respect to `model.params()`.
pub fn loss_and_gradient(
    model: &ForecastModel,
    x: &Matrix,
    y: &Matrix,
    ws: &Workspace,
) -> Result<(f64, Vec<f64>)> {
    check_batch(model, x)?;
    if y.shape() != (x.rows(), model.horizon()) {
        return Err(Error::DimensionMismatch(format!(
            "targets are {:?}, expected ({}, {})",
            y.shape(),
            x.rows(),
            model.horizon()
        )));
    }
    let (z, nc) = normalize(&model.norm, x);
    let (c, cache) = core_forward(&model.arch, &z, ws)?;
    let out = denormalize(&model.norm, &c, &nc);
    let count = (y.rows() * y.cols()) as f64;
    let resid = out.sub(y)?;
    let loss = resid.as_slice().iter().map(|r| r * r).sum::<f64>() / count;
    let g = resid.scale(2.0 / count);

    let mut grad = Vec::with_capacity(model.num_params());
    match &model.norm {
        Normalization::None | Normalization::NowNorm => {
            core_backward(&model.arch, &cache, &z, &g, ws, false, &mut grad)?;
        }
        Normalization::InstanceNorm { .. } => {
            let mut gc = g;
            for i in 0..gc.rows() {
                let s = nc.scale[i];
                gc.row_mut(i).iter_mut().for_each(|v| *v *= s);
            }
            core_backward(&model.arch, &cache, &z, &gc, ws, false, &mut grad)?;
        }
        Normalization::RevIn { affine, .. } => {
            let (b, l, t) = (x.rows(), x.cols(), model.horizon());
            // gradient at α_out·c + β_out
            let mut gs = g;
            for i in 0..b {
                let s = nc.scale[i];
                gs.row_mut(i).iter_mut().for_each(|v| *v *= s);
            }
            let mut d_alpha_out = vec![0.0; t];
            let mut d_beta_out = vec![0.0; t];
            let mut gc = gs.clone();
            for i in 0..b {
                for tt in 0..t {
                    d_alpha_out[tt] += gs[(i, tt)] * c[(i, tt)];
                    d_beta_out[tt] += gs[(i, tt)];
                    gc[(i, tt)] *= affine.alpha_out(tt);
                }
            }
            let dz = core_backward(&model.arch, &cache, &z, &gc, ws, true, &mut grad)?
                .expect("input gradient requested");
            // z = (standardized − β_in)/α_in
            let mut d_alpha_in = vec![0.0; l];
            let mut d_beta_in = vec![0.0; l];
            for i in 0..b {
                for k in 0..l {
                    let a = affine.alpha_in(k);
                    d_beta_in[k] -= dz[(i, k)] / a;
                    d_alpha_in[k] -= dz[(i, k)] * z[(i, k)] / a;
                }
            }
            match affine {
                RevinAffine::Scalar { .. } => {
                    let sum = |v: &[f64]| v.iter().sum::<f64>();
                    grad.push(sum(&d_alpha_in) + sum(&d_alpha_out));
                    grad.push(sum(&d_beta_in) + sum(&d_beta_out));
                }
                RevinAffine::PerPosition { .. } => {
                    grad.extend(d_alpha_in);
                    grad.extend(d_beta_in);
                    grad.extend(d_alpha_out);
                    grad.extend(d_beta_out);
                }
            }
        }
    }
    debug_assert_eq!(grad.len(), model.num_params());
    Ok((loss, grad))
}
