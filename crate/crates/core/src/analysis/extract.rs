use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::linalg::{norm2, population_std, Matrix};
use crate::models::{Architecture, ForecastModel, Normalization};

use super::{affine_of_fits, AffineModel};

/// Verification tolerance of probing extraction, relative to the scale of
/// the probe input and output.
pub const DEFAULT_EXTRACT_TOL: f64 = 1e-8;

const VERIFY_PROBES: usize = 3;
const VERIFY_SEED: u64 = 0x5eed;

/// Tolerance appropriate for `σ`-coupled models with stability constant
/// `eps`: the constant shifts the output by `O(ε)`.
pub fn sigma_tolerance(eps: f64) -> f64 {
    DEFAULT_EXTRACT_TOL.max(10.0 * eps)
}

fn verify(
    context_len: usize,
    f: &dyn Fn(&[f64]) -> Result<Vec<f64>>,
    affine: &AffineModel,
    tol: f64,
) -> Result<()> {
    let mut rng = ChaCha8Rng::seed_from_u64(VERIFY_SEED);
    for _ in 0..VERIFY_PROBES {
        let x: Vec<f64> = (0..context_len)
            .map(|_| rng.random_range(-1.0..1.0))
            .collect();
        let got = f(&x)?;
        let want = affine.apply(&x)?;
        let scale = got
            .iter()
            .chain(&affine.b)
            .fold(0.0f64, |m, v| m.max(v.abs()));
        let allowed = tol * (1.0 + norm2(&x)) * (1.0 + scale);
        let discrepancy = got
            .iter()
            .zip(&want)
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max);
        if !(discrepancy <= allowed) {
            return Err(Error::NotAffine {
                discrepancy,
                tolerance: allowed,
            });
        }
    }
    Ok(())
}

fn probe(
    f: &dyn Fn(&[f64]) -> Result<Vec<f64>>,
    x: &[f64],
    horizon: Option<usize>,
) -> Result<Vec<f64>> {
    let y = f(x)?;
    if let Some(t) = horizon {
        if y.len() != t {
            return Err(Error::DimensionMismatch(format!(
                "forecast function returned {} values, expected {t}",
                y.len()
            )));
        }
    }
    if y.iter().any(|v| !v.is_finite()) {
        return Err(Error::NonFinite("forecast function output"));
    }
    Ok(y)
}

/// Reads off `b = f(0)` and `A·e_i = f(e_i) − b`, then checks the result on
/// random inputs.
pub fn extract_affine(
    context_len: usize,
    f: impl Fn(&[f64]) -> Result<Vec<f64>>,
) -> Result<AffineModel> {
    extract_affine_with_tolerance(context_len, f, DEFAULT_EXTRACT_TOL)
}

pub fn extract_affine_with_tolerance(
    context_len: usize,
    f: impl Fn(&[f64]) -> Result<Vec<f64>>,
    tol: f64,
) -> Result<AffineModel> {
    if context_len == 0 {
        return Err(Error::InvalidConfig(
            "context length must be positive".into(),
        ));
    }
    let mut x = vec![0.0; context_len];
    let b = probe(&f, &x, None)?;
    let t = b.len();
    let mut a = Matrix::zeros(t, context_len);
    for i in 0..context_len {
        x[i] = 1.0;
        let y = probe(&f, &x, Some(t))?;
        x[i] = 0.0;
        for (r, (yv, bv)) in y.iter().zip(&b).enumerate() {
            a[(r, i)] = yv - bv;
        }
    }
    let affine = AffineModel::new(a, b, false)?;
    verify(context_len, &f, &affine, tol)?;
    Ok(affine)
}

/// Extraction for maps of the form `Ãx + b·σ(x)`.
///
/// The constant probe `𝟙` has `σ = 0` and returns `Ã·𝟙`; the scaled unit
/// probes `ẽ_i = (L/√(L−1))·e_i` all have `σ = 1`, which gives
/// `(√(L−1)/L)·Σ f(ẽ_i) − f(𝟙) = √(L−1)·b` and then each column
/// `Ã·e_i = (f(ẽ_i) − b)·√(L−1)/L`.
pub fn extract_affine_sigma(
    context_len: usize,
    f: impl Fn(&[f64]) -> Result<Vec<f64>>,
    tol: f64,
) -> Result<AffineModel> {
    if context_len < 2 {
        return Err(Error::InvalidConfig(
            "σ-coupled extraction needs a context of length at least 2".into(),
        ));
    }
    let l = context_len as f64;
    let root = (l - 1.0).sqrt();
    let spike = l / root;
    let ones = probe(&f, &vec![1.0; context_len], None)?;
    let t = ones.len();
    let mut x = vec![0.0; context_len];
    let mut responses = Vec::with_capacity(context_len);
    for i in 0..context_len {
        x[i] = spike;
        debug_assert!((population_std(&x) - 1.0).abs() < 1e-9);
        responses.push(probe(&f, &x, Some(t))?);
        x[i] = 0.0;
    }
    let b: Vec<f64> = (0..t)
        .map(|r| {
            let total: f64 = responses.iter().map(|y| y[r]).sum();
            (total / spike - ones[r]) / root
        })
        .collect();
    let a = Matrix::from_fn(t, context_len, |r, i| (responses[i][r] - b[r]) / spike);
    let affine = AffineModel::new(a, b, true)?;
    verify(context_len, &f, &affine, tol)?;
    Ok(affine)
}

/// Affine form of any forecast model. Unnormalised FITS uses the analytic
/// conversion; `σ`-coupled models use the `σ` probes; everything else uses
/// plain probing.
pub fn affine_of_model(model: &ForecastModel) -> Result<AffineModel> {
    let l = model.context_len();
    let f = |x: &[f64]| model.forward(x);
    match (&model.arch, &model.norm) {
        (Architecture::Fits(m), Normalization::None) => Ok(affine_of_fits(m)?.forecast),
        (_, Normalization::InstanceNorm { eps }) | (_, Normalization::RevIn { eps, .. }) => {
            extract_affine_sigma(l, f, sigma_tolerance(*eps))
        }
        _ => extract_affine(l, f),
    }
}
