use crate::error::{Error, Result};
use crate::linalg::matrix::{mean, population_std};

/// Stability constant used by instance normalisation and RevIN.
pub const DEFAULT_EPS: f64 = 1e-5;

/// Learnable affine pair of reversible instance normalisation.
#[derive(Clone, Debug, PartialEq)]
pub enum RevinAffine {
    /// One `α`, `β` shared by every input and output position.
    Scalar { alpha: f64, beta: f64 },
    /// Separate per-position parameters on the context (length `L`) and on
    /// the forecast (length `T`).
    PerPosition {
        alpha_in: Vec<f64>,
        beta_in: Vec<f64>,
        alpha_out: Vec<f64>,
        beta_out: Vec<f64>,
    },
}

impl RevinAffine {
    pub fn identity() -> Self {
        RevinAffine::Scalar {
            alpha: 1.0,
            beta: 0.0,
        }
    }

    pub fn per_position_identity(context_len: usize, horizon: usize) -> Self {
        RevinAffine::PerPosition {
            alpha_in: vec![1.0; context_len],
            beta_in: vec![0.0; context_len],
            alpha_out: vec![1.0; horizon],
            beta_out: vec![0.0; horizon],
        }
    }

    pub(crate) fn alpha_in(&self, k: usize) -> f64 {
        match self {
            RevinAffine::Scalar { alpha, .. } => *alpha,
            RevinAffine::PerPosition { alpha_in, .. } => alpha_in[k],
        }
    }

    pub(crate) fn beta_in(&self, k: usize) -> f64 {
        match self {
            RevinAffine::Scalar { beta, .. } => *beta,
            RevinAffine::PerPosition { beta_in, .. } => beta_in[k],
        }
    }

    pub(crate) fn alpha_out(&self, t: usize) -> f64 {
        match self {
            RevinAffine::Scalar { alpha, .. } => *alpha,
            RevinAffine::PerPosition { alpha_out, .. } => alpha_out[t],
        }
    }

    pub(crate) fn beta_out(&self, t: usize) -> f64 {
        match self {
            RevinAffine::Scalar { beta, .. } => *beta,
            RevinAffine::PerPosition { beta_out, .. } => beta_out[t],
        }
    }

    fn validate(&self, context_len: usize, horizon: usize) -> Result<()> {
        let alphas: Vec<f64> = match self {
            RevinAffine::Scalar { alpha, .. } => vec![*alpha],
            RevinAffine::PerPosition {
                alpha_in,
                beta_in,
                alpha_out,
                beta_out,
            } => {
                if alpha_in.len() != context_len
                    || beta_in.len() != context_len
                    || alpha_out.len() != horizon
                    || beta_out.len() != horizon
                {
                    return Err(Error::DimensionMismatch(format!(
                        "per-position RevIN parameters must have lengths L = {context_len} \
                         and T = {horizon}"
                    )));
                }
                alpha_in.iter().chain(alpha_out).copied().collect()
            }
        };
        if alphas.iter().any(|a| *a == 0.0 || !a.is_finite()) {
            return Err(Error::InvalidConfig(
                "RevIN alpha entries must be nonzero".into(),
            ));
        }
        Ok(())
    }
}

/// Invertible per-window normalisation wrapped around a forecasting core.
#[derive(Clone, Debug, PartialEq)]
pub enum Normalization {
    None,
    /// `x' = (x − μ)/(σ + ε)`, output `ŷ·(σ + ε) + μ`.
    InstanceNorm {
        eps: f64,
    },
    /// Instance norm with the learnable pair applied as `(x' − β)/α` on the
    /// way in and `α·ŷ + β` on the way out.
    RevIn {
        eps: f64,
        affine: RevinAffine,
    },
    /// Subtract the last context value, add it back to the output.
    NowNorm,
}

impl Normalization {
    pub fn validate(&self, context_len: usize, horizon: usize) -> Result<()> {
        match self {
            Normalization::InstanceNorm { eps } | Normalization::RevIn { eps, .. }
                if !(*eps > 0.0) =>
            {
                Err(Error::InvalidConfig(format!(
                    "epsilon must be positive, got {eps}"
                )))
            }
            Normalization::RevIn { affine, .. } => affine.validate(context_len, horizon),
            _ => Ok(()),
        }
    }

    /// Runs `core` inside the normalisation sandwich.
    pub fn wrap(
        &self,
        x: &[f64],
        core: impl FnOnce(&[f64]) -> Result<Vec<f64>>,
    ) -> Result<Vec<f64>> {
        match self {
            Normalization::None => core(x),
            Normalization::InstanceNorm { eps } => {
                let mu = mean(x);
                let s = population_std(x) + eps;
                let xn: Vec<f64> = x.iter().map(|v| (v - mu) / s).collect();
                Ok(core(&xn)?.into_iter().map(|y| y * s + mu).collect())
            }
            Normalization::RevIn { eps, affine } => {
                let mu = mean(x);
                let s = population_std(x) + eps;
                let xn: Vec<f64> = x
                    .iter()
                    .enumerate()
                    .map(|(k, v)| ((v - mu) / s - affine.beta_in(k)) / affine.alpha_in(k))
                    .collect();
                Ok(core(&xn)?
                    .into_iter()
                    .enumerate()
                    .map(|(t, y)| (affine.alpha_out(t) * y + affine.beta_out(t)) * s + mu)
                    .collect())
            }
            Normalization::NowNorm => {
                let last = *x.last().ok_or(Error::EmptyData("context window"))?;
                let xn: Vec<f64> = x.iter().map(|v| v - last).collect();
                Ok(core(&xn)?.into_iter().map(|y| y + last).collect())
            }
        }
    }

    pub fn short_name(&self) -> Option<&'static str> {
        match self {
            Normalization::None => None,
            Normalization::InstanceNorm { .. } => Some("IN"),
            Normalization::RevIn { .. } => Some("RevIN"),
            Normalization::NowNorm => Some("NN"),
        }
    }
}
