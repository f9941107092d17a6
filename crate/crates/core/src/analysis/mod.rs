//! Conversion of every model into canonical affine form and the tools used
//! to check the class equivalences numerically.

mod extract;
mod fits;
mod structure;
pub mod suite;

pub use extract::{
    affine_of_model, extract_affine, extract_affine_sigma, extract_affine_with_tolerance,
    sigma_tolerance, DEFAULT_EXTRACT_TOL,
};
pub use fits::{
    affine_of_fits, fits_bias_operator, fits_of_affine, irft_real_operator, tw_matrix, FitsAffine,
};
pub use structure::{
    dlinear_form, last_column_matrix, mean_matrix, moving_average_matrix, normalized_linear_form,
};

use crate::error::{Error, Result};
use crate::linalg::{dot, norm2, population_std, Matrix};
use crate::models::ForecastModel;
use crate::solvers::{ClosedFormSolution, SolutionClass};

/// `x ↦ Ax + b`, or `x ↦ Ax + b·σ(x)` when `sigma_coupled` is set.
#[derive(Clone, Debug, PartialEq)]
pub struct AffineModel {
    /// `T × L`
    pub a: Matrix,
    pub b: Vec<f64>,
    pub sigma_coupled: bool,
}

impl AffineModel {
    pub fn new(a: Matrix, b: Vec<f64>, sigma_coupled: bool) -> Result<Self> {
        if a.rows() != b.len() {
            return Err(Error::DimensionMismatch(format!(
                "A has {} rows but b has length {}",
                a.rows(),
                b.len()
            )));
        }
        if !a.is_finite() || b.iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFinite("affine model"));
        }
        Ok(Self {
            a,
            b,
            sigma_coupled,
        })
    }

    pub fn context_len(&self) -> usize {
        self.a.cols()
    }

    pub fn horizon(&self) -> usize {
        self.a.rows()
    }

    pub fn apply(&self, x: &[f64]) -> Result<Vec<f64>> {
        let mut out = self.a.matvec(x)?;
        let s = if self.sigma_coupled {
            population_std(x)
        } else {
            1.0
        };
        for (o, b) in out.iter_mut().zip(&self.b) {
            *o += b * s;
        }
        Ok(out)
    }

    /// Largest deviation of a row sum of `A` from one.
    pub fn row_sum_max_dev(&self) -> f64 {
        self.a
            .row_sums()
            .iter()
            .map(|s| (s - 1.0).abs())
            .fold(0.0, f64::max)
    }
}

impl From<ClosedFormSolution> for AffineModel {
    fn from(s: ClosedFormSolution) -> Self {
        Self {
            a: s.weight,
            b: s.bias,
            sigma_coupled: s.class == SolutionClass::SigmaBias,
        }
    }
}

/// Cosine of the angle between two matrices viewed as flat vectors.
pub fn cosine_similarity(a: &Matrix, b: &Matrix) -> Result<f64> {
    if a.shape() != b.shape() {
        return Err(Error::DimensionMismatch(format!(
            "cosine similarity of {:?} and {:?}",
            a.shape(),
            b.shape()
        )));
    }
    cosine_of_slices(a.as_slice(), b.as_slice())
}

pub fn cosine_of_slices(a: &[f64], b: &[f64]) -> Result<f64> {
    let (na, nb) = (norm2(a), norm2(b));
    if na == 0.0 || nb == 0.0 {
        return Err(Error::UndefinedSimilarity(
            "cosine similarity of a zero vector",
        ));
    }
    Ok((dot(a, b) / (na * nb)).clamp(-1.0, 1.0))
}

/// Agreement between a model and a reference affine map.
#[derive(Clone, Debug, PartialEq)]
pub struct EquivalenceReport {
    /// Largest forward difference on the probe inputs.
    pub max_forward_discrepancy: f64,
    /// Cosine between the extracted weight of the model and the reference.
    pub weight_cosine: f64,
    /// Largest deviation of a row sum of the extracted weight from one.
    pub row_sum_max_dev: f64,
}

impl EquivalenceReport {
    pub fn evaluate(
        model: &ForecastModel,
        reference: &AffineModel,
        probes: &[Vec<f64>],
    ) -> Result<Self> {
        let extracted = affine_of_model(model)?;
        let mut worst = 0.0f64;
        for x in probes {
            let (p, q) = (model.forward(x)?, reference.apply(x)?);
            worst = p
                .iter()
                .zip(&q)
                .map(|(a, b)| (a - b).abs())
                .fold(worst, f64::max);
        }
        Ok(Self {
            max_forward_discrepancy: worst,
            weight_cosine: cosine_similarity(&extracted.a, &reference.a)?,
            row_sum_max_dev: extracted.row_sum_max_dev(),
        })
    }
}
