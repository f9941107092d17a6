//! Closed-form least-squares fits for the three affine model classes:
//! unconstrained `Ax + b`, rows summing to one (`NLinear`), and rows summing
//! to one with a bias coupled to the context standard deviation (`Linear+IN`,
//! `RLinear`, `FITS+IN`).
//!
//! Every solver streams the design through a QR accumulator and finishes
//! with an SVD, so the normal equations are never formed.

use std::fmt;

use crate::error::{Error, Result};
use crate::linalg::{mean, population_std, LeastSquares, Matrix, DEFAULT_REL_CUTOFF};

const BLOCK_ROWS: usize = 2048;

/// Anything that can hand out `(context, target)` training pairs by index.
pub trait DesignSource: Sync {
    fn len(&self) -> usize;

    fn is_empty(&self) -> bool {
        self.len() == 0
    }

    fn context_len(&self) -> usize;

    fn horizon(&self) -> usize;

    /// Copies pair `i` into `x` (length `L`) and `y` (length `T`).
    fn copy_pair(&self, i: usize, x: &mut [f64], y: &mut [f64]);
}

/// In-memory design matrices `X` (`N×L`) and `Y` (`N×T`).
#[derive(Clone, Debug, PartialEq)]
pub struct DesignPair {
    pub x: Matrix,
    pub y: Matrix,
}

impl DesignPair {
    pub fn new(x: Matrix, y: Matrix) -> Result<Self> {
        if x.rows() != y.rows() {
            return Err(Error::DimensionMismatch(format!(
                "X has {} rows but Y has {}",
                x.rows(),
                y.rows()
            )));
        }
        if !x.is_finite() || !y.is_finite() {
            return Err(Error::NonFinite("design matrices"));
        }
        Ok(Self { x, y })
    }

    /// Materialises every pair of a source.
    pub fn collect<S: DesignSource + ?Sized>(src: &S) -> Self {
        let (n, l, t) = (src.len(), src.context_len(), src.horizon());
        let mut x = Matrix::zeros(n, l);
        let mut y = Matrix::zeros(n, t);
        let mut xb = vec![0.0; l];
        let mut yb = vec![0.0; t];
        for i in 0..n {
            src.copy_pair(i, &mut xb, &mut yb);
            x.row_mut(i).copy_from_slice(&xb);
            y.row_mut(i).copy_from_slice(&yb);
        }
        Self { x, y }
    }
}

impl DesignSource for DesignPair {
    fn len(&self) -> usize {
        self.x.rows()
    }

    fn context_len(&self) -> usize {
        self.x.cols()
    }

    fn horizon(&self) -> usize {
        self.y.cols()
    }

    fn copy_pair(&self, i: usize, x: &mut [f64], y: &mut [f64]) {
        x.copy_from_slice(self.x.row(i));
        y.copy_from_slice(self.y.row(i));
    }
}

/// Which constrained class a closed-form solution belongs to.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum SolutionClass {
    /// `x ↦ Ax + b`
    Unconstrained,
    /// `x ↦ Ax + b` with every row of `A` summing to one
    RowSumOne,
    /// `x ↦ Ax + b·σ(x)` with every row of `A` summing to one
    SigmaBias,
}

impl fmt::Display for SolutionClass {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            SolutionClass::Unconstrained => "OLS",
            SolutionClass::RowSumOne => "OLS+NN",
            SolutionClass::SigmaBias => "OLS+IN",
        })
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct ClosedFormSolution {
    /// `T × L`
    pub weight: Matrix,
    pub bias: Vec<f64>,
    pub class: SolutionClass,
}

impl ClosedFormSolution {
    pub fn context_len(&self) -> usize {
        self.weight.cols()
    }

    pub fn horizon(&self) -> usize {
        self.weight.rows()
    }

    pub fn predict(&self, x: &[f64]) -> Result<Vec<f64>> {
        let mut out = self.weight.matvec(x)?;
        let scale = match self.class {
            SolutionClass::SigmaBias => population_std(x),
            _ => 1.0,
        };
        for (o, b) in out.iter_mut().zip(&self.bias) {
            *o += b * scale;
        }
        Ok(out)
    }

    /// Mean squared error over every pair of `src`.
    pub fn mse<S: DesignSource + ?Sized>(&self, src: &S) -> Result<f64> {
        if src.is_empty() {
            return Err(Error::EmptyData("evaluation set"));
        }
        if src.context_len() != self.context_len() || src.horizon() != self.horizon() {
            return Err(Error::DimensionMismatch(format!(
                "solution is {}x{}, data has L = {}, T = {}",
                self.horizon(),
                self.context_len(),
                src.context_len(),
                src.horizon()
            )));
        }
        let mut x = vec![0.0; src.context_len()];
        let mut y = vec![0.0; src.horizon()];
        let mut total = 0.0;
        for i in 0..src.len() {
            src.copy_pair(i, &mut x, &mut y);
            let p = self.predict(&x)?;
            total += p
                .iter()
                .zip(&y)
                .map(|(a, b)| (a - b) * (a - b))
                .sum::<f64>();
        }
        Ok(total / (src.len() * src.horizon()) as f64)
    }
}

/// Streams `src` through `row_map`, which writes one regression row
/// (features, targets) per pair, and returns the min-norm coefficients.
fn fit_streaming<S: DesignSource + ?Sized>(
    src: &S,
    features: usize,
    row_map: impl Fn(&[f64], &[f64], &mut [f64], &mut [f64]),
) -> Result<Matrix> {
    let (n, l, t) = (src.len(), src.context_len(), src.horizon());
    if n == 0 {
        return Err(Error::EmptyData("training design"));
    }
    let mut acc = LeastSquares::new(features, t);
    let mut x = vec![0.0; l];
    let mut y = vec![0.0; t];
    let mut start = 0;
    while start < n {
        let end = (start + BLOCK_ROWS).min(n);
        let mut fx = Matrix::zeros(end - start, features);
        let mut fy = Matrix::zeros(end - start, t);
        for i in start..end {
            src.copy_pair(i, &mut x, &mut y);
            if x.iter().chain(&y).any(|v| !v.is_finite()) {
                return Err(Error::NonFinite("training design"));
            }
            let r = i - start;
            row_map(&x, &y, fx.row_mut(r), fy.row_mut(r));
        }
        acc.add_rows(&fx, &fy)?;
        start = end;
    }
    acc.solve(DEFAULT_REL_CUTOFF)
}

/// Splits a `features × T` coefficient block into `T × L` weight rows and
/// the trailing coefficient row.
fn split_coefficients(coef: &Matrix, l: usize) -> (Matrix, Vec<f64>) {
    let t = coef.cols();
    let weight = Matrix::from_fn(t, l, |i, j| coef[(j, i)]);
    let bias = (0..t).map(|i| coef[(l, i)]).collect();
    (weight, bias)
}

/// Adds `(1 − Σr)/L` to every entry of each row `r`.
fn project_rows_to_unit_sum(w: &mut Matrix) {
    let l = w.cols() as f64;
    for i in 0..w.rows() {
        let row = w.row_mut(i);
        let shift = (1.0 - row.iter().sum::<f64>()) / l;
        row.iter_mut().for_each(|v| *v += shift);
    }
}

/// Unconstrained least squares with a bias, fitted through a constant
/// column appended to `X`.
pub fn solve_ols<S: DesignSource + ?Sized>(src: &S) -> Result<ClosedFormSolution> {
    let l = src.context_len();
    let coef = fit_streaming(src, l + 1, |x, y, fx, fy| {
        fx[..l].copy_from_slice(x);
        fx[l] = 1.0;
        fy.copy_from_slice(y);
    })?;
    let (weight, bias) = split_coefficients(&coef, l);
    Ok(ClosedFormSolution {
        weight,
        bias,
        class: SolutionClass::Unconstrained,
    })
}

/// Unconstrained least squares through the origin (`b = 0`).
pub fn solve_ols_without_bias<S: DesignSource + ?Sized>(src: &S) -> Result<ClosedFormSolution> {
    let l = src.context_len();
    let coef = fit_streaming(src, l, |x, y, fx, fy| {
        fx.copy_from_slice(x);
        fy.copy_from_slice(y);
    })?;
    let t = coef.cols();
    Ok(ClosedFormSolution {
        weight: coef.transpose(),
        bias: vec![0.0; t],
        class: SolutionClass::Unconstrained,
    })
}

/// Least squares over weights whose rows sum to one. Each pair is shifted by
/// the mean of its context, the shifted problem is solved without
/// constraint, and the rows are then moved along `𝟙`, which the shifted
/// design cannot see.
pub fn solve_rowsum1<S: DesignSource + ?Sized>(src: &S) -> Result<ClosedFormSolution> {
    let l = src.context_len();
    let coef = fit_streaming(src, l + 1, |x, y, fx, fy| {
        let mu = mean(x);
        for (f, v) in fx[..l].iter_mut().zip(x) {
            *f = v - mu;
        }
        fx[l] = 1.0;
        for (f, v) in fy.iter_mut().zip(y) {
            *f = v - mu;
        }
    })?;
    let (mut weight, bias) = split_coefficients(&coef, l);
    project_rows_to_unit_sum(&mut weight);
    Ok(ClosedFormSolution {
        weight,
        bias,
        class: SolutionClass::RowSumOne,
    })
}

/// Least squares over `x ↦ Ax + b·σ(x)` with unit row sums. The context
/// standard deviation is appended as an extra (uncentred) column, the mean
/// shift uses the context values only, and no constant column is added.
pub fn solve_sigma_bias<S: DesignSource + ?Sized>(src: &S) -> Result<ClosedFormSolution> {
    let (n, l, t) = (src.len(), src.context_len(), src.horizon());
    if n == 0 {
        return Err(Error::EmptyData("training design"));
    }
    let mut x = vec![0.0; l];
    let mut y = vec![0.0; t];
    if !(0..n).any(|i| {
        src.copy_pair(i, &mut x, &mut y);
        population_std(&x) > 0.0
    }) {
        return Err(Error::DegenerateDesign(
            "every context window is constant, so the σ column is zero".into(),
        ));
    }
    let coef = fit_streaming(src, l + 1, |x, y, fx, fy| {
        let mu = mean(x);
        for (f, v) in fx[..l].iter_mut().zip(x) {
            *f = v - mu;
        }
        fx[l] = population_std(x);
        for (f, v) in fy.iter_mut().zip(y) {
            *f = v - mu;
        }
    })?;
    let (mut weight, bias) = split_coefficients(&coef, l);
    project_rows_to_unit_sum(&mut weight);
    Ok(ClosedFormSolution {
        weight,
        bias,
        class: SolutionClass::SigmaBias,
    })
}

pub fn solve<S: DesignSource + ?Sized>(
    class: SolutionClass,
    src: &S,
) -> Result<ClosedFormSolution> {
    match class {
        SolutionClass::Unconstrained => solve_ols(src),
        SolutionClass::RowSumOne => solve_rowsum1(src),
        SolutionClass::SigmaBias => solve_sigma_bias(src),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn identity_design() {
        // identity rows plus a zero row so the constant column is identifiable
        let mut rows: Vec<Vec<f64>> = (0..4)
            .map(|i| (0..4).map(|j| if i == j { 1.0 } else { 0.0 }).collect())
            .collect();
        rows.push(vec![0.0; 4]);
        let x = Matrix::from_rows(&rows).unwrap();
        let d = DesignPair::new(x.clone(), x).unwrap();
        let s = solve_ols(&d).unwrap();
        assert!(s.weight.max_abs_diff(&Matrix::identity(4)) < 1e-12);
        assert!(s.bias.iter().all(|b| b.abs() < 1e-12));
        let z = solve_ols_without_bias(&d).unwrap();
        assert!(z.weight.max_abs_diff(&Matrix::identity(4)) < 1e-12);
        assert_eq!(z.bias, vec![0.0; 4]);
    }

    #[test]
    fn empty_design_is_an_error() {
        let d = DesignPair::new(Matrix::zeros(0, 3), Matrix::zeros(0, 2)).unwrap();
        assert!(matches!(solve_ols(&d), Err(Error::EmptyData(_))));
        assert!(matches!(solve_rowsum1(&d), Err(Error::EmptyData(_))));
        assert!(matches!(solve_sigma_bias(&d), Err(Error::EmptyData(_))));
    }

    #[test]
    fn constant_contexts_are_degenerate() {
        let x = Matrix::from_fn(5, 3, |i, _| i as f64);
        let d = DesignPair::new(x, Matrix::zeros(5, 2)).unwrap();
        assert!(matches!(
            solve_sigma_bias(&d),
            Err(Error::DegenerateDesign(_))
        ));
    }

    #[test]
    fn predict_on_zero() {
        let s = ClosedFormSolution {
            weight: Matrix::filled(2, 3, 1.0 / 3.0),
            bias: vec![4.0, -1.0],
            class: SolutionClass::Unconstrained,
        };
        assert_eq!(s.predict(&[0.0; 3]).unwrap(), vec![4.0, -1.0]);
        let s = ClosedFormSolution {
            class: SolutionClass::SigmaBias,
            ..s
        };
        assert_eq!(s.predict(&[0.0; 3]).unwrap(), vec![0.0, 0.0]);
        let c = s.predict(&[2.0; 3]).unwrap();
        assert!(c.iter().all(|v| (v - 2.0).abs() < 1e-15));
    }
}
