//! Unnormalised DFT operators and the real-spectrum projection pair.
//!
//! Forward transforms carry no scaling, inverses carry `1/n`. The real
//! transform keeps components `0..=n/2` of the full spectrum; only even
//! lengths are supported for it.

use std::f64::consts::PI;

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::linalg::complex::{ComplexMatrix, ComplexVector};
use crate::linalg::Matrix;

/// Imaginary residue tolerated when mapping a spectrum back to real values.
pub const REAL_RESIDUE_TOL: f64 = 1e-10;

#[inline]
fn twiddle(jk: usize, n: usize) -> Complex64 {
    // reduce modulo n first so large products keep full precision
    let r = (jk % n) as f64;
    Complex64::from_polar(1.0, -2.0 * PI * r / n as f64)
}

/// `n × n` matrix with entry `(j, k) = exp(−2πi·jk/n)`.
pub fn dft_matrix(n: usize) -> ComplexMatrix {
    ComplexMatrix::from_fn(n, n, |j, k| twiddle(j * k, n))
}

/// `(1/n)·D_n*`, the inverse of [`dft_matrix`].
pub fn idft_matrix(n: usize) -> ComplexMatrix {
    let inv = 1.0 / n as f64;
    ComplexMatrix::from_fn(n, n, |j, k| twiddle(j * k, n).conj() * inv)
}

pub fn dft(x: &[Complex64]) -> ComplexVector {
    let n = x.len();
    (0..n)
        .map(|j| {
            x.iter()
                .enumerate()
                .map(|(k, &v)| twiddle(j * k, n) * v)
                .sum()
        })
        .collect()
}

pub fn idft(y: &[Complex64]) -> ComplexVector {
    let n = y.len();
    let inv = 1.0 / n as f64;
    (0..n)
        .map(|j| {
            y.iter()
                .enumerate()
                .map(|(k, &v)| twiddle(j * k, n).conj() * v)
                .sum::<Complex64>()
                * inv
        })
        .collect()
}

fn require_even(n: usize, what: &str) -> Result<()> {
    if n == 0 || !n.is_multiple_of(2) {
        return Err(Error::UnsupportedShape(format!(
            "{what} requires an even, nonzero length (got {n})"
        )));
    }
    Ok(())
}

/// Real DFT: the first `L/2 + 1` components of the DFT of a real vector.
pub fn rft(x: &[f64]) -> Result<ComplexVector> {
    let n = x.len();
    require_even(n, "rft")?;
    Ok((0..=n / 2)
        .map(|j| {
            x.iter()
                .enumerate()
                .map(|(k, &v)| twiddle(j * k, n) * v)
                .sum()
        })
        .collect())
}

/// Keeps components `0..=L/2` of a length-`L` spectrum.
pub fn pi_project(y: &[Complex64]) -> Result<ComplexVector> {
    require_even(y.len(), "pi_project")?;
    Ok(y[..=y.len() / 2].to_vec())
}

/// Conjugate-symmetric extension of a half spectrum to length `n`:
/// `(Re y₀, y₁, …, Re y_{n/2}, y*_{n/2−1}, …, y*₁)`.
pub fn pi_inverse(y: &[Complex64], n: usize) -> Result<ComplexVector> {
    require_even(n, "pi_inverse")?;
    let half = n / 2;
    if y.len() != half + 1 {
        return Err(Error::DimensionMismatch(format!(
            "pi_inverse to length {n} expects {} components, got {}",
            half + 1,
            y.len()
        )));
    }
    let mut out = Vec::with_capacity(n);
    out.push(Complex64::new(y[0].re, 0.0));
    out.extend_from_slice(&y[1..half]);
    out.push(Complex64::new(y[half].re, 0.0));
    out.extend(y[1..half].iter().rev().map(|v| v.conj()));
    Ok(out)
}

/// Inverse real DFT, `idft ∘ pi_inverse`, returned as real values.
pub fn irft(y: &[Complex64], n: usize) -> Result<Vec<f64>> {
    let full = pi_inverse(y, n)?;
    let z = idft(&full);
    let scale = z.iter().fold(1.0f64, |m, v| m.max(v.re.abs()));
    let residue = z.iter().fold(0.0f64, |m, v| m.max(v.im.abs()));
    if residue >= REAL_RESIDUE_TOL * scale {
        return Err(Error::Inconsistent(format!(
            "irft imaginary residue {residue:e} (spectrum is not conjugate symmetric)"
        )));
    }
    Ok(z.into_iter().map(|v| v.re).collect())
}

/// True when `y₀`, `y_{n/2}` are real and `y_k = conj(y_{n−k})` within `tol`.
pub fn is_conjugate_symmetric(y: &[Complex64], tol: f64) -> bool {
    let n = y.len();
    if n == 0 || !n.is_multiple_of(2) {
        return false;
    }
    if y[0].im.abs() > tol || y[n / 2].im.abs() > tol {
        return false;
    }
    (1..n).all(|k| (y[k] - y[n - k].conj()).norm() <= tol)
}

/// Real matrices `(re, im)`, each `(L/2+1) × L`, with `rft(x) = re·x + i·im·x`.
pub fn rft_operator(l: usize) -> Result<(Matrix, Matrix)> {
    require_even(l, "rft_operator")?;
    let h = l / 2 + 1;
    let re = Matrix::from_fn(h, l, |j, k| twiddle(j * k, l).re);
    let im = Matrix::from_fn(h, l, |j, k| twiddle(j * k, l).im);
    Ok((re, im))
}

/// Real matrices `(re, im)`, each `n × (n/2+1)`, with
/// `irft(y, n) = re·Re(y) + im·Im(y)`.
///
/// The imaginary parts of components `0` and `n/2` are discarded by
/// [`pi_inverse`], so the matching columns of `im` are zero.
pub fn irft_operator(n: usize) -> Result<(Matrix, Matrix)> {
    require_even(n, "irft_operator")?;
    let half = n / 2;
    let inv = 1.0 / n as f64;
    let weight = |k: usize| if k == 0 || k == half { inv } else { 2.0 * inv };
    // exp(+2πi·kt/n) = conj(twiddle(kt))
    let re = Matrix::from_fn(n, half + 1, |t, k| weight(k) * twiddle(k * t, n).re);
    let im = Matrix::from_fn(n, half + 1, |t, k| {
        if k == 0 || k == half {
            0.0
        } else {
            weight(k) * twiddle(k * t, n).im
        }
    });
    Ok((re, im))
}
