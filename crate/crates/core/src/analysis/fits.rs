use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::linalg::{dft_matrix, idft_matrix, irft, rft, svd_pinv, ComplexMatrix, Matrix};
use crate::models::FitsModel;

use super::AffineModel;

const SYNTHESIS_REL_CUTOFF: f64 = 1e-10;

/// Affine image of a FITS model: the full reconstruction-plus-forecast map
/// (`(L+T) × L`) and its last `T` rows.
#[derive(Clone, Debug, PartialEq)]
pub struct FitsAffine {
    pub full: AffineModel,
    pub forecast: AffineModel,
}

fn check_even(context_len: usize, horizon: usize) -> Result<()> {
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

/// `A = (L+T)/L · D⁻¹_{L+T} Π⁻¹_{L+T} W Π_L D_L` and
/// `b = (L+T)/L · iRFT(c)`.
pub fn affine_of_fits(m: &FitsModel) -> Result<FitsAffine> {
    let (l, t) = (m.context_len(), m.horizon());
    let n = l + t;
    let scale = m.output_scale();
    let dl = dft_matrix(l);
    let projected = ComplexMatrix::from_fn(l / 2 + 1, l, |i, j| dl[(i, j)]);
    let mixed = m.weight.matmul(&projected)?;
    let mut a = Matrix::zeros(n, l);
    for j in 0..l {
        let col = irft(&mixed.col(j), n)?;
        for (i, v) in col.into_iter().enumerate() {
            a[(i, j)] = v * scale;
        }
    }
    let b: Vec<f64> = irft(&m.bias, n)?.into_iter().map(|v| v * scale).collect();
    let forecast = AffineModel::new(a.slice_rows(l, n), b[l..].to_vec(), false)?;
    let full = AffineModel::new(a, b, false)?;
    Ok(FitsAffine { full, forecast })
}

/// The `(L+T) × L` complex matrix with `T(W)·Y = Π⁻¹(W·Π(Y))` for every
/// spectrum `Y` of a real vector.
pub fn tw_matrix(w: &ComplexMatrix, context_len: usize, horizon: usize) -> Result<ComplexMatrix> {
    check_even(context_len, horizon)?;
    let (l, n) = (context_len, context_len + horizon);
    let (hl, hn) = (l / 2, n / 2);
    if w.shape() != (hn + 1, hl + 1) {
        return Err(Error::DimensionMismatch(format!(
            "W must be {}x{} for L = {l}, T = {horizon}, got {:?}",
            hn + 1,
            hl + 1,
            w.shape()
        )));
    }
    let zero = Complex64::new(0.0, 0.0);
    Ok(ComplexMatrix::from_fn(n, l, |i, j| {
        let edge_row = i == 0 || i == hn;
        if edge_row {
            if j == 0 || j == hl {
                Complex64::new(w[(i, j)].re, 0.0)
            } else if j < hl {
                w[(i, j)] / 2.0
            } else {
                w[(i, l - j)].conj() / 2.0
            }
        } else if i < hn {
            if j <= hl {
                w[(i, j)]
            } else {
                zero
            }
        } else if j == 0 {
            w[(n - i, 0)].conj()
        } else if l - j <= hl {
            w[(n - i, l - j)].conj()
        } else {
            zero
        }
    }))
}

/// A FITS model whose forecast equals the affine target.
///
/// The bias is the half spectrum of `(0, …, 0, b)` divided by the output
/// scale. Column `j` of `W` is solved independently: for `j ∈ {0, L/2}` the
/// corresponding column of `T(W)` is any conjugate-symmetric vector, so it is
/// chosen as the spectrum of `(0, …, 0, g_j)`; for `0 < j < L/2` it lives on
/// indices `0..=(L+T)/2` and is the minimum-norm solution of the bottom `T`
/// rows of the inverse DFT. The system is underdetermined exactly when
/// `(L+T)/2 + 1 ≥ T`, i.e. `L ≥ T − 2`.
pub fn fits_of_affine(
    target: &AffineModel,
    context_len: usize,
    horizon: usize,
) -> Result<FitsModel> {
    check_even(context_len, horizon)?;
    let (l, t) = (context_len, horizon);
    if target.a.shape() != (t, l) || target.sigma_coupled {
        return Err(Error::DimensionMismatch(format!(
            "target must be an uncoupled {t}x{l} affine map, got {:?} (σ-coupled: {})",
            target.a.shape(),
            target.sigma_coupled
        )));
    }
    if l + 2 < t {
        return Err(Error::Expressivity {
            context_len: l,
            horizon: t,
        });
    }
    let n = l + t;
    let (hl, hn) = (l / 2, n / 2);
    let scale = n as f64 / l as f64;

    // Target of D⁻¹_{L+T}·T(W) on its bottom rows: G·D_L⁻¹.
    let g = ComplexMatrix::from_real(&target.a.scale(1.0 / scale));
    let gc = g.matmul(&idft_matrix(l))?;
    let dn = dft_matrix(n);
    let dn_inv = idft_matrix(n);

    let mut w = ComplexMatrix::zeros(hn + 1, hl + 1);
    for j in [0, hl] {
        let mut v = vec![Complex64::new(0.0, 0.0); n];
        for r in 0..t {
            v[l + r] = Complex64::new(gc[(r, j)].re, 0.0);
        }
        let spectrum = dn.matvec(&v)?;
        for i in 0..=hn {
            w[(i, j)] = spectrum[i];
        }
    }

    if hl > 1 {
        let h = hn + 1;
        let embed = Matrix::from_fn(2 * t, 2 * h, |r, c| {
            let k = dn_inv[(l + r % t, c % h)];
            match (r < t, c < h) {
                (true, true) | (false, false) => k.re,
                (true, false) => -k.im,
                (false, true) => k.im,
            }
        });
        let pinv = svd_pinv(&embed, SYNTHESIS_REL_CUTOFF)?;
        for j in 1..hl {
            let rhs: Vec<f64> = (0..t)
                .map(|r| gc[(r, j)].re)
                .chain((0..t).map(|r| gc[(r, j)].im))
                .collect();
            let sol = pinv.matvec(&rhs)?;
            for i in 0..h {
                let s = Complex64::new(sol[i], sol[h + i]);
                w[(i, j)] = if i == 0 || i == hn { s * 2.0 } else { s };
            }
        }
    }

    let mut extended = vec![0.0; n];
    extended[l..].copy_from_slice(&target.b);
    let bias = rft(&extended)?.into_iter().map(|c| c / scale).collect();
    FitsModel::new(l, t, w, bias)
}

/// Real matrix of the unscaled inverse real DFT on stacked
/// `(Re c₀, …, Re c_{n/2}, Im c₀, …, Im c_{n/2})`, built column by column.
pub fn irft_real_operator(n: usize) -> Result<Matrix> {
    if n == 0 || !n.is_multiple_of(2) {
        return Err(Error::UnsupportedShape(format!(
            "inverse real DFT needs an even, nonzero length (got {n})"
        )));
    }
    let h = n / 2 + 1;
    let mut m = Matrix::zeros(n, 2 * h);
    let mut unit = vec![Complex64::new(0.0, 0.0); h];
    for c in 0..2 * h {
        let k = c % h;
        unit[k] = if c < h {
            Complex64::new(1.0, 0.0)
        } else {
            Complex64::new(0.0, 1.0)
        };
        m.set_col(c, &irft(&unit, n)?);
        unit[k] = Complex64::new(0.0, 0.0);
    }
    Ok(m)
}

/// `M` with `b = M·(Re c, Im c)` for the full `L+T` FITS output, including
/// the `(L+T)/L` scaling.
pub fn fits_bias_operator(context_len: usize, horizon: usize) -> Result<Matrix> {
    check_even(context_len, horizon)?;
    let n = context_len + horizon;
    Ok(irft_real_operator(n)?.scale(n as f64 / context_len as f64))
}
