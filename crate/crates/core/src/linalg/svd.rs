//! Singular value decomposition by one-sided (Hestenes) Jacobi rotations,
//! plus the pseudo-inverse and least-squares solvers built on it.

use crate::error::{Error, Result};
use crate::linalg::matrix::{axpy, dot};
use crate::linalg::Matrix;

/// Default relative cutoff below which singular values count as zero.
pub const DEFAULT_REL_CUTOFF: f64 = 1e-12;

const MAX_SWEEPS: usize = 80;

/// Thin SVD `a = u · diag(s) · vᵀ` with `s` sorted in decreasing order.
#[derive(Clone, Debug)]
pub struct Svd {
    /// `m × k` left singular vectors, `k = min(m, n)`.
    pub u: Matrix,
    pub s: Vec<f64>,
    /// `n × k` right singular vectors.
    pub v: Matrix,
}

pub fn svd(a: &Matrix) -> Result<Svd> {
    if !a.is_finite() {
        return Err(Error::NonFinite("svd input"));
    }
    if a.rows() >= a.cols() {
        jacobi_svd(a)
    } else {
        let t = jacobi_svd(&a.transpose())?;
        Ok(Svd {
            u: t.v,
            s: t.s,
            v: t.u,
        })
    }
}

pub fn singular_values(a: &Matrix) -> Result<Vec<f64>> {
    Ok(svd(a)?.s)
}

/// One-sided Jacobi for `m >= n`. Columns are held as rows of a transposed
/// work buffer so every rotation touches contiguous memory.
fn jacobi_svd(a: &Matrix) -> Result<Svd> {
    let (m, n) = a.shape();
    let mut cols = a.transpose(); // n × m, row j = column j of a
    let mut vt = Matrix::identity(n); // row j = column j of v

    let mut converged = n < 2;
    for _ in 0..MAX_SWEEPS {
        if converged {
            break;
        }
        let mut rotated = false;
        for p in 0..n {
            for q in (p + 1)..n {
                let (alpha, beta, gamma) = {
                    let cp = cols.row(p);
                    let cq = cols.row(q);
                    (dot(cp, cp), dot(cq, cq), dot(cp, cq))
                };
                if alpha == 0.0 || beta == 0.0 {
                    continue;
                }
                if gamma.abs() <= 1e-15 * (alpha * beta).sqrt() {
                    continue;
                }
                rotated = true;
                let zeta = (beta - alpha) / (2.0 * gamma);
                let t = zeta.signum() / (zeta.abs() + (1.0 + zeta * zeta).sqrt());
                let c = 1.0 / (1.0 + t * t).sqrt();
                let s = c * t;
                rotate_rows(&mut cols, p, q, c, s);
                rotate_rows(&mut vt, p, q, c, s);
            }
        }
        if !rotated {
            converged = true;
        }
    }
    if !converged {
        return Err(Error::SvdNoConvergence { rows: m, cols: n });
    }

    let mut order: Vec<usize> = (0..n).collect();
    let norms: Vec<f64> = (0..n)
        .map(|j| dot(cols.row(j), cols.row(j)).sqrt())
        .collect();
    order.sort_by(|&i, &j| norms[j].total_cmp(&norms[i]));

    let mut u = Matrix::zeros(m, n);
    let mut v = Matrix::zeros(n, n);
    let mut s = Vec::with_capacity(n);
    for (k, &j) in order.iter().enumerate() {
        let sigma = norms[j];
        s.push(sigma);
        if sigma > 0.0 {
            for (i, &x) in cols.row(j).iter().enumerate() {
                u[(i, k)] = x / sigma;
            }
        }
        for (i, &x) in vt.row(j).iter().enumerate() {
            v[(i, k)] = x;
        }
    }
    Ok(Svd { u, s, v })
}

fn rotate_rows(m: &mut Matrix, p: usize, q: usize, c: f64, s: f64) {
    let cols = m.cols();
    let data = m.as_mut_slice();
    let (head, tail) = data.split_at_mut(q * cols);
    let rp = &mut head[p * cols..(p + 1) * cols];
    let rq = &mut tail[..cols];
    for (x, y) in rp.iter_mut().zip(rq.iter_mut()) {
        let a = *x;
        let b = *y;
        *x = c * a - s * b;
        *y = s * a + c * b;
    }
}

/// Moore–Penrose pseudo-inverse; singular values below `rel_cutoff · σ_max`
/// are treated as zero.
pub fn svd_pinv(a: &Matrix, rel_cutoff: f64) -> Result<Matrix> {
    if !(rel_cutoff > 0.0 && rel_cutoff < 1.0) {
        return Err(Error::InvalidConfig(format!(
            "rel_cutoff must lie in (0, 1), got {rel_cutoff}"
        )));
    }
    let Svd { u, s, v } = svd(a)?;
    let threshold = rel_cutoff * s.first().copied().unwrap_or(0.0);
    // pinv = V · diag(1/s) · Uᵀ
    let mut out = Matrix::zeros(a.cols(), a.rows());
    for (k, &sigma) in s.iter().enumerate() {
        if sigma <= threshold || sigma == 0.0 {
            continue;
        }
        let inv = 1.0 / sigma;
        for i in 0..a.cols() {
            let vik = v[(i, k)] * inv;
            if vik == 0.0 {
                continue;
            }
            let row = out.row_mut(i);
            for (j, r) in row.iter_mut().enumerate() {
                *r += vik * u[(j, k)];
            }
        }
    }
    Ok(out)
}

/// Streaming least-squares solver.
///
/// Rows are folded into an upper-triangular factor `R` and the matching
/// `Qᵀ·Y` block with Householder reflections, so the design matrix never has
/// to be held in memory at once. The final solve runs an SVD of `R` and
/// returns the minimum-norm minimiser of `‖X·W − Y‖_F`.
#[derive(Clone, Debug)]
pub struct LeastSquares {
    r: Matrix,
    qty: Matrix,
    rows_seen: usize,
}

impl LeastSquares {
    pub fn new(features: usize, targets: usize) -> Self {
        Self {
            r: Matrix::zeros(features, features),
            qty: Matrix::zeros(features, targets),
            rows_seen: 0,
        }
    }

    pub fn features(&self) -> usize {
        self.r.cols()
    }

    pub fn targets(&self) -> usize {
        self.qty.cols()
    }

    pub fn rows_seen(&self) -> usize {
        self.rows_seen
    }

    /// Folds a block of rows into the factorisation.
    pub fn add_rows(&mut self, x: &Matrix, y: &Matrix) -> Result<()> {
        let p = self.features();
        let t = self.targets();
        if x.cols() != p || y.cols() != t || x.rows() != y.rows() {
            return Err(Error::DimensionMismatch(format!(
                "least-squares block {:?}/{:?} does not fit {p} features and {t} targets",
                x.shape(),
                y.shape()
            )));
        }
        if !x.is_finite() || !y.is_finite() {
            return Err(Error::NonFinite("least-squares data"));
        }
        let m = x.rows();
        if m == 0 {
            return Ok(());
        }
        let mut xb = x.clone();
        let mut yb = y.clone();
        let mut w = vec![0.0; p.max(t)];
        for k in 0..p {
            // Reflector acting on R[k, k] and column k of the new block;
            // rows k+1..p of R are already zero in column k.
            let head = self.r[(k, k)];
            let tail_sq: f64 = (0..m).map(|i| xb[(i, k)] * xb[(i, k)]).sum();
            if tail_sq == 0.0 {
                continue;
            }
            let norm = (head * head + tail_sq).sqrt();
            let beta = if head >= 0.0 { -norm } else { norm };
            let v0 = head - beta;
            // v = (v0, x[.., k]); H = I - 2 v vᵀ / (vᵀ v)
            let vtv = v0 * v0 + tail_sq;
            let tau = 2.0 / vtv;

            // R part and X block, columns k+1..p
            let wr = &mut w[..p - k - 1];
            wr.copy_from_slice(&self.r.row(k)[k + 1..]);
            wr.iter_mut().for_each(|x| *x *= v0);
            for i in 0..m {
                let vi = xb[(i, k)];
                if vi != 0.0 {
                    axpy(vi, &xb.row(i)[k + 1..], wr);
                }
            }
            {
                let rrow = &mut self.r.row_mut(k)[k + 1..];
                axpy(-tau * v0, wr, rrow);
            }
            for i in 0..m {
                let vi = xb[(i, k)];
                if vi != 0.0 {
                    axpy(-tau * vi, wr, &mut xb.row_mut(i)[k + 1..]);
                }
            }

            // right-hand sides
            let wy = &mut w[..t];
            wy.copy_from_slice(self.qty.row(k));
            wy.iter_mut().for_each(|x| *x *= v0);
            for i in 0..m {
                let vi = xb[(i, k)];
                if vi != 0.0 {
                    axpy(vi, yb.row(i), wy);
                }
            }
            axpy(-tau * v0, wy, self.qty.row_mut(k));
            for i in 0..m {
                let vi = xb[(i, k)];
                if vi != 0.0 {
                    axpy(-tau * vi, wy, yb.row_mut(i));
                }
            }

            self.r[(k, k)] = beta;
            for i in 0..m {
                xb[(i, k)] = 0.0;
            }
        }
        self.rows_seen += m;
        Ok(())
    }

    /// Minimum-norm solution `W` (`features × targets`).
    pub fn solve(&self, rel_cutoff: f64) -> Result<Matrix> {
        if self.rows_seen == 0 {
            return Err(Error::EmptyData("least-squares system has no rows"));
        }
        let pinv = svd_pinv(&self.r, rel_cutoff)?;
        pinv.matmul(&self.qty)
    }

    /// Singular values of the accumulated design matrix.
    pub fn singular_values(&self) -> Result<Vec<f64>> {
        singular_values(&self.r)
    }
}

/// Minimum-norm least-squares solution of `x · w ≈ y`.
pub fn lstsq(x: &Matrix, y: &Matrix, rel_cutoff: f64) -> Result<Matrix> {
    let mut acc = LeastSquares::new(x.cols(), y.cols());
    const BLOCK: usize = 2048;
    let mut start = 0;
    while start < x.rows() {
        let end = (start + BLOCK).min(x.rows());
        acc.add_rows(&x.slice_rows(start, end), &y.slice_rows(start, end))?;
        start = end;
    }
    acc.solve(rel_cutoff)
}
