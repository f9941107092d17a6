//! Dense real and complex linear algebra: matrix products, SVD,
//! pseudo-inverse, least squares and the DFT/RFT operator family.

pub mod complex;
pub mod fourier;
pub mod matrix;
pub mod svd;

pub use complex::{cmax_abs_diff, to_complex, ComplexMatrix, ComplexVector};
pub use fourier::{
    dft, dft_matrix, idft, idft_matrix, irft, irft_operator, is_conjugate_symmetric, pi_inverse,
    pi_project, rft, rft_operator,
};
pub use matrix::{dot, max_abs_diff, mean, norm2, population_std, Matrix, RealMatrix};
pub use num_complex::Complex64;
pub use svd::{lstsq, singular_values, svd, svd_pinv, LeastSquares, Svd, DEFAULT_REL_CUTOFF};
