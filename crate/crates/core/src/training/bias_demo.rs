use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

use crate::analysis::fits_bias_operator;
use crate::error::{Error, Result};
use crate::linalg::norm2;

const DEMO_SEED: u64 = 0xb1a5;

/// Displacement of the output bias under the same gradient sequence for two
/// parameterisations: the bias itself, and the FITS spectrum `c` with
/// `b = M·c`.
#[derive(Clone, Debug, PartialEq)]
pub struct BiasLrDemo {
    pub naive_delta: Vec<f64>,
    pub fits_delta: Vec<f64>,
    /// `‖fits_delta‖ / ‖naive_delta‖` (zero when both are zero)
    pub ratio: f64,
}

/// Plain gradient steps with unit learning rate, fed `grads` (each of
/// length `L + T`, the gradient with respect to the full output bias).
/// Through `c` the same gradient becomes `Mᵀ·g`, so `b` moves by `M·Mᵀ·g`.
pub fn bias_displacements(
    context_len: usize,
    horizon: usize,
    grads: &[Vec<f64>],
) -> Result<BiasLrDemo> {
    let m = fits_bias_operator(context_len, horizon)?;
    let n = context_len + horizon;
    let mut naive = vec![0.0; n];
    let mut c = vec![0.0; m.cols()];
    for g in grads {
        if g.len() != n {
            return Err(Error::DimensionMismatch(format!(
                "bias gradient has length {}, expected {n}",
                g.len()
            )));
        }
        naive.iter_mut().zip(g).for_each(|(b, gi)| *b -= gi);
        let gc = m.t_matmul(&crate::linalg::Matrix::from_vec(n, 1, g.clone())?)?;
        c.iter_mut()
            .zip(gc.as_slice())
            .for_each(|(ci, gi)| *ci -= gi);
    }
    let fits = m.matvec(&c)?;
    let nn = norm2(&naive);
    let ratio = if nn == 0.0 { 0.0 } else { norm2(&fits) / nn };
    Ok(BiasLrDemo {
        naive_delta: naive,
        fits_delta: fits,
        ratio,
    })
}

/// [`bias_displacements`] with `steps` seeded standard-normal gradients.
pub fn effective_bias_lr_demo(
    context_len: usize,
    horizon: usize,
    steps: usize,
) -> Result<BiasLrDemo> {
    let mut rng = ChaCha8Rng::seed_from_u64(DEMO_SEED);
    let n = context_len + horizon;
    let grads: Vec<Vec<f64>> = (0..steps)
        .map(|_| (0..n).map(|_| StandardNormal.sample(&mut rng)).collect())
        .collect();
    bias_displacements(context_len, horizon, &grads)
}
