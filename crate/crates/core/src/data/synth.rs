use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Exp1, StandardNormal};

use crate::error::{Error, Result};
use crate::linalg::Matrix;
use crate::solvers::DesignPair;

use super::RawSeries;

const BURN_IN: usize = 500;

/// Noise drawn for each step of an autoregressive series.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum Innovation {
    /// `N(0, scale²)`
    Gaussian { scale: f64 },
    /// `scale·(E − 1)` with `E ~ Exp(1)`: zero mean, right-skewed.
    CenteredExponential { scale: f64 },
}

impl Innovation {
    fn sample(&self, rng: &mut ChaCha8Rng) -> f64 {
        match *self {
            Innovation::Gaussian { scale } => {
                let z: f64 = StandardNormal.sample(rng);
                scale * z
            }
            Innovation::CenteredExponential { scale } => {
                let e: f64 = Exp1.sample(rng);
                scale * (e - 1.0)
            }
        }
    }
}

/// Noiseless-or-noisy affine data with the generating map.
#[derive(Clone, Debug)]
pub struct SyntheticAffine {
    pub data: DesignPair,
    pub a: Matrix,
    pub b: Vec<f64>,
}

/// `X` standard normal, `Y = X·Aᵀ + 𝟙·bᵀ + noise` with `A`, `b` drawn from
/// `U(−1, 1)` (the columns of `A` scaled by `1/√L`).
pub fn synth_affine(
    context_len: usize,
    horizon: usize,
    n: usize,
    noise_std: f64,
    seed: u64,
) -> Result<SyntheticAffine> {
    if n == 0 || context_len == 0 || horizon == 0 {
        return Err(Error::InvalidConfig("N, L and T must be positive".into()));
    }
    if !(noise_std >= 0.0) {
        return Err(Error::InvalidConfig(
            "noise standard deviation must be non-negative".into(),
        ));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let s = 1.0 / (context_len as f64).sqrt();
    let a = Matrix::from_fn(horizon, context_len, |_, _| rng.random_range(-1.0..1.0) * s);
    let b: Vec<f64> = (0..horizon).map(|_| rng.random_range(-1.0..1.0)).collect();
    let x = Matrix::from_fn(n, context_len, |_, _| StandardNormal.sample(&mut rng));
    let mut y = x.matmul_t(&a)?;
    for i in 0..n {
        for (t, v) in y.row_mut(i).iter_mut().enumerate() {
            let e: f64 = StandardNormal.sample(&mut rng);
            *v += b[t] + noise_std * e;
        }
    }
    Ok(SyntheticAffine {
        data: DesignPair::new(x, y)?,
        a,
        b,
    })
}

/// Largest root modulus of `z^p − φ₁z^{p−1} − … − φ_p`, the spectral radius
/// of the companion matrix (Durand–Kerner iteration).
pub fn spectral_radius(coeffs: &[f64]) -> f64 {
    let p = coeffs.len();
    if p == 0 || coeffs.iter().all(|c| *c == 0.0) {
        return 0.0;
    }
    let poly = |z: Complex64| {
        let mut v = Complex64::new(1.0, 0.0);
        for c in coeffs {
            v = v * z - c;
        }
        v
    };
    let bound = 1.0 + coeffs.iter().fold(0.0f64, |m, c| m.max(c.abs()));
    let seed = Complex64::new(0.4, 0.9);
    let mut roots: Vec<Complex64> = (0..p).map(|k| seed.powu(k as u32) * bound).collect();
    for _ in 0..500 {
        let mut delta = 0.0f64;
        for i in 0..p {
            let mut denom = Complex64::new(1.0, 0.0);
            for j in 0..p {
                if i != j {
                    denom *= roots[i] - roots[j];
                }
            }
            let step = poly(roots[i]) / denom;
            roots[i] -= step;
            delta = delta.max(step.norm());
        }
        if delta < 1e-14 {
            break;
        }
    }
    roots.iter().fold(0.0, |m, r| m.max(r.norm()))
}

/// Gaussian AR(p) series `x_t = Σ φ_k x_{t−k} + ε_t` per channel.
pub fn synth_ar_series(
    length: usize,
    channels: usize,
    coeffs: &[f64],
    seed: u64,
) -> Result<RawSeries> {
    synth_ar_series_with(
        length,
        channels,
        coeffs,
        Innovation::Gaussian { scale: 1.0 },
        seed,
    )
}

/// AR(p) series with a chosen innovation law. The first few hundred steps
/// are discarded so the output starts near stationarity.
pub fn synth_ar_series_with(
    length: usize,
    channels: usize,
    coeffs: &[f64],
    innovation: Innovation,
    seed: u64,
) -> Result<RawSeries> {
    if channels == 0 {
        return Err(Error::InvalidConfig(
            "at least one channel is required".into(),
        ));
    }
    let rho = spectral_radius(coeffs);
    if rho >= 1.0 {
        return Err(Error::Unstable(rho));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let p = coeffs.len();
    let mut values = Matrix::zeros(length, channels);
    for j in 0..channels {
        let mut hist = vec![0.0; p];
        for t in 0..BURN_IN + length {
            let mut v = innovation.sample(&mut rng);
            for (k, c) in coeffs.iter().enumerate() {
                v += c * hist[k];
            }
            if p > 0 {
                hist.rotate_right(1);
                hist[0] = v;
            }
            if t >= BURN_IN {
                values[(t - BURN_IN, j)] = v;
            }
        }
    }
    let mut s = RawSeries::new("synthetic-ar", values)?;
    s.name = format!("ar{p}-seed{seed}");
    Ok(s)
}

/// Adds `slope·t` to every channel at row `t`, giving the series a
/// deterministic drift.
pub fn add_linear_trend(series: &RawSeries, slope: f64) -> Result<RawSeries> {
    if !slope.is_finite() {
        return Err(Error::InvalidConfig(format!(
            "trend slope {slope} must be finite"
        )));
    }
    let v = &series.values;
    let mut out = series.clone();
    out.values = Matrix::from_fn(v.rows(), v.cols(), |i, j| v[(i, j)] + slope * i as f64);
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn radius_of_simple_polynomials() {
        assert!((spectral_radius(&[0.9]) - 0.9).abs() < 1e-12);
        // z² − 0.5z + 0.8: complex pair of modulus √0.8
        assert!((spectral_radius(&[0.5, -0.8]) - 0.8f64.sqrt()).abs() < 1e-10);
        assert_eq!(spectral_radius(&[0.0, 0.0]), 0.0);
    }

    #[test]
    fn unstable_rejected() {
        assert!(matches!(
            synth_ar_series(10, 1, &[1.1], 0),
            Err(Error::Unstable(_))
        ));
        assert!(matches!(
            synth_ar_series(10, 1, &[0.5, 0.6], 0),
            Err(Error::Unstable(_))
        ));
    }

    #[test]
    fn seeded() {
        let a = synth_ar_series(100, 2, &[0.5], 3).unwrap();
        assert_eq!(a, synth_ar_series(100, 2, &[0.5], 3).unwrap());
        assert_ne!(a, synth_ar_series(100, 2, &[0.5], 4).unwrap());
        let d = add_linear_trend(&a, 0.5).unwrap();
        assert_eq!(d.values[(10, 1)], a.values[(10, 1)] + 5.0);
        let s = synth_affine(4, 2, 10, 0.1, 9).unwrap();
        assert_eq!(s.data, synth_affine(4, 2, 10, 0.1, 9).unwrap().data);
    }
}
