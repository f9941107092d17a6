use crate::error::{Error, Result};
use crate::models::LinearLayer;

/// Decomposition model: a moving-average trend and the seasonal remainder
/// each pass through their own linear layer and the results are summed.
#[derive(Clone, Debug, PartialEq)]
pub struct DLinearModel {
    pub kernel_size: usize,
    pub trend: LinearLayer,
    pub seasonal: LinearLayer,
}

pub const DEFAULT_KERNEL_SIZE: usize = 25;

pub(crate) fn check_kernel(context_len: usize, kernel_size: usize) -> Result<()> {
    if kernel_size == 0 || kernel_size.is_multiple_of(2) {
        return Err(Error::UnsupportedShape(format!(
            "moving-average kernel size must be odd and positive (got {kernel_size})"
        )));
    }
    if context_len == 0 || kernel_size > 2 * context_len - 1 {
        return Err(Error::UnsupportedShape(format!(
            "kernel size {kernel_size} exceeds 2L-1 for L = {context_len}"
        )));
    }
    Ok(())
}

/// Moving average with the first and last values replicated `(K−1)/2` times
/// on each side, so the output keeps the input length.
pub fn moving_average_trend(x: &[f64], kernel_size: usize) -> Result<Vec<f64>> {
    check_kernel(x.len(), kernel_size)?;
    let mut out = vec![0.0; x.len()];
    moving_average_into(x, kernel_size, &mut out);
    Ok(out)
}

pub(crate) fn moving_average_into(x: &[f64], kernel_size: usize, out: &mut [f64]) {
    let l = x.len() as isize;
    let half = (kernel_size / 2) as isize;
    let inv = 1.0 / kernel_size as f64;
    for (t, o) in out.iter_mut().enumerate() {
        let t = t as isize;
        let mut s = 0.0;
        for off in -half..=half {
            s += x[(t + off).clamp(0, l - 1) as usize];
        }
        *o = s * inv;
    }
}

/// Adjoint of the padded moving average: accumulates `Dᵀ·g` into `out`.
pub(crate) fn moving_average_adjoint_add(g: &[f64], kernel_size: usize, out: &mut [f64]) {
    let l = g.len() as isize;
    let half = (kernel_size / 2) as isize;
    let inv = 1.0 / kernel_size as f64;
    for (t, &gt) in g.iter().enumerate() {
        let t = t as isize;
        let w = gt * inv;
        for off in -half..=half {
            out[(t + off).clamp(0, l - 1) as usize] += w;
        }
    }
}

impl DLinearModel {
    pub fn new(kernel_size: usize, trend: LinearLayer, seasonal: LinearLayer) -> Result<Self> {
        if trend.weight.shape() != seasonal.weight.shape() {
            return Err(Error::DimensionMismatch(format!(
                "trend layer {:?} and seasonal layer {:?} differ",
                trend.weight.shape(),
                seasonal.weight.shape()
            )));
        }
        check_kernel(trend.context_len(), kernel_size)?;
        Ok(Self {
            kernel_size,
            trend,
            seasonal,
        })
    }

    pub fn context_len(&self) -> usize {
        self.trend.context_len()
    }

    pub fn horizon(&self) -> usize {
        self.trend.horizon()
    }

    pub fn forward(&self, x: &[f64]) -> Result<Vec<f64>> {
        let trend = moving_average_trend(x, self.kernel_size)?;
        let seasonal: Vec<f64> = x.iter().zip(&trend).map(|(a, b)| a - b).collect();
        let mut y = self.seasonal.apply(&seasonal)?;
        for (v, t) in y.iter_mut().zip(self.trend.apply(&trend)?) {
            *v += t;
        }
        Ok(y)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn edge_replicated_average() {
        let x = [1.0, 2.0, 4.0, 8.0, 16.0, 32.0];
        let t = moving_average_trend(&x, 3).unwrap();
        assert!((t[0] - (2.0 * 1.0 + 2.0) / 3.0).abs() < 1e-12);
        assert!((t[5] - (16.0 + 2.0 * 32.0) / 3.0).abs() < 1e-12);
        assert!((t[2] - (2.0 + 4.0 + 8.0) / 3.0).abs() < 1e-12);
    }

    #[test]
    fn unit_kernel_and_constants() {
        let x = [3.0, -1.0, 2.0, 7.0];
        assert_eq!(moving_average_trend(&x, 1).unwrap(), x.to_vec());
        let c = [1.5; 5];
        for k in [1, 3, 5, 9] {
            let t = moving_average_trend(&c, k).unwrap();
            assert!(t.iter().all(|v| (v - 1.5).abs() < 1e-15));
        }
    }

    #[test]
    fn kernel_validation() {
        assert!(moving_average_trend(&[1.0; 4], 2).is_err());
        assert!(moving_average_trend(&[1.0; 4], 9).is_err());
        assert!(moving_average_trend(&[1.0; 4], 7).is_ok());
    }

    #[test]
    fn adjoint_matches_inner_products() {
        let x = [0.3, -1.2, 2.2, 0.7, -0.4, 1.9, 0.1];
        let g = [1.0, -0.5, 0.25, 2.0, -1.0, 0.5, 0.75];
        for k in [1, 3, 5, 13] {
            let dx = moving_average_trend(&x, k).unwrap();
            let mut dtg = vec![0.0; 7];
            moving_average_adjoint_add(&g, k, &mut dtg);
            let lhs: f64 = dx.iter().zip(&g).map(|(a, b)| a * b).sum();
            let rhs: f64 = x.iter().zip(&dtg).map(|(a, b)| a * b).sum();
            assert!((lhs - rhs).abs() < 1e-12);
        }
    }
}
