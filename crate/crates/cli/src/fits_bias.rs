//! Spectrum of the FITS bias map and the learning-rate scale it implies.

use std::fmt::Write as _;
use std::path::Path;

use anyhow::{bail, Result};
use lintsf::analysis::{fits_bias_operator, irft_real_operator};
use lintsf::linalg::singular_values;
use lintsf::training::{effective_bias_lr_demo, BiasLrDemo};

use crate::dump;

#[derive(Clone, Debug)]
pub struct FitsBiasReport {
    pub context_len: usize,
    pub horizon: usize,
    /// Singular values of the unscaled inverse real DFT at length `L + T`.
    pub unscaled: Vec<f64>,
    /// Singular values of `M`, the bias map including the `(L+T)/L` factor.
    pub scaled: Vec<f64>,
    /// Eigenvalues of `M·Mᵀ`, the factor a plain gradient step on the FITS
    /// bias spectrum applies to the output-bias gradient.
    pub mmt: Vec<f64>,
    pub demo: BiasLrDemo,
}

impl FitsBiasReport {
    /// `‖Δb_fits‖ / ‖Δb_naive‖` of the random-gradient experiment.
    pub fn ratio(&self) -> f64 {
        self.demo.ratio
    }

    pub fn render(&self) -> String {
        let n = (self.context_len + self.horizon) as f64;
        let mut s = String::new();
        let _ = writeln!(
            s,
            "L={} T={} (n = L+T = {n})",
            self.context_len, self.horizon
        );
        let _ = writeln!(
            s,
            "unscaled inverse transform: sigma_max {:.6e}, sigma_min {:.6e}, 1/sqrt(n) {:.6e}",
            self.unscaled[0],
            self.unscaled.iter().copied().fold(f64::INFINITY, f64::min),
            1.0 / n.sqrt()
        );
        let _ = writeln!(
            s,
            "bias map M: sigma_max {:.6e}; M·Mᵀ eigenvalues in [{:.6e}, {:.6e}]",
            self.scaled[0],
            self.mmt.iter().copied().fold(f64::INFINITY, f64::min),
            self.mmt[0]
        );
        let l = self.context_len as f64;
        let _ = writeln!(
            s,
            "effective bias step / plain bias step: {:.6e} (1/L = {:.6e}, ratio·L = {:.3})",
            self.ratio(),
            1.0 / l,
            self.ratio() * l
        );
        s
    }

    pub fn spectrum_csv(&self) -> String {
        let mut s = String::from("index,unscaled_sv,scaled_sv,mmt_eigenvalue\n");
        for i in 0..self.scaled.len() {
            let u = self
                .unscaled
                .get(i)
                .map(|v| v.to_string())
                .unwrap_or_default();
            let _ = writeln!(s, "{i},{u},{},{}", self.scaled[i], self.mmt[i]);
        }
        s
    }
}

pub fn cmd_fits_bias_report(
    context_len: usize,
    horizon: usize,
    steps: usize,
) -> Result<FitsBiasReport> {
    if context_len == 0
        || horizon == 0
        || !context_len.is_multiple_of(2)
        || !horizon.is_multiple_of(2)
    {
        bail!("fits-bias needs even, nonzero L and T (got L = {context_len}, T = {horizon})");
    }
    let n = context_len + horizon;
    let unscaled = singular_values(&irft_real_operator(n)?)?;
    let m = fits_bias_operator(context_len, horizon)?;
    let scaled = singular_values(&m)?;
    let mmt = scaled.iter().map(|s| s * s).collect();
    let demo = effective_bias_lr_demo(context_len, horizon, steps.max(1))?;
    Ok(FitsBiasReport {
        context_len,
        horizon,
        unscaled,
        scaled,
        mmt,
        demo,
    })
}

pub fn write_report(report: &FitsBiasReport, out: &Path) -> Result<()> {
    dump::write_text(&out.join("fits_bias.txt"), &report.render())?;
    dump::write_text(&out.join("fits_bias_spectrum.csv"), &report.spectrum_csv())?;
    Ok(())
}
