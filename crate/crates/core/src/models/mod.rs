//! Native forward passes of the linear forecasting architectures and the
//! normalisation wrappers around them.

mod dlinear;
mod fits;
mod linear;
mod norm;
mod spec;

use num_complex::Complex64;

pub(crate) use dlinear::{moving_average_adjoint_add, moving_average_into};
pub use dlinear::{moving_average_trend, DLinearModel, DEFAULT_KERNEL_SIZE};
pub use fits::{FitsBasis, FitsModel};
pub use linear::LinearLayer;
pub use norm::{Normalization, RevinAffine, DEFAULT_EPS};
pub use spec::{init_model, ArchKind, ModelSpec, NormKind};

use crate::error::{Error, Result};

/// Core architecture of a forecast model.
#[derive(Clone, Debug, PartialEq)]
pub enum Architecture {
    Linear(LinearLayer),
    DLinear(DLinearModel),
    Fits(FitsModel),
}

impl Architecture {
    pub fn context_len(&self) -> usize {
        match self {
            Architecture::Linear(l) => l.context_len(),
            Architecture::DLinear(d) => d.context_len(),
            Architecture::Fits(f) => f.context_len(),
        }
    }

    pub fn horizon(&self) -> usize {
        match self {
            Architecture::Linear(l) => l.horizon(),
            Architecture::DLinear(d) => d.horizon(),
            Architecture::Fits(f) => f.horizon(),
        }
    }

    pub fn forward(&self, x: &[f64]) -> Result<Vec<f64>> {
        match self {
            Architecture::Linear(l) => l.apply(x),
            Architecture::DLinear(d) => d.forward(x),
            Architecture::Fits(f) => f.forward(x),
        }
    }

    pub fn short_name(&self) -> &'static str {
        match self {
            Architecture::Linear(_) => "Linear",
            Architecture::DLinear(_) => "DLinear",
            Architecture::Fits(_) => "FITS",
        }
    }
}

/// An architecture together with its normalisation wrapper.
#[derive(Clone, Debug, PartialEq)]
pub struct ForecastModel {
    pub arch: Architecture,
    pub norm: Normalization,
}

impl ForecastModel {
    pub fn new(arch: Architecture, norm: Normalization) -> Result<Self> {
        norm.validate(arch.context_len(), arch.horizon())?;
        Ok(Self { arch, norm })
    }

    pub fn linear(layer: LinearLayer) -> Self {
        Self {
            arch: Architecture::Linear(layer),
            norm: Normalization::None,
        }
    }

    /// Linear layer inside NowNorm.
    pub fn nlinear(layer: LinearLayer) -> Self {
        Self {
            arch: Architecture::Linear(layer),
            norm: Normalization::NowNorm,
        }
    }

    /// Linear layer inside RevIN.
    pub fn rlinear(layer: LinearLayer, eps: f64, affine: RevinAffine) -> Result<Self> {
        Self::new(
            Architecture::Linear(layer),
            Normalization::RevIn { eps, affine },
        )
    }

    pub fn linear_in(layer: LinearLayer, eps: f64) -> Result<Self> {
        Self::new(
            Architecture::Linear(layer),
            Normalization::InstanceNorm { eps },
        )
    }

    pub fn dlinear(model: DLinearModel) -> Self {
        Self {
            arch: Architecture::DLinear(model),
            norm: Normalization::None,
        }
    }

    pub fn fits(model: FitsModel) -> Self {
        Self {
            arch: Architecture::Fits(model),
            norm: Normalization::None,
        }
    }

    pub fn fits_in(model: FitsModel, eps: f64) -> Result<Self> {
        Self::new(
            Architecture::Fits(model),
            Normalization::InstanceNorm { eps },
        )
    }

    pub fn context_len(&self) -> usize {
        self.arch.context_len()
    }

    pub fn horizon(&self) -> usize {
        self.arch.horizon()
    }

    /// Conventional name: `RLinear`, `NLinear`, or `<arch>[+<norm>]`.
    pub fn name(&self) -> String {
        match (&self.arch, &self.norm) {
            (Architecture::Linear(_), Normalization::RevIn { .. }) => "RLinear".into(),
            (Architecture::Linear(_), Normalization::NowNorm) => "NLinear".into(),
            (a, n) => match n.short_name() {
                None => a.short_name().into(),
                Some(s) => format!("{}+{s}", a.short_name()),
            },
        }
    }

    /// True for models of the form `Ãx + b·σ(x)` (instance norm or RevIN).
    pub fn is_sigma_coupled(&self) -> bool {
        matches!(
            self.norm,
            Normalization::InstanceNorm { .. } | Normalization::RevIn { .. }
        )
    }

    pub fn forward(&self, x: &[f64]) -> Result<Vec<f64>> {
        if x.len() != self.context_len() {
            return Err(Error::DimensionMismatch(format!(
                "model expects a context of length {}, got {}",
                self.context_len(),
                x.len()
            )));
        }
        if x.iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFinite("forecast input"));
        }
        self.norm.wrap(x, |xn| self.arch.forward(xn))
    }

    /// All trainable parameters flattened in a fixed order: architecture
    /// parameters (weights row-major, then biases; FITS real parts before
    /// imaginary parts), then RevIN `α`, `β`.
    pub fn params(&self) -> Vec<f64> {
        let mut out = Vec::with_capacity(self.num_params());
        let push_layer = |out: &mut Vec<f64>, l: &LinearLayer| {
            out.extend_from_slice(l.weight.as_slice());
            out.extend_from_slice(&l.bias);
        };
        match &self.arch {
            Architecture::Linear(l) => push_layer(&mut out, l),
            Architecture::DLinear(d) => {
                push_layer(&mut out, &d.seasonal);
                push_layer(&mut out, &d.trend);
            }
            Architecture::Fits(f) => {
                out.extend(f.weight.as_slice().iter().map(|c| c.re));
                out.extend(f.weight.as_slice().iter().map(|c| c.im));
                out.extend(f.bias.iter().map(|c| c.re));
                out.extend(f.bias.iter().map(|c| c.im));
            }
        }
        if let Normalization::RevIn { affine, .. } = &self.norm {
            match affine {
                RevinAffine::Scalar { alpha, beta } => out.extend([*alpha, *beta]),
                RevinAffine::PerPosition {
                    alpha_in,
                    beta_in,
                    alpha_out,
                    beta_out,
                } => {
                    for v in [alpha_in, beta_in, alpha_out, beta_out] {
                        out.extend_from_slice(v);
                    }
                }
            }
        }
        out
    }

    pub fn num_params(&self) -> usize {
        let (l, t) = (self.context_len(), self.horizon());
        let arch = match &self.arch {
            Architecture::Linear(_) => t * l + t,
            Architecture::DLinear(_) => 2 * (t * l + t),
            Architecture::Fits(f) => {
                let (r, c) = f.weight.shape();
                2 * r * c + 2 * r
            }
        };
        let norm = match &self.norm {
            Normalization::RevIn {
                affine: RevinAffine::Scalar { .. },
                ..
            } => 2,
            Normalization::RevIn { .. } => 2 * (l + t),
            _ => 0,
        };
        arch + norm
    }

    /// Inverse of [`ForecastModel::params`].
    pub fn set_params(&mut self, p: &[f64]) -> Result<()> {
        if p.len() != self.num_params() {
            return Err(Error::DimensionMismatch(format!(
                "expected {} parameters, got {}",
                self.num_params(),
                p.len()
            )));
        }
        let mut cursor = Cursor { rest: p };
        let fill_layer = |l: &mut LinearLayer, c: &mut Cursor| {
            c.fill(l.weight.as_mut_slice());
            c.fill(&mut l.bias);
        };
        match &mut self.arch {
            Architecture::Linear(l) => fill_layer(l, &mut cursor),
            Architecture::DLinear(d) => {
                fill_layer(&mut d.seasonal, &mut cursor);
                fill_layer(&mut d.trend, &mut cursor);
            }
            Architecture::Fits(f) => {
                let n = f.weight.as_slice().len();
                let re = cursor.take(n);
                let im = cursor.take(n);
                for ((w, &a), &b) in f.weight.as_mut_slice().iter_mut().zip(re).zip(im) {
                    *w = Complex64::new(a, b);
                }
                let h = f.bias.len();
                let re = cursor.take(h);
                let im = cursor.take(h);
                for ((c, &a), &b) in f.bias.iter_mut().zip(re).zip(im) {
                    *c = Complex64::new(a, b);
                }
            }
        }
        if let Normalization::RevIn { affine, .. } = &mut self.norm {
            match affine {
                RevinAffine::Scalar { alpha, beta } => {
                    let v = cursor.take(2);
                    *alpha = v[0];
                    *beta = v[1];
                }
                RevinAffine::PerPosition {
                    alpha_in,
                    beta_in,
                    alpha_out,
                    beta_out,
                } => {
                    for v in [alpha_in, beta_in, alpha_out, beta_out] {
                        cursor.fill(v);
                    }
                }
            }
        }
        Ok(())
    }
}

struct Cursor<'a> {
    rest: &'a [f64],
}

impl<'a> Cursor<'a> {
    fn take(&mut self, n: usize) -> &'a [f64] {
        let (head, tail) = self.rest.split_at(n);
        self.rest = tail;
        head
    }

    fn fill(&mut self, dst: &mut [f64]) {
        dst.copy_from_slice(self.take(dst.len()));
    }
}
