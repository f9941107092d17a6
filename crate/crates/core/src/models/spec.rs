use std::fmt;
use std::str::FromStr;

use num_complex::Complex64;
use rand::distr::{Distribution, Uniform};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::linalg::{ComplexMatrix, Matrix};
use crate::models::{
    Architecture, DLinearModel, FitsModel, ForecastModel, LinearLayer, Normalization, RevinAffine,
    DEFAULT_EPS, DEFAULT_KERNEL_SIZE,
};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum ArchKind {
    Linear,
    DLinear { kernel_size: usize },
    Fits,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum NormKind {
    None,
    InstanceNorm,
    RevIn,
    NowNorm,
}

/// Architecture plus normalisation, e.g. `RLinear` or `DLinear+IN`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub struct ModelSpec {
    pub arch: ArchKind,
    pub norm: NormKind,
}

impl ModelSpec {
    pub const fn new(arch: ArchKind, norm: NormKind) -> Self {
        Self { arch, norm }
    }

    pub const LINEAR: Self = Self::new(ArchKind::Linear, NormKind::None);
    pub const NLINEAR: Self = Self::new(ArchKind::Linear, NormKind::NowNorm);
    pub const RLINEAR: Self = Self::new(ArchKind::Linear, NormKind::RevIn);
    pub const LINEAR_IN: Self = Self::new(ArchKind::Linear, NormKind::InstanceNorm);
    pub const DLINEAR: Self = Self::new(
        ArchKind::DLinear {
            kernel_size: DEFAULT_KERNEL_SIZE,
        },
        NormKind::None,
    );
    pub const DLINEAR_IN: Self = Self::new(
        ArchKind::DLinear {
            kernel_size: DEFAULT_KERNEL_SIZE,
        },
        NormKind::InstanceNorm,
    );
    pub const FITS: Self = Self::new(ArchKind::Fits, NormKind::None);
    pub const FITS_IN: Self = Self::new(ArchKind::Fits, NormKind::InstanceNorm);

    pub fn with_kernel(self, kernel_size: usize) -> Self {
        match self.arch {
            ArchKind::DLinear { .. } => Self {
                arch: ArchKind::DLinear { kernel_size },
                ..self
            },
            _ => self,
        }
    }

    pub fn is_normalized(&self) -> bool {
        self.norm != NormKind::None
    }
}

impl fmt::Display for ModelSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let arch = match self.arch {
            ArchKind::Linear => "Linear",
            ArchKind::DLinear { .. } => "DLinear",
            ArchKind::Fits => "FITS",
        };
        match (self.arch, self.norm) {
            (ArchKind::Linear, NormKind::RevIn) => write!(f, "RLinear"),
            (ArchKind::Linear, NormKind::NowNorm) => write!(f, "NLinear"),
            (_, NormKind::None) => write!(f, "{arch}"),
            (_, NormKind::InstanceNorm) => write!(f, "{arch}+IN"),
            (_, NormKind::RevIn) => write!(f, "{arch}+RevIN"),
            (_, NormKind::NowNorm) => write!(f, "{arch}+NN"),
        }
    }
}

impl FromStr for ModelSpec {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let lower = s.trim().to_ascii_lowercase();
        match lower.as_str() {
            "rlinear" => return Ok(Self::RLINEAR),
            "nlinear" => return Ok(Self::NLINEAR),
            _ => {}
        }
        let (arch, norm) = match lower.split_once('+') {
            Some((a, n)) => (a, Some(n)),
            None => (lower.as_str(), None),
        };
        let arch = match arch {
            "linear" => ArchKind::Linear,
            "dlinear" => ArchKind::DLinear {
                kernel_size: DEFAULT_KERNEL_SIZE,
            },
            "fits" => ArchKind::Fits,
            _ => return Err(Error::InvalidConfig(format!("unknown model `{s}`"))),
        };
        let norm = match norm {
            None => NormKind::None,
            Some("in") => NormKind::InstanceNorm,
            Some("revin") => NormKind::RevIn,
            Some("nn") | Some("nownorm") => NormKind::NowNorm,
            Some(other) => {
                return Err(Error::InvalidConfig(format!(
                    "unknown normalisation `{other}` in `{s}`"
                )))
            }
        };
        Ok(Self { arch, norm })
    }
}

/// Seeded initialisation. Real weights and biases are drawn from
/// `U(−1/√L, 1/√L)`; FITS draws real and imaginary parts independently from
/// the same law. RevIN starts at `α = 1`, `β = 0` (scalar form).
pub fn init_model(
    spec: ModelSpec,
    context_len: usize,
    horizon: usize,
    seed: u64,
) -> Result<ForecastModel> {
    if context_len == 0 || horizon == 0 {
        return Err(Error::InvalidConfig("L and T must be positive".into()));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let bound = 1.0 / (context_len as f64).sqrt();
    let law = Uniform::new_inclusive(-bound, bound).expect("finite bound");
    let layer = |rng: &mut ChaCha8Rng| LinearLayer {
        weight: Matrix::from_fn(horizon, context_len, |_, _| law.sample(rng)),
        bias: (0..horizon).map(|_| law.sample(rng)).collect(),
    };
    let arch = match spec.arch {
        ArchKind::Linear => Architecture::Linear(layer(&mut rng)),
        ArchKind::DLinear { kernel_size } => {
            let seasonal = layer(&mut rng);
            let trend = layer(&mut rng);
            Architecture::DLinear(DLinearModel::new(kernel_size, trend, seasonal)?)
        }
        ArchKind::Fits => {
            let (rows, cols) = FitsModel::weight_shape(context_len, horizon);
            let draw = |rng: &mut ChaCha8Rng| {
                let re = law.sample(rng);
                Complex64::new(re, law.sample(rng))
            };
            let weight = ComplexMatrix::from_fn(rows, cols, |_, _| draw(&mut rng));
            let bias = (0..rows).map(|_| draw(&mut rng)).collect();
            Architecture::Fits(FitsModel::new(context_len, horizon, weight, bias)?)
        }
    };
    let norm = match spec.norm {
        NormKind::None => Normalization::None,
        NormKind::InstanceNorm => Normalization::InstanceNorm { eps: DEFAULT_EPS },
        NormKind::RevIn => Normalization::RevIn {
            eps: DEFAULT_EPS,
            affine: RevinAffine::identity(),
        },
        NormKind::NowNorm => Normalization::NowNorm,
    };
    ForecastModel::new(arch, norm)
}
