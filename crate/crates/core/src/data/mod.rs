//! Series ingestion, chronological splits, z-score normalisation, sliding
//! windows and synthetic generators.

mod csv_io;
mod synth;
mod window;

pub use csv_io::{load_csv, CsvSchema, DateColumn};
pub use synth::{
    add_linear_trend, spectral_radius, synth_affine, synth_ar_series, synth_ar_series_with,
    Innovation, SyntheticAffine,
};
pub use window::{make_windows, DatasetSplits, WindowedDataset};

use std::ops::Range;

use crate::error::{Error, Result};
use crate::linalg::{mean, population_std, Matrix};

/// A multichannel series: `values` is `N × c`, one column per channel.
#[derive(Clone, Debug, PartialEq)]
pub struct RawSeries {
    pub name: String,
    pub channel_names: Vec<String>,
    pub values: Matrix,
    pub timestamps: Option<Vec<String>>,
}

impl RawSeries {
    pub fn new(name: impl Into<String>, values: Matrix) -> Result<Self> {
        if values.cols() == 0 {
            return Err(Error::EmptyData("series without channels"));
        }
        if !values.is_finite() {
            return Err(Error::NonFinite("series values"));
        }
        let channel_names = (0..values.cols()).map(|j| format!("ch{j}")).collect();
        Ok(Self {
            name: name.into(),
            channel_names,
            values,
            timestamps: None,
        })
    }

    pub fn len(&self) -> usize {
        self.values.rows()
    }

    pub fn is_empty(&self) -> bool {
        self.values.rows() == 0
    }

    pub fn channels(&self) -> usize {
        self.values.cols()
    }

    pub fn channel(&self, j: usize) -> Vec<f64> {
        self.values.col(j)
    }
}

/// Chronological, contiguous train/validation/test row counts.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct SplitSpec {
    pub train: usize,
    pub val: usize,
    pub test: usize,
}

/// Published split sizes of the standard benchmark datasets.
const KNOWN_SPLITS: [(&str, SplitSpec); 8] = [
    ("ETTh1", SplitSpec::new(8545, 2881, 2881)),
    ("ETTh2", SplitSpec::new(8545, 2881, 2881)),
    ("ETTm1", SplitSpec::new(34465, 11521, 11521)),
    ("ETTm2", SplitSpec::new(34465, 11521, 11521)),
    ("ECL", SplitSpec::new(18317, 2633, 5261)),
    ("Weather", SplitSpec::new(36792, 5271, 10540)),
    ("Traffic", SplitSpec::new(12185, 1757, 3509)),
    ("Exchange", SplitSpec::new(5120, 665, 1422)),
];

impl SplitSpec {
    pub const fn new(train: usize, val: usize, test: usize) -> Self {
        Self { train, val, test }
    }

    /// Split sizes of a named benchmark dataset (case-insensitive).
    pub fn for_dataset(name: &str) -> Option<Self> {
        KNOWN_SPLITS
            .iter()
            .find(|(n, _)| n.eq_ignore_ascii_case(name))
            .map(|(_, s)| *s)
    }

    pub fn known_datasets() -> impl Iterator<Item = &'static str> {
        KNOWN_SPLITS.iter().map(|(n, _)| *n)
    }

    /// 70/10/20 chronological split; the test split takes the remainder.
    pub fn chronological_default(total: usize) -> Self {
        let train = total * 7 / 10;
        let val = total / 10;
        Self::new(train, val, total - train - val)
    }

    pub fn total(&self) -> usize {
        self.train + self.val + self.test
    }

    pub fn validate(&self, series_len: usize) -> Result<()> {
        if self.train == 0 {
            return Err(Error::EmptyData("training split"));
        }
        if self.total() > series_len {
            return Err(Error::InvalidConfig(format!(
                "splits need {} rows but the series has {series_len}",
                self.total()
            )));
        }
        Ok(())
    }

    pub fn train_range(&self) -> Range<usize> {
        0..self.train
    }

    pub fn val_range(&self) -> Range<usize> {
        self.train..self.train + self.val
    }

    pub fn test_range(&self) -> Range<usize> {
        self.train + self.val..self.total()
    }
}

/// Per-channel mean and population standard deviation.
#[derive(Clone, Debug, PartialEq)]
pub struct ZScoreStats {
    pub mean: Vec<f64>,
    pub std: Vec<f64>,
}

impl ZScoreStats {
    pub fn apply(&self, values: &Matrix) -> Matrix {
        Matrix::from_fn(values.rows(), values.cols(), |i, j| {
            (values[(i, j)] - self.mean[j]) / self.std[j]
        })
    }

    pub fn invert(&self, values: &Matrix) -> Matrix {
        Matrix::from_fn(values.rows(), values.cols(), |i, j| {
            values[(i, j)] * self.std[j] + self.mean[j]
        })
    }
}

/// Fits per-channel statistics on the training rows only and applies them
/// to the whole series.
pub fn zscore_fit_apply(s: &RawSeries, split: &SplitSpec) -> Result<(RawSeries, ZScoreStats)> {
    split.validate(s.len())?;
    let train = s.values.slice_rows(0, split.train);
    let mut stats = ZScoreStats {
        mean: Vec::with_capacity(s.channels()),
        std: Vec::with_capacity(s.channels()),
    };
    for j in 0..s.channels() {
        let col = train.col(j);
        let sd = population_std(&col);
        if !(sd > 0.0) {
            return Err(Error::ZeroVariance { channel: j });
        }
        stats.mean.push(mean(&col));
        stats.std.push(sd);
    }
    let normalized = RawSeries {
        values: stats.apply(&s.values),
        ..s.clone()
    };
    Ok((normalized, stats))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn known_splits() {
        assert_eq!(
            SplitSpec::for_dataset("etth1"),
            Some(SplitSpec::new(8545, 2881, 2881))
        );
        assert_eq!(SplitSpec::for_dataset("Exchange").unwrap().total(), 7207);
        assert_eq!(SplitSpec::for_dataset("Solar"), None);
        assert_eq!(
            SplitSpec::chronological_default(1000),
            SplitSpec::new(700, 100, 200)
        );
    }

    #[test]
    fn zscore_on_train_rows() {
        let values = Matrix::from_fn(20, 2, |i, j| (i * i) as f64 + j as f64 * 3.0);
        let s = RawSeries::new("toy", values.clone()).unwrap();
        let split = SplitSpec::new(10, 5, 5);
        let (n, stats) = zscore_fit_apply(&s, &split).unwrap();
        for j in 0..2 {
            let col = n.values.slice_rows(0, 10).col(j);
            assert!(mean(&col).abs() < 1e-10);
            assert!((population_std(&col) - 1.0).abs() < 1e-10);
            assert!(mean(&n.values.slice_rows(10, 15).col(j)) > 1.0);
        }
        assert!(stats.invert(&n.values).max_abs_diff(&values) < 1e-12);
    }

    #[test]
    fn constant_train_channel() {
        let values = Matrix::from_fn(8, 2, |i, j| if j == 0 { 1.0 } else { i as f64 });
        let s = RawSeries::new("flat", values).unwrap();
        assert!(matches!(
            zscore_fit_apply(&s, &SplitSpec::new(4, 2, 2)),
            Err(Error::ZeroVariance { channel: 0 })
        ));
    }
}
