use std::ops::Range;
use std::sync::Arc;

use crate::error::{Error, Result};
use crate::solvers::{DesignPair, DesignSource};

use super::{RawSeries, SplitSpec, ZScoreStats};

/// Sliding `(context, target)` windows over one split of a series.
///
/// Windows of every channel are pooled (channel-major) into a single design,
/// so one model is shared across channels. The windows are views into the
/// series and are copied out on demand.
#[derive(Clone, Debug)]
pub struct WindowedDataset {
    channels: Arc<Vec<Vec<f64>>>,
    selected: Vec<usize>,
    rows: Range<usize>,
    context_len: usize,
    horizon: usize,
    stride: usize,
    pub stats: Option<ZScoreStats>,
}

impl WindowedDataset {
    fn new(
        channels: Arc<Vec<Vec<f64>>>,
        rows: Range<usize>,
        context_len: usize,
        horizon: usize,
        stride: usize,
        split: &'static str,
    ) -> Result<Self> {
        let required = context_len + horizon;
        if rows.len() < required {
            return Err(Error::SplitTooShort {
                split,
                len: rows.len(),
                required,
            });
        }
        let selected = (0..channels.len()).collect();
        Ok(Self {
            channels,
            selected,
            rows,
            context_len,
            horizon,
            stride,
            stats: None,
        })
    }

    /// Windows per channel: `⌊(len − L − T)/stride⌋ + 1`.
    pub fn windows_per_channel(&self) -> usize {
        (self.rows.len() - self.context_len - self.horizon) / self.stride + 1
    }

    pub fn num_channels(&self) -> usize {
        self.selected.len()
    }

    /// Row range of the split within the series.
    pub fn rows(&self) -> Range<usize> {
        self.rows.clone()
    }

    /// Series row of the first context value of window `w`.
    pub fn window_start(&self, w: usize) -> usize {
        self.rows.start + w * self.stride
    }

    /// The same split restricted to one channel.
    pub fn channel(&self, j: usize) -> Self {
        Self {
            selected: vec![self.selected[j]],
            ..self.clone()
        }
    }

    pub fn to_design(&self) -> DesignPair {
        DesignPair::collect(self)
    }
}

impl DesignSource for WindowedDataset {
    fn len(&self) -> usize {
        self.windows_per_channel() * self.selected.len()
    }

    fn context_len(&self) -> usize {
        self.context_len
    }

    fn horizon(&self) -> usize {
        self.horizon
    }

    fn copy_pair(&self, i: usize, x: &mut [f64], y: &mut [f64]) {
        let per = self.windows_per_channel();
        let series = &self.channels[self.selected[i / per]];
        let start = self.window_start(i % per);
        let mid = start + self.context_len;
        x.copy_from_slice(&series[start..mid]);
        y.copy_from_slice(&series[mid..mid + self.horizon]);
    }
}

/// Train, validation and test windows of one series.
#[derive(Clone, Debug)]
pub struct DatasetSplits {
    pub train: WindowedDataset,
    pub val: WindowedDataset,
    pub test: WindowedDataset,
}

/// Cuts each split into windows that stay inside the split.
pub fn make_windows(
    s: &RawSeries,
    split: &SplitSpec,
    context_len: usize,
    horizon: usize,
    stride: usize,
) -> Result<DatasetSplits> {
    if context_len == 0 || horizon == 0 || stride == 0 {
        return Err(Error::InvalidConfig(
            "L, T and stride must be positive".into(),
        ));
    }
    split.validate(s.len())?;
    let channels = Arc::new((0..s.channels()).map(|j| s.channel(j)).collect::<Vec<_>>());
    let make = |rows, name| {
        WindowedDataset::new(channels.clone(), rows, context_len, horizon, stride, name)
    };
    Ok(DatasetSplits {
        train: make(split.train_range(), "train")?,
        val: make(split.val_range(), "val")?,
        test: make(split.test_range(), "test")?,
    })
}

impl DatasetSplits {
    pub fn with_stats(mut self, stats: ZScoreStats) -> Self {
        for part in [&mut self.train, &mut self.val, &mut self.test] {
            part.stats = Some(stats.clone());
        }
        self
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::Matrix;

    fn ramp(n: usize) -> RawSeries {
        RawSeries::new("ramp", Matrix::from_fn(n, 1, |i, _| i as f64)).unwrap()
    }

    #[test]
    fn counting() {
        let s = ramp(10);
        let d = make_windows(&s, &SplitSpec::new(10, 0, 0), 3, 2, 1);
        // empty val split is too short
        assert!(matches!(d, Err(Error::SplitTooShort { split: "val", .. })));
        let s = ramp(20);
        let d = make_windows(&s, &SplitSpec::new(10, 5, 5), 3, 2, 1).unwrap();
        assert_eq!(d.train.len(), 6);
        assert_eq!(d.val.len(), 1);
        let mut x = [0.0; 3];
        let mut y = [0.0; 2];
        d.train.copy_pair(0, &mut x, &mut y);
        assert_eq!((x, y), ([0.0, 1.0, 2.0], [3.0, 4.0]));
        d.val.copy_pair(0, &mut x, &mut y);
        assert_eq!((x, y), ([10.0, 11.0, 12.0], [13.0, 14.0]));
    }

    #[test]
    fn channels_are_pooled() {
        let s = RawSeries::new("two", Matrix::from_fn(12, 2, |i, j| (i + 100 * j) as f64)).unwrap();
        let d = make_windows(&s, &SplitSpec::new(8, 2, 2), 2, 1, 1);
        assert!(d.is_err());
        let d = make_windows(&s, &SplitSpec::new(6, 3, 3), 2, 1, 1).unwrap();
        assert_eq!(d.train.len(), 8);
        let design = d.train.to_design();
        assert_eq!(design.x.row(4), &[100.0, 101.0]);
        assert_eq!(d.train.channel(1).to_design().x.row(0), &[100.0, 101.0]);
    }
}
