//! Dataset plumbing: windows stay inside their split and slice the series
//! exactly, normalisation is fitted on training rows only, and the AR
//! generator has the autocorrelation theory predicts.

use lintsf::data::{
    make_windows, synth_ar_series, zscore_fit_apply, RawSeries, SplitSpec, WindowedDataset,
};
use lintsf::linalg::{mean, population_std, Matrix};
use lintsf::solvers::DesignSource;
use lintsf::Error;
use proptest::prelude::*;

fn indexed_series(len: usize, channels: usize) -> RawSeries {
    // value encodes (row, channel) so every copied element can be traced back
    RawSeries::new(
        "indexed",
        Matrix::from_fn(len, channels, |i, j| (i * 1000 + j) as f64),
    )
    .unwrap()
}

fn lag1_autocorrelation(x: &[f64]) -> f64 {
    let m = mean(x);
    let num: f64 = x.windows(2).map(|w| (w[0] - m) * (w[1] - m)).sum();
    let den: f64 = x.iter().map(|v| (v - m) * (v - m)).sum();
    num / den
}

/// Every series row touched by `d`, per channel, and a check that each
/// window is a contiguous slice.
fn rows_used(d: &WindowedDataset, channels: usize) -> (usize, usize) {
    let (l, t) = (d.context_len(), d.horizon());
    let (mut x, mut y) = (vec![0.0; l], vec![0.0; t]);
    let (mut lo, mut hi) = (usize::MAX, 0);
    for i in 0..d.len() {
        d.copy_pair(i, &mut x, &mut y);
        let first = x[0] as usize;
        let channel = first % 1000;
        assert!(channel < channels);
        for (k, v) in x.iter().chain(&y).enumerate() {
            assert_eq!(
                *v as usize,
                first + 1000 * k,
                "window {i} is not contiguous"
            );
        }
        lo = lo.min(first / 1000);
        hi = hi.max(first / 1000 + l + t - 1);
    }
    (lo, hi)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn windows_never_cross_split_boundaries(
        train in 5usize..40, val in 5usize..20, test in 5usize..20,
        l in 1usize..4, t in 1usize..3, channels in 1usize..3,
    ) {
        let s = indexed_series(train + val + test, channels);
        let split = SplitSpec::new(train, val, test);
        let d = make_windows(&s, &split, l, t, 1).unwrap();
        for (part, range) in [(&d.train, split.train_range()), (&d.val, split.val_range()), (&d.test, split.test_range())] {
            prop_assert_eq!(part.len(), (range.len() - l - t + 1) * channels);
            let (lo, hi) = rows_used(part, channels);
            prop_assert_eq!(lo, range.start);
            prop_assert_eq!(hi, range.end - 1);
        }
    }

    #[test]
    fn overlapping_windows_rebuild_the_series(len in 6usize..60, l in 1usize..5, t in 1usize..4) {
        prop_assume!(len >= l + t);
        let total = len + 2 * (l + t);
        let values = Matrix::from_fn(total, 1, |i, _| (i as f64 * 0.37).sin() * 1e3 + 1.0 / (i as f64 + 3.0));
        let s = RawSeries::new("wave", values.clone()).unwrap();
        let d = make_windows(&s, &SplitSpec::new(len, l + t, l + t), l, t, 1).unwrap();
        let train = d.train;
        let mut rebuilt = vec![f64::NAN; train.rows().len()];
        let (mut x, mut y) = (vec![0.0; l], vec![0.0; t]);
        for i in 0..train.len() {
            train.copy_pair(i, &mut x, &mut y);
            for (k, v) in x.iter().chain(&y).enumerate() {
                rebuilt[i + k] = *v;
            }
        }
        for (i, v) in rebuilt.iter().enumerate() {
            prop_assert_eq!(v.to_bits(), values[(i, 0)].to_bits());
        }
    }
}

#[test]
fn window_counts() {
    let s = indexed_series(30, 1);
    let d = make_windows(&s, &SplitSpec::new(10, 10, 10), 3, 2, 1).unwrap();
    assert_eq!(d.train.len(), 6);
    let (mut x, mut y) = ([0.0; 3], [0.0; 2]);
    d.train.copy_pair(0, &mut x, &mut y);
    assert_eq!((x, y), ([0.0, 1000.0, 2000.0], [3000.0, 4000.0]));
    let d = make_windows(&s, &SplitSpec::new(10, 10, 10), 6, 4, 1).unwrap();
    assert_eq!(d.val.len(), 1);
    let err = make_windows(&s, &SplitSpec::new(10, 10, 10), 8, 4, 1).unwrap_err();
    assert!(matches!(err, Error::SplitTooShort { required: 12, .. }));
}

#[test]
fn benchmark_split_window_count() {
    let split = SplitSpec::for_dataset("ETTh1").unwrap();
    let s = RawSeries::new("ramp", Matrix::from_fn(split.total(), 1, |i, _| i as f64)).unwrap();
    let d = make_windows(&s, &split, 720, 96, 1).unwrap();
    assert_eq!(d.train.len(), 8545 - 720 - 96 + 1);
}

#[test]
fn zscore_uses_training_rows_only() {
    let s = synth_ar_series(600, 3, &[0.8], 5).unwrap();
    let split = SplitSpec::new(400, 100, 100);
    let (z, stats) = zscore_fit_apply(&s, &split).unwrap();
    for j in 0..3 {
        let train: Vec<f64> = z.channel(j)[..400].to_vec();
        assert!(mean(&train).abs() < 1e-10);
        assert!((population_std(&train) - 1.0).abs() < 1e-10);
        let val: Vec<f64> = z.channel(j)[400..500].to_vec();
        assert!(mean(&val).abs() > 1e-6);
    }
    let back = stats.invert(&z.values);
    assert!(back.max_abs_diff(&s.values) < 1e-12);

    let flat = RawSeries::new(
        "flat",
        Matrix::from_fn(30, 2, |i, j| if j == 0 { i as f64 } else { 4.0 }),
    )
    .unwrap();
    assert!(matches!(
        zscore_fit_apply(&flat, &SplitSpec::new(10, 10, 10)),
        Err(Error::ZeroVariance { channel: 1 })
    ));
}

#[test]
fn ar_autocorrelation_matches_theory() {
    let n = 10_000;
    let white = synth_ar_series(n, 1, &[0.0], 1).unwrap();
    let r = lag1_autocorrelation(&white.channel(0));
    assert!(r.abs() < 3.0 / (n as f64).sqrt(), "white noise lag-1 {r}");
    let ar = synth_ar_series(n, 1, &[0.9], 2).unwrap();
    let r = lag1_autocorrelation(&ar.channel(0));
    assert!((r - 0.9).abs() < 0.05, "AR(1) lag-1 {r}");
    assert_eq!(ar, synth_ar_series(n, 1, &[0.9], 2).unwrap());
}
