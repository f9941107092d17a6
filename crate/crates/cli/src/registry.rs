//! Resolves dataset names to normalised series and splits.

use std::path::PathBuf;

use anyhow::{anyhow, Context, Result};
use lintsf::data::{
    add_linear_trend, load_csv, synth_ar_series, zscore_fit_apply, CsvSchema, RawSeries, SplitSpec,
    ZScoreStats,
};
use log::warn;

use crate::config::{ExperimentConfig, SyntheticAr};

/// Conventional file names of the benchmark datasets.
const DEFAULT_FILES: [(&str, &str); 8] = [
    ("ETTh1", "ETTh1.csv"),
    ("ETTh2", "ETTh2.csv"),
    ("ETTm1", "ETTm1.csv"),
    ("ETTm2", "ETTm2.csv"),
    ("ECL", "electricity.csv"),
    ("Traffic", "traffic.csv"),
    ("Weather", "weather.csv"),
    ("Exchange", "exchange_rate.csv"),
];

pub fn default_file_name(dataset: &str) -> Option<&'static str> {
    DEFAULT_FILES
        .iter()
        .find(|(n, _)| n.eq_ignore_ascii_case(dataset))
        .map(|(_, f)| *f)
}

/// A dataset ready for windowing: z-scored with training-split statistics
/// and truncated to the split's rows.
#[derive(Clone, Debug)]
pub struct PreparedDataset {
    pub name: String,
    pub series: RawSeries,
    pub split: SplitSpec,
    pub stats: ZScoreStats,
    pub warnings: Vec<String>,
}

/// Why a dataset could not be prepared.
#[derive(Debug)]
pub enum ResolveError {
    /// No file on disk; the caller skips the dataset.
    Missing(String),
    Invalid(anyhow::Error),
}

impl std::fmt::Display for ResolveError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            ResolveError::Missing(m) => f.write_str(m),
            ResolveError::Invalid(e) => write!(f, "{e:#}"),
        }
    }
}

fn synthesize(spec: &SyntheticAr) -> Result<RawSeries> {
    let s = synth_ar_series(spec.length, spec.channels, &spec.coeffs, spec.seed)?;
    Ok(if spec.trend != 0.0 {
        add_linear_trend(&s, spec.trend)?
    } else {
        s
    })
}

fn locate(name: &str, cfg: &ExperimentConfig) -> std::result::Result<PathBuf, ResolveError> {
    if let Some(p) = cfg.dataset_entries.get(name).and_then(|e| e.path.clone()) {
        return if p.is_file() {
            Ok(p)
        } else {
            Err(ResolveError::Missing(format!(
                "dataset `{name}`: file {} not found",
                p.display()
            )))
        };
    }
    let file = default_file_name(name).ok_or_else(|| {
        ResolveError::Invalid(anyhow!(
            "unknown dataset `{name}`: declare it under [dataset.{name}]"
        ))
    })?;
    let dir = cfg.data_dir().ok_or_else(|| {
        ResolveError::Missing(format!(
            "dataset `{name}`: no data directory (set `data_dir` or LINTSF_DATA_DIR)"
        ))
    })?;
    let p = dir.join(file);
    if p.is_file() {
        Ok(p)
    } else {
        Err(ResolveError::Missing(format!(
            "dataset `{name}`: {} not found",
            p.display()
        )))
    }
}

/// Loads (or generates) `name`, applies its split and normalises it.
///
/// A file whose row count differs from the published split total is used
/// anyway: longer files are cut to the first `train + val + test` rows and
/// shorter ones fall back to a 70/10/20 split, each with a warning.
pub fn prepare(
    name: &str,
    cfg: &ExperimentConfig,
) -> std::result::Result<PreparedDataset, ResolveError> {
    let entry = cfg.dataset_entries.get(name);
    let mut warnings = Vec::new();
    let raw = match entry.and_then(|e| e.synthetic.as_ref()) {
        Some(spec) => synthesize(spec)
            .with_context(|| format!("generating `{name}`"))
            .map_err(ResolveError::Invalid)?,
        None => {
            let path = locate(name, cfg)?;
            load_csv(&path, &CsvSchema::default())
                .with_context(|| format!("loading {}", path.display()))
                .map_err(ResolveError::Invalid)?
        }
    };
    let declared = entry
        .and_then(|e| e.split_spec())
        .or_else(|| SplitSpec::for_dataset(name));
    let split = match declared {
        None => SplitSpec::chronological_default(raw.len()),
        Some(s) if s.total() == raw.len() => s,
        Some(s) if s.total() < raw.len() => {
            warnings.push(format!(
                "{name}: file has {} rows, split uses the first {}",
                raw.len(),
                s.total()
            ));
            s
        }
        Some(s) => {
            warnings.push(format!(
                "{name}: file has {} rows but the split needs {}; using 70/10/20",
                raw.len(),
                s.total()
            ));
            SplitSpec::chronological_default(raw.len())
        }
    };
    for w in &warnings {
        warn!("{w}");
    }
    let mut raw = raw;
    if raw.len() > split.total() {
        raw.values = raw.values.slice_rows(0, split.total());
        if let Some(ts) = raw.timestamps.as_mut() {
            ts.truncate(split.total());
        }
    }
    let (series, stats) = zscore_fit_apply(&raw, &split)
        .with_context(|| format!("normalising `{name}`"))
        .map_err(ResolveError::Invalid)?;
    Ok(PreparedDataset {
        name: name.to_string(),
        series,
        split,
        stats,
        warnings,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn synthetic_default_is_available() {
        let cfg = ExperimentConfig::default();
        let d = prepare("synthetic-ar", &cfg).unwrap();
        assert_eq!(d.series.len(), 5000);
        assert_eq!(d.series.channels(), 2);
        assert_eq!(d.split, SplitSpec::new(3500, 500, 1000));
    }

    #[test]
    fn missing_files_are_reported_as_missing() {
        let cfg = ExperimentConfig {
            data_dir: Some(PathBuf::from("/nonexistent-lintsf-dir")),
            ..Default::default()
        };
        assert!(matches!(
            prepare("ETTh1", &cfg),
            Err(ResolveError::Missing(_))
        ));
        assert!(matches!(
            prepare("Solar", &cfg),
            Err(ResolveError::Invalid(_))
        ));
    }

    #[test]
    fn long_files_are_truncated_with_a_warning() {
        let dir = tempfile::tempdir().unwrap();
        let mut text = String::from("date,a,b\n");
        for i in 0..120 {
            text.push_str(&format!(
                "t{i},{},{}\n",
                (i as f64).sin(),
                (i * i % 7) as f64
            ));
        }
        let path = dir.path().join("toy.csv");
        std::fs::write(&path, text).unwrap();
        let mut cfg = ExperimentConfig::default();
        cfg.dataset_entries.insert(
            "toy".into(),
            crate::config::DatasetEntry {
                path: Some(path),
                split: Some([60, 20, 20]),
                ..Default::default()
            },
        );
        let d = prepare("toy", &cfg).unwrap();
        assert_eq!(d.series.len(), 100);
        assert_eq!(d.warnings.len(), 1);
    }
}
