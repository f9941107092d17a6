//! Benchmark results and their Markdown / CSV renderings.
//!
//! Both tables are rendered from the same [`ExperimentReport`]: the CSV
//! carries full precision, the Markdown rounds to three decimals.

use std::fmt::Write as _;

/// How the matching closed-form solution compares with a trained model.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum OlsRelation {
    /// Closed form lower than `mean − std`.
    Superior,
    /// Closed form within one standard deviation of the mean.
    WithinStd,
    /// Closed form higher than `mean + std`.
    Inferior,
}

impl OlsRelation {
    pub fn classify(ols: f64, mean: f64, std: Option<f64>) -> Self {
        let s = std.unwrap_or(0.0);
        if ols < mean - s {
            OlsRelation::Superior
        } else if ols <= mean + s {
            OlsRelation::WithinStd
        } else {
            OlsRelation::Inferior
        }
    }

    pub fn label(self) -> &'static str {
        match self {
            OlsRelation::Superior => "ols-superior",
            OlsRelation::WithinStd => "within-std",
            OlsRelation::Inferior => "ols-inferior",
        }
    }
}

/// Output files of one trained run, relative to the output directory.
#[derive(Clone, Debug, PartialEq)]
pub struct RunRecord {
    pub seed: Option<u64>,
    pub test_mse: f64,
    pub best_epoch: Option<usize>,
    pub trace: Option<String>,
    pub weight: String,
    pub bias: String,
    pub checkpoint: Option<String>,
}

/// One (dataset, horizon, model) entry of the table.
#[derive(Clone, Debug, PartialEq)]
pub struct CellResult {
    pub dataset: String,
    pub horizon: usize,
    pub model: String,
    pub closed_form: bool,
    pub runs: Vec<RunRecord>,
    /// Name of the closed-form row this model is compared against.
    pub reference: Option<String>,
    pub relation: Option<OlsRelation>,
}

impl CellResult {
    pub fn values(&self) -> Vec<f64> {
        self.runs.iter().map(|r| r.test_mse).collect()
    }

    pub fn mean(&self) -> f64 {
        let v = self.values();
        v.iter().sum::<f64>() / v.len() as f64
    }

    /// Sample standard deviation over seeds; absent with fewer than two.
    pub fn std(&self) -> Option<f64> {
        let v = self.values();
        if v.len() < 2 {
            return None;
        }
        let m = self.mean();
        let ss: f64 = v.iter().map(|x| (x - m) * (x - m)).sum();
        Some((ss / (v.len() - 1) as f64).sqrt())
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct Issue {
    pub dataset: String,
    pub horizon: Option<usize>,
    pub model: Option<String>,
    pub message: String,
}

#[derive(Clone, Debug, Default, PartialEq)]
pub struct ExperimentReport {
    pub cells: Vec<CellResult>,
    /// Datasets that were not found on disk.
    pub skipped: Vec<Issue>,
    /// Cells or datasets that raised an error.
    pub failures: Vec<Issue>,
    /// Free-form observations, e.g. split mismatches or the effect of
    /// dropping the OLS bias.
    pub notes: Vec<String>,
}

/// `k` of `n` settings.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct Tally {
    pub hits: usize,
    pub total: usize,
}

impl Tally {
    pub fn percent(&self) -> f64 {
        if self.total == 0 {
            0.0
        } else {
            100.0 * self.hits as f64 / self.total as f64
        }
    }
}

fn fmt3(v: f64) -> String {
    format!("{v:.3}")
}

impl ExperimentReport {
    pub fn is_complete(&self) -> bool {
        self.skipped.is_empty() && self.failures.is_empty()
    }

    /// Trained cells where the matching closed form is strictly better by
    /// more than one standard deviation.
    pub fn cell_tally(&self) -> Tally {
        let trained: Vec<_> = self.cells.iter().filter(|c| c.relation.is_some()).collect();
        Tally {
            hits: trained
                .iter()
                .filter(|c| c.relation == Some(OlsRelation::Superior))
                .count(),
            total: trained.len(),
        }
    }

    /// (dataset, horizon) settings where the better closed form has a lower
    /// mean test MSE than every trained model.
    pub fn setting_tally(&self) -> Tally {
        let mut t = Tally { hits: 0, total: 0 };
        for (dataset, horizon) in self.settings() {
            let cells = self
                .cells
                .iter()
                .filter(|c| c.dataset == dataset && c.horizon == horizon);
            let (mut best_cf, mut best_tr) = (f64::INFINITY, f64::INFINITY);
            for c in cells {
                let m = c.mean();
                if c.closed_form {
                    best_cf = best_cf.min(m);
                } else {
                    best_tr = best_tr.min(m);
                }
            }
            if best_cf.is_finite() && best_tr.is_finite() {
                t.total += 1;
                if best_cf < best_tr {
                    t.hits += 1;
                }
            }
        }
        t
    }

    fn settings(&self) -> Vec<(String, usize)> {
        let mut out: Vec<(String, usize)> = Vec::new();
        for c in &self.cells {
            if !out.iter().any(|(d, h)| *d == c.dataset && *h == c.horizon) {
                out.push((c.dataset.clone(), c.horizon));
            }
        }
        out
    }

    fn models(&self) -> Vec<String> {
        let mut out: Vec<String> = Vec::new();
        for c in &self.cells {
            if !out.contains(&c.model) {
                out.push(c.model.clone());
            }
        }
        out
    }

    pub fn to_csv(&self) -> String {
        let mut s = String::from(
            "dataset,horizon,model,status,n_runs,mean_mse,std_mse,per_seed_mse,reference,relation,note\n",
        );
        for c in &self.cells {
            let per: Vec<String> = c.runs.iter().map(|r| r.test_mse.to_string()).collect();
            let _ = writeln!(
                s,
                "{},{},{},ok,{},{},{},{},{},{},",
                c.dataset,
                c.horizon,
                c.model,
                c.runs.len(),
                c.mean(),
                c.std().map(|v| v.to_string()).unwrap_or_default(),
                per.join(";"),
                c.reference.clone().unwrap_or_default(),
                c.relation.map(OlsRelation::label).unwrap_or_default(),
            );
        }
        for (status, issues) in [("skipped", &self.skipped), ("failed", &self.failures)] {
            for i in issues {
                let _ = writeln!(
                    s,
                    "{},{},{},{status},0,,,,,,\"{}\"",
                    i.dataset,
                    i.horizon.map(|h| h.to_string()).unwrap_or_default(),
                    i.model.clone().unwrap_or_default(),
                    i.message.replace('"', "'"),
                );
            }
        }
        s
    }

    /// Per-run listing with seeds, best epochs and artifact paths.
    pub fn runs_csv(&self) -> String {
        let mut s = String::from(
            "dataset,horizon,model,seed,test_mse,best_epoch,trace,weight,bias,checkpoint\n",
        );
        for c in &self.cells {
            for r in &c.runs {
                let _ = writeln!(
                    s,
                    "{},{},{},{},{},{},{},{},{},{}",
                    c.dataset,
                    c.horizon,
                    c.model,
                    r.seed.map(|v| v.to_string()).unwrap_or_default(),
                    r.test_mse,
                    r.best_epoch.map(|v| v.to_string()).unwrap_or_default(),
                    r.trace.clone().unwrap_or_default(),
                    r.weight,
                    r.bias,
                    r.checkpoint.clone().unwrap_or_default(),
                );
            }
        }
        s
    }

    /// Wide table: one row per (dataset, horizon), one column per model,
    /// `mean ± std` to three decimals. `*` marks cells where the matching
    /// closed form is better by more than one standard deviation, `~`
    /// cells within one standard deviation, and bold the best model.
    pub fn to_markdown(&self) -> String {
        let models = self.models();
        let mut s = String::from("# Test MSE\n\n");
        s.push_str("| Dataset | T |");
        for m in &models {
            let _ = write!(s, " {m} |");
        }
        s.push_str("\n|---|---|");
        for _ in &models {
            s.push_str("---|");
        }
        s.push('\n');
        for (dataset, horizon) in self.settings() {
            let row: Vec<Option<&CellResult>> = models
                .iter()
                .map(|m| {
                    self.cells
                        .iter()
                        .find(|c| c.dataset == dataset && c.horizon == horizon && &c.model == m)
                })
                .collect();
            let best = row
                .iter()
                .flatten()
                .map(|c| c.mean())
                .fold(f64::INFINITY, f64::min);
            let _ = write!(s, "| {dataset} | {horizon} |");
            for cell in row {
                let Some(c) = cell else {
                    s.push_str(" |");
                    continue;
                };
                let mut text = fmt3(c.mean());
                if let Some(sd) = c.std() {
                    let _ = write!(text, " ± {}", fmt3(sd));
                }
                if c.mean() == best {
                    text = format!("**{text}**");
                }
                match c.relation {
                    Some(OlsRelation::Superior) => text.push_str(" *"),
                    Some(OlsRelation::WithinStd) => text.push_str(" ~"),
                    _ => {}
                }
                let _ = write!(s, " {text} |");
            }
            s.push('\n');
        }
        s.push_str(
            "\n`*` closed-form solution better than the model by more than one standard \
             deviation; `~` within one standard deviation. OLS is the reference for models \
             without normalisation, OLS+IN for normalised ones.\n",
        );
        let cells = self.cell_tally();
        let settings = self.setting_tally();
        let _ = write!(
            s,
            "\nClosed form better: {} of {} model cells ({:.0}%), {} of {} dataset-horizon \
             settings ({:.0}%).\n",
            cells.hits,
            cells.total,
            cells.percent(),
            settings.hits,
            settings.total,
            settings.percent()
        );
        if !self.skipped.is_empty() {
            s.push_str("\n## Skipped\n\n");
            for i in &self.skipped {
                let _ = writeln!(s, "- {}: {}", i.dataset, i.message);
            }
        }
        if !self.failures.is_empty() {
            s.push_str("\n## Failed\n\n");
            for i in &self.failures {
                let mut at = i.dataset.clone();
                if let Some(h) = i.horizon {
                    let _ = write!(at, " T={h}");
                }
                if let Some(m) = &i.model {
                    let _ = write!(at, " {m}");
                }
                let _ = writeln!(s, "- {at}: {}", i.message);
            }
        }
        if !self.notes.is_empty() {
            s.push_str("\n## Notes\n\n");
            for n in &self.notes {
                let _ = writeln!(s, "- {n}");
            }
        }
        s
    }
}
