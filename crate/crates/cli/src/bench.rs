//! Benchmark grid: closed-form rows plus every trained model and seed.

use std::path::{Path, PathBuf};

use anyhow::{Context, Result};
use lintsf::analysis::affine_of_model;
use lintsf::data::{make_windows, DatasetSplits};
use lintsf::models::{init_model, ModelSpec};
use lintsf::solvers::{solve_ols, solve_ols_without_bias, solve_sigma_bias};
use lintsf::training::{evaluate_mse, train, Workspace};
use log::{info, warn};
use rayon::prelude::*;

use crate::checkpoint::{self, model_tensors, solution_tensors};
use crate::config::ExperimentConfig;
use crate::dump::{self, slug};
use crate::registry::{prepare, ResolveError};
use crate::report::{CellResult, ExperimentReport, Issue, OlsRelation, RunRecord};

enum Job {
    ClosedForm {
        setting: usize,
        normalized: bool,
    },
    Trained {
        setting: usize,
        model: String,
        spec: ModelSpec,
        seed: u64,
    },
}

struct Setting {
    dataset: String,
    horizon: usize,
    splits: DatasetSplits,
}

fn rel(out: &Path, p: &Path) -> String {
    p.strip_prefix(out)
        .unwrap_or(p)
        .to_string_lossy()
        .replace('\\', "/")
}

fn run_dir(out: &Path, s: &Setting, model: &str) -> PathBuf {
    out.join("runs")
        .join(slug(&s.dataset))
        .join(format!("T{}", s.horizon))
        .join(slug(model))
}

fn closed_form(out: &Path, s: &Setting, normalized: bool) -> Result<(String, RunRecord)> {
    let sol = if normalized {
        solve_sigma_bias(&s.splits.train)?
    } else {
        solve_ols(&s.splits.train)?
    };
    let name = sol.class.to_string();
    let test_mse = sol.mse(&s.splits.test)?;
    let dir = run_dir(out, s, &name);
    let (w, b, c) = (
        dir.join("weight.csv"),
        dir.join("bias.csv"),
        dir.join("model.ckpt"),
    );
    dump::write_matrix(&w, &sol.weight)?;
    dump::write_vector(&b, "bias", &sol.bias)?;
    checkpoint::save(&c, &solution_tensors(&sol))?;
    let rec = RunRecord {
        seed: None,
        test_mse,
        best_epoch: None,
        trace: None,
        weight: rel(out, &w),
        bias: rel(out, &b),
        checkpoint: Some(rel(out, &c)),
    };
    Ok((name, rec))
}

fn trained(
    cfg: &ExperimentConfig,
    out: &Path,
    s: &Setting,
    model: &str,
    spec: ModelSpec,
    seed: u64,
) -> Result<RunRecord> {
    let init = init_model(spec, cfg.context_len, s.horizon, seed)?;
    let (m, trace) = train(
        &init,
        &s.splits.train,
        &s.splits.val,
        &cfg.train.to_config(seed),
        None,
    )?;
    let ws = Workspace::for_model(&m)?;
    let test_mse = evaluate_mse(&m, &s.splits.test, &ws)?;
    info!(
        "{} T={} {model} seed {seed}: test MSE {test_mse:.4} (best epoch {:?})",
        s.dataset, s.horizon, trace.best_epoch
    );
    let dir = run_dir(out, s, model).join(format!("seed{seed}"));
    std::fs::create_dir_all(&dir).with_context(|| format!("creating {}", dir.display()))?;
    let t = dir.join("trace.csv");
    let mut buf = Vec::new();
    trace.write_csv(&mut buf)?;
    dump::write_text(&t, &String::from_utf8(buf)?)?;
    let affine = affine_of_model(&m)?;
    let (w, b) = (dir.join("weight.csv"), dir.join("bias.csv"));
    dump::write_matrix(&w, &affine.a)?;
    dump::write_vector(&b, "bias", &affine.b)?;
    let ckpt = if cfg.checkpoints {
        let c = dir.join("model.ckpt");
        checkpoint::save(&c, &model_tensors(&m))?;
        Some(rel(out, &c))
    } else {
        None
    };
    Ok(RunRecord {
        seed: Some(seed),
        test_mse,
        best_epoch: trace.best_epoch,
        trace: Some(rel(out, &t)),
        weight: rel(out, &w),
        bias: rel(out, &b),
        checkpoint: ckpt,
    })
}

/// Runs the grid and writes `report.md`, `report.csv`, `runs.csv` and the
/// per-run artifacts under `out`. Missing datasets are skipped and listed
/// in the report; the result reflects every completed cell.
pub fn cmd_bench(cfg: &ExperimentConfig, out: &Path) -> Result<ExperimentReport> {
    std::fs::create_dir_all(out).with_context(|| format!("creating {}", out.display()))?;
    let mut report = ExperimentReport::default();
    let mut settings = Vec::new();
    for name in &cfg.datasets {
        let prepared = match prepare(name, cfg) {
            Ok(p) => p,
            Err(ResolveError::Missing(msg)) => {
                warn!("skipping {msg}");
                report.skipped.push(Issue {
                    dataset: name.clone(),
                    horizon: None,
                    model: None,
                    message: msg,
                });
                continue;
            }
            Err(ResolveError::Invalid(e)) => {
                report.failures.push(Issue {
                    dataset: name.clone(),
                    horizon: None,
                    model: None,
                    message: format!("{e:#}"),
                });
                continue;
            }
        };
        report.notes.extend(prepared.warnings.iter().cloned());
        for &h in &cfg.horizons {
            match make_windows(&prepared.series, &prepared.split, cfg.context_len, h, 1) {
                Ok(splits) => settings.push(Setting {
                    dataset: name.clone(),
                    horizon: h,
                    splits: splits.with_stats(prepared.stats.clone()),
                }),
                Err(e) => report.failures.push(Issue {
                    dataset: name.clone(),
                    horizon: Some(h),
                    model: None,
                    message: e.to_string(),
                }),
            }
        }
    }

    let mut jobs = Vec::new();
    for (i, _) in settings.iter().enumerate() {
        jobs.push(Job::ClosedForm {
            setting: i,
            normalized: false,
        });
        jobs.push(Job::ClosedForm {
            setting: i,
            normalized: true,
        });
        for m in &cfg.models {
            let spec = cfg.model_spec(m)?;
            for &seed in &cfg.seeds {
                jobs.push(Job::Trained {
                    setting: i,
                    model: spec.to_string(),
                    spec,
                    seed,
                });
            }
        }
    }

    let results: Vec<Result<(String, RunRecord)>> = jobs
        .par_iter()
        .map(|job| match job {
            Job::ClosedForm {
                setting,
                normalized,
            } => closed_form(out, &settings[*setting], *normalized),
            Job::Trained {
                setting,
                model,
                spec,
                seed,
            } => trained(cfg, out, &settings[*setting], model, *spec, *seed)
                .map(|r| (model.clone(), r)),
        })
        .collect();

    for (job, res) in jobs.iter().zip(results) {
        let (setting, label) = match job {
            Job::ClosedForm { setting, .. } => (*setting, None),
            Job::Trained { setting, model, .. } => (*setting, Some(model.clone())),
        };
        let s = &settings[setting];
        let (name, run) = match res {
            Ok(v) => v,
            Err(e) => {
                report.failures.push(Issue {
                    dataset: s.dataset.clone(),
                    horizon: Some(s.horizon),
                    model: label,
                    message: format!("{e:#}"),
                });
                continue;
            }
        };
        let existing = report
            .cells
            .iter_mut()
            .find(|c| c.dataset == s.dataset && c.horizon == s.horizon && c.model == name);
        match existing {
            Some(c) => c.runs.push(run),
            None => report.cells.push(CellResult {
                dataset: s.dataset.clone(),
                horizon: s.horizon,
                model: name,
                closed_form: matches!(job, Job::ClosedForm { .. }),
                runs: vec![run],
                reference: None,
                relation: None,
            }),
        }
    }

    for s in &settings {
        match solve_ols_without_bias(&s.splits.train).and_then(|sol| sol.mse(&s.splits.test)) {
            Ok(v) => {
                let with_bias = report
                    .cells
                    .iter()
                    .find(|c| c.dataset == s.dataset && c.horizon == s.horizon && c.model == "OLS")
                    .map(|c| c.mean());
                if let Some(b) = with_bias {
                    report.notes.push(format!(
                        "{} T={}: OLS test MSE {b:.4} with bias, {v:.4} without",
                        s.dataset, s.horizon
                    ));
                }
            }
            Err(e) => warn!(
                "{} T={}: OLS without bias failed: {e}",
                s.dataset, s.horizon
            ),
        }
    }

    assign_relations(&mut report, cfg)?;
    dump::write_text(&out.join("report.md"), &report.to_markdown())?;
    dump::write_text(&out.join("report.csv"), &report.to_csv())?;
    dump::write_text(&out.join("runs.csv"), &report.runs_csv())?;
    Ok(report)
}

/// Compares every trained cell with OLS (unnormalised models) or OLS+IN
/// (normalised ones) of the same dataset and horizon.
fn assign_relations(report: &mut ExperimentReport, cfg: &ExperimentConfig) -> Result<()> {
    let closed: Vec<(String, usize, String, f64)> = report
        .cells
        .iter()
        .filter(|c| c.closed_form)
        .map(|c| (c.dataset.clone(), c.horizon, c.model.clone(), c.mean()))
        .collect();
    for c in report.cells.iter_mut().filter(|c| !c.closed_form) {
        let reference = if cfg.model_spec(&c.model)?.is_normalized() {
            "OLS+IN"
        } else {
            "OLS"
        };
        if let Some((_, _, name, v)) = closed
            .iter()
            .find(|(d, h, n, _)| *d == c.dataset && *h == c.horizon && n == reference)
        {
            c.reference = Some(name.clone());
            c.relation = Some(OlsRelation::classify(*v, c.mean(), c.std()));
        }
    }
    Ok(())
}
