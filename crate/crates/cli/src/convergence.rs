//! Trains the normalised models while tracking how close their affine
//! weights come to the OLS+IN solution, and dumps plot-ready CSVs.

use std::fmt::Write as _;
use std::path::Path;

use anyhow::{anyhow, Context, Result};
use lintsf::analysis::{affine_of_model, cosine_similarity, AffineModel};
use lintsf::data::make_windows;
use lintsf::models::{init_model, ForecastModel};
use lintsf::solvers::{solve_ols, solve_sigma_bias, DesignSource};
use lintsf::training::{evaluate_mse, train, TrainConfig, Workspace};
use log::info;
use rayon::prelude::*;

use crate::checkpoint::{self, model_tensors, solution_tensors};
use crate::config::{ConvergenceSection, ExperimentConfig, CONVERGENCE_MODELS};
use crate::dump::{self, slug};
use crate::registry::prepare;

#[derive(Clone, Debug, PartialEq)]
pub struct ConvergenceRun {
    pub model: String,
    pub seed: u64,
    pub initial_cosine: f64,
    pub final_cosine: f64,
    pub bias_max_abs: f64,
    pub test_mse: f64,
    pub best_epoch: Option<usize>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct ConvergenceSummary {
    pub dataset: String,
    pub context_len: usize,
    pub horizon: usize,
    pub epochs: usize,
    /// Max-abs bias of the OLS+IN reference.
    pub reference_bias_max_abs: f64,
    pub reference_test_mse: f64,
    /// Max-abs bias of unconstrained OLS on the same data.
    pub ols_bias_max_abs: f64,
    pub runs: Vec<ConvergenceRun>,
}

fn max_abs(v: &[f64]) -> f64 {
    v.iter().fold(0.0, |m, x| m.max(x.abs()))
}

impl ConvergenceSummary {
    pub fn run(&self, model: &str) -> impl Iterator<Item = &ConvergenceRun> {
        let model = model.to_string();
        self.runs.iter().filter(move |r| r.model == model)
    }

    pub fn render(&self) -> String {
        let mut s = String::new();
        let _ = writeln!(
            s,
            "{} L={} T={} epochs={}: OLS+IN bias max-abs {:.4}, test MSE {:.4}; OLS bias max-abs {:.4}",
            self.dataset,
            self.context_len,
            self.horizon,
            self.epochs,
            self.reference_bias_max_abs,
            self.reference_test_mse,
            self.ols_bias_max_abs
        );
        for r in &self.runs {
            let _ = writeln!(
                s,
                "  {:<11} seed {}: cosine {:.4} -> {:.4}, bias max-abs {:.4}, test MSE {:.4}",
                r.model, r.seed, r.initial_cosine, r.final_cosine, r.bias_max_abs, r.test_mse
            );
        }
        s
    }

    pub fn to_csv(&self) -> String {
        let mut s = String::from(
            "model,seed,initial_cosine,final_cosine,bias_max_abs,reference_bias_max_abs,test_mse,best_epoch\n",
        );
        for r in &self.runs {
            let _ = writeln!(
                s,
                "{},{},{},{},{},{},{},{}",
                r.model,
                r.seed,
                r.initial_cosine,
                r.final_cosine,
                r.bias_max_abs,
                self.reference_bias_max_abs,
                r.test_mse,
                r.best_epoch.map(|e| e.to_string()).unwrap_or_default()
            );
        }
        s
    }
}

/// Evenly spaced test windows: context, target and both forecasts, one
/// row per time step (`t < 0` is context).
fn forecast_dump<S: DesignSource>(
    test: &S,
    count: usize,
    model: &ForecastModel,
    reference: &AffineModel,
) -> Result<String> {
    let (l, h) = (test.context_len(), test.horizon());
    let mut s = String::from("window,t,actual,forecast,ols_in\n");
    let count = count.min(test.len());
    let mut x = vec![0.0; l];
    let mut y = vec![0.0; h];
    for k in 0..count {
        let idx = k * test.len() / count;
        test.copy_pair(idx, &mut x, &mut y);
        let p = model.forward(&x)?;
        let r = reference.apply(&x)?;
        for (i, v) in x.iter().enumerate() {
            let _ = writeln!(s, "{idx},{},{v},,", i as i64 - l as i64);
        }
        for t in 0..h {
            let _ = writeln!(s, "{idx},{t},{},{},{}", y[t], p[t], r[t]);
        }
    }
    Ok(s)
}

pub fn cmd_convergence(cfg: &ExperimentConfig, out: &Path) -> Result<ConvergenceSummary> {
    let cc: &ConvergenceSection = &cfg.convergence;
    let data = prepare(&cc.dataset, cfg).map_err(|e| anyhow!("{e}"))?;
    let splits = make_windows(&data.series, &data.split, cc.context_len, cc.horizon, 1)?;
    let reference_sol = solve_sigma_bias(&splits.train)?;
    let reference_test_mse = reference_sol.mse(&splits.test)?;
    let ols = solve_ols(&splits.train)?;
    std::fs::create_dir_all(out).with_context(|| format!("creating {}", out.display()))?;
    for (name, sol) in [("OLS-IN", &reference_sol), ("OLS", &ols)] {
        let dir = out.join(name);
        dump::write_matrix(&dir.join("weight.csv"), &sol.weight)?;
        dump::write_vector(&dir.join("bias.csv"), "bias", &sol.bias)?;
        checkpoint::save(&dir.join("model.ckpt"), &solution_tensors(sol))?;
    }
    let reference = AffineModel::from(reference_sol);

    let jobs: Vec<(&str, u64)> = CONVERGENCE_MODELS
        .iter()
        .flat_map(|m| cfg.seeds.iter().map(move |s| (*m, *s)))
        .collect();
    let runs = jobs
        .par_iter()
        .map(|&(model, seed)| -> Result<ConvergenceRun> {
            let spec = cfg.model_spec(model)?;
            let init = init_model(spec, cc.context_len, cc.horizon, seed)?;
            let tc = TrainConfig {
                lr: cc.lr,
                batch_size: cc.batch_size,
                epochs: cc.epochs,
                seed,
                early_stop: cc.early_stop,
                ..cfg.train.to_config(seed)
            };
            let (m, trace) = train(&init, &splits.train, &splits.val, &tc, Some(&reference))?;
            let affine = affine_of_model(&m)?;
            let final_cosine = cosine_similarity(&affine.a, &reference.a)?;
            let ws = Workspace::for_model(&m)?;
            let test_mse = evaluate_mse(&m, &splits.test, &ws)?;
            let dir = out.join(slug(model)).join(format!("seed{seed}"));
            std::fs::create_dir_all(&dir)?;
            let mut buf = Vec::new();
            trace.write_csv(&mut buf)?;
            dump::write_text(&dir.join("trace.csv"), &String::from_utf8(buf)?)?;
            dump::write_matrix(&dir.join("weight.csv"), &affine.a)?;
            dump::write_vector(&dir.join("bias.csv"), "bias", &affine.b)?;
            dump::write_text(
                &dir.join("forecasts.csv"),
                &forecast_dump(&splits.test, cc.sample_forecasts, &m, &reference)?,
            )?;
            checkpoint::save(&dir.join("model.ckpt"), &model_tensors(&m))?;
            info!("{model} seed {seed}: cosine to OLS+IN {final_cosine:.4}");
            Ok(ConvergenceRun {
                model: model.to_string(),
                seed,
                initial_cosine: trace.initial.cosine.unwrap_or(f64::NAN),
                final_cosine,
                bias_max_abs: max_abs(&affine.b),
                test_mse,
                best_epoch: trace.best_epoch,
            })
        })
        .collect::<Result<Vec<_>>>()?;

    let summary = ConvergenceSummary {
        dataset: cc.dataset.clone(),
        context_len: cc.context_len,
        horizon: cc.horizon,
        epochs: cc.epochs,
        reference_bias_max_abs: max_abs(&reference.b),
        reference_test_mse,
        ols_bias_max_abs: max_abs(&ols.bias),
        runs,
    };
    dump::write_text(&out.join("summary.csv"), &summary.to_csv())?;
    dump::write_text(&out.join("summary.txt"), &summary.render())?;
    Ok(summary)
}
