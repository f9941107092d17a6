use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::{Context, Result};
use clap::{Args, Parser, Subcommand};
use lintsf_cli::{
    cmd_bench, cmd_convergence, cmd_equivalence, cmd_fits_bias_report, dump, fits_bias,
    ExperimentConfig,
};

#[derive(Parser)]
#[command(
    name = "lintsf",
    version,
    about = "Linear forecasting benchmarks and equivalence checks"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Clone)]
struct Common {
    /// TOML experiment config; built-in defaults otherwise
    #[arg(long)]
    config: Option<PathBuf>,
    /// Output directory (overrides `output_dir`)
    #[arg(long)]
    out: Option<PathBuf>,
    /// Comma-separated seeds (overrides `seeds`)
    #[arg(long, value_delimiter = ',')]
    seeds: Option<Vec<u64>>,
    /// Worker threads; all cores by default
    #[arg(long)]
    threads: Option<usize>,
}

#[derive(Subcommand)]
enum Command {
    /// Train the model grid and tabulate test MSE against the closed forms
    Bench {
        #[command(flatten)]
        common: Common,
        /// Comma-separated datasets (overrides `datasets`)
        #[arg(long, value_delimiter = ',')]
        datasets: Option<Vec<String>>,
        /// Comma-separated horizons (overrides `horizons`)
        #[arg(long, value_delimiter = ',')]
        horizons: Option<Vec<usize>>,
    },
    /// Run the randomised model-class equivalence checks
    Equivalence {
        #[command(flatten)]
        common: Common,
        /// Context length; replaces the configured sizes together with -T
        #[arg(short = 'L', long = "context-len", requires = "horizon")]
        context_len: Option<usize>,
        /// Horizon paired with -L
        #[arg(short = 'T', long, requires = "context_len")]
        horizon: Option<usize>,
        /// Random trials per size
        #[arg(long)]
        trials: Option<usize>,
    },
    /// Track convergence of the normalised models to the OLS+IN solution
    Convergence {
        #[command(flatten)]
        common: Common,
        /// Dataset name (default `synthetic-ar`)
        #[arg(long)]
        dataset: Option<String>,
        /// Context length
        #[arg(short = 'L', long = "context-len")]
        context_len: Option<usize>,
        /// Forecast horizon
        #[arg(short = 'T', long)]
        horizon: Option<usize>,
        /// Training epochs
        #[arg(long)]
        epochs: Option<usize>,
        /// Adam learning rate
        #[arg(long)]
        lr: Option<f64>,
    },
    /// Spectrum of the FITS bias map and the implied effective step size
    FitsBias {
        #[command(flatten)]
        common: Common,
        /// Even context length
        #[arg(short = 'L', long = "context-len")]
        context_len: Option<usize>,
        /// Even forecast horizon
        #[arg(short = 'T', long)]
        horizon: Option<usize>,
    },
}

fn setup(common: &Common) -> Result<(ExperimentConfig, PathBuf)> {
    let mut cfg = match &common.config {
        Some(p) => ExperimentConfig::load(p)?,
        None => ExperimentConfig::default(),
    };
    if let Some(s) = &common.seeds {
        cfg.seeds = s.clone();
    }
    if let Some(o) = &common.out {
        cfg.output_dir = o.clone();
    }
    if let Some(n) = common.threads {
        rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global()
            .context("configuring the worker pool")?;
    }
    let out = cfg.output_dir.clone();
    Ok((cfg, out))
}

fn run(cli: Cli) -> Result<ExitCode> {
    match cli.command {
        Command::Bench {
            common,
            datasets,
            horizons,
        } => {
            let (mut cfg, out) = setup(&common)?;
            if let Some(d) = datasets {
                cfg.datasets = d;
            }
            if let Some(h) = horizons {
                cfg.horizons = h;
            }
            cfg.validate()?;
            let report = cmd_bench(&cfg, &out)?;
            print!("{}", report.to_markdown());
            println!("\nreport written to {}", out.join("report.md").display());
            Ok(if report.is_complete() {
                ExitCode::SUCCESS
            } else {
                ExitCode::FAILURE
            })
        }
        Command::Equivalence {
            common,
            context_len,
            horizon,
            trials,
        } => {
            let (cfg, out) = setup(&common)?;
            let eq = &cfg.equivalence;
            let sizes = match (context_len, horizon) {
                (Some(l), Some(t)) => vec![[l, t]],
                _ => eq.sizes.clone(),
            };
            let seed = match &common.seeds {
                Some(s) => s.first().copied().unwrap_or(eq.seed),
                None => eq.seed,
            };
            let summary = cmd_equivalence(&sizes, trials.unwrap_or(eq.trials), seed);
            print!("{}", summary.render());
            dump::write_text(&out.join("equivalence.csv"), &summary.to_csv())?;
            Ok(if summary.passed() {
                ExitCode::SUCCESS
            } else {
                ExitCode::FAILURE
            })
        }
        Command::Convergence {
            common,
            dataset,
            context_len,
            horizon,
            epochs,
            lr,
        } => {
            let (mut cfg, out) = setup(&common)?;
            let cc = &mut cfg.convergence;
            if let Some(d) = dataset {
                cc.dataset = d;
            }
            if let Some(l) = context_len {
                cc.context_len = l;
            }
            if let Some(t) = horizon {
                cc.horizon = t;
            }
            if let Some(e) = epochs {
                cc.epochs = e;
            }
            if let Some(r) = lr {
                cc.lr = r;
            }
            if common.seeds.is_none() && common.config.is_none() {
                cfg.seeds = vec![0];
            }
            let summary = cmd_convergence(&cfg, &out)?;
            print!("{}", summary.render());
            Ok(ExitCode::SUCCESS)
        }
        Command::FitsBias {
            common,
            context_len,
            horizon,
        } => {
            let (cfg, out) = setup(&common)?;
            let l = context_len.unwrap_or(cfg.fits_bias.context_len);
            let t = horizon.unwrap_or(cfg.fits_bias.horizon);
            if l % 2 != 0 || t % 2 != 0 || l == 0 || t == 0 {
                eprintln!("error: fits-bias needs even, nonzero L and T (got L = {l}, T = {t})");
                return Ok(ExitCode::from(2));
            }
            let report = cmd_fits_bias_report(l, t, cfg.fits_bias.steps)?;
            print!("{}", report.render());
            fits_bias::write_report(&report, &out)?;
            Ok(ExitCode::SUCCESS)
        }
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    match run(Cli::parse()) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::FAILURE
        }
    }
}
