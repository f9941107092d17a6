//! Runs the randomised equivalence checks at several sizes.

use std::fmt::Write as _;

use lintsf::analysis::suite::{self, CheckResult, SuiteConfig};

#[derive(Clone, Debug)]
pub struct SizeSummary {
    pub context_len: usize,
    pub horizon: usize,
    pub results: Vec<CheckResult>,
}

#[derive(Clone, Debug)]
pub struct EquivalenceSummary {
    pub sizes: Vec<SizeSummary>,
}

impl EquivalenceSummary {
    pub fn passed(&self) -> bool {
        self.sizes
            .iter()
            .all(|s| s.results.iter().all(|r| r.passed))
    }

    pub fn find(&self, context_len: usize, horizon: usize, name: &str) -> Option<&CheckResult> {
        self.sizes
            .iter()
            .find(|s| s.context_len == context_len && s.horizon == horizon)
            .and_then(|s| s.results.iter().find(|r| r.name == name))
    }

    /// One line per check: status, name, max deviation and tolerance.
    pub fn render(&self) -> String {
        let mut s = String::new();
        for size in &self.sizes {
            let _ = writeln!(s, "L={} T={}", size.context_len, size.horizon);
            for r in &size.results {
                let status = if r.passed { "pass" } else { "FAIL" };
                let _ = write!(
                    s,
                    "  {status} {:<34} max dev {:.3e} (tol {:.1e})",
                    r.name, r.max_deviation, r.tolerance
                );
                if !r.note.is_empty() {
                    let _ = write!(s, "  [{}]", r.note);
                }
                s.push('\n');
            }
        }
        let total: usize = self.sizes.iter().map(|s| s.results.len()).sum();
        let failed: usize = self
            .sizes
            .iter()
            .map(|s| s.results.iter().filter(|r| !r.passed).count())
            .sum();
        let _ = writeln!(s, "{} of {total} checks passed", total - failed);
        s
    }

    pub fn to_csv(&self) -> String {
        let mut s = String::from("context_len,horizon,check,passed,max_deviation,tolerance,note\n");
        for size in &self.sizes {
            for r in &size.results {
                let _ = writeln!(
                    s,
                    "{},{},{},{},{},{},\"{}\"",
                    size.context_len,
                    size.horizon,
                    r.name,
                    r.passed,
                    r.max_deviation,
                    r.tolerance,
                    r.note.replace('"', "'")
                );
            }
        }
        s
    }
}

pub fn cmd_equivalence(sizes: &[[usize; 2]], trials: usize, seed: u64) -> EquivalenceSummary {
    let sizes = sizes
        .iter()
        .map(|&[l, t]| SizeSummary {
            context_len: l,
            horizon: t,
            results: suite::run(&SuiteConfig {
                context_len: l,
                horizon: t,
                trials,
                seed,
            }),
        })
        .collect();
    EquivalenceSummary { sizes }
}
