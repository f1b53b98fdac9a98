//! The six-transfer benchmark: two pendulum, two RNN and two unicycle
//! problems, each solved by all three methods.

use std::fmt::Write as _;
use std::path::Path;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use serde_json::Value;

use crate::config::{MethodName, RunConfig};
use crate::error::CliError;
use crate::run::{run_transfer, RunOutput};

pub const BENCHMARK_CSV: &str = "benchmark.csv";
pub const BENCHMARK_DAT: &str = "benchmark.dat";
pub const FAILURES_FILE: &str = "failures.txt";

const BUILTIN_SUITE: &str = include_str!("../configs/bench.json");

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SuiteProblem {
    pub name: String,
    /// A run config without `method`; every method is run on it.
    pub config: Value,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Suite {
    pub problems: Vec<SuiteProblem>,
}

#[derive(Debug, Clone)]
pub struct Job {
    pub problem: String,
    pub method: MethodName,
    pub config: RunConfig,
}

impl Suite {
    pub fn builtin() -> Self {
        serde_json::from_str(BUILTIN_SUITE).expect("shipped suite parses")
    }

    pub fn from_path(path: &Path) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path).map_err(|e| CliError::io(path, e))?;
        serde_json::from_str(&text).map_err(|e| CliError::schema("problems", e.to_string()))
    }

    pub fn jobs(&self, grid_n: Option<usize>, tol: Option<f64>) -> Result<Vec<Job>, CliError> {
        let mut jobs = Vec::new();
        for p in &self.problems {
            for method in MethodName::ALL {
                let mut value = p.config.clone();
                let Some(obj) = value.as_object_mut() else {
                    return Err(CliError::schema(format!("problems.{}", p.name), "config must be an object"));
                };
                obj.insert("method".into(), Value::String(method.as_str().into()));
                let config = RunConfig::from_value(value).and_then(|c| c.with_overrides(grid_n, tol)).map_err(|e| match e {
                    CliError::Schema { key, reason } => CliError::schema(format!("problems.{}.{key}", p.name), reason),
                    other => other,
                })?;
                jobs.push(Job { problem: p.name.clone(), method, config });
            }
        }
        Ok(jobs)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BenchRow {
    pub problem: String,
    pub method: String,
    pub energy: f64,
    pub sup_norm: f64,
    pub terminal_error: f64,
    pub iterations: usize,
}

#[derive(Debug)]
pub struct JobResult {
    pub problem: String,
    pub method: MethodName,
    pub outcome: Result<RunOutput, CliError>,
}

#[derive(Debug)]
pub struct BenchOutcome {
    pub rows: Vec<BenchRow>,
    pub runs: Vec<JobResult>,
    /// `problem/method: message` for runs that failed or did not converge.
    pub failures: Vec<String>,
    pub exit_code: i32,
}

/// Runs every job on a pool of `threads` workers (all cores when `None`).
/// Each job writes into `out/<problem>/<method>/`; the summary table and the
/// plot data are written once all jobs are done.
pub fn run_benchmark(
    suite: &Suite,
    out: &Path,
    grid_n: Option<usize>,
    tol: Option<f64>,
    threads: Option<usize>,
) -> Result<BenchOutcome, CliError> {
    let jobs = suite.jobs(grid_n, tol)?;
    std::fs::create_dir_all(out).map_err(|e| CliError::io(out, e))?;
    let mut pool = rayon::ThreadPoolBuilder::new();
    if let Some(n) = threads {
        pool = pool.num_threads(n.max(1));
    }
    let pool = pool.build().map_err(|e| CliError::io(out, std::io::Error::other(e)))?;
    let runs: Vec<JobResult> = pool.install(|| {
        jobs.par_iter()
            .map(|job| JobResult {
                problem: job.problem.clone(),
                method: job.method,
                outcome: run_transfer(&job.config, &out.join(&job.problem).join(job.method.as_str())),
            })
            .collect()
    });

    let mut rows = Vec::new();
    let mut failures = Vec::new();
    let mut exit_code = 0;
    for run in &runs {
        let label = format!("{}/{}", run.problem, run.method.as_str());
        match &run.outcome {
            Ok(output) if output.converged() => {
                let r = &output.synthesis;
                rows.push(BenchRow {
                    problem: run.problem.clone(),
                    method: run.method.as_str().into(),
                    energy: r.energy,
                    sup_norm: r.sup_norm,
                    terminal_error: r.terminal_error,
                    iterations: r.iterations,
                });
            }
            Ok(output) => {
                failures.push(format!("{label}: {}", output.report.error.as_deref().unwrap_or("did not converge")));
                exit_code = if exit_code == 0 { output.report.exit_code } else { exit_code };
            }
            Err(e) => {
                failures.push(format!("{label}: {e}"));
                exit_code = if exit_code == 0 { e.exit_code() } else { exit_code };
            }
        }
    }

    let mut w = csv::Writer::from_path(out.join(BENCHMARK_CSV))?;
    for row in &rows {
        w.serialize(row)?;
    }
    w.flush().map_err(|e| CliError::io(out.join(BENCHMARK_CSV), e))?;
    let dat = out.join(BENCHMARK_DAT);
    std::fs::write(&dat, plot_data(suite, &rows)).map_err(|e| CliError::io(&dat, e))?;
    let failures_path = out.join(FAILURES_FILE);
    if failures.is_empty() {
        let _ = std::fs::remove_file(&failures_path);
    } else {
        std::fs::write(&failures_path, failures.join("\n") + "\n").map_err(|e| CliError::io(&failures_path, e))?;
    }
    Ok(BenchOutcome { rows, runs, failures, exit_code })
}

/// Whitespace-separated table for gnuplot: one line per problem with the
/// energies and sup-norms of the three methods (`NaN` for failed runs).
pub fn plot_data(suite: &Suite, rows: &[BenchRow]) -> String {
    let mut s = String::new();
    s.push_str("# energy (left panel) and sup-norm (right panel) of the steering controls, log scale\n");
    s.push_str(
        "# set logscale y; plot 'benchmark.dat' using 1:3:xtic(2) w lp t 'min_energy', '' u 1:4 w lp t 'gramian', '' u 1:5 w lp t 'fl'\n",
    );
    s.push_str("# index problem energy_min_energy energy_gramian energy_fl sup_min_energy sup_gramian sup_fl\n");
    for (i, p) in suite.problems.iter().enumerate() {
        let find = |m: MethodName| rows.iter().find(|r| r.problem == p.name && r.method == m.as_str());
        let _ = write!(s, "{i} {}", p.name);
        for m in MethodName::ALL {
            let _ = write!(s, " {}", find(m).map_or(f64::NAN, |r| r.energy));
        }
        for m in MethodName::ALL {
            let _ = write!(s, " {}", find(m).map_or(f64::NAN, |r| r.sup_norm));
        }
        s.push('\n');
    }
    s
}

/// Worker count from `STEER_THREADS`; `None` (all cores) when unset or invalid.
pub fn threads_from_env() -> Option<usize> {
    std::env::var("STEER_THREADS").ok()?.trim().parse().ok().filter(|&n: &usize| n > 0)
}
