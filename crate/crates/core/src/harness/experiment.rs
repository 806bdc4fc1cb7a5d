//! Replicated runs and CSV emission.
//!
//! Replication `r` of an experiment with base seed `b` draws its instance
//! from `derive_seed(b, r, Instance)`, its contexts and rewards from the
//! `Environment` stream and all privacy noise from the `Mechanism` stream.
//! Every policy in a replication therefore faces the same instance and the
//! same context sequence. Jobs run on a rayon pool and are collected in job
//! order, so output does not depend on the number of workers.

use std::fs::File;
use std::io::BufWriter;
use std::path::{Path, PathBuf};

use rayon::prelude::*;

use crate::dp::split_budget;
use crate::environment::generate_instance;
use crate::error::HarnessError;
use crate::harness::accuracy::{accuracy_report, calibrated_alpha, AccuracyReport};
use crate::harness::config::{format_epsilon, ExperimentConfig};
use crate::policy::{run, PolicyConfig, PolicyKind, Trajectory};
use crate::rng::{derive_seed, stream, Purpose};

/// Environment variable that overrides the configured output directory.
pub const OUT_DIR_ENV: &str = "DPBANDIT_OUT_DIR";

pub const TRAJECTORY_HEADER: [&str; 10] =
    ["policy", "epsilon", "replication", "t", "arm", "reward", "inst_regret", "cum_regret", "episode", "support_size"];
pub const SUMMARY_HEADER: [&str; 5] = ["policy", "epsilon", "replications", "mean_regret", "stderr_regret"];
pub const SUPPORT_HEADER: [&str; 13] = [
    "policy",
    "epsilon",
    "replication",
    "episode",
    "t",
    "lambda",
    "threshold",
    "s0_size",
    "s1_size",
    "contains_support",
    "false_positives",
    "cap",
    "cap_hit",
];
pub const ACCURACY_HEADER: [&str; 7] =
    ["policy", "epsilon", "episode", "alpha", "alpha_hat", "violation_rate", "estimates"];
pub const BUDGET_HEADER: [&str; 9] = [
    "policy",
    "epsilon",
    "replication",
    "epsilon_spent",
    "delta_spent",
    "within_budget",
    "support_estimations",
    "noise_draws",
    "sigma_b",
];

/// Float with 17 significant digits; `inf`, `-inf`, `nan` otherwise.
pub fn fmt_f64(x: f64) -> String {
    if x.is_finite() {
        format!("{x:.16e}")
    } else if x.is_nan() {
        "nan".to_string()
    } else if x > 0.0 {
        "inf".to_string()
    } else {
        "-inf".to_string()
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
struct Job {
    kind: PolicyKind,
    epsilon: f64,
    replication: usize,
}

#[derive(Debug, Clone)]
pub struct RunResult {
    pub kind: PolicyKind,
    pub epsilon: f64,
    pub replication: usize,
    pub support: Vec<usize>,
    pub s0: usize,
    /// α the accuracy metric is evaluated at.
    pub alpha: f64,
    pub trajectory: Trajectory,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SummaryRow {
    pub kind: PolicyKind,
    pub epsilon: f64,
    pub replications: usize,
    pub mean_regret: f64,
    pub stderr_regret: f64,
}

#[derive(Debug, Clone)]
pub struct ExperimentOutput {
    pub dir: PathBuf,
    pub runs: Vec<RunResult>,
    pub summary: Vec<SummaryRow>,
}

fn jobs(config: &ExperimentConfig) -> Vec<Job> {
    let mut out = Vec::new();
    let groups = config
        .epsilons
        .iter()
        .map(|&e| (PolicyKind::PrivateThresholdLasso, e))
        .chain(config.baselines.iter().map(|&k| (k, f64::INFINITY)));
    for (kind, epsilon) in groups {
        for replication in 0..config.replications {
            out.push(Job { kind, epsilon, replication });
        }
    }
    out
}

fn run_job(config: &ExperimentConfig, job: Job) -> Result<RunResult, HarnessError> {
    let r = job.replication as u64;
    let mut params = config.instance.clone();
    params.seed = derive_seed(config.seed, r, Purpose::Instance);
    let instance = generate_instance(&params)?;
    let policy = PolicyConfig { epsilon: job.epsilon, ..config.policy.clone() };
    let mut env = stream(config.seed, r, Purpose::Environment);
    let mut mech = stream(config.seed, r, Purpose::Mechanism);
    let trajectory = run(job.kind, &policy, &instance, config.horizon, &mut env, &mut mech)?;
    let alpha = match (config.alpha, &trajectory.svt) {
        (Some(a), _) => a,
        (None, Some(svt)) => {
            let eps = if job.kind == PolicyKind::PrivateThresholdLasso { job.epsilon } else { f64::INFINITY };
            calibrated_alpha(&split_budget(eps, policy.delta, config.horizon.max(2))?, svt, instance.s0)
        }
        (None, None) => 0.0,
    };
    Ok(RunResult {
        kind: job.kind,
        epsilon: job.epsilon,
        replication: job.replication,
        support: instance.support.clone(),
        s0: instance.s0,
        alpha,
        trajectory,
    })
}

/// Runs every (policy, ε, replication) job. `threads = None` uses rayon's
/// global pool.
pub fn simulate(config: &ExperimentConfig, threads: Option<usize>) -> Result<Vec<RunResult>, HarnessError> {
    let jobs = jobs(config);
    let work = || jobs.par_iter().map(|&j| run_job(config, j)).collect::<Result<Vec<_>, _>>();
    match threads {
        Some(n) => rayon::ThreadPoolBuilder::new()
            .num_threads(n.max(1))
            .build()
            .map_err(|e| HarnessError::Config(format!("cannot build worker pool: {e}")))?
            .install(work),
        None => work(),
    }
}

pub fn mean_stderr(xs: &[f64]) -> (f64, f64) {
    let n = xs.len();
    if n == 0 {
        return (f64::NAN, f64::NAN);
    }
    let mean = xs.iter().sum::<f64>() / n as f64;
    if n == 1 {
        return (mean, 0.0);
    }
    let var = xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1) as f64;
    (mean, (var / n as f64).sqrt())
}

/// Per-(policy, ε) mean and standard error of the total regret, in job order.
pub fn summarize(runs: &[RunResult]) -> Vec<SummaryRow> {
    let mut rows: Vec<SummaryRow> = Vec::new();
    let mut i = 0;
    while i < runs.len() {
        let (kind, epsilon) = (runs[i].kind, runs[i].epsilon);
        let mut j = i;
        while j < runs.len() && runs[j].kind == kind && runs[j].epsilon == epsilon {
            j += 1;
        }
        let totals: Vec<f64> = runs[i..j].iter().map(|r| r.trajectory.total_regret()).collect();
        let (mean_regret, stderr_regret) = mean_stderr(&totals);
        rows.push(SummaryRow { kind, epsilon, replications: j - i, mean_regret, stderr_regret });
        i = j;
    }
    rows
}

/// Per-(policy, ε, episode) accuracy over replications, in job order.
pub fn accuracy_rows(runs: &[RunResult]) -> Vec<(PolicyKind, f64, u32, AccuracyReport)> {
    let mut rows = Vec::new();
    let mut i = 0;
    while i < runs.len() {
        let (kind, epsilon) = (runs[i].kind, runs[i].epsilon);
        let mut j = i;
        while j < runs.len() && runs[j].kind == kind && runs[j].epsilon == epsilon {
            j += 1;
        }
        let group = &runs[i..j];
        let episodes = group.iter().map(|r| r.trajectory.snapshots.len()).max().unwrap_or(0);
        for ep in 0..episodes {
            let estimates: Vec<_> = group.iter().filter_map(|r| r.trajectory.snapshots.get(ep)).collect();
            let alpha = group[0].alpha;
            let report = accuracy_report(estimates.iter().copied(), alpha);
            rows.push((kind, epsilon, estimates[0].episode, report));
        }
        i = j;
    }
    rows
}

fn writer(dir: &Path, name: &str) -> Result<csv::Writer<BufWriter<File>>, HarnessError> {
    let file = File::create(dir.join(name))?;
    Ok(csv::Writer::from_writer(BufWriter::new(file)))
}

/// Writes trajectory.csv, summary.csv, support.csv, accuracy.csv,
/// budget.csv and the resolved config.txt into `dir`.
pub fn write_outputs(dir: &Path, config: &ExperimentConfig, runs: &[RunResult]) -> Result<Vec<SummaryRow>, HarnessError> {
    std::fs::create_dir_all(dir)?;
    std::fs::write(dir.join("config.txt"), config.to_text())?;

    let mut w = writer(dir, "trajectory.csv")?;
    w.write_record(TRAJECTORY_HEADER)?;
    for run in runs {
        let eps = format_epsilon(run.epsilon);
        for r in &run.trajectory.rounds {
            w.write_record([
                run.kind.name().to_string(),
                eps.clone(),
                run.replication.to_string(),
                r.t.to_string(),
                r.arm.to_string(),
                fmt_f64(r.reward),
                fmt_f64(r.instant_regret),
                fmt_f64(r.cumulative_regret),
                r.episode.to_string(),
                r.support_size.to_string(),
            ])?;
        }
    }
    w.flush()?;

    let summary = summarize(runs);
    let mut w = writer(dir, "summary.csv")?;
    w.write_record(SUMMARY_HEADER)?;
    for row in &summary {
        w.write_record([
            row.kind.name().to_string(),
            format_epsilon(row.epsilon),
            row.replications.to_string(),
            fmt_f64(row.mean_regret),
            fmt_f64(row.stderr_regret),
        ])?;
    }
    w.flush()?;

    let mut w = writer(dir, "support.csv")?;
    w.write_record(SUPPORT_HEADER)?;
    for run in runs {
        for s in &run.trajectory.snapshots {
            let contains = run.support.iter().all(|i| s.s1_selected.binary_search(i).is_ok());
            let false_pos = s.s1_selected.iter().filter(|i| run.support.binary_search(i).is_err()).count();
            w.write_record([
                run.kind.name().to_string(),
                format_epsilon(run.epsilon),
                run.replication.to_string(),
                s.episode.to_string(),
                (1usize << s.episode).to_string(),
                fmt_f64(s.lambda),
                fmt_f64(s.threshold),
                s.s0_candidates.len().to_string(),
                s.s1_selected.len().to_string(),
                u8::from(contains).to_string(),
                false_pos.to_string(),
                s.cap.to_string(),
                u8::from(s.cap_hit).to_string(),
            ])?;
        }
    }
    w.flush()?;

    let mut w = writer(dir, "accuracy.csv")?;
    w.write_record(ACCURACY_HEADER)?;
    for (kind, eps, episode, rep) in accuracy_rows(runs) {
        w.write_record([
            kind.name().to_string(),
            format_epsilon(eps),
            episode.to_string(),
            fmt_f64(rep.alpha),
            fmt_f64(rep.alpha_hat),
            fmt_f64(rep.violation_rate),
            rep.estimates.to_string(),
        ])?;
    }
    w.flush()?;

    let mut w = writer(dir, "budget.csv")?;
    w.write_record(BUDGET_HEADER)?;
    for run in runs {
        let Some(report) = &run.trajectory.budget_report else { continue };
        w.write_record([
            run.kind.name().to_string(),
            format_epsilon(run.epsilon),
            run.replication.to_string(),
            fmt_f64(report.epsilon_spent),
            fmt_f64(report.delta_spent),
            u8::from(report.within_budget()).to_string(),
            run.trajectory.snapshots.iter().filter(|s| s.episode > 0).count().to_string(),
            run.trajectory.noise_draws.to_string(),
            fmt_f64(run.trajectory.sigma_b.unwrap_or(f64::NAN)),
        ])?;
    }
    w.flush()?;
    Ok(summary)
}

/// Simulates and writes all artifacts into `out_dir`.
pub fn run_experiment(
    config: &ExperimentConfig,
    out_dir: &Path,
    threads: Option<usize>,
) -> Result<ExperimentOutput, HarnessError> {
    let runs = simulate(config, threads)?;
    let nonconverged: usize = runs.iter().map(|r| r.trajectory.lasso_nonconverged).sum();
    if nonconverged > 0 {
        log::warn!("{nonconverged} lasso fits stopped at the iteration cap");
    }
    let summary = write_outputs(out_dir, config, &runs)?;
    Ok(ExperimentOutput { dir: out_dir.to_path_buf(), runs, summary })
}
