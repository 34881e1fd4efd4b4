//! Parameter sweeps and comparison tables built from the latency models.

use std::fmt::Write as _;

use crate::error::{Error, Result};
use crate::latency::{
    analytic_expected, mds_time, monte_carlo_with, optimize_k, repetition_time, uncoded_time, DelayModel,
    Theorem4Row,
};
use crate::params::CodeParams;
use crate::strategies::{plan_for, StrategyId, TaskPlan};

#[derive(Clone, Debug, PartialEq)]
pub struct SweepConfig {
    pub p: usize,
    pub n: usize,
    pub model: DelayModel,
    pub m_values: Vec<usize>,
    pub strategies: Vec<StrategyId>,
    /// Zero skips the simulation columns.
    pub trials: usize,
    pub seed: u64,
    pub threads: Option<usize>,
    /// Block length for short-mds.
    pub s: Option<usize>,
}

impl SweepConfig {
    /// All strategies except short-mds over `M = 1..=P`, analytic only.
    pub fn new(p: usize, n: usize, model: DelayModel) -> Self {
        SweepConfig {
            p,
            n,
            model,
            m_values: (1..=p).collect(),
            strategies: vec![StrategyId::Uncoded, StrategyId::Repetition, StrategyId::Mds, StrategyId::ShortDot],
            trials: 0,
            seed: 0,
            threads: None,
            s: None,
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct SweepRow {
    pub m: usize,
    pub strategy: StrategyId,
    pub analytic: f64,
    pub mc_mean: Option<f64>,
    pub mc_stderr: Option<f64>,
    /// Worst-case recovery threshold of the plan that was evaluated.
    pub k_used: usize,
}

/// Plan and analytic expectation for one strategy at one M. Short-Dot uses
/// the optimized recovery threshold.
fn evaluate(strategy: StrategyId, base: &CodeParams, m: usize, cfg: &SweepConfig) -> Result<(TaskPlan, f64)> {
    let params = CodeParams::new(base.p(), m, m, base.n_raw())?;
    let (p, n) = (params.p(), params.n() as f64);
    let model = &cfg.model;
    Ok(match strategy {
        StrategyId::Uncoded => (plan_for(strategy, &params, None)?, uncoded_time(p, m, n, model)?),
        StrategyId::Repetition => (plan_for(strategy, &params, None)?, repetition_time(p, m, n, model)?),
        StrategyId::Mds => (plan_for(strategy, &params, None)?, mds_time(p, m, n, model)),
        StrategyId::ShortMds => {
            let plan = plan_for(strategy, &params, cfg.s)?;
            let e = analytic_expected(&plan, model)
                .ok_or_else(|| Error::Integration("short-mds plan does not factorize".into()))?;
            (plan, e)
        }
        StrategyId::ShortDot => {
            let (k, e) = optimize_k(p, m, n, model)?;
            (plan_for(strategy, &params.with_k(k)?, None)?, e)
        }
    })
}

/// One row per `(M, strategy)`. Short-MDS rows are skipped where its groups
/// are too small for M.
pub fn sweep(cfg: &SweepConfig) -> Result<Vec<SweepRow>> {
    let base = CodeParams::new(cfg.p, 1, 1, cfg.n)?;
    let mut rows = Vec::with_capacity(cfg.m_values.len() * cfg.strategies.len());
    for &m in &cfg.m_values {
        if m == 0 || m > cfg.p {
            return Err(Error::params(format!("M={m} outside 1..=P (P={})", cfg.p)));
        }
        for &strategy in &cfg.strategies {
            let (plan, analytic) = match evaluate(strategy, &base, m, cfg) {
                Ok(v) => v,
                Err(Error::InvalidParams(_)) if strategy == StrategyId::ShortMds => continue,
                Err(e) => return Err(e),
            };
            let (mc_mean, mc_stderr) = if cfg.trials > 0 {
                let r = monte_carlo_with(&plan, &cfg.model, cfg.trials, cfg.seed, cfg.threads)?;
                (Some(r.mc_mean), Some(r.mc_stderr))
            } else {
                (None, None)
            };
            rows.push(SweepRow {
                m,
                strategy,
                analytic,
                mc_mean,
                mc_stderr,
                k_used: plan.worst_case_threshold(),
            });
        }
    }
    Ok(rows)
}

fn opt(v: Option<f64>) -> String {
    v.map(|x| x.to_string()).unwrap_or_default()
}

pub fn sweep_csv(rows: &[SweepRow]) -> String {
    let mut out = String::from("M,strategy,analytic_E,mc_mean,mc_stderr,K_used\n");
    for r in rows {
        let _ = writeln!(
            out,
            "{},{},{},{},{},{}",
            r.m,
            r.strategy,
            r.analytic,
            opt(r.mc_mean),
            opt(r.mc_stderr),
            r.k_used
        );
    }
    out
}

/// Standalone matplotlib script that plots `analytic_E` against M per
/// strategy from the named CSV file.
pub fn sweep_plot_script(csv_file: &str, png_file: &str) -> String {
    format!(
        r#"import csv
from collections import defaultdict

import matplotlib
matplotlib.use("Agg")
import matplotlib.pyplot as plt

series = defaultdict(lambda: ([], []))
with open({csv_file:?}, newline="") as fh:
    for row in csv.DictReader(fh):
        xs, ys = series[row["strategy"]]
        xs.append(int(row["M"]))
        ys.append(float(row["analytic_E"]))

for name, (xs, ys) in sorted(series.items()):
    plt.plot(xs, ys, label=name)
plt.xlabel("M (rows of A)")
plt.ylabel("expected computation time")
plt.legend()
plt.savefig({png_file:?}, dpi=150)
"#
    )
}

pub fn theorem4_csv(rows: &[Theorem4Row]) -> String {
    let mut out = String::from("P,M,K,E_SD_over_N,E_MDS_over_N,E_uncoded_over_N,E_rep_over_N,ratio\n");
    for r in rows {
        let _ = writeln!(
            out,
            "{},{},{},{},{},{},{},{}",
            r.p, r.m, r.k, r.short_dot, r.mds, r.uncoded, r.repetition, r.ratio
        );
    }
    out
}

/// Twenty processors computing ten dot products of length 785 (padded to
/// 800), Short-Dot with K = 18.
pub const CLUSTER_P: usize = 20;
pub const CLUSTER_K: usize = 18;
pub const CLUSTER_M: usize = 10;
pub const CLUSTER_N: usize = 785;

#[derive(Clone, Debug, PartialEq)]
pub struct ClusterRow {
    pub strategy: StrategyId,
    pub k: usize,
    pub analytic: f64,
    pub mc_mean: f64,
    pub mc_stderr: f64,
}

#[derive(Clone, Debug, PartialEq)]
pub struct ClusterReport {
    pub params: CodeParams,
    /// Short-Dot, uncoded, MDS in that order.
    pub rows: Vec<ClusterRow>,
    pub trials: usize,
    pub seed: u64,
}

impl ClusterReport {
    /// Short-Dot < uncoded < MDS.
    pub fn analytic_ordering_holds(&self) -> bool {
        self.rows[0].analytic < self.rows[1].analytic && self.rows[1].analytic < self.rows[2].analytic
    }

    pub fn simulated_ordering_holds(&self) -> bool {
        self.rows[0].mc_mean < self.rows[1].mc_mean && self.rows[1].mc_mean < self.rows[2].mc_mean
    }

    pub fn to_csv(&self) -> String {
        let mut out = String::from("# simulated\nstrategy,K,analytic_E,mc_mean,mc_stderr\n");
        for r in &self.rows {
            let _ = writeln!(out, "{},{},{},{},{}", r.strategy, r.k, r.analytic, r.mc_mean, r.mc_stderr);
        }
        out
    }
}

/// Simulated Short-Dot, uncoded and MDS finish times on the cluster setup.
pub fn cluster_experiment(
    model: &DelayModel,
    trials: usize,
    seed: u64,
    threads: Option<usize>,
) -> Result<ClusterReport> {
    let params = CodeParams::new(CLUSTER_P, CLUSTER_K, CLUSTER_M, CLUSTER_N)?;
    let n = params.n() as f64;
    let cases = [
        (StrategyId::ShortDot, CLUSTER_K, crate::latency::expected_time_short_dot(&params, model)),
        (StrategyId::Uncoded, CLUSTER_P, uncoded_time(CLUSTER_P, CLUSTER_M, n, model)?),
        (StrategyId::Mds, CLUSTER_M, mds_time(CLUSTER_P, CLUSTER_M, n, model)),
    ];
    let rows = cases
        .into_iter()
        .map(|(strategy, k, analytic)| {
            let plan = plan_for(strategy, &params, None)?;
            let r = monte_carlo_with(&plan, model, trials, seed, threads)?;
            Ok(ClusterRow { strategy, k, analytic, mc_mean: r.mc_mean, mc_stderr: r.mc_stderr })
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(ClusterReport { params, rows, trials, seed })
}
