use std::fs;
use std::path::{Path, PathBuf};

use anyhow::Context;
use itertools::Itertools;
use nalgebra::DMatrix;

use shortdot_core::bounds::{budget_gap_exact, check_achievability, lambda_cap, tight_lower_bound};
use shortdot_core::experiments::{
    cluster_experiment, sweep_csv, sweep_plot_script, theorem4_csv, SweepConfig,
};
use shortdot_core::io::{load_transform, read_matrix_csv, read_vector_csv, save_transform, write_vector_csv};
use shortdot_core::latency::{expected_time_short_dot, monte_carlo_with, optimize_k, theorem4_regime};
use shortdot_core::strategies::plan_short_dot;
use shortdot_core::{
    basic_lower_bound, build_generator, decode, decode_with_errors, encode as encode_matrix, CodeParams,
    GeneratorSpec, StrategyId, WorkerOutput,
};

use crate::config::{parse_index_list, parse_range, usage, CheckFailed, Settings};

fn write_file(path: &Path, text: &str) -> anyhow::Result<()> {
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        fs::create_dir_all(dir).with_context(|| format!("creating {}", dir.display()))?;
    }
    fs::write(path, text).with_context(|| format!("writing {}", path.display()))
}

/// Resolves K, optimizing the expected Short-Dot time for "auto".
fn resolve_k(settings: &Settings, p: usize, m: usize, n: usize) -> anyhow::Result<usize> {
    match settings.k()? {
        Some(k) => Ok(k),
        None => {
            let padded = CodeParams::new(p, m, m, n)?.n();
            Ok(optimize_k(p, m, padded as f64, &settings.model()?)?.0)
        }
    }
}

fn generator_spec(settings: &Settings, flag: Option<String>) -> anyhow::Result<GeneratorSpec> {
    match settings.get::<String>("generator", flag)?.as_deref().unwrap_or("chebyshev") {
        "chebyshev" => Ok(GeneratorSpec::Chebyshev),
        "gaussian" => Ok(GeneratorSpec::Gaussian(settings.seed(0)?)),
        other => Err(usage(format!("unknown generator {other:?}; use chebyshev or gaussian"))),
    }
}

pub fn encode(settings: &Settings, a: Option<PathBuf>, generator: Option<String>) -> anyhow::Result<()> {
    let a_path: PathBuf = settings.require("a", a)?;
    let a = read_matrix_csv(&a_path).with_context(|| format!("reading {}", a_path.display()))?;
    let (m, n_raw) = (a.nrows(), a.ncols());
    if let Some(flag_m) = settings.m()?.filter(|&v| v != m) {
        return Err(usage(format!("--m {flag_m} disagrees with A, which has {m} rows")));
    }
    if let Some(flag_n) = settings.n()?.filter(|&v| v != n_raw) {
        return Err(usage(format!("--n {flag_n} disagrees with A, which has {n_raw} columns")));
    }
    let p = settings.p()?;
    let k = resolve_k(settings, p, m, n_raw)?;
    let params = CodeParams::new(p, k, m, n_raw)?;
    let b = build_generator(&params, &generator_spec(settings, generator)?)?;
    let code = encode_matrix(&a, &b, &params)?;
    let out = settings.out()?.unwrap_or_else(|| PathBuf::from("code"));
    save_transform(&out, &code).with_context(|| format!("writing {}", out.display()))?;

    let counts: Vec<usize> = (0..p)
        .map(|i| code.f().row(i).iter().filter(|v| **v != 0.0).count())
        .collect();
    println!("{params}");
    println!("sparsity budget s = {}", params.sparsity());
    println!(
        "nonzeros per row: max {}, mean {:.3}",
        counts.iter().max().unwrap_or(&0),
        counts.iter().sum::<usize>() as f64 / p as f64
    );
    println!("wrote {}", out.display());
    Ok(())
}

pub fn transform(
    settings: &Settings,
    code: Option<PathBuf>,
    x: Option<PathBuf>,
    responders: Option<String>,
    max_errors: Option<usize>,
    corrupt: Option<String>,
) -> anyhow::Result<()> {
    let dir: PathBuf = settings.require("code", code)?;
    let x_path: PathBuf = settings.require("x", x)?;
    let code = load_transform(&dir).with_context(|| format!("loading {}", dir.display()))?;
    let params = *code.params();
    let x = read_vector_csv(&x_path).with_context(|| format!("reading {}", x_path.display()))?;
    let mut outputs = code.compute_outputs(&x)?;

    if let Some(raw) = settings.get::<String>("corrupt", corrupt)? {
        for i in parse_index_list(&raw, params.p())? {
            // A deterministic, clearly wrong value.
            let v = outputs[i].value;
            outputs[i].value = v + (1.0 + v.abs()) * (1.0 + i as f64);
        }
    }

    let y = match settings.get("max_errors", max_errors)? {
        Some(e) => decode_with_errors(&outputs, e, code.generator(), &params)?,
        None => {
            let raw: String = settings
                .get("responders", responders)?
                .ok_or_else(|| usage("missing --responders (or --max-errors)"))?;
            let order = parse_index_list(&raw, params.p())?;
            let unique: Vec<usize> = order.into_iter().unique().collect();
            if unique.len() < params.k() {
                return Err(usage(format!(
                    "need at least K={} distinct responders, got {}",
                    params.k(),
                    unique.len()
                )));
            }
            let chosen: Vec<WorkerOutput> = unique[..params.k()].iter().map(|&i| outputs[i]).collect();
            decode(&chosen, code.generator(), &params)?
        }
    };

    match settings.out()? {
        Some(path) => {
            write_vector_csv(&path, &y).with_context(|| format!("writing {}", path.display()))?;
            println!("wrote {}", path.display());
        }
        None => {
            for v in &y {
                println!("{v}");
            }
        }
    }
    Ok(())
}

pub fn sweep(settings: &Settings, m_range: Option<String>) -> anyhow::Result<()> {
    let p = settings.p()?;
    let n = settings.n()?.unwrap_or(10 * p);
    let mut cfg = SweepConfig::new(p, n, settings.model()?);
    if let Some(strategies) = settings.strategies()? {
        cfg.strategies = strategies;
    }
    if let Some(raw) = settings.get::<String>("m_range", m_range)? {
        let (lo, hi) = parse_range(&raw)?;
        cfg.m_values = (lo..=hi).collect();
    }
    cfg.trials = settings.trials(0)?;
    cfg.seed = settings.seed(1)?;
    cfg.threads = settings.threads();
    cfg.s = settings.s()?;
    if cfg.s.is_none() && cfg.strategies.contains(&StrategyId::ShortMds) {
        return Err(usage("short-mds needs the task length --s"));
    }

    let rows = shortdot_core::experiments::sweep(&cfg)?;
    let out = settings.out()?.unwrap_or_else(|| PathBuf::from("sweep.csv"));
    write_file(&out, &sweep_csv(&rows))?;
    let stem = out.file_stem().and_then(|s| s.to_str()).unwrap_or("sweep");
    let script = out.with_file_name(format!("{stem}.plot.py"));
    let csv_name = out.file_name().and_then(|s| s.to_str()).unwrap_or("sweep.csv");
    write_file(&script, &sweep_plot_script(csv_name, &format!("{stem}.png")))?;
    println!("{} rows over M = {}..={}", rows.len(), cfg.m_values[0], cfg.m_values[cfg.m_values.len() - 1]);
    println!("wrote {} and {}", out.display(), script.display());
    Ok(())
}

pub fn theorem4(settings: &Settings, p_values: Option<String>) -> anyhow::Result<()> {
    let raw: String = settings
        .get("p_values", p_values)?
        .unwrap_or_else(|| "1000,10000,100000,1000000".into());
    let ps = raw
        .split(',')
        .map(|v| v.trim().parse::<usize>().map_err(|_| usage(format!("bad processor count {v:?}"))))
        .collect::<anyhow::Result<Vec<_>>>()?;
    let rows = theorem4_regime(&ps, &settings.model()?)?;
    let text = format!(
        "# M = round(P / ln P), K = P - round(M / 2); closed-form expected times divided by N\n{}",
        theorem4_csv(&rows)
    );
    if let Some(path) = settings.out()? {
        write_file(&path, &text)?;
    }
    print!("{text}");
    Ok(())
}

pub fn bounds(settings: &Settings, a: Option<PathBuf>) -> anyhow::Result<()> {
    let matrix = settings.get::<PathBuf>("a", a)?.map(|path| read_matrix_csv(&path).with_context(|| format!("reading {}", path.display())))
        .transpose()?;
    let (m, n_raw) = match &matrix {
        Some(a) => (a.nrows(), a.ncols()),
        None => (
            settings.m()?.ok_or_else(|| usage("missing --m"))?,
            settings.n()?.ok_or_else(|| usage("missing --n"))?,
        ),
    };
    let p = settings.p()?;
    let k = resolve_k(settings, p, m, n_raw)?;
    let params = CodeParams::new(p, k, m, n_raw)?;
    let n = params.n();

    let mut lines = vec![
        format!("{params}"),
        format!("short_dot_budget = {}", params.sparsity()),
        format!("basic_lower_bound = {}", basic_lower_bound(n, p, k)),
    ];
    if m > 1 {
        let gap = budget_gap_exact(p, k, m);
        lines.push(format!("tight_lower_bound = {}", tight_lower_bound(n, p, k, m)?));
        lines.push(format!("budget_minus_tight = {gap} (= M^2 C(P, K-M+1) / P)"));
    } else {
        lines.push("tight_lower_bound = n/a (requires M > 1; the basic bound is tight)".into());
    }
    lines.push(format!("lambda_cap = {}", lambda_cap(p, k, m)?));

    if let Some(a) = matrix {
        let b = build_generator(&params, &GeneratorSpec::Chebyshev)?;
        let report = check_achievability(&encode_matrix(&a, &b, &params)?)?;
        lines.push(format!("achieved_avg_sparsity = {}", report.achieved_avg_sparsity));
        lines.push(format!("achieved_max_sparsity = {}", report.achieved_max_sparsity));
        lines.push(format!("max_column_zeros = {}", report.max_column_zeros));
        lines.push(format!("gap_ratio = {:e}", report.gap_ratio));
        lines.push(format!("asymptotic_condition_met = {}", report.asymptotic_condition_met));
        if let Some(w) = report.warning {
            lines.push(format!("warning = {w}"));
        }
    }
    let text = lines.join("\n") + "\n";
    if let Some(path) = settings.out()? {
        write_file(&path, &text)?;
    }
    print!("{text}");
    Ok(())
}

pub fn experiment_sec6(settings: &Settings) -> anyhow::Result<()> {
    let model = settings.model()?;
    let trials = settings.trials(1_000_000)?;
    let seed = settings.seed(1)?;
    let report = cluster_experiment(&model, trials, seed, settings.threads())?;
    println!("# simulated: shifted-exponential model (mu = {}), not wall-clock measurements", model.mu());
    println!("# {}, {trials} trials, seed {seed}", report.params);
    println!("{:<10} {:>3} {:>12} {:>12} {:>10}", "strategy", "K", "analytic", "simulated", "stderr");
    for r in &report.rows {
        println!(
            "{:<10} {:>3} {:>12.3} {:>12.3} {:>10.4}",
            r.strategy.name(),
            r.k,
            r.analytic,
            r.mc_mean,
            r.mc_stderr
        );
    }
    if let Some(path) = settings.out()? {
        write_file(&path, &report.to_csv())?;
    }
    let analytic = report.analytic_ordering_holds();
    let simulated = report.simulated_ordering_holds();
    println!("ordering short-dot < uncoded < mds: analytic {analytic}, simulated {simulated}");
    if analytic && simulated {
        Ok(())
    } else {
        Err(CheckFailed("expected ordering short-dot < uncoded < mds does not hold".into()).into())
    }
}

/// Smooth deterministic test data.
fn test_matrix(rows: usize, cols: usize, phase: f64) -> DMatrix<f64> {
    DMatrix::from_fn(rows, cols, |i, j| (phase + 0.7 * i as f64 + 1.3 * j as f64).sin())
}

fn max_rel(got: &[f64], want: &[f64]) -> f64 {
    let scale = want.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    got.iter().zip(want).fold(0.0f64, |m, (g, w)| m.max((g - w).abs())) / scale
}

pub fn selftest(settings: &Settings) -> anyhow::Result<()> {
    let mut failures = Vec::new();
    let mut check = |name: &str, ok: anyhow::Result<bool>| {
        let ok = match ok {
            Ok(v) => v,
            Err(e) => {
                println!("  error in {name}: {e:#}");
                false
            }
        };
        println!("{} {name}", if ok { "ok    " } else { "FAILED" });
        if !ok {
            failures.push(name.to_string());
        }
    };

    check("any 5 of 6 workers recover A x", (|| {
        let params = CodeParams::new(6, 5, 3, 12)?;
        let a = test_matrix(3, 12, 0.1);
        let x: Vec<f64> = (0..12).map(|j| (0.3 * j as f64).cos()).collect();
        let truth: Vec<f64> = (0..3).map(|i| (0..12).map(|j| a[(i, j)] * x[j]).sum()).collect();
        let b = build_generator(&params, &GeneratorSpec::Chebyshev)?;
        let outputs = encode_matrix(&a, &b, &params)?.compute_outputs(&x)?;
        let mut worst: f64 = 0.0;
        for subset in (0..6).combinations(5) {
            let chosen: Vec<WorkerOutput> = subset.iter().map(|&i| outputs[i]).collect();
            worst = worst.max(max_rel(&decode(&chosen, &b, &params)?, &truth));
        }
        Ok(worst <= 1e-8)
    })());

    check("one corrupted output is corrected", (|| {
        let params = CodeParams::new(6, 4, 2, 12)?;
        let a = test_matrix(2, 12, 0.4);
        let x: Vec<f64> = (0..12).map(|j| (0.5 * j as f64).sin()).collect();
        let truth: Vec<f64> = (0..2).map(|i| (0..12).map(|j| a[(i, j)] * x[j]).sum()).collect();
        let b = build_generator(&params, &GeneratorSpec::Chebyshev)?;
        let mut outputs = encode_matrix(&a, &b, &params)?.compute_outputs(&x)?;
        outputs[2].value += 3.0;
        Ok(max_rel(&decode_with_errors(&outputs, 1, &b, &params)?, &truth) <= 1e-8)
    })());

    check("Monte Carlo matches the order-statistic mean", (|| {
        let params = CodeParams::new(6, 5, 3, 12)?;
        let model = settings.model()?;
        let analytic = expected_time_short_dot(&params, &model);
        let plan = plan_short_dot(&params);
        let one = monte_carlo_with(&plan, &model, 100_000, 7, Some(1))?;
        let many = monte_carlo_with(&plan, &model, 100_000, 7, Some(4))?;
        Ok(one.mc_mean.to_bits() == many.mc_mean.to_bits() && (one.mc_mean - analytic).abs() <= 0.01 * analytic)
    })());

    check("bound gap is exact", (|| Ok(budget_gap_exact(6, 5, 3).to_string() == "30"))());

    if failures.is_empty() {
        println!("selftest passed");
        Ok(())
    } else {
        Err(CheckFailed(format!("selftest failed: {}", failures.join(", "))).into())
    }
}
