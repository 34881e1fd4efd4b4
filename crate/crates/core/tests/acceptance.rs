//! Acceptance suite: one line per criterion, non-zero exit if any fails.

use std::collections::HashMap;
use std::process::ExitCode;
use std::time::Instant;

use itertools::Itertools;
use nalgebra::{DMatrix, DVector};
use num_bigint::BigInt;
use num_rational::BigRational;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use shortdot_core::bounds::{basic_lower_bound, tight_lower_bound_exact};
use shortdot_core::experiments::{cluster_experiment, sweep, SweepConfig};
use shortdot_core::generator::{build_generator, chebyshev_nodes, GeneratorMatrix, GeneratorSpec};
use shortdot_core::latency::{expected_time_short_dot, monte_carlo, theorem4_regime, DelayModel};
use shortdot_core::strategies::{
    plan_mds, plan_repetition_block, plan_short_dot, plan_short_mds, plan_uncoded, thresholds, RecoveryRule,
    StrategyId, TaskPlan,
};
use shortdot_core::{
    decode, decode_with, decode_with_errors, encode, encode_with, CodeParams, EncodeOptions, SolveMethod,
    WorkerOutput,
};

struct Outcome {
    pass: bool,
    detail: String,
}

fn outcome(pass: bool, detail: impl Into<String>) -> Outcome {
    Outcome { pass, detail: detail.into() }
}

fn random_matrix(rng: &mut ChaCha8Rng, rows: usize, cols: usize) -> DMatrix<f64> {
    DMatrix::from_fn(rows, cols, |_, _| rng.random_range(-1.0..1.0))
}

fn random_vector(rng: &mut ChaCha8Rng, len: usize) -> Vec<f64> {
    (0..len).map(|_| rng.random_range(-1.0..1.0)).collect()
}

/// Dense `A x` with the raw (unpadded) input.
fn dense_product(a: &DMatrix<f64>, x: &[f64]) -> Vec<f64> {
    (a * DVector::from_column_slice(x)).as_slice().to_vec()
}

fn max_abs(v: impl IntoIterator<Item = f64>) -> f64 {
    v.into_iter().fold(0.0, |m, x| m.max(x.abs()))
}

fn relative_error(got: &[f64], want: &[f64]) -> f64 {
    let diff = max_abs(got.iter().zip(want).map(|(g, w)| g - w));
    diff / max_abs(want.iter().copied()).max(f64::MIN_POSITIVE)
}

/// Exact harmonic sum, independent of the library's implementation.
fn harmonic_sum(n: usize) -> f64 {
    (1..=n).map(|i| 1.0 / i as f64).sum()
}

/// Pascal-triangle binomial, independent of the library's implementation.
fn pascal(n: usize, r: usize) -> u128 {
    let mut row = vec![0u128; n + 1];
    row[0] = 1;
    for i in 1..=n {
        for j in (1..=i).rev() {
            row[j] += row[j - 1];
        }
    }
    row[r]
}

fn grid() -> Vec<(usize, usize, usize)> {
    let mut cells = Vec::new();
    for p in 3..=8 {
        for m in 1..=p {
            for k in m..=p {
                cells.push((p, k, m));
            }
        }
    }
    cells
}

/// 1. Every K-subset of responders decodes `A x` on the small grid.
fn recoverability() -> Outcome {
    let start = Instant::now();
    let results: Vec<(usize, f64, String)> = grid()
        .into_par_iter()
        .map(|(p, k, m)| {
            let mut rng = ChaCha8Rng::seed_from_u64((p * 100 + k * 10 + m) as u64);
            let params = CodeParams::new(p, k, m, 3 * p).unwrap();
            let b = build_generator(&params, &GeneratorSpec::Chebyshev).unwrap();
            let mut decodes = 0;
            let mut worst: f64 = 0.0;
            for _ in 0..20 {
                let a = random_matrix(&mut rng, m, 3 * p);
                let x = random_vector(&mut rng, 3 * p);
                let truth = dense_product(&a, &x);
                let code = match encode(&a, &b, &params) {
                    Ok(c) => c,
                    Err(e) => return (decodes, f64::INFINITY, format!("{params}: {e}")),
                };
                let outputs = code.compute_outputs(&x).unwrap();
                for subset in (0..p).combinations(k) {
                    let chosen: Vec<WorkerOutput> = subset.iter().map(|&i| outputs[i]).collect();
                    let err = match decode(&chosen, &b, &params) {
                        Ok(y) => relative_error(&y, &truth),
                        Err(_) => f64::INFINITY,
                    };
                    worst = worst.max(err);
                    decodes += 1;
                }
            }
            (decodes, worst, String::new())
        })
        .collect();
    let elapsed = start.elapsed().as_secs_f64();
    let decodes: usize = results.iter().map(|r| r.0).sum();
    let worst = results.iter().map(|r| r.1).fold(0.0, f64::max);
    let errors: Vec<&String> = results.iter().map(|r| &r.2).filter(|e| !e.is_empty()).collect();
    outcome(
        worst <= 1e-8 && elapsed < 120.0 && errors.is_empty(),
        format!(
            "{} cells, {decodes} decodes, max relative error {worst:.2e} (limit 1e-8), {elapsed:.1}s (limit 120s){}",
            grid().len(),
            errors.first().map(|e| format!(", first error {e}")).unwrap_or_default()
        ),
    )
}

/// 2. Row nonzeros within the budget, enough enforced zeros per column.
fn sparsity_budget() -> Outcome {
    let mut violations = Vec::new();
    let mut checked = 0;
    for (p, k, m) in grid() {
        let mut rng = ChaCha8Rng::seed_from_u64((p * 100 + k * 10 + m) as u64 + 7);
        let n = 3 * p;
        let params = CodeParams::new(p, k, m, n).unwrap();
        let b = build_generator(&params, &GeneratorSpec::Chebyshev).unwrap();
        let budget = n / p * (p - k + m);
        for _ in 0..20 {
            let f = encode(&random_matrix(&mut rng, m, n), &b, &params).unwrap().f().clone();
            let max_row = (0..p).map(|i| f.row(i).iter().filter(|v| **v != 0.0).count()).max().unwrap();
            let min_zeros = (0..n).map(|j| f.column(j).iter().filter(|v| **v == 0.0).count()).min().unwrap();
            if max_row > budget || min_zeros < k - m {
                violations.push(format!("{params}: row {max_row} > {budget} or zeros {min_zeros} < {}", k - m));
            }
            checked += 1;
        }
    }
    outcome(
        violations.is_empty(),
        format!(
            "{checked} codes checked, {} violations{}",
            violations.len(),
            violations.first().map(|v| format!(", first {v}")).unwrap_or_default()
        ),
    )
}

/// 3. Basic bound vs budget, and the exact tight-bound gap.
fn bounds_consistency() -> Outcome {
    let mut failures = Vec::new();
    let mut gaps = 0;
    for (p, k, m) in grid() {
        let n = 3 * p;
        let budget = (n / p * (p - k + m)) as f64;
        let basic = basic_lower_bound(n, p, k);
        if basic > budget || (basic == budget) != (m == 1) {
            failures.push(format!("P={p} K={k} M={m}: basic {basic} vs budget {budget}"));
        }
        if m > 1 {
            let tight = tight_lower_bound_exact(n, p, k, m).unwrap();
            let budget_exact = BigRational::new(BigInt::from(n * (p - k + m)), BigInt::from(p));
            let gap_oracle = BigRational::new(BigInt::from(m * m) * BigInt::from(pascal(p, k - m + 1)), BigInt::from(p));
            if budget_exact - tight != gap_oracle {
                failures.push(format!("P={p} K={k} M={m}: gap mismatch"));
            }
            gaps += 1;
        }
    }
    outcome(
        failures.is_empty(),
        format!(
            "{} cells, {gaps} exact gaps checked, {} failures{}",
            grid().len(),
            failures.len(),
            failures.first().map(|f| format!(", first {f}")).unwrap_or_default()
        ),
    )
}

/// Recovery structure of a plan as bitmasks: (group masks, needed per group).
#[derive(Clone, PartialEq, Eq, Hash)]
struct Structure {
    p: usize,
    groups: Vec<(u32, u32)>,
}

impl Structure {
    fn of(plan: &TaskPlan) -> Self {
        let p = plan.processors();
        let mask = |g: &[usize]| g.iter().fold(0u32, |acc, &i| acc | 1 << i);
        let groups = match plan.rule {
            RecoveryRule::All => (0..p).map(|i| (1u32 << i, 1)).collect(),
            RecoveryRule::KthOverall(k) => vec![(mask(&(0..p).collect::<Vec<_>>()), k as u32)],
            RecoveryRule::OnePerGroup => plan.groups.iter().map(|g| (mask(g), 1)).collect(),
            RecoveryRule::KPerGroupMds(k) => plan.groups.iter().map(|g| (mask(g), k as u32)).collect(),
        };
        Structure { p, groups }
    }

    fn recovers(&self, finished: u32) -> bool {
        self.groups.iter().all(|&(g, need)| (finished & g).count_ones() >= need)
    }

    /// Placements of exactly `size` finished processors, in Gosper order.
    fn placements(&self, size: usize) -> impl Iterator<Item = u32> {
        let limit = 1u64 << self.p;
        let first = if size == 0 { 0u64 } else { (1u64 << size) - 1 };
        let mut next = Some(first);
        std::iter::from_fn(move || {
            let current = next?;
            next = if current == 0 {
                None
            } else {
                let low = current & current.wrapping_neg();
                let ripple = current + low;
                let candidate = (((ripple ^ current) >> 2) / low) | ripple;
                (candidate < limit).then_some(candidate)
            };
            Some(current as u32)
        })
    }

    /// Any `k` finished always suffice, and some `k-1` do not.
    fn confirms(&self, k: usize) -> bool {
        let all_recover = self.placements(k).all(|mask| self.recovers(mask));
        let some_fail = k == 0 || self.placements(k - 1).any(|mask| !self.recovers(mask));
        all_recover && some_fail
    }
}

/// 4. Worst-case thresholds by adversarial enumeration of straggler sets.
fn worst_case_thresholds() -> Outcome {
    let start = Instant::now();
    let mut cases: Vec<(String, Structure, usize)> = Vec::new();
    for p in 1..=24 {
        for n in [2 * p, p * p] {
            for m in 1..=p {
                let params = CodeParams::new(p, m, m, n).unwrap();
                cases.push((format!("uncoded P={p} M={m}"), Structure::of(&plan_uncoded(&params)), thresholds::uncoded(p)));
                cases.push((format!("mds P={p} M={m}"), Structure::of(&plan_mds(&params)), thresholds::mds(m)));
                cases.push((
                    format!("repetition P={p} M={m}"),
                    Structure::of(&plan_repetition_block(&params, n).unwrap()),
                    thresholds::repetition(p, m),
                ));
                for s in 1..=n {
                    if let Ok(plan) = plan_repetition_block(&params, s) {
                        let label = format!("repetition P={p} M={m} N={n} s={s}");
                        cases.push((label, Structure::of(&plan), thresholds::repetition_block(p, m, n, s)));
                    }
                    if let Ok(plan) = plan_short_mds(&params, s) {
                        let label = format!("short-mds P={p} M={m} N={n} s={s}");
                        cases.push((label, Structure::of(&plan), thresholds::short_mds(p, m, n, s)));
                    }
                    if let Ok(k) = thresholds::short_dot(p, m, n, s) {
                        let plan = plan_short_dot(&params.with_k(k).unwrap());
                        if plan.task_lengths[0] > s {
                            return outcome(false, format!("short-dot P={p} M={m} s={s}: length exceeds s"));
                        }
                        cases.push((format!("short-dot P={p} M={m} N={n} s={s}"), Structure::of(&plan), k));
                    }
                }
            }
        }
    }
    let mut unique: HashMap<(Structure, usize), String> = HashMap::new();
    for (label, structure, k) in &cases {
        unique.entry((structure.clone(), *k)).or_insert_with(|| label.clone());
    }
    let unique: Vec<((Structure, usize), String)> = unique.into_iter().collect();
    let failed: Vec<&String> = unique
        .par_iter()
        .filter(|((structure, k), _)| !structure.confirms(*k))
        .map(|(_, label)| label)
        .collect();
    outcome(
        failed.is_empty(),
        format!(
            "{} plans, {} distinct structures enumerated, {} mismatches{}, {:.1}s",
            cases.len(),
            unique.len(),
            failed.len(),
            failed.first().map(|f| format!(" (first {f})")).unwrap_or_default(),
            start.elapsed().as_secs_f64()
        ),
    )
}

/// Index of a local maximum (rise then fall) next to a non-divisor of `p`.
fn ripple_peak(curve: &[(usize, f64)], p: usize) -> Option<usize> {
    curve.windows(3).find_map(|w| {
        let [(m0, e0), (m1, e1), (m2, e2)] = [w[0], w[1], w[2]];
        let near_non_divisor = [m0, m1, m2].iter().any(|m| p % m != 0);
        (e1 > e0 && e2 < e1 && near_non_divisor).then_some(m1)
    })
}

/// 5. Expected-time curves at P=100: dominance and integer-effect ripples.
fn expected_time_curves() -> Outcome {
    let start = Instant::now();
    let p = 100;
    let cfg = SweepConfig::new(p, 1000, DelayModel::default());
    let rows = match sweep(&cfg) {
        Ok(r) => r,
        Err(e) => return outcome(false, format!("sweep failed: {e}")),
    };
    let elapsed = start.elapsed().as_secs_f64();
    let curve = |id: StrategyId| -> Vec<(usize, f64)> {
        rows.iter().filter(|r| r.strategy == id).map(|r| (r.m, r.analytic)).collect()
    };
    let sd = curve(StrategyId::ShortDot);
    let competitors = [StrategyId::Uncoded, StrategyId::Repetition, StrategyId::Mds];
    let dominated: Vec<String> = competitors
        .iter()
        .flat_map(|&id| {
            curve(id)
                .into_iter()
                .zip(&sd)
                .filter(|((_, e), (_, s))| s > e)
                .map(move |((m, _), _)| format!("{id} at M={m}"))
        })
        .collect();
    let rep_peak = ripple_peak(&curve(StrategyId::Repetition), p);
    let unc_peak = ripple_peak(&curve(StrategyId::Uncoded), p);
    let decreases = |c: &[(usize, f64)]| c.windows(2).filter(|w| w[1].1 < w[0].1).count();
    // Largest jumps in slope, where floor(P/M) changes.
    let slope_jumps: Vec<usize> = {
        let c = curve(StrategyId::Uncoded);
        let d: Vec<f64> = c.windows(2).map(|w| w[1].1 - w[0].1).collect();
        d.windows(2)
            .enumerate()
            .filter(|(_, w)| w[1] > 2.0 * w[0])
            .map(|(i, _)| c[i + 2].0)
            .collect()
    };
    let ripples = rep_peak.is_some() || unc_peak.is_some();
    outcome(
        dominated.is_empty() && ripples && elapsed < 60.0,
        format!(
            "Short-Dot <= uncoded, repetition, MDS at all 100 M: {} ({} violations); \
             curve peaks: repetition {:?}, uncoded {:?}; decreasing steps: repetition {}, uncoded {}; \
             uncoded slope jumps at M={:?}; {elapsed:.2}s (limit 60s)",
            dominated.is_empty(),
            dominated.len(),
            rep_peak,
            unc_peak,
            decreases(&curve(StrategyId::Repetition)),
            decreases(&curve(StrategyId::Uncoded)),
            slope_jumps
        ),
    )
}

/// 6. Monte Carlo vs the harmonic closed form at 10^6 trials.
fn monte_carlo_agreement() -> Outcome {
    let model = DelayModel::default();
    let mut pass = true;
    let mut parts = Vec::new();
    for (p, k, m, n, seed) in [(20, 18, 10, 800, 11u64), (6, 5, 3, 12, 12)] {
        let params = CodeParams::new(p, k, m, n).unwrap();
        let s = (n / p * (p - k + m)) as f64;
        let oracle = s * (1.0 + (harmonic_sum(p) - harmonic_sum(p - k)) / 5.0);
        let analytic = expected_time_short_dot(&params, &model);
        let report = monte_carlo(&plan_short_dot(&params), &model, 1_000_000, seed).unwrap();
        let rel = (report.mc_mean - analytic).abs() / analytic;
        pass &= rel <= 0.01 && (analytic - oracle).abs() <= 1e-9 * oracle;
        parts.push(format!(
            "({p},{k},{m},{n}): analytic {analytic:.4}, MC {:.4} +- {:.4}, rel {rel:.2e}",
            report.mc_mean, report.mc_stderr
        ));
    }
    outcome(pass, format!("{} (limit 1e-2)", parts.join("; ")))
}

/// 7. Speed-up ratio grows and Short-Dot time per N shrinks with P.
fn large_p_divergence() -> Outcome {
    let start = Instant::now();
    let rows = theorem4_regime(&[1_000, 10_000, 100_000, 1_000_000], &DelayModel::default()).unwrap();
    let elapsed = start.elapsed().as_secs_f64();
    let ratios_up = rows.windows(2).all(|w| w[1].ratio > w[0].ratio);
    let sd_down = rows.windows(2).all(|w| w[1].short_dot < w[0].short_dot);
    let ratios: Vec<String> = rows.iter().map(|r| format!("{:.4}", r.ratio)).collect();
    let sd: Vec<String> = rows.iter().map(|r| format!("{:.4}", r.short_dot)).collect();
    outcome(
        ratios_up && sd_down && elapsed < 1.0,
        format!("ratios [{}], E_SD/N [{}], {:.3}s (limit 1s)", ratios.join(", "), sd.join(", "), elapsed),
    )
}

/// 8. Short-Dot < uncoded < MDS on the 20-processor setup.
fn cluster_ordering() -> Outcome {
    let report = cluster_experiment(&DelayModel::default(), 1_000_000, 2024, None).unwrap();
    let cells: Vec<String> = report
        .rows
        .iter()
        .map(|r| format!("{} analytic {:.2} simulated {:.2}", r.strategy, r.analytic, r.mc_mean))
        .collect();
    outcome(
        report.analytic_ordering_holds() && report.simulated_ordering_holds() && report.params.n() == 800,
        format!("N={} (simulated): {}", report.params.n(), cells.join("; ")),
    )
}

/// 9. One corrupted output out of six is corrected.
fn error_decoding() -> Outcome {
    let params = CodeParams::new(6, 4, 2, 12).unwrap();
    let b = build_generator(&params, &GeneratorSpec::Chebyshev).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(99);
    let mut worst: f64 = 0.0;
    let mut failures = 0;
    for _ in 0..100 {
        let a = random_matrix(&mut rng, 2, 12);
        let x = random_vector(&mut rng, 12);
        let truth = dense_product(&a, &x);
        let mut outputs = encode(&a, &b, &params).unwrap().compute_outputs(&x).unwrap();
        let victim = rng.random_range(0..6);
        let shift = rng.random_range(1.0..10.0) * if rng.random_bool(0.5) { 1.0 } else { -1.0 };
        outputs[victim].value += shift * (1.0 + outputs[victim].value.abs());
        match decode_with_errors(&outputs, 1, &b, &params) {
            Ok(y) => worst = worst.max(relative_error(&y, &truth)),
            Err(_) => failures += 1,
        }
    }
    outcome(
        failures == 0 && worst <= 1e-8,
        format!("100 trials, {failures} decode failures, max relative error {worst:.2e} (limit 1e-8)"),
    )
}

/// 10. Polynomial route agrees with dense solves for K up to 64.
fn fast_path_equivalence() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(64);
    let mut worst_ok_k = 0;
    let mut first_bad: Option<String> = None;
    let mut passed = 0;
    let mut worst: f64 = 0.0;
    for i in 0..50 {
        let k = 2 + (62 * i + 24) / 49;
        let m = rng.random_range(1..=k);
        let p = k + rng.random_range(0..=4);
        let n = 2 * p;
        let params = CodeParams::new(p, k, m, n).unwrap();
        let b = GeneratorMatrix::vandermonde(chebyshev_nodes(p), k).unwrap();
        let a = random_matrix(&mut rng, m, n);
        let x = random_vector(&mut rng, n);
        let responders: Vec<usize> = (0..p).combinations(k).nth(rng.random_range(0..=p - k)).unwrap();
        let run = |method| -> Result<(DMatrix<f64>, Vec<f64>), String> {
            let options = EncodeOptions { method, ..EncodeOptions::default() };
            let code = encode_with(&a, &b, &params, options).map_err(|e| e.to_string())?;
            let outputs = code.compute_outputs(&x).map_err(|e| e.to_string())?;
            let chosen: Vec<WorkerOutput> = responders.iter().map(|&r| outputs[r]).collect();
            let y = decode_with(&chosen, &b, &params, method).map_err(|e| e.to_string())?;
            Ok((code.f().clone(), y))
        };
        let verdict = match (run(SolveMethod::Dense), run(SolveMethod::Polynomial)) {
            (Ok((f_dense, y_dense)), Ok((f_poly, y_poly))) => {
                let f_rel = max_abs((&f_poly - &f_dense).iter().copied()) / max_abs(f_dense.iter().copied());
                let y_rel = relative_error(&y_poly, &y_dense);
                let rel = f_rel.max(y_rel);
                worst = worst.max(rel);
                (rel <= 1e-6).then_some(()).ok_or(format!("relative difference {rel:.2e}"))
            }
            (Err(e), _) => Err(format!("dense route: {e}")),
            (_, Err(e)) => Err(format!("polynomial route: {e}")),
        };
        match verdict {
            Ok(()) => {
                passed += 1;
                if first_bad.is_none() {
                    worst_ok_k = k;
                }
            }
            Err(why) => {
                first_bad.get_or_insert(format!("P={p} K={k} M={m}: {why}"));
            }
        }
    }
    outcome(
        passed == 50,
        format!(
            "{passed}/50 instances within 1e-6 relative; all agree up to K={worst_ok_k}; \
             largest finite difference {worst:.2e}{}",
            first_bad.map(|b| format!("; first failure {b}")).unwrap_or_default()
        ),
    )
}

fn main() -> ExitCode {
    let criteria: [(&str, fn() -> Outcome); 10] = [
        ("recoverability from every K-subset", recoverability),
        ("sparsity budget", sparsity_budget),
        ("bounds consistency", bounds_consistency),
        ("worst-case recovery thresholds", worst_case_thresholds),
        ("expected-time curves at P=100", expected_time_curves),
        ("Monte Carlo vs closed form", monte_carlo_agreement),
        ("large-P divergence", large_p_divergence),
        ("20-processor ordering", cluster_ordering),
        ("error decoding", error_decoding),
        ("polynomial fast path vs dense", fast_path_equivalence),
    ];
    let mut failed = 0;
    for (i, (name, run)) in criteria.iter().enumerate() {
        let start = Instant::now();
        let result = run();
        failed += usize::from(!result.pass);
        println!(
            "criterion {:>2} [{}] {name}: {} ({:.1}s)",
            i + 1,
            if result.pass { "PASS" } else { "FAIL" },
            result.detail,
            start.elapsed().as_secs_f64()
        );
    }
    println!("acceptance: {}/{} criteria passed", criteria.len() - failed, criteria.len());
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
