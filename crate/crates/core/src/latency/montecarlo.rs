use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::strategies::{RecoveryRule, StrategyId, TaskPlan};

use super::model::{expected_kth_order, DelayModel};
use super::quadrature::{expected_time_numeric, CdfDescription};

/// Trials per unit of parallel work. Blocks are merged in index order, so
/// the result does not depend on how blocks are spread over threads.
const BLOCK: usize = 4096;

#[derive(Clone, Debug, PartialEq)]
pub struct SimulationReport {
    pub strategy: StrategyId,
    pub analytic_expected: Option<f64>,
    pub mc_mean: f64,
    pub mc_stderr: f64,
    pub trials: usize,
    pub seed: u64,
}

#[derive(Clone, Copy, Default)]
struct Moments {
    n: f64,
    mean: f64,
    m2: f64,
}

impl Moments {
    fn push(&mut self, x: f64) {
        self.n += 1.0;
        let delta = x - self.mean;
        self.mean += delta / self.n;
        self.m2 += delta * (x - self.mean);
    }

    fn merge(self, other: Moments) -> Moments {
        if self.n == 0.0 {
            return other;
        }
        let n = self.n + other.n;
        let delta = other.mean - self.mean;
        Moments {
            n,
            mean: self.mean + delta * other.n / n,
            m2: self.m2 + other.m2 + delta * delta * self.n * other.n / n,
        }
    }
}

/// Expected finish time of a plan from its CDF, when it factorizes.
pub fn analytic_expected(plan: &TaskPlan, model: &DelayModel) -> Option<f64> {
    let cdf = CdfDescription::from_plan(plan)?;
    if let (RecoveryRule::KthOverall(k), [factor]) = (plan.rule, cdf.factors.as_slice()) {
        return Some(expected_kth_order(factor.group_size, k, factor.length, model));
    }
    expected_time_numeric(&cdf, model).ok()
}

/// Monte-Carlo estimate of the plan's finish time on the global thread pool.
pub fn monte_carlo(plan: &TaskPlan, model: &DelayModel, trials: usize, seed: u64) -> Result<SimulationReport> {
    monte_carlo_with(plan, model, trials, seed, None)
}

/// As [`monte_carlo`], on at most `threads` worker threads.
///
/// Trial `i` draws from ChaCha8 stream `i` of `seed`, so the report is
/// bitwise reproducible for any thread count.
pub fn monte_carlo_with(
    plan: &TaskPlan,
    model: &DelayModel,
    trials: usize,
    seed: u64,
    threads: Option<usize>,
) -> Result<SimulationReport> {
    if trials == 0 {
        return Err(Error::params("need at least one trial"));
    }
    plan.validate()?;
    let base = ChaCha8Rng::seed_from_u64(seed);
    let lengths: Vec<f64> = plan.task_lengths.iter().map(|&l| l as f64).collect();

    let run_block = |block: usize| {
        let mut moments = Moments::default();
        let mut times = vec![0.0; lengths.len()];
        let mut scratch = Vec::with_capacity(lengths.len());
        for trial in block * BLOCK..((block + 1) * BLOCK).min(trials) {
            let mut rng = base.clone();
            rng.set_stream(trial as u64);
            for (t, &len) in times.iter_mut().zip(&lengths) {
                *t = model.sample(len, &mut rng);
            }
            moments.push(plan.finish_time_unchecked(&times, &mut scratch));
        }
        moments
    };
    let blocks = trials.div_ceil(BLOCK);
    let per_block: Vec<Moments> = match threads {
        Some(n) => rayon::ThreadPoolBuilder::new()
            .num_threads(n.max(1))
            .build()
            .map_err(|e| Error::InvalidInput(format!("thread pool: {e}")))?
            .install(|| (0..blocks).into_par_iter().map(run_block).collect()),
        None => (0..blocks).into_par_iter().map(run_block).collect(),
    };
    let total = per_block.into_iter().fold(Moments::default(), Moments::merge);

    let stderr = if trials > 1 {
        (total.m2 / (total.n - 1.0) / total.n).sqrt()
    } else {
        0.0
    };
    Ok(SimulationReport {
        strategy: plan.strategy,
        analytic_expected: analytic_expected(plan, model),
        mc_mean: total.mean,
        mc_stderr: stderr,
        trials,
        seed,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::latency::model::{expected_time_repetition, expected_time_uncoded};
    use crate::params::CodeParams;
    use crate::strategies::{plan_repetition_block, plan_short_dot, plan_short_mds, plan_uncoded};

    fn within_3se(r: &SimulationReport, target: f64) -> bool {
        (r.mc_mean - target).abs() <= 3.0 * r.mc_stderr
    }

    #[test]
    fn single_processor_mean() {
        let plan = TaskPlan {
            strategy: StrategyId::Uncoded,
            task_lengths: vec![5],
            groups: vec![vec![0]],
            rule: RecoveryRule::All,
        };
        let r = monte_carlo(&plan, &DelayModel::default(), 200_000, 1).unwrap();
        assert!(within_3se(&r, 6.0), "{r:?}");
        assert!((r.analytic_expected.unwrap() - 6.0).abs() < 1e-9);
    }

    #[test]
    fn thread_count_does_not_change_results() {
        let plan = plan_short_dot(&CodeParams::new(20, 18, 10, 800).unwrap());
        let m = DelayModel::default();
        let one = monte_carlo_with(&plan, &m, 50_000, 9, Some(1)).unwrap();
        let eight = monte_carlo_with(&plan, &m, 50_000, 9, Some(8)).unwrap();
        assert_eq!(one.mc_mean.to_bits(), eight.mc_mean.to_bits());
        assert_eq!(one.mc_stderr.to_bits(), eight.mc_stderr.to_bits());
        let other = monte_carlo_with(&plan, &m, 50_000, 10, Some(8)).unwrap();
        assert_ne!(one.mc_mean, other.mc_mean);
    }

    #[test]
    fn order_statistic_agrees_with_simulation() {
        let m = DelayModel::default();
        for (p, k) in [(10, 7), (20, 18)] {
            let plan = plan_short_dot(&CodeParams::new(p, k, 1, p).unwrap());
            let r = monte_carlo(&plan, &m, 200_000, 5).unwrap();
            let exact = expected_kth_order(p, k, plan.task_lengths[0] as f64, &m);
            assert!(within_3se(&r, exact), "P={p} K={k}: {r:?} vs {exact}");
        }
    }

    #[test]
    fn integer_effect_cases_agree_with_simulation() {
        let m = DelayModel::default();
        let c = CodeParams::new(7, 3, 3, 14).unwrap();
        let r = monte_carlo(&plan_repetition_block(&c, 14).unwrap(), &m, 200_000, 2).unwrap();
        assert!(within_3se(&r, expected_time_repetition(&c, &m).unwrap()), "{r:?}");

        let c = CodeParams::new(6, 4, 4, 12).unwrap();
        let r = monte_carlo(&plan_uncoded(&c), &m, 1_000_000, 4).unwrap();
        let exact = expected_time_uncoded(&c, &m).unwrap();
        assert!((r.mc_mean - exact).abs() <= 0.01 * exact, "{r:?} vs {exact}");
    }

    #[test]
    fn grouped_mds_agrees_with_simulation() {
        let m = DelayModel::default();
        let plan = plan_short_mds(&CodeParams::new(12, 3, 3, 24).unwrap(), 8).unwrap();
        let r = monte_carlo(&plan, &m, 200_000, 8).unwrap();
        let exact = r.analytic_expected.unwrap();
        assert!(within_3se(&r, exact), "{r:?}");
    }

    #[test]
    fn rejects_zero_trials() {
        let plan = plan_short_dot(&CodeParams::new(6, 5, 3, 12).unwrap());
        assert!(monte_carlo(&plan, &DelayModel::default(), 0, 1).is_err());
    }
}
