//! `E[T] = integral of (1 - F(t)) dt` for finish-time CDFs that factor over
//! independent groups of processors.

use std::cmp::Ordering;
use std::collections::BinaryHeap;

use crate::error::{Error, Result};
use crate::strategies::{RecoveryRule, TaskPlan};

use super::model::DelayModel;

/// Target relative accuracy of the integral.
pub const QUADRATURE_TOLERANCE: f64 = 1e-6;

/// The integral is cut where the tail's upper bound drops below this
/// fraction of the known part of the integral.
const TAIL_FRACTION: f64 = 1e-12;

const MAX_INTERVALS: usize = 4000;

/// `count` independent groups, each of `group_size` processors running tasks
/// of length `length`; a group is done once `needed` of them finish.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct GroupFactor {
    pub count: usize,
    pub group_size: usize,
    pub needed: usize,
    pub length: f64,
}

/// Finish-time CDF as the product of the group CDFs.
#[derive(Clone, Debug, PartialEq, Default)]
pub struct CdfDescription {
    pub factors: Vec<GroupFactor>,
}

impl GroupFactor {
    /// Failures in a group that leave it unfinished.
    fn slack(&self) -> usize {
        self.group_size - self.needed + 1
    }

    /// `Pr(group not done by t)`.
    fn survival(&self, t: f64, mu: f64) -> f64 {
        if t <= self.length {
            return 1.0;
        }
        let x = mu * (t / self.length - 1.0);
        let ln_q = (-(-x).exp()).ln_1p();
        let ln_not_q = -x;
        if self.needed == 1 {
            return (self.group_size as f64 * ln_not_q).exp();
        }
        // Fewer than `needed` successes among `group_size`.
        let g = self.group_size;
        let mut ln_term = g as f64 * ln_not_q;
        let mut total = ln_term.exp();
        for j in 0..self.needed - 1 {
            ln_term += ((g - j) as f64 / (j + 1) as f64).ln() + ln_q - ln_not_q;
            total += ln_term.exp();
        }
        total.min(1.0)
    }

    /// `log C(g, r)` for the slack `r`, used by the tail bound.
    fn ln_choose_slack(&self) -> f64 {
        let (g, r) = (self.group_size, self.slack());
        let r = r.min(g - r);
        (0..r).map(|i| ((g - i) as f64 / (i + 1) as f64).ln()).sum()
    }
}

impl CdfDescription {
    /// Factorizes a plan whose groups each run equal-length tasks.
    pub fn from_plan(plan: &TaskPlan) -> Option<Self> {
        let uniform = |g: &Vec<usize>| {
            let first = plan.task_lengths[*g.first()?];
            g.iter().all(|&i| plan.task_lengths[i] == first).then_some(first as f64)
        };
        let mut factors: Vec<GroupFactor> = Vec::new();
        let mut push = |group_size: usize, needed: usize, length: f64| {
            match factors
                .iter_mut()
                .find(|f| f.group_size == group_size && f.needed == needed && f.length == length)
            {
                Some(f) => f.count += 1,
                None => factors.push(GroupFactor { count: 1, group_size, needed, length }),
            }
        };
        match plan.rule {
            RecoveryRule::All => {
                for &len in &plan.task_lengths {
                    push(1, 1, len as f64);
                }
            }
            RecoveryRule::KthOverall(k) => {
                let all: Vec<usize> = (0..plan.processors()).collect();
                push(all.len(), k, uniform(&all)?);
            }
            RecoveryRule::OnePerGroup => {
                for g in &plan.groups {
                    push(g.len(), 1, uniform(g)?);
                }
            }
            RecoveryRule::KPerGroupMds(k) => {
                for g in &plan.groups {
                    push(g.len(), k, uniform(g)?);
                }
            }
        }
        Some(CdfDescription { factors })
    }

    fn validate(&self) -> Result<()> {
        if self.factors.is_empty() {
            return Err(Error::Integration("no CDF factors".into()));
        }
        for f in &self.factors {
            if f.count == 0 || f.needed == 0 || f.needed > f.group_size {
                return Err(Error::Integration(format!("invalid group factor {f:?}")));
            }
            if !(f.length.is_finite() && f.length > 0.0) {
                return Err(Error::Integration(format!("task length must be positive, got {}", f.length)));
            }
        }
        Ok(())
    }

    /// `1 - F(t)`.
    pub fn survival(&self, t: f64, mu: f64) -> f64 {
        let ln_f: f64 = self
            .factors
            .iter()
            .map(|f| f.count as f64 * (-f.survival(t, mu)).ln_1p())
            .sum();
        -ln_f.exp_m1()
    }

    /// Point beyond which the tail of the integral is negligible.
    fn cutoff(&self, mu: f64, scale: f64) -> f64 {
        let n = self.factors.len() as f64;
        self.factors
            .iter()
            .map(|f| {
                let rate = f.slack() as f64 * mu;
                let ln_weight = (f.count as f64).ln() + f.ln_choose_slack() + (f.length / (rate * scale)).ln();
                let excess = (ln_weight + n.ln() - TAIL_FRACTION.ln()).max(0.0);
                f.length * (1.0 + excess / rate)
            })
            .fold(0.0, f64::max)
    }
}

const XGK: [f64; 8] = [
    0.991_455_371_120_812_6,
    0.949_107_912_342_758_5,
    0.864_864_423_359_769_1,
    0.741_531_185_599_394_4,
    0.586_087_235_467_691_1,
    0.405_845_151_377_397_2,
    0.207_784_955_007_898_5,
    0.0,
];
const WGK: [f64; 8] = [
    0.022_935_322_010_529_22,
    0.063_092_092_629_978_55,
    0.104_790_010_322_250_2,
    0.140_653_259_715_525_9,
    0.169_004_726_639_267_9,
    0.190_350_578_064_785_4,
    0.204_432_940_075_298_9,
    0.209_482_141_084_727_8,
];
const WG: [f64; 4] = [
    0.129_484_966_168_869_7,
    0.279_705_391_489_276_7,
    0.381_830_050_505_118_9,
    0.417_959_183_673_469_4,
];

struct Panel {
    a: f64,
    b: f64,
    value: f64,
    error: f64,
}

impl PartialEq for Panel {
    fn eq(&self, other: &Self) -> bool {
        self.error == other.error
    }
}
impl Eq for Panel {}
impl PartialOrd for Panel {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}
impl Ord for Panel {
    fn cmp(&self, other: &Self) -> Ordering {
        self.error.total_cmp(&other.error)
    }
}

/// 15-point Kronrod rule with the embedded 7-point Gauss estimate.
fn kronrod15(f: &impl Fn(f64) -> f64, a: f64, b: f64) -> Panel {
    let (center, half) = (0.5 * (a + b), 0.5 * (b - a));
    let fc = f(center);
    let mut kronrod = WGK[7] * fc;
    let mut gauss = WG[3] * fc;
    for j in 0..7 {
        let dx = half * XGK[j];
        let pair = f(center - dx) + f(center + dx);
        kronrod += WGK[j] * pair;
        if j % 2 == 1 {
            gauss += WG[j / 2] * pair;
        }
    }
    Panel {
        a,
        b,
        value: kronrod * half,
        error: ((kronrod - gauss) * half).abs(),
    }
}

/// Globally adaptive Gauss–Kronrod on `[a, b]` to absolute accuracy `tol`.
fn integrate(f: impl Fn(f64) -> f64, a: f64, b: f64, tol: impl Fn(f64) -> f64) -> Result<f64> {
    let mut heap = BinaryHeap::new();
    let first = kronrod15(&f, a, b);
    let (mut value, mut error) = (first.value, first.error);
    heap.push(first);
    while error > tol(value) {
        if heap.len() >= MAX_INTERVALS {
            return Err(Error::Integration(format!(
                "no convergence on [{a}, {b}] after {MAX_INTERVALS} panels (error {error:e})"
            )));
        }
        let worst = heap.pop().expect("heap is never empty");
        let mid = 0.5 * (worst.a + worst.b);
        let (left, right) = (kronrod15(&f, worst.a, mid), kronrod15(&f, mid, worst.b));
        value += left.value + right.value - worst.value;
        error += left.error + right.error - worst.error;
        heap.push(left);
        heap.push(right);
        if !value.is_finite() {
            return Err(Error::Integration("integrand is not finite".into()));
        }
    }
    // Re-sum to shed the drift of the running updates.
    Ok(heap.iter().map(|p| p.value).sum())
}

/// Expected finish time of the described CDF under `model`.
pub fn expected_time_numeric(cdf: &CdfDescription, model: &DelayModel) -> Result<f64> {
    cdf.validate()?;
    let mu = model.mu();
    // Nothing can finish before the longest task's shift.
    let start = cdf.factors.iter().map(|f| f.length).fold(0.0, f64::max);
    let cap = cdf.cutoff(mu, start);
    if cap <= start {
        return Ok(start);
    }
    let tail = integrate(|t| cdf.survival(t, mu), start, cap, |v| {
        0.1 * QUADRATURE_TOLERANCE * (start + v.abs())
    })?;
    Ok(start + tail)
}
