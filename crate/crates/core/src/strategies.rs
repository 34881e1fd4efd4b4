//! Competing parallelization strategies, described by what each processor
//! computes (task lengths) and when the fusion node can finish (recovery rule).

use std::fmt;
use std::str::FromStr;

use crate::error::{Error, Result};
use crate::params::CodeParams;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum StrategyId {
    Uncoded,
    Repetition,
    Mds,
    ShortMds,
    ShortDot,
}

impl StrategyId {
    pub const ALL: [StrategyId; 5] = [
        StrategyId::Uncoded,
        StrategyId::Repetition,
        StrategyId::Mds,
        StrategyId::ShortMds,
        StrategyId::ShortDot,
    ];

    pub fn name(&self) -> &'static str {
        match self {
            StrategyId::Uncoded => "uncoded",
            StrategyId::Repetition => "repetition",
            StrategyId::Mds => "mds",
            StrategyId::ShortMds => "short-mds",
            StrategyId::ShortDot => "short-dot",
        }
    }
}

impl fmt::Display for StrategyId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for StrategyId {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        StrategyId::ALL
            .into_iter()
            .find(|id| id.name() == s)
            .ok_or_else(|| Error::params(format!("unknown strategy {s:?}")))
    }
}

/// When the fusion node has enough results.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum RecoveryRule {
    /// Every processor must finish.
    All,
    /// Any `k` processors.
    KthOverall(usize),
    /// At least one processor from every group.
    OnePerGroup,
    /// At least `k` processors from every group.
    KPerGroupMds(usize),
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct TaskPlan {
    pub strategy: StrategyId,
    /// Dot-product length assigned to each processor.
    pub task_lengths: Vec<usize>,
    /// Partition of the processors (0-based) into recovery groups.
    pub groups: Vec<Vec<usize>>,
    pub rule: RecoveryRule,
}

/// Rows of `A` split between `ceil(P/M)` and `floor(P/M)` processors.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct IntegerSplit {
    /// Rows receiving `ceil` processors.
    pub m1: usize,
    /// Rows receiving `floor` processors.
    pub m2: usize,
    pub ceil: usize,
    pub floor: usize,
}

/// Solves `m1 + m2 = M`, `m1 ceil(P/M) + m2 floor(P/M) = P`.
/// When `M | P` the split is `(M, 0)`.
pub fn split_m1_m2(p: usize, m: usize) -> IntegerSplit {
    assert!(m >= 1 && m <= p, "split needs 1 <= M <= P");
    let floor = p / m;
    let ceil = p.div_ceil(m);
    if floor == ceil {
        return IntegerSplit { m1: m, m2: 0, ceil, floor };
    }
    let m1 = p - m * floor;
    IntegerSplit { m1, m2: m - m1, ceil, floor }
}

/// Near-equal contiguous parts: the first `total mod parts` get one extra.
fn split_evenly(total: usize, parts: usize) -> Vec<usize> {
    let (base, extra) = (total / parts, total % parts);
    (0..parts).map(|i| base + usize::from(i < extra)).collect()
}

/// Consecutive processors into `count` groups, larger groups first.
fn assign_groups(p: usize, count: usize) -> Vec<Vec<usize>> {
    let mut next = 0;
    split_evenly(p, count)
        .into_iter()
        .map(|size| {
            let group: Vec<usize> = (next..next + size).collect();
            next += size;
            group
        })
        .collect()
}

/// Lengths of the `ceil(N/s)` column blocks of width at most `s`.
fn block_lengths(n: usize, s: usize) -> Result<Vec<usize>> {
    if s == 0 || s > n {
        return Err(Error::params(format!("target length s={s} must lie in 1..=N (N={n})")));
    }
    let blocks = n.div_ceil(s);
    Ok((0..blocks).map(|b| s.min(n - b * s)).collect())
}

/// Block-striped: each row is split over `ceil(P/M)` or `floor(P/M)`
/// processors and every processor must finish.
pub fn plan_uncoded(params: &CodeParams) -> TaskPlan {
    let (p, m, n) = (params.p(), params.m(), params.n());
    let split = split_m1_m2(p, m);
    let mut task_lengths = Vec::with_capacity(p);
    let mut groups = Vec::with_capacity(m);
    for row in 0..m {
        let share = if row < split.m1 { split.ceil } else { split.floor };
        let start = task_lengths.len();
        task_lengths.extend(split_evenly(n, share));
        groups.push((start..task_lengths.len()).collect());
    }
    TaskPlan {
        strategy: StrategyId::Uncoded,
        task_lengths,
        groups,
        rule: RecoveryRule::All,
    }
}

/// Each row is cut into `ceil(N/s)` blocks and every (row, block) pair is
/// replicated over a group of processors; one finisher per group suffices.
/// `s = N` is the plain repetition strategy.
pub fn plan_repetition_block(params: &CodeParams, s: usize) -> Result<TaskPlan> {
    let (p, m, n) = (params.p(), params.m(), params.n());
    let blocks = block_lengths(n, s)?;
    let count = m * blocks.len();
    if count > p {
        return Err(Error::params(format!(
            "repetition needs at least M*ceil(N/s) = {count} processors, have {p}"
        )));
    }
    let groups = assign_groups(p, count);
    let mut task_lengths = vec![0; p];
    for (g, members) in groups.iter().enumerate() {
        for &i in members {
            task_lengths[i] = blocks[g % blocks.len()];
        }
    }
    Ok(TaskPlan {
        strategy: StrategyId::Repetition,
        task_lengths,
        groups,
        rule: RecoveryRule::OnePerGroup,
    })
}

/// `(P, M)` MDS code on full-length rows: any M of P.
pub fn plan_mds(params: &CodeParams) -> TaskPlan {
    let p = params.p();
    TaskPlan {
        strategy: StrategyId::Mds,
        task_lengths: vec![params.n(); p],
        groups: vec![(0..p).collect()],
        rule: RecoveryRule::KthOverall(params.m()),
    }
}

/// Columns cut into `ceil(N/s)` blocks, each block encoded with an MDS code
/// over its own group of processors; every group needs M finishers.
pub fn plan_short_mds(params: &CodeParams, s: usize) -> Result<TaskPlan> {
    let (p, m, n) = (params.p(), params.m(), params.n());
    let blocks = block_lengths(n, s)?;
    if p / blocks.len() < m {
        return Err(Error::params(format!(
            "short-mds groups of {} processors cannot carry an MDS code of dimension M={m}",
            p / blocks.len()
        )));
    }
    let groups = assign_groups(p, blocks.len());
    let mut task_lengths = vec![0; p];
    for (g, members) in groups.iter().enumerate() {
        for &i in members {
            task_lengths[i] = blocks[g];
        }
    }
    Ok(TaskPlan {
        strategy: StrategyId::ShortMds,
        task_lengths,
        groups,
        rule: RecoveryRule::KPerGroupMds(m),
    })
}

/// Every processor computes one dot product of length `s`; any K suffice.
pub fn plan_short_dot(params: &CodeParams) -> TaskPlan {
    let p = params.p();
    TaskPlan {
        strategy: StrategyId::ShortDot,
        task_lengths: vec![params.sparsity(); p],
        groups: vec![(0..p).collect()],
        rule: RecoveryRule::KthOverall(params.k()),
    }
}

/// Dispatch by strategy. `s` is the target length for the block strategies
/// (repetition defaults to `N`; short-mds requires it).
pub fn plan_for(strategy: StrategyId, params: &CodeParams, s: Option<usize>) -> Result<TaskPlan> {
    match strategy {
        StrategyId::Uncoded => Ok(plan_uncoded(params)),
        StrategyId::Repetition => plan_repetition_block(params, s.unwrap_or(params.n())),
        StrategyId::Mds => Ok(plan_mds(params)),
        StrategyId::ShortMds => {
            let s = s.ok_or_else(|| Error::params("short-mds needs a target length s"))?;
            plan_short_mds(params, s)
        }
        StrategyId::ShortDot => Ok(plan_short_dot(params)),
    }
}

fn kth_smallest(values: &mut [f64], k: usize) -> f64 {
    let (_, kth, _) = values.select_nth_unstable_by(k - 1, f64::total_cmp);
    *kth
}

impl TaskPlan {
    pub fn processors(&self) -> usize {
        self.task_lengths.len()
    }

    fn min_group(&self) -> usize {
        self.groups.iter().map(Vec::len).min().unwrap_or(0)
    }

    /// Structural consistency of groups and rule.
    pub fn validate(&self) -> Result<()> {
        let p = self.processors();
        let mut seen = vec![false; p];
        for &i in self.groups.iter().flatten() {
            if i >= p || seen[i] {
                return Err(Error::InvalidInput("groups must partition the processors".into()));
            }
            seen[i] = true;
        }
        if seen.iter().any(|s| !s) {
            return Err(Error::InvalidInput("groups must cover every processor".into()));
        }
        match self.rule {
            RecoveryRule::KthOverall(k) if k == 0 || k > p => {
                Err(Error::InvalidInput(format!("cannot wait for {k} of {p} processors")))
            }
            RecoveryRule::KPerGroupMds(k) if k == 0 || k > self.min_group() => Err(
                Error::InvalidInput(format!("group of {} cannot supply {k} results", self.min_group())),
            ),
            _ => Ok(()),
        }
    }

    /// Completion time of the whole computation given per-processor times.
    pub fn finish_time(&self, times: &[f64]) -> Result<f64> {
        if times.len() != self.processors() {
            return Err(Error::dims(format!(
                "{} completion times for {} processors",
                times.len(),
                self.processors()
            )));
        }
        self.validate()?;
        Ok(self.finish_time_unchecked(times, &mut Vec::with_capacity(times.len())))
    }

    /// `finish_time` without validation, reusing `scratch`.
    pub(crate) fn finish_time_unchecked(&self, times: &[f64], scratch: &mut Vec<f64>) -> f64 {
        match self.rule {
            RecoveryRule::All => times.iter().copied().fold(f64::NEG_INFINITY, f64::max),
            RecoveryRule::KthOverall(k) => {
                scratch.clear();
                scratch.extend_from_slice(times);
                kth_smallest(scratch, k)
            }
            RecoveryRule::OnePerGroup => self
                .groups
                .iter()
                .map(|g| g.iter().map(|&i| times[i]).fold(f64::INFINITY, f64::min))
                .fold(f64::NEG_INFINITY, f64::max),
            RecoveryRule::KPerGroupMds(k) => self
                .groups
                .iter()
                .map(|g| {
                    scratch.clear();
                    scratch.extend(g.iter().map(|&i| times[i]));
                    kth_smallest(scratch, k)
                })
                .fold(f64::NEG_INFINITY, f64::max),
        }
    }

    /// Whether the fusion node can finish once exactly the processors with
    /// `finished[i] == true` have reported.
    pub fn recovers(&self, finished: &[bool]) -> bool {
        let count = |g: &Vec<usize>| g.iter().filter(|&&i| finished[i]).count();
        match self.rule {
            RecoveryRule::All => finished.iter().all(|&f| f),
            RecoveryRule::KthOverall(k) => finished.iter().filter(|&&f| f).count() >= k,
            RecoveryRule::OnePerGroup => self.groups.iter().all(|g| count(g) >= 1),
            RecoveryRule::KPerGroupMds(k) => self.groups.iter().all(|g| count(g) >= k),
        }
    }

    /// Smallest K such that any K finished processors always suffice.
    pub fn worst_case_threshold(&self) -> usize {
        let p = self.processors();
        match self.rule {
            RecoveryRule::All => p,
            RecoveryRule::KthOverall(k) => k,
            RecoveryRule::OnePerGroup => p - self.min_group() + 1,
            RecoveryRule::KPerGroupMds(k) => p - self.min_group() + k,
        }
    }

    /// Multiply-adds the fusion node needs before it can finish, counting
    /// each distinct piece of work once.
    pub fn covered_work(&self) -> usize {
        match self.rule {
            RecoveryRule::All => self.task_lengths.iter().sum(),
            RecoveryRule::KthOverall(k) => self.task_lengths.iter().take(k).sum(),
            RecoveryRule::OnePerGroup => self.groups.iter().map(|g| self.task_lengths[g[0]]).sum(),
            RecoveryRule::KPerGroupMds(k) => {
                self.groups.iter().map(|g| k * self.task_lengths[g[0]]).sum()
            }
        }
    }

    /// Same task lengths, groups and rule, regardless of strategy label.
    pub fn same_schedule(&self, other: &TaskPlan) -> bool {
        self.task_lengths == other.task_lengths && self.groups == other.groups && self.rule == other.rule
    }
}

/// Worst-case recovery thresholds in closed form.
pub mod thresholds {
    use crate::error::{Error, Result};

    pub fn uncoded(p: usize) -> usize {
        p
    }

    /// Full-length rows each replicated about `P/M` times.
    pub fn repetition(p: usize, m: usize) -> usize {
        p - p / m + 1
    }

    pub fn mds(m: usize) -> usize {
        m
    }

    pub fn repetition_block(p: usize, m: usize, n: usize, s: usize) -> usize {
        p - p / (m * n.div_ceil(s)) + 1
    }

    pub fn short_mds(p: usize, m: usize, n: usize, s: usize) -> usize {
        p - p / n.div_ceil(s) + m
    }

    /// `P - floor(P s / N) + M`; requires `floor(P s / N) >= M`.
    pub fn short_dot(p: usize, m: usize, n: usize, s: usize) -> Result<usize> {
        let room = p * s / n;
        if room < m {
            return Err(Error::params(format!(
                "length s={s} is below the Short-Dot minimum M N / P = {}",
                (m * n) as f64 / p as f64
            )));
        }
        Ok(p - room.min(p) + m)
    }
}
