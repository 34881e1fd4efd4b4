use rand::Rng;

use crate::error::{Error, Result};
use crate::params::CodeParams;
use crate::strategies::split_m1_m2;

use super::quadrature::{expected_time_numeric, CdfDescription, GroupFactor};

/// Euler–Mascheroni constant.
const EULER_GAMMA: f64 = 0.577_215_664_901_532_9;

/// Below this the harmonic sum is taken term by term.
const HARMONIC_DIRECT_LIMIT: usize = 64;

/// Shifted-exponential service time: a task of length `s` finishes at
/// `s (1 + X / mu)` with `X ~ Exp(1)`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct DelayModel {
    mu: f64,
}

impl Default for DelayModel {
    fn default() -> Self {
        DelayModel { mu: 5.0 }
    }
}

impl DelayModel {
    pub fn new(mu: f64) -> Result<Self> {
        if !(mu.is_finite() && mu > 0.0) {
            return Err(Error::params(format!("straggling parameter mu must be positive, got {mu}")));
        }
        Ok(DelayModel { mu })
    }

    pub fn mu(&self) -> f64 {
        self.mu
    }

    /// Inverse CDF at `u` in `[0, 1)`.
    pub fn sample_time(&self, s: f64, u: f64) -> f64 {
        s * (1.0 - (-u).ln_1p() / self.mu)
    }

    pub fn sample<R: Rng + ?Sized>(&self, s: f64, rng: &mut R) -> f64 {
        self.sample_time(s, rng.random::<f64>())
    }

    /// `Pr(T <= t)` for a task of length `s`.
    pub fn cdf(&self, s: f64, t: f64) -> f64 {
        if t <= s {
            0.0
        } else {
            -(-self.mu * (t / s - 1.0)).exp_m1()
        }
    }
}

/// `H_n = 1 + 1/2 + ... + 1/n`, with `H_0 = 0`.
pub fn harmonic(n: usize) -> f64 {
    if n < HARMONIC_DIRECT_LIMIT {
        return (1..=n).rev().map(|i| 1.0 / i as f64).sum();
    }
    let x = n as f64;
    let inv2 = 1.0 / (x * x);
    x.ln() + EULER_GAMMA + 0.5 / x - inv2 * (1.0 / 12.0 - inv2 * (1.0 / 120.0 - inv2 / 252.0))
}

/// Mean of the K-th smallest of P i.i.d. task times of length `s`.
pub fn expected_kth_order(p: usize, k: usize, s: f64, model: &DelayModel) -> f64 {
    assert!(k >= 1 && k <= p, "order statistic needs 1 <= K <= P");
    s * (1.0 + (harmonic(p) - harmonic(p - k)) / model.mu())
}

/// Short-Dot with row length `(N/P)(P-K+M)`.
pub fn short_dot_time(p: usize, k: usize, m: usize, n: f64, model: &DelayModel) -> f64 {
    let s = n / p as f64 * (p - k + m) as f64;
    expected_kth_order(p, k, s, model)
}

pub fn mds_time(p: usize, m: usize, n: f64, model: &DelayModel) -> f64 {
    expected_kth_order(p, m, n, model)
}

/// Uncoded closed form `(M N / P)(1 + H_P / mu)`, exact when `M | P`.
pub fn uncoded_closed_form(p: usize, m: usize, n: f64, model: &DelayModel) -> f64 {
    m as f64 * n / p as f64 * (1.0 + harmonic(p) / model.mu())
}

/// Repetition closed form `N (1 + M H_M / (P mu))`, exact when `M | P`.
pub fn repetition_closed_form(p: usize, m: usize, n: f64, model: &DelayModel) -> f64 {
    n * (1.0 + m as f64 * harmonic(m) / (p as f64 * model.mu()))
}

/// Uncoded: every processor must finish; rows go to `ceil(P/M)` or
/// `floor(P/M)` processors.
pub fn uncoded_time(p: usize, m: usize, n: f64, model: &DelayModel) -> Result<f64> {
    let split = split_m1_m2(p, m);
    if split.m2 == 0 {
        return Ok(uncoded_closed_form(p, m, n, model));
    }
    let single = |procs: usize, share: usize| GroupFactor {
        count: procs,
        group_size: 1,
        needed: 1,
        length: n / share as f64,
    };
    let cdf = CdfDescription {
        factors: vec![single(split.m1 * split.ceil, split.ceil), single(split.m2 * split.floor, split.floor)],
    };
    expected_time_numeric(&cdf, model)
}

/// Repetition with full-length rows: the slowest row's fastest replica.
pub fn repetition_time(p: usize, m: usize, n: f64, model: &DelayModel) -> Result<f64> {
    let split = split_m1_m2(p, m);
    if split.m2 == 0 {
        return Ok(repetition_closed_form(p, m, n, model));
    }
    let rows = |count: usize, replicas: usize| GroupFactor {
        count,
        group_size: replicas,
        needed: 1,
        length: n,
    };
    let cdf = CdfDescription {
        factors: vec![rows(split.m1, split.ceil), rows(split.m2, split.floor)],
    };
    expected_time_numeric(&cdf, model)
}

pub fn expected_time_short_dot(params: &CodeParams, model: &DelayModel) -> f64 {
    short_dot_time(params.p(), params.k(), params.m(), params.n() as f64, model)
}

pub fn expected_time_mds(params: &CodeParams, model: &DelayModel) -> f64 {
    mds_time(params.p(), params.m(), params.n() as f64, model)
}

pub fn expected_time_uncoded(params: &CodeParams, model: &DelayModel) -> Result<f64> {
    uncoded_time(params.p(), params.m(), params.n() as f64, model)
}

pub fn expected_time_repetition(params: &CodeParams, model: &DelayModel) -> Result<f64> {
    repetition_time(params.p(), params.m(), params.n() as f64, model)
}

/// Recovery threshold minimizing the Short-Dot expected time over
/// `K in M..=P`; ties go to the smallest K.
pub fn optimize_k(p: usize, m: usize, n: f64, model: &DelayModel) -> Result<(usize, f64)> {
    if m == 0 || m > p {
        return Err(Error::params(format!("need 1 <= M <= P, got M={m}, P={p}")));
    }
    let mut best = (m, short_dot_time(p, m, m, n, model));
    for k in m + 1..=p {
        let e = short_dot_time(p, k, m, n, model);
        if e < best.1 {
            best = (k, e);
        }
    }
    Ok(best)
}

/// One row of the large-P comparison, times divided by N.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Theorem4Row {
    pub p: usize,
    pub m: usize,
    pub k: usize,
    pub short_dot: f64,
    pub mds: f64,
    pub uncoded: f64,
    pub repetition: f64,
    /// Best competitor over Short-Dot.
    pub ratio: f64,
}

/// `M = round(P / ln P)`, `K = P - round(M / 2)`, evaluated with the closed
/// forms at `N = 1`.
pub fn theorem4_regime(p_values: &[usize], model: &DelayModel) -> Result<Vec<Theorem4Row>> {
    p_values
        .iter()
        .map(|&p| {
            if p < 3 {
                return Err(Error::params(format!("regime needs P >= 3, got {p}")));
            }
            let m = ((p as f64 / (p as f64).ln()).round() as usize).clamp(1, p);
            let k = p - (m as f64 / 2.0).round() as usize;
            let short_dot = short_dot_time(p, k, m, 1.0, model);
            let mds = mds_time(p, m, 1.0, model);
            let uncoded = uncoded_closed_form(p, m, 1.0, model);
            let repetition = repetition_closed_form(p, m, 1.0, model);
            let ratio = mds.min(uncoded).min(repetition) / short_dot;
            Ok(Theorem4Row { p, m, k, short_dot, mds, uncoded, repetition, ratio })
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn model() -> DelayModel {
        DelayModel::default()
    }

    #[test]
    fn rejects_bad_mu() {
        assert!(DelayModel::new(0.0).is_err());
        assert!(DelayModel::new(-1.0).is_err());
        assert!(DelayModel::new(f64::NAN).is_err());
        assert_eq!(DelayModel::new(2.5).unwrap().mu(), 2.5);
    }

    #[test]
    fn sample_examples() {
        let m = DelayModel::new(1.0).unwrap();
        assert_eq!(m.sample_time(3.0, 0.0), 3.0);
        assert_relative_eq!(m.sample_time(2.0, 1.0 - (-1.0f64).exp()), 4.0, max_relative = 1e-12);
    }

    #[test]
    fn sample_mean() {
        let m = model();
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let n = 1_000_000;
        let mean = (0..n).map(|_| m.sample(4.0, &mut rng)).sum::<f64>() / n as f64;
        assert_relative_eq!(mean, 4.0 * 1.2, max_relative = 5e-3);
    }

    #[test]
    fn empirical_cdf_is_close() {
        let m = model();
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let mut xs: Vec<f64> = (0..100_000).map(|_| m.sample(2.0, &mut rng)).collect();
        xs.sort_by(f64::total_cmp);
        let n = xs.len() as f64;
        let ks = xs
            .iter()
            .enumerate()
            .map(|(i, &x)| {
                let f = m.cdf(2.0, x);
                (f - i as f64 / n).abs().max(((i + 1) as f64 / n - f).abs())
            })
            .fold(0.0, f64::max);
        assert!(ks <= 0.01, "KS statistic {ks}");
    }

    #[test]
    fn harmonic_matches_direct_sum() {
        assert_eq!(harmonic(0), 0.0);
        assert_eq!(harmonic(1), 1.0);
        assert_relative_eq!(harmonic(6), 2.45, max_relative = 1e-15);
        for n in [64, 65, 100, 1000, 12345] {
            let direct: f64 = (1..=n).rev().map(|i| 1.0 / i as f64).sum();
            assert_relative_eq!(harmonic(n), direct, max_relative = 1e-14);
        }
    }

    #[test]
    fn order_statistic_examples() {
        let m = model();
        assert_relative_eq!(expected_kth_order(1, 1, 3.0, &m), 3.6, max_relative = 1e-15);
        assert_relative_eq!(expected_kth_order(6, 5, 8.0, &m), 10.32, max_relative = 1e-12);
    }

    #[test]
    fn closed_form_examples() {
        let m = model();
        let sd = CodeParams::new(20, 18, 10, 800).unwrap();
        assert!((expected_time_short_dot(&sd, &m) - 681.4).abs() < 0.05);
        assert!((expected_time_mds(&sd, &m) - 907.0).abs() < 0.05);
        assert!((expected_time_uncoded(&sd, &m).unwrap() - 687.8).abs() < 0.05);

        let small = CodeParams::new(6, 5, 3, 12).unwrap();
        assert_relative_eq!(expected_time_short_dot(&small, &m), 10.32, max_relative = 1e-12);
        assert!((expected_time_mds(&small, &m) - 13.48).abs() < 0.005);
        assert_relative_eq!(expected_time_repetition(&small, &m).unwrap(), 14.2, max_relative = 1e-12);
    }

    #[test]
    fn degenerate_cases() {
        let m = model();
        let one = CodeParams::new(1, 1, 1, 7).unwrap();
        assert_relative_eq!(expected_time_uncoded(&one, &m).unwrap(), 7.0 * 1.2, max_relative = 1e-14);
        let all = CodeParams::new(6, 6, 6, 12).unwrap();
        assert_relative_eq!(
            expected_time_mds(&all, &m),
            12.0 * (1.0 + harmonic(6) / 5.0),
            max_relative = 1e-14
        );
        let rep1 = CodeParams::new(6, 1, 1, 12).unwrap();
        assert_relative_eq!(
            expected_time_repetition(&rep1, &m).unwrap(),
            12.0 * (1.0 + 1.0 / 30.0),
            max_relative = 1e-14
        );
        let k_eq_m = CodeParams::new(6, 3, 3, 12).unwrap();
        assert_eq!(expected_time_short_dot(&k_eq_m, &m), expected_time_mds(&k_eq_m, &m));
    }

    #[test]
    fn optimize_k_examples() {
        let m = model();
        // Brute force with direct harmonic sums as the oracle.
        let h = |n: usize| (1..=n).map(|i| 1.0 / i as f64).sum::<f64>();
        let oracle = (145..=1000)
            .map(|k| (k, (1145 - k) as f64 * (1.0 + (h(1000) - h(1000 - k)) / 5.0)))
            .fold((0, f64::INFINITY), |best, c| if c.1 < best.1 { c } else { best });
        let (k, e) = optimize_k(1000, 145, 1000.0, &m).unwrap();
        assert_eq!(k, oracle.0);
        assert_relative_eq!(e, oracle.1, max_relative = 1e-12);
        // Stationary point of (x + M)(1 + ln(P/x)/mu) lies near x = 18.
        assert_eq!(1000 - k, 18);
        assert!(e <= mds_time(1000, 145, 1000.0, &m));

        let (k, e) = optimize_k(10, 9, 10.0, &m).unwrap();
        let candidates = [short_dot_time(10, 9, 9, 10.0, &m), short_dot_time(10, 10, 9, 10.0, &m)];
        let expected_k = if candidates[1] < candidates[0] { 10 } else { 9 };
        assert_eq!(k, expected_k);
        assert_eq!(e, candidates[expected_k - 9]);
        assert!(optimize_k(5, 6, 1.0, &m).is_err());
    }

    #[test]
    fn scale_covariance() {
        let m = model();
        for (p, mm) in [(6, 4), (7, 3), (20, 10), (100, 37)] {
            let k = (p + mm) / 2;
            assert_relative_eq!(
                short_dot_time(p, k, mm, 2.0 * 60.0, &m),
                2.0 * short_dot_time(p, k, mm, 60.0, &m),
                max_relative = 1e-14
            );
            assert_relative_eq!(mds_time(p, mm, 120.0, &m), 2.0 * mds_time(p, mm, 60.0, &m), max_relative = 1e-14);
            assert_relative_eq!(
                uncoded_time(p, mm, 120.0, &m).unwrap(),
                2.0 * uncoded_time(p, mm, 60.0, &m).unwrap(),
                max_relative = 1e-9
            );
            assert_relative_eq!(
                repetition_time(p, mm, 120.0, &m).unwrap(),
                2.0 * repetition_time(p, mm, 60.0, &m).unwrap(),
                max_relative = 1e-9
            );
        }
    }

    #[test]
    fn regime_rows() {
        let rows = theorem4_regime(&[1000, 10_000, 100_000, 1_000_000], &model()).unwrap();
        assert_eq!(rows[0].m, 145);
        assert_eq!(rows[0].k, 1000 - 73);
        for w in rows.windows(2) {
            assert!(w[1].ratio > w[0].ratio);
            assert!(w[1].short_dot < w[0].short_dot);
        }
        assert!(rows.iter().all(|r| r.mds >= 1.0 && r.repetition >= 1.0));
        assert!(theorem4_regime(&[2], &model()).is_err());
    }
}
