//! Lower bounds on the average row sparsity of any code that recovers from
//! every K of P outputs, and a check of constructed codes against them.

use num_bigint::{BigInt, BigUint};
use num_rational::BigRational;
use num_traits::{One, ToPrimitive};

use crate::encode::EncodedTransform;
use crate::error::{Error, Result};

/// Upper limit on `M^2 C(P, K-M+1) / N` for the tight bound to count as
/// asymptotically close to the Short-Dot budget.
pub const ASYMPTOTIC_RATIO: f64 = 0.01;

pub fn binomial(n: usize, r: usize) -> BigUint {
    if r > n {
        return BigUint::ZERO;
    }
    let r = r.min(n - r);
    (0..r).fold(BigUint::one(), |acc, i| acc * BigUint::from(n - i) / BigUint::from(i + 1))
}

fn check_pkm(p: usize, k: usize, m: usize) -> Result<()> {
    if m == 0 || m > k || k > p {
        return Err(Error::params(format!("need 1 <= M <= K <= P, got P={p}, K={k}, M={m}")));
    }
    Ok(())
}

/// `(N/P)(P-K+1)`: every column needs at least `P-K+1` nonzeros.
pub fn basic_lower_bound(n: usize, p: usize, k: usize) -> f64 {
    n as f64 / p as f64 * (p - k + 1) as f64
}

/// Strict upper bound `M C(P, K-M+1)` on the number of columns holding more
/// than `K-M` zeros.
pub fn lambda_cap(p: usize, k: usize, m: usize) -> Result<BigUint> {
    check_pkm(p, k, m)?;
    Ok(BigUint::from(m) * binomial(p, k - m + 1))
}

/// `(N/P)(P-K+M) - (M^2/P) C(P, K-M+1)` as an exact rational. Only defined
/// for `M > 1`; for `M = 1` use [`basic_lower_bound`].
pub fn tight_lower_bound_exact(n: usize, p: usize, k: usize, m: usize) -> Result<BigRational> {
    check_pkm(p, k, m)?;
    if m <= 1 {
        return Err(Error::params("tight bound needs M > 1; use basic_lower_bound for M = 1"));
    }
    Ok(short_dot_budget_exact(n, p, k, m) - budget_gap_exact(p, k, m))
}

pub fn tight_lower_bound(n: usize, p: usize, k: usize, m: usize) -> Result<f64> {
    let exact = tight_lower_bound_exact(n, p, k, m)?;
    Ok(exact.to_f64().unwrap_or(f64::NAN))
}

/// `(N/P)(P-K+M)` as an exact rational.
pub fn short_dot_budget_exact(n: usize, p: usize, k: usize, m: usize) -> BigRational {
    BigRational::new(BigInt::from(n) * BigInt::from(p - k + m), BigInt::from(p))
}

/// `(M^2/P) C(P, K-M+1)`, the distance from the Short-Dot budget to the
/// tight bound; it does not depend on N.
pub fn budget_gap_exact(p: usize, k: usize, m: usize) -> BigRational {
    let numer = BigInt::from(m * m) * BigInt::from(binomial(p, k - m + 1));
    BigRational::new(numer, BigInt::from(p))
}

#[derive(Clone, Debug, PartialEq)]
pub struct BoundReport {
    pub basic_bound: f64,
    /// Absent when `M = 1`.
    pub tight_bound: Option<f64>,
    /// Short-Dot budget `(N/P)(P-K+M)`.
    pub budget: usize,
    pub achieved_avg_sparsity: f64,
    pub achieved_max_sparsity: usize,
    pub max_column_zeros: usize,
    pub mean_column_zeros: f64,
    pub lambda_cap: BigUint,
    /// `M^2 C(P, K-M+1) / N`.
    pub gap_ratio: f64,
    pub asymptotic_condition_met: bool,
    /// Set when a column of A is zero, in which case nothing was asserted.
    pub warning: Option<String>,
}

/// Measures the nonzero pattern of `F` over the unpadded columns and checks
/// it against the lower bounds.
pub fn check_achievability(code: &EncodedTransform) -> Result<BoundReport> {
    let params = code.params();
    let (p, k, m) = (params.p(), params.k(), params.m());
    let n = params.n_raw();
    let f = code.f();
    let tol = code.zero_tolerance();
    let nonzero = |i: usize, j: usize| f[(i, j)].abs() > tol;

    let row_counts: Vec<usize> = (0..p).map(|i| (0..n).filter(|&j| nonzero(i, j)).count()).collect();
    let column_zeros: Vec<usize> = (0..n).map(|j| (0..p).filter(|&i| !nonzero(i, j)).count()).collect();
    let empty_columns: Vec<usize> = (0..n).filter(|&j| column_zeros[j] == p).collect();

    let cap = lambda_cap(p, k, m)?;
    let gap_ratio = (BigUint::from(m * m) * binomial(p, k - m + 1)).to_f64().unwrap_or(f64::INFINITY) / n as f64;
    let report = BoundReport {
        basic_bound: basic_lower_bound(n, p, k),
        tight_bound: (m > 1).then(|| tight_lower_bound(n, p, k, m)).transpose()?,
        budget: params.sparsity(),
        achieved_avg_sparsity: row_counts.iter().sum::<usize>() as f64 / p as f64,
        achieved_max_sparsity: row_counts.iter().copied().max().unwrap_or(0),
        max_column_zeros: column_zeros.iter().copied().max().unwrap_or(0),
        mean_column_zeros: column_zeros.iter().sum::<usize>() as f64 / n as f64,
        lambda_cap: cap,
        gap_ratio,
        asymptotic_condition_met: gap_ratio < ASYMPTOTIC_RATIO,
        warning: (!empty_columns.is_empty()).then(|| {
            format!(
                "{} all-zero column(s) of A (first at {}); bounds assume every column has a nonzero",
                empty_columns.len(),
                empty_columns[0] + 1
            )
        }),
    };
    if report.warning.is_some() {
        return Ok(report);
    }

    // Relative slack for the floating-point comparisons of integer counts.
    let eps = 1e-12 * report.basic_bound.max(1.0);
    if report.achieved_avg_sparsity + eps < report.basic_bound {
        return Err(Error::BoundViolation(format!(
            "average sparsity {} below the lower bound {}",
            report.achieved_avg_sparsity, report.basic_bound
        )));
    }
    if report.achieved_max_sparsity > report.budget {
        return Err(Error::BoundViolation(format!(
            "row with {} nonzeros exceeds the budget {}",
            report.achieved_max_sparsity, report.budget
        )));
    }
    if report.max_column_zeros + 1 > k {
        return Err(Error::BoundViolation(format!(
            "a column has {} zeros, so some K={k} rows miss it",
            report.max_column_zeros
        )));
    }
    Ok(report)
}
