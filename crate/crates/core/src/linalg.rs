//! Dense solves with the conditioning and residual guards used by the
//! encoder and decoder.

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};

/// Solves whose estimated condition number exceeds this are refused.
pub const CONDITION_LIMIT: f64 = 1e12;

/// Relative residual accepted by the decoder's K x K solve.
pub const RESIDUAL_TOLERANCE: f64 = 1e-8;

fn norm1(m: &DMatrix<f64>) -> f64 {
    m.column_iter()
        .map(|c| c.iter().map(|v| v.abs()).sum::<f64>())
        .fold(0.0, f64::max)
}

/// 1-norm condition number `|A|_1 |A^-1|_1`, infinite for singular input.
pub fn condition_number(m: &DMatrix<f64>) -> f64 {
    if m.nrows() == 0 {
        return 1.0;
    }
    match m.clone().lu().try_inverse() {
        Some(inv) => {
            let c = norm1(m) * norm1(&inv);
            if c.is_finite() {
                c
            } else {
                f64::INFINITY
            }
        }
        None => f64::INFINITY,
    }
}

pub(crate) fn check_conditioning(m: &DMatrix<f64>, context: &'static str) -> Result<f64> {
    let cond = condition_number(m);
    if cond > CONDITION_LIMIT || cond.is_nan() {
        return Err(Error::IllConditioned {
            context,
            cond,
            limit: CONDITION_LIMIT,
        });
    }
    Ok(cond)
}

/// Guarded square solve: refuses ill-conditioned systems and verifies
/// `|A w - v| <= RESIDUAL_TOLERANCE |v|`.
pub(crate) fn guarded_solve(
    a: &DMatrix<f64>,
    rhs: &DVector<f64>,
    context: &'static str,
) -> Result<DVector<f64>> {
    check_conditioning(a, context)?;
    let lu = a.clone().lu();
    let w = lu.solve(rhs).ok_or(Error::IllConditioned {
        context,
        cond: f64::INFINITY,
        limit: CONDITION_LIMIT,
    })?;
    let residual = (a * &w - rhs).norm();
    let tolerance = RESIDUAL_TOLERANCE * rhs.norm();
    if residual > tolerance {
        return Err(Error::Residual {
            context,
            residual,
            tolerance,
        });
    }
    Ok(w)
}

/// Rows of `m` selected by `rows`, in the given order.
pub(crate) fn select_rows(m: &DMatrix<f64>, rows: &[usize]) -> DMatrix<f64> {
    DMatrix::from_fn(rows.len(), m.ncols(), |i, j| m[(rows[i], j)])
}
