//! Fusion-node decoding: recover `A x` from any K worker outputs, or from all
//! P outputs when up to `floor((P-K)/2)` of them are silently corrupted.

use itertools::Itertools;
use nalgebra::DVector;

use crate::encode::{SolveMethod, WorkerOutput};
use crate::error::{Error, Result};
use crate::generator::GeneratorMatrix;
use crate::linalg::guarded_solve;
use crate::params::CodeParams;
use crate::poly::interpolate;

/// An output "matches" a prediction when `|pred - out| <= MATCH_TOLERANCE (1 + |out|)`.
pub const MATCH_TOLERANCE: f64 = 1e-6;

fn check_outputs(outputs: &[WorkerOutput], b: &GeneratorMatrix, expected: usize) -> Result<()> {
    if outputs.len() != expected {
        return Err(Error::InvalidInput(format!(
            "expected {expected} worker outputs, got {}",
            outputs.len()
        )));
    }
    let p = b.rows();
    for (i, out) in outputs.iter().enumerate() {
        if out.row >= p {
            return Err(Error::InvalidInput(format!(
                "worker index {} out of range 1..={p}",
                out.row + 1
            )));
        }
        if outputs[..i].iter().any(|o| o.row == out.row) {
            return Err(Error::InvalidInput(format!("worker {} listed twice", out.row + 1)));
        }
        if !out.value.is_finite() {
            return Err(Error::InvalidInput(format!("worker {} output is not finite", out.row + 1)));
        }
    }
    Ok(())
}

/// Full K-vector `w` with `B^V w = v`; its first M entries are `A x`.
fn solve_full(outputs: &[WorkerOutput], b: &GeneratorMatrix, method: SolveMethod) -> Result<Vec<f64>> {
    let rows: Vec<usize> = outputs.iter().map(|o| o.row).collect();
    let values: Vec<f64> = outputs.iter().map(|o| o.value).collect();
    match method {
        SolveMethod::Dense => {
            let bv = b.select_rows(&rows);
            let w = guarded_solve(&bv, &DVector::from_vec(values), "decode")?;
            Ok(w.as_slice().to_vec())
        }
        SolveMethod::Polynomial => {
            let nodes = b.nodes().ok_or_else(|| {
                Error::InvalidInput("polynomial route requires a Vandermonde generator".into())
            })?;
            let points: Vec<f64> = rows.iter().map(|&r| nodes[r]).collect();
            Ok(interpolate(&points, &values)?.into_coeffs())
        }
    }
}

/// Decodes `A x` from exactly K outputs with distinct worker indices.
pub fn decode(outputs: &[WorkerOutput], b: &GeneratorMatrix, params: &CodeParams) -> Result<Vec<f64>> {
    decode_with(outputs, b, params, SolveMethod::Dense)
}

pub fn decode_with(
    outputs: &[WorkerOutput],
    b: &GeneratorMatrix,
    params: &CodeParams,
    method: SolveMethod,
) -> Result<Vec<f64>> {
    check_outputs(outputs, b, params.k())?;
    let mut w = solve_full(outputs, b, method)?;
    w.truncate(params.m());
    Ok(w)
}

fn matches(predicted: f64, observed: f64) -> bool {
    (predicted - observed).abs() <= MATCH_TOLERANCE * (1.0 + observed.abs())
}

/// Error-correcting decode from all P outputs.
///
/// K-subsets are tried in lexicographic order; a subset's decode is accepted
/// when re-encoding it matches at least `P - e_max` outputs. The first
/// accepted decode is returned. The search is exhaustive so that a second,
/// different accepted decode is reported as [`Error::AmbiguousDecode`].
pub fn decode_with_errors(
    outputs: &[WorkerOutput],
    e_max: usize,
    b: &GeneratorMatrix,
    params: &CodeParams,
) -> Result<Vec<f64>> {
    let (p, k, m) = (params.p(), params.k(), params.m());
    check_outputs(outputs, b, p)?;
    if 2 * e_max > p - k {
        return Err(Error::params(format!(
            "can correct at most floor((P-K)/2) = {} errors, asked for {e_max}",
            (p - k) / 2
        )));
    }
    let mut by_row = outputs.to_vec();
    by_row.sort_by_key(|o| o.row);
    let observed: Vec<f64> = by_row.iter().map(|o| o.value).collect();

    let mut accepted: Option<Vec<f64>> = None;
    for subset in (0..p).combinations(k) {
        let chosen: Vec<WorkerOutput> = subset.iter().map(|&i| by_row[i]).collect();
        let w = solve_full(&chosen, b, SolveMethod::Dense)?;
        let predicted = b.entries() * DVector::from_vec(w.clone());
        let agree = predicted
            .iter()
            .zip(&observed)
            .filter(|(pr, ob)| matches(**pr, **ob))
            .count();
        if agree + e_max < p {
            continue;
        }
        match &accepted {
            None => accepted = Some(w),
            Some(first) => {
                if first.iter().zip(&w).any(|(a, b)| !matches(*b, *a)) {
                    return Err(Error::AmbiguousDecode);
                }
            }
        }
    }
    let mut w = accepted.ok_or(Error::NoConsistentDecode)?;
    w.truncate(m);
    Ok(w)
}
