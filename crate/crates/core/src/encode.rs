//! Short-Dot encoding: `F = B [A; Z]` with the appended rows `Z` chosen
//! column by column so that `F` vanishes on the cyclic zero pattern.

use std::collections::BTreeMap;

use nalgebra::{DMatrix, DVector, Dyn, LU};
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::generator::GeneratorMatrix;
use crate::linalg::{check_conditioning, CONDITION_LIMIT};
use crate::params::CodeParams;
use crate::pattern::SparsityPattern;
use crate::poly::{eval_many, interpolate, Polynomial};

/// Relative tolerance (against `max |A|`) below which an entry counts as zero.
pub const ZERO_TOLERANCE_FACTOR: f64 = 1e-9;

/// Algebraic route for the per-column solves.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub enum SolveMethod {
    /// Dense LU on the generator submatrices.
    #[default]
    Dense,
    /// Polynomial evaluation/interpolation; Vandermonde generators only.
    Polynomial,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct EncodeOptions {
    pub method: SolveMethod,
    pub parallel: bool,
}

impl Default for EncodeOptions {
    fn default() -> Self {
        EncodeOptions {
            method: SolveMethod::Dense,
            parallel: true,
        }
    }
}

/// Work shipped to one processor: the nonzero coefficients of its row of `F`.
#[derive(Clone, Debug, PartialEq)]
pub struct WorkerTask {
    pub row: usize,
    pub support: Vec<usize>,
    pub coeffs: Vec<f64>,
}

impl WorkerTask {
    /// `x` restricted to this task's support. `x` must be padded to length N.
    pub fn gather(&self, x: &[f64]) -> Vec<f64> {
        self.support.iter().map(|&j| x[j]).collect()
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct WorkerOutput {
    pub row: usize,
    pub value: f64,
}

/// Short dot product computed by one worker.
pub fn worker_dot(task: &WorkerTask, x_slice: &[f64]) -> Result<WorkerOutput> {
    if x_slice.len() != task.coeffs.len() {
        return Err(Error::dims(format!(
            "worker {} expects {} inputs, got {}",
            task.row,
            task.coeffs.len(),
            x_slice.len()
        )));
    }
    let value = task.coeffs.iter().zip(x_slice).map(|(f, x)| f * x).sum();
    Ok(WorkerOutput {
        row: task.row,
        value,
    })
}

/// Sparse encoded transform plus everything needed to decode it.
#[derive(Clone, Debug, PartialEq)]
pub struct EncodedTransform {
    f: DMatrix<f64>,
    supports: Vec<Vec<usize>>,
    generator: GeneratorMatrix,
    params: CodeParams,
    zero_tolerance: f64,
}

impl EncodedTransform {
    /// Reassembles a transform from stored parts, re-checking its invariants.
    pub fn from_parts(
        f: DMatrix<f64>,
        supports: Vec<Vec<usize>>,
        generator: GeneratorMatrix,
        params: CodeParams,
        zero_tolerance: f64,
    ) -> Result<Self> {
        if f.nrows() != params.p() || f.ncols() != params.n() {
            return Err(Error::dims(format!(
                "F is {}x{}, expected {}x{}",
                f.nrows(),
                f.ncols(),
                params.p(),
                params.n()
            )));
        }
        if generator.rows() != params.p() || generator.cols() != params.k() {
            return Err(Error::dims("generator shape does not match parameters"));
        }
        if supports.len() != params.p() {
            return Err(Error::dims("one support per row required"));
        }
        for (i, support) in supports.iter().enumerate() {
            if support.len() > params.sparsity() {
                return Err(Error::InvalidInput(format!(
                    "support of row {} has {} entries, budget is {}",
                    i + 1,
                    support.len(),
                    params.sparsity()
                )));
            }
            if support.iter().any(|&j| j >= params.n()) {
                return Err(Error::InvalidInput(format!("support of row {} out of range", i + 1)));
            }
            for j in 0..params.n() {
                if !support.contains(&j) && f[(i, j)].abs() > zero_tolerance {
                    return Err(Error::InvalidInput(format!(
                        "F[{},{}] is nonzero outside the support",
                        i + 1,
                        j + 1
                    )));
                }
            }
        }
        Ok(EncodedTransform {
            f,
            supports,
            generator,
            params,
            zero_tolerance,
        })
    }

    pub fn f(&self) -> &DMatrix<f64> {
        &self.f
    }

    pub fn supports(&self) -> &[Vec<usize>] {
        &self.supports
    }

    pub fn generator(&self) -> &GeneratorMatrix {
        &self.generator
    }

    pub fn params(&self) -> &CodeParams {
        &self.params
    }

    pub fn zero_tolerance(&self) -> f64 {
        self.zero_tolerance
    }

    pub fn task(&self, row: usize) -> WorkerTask {
        let support = self.supports[row].clone();
        let coeffs = support.iter().map(|&j| self.f[(row, j)]).collect();
        WorkerTask {
            row,
            support,
            coeffs,
        }
    }

    pub fn tasks(&self) -> Vec<WorkerTask> {
        (0..self.params.p()).map(|i| self.task(i)).collect()
    }

    /// Accepts `x` of raw or padded length and returns it zero-padded to N.
    pub fn pad_input(&self, x: &[f64]) -> Result<Vec<f64>> {
        let (n, n_raw) = (self.params.n(), self.params.n_raw());
        if x.len() != n_raw && x.len() != n {
            return Err(Error::dims(format!(
                "input has length {}, expected {n_raw} (or padded {n})",
                x.len()
            )));
        }
        let mut padded = x.to_vec();
        padded.resize(n, 0.0);
        Ok(padded)
    }

    /// Runs every worker on `x`.
    pub fn compute_outputs(&self, x: &[f64]) -> Result<Vec<WorkerOutput>> {
        let x = self.pad_input(x)?;
        self.tasks()
            .iter()
            .map(|task| worker_dot(task, &task.gather(&x)))
            .collect()
    }

    /// Decodes `A x` from exactly K outputs.
    pub fn decode(&self, outputs: &[WorkerOutput]) -> Result<Vec<f64>> {
        crate::decode::decode(outputs, &self.generator, &self.params)
    }

    /// Largest support size over rows.
    pub fn max_support(&self) -> usize {
        self.supports.iter().map(Vec::len).max().unwrap_or(0)
    }
}

/// Zero-forcing solver for one zero set `U`:
/// `B^U_tail z = -B^U_head a`.
struct ZeroForcing {
    head: DMatrix<f64>,
    tail_lu: Option<LU<f64, Dyn, Dyn>>,
}

impl ZeroForcing {
    fn new(zero_rows: &[usize], b: &GeneratorMatrix, m: usize) -> Result<Self> {
        let k = b.cols();
        let sub = b.select_rows(zero_rows);
        let head = sub.columns(0, m).into_owned();
        if zero_rows.is_empty() {
            return Ok(ZeroForcing { head, tail_lu: None });
        }
        let tail = sub.columns(m, k - m).into_owned();
        check_conditioning(&tail, "zero-forcing solve")?;
        Ok(ZeroForcing {
            head,
            tail_lu: Some(tail.lu()),
        })
    }

    fn solve(&self, a_col: &DVector<f64>) -> Result<DVector<f64>> {
        match &self.tail_lu {
            None => Ok(DVector::zeros(0)),
            Some(lu) => {
                let rhs = -(&self.head * a_col);
                lu.solve(&rhs).ok_or(Error::IllConditioned {
                    context: "zero-forcing solve",
                    cond: f64::INFINITY,
                    limit: CONDITION_LIMIT,
                })
            }
        }
    }
}

/// Appended coordinates `z` for one column `a_col` of `A` so that
/// `B^U [a_col; z] = 0`, where `U = zero_rows`.
pub fn solve_appended(
    a_col: &[f64],
    zero_rows: &[usize],
    b: &GeneratorMatrix,
) -> Result<Vec<f64>> {
    let m = a_col.len();
    let k = b.cols();
    if m > k || zero_rows.len() != k - m {
        return Err(Error::dims(format!(
            "need K-M = {} zero rows, got {}",
            k.saturating_sub(m),
            zero_rows.len()
        )));
    }
    let forcing = ZeroForcing::new(zero_rows, b, m)?;
    Ok(forcing.solve(&DVector::from_column_slice(a_col))?.as_slice().to_vec())
}

fn vandermonde_nodes(b: &GeneratorMatrix) -> Result<&[f64]> {
    b.nodes().ok_or_else(|| {
        Error::InvalidInput("polynomial route requires a Vandermonde generator".into())
    })
}

/// One column of `F` through polynomial evaluation and interpolation.
fn encode_column_polynomial(
    a_col: &[f64],
    zero_rows: &[usize],
    nodes: &[f64],
    k: usize,
) -> Result<DVector<f64>> {
    let m = a_col.len();
    let mut coeffs = a_col.to_vec();
    if !zero_rows.is_empty() {
        // A_j padded with K-M zero coefficients, evaluated on the zero nodes.
        let mut head = a_col.to_vec();
        head.resize(k, 0.0);
        let head = Polynomial::new(head)?;
        let zero_nodes: Vec<f64> = zero_rows.iter().map(|&u| nodes[u]).collect();
        let targets: Vec<f64> = eval_many(&head, &zero_nodes).iter().map(|v| -v).collect();
        let tail = interpolate(&zero_nodes, &targets)?;
        debug_assert_eq!(tail.coeffs().len(), k - m);
        coeffs.extend_from_slice(tail.coeffs());
    }
    let full = Polynomial::new(coeffs)?;
    Ok(DVector::from_vec(eval_many(&full, nodes)))
}

/// Encodes with the default options (dense solves, parallel over columns).
pub fn encode(a: &DMatrix<f64>, b: &GeneratorMatrix, params: &CodeParams) -> Result<EncodedTransform> {
    encode_with(a, b, params, EncodeOptions::default())
}

pub fn encode_with(
    a: &DMatrix<f64>,
    b: &GeneratorMatrix,
    params: &CodeParams,
    options: EncodeOptions,
) -> Result<EncodedTransform> {
    let (p, k, m, n) = (params.p(), params.k(), params.m(), params.n());
    if a.nrows() != m || a.ncols() != params.n_raw() {
        return Err(Error::dims(format!(
            "A is {}x{}, parameters expect {}x{}",
            a.nrows(),
            a.ncols(),
            m,
            params.n_raw()
        )));
    }
    if b.rows() != p || b.cols() != k {
        return Err(Error::dims(format!(
            "generator is {}x{}, parameters expect {p}x{k}",
            b.rows(),
            b.cols()
        )));
    }
    if a.iter().any(|v| !v.is_finite()) {
        return Err(Error::InvalidInput("A has non-finite entries".into()));
    }

    let pattern = SparsityPattern::cyclic(params);
    let zero_tolerance = ZERO_TOLERANCE_FACTOR * a.amax();

    let column = |j: usize| -> DVector<f64> {
        if j < a.ncols() {
            a.column(j).into_owned()
        } else {
            DVector::zeros(m)
        }
    };

    let columns: Vec<DVector<f64>> = match options.method {
        SolveMethod::Dense => {
            let mut solvers: BTreeMap<&[usize], ZeroForcing> = BTreeMap::new();
            for j in 0..n {
                let rows = pattern.zero_rows(j);
                if !solvers.contains_key(rows) {
                    solvers.insert(rows, ZeroForcing::new(rows, b, m)?);
                }
            }
            let encode_one = |j: usize| -> Result<DVector<f64>> {
                let a_col = column(j);
                let z = solvers[pattern.zero_rows(j)].solve(&a_col)?;
                let mut augmented = DVector::zeros(k);
                augmented.rows_mut(0, m).copy_from(&a_col);
                augmented.rows_mut(m, k - m).copy_from(&z);
                Ok(b.entries() * augmented)
            };
            if options.parallel {
                (0..n).into_par_iter().map(encode_one).collect::<Result<_>>()?
            } else {
                (0..n).map(encode_one).collect::<Result<_>>()?
            }
        }
        SolveMethod::Polynomial => {
            let nodes = vandermonde_nodes(b)?;
            let encode_one = |j: usize| {
                encode_column_polynomial(column(j).as_slice(), pattern.zero_rows(j), nodes, k)
            };
            if options.parallel {
                (0..n).into_par_iter().map(encode_one).collect::<Result<_>>()?
            } else {
                (0..n).map(encode_one).collect::<Result<_>>()?
            }
        }
    };

    let mut f = DMatrix::zeros(p, n);
    for (j, col) in columns.into_iter().enumerate() {
        f.set_column(j, &col);
        for &u in pattern.zero_rows(j) {
            let residue = f[(u, j)].abs();
            if residue > zero_tolerance {
                return Err(Error::Residual {
                    context: "enforced zero of F",
                    residual: residue,
                    tolerance: zero_tolerance,
                });
            }
            f[(u, j)] = 0.0;
        }
    }

    Ok(EncodedTransform {
        f,
        supports: pattern.supports(),
        generator: b.clone(),
        params: *params,
        zero_tolerance,
    })
}

/// Row-chunked encoding for more dot products than fit in one code: `A` is
/// split horizontally into chunks of at most `chunk_m` rows, each encoded
/// with the same generator.
#[derive(Clone, Debug, PartialEq)]
pub struct ChunkedTransform {
    chunks: Vec<EncodedTransform>,
}

impl ChunkedTransform {
    pub fn chunks(&self) -> &[EncodedTransform] {
        &self.chunks
    }

    pub fn chunk_rows(&self) -> Vec<usize> {
        self.chunks.iter().map(|c| c.params().m()).collect()
    }

    pub fn compute_outputs(&self, x: &[f64]) -> Result<Vec<Vec<WorkerOutput>>> {
        self.chunks.iter().map(|c| c.compute_outputs(x)).collect()
    }

    /// Decodes each chunk from its K outputs and stacks the results.
    pub fn decode(&self, outputs: &[Vec<WorkerOutput>]) -> Result<Vec<f64>> {
        if outputs.len() != self.chunks.len() {
            return Err(Error::dims(format!(
                "{} output sets for {} chunks",
                outputs.len(),
                self.chunks.len()
            )));
        }
        let mut stacked = Vec::new();
        for (chunk, out) in self.chunks.iter().zip(outputs) {
            stacked.extend(chunk.decode(out)?);
        }
        Ok(stacked)
    }
}

pub fn encode_chunked(
    a: &DMatrix<f64>,
    b: &GeneratorMatrix,
    chunk_m: usize,
) -> Result<ChunkedTransform> {
    let (p, k) = (b.rows(), b.cols());
    if chunk_m == 0 || chunk_m > k {
        return Err(Error::params(format!(
            "chunk size {chunk_m} must lie in 1..=K (K={k})"
        )));
    }
    let mut chunks = Vec::new();
    let mut start = 0;
    while start < a.nrows() {
        let rows = chunk_m.min(a.nrows() - start);
        let params = CodeParams::new(p, k, rows, a.ncols())?;
        let block = a.rows(start, rows).into_owned();
        chunks.push(encode(&block, b, &params)?);
        start += rows;
    }
    Ok(ChunkedTransform { chunks })
}
