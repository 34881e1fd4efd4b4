//! Generator matrices `B` (P x K).
//!
//! Decoding from any K rows needs every K x K submatrix invertible; the
//! zero-forcing solve additionally needs every (K-M) x (K-M) submatrix of the
//! last K-M columns invertible. Real Vandermonde matrices with distinct nodes
//! satisfy both, as do i.i.d. Gaussian matrices almost surely.

use std::f64::consts::PI;

use itertools::Itertools;
use nalgebra::DMatrix;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

use crate::error::{Error, Result};
use crate::linalg::{check_conditioning, select_rows};
use crate::params::CodeParams;

/// Submatrix families larger than this are not enumerated by the build-time
/// guard; individual solves stay guarded regardless.
pub const EXHAUSTIVE_CHECK_LIMIT: usize = 4096;

#[derive(Clone, Debug, PartialEq)]
pub enum GeneratorKind {
    Vandermonde { nodes: Vec<f64> },
    Gaussian { seed: u64 },
}

/// How to build a generator.
#[derive(Clone, Debug, PartialEq, Default)]
pub enum GeneratorSpec {
    /// Vandermonde on `cos((2i-1)pi/(2P))`, i = 1..P.
    #[default]
    Chebyshev,
    Vandermonde(Vec<f64>),
    Gaussian(u64),
}

#[derive(Clone, Debug, PartialEq)]
pub struct GeneratorMatrix {
    entries: DMatrix<f64>,
    kind: GeneratorKind,
}

/// Chebyshev-like nodes used by the default generator.
pub fn chebyshev_nodes(p: usize) -> Vec<f64> {
    (1..=p)
        .map(|i| ((2 * i - 1) as f64 * PI / (2 * p) as f64).cos())
        .collect()
}

/// `P x K` Vandermonde with entry `(i, j) = h_i^(K-1-j)` (highest power first).
pub fn vandermonde(nodes: &[f64], k: usize) -> DMatrix<f64> {
    DMatrix::from_fn(nodes.len(), k, |i, j| nodes[i].powi((k - 1 - j) as i32))
}

fn binomial_usize(n: usize, r: usize) -> usize {
    let r = r.min(n - r);
    (0..r).fold(1usize, |acc, i| acc.saturating_mul(n - i) / (i + 1))
}

impl GeneratorMatrix {
    pub fn vandermonde(nodes: Vec<f64>, k: usize) -> Result<Self> {
        if nodes.len() < k {
            return Err(Error::params(format!(
                "{} nodes cannot generate {k} columns",
                nodes.len()
            )));
        }
        for (a, b) in nodes.iter().tuple_combinations() {
            if a == b {
                return Err(Error::DuplicateNodes(*a));
            }
        }
        if let Some(bad) = nodes.iter().find(|h| !h.is_finite()) {
            return Err(Error::InvalidInput(format!("non-finite node {bad}")));
        }
        Ok(GeneratorMatrix {
            entries: vandermonde(&nodes, k),
            kind: GeneratorKind::Vandermonde { nodes },
        })
    }

    pub fn gaussian(p: usize, k: usize, seed: u64) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let entries = DMatrix::from_fn(p, k, |_, _| StandardNormal.sample(&mut rng));
        GeneratorMatrix {
            entries,
            kind: GeneratorKind::Gaussian { seed },
        }
    }

    pub fn entries(&self) -> &DMatrix<f64> {
        &self.entries
    }

    pub fn kind(&self) -> &GeneratorKind {
        &self.kind
    }

    pub fn rows(&self) -> usize {
        self.entries.nrows()
    }

    pub fn cols(&self) -> usize {
        self.entries.ncols()
    }

    /// Vandermonde nodes, if this is a Vandermonde generator.
    pub fn nodes(&self) -> Option<&[f64]> {
        match &self.kind {
            GeneratorKind::Vandermonde { nodes } => Some(nodes),
            GeneratorKind::Gaussian { .. } => None,
        }
    }

    /// Rows indexed by `rows`, all columns.
    pub fn select_rows(&self, rows: &[usize]) -> DMatrix<f64> {
        select_rows(&self.entries, rows)
    }

    /// Checks both submatrix families against the conditioning guard.
    /// Returns the worst condition number seen.
    pub fn verify_submatrices(&self, m: usize) -> Result<f64> {
        let (p, k) = (self.rows(), self.cols());
        let mut worst = 1.0f64;
        for rows in (0..p).combinations(k) {
            worst = worst.max(check_conditioning(&self.select_rows(&rows), "generator K x K minor")?);
        }
        let z = k - m;
        if z > 0 {
            for rows in (0..p).combinations(z) {
                let sub = DMatrix::from_fn(z, z, |i, j| self.entries[(rows[i], m + j)]);
                worst = worst.max(check_conditioning(&sub, "generator zero-forcing minor")?);
            }
        }
        Ok(worst)
    }
}

/// Builds a generator for `params` and, when the submatrix families are small
/// enough to enumerate, verifies the invertibility contract numerically.
pub fn build_generator(params: &CodeParams, spec: &GeneratorSpec) -> Result<GeneratorMatrix> {
    let (p, k, m) = (params.p(), params.k(), params.m());
    let generator = match spec {
        GeneratorSpec::Chebyshev => GeneratorMatrix::vandermonde(chebyshev_nodes(p), k)?,
        GeneratorSpec::Vandermonde(nodes) => {
            if nodes.len() != p {
                return Err(Error::params(format!(
                    "expected {p} Vandermonde nodes, got {}",
                    nodes.len()
                )));
            }
            GeneratorMatrix::vandermonde(nodes.clone(), k)?
        }
        GeneratorSpec::Gaussian(seed) => GeneratorMatrix::gaussian(p, k, *seed),
    };
    if binomial_usize(p, k) <= EXHAUSTIVE_CHECK_LIMIT
        && binomial_usize(p, k - m) <= EXHAUSTIVE_CHECK_LIMIT
    {
        generator.verify_submatrices(m)?;
    }
    Ok(generator)
}
