use std::fmt;

use crate::error::{Error, Result};

/// Code dimensions: `p` processors, recovery threshold `k`, `m` required dot
/// products, padded input length `n` (a multiple of `p`) and the original
/// input length `n_raw`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub struct CodeParams {
    p: usize,
    k: usize,
    m: usize,
    n: usize,
    n_raw: usize,
}

impl CodeParams {
    /// Validates `1 <= m <= k <= p`, `n_raw >= 1`, and pads `n_raw` up to the
    /// next multiple of `p`.
    pub fn new(p: usize, k: usize, m: usize, n_raw: usize) -> Result<Self> {
        if p == 0 {
            return Err(Error::params("P must be at least 1"));
        }
        if m == 0 {
            return Err(Error::params("M must be at least 1"));
        }
        if n_raw == 0 {
            return Err(Error::params("N must be at least 1"));
        }
        if k < m {
            return Err(Error::params(format!("K={k} is smaller than M={m}")));
        }
        if k > p {
            return Err(Error::params(format!("K={k} exceeds P={p}")));
        }
        let n = n_raw.div_ceil(p) * p;
        Ok(CodeParams { p, k, m, n, n_raw })
    }

    pub fn p(&self) -> usize {
        self.p
    }

    pub fn k(&self) -> usize {
        self.k
    }

    pub fn m(&self) -> usize {
        self.m
    }

    /// Padded input dimension.
    pub fn n(&self) -> usize {
        self.n
    }

    pub fn n_raw(&self) -> usize {
        self.n_raw
    }

    /// Number of enforced zeros per column of the encoded matrix.
    pub fn zeros_per_column(&self) -> usize {
        self.k - self.m
    }

    /// Row-sparsity budget `(N/P)(P-K+M)`; also the per-worker dot-product length.
    pub fn sparsity(&self) -> usize {
        (self.n / self.p) * (self.p - self.k + self.m)
    }

    /// Same code shape with a different number of rows (used for chunking).
    pub fn with_m(&self, m: usize) -> Result<Self> {
        CodeParams::new(self.p, self.k, m, self.n_raw)
    }

    pub fn with_k(&self, k: usize) -> Result<Self> {
        CodeParams::new(self.p, k, self.m, self.n_raw)
    }
}

impl fmt::Display for CodeParams {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "P={} K={} M={} N={} (raw {}) s={}",
            self.p,
            self.k,
            self.m,
            self.n,
            self.n_raw,
            self.sparsity()
        )
    }
}

/// Free-function form of [`CodeParams::new`].
pub fn validate_params(p: usize, k: usize, m: usize, n_raw: usize) -> Result<CodeParams> {
    CodeParams::new(p, k, m, n_raw)
}
