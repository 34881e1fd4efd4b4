//! Cyclic zero pattern of the encoded matrix.
//!
//! A `P x P` unit block places `K - M` zeros in each column on a cyclic
//! window of rows; the block is repeated `N / P` times horizontally. Every
//! column then carries exactly `K - M` zeros and every row exactly
//! `(N/P)(K - M)` zeros, leaving `s = (N/P)(P - K + M)` free positions.
//!
//! Indices here are 0-based; the text formats convert to 1-based.

use crate::params::CodeParams;

/// Rows forced to zero in column `col` (0-based): `{col, col+1, ..., col+K-M-1} mod P`.
pub fn zero_support(col: usize, params: &CodeParams) -> Vec<usize> {
    let p = params.p();
    (0..params.zeros_per_column()).map(|t| (col + t) % p).collect()
}

/// Explicit zero pattern: for each column the set of rows that must vanish.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct SparsityPattern {
    rows: usize,
    zero_rows_by_column: Vec<Vec<usize>>,
}

impl SparsityPattern {
    pub fn cyclic(params: &CodeParams) -> Self {
        SparsityPattern {
            rows: params.p(),
            zero_rows_by_column: (0..params.n()).map(|j| zero_support(j, params)).collect(),
        }
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn columns(&self) -> usize {
        self.zero_rows_by_column.len()
    }

    pub fn zero_rows(&self, col: usize) -> &[usize] {
        &self.zero_rows_by_column[col]
    }

    pub fn is_zero(&self, row: usize, col: usize) -> bool {
        self.zero_rows_by_column[col].contains(&row)
    }

    /// Columns in which `row` may be nonzero, ascending.
    pub fn allowed_columns(&self, row: usize) -> Vec<usize> {
        (0..self.columns()).filter(|&j| !self.is_zero(row, j)).collect()
    }

    /// Per-row supports (allowed-nonzero columns).
    pub fn supports(&self) -> Vec<Vec<usize>> {
        (0..self.rows).map(|i| self.allowed_columns(i)).collect()
    }
}
