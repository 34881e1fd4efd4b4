//! Polynomial evaluation and interpolation over the reals.
//!
//! A Vandermonde row `[h^(K-1), ..., h, 1]` times a coefficient vector is the
//! polynomial with those coefficients (highest degree first) evaluated at `h`,
//! so products with Vandermonde generators reduce to evaluation, and solves
//! reduce to interpolation.

use crate::error::{Error, Result};

/// Relative residual an interpolant must reproduce its data to.
pub const INTERPOLATION_TOLERANCE: f64 = 1e-8;

/// Real polynomial, coefficients stored highest degree first.
#[derive(Clone, Debug, PartialEq)]
pub struct Polynomial {
    coeffs: Vec<f64>,
}

impl Polynomial {
    pub fn new(coeffs: Vec<f64>) -> Result<Self> {
        if coeffs.is_empty() {
            return Err(Error::InvalidInput("polynomial needs at least one coefficient".into()));
        }
        Ok(Polynomial { coeffs })
    }

    pub fn coeffs(&self) -> &[f64] {
        &self.coeffs
    }

    pub fn into_coeffs(self) -> Vec<f64> {
        self.coeffs
    }

    /// Formal degree (`len - 1`), leading zeros included.
    pub fn degree(&self) -> usize {
        self.coeffs.len() - 1
    }

    /// Horner evaluation.
    pub fn eval(&self, x: f64) -> f64 {
        self.coeffs.iter().fold(0.0, |acc, &c| acc * x + c)
    }
}

pub fn eval_many(p: &Polynomial, points: &[f64]) -> Vec<f64> {
    points.iter().map(|&x| p.eval(x)).collect()
}

/// Greedy Leja ordering: start at the largest magnitude, then repeatedly
/// take the point maximizing the product of distances to those chosen.
fn leja_order(points: &[f64]) -> Vec<usize> {
    let d = points.len();
    let mut order = Vec::with_capacity(d);
    let mut remaining: Vec<usize> = (0..d).collect();
    let first = (0..d).max_by(|&a, &b| points[a].abs().total_cmp(&points[b].abs())).unwrap();
    // Log-distance products avoid overflow for many points.
    let mut score: Vec<f64> = points.iter().map(|&x| (x - points[first]).abs().ln()).collect();
    order.push(first);
    remaining.retain(|&i| i != first);
    while !remaining.is_empty() {
        let (pos, &next) = remaining
            .iter()
            .enumerate()
            .max_by(|a, b| score[*a.1].total_cmp(&score[*b.1]))
            .unwrap();
        remaining.swap_remove(pos);
        order.push(next);
        for &i in &remaining {
            score[i] += (points[i] - points[next]).abs().ln();
        }
    }
    order
}

/// Interpolates the unique polynomial of degree `D - 1` through `D` points
/// using Newton divided differences, then expands to monomial form.
pub fn interpolate(points: &[f64], values: &[f64]) -> Result<Polynomial> {
    if points.len() != values.len() {
        return Err(Error::dims(format!(
            "{} points but {} values",
            points.len(),
            values.len()
        )));
    }
    let d = points.len();
    if d == 0 {
        return Err(Error::InvalidInput("interpolation needs at least one point".into()));
    }
    for i in 0..d {
        if !points[i].is_finite() {
            return Err(Error::InvalidInput(format!("non-finite point {}", points[i])));
        }
        if points[..i].contains(&points[i]) {
            return Err(Error::DuplicateNodes(points[i]));
        }
    }

    // Leja order keeps the divided differences well scaled.
    let order = leja_order(points);
    let points: Vec<f64> = order.iter().map(|&i| points[i]).collect();
    let values: Vec<f64> = order.iter().map(|&i| values[i]).collect();

    // Divided-difference table, in place: c[i] = f[x_0, ..., x_i].
    let mut c = values.clone();
    for level in 1..d {
        for i in (level..d).rev() {
            c[i] = (c[i] - c[i - 1]) / (points[i] - points[i - level]);
        }
    }

    // Nested expansion p = (...((c_{d-1})(x - x_{d-2}) + c_{d-2})...)(x - x_0) + c_0.
    let mut coeffs = vec![c[d - 1]];
    for i in (0..d - 1).rev() {
        let xi = points[i];
        let mut next = Vec::with_capacity(coeffs.len() + 1);
        next.push(coeffs[0]);
        for w in coeffs.windows(2) {
            next.push(w[1] - xi * w[0]);
        }
        next.push(-xi * coeffs[coeffs.len() - 1]);
        *next.last_mut().unwrap() += c[i];
        coeffs = next;
    }

    let poly = Polynomial { coeffs };
    let scale = values.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    let residual = points
        .iter()
        .zip(&values)
        .map(|(&x, &v)| (poly.eval(x) - v).abs())
        .fold(0.0f64, f64::max);
    let tolerance = INTERPOLATION_TOLERANCE * scale;
    if !(residual <= tolerance) {
        return Err(Error::Residual {
            context: "polynomial interpolation",
            residual,
            tolerance,
        });
    }
    Ok(poly)
}
