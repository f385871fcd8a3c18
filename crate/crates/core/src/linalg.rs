use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};

/// Solves `(I - kernel) x = rhs` for each right-hand side.
///
/// `kernel` is row-major `n × n`; every right-hand side has length `n`.
pub(crate) fn solve_resolvent(
    n: usize,
    kernel: &[f64],
    rhs: &[&[f64]],
    context: &'static str,
) -> Result<Vec<Vec<f64>>> {
    let a = DMatrix::from_fn(n, n, |i, j| {
        let id = if i == j { 1.0 } else { 0.0 };
        id - kernel[i * n + j]
    });
    let lu = a.lu();
    rhs.iter()
        .map(|b| {
            let b = DVector::from_column_slice(b);
            lu.solve(&b).map(|x| x.iter().copied().collect()).ok_or(Error::Singular(context))
        })
        .collect()
}

pub(crate) fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}
