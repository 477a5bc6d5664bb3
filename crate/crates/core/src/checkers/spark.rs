use alloc::vec;
use alloc::vec::Vec;

use super::{Mode, Property, RegularityReport, Witness, MAX_SPARK_DIM};
use crate::cone::Combinations;
use crate::error::{Error, Result};
use crate::matrix::{DesignMatrix, Matrix};
use crate::scalar::{Arithmetic, Rational, Scalar};

/// Relative pivot tolerance for the floating-point rank test.
const RANK_TOL: f64 = 1e-10;

/// Smallest number of linearly dependent columns, or `p + 1` when the
/// columns are independent.
pub fn spark(x: &DesignMatrix) -> Result<usize> {
    Ok(spark_search(x)?.0)
}

/// Spark with a kernel vector supported on the dependent columns.
pub fn spark_report(x: &DesignMatrix) -> Result<RegularityReport> {
    let (k, witness, tried) = spark_search(x)?;
    Ok(RegularityReport {
        property: Property::Spark,
        spec: None,
        constant: k as f64,
        mode: Mode::Exact,
        lower_bound: None,
        witness,
        enumeration_size: tried,
        arithmetic: if x.is_integral() { Arithmetic::Rational } else { Arithmetic::Float },
    })
}

fn spark_search(x: &DesignMatrix) -> Result<(usize, Option<Witness>, u64)> {
    let p = x.p();
    if p > MAX_SPARK_DIM {
        return Err(Error::BudgetExceeded { needed: p as u128, limit: MAX_SPARK_DIM as u128 });
    }
    let exact = if x.is_integral() { Some(x.matrix().to_rational()?) } else { None };
    let scale = x.matrix().max_abs().max(1.0);
    let mut tried = 0u64;
    for k in 1..=p {
        for cols in Combinations::new(p, k) {
            tried += 1;
            let kernel = match &exact {
                Some(m) => null_vector(&m.select_columns(&cols), |v: &Rational| v.is_zero())
                    .map(|v| v.iter().map(Scalar::as_f64).collect::<Vec<_>>()),
                None => null_vector(&x.matrix().select_columns(&cols), |v: &f64| v.abs() <= RANK_TOL * scale),
            };
            if let Some(coeffs) = kernel {
                let mut vector = vec![0.0; p];
                for (&c, v) in cols.iter().zip(coeffs) {
                    vector[c] = v;
                }
                return Ok((k, Some(Witness { vector, support: cols }), tried));
            }
        }
    }
    Ok((p + 1, None, tried))
}

/// A nonzero `v` with `A v = 0`, or `None` when `A` has full column rank.
///
/// Gaussian elimination with largest-magnitude pivots; `negligible` decides
/// when a candidate pivot counts as zero.
pub(crate) fn null_vector<T: Scalar>(a: &Matrix<T>, negligible: impl Fn(&T) -> bool) -> Option<Vec<T>> {
    let (n, k) = (a.rows(), a.cols());
    let mut m: Vec<Vec<T>> = a.to_rows();
    let mut pivot_cols = Vec::new();
    let mut free = None;
    // Stopping at the first free column keeps the pivot row equal to `col`.
    for (row, col) in (0..k).enumerate() {
        let best = (row..n)
            .filter(|&i| !negligible(&m[i][col]))
            .max_by(|&i, &j| m[i][col].magnitude().partial_cmp(&m[j][col].magnitude()).unwrap());
        let Some(r) = best else {
            free = Some(col);
            break;
        };
        m.swap(row, r);
        let piv = m[row][col].clone();
        for v in m[row].iter_mut() {
            *v = v.over(&piv);
        }
        for i in 0..n {
            if i != row && m[i][col] != T::zero() {
                let f = m[i][col].clone();
                let pivot_row = m[row].clone();
                for (v, pv) in m[i].iter_mut().zip(&pivot_row) {
                    v.sub_mul_assign(&f, pv);
                }
            }
        }
        pivot_cols.push(col);
    }
    let free = free?;
    // Set the free variable to 1 and back-substitute through the pivots.
    let mut v = vec![T::zero(); k];
    v[free] = T::one();
    for (r, &c) in pivot_cols.iter().enumerate() {
        v[c] = m[r][free].negated();
    }
    Some(v)
}
