use alloc::vec;
use alloc::vec::Vec;

use super::{Mode, Property, RegularityReport, Witness, RIP_BUDGET};
use crate::cone::{binomial, Combinations};
use crate::error::{Error, Result};
use crate::matrix::{gram, jacobi_eigen, DesignMatrix, Matrix};
use crate::scalar::Arithmetic;

/// Largest `|cos∠(X_i, X_j)|` over distinct columns, i.e. the off-diagonal
/// Gram entry once every column has length `√n`.
pub fn incoherence_constant(x: &DesignMatrix) -> Result<RegularityReport> {
    let m = x.matrix();
    let p = x.p();
    let norms: Vec<f64> = (0..p).map(|j| crate::matrix::norm2(&m.column(j))).collect();
    if let Some(j) = norms.iter().position(|&v| v == 0.0) {
        return Err(Error::ZeroColumn(j));
    }
    let mut best = 0.0;
    let mut pair = None;
    for i in 0..p {
        for j in (i + 1)..p {
            let c = crate::matrix::dot(&m.column(i), &m.column(j)).abs() / (norms[i] * norms[j]);
            if c > best || pair.is_none() {
                best = c;
                pair = Some((i, j));
            }
        }
    }
    let witness = pair.map(|(i, j)| {
        let mut v = vec![0.0; p];
        v[i] = 1.0;
        v[j] = 1.0;
        Witness { vector: v, support: vec![i, j] }
    });
    Ok(RegularityReport {
        property: Property::Incoherence,
        spec: None,
        constant: best.min(1.0),
        mode: Mode::Exact,
        lower_bound: None,
        witness,
        enumeration_size: binomial(p, 2) as u64,
        arithmetic: Arithmetic::Float,
    })
}

/// `δ_s` of `X`, evaluated on the Gram matrix `XᵀX / n`.
pub fn rip_constant(x: &DesignMatrix, s: usize) -> Result<RegularityReport> {
    rip_constant_gram(&gram(x), s)
}

/// `δ_s = max_{|S| = s} max(λ_max(G_SS) − 1, 1 − λ_min(G_SS))`.
///
/// The witness is the extreme eigenvector of the worst block, so that
/// `| vᵀGv / vᵀv − 1 | = δ_s`.
pub fn rip_constant_gram(g: &Matrix, s: usize) -> Result<RegularityReport> {
    let p = g.cols();
    if g.rows() != p {
        return Err(Error::DimensionMismatch("RIP needs a square Gram matrix".into()));
    }
    if s == 0 || s > p {
        return Err(Error::InvalidParameter(alloc::format!("sparsity {s} outside 1..={p}")));
    }
    let needed = binomial(p, s);
    if needed > RIP_BUDGET {
        return Err(Error::BudgetExceeded { needed, limit: RIP_BUDGET });
    }
    g.check_symmetric(1e-12 * g.max_abs().max(1.0))?;
    let blocks: Vec<Vec<usize>> = Combinations::new(p, s).collect();
    let per_block = crate::par::map(blocks, |support| {
        let (vals, vecs) = jacobi_eigen(&g.principal(&support));
        let lo = 1.0 - vals[0];
        let hi = vals[vals.len() - 1] - 1.0;
        let col = if hi >= lo { vals.len() - 1 } else { 0 };
        (lo.max(hi), support, vecs.column(col))
    });
    let mut best: Option<(f64, Vec<usize>, Vec<f64>)> = None;
    for cand in per_block {
        if best.as_ref().is_none_or(|b| cand.0 > b.0) {
            best = Some(cand);
        }
    }
    let (delta, support, local) = best.expect("at least one support");
    let mut vector = vec![0.0; p];
    for (&j, v) in support.iter().zip(local) {
        vector[j] = v;
    }
    Ok(RegularityReport {
        property: Property::Rip,
        spec: None,
        constant: delta,
        mode: Mode::Exact,
        lower_bound: None,
        witness: Some(Witness { vector, support }),
        enumeration_size: needed as u64,
        arithmetic: Arithmetic::Float,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn equal_correlation(p: usize, rho: f64) -> Matrix {
        let mut g = Matrix::filled(p, p, rho);
        for i in 0..p {
            g.set(i, i, 1.0);
        }
        g
    }

    #[test]
    fn incoherence_examples() {
        let orth = DesignMatrix::from_rows(&[vec![1.0, 0.0], vec![0.0, 2.0]]).unwrap();
        assert_eq!(incoherence_constant(&orth).unwrap().constant, 0.0);
        let dup = DesignMatrix::from_rows(&[vec![1.0, 1.0, 0.0], vec![2.0, 2.0, 1.0]]).unwrap();
        assert!((incoherence_constant(&dup).unwrap().constant - 1.0).abs() < 1e-15);
        let zero = DesignMatrix::from_rows(&[vec![1.0, 0.0]]).unwrap();
        assert_eq!(incoherence_constant(&zero).unwrap_err(), Error::ZeroColumn(1));
    }

    #[test]
    fn incoherence_of_equal_correlation_root() {
        let rho = 0.3;
        let root = crate::matrix::symmetric_sqrt(&equal_correlation(5, rho)).unwrap();
        let x = DesignMatrix::new(root).unwrap();
        // Direct pairwise oracle on the Gram entries.
        let g = gram(&x);
        let mut want: f64 = 0.0;
        for i in 0..5 {
            for j in 0..5 {
                if i != j {
                    want = want.max(g.get(i, j).abs() / (g.get(i, i) * g.get(j, j)).sqrt());
                }
            }
        }
        let got = incoherence_constant(&x).unwrap().constant;
        assert!((got - want).abs() < 1e-12 && (got - rho).abs() < 1e-10);
    }

    #[test]
    fn rip_examples() {
        assert!(rip_constant_gram(&Matrix::identity(5), 2).unwrap().constant.abs() < 1e-12);
        let d = [0.4, 1.3, 0.9, 1.0];
        let r = rip_constant_gram(&Matrix::diagonal(&d), 1).unwrap();
        let want = d.iter().map(|&x| (x - 1.0f64).abs()).fold(0.0, f64::max);
        assert!((r.constant - want).abs() < 1e-12);
        for s in 2..=4 {
            for rho in [0.1, 0.3] {
                let r = rip_constant_gram(&equal_correlation(6, rho), s).unwrap();
                assert!((r.constant - (s as f64 - 1.0) * rho).abs() < 1e-10);
            }
        }
    }

    #[test]
    fn rip_witness_reproduces() {
        let g = equal_correlation(5, 0.25);
        let r = rip_constant_gram(&g, 3).unwrap();
        let w = r.witness.unwrap();
        let gv = g.matvec(&w.vector);
        let q = crate::matrix::dot(&w.vector, &gv) / crate::matrix::dot(&w.vector, &w.vector);
        assert!(((q - 1.0).abs() - r.constant).abs() < 1e-8);
        assert_eq!(w.vector.iter().filter(|v| **v != 0.0).count(), 3);
    }

    #[test]
    fn rip_budget() {
        assert!(matches!(rip_constant_gram(&Matrix::identity(40), 20), Err(Error::BudgetExceeded { .. })));
    }
}
