//! The reduction from "is `spark(X) ≤ s`?" to a single regularity query,
//! executed in exact rational arithmetic.
//!
//! With `K = ⌈log₂(npM)⌉`, `α = 2^{−2nK}` and `γ = 2^{−2nK}` (RE and
//! compatibility) or `γ = 2^{−5nK}` (`ℓq` sensitivity with `Z = X`), the
//! property holds exactly when `spark(X) > s`.

use alloc::format;
use alloc::vec;
use alloc::vec::Vec;

use num_bigint::BigInt;
use num_bigint::BigUint;
use num_traits::One;

use crate::checkers::{l1_search, Property};
use crate::cone::Combinations;
use crate::checkers::sign_patterns;
use crate::error::{Error, Result};
use crate::lp::{solve, LinearProgram, LpStatus, Relation};
use crate::matrix::{DesignMatrix, Matrix};
use crate::scalar::{pow2, sqrt_upper, Arithmetic, Rational, Scalar};

/// `⌈log₂ x⌉` for an integer `x ≥ 1`.
pub fn ceil_log2(x: u128) -> u32 {
    assert!(x >= 1);
    128 - (x - 1).leading_zeros()
}

/// Encoding length of a rational: `⌈log₂|a|⌉ + ⌈log₂ b⌉` for `a/b` in
/// lowest terms.
pub fn encoding_length(r: &Rational) -> u64 {
    let bits = |x: &BigInt| -> u64 {
        let x = x.magnitude();
        if x <= &BigUint::one() {
            0
        } else {
            (x - BigUint::one()).bits()
        }
    };
    bits(r.numer()) + bits(r.denom())
}

#[derive(Debug, Clone, PartialEq)]
pub struct ReductionParams {
    pub property: Property,
    pub n: usize,
    pub p: usize,
    /// Largest absolute entry, at least 1.
    pub m: u64,
    /// `⌈log₂(npM)⌉`.
    pub k: u32,
    pub alpha: Rational,
    pub gamma: Rational,
    /// Larger encoding length of `α` and `γ`.
    pub bit_size: u64,
}

impl ReductionParams {
    /// `bit_size ≤ (np + ⌈log₂ M⌉)²`, the polynomial size bound.
    pub fn within_size_bound(&self) -> bool {
        let base = (self.n * self.p) as u64 + ceil_log2(self.m as u128) as u64;
        self.bit_size <= base * base
    }
}

fn integral_entries(x: &DesignMatrix) -> Result<Vec<i64>> {
    if !x.is_integral() {
        return Err(Error::InvalidParameter("the reduction needs an integral design matrix".into()));
    }
    Ok(x.matrix().data().iter().map(|&v| v as i64).collect())
}

fn max_entry(x: &DesignMatrix) -> Result<u64> {
    Ok(integral_entries(x)?.iter().map(|v| v.unsigned_abs()).max().unwrap_or(0).max(1))
}

pub fn reduction_params(x: &DesignMatrix, s: usize, property: Property) -> Result<ReductionParams> {
    let m = max_entry(x)?;
    let (n, p) = (x.n(), x.p());
    if s == 0 || s >= p {
        return Err(Error::InvalidParameter(format!("sparsity {s} must lie in 1..{p}")));
    }
    let k = ceil_log2(n as u128 * p as u128 * m as u128);
    let two_nk = 2 * n as i64 * k as i64;
    let alpha = pow2(-two_nk);
    let gamma = match property {
        Property::Re | Property::Compatibility => pow2(-two_nk),
        Property::LqSensitivity => pow2(-5 * n as i64 * k as i64),
        other => return Err(Error::InvalidParameter(format!("no reduction targets {other:?}"))),
    };
    let bit_size = encoding_length(&alpha).max(encoding_length(&gamma));
    Ok(ReductionParams { property, n, p, m, k, alpha, gamma, bit_size })
}

#[derive(Debug, Clone, PartialEq)]
pub struct LemmaBounds {
    /// `2^{⌈log₂(√(np) M)⌉} ≥ ‖X‖₂`.
    pub norm_bound: Rational,
    /// `2^{−2n⌈log₂(nM)⌉}`, a lower bound on `λ_min(X_SᵀX_S)` whenever
    /// `spark(X) > |S|`.
    pub lambda_min_bound: Rational,
}

pub fn lemma_bounds(x: &DesignMatrix) -> Result<LemmaBounds> {
    let m = max_entry(x)? as u128;
    let (n, p) = (x.n() as u128, x.p() as u128);
    // ⌈log₂(√(np)·M)⌉ = ⌈log₂(np·M²)/2⌉, evaluated on integers.
    let e = ceil_log2(n * p * m * m).div_ceil(2);
    let e = (e.saturating_sub(1)..=e + 1)
        .find(|&e| {
            let lhs = BigInt::one() << (2 * e as usize);
            lhs >= BigInt::from(n * p * m * m)
        })
        .expect("bracket contains the exponent");
    let lambda = pow2(-(2 * n as i64 * ceil_log2(n * m) as i64));
    Ok(LemmaBounds { norm_bound: pow2(e as i64), lambda_min_bound: lambda })
}

/// Evidence behind a reduction verdict.
#[derive(Debug, Clone, PartialEq)]
pub enum Certificate {
    /// A cone vector with `Xv = 0` (RE, compatibility) or a cone vector
    /// whose sensitivity ratio is below `γ`.
    Violation { vector: Vec<Rational>, value: Rational },
    /// Exact minimum of `s|XᵀXv|_∞ / (n|v|₁)` over the cone.
    Sensitivity { constant: Rational },
    /// `X_SᵀX_S − b_S² I ≻ 0` for every `S`, with
    /// `b_S = γ + α·u_S` and `u_S ≥ √s ‖X_{S^c}‖₂`; this forces the RE and
    /// compatibility ratios above `γ`.
    PositiveDefinite { margins: Vec<Rational> },
    /// Neither certificate could be produced.
    None,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ReductionOutcome {
    pub params: ReductionParams,
    /// `None` when the oracle could not decide.
    pub property_holds: Option<bool>,
    /// The reduction's answer, `spark(X) ≤ s`, i.e. the negation of
    /// `property_holds`.
    pub spark_at_most_s: Option<bool>,
    pub certificate: Certificate,
    pub arithmetic: Arithmetic,
    pub enumeration_size: u64,
}

/// Decide `spark(X) ≤ s` with one regularity query.
pub fn spark_via_oracle(x: &DesignMatrix, s: usize, property: Property) -> Result<ReductionOutcome> {
    spark_via_oracle_with(x, s, property, Arithmetic::Rational)
}

/// As [`spark_via_oracle`]; requesting float arithmetic is an error because
/// `γ` lies far below double-precision resolution.
pub fn spark_via_oracle_with(
    x: &DesignMatrix,
    s: usize,
    property: Property,
    arithmetic: Arithmetic,
) -> Result<ReductionOutcome> {
    if arithmetic != Arithmetic::Rational {
        return Err(Error::ExactArithmeticRequired(
            "the reduction parameters are below floating-point resolution".into(),
        ));
    }
    let params = reduction_params(x, s, property)?;
    let exact = x.matrix().to_rational()?;
    let (holds, certificate, solved) = match property {
        Property::LqSensitivity => sensitivity_query(&exact, s, &params)?,
        _ => restricted_query(&exact, s, &params)?,
    };
    Ok(ReductionOutcome {
        params,
        property_holds: holds,
        spark_at_most_s: holds.map(|h| !h),
        certificate,
        arithmetic: Arithmetic::Rational,
        enumeration_size: solved,
    })
}

/// `ℓ1` sensitivity of `Ψ = XᵀX/n`, run on the integer matrix `XᵀX` with the
/// threshold scaled by `n` (the constant is homogeneous in `Ψ`).
fn sensitivity_query(x: &Matrix<Rational>, s: usize, params: &ReductionParams) -> Result<(Option<bool>, Certificate, u64)> {
    let xtx = x.tmul(x)?;
    let n = Rational::from_integer(BigInt::from(params.n));
    let sr = Rational::from_integer(BigInt::from(s));
    let threshold = &params.gamma * &n / &sr;
    let supports: Vec<Vec<usize>> = Combinations::new(x.cols(), s).collect();
    let found = l1_search(&xtx, s, &params.alpha, &supports, Some(&threshold))?;
    // s · min|XᵀXv|_∞ / (n |v|₁), with |v|₁ = 1.
    let constant = &found.value * &sr / &n;
    if found.value < threshold {
        Ok((Some(false), Certificate::Violation { vector: found.vector, value: constant }, found.solved))
    } else {
        Ok((Some(true), Certificate::Sensitivity { constant }, found.solved))
    }
}

fn restricted_query(x: &Matrix<Rational>, s: usize, params: &ReductionParams) -> Result<(Option<bool>, Certificate, u64)> {
    if let Some(margins) = positive_definite_certificate(x, s, params)? {
        return Ok((Some(true), Certificate::PositiveDefinite { margins }, 0));
    }
    let (kernel, solved) = cone_kernel_vector(x, s, &params.alpha)?;
    match kernel {
        Some(vector) => Ok((Some(false), Certificate::Violation { vector, value: <Rational as Scalar>::zero() }, solved)),
        None => Ok((None, Certificate::None, solved)),
    }
}

/// Per-support smallest LDLᵀ pivot of `X_SᵀX_S − b_S² I` if every one is
/// positive.
fn positive_definite_certificate(x: &Matrix<Rational>, s: usize, params: &ReductionParams) -> Result<Option<Vec<Rational>>> {
    let p = x.cols();
    let gram = x.tmul(x)?;
    let sr = Rational::from_integer(BigInt::from(s));
    let mut margins = Vec::new();
    for support in Combinations::new(p, s) {
        let rest: Vec<usize> = (0..p).filter(|i| !support.contains(i)).collect();
        let frob: Rational = rest
            .iter()
            .flat_map(|&j| (0..x.rows()).map(move |i| (i, j)))
            .fold(<Rational as Scalar>::zero(), |acc, (i, j)| acc + x.get(i, j) * x.get(i, j));
        // u ≥ √s ‖X_{S^c}‖_F ≥ √s ‖X_{S^c}‖₂.
        let u = sqrt_upper(&(frob * &sr), 64);
        let b = &params.gamma + &params.alpha * u;
        let shift = &b * &b;
        let mut block = gram.principal(&support);
        for i in 0..s {
            let d = block.get(i, i) - &shift;
            block.set(i, i, d);
        }
        match min_ldl_pivot(&block) {
            Some(piv) if piv.is_positive() => margins.push(piv),
            _ => return Ok(None),
        }
    }
    Ok(Some(margins))
}

/// Smallest pivot of the symmetric Gaussian elimination, or `None` if a
/// zero pivot occurs. A symmetric matrix is positive definite exactly when
/// every pivot is positive.
pub(crate) fn min_ldl_pivot(a: &Matrix<Rational>) -> Option<Rational> {
    let n = a.rows();
    let mut m = a.to_rows();
    let mut smallest: Option<Rational> = None;
    for k in 0..n {
        let piv = m[k][k].clone();
        if piv.is_zero() {
            return None;
        }
        smallest = Some(match smallest {
            Some(v) if v < piv => v,
            _ => piv.clone(),
        });
        for i in (k + 1)..n {
            let f = &m[i][k] / &piv;
            if f.is_zero() {
                continue;
            }
            for j in k..n {
                let delta = &f * &m[k][j];
                m[i][j] -= delta;
            }
        }
    }
    smallest
}

/// A cone vector in the kernel of `X`, found by exact feasibility programs
/// `{X D_ε u = 0, Σu = 1, u ≥ 0, Σ_{S^c} u ≤ α Σ_S u}` over every `(S, ε)`.
fn cone_kernel_vector(x: &Matrix<Rational>, s: usize, alpha: &Rational) -> Result<(Option<Vec<Rational>>, u64)> {
    let p = x.cols();
    let mut solved = 0;
    for support in Combinations::new(p, s) {
        for neg in sign_patterns(p, 0) {
            let mut lp = LinearProgram::new(vec![<Rational as Scalar>::zero(); p]);
            for i in 0..x.rows() {
                let row: Vec<Rational> =
                    (0..p).map(|j| if neg[j] { -x.get(i, j).clone() } else { x.get(i, j).clone() }).collect();
                if row.iter().any(|v| !v.is_zero()) {
                    lp.add_constraint(row, Relation::Eq, <Rational as Scalar>::zero());
                }
            }
            lp.add_constraint(vec![<Rational as Scalar>::one(); p], Relation::Eq, <Rational as Scalar>::one());
            let cone: Vec<Rational> =
                (0..p).map(|j| if support.contains(&j) { -alpha.clone() } else { <Rational as Scalar>::one() }).collect();
            lp.add_constraint(cone, Relation::Le, <Rational as Scalar>::zero());
            let sol = solve(&lp)?;
            solved += 1;
            if sol.status == LpStatus::Optimal {
                let v = sol.point.iter().zip(&neg).map(|(u, &n)| if n { -u.clone() } else { u.clone() }).collect();
                return Ok((Some(v), solved));
            }
        }
    }
    Ok((None, solved))
}


/// Integer matrices with `n ∈ 2..=4`, `p ∈ 3..=6` and entries in `−2..=2`.
/// Every fourth matrix gets a duplicated column, every fifth a zero column
/// and every seventh a column equal to the sum of two others, so that every
/// spark value shows up.
pub fn soundness_corpus(count: usize, seed: u64) -> Vec<DesignMatrix> {
    use rand::{Rng, SeedableRng};
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
    (0..count)
        .map(|idx| {
            let n = rng.random_range(2..=4usize);
            let p = rng.random_range(3..=6usize);
            let mut rows: Vec<Vec<i64>> = (0..n).map(|_| (0..p).map(|_| rng.random_range(-2..=2)).collect()).collect();
            let (a, b, c) = (rng.random_range(0..p), rng.random_range(0..p), rng.random_range(0..p));
            for row in rows.iter_mut() {
                if idx % 4 == 1 && a != b {
                    row[b] = row[a];
                }
                if idx % 5 == 2 {
                    row[c] = 0;
                }
                if idx % 7 == 3 && a != b && b != c && a != c {
                    row[c] = (row[a] + row[b]).clamp(-2, 2);
                }
            }
            DesignMatrix::from_integer_rows(&rows).expect("corpus entries are finite")
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::checkers::spark;
    use crate::matrix::operator_norm;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn parameter_examples() {
        let x = DesignMatrix::from_integer_rows(&[vec![1, 0, 1], vec![0, 1, 1]]).unwrap();
        let re = reduction_params(&x, 1, Property::Re).unwrap();
        assert_eq!(re.k, 3);
        assert_eq!(re.alpha, pow2(-12));
        assert_eq!(re.gamma, pow2(-12));
        let lq = reduction_params(&x, 1, Property::LqSensitivity).unwrap();
        assert_eq!(lq.gamma, pow2(-30));
        assert_eq!(lq.bit_size, 30);
        assert!(lq.within_size_bound());
        let tiny = DesignMatrix::from_integer_rows(&[vec![1, 1]]).unwrap();
        let t = reduction_params(&tiny, 1, Property::Re).unwrap();
        assert_eq!(t.k, 1);
        assert_eq!(t.alpha, pow2(-2));
    }

    #[test]
    fn size_bound_fails_only_on_tiny_shapes() {
        // 5n⌈log₂(npM)⌉ exceeds (np)² when n = 1, p = 2.
        let tiny = DesignMatrix::from_integer_rows(&[vec![1, 1]]).unwrap();
        assert!(!reduction_params(&tiny, 1, Property::LqSensitivity).unwrap().within_size_bound());
        assert!(reduction_params(&tiny, 1, Property::Re).unwrap().within_size_bound());
    }

    #[test]
    fn rejects_fractional_input_and_float_mode() {
        let x = DesignMatrix::from_rows(&[vec![0.5, 1.0, 0.0]]).unwrap();
        assert!(reduction_params(&x, 1, Property::Re).is_err());
        let y = DesignMatrix::from_integer_rows(&[vec![1, 0, 1], vec![0, 1, 1]]).unwrap();
        assert!(matches!(
            spark_via_oracle_with(&y, 1, Property::Re, Arithmetic::Float),
            Err(Error::ExactArithmeticRequired(_))
        ));
    }

    #[test]
    fn identity_norm_bound() {
        let x = DesignMatrix::from_integer_rows(&[vec![1, 0], vec![0, 1]]).unwrap();
        assert_eq!(lemma_bounds(&x).unwrap().norm_bound, Rational::from_i64(2));
    }

    #[test]
    fn norm_bound_dominates_operator_norm() {
        let mut rng = ChaCha8Rng::seed_from_u64(50);
        for _ in 0..50 {
            let rows: Vec<Vec<i64>> =
                (0..3).map(|_| (0..4).map(|_| if rng.random::<bool>() { 1 } else { -1 }).collect()).collect();
            let x = DesignMatrix::from_integer_rows(&rows).unwrap();
            let bound = lemma_bounds(&x).unwrap().norm_bound.as_f64();
            assert!(operator_norm(x.matrix()) <= bound + 1e-12);
        }
    }

    #[test]
    fn lambda_min_bound_holds() {
        let mut rng = ChaCha8Rng::seed_from_u64(51);
        let mut checked = 0;
        while checked < 20 {
            let rows: Vec<Vec<i64>> = (0..3).map(|_| (0..3).map(|_| rng.random_range(-2..=2)).collect()).collect();
            let x = DesignMatrix::from_integer_rows(&rows).unwrap();
            if spark(&x).unwrap() <= 2 {
                continue;
            }
            let bound = lemma_bounds(&x).unwrap().lambda_min_bound.as_f64();
            for support in Combinations::new(3, 2) {
                let g = crate::matrix::gram_of(&x.matrix().select_columns(&support), 1.0);
                let (lmin, _) = crate::matrix::symmetric_extreme_eigs(&g).unwrap();
                assert!(lmin >= bound * (1.0 - 1e-9));
            }
            checked += 1;
        }
    }

    #[test]
    fn ldl_pivots() {
        let pd = Matrix::from_rows(&[vec![2.0, 1.0], vec![1.0, 2.0]]).unwrap().to_rational().unwrap();
        assert!(min_ldl_pivot(&pd).unwrap().is_positive());
        let indefinite = Matrix::from_rows(&[vec![1.0, 2.0], vec![2.0, 1.0]]).unwrap().to_rational().unwrap();
        assert!(min_ldl_pivot(&indefinite).unwrap().is_negative());
    }

    #[test]
    fn duplicated_column_detected_on_every_path() {
        let x = DesignMatrix::from_integer_rows(&[vec![1, 1, 0], vec![2, 2, 1]]).unwrap();
        for property in [Property::LqSensitivity, Property::Re, Property::Compatibility] {
            let out = spark_via_oracle(&x, 2, property).unwrap();
            assert_eq!(out.spark_at_most_s, Some(true), "{property:?}");
            assert_eq!(out.arithmetic, Arithmetic::Rational);
            if let Certificate::Violation { vector, .. } = &out.certificate {
                let xv = x.matrix().to_rational().unwrap().matvec(vector);
                if property != Property::LqSensitivity {
                    assert!(xv.iter().all(Scalar::is_zero));
                }
            } else {
                panic!("expected a violation certificate");
            }
        }
    }

    #[test]
    fn independent_columns_pass() {
        let x = DesignMatrix::from_integer_rows(&[vec![1, 0, 0, 1], vec![0, 1, 0, 1], vec![0, 0, 1, 1]]).unwrap();
        assert_eq!(spark(&x).unwrap(), 4);
        for property in [Property::LqSensitivity, Property::Re, Property::Compatibility] {
            let out = spark_via_oracle(&x, 2, property).unwrap();
            assert_eq!(out.spark_at_most_s, Some(false), "{property:?}");
        }
    }

    /// Spark from `det(X_SᵀX_S) = 0` by Leibniz expansion in `i128`.
    fn spark_oracle(x: &DesignMatrix) -> usize {
        let (n, p) = (x.n(), x.p());
        let e = |i: usize, j: usize| *x.matrix().get(i, j) as i128;
        fn det(m: &[Vec<i128>]) -> i128 {
            let k = m.len();
            let mut perm: Vec<usize> = (0..k).collect();
            let mut total = 0;
            // Heap's algorithm with sign tracking.
            let mut c = vec![0usize; k];
            let mut sign = 1i128;
            total += (0..k).map(|i| m[i][perm[i]]).product::<i128>();
            let mut i = 0;
            while i < k {
                if c[i] < i {
                    if i % 2 == 0 {
                        perm.swap(0, i);
                    } else {
                        perm.swap(c[i], i);
                    }
                    sign = -sign;
                    total += sign * (0..k).map(|r| m[r][perm[r]]).product::<i128>();
                    c[i] += 1;
                    i = 0;
                } else {
                    c[i] = 0;
                    i += 1;
                }
            }
            total
        }
        for k in 1..=p {
            for cols in Combinations::new(p, k) {
                let g: Vec<Vec<i128>> = cols
                    .iter()
                    .map(|&a| cols.iter().map(|&b| (0..n).map(|i| e(i, a) * e(i, b)).sum()).collect())
                    .collect();
                if det(&g) == 0 {
                    return k;
                }
            }
        }
        p + 1
    }

    #[test]
    fn corpus_soundness_all_properties() {
        let corpus = soundness_corpus(30, 0xC0);
        let sparks: Vec<usize> = corpus.iter().map(spark_oracle).collect();
        assert!(sparks.iter().any(|&k| k <= 2) && sparks.iter().any(|&k| k > 3));
        for (x, &k) in corpus.iter().zip(&sparks) {
            assert_eq!(spark(x).unwrap(), k);
            for s in 1..x.p() {
                for property in [Property::LqSensitivity, Property::Re, Property::Compatibility] {
                    let out = spark_via_oracle(x, s, property).unwrap();
                    assert_eq!(out.spark_at_most_s, Some(k <= s), "{property:?} s={s} {:?}", x.matrix());
                    assert!(out.params.within_size_bound());
                }
            }
        }
    }
}
