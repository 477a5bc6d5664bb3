//! `ℓq` sensitivity `min_{v ∈ C(s,α)} s^{1/q} |Ψv|_∞ / |v|_q`.
//!
//! Every subproblem fixes a support `S` and a sign pattern `ε`, and works
//! with `u = ε ∘ v ≥ 0`. Since `v` and `−v` give the same ratio, `ε` is
//! fixed to `+1` at one coordinate, halving the enumeration.

use alloc::vec;
use alloc::vec::Vec;
use core::sync::atomic::{AtomicBool, Ordering};

#[cfg(not(feature = "std"))]
use num_traits::Float;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Exp1};

use super::{check_patterns, require_cone, Mode, Property, RegularityReport, Witness};
use crate::cone::{top_support, Combinations, ConeSpec};
use crate::error::{Error, Result};
use crate::lp::{solve, LinearProgram, LpStatus, Relation};
use crate::matrix::{norm_inf, norm_q, CrossCovariance, Matrix};
use crate::scalar::{Arithmetic, Rational, Scalar};

/// Sign patterns over `p` coordinates with `ε_anchor = +1`, in binary order
/// of the remaining coordinates (bit set means `−1`).
pub fn sign_patterns(p: usize, anchor: usize) -> impl Iterator<Item = Vec<bool>> {
    (0u64..(1u64 << (p - 1))).map(move |mask| {
        let mut neg = vec![false; p];
        let mut bit = 0;
        for (i, slot) in neg.iter_mut().enumerate() {
            if i == anchor {
                continue;
            }
            *slot = (mask >> bit) & 1 == 1;
            bit += 1;
        }
        neg
    })
}

/// Signed column `ε_i Ψ_{·i}` entries, row-major.
fn signed<T: Scalar>(psi: &Matrix<T>, neg: &[bool]) -> Vec<Vec<T>> {
    (0..psi.rows())
        .map(|j| {
            psi.row(j)
                .iter()
                .zip(neg)
                .map(|(a, &n)| if n { a.negated() } else { a.clone() })
                .collect()
        })
        .collect()
}

fn cone_row<T: Scalar>(p: usize, support: &[usize], alpha: &T, width: usize) -> Vec<T> {
    let mut row = vec![T::zero(); width];
    for (i, slot) in row.iter_mut().enumerate().take(p) {
        *slot = if support.contains(&i) { alpha.negated() } else { T::one() };
    }
    row
}

/// `min t` over `u ≥ 0, Σu = 1, cone_S(u), |Ψ D_ε u|_∞ ≤ t`.
fn l1_program<T: Scalar>(rows: &[Vec<T>], support: &[usize], alpha: &T) -> LinearProgram<T> {
    let p = rows.first().map_or(0, Vec::len);
    let mut objective = vec![T::zero(); p + 1];
    objective[p] = T::one();
    let mut lp = LinearProgram::new(objective);
    for r in rows {
        if r.iter().all(|a| *a == T::zero()) {
            continue;
        }
        let mut plus: Vec<T> = r.clone();
        plus.push(T::one().negated());
        let mut minus: Vec<T> = r.iter().map(Scalar::negated).collect();
        minus.push(T::one().negated());
        lp.add_constraint(plus, Relation::Le, T::zero());
        lp.add_constraint(minus, Relation::Le, T::zero());
    }
    let mut total = vec![T::one(); p + 1];
    total[p] = T::zero();
    lp.add_constraint(total, Relation::Eq, T::one());
    lp.add_constraint(cone_row(p, support, alpha, p + 1), Relation::Le, T::zero());
    lp
}

/// Outcome of the `ℓ1` enumeration in the arithmetic of `T`.
#[derive(Debug, Clone, PartialEq)]
pub struct L1Search<T> {
    /// `min |Ψv|_∞` over the cone with `|v|₁ = 1`; the constant is `s` times this.
    pub value: T,
    /// Minimiser `v` with `|v|₁ = 1`.
    pub vector: Vec<T>,
    /// Support of the subproblem that produced `vector`.
    pub support: Vec<usize>,
    pub solved: u64,
}

/// Solve every `(S, ε)` subproblem for the supports given, in order.
///
/// With `stop_below` set the search runs sequentially and returns at the
/// first subproblem whose value is strictly below it. Otherwise subproblems
/// are dispatched to the worker pool and reduced by a strict minimum, so the
/// value does not depend on the order of `supports`.
pub fn l1_search<T: Scalar>(
    psi: &Matrix<T>,
    s: usize,
    alpha: &T,
    supports: &[Vec<usize>],
    stop_below: Option<&T>,
) -> Result<L1Search<T>> {
    let p = psi.cols();
    if s == 0 || s >= p {
        return Err(Error::InvalidParameter(alloc::format!("sparsity {s} must lie in 1..{p}")));
    }
    let per_support = |support: &Vec<usize>, stop: Option<(&T, &AtomicBool)>| -> Result<Option<L1Search<T>>> {
        let mut best: Option<L1Search<T>> = None;
        let mut solved = 0;
        for neg in sign_patterns(p, 0) {
            if let Some((_, flag)) = stop {
                if flag.load(Ordering::Relaxed) {
                    break;
                }
            }
            let rows = signed(psi, &neg);
            let sol = solve(&l1_program(&rows, support, alpha))?;
            solved += 1;
            if sol.status != LpStatus::Optimal {
                // Always feasible (u = e_i for i ∈ S) and bounded below by 0.
                return Err(Error::Infeasible(alloc::format!("sensitivity subproblem reported {:?}", sol.status)));
            }
            let t = sol.value.expect("optimal");
            if best.as_ref().is_none_or(|b| t < b.value) {
                let vector =
                    sol.point[..p].iter().zip(&neg).map(|(u, &n)| if n { u.negated() } else { u.clone() }).collect();
                best = Some(L1Search { value: t.clone(), vector, support: support.clone(), solved: 0 });
            }
            if let Some((limit, flag)) = stop {
                if t < *limit {
                    flag.store(true, Ordering::Relaxed);
                    break;
                }
            }
        }
        Ok(best.map(|mut b| {
            b.solved = solved;
            b
        }))
    };

    let results: Vec<Result<Option<L1Search<T>>>> = match stop_below {
        Some(limit) => {
            let flag = AtomicBool::new(false);
            let mut out = Vec::new();
            for support in supports {
                out.push(per_support(support, Some((limit, &flag))));
                if flag.load(Ordering::Relaxed) {
                    break;
                }
            }
            out
        }
        None => crate::par::map(supports.to_vec(), |support| per_support(&support, None)),
    };

    let mut best: Option<L1Search<T>> = None;
    let mut solved = 0;
    for r in results {
        if let Some(cand) = r? {
            solved += cand.solved;
            if best.as_ref().is_none_or(|b| cand.value < b.value) {
                best = Some(cand);
            }
        }
    }
    let mut best = best.ok_or_else(|| Error::InvalidParameter("no supports to enumerate".into()))?;
    best.solved = solved;
    Ok(best)
}

/// `s^{1/q} |Ψv|_∞ / |v|_q`, the defining ratio.
pub fn sensitivity_ratio(psi: &Matrix, v: &[f64], spec: &ConeSpec) -> f64 {
    let num = norm_inf(&psi.matvec(v));
    spec.s_pow() * num / norm_q(v, spec.q)
}

fn check_q(spec: &ConeSpec, want: &str, ok: bool) -> Result<()> {
    if ok {
        Ok(())
    } else {
        Err(Error::InvalidParameter(alloc::format!("{want} requires q = {want}, got q = {}", spec.q)))
    }
}

/// Exact `ℓ1` sensitivity in floating-point simplex arithmetic.
pub fn l1_sensitivity(psi: &CrossCovariance, spec: &ConeSpec) -> Result<RegularityReport> {
    l1_sensitivity_with(psi, spec, Arithmetic::Float)
}

/// Exact `ℓ1` sensitivity in the requested LP arithmetic. In rational mode
/// `Ψ` and `α` are converted exactly and the constant is rounded only at
/// the end.
pub fn l1_sensitivity_with(psi: &CrossCovariance, spec: &ConeSpec, arithmetic: Arithmetic) -> Result<RegularityReport> {
    check_q(spec, "1", spec.q == 1.0)?;
    let m = psi.matrix();
    require_cone(spec, m.cols())?;
    check_patterns(m.cols(), spec.s, 1)?;
    let supports: Vec<Vec<usize>> = Combinations::new(m.cols(), spec.s).collect();
    let (value, vector, solved) = match arithmetic {
        Arithmetic::Float => {
            let r = l1_search(m, spec.s, &spec.alpha, &supports, None)?;
            (r.value, r.vector, r.solved)
        }
        Arithmetic::Rational => {
            let exact = m.to_rational()?;
            let alpha = Rational::from_f64(spec.alpha)?;
            let r = l1_search(&exact, spec.s, &alpha, &supports, None)?;
            (r.value.as_f64(), r.vector.iter().map(Scalar::as_f64).collect(), r.solved)
        }
    };
    let support = top_support(&vector, spec.s);
    Ok(RegularityReport {
        property: Property::LqSensitivity,
        spec: Some(*spec),
        constant: spec.s as f64 * value,
        mode: Mode::Exact,
        lower_bound: None,
        witness: Some(Witness { vector, support }),
        enumeration_size: solved,
        arithmetic,
    })
}

/// Exact `ℓ∞` sensitivity `min |Ψv|_∞ / |v|_∞`.
///
/// Subproblems are indexed by `(S, k, ε)` with `k ∈ S` the coordinate
/// attaining `|v|_∞`: the largest entry of any cone vector lies in its
/// top-`s` support, which is a valid cone support.
pub fn linf_sensitivity(psi: &CrossCovariance, spec: &ConeSpec) -> Result<RegularityReport> {
    check_q(spec, "inf", spec.q.is_infinite())?;
    let m = psi.matrix();
    let p = m.cols();
    require_cone(spec, p)?;
    check_patterns(p, spec.s, 2 * p as u128)?;
    let tasks: Vec<(Vec<usize>, usize)> =
        Combinations::new(p, spec.s).flat_map(|s| s.clone().into_iter().map(move |k| (s.clone(), k))).collect();
    let alpha = spec.alpha;
    let results = crate::par::map(tasks, |(support, k)| -> Result<(f64, Vec<f64>, u64)> {
        let mut best = (f64::INFINITY, Vec::new(), 0u64);
        for neg in sign_patterns(p, k) {
            let rows = signed(m, &neg);
            let mut objective = vec![0.0; p + 1];
            objective[p] = 1.0;
            let mut lp = LinearProgram::new(objective);
            for r in rows.iter().filter(|r| r.iter().any(|a| *a != 0.0)) {
                let mut plus = r.clone();
                plus.push(-1.0);
                let mut minus: Vec<f64> = r.iter().map(|a| -a).collect();
                minus.push(-1.0);
                lp.add_constraint(plus, Relation::Le, 0.0);
                lp.add_constraint(minus, Relation::Le, 0.0);
            }
            lp.add_constraint(cone_row(p, &support, &alpha, p + 1), Relation::Le, 0.0);
            for j in 0..p {
                let lo = if j == k { 1.0 } else { 0.0 };
                lp.set_bounds(j, Some(lo), Some(1.0));
            }
            let sol = solve(&lp)?;
            best.2 += 1;
            if sol.status != LpStatus::Optimal {
                return Err(Error::Infeasible(alloc::format!("sensitivity subproblem reported {:?}", sol.status)));
            }
            let t = sol.value.expect("optimal");
            if t < best.0 {
                let v = sol.point[..p].iter().zip(&neg).map(|(u, &n)| if n { -u } else { *u }).collect();
                best = (t, v, best.2);
            }
        }
        Ok(best)
    });
    let mut best = (f64::INFINITY, Vec::new());
    let mut solved = 0;
    for r in results {
        let (t, v, n) = r?;
        solved += n;
        if t < best.0 {
            best = (t, v);
        }
    }
    let support = top_support(&best.1, spec.s);
    Ok(RegularityReport {
        property: Property::LqSensitivity,
        spec: Some(*spec),
        constant: best.0,
        mode: Mode::Exact,
        lower_bound: None,
        witness: Some(Witness { vector: best.1, support }),
        enumeration_size: solved,
        arithmetic: Arithmetic::Float,
    })
}

/// `ℓq` sensitivity for any `q`, dispatching to the exact enumerations at
/// `q ∈ {1, ∞}`.
pub fn sensitivity(psi: &CrossCovariance, spec: &ConeSpec) -> Result<RegularityReport> {
    lq_sensitivity(psi, spec)
}

pub fn lq_sensitivity(psi: &CrossCovariance, spec: &ConeSpec) -> Result<RegularityReport> {
    lq_sensitivity_with(psi, spec, &super::SearchConfig::default())
}

/// Upper bound on the `ℓq` sensitivity for `1 < q < ∞`, with the certified
/// lower bound `s^{1/q − 1} γ₁` from the exact `ℓ1` constant.
///
/// On a sign-pattern polytope the constant is `s^{1/q} / max |u|_q` over
/// `Q = {u ≥ 0, cone_S(u), |ΨD_ε u|_∞ ≤ 1}`. A convex function attains its
/// maximum over `Q` at a vertex, and each multistart run climbs between
/// vertices by maximising the linearisation of `|u|_q` with the simplex
/// solver until `|u|_q` stops increasing.
pub fn lq_sensitivity_with(
    psi: &CrossCovariance,
    spec: &ConeSpec,
    config: &super::SearchConfig,
) -> Result<RegularityReport> {
    if spec.q == 1.0 {
        return l1_sensitivity(psi, spec);
    }
    if spec.q.is_infinite() {
        return linf_sensitivity(psi, spec);
    }
    let m = psi.matrix();
    let p = m.cols();
    require_cone(spec, p)?;
    check_patterns(p, spec.s, 1)?;
    let l1 = l1_sensitivity(psi, &ConeSpec { q: 1.0, ..*spec })?;
    let lower = libm::pow(spec.s as f64, 1.0 / spec.q - 1.0) * l1.constant;
    let q = spec.q;

    let mut tasks = Vec::new();
    for (si, support) in Combinations::new(p, spec.s).enumerate() {
        for (ei, neg) in sign_patterns(p, 0).enumerate() {
            tasks.push((si, ei, support.clone(), neg));
        }
    }
    let solved = tasks.len() as u64;
    let results = crate::par::map(tasks, |(si, ei, support, neg)| -> Result<Option<Vec<f64>>> {
        let rows = signed(m, &neg);
        let l1_sol = solve(&l1_program(&rows, &support, &spec.alpha))?;
        let t = l1_sol.value.unwrap_or(0.0);
        let start: Vec<f64> = l1_sol.point[..p].to_vec();
        let flip = |u: &[f64]| -> Vec<f64> { u.iter().zip(&neg).map(|(x, &n)| if n { -x } else { *x }).collect() };
        if t <= 1e-12 {
            // A cone vector annihilated by Ψ: the constant is zero.
            return Ok(Some(flip(&start)));
        }
        let mut base = LinearProgram::new(vec![0.0; p]);
        for r in rows.iter().filter(|r| r.iter().any(|a| *a != 0.0)) {
            base.add_constraint(r.clone(), Relation::Le, 1.0);
            base.add_constraint(r.iter().map(|a| -a).collect(), Relation::Le, 1.0);
        }
        base.add_constraint(cone_row(p, &support, &spec.alpha, p), Relation::Le, 0.0);
        let maximize = |w: &[f64]| -> Result<Option<Vec<f64>>> {
            let mut lp = base.clone();
            lp.objective = w.iter().map(|x| -x).collect();
            let sol = solve(&lp)?;
            Ok(match sol.status {
                LpStatus::Optimal => Some(sol.point),
                _ => None,
            })
        };
        let climb = |mut u: Vec<f64>| -> Result<Vec<f64>> {
            let mut val = norm_q(&u, q);
            for _ in 0..config.max_iter {
                let grad: Vec<f64> = u.iter().map(|x| x.max(0.0).powf(q - 1.0)).collect();
                let Some(next) = maximize(&grad)? else { break };
                let next_val = norm_q(&next, q);
                if next_val <= val * (1.0 + config.tol) {
                    break;
                }
                u = next;
                val = next_val;
            }
            Ok(u)
        };
        let mut rng = ChaCha8Rng::seed_from_u64(config.seed ^ ((si as u64) << 32 | ei as u64).wrapping_mul(0x9e37_79b9_7f4a_7c15));
        let mut best = climb(start.iter().map(|x| x / t).collect())?;
        let mut best_val = norm_q(&best, q);
        for _ in 0..config.starts {
            let w: Vec<f64> = (0..p).map(|_| Exp1.sample(&mut rng)).collect();
            let Some(u0) = maximize(&w)? else { continue };
            let u = climb(u0)?;
            let v = norm_q(&u, q);
            if v > best_val {
                best_val = v;
                best = u;
            }
        }
        Ok(Some(flip(&best)))
    });

    let mut best: Option<(f64, Vec<f64>)> = None;
    for r in results {
        if let Some(v) = r? {
            let ratio = sensitivity_ratio(m, &v, spec);
            if best.as_ref().is_none_or(|b| ratio < b.0) {
                best = Some((ratio, v));
            }
        }
    }
    let (constant, vector) = best.expect("at least one subproblem");
    let scale = norm_q(&vector, q);
    let vector: Vec<f64> = vector.iter().map(|x| x / scale).collect();
    let support = top_support(&vector, spec.s);
    Ok(RegularityReport {
        property: Property::LqSensitivity,
        spec: Some(*spec),
        constant,
        mode: Mode::UpperBound,
        lower_bound: Some(lower),
        witness: Some(Witness { vector, support }),
        enumeration_size: solved,
        arithmetic: Arithmetic::Float,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::cone::cone_membership_tol;
    use crate::matrix::norm1;
    use rand::Rng;

    fn psi(rows: &[Vec<f64>]) -> CrossCovariance {
        CrossCovariance::from_rows(rows).unwrap()
    }

    fn identity(p: usize) -> CrossCovariance {
        CrossCovariance::new(Matrix::identity(p)).unwrap()
    }

    fn random_psi(rng: &mut ChaCha8Rng, l: usize, p: usize) -> CrossCovariance {
        psi(&(0..l).map(|_| (0..p).map(|_| rng.random_range(-1.0..1.0)).collect()).collect::<Vec<_>>())
    }

    fn assert_witness(report: &RegularityReport, m: &Matrix) {
        let spec = report.spec.unwrap();
        let w = report.witness.as_ref().unwrap();
        assert!(cone_membership_tol(&w.vector, &spec, 1e-9).0, "witness outside cone");
        let ratio = sensitivity_ratio(m, &w.vector, &spec);
        assert!((ratio - report.constant).abs() < 1e-8, "{ratio} vs {}", report.constant);
    }

    #[test]
    fn identity_l1_is_half() {
        let spec = ConeSpec::l1(2, 1.0).unwrap();
        for arith in [Arithmetic::Float, Arithmetic::Rational] {
            let r = l1_sensitivity_with(&identity(6), &spec, arith).unwrap();
            assert!((r.constant - 0.5).abs() < 1e-12);
            assert_eq!(r.mode, Mode::Exact);
            assert_eq!(r.enumeration_size, 15 * 32);
            assert_witness(&r, &Matrix::identity(6));
        }
    }

    #[test]
    fn identity_matches_analytic_formula() {
        // |v|₁ ≤ (1+α)s|v|_∞ is tight when αs is an integer and p ≥ s(1+α).
        for (p, s, alpha) in [(4, 1, 1.0), (6, 2, 0.5), (6, 2, 2.0), (5, 2, 1.5)] {
            let r = l1_sensitivity(&identity(p), &ConeSpec::l1(s, alpha).unwrap()).unwrap();
            assert!((r.constant - 1.0 / (1.0 + alpha)).abs() < 1e-10, "p={p} s={s} α={alpha}");
        }
    }

    #[test]
    fn diagonal_harmonic_bound() {
        for s in [2usize, 3] {
            let p = s + 3;
            let mut d = vec![1.0; p];
            d[0] = 1.0 / s as f64;
            let spec = ConeSpec::l1(s, 1.0).unwrap();
            let r = l1_sensitivity(&CrossCovariance::new(Matrix::diagonal(&d)).unwrap(), &spec).unwrap();
            let bound = 1.0 / ((1.0 + spec.alpha) * (1.0 + (1.0 - 1.0 / s as f64)));
            assert!(r.constant >= bound - 1e-9, "{} < {bound}", r.constant);
        }
    }

    #[test]
    fn homogeneity_and_permutation() {
        let mut rng = ChaCha8Rng::seed_from_u64(41);
        let spec = ConeSpec::l1(2, 0.75).unwrap();
        for _ in 0..4 {
            let base = random_psi(&mut rng, 4, 5);
            let r0 = l1_sensitivity(&base, &spec).unwrap().constant;
            let c = rng.random_range(0.2..5.0);
            let scaled = CrossCovariance::new(base.matrix().scaled(&c)).unwrap();
            assert!((l1_sensitivity(&scaled, &spec).unwrap().constant - c * r0).abs() < 1e-9);
            let perm = [3, 0, 4, 1, 2];
            let permuted = CrossCovariance::new(base.matrix().select_columns(&perm)).unwrap();
            assert!((l1_sensitivity(&permuted, &spec).unwrap().constant - r0).abs() < 1e-9);
        }
    }

    #[test]
    fn exact_homogeneity_in_rationals() {
        let m = Matrix::from_rows(&[vec![1.0, -2.0, 0.5, 1.0], vec![0.0, 1.0, 1.0, -1.0]]).unwrap().to_rational().unwrap();
        let alpha = Rational::from_f64(0.5).unwrap();
        let supports: Vec<Vec<usize>> = Combinations::new(4, 2).collect();
        let base = l1_search(&m, 2, &alpha, &supports, None).unwrap().value;
        let c = Rational::new(7.into(), 3.into());
        let scaled = m.scaled(&c);
        assert_eq!(l1_search(&scaled, 2, &alpha, &supports, None).unwrap().value, base * c);
    }

    #[test]
    fn support_order_does_not_matter() {
        let mut rng = ChaCha8Rng::seed_from_u64(8);
        let m = random_psi(&mut rng, 5, 5).matrix().to_rational().unwrap();
        let alpha = Rational::from_i64(1);
        let forward: Vec<Vec<usize>> = Combinations::new(5, 2).collect();
        let mut backward = forward.clone();
        backward.reverse();
        let a = l1_search(&m, 2, &alpha, &forward, None).unwrap();
        let b = l1_search(&m, 2, &alpha, &backward, None).unwrap();
        assert_eq!(a.value, b.value);
        assert_eq!(a.solved, b.solved);
    }

    #[test]
    fn random_witnesses_reproduce() {
        let mut rng = ChaCha8Rng::seed_from_u64(99);
        for _ in 0..5 {
            let m = random_psi(&mut rng, 4, 5);
            for spec in [ConeSpec::l1(2, 1.0).unwrap(), ConeSpec::linf(2, 0.5).unwrap()] {
                let r = lq_sensitivity(&m, &spec).unwrap();
                assert_witness(&r, m.matrix());
            }
        }
    }

    #[test]
    fn linf_scaling_examples() {
        let spec = ConeSpec::linf(2, 1.0).unwrap();
        assert!((linf_sensitivity(&identity(5), &spec).unwrap().constant - 1.0).abs() < 1e-12);
        let two = CrossCovariance::new(Matrix::identity(5).scaled(&2.0)).unwrap();
        assert!((linf_sensitivity(&two, &spec).unwrap().constant - 2.0).abs() < 1e-12);
    }

    fn solve_square(mut m: Vec<Vec<f64>>, mut r: Vec<f64>) -> Option<Vec<f64>> {
        let n = r.len();
        for c in 0..n {
            let piv = (c..n).max_by(|&i, &j| m[i][c].abs().total_cmp(&m[j][c].abs()))?;
            if m[piv][c].abs() < 1e-11 {
                return None;
            }
            m.swap(piv, c);
            r.swap(piv, c);
            for i in 0..n {
                if i != c {
                    let f = m[i][c] / m[c][c];
                    for k in c..n {
                        m[i][k] -= f * m[c][k];
                    }
                    r[i] -= f * r[c];
                }
            }
        }
        Some((0..n).map(|i| r[i] / m[i][i]).collect())
    }

    /// `s^{1/q} / max |u|_q` over the vertices of every
    /// `{u ≥ 0, cone_S(u), |ΨD_ε u|_∞ ≤ 1}`, by brute-force vertex enumeration.
    fn vertex_oracle(m: &Matrix, spec: &ConeSpec) -> f64 {
        let p = m.cols();
        let mut best: f64 = 0.0;
        for support in Combinations::new(p, spec.s) {
            for neg in sign_patterns(p, 0) {
                let mut rows: Vec<(Vec<f64>, f64)> = Vec::new();
                for j in 0..p {
                    let mut e = vec![0.0; p];
                    e[j] = -1.0;
                    rows.push((e, 0.0));
                }
                rows.push(((0..p).map(|i| if support.contains(&i) { -spec.alpha } else { 1.0 }).collect(), 0.0));
                for j in 0..m.rows() {
                    let r: Vec<f64> = (0..p).map(|i| if neg[i] { -m.get(j, i) } else { *m.get(j, i) }).collect();
                    rows.push((r.iter().map(|x| -x).collect(), 1.0));
                    rows.push((r, 1.0));
                }
                for active in Combinations::new(rows.len(), p) {
                    let a: Vec<Vec<f64>> = active.iter().map(|&k| rows[k].0.clone()).collect();
                    let b: Vec<f64> = active.iter().map(|&k| rows[k].1).collect();
                    if let Some(u) = solve_square(a, b) {
                        let feasible = rows.iter().all(|(r, rhs)| r.iter().zip(&u).map(|(x, y)| x * y).sum::<f64>() <= rhs + 1e-9);
                        if feasible {
                            best = best.max(norm_q(&u, spec.q));
                        }
                    }
                }
            }
        }
        spec.s_pow() / best
    }

    #[test]
    fn linf_matches_vertex_enumeration() {
        let mut rng = ChaCha8Rng::seed_from_u64(6);
        let m = random_psi(&mut rng, 6, 6);
        let spec = ConeSpec::linf(2, 1.0).unwrap();
        let got = linf_sensitivity(&m, &spec).unwrap().constant;
        let want = vertex_oracle(m.matrix(), &spec);
        assert!((got - want).abs() < 1e-6, "{got} vs {want}");
    }

    #[test]
    fn lq_identity_sandwich_and_q1_consistency() {
        let spec = ConeSpec::new(2, 1.0, 2.0).unwrap();
        let r = lq_sensitivity(&identity(5), &spec).unwrap();
        let lower = r.lower_bound.unwrap();
        assert_eq!(r.mode, Mode::UpperBound);
        assert!(r.constant <= 1.0 + 1e-12 && r.constant >= lower - 1e-12);
        assert!((lower - 0.5 / 2f64.sqrt()).abs() < 1e-12);
        let q1 = ConeSpec::l1(2, 1.0).unwrap();
        assert_eq!(lq_sensitivity(&identity(5), &q1).unwrap(), l1_sensitivity(&identity(5), &q1).unwrap());
    }

    /// Coarse sampling of the unit `ℓq` sphere restricted to the cone, each
    /// sample refined by a shrinking-step pattern search.
    fn grid_oracle(m: &Matrix, spec: &ConeSpec, rng: &mut ChaCha8Rng) -> f64 {
        let p = m.cols();
        let ratio = |v: &[f64]| {
            if cone_membership_tol(v, spec, 0.0).0 && norm1(v) > 0.0 {
                sensitivity_ratio(m, v, spec)
            } else {
                f64::INFINITY
            }
        };
        let levels = [-1.0, -0.5, -0.25, 0.0, 0.25, 0.5, 1.0];
        let mut seeds: Vec<(f64, Vec<f64>)> = Vec::new();
        let mut idx = vec![0usize; p];
        loop {
            let v: Vec<f64> = idx.iter().map(|&k| levels[k]).collect();
            let r = ratio(&v);
            if r.is_finite() {
                seeds.push((r, v));
            }
            let mut k = 0;
            while k < p {
                idx[k] += 1;
                if idx[k] < levels.len() {
                    break;
                }
                idx[k] = 0;
                k += 1;
            }
            if k == p {
                break;
            }
        }
        seeds.sort_by(|a, b| a.0.total_cmp(&b.0));
        seeds.truncate(40);
        let mut best = f64::INFINITY;
        for (mut r, mut v) in seeds {
            let mut step = 0.25;
            while step > 1e-9 {
                let mut improved = false;
                for i in 0..p {
                    for d in [step, -step] {
                        let mut w = v.clone();
                        w[i] += d;
                        let rw = ratio(&w);
                        if rw < r {
                            r = rw;
                            v = w;
                            improved = true;
                        }
                    }
                }
                for _ in 0..4 {
                    let w: Vec<f64> = v.iter().map(|x| x + step * rng.random_range(-1.0..1.0)).collect();
                    let rw = ratio(&w);
                    if rw < r {
                        r = rw;
                        v = w;
                        improved = true;
                    }
                }
                if !improved {
                    step *= 0.5;
                }
            }
            best = best.min(r);
        }
        best
    }

    #[test]
    fn lq_matches_oracles() {
        let mut rng = ChaCha8Rng::seed_from_u64(12);
        let m = random_psi(&mut rng, 5, 5);
        let spec = ConeSpec::new(2, 1.0, 2.0).unwrap();
        let r = lq_sensitivity(&m, &spec).unwrap();
        assert_witness(&r, m.matrix());
        assert!(r.constant >= r.lower_bound.unwrap() - 1e-12);
        let grid = grid_oracle(m.matrix(), &spec, &mut rng);
        assert!(r.constant <= grid + 1e-4, "{} vs grid {grid}", r.constant);
        let exact = vertex_oracle(m.matrix(), &spec);
        assert!((r.constant - exact).abs() < 1e-6, "{} vs vertices {exact}", r.constant);
    }

    #[test]
    fn budgets_and_shapes() {
        let spec = ConeSpec::l1(2, 1.0).unwrap();
        assert!(matches!(l1_sensitivity(&identity(13), &spec), Err(Error::BudgetExceeded { .. })));
        assert!(l1_sensitivity(&identity(2), &spec).is_err());
        assert!(l1_sensitivity(&identity(4), &ConeSpec::linf(2, 1.0).unwrap()).is_err());
    }

    #[test]
    fn decide_examples() {
        use super::super::{decide, DecideInput, Verdict};
        let spec = ConeSpec::l1(2, 1.0).unwrap();
        let id = identity(6);
        let yes = decide(Property::LqSensitivity, DecideInput::Cross(&id), &spec, 0.4).unwrap();
        assert_eq!(yes.verdict, Verdict::Holds);
        let no = decide(Property::LqSensitivity, DecideInput::Cross(&id), &spec, 0.6).unwrap();
        assert_eq!(no.verdict, Verdict::Fails);
        let w = no.witness.unwrap();
        assert!(sensitivity_ratio(id.matrix(), &w.vector, &spec) < 0.6);
    }
}
