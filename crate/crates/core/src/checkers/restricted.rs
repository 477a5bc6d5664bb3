//! Restricted eigenvalue and compatibility constants of a matrix `A`
//! (`X/√n` for a sample, `Σ^{1/2}` for a population).
//!
//! Both are searched over the `(S, ε)` polytopes
//! `P = {u ≥ 0, Σu = 1, Σ_{S^c} u ≤ α Σ_S u}` with `v = ε ∘ u`.
//! Compatibility is a convex quadratic program on each polytope; RE is the
//! ratio `uᵀ G_ε u / |u_S|₂²`, which is smooth on `P` because
//! `Σ_S u ≥ 1/(1+α)` there.

use alloc::vec;
use alloc::vec::Vec;

#[cfg(not(feature = "std"))]
use num_traits::Float;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Exp1};
use serde::{Deserialize, Serialize};

use super::sensitivity::sign_patterns;
use super::{check_patterns, require_cone, Mode, Property, RegularityReport, Witness, RIP_BUDGET};
use crate::cone::{binomial, split_l1, top_support, Combinations, ConeSpec};
use crate::error::{Error, Result};
use crate::matrix::{norm2, operator_norm, symmetric_extreme_eigs, Matrix};
use crate::scalar::Arithmetic;

/// Multistart settings shared by the non-enumerable searches.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SearchConfig {
    /// Random starts; for RE they are dealt round-robin over the
    /// `(S, ε)` polytopes on top of the deterministic starts of each.
    pub starts: usize,
    /// Convergence tolerance on successive iterates.
    pub tol: f64,
    pub max_iter: usize,
    pub seed: u64,
}

impl Default for SearchConfig {
    fn default() -> Self {
        Self { starts: 200, tol: 1e-9, max_iter: 500, seed: 0x5eed_2e9c }
    }
}

/// `|Av|₂ / |v_S|₂` on the top-`s` support of `v`.
pub fn re_ratio(a: &Matrix, v: &[f64], s: usize) -> f64 {
    let support = top_support(v, s);
    let on: Vec<f64> = support.iter().map(|&i| v[i]).collect();
    norm2(&a.matvec(v)) / norm2(&on)
}

/// `√s |Av|₂ / |v_S|₁` on the top-`s` support of `v`.
pub fn compatibility_ratio(a: &Matrix, v: &[f64], s: usize) -> f64 {
    let support = top_support(v, s);
    let (on, _) = split_l1(v, &support);
    (s as f64).sqrt() * norm2(&a.matvec(v)) / on
}

/// Certified lower bound shared by RE and compatibility:
/// `min_S σ_min(A_S) − α √s ‖A_{S^c}‖₂`, clamped at zero.
///
/// For a cone pair `(S, v)`, `|v_{S^c}|₂ ≤ |v_{S^c}|₁ ≤ α√s |v_S|₂`, so
/// `|Av|₂ ≥ (σ_min(A_S) − α√s‖A_{S^c}‖) |v_S|₂`.
pub fn re_lower_bound(a: &Matrix, spec: &ConeSpec) -> Result<f64> {
    let p = a.cols();
    require_cone(spec, p)?;
    let needed = binomial(p, spec.s);
    if needed > RIP_BUDGET {
        return Err(Error::BudgetExceeded { needed, limit: RIP_BUDGET });
    }
    let g = crate::matrix::gram_of(a, 1.0);
    let mut best = f64::INFINITY;
    for support in Combinations::new(p, spec.s) {
        let (lmin, _) = symmetric_extreme_eigs(&g.principal(&support))?;
        let rest: Vec<usize> = (0..p).filter(|i| !support.contains(i)).collect();
        let off = operator_norm(&a.select_columns(&rest));
        let bound = lmin.max(0.0).sqrt() - spec.alpha * (spec.s as f64).sqrt() * off;
        best = best.min(bound);
    }
    Ok(best.max(0.0))
}

fn signed_gram(g: &Matrix, neg: &[bool]) -> Vec<Vec<f64>> {
    let p = g.cols();
    (0..p)
        .map(|i| {
            (0..p)
                .map(|j| if neg[i] != neg[j] { -g.get(i, j) } else { *g.get(i, j) })
                .collect()
        })
        .collect()
}

fn quad(g: &[Vec<f64>], u: &[f64]) -> f64 {
    g.iter().zip(u).map(|(row, ui)| ui * row.iter().zip(u).map(|(a, b)| a * b).sum::<f64>()).sum()
}

fn mat_vec(g: &[Vec<f64>], u: &[f64]) -> Vec<f64> {
    g.iter().map(|row| row.iter().zip(u).map(|(a, b)| a * b).sum()).collect()
}

/// Euclidean projection onto `{x ≥ 0, Σx = r}`.
fn project_simplex(y: &[f64], r: f64) -> Vec<f64> {
    let mut sorted: Vec<f64> = y.to_vec();
    sorted.sort_by(|a, b| b.total_cmp(a));
    let mut acc = 0.0;
    let mut theta = 0.0;
    for (k, v) in sorted.iter().enumerate() {
        acc += v;
        let t = (acc - r) / (k as f64 + 1.0);
        if v - t > 0.0 {
            theta = t;
        }
    }
    y.iter().map(|v| (v - theta).max(0.0)).collect()
}

/// Euclidean projection onto `{x ≥ 0, Σx ≤ r}`.
fn project_capped(y: &[f64], r: f64) -> Vec<f64> {
    let clipped: Vec<f64> = y.iter().map(|v| v.max(0.0)).collect();
    if clipped.iter().sum::<f64>() <= r {
        clipped
    } else {
        project_simplex(y, r)
    }
}

/// Euclidean projection onto `P = {u ≥ 0, Σu = 1, Σ_{S^c} u ≤ α Σ_S u}`.
///
/// The KKT conditions give `u = max(0, y − λ − μw)` with `w = 1` off `S`,
/// `w = −α` on `S` and `μ ≥ 0`; for fixed `μ`, `λ` comes from a simplex
/// projection, and the cone slack is monotone in `μ`, so `μ` is bisected.
fn project_cone_simplex(y: &[f64], on: &[bool], alpha: f64) -> Vec<f64> {
    let w: Vec<f64> = on.iter().map(|&b| if b { -alpha } else { 1.0 }).collect();
    let at = |mu: f64| {
        let shifted: Vec<f64> = y.iter().zip(&w).map(|(a, b)| a - mu * b).collect();
        project_simplex(&shifted, 1.0)
    };
    let slack = |u: &[f64]| u.iter().zip(&w).map(|(a, b)| a * b).sum::<f64>();
    let u0 = at(0.0);
    if slack(&u0) <= 0.0 {
        return u0;
    }
    let mut lo = 0.0;
    let mut hi = 1.0;
    let mut u_hi = at(hi);
    while slack(&u_hi) > 0.0 {
        lo = hi;
        hi *= 2.0;
        u_hi = at(hi);
    }
    for _ in 0..60 {
        let mid = 0.5 * (lo + hi);
        let u = at(mid);
        if slack(&u) > 0.0 {
            lo = mid;
        } else {
            hi = mid;
            u_hi = u;
        }
    }
    u_hi
}

struct Pattern {
    support: Vec<usize>,
    neg: Vec<bool>,
    on: Vec<bool>,
}

fn patterns(p: usize, s: usize) -> Vec<Pattern> {
    let mut out = Vec::new();
    for support in Combinations::new(p, s) {
        let on: Vec<bool> = (0..p).map(|i| support.contains(&i)).collect();
        for neg in sign_patterns(p, 0) {
            out.push(Pattern { support: support.clone(), neg, on: on.clone() });
        }
    }
    out
}

fn to_v(u: &[f64], neg: &[bool]) -> Vec<f64> {
    u.iter().zip(neg).map(|(x, &n)| if n { -x } else { *x }).collect()
}

/// Accelerated projected gradient for `min uᵀ G_ε u` over
/// `{u_S ∈ simplex, u_{S^c} ≥ 0, Σ u_{S^c} ≤ α}` (the compatibility
/// normalisation `|v_S|₁ = 1`).
fn compat_pattern(g: &[Vec<f64>], on: &[bool], alpha: f64, lipschitz: f64, config: &SearchConfig) -> Vec<f64> {
    let p = on.len();
    let s = on.iter().filter(|b| **b).count() as f64;
    let project = |y: &[f64]| -> Vec<f64> {
        let ys: Vec<f64> = (0..p).filter(|&i| on[i]).map(|i| y[i]).collect();
        let yo: Vec<f64> = (0..p).filter(|&i| !on[i]).map(|i| y[i]).collect();
        let (ps, po) = (project_simplex(&ys, 1.0), project_capped(&yo, alpha));
        let (mut a, mut b) = (ps.into_iter(), po.into_iter());
        (0..p).map(|i| if on[i] { a.next().unwrap() } else { b.next().unwrap() }).collect()
    };
    let mut u: Vec<f64> = on.iter().map(|&b| if b { 1.0 / s } else { 0.0 }).collect();
    let mut y = u.clone();
    let mut t = 1.0f64;
    let step = 1.0 / lipschitz.max(1e-300);
    let iterations = 40 * config.max_iter;
    for _ in 0..iterations {
        let grad = mat_vec(g, &y);
        let next = project(&y.iter().zip(&grad).map(|(a, b)| a - 2.0 * step * b).collect::<Vec<_>>());
        let t_next = 0.5 * (1.0 + (1.0 + 4.0 * t * t).sqrt());
        let moved = next.iter().zip(&u).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
        y = next.iter().zip(&u).map(|(a, b)| a + (t - 1.0) / t_next * (a - b)).collect();
        u = next;
        t = t_next;
        if moved < config.tol * 1e-3 {
            break;
        }
    }
    u
}

/// Projected gradient with Armijo backtracking for `uᵀG_εu / |u_S|₂²` on `P`.
fn re_descent(g: &[Vec<f64>], on: &[bool], alpha: f64, start: Vec<f64>, config: &SearchConfig) -> (f64, Vec<f64>) {
    let f = |u: &[f64]| {
        let d: f64 = u.iter().zip(on).filter(|(_, &b)| b).map(|(x, _)| x * x).sum();
        (quad(g, u) / d, d)
    };
    let mut u = project_cone_simplex(&start, on, alpha);
    let (mut val, mut d) = f(&u);
    let mut eta = 1.0;
    for _ in 0..config.max_iter {
        let gu = mat_vec(g, &u);
        let grad: Vec<f64> = (0..u.len())
            .map(|i| 2.0 * gu[i] / d - if on[i] { 2.0 * val * u[i] / d } else { 0.0 })
            .collect();
        let mut accepted = None;
        while eta > 1e-14 {
            let trial: Vec<f64> = u.iter().zip(&grad).map(|(a, b)| a - eta * b).collect();
            let next = project_cone_simplex(&trial, on, alpha);
            let diff: Vec<f64> = next.iter().zip(&u).map(|(a, b)| a - b).collect();
            let (nv, nd) = f(&next);
            let lin: f64 = grad.iter().zip(&diff).map(|(a, b)| a * b).sum();
            let sq: f64 = diff.iter().map(|x| x * x).sum();
            if nv <= val + lin + sq / (2.0 * eta) {
                accepted = Some((next, nv, nd, sq));
                break;
            }
            eta *= 0.5;
        }
        let Some((next, nv, nd, sq)) = accepted else { break };
        let converged = sq.sqrt() < config.tol || val - nv <= config.tol * val.abs().max(1e-300) * 1e-3;
        u = next;
        val = nv;
        d = nd;
        eta *= 2.0;
        if converged {
            break;
        }
    }
    (val, u)
}

fn search_budget(a: &Matrix, spec: &ConeSpec) -> Result<u128> {
    require_cone(spec, a.cols())?;
    check_patterns(a.cols(), spec.s, 1)
}

/// Best compatibility witness over every polytope: `(ratio, v)`.
fn compat_search(a: &Matrix, spec: &ConeSpec, config: &SearchConfig) -> (f64, Vec<f64>, u64) {
    let p = a.cols();
    let g = crate::matrix::gram_of(a, 1.0);
    let lipschitz = 2.0 * crate::matrix::jacobi_eigen(&g).0[p - 1].max(0.0);
    let pats = patterns(p, spec.s);
    let solved = pats.len() as u64;
    let results = crate::par::map(pats, |pat| {
        let ge = signed_gram(&g, &pat.neg);
        let u = compat_pattern(&ge, &pat.on, spec.alpha, lipschitz, config);
        let v = to_v(&u, &pat.neg);
        (compatibility_ratio(a, &v, spec.s), v)
    });
    let mut best = (f64::INFINITY, Vec::new());
    for (r, v) in results {
        if r < best.0 {
            best = (r, v);
        }
    }
    (best.0, best.1, solved)
}

/// Upper bound on `min √s |Av|₂ / |v_S|₁` over `C(s, α)`.
pub fn compatibility_constant(a: &Matrix, spec: &ConeSpec, config: &SearchConfig) -> Result<RegularityReport> {
    search_budget(a, spec)?;
    let lower = re_lower_bound(a, spec)?;
    let (constant, vector, solved) = compat_search(a, spec, config);
    let support = top_support(&vector, spec.s);
    Ok(RegularityReport {
        property: Property::Compatibility,
        spec: Some(*spec),
        constant,
        mode: Mode::UpperBound,
        lower_bound: Some(lower),
        witness: Some(Witness { vector, support }),
        enumeration_size: solved,
        arithmetic: Arithmetic::Float,
    })
}

/// Upper bound on `min |Av|₂ / |v_S|₂` over `C(s, α)`.
///
/// Each polytope is started from `e_i` for `i ∈ S`, the flat vector on `S`,
/// and its compatibility minimiser; the configured random starts are dealt
/// round-robin across polytopes. Since `|v_S|₁ ≤ √s |v_S|₂`, seeding with
/// the compatibility witnesses guarantees the result never exceeds the
/// compatibility bound.
pub fn re_constant(a: &Matrix, spec: &ConeSpec, config: &SearchConfig) -> Result<RegularityReport> {
    search_budget(a, spec)?;
    let lower = re_lower_bound(a, spec)?;
    let p = a.cols();
    let g = crate::matrix::gram_of(a, 1.0);
    let lipschitz = 2.0 * crate::matrix::jacobi_eigen(&g).0[p - 1].max(0.0);
    let pats = patterns(p, spec.s);
    let count = pats.len();
    let solved = count as u64;
    let indexed: Vec<(usize, Pattern)> = pats.into_iter().enumerate().collect();
    let results = crate::par::map(indexed, |(k, pat)| {
        let ge = signed_gram(&g, &pat.neg);
        let mut starts: Vec<Vec<f64>> = pat
            .support
            .iter()
            .map(|&i| {
                let mut e = vec![0.0; p];
                e[i] = 1.0;
                e
            })
            .collect();
        starts.push(pat.on.iter().map(|&b| if b { 1.0 / spec.s as f64 } else { 0.0 }).collect());
        starts.push(compat_pattern(&ge, &pat.on, spec.alpha, lipschitz, config));
        let extra = config.starts / count + usize::from(k < config.starts % count);
        let mut rng = ChaCha8Rng::seed_from_u64(config.seed.wrapping_add((k as u64).wrapping_mul(0x9e37_79b9_7f4a_7c15)));
        for _ in 0..extra {
            let e: Vec<f64> = (0..p).map(|_| Exp1.sample(&mut rng)).collect();
            let total: f64 = e.iter().sum();
            starts.push(e.iter().map(|x| x / total).collect());
        }
        let mut best = (f64::INFINITY, Vec::new());
        for start in starts {
            let (_, u) = re_descent(&ge, &pat.on, spec.alpha, start, config);
            let v = to_v(&u, &pat.neg);
            let r = re_ratio(a, &v, spec.s);
            if r < best.0 {
                best = (r, v);
            }
        }
        best
    });
    let mut best = (f64::INFINITY, Vec::new());
    for (r, v) in results {
        if r < best.0 {
            best = (r, v);
        }
    }
    let support = top_support(&best.1, spec.s);
    Ok(RegularityReport {
        property: Property::Re,
        spec: Some(*spec),
        constant: best.0,
        mode: Mode::UpperBound,
        lower_bound: Some(lower),
        witness: Some(Witness { vector: best.1, support }),
        enumeration_size: solved,
        arithmetic: Arithmetic::Float,
    })
}
