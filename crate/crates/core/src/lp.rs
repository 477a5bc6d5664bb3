//! Dense two-phase tableau simplex.
//!
//! The solver is generic over [`Scalar`]: with `f64` it prices by Dantzig's
//! rule and falls back to Bland's rule after a run of degenerate pivots;
//! with [`Rational`](crate::Rational) it always uses Bland's rule, which
//! guarantees termination, and every comparison is exact.

use alloc::format;
use alloc::vec;
use alloc::vec::Vec;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::scalar::{Arithmetic, Rational, Scalar};

const DEGENERATE_RUN_LIMIT: usize = 50;
const ITERATION_LIMIT: usize = 200_000;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Relation {
    Le,
    Eq,
    Ge,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Constraint<T> {
    pub coeffs: Vec<T>,
    pub relation: Relation,
    pub rhs: T,
}

/// `minimize objectiveᵀ x` subject to linear constraints and per-variable
/// bounds (`None` is an infinite bound).
#[derive(Debug, Clone, PartialEq)]
pub struct LinearProgram<T = f64> {
    pub objective: Vec<T>,
    pub constraints: Vec<Constraint<T>>,
    pub bounds: Vec<(Option<T>, Option<T>)>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum LpStatus {
    Optimal,
    Infeasible,
    Unbounded,
}

#[derive(Debug, Clone, PartialEq)]
pub struct LpSolution<T = f64> {
    pub status: LpStatus,
    /// Objective at the optimum; `None` unless optimal.
    pub value: Option<T>,
    /// Optimal assignment; empty unless optimal.
    pub point: Vec<T>,
    pub arithmetic: Arithmetic,
    pub pivots: usize,
}

impl<T: Scalar> LinearProgram<T> {
    /// A program over `objective.len()` non-negative variables.
    pub fn new(objective: Vec<T>) -> Self {
        let n = objective.len();
        Self { objective, constraints: Vec::new(), bounds: vec![(Some(T::zero()), None); n] }
    }

    pub fn num_vars(&self) -> usize {
        self.objective.len()
    }

    pub fn add_constraint(&mut self, coeffs: Vec<T>, relation: Relation, rhs: T) -> &mut Self {
        self.constraints.push(Constraint { coeffs, relation, rhs });
        self
    }

    pub fn set_bounds(&mut self, var: usize, lower: Option<T>, upper: Option<T>) -> &mut Self {
        self.bounds[var] = (lower, upper);
        self
    }

    pub fn validate(&self) -> Result<()> {
        let n = self.objective.len();
        if n == 0 {
            return Err(Error::DimensionMismatch("linear program without variables".into()));
        }
        if self.bounds.len() != n {
            return Err(Error::DimensionMismatch(format!(
                "{} bounds for {n} variables",
                self.bounds.len()
            )));
        }
        for (i, c) in self.constraints.iter().enumerate() {
            if c.coeffs.len() != n {
                return Err(Error::DimensionMismatch(format!(
                    "constraint {i} has {} coefficients, expected {n}",
                    c.coeffs.len()
                )));
            }
        }
        for (i, (lo, hi)) in self.bounds.iter().enumerate() {
            if let (Some(l), Some(u)) = (lo, hi) {
                if l.cmp_tol(u).is_gt() {
                    return Err(Error::InvalidParameter(format!("variable {i} has lower bound above upper")));
                }
            }
        }
        Ok(())
    }

    /// Largest constraint violation of `x` (zero when feasible).
    pub fn max_violation(&self, x: &[T]) -> T {
        let mut worst = T::zero();
        let mut bump = |v: T| {
            if v > worst {
                worst = v;
            }
        };
        for c in &self.constraints {
            let lhs = c.coeffs.iter().zip(x).fold(T::zero(), |a, (p, q)| a.plus(&p.times(q)));
            let gap = lhs.minus(&c.rhs);
            match c.relation {
                Relation::Le => bump(gap),
                Relation::Ge => bump(gap.negated()),
                Relation::Eq => bump(gap.magnitude()),
            }
        }
        for (xi, (lo, hi)) in x.iter().zip(&self.bounds) {
            if let Some(l) = lo {
                bump(l.minus(xi));
            }
            if let Some(u) = hi {
                bump(xi.minus(u));
            }
        }
        worst
    }

    pub fn objective_at(&self, x: &[T]) -> T {
        self.objective.iter().zip(x).fold(T::zero(), |a, (c, v)| a.plus(&c.times(v)))
    }
}

impl LinearProgram<f64> {
    /// Exact rational copy; every finite `f64` is a dyadic rational.
    pub fn to_rational(&self) -> Result<LinearProgram<Rational>> {
        let conv = |v: &[f64]| v.iter().map(|&x| Rational::from_f64(x)).collect::<Result<Vec<_>>>();
        let conv_opt = |b: &Option<f64>| b.map(Rational::from_f64).transpose();
        Ok(LinearProgram {
            objective: conv(&self.objective)?,
            constraints: self
                .constraints
                .iter()
                .map(|c| {
                    Ok(Constraint { coeffs: conv(&c.coeffs)?, relation: c.relation, rhs: Rational::from_f64(c.rhs)? })
                })
                .collect::<Result<Vec<_>>>()?,
            bounds: self
                .bounds
                .iter()
                .map(|(l, u)| Ok((conv_opt(l)?, conv_opt(u)?)))
                .collect::<Result<Vec<_>>>()?,
        })
    }
}

/// Solve a float-encoded program in the requested arithmetic. In rational
/// mode the input is converted exactly and the answer rounded back at the end.
pub fn solve_with(lp: &LinearProgram<f64>, arithmetic: Arithmetic) -> Result<LpSolution<f64>> {
    match arithmetic {
        Arithmetic::Float => solve(lp),
        Arithmetic::Rational => {
            let exact = solve(&lp.to_rational()?)?;
            Ok(LpSolution {
                status: exact.status,
                value: exact.value.as_ref().map(Scalar::as_f64),
                point: exact.point.iter().map(Scalar::as_f64).collect(),
                arithmetic: Arithmetic::Rational,
                pivots: exact.pivots,
            })
        }
    }
}

enum VarMap {
    /// `x = lower + y`
    Shift(usize),
    /// `x = upper - y`
    Flip(usize),
    /// `x = y⁺ - y⁻`
    Split(usize, usize),
}

pub fn solve<T: Scalar>(lp: &LinearProgram<T>) -> Result<LpSolution<T>> {
    lp.validate()?;
    let n = lp.num_vars();

    // Map each variable onto non-negative structural columns.
    let mut maps = Vec::with_capacity(n);
    let mut ny = 0;
    let mut extra_rows: Vec<(usize, T)> = Vec::new();
    for (lo, hi) in &lp.bounds {
        match (lo, hi) {
            (Some(l), hi) => {
                maps.push(VarMap::Shift(ny));
                if let Some(u) = hi {
                    extra_rows.push((ny, u.minus(l)));
                }
                ny += 1;
            }
            (None, Some(_)) => {
                maps.push(VarMap::Flip(ny));
                ny += 1;
            }
            (None, None) => {
                maps.push(VarMap::Split(ny, ny + 1));
                ny += 2;
            }
        }
    }

    // Rows in y-space: (coeffs, relation, rhs).
    let mut rows: Vec<(Vec<T>, Relation, T)> = Vec::with_capacity(lp.constraints.len() + extra_rows.len());
    for c in &lp.constraints {
        let mut coeffs = vec![T::zero(); ny];
        let mut rhs = c.rhs.clone();
        for (j, a) in c.coeffs.iter().enumerate() {
            if *a == T::zero() {
                continue;
            }
            match maps[j] {
                VarMap::Shift(k) => {
                    coeffs[k] = a.clone();
                    rhs = rhs.minus(&a.times(lp.bounds[j].0.as_ref().expect("shifted var has lower")));
                }
                VarMap::Flip(k) => {
                    coeffs[k] = a.negated();
                    rhs = rhs.minus(&a.times(lp.bounds[j].1.as_ref().expect("flipped var has upper")));
                }
                VarMap::Split(k, m) => {
                    coeffs[k] = a.clone();
                    coeffs[m] = a.negated();
                }
            }
        }
        rows.push((coeffs, c.relation, rhs));
    }
    for (k, width) in extra_rows {
        let mut coeffs = vec![T::zero(); ny];
        coeffs[k] = T::one();
        rows.push((coeffs, Relation::Le, width));
    }

    // Objective in y-space; the constant shift is recovered from `point`.
    let mut cost = vec![T::zero(); ny];
    for (j, c) in lp.objective.iter().enumerate() {
        match maps[j] {
            VarMap::Shift(k) => {
                cost[k] = c.clone();
            }
            VarMap::Flip(k) => {
                cost[k] = c.negated();
            }
            VarMap::Split(k, m) => {
                cost[k] = c.clone();
                cost[m] = c.negated();
            }
        }
    }

    let mut tableau = Tableau::build(rows, ny);
    let mut pivots = 0;

    let infeasible = |pivots| LpSolution {
        status: LpStatus::Infeasible,
        value: None,
        point: Vec::new(),
        arithmetic: T::ARITHMETIC,
        pivots,
    };

    if tableau.art_start < tableau.width {
        // Phase 1: minimise the sum of artificials.
        let mut phase1 = vec![T::zero(); tableau.width];
        for c in phase1.iter_mut().skip(tableau.art_start) {
            *c = T::one();
        }
        tableau.set_objective(&phase1);
        match tableau.run(tableau.width, &mut pivots)? {
            RunOutcome::Optimal => {}
            RunOutcome::Unbounded => unreachable!("phase 1 objective is bounded below by zero"),
        }
        let phase1_value = tableau.objective_value();
        if phase1_value.is_positive() {
            return Ok(infeasible(pivots));
        }
        tableau.evict_artificials(&mut pivots);
    }

    let mut phase2 = vec![T::zero(); tableau.width];
    phase2[..ny].clone_from_slice(&cost);
    tableau.set_objective(&phase2);
    let outcome = tableau.run(tableau.art_start, &mut pivots)?;
    if let RunOutcome::Unbounded = outcome {
        return Ok(LpSolution {
            status: LpStatus::Unbounded,
            value: None,
            point: Vec::new(),
            arithmetic: T::ARITHMETIC,
            pivots,
        });
    }

    let y = tableau.primal(ny);
    let point: Vec<T> = maps
        .iter()
        .enumerate()
        .map(|(j, m)| match *m {
            VarMap::Shift(k) => lp.bounds[j].0.as_ref().unwrap().plus(&y[k]),
            VarMap::Flip(k) => lp.bounds[j].1.as_ref().unwrap().minus(&y[k]),
            VarMap::Split(k, m) => y[k].minus(&y[m]),
        })
        .collect();
    let value = lp.objective_at(&point);
    Ok(LpSolution { status: LpStatus::Optimal, value: Some(value), point, arithmetic: T::ARITHMETIC, pivots })
}

enum RunOutcome {
    Optimal,
    Unbounded,
}

struct Tableau<T> {
    /// Constraint rows, each `width + 1` long (last entry is the rhs).
    rows: Vec<Vec<T>>,
    /// Reduced costs, last entry is minus the objective value.
    z: Vec<T>,
    basis: Vec<usize>,
    width: usize,
    art_start: usize,
}

impl<T: Scalar> Tableau<T> {
    fn build(rows: Vec<(Vec<T>, Relation, T)>, ny: usize) -> Self {
        let mut n_slack = 0;
        let mut n_art = 0;
        let mut normalized = Vec::with_capacity(rows.len());
        for (mut coeffs, mut rel, mut rhs) in rows {
            if rhs < T::zero() {
                coeffs.iter_mut().for_each(|a| *a = a.negated());
                rhs = rhs.negated();
                rel = match rel {
                    Relation::Le => Relation::Ge,
                    Relation::Ge => Relation::Le,
                    Relation::Eq => Relation::Eq,
                };
            }
            match rel {
                Relation::Le => n_slack += 1,
                Relation::Ge => {
                    n_slack += 1;
                    n_art += 1;
                }
                Relation::Eq => n_art += 1,
            }
            normalized.push((coeffs, rel, rhs));
        }
        let art_start = ny + n_slack;
        let width = art_start + n_art;
        let mut slack = ny;
        let mut art = art_start;
        let mut table = Vec::with_capacity(normalized.len());
        let mut basis = Vec::with_capacity(normalized.len());
        for (coeffs, rel, rhs) in normalized {
            let mut row = coeffs;
            row.resize(width + 1, T::zero());
            row[width] = rhs;
            match rel {
                Relation::Le => {
                    row[slack] = T::one();
                    basis.push(slack);
                    slack += 1;
                }
                Relation::Ge => {
                    row[slack] = T::one().negated();
                    slack += 1;
                    row[art] = T::one();
                    basis.push(art);
                    art += 1;
                }
                Relation::Eq => {
                    row[art] = T::one();
                    basis.push(art);
                    art += 1;
                }
            }
            table.push(row);
        }
        Self { rows: table, z: vec![T::zero(); width + 1], basis, width, art_start }
    }

    fn set_objective(&mut self, cost: &[T]) {
        let mut z: Vec<T> = cost.to_vec();
        z.push(T::zero());
        for (row, &b) in self.rows.iter().zip(&self.basis) {
            let cb = &cost[b];
            if *cb == T::zero() {
                continue;
            }
            for (zj, rj) in z.iter_mut().zip(row) {
                zj.sub_mul_assign(cb, rj);
            }
        }
        self.z = z;
    }

    fn objective_value(&self) -> T {
        self.z[self.width].negated()
    }

    fn primal(&self, ny: usize) -> Vec<T> {
        let mut y = vec![T::zero(); ny];
        for (row, &b) in self.rows.iter().zip(&self.basis) {
            if b < ny {
                y[b] = row[self.width].clone();
            }
        }
        y
    }

    fn pivot(&mut self, r: usize, c: usize) {
        let w = self.width;
        let piv = self.rows[r][c].clone();
        {
            let row = &mut self.rows[r];
            for v in row.iter_mut() {
                *v = v.over(&piv);
            }
            row[c] = T::one();
        }
        let pivot_row = self.rows[r].clone();
        let nz: Vec<usize> = (0..=w).filter(|&j| pivot_row[j] != T::zero()).collect();
        for (i, row) in self.rows.iter_mut().enumerate() {
            if i == r {
                continue;
            }
            let f = row[c].clone();
            if f == T::zero() {
                continue;
            }
            for &j in &nz {
                row[j].sub_mul_assign(&f, &pivot_row[j]);
            }
            row[c] = T::zero();
        }
        let f = self.z[c].clone();
        if f != T::zero() {
            for &j in &nz {
                self.z[j].sub_mul_assign(&f, &pivot_row[j]);
            }
            self.z[c] = T::zero();
        }
        self.basis[r] = c;
    }

    /// Iterate to optimality over columns `0..allowed`.
    fn run(&mut self, allowed: usize, pivots: &mut usize) -> Result<RunOutcome> {
        let mut bland = T::ARITHMETIC == Arithmetic::Rational;
        let mut degenerate_run = 0;
        let mut iterations = 0;
        loop {
            iterations += 1;
            if iterations > ITERATION_LIMIT {
                return Err(Error::InvalidParameter(format!(
                    "simplex did not terminate within {ITERATION_LIMIT} pivots"
                )));
            }
            let entering = if bland {
                (0..allowed).find(|&j| self.z[j].is_negative())
            } else {
                let mut best: Option<usize> = None;
                for j in 0..allowed {
                    if self.z[j].is_negative() && best.is_none_or(|b| self.z[j] < self.z[b]) {
                        best = Some(j);
                    }
                }
                best
            };
            let Some(c) = entering else {
                return Ok(RunOutcome::Optimal);
            };
            let w = self.width;
            let mut leave: Option<(usize, T)> = None;
            for (i, row) in self.rows.iter().enumerate() {
                if !row[c].is_positive() {
                    continue;
                }
                let ratio = row[w].over(&row[c]);
                leave = match leave {
                    None => Some((i, ratio)),
                    Some((k, best)) => match ratio.cmp_tol(&best) {
                        core::cmp::Ordering::Less => Some((i, ratio)),
                        core::cmp::Ordering::Equal if self.basis[i] < self.basis[k] => Some((i, ratio)),
                        _ => Some((k, best)),
                    },
                };
            }
            let Some((r, ratio)) = leave else {
                return Ok(RunOutcome::Unbounded);
            };
            if ratio.is_zero() {
                degenerate_run += 1;
                if degenerate_run > DEGENERATE_RUN_LIMIT {
                    bland = true;
                }
            } else {
                degenerate_run = 0;
            }
            self.pivot(r, c);
            *pivots += 1;
        }
    }

    /// Pivot zero-level artificials out of the basis; drop redundant rows.
    fn evict_artificials(&mut self, pivots: &mut usize) {
        let mut i = 0;
        while i < self.rows.len() {
            if self.basis[i] >= self.art_start {
                let row = &self.rows[i];
                let col = (0..self.art_start)
                    .filter(|&j| !row[j].is_zero())
                    .max_by(|&a, &b| {
                        row[a].magnitude().partial_cmp(&row[b].magnitude()).unwrap_or(core::cmp::Ordering::Equal)
                    });
                match col {
                    Some(c) => {
                        self.pivot(i, c);
                        *pivots += 1;
                    }
                    None => {
                        self.rows.remove(i);
                        self.basis.remove(i);
                        continue;
                    }
                }
            }
            i += 1;
        }
    }
}
