//! Regularity constants of a design or cross-covariance matrix.
//!
//! Spark, incoherence, RIP and `ℓ1`/`ℓ∞` sensitivity are computed exactly by
//! enumeration. RE, compatibility and `ℓq` sensitivity for `1 < q < ∞` are
//! reported as upper bounds attained by an explicit witness, paired with a
//! certified lower bound where one is cheap.
//!
//! Cone constants minimise over all pairs `(S, v)` with `|S| = s` and
//! `α|v_S|₁ ≥ |v_{S^c}|₁`. For a fixed `v` the top-`s` support is the
//! minimising choice, so witnesses are always evaluated on it.

mod classical;
mod restricted;
mod sensitivity;
mod spark;

use alloc::format;
use alloc::vec::Vec;

use serde::{Deserialize, Serialize};

use crate::cone::{binomial, ConeSpec};
use crate::error::{Error, Result};
use crate::matrix::{CrossCovariance, Matrix};
use crate::scalar::Arithmetic;

pub use classical::{incoherence_constant, rip_constant, rip_constant_gram};
pub use restricted::{
    compatibility_constant, compatibility_ratio, re_constant, re_lower_bound, re_ratio, SearchConfig,
};
pub use sensitivity::{
    l1_search, l1_sensitivity, l1_sensitivity_with, linf_sensitivity, lq_sensitivity, lq_sensitivity_with,
    sensitivity, sensitivity_ratio, sign_patterns, L1Search,
};
pub use spark::{spark, spark_report};

/// Largest `p` accepted by the cone enumerations.
pub const MAX_CONE_DIM: usize = 12;
/// Upper limit on `2^p · C(p, s)` for the sign-pattern enumerations.
pub const PATTERN_BUDGET: u128 = 10_000_000;
/// Upper limit on `C(p, s)` for RIP.
pub const RIP_BUDGET: u128 = 1_000_000;
/// Largest `p` accepted by spark.
pub const MAX_SPARK_DIM: usize = 20;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Property {
    Spark,
    Incoherence,
    Rip,
    Re,
    #[serde(alias = "compat")]
    Compatibility,
    #[serde(alias = "lq")]
    LqSensitivity,
}

impl core::str::FromStr for Property {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Ok(match s {
            "spark" => Self::Spark,
            "incoherence" => Self::Incoherence,
            "rip" => Self::Rip,
            "re" => Self::Re,
            "compat" | "compatibility" => Self::Compatibility,
            "lq" | "lq_sensitivity" => Self::LqSensitivity,
            other => return Err(Error::InvalidParameter(format!("unknown property {other:?}"))),
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Mode {
    Exact,
    UpperBound,
    LowerBound,
}

/// A vector attaining (or violating) a reported constant, with the support
/// used in its defining ratio.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Witness {
    pub vector: Vec<f64>,
    pub support: Vec<usize>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RegularityReport {
    pub property: Property,
    pub spec: Option<ConeSpec>,
    pub constant: f64,
    pub mode: Mode,
    /// Certified lower bound accompanying an upper-bound report.
    pub lower_bound: Option<f64>,
    pub witness: Option<Witness>,
    /// Number of `(support, sign pattern)` subproblems solved.
    pub enumeration_size: u64,
    pub arithmetic: Arithmetic,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Verdict {
    Holds,
    Fails,
    Indeterminate,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Decision {
    pub verdict: Verdict,
    pub gamma: f64,
    /// Best known lower and upper bounds on the constant; equal when exact.
    pub lower: Option<f64>,
    pub upper: Option<f64>,
    /// Violating vector when the property fails.
    pub witness: Option<Witness>,
}

impl Decision {
    pub fn holds(&self) -> Option<bool> {
        match self.verdict {
            Verdict::Holds => Some(true),
            Verdict::Fails => Some(false),
            Verdict::Indeterminate => None,
        }
    }
}

/// Matrix handed to [`decide`]: the normalised design (or a covariance
/// root) for RE and compatibility, a cross-covariance for sensitivity.
#[derive(Debug, Clone, Copy)]
pub enum DecideInput<'a> {
    Design(&'a Matrix),
    Cross(&'a CrossCovariance),
}

/// Whether the property holds with parameters `(s, α, γ)`.
///
/// Exact constants are compared with `γ` directly; for the `ℓ1` case the
/// enumeration stops at the first subproblem below `γ / s`. Bound-mode
/// properties hold when the certified lower bound reaches `γ`, fail when the
/// witnessed upper bound is below it, and are indeterminate otherwise.
pub fn decide(property: Property, input: DecideInput<'_>, spec: &ConeSpec, gamma: f64) -> Result<Decision> {
    if !gamma.is_finite() {
        return Err(Error::InvalidParameter(format!("γ = {gamma} must be finite")));
    }
    match (property, input) {
        (Property::LqSensitivity, DecideInput::Cross(psi)) if spec.q == 1.0 => {
            let m = psi.matrix();
            check_patterns(m.cols(), spec.s, 1)?;
            let supports: Vec<Vec<usize>> = crate::cone::Combinations::new(m.cols(), spec.s).collect();
            let threshold = gamma / spec.s as f64;
            let found = l1_search(m, spec.s, &spec.alpha, &supports, Some(&threshold))?;
            let value = spec.s as f64 * found.value;
            if value < gamma {
                Ok(Decision {
                    verdict: Verdict::Fails,
                    gamma,
                    lower: None,
                    upper: Some(value),
                    witness: Some(Witness { vector: found.vector, support: found.support }),
                })
            } else {
                Ok(Decision { verdict: Verdict::Holds, gamma, lower: Some(value), upper: Some(value), witness: None })
            }
        }
        (Property::LqSensitivity, DecideInput::Cross(psi)) => {
            let report = sensitivity(psi, spec)?;
            Ok(Decision::from_report(report, gamma))
        }
        (Property::Re | Property::Compatibility, DecideInput::Design(a)) => {
            let lower = re_lower_bound(a, spec)?;
            if lower >= gamma {
                return Ok(Decision { verdict: Verdict::Holds, gamma, lower: Some(lower), upper: None, witness: None });
            }
            let config = SearchConfig::default();
            let report = if property == Property::Re {
                re_constant(a, spec, &config)?
            } else {
                compatibility_constant(a, spec, &config)?
            };
            Ok(Decision::from_report(report, gamma))
        }
        (p, _) => Err(Error::InvalidParameter(format!("decide does not support {p:?} with this input"))),
    }
}

impl Decision {
    /// Verdict implied by a finished report: exact constants compare
    /// directly, bounds may leave the answer indeterminate.
    pub fn from_report(report: RegularityReport, gamma: f64) -> Decision {
        let upper = report.constant;
        let lower = match report.mode {
            Mode::Exact => Some(upper),
            _ => report.lower_bound,
        };
        let verdict = if upper < gamma {
            Verdict::Fails
        } else if lower.is_some_and(|l| l >= gamma) {
            Verdict::Holds
        } else {
            Verdict::Indeterminate
        };
        Decision {
            verdict,
            gamma,
            lower,
            upper: Some(upper),
            witness: if verdict == Verdict::Fails { report.witness } else { None },
        }
    }
}

/// Enforces `p ≤ 12` and `2^p · C(p, s) · extra ≤ 10⁷`.
pub(crate) fn check_patterns(p: usize, s: usize, extra: u128) -> Result<u128> {
    if p > MAX_CONE_DIM {
        return Err(Error::BudgetExceeded { needed: p as u128, limit: MAX_CONE_DIM as u128 });
    }
    let needed = (1u128 << p).saturating_mul(binomial(p, s)).saturating_mul(extra);
    if needed > PATTERN_BUDGET {
        return Err(Error::BudgetExceeded { needed, limit: PATTERN_BUDGET });
    }
    Ok(needed)
}

pub(crate) fn require_cone(spec: &ConeSpec, p: usize) -> Result<()> {
    spec.check_dimension(p)
}
