//! Operations that preserve `ℓq` sensitivity, each paired with a computed
//! certificate for its hypothesis.
//!
//! Constants are never taken on trust: the expansion factor, the new cone
//! parameters and the perturbation size are all derived from the payload.
//! Declared values, when supplied, must be implied by the derived ones.

use alloc::format;
use alloc::vec;
use alloc::vec::Vec;

#[cfg(not(feature = "std"))]
use num_traits::Float;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::checkers::sensitivity;
use crate::cone::ConeSpec;
use crate::error::{Error, Result};
use crate::matrix::{CrossCovariance, DesignMatrix, InstrumentMatrix, Matrix};

/// Tolerance for `MᵀM = I` and for the preserved product `ZᵀX`.
pub const ORTHOGONALITY_TOL: f64 = 1e-10;

/// Slack below which an audited inequality counts as violated.
pub const AUDIT_TOL: f64 = 1e-9;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum TransformKind {
    /// `X' = MX`, `Z' = MZ` with `M` an `n × n` orthogonal matrix.
    OrthogonalRows { m: Vec<Vec<f64>> },
    /// `X' = XM` with `M` a `p × p` monomial matrix (a permutation times a
    /// nonsingular diagonal), the verifiable cone-preserving family.
    ConePreservingRight { m: Vec<Vec<f64>> },
    /// `Z' = ZM` with `M` an invertible `L × L` matrix.
    LinfExpansiveLeft { m: Vec<Vec<f64>> },
    /// `Ψ' = Ψ + Δ`.
    AdditivePerturbation { delta: Vec<Vec<f64>> },
    /// `((X + X₂)/2, (Z + Z₂)/2)`.
    Averaging { x2: Vec<Vec<f64>>, z2: Vec<Vec<f64>> },
}

/// Optional user-declared hypothesis constants, checked against the
/// computed ones.
#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
pub struct Declared {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub c: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub delta: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub s_prime: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub alpha_prime: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TransformSpec {
    #[serde(flatten)]
    pub kind: TransformKind,
    #[serde(default)]
    pub declared: Declared,
}

impl TransformSpec {
    pub fn new(kind: TransformKind) -> Self {
        Self { kind, declared: Declared::default() }
    }

    pub fn name(&self) -> &'static str {
        match self.kind {
            TransformKind::OrthogonalRows { .. } => "orthogonal_rows",
            TransformKind::ConePreservingRight { .. } => "cone_preserving_right",
            TransformKind::LinfExpansiveLeft { .. } => "linf_expansive_left",
            TransformKind::AdditivePerturbation { .. } => "additive_perturbation",
            TransformKind::Averaging { .. } => "averaging",
        }
    }
}

/// `|M|_{q,∞} = sup_v |Mv|_∞ / |v|_q`: the largest row norm in the dual
/// exponent, so max entry (`q = 1`), max row `ℓ2` norm (`q = 2`) or max
/// row `ℓ1` sum (`q = ∞`).
pub fn induced_norm(m: &Matrix, from_q: f64) -> Result<f64> {
    let row_norm: fn(&[f64]) -> f64 = if from_q == 1.0 {
        |r| r.iter().fold(0.0, |a, v| a.max(v.abs()))
    } else if from_q == 2.0 {
        |r| r.iter().map(|v| v * v).sum::<f64>().sqrt()
    } else if from_q.is_infinite() && from_q > 0.0 {
        |r| r.iter().map(|v| v.abs()).sum()
    } else {
        return Err(Error::UnsupportedNorm(from_q));
    };
    Ok((0..m.rows()).map(|i| row_norm(m.row(i))).fold(0.0, f64::max))
}

fn is_orthogonal(m: &Matrix) -> bool {
    let Ok(mtm) = m.tmul(m) else { return false };
    m.rows() == m.cols()
        && (0..m.cols()).all(|i| {
            (0..m.cols()).all(|j| (mtm.get(i, j) - if i == j { 1.0 } else { 0.0 }).abs() <= ORTHOGONALITY_TOL)
        })
}

/// Nonzero entries `(column, value)` per row if `m` is square monomial.
fn monomial_entries(m: &Matrix) -> Option<Vec<(usize, f64)>> {
    if m.rows() != m.cols() {
        return None;
    }
    let mut seen = vec![false; m.cols()];
    let mut out = Vec::with_capacity(m.rows());
    for i in 0..m.rows() {
        let nz: Vec<usize> = (0..m.cols()).filter(|&j| *m.get(i, j) != 0.0).collect();
        if nz.len() != 1 || seen[nz[0]] {
            return None;
        }
        seen[nz[0]] = true;
        out.push((nz[0], *m.get(i, nz[0])));
    }
    Some(out)
}

/// Gauss–Jordan inverse with partial pivoting; `None` when singular to
/// working precision.
fn inverse(m: &Matrix) -> Option<Matrix> {
    let n = m.rows();
    if n != m.cols() {
        return None;
    }
    let scale = m.max_abs().max(f64::MIN_POSITIVE);
    let mut a = m.to_rows();
    let mut inv = Matrix::<f64>::identity(n).to_rows();
    for col in 0..n {
        let piv = (col..n).max_by(|&i, &j| a[i][col].abs().total_cmp(&a[j][col].abs()))?;
        if a[piv][col].abs() <= 1e-13 * scale {
            return None;
        }
        a.swap(col, piv);
        inv.swap(col, piv);
        let d = a[col][col];
        a[col].iter_mut().for_each(|v| *v /= d);
        inv[col].iter_mut().for_each(|v| *v /= d);
        for i in 0..n {
            if i != col && a[i][col] != 0.0 {
                let f = a[i][col];
                for j in 0..n {
                    a[i][j] -= f * a[col][j];
                    inv[i][j] -= f * inv[col][j];
                }
            }
        }
    }
    Matrix::from_rows(&inv).ok()
}

/// Constants derived from a payload.
#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
pub struct DerivedConstants {
    /// Multiplicative factor on `γ` (parts 2 and 3).
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub c: Option<f64>,
    /// Cone the original pair must satisfy (part 2).
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub s_prime: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub alpha_prime: Option<f64>,
    /// Additive loss on `γ` (additive operations).
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub delta_eff: Option<f64>,
}

/// Apply a transform to `(X, Z)`. Additive perturbations act on `Ψ`
/// directly and are handled by [`perturbation_certificate`].
pub fn apply(spec: &TransformSpec, x: &DesignMatrix, z: &InstrumentMatrix) -> Result<(DesignMatrix, InstrumentMatrix)> {
    if x.n() != z.n() {
        return Err(Error::DimensionMismatch(format!("X has {} rows, Z has {}", x.n(), z.n())));
    }
    match &spec.kind {
        TransformKind::OrthogonalRows { m } => {
            let m = Matrix::from_rows(m)?;
            if m.rows() != x.n() || !is_orthogonal(&m) {
                return Err(Error::Hypothesis(format!("payload is not an orthogonal {}×{} matrix", x.n(), x.n())));
            }
            let x2 = DesignMatrix::new(m.matmul(x.matrix())?)?;
            let z2 = InstrumentMatrix::new(m.matmul(z.matrix())?)?;
            let before = z.matrix().tmul(x.matrix())?;
            let after = z2.matrix().tmul(x2.matrix())?;
            let gap = after.sub(&before)?.max_abs();
            if gap > ORTHOGONALITY_TOL * before.max_abs().max(1.0) {
                return Err(Error::Hypothesis(format!("ZᵀX changed by {gap:e}")));
            }
            Ok((x2, z2))
        }
        TransformKind::ConePreservingRight { m } => {
            let m = Matrix::from_rows(m)?;
            if m.rows() != x.p() || monomial_entries(&m).is_none() {
                return Err(Error::Hypothesis(format!("payload is not a {}×{} monomial matrix", x.p(), x.p())));
            }
            Ok((DesignMatrix::new(x.matrix().matmul(&m)?)?, z.clone()))
        }
        TransformKind::LinfExpansiveLeft { m } => {
            let m = Matrix::from_rows(m)?;
            if m.rows() != z.l() || m.cols() != z.l() {
                return Err(Error::DimensionMismatch(format!("payload must be {}×{}", z.l(), z.l())));
            }
            Ok((x.clone(), InstrumentMatrix::new(z.matrix().matmul(&m)?)?))
        }
        TransformKind::Averaging { x2, z2 } => {
            let (x2, z2) = (Matrix::from_rows(x2)?, Matrix::from_rows(z2)?);
            let xa = x.matrix().add(&x2)?.scaled(&0.5);
            let za = z.matrix().add(&z2)?.scaled(&0.5);
            Ok((DesignMatrix::new(xa)?, InstrumentMatrix::new(za)?))
        }
        TransformKind::AdditivePerturbation { .. } => {
            Err(Error::InvalidParameter("additive perturbations act on Ψ; use the perturbation certificate".into()))
        }
    }
}

/// Computed hypothesis constants for a transform at the target cone.
pub fn derive_constants(spec: &TransformSpec, cone: &ConeSpec) -> Result<DerivedConstants> {
    let out = match &spec.kind {
        TransformKind::OrthogonalRows { .. } | TransformKind::Averaging { .. } => DerivedConstants::default(),
        TransformKind::ConePreservingRight { m } => {
            let m = Matrix::from_rows(m)?;
            let entries = monomial_entries(&m).ok_or_else(|| Error::Hypothesis("payload is not monomial".into()))?;
            let lo = entries.iter().fold(f64::INFINITY, |a, e| a.min(e.1.abs()));
            let hi = entries.iter().fold(0.0f64, |a, e| a.max(e.1.abs()));
            // |Mv|_q ≥ min|d| |v|_q, and Mv keeps the permuted support with
            // opening at most α·max|d|/min|d|.
            DerivedConstants { c: Some(lo), s_prime: Some(cone.s), alpha_prime: Some(cone.alpha * hi / lo), delta_eff: None }
        }
        TransformKind::LinfExpansiveLeft { m } => {
            let m = Matrix::from_rows(m)?;
            // ZᵀX v ↦ MᵀZᵀX v, and inf |Mᵀu|_∞/|u|_∞ = 1/|M⁻ᵀ|_{∞,∞}.
            let c = match inverse(&m.transpose()) {
                Some(inv) => 1.0 / induced_norm(&inv, f64::INFINITY)?,
                None => 0.0,
            };
            DerivedConstants { c: Some(c), ..Default::default() }
        }
        TransformKind::AdditivePerturbation { delta } => {
            let d = Matrix::from_rows(delta)?;
            DerivedConstants { delta_eff: Some(cone.s_pow() * induced_norm(&d, cone.q)?), ..Default::default() }
        }
    };
    check_declared(&spec.declared, &out)?;
    Ok(out)
}

fn check_declared(declared: &Declared, derived: &DerivedConstants) -> Result<()> {
    let fail = |what: &str| Err(Error::Hypothesis(format!("declared {what} is not implied by the payload")));
    for v in [declared.c, declared.delta, declared.alpha_prime].into_iter().flatten() {
        if !(v > 0.0) {
            return Err(Error::InvalidParameter("declared constants must be positive".into()));
        }
    }
    if let (Some(d), Some(c)) = (declared.c, derived.c) {
        if d > c * (1.0 + 1e-12) {
            return fail("c");
        }
    }
    if let (Some(d), Some(a)) = (declared.alpha_prime, derived.alpha_prime) {
        if d < a * (1.0 - 1e-12) {
            return fail("α'");
        }
    }
    if let (Some(d), Some(s)) = (declared.s_prime, derived.s_prime) {
        if d < s {
            return fail("s'");
        }
    }
    if let (Some(d), Some(e)) = (declared.delta, derived.delta_eff) {
        if d < e * (1.0 - 1e-12) {
            return fail("δ");
        }
    }
    Ok(())
}

fn exact_q(cone: &ConeSpec) -> Result<()> {
    if cone.q == 1.0 || cone.q.is_infinite() {
        Ok(())
    } else {
        Err(Error::UnsupportedNorm(cone.q))
    }
}

fn exact_constant(psi: &CrossCovariance, cone: &ConeSpec) -> Result<f64> {
    exact_q(cone)?;
    Ok(sensitivity(psi, cone)?.constant)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PerturbationCertificate {
    pub gamma_before: f64,
    pub delta_eff: f64,
    pub guaranteed_after: f64,
    pub observed_after: f64,
}

/// `γ(Ψ + Δ) ≥ γ(Ψ) − s^{1/q}|Δ|_{q,∞}`, with both sides computed exactly.
pub fn perturbation_certificate(psi: &CrossCovariance, delta: &Matrix, cone: &ConeSpec) -> Result<PerturbationCertificate> {
    exact_q(cone)?;
    let sum = CrossCovariance::new(psi.matrix().add(delta)?)?;
    let gamma_before = exact_constant(psi, cone)?;
    let delta_eff = cone.s_pow() * induced_norm(delta, cone.q)?;
    let observed_after = exact_constant(&sum, cone)?;
    let cert = PerturbationCertificate { gamma_before, delta_eff, guaranteed_after: gamma_before - delta_eff, observed_after };
    if cert.observed_after < cert.guaranteed_after - AUDIT_TOL {
        return Err(Error::Hypothesis(format!(
            "perturbed constant {} below guarantee {}",
            cert.observed_after, cert.guaranteed_after
        )));
    }
    Ok(cert)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AveragingCertificate {
    pub gamma1: f64,
    pub epsilon: f64,
    pub delta: f64,
    pub c: f64,
    pub bound: f64,
    pub observed: f64,
}

/// `γ(average) ≥ γ₁ − s^{1/q}(2ε + 2δ + c)/4`.
pub fn averaging_certificate(
    x1: &DesignMatrix,
    z1: &InstrumentMatrix,
    x2: &DesignMatrix,
    z2: &InstrumentMatrix,
    cone: &ConeSpec,
) -> Result<AveragingCertificate> {
    exact_q(cone)?;
    let n = x1.n();
    if [x2.n(), z1.n(), z2.n()].iter().any(|&k| k != n) || x1.p() != x2.p() || z1.l() != z2.l() {
        return Err(Error::DimensionMismatch("both pairs must share n, p and L".into()));
    }
    let inv_n = 1.0 / n as f64;
    let u = x2.matrix().sub(x1.matrix())?;
    let v = z2.matrix().sub(z1.matrix())?;
    let epsilon = induced_norm(&z1.matrix().tmul(&u)?.scaled(&inv_n), cone.q)?;
    let delta = induced_norm(&v.tmul(x1.matrix())?.scaled(&inv_n), cone.q)?;
    let c = induced_norm(&v.tmul(&u)?.scaled(&inv_n), cone.q)?;
    let gamma1 = exact_constant(&CrossCovariance::sample(z1, x1)?, cone)?;
    let bound = gamma1 - cone.s_pow() * (2.0 * epsilon + 2.0 * delta + c) / 4.0;
    let xa = DesignMatrix::new(x1.matrix().add(x2.matrix())?.scaled(&0.5))?;
    let za = InstrumentMatrix::new(z1.matrix().add(z2.matrix())?.scaled(&0.5))?;
    let observed = exact_constant(&CrossCovariance::sample(&za, &xa)?, cone)?;
    if observed < bound - AUDIT_TOL {
        return Err(Error::Hypothesis(format!("averaged constant {observed} below bound {bound}")));
    }
    Ok(AveragingCertificate { gamma1, epsilon, delta, c, bound, observed })
}

/// Before/after record for one transform.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TransformReport {
    pub kind: alloc::string::String,
    pub cone: ConeSpec,
    pub constants: DerivedConstants,
    /// Constant the theorem's hypothesis is evaluated at: `γ(s, α)` of the
    /// input, or `γ(s', α')` for the cone-preserving case.
    pub gamma_before: f64,
    pub guaranteed_after: f64,
    pub observed_after: f64,
}

impl TransformReport {
    pub fn slack(&self) -> f64 {
        self.observed_after - self.guaranteed_after
    }
}

/// Apply a transform and compare the theorem's guarantee with the exact
/// constant of the result (`q ∈ {1, ∞}`).
pub fn certify(spec: &TransformSpec, x: &DesignMatrix, z: &InstrumentMatrix, cone: &ConeSpec) -> Result<TransformReport> {
    exact_q(cone)?;
    let constants = derive_constants(spec, cone)?;
    let psi = CrossCovariance::sample(z, x)?;
    let (gamma_before, guaranteed_after, observed_after) = match &spec.kind {
        TransformKind::AdditivePerturbation { delta } => {
            let c = perturbation_certificate(&psi, &Matrix::from_rows(delta)?, cone)?;
            (c.gamma_before, c.guaranteed_after, c.observed_after)
        }
        TransformKind::Averaging { x2, z2 } => {
            let x2 = DesignMatrix::new(Matrix::from_rows(x2)?)?;
            let z2 = InstrumentMatrix::new(Matrix::from_rows(z2)?)?;
            let c = averaging_certificate(x, z, &x2, &z2, cone)?;
            (c.gamma1, c.bound, c.observed)
        }
        _ => {
            let (x2, z2) = apply(spec, x, z)?;
            let after = exact_constant(&CrossCovariance::sample(&z2, &x2)?, cone)?;
            match spec.kind {
                TransformKind::ConePreservingRight { .. } => {
                    let wide = ConeSpec::new(cone.s, constants.alpha_prime.expect("derived"), cone.q)?;
                    let before = exact_constant(&psi, &wide)?;
                    (before, constants.c.expect("derived") * before, after)
                }
                TransformKind::LinfExpansiveLeft { .. } => {
                    let before = exact_constant(&psi, cone)?;
                    (before, constants.c.expect("derived") * before, after)
                }
                _ => {
                    let before = exact_constant(&psi, cone)?;
                    (before, before, after)
                }
            }
        }
    };
    let report =
        TransformReport { kind: spec.name().into(), cone: *cone, constants, gamma_before, guaranteed_after, observed_after };
    // Orthogonal rows preserve ZᵀX, so equality is expected up to round-off.
    let tol = AUDIT_TOL * gamma_before.abs().max(1.0);
    if report.slack() < -tol {
        return Err(Error::Hypothesis(format!(
            "{}: observed {} below guarantee {}",
            report.kind, report.observed_after, report.guaranteed_after
        )));
    }
    Ok(report)
}

fn gaussian(rng: &mut ChaCha8Rng, rows: usize, cols: usize) -> Matrix {
    Matrix::new(rows, cols, (0..rows * cols).map(|_| StandardNormal.sample(rng)).collect()).expect("shape")
}

/// Product of `n` random Householder reflections.
pub fn random_orthogonal(n: usize, rng: &mut ChaCha8Rng) -> Matrix {
    let mut q = Matrix::identity(n);
    for _ in 0..n {
        let v: Vec<f64> = (0..n).map(|_| StandardNormal.sample(rng)).collect();
        let nv2: f64 = v.iter().map(|x| x * x).sum();
        let mut h = Matrix::identity(n);
        for i in 0..n {
            for j in 0..n {
                h.set(i, j, h.get(i, j) - 2.0 * v[i] * v[j] / nv2);
            }
        }
        q = h.matmul(&q).expect("square");
    }
    q
}

/// Outcome of a certificate audit.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AuditSummary {
    pub instances: usize,
    pub violations: usize,
    pub min_slack: f64,
    /// Largest `|Z'ᵀX' − ZᵀX|` over the orthogonal instances.
    pub max_orthogonal_gap: f64,
}

fn audit_cone(i: usize) -> ConeSpec {
    if i.is_multiple_of(2) {
        ConeSpec::l1(2, 1.0).expect("valid")
    } else {
        ConeSpec::linf(2, 1.0).expect("valid")
    }
}

/// `count` random transforms cycling through orthogonal rows, monomial
/// right factors, invertible left factors and averaging, on Gaussian
/// `6 × 4` designs with `L = 4`, alternating `q = 1` and `q = ∞`.
pub fn transform_audit(count: usize, seed: u64) -> Result<AuditSummary> {
    let (n, p, l) = (6, 4, 4);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut summary = AuditSummary { instances: 0, violations: 0, min_slack: f64::INFINITY, max_orthogonal_gap: 0.0 };
    for i in 0..count {
        let x = DesignMatrix::new(gaussian(&mut rng, n, p))?;
        let z = InstrumentMatrix::new(gaussian(&mut rng, n, l))?;
        let kind = match i % 4 {
            0 => TransformKind::OrthogonalRows { m: random_orthogonal(n, &mut rng).to_rows() },
            1 => {
                let mut perm: Vec<usize> = (0..p).collect();
                for k in (1..p).rev() {
                    perm.swap(k, rng.random_range(0..=k));
                }
                let mut m = Matrix::zeros(p, p);
                for (r, &c) in perm.iter().enumerate() {
                    let sign = if rng.random::<bool>() { -1.0 } else { 1.0 };
                    m.set(r, c, sign * rng.random_range(0.5..2.0));
                }
                TransformKind::ConePreservingRight { m: m.to_rows() }
            }
            2 => {
                let mut m = gaussian(&mut rng, l, l).scaled(&0.3);
                (0..l).for_each(|k| m.set(k, k, m.get(k, k) + 1.0));
                TransformKind::LinfExpansiveLeft { m: m.to_rows() }
            }
            _ => {
                let scale = rng.random_range(0.01..0.5);
                let x2 = x.matrix().add(&gaussian(&mut rng, n, p).scaled(&scale))?;
                let z2 = z.matrix().add(&gaussian(&mut rng, n, l).scaled(&scale))?;
                TransformKind::Averaging { x2: x2.to_rows(), z2: z2.to_rows() }
            }
        };
        let spec = TransformSpec::new(kind);
        if let TransformKind::OrthogonalRows { .. } = spec.kind {
            let (x2, z2) = apply(&spec, &x, &z)?;
            let gap = z2.matrix().tmul(x2.matrix())?.sub(&z.matrix().tmul(x.matrix())?)?.max_abs();
            summary.max_orthogonal_gap = summary.max_orthogonal_gap.max(gap);
        }
        summary.instances += 1;
        match certify(&spec, &x, &z, &audit_cone(i)) {
            Ok(r) => summary.min_slack = summary.min_slack.min(r.slack()),
            Err(Error::Hypothesis(_)) => summary.violations += 1,
            Err(e) => return Err(e),
        }
    }
    Ok(summary)
}

/// `count` random `(Ψ, Δ)` pairs: `Ψ` a `4 × 4` identity plus Gaussian
/// noise of random scale, `Δ` Gaussian of scale up to 0.2.
pub fn perturbation_audit(count: usize, seed: u64) -> Result<AuditSummary> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut summary = AuditSummary { instances: 0, violations: 0, min_slack: f64::INFINITY, max_orthogonal_gap: 0.0 };
    for i in 0..count {
        let noise = rng.random_range(0.0..0.5);
        let psi = Matrix::<f64>::identity(4).add(&gaussian(&mut rng, 4, 4).scaled(&noise))?;
        let delta = gaussian(&mut rng, 4, 4).scaled(&rng.random_range(0.0..0.2));
        summary.instances += 1;
        match perturbation_certificate(&CrossCovariance::new(psi)?, &delta, &audit_cone(i)) {
            Ok(c) => summary.min_slack = summary.min_slack.min(c.observed_after - c.guaranteed_after),
            Err(Error::Hypothesis(_)) => summary.violations += 1,
            Err(e) => return Err(e),
        }
    }
    Ok(summary)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::checkers::l1_sensitivity;
    use crate::matrix::{norm_inf, norm_q};

    fn pair(seed: u64) -> (DesignMatrix, InstrumentMatrix) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        (DesignMatrix::new(gaussian(&mut rng, 6, 4)).unwrap(), InstrumentMatrix::new(gaussian(&mut rng, 6, 4)).unwrap())
    }

    fn l1() -> ConeSpec {
        ConeSpec::l1(2, 1.0).unwrap()
    }

    #[test]
    fn induced_norm_closed_forms() {
        let id = Matrix::<f64>::identity(3);
        assert_eq!(induced_norm(&id, 1.0).unwrap(), 1.0);
        let half = Matrix::filled(3, 3, 0.5);
        assert_eq!(induced_norm(&half, 1.0).unwrap(), 0.5);
        assert_eq!(induced_norm(&half, f64::INFINITY).unwrap(), 1.5);
        assert!(matches!(induced_norm(&half, 3.0), Err(Error::UnsupportedNorm(_))));
    }

    #[test]
    fn induced_norm_dominates_random_vectors() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let m = gaussian(&mut rng, 4, 5);
        for q in [1.0, 2.0, f64::INFINITY] {
            let bound = induced_norm(&m, q).unwrap();
            let mut best: f64 = 0.0;
            for _ in 0..10_000 {
                let v: Vec<f64> = (0..5).map(|_| StandardNormal.sample(&mut rng)).collect();
                let r = norm_inf(&m.matvec(&v)) / norm_q(&v, q);
                assert!(r <= bound * (1.0 + 1e-12));
                best = best.max(r);
            }
            // The supremum is attained at a computable maximiser.
            let (i, _) = (0..4).map(|i| (i, m.row(i))).fold((0, 0.0), |acc, (i, r)| {
                let val = induced_norm(&Matrix::from_rows(&[r.to_vec()]).unwrap(), q).unwrap();
                if val > acc.1 {
                    (i, val)
                } else {
                    acc
                }
            });
            let row = m.row(i);
            let v: Vec<f64> = if q == 1.0 {
                let k = (0..5).max_by(|&a, &b| row[a].abs().total_cmp(&row[b].abs())).unwrap();
                (0..5).map(|j| if j == k { row[j].signum() } else { 0.0 }).collect()
            } else if q == 2.0 {
                row.to_vec()
            } else {
                row.iter().map(|v| v.signum()).collect()
            };
            let attained = norm_inf(&m.matvec(&v)) / norm_q(&v, q);
            assert!((attained - bound).abs() <= 1e-12 * bound);
            assert!(best <= bound);
        }
    }

    #[test]
    fn permutation_leaves_constant_unchanged() {
        let (x, z) = pair(1);
        let mut m = Matrix::zeros(6, 6);
        for (r, c) in [(0, 3), (1, 0), (2, 5), (3, 1), (4, 2), (5, 4)] {
            m.set(r, c, 1.0);
        }
        let r = certify(&TransformSpec::new(TransformKind::OrthogonalRows { m: m.to_rows() }), &x, &z, &l1()).unwrap();
        // Row permutations only reorder the sums inside ZᵀX.
        assert!((r.observed_after - r.gamma_before).abs() < 1e-12);
    }

    #[test]
    fn rejects_non_orthogonal_rows() {
        let (x, z) = pair(2);
        let mut m = Matrix::<f64>::identity(6);
        m.set(0, 1, 1e-6);
        let spec = TransformSpec::new(TransformKind::OrthogonalRows { m: m.to_rows() });
        assert!(matches!(apply(&spec, &x, &z), Err(Error::Hypothesis(_))));
    }

    #[test]
    fn diagonal_right_scaling() {
        let (x, z) = pair(3);
        let d = [0.5, 1.0, 2.0, 1.5];
        let spec = TransformSpec::new(TransformKind::ConePreservingRight { m: Matrix::diagonal(&d).to_rows() });
        let k = derive_constants(&spec, &l1()).unwrap();
        assert_eq!((k.c, k.alpha_prime), (Some(0.5), Some(4.0)));
        let r = certify(&spec, &x, &z, &l1()).unwrap();
        // Independent check: the LP at the wider cone, scaled by min d.
        let psi = CrossCovariance::sample(&z, &x).unwrap();
        let wide = l1_sensitivity(&psi, &ConeSpec::l1(2, 4.0).unwrap()).unwrap().constant;
        assert!((r.guaranteed_after - 0.5 * wide).abs() < 1e-12);
        assert!(r.observed_after >= 0.5 * wide - 1e-9);
    }

    #[test]
    fn scalar_left_factor_scales_exactly() {
        let (x, z) = pair(4);
        for q in [1.0, f64::INFINITY] {
            let cone = ConeSpec::new(2, 1.0, q).unwrap();
            let m = Matrix::<f64>::identity(4).scaled(&3.0);
            let r = certify(&TransformSpec::new(TransformKind::LinfExpansiveLeft { m: m.to_rows() }), &x, &z, &cone)
                .unwrap();
            assert!((r.constants.c.unwrap() - 3.0).abs() < 1e-12);
            assert!((r.observed_after - 3.0 * r.gamma_before).abs() < 1e-9 * r.gamma_before.max(1.0));
        }
    }

    #[test]
    fn expansion_constant_is_tight() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let mut m = gaussian(&mut rng, 3, 3).scaled(&0.4);
        (0..3).for_each(|k| m.set(k, k, m.get(k, k) + 1.0));
        let spec = TransformSpec::new(TransformKind::LinfExpansiveLeft { m: m.to_rows() });
        let c = derive_constants(&spec, &l1()).unwrap().c.unwrap();
        let mt = m.transpose();
        for _ in 0..5000 {
            let u: Vec<f64> = (0..3).map(|_| StandardNormal.sample(&mut rng)).collect();
            assert!(norm_inf(&mt.matvec(&u)) >= c * norm_inf(&u) * (1.0 - 1e-12));
        }
    }

    #[test]
    fn declared_constants_are_checked() {
        let mut spec = TransformSpec::new(TransformKind::ConePreservingRight { m: Matrix::diagonal(&[1.0, 2.0]).to_rows() });
        spec.declared.c = Some(2.0);
        assert!(matches!(derive_constants(&spec, &ConeSpec::l1(1, 1.0).unwrap()), Err(Error::Hypothesis(_))));
        spec.declared.c = Some(0.5);
        assert!(derive_constants(&spec, &ConeSpec::l1(1, 1.0).unwrap()).is_ok());
    }

    #[test]
    fn zero_perturbation() {
        let psi = CrossCovariance::new(Matrix::identity(4)).unwrap();
        let c = perturbation_certificate(&psi, &Matrix::zeros(4, 4), &l1()).unwrap();
        assert_eq!(c.observed_after, c.gamma_before);
        assert_eq!(c.guaranteed_after, c.gamma_before);
    }

    #[test]
    fn perturbed_identity() {
        let psi = CrossCovariance::new(Matrix::identity(4)).unwrap();
        for eps in [1e-3, 0.05] {
            let c = perturbation_certificate(&psi, &Matrix::<f64>::identity(4).scaled(&eps), &l1()).unwrap();
            assert!(c.observed_after >= 0.5 - 2.0 * eps - 1e-9);
            assert!((c.delta_eff - 2.0 * eps).abs() < 1e-15);
        }
    }

    #[test]
    fn averaging_examples() {
        let (x, z) = pair(6);
        let same = averaging_certificate(&x, &z, &x, &z, &l1()).unwrap();
        assert_eq!((same.epsilon, same.delta, same.c), (0.0, 0.0, 0.0));
        assert!((same.observed - same.gamma1).abs() < 1e-12);
        let flipped = InstrumentMatrix::new(z.matrix().scaled(&-1.0)).unwrap();
        let vac = averaging_certificate(&x, &z, &x, &flipped, &l1()).unwrap();
        assert!(vac.bound <= 0.0);
        assert!(vac.observed.abs() < 1e-12);
    }

    #[test]
    fn audits_have_no_violations() {
        let t = transform_audit(50, 7).unwrap();
        assert_eq!((t.instances, t.violations), (50, 0));
        assert!(t.min_slack >= -AUDIT_TOL && t.max_orthogonal_gap <= ORTHOGONALITY_TOL);
        let p = perturbation_audit(100, 8).unwrap();
        assert_eq!((p.instances, p.violations), (100, 0));
        assert!(p.min_slack >= -AUDIT_TOL);
    }
}
