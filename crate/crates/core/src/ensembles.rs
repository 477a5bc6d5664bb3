//! Population models, the s-comprehensive construction and seeded samplers
//! for the sub-gaussian, bounded, bounded-moment and mixture regimes.

use alloc::format;
use alloc::vec;
use alloc::vec::Vec;

#[cfg(not(feature = "std"))]
use num_traits::Float;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal, StudentT};
use serde::{Deserialize, Serialize};

use crate::checkers::sign_patterns;
use crate::cone::{binomial, Combinations};
use crate::error::{Error, Result};
use crate::matrix::{symmetric_sqrt, CrossCovariance, DesignMatrix, InstrumentMatrix, Matrix};

/// Largest `2^{s−1} C(p, s)` the s-comprehensive builder accepts.
pub const COMPREHENSIVE_BUDGET: u128 = 100_000;

/// Largest moment order used when evaluating the sub-gaussian norm.
pub const PSI2_MAX_ORDER: u32 = 20;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum PopulationModel {
    /// `Σ = diag(d)`.
    Diagonal { d: Vec<f64> },
    /// `Σ = (1 − ρ) I + ρ eeᵀ`.
    EqualCorrelation { p: usize, rho: f64 },
    /// Identity except `σ₁₂ = σ₂₁ = ρ`.
    TwoBlock { p: usize, rho: f64 },
    /// Exactly one of a covariance `Σ` (with `Z = X`) or a cross-covariance
    /// `Ψ` (with `X`, `Z` drawn jointly).
    Explicit {
        #[serde(default, skip_serializing_if = "Option::is_none")]
        sigma: Option<Vec<Vec<f64>>>,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        psi: Option<Vec<Vec<f64>>>,
    },
    /// The output of [`build_s_comprehensive`].
    SComprehensive { p: usize, s: usize, c: f64 },
}

impl PopulationModel {
    pub fn validate(&self) -> Result<()> {
        let bad = |m: &str| Err(Error::InvalidParameter(m.into()));
        match self {
            Self::Diagonal { d } => {
                if d.is_empty() || d.iter().any(|v| !(v.is_finite() && *v >= 0.0)) {
                    return bad("diagonal entries must be finite and non-negative");
                }
            }
            Self::EqualCorrelation { p, rho } => {
                if *p == 0 || !rho.is_finite() || *rho > 1.0 || (*p > 1 && *rho < -1.0 / (*p as f64 - 1.0)) {
                    return bad("equal correlation needs p ≥ 1 and −1/(p−1) ≤ ρ ≤ 1");
                }
            }
            Self::TwoBlock { p, rho } => {
                if *p < 2 || !(rho.abs() <= 1.0) {
                    return bad("two-block model needs p ≥ 2 and |ρ| ≤ 1");
                }
            }
            Self::Explicit { sigma, psi } => match (sigma, psi) {
                (Some(s), None) => {
                    let m = Matrix::from_rows(s)?;
                    m.check_finite()?;
                    if m.rows() != m.cols() {
                        return bad("explicit Σ must be square");
                    }
                    m.check_symmetric(1e-12 * m.max_abs().max(1.0))?;
                }
                (None, Some(p)) => Matrix::from_rows(p)?.check_finite()?,
                _ => return bad("explicit model needs exactly one of sigma or psi"),
            },
            Self::SComprehensive { p, s, c } => {
                if *s == 0 || *s > *p || !(c.is_finite() && *c > 0.0) {
                    return bad("s-comprehensive model needs 1 ≤ s ≤ p and c > 0");
                }
            }
        }
        Ok(())
    }

    /// Number of covariates.
    pub fn p(&self) -> usize {
        match self {
            Self::Diagonal { d } => d.len(),
            Self::EqualCorrelation { p, .. } | Self::TwoBlock { p, .. } | Self::SComprehensive { p, .. } => *p,
            Self::Explicit { sigma: Some(s), .. } => s.len(),
            Self::Explicit { psi: Some(m), .. } => m.first().map_or(0, Vec::len),
            Self::Explicit { .. } => 0,
        }
    }

    /// Number of instruments.
    pub fn l(&self) -> usize {
        match self {
            Self::Explicit { psi: Some(m), .. } => m.len(),
            Self::SComprehensive { p, s, .. } => comprehensive_rows(*p, *s) as usize,
            _ => self.p(),
        }
    }

    /// The covariance `Σ` when the model describes one (`Z = X`).
    pub fn covariance(&self) -> Result<Option<Matrix>> {
        self.validate()?;
        Ok(match self {
            Self::Diagonal { d } => Some(Matrix::diagonal(d)),
            Self::EqualCorrelation { p, rho } => {
                let mut m = Matrix::filled(*p, *p, *rho);
                (0..*p).for_each(|i| m.set(i, i, 1.0));
                Some(m)
            }
            Self::TwoBlock { p, rho } => {
                let mut m = Matrix::identity(*p);
                m.set(0, 1, *rho);
                m.set(1, 0, *rho);
                Some(m)
            }
            Self::Explicit { sigma: Some(s), .. } => Some(Matrix::from_rows(s)?),
            _ => None,
        })
    }
}

/// Exact `Ψ = E Z Xᵀ`; equals `Σ` for covariance models.
pub fn population_psi(model: &PopulationModel) -> Result<CrossCovariance> {
    if let Some(sigma) = model.covariance()? {
        return CrossCovariance::new(sigma);
    }
    match model {
        PopulationModel::Explicit { psi: Some(rows), .. } => CrossCovariance::from_rows(rows),
        PopulationModel::SComprehensive { p, s, c } => build_s_comprehensive(*p, *s, *c),
        _ => unreachable!("validated above"),
    }
}

/// Canonical law behind each tail regime, standardised to mean zero and
/// unit variance.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Law {
    Gaussian,
    Rademacher,
    /// Student-t with `nu` degrees of freedom, scaled by `√((ν−2)/ν)`.
    StudentT { nu: f64 },
}

impl Law {
    pub fn draw<R: Rng + ?Sized>(&self, rng: &mut R) -> f64 {
        match *self {
            Law::Gaussian => StandardNormal.sample(rng),
            Law::Rademacher => {
                if rng.random::<bool>() {
                    1.0
                } else {
                    -1.0
                }
            }
            Law::StudentT { nu } => {
                let t: f64 = StudentT::new(nu).expect("ν > 2").sample(rng);
                t * ((nu - 2.0) / nu).sqrt()
            }
        }
    }

    /// `E|W|^k`, infinite when the moment does not exist.
    pub fn absolute_moment(&self, k: f64) -> f64 {
        let sqrt_pi = core::f64::consts::PI.sqrt();
        match *self {
            Law::Gaussian => 2f64.powf(k / 2.0) * libm::tgamma((k + 1.0) / 2.0) / sqrt_pi,
            Law::Rademacher => 1.0,
            Law::StudentT { nu } => {
                if k >= nu {
                    return f64::INFINITY;
                }
                let log_m = (k / 2.0) * nu.ln() + libm::lgamma((k + 1.0) / 2.0) + libm::lgamma((nu - k) / 2.0)
                    - sqrt_pi.ln()
                    - libm::lgamma(nu / 2.0);
                (log_m + (k / 2.0) * ((nu - 2.0) / nu).ln()).exp()
            }
        }
    }

    /// `sup_{1 ≤ k ≤ 20} k^{−1/2} (E|W|^k)^{1/k}`.
    pub fn psi2_norm(&self) -> f64 {
        (1..=PSI2_MAX_ORDER)
            .map(|k| {
                let k = k as f64;
                self.absolute_moment(k).powf(1.0 / k) / k.sqrt()
            })
            .fold(0.0, f64::max)
    }

    /// Almost-sure bound on `|W|`, if any.
    pub fn sup_bound(&self) -> Option<f64> {
        match self {
            Law::Rademacher => Some(1.0),
            _ => None,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Regime {
    Subgaussian,
    Bounded,
    BoundedMoment,
    Mixture,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MixtureSpec {
    /// Probability `p₁` that a row comes from the first component.
    pub weight: f64,
    pub first: Regime,
    pub second: Regime,
}

fn default_moment_order() -> u32 {
    1
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SamplerSpec {
    pub regime: Regime,
    /// `r` in `E|X_i|^{4r} < C_x`; the Student-t law uses `ν = 4r + 2`.
    #[serde(default = "default_moment_order")]
    pub moment_order: u32,
    /// Declared bounds `C_x`, `C_z`; when absent they are computed from
    /// the law and the model.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub c_x: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub c_z: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub mixture: Option<MixtureSpec>,
    pub seed: u64,
}

impl SamplerSpec {
    pub fn new(regime: Regime, seed: u64) -> Self {
        Self { regime, moment_order: 1, c_x: None, c_z: None, mixture: None, seed }
    }

    pub fn bounded_moment(r: u32, seed: u64) -> Self {
        Self { moment_order: r, ..Self::new(Regime::BoundedMoment, seed) }
    }

    pub fn mixture(weight: f64, first: Regime, second: Regime, seed: u64) -> Self {
        Self { mixture: Some(MixtureSpec { weight, first, second }), ..Self::new(Regime::Mixture, seed) }
    }

    pub fn with_seed(self, seed: u64) -> Self {
        Self { seed, ..self }
    }

    pub fn validate(&self) -> Result<()> {
        if self.moment_order == 0 {
            return Err(Error::InvalidParameter("moment order r must be at least 1".into()));
        }
        for c in [self.c_x, self.c_z].into_iter().flatten() {
            if !(c.is_finite() && c > 0.0) {
                return Err(Error::InvalidParameter("declared bounds must be positive".into()));
            }
        }
        match (self.regime, &self.mixture) {
            (Regime::Mixture, Some(m)) => {
                if !(m.weight > 0.0 && m.weight <= 1.0) {
                    return Err(Error::InvalidParameter(format!("mixture weight {} outside (0, 1]", m.weight)));
                }
                if m.first == Regime::Mixture || m.second == Regime::Mixture {
                    return Err(Error::InvalidParameter("mixture components must not be mixtures".into()));
                }
                Ok(())
            }
            (Regime::Mixture, None) => Err(Error::InvalidParameter("mixture regime needs a mixture block".into())),
            (_, Some(_)) => Err(Error::InvalidParameter("mixture block given for a non-mixture regime".into())),
            _ => Ok(()),
        }
    }

    /// The law of a non-mixture regime.
    pub fn law_of(&self, regime: Regime) -> Law {
        match regime {
            Regime::Subgaussian => Law::Gaussian,
            Regime::Bounded => Law::Rademacher,
            Regime::BoundedMoment => Law::StudentT { nu: 4.0 * self.moment_order as f64 + 2.0 },
            Regime::Mixture => panic!("a mixture has no single law"),
        }
    }
}

/// Linear maps with `x = A_x w`, `z = A_z w` for a standardised iid vector
/// `w`. For covariance models `A_x = A_z = Σ^{1/2}`; for an explicit `Ψ` the
/// joint vector has covariance `[[I, Ψᵀ], [Ψ, I]]`.
#[derive(Debug, Clone, PartialEq)]
pub struct Mixing {
    pub x: Matrix,
    pub z: Matrix,
    /// `Z = X` for covariance models.
    pub shared: bool,
}

pub fn mixing(model: &PopulationModel) -> Result<Mixing> {
    if let Some(sigma) = model.covariance()? {
        let root = symmetric_sqrt(&sigma)?;
        return Ok(Mixing { x: root.clone(), z: root, shared: true });
    }
    let psi = population_psi(model)?.into_matrix();
    let (l, p) = (psi.rows(), psi.cols());
    let mut joint = Matrix::identity(p + l);
    for i in 0..l {
        for j in 0..p {
            joint.set(p + i, j, *psi.get(i, j));
            joint.set(j, p + i, *psi.get(i, j));
        }
    }
    let root = symmetric_sqrt(&joint)?;
    let rows = root.to_rows();
    Ok(Mixing { x: Matrix::from_rows(&rows[..p])?, z: Matrix::from_rows(&rows[p..])?, shared: false })
}

#[derive(Debug, Clone, PartialEq)]
pub struct Sample {
    pub x: DesignMatrix,
    pub z: InstrumentMatrix,
    /// Set when `(X, Z)` were completed by the joint Gaussian-type law of an
    /// explicit `Ψ` rather than a covariance model.
    pub joint_completion: bool,
}

impl Sample {
    /// `Ψ̂ = ZᵀX / n`.
    pub fn psi_hat(&self) -> Result<CrossCovariance> {
        CrossCovariance::sample(&self.z, &self.x)
    }
}

/// `n` iid rows of `(X, Z)`, fully determined by `sampler.seed`.
pub fn sample(model: &PopulationModel, sampler: &SamplerSpec, n: usize) -> Result<Sample> {
    sample_mixture(model, model, sampler, n)
}

/// Rows from `first` with probability `p₁`, else from `second`. For a
/// non-mixture sampler only `first` is used.
pub fn sample_mixture(
    first: &PopulationModel,
    second: &PopulationModel,
    sampler: &SamplerSpec,
    n: usize,
) -> Result<Sample> {
    sampler.validate()?;
    if n == 0 {
        return Err(Error::InvalidParameter("sample size must be at least 1".into()));
    }
    let a = mixing(first)?;
    let components = match sampler.mixture {
        Some(m) => {
            let b = if first == second { a.clone() } else { mixing(second)? };
            if (a.x.rows(), a.z.rows()) != (b.x.rows(), b.z.rows()) {
                return Err(Error::DimensionMismatch("mixture components differ in (p, L)".into()));
            }
            vec![(m.weight, sampler.law_of(m.first), a), (1.0, sampler.law_of(m.second), b)]
        }
        None => vec![(1.0, sampler.law_of(sampler.regime), a)],
    };
    let (p, l) = (components[0].2.x.rows(), components[0].2.z.rows());
    let mut rng = ChaCha8Rng::seed_from_u64(sampler.seed);
    let mut xs = Vec::with_capacity(n * p);
    let mut zs = Vec::with_capacity(n * l);
    for _ in 0..n {
        let pick = if components.len() == 1 || rng.random::<f64>() < components[0].0 { 0 } else { 1 };
        let (_, law, mix) = &components[pick];
        let w: Vec<f64> = (0..mix.x.cols()).map(|_| law.draw(&mut rng)).collect();
        let x = mix.x.matvec(&w);
        let z = if mix.shared { x.clone() } else { mix.z.matvec(&w) };
        xs.extend(x);
        zs.extend(z);
    }
    let shared = components.iter().all(|c| c.2.shared);
    Ok(Sample {
        x: DesignMatrix::new(Matrix::new(n, p, xs)?)?,
        z: InstrumentMatrix::new(Matrix::new(n, l, zs)?)?,
        joint_completion: !shared,
    })
}

/// SplitMix64 finaliser.
pub fn splitmix64(mut x: u64) -> u64 {
    x = x.wrapping_add(0x9E37_79B9_7F4A_7C15);
    x = (x ^ (x >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    x = (x ^ (x >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    x ^ (x >> 31)
}

/// Independent stream seed for trial `index` under `base`.
pub fn derive_seed(base: u64, index: u64) -> u64 {
    splitmix64(base ^ splitmix64(index))
}

/// `2^{s−1} C(p, s)`.
pub fn comprehensive_rows(p: usize, s: usize) -> u128 {
    if s == 0 || s > p {
        return 0;
    }
    (1u128 << (s - 1)) * binomial(p, s)
}

fn check_comprehensive_budget(p: usize, s: usize) -> Result<u128> {
    if s == 0 || s > p {
        return Err(Error::InvalidParameter(format!("sparsity {s} outside 1..={p}")));
    }
    let needed = comprehensive_rows(p, s);
    if needed > COMPREHENSIVE_BUDGET {
        return Err(Error::BudgetExceeded { needed, limit: COMPREHENSIVE_BUDGET });
    }
    Ok(needed)
}

/// One row per `(S, ±ε)` class: `c·ε` on `S`, zero elsewhere, with the
/// first sign of `ε` fixed to `+`. Rows run lexicographically in `S`, then
/// in binary order of the remaining signs (bit set = negative).
pub fn build_s_comprehensive(p: usize, s: usize, c: f64) -> Result<CrossCovariance> {
    check_comprehensive_budget(p, s)?;
    if !(c.is_finite() && c > 0.0) {
        return Err(Error::InvalidParameter(format!("magnitude c = {c} must be positive")));
    }
    let mut data = Vec::new();
    let mut rows = 0;
    for support in Combinations::new(p, s) {
        for neg in sign_patterns(s, 0) {
            let mut row = vec![0.0; p];
            for (k, &j) in support.iter().enumerate() {
                row[j] = if neg[k] { -c } else { c };
            }
            data.extend(row);
            rows += 1;
        }
    }
    CrossCovariance::new(Matrix::new(rows, p, data)?)
}

/// A `(S, ε)` class with no matching row, `ε` normalised to start with `+1`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct MissingPattern {
    pub support: Vec<usize>,
    pub signs: Vec<i8>,
}

/// Direct check of the s-comprehensive quantifier; returns the first
/// uncovered class in builder order.
pub fn verify_s_comprehensive(psi: &CrossCovariance, s: usize) -> Result<(bool, Option<MissingPattern>)> {
    let m = psi.matrix();
    let p = m.cols();
    check_comprehensive_budget(p, s)?;
    // Each row covers at most one class: its support, signs up to a flip.
    let mut covered = alloc::collections::BTreeSet::new();
    for i in 0..m.rows() {
        let row = m.row(i);
        let support: Vec<usize> = (0..p).filter(|&j| row[j] != 0.0).collect();
        if support.len() != s {
            continue;
        }
        let flip = row[support[0]] < 0.0;
        let signs: Vec<i8> = support.iter().map(|&j| if (row[j] < 0.0) != flip { -1 } else { 1 }).collect();
        covered.insert((support, signs));
    }
    for support in Combinations::new(p, s) {
        for neg in sign_patterns(s, 0) {
            let signs: Vec<i8> = neg.iter().map(|&b| if b { -1 } else { 1 }).collect();
            let key = (support.clone(), signs);
            if !covered.contains(&key) {
                return Ok((false, Some(MissingPattern { support: key.0, signs: key.1 })));
            }
        }
    }
    Ok((true, None))
}
