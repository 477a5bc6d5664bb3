//! The unnormalised STIV estimator and the Dantzig selector as linear
//! programs, with synthetic instances for error-rate studies.
//!
//! Both solve `min |β|₁` over `{β : |Zᵀ(Y − Xβ)/n|_∞ ≤ σλ}` through the
//! split `β = β⁺ − β⁻`; the Dantzig selector is the case `Z = X`.

use alloc::collections::BTreeMap;
use alloc::format;
use alloc::vec;
use alloc::vec::Vec;

#[cfg(not(feature = "std"))]
use num_traits::Float;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use crate::ensembles::{derive_seed, sample, PopulationModel, SamplerSpec};
use crate::error::{Error, Result};
use crate::lp::{solve, LinearProgram, LpStatus, Relation};
use crate::matrix::{norm1, norm2, norm_inf, DesignMatrix, InstrumentMatrix};

/// Allowed excess of `|Zᵀ(Y − Xβ̂)/n|_∞` over `σλ`.
pub const FEASIBILITY_TOL: f64 = 1e-8;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RegressionInstance {
    pub x: DesignMatrix,
    pub z: InstrumentMatrix,
    pub y: Vec<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub beta_true: Option<Vec<f64>>,
    pub sigma: f64,
    pub s: usize,
}

impl RegressionInstance {
    pub fn validate(&self) -> Result<()> {
        if self.y.len() != self.x.n() || self.z.n() != self.x.n() {
            return Err(Error::DimensionMismatch(format!(
                "X has {} rows, Z has {}, Y has {}",
                self.x.n(),
                self.z.n(),
                self.y.len()
            )));
        }
        if !(self.sigma >= 0.0 && self.sigma.is_finite()) || self.y.iter().any(|v| !v.is_finite()) {
            return Err(Error::InvalidParameter("σ and Y must be finite, σ ≥ 0".into()));
        }
        if let Some(b) = &self.beta_true {
            if b.len() != self.x.p() || b.iter().filter(|v| **v != 0.0).count() > self.s {
                return Err(Error::InvalidParameter("β must have p entries and at most s nonzeros".into()));
            }
        }
        Ok(())
    }

    /// FNV-1a over the bit patterns of every stored number.
    pub fn fingerprint(&self) -> u64 {
        let mut h = 0xcbf2_9ce4_8422_2325u64;
        let mut eat = |v: f64| {
            for b in v.to_bits().to_le_bytes() {
                h = (h ^ b as u64).wrapping_mul(0x0100_0000_01b3);
            }
        };
        self.x.matrix().data().iter().chain(self.z.matrix().data()).chain(&self.y).for_each(|&v| eat(v));
        self.beta_true.iter().flatten().for_each(|&v| eat(v));
        eat(self.sigma);
        h
    }

    /// `|Zᵀ(Y − Xβ)/n|_∞`.
    pub fn residual_correlation(&self, beta: &[f64]) -> f64 {
        let fit = self.x.matrix().matvec(beta);
        let r: Vec<f64> = self.y.iter().zip(fit).map(|(y, f)| y - f).collect();
        let zt = self.z.matrix().transpose();
        norm_inf(&zt.matvec(&r)) / self.x.n() as f64
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
pub enum ErrorNorm {
    #[serde(rename = "1")]
    L1,
    #[serde(rename = "2")]
    L2,
    #[serde(rename = "inf")]
    Linf,
}

impl ErrorNorm {
    pub fn eval(&self, v: &[f64]) -> f64 {
        match self {
            Self::L1 => norm1(v),
            Self::L2 => norm2(v),
            Self::Linf => norm_inf(v),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EstimateResult {
    pub beta_hat: Vec<f64>,
    pub lambda: f64,
    pub feasible: bool,
    /// `|Zᵀ(Y − Xβ̂)/n|_∞`.
    pub residual: f64,
    #[serde(default)]
    pub lq_errors: BTreeMap<ErrorNorm, f64>,
}

/// Draw `(X, Z)` from the model, an `s`-sparse `β` with entries
/// `±beta_magnitude` at random positions, `ε ~ N(0, σ²)` and `Y = Xβ + ε`.
pub fn generate(
    model: &PopulationModel,
    sampler: &SamplerSpec,
    n: usize,
    s: usize,
    beta_magnitude: f64,
    sigma: f64,
    seed: u64,
) -> Result<RegressionInstance> {
    let p = model.p();
    if s >= p {
        return Err(Error::InvalidParameter(format!("sparsity {s} must be below p = {p}")));
    }
    if !(sigma >= 0.0 && sigma.is_finite() && beta_magnitude.is_finite()) {
        return Err(Error::InvalidParameter("σ and the β magnitude must be finite, σ ≥ 0".into()));
    }
    let smp = sample(model, &sampler.with_seed(derive_seed(seed, 0)), n)?;
    let mut rng = ChaCha8Rng::seed_from_u64(derive_seed(seed, 1));
    let mut beta = vec![0.0; p];
    let mut idx: Vec<usize> = (0..p).collect();
    for k in 0..s {
        let j = rng.random_range(k..p);
        idx.swap(k, j);
        beta[idx[k]] = if rng.random::<bool>() { beta_magnitude } else { -beta_magnitude };
    }
    let mut y = smp.x.matrix().matvec(&beta);
    if sigma > 0.0 {
        let noise = Normal::new(0.0, sigma).expect("σ > 0");
        let mut rng = ChaCha8Rng::seed_from_u64(derive_seed(seed, 2));
        y.iter_mut().for_each(|v| *v += noise.sample(&mut rng));
    }
    Ok(RegressionInstance { x: smp.x, z: smp.z, y, beta_true: Some(beta), sigma, s })
}

/// `min |β|₁` subject to `|Zᵀ(Y − Xβ)/n|_∞ ≤ σλ`.
pub fn stiv_with_lambda(instance: &RegressionInstance, lambda: f64) -> Result<EstimateResult> {
    instance.validate()?;
    if !(lambda >= 0.0 && lambda.is_finite()) {
        return Err(Error::InvalidParameter(format!("λ = {lambda} must be finite and non-negative")));
    }
    let (n, p) = (instance.x.n(), instance.x.p());
    let a = instance.z.matrix().tmul(instance.x.matrix())?.scaled(&(1.0 / n as f64));
    let b: Vec<f64> = instance.z.matrix().transpose().matvec(&instance.y).iter().map(|v| v / n as f64).collect();
    let width = instance.sigma * lambda;
    let mut lp = LinearProgram::new(vec![1.0; 2 * p]);
    for l in 0..a.rows() {
        let row: Vec<f64> = a.row(l).iter().copied().chain(a.row(l).iter().map(|v| -v)).collect();
        if width == 0.0 {
            lp.add_constraint(row, Relation::Eq, b[l]);
        } else {
            lp.add_constraint(row.clone(), Relation::Le, b[l] + width);
            lp.add_constraint(row, Relation::Ge, b[l] - width);
        }
    }
    let sol = solve(&lp)?;
    match sol.status {
        LpStatus::Optimal => {}
        LpStatus::Infeasible => {
            return Err(Error::Infeasible("no β satisfies the residual-correlation constraints".into()))
        }
        LpStatus::Unbounded => unreachable!("the objective is bounded below by 0"),
    }
    let beta_hat: Vec<f64> = (0..p).map(|j| sol.point[j] - sol.point[p + j]).collect();
    let residual = instance.residual_correlation(&beta_hat);
    let scale = 1.0 + norm_inf(&b);
    let mut lq_errors = BTreeMap::new();
    if let Some(truth) = &instance.beta_true {
        let d: Vec<f64> = beta_hat.iter().zip(truth).map(|(a, b)| a - b).collect();
        for q in [ErrorNorm::L1, ErrorNorm::L2, ErrorNorm::Linf] {
            lq_errors.insert(q, q.eval(&d));
        }
    }
    Ok(EstimateResult { feasible: residual <= width + FEASIBILITY_TOL * scale, beta_hat, lambda, residual, lq_errors })
}

/// STIV with `λ = A √(2 log L / n)`.
pub fn stiv(instance: &RegressionInstance, a: f64) -> Result<EstimateResult> {
    let (n, l) = (instance.x.n() as f64, instance.z.l() as f64);
    stiv_with_lambda(instance, a * (2.0 * l.ln() / n).sqrt())
}

/// Dantzig selector: STIV with `Z = X` and `λ = A √(2 log p / n)`.
pub fn dantzig(instance: &RegressionInstance, a: f64) -> Result<EstimateResult> {
    let own = RegressionInstance { z: InstrumentMatrix::new(instance.x.matrix().clone())?, ..instance.clone() };
    let (n, p) = (instance.x.n() as f64, instance.x.p() as f64);
    stiv_with_lambda(&own, a * (2.0 * p.ln() / n).sqrt())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Method {
    Stiv,
    Dantzig,
}

impl Method {
    pub fn estimate(&self, instance: &RegressionInstance, a: f64) -> Result<EstimateResult> {
        match self {
            Self::Stiv => stiv(instance, a),
            Self::Dantzig => dantzig(instance, a),
        }
    }
}

fn default_norms() -> Vec<ErrorNorm> {
    vec![ErrorNorm::L1, ErrorNorm::L2, ErrorNorm::Linf]
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StudyConfig {
    pub model: PopulationModel,
    pub sampler: SamplerSpec,
    pub method: Method,
    pub s: usize,
    pub n_grid: Vec<usize>,
    pub seeds: usize,
    pub a: f64,
    pub sigma: f64,
    pub beta_magnitude: f64,
    #[serde(default = "default_norms")]
    pub norms: Vec<ErrorNorm>,
    pub base_seed: u64,
}

impl StudyConfig {
    pub fn validate(&self) -> Result<()> {
        if self.seeds < 20 {
            return Err(Error::InvalidParameter(format!("{} seeds given, at least 20 required", self.seeds)));
        }
        if self.n_grid.is_empty() || self.n_grid.windows(2).any(|w| w[0] >= w[1]) {
            return Err(Error::InvalidParameter("n grid must be non-empty and strictly increasing".into()));
        }
        if !(self.a > 0.0) {
            return Err(Error::InvalidParameter("tuning constant A must be positive".into()));
        }
        self.model.validate()?;
        self.sampler.validate()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StudyRow {
    pub n: usize,
    pub norm: ErrorNorm,
    pub median_error: f64,
    /// Fraction of seeds at which the true `β` was feasible.
    pub truth_feasible: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StudyResult {
    pub rows: Vec<StudyRow>,
    /// Log-log slope of the median error against `n`, per norm; `None`
    /// when the errors vanish (noiseless designs) or fewer than two `n`.
    pub slopes: BTreeMap<ErrorNorm, Option<f64>>,
}

/// Error below which medians count as zero and no slope is fitted.
pub const ZERO_ERROR: f64 = 1e-9;

pub fn median(values: &mut [f64]) -> f64 {
    values.sort_by(f64::total_cmp);
    let k = values.len();
    if k % 2 == 1 {
        values[k / 2]
    } else {
        (values[k / 2 - 1] + values[k / 2]) / 2.0
    }
}

/// Median `|β̂ − β|_q` over seeds for each `n`, and the fitted exponent.
pub fn error_vs_n_study(config: &StudyConfig) -> Result<StudyResult> {
    config.validate()?;
    let mut rows = Vec::new();
    for (gi, &n) in config.n_grid.iter().enumerate() {
        let jobs: Vec<u64> = (0..config.seeds as u64).collect();
        let outcomes = crate::par::map(jobs, |t| -> Result<(EstimateResult, bool)> {
            let seed = derive_seed(config.base_seed, ((gi as u64) << 32) | t);
            let inst = generate(&config.model, &config.sampler, n, config.s, config.beta_magnitude, config.sigma, seed)?;
            let est = config.method.estimate(&inst, config.a)?;
            let truth = inst.beta_true.as_ref().expect("generated");
            let probe = match config.method {
                Method::Stiv => inst.residual_correlation(truth),
                Method::Dantzig => {
                    RegressionInstance { z: InstrumentMatrix::new(inst.x.matrix().clone())?, ..inst.clone() }
                        .residual_correlation(truth)
                }
            };
            Ok((est.clone(), probe <= inst.sigma * est.lambda))
        });
        let outcomes = outcomes.into_iter().collect::<Result<Vec<_>>>()?;
        let feasible = outcomes.iter().filter(|o| o.1).count() as f64 / outcomes.len() as f64;
        for &norm in &config.norms {
            let mut errs: Vec<f64> = outcomes.iter().map(|o| o.0.lq_errors[&norm]).collect();
            rows.push(StudyRow { n, norm, median_error: median(&mut errs), truth_feasible: feasible });
        }
    }
    let mut slopes = BTreeMap::new();
    for &norm in &config.norms {
        let pts: Vec<(f64, f64)> =
            rows.iter().filter(|r| r.norm == norm).map(|r| (r.n as f64, r.median_error)).collect();
        let slope = if pts.iter().any(|p| p.1 <= ZERO_ERROR) {
            None
        } else {
            let (xs, ys): (Vec<f64>, Vec<f64>) = pts.into_iter().unzip();
            crate::harness::loglog_slope(&xs, &ys)
        };
        slopes.insert(norm, slope);
    }
    Ok(StudyResult { rows, slopes })
}

/// `δ = β̂ − β` and the quantities the oracle inequality chains through.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ChainCheck {
    pub truth_feasible: bool,
    pub l1_minimal: bool,
    pub in_cone: bool,
    /// `|ZᵀXδ/n|_∞`.
    pub correlation: f64,
    /// `2σλ`.
    pub correlation_bound: f64,
}

/// Checks the deterministic chain behind the error bound: if `β` is
/// feasible then `|β̂|₁ ≤ |β|₁`, `δ ∈ C(s, 1)` and `|ZᵀXδ/n|_∞ ≤ 2σλ`.
pub fn chain_check(instance: &RegressionInstance, est: &EstimateResult) -> Result<ChainCheck> {
    let truth = instance
        .beta_true
        .as_ref()
        .ok_or_else(|| Error::InvalidParameter("the chain needs the true β".into()))?;
    let width = instance.sigma * est.lambda;
    let truth_feasible = instance.residual_correlation(truth) <= width;
    let d: Vec<f64> = est.beta_hat.iter().zip(truth).map(|(a, b)| a - b).collect();
    let support: Vec<usize> = (0..truth.len()).filter(|&j| truth[j] != 0.0).collect();
    let (on, off) = crate::cone::split_l1(&d, &support);
    let scale = 1.0 + norm1(truth);
    let gram = instance.z.matrix().tmul(instance.x.matrix())?.scaled(&(1.0 / instance.x.n() as f64));
    Ok(ChainCheck {
        truth_feasible,
        l1_minimal: norm1(&est.beta_hat) <= norm1(truth) + FEASIBILITY_TOL * scale,
        // Cone around the true support, padded to size s by any indices.
        in_cone: off <= on + FEASIBILITY_TOL * scale,
        correlation: norm_inf(&gram.matvec(&d)),
        correlation_bound: 2.0 * width,
    })
}

/// `ZᵀX/n` as a cross-covariance.
pub fn psi_hat(instance: &RegressionInstance) -> Result<crate::matrix::CrossCovariance> {
    crate::matrix::CrossCovariance::sample(&instance.z, &instance.x)
}
