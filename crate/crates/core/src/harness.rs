//! Monte Carlo runs for sample `ℓq` sensitivity, the inner-product
//! deviation tails and the mixture setting.

use alloc::vec::Vec;

#[cfg(not(feature = "std"))]
use num_traits::Float;
use serde::{Deserialize, Serialize};

use crate::checkers::{sensitivity, Witness};
use crate::cone::ConeSpec;
use crate::ensembles::{
    derive_seed, mixing, population_psi, sample, sample_mixture, Law, Mixing, PopulationModel, Regime, SamplerSpec,
};
use crate::error::{Error, Result};
use crate::estimators::median;
use crate::matrix::{norm1, norm_inf, CrossCovariance, Matrix};

/// `c = 1/(8e²)`, the Bernstein constant used when evaluating bounds.
pub fn bernstein_c() -> f64 {
    1.0 / (8.0 * core::f64::consts::E * core::f64::consts::E)
}

/// Allowed dip in success frequency between consecutive `n`.
pub const MONOTONE_NOISE: f64 = 0.05;

fn default_a() -> f64 {
    1.0
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentConfig {
    pub model: PopulationModel,
    pub sampler: SamplerSpec,
    pub spec: ConeSpec,
    /// Allowed loss `δ` in the sensitivity constant.
    pub delta: f64,
    pub n_grid: Vec<usize>,
    pub trials: usize,
    pub base_seed: u64,
    /// Probability exponent `a` in `1 − (2pL)^{−a}`.
    #[serde(default = "default_a")]
    pub a: f64,
}

impl ExperimentConfig {
    /// Structural checks plus `δ < γ(Ψ)`; returns the population `γ`.
    pub fn validate(&self) -> Result<f64> {
        if self.trials < 20 {
            return Err(Error::InvalidParameter(alloc::format!("{} trials given, at least 20 required", self.trials)));
        }
        if self.n_grid.is_empty() || self.n_grid[0] == 0 || self.n_grid.windows(2).any(|w| w[0] >= w[1]) {
            return Err(Error::InvalidParameter("n grid must be positive and strictly increasing".into()));
        }
        if !(self.spec.q == 1.0 || self.spec.q.is_infinite()) {
            return Err(Error::UnsupportedNorm(self.spec.q));
        }
        if !(self.delta >= 0.0 && self.a > 0.0) {
            return Err(Error::InvalidParameter("δ must be non-negative and a positive".into()));
        }
        self.sampler.validate()?;
        let gamma = sensitivity(&population_psi(&self.model)?, &self.spec)?.constant;
        if self.delta >= gamma {
            return Err(Error::InvalidParameter(alloc::format!("δ = {} is not below γ = {gamma}", self.delta)));
        }
        Ok(gamma)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrialRecord {
    pub n: usize,
    pub seed: u64,
    /// `‖Ψ − Ψ̂‖_max`.
    pub max_entry_deviation: f64,
    /// Exact sensitivity constant of `Ψ̂`.
    pub sample_gamma: f64,
    pub success: bool,
    /// `| |Ψ̂v|_∞ − |Ψv|_∞ | ≤ ‖Ψ − Ψ̂‖_max |v|₁` at the sample witness.
    pub sandwich_holds: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GridSummary {
    pub n: usize,
    pub trials: usize,
    pub success_frequency: f64,
    pub median_deviation: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunSummary {
    pub population_gamma: f64,
    /// Success means `sample_gamma ≥ threshold`.
    pub threshold: f64,
    pub per_n: Vec<GridSummary>,
    /// Log-log slope of the median deviation against `n`.
    pub deviation_slope: Option<f64>,
    /// Success frequency never drops by more than [`MONOTONE_NOISE`].
    pub monotone: bool,
    /// Sufficient `n` from the proof's constants, where computable.
    pub sufficient_n: Option<f64>,
    pub sandwich_violations: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunResult {
    pub records: Vec<TrialRecord>,
    pub summary: RunSummary,
}

/// Least-squares slope of `log y` against `log x`.
pub fn loglog_slope(x: &[f64], y: &[f64]) -> Option<f64> {
    if x.len() != y.len() || x.len() < 2 || x.iter().chain(y).any(|v| !(*v > 0.0)) {
        return None;
    }
    let lx: Vec<f64> = x.iter().map(|v| v.ln()).collect();
    let ly: Vec<f64> = y.iter().map(|v| v.ln()).collect();
    let k = lx.len() as f64;
    let mx = lx.iter().sum::<f64>() / k;
    let my = ly.iter().sum::<f64>() / k;
    let sxy: f64 = lx.iter().zip(&ly).map(|(a, b)| (a - mx) * (b - my)).sum();
    let sxx: f64 = lx.iter().map(|a| (a - mx) * (a - mx)).sum();
    if sxx == 0.0 {
        None
    } else {
        Some(sxy / sxx)
    }
}

fn max_entry_gap(a: &Matrix, b: &Matrix) -> f64 {
    a.data().iter().zip(b.data()).fold(0.0, |m, (x, y)| m.max((x - y).abs()))
}

fn trial(
    psi: &CrossCovariance,
    spec: &ConeSpec,
    threshold: f64,
    n: usize,
    seed: u64,
    draw: impl Fn(u64) -> Result<CrossCovariance>,
) -> Result<TrialRecord> {
    let hat = draw(seed)?;
    let dev = max_entry_gap(psi.matrix(), hat.matrix());
    let report = sensitivity(&hat, spec)?;
    let sandwich_holds = match &report.witness {
        Some(Witness { vector, .. }) => {
            let lhs = (norm_inf(&hat.matrix().matvec(vector)) - norm_inf(&psi.matrix().matvec(vector))).abs();
            lhs <= dev * norm1(vector) * (1.0 + 1e-9) + 1e-12
        }
        None => true,
    };
    Ok(TrialRecord {
        n,
        seed,
        max_entry_deviation: dev,
        sample_gamma: report.constant,
        success: report.constant >= threshold,
        sandwich_holds,
    })
}

fn run_grid(
    config: &ExperimentConfig,
    psi: &CrossCovariance,
    threshold: f64,
    draw: impl Fn(usize, u64) -> Result<CrossCovariance> + Sync + Send,
) -> Result<Vec<TrialRecord>> {
    let jobs: Vec<(usize, usize, u64)> = config
        .n_grid
        .iter()
        .enumerate()
        .flat_map(|(gi, &n)| (0..config.trials as u64).map(move |t| (gi, n, t)))
        .collect();
    let out = crate::par::map(jobs, |(gi, n, t)| {
        let seed = derive_seed(config.base_seed, ((gi as u64) << 32) | t);
        trial(psi, &config.spec, threshold, n, seed, |s| draw(n, s))
    });
    let mut records = out.into_iter().collect::<Result<Vec<_>>>()?;
    records.sort_by_key(|r| (r.n, r.seed));
    Ok(records)
}

fn summarise(records: &[TrialRecord], gamma: f64, threshold: f64, sufficient_n: Option<f64>) -> RunSummary {
    let mut per_n: Vec<GridSummary> = Vec::new();
    let mut ns: Vec<usize> = records.iter().map(|r| r.n).collect();
    ns.dedup();
    for n in ns {
        let rows: Vec<&TrialRecord> = records.iter().filter(|r| r.n == n).collect();
        let mut devs: Vec<f64> = rows.iter().map(|r| r.max_entry_deviation).collect();
        per_n.push(GridSummary {
            n,
            trials: rows.len(),
            success_frequency: rows.iter().filter(|r| r.success).count() as f64 / rows.len() as f64,
            median_deviation: median(&mut devs),
        });
    }
    let xs: Vec<f64> = per_n.iter().map(|g| g.n as f64).collect();
    let ys: Vec<f64> = per_n.iter().map(|g| g.median_deviation).collect();
    RunSummary {
        population_gamma: gamma,
        threshold,
        deviation_slope: loglog_slope(&xs, &ys),
        monotone: per_n.windows(2).all(|w| w[1].success_frequency >= w[0].success_frequency - MONOTONE_NOISE),
        per_n,
        sufficient_n,
        sandwich_violations: records.iter().filter(|r| !r.sandwich_holds).count(),
    }
}

/// Sample `Ψ̂ = ZᵀX/n` at every `(n, trial)` and compare its exact
/// sensitivity with `γ − δ`.
pub fn run(config: &ExperimentConfig) -> Result<RunResult> {
    let gamma = config.validate()?;
    let psi = population_psi(&config.model)?;
    let threshold = gamma - config.delta;
    let records = run_grid(config, &psi, threshold, |n, seed| {
        sample(&config.model, &config.sampler.with_seed(seed), n)?.psi_hat()
    })?;
    let sufficient = sufficient_n(config).ok().flatten();
    Ok(RunResult { summary: summarise(&records, gamma, threshold, sufficient), records })
}

/// Smallest grid `n` from which the success frequency stays at or above
/// `level`.
pub fn empirical_threshold(summary: &RunSummary, level: f64) -> Option<usize> {
    let k = summary.per_n.iter().rposition(|g| g.success_frequency < level).map_or(0, |i| i + 1);
    summary.per_n.get(k).map(|g| g.n)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ShapeRow {
    pub s: usize,
    pub threshold: Option<usize>,
    /// `s²/s₀²` relative to the first sparsity level.
    pub predicted_ratio: f64,
    /// `n*(s)/n*(s₀)`.
    pub observed_ratio: Option<f64>,
}

/// Empirical thresholds at fixed `δ` across sparsity levels, with the
/// ratios the `s² log(2pL)` requirement predicts. The requirement is an
/// upper envelope, so observed ratios at or below the prediction are
/// consistent with it.
pub fn shape_sweep(config: &ExperimentConfig, s_values: &[usize], level: f64) -> Result<Vec<ShapeRow>> {
    let s0 = *s_values.first().ok_or_else(|| Error::InvalidParameter("no sparsity levels".into()))?;
    let mut rows: Vec<ShapeRow> = Vec::new();
    for &s in s_values {
        let spec = ConeSpec { s, ..config.spec };
        let summary = run(&ExperimentConfig { spec, ..config.clone() })?.summary;
        let threshold = empirical_threshold(&summary, level);
        let base = rows.first().map_or(threshold, |r| r.threshold);
        rows.push(ShapeRow {
            s,
            threshold,
            predicted_ratio: (s * s) as f64 / (s0 * s0) as f64,
            observed_ratio: threshold.zip(base).map(|(a, b)| a as f64 / b as f64),
        });
    }
    Ok(rows)
}

/// Constants of the deviation bounds for one regime.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum TailConstants {
    /// `2Lp exp(−cn min(t/K, t²/K²))`.
    Exponential { k: f64 },
    /// `Lp 2^{2r} r^{2r} √(C_x C_z) / (t^{2r} n^r)`.
    Polynomial { r: u32, c_x: f64, c_z: f64 },
}

impl TailConstants {
    /// Bound on `P(‖Ψ − Ψ̂‖_max ≥ t)`, clamped to `[0, 1]`.
    pub fn bound(&self, t: f64, n: usize, p: usize, l: usize) -> f64 {
        let (n, lp) = (n as f64, (l * p) as f64);
        let raw = match *self {
            TailConstants::Exponential { k } => {
                let x = t / k;
                2.0 * lp * (-bernstein_c() * n * x.min(x * x)).exp()
            }
            TailConstants::Polynomial { r, c_x, c_z } => {
                let r = r as f64;
                if t <= 0.0 {
                    f64::INFINITY
                } else {
                    lp * 2f64.powf(2.0 * r) * r.powf(2.0 * r) * (c_x * c_z).sqrt() / (t.powf(2.0 * r) * n.powf(r))
                }
            }
        };
        raw.min(1.0)
    }
}

fn row_norms(m: &Matrix) -> (Vec<f64>, Vec<f64>) {
    (0..m.rows())
        .map(|i| {
            let r = m.row(i);
            (norm1(r), r.iter().map(|v| v * v).sum::<f64>().sqrt())
        })
        .unzip()
}

fn max_of(v: &[f64]) -> f64 {
    v.iter().fold(0.0, |a, &b| a.max(b))
}

/// Tail constants for a non-mixture regime. Each coordinate is `a_iᵀw`
/// for iid standardised `w`: Gaussian coordinates have `ψ₂` norm
/// `|a_i|₂ ψ₂(N(0,1))`; otherwise the triangle inequality gives
/// `|a_i|₁` times the law's norm (or moment).
pub fn tail_constants(model: &PopulationModel, sampler: &SamplerSpec) -> Result<TailConstants> {
    sampler.validate()?;
    let Mixing { x, z, .. } = mixing(model)?;
    let ((x1, x2), (z1, z2)) = (row_norms(&x), row_norms(&z));
    match sampler.regime {
        Regime::Subgaussian => {
            let g = Law::Gaussian.psi2_norm();
            Ok(TailConstants::Exponential { k: 4.0 * max_of(&x2) * g * max_of(&z2) * g })
        }
        Regime::Bounded => {
            let cx = sampler.c_x.unwrap_or_else(|| max_of(&x1));
            let cz = sampler.c_z.unwrap_or_else(|| max_of(&z1));
            Ok(TailConstants::Exponential { k: 2.0 * cx * cz })
        }
        Regime::BoundedMoment => {
            let r = sampler.moment_order;
            let k = 4.0 * r as f64;
            let law = sampler.law_of(Regime::BoundedMoment);
            let m = law.absolute_moment(k).powf(1.0 / k);
            let cx = sampler.c_x.unwrap_or_else(|| (max_of(&x1) * m).powf(k));
            let cz = sampler.c_z.unwrap_or_else(|| (max_of(&z1) * m).powf(k));
            Ok(TailConstants::Polynomial { r, c_x: cx, c_z: cz })
        }
        Regime::Mixture => Err(Error::InvalidParameter("tail bounds are per regime; mixtures are not covered".into())),
    }
}

/// `n ≥ log(2pL)(a+1)/c · max(1, K²(1+α)²s²/δ²)` for the exponential
/// regimes; `None` for the others.
pub fn sufficient_n(config: &ExperimentConfig) -> Result<Option<f64>> {
    let (p, l) = (config.model.p() as f64, config.model.l() as f64);
    match tail_constants(&config.model, &config.sampler) {
        Ok(TailConstants::Exponential { k }) if config.delta > 0.0 => {
            let s = config.spec.s as f64;
            let ratio = k * (1.0 + config.spec.alpha) * s / config.delta;
            Ok(Some((2.0 * p * l).ln() * (config.a + 1.0) / bernstein_c() * ratio.powi(2).max(1.0)))
        }
        Ok(_) => Ok(None),
        Err(Error::InvalidParameter(_)) => Ok(None),
        Err(e) => Err(e),
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TailRow {
    pub n: usize,
    pub t: f64,
    pub empirical: f64,
    pub bound: f64,
    pub valid: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TailTable {
    pub constants: TailConstants,
    pub rows: Vec<TailRow>,
    pub violations: usize,
}

/// Empirical `P(‖Ψ − Ψ̂‖_max ≥ t)` over `config.trials` samples at each
/// `(n, t)`, beside the regime's bound.
pub fn deviation_tail_check(config: &ExperimentConfig, t_grid: &[f64]) -> Result<TailTable> {
    if config.trials == 0 || config.n_grid.is_empty() {
        return Err(Error::InvalidParameter("need at least one trial and one n".into()));
    }
    let constants = tail_constants(&config.model, &config.sampler)?;
    let psi = population_psi(&config.model)?;
    let (p, l) = (psi.p(), psi.l());
    let mut rows = Vec::new();
    for (gi, &n) in config.n_grid.iter().enumerate() {
        let seeds: Vec<u64> =
            (0..config.trials as u64).map(|t| derive_seed(config.base_seed, ((gi as u64) << 32) | t)).collect();
        let devs = crate::par::map(seeds, |seed| -> Result<f64> {
            let hat = sample(&config.model, &config.sampler.with_seed(seed), n)?.psi_hat()?;
            Ok(max_entry_gap(psi.matrix(), hat.matrix()))
        })
        .into_iter()
        .collect::<Result<Vec<f64>>>()?;
        for &t in t_grid {
            let empirical = devs.iter().filter(|&&d| d >= t).count() as f64 / devs.len() as f64;
            let bound = constants.bound(t, n, p, l);
            rows.push(TailRow { n, t, empirical, bound, valid: empirical <= bound });
        }
    }
    let violations = rows.iter().filter(|r| !r.valid).count();
    Ok(TailTable { constants, rows, violations })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MixtureSummary {
    /// `max(γ(Ψ₁), γ(Ψ₂))`.
    pub gamma: f64,
    /// `‖Ψ₁ − Ψ₂‖_max`.
    pub closeness: f64,
    pub nu: f64,
    pub run: RunSummary,
    pub records: Vec<TrialRecord>,
}

/// Rows from `config.model` with probability `p₁` (first component law)
/// and from `second` otherwise. Success is
/// `γ(Ψ̂) ≥ γ − (δ + ν)(1 + α)` where `δ = config.delta` must satisfy
/// `‖Ψ₁ − Ψ₂‖_max ≤ δ/s`. Deviations are measured against the mixed
/// population `p₁Ψ₁ + (1 − p₁)Ψ₂`.
pub fn mixture_study(config: &ExperimentConfig, second: &PopulationModel, nu: f64) -> Result<MixtureSummary> {
    let mix = config
        .sampler
        .mixture
        .filter(|_| config.sampler.regime == Regime::Mixture)
        .ok_or_else(|| Error::InvalidParameter("mixture study needs a mixture sampler".into()))?;
    config.sampler.validate()?;
    if !(nu >= 0.0) || config.trials < 20 {
        return Err(Error::InvalidParameter("ν must be non-negative and trials at least 20".into()));
    }
    let psi1 = population_psi(&config.model)?;
    let psi2 = population_psi(second)?;
    if (psi1.l(), psi1.p()) != (psi2.l(), psi2.p()) {
        return Err(Error::DimensionMismatch("Ψ₁ and Ψ₂ differ in shape".into()));
    }
    let closeness = max_entry_gap(psi1.matrix(), psi2.matrix());
    let s = config.spec.s as f64;
    if closeness > config.delta / s {
        return Err(Error::Hypothesis(alloc::format!(
            "‖Ψ₁ − Ψ₂‖_max = {closeness} exceeds δ/s = {}",
            config.delta / s
        )));
    }
    let gamma = sensitivity(&psi1, &config.spec)?.constant.max(sensitivity(&psi2, &config.spec)?.constant);
    let threshold = gamma - (config.delta + nu) * (1.0 + config.spec.alpha);
    let mixed = CrossCovariance::new(
        psi1.matrix().scaled(&mix.weight).add(&psi2.matrix().scaled(&(1.0 - mix.weight)))?,
    )?;
    let records = run_grid(config, &mixed, threshold, |n, seed| {
        sample_mixture(&config.model, second, &config.sampler.with_seed(seed), n)?.psi_hat()
    })?;
    let run = summarise(&records, gamma, threshold, None);
    Ok(MixtureSummary { gamma, closeness, nu, run, records })
}
