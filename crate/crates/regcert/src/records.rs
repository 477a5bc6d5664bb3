//! Serialisable inputs and outputs. Every record emitted by the binary
//! deserialises back into the type here that produced it.

use regcert_core::checkers::{Decision, Property, RegularityReport};
use regcert_core::ensembles::{PopulationModel, SamplerSpec};
use regcert_core::estimators::{ChainCheck, EstimateResult, ErrorNorm, Method, StudyRow};
use regcert_core::harness::{ExperimentConfig, MixtureSummary, RunSummary, TailConstants};
use regcert_core::reduction::{Certificate, ReductionOutcome};
use regcert_core::transforms::TransformReport;
use regcert_core::{Arithmetic, SCHEMA_VERSION};
use serde::{Deserialize, Serialize};
use std::collections::BTreeMap;

use crate::io::rational_string;

fn schema() -> String {
    SCHEMA_VERSION.to_string()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VersionInfo {
    pub version: String,
    pub schema_version: String,
}

impl VersionInfo {
    pub fn current() -> Self {
        Self { version: env!("CARGO_PKG_VERSION").into(), schema_version: schema() }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CheckOutput {
    pub schema_version: String,
    pub report: RegularityReport,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub decision: Option<Decision>,
}

impl CheckOutput {
    pub fn new(report: RegularityReport, decision: Option<Decision>) -> Self {
        Self { schema_version: schema(), report, decision }
    }
}

/// Reduction evidence with rationals as `"numerator/denominator"`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum CertificateRecord {
    Violation { vector: Vec<String>, value: String },
    Sensitivity { constant: String },
    PositiveDefinite { margins: Vec<String> },
    None,
}

impl From<&Certificate> for CertificateRecord {
    fn from(c: &Certificate) -> Self {
        let all = |v: &[regcert_core::Rational]| v.iter().map(rational_string).collect();
        match c {
            Certificate::Violation { vector, value } => {
                Self::Violation { vector: all(vector), value: rational_string(value) }
            }
            Certificate::Sensitivity { constant } => Self::Sensitivity { constant: rational_string(constant) },
            Certificate::PositiveDefinite { margins } => Self::PositiveDefinite { margins: all(margins) },
            Certificate::None => Self::None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReduceOutput {
    pub schema_version: String,
    pub property: Property,
    pub n: usize,
    pub p: usize,
    pub s: usize,
    pub max_entry: u64,
    pub k: u32,
    pub alpha: String,
    pub gamma: String,
    pub bit_size: u64,
    pub within_size_bound: bool,
    pub property_holds: Option<bool>,
    pub spark_at_most_s: Option<bool>,
    pub certificate: CertificateRecord,
    pub arithmetic: Arithmetic,
    pub enumeration_size: u64,
}

impl ReduceOutput {
    pub fn new(s: usize, o: &ReductionOutcome) -> Self {
        let p = &o.params;
        Self {
            schema_version: schema(),
            property: p.property,
            n: p.n,
            p: p.p,
            s,
            max_entry: p.m,
            k: p.k,
            alpha: rational_string(&p.alpha),
            gamma: rational_string(&p.gamma),
            bit_size: p.bit_size,
            within_size_bound: p.within_size_bound(),
            property_holds: o.property_holds,
            spark_at_most_s: o.spark_at_most_s,
            certificate: (&o.certificate).into(),
            arithmetic: o.arithmetic,
            enumeration_size: o.enumeration_size,
        }
    }
}

/// Input of `sample`; `second` is the other component of a mixture.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SampleConfig {
    pub model: PopulationModel,
    pub sampler: SamplerSpec,
    pub n: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub second: Option<PopulationModel>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SampleMeta {
    pub schema_version: String,
    pub n: usize,
    pub p: usize,
    pub l: usize,
    pub seed: u64,
    /// `(X, Z)` came from the minimal joint completion of an explicit `Ψ`.
    pub joint_completion: bool,
    pub config: SampleConfig,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TransformOutput {
    pub schema_version: String,
    pub report: TransformReport,
    pub slack: f64,
}

impl TransformOutput {
    pub fn new(report: TransformReport) -> Self {
        Self { schema_version: schema(), slack: report.slack(), report }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EstimateOutput {
    pub schema_version: String,
    pub method: Method,
    pub a: f64,
    /// Hash of the instance's numbers, for matching outputs to inputs.
    pub instance_fingerprint: String,
    pub result: EstimateResult,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub chain: Option<ChainCheck>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RateStudySummary {
    pub schema_version: String,
    pub rows: Vec<StudyRow>,
    pub slopes: BTreeMap<ErrorNorm, Option<f64>>,
}

/// Input of `mc`. With neither `tail` nor `mixture` the plain sensitivity
/// experiment runs.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct McConfig {
    pub experiment: ExperimentConfig,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub tail: Option<TailStudy>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub mixture: Option<MixtureStudy>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TailStudy {
    pub t_grid: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MixtureStudy {
    /// Population of the second component; the first is `experiment.model`.
    pub second: PopulationModel,
    #[serde(default)]
    pub nu: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "study", rename_all = "snake_case")]
pub enum McSummary {
    Sensitivity { summary: RunSummary },
    Tail { constants: TailConstants, violations: usize, rows: usize },
    Mixture { gamma: f64, closeness: f64, nu: f64, summary: RunSummary },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct McOutput {
    pub schema_version: String,
    pub config: McConfig,
    pub result: McSummary,
}

impl McOutput {
    pub fn new(config: McConfig, result: McSummary) -> Self {
        Self { schema_version: schema(), config, result }
    }

    pub fn mixture(config: McConfig, m: &MixtureSummary) -> Self {
        let result = McSummary::Mixture { gamma: m.gamma, closeness: m.closeness, nu: m.nu, summary: m.run.clone() };
        Self::new(config, result)
    }
}
