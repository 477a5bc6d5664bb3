//! One function per subcommand. Inputs are parsed and validated before
//! any computation starts.

use std::path::{Path, PathBuf};

use regcert_core::checkers::{
    compatibility_constant, decide, incoherence_constant, l1_sensitivity_with, re_constant, rip_constant,
    sensitivity, spark_report, DecideInput, Decision, Property, SearchConfig, Verdict,
};
use regcert_core::ensembles::{sample, sample_mixture, Regime};
use regcert_core::estimators::{chain_check, error_vs_n_study, Method, RegressionInstance, StudyConfig};
use regcert_core::harness::{deviation_tail_check, mixture_study, run as run_experiment};
use regcert_core::reduction::spark_via_oracle_with;
use regcert_core::transforms::{certify, TransformKind, TransformSpec};
use regcert_core::{Arithmetic, ConeSpec, CrossCovariance, DesignMatrix, InstrumentMatrix};

use crate::error::CliError;
use crate::io::{read_json, read_matrix, to_json_string, write_csv, write_json, write_matrix};
use crate::records::*;
use crate::{Command, MethodArg, PropertyArg, ReducibleArg, Status, TransformArg};

pub struct Context {
    pub seed: Option<u64>,
    pub arithmetic: Option<Arithmetic>,
}

pub fn dispatch(ctx: &Context, command: Command) -> Result<Status, CliError> {
    match command {
        Command::Check { property, matrix, instruments, s, alpha, q, gamma, integral, out } => {
            check(ctx, property, &matrix, instruments.as_deref(), s, alpha, q, gamma, integral, out.as_deref())
        }
        Command::Reduce { matrix, s, property, out } => reduce(ctx, &matrix, s, property, out.as_deref()),
        Command::Sample { config, out_dir } => sample_cmd(ctx, &config, &out_dir),
        Command::Transform { kind, matrix, instruments, payload, payload_instruments, s, alpha, q, out } => transform(
            ctx,
            kind,
            &matrix,
            instruments.as_deref(),
            &payload,
            payload_instruments.as_deref(),
            ConeSpec::new(s, alpha, q)?,
            out.as_deref(),
        ),
        Command::Estimate { method, instance, a, chain, out } => estimate(ctx, method, &instance, a, chain, out.as_deref()),
        Command::RateStudy { config, out } => rate_study(ctx, &config, &out),
        Command::Mc { config, out_dir } => mc(ctx, &config, &out_dir),
    }
}

fn emit<T: serde::Serialize>(out: Option<&Path>, value: &T) -> Result<(), CliError> {
    match out {
        Some(path) => write_json(path, value),
        None => {
            println!("{}", to_json_string(value)?);
            Ok(())
        }
    }
}

fn float_only(ctx: &Context, what: &str) -> Result<(), CliError> {
    if ctx.arithmetic == Some(Arithmetic::Rational) {
        return Err(CliError::validation(format!("{what} is computed in floating point only")));
    }
    Ok(())
}

fn design(path: &Path, integral: bool) -> Result<DesignMatrix, CliError> {
    let m = read_matrix(path)?;
    Ok(if integral { DesignMatrix::integral(m)? } else { DesignMatrix::new(m)? })
}

fn instruments_or_design(path: Option<&Path>, x: &DesignMatrix) -> Result<InstrumentMatrix, CliError> {
    let z = match path {
        Some(p) => InstrumentMatrix::new(read_matrix(p)?)?,
        None => InstrumentMatrix::from(x),
    };
    if z.n() != x.n() {
        return Err(CliError::validation(format!("instruments have {} rows, design has {}", z.n(), x.n())));
    }
    Ok(z)
}

fn status_of(decision: Option<&Decision>) -> Status {
    match decision {
        Some(d) if d.verdict == Verdict::Indeterminate => Status::Indeterminate,
        _ => Status::Done,
    }
}

#[allow(clippy::too_many_arguments)]
fn check(
    ctx: &Context,
    property: PropertyArg,
    matrix: &Path,
    instruments: Option<&Path>,
    s: Option<usize>,
    alpha: f64,
    q: f64,
    gamma: Option<f64>,
    integral: bool,
    out: Option<&Path>,
) -> Result<Status, CliError> {
    let needs_s = !matches!(property, PropertyArg::Spark | PropertyArg::Incoherence);
    if needs_s && s.is_none() {
        return Err(CliError::validation("--s is required for this property"));
    }
    if instruments.is_some() && property != PropertyArg::Lq {
        return Err(CliError::validation("--instruments only applies to lq"));
    }
    if gamma.is_some() && !matches!(property, PropertyArg::Re | PropertyArg::Compat | PropertyArg::Lq) {
        return Err(CliError::validation("--gamma applies to re, compat and lq"));
    }
    let rational = ctx.arithmetic == Some(Arithmetic::Rational);
    if rational && !(property == PropertyArg::Lq && q == 1.0) {
        return Err(CliError::validation("rational arithmetic is available for lq with q = 1"));
    }
    let x = design(matrix, integral)?;
    let s = s.unwrap_or(1);
    let spec = || -> Result<ConeSpec, CliError> { Ok(ConeSpec::new(s, alpha, q)?) };
    let search = SearchConfig { seed: ctx.seed.unwrap_or(SearchConfig::default().seed), ..SearchConfig::default() };
    let (report, decision) = match property {
        PropertyArg::Spark => (spark_report(&x)?, None),
        PropertyArg::Incoherence => (incoherence_constant(&x)?, None),
        PropertyArg::Rip => (rip_constant(&x, s)?, None),
        PropertyArg::Re | PropertyArg::Compat => {
            let a = x.normalized();
            let spec = spec()?;
            let report = if property == PropertyArg::Re {
                re_constant(&a, &spec, &search)?
            } else {
                compatibility_constant(&a, &spec, &search)?
            };
            let p = if property == PropertyArg::Re { Property::Re } else { Property::Compatibility };
            let d = gamma.map(|g| decide(p, DecideInput::Design(&a), &spec, g)).transpose()?;
            (report, d)
        }
        PropertyArg::Lq => {
            let z = instruments_or_design(instruments, &x)?;
            let psi = CrossCovariance::sample(&z, &x)?;
            let spec = spec()?;
            let report = if rational { l1_sensitivity_with(&psi, &spec, Arithmetic::Rational)? } else { sensitivity(&psi, &spec)? };
            let d = gamma.map(|g| Decision::from_report(report.clone(), g));
            (report, d)
        }
    };
    let status = status_of(decision.as_ref());
    emit(out, &CheckOutput::new(report, decision))?;
    Ok(status)
}

fn reduce(ctx: &Context, matrix: &Path, s: usize, property: ReducibleArg, out: Option<&Path>) -> Result<Status, CliError> {
    let arithmetic = ctx.arithmetic.unwrap_or(Arithmetic::Rational);
    if arithmetic == Arithmetic::Float {
        return Err(CliError::from(regcert_core::Error::ExactArithmeticRequired(
            "the reduction's α and γ lie below double precision".into(),
        )));
    }
    let x = design(matrix, true)?;
    let property = match property {
        ReducibleArg::Re => Property::Re,
        ReducibleArg::Compat => Property::Compatibility,
        ReducibleArg::Lq => Property::LqSensitivity,
    };
    let outcome = spark_via_oracle_with(&x, s, property, arithmetic)?;
    emit(out, &ReduceOutput::new(s, &outcome))?;
    Ok(if outcome.property_holds.is_none() { Status::Indeterminate } else { Status::Done })
}

fn sample_cmd(ctx: &Context, config: &Path, out_dir: &Path) -> Result<Status, CliError> {
    float_only(ctx, "sampling")?;
    let mut cfg: SampleConfig = read_json(config)?;
    if let Some(seed) = ctx.seed {
        cfg.sampler.seed = seed;
    }
    if cfg.n == 0 {
        return Err(CliError::validation("n must be at least 1"));
    }
    let drawn = match (&cfg.second, cfg.sampler.regime) {
        (Some(second), Regime::Mixture) => sample_mixture(&cfg.model, second, &cfg.sampler, cfg.n)?,
        (None, Regime::Mixture) => sample_mixture(&cfg.model, &cfg.model, &cfg.sampler, cfg.n)?,
        (Some(_), _) => return Err(CliError::validation("`second` needs a mixture sampler")),
        (None, _) => sample(&cfg.model, &cfg.sampler, cfg.n)?,
    };
    write_matrix(&out_dir.join("x.csv"), drawn.x.matrix())?;
    write_matrix(&out_dir.join("z.csv"), drawn.z.matrix())?;
    let meta = SampleMeta {
        schema_version: regcert_core::SCHEMA_VERSION.into(),
        n: drawn.x.n(),
        p: drawn.x.p(),
        l: drawn.z.l(),
        seed: cfg.sampler.seed,
        joint_completion: drawn.joint_completion,
        config: cfg,
    };
    write_json(&out_dir.join("meta.json"), &meta)?;
    Ok(Status::Done)
}

#[allow(clippy::too_many_arguments)]
fn transform(
    ctx: &Context,
    kind: TransformArg,
    matrix: &Path,
    instruments: Option<&Path>,
    payload: &Path,
    payload_instruments: Option<&Path>,
    cone: ConeSpec,
    out: Option<&Path>,
) -> Result<Status, CliError> {
    float_only(ctx, "transform certification")?;
    if payload_instruments.is_some() && kind != TransformArg::Averaging {
        return Err(CliError::validation("--payload-instruments only applies to averaging"));
    }
    let x = design(matrix, false)?;
    let z = instruments_or_design(instruments, &x)?;
    let m = read_matrix(payload)?.to_rows();
    let kind = match kind {
        TransformArg::OrthogonalRows => TransformKind::OrthogonalRows { m },
        TransformArg::ConePreservingRight => TransformKind::ConePreservingRight { m },
        TransformArg::LinfExpansiveLeft => TransformKind::LinfExpansiveLeft { m },
        TransformArg::AdditivePerturbation => TransformKind::AdditivePerturbation { delta: m },
        TransformArg::Averaging => {
            let z2 = match payload_instruments {
                Some(p) => read_matrix(p)?.to_rows(),
                None => m.clone(),
            };
            TransformKind::Averaging { x2: m, z2 }
        }
    };
    let report = certify(&TransformSpec::new(kind), &x, &z, &cone)?;
    emit(out, &TransformOutput::new(report))?;
    Ok(Status::Done)
}

fn estimate(ctx: &Context, method: MethodArg, instance: &Path, a: f64, chain: bool, out: Option<&Path>) -> Result<Status, CliError> {
    float_only(ctx, "estimation")?;
    if !(a > 0.0 && a.is_finite()) {
        return Err(CliError::validation("--A must be positive"));
    }
    let inst: RegressionInstance = read_json(instance)?;
    inst.validate()?;
    let method = match method {
        MethodArg::Stiv => Method::Stiv,
        MethodArg::Dantzig => Method::Dantzig,
    };
    let result = method.estimate(&inst, a)?;
    let chain = if chain { Some(chain_check(&inst, &result)?) } else { None };
    let output = EstimateOutput {
        schema_version: regcert_core::SCHEMA_VERSION.into(),
        method,
        a,
        instance_fingerprint: format!("{:016x}", inst.fingerprint()),
        result,
        chain,
    };
    emit(out, &output)?;
    Ok(Status::Done)
}

fn rate_study(ctx: &Context, config: &Path, out: &Path) -> Result<Status, CliError> {
    float_only(ctx, "the rate study")?;
    let mut cfg: StudyConfig = read_json(config)?;
    if let Some(seed) = ctx.seed {
        cfg.base_seed = seed;
    }
    cfg.validate()?;
    let result = error_vs_n_study(&cfg)?;
    write_csv(out, &result.rows)?;
    let summary =
        RateStudySummary { schema_version: regcert_core::SCHEMA_VERSION.into(), rows: result.rows, slopes: result.slopes };
    println!("{}", to_json_string(&summary)?);
    Ok(Status::Done)
}

fn mc(ctx: &Context, config: &Path, out_dir: &Path) -> Result<Status, CliError> {
    float_only(ctx, "Monte Carlo")?;
    let mut cfg: McConfig = read_json(config)?;
    if let Some(seed) = ctx.seed {
        cfg.experiment.base_seed = seed;
    }
    let exp = &cfg.experiment;
    let summary_path: PathBuf = out_dir.join("summary.json");
    match (&cfg.tail, &cfg.mixture) {
        (Some(_), Some(_)) => Err(CliError::validation("choose one of `tail` and `mixture`")),
        (Some(tail), None) => {
            let table = deviation_tail_check(exp, &tail.t_grid)?;
            write_csv(&out_dir.join("tail.csv"), &table.rows)?;
            let result =
                McSummary::Tail { constants: table.constants, violations: table.violations, rows: table.rows.len() };
            write_json(&summary_path, &McOutput::new(cfg, result))?;
            Ok(Status::Done)
        }
        (None, Some(mix)) => {
            let m = mixture_study(exp, &mix.second, mix.nu)?;
            write_csv(&out_dir.join("trials.csv"), &m.records)?;
            write_json(&summary_path, &McOutput::mixture(cfg, &m))?;
            Ok(Status::Done)
        }
        (None, None) => {
            let r = run_experiment(exp)?;
            write_csv(&out_dir.join("trials.csv"), &r.records)?;
            write_json(&summary_path, &McOutput::new(cfg, McSummary::Sensitivity { summary: r.summary }))?;
            Ok(Status::Done)
        }
    }
}
