use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use regcert::io::parse_rational;
use regcert::records::{CheckOutput, McConfig, McOutput, McSummary, ReduceOutput, SampleMeta, TransformOutput};
use regcert::records::{EstimateOutput, RateStudySummary};
use regcert::CliError;
use regcert_core::checkers::{Mode, Property, Verdict};
use regcert_core::ensembles::{PopulationModel, Regime, SamplerSpec};
use regcert_core::estimators::{generate, Method, StudyConfig};
use regcert_core::harness::ExperimentConfig;
use regcert_core::ConeSpec;

fn fixture(name: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("tests/fixtures").join(name)
}

fn regcert(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_regcert")).args(args).output().expect("binary runs")
}

fn path_str(p: &Path) -> &str {
    p.to_str().unwrap()
}

fn stderr_error(out: &Output) -> CliError {
    serde_json::from_slice(&out.stderr).unwrap_or_else(|_| panic!("{}", String::from_utf8_lossy(&out.stderr)))
}

fn read<T: serde::de::DeserializeOwned>(p: &Path) -> T {
    serde_json::from_str(&std::fs::read_to_string(p).unwrap()).unwrap()
}

#[test]
fn check_identity_fixture() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("report.json");
    let m = fixture("identity6.csv");
    let o = regcert(&["check", "--property", "lq", "--matrix", path_str(&m), "--s", "2", "--alpha", "1", "--q", "1", "--out", path_str(&out)]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let report: CheckOutput = read(&out);
    assert!((report.report.constant - 0.5).abs() < 1e-9);
    assert_eq!(report.report.mode, Mode::Exact);
    assert_eq!(report.report.property, Property::LqSensitivity);
    // Rational mode agrees.
    let o = regcert(&["--arithmetic", "rational", "check", "--property", "lq", "--matrix", path_str(&m), "--s", "2"]);
    let exact: CheckOutput = serde_json::from_slice(&o.stdout).unwrap();
    assert!((exact.report.constant - 0.5).abs() < 1e-12);
}

#[test]
fn check_infinity_norm_and_gamma() {
    let m = fixture("identity6.csv");
    let o = regcert(&["check", "--property", "lq", "--matrix", path_str(&m), "--s", "2", "--q", "inf", "--gamma", "0.1"]);
    assert!(o.status.success());
    let r: CheckOutput = serde_json::from_slice(&o.stdout).unwrap();
    assert_eq!(r.report.spec.unwrap().q, f64::INFINITY);
    assert_eq!(r.decision.unwrap().verdict, Verdict::Holds);
}

#[test]
fn classical_properties() {
    let m = fixture("duplicate.csv");
    let o = regcert(&["check", "--property", "spark", "--matrix", path_str(&m)]);
    let r: CheckOutput = serde_json::from_slice(&o.stdout).unwrap();
    assert_eq!(r.report.constant, 2.0);
    let o = regcert(&["check", "--property", "incoherence", "--matrix", path_str(&m)]);
    let r: CheckOutput = serde_json::from_slice(&o.stdout).unwrap();
    assert!((r.report.constant - 1.0).abs() < 1e-12);
    let o = regcert(&["check", "--property", "rip", "--matrix", path_str(&m)]);
    assert_eq!(o.status.code(), Some(1));
    assert_eq!(stderr_error(&o).kind, "validation");
}

#[test]
fn indeterminate_exits_two() {
    let m = fixture("identity6.csv");
    let o = regcert(&["check", "--property", "re", "--matrix", path_str(&m), "--s", "2", "--gamma", "0.99"]);
    assert_eq!(o.status.code(), Some(2));
    let r: CheckOutput = serde_json::from_slice(&o.stdout).unwrap();
    assert_eq!(r.decision.unwrap().verdict, Verdict::Indeterminate);
}

#[test]
fn malformed_csv_names_line() {
    let o = regcert(&["check", "--property", "spark", "--matrix", path_str(&fixture("malformed.csv"))]);
    assert_eq!(o.status.code(), Some(1));
    let e = stderr_error(&o);
    assert_eq!(e.kind, "parse");
    assert_eq!(e.line, Some(3));
}

#[test]
fn missing_file_and_bad_flags() {
    let o = regcert(&["check", "--property", "spark", "--matrix", "/nonexistent/x.csv"]);
    assert_eq!(o.status.code(), Some(1));
    assert_eq!(stderr_error(&o).kind, "io");
    let o = regcert(&["--threads", "0", "check", "--property", "spark", "--matrix", path_str(&fixture("duplicate.csv"))]);
    assert_eq!(o.status.code(), Some(1));
    let o = regcert(&["--arithmetic", "rational", "check", "--property", "re", "--s", "1", "--matrix", path_str(&fixture("duplicate.csv"))]);
    assert_eq!(stderr_error(&o).kind, "validation");
}

#[test]
fn version_reports_schema() {
    let o = regcert(&["--version"]);
    assert!(o.status.success());
    let v: regcert::records::VersionInfo = serde_json::from_slice(&o.stdout).unwrap();
    assert_eq!(v.schema_version, regcert_core::SCHEMA_VERSION);
}

#[test]
fn reduce_requires_rational() {
    let m = fixture("duplicate.csv");
    let o = regcert(&["--arithmetic", "float", "reduce", "--matrix", path_str(&m), "--s", "2", "--property", "lq"]);
    assert_eq!(o.status.code(), Some(1));
    assert_eq!(stderr_error(&o).kind, "arithmetic");
}

#[test]
fn reduce_detects_duplicate_column() {
    let dir = tempfile::tempdir().unwrap();
    for prop in ["re", "compat", "lq"] {
        let out = dir.path().join(format!("{prop}.json"));
        let o = regcert(&["reduce", "--matrix", path_str(&fixture("duplicate.csv")), "--s", "2", "--property", prop, "--out", path_str(&out)]);
        assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
        let r: ReduceOutput = read(&out);
        assert_eq!(r.spark_at_most_s, Some(true));
        assert_eq!(r.property_holds, Some(false));
        let alpha = parse_rational(&r.alpha).unwrap();
        assert_eq!(regcert::io::rational_string(&alpha), r.alpha);
    }
    let o = regcert(&["reduce", "--matrix", path_str(&fixture("design4x3.csv")), "--s", "1", "--property", "lq"]);
    assert_eq!(stderr_error(&o).kind, "validation");
}

#[test]
fn sample_is_seed_deterministic() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("sample.json");
    let body = serde_json::json!({
        "model": {"kind": "equal_correlation", "p": 3, "rho": 0.3},
        "sampler": {"regime": "subgaussian", "seed": 1},
        "n": 25
    });
    std::fs::write(&cfg, body.to_string()).unwrap();
    let (a, b, c) = (dir.path().join("a"), dir.path().join("b"), dir.path().join("c"));
    for (d, seed) in [(&a, "7"), (&b, "7"), (&c, "8")] {
        let o = regcert(&["--seed", seed, "sample", "--config", path_str(&cfg), "--out-dir", path_str(d)]);
        assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    }
    let xa = std::fs::read(a.join("x.csv")).unwrap();
    assert_eq!(xa, std::fs::read(b.join("x.csv")).unwrap());
    assert_ne!(xa, std::fs::read(c.join("x.csv")).unwrap());
    let meta: SampleMeta = read(&a.join("meta.json"));
    assert_eq!((meta.n, meta.p, meta.l, meta.seed), (25, 3, 3, 7));
    let x = regcert::io::read_matrix(&a.join("x.csv")).unwrap();
    assert_eq!((x.rows(), x.cols()), (25, 3));
}

#[test]
fn transform_permutation_is_exact() {
    let x = fixture("design4x3.csv");
    let o = regcert(&["transform", "--kind", "orthogonal-rows", "--matrix", path_str(&x), "--payload", path_str(&fixture("perm4.csv")), "--s", "1"]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let r: TransformOutput = serde_json::from_slice(&o.stdout).unwrap();
    assert!((r.report.observed_after - r.report.gamma_before).abs() < 1e-10);
    assert!(r.slack >= -1e-9);
    // A non-orthogonal payload is refused.
    let o = regcert(&["transform", "--kind", "orthogonal-rows", "--matrix", path_str(&x), "--payload", path_str(&x), "--s", "1"]);
    assert_eq!(o.status.code(), Some(1));
}

#[test]
fn estimate_round_trips() {
    let dir = tempfile::tempdir().unwrap();
    let model = PopulationModel::Diagonal { d: vec![1.0; 5] };
    let inst = generate(&model, &SamplerSpec::new(Regime::Subgaussian, 0), 60, 2, 1.0, 0.5, 3).unwrap();
    let path = dir.path().join("inst.json");
    std::fs::write(&path, serde_json::to_string(&inst).unwrap()).unwrap();
    let out = dir.path().join("est.json");
    let o = regcert(&["estimate", "--method", "stiv", "--instance", path_str(&path), "--A", "1.5", "--chain", "--out", path_str(&out)]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let e: EstimateOutput = read(&out);
    assert_eq!(e.method, Method::Stiv);
    assert!(e.result.feasible);
    assert_eq!(e.instance_fingerprint, format!("{:016x}", inst.fingerprint()));
    let chain = e.chain.unwrap();
    if chain.truth_feasible {
        assert!(chain.l1_minimal && chain.in_cone);
    }
}

#[test]
fn rate_study_writes_csv() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = StudyConfig {
        model: PopulationModel::Diagonal { d: vec![1.0; 6] },
        sampler: SamplerSpec::new(Regime::Subgaussian, 0),
        method: Method::Dantzig,
        s: 2,
        n_grid: vec![50, 100],
        seeds: 20,
        a: 1.5,
        sigma: 0.5,
        beta_magnitude: 1.0,
        norms: vec![regcert_core::estimators::ErrorNorm::L1],
        base_seed: 0,
    };
    let path = dir.path().join("study.json");
    std::fs::write(&path, serde_json::to_string(&cfg).unwrap()).unwrap();
    let out = dir.path().join("results.csv");
    let o = regcert(&["rate-study", "--config", path_str(&path), "--out", path_str(&out)]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let summary: RateStudySummary = serde_json::from_slice(&o.stdout).unwrap();
    assert_eq!(summary.rows.len(), 2);
    let text = std::fs::read_to_string(&out).unwrap();
    assert!(text.starts_with("n,norm,median_error,truth_feasible"));
    assert_eq!(text.lines().count(), 3);
}

fn experiment() -> ExperimentConfig {
    ExperimentConfig {
        model: PopulationModel::Diagonal { d: vec![1.0; 4] },
        sampler: SamplerSpec::new(Regime::Subgaussian, 0),
        spec: ConeSpec::l1(1, 1.0).unwrap(),
        delta: 0.2,
        n_grid: vec![50, 100],
        trials: 20,
        base_seed: 5,
        a: 1.0,
    }
}

fn run_mc(cfg: &McConfig, dir: &Path) -> Output {
    let path = dir.join("cfg.json");
    std::fs::write(&path, serde_json::to_string(cfg).unwrap()).unwrap();
    regcert(&["mc", "--config", path_str(&path), "--out-dir", path_str(&dir.join("out"))])
}

#[test]
fn mc_sensitivity_run() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = McConfig { experiment: experiment(), tail: None, mixture: None };
    let o = run_mc(&cfg, dir.path());
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let summary: McOutput = read(&dir.path().join("out/summary.json"));
    assert_eq!(summary.config, cfg);
    let McSummary::Sensitivity { summary } = summary.result else { panic!("wrong study") };
    assert_eq!(summary.per_n.len(), 2);
    let trials = std::fs::read_to_string(dir.path().join("out/trials.csv")).unwrap();
    assert!(trials.starts_with("n,seed,max_entry_deviation,sample_gamma,success,sandwich_holds"));
    assert_eq!(trials.lines().count(), 41);
}

#[test]
fn mc_tail_and_mixture() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = McConfig {
        experiment: experiment(),
        tail: Some(regcert::records::TailStudy { t_grid: vec![0.1, 0.5] }),
        mixture: None,
    };
    assert!(run_mc(&cfg, dir.path()).status.success());
    let out: McOutput = read(&dir.path().join("out/summary.json"));
    assert!(matches!(out.result, McSummary::Tail { violations: 0, rows: 4, .. }));

    let mut exp = experiment();
    exp.sampler = SamplerSpec::mixture(0.5, Regime::Subgaussian, Regime::Bounded, 0);
    let far = PopulationModel::Diagonal { d: vec![0.5, 1.0, 1.0, 1.0] };
    let cfg = McConfig { experiment: exp.clone(), tail: None, mixture: Some(regcert::records::MixtureStudy { second: far, nu: 0.0 }) };
    let o = run_mc(&cfg, dir.path());
    assert_eq!(o.status.code(), Some(1));
    assert_eq!(stderr_error(&o).kind, "hypothesis");
    let near = PopulationModel::Diagonal { d: vec![1.0; 4] };
    let cfg = McConfig { experiment: exp, tail: None, mixture: Some(regcert::records::MixtureStudy { second: near, nu: 0.05 }) };
    assert!(run_mc(&cfg, dir.path()).status.success());
}

#[test]
fn mc_rejects_invalid_config() {
    let dir = tempfile::tempdir().unwrap();
    let mut exp = experiment();
    exp.n_grid = vec![100, 50];
    let o = run_mc(&McConfig { experiment: exp, tail: None, mixture: None }, dir.path());
    assert_eq!(o.status.code(), Some(1));
    assert!(!dir.path().join("out/summary.json").exists());
    std::fs::write(dir.path().join("broken.json"), "{\n  \"experiment\": \n").unwrap();
    let o = regcert(&["mc", "--config", path_str(&dir.path().join("broken.json")), "--out-dir", path_str(dir.path())]);
    let e = stderr_error(&o);
    assert_eq!((e.kind.as_str(), e.line.is_some()), ("parse", true));
}
