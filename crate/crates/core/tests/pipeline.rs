use std::f64::consts::PI;

use stcmc_core::pipeline::{self, AnalysisConfig, AnalysisKind, AnalysisResult, Report, SCHEMA_VERSION};
use stcmc_core::Error;

const ALL: &str = r#"
[model]
kind = "schwarzschild"
mass = 1.0

[surface]
kind = "sphere"
radius = 10.0
placement = "areal"
level = 3

[solver]
seed = 7

[analyses]
run = ["geometry", "spectrum", "stability-cmc", "stability-stcmc", "energies", "inequalities", "foliation", "residuals"]
foliation_radii = [10.0, 5.0, 20.0]
"#;

fn config(text: &str) -> AnalysisConfig {
    AnalysisConfig::from_toml_str(text).unwrap()
}

#[test]
fn full_run_matches_closed_forms() {
    let out = pipeline::run(&config(ALL)).unwrap();
    let r = &out.report;
    assert!(!r.failed(), "{:?}", r.analyses.iter().filter_map(|a| a.error.as_ref()).collect::<Vec<_>>());
    assert_eq!(r.schema_version, SCHEMA_VERSION);
    assert_eq!(r.analyses.len(), 8);
    for a in &r.analyses {
        assert_eq!(a.level, Some(3));
        assert!(a.tolerance > 0.0);
    }
    let Some(AnalysisResult::Energies(e)) = r.result(AnalysisKind::Energies) else { panic!() };
    assert!((e.hawking - 1.0).abs() < 5e-3);
    let Some(AnalysisResult::Inequalities(ineq)) = r.result(AnalysisKind::Inequalities) else { panic!() };
    let cy = &ineq.verdicts[0];
    assert!(cy.holds && (cy.slack - 8e-3).abs() < 2e-4, "{cy:?}");
    assert_eq!(r.provenance.level, Some(3));
    assert_eq!(r.provenance.vertices, Some(642));
}

#[test]
fn reports_are_deterministic() {
    let c = config(ALL);
    let a = pipeline::run(&c).unwrap().report.canonical_json().unwrap();
    let b = pipeline::run(&c).unwrap().report.canonical_json().unwrap();
    assert_eq!(a, b);
}

#[test]
fn json_round_trips_and_echo_reproduces() {
    let out = pipeline::run(&config(ALL)).unwrap();
    let parsed = Report::from_json(&out.report.to_json().unwrap()).unwrap();
    assert_eq!(parsed, out.report);
    let rerun = pipeline::run(&parsed.config).unwrap();
    assert_eq!(rerun.report.canonical_json().unwrap(), out.report.canonical_json().unwrap());
}

#[test]
fn round_sphere_reaches_equality() {
    let text = r#"
[model]
kind = "minkowski"

[surface]
kind = "sphere"
radius = 1.0
level = 4

[analyses]
run = ["stability-stcmc"]
"#;
    let out = pipeline::run(&config(text)).unwrap();
    let Some(AnalysisResult::StabilityStcmc(a)) = out.report.result(AnalysisKind::StabilityStcmc) else { panic!() };
    assert!(a.equality);
    assert!(a.margin.abs() < 0.01 * a.threshold);
}

#[test]
fn missing_model_is_a_validation_error() {
    let text = ALL.replace("[model]\nkind = \"schwarzschild\"\nmass = 1.0\n", "");
    assert!(matches!(AnalysisConfig::from_toml_str(&text), Err(Error::Config(_))));
}

#[test]
fn missing_mesh_file_is_rejected() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("c.toml");
    let text = r#"
[model]
kind = "minkowski"

[surface]
kind = "off"
path = "nowhere.off"

[analyses]
run = ["geometry"]
"#;
    std::fs::write(&path, text).unwrap();
    assert!(matches!(AnalysisConfig::from_file(&path), Err(Error::Config(_))));
}

#[test]
fn failures_are_captured_per_analysis() {
    // r = 1.5 lies inside the horizon.
    let text = ALL.replace("foliation_radii = [10.0, 5.0, 20.0]", "foliation_radii = [1.5]");
    let out = pipeline::run(&config(&text)).unwrap();
    assert!(out.report.failed());
    let failed: Vec<_> = out.report.analyses.iter().filter(|a| a.error.is_some()).map(|a| a.analysis).collect();
    assert_eq!(failed, vec![AnalysisKind::Foliation]);
    assert!(out.report.result(AnalysisKind::Energies).is_some());
}

#[test]
fn emitted_tables_are_plot_ready() {
    let out = pipeline::run(&config(ALL)).unwrap();
    let dir = tempfile::tempdir().unwrap();
    let written = pipeline::emit(&out, &Default::default(), dir.path()).unwrap();
    let names: Vec<String> = written.iter().map(|p| p.file_name().unwrap().to_string_lossy().into_owned()).collect();
    for expected in ["report.json", "spectrum_laplacian.csv", "foliation_leaves.csv", "surface.off"] {
        assert!(names.iter().any(|n| n == expected), "{expected} missing from {names:?}");
    }

    let column = |file: &str, col: usize| -> Vec<f64> {
        let text = std::fs::read_to_string(dir.path().join(file)).unwrap();
        text.lines().skip(1).map(|l| l.split(',').nth(col).unwrap().parse().unwrap()).collect()
    };
    let eig = column("spectrum_laplacian.csv", 1);
    assert!(eig.windows(2).all(|w| w[0] <= w[1]));
    assert!((eig[1] * 4.0 * PI * 100.0 - 8.0 * PI).abs() < 0.05 * 8.0 * PI);
    let sigma = column("foliation_leaves.csv", 0);
    assert_eq!(sigma.len(), 3);
    assert!(sigma.windows(2).all(|w| w[0] < w[1]));

    let text = std::fs::read_to_string(dir.path().join("report.json")).unwrap();
    assert_eq!(Report::from_json(&text).unwrap(), out.report);
}

#[test]
fn unwritable_output_is_an_io_error() {
    let out = pipeline::run(&config(&ALL.replace(
        "run = [\"geometry\", \"spectrum\", \"stability-cmc\", \"stability-stcmc\", \"energies\", \"inequalities\", \"foliation\", \"residuals\"]",
        "run = [\"geometry\"]",
    )))
    .unwrap();
    let file = tempfile::NamedTempFile::new().unwrap();
    let blocked = file.path().join("sub");
    assert!(matches!(pipeline::emit(&out, &Default::default(), &blocked), Err(Error::Io(_))));
}

#[test]
fn every_suite_passes_at_the_default_level() {
    let report = pipeline::run_suite("all", pipeline::defaults::LEVEL, 11, &Default::default()).unwrap();
    let failed: Vec<_> = report.lines.iter().filter(|l| !l.passed).collect();
    assert!(failed.is_empty(), "{failed:#?}");
    assert!(pipeline::run_suite("nope", 3, 11, &Default::default()).is_err());
}
