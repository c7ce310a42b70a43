//! Config-driven runs: build the model and surface, execute the requested
//! analyses in order, and write the report, CSV tables and meshes.

mod config;
mod suites;

pub use config::*;
pub use suites::{run_suite, CheckLine, SuiteReport, SUITES};

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};
use std::time::Instant;

use serde::{Deserialize, Serialize};

use crate::ambient::{AmbientModel, ModelKind};
use crate::checks::{self, GaussResidual, HerschCertificate, InequalityVerdict};
use crate::discrete_ops::{spectrum_csv, OperatorForms};
use crate::energies::{self, EnergyReport};
use crate::error::{Error, Result};
use crate::foliation::{self, FoliationLeafRecord, NullLeafMargin, RelationCheck};
use crate::stability::{self, StabilityAssessment};
use crate::surface::{fields_csv, InducedGeometry, SurfaceMesh};

pub const SCHEMA_VERSION: &str = "1.0.0";

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Provenance {
    pub artifact_version: String,
    pub model: String,
    pub lambda: f64,
    pub level: Option<u32>,
    pub vertices: Option<usize>,
    pub faces: Option<usize>,
    pub eigen_tolerance: f64,
    pub stcmc_tolerance: f64,
    pub equality_tolerance: f64,
    pub seed: u64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GeometrySummary {
    pub vertices: usize,
    pub faces: usize,
    pub area: f64,
    pub area_radius: f64,
    pub mean_curvature_min: f64,
    pub mean_curvature_max: f64,
    pub mean_curvature_mean: f64,
    pub trace_k_mean: f64,
    pub theta_product_mean: f64,
    pub theta_product_cv: f64,
    pub scalar_curvature_integral: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SpectrumResult {
    /// Eigenvalues of `−Δ` in the induced metric, ascending.
    pub laplacian: Vec<f64>,
    /// Mean-zero minimum of `2Δ`-weighted `𝓛/(−θℓθk)`, when `H⃗` is spacelike.
    pub stcmc_mean_zero_minimum: Option<f64>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct InequalityResult {
    pub verdicts: Vec<InequalityVerdict>,
    pub el_soufi_ilias: InequalityVerdict,
    pub hersch: Option<HerschCertificate>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FoliationResult {
    pub relation: RelationCheck,
    pub leaves: Vec<FoliationLeafRecord>,
    pub null_margins: Vec<(f64, NullLeafMargin)>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ResidualSummary {
    pub riemannian_l1: f64,
    pub spacetime_l1: f64,
    pub gauss_bonnet_defect: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum AnalysisResult {
    Geometry(GeometrySummary),
    Spectrum(SpectrumResult),
    StabilityCmc(StabilityAssessment),
    StabilityStcmc(StabilityAssessment),
    Energies(EnergyReport),
    Inequalities(InequalityResult),
    Foliation(FoliationResult),
    Residuals(ResidualSummary),
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct AnalysisOutcome {
    pub analysis: AnalysisKind,
    pub level: Option<u32>,
    pub tolerance: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub result: Option<AnalysisResult>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub error: Option<String>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Report {
    pub schema_version: String,
    pub config: AnalysisConfig,
    pub provenance: Provenance,
    pub analyses: Vec<AnalysisOutcome>,
    /// Wall-clock seconds per analysis.
    pub timings: BTreeMap<String, f64>,
}

impl Report {
    pub fn failed(&self) -> bool {
        self.analyses.iter().any(|a| a.error.is_some())
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    /// JSON without timings, for reproducibility comparisons.
    pub fn canonical_json(&self) -> Result<String> {
        let mut copy = self.clone();
        copy.timings.clear();
        copy.to_json()
    }

    pub fn from_json(text: &str) -> Result<Self> {
        Ok(serde_json::from_str(text)?)
    }

    pub fn result(&self, kind: AnalysisKind) -> Option<&AnalysisResult> {
        self.analyses.iter().find(|a| a.analysis == kind).and_then(|a| a.result.as_ref())
    }
}

/// A finished run: the report plus the tables and mesh it refers to.
#[derive(Clone, Debug)]
pub struct RunOutput {
    pub report: Report,
    /// `(file name, CSV text)`, in creation order.
    pub tables: Vec<(String, String)>,
    pub mesh: Option<SurfaceMesh>,
}

struct Context<'a> {
    config: &'a AnalysisConfig,
    model: AmbientModel,
    lambda: f64,
    geometry: Option<std::result::Result<InducedGeometry, String>>,
    mesh: Option<SurfaceMesh>,
}

impl Context<'_> {
    fn geometry(&mut self) -> Result<&InducedGeometry> {
        if self.geometry.is_none() {
            let built = self
                .config
                .surface
                .build(&self.model, &self.config.base_dir)
                .and_then(|mesh| {
                    let geom = InducedGeometry::new(&mesh, &self.model)?;
                    self.mesh = Some(mesh);
                    Ok(geom)
                })
                .map_err(|e| e.to_string());
            self.geometry = Some(built);
        }
        match self.geometry.as_ref().expect("just set") {
            Ok(g) => Ok(g),
            Err(e) => Err(Error::Geometry(format!("surface construction failed: {e}"))),
        }
    }
}

/// Runs every requested analysis; failures are recorded per analysis.
pub fn run(config: &AnalysisConfig) -> Result<RunOutput> {
    config.validate()?;
    let model = config.model.build()?;
    let lambda = config.effective_lambda(&model);
    let mut ctx = Context {
        config,
        model,
        lambda,
        geometry: None,
        mesh: None,
    };
    let mut analyses = Vec::new();
    let mut tables = Vec::new();
    let mut timings = BTreeMap::new();
    for (index, &kind) in config.analyses.run.iter().enumerate() {
        log::info!("running {}", kind.name());
        let start = Instant::now();
        let outcome = run_one(&mut ctx, kind, &mut tables);
        timings.insert(format!("{index:02}-{}", kind.name()), start.elapsed().as_secs_f64());
        let (result, error) = match outcome {
            Ok(r) => (Some(r), None),
            Err(e) => {
                log::warn!("{} failed: {e}", kind.name());
                (None, Some(e.to_string()))
            }
        };
        analyses.push(AnalysisOutcome {
            analysis: kind,
            level: Some(config.surface.level),
            tolerance: tolerance_for(kind, config),
            result,
            error,
        });
    }
    let mesh = ctx.mesh.take();
    let provenance = Provenance {
        artifact_version: env!("CARGO_PKG_VERSION").to_string(),
        model: ctx.model.name().to_string(),
        lambda,
        level: Some(config.surface.level),
        vertices: mesh.as_ref().map(SurfaceMesh::vertex_count),
        faces: mesh.as_ref().map(|m| m.faces.len()),
        eigen_tolerance: config.solver.tolerance,
        stcmc_tolerance: config.solver.stcmc_tolerance,
        equality_tolerance: config.solver.equality_tolerance,
        seed: config.solver.seed,
    };
    Ok(RunOutput {
        report: Report {
            schema_version: SCHEMA_VERSION.to_string(),
            config: config.clone(),
            provenance,
            analyses,
            timings,
        },
        tables,
        mesh,
    })
}

fn tolerance_for(kind: AnalysisKind, config: &AnalysisConfig) -> f64 {
    match kind {
        AnalysisKind::Spectrum => config.solver.tolerance,
        AnalysisKind::Geometry | AnalysisKind::Energies | AnalysisKind::Residuals => config.solver.stcmc_tolerance,
        _ => config.solver.equality_tolerance,
    }
}

fn run_one(ctx: &mut Context, kind: AnalysisKind, tables: &mut Vec<(String, String)>) -> Result<AnalysisResult> {
    let solver = ctx.config.solver.options();
    let stcmc_tol = ctx.config.solver.stcmc_tolerance;
    let eq_tol = ctx.config.solver.equality_tolerance;
    match kind {
        AnalysisKind::Geometry => {
            let geom = ctx.geometry()?;
            let (tt_mean, tt_cv) = stability::theta_product_spread(geom);
            let h = &geom.mean_curvature;
            let summary = GeometrySummary {
                vertices: geom.vertex_count(),
                faces: geom.mesh.faces.len(),
                area: geom.area,
                area_radius: geom.area_radius(),
                mean_curvature_min: h.iter().copied().fold(f64::INFINITY, f64::min),
                mean_curvature_max: h.iter().copied().fold(f64::NEG_INFINITY, f64::max),
                mean_curvature_mean: geom.mean(h),
                trace_k_mean: geom.mean(&geom.p),
                theta_product_mean: tt_mean,
                theta_product_cv: tt_cv,
                scalar_curvature_integral: geom.integrate(&geom.scalar_curvature),
            };
            let tt = geom.theta_product();
            let cols = |k: usize| geom.mesh.vertices.iter().map(|v| v[k]).collect::<Vec<f64>>();
            let (x, y, z) = (cols(0), cols(1), cols(2));
            tables.push((
                "geometry_fields.csv".into(),
                fields_csv(&[
                    ("x", &x),
                    ("y", &y),
                    ("z", &z),
                    ("vertex_area", &geom.vertex_area),
                    ("mean_curvature", h),
                    ("trace_k", &geom.p),
                    ("theta_l", &geom.theta_l),
                    ("theta_k", &geom.theta_k),
                    ("theta_product", &tt),
                    ("scalar_curvature", &geom.scalar_curvature),
                ]),
            ));
            Ok(AnalysisResult::Geometry(summary))
        }
        AnalysisKind::Spectrum => {
            let count = ctx.config.analyses.spectrum_count;
            let model = ctx.model.clone();
            let geom = ctx.geometry()?;
            let forms = OperatorForms::laplacian(geom)?;
            let pairs = forms.generalized_eigs(count.min(geom.vertex_count()), 1.0, &solver)?;
            tables.push(("spectrum_laplacian.csv".into(), spectrum_csv(&pairs)));
            let stcmc = if stability::require_spacelike(geom).is_ok() {
                let v = stability::stcmc_potential(geom, &model)?;
                let forms = stability::stcmc_forms(geom, &v)?;
                let spectrum = forms.generalized_eigs(count.min(geom.vertex_count()), stability::STCMC_WEIGHT, &solver)?;
                tables.push(("spectrum_stcmc.csv".into(), spectrum_csv(&spectrum)));
                Some(forms.mean_zero_minimum(stability::STCMC_WEIGHT, &solver)?.value)
            } else {
                None
            };
            Ok(AnalysisResult::Spectrum(SpectrumResult {
                laplacian: pairs.iter().map(|p| p.value).collect(),
                stcmc_mean_zero_minimum: stcmc,
            }))
        }
        AnalysisKind::StabilityCmc => {
            let lambda = ctx.lambda;
            let model = ctx.model.clone();
            let geom = ctx.geometry()?;
            Ok(AnalysisResult::StabilityCmc(stability::cmc_jacobi_margin(
                geom, &model, lambda, eq_tol, &solver,
            )?))
        }
        AnalysisKind::StabilityStcmc => {
            let model = ctx.model.clone();
            let geom = ctx.geometry()?;
            let v = stability::stcmc_potential(geom, &model)?;
            tables.push(("stcmc_potential.csv".into(), fields_csv(&[("potential", &v)])));
            Ok(AnalysisResult::StabilityStcmc(stability::variational_margin_stcmc(
                geom, &v, stcmc_tol, eq_tol, &solver,
            )?))
        }
        AnalysisKind::Energies => {
            let model = ctx.model.clone();
            let geom = ctx.geometry()?;
            Ok(AnalysisResult::Energies(energies::energy_report(geom, &model, stcmc_tol)?))
        }
        AnalysisKind::Inequalities => {
            let lambda = ctx.lambda;
            let geom = ctx.geometry()?;
            let verdicts = checks::inequality_report(geom, lambda, eq_tol);
            let zero = vec![0.0; geom.vertex_count()];
            let es = checks::el_soufi_ilias_check(geom, &zero, eq_tol, &solver)?;
            let hersch = match checks::hersch_balance(geom) {
                Ok(h) => Some(h.certificate),
                Err(Error::Precondition(msg)) => {
                    log::info!("skipping Hersch balancing: {msg}");
                    None
                }
                Err(e) => return Err(e),
            };
            Ok(AnalysisResult::Inequalities(InequalityResult {
                verdicts,
                el_soufi_ilias: es,
                hersch,
            }))
        }
        AnalysisKind::Foliation => {
            let a = &ctx.config.analyses;
            let relation = foliation::area_radius_relation_check(&ctx.model, &a.foliation_sigmas)?;
            let mut leaves = Vec::new();
            for &r in &a.foliation_radii {
                leaves.push(foliation::leaf_record(
                    &ctx.model,
                    r,
                    ctx.config.surface.level,
                    stcmc_tol,
                    eq_tol,
                    &solver,
                )?);
            }
            leaves.sort_by(|x, y| x.sigma.total_cmp(&y.sigma));
            let mass = match ctx.model.kind {
                ModelKind::Schwarzschild { mass } => mass,
                _ => 0.0,
            };
            let null_margins = a
                .foliation_sigmas
                .iter()
                .map(|&s| foliation::null_leaf_margin(s, mass).map(|m| (s, m)))
                .collect::<Result<Vec<_>>>()?;
            tables.push(("foliation_leaves.csv".into(), foliation::leaf_csv(&leaves)));
            tables.push(("foliation_relation.csv".into(), relation_csv(&relation)));
            tables.push(("null_margins.csv".into(), null_csv(&null_margins)));
            Ok(AnalysisResult::Foliation(FoliationResult {
                relation,
                leaves,
                null_margins,
            }))
        }
        AnalysisKind::Residuals => {
            let model = ctx.model.clone();
            let geom = ctx.geometry()?;
            let GaussResidual {
                riemannian,
                spacetime,
                riemannian_l1,
                spacetime_l1,
                gauss_bonnet_defect,
            } = checks::gauss_residual(geom, &model)?;
            tables.push((
                "gauss_residual.csv".into(),
                fields_csv(&[("riemannian", &riemannian), ("spacetime", &spacetime)]),
            ));
            Ok(AnalysisResult::Residuals(ResidualSummary {
                riemannian_l1,
                spacetime_l1,
                gauss_bonnet_defect,
            }))
        }
    }
}

fn relation_csv(rel: &RelationCheck) -> String {
    let mut out = String::from("sigma,r,hawking,residual\n");
    for i in 0..rel.sigma.len() {
        out.push_str(&format!(
            "{:.17e},{:.17e},{:.17e},{:.17e}\n",
            rel.sigma[i], rel.areal_radius[i], rel.hawking[i], rel.residual[i]
        ));
    }
    out
}

fn null_csv(rows: &[(f64, NullLeafMargin)]) -> String {
    let mut out = String::from("sigma,lhs,threshold,margin\n");
    for (s, m) in rows {
        out.push_str(&format!("{s:.17e},{:.17e},{:.17e},{:.17e}\n", m.lhs, m.threshold, m.margin));
    }
    out
}

/// Writes `report.json`, the CSV tables and `surface.off` under `dir`
/// according to the output switches. Returns the written paths.
pub fn emit(output: &RunOutput, settings: &OutputConfig, dir: &Path) -> Result<Vec<PathBuf>> {
    std::fs::create_dir_all(dir)?;
    let mut written = Vec::new();
    if settings.json {
        let path = dir.join("report.json");
        std::fs::write(&path, output.report.to_json()?)?;
        written.push(path);
    }
    if settings.csv {
        for (name, text) in &output.tables {
            let path = dir.join(name);
            std::fs::write(&path, text)?;
            written.push(path);
        }
    }
    if settings.off {
        if let Some(mesh) = &output.mesh {
            let path = dir.join("surface.off");
            mesh.write_off(&path)?;
            written.push(path);
        }
    }
    Ok(written)
}
