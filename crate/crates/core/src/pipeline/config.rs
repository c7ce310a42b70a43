use std::path::{Path, PathBuf};

use nalgebra::Vector3;
use serde::{Deserialize, Serialize};

use crate::ambient::{AmbientModel, CustomData, EinsteinPolicy, ScalarField};
use crate::discrete_ops::SolverOptions;
use crate::error::{Error, Result};
use crate::surface::SurfaceMesh;

/// Every default in one place.
pub mod defaults {
    pub const LEVEL: u32 = 5;
    pub const EIGEN_TOLERANCE: f64 = 1e-9;
    pub const MAX_ITERATIONS: usize = 5000;
    pub const SEED: u64 = 0x5eed;
    pub const DENSE_LIMIT: usize = 600;
    pub const STCMC_TOLERANCE: f64 = 1e-3;
    pub const EQUALITY_TOLERANCE: f64 = 0.01;
    pub const SPECTRUM_COUNT: usize = 10;
    pub const FOLIATION_SIGMAS: [f64; 5] = [50.0, 100.0, 200.0, 400.0, 800.0];
    pub const FOLIATION_RADII: [f64; 4] = [5.0, 10.0, 20.0, 40.0];
    pub const OUTPUT_DIR: &str = "stcmc-out";
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ModelKindConfig {
    Minkowski,
    Schwarzschild,
    Hyperbolic,
    Spherical,
    Cosmological,
    Custom,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum EinsteinConfig {
    Vacuum,
    Lambda(f64),
    /// Isotropic spatial stress field.
    Pressure(String),
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ModelConfig {
    pub kind: ModelKindConfig,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub mass: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub curvature: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub lambda: Option<f64>,
    /// Conformal factor of `g = φ⁴δ`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub phi: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub k_scale: Option<f64>,
    /// `K₀` components xx, xy, xz, yy, yz, zz.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub k_extra: Option<[String; 6]>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub einstein: Option<EinsteinConfig>,
}

fn need(value: Option<f64>, key: &str, kind: &str) -> Result<f64> {
    value.ok_or_else(|| Error::Config(format!("model kind `{kind}` needs `{key}`")))
}

impl ModelConfig {
    pub fn build(&self) -> Result<AmbientModel> {
        use ModelKindConfig::*;
        match self.kind {
            Minkowski => Ok(AmbientModel::minkowski()),
            Schwarzschild => AmbientModel::schwarzschild(need(self.mass, "mass", "schwarzschild")?),
            Hyperbolic => AmbientModel::hyperbolic(need(self.curvature, "curvature", "hyperbolic")?),
            Spherical => AmbientModel::spherical(need(self.curvature, "curvature", "spherical")?),
            Cosmological => AmbientModel::cosmological(need(self.lambda, "lambda", "cosmological")?),
            Custom => {
                let phi = self
                    .phi
                    .as_deref()
                    .ok_or_else(|| Error::Config("model kind `custom` needs `phi`".into()))?;
                let k_extra = match &self.k_extra {
                    None => None,
                    Some(c) => {
                        let fields: Vec<ScalarField> = c.iter().map(|s| ScalarField::parse(s)).collect::<Result<_>>()?;
                        let arr: [ScalarField; 6] = fields.try_into().expect("six components");
                        Some(Box::new(arr))
                    }
                };
                let einstein = match &self.einstein {
                    None => None,
                    Some(EinsteinConfig::Vacuum) => Some(EinsteinPolicy::AssumeVacuum),
                    Some(EinsteinConfig::Lambda(l)) => Some(EinsteinPolicy::ConstantLambda(*l)),
                    Some(EinsteinConfig::Pressure(p)) => Some(EinsteinPolicy::Explicit(ScalarField::parse(p)?)),
                };
                Ok(AmbientModel::custom(CustomData {
                    phi: ScalarField::parse(phi)?,
                    k_scale: self.k_scale.unwrap_or(0.0),
                    k_extra,
                    einstein,
                }))
            }
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum SurfaceKind {
    Sphere,
    Ellipsoid,
    RadialGraph,
    Off,
}

/// How a sphere's `radius` is read.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Placement {
    #[default]
    Chart,
    Areal,
    Geodesic,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SurfaceConfig {
    pub kind: SurfaceKind,
    #[serde(default = "default_level")]
    pub level: u32,
    #[serde(default)]
    pub center: [f64; 3],
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub radius: Option<f64>,
    #[serde(default)]
    pub placement: Placement,
    /// Ellipsoid semi-axes.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub axes: Option<[f64; 3]>,
    /// Radial function of the unit direction `(x, y, z)`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub rho: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub path: Option<PathBuf>,
}

fn default_level() -> u32 {
    defaults::LEVEL
}

impl SurfaceConfig {
    pub fn build(&self, model: &AmbientModel, base_dir: &Path) -> Result<SurfaceMesh> {
        let center = Vector3::from(self.center);
        match self.kind {
            SurfaceKind::Sphere => {
                let r = self
                    .radius
                    .ok_or_else(|| Error::Config("surface kind `sphere` needs `radius`".into()))?;
                let chart = match self.placement {
                    Placement::Chart => r,
                    Placement::Areal => model.chart_radius_for_areal(r)?,
                    Placement::Geodesic => model.chart_radius_for_geodesic(r)?,
                };
                SurfaceMesh::icosphere(self.level, chart, center)
            }
            SurfaceKind::Ellipsoid => {
                let [a, b, c] = self
                    .axes
                    .ok_or_else(|| Error::Config("surface kind `ellipsoid` needs `axes`".into()))?;
                let base = SurfaceMesh::icosphere(self.level, 1.0, Vector3::zeros())?;
                base.radial_graph(
                    |u| 1.0 / ((u.x / a).powi(2) + (u.y / b).powi(2) + (u.z / c).powi(2)).sqrt(),
                    center,
                )
            }
            SurfaceKind::RadialGraph => {
                let rho = self
                    .rho
                    .as_deref()
                    .ok_or_else(|| Error::Config("surface kind `radial-graph` needs `rho`".into()))?;
                let field = ScalarField::parse(rho)?;
                SurfaceMesh::icosphere(self.level, 1.0, Vector3::zeros())?.radial_graph(|u| field.value(u), center)
            }
            SurfaceKind::Off => {
                let path = self
                    .path
                    .as_ref()
                    .ok_or_else(|| Error::Config("surface kind `off` needs `path`".into()))?;
                SurfaceMesh::read_off(base_dir.join(path))
            }
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SolverConfig {
    pub tolerance: f64,
    pub max_iterations: usize,
    pub seed: u64,
    pub dense_limit: usize,
    /// Coefficient of variation of `θℓθk` accepted as STCMC.
    pub stcmc_tolerance: f64,
    /// Relative tolerance of equality flags.
    pub equality_tolerance: f64,
}

impl Default for SolverConfig {
    fn default() -> Self {
        SolverConfig {
            tolerance: defaults::EIGEN_TOLERANCE,
            max_iterations: defaults::MAX_ITERATIONS,
            seed: defaults::SEED,
            dense_limit: defaults::DENSE_LIMIT,
            stcmc_tolerance: defaults::STCMC_TOLERANCE,
            equality_tolerance: defaults::EQUALITY_TOLERANCE,
        }
    }
}

impl SolverConfig {
    pub fn options(&self) -> SolverOptions {
        SolverOptions {
            tolerance: self.tolerance,
            max_iterations: self.max_iterations,
            seed: self.seed,
            dense_limit: self.dense_limit,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum AnalysisKind {
    Geometry,
    Spectrum,
    StabilityCmc,
    StabilityStcmc,
    Energies,
    Inequalities,
    Foliation,
    Residuals,
}

impl AnalysisKind {
    pub const ALL: [AnalysisKind; 8] = [
        AnalysisKind::Geometry,
        AnalysisKind::Spectrum,
        AnalysisKind::StabilityCmc,
        AnalysisKind::StabilityStcmc,
        AnalysisKind::Energies,
        AnalysisKind::Inequalities,
        AnalysisKind::Foliation,
        AnalysisKind::Residuals,
    ];

    pub fn name(self) -> &'static str {
        match self {
            AnalysisKind::Geometry => "geometry",
            AnalysisKind::Spectrum => "spectrum",
            AnalysisKind::StabilityCmc => "stability-cmc",
            AnalysisKind::StabilityStcmc => "stability-stcmc",
            AnalysisKind::Energies => "energies",
            AnalysisKind::Inequalities => "inequalities",
            AnalysisKind::Foliation => "foliation",
            AnalysisKind::Residuals => "residuals",
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AnalysesConfig {
    pub run: Vec<AnalysisKind>,
    #[serde(default = "default_spectrum_count")]
    pub spectrum_count: usize,
    #[serde(default = "default_sigmas")]
    pub foliation_sigmas: Vec<f64>,
    /// Areal radii of the leaves in the stability table.
    #[serde(default = "default_radii")]
    pub foliation_radii: Vec<f64>,
}

fn default_spectrum_count() -> usize {
    defaults::SPECTRUM_COUNT
}

fn default_sigmas() -> Vec<f64> {
    defaults::FOLIATION_SIGMAS.to_vec()
}

fn default_radii() -> Vec<f64> {
    defaults::FOLIATION_RADII.to_vec()
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct OutputConfig {
    pub dir: PathBuf,
    pub json: bool,
    pub csv: bool,
    pub off: bool,
}

impl Default for OutputConfig {
    fn default() -> Self {
        OutputConfig {
            dir: PathBuf::from(defaults::OUTPUT_DIR),
            json: true,
            csv: true,
            off: true,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AnalysisConfig {
    /// Λ for the CMC and `Λ`-Christodoulou–Yau analyses; defaults to the
    /// model's own constant.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub lambda: Option<f64>,
    pub model: ModelConfig,
    pub surface: SurfaceConfig,
    #[serde(default)]
    pub solver: SolverConfig,
    pub analyses: AnalysesConfig,
    #[serde(default)]
    pub output: OutputConfig,
    /// Directory relative paths resolve against; not serialized.
    #[serde(skip)]
    pub base_dir: PathBuf,
}

impl AnalysisConfig {
    pub fn from_toml_str(text: &str) -> Result<Self> {
        let config: AnalysisConfig = toml::from_str(text).map_err(|e| Error::Config(e.to_string()))?;
        config.validate()?;
        Ok(config)
    }

    pub fn from_file(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path)?;
        let mut config = Self::from_toml_str(&text)?;
        config.base_dir = path.parent().map(Path::to_path_buf).unwrap_or_default();
        if let (SurfaceKind::Off, Some(p)) = (config.surface.kind, &config.surface.path) {
            let full = config.base_dir.join(p);
            if !full.is_file() {
                return Err(Error::Config(format!("mesh file {} does not exist", full.display())));
            }
        }
        Ok(config)
    }

    pub fn to_toml_string(&self) -> Result<String> {
        toml::to_string(self).map_err(|e| Error::Config(e.to_string()))
    }

    pub fn validate(&self) -> Result<()> {
        if self.analyses.run.is_empty() {
            return Err(Error::Config("at least one analysis must be requested".into()));
        }
        if self.surface.level > crate::surface::MAX_LEVEL {
            return Err(Error::Config(format!(
                "level {} exceeds the limit {}",
                self.surface.level,
                crate::surface::MAX_LEVEL
            )));
        }
        let s = &self.solver;
        if !(s.tolerance > 0.0 && s.stcmc_tolerance > 0.0 && s.equality_tolerance > 0.0) {
            return Err(Error::Config("solver tolerances must be positive".into()));
        }
        if self.analyses.spectrum_count == 0 {
            return Err(Error::Config("spectrum_count must be positive".into()));
        }
        Ok(())
    }

    /// Λ used by the analyses.
    pub fn effective_lambda(&self, model: &AmbientModel) -> f64 {
        self.lambda.or_else(|| model.lambda()).unwrap_or(0.0)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const SAMPLE: &str = r#"
lambda = 0.0

[model]
kind = "schwarzschild"
mass = 1.0

[surface]
kind = "sphere"
radius = 10.0
placement = "areal"
level = 3

[analyses]
run = ["geometry", "energies"]
"#;

    #[test]
    fn parses_and_echoes() {
        let c = AnalysisConfig::from_toml_str(SAMPLE).unwrap();
        assert_eq!(c.surface.level, 3);
        assert_eq!(c.solver, SolverConfig::default());
        let again = AnalysisConfig::from_toml_str(&c.to_toml_string().unwrap()).unwrap();
        assert_eq!(c, again);
    }

    #[test]
    fn missing_model_is_rejected() {
        let text = SAMPLE.replace("[model]\nkind = \"schwarzschild\"\nmass = 1.0\n", "");
        assert!(matches!(AnalysisConfig::from_toml_str(&text), Err(Error::Config(_))));
        let typo = SAMPLE.replace("mass = 1.0", "mas = 1.0");
        assert!(AnalysisConfig::from_toml_str(&typo).is_err());
    }

    #[test]
    fn empty_analysis_list_is_rejected() {
        let text = SAMPLE.replace("run = [\"geometry\", \"energies\"]", "run = []");
        assert!(AnalysisConfig::from_toml_str(&text).is_err());
    }
}
