//! Named verification suites behind `check --suite`.

use std::f64::consts::PI;

use nalgebra::Vector3;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::ambient::AmbientModel;
use crate::checks;
use crate::discrete_ops::SolverOptions;
use crate::energies;
use crate::error::{Error, Result};
use crate::foliation;
use crate::stability::{self, NullFrame};
use crate::surface::{InducedGeometry, SurfaceMesh};

pub const SUITES: [&str; 11] = [
    "sharpness",
    "schwarzschild",
    "boost",
    "deficit",
    "lambda",
    "el-soufi-ilias",
    "hersch",
    "foliation",
    "null",
    "convergence",
    "lemma",
];

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CheckLine {
    pub suite: String,
    pub name: String,
    pub value: f64,
    pub expected: f64,
    pub tolerance: f64,
    pub passed: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SuiteReport {
    pub level: u32,
    pub seed: u64,
    pub lines: Vec<CheckLine>,
}

impl SuiteReport {
    pub fn passed(&self) -> bool {
        self.lines.iter().all(|l| l.passed)
    }
}

struct Lines<'a> {
    suite: &'a str,
    out: Vec<CheckLine>,
}

impl Lines<'_> {
    /// `|value − expected| ≤ tolerance`.
    fn near(&mut self, name: impl Into<String>, value: f64, expected: f64, tolerance: f64) {
        self.push(name, value, expected, tolerance, (value - expected).abs() <= tolerance);
    }

    /// `value ≥ bound`.
    fn at_least(&mut self, name: impl Into<String>, value: f64, bound: f64) {
        self.push(name, value, bound, 0.0, value >= bound);
    }

    /// `value ≤ bound`.
    fn at_most(&mut self, name: impl Into<String>, value: f64, bound: f64) {
        self.push(name, value, bound, 0.0, value <= bound);
    }

    fn push(&mut self, name: impl Into<String>, value: f64, expected: f64, tolerance: f64, passed: bool) {
        self.out.push(CheckLine {
            suite: self.suite.to_string(),
            name: name.into(),
            value,
            expected,
            tolerance,
            passed,
        });
    }
}

fn sphere(model: &AmbientModel, level: u32, chart_radius: f64) -> Result<InducedGeometry> {
    InducedGeometry::new(&SurfaceMesh::icosphere(level, chart_radius, Vector3::zeros())?, model)
}

fn radial(level: u32, rho: impl Fn(&Vector3<f64>) -> f64, model: &AmbientModel) -> Result<InducedGeometry> {
    let mesh = SurfaceMesh::icosphere(level, 1.0, Vector3::zeros())?.radial_graph(rho, Vector3::zeros())?;
    InducedGeometry::new(&mesh, model)
}

/// Random smooth positive function on the sphere of radius `r`.
fn random_boost(rng: &mut ChaCha8Rng, geom: &InducedGeometry, r: f64) -> Vec<f64> {
    let c: Vec<f64> = (0..6).map(|_| rng.random_range(-0.5..0.5)).collect();
    geom.mesh
        .vertices
        .iter()
        .map(|x| {
            let u = x / r;
            (c[0] + c[1] * u.x + c[2] * u.y + c[3] * u.z + c[4] * u.x * u.y + c[5] * (u.z * u.z - 1.0 / 3.0)).exp()
        })
        .collect()
}

/// Runs one named suite, or all of them for `"all"`.
pub fn run_suite(name: &str, level: u32, seed: u64, solver: &SolverOptions) -> Result<SuiteReport> {
    let names: Vec<&str> = if name == "all" {
        SUITES.to_vec()
    } else if SUITES.contains(&name) {
        vec![name]
    } else {
        return Err(Error::Input(format!("unknown suite `{name}`; expected one of {SUITES:?} or `all`")));
    };
    let mut lines = Vec::new();
    for suite in names {
        let mut l = Lines { suite, out: Vec::new() };
        run_named(suite, level, seed, solver, &mut l)?;
        lines.extend(l.out);
    }
    Ok(SuiteReport { level, seed, lines })
}

fn run_named(suite: &str, level: u32, seed: u64, solver: &SolverOptions, l: &mut Lines) -> Result<()> {
    let flat = AmbientModel::minkowski();
    let schw = AmbientModel::schwarzschild(1.0)?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    match suite {
        "sharpness" => {
            let geom = sphere(&flat, level, 1.0)?;
            let v = stability::stcmc_potential(&geom, &flat)?;
            let a = stability::variational_margin_stcmc(&geom, &v, 1e-3, 0.02, solver)?;
            l.near("variational minimum", a.variational_minimum, 16.0, 0.02 * 16.0);
            l.near("threshold", a.threshold, 16.0, 1e-5 * 16.0);
            l.near("constant mode", a.constant_mode_value, 0.0, 0.02 * 16.0);
        }
        "schwarzschild" => {
            let geom = sphere(&schw, level, 10.0)?;
            l.near("hawking r=10", energies::hawking_energy(&geom), 1.0, 1e-3);
            l.near("deficit r=10", energies::deficit(&geom), 0.008, 0.01 * 0.008);
            for r in [5.0, 10.0, 20.0] {
                let geom = sphere(&schw, level, r)?;
                let v = stability::stcmc_potential(&geom, &schw)?;
                let (value, _) = stability::constant_mode_stcmc(&geom, &v, 1e-3);
                let h2 = 4.0 / (r * r) * (1.0 - 2.0 / r);
                let exact = 16.0 * PI * h2 / r;
                l.near(format!("constant mode r={r}"), value, exact, 0.01 * exact);
            }
        }
        "boost" => {
            let geom = sphere(&schw, level, 10.0)?;
            let base = NullFrame::slice_gauge(&geom);
            let ein = stability::vertex_einstein(&geom, &schw)?;
            let tt0 = base.theta_product();
            let v0 = geom.integrate(&stability::stcmc_potential_null(&geom, &base, &ein)?);
            let (mut worst_tt, mut worst_v) = (0.0f64, 0.0f64);
            for _ in 0..20 {
                let f = random_boost(&mut rng, &geom, 10.0);
                let boosted = stability::boost_transform(&geom, &base, &f)?;
                for (a, b) in boosted.theta_product().iter().zip(&tt0) {
                    worst_tt = worst_tt.max((a - b).abs() / b.abs());
                }
                let v = geom.integrate(&stability::stcmc_potential_null(&geom, &boosted, &ein)?);
                worst_v = worst_v.max((v - v0).abs() / v0.abs());
            }
            l.at_most("theta product relative change", worst_tt, 1e-10);
            l.at_most("integral of V relative change", worst_v, 1e-6);
        }
        "deficit" => {
            let geom = sphere(&schw, level, 10.0)?;
            let (_, residual) = energies::deficit_decomposition(&geom, &schw)?;
            l.at_most("identity residual schwarzschild", residual, 1e-6);
            let geom = radial(level, |u| 1.0 + 0.02 * (u.z * u.z - 1.0 / 3.0), &flat)?;
            let (_, residual) = energies::deficit_decomposition(&geom, &flat)?;
            l.at_most("identity residual near-round", residual, 1e-6);
        }
        "lambda" => {
            let hyp = AmbientModel::hyperbolic(-1.0)?;
            let geom = sphere(&hyp, level, hyp.chart_radius_for_geodesic(1.0)?)?;
            let v = &checks::inequality_report(&geom, -3.0, 0.01)[1];
            l.near("hyperbolic sphere H²", v.lhs, v.rhs, 0.01 * v.scale);
            let sph = AmbientModel::spherical(1.0)?;
            let geom = sphere(&sph, level, sph.chart_radius_for_geodesic(PI / 2.0)?)?;
            let v = &checks::inequality_report(&geom, 3.0, 0.01)[1];
            l.near("equator H²", v.lhs, v.rhs, 0.01 * v.scale);
        }
        "el-soufi-ilias" => {
            let geom = sphere(&flat, level, 1.0)?;
            let v = checks::el_soufi_ilias_check(&geom, &vec![0.0; geom.vertex_count()], 0.01, solver)?;
            l.near("unit sphere λ₂|Σ|", v.lhs, v.rhs, 0.01 * v.rhs);
            let mut worst = f64::INFINITY;
            for _ in 0..50 {
                let c: Vec<f64> = (0..4).map(|_| rng.random_range(-0.15..0.15)).collect();
                let geom = radial(
                    level.min(3),
                    |u| 1.0 + c[0] * u.x + c[1] * u.y * u.z + c[2] * (u.z * u.z - 1.0 / 3.0) + c[3] * u.x * u.y * u.z,
                    &flat,
                )?;
                let v = checks::el_soufi_ilias_check(&geom, &vec![0.0; geom.vertex_count()], 0.01, solver)?;
                worst = worst.min(v.slack / v.rhs);
            }
            l.at_least("worst relative slack over 50 radial graphs", worst, 0.0);
        }
        "hersch" => {
            let geom = radial(level, |u| 1.0 + 0.1 * u.z, &flat)?;
            let h = checks::hersch_balance(&geom)?.certificate;
            l.at_most("balanced center", h.center_norm, 1e-8 * geom.area);
            l.near("conformal energy", h.dirichlet_energy, 8.0 * PI, 0.02 * 8.0 * PI);
        }
        "foliation" => {
            let sigmas = [50.0, 100.0, 200.0, 400.0, 800.0];
            let rel = foliation::area_radius_relation_check(&schw, &sigmas)?;
            l.at_least("decay exponent", rel.decay_exponent.unwrap_or(f64::NAN), 3.9);
            let worst = rel.hawking.iter().map(|e| (e - 1.0).abs()).fold(0.0, f64::max);
            l.at_most("leaf hawking deviation from m", worst, 1e-6);
        }
        "null" => {
            for (s, m) in [(100.0, 1.0), (200.0, 1.0), (100.0, 0.0)] {
                let margin = foliation::null_leaf_margin(s, m)?.margin;
                l.near(format!("margin σ={s} m={m}"), margin, 2.0 * m / (s * s * s), 0.0);
            }
        }
        "convergence" => {
            for (label, model, r) in [("flat", &flat, 1.0), ("schwarzschild", &schw, 10.0)] {
                let mut hs = Vec::new();
                let mut l1 = Vec::new();
                for lev in 3..=level.max(4) {
                    let geom = sphere(model, lev, r)?;
                    let res = checks::gauss_residual(&geom, model)?;
                    l.near(format!("{label} Gauss-Bonnet level {lev}"), res.gauss_bonnet_defect, 0.0, 1e-9);
                    hs.push(2f64.powi(-(lev as i32)));
                    l1.push(res.spacetime_l1.max(res.riemannian_l1).max(1e-300));
                }
                l.at_least(format!("{label} residual order"), checks::log_log_slope(&hs, &l1)?, 1.0);
            }
        }
        "lemma" => {
            let cases: Vec<(AmbientModel, InducedGeometry)> = vec![
                (flat.clone(), sphere(&flat, level.min(4), 1.0)?),
                (schw.clone(), sphere(&schw, level.min(4), 5.0)?),
                (schw.clone(), sphere(&schw, level.min(4), 20.0)?),
                (flat.clone(), radial(level.min(4), |u| 1.0 + 0.05 * u.z * u.z, &flat)?),
            ];
            for (i, (model, geom)) in cases.iter().enumerate() {
                let v = stability::stcmc_potential(geom, model)?;
                let a = stability::variational_margin_stcmc(geom, &v, 1e-3, 0.01, solver)?;
                if a.margin >= 0.0 {
                    let tol = 0.01 * a.threshold.abs() * geom.area;
                    l.at_least(format!("case {i} constant mode"), a.constant_mode_value, -tol);
                }
            }
        }
        _ => unreachable!("suite names are checked by the caller"),
    }
    Ok(())
}
