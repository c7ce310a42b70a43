//! Second variation of area: the STCMC operator `𝓛 = θℓθk(2Δ + V)` and
//! the CMC Jacobi form, with constant-mode and variational verdicts.

mod frame;

pub use frame::{
    boost_transform, observer_frame, require_spacelike, stcmc_potential, stcmc_potential_null, vertex_einstein,
    NullFrame, ObserverFrame,
};

use serde::{Deserialize, Serialize};
use std::f64::consts::PI;

use crate::ambient::AmbientModel;
use crate::discrete_ops::{OperatorForms, SolverOptions};
use crate::error::Result;
use crate::surface::InducedGeometry;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum StabilityKind {
    Cmc,
    Stcmc,
}

/// Outcome of a stability analysis.
///
/// STCMC: `constant_mode_value = δ²_{H⃗}|Σ|`, `variational_minimum` is the
/// mean-zero infimum of `∫α𝓛α / ∫α²` and `threshold = (16π/|Σ|)|H⃗|²`.
///
/// CMC: `constant_mode_value = δ²_ν|Σ|`, `threshold = −(½H² + ⅔Λ)|Σ|` bounds
/// the constant mode, and `variational_minimum` is the mean-zero infimum of
/// the Jacobi form (weak stability when nonnegative).
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct StabilityAssessment {
    pub kind: StabilityKind,
    pub constant_mode_value: f64,
    pub variational_minimum: f64,
    pub threshold: f64,
    pub margin: f64,
    pub constant_mode_stable: bool,
    pub variationally_stable: bool,
    /// `|margin| ≤ tolerance·|threshold|`.
    pub equality: bool,
    pub tolerance: f64,
    /// Area mean and coefficient of variation of `θℓθk`.
    pub theta_product_mean: Option<f64>,
    pub theta_product_cv: Option<f64>,
    pub regime_warning: Option<String>,
    /// `∫(|B|² + Ric(ν,ν))`, bounded by 8π on weakly stable CMC spheres.
    pub hersch_integral: Option<f64>,
}

/// Area mean and coefficient of variation of `θℓθk`.
pub fn theta_product_spread(geom: &InducedGeometry) -> (f64, f64) {
    let tt = geom.theta_product();
    let mean = geom.mean(&tt);
    let dev: Vec<f64> = tt.iter().map(|t| (t - mean).powi(2)).collect();
    (mean, geom.mean(&dev).sqrt() / mean.abs())
}

fn regime_warning(cv: f64, stcmc_tolerance: f64) -> Option<String> {
    (cv > stcmc_tolerance).then(|| {
        format!("θℓθk varies with coefficient of variation {cv:.3e} > {stcmc_tolerance:.1e}; not STCMC")
    })
}

/// `δ²_{H⃗}|Σ| = θℓθk ∫V dμ`, with the area mean of `θℓθk`.
pub fn constant_mode_stcmc(geom: &InducedGeometry, v: &[f64], stcmc_tolerance: f64) -> (f64, Option<String>) {
    let (mean, cv) = theta_product_spread(geom);
    (mean * geom.integrate(v), regime_warning(cv, stcmc_tolerance))
}

/// Forms of `2∫|∇α|² − ∫Vα²`; `𝓛` is `−θℓθk` times this.
pub fn stcmc_forms(geom: &InducedGeometry, v: &[f64]) -> Result<OperatorForms> {
    OperatorForms::laplacian(geom)?.with_potential(v.iter().map(|x| -x).collect())
}

pub const STCMC_WEIGHT: f64 = 2.0;

pub fn variational_margin_stcmc(
    geom: &InducedGeometry,
    v: &[f64],
    stcmc_tolerance: f64,
    equality_tolerance: f64,
    solver: &SolverOptions,
) -> Result<StabilityAssessment> {
    require_spacelike(geom)?;
    let (mean, cv) = theta_product_spread(geom);
    let forms = stcmc_forms(geom, v)?;
    let lambda = forms.mean_zero_minimum(STCMC_WEIGHT, solver)?.value;
    let variational_minimum = -mean * lambda;
    let threshold = 16.0 * PI / geom.area * -mean;
    let constant_mode_value = mean * geom.integrate(v);
    let margin = variational_minimum - threshold;
    Ok(StabilityAssessment {
        kind: StabilityKind::Stcmc,
        constant_mode_value,
        variational_minimum,
        threshold,
        margin,
        constant_mode_stable: constant_mode_value >= 0.0,
        variationally_stable: variational_minimum >= threshold,
        equality: margin.abs() <= equality_tolerance * threshold.abs(),
        tolerance: equality_tolerance,
        theta_product_mean: Some(mean),
        theta_product_cv: Some(cv),
        regime_warning: regime_warning(cv, stcmc_tolerance),
        hersch_integral: None,
    })
}

/// `|B|² + Ric(ν,ν)` per vertex, with the Riemannian slice curvature.
pub fn jacobi_potential(geom: &InducedGeometry, model: &AmbientModel) -> Result<Vec<f64>> {
    let b2 = geom.b_norm2();
    (0..geom.vertex_count())
        .map(|i| {
            let jet = model.sample(&geom.mesh.vertices[i])?;
            let curv = crate::ambient::SliceCurvature::new(&jet);
            let nu = geom.normal[i];
            Ok(b2[i] + nu.dot(&(curv.ricci * nu)))
        })
        .collect()
}

/// CMC Jacobi analysis in the slice; `K` is ignored.
pub fn cmc_jacobi_margin(
    geom: &InducedGeometry,
    model: &AmbientModel,
    lambda: f64,
    equality_tolerance: f64,
    solver: &SolverOptions,
) -> Result<StabilityAssessment> {
    let q = jacobi_potential(geom, model)?;
    let hersch = geom.integrate(&q);
    let h2: Vec<f64> = geom.mean_curvature.iter().map(|h| h * h).collect();
    let threshold = -(0.5 * geom.mean(&h2) + 2.0 / 3.0 * lambda) * geom.area;
    let constant_mode_value = -hersch;
    let forms = OperatorForms::laplacian(geom)?.with_potential(q.iter().map(|x| -x).collect())?;
    let variational_minimum = forms.mean_zero_minimum(1.0, solver)?.value;
    let margin = constant_mode_value - threshold;
    Ok(StabilityAssessment {
        kind: StabilityKind::Cmc,
        constant_mode_value,
        variational_minimum,
        threshold,
        margin,
        constant_mode_stable: constant_mode_value >= 0.0,
        variationally_stable: variational_minimum >= 0.0,
        equality: margin.abs() <= equality_tolerance * threshold.abs(),
        tolerance: equality_tolerance,
        theta_product_mean: None,
        theta_product_cv: None,
        regime_warning: None,
        hersch_integral: Some(hersch),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::surface::SurfaceMesh;
    use nalgebra::Vector3;

    fn sphere(model: &AmbientModel, level: u32, r: f64) -> InducedGeometry {
        let mesh = SurfaceMesh::icosphere(level, r, Vector3::zeros()).unwrap();
        InducedGeometry::new(&mesh, model).unwrap()
    }

    #[test]
    fn schwarzschild_potential_is_constant() {
        let model = AmbientModel::schwarzschild(1.0).unwrap();
        let geom = sphere(&model, 4, 10.0);
        let v = stcmc_potential(&geom, &model).unwrap();
        let mean = geom.mean(&v);
        assert!((mean + 0.004).abs() < 0.01 * 0.004, "{mean}");
        let frame = NullFrame::slice_gauge(&geom);
        let ein = vertex_einstein(&geom, &model).unwrap();
        let w = stcmc_potential_null(&geom, &frame, &ein).unwrap();
        for (a, b) in v.iter().zip(&w) {
            assert!((a - b).abs() < 1e-12);
        }
    }

    #[test]
    fn flat_sphere_is_sharp() {
        let model = AmbientModel::minkowski();
        let geom = sphere(&model, 4, 1.0);
        let v = stcmc_potential(&geom, &model).unwrap();
        let a = variational_margin_stcmc(&geom, &v, 1e-3, 0.01, &SolverOptions::default()).unwrap();
        assert!((a.threshold - 16.0).abs() < 1e-4);
        assert!((a.variational_minimum - 16.0).abs() < 0.32);
        assert!(a.equality);
        assert!(a.constant_mode_value.abs() < 0.32);
    }

    #[test]
    fn null_surfaces_are_rejected() {
        let geom_model = AmbientModel::minkowski();
        let mut geom = sphere(&geom_model, 2, 1.0);
        geom.theta_k.iter_mut().for_each(|t| *t = 0.0);
        assert!(matches!(require_spacelike(&geom), Err(crate::Error::Regime { .. })));
    }

    #[test]
    fn cosmological_observer_sees_lambda() {
        let model = AmbientModel::cosmological(3.0).unwrap();
        let r = model.chart_radius_for_geodesic(0.5).unwrap();
        let geom = sphere(&model, 2, r);
        let frame = NullFrame::slice_gauge(&geom);
        let obs = observer_frame(&geom, &model, &frame).unwrap();
        for i in 0..geom.vertex_count() {
            assert!((obs.ein_uu[i] - 3.0).abs() < 1e-10);
            assert!((obs.ein_uu_null[i] - 3.0).abs() < 1e-10);
            assert!((obs.norm()[i] + 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn unit_sphere_jacobi_equality() {
        let model = AmbientModel::minkowski();
        let geom = sphere(&model, 4, 1.0);
        let a = cmc_jacobi_margin(&geom, &model, 0.0, 0.01, &SolverOptions::default()).unwrap();
        assert!((a.constant_mode_value + 8.0 * PI).abs() < 0.01 * 8.0 * PI);
        assert!((a.threshold + 8.0 * PI).abs() < 0.01 * 8.0 * PI);
        assert!(a.equality);
        assert!(a.variational_minimum.abs() < 0.02);
    }

    /// With `K = 0` the potential is `2(|B|² + Ric(ν,ν)) − H² + 2|∇log H|²`,
    /// so `𝓛 = 2H²L_Jac + H⁴` on CMC surfaces. Equal up to the discrete Gauss
    /// residual, which converges.
    #[test]
    fn time_symmetric_reduction_to_jacobi() {
        let model = AmbientModel::schwarzschild(1.0).unwrap();
        let mut errors = Vec::new();
        for level in 3..=5 {
            let mesh = SurfaceMesh::icosphere(level, 1.0, Vector3::zeros())
                .unwrap()
                .radial_graph(|u| 8.0 * (1.0 + 0.1 * u.z * u.z), Vector3::zeros())
                .unwrap();
            let geom = InducedGeometry::new(&mesh, &model).unwrap();
            let v = stcmc_potential(&geom, &model).unwrap();
            let q = jacobi_potential(&geom, &model).unwrap();
            let log_h: Vec<f64> = geom.mean_curvature.iter().map(|h| h.ln()).collect();
            let grad = geom.gradient(&log_h);
            let diff: Vec<f64> = (0..geom.vertex_count())
                .map(|i| {
                    let h = geom.mean_curvature[i];
                    (v[i] - (2.0 * q[i] - h * h + 2.0 * grad[i].norm_squared())).abs()
                })
                .collect();
            let scale: Vec<f64> = geom.mean_curvature.iter().map(|h| h * h).collect();
            errors.push(geom.integrate(&diff) / geom.integrate(&scale));
        }
        assert!(errors[2] < 2e-3, "{errors:?}");
        assert!(errors[0] / errors[2] > 8.0, "{errors:?}");
    }
}
