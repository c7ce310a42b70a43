//! Inequality verdicts, Hersch balancing, the El Soufi–Ilias bound and
//! Gauss-equation residuals.

mod hersch;

pub use hersch::{hersch_balance, mobius, HerschBalance, HerschCertificate, BALANCE_TARGET, MAX_BALANCE_ITERATIONS};

use serde::{Deserialize, Serialize};
use std::f64::consts::PI;

use crate::ambient::{AmbientModel, FrameVector};
use crate::discrete_ops::{OperatorForms, SolverOptions};
use crate::error::{Error, Result};
use crate::surface::InducedGeometry;

/// Relative tolerance for equality flags.
pub const DEFAULT_EQUALITY_TOLERANCE: f64 = 0.01;

/// `lhs ≤ rhs`, graded against `tolerance·scale`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct InequalityVerdict {
    pub name: String,
    pub lhs: f64,
    pub rhs: f64,
    pub slack: f64,
    pub holds: bool,
    pub equality_flag: bool,
    pub tolerance: f64,
    /// Magnitude the tolerance is relative to.
    pub scale: f64,
}

impl InequalityVerdict {
    pub fn new(name: &str, lhs: f64, rhs: f64, tolerance: f64, scale: f64) -> Self {
        let slack = rhs - lhs;
        InequalityVerdict {
            name: name.to_string(),
            lhs,
            rhs,
            slack,
            holds: slack >= -tolerance * scale,
            equality_flag: slack.abs() <= tolerance * scale,
            tolerance,
            scale,
        }
    }
}

/// `H² ≤ 16π/|Σ|`, `H² ≤ 16π/|Σ| − 4Λ/3` and `|H⃗|² ≤ 16π/|Σ|`, with area
/// means of `H²` and `−θℓθk`. Tolerances are relative to
/// `16π/|Σ| + |4Λ/3|`.
pub fn inequality_report(geom: &InducedGeometry, lambda: f64, tolerance: f64) -> Vec<InequalityVerdict> {
    let bound = 16.0 * PI / geom.area;
    let scale = bound + (4.0 * lambda / 3.0).abs();
    let h2: Vec<f64> = geom.mean_curvature.iter().map(|h| h * h).collect();
    let h2 = geom.mean(&h2);
    let hvec2 = -geom.mean(&geom.theta_product());
    vec![
        InequalityVerdict::new("cy", h2, bound, tolerance, scale),
        InequalityVerdict::new("lambda-cy", h2, bound - 4.0 * lambda / 3.0, tolerance, scale),
        InequalityVerdict::new("stcmc", hvec2, bound, tolerance, scale),
    ]
}

/// `λ₂(−Δ + q)|Σ| ≤ 8π + ∫q dμ`, with `λ₂` the second eigenvalue.
pub fn el_soufi_ilias_check(
    geom: &InducedGeometry,
    q: &[f64],
    tolerance: f64,
    solver: &SolverOptions,
) -> Result<InequalityVerdict> {
    let forms = OperatorForms::laplacian(geom)?.with_potential(q.to_vec())?;
    let pairs = forms.generalized_eigs(2, 1.0, solver)?;
    let lhs = pairs[1].value * geom.area;
    let rhs = 8.0 * PI + geom.integrate(q);
    let scale = 8.0 * PI + geom.integrate(&q.iter().map(|x| x.abs()).collect::<Vec<_>>());
    Ok(InequalityVerdict::new("el-soufi-ilias", lhs, rhs, tolerance, scale))
}

/// Pointwise residuals of the Riemannian and spacetime Gauss equations.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GaussResidual {
    /// `Sc^Σ − (Sc^M − 2Ric^M(ν,ν) + ½H² − |B̊|²)` with slice curvature.
    pub riemannian: Vec<f64>,
    /// `Sc^Σ + ½θℓθk − ⟨χ̊ℓ,χ̊k⟩ − (Sc^M + 2Ric^M(k,ℓ) − ½Rm^M(k,ℓ,ℓ,k))`.
    pub spacetime: Vec<f64>,
    /// `∫|·| dμ`.
    pub riemannian_l1: f64,
    pub spacetime_l1: f64,
    /// `∫Sc^Σ dμ − 4πχ(Σ)`.
    pub gauss_bonnet_defect: f64,
}

pub fn gauss_residual(geom: &InducedGeometry, model: &AmbientModel) -> Result<GaussResidual> {
    let n = geom.vertex_count();
    let mut riemannian = Vec::with_capacity(n);
    let mut spacetime = Vec::with_capacity(n);
    for i in 0..n {
        let curv = model.curvature(&geom.mesh.vertices[i])?;
        let nu = geom.normal[i];
        let sc = geom.scalar_curvature[i];
        let h = geom.mean_curvature[i];
        let ric_nn = nu.dot(&(curv.slice.ricci * nu));
        riemannian.push(sc - (curv.slice.scalar - 2.0 * ric_nn + 0.5 * h * h - geom.b_tf[i].norm_squared()));

        let (l, k) = (FrameVector::ell(nu), FrameVector::k(nu));
        let ambient = curv.spacetime_scalar() + 2.0 * curv.spacetime_ricci(&k, &l) - 0.5 * curv.rm_null(&nu);
        let cross = geom.chi_l_tf[i].component_mul(&geom.chi_k_tf[i]).sum();
        spacetime.push(sc + 0.5 * geom.theta_l[i] * geom.theta_k[i] - cross - ambient);
    }
    let l1 = |f: &[f64]| geom.integrate(&f.iter().map(|x| x.abs()).collect::<Vec<_>>());
    let chi = geom.mesh.euler_characteristic() as f64;
    Ok(GaussResidual {
        riemannian_l1: l1(&riemannian),
        spacetime_l1: l1(&spacetime),
        gauss_bonnet_defect: geom.integrate(&geom.scalar_curvature) - 4.0 * PI * chi,
        riemannian,
        spacetime,
    })
}

/// Least-squares slope of `log y` against `log x`.
pub fn log_log_slope(x: &[f64], y: &[f64]) -> Result<f64> {
    if x.len() != y.len() || x.len() < 2 {
        return Err(Error::Input("slope fit needs at least two matching points".into()));
    }
    if x.iter().chain(y).any(|v| !(*v > 0.0)) {
        return Err(Error::Input("slope fit needs positive data".into()));
    }
    let lx: Vec<f64> = x.iter().map(|v| v.ln()).collect();
    let ly: Vec<f64> = y.iter().map(|v| v.ln()).collect();
    let nf = x.len() as f64;
    let (mx, my) = (lx.iter().sum::<f64>() / nf, ly.iter().sum::<f64>() / nf);
    let sxy: f64 = lx.iter().zip(&ly).map(|(a, b)| (a - mx) * (b - my)).sum();
    let sxx: f64 = lx.iter().map(|a| (a - mx).powi(2)).sum();
    Ok(sxy / sxx)
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
    fn unit_sphere_saturates_everything() {
        let geom = sphere(&AmbientModel::minkowski(), 4, 1.0);
        for v in inequality_report(&geom, 0.0, 0.01) {
            assert!(v.holds && v.equality_flag, "{v:?}");
        }
        let es = el_soufi_ilias_check(&geom, &vec![0.0; geom.vertex_count()], 0.01, &SolverOptions::default())
            .unwrap();
        assert!(es.holds && es.equality_flag, "{es:?}");
    }

    #[test]
    fn schwarzschild_cy_slack() {
        let geom = sphere(&AmbientModel::schwarzschild(1.0).unwrap(), 4, 10.0);
        let cy = &inequality_report(&geom, 0.0, 0.01)[0];
        assert!((cy.slack - 0.008).abs() < 1e-2 * 0.008, "{cy:?}");
        assert!(cy.holds && !cy.equality_flag);
    }

    #[test]
    fn schwarzschild_gauss_equations() {
        let model = AmbientModel::schwarzschild(1.0).unwrap();
        let mut l1 = Vec::new();
        for level in 2..=4 {
            let res = gauss_residual(&sphere(&model, level, 10.0), &model).unwrap();
            assert!(res.gauss_bonnet_defect.abs() < 1e-10);
            assert!((res.riemannian_l1 - res.spacetime_l1).abs() < 1e-10);
            l1.push(res.spacetime_l1);
        }
        assert!(l1[1] < 0.5 * l1[0] && l1[2] < 0.5 * l1[1], "{l1:?}");
    }

    #[test]
    fn slope_of_power_law() {
        let x = [1.0, 2.0, 4.0];
        let y: Vec<f64> = x.iter().map(|v: &f64| 3.0 * v.powf(-2.5)).collect();
        assert!((log_log_slope(&x, &y).unwrap() + 2.5).abs() < 1e-12);
    }
}
