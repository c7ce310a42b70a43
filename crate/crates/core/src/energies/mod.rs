//! Hawking and round-surface Kijowski–Liu–Yau energies, and the deficit
//! `𝓓 = 16π/|Σ| − |H⃗|²` split into its energy, shear, twist and
//! constant-mode pieces.

use serde::{Deserialize, Serialize};
use std::f64::consts::PI;

use crate::ambient::AmbientModel;
use crate::error::{Error, Result};
use crate::stability::{self, NullFrame};
use crate::surface::InducedGeometry;

/// Largest coefficient of variation of `Sc` accepted as intrinsically round.
pub const ROUNDNESS_TOLERANCE: f64 = 0.05;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DeficitTerms {
    /// `(4/|Σ|)∫Ein(U,U)`.
    pub energy_density_term: f64,
    /// `(2/|Σ|)∫[−θk/(2θℓ)|χ̊ℓ|² − θℓ/(2θk)|χ̊k|²]`.
    pub shear_term: f64,
    /// `(4/|Σ|)∫‖∇log|θℓ| − sℓ‖²`.
    pub twist_term: f64,
    /// `−(2/|Σ|)∫V`.
    pub constant_mode_slack: f64,
}

impl DeficitTerms {
    pub fn sum(&self) -> f64 {
        self.energy_density_term + self.shear_term + self.twist_term + self.constant_mode_slack
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EnergyReport {
    pub hawking: f64,
    pub kly: Option<f64>,
    /// Why `kly` is absent.
    pub kly_note: Option<String>,
    pub deficit: f64,
    pub deficit_terms: DeficitTerms,
    /// `𝓓 − Σ terms`, relative to `16π/|Σ|`.
    pub identity_residual: f64,
    pub area_radius: f64,
    pub regime_warning: Option<String>,
}

/// `√(|Σ|/16π)(1 + (1/16π)∫θℓθk dμ)`.
pub fn hawking_energy(geom: &InducedGeometry) -> f64 {
    let tt = geom.integrate(&geom.theta_product());
    (geom.area / (16.0 * PI)).sqrt() * (1.0 + tt / (16.0 * PI))
}

/// `16π/|Σ| − |H⃗|²` with the area mean of `|H⃗|² = −θℓθk`.
pub fn deficit(geom: &InducedGeometry) -> f64 {
    16.0 * PI / geom.area + geom.mean(&geom.theta_product())
}

/// `(1/8π)∫(H₀ − √(−θℓθk))` with `H₀ = 2/r` of the round reference sphere.
pub fn kly_energy_round(geom: &InducedGeometry) -> Result<f64> {
    let sc = &geom.scalar_curvature;
    let mean = geom.mean(sc);
    let dev: Vec<f64> = sc.iter().map(|s| (s - mean).powi(2)).collect();
    let cv = geom.mean(&dev).sqrt() / mean.abs();
    if !(cv <= ROUNDNESS_TOLERANCE) {
        return Err(Error::Precondition(format!(
            "intrinsic metric is not round (Sc coefficient of variation {cv:.3e}); \
             the reference mean curvature needs an isometric embedding, which is not provided"
        )));
    }
    let tt = geom.theta_product();
    if let Some(i) = tt.iter().position(|t| !(*t < 0.0)) {
        return Err(Error::Precondition(format!(
            "mean curvature vector is not spacelike at vertex {i} (θℓθk = {})",
            tt[i]
        )));
    }
    let h0 = 2.0 / geom.area_radius();
    let integrand: Vec<f64> = tt.iter().map(|t| h0 - (-t).sqrt()).collect();
    Ok(geom.integrate(&integrand) / (8.0 * PI))
}

/// Splits `𝓓` exactly on a genus-0 surface, in the slice null gauge.
/// Returns the terms and the relative identity residual.
pub fn deficit_decomposition(geom: &InducedGeometry, model: &AmbientModel) -> Result<(DeficitTerms, f64)> {
    let frame = NullFrame::slice_gauge(geom);
    let ein = stability::vertex_einstein(geom, model)?;
    let v = stability::stcmc_potential_null(geom, &frame, &ein)?;
    let observer = stability::observer_frame(geom, model, &frame)?;
    let log_l: Vec<f64> = geom.theta_l.iter().map(|t| t.abs().ln()).collect();
    let grad = geom.gradient(&log_l);

    let n = geom.vertex_count();
    let twist: Vec<f64> = (0..n).map(|i| (grad[i] - geom.s_ell[i]).norm_squared()).collect();
    let shear: Vec<f64> = (0..n)
        .map(|i| {
            let (tl, tk) = (geom.theta_l[i], geom.theta_k[i]);
            -tk / (2.0 * tl) * geom.chi_l_tf[i].norm_squared() - tl / (2.0 * tk) * geom.chi_k_tf[i].norm_squared()
        })
        .collect();
    let a = geom.area;
    let terms = DeficitTerms {
        energy_density_term: 4.0 / a * geom.integrate(&observer.ein_uu_null),
        shear_term: 2.0 / a * geom.integrate(&shear),
        twist_term: 4.0 / a * geom.integrate(&twist),
        constant_mode_slack: -2.0 / a * geom.integrate(&v),
    };
    let residual = (deficit(geom) - terms.sum()).abs() / (16.0 * PI / a);
    Ok((terms, residual))
}

pub fn energy_report(geom: &InducedGeometry, model: &AmbientModel, stcmc_tolerance: f64) -> Result<EnergyReport> {
    let (terms, residual) = deficit_decomposition(geom, model)?;
    let (_, cv) = stability::theta_product_spread(geom);
    let (kly, kly_note) = match kly_energy_round(geom) {
        Ok(k) => (Some(k), None),
        Err(e) => (None, Some(e.to_string())),
    };
    Ok(EnergyReport {
        hawking: hawking_energy(geom),
        kly,
        kly_note,
        deficit: deficit(geom),
        deficit_terms: terms,
        identity_residual: residual,
        area_radius: geom.area_radius(),
        regime_warning: (cv > stcmc_tolerance)
            .then(|| format!("θℓθk coefficient of variation {cv:.3e} exceeds {stcmc_tolerance:.1e}")),
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
    fn flat_round_sphere_has_no_energy() {
        let model = AmbientModel::minkowski();
        let geom = sphere(&model, 4, 3.0);
        assert!(hawking_energy(&geom).abs() < 1e-3 * 1.5);
        assert!(kly_energy_round(&geom).unwrap().abs() < 1e-3);
        let (terms, residual) = deficit_decomposition(&geom, &model).unwrap();
        assert!(residual < 1e-10);
        assert!(terms.sum().abs() < 1e-3);
    }

    #[test]
    fn schwarzschild_kly_and_deficit() {
        let model = AmbientModel::schwarzschild(1.0).unwrap();
        let geom = sphere(&model, 4, 10.0);
        let kly = kly_energy_round(&geom).unwrap();
        let exact = 10.0 * (1.0 - 0.8f64.sqrt());
        assert!((kly - exact).abs() < 5e-3 * exact, "{kly} {exact}");
        let (terms, residual) = deficit_decomposition(&geom, &model).unwrap();
        assert!(residual < 1e-10, "{residual}");
        assert!((terms.constant_mode_slack - 0.008).abs() < 1e-2 * 0.008);
        assert!(terms.shear_term.abs() < 1e-8 && terms.twist_term.abs() < 1e-8);
    }

    #[test]
    fn ellipsoid_is_not_round() {
        let model = AmbientModel::minkowski();
        let base = SurfaceMesh::icosphere(3, 1.0, Vector3::zeros()).unwrap();
        let mesh = base
            .radial_graph(|u| 1.0 / (u.x * u.x + u.y * u.y + u.z * u.z / 1.44).sqrt(), Vector3::zeros())
            .unwrap();
        let geom = InducedGeometry::new(&mesh, &model).unwrap();
        assert!(hawking_energy(&geom) < 0.0);
        assert!(matches!(kly_energy_round(&geom), Err(Error::Precondition(_))));
        let (_, residual) = deficit_decomposition(&geom, &model).unwrap();
        assert!(residual < 1e-10);
    }
}
