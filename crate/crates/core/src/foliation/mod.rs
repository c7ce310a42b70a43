//! Leaves `H² − P² = 4/σ²` of spherically symmetric data, the
//! area-radius relation `1/r² = 1/σ² + 2𝓔/σ³ + O(σ⁻⁴)`, stability tables
//! along Schwarzschild, and the null-cone leaf expansion.

use nalgebra::Vector3;
use serde::{Deserialize, Serialize};
use std::f64::consts::PI;

use crate::ambient::AmbientModel;
use crate::checks::log_log_slope;
use crate::discrete_ops::SolverOptions;
use crate::error::{Error, Result};
use crate::stability;
use crate::surface::{InducedGeometry, SurfaceMesh};

/// Grid points of the bracket scan.
const SCAN_POINTS: usize = 4000;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FoliationLeafRecord {
    pub sigma: f64,
    pub areal_radius: f64,
    pub hawking: f64,
    pub constant_mode_value: f64,
    pub variational_margin: f64,
    pub relation_residual: f64,
    /// `16πmH²/r` where it applies.
    pub closed_form_constant_mode: Option<f64>,
}

fn leaf_function(model: &AmbientModel, sigma: f64, r: f64) -> Option<f64> {
    model.radial_profile(r).map(|(h, p)| h * h - p * p - 4.0 / (sigma * sigma))
}

/// Areal radius of the outermost leaf with `H² − P² = 4/σ²`.
pub fn solve_stcmc_radius(model: &AmbientModel, sigma: f64) -> Result<f64> {
    if !(sigma > 0.0 && sigma.is_finite()) {
        return Err(Error::Input(format!("σ must be positive, got {sigma}")));
    }
    if model.radial_profile(sigma).is_none() && model.radial_profile(1e-3 * sigma).is_none() {
        return Err(Error::Precondition(format!("{} has no closed-form radial profile", model.name())));
    }
    let (lo, hi) = (1e-6 * sigma, 4.0 * sigma);
    let grid: Vec<f64> = (0..=SCAN_POINTS)
        .map(|k| lo * (hi / lo).powf(k as f64 / SCAN_POINTS as f64))
        .collect();
    let values: Vec<Option<f64>> = grid.iter().map(|&r| leaf_function(model, sigma, r)).collect();
    let mut bracket = None;
    for k in (0..SCAN_POINTS).rev() {
        match (values[k], values[k + 1]) {
            (Some(a), Some(_)) if a == 0.0 => {
                return Ok(grid[k]);
            }
            (Some(a), Some(b)) if a.signum() != b.signum() => {
                bracket = Some((grid[k], grid[k + 1], a));
                break;
            }
            _ => {}
        }
    }
    let (mut a, mut b, fa) = bracket.ok_or_else(|| Error::Existence {
        message: format!("H² − P² never equals 4/σ² for σ = {sigma} in {}", model.name()),
        lo,
        hi,
    })?;
    for _ in 0..200 {
        let mid = 0.5 * (a + b);
        if mid <= a || mid >= b {
            break;
        }
        let fm = leaf_function(model, sigma, mid).expect("profile defined inside a valid bracket");
        if fm == 0.0 {
            return Ok(mid);
        }
        if fm.signum() == fa.signum() {
            a = mid;
        } else {
            b = mid;
        }
    }
    Ok(0.5 * (a + b))
}

/// Hawking energy `(r/2)(1 − r²(H² − P²)/4)` of a centred round leaf.
pub fn leaf_hawking(model: &AmbientModel, areal_radius: f64) -> Result<f64> {
    let (h, p) = model
        .radial_profile(areal_radius)
        .ok_or_else(|| Error::Precondition(format!("no radial profile at r = {areal_radius}")))?;
    Ok(0.5 * areal_radius * (1.0 - areal_radius * areal_radius * (h * h - p * p) / 4.0))
}

/// `|1/r² − 1/σ² − 2𝓔/σ³|`.
pub fn relation_residual(sigma: f64, areal_radius: f64, hawking: f64) -> f64 {
    (1.0 / (areal_radius * areal_radius) - 1.0 / (sigma * sigma) - 2.0 * hawking / sigma.powi(3)).abs()
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RelationCheck {
    pub sigma: Vec<f64>,
    pub areal_radius: Vec<f64>,
    pub hawking: Vec<f64>,
    pub residual: Vec<f64>,
    /// `−d log residual / d log σ`; `None` when every residual vanishes.
    pub decay_exponent: Option<f64>,
}

pub fn area_radius_relation_check(model: &AmbientModel, sigmas: &[f64]) -> Result<RelationCheck> {
    let mut out = RelationCheck {
        sigma: sigmas.to_vec(),
        areal_radius: Vec::new(),
        hawking: Vec::new(),
        residual: Vec::new(),
        decay_exponent: None,
    };
    for &s in sigmas {
        let r = solve_stcmc_radius(model, s)?;
        let e = leaf_hawking(model, r)?;
        out.areal_radius.push(r);
        out.hawking.push(e);
        out.residual.push(relation_residual(s, r, e));
    }
    let scale: f64 = sigmas.iter().map(|s| s.powi(-2)).fold(0.0, f64::max);
    if out.residual.iter().all(|v| *v > 1e-14 * scale) && sigmas.len() >= 2 {
        out.decay_exponent = Some(-log_log_slope(sigmas, &out.residual)?);
    }
    Ok(out)
}

/// The Schwarzschild slice of mass `m`, or Minkowski when `m = 0`.
pub fn schwarzschild_or_flat(m: f64) -> Result<AmbientModel> {
    if m == 0.0 {
        Ok(AmbientModel::minkowski())
    } else {
        AmbientModel::schwarzschild(m)
    }
}

/// Mesh-level stability of the centred sphere of areal radius `r`.
pub fn leaf_record(
    model: &AmbientModel,
    areal_radius: f64,
    level: u32,
    stcmc_tolerance: f64,
    equality_tolerance: f64,
    solver: &SolverOptions,
) -> Result<FoliationLeafRecord> {
    let (h, p) = model
        .radial_profile(areal_radius)
        .filter(|(h, p)| h * h > p * p)
        .ok_or_else(|| Error::Domain {
            model: model.name().into(),
            point: [areal_radius, 0.0, 0.0],
            reason: "no spacelike round leaf at this radius".into(),
        })?;
    let sigma = 2.0 / (h * h - p * p).sqrt();
    let chart = model.chart_radius_for_areal(areal_radius)?;
    let mesh = SurfaceMesh::icosphere(level, chart, Vector3::zeros())?;
    let geom = InducedGeometry::new(&mesh, model)?;
    let v = stability::stcmc_potential(&geom, model)?;
    let assessment = stability::variational_margin_stcmc(&geom, &v, stcmc_tolerance, equality_tolerance, solver)?;
    let hawking = leaf_hawking(model, areal_radius)?;
    let mass = match model.kind {
        crate::ambient::ModelKind::Schwarzschild { mass } => Some(mass),
        crate::ambient::ModelKind::Minkowski => Some(0.0),
        _ => None,
    };
    Ok(FoliationLeafRecord {
        sigma,
        areal_radius,
        hawking,
        constant_mode_value: assessment.constant_mode_value,
        variational_margin: assessment.margin,
        relation_residual: relation_residual(sigma, areal_radius, hawking),
        closed_form_constant_mode: mass.map(|m| 16.0 * PI * m * h * h / areal_radius),
    })
}

/// Leaf records for the centred spheres of areal radii `radii`, ordered by σ.
pub fn schwarzschild_margin_table(
    m: f64,
    radii: &[f64],
    level: u32,
    stcmc_tolerance: f64,
    equality_tolerance: f64,
    solver: &SolverOptions,
) -> Result<Vec<FoliationLeafRecord>> {
    let model = schwarzschild_or_flat(m)?;
    let mut rows = Vec::with_capacity(radii.len());
    for &r in radii {
        if !(r > 2.0 * m) {
            return Err(Error::Domain {
                model: model.name().into(),
                point: [r, 0.0, 0.0],
                reason: format!("areal radius must exceed 2m = {}", 2.0 * m),
            });
        }
        rows.push(leaf_record(&model, r, level, stcmc_tolerance, equality_tolerance, solver)?);
    }
    rows.sort_by(|a, b| a.sigma.total_cmp(&b.sigma));
    Ok(rows)
}

/// CSV with columns `sigma,r,hawking,constant_mode,variational_margin,relation_residual`.
pub fn leaf_csv(rows: &[FoliationLeafRecord]) -> String {
    let mut out = String::from("sigma,r,hawking,constant_mode,variational_margin,relation_residual\n");
    for row in rows {
        out.push_str(&format!(
            "{:.17e},{:.17e},{:.17e},{:.17e},{:.17e},{:.17e}\n",
            row.sigma, row.areal_radius, row.hawking, row.constant_mode_value, row.variational_margin,
            row.relation_residual
        ));
    }
    out
}

/// Truncated leaf expansions of the null foliation of a Schwarzschild cone.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct NullLeafMargin {
    /// `½|H⃗|² + Sc + 6m/σ³` with `|H⃗|² = 4/σ² − 8m/σ³`, `Sc = 2/σ²`.
    pub lhs: f64,
    /// `16π/|Σ|` with `|Σ| = 4πσ²`.
    pub threshold: f64,
    pub margin: f64,
}

pub fn null_leaf_margin(sigma: f64, m: f64) -> Result<NullLeafMargin> {
    if !(sigma > 0.0) || !(m >= 0.0) {
        return Err(Error::Input(format!("need σ > 0 and m ≥ 0, got σ = {sigma}, m = {m}")));
    }
    let (hvec2_0, hvec2_1) = (4.0, -8.0 * m);
    let sc_0 = 2.0;
    let area_factor = 4.0 * PI;
    let threshold_0 = 16.0 * PI / area_factor;
    let lhs_0 = 0.5 * hvec2_0 + sc_0;
    let lhs_1 = 0.5 * hvec2_1 + 6.0 * m;
    let (s2, s3) = (sigma * sigma, sigma.powi(3));
    Ok(NullLeafMargin {
        lhs: lhs_0 / s2 + lhs_1 / s3,
        threshold: threshold_0 / s2,
        margin: (lhs_0 - threshold_0) / s2 + lhs_1 / s3,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn flat_leaves_are_coordinate_spheres() {
        let r = solve_stcmc_radius(&AmbientModel::minkowski(), 5.0).unwrap();
        assert!((r - 5.0).abs() < 1e-11);
    }

    #[test]
    fn schwarzschild_leaf_and_existence() {
        let model = AmbientModel::schwarzschild(1.0).unwrap();
        let r = solve_stcmc_radius(&model, 100.0).unwrap();
        assert!((1.0 / (r * r) - 2.0 / r.powi(3) - 1e-4).abs() < 1e-16);
        assert!(r > 3.0 && r < 100.0);
        assert!((leaf_hawking(&model, r).unwrap() - 1.0).abs() < 1e-9);
        assert!(matches!(solve_stcmc_radius(&model, 5.0), Err(Error::Existence { .. })));
        assert!(solve_stcmc_radius(&model, 27f64.sqrt() + 1e-3).is_ok());
    }

    #[test]
    fn null_margin_scales_cubically() {
        let a = null_leaf_margin(100.0, 1.0).unwrap();
        assert!((a.margin - 2e-6).abs() < 1e-18);
        let b = null_leaf_margin(200.0, 1.0).unwrap();
        assert!((a.margin / b.margin - 8.0).abs() < 1e-9);
        assert_eq!(null_leaf_margin(100.0, 0.0).unwrap().margin, 0.0);
    }
}
