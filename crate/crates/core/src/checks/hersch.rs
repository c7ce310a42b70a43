use nalgebra::{Matrix3, Vector3};
use serde::{Deserialize, Serialize};

use crate::discrete_ops::OperatorForms;
use crate::error::{Error, Result};
use crate::surface::InducedGeometry;

pub const MAX_BALANCE_ITERATIONS: usize = 500;
/// Target for `|∫φ dμ| / |Σ|`.
pub const BALANCE_TARGET: f64 = 1e-12;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct HerschCertificate {
    /// Möbius parameter `a` in the open unit ball.
    pub mobius: [f64; 3],
    /// `|∫φ dμ| / |Σ|` after balancing.
    pub center_norm: f64,
    /// `Σᵢ ∫|∇φᵢ|² dμ`, which is 8π for a conformal diffeomorphism.
    pub dirichlet_energy: f64,
    pub iterations: usize,
}

/// Conformal map `φ = g_a ∘ u` with area-weighted center at the origin.
#[derive(Clone, Debug, PartialEq)]
pub struct HerschBalance {
    pub certificate: HerschCertificate,
    /// Components of `φ` per vertex.
    pub fields: [Vec<f64>; 3],
}

/// `g_a(x) = ((1−|a|²)x + 2(1+⟨x,a⟩)a) / (1 + 2⟨x,a⟩ + |a|²)`, a conformal
/// automorphism of the unit sphere pushing mass toward `a`.
pub fn mobius(a: &Vector3<f64>, x: &Vector3<f64>) -> Vector3<f64> {
    let xa = x.dot(a);
    let a2 = a.norm_squared();
    ((1.0 - a2) * x + 2.0 * (1.0 + xa) * a) / (1.0 + 2.0 * xa + a2)
}

fn center(dirs: &[Vector3<f64>], weights: &[f64], total: f64, a: &Vector3<f64>) -> Vector3<f64> {
    dirs.iter().zip(weights).map(|(u, w)| mobius(a, u) * *w).sum::<Vector3<f64>>() / total
}

/// Damped Newton iteration on the Möbius parameter with a finite-difference
/// Jacobian and step halving.
pub fn hersch_balance(geom: &InducedGeometry) -> Result<HerschBalance> {
    let dirs = geom
        .mesh
        .parametrization
        .as_ref()
        .ok_or_else(|| Error::Precondition("Hersch balancing needs a sphere parametrization".into()))?;
    if geom.mesh.euler_characteristic() != 2 {
        return Err(Error::Precondition("Hersch balancing needs a genus-0 surface".into()));
    }
    let (w, total) = (&geom.vertex_area, geom.area);
    let mut a = Vector3::zeros();
    let mut c = center(dirs, w, total, &a);
    let mut iterations = 0;
    while c.norm() > BALANCE_TARGET {
        if iterations == MAX_BALANCE_ITERATIONS {
            return Err(Error::Numerical {
                message: format!("Hersch balancing did not converge in {MAX_BALANCE_ITERATIONS} iterations"),
                residual: c.norm(),
            });
        }
        iterations += 1;
        let h = 1e-7;
        let mut jac = Matrix3::zeros();
        for k in 0..3 {
            let mut ap = a;
            ap[k] += h;
            let mut am = a;
            am[k] -= h;
            jac.set_column(k, &((center(dirs, w, total, &ap) - center(dirs, w, total, &am)) / (2.0 * h)));
        }
        let step = jac
            .try_inverse()
            .map(|inv| -(inv * c))
            .unwrap_or(-c);
        let mut t = 1.0;
        loop {
            let trial = a + t * step;
            if trial.norm() < 1.0 {
                let ct = center(dirs, w, total, &trial);
                if ct.norm() < c.norm() {
                    a = trial;
                    c = ct;
                    break;
                }
            }
            t *= 0.5;
            if t < 1e-12 {
                return Err(Error::Numerical {
                    message: "Hersch balancing stalled".into(),
                    residual: c.norm(),
                });
            }
        }
    }
    let phi: Vec<Vector3<f64>> = dirs.iter().map(|u| mobius(&a, u)).collect();
    let fields = [0, 1, 2].map(|k| phi.iter().map(|p| p[k]).collect::<Vec<f64>>());
    let forms = OperatorForms::laplacian(geom)?;
    let dirichlet_energy = fields.iter().map(|f| forms.quadratic_form(1.0, f)).sum();
    Ok(HerschBalance {
        certificate: HerschCertificate {
            mobius: [a.x, a.y, a.z],
            center_norm: c.norm(),
            dirichlet_energy,
            iterations,
        },
        fields,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ambient::AmbientModel;
    use crate::surface::SurfaceMesh;
    use std::f64::consts::PI;

    #[test]
    fn mobius_preserves_the_sphere() {
        let a = Vector3::new(0.3, -0.2, 0.5);
        let x = Vector3::new(1.0, 2.0, -2.0) / 3.0;
        assert!((mobius(&a, &x).norm() - 1.0).abs() < 1e-14);
        assert!((mobius(&Vector3::zeros(), &x) - x).norm() < 1e-15);
    }

    #[test]
    fn lopsided_surface_gets_balanced() {
        let base = SurfaceMesh::icosphere(4, 1.0, Vector3::zeros()).unwrap();
        let mesh = base.radial_graph(|u| 1.0 + 0.1 * u.z, Vector3::zeros()).unwrap();
        let geom = InducedGeometry::new(&mesh, &AmbientModel::minkowski()).unwrap();
        let b = hersch_balance(&geom).unwrap().certificate;
        assert!(b.iterations > 0 && b.mobius[2].abs() > 1e-3);
        assert!(b.center_norm <= BALANCE_TARGET);
        assert!((b.dirichlet_energy - 8.0 * PI).abs() < 0.02 * 8.0 * PI, "{}", b.dirichlet_energy);
    }
}
