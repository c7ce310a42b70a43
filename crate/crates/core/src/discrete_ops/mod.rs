//! Discrete Laplace–Beltrami forms and their spectra.

mod eigen;
mod sparse;

use nalgebra::Matrix2x3;
use serde::{Deserialize, Serialize};

pub use sparse::SparseSymmetric;

use crate::error::{Error, Result};
use crate::surface::InducedGeometry;

/// Knobs of the iterative eigensolver.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SolverOptions {
    /// Relative residual `‖Ax − λMx‖ / max(|λ|, 4π/|Σ|)` at convergence.
    pub tolerance: f64,
    /// Cap on shift-invert applications.
    pub max_iterations: usize,
    pub seed: u64,
    /// Problems up to this size are solved densely.
    pub dense_limit: usize,
}

impl Default for SolverOptions {
    fn default() -> Self {
        SolverOptions {
            tolerance: 1e-9,
            max_iterations: 5000,
            seed: 0x5eed,
            dense_limit: 600,
        }
    }
}

#[derive(Clone, Debug)]
pub struct EigenPair {
    pub value: f64,
    /// Mass-normalized: `Σ mᵢ vᵢ² = 1`.
    pub vector: Vec<f64>,
}

/// Stiffness, lumped mass and potential of the form
/// `w ∫|∇α|² + ∫ q α²`.
#[derive(Clone, Debug)]
pub struct OperatorForms {
    pub stiffness: SparseSymmetric,
    pub mass: Vec<f64>,
    pub potential: Vec<f64>,
}

impl OperatorForms {
    /// Cotangent stiffness in the induced metric with vertex-area mass.
    pub fn laplacian(geom: &InducedGeometry) -> Result<Self> {
        let n = geom.vertex_count();
        let d = Matrix2x3::new(-1.0, 1.0, 0.0, -1.0, 0.0, 1.0);
        let mut entries = Vec::with_capacity(9 * geom.mesh.faces.len());
        for (f, tri) in geom.mesh.faces.iter().enumerate() {
            let h_inv = geom.face_metric[f]
                .try_inverse()
                .filter(|_| geom.face_area[f] > 0.0)
                .ok_or_else(|| Error::Geometry(format!("face {f} is degenerate")))?;
            let local = d.transpose() * h_inv * d * geom.face_area[f];
            for a in 0..3 {
                for b in 0..3 {
                    entries.push((tri[a], tri[b], local[(a, b)]));
                }
            }
        }
        Ok(OperatorForms {
            stiffness: SparseSymmetric::from_entries(n, entries),
            mass: geom.vertex_area.clone(),
            potential: vec![0.0; n],
        })
    }

    pub fn with_potential(mut self, potential: Vec<f64>) -> Result<Self> {
        if potential.len() != self.mass.len() {
            return Err(Error::Input(format!(
                "potential has {} entries, mesh has {} vertices",
                potential.len(),
                self.mass.len()
            )));
        }
        if potential.iter().any(|q| !q.is_finite()) {
            return Err(Error::Input("potential is not finite".into()));
        }
        self.potential = potential;
        Ok(self)
    }

    pub fn len(&self) -> usize {
        self.mass.len()
    }

    pub fn is_empty(&self) -> bool {
        self.mass.is_empty()
    }

    pub fn area(&self) -> f64 {
        self.mass.iter().sum()
    }

    /// `(w S + diag(q m)) x`.
    pub fn apply(&self, weight: f64, x: &[f64]) -> Vec<f64> {
        let mut y = self.stiffness.mul_vec(x);
        for i in 0..y.len() {
            y[i] = weight * y[i] + self.potential[i] * self.mass[i] * x[i];
        }
        y
    }

    pub fn quadratic_form(&self, weight: f64, x: &[f64]) -> f64 {
        self.apply(weight, x).iter().zip(x).map(|(a, b)| a * b).sum()
    }

    pub fn mass_inner(&self, x: &[f64], y: &[f64]) -> f64 {
        (0..x.len()).map(|i| self.mass[i] * x[i] * y[i]).sum()
    }

    /// Smallest `count` eigenpairs of `(w S + diag(q m)) v = λ M v`, ascending.
    pub fn generalized_eigs(&self, count: usize, weight: f64, opts: &SolverOptions) -> Result<Vec<EigenPair>> {
        eigen::smallest(self, weight, count, false, opts)
    }

    /// Minimum of the Rayleigh quotient over fields with `∫α dμ = 0`, with
    /// its minimizer.
    pub fn mean_zero_minimum(&self, weight: f64, opts: &SolverOptions) -> Result<EigenPair> {
        Ok(eigen::smallest(self, weight, 1, true, opts)?.remove(0))
    }
}

/// `index,eigenvalue` table.
pub fn spectrum_csv(pairs: &[EigenPair]) -> String {
    let mut out = String::from("index,eigenvalue\n");
    for (i, p) in pairs.iter().enumerate() {
        out.push_str(&format!("{i},{:.17e}\n", p.value));
    }
    out
}

/// `vertex,mode_0,mode_1,...` table of eigenvectors.
pub fn eigenvector_csv(pairs: &[EigenPair]) -> String {
    let mut out = String::from("vertex");
    for i in 0..pairs.len() {
        out.push_str(&format!(",mode_{i}"));
    }
    out.push('\n');
    let n = pairs.first().map_or(0, |p| p.vector.len());
    for v in 0..n {
        out.push_str(&v.to_string());
        for p in pairs {
            out.push_str(&format!(",{:.17e}", p.vector[v]));
        }
        out.push('\n');
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ambient::AmbientModel;
    use crate::surface::SurfaceMesh;
    use nalgebra::Vector3;

    fn unit_sphere(level: u32) -> InducedGeometry {
        let mesh = SurfaceMesh::icosphere(level, 1.0, Vector3::zeros()).unwrap();
        InducedGeometry::new(&mesh, &AmbientModel::minkowski()).unwrap()
    }

    #[test]
    fn constants_span_the_kernel() {
        let forms = OperatorForms::laplacian(&unit_sphere(3)).unwrap();
        let ones = vec![1.0; forms.len()];
        assert!(forms.stiffness.mul_vec(&ones).iter().all(|r| r.abs() < 1e-12));
        assert!(forms.stiffness.is_symmetric(1e-14));
    }

    #[test]
    fn dense_and_sparse_paths_agree() {
        let forms = OperatorForms::laplacian(&unit_sphere(3)).unwrap();
        let dense = SolverOptions {
            dense_limit: 10_000,
            ..SolverOptions::default()
        };
        let sparse = SolverOptions {
            dense_limit: 0,
            ..SolverOptions::default()
        };
        let a = forms.generalized_eigs(9, 1.0, &dense).unwrap();
        let b = forms.generalized_eigs(9, 1.0, &sparse).unwrap();
        for (x, y) in a.iter().zip(&b) {
            assert!((x.value - y.value).abs() < 1e-8 * (1.0 + x.value.abs()), "{} {}", x.value, y.value);
        }
        let c = forms.mean_zero_minimum(1.0, &dense).unwrap();
        let d = forms.mean_zero_minimum(1.0, &sparse).unwrap();
        assert!((c.value - d.value).abs() < 1e-8);
        assert!((c.value - a[1].value).abs() < 1e-8);
    }

    #[test]
    fn csv_has_header_and_rows() {
        let pairs = vec![
            EigenPair {
                value: 0.0,
                vector: vec![1.0, 1.0],
            },
            EigenPair {
                value: 2.0,
                vector: vec![1.0, -1.0],
            },
        ];
        let csv = spectrum_csv(&pairs);
        assert!(csv.starts_with("index,eigenvalue\n0,"));
        assert_eq!(csv.lines().count(), 3);
        assert_eq!(eigenvector_csv(&pairs).lines().count(), 3);
    }
}
