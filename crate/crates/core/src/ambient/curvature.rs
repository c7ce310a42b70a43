//! Curvature of a spatial slice assembled from a [`DataJet`].

use nalgebra::{Matrix3, Vector3};

use super::DataJet;

/// Connection and curvature of the slice metric at one point.
#[derive(Clone, Debug)]
pub struct SliceCurvature {
    pub g_inv: Matrix3<f64>,
    /// `gamma[k][(i, j)]` = Γ^k_ij
    pub gamma: [Matrix3<f64>; 3],
    pub ricci: Matrix3<f64>,
    pub scalar: f64,
}

impl SliceCurvature {
    pub fn new(jet: &DataJet) -> Self {
        let g_inv = jet
            .g
            .try_inverse()
            .expect("metric must be positive definite");
        let gamma = christoffel(&g_inv, &jet.dg);

        // ∂_m g^{kl} = -g^{ka} ∂_m g_ab g^{bl}
        let dg_inv: [Matrix3<f64>; 3] = std::array::from_fn(|m| -g_inv * jet.dg[m] * g_inv);

        // dgamma[m][k][(i, j)] = ∂_m Γ^k_ij
        let mut dgamma = [[Matrix3::zeros(); 3]; 3];
        for m in 0..3 {
            for k in 0..3 {
                for i in 0..3 {
                    for j in 0..3 {
                        let mut s = 0.0;
                        for l in 0..3 {
                            let first = jet.dg[i][(l, j)] + jet.dg[j][(l, i)] - jet.dg[l][(i, j)];
                            let second = jet.ddg[m][i][(l, j)] + jet.ddg[m][j][(l, i)]
                                - jet.ddg[m][l][(i, j)];
                            s += dg_inv[m][(k, l)] * first + g_inv[(k, l)] * second;
                        }
                        dgamma[m][k][(i, j)] = 0.5 * s;
                    }
                }
            }
        }

        let mut ricci = Matrix3::zeros();
        for i in 0..3 {
            for j in 0..3 {
                let mut s = 0.0;
                for k in 0..3 {
                    s += dgamma[k][k][(i, j)] - dgamma[j][k][(i, k)];
                    for l in 0..3 {
                        s += gamma[k][(k, l)] * gamma[l][(i, j)] - gamma[k][(j, l)] * gamma[l][(i, k)];
                    }
                }
                ricci[(i, j)] = s;
            }
        }
        let ricci = 0.5 * (ricci + ricci.transpose());
        let scalar = (g_inv.component_mul(&ricci)).sum();
        SliceCurvature {
            g_inv,
            gamma,
            ricci,
            scalar,
        }
    }

    /// Γ(u, v)^k = Γ^k_ij u^i v^j.
    pub fn gamma_apply(&self, u: &Vector3<f64>, v: &Vector3<f64>) -> Vector3<f64> {
        Vector3::from_fn(|k, _| u.dot(&(self.gamma[k] * v)))
    }
}

/// Christoffel symbols alone, for transporting vectors.
#[derive(Clone, Debug)]
pub struct Connection {
    pub gamma: [Matrix3<f64>; 3],
}

impl Connection {
    pub fn new(jet: &DataJet) -> Self {
        let g_inv = jet.g.try_inverse().expect("metric must be positive definite");
        Connection {
            gamma: christoffel(&g_inv, &jet.dg),
        }
    }

    /// Γ(u, v)^k = Γ^k_ij u^i v^j.
    pub fn apply(&self, u: &Vector3<f64>, v: &Vector3<f64>) -> Vector3<f64> {
        Vector3::from_fn(|k, _| u.dot(&(self.gamma[k] * v)))
    }
}

pub(crate) fn christoffel(g_inv: &Matrix3<f64>, dg: &[Matrix3<f64>; 3]) -> [Matrix3<f64>; 3] {
    let mut gamma = [Matrix3::zeros(); 3];
    for k in 0..3 {
        for i in 0..3 {
            for j in 0..3 {
                let mut s = 0.0;
                for l in 0..3 {
                    s += g_inv[(k, l)] * (dg[i][(l, j)] + dg[j][(l, i)] - dg[l][(i, j)]);
                }
                gamma[k][(i, j)] = 0.5 * s;
            }
        }
    }
    gamma
}

/// Energy and momentum densities from the constraint equations:
/// `2μ = Sc − |K|² + (tr K)²` and `J = div(K − (tr K) g)`.
pub fn constraints(jet: &DataJet, curv: &SliceCurvature) -> (f64, Vector3<f64>) {
    let gi = &curv.g_inv;
    let k_up = gi * jet.k * gi;
    let k_norm2 = k_up.component_mul(&jet.k).sum();
    let tr_k = gi.component_mul(&jet.k).sum();
    let mu = 0.5 * (curv.scalar - k_norm2 + tr_k * tr_k);

    let dg_inv: [Matrix3<f64>; 3] = std::array::from_fn(|m| -gi * jet.dg[m] * gi);
    let mut j = Vector3::zeros();
    for i in 0..3 {
        // g^{jk} ∇_j K_ki
        let mut div = 0.0;
        for a in 0..3 {
            for b in 0..3 {
                let mut cov = jet.dk[a][(b, i)];
                for m in 0..3 {
                    cov -= curv.gamma[m][(a, b)] * jet.k[(m, i)] + curv.gamma[m][(a, i)] * jet.k[(b, m)];
                }
                div += gi[(a, b)] * cov;
            }
        }
        let d_tr = dg_inv[i].component_mul(&jet.k).sum() + gi.component_mul(&jet.dk[i]).sum();
        j[i] = div - d_tr;
    }
    (mu, j)
}
