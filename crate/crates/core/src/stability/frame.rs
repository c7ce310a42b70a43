use nalgebra::{Matrix2, Vector2};
use serde::{Deserialize, Serialize};

use crate::ambient::{AmbientModel, EinsteinData, FrameVector};
use crate::error::{Error, Result};
use crate::surface::InducedGeometry;

/// Null expansions, twist and null second fundamental forms in a chosen
/// boost gauge `ℓ' = f ℓ`, `k' = f⁻¹ k`.
#[derive(Clone, Debug)]
pub struct NullFrame {
    pub theta_l: Vec<f64>,
    pub theta_k: Vec<f64>,
    pub s_ell: Vec<Vector2<f64>>,
    pub chi_l: Vec<Matrix2<f64>>,
    pub chi_k: Vec<Matrix2<f64>>,
    /// `log f`, zero in the slice gauge `ℓ = n + ν`.
    pub log_boost: Vec<f64>,
}

impl NullFrame {
    pub fn slice_gauge(geom: &InducedGeometry) -> Self {
        let n = geom.vertex_count();
        NullFrame {
            theta_l: geom.theta_l.clone(),
            theta_k: geom.theta_k.clone(),
            s_ell: geom.s_ell.clone(),
            chi_l: (0..n).map(|i| geom.k_tan[i] + geom.b[i]).collect(),
            chi_k: (0..n).map(|i| geom.k_tan[i] - geom.b[i]).collect(),
            log_boost: vec![0.0; n],
        }
    }

    pub fn theta_product(&self) -> Vec<f64> {
        self.theta_l.iter().zip(&self.theta_k).map(|(a, b)| a * b).collect()
    }
}

/// Rescales the null pair by `f > 0` on top of `frame`:
/// `θℓ' = fθℓ`, `θk' = f⁻¹θk`, `sℓ' = sℓ + ∇log f`.
pub fn boost_transform(geom: &InducedGeometry, frame: &NullFrame, f: &[f64]) -> Result<NullFrame> {
    let n = geom.vertex_count();
    if f.len() != n {
        return Err(Error::Input(format!("boost has {} values, mesh has {n} vertices", f.len())));
    }
    if let Some(i) = f.iter().position(|v| !(*v > 0.0) || !v.is_finite()) {
        return Err(Error::Input(format!("boost function must be positive, got {} at vertex {i}", f[i])));
    }
    let log_f: Vec<f64> = f.iter().map(|v| v.ln()).collect();
    let grad = geom.gradient(&log_f);
    Ok(NullFrame {
        theta_l: (0..n).map(|i| f[i] * frame.theta_l[i]).collect(),
        theta_k: (0..n).map(|i| frame.theta_k[i] / f[i]).collect(),
        s_ell: (0..n).map(|i| frame.s_ell[i] + grad[i]).collect(),
        chi_l: (0..n).map(|i| frame.chi_l[i] * f[i]).collect(),
        chi_k: (0..n).map(|i| frame.chi_k[i] / f[i]).collect(),
        log_boost: (0..n).map(|i| frame.log_boost[i] + log_f[i]).collect(),
    })
}

/// Einstein tensor data at every vertex.
pub fn vertex_einstein(geom: &InducedGeometry, model: &AmbientModel) -> Result<Vec<EinsteinData>> {
    geom.mesh.vertices.iter().map(|x| model.einstein_data(x)).collect()
}

/// Fails unless `θℓθk < 0` with margin at every vertex.
pub fn require_spacelike(geom: &InducedGeometry) -> Result<()> {
    let floor = 1e-10 * 16.0 * std::f64::consts::PI / geom.area;
    let tt = geom.theta_product();
    let null: Vec<usize> = (0..tt.len()).filter(|&i| tt[i].abs() < floor).collect();
    if !null.is_empty() {
        return Err(Error::regime("null mean curvature vector", &null));
    }
    let bad: Vec<usize> = (0..tt.len()).filter(|&i| tt[i] >= 0.0).collect();
    if !bad.is_empty() {
        return Err(Error::regime("timelike mean curvature vector", &bad));
    }
    Ok(())
}

/// The potential `V` of `𝓛 = θℓθk(2Δ + V)` in initial-data form:
///
/// `2‖∇log|H+P| − K(·,ν)‖² − Sc + (H−P)/(2(H+P))‖K⊤+B‖² + (H+P)/(2(H−P))‖K⊤−B‖²
///  + 2(H²μ + 2HP J(ν) + P² Ein(ν,ν))/(H² − P²)`.
pub fn stcmc_potential(geom: &InducedGeometry, model: &AmbientModel) -> Result<Vec<f64>> {
    require_spacelike(geom)?;
    let ein = vertex_einstein(geom, model)?;
    let log_l: Vec<f64> = geom.theta_l.iter().map(|t| t.abs().ln()).collect();
    let grad = geom.gradient(&log_l);
    Ok((0..geom.vertex_count())
        .map(|i| {
            let (h, p) = (geom.mean_curvature[i], geom.p[i]);
            let nu = geom.normal[i];
            let twist = (grad[i] - geom.s_ell[i]).norm_squared();
            let plus = (geom.k_tan[i] + geom.b[i]).norm_squared();
            let minus = (geom.k_tan[i] - geom.b[i]).norm_squared();
            let e = &ein[i];
            let nu_v = FrameVector::spatial(nu);
            let energy = h * h * e.mu + 2.0 * h * p * e.j.dot(&nu) + p * p * e.contract(&nu_v, &nu_v);
            2.0 * twist - geom.scalar_curvature[i]
                + (h - p) / (2.0 * (h + p)) * plus
                + (h + p) / (2.0 * (h - p)) * minus
                + 2.0 * energy / (h * h - p * p)
        })
        .collect())
}

/// The same potential assembled from a null frame:
/// `2‖∇log|θℓ| − sℓ‖² − Sc + 2Ein(U,U) − θk/(2θℓ)‖χℓ‖² − θℓ/(2θk)‖χk‖²`,
/// with `Ein(U,U)` expressed through the boosted null pair.
pub fn stcmc_potential_null(geom: &InducedGeometry, frame: &NullFrame, ein: &[EinsteinData]) -> Result<Vec<f64>> {
    require_spacelike(geom)?;
    let log_l: Vec<f64> = frame.theta_l.iter().map(|t| t.abs().ln()).collect();
    let grad = geom.gradient(&log_l);
    Ok((0..geom.vertex_count())
        .map(|i| {
            let (tl, tk) = (frame.theta_l[i], frame.theta_k[i]);
            let twist = (grad[i] - frame.s_ell[i]).norm_squared();
            2.0 * twist - geom.scalar_curvature[i] + 2.0 * null_ein_uu(geom, frame, ein, i)
                - tk / (2.0 * tl) * frame.chi_l[i].norm_squared()
                - tl / (2.0 * tk) * frame.chi_k[i].norm_squared()
        })
        .collect())
}

/// `Ein(U,U) = ½[Ein(ℓ',k') − θk'/(2θℓ') Ein(ℓ',ℓ') − θℓ'/(2θk') Ein(k',k')]`.
fn null_ein_uu(geom: &InducedGeometry, frame: &NullFrame, ein: &[EinsteinData], i: usize) -> f64 {
    let f = frame.log_boost[i].exp();
    let nu = geom.normal[i];
    let (l, k) = (FrameVector::ell(nu), FrameVector::k(nu));
    let e = &ein[i];
    let (ll, kk, lk) = (f * f * e.contract(&l, &l), e.contract(&k, &k) / (f * f), e.contract(&l, &k));
    let (tl, tk) = (frame.theta_l[i], frame.theta_k[i]);
    0.5 * (lk - tk / (2.0 * tl) * ll - tl / (2.0 * tk) * kk)
}

/// Canonical observer `U = (H n − P ν)/√(H² − P²)` per vertex.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct ObserverFrame {
    /// Components of `U` along `n` and `ν`.
    pub u_n: Vec<f64>,
    pub u_nu: Vec<f64>,
    /// Direct contraction `Ein(U, U)`.
    pub ein_uu: Vec<f64>,
    /// `Ein(U, U)` from the null-pair expression in the frame's gauge.
    pub ein_uu_null: Vec<f64>,
    pub log_boost: Option<Vec<f64>>,
}

impl ObserverFrame {
    /// `g(U, U)` per vertex.
    pub fn norm(&self) -> Vec<f64> {
        self.u_n.iter().zip(&self.u_nu).map(|(a, b)| -a * a + b * b).collect()
    }
}

pub fn observer_frame(geom: &InducedGeometry, model: &AmbientModel, frame: &NullFrame) -> Result<ObserverFrame> {
    require_spacelike(geom)?;
    let ein = vertex_einstein(geom, model)?;
    let n = geom.vertex_count();
    let mut out = ObserverFrame {
        u_n: Vec::with_capacity(n),
        u_nu: Vec::with_capacity(n),
        ein_uu: Vec::with_capacity(n),
        ein_uu_null: Vec::with_capacity(n),
        log_boost: frame.log_boost.iter().any(|v| *v != 0.0).then(|| frame.log_boost.clone()),
    };
    for i in 0..n {
        let (h, p) = (geom.mean_curvature[i], geom.p[i]);
        let u = FrameVector::observer(geom.normal[i], h, p);
        let s = (h * h - p * p).sqrt();
        out.u_n.push(h / s);
        out.u_nu.push(-p / s);
        out.ein_uu.push(ein[i].contract(&u, &u));
        out.ein_uu_null.push(null_ein_uu(geom, frame, &ein, i));
    }
    Ok(out)
}
