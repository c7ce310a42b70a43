//! Analytic ambient models evaluated pointwise in a chart.
//!
//! Conventions: signature `− + + +`, future unit normal `n` to the slice,
//! `K(X, Y) = g(∇_X n, Y)`, geometric units. Every model is described on a
//! Cartesian chart `x ∈ ℝ³`.
//!
//! | kind | chart metric | K |
//! |---|---|---|
//! | Minkowski | `δ` | 0 |
//! | Schwarzschild | `δ + a(r) x xᵀ`, `a = 2m / (r²(r − 2m))`, `|x|` is the areal radius | 0 |
//! | space form of curvature κ | `δ / s²`, `s = 1 + κ|x|²/4` | 0 |
//! | cosmological constant Λ | space form with `κ = Λ/3` | 0 |
//! | custom | `φ⁴ δ` | `c g + K₀` |
//!
//! Space forms are slices of the vacuum spacetime with `Ein = −Λ g`,
//! `Λ = 3κ`.

mod curvature;
mod field;

pub use curvature::{constraints, Connection, SliceCurvature};
pub use field::ScalarField;

use nalgebra::{Matrix3, Vector3};

use crate::error::{Error, Result};

/// Metric and extrinsic curvature with their chart derivatives at one point.
#[derive(Clone, Debug, PartialEq)]
pub struct DataJet {
    pub g: Matrix3<f64>,
    /// `dg[k]` = ∂_k g
    pub dg: [Matrix3<f64>; 3],
    /// `ddg[l][k]` = ∂_l ∂_k g
    pub ddg: [[Matrix3<f64>; 3]; 3],
    pub k: Matrix3<f64>,
    /// `dk[m]` = ∂_m K
    pub dk: [Matrix3<f64>; 3],
}

impl DataJet {
    fn flat() -> Self {
        DataJet {
            g: Matrix3::identity(),
            dg: [Matrix3::zeros(); 3],
            ddg: [[Matrix3::zeros(); 3]; 3],
            k: Matrix3::zeros(),
            dk: [Matrix3::zeros(); 3],
        }
    }
}

/// How the spatial block of the Einstein tensor is supplied for custom data.
/// The normal components always follow from the constraints.
#[derive(Clone, Debug)]
pub enum EinsteinPolicy {
    AssumeVacuum,
    ConstantLambda(f64),
    /// Isotropic spatial stress `Ein(X, Y) = p g(X, Y)`.
    Explicit(ScalarField),
}

/// A conformally flat initial data set `g = φ⁴ δ`, `K = c g + K₀`.
#[derive(Clone, Debug)]
pub struct CustomData {
    pub phi: ScalarField,
    pub k_scale: f64,
    /// Components xx, xy, xz, yy, yz, zz of `K₀`.
    pub k_extra: Option<Box<[ScalarField; 6]>>,
    pub einstein: Option<EinsteinPolicy>,
}

#[derive(Clone, Debug)]
pub enum ModelKind {
    Minkowski,
    Schwarzschild { mass: f64 },
    HyperbolicSpaceForm { curvature: f64 },
    SphericalSpaceForm { curvature: f64 },
    CosmologicalConstant { lambda: f64 },
    Custom(CustomData),
}

/// A spacetime vector `a n + X` at a slice point, `X` in chart components.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct FrameVector {
    pub n: f64,
    pub spatial: Vector3<f64>,
}

impl FrameVector {
    pub fn normal() -> Self {
        FrameVector {
            n: 1.0,
            spatial: Vector3::zeros(),
        }
    }

    pub fn spatial(v: Vector3<f64>) -> Self {
        FrameVector { n: 0.0, spatial: v }
    }

    /// `ℓ = n + ν`.
    pub fn ell(nu: Vector3<f64>) -> Self {
        FrameVector { n: 1.0, spatial: nu }
    }

    /// `k = n − ν`.
    pub fn k(nu: Vector3<f64>) -> Self {
        FrameVector {
            n: 1.0,
            spatial: -nu,
        }
    }

    /// Unit timelike normal orthogonal to the mean curvature vector
    /// `H n − P ν` (up to normalization); requires `H² > P²`.
    pub fn observer(nu: Vector3<f64>, h: f64, p: f64) -> Self {
        let s = (h * h - p * p).sqrt();
        FrameVector {
            n: h / s,
            spatial: -(p / s) * nu,
        }
    }
}

/// Einstein tensor in the slice frame: `μ = Ein(n, n)`, `J(X) = −Ein(n, X)`,
/// and the spatial block `E_ij = Ein(∂_i, ∂_j)`.
#[derive(Clone, Debug, PartialEq)]
pub struct EinsteinData {
    pub mu: f64,
    pub j: Vector3<f64>,
    pub spatial: Matrix3<f64>,
}

impl EinsteinData {
    pub fn contract(&self, a: &FrameVector, b: &FrameVector) -> f64 {
        a.n * b.n * self.mu - a.n * self.j.dot(&b.spatial) - b.n * self.j.dot(&a.spatial)
            + a.spatial.dot(&(self.spatial * b.spatial))
    }
}

/// Ambient curvature contractions needed by the Gauss equations.
#[derive(Clone, Debug)]
pub struct AmbientCurvature {
    pub jet: DataJet,
    pub slice: SliceCurvature,
    pub einstein: EinsteinData,
}

impl AmbientCurvature {
    /// Spacetime scalar curvature, `Sc = −tr Ein`.
    pub fn spacetime_scalar(&self) -> f64 {
        let tr_spatial = self.slice.g_inv.component_mul(&self.einstein.spatial).sum();
        self.einstein.mu - tr_spatial
    }

    /// `Ric(a, b)` of the spacetime from `Ric = Ein + ½ Sc g`.
    pub fn spacetime_ricci(&self, a: &FrameVector, b: &FrameVector) -> f64 {
        let gab = -a.n * b.n + a.spatial.dot(&(self.jet.g * b.spatial));
        self.einstein.contract(a, b) + 0.5 * self.spacetime_scalar() * gab
    }

    /// `Rm(k, ℓ, ℓ, k)` for the null pair built on the unit spatial normal `ν`.
    pub fn rm_null(&self, nu: &Vector3<f64>) -> f64 {
        let k = &self.jet.k;
        let ric3 = nu.dot(&(self.slice.ricci * nu));
        let tr_k = self.slice.g_inv.component_mul(k).sum();
        let k_nu = k * nu;
        let k_nu_sq = k_nu.dot(&(self.slice.g_inv * k_nu));
        let nu_v = FrameVector::spatial(*nu);
        4.0 * (ric3 + tr_k * nu.dot(&k_nu) - k_nu_sq - self.spacetime_ricci(&nu_v, &nu_v))
    }
}

#[derive(Clone, Debug)]
pub struct AmbientModel {
    pub kind: ModelKind,
}

impl AmbientModel {
    pub fn minkowski() -> Self {
        AmbientModel {
            kind: ModelKind::Minkowski,
        }
    }

    pub fn schwarzschild(mass: f64) -> Result<Self> {
        if !(mass > 0.0 && mass.is_finite()) {
            return Err(Error::Input(format!("Schwarzschild mass must be positive, got {mass}")));
        }
        Ok(AmbientModel {
            kind: ModelKind::Schwarzschild { mass },
        })
    }

    pub fn hyperbolic(curvature: f64) -> Result<Self> {
        if !(curvature < 0.0 && curvature.is_finite()) {
            return Err(Error::Input(format!(
                "hyperbolic space form needs negative curvature, got {curvature}"
            )));
        }
        Ok(AmbientModel {
            kind: ModelKind::HyperbolicSpaceForm { curvature },
        })
    }

    pub fn spherical(curvature: f64) -> Result<Self> {
        if !(curvature > 0.0 && curvature.is_finite()) {
            return Err(Error::Input(format!(
                "spherical space form needs positive curvature, got {curvature}"
            )));
        }
        Ok(AmbientModel {
            kind: ModelKind::SphericalSpaceForm { curvature },
        })
    }

    pub fn cosmological(lambda: f64) -> Result<Self> {
        if !lambda.is_finite() {
            return Err(Error::Input("Λ must be finite".into()));
        }
        Ok(AmbientModel {
            kind: ModelKind::CosmologicalConstant { lambda },
        })
    }

    pub fn custom(data: CustomData) -> Self {
        AmbientModel {
            kind: ModelKind::Custom(data),
        }
    }

    pub fn name(&self) -> &'static str {
        match self.kind {
            ModelKind::Minkowski => "minkowski",
            ModelKind::Schwarzschild { .. } => "schwarzschild",
            ModelKind::HyperbolicSpaceForm { .. } => "hyperbolic",
            ModelKind::SphericalSpaceForm { .. } => "spherical",
            ModelKind::CosmologicalConstant { .. } => "cosmological-constant",
            ModelKind::Custom(_) => "custom",
        }
    }

    /// Sectional curvature of the slice for the space-form family.
    fn space_form_curvature(&self) -> Option<f64> {
        match self.kind {
            ModelKind::HyperbolicSpaceForm { curvature }
            | ModelKind::SphericalSpaceForm { curvature } => Some(curvature),
            ModelKind::CosmologicalConstant { lambda } => Some(lambda / 3.0),
            _ => None,
        }
    }

    /// Cosmological constant of the spacetime the slice sits in (0 for the
    /// vacuum kinds, `None` for custom data).
    pub fn lambda(&self) -> Option<f64> {
        match &self.kind {
            ModelKind::Custom(_) => None,
            _ => Some(3.0 * self.space_form_curvature().unwrap_or(0.0)),
        }
    }

    /// Areal-radius profile `(H, P)` of centred round spheres, for the
    /// spherically symmetric kinds.
    pub fn radial_profile(&self, areal_radius: f64) -> Option<(f64, f64)> {
        let r = areal_radius;
        match self.kind {
            ModelKind::Minkowski => Some((2.0 / r, 0.0)),
            ModelKind::Schwarzschild { mass } => {
                let f = 1.0 - 2.0 * mass / r;
                (f > 0.0).then(|| (2.0 / r * f.sqrt(), 0.0))
            }
            ModelKind::Custom(_) => None,
            _ => {
                let kappa = self.space_form_curvature()?;
                let f = 1.0 - kappa * r * r;
                (f >= 0.0).then(|| (2.0 / r * f.sqrt(), 0.0))
            }
        }
    }

    /// Chart radius of the centred sphere with the given areal radius.
    pub fn chart_radius_for_areal(&self, areal: f64) -> Result<f64> {
        match self.space_form_curvature() {
            None => match self.kind {
                ModelKind::Custom(_) => Err(Error::Input(
                    "areal placement needs a spherically symmetric model".into(),
                )),
                _ => Ok(areal),
            },
            Some(kappa) => {
                // areal = R / (1 + κR²/4); take the root on the chart ball
                if kappa == 0.0 {
                    return Ok(areal);
                }
                let disc = 1.0 - kappa * areal * areal;
                if disc < 0.0 {
                    return Err(Error::Input(format!(
                        "areal radius {areal} exceeds the maximum 1/√κ of the space form"
                    )));
                }
                Ok(2.0 * areal / (1.0 + disc.sqrt()))
            }
        }
    }

    /// Chart radius of the centred geodesic sphere of radius `rho`.
    pub fn chart_radius_for_geodesic(&self, rho: f64) -> Result<f64> {
        match (&self.kind, self.space_form_curvature()) {
            (_, Some(kappa)) if kappa < 0.0 => {
                let c = (-kappa).sqrt();
                Ok(2.0 / c * (c * rho / 2.0).tanh())
            }
            (_, Some(kappa)) if kappa > 0.0 => {
                let c = kappa.sqrt();
                if c * rho >= std::f64::consts::PI {
                    return Err(Error::Input(format!("geodesic radius {rho} reaches the antipode")));
                }
                Ok(2.0 / c * (c * rho / 2.0).tan())
            }
            (ModelKind::Minkowski, _) | (_, Some(_)) => Ok(rho),
            _ => Err(Error::Input(
                "geodesic placement is only available for flat and space-form models".into(),
            )),
        }
    }

    fn domain_error(&self, x: &Vector3<f64>, reason: impl Into<String>) -> Error {
        Error::Domain {
            model: self.name().to_string(),
            point: [x[0], x[1], x[2]],
            reason: reason.into(),
        }
    }

    /// Metric, extrinsic curvature and chart derivatives at `x`.
    pub fn sample(&self, x: &Vector3<f64>) -> Result<DataJet> {
        if !x.iter().all(|c| c.is_finite()) {
            return Err(self.domain_error(x, "non-finite coordinate"));
        }
        match &self.kind {
            ModelKind::Minkowski => Ok(DataJet::flat()),
            ModelKind::Schwarzschild { mass } => self.schwarzschild_jet(*mass, x),
            ModelKind::Custom(data) => self.custom_jet(data, x),
            _ => {
                let kappa = self.space_form_curvature().unwrap();
                self.space_form_jet(kappa, x)
            }
        }
    }

    fn schwarzschild_jet(&self, m: f64, x: &Vector3<f64>) -> Result<DataJet> {
        let r = x.norm();
        if r <= 2.0 * m {
            return Err(self.domain_error(x, format!("areal radius {r} ≤ 2m = {}", 2.0 * m)));
        }
        let u = r * r * r - 2.0 * m * r * r;
        let du = 3.0 * r * r - 4.0 * m * r;
        let ddu = 6.0 * r - 4.0 * m;
        let a = 2.0 * m / u;
        let da = -2.0 * m * du / (u * u);
        let dda = -2.0 * m * (ddu * u - 2.0 * du * du) / (u * u * u);
        // ∂_k a = b x_k, ∂_l (b x_k) = c x_k x_l + b δ_kl
        let b = da / r;
        let db = (dda * r - da) / (r * r);
        let c = db / r;

        let delta = |i: usize, j: usize| if i == j { 1.0 } else { 0.0 };
        let mut jet = DataJet::flat();
        jet.g += a * x * x.transpose();
        for k in 0..3 {
            jet.dg[k] = Matrix3::from_fn(|i, j| {
                b * x[k] * x[i] * x[j] + a * (delta(i, k) * x[j] + delta(j, k) * x[i])
            });
        }
        for l in 0..3 {
            for k in 0..3 {
                jet.ddg[l][k] = Matrix3::from_fn(|i, j| {
                    c * x[i] * x[j] * x[k] * x[l]
                        + b * (delta(k, l) * x[i] * x[j]
                            + delta(i, l) * x[k] * x[j]
                            + delta(j, l) * x[i] * x[k]
                            + delta(i, k) * x[j] * x[l]
                            + delta(j, k) * x[i] * x[l])
                        + a * (delta(i, k) * delta(j, l) + delta(i, l) * delta(j, k))
                });
            }
        }
        Ok(jet)
    }

    fn space_form_jet(&self, kappa: f64, x: &Vector3<f64>) -> Result<DataJet> {
        let q = x.norm_squared();
        let s = 1.0 + kappa * q / 4.0;
        if s <= 0.0 {
            return Err(self.domain_error(
                x,
                format!("outside the ball model |x| < {}", 2.0 / (-kappa).sqrt()),
            ));
        }
        let id = Matrix3::identity();
        let mut jet = DataJet::flat();
        jet.g = id / (s * s);
        for k in 0..3 {
            jet.dg[k] = id * (-kappa * x[k] / (s * s * s));
        }
        for l in 0..3 {
            for k in 0..3 {
                let dkl = if k == l { 1.0 } else { 0.0 };
                let v = -kappa * dkl / s.powi(3) + 1.5 * kappa * kappa * x[k] * x[l] / s.powi(4);
                jet.ddg[l][k] = id * v;
            }
        }
        Ok(jet)
    }

    fn custom_jet(&self, data: &CustomData, x: &Vector3<f64>) -> Result<DataJet> {
        let phi = data.phi.value(x);
        if !(phi > 0.0 && phi.is_finite()) {
            return Err(self.domain_error(x, format!("conformal factor φ = {phi} is not positive")));
        }
        let dphi = data.phi.gradient(x);
        let ddphi = data.phi.hessian(x);
        let id = Matrix3::identity();
        let mut jet = DataJet::flat();
        jet.g = id * phi.powi(4);
        for k in 0..3 {
            jet.dg[k] = id * (4.0 * phi.powi(3) * dphi[k]);
        }
        for l in 0..3 {
            for k in 0..3 {
                let v = 12.0 * phi * phi * dphi[k] * dphi[l] + 4.0 * phi.powi(3) * ddphi[(k, l)];
                jet.ddg[l][k] = id * v;
            }
        }
        jet.k = jet.g * data.k_scale;
        for m in 0..3 {
            jet.dk[m] = jet.dg[m] * data.k_scale;
        }
        if let Some(extra) = &data.k_extra {
            const SLOTS: [(usize, usize); 6] = [(0, 0), (0, 1), (0, 2), (1, 1), (1, 2), (2, 2)];
            for (field, &(i, j)) in extra.iter().zip(SLOTS.iter()) {
                let v = field.value(x);
                let dv = field.gradient(x);
                jet.k[(i, j)] += v;
                for m in 0..3 {
                    jet.dk[m][(i, j)] += dv[m];
                }
                if i != j {
                    jet.k[(j, i)] += v;
                    for m in 0..3 {
                        jet.dk[m][(j, i)] += dv[m];
                    }
                }
            }
        }
        if !jet.g.iter().chain(jet.k.iter()).all(|v| v.is_finite()) {
            return Err(self.domain_error(x, "non-finite data"));
        }
        Ok(jet)
    }

    /// `(μ, J)` from the constraint equations, `J` as a chart covector.
    pub fn constraint_densities(&self, x: &Vector3<f64>) -> Result<(f64, Vector3<f64>)> {
        let jet = self.sample(x)?;
        let curv = SliceCurvature::new(&jet);
        Ok(constraints(&jet, &curv))
    }

    fn einstein_from(&self, x: &Vector3<f64>, jet: &DataJet, curv: &SliceCurvature) -> Result<EinsteinData> {
        match &self.kind {
            ModelKind::Minkowski | ModelKind::Schwarzschild { .. } => Ok(EinsteinData {
                mu: 0.0,
                j: Vector3::zeros(),
                spatial: Matrix3::zeros(),
            }),
            ModelKind::Custom(data) => {
                let policy = data
                    .einstein
                    .as_ref()
                    .ok_or_else(|| Error::EinsteinUnavailable(self.name().into()))?;
                let (mu, j) = constraints(jet, curv);
                let spatial = match policy {
                    EinsteinPolicy::AssumeVacuum => Matrix3::zeros(),
                    EinsteinPolicy::ConstantLambda(lambda) => -jet.g * *lambda,
                    EinsteinPolicy::Explicit(p) => jet.g * p.value(x),
                };
                Ok(EinsteinData { mu, j, spatial })
            }
            _ => {
                let lambda = self.lambda().unwrap();
                Ok(EinsteinData {
                    mu: lambda,
                    j: Vector3::zeros(),
                    spatial: -jet.g * lambda,
                })
            }
        }
    }

    /// Einstein tensor components in the slice frame at `x`.
    pub fn einstein_data(&self, x: &Vector3<f64>) -> Result<EinsteinData> {
        let jet = self.sample(x)?;
        let curv = SliceCurvature::new(&jet);
        self.einstein_from(x, &jet, &curv)
    }

    /// `Ein(a, b)` at `x`.
    pub fn einstein_components(&self, x: &Vector3<f64>, a: &FrameVector, b: &FrameVector) -> Result<f64> {
        Ok(self.einstein_data(x)?.contract(a, b))
    }

    /// Everything the Gauss equations need at `x`.
    pub fn curvature(&self, x: &Vector3<f64>) -> Result<AmbientCurvature> {
        let jet = self.sample(x)?;
        let slice = SliceCurvature::new(&jet);
        let einstein = self.einstein_from(x, &jet, &slice)?;
        Ok(AmbientCurvature { jet, slice, einstein })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn schw() -> AmbientModel {
        AmbientModel::schwarzschild(1.0).unwrap()
    }

    #[test]
    fn schwarzschild_radial_metric() {
        let x = Vector3::new(6.0, 0.0, 8.0);
        let jet = schw().sample(&x).unwrap();
        let r_hat = x / 10.0;
        assert!((r_hat.dot(&(jet.g * r_hat)) - 1.25).abs() < 1e-14);
        let t = Vector3::new(0.0, 1.0, 0.0);
        assert!((t.dot(&(jet.g * t)) - 1.0).abs() < 1e-14);
    }

    #[test]
    fn schwarzschild_rejects_horizon() {
        let err = schw().sample(&Vector3::new(1.5, 0.0, 0.0)).unwrap_err();
        assert!(matches!(err, Error::Domain { point, .. } if point[0] == 1.5));
    }

    #[test]
    fn schwarzschild_derivatives_match_differences() {
        let model = schw();
        let x = Vector3::new(3.1, -2.0, 4.4);
        let jet = model.sample(&x).unwrap();
        let h = 1e-5;
        for k in 0..3 {
            let mut xp = x;
            xp[k] += h;
            let mut xm = x;
            xm[k] -= h;
            let (jp, jm) = (model.sample(&xp).unwrap(), model.sample(&xm).unwrap());
            let fd = (jp.g - jm.g) / (2.0 * h);
            assert!((fd - jet.dg[k]).norm() < 1e-9);
            for l in 0..3 {
                let fd2 = (jp.dg[l] - jm.dg[l]) / (2.0 * h);
                assert!((fd2 - jet.ddg[k][l]).norm() < 1e-8, "{k}{l}");
            }
        }
    }

    #[test]
    fn schwarzschild_radial_ricci() {
        let x = Vector3::new(0.0, 0.0, 10.0);
        let c = schw().curvature(&x).unwrap();
        let jet = &c.jet;
        let nu = x / 10.0 / (x / 10.0).dot(&(jet.g * x / 10.0)).sqrt();
        let ric_nn = nu.dot(&(c.slice.ricci * nu));
        assert!((ric_nn + 2.0 / 1000.0).abs() < 1e-13);
        assert!(c.slice.scalar.abs() < 1e-14);
        assert!((c.rm_null(&nu) + 8.0 / 1000.0).abs() < 1e-13);
    }

    #[test]
    fn vacuum_constraints_vanish() {
        for model in [AmbientModel::minkowski(), schw()] {
            for x in [Vector3::new(10.0, 0.0, 0.0), Vector3::new(-2.5, 3.0, 1.0)] {
                let (mu, j) = model.constraint_densities(&x).unwrap();
                assert!(mu.abs() + j.norm() < 1e-12, "{} {mu} {j}", model.name());
            }
        }
    }

    #[test]
    fn space_form_scalar_curvature() {
        for kappa in [-1.0, -0.25, 1.0] {
            let model = if kappa < 0.0 {
                AmbientModel::hyperbolic(kappa).unwrap()
            } else {
                AmbientModel::spherical(kappa).unwrap()
            };
            let x = Vector3::new(0.3, 0.2, -0.5);
            let c = model.curvature(&x).unwrap();
            assert!((c.slice.scalar - 6.0 * kappa).abs() < 1e-12);
            let ric_expected = 2.0 * kappa * c.jet.g;
            assert!((c.slice.ricci - ric_expected).norm() < 1e-12);
            let (mu, _) = constraints(&c.jet, &c.slice);
            assert!((mu - 3.0 * kappa).abs() < 1e-12);
            assert!((c.einstein.mu - mu).abs() < 1e-12);
        }
        let jet = AmbientModel::hyperbolic(-1.0).unwrap().sample(&Vector3::zeros()).unwrap();
        assert_eq!(jet.g, Matrix3::identity());
    }

    #[test]
    fn hyperbolic_domain_guard() {
        let model = AmbientModel::hyperbolic(-1.0).unwrap();
        assert!(model.sample(&Vector3::new(2.0, 0.0, 0.0)).is_err());
        assert!(model.sample(&Vector3::new(1.99, 0.0, 0.0)).is_ok());
    }

    #[test]
    fn lambda_observer_energy() {
        let model = AmbientModel::cosmological(3.0).unwrap();
        let x = Vector3::new(0.1, 0.2, 0.3);
        let g = model.sample(&x).unwrap().g;
        let nu = Vector3::new(1.0, 0.0, 0.0) / g[(0, 0)].sqrt();
        let (h, p) = (2.0, 0.7);
        let u = FrameVector::observer(nu, h, p);
        let direct = model.einstein_components(&x, &u, &u).unwrap();
        assert!((direct - 3.0).abs() < 1e-12);
        // null-frame expression with θℓ = H + P, θk = −H + P
        let (tl, tk) = (h + p, -h + p);
        let (l, k) = (FrameVector::ell(nu), FrameVector::k(nu));
        let e = |a, b| model.einstein_components(&x, a, b).unwrap();
        let rhs = e(&l, &k) - tk / (2.0 * tl) * e(&l, &l) - tl / (2.0 * tk) * e(&k, &k);
        assert!((rhs - 2.0 * direct).abs() < 1e-12);
    }

    #[test]
    fn einstein_symmetry() {
        let model = AmbientModel::cosmological(-1.7).unwrap();
        let x = Vector3::new(0.4, -0.1, 0.2);
        let a = FrameVector { n: 0.3, spatial: Vector3::new(1.0, 2.0, -1.0) };
        let b = FrameVector { n: -1.2, spatial: Vector3::new(0.5, 0.0, 0.7) };
        let ab = model.einstein_components(&x, &a, &b).unwrap();
        let ba = model.einstein_components(&x, &b, &a).unwrap();
        assert!((ab - ba).abs() < 1e-14);
    }

    fn custom(phi: &str, k_scale: f64, einstein: Option<EinsteinPolicy>) -> AmbientModel {
        AmbientModel::custom(CustomData {
            phi: ScalarField::parse(phi).unwrap(),
            k_scale,
            k_extra: None,
            einstein,
        })
    }

    #[test]
    fn custom_requires_einstein_policy() {
        let model = custom("1", 0.0, None);
        let x = Vector3::zeros();
        let err = model
            .einstein_components(&x, &FrameVector::normal(), &FrameVector::normal())
            .unwrap_err();
        assert!(matches!(err, Error::EinsteinUnavailable(_)));
        assert!(err.to_string().contains("Einstein data unavailable"));
    }

    #[test]
    fn hyperboloid_slice_is_vacuum() {
        let a = 2.0;
        let model = custom(
            &format!("(1 - r^2/{})^(-0.5)", 4.0 * a * a),
            1.0 / a,
            Some(EinsteinPolicy::AssumeVacuum),
        );
        for x in [Vector3::new(0.5, 0.3, -0.2), Vector3::new(1.0, 1.0, 1.0)] {
            let (mu, j) = model.constraint_densities(&x).unwrap();
            assert!(mu.abs() < 1e-12 && j.norm() < 1e-12, "{mu} {j}");
        }
    }

    /// Scalar curvature of `φ⁴δ` by central differences of the metric itself.
    fn fd_scalar_curvature(phi: impl Fn(&Vector3<f64>) -> f64, x: &Vector3<f64>) -> f64 {
        let h = 2e-4;
        let metric = |p: &Vector3<f64>| Matrix3::identity() * phi(p).powi(4);
        let e = |k: usize| Vector3::from_fn(|i, _| if i == k { h } else { 0.0 });
        let mut jet = DataJet::flat();
        jet.g = metric(x);
        for k in 0..3 {
            jet.dg[k] = (metric(&(x + e(k))) - metric(&(x - e(k)))) / (2.0 * h);
            for l in 0..3 {
                jet.ddg[l][k] = (metric(&(x + e(k) + e(l))) - metric(&(x + e(k) - e(l)))
                    - metric(&(x - e(k) + e(l)))
                    + metric(&(x - e(k) - e(l))))
                    / (4.0 * h * h);
            }
        }
        SliceCurvature::new(&jet).scalar
    }

    #[test]
    fn custom_energy_density_matches_difference_oracle() {
        let model = custom("1 + exp(-r^2)", 0.0, Some(EinsteinPolicy::AssumeVacuum));
        let x = Vector3::new(0.6, 0.0, 0.8);
        let (mu, _) = model.constraint_densities(&x).unwrap();
        let sc = fd_scalar_curvature(|p| 1.0 + (-p.norm_squared()).exp(), &x);
        assert!((mu - 0.5 * sc).abs() < 1e-6, "{mu} vs {}", 0.5 * sc);
        // conformal formula Sc = −8 φ⁻⁵ Δφ
        let s: f64 = 1.0;
        let phi = 1.0 + (-s).exp();
        let lap = (-6.0 + 4.0 * s) * (-s).exp();
        assert!((mu - 0.5 * (-8.0 * lap / phi.powi(5))).abs() < 1e-12);
    }

    #[test]
    fn custom_extra_k_components_and_momentum() {
        let fields = ["0.1*x", "0", "0", "0", "0", "0"].map(|s| ScalarField::parse(s).unwrap());
        let model = AmbientModel::custom(CustomData {
            phi: ScalarField::parse("1").unwrap(),
            k_scale: 0.0,
            k_extra: Some(Box::new(fields)),
            einstein: Some(EinsteinPolicy::AssumeVacuum),
        });
        let (_, j) = model.constraint_densities(&Vector3::new(1.0, 2.0, 3.0)).unwrap();
        // J_i = ∂_j K_ij − ∂_i tr K = 0.1 − 0.1 along x
        assert!(j.norm() < 1e-14);
        let fields = ["0", "0.2*y", "0", "0", "0", "0"].map(|s| ScalarField::parse(s).unwrap());
        let model = AmbientModel::custom(CustomData {
            phi: ScalarField::parse("1").unwrap(),
            k_scale: 0.0,
            k_extra: Some(Box::new(fields)),
            einstein: Some(EinsteinPolicy::AssumeVacuum),
        });
        let (_, j) = model.constraint_densities(&Vector3::new(1.0, 2.0, 3.0)).unwrap();
        assert!((j - Vector3::new(0.2, 0.0, 0.0)).norm() < 1e-14);
    }

    #[test]
    fn placement_helpers() {
        let h = AmbientModel::hyperbolic(-1.0).unwrap();
        let big_r = h.chart_radius_for_geodesic(1.0).unwrap();
        assert!((big_r - 2.0 * 0.5f64.tanh()).abs() < 1e-15);
        let s = 1.0 - big_r * big_r / 4.0;
        let areal = big_r / s;
        assert!((areal - 1.0f64.sinh()).abs() < 1e-12);
        assert!((h.chart_radius_for_areal(areal).unwrap() - big_r).abs() < 1e-12);
        let sph = AmbientModel::cosmological(3.0).unwrap();
        assert!((sph.chart_radius_for_geodesic(std::f64::consts::FRAC_PI_2).unwrap() - 2.0).abs() < 1e-12);
    }
}
