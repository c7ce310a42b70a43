use nalgebra::{Matrix2, Matrix3, Matrix3x2, Vector2, Vector3};

use super::SurfaceMesh;
use crate::ambient::{AmbientModel, Connection};
use crate::error::{Error, Result};

/// First and second fundamental forms and null-geometry fields of a mesh
/// embedded in an ambient slice.
///
/// Tangent tensors at vertex `i` are stored in the `g`-orthonormal frame
/// `tangent[i]`, so norms are plain Frobenius norms.
#[derive(Clone, Debug)]
pub struct InducedGeometry {
    pub mesh: SurfaceMesh,
    /// Induced metric of each face in its edge basis `(x₁ − x₀, x₂ − x₀)`.
    pub face_metric: Vec<Matrix2<f64>>,
    /// Flat triangle areas, as used by piecewise linear elements.
    pub face_area: Vec<f64>,
    /// Mixed Voronoi area of each vertex (circumcentric on acute faces,
    /// half/quarter splits on obtuse ones), with the curved-patch correction
    /// of each face distributed in the same proportions.
    pub vertex_area: Vec<f64>,
    /// Total area, corrected to fourth order for the bending of each patch.
    pub area: f64,
    /// Outward unit normal `ν` within the slice, chart components.
    pub normal: Vec<Vector3<f64>>,
    pub tangent: Vec<[Vector3<f64>; 2]>,
    /// Slice metric at each vertex.
    pub vertex_metric: Vec<Matrix3<f64>>,
    pub b: Vec<Matrix2<f64>>,
    pub b_tf: Vec<Matrix2<f64>>,
    pub mean_curvature: Vec<f64>,
    pub k_tan: Vec<Matrix2<f64>>,
    pub p: Vec<f64>,
    pub s_ell: Vec<Vector2<f64>>,
    pub theta_l: Vec<f64>,
    pub theta_k: Vec<f64>,
    pub chi_l_tf: Vec<Matrix2<f64>>,
    pub chi_k_tf: Vec<Matrix2<f64>>,
    pub scalar_curvature: Vec<f64>,
    /// `∇f(i) = Σ w (f(j) − f(i))` over the one-ring, in the vertex frame.
    grad_stencil: Vec<Vec<(usize, Vector2<f64>)>>,
}

fn trace_free(m: &Matrix2<f64>) -> Matrix2<f64> {
    m - Matrix2::identity() * (0.5 * m.trace())
}

fn sym_norm2(m: &Matrix2<f64>) -> f64 {
    m.norm_squared()
}

impl InducedGeometry {
    pub fn new(mesh: &SurfaceMesh, model: &AmbientModel) -> Result<Self> {
        let n = mesh.vertices.len();
        if mesh.faces.is_empty() {
            return Err(Error::Geometry("mesh has no faces".into()));
        }
        let neighbors = mesh.neighbors();

        let mut vertex_jets = Vec::with_capacity(n);
        for x in &mesh.vertices {
            vertex_jets.push(model.sample(x)?);
        }
        let vertex_metric: Vec<Matrix3<f64>> = vertex_jets.iter().map(|j| j.g).collect();

        // Regge metric: one length per edge, integrated along the chart segment
        let mut edge_len = std::collections::HashMap::with_capacity(3 * mesh.faces.len() / 2);
        for tri in &mesh.faces {
            for (a, b) in [(0, 1), (1, 2), (0, 2)] {
                let key = (tri[a].min(tri[b]), tri[a].max(tri[b]));
                if !edge_len.contains_key(&key) {
                    let len = segment_length(model, &mesh.vertices[key.0], &mesh.vertices[key.1])?;
                    edge_len.insert(key, len);
                }
            }
        }
        let nf = mesh.faces.len();
        let mut face_frame = Vec::with_capacity(nf);
        let mut face_metric = Vec::with_capacity(nf);
        let mut face_area = Vec::with_capacity(nf);
        let mut face_g = Vec::with_capacity(nf);
        for (f, tri) in mesh.faces.iter().enumerate() {
            let [x0, x1, x2] = tri.map(|v| mesh.vertices[v]);
            let len2 = |a: usize, b: usize| edge_len[&(tri[a].min(tri[b]), tri[a].max(tri[b]))].powi(2);
            let (l01, l02, l12) = (len2(0, 1), len2(0, 2), len2(1, 2));
            let off = 0.5 * (l01 + l02 - l12);
            let h = Matrix2::new(l01, off, off, l02);
            let det = h.determinant();
            if !(det > 0.0) || !det.is_finite() {
                return Err(Error::Geometry(format!("face {f} is degenerate after embedding")));
            }
            face_frame.push(Matrix3x2::from_columns(&[x1 - x0, x2 - x0]));
            face_g.push(model.sample(&((x0 + x1 + x2) / 3.0))?.g);
            face_metric.push(h);
            face_area.push(0.5 * det.sqrt());
        }

        // mixed areas, and chart normals with weights that are exact for
        // rings inscribed in a round sphere
        let mut face_share = Vec::with_capacity(nf);
        let mut vertex_area = vec![0.0; n];
        let mut chart_normal = vec![Vector3::<f64>::zeros(); n];
        for (f, tri) in mesh.faces.iter().enumerate() {
            let share = mixed_area(&face_metric[f], face_area[f]);
            for k in 0..3 {
                let (i, j, l) = (tri[k], tri[(k + 1) % 3], tri[(k + 2) % 3]);
                vertex_area[i] += share[k];
                let (a, b) = (mesh.vertices[j] - mesh.vertices[i], mesh.vertices[l] - mesh.vertices[i]);
                chart_normal[i] += a.cross(&b) / (a.norm_squared() * b.norm_squared());
            }
            face_share.push(share);
        }

        let mut normal = Vec::with_capacity(n);
        let mut tangent = Vec::with_capacity(n);
        for i in 0..n {
            let c = chart_normal[i];
            let len = c.norm();
            if !(len > 0.0) {
                return Err(Error::Geometry(format!("vanishing normal at vertex {i}")));
            }
            chart_normal[i] = c / len;
            let g = &vertex_metric[i];
            let raised = g.try_inverse().unwrap() * chart_normal[i];
            let nu = raised / chart_normal[i].dot(&raised).sqrt();
            normal.push(nu);
            tangent.push(tangent_frame(g, &nu, &chart_normal[i]));
        }

        let grad_stencil: Vec<Vec<(usize, Vector2<f64>)>> = (0..n)
            .map(|i| {
                let t: Vec<Vector2<f64>> = neighbors[i]
                    .iter()
                    .map(|&j| {
                        let e = vertex_metric[i] * (mesh.vertices[j] - mesh.vertices[i]);
                        Vector2::new(tangent[i][0].dot(&e), tangent[i][1].dot(&e))
                    })
                    .collect();
                let weights = ring_gradient_weights(&t)
                    .ok_or_else(|| Error::Geometry(format!("gradient stencil is singular at vertex {i}")))?;
                Ok(neighbors[i].iter().copied().zip(weights).collect())
            })
            .collect::<Result<Vec<_>>>()?;

        let mut b = Vec::with_capacity(n);
        let mut b_tf = Vec::with_capacity(n);
        let mut mean_curvature = Vec::with_capacity(n);
        let mut k_tan = Vec::with_capacity(n);
        let mut p = Vec::with_capacity(n);
        let mut s_ell = Vec::with_capacity(n);
        let mut chart_form = Vec::with_capacity(n);
        for i in 0..n {
            let g = &vertex_metric[i];
            let nn = chart_normal[i];
            let [e1, e2] = tangent[i];
            let (ge1, ge2) = (g * e1, g * e2);

            // chart shape operator from the normal curvatures of the ring
            // chords; exact when the ring lies on a round sphere
            let nu = normal[i];
            let mut ata = nalgebra::Matrix5::<f64>::zeros();
            let mut atb = nalgebra::Vector5::<f64>::zeros();
            for &j in &neighbors[i] {
                let e = mesh.vertices[j] - mesh.vertices[i];
                let (t1, t2) = (ge1.dot(&e), ge2.dot(&e));
                let x = e - nu * nu.dot(&(g * e));
                let (ee, xx) = (e.norm_squared(), x.norm_squared());
                let row = nalgebra::Vector5::new(
                    2.0 * t1 / ee,
                    2.0 * t2 / ee,
                    t1 * t1 / xx,
                    2.0 * t1 * t2 / xx,
                    t2 * t2 / xx,
                );
                ata += row * row.transpose();
                atb += row * (2.0 * nn.dot(&e) / ee);
            }
            let sol = ata
                .try_inverse()
                .map(|inv| inv * atb)
                .ok_or_else(|| Error::Geometry(format!("shape operator fit is singular at vertex {i}")))?;
            let b_chart = -Matrix2::new(sol[2], sol[3], sol[3], sol[4]);

            // second fundamental form for the slice metric
            let conn = Connection::new(&vertex_jets[i]);
            let g_inv = g.try_inverse().unwrap();
            let scale = nn.dot(&(g_inv * nn)).sqrt();
            let gamma_n = |u: &Vector3<f64>, v: &Vector3<f64>| nn.dot(&conn.apply(u, v));
            let frame = [e1, e2];
            let bg = Matrix2::from_fn(|a, c| (b_chart[(a, c)] - gamma_n(&frame[a], &frame[c])) / scale);
            let bg = 0.5 * (bg + bg.transpose());
            let lowered = Matrix3x2::from_columns(&[ge1, ge2]);
            chart_form.push(lowered * bg * lowered.transpose());
            let hm = bg.trace();
            mean_curvature.push(hm);
            b_tf.push(trace_free(&bg));
            b.push(bg);

            let kmat = &vertex_jets[i].k;
            let kt = Matrix2::from_fn(|a, c| frame[a].dot(&(kmat * frame[c])));
            p.push(kt.trace());
            s_ell.push(Vector2::new(e1.dot(&(kmat * normal[i])), e2.dot(&(kmat * normal[i]))));
            k_tan.push(kt);
        }

        for (f, tri) in mesh.faces.iter().enumerate() {
            let d = [(0, 1), (1, 2), (0, 2)].map(|(a, b)| {
                let (i, j) = (tri[a], tri[b]);
                let e = mesh.vertices[j] - mesh.vertices[i];
                let beta = 0.5 * (e.dot(&(chart_form[i] * e)) + e.dot(&(chart_form[j] * e)));
                (normal[i] + normal[j]) * (0.25 * beta)
            });
            let flat = curved_area(&face_frame[f], &face_g[f], &[Vector3::zeros(); 3]);
            let bend = curved_area(&face_frame[f], &face_g[f], &d) - flat;
            for k in 0..3 {
                vertex_area[tri[k]] += bend * face_share[f][k] / face_area[f];
            }
        }
        let area: f64 = vertex_area.iter().sum();

        let theta_l: Vec<f64> = (0..n).map(|i| mean_curvature[i] + p[i]).collect();
        let theta_k: Vec<f64> = (0..n).map(|i| -mean_curvature[i] + p[i]).collect();
        let chi_l_tf = (0..n).map(|i| trace_free(&k_tan[i]) + b_tf[i]).collect();
        let chi_k_tf = (0..n).map(|i| trace_free(&k_tan[i]) - b_tf[i]).collect();

        // angle defect
        let mut angle_sum = vec![0.0; n];
        for (f, tri) in mesh.faces.iter().enumerate() {
            let h = &face_metric[f];
            let cross = h.determinant().sqrt();
            let dots = [h[(0, 1)], h[(0, 0)] - h[(0, 1)], h[(1, 1)] - h[(0, 1)]];
            for k in 0..3 {
                angle_sum[tri[k]] += cross.atan2(dots[k]);
            }
        }
        let scalar_curvature = (0..n)
            .map(|i| 2.0 * (2.0 * std::f64::consts::PI - angle_sum[i]) / vertex_area[i])
            .collect();

        Ok(InducedGeometry {
            mesh: mesh.clone(),
            face_metric,
            face_area,
            vertex_area,
            area,
            normal,
            tangent,
            vertex_metric,
            b,
            b_tf,
            mean_curvature,
            k_tan,
            p,
            s_ell,
            theta_l,
            theta_k,
            chi_l_tf,
            chi_k_tf,
            scalar_curvature,
            grad_stencil,
        })
    }

    pub fn vertex_count(&self) -> usize {
        self.vertex_area.len()
    }

    pub fn integrate(&self, field: &[f64]) -> f64 {
        field.iter().zip(&self.vertex_area).map(|(f, a)| f * a).sum()
    }

    /// Area-weighted mean.
    pub fn mean(&self, field: &[f64]) -> f64 {
        self.integrate(field) / self.area
    }

    pub fn area_radius(&self) -> f64 {
        (self.area / (4.0 * std::f64::consts::PI)).sqrt()
    }

    /// `θℓ θk = P² − H²` per vertex.
    pub fn theta_product(&self) -> Vec<f64> {
        self.theta_l.iter().zip(&self.theta_k).map(|(a, b)| a * b).collect()
    }

    pub fn b_norm2(&self) -> Vec<f64> {
        self.b.iter().map(sym_norm2).collect()
    }

    /// Tangential gradient of a vertex field in the vertex frames, from a
    /// quadratic least-squares fit over each one-ring.
    pub fn gradient(&self, field: &[f64]) -> Vec<Vector2<f64>> {
        self.grad_stencil
            .iter()
            .enumerate()
            .map(|(i, st)| st.iter().map(|&(j, w)| w * (field[j] - field[i])).sum())
            .collect()
    }
}

/// Rows of the least-squares solution for the gradient part of
/// `f(j) − f(i) ≈ a·t + ½ tᵀC t`; linear fit when the ring is too small.
fn ring_gradient_weights(t: &[Vector2<f64>]) -> Option<Vec<Vector2<f64>>> {
    let quad = |v: &Vector2<f64>| [v.x, v.y, 0.5 * v.x * v.x, v.x * v.y, 0.5 * v.y * v.y];
    if t.len() >= 5 {
        let rows: Vec<[f64; 5]> = t.iter().map(quad).collect();
        let ata = nalgebra::Matrix5::from_fn(|a, b| rows.iter().map(|r| r[a] * r[b]).sum());
        if let Some(inv) = ata.try_inverse() {
            return Some(
                rows.iter()
                    .map(|r| {
                        let x = inv * nalgebra::Vector5::from_row_slice(r);
                        Vector2::new(x[0], x[1])
                    })
                    .collect(),
            );
        }
    }
    let ata: Matrix2<f64> = t.iter().map(|v| v * v.transpose()).sum();
    let inv = ata.try_inverse()?;
    Some(t.iter().map(|v| inv * v).collect())
}

/// Area of the quadratic patch through the corners of a face whose edge
/// midpoints are pushed out by `d[e]` (edges 01, 12, 02), measured with the
/// constant slice metric `g`.
/// Length of the chart segment `a → b` in the slice metric.
fn segment_length(model: &AmbientModel, a: &Vector3<f64>, b: &Vector3<f64>) -> Result<f64> {
    const NODES: [(f64, f64); 3] = [
        (0.1127016653792583, 5.0 / 18.0),
        (0.5, 4.0 / 9.0),
        (0.8872983346207417, 5.0 / 18.0),
    ];
    let e = b - a;
    let mut total = 0.0;
    for (t, w) in NODES {
        let g = model.sample(&(a + e * t))?.g;
        total += w * e.dot(&(g * e)).sqrt();
    }
    Ok(total)
}

fn curved_area(frame: &Matrix3x2<f64>, g: &Matrix3<f64>, d: &[Vector3<f64>; 3]) -> f64 {
    const RULE: [(f64, f64, f64); 2] = [
        (0.816847572980459, 0.091576213509771, 0.109951743655322),
        (0.108103018168070, 0.445948490915965, 0.223381589678011),
    ];
    let (e1, e2) = (frame.column(0).into_owned(), frame.column(1).into_owned());
    let mut total = 0.0;
    for &(p, q, w) in &RULE {
        for l in [[p, q, q], [q, p, q], [q, q, p]] {
            let xs = e1 + d[0] * (l[0] - l[1]) + d[1] * l[2] - d[2] * l[2];
            let xt = e2 - d[0] * l[1] + d[1] * l[1] + d[2] * (l[0] - l[2]);
            let j = Matrix3x2::from_columns(&[xs, xt]);
            total += w * (j.transpose() * g * j).determinant().sqrt();
        }
    }
    0.5 * total
}

/// Mixed Voronoi shares of one face for its three corners.
fn mixed_area(h: &Matrix2<f64>, area: f64) -> [f64; 3] {
    let dots = [h[(0, 1)], h[(0, 0)] - h[(0, 1)], h[(1, 1)] - h[(0, 1)]];
    if let Some(obtuse) = dots.iter().position(|&d| d < 0.0) {
        let mut out = [0.25 * area; 3];
        out[obtuse] = 0.5 * area;
        return out;
    }
    let cross = 2.0 * area;
    let cot = dots.map(|d| d / cross);
    // squared lengths of the edges opposite each corner
    let opp = [h[(0, 0)] + h[(1, 1)] - 2.0 * h[(0, 1)], h[(1, 1)], h[(0, 0)]];
    [
        (opp[2] * cot[2] + opp[1] * cot[1]) / 8.0,
        (opp[2] * cot[2] + opp[0] * cot[0]) / 8.0,
        (opp[1] * cot[1] + opp[0] * cot[0]) / 8.0,
    ]
}

/// A `g`-orthonormal tangent frame `(e₁, e₂)` with `(e₁, e₂, ν)` positively
/// oriented. `c` is the unnormalized normal covector.
fn tangent_frame(g: &Matrix3<f64>, nu: &Vector3<f64>, c: &Vector3<f64>) -> [Vector3<f64>; 2] {
    let axis = c.iamin();
    let mut seed = Vector3::zeros();
    seed[axis] = 1.0;
    let inner = |a: &Vector3<f64>, b: &Vector3<f64>| a.dot(&(g * b));
    let t1 = seed - nu * inner(&seed, nu);
    let e1 = t1 / inner(&t1, &t1).sqrt();
    // annihilated by the normal covector, hence tangent
    let seed2 = c.cross(&e1);
    let t2 = seed2 - e1 * inner(&seed2, &e1);
    let mut e2 = t2 / inner(&t2, &t2).sqrt();
    if Matrix3::from_columns(&[e1, e2, *nu]).determinant() < 0.0 {
        e2 = -e2;
    }
    [e1, e2]
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    fn sphere(level: u32, r: f64) -> SurfaceMesh {
        SurfaceMesh::icosphere(level, r, Vector3::zeros()).unwrap()
    }

    #[test]
    fn round_sphere_in_flat_slice() {
        let geom = InducedGeometry::new(&sphere(4, 1.0), &AmbientModel::minkowski()).unwrap();
        let n = geom.vertex_count();
        for i in 0..n {
            assert!((geom.mean_curvature[i] - 2.0).abs() < 0.01, "{}", geom.mean_curvature[i]);
            assert!(geom.p[i].abs() < 1e-15);
            assert!((geom.theta_l[i] + geom.theta_k[i] - 2.0 * geom.p[i]).abs() < 1e-15);
            assert!(geom.b_tf[i].trace().abs() < 1e-12);
            assert!((geom.normal[i] - geom.mesh.vertices[i]).norm() < 1e-3);
        }
        let tt = geom.mean(&geom.theta_product());
        assert!((tt + 4.0).abs() < 0.04, "{tt}");
        assert!((geom.mean(&geom.scalar_curvature) - 2.0).abs() < 0.01);
        assert!((geom.integrate(&geom.scalar_curvature) - 8.0 * PI).abs() < 1e-10);
    }

    #[test]
    fn area_converges_to_fourth_order() {
        let mut errs = Vec::new();
        for level in 2..=5 {
            let geom = InducedGeometry::new(&sphere(level, 3.0), &AmbientModel::minkowski()).unwrap();
            errs.push((geom.area - 36.0 * PI).abs());
        }
        for w in errs.windows(2) {
            let order = (w[0] / w[1]).log2();
            assert!(order > 3.5, "{order}");
        }
    }

    #[test]
    fn schwarzschild_sphere_mean_curvature() {
        let model = AmbientModel::schwarzschild(1.0).unwrap();
        let geom = InducedGeometry::new(&sphere(4, 10.0), &model).unwrap();
        let expected = 0.2 * 0.8f64.sqrt();
        for &h in &geom.mean_curvature {
            assert!((h - expected).abs() < 1e-10 * expected);
        }
        assert!((geom.mean(&geom.theta_product()) + 0.032).abs() < 1e-4);
        for i in 0..geom.vertex_count() {
            let nu = geom.normal[i];
            assert!((nu.dot(&(geom.vertex_metric[i] * nu)) - 1.0).abs() < 1e-13);
            for e in geom.tangent[i] {
                assert!(e.dot(&(geom.vertex_metric[i] * nu)).abs() < 1e-13);
            }
        }
    }

    #[test]
    fn ellipsoid_mean_curvature_converges() {
        let c = 1.2f64;
        let l1 = |level| {
            let mesh = sphere(level, 1.0)
                .radial_graph(|u| 1.0 / (u.x * u.x + u.y * u.y + u.z * u.z / (c * c)).sqrt(), Vector3::zeros())
                .unwrap();
            let geom = InducedGeometry::new(&mesh, &AmbientModel::minkowski()).unwrap();
            let err: Vec<f64> = (0..geom.vertex_count())
                .map(|i| {
                    let x = geom.mesh.vertices[i];
                    let grad = Vector3::new(2.0 * x.x, 2.0 * x.y, 2.0 * x.z / (c * c));
                    let hess = [2.0, 2.0, 2.0 / (c * c)];
                    let q: f64 = (0..3).map(|k| grad[k] * grad[k] * hess[k]).sum();
                    let exact = (grad.norm_squared() * hess.iter().sum::<f64>() - q) / grad.norm().powi(3);
                    (geom.mean_curvature[i] - exact).abs()
                })
                .collect();
            geom.integrate(&err)
        };
        let (coarse, fine) = (l1(3), l1(5));
        assert!(fine < 2e-3, "{fine}");
        assert!((coarse / fine).log2() / 2.0 > 1.5);
    }

    #[test]
    fn gauss_bonnet_is_exact_on_irregular_meshes() {
        let mesh = sphere(3, 1.0)
            .radial_graph(|u| 1.0 + 0.3 * u.x * u.y + 0.2 * u.z.powi(3), Vector3::new(0.5, 0.0, 0.0))
            .unwrap();
        let geom = InducedGeometry::new(&mesh, &AmbientModel::schwarzschild(0.1).unwrap()).unwrap();
        assert!((geom.integrate(&geom.scalar_curvature) - 8.0 * PI).abs() < 1e-9);
    }

    #[test]
    fn rotation_invariance() {
        let mesh = sphere(3, 1.0)
            .radial_graph(|u| 1.0 + 0.2 * u.z + 0.1 * u.x * u.y, Vector3::zeros())
            .unwrap();
        let rot = nalgebra::Rotation3::from_euler_angles(0.3, -1.1, 2.0).into_inner();
        let model = AmbientModel::minkowski();
        let a = InducedGeometry::new(&mesh, &model).unwrap();
        let b = InducedGeometry::new(&mesh.transformed(&rot, Vector3::zeros()), &model).unwrap();
        assert!((a.area - b.area).abs() < 1e-12 * a.area);
        for i in 0..a.vertex_count() {
            assert!((a.mean_curvature[i] - b.mean_curvature[i]).abs() < 1e-10);
            assert!((a.scalar_curvature[i] - b.scalar_curvature[i]).abs() < 1e-9);
            assert!((sym_norm2(&a.b_tf[i]) - sym_norm2(&b.b_tf[i])).abs() < 1e-10);
        }
    }

    #[test]
    fn gradient_of_linear_function() {
        let geom = InducedGeometry::new(&sphere(4, 1.0), &AmbientModel::minkowski()).unwrap();
        let f: Vec<f64> = geom.mesh.vertices.iter().map(|x| x.z).collect();
        let grad = geom.gradient(&f);
        for i in 0..geom.vertex_count() {
            let x = geom.mesh.vertices[i];
            // |∇z|² = 1 − z² on the unit sphere
            assert!((grad[i].norm_squared() - (1.0 - x.z * x.z)).abs() < 1e-3);
        }
    }
}
