use std::collections::HashMap;
use std::fmt::Write as _;
use std::path::Path;

use nalgebra::{Matrix3, Vector3};

use crate::error::{Error, Result};

pub const MAX_LEVEL: u32 = 8;

/// A triangulated topological sphere in chart coordinates. Faces are
/// counterclockwise seen from outside.
#[derive(Clone, Debug, PartialEq)]
pub struct SurfaceMesh {
    pub vertices: Vec<Vector3<f64>>,
    pub faces: Vec<[usize; 3]>,
    pub level: Option<u32>,
    /// Unit directions on the round sphere, one per vertex.
    pub parametrization: Option<Vec<Vector3<f64>>>,
}

fn icosahedron() -> (Vec<Vector3<f64>>, Vec<[usize; 3]>) {
    let t = (1.0 + 5f64.sqrt()) / 2.0;
    let v = [
        [-1.0, t, 0.0],
        [1.0, t, 0.0],
        [-1.0, -t, 0.0],
        [1.0, -t, 0.0],
        [0.0, -1.0, t],
        [0.0, 1.0, t],
        [0.0, -1.0, -t],
        [0.0, 1.0, -t],
        [t, 0.0, -1.0],
        [t, 0.0, 1.0],
        [-t, 0.0, -1.0],
        [-t, 0.0, 1.0],
    ];
    let faces = vec![
        [0, 11, 5],
        [0, 5, 1],
        [0, 1, 7],
        [0, 7, 10],
        [0, 10, 11],
        [1, 5, 9],
        [5, 11, 4],
        [11, 10, 2],
        [10, 7, 6],
        [7, 1, 8],
        [3, 9, 4],
        [3, 4, 2],
        [3, 2, 6],
        [3, 6, 8],
        [3, 8, 9],
        [4, 9, 5],
        [2, 4, 11],
        [6, 2, 10],
        [8, 6, 7],
        [9, 8, 1],
    ];
    let verts = v.iter().map(|p| Vector3::from(*p).normalize()).collect();
    (verts, faces)
}

impl SurfaceMesh {
    /// Subdivided icosahedron projected to the chart sphere of the given
    /// radius about `center`.
    pub fn icosphere(level: u32, radius: f64, center: Vector3<f64>) -> Result<Self> {
        if level > MAX_LEVEL {
            return Err(Error::Size(format!(
                "subdivision level {level} exceeds the limit {MAX_LEVEL}"
            )));
        }
        if !(radius > 0.0) {
            return Err(Error::Geometry(format!("sphere radius must be positive, got {radius}")));
        }
        let (mut dirs, mut faces) = icosahedron();
        for _ in 0..level {
            let mut cache: HashMap<(usize, usize), usize> = HashMap::new();
            let mut next = Vec::with_capacity(faces.len() * 4);
            let mut midpoint = |a: usize, b: usize, dirs: &mut Vec<Vector3<f64>>| {
                let key = (a.min(b), a.max(b));
                *cache.entry(key).or_insert_with(|| {
                    dirs.push((dirs[a] + dirs[b]).normalize());
                    dirs.len() - 1
                })
            };
            for &[a, b, c] in &faces {
                let ab = midpoint(a, b, &mut dirs);
                let bc = midpoint(b, c, &mut dirs);
                let ca = midpoint(c, a, &mut dirs);
                next.extend_from_slice(&[[a, ab, ca], [b, bc, ab], [c, ca, bc], [ab, bc, ca]]);
            }
            faces = next;
        }
        let vertices = dirs.iter().map(|u| center + radius * u).collect();
        Ok(SurfaceMesh {
            vertices,
            faces,
            level: Some(level),
            parametrization: Some(dirs),
        })
    }

    /// Moves each vertex to `center + ρ(u) u` along its stored direction.
    pub fn radial_graph(&self, rho: impl Fn(&Vector3<f64>) -> f64, center: Vector3<f64>) -> Result<Self> {
        let dirs = self
            .parametrization
            .as_ref()
            .ok_or_else(|| Error::Geometry("radial graph needs a sphere parametrization".into()))?;
        let mut vertices = Vec::with_capacity(dirs.len());
        for (i, u) in dirs.iter().enumerate() {
            let r = rho(u);
            if !(r > 0.0 && r.is_finite()) {
                return Err(Error::Geometry(format!("radial function is {r} at vertex {i}")));
            }
            vertices.push(center + r * u);
        }
        Ok(SurfaceMesh {
            vertices,
            faces: self.faces.clone(),
            level: self.level,
            parametrization: self.parametrization.clone(),
        })
    }

    pub fn vertex_count(&self) -> usize {
        self.vertices.len()
    }

    pub fn edge_count(&self) -> usize {
        self.edge_faces().len()
    }

    pub fn euler_characteristic(&self) -> i64 {
        self.vertices.len() as i64 - self.edge_count() as i64 + self.faces.len() as i64
    }

    /// Undirected edges with the faces bordering them.
    fn edge_faces(&self) -> HashMap<(usize, usize), Vec<usize>> {
        let mut map: HashMap<(usize, usize), Vec<usize>> = HashMap::new();
        for (f, tri) in self.faces.iter().enumerate() {
            for k in 0..3 {
                let (a, b) = (tri[k], tri[(k + 1) % 3]);
                map.entry((a.min(b), a.max(b))).or_default().push(f);
            }
        }
        map
    }

    /// Checks the closed oriented sphere invariants.
    pub fn validate(&self) -> Result<()> {
        let n = self.vertices.len();
        for (f, tri) in self.faces.iter().enumerate() {
            if tri.iter().any(|&v| v >= n) || tri[0] == tri[1] || tri[1] == tri[2] || tri[0] == tri[2] {
                return Err(Error::Geometry(format!("face {f} has invalid vertex indices {tri:?}")));
            }
            let [a, b, c] = tri.map(|v| self.vertices[v]);
            if (b - a).cross(&(c - a)).norm() <= 1e-14 * (b - a).norm_squared().max(f64::MIN_POSITIVE) {
                return Err(Error::Geometry(format!("face {f} is degenerate")));
            }
        }
        let mut directed: HashMap<(usize, usize), usize> = HashMap::new();
        for tri in &self.faces {
            for k in 0..3 {
                *directed.entry((tri[k], tri[(k + 1) % 3])).or_default() += 1;
            }
        }
        for (&(a, b), &count) in &directed {
            if count != 1 || directed.get(&(b, a)) != Some(&1) {
                return Err(Error::Geometry(format!(
                    "edge ({a}, {b}) is not shared by exactly two consistently oriented faces"
                )));
            }
        }
        let mut used = vec![false; n];
        self.faces.iter().flatten().for_each(|&v| used[v] = true);
        if let Some(v) = used.iter().position(|u| !u) {
            return Err(Error::Geometry(format!("vertex {v} belongs to no face")));
        }
        let chi = self.euler_characteristic();
        if chi != 2 {
            return Err(Error::Geometry(format!("Euler characteristic {chi}, expected 2")));
        }
        Ok(())
    }

    /// Incident faces of each vertex, in face order.
    pub fn vertex_faces(&self) -> Vec<Vec<usize>> {
        let mut out = vec![Vec::new(); self.vertices.len()];
        for (f, tri) in self.faces.iter().enumerate() {
            for &v in tri {
                out[v].push(f);
            }
        }
        out
    }

    /// Sorted one-ring neighbours of each vertex.
    pub fn neighbors(&self) -> Vec<Vec<usize>> {
        let mut out = vec![Vec::new(); self.vertices.len()];
        for tri in &self.faces {
            for k in 0..3 {
                let (a, b) = (tri[k], tri[(k + 1) % 3]);
                out[a].push(b);
                out[b].push(a);
            }
        }
        for list in &mut out {
            list.sort_unstable();
            list.dedup();
        }
        out
    }

    /// Applies `x ↦ R x + t` to every vertex (and `R` to the parametrization).
    pub fn transformed(&self, rotation: &Matrix3<f64>, translation: Vector3<f64>) -> Self {
        SurfaceMesh {
            vertices: self.vertices.iter().map(|x| rotation * x + translation).collect(),
            faces: self.faces.clone(),
            level: self.level,
            parametrization: self
                .parametrization
                .as_ref()
                .map(|d| d.iter().map(|u| rotation * u).collect()),
        }
    }

    pub fn scaled(&self, factor: f64) -> Self {
        SurfaceMesh {
            vertices: self.vertices.iter().map(|x| x * factor).collect(),
            ..self.clone()
        }
    }

    pub fn to_off(&self) -> String {
        let mut s = String::new();
        writeln!(s, "OFF").unwrap();
        writeln!(s, "{} {} {}", self.vertices.len(), self.faces.len(), self.edge_count()).unwrap();
        for v in &self.vertices {
            writeln!(s, "{:e} {:e} {:e}", v[0], v[1], v[2]).unwrap();
        }
        for f in &self.faces {
            writeln!(s, "3 {} {} {}", f[0], f[1], f[2]).unwrap();
        }
        s
    }

    /// Reads an ASCII OFF triangle mesh. `#` starts a comment.
    pub fn from_off(text: &str) -> Result<Self> {
        let mut tokens = text
            .lines()
            .map(|l| l.split('#').next().unwrap_or(""))
            .flat_map(str::split_whitespace);
        let bad = |m: &str| Error::Parse(format!("OFF: {m}"));
        if tokens.next() != Some("OFF") {
            return Err(bad("missing OFF header"));
        }
        let mut count = |what: &str| -> Result<usize> {
            tokens
                .next()
                .and_then(|t| t.parse().ok())
                .ok_or_else(|| bad(&format!("bad {what}")))
        };
        let nv = count("vertex count")?;
        let nf = count("face count")?;
        let _ne = count("edge count")?;
        let mut vertices = Vec::with_capacity(nv);
        let mut next_f64 = || -> Result<f64> {
            tokens
                .next()
                .and_then(|t| t.parse().ok())
                .ok_or_else(|| bad("bad coordinate"))
        };
        for _ in 0..nv {
            vertices.push(Vector3::new(next_f64()?, next_f64()?, next_f64()?));
        }
        let mut faces = Vec::with_capacity(nf);
        for f in 0..nf {
            let k = next_f64()? as usize;
            if k != 3 {
                return Err(bad(&format!("face {f} has {k} vertices, only triangles are supported")));
            }
            let idx = [next_f64()?, next_f64()?, next_f64()?].map(|v| v as usize);
            faces.push(idx);
        }
        Ok(SurfaceMesh {
            vertices,
            faces,
            level: None,
            parametrization: None,
        })
    }

    pub fn write_off(&self, path: impl AsRef<Path>) -> Result<()> {
        std::fs::write(path, self.to_off())?;
        Ok(())
    }

    pub fn read_off(path: impl AsRef<Path>) -> Result<Self> {
        Self::from_off(&std::fs::read_to_string(path)?)
    }

    /// Radial projection about `center`, usable as a parametrization for
    /// star-shaped surfaces.
    pub fn with_radial_parametrization(mut self, center: Vector3<f64>) -> Self {
        self.parametrization = Some(self.vertices.iter().map(|x| (x - center).normalize()).collect());
        self
    }
}

/// Per-vertex fields as CSV, one row per vertex.
pub fn fields_csv(columns: &[(&str, &[f64])]) -> String {
    let mut s = String::from("vertex");
    for (name, _) in columns {
        s.push(',');
        s.push_str(name);
    }
    s.push('\n');
    let n = columns.first().map_or(0, |c| c.1.len());
    for i in 0..n {
        write!(s, "{i}").unwrap();
        for (_, col) in columns {
            write!(s, ",{:e}", col[i]).unwrap();
        }
        s.push('\n');
    }
    s
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn icosphere_counts() {
        let m0 = SurfaceMesh::icosphere(0, 1.0, Vector3::zeros()).unwrap();
        assert_eq!((m0.vertex_count(), m0.faces.len()), (12, 20));
        assert_eq!(m0.euler_characteristic(), 2);
        for level in 1..=4 {
            let m = SurfaceMesh::icosphere(level, 1.0, Vector3::zeros()).unwrap();
            assert_eq!(m.vertex_count(), 10 * 4usize.pow(level) + 2);
            m.validate().unwrap();
        }
        let m3 = SurfaceMesh::icosphere(3, 1.0, Vector3::zeros()).unwrap();
        assert_eq!((m3.vertex_count(), m3.faces.len()), (642, 1280));
        assert!(matches!(
            SurfaceMesh::icosphere(9, 1.0, Vector3::zeros()),
            Err(Error::Size(_))
        ));
    }

    #[test]
    fn faces_point_outward() {
        let m = SurfaceMesh::icosphere(2, 1.0, Vector3::zeros()).unwrap();
        for f in &m.faces {
            let [a, b, c] = f.map(|v| m.vertices[v]);
            let n = (b - a).cross(&(c - a));
            assert!(n.dot(&(a + b + c)) > 0.0);
        }
    }

    #[test]
    fn icosphere_radius_and_center() {
        let c = Vector3::new(1.0, -2.0, 0.5);
        let m = SurfaceMesh::icosphere(2, 10.0, c).unwrap();
        assert!(m.vertices.iter().all(|v| ((v - c).norm() - 10.0).abs() < 1e-12));
    }

    #[test]
    fn radial_graphs() {
        let m = SurfaceMesh::icosphere(2, 1.0, Vector3::zeros()).unwrap();
        let same = m.radial_graph(|_| 1.0, Vector3::zeros()).unwrap();
        for (a, b) in same.vertices.iter().zip(&m.vertices) {
            assert!((a - b).norm() < 1e-15);
        }
        let ell = m
            .radial_graph(|u| 1.0 / (u.x * u.x + u.y * u.y + u.z * u.z / 1.44).sqrt(), Vector3::zeros())
            .unwrap();
        for v in &ell.vertices {
            assert!((v.x * v.x + v.y * v.y + v.z * v.z / 1.44 - 1.0).abs() < 1e-12);
        }
        let err = m.radial_graph(|u| u.z, Vector3::zeros()).unwrap_err();
        assert!(err.to_string().contains("vertex"));
    }

    #[test]
    fn validation_catches_defects() {
        let mut m = SurfaceMesh::icosphere(1, 1.0, Vector3::zeros()).unwrap();
        m.faces[0].swap(1, 2);
        assert!(m.validate().is_err());
        let mut m = SurfaceMesh::icosphere(1, 1.0, Vector3::zeros()).unwrap();
        m.faces.pop();
        assert!(m.validate().is_err());
    }

    #[test]
    fn off_round_trip() {
        let m = SurfaceMesh::icosphere(1, 2.0, Vector3::new(0.1, 0.2, 0.3)).unwrap();
        let back = SurfaceMesh::from_off(&m.to_off()).unwrap();
        assert_eq!(back.faces, m.faces);
        for (a, b) in back.vertices.iter().zip(&m.vertices) {
            assert!((a - b).norm() < 1e-14);
        }
        assert!(SurfaceMesh::from_off("OFF\n3 1 0\n0 0 0\n").is_err());
    }

    #[test]
    fn csv_layout() {
        let s = fields_csv(&[("a", &[1.0, 2.0]), ("b", &[3.0, 4.0])]);
        assert!(s.starts_with("vertex,a,b\n0,"));
        assert_eq!(s.lines().count(), 3);
    }
}
