//! Smallest eigenpairs of `A v = λ M v` with `M` diagonal.
//!
//! Everything runs in the symmetric coordinates `y = M^{1/2} x`, where the
//! problem reads `A' y = λ y` with `A' = M^{-1/2} A M^{-1/2}`. Large problems
//! use a block Krylov iteration on `(A' − σ)^{-1}` with full
//! reorthogonalization and thick restarts; small ones are solved densely.

use faer::linalg::solvers::Solve;
use faer::sparse::linalg::solvers::Llt;
use faer::{Mat, Side};
use nalgebra::{DMatrix, DVector, SymmetricEigen};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::{EigenPair, OperatorForms, SolverOptions};
use crate::error::{Error, Result};

struct Problem<'a> {
    forms: &'a OperatorForms,
    weight: f64,
    sqrt_mass: Vec<f64>,
    /// Unit constraint direction `M^{1/2} 1 / ‖·‖` when deflating constants.
    constraint: Option<Vec<f64>>,
    scale: f64,
}

impl Problem<'_> {
    fn apply(&self, y: &[f64]) -> Vec<f64> {
        let x: Vec<f64> = y.iter().zip(&self.sqrt_mass).map(|(a, s)| a / s).collect();
        let mut out = self.forms.apply(self.weight, &x);
        for (o, s) in out.iter_mut().zip(&self.sqrt_mass) {
            *o /= s;
        }
        if let Some(u) = &self.constraint {
            project(&mut out, u);
        }
        out
    }

    fn finish(&self, y: &[f64]) -> EigenPair {
        let value = dot(y, &self.apply(y)) / dot(y, y);
        let norm = dot(y, y).sqrt();
        EigenPair {
            value,
            vector: y.iter().zip(&self.sqrt_mass).map(|(a, s)| a / (s * norm)).collect(),
        }
    }

    fn residual(&self, y: &[f64], lambda: f64) -> f64 {
        let ay = self.apply(y);
        let r: f64 = ay.iter().zip(y).map(|(a, b)| (a - lambda * b).powi(2)).sum();
        r.sqrt() / (dot(y, y).sqrt() * lambda.abs().max(self.scale))
    }
}

pub(super) fn smallest(
    forms: &OperatorForms,
    weight: f64,
    count: usize,
    deflate_constants: bool,
    opts: &SolverOptions,
) -> Result<Vec<EigenPair>> {
    let n = forms.len();
    let dim = if deflate_constants { n.saturating_sub(1) } else { n };
    if count == 0 || count > dim {
        return Err(Error::Size(format!("requested {count} eigenpairs of a {dim}-dimensional problem")));
    }
    if !(weight > 0.0) {
        return Err(Error::Input(format!("stiffness weight must be positive, got {weight}")));
    }
    let sqrt_mass: Vec<f64> = forms.mass.iter().map(|m| m.sqrt()).collect();
    let constraint = deflate_constants.then(|| {
        let norm = dot(&sqrt_mass, &sqrt_mass).sqrt();
        sqrt_mass.iter().map(|s| s / norm).collect()
    });
    let problem = Problem {
        forms,
        weight,
        sqrt_mass,
        constraint,
        scale: weight * 4.0 * std::f64::consts::PI / forms.area(),
    };
    let pairs = if n <= opts.dense_limit {
        dense(&problem, count)
    } else {
        krylov(&problem, count, opts)?
    };
    Ok(pairs)
}

fn dense(p: &Problem, count: usize) -> Vec<EigenPair> {
    let n = p.forms.len();
    let s = &p.sqrt_mass;
    let mut a = p.forms.stiffness.to_dense() * p.weight;
    for i in 0..n {
        a[(i, i)] += p.forms.potential[i] * p.forms.mass[i];
    }
    let a = DMatrix::from_fn(n, n, |i, j| a[(i, j)] / (s[i] * s[j]));

    let (matrix, reflect) = match &p.constraint {
        None => (a, None),
        Some(u) => {
            // Householder reflection taking u to ±e_last
            let mut v = DVector::from_column_slice(u);
            v[n - 1] += if u[n - 1] >= 0.0 { 1.0 } else { -1.0 };
            let v = v.normalize();
            let h = DMatrix::identity(n, n) - 2.0 * &v * v.transpose();
            let b = &h * a * &h;
            (b.view((0, 0), (n - 1, n - 1)).into_owned(), Some(h))
        }
    };
    let eig = SymmetricEigen::new(matrix);
    let mut order: Vec<usize> = (0..eig.eigenvalues.len()).collect();
    order.sort_by(|&i, &j| eig.eigenvalues[i].total_cmp(&eig.eigenvalues[j]));
    order
        .into_iter()
        .take(count)
        .map(|k| {
            let z = eig.eigenvectors.column(k);
            let y: Vec<f64> = match &reflect {
                None => z.iter().copied().collect(),
                Some(h) => {
                    let mut full = DVector::zeros(n);
                    full.rows_mut(0, n - 1).copy_from(&z);
                    (h * full).iter().copied().collect()
                }
            };
            p.finish(&y)
        })
        .collect()
}

struct ShiftInvert<'a> {
    llt: Llt<usize, f64>,
    sqrt_mass: &'a [f64],
    constraint: Option<(Vec<f64>, Vec<f64>, f64)>,
}

impl ShiftInvert<'_> {
    fn raw(&self, b: &[f64]) -> Vec<f64> {
        let mut rhs = Mat::from_fn(b.len(), 1, |i, _| b[i] * self.sqrt_mass[i]);
        self.llt.solve_in_place(rhs.as_mut());
        (0..b.len()).map(|i| rhs[(i, 0)] * self.sqrt_mass[i]).collect()
    }

    fn apply(&self, b: &[f64]) -> Vec<f64> {
        let mut z = self.raw(b);
        if let Some((u, zu, uzu)) = &self.constraint {
            let alpha = dot(u, &z) / uzu;
            for (zi, zui) in z.iter_mut().zip(zu) {
                *zi -= alpha * zui;
            }
            project(&mut z, u);
        }
        z
    }
}

fn krylov(p: &Problem, count: usize, opts: &SolverOptions) -> Result<Vec<EigenPair>> {
    let n = p.forms.len();
    let dim = if p.constraint.is_some() { n - 1 } else { n };
    let q_min = p.forms.potential.iter().copied().fold(f64::INFINITY, f64::min);
    let sigma = q_min - 0.5 * p.scale;
    let diag: Vec<f64> = (0..n).map(|i| (p.forms.potential[i] - sigma) * p.forms.mass[i]).collect();
    let llt = p
        .forms
        .stiffness
        .shifted_csc(p.weight, &diag)
        .sp_cholesky(Side::Lower)
        .map_err(|e| Error::Numerical {
            message: format!("shifted operator is not positive definite: {e:?}"),
            residual: f64::NAN,
        })?;
    let mut op = ShiftInvert {
        llt,
        sqrt_mass: &p.sqrt_mass,
        constraint: None,
    };
    if let Some(u) = &p.constraint {
        let zu = op.raw(u);
        let uzu = dot(u, &zu);
        op.constraint = Some((u.clone(), zu, uzu));
    }

    let block = count.max(3).min(dim);
    let max_basis = (2 * count + 30).max(4 * block).min(dim);
    let keep = (count + block).min(max_basis.saturating_sub(block)).max(count);
    let mut rng = ChaCha8Rng::seed_from_u64(opts.seed);
    let mut basis: Vec<Vec<f64>> = Vec::new();
    let mut images: Vec<Vec<f64>> = Vec::new();
    let mut pending: Vec<Vec<f64>> = (0..block).map(|_| random_vector(&mut rng, n)).collect();
    let mut applications = 0usize;

    loop {
        while basis.len() < max_basis {
            if pending.is_empty() {
                let start = images.len().saturating_sub(block);
                pending = images[start..].to_vec();
            }
            let mut added = false;
            for mut v in std::mem::take(&mut pending) {
                if basis.len() >= max_basis {
                    break;
                }
                if let Some(u) = &p.constraint {
                    project(&mut v, u);
                }
                if !orthonormalize(&mut v, &basis) {
                    v = random_vector(&mut rng, n);
                    if let Some(u) = &p.constraint {
                        project(&mut v, u);
                    }
                    if !orthonormalize(&mut v, &basis) {
                        continue;
                    }
                }
                let w = op.apply(&v);
                applications += 1;
                basis.push(v);
                images.push(w);
                added = true;
            }
            if !added {
                break;
            }
        }

        let m = basis.len();
        let t = DMatrix::from_fn(m, m, |i, j| 0.5 * (dot(&basis[i], &images[j]) + dot(&basis[j], &images[i])));
        let eig = SymmetricEigen::new(t);
        let mut order: Vec<usize> = (0..m).collect();
        order.sort_by(|&i, &j| eig.eigenvalues[j].total_cmp(&eig.eigenvalues[i]));

        let combine = |vs: &[Vec<f64>], k: usize| -> Vec<f64> {
            let c = eig.eigenvectors.column(k);
            let mut out = vec![0.0; n];
            for (v, &ck) in vs.iter().zip(c.iter()) {
                for (o, x) in out.iter_mut().zip(v) {
                    *o += ck * x;
                }
            }
            out
        };

        let mut results = Vec::with_capacity(count);
        let mut unconverged = Vec::new();
        let mut worst = 0.0f64;
        for &k in order.iter().take(count) {
            let y = combine(&basis, k);
            let pair = p.finish(&y);
            let res = p.residual(&y, pair.value);
            worst = worst.max(res);
            if res > opts.tolerance {
                unconverged.push(k);
            }
            results.push(pair);
        }
        if unconverged.is_empty() {
            results.sort_by(|a, b| a.value.total_cmp(&b.value));
            log::debug!("krylov: {count} pairs after {applications} applications");
            return Ok(results);
        }
        if applications >= opts.max_iterations || m >= dim {
            return Err(Error::Numerical {
                message: format!("eigensolver did not converge after {applications} applications"),
                residual: worst,
            });
        }

        // thick restart: keep the leading Ritz vectors, continue from the
        // Krylov residuals of the unconverged ones
        let kept: Vec<usize> = order.iter().take(keep).copied().collect();
        let new_basis: Vec<Vec<f64>> = kept.iter().map(|&k| combine(&basis, k)).collect();
        let new_images: Vec<Vec<f64>> = kept.iter().map(|&k| combine(&images, k)).collect();
        pending = unconverged
            .iter()
            .take(block)
            .map(|&k| {
                let theta = eig.eigenvalues[k];
                let v = combine(&basis, k);
                combine(&images, k).iter().zip(&v).map(|(w, y)| w - theta * y).collect()
            })
            .collect();
        basis = new_basis;
        images = new_images;
    }
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

fn project(v: &mut [f64], u: &[f64]) {
    let c = dot(v, u);
    for (x, ui) in v.iter_mut().zip(u) {
        *x -= c * ui;
    }
}

/// Two passes of Gram–Schmidt; false if `v` is numerically in the span.
fn orthonormalize(v: &mut [f64], basis: &[Vec<f64>]) -> bool {
    let before = dot(v, v).sqrt();
    if !(before > 0.0) {
        return false;
    }
    for _ in 0..2 {
        for b in basis {
            project(v, b);
        }
    }
    let after = dot(v, v).sqrt();
    if after <= 1e-10 * before {
        return false;
    }
    v.iter_mut().for_each(|x| *x /= after);
    true
}

fn random_vector(rng: &mut ChaCha8Rng, n: usize) -> Vec<f64> {
    (0..n).map(|_| rng.random::<f64>() - 0.5).collect()
}
