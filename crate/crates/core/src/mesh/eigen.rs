//! Generalized eigenproblem `S φ = λ M φ` for the cotangent Laplacian with a
//! diagonal mass matrix.

use nalgebra::{DMatrix, SymmetricEigen};
use rand::Rng;
use serde::{Deserialize, Serialize};

use super::laplacian::{Csr, Laplacian};
use crate::error::{Error, Result};
use crate::rng::substream;

/// Required relative residual `‖Sφ − λMφ‖ / ‖Mφ‖`.
pub const EIGEN_RESIDUAL_TOL: f64 = 1e-8;

/// Meshes up to this many vertices use the dense solver under
/// [`EigenMethod::Auto`].
pub const DENSE_LIMIT: usize = 1500;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum EigenMethod {
    #[default]
    Auto,
    Dense,
    /// Shift-invert subspace iteration with conjugate-gradient solves.
    Sparse,
}

/// Eigenpairs in ascending order; eigenvectors are mass-orthonormal columns
/// stored as `vectors[j][vertex]`.
#[derive(Debug, Clone)]
pub struct EigenPairs {
    pub values: Vec<f64>,
    pub vectors: Vec<Vec<f64>>,
}

/// The `count` smallest eigenpairs, including the null space.
pub fn smallest_eigenpairs(lap: &Laplacian, count: usize, method: EigenMethod) -> Result<EigenPairs> {
    let n = lap.mass.len();
    if count == 0 || count > n {
        return Err(Error::Config(format!("cannot extract {count} eigenpairs from {n} vertices")));
    }
    let dense = match method {
        EigenMethod::Dense => true,
        EigenMethod::Sparse => false,
        EigenMethod::Auto => n <= DENSE_LIMIT,
    };
    let mut pairs = if dense {
        dense_pairs(lap, count)
    } else {
        subspace_pairs(lap, count)?
    };
    for v in &mut pairs.vectors {
        fix_sign(v);
    }
    let worst = pairs
        .values
        .iter()
        .zip(&pairs.vectors)
        .map(|(&l, v)| residual(&lap.stiffness, &lap.mass, l, v))
        .fold(0.0, f64::max);
    if !(worst < EIGEN_RESIDUAL_TOL) {
        return Err(Error::Solver { residual: worst });
    }
    Ok(pairs)
}

/// Relative residual of one eigenpair.
pub fn residual(s: &Csr, mass: &[f64], lambda: f64, v: &[f64]) -> f64 {
    let mut sv = vec![0.0; v.len()];
    s.mul_vec(v, &mut sv);
    let (mut num, mut den) = (0.0, 0.0);
    for i in 0..v.len() {
        let mv = mass[i] * v[i];
        num += (sv[i] - lambda * mv).powi(2);
        den += mv * mv;
    }
    (num / den).sqrt()
}

/// Largest-magnitude entry made positive.
fn fix_sign(v: &mut [f64]) {
    let mut best = 0;
    for i in 1..v.len() {
        if v[i].abs() > v[best].abs() + 1e-12 {
            best = i;
        }
    }
    if v[best] < 0.0 {
        v.iter_mut().for_each(|x| *x = -*x);
    }
}

fn dense_pairs(lap: &Laplacian, count: usize) -> EigenPairs {
    let n = lap.mass.len();
    let isq: Vec<f64> = lap.mass.iter().map(|m| 1.0 / m.sqrt()).collect();
    let mut a = DMatrix::<f64>::zeros(n, n);
    for i in 0..n {
        for (j, v) in lap.stiffness.row(i) {
            a[(i, j)] = v * isq[i] * isq[j];
        }
    }
    let eig = SymmetricEigen::new(a);
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| eig.eigenvalues[i].total_cmp(&eig.eigenvalues[j]));
    let mut values = Vec::with_capacity(count);
    let mut vectors = Vec::with_capacity(count);
    for &k in order.iter().take(count) {
        values.push(eig.eigenvalues[k]);
        vectors.push((0..n).map(|i| eig.eigenvectors[(i, k)] * isq[i]).collect());
    }
    EigenPairs { values, vectors }
}

/// Jacobi-preconditioned conjugate gradients for `A x = b`, warm-started
/// from `x`.
fn pcg(a: &Csr, diag: &[f64], b: &[f64], x: &mut [f64], tol: f64, max_iter: usize) -> f64 {
    let n = b.len();
    let mut ax = vec![0.0; n];
    a.mul_vec(x, &mut ax);
    let mut r: Vec<f64> = (0..n).map(|i| b[i] - ax[i]).collect();
    let bnorm = b.iter().map(|v| v * v).sum::<f64>().sqrt().max(f64::MIN_POSITIVE);
    let mut z: Vec<f64> = (0..n).map(|i| r[i] / diag[i]).collect();
    let mut p = z.clone();
    let mut rz: f64 = r.iter().zip(&z).map(|(a, b)| a * b).sum();
    let mut ap = vec![0.0; n];
    for _ in 0..max_iter {
        let rn = r.iter().map(|v| v * v).sum::<f64>().sqrt();
        if rn <= tol * bnorm {
            return rn / bnorm;
        }
        a.mul_vec(&p, &mut ap);
        let alpha = rz / p.iter().zip(&ap).map(|(a, b)| a * b).sum::<f64>();
        for i in 0..n {
            x[i] += alpha * p[i];
            r[i] -= alpha * ap[i];
            z[i] = r[i] / diag[i];
        }
        let rz_new: f64 = r.iter().zip(&z).map(|(a, b)| a * b).sum();
        let beta = rz_new / rz;
        rz = rz_new;
        for i in 0..n {
            p[i] = z[i] + beta * p[i];
        }
    }
    r.iter().map(|v| v * v).sum::<f64>().sqrt() / bnorm
}

/// Rayleigh–Ritz on the span of `y`: returns the eigenvalues and the
/// rotated, mass-orthonormal basis.
fn rayleigh_ritz(s: &Csr, mass: &[f64], y: &[Vec<f64>]) -> Result<(Vec<f64>, Vec<Vec<f64>>)> {
    let p = y.len();
    let n = mass.len();
    let sy: Vec<Vec<f64>> = y
        .iter()
        .map(|v| {
            let mut o = vec![0.0; n];
            s.mul_vec(v, &mut o);
            o
        })
        .collect();
    let mut sr = DMatrix::<f64>::zeros(p, p);
    let mut mr = DMatrix::<f64>::zeros(p, p);
    for a in 0..p {
        for b in a..p {
            let sv: f64 = (0..n).map(|i| y[a][i] * sy[b][i]).sum();
            let mv: f64 = (0..n).map(|i| y[a][i] * mass[i] * y[b][i]).sum();
            sr[(a, b)] = sv;
            sr[(b, a)] = sv;
            mr[(a, b)] = mv;
            mr[(b, a)] = mv;
        }
    }
    let chol = mr
        .cholesky()
        .ok_or_else(|| Error::Solver { residual: f64::INFINITY })?;
    let l = chol.l();
    let linv = l
        .clone()
        .try_inverse()
        .ok_or_else(|| Error::Solver { residual: f64::INFINITY })?;
    let c = &linv * sr * linv.transpose();
    let c = (&c + c.transpose()) * 0.5;
    let eig = SymmetricEigen::new(c);
    let w = linv.transpose() * eig.eigenvectors;
    let mut order: Vec<usize> = (0..p).collect();
    order.sort_by(|&i, &j| eig.eigenvalues[i].total_cmp(&eig.eigenvalues[j]));
    let values = order.iter().map(|&k| eig.eigenvalues[k]).collect();
    let vectors = order
        .iter()
        .map(|&k| {
            let col = w.column(k);
            let mut v = vec![0.0; n];
            for (j, yj) in y.iter().enumerate() {
                let c = col[j];
                for i in 0..n {
                    v[i] += c * yj[i];
                }
            }
            v
        })
        .collect();
    Ok((values, vectors))
}

fn subspace_pairs(lap: &Laplacian, count: usize) -> Result<EigenPairs> {
    let n = lap.mass.len();
    let s = &lap.stiffness;
    let mass = &lap.mass;
    let block = (count + count / 2 + 8).min(n);
    // Shift so S + σM is positive definite; σ of order the mean
    // diagonal ratio keeps the CG solves well conditioned.
    let ratio: f64 = s.diagonal().iter().zip(mass).map(|(d, m)| d / m).sum::<f64>() / n as f64;
    let sigma = (1e-3 * ratio).max(1e-8);
    let mut shifted = s.clone();
    for i in 0..n {
        for k in shifted.row_ptr[i]..shifted.row_ptr[i + 1] {
            if shifted.cols[k] == i {
                shifted.vals[k] += sigma * mass[i];
            }
        }
    }
    let diag = shifted.diagonal();

    let mut rng = substream(0x5eed, n as u64);
    let mut x: Vec<Vec<f64>> = (0..block)
        .map(|_| (0..n).map(|_| rng.random::<f64>() - 0.5).collect())
        .collect();
    let (mut values, mut vectors) = rayleigh_ritz(s, mass, &x)?;
    let mut worst = f64::INFINITY;
    for _ in 0..500 {
        for (xj, vj) in x.iter_mut().zip(&vectors) {
            let b: Vec<f64> = vj.iter().zip(mass).map(|(v, m)| v * m).collect();
            // Warm start: (S + σM)⁻¹ M v ≈ v / (λ + σ) for a near-eigenvector.
            let lam = rayleigh(s, mass, vj);
            *xj = vj.iter().map(|v| v / (lam + sigma)).collect();
            pcg(&shifted, &diag, &b, xj, 1e-13, 20 * n);
            let nrm = xj.iter().zip(mass).map(|(v, m)| v * v * m).sum::<f64>().sqrt();
            xj.iter_mut().for_each(|v| *v /= nrm);
        }
        let rr = rayleigh_ritz(s, mass, &x)?;
        values = rr.0;
        vectors = rr.1;
        worst = (0..count)
            .map(|k| residual(s, mass, values[k], &vectors[k]))
            .fold(0.0, f64::max);
        if worst < 0.1 * EIGEN_RESIDUAL_TOL {
            break;
        }
    }
    if !(worst < EIGEN_RESIDUAL_TOL) {
        return Err(Error::Solver { residual: worst });
    }
    values.truncate(count);
    vectors.truncate(count);
    Ok(EigenPairs { values, vectors })
}

fn rayleigh(s: &Csr, mass: &[f64], v: &[f64]) -> f64 {
    let mut sv = vec![0.0; v.len()];
    s.mul_vec(v, &mut sv);
    let num: f64 = v.iter().zip(&sv).map(|(a, b)| a * b).sum();
    let den: f64 = v.iter().zip(mass).map(|(a, m)| a * a * m).sum();
    num / den
}
