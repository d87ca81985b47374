use std::f64::consts::PI;

use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use super::{check_finite, dot, norm, Manifold, ManifoldKind};
use crate::error::{Error, Result};

const TWO_PI: f64 = 2.0 * PI;

/// Sphere log map is rejected when `⟨x, y⟩ < -1 + ANTIPODAL_TOL`.
pub const ANTIPODAL_TOL: f64 = 1e-10;

/// A point on one of the closed-form manifolds, stored by its coordinates.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Point(pub Vec<f64>);

impl Point {
    pub fn new(coords: impl Into<Vec<f64>>) -> Self {
        Point(coords.into())
    }

    pub fn coords(&self) -> &[f64] {
        &self.0
    }
}

impl From<Vec<f64>> for Point {
    fn from(v: Vec<f64>) -> Self {
        Point(v)
    }
}

/// Closed-form manifolds: Euclidean space ℝᵈ, the unit sphere Sᵈ ⊂ ℝᵈ⁺¹,
/// the flat torus 𝕋ⁿ in angle coordinates, and the Lorentz hyperboloid ℍ².
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Space {
    Euclidean(usize),
    Sphere(usize),
    FlatTorus(usize),
    Hyperboloid,
}

/// Wrap an angle into `[0, 2π)`.
pub fn wrap_angle(a: f64) -> f64 {
    let r = a.rem_euclid(TWO_PI);
    if r >= TWO_PI {
        0.0
    } else {
        r
    }
}

/// Wrap an angle difference into `(-π, π]`.
pub fn wrap_diff(d: f64) -> f64 {
    let r = d.rem_euclid(TWO_PI);
    if r > PI {
        r - TWO_PI
    } else {
        r
    }
}

pub fn lorentz(u: &[f64], v: &[f64]) -> f64 {
    -u[0] * v[0] + u[1] * v[1] + u[2] * v[2]
}

/// Surface area of the unit sphere Sᵈ.
pub fn sphere_area(d: usize) -> f64 {
    // 2 π^{(d+1)/2} / Γ((d+1)/2), Γ evaluated on half-integers by recursion.
    let a = (d as f64 + 1.0) / 2.0;
    let mut g = if (d + 1) % 2 == 0 { 1.0 } else { PI.sqrt() };
    let mut x = if (d + 1) % 2 == 0 { 1.0 } else { 0.5 };
    while x < a - 1e-12 {
        g *= x;
        x += 1.0;
    }
    2.0 * PI.powf(a) / g
}

impl Space {
    pub fn from_kind(kind: &ManifoldKind) -> Result<Self> {
        Ok(match kind {
            ManifoldKind::Euclidean { dim } => Space::Euclidean(*dim),
            ManifoldKind::Sphere { dim } => Space::Sphere(*dim),
            ManifoldKind::FlatTorus { dim } => Space::FlatTorus(*dim),
            ManifoldKind::Hyperboloid => Space::Hyperboloid,
            ManifoldKind::Mesh { .. } => {
                return Err(Error::Unsupported("mesh is not a closed-form space".into()))
            }
        })
    }

    /// Length of the coordinate vector of a point.
    pub fn coord_len(&self) -> usize {
        match *self {
            Space::Euclidean(d) | Space::FlatTorus(d) => d,
            Space::Sphere(d) => d + 1,
            Space::Hyperboloid => 3,
        }
    }

    /// Map arbitrary coordinates onto the manifold (normalize, wrap, or
    /// re-solve the time-like coordinate).
    pub fn normalize(&self, mut c: Vec<f64>) -> Vec<f64> {
        match *self {
            Space::Euclidean(_) => c,
            Space::Sphere(_) => {
                let n = norm(&c);
                c.iter_mut().for_each(|v| *v /= n);
                c
            }
            Space::FlatTorus(_) => {
                c.iter_mut().for_each(|v| *v = wrap_angle(*v));
                c
            }
            Space::Hyperboloid => {
                c[0] = (1.0 + c[1] * c[1] + c[2] * c[2]).sqrt();
                c
            }
        }
    }

    /// Base point used by the hyperboloid wrapped-Gaussian prior.
    pub fn origin(&self) -> Point {
        match *self {
            Space::Euclidean(d) | Space::FlatTorus(d) => Point(vec![0.0; d]),
            Space::Sphere(d) => {
                let mut c = vec![0.0; d + 1];
                c[d] = 1.0;
                Point(c)
            }
            Space::Hyperboloid => Point(vec![1.0, 0.0, 0.0]),
        }
    }

    fn gram_schmidt(&self, x: &[f64], n_basis: usize) -> Vec<Vec<f64>> {
        let ambient = x.len();
        // Visit axes least aligned with x first so the projections are well
        // conditioned.
        let mut order: Vec<usize> = (0..ambient).collect();
        order.sort_by(|&a, &b| x[a].abs().total_cmp(&x[b].abs()));
        let mut basis: Vec<Vec<f64>> = Vec::with_capacity(n_basis);
        for &j in &order {
            if basis.len() == n_basis {
                break;
            }
            let mut e = vec![0.0; ambient];
            e[j] = 1.0;
            let mut w = self.project_coords(x, &e);
            for b in &basis {
                let c = self.inner_coords(b, &w);
                w.iter_mut().zip(b).for_each(|(wi, bi)| *wi -= c * bi);
            }
            let n = self.inner_coords(&w, &w).max(0.0).sqrt();
            if n > 1e-6 {
                w.iter_mut().for_each(|v| *v /= n);
                basis.push(w);
            }
        }
        basis
    }

    fn inner_coords(&self, u: &[f64], v: &[f64]) -> f64 {
        match self {
            Space::Hyperboloid => lorentz(u, v),
            _ => dot(u, v),
        }
    }

    fn project_coords(&self, x: &[f64], w: &[f64]) -> Vec<f64> {
        match *self {
            Space::Euclidean(_) | Space::FlatTorus(_) => w.to_vec(),
            Space::Sphere(_) => {
                let c = dot(x, w);
                w.iter().zip(x).map(|(wi, xi)| wi - c * xi).collect()
            }
            Space::Hyperboloid => {
                let c = lorentz(x, w);
                w.iter().zip(x).map(|(wi, xi)| wi + c * xi).collect()
            }
        }
    }
}

impl Manifold for Space {
    type Point = Point;

    fn kind(&self) -> ManifoldKind {
        match *self {
            Space::Euclidean(dim) => ManifoldKind::Euclidean { dim },
            Space::Sphere(dim) => ManifoldKind::Sphere { dim },
            Space::FlatTorus(dim) => ManifoldKind::FlatTorus { dim },
            Space::Hyperboloid => ManifoldKind::Hyperboloid,
        }
    }

    fn dim(&self) -> usize {
        match *self {
            Space::Euclidean(d) | Space::Sphere(d) | Space::FlatTorus(d) => d,
            Space::Hyperboloid => 2,
        }
    }

    fn tangent_len(&self) -> usize {
        self.coord_len()
    }

    fn feature_len(&self) -> usize {
        match *self {
            Space::FlatTorus(d) => 2 * d,
            _ => self.coord_len(),
        }
    }

    fn features(&self, x: &Point, out: &mut [f64]) {
        match self {
            Space::FlatTorus(_) => {
                for (i, a) in x.0.iter().enumerate() {
                    out[2 * i] = a.cos();
                    out[2 * i + 1] = a.sin();
                }
            }
            _ => out.copy_from_slice(&x.0),
        }
    }

    fn coords<'a>(&self, x: &'a Point) -> &'a [f64] {
        &x.0
    }

    fn check_point(&self, x: &Point) -> Result<()> {
        let c = &x.0;
        if c.len() != self.coord_len() {
            return Err(Error::InvalidPoint(format!(
                "expected {} coordinates, got {}",
                self.coord_len(),
                c.len()
            )));
        }
        check_finite("point", c)?;
        match *self {
            Space::Euclidean(_) => Ok(()),
            Space::Sphere(_) => {
                let n = norm(c);
                if (n - 1.0).abs() > 1e-9 {
                    return Err(Error::InvalidPoint(format!("sphere point has norm {n}")));
                }
                Ok(())
            }
            Space::FlatTorus(_) => {
                if c.iter().any(|a| !(0.0..TWO_PI).contains(a)) {
                    return Err(Error::InvalidPoint(format!("torus angles {c:?} outside [0, 2π)")));
                }
                Ok(())
            }
            Space::Hyperboloid => {
                let q = lorentz(c, c);
                if (q + 1.0).abs() > 1e-9 || c[0] < 1.0 {
                    return Err(Error::InvalidPoint(format!(
                        "hyperboloid point {c:?} has ⟨x,x⟩_L = {q}"
                    )));
                }
                Ok(())
            }
        }
    }

    fn exp_map(&self, x: &Point, v: &[f64]) -> Result<Point> {
        check_finite("tangent", v)?;
        check_finite("point", &x.0)?;
        let c = &x.0;
        let out = match *self {
            Space::Euclidean(_) => c.iter().zip(v).map(|(a, b)| a + b).collect(),
            Space::FlatTorus(_) => c.iter().zip(v).map(|(a, b)| wrap_angle(a + b)).collect(),
            Space::Sphere(_) => {
                let n = norm(v);
                if n < 1e-300 {
                    return Ok(x.clone());
                }
                let (s, co) = n.sin_cos();
                let y = c.iter().zip(v).map(|(a, b)| co * a + s * b / n).collect();
                self.normalize(y)
            }
            Space::Hyperboloid => {
                let n = lorentz(v, v).max(0.0).sqrt();
                if n < 1e-300 {
                    return Ok(x.clone());
                }
                let (s, co) = (n.sinh(), n.cosh());
                let y = c.iter().zip(v).map(|(a, b)| co * a + s * b / n).collect();
                self.normalize(y)
            }
        };
        Ok(Point(out))
    }

    fn log_map(&self, x: &Point, y: &Point) -> Result<Vec<f64>> {
        let (a, b) = (&x.0, &y.0);
        check_finite("point", a)?;
        check_finite("point", b)?;
        Ok(match *self {
            Space::Euclidean(_) => b.iter().zip(a).map(|(p, q)| p - q).collect(),
            Space::FlatTorus(_) => b.iter().zip(a).map(|(p, q)| wrap_diff(p - q)).collect(),
            Space::Sphere(_) => {
                let c = dot(a, b);
                if c < -1.0 + ANTIPODAL_TOL {
                    return Err(Error::CutLocus {
                        x: a.clone(),
                        y: b.clone(),
                    });
                }
                let u: Vec<f64> = b.iter().zip(a).map(|(p, q)| p - c * q).collect();
                let un = norm(&u);
                if un < 1e-300 {
                    return Ok(vec![0.0; a.len()]);
                }
                let theta = un.atan2(c);
                u.into_iter().map(|ui| ui * theta / un).collect()
            }
            Space::Hyperboloid => {
                let c = lorentz(a, b);
                let u: Vec<f64> = b.iter().zip(a).map(|(p, q)| p + c * q).collect();
                let un = lorentz(&u, &u).max(0.0).sqrt();
                if un < 1e-300 {
                    return Ok(vec![0.0; 3]);
                }
                let d = un.asinh();
                u.into_iter().map(|ui| ui * d / un).collect()
            }
        })
    }

    fn dist(&self, x: &Point, y: &Point) -> f64 {
        let (a, b) = (&x.0, &y.0);
        match *self {
            Space::Euclidean(_) => a.iter().zip(b).map(|(p, q)| (p - q) * (p - q)).sum::<f64>().sqrt(),
            Space::FlatTorus(_) => a
                .iter()
                .zip(b)
                .map(|(p, q)| wrap_diff(q - p).powi(2))
                .sum::<f64>()
                .sqrt(),
            Space::Sphere(_) => {
                // chord formulas: exact zero for equal points, accurate near antipodes
                let minus = a.iter().zip(b).map(|(p, q)| (p - q).powi(2)).sum::<f64>().sqrt();
                if minus <= std::f64::consts::SQRT_2 {
                    2.0 * (0.5 * minus).min(1.0).asin()
                } else {
                    let plus = a.iter().zip(b).map(|(p, q)| (p + q).powi(2)).sum::<f64>().sqrt();
                    PI - 2.0 * (0.5 * plus).min(1.0).asin()
                }
            }
            Space::Hyperboloid => {
                let c = lorentz(a, b);
                let u: Vec<f64> = b.iter().zip(a).map(|(p, q)| p + c * q).collect();
                lorentz(&u, &u).max(0.0).sqrt().asinh()
            }
        }
    }

    fn project(&self, x: &Point, w: &[f64]) -> Vec<f64> {
        self.project_coords(&x.0, w)
    }

    fn project_adjoint(&self, x: &Point, g: &[f64]) -> Vec<f64> {
        match self {
            Space::Hyperboloid => {
                // P = I + x xᵀJ, so Pᵀg = g + J x ⟨x, g⟩.
                let c = dot(&x.0, g);
                let jx = [-x.0[0], x.0[1], x.0[2]];
                g.iter().zip(jx).map(|(gi, j)| gi + c * j).collect()
            }
            _ => self.project(x, g),
        }
    }

    fn inner(&self, _x: &Point, u: &[f64], v: &[f64]) -> f64 {
        self.inner_coords(u, v)
    }

    fn metric_grad(&self, _x: &Point, r: &[f64]) -> Vec<f64> {
        match self {
            Space::Hyperboloid => vec![-r[0], r[1], r[2]],
            _ => r.to_vec(),
        }
    }

    fn tangent_basis(&self, x: &Point) -> Vec<Vec<f64>> {
        match *self {
            Space::Euclidean(d) | Space::FlatTorus(d) => (0..d)
                .map(|i| {
                    let mut e = vec![0.0; d];
                    e[i] = 1.0;
                    e
                })
                .collect(),
            Space::Sphere(d) => self.gram_schmidt(&x.0, d),
            Space::Hyperboloid => self.gram_schmidt(&x.0, 2),
        }
    }

    fn tangent_gaussian<R: Rng + ?Sized>(&self, x: &Point, rng: &mut R, scale: f64) -> Vec<f64> {
        match self {
            Space::Hyperboloid => {
                let mut out = vec![0.0; 3];
                for e in self.tangent_basis(x) {
                    let g: f64 = rng.sample(StandardNormal);
                    out.iter_mut().zip(&e).for_each(|(o, ei)| *o += scale * g * ei);
                }
                out
            }
            _ => {
                // The projection of an ambient isotropic Gaussian is isotropic
                // on the tangent space.
                let w: Vec<f64> = (0..self.coord_len())
                    .map(|_| scale * rng.sample::<f64, _>(StandardNormal))
                    .collect();
                self.project(x, &w)
            }
        }
    }

    fn retract(&self, x: &Point, v: &[f64]) -> Result<Point> {
        check_finite("tangent", v)?;
        let y: Vec<f64> = x.0.iter().zip(v).map(|(a, b)| a + b).collect();
        Ok(Point(match *self {
            Space::Hyperboloid => {
                let q = -lorentz(&y, &y);
                if q <= 0.0 || y[0] <= 0.0 {
                    return self.exp_map(x, &self.project(x, v));
                }
                let s = q.sqrt();
                y.into_iter().map(|c| c / s).collect()
            }
            _ => self.normalize(y),
        }))
    }

    fn sample_uniform<R: Rng + ?Sized>(&self, rng: &mut R, n: usize) -> Result<Vec<Point>> {
        match *self {
            Space::Sphere(d) => Ok((0..n)
                .map(|_| {
                    let g: Vec<f64> = (0..=d).map(|_| rng.sample(StandardNormal)).collect();
                    Point(self.normalize(g))
                })
                .collect()),
            Space::FlatTorus(d) => Ok((0..n)
                .map(|_| Point((0..d).map(|_| rng.random::<f64>() * TWO_PI).map(wrap_angle).collect()))
                .collect()),
            _ => Err(Error::Unsupported(format!(
                "no uniform prior on non-compact {}",
                self.kind().name()
            ))),
        }
    }

    fn wrapped_gaussian_log_density(&self, mean: &Point, scale: f64, x: &Point) -> Result<f64> {
        if !(scale > 0.0) {
            return Err(Error::Usage(format!("wrapped Gaussian scale must be positive, got {scale}")));
        }
        Ok(match *self {
            Space::Euclidean(d) => {
                let r2: f64 = x.0.iter().zip(&mean.0).map(|(a, b)| (a - b) * (a - b)).sum();
                -0.5 * d as f64 * (TWO_PI * scale * scale).ln() - r2 / (2.0 * scale * scale)
            }
            Space::FlatTorus(_) => x
                .0
                .iter()
                .zip(&mean.0)
                .map(|(a, m)| super::wrapped_normal_log_pdf(*a, *m, scale))
                .sum(),
            Space::Sphere(d) => super::wrapped::sphere_log_pdf(d, self.dist(mean, x), scale),
            Space::Hyperboloid => super::wrapped::hyperbolic_log_pdf(self.dist(mean, x), scale),
        })
    }

    fn volume(&self) -> Option<f64> {
        match *self {
            Space::Sphere(d) => Some(sphere_area(d)),
            Space::FlatTorus(d) => Some(TWO_PI.powi(d as i32)),
            _ => None,
        }
    }

    fn is_euclidean(&self) -> bool {
        matches!(self, Space::Euclidean(_))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn p(c: &[f64]) -> Point {
        Point(c.to_vec())
    }

    #[test]
    fn sphere_exp_quarter_turn() {
        let s = Space::Sphere(2);
        let y = s.exp_map(&p(&[0.0, 0.0, 1.0]), &[PI / 2.0, 0.0, 0.0]).unwrap();
        assert_abs_diff_eq!(y.0.as_slice(), [1.0, 0.0, 0.0].as_slice(), epsilon = 1e-12);
    }

    #[test]
    fn exp_of_zero_is_identity() {
        for (s, x) in [
            (Space::Sphere(2), p(&[0.6, 0.0, 0.8])),
            (Space::FlatTorus(2), p(&[1.0, 2.0])),
            (Space::Euclidean(2), p(&[1.0, -2.0])),
            (Space::Hyperboloid, Space::Hyperboloid.origin()),
        ] {
            let v = vec![0.0; s.tangent_len()];
            assert_eq!(s.exp_map(&x, &v).unwrap(), x);
        }
    }

    #[test]
    fn torus_wraps() {
        let t = Space::FlatTorus(1);
        let y = t.exp_map(&p(&[6.0]), &[0.5]).unwrap();
        assert_abs_diff_eq!(y.0[0], 6.5 - TWO_PI, epsilon = 1e-12);
        assert_abs_diff_eq!(y.0[0], 0.2168, epsilon = 1e-4);
        let v = t.log_map(&p(&[0.1]), &p(&[6.2])).unwrap();
        assert_abs_diff_eq!(v[0], 6.1 - TWO_PI, epsilon = 1e-12);
        assert_abs_diff_eq!(v[0], -0.1832, epsilon = 1e-4);
    }

    #[test]
    fn sphere_log_quarter_turn() {
        let s = Space::Sphere(2);
        let v = s.log_map(&p(&[0.0, 0.0, 1.0]), &p(&[1.0, 0.0, 0.0])).unwrap();
        assert_abs_diff_eq!(v.as_slice(), [PI / 2.0, 0.0, 0.0].as_slice(), epsilon = 1e-12);
    }

    #[test]
    fn sphere_antipode_is_cut_locus() {
        let s = Space::Sphere(2);
        let err = s.log_map(&p(&[0.0, 0.0, 1.0]), &p(&[0.0, 0.0, -1.0])).unwrap_err();
        assert!(matches!(err, Error::CutLocus { .. }));
        assert_abs_diff_eq!(s.dist(&p(&[0.0, 0.0, 1.0]), &p(&[0.0, 0.0, -1.0])), PI, epsilon = 1e-12);
    }

    #[test]
    fn hyperboloid_log_unit_geodesic() {
        let h = Space::Hyperboloid;
        let x = p(&[1.0, 0.0, 0.0]);
        let y = p(&[1f64.cosh(), 1f64.sinh(), 0.0]);
        let v = h.log_map(&x, &y).unwrap();
        assert_abs_diff_eq!(v.as_slice(), [0.0, 1.0, 0.0].as_slice(), epsilon = 1e-12);
        assert_abs_diff_eq!((-lorentz(&x.0, &y.0)).acosh(), 1.0, epsilon = 1e-12);
        let back = h.exp_map(&x, &v).unwrap();
        assert_abs_diff_eq!(back.0.as_slice(), y.0.as_slice(), epsilon = 1e-12);
    }

    #[test]
    fn torus_distance_is_flat() {
        let t = Space::FlatTorus(2);
        assert_abs_diff_eq!(t.dist(&p(&[0.0, 0.0]), &p(&[PI, PI])), PI * 2f64.sqrt(), epsilon = 1e-12);
    }

    #[test]
    fn projection_examples() {
        let s = Space::Sphere(2);
        let x = p(&[0.0, 0.0, 1.0]);
        assert_eq!(s.project(&x, &[1.0, 1.0, 1.0]), vec![1.0, 1.0, 0.0]);
        assert_eq!(s.project(&x, &[1.0, 1.0, 0.0]), vec![1.0, 1.0, 0.0]);
        let e = Space::Euclidean(3);
        assert_eq!(e.project(&x, &[1.0, 2.0, 3.0]), vec![1.0, 2.0, 3.0]);
    }

    #[test]
    fn hyperboloid_projection_is_lorentz_orthogonal() {
        let h = Space::Hyperboloid;
        let x = Point(h.normalize(vec![0.0, 0.3, -1.2]));
        let v = h.project(&x, &[0.4, -2.0, 1.0]);
        assert_abs_diff_eq!(lorentz(&x.0, &v), 0.0, epsilon = 1e-12);
        let vv = h.project(&x, &v);
        assert_abs_diff_eq!(v.as_slice(), vv.as_slice(), epsilon = 1e-12);
    }

    #[test]
    fn uniform_requires_compact() {
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        assert!(matches!(
            Space::Hyperboloid.sample_uniform(&mut rng, 3),
            Err(Error::Unsupported(_))
        ));
        assert!(Space::Euclidean(2).sample_uniform(&mut rng, 3).is_err());
        assert!(Space::Sphere(2).sample_uniform(&mut rng, 0).unwrap().is_empty());
    }

    #[test]
    fn sphere_areas() {
        assert_abs_diff_eq!(sphere_area(1), 2.0 * PI, epsilon = 1e-12);
        assert_abs_diff_eq!(sphere_area(2), 4.0 * PI, epsilon = 1e-12);
        assert_abs_diff_eq!(sphere_area(3), 2.0 * PI * PI, epsilon = 1e-12);
    }

    #[test]
    fn non_finite_tangent_rejected() {
        let s = Space::Sphere(2);
        assert!(matches!(
            s.exp_map(&p(&[0.0, 0.0, 1.0]), &[f64::NAN, 0.0, 0.0]),
            Err(Error::NonFinite(_))
        ));
    }
}
