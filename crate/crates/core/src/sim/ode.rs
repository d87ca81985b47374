use serde::{Deserialize, Serialize};

use super::field::DriftField;
use crate::error::{Error, Result};
use crate::manifold::Manifold;
use crate::prior::Prior;

/// Finite-difference step used by [`divergence`].
pub const DIV_STEP: f64 = 1e-4;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum OdeMethod {
    /// Classical fourth-order Runge–Kutta; stage points are reached with
    /// [`Manifold::retract`].
    Rk4,
    /// Explicit Euler with a projection onto the tangent plane before every
    /// exponential-map step.
    Euler,
}

fn check_rows(v: &[f64], t: f64) -> Result<()> {
    if v.iter().all(|c| c.is_finite()) {
        Ok(())
    } else {
        Err(Error::Integration { t })
    }
}

fn shift<M: Manifold>(m: &M, xs: &[M::Point], dirs: &[f64], scale: f64) -> Result<Vec<M::Point>> {
    let n = m.tangent_len();
    xs.iter()
        .enumerate()
        .map(|(i, x)| {
            let v: Vec<f64> = dirs[i * n..(i + 1) * n].iter().map(|c| c * scale).collect();
            m.retract(x, &v)
        })
        .collect()
}

struct Stepper<'a, M: Manifold, F> {
    m: &'a M,
    field: &'a F,
    method: OdeMethod,
    with_div: bool,
}

impl<'a, M: Manifold, F: DriftField<M>> Stepper<'a, M, F> {
    /// Field values and, when requested, divergences at `(xs, t)`.
    fn eval(&self, xs: &[M::Point], t: f64) -> Result<(Vec<f64>, Vec<f64>)> {
        let v;
        let div;
        if self.with_div {
            let r = divergence_batch(self.m, self.field, xs, t)?;
            v = r.0;
            div = r.1;
        } else {
            v = self.field.eval_batch(self.m, xs, &vec![t; xs.len()])?;
            div = Vec::new();
        }
        check_rows(&v, t)?;
        check_rows(&div, t)?;
        Ok((v, div))
    }

    /// Advance `xs` from `t` by `h` (which may be negative); `acc` collects
    /// ∫ div dt along each path when divergences are on.
    fn step(&self, xs: &[M::Point], t: f64, h: f64, acc: &mut [f64]) -> Result<Vec<M::Point>> {
        let m = self.m;
        let n = m.tangent_len();
        match self.method {
            OdeMethod::Euler => {
                let (k1, d1) = self.eval(xs, t)?;
                for (a, d) in acc.iter_mut().zip(&d1) {
                    *a += h * d;
                }
                xs.iter()
                    .enumerate()
                    .map(|(i, x)| {
                        let v: Vec<f64> = k1[i * n..(i + 1) * n].iter().map(|c| c * h).collect();
                        m.exp_map(x, &m.project(x, &v))
                    })
                    .collect()
            }
            OdeMethod::Rk4 => {
                let (k1, d1) = self.eval(xs, t)?;
                let x2 = shift(m, xs, &k1, 0.5 * h)?;
                let (k2, d2) = self.eval(&x2, t + 0.5 * h)?;
                let x3 = shift(m, xs, &k2, 0.5 * h)?;
                let (k3, d3) = self.eval(&x3, t + 0.5 * h)?;
                let x4 = shift(m, xs, &k3, h)?;
                let (k4, d4) = self.eval(&x4, t + h)?;
                if self.with_div {
                    for (i, a) in acc.iter_mut().enumerate() {
                        *a += h / 6.0 * (d1[i] + 2.0 * d2[i] + 2.0 * d3[i] + d4[i]);
                    }
                }
                let comb: Vec<f64> = (0..k1.len())
                    .map(|j| (k1[j] + 2.0 * k2[j] + 2.0 * k3[j] + k4[j]) / 6.0)
                    .collect();
                shift(m, xs, &comb, h)
            }
        }
    }
}

fn integrate<M, F>(
    m: &M,
    field: &F,
    xs: &[M::Point],
    t0: f64,
    t1: f64,
    n_steps: usize,
    method: OdeMethod,
    with_div: bool,
    mut on_step: impl FnMut(&[M::Point]),
) -> Result<(Vec<M::Point>, Vec<f64>)>
where
    M: Manifold,
    F: DriftField<M>,
{
    if n_steps == 0 {
        return Err(Error::Usage("ODE solve needs at least one step".into()));
    }
    let st = Stepper {
        m,
        field,
        method,
        with_div,
    };
    let h = (t1 - t0) / n_steps as f64;
    let mut acc = vec![0.0; if with_div { xs.len() } else { 0 }];
    let mut cur = xs.to_vec();
    on_step(&cur);
    for k in 0..n_steps {
        let t = t0 + k as f64 * h;
        cur = st.step(&cur, t, h, &mut acc)?;
        for x in &cur {
            if !m.coords(x).iter().all(|c| c.is_finite()) {
                return Err(Error::Integration { t: t + h });
            }
        }
        on_step(&cur);
    }
    Ok((cur, acc))
}

/// Integrate `dY/dt = u(Y, t)` from `t0` to `t1` for every starting point and
/// return the terminal states.
pub fn solve_ode<M, F>(
    m: &M,
    field: &F,
    xs: &[M::Point],
    t0: f64,
    t1: f64,
    n_steps: usize,
    method: OdeMethod,
) -> Result<Vec<M::Point>>
where
    M: Manifold,
    F: DriftField<M>,
{
    integrate(m, field, xs, t0, t1, n_steps, method, false, |_| {}).map(|r| r.0)
}

/// Like [`solve_ode`] but returns the states at every grid time
/// (`n_steps + 1` rows, each holding one state per starting point).
pub fn solve_ode_path<M, F>(
    m: &M,
    field: &F,
    xs: &[M::Point],
    t0: f64,
    t1: f64,
    n_steps: usize,
    method: OdeMethod,
) -> Result<Vec<Vec<M::Point>>>
where
    M: Manifold,
    F: DriftField<M>,
{
    let mut path = Vec::with_capacity(n_steps + 1);
    integrate(m, field, xs, t0, t1, n_steps, method, false, |s| path.push(s.to_vec()))?;
    Ok(path)
}

/// Riemannian divergence of `field` at `(x, t)`.
pub fn divergence<M, F>(m: &M, field: &F, x: &M::Point, t: f64) -> Result<f64>
where
    M: Manifold,
    F: DriftField<M>,
{
    Ok(divergence_batch(m, field, std::slice::from_ref(x), t)?.1[0])
}

/// Field values and divergences for a batch at a common time.
///
/// The divergence is `Σᵢ ⟨(P_x v(exp_x(h eᵢ)) − P_x v(exp_x(−h eᵢ)))/2h, eᵢ⟩`
/// over an orthonormal tangent basis `eᵢ`; projecting the neighbouring values
/// back onto `T_x` supplies the connection term on embedded manifolds.
pub fn divergence_batch<M, F>(m: &M, field: &F, xs: &[M::Point], t: f64) -> Result<(Vec<f64>, Vec<f64>)>
where
    M: Manifold,
    F: DriftField<M>,
{
    let n = m.tangent_len();
    let mut pts = Vec::with_capacity(xs.len() * (1 + 2 * m.dim()));
    let mut bases = Vec::with_capacity(xs.len());
    for x in xs {
        let basis = m.tangent_basis(x);
        pts.push(x.clone());
        for e in &basis {
            let plus: Vec<f64> = e.iter().map(|c| c * DIV_STEP).collect();
            let minus: Vec<f64> = e.iter().map(|c| -c * DIV_STEP).collect();
            pts.push(m.exp_map(x, &plus)?);
            pts.push(m.exp_map(x, &minus)?);
        }
        bases.push(basis);
    }
    let vals = field.eval_batch(m, &pts, &vec![t; pts.len()])?;
    let mut out_v = Vec::with_capacity(xs.len() * n);
    let mut divs = Vec::with_capacity(xs.len());
    let mut row = 0;
    for (x, basis) in xs.iter().zip(&bases) {
        out_v.extend_from_slice(&vals[row * n..(row + 1) * n]);
        row += 1;
        let mut div = 0.0;
        for e in basis {
            let vp = m.project(x, &vals[row * n..(row + 1) * n]);
            let vm = m.project(x, &vals[(row + 1) * n..(row + 2) * n]);
            row += 2;
            let dv: Vec<f64> = vp.iter().zip(&vm).map(|(a, b)| (a - b) / (2.0 * DIV_STEP)).collect();
            div += m.inner(x, &dv, e);
        }
        divs.push(div);
    }
    Ok((out_v, divs))
}

/// Negative log-likelihood (nats) of each point under the flow `u` started
/// from `prior` at t = 0 and run to `horizon`.
///
/// Each point is carried back to t = 0 while accumulating `∫ div u dt`; by the
/// continuity equation `log p_T(x) = log p_0(Y_0) − ∫₀ᵀ div u(Y_t, t) dt`.
pub fn nll<M, F>(
    m: &M,
    field: &F,
    prior: &Prior<M::Point>,
    xs: &[M::Point],
    horizon: f64,
    n_steps: usize,
    method: OdeMethod,
) -> Result<Vec<f64>>
where
    M: Manifold,
    F: DriftField<M>,
{
    let (y0, acc) = integrate(m, field, xs, horizon, 0.0, n_steps, method, true, |_| {})?;
    y0.iter()
        .zip(&acc)
        .map(|(y, a)| {
            let lp = prior.log_density(m, y)? + a;
            if lp.is_finite() {
                Ok(-lp)
            } else {
                Err(Error::Likelihood(format!("non-finite log-likelihood at {:?}", m.coords(y))))
            }
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::manifold::{Point, Space};
    use crate::sim::field::{FnDrift, ZeroDrift};
    use std::f64::consts::PI;

    #[test]
    fn divergence_of_identity_field() {
        let e = Space::Euclidean(2);
        let f = FnDrift(|x: &Point, _t: f64| Ok(x.0.clone()));
        let d = divergence(&e, &f, &Point::new([0.3, -1.2]), 0.0).unwrap();
        assert!((d - 2.0).abs() < 1e-6, "{d}");
    }

    #[test]
    fn divergence_of_constant_field() {
        let e = Space::Euclidean(3);
        let f = FnDrift(|_: &Point, _t: f64| Ok(vec![1.0, -2.0, 0.5]));
        let d = divergence(&e, &f, &Point::new([0.3, -1.2, 4.0]), 0.0).unwrap();
        assert!(d.abs() < 1e-8, "{d}");
    }

    #[test]
    fn sphere_projected_constant_field() {
        let s = Space::Sphere(2);
        let a = [0.3, -0.7, 1.1];
        let f = FnDrift(move |x: &Point, _t: f64| Ok(s.project(x, &a)));
        for x in [[0.0, 0.0, 1.0], [0.6, 0.0, 0.8], [0.48, -0.6, 0.64]] {
            let x = Point::new(x);
            let d = divergence(&s, &f, &x, 0.0).unwrap();
            let want = -2.0 * crate::manifold::dot(&a, &x.0);
            assert!((d - want).abs() < 1e-4, "{d} vs {want}");
        }
    }

    #[test]
    fn uniform_sphere_zero_field_nll() {
        let s = Space::Sphere(2);
        let xs = vec![Point::new([0.0, 0.0, 1.0]), Point::new([0.6, 0.0, 0.8])];
        let v = nll(&s, &ZeroDrift, &Prior::Uniform, &xs, 1.0, 10, OdeMethod::Rk4).unwrap();
        for x in v {
            assert!((x - (4.0 * PI).ln()).abs() < 1e-12);
        }
    }

    #[test]
    fn linear_flow_matches_closed_form() {
        // u(x) = a x on ℝ: Y_t = e^{a t} Y_0.
        let e = Space::Euclidean(1);
        let f = FnDrift(|x: &Point, _t: f64| Ok(vec![0.7 * x.0[0]]));
        let y = solve_ode(&e, &f, &[Point::new([1.0])], 0.0, 1.0, 50, OdeMethod::Rk4).unwrap();
        assert!((y[0].0[0] - 0.7f64.exp()).abs() < 1e-9);
    }

    #[test]
    fn rk4_on_sphere_is_fourth_order() {
        // Time-dependent rotation field about a tilted axis.
        let s = Space::Sphere(2);
        let f = FnDrift(|x: &Point, t: f64| {
            let w = [0.3, 1.0 + t, 0.5 * t * t];
            let c = &x.0;
            Ok(vec![w[1] * c[2] - w[2] * c[1], w[2] * c[0] - w[0] * c[2], w[0] * c[1] - w[1] * c[0]])
        });
        let x0 = [Point::new([0.6, 0.0, 0.8])];
        let sol = |n| solve_ode(&s, &f, &x0, 0.0, 1.0, n, OdeMethod::Rk4).unwrap()[0].clone();
        let (a, b, c) = (sol(10), sol(20), sol(40));
        let e1 = s.dist(&a, &b);
        let e2 = s.dist(&b, &c);
        let slope = (e1 / e2).log2();
        assert!(slope > 3.5, "observed order {slope}");
    }
}
