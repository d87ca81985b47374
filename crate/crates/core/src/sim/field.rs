use crate::error::{Error, Result};
use crate::manifold::Manifold;

/// A time-dependent tangent vector field evaluated on batches.
///
/// `eval_batch` returns a row-major `xs.len() × m.tangent_len()` buffer whose
/// row `i` is the field at `(xs[i], ts[i])`.
pub trait DriftField<M: Manifold>: Sync {
    fn eval_batch(&self, m: &M, xs: &[M::Point], ts: &[f64]) -> Result<Vec<f64>>;

    fn eval(&self, m: &M, x: &M::Point, t: f64) -> Result<Vec<f64>> {
        self.eval_batch(m, std::slice::from_ref(x), &[t])
    }
}

impl<M: Manifold, F: DriftField<M> + ?Sized> DriftField<M> for &F {
    fn eval_batch(&self, m: &M, xs: &[M::Point], ts: &[f64]) -> Result<Vec<f64>> {
        (**self).eval_batch(m, xs, ts)
    }
}

/// Wraps a pointwise closure as a [`DriftField`].
pub struct FnDrift<F>(pub F);

impl<M, F> DriftField<M> for FnDrift<F>
where
    M: Manifold,
    F: Fn(&M::Point, f64) -> Result<Vec<f64>> + Sync,
{
    fn eval_batch(&self, m: &M, xs: &[M::Point], ts: &[f64]) -> Result<Vec<f64>> {
        let n = m.tangent_len();
        let mut out = Vec::with_capacity(xs.len() * n);
        for (x, &t) in xs.iter().zip(ts) {
            let v = (self.0)(x, t)?;
            if v.len() != n {
                return Err(Error::Usage(format!(
                    "drift returned {} components, expected {n}",
                    v.len()
                )));
            }
            out.extend(v);
        }
        Ok(out)
    }
}

/// The zero field.
pub struct ZeroDrift;

impl<M: Manifold> DriftField<M> for ZeroDrift {
    fn eval_batch(&self, m: &M, xs: &[M::Point], _ts: &[f64]) -> Result<Vec<f64>> {
        Ok(vec![0.0; xs.len() * m.tangent_len()])
    }
}

/// Probability-flow velocity `u(x, t) = ½(f(x, t) − b(x, T − t))` built from
/// a forward drift `f` and a backward drift `b` expressed in reversed time.
pub struct ProbabilityFlow<F, B> {
    pub forward: F,
    pub backward: B,
    pub horizon: f64,
}

impl<F, B> ProbabilityFlow<F, B> {
    pub fn new(forward: F, backward: B, horizon: f64) -> Self {
        ProbabilityFlow {
            forward,
            backward,
            horizon,
        }
    }
}

impl<M, F, B> DriftField<M> for ProbabilityFlow<F, B>
where
    M: Manifold,
    F: DriftField<M>,
    B: DriftField<M>,
{
    fn eval_batch(&self, m: &M, xs: &[M::Point], ts: &[f64]) -> Result<Vec<f64>> {
        let mut f = self.forward.eval_batch(m, xs, ts)?;
        let rev: Vec<f64> = ts.iter().map(|t| self.horizon - t).collect();
        let b = self.backward.eval_batch(m, xs, &rev)?;
        f.iter_mut().zip(&b).for_each(|(fi, bi)| *fi = 0.5 * (*fi - bi));
        Ok(f)
    }
}
