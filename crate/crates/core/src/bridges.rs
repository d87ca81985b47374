//! Noise schedules and endpoint-conditioned bridge drifts.
//!
//! A bridge pinned at `z` has drift `σ_t² / (τ_T − τ_t) · η(x)`, where
//! `τ(t) = ∫₀ᵗ σ_s² ds` and `η` is the unscaled direction toward `z`: the log
//! map for the Logarithm bridge, or the normalized spectral-distance descent
//! direction for the Spectral bridge.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::manifold::Manifold;

/// Drift is never evaluated at `t ≥ T − CLIP_FRACTION·T`.
pub const CLIP_FRACTION: f64 = 1e-4;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum ScheduleKind {
    Constant { sigma: f64 },
    /// σ_t interpolates linearly from `sigma0` at t = 0 to `sigma1` at t = T.
    Linear { sigma0: f64, sigma1: f64 },
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct NoiseSchedule {
    #[serde(flatten)]
    pub kind: ScheduleKind,
    #[serde(default = "default_horizon")]
    pub horizon: f64,
}

fn default_horizon() -> f64 {
    1.0
}

impl NoiseSchedule {
    pub fn constant(sigma: f64) -> Self {
        NoiseSchedule {
            kind: ScheduleKind::Constant { sigma },
            horizon: 1.0,
        }
    }

    pub fn linear(sigma0: f64, sigma1: f64) -> Self {
        NoiseSchedule {
            kind: ScheduleKind::Linear { sigma0, sigma1 },
            horizon: 1.0,
        }
    }

    pub fn validate(&self) -> Result<()> {
        let ok = match self.kind {
            ScheduleKind::Constant { sigma } => sigma > 0.0 && sigma.is_finite(),
            ScheduleKind::Linear { sigma0, sigma1 } => {
                sigma0 > 0.0 && sigma1 > 0.0 && sigma0.is_finite() && sigma1.is_finite()
            }
        };
        if !ok || !(self.horizon > 0.0 && self.horizon.is_finite()) {
            return Err(Error::Config(format!("invalid noise schedule {self:?}")));
        }
        Ok(())
    }

    pub fn horizon(&self) -> f64 {
        self.horizon
    }

    pub fn eps_clip(&self) -> f64 {
        CLIP_FRACTION * self.horizon
    }

    /// σ_t; times outside `[0, T]` are clamped.
    pub fn sigma(&self, t: f64) -> f64 {
        match self.kind {
            ScheduleKind::Constant { sigma } => sigma,
            ScheduleKind::Linear { sigma0, sigma1 } => {
                let u = (t / self.horizon).clamp(0.0, 1.0);
                sigma0 + (sigma1 - sigma0) * u
            }
        }
    }

    fn tau_unchecked(&self, t: f64) -> f64 {
        match self.kind {
            ScheduleKind::Constant { sigma } => sigma * sigma * t,
            ScheduleKind::Linear { sigma0, sigma1 } => {
                let k = (sigma1 - sigma0) / self.horizon;
                if k.abs() < 1e-14 {
                    sigma0 * sigma0 * t
                } else {
                    // ∫ (σ0 + k s)² ds, expanded to avoid cancellation for small k.
                    sigma0 * sigma0 * t + sigma0 * k * t * t + k * k * t * t * t / 3.0
                }
            }
        }
    }

    /// Rescaled time τ(t) = ∫₀ᵗ σ_s² ds.
    pub fn tau(&self, t: f64) -> Result<f64> {
        let slack = 1e-12 * self.horizon;
        if !(t >= -slack && t <= self.horizon + slack) {
            return Err(Error::TimeRange {
                t,
                horizon: self.horizon,
            });
        }
        Ok(self.tau_unchecked(t.clamp(0.0, self.horizon)))
    }

    pub fn tau_total(&self) -> f64 {
        self.tau_unchecked(self.horizon)
    }

    /// Schedule of the time-reversed process, σ̄_s = σ_{T−s}.
    pub fn reversed(&self) -> Self {
        match self.kind {
            ScheduleKind::Constant { .. } => *self,
            ScheduleKind::Linear { sigma0, sigma1 } => NoiseSchedule {
                kind: ScheduleKind::Linear {
                    sigma0: sigma1,
                    sigma1: sigma0,
                },
                horizon: self.horizon,
            },
        }
    }

    /// Bridge drift factor σ_t² / (τ_T − τ_t), rejecting the clipped horizon.
    pub fn drift_scale(&self, t: f64) -> Result<f64> {
        let limit = self.horizon - self.eps_clip();
        if t >= limit {
            return Err(Error::Horizon { t, limit });
        }
        let s = self.sigma(t);
        Ok(s * s / (self.tau_total() - self.tau(t)?))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BridgeFamily {
    Logarithm,
    Spectral,
    EuclideanBrownian,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BridgeDirection {
    Forward,
    /// Time runs backward: the reversed clock `s = T − t` with the reflected
    /// schedule.
    Reversed,
}

/// A bridge family pinned at `endpoint`.
#[derive(Debug, Clone)]
pub struct BridgeSpec<P> {
    pub family: BridgeFamily,
    pub endpoint: P,
    pub schedule: NoiseSchedule,
    pub direction: BridgeDirection,
}

impl<P> BridgeSpec<P> {
    pub fn new(family: BridgeFamily, endpoint: P, schedule: NoiseSchedule) -> Self {
        BridgeSpec {
            family,
            endpoint,
            schedule,
            direction: BridgeDirection::Forward,
        }
    }

    pub fn reversed(mut self) -> Self {
        self.direction = BridgeDirection::Reversed;
        self
    }

    /// Schedule in the bridge's own clock.
    pub fn clock_schedule(&self) -> NoiseSchedule {
        match self.direction {
            BridgeDirection::Forward => self.schedule,
            BridgeDirection::Reversed => self.schedule.reversed(),
        }
    }
}

/// Direction toward `z` without the time factor.
pub fn direction_toward<M: Manifold>(
    m: &M,
    family: BridgeFamily,
    x: &M::Point,
    z: &M::Point,
) -> Result<Vec<f64>> {
    match family {
        BridgeFamily::Logarithm => m.log_map(x, z),
        BridgeFamily::Spectral => m.spectral_log(x, z),
        BridgeFamily::EuclideanBrownian => {
            if !m.is_euclidean() {
                return Err(Error::Unsupported(
                    "Euclidean Brownian bridge on a non-Euclidean manifold".into(),
                ));
            }
            let (a, b) = (m.coords(x), m.coords(z));
            Ok(b.iter().zip(a).map(|(p, q)| p - q).collect())
        }
    }
}

/// Unscaled drift η at clock time `t` (the bridge's own clock).
pub fn unscaled_direction<M: Manifold>(
    m: &M,
    spec: &BridgeSpec<M::Point>,
    x: &M::Point,
    t: f64,
) -> Result<Vec<f64>> {
    spec.clock_schedule().drift_scale(t)?;
    direction_toward(m, spec.family, x, &spec.endpoint)
}

/// Full bridge drift `σ_t²/(τ_T − τ_t) · η(x)` at clock time `t`.
pub fn bridge_drift<M: Manifold>(
    m: &M,
    spec: &BridgeSpec<M::Point>,
    x: &M::Point,
    t: f64,
) -> Result<Vec<f64>> {
    let scale = spec.clock_schedule().drift_scale(t)?;
    let mut v = direction_toward(m, spec.family, x, &spec.endpoint)?;
    v.iter_mut().for_each(|c| *c *= scale);
    Ok(v)
}

/// Drift of the time-reversed bridge at reversed time `s`, pinned at the
/// reversed process's terminal point `spec.endpoint`.
pub fn reversed_bridge_drift<M: Manifold>(
    m: &M,
    spec: &BridgeSpec<M::Point>,
    x: &M::Point,
    s: f64,
) -> Result<Vec<f64>> {
    let rev = BridgeSpec {
        family: spec.family,
        endpoint: spec.endpoint.clone(),
        schedule: spec.schedule,
        direction: BridgeDirection::Reversed,
    };
    bridge_drift(m, &rev, x, s)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::manifold::{Point, Space};
    use approx::assert_abs_diff_eq;
    use std::f64::consts::PI;

    /// Composite Simpson quadrature of σ² on [a, b].
    fn simpson_tau(s: &NoiseSchedule, a: f64, b: f64) -> f64 {
        let n = 2000;
        let h = (b - a) / n as f64;
        let f = |t: f64| s.sigma(t).powi(2);
        let mut acc = f(a) + f(b);
        for i in 1..n {
            let w = if i % 2 == 1 { 4.0 } else { 2.0 };
            acc += w * f(a + i as f64 * h);
        }
        acc * h / 3.0
    }

    #[test]
    fn tau_constant() {
        let s = NoiseSchedule::constant(1.0);
        assert_abs_diff_eq!(s.tau(0.3).unwrap(), 0.3, epsilon = 1e-15);
        let c = NoiseSchedule::constant(0.7);
        assert_abs_diff_eq!(c.tau_total(), 0.49, epsilon = 1e-15);
    }

    #[test]
    fn tau_linear_matches_quadrature() {
        let s = NoiseSchedule::linear(0.1, 1.0);
        let oracle = simpson_tau(&s, 0.0, 1.0);
        // ∫₀¹ (0.1 + 0.9 s)² ds = 0.01 + 0.09 + 0.27.
        assert_abs_diff_eq!(oracle, 0.37, epsilon = 1e-12);
        assert_abs_diff_eq!(s.tau(1.0).unwrap(), oracle, epsilon = 1e-12);
        for t in [0.1, 0.45, 0.8] {
            assert_abs_diff_eq!(s.tau(t).unwrap(), simpson_tau(&s, 0.0, t), epsilon = 1e-12);
        }
    }

    #[test]
    fn tau_out_of_range() {
        let s = NoiseSchedule::constant(1.0);
        assert!(matches!(s.tau(1.5), Err(Error::TimeRange { .. })));
        assert!(matches!(s.tau(-0.1), Err(Error::TimeRange { .. })));
    }

    #[test]
    fn reflected_tau_matches_quadrature() {
        let s = NoiseSchedule::linear(0.1, 1.0);
        let r = s.reversed();
        for u in [0.2, 0.5, 0.9] {
            let expect = s.tau_total() - s.tau(1.0 - u).unwrap();
            assert_abs_diff_eq!(r.tau(u).unwrap(), expect, epsilon = 1e-12);
            assert_abs_diff_eq!(r.tau(u).unwrap(), simpson_tau(&s, 1.0 - u, 1.0), epsilon = 1e-12);
        }
    }

    #[test]
    fn euclidean_drift_examples() {
        let e = Space::Euclidean(1);
        let spec = BridgeSpec::new(BridgeFamily::Logarithm, Point::new([1.0]), NoiseSchedule::constant(1.0));
        let d = bridge_drift(&e, &spec, &Point::new([0.0]), 0.5).unwrap();
        assert_abs_diff_eq!(d[0], 2.0, epsilon = 1e-12);
        let u = unscaled_direction(&e, &spec, &Point::new([0.0]), 0.9).unwrap();
        assert_abs_diff_eq!(u[0], 1.0, epsilon = 1e-15);
        let same = bridge_drift(&e, &spec, &Point::new([1.0]), 0.3).unwrap();
        assert_eq!(same, vec![0.0]);

        let rev = BridgeSpec::new(BridgeFamily::Logarithm, Point::new([0.0]), NoiseSchedule::constant(1.0));
        let r = reversed_bridge_drift(&e, &rev, &Point::new([1.0]), 0.5).unwrap();
        assert_abs_diff_eq!(r[0], -2.0, epsilon = 1e-12);
    }

    #[test]
    fn sphere_drift_at_start() {
        let s = Space::Sphere(2);
        let spec = BridgeSpec::new(
            BridgeFamily::Logarithm,
            Point::new([1.0, 0.0, 0.0]),
            NoiseSchedule::constant(1.0),
        );
        let d = bridge_drift(&s, &spec, &Point::new([0.0, 0.0, 1.0]), 0.0).unwrap();
        assert_abs_diff_eq!(d.as_slice(), [PI / 2.0, 0.0, 0.0].as_slice(), epsilon = 1e-12);
    }

    #[test]
    fn horizon_is_clipped() {
        let e = Space::Euclidean(1);
        let spec = BridgeSpec::new(BridgeFamily::Logarithm, Point::new([1.0]), NoiseSchedule::constant(1.0));
        assert!(matches!(
            bridge_drift(&e, &spec, &Point::new([0.0]), 1.0 - 1e-5),
            Err(Error::Horizon { .. })
        ));
        assert!(bridge_drift(&e, &spec, &Point::new([0.0]), 1.0 - 2e-4).is_ok());
    }

    #[test]
    fn brownian_family_needs_euclidean() {
        let s = Space::Sphere(2);
        let spec = BridgeSpec::new(
            BridgeFamily::EuclideanBrownian,
            Point::new([1.0, 0.0, 0.0]),
            NoiseSchedule::constant(1.0),
        );
        assert!(bridge_drift(&s, &spec, &Point::new([0.0, 0.0, 1.0]), 0.1).is_err());
    }

    #[test]
    fn constant_reversal_swaps_endpoints_only() {
        let e = Space::Euclidean(2);
        let sched = NoiseSchedule::constant(0.8);
        let x = Point::new([0.3, -0.4]);
        let fwd = BridgeSpec::new(BridgeFamily::Logarithm, Point::new([1.0, 2.0]), sched);
        let rev = fwd.clone().reversed();
        for t in [0.0, 0.3, 0.7] {
            assert_eq!(
                bridge_drift(&e, &fwd, &x, t).unwrap(),
                reversed_bridge_drift(&e, &rev, &x, t).unwrap()
            );
        }
    }
}
