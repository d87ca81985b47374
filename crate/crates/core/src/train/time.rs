use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::bridges::{NoiseSchedule, ScheduleKind};
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TimeMode {
    /// `q(t) ∝ σ_t⁻²`.
    TimeScaled,
    Uniform,
}

/// Loss-time distribution on `[ε, T − ε]`.
///
/// Both ends are clipped: the forward target is singular at `T` and the
/// backward target (evaluated at reversed time `T − t`) is singular at `0`.
/// Training uses a wider clip than the simulation horizon clip; rows within
/// 10⁻⁴·T of a singular end carry target variance ~10⁴ and swamp the gradient.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TimeSampler {
    pub schedule: NoiseSchedule,
    pub mode: TimeMode,
    pub lo: f64,
    pub hi: f64,
}

impl TimeSampler {
    pub fn new(schedule: NoiseSchedule, mode: TimeMode) -> Self {
        let eps = schedule.eps_clip();
        TimeSampler {
            schedule,
            mode,
            lo: eps,
            hi: schedule.horizon() - eps,
        }
    }

    /// Range `[c·T, (1 − c)·T]`, never narrower than the horizon clip.
    pub fn clipped(schedule: NoiseSchedule, mode: TimeMode, c: f64) -> Self {
        let eps = (c * schedule.horizon()).max(schedule.eps_clip());
        TimeSampler {
            schedule,
            mode,
            lo: eps,
            hi: schedule.horizon() - eps,
        }
    }

    fn slope(&self) -> Option<(f64, f64)> {
        match (self.mode, self.schedule.kind) {
            (TimeMode::Uniform, _) | (_, ScheduleKind::Constant { .. }) => None,
            (TimeMode::TimeScaled, ScheduleKind::Linear { sigma0, sigma1 }) => {
                let k = (sigma1 - sigma0) / self.schedule.horizon();
                if k.abs() < 1e-12 {
                    None
                } else {
                    Some((sigma0, k))
                }
            }
        }
    }

    /// Unnormalized weight: σ_t⁻² (time-scaled) or 1 (uniform).
    pub fn weight(&self, t: f64) -> f64 {
        match self.mode {
            TimeMode::Uniform => 1.0,
            TimeMode::TimeScaled => self.schedule.sigma(t).powi(-2),
        }
    }

    /// ∫ₐᵇ weight.
    pub fn mass(&self, a: f64, b: f64) -> f64 {
        match (self.mode, self.slope()) {
            (TimeMode::Uniform, _) => b - a,
            (TimeMode::TimeScaled, None) => (b - a) * self.weight(a),
            (TimeMode::TimeScaled, Some((_, k))) => {
                (1.0 / self.schedule.sigma(a) - 1.0 / self.schedule.sigma(b)) / k
            }
        }
    }

    pub fn total_mass(&self) -> f64 {
        self.mass(self.lo, self.hi)
    }

    /// Normalized density on `[lo, hi]`.
    pub fn density(&self, t: f64) -> f64 {
        if t < self.lo || t > self.hi {
            0.0
        } else {
            self.weight(t) / self.total_mass()
        }
    }

    /// Inverse CDF of the distribution restricted to `[a, b]`.
    pub fn quantile_in(&self, a: f64, b: f64, u: f64) -> f64 {
        let t = match self.slope() {
            None => a + u * (b - a),
            Some((s0, k)) => {
                // 1/σ_t is linear in the cumulative mass.
                let (ra, rb) = (1.0 / self.schedule.sigma(a), 1.0 / self.schedule.sigma(b));
                let sigma = 1.0 / (ra - u * (ra - rb));
                (sigma - s0) / k
            }
        };
        t.clamp(a, b)
    }

    pub fn sample_in<R: Rng + ?Sized>(&self, a: f64, b: f64, rng: &mut R) -> f64 {
        self.quantile_in(a, b, rng.random::<f64>())
    }

    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> f64 {
        self.sample_in(self.lo, self.hi, rng)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.lo < self.hi) {
            return Err(Error::Config("empty loss-time range".into()));
        }
        self.schedule.validate()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::substream;

    #[test]
    fn constant_schedule_is_uniform() {
        let s = TimeSampler::new(NoiseSchedule::constant(0.7), TimeMode::TimeScaled);
        assert!((s.quantile_in(s.lo, s.hi, 0.25) - (s.lo + 0.25 * (s.hi - s.lo))).abs() < 1e-15);
        assert!((s.density(0.3) - 1.0 / (s.hi - s.lo)).abs() < 1e-12);
    }

    #[test]
    fn linear_quantile_inverts_mass() {
        let s = TimeSampler::new(NoiseSchedule::linear(0.2, 1.5), TimeMode::TimeScaled);
        for u in [0.0, 0.1, 0.5, 0.9, 1.0] {
            let t = s.quantile_in(s.lo, s.hi, u);
            let frac = s.mass(s.lo, t) / s.total_mass();
            assert!((frac - u).abs() < 1e-12, "{u}: {frac}");
        }
        // Mass matches Simpson quadrature of σ⁻².
        let n = 2000;
        let h = (s.hi - s.lo) / n as f64;
        let mut q = s.weight(s.lo) + s.weight(s.hi);
        for i in 1..n {
            q += s.weight(s.lo + i as f64 * h) * if i % 2 == 1 { 4.0 } else { 2.0 };
        }
        assert!((q * h / 3.0 - s.total_mass()).abs() < 1e-8);
    }

    #[test]
    fn uniform_mode_ignores_schedule() {
        let s = TimeSampler::new(NoiseSchedule::linear(0.2, 1.5), TimeMode::Uniform);
        let mut rng = substream(0, 0);
        let mean: f64 = (0..20000).map(|_| s.sample(&mut rng)).sum::<f64>() / 20000.0;
        assert!((mean - 0.5).abs() < 0.01);
    }
}
