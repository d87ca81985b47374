//! Wrapped Gaussian densities: the push-forward of a tangent-space Gaussian
//! through the exponential map.

use std::f64::consts::PI;

/// Number of wraps summed on each side for torus and sphere densities.
pub const WRAPS: i32 = 5;

pub fn log_sum_exp(terms: &[f64]) -> f64 {
    let m = terms.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    if !m.is_finite() {
        return m;
    }
    m + terms.iter().map(|t| (t - m).exp()).sum::<f64>().ln()
}

/// Log density on the circle `[0, 2π)` of `mean + N(0, scale²)` wrapped mod 2π,
/// truncated to `±WRAPS` periods.
pub fn wrapped_normal_log_pdf(theta: f64, mean: f64, scale: f64) -> f64 {
    let norm = -0.5 * (2.0 * PI * scale * scale).ln();
    let terms: Vec<f64> = (-WRAPS..=WRAPS)
        .map(|k| {
            let d = theta - mean + 2.0 * PI * k as f64;
            norm - d * d / (2.0 * scale * scale)
        })
        .collect();
    log_sum_exp(&terms)
}

fn log_ratio(rho: f64, sin_rho: f64) -> f64 {
    if rho < 1e-8 {
        0.0
    } else {
        rho.ln() - sin_rho.abs().max(1e-300).ln()
    }
}

/// Wrapped Gaussian on Sᵈ at geodesic distance `r` from the mean. Every
/// geodesic of length `r + 2πk` or `2πk − r` reaches the point; each preimage
/// contributes the tangent Gaussian density times the inverse Jacobian of the
/// exponential map, `(ρ / |sin ρ|)^{d−1}`.
pub(crate) fn sphere_log_pdf(d: usize, r: f64, scale: f64) -> f64 {
    let dd = d as f64;
    let norm = -0.5 * dd * (2.0 * PI * scale * scale).ln();
    let mut terms = Vec::with_capacity(2 * WRAPS as usize + 1);
    for k in 0..=WRAPS {
        let rho = r + 2.0 * PI * k as f64;
        terms.push(norm - rho * rho / (2.0 * scale * scale) + (dd - 1.0) * log_ratio(rho, rho.sin()));
        if k > 0 {
            let rho = 2.0 * PI * k as f64 - r;
            terms.push(norm - rho * rho / (2.0 * scale * scale) + (dd - 1.0) * log_ratio(rho, rho.sin()));
        }
    }
    log_sum_exp(&terms)
}

/// Wrapped Gaussian on ℍ² at distance `r` from the mean (the exponential map is
/// a diffeomorphism, so there is a single preimage).
pub(crate) fn hyperbolic_log_pdf(r: f64, scale: f64) -> f64 {
    let jac = if r < 1e-8 { 0.0 } else { r.ln() - r.sinh().ln() };
    -(2.0 * PI * scale * scale).ln() - r * r / (2.0 * scale * scale) + jac
}
