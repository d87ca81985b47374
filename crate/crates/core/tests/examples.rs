//! Smoke runs of every example at small sizes.

#[allow(dead_code)]
#[path = "../examples/analytic_drift_1d.rs"]
mod analytic_drift_1d;
#[allow(dead_code)]
#[path = "../examples/bridge_sphere.rs"]
mod bridge_sphere;
#[allow(dead_code)]
#[path = "../examples/mesh_spectral.rs"]
mod mesh_spectral;
#[allow(dead_code)]
#[path = "../examples/mixture_marginal.rs"]
mod mixture_marginal;
#[allow(dead_code)]
#[path = "../examples/nll_oracle.rs"]
mod nll_oracle;
#[allow(dead_code)]
#[path = "../examples/time_ablation.rs"]
mod time_ablation;
#[allow(dead_code)]
#[path = "../examples/torus_wrapped_gaussian.rs"]
mod torus_wrapped_gaussian;
#[allow(dead_code)]
#[path = "../examples/train_sphere_vmf.rs"]
mod train_sphere_vmf;
#[allow(dead_code)]
#[path = "../examples/two_way_ablation.rs"]
mod two_way_ablation;

#[test]
fn analytic_drift_matches_closed_form_limits() {
    // t → 0: the posterior over ±1 is flat, so f(x, 0) = −x.
    assert!((analytic_drift_1d::exact_drift(0.7, 0.0) + 0.7).abs() < 1e-12);
    // the density integrates to one
    let h = 1e-3;
    let mass: f64 = (-8000..8000).map(|i| analytic_drift_1d::marginal_density(i as f64 * h, 0.4) * h).sum();
    assert!((mass - 1.0).abs() < 1e-6);
    let l2 = analytic_drift_1d::run_analytic(30, 0).unwrap();
    assert!(l2.is_finite());
}

#[test]
fn bridge_terminal_distance_shrinks() {
    let coarse = bridge_sphere::terminal_distance(200, 50, 0).unwrap();
    let fine = bridge_sphere::terminal_distance(200, 200, 0).unwrap();
    assert!(fine < coarse, "{fine} vs {coarse}");
}

#[test]
fn mixture_drift_is_odd_and_marginals_match() {
    for &(x, t) in &[(0.3, 0.2), (1.2, 0.7), (-0.5, 0.5)] {
        assert!((mixture_marginal::mixture_drift(x, t) + mixture_marginal::mixture_drift(-x, t)).abs() < 1e-12);
    }
    let d = mixture_marginal::marginal_mmd(500, 50, 0.5, 1).unwrap();
    assert!(d < 0.01, "{d}");
}

#[test]
fn nll_oracle_small() {
    let g = nll_oracle::gaussian_nll(200, 20, 0).unwrap();
    assert!(g.max_point_err < 1e-6, "{}", g.max_point_err);
    let s = nll_oracle::uniform_sphere_nll(50, 10, 0).unwrap();
    assert!((s - (4.0 * std::f64::consts::PI).ln()).abs() < 1e-9);
}

#[test]
fn two_way_ablation_small() {
    use rdmix::eval::SimulationMode;
    let rows = two_way_ablation::ablation(100, &[5, 15], 0).unwrap();
    assert_eq!(rows.len(), 4);
    assert!(two_way_ablation::lookup(&rows, SimulationMode::OneWay, 15).is_some());
    assert!(rows.iter().all(|r| r.mmd.is_finite() && r.mmd >= 0.0));
}

#[test]
fn sphere_training_smoke() {
    let r = train_sphere_vmf::run_sphere(20, 50, 0).unwrap();
    assert!(r.nll.is_finite() && r.target_nll.is_finite());
    assert!(r.mmd_sde_ode.is_finite());
}

#[test]
fn torus_training_smoke() {
    let r = torus_wrapped_gaussian::run_torus(20, &[0]).unwrap();
    assert!(r.nll_per_dim.is_finite());
    assert!(r.entropy_per_dim < r.uniform_per_dim);
}

#[test]
fn mesh_smoke_and_descent() {
    let r = mesh_spectral::run_mesh(20, 12, 0).unwrap();
    assert!(r.nll.is_finite());
    assert_eq!(r.descent.descending, r.descent.points);
    assert!(r.descent.max_rel_err < 1e-4);
}

#[test]
fn time_ablation_smoke() {
    let r = time_ablation::run_time_ablation(20, &[0]).unwrap();
    assert_eq!(r.rows.len(), 1);
    let (u, s) = r.means();
    assert!(u.is_finite() && s.is_finite());
}
