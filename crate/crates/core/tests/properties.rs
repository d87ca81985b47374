use proptest::prelude::*;
use rdmix::bridges::{BridgeFamily, NoiseSchedule};
use rdmix::eval::{mmd, MmdConfig};
use rdmix::manifold::{Manifold, Point, Space};
use rdmix::sim::{simulate_two_way_batch, TwoWayConfig};

fn dot(u: &[f64], v: &[f64]) -> f64 {
    u.iter().zip(v).map(|(a, b)| a * b).sum()
}

fn unit(v: [f64; 3]) -> Option<Point> {
    let n = dot(&v, &v).sqrt();
    (n > 1e-3).then(|| Point(v.iter().map(|c| c / n).collect()))
}

fn vec3() -> impl Strategy<Value = [f64; 3]> {
    [-1.0..1.0f64, -1.0..1.0f64, -1.0..1.0f64]
}

fn schedule() -> impl Strategy<Value = NoiseSchedule> {
    prop_oneof![
        (0.1..2.0f64).prop_map(NoiseSchedule::constant),
        (0.1..2.0f64, 0.1..2.0f64).prop_map(|(a, b)| NoiseSchedule::linear(a, b)),
    ]
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(128))]

    #[test]
    fn sphere_log_inverts_exp(x in vec3(), w in vec3(), r in 0.0..3.0f64) {
        let s = Space::Sphere(2);
        let Some(x) = unit(x) else { return Ok(()) };
        let v = s.project(&x, &w);
        let n = dot(&v, &v).sqrt();
        prop_assume!(n > 1e-6);
        let v: Vec<f64> = v.iter().map(|c| c * r / n).collect();
        let y = s.exp_map(&x, &v).unwrap();
        prop_assert!((dot(&y.0, &y.0) - 1.0).abs() < 1e-12);
        let back = s.log_map(&x, &y).unwrap();
        for (a, b) in back.iter().zip(&v) {
            prop_assert!((a - b).abs() < 1e-8);
        }
        prop_assert!((s.dist(&x, &y) - r).abs() < 1e-9);
    }

    #[test]
    fn projection_is_idempotent_and_tangent(x in vec3(), w in vec3()) {
        let s = Space::Sphere(2);
        let Some(x) = unit(x) else { return Ok(()) };
        let p = s.project(&x, &w);
        prop_assert!(dot(&p, &x.0).abs() < 1e-12);
        let pp = s.project(&x, &p);
        for (a, b) in p.iter().zip(&pp) {
            prop_assert!((a - b).abs() < 1e-12);
        }
    }

    #[test]
    fn torus_distance_is_symmetric_and_bounded(a in [0.0..6.28f64, 0.0..6.28f64], b in [0.0..6.28f64, 0.0..6.28f64]) {
        let t = Space::FlatTorus(2);
        let (x, y) = (Point(a.to_vec()), Point(b.to_vec()));
        let d = t.dist(&x, &y);
        prop_assert!((d - t.dist(&y, &x)).abs() < 1e-12);
        prop_assert!(d <= std::f64::consts::PI * 2f64.sqrt() + 1e-12);
        let z = t.exp_map(&x, &t.log_map(&x, &y).unwrap()).unwrap();
        prop_assert!(t.dist(&z, &y) < 1e-9);
    }

    #[test]
    fn hyperboloid_exp_stays_on_the_sheet(v in [-2.0..2.0f64, -2.0..2.0f64]) {
        let h = Space::Hyperboloid;
        let o = h.origin();
        let x = h.exp_map(&o, &[0.0, v[0], v[1]]).unwrap();
        prop_assert!(h.check_point(&x).is_ok());
        prop_assert!((h.dist(&o, &x) - (v[0] * v[0] + v[1] * v[1]).sqrt()).abs() < 1e-9);
    }

    #[test]
    fn rescaled_time_is_increasing_and_reverses(sched in schedule(), a in 0.0..1.0f64, b in 0.0..1.0f64) {
        let (lo, hi) = if a < b { (a, b) } else { (b, a) };
        prop_assert!(sched.tau(lo).unwrap() <= sched.tau(hi).unwrap());
        // τ̄(s) = τ_T − τ(T − s) for σ̄_s = σ_{T−s}
        let rev = sched.reversed();
        let lhs = rev.tau(a).unwrap();
        let rhs = sched.tau_total() - sched.tau(1.0 - a).unwrap();
        prop_assert!((lhs - rhs).abs() < 1e-12 * sched.tau_total().max(1.0));
    }

    #[test]
    fn two_way_paths_are_pinned_and_reproducible(x in vec3(), y in vec3(), seed in any::<u64>(), steps in 2usize..30) {
        let s = Space::Sphere(2);
        let (Some(x), Some(y)) = (unit(x), unit(y)) else { return Ok(()) };
        prop_assume!(s.dist(&x, &y) < 3.0);
        let cfg = TwoWayConfig { n_steps: steps, t_star: None };
        let sched = NoiseSchedule::constant(1.0);
        let a = simulate_two_way_batch(&s, &[x.clone()], &[y.clone()], BridgeFamily::Logarithm, &sched, &cfg, seed).unwrap();
        let b = simulate_two_way_batch(&s, &[x.clone()], &[y.clone()], BridgeFamily::Logarithm, &sched, &cfg, seed).unwrap();
        let p = &a.paths[0];
        prop_assert_eq!(&p.states[0], &y);
        prop_assert_eq!(p.states.last().unwrap(), &x);
        prop_assert_eq!(&p.states, &b.paths[0].states);
        prop_assert_eq!(p.states.len(), steps + 1);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(16))]

    #[test]
    fn mmd_is_symmetric_and_zero_on_identical_sets(pts in prop::collection::vec(vec3(), 4..30)) {
        let s = Space::Sphere(2);
        let a: Vec<Point> = pts.iter().filter_map(|v| unit(*v)).collect();
        prop_assume!(a.len() >= 4);
        let b: Vec<Point> = a.iter().rev().map(|p| Point(vec![p.0[1], p.0[2], p.0[0]])).collect();
        let cfg = MmdConfig::default();
        let ab = mmd(&s, &a, &b, &cfg).unwrap();
        let ba = mmd(&s, &b, &a, &cfg).unwrap();
        prop_assert!((ab.biased - ba.biased).abs() < 1e-12);
        prop_assert!(ab.biased >= -1e-12);
        prop_assert!(mmd(&s, &a, &a, &cfg).unwrap().biased.abs() < 1e-12);
    }
}
