use liveclock::spacetime::{arrival_time, Vec3 as V3};
use liveclock::{PropagationModel, Vec3, Worldline};
use proptest::prelude::*;

/// Plain bisection on `c*tau - |x(t_e + tau) - x_e|`, independent of the
/// library's solver.
fn bisect_arrival(emit: Vec3, t_e: f64, rx: &Worldline, c: f64, vmax: f64) -> f64 {
    let dist = |tau: f64| {
        let p = rx.position_at(t_e + tau);
        ((p.x - emit.x).powi(2) + (p.y - emit.y).powi(2) + (p.z - emit.z).powi(2)).sqrt()
    };
    let f = |tau: f64| c * tau - dist(tau);
    let mut lo = 0.0;
    let mut hi = dist(0.0) / (c - vmax);
    for _ in 0..400 {
        let mid = 0.5 * (lo + hi);
        if f(mid) < 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
        if hi - lo < 1e-18 {
            break;
        }
    }
    0.5 * (lo + hi)
}

fn ring(radius: f64, omega: f64, theta0: f64) -> Worldline {
    Worldline::Circular {
        center: V3::zero(),
        radius,
        angular_rate: omega,
        initial_angle: theta0,
    }
}

#[test]
fn circular_receiver_matches_bisection() {
    let c = 299_792_458.0;
    let model = PropagationModel::with_speed(c);
    for k in 0..200 {
        let theta = 0.031 * k as f64;
        let rx = ring(100.0, 1e3, theta + 0.5);
        let emit = ring(100.0, 1e3, theta).position_at(0.0);
        let t_e = 1e-4 * k as f64;
        let t = arrival_time(emit, t_e, &rx, &model).unwrap();
        let oracle = t_e + bisect_arrival(emit, t_e, &rx, c, 1e5);
        assert!((t - oracle).abs() < 1e-12, "k={k}: {t} vs {oracle}");
    }
}

#[test]
fn static_delay_is_symmetric() {
    let model = PropagationModel::with_speed(3.0e8);
    let a = Worldline::fixed(1.0, -2.0, 5.0);
    let b = Worldline::fixed(-7.0, 4.0, 0.5);
    let ab = arrival_time(a.position_at(0.0), 0.0, &b, &model).unwrap();
    let ba = arrival_time(b.position_at(0.0), 0.0, &a, &model).unwrap();
    assert_eq!(ab, ba);
}

fn arb_vec(scale: f64) -> impl Strategy<Value = Vec3> {
    (-scale..scale, -scale..scale, -scale..scale).prop_map(|(x, y, z)| V3::new(x, y, z))
}

fn arb_worldline() -> impl Strategy<Value = Worldline> {
    prop_oneof![
        arb_vec(1e3).prop_map(|p| Worldline::Static { position: p }),
        (arb_vec(1e3), arb_vec(0.5)).prop_map(|(o, v)| Worldline::UniformVelocity { origin: o, velocity: v }),
        (1.0f64..500.0, -1e-3f64..1e-3, 0.0f64..6.3).prop_map(|(r, w, t)| ring(r, w, t)),
    ]
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(10_000))]

    #[test]
    fn light_cone_residual(emit in arb_vec(1e3), t_e in 0.0f64..1e3, rx in arb_worldline()) {
        let c = 1.0;
        let model = PropagationModel::with_speed(c);
        prop_assume!((rx.position_at(t_e) - emit).norm() > 1e-6);
        let t = arrival_time(emit, t_e, &rx, &model).unwrap();
        prop_assert!(t > t_e);
        let delay = t - t_e;
        let dist = (rx.position_at(t) - emit).norm();
        prop_assert!((dist - c * delay).abs() < 1e-9 * c * delay + 1e-15 * c, "{dist} vs {delay}");
    }

    #[test]
    fn arrival_is_monotone(emit in arb_vec(1e3), t1 in 0.0f64..1e3, dt in 1e-3f64..10.0, rx in arb_worldline()) {
        let model = PropagationModel::with_speed(1.0);
        prop_assume!((rx.position_at(t1) - emit).norm() > 1e-3);
        prop_assume!((rx.position_at(t1 + dt) - emit).norm() > 1e-3);
        let a = arrival_time(emit, t1, &rx, &model).unwrap();
        let b = arrival_time(emit, t1 + dt, &rx, &model).unwrap();
        prop_assert!(a < b);
    }

    #[test]
    fn conformal_factor_scales_delays(emit in arb_vec(100.0), rx in arb_vec(100.0)) {
        prop_assume!((rx - emit).norm() > 1e-3);
        let w = Worldline::Static { position: rx };
        let base = PropagationModel { conformal_factor: Some(1.5), ..PropagationModel::with_speed(2.0) };
        let doubled = PropagationModel { conformal_factor: Some(3.0), ..base };
        let d1 = arrival_time(emit, 0.0, &w, &base).unwrap();
        let d2 = arrival_time(emit, 0.0, &w, &doubled).unwrap();
        prop_assert!((d2 / d1 - 2.0).abs() < 1e-12);
    }
}
