//! Orbit, frame and quadrature properties across the power-law family.

mod common;

use homoclinic_core::homoclinic::{powerlaw_homoclinic, saddle_data, shoot_homoclinic, ShootingOptions};
use homoclinic_core::quadrature::{integrate_line, DecayingIntegrand1D};
use homoclinic_core::systems::{powerlaw_system, NoForcing, PowerLaw};
use homoclinic_core::variational::{build_frame, check_dichotomy, FrameOptions};
use homoclinic_core::Vec2;
use proptest::prelude::*;
use std::sync::Arc;

proptest! {
    #![proptest_config(ProptestConfig::with_cases(12))]

    #[test]
    fn closed_form_loop_solves_the_field(nu in 0.5f64..2.0, mu in 0.5f64..2.0, p in 2u32..6) {
        let sys = powerlaw_system(nu, mu, p, Arc::new(NoForcing)).unwrap();
        let orbit = powerlaw_homoclinic(nu, mu, p).unwrap();
        prop_assert!(orbit.residual(&sys, 10.0, 4000) < 1e-9);
        // Turning point on the x-axis at t = 0, where x' = 0 and x = x_max.
        let (g, dg) = orbit.gamma_with_derivative(0.0);
        let xmax = ((p + 2) as f64 * nu / (2.0 * mu)).powf(1.0 / p as f64);
        prop_assert!((g.x - xmax).abs() < 1e-12 * xmax && dg.x.abs() < 1e-12);
        prop_assert!((PowerLaw::new(nu, mu, p).unwrap().x_max() - xmax).abs() < 1e-14 * xmax);
        // Reversibility: (x, y)(−t) = (x, −y)(t).
        for t in [0.3, 1.7, 4.0] {
            let (a, b) = (orbit.gamma(t), orbit.gamma(-t));
            prop_assert!((a.x - b.x).abs() < 1e-12 && (a.y + b.y).abs() < 1e-12);
        }
    }

    #[test]
    fn frame_wronskian_is_constant(nu in 0.5f64..2.0, mu in 0.5f64..2.0, p in 2u32..5) {
        let sys = powerlaw_system(nu, mu, p, Arc::new(NoForcing)).unwrap();
        let orbit = powerlaw_homoclinic(nu, mu, p).unwrap();
        let frame = build_frame(&sys, &orbit, 24.0 / nu.sqrt(), &FrameOptions::default()).unwrap();
        prop_assert!((frame.omega - nu.sqrt()).abs() < 1e-12);
        for &t in frame.grid().iter().step_by(37) {
            prop_assert!((frame.delta(t) - 1.0).abs() < 1e-8);
        }
        prop_assert!(check_dichotomy(&frame).unwrap().is_finite());
    }
}

#[test]
fn shooting_recovers_the_closed_form_loop() {
    let sys = powerlaw_system(1.5, 0.7, 3, Arc::new(NoForcing)).unwrap();
    let saddle = saddle_data(&sys, Vec2::ZERO).unwrap();
    let shot = shoot_homoclinic(&sys, &saddle, &ShootingOptions::default()).unwrap();
    let exact = powerlaw_homoclinic(1.5, 0.7, 3).unwrap();
    // Shooting fixes its own time origin; compare at the turning point.
    let (t0, _) = shot
        .samples(30.0, 20_000)
        .into_iter()
        .max_by(|a, b| a.1.x.total_cmp(&b.1.x))
        .unwrap();
    let (mut lo, mut hi) = (t0 - 0.01, t0 + 0.01);
    while hi - lo > 1e-9 {
        let (a, b) = (lo + (hi - lo) / 3.0, hi - (hi - lo) / 3.0);
        if shot.gamma(a).x < shot.gamma(b).x {
            lo = a;
        } else {
            hi = b;
        }
    }
    let apex = shot.gamma(0.5 * (lo + hi)).x;
    let xmax = exact.gamma(0.0).x;
    assert!((apex - xmax).abs() < 1e-6, "apex {apex} vs {xmax}");
    assert!(shot.residual(&sys, 8.0, 2000) < 1e-8);
}

#[test]
fn sech_squared_integral() {
    // ∫ sech² t dt = 2 over ℝ.
    let f = DecayingIntegrand1D::new(|t: f64| 1.0 / t.cosh().powi(2), 2.0, 4.0);
    let r = integrate_line(&f, 1e-12).unwrap();
    assert!((r.value - 2.0).abs() < 1e-11 && r.abs_error_estimate < 1e-10);
}
