mod common;

use std::sync::Arc;

use homoclinic_core::conditions::*;
use homoclinic_core::planar::{ClosurePerturbation, Perturbation};
use homoclinic_core::quadrature::{integrate_line, DecayingIntegrand1D};
use homoclinic_core::systems::{ForcingPreset, Scaled, SelfExcited, Sum};
use homoclinic_core::variational::{build_frame, FrameNormalization, FrameOptions, VariationalFrame};
use homoclinic_core::{wedge, Mat2, Vec2};
use proptest::prelude::*;

use common::*;

fn line(frame: &VariationalFrame, f: impl Fn(f64) -> f64) -> f64 {
    let w = frame.omega;
    let d = DecayingIntegrand1D::new(f, w, 4.0 / w).with_max_window(frame.window);
    integrate_line(&d, 1e-12).unwrap().value
}

/// Product of four one-dimensional integrals; the C3 integrand separates.
fn f3_separable(frame: &VariationalFrame, beta: f64) -> f64 {
    let sys = frame.system();
    let eq = frame.orbit().saddle.equilibrium;
    let parts = |s: f64| {
        let x = frame.gamma(s);
        let f = sys.f(x);
        let h = sys.jacobian_f(x).mul_vec(x - eq) - f;
        let g = sys.g(x, s - beta);
        (f, h, g, frame.delta(s))
    };
    let ag1 = line(frame, |s| {
        let (f, _, g, d) = parts(s);
        f.y * g.x / d
    });
    let ah1 = line(frame, |s| {
        let (f, h, _, d) = parts(s);
        f.y * h.x / d
    });
    let bh2 = line(frame, |t| {
        let (f, h, _, d) = parts(t);
        f.x * h.y / d
    });
    let bg2 = line(frame, |t| {
        let (f, _, g, d) = parts(t);
        f.x * g.y / d
    });
    ag1 * bh2 - bg2 * ah1
}

#[test]
fn f3_matches_product_of_line_integrals() {
    let frame = preset_frame(&rotated(0.4), &ForcingPreset::A1, FrameNormalization::default(), WINDOW);
    let c3 = cond_c3(&frame, 0.0, &ConditionOptions::default()).unwrap();
    let oracle = f3_separable(&frame, 0.0);
    assert!(oracle.abs() > 1e-2, "{oracle}");
    assert!(((c3.result.value - oracle) / oracle).abs() < 1e-6, "{c3:?} vs {oracle}");
}

#[test]
fn f3_reproducible_under_refinement() {
    let frame = preset_frame(&rotated(0.4), &ForcingPreset::A1, FrameNormalization::default(), WINDOW);
    let coarse = cond_c3(&frame, 0.3, &ConditionOptions::default()).unwrap();
    let fine = cond_c3(
        &frame,
        0.3,
        &ConditionOptions {
            plane_tol: 1e-11,
            ..Default::default()
        },
    )
    .unwrap();
    let rel = ((coarse.result.value - fine.result.value) / fine.result.value).abs();
    assert!(rel < 1e-6, "{rel:e}");
}

#[test]
fn f3_vanishes_on_unrotated_a1() {
    // g₁ = 0 and the first component of Df(γ)γ − f(γ) is 0 for f₁ = y.
    let frame = reference_frame(Arc::new(SelfExcited::default()));
    let c3 = cond_c3(&frame, 0.0, &ConditionOptions::default()).unwrap();
    assert_eq!(c3.result.value, 0.0);
    assert_eq!(c3.verdict, Verdict::Fails);
}

fn mixed_forcing() -> Arc<dyn Perturbation> {
    Arc::new(ClosurePerturbation {
        name: "(cos t (1 + x), y)".into(),
        g: |x: Vec2, t: f64| Vec2::new(t.cos() * (1.0 + x.x), x.y),
        grad: |_x: Vec2, t: f64| Mat2::new(t.cos(), 0.0, 0.0, 1.0),
    })
}

#[test]
fn linear_in_forcing() {
    let opts = ConditionOptions::default();
    let g1: Arc<dyn Perturbation> = Arc::new(SelfExcited::default());
    let g2 = mixed_forcing();
    let combo: Arc<dyn Perturbation> = Arc::new(Sum {
        first: Arc::new(Scaled {
            inner: g1.clone(),
            factor: 2.0,
        }),
        second: g2.clone(),
    });
    // Rotated loop, so that no component of Df(γ)γ − f(γ) vanishes identically.
    let field = rotated(0.4);
    let orbit = homoclinic_core::homoclinic::HomoclinicOrbit::for_preset(&field).unwrap();
    let base = field.system(&ForcingPreset::None).unwrap();
    let eval = |g: Arc<dyn Perturbation>| {
        let f = build_frame(&base.with_perturbation(g), &orbit, WINDOW, &FrameOptions::default()).unwrap();
        let beta = 0.25;
        (
            cond_c1p(&f, beta, &opts).unwrap().result.value,
            cond_c3(&f, beta, &opts).unwrap().result.value,
            cond_c4(&f, beta, false, &opts).unwrap().f41.result.value,
        )
    };
    let (a, b, c) = (eval(g1), eval(g2), eval(combo));
    let close = |x: f64, y: f64| (x - y).abs() <= 1e-8 * (1.0 + y.abs());
    assert!(close(c.0, 2.0 * a.0 + b.0), "{c:?} {a:?} {b:?}");
    assert!(close(c.1, 2.0 * a.1 + b.1), "{c:?} {a:?} {b:?}");
    assert!(close(c.2, 2.0 * a.2 + b.2), "{c:?} {a:?} {b:?}");
    assert!(b.1.abs() > 1e-3 && b.2.abs() > 1e-3);
}

#[test]
fn f41_even_in_beta_for_time_even_forcing() {
    let g: Arc<dyn Perturbation> = Arc::new(ClosurePerturbation {
        name: "(cos t, 0)".into(),
        g: |_x: Vec2, t: f64| Vec2::new(t.cos(), 0.0),
        grad: |_x: Vec2, _t: f64| Mat2::ZERO,
    });
    let f = reference_frame(g);
    let opts = ConditionOptions::default();
    let plus = cond_c4(&f, 0.7, false, &opts).unwrap().f41;
    let minus = cond_c4(&f, -0.7, false, &opts).unwrap().f41;
    assert!(plus.result.value.abs() > 1e-2);
    assert!((plus.result.value - minus.result.value).abs() < 1e-9, "{plus:?} {minus:?}");
}

#[test]
fn level_damped_f1_cancels() {
    // The integrand of 𝓕₁ is not identically zero, but z = γ solves
    // ż = Az + (f − Df(γ)γ), so its solvability pairing vanishes.
    let field = homoclinic_core::systems::FieldPreset::PowerlawLevelDamped {
        nu: 1.0,
        mu: 1.0,
        p: 2,
        c: 0.3,
    };
    let frame = preset_frame(&field, &ForcingPreset::None, FrameNormalization::default(), WINDOW);
    let opts = ConditionOptions::default();
    let c1 = cond_c1(&frame, &opts).unwrap();
    assert!(c1.result.value.abs() < 1e-9, "{c1:?}");
    let sys = frame.system();
    let mass = line(&frame, |s| {
        let x = frame.gamma(s);
        wedge(sys.f(x), sys.jacobian_f(x).mul_vec(x)).abs() / frame.delta(s)
    });
    assert!(mass > 0.1, "{mass}");
}

#[test]
fn kappas_without_forcing() {
    let opts = ConditionOptions::default();
    let sup_k2 = |window: f64| {
        let frame = preset_frame(&rotated(0.4), &ForcingPreset::None, FrameNormalization::default(), window);
        let k = compute_kappas(&frame, 0.0, &opts).unwrap();
        assert_eq!(k.kappa1, 0.0);
        let mut sup: f64 = 0.0;
        for row in k.samples() {
            assert_eq!((row[3], row[4]), (0.0, 0.0));
            sup = sup.max(row[1].hypot(row[2]));
        }
        let deep = k.kappa2(-window);
        assert!(deep.norm() < 1e-3 * sup, "{deep:?}");
        sup
    };
    let (a, b) = (sup_k2(16.0), sup_k2(32.0));
    assert!(a > 0.0 && ((a - b) / b).abs() < 0.05, "{a} {b}");
}

fn c5_instance(mix: f64) -> VariationalFrame {
    preset_frame(
        &rotated(0.4),
        &ForcingPreset::Const { c: 1.0 },
        FrameNormalization { scale: 1.0, mix },
        WINDOW,
    )
}

fn f5(frame: &VariationalFrame, opts: &ConditionOptions) -> ConditionValue {
    let k = compute_kappas(frame, 0.0, opts).unwrap();
    cond_c5(frame, &k, opts).unwrap()
}

#[test]
fn f5_reproducible_under_refinement() {
    let frame = c5_instance(0.3);
    let coarse = f5(&frame, &ConditionOptions::default());
    let fine = f5(
        &frame,
        &ConditionOptions {
            plane_tol: 1e-11,
            line_tol: 1e-12,
            ..Default::default()
        },
    );
    let rel = ((coarse.result.value - fine.result.value) / fine.result.value).abs();
    assert!(rel < 1e-5, "{rel:e}");
}

#[test]
fn f5_is_linear_in_the_tangent_component_of_zeta() {
    // Adding mγ' to ζ shifts κ₂ + κ₃ by m (P(0) + R(0)) f(γ(t)), so 𝓕₅ is
    // affine in m; with ζ(0) ⟂ γ'(0) it vanishes on this instance.
    let opts = ConditionOptions::default();
    let at0 = f5(&c5_instance(0.0), &opts);
    let a = f5(&c5_instance(0.3), &opts).normalized;
    let b = f5(&c5_instance(-1.0), &opts).normalized;
    assert_eq!(at0.verdict, Verdict::Fails);
    assert!(a.abs() > 1.0);
    assert!((a / 0.3 - b / -1.0).abs() < 1e-6 * b.abs(), "{a} {b}");
}

#[test]
fn rescaling_zeta_keeps_normalized_values() {
    let opts = ConditionOptions::default();
    let base = f5(&c5_instance(0.3), &opts);
    let twice = f5(
        &preset_frame(
            &rotated(0.4),
            &ForcingPreset::Const { c: 1.0 },
            FrameNormalization { scale: 2.0, mix: 0.6 },
            WINDOW,
        ),
        &opts,
    );
    assert!((base.normalized - twice.normalized).abs() < 1e-6 * base.normalized.abs());
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(6))]

    #[test]
    fn hamiltonian_family_fails_c1_and_c4(nu in 0.5f64..2.0, mu in 0.5f64..2.0, p in 2u32..5) {
        let sys = homoclinic_core::systems::powerlaw_system(nu, mu, p, Arc::new(SelfExcited::default())).unwrap();
        let orbit = homoclinic_core::homoclinic::powerlaw_homoclinic(nu, mu, p).unwrap();
        let window = orbit.decay_window.max(WINDOW);
        let frame = build_frame(&sys, &orbit, window, &FrameOptions::default()).unwrap();
        let opts = ConditionOptions::default();
        prop_assert_eq!(cond_c1(&frame, &opts).unwrap().verdict, Verdict::Fails);
        for primed in [false, true] {
            let c4 = cond_c4(&frame, 0.0, primed, &opts).unwrap();
            prop_assert!(c4.f42.result.value.abs() <= 3.0 * c4.f42.result.abs_error_estimate);
            prop_assert_eq!(c4.verdict, Verdict::Fails);
        }
    }
}
