//! The acceptance gate: one test per criterion, each printing a single
//! PASS/FAIL line. Run with `--nocapture` to see the lines of passing tests.

mod common;

use std::f64::consts::SQRT_2;
use std::sync::Arc;
use std::time::Instant;

use homoclinic_core::bifurcation::*;
use homoclinic_core::conditions::*;
use homoclinic_core::planar::Perturbation;
use homoclinic_core::systems::{CosForcing, FieldPreset, ForcingPreset, PowerLaw, SelfExcited};
use homoclinic_core::variational::{build_frame, check_dichotomy, FrameNormalization, FrameOptions, VariationalFrame};
use homoclinic_core::Vec2;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use common::*;

fn report(n: u32, pass: bool, detail: String) {
    println!("criterion {n:>2}: {} | {detail}", if pass { "PASS" } else { "FAIL" });
    assert!(pass, "criterion {n} failed: {detail}");
}

fn a1() -> Arc<dyn Perturbation> {
    Arc::new(SelfExcited::default())
}

fn cos() -> Arc<dyn Perturbation> {
    Arc::new(CosForcing {
        amplitude: 1.0,
        frequency: 1.0,
    })
}

#[test]
fn criterion_01_closed_form_loop() {
    let law = PowerLaw::new(1.0, 1.0, 2).unwrap();
    let (sys, orbit) = reference(a1());
    let residual = orbit.residual(&sys, 20.0, 40_000);
    let shape = (-2000..=2000)
        .map(|i| {
            let t = i as f64 * 0.01;
            (orbit.gamma(t).x - SQRT_2 / t.cosh()).abs()
        })
        .fold(0.0, f64::max);
    let pass = law.x_max() == SQRT_2 && residual < 1e-10 && shape < 1e-14;
    report(
        1,
        pass,
        format!("x_max = {:.17}, ODE residual {residual:.2e}, |γ₁ − √2 sech t| ≤ {shape:.1e}", law.x_max()),
    );
}

#[test]
fn criterion_02_wronskian() {
    let ham = reference_frame(a1());
    let d0 = ham.delta(0.0);
    let var = ham.grid().iter().map(|&t| (ham.delta(t) / d0 - 1.0).abs()).fold(0.0, f64::max);
    let t = ham.window;
    let ham_gap = ((ham.delta(t) - ham.delta(-t)) / d0).abs();

    // Level-damped loop: tr A(t) = c y(t)², so Δ(t) = Δ(0) exp(2c tanh³t / 3).
    let c = 0.3;
    let field = FieldPreset::PowerlawLevelDamped {
        nu: 1.0,
        mu: 1.0,
        p: 2,
        c,
    };
    let damped = preset_frame(&field, &ForcingPreset::None, FrameNormalization::default(), WINDOW);
    let dd0 = damped.delta(0.0);
    let abel = damped
        .grid()
        .iter()
        .map(|&s| {
            let exact = dd0 * (2.0 * c * s.tanh().powi(3) / 3.0).exp();
            ((damped.delta(s) - exact) / exact).abs()
        })
        .fold(0.0, f64::max);
    let t = damped.window;
    let damped_gap = ((damped.delta(t) - damped.delta(-t)) / damped.delta(-t)).abs();
    let pass = var < 1e-8 && abel < 1e-6 && ham_gap < 1e-4 && damped_gap < 1e-4;
    report(
        2,
        pass,
        format!(
            "Hamiltonian: Δ variation {var:.1e}, end gap {ham_gap:.1e}; level-damped c = {c}: Abel error {abel:.1e}, \
             end gap {damped_gap:.4} (exp(4c/3) − 1 = {:.4})",
            (4.0 * c / 3.0f64).exp() - 1.0
        ),
    );
}

#[test]
fn criterion_03_dichotomy() {
    let (sys, orbit) = reference(a1());
    let k = |w: f64| {
        let f = build_frame(&sys, &orbit, w, &FrameOptions::default()).unwrap();
        check_dichotomy(&f).unwrap()
    };
    let (k15, k30) = (k(15.0), k(30.0));
    let drift = ((k30 - k15) / k15).abs();
    report(
        3,
        k15.is_finite() && drift < 0.05,
        format!("k(T=15) = {k15:.6}, k(T=30) = {k30:.6}, drift {drift:.2e}"),
    );
}

fn balanced<'a>(ws: &'a FrameWorkspace<'a>, raw: impl Fn(f64) -> Vec2 + 'a) -> impl Fn(f64) -> Vec2 + 'a {
    let f = ws.frame;
    let m = ws.melnikov(&raw);
    move |t| raw(t) - f.gamma_prime(t).perp() * (m * f.delta(t) / ws.gamma_l2_sq)
}

#[test]
fn criterion_04_bounded_solution_iff_zero_residual() {
    let (sys, orbit) = reference(a1());
    let mut sups = Vec::new();
    let mut residual: f64 = 0.0;
    for w in [20.0, 40.0] {
        let frame = build_frame(&sys, &orbit, w, &FrameOptions::default()).unwrap();
        let ws = FrameWorkspace::new(&frame);
        let forcing = balanced(&ws, |t| frame.system().g(frame.gamma(t), t));
        let r = melnikov_residual(&frame, &forcing, &ConditionOptions::default()).unwrap();
        residual = residual.max(r.value.abs());
        sups.push(green_solve(&ws, &forcing, &GreenOptions::default()).unwrap().sup_norm());
    }
    let change = ((sups[1] - sups[0]) / sups[0]).abs();

    let frame = reference_frame(a1());
    let ws = FrameWorkspace::new(&frame);
    let raw = |t: f64| frame.system().g(frame.gamma(t), t);
    let diag = green_solve(
        &ws,
        &raw,
        &GreenOptions {
            mode: GreenMode::Diagnostic,
            ..Default::default()
        },
    )
    .unwrap();
    let rate = diag.growth_rate.unwrap();
    let rate_err = (rate - frame.omega).abs() / frame.omega;
    report(
        4,
        residual < 1e-10 && change < 0.01 && rate_err < 0.15,
        format!(
            "balanced A1: residual {residual:.1e}, sup-norm {:.6} vs {:.6} (change {change:.1e}); \
             raw A1: residual {:.4}, growth rate {rate:.4} vs ω = {}",
            sups[0], sups[1], diag.melnikov, frame.omega
        ),
    );
}

#[test]
fn criterion_05_projection_suite() {
    let frame = reference_frame(a1());
    let ws = FrameWorkspace::new(&frame);
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let (mut idem, mut resid, mut ident): (f64, f64, f64) = (0.0, 0.0, 0.0);
    for _ in 0..20 {
        let c: [f64; 6] = std::array::from_fn(|_| rng.random_range(-2.0..2.0));
        let width = rng.random_range(0.5..3.0);
        let k = rng.random_range(0.2..3.0);
        let forcing = move |t: f64| {
            let env = 1.0 / (t / width).cosh();
            Vec2::new(
                env * (c[0] * (k * t).cos() + c[1] * t),
                env * (c[2] + c[3] * (k * t + c[4]).sin() + c[5] * env),
            )
        };
        let p = Projection::new(&ws, &forcing);
        let pf = |t: f64| p.eval(&ws, t);
        let pp = Projection::new(&ws, &pf);
        let scale = 1.0 + p.coefficient.abs();
        idem = idem.max((pp.coefficient - p.coefficient).abs() / scale);
        let rest = |t: f64| forcing(t) - pf(t);
        resid = resid.max(ws.melnikov(&rest).abs());
        let z = green_solve(&ws, &rest, &GreenOptions::default()).unwrap();
        let fscale = ws.grid().iter().map(|&t| rest(t).norm()).fold(0.0, f64::max);
        let h = 1e-4;
        for i in -80..=80 {
            let t = i as f64 * 0.1 + 0.0123;
            let dz = (z.eval(t + h) - z.eval(t - h)) * (0.5 / h);
            let lz = dz - frame.a_matrix(t).mul_vec(z.eval(t));
            ident = ident.max((lz - rest(t)).norm() / fscale);
        }
    }
    report(
        5,
        idem < 1e-6 && resid < 1e-6 && ident < 1e-6,
        format!("20 forcings: |p²F − pF| ≤ {idem:.1e}, |∫J(I−p)F| ≤ {resid:.1e}, |L k F − F| / |F| ≤ {ident:.1e}"),
    );
}

#[test]
fn criterion_06_hamiltonian_failures() {
    let frame = reference_frame(a1());
    let opts = ConditionOptions::default();
    let c1 = cond_c1(&frame, &opts).unwrap();
    let c4 = cond_c4(&frame, 0.0, false, &opts).unwrap();
    let c4p = cond_c4(&frame, 0.0, true, &opts).unwrap();
    let vanish = |v: &ConditionValue| {
        v.result.value.abs() <= 3.0 * v.result.abs_error_estimate && v.result.abs_error_estimate < 1e-8
    };
    let pass = vanish(&c4.f42) && vanish(&c4p.f42) && c1.verdict == Verdict::Fails && c1.result.value.abs() < 1e-6;
    report(
        6,
        pass,
        format!(
            "F4,2 = {:.1e} ± {:.1e}, F4,2' = {:.1e} ± {:.1e}, F1 = {:.1e} ± {:.1e} ({:?})",
            c4.f42.result.value,
            c4.f42.result.abs_error_estimate,
            c4p.f42.result.value,
            c4p.f42.result.abs_error_estimate,
            c1.result.value,
            c1.result.abs_error_estimate,
            c1.verdict
        ),
    );
}

#[test]
fn criterion_07_line_integral_form() {
    let g = a1();
    let frame = reference_frame(g.clone());
    let c1p = cond_c1p(&frame, 0.0, &ConditionOptions::default()).unwrap();
    let law = PowerLaw::new(1.0, 1.0, 2).unwrap();
    let line = f1_prime_line_form(&law, g.as_ref(), 0.0, 1e-11).unwrap();
    let rel = ((line.value - c1p.result.value) / c1p.result.value).abs();
    report(
        7,
        rel < 1e-6 && c1p.result.value > 0.0,
        format!("time integral {:.12}, line integral {:.12}, relative gap {rel:.1e}", c1p.result.value, line.value),
    );
}

fn sweep(g: Arc<dyn Perturbation>, eps: &[f64]) -> Vec<Result<f64, String>> {
    let (sys, orbit) = reference(g);
    eps.iter()
        .map(|&e| {
            direct_verify(&sys, &orbit, e, &BvpOptions::default())
                .map(|s| s.distance)
                .map_err(|err| err.to_string())
        })
        .collect()
}

fn slope(eps: &[f64], d: &[Result<f64, String>]) -> Option<f64> {
    let ok: Vec<(f64, f64)> = eps
        .iter()
        .zip(d)
        .filter_map(|(e, r)| r.as_ref().ok().map(|v| (e.ln(), v.ln())))
        .collect();
    if ok.len() < 2 {
        return None;
    }
    let n = ok.len() as f64;
    let mx = ok.iter().map(|p| p.0).sum::<f64>() / n;
    let my = ok.iter().map(|p| p.1).sum::<f64>() / n;
    let sxy: f64 = ok.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    let sxx: f64 = ok.iter().map(|p| (p.0 - mx).powi(2)).sum();
    Some(sxy / sxx)
}

#[test]
fn criterion_08_distance_rate() {
    let eps = [1e-2, 1e-3, 1e-4];
    let start = Instant::now();
    let primary = sweep(a1(), &eps);
    let elapsed = start.elapsed().as_secs_f64();
    let supplementary = sweep(cos(), &eps);
    let s_a1 = slope(&eps, &primary);
    let s_cos = slope(&eps, &supplementary);
    let pass = primary.iter().all(|r| r.is_ok()) && s_a1.is_some_and(|s| (s - 1.0).abs() <= 0.2) && elapsed <= 300.0;
    let show = |d: &[Result<f64, String>]| {
        d.iter()
            .map(|r| match r {
                Ok(v) => format!("{v:.3e}"),
                Err(e) => format!("error ({e})"),
            })
            .collect::<Vec<_>>()
            .join(", ")
    };
    report(
        8,
        pass,
        format!(
            "A1 forcing: distances [{}], slope {s_a1:?}, {elapsed:.1}s; supplementary (0, cos t): [{}], slope {}",
            show(&primary),
            show(&supplementary),
            s_cos.map_or("n/a".into(), |s| format!("{s:.4}"))
        ),
    );
}

#[test]
fn criterion_09_reduction_consistency() {
    let opts = LsOptions::default();
    // η at the trivial point and the ξ-derivative ratio test on the A1 instance.
    let frame = reference_frame(a1());
    let ws = FrameWorkspace::new(&frame);
    let trivial = solve_eta(&ws, 0.0, 1.0, 0.0, 0.0, &opts).unwrap();
    let exact_zero = trivial.eta.values().iter().all(|v| *v == Vec2::ZERO);
    let ratio = |xi: f64| solve_eta(&ws, xi, 1.0, 0.0, 0.0, &opts).unwrap().eta.sup_norm() / xi;
    let (r2, r3) = (ratio(1e-2), ratio(1e-3));

    // Root of B in β for the (0, cos t) forcing, then reconstruct and compare.
    let eps = 1e-3;
    let (sys, orbit) = reference(cos());
    let frame = build_frame(&sys, &orbit, WINDOW, &FrameOptions::default()).unwrap();
    let ws = FrameWorkspace::new(&frame);
    let func = LsBifurcation { ws: &ws, opts };
    let slice = Slice {
        variable: ScanVariable::Beta,
        lo: -0.7,
        hi: 0.9,
        samples: 5,
        xi: 0.0,
        alpha: 1.0,
        beta: 0.0,
    };
    let scan = scan_roots(&func, &slice, &[eps]).unwrap();
    let root = scan.scans[0].roots[0].value;
    let state = solve_eta(&ws, 0.0, 1.0, root, eps, &opts).unwrap();
    let mut ode_res: f64 = 0.0;
    for i in -1800..=1800 {
        let tau = i as f64 * 0.01 + 0.003;
        let t = tau + root;
        let (eta, deta) = state.eta.eval_with_derivative(t);
        let x = frame.gamma(t) + eta;
        let dx = frame.gamma_prime(t) + deta;
        ode_res = ode_res.max((dx - sys.rhs(x, tau, eps)).norm());
    }
    let (ls_dist, _) = orbit_distance(&|tau| state.solution(&ws, tau), &orbit, 0.5 * WINDOW, 1.0);
    let bvp = direct_verify(&sys, &orbit, eps, &BvpOptions::default()).unwrap();
    let gap = (ls_dist - bvp.distance).abs() / bvp.distance;
    report(
        9,
        exact_zero && r3 < r2 && ode_res < 1e-5 && gap < 0.1,
        format!(
            "η(0,1,0,0) ≡ 0: {exact_zero}; |η|/ξ = {r2:.3e} (ξ=1e-2), {r3:.3e} (ξ=1e-3); (0, cos t), ε = {eps}: \
             root β = {root:.2e}, ODE residual {ode_res:.1e}, distance {ls_dist:.5e} vs shooting {:.5e} (gap {gap:.1e})",
            bvp.distance
        ),
    );
}

#[test]
fn criterion_10_scanner() {
    let synth = scan_roots(
        &SyntheticQuadratic,
        &Slice {
            variable: ScanVariable::Xi,
            lo: -1.0,
            hi: 1.0,
            samples: 40,
            xi: 0.0,
            alpha: 1.0,
            beta: 0.0,
        },
        &[1e-2, 1e-3, -1e-2, -1e-3],
    )
    .unwrap();
    let frame = reference_frame(a1());
    let ws = FrameWorkspace::new(&frame);
    let b0 = bifurcation_b(&ws, 0.0, 1.0, 0.0, 0.0, &LsOptions::default()).unwrap();
    let func = LsBifurcation {
        ws: &ws,
        opts: LsOptions::default(),
    };
    let trivial = scan_roots(
        &func,
        &Slice {
            variable: ScanVariable::Alpha,
            lo: 0.9,
            hi: 1.1,
            samples: 5,
            xi: 0.0,
            alpha: 1.0,
            beta: 0.0,
        },
        &[0.0],
    )
    .unwrap();
    let has_trivial = trivial.scans[0].roots.iter().any(|r| r.contains(1.0, 1e-12));
    report(
        10,
        synth.classification == Classification::SignDependentPair && b0 == 0.0 && has_trivial,
        format!(
            "synthetic: {:?} (ε>0: {:?} roots, ε<0: {:?}); B(0,1,0,0) = {b0:e}; ε = 0 root at α = 1: {has_trivial}",
            synth.classification, synth.positive_count, synth.negative_count
        ),
    );
}

fn verdicts(frame: &VariationalFrame) -> Vec<(&'static str, Verdict)> {
    evaluate_all(frame, 0.0, &ConditionOptions::default()).unwrap().verdicts().to_vec()
}

#[test]
fn criterion_11_frame_invariance() {
    let instances: [(&str, FieldPreset, ForcingPreset); 2] = [
        ("power-law + A1", FieldPreset::default(), ForcingPreset::A1),
        ("rotated 0.4 + const", rotated(0.4), ForcingPreset::Const { c: 1.0 }),
    ];
    let mut pass = true;
    let mut lines = Vec::new();
    for (name, field, forcing) in instances {
        let base = verdicts(&preset_frame(&field, &forcing, FrameNormalization::default(), WINDOW));
        let moved = verdicts(&preset_frame(
            &field,
            &forcing,
            FrameNormalization { scale: 2.0, mix: 0.3 },
            WINDOW,
        ));
        let changed: Vec<String> = base
            .iter()
            .zip(&moved)
            .filter(|(a, b)| a.1 != b.1)
            .map(|(a, b)| format!("{} {:?} -> {:?}", a.0, a.1, b.1))
            .collect();
        pass &= changed.is_empty();
        lines.push(if changed.is_empty() {
            format!("{name}: unchanged")
        } else {
            format!("{name}: {}", changed.join(", "))
        });
    }
    report(11, pass, lines.join("; "));
}
