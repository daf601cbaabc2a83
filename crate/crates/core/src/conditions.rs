//! The condition functionals C1–C6 along a homoclinic orbit, with verdicts.
//!
//! All values are reported twice: raw (in the units of the frame that was
//! passed in) and normalized to `Δ(0) = 1`. Verdicts use the normalized
//! values, so they do not depend on how `ζ` was scaled.

use std::cell::RefCell;
use std::collections::HashMap;

use serde::Serialize;

use crate::error::{Error, Result};
use crate::homoclinic::HomoclinicOrbit;
use crate::planar::{wedge, Perturbation, PlanarSystem, Vec2};
use crate::quadrature::{
    cumulative_integral, gauss_legendre5, integrate_interval, integrate_line, integrate_plane,
    DecayingIntegrand1D, QuadResult,
};
use crate::systems::PowerLaw;
use crate::variational::{FrameNormalization, VariationalFrame};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Verdict {
    /// The functional is nonzero beyond threshold and error bar.
    Holds,
    /// The functional is below threshold.
    Fails,
    /// Above threshold but within three error estimates.
    Indeterminate,
    /// The functional could not be evaluated (e.g. `κ₁` undefined).
    Undetermined,
}

impl Verdict {
    pub fn classify(value: f64, abs_error: f64, threshold: f64) -> Verdict {
        if !value.is_finite() {
            Verdict::Undetermined
        } else if value.abs() > threshold.max(3.0 * abs_error) {
            Verdict::Holds
        } else if value.abs() <= threshold {
            Verdict::Fails
        } else {
            Verdict::Indeterminate
        }
    }

    /// All of the parts must hold; any failing part fails the whole.
    pub fn all(parts: &[Verdict]) -> Verdict {
        if parts.contains(&Verdict::Fails) {
            Verdict::Fails
        } else if parts.contains(&Verdict::Undetermined) {
            Verdict::Undetermined
        } else if parts.contains(&Verdict::Indeterminate) {
            Verdict::Indeterminate
        } else {
            Verdict::Holds
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct Thresholds {
    /// Zero threshold in normalized units (`Δ(0) = 1`).
    pub zero: f64,
    /// Relative tolerance for `g(x, t₁) ≠ g(x, t₂)` in C6.
    pub c6_rel: f64,
}

impl Default for Thresholds {
    fn default() -> Self {
        Thresholds {
            zero: 1e-6,
            c6_rel: 1e-9,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct ConditionOptions {
    pub line_tol: f64,
    pub plane_tol: f64,
    /// Half-width (in units of `1/ω`) of the quadrature core region.
    pub core_periods: f64,
    pub thresholds: Thresholds,
}

impl Default for ConditionOptions {
    fn default() -> Self {
        ConditionOptions {
            line_tol: 1e-11,
            plane_tol: 1e-9,
            core_periods: 4.0,
            thresholds: Thresholds::default(),
        }
    }
}

/// One evaluated functional.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct ConditionValue {
    pub result: QuadResult,
    /// Value rescaled to `Δ(0) = 1`.
    pub normalized: f64,
    pub normalized_error: f64,
    pub verdict: Verdict,
}

impl ConditionValue {
    fn new(result: QuadResult, delta0: f64, delta_power: i32, threshold: f64) -> Self {
        let s = delta0.powi(delta_power);
        let normalized = result.value * s;
        let normalized_error = result.abs_error_estimate * s.abs();
        ConditionValue {
            result,
            normalized,
            normalized_error,
            verdict: Verdict::classify(normalized, normalized_error, threshold),
        }
    }
}

/// Per-time quantities along the orbit that the functionals are built from.
struct Along<'a> {
    frame: &'a VariationalFrame,
    sys: &'a PlanarSystem,
    eq: Vec2,
    beta: f64,
}

struct Point {
    /// `f(γ)`.
    f: Vec2,
    /// `(⟨∇f₁(γ), γ−x₀⟩ − f₁(γ), ⟨∇f₂(γ), γ−x₀⟩ − f₂(γ))`.
    h: Vec2,
    /// Sums of all entries of `D²f₁(γ)` and `D²f₂(γ)`.
    sigma: Vec2,
    delta: f64,
}

impl<'a> Along<'a> {
    fn new(frame: &'a VariationalFrame, beta: f64) -> Self {
        Along {
            frame,
            sys: frame.system(),
            eq: frame.orbit().saddle.equilibrium,
            beta,
        }
    }

    fn point(&self, t: f64) -> Point {
        let x = self.frame.gamma(t);
        let f = self.sys.f(x);
        let pos = x - self.eq;
        let h = self.sys.jacobian_f(x).mul_vec(pos) - f;
        let hs = self.sys.hessians_f(x);
        Point {
            f,

            h,
            sigma: Vec2::new(hs[0].entry_sum(), hs[1].entry_sum()),
            delta: wedge(f, self.frame.zeta(t)),
        }
    }

    fn g(&self, t: f64) -> Vec2 {
        self.sys.g(self.frame.gamma(t), t - self.beta)
    }

    fn rate(&self) -> f64 {
        self.frame.omega
    }

    fn core(&self, opts: &ConditionOptions) -> f64 {
        (opts.core_periods / self.rate()).min(self.frame.window)
    }

    fn line<F: Fn(f64) -> f64>(&self, f: F, opts: &ConditionOptions) -> Result<QuadResult> {
        let d = DecayingIntegrand1D::new(f, self.rate(), self.core(opts)).with_max_window(self.frame.window);
        integrate_line(&d, opts.line_tol)
    }

    fn plane<F: Fn(f64, f64) -> f64>(&self, f: F, opts: &ConditionOptions) -> Result<QuadResult> {
        integrate_plane(f, self.rate(), self.core(opts), self.frame.window, opts.plane_tol)
    }
}

/// Memoizes a per-time quantity; the iterated plane quadrature revisits the
/// same inner nodes for many outer nodes.
struct Memo<T: Copy, F: Fn(f64) -> T> {
    f: F,
    cache: RefCell<HashMap<u64, T>>,
}

impl<T: Copy, F: Fn(f64) -> T> Memo<T, F> {
    fn new(f: F) -> Self {
        Memo {
            f,
            cache: RefCell::new(HashMap::new()),
        }
    }

    fn get(&self, t: f64) -> T {
        if let Some(v) = self.cache.borrow().get(&t.to_bits()) {
            return *v;
        }
        let v = (self.f)(t);
        self.cache.borrow_mut().insert(t.to_bits(), v);
        v
    }
}

/// `∫ (1/Δ(s)) f(γ(s)) ∧ F(s) ds`: the solvability pairing of a forcing `F`.
pub fn melnikov_pairing<F: Fn(f64) -> Vec2>(frame: &VariationalFrame, forcing: F, opts: &ConditionOptions) -> Result<QuadResult> {
    let al = Along::new(frame, 0.0);
    al.line(
        |s| {
            let fs = frame.gamma_prime(s);
            wedge(fs, forcing(s)) / frame.delta(s)
        },
        opts,
    )
}

/// C1: `𝓕₁ = ∫ (1/Δ) f(γ) ∧ Df(γ)(γ − x₀) ds`.
pub fn cond_c1(frame: &VariationalFrame, opts: &ConditionOptions) -> Result<ConditionValue> {
    let al = Along::new(frame, 0.0);
    let r = al.line(
        |s| {
            let p = al.point(s);
            wedge(p.f, p.h + p.f) / p.delta
        },
        opts,
    )?;
    Ok(ConditionValue::new(r, frame.delta(0.0), 1, opts.thresholds.zero))
}

/// C1′: `𝓕₁′ = ∫ (1/Δ) f(γ(s)) ∧ g(γ(s), s − β) ds`.
pub fn cond_c1p(frame: &VariationalFrame, beta: f64, opts: &ConditionOptions) -> Result<ConditionValue> {
    let al = Along::new(frame, beta);
    let r = al.line(|s| wedge(frame.gamma_prime(s), al.g(s)) / frame.delta(s), opts)?;
    Ok(ConditionValue::new(r, frame.delta(0.0), 1, opts.thresholds.zero))
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct C2Result {
    /// `sup |(γ − x₀) ∧ f(γ)|` over the sampled orbit.
    pub sup: f64,
    pub argmax_t: f64,
    pub verdict: Verdict,
}

/// C2: `γ ∧ f(γ)` is not identically zero.
pub fn cond_c2(sys: &PlanarSystem, orbit: &HomoclinicOrbit, half_window: f64, samples: usize, threshold: f64) -> C2Result {
    let eq = orbit.saddle.equilibrium;
    let mut best = (0.0, 0.0);
    for (t, x) in orbit.samples(half_window, samples.max(2)) {
        let v = wedge(x - eq, sys.f(x)).abs();
        if v > best.0 {
            best = (v, t);
        }
    }
    C2Result {
        sup: best.0,
        argmax_t: best.1,
        verdict: if best.0 > threshold { Verdict::Holds } else { Verdict::Fails },
    }
}

/// C3: `𝓕₃ = ∬ f₂(γ(s)) f₁(γ(t)) / (Δ(s)Δ(t)) · G(s,t) ∧ F̂(s,t) ds dt`.
pub fn cond_c3(frame: &VariationalFrame, beta: f64, opts: &ConditionOptions) -> Result<ConditionValue> {
    let al = Along::new(frame, beta);
    // s-side: (a(s) g₁(s), a(s) h₁(s)); t-side: (b(t) h₂(t), b(t) g₂(t))
    let s_side = Memo::new(|s: f64| {
        let p = al.point(s);
        let a = p.f.y / p.delta;
        (a * al.g(s).x, a * p.h.x)
    });
    let t_side = Memo::new(|t: f64| {
        let p = al.point(t);
        let b = p.f.x / p.delta;
        (b * p.h.y, b * al.g(t).y)
    });
    let r = al.plane(
        |s, t| {
            let (ag1, ah1) = s_side.get(s);
            let (bh2, bg2) = t_side.get(t);
            ag1 * bh2 - bg2 * ah1
        },
        opts,
    )?;
    Ok(ConditionValue::new(r, frame.delta(0.0), 2, opts.thresholds.zero))
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct C4Result {
    pub primed: bool,
    pub f41: ConditionValue,
    pub f42: ConditionValue,
    pub f43: ConditionValue,
    pub verdict: Verdict,
}

/// C4 (`primed = false`) or C4′ (`primed = true`, indices 1 ↔ 2).
pub fn cond_c4(frame: &VariationalFrame, beta: f64, primed: bool, opts: &ConditionOptions) -> Result<C4Result> {
    let al = Along::new(frame, beta);
    let d0 = frame.delta(0.0);
    let thr = opts.thresholds.zero;
    // (i, j) = (2, 1) for C4 and (1, 2) for C4′.
    let (i, j) = if primed { (0, 1) } else { (1, 0) };
    let f41 = al.line(
        |s| {
            let p = al.point(s);
            p.f.get(i) * al.g(s).get(j) / p.delta
        },
        opts,
    )?;
    let f43 = al.line(
        |s| {
            let p = al.point(s);
            p.f.get(i) * p.h.get(j) / p.delta
        },
        opts,
    )?;
    // 𝓕₄,₂  = ∬ f₁(t) f₂(s)/(ΔΔ) F̄₂(t) ∧ F̄₁(s),
    // 𝓕₄,₂′ = ∬ f₂(t) f₁(s)/(ΔΔ) F̄₁(t) ∧ F̄₂(s).
    let s_side = Memo::new(|s: f64| {
        let p = al.point(s);
        let a = p.f.get(i) / p.delta;
        (a * p.sigma.get(j), a * p.h.get(j))
    });
    let t_side = Memo::new(|t: f64| {
        let p = al.point(t);
        let b = p.f.get(j) / p.delta;
        (b * p.sigma.get(i), b * p.h.get(i))
    });
    let f42 = al.plane(
        |s, t| {
            let (a_sig, a_h) = s_side.get(s);
            let (b_sig, b_h) = t_side.get(t);
            b_sig * a_h - b_h * a_sig
        },
        opts,
    )?;
    let f41 = ConditionValue::new(f41, d0, 1, thr);
    let f42 = ConditionValue::new(f42, d0, 2, thr);
    let f43 = ConditionValue::new(f43, d0, 1, thr);
    Ok(C4Result {
        primed,
        f41,
        f42,
        f43,
        verdict: Verdict::all(&[f41.verdict, f42.verdict, f43.verdict]),
    })
}

/// Running integral `∫₀^t φ` that can be evaluated at any `t` in range.
/// Accumulated outward from `t = 0`, so integrands that grow towards the
/// window edges do not cancel catastrophically near the origin.
struct Running<F: Fn(f64) -> f64> {
    grid: Vec<f64>,
    cum: Vec<f64>,
    f: F,
}

impl<F: Fn(f64) -> f64> Running<F> {
    fn new(grid: &[f64], f: F) -> Self {
        let i0 = grid.iter().position(|&t| t == 0.0).expect("frame grid contains t = 0");
        let left: Vec<f64> = grid[..=i0].iter().rev().copied().collect();
        let mut cum = cumulative_integral(&left, &f);
        cum.reverse();
        cum.extend(cumulative_integral(&grid[i0..], &f).into_iter().skip(1));
        Running {
            grid: grid.to_vec(),
            cum,
            f,
        }
    }

    fn at(&self, t: f64) -> f64 {
        let i = self.grid.partition_point(|&v| v <= t).saturating_sub(1).min(self.grid.len() - 2);
        // integrate from the grid node on the side of t = 0
        let j = if self.grid[i + 1] <= 0.0 { i + 1 } else { i };
        self.cum[j] + gauss_legendre5(&self.f, self.grid[j], t)
    }

    fn first(&self) -> f64 {
        self.cum[0]
    }

    fn last(&self) -> f64 {
        *self.cum.last().unwrap()
    }

    /// Exponential tail beyond the end of the grid on the given side.
    fn tail(&self, right: bool) -> f64 {
        let (t0, t1) = if right {
            let e = *self.grid.last().unwrap();
            (e, e - 1.0)
        } else {
            (self.grid[0], self.grid[0] + 1.0)
        };
        let (v0, v1) = ((self.f)(t0), (self.f)(t1));
        if v0 == 0.0 || v0.signum() != v1.signum() || v1.abs() <= v0.abs() {
            return 0.0;
        }
        v0 / (v1 / v0).ln()
    }
}

/// The auxiliary functions entering C5.
///
/// `κ₂ⱼ(t) = ζⱼ(t) P(t) + fⱼ(γ(t)) Q(t)` and `κ₃ⱼ(t) = ζⱼ(t) R(t) + fⱼ(γ(t)) S(t)`
/// with `P, R` running integrals from `−∞` and `Q, S` from `0`. For `t > 0`
/// the integrals from `−∞` are taken as `total − ∫_t^∞`, and the total is set
/// to zero when its functional fails (this is what keeps `ζⱼ P` bounded).
pub struct KappaFunctions<'a> {
    frame: &'a VariationalFrame,
    pub kappa1: f64,
    pub beta: f64,
    p_total: f64,
    r_total: f64,
    tails: [f64; 4],
    p: Running<Box<dyn Fn(f64) -> f64 + 'a>>,
    q: Running<Box<dyn Fn(f64) -> f64 + 'a>>,
    r: Running<Box<dyn Fn(f64) -> f64 + 'a>>,
    s: Running<Box<dyn Fn(f64) -> f64 + 'a>>,
}

impl<'a> KappaFunctions<'a> {
    fn from_minus_inf<F: Fn(f64) -> f64>(run: &Running<F>, total: f64, tail_l: f64, tail_r: f64, t: f64) -> f64 {
        if t <= 0.0 {
            tail_l + run.at(t) - run.first()
        } else {
            total - (run.last() - run.at(t) + tail_r)
        }
    }

    fn p_at(&self, t: f64) -> f64 {
        Self::from_minus_inf(&self.p, self.p_total, self.tails[0], self.tails[1], t)
    }

    fn r_at(&self, t: f64) -> f64 {
        Self::from_minus_inf(&self.r, self.r_total, self.tails[2], self.tails[3], t)
    }

    pub fn kappa2(&self, t: f64) -> Vec2 {
        let z = self.frame.zeta(t);
        let f = self.frame.gamma_prime(t);
        z * self.p_at(t) + f * self.q.at(t)
    }

    pub fn kappa3(&self, t: f64) -> Vec2 {
        let z = self.frame.zeta(t);
        let f = self.frame.gamma_prime(t);
        z * self.r_at(t) + f * self.s.at(t)
    }

    /// `κ₁ (γ − x₀) + κ₂ + κ₃`, the weight applied to the Hessian rows.
    pub fn weight(&self, t: f64) -> Vec2 {
        let pos = self.frame.gamma(t) - self.frame.orbit().saddle.equilibrium;
        pos * self.kappa1 + self.kappa2(t) + self.kappa3(t)
    }

    /// Rows `(t, κ₂₁, κ₂₂, κ₃₁, κ₃₂)` on the frame grid.
    pub fn samples(&self) -> Vec<[f64; 5]> {
        self.frame
            .grid()
            .iter()
            .map(|&t| {
                let (k2, k3) = (self.kappa2(t), self.kappa3(t));
                [t, k2.x, k2.y, k3.x, k3.y]
            })
            .collect()
    }
}

/// Build `κ₁, κ₂ⱼ, κ₃ⱼ`. Needs `𝓕₄,₃ ≠ 0` (it is the denominator of `κ₁`).
pub fn compute_kappas<'a>(frame: &'a VariationalFrame, beta: f64, opts: &ConditionOptions) -> Result<KappaFunctions<'a>> {
    let c4 = cond_c4(frame, beta, false, opts)?;
    let c1 = cond_c1(frame, opts)?;
    let c1p = cond_c1p(frame, beta, opts)?;
    if c4.f43.verdict != Verdict::Holds {
        return Err(Error::KappaDenominator {
            value: c4.f43.normalized,
        });
    }
    let kappa1 = -c4.f41.result.value / c4.f43.result.value;
    let sys = frame.system();
    let eq = frame.orbit().saddle.equilibrium;
    let grid = frame.grid();
    let dfg = move |s: f64| {
        let x = frame.gamma(s);
        sys.jacobian_f(x).mul_vec(x - eq)
    };
    let g = move |s: f64| sys.g(frame.gamma(s), s - beta);
    let p: Box<dyn Fn(f64) -> f64 + 'a> = Box::new(move |s| wedge(frame.gamma_prime(s), dfg(s)) / frame.delta(s));
    let q: Box<dyn Fn(f64) -> f64 + 'a> =
        Box::new(move |s| wedge(dfg(s) - frame.gamma_prime(s), frame.zeta(s)) / frame.delta(s));
    let r: Box<dyn Fn(f64) -> f64 + 'a> = Box::new(move |s| wedge(frame.gamma_prime(s), g(s)) / frame.delta(s));
    let sfun: Box<dyn Fn(f64) -> f64 + 'a> = Box::new(move |s| wedge(g(s), frame.zeta(s)) / frame.delta(s));
    let p = Running::new(grid, p);
    let q = Running::new(grid, q);
    let r = Running::new(grid, r);
    let s = Running::new(grid, sfun);
    let snap = |c: &ConditionValue| if c.verdict == Verdict::Fails { 0.0 } else { c.result.value };
    let tails = [p.tail(false), p.tail(true), r.tail(false), r.tail(true)];
    let k = KappaFunctions {
        frame,
        kappa1,
        beta,
        p_total: snap(&c1),
        r_total: snap(&c1p),
        tails,
        p,
        q,
        r,
        s,
    };
    for &t in grid {
        if !(k.kappa2(t).is_finite() && k.kappa3(t).is_finite()) {
            return Err(Error::Integration(format!("kappa not finite at t = {t}")));
        }
    }
    Ok(k)
}

/// C5: `𝓕₅ = ∬ f₁(γ(t)) f₂(γ(s)) / (Δ(t)Δ(s)) · F̃₂(t) ∧ F̃₁(s) dt ds`,
/// where `F̃ₖ = (Σᵢ ∂ᵢgₖ + Σᵢⱼ (D²fₖ)ᵢⱼ wⱼ, ⟨∇fₖ, γ−x₀⟩ − fₖ)` and `w` is
/// [`KappaFunctions::weight`].
pub fn cond_c5(frame: &VariationalFrame, kappas: &KappaFunctions, opts: &ConditionOptions) -> Result<ConditionValue> {
    let al = Along::new(frame, kappas.beta);
    let sys = frame.system();
    let tilde = |t: f64, k: usize| {
        let x = frame.gamma(t);
        let w = kappas.weight(t);
        let dg = sys.grad_g(x, t - kappas.beta).row(k);
        let hess = sys.hessians_f(x)[k];
        let hw = hess.mul_vec(w);
        dg.x + dg.y + hw.x + hw.y
    };
    let s_side = Memo::new(|s: f64| {
        let p = al.point(s);
        let a = p.f.y / p.delta;
        (a * tilde(s, 0), a * p.h.x)
    });
    let t_side = Memo::new(|t: f64| {
        let p = al.point(t);
        let b = p.f.x / p.delta;
        (b * tilde(t, 1), b * p.h.y)
    });
    let r = al.plane(
        |s, t| {
            let (a_phi1, a_h1) = s_side.get(s);
            let (b_phi2, b_h2) = t_side.get(t);
            b_phi2 * a_h1 - b_h2 * a_phi1
        },
        opts,
    )?;
    Ok(ConditionValue::new(r, frame.delta(0.0), 2, opts.thresholds.zero))
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct C6Witness {
    pub x: Vec2,
    pub t1: f64,
    pub t2: f64,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct C6Result {
    pub holds: bool,
    pub witness: Option<C6Witness>,
}

/// Axis-aligned box around the sampled orbit, enlarged by `margin`.
pub fn orbit_box(orbit: &HomoclinicOrbit, half_window: f64, margin: f64) -> (Vec2, Vec2) {
    let mut lo = Vec2::new(f64::INFINITY, f64::INFINITY);
    let mut hi = Vec2::new(f64::NEG_INFINITY, f64::NEG_INFINITY);
    for (_, x) in orbit.samples(half_window, 400) {
        lo = Vec2::new(lo.x.min(x.x), lo.y.min(x.y));
        hi = Vec2::new(hi.x.max(x.x), hi.y.max(x.y));
    }
    (lo - Vec2::new(margin, margin), hi + Vec2::new(margin, margin))
}

/// C6: `g(x, t₁) ≠ g(x, t₂)` for some `x` in the probe box and a probe time pair.
pub fn cond_c6(perturbation: &dyn Perturbation, probe_box: (Vec2, Vec2), times: &[(f64, f64)], rel_tol: f64) -> C6Result {
    let n = 17;
    let (lo, hi) = probe_box;
    for &(t1, t2) in times {
        for i in 0..n {
            for j in 0..n {
                let x = Vec2::new(
                    lo.x + (hi.x - lo.x) * i as f64 / (n - 1) as f64,
                    lo.y + (hi.y - lo.y) * j as f64 / (n - 1) as f64,
                );
                let (a, b) = (perturbation.eval(x, t1), perturbation.eval(x, t2));
                if (a - b).norm() > rel_tol * (1.0 + a.norm().max(b.norm())) {
                    return C6Result {
                        holds: true,
                        witness: Some(C6Witness { x, t1, t2 }),
                    };
                }
            }
        }
    }
    C6Result {
        holds: false,
        witness: None,
    }
}

/// Default probe time pairs for C6.
pub const C6_TIMES: [(f64, f64); 4] = [
    (0.0, std::f64::consts::PI),
    (0.0, 1.0),
    (0.25, 2.5),
    (-3.0, 7.0),
];

/// `𝓕₁′` for the unrotated power-law loop as the line integral
/// `∫₀^{x_max} [g₂(x, y₊, t(x) − β) − g₂(x, y₋, −t(x) − β)] dx`
/// (value for `Δ ≡ 1`), with the branch time `t(x) ≤ 0` obtained by
/// quadrature of `dt = dx / y₊(x)`. Requires `g₁ = 0` on the loop.
pub fn f1_prime_line_form(law: &PowerLaw, g: &dyn Perturbation, beta: f64, tol: f64) -> Result<QuadResult> {
    let x_max = law.x_max();
    let p = law.p as f64;
    // x = x_max (1 − u²) removes the square-root endpoint at x_max.
    let y_up = move |u: f64| {
        let x = x_max * (1.0 - u * u);
        x * (law.nu * -(p * (-u * u).ln_1p()).exp_m1()).sqrt()
    };
    for k in 1..64 {
        let u = k as f64 / 64.0;
        let x = x_max * (1.0 - u * u);
        let y = y_up(u);
        for v in [g.eval(Vec2::new(x, y), 0.3), g.eval(Vec2::new(x, -y), -1.1)] {
            if v.x != 0.0 {
                return Err(Error::InvalidInput(
                    "line form needs a perturbation with vanishing first component".into(),
                ));
            }
        }
    }
    let dt_du = move |v: f64| {
        if v == 0.0 {
            2.0 / (law.nu * p).sqrt()
        } else {
            2.0 * x_max * v / y_up(v)
        }
    };
    let inner_tol = tol * 1e-2;
    let failure: RefCell<Option<Error>> = RefCell::new(None);
    let outer = |u: f64| {
        let t = match integrate_interval(dt_du, 0.0, u, inner_tol) {
            Ok(r) => -r.value,
            Err(e) => {
                failure.borrow_mut().get_or_insert(e);
                return 0.0;
            }
        };
        let x = x_max * (1.0 - u * u);
        let y = y_up(u);
        let up = g.eval(Vec2::new(x, y), t - beta).y;
        let down = g.eval(Vec2::new(x, -y), -t - beta).y;
        (up - down) * 2.0 * x_max * u
    };
    let r = integrate_interval(outer, 0.0, 1.0, tol);
    if let Some(e) = failure.into_inner() {
        return Err(e);
    }
    r
}

#[derive(Clone, Debug, Serialize)]
pub struct ConditionReport {
    pub beta_used: f64,
    pub delta0: f64,
    pub normalization: FrameNormalization,
    pub options: ConditionOptions,
    pub f1: ConditionValue,
    pub f1_prime: ConditionValue,
    pub c2: C2Result,
    pub f3: ConditionValue,
    pub f4: C4Result,
    pub f4_prime: C4Result,
    pub kappa1: Option<f64>,
    pub f5: Option<ConditionValue>,
    pub c5_verdict: Verdict,
    pub c6: C6Result,
    pub notes: Vec<String>,
}

impl ConditionReport {
    /// Verdicts in the order C1, C1′, C2, C3, C4, C4′, C5, C6.
    pub fn verdicts(&self) -> [(&'static str, Verdict); 8] {
        [
            ("C1", self.f1.verdict),
            ("C1'", self.f1_prime.verdict),
            ("C2", self.c2.verdict),
            ("C3", self.f3.verdict),
            ("C4", self.f4.verdict),
            ("C4'", self.f4_prime.verdict),
            ("C5", self.c5_verdict),
            ("C6", if self.c6.holds { Verdict::Holds } else { Verdict::Fails }),
        ]
    }
}

#[cfg(feature = "parallel")]
fn join<A: Send, B: Send>(a: impl FnOnce() -> A + Send, b: impl FnOnce() -> B + Send) -> (A, B) {
    rayon::join(a, b)
}

#[cfg(not(feature = "parallel"))]
fn join<A: Send, B: Send>(a: impl FnOnce() -> A + Send, b: impl FnOnce() -> B + Send) -> (A, B) {
    (a(), b())
}

/// Evaluate every condition at phase shift `β`.
pub fn evaluate_all(frame: &VariationalFrame, beta: f64, opts: &ConditionOptions) -> Result<ConditionReport> {
    let sys = frame.system();
    let orbit = frame.orbit();
    let ((f1, f1p), (f3, (f4, f4p))) = join(
        || (cond_c1(frame, opts), cond_c1p(frame, beta, opts)),
        || {
            join(
                || cond_c3(frame, beta, opts),
                || join(|| cond_c4(frame, beta, false, opts), || cond_c4(frame, beta, true, opts)),
            )
        },
    );
    let mut notes = vec![
        "F~1 uses kappa_2j + kappa_3j (index order of the kappa_3 term normalized)".to_string(),
        "G(s,t) evaluates g at (gamma(s), s - beta) and (gamma(t), t - beta)".to_string(),
    ];
    let (kappa1, f5, c5_verdict) = match compute_kappas(frame, beta, opts) {
        Ok(k) => {
            let f5 = cond_c5(frame, &k, opts)?;
            (Some(k.kappa1), Some(f5), f5.verdict)
        }
        Err(Error::KappaDenominator { value }) => {
            notes.push(format!(
                "C5 undetermined: F4,3 = {value:e} is below threshold, so kappa_1 is undefined"
            ));
            (None, None, Verdict::Undetermined)
        }
        Err(e) => return Err(e),
    };
    let c2 = cond_c2(sys, orbit, frame.window, 4000, opts.thresholds.zero);
    let c6 = cond_c6(
        sys.perturbation().as_ref(),
        orbit_box(orbit, frame.window, 0.1),
        &C6_TIMES,
        opts.thresholds.c6_rel,
    );
    Ok(ConditionReport {
        beta_used: beta,
        delta0: frame.delta(0.0),
        normalization: frame.normalization,
        options: *opts,
        f1: f1?,
        f1_prime: f1p?,
        c2,
        f3: f3?,
        f4: f4?,
        f4_prime: f4p?,
        kappa1,
        f5,
        c5_verdict,
        c6,
        notes,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::homoclinic::powerlaw_homoclinic;
    use crate::systems::{powerlaw_system, ConstForcing, CosForcing, NoForcing, SelfExcited};
    use crate::variational::{build_frame, FrameOptions};
    use std::sync::Arc;

    const UNIT_BOX: (Vec2, Vec2) = (Vec2 { x: -1.0, y: -1.0 }, Vec2 { x: 1.0, y: 1.0 });

    fn frame_with(g: Arc<dyn Perturbation>) -> VariationalFrame {
        let sys = powerlaw_system(1.0, 1.0, 2, g).unwrap();
        let orbit = powerlaw_homoclinic(1.0, 1.0, 2).unwrap();
        build_frame(&sys, &orbit, 20.0, &FrameOptions::default()).unwrap()
    }

    #[test]
    fn verdict_rules() {
        assert_eq!(Verdict::classify(1.0, 0.1, 1e-6), Verdict::Holds);
        assert_eq!(Verdict::classify(1e-7, 0.0, 1e-6), Verdict::Fails);
        assert_eq!(Verdict::classify(1e-5, 1e-5, 1e-6), Verdict::Indeterminate);
        assert_eq!(Verdict::all(&[Verdict::Holds, Verdict::Fails]), Verdict::Fails);
    }

    #[test]
    fn hamiltonian_c1_and_c4_fail() {
        let f = frame_with(Arc::new(SelfExcited::default()));
        let o = ConditionOptions::default();
        let c1 = cond_c1(&f, &o).unwrap();
        assert_eq!(c1.verdict, Verdict::Fails);
        for primed in [false, true] {
            let c4 = cond_c4(&f, 0.0, primed, &o).unwrap();
            assert!(c4.f42.result.value.abs() <= 3.0 * c4.f42.result.abs_error_estimate);
            assert!(c4.f42.result.abs_error_estimate < 1e-8);
            assert_eq!(c4.verdict, Verdict::Fails);
        }
    }

    #[test]
    fn c1_prime_a1_positive_and_matches_line_form() {
        let g = Arc::new(SelfExcited::default());
        let f = frame_with(g.clone());
        let c = cond_c1p(&f, 0.0, &ConditionOptions::default()).unwrap();
        assert_eq!(c.verdict, Verdict::Holds);
        assert!(c.result.value > 0.0);
        let law = PowerLaw::new(1.0, 1.0, 2).unwrap();
        let l = f1_prime_line_form(&law, g.as_ref(), 0.0, 1e-11).unwrap();
        assert!(((l.value - c.result.value) / c.result.value).abs() < 1e-6, "{l:?} {c:?}");
    }

    #[test]
    fn pairing_of_tangent_is_zero() {
        let f = frame_with(Arc::new(NoForcing));
        let r = melnikov_pairing(&f, |t| f.gamma_prime(t) * 3.0, &ConditionOptions::default()).unwrap();
        assert!(r.value.abs() < 1e-14);
    }

    #[test]
    fn unforced_functionals_vanish() {
        let f = frame_with(Arc::new(NoForcing));
        let o = ConditionOptions::default();
        assert_eq!(cond_c3(&f, 0.0, &o).unwrap().result.value, 0.0);
        assert_eq!(cond_c4(&f, 0.0, false, &o).unwrap().f41.result.value, 0.0);
        assert!(!cond_c6(&NoForcing, UNIT_BOX, &C6_TIMES, 1e-9).holds);
    }

    #[test]
    fn c2_powerlaw() {
        let sys = powerlaw_system(1.0, 1.0, 2, Arc::new(NoForcing)).unwrap();
        let orbit = powerlaw_homoclinic(1.0, 1.0, 2).unwrap();
        let c = cond_c2(&sys, &orbit, 20.0, 4000, 1e-6);
        // γ ∧ f(γ) = −2 sech⁴ t, extremal at the t = 0 sample
        assert!((c.sup - 2.0).abs() < 1e-12);
        assert_eq!(c.argmax_t, 0.0);
        assert_eq!(c.verdict, Verdict::Holds);
    }

    #[test]
    fn c6_cos_forcing() {
        let g = CosForcing {
            amplitude: 1.0,
            frequency: 1.0,
        };
        let r = cond_c6(&g, UNIT_BOX, &C6_TIMES, 1e-9);
        let w = r.witness.unwrap();
        assert_eq!((w.t1, w.t2), (0.0, std::f64::consts::PI));
        assert!(!cond_c6(&ConstForcing { c: 2.0 }, UNIT_BOX, &C6_TIMES, 1e-9).holds);
    }
}
