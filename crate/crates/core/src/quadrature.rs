//! Improper integrals over ℝ and ℝ² for exponentially decaying integrands.
//!
//! The line integrator probes the tails on a grid of spacing `1/(2·rate)`,
//! truncates where the integrand has stayed below `tol·rate/32` and runs a
//! global adaptive Gauss–Kronrod 7/15 scheme on the remaining window.
//! Integrands that still carry significant mass far out, or whose envelope
//! `|f(t)|·e^{rate(|t|-core)}` keeps growing, are refused.

use std::cell::{Cell, RefCell};

use serde::Serialize;

use crate::error::{Error, Result};

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct QuadResult {
    pub value: f64,
    pub abs_error_estimate: f64,
    pub truncation_t: f64,
    pub node_count: usize,
}

impl QuadResult {
    pub fn exact(value: f64) -> Self {
        QuadResult {
            value,
            abs_error_estimate: 0.0,
            truncation_t: 0.0,
            node_count: 0,
        }
    }
}

const XGK: [f64; 8] = [
    0.991455371120812639206854697526329,
    0.949107912342758524526189684047851,
    0.864864423359769072789712788640926,
    0.741531185599394439863864773280788,
    0.586087235467691130294144845693013,
    0.405845151377397166906606412076961,
    0.207784955007898467600689403773245,
    0.0,
];
const WGK: [f64; 8] = [
    0.022935322010529224963732008058970,
    0.063092092629978553290700663189204,
    0.104790010322250183839876322541518,
    0.140653259715525918745189590510238,
    0.169004726639267902826583426598550,
    0.190350578064785409913256402421014,
    0.204432940075298892414161999234649,
    0.209482141084727828012999174891714,
];
const WG: [f64; 4] = [
    0.129484966168869693270611432679082,
    0.279705391489276667901467771423780,
    0.381830050505118944950369775488975,
    0.417959183673469387755102040816327,
];

const GL5_X: [f64; 5] = [
    -0.906_179_845_938_664,
    -0.538_469_310_105_683_1,
    0.0,
    0.538_469_310_105_683_1,
    0.906_179_845_938_664,
];
const GL5_W: [f64; 5] = [
    0.236_926_885_056_189_1,
    0.478_628_670_499_366_5,
    0.568_888_888_888_888_9,
    0.478_628_670_499_366_5,
    0.236_926_885_056_189_1,
];

/// Five-point Gauss–Legendre rule on `[a, b]`.
pub fn gauss_legendre5<F: FnMut(f64) -> f64>(mut f: F, a: f64, b: f64) -> f64 {
    let c = 0.5 * (a + b);
    let h = 0.5 * (b - a);
    let mut s = 0.0;
    for k in 0..5 {
        s += GL5_W[k] * f(c + h * GL5_X[k]);
    }
    s * h
}

/// `I[i] = ∫_{grid[0]}^{grid[i]} f` by five-point Gauss–Legendre per interval.
pub fn cumulative_integral<F: FnMut(f64) -> f64>(grid: &[f64], mut f: F) -> Vec<f64> {
    let mut out = Vec::with_capacity(grid.len());
    let mut acc = 0.0;
    out.push(0.0);
    for w in grid.windows(2) {
        acc += gauss_legendre5(&mut f, w[0], w[1]);
        out.push(acc);
    }
    out
}

/// Gauss–Kronrod 7/15 on one interval for an integrand that also reports
/// an absolute error of its own value. Returns the value, the rule's own
/// error estimate and the error inherited from the integrand.
fn gk15<G: FnMut(f64) -> (f64, f64)>(g: &mut G, a: f64, b: f64) -> (f64, f64, f64) {
    let centr = 0.5 * (a + b);
    let hl = 0.5 * (b - a);
    let (fc, ec) = g(centr);
    let mut resg = fc * WG[3];
    let mut resk = fc * WGK[7];
    let mut resabs = resk.abs();
    let mut inherited = WGK[7] * ec;
    let mut fv1 = [0.0; 7];
    let mut fv2 = [0.0; 7];
    for j in 0..7 {
        let x = hl * XGK[j];
        let (f1, e1) = g(centr - x);
        let (f2, e2) = g(centr + x);
        fv1[j] = f1;
        fv2[j] = f2;
        resk += WGK[j] * (f1 + f2);
        resabs += WGK[j] * (f1.abs() + f2.abs());
        inherited += WGK[j] * (e1 + e2);
        if j % 2 == 1 {
            resg += WG[j / 2] * (f1 + f2);
        }
    }
    let reskh = 0.5 * resk;
    let mut resasc = WGK[7] * (fc - reskh).abs();
    for j in 0..7 {
        resasc += WGK[j] * ((fv1[j] - reskh).abs() + (fv2[j] - reskh).abs());
    }
    let result = resk * hl;
    let resabs = resabs * hl.abs();
    let resasc = resasc * hl.abs();
    let mut err = ((resk - resg) * hl).abs();
    if resasc != 0.0 && err != 0.0 {
        err = resasc * (200.0 * err / resasc).powf(1.5).min(1.0);
    }
    if resabs > f64::MIN_POSITIVE / (50.0 * f64::EPSILON) {
        err = err.max(50.0 * f64::EPSILON * resabs);
    }
    (result, err, inherited * hl.abs())
}

const MAX_PANELS: usize = 4000;

/// Global adaptive GK15 over the panels delimited by `breaks`.
///
/// Only the rule error drives refinement; error inherited from the integrand
/// does not shrink under subdivision and is added to the total.
fn adaptive<G: FnMut(f64) -> (f64, f64)>(g: &mut G, breaks: &[f64], tol: f64) -> Result<(f64, f64, usize)> {
    struct Panel {
        a: f64,
        b: f64,
        value: f64,
        err: f64,
        inherited: f64,
    }
    let eval = |g: &mut G, a: f64, b: f64| {
        let (value, err, inherited) = gk15(g, a, b);
        Panel {
            a,
            b,
            value,
            err,
            inherited,
        }
    };
    let mut panels: Vec<Panel> = Vec::new();
    let mut nodes = 0;
    for w in breaks.windows(2) {
        if w[1] > w[0] {
            panels.push(eval(g, w[0], w[1]));
            nodes += 15;
        }
    }
    loop {
        let total_err: f64 = panels.iter().map(|p| p.err).sum();
        if total_err <= tol || panels.len() >= MAX_PANELS {
            break;
        }
        let Some(idx) = panels
            .iter()
            .enumerate()
            .filter(|(_, p)| p.err > 0.0 && (p.b - p.a) > 1e-11 * (1.0 + p.a.abs()))
            .max_by(|x, y| x.1.err.total_cmp(&y.1.err))
            .map(|(i, _)| i)
        else {
            break;
        };
        let (a, b) = (panels[idx].a, panels[idx].b);
        let mid = 0.5 * (a + b);
        let left = eval(g, a, mid);
        let right = eval(g, mid, b);
        nodes += 30;
        // Stop refining panels that no longer improve (roundoff-limited).
        if left.err + right.err >= panels[idx].err && (b - a) < 1e-6 {
            let p = &mut panels[idx];
            p.value = left.value + right.value;
            p.inherited = left.inherited + right.inherited;
            p.err = 0.0;
            continue;
        }
        panels[idx] = left;
        panels.push(right);
    }
    // Sum in position order so results do not depend on refinement history.
    panels.sort_by(|x, y| x.a.total_cmp(&y.a));
    let value: f64 = panels.iter().map(|p| p.value).sum();
    let err: f64 = panels.iter().map(|p| p.err + p.inherited).sum();
    if !value.is_finite() || !err.is_finite() {
        return Err(Error::Integration("non-finite quadrature sum".into()));
    }
    Ok((value, err, nodes))
}

/// Adaptive quadrature of `f` over a finite interval.
pub fn integrate_interval<F: Fn(f64) -> f64>(f: F, a: f64, b: f64, tol: f64) -> Result<QuadResult> {
    let mut g = |t: f64| (f(t), 0.0);
    let pieces = 8;
    let breaks: Vec<f64> = (0..=pieces)
        .map(|k| a + (b - a) * k as f64 / pieces as f64)
        .collect();
    let (value, err, nodes) = adaptive(&mut g, &breaks, tol)?;
    Ok(QuadResult {
        value,
        abs_error_estimate: err,
        truncation_t: a.abs().max(b.abs()),
        node_count: nodes,
    })
}

/// A real integrand on ℝ with known exponential tail rate.
#[derive(Clone, Copy)]
pub struct DecayingIntegrand1D<F> {
    pub evaluate: F,
    pub decay_rate: f64,
    pub core_window: f64,
    /// Largest admissible |t| (e.g. the extent of a sampled frame).
    pub max_window: f64,
}

impl<F: Fn(f64) -> f64> DecayingIntegrand1D<F> {
    pub fn new(evaluate: F, decay_rate: f64, core_window: f64) -> Self {
        DecayingIntegrand1D {
            evaluate,
            decay_rate,
            core_window,
            max_window: f64::INFINITY,
        }
    }

    pub fn with_max_window(mut self, max_window: f64) -> Self {
        self.max_window = max_window;
        self
    }
}

/// Tail probing: returns the truncation point on one side and a tail estimate.
fn choose_truncation<G: FnMut(f64) -> (f64, f64)>(
    g: &mut G,
    sign: f64,
    rate: f64,
    core: f64,
    max_window: f64,
    tol: f64,
) -> Result<(f64, f64, usize)> {
    let step = 0.5 / rate;
    let limit = core + 60.0 / rate;
    let tau = tol * rate / 32.0;
    let mut near_env: f64 = tau;
    let mut last_sig_env = 0.0;
    let mut below = 0;
    let mut run_max: f64 = 0.0;
    let mut evals = 0;
    let mut k = 0usize;
    loop {
        let t = (core + k as f64 * step).min(max_window);
        let v = g(sign * t).0.abs();
        evals += 1;
        if !v.is_finite() {
            return Err(Error::DecayViolated(format!("non-finite integrand at t = {}", sign * t)));
        }
        let env = v * (rate * (t - core)).exp();
        if k < 4 {
            near_env = near_env.max(env);
        }
        if v < tau {
            below += 1;
            run_max = run_max.max(v);
        } else {
            below = 0;
            run_max = 0.0;
            last_sig_env = env;
        }
        if last_sig_env > 1e4 * near_env {
            return Err(Error::DecayViolated(format!(
                "envelope grows in the tail (|t| = {t:.2}, rate {rate})"
            )));
        }
        // Several consecutive small probes, so that zeros of an oscillating
        // factor are not mistaken for decay.
        if below >= 6 {
            return Ok((t, 4.0 * run_max / rate, evals));
        }
        if t >= max_window {
            return Ok((t, 2.0 * v / rate, evals));
        }
        if t >= limit {
            return Err(Error::DecayViolated(format!(
                "integrand still {v:e} at |t| = {t:.1}, expected decay at rate {rate}"
            )));
        }
        k += 1;
    }
}

fn line_with_errors<G: FnMut(f64) -> (f64, f64)>(
    g: &mut G,
    rate: f64,
    core: f64,
    max_window: f64,
    tol: f64,
) -> Result<QuadResult> {
    if !(tol > 0.0) || !(rate > 0.0) || !(max_window > 0.0) {
        return Err(Error::InvalidInput(
            "line integral needs tol > 0, decay_rate > 0 and a positive window".into(),
        ));
    }
    let core = core.max(0.0).min(max_window);
    let (tp, tail_p, np) = choose_truncation(g, 1.0, rate, core, max_window, tol)?;
    let (tm, tail_m, nm) = choose_truncation(g, -1.0, rate, core, max_window, tol)?;
    let panel = 2.0 / rate;
    let mut breaks = vec![-tm];
    let push_range = |a: f64, b: f64, n: usize, breaks: &mut Vec<f64>| {
        for k in 1..=n {
            breaks.push(a + (b - a) * k as f64 / n as f64);
        }
    };
    let inner = core.min(tm).min(tp);
    let left_n = (((tm - inner) / panel).ceil() as usize).max(1);
    push_range(-tm, -inner, left_n, &mut breaks);
    let core_n = ((2.0 * inner * rate).ceil() as usize).max(4);
    push_range(-inner, inner, core_n, &mut breaks);
    let right_n = (((tp - inner) / panel).ceil() as usize).max(1);
    push_range(inner, tp, right_n, &mut breaks);
    breaks.dedup_by(|a, b| (*a - *b).abs() < 1e-14);
    let (value, err, nodes) = adaptive(g, &breaks, tol / 2.0)?;
    Ok(QuadResult {
        value,
        abs_error_estimate: err + tail_p + tail_m,
        truncation_t: tp.max(tm),
        node_count: nodes + np + nm,
    })
}

/// `∫_ℝ f` with automatic truncation; total error estimate targets `tol`.
pub fn integrate_line<F: Fn(f64) -> f64>(f: &DecayingIntegrand1D<F>, tol: f64) -> Result<QuadResult> {
    let mut g = |t: f64| ((f.evaluate)(t), 0.0);
    line_with_errors(&mut g, f.decay_rate, f.core_window, f.max_window, tol)
}

/// `∬_{ℝ²} f(s, t) ds dt` by iterated line integrals, inner variable `s`.
pub fn integrate_plane<F: Fn(f64, f64) -> f64>(
    f: F,
    decay_rate: f64,
    core_window: f64,
    max_window: f64,
    tol: f64,
) -> Result<QuadResult> {
    let failure: RefCell<Option<Error>> = RefCell::new(None);
    let inner_nodes = Cell::new(0usize);
    let inner_tol = tol / 64.0;
    let mut outer = |t: f64| {
        if failure.borrow().is_some() {
            return (0.0, 0.0);
        }
        let mut g = |s: f64| (f(s, t), 0.0);
        match line_with_errors(&mut g, decay_rate, core_window, max_window, inner_tol) {
            Ok(r) => {
                inner_nodes.set(inner_nodes.get() + r.node_count);
                (r.value, r.abs_error_estimate)
            }
            Err(e) => {
                *failure.borrow_mut() = Some(e);
                (0.0, 0.0)
            }
        }
    };
    let res = line_with_errors(&mut outer, decay_rate, core_window, max_window, tol / 2.0);
    if let Some(e) = failure.into_inner() {
        return Err(e);
    }
    let mut r = res?;
    r.node_count += inner_nodes.get();
    Ok(r)
}
