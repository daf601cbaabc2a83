//! Dormand–Prince 5(4) integrator with step recording and event location.

use crate::error::{Error, Result};

#[derive(Clone, Copy, Debug)]
pub struct OdeOptions {
    pub rtol: f64,
    pub atol: f64,
    pub h_init: Option<f64>,
    /// Upper bound on |h|; keeps recorded samples dense enough for interpolation.
    pub h_max: f64,
    pub max_steps: usize,
}

impl Default for OdeOptions {
    fn default() -> Self {
        OdeOptions {
            rtol: 1e-10,
            atol: 1e-12,
            h_init: None,
            h_max: f64::INFINITY,
            max_steps: 2_000_000,
        }
    }
}

impl OdeOptions {
    pub fn with_tolerances(rtol: f64, atol: f64) -> Self {
        OdeOptions {
            rtol,
            atol,
            ..Default::default()
        }
    }

    pub fn with_h_max(mut self, h_max: f64) -> Self {
        self.h_max = h_max;
        self
    }
}

/// Accepted steps of an integration: times, states and derivatives.
#[derive(Clone, Debug, Default)]
pub struct Trajectory<const N: usize> {
    pub t: Vec<f64>,
    pub y: Vec<[f64; N]>,
    pub dy: Vec<[f64; N]>,
}

impl<const N: usize> Trajectory<N> {
    fn push(&mut self, t: f64, y: [f64; N], dy: [f64; N]) {
        self.t.push(t);
        self.y.push(y);
        self.dy.push(dy);
    }

    pub fn len(&self) -> usize {
        self.t.len()
    }

    pub fn is_empty(&self) -> bool {
        self.t.is_empty()
    }

    pub fn last(&self) -> Option<(f64, [f64; N])> {
        self.t.last().map(|&t| (t, *self.y.last().unwrap()))
    }
}

const C2: f64 = 1.0 / 5.0;
const C3: f64 = 3.0 / 10.0;
const C4: f64 = 4.0 / 5.0;
const C5: f64 = 8.0 / 9.0;
const A21: f64 = 1.0 / 5.0;
const A31: f64 = 3.0 / 40.0;
const A32: f64 = 9.0 / 40.0;
const A41: f64 = 44.0 / 45.0;
const A42: f64 = -56.0 / 15.0;
const A43: f64 = 32.0 / 9.0;
const A51: f64 = 19372.0 / 6561.0;
const A52: f64 = -25360.0 / 2187.0;
const A53: f64 = 64448.0 / 6561.0;
const A54: f64 = -212.0 / 729.0;
const A61: f64 = 9017.0 / 3168.0;
const A62: f64 = -355.0 / 33.0;
const A63: f64 = 46732.0 / 5247.0;
const A64: f64 = 49.0 / 176.0;
const A65: f64 = -5103.0 / 18656.0;
const A71: f64 = 35.0 / 384.0;
const A73: f64 = 500.0 / 1113.0;
const A74: f64 = 125.0 / 192.0;
const A75: f64 = -2187.0 / 6784.0;
const A76: f64 = 11.0 / 84.0;
const E1: f64 = 71.0 / 57600.0;
const E3: f64 = -71.0 / 16695.0;
const E4: f64 = 71.0 / 1920.0;
const E5: f64 = -17253.0 / 339200.0;
const E6: f64 = 22.0 / 525.0;
const E7: f64 = -1.0 / 40.0;

fn axpy<const N: usize>(y: &[f64; N], h: f64, terms: &[(f64, &[f64; N])]) -> [f64; N] {
    let mut out = *y;
    for (c, k) in terms {
        for i in 0..N {
            out[i] += h * c * k[i];
        }
    }
    out
}

/// Single-step Dormand–Prince stepper. `f(t, y)` is the right-hand side.
pub struct Stepper<const N: usize, F> {
    f: F,
    opts: OdeOptions,
    pub t: f64,
    pub y: [f64; N],
    pub dy: [f64; N],
    h: f64,
    dir: f64,
    steps: usize,
}

impl<const N: usize, F> Stepper<N, F>
where
    F: FnMut(f64, &[f64; N]) -> [f64; N],
{
    pub fn new(mut f: F, t0: f64, y0: [f64; N], t1: f64, opts: OdeOptions) -> Result<Self> {
        if !(opts.rtol > 0.0 && opts.atol >= 0.0) {
            return Err(Error::InvalidInput("ODE tolerances must be positive".into()));
        }
        if !t0.is_finite() || !t1.is_finite() || y0.iter().any(|v| !v.is_finite()) {
            return Err(Error::InvalidInput("non-finite ODE initial data".into()));
        }
        let dy = f(t0, &y0);
        let dir = if t1 >= t0 { 1.0 } else { -1.0 };
        let mut s = Stepper {
            f,
            opts,
            t: t0,
            y: y0,
            dy,
            h: 0.0,
            dir,
            steps: 0,
        };
        s.h = match opts.h_init {
            Some(h) => h.abs().min(opts.h_max),
            None => s.initial_step(),
        };
        Ok(s)
    }

    fn norm(&self, v: &[f64; N], y_a: &[f64; N], y_b: &[f64; N]) -> f64 {
        let mut acc = 0.0;
        for i in 0..N {
            let sc = self.opts.atol + self.opts.rtol * y_a[i].abs().max(y_b[i].abs());
            let r = v[i] / sc;
            acc += r * r;
        }
        (acc / N as f64).sqrt()
    }

    fn initial_step(&mut self) -> f64 {
        let d0 = self.norm(&self.y, &self.y, &self.y);
        let d1 = self.norm(&self.dy, &self.y, &self.y);
        let h0 = if d0 < 1e-5 || d1 < 1e-5 { 1e-6 } else { 0.01 * d0 / d1 };
        let y1 = axpy(&self.y, self.dir * h0, &[(1.0, &self.dy)]);
        let f1 = (self.f)(self.t + self.dir * h0, &y1);
        let mut diff = [0.0; N];
        for i in 0..N {
            diff[i] = f1[i] - self.dy[i];
        }
        let d2 = self.norm(&diff, &self.y, &self.y) / h0;
        let h1 = if d1.max(d2) <= 1e-15 {
            (h0 * 1e-3).max(1e-6)
        } else {
            (0.01 / d1.max(d2)).powf(0.2)
        };
        (100.0 * h0).min(h1).min(self.opts.h_max)
    }

    /// One trial step of signed size `h` from the current state.
    /// Returns the new state, its derivative and the scaled error.
    pub fn trial(&mut self, h: f64) -> ([f64; N], [f64; N], f64) {
        let (t, y, k1) = (self.t, self.y, self.dy);
        let f = &mut self.f;
        let k2 = f(t + C2 * h, &axpy(&y, h, &[(A21, &k1)]));
        let k3 = f(t + C3 * h, &axpy(&y, h, &[(A31, &k1), (A32, &k2)]));
        let k4 = f(
            t + C4 * h,
            &axpy(&y, h, &[(A41, &k1), (A42, &k2), (A43, &k3)]),
        );
        let k5 = f(
            t + C5 * h,
            &axpy(&y, h, &[(A51, &k1), (A52, &k2), (A53, &k3), (A54, &k4)]),
        );
        let k6 = f(
            t + h,
            &axpy(
                &y,
                h,
                &[(A61, &k1), (A62, &k2), (A63, &k3), (A64, &k4), (A65, &k5)],
            ),
        );
        let y_new = axpy(
            &y,
            h,
            &[(A71, &k1), (A73, &k3), (A74, &k4), (A75, &k5), (A76, &k6)],
        );
        let k7 = f(t + h, &y_new);
        let mut err = [0.0; N];
        for i in 0..N {
            err[i] = h
                * (E1 * k1[i] + E3 * k3[i] + E4 * k4[i] + E5 * k5[i] + E6 * k6[i] + E7 * k7[i]);
        }
        let e = self.norm(&err, &y, &y_new);
        (y_new, k7, e)
    }

    /// Advance by one accepted step without passing `t_end`.
    /// Returns `false` once `t_end` has been reached.
    pub fn advance(&mut self, t_end: f64) -> Result<bool> {
        let remaining = (t_end - self.t) * self.dir;
        if remaining <= 0.0 {
            return Ok(false);
        }
        let mut h = self.h.min(self.opts.h_max).min(remaining);
        let mut rejected = false;
        loop {
            self.steps += 1;
            if self.steps > self.opts.max_steps {
                return Err(Error::Integration(format!(
                    "step budget exhausted at t = {}",
                    self.t
                )));
            }
            let floor = 1e-14 * self.t.abs().max(1.0);
            if h < floor && h < remaining {
                return Err(Error::Integration(format!(
                    "step size underflow at t = {}",
                    self.t
                )));
            }
            let last = h >= remaining * (1.0 - 1e-12);
            let (y_new, dy_new, err) = self.trial(self.dir * h);
            if !err.is_finite() || y_new.iter().any(|v| !v.is_finite()) {
                h *= 0.2;
                rejected = true;
                continue;
            }
            if err <= 1.0 {
                self.t = if last { t_end } else { self.t + self.dir * h };
                self.y = y_new;
                self.dy = dy_new;
                let mut fac = if err == 0.0 { 5.0 } else { 0.9 * err.powf(-0.2) };
                fac = fac.clamp(0.2, 5.0);
                if rejected {
                    fac = fac.min(1.0);
                }
                // Do not let the final, clipped step shrink the running step size.
                let base = if last { self.h.max(h) } else { h };
                self.h = (base * fac).min(self.opts.h_max);
                return Ok(true);
            }
            h *= (0.9 * err.powf(-0.2)).max(0.2);
            rejected = true;
        }
    }

    pub fn eval_rhs(&mut self, t: f64, y: &[f64; N]) -> [f64; N] {
        (self.f)(t, y)
    }
}

/// Integrate from `t0` to `t1` and return the final state.
pub fn integrate<const N: usize, F>(f: F, t0: f64, y0: [f64; N], t1: f64, opts: OdeOptions) -> Result<[f64; N]>
where
    F: FnMut(f64, &[f64; N]) -> [f64; N],
{
    let mut s = Stepper::new(f, t0, y0, t1, opts)?;
    while s.advance(t1)? {}
    Ok(s.y)
}

/// Integrate and record every accepted step (including the initial point).
pub fn integrate_recorded<const N: usize, F>(
    f: F,
    t0: f64,
    y0: [f64; N],
    t1: f64,
    opts: OdeOptions,
) -> Result<Trajectory<N>>
where
    F: FnMut(f64, &[f64; N]) -> [f64; N],
{
    let mut s = Stepper::new(f, t0, y0, t1, opts)?;
    let mut tr = Trajectory::default();
    tr.push(s.t, s.y, s.dy);
    while s.advance(t1)? {
        tr.push(s.t, s.y, s.dy);
    }
    Ok(tr)
}

/// Integrate through a sorted list of output times (monotone in the direction of travel).
pub fn solve_to_grid<const N: usize, F>(
    f: F,
    t0: f64,
    y0: [f64; N],
    grid: &[f64],
    opts: OdeOptions,
) -> Result<Vec<[f64; N]>>
where
    F: FnMut(f64, &[f64; N]) -> [f64; N],
{
    let target = grid.last().copied().unwrap_or(t0);
    let mut s = Stepper::new(f, t0, y0, target, opts)?;
    let mut out = Vec::with_capacity(grid.len());
    for &tg in grid {
        while s.advance(tg)? {}
        out.push(s.y);
    }
    Ok(out)
}

/// A located event: time and state where the event function changed sign.
#[derive(Clone, Copy, Debug)]
pub struct EventHit<const N: usize> {
    pub t: f64,
    pub y: [f64; N],
}

/// Outcome of [`integrate_until`].
pub struct EventRun<const N: usize> {
    pub trajectory: Trajectory<N>,
    pub hit: Option<EventHit<N>>,
}

/// Integrate until `event(t, y)` changes sign from positive to non-positive
/// (after `arm(t, y)` first returns true), `abort(t, y)` returns true, or `t1`
/// is reached. The event is located to `event_tol` in time by bisection on the
/// step size. An abort is reported as [`Error::OrbitEscapes`].
#[allow(clippy::too_many_arguments)]
pub fn integrate_until<const N: usize, F, E, A, B>(
    f: F,
    t0: f64,
    y0: [f64; N],
    t1: f64,
    opts: OdeOptions,
    mut event: E,
    mut arm: A,
    mut abort: B,
    event_tol: f64,
) -> Result<EventRun<N>>
where
    F: FnMut(f64, &[f64; N]) -> [f64; N],
    E: FnMut(f64, &[f64; N]) -> f64,
    A: FnMut(f64, &[f64; N]) -> bool,
    B: FnMut(f64, &[f64; N]) -> bool,
{
    let mut s = Stepper::new(f, t0, y0, t1, opts)?;
    let mut tr = Trajectory::default();
    tr.push(s.t, s.y, s.dy);
    let mut armed = arm(s.t, &s.y);
    let mut prev_e = event(s.t, &s.y);
    loop {
        let (tp, yp, dyp) = (s.t, s.y, s.dy);
        if !s.advance(t1)? {
            return Ok(EventRun {
                trajectory: tr,
                hit: None,
            });
        }
        if abort(s.t, &s.y) {
            return Err(Error::OrbitEscapes { t: s.t });
        }
        let e = event(s.t, &s.y);
        if armed && prev_e > 0.0 && e <= 0.0 {
            // Bisection on the step size from the previous accepted point.
            let (tn, yn, dyn_) = (s.t, s.y, s.dy);
            s.t = tp;
            s.y = yp;
            s.dy = dyp;
            let mut lo = 0.0;
            let mut hi = (tn - tp).abs();
            let dir = if tn >= tp { 1.0 } else { -1.0 };
            let mut best = (tn, yn, dyn_);
            while hi - lo > event_tol {
                let mid = 0.5 * (lo + hi);
                let (ym, _, _) = s.trial(dir * mid);
                if event(tp + dir * mid, &ym) > 0.0 {
                    lo = mid;
                } else {
                    hi = mid;
                }
            }
            if hi < (tn - tp).abs() {
                let (yh, dyh, _) = s.trial(dir * hi);
                best = (tp + dir * hi, yh, dyh);
            }
            tr.push(best.0, best.1, best.2);
            return Ok(EventRun {
                trajectory: tr,
                hit: Some(EventHit {
                    t: best.0,
                    y: best.1,
                }),
            });
        }
        tr.push(s.t, s.y, s.dy);
        if !armed && arm(s.t, &s.y) {
            armed = true;
        }
        prev_e = e;
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn exponential_growth() {
        let y = integrate(|_, y: &[f64; 1]| [y[0]], 0.0, [1.0], 2.0, OdeOptions::default()).unwrap();
        assert!((y[0] - 2f64.exp()).abs() < 1e-9 * 2f64.exp());
    }

    #[test]
    fn harmonic_oscillator_backward() {
        let f = |_t: f64, y: &[f64; 2]| [y[1], -y[0]];
        let y = integrate(f, 0.0, [1.0, 0.0], -10.0, OdeOptions::default()).unwrap();
        assert!((y[0] - 10f64.cos()).abs() < 1e-8);
        assert!((y[1] - 10f64.sin()).abs() < 1e-8);
    }

    #[test]
    fn nonautonomous_grid() {
        // y' = cos t, y(0) = 0 -> sin t
        let grid: Vec<f64> = (1..=20).map(|k| k as f64 * 0.5).collect();
        let ys = solve_to_grid(|t, _y: &[f64; 1]| [t.cos()], 0.0, [0.0], &grid, OdeOptions::default()).unwrap();
        for (t, y) in grid.iter().zip(ys) {
            assert!((y[0] - t.sin()).abs() < 1e-10);
        }
    }

    #[test]
    fn h_max_respected() {
        let tr = integrate_recorded(
            |_, y: &[f64; 1]| [-y[0]],
            0.0,
            [1.0],
            5.0,
            OdeOptions::default().with_h_max(0.1),
        )
        .unwrap();
        for w in tr.t.windows(2) {
            assert!(w[1] - w[0] <= 0.1 + 1e-12);
        }
        assert_eq!(*tr.t.last().unwrap(), 5.0);
    }

    #[test]
    fn event_located() {
        // y = cos t crosses zero at pi/2.
        let run = integrate_until(
            |_, y: &[f64; 2]| [y[1], -y[0]],
            0.0,
            [1.0, 0.0],
            10.0,
            OdeOptions::default(),
            |_, y| y[0],
            |_, _| true,
            |_, _| false,
            1e-12,
        )
        .unwrap();
        let hit = run.hit.unwrap();
        assert!((hit.t - std::f64::consts::FRAC_PI_2).abs() < 1e-10);
    }

    #[test]
    fn abort_reports_escape() {
        let r = integrate_until(
            |_, y: &[f64; 1]| [y[0]],
            0.0,
            [1.0],
            100.0,
            OdeOptions::default(),
            |_, _| 1.0,
            |_, _| true,
            |_, y| y[0] > 1e3,
            1e-10,
        );
        assert!(matches!(r, Err(Error::OrbitEscapes { .. })));
    }
}
