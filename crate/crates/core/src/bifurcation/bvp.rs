//! Direct verification: multiple shooting for a solution of the perturbed
//! system that stays near the loop on `[−T, T]`.
//!
//! Boundary conditions put `x(−T)` on the unstable eigenline and `x(T)` on the
//! stable eigenline of the saddle.

use nalgebra::{DMatrix, DVector};
use serde::Serialize;

use crate::error::{Error, Result};
use crate::homoclinic::HomoclinicOrbit;
use crate::interp::CubicHermite;
use crate::ode::{integrate, integrate_recorded, OdeOptions};
use crate::planar::{Mat2, PlanarSystem, Vec2};

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct BvpOptions {
    pub window: f64,
    pub intervals: usize,
    pub tol: f64,
    pub max_newton: usize,
    pub rtol: f64,
    pub atol: f64,
    /// Phase of the seed `γ(t − β₀)`.
    pub seed_shift: f64,
}

impl Default for BvpOptions {
    fn default() -> Self {
        BvpOptions {
            window: 20.0,
            intervals: 16,
            tol: 1e-10,
            max_newton: 50,
            rtol: 1e-11,
            atol: 1e-13,
            seed_shift: 0.0,
        }
    }
}

#[derive(Clone, Debug)]
pub struct BvpSolution {
    pub epsilon: f64,
    pub nodes: Vec<f64>,
    pub states: Vec<Vec2>,
    pub residual: f64,
    pub iterations: usize,
    /// Number of ε-continuation solves used when Newton from the seed failed.
    pub continuation_steps: usize,
    /// `min_β sup_{|t| ≤ T/2} ‖x(t − β) − γ(t)‖`.
    pub distance: f64,
    pub distance_shift: f64,
    dense: CubicHermite,
}

impl BvpSolution {
    pub fn eval(&self, t: f64) -> Vec2 {
        self.dense.eval(t)
    }
}

#[derive(Clone, Copy)]
struct Shooter<'a> {
    sys: &'a PlanarSystem,
    eps: f64,
    ode: OdeOptions,
}

impl Shooter<'_> {
    fn flow(&self, x: Vec2, t0: f64, t1: f64) -> Result<(Vec2, Mat2)> {
        let (sys, eps) = (self.sys, self.eps);
        let y = integrate(
            |t, y: &[f64; 6]| {
                let x = Vec2::new(y[0], y[1]);
                let v = sys.rhs(x, t, eps);
                let j = sys.jacobian_f(x).add(&sys.grad_g(x, t).scale(eps));
                let m = Mat2::new(y[2], y[3], y[4], y[5]);
                let d = j.mul_mat(&m);
                [v.x, v.y, d.m[0][0], d.m[0][1], d.m[1][0], d.m[1][1]]
            },
            t0,
            [x.x, x.y, 1.0, 0.0, 0.0, 1.0],
            t1,
            self.ode,
        )?;
        Ok((Vec2::new(y[0], y[1]), Mat2::new(y[2], y[3], y[4], y[5])))
    }
}

/// Solve the shooting system by damped Newton and measure the distance of the
/// solution from the time-shifted loop.
pub fn direct_verify(sys: &PlanarSystem, orbit: &HomoclinicOrbit, epsilon: f64, opts: &BvpOptions) -> Result<BvpSolution> {
    let n = opts.intervals;
    if n < 2 || !(opts.window > 0.0) {
        return Err(Error::InvalidInput("shooting needs at least two intervals and a positive window".into()));
    }
    let big_t = opts.window;
    let nodes: Vec<f64> = (0..=n).map(|k| -big_t + 2.0 * big_t * k as f64 / n as f64).collect();
    let shooter = Shooter {
        sys,
        eps: epsilon,
        ode: OdeOptions::with_tolerances(opts.rtol, opts.atol),
    };
    let seed: Vec<Vec2> = nodes[..n].iter().map(|&t| orbit.gamma(t - opts.seed_shift)).collect();
    let mut continuation = 0;
    let (x, norm, iterations) = match newton(&shooter, &nodes, &seed, orbit, opts) {
        Ok(r) => r,
        Err(first) => {
            // Continuation in ε from a tenth of a percent of the target.
            let mut x = seed;
            let mut last = Err(first);
            for frac in [1e-3, 1e-2, 3e-2, 0.1, 0.2, 0.4, 0.7, 1.0] {
                let sh = Shooter {
                    eps: epsilon * frac,
                    ..shooter
                };
                continuation += 1;
                last = newton(&sh, &nodes, &x, orbit, opts);
                match &last {
                    Ok(r) => x = r.0.clone(),
                    Err(_) => break,
                }
            }
            last?
        }
    };
    let mut t_all = Vec::new();
    let mut v_all = Vec::new();
    let mut d_all = Vec::new();
    for k in 0..n {
        let tr = integrate_recorded(
            |t, y: &[f64; 2]| sys.rhs(Vec2::new(y[0], y[1]), t, epsilon).to_array(),
            nodes[k],
            x[k].to_array(),
            nodes[k + 1],
            shooter.ode.with_h_max(0.05),
        )?;
        let skip = usize::from(k > 0);
        for i in skip..tr.len() {
            t_all.push(tr.t[i]);
            v_all.push(Vec2::from_array(tr.y[i]));
            d_all.push(Vec2::from_array(tr.dy[i]));
        }
    }
    let dense = CubicHermite::new(t_all, v_all, d_all)?;
    let (distance, distance_shift) = orbit_distance(&|t| dense.eval(t), orbit, 0.5 * big_t, 1.0);
    Ok(BvpSolution {
        epsilon,
        nodes,
        states: x,
        residual: norm,
        iterations,
        continuation_steps: continuation,
        distance,
        distance_shift,
        dense,
    })
}

type NewtonResult = Result<(Vec<Vec2>, f64, usize)>;

/// Damped Newton on the stacked shooting residual, starting at `seed`.
fn newton(shooter: &Shooter, nodes: &[f64], seed: &[Vec2], orbit: &HomoclinicOrbit, opts: &BvpOptions) -> NewtonResult {
    let n = seed.len();
    let sd = orbit.saddle;
    let eq = sd.equilibrium;
    let (u, s) = (sd.unstable_dir, sd.stable_dir);
    let d = crate::planar::wedge(u, s);
    // c_s(v) = u∧v/d and c_u(v) = v∧s/d as row vectors.
    let grad_cs = Vec2::new(-u.y, u.x) * (1.0 / d);
    let grad_cu = Vec2::new(s.y, -s.x) * (1.0 / d);
    let mut x: Vec<Vec2> = seed.to_vec();

    let evaluate = |x: &[Vec2]| -> Result<(DVector<f64>, Vec<Mat2>)> {
        let mut r = DVector::zeros(2 * n);
        let mut stm = Vec::with_capacity(n);
        r[0] = grad_cs.dot(x[0] - eq);
        for k in 0..n {
            let (end, m) = shooter.flow(x[k], nodes[k], nodes[k + 1])?;
            if k + 1 < n {
                let gap = end - x[k + 1];
                r[1 + 2 * k] = gap.x;
                r[2 + 2 * k] = gap.y;
            } else {
                r[2 * n - 1] = grad_cu.dot(end - eq);
            }
            stm.push(m);
        }
        Ok((r, stm))
    };
    let jacobian = |stm: &[Mat2]| -> DMatrix<f64> {
        let mut j = DMatrix::zeros(2 * n, 2 * n);
        j[(0, 0)] = grad_cs.x;
        j[(0, 1)] = grad_cs.y;
        for k in 0..n {
            let m = &stm[k];
            if k + 1 < n {
                for a in 0..2 {
                    for b in 0..2 {
                        j[(1 + 2 * k + a, 2 * k + b)] = m.m[a][b];
                    }
                    j[(1 + 2 * k + a, 2 * k + 2 + a)] = -1.0;
                }
            } else {
                let row = 2 * n - 1;
                j[(row, 2 * k)] = grad_cu.x * m.m[0][0] + grad_cu.y * m.m[1][0];
                j[(row, 2 * k + 1)] = grad_cu.x * m.m[0][1] + grad_cu.y * m.m[1][1];
            }
        }
        j
    };

    let (mut r, mut stm) = evaluate(&x)?;
    let mut norm = r.amax();
    let mut iterations = 0;
    while norm > opts.tol {
        if iterations >= opts.max_newton {
            return Err(Error::NoConvergence {
                what: "shooting Newton",
                iterations,
            });
        }
        iterations += 1;
        let j = jacobian(&stm);
        let step = match j.clone().lu().solve(&(-&r)) {
            Some(v) if v.iter().all(|c| c.is_finite()) => v,
            _ => j
                .svd(true, true)
                .solve(&(-&r), 1e-14)
                .map_err(|e| Error::NewtonDivergence(e.to_string()))?,
        };
        let mut lambda = 1.0;
        loop {
            let trial: Vec<Vec2> = x
                .iter()
                .enumerate()
                .map(|(k, v)| *v + Vec2::new(step[2 * k], step[2 * k + 1]) * lambda)
                .collect();
            if let Ok((rt, st)) = evaluate(&trial) {
                let nt = rt.amax();
                if nt.is_finite() && nt < (1.0 - 1e-4 * lambda) * norm {
                    x = trial;
                    r = rt;
                    stm = st;
                    norm = nt;
                    break;
                }
            }
            lambda *= 0.5;
            if lambda < 1.0 / 1024.0 {
                return Err(Error::NewtonDivergence(format!(
                    "no decrease from residual {norm:e} after step halving"
                )));
            }
        }
    }

    Ok((x, norm, iterations))
}

/// `min_{|β| ≤ max_shift} sup_{|t| ≤ half} ‖x(t − β) − γ(t)‖` and the minimizing `β`.
pub fn orbit_distance(x: &dyn Fn(f64) -> Vec2, orbit: &HomoclinicOrbit, half: f64, max_shift: f64) -> (f64, f64) {
    let ts: Vec<f64> = (0..=800).map(|i| -half + 2.0 * half * i as f64 / 800.0).collect();
    let gam: Vec<Vec2> = ts.iter().map(|&t| orbit.gamma(t)).collect();
    let sup = |b: f64| {
        ts.iter()
            .zip(&gam)
            .map(|(&t, g)| (x(t - b) - *g).norm())
            .fold(0.0, f64::max)
    };
    let steps = (max_shift / 0.02).ceil() as i64;
    let (mut best_b, mut best) = (0.0, sup(0.0));
    for i in -steps..=steps {
        let b = i as f64 * 0.02;
        let v = sup(b);
        if v < best {
            best = v;
            best_b = b;
        }
    }
    // Golden-section refinement on the neighbouring bracket.
    let (mut lo, mut hi) = (best_b - 0.02, best_b + 0.02);
    let phi = 0.5 * (5f64.sqrt() - 1.0);
    let mut c = hi - phi * (hi - lo);
    let mut dd = lo + phi * (hi - lo);
    let (mut fc, mut fd) = (sup(c), sup(dd));
    while hi - lo > 1e-7 {
        if fc < fd {
            hi = dd;
            dd = c;
            fd = fc;
            c = hi - phi * (hi - lo);
            fc = sup(c);
        } else {
            lo = c;
            c = dd;
            fc = fd;
            dd = lo + phi * (hi - lo);
            fd = sup(dd);
        }
    }
    let b = 0.5 * (lo + hi);
    let v = sup(b);
    if v < best {
        (v, b)
    } else {
        (best, best_b)
    }
}
