//! Homoclinic orbits of the unperturbed field: closed form for the power-law
//! family, two-sided shooting otherwise.

use serde::Serialize;

use crate::error::{Error, Result};
use crate::interp::QuinticHermite;
use crate::ode::{integrate_until, OdeOptions};
use crate::planar::{Mat2, PlanarSystem, Vec2};
use crate::systems::{FieldPreset, PowerLaw};

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct SaddleData {
    pub equilibrium: Vec2,
    pub omega: f64,
    pub unstable_dir: Vec2,
    pub stable_dir: Vec2,
}

impl SaddleData {
    /// Coordinates `(c_u, c_s)` of `v` in the eigenbasis.
    pub fn eigen_coordinates(&self, v: Vec2) -> (f64, f64) {
        let (u, s) = (self.unstable_dir, self.stable_dir);
        let d = crate::planar::wedge(u, s);
        (crate::planar::wedge(v, s) / d, crate::planar::wedge(u, v) / d)
    }
}

/// Newton iteration for `f(x) = 0` starting at `guess`.
pub fn find_equilibrium(sys: &PlanarSystem, guess: Vec2) -> Result<Vec2> {
    let mut x = guess;
    for _ in 0..50 {
        let fx = sys.f(x);
        if !fx.is_finite() || !x.is_finite() {
            break;
        }
        if fx.norm() < 1e-12 {
            return Ok(x);
        }
        let j = sys.jacobian_f(x);
        let inv = j
            .inverse()
            .filter(|_| j.det().abs() > 1e-14 * (1.0 + j.max_abs()).powi(2))
            .ok_or(Error::SingularJacobian { x: x.x, y: x.y })?;
        x -= inv.mul_vec(fx);
    }
    if sys.f(x).norm() < 1e-12 {
        return Ok(x);
    }
    Err(Error::NoConvergence {
        what: "equilibrium Newton iteration",
        iterations: 50,
    })
}

fn eigenvector(j: &Mat2, lambda: f64) -> Vec2 {
    let r0 = Vec2::new(j.m[0][0] - lambda, j.m[0][1]);
    let r1 = Vec2::new(j.m[1][0], j.m[1][1] - lambda);
    let r = if r0.norm() >= r1.norm() { r0 } else { r1 };
    let mut v = Vec2::new(r.y, -r.x);
    if v.norm() == 0.0 {
        v = Vec2::new(1.0, 0.0);
    }
    v = v * (1.0 / v.norm());
    if v.x < -1e-14 || (v.x.abs() <= 1e-14 && v.y < 0.0) {
        v = -v;
    }
    v
}

/// Eigen-data of a saddle with eigenvalues `±ω`.
pub fn saddle_data(sys: &PlanarSystem, eq: Vec2) -> Result<SaddleData> {
    let j = sys.jacobian_f(eq);
    let tr = j.trace();
    if tr.abs() > 1e-10 * (1.0 + j.max_abs()) {
        return Err(Error::NonSymmetricSpectrum { trace: tr });
    }
    let disc = 0.25 * tr * tr - j.det();
    if disc <= 0.0 {
        return Err(Error::ComplexEigenvalues { discriminant: disc });
    }
    let omega = disc.sqrt();
    let unstable_dir = eigenvector(&j, 0.5 * tr + omega);
    let stable_dir = eigenvector(&j, 0.5 * tr - omega);
    for (v, l) in [(unstable_dir, 0.5 * tr + omega), (stable_dir, 0.5 * tr - omega)] {
        let r = (j.mul_vec(v) - v * l).norm();
        if r > 1e-10 * (1.0 + j.max_abs()) {
            return Err(Error::NoConvergence {
                what: "eigenvector residual",
                iterations: 1,
            });
        }
    }
    Ok(SaddleData {
        equilibrium: eq,
        omega,
        unstable_dir,
        stable_dir,
    })
}

#[derive(Clone, Debug)]
enum Repr {
    Closed {
        law: PowerLaw,
        rot: Mat2,
    },
    Sampled {
        spline: QuinticHermite,
        t_lo: f64,
        t_hi: f64,
        left: Vec2,
        right: Vec2,
    },
}

/// An evaluable homoclinic orbit with `γ(0)` at the anchor point.
#[derive(Clone, Debug)]
pub struct HomoclinicOrbit {
    repr: Repr,
    pub saddle: SaddleData,
    pub anchor: Vec2,
    pub decay_window: f64,
}

/// Default distance to the equilibrium that defines the decay window.
pub const TAIL_TOL: f64 = 1e-5;

fn sech(u: f64) -> f64 {
    let e = (-2.0 * u.abs()).exp();
    2.0 * (-u.abs()).exp() / (1.0 + e)
}

/// The closed-form homoclinic loop of `ẋ = y, ẏ = νx − μx^{p+1}` with
/// `γ(0) = (x_max, 0)`.
pub fn powerlaw_homoclinic(nu: f64, mu: f64, p: u32) -> Result<HomoclinicOrbit> {
    let law = PowerLaw::new(nu, mu, p)?;
    Ok(HomoclinicOrbit::closed(law, Mat2::IDENTITY))
}

impl HomoclinicOrbit {
    fn closed(law: PowerLaw, rot: Mat2) -> Self {
        let sn = law.nu.sqrt();
        let n = (1.0 + law.nu).sqrt();
        let saddle = SaddleData {
            equilibrium: Vec2::ZERO,
            omega: sn,
            unstable_dir: rot.mul_vec(Vec2::new(1.0 / n, sn / n)),
            stable_dir: rot.mul_vec(Vec2::new(1.0 / n, -sn / n)),
        };
        let mut o = HomoclinicOrbit {
            repr: Repr::Closed { law, rot },
            saddle,
            anchor: Vec2::ZERO,
            decay_window: 0.0,
        };
        o.anchor = o.gamma(0.0);
        o.decay_window = o.find_decay_window(TAIL_TOL);
        o
    }

    /// The orbit of a built-in preset (all presets share the power-law loop).
    pub fn for_preset(preset: &FieldPreset) -> Result<Self> {
        Ok(HomoclinicOrbit::closed(preset.powerlaw()?, preset.rotation()))
    }

    pub fn is_closed_form(&self) -> bool {
        matches!(self.repr, Repr::Closed { .. })
    }

    /// `γ(t)` and the derivative of the parameterization.
    pub fn gamma_with_derivative(&self, t: f64) -> (Vec2, Vec2) {
        match &self.repr {
            Repr::Closed { law, rot } => {
                let p = law.p as f64;
                let sn = law.nu.sqrt();
                let a = p * sn / 2.0;
                let u = a * t;
                let sh = sech(u);
                let th = u.tanh();
                let x = law.x_max() * sh.powf(2.0 / p);
                let y = -sn * x * th;
                let dx = -sn * x * th;
                let dy = -sn * (dx * th + x * a * sh * sh);
                (rot.mul_vec(Vec2::new(x, y)), rot.mul_vec(Vec2::new(dx, dy)))
            }
            Repr::Sampled {
                spline,
                t_lo,
                t_hi,
                left,
                right,
            } => {
                let eq = self.saddle.equilibrium;
                let w = self.saddle.omega;
                if t < *t_lo {
                    let d = *left * (w * (t - t_lo)).exp();
                    (eq + d, d * w)
                } else if t > *t_hi {
                    let d = *right * (-w * (t - t_hi)).exp();
                    (eq + d, d * (-w))
                } else {
                    spline.eval_with_derivative(t)
                }
            }
        }
    }

    pub fn gamma(&self, t: f64) -> Vec2 {
        self.gamma_with_derivative(t).0
    }

    fn find_decay_window(&self, tail_tol: f64) -> f64 {
        let eq = self.saddle.equilibrium;
        let mut t = 0.0;
        while t < 1e3 {
            if (self.gamma(t) - eq).norm() < tail_tol && (self.gamma(-t) - eq).norm() < tail_tol {
                return t;
            }
            t += 0.05;
        }
        t
    }

    /// `sup ‖γ'(t) − f(γ(t))‖` over `n + 1` uniform points of `[−half, half]`.
    pub fn residual(&self, sys: &PlanarSystem, half: f64, n: usize) -> f64 {
        (0..=n)
            .map(|k| {
                let t = -half + 2.0 * half * k as f64 / n as f64;
                let (g, dg) = self.gamma_with_derivative(t);
                (dg - sys.f(g)).norm()
            })
            .fold(0.0, f64::max)
    }

    /// Least-squares slope of `log‖γ(t) − eq‖` against `|t|` on `[0.75T, T]`
    /// for each side. Both should be close to `−ω`.
    pub fn tail_slopes(&self, window: f64) -> (f64, f64) {
        let eq = self.saddle.equilibrium;
        let fit = |sign: f64| {
            let n = 40;
            let (mut sx, mut sy, mut sxx, mut sxy) = (0.0, 0.0, 0.0, 0.0);
            for k in 0..=n {
                let t = window * (0.75 + 0.25 * k as f64 / n as f64);
                let l = (self.gamma(sign * t) - eq).norm().ln();
                sx += t;
                sy += l;
                sxx += t * t;
                sxy += t * l;
            }
            let m = (n + 1) as f64;
            (m * sxy - sx * sy) / (m * sxx - sx * sx)
        };
        (fit(-1.0), fit(1.0))
    }

    /// `(t, γ(t))` on `n + 1` uniform points of `[−half, half]`.
    pub fn samples(&self, half: f64, n: usize) -> Vec<(f64, Vec2)> {
        (0..=n)
            .map(|k| {
                let t = -half + 2.0 * half * k as f64 / n.max(1) as f64;
                (t, self.gamma(t))
            })
            .collect()
    }
}

#[derive(Clone, Copy, Debug)]
pub struct ShootingOptions {
    /// Offset from the equilibrium along the eigendirections.
    pub delta: f64,
    /// Half-width of the working box around the equilibrium.
    pub box_half_width: f64,
    pub t_max: f64,
    /// Which unstable branch to follow (+1 or −1 times `unstable_dir`).
    pub branch: f64,
    pub match_tol: f64,
    pub ode: OdeOptions,
}

impl Default for ShootingOptions {
    fn default() -> Self {
        ShootingOptions {
            delta: 1e-6 * 10.0,
            box_half_width: 10.0,
            t_max: 200.0,
            branch: 1.0,
            match_tol: 1e-6,
            ode: OdeOptions {
                rtol: 1e-12,
                atol: 1e-15,
                h_max: 0.02,
                ..Default::default()
            },
        }
    }
}

fn to_v(y: &[f64; 2]) -> Vec2 {
    Vec2::new(y[0], y[1])
}

/// Two-sided shooting: forward along the unstable direction to the first
/// maximum of the distance from the equilibrium (the anchor), backward along
/// the stable direction to the line through the anchor orthogonal to the flow,
/// then match.
pub fn shoot_homoclinic(sys: &PlanarSystem, saddle: &SaddleData, opts: &ShootingOptions) -> Result<HomoclinicOrbit> {
    let eq = saddle.equilibrium;
    if !(opts.delta > 0.0) || opts.delta * 10.0 > opts.box_half_width {
        return Err(Error::InvalidInput("shooting offset must be small and positive".into()));
    }
    let escaped = |y: &[f64; 2]| (to_v(y) - eq).norm() > opts.box_half_width || !to_v(y).is_finite();
    let start = eq + saddle.unstable_dir * (opts.branch.signum() * opts.delta);
    let fwd = integrate_until(
        |_, y: &[f64; 2]| sys.f(to_v(y)).to_array(),
        0.0,
        start.to_array(),
        opts.t_max,
        opts.ode,
        |_, y| {
            let x = to_v(y);
            (x - eq).dot(sys.f(x))
        },
        |_, _| true,
        |_, y| escaped(y),
        1e-13,
    )?;
    let hit = fwd.hit.ok_or(Error::OrbitEscapes { t: opts.t_max })?;
    let anchor = to_v(&hit.y);
    let fa = sys.f(anchor);
    let reach = (anchor - eq).norm();

    let mut best: Option<(f64, crate::ode::Trajectory<2>)> = None;
    for sign in [1.0, -1.0] {
        let s0 = eq + saddle.stable_dir * (sign * opts.delta);
        let run = integrate_until(
            |_, y: &[f64; 2]| (-sys.f(to_v(y))).to_array(),
            0.0,
            s0.to_array(),
            opts.t_max,
            opts.ode,
            |_, y| (to_v(y) - anchor).dot(fa),
            |_, y| (to_v(y) - eq).norm() > 0.5 * reach,
            |_, y| escaped(y),
            1e-13,
        );
        if let Ok(run) = run {
            if let Some(h) = run.hit {
                let r = (to_v(&h.y) - anchor).norm();
                if best.as_ref().map_or(true, |b| r < b.0) {
                    best = Some((r, run.trajectory));
                }
            }
        }
    }
    let (residual, bwd) = best.ok_or(Error::OrbitEscapes { t: opts.t_max })?;
    if residual > opts.match_tol {
        return Err(Error::MatchResidual {
            residual,
            tol: opts.match_tol,
        });
    }

    let t_a = hit.t;
    let tau_b = *bwd.t.last().unwrap();
    let mut ts = Vec::new();
    let mut xs = Vec::new();
    for (t, y) in fwd.trajectory.t.iter().zip(&fwd.trajectory.y) {
        ts.push(t - t_a);
        xs.push(to_v(y));
    }
    // Backward run, reversed; its last point duplicates the anchor.
    for (tau, y) in bwd.t.iter().zip(&bwd.y).rev().skip(1) {
        let t = tau_b - tau;
        if t > *ts.last().unwrap() + 1e-9 {
            ts.push(t);
            xs.push(to_v(y));
        }
    }
    let d1: Vec<Vec2> = xs.iter().map(|&x| sys.f(x)).collect();
    let d2: Vec<Vec2> = xs
        .iter()
        .zip(&d1)
        .map(|(&x, &v)| sys.jacobian_f(x).mul_vec(v))
        .collect();
    let (t_lo, t_hi) = (ts[0], *ts.last().unwrap());
    let left = xs[0] - eq;
    let right = *xs.last().unwrap() - eq;
    let spline = QuinticHermite::new(ts, xs, d1, d2)?;
    let mut orbit = HomoclinicOrbit {
        repr: Repr::Sampled {
            spline,
            t_lo,
            t_hi,
            left,
            right,
        },
        saddle: *saddle,
        anchor,
        decay_window: 0.0,
    };
    orbit.decay_window = orbit.find_decay_window(TAIL_TOL);
    Ok(orbit)
}
