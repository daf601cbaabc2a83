//! Bounded solutions of `ż = Df(γ(t)) z + F(t)` on the frame window.

use serde::Serialize;

use crate::error::{Error, Result};
use crate::interp::CubicHermite;
use crate::planar::{wedge, Vec2};
use crate::quadrature::gauss_legendre5;
use crate::variational::VariationalFrame;

/// The frame together with a refined quadrature grid and `‖γ'‖₂²`.
///
/// Every window integral of this module uses the same rule: five-point
/// Gauss–Legendre on each grid interval plus exponential end corrections
/// `(φ(−T) + φ(T))/ω`. Using one rule everywhere makes the projection exactly
/// idempotent and keeps the Melnikov residual of `(I − p)F` at roundoff level.
pub struct FrameWorkspace<'a> {
    pub frame: &'a VariationalFrame,
    grid: Vec<f64>,
    i0: usize,
    pub gamma_l2_sq: f64,
}

impl<'a> FrameWorkspace<'a> {
    pub fn new(frame: &'a VariationalFrame) -> Self {
        let fg = frame.grid();
        let mut grid = Vec::with_capacity(2 * fg.len());
        for w in fg.windows(2) {
            grid.push(w[0]);
            grid.push(0.5 * (w[0] + w[1]));
        }
        grid.push(*fg.last().unwrap());
        let i0 = grid.iter().position(|&t| t == 0.0).expect("frame grid contains t = 0");
        let mut ws = FrameWorkspace {
            frame,
            grid,
            i0,
            gamma_l2_sq: 0.0,
        };
        ws.gamma_l2_sq = ws.integrate(|t| frame.gamma_prime(t).norm_sq());
        ws
    }

    pub fn grid(&self) -> &[f64] {
        &self.grid
    }

    pub fn window(&self) -> f64 {
        self.frame.window
    }

    /// Window rule applied to `φ`.
    pub fn integrate<F: Fn(f64) -> f64>(&self, phi: F) -> f64 {
        let mut s = 0.0;
        for w in self.grid.windows(2) {
            s += gauss_legendre5(&phi, w[0], w[1]);
        }
        let t = self.window();
        s + (phi(-t) + phi(t)) / self.frame.omega
    }

    /// `∫ (1/Δ) γ' ∧ F` by the window rule.
    pub fn melnikov(&self, forcing: &dyn Fn(f64) -> Vec2) -> f64 {
        self.integrate(|t| wedge(self.frame.gamma_prime(t), forcing(t)) / self.frame.delta(t))
    }

    /// Per-interval integrals of `φ` and the end corrections.
    fn pieces(&self, phi: &dyn Fn(f64) -> f64) -> Vec<f64> {
        self.grid.windows(2).map(|w| gauss_legendre5(phi, w[0], w[1])).collect()
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum GreenMode {
    /// The forcing must have (numerically) zero Melnikov residual.
    Normal,
    /// Any forcing; the solution grows like `e^{ωt}` when the residual is nonzero.
    Diagnostic,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub enum X2Choice {
    Fixed(f64),
    /// `x₂` chosen so that `∫ z·γ' = 0`.
    Orthogonal,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct GreenOptions {
    pub mode: GreenMode,
    pub x2: X2Choice,
    /// Admissible `|∫(1/Δ)γ'∧F|` in normal mode, relative to `∫|(1/Δ)γ'∧F|`.
    pub residual_rel_tol: f64,
    /// Bound on the relative ODE residual of the interpolated solution.
    pub ode_residual_tol: f64,
}

impl Default for GreenOptions {
    fn default() -> Self {
        GreenOptions {
            mode: GreenMode::Normal,
            x2: X2Choice::Orthogonal,
            residual_rel_tol: 1e-8,
            ode_residual_tol: 1e-6,
        }
    }
}

#[derive(Clone, Debug)]
pub struct GreenSolution {
    pub mode: GreenMode,
    pub x2: f64,
    /// `∫ (1/Δ) γ' ∧ F` by the window rule.
    pub melnikov: f64,
    /// Relative residual `max|ż − Az − F| / max(|F| + |Az|)` at quarter points.
    pub ode_residual: f64,
    /// Fitted exponential growth rate of `|z|` on `[T/2, 0.9T]` (diagnostic mode).
    pub growth_rate: Option<f64>,
    spline: CubicHermite,
}

impl GreenSolution {
    pub fn eval(&self, t: f64) -> Vec2 {
        self.spline.eval(t)
    }

    pub fn eval_with_derivative(&self, t: f64) -> (Vec2, Vec2) {
        self.spline.eval_with_derivative(t)
    }

    pub fn nodes(&self) -> &[f64] {
        self.spline.nodes()
    }

    pub fn values(&self) -> &[Vec2] {
        self.spline.values()
    }

    /// `max ‖z(tᵢ)‖` over the nodes with `|tᵢ| ≤ half`.
    pub fn sup_norm_within(&self, half: f64) -> f64 {
        self.nodes()
            .iter()
            .zip(self.values())
            .filter(|(t, _)| t.abs() <= half)
            .map(|(_, z)| z.norm())
            .fold(0.0, f64::max)
    }

    pub fn sup_norm(&self) -> f64 {
        self.values().iter().map(|z| z.norm()).fold(0.0, f64::max)
    }

    /// The zero function on the workspace grid.
    pub fn zero(ws: &FrameWorkspace) -> Self {
        let n = ws.grid.len();
        GreenSolution {
            mode: GreenMode::Normal,
            x2: 0.0,
            melnikov: 0.0,
            ode_residual: 0.0,
            growth_rate: None,
            spline: CubicHermite::new(ws.grid.clone(), vec![Vec2::ZERO; n], vec![Vec2::ZERO; n])
                .expect("workspace grid is increasing"),
        }
    }
}

/// `z(t) = γ'(t)(x₂ − ∫₀ᵗ (1/Δ) ζ∧F) + ζ(t) ∫_{−∞}^t (1/Δ) γ'∧F`.
///
/// For `t > 0` the second integral is evaluated as `M − ∫_t^∞`, with `M = 0`
/// in normal mode and `M` the full residual in diagnostic mode.
pub fn green_solve(ws: &FrameWorkspace, forcing: &dyn Fn(f64) -> Vec2, opts: &GreenOptions) -> Result<GreenSolution> {
    let frame = ws.frame;
    let sys = frame.system();
    let grid = &ws.grid;
    let n = grid.len();
    let big_t = ws.window();
    let omega = frame.omega;
    let h = |t: f64| wedge(frame.gamma_prime(t), forcing(t)) / frame.delta(t);
    let a = |t: f64| wedge(frame.zeta(t), forcing(t)) / frame.delta(t);
    let h_pieces = ws.pieces(&h);
    let a_pieces = ws.pieces(&a);
    let tail_l = h(-big_t) / omega;
    let tail_r = h(big_t) / omega;
    let window_total: f64 = h_pieces.iter().sum();
    let melnikov = window_total + tail_l + tail_r;
    let abs_scale = ws.integrate(|t| h(t).abs()).max(f64::MIN_POSITIVE);
    if opts.mode == GreenMode::Normal && melnikov.abs() > opts.residual_rel_tol * abs_scale {
        return Err(Error::ResidualCheck {
            residual: melnikov.abs() / abs_scale,
            tol: opts.residual_rel_tol,
        });
    }
    let m_mode = match opts.mode {
        GreenMode::Normal => 0.0,
        GreenMode::Diagnostic => melnikov,
    };
    // A(t) = ∫₀ᵗ a, accumulated outward from t = 0.
    let i0 = ws.i0;
    let mut big_a = vec![0.0; n];
    for i in (0..i0).rev() {
        big_a[i] = big_a[i + 1] - a_pieces[i];
    }
    for i in i0 + 1..n {
        big_a[i] = big_a[i - 1] + a_pieces[i - 1];
    }
    // b(t): from the left end for t ≤ 0, from the right end for t > 0.
    let mut b = vec![0.0; n];
    b[0] = tail_l;
    for i in 1..=i0 {
        b[i] = b[i - 1] + h_pieces[i - 1];
    }
    let mut right = tail_r;
    b[n - 1] = m_mode - right;
    for i in (i0 + 1..n - 1).rev() {
        right += h_pieces[i];
        b[i] = m_mode - right;
    }
    let mut gp = Vec::with_capacity(n);
    let mut gpp = Vec::with_capacity(n);
    let mut z0 = Vec::with_capacity(n);
    let mut dz0 = Vec::with_capacity(n);
    for (i, &t) in grid.iter().enumerate() {
        let x = frame.gamma(t);
        let jac = sys.jacobian_f(x);
        let g1 = sys.f(x);
        let z = g1 * (-big_a[i]) + frame.zeta(t) * b[i];
        gp.push(g1);
        gpp.push(jac.mul_vec(g1));
        dz0.push(jac.mul_vec(z) + forcing(t));
        z0.push(z);
    }
    let x2 = match opts.x2 {
        X2Choice::Fixed(v) => v,
        X2Choice::Orthogonal => {
            let s0 = CubicHermite::new(grid.clone(), z0.clone(), dz0.clone())?;
            -ws.integrate(|t| s0.eval(t).dot(frame.gamma_prime(t))) / ws.gamma_l2_sq
        }
    };
    let z: Vec<Vec2> = z0.iter().zip(&gp).map(|(z, g)| *z + *g * x2).collect();
    let dz: Vec<Vec2> = dz0.iter().zip(&gpp).map(|(d, g)| *d + *g * x2).collect();
    let spline = CubicHermite::new(grid.clone(), z.clone(), dz)?;
    let mut worst: f64 = 0.0;
    let mut scale: f64 = 0.0;
    for w in grid.windows(2) {
        for frac in [0.25, 0.75] {
            let t = w[0] + frac * (w[1] - w[0]);
            let (zt, dzt) = spline.eval_with_derivative(t);
            let az = frame.a_matrix(t).mul_vec(zt);
            let ft = forcing(t);
            worst = worst.max((dzt - az - ft).norm());
            scale = scale.max(ft.norm() + az.norm());
        }
    }
    let ode_residual = if scale > 0.0 { worst / scale } else { 0.0 };
    if !(ode_residual <= opts.ode_residual_tol) {
        return Err(Error::ResidualCheck {
            residual: ode_residual,
            tol: opts.ode_residual_tol,
        });
    }
    let growth_rate = match opts.mode {
        GreenMode::Normal => None,
        GreenMode::Diagnostic => fit_growth(grid, &z, 0.5 * big_t, 0.9 * big_t),
    };
    Ok(GreenSolution {
        mode: opts.mode,
        x2,
        melnikov,
        ode_residual,
        growth_rate,
        spline,
    })
}

/// Least-squares slope of `log‖z‖` against `t` on `[lo, hi]`.
fn fit_growth(grid: &[f64], z: &[Vec2], lo: f64, hi: f64) -> Option<f64> {
    let pts: Vec<(f64, f64)> = grid
        .iter()
        .zip(z)
        .filter(|(t, v)| **t >= lo && **t <= hi && v.norm() > 0.0)
        .map(|(t, v)| (*t, v.norm().ln()))
        .collect();
    if pts.len() < 3 {
        return None;
    }
    let n = pts.len() as f64;
    let mt = pts.iter().map(|p| p.0).sum::<f64>() / n;
    let my = pts.iter().map(|p| p.1).sum::<f64>() / n;
    let sxy: f64 = pts.iter().map(|p| (p.0 - mt) * (p.1 - my)).sum();
    let sxx: f64 = pts.iter().map(|p| (p.0 - mt).powi(2)).sum();
    Some(sxy / sxx)
}
