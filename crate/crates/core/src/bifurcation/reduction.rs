//! Lyapunov–Schmidt reduction near the unperturbed loop.
//!
//! Solutions are sought as `x(t − β) = αγ(t) + ξγ'(t) + η(t)` with `η ⊥ γ'`.
//! The range equation `η = k(I − p)F` is solved by fixed-point iteration and
//! the bifurcation function is the residual `B = ∫ (1/Δ) γ' ∧ F`.

use serde::Serialize;

use crate::error::{Error, Result};
use crate::planar::Vec2;

use super::green::{green_solve, FrameWorkspace, GreenOptions, GreenSolution};
use super::projection::Projection;

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct LsOptions {
    /// Absolute sup-norm increment at which the iteration stops.
    pub tol: f64,
    pub max_iterations: usize,
    /// Consecutive steps with ratio ≥ 1 before giving up.
    pub non_contracting_steps: usize,
}

impl Default for LsOptions {
    fn default() -> Self {
        LsOptions {
            tol: 1e-12,
            max_iterations: 100,
            non_contracting_steps: 3,
        }
    }
}

#[derive(Clone, Debug)]
pub struct LsState {
    pub xi: f64,
    pub alpha: f64,
    pub beta: f64,
    pub epsilon: f64,
    pub eta: GreenSolution,
    pub iterations: usize,
    /// Last observed ratio of successive increments (0 when the first step converged).
    pub contraction_ratio: f64,
    /// Value of the bifurcation function at the converged `η`.
    pub b: f64,
}

impl LsState {
    /// `z(t) = ξγ'(t) + η(t)`.
    pub fn z(&self, ws: &FrameWorkspace, t: f64) -> Vec2 {
        ws.frame.gamma_prime(t) * self.xi + self.eta.eval(t)
    }

    /// The reconstructed solution, `x(τ) = αγ(τ + β) + z(τ + β)`.
    pub fn solution(&self, ws: &FrameWorkspace, tau: f64) -> Vec2 {
        let t = tau + self.beta;
        ws.frame.gamma(t) * self.alpha + self.z(ws, t)
    }
}

/// `F(t) = f(αγ + z) − αf(γ) − Df(γ)z + εg(αγ + z, t − β)`.
pub fn remainder<'a>(
    ws: &'a FrameWorkspace<'_>,
    alpha: f64,
    beta: f64,
    epsilon: f64,
    z: &'a (dyn Fn(f64) -> Vec2 + 'a),
) -> impl Fn(f64) -> Vec2 + 'a {
    let frame = ws.frame;
    let sys = frame.system();
    move |t| {
        let g = frame.gamma(t);
        let zt = z(t);
        let x = g * alpha + zt;
        let mut v = sys.f(x) - sys.f(g) * alpha - sys.jacobian_f(g).mul_vec(zt);
        if epsilon != 0.0 {
            v += sys.g(x, t - beta) * epsilon;
        }
        v
    }
}

/// Fixed-point iteration `η ← k(I − p)F(ξγ' + η)` starting from `η = 0`.
pub fn solve_eta(ws: &FrameWorkspace, xi: f64, alpha: f64, beta: f64, epsilon: f64, opts: &LsOptions) -> Result<LsState> {
    let frame = ws.frame;
    let green = GreenOptions::default();
    let mut eta = GreenSolution::zero(ws);
    let mut prev_step: Option<f64> = None;
    let mut ratio = 0.0;
    let mut bad = 0;
    for it in 1..=opts.max_iterations {
        let next = {
            let z = |t: f64| frame.gamma_prime(t) * xi + eta.eval(t);
            let forcing = remainder(ws, alpha, beta, epsilon, &z);
            let p = Projection::new(ws, &forcing);
            let rest = |t: f64| forcing(t) - p.eval(ws, t);
            green_solve(ws, &rest, &green)?
        };
        let step = next
            .values()
            .iter()
            .zip(eta.values())
            .map(|(a, b)| (*a - *b).norm())
            .fold(0.0, f64::max);
        eta = next;
        if step <= opts.tol * (1.0 + eta.sup_norm()) {
            let b = {
                let z = |t: f64| frame.gamma_prime(t) * xi + eta.eval(t);
                let forcing = remainder(ws, alpha, beta, epsilon, &z);
                ws.melnikov(&forcing)
            };
            return Ok(LsState {
                xi,
                alpha,
                beta,
                epsilon,
                eta,
                iterations: it,
                contraction_ratio: ratio,
                b,
            });
        }
        if let Some(prev) = prev_step {
            ratio = step / prev;
            if ratio >= 1.0 {
                bad += 1;
                if bad >= opts.non_contracting_steps {
                    return Err(Error::NonContraction { ratio });
                }
            } else {
                bad = 0;
            }
        }
        if !step.is_finite() {
            return Err(Error::NonContraction { ratio: f64::INFINITY });
        }
        prev_step = Some(step);
    }
    Err(Error::NoConvergence {
        what: "range equation",
        iterations: opts.max_iterations,
    })
}

/// `B(ξ, α, β, ε)`.
pub fn bifurcation_b(ws: &FrameWorkspace, xi: f64, alpha: f64, beta: f64, epsilon: f64, opts: &LsOptions) -> Result<f64> {
    Ok(solve_eta(ws, xi, alpha, beta, epsilon, opts)?.b)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::homoclinic::powerlaw_homoclinic;
    use crate::systems::{powerlaw_system, CosForcing};
    use crate::variational::{build_frame, FrameOptions};
    use std::sync::Arc;

    #[test]
    fn trivial_point_is_exact() {
        let sys = powerlaw_system(1.0, 1.0, 2, Arc::new(CosForcing { amplitude: 1.0, frequency: 1.0 })).unwrap();
        let orbit = powerlaw_homoclinic(1.0, 1.0, 2).unwrap();
        let frame = build_frame(&sys, &orbit, 20.0, &FrameOptions::default()).unwrap();
        let ws = FrameWorkspace::new(&frame);
        let s = solve_eta(&ws, 0.0, 1.0, 0.0, 0.0, &LsOptions::default()).unwrap();
        assert_eq!(s.eta.sup_norm(), 0.0);
        assert_eq!(s.b, 0.0);
    }
}
