//! Fundamental frame `(γ', ζ)` of the variational equation `ż = Df(γ(t)) z`.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::homoclinic::HomoclinicOrbit;
use crate::interp::QuinticHermite;
use crate::ode::{integrate_recorded, OdeOptions};
use crate::planar::{wedge, Mat2, PlanarSystem, Vec2};
use crate::quadrature::cumulative_integral;

/// `ζ(0) = scale · γ'(0)^⊥ / ‖γ'(0)‖² + mix · γ'(0)`, so that `Δ(0) = scale`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct FrameNormalization {
    pub scale: f64,
    pub mix: f64,
}

impl Default for FrameNormalization {
    fn default() -> Self {
        FrameNormalization { scale: 1.0, mix: 0.0 }
    }
}

#[derive(Clone, Copy, Debug)]
pub struct FrameOptions {
    pub normalization: FrameNormalization,
    pub ode: OdeOptions,
    /// Relative tolerance of the Abel-identity check.
    pub abel_tol: f64,
    /// Tolerance for `Δ ≡ const` on systems flagged Hamiltonian.
    pub hamiltonian_tol: f64,
    /// Overflow guard for the empirical dichotomy constant.
    pub dichotomy_guard: f64,
}

impl Default for FrameOptions {
    fn default() -> Self {
        FrameOptions {
            normalization: FrameNormalization::default(),
            ode: OdeOptions {
                rtol: 1e-10,
                atol: 1e-12,
                h_max: 0.02,
                ..Default::default()
            },
            abel_tol: 1e-6,
            hamiltonian_tol: 1e-8,
            dichotomy_guard: 1e6,
        }
    }
}

/// Structural checks recorded while building a frame.
#[derive(Clone, Copy, Debug, Default, Serialize)]
pub struct FrameDiagnostics {
    /// `max |Δ(t) − Δ_Abel(t)| / |Δ_Abel(t)|` over the grid.
    pub abel_max_rel: f64,
    /// `max |Δ(t) − Δ(0)| / |Δ(0)|` over the grid.
    pub delta_variation: f64,
    /// `|Δ(T) − Δ(−T)| / max(|Δ(T)|, |Δ(−T)|)`.
    pub end_gap_rel: f64,
    /// Wronskian from the interpolants at interval midpoints against Abel.
    pub wronskian_midpoint_rel: f64,
}

#[derive(Clone, Debug)]
pub struct VariationalFrame {
    sys: PlanarSystem,
    orbit: HomoclinicOrbit,
    pub window: f64,
    grid: Vec<f64>,
    zeta: QuinticHermite,
    pub omega: f64,
    pub dichotomy_k: f64,
    pub normalization: FrameNormalization,
    pub diagnostics: FrameDiagnostics,
}

fn d_a(sys: &PlanarSystem, x: Vec2, v: Vec2) -> Mat2 {
    // d/dt Df(γ(t)) with γ' = v: row k is H_k v.
    let h = sys.hessians_f(x);
    Mat2::from_rows(h[0].mul_vec(v), h[1].mul_vec(v))
}

/// Integrate `ζ` outward from `t = 0` on `[−T, T]` and verify the frame.
pub fn build_frame(sys: &PlanarSystem, orbit: &HomoclinicOrbit, window: f64, opts: &FrameOptions) -> Result<VariationalFrame> {
    if !(window >= orbit.decay_window) || !window.is_finite() {
        return Err(Error::InvalidInput(format!(
            "frame window {window} is shorter than the orbit decay window {:.3}",
            orbit.decay_window
        )));
    }
    let norm = opts.normalization;
    if !(norm.scale != 0.0 && norm.scale.is_finite() && norm.mix.is_finite()) {
        return Err(Error::InvalidInput("frame normalization needs a finite nonzero scale".into()));
    }
    let gp0 = sys.f(orbit.gamma(0.0));
    if gp0.norm() == 0.0 {
        return Err(Error::DegenerateFrame { t: 0.0 });
    }
    let z0 = gp0.perp() * (norm.scale / gp0.norm_sq()) + gp0 * norm.mix;
    let rhs = |t: f64, z: &[f64; 2]| {
        sys.jacobian_f(orbit.gamma(t))
            .mul_vec(Vec2::new(z[0], z[1]))
            .to_array()
    };
    let fwd = integrate_recorded(rhs, 0.0, z0.to_array(), window, opts.ode)?;
    let bwd = integrate_recorded(rhs, 0.0, z0.to_array(), -window, opts.ode)?;
    let mut grid = Vec::with_capacity(fwd.len() + bwd.len());
    let mut vals = Vec::with_capacity(grid.capacity());
    for (t, z) in bwd.t.iter().zip(&bwd.y).rev() {
        grid.push(*t);
        vals.push(Vec2::new(z[0], z[1]));
    }
    for (t, z) in fwd.t.iter().zip(&fwd.y).skip(1) {
        grid.push(*t);
        vals.push(Vec2::new(z[0], z[1]));
    }
    let mut d1 = Vec::with_capacity(grid.len());
    let mut d2 = Vec::with_capacity(grid.len());
    for (&t, &z) in grid.iter().zip(&vals) {
        let g = orbit.gamma(t);
        let a = sys.jacobian_f(g);
        let dz = a.mul_vec(z);
        d1.push(dz);
        d2.push(d_a(sys, g, sys.f(g)).mul_vec(z) + a.mul_vec(dz));
    }
    let zeta = QuinticHermite::new(grid.clone(), vals, d1, d2)?;
    let mut frame = VariationalFrame {
        sys: sys.clone(),
        orbit: orbit.clone(),
        window,
        grid,
        zeta,
        omega: orbit.saddle.omega,
        dichotomy_k: f64::NAN,
        normalization: norm,
        diagnostics: FrameDiagnostics::default(),
    };
    frame.verify(opts)?;
    frame.dichotomy_k = check_dichotomy_with(&frame, frame.omega, opts.dichotomy_guard)?;
    Ok(frame)
}

impl VariationalFrame {
    fn verify(&mut self, opts: &FrameOptions) -> Result<()> {
        let delta: Vec<f64> = self.grid.iter().map(|&t| self.delta(t)).collect();
        let i0 = self.grid.iter().position(|&t| t == 0.0).unwrap_or(0);
        let d0 = delta[i0];
        for (&t, &d) in self.grid.iter().zip(&delta) {
            if !(d.abs() > 1e-12 * d0.abs()) {
                return Err(Error::DegenerateFrame { t });
            }
        }
        let cum = cumulative_integral(&self.grid, |t| self.trace_a(t));
        let abel = |i: usize| d0 * (cum[i] - cum[i0]).exp();
        let mut abel_rel: f64 = 0.0;
        let mut variation: f64 = 0.0;
        for (i, &d) in delta.iter().enumerate() {
            let a = abel(i);
            abel_rel = abel_rel.max((d - a).abs() / a.abs());
            variation = variation.max((d - d0).abs() / d0.abs());
        }
        let mut mid_rel: f64 = 0.0;
        for i in 0..self.grid.len() - 1 {
            let (a, b) = (self.grid[i], self.grid[i + 1]);
            let m = 0.5 * (a + b);
            let half = crate::quadrature::gauss_legendre5(|t| self.trace_a(t), a, m);
            let expected = abel(i) * half.exp();
            mid_rel = mid_rel.max((self.delta(m) - expected).abs() / expected.abs());
        }
        let (dl, dr) = (delta[0], *delta.last().unwrap());
        self.diagnostics = FrameDiagnostics {
            abel_max_rel: abel_rel,
            delta_variation: variation,
            end_gap_rel: (dr - dl).abs() / dl.abs().max(dr.abs()),
            wronskian_midpoint_rel: mid_rel,
        };
        if abel_rel > opts.abel_tol {
            return Err(Error::FrameCheck(format!(
                "Abel identity violated: relative deviation {abel_rel:e}"
            )));
        }
        if self.sys.is_hamiltonian() && variation > opts.hamiltonian_tol {
            return Err(Error::FrameCheck(format!(
                "Hamiltonian system but Δ varies by {variation:e}"
            )));
        }
        Ok(())
    }

    pub fn system(&self) -> &PlanarSystem {
        &self.sys
    }

    pub fn orbit(&self) -> &HomoclinicOrbit {
        &self.orbit
    }

    pub fn grid(&self) -> &[f64] {
        &self.grid
    }

    pub fn gamma(&self, t: f64) -> Vec2 {
        self.orbit.gamma(t)
    }

    /// `γ'(t)`, taken as `f(γ(t))`.
    pub fn gamma_prime(&self, t: f64) -> Vec2 {
        self.sys.f(self.orbit.gamma(t))
    }

    pub fn zeta(&self, t: f64) -> Vec2 {
        self.zeta.eval(t)
    }

    pub fn a_matrix(&self, t: f64) -> Mat2 {
        self.sys.jacobian_f(self.orbit.gamma(t))
    }

    pub fn trace_a(&self, t: f64) -> f64 {
        self.a_matrix(t).trace()
    }

    /// `Δ(t) = γ₁'ζ₂ − γ₂'ζ₁`.
    pub fn delta(&self, t: f64) -> f64 {
        wedge(self.gamma_prime(t), self.zeta(t))
    }

    /// `‖γ'‖₂²` over the frame window.
    pub fn gamma_prime_l2_sq(&self) -> f64 {
        let c = cumulative_integral(&self.grid, |t| self.gamma_prime(t).norm_sq());
        *c.last().unwrap()
    }

    /// Rows `(t, γ₁', γ₂', ζ₁, ζ₂, Δ)` on the frame grid.
    pub fn samples(&self) -> Vec<[f64; 6]> {
        self.grid
            .iter()
            .map(|&t| {
                let g = self.gamma_prime(t);
                let z = self.zeta(t);
                [t, g.x, g.y, z.x, z.y, wedge(g, z)]
            })
            .collect()
    }
}

/// Empirical dichotomy constant at the frame's own rate `ω`.
pub fn check_dichotomy(frame: &VariationalFrame) -> Result<f64> {
    check_dichotomy_with(frame, frame.omega, FrameOptions::default().dichotomy_guard)
}

/// `k = max |γᵢ'(t) ζⱼ(s)| e^{ω(t−s)}` over `t ≥ s ≥ 0`, and the mirrored
/// expression over `t ≤ s ≤ 0`, evaluated on the frame grid in O(n).
pub fn check_dichotomy_with(frame: &VariationalFrame, omega: f64, guard: f64) -> Result<f64> {
    let grid = frame.grid();
    let gp: Vec<Vec2> = grid.iter().map(|&t| frame.gamma_prime(t)).collect();
    let zz: Vec<Vec2> = grid.iter().map(|&t| frame.zeta(t)).collect();
    let i0 = grid.iter().position(|&t| t >= 0.0).unwrap_or(0);
    let gmax = |v: Vec2| v.x.abs().max(v.y.abs());
    let mut k: f64 = 0.0;
    // t ≥ s ≥ 0: |γ'(t)| e^{ωt} · max_{0≤s≤t} |ζ(s)| e^{−ωs}
    let mut best_s: f64 = 0.0;
    for i in i0..grid.len() {
        best_s = best_s.max(gmax(zz[i]) * (-omega * grid[i]).exp());
        k = k.max(gmax(gp[i]) * (omega * grid[i]).exp() * best_s);
    }
    // t ≤ s ≤ 0: |γ'(t)| e^{−ωt} · max_{t≤s≤0} |ζ(s)| e^{ωs}
    best_s = 0.0;
    for i in (0..=i0.min(grid.len() - 1)).rev() {
        if grid[i] > 0.0 {
            continue;
        }
        best_s = best_s.max(gmax(zz[i]) * (omega * grid[i]).exp());
        k = k.max(gmax(gp[i]) * (-omega * grid[i]).exp() * best_s);
    }
    if !k.is_finite() || k > guard {
        return Err(Error::UnboundedGrowth { k, guard });
    }
    Ok(k)
}

#[derive(Clone, Copy, Debug, Serialize)]
pub struct TailSide {
    /// `γ'(t) e^{ω|t|}` at the window edge.
    pub gamma_ratio: Vec2,
    /// `ζ(t) e^{−ω|t|}` at the window edge.
    pub zeta_ratio: Vec2,
    pub gamma_drift: f64,
    pub zeta_drift: f64,
}

#[derive(Clone, Copy, Debug, Serialize)]
pub struct AsymptoticsReport {
    pub at_zero: Vec2,
    pub left: TailSide,
    pub right: TailSide,
    pub converged: bool,
}

/// Tail ratios and their relative drift between `0.8T` and `T`.
pub fn check_asymptotics(frame: &VariationalFrame) -> AsymptoticsReport {
    let w = frame.omega;
    let big_t = frame.window;
    let side = |sign: f64| {
        let ratios = |t: f64| {
            let tt = sign * t;
            (
                frame.gamma_prime(tt) * (w * t).exp(),
                frame.zeta(tt) * (-w * t).exp(),
            )
        };
        let (g1, z1) = ratios(big_t);
        let (g0, z0) = ratios(0.8 * big_t);
        TailSide {
            gamma_ratio: g1,
            zeta_ratio: z1,
            gamma_drift: (g1 - g0).norm() / g1.norm(),
            zeta_drift: (z1 - z0).norm() / z1.norm(),
        }
    };
    let (left, right) = (side(-1.0), side(1.0));
    let converged = [left, right]
        .iter()
        .all(|s| s.gamma_drift < 0.05 && s.zeta_drift < 0.05);
    AsymptoticsReport {
        at_zero: frame.gamma_prime(0.0),
        left,
        right,
        converged,
    }
}
