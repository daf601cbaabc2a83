//! Planar vector fields, perturbations and the small amount of 2-D linear
//! algebra shared by every other module.

use std::fmt;
use std::ops::{Add, AddAssign, Mul, Neg, Sub, SubAssign};
use std::sync::Arc;

use rand_chacha::ChaCha8Rng;
use rand_core::{RngCore, SeedableRng};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// A point or tangent vector in the plane.
#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct Vec2 {
    pub x: f64,
    pub y: f64,
}

impl Vec2 {
    pub const ZERO: Vec2 = Vec2 { x: 0.0, y: 0.0 };

    #[inline]
    pub const fn new(x: f64, y: f64) -> Self {
        Vec2 { x, y }
    }

    #[inline]
    pub fn dot(self, other: Vec2) -> f64 {
        self.x * other.x + self.y * other.y
    }

    #[inline]
    pub fn norm(self) -> f64 {
        self.x.hypot(self.y)
    }

    #[inline]
    pub fn norm_sq(self) -> f64 {
        self.dot(self)
    }

    /// Counter-clockwise quarter turn, so that `wedge(u, u.perp()) = |u|²`.
    #[inline]
    pub fn perp(self) -> Vec2 {
        Vec2::new(-self.y, self.x)
    }

    #[inline]
    pub fn is_finite(self) -> bool {
        self.x.is_finite() && self.y.is_finite()
    }

    #[inline]
    pub fn to_array(self) -> [f64; 2] {
        [self.x, self.y]
    }

    #[inline]
    pub fn from_array(a: [f64; 2]) -> Self {
        Vec2::new(a[0], a[1])
    }

    /// Component by index (0 or 1).
    #[inline]
    pub fn get(self, i: usize) -> f64 {
        if i == 0 {
            self.x
        } else {
            self.y
        }
    }
}

impl fmt::Display for Vec2 {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "({}, {})", self.x, self.y)
    }
}

impl Add for Vec2 {
    type Output = Vec2;
    #[inline]
    fn add(self, o: Vec2) -> Vec2 {
        Vec2::new(self.x + o.x, self.y + o.y)
    }
}

impl AddAssign for Vec2 {
    #[inline]
    fn add_assign(&mut self, o: Vec2) {
        self.x += o.x;
        self.y += o.y;
    }
}

impl Sub for Vec2 {
    type Output = Vec2;
    #[inline]
    fn sub(self, o: Vec2) -> Vec2 {
        Vec2::new(self.x - o.x, self.y - o.y)
    }
}

impl SubAssign for Vec2 {
    #[inline]
    fn sub_assign(&mut self, o: Vec2) {
        self.x -= o.x;
        self.y -= o.y;
    }
}

impl Neg for Vec2 {
    type Output = Vec2;
    #[inline]
    fn neg(self) -> Vec2 {
        Vec2::new(-self.x, -self.y)
    }
}

impl Mul<f64> for Vec2 {
    type Output = Vec2;
    #[inline]
    fn mul(self, s: f64) -> Vec2 {
        Vec2::new(self.x * s, self.y * s)
    }
}

impl Mul<Vec2> for f64 {
    type Output = Vec2;
    #[inline]
    fn mul(self, v: Vec2) -> Vec2 {
        v * self
    }
}

/// `u ∧ v = a·b' − b·a'` for `u = (a, b)`, `v = (a', b')`.
#[inline]
pub fn wedge(u: Vec2, v: Vec2) -> f64 {
    u.x * v.y - u.y * v.x
}

/// Row-major 2×2 matrix.
#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct Mat2 {
    pub m: [[f64; 2]; 2],
}

impl Mat2 {
    pub const ZERO: Mat2 = Mat2 { m: [[0.0; 2]; 2] };
    pub const IDENTITY: Mat2 = Mat2 {
        m: [[1.0, 0.0], [0.0, 1.0]],
    };

    #[inline]
    pub const fn new(a: f64, b: f64, c: f64, d: f64) -> Self {
        Mat2 { m: [[a, b], [c, d]] }
    }

    pub fn from_rows(r0: Vec2, r1: Vec2) -> Self {
        Mat2::new(r0.x, r0.y, r1.x, r1.y)
    }

    pub fn from_cols(c0: Vec2, c1: Vec2) -> Self {
        Mat2::new(c0.x, c1.x, c0.y, c1.y)
    }

    pub fn rotation(angle: f64) -> Self {
        let (s, c) = angle.sin_cos();
        Mat2::new(c, -s, s, c)
    }

    #[inline]
    pub fn row(&self, i: usize) -> Vec2 {
        Vec2::new(self.m[i][0], self.m[i][1])
    }

    #[inline]
    pub fn col(&self, j: usize) -> Vec2 {
        Vec2::new(self.m[0][j], self.m[1][j])
    }

    #[inline]
    pub fn mul_vec(&self, v: Vec2) -> Vec2 {
        Vec2::new(
            self.m[0][0] * v.x + self.m[0][1] * v.y,
            self.m[1][0] * v.x + self.m[1][1] * v.y,
        )
    }

    pub fn mul_mat(&self, o: &Mat2) -> Mat2 {
        let mut r = Mat2::ZERO;
        for i in 0..2 {
            for j in 0..2 {
                r.m[i][j] = self.m[i][0] * o.m[0][j] + self.m[i][1] * o.m[1][j];
            }
        }
        r
    }

    pub fn transpose(&self) -> Mat2 {
        Mat2::new(self.m[0][0], self.m[1][0], self.m[0][1], self.m[1][1])
    }

    #[inline]
    pub fn trace(&self) -> f64 {
        self.m[0][0] + self.m[1][1]
    }

    #[inline]
    pub fn det(&self) -> f64 {
        self.m[0][0] * self.m[1][1] - self.m[0][1] * self.m[1][0]
    }

    pub fn inverse(&self) -> Option<Mat2> {
        let d = self.det();
        let scale = self.max_abs();
        if d == 0.0 || !d.is_finite() || d.abs() <= 1e-14 * scale * scale {
            return None;
        }
        Some(Mat2::new(
            self.m[1][1] / d,
            -self.m[0][1] / d,
            -self.m[1][0] / d,
            self.m[0][0] / d,
        ))
    }

    pub fn scale(&self, s: f64) -> Mat2 {
        let mut r = *self;
        r.m.iter_mut().flatten().for_each(|v| *v *= s);
        r
    }

    pub fn add(&self, o: &Mat2) -> Mat2 {
        let mut r = *self;
        for i in 0..2 {
            for j in 0..2 {
                r.m[i][j] += o.m[i][j];
            }
        }
        r
    }

    pub fn max_abs(&self) -> f64 {
        self.m.iter().flatten().fold(0.0f64, |a, v| a.max(v.abs()))
    }

    /// Sum of all four entries, `Σ_ij m_ij`.
    pub fn entry_sum(&self) -> f64 {
        self.m.iter().flatten().sum()
    }

    pub fn is_finite(&self) -> bool {
        self.m.iter().flatten().all(|v| v.is_finite())
    }
}

impl fmt::Display for Mat2 {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "[[{}, {}], [{}, {}]]",
            self.m[0][0], self.m[0][1], self.m[1][0], self.m[1][1]
        )
    }
}

/// Default central-difference step: `ε^{1/3}·(1 + |x|)`.
pub fn default_fd_step(x: Vec2) -> f64 {
    f64::EPSILON.cbrt() * (1.0 + x.norm())
}

/// Central-difference Jacobian of `f` at `x`.
pub fn finite_diff_jacobian<F>(f: F, x: Vec2, h: f64) -> Result<Mat2>
where
    F: Fn(Vec2) -> Vec2,
{
    let floor = f64::EPSILON * (1.0 + x.norm());
    if !(h > floor) {
        return Err(Error::StepUnderflow { h, floor });
    }
    let ex = Vec2::new(h, 0.0);
    let ey = Vec2::new(0.0, h);
    let dx = (f(x + ex) - f(x - ex)) * (0.5 / h);
    let dy = (f(x + ey) - f(x - ey)) * (0.5 / h);
    Ok(Mat2::from_cols(dx, dy))
}

/// Unperturbed field `f` with its first and second derivatives.
pub trait VectorField: Send + Sync {
    fn eval(&self, x: Vec2) -> Vec2;
    fn jacobian(&self, x: Vec2) -> Mat2;
    /// `[D²f₁(x), D²f₂(x)]`.
    fn hessians(&self, x: Vec2) -> [Mat2; 2];
    fn name(&self) -> String;
}

/// Time-dependent perturbation `g(x, t)` with its spatial gradient.
pub trait Perturbation: Send + Sync {
    fn eval(&self, x: Vec2, t: f64) -> Vec2;
    /// Rows are `∇ₓg₁`, `∇ₓg₂`.
    fn gradient(&self, x: Vec2, t: f64) -> Mat2;
    fn name(&self) -> String;
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum DerivativeMode {
    Analytic,
    FiniteDifference,
}

/// `ẋ = f(x) + ε g(x, t)` in the plane.
#[derive(Clone)]
pub struct PlanarSystem {
    field: Arc<dyn VectorField>,
    perturbation: Arc<dyn Perturbation>,
    hamiltonian: bool,
    mode: DerivativeMode,
}

impl fmt::Debug for PlanarSystem {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("PlanarSystem")
            .field("field", &self.field.name())
            .field("perturbation", &self.perturbation.name())
            .field("hamiltonian", &self.hamiltonian)
            .field("mode", &self.mode)
            .finish()
    }
}

impl PlanarSystem {
    pub fn new(
        field: Arc<dyn VectorField>,
        perturbation: Arc<dyn Perturbation>,
        hamiltonian: bool,
    ) -> Self {
        PlanarSystem {
            field,
            perturbation,
            hamiltonian,
            mode: DerivativeMode::Analytic,
        }
    }

    pub fn with_perturbation(&self, perturbation: Arc<dyn Perturbation>) -> Self {
        PlanarSystem {
            perturbation,
            ..self.clone()
        }
    }

    pub fn with_derivative_mode(&self, mode: DerivativeMode) -> Self {
        PlanarSystem {
            mode,
            ..self.clone()
        }
    }

    pub fn field(&self) -> &Arc<dyn VectorField> {
        &self.field
    }

    pub fn perturbation(&self) -> &Arc<dyn Perturbation> {
        &self.perturbation
    }

    pub fn is_hamiltonian(&self) -> bool {
        self.hamiltonian
    }

    pub fn derivative_mode(&self) -> DerivativeMode {
        self.mode
    }

    pub fn describe(&self) -> String {
        format!("{} + eps*{}", self.field.name(), self.perturbation.name())
    }

    #[inline]
    pub fn f(&self, x: Vec2) -> Vec2 {
        self.field.eval(x)
    }

    pub fn jacobian_f(&self, x: Vec2) -> Mat2 {
        match self.mode {
            DerivativeMode::Analytic => self.field.jacobian(x),
            DerivativeMode::FiniteDifference => {
                finite_diff_jacobian(|p| self.field.eval(p), x, default_fd_step(x))
                    .expect("default step is above the underflow floor")
            }
        }
    }

    pub fn hessians_f(&self, x: Vec2) -> [Mat2; 2] {
        match self.mode {
            DerivativeMode::Analytic => self.field.hessians(x),
            DerivativeMode::FiniteDifference => {
                // differentiate the analytic-or-FD Jacobian rows once more
                let h = f64::EPSILON.powf(0.25) * (1.0 + x.norm());
                let jx = self
                    .field
                    .jacobian(x + Vec2::new(h, 0.0))
                    .add(&self.field.jacobian(x - Vec2::new(h, 0.0)).scale(-1.0))
                    .scale(0.5 / h);
                let jy = self
                    .field
                    .jacobian(x + Vec2::new(0.0, h))
                    .add(&self.field.jacobian(x - Vec2::new(0.0, h)).scale(-1.0))
                    .scale(0.5 / h);
                let mut out = [Mat2::ZERO; 2];
                for (k, hk) in out.iter_mut().enumerate() {
                    *hk = Mat2::new(jx.m[k][0], jy.m[k][0], jx.m[k][1], jy.m[k][1]);
                }
                out
            }
        }
    }

    #[inline]
    pub fn g(&self, x: Vec2, t: f64) -> Vec2 {
        self.perturbation.eval(x, t)
    }

    #[inline]
    pub fn grad_g(&self, x: Vec2, t: f64) -> Mat2 {
        self.perturbation.gradient(x, t)
    }

    /// Full right-hand side `f(x) + ε g(x, t)`.
    #[inline]
    pub fn rhs(&self, x: Vec2, t: f64, epsilon: f64) -> Vec2 {
        if epsilon == 0.0 {
            self.f(x)
        } else {
            self.f(x) + self.g(x, t) * epsilon
        }
    }

    /// Largest relative deviation between the analytic Jacobian and central
    /// differences of `f` over the probe points.
    pub fn jacobian_deviation(&self, probes: &[Vec2]) -> f64 {
        probes
            .iter()
            .map(|&p| {
                let a = self.field.jacobian(p);
                let fd = finite_diff_jacobian(|q| self.field.eval(q), p, default_fd_step(p))
                    .expect("default step is above the underflow floor");
                let diff = a.add(&fd.scale(-1.0)).max_abs();
                diff / a.max_abs().max(1.0)
            })
            .fold(0.0, f64::max)
    }

    /// Largest `|trace Df|` over the probe points.
    pub fn max_abs_trace(&self, probes: &[Vec2]) -> f64 {
        probes
            .iter()
            .map(|&p| self.jacobian_f(p).trace().abs())
            .fold(0.0, f64::max)
    }

    /// Verify the declared derivative and Hamiltonian invariants on seeded
    /// random probes in `[-half_width, half_width]²`.
    pub fn validate(&self, half_width: f64, probes: usize, seed: u64) -> Result<()> {
        let pts = random_probes(half_width, probes, seed);
        if self.mode == DerivativeMode::Analytic {
            let dev = self.jacobian_deviation(&pts);
            if dev > 1e-5 {
                return Err(Error::InvalidInput(format!(
                    "analytic Jacobian of {} deviates from finite differences by {dev:e}",
                    self.field.name()
                )));
            }
        }
        if self.hamiltonian {
            let tr = self.max_abs_trace(&pts);
            if tr > 1e-10 {
                return Err(Error::InvalidInput(format!(
                    "{} is flagged Hamiltonian but |trace Df| reaches {tr:e}",
                    self.field.name()
                )));
            }
        }
        Ok(())
    }
}

/// Uniform probe points in a centred square, reproducible from `seed`.
pub fn random_probes(half_width: f64, n: usize, seed: u64) -> Vec<Vec2> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..n)
        .map(|_| {
            let x = (2.0 * unit_f64(&mut rng) - 1.0) * half_width;
            let y = (2.0 * unit_f64(&mut rng) - 1.0) * half_width;
            Vec2::new(x, y)
        })
        .collect()
}

pub(crate) fn unit_f64(rng: &mut impl RngCore) -> f64 {
    (rng.next_u64() >> 11) as f64 / (1u64 << 53) as f64
}

/// Perturbation size ε, phase shift β and amplitude α of the ansatz
/// `x(t − β) = α γ(t) + z(t)`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct EpsilonBeta {
    pub epsilon: f64,
    pub beta: f64,
    pub alpha: f64,
}

impl EpsilonBeta {
    pub fn new(epsilon: f64, beta: f64, alpha: f64) -> Result<Self> {
        let p = EpsilonBeta {
            epsilon,
            beta,
            alpha,
        };
        p.validate()?;
        Ok(p)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.epsilon.abs() <= 0.5) {
            return Err(Error::InvalidInput(format!(
                "|epsilon| = {} exceeds 0.5",
                self.epsilon.abs()
            )));
        }
        if !(0.5..=1.5).contains(&self.alpha) {
            return Err(Error::InvalidInput(format!(
                "alpha = {} outside [0.5, 1.5]",
                self.alpha
            )));
        }
        if !self.beta.is_finite() {
            return Err(Error::InvalidInput("beta must be finite".into()));
        }
        Ok(())
    }
}

/// Field given by closures; handy for one-off systems and tests.
pub struct ClosureField<F, J, H> {
    pub name: String,
    pub f: F,
    pub jac: J,
    pub hess: H,
}

impl<F, J, H> VectorField for ClosureField<F, J, H>
where
    F: Fn(Vec2) -> Vec2 + Send + Sync,
    J: Fn(Vec2) -> Mat2 + Send + Sync,
    H: Fn(Vec2) -> [Mat2; 2] + Send + Sync,
{
    fn eval(&self, x: Vec2) -> Vec2 {
        (self.f)(x)
    }
    fn jacobian(&self, x: Vec2) -> Mat2 {
        (self.jac)(x)
    }
    fn hessians(&self, x: Vec2) -> [Mat2; 2] {
        (self.hess)(x)
    }
    fn name(&self) -> String {
        self.name.clone()
    }
}

/// Perturbation given by closures.
pub struct ClosurePerturbation<G, D> {
    pub name: String,
    pub g: G,
    pub grad: D,
}

impl<G, D> Perturbation for ClosurePerturbation<G, D>
where
    G: Fn(Vec2, f64) -> Vec2 + Send + Sync,
    D: Fn(Vec2, f64) -> Mat2 + Send + Sync,
{
    fn eval(&self, x: Vec2, t: f64) -> Vec2 {
        (self.g)(x, t)
    }
    fn gradient(&self, x: Vec2, t: f64) -> Mat2 {
        (self.grad)(x, t)
    }
    fn name(&self) -> String {
        self.name.clone()
    }
}
