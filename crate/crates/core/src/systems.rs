//! Built-in fields and forcings.
//!
//! The power-law oscillator `ẋ = y, ẏ = νx − μx^{p+1}` is the reference
//! Hamiltonian family. Two relatives keep its homoclinic loop intact while
//! changing the structure around it:
//!
//! * [`LevelDamped`] adds `c·y·H(x, y)` to `ẏ`, where `H` is the energy. The
//!   term vanishes on the zero level set, so the loop survives while the
//!   divergence along it becomes `c·y²`.
//! * [`Rotated`] conjugates any field by a rotation, which makes `f₁`
//!   nonlinear and so exercises every term of the condition functionals.

use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::planar::{Mat2, Perturbation, PlanarSystem, Vec2, VectorField};

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct PowerLaw {
    pub nu: f64,
    pub mu: f64,
    pub p: u32,
}

impl PowerLaw {
    pub fn new(nu: f64, mu: f64, p: u32) -> Result<Self> {
        if !(nu > 0.0 && nu.is_finite()) || !(mu > 0.0 && mu.is_finite()) || p < 2 {
            return Err(Error::InvalidInput(format!(
                "power-law parameters need nu > 0, mu > 0, p >= 2 (got {nu}, {mu}, {p})"
            )));
        }
        Ok(PowerLaw { nu, mu, p })
    }

    /// `((p + 2) ν / 2μ)^{1/p}`.
    pub fn x_max(&self) -> f64 {
        ((self.p as f64 + 2.0) * self.nu / (2.0 * self.mu)).powf(1.0 / self.p as f64)
    }

    /// Energy `y²/2 − νx²/2 + μx^{p+2}/(p+2)`; zero on the homoclinic loop.
    pub fn energy(&self, v: Vec2) -> f64 {
        let p = self.p as i32;
        0.5 * v.y * v.y - 0.5 * self.nu * v.x * v.x
            + self.mu * v.x.powi(p + 2) / (p as f64 + 2.0)
    }

    /// Upper and lower branches `y±(x) = ±x √(ν − 2μ xᵖ/(p+2))` of the loop.
    pub fn loop_branches(&self, x: f64) -> (f64, f64) {
        let r = self.nu - 2.0 * self.mu * x.powi(self.p as i32) / (self.p as f64 + 2.0);
        let y = x * r.max(0.0).sqrt();
        (y, -y)
    }

    fn restoring(&self, x: f64) -> f64 {
        self.nu * x - self.mu * x.powi(self.p as i32 + 1)
    }

    fn restoring_d1(&self, x: f64) -> f64 {
        self.nu - self.mu * (self.p as f64 + 1.0) * x.powi(self.p as i32)
    }

    fn restoring_d2(&self, x: f64) -> f64 {
        -self.mu * (self.p as f64 + 1.0) * self.p as f64 * x.powi(self.p as i32 - 1)
    }
}

impl VectorField for PowerLaw {
    fn eval(&self, v: Vec2) -> Vec2 {
        Vec2::new(v.y, self.restoring(v.x))
    }

    fn jacobian(&self, v: Vec2) -> Mat2 {
        Mat2::new(0.0, 1.0, self.restoring_d1(v.x), 0.0)
    }

    fn hessians(&self, v: Vec2) -> [Mat2; 2] {
        [Mat2::ZERO, Mat2::new(self.restoring_d2(v.x), 0.0, 0.0, 0.0)]
    }

    fn name(&self) -> String {
        format!("powerlaw(nu={}, mu={}, p={})", self.nu, self.mu, self.p)
    }
}

/// Power-law field with `c·y·H(x, y)` added to the second component.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct LevelDamped {
    pub base: PowerLaw,
    pub c: f64,
}

impl VectorField for LevelDamped {
    fn eval(&self, v: Vec2) -> Vec2 {
        let h = self.base.energy(v);
        Vec2::new(v.y, self.base.restoring(v.x) + self.c * v.y * h)
    }

    fn jacobian(&self, v: Vec2) -> Mat2 {
        let h = self.base.energy(v);
        let hx = -self.base.restoring(v.x);
        Mat2::new(
            0.0,
            1.0,
            self.base.restoring_d1(v.x) + self.c * v.y * hx,
            self.c * (h + v.y * v.y),
        )
    }

    fn hessians(&self, v: Vec2) -> [Mat2; 2] {
        let hx = -self.base.restoring(v.x);
        let hxx = -self.base.restoring_d1(v.x);
        let c = self.c;
        [
            Mat2::ZERO,
            Mat2::new(
                self.base.restoring_d2(v.x) + c * v.y * hxx,
                c * hx,
                c * hx,
                3.0 * c * v.y,
            ),
        ]
    }

    fn name(&self) -> String {
        format!("{}+level-damping(c={})", self.base.name(), self.c)
    }
}

/// `f̃(u) = R f(Rᵀu)` for a rotation `R`.
#[derive(Clone)]
pub struct Rotated {
    pub inner: Arc<dyn VectorField>,
    pub angle: f64,
    r: Mat2,
}

impl Rotated {
    pub fn new(inner: Arc<dyn VectorField>, angle: f64) -> Self {
        Rotated {
            inner,
            angle,
            r: Mat2::rotation(angle),
        }
    }

    pub fn rotation(&self) -> Mat2 {
        self.r
    }
}

fn rotate_hessians(r: &Mat2, inner: [Mat2; 2]) -> [Mat2; 2] {
    let rt = r.transpose();
    let conj = [
        r.mul_mat(&inner[0]).mul_mat(&rt),
        r.mul_mat(&inner[1]).mul_mat(&rt),
    ];
    let mut out = [Mat2::ZERO; 2];
    for (k, o) in out.iter_mut().enumerate() {
        *o = conj[0].scale(r.m[k][0]).add(&conj[1].scale(r.m[k][1]));
    }
    out
}

impl VectorField for Rotated {
    fn eval(&self, u: Vec2) -> Vec2 {
        self.r.mul_vec(self.inner.eval(self.r.transpose().mul_vec(u)))
    }

    fn jacobian(&self, u: Vec2) -> Mat2 {
        let rt = self.r.transpose();
        self.r.mul_mat(&self.inner.jacobian(rt.mul_vec(u))).mul_mat(&rt)
    }

    fn hessians(&self, u: Vec2) -> [Mat2; 2] {
        rotate_hessians(&self.r, self.inner.hessians(self.r.transpose().mul_vec(u)))
    }

    fn name(&self) -> String {
        format!("rotated({}, angle={})", self.inner.name(), self.angle)
    }
}

#[derive(Clone, Copy, Debug, Default)]
pub struct NoForcing;

impl Perturbation for NoForcing {
    fn eval(&self, _x: Vec2, _t: f64) -> Vec2 {
        Vec2::ZERO
    }
    fn gradient(&self, _x: Vec2, _t: f64) -> Mat2 {
        Mat2::ZERO
    }
    fn name(&self) -> String {
        "none".into()
    }
}

/// Self-excited forcing `(0, y·(a + b cos ωt))`; `a = 2, b = 1, ω = 1` is
/// the even-in-time, increasing-in-`y` preset.
#[derive(Clone, Copy, Debug)]
pub struct SelfExcited {
    pub a: f64,
    pub b: f64,
    pub frequency: f64,
}

impl Default for SelfExcited {
    fn default() -> Self {
        SelfExcited {
            a: 2.0,
            b: 1.0,
            frequency: 1.0,
        }
    }
}

impl Perturbation for SelfExcited {
    fn eval(&self, x: Vec2, t: f64) -> Vec2 {
        Vec2::new(0.0, x.y * (self.a + self.b * (self.frequency * t).cos()))
    }
    fn gradient(&self, _x: Vec2, t: f64) -> Mat2 {
        Mat2::new(0.0, 0.0, 0.0, self.a + self.b * (self.frequency * t).cos())
    }
    fn name(&self) -> String {
        format!(
            "(0, y*({} + {}*cos({} t)))",
            self.a, self.b, self.frequency
        )
    }
}

/// Constant push `(0, c)`.
#[derive(Clone, Copy, Debug)]
pub struct ConstForcing {
    pub c: f64,
}

impl Perturbation for ConstForcing {
    fn eval(&self, _x: Vec2, _t: f64) -> Vec2 {
        Vec2::new(0.0, self.c)
    }
    fn gradient(&self, _x: Vec2, _t: f64) -> Mat2 {
        Mat2::ZERO
    }
    fn name(&self) -> String {
        format!("(0, {})", self.c)
    }
}

/// Harmonic forcing `(0, A cos(ωt))`.
#[derive(Clone, Copy, Debug)]
pub struct CosForcing {
    pub amplitude: f64,
    pub frequency: f64,
}

impl Perturbation for CosForcing {
    fn eval(&self, _x: Vec2, t: f64) -> Vec2 {
        Vec2::new(0.0, self.amplitude * (self.frequency * t).cos())
    }
    fn gradient(&self, _x: Vec2, _t: f64) -> Mat2 {
        Mat2::ZERO
    }
    fn name(&self) -> String {
        format!("(0, {}*cos({} t))", self.amplitude, self.frequency)
    }
}

/// `s · g`.
#[derive(Clone)]
pub struct Scaled {
    pub inner: Arc<dyn Perturbation>,
    pub factor: f64,
}

impl Perturbation for Scaled {
    fn eval(&self, x: Vec2, t: f64) -> Vec2 {
        self.inner.eval(x, t) * self.factor
    }
    fn gradient(&self, x: Vec2, t: f64) -> Mat2 {
        self.inner.gradient(x, t).scale(self.factor)
    }
    fn name(&self) -> String {
        format!("{}*{}", self.factor, self.inner.name())
    }
}

/// `g₁ + g₂`.
#[derive(Clone)]
pub struct Sum {
    pub first: Arc<dyn Perturbation>,
    pub second: Arc<dyn Perturbation>,
}

impl Perturbation for Sum {
    fn eval(&self, x: Vec2, t: f64) -> Vec2 {
        self.first.eval(x, t) + self.second.eval(x, t)
    }
    fn gradient(&self, x: Vec2, t: f64) -> Mat2 {
        self.first.gradient(x, t).add(&self.second.gradient(x, t))
    }
    fn name(&self) -> String {
        format!("{} + {}", self.first.name(), self.second.name())
    }
}

/// `g̃(u, t) = R g(Rᵀu, t)`.
#[derive(Clone)]
pub struct RotatedForcing {
    pub inner: Arc<dyn Perturbation>,
    r: Mat2,
}

impl RotatedForcing {
    pub fn new(inner: Arc<dyn Perturbation>, angle: f64) -> Self {
        RotatedForcing {
            inner,
            r: Mat2::rotation(angle),
        }
    }
}

impl Perturbation for RotatedForcing {
    fn eval(&self, u: Vec2, t: f64) -> Vec2 {
        self.r.mul_vec(self.inner.eval(self.r.transpose().mul_vec(u), t))
    }
    fn gradient(&self, u: Vec2, t: f64) -> Mat2 {
        let rt = self.r.transpose();
        self.r.mul_mat(&self.inner.gradient(rt.mul_vec(u), t)).mul_mat(&rt)
    }
    fn name(&self) -> String {
        format!("rotated({})", self.inner.name())
    }
}

/// Serializable description of a built-in field.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case", deny_unknown_fields)]
pub enum FieldPreset {
    Powerlaw { nu: f64, mu: f64, p: u32 },
    PowerlawLevelDamped { nu: f64, mu: f64, p: u32, c: f64 },
    PowerlawRotated { nu: f64, mu: f64, p: u32, angle: f64 },
}

impl Default for FieldPreset {
    fn default() -> Self {
        FieldPreset::Powerlaw {
            nu: 1.0,
            mu: 1.0,
            p: 2,
        }
    }
}

impl FieldPreset {
    pub fn powerlaw(&self) -> Result<PowerLaw> {
        match *self {
            FieldPreset::Powerlaw { nu, mu, p }
            | FieldPreset::PowerlawLevelDamped { nu, mu, p, .. }
            | FieldPreset::PowerlawRotated { nu, mu, p, .. } => PowerLaw::new(nu, mu, p),
        }
    }

    /// Rotation applied to the power-law coordinates (identity unless rotated).
    pub fn rotation(&self) -> Mat2 {
        match *self {
            FieldPreset::PowerlawRotated { angle, .. } => Mat2::rotation(angle),
            _ => Mat2::IDENTITY,
        }
    }

    pub fn field(&self) -> Result<(Arc<dyn VectorField>, bool)> {
        let base = self.powerlaw()?;
        Ok(match *self {
            FieldPreset::Powerlaw { .. } => (Arc::new(base), true),
            FieldPreset::PowerlawLevelDamped { c, .. } => {
                if !c.is_finite() {
                    return Err(Error::InvalidInput("damping c must be finite".into()));
                }
                (Arc::new(LevelDamped { base, c }), c == 0.0)
            }
            FieldPreset::PowerlawRotated { angle, .. } => {
                (Arc::new(Rotated::new(Arc::new(base), angle)), true)
            }
        })
    }

    pub fn system(&self, forcing: &ForcingPreset) -> Result<PlanarSystem> {
        let (field, hamiltonian) = self.field()?;
        let mut g = forcing.perturbation()?;
        if let FieldPreset::PowerlawRotated { angle, .. } = *self {
            g = Arc::new(RotatedForcing::new(g, angle));
        }
        Ok(PlanarSystem::new(field, g, hamiltonian))
    }
}

/// Serializable description of a built-in forcing (in power-law coordinates).
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case", deny_unknown_fields)]
pub enum ForcingPreset {
    /// `(0, y·(2 + cos t))`.
    A1,
    Const { c: f64 },
    Cos { amplitude: f64, frequency: f64 },
    None,
}

impl Default for ForcingPreset {
    fn default() -> Self {
        ForcingPreset::A1
    }
}

impl ForcingPreset {
    pub fn perturbation(&self) -> Result<Arc<dyn Perturbation>> {
        Ok(match *self {
            ForcingPreset::A1 => Arc::new(SelfExcited::default()),
            ForcingPreset::Const { c } => Arc::new(ConstForcing { c }),
            ForcingPreset::Cos {
                amplitude,
                frequency,
            } => Arc::new(CosForcing {
                amplitude,
                frequency,
            }),
            ForcingPreset::None => Arc::new(NoForcing),
        })
    }

    pub fn parse(name: &str) -> Result<Self> {
        match name {
            "a1" | "A1" => Ok(ForcingPreset::A1),
            "const" => Ok(ForcingPreset::Const { c: 1.0 }),
            "cos" => Ok(ForcingPreset::Cos {
                amplitude: 1.0,
                frequency: 1.0,
            }),
            "none" => Ok(ForcingPreset::None),
            other => Err(Error::InvalidInput(format!("unknown forcing preset '{other}'"))),
        }
    }
}

/// The reference power-law system with the given forcing.
pub fn powerlaw_system(nu: f64, mu: f64, p: u32, forcing: Arc<dyn Perturbation>) -> Result<PlanarSystem> {
    Ok(PlanarSystem::new(
        Arc::new(PowerLaw::new(nu, mu, p)?),
        forcing,
        true,
    ))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::planar::{finite_diff_jacobian, random_probes};

    fn fd_hessian(f: &dyn VectorField, x: Vec2) -> [Mat2; 2] {
        let h = 1e-5;
        let jx = f
            .jacobian(x + Vec2::new(h, 0.0))
            .add(&f.jacobian(x - Vec2::new(h, 0.0)).scale(-1.0))
            .scale(0.5 / h);
        let jy = f
            .jacobian(x + Vec2::new(0.0, h))
            .add(&f.jacobian(x - Vec2::new(0.0, h)).scale(-1.0))
            .scale(0.5 / h);
        [
            Mat2::new(jx.m[0][0], jy.m[0][0], jx.m[0][1], jy.m[0][1]),
            Mat2::new(jx.m[1][0], jy.m[1][0], jx.m[1][1], jy.m[1][1]),
        ]
    }

    fn check_derivatives(f: &dyn VectorField) {
        for p in random_probes(1.5, 50, 7) {
            let fd = finite_diff_jacobian(|q| f.eval(q), p, 1e-6).unwrap();
            let an = f.jacobian(p);
            assert!(
                fd.add(&an.scale(-1.0)).max_abs() < 1e-6 * (1.0 + an.max_abs()),
                "{}: jacobian at {p}",
                f.name()
            );
            let hf = fd_hessian(f, p);
            let ha = f.hessians(p);
            for k in 0..2 {
                assert!(
                    hf[k].add(&ha[k].scale(-1.0)).max_abs() < 1e-6 * (1.0 + ha[k].max_abs()),
                    "{}: hessian {k} at {p}: {} vs {}",
                    f.name(),
                    hf[k],
                    ha[k]
                );
                let sym = ha[k].m[0][1] - ha[k].m[1][0];
                assert!(sym.abs() < 1e-12);
            }
        }
    }

    #[test]
    fn derivatives_match_finite_differences() {
        let base = PowerLaw::new(1.3, 0.7, 3).unwrap();
        check_derivatives(&base);
        check_derivatives(&PowerLaw::new(1.0, 1.0, 2).unwrap());
        check_derivatives(&LevelDamped { base, c: 0.4 });
        check_derivatives(&Rotated::new(Arc::new(base), 0.6));
        check_derivatives(&Rotated::new(Arc::new(LevelDamped { base, c: -0.3 }), 1.1));
    }

    #[test]
    fn x_max_values() {
        let p2 = PowerLaw::new(1.0, 1.0, 2).unwrap();
        assert!((p2.x_max() - 2f64.sqrt()).abs() < 1e-15);
        let p4 = PowerLaw::new(1.0, 1.0, 4).unwrap();
        // x_max^p = (p + 2)ν/(2μ) = 3, where the loop branch closes.
        assert!((p4.x_max() - 3f64.powf(0.25)).abs() < 1e-14);
        assert!((p4.x_max() - 1.316074).abs() < 1e-6);
        assert!(p4.loop_branches(p4.x_max()).0.abs() < 1e-7);
        assert!(PowerLaw::new(0.0, 1.0, 2).is_err());
        assert!(PowerLaw::new(1.0, 1.0, 1).is_err());
    }

    #[test]
    fn hamiltonian_presets_are_divergence_free() {
        for preset in [
            FieldPreset::Powerlaw {
                nu: 2.0,
                mu: 0.5,
                p: 3,
            },
            FieldPreset::PowerlawRotated {
                nu: 1.0,
                mu: 1.0,
                p: 2,
                angle: 0.4,
            },
        ] {
            let sys = preset.system(&ForcingPreset::A1).unwrap();
            assert!(sys.is_hamiltonian());
            sys.validate(2.0, 100, 11).unwrap();
        }
        let damped = FieldPreset::PowerlawLevelDamped {
            nu: 1.0,
            mu: 1.0,
            p: 2,
            c: 0.3,
        }
        .system(&ForcingPreset::None)
        .unwrap();
        assert!(!damped.is_hamiltonian());
        damped.validate(2.0, 100, 11).unwrap();
    }

    #[test]
    fn level_damping_vanishes_on_loop() {
        let base = PowerLaw::new(1.0, 1.0, 2).unwrap();
        let damped = LevelDamped { base, c: 0.5 };
        for i in 1..20 {
            let x = base.x_max() * i as f64 / 20.0;
            let (yp, ym) = base.loop_branches(x);
            for y in [yp, ym] {
                let v = Vec2::new(x, y);
                assert!(base.energy(v).abs() < 1e-14);
                assert!((damped.eval(v) - base.eval(v)).norm() < 1e-14);
            }
        }
    }

    #[test]
    fn finite_difference_mode_tracks_analytic() {
        let sys = FieldPreset::PowerlawRotated {
            nu: 1.0,
            mu: 1.0,
            p: 2,
            angle: 0.3,
        }
        .system(&ForcingPreset::None)
        .unwrap();
        let fd = sys.with_derivative_mode(crate::planar::DerivativeMode::FiniteDifference);
        let x = Vec2::new(0.7, -0.2);
        assert!(fd.jacobian_f(x).add(&sys.jacobian_f(x).scale(-1.0)).max_abs() < 1e-8);
        let (ha, hf) = (sys.hessians_f(x), fd.hessians_f(x));
        for k in 0..2 {
            assert!(ha[k].add(&hf[k].scale(-1.0)).max_abs() < 1e-6);
        }
    }
}
