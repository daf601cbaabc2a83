//! The rank-one projection onto the Melnikov direction.

use crate::planar::Vec2;

use super::green::FrameWorkspace;

/// `pF(t) = (Δ(t)/‖γ'‖₂²) γ'(t)^⊥ · M`, with `M = ∫ (1/Δ) γ' ∧ F`.
///
/// `p` maps onto the span of `Δ γ'^⊥` and `(I − p)F` has zero residual.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Projection {
    pub melnikov: f64,
    pub coefficient: f64,
}

impl Projection {
    pub fn new(ws: &FrameWorkspace, forcing: &dyn Fn(f64) -> Vec2) -> Self {
        let melnikov = ws.melnikov(forcing);
        Projection {
            melnikov,
            coefficient: melnikov / ws.gamma_l2_sq,
        }
    }

    pub fn eval(&self, ws: &FrameWorkspace, t: f64) -> Vec2 {
        let f = ws.frame;
        f.gamma_prime(t).perp() * (self.coefficient * f.delta(t))
    }
}

/// `(I − p)F` as a closure.
pub fn complement<'a>(ws: &'a FrameWorkspace<'_>, forcing: &'a (dyn Fn(f64) -> Vec2 + 'a)) -> impl Fn(f64) -> Vec2 + 'a {
    let p = Projection::new(ws, forcing);
    move |t| forcing(t) - p.eval(ws, t)
}
