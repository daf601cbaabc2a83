//! Piecewise Hermite interpolation of planar curves.

use crate::error::{Error, Result};
use crate::planar::Vec2;

fn check_grid(t: &[f64], lens: &[usize]) -> Result<()> {
    if t.len() < 2 {
        return Err(Error::InvalidInput("interpolation needs at least two nodes".into()));
    }
    if lens.iter().any(|&l| l != t.len()) {
        return Err(Error::InvalidInput("interpolation arrays differ in length".into()));
    }
    if t.windows(2).any(|w| !(w[1] > w[0])) {
        return Err(Error::InvalidInput("interpolation nodes must be strictly increasing".into()));
    }
    Ok(())
}

fn locate(t: &[f64], x: f64) -> usize {
    let i = t.partition_point(|&v| v <= x);
    i.saturating_sub(1).min(t.len() - 2)
}

/// C¹ cubic Hermite interpolant through values and first derivatives.
#[derive(Clone, Debug)]
pub struct CubicHermite {
    t: Vec<f64>,
    v: Vec<Vec2>,
    d: Vec<Vec2>,
}

impl CubicHermite {
    pub fn new(t: Vec<f64>, v: Vec<Vec2>, d: Vec<Vec2>) -> Result<Self> {
        check_grid(&t, &[v.len(), d.len()])?;
        Ok(CubicHermite { t, v, d })
    }

    pub fn nodes(&self) -> &[f64] {
        &self.t
    }

    pub fn values(&self) -> &[Vec2] {
        &self.v
    }

    pub fn derivatives(&self) -> &[Vec2] {
        &self.d
    }

    pub fn range(&self) -> (f64, f64) {
        (self.t[0], self.t[self.t.len() - 1])
    }

    /// Value and derivative at `x` (extrapolates with the end cubic outside the range).
    pub fn eval_with_derivative(&self, x: f64) -> (Vec2, Vec2) {
        let i = locate(&self.t, x);
        let h = self.t[i + 1] - self.t[i];
        let s = (x - self.t[i]) / h;
        let s2 = s * s;
        let s3 = s2 * s;
        let h00 = 2.0 * s3 - 3.0 * s2 + 1.0;
        let h10 = s3 - 2.0 * s2 + s;
        let h01 = -2.0 * s3 + 3.0 * s2;
        let h11 = s3 - s2;
        let (p0, p1, m0, m1) = (self.v[i], self.v[i + 1], self.d[i] * h, self.d[i + 1] * h);
        let val = p0 * h00 + m0 * h10 + p1 * h01 + m1 * h11;
        let d00 = 6.0 * s2 - 6.0 * s;
        let d10 = 3.0 * s2 - 4.0 * s + 1.0;
        let d01 = -6.0 * s2 + 6.0 * s;
        let d11 = 3.0 * s2 - 2.0 * s;
        let der = (p0 * d00 + m0 * d10 + p1 * d01 + m1 * d11) * (1.0 / h);
        (val, der)
    }

    pub fn eval(&self, x: f64) -> Vec2 {
        self.eval_with_derivative(x).0
    }
}

/// C² quintic Hermite interpolant through values, first and second derivatives.
#[derive(Clone, Debug)]
pub struct QuinticHermite {
    t: Vec<f64>,
    v: Vec<Vec2>,
    d1: Vec<Vec2>,
    d2: Vec<Vec2>,
}

impl QuinticHermite {
    pub fn new(t: Vec<f64>, v: Vec<Vec2>, d1: Vec<Vec2>, d2: Vec<Vec2>) -> Result<Self> {
        check_grid(&t, &[v.len(), d1.len(), d2.len()])?;
        Ok(QuinticHermite { t, v, d1, d2 })
    }

    pub fn nodes(&self) -> &[f64] {
        &self.t
    }

    pub fn values(&self) -> &[Vec2] {
        &self.v
    }

    pub fn range(&self) -> (f64, f64) {
        (self.t[0], self.t[self.t.len() - 1])
    }

    pub fn eval_with_derivative(&self, x: f64) -> (Vec2, Vec2) {
        let i = locate(&self.t, x);
        let h = self.t[i + 1] - self.t[i];
        let s = (x - self.t[i]) / h;
        let s2 = s * s;
        let s3 = s2 * s;
        let s4 = s3 * s;
        let s5 = s4 * s;
        let b = [
            1.0 - 10.0 * s3 + 15.0 * s4 - 6.0 * s5,
            s - 6.0 * s3 + 8.0 * s4 - 3.0 * s5,
            0.5 * (s2 - 3.0 * s3 + 3.0 * s4 - s5),
            10.0 * s3 - 15.0 * s4 + 6.0 * s5,
            -4.0 * s3 + 7.0 * s4 - 3.0 * s5,
            0.5 * (s3 - 2.0 * s4 + s5),
        ];
        let db = [
            -30.0 * s2 + 60.0 * s3 - 30.0 * s4,
            1.0 - 18.0 * s2 + 32.0 * s3 - 15.0 * s4,
            0.5 * (2.0 * s - 9.0 * s2 + 12.0 * s3 - 5.0 * s4),
            30.0 * s2 - 60.0 * s3 + 30.0 * s4,
            -12.0 * s2 + 28.0 * s3 - 15.0 * s4,
            0.5 * (3.0 * s2 - 8.0 * s3 + 5.0 * s4),
        ];
        let c = [
            self.v[i],
            self.d1[i] * h,
            self.d2[i] * (h * h),
            self.v[i + 1],
            self.d1[i + 1] * h,
            self.d2[i + 1] * (h * h),
        ];
        let mut val = Vec2::ZERO;
        let mut der = Vec2::ZERO;
        for k in 0..6 {
            val += c[k] * b[k];
            der += c[k] * db[k];
        }
        (val, der * (1.0 / h))
    }

    pub fn eval(&self, x: f64) -> Vec2 {
        self.eval_with_derivative(x).0
    }
}
