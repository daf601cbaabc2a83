//! Root scans of a bifurcation function along one-parameter slices.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

use super::green::FrameWorkspace;
use super::reduction::{bifurcation_b, LsOptions};

/// `B(ξ, α, β, ε)`.
pub trait BifurcationFunction: Sync {
    fn eval(&self, xi: f64, alpha: f64, beta: f64, epsilon: f64) -> Result<f64>;
}

/// The reduced function computed by the range-equation iteration.
pub struct LsBifurcation<'a> {
    pub ws: &'a FrameWorkspace<'a>,
    pub opts: LsOptions,
}

impl BifurcationFunction for LsBifurcation<'_> {
    fn eval(&self, xi: f64, alpha: f64, beta: f64, epsilon: f64) -> Result<f64> {
        bifurcation_b(self.ws, xi, alpha, beta, epsilon, &self.opts)
    }
}

/// `B = ξ² − ε`, a saddle-node normal form used to exercise the scanner.
pub struct SyntheticQuadratic;

impl BifurcationFunction for SyntheticQuadratic {
    fn eval(&self, xi: f64, _alpha: f64, _beta: f64, epsilon: f64) -> Result<f64> {
        Ok(xi * xi - epsilon)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ScanVariable {
    Xi,
    Alpha,
    Beta,
}

impl std::str::FromStr for ScanVariable {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "xi" => Ok(ScanVariable::Xi),
            "alpha" => Ok(ScanVariable::Alpha),
            "beta" => Ok(ScanVariable::Beta),
            other => Err(Error::InvalidInput(format!("unknown slice variable '{other}'"))),
        }
    }
}

/// One varying coordinate on `[lo, hi]`; the others are held at the given values.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Slice {
    pub variable: ScanVariable,
    pub lo: f64,
    pub hi: f64,
    pub samples: usize,
    #[serde(default)]
    pub xi: f64,
    #[serde(default = "one")]
    pub alpha: f64,
    #[serde(default)]
    pub beta: f64,
}

fn one() -> f64 {
    1.0
}

impl Slice {
    fn point(&self, s: f64) -> (f64, f64, f64) {
        match self.variable {
            ScanVariable::Xi => (s, self.alpha, self.beta),
            ScanVariable::Alpha => (self.xi, s, self.beta),
            ScanVariable::Beta => (self.xi, self.alpha, s),
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.samples < 2 || !(self.lo < self.hi) || !self.lo.is_finite() || !self.hi.is_finite() {
            return Err(Error::InvalidInput(format!(
                "slice needs lo < hi and at least two samples (got [{}, {}], {})",
                self.lo, self.hi, self.samples
            )));
        }
        Ok(())
    }
}

/// A root: isolated (`lo == hi` up to the bisection width) or a run of
/// samples where `|B|` stayed below the zero tolerance.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct Root {
    pub lo: f64,
    pub hi: f64,
    pub value: f64,
}

impl Root {
    pub fn contains(&self, s: f64, tol: f64) -> bool {
        s >= self.lo - tol && s <= self.hi + tol
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct EpsilonScan {
    pub epsilon: f64,
    pub roots: Vec<Root>,
    pub identically_zero: bool,
    /// Samples where the function could not be evaluated.
    pub failed_samples: usize,
    pub samples: Vec<Sample>,
}

/// `B` at one slice coordinate; `value` is `None` when evaluation failed.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Sample {
    pub s: f64,
    pub value: Option<f64>,
    pub error: Option<String>,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Classification {
    /// Two roots for one sign of ε and none for the other.
    SignDependentPair,
    PersistentPair,
    PersistentSingle,
    NoRoots,
    Irregular,
}

#[derive(Clone, Debug, Serialize)]
pub struct BifurcationScan {
    pub slice: Slice,
    pub scans: Vec<EpsilonScan>,
    pub positive_count: Option<usize>,
    pub negative_count: Option<usize>,
    pub classification: Classification,
}

pub const ZERO_TOL: f64 = 1e-10;
pub const BISECTION_TOL: f64 = 1e-10;

fn eval_all(func: &dyn BifurcationFunction, slice: &Slice, eps: f64, s: &[f64]) -> Vec<Sample> {
    let one = |&v: &f64| {
        let (xi, alpha, beta) = slice.point(v);
        let (value, error) = match func.eval(xi, alpha, beta, eps) {
            Ok(b) if b.is_finite() => (Some(b), None),
            Ok(b) => (None, Some(format!("non-finite value {b}"))),
            Err(e) => (None, Some(e.to_string())),
        };
        Sample { s: v, value, error }
    };
    #[cfg(feature = "parallel")]
    {
        use rayon::prelude::*;
        s.par_iter().map(one).collect()
    }
    #[cfg(not(feature = "parallel"))]
    {
        s.iter().map(one).collect()
    }
}

fn scan_one(func: &dyn BifurcationFunction, slice: &Slice, eps: f64) -> EpsilonScan {
    let n = slice.samples;
    let s: Vec<f64> = (0..n)
        .map(|i| slice.lo + (slice.hi - slice.lo) * i as f64 / (n - 1) as f64)
        .collect();
    let samples = eval_all(func, slice, eps, &s);
    let b: Vec<Option<f64>> = samples.iter().map(|x| x.value).collect();
    let failed_samples = b.iter().filter(|v| v.is_none()).count();
    let is_zero = |v: Option<f64>| matches!(v, Some(x) if x.abs() <= ZERO_TOL);
    let mut roots = Vec::new();
    let mut i = 0;
    while i < n {
        if is_zero(b[i]) {
            let start = i;
            while i + 1 < n && is_zero(b[i + 1]) {
                i += 1;
            }
            roots.push(Root {
                lo: s[start],
                hi: s[i],
                value: if start == i { s[i] } else { 0.5 * (s[start] + s[i]) },
            });
        } else if i + 1 < n && !is_zero(b[i + 1]) {
            if let (Some(bl), Some(br)) = (b[i], b[i + 1]) {
                if bl.signum() != br.signum() {
                    if let Some(r) = bisect(func, slice, eps, s[i], s[i + 1], bl) {
                        roots.push(r);
                    }
                }
            }
        }
        i += 1;
    }
    EpsilonScan {
        epsilon: eps,
        identically_zero: failed_samples == 0 && b.iter().all(|v| is_zero(*v)),
        roots,
        failed_samples,
        samples,
    }
}

fn bisect(func: &dyn BifurcationFunction, slice: &Slice, eps: f64, mut lo: f64, mut hi: f64, mut blo: f64) -> Option<Root> {
    while hi - lo > BISECTION_TOL {
        let mid = 0.5 * (lo + hi);
        let (xi, alpha, beta) = slice.point(mid);
        let bm = func.eval(xi, alpha, beta, eps).ok()?;
        if bm.abs() <= ZERO_TOL * 1e-2 {
            return Some(Root { lo: mid, hi: mid, value: mid });
        }
        if bm.signum() == blo.signum() {
            lo = mid;
            blo = bm;
        } else {
            hi = mid;
        }
    }
    let v = 0.5 * (lo + hi);
    Some(Root { lo: v, hi: v, value: v })
}

fn classify(pos: Option<usize>, neg: Option<usize>) -> Classification {
    match (pos, neg) {
        (Some(2), Some(0)) | (Some(0), Some(2)) => Classification::SignDependentPair,
        (Some(2), Some(2)) => Classification::PersistentPair,
        (Some(1), Some(1)) => Classification::PersistentSingle,
        (Some(0), Some(0)) => Classification::NoRoots,
        _ => Classification::Irregular,
    }
}

/// Scan `B` along the slice for each ε, refining sign changes by bisection.
///
/// Per-sign counts are reported only when every ε of that sign gave the same
/// number of roots and no ε = 0 entry is involved.
pub fn scan_roots(func: &dyn BifurcationFunction, slice: &Slice, epsilons: &[f64]) -> Result<BifurcationScan> {
    slice.validate()?;
    let scans: Vec<EpsilonScan> = epsilons.iter().map(|&e| scan_one(func, slice, e)).collect();
    let count = |pred: &dyn Fn(f64) -> bool| {
        let counts: Vec<usize> = scans
            .iter()
            .filter(|s| pred(s.epsilon))
            .map(|s| if s.identically_zero { usize::MAX } else { s.roots.len() })
            .collect();
        match counts.first() {
            Some(&c) if c != usize::MAX && counts.iter().all(|&x| x == c) => Some(c),
            _ => None,
        }
    };
    let positive_count = count(&|e| e > 0.0);
    let negative_count = count(&|e| e < 0.0);
    Ok(BifurcationScan {
        slice: *slice,
        classification: classify(positive_count, negative_count),
        scans,
        positive_count,
        negative_count,
    })
}
