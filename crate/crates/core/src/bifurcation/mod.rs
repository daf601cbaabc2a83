//! Green operator, projection, Lyapunov–Schmidt reduction, bifurcation scans
//! and direct boundary-value verification of bounded solutions.

pub mod bvp;
pub mod green;
pub mod projection;
pub mod reduction;
pub mod scan;

pub use bvp::{direct_verify, orbit_distance, BvpOptions, BvpSolution};
pub use green::{green_solve, FrameWorkspace, GreenMode, GreenOptions, GreenSolution, X2Choice};
pub use projection::Projection;
pub use reduction::{bifurcation_b, remainder, solve_eta, LsOptions, LsState};
pub use scan::{
    scan_roots, BifurcationFunction, BifurcationScan, Classification, EpsilonScan, LsBifurcation, Root, Sample, ScanVariable, Slice,
    SyntheticQuadratic,
};

use crate::conditions::{melnikov_pairing, ConditionOptions};
use crate::error::Result;
use crate::planar::Vec2;
use crate::quadrature::QuadResult;
use crate::variational::VariationalFrame;

/// `∫ (1/Δ) f(γ) ∧ F` by adaptive quadrature with an error estimate.
///
/// The solvers use the cheaper fixed-grid rule of [`FrameWorkspace::melnikov`].
pub fn melnikov_residual<F: Fn(f64) -> Vec2>(frame: &VariationalFrame, forcing: F, opts: &ConditionOptions) -> Result<QuadResult> {
    melnikov_pairing(frame, forcing, opts)
}
