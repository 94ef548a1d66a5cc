//! Candidate metrics, their Levi-Civita connection and curvature, and the
//! checkers for the Hamiltonian conditions.
//!
//! Coordinates are always interleaved as `(r¹, η¹, …, rⁿ, ηⁿ)`. Metric and
//! (1,1)-tensor fields are evaluated generically over [`Scalar`], so first
//! derivatives come from one dual pass per coordinate and second derivatives
//! from dual-over-dual passes.

mod ansatz;
mod checks;
mod sampling;
mod tensors;

use serde::{Deserialize, Serialize};

use crate::dual::Scalar;
use crate::error::Result;
use crate::linalg::Mat;

pub use ansatz::{
    metric_lower, metric_upper, AnsatzMetric, AnsatzSource, ConstantMetric, ScaledIdentity,
    SphereMetric, StructureAnsatz, SystemField,
};
pub use checks::{
    check_conformal, check_constant_curvature, check_ferapontov_n1, check_flat, check_provenance,
    check_symmetry_commutes, check_tsarev, ClassificationReport, Verdict, DEFAULT_TOL, MIN_SAMPLES,
};
pub use sampling::{sample_points, SampleBox, U_MIN};
pub use tensors::{
    christoffel, christoffel_checked, christoffel_fd, field_derivatives, field_derivatives_fd,
    riemann, riemann_fd, Gamma, Riemann, TensorBundle,
};

/// How derivatives entering a tensor were obtained.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Provenance {
    DualNumber,
    FiniteDifference,
}

/// A pseudo-Riemannian metric on an open set of `R^dim`.
pub trait MetricField {
    fn dim(&self) -> usize;

    /// `g_{ab}`.
    fn lower<T: Scalar>(&self, x: &[T]) -> Result<Mat<T>>;

    /// `g^{ab}`.
    fn upper<T: Scalar>(&self, x: &[T]) -> Result<Mat<T>> {
        let g = self.lower(x)?;
        g.inverse().ok_or_else(|| {
            crate::error::SolgasError::DegenerateMetric("lower metric is singular".into())
        })
    }
}

/// A field of (1,1) tensors `V^a_b(x)`.
pub trait TensorField11 {
    fn dim(&self) -> usize;
    fn eval<T: Scalar>(&self, x: &[T]) -> Result<Mat<T>>;
}

/// Coordinate width entering the tolerance scale.
pub const SCALE_WIDTH: f64 = 1.0;

/// `max(1, max|g_{ab}|, max|Γ|²·width)`.
pub fn tolerance_scale(g_lower: &Mat<f64>, gamma: &Gamma<f64>) -> f64 {
    1f64.max(g_lower.max_abs())
        .max(gamma.max_abs().powi(2) * SCALE_WIDTH)
}

/// Finite-difference step for coordinate value `x`.
pub fn fd_step(x: f64) -> f64 {
    1e-5 * x.abs().max(1.0)
}
