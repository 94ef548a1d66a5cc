//! Multiplicative separability of a kernel and the single-argument
//! dichotomy that constant curvature forces on separable kernels.

use serde::Serialize;

use crate::dual::{try_hessian, Scalar};
use crate::error::{Result, SolgasError};
use crate::kernels::KernelSpec;

pub const SEPARABLE_TOL: f64 = 1e-8;

#[derive(Clone, Debug, Serialize, PartialEq)]
pub struct SeparabilityReport {
    pub kernel: String,
    pub grid_points: usize,
    /// `max |∂²log|ε| / ∂μ∂η|` over the grid.
    pub mixed_log_residual: f64,
    pub separable: bool,
    pub max_d_mu: f64,
    pub max_d_eta: f64,
    pub single_argument: bool,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub c: Option<f64>,
    /// `max 2|c| |ε_μ ε_η| / |ε|³`, the mixed derivative of `2c/ε` on a
    /// separable kernel.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub obstruction: Option<f64>,
    /// Same quantity from a brute-force finite-difference stencil of `2c/ε`.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub obstruction_fd: Option<f64>,
    /// For separable kernels: the obstruction vanishes exactly when the
    /// kernel depends on one argument only.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub dichotomy_confirmed: Option<bool>,
}

/// Probes `ε` on all pairs of `grid` at least `min_gap` apart. With
/// `c = Some(..)` the constant-curvature obstruction is evaluated too.
pub fn separability_probe(
    kernel: &KernelSpec,
    grid: &[f64],
    min_gap: f64,
    c: Option<f64>,
) -> Result<SeparabilityReport> {
    let mut pairs = Vec::new();
    for &x in grid {
        for &y in grid {
            if (x - y).abs() >= min_gap {
                pairs.push((x, y));
            }
        }
    }
    if pairs.is_empty() {
        return Err(SolgasError::InsufficientSamples {
            required: 1,
            got: 0,
        });
    }
    let mut sign = 0.0f64;
    let (mut mixed, mut dmu, mut deta, mut obs, mut obs_fd) =
        (0.0f64, 0.0f64, 0.0f64, 0.0f64, 0.0f64);
    let mut fd_gap = 0.0f64;
    for &(x, y) in &pairs {
        let e = kernel.g(x, y)?;
        if e == 0.0 || (sign != 0.0 && e.signum() != sign) {
            return Err(SolgasError::Domain(format!(
                "{}: kernel changes sign or vanishes on the grid at ({x}, {y})",
                kernel.name
            )));
        }
        sign = e.signum();
        let (_, _, h) = try_hessian(
            |p| Ok::<_, SolgasError>(kernel.g(p[0], p[1])?.abs().ln()),
            &[x, y],
        )?;
        mixed = mixed.max(h[0][1].abs());
        let (a, b) = kernel.dg(x, y)?;
        dmu = dmu.max(a.abs());
        deta = deta.max(b.abs());
        if let Some(c) = c {
            let o = 2.0 * c.abs() * (a * b).abs() / e.abs().powi(3);
            obs = obs.max(o);
            let f = |m: f64, n: f64| kernel.g(m, n).map(|v| 2.0 * c / v);
            let hh = 1e-4 * x.abs().max(y.abs()).max(1.0);
            let stencil = (f(x + hh, y + hh)? - f(x + hh, y - hh)? - f(x - hh, y + hh)?
                + f(x - hh, y - hh)?)
                / (4.0 * hh * hh);
            obs_fd = obs_fd.max(stencil.abs());
            fd_gap = fd_gap.max((stencil.abs() - o).abs() / o.max(1.0));
        }
    }
    let separable = mixed <= SEPARABLE_TOL;
    let single_argument = dmu <= SEPARABLE_TOL || deta <= SEPARABLE_TOL;
    let dichotomy = c.filter(|c| *c != 0.0 && separable).map(|_| {
        let vanishes = obs <= SEPARABLE_TOL;
        vanishes == single_argument && fd_gap <= 1e-4
    });
    Ok(SeparabilityReport {
        kernel: kernel.name.clone(),
        grid_points: pairs.len(),
        mixed_log_residual: mixed,
        separable,
        max_d_mu: dmu,
        max_d_eta: deta,
        single_argument,
        c,
        obstruction: c.map(|_| obs),
        obstruction_fd: c.map(|_| obs_fd),
        dichotomy_confirmed: dichotomy,
    })
}

/// Evenly spaced grid over the kernel's sampling box.
pub fn default_grid(kernel: &KernelSpec, points: usize) -> Vec<f64> {
    let (lo, hi) = kernel.eta_box;
    (0..points)
        .map(|i| lo + (hi - lo) * i as f64 / (points - 1) as f64)
        .collect()
}
