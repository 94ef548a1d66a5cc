//! Grid-refinement studies.

use serde::Serialize;

use super::{run, FieldState, Grid1D, InitialData, RunOptions, Variables};
use crate::error::{Result, SolgasError};
use crate::kernels::KernelSpec;
use crate::structures::DensityFn;

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct RefinementReport {
    pub m: Vec<usize>,
    pub dx: Vec<f64>,
    pub values: Vec<f64>,
    /// `log(e_k / e_{k+1}) / log(dx_k / dx_{k+1})` for consecutive grids.
    pub orders: Vec<f64>,
    pub min_order: f64,
}

pub fn observed_orders(dx: &[f64], values: &[f64]) -> Vec<f64> {
    dx.windows(2)
        .zip(values.windows(2))
        .map(|(h, e)| (e[0] / e[1]).ln() / (h[0] / h[1]).ln())
        .collect()
}

/// Measures a scalar error on each grid and fits the pairwise orders.
pub fn refinement_study(
    ms: &[usize],
    x_min: f64,
    x_max: f64,
    periodic: bool,
    measure: impl Fn(&Grid1D) -> Result<f64>,
) -> Result<RefinementReport> {
    if ms.len() < 2 {
        return Err(SolgasError::InsufficientSamples {
            required: 2,
            got: ms.len(),
        });
    }
    let grids = ms
        .iter()
        .map(|&m| Grid1D::new(m, x_min, x_max, periodic))
        .collect::<Result<Vec<_>>>()?;
    let values = grids.iter().map(&measure).collect::<Result<Vec<_>>>()?;
    let dx: Vec<f64> = grids.iter().map(|g| g.dx).collect();
    let orders = observed_orders(&dx, &values);
    let min_order =
        orders.iter().copied().fold(
            f64::INFINITY,
            |a, b| {
                if b.is_nan() {
                    f64::NAN
                } else {
                    a.min(b)
                }
            },
        );
    Ok(RefinementReport {
        m: ms.to_vec(),
        dx,
        values,
        orders,
        min_order,
    })
}

/// `|∫h dx (t_max) − ∫h dx (0)|` of a `u_eta` run. Fails if a shock cuts
/// the window short.
pub fn hamiltonian_drift(
    kernel: &KernelSpec,
    grid: &Grid1D,
    init: &InitialData,
    opts: &RunOptions,
    density: &[DensityFn],
) -> Result<f64> {
    let s0 = FieldState::from_initial(kernel, grid, Variables::UEta, init)?;
    let thin = RunOptions {
        output_every: usize::MAX,
        ..opts.clone()
    };
    let out = run(&s0, kernel, &thin, Some(density))?;
    if let Some(e) = out.error {
        return Err(e);
    }
    if let Some(t) = out.report.shock_time {
        return Err(SolgasError::ShockDetected { time: t });
    }
    out.report
        .hamiltonian
        .map(|h| h.drift)
        .ok_or_else(|| SolgasError::Numerical(out.report.notes.join("; ")))
}

/// Largest difference between the `u_eta` and `r_eta` evolutions of the
/// same data at `t_max`, compared in `(u, η)`.
pub fn mode_discrepancy(
    kernel: &KernelSpec,
    grid: &Grid1D,
    init: &InitialData,
    opts: &RunOptions,
) -> Result<f64> {
    let thin = RunOptions {
        output_every: usize::MAX,
        ..opts.clone()
    };
    let mut finals = Vec::new();
    for mode in [Variables::UEta, Variables::REta] {
        let s0 = FieldState::from_initial(kernel, grid, mode, init)?;
        let out = run(&s0, kernel, &thin, None)?;
        if let Some(e) = out.error {
            return Err(e);
        }
        let last = out
            .trajectory
            .last()
            .expect("trajectory holds the initial state");
        finals.push(last.to_u_eta(kernel)?);
    }
    let (a, b) = (&finals[0], &finals[1]);
    let diff = |x: &[Vec<f64>], y: &[Vec<f64>]| {
        x.iter()
            .flatten()
            .zip(y.iter().flatten())
            .fold(0.0f64, |m, (p, q)| m.max((p - q).abs()))
    };
    Ok(diff(&a.first, &b.first).max(diff(&a.eta, &b.eta)))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn orders_of_a_first_order_sequence() {
        let o = observed_orders(&[0.1, 0.05, 0.025], &[0.3, 0.15, 0.075]);
        assert!(o.iter().all(|x| (x - 1.0).abs() < 1e-12));
    }

    #[test]
    fn study_on_a_synthetic_measure() {
        let r = refinement_study(&[10, 20, 40], 0.0, 1.0, true, |g| Ok(g.dx * g.dx)).unwrap();
        assert!((r.min_order - 2.0).abs() < 1e-12);
        assert!(refinement_study(&[10], 0.0, 1.0, true, |g| Ok(g.dx)).is_err());
    }
}
