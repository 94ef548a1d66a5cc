//! Transport of `η^i` along `dx/dt = −v^i` through a sampled trajectory.

use serde::Serialize;

use super::{FieldState, Grid1D};
use crate::error::{Result, SolgasError};
use crate::geometry::Verdict;
use crate::kernels::KernelSpec;

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct CharacteristicsReport {
    pub components: usize,
    pub curves: usize,
    pub snapshots_used: usize,
    pub window_end: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub shock_time: Option<f64>,
    pub dx: f64,
    pub dt_max: f64,
    /// `max |η_x|` over the window.
    pub gradient_bound: f64,
    /// `max |η^i(x(t), t) − η^i(x(0), 0)|`.
    pub max_deviation: f64,
    /// `5 (dx + dt) ‖∇η‖`.
    pub tolerance: f64,
    pub verdict: Verdict,
}

/// Linear interpolation between cell centres.
fn interp(grid: &Grid1D, f: &[f64], x: f64) -> f64 {
    let s = (x - grid.x_min) / grid.dx - 0.5;
    let k = s.floor();
    let frac = s - k;
    let m = grid.m as isize;
    let idx = |i: isize| {
        if grid.periodic {
            i.rem_euclid(m) as usize
        } else {
            i.clamp(0, m - 1) as usize
        }
    };
    let k = k as isize;
    (1.0 - frac) * f[idx(k)] + frac * f[idx(k + 1)]
}

fn wrap(grid: &Grid1D, x: f64) -> f64 {
    if grid.periodic {
        grid.x_min + (x - grid.x_min).rem_euclid(grid.length())
    } else {
        x
    }
}

/// Follows every component's characteristics from every cell centre with
/// Heun's method, using the snapshots as time levels. Snapshots from the
/// first steepened one onward are dropped.
pub fn characteristics_check(
    trajectory: &[FieldState],
    kernel: &KernelSpec,
) -> Result<CharacteristicsReport> {
    let first = trajectory.first().ok_or(SolgasError::InsufficientSamples {
        required: 2,
        got: 0,
    })?;
    let grid = &first.grid;
    let thresholds = first.shock_thresholds();
    let cut = trajectory
        .iter()
        .position(|s| s.steepened(&thresholds))
        .unwrap_or(trajectory.len());
    if cut < 2 {
        return Err(SolgasError::ShockDetected {
            time: trajectory.get(cut).map_or(first.t, |s| s.t),
        });
    }
    let window = &trajectory[..cut];
    let speeds = window
        .iter()
        .map(|s| s.evaluate(kernel).map(|c| c.v))
        .collect::<Result<Vec<_>>>()?;

    let mut gradient = 0.0f64;
    for s in window {
        for row in &s.eta {
            for j in 0..grid.m - 1 {
                gradient = gradient.max((row[j + 1] - row[j]).abs() / grid.dx);
            }
        }
    }
    let dt_max = window
        .windows(2)
        .fold(0.0f64, |m, w| m.max(w[1].t - w[0].t));

    let n = first.n();
    let mut worst = 0.0f64;
    let mut curves = 0;
    for i in 0..n {
        for (j, &x0) in grid.centres().iter().enumerate() {
            let eta0 = first.eta[i][j];
            let mut x = x0;
            curves += 1;
            for k in 0..window.len() - 1 {
                let dt = window[k + 1].t - window[k].t;
                let s1 = -interp(grid, &speeds[k][i], x);
                let s2 = -interp(grid, &speeds[k + 1][i], wrap(grid, x + dt * s1));
                x = wrap(grid, x + 0.5 * dt * (s1 + s2));
                if !grid.periodic && (x < grid.x_min || x > grid.x_max) {
                    break;
                }
                let dev = (interp(grid, &window[k + 1].eta[i], x) - eta0).abs();
                worst = worst.max(dev);
            }
        }
    }
    let tolerance = 5.0 * (grid.dx + dt_max) * gradient;
    Ok(CharacteristicsReport {
        components: n,
        curves,
        snapshots_used: window.len(),
        window_end: window[window.len() - 1].t,
        shock_time: trajectory.get(cut).map(|s| s.t),
        dx: grid.dx,
        dt_max,
        gradient_bound: gradient,
        max_deviation: worst,
        tolerance,
        verdict: Verdict::from_bool(worst <= tolerance),
    })
}
