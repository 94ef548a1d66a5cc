//! First-order upwind evolution of the reduced system on a 1D grid.
//!
//! In `u_eta` variables the weights obey `u_t = (v u)_x` and are updated in
//! conservative form, so their totals telescope exactly on a periodic grid.
//! The spectral parameters obey `η_t = v η_x` and are updated in
//! nonconservative upwind form. The `r_eta` mode evolves `(r, η)` with the
//! Jordan-block matrix instead, which exercises the `p^i` coefficients.

mod characteristics;
mod initial;
mod output;
mod study;

pub use characteristics::{characteristics_check, CharacteristicsReport};
pub use initial::{InitialData, Profile};
pub use output::{snapshot_csv, write_snapshots, GridConfig, SimulationConfig};
pub use study::{
    hamiltonian_drift, mode_discrepancy, observed_orders, refinement_study, RefinementReport,
};

use serde::{Deserialize, Serialize};

use crate::error::{Result, SolgasError};
use crate::kernels::KernelSpec;
use crate::reduction::{r_from_u, ReducedPoint};
use crate::structures::DensityFn;

/// Stability bound of the explicit scheme.
pub const CFL: f64 = 0.45;
/// A cell-to-cell jump larger than `1/SHOCK_CELLS` of a component's initial
/// range marks a front resolved on too few cells to be smooth.
pub const SHOCK_CELLS: f64 = 5.0;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Grid1D {
    pub m: usize,
    pub x_min: f64,
    pub x_max: f64,
    pub dx: f64,
    pub periodic: bool,
}

impl Grid1D {
    pub fn new(m: usize, x_min: f64, x_max: f64, periodic: bool) -> Result<Self> {
        let dx = (x_max - x_min) / m as f64;
        if m < 3 || !(dx > 0.0) || !dx.is_finite() {
            return Err(SolgasError::Config(format!(
                "grid needs m >= 3 and x_max > x_min, got m = {m}, [{x_min}, {x_max}]"
            )));
        }
        Ok(Grid1D {
            m,
            x_min,
            x_max,
            dx,
            periodic,
        })
    }

    pub fn centres(&self) -> Vec<f64> {
        (0..self.m)
            .map(|j| self.x_min + (j as f64 + 0.5) * self.dx)
            .collect()
    }

    pub fn length(&self) -> f64 {
        self.x_max - self.x_min
    }

    fn left(&self, j: usize) -> usize {
        match j {
            0 if self.periodic => self.m - 1,
            0 => 0,
            _ => j - 1,
        }
    }

    fn right(&self, j: usize) -> usize {
        match j {
            _ if j + 1 < self.m => j + 1,
            _ if self.periodic => 0,
            _ => j,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Variables {
    UEta,
    REta,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FieldState {
    pub grid: Grid1D,
    pub mode: Variables,
    /// `u^i` or `r^i`, `n × M`.
    pub first: Vec<Vec<f64>>,
    /// `η^i`, `n × M`.
    pub eta: Vec<Vec<f64>>,
    pub t: f64,
}

/// Per-cell quantities of the reduction.
#[derive(Clone, Debug)]
pub struct CellData {
    pub u: Vec<Vec<f64>>,
    pub v: Vec<Vec<f64>>,
    pub p: Vec<Vec<f64>>,
    /// Smallest `|det ε̂| / (max row norm)ⁿ` over the cells.
    pub margin: f64,
}

impl CellData {
    pub fn max_speed(&self) -> f64 {
        self.v.iter().flatten().fold(0.0f64, |m, v| m.max(v.abs()))
    }
}

impl FieldState {
    /// Samples `init` and converts to `mode`. Every column must be admissible.
    pub fn from_initial(
        kernel: &KernelSpec,
        grid: &Grid1D,
        mode: Variables,
        init: &InitialData,
    ) -> Result<Self> {
        init.validate()?;
        let (u, eta) = init.sample(grid);
        let mut state = FieldState {
            grid: grid.clone(),
            mode: Variables::UEta,
            first: u,
            eta,
            t: 0.0,
        };
        state.evaluate(kernel)?;
        if mode == Variables::REta {
            state = state.to_r_eta(kernel)?;
        }
        Ok(state)
    }

    pub fn n(&self) -> usize {
        self.eta.len()
    }

    fn column(&self, rows: &[Vec<f64>], j: usize) -> Vec<f64> {
        rows.iter().map(|row| row[j]).collect()
    }

    fn breakdown(&self, cell: usize, e: SolgasError) -> SolgasError {
        match e {
            SolgasError::AdmissibilityBreakdown { .. } => e,
            other => SolgasError::AdmissibilityBreakdown {
                cell,
                time: self.t,
                reason: other.to_string(),
            },
        }
    }

    /// The reduced point in cell `j`.
    pub fn point(&self, kernel: &KernelSpec, j: usize) -> Result<ReducedPoint> {
        let first = self.column(&self.first, j);
        let eta = self.column(&self.eta, j);
        let r = match self.mode {
            Variables::REta => first,
            Variables::UEta => r_from_u(kernel, &first, &eta).map_err(|e| self.breakdown(j, e))?,
        };
        ReducedPoint::new(kernel, &r, &eta).map_err(|e| self.breakdown(j, e))
    }

    pub fn evaluate(&self, kernel: &KernelSpec) -> Result<CellData> {
        let (n, m) = (self.n(), self.grid.m);
        let mut cells = CellData {
            u: vec![vec![0.0; m]; n],
            v: vec![vec![0.0; m]; n],
            p: vec![vec![0.0; m]; n],
            margin: f64::INFINITY,
        };
        for j in 0..m {
            let pt = self.point(kernel, j)?;
            for i in 0..n {
                cells.u[i][j] = pt.u[i];
                cells.v[i][j] = pt.v[i];
                cells.p[i][j] = pt.p[i];
            }
            let norm = pt.eps_hat.max_row_norm().powi(n as i32);
            cells.margin = cells.margin.min(pt.det.abs() / norm);
        }
        Ok(cells)
    }

    /// `u^i` in every cell, whatever the mode.
    pub fn weights(&self, kernel: &KernelSpec) -> Result<Vec<Vec<f64>>> {
        match self.mode {
            Variables::UEta => Ok(self.first.clone()),
            Variables::REta => Ok(self.evaluate(kernel)?.u),
        }
    }

    pub fn to_r_eta(&self, kernel: &KernelSpec) -> Result<Self> {
        if self.mode == Variables::REta {
            return Ok(self.clone());
        }
        let mut r = vec![vec![0.0; self.grid.m]; self.n()];
        for j in 0..self.grid.m {
            let col = r_from_u(
                kernel,
                &self.column(&self.first, j),
                &self.column(&self.eta, j),
            )
            .map_err(|e| self.breakdown(j, e))?;
            for i in 0..self.n() {
                r[i][j] = col[i];
            }
        }
        Ok(FieldState {
            mode: Variables::REta,
            first: r,
            ..self.clone()
        })
    }

    pub fn to_u_eta(&self, kernel: &KernelSpec) -> Result<Self> {
        Ok(FieldState {
            mode: Variables::UEta,
            first: self.weights(kernel)?,
            ..self.clone()
        })
    }

    /// `∫ u^i dx` for each `i`.
    fn masses(&self, u: &[Vec<f64>]) -> Vec<f64> {
        u.iter()
            .map(|row| row.iter().sum::<f64>() * self.grid.dx)
            .collect()
    }

    /// Whether some component jumps by more than its shock threshold between
    /// neighbouring cells.
    fn steepened(&self, thresholds: &[f64]) -> bool {
        let m = self.grid.m;
        let pairs = if self.grid.periodic { m } else { m - 1 };
        self.eta
            .iter()
            .zip(thresholds)
            .any(|(row, &thr)| (0..pairs).any(|j| (row[(j + 1) % m] - row[j]).abs() > thr))
    }

    /// Per-component jump thresholds derived from this state.
    pub fn shock_thresholds(&self) -> Vec<f64> {
        self.eta
            .iter()
            .map(|row| {
                let (lo, hi) = row
                    .iter()
                    .fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), &x| {
                        (a.min(x), b.max(x))
                    });
                if hi > lo {
                    (hi - lo) / SHOCK_CELLS
                } else {
                    f64::INFINITY
                }
            })
            .collect()
    }
}

/// One-sided difference against the flow: backward when the transport speed
/// `−v` is non-negative.
fn upwind_diff(grid: &Grid1D, f: &[f64], j: usize, v: f64) -> f64 {
    if v <= 0.0 {
        (f[j] - f[grid.left(j)]) / grid.dx
    } else {
        (f[grid.right(j)] - f[j]) / grid.dx
    }
}

fn check_cfl(grid: &Grid1D, cells: &CellData, dt: f64, cfl: f64) -> Result<()> {
    let speed = cells.max_speed();
    let limit = if speed > 0.0 {
        cfl * grid.dx / speed
    } else {
        f64::INFINITY
    };
    if !(dt >= 0.0) || dt > limit * (1.0 + 1e-12) {
        return Err(SolgasError::CflViolation { dt, limit });
    }
    Ok(())
}

fn advance(state: &FieldState, cells: &CellData, dt: f64) -> FieldState {
    let grid = &state.grid;
    let (n, m) = (state.n(), grid.m);
    let mut next = state.clone();
    next.t = state.t + dt;
    for i in 0..n {
        let (v, eta) = (&cells.v[i], &state.eta[i]);
        for j in 0..m {
            next.eta[i][j] = eta[j] + dt * v[j] * upwind_diff(grid, eta, j, v[j]);
        }
        match state.mode {
            Variables::UEta => {
                let u = &state.first[i];
                // Interface flux of u_t + (a u)_x = 0 with a = −v, taken from
                // the upwind cell.
                let flux = |j: usize| {
                    let k = grid.right(j);
                    if v[j] + v[k] <= 0.0 {
                        -v[j] * u[j]
                    } else {
                        -v[k] * u[k]
                    }
                };
                let fluxes: Vec<f64> = (0..m).map(flux).collect();
                for j in 0..m {
                    let left = if j == 0 && !grid.periodic {
                        -v[0] * u[0]
                    } else {
                        fluxes[grid.left(j)]
                    };
                    next.first[i][j] = u[j] - dt / grid.dx * (fluxes[j] - left);
                }
            }
            Variables::REta => {
                let (r, p) = (&state.first[i], &cells.p[i]);
                for j in 0..m {
                    next.first[i][j] = r[j]
                        + dt * (v[j] * upwind_diff(grid, r, j, v[j])
                            + p[j] * upwind_diff(grid, eta, j, v[j]));
                }
            }
        }
    }
    next
}

/// One explicit step. Fails if `dt` exceeds the CFL bound or if any cell
/// leaves the admissible set.
pub fn step(state: &FieldState, kernel: &KernelSpec, dt: f64) -> Result<FieldState> {
    let cells = state.evaluate(kernel)?;
    check_cfl(&state.grid, &cells, dt, CFL)?;
    let next = advance(state, &cells, dt);
    next.evaluate(kernel)?;
    Ok(next)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RunOptions {
    pub t_max: f64,
    /// Snapshot every this many steps; the final state is always kept.
    pub output_every: usize,
    pub cfl: f64,
}

impl Default for RunOptions {
    fn default() -> Self {
        RunOptions {
            t_max: 0.2,
            output_every: 1,
            cfl: CFL,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct HamiltonianDrift {
    pub initial: f64,
    pub last: f64,
    /// `|∫h dx (t_end) − ∫h dx (0)|`.
    pub drift: f64,
    /// End of the tracked window: the final time or the last pre-shock step.
    pub t_end: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ConservationReport {
    pub mode: Variables,
    pub n: usize,
    pub m: usize,
    pub dx: f64,
    pub cfl: f64,
    pub steps: usize,
    pub t_final: f64,
    pub mass_initial: Vec<f64>,
    pub mass_final: Vec<f64>,
    /// `max_t |∫u^i dx (t) − ∫u^i dx (0)|`.
    pub mass_drift: Vec<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub hamiltonian: Option<HamiltonianDrift>,
    pub min_admissibility_margin: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub shock_time: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub aborted: Option<String>,
    pub notes: Vec<String>,
}

#[derive(Clone, Debug)]
pub struct RunOutcome {
    pub trajectory: Vec<FieldState>,
    pub report: ConservationReport,
    /// Set when the run aborted; `trajectory` then ends at the last good state.
    pub error: Option<SolgasError>,
}

/// `∫ Σ u^i h_i(η^i) dx`.
pub fn hamiltonian_integral(
    state: &FieldState,
    u: &[Vec<f64>],
    densities: &[DensityFn],
) -> Result<f64> {
    if densities.len() != state.n() {
        return Err(SolgasError::Config(format!(
            "{} densities for n = {}",
            densities.len(),
            state.n()
        )));
    }
    let mut total = 0.0;
    for (i, h) in densities.iter().enumerate() {
        for j in 0..state.grid.m {
            total += u[i][j] * h.eval(state.eta[i][j])?;
        }
    }
    Ok(total * state.grid.dx)
}

/// Evolves `initial` to `t_max` with the largest stable step.
pub fn run(
    initial: &FieldState,
    kernel: &KernelSpec,
    opts: &RunOptions,
    density: Option<&[DensityFn]>,
) -> Result<RunOutcome> {
    if !(opts.cfl > 0.0 && opts.cfl <= CFL) {
        return Err(SolgasError::Config(format!(
            "cfl must lie in (0, {CFL}], got {}",
            opts.cfl
        )));
    }
    if !(opts.t_max >= 0.0) || opts.output_every == 0 {
        return Err(SolgasError::Config(
            "t_max must be non-negative and output_every positive".into(),
        ));
    }
    let mut cells = initial.evaluate(kernel)?;
    let mass0 = initial.masses(&cells.u);
    let thresholds = initial.shock_thresholds();
    let mut notes = Vec::new();
    let mut h_track = match density {
        Some(h) => match hamiltonian_integral(initial, &cells.u, h) {
            Ok(h0) => Some(HamiltonianDrift {
                initial: h0,
                last: h0,
                drift: 0.0,
                t_end: 0.0,
            }),
            Err(e) => {
                notes.push(format!("hamiltonian not tracked: {e}"));
                None
            }
        },
        None => None,
    };
    let mut report = ConservationReport {
        mode: initial.mode,
        n: initial.n(),
        m: initial.grid.m,
        dx: initial.grid.dx,
        cfl: opts.cfl,
        steps: 0,
        t_final: initial.t,
        mass_initial: mass0.clone(),
        mass_final: mass0.clone(),
        mass_drift: vec![0.0; initial.n()],
        hamiltonian: None,
        min_admissibility_margin: cells.margin,
        shock_time: None,
        aborted: None,
        notes: Vec::new(),
    };
    let mut trajectory = vec![initial.clone()];
    let mut state = initial.clone();
    let t_end = initial.t + opts.t_max;
    let mut error = None;
    let mut tracking = true;

    while state.t < t_end {
        let speed = cells.max_speed();
        let stable = if speed > 0.0 {
            opts.cfl * state.grid.dx / speed
        } else {
            f64::INFINITY
        };
        let remaining = t_end - state.t;
        let last = stable >= remaining;
        let dt = if last { remaining } else { stable };
        let mut next = advance(&state, &cells, dt);
        if last {
            next.t = t_end;
        }
        let next_cells = match next.evaluate(kernel) {
            Ok(c) => c,
            Err(e) => {
                report.aborted = Some(e.to_string());
                error = Some(e);
                break;
            }
        };
        state = next;
        cells = next_cells;
        report.steps += 1;
        report.min_admissibility_margin = report.min_admissibility_margin.min(cells.margin);
        let masses = state.masses(&cells.u);
        for (d, (m, m0)) in report.mass_drift.iter_mut().zip(masses.iter().zip(&mass0)) {
            *d = d.max((m - m0).abs());
        }
        report.mass_final = masses;
        report.t_final = state.t;
        if tracking && state.steepened(&thresholds) {
            tracking = false;
            report.shock_time = Some(state.t);
            notes.push(format!(
                "front steepened below {SHOCK_CELLS} cells at t = {:.6}; diagnostics frozen",
                state.t
            ));
        }
        if tracking {
            if let (Some(track), Some(h)) = (h_track.as_mut(), density) {
                match hamiltonian_integral(&state, &cells.u, h) {
                    Ok(v) => {
                        track.last = v;
                        track.drift = (v - track.initial).abs();
                        track.t_end = state.t;
                    }
                    Err(e) => {
                        notes.push(format!("hamiltonian tracking stopped: {e}"));
                        tracking = false;
                    }
                }
            }
        }
        if report.steps.is_multiple_of(opts.output_every) || state.t >= t_end {
            trajectory.push(state.clone());
        }
    }
    if error.is_some() && trajectory.last() != Some(&state) {
        trajectory.push(state);
    }
    report.hamiltonian = h_track;
    report.notes = notes;
    Ok(RunOutcome {
        trajectory,
        report,
        error,
    })
}
