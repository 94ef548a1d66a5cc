//! Snapshot CSV files and the simulation config file.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use super::{FieldState, Grid1D, InitialData, RunOptions, Variables, CFL};
use crate::error::{Result, SolgasError};
use crate::kernels::KernelSpec;
use crate::structures::KernelRef;

fn default_cfl() -> f64 {
    CFL
}

fn default_every() -> usize {
    10
}

fn default_mode() -> Variables {
    Variables::UEta
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GridConfig {
    pub m: usize,
    pub x_min: f64,
    pub x_max: f64,
    #[serde(default = "yes")]
    pub periodic: bool,
}

fn yes() -> bool {
    true
}

/// `{grid, cfl, t_max, kernel, initial}` plus run bookkeeping.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SimulationConfig {
    pub grid: GridConfig,
    #[serde(default = "default_cfl")]
    pub cfl: f64,
    pub t_max: f64,
    pub kernel: KernelRef,
    /// Defaults to [`InitialData::default_pulse`] with `n` components.
    #[serde(default)]
    pub initial: Option<InitialData>,
    #[serde(default)]
    pub n: Option<usize>,
    #[serde(default = "default_mode")]
    pub mode: Variables,
    #[serde(default = "default_every")]
    pub output_every: usize,
    /// Family whose density is integrated; defaults to the kernel's flat one.
    #[serde(default)]
    pub family: Option<String>,
}

impl SimulationConfig {
    pub fn grid(&self) -> Result<Grid1D> {
        Grid1D::new(
            self.grid.m,
            self.grid.x_min,
            self.grid.x_max,
            self.grid.periodic,
        )
    }

    pub fn options(&self) -> RunOptions {
        RunOptions {
            t_max: self.t_max,
            output_every: self.output_every,
            cfl: self.cfl,
        }
    }

    pub fn initial_data(&self, kernel: &KernelSpec) -> Result<InitialData> {
        match (&self.initial, self.n) {
            (Some(d), Some(n)) if d.n() != n => Err(SolgasError::Config(format!(
                "initial data has {} components but n = {n}",
                d.n()
            ))),
            (Some(d), _) => Ok(d.clone()),
            (None, n) => Ok(InitialData::default_pulse(
                kernel,
                n.unwrap_or(2),
                &self.grid()?,
            )),
        }
    }
}

/// Columns `x, u1..un, eta1..etan`.
pub fn snapshot_csv(state: &FieldState, kernel: &KernelSpec) -> Result<String> {
    let u = state.weights(kernel)?;
    let n = state.n();
    let mut w = csv::Writer::from_writer(Vec::new());
    let header: Vec<String> = std::iter::once("x".to_string())
        .chain((1..=n).map(|i| format!("u{i}")))
        .chain((1..=n).map(|i| format!("eta{i}")))
        .collect();
    let io = |e: csv::Error| SolgasError::Io(e.to_string());
    w.write_record(&header).map_err(io)?;
    for (j, x) in state.grid.centres().into_iter().enumerate() {
        let row = std::iter::once(x)
            .chain(u.iter().map(|r| r[j]))
            .chain(state.eta.iter().map(|r| r[j]))
            .map(|v| format!("{v:e}"));
        w.write_record(row).map_err(io)?;
    }
    let bytes = w.into_inner().map_err(|e| SolgasError::Io(e.to_string()))?;
    String::from_utf8(bytes).map_err(|e| SolgasError::Io(e.to_string()))
}

/// Writes `snapshot_00000.csv, …` into `dir`.
pub fn write_snapshots(
    dir: &Path,
    trajectory: &[FieldState],
    kernel: &KernelSpec,
) -> Result<Vec<PathBuf>> {
    std::fs::create_dir_all(dir).map_err(|e| SolgasError::Io(e.to_string()))?;
    trajectory
        .iter()
        .enumerate()
        .map(|(k, s)| {
            let path = dir.join(format!("snapshot_{k:05}.csv"));
            std::fs::write(&path, snapshot_csv(s, kernel)?)
                .map_err(|e| SolgasError::Io(format!("{}: {e}", path.display())))?;
            Ok(path)
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn csv_layout() {
        let k = KernelSpec::kdv();
        let g = Grid1D::new(3, 0.0, 3.0, true).unwrap();
        let s = FieldState::from_initial(
            &k,
            &g,
            Variables::REta,
            &InitialData::constant(&[0.1, 0.2], &[1.0, 2.0]),
        )
        .unwrap();
        let text = snapshot_csv(&s, &k).unwrap();
        let lines: Vec<&str> = text.lines().collect();
        assert_eq!(lines[0], "x,u1,u2,eta1,eta2");
        assert_eq!(lines.len(), 4);
        let u1: f64 = lines[1].split(',').nth(1).unwrap().parse().unwrap();
        assert!((u1 - 0.1).abs() < 1e-12);
    }

    #[test]
    fn config_parses_with_defaults() {
        let c: SimulationConfig = serde_json::from_str(
            r#"{"grid": {"m": 50, "x_min": -2, "x_max": 2}, "t_max": 0.1, "kernel": "kdv"}"#,
        )
        .unwrap();
        assert_eq!(c.cfl, CFL);
        assert!(c.grid.periodic);
        let k = KernelSpec::kdv();
        assert_eq!(c.initial_data(&k).unwrap().n(), 2);
        assert!(serde_json::from_str::<SimulationConfig>(
            r#"{"grid": {"m": 5, "x_min": 0, "x_max": 1}, "t_max": 1, "kernel": "kdv", "bogus": 1}"#
        )
        .is_err());
    }
}
