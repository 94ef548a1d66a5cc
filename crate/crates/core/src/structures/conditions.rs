//! Algebraic conditions on `s_i, φ_i, χ_i, ψ_i` and the polynomial
//! template used for the Lieb-Liniger non-existence scan.

use std::collections::BTreeMap;

use nalgebra::{DMatrix, DVector};

use crate::error::{Result, SolgasError};
use crate::geometry::StructureAnsatz;
use crate::kernels::KernelSpec;

/// `(pair residual, diagonal residual)` of
/// `ε^{ij}(χ_i+χ_j) − 2c = 2(s_i ε^{ij}_{,i} + s_j ε^{ij}_{,j} + Σ_{k≠i,j} ε^{ik}ε^{jk}φ_k)` and
/// `Σ_{k≠i} φ_k (ε^{ik})² + ψ_i = −c`, maximised over index pairs and samples.
pub fn residual_cc_conditions(
    kernel: &KernelSpec,
    ansatz: &StructureAnsatz,
    c: f64,
    eta_samples: &[Vec<f64>],
) -> Result<(f64, f64)> {
    let (mut pair, mut diag) = (0.0f64, 0.0f64);
    for eta in eta_samples {
        let n = eta.len();
        if n != ansatz.n {
            return Err(SolgasError::Config(format!(
                "eta sample has {n} entries, ansatz has n = {}",
                ansatz.n
            )));
        }
        crate::reduction::check_distinct(eta)?;
        let mut eps = vec![vec![0.0; n]; n];
        for i in 0..n {
            for j in 0..n {
                if i != j {
                    eps[i][j] = kernel.g(eta[i], eta[j])?;
                }
            }
        }
        for i in 0..n {
            for j in i + 1..n {
                let (d_i, d_j) = kernel.dg(eta[i], eta[j])?;
                let lhs = eps[i][j] * (ansatz.chi_i(i, eta[i]) + ansatz.chi_i(j, eta[j])) - 2.0 * c;
                let mut tail = 0.0;
                for k in 0..n {
                    if k != i && k != j {
                        tail += eps[i][k] * eps[j][k] * ansatz.phi_i(k, eta[k]);
                    }
                }
                let rhs = 2.0 * (ansatz.s_i(i, eta[i]) * d_i + ansatz.s_i(j, eta[j]) * d_j + tail);
                pair = pair.max(nan_is_inf((lhs - rhs).abs()));
            }
            let mut sum = 0.0;
            for k in 0..n {
                if k != i {
                    sum += ansatz.phi_i(k, eta[k]) * eps[i][k] * eps[i][k];
                }
            }
            diag = diag.max(nan_is_inf((sum + ansatz.psi_i(i, eta[i]) + c).abs()));
        }
    }
    Ok((pair, diag))
}

/// The `c = 0` case of [`residual_cc_conditions`].
pub fn residual_flat_conditions(
    kernel: &KernelSpec,
    ansatz: &StructureAnsatz,
    eta_samples: &[Vec<f64>],
) -> Result<(f64, f64)> {
    residual_cc_conditions(kernel, ansatz, 0.0, eta_samples)
}

fn nan_is_inf(x: f64) -> f64 {
    if x.is_nan() {
        f64::INFINITY
    } else {
        x
    }
}

/// Least-squares fit of the constant-curvature template `φ = 0`, `ψ = −c`,
/// `s` and `χ` shared polynomials in `η` of the given degree.
#[derive(Clone, Debug, serde::Serialize)]
pub struct TemplateFit {
    pub c: f64,
    pub degree: usize,
    pub s_coeffs: Vec<f64>,
    pub chi_coeffs: Vec<f64>,
    /// Worst absolute residual of the pair condition on the fitting grid.
    pub residual: f64,
}

impl TemplateFit {
    pub fn ansatz(&self, n: usize) -> Result<StructureAnsatz> {
        let poly = |coeffs: &[f64]| {
            coeffs
                .iter()
                .enumerate()
                .map(|(p, a)| format!("({a:?})*eta^{p}"))
                .collect::<Vec<_>>()
                .join(" + ")
        };
        let psi = format!("{:?}", -self.c);
        StructureAnsatz::uniform(
            n,
            &poly(&self.s_coeffs),
            "0",
            &poly(&self.chi_coeffs),
            &format!("({psi})"),
            &BTreeMap::new(),
        )
        .map(|a| a.with_family("cc_template"))
    }
}

/// Fits the template on all pairs of `grid` points at least `min_gap` apart.
pub fn fit_cc_template(
    kernel: &KernelSpec,
    c: f64,
    degree: usize,
    grid: &[f64],
    min_gap: f64,
) -> Result<TemplateFit> {
    let m = degree + 1;
    let mut rows = Vec::new();
    let mut rhs = Vec::new();
    for (a, &x) in grid.iter().enumerate() {
        for &y in &grid[a + 1..] {
            if (x - y).abs() < min_gap {
                continue;
            }
            let e = kernel.g(x, y)?;
            let (dx, dy) = kernel.dg(x, y)?;
            // ε(χ(x)+χ(y)) − 2(s(x)ε_x + s(y)ε_y) = 2c
            let mut row = vec![0.0; 2 * m];
            for p in 0..m {
                let (xp, yp) = (x.powi(p as i32), y.powi(p as i32));
                row[p] = -2.0 * (xp * dx + yp * dy);
                row[m + p] = e * (xp + yp);
            }
            rows.push(row);
            rhs.push(2.0 * c);
        }
    }
    if rows.len() < 2 * m {
        return Err(SolgasError::InsufficientSamples {
            required: 2 * m,
            got: rows.len(),
        });
    }
    let a = DMatrix::from_fn(rows.len(), 2 * m, |i, j| rows[i][j]);
    let b = DVector::from_vec(rhs);
    let svd = a.clone().svd(true, true);
    let sol = svd
        .solve(&b, 1e-12)
        .map_err(|e| SolgasError::Numerical(format!("template least squares failed: {e}")))?;
    let residual = (a * &sol - b).amax();
    Ok(TemplateFit {
        c,
        degree,
        s_coeffs: sol.iter().take(m).copied().collect(),
        chi_coeffs: sol.iter().skip(m).copied().collect(),
        residual,
    })
}
