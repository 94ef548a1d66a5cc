use serde::Serialize;

use super::{fd_step, tolerance_scale, MetricField, Provenance, TensorField11};
use crate::dual::{seed, Dual, Scalar};
use crate::error::{Result, SolgasError};
use crate::linalg::Mat;

/// `Γ^a_{bc}` stored densely.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Gamma<T = f64> {
    pub dim: usize,
    data: Vec<T>,
}

impl<T: Scalar> Gamma<T> {
    pub fn zeros(dim: usize) -> Self {
        Gamma {
            dim,
            data: vec![T::zero(); dim * dim * dim],
        }
    }

    #[inline]
    pub fn get(&self, a: usize, b: usize, c: usize) -> T {
        self.data[(a * self.dim + b) * self.dim + c]
    }

    #[inline]
    fn set(&mut self, a: usize, b: usize, c: usize, v: T) {
        self.data[(a * self.dim + b) * self.dim + c] = v;
    }

    pub fn max_abs(&self) -> f64 {
        crate::linalg::max_abs(&self.data)
    }

    fn map<U: Scalar>(&self, f: impl Fn(T) -> U) -> Gamma<U> {
        Gamma {
            dim: self.dim,
            data: self.data.iter().map(|&v| f(v)).collect(),
        }
    }
}

/// `R^a_{bcd}` stored densely.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Riemann {
    pub dim: usize,
    data: Vec<f64>,
}

impl Riemann {
    pub fn zeros(dim: usize) -> Self {
        Riemann {
            dim,
            data: vec![0.0; dim.pow(4)],
        }
    }

    #[inline]
    pub fn get(&self, a: usize, b: usize, c: usize, d: usize) -> f64 {
        self.data[((a * self.dim + b) * self.dim + c) * self.dim + d]
    }

    #[inline]
    fn set(&mut self, a: usize, b: usize, c: usize, d: usize, v: f64) {
        let n = self.dim;
        self.data[((a * n + b) * n + c) * n + d] = v;
    }

    pub fn max_abs(&self) -> f64 {
        self.data.iter().fold(0.0, |m, v| m.max(v.abs()))
    }

    pub fn max_diff(&self, other: &Riemann) -> f64 {
        self.data
            .iter()
            .zip(&other.data)
            .fold(0.0, |m, (a, b)| m.max((a - b).abs()))
    }

    /// Worst violation of `R^a_{bcd} = −R^a_{bdc}`.
    pub fn antisymmetry_residual(&self) -> f64 {
        let n = self.dim;
        let mut worst = 0.0f64;
        for a in 0..n {
            for b in 0..n {
                for c in 0..n {
                    for d in 0..n {
                        worst = worst.max((self.get(a, b, c, d) + self.get(a, b, d, c)).abs());
                    }
                }
            }
        }
        worst
    }

    /// Worst violation of the first Bianchi identity.
    pub fn bianchi_residual(&self) -> f64 {
        let n = self.dim;
        let mut worst = 0.0f64;
        for a in 0..n {
            for b in 0..n {
                for c in 0..n {
                    for d in 0..n {
                        let s = self.get(a, b, c, d) + self.get(a, c, d, b) + self.get(a, d, b, c);
                        worst = worst.max(s.abs());
                    }
                }
            }
        }
        worst
    }

    /// `R^{ab}_{cd} = g^{bs} R^a_{scd}`.
    pub fn raise_second(&self, g_upper: &Mat<f64>) -> Riemann {
        let n = self.dim;
        let mut out = Riemann::zeros(n);
        for a in 0..n {
            for b in 0..n {
                for c in 0..n {
                    for d in 0..n {
                        let v = (0..n).map(|s| g_upper[(b, s)] * self.get(a, s, c, d)).sum();
                        out.set(a, b, c, d, v);
                    }
                }
            }
        }
        out
    }

    /// `R_{abcd} = g_{as} R^s_{bcd}`.
    pub fn lower_first(&self, g_lower: &Mat<f64>) -> Riemann {
        self.contract_first(g_lower)
    }

    /// `R^a_{bcd} = g^{as} R_{sbcd}`.
    pub fn raise_first(&self, g_upper: &Mat<f64>) -> Riemann {
        self.contract_first(g_upper)
    }

    fn contract_first(&self, g: &Mat<f64>) -> Riemann {
        let n = self.dim;
        let mut out = Riemann::zeros(n);
        for a in 0..n {
            for b in 0..n {
                for c in 0..n {
                    for d in 0..n {
                        let v = (0..n).map(|s| g[(a, s)] * self.get(s, b, c, d)).sum();
                        out.set(a, b, c, d, v);
                    }
                }
            }
        }
        out
    }
}

/// Metric, connection and curvature at one point.
#[derive(Clone, Debug, Serialize)]
pub struct TensorBundle {
    pub point: Vec<f64>,
    pub g_upper: Mat<f64>,
    pub g_lower: Mat<f64>,
    pub gamma: Gamma<f64>,
    pub riemann: Riemann,
    pub provenance: Provenance,
    pub scale: f64,
}

/// Derivatives `∂_c M(x)` of a matrix-valued function by one dual pass per
/// coordinate, together with the value.
fn matrix_derivatives<T: Scalar>(
    f: impl Fn(&[Dual<T>]) -> Result<Mat<Dual<T>>>,
    x: &[T],
) -> Result<(Mat<T>, Vec<Mat<T>>)> {
    let mut value = None;
    let mut derivs = Vec::with_capacity(x.len());
    for c in 0..x.len() {
        let m = f(&seed(x, c))?;
        if value.is_none() {
            value = Some(m.map(|v| v.re));
        }
        derivs.push(m.map(|v| v.eps));
    }
    let value = match value {
        Some(v) => v,
        None => f(&[])?.map(|v| v.re),
    };
    Ok((value, derivs))
}

fn assemble_gamma<T: Scalar>(g_upper: &Mat<T>, dg: &[Mat<T>]) -> Gamma<T> {
    let n = g_upper.rows();
    let mut gamma = Gamma::zeros(n);
    for a in 0..n {
        for b in 0..n {
            for c in b..n {
                let mut s = T::zero();
                for d in 0..n {
                    s += g_upper[(a, d)] * (dg[b][(d, c)] + dg[c][(d, b)] - dg[d][(b, c)]);
                }
                let v = s * 0.5;
                gamma.set(a, b, c, v);
                gamma.set(a, c, b, v);
            }
        }
    }
    gamma
}

/// Lower metric, upper metric and Christoffel symbols at `x` (any scalar
/// type), with metric derivatives taken by dual numbers.
pub fn christoffel<T: Scalar, M: MetricField>(
    metric: &M,
    x: &[T],
) -> Result<(Mat<T>, Mat<T>, Gamma<T>)> {
    let (g_lower, dg) = matrix_derivatives(|y| metric.lower(y), x)?;
    let g_upper = metric.upper(x)?;
    let gamma = assemble_gamma(&g_upper, &dg);
    Ok((g_lower, g_upper, gamma))
}

/// Christoffel symbols with metric derivatives from central differences.
pub fn christoffel_fd<M: MetricField>(metric: &M, x: &[f64]) -> Result<Gamma<f64>> {
    let mut dg = Vec::with_capacity(x.len());
    for c in 0..x.len() {
        let h = fd_step(x[c]);
        let mut xp = x.to_vec();
        let mut xm = x.to_vec();
        xp[c] += h;
        xm[c] -= h;
        dg.push(metric.lower(&xp)?.sub(&metric.lower(&xm)?).scale(0.5 / h));
    }
    Ok(assemble_gamma(&metric.upper(x)?, &dg))
}

/// Dual-number Christoffel symbols cross-checked against finite differences.
pub fn christoffel_checked<M: MetricField>(metric: &M, x: &[f64]) -> Result<Gamma<f64>> {
    let (_, _, gamma) = christoffel(metric, x)?;
    let fd = christoffel_fd(metric, x)?;
    let n = gamma.dim;
    for a in 0..n {
        for b in 0..n {
            for c in 0..n {
                let (g, f) = (gamma.get(a, b, c), fd.get(a, b, c));
                if (g - f).abs() > 1e-6f64.max(1e-5 * g.abs()) {
                    return Err(SolgasError::Numerical(format!(
                        "Gamma[{a}][{b}][{c}]: dual {g:e} vs finite difference {f:e}"
                    )));
                }
            }
        }
    }
    Ok(gamma)
}

fn assemble_riemann(gamma: &Gamma<f64>, dgamma: &[Gamma<f64>]) -> Riemann {
    let n = gamma.dim;
    let mut r = Riemann::zeros(n);
    for a in 0..n {
        for b in 0..n {
            for c in 0..n {
                for d in c + 1..n {
                    let mut v = dgamma[c].get(a, b, d) - dgamma[d].get(a, b, c);
                    for s in 0..n {
                        v += gamma.get(a, c, s) * gamma.get(s, b, d)
                            - gamma.get(a, d, s) * gamma.get(s, b, c);
                    }
                    r.set(a, b, c, d, v);
                    r.set(a, b, d, c, -v);
                }
            }
        }
    }
    r
}

fn finish_bundle(
    x: &[f64],
    g_lower: Mat<f64>,
    g_upper: Mat<f64>,
    gamma: Gamma<f64>,
    riemann: Riemann,
    provenance: Provenance,
) -> Result<TensorBundle> {
    let scale = tolerance_scale(&g_lower, &gamma);
    let bianchi = riemann.bianchi_residual();
    if !(bianchi <= 1e-5 * scale) {
        return Err(SolgasError::Numerical(format!(
            "first Bianchi identity violated by {bianchi:e} (scale {scale:e})"
        )));
    }
    Ok(TensorBundle {
        point: x.to_vec(),
        g_upper,
        g_lower,
        gamma,
        riemann,
        provenance,
        scale,
    })
}

/// Full tensor bundle with second derivatives by nested dual numbers.
pub fn riemann<M: MetricField>(metric: &M, x: &[f64]) -> Result<TensorBundle> {
    let n = x.len();
    let mut dgamma = Vec::with_capacity(n);
    let mut base = None;
    for c in 0..n {
        let (gl, gu, gamma) = christoffel(metric, &seed(x, c))?;
        if base.is_none() {
            base = Some((gl.real(), gu.real(), gamma.map(|v| v.re)));
        }
        dgamma.push(gamma.map(|v| v.eps));
    }
    let (g_lower, g_upper, gamma) =
        base.ok_or_else(|| SolgasError::Numerical("zero-dimensional metric".into()))?;
    let riemann = assemble_riemann(&gamma, &dgamma);
    finish_bundle(x, g_lower, g_upper, gamma, riemann, Provenance::DualNumber)
}

/// Tensor bundle with `∂Γ` from central differences of dual-number `Γ`.
pub fn riemann_fd<M: MetricField>(metric: &M, x: &[f64]) -> Result<TensorBundle> {
    let (g_lower, g_upper, gamma) = christoffel(metric, x)?;
    let mut dgamma = Vec::with_capacity(x.len());
    for c in 0..x.len() {
        let h = fd_step(x[c]);
        let mut xp = x.to_vec();
        let mut xm = x.to_vec();
        xp[c] += h;
        xm[c] -= h;
        let (_, _, gp) = christoffel(metric, &xp)?;
        let (_, _, gm) = christoffel(metric, &xm)?;
        let mut d = Gamma::zeros(gamma.dim);
        for (k, v) in d.data.iter_mut().enumerate() {
            *v = (gp.data[k] - gm.data[k]) / (2.0 * h);
        }
        dgamma.push(d);
    }
    let riemann = assemble_riemann(&gamma, &dgamma);
    finish_bundle(
        x,
        g_lower,
        g_upper,
        gamma,
        riemann,
        Provenance::FiniteDifference,
    )
}

/// Value and coordinate derivatives of a (1,1) field by dual numbers.
pub fn field_derivatives<F: TensorField11>(
    field: &F,
    x: &[f64],
) -> Result<(Mat<f64>, Vec<Mat<f64>>)> {
    matrix_derivatives(|y| field.eval(y), x)
}

/// Value and coordinate derivatives of a (1,1) field by central differences.
pub fn field_derivatives_fd<F: TensorField11>(
    field: &F,
    x: &[f64],
) -> Result<(Mat<f64>, Vec<Mat<f64>>)> {
    let value = field.eval(x)?;
    let mut derivs = Vec::with_capacity(x.len());
    for c in 0..x.len() {
        let h = fd_step(x[c]);
        let mut xp = x.to_vec();
        let mut xm = x.to_vec();
        xp[c] += h;
        xm[c] -= h;
        derivs.push(field.eval(&xp)?.sub(&field.eval(&xm)?).scale(0.5 / h));
    }
    Ok((value, derivs))
}
