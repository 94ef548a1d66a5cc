//! Affinors `w` of commuting hydrodynamic symmetries in Jordan-block form.

use std::collections::BTreeMap;

use crate::dual::Scalar;
use crate::error::{Result, SolgasError};
use crate::expr::Expr;
use crate::geometry::TensorField11;
use crate::kernels::KernelSpec;
use crate::linalg::Mat;
use crate::reduction::{jordan_blocks, ReducedPoint};

pub const CONSTRAINT_TOL: f64 = 1e-8;
const CLOSED_FORM_SINGULAR: f64 = 1e-12;

/// Generating functions: `φ^i(η¹, …, ηⁿ)` and `μ^i(η^i)`, subject to
/// `∂_i φ^j = ε^{ij} μ^i` for `i ≠ j`.
#[derive(Clone, Debug, PartialEq)]
pub struct AffinorGenerators {
    pub n: usize,
    /// In the variables `eta1, …, etan`.
    pub phi: Vec<Expr>,
    /// In the variable `eta`.
    pub mu: Vec<Expr>,
    /// `dphi[j][i] = ∂φ^j/∂η^i`.
    dphi: Vec<Vec<Expr>>,
}

impl AffinorGenerators {
    pub fn new(
        n: usize,
        phi: &[String],
        mu: &[String],
        constants: &BTreeMap<String, f64>,
    ) -> Result<Self> {
        if phi.len() != n || mu.len() != n {
            return Err(SolgasError::Config(format!(
                "affinor needs {n} phi and {n} mu entries, got {} and {}",
                phi.len(),
                mu.len()
            )));
        }
        let names: Vec<String> = (1..=n).map(|i| format!("eta{i}")).collect();
        let vars: Vec<&str> = names.iter().map(String::as_str).collect();
        let phi = phi
            .iter()
            .map(|s| Expr::parse(s, &vars, constants))
            .collect::<Result<Vec<_>>>()?;
        let mu = mu
            .iter()
            .map(|s| Expr::in_eta(s, constants))
            .collect::<Result<Vec<_>>>()?;
        let dphi = phi
            .iter()
            .map(|p| (0..n).map(|i| p.derivative(i)).collect())
            .collect();
        Ok(AffinorGenerators { n, phi, mu, dphi })
    }

    /// `φ^i = c`, `μ^i = 0`.
    pub fn constant(n: usize, c: f64) -> Result<Self> {
        let one = vec![format!("({c:?})"); n];
        Self::new(n, &one, &vec!["0".into(); n], &BTreeMap::new())
    }

    /// Largest violation of `∂_i φ^j = ε^{ij} μ^i` at `eta`, relative to
    /// `max(1, |ε^{ij} μ^i|)`.
    pub fn constraint_residual(&self, kernel: &KernelSpec, eta: &[f64]) -> Result<f64> {
        let mut worst = 0.0f64;
        for i in 0..self.n {
            for j in 0..self.n {
                if i == j {
                    continue;
                }
                let lhs: f64 = self.dphi[j][i].eval(eta);
                let rhs = kernel.g(eta[i], eta[j])? * self.mu[i].eval(&[eta[i]]);
                worst = worst.max((lhs - rhs).abs() / rhs.abs().max(1.0));
            }
        }
        Ok(if worst.is_nan() { f64::INFINITY } else { worst })
    }
}

/// Diagonal `w^i` and nilpotent `q^i` parts of each block.
#[derive(Clone, Debug, PartialEq)]
pub struct Affinor<T = f64> {
    pub n: usize,
    pub w: Vec<T>,
    pub q: Vec<T>,
}

impl<T: Scalar> Affinor<T> {
    /// Blocks `[[w^i, q^i], [0, w^i]]` in `(r¹, η¹, …)` order.
    pub fn matrix(&self) -> Mat<T> {
        jordan_blocks(&self.w, &self.q)
    }
}

/// `w^i = (1/u^i) Σ_k β_{ki} φ^k` and
/// `q^i = (1/u^i)(Σ_{k≠i} ε^{ki}_{,η^i}(w^k − w^i) u^k − μ^i r^i + ∂_i φ^i)`.
pub fn build_affinor<T: Scalar>(
    kernel: &KernelSpec,
    gens: &AffinorGenerators,
    point: &ReducedPoint<T>,
) -> Result<Affinor<T>> {
    let n = point.n;
    if gens.n != n {
        return Err(SolgasError::Config(format!(
            "generators for n = {} at a point with n = {n}",
            gens.n
        )));
    }
    let eta_re: Vec<f64> = point.eta.iter().map(|e| e.re()).collect();
    let residual = gens.constraint_residual(kernel, &eta_re)?;
    if residual > CONSTRAINT_TOL {
        return Err(SolgasError::Constraint(format!(
            "d_i phi^j = eps^ij mu^i violated by {residual:e} at eta = {eta_re:?}"
        )));
    }
    let phi: Vec<T> = gens.phi.iter().map(|p| p.eval(&point.eta)).collect();
    let w: Vec<T> = (0..n)
        .map(|i| {
            let mut acc = T::zero();
            for k in 0..n {
                acc += point.beta[(k, i)] * phi[k];
            }
            acc / point.u[i]
        })
        .collect();
    let mut q = Vec::with_capacity(n);
    for i in 0..n {
        let mut acc = T::zero();
        for k in 0..n {
            if k != i {
                acc += kernel.dg_deta(point.eta[k], point.eta[i])? * (w[k] - w[i]) * point.u[k];
            }
        }
        acc -= gens.mu[i].eval(&[point.eta[i]]) * point.r[i];
        acc += gens.dphi[i][i].eval(&point.eta);
        q.push(acc / point.u[i]);
    }
    Ok(Affinor { n, w, q })
}

/// The explicit two-component formulas.
pub fn affinor_n2_closed(
    kernel: &KernelSpec,
    gens: &AffinorGenerators,
    r: [f64; 2],
    eta: [f64; 2],
) -> Result<Affinor> {
    if gens.n != 2 {
        return Err(SolgasError::Config(
            "closed-form affinor needs n = 2".into(),
        ));
    }
    let eps = kernel.g(eta[0], eta[1])?;
    let (e1, e2) = kernel.dg(eta[0], eta[1])?;
    let (d1, d2) = (r[1] - eps, r[0] - eps);
    if d1.abs() < CLOSED_FORM_SINGULAR || d2.abs() < CLOSED_FORM_SINGULAR {
        return Err(SolgasError::Singular(format!(
            "r^i = eps in the closed-form affinor at r = {r:?}"
        )));
    }
    let (p1, p2) = (gens.phi[0].eval(&eta), gens.phi[1].eval(&eta));
    let (m1, m2) = (gens.mu[0].eval(&[eta[0]]), gens.mu[1].eval(&[eta[1]]));
    let (dp1, dp2): (f64, f64) = (gens.dphi[0][0].eval(&eta), gens.dphi[1][1].eval(&eta));
    let det = r[0] * r[1] - eps * eps;
    let w1 = (r[1] * p1 - eps * p2) / d1;
    let w2 = (r[0] * p2 - eps * p1) / d2;
    let q1 = det / d1 * ((p2 - p1) / d1 * e1 + r[0] * m1 - dp1);
    let q2 = det / d2 * ((p1 - p2) / d2 * e2 + r[1] * m2 - dp2);
    Ok(Affinor {
        n: 2,
        w: vec![w1, w2],
        q: vec![q1, q2],
    })
}

/// The affinor as a (1,1)-tensor field on the reduced phase space.
pub struct AffinorField<'a> {
    pub kernel: &'a KernelSpec,
    pub gens: &'a AffinorGenerators,
}

impl TensorField11 for AffinorField<'_> {
    fn dim(&self) -> usize {
        2 * self.gens.n
    }

    fn eval<T: Scalar>(&self, x: &[T]) -> Result<Mat<T>> {
        let point = ReducedPoint::from_coords(self.kernel, x)?;
        Ok(build_affinor(self.kernel, self.gens, &point)?.matrix())
    }
}
