use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use super::{MetricField, TensorField11};
use crate::dual::Scalar;
use crate::error::{Result, SolgasError};
use crate::expr::Expr;
use crate::kernels::KernelSpec;
use crate::linalg::Mat;
use crate::reduction::ReducedPoint;

/// Below this `|s_i(η^i)|` the metric block is treated as singular.
const S_DEGENERATE: f64 = 1e-12;

/// Per-component functions `s_i, φ_i, χ_i, ψ_i` of `η^i` defining the
/// candidate metric, with `g_i = φ_i r² + χ_i r + ψ_i`.
#[derive(Clone, Debug, PartialEq)]
pub struct StructureAnsatz {
    pub n: usize,
    pub s: Vec<Expr>,
    pub phi: Vec<Expr>,
    pub chi: Vec<Expr>,
    pub psi: Vec<Expr>,
    pub family: Option<String>,
    pub constants: BTreeMap<String, f64>,
}

/// Source strings for an ansatz: one entry, or one per component.
#[derive(Clone, Debug, Default, Serialize, Deserialize, PartialEq)]
pub struct AnsatzSource {
    pub s: Vec<String>,
    pub phi: Vec<String>,
    pub chi: Vec<String>,
    pub psi: Vec<String>,
}

fn expand(
    n: usize,
    what: &str,
    src: &[String],
    constants: &BTreeMap<String, f64>,
) -> Result<Vec<Expr>> {
    match src.len() {
        1 => Ok(vec![Expr::in_eta(&src[0], constants)?; n]),
        k if k == n => src.iter().map(|s| Expr::in_eta(s, constants)).collect(),
        k => Err(SolgasError::Config(format!(
            "`{what}` needs 1 or {n} entries, got {k}"
        ))),
    }
}

impl StructureAnsatz {
    /// Same functions for every component.
    pub fn uniform(
        n: usize,
        s: &str,
        phi: &str,
        chi: &str,
        psi: &str,
        constants: &BTreeMap<String, f64>,
    ) -> Result<Self> {
        let one = |v: &str| vec![v.to_string()];
        Self::from_source(
            n,
            &AnsatzSource {
                s: one(s),
                phi: one(phi),
                chi: one(chi),
                psi: one(psi),
            },
            constants,
        )
    }

    pub fn from_source(
        n: usize,
        src: &AnsatzSource,
        constants: &BTreeMap<String, f64>,
    ) -> Result<Self> {
        if n == 0 {
            return Err(SolgasError::Config("ansatz needs n >= 1".into()));
        }
        Ok(StructureAnsatz {
            n,
            s: expand(n, "s", &src.s, constants)?,
            phi: expand(n, "phi", &src.phi, constants)?,
            chi: expand(n, "chi", &src.chi, constants)?,
            psi: expand(n, "psi", &src.psi, constants)?,
            family: None,
            constants: constants.clone(),
        })
    }

    pub fn with_family(mut self, name: &str) -> Self {
        self.family = Some(name.to_string());
        self
    }

    pub fn source(&self) -> AnsatzSource {
        let src = |v: &[Expr]| v.iter().map(|e| e.source().to_string()).collect();
        AnsatzSource {
            s: src(&self.s),
            phi: src(&self.phi),
            chi: src(&self.chi),
            psi: src(&self.psi),
        }
    }

    pub fn s_i<T: Scalar>(&self, i: usize, eta: T) -> T {
        self.s[i].eval(&[eta])
    }

    pub fn phi_i<T: Scalar>(&self, i: usize, eta: T) -> T {
        self.phi[i].eval(&[eta])
    }

    pub fn chi_i<T: Scalar>(&self, i: usize, eta: T) -> T {
        self.chi[i].eval(&[eta])
    }

    pub fn psi_i<T: Scalar>(&self, i: usize, eta: T) -> T {
        self.psi[i].eval(&[eta])
    }

    /// `g_i(r, η) = φ_i r² + χ_i r + ψ_i`.
    pub fn g_i<T: Scalar>(&self, i: usize, r: T, eta: T) -> T {
        (self.phi_i(i, eta) * r + self.chi_i(i, eta)) * r + self.psi_i(i, eta)
    }
}

/// `g^{ab}`: blocks `[[m_i, n_i], [n_i, 0]]` with `n_i = s_i/(u^i)²` and
/// `m_i = −2 s_i/(u^i)³ Σ_{j≠i} u^j ∂_{η^i}ε^{ji} + g_i/(u^i)²`.
pub fn metric_upper<T: Scalar>(
    point: &ReducedPoint<T>,
    ansatz: &StructureAnsatz,
    kernel: &KernelSpec,
) -> Result<Mat<T>> {
    let n = point.n;
    if ansatz.n != n {
        return Err(SolgasError::Config(format!(
            "ansatz has n = {}, point has n = {n}",
            ansatz.n
        )));
    }
    let mut g = Mat::zeros(2 * n, 2 * n);
    for i in 0..n {
        let (r, eta, u) = (point.r[i], point.eta[i], point.u[i]);
        let s = ansatz.s_i(i, eta);
        if !(s.re().abs() > S_DEGENERATE) {
            return Err(SolgasError::DegenerateMetric(format!(
                "s_{i}(eta = {}) = {:e}",
                eta.re(),
                s.re()
            )));
        }
        let mut sum = T::zero();
        for j in 0..n {
            if j != i {
                sum += point.u[j] * kernel.dg_deta(point.eta[j], eta)?;
            }
        }
        let u2 = u * u;
        let m = -(s * sum * 2.0) / (u2 * u) + ansatz.g_i(i, r, eta) / u2;
        g[(2 * i, 2 * i)] = m;
        g[(2 * i, 2 * i + 1)] = s / u2;
        g[(2 * i + 1, 2 * i)] = s / u2;
    }
    Ok(g)
}

/// Blockwise inverse `[[0, 1/n], [1/n, −m/n²]]`.
pub fn metric_lower<T: Scalar>(g_upper: &Mat<T>) -> Result<Mat<T>> {
    let dim = g_upper.rows();
    let mut g = Mat::zeros(dim, dim);
    for i in 0..dim / 2 {
        let (a, b) = (2 * i, 2 * i + 1);
        let (m, nn) = (g_upper[(a, a)], g_upper[(a, b)]);
        if nn.re() == 0.0 || !nn.is_finite() {
            return Err(SolgasError::DegenerateMetric(format!(
                "block {i} has n = {:e}",
                nn.re()
            )));
        }
        let inv = nn.recip();
        g[(a, b)] = inv;
        g[(b, a)] = inv;
        g[(b, b)] = -(m * inv * inv);
    }
    Ok(g)
}

/// The metric of a [`StructureAnsatz`] over the reduced-system chart.
pub struct AnsatzMetric<'a> {
    pub kernel: &'a KernelSpec,
    pub ansatz: &'a StructureAnsatz,
}

impl<'a> AnsatzMetric<'a> {
    pub fn new(kernel: &'a KernelSpec, ansatz: &'a StructureAnsatz) -> Self {
        AnsatzMetric { kernel, ansatz }
    }
}

impl MetricField for AnsatzMetric<'_> {
    fn dim(&self) -> usize {
        2 * self.ansatz.n
    }

    fn lower<T: Scalar>(&self, x: &[T]) -> Result<Mat<T>> {
        metric_lower(&self.upper(x)?)
    }

    fn upper<T: Scalar>(&self, x: &[T]) -> Result<Mat<T>> {
        let point = ReducedPoint::from_coords(self.kernel, x)?;
        metric_upper(&point, self.ansatz, self.kernel)
    }
}

/// The Jordan-block velocity matrix of the reduced system as a field.
pub struct SystemField<'a> {
    pub kernel: &'a KernelSpec,
    pub n: usize,
}

impl TensorField11 for SystemField<'_> {
    fn dim(&self) -> usize {
        2 * self.n
    }

    fn eval<T: Scalar>(&self, x: &[T]) -> Result<Mat<T>> {
        Ok(ReducedPoint::from_coords(self.kernel, x)?.system())
    }
}

/// `a · Id`.
pub struct ScaledIdentity {
    pub dim: usize,
    pub a: f64,
}

impl TensorField11 for ScaledIdentity {
    fn dim(&self) -> usize {
        self.dim
    }

    fn eval<T: Scalar>(&self, _x: &[T]) -> Result<Mat<T>> {
        Ok(Mat::identity(self.dim).scale(T::cst(self.a)))
    }
}

/// A constant metric, for fixtures.
pub struct ConstantMetric {
    g: Mat<f64>,
}

impl ConstantMetric {
    pub fn new(g: Mat<f64>) -> Self {
        ConstantMetric { g }
    }
}

impl MetricField for ConstantMetric {
    fn dim(&self) -> usize {
        self.g.rows()
    }

    fn lower<T: Scalar>(&self, _x: &[T]) -> Result<Mat<T>> {
        Ok(self.g.map(T::cst))
    }
}

/// The round unit sphere `dθ² + sin²θ dφ²`, for fixtures.
pub struct SphereMetric;

impl MetricField for SphereMetric {
    fn dim(&self) -> usize {
        2
    }

    fn lower<T: Scalar>(&self, x: &[T]) -> Result<Mat<T>> {
        let s = x[0].sin();
        Ok(Mat::from_rows(&[
            vec![T::one(), T::zero()],
            vec![T::zero(), s * s],
        ]))
    }
}
