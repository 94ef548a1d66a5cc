//! Hamiltonian densities `h = Σ u^i h_i(η^i)` and reconstruction of the
//! flow from a density through the metric's covariant Hessian.

use crate::dual::{try_hessian, Integrand, Scalar};
use crate::error::{Result, SolgasError};
use crate::expr::Expr;
use crate::geometry::{christoffel, AnsatzMetric, StructureAnsatz};
use crate::kernels::KernelSpec;
use crate::linalg::Mat;
use crate::quadrature::integrate;
use crate::reduction::{
    build_eps_hat, invert_to_beta, split_coords, weights_u, ReducedPoint, SystemMatrix,
};

/// Relative tolerance for flow reconstruction against the reduced system.
pub const FLOW_TOL: f64 = 1e-6;
const QUAD_TOL: f64 = 1e-13;

/// One component density `h_i(η)`.
#[derive(Clone, Debug, PartialEq)]
pub enum DensityFn {
    Closed(Expr),
    /// `A(η) ∫_{η₀}^{η} B(t) dt`.
    Integral {
        prefactor: Expr,
        integrand: Expr,
        eta0: f64,
    },
    /// Piecewise closed form of `(8/η) ∫_0^η t²/(c̃ − c t²) dt`.
    KdvCc {
        c: f64,
        ct: f64,
    },
}

struct Quad<'a> {
    f: &'a Expr,
    eta0: f64,
}

impl Integrand for Quad<'_> {
    fn eval<T: Scalar>(&self, t: T) -> T {
        self.f.eval(&[t])
    }

    fn antiderivative(&self, t: f64) -> f64 {
        integrate(|s| self.f.eval(&[s]), self.eta0, t, QUAD_TOL).unwrap_or(f64::NAN)
    }
}

fn lit(v: f64) -> String {
    format!("({v:?})")
}

impl DensityFn {
    pub fn closed(src: &str) -> Result<Self> {
        Ok(DensityFn::Closed(Expr::in_eta(src, &Default::default())?))
    }

    /// `−√φ ∫ φ' S / φ^{3/2}`.
    pub fn additive_flat(phi: &Expr, velocity: &Expr, eta0: f64) -> Result<Self> {
        let dphi = phi.derivative(0);
        Ok(DensityFn::Integral {
            prefactor: Expr::compose("-sqrt({0})", &[phi], &["eta"])?,
            integrand: Expr::compose("{1}*{2}/sqrt({0})^3", &[phi, &dphi, velocity], &["eta"])?,
            eta0,
        })
    }

    /// `−2√(2c̃φ − c) ∫ φ' S / (2c̃φ − c)^{3/2}`.
    pub fn additive_cc(phi: &Expr, velocity: &Expr, c: f64, ct: f64, eta0: f64) -> Result<Self> {
        let dphi = phi.derivative(0);
        let base = format!("(2*{}*{{0}} - {})", lit(ct), lit(c));
        Ok(DensityFn::Integral {
            prefactor: Expr::compose(&format!("-2*sqrt({base})"), &[phi], &["eta"])?,
            integrand: Expr::compose(
                &format!("{{1}}*{{2}}/sqrt({base})^3"),
                &[phi, &dphi, velocity],
                &["eta"],
            )?,
            eta0,
        })
    }

    /// `−φ ∫ S a' / φ`.
    pub fn general_flat(phi: &Expr, a: &Expr, velocity: &Expr, eta0: f64) -> Result<Self> {
        let da = a.derivative(0);
        Ok(DensityFn::Integral {
            prefactor: Expr::compose("-{0}", &[phi], &["eta"])?,
            integrand: Expr::compose("{1}*{2}/{0}", &[phi, &da, velocity], &["eta"])?,
            eta0,
        })
    }

    pub fn kdv_cc(c: f64, ct: f64) -> Self {
        DensityFn::KdvCc { c, ct }
    }

    /// Same density with a different lower integration limit.
    pub fn with_eta0(&self, eta0: f64) -> Self {
        match self {
            DensityFn::Integral {
                prefactor,
                integrand,
                ..
            } => DensityFn::Integral {
                prefactor: prefactor.clone(),
                integrand: integrand.clone(),
                eta0,
            },
            other => other.clone(),
        }
    }

    pub fn eval<T: Scalar>(&self, eta: T) -> Result<T> {
        let v = match self {
            DensityFn::Closed(e) => e.eval(&[eta]),
            DensityFn::Integral {
                prefactor,
                integrand,
                eta0,
            } => {
                let v = prefactor.eval(&[eta])
                    * eta.primitive(&Quad {
                        f: integrand,
                        eta0: *eta0,
                    });
                if !v.re().is_finite() {
                    return Err(SolgasError::Branch(format!(
                        "density integral undefined between eta0 = {eta0} and eta = {}",
                        eta.re()
                    )));
                }
                v
            }
            DensityFn::KdvCc { c, ct } => kdv_cc_closed(*c, *ct, eta)?,
        };
        if !v.re().is_finite() {
            return Err(SolgasError::Numerical(format!(
                "density is not finite at eta = {}",
                eta.re()
            )));
        }
        Ok(v)
    }
}

fn kdv_cc_closed<T: Scalar>(c: f64, ct: f64, eta: T) -> Result<T> {
    if c == 0.0 && ct == 0.0 {
        return Err(SolgasError::Branch(
            "density undefined for c = c~ = 0".into(),
        ));
    }
    if c == 0.0 {
        return Ok(eta * eta * (8.0 / (3.0 * ct)));
    }
    if ct == 0.0 {
        return Ok(T::cst(-8.0 / c));
    }
    let ratio = c / ct;
    let k = ratio.abs().sqrt();
    let arg = eta * k;
    let tail = if ratio < 0.0 {
        arg.atan()
    } else {
        if arg.re().abs() >= 1.0 {
            return Err(SolgasError::Branch(format!(
                "atanh branch needs |eta| < sqrt(c~/c) = {}, got eta = {}",
                1.0 / k,
                eta.re()
            )));
        }
        arg.atanh()
    };
    Ok(tail / arg * (8.0 / c) - 8.0 / c)
}

/// `h(r, η) = Σ u^i h_i(η^i)` at interleaved coordinates.
pub fn hamiltonian_density<T: Scalar>(
    kernel: &KernelSpec,
    densities: &[DensityFn],
    x: &[T],
) -> Result<T> {
    let (r, eta) = split_coords(x);
    if densities.len() != r.len() {
        return Err(SolgasError::Config(format!(
            "{} densities for n = {}",
            densities.len(),
            r.len()
        )));
    }
    let (beta, _, _) = invert_to_beta(&build_eps_hat(kernel, &r, &eta)?)?;
    let u = weights_u(&beta)?;
    let mut h = T::zero();
    for (i, d) in densities.iter().enumerate() {
        h += u[i] * d.eval(eta[i])?;
    }
    Ok(h)
}

/// `V^i_j = g^{is}(∂_s∂_j h − Γ^k_{sj} ∂_k h) + c h δ^i_j`.
pub fn flow_from_density(
    kernel: &KernelSpec,
    ansatz: &StructureAnsatz,
    densities: &[DensityFn],
    curvature: f64,
    x: &[f64],
) -> Result<Mat<f64>> {
    let (h, grad, hess) = try_hessian(|p| hamiltonian_density(kernel, densities, p), x)?;
    let metric = AnsatzMetric::new(kernel, ansatz);
    let (_, g_upper, gamma) = christoffel(&metric, x)?;
    let dim = x.len();
    let cov = Mat::from_fn(dim, dim, |s, j| {
        hess[s][j] - (0..dim).map(|k| gamma.get(k, s, j) * grad[k]).sum::<f64>()
    });
    let mut v = g_upper.matmul(&cov);
    for i in 0..dim {
        v[(i, i)] += curvature * h;
    }
    Ok(v)
}

/// Reconstructs the flow and compares it with the reduced system.
pub fn reconstruct_flow(
    kernel: &KernelSpec,
    ansatz: &StructureAnsatz,
    densities: &[DensityFn],
    curvature: f64,
    x: &[f64],
) -> Result<SystemMatrix> {
    let v = flow_from_density(kernel, ansatz, densities, curvature, x)?;
    let system = ReducedPoint::from_coords(kernel, x)?.system();
    let diff = flow_mismatch(&v, &system);
    if diff > FLOW_TOL {
        let mut worst = (0, 0, 0.0f64);
        for i in 0..v.rows() {
            for j in 0..v.cols() {
                let d = (v[(i, j)] - system[(i, j)]).abs();
                if d > worst.2 {
                    worst = (i, j, d);
                }
            }
        }
        return Err(SolgasError::Mismatch(format!(
            "reconstructed flow differs from the reduced system by {diff:e} (relative); worst entry ({}, {}): {} vs {}",
            worst.0,
            worst.1,
            v[(worst.0, worst.1)],
            system[(worst.0, worst.1)]
        )));
    }
    Ok(v)
}

/// `max |A − B| / max(1, max |B|)`.
pub fn flow_mismatch(a: &Mat<f64>, b: &Mat<f64>) -> f64 {
    let d = a.sub(b).max_abs();
    if d.is_nan() {
        return f64::INFINITY;
    }
    d / b.max_abs().max(1.0)
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::collections::BTreeMap;

    fn kdv_flat(n: usize) -> StructureAnsatz {
        StructureAnsatz::uniform(n, "eta", "0", "-2", "0", &BTreeMap::new()).unwrap()
    }

    #[test]
    fn kdv_flat_density_reconstructs_the_system() {
        let k = KernelSpec::kdv();
        let h = vec![DensityFn::closed("-4/3*eta^2").unwrap(); 2];
        for x in [[1.5, 0.8, -2.0, 2.1], [3.0, 1.0, 5.0, 2.0]] {
            reconstruct_flow(&k, &kdv_flat(2), &h, 0.0, &x).unwrap();
        }
    }

    #[test]
    fn single_component_flow() {
        let k = KernelSpec::kdv();
        let h = [DensityFn::closed("-4/3*eta^2").unwrap()];
        let (r, eta) = (2.0, 1.3);
        let v = reconstruct_flow(&k, &kdv_flat(1), &h, 0.0, &[r, eta]).unwrap();
        assert!((v[(0, 0)] + 4.0 * eta * eta).abs() < 1e-9);
        assert!((v[(0, 1)] - 8.0 * eta * r).abs() < 1e-8);
    }

    #[test]
    fn wrong_density_is_a_mismatch() {
        let k = KernelSpec::kdv();
        let h = vec![DensityFn::closed("-eta^2").unwrap(); 2];
        assert!(matches!(
            reconstruct_flow(&k, &kdv_flat(2), &h, 0.0, &[1.5, 0.8, -2.0, 2.1]),
            Err(SolgasError::Mismatch(_))
        ));
    }

    #[test]
    fn kdv_cc_branches_match_quadrature() {
        for (c, ct) in [(0.5, 1.0), (0.5, -1.0), (-0.3, 2.0), (0.0, 1.0), (1.0, 0.0)] {
            let integrand =
                Expr::in_eta(&format!("eta^2/({ct:?} - ({c:?})*eta^2)"), &BTreeMap::new()).unwrap();
            for eta in [0.3, 0.9] {
                let closed = DensityFn::kdv_cc(c, ct).eval(eta).unwrap();
                let quad =
                    8.0 / eta * integrate(|t| integrand.eval(&[t]), 0.0, eta, 1e-13).unwrap();
                assert!(
                    (closed - quad).abs() < 1e-9,
                    "c={c} ct={ct} eta={eta}: {closed} vs {quad}"
                );
            }
        }
    }

    #[test]
    fn kdv_cc_reduces_to_table_value() {
        let h = DensityFn::kdv_cc(0.0, -2.0).eval(1.7).unwrap();
        assert!((h + 4.0 / 3.0 * 1.7 * 1.7).abs() < 1e-12);
    }

    #[test]
    fn kdv_cc_branch_errors() {
        assert!(matches!(
            DensityFn::kdv_cc(0.0, 0.0).eval(1.0),
            Err(SolgasError::Branch(_))
        ));
        assert!(matches!(
            DensityFn::kdv_cc(1.0, 1.0).eval(1.5),
            Err(SolgasError::Branch(_))
        ));
    }

    #[test]
    fn lower_limit_shifts_only_a_casimir() {
        let k = KernelSpec::additive_separable("exp(eta)", "eta").unwrap();
        let phi = Expr::in_eta("exp(eta)", &BTreeMap::new()).unwrap();
        let s = k.velocity.clone();
        let a = StructureAnsatz::uniform(2, "1", "0", "1", "0", &BTreeMap::new()).unwrap();
        let base = DensityFn::additive_flat(&phi, &s, -1.0).unwrap();
        let shifted = base.with_eta0(0.4);
        let x = [1.2, -0.6, -1.7, 0.5];
        let v0 = flow_from_density(&k, &a, &[base.clone(), base], 0.0, &x).unwrap();
        let v1 = flow_from_density(&k, &a, &[shifted.clone(), shifted], 0.0, &x).unwrap();
        assert!(flow_mismatch(&v0, &v1) < 1e-9);
    }
}
