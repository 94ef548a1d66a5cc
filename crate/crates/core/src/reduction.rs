//! The reduced quasilinear system of the delta-functional ansatz.
//!
//! A state is `(r¹, η¹, …, rⁿ, ηⁿ)`. Everything is generic over [`Scalar`]
//! so that the geometry module can push dual numbers through the whole
//! chain `ε̂ → β → u → v → p`.

use crate::dual::Scalar;
use crate::error::{Result, SolgasError};
use crate::kernels::KernelSpec;
use crate::linalg::Mat;

/// Spectral parameters closer than this are treated as coincident.
pub const DISTINCT_TOL: f64 = 1e-9;
/// Relative determinant threshold, applied as `tol · (max row norm)ⁿ`.
pub const DET_TOL: f64 = 1e-12;
/// Weights smaller than this make the metric undefined.
pub const WEIGHT_TOL: f64 = 1e-10;
/// Relative agreement required between the two velocity routes.
pub const VELOCITY_CROSSCHECK_TOL: f64 = 1e-8;

/// The 2n×2n Jordan-block matrix of the reduced system.
pub type SystemMatrix<T = f64> = Mat<T>;

#[derive(Clone, Debug)]
pub struct ReducedPoint<T = f64> {
    pub n: usize,
    pub r: Vec<T>,
    pub eta: Vec<T>,
    pub eps_hat: Mat<T>,
    pub beta: Mat<T>,
    /// `A[i][k]`: determinant of `ε̂` with row i and column k deleted.
    pub cofactors: Mat<T>,
    pub det: T,
    pub u: Vec<T>,
    pub v: Vec<T>,
    pub p: Vec<T>,
    /// `ξ^i = −S(η^i)`.
    pub xi: Vec<T>,
}

/// Splits `(r¹, η¹, …)` into `(r, η)`.
pub fn split_coords<T: Scalar>(x: &[T]) -> (Vec<T>, Vec<T>) {
    assert!(
        x.len().is_multiple_of(2),
        "coordinate vector must have even length"
    );
    (
        x.iter().step_by(2).copied().collect(),
        x.iter().skip(1).step_by(2).copied().collect(),
    )
}

pub fn join_coords<T: Scalar>(r: &[T], eta: &[T]) -> Vec<T> {
    r.iter().zip(eta).flat_map(|(&a, &b)| [a, b]).collect()
}

impl<T: Scalar> ReducedPoint<T> {
    /// Builds the full point from interleaved coordinates.
    pub fn from_coords(kernel: &KernelSpec, x: &[T]) -> Result<Self> {
        let (r, eta) = split_coords(x);
        Self::new(kernel, &r, &eta)
    }

    pub fn new(kernel: &KernelSpec, r: &[T], eta: &[T]) -> Result<Self> {
        let n = r.len();
        assert_eq!(n, eta.len(), "r and eta must have equal length");
        let eps_hat = build_eps_hat(kernel, r, eta)?;
        let (beta, cofactors, det) = invert_to_beta(&eps_hat)?;
        let u = weights_u(&beta)?;
        let xi = eta
            .iter()
            .map(|&e| kernel.s(e).map(|s| -s))
            .collect::<Result<Vec<_>>>()?;
        let v = velocities_v(kernel, &eps_hat, &beta, &u, &xi)?;
        let p = p_coeffs(kernel, eta, &u, &v)?;
        Ok(ReducedPoint {
            n,
            r: r.to_vec(),
            eta: eta.to_vec(),
            eps_hat,
            beta,
            cofactors,
            det,
            u,
            v,
            p,
            xi,
        })
    }

    pub fn coords(&self) -> Vec<T> {
        join_coords(&self.r, &self.eta)
    }

    /// `ε^{ij}` for `i ≠ j`.
    pub fn eps(&self, i: usize, j: usize) -> T {
        self.eps_hat[(i, j)]
    }

    pub fn system(&self) -> SystemMatrix<T> {
        assemble_system(self)
    }

    pub fn real(&self) -> ReducedPoint<f64> {
        let re = |v: &[T]| v.iter().map(|x| x.re()).collect::<Vec<_>>();
        ReducedPoint {
            n: self.n,
            r: re(&self.r),
            eta: re(&self.eta),
            eps_hat: self.eps_hat.real(),
            beta: self.beta.real(),
            cofactors: self.cofactors.real(),
            det: self.det.re(),
            u: re(&self.u),
            v: re(&self.v),
            p: re(&self.p),
            xi: re(&self.xi),
        }
    }
}

pub fn check_distinct<T: Scalar>(eta: &[T]) -> Result<()> {
    for i in 0..eta.len() {
        for j in i + 1..eta.len() {
            if (eta[i].re() - eta[j].re()).abs() < DISTINCT_TOL {
                return Err(SolgasError::Distinctness {
                    i,
                    j,
                    tol: DISTINCT_TOL,
                });
            }
        }
    }
    Ok(())
}

/// `ε̂` with `r` on the diagonal and `G(η^i, η^j)` off it.
pub fn build_eps_hat<T: Scalar>(kernel: &KernelSpec, r: &[T], eta: &[T]) -> Result<Mat<T>> {
    check_distinct(eta)?;
    let n = r.len();
    let mut m = Mat::zeros(n, n);
    for i in 0..n {
        m[(i, i)] = r[i];
        for j in i + 1..n {
            let g = kernel.g(eta[i], eta[j])?;
            m[(i, j)] = g;
            m[(j, i)] = g;
        }
    }
    Ok(m)
}

/// `β = −ε̂⁻¹` together with the unsigned minors and the determinant.
pub fn invert_to_beta<T: Scalar>(eps_hat: &Mat<T>) -> Result<(Mat<T>, Mat<T>, T)> {
    let n = eps_hat.rows();
    let scale = eps_hat.max_row_norm();
    let lu = eps_hat
        .lu()
        .ok_or_else(|| SolgasError::Singular("eps_hat has a zero pivot".into()))?;
    let det = lu.det();
    if !(det.re().abs() > DET_TOL * scale.powi(n as i32)) {
        return Err(SolgasError::Singular(format!(
            "|det eps_hat| = {:e} below {:e}",
            det.re().abs(),
            DET_TOL * scale.powi(n as i32)
        )));
    }
    let mut beta = Mat::zeros(n, n);
    for j in 0..n {
        let mut e = vec![T::zero(); n];
        e[j] = -T::one();
        let col = lu.solve(&e);
        for i in 0..n {
            beta[(i, j)] = col[i];
        }
    }
    let cofactors = eps_hat.minor_determinants();
    // β_{ik} = (−1)^{i+k+1} A_{i,k} / det
    let bscale = beta.max_abs().max(f64::MIN_POSITIVE);
    for i in 0..n {
        for k in 0..n {
            let sign = if (i + k) % 2 == 0 { -1.0 } else { 1.0 };
            let via = sign * cofactors[(i, k)].re() / det.re();
            if (via - beta[(i, k)].re()).abs() > 1e-9 * bscale {
                return Err(SolgasError::CrossCheck(format!(
                    "cofactor formula gives beta[{i}][{k}] = {via:e}, inverse gives {:e}",
                    beta[(i, k)].re()
                )));
            }
        }
    }
    Ok((beta, cofactors, det))
}

/// Column sums of `β`.
pub fn weights_u<T: Scalar>(beta: &Mat<T>) -> Result<Vec<T>> {
    let n = beta.rows();
    (0..n)
        .map(|i| {
            let mut s = T::zero();
            for k in 0..n {
                s += beta[(k, i)];
            }
            if s.re().abs() < WEIGHT_TOL || !s.is_finite() {
                return Err(SolgasError::DegenerateWeight {
                    index: i,
                    value: s.re(),
                });
            }
            Ok(s)
        })
        .collect()
}

/// `v^i = (1/u^i) Σ_k β_{ki} ξ^k`, cross-checked against the direct solve of
/// `v^i = ξ^i + Σ_{k≠i} ε^{ki} u^k (v^k − v^i)`.
pub fn velocities_v<T: Scalar>(
    _kernel: &KernelSpec,
    eps_hat: &Mat<T>,
    beta: &Mat<T>,
    u: &[T],
    xi: &[T],
) -> Result<Vec<T>> {
    let n = u.len();
    let v: Vec<T> = (0..n)
        .map(|i| {
            let mut s = T::zero();
            for k in 0..n {
                s += beta[(k, i)] * xi[k];
            }
            s / u[i]
        })
        .collect();
    let direct = velocities_direct(eps_hat, u, xi)?;
    let vscale = v
        .iter()
        .chain(&direct)
        .fold(1.0f64, |m, x| m.max(x.re().abs()));
    for i in 0..n {
        if (v[i].re() - direct[i].re()).abs() > VELOCITY_CROSSCHECK_TOL * vscale {
            return Err(SolgasError::CrossCheck(format!(
                "v[{i}]: beta route {:e}, direct solve {:e}",
                v[i].re(),
                direct[i].re()
            )));
        }
    }
    Ok(v)
}

/// Direct linear solve for the effective velocities.
pub fn velocities_direct<T: Scalar>(eps_hat: &Mat<T>, u: &[T], xi: &[T]) -> Result<Vec<T>> {
    let n = u.len();
    let mut m = Mat::zeros(n, n);
    for i in 0..n {
        let mut diag = T::one();
        for k in 0..n {
            if k != i {
                let t = eps_hat[(k, i)] * u[k];
                diag += t;
                m[(i, k)] = -t;
            }
        }
        m[(i, i)] = diag;
    }
    m.solve(xi)
        .ok_or_else(|| SolgasError::Singular("velocity system is singular".into()))
}

/// `p^i = (1/u^i)(Σ_{k≠i} ∂_{η^i}ε^{ki} (v^k − v^i) u^k − S'(η^i))`.
pub fn p_coeffs<T: Scalar>(kernel: &KernelSpec, eta: &[T], u: &[T], v: &[T]) -> Result<Vec<T>> {
    let n = u.len();
    (0..n)
        .map(|i| {
            let mut s = -kernel.ds(eta[i])?;
            for k in 0..n {
                if k != i {
                    s += kernel.dg_deta(eta[k], eta[i])? * (v[k] - v[i]) * u[k];
                }
            }
            Ok(s / u[i])
        })
        .collect()
}

/// Block-diagonal matrix with blocks `[[a^i, b^i], [0, a^i]]`.
pub fn jordan_blocks<T: Scalar>(a: &[T], b: &[T]) -> Mat<T> {
    let n = a.len();
    let mut m = Mat::zeros(2 * n, 2 * n);
    for i in 0..n {
        m[(2 * i, 2 * i)] = a[i];
        m[(2 * i + 1, 2 * i + 1)] = a[i];
        m[(2 * i, 2 * i + 1)] = b[i];
    }
    m
}

pub fn assemble_system<T: Scalar>(point: &ReducedPoint<T>) -> SystemMatrix<T> {
    jordan_blocks(&point.v, &point.p)
}

/// `r^i = −(1/u^i)(1 + Σ_{k≠i} ε^{ki} u^k)`.
pub fn r_from_u<T: Scalar>(kernel: &KernelSpec, u: &[T], eta: &[T]) -> Result<Vec<T>> {
    check_distinct(eta)?;
    let n = u.len();
    (0..n)
        .map(|i| {
            if u[i].re().abs() < WEIGHT_TOL {
                return Err(SolgasError::DegenerateWeight {
                    index: i,
                    value: u[i].re(),
                });
            }
            let mut s = T::one();
            for k in 0..n {
                if k != i {
                    s += kernel.g(eta[k], eta[i])? * u[k];
                }
            }
            Ok(-(s / u[i]))
        })
        .collect()
}

pub fn u_from_r(point: &ReducedPoint) -> Vec<f64> {
    point.u.clone()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dual::Dual;

    fn close(a: f64, b: f64, tol: f64) -> bool {
        (a - b).abs() <= tol * a.abs().max(b.abs()).max(1.0)
    }

    #[test]
    fn eps_hat_for_kdv() {
        let k = KernelSpec::kdv();
        let m = build_eps_hat(&k, &[3.0, 5.0], &[1.0, 2.0]).unwrap();
        let e = -(3f64.ln()) / 2.0;
        assert_eq!(m[(0, 0)], 3.0);
        assert_eq!(m[(1, 1)], 5.0);
        assert!((m[(0, 1)] - e).abs() < 1e-15 && m[(0, 1)] == m[(1, 0)]);
        let one = build_eps_hat(&k, &[5.0], &[2.0]).unwrap();
        assert_eq!(one, Mat::from_rows(&[vec![5.0]]));
        let ll = build_eps_hat(&KernelSpec::lieb_liniger(2.0), &[1.0, 1.0], &[0.0, 2.0]).unwrap();
        assert!((ll[(0, 1)] - 0.5).abs() < 1e-15);
    }

    #[test]
    fn distinctness_is_enforced() {
        let err = build_eps_hat(&KernelSpec::hard_rod(1.0), &[1.0, 2.0], &[0.5, 0.5]).unwrap_err();
        assert!(matches!(err, SolgasError::Distinctness { i: 0, j: 1, .. }));
    }

    #[test]
    fn beta_for_scalar_and_two_by_two() {
        let (b, a, d) = invert_to_beta(&Mat::from_rows(&[vec![4.0]])).unwrap();
        assert_eq!((b[(0, 0)], a[(0, 0)], d), (-0.25, 1.0, 4.0));

        let (r1, r2, e) = (3.0, 5.0, 0.7);
        let (b, _, d) = invert_to_beta(&Mat::from_rows(&[vec![r1, e], vec![e, r2]])).unwrap();
        let det = r1 * r2 - e * e;
        assert!(close(d, det, 1e-14));
        let expect = [[r2, -e], [-e, r1]];
        for i in 0..2 {
            for j in 0..2 {
                assert!(close(b[(i, j)], -expect[i][j] / det, 1e-14));
            }
        }
    }

    #[test]
    fn singular_eps_hat_is_rejected() {
        let m = Mat::from_rows(&[vec![1.0, 1.0], vec![1.0, 1.0]]);
        assert!(matches!(invert_to_beta(&m), Err(SolgasError::Singular(_))));
    }

    #[test]
    fn weights_two_by_two() {
        let (r1, r2, e) = (3.0, 5.0, 0.7);
        let (b, _, _) = invert_to_beta(&Mat::from_rows(&[vec![r1, e], vec![e, r2]])).unwrap();
        let u = weights_u(&b).unwrap();
        assert!(close(u[0], -(r2 - e) / (r1 * r2 - e * e), 1e-14));
        assert!(close(u[1], -(r1 - e) / (r1 * r2 - e * e), 1e-14));
    }

    #[test]
    fn scalar_point_kdv() {
        let k = KernelSpec::kdv();
        let (r, eta) = (1.5, 2.0);
        let p = ReducedPoint::new(&k, &[r], &[eta]).unwrap();
        assert!(close(p.u[0], -1.0 / r, 1e-15));
        assert!(close(p.v[0], -16.0, 1e-15));
        // −S'(η)/u with u = −1/r gives +8ηr
        assert!(close(p.p[0], 8.0 * eta * r, 1e-14));
    }

    #[test]
    fn hard_rod_p_is_minus_one_over_u() {
        let k = KernelSpec::hard_rod(1.0);
        let p = ReducedPoint::new(&k, &[2.0, 3.0, -4.0], &[0.1, 0.9, -1.2]).unwrap();
        for i in 0..3 {
            assert!(close(p.p[i], -1.0 / p.u[i], 1e-14));
        }
    }

    #[test]
    fn hard_rod_two_components_closed_form_velocities() {
        // ε = −a: v¹(1 − a u²) + a u² v² = −η¹ etc.
        let k = KernelSpec::hard_rod(1.0);
        let pt = ReducedPoint::new(&k, &[2.0, 3.0], &[0.3, 1.1]).unwrap();
        let (u1, u2) = (pt.u[0], pt.u[1]);
        let m = [[1.0 - u2, u2], [u1, 1.0 - u1]];
        let rhs = [-0.3, -1.1];
        let det = m[0][0] * m[1][1] - m[0][1] * m[1][0];
        let v1 = (rhs[0] * m[1][1] - m[0][1] * rhs[1]) / det;
        let v2 = (m[0][0] * rhs[1] - m[1][0] * rhs[0]) / det;
        assert!(close(pt.v[0], v1, 1e-13) && close(pt.v[1], v2, 1e-13));
    }

    #[test]
    fn system_matrix_layout() {
        let m = jordan_blocks(&[-16.0], &[std::f64::consts::PI]);
        assert_eq!(
            m,
            Mat::from_rows(&[vec![-16.0, std::f64::consts::PI], vec![0.0, -16.0]])
        );
        let k = KernelSpec::kdv();
        let pt = ReducedPoint::new(&k, &[3.0, 5.0], &[1.0, 2.0]).unwrap();
        let v = pt.system();
        let nonzero = (0..4)
            .flat_map(|i| (0..4).map(move |j| (i, j)))
            .filter(|&(i, j)| v[(i, j)] != 0.0)
            .count();
        assert!(nonzero <= 6);
        assert_eq!(v[(0, 0)], v[(1, 1)]);
        assert_eq!(v[(1, 0)], 0.0);
    }

    #[test]
    fn r_u_roundtrip_kdv() {
        let k = KernelSpec::kdv();
        let eta = [1.0, 2.0];
        let r = r_from_u(&k, &[1.0, 2.0], &eta).unwrap();
        let pt = ReducedPoint::new(&k, &r, &eta).unwrap();
        assert!(close(pt.u[0], 1.0, 1e-12) && close(pt.u[1], 2.0, 1e-12));
        assert_eq!(r_from_u(&k, &[4.0], &[2.0]).unwrap(), vec![-0.25]);
    }

    #[test]
    fn hard_rod_r_closed_form() {
        let k = KernelSpec::hard_rod(1.0);
        let u = [0.2, 0.5, 0.3];
        let r = r_from_u(&k, &u, &[0.0, 1.0, 2.0]).unwrap();
        for i in 0..3 {
            let others: f64 = (0..3).filter(|&k| k != i).map(|k| -u[k]).sum();
            assert!(close(r[i], -(1.0 + others) / u[i], 1e-15));
        }
    }

    #[test]
    fn derivatives_flow_through_the_chain() {
        let k = KernelSpec::kdv();
        let x = [3.0, 1.0, 5.0, 2.0];
        let f = |h: f64| {
            let mut y = x;
            y[1] += h;
            ReducedPoint::from_coords(&k, &y).unwrap().p[1]
        };
        let mut xd: Vec<Dual<f64>> = x.iter().map(|&v| Dual::constant(v)).collect();
        xd[1] = Dual::variable(1.0);
        let d = ReducedPoint::from_coords(&k, &xd).unwrap().p[1].eps;
        let fd = (f(1e-5) - f(-1e-5)) / 2e-5;
        assert!(close(d, fd, 1e-7));
    }

    /// The Jordan-block matrix equals `J A J⁻¹`, with `A` the matrix of
    /// `u_t = (v u)_x, η_t = v η_x` and `J = ∂(r, η)/∂(u, η)`.
    #[test]
    fn system_matrix_is_the_weight_form_in_new_variables() {
        for (k, u, eta) in [
            (KernelSpec::kdv(), [0.13, 0.21], [1.1, 2.3]),
            (KernelSpec::lieb_liniger(1.0), [0.4, 0.1], [-0.7, 0.9]),
        ] {
            let w = join_coords(&u, &eta);
            let mut a = Mat::zeros(4, 4);
            let mut jac = Mat::zeros(4, 4);
            for c in 0..4 {
                let wd: Vec<Dual<f64>> = w
                    .iter()
                    .enumerate()
                    .map(|(i, &x)| {
                        if i == c {
                            Dual::variable(x)
                        } else {
                            Dual::constant(x)
                        }
                    })
                    .collect();
                let (ud, ed) = split_coords(&wd);
                let r = r_from_u(&k, &ud, &ed).unwrap();
                let pt = ReducedPoint::new(&k, &r, &ed).unwrap();
                for i in 0..2 {
                    a[(2 * i, c)] = (pt.v[i] * ud[i]).eps;
                    jac[(2 * i, c)] = r[i].eps;
                    jac[(2 * i + 1, c)] = ed[i].eps;
                    if c == 2 * i + 1 {
                        a[(c, c)] = pt.v[i].re;
                    }
                }
            }
            let via = jac.matmul(&a).matmul(&jac.inverse().unwrap());
            let r = r_from_u(&k, &u, &eta).unwrap();
            let sys = ReducedPoint::new(&k, &r, &eta).unwrap().system();
            assert!(
                via.sub(&sys).max_abs() <= 1e-9 * sys.max_abs(),
                "{}",
                k.name
            );
        }
    }
}
