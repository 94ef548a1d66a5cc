//! Forward-mode automatic differentiation.
//!
//! [`Scalar`] abstracts over `f64` and [`Dual<T>`], and `Dual<T>` is itself
//! generic over any `Scalar`, so `Dual<Dual<f64>>` carries exact mixed second
//! derivatives. Everything that feeds the curvature computation (kernels,
//! the reduced system, metrics) is written against `Scalar`.

use std::fmt::Debug;
use std::ops::{Add, AddAssign, Div, Mul, MulAssign, Neg, Sub, SubAssign};

/// A one-dimensional function that can be evaluated at any scalar type and
/// whose antiderivative is available at real arguments.
///
/// Used by [`Scalar::primitive`] to lift quadrature into dual arithmetic:
/// the value comes from the real antiderivative, the derivative parts from
/// the integrand.
pub trait Integrand {
    fn eval<T: Scalar>(&self, t: T) -> T;
    fn antiderivative(&self, t: f64) -> f64;
}

pub trait Scalar:
    Copy
    + Debug
    + PartialEq
    + Add<Output = Self>
    + Sub<Output = Self>
    + Mul<Output = Self>
    + Div<Output = Self>
    + Neg<Output = Self>
    + Add<f64, Output = Self>
    + Sub<f64, Output = Self>
    + Mul<f64, Output = Self>
    + Div<f64, Output = Self>
    + AddAssign
    + SubAssign
    + MulAssign
    + 'static
{
    fn cst(v: f64) -> Self;

    /// Real part (value with all infinitesimal parts dropped).
    fn re(&self) -> f64;

    fn zero() -> Self {
        Self::cst(0.0)
    }

    fn one() -> Self {
        Self::cst(1.0)
    }

    fn recip(self) -> Self;
    fn ln(self) -> Self;
    fn exp(self) -> Self;
    fn sqrt(self) -> Self;
    fn sin(self) -> Self;
    fn cos(self) -> Self;
    fn sinh(self) -> Self;
    fn cosh(self) -> Self;
    fn tanh(self) -> Self;
    fn atan(self) -> Self;
    fn atanh(self) -> Self;
    fn abs(self) -> Self;
    fn powi(self, k: i32) -> Self;

    /// `self^p` for a real exponent `p`.
    fn powf(self, p: f64) -> Self;

    /// `F(self)` where `F' = f`, `F` known at real points.
    fn primitive<I: Integrand>(self, f: &I) -> Self;

    fn powd(self, p: Self) -> Self {
        (p * self.ln()).exp()
    }

    fn is_finite(&self) -> bool;
}

impl Scalar for f64 {
    #[inline]
    fn cst(v: f64) -> Self {
        v
    }
    #[inline]
    fn re(&self) -> f64 {
        *self
    }
    fn recip(self) -> Self {
        1.0 / self
    }
    fn ln(self) -> Self {
        f64::ln(self)
    }
    fn exp(self) -> Self {
        f64::exp(self)
    }
    fn sqrt(self) -> Self {
        f64::sqrt(self)
    }
    fn sin(self) -> Self {
        f64::sin(self)
    }
    fn cos(self) -> Self {
        f64::cos(self)
    }
    fn sinh(self) -> Self {
        f64::sinh(self)
    }
    fn cosh(self) -> Self {
        f64::cosh(self)
    }
    fn tanh(self) -> Self {
        f64::tanh(self)
    }
    fn atan(self) -> Self {
        f64::atan(self)
    }
    fn atanh(self) -> Self {
        f64::atanh(self)
    }
    fn abs(self) -> Self {
        f64::abs(self)
    }
    fn powi(self, k: i32) -> Self {
        f64::powi(self, k)
    }
    fn powf(self, p: f64) -> Self {
        f64::powf(self, p)
    }
    fn primitive<I: Integrand>(self, f: &I) -> Self {
        f.antiderivative(self)
    }
    fn is_finite(&self) -> bool {
        f64::is_finite(*self)
    }
}

/// Dual number `re + eps·ε` with `ε² = 0`.
#[derive(Clone, Copy, Debug, PartialEq, Default)]
pub struct Dual<T> {
    pub re: T,
    pub eps: T,
}

impl<T: Scalar> Dual<T> {
    pub fn new(re: T, eps: T) -> Self {
        Dual { re, eps }
    }

    pub fn constant(re: T) -> Self {
        Dual { re, eps: T::zero() }
    }

    pub fn variable(re: T) -> Self {
        Dual { re, eps: T::one() }
    }

    /// Applies a scalar function with value `f` and derivative `df` at `re`.
    #[inline]
    fn chain(self, f: T, df: T) -> Self {
        Dual {
            re: f,
            eps: df * self.eps,
        }
    }
}

impl<T: Scalar> Add for Dual<T> {
    type Output = Self;
    #[inline]
    fn add(self, o: Self) -> Self {
        Dual::new(self.re + o.re, self.eps + o.eps)
    }
}

impl<T: Scalar> Sub for Dual<T> {
    type Output = Self;
    #[inline]
    fn sub(self, o: Self) -> Self {
        Dual::new(self.re - o.re, self.eps - o.eps)
    }
}

impl<T: Scalar> Mul for Dual<T> {
    type Output = Self;
    #[inline]
    fn mul(self, o: Self) -> Self {
        Dual::new(self.re * o.re, self.re * o.eps + self.eps * o.re)
    }
}

impl<T: Scalar> Div for Dual<T> {
    type Output = Self;
    #[inline]
    fn div(self, o: Self) -> Self {
        let inv = o.re.recip();
        let q = self.re * inv;
        Dual::new(q, (self.eps - q * o.eps) * inv)
    }
}

impl<T: Scalar> Neg for Dual<T> {
    type Output = Self;
    #[inline]
    fn neg(self) -> Self {
        Dual::new(-self.re, -self.eps)
    }
}

impl<T: Scalar> Add<f64> for Dual<T> {
    type Output = Self;
    #[inline]
    fn add(self, o: f64) -> Self {
        Dual::new(self.re + o, self.eps)
    }
}

impl<T: Scalar> Sub<f64> for Dual<T> {
    type Output = Self;
    #[inline]
    fn sub(self, o: f64) -> Self {
        Dual::new(self.re - o, self.eps)
    }
}

impl<T: Scalar> Mul<f64> for Dual<T> {
    type Output = Self;
    #[inline]
    fn mul(self, o: f64) -> Self {
        Dual::new(self.re * o, self.eps * o)
    }
}

impl<T: Scalar> Div<f64> for Dual<T> {
    type Output = Self;
    #[inline]
    fn div(self, o: f64) -> Self {
        Dual::new(self.re / o, self.eps / o)
    }
}

impl<T: Scalar> AddAssign for Dual<T> {
    fn add_assign(&mut self, o: Self) {
        *self = *self + o;
    }
}

impl<T: Scalar> SubAssign for Dual<T> {
    fn sub_assign(&mut self, o: Self) {
        *self = *self - o;
    }
}

impl<T: Scalar> MulAssign for Dual<T> {
    fn mul_assign(&mut self, o: Self) {
        *self = *self * o;
    }
}

impl<T: Scalar> Scalar for Dual<T> {
    fn cst(v: f64) -> Self {
        Dual::constant(T::cst(v))
    }

    fn re(&self) -> f64 {
        self.re.re()
    }

    fn recip(self) -> Self {
        let inv = self.re.recip();
        self.chain(inv, -(inv * inv))
    }

    fn ln(self) -> Self {
        self.chain(self.re.ln(), self.re.recip())
    }

    fn exp(self) -> Self {
        let e = self.re.exp();
        self.chain(e, e)
    }

    fn sqrt(self) -> Self {
        let s = self.re.sqrt();
        self.chain(s, (s * 2.0).recip())
    }

    fn sin(self) -> Self {
        self.chain(self.re.sin(), self.re.cos())
    }

    fn cos(self) -> Self {
        self.chain(self.re.cos(), -self.re.sin())
    }

    fn sinh(self) -> Self {
        self.chain(self.re.sinh(), self.re.cosh())
    }

    fn cosh(self) -> Self {
        self.chain(self.re.cosh(), self.re.sinh())
    }

    fn tanh(self) -> Self {
        let t = self.re.tanh();
        self.chain(t, T::one() - t * t)
    }

    fn atan(self) -> Self {
        self.chain(self.re.atan(), (self.re * self.re + 1.0).recip())
    }

    fn atanh(self) -> Self {
        self.chain(self.re.atanh(), (-(self.re * self.re) + 1.0).recip())
    }

    fn abs(self) -> Self {
        if self.re.re() < 0.0 {
            -self
        } else {
            self
        }
    }

    fn powi(self, k: i32) -> Self {
        if k == 0 {
            return Self::one();
        }
        self.chain(self.re.powi(k), self.re.powi(k - 1) * k as f64)
    }

    fn powf(self, p: f64) -> Self {
        self.chain(self.re.powf(p), self.re.powf(p - 1.0) * p)
    }

    fn primitive<I: Integrand>(self, f: &I) -> Self {
        self.chain(self.re.primitive(f), f.eval(self.re))
    }

    fn is_finite(&self) -> bool {
        self.re.is_finite() && self.eps.is_finite()
    }
}

pub type Dual2 = Dual<Dual<f64>>;

/// Lifts a real point into dual numbers seeded along coordinate `dir`.
pub fn seed<T: Scalar>(x: &[T], dir: usize) -> Vec<Dual<T>> {
    x.iter()
        .enumerate()
        .map(|(k, &v)| {
            if k == dir {
                Dual::variable(v)
            } else {
                Dual::constant(v)
            }
        })
        .collect()
}

/// Lifts a real point into dual numbers with no seeded direction.
pub fn lift<T: Scalar>(x: &[T]) -> Vec<Dual<T>> {
    x.iter().map(|&v| Dual::constant(v)).collect()
}

/// Derivative of a scalar function of one variable.
pub fn derivative<T: Scalar>(f: impl Fn(Dual<T>) -> Dual<T>, x: T) -> T {
    f(Dual::variable(x)).eps
}

/// Gradient of a real function of several variables by one pass per coordinate.
pub fn gradient(f: impl Fn(&[Dual<f64>]) -> Dual<f64>, x: &[f64]) -> Vec<f64> {
    (0..x.len()).map(|k| f(&seed(x, k)).eps).collect()
}

/// Value, gradient and Hessian via nested duals.
pub fn hessian(f: impl Fn(&[Dual2]) -> Dual2, x: &[f64]) -> (f64, Vec<f64>, Vec<Vec<f64>>) {
    match try_hessian(|p| Ok::<_, std::convert::Infallible>(f(p)), x) {
        Ok(v) => v,
        Err(never) => match never {},
    }
}

/// [`hessian`] for a fallible function.
pub fn try_hessian<E>(
    f: impl Fn(&[Dual2]) -> Result<Dual2, E>,
    x: &[f64],
) -> Result<(f64, Vec<f64>, Vec<Vec<f64>>), E> {
    let d = x.len();
    let mut grad = vec![0.0; d];
    let mut hess = vec![vec![0.0; d]; d];
    let mut value = 0.0;
    for a in 0..d {
        let outer = seed(x, a);
        for b in a..d {
            let point: Vec<Dual2> = outer
                .iter()
                .enumerate()
                .map(|(k, v)| {
                    Dual::new(
                        *v,
                        if k == b {
                            Dual::constant(1.0)
                        } else {
                            Dual::constant(0.0)
                        },
                    )
                })
                .collect();
            let out = f(&point)?;
            if a == b {
                grad[a] = out.re.eps;
                value = out.re.re;
            }
            hess[a][b] = out.eps.eps;
            hess[b][a] = out.eps.eps;
        }
    }
    Ok((value, grad, hess))
}

/// Central finite difference of a real function of one variable.
pub fn central_difference(f: impl Fn(f64) -> f64, x: f64, h: f64) -> f64 {
    (f(x + h) - f(x - h)) / (2.0 * h)
}
