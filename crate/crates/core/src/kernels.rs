//! Interaction kernels `G(μ, η)` and free velocities `S(η)`.
//!
//! The built-in catalogue mirrors the standard soliton-gas models (KdV,
//! sinh-Gordon, hard rods, Lieb-Liniger, DNLS) plus the additive-separable
//! and multiplicative general families parameterised by expressions. User
//! kernels are plain expressions in `mu` and `eta`.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::dual::{central_difference, Dual, Scalar};
use crate::error::{Result, SolgasError};
use crate::expr::Expr;

/// Distance to a log singularity below which evaluation is refused.
pub const SINGULARITY_GUARD: f64 = 1e-9;

#[derive(Clone, Debug, PartialEq)]
pub enum KernelKind {
    Kdv,
    SinhGordon {
        a: f64,
    },
    HardRod {
        a: f64,
    },
    LiebLiniger {
        a: f64,
    },
    Dnls,
    /// `φ(μ) + φ(η)`
    AdditiveSeparable {
        phi: Expr,
    },
    /// `φ(μ) φ(η) g(a(μ) − a(η))`
    MultiplicativeGeneral {
        phi: Expr,
        g: Expr,
        a: Expr,
    },
    /// Free-form `G(mu, eta)` with an optional positivity domain predicate.
    Expression {
        g: Expr,
        domain: Option<Expr>,
    },
}

/// How `∂G` is obtained.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DerivativeSource {
    ClosedForm,
    DualNumber,
}

#[derive(Clone, Debug, PartialEq)]
pub struct KernelSpec {
    pub name: String,
    pub params: BTreeMap<String, f64>,
    pub kind: KernelKind,
    /// Free soliton velocity `S(eta)`.
    pub velocity: Expr,
    /// Sampling box for spectral parameters.
    pub eta_box: (f64, f64),
    /// Minimum pairwise gap between sampled spectral parameters.
    pub min_gap: f64,
}

/// JSON form of a kernel: built-in names bypass the expressions.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct KernelConfig {
    pub name: String,
    #[serde(default)]
    pub params: BTreeMap<String, f64>,
    #[serde(rename = "G", default, skip_serializing_if = "Option::is_none")]
    pub g: Option<String>,
    #[serde(rename = "S", default, skip_serializing_if = "Option::is_none")]
    pub s: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub domain: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub phi: Option<String>,
    #[serde(rename = "g", default, skip_serializing_if = "Option::is_none")]
    pub g_profile: Option<String>,
    #[serde(rename = "a", default, skip_serializing_if = "Option::is_none")]
    pub a_profile: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub eta_box: Option<(f64, f64)>,
}

pub const BUILTIN_NAMES: [&str; 7] = [
    "kdv",
    "sinh_gordon",
    "hard_rod",
    "lieb_liniger",
    "dnls",
    "additive_separable",
    "multiplicative_general",
];

fn eta_expr(src: &str, params: &BTreeMap<String, f64>) -> Result<Expr> {
    Expr::in_eta(src, params)
}

fn param(params: &BTreeMap<String, f64>, key: &str, default: f64) -> f64 {
    params.get(key).copied().unwrap_or(default)
}

impl KernelSpec {
    pub fn kdv() -> Self {
        Self::builtin("kdv", &BTreeMap::new()).unwrap()
    }

    pub fn sinh_gordon(a: f64) -> Self {
        Self::builtin("sinh_gordon", &BTreeMap::from([("a".to_string(), a)])).unwrap()
    }

    pub fn hard_rod(a: f64) -> Self {
        Self::builtin("hard_rod", &BTreeMap::from([("a".to_string(), a)])).unwrap()
    }

    pub fn lieb_liniger(a: f64) -> Self {
        Self::builtin("lieb_liniger", &BTreeMap::from([("a".to_string(), a)])).unwrap()
    }

    pub fn dnls() -> Self {
        Self::builtin("dnls", &BTreeMap::new()).unwrap()
    }

    pub fn additive_separable(phi: &str, velocity: &str) -> Result<Self> {
        let params = BTreeMap::new();
        Ok(KernelSpec {
            name: "additive_separable".into(),
            kind: KernelKind::AdditiveSeparable {
                phi: eta_expr(phi, &params)?,
            },
            velocity: eta_expr(velocity, &params)?,
            params,
            eta_box: (-1.0, 1.0),
            min_gap: 0.3,
        })
    }

    pub fn multiplicative_general(phi: &str, g: &str, a: &str, velocity: &str) -> Result<Self> {
        let params = BTreeMap::new();
        Ok(KernelSpec {
            name: "multiplicative_general".into(),
            kind: KernelKind::MultiplicativeGeneral {
                phi: eta_expr(phi, &params)?,
                g: eta_expr(g, &params)?,
                a: eta_expr(a, &params)?,
            },
            velocity: eta_expr(velocity, &params)?,
            params,
            eta_box: (-1.0, 1.0),
            min_gap: 0.3,
        })
    }

    /// Built-in kernel by name with default parameters filled in (`a = 1`,
    /// `φ = exp`, `g = cosh`, `a(η) = η`, `S = η` where arbitrary).
    pub fn builtin(name: &str, params: &BTreeMap<String, f64>) -> Result<Self> {
        let a = param(params, "a", 1.0);
        let with_a = || BTreeMap::from([("a".to_string(), a)]);
        let empty = BTreeMap::new();
        let (kind, velocity, eta_box, params) = match name {
            "kdv" => (KernelKind::Kdv, "4*eta^2", (0.5, 3.0), empty),
            "sinh_gordon" => (
                KernelKind::SinhGordon { a },
                "tanh(eta)",
                (-1.5, 1.5),
                with_a(),
            ),
            "hard_rod" => (KernelKind::HardRod { a }, "eta", (-2.0, 2.0), with_a()),
            "lieb_liniger" => (KernelKind::LiebLiniger { a }, "eta", (-2.0, 2.0), with_a()),
            "dnls" => (KernelKind::Dnls, "eta", (1.2, 3.0), empty),
            "additive_separable" => return Self::additive_separable("exp(eta)", "eta"),
            "multiplicative_general" => {
                return Self::multiplicative_general("exp(eta)", "cosh(eta)", "eta", "eta")
            }
            other => {
                return Err(SolgasError::Config(format!(
                    "unknown built-in kernel `{other}`"
                )))
            }
        };
        Ok(KernelSpec {
            name: name.to_string(),
            velocity: eta_expr(velocity, &params)?,
            params,
            kind,
            eta_box,
            min_gap: 0.3,
        })
    }

    pub fn from_config(cfg: &KernelConfig) -> Result<Self> {
        let p = &cfg.params;
        let mut spec = match (&cfg.g, cfg.name.as_str()) {
            (None, "additive_separable") => Self::additive_separable(
                cfg.phi.as_deref().unwrap_or("exp(eta)"),
                cfg.s.as_deref().unwrap_or("eta"),
            )?,
            (None, "multiplicative_general") => Self::multiplicative_general(
                cfg.phi.as_deref().unwrap_or("exp(eta)"),
                cfg.g_profile.as_deref().unwrap_or("cosh(eta)"),
                cfg.a_profile.as_deref().unwrap_or("eta"),
                cfg.s.as_deref().unwrap_or("eta"),
            )?,
            (None, name) => Self::builtin(name, p)?,
            (Some(g), name) => {
                let s = cfg.s.as_deref().ok_or_else(|| {
                    SolgasError::Config(format!("kernel `{name}` needs an `S` expression"))
                })?;
                KernelSpec {
                    name: name.to_string(),
                    params: p.clone(),
                    kind: KernelKind::Expression {
                        g: Expr::parse(g, &["mu", "eta"], p)?,
                        domain: cfg
                            .domain
                            .as_deref()
                            .map(|d| Expr::parse(d, &["mu", "eta"], p))
                            .transpose()?,
                    },
                    velocity: eta_expr(s, p)?,
                    eta_box: (-2.0, 2.0),
                    min_gap: 0.3,
                }
            }
        };
        if let Some(b) = cfg.eta_box {
            spec.eta_box = b;
        }
        Ok(spec)
    }

    /// The seven catalogue rows with default parameters.
    pub fn catalogue() -> Vec<KernelSpec> {
        BUILTIN_NAMES
            .iter()
            .map(|n| Self::builtin(n, &BTreeMap::new()).unwrap())
            .collect()
    }

    pub fn describe(&self) -> String {
        match &self.kind {
            KernelKind::Kdv => "G = ln|(eta-mu)/(eta+mu)|/(eta*mu)".into(),
            KernelKind::SinhGordon { .. } => "G = a^2 cosh(eta-mu)/(4 sinh^2(eta-mu) cosh(eta) cosh(mu))".into(),
            KernelKind::HardRod { .. } => "G = -a".into(),
            KernelKind::LiebLiniger { .. } => "G = 2a/(a^2+(eta-mu)^2)".into(),
            KernelKind::Dnls => {
                "G = ln(((eta-mu)^2-(A+B)^2)/((eta-mu)^2-(A-B)^2))/(2AB), A=sqrt(eta^2-1), B=sqrt(mu^2-1)".into()
            }
            KernelKind::AdditiveSeparable { phi } => format!("G = phi(mu)+phi(eta), phi = {phi}"),
            KernelKind::MultiplicativeGeneral { phi, g, a } => {
                format!("G = phi(mu) phi(eta) g(a(mu)-a(eta)), phi = {phi}, g = {g}, a = {a}")
            }
            KernelKind::Expression { g, .. } => format!("G = {g}"),
        }
    }

    /// Checks the validity domain at real arguments.
    pub fn check_pair(&self, mu: f64, eta: f64) -> Result<()> {
        let bad = |why: &str| {
            Err(SolgasError::Domain(format!(
                "{}: {why} at (mu, eta) = ({mu}, {eta})",
                self.name
            )))
        };
        if !mu.is_finite() || !eta.is_finite() {
            return bad("non-finite argument");
        }
        match &self.kind {
            KernelKind::Kdv => {
                if (mu - eta).abs() < SINGULARITY_GUARD || (mu + eta).abs() < SINGULARITY_GUARD {
                    return bad("log singularity mu = ±eta");
                }
                if mu.abs() < SINGULARITY_GUARD || eta.abs() < SINGULARITY_GUARD {
                    return bad("pole at mu*eta = 0");
                }
            }
            KernelKind::SinhGordon { .. } => {
                if (mu - eta).abs() < SINGULARITY_GUARD {
                    return bad("pole at mu = eta");
                }
            }
            KernelKind::Dnls => {
                if mu <= 1.0 || eta <= 1.0 {
                    return bad("DNLS branch requires mu, eta > 1");
                }
                if (mu - eta).abs() < SINGULARITY_GUARD {
                    return bad("log singularity mu = eta");
                }
                let (num, den) = dnls_log_parts(mu, eta);
                if !(num / den > 0.0) {
                    return bad("log argument not positive");
                }
            }
            KernelKind::Expression {
                domain: Some(d), ..
            } if !(d.eval(&[mu, eta]) > 0.0) => {
                return bad("domain predicate not positive");
            }
            _ => {}
        }
        Ok(())
    }

    pub fn check_eta(&self, eta: f64) -> Result<()> {
        if !eta.is_finite() {
            return Err(SolgasError::Domain(format!(
                "{}: non-finite eta",
                self.name
            )));
        }
        if matches!(self.kind, KernelKind::Dnls) && eta <= 1.0 {
            return Err(SolgasError::Domain(format!(
                "dnls: S requires eta > 1, got {eta}"
            )));
        }
        Ok(())
    }

    /// `G(μ, η)` at any scalar type, after a domain check on the real parts.
    pub fn g<T: Scalar>(&self, mu: T, eta: T) -> Result<T> {
        self.check_pair(mu.re(), eta.re())?;
        let v = self.g_raw(mu, eta);
        if !v.re().is_finite() {
            return Err(SolgasError::Domain(format!(
                "{}: non-finite kernel value at ({}, {})",
                self.name,
                mu.re(),
                eta.re()
            )));
        }
        Ok(v)
    }

    fn g_raw<T: Scalar>(&self, mu: T, eta: T) -> T {
        match &self.kind {
            KernelKind::Kdv => ((eta - mu) / (eta + mu)).abs().ln() / (eta * mu),
            KernelKind::SinhGordon { a } => {
                let d = eta - mu;
                let sh = d.sinh();
                d.cosh() * (a * a) / (sh * sh * 4.0 * eta.cosh() * mu.cosh())
            }
            KernelKind::HardRod { a } => T::cst(-a),
            KernelKind::LiebLiniger { a } => {
                let d = eta - mu;
                T::cst(2.0 * a) / (d * d + a * a)
            }
            KernelKind::Dnls => {
                let sa = (eta * eta - 1.0).sqrt();
                let sb = (mu * mu - 1.0).sqrt();
                let d2 = (eta - mu) * (eta - mu);
                let plus = sa + sb;
                let minus = sa - sb;
                ((d2 - plus * plus) / (d2 - minus * minus)).ln() / (sa * sb * 2.0)
            }
            KernelKind::AdditiveSeparable { phi } => phi.eval(&[mu]) + phi.eval(&[eta]),
            KernelKind::MultiplicativeGeneral { phi, g, a } => {
                let arg = a.eval(&[mu]) - a.eval(&[eta]);
                phi.eval(&[mu]) * phi.eval(&[eta]) * g.eval(&[arg])
            }
            KernelKind::Expression { g, .. } => g.eval(&[mu, eta]),
        }
    }

    /// `S(η)`.
    pub fn s<T: Scalar>(&self, eta: T) -> Result<T> {
        self.check_eta(eta.re())?;
        Ok(self.velocity.eval(&[eta]))
    }

    /// `S'(η)`.
    pub fn ds<T: Scalar>(&self, eta: T) -> Result<T> {
        self.check_eta(eta.re())?;
        Ok(self.velocity.eval(&[Dual::variable(eta)]).eps)
    }

    pub fn derivative_source(&self) -> DerivativeSource {
        match self.kind {
            KernelKind::Kdv | KernelKind::HardRod { .. } | KernelKind::LiebLiniger { .. } => {
                DerivativeSource::ClosedForm
            }
            _ => DerivativeSource::DualNumber,
        }
    }

    /// `(∂G/∂μ, ∂G/∂η)` at any scalar type.
    pub fn dg<T: Scalar>(&self, mu: T, eta: T) -> Result<(T, T)> {
        let g = self.g(mu, eta)?;
        Ok(match self.kind {
            KernelKind::Kdv => {
                let diff = eta * eta - mu * mu;
                (
                    -(g / mu) - (mu * diff).recip() * 2.0,
                    -(g / eta) + (eta * diff).recip() * 2.0,
                )
            }
            KernelKind::HardRod { .. } => (T::zero(), T::zero()),
            KernelKind::LiebLiniger { a } => {
                let d = eta - mu;
                let den = d * d + a * a;
                let v = d * (4.0 * a) / (den * den);
                (v, -v)
            }
            _ => (
                self.g_raw(Dual::variable(mu), Dual::constant(eta)).eps,
                self.g_raw(Dual::constant(mu), Dual::variable(eta)).eps,
            ),
        })
    }

    /// `∂G/∂η` only (the partial used throughout the reduced system).
    pub fn dg_deta<T: Scalar>(&self, mu: T, eta: T) -> Result<T> {
        Ok(self.dg(mu, eta)?.1)
    }

    pub fn eval_g(&self, mu: f64, eta: f64) -> Result<f64> {
        self.g(mu, eta)
    }

    pub fn eval_s(&self, eta: f64) -> Result<f64> {
        self.s(eta)
    }

    /// `(∂G/∂μ, ∂G/∂η)` cross-checked against central differences.
    pub fn eval_dg(&self, mu: f64, eta: f64) -> Result<(f64, f64)> {
        let (dmu, deta) = self.dg(mu, eta)?;
        let fd = |f: &dyn Fn(f64) -> Result<f64>, x: f64| -> Result<f64> {
            let h = 1e-5 * x.abs().max(1.0);
            Ok((f(x + h)? - f(x - h)?) / (2.0 * h))
        };
        let fd_mu = fd(&|m| self.g(m, eta), mu)?;
        let fd_eta = fd(&|e| self.g(mu, e), eta)?;
        for (exact, approx, which) in [(dmu, fd_mu, "mu"), (deta, fd_eta, "eta")] {
            let tol = (1e-6 * exact.abs()).max(1e-7);
            if (exact - approx).abs() > tol {
                return Err(SolgasError::Numerical(format!(
                    "{}: dG/d{which} = {exact} but finite difference gives {approx}",
                    self.name
                )));
            }
        }
        Ok((dmu, deta))
    }

    /// Central-difference derivative of `S`, for cross-checks.
    pub fn fd_ds(&self, eta: f64) -> f64 {
        central_difference(|e| self.velocity.eval(&[e]), eta, 1e-5 * eta.abs().max(1.0))
    }

    pub fn config(&self) -> KernelConfig {
        let mut cfg = KernelConfig {
            name: self.name.clone(),
            params: self.params.clone(),
            s: Some(self.velocity.source().to_string()),
            eta_box: Some(self.eta_box),
            ..Default::default()
        };
        match &self.kind {
            KernelKind::AdditiveSeparable { phi } => cfg.phi = Some(phi.source().into()),
            KernelKind::MultiplicativeGeneral { phi, g, a } => {
                cfg.phi = Some(phi.source().into());
                cfg.g_profile = Some(g.source().into());
                cfg.a_profile = Some(a.source().into());
            }
            KernelKind::Expression { g, domain } => {
                cfg.g = Some(g.source().into());
                cfg.domain = domain.as_ref().map(|d| d.source().into());
            }
            _ => {}
        }
        cfg
    }
}

fn dnls_log_parts(mu: f64, eta: f64) -> (f64, f64) {
    let sa = (eta * eta - 1.0).sqrt();
    let sb = (mu * mu - 1.0).sqrt();
    let d2 = (eta - mu).powi(2);
    (d2 - (sa + sb).powi(2), d2 - (sa - sb).powi(2))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn kdv_value_matches_table_row() {
        let k = KernelSpec::kdv();
        let v = k.eval_g(1.0, 2.0).unwrap();
        assert!((v - 0.5 * (1.0f64 / 3.0).ln()).abs() < 1e-15);
        assert!((v + 0.549306).abs() < 1e-6);
    }

    #[test]
    fn hard_rod_is_constant() {
        let k = KernelSpec::hard_rod(2.0);
        assert_eq!(k.eval_g(0.3, 7.0).unwrap(), -2.0);
        assert_eq!(k.eval_dg(0.3, 7.0).unwrap(), (0.0, 0.0));
    }

    #[test]
    fn velocities() {
        assert_eq!(KernelSpec::kdv().eval_s(2.0).unwrap(), 16.0);
        assert_eq!(KernelSpec::kdv().eval_s(0.0).unwrap(), 0.0);
        assert_eq!(KernelSpec::lieb_liniger(1.0).eval_s(3.0).unwrap(), 3.0);
        assert!(KernelSpec::dnls().eval_s(0.5).is_err());
    }

    #[test]
    fn lieb_liniger_derivative_vanishes_on_diagonal() {
        let k = KernelSpec::lieb_liniger(2.0);
        assert_eq!(k.eval_dg(1.0, 1.0).unwrap(), (0.0, 0.0));
        assert!((k.eval_g(0.0, 2.0).unwrap() - 0.5).abs() < 1e-15);
    }

    #[test]
    fn kdv_singular_set_is_guarded() {
        let k = KernelSpec::kdv();
        assert!(matches!(k.eval_g(1.0, 1.0), Err(SolgasError::Domain(_))));
        assert!(matches!(k.eval_g(1.0, -1.0), Err(SolgasError::Domain(_))));
        assert!(matches!(
            k.eval_g(1.0, 1.0 + 1e-10),
            Err(SolgasError::Domain(_))
        ));
        assert!(k.eval_g(1.0, 1.0 + 1e-6).is_ok());
    }

    #[test]
    fn dnls_domain() {
        let k = KernelSpec::dnls();
        assert!(k.eval_g(0.5, 2.0).is_err());
        let v = k.eval_g(1.5, 2.5).unwrap();
        assert!(v.is_finite());
        assert!((v - k.eval_g(2.5, 1.5).unwrap()).abs() < 1e-14);
    }

    #[test]
    fn kdv_closed_form_derivative_matches_dual_and_fd() {
        let k = KernelSpec::kdv();
        let (dmu, deta) = k.eval_dg(1.0, 2.0).unwrap();
        let g = |m: f64, e: f64| k.eval_g(m, e).unwrap();
        let h = 1e-5;
        assert!((dmu - (g(1.0 + h, 2.0) - g(1.0 - h, 2.0)) / (2.0 * h)).abs() < 1e-7);
        assert!((deta - (g(1.0, 2.0 + h) - g(1.0, 2.0 - h)) / (2.0 * h)).abs() < 1e-7);
        let dual_eta = k.g(Dual::constant(1.0), Dual::variable(2.0)).unwrap().eps;
        assert!((deta - dual_eta).abs() < 1e-14);
    }

    #[test]
    fn config_round_trip_for_expression_kernel() {
        let cfg: KernelConfig = serde_json::from_str(
            r#"{"name": "ll_expr", "params": {"a": 2.0}, "G": "2*a/(a^2+(eta-mu)^2)", "S": "eta"}"#,
        )
        .unwrap();
        let k = KernelSpec::from_config(&cfg).unwrap();
        let ll = KernelSpec::lieb_liniger(2.0);
        assert!((k.eval_g(0.3, 1.1).unwrap() - ll.eval_g(0.3, 1.1).unwrap()).abs() < 1e-15);
        let (a, b) = k.eval_dg(0.3, 1.1).unwrap();
        let (c, d) = ll.eval_dg(0.3, 1.1).unwrap();
        assert!((a - c).abs() < 1e-14 && (b - d).abs() < 1e-14);
        let back = KernelSpec::from_config(&k.config()).unwrap();
        assert_eq!(back.eval_g(0.3, 1.1).unwrap(), k.eval_g(0.3, 1.1).unwrap());
    }

    #[test]
    fn expression_domain_predicate() {
        let cfg: KernelConfig = serde_json::from_str(
            r#"{"name": "logk", "G": "ln(eta*mu)", "S": "eta", "domain": "eta*mu"}"#,
        )
        .unwrap();
        let k = KernelSpec::from_config(&cfg).unwrap();
        assert!(k.eval_g(-1.0, 2.0).is_err());
        assert!(k.eval_g(1.0, 2.0).is_ok());
    }

    #[test]
    fn builtin_config_bypasses_expressions() {
        let cfg: KernelConfig =
            serde_json::from_str(r#"{"name": "lieb_liniger", "params": {"a": 3.0}}"#).unwrap();
        let k = KernelSpec::from_config(&cfg).unwrap();
        assert_eq!(k.kind, KernelKind::LiebLiniger { a: 3.0 });
    }

    #[test]
    fn catalogue_has_seven_rows() {
        let cat = KernelSpec::catalogue();
        assert_eq!(cat.len(), 7);
        assert!(KernelSpec::builtin("nope", &BTreeMap::new()).is_err());
    }
}
