use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use super::{
    christoffel, field_derivatives, field_derivatives_fd, riemann, riemann_fd, MetricField,
    Provenance, TensorField11,
};
use crate::error::{Result, SolgasError};
use crate::linalg::Mat;

/// Relative tolerance shared by every tensor condition.
pub const DEFAULT_TOL: f64 = 1e-6;
/// Minimum sample count for the curvature checkers.
pub const MIN_SAMPLES: usize = 20;
/// Allowed spread of per-sample curvature estimates.
pub const C_SPREAD_TOL: f64 = 1e-6;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum Verdict {
    Pass,
    Fail,
}

impl Verdict {
    pub fn from_bool(ok: bool) -> Self {
        if ok {
            Verdict::Pass
        } else {
            Verdict::Fail
        }
    }

    pub fn passed(self) -> bool {
        self == Verdict::Pass
    }
}

impl std::fmt::Display for Verdict {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            Verdict::Pass => "PASS",
            Verdict::Fail => "FAIL",
        })
    }
}

/// Outcome of one condition over a sample set. Residuals are normalised
/// (see each checker) and compared against `tolerance`.
#[derive(Clone, Debug, Serialize, Deserialize, PartialEq)]
pub struct ClassificationReport {
    pub condition: String,
    pub verdict: Verdict,
    pub worst_residual: f64,
    pub worst_point: Vec<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub fitted_c: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub c_spread: Option<f64>,
    pub samples: usize,
    pub provenance: Provenance,
    pub tolerance: f64,
    /// Worst normalised residual of each sub-condition.
    pub residuals: BTreeMap<String, f64>,
}

impl ClassificationReport {
    pub fn passed(&self) -> bool {
        self.verdict.passed()
    }

    /// Re-derives the verdict against a new tolerance. The curvature fit
    /// keeps its spread requirement.
    pub fn rejudge(&mut self, tol: f64) {
        self.tolerance = tol;
        let fit_ok = self.condition != "constant_curvature"
            || (self.c_spread.is_some_and(|s| s <= C_SPREAD_TOL)
                && self.fitted_c.is_some_and(f64::is_finite));
        self.verdict = Verdict::from_bool(self.worst_residual <= tol && fit_ok);
    }
}

#[derive(Default)]
struct Worst {
    value: f64,
    point: Vec<f64>,
    parts: BTreeMap<String, f64>,
}

impl Worst {
    fn record(&mut self, part: &str, value: f64, x: &[f64]) {
        // NaN must never look like a pass
        let value = if value.is_nan() { f64::INFINITY } else { value };
        let e = self.parts.entry(part.to_string()).or_insert(0.0);
        *e = e.max(value);
        if self.point.is_empty() || value > self.value {
            self.value = value;
            self.point = x.to_vec();
        }
    }

    fn report(
        self,
        condition: &str,
        samples: usize,
        tol: f64,
        provenance: Provenance,
    ) -> ClassificationReport {
        ClassificationReport {
            condition: condition.to_string(),
            verdict: Verdict::from_bool(self.value <= tol),
            worst_residual: self.value,
            worst_point: self.point,
            fitted_c: None,
            c_spread: None,
            samples,
            provenance,
            tolerance: tol,
            residuals: self.parts,
        }
    }
}

fn require(samples: &[Vec<f64>], min: usize) -> Result<()> {
    if samples.len() < min {
        return Err(SolgasError::InsufficientSamples {
            required: min,
            got: samples.len(),
        });
    }
    Ok(())
}

fn ratio(num: f64, den: f64) -> f64 {
    if num == 0.0 {
        0.0
    } else {
        num / den.max(f64::MIN_POSITIVE)
    }
}

/// PASS iff `max |R^a_{bcd}| ≤ tol · scale` at every sample.
pub fn check_flat<M: MetricField>(
    metric: &M,
    samples: &[Vec<f64>],
) -> Result<ClassificationReport> {
    require(samples, MIN_SAMPLES)?;
    let mut worst = Worst::default();
    for x in samples {
        let b = riemann(metric, x)?;
        worst.record("riemann", b.riemann.max_abs() / b.scale, x);
    }
    Ok(worst.report("flat", samples.len(), DEFAULT_TOL, Provenance::DualNumber))
}

/// Fits `R^a_{bcd} = c (δ^a_c g_{bd} − δ^a_d g_{bc})` by weighted least
/// squares (weights `1/scale²`). PASS iff the fit residual is within
/// `tol · scale` everywhere and the per-sample estimates of `c` agree.
pub fn check_constant_curvature<M: MetricField>(
    metric: &M,
    samples: &[Vec<f64>],
) -> Result<ClassificationReport> {
    require(samples, MIN_SAMPLES)?;
    let mut per_sample = Vec::with_capacity(samples.len());
    let (mut num, mut den) = (0.0, 0.0);
    for x in samples {
        let b = riemann(metric, x)?;
        let n = b.riemann.dim;
        let g = &b.g_lower;
        let mut model = Vec::with_capacity(n.pow(4));
        let mut actual = Vec::with_capacity(n.pow(4));
        for a in 0..n {
            for bb in 0..n {
                for c in 0..n {
                    for d in 0..n {
                        let mut k = 0.0;
                        if a == c {
                            k += g[(bb, d)];
                        }
                        if a == d {
                            k -= g[(bb, c)];
                        }
                        model.push(k);
                        actual.push(b.riemann.get(a, bb, c, d));
                    }
                }
            }
        }
        let rk: f64 = model.iter().zip(&actual).map(|(k, r)| k * r).sum();
        let kk: f64 = model.iter().map(|k| k * k).sum();
        let w = b.scale.powi(-2);
        num += w * rk;
        den += w * kk;
        per_sample.push((x, rk / kk, model, actual, b.scale));
    }
    let c_hat = num / den;
    let mut worst = Worst::default();
    let (mut lo, mut hi) = (f64::INFINITY, f64::NEG_INFINITY);
    for (x, c_s, model, actual, scale) in &per_sample {
        lo = lo.min(*c_s);
        hi = hi.max(*c_s);
        let res = model
            .iter()
            .zip(actual)
            .fold(0.0f64, |m, (k, r)| m.max((r - c_hat * k).abs()));
        worst.record("fit", res / scale, x);
    }
    let spread = hi - lo;
    let spread_ok = spread <= C_SPREAD_TOL;
    let mut rep = worst.report(
        "constant_curvature",
        samples.len(),
        DEFAULT_TOL,
        Provenance::DualNumber,
    );
    rep.residuals.insert("c_spread".into(), spread);
    rep.fitted_c = Some(c_hat);
    rep.c_spread = Some(spread);
    if !spread_ok || !c_hat.is_finite() {
        rep.verdict = Verdict::Fail;
    }
    Ok(rep)
}

/// `∇_m V^j_k` and the magnitude of its terms, indexed `[m][j][k]`.
fn covariant_11(
    gamma: &super::Gamma<f64>,
    v: &Mat<f64>,
    dv: &[Mat<f64>],
) -> (Vec<Vec<Vec<f64>>>, Vec<Vec<Vec<f64>>>) {
    let n = v.rows();
    let mut val = vec![vec![vec![0.0; n]; n]; n];
    let mut mag = vec![vec![vec![0.0; n]; n]; n];
    for m in 0..n {
        for j in 0..n {
            for k in 0..n {
                let mut s = dv[m][(j, k)];
                let mut a = s.abs();
                for t in 0..n {
                    let p = gamma.get(j, m, t) * v[(t, k)];
                    let q = gamma.get(t, m, k) * v[(j, t)];
                    s += p - q;
                    a += p.abs() + q.abs();
                }
                val[m][j][k] = s;
                mag[m][j][k] = a;
            }
        }
    }
    (val, mag)
}

/// `g^{is} V^j_s = g^{js} V^i_s` and `∇^i V^j_k = ∇^j V^i_k`, each relative
/// to the magnitude of its terms.
pub fn check_tsarev<M: MetricField, F: TensorField11>(
    metric: &M,
    field: &F,
    samples: &[Vec<f64>],
) -> Result<ClassificationReport> {
    require(samples, 1)?;
    let mut worst = Worst::default();
    for x in samples {
        let (_, gu, gamma) = christoffel(metric, x.as_slice())?;
        let (v, dv) = field_derivatives(field, x)?;
        let n = v.rows();
        let (mut r11, mut m11) = (0.0f64, 0.0f64);
        for i in 0..n {
            for j in 0..n {
                let (mut a, mut b, mut mag) = (0.0, 0.0, 0.0);
                for s in 0..n {
                    a += gu[(i, s)] * v[(j, s)];
                    b += gu[(j, s)] * v[(i, s)];
                    mag += (gu[(i, s)] * v[(j, s)]).abs();
                }
                r11 = r11.max((a - b).abs());
                m11 = m11.max(mag);
            }
        }
        worst.record("symmetry", ratio(r11, m11), x);

        let (nab, nab_mag) = covariant_11(&gamma, &v, &dv);
        let mut up = vec![vec![vec![0.0; n]; n]; n];
        let mut m12 = 0.0f64;
        for i in 0..n {
            for j in 0..n {
                for k in 0..n {
                    let mut s = 0.0;
                    let mut a = 0.0;
                    for m in 0..n {
                        s += gu[(i, m)] * nab[m][j][k];
                        a += gu[(i, m)].abs() * nab_mag[m][j][k];
                    }
                    up[i][j][k] = s;
                    m12 = m12.max(a);
                }
            }
        }
        let mut r12 = 0.0f64;
        for i in 0..n {
            for j in 0..n {
                for k in 0..n {
                    r12 = r12.max((up[i][j][k] - up[j][i][k]).abs());
                }
            }
        }
        worst.record("covariant", ratio(r12, m12), x);
    }
    Ok(worst.report("tsarev", samples.len(), DEFAULT_TOL, Provenance::DualNumber))
}

#[derive(Clone, Copy)]
enum CurvatureForm {
    /// `w^i_k w^j_l − w^j_k w^i_l`
    Ferapontov,
    /// `w^i_k δ^j_l + w^j_l δ^i_k − w^j_k δ^i_l − w^i_l δ^j_k`
    Conformal,
}

fn check_nonlocal<M: MetricField, F: TensorField11>(
    metric: &M,
    affinor: &F,
    samples: &[Vec<f64>],
    form: CurvatureForm,
    name: &str,
) -> Result<ClassificationReport> {
    require(samples, 1)?;
    let mut worst = Worst::default();
    for x in samples {
        let b = riemann(metric, x)?;
        let (w, dw) = field_derivatives(affinor, x)?;
        let (gl, gu) = (&b.g_lower, &b.g_upper);
        let n = w.rows();
        let delta = |a: usize, b: usize| if a == b { 1.0 } else { 0.0 };

        let (mut rs, mut ms) = (0.0f64, 0.0f64);
        for i in 0..n {
            for j in 0..n {
                let (mut a, mut c, mut mag) = (0.0, 0.0, 0.0);
                for s in 0..n {
                    a += gl[(i, s)] * w[(s, j)];
                    c += gl[(j, s)] * w[(s, i)];
                    mag += (gl[(i, s)] * w[(s, j)]).abs();
                }
                rs = rs.max((a - c).abs());
                ms = ms.max(mag);
            }
        }
        worst.record("symmetry", ratio(rs, ms), x);

        // ∇_k w^i_j stored as nab[k][i][j]
        let (nab, nab_mag) = covariant_11(&b.gamma, &w, &dw);
        let (mut rc, mut mc) = (0.0f64, 0.0f64);
        for k in 0..n {
            for i in 0..n {
                for j in 0..n {
                    rc = rc.max((nab[k][i][j] - nab[j][i][k]).abs());
                    mc = mc.max(nab_mag[k][i][j]);
                }
            }
        }
        worst.record("codazzi", ratio(rc, mc), x);

        let rup = b.riemann.raise_second(gu);
        let (mut rr, mut mr) = (0.0f64, b.scale.max(rup.max_abs()));
        for i in 0..n {
            for j in 0..n {
                for k in 0..n {
                    for l in 0..n {
                        let f = match form {
                            CurvatureForm::Ferapontov => {
                                w[(i, k)] * w[(j, l)] - w[(j, k)] * w[(i, l)]
                            }
                            CurvatureForm::Conformal => {
                                w[(i, k)] * delta(j, l) + w[(j, l)] * delta(i, k)
                                    - w[(j, k)] * delta(i, l)
                                    - w[(i, l)] * delta(j, k)
                            }
                        };
                        mr = mr.max(f.abs());
                        rr = rr.max((rup.get(i, j, k, l) - f).abs());
                    }
                }
            }
        }
        worst.record("curvature", ratio(rr, mr), x);
    }
    Ok(worst.report(name, samples.len(), DEFAULT_TOL, Provenance::DualNumber))
}

/// Ferapontov conditions with one nonlocal tail: `g w` symmetric, `w`
/// Codazzi, and `R^{ij}_{kl} = w^i_k w^j_l − w^j_k w^i_l` with
/// `R^{ij}_{kl} = g^{js} R^i_{skl}`.
pub fn check_ferapontov_n1<M: MetricField, F: TensorField11>(
    metric: &M,
    affinor: &F,
    samples: &[Vec<f64>],
) -> Result<ClassificationReport> {
    check_nonlocal(
        metric,
        affinor,
        samples,
        CurvatureForm::Ferapontov,
        "ferapontov_n1",
    )
}

/// As [`check_ferapontov_n1`] with the conformally flat curvature form.
pub fn check_conformal<M: MetricField, F: TensorField11>(
    metric: &M,
    affinor: &F,
    samples: &[Vec<f64>],
) -> Result<ClassificationReport> {
    check_nonlocal(
        metric,
        affinor,
        samples,
        CurvatureForm::Conformal,
        "conformal",
    )
}

/// The flows `u_t = V u_x` and `u_τ = W u_x` commute: the `u_xx`
/// coefficient `VW − WV` and the symmetrised `u_x ⊗ u_x` coefficient of
/// `∂_τ u_t − ∂_t u_τ` both vanish.
pub fn check_symmetry_commutes<V: TensorField11, W: TensorField11>(
    v_field: &V,
    w_field: &W,
    samples: &[Vec<f64>],
) -> Result<ClassificationReport> {
    require(samples, 1)?;
    let mut worst = Worst::default();
    for (idx, x) in samples.iter().enumerate() {
        let (v, dv) = field_derivatives(v_field, x)?;
        let (w, dw) = field_derivatives(w_field, x)?;
        if idx == 0 {
            for (field, d, name) in [(true, &dv, "V"), (false, &dw, "W")] {
                let (_, fd) = if field {
                    field_derivatives_fd(v_field, x)?
                } else {
                    field_derivatives_fd(w_field, x)?
                };
                for (a, b) in d.iter().zip(&fd) {
                    let diff = a.sub(b).max_abs();
                    if diff > 1e-5 * a.max_abs().max(1.0) {
                        return Err(SolgasError::Numerical(format!(
                            "derivative of {name}: dual and finite difference differ by {diff:e}"
                        )));
                    }
                }
            }
        }
        let n = v.rows();
        let (mut rc, mut mc) = (0.0f64, 0.0f64);
        for a in 0..n {
            for b in 0..n {
                let (mut s, mut m) = (0.0, 0.0);
                for k in 0..n {
                    let p = v[(a, k)] * w[(k, b)];
                    let q = w[(a, k)] * v[(k, b)];
                    s += p - q;
                    m += p.abs() + q.abs();
                }
                rc = rc.max(s.abs());
                mc = mc.max(m);
            }
        }
        worst.record("commutator", ratio(rc, mc), x);

        let mut t = vec![vec![vec![0.0; n]; n]; n];
        let mut mt = 0.0f64;
        for a in 0..n {
            for b in 0..n {
                for c in 0..n {
                    let (mut s, mut m) = (0.0, 0.0);
                    for k in 0..n {
                        let terms = [
                            dv[k][(a, c)] * w[(k, b)],
                            v[(a, k)] * dw[b][(k, c)],
                            -dw[k][(a, c)] * v[(k, b)],
                            -w[(a, k)] * dv[b][(k, c)],
                        ];
                        for term in terms {
                            s += term;
                            m += term.abs();
                        }
                    }
                    t[a][b][c] = s;
                    mt = mt.max(m);
                }
            }
        }
        let mut rt = 0.0f64;
        for a in 0..n {
            for b in 0..n {
                for c in 0..n {
                    rt = rt.max((t[a][b][c] + t[a][c][b]).abs());
                }
            }
        }
        worst.record("first_order", ratio(rt, mt), x);
    }
    Ok(worst.report(
        "symmetry_commutes",
        samples.len(),
        DEFAULT_TOL,
        Provenance::DualNumber,
    ))
}

/// Nested-dual Riemann vs dual-over-finite-difference Riemann. The residual
/// is `max |ΔR| / max(1e-5, 1e-4·scale)`; PASS iff it is at most 1.
pub fn check_provenance<M: MetricField>(
    metric: &M,
    samples: &[Vec<f64>],
) -> Result<ClassificationReport> {
    require(samples, 1)?;
    let mut worst = Worst::default();
    for x in samples {
        let dual = riemann(metric, x)?;
        let fd = riemann_fd(metric, x)?;
        let allowed = 1e-5f64.max(1e-4 * dual.scale);
        worst.record("riemann", dual.riemann.max_diff(&fd.riemann) / allowed, x);
    }
    Ok(worst.report(
        "dual_vs_finite_difference",
        samples.len(),
        1.0,
        Provenance::FiniteDifference,
    ))
}
