//! Runs every applicable check on a family instance.

use std::collections::BTreeMap;

use serde::Serialize;

use super::affinor::AffinorField;
use super::catalogue::{FamilyEntry, FamilyInstance, Regime};
use super::conditions::residual_cc_conditions;
use super::density::{flow_from_density, flow_mismatch, FLOW_TOL};
use crate::error::{Result, SolgasError};
use crate::geometry::{
    check_conformal, check_constant_curvature, check_flat, check_provenance,
    check_symmetry_commutes, check_tsarev, metric_upper, sample_points, AnsatzMetric,
    ClassificationReport, Provenance, SampleBox, SystemField, Verdict,
};
use crate::reduction::{split_coords, ReducedPoint};

/// Tolerance of the algebraic conditions.
pub const ALGEBRAIC_TOL: f64 = 1e-9;
/// Relative tolerance on the fitted curvature against the family's value.
pub const CURVATURE_MATCH_TOL: f64 = 1e-6;
/// At most this many samples feed the flow reconstruction.
pub const FLOW_POINTS: usize = 10;

#[derive(Clone, Debug, Serialize, PartialEq)]
pub struct AlgebraicReport {
    pub pair_residual: f64,
    pub diagonal_residual: f64,
    pub curvature: f64,
    pub tolerance: f64,
    pub verdict: Verdict,
}

#[derive(Clone, Debug, Serialize, PartialEq)]
pub struct FlowReport {
    pub evaluated: usize,
    pub skipped: usize,
    pub worst_mismatch: f64,
    pub tolerance: f64,
    pub verdict: Verdict,
}

#[derive(Clone, Debug, Serialize)]
pub struct VerificationBundle {
    pub family: String,
    pub kernel: String,
    pub regime: Regime,
    pub n: usize,
    pub samples: usize,
    pub seed: u64,
    pub constants: BTreeMap<String, f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub curvature: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub algebraic: Option<AlgebraicReport>,
    pub checks: Vec<ClassificationReport>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub flow: Option<FlowReport>,
    pub notes: Vec<String>,
    /// Conjunction of every verdict above.
    pub verdict: Verdict,
    pub expected: Verdict,
    pub expectation_met: bool,
}

impl VerificationBundle {
    pub fn check(&self, condition: &str) -> Option<&ClassificationReport> {
        self.checks.iter().find(|c| c.condition == condition)
    }

    /// Replaces tolerances by name: a check's condition, `algebraic` or
    /// `flow`. Unknown names are an error.
    pub fn with_tolerances(mut self, overrides: &BTreeMap<String, f64>) -> Result<Self> {
        for (name, &tol) in overrides {
            if !(tol > 0.0) {
                return Err(SolgasError::Config(format!(
                    "tolerance for `{name}` must be positive, got {tol}"
                )));
            }
            match name.as_str() {
                "algebraic" => {
                    if let Some(a) = self.algebraic.as_mut() {
                        a.tolerance = tol;
                        a.verdict = Verdict::from_bool(
                            a.pair_residual <= tol && a.diagonal_residual <= tol,
                        );
                    }
                }
                "flow" => {
                    if let Some(f) = self.flow.as_mut() {
                        f.tolerance = tol;
                        f.verdict = Verdict::from_bool(f.worst_mismatch <= tol);
                    }
                }
                other => match self.checks.iter_mut().find(|c| c.condition == other) {
                    Some(c) => c.rejudge(tol),
                    None => {
                        return Err(SolgasError::Config(format!(
                            "no check named `{other}` in this run"
                        )))
                    }
                },
            }
        }
        self.refresh();
        Ok(self)
    }

    pub fn expecting(mut self, expected: Verdict) -> Self {
        self.expected = expected;
        self.refresh();
        self
    }

    fn refresh(&mut self) {
        let ok = self.checks.iter().all(|c| c.passed())
            && self.algebraic.as_ref().is_none_or(|a| a.verdict.passed())
            && self.flow.as_ref().is_none_or(|f| f.verdict.passed());
        self.verdict = Verdict::from_bool(ok);
        self.expectation_met = self.verdict == self.expected;
    }
}

/// Seeded admissible points at which the instance's metric is defined.
pub fn instance_samples(inst: &FamilyInstance, count: usize, seed: u64) -> Result<Vec<Vec<f64>>> {
    let region = SampleBox::for_kernel(&inst.kernel);
    sample_points(&inst.kernel, &region, inst.n, count, seed, |x| {
        let (_, eta) = split_coords(x);
        if (0..inst.n).any(|i| inst.ansatz.s_i(i, eta[i]).abs() < 1e-6) {
            return false;
        }
        ReducedPoint::from_coords(&inst.kernel, x)
            .and_then(|p| metric_upper(&p, &inst.ansatz, &inst.kernel))
            .is_ok()
    })
}

/// The curvature-match pseudo-check.
fn curvature_match(fitted: &ClassificationReport, expected: f64) -> ClassificationReport {
    let c_hat = fitted.fitted_c.unwrap_or(f64::NAN);
    let mut res = (c_hat - expected).abs() / expected.abs().max(1.0);
    if res.is_nan() {
        res = f64::INFINITY;
    }
    ClassificationReport {
        condition: "curvature_match".into(),
        verdict: Verdict::from_bool(res <= CURVATURE_MATCH_TOL),
        worst_residual: res,
        worst_point: Vec::new(),
        fitted_c: Some(c_hat),
        c_spread: fitted.c_spread,
        samples: fitted.samples,
        provenance: Provenance::DualNumber,
        tolerance: CURVATURE_MATCH_TOL,
        residuals: BTreeMap::from([("expected_c".to_string(), expected)]),
    }
}

pub fn verify_instance(
    inst: &FamilyInstance,
    samples: usize,
    seed: u64,
) -> Result<VerificationBundle> {
    let pts = instance_samples(inst, samples, seed)?;
    let metric = AnsatzMetric::new(&inst.kernel, &inst.ansatz);
    let system = SystemField {
        kernel: &inst.kernel,
        n: inst.n,
    };
    let mut checks = Vec::new();
    let mut notes = inst.notes.clone();

    let algebraic = match (inst.regime, inst.curvature) {
        (Regime::Flat | Regime::ConstantCurvature, Some(c)) => {
            let etas: Vec<Vec<f64>> = pts.iter().map(|x| split_coords(x).1).collect();
            let (p, d) = residual_cc_conditions(&inst.kernel, &inst.ansatz, c, &etas)?;
            Some(AlgebraicReport {
                pair_residual: p,
                diagonal_residual: d,
                curvature: c,
                tolerance: ALGEBRAIC_TOL,
                verdict: Verdict::from_bool(p <= ALGEBRAIC_TOL && d <= ALGEBRAIC_TOL),
            })
        }
        _ => None,
    };

    let flat_instance = inst.curvature == Some(0.0);
    if inst.regime == Regime::Flat || flat_instance {
        checks.push(check_flat(&metric, &pts)?);
    }
    let wants_cc = match inst.regime {
        Regime::Flat => false,
        Regime::ConstantCurvature => true,
        Regime::Conformal => inst.curvature.is_some() && !flat_instance,
    };
    if wants_cc {
        let cc = check_constant_curvature(&metric, &pts)?;
        let matched = inst.curvature.map(|c| curvature_match(&cc, c));
        checks.push(cc);
        checks.extend(matched);
    }
    checks.push(check_tsarev(&metric, &system, &pts)?);
    if let Some(gens) = &inst.affinor {
        let field = AffinorField {
            kernel: &inst.kernel,
            gens,
        };
        checks.push(check_symmetry_commutes(&system, &field, &pts)?);
        if inst.regime == Regime::Conformal {
            checks.push(check_conformal(&metric, &field, &pts)?);
        }
    }
    checks.push(check_provenance(&metric, &pts)?);

    let flow = match (&inst.densities, inst.curvature) {
        (Some(h), Some(c)) => {
            let (mut evaluated, mut skipped, mut worst) = (0, 0, 0.0f64);
            for x in pts.iter().take(FLOW_POINTS) {
                match flow_from_density(&inst.kernel, &inst.ansatz, h, c, x) {
                    Ok(v) => {
                        let sys = ReducedPoint::from_coords(&inst.kernel, x)?.system();
                        worst = worst.max(flow_mismatch(&v, &sys));
                        evaluated += 1;
                    }
                    Err(SolgasError::Branch(_)) => skipped += 1,
                    Err(e) => return Err(e),
                }
            }
            if evaluated == 0 {
                notes.push(format!("flow reconstruction skipped: density branch unavailable at all {skipped} points"));
                None
            } else {
                if skipped > 0 {
                    notes.push(format!(
                        "flow reconstruction skipped {skipped} points outside the density branch"
                    ));
                }
                Some(FlowReport {
                    evaluated,
                    skipped,
                    worst_mismatch: worst,
                    tolerance: FLOW_TOL,
                    verdict: Verdict::from_bool(worst <= FLOW_TOL),
                })
            }
        }
        (Some(_), None) => {
            notes.push("flow reconstruction needs a known curvature".into());
            None
        }
        _ => None,
    };

    let mut bundle = VerificationBundle {
        family: inst.family.clone(),
        kernel: inst.kernel.name.clone(),
        regime: inst.regime,
        n: inst.n,
        samples: pts.len(),
        seed,
        constants: inst.ansatz.constants.clone(),
        curvature: inst.curvature,
        algebraic,
        checks,
        flow,
        notes,
        verdict: Verdict::Fail,
        expected: inst.expect,
        expectation_met: false,
    };
    bundle.refresh();
    Ok(bundle)
}

/// Instantiates `family` at `n` (or its fixed `n`) and verifies it.
pub fn verify_family(
    family: &FamilyEntry,
    n: Option<usize>,
    samples: usize,
    seed: u64,
) -> Result<VerificationBundle> {
    let n = n.or(family.fixed_n).unwrap_or(3);
    let mut bundle = verify_instance(&family.instantiate(n)?, samples, seed)?;
    bundle.constants = family.constants.clone();
    Ok(bundle)
}
