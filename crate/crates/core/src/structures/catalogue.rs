//! Known Hamiltonian structure families and user-supplied ones.

use std::collections::BTreeMap;
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::affinor::AffinorGenerators;
use super::conditions::fit_cc_template;
use super::density::DensityFn;
use crate::error::{Result, SolgasError};
use crate::expr::Expr;
use crate::geometry::{AnsatzSource, StructureAnsatz, Verdict};
use crate::kernels::{KernelConfig, KernelKind, KernelSpec};

/// Environment variable naming the directory of user kernel/family files.
pub const CONFIG_DIR_ENV: &str = "SOLGAS_CONFIG_DIR";

/// Grid and degree used by the Lieb-Liniger constant-curvature template.
pub const TEMPLATE_DEGREE: usize = 4;
pub const TEMPLATE_GRID: usize = 13;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Regime {
    Flat,
    ConstantCurvature,
    Conformal,
}

impl std::fmt::Display for Regime {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            Regime::Flat => "flat",
            Regime::ConstantCurvature => "constant_curvature",
            Regime::Conformal => "conformal",
        })
    }
}

#[derive(Clone, Debug, PartialEq)]
enum Builder {
    Row {
        s: &'static str,
        chi: &'static str,
        h: &'static str,
    },
    AdditiveFlat,
    GeneralFlat,
    KdvCc,
    KdvCcN2,
    AdditiveCc,
    LiebLinigerCc,
    KdvII,
    LiebLinigerII,
    User(Box<FamilyConfig>),
}

/// A family of structures with free constants, bound to a kernel.
#[derive(Clone, Debug, PartialEq)]
pub struct FamilyEntry {
    pub name: String,
    pub kernel: KernelSpec,
    pub regime: Regime,
    pub constants: BTreeMap<String, f64>,
    /// Families that only exist for one component count.
    pub fixed_n: Option<usize>,
    /// `Fail` for families recorded as non-existence results.
    pub expect: Verdict,
    pub description: String,
    builder: Builder,
}

/// A family instantiated at a component count.
#[derive(Clone, Debug)]
pub struct FamilyInstance {
    pub family: String,
    pub n: usize,
    pub kernel: KernelSpec,
    pub regime: Regime,
    pub ansatz: StructureAnsatz,
    /// Curvature of the metric in the sign convention of the constant
    /// curvature conditions; `Some(0.0)` for flat instances.
    pub curvature: Option<f64>,
    pub densities: Option<Vec<DensityFn>>,
    pub affinor: Option<AffinorGenerators>,
    pub expect: Verdict,
    pub notes: Vec<String>,
}

fn consts(pairs: &[(&str, f64)]) -> BTreeMap<String, f64> {
    pairs.iter().map(|(k, v)| (k.to_string(), *v)).collect()
}

fn lit(v: f64) -> String {
    format!("({v:?})")
}

fn kernel_profiles(kernel: &KernelSpec) -> Result<(Expr, Option<Expr>)> {
    match &kernel.kind {
        KernelKind::AdditiveSeparable { phi } => Ok((phi.clone(), None)),
        KernelKind::MultiplicativeGeneral { phi, a, .. } => Ok((phi.clone(), Some(a.clone()))),
        _ => Err(SolgasError::Config(format!(
            "kernel `{}` has no phi profile",
            kernel.name
        ))),
    }
}

impl FamilyEntry {
    fn builtin(
        name: &str,
        kernel: KernelSpec,
        regime: Regime,
        constants: BTreeMap<String, f64>,
        fixed_n: Option<usize>,
        description: &str,
        builder: Builder,
    ) -> Self {
        FamilyEntry {
            name: name.into(),
            kernel,
            regime,
            constants,
            fixed_n,
            expect: Verdict::Pass,
            description: description.into(),
            builder,
        }
    }

    /// All built-in families with default constants.
    pub fn builtins() -> Vec<FamilyEntry> {
        use Regime::*;
        let row = |s, chi, h| Builder::Row { s, chi, h };
        let mut out = vec![
            Self::builtin(
                "kdv_flat",
                KernelSpec::kdv(),
                Flat,
                consts(&[]),
                None,
                "s = eta, chi = -2, h = -4/3 eta^2",
                row("eta", "-2", "-4/3*eta^2"),
            ),
            Self::builtin(
                "sinh_gordon_flat",
                KernelSpec::sinh_gordon(1.0),
                Flat,
                consts(&[]),
                None,
                "s = 1, chi = -2 tanh(eta), h = -1",
                row("1", "-2*tanh(eta)", "-1"),
            ),
            Self::builtin(
                "lieb_liniger_flat",
                KernelSpec::lieb_liniger(1.0),
                Flat,
                consts(&[]),
                None,
                "s = 1, chi = 0, h = -eta^2/2",
                row("1", "0", "-eta^2/2"),
            ),
            Self::builtin(
                "dnls_flat",
                KernelSpec::dnls(),
                Flat,
                consts(&[]),
                None,
                "s = 1 - eta^2, chi = 2 eta, h = 1",
                row("1-eta^2", "2*eta", "1"),
            ),
            Self::builtin(
                "additive_separable_flat",
                KernelSpec::builtin("additive_separable", &BTreeMap::new()).unwrap(),
                Flat,
                consts(&[]),
                None,
                "s = phi/phi', chi = 1, h = -sqrt(phi) int phi' S / phi^(3/2)",
                Builder::AdditiveFlat,
            ),
            Self::builtin(
                "general_flat",
                KernelSpec::builtin("multiplicative_general", &BTreeMap::new()).unwrap(),
                Flat,
                consts(&[]),
                None,
                "s = 1/a', chi = 2 phi'/(a' phi), h = -phi int S a'/phi",
                Builder::GeneralFlat,
            ),
            Self::builtin(
                "kdv_cc",
                KernelSpec::kdv(),
                ConstantCurvature,
                consts(&[("c", 1.0), ("ct", 1.0)]),
                None,
                "s = c/2 eta^3 - ct/2 eta, chi = ct - c eta^2, psi = c; curvature -c",
                Builder::KdvCc,
            ),
            Self::builtin(
                "kdv_cc_n2",
                KernelSpec::kdv(),
                ConstantCurvature,
                consts(&[("c", 1.0), ("c1", 1.0), ("c2", 1.0)]),
                Some(2),
                "s = -(c1+c2)/4 eta - c/2 eta^3, chi_i = c_i + c eta^2, psi = -c; curvature c",
                Builder::KdvCcN2,
            ),
            Self::builtin(
                "additive_separable_cc",
                KernelSpec::builtin("additive_separable", &BTreeMap::new()).unwrap(),
                ConstantCurvature,
                consts(&[("c", 1.0), ("ct", 1.0)]),
                None,
                "s = (2 ct phi - c)/(2 phi'), chi = ct, psi = -c; curvature c",
                Builder::AdditiveCc,
            ),
            Self::builtin(
                "kdv_ii",
                KernelSpec::kdv(),
                Conformal,
                consts(&[
                    ("c1", 1.0),
                    ("c2", 1.0),
                    ("c3", 1.0),
                    ("c4", 1.0),
                    ("c5", 1.0),
                ]),
                Some(2),
                "quartic s and g_i with affinor generators c2 eta^2 + c3, c2 eta^2 + c1",
                Builder::KdvII,
            ),
            Self::builtin(
                "lieb_liniger_ii",
                KernelSpec::lieb_liniger(1.0),
                Conformal,
                consts(&[("c1", 1.0), ("c2", 1.0), ("c3", 1.0)]),
                Some(2),
                "s = c3, g_1 = c2 r + 2 c1 = -g_2, affinor generators -c1, c1",
                Builder::LiebLinigerII,
            ),
        ];
        let mut ll = Self::builtin(
            "lieb_liniger_cc",
            KernelSpec::lieb_liniger(1.0),
            ConstantCurvature,
            consts(&[("c", 1.0)]),
            None,
            "least-squares polynomial template; no structure exists for c != 0",
            Builder::LiebLinigerCc,
        );
        ll.expect = Verdict::Fail;
        out.push(ll);
        out
    }

    /// Replaces the named constants. Unknown names are rejected.
    pub fn with_constants(mut self, overrides: &BTreeMap<String, f64>) -> Result<Self> {
        for (k, v) in overrides {
            match self.constants.get_mut(k) {
                Some(slot) => *slot = *v,
                None => {
                    return Err(SolgasError::Config(format!(
                        "family `{}` has no constant `{k}` (known: {:?})",
                        self.name,
                        self.constants.keys().collect::<Vec<_>>()
                    )))
                }
            }
        }
        if self.builder == Builder::LiebLinigerCc {
            self.expect = Verdict::from_bool(self.constants["c"] == 0.0);
        }
        Ok(self)
    }

    pub fn with_kernel(mut self, kernel: KernelSpec) -> Self {
        self.kernel = kernel;
        self
    }

    fn c(&self, name: &str) -> f64 {
        self.constants[name]
    }

    pub fn instantiate(&self, n: usize) -> Result<FamilyInstance> {
        if n == 0 {
            return Err(SolgasError::Config("n must be at least 1".into()));
        }
        if let Some(m) = self.fixed_n {
            if m != n {
                return Err(SolgasError::Config(format!(
                    "family `{}` exists only for n = {m}",
                    self.name
                )));
            }
        }
        let k = &self.kernel;
        let none = BTreeMap::new();
        let mut inst = FamilyInstance {
            family: self.name.clone(),
            n,
            kernel: k.clone(),
            regime: self.regime,
            ansatz: StructureAnsatz::uniform(n, "1", "0", "0", "0", &none)?,
            curvature: None,
            densities: None,
            affinor: None,
            expect: self.expect,
            notes: Vec::new(),
        };
        let eta0 = k.eta_box.0;
        match &self.builder {
            Builder::Row { s, chi, h } => {
                inst.ansatz = StructureAnsatz::uniform(n, s, "0", chi, "0", &none)?;
                inst.curvature = Some(0.0);
                inst.densities = Some(vec![DensityFn::closed(h)?; n]);
            }
            Builder::AdditiveFlat => {
                let (phi, _) = kernel_profiles(k)?;
                let s = Expr::compose("{0}/{1}", &[&phi, &phi.derivative(0)], &["eta"])?;
                inst.ansatz = StructureAnsatz::uniform(n, &s.canonical(), "0", "1", "0", &none)?;
                inst.curvature = Some(0.0);
                inst.densities = Some(vec![DensityFn::additive_flat(&phi, &k.velocity, eta0)?; n]);
            }
            Builder::GeneralFlat => {
                let (phi, a) = kernel_profiles(k)?;
                let a = a.expect("general kernel carries a profile");
                let da = a.derivative(0);
                let s = Expr::compose("1/{0}", &[&da], &["eta"])?;
                let chi = Expr::compose(
                    "2*{0}/({1}*{2})",
                    &[&phi.derivative(0), &da, &phi],
                    &["eta"],
                )?;
                inst.ansatz =
                    StructureAnsatz::uniform(n, &s.canonical(), "0", &chi.canonical(), "0", &none)?;
                inst.curvature = Some(0.0);
                inst.densities = Some(vec![
                    DensityFn::general_flat(&phi, &a, &k.velocity, eta0)?;
                    n
                ]);
            }
            Builder::KdvCc => {
                let (c, ct) = (self.c("c"), self.c("ct"));
                inst.ansatz = StructureAnsatz::uniform(
                    n,
                    "c/2*eta^3 - ct/2*eta",
                    "0",
                    "ct - c*eta^2",
                    "c",
                    &self.constants,
                )?;
                inst.curvature = Some(-c);
                inst.densities = Some(vec![DensityFn::kdv_cc(c, ct); n]);
            }
            Builder::KdvCcN2 => {
                let (c, c1, c2) = (self.c("c"), self.c("c1"), self.c("c2"));
                let src = AnsatzSource {
                    s: vec!["-(c1+c2)/4*eta - c/2*eta^3".into()],
                    phi: vec!["0".into()],
                    chi: vec!["c1 + c*eta^2".into(), "c2 + c*eta^2".into()],
                    psi: vec!["-c".into()],
                };
                inst.ansatz = StructureAnsatz::from_source(n, &src, &self.constants)?;
                inst.curvature = Some(c);
                if c1 == c2 {
                    inst.densities = Some(vec![DensityFn::kdv_cc(-c, c1); n]);
                } else {
                    inst.notes.push("no density known for c1 != c2".into());
                }
            }
            Builder::AdditiveCc => {
                let (phi, _) = kernel_profiles(k)?;
                let (c, ct) = (self.c("c"), self.c("ct"));
                let s = Expr::compose(
                    &format!("(2*{0}*{{0}} - {1})/(2*{{1}})", lit(ct), lit(c)),
                    &[&phi, &phi.derivative(0)],
                    &["eta"],
                )?;
                inst.ansatz =
                    StructureAnsatz::uniform(n, &s.canonical(), "0", "ct", "-c", &self.constants)?;
                inst.curvature = Some(c);
                inst.densities = Some(vec![
                    DensityFn::additive_cc(&phi, &k.velocity, c, ct, eta0)?;
                    n
                ]);
            }
            Builder::LiebLinigerCc => {
                let c = self.c("c");
                inst.curvature = Some(c);
                if c == 0.0 {
                    inst.ansatz = StructureAnsatz::uniform(n, "1", "0", "0", "0", &none)?;
                    inst.densities = Some(vec![DensityFn::closed("-eta^2/2")?; n]);
                    inst.notes.push("c = 0: the flat structure".into());
                } else {
                    let (lo, hi) = k.eta_box;
                    let grid: Vec<f64> = (0..TEMPLATE_GRID)
                        .map(|i| lo + (hi - lo) * i as f64 / (TEMPLATE_GRID - 1) as f64)
                        .collect();
                    let fit = fit_cc_template(k, c, TEMPLATE_DEGREE, &grid, k.min_gap)?;
                    inst.notes.push(format!(
                        "template pair residual on the fitting grid: {:e}",
                        fit.residual
                    ));
                    inst.ansatz = fit.ansatz(n)?;
                }
            }
            Builder::KdvII => {
                let (c1, c2, c3, c4, c5) = (
                    self.c("c1"),
                    self.c("c2"),
                    self.c("c3"),
                    self.c("c4"),
                    self.c("c5"),
                );
                let src = AnsatzSource {
                    s: vec!["-(2*c2*eta^4 + 2*c1*eta^2 + 2*c3*eta^2 + c4 + c5)*eta/4".into()],
                    phi: vec!["0".into()],
                    chi: vec![
                        "c2*eta^4 + (c1+c3)*eta^2 + c4".into(),
                        "c2*eta^4 + (c1+c3)*eta^2 + c5".into(),
                    ],
                    psi: vec!["-2*c2*eta^2 - 2*c3".into()],
                };
                inst.ansatz = StructureAnsatz::from_source(n, &src, &self.constants)?;
                inst.affinor = Some(AffinorGenerators::new(
                    2,
                    &["c2*eta1^2 + c3".into(), "c2*eta2^2 + c1".into()],
                    &["0".into(), "0".into()],
                    &self.constants,
                )?);
                if c2 == 0.0 && c1 == c3 {
                    // the affinor is c1·Id and the metric has constant curvature 2c1
                    inst.curvature = Some(2.0 * c1);
                    if c4 == c5 {
                        inst.densities = Some(vec![DensityFn::kdv_cc(-2.0 * c1, c4); 2]);
                    }
                }
            }
            Builder::LiebLinigerII => {
                let (c1, c2) = (self.c("c1"), self.c("c2"));
                let src = AnsatzSource {
                    s: vec!["c3".into()],
                    phi: vec!["0".into()],
                    chi: vec!["c2".into(), "-c2".into()],
                    psi: vec!["2*c1".into(), "-2*c1".into()],
                };
                inst.ansatz = StructureAnsatz::from_source(n, &src, &self.constants)?;
                inst.affinor = Some(AffinorGenerators::new(
                    2,
                    &["-c1".into(), "c1".into()],
                    &["0".into(), "0".into()],
                    &self.constants,
                )?);
                if c1 == 0.0 {
                    inst.curvature = Some(0.0);
                    if c2 == 0.0 {
                        inst.densities = Some(vec![
                            DensityFn::closed(&format!(
                                "-eta^2/(2*{})",
                                lit(self.c("c3"))
                            ))?;
                            2
                        ]);
                    }
                }
            }
            Builder::User(cfg) => cfg.fill(&mut inst, &self.constants)?,
        }
        inst.ansatz = inst.ansatz.with_family(&self.name);
        Ok(inst)
    }
}

/// One string, or one per component.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum OneOrMany {
    One(String),
    Many(Vec<String>),
}

impl OneOrMany {
    fn list(&self) -> Vec<String> {
        match self {
            OneOrMany::One(s) => vec![s.clone()],
            OneOrMany::Many(v) => v.clone(),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum KernelRef {
    Name(String),
    Config(KernelConfig),
}

impl KernelRef {
    pub fn resolve(&self, user: &[KernelSpec]) -> Result<KernelSpec> {
        match self {
            KernelRef::Name(name) => match user.iter().find(|k| &k.name == name) {
                Some(k) => Ok(k.clone()),
                None => KernelSpec::builtin(name, &BTreeMap::new()),
            },
            KernelRef::Config(cfg) => KernelSpec::from_config(cfg),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct AffinorConfig {
    pub phi: Vec<String>,
    pub mu: Vec<String>,
}

/// User family file.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FamilyConfig {
    pub name: String,
    pub kernel: KernelRef,
    pub regime: Regime,
    #[serde(default)]
    pub constants: BTreeMap<String, f64>,
    pub s: OneOrMany,
    #[serde(default = "zero")]
    pub phi: OneOrMany,
    #[serde(default = "zero")]
    pub chi: OneOrMany,
    #[serde(default = "zero")]
    pub psi: OneOrMany,
    /// Closed-form `h_i(η)`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub density: Option<OneOrMany>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub affinor: Option<AffinorConfig>,
    /// Expected curvature; flat families default to 0.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub curvature: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub n: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub expect: Option<Verdict>,
}

fn zero() -> OneOrMany {
    OneOrMany::One("0".into())
}

impl FamilyConfig {
    pub fn into_entry(self, user_kernels: &[KernelSpec]) -> Result<FamilyEntry> {
        let kernel = self.kernel.resolve(user_kernels)?;
        Ok(FamilyEntry {
            name: self.name.clone(),
            kernel,
            regime: self.regime,
            constants: self.constants.clone(),
            fixed_n: self.n,
            expect: self.expect.unwrap_or(Verdict::Pass),
            description: "user family".into(),
            builder: Builder::User(Box::new(self)),
        })
    }

    fn fill(&self, inst: &mut FamilyInstance, constants: &BTreeMap<String, f64>) -> Result<()> {
        let src = AnsatzSource {
            s: self.s.list(),
            phi: self.phi.list(),
            chi: self.chi.list(),
            psi: self.psi.list(),
        };
        inst.ansatz = StructureAnsatz::from_source(inst.n, &src, constants)?;
        inst.curvature = match (self.curvature, self.regime) {
            (Some(c), _) => Some(c),
            (None, Regime::Flat) => Some(0.0),
            (None, _) => None,
        };
        if let Some(d) = &self.density {
            let list = d.list();
            let per: Vec<String> = match list.len() {
                1 => vec![list[0].clone(); inst.n],
                k if k == inst.n => list,
                k => {
                    return Err(SolgasError::Config(format!(
                        "`density` needs 1 or {} entries, got {k}",
                        inst.n
                    )))
                }
            };
            inst.densities = Some(
                per.iter()
                    .map(|s| Expr::in_eta(s, constants).map(DensityFn::Closed))
                    .collect::<Result<_>>()?,
            );
        }
        if let Some(a) = &self.affinor {
            inst.affinor = Some(AffinorGenerators::new(inst.n, &a.phi, &a.mu, constants)?);
        }
        Ok(())
    }
}

/// Built-in kernels and families plus whatever a config directory adds.
#[derive(Clone, Debug)]
pub struct Catalogue {
    pub kernels: Vec<KernelSpec>,
    pub families: Vec<FamilyEntry>,
    /// Files that were read, in load order.
    pub sources: Vec<String>,
}

impl Catalogue {
    pub fn builtin() -> Self {
        Catalogue {
            kernels: KernelSpec::catalogue(),
            families: FamilyEntry::builtins(),
            sources: Vec::new(),
        }
    }

    /// Built-ins plus every `*.json` in `dir`. Kernel files are recognised
    /// by a `G` or kernel `name` without `regime`; family files carry `regime`.
    pub fn load(dir: Option<&Path>) -> Result<Self> {
        let mut cat = Self::builtin();
        let Some(dir) = dir else { return Ok(cat) };
        let mut files: Vec<_> = std::fs::read_dir(dir)
            .map_err(|e| {
                SolgasError::Config(format!("cannot read config dir {}: {e}", dir.display()))
            })?
            .filter_map(|e| e.ok().map(|e| e.path()))
            .filter(|p| p.extension().is_some_and(|x| x == "json"))
            .collect();
        files.sort();
        let mut family_cfgs = Vec::new();
        for path in files {
            let text = std::fs::read_to_string(&path)
                .map_err(|e| SolgasError::Config(format!("cannot read {}: {e}", path.display())))?;
            let value: serde_json::Value = serde_json::from_str(&text)
                .map_err(|e| SolgasError::Config(format!("{}: {e}", path.display())))?;
            let bad =
                |e: serde_json::Error| SolgasError::Config(format!("{}: {e}", path.display()));
            if value.get("regime").is_some() {
                family_cfgs.push(serde_json::from_value::<FamilyConfig>(value).map_err(bad)?);
            } else {
                let cfg: KernelConfig = serde_json::from_value(value).map_err(bad)?;
                let spec = KernelSpec::from_config(&cfg)?;
                cat.kernels.retain(|k| k.name != spec.name);
                cat.kernels.push(spec);
            }
            cat.sources.push(path.display().to_string());
        }
        for cfg in family_cfgs {
            let entry = cfg.into_entry(&cat.kernels)?;
            cat.families.retain(|f| f.name != entry.name);
            cat.families.push(entry);
        }
        Ok(cat)
    }

    /// Loads from the directory named by [`CONFIG_DIR_ENV`], if set.
    pub fn from_env() -> Result<Self> {
        match std::env::var_os(CONFIG_DIR_ENV) {
            Some(d) if !d.is_empty() => Self::load(Some(Path::new(&d))),
            _ => Ok(Self::builtin()),
        }
    }

    pub fn family(&self, name: &str) -> Result<&FamilyEntry> {
        self.families
            .iter()
            .find(|f| f.name == name)
            .ok_or_else(|| {
                SolgasError::Config(format!(
                    "unknown family `{name}` (known: {})",
                    self.families
                        .iter()
                        .map(|f| f.name.as_str())
                        .collect::<Vec<_>>()
                        .join(", ")
                ))
            })
    }

    pub fn kernel(&self, name: &str) -> Result<&KernelSpec> {
        self.kernels
            .iter()
            .find(|k| k.name == name)
            .ok_or_else(|| SolgasError::Config(format!("unknown kernel `{name}`")))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::structures::conditions::residual_cc_conditions;

    fn etas(lo: f64, n: usize) -> Vec<Vec<f64>> {
        (0..4)
            .map(|k| {
                (0..n)
                    .map(|i| lo + 0.2 + 0.45 * i as f64 + 0.03 * k as f64)
                    .collect()
            })
            .collect()
    }

    #[test]
    fn every_builtin_instantiates() {
        for f in FamilyEntry::builtins() {
            let n = f.fixed_n.unwrap_or(3);
            let inst = f.instantiate(n).unwrap();
            assert_eq!(inst.ansatz.n, n);
            assert_eq!(inst.ansatz.family.as_deref(), Some(f.name.as_str()));
        }
    }

    #[test]
    fn algebraic_rows_hold() {
        for name in [
            "kdv_flat",
            "sinh_gordon_flat",
            "lieb_liniger_flat",
            "dnls_flat",
            "additive_separable_flat",
            "general_flat",
            "kdv_cc",
            "kdv_cc_n2",
            "additive_separable_cc",
        ] {
            let cat = Catalogue::builtin();
            let f = cat.family(name).unwrap();
            let n = f.fixed_n.unwrap_or(3);
            let inst = f.instantiate(n).unwrap();
            let (p, d) = residual_cc_conditions(
                &inst.kernel,
                &inst.ansatz,
                inst.curvature.unwrap(),
                &etas(inst.kernel.eta_box.0, n),
            )
            .unwrap();
            assert!(p <= 1e-9 && d <= 1e-9, "{name}: {p} {d}");
        }
    }

    #[test]
    fn overrides() {
        let f = Catalogue::builtin().family("kdv_cc").unwrap().clone();
        let f = f.with_constants(&consts(&[("c", 0.5)])).unwrap();
        assert_eq!(f.instantiate(2).unwrap().curvature, Some(-0.5));
        assert!(f.with_constants(&consts(&[("zz", 1.0)])).is_err());
        let ll = Catalogue::builtin()
            .family("lieb_liniger_cc")
            .unwrap()
            .clone();
        assert_eq!(ll.expect, Verdict::Fail);
        assert_eq!(
            ll.with_constants(&consts(&[("c", 0.0)])).unwrap().expect,
            Verdict::Pass
        );
    }

    #[test]
    fn fixed_n_is_enforced() {
        let cat = Catalogue::builtin();
        assert!(cat.family("kdv_ii").unwrap().instantiate(3).is_err());
    }

    #[test]
    fn user_files_extend_the_catalogue() {
        let dir = std::env::temp_dir().join(format!("solgas-cat-{}", std::process::id()));
        std::fs::create_dir_all(&dir).unwrap();
        std::fs::write(
            dir.join("k.json"),
            r#"{"name": "my_rod", "G": "-2", "S": "eta"}"#,
        )
        .unwrap();
        std::fs::write(
            dir.join("f.json"),
            r#"{"name": "rod_flat", "kernel": "my_rod", "regime": "flat", "s": "1", "chi": ["0", "0"], "density": "-eta^2/2"}"#,
        )
        .unwrap();
        let cat = Catalogue::load(Some(&dir)).unwrap();
        std::fs::remove_dir_all(&dir).ok();
        assert!(cat.kernel("my_rod").is_ok());
        let inst = cat.family("rod_flat").unwrap().instantiate(2).unwrap();
        assert_eq!(inst.kernel.name, "my_rod");
        assert_eq!(inst.densities.unwrap().len(), 2);
        assert_eq!(cat.sources.len(), 2);
    }

    #[test]
    fn empty_directory_gives_builtins() {
        let dir = std::env::temp_dir().join(format!("solgas-empty-{}", std::process::id()));
        std::fs::create_dir_all(&dir).unwrap();
        let cat = Catalogue::load(Some(&dir)).unwrap();
        std::fs::remove_dir_all(&dir).ok();
        assert_eq!(cat.kernels.len(), 7);
        assert_eq!(cat.families.len(), FamilyEntry::builtins().len());
    }
}
