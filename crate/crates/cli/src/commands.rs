use std::collections::BTreeMap;
use std::fmt::Write as _;

use anyhow::{bail, Context, Result};
use serde::Serialize;
use solgas_core::error::SolgasError;
use solgas_core::geometry::{
    check_constant_curvature, check_flat, check_provenance, check_tsarev, AnsatzMetric,
    ClassificationReport, StructureAnsatz, SystemField, Verdict,
};
use solgas_core::kernels::{KernelConfig, KernelSpec};
use solgas_core::reduction::split_coords;
use solgas_core::simulator::{
    characteristics_check, run, write_snapshots, CharacteristicsReport, ConservationReport,
    FieldState, GridConfig, SimulationConfig, Variables, CFL,
};
use solgas_core::structures::{
    default_grid, fit_cc_template, instance_samples, residual_cc_conditions, verify_family,
    Catalogue, FamilyEntry, FamilyInstance, KernelRef, Regime, TemplateFit, TEMPLATE_GRID,
};

use crate::report::Envelope;
use crate::{
    CatalogueArgs, ClassifyArgs, Cli, Command, ConditionsArgs, Expectation, InlineAnsatz, Mode,
    SimulateArgs, VerifyArgs,
};

/// Periodic mass drift allowed in `simulate`.
pub const MASS_TOL: f64 = 1e-10;

pub fn execute(cli: &Cli) -> Result<u8> {
    let cat = match &cli.config_dir {
        Some(dir) => Catalogue::load(Some(dir))?,
        None => Catalogue::from_env()?,
    };
    match &cli.command {
        Command::Catalogue(a) => catalogue(&cat, a),
        Command::Verify(a) => verify(&cat, a),
        Command::Classify(a) => classify(&cat, a),
        Command::Simulate(a) => simulate(&cat, a),
        Command::Conditions(a) => conditions(&cat, a),
    }
}

fn expected(flag: Option<Expectation>, default: Verdict) -> Verdict {
    flag.map_or(default, Verdict::from)
}

#[derive(Serialize)]
struct KernelRow {
    name: String,
    kernel: String,
    velocity: String,
    eta_box: (f64, f64),
    config: KernelConfig,
}

#[derive(Serialize)]
struct FamilyRow {
    name: String,
    kernel: String,
    regime: Regime,
    constants: BTreeMap<String, f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    n: Option<usize>,
    expect: Verdict,
    description: String,
}

#[derive(Serialize)]
struct CatalogueResult {
    kernels: Vec<KernelRow>,
    families: Vec<FamilyRow>,
    sources: Vec<String>,
}

fn catalogue(cat: &Catalogue, args: &CatalogueArgs) -> Result<u8> {
    let result = CatalogueResult {
        kernels: cat
            .kernels
            .iter()
            .map(|k| KernelRow {
                name: k.name.clone(),
                kernel: k.describe(),
                velocity: k.velocity.to_string(),
                eta_box: k.eta_box,
                config: k.config(),
            })
            .collect(),
        families: cat
            .families
            .iter()
            .map(|f| FamilyRow {
                name: f.name.clone(),
                kernel: f.kernel.name.clone(),
                regime: f.regime,
                constants: f.constants.clone(),
                n: f.fixed_n,
                expect: f.expect,
                description: f.description.clone(),
            })
            .collect(),
        sources: cat.sources.clone(),
    };
    let mut s = String::from("kernels:\n");
    for k in &result.kernels {
        let _ = writeln!(
            s,
            "  {:<22} {}  S = {}  eta in [{}, {}]",
            k.name, k.kernel, k.velocity, k.eta_box.0, k.eta_box.1
        );
    }
    s.push_str("families:\n");
    for f in &result.families {
        let consts: Vec<String> = f
            .constants
            .iter()
            .map(|(k, v)| format!("{k}={v}"))
            .collect();
        let _ = writeln!(
            s,
            "  {:<28} {:<20} {:<18} [{}]{}{}  {}",
            f.name,
            f.kernel,
            f.regime.to_string(),
            consts.join(", "),
            f.n.map_or(String::new(), |n| format!(" n={n}")),
            if f.expect == Verdict::Fail {
                " expect=FAIL"
            } else {
                ""
            },
            f.description
        );
    }
    Envelope::new("catalogue", args, &result).emit(args.output.out.as_deref(), args.output.json, &s)
}

/// The family after `--kernel` and constant overrides.
fn resolve_family(
    cat: &Catalogue,
    name: &str,
    kernel: Option<&str>,
    constants: &BTreeMap<String, f64>,
) -> Result<FamilyEntry> {
    let mut fam = cat.family(name)?.clone();
    if let Some(k) = kernel {
        fam = fam.with_kernel(cat.kernel(k)?.clone());
    }
    if !constants.is_empty() {
        fam = fam.with_constants(constants)?;
    }
    Ok(fam)
}

fn check_lines(s: &mut String, checks: &[ClassificationReport]) {
    for c in checks {
        let _ = write!(
            s,
            "  {:<26} {}  residual {:.3e} (tol {:.0e})",
            c.condition, c.verdict, c.worst_residual, c.tolerance
        );
        if let Some(fc) = c.fitted_c {
            let _ = write!(s, "  c = {fc:.9}");
        }
        s.push('\n');
    }
}

fn verify(cat: &Catalogue, args: &VerifyArgs) -> Result<u8> {
    let fam = resolve_family(
        cat,
        &args.family,
        args.kernel.as_deref(),
        &args.constants.map(),
    )?;
    if let (Some(m), Some(n)) = (fam.fixed_n, args.n) {
        if m != n {
            return Err(SolgasError::Config(format!(
                "family `{}` exists only for n = {m}",
                fam.name
            ))
            .into());
        }
    }
    let tolerances: BTreeMap<String, f64> = args.tolerances.iter().cloned().collect();
    let bundle = verify_family(&fam, args.n, args.sampling.samples, args.sampling.seed)?
        .with_tolerances(&tolerances)?
        .expecting(expected(args.expect, fam.expect));

    let mut s = format!(
        "{} on {} (n = {}, {} samples, seed {})\n",
        bundle.family, bundle.kernel, bundle.n, bundle.samples, bundle.seed
    );
    if let Some(a) = &bundle.algebraic {
        let _ = writeln!(
            s,
            "  {:<26} {}  pair {:.3e} diagonal {:.3e} (tol {:.0e})",
            "algebraic", a.verdict, a.pair_residual, a.diagonal_residual, a.tolerance
        );
    }
    check_lines(&mut s, &bundle.checks);
    if let Some(f) = &bundle.flow {
        let _ = writeln!(
            s,
            "  {:<26} {}  mismatch {:.3e} over {} points (tol {:.0e})",
            "flow", f.verdict, f.worst_mismatch, f.evaluated, f.tolerance
        );
    }
    for n in &bundle.notes {
        let _ = writeln!(s, "  note: {n}");
    }
    let _ = writeln!(
        s,
        "verdict {} (expected {})",
        bundle.verdict, bundle.expected
    );

    Envelope::new("verify", args, &bundle)
        .judged(bundle.verdict, bundle.expected)
        .emit(args.output.out.as_deref(), args.output.json, &s)
}

/// A bare instance carrying only a kernel and a metric.
fn inline_instance(
    cat: &Catalogue,
    kernel: &str,
    ansatz: &InlineAnsatz,
    n: usize,
    constants: &BTreeMap<String, f64>,
) -> Result<FamilyInstance> {
    let kernel = cat.kernel(kernel)?.clone();
    let ansatz = StructureAnsatz::uniform(
        n,
        &ansatz.s,
        &ansatz.phi,
        &ansatz.chi,
        &ansatz.psi,
        constants,
    )?
    .with_family("inline");
    Ok(FamilyInstance {
        family: "inline".into(),
        n,
        kernel,
        regime: Regime::ConstantCurvature,
        ansatz,
        curvature: None,
        densities: None,
        affinor: None,
        expect: Verdict::Pass,
        notes: Vec::new(),
    })
}

fn family_instance(
    cat: &Catalogue,
    name: &str,
    n: usize,
    constants: &BTreeMap<String, f64>,
) -> Result<FamilyInstance> {
    let fam = resolve_family(cat, name, None, constants)?;
    Ok(fam.instantiate(fam.fixed_n.unwrap_or(n))?)
}

#[derive(Serialize)]
struct ClassifyResult {
    family: String,
    kernel: String,
    n: usize,
    samples: usize,
    seed: u64,
    class: Option<&'static str>,
    #[serde(skip_serializing_if = "Option::is_none")]
    curvature: Option<f64>,
    checks: Vec<ClassificationReport>,
}

fn classify(cat: &Catalogue, args: &ClassifyArgs) -> Result<u8> {
    let consts = args.constants.map();
    let inst = match (&args.family, &args.kernel) {
        (Some(f), _) => family_instance(cat, f, args.n, &consts)?,
        (None, Some(k)) => inline_instance(cat, k, &args.ansatz, args.n, &consts)?,
        (None, None) => bail!(SolgasError::Config(
            "classify needs --family or --kernel".into()
        )),
    };
    let pts = instance_samples(&inst, args.sampling.samples, args.sampling.seed)?;
    let metric = AnsatzMetric::new(&inst.kernel, &inst.ansatz);
    let system = SystemField {
        kernel: &inst.kernel,
        n: inst.n,
    };
    let flat = check_flat(&metric, &pts)?;
    let cc = check_constant_curvature(&metric, &pts)?;
    let tsarev = check_tsarev(&metric, &system, &pts)?;
    let prov = check_provenance(&metric, &pts)?;
    let (class, curvature) = if flat.passed() {
        (Some("flat"), Some(0.0))
    } else if cc.passed() {
        (Some("constant_curvature"), cc.fitted_c)
    } else {
        (None, None)
    };
    let verdict = Verdict::from_bool(class.is_some() && tsarev.passed() && prov.passed());
    let result = ClassifyResult {
        family: inst.family.clone(),
        kernel: inst.kernel.name.clone(),
        n: inst.n,
        samples: pts.len(),
        seed: args.sampling.seed,
        class,
        curvature,
        checks: vec![flat, cc, tsarev, prov],
    };
    let expected = expected(args.expect, Verdict::Pass);
    let mut s = format!(
        "{} on {} (n = {}, {} samples)\n",
        result.family, result.kernel, result.n, result.samples
    );
    check_lines(&mut s, &result.checks);
    let _ = writeln!(
        s,
        "class {}  verdict {} (expected {})",
        class.unwrap_or("none"),
        verdict,
        expected
    );
    Envelope::new("classify", args, &result)
        .judged(verdict, expected)
        .emit(args.output.out.as_deref(), args.output.json, &s)
}

#[derive(Serialize)]
struct ConditionsResult {
    family: String,
    kernel: String,
    n: usize,
    c: f64,
    samples: usize,
    pair_residual: f64,
    diagonal_residual: f64,
    tolerance: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    fit: Option<TemplateFit>,
}

fn conditions(cat: &Catalogue, args: &ConditionsArgs) -> Result<u8> {
    let consts = args.constants.map();
    let (inst, c, fit) = match (&args.family, &args.kernel) {
        (Some(f), _) => {
            let inst = family_instance(cat, f, args.n, &consts)?;
            let c = match (args.constants.c, inst.curvature) {
                (Some(c), _) | (None, Some(c)) => c,
                (None, None) => bail!(SolgasError::Config(format!(
                    "family `{f}` has no curvature; pass --c"
                ))),
            };
            (inst, c, None)
        }
        (None, Some(k)) => {
            let c = args.constants.c.unwrap_or(0.0);
            if args.fit {
                let kernel = cat.kernel(k)?.clone();
                let fit = fit_cc_template(
                    &kernel,
                    c,
                    args.degree,
                    &default_grid(&kernel, TEMPLATE_GRID),
                    kernel.min_gap,
                )?;
                if fit.s_coeffs.iter().all(|a| a.abs() < 1e-12) {
                    bail!(SolgasError::Config(format!(
                        "template fit at c = {c} is the zero metric"
                    )));
                }
                let mut inst = inline_instance(cat, k, &args.ansatz, args.n, &BTreeMap::new())?;
                inst.ansatz = fit.ansatz(args.n)?;
                inst.family = "cc_template".into();
                (inst, c, Some(fit))
            } else {
                (
                    inline_instance(cat, k, &args.ansatz, args.n, &consts)?,
                    c,
                    None,
                )
            }
        }
        (None, None) => bail!(SolgasError::Config(
            "conditions needs --family or --kernel".into()
        )),
    };
    let pts = instance_samples(&inst, args.sampling.samples, args.sampling.seed)?;
    let etas: Vec<Vec<f64>> = pts.iter().map(|x| split_coords(x).1).collect();
    let (pair, diag) = residual_cc_conditions(&inst.kernel, &inst.ansatz, c, &etas)?;
    let verdict = Verdict::from_bool(pair <= args.tol && diag <= args.tol);
    let result = ConditionsResult {
        family: inst.family.clone(),
        kernel: inst.kernel.name.clone(),
        n: inst.n,
        c,
        samples: etas.len(),
        pair_residual: pair,
        diagonal_residual: diag,
        tolerance: args.tol,
        fit,
    };
    let expected = expected(args.expect, Verdict::Pass);
    let mut s = format!(
        "{} on {} (n = {}, c = {}, {} samples)\n",
        result.family, result.kernel, result.n, c, result.samples
    );
    if let Some(f) = &result.fit {
        let _ = writeln!(
            s,
            "  template degree {}  grid residual {:.3e}",
            f.degree, f.residual
        );
    }
    let _ = writeln!(
        s,
        "  pair {pair:.3e}  diagonal {diag:.3e} (tol {:.0e})\nverdict {verdict} (expected {expected})",
        args.tol
    );
    Envelope::new("conditions", args, &result)
        .judged(verdict, expected)
        .emit(args.output.out.as_deref(), args.output.json, &s)
}

fn simulation_config(args: &SimulateArgs) -> Result<SimulationConfig> {
    if let Some(path) = &args.config {
        let text =
            std::fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
        return serde_json::from_str(&text)
            .map_err(|e| SolgasError::Config(format!("{}: {e}", path.display())).into());
    }
    Ok(SimulationConfig {
        grid: GridConfig {
            m: args.grid.unwrap_or(200),
            x_min: args.x_min.unwrap_or(-5.0),
            x_max: args.x_max.unwrap_or(5.0),
            periodic: !args.outflow,
        },
        cfl: args.cfl.unwrap_or(CFL),
        t_max: args.tmax.unwrap_or(0.2),
        kernel: KernelRef::Name(args.kernel.clone().unwrap_or_else(|| "kdv".into())),
        initial: None,
        n: args.n,
        mode: match args.mode {
            Some(Mode::REta) => Variables::REta,
            _ => Variables::UEta,
        },
        output_every: args.output_every.unwrap_or(10),
        family: args.family.clone(),
    })
}

#[derive(Serialize)]
struct SimulateResult {
    config: SimulationConfig,
    kernel: String,
    #[serde(skip_serializing_if = "Option::is_none")]
    density_family: Option<String>,
    snapshots: usize,
    conservation: ConservationReport,
    #[serde(skip_serializing_if = "Option::is_none")]
    characteristics: Option<CharacteristicsReport>,
    notes: Vec<String>,
}

fn simulate(cat: &Catalogue, args: &SimulateArgs) -> Result<u8> {
    let cfg = simulation_config(args)?;
    let kernel: KernelSpec = cfg.kernel.resolve(&cat.kernels)?;
    let grid = cfg.grid()?;
    let init = cfg.initial_data(&kernel)?;
    init.validate()?;
    let n = init.n();
    let mut notes = Vec::new();

    let density_family = match &cfg.family {
        Some(f) => Some(cat.family(f)?.clone()),
        None => cat
            .families
            .iter()
            .find(|f| f.kernel.name == kernel.name && f.regime == Regime::Flat)
            .cloned(),
    };
    let densities = match &density_family {
        Some(f) if f.kernel.name != kernel.name => {
            bail!(SolgasError::Config(format!(
                "family `{}` is built on kernel `{}`, not `{}`",
                f.name, f.kernel.name, kernel.name
            )))
        }
        Some(f) => match f.instantiate(n) {
            Ok(inst) if inst.densities.is_some() => inst.densities,
            Ok(_) => {
                notes.push(format!("family `{}` has no density", f.name));
                None
            }
            Err(e) if cfg.family.is_some() => return Err(e.into()),
            Err(e) => {
                notes.push(format!("no density: {e}"));
                None
            }
        },
        None => {
            notes.push(format!("no flat family on kernel `{}`", kernel.name));
            None
        }
    };

    let state = FieldState::from_initial(&kernel, &grid, cfg.mode, &init)?;
    let outcome = run(&state, &kernel, &cfg.options(), densities.as_deref())?;
    std::fs::create_dir_all(&args.out_dir)
        .with_context(|| format!("creating {}", args.out_dir.display()))?;
    let written = write_snapshots(&args.out_dir, &outcome.trajectory, &kernel)?;

    let mut ok = true;
    let mut characteristics = None;
    if outcome.error.is_none() {
        if cfg.mode == Variables::REta {
            notes.push("parameter form is not conservative: mass drift is reported only".into());
        } else if grid.periodic {
            let worst = outcome
                .report
                .mass_drift
                .iter()
                .cloned()
                .fold(0.0, f64::max);
            if worst > MASS_TOL {
                ok = false;
                notes.push(format!("mass drift {worst:.3e} exceeds {MASS_TOL:e}"));
            }
        } else {
            notes.push("outflow boundaries: mass is not checked".into());
        }
        match characteristics_check(&outcome.trajectory, &kernel) {
            Ok(rep) => {
                ok &= rep.verdict.passed();
                characteristics = Some(rep);
            }
            Err(SolgasError::ShockDetected { time }) => notes.push(format!(
                "characteristics check skipped: shock at t = {time}"
            )),
            Err(e) => return Err(e.into()),
        }
    }

    let result = SimulateResult {
        kernel: kernel.name.clone(),
        density_family: density_family.map(|f| f.name),
        snapshots: written.len(),
        conservation: outcome.report.clone(),
        characteristics,
        notes,
        config: cfg,
    };
    let mut s = format!(
        "{} n = {} M = {} t = {:.4} after {} steps, {} snapshots in {}\n",
        result.kernel,
        n,
        grid.m,
        result.conservation.t_final,
        result.conservation.steps,
        result.snapshots,
        args.out_dir.display()
    );
    let drift = result
        .conservation
        .mass_drift
        .iter()
        .cloned()
        .fold(0.0, f64::max);
    let _ = writeln!(s, "  mass drift {drift:.3e}");
    if let Some(h) = &result.conservation.hamiltonian {
        let _ = writeln!(s, "  hamiltonian drift {:.3e}", h.drift);
    }
    if let Some(c) = &result.characteristics {
        let _ = writeln!(
            s,
            "  characteristics {}  deviation {:.3e} (tol {:.3e})",
            c.verdict, c.max_deviation, c.tolerance
        );
    }
    for n in &result.notes {
        let _ = writeln!(s, "  note: {n}");
    }
    let report_path = args.out_dir.join("report.json");

    if let Some(err) = outcome.error {
        let env = Envelope::new("simulate", args, &result);
        let env = Envelope {
            exit_code: 3,
            ..env
        };
        std::fs::write(&report_path, env.to_json()?)?;
        eprint!("{s}");
        return Err(anyhow::Error::new(err).context("simulation aborted"));
    }
    let verdict = Verdict::from_bool(ok);
    let _ = writeln!(s, "verdict {verdict}");
    Envelope::new("simulate", args, &result)
        .judged(verdict, Verdict::Pass)
        .emit(Some(&report_path), args.json, &s)
}
