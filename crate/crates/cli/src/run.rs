use crate::output::{emit, fmt_num, parse_vec, render_table, to_json, translation_table};
use crate::{ClassifyArgs, Command, FamilyAction, Format, OpArgs, OutArgs, ParamArgs, SourceArgs, VerifyWhat};
use qflab::catalog::{instantiate, ExpectedVerdicts, FamilyId, FamilyInstance, FamilySpec, MonotoneFn};
use qflab::differentiable::{c1_inequality_check, CompactLoopProfile, ProfileSamples, Verdict};
use qflab::numerics::{linspace, logspace};
use qflab::section::{is_loop_section, uniform_angles, LoopSectionReport};
use qflab::spread::{check_m1, check_m2, section_from_sample, M2Report, SpreadSample};
use qflab::structure::{classify, Verdicts, Witness};
use qflab::{Loop64, Policy64, QfError, Section64, Vec2f64};
use serde::Serialize;
use std::collections::BTreeMap;
use std::path::Path;

pub const EXIT_MISMATCH: u8 = 1;
pub const EXIT_USAGE: u8 = 2;
pub const EXIT_NUMERIC: u8 = 3;

#[derive(Debug)]
pub struct CliError {
    pub code: u8,
    pub message: String,
}

impl CliError {
    pub fn usage(m: impl Into<String>) -> Self {
        Self {
            code: EXIT_USAGE,
            message: m.into(),
        }
    }

    pub fn numeric(m: impl Into<String>) -> Self {
        Self {
            code: EXIT_NUMERIC,
            message: m.into(),
        }
    }
}

impl From<QfError> for CliError {
    fn from(e: QfError) -> Self {
        let code = match e {
            QfError::Domain(_)
            | QfError::UnknownFamily(_)
            | QfError::Violations(_)
            | QfError::Input(_)
            | QfError::InvalidProfile(_) => EXIT_USAGE,
            QfError::NotInGroup { .. }
            | QfError::InvalidSection { .. }
            | QfError::NoConvergence { .. }
            | QfError::SharpTransitivity { .. }
            | QfError::GridTooCoarse(_)
            | QfError::Inconsistent(_) => EXIT_NUMERIC,
        };
        Self {
            code,
            message: e.to_string(),
        }
    }
}

type Res<T> = Result<T, CliError>;

pub fn dispatch(cmd: Command) -> Res<u8> {
    match cmd {
        Command::Family { action } => family(action),
        Command::Classify(a) => cmd_classify(a),
        Command::Mul(a) => cmd_op(Op::Mul, a),
        Command::Ldiv(a) => cmd_op(Op::Ldiv, a),
        Command::Rdiv(a) => cmd_op(Op::Rdiv, a),
        Command::Verify { what } => verify(what),
        Command::ExportTranslations(a) => {
            let src = Source::open(&a.src)?;
            let tab = translation_table(src.section(), a.grid.nr, a.grid.nt)?;
            emit(&render_table(&tab, a.out.format)?, a.out.out.as_deref())?;
            Ok(0)
        }
    }
}

fn family_id(s: &str) -> Res<FamilyId> {
    Ok(s.parse::<FamilyId>()?)
}

fn spec_from(id: FamilyId, p: &ParamArgs) -> Res<FamilySpec> {
    let given = [
        ("w", p.w),
        ("c", p.c),
        ("d", p.d),
        ("gamma", p.gamma),
        ("s", p.s),
        ("z", p.z),
        ("p", p.p),
        ("q", p.q),
        ("k", p.k),
        ("m", p.m),
        ("n", p.n),
    ];
    let over: BTreeMap<String, f64> = given
        .iter()
        .filter_map(|(k, v)| v.map(|v| (k.to_string(), v)))
        .collect();
    let mut spec = FamilySpec::with(id, &over);
    if let Some(f) = &p.f {
        spec.f = Some(f.parse::<MonotoneFn>()?);
    }
    Ok(spec)
}

fn has_params(p: &ParamArgs) -> bool {
    [p.w, p.c, p.d, p.gamma, p.s, p.z, p.p, p.q, p.k, p.m, p.n].iter().any(Option::is_some) || p.f.is_some()
}

fn read_file(p: &Path) -> Res<String> {
    std::fs::read_to_string(p).map_err(|e| CliError::usage(format!("{}: {e}", p.display())))
}

enum Source {
    Family(Box<FamilyInstance<f64>>),
    Spread(SpreadSample, Section64),
}

impl Source {
    fn open(a: &SourceArgs) -> Res<Self> {
        match (&a.family, &a.spread) {
            (Some(id), None) => {
                let spec = spec_from(family_id(id)?, &a.params)?;
                Ok(Source::Family(Box::new(instantiate(&spec)?)))
            }
            (None, Some(path)) => {
                if has_params(&a.params) {
                    return Err(CliError::usage("parameter flags apply to --family only"));
                }
                let sample = SpreadSample::from_json(&read_file(path)?)?;
                let section = section_from_sample(&sample)?;
                Ok(Source::Spread(sample, section))
            }
            _ => Err(CliError::usage("give exactly one of --family or --spread")),
        }
    }

    fn section(&self) -> &Section64 {
        match self {
            Source::Family(i) => &i.section,
            Source::Spread(_, s) => s,
        }
    }

    fn expected(&self) -> Option<ExpectedVerdicts> {
        match self {
            Source::Family(i) => Some(i.spec.expected()),
            Source::Spread(..) => None,
        }
    }
}

fn policy(rtol: Option<f64>) -> Res<Policy64> {
    let mut p = Policy64::default();
    if let Some(r) = rtol {
        if !(r > 0.0 && r.is_finite()) {
            return Err(CliError::usage(format!("tolerance must be positive, got {r}")));
        }
        p.rtol = r;
    }
    Ok(p)
}

fn family(action: FamilyAction) -> Res<u8> {
    match action {
        FamilyAction::List => {
            let mut s = String::new();
            for id in FamilyId::ALL {
                let c = id.constraints();
                let summary = if c.is_empty() { "no constraints".to_string() } else { c.join("; ") };
                s.push_str(&format!("{:<8} {}\n", id.as_str(), summary));
            }
            emit(&s, None)?;
            Ok(0)
        }
        FamilyAction::Show { id } => {
            let id = family_id(&id)?;
            let spec = FamilySpec::defaults(id);
            let inst = instantiate::<f64>(&spec)?;
            let mut s = format!("{id}\n");
            s.push_str("defaults:\n");
            for (k, v) in &spec.params {
                s.push_str(&format!("  {k} = {v}\n"));
            }
            if let Some(f) = spec.f {
                s.push_str(&format!("  f = {}\n", f.name()));
            }
            s.push_str("constraints:\n");
            for c in id.constraints() {
                s.push_str(&format!("  {c}\n"));
            }
            s.push_str("spread branches:\n");
            for b in &inst.branches {
                s.push_str(&format!("  {} ({}) {}\n", b.name, b.params.join(", "), b.condition));
            }
            s.push_str(&format!("expected: {}\n", inst.expected.kind));
            emit(&s, None)?;
            Ok(0)
        }
        FamilyAction::Export { id, params, grid, out } => {
            let spec = spec_from(family_id(&id)?, &params)?;
            let inst = instantiate::<f64>(&spec)?;
            let text = match out.format {
                Format::Json => {
                    let mut s = inst.export(grid.nr, grid.nt)?.to_json();
                    s.push('\n');
                    s
                }
                Format::Csv => render_table(&translation_table(&inst.section, grid.nr, grid.nt)?, Format::Csv)?,
            };
            emit(&text, out.out.as_deref())?;
            Ok(0)
        }
    }
}

#[derive(Serialize)]
struct GridInfo {
    nu: usize,
    nt: usize,
    rtol: f64,
    identity_tol: f64,
}

#[derive(Serialize)]
struct ClassifyOutput {
    family: String,
    params: BTreeMap<String, f64>,
    seed: u64,
    grid: GridInfo,
    status: String,
    verdicts: Option<Verdicts>,
    expected: Option<ExpectedVerdicts>,
    mismatches: Vec<String>,
    loop_section: LoopSectionReport,
    witnesses: Vec<Witness>,
    error: Option<String>,
}

fn cmd_classify(a: ClassifyArgs) -> Res<u8> {
    let src = Source::open(&a.src)?;
    let mut pol = policy(a.rtol)?;
    if a.nu < 2 || a.nt < 4 {
        return Err(CliError::usage("need --nu >= 2 and --nt >= 4"));
    }
    pol.u_grid = logspace(0.125, 8.0, a.nu);
    pol.t_grid = uniform_angles(a.nt);
    let s = src.section().clone();
    let mut out = ClassifyOutput {
        family: s.name().to_string(),
        params: s.params().iter().cloned().collect(),
        seed: a.seed,
        grid: GridInfo {
            nu: a.nu,
            nt: a.nt,
            rtol: pol.rtol,
            identity_tol: pol.identity_tol,
        },
        status: String::new(),
        verdicts: None,
        expected: src.expected(),
        mismatches: Vec::new(),
        loop_section: is_loop_section(&s, &pol),
        witnesses: Vec::new(),
        error: None,
    };
    let code = match Loop64::new(s, pol).and_then(|l| classify(&l)) {
        Ok(rep) => {
            if let Some(e) = &out.expected {
                out.mismatches = e.mismatches(&rep.verdicts);
            }
            out.verdicts = Some(rep.verdicts);
            out.witnesses = rep.witnesses;
            if out.mismatches.is_empty() {
                out.status = "match".into();
                0
            } else {
                out.status = "mismatch".into();
                EXIT_MISMATCH
            }
        }
        Err(e) => {
            let ce = CliError::from(e);
            out.status = "error".into();
            out.error = Some(ce.message);
            ce.code
        }
    };
    emit(&to_json(&out), a.out.as_deref())?;
    Ok(code)
}

#[derive(Clone, Copy)]
enum Op {
    Mul,
    Ldiv,
    Rdiv,
}

fn cmd_op(op: Op, a: OpArgs) -> Res<u8> {
    let lhs = parse_vec(&a.lhs)?;
    let rhs = parse_vec(&a.rhs)?;
    let (x, y) = (Vec2f64::new(lhs[0], lhs[1]), Vec2f64::new(rhs[0], rhs[1]));
    let src = Source::open(&a.src)?;
    let l = Loop64::new(src.section().clone(), policy(a.rtol)?)?;
    let f = |v: Vec2f64| format!("{},{}\n", fmt_num(v.x, a.digits), fmt_num(v.y, a.digits));
    let text = match op {
        Op::Mul => f(l.multiply(x, y)?),
        Op::Ldiv => f(l.left_divide(x, y)?),
        Op::Rdiv => {
            let (p, res) = l.right_divide_with_residual(y, x)?;
            format!("{}residual {:e}\n", f(p), res)
        }
    };
    emit(&text, None)?;
    Ok(0)
}

#[derive(Serialize)]
struct SpreadVerifyOutput {
    name: String,
    elements: usize,
    m1_pairs: usize,
    m1_min_abs_det: f64,
    m1_atol: f64,
    m1_violations: usize,
    m2: Vec<M2Entry>,
    passed: bool,
}

#[derive(Serialize)]
struct M2Entry {
    x: [f64; 2],
    report: M2Report,
}

fn m2_targets() -> Vec<Vec2f64> {
    let g = linspace(-2.0, 2.0, 7);
    g.iter().flat_map(|&a| g.iter().map(move |&b| Vec2f64::new(a, b))).collect()
}

fn write_report<S: Serialize>(v: &S, out: &OutArgs) -> Res<()> {
    if out.format == Format::Csv {
        return Err(CliError::usage("verification reports are JSON only"));
    }
    emit(&to_json(v), out.out.as_deref())
}

fn verify(what: VerifyWhat) -> Res<u8> {
    match what {
        VerifyWhat::Spread { src, grid, atol, out } => {
            let src = Source::open(&src)?;
            let (sample, m2) = match &src {
                Source::Family(i) => {
                    let sample = i.export(grid.nr, grid.nt)?;
                    let targets = m2_targets();
                    let mut m2 = Vec::new();
                    for x in [Vec2f64::e1(), Vec2f64::e2()] {
                        let report = check_m2(&i.spread, &[x], &targets, 1e-9)?;
                        m2.push(M2Entry { x: x.to_f64(), report });
                    }
                    (sample, m2)
                }
                Source::Spread(s, _) => (s.clone(), Vec::new()),
            };
            let m1 = check_m1(&sample, atol)?;
            let passed = m1.passed() && m2.iter().all(|e| e.report.coverage >= 0.99);
            let rep = SpreadVerifyOutput {
                name: sample.name.clone(),
                elements: sample.elements.len(),
                m1_pairs: m1.pairs,
                m1_min_abs_det: m1.min_abs_det,
                m1_atol: atol,
                m1_violations: m1.violations.len(),
                m2,
                passed,
            };
            write_report(&rep, &out)?;
            Ok(if passed { 0 } else { EXIT_MISMATCH })
        }
        VerifyWhat::Section { src, samples, seed, out } => {
            let src = Source::open(&src)?;
            let l = Loop64::new(src.section().clone(), Policy64::default())?;
            let rep = l.verify_sharp_transitivity(samples, seed);
            write_report(&rep, &out)?;
            Ok(if rep.passed() { 0 } else { EXIT_MISMATCH })
        }
        VerifyWhat::C1 {
            profile,
            family,
            params,
            u,
            points,
            out,
        } => {
            let prof: CompactLoopProfile<f64> = match (profile, family) {
                (Some(path), None) => {
                    let data: ProfileSamples = serde_json::from_str(&read_file(&path)?)
                        .map_err(|e| CliError::usage(format!("profile JSON: {e}")))?;
                    CompactLoopProfile::from_samples(&data)?
                }
                (None, Some(id)) => {
                    let spec = spec_from(family_id(&id)?, &params)?;
                    let inst = instantiate::<f64>(&spec)?;
                    CompactLoopProfile::from_section(&inst.section, u)?
                }
                _ => return Err(CliError::usage("give exactly one of --profile or --family")),
            };
            let rep = c1_inequality_check(&prof, points)?;
            write_report(&rep, &out)?;
            Ok(if rep.verdict == Verdict::Pass { 0 } else { EXIT_MISMATCH })
        }
    }
}
