//! Parameter-validated constructors for the known families of 4-dimensional
//! translation planes with at least 7-dimensional collineation group. Every
//! instance carries both its spread set and its section (a(r,t), b(r,t)).

mod families;

use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{QfError, Result};
use crate::linalg::Vec2;
use crate::numerics::logspace;
use crate::scalar::{lit, to_f64, Real};
use crate::section::{element_of, uniform_angles, PolarParam, SectionPair};
use crate::spread::{NamedParam, SpreadElement, SpreadFamily, SpreadSample};
use crate::structure::{ClassificationReport, Verdicts};

pub use families::{ChartFn, SubstFn, Substitution};

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum FamilyId {
    Complex,
    P11a,
    P11b,
    P11c,
    P12a,
    P12b,
    P13a,
    P13b,
    P13c,
    P14,
    P16a,
    P16b,
    RemarkF,
    P17a,
    P17b,
}

impl FamilyId {
    /// The fourteen non-desarguesian families (the complex field excluded).
    pub const ALL: [FamilyId; 14] = [
        FamilyId::P11a,
        FamilyId::P11b,
        FamilyId::P11c,
        FamilyId::P12a,
        FamilyId::P12b,
        FamilyId::P13a,
        FamilyId::P13b,
        FamilyId::P13c,
        FamilyId::P14,
        FamilyId::P16a,
        FamilyId::P16b,
        FamilyId::RemarkF,
        FamilyId::P17a,
        FamilyId::P17b,
    ];

    pub fn as_str(&self) -> &'static str {
        match self {
            FamilyId::Complex => "complex",
            FamilyId::P11a => "P11a",
            FamilyId::P11b => "P11b",
            FamilyId::P11c => "P11c",
            FamilyId::P12a => "P12a",
            FamilyId::P12b => "P12b",
            FamilyId::P13a => "P13a",
            FamilyId::P13b => "P13b",
            FamilyId::P13c => "P13c",
            FamilyId::P14 => "P14",
            FamilyId::P16a => "P16a",
            FamilyId::P16b => "P16b",
            FamilyId::RemarkF => "RemarkF",
            FamilyId::P17a => "P17a",
            FamilyId::P17b => "P17b",
        }
    }

    /// Parameter names in display order.
    pub fn param_names(&self) -> &'static [&'static str] {
        match self {
            FamilyId::Complex | FamilyId::P11b | FamilyId::P11c | FamilyId::P12a | FamilyId::RemarkF => &[],
            FamilyId::P11a => &["w"],
            FamilyId::P12b => &["gamma"],
            FamilyId::P13a => &["s", "w", "z", "p", "q"],
            FamilyId::P13b | FamilyId::P14 => &["w", "z", "p", "q"],
            FamilyId::P13c => &["k", "w", "z", "p", "q"],
            FamilyId::P16a => &["w", "c"],
            FamilyId::P16b => &["d"],
            FamilyId::P17a => &["p", "q", "c", "d"],
            FamilyId::P17b => &["m", "n", "c", "d"],
        }
    }

    pub fn defaults(&self) -> BTreeMap<String, f64> {
        let v: &[f64] = match self {
            FamilyId::Complex | FamilyId::P11b | FamilyId::P11c | FamilyId::P12a | FamilyId::RemarkF => &[],
            FamilyId::P11a => &[2.0],
            FamilyId::P12b => &[1.0],
            FamilyId::P13a => &[0.5, -1.0, 0.0, 1.0, 0.0],
            FamilyId::P13b => &[-2.0, 0.0, 2.0, 0.0],
            FamilyId::P13c => &[1.0, -2.0, 0.0, 2.0, 0.0],
            FamilyId::P14 => &[0.0, -1.0, 0.0, 1.0],
            FamilyId::P16a => &[2.0, 0.0],
            FamilyId::P16b => &[1.0],
            FamilyId::P17a => &[0.0, 1.0, 0.0, 2.0],
            // d = 1 with c = 0 is the complex field
            FamilyId::P17b => &[1.0, 2.0, 0.0, 1.5],
        };
        self.param_names().iter().map(|s| s.to_string()).zip(v.iter().copied()).collect()
    }

    /// Published constraints, human readable.
    pub fn constraints(&self) -> &'static [&'static str] {
        match self {
            FamilyId::Complex => &[],
            FamilyId::P11a => &["w > 1"],
            FamilyId::P11b | FamilyId::P11c | FamilyId::P12a => &[],
            FamilyId::P12b => &["0 < |gamma| <= 1"],
            FamilyId::P13a => &["0 < s < 1", "z^2 + 4w(1 - s^2) <= 0", "q^2 - 4p(1 - s^2) <= 0"],
            FamilyId::P13b => &["(z/2)^2 <= -w - 1", "(q/2)^2 <= p - 1"],
            FamilyId::P13c => &[
                "k != 0",
                "(4 + k^2)(z^2 + (w + 1)^2) <= k^2 (1 - w)^2",
                "(4 + k^2)(q^2 + (p - 1)^2) <= k^2 (p + 1)^2",
                "(w, z, p, q) != (-1, 0, 1, 0)",
            ],
            FamilyId::P14 => &[
                "(3w)^2 <= -16z(z + 1)",
                "(3p)^2 <= 16q(q - 1)",
                "q > 0",
                "z < 0",
                "(w, z, p, q) != (0, -1/3, 0, 3)",
            ],
            FamilyId::P16a => &["w > 0", "w != 1", "(w - 1)^2 c^2 <= 4w"],
            FamilyId::P16b => &["4d^2 >= 1"],
            FamilyId::RemarkF => &["f continuous, strictly increasing, f(0) = 0, f(u) -> inf", "f not linear"],
            FamilyId::P17a => &[
                "q > 0",
                "p = q with -1 <= d < 0, or p = (k - 1)/(k + 1) q for an integer k >= 1 with d > 0",
                "-(q + p)^2 A + (q - p)^2 B - 4AB >= 0, A = ((d - 1)^2 + c^2)/(4d), B = ((d + 1)^2 + c^2)/(4d)",
            ],
            FamilyId::P17b => &[
                "m, n integers, gcd(m, n) = 1",
                "m = n = 1 with -1 <= d < 0, or n = m + 1 (m >= 1) with d > 0, or n = m + 2 (m odd, m >= 1) with d > 0",
                "(n - m)^2 B >= (n + m)^2 A, A = ((d - 1)^2 + c^2)/(4d), B = ((d + 1)^2 + c^2)/(4d)",
            ],
        }
    }
}

impl fmt::Display for FamilyId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for FamilyId {
    type Err = QfError;
    fn from_str(s: &str) -> Result<Self> {
        if s.eq_ignore_ascii_case("complex") {
            return Ok(FamilyId::Complex);
        }
        FamilyId::ALL
            .iter()
            .find(|id| id.as_str().eq_ignore_ascii_case(s))
            .copied()
            .ok_or_else(|| QfError::UnknownFamily(s.to_string()))
    }
}

/// Strictly increasing f with f(0) = 0 and f -> infinity.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub enum MonotoneFn {
    /// u + u^3
    Cubic,
    /// u^w
    Power(f64),
    /// e^u - 1
    Expm1,
}

impl MonotoneFn {
    pub fn name(&self) -> String {
        match self {
            MonotoneFn::Cubic => "cubic".into(),
            MonotoneFn::Power(w) => format!("power:{w}"),
            MonotoneFn::Expm1 => "expm1".into(),
        }
    }
}

impl FromStr for MonotoneFn {
    type Err = QfError;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "cubic" => Ok(MonotoneFn::Cubic),
            "expm1" => Ok(MonotoneFn::Expm1),
            _ => match s.strip_prefix("power:") {
                Some(w) => w
                    .parse::<f64>()
                    .map(MonotoneFn::Power)
                    .map_err(|_| QfError::Input(format!("bad exponent in {s:?}"))),
                None => Err(QfError::Input(format!("unknown function {s:?} (cubic, expm1, power:<w>)"))),
            },
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FamilySpec {
    pub id: FamilyId,
    pub params: BTreeMap<String, f64>,
    pub f: Option<MonotoneFn>,
}

impl FamilySpec {
    pub fn defaults(id: FamilyId) -> Self {
        Self {
            id,
            params: id.defaults(),
            f: (id == FamilyId::RemarkF).then_some(MonotoneFn::Cubic),
        }
    }

    /// Defaults overridden by `overrides`; unknown names are kept so that
    /// `validate` can report them.
    pub fn with(id: FamilyId, overrides: &BTreeMap<String, f64>) -> Self {
        let mut s = Self::defaults(id);
        for (k, v) in overrides {
            s.params.insert(k.clone(), *v);
        }
        s
    }

    pub fn param(&self, name: &str) -> f64 {
        self.params.get(name).copied().unwrap_or(f64::NAN)
    }

    pub fn params_vec(&self) -> Vec<(String, f64)> {
        let mut v: Vec<(String, f64)> = self.params.iter().map(|(k, v)| (k.clone(), *v)).collect();
        if let Some(MonotoneFn::Power(w)) = self.f {
            v.push(("f_power".into(), w));
        }
        v
    }
}

fn is_int(x: f64) -> bool {
    x.is_finite() && x.fract() == 0.0
}

fn gcd(a: i64, b: i64) -> i64 {
    if b == 0 {
        a.abs()
    } else {
        gcd(b, a % b)
    }
}

/// Checks every published constraint; returns the violated ones by name.
pub fn validate(spec: &FamilySpec) -> Result<(), Vec<String>> {
    let mut v = Vec::new();
    let names = spec.id.param_names();
    for k in spec.params.keys() {
        if !names.contains(&k.as_str()) {
            v.push(format!("parameter {k} is not used by {}", spec.id));
        }
    }
    for n in names {
        match spec.params.get(*n) {
            None => v.push(format!("missing parameter {n}")),
            Some(x) if !x.is_finite() => v.push(format!("parameter {n} is not finite")),
            _ => {}
        }
    }
    if spec.f.is_some() && spec.id != FamilyId::RemarkF {
        v.push(format!("a function f is only used by RemarkF, not {}", spec.id));
    }
    if !v.is_empty() {
        return Err(v);
    }
    let g = |n: &str| spec.param(n);
    let mut need = |ok: bool, msg: String| {
        if !ok {
            v.push(msg);
        }
    };
    match spec.id {
        FamilyId::Complex | FamilyId::P11b | FamilyId::P11c | FamilyId::P12a => {}
        FamilyId::P11a => {
            let w = g("w");
            need(w > 1.0, format!("w > 1 violated: w = {w}"));
        }
        FamilyId::P12b => {
            let ga = g("gamma");
            need(ga != 0.0 && ga.abs() <= 1.0, format!("0 < |gamma| <= 1 violated: gamma = {ga}"));
        }
        FamilyId::P13a => {
            let (s, w, z, p, q) = (g("s"), g("w"), g("z"), g("p"), g("q"));
            need(s > 0.0 && s < 1.0, format!("0 < s < 1 violated: s = {s}"));
            let l = z * z + 4.0 * w * (1.0 - s * s);
            need(l <= 0.0, format!("z^2 + 4w(1 - s^2) <= 0 violated: {l}"));
            let r = q * q - 4.0 * p * (1.0 - s * s);
            need(r <= 0.0, format!("q^2 - 4p(1 - s^2) <= 0 violated: {r}"));
        }
        FamilyId::P13b => {
            let (w, z, p, q) = (g("w"), g("z"), g("p"), g("q"));
            need(
                (z / 2.0).powi(2) <= -w - 1.0,
                format!("(z/2)^2 <= -w - 1 violated: {} > {}", (z / 2.0).powi(2), -w - 1.0),
            );
            need(
                (q / 2.0).powi(2) <= p - 1.0,
                format!("(q/2)^2 <= p - 1 violated: {} > {}", (q / 2.0).powi(2), p - 1.0),
            );
        }
        FamilyId::P13c => {
            let (k, w, z, p, q) = (g("k"), g("w"), g("z"), g("p"), g("q"));
            need(k != 0.0, "k != 0 violated".into());
            let k2 = k * k;
            let (l1, r1) = ((4.0 + k2) * (z * z + (w + 1.0).powi(2)), k2 * (1.0 - w).powi(2));
            need(l1 <= r1, format!("(4 + k^2)(z^2 + (w + 1)^2) <= k^2 (1 - w)^2 violated: {l1} > {r1}"));
            let (l2, r2) = ((4.0 + k2) * (q * q + (p - 1.0).powi(2)), k2 * (p + 1.0).powi(2));
            need(l2 <= r2, format!("(4 + k^2)(q^2 + (p - 1)^2) <= k^2 (p + 1)^2 violated: {l2} > {r2}"));
            need(
                (w, z, p, q) != (-1.0, 0.0, 1.0, 0.0),
                "(w, z, p, q) != (-1, 0, 1, 0) violated".into(),
            );
        }
        FamilyId::P14 => {
            let (w, z, p, q) = (g("w"), g("z"), g("p"), g("q"));
            let (l1, r1) = ((3.0 * w).powi(2), -16.0 * z * (z + 1.0));
            need(l1 <= r1, format!("(3w)^2 <= -16z(z + 1) violated: {l1} > {r1}"));
            let (l2, r2) = ((3.0 * p).powi(2), 16.0 * q * (q - 1.0));
            need(l2 <= r2, format!("(3p)^2 <= 16q(q - 1) violated: {l2} > {r2}"));
            need(q > 0.0, format!("q > 0 violated: q = {q}"));
            need(z < 0.0, format!("z < 0 violated: z = {z}"));
            let excluded = w == 0.0 && (z + 1.0 / 3.0).abs() < 1e-15 && p == 0.0 && q == 3.0;
            need(!excluded, "(w, z, p, q) != (0, -1/3, 0, 3) violated".into());
        }
        FamilyId::P16a => {
            let (w, c) = (g("w"), g("c"));
            need(w > 0.0, format!("w > 0 violated: w = {w}"));
            need(w != 1.0, "w != 1 violated".into());
            let l = (w - 1.0).powi(2) * c * c;
            need(l <= 4.0 * w, format!("(w - 1)^2 c^2 <= 4w violated: {l} > {}", 4.0 * w));
        }
        FamilyId::P16b => {
            let d = g("d");
            let l = 4.0 * d * d;
            need(l >= 1.0, format!("4d^2 >= 1 violated: 4d^2 = {l} < 1"));
        }
        FamilyId::RemarkF => match spec.f {
            None => v.push("RemarkF needs a function f".into()),
            Some(MonotoneFn::Power(w)) => {
                need(w.is_finite() && w > 0.0, format!("f = u^w needs w > 0, got {w}"));
                need(w != 1.0, "f must not be linear (w = 1)".into());
            }
            Some(_) => {}
        },
        FamilyId::P17a => {
            let (p, q, c, d) = (g("p"), g("q"), g("c"), g("d"));
            need(q > 0.0, format!("q > 0 violated: q = {q}"));
            need(d != 0.0, "d != 0 violated".into());
            let neg = p == q && (-1.0..0.0).contains(&d);
            let pos = d > 0.0 && q > 0.0 && p < q && {
                let k = (q + p) / (q - p);
                (k - k.round()).abs() < 1e-9 && k.round() >= 1.0
            };
            need(
                neg || pos,
                format!("p = q with -1 <= d < 0, or p = (k-1)/(k+1) q with integer k >= 1 and d > 0: p = {p}, q = {q}, d = {d}"),
            );
            if d != 0.0 {
                let a = ((d - 1.0).powi(2) + c * c) / (4.0 * d);
                let b = ((d + 1.0).powi(2) + c * c) / (4.0 * d);
                let l = -(q + p).powi(2) * a + (q - p).powi(2) * b - 4.0 * a * b;
                need(l >= 0.0, format!("-(q + p)^2 A + (q - p)^2 B - 4AB >= 0 violated: {l}"));
            }
        }
        FamilyId::P17b => {
            let (m, n, c, d) = (g("m"), g("n"), g("c"), g("d"));
            if !(is_int(m) && is_int(n)) {
                v.push(format!("m, n must be integers: m = {m}, n = {n}"));
                return Err(v);
            }
            need(gcd(m as i64, n as i64) == 1, format!("gcd(m, n) = 1 violated: m = {m}, n = {n}"));
            let case1 = m == 1.0 && n == 1.0 && (-1.0..0.0).contains(&d);
            let case2 = m >= 1.0 && n == m + 1.0 && d > 0.0;
            let case3 = m >= 1.0 && (m as i64) % 2 == 1 && n == m + 2.0 && d > 0.0;
            need(
                case1 || case2 || case3,
                format!("(m, n, d) fits none of the admissible cases: m = {m}, n = {n}, d = {d}"),
            );
            if d != 0.0 {
                let a = ((d - 1.0).powi(2) + c * c) / (4.0 * d);
                let b = ((d + 1.0).powi(2) + c * c) / (4.0 * d);
                let (l, r) = ((n - m).powi(2) * b, (n + m).powi(2) * a);
                need(l >= r, format!("(n - m)^2 B >= (n + m)^2 A violated: {l} < {r}"));
            }
        }
    }
    if v.is_empty() {
        Ok(())
    } else {
        Err(v)
    }
}

/// Verdicts a classification must reproduce; None where nothing is asserted.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct ExpectedVerdicts {
    pub kernel_is_diagonal: Option<bool>,
    pub decomposable: bool,
    pub quasi_simple: bool,
    pub proper: bool,
    pub contains_so2: bool,
    pub t_all_elliptic: Option<bool>,
    pub t_normal: bool,
    /// "quasi-simple, not decomposable", "quasi-simple, decomposable, SO2 B"
    /// or "split extension with a compact 1-dimensional loop"
    pub kind: String,
}

impl ExpectedVerdicts {
    /// Names of the verdicts that disagree with `v`.
    pub fn mismatches(&self, v: &Verdicts) -> Vec<String> {
        let mut out = Vec::new();
        let mut cmp = |name: &str, want: Option<bool>, got: bool| {
            if let Some(w) = want {
                if w != got {
                    out.push(format!("{name}: expected {w}, got {got}"));
                }
            }
        };
        cmp("kernel_is_diagonal", self.kernel_is_diagonal, v.kernel_is_diagonal);
        cmp("decomposable", Some(self.decomposable), v.decomposable);
        cmp("quasi_simple", Some(self.quasi_simple), v.quasi_simple);
        cmp("proper", Some(self.proper), v.proper);
        cmp("contains_so2", Some(self.contains_so2), v.contains_so2);
        cmp("t_all_elliptic", self.t_all_elliptic, v.t_all_elliptic);
        cmp("t_normal", Some(self.t_normal), v.t_normal);
        out
    }

    pub fn matches(&self, r: &ClassificationReport) -> bool {
        self.mismatches(&r.verdicts).is_empty()
    }
}

/// Classification stated for a family, independent of its parameters.
pub fn expected_verdicts(id: FamilyId) -> ExpectedVerdicts {
    let ev = |kernel: Option<bool>, dec: bool, qs: bool, so2: bool, kind: &str| ExpectedVerdicts {
        kernel_is_diagonal: kernel,
        decomposable: dec,
        quasi_simple: qs,
        proper: true,
        contains_so2: so2,
        t_all_elliptic: dec.then_some(true),
        t_normal: false,
        kind: kind.into(),
    };
    const QS: &str = "quasi-simple, not decomposable";
    const SO2: &str = "quasi-simple, decomposable, SO2 B";
    const SPLIT: &str = "split extension with a compact 1-dimensional loop";
    match id {
        FamilyId::Complex => ExpectedVerdicts {
            kernel_is_diagonal: Some(true),
            decomposable: true,
            quasi_simple: false,
            proper: false,
            contains_so2: true,
            t_all_elliptic: Some(true),
            t_normal: true,
            kind: "group (complex numbers)".into(),
        },
        FamilyId::P11a | FamilyId::P17b => ev(Some(true), true, false, false, SPLIT),
        FamilyId::P16a | FamilyId::P16b | FamilyId::RemarkF => ev(Some(false), true, true, true, SO2),
        FamilyId::P11b => ev(Some(false), false, true, false, QS),
        FamilyId::P11c | FamilyId::P12a | FamilyId::P12b | FamilyId::P13a | FamilyId::P13b | FamilyId::P13c => {
            ev(Some(true), false, true, false, QS)
        }
        // diagonal exactly for w = p = 0, q = -z = 1
        FamilyId::P14 => ev(None, false, true, false, QS),
        FamilyId::P17a => ev(None, false, true, false, QS),
    }
}

impl FamilySpec {
    /// `expected_verdicts` refined by parameter-dependent statements.
    pub fn expected(&self) -> ExpectedVerdicts {
        let mut e = expected_verdicts(self.id);
        if self.id == FamilyId::P14 {
            let diag = self.param("w") == 0.0
                && self.param("p") == 0.0
                && self.param("q") == 1.0
                && self.param("z") == -1.0;
            e.kernel_is_diagonal = Some(diag);
        }
        e
    }
}

/// Branch metadata of a piecewise spread.
#[derive(Clone, Debug, Serialize)]
pub struct BranchInfo {
    pub name: String,
    pub params: Vec<String>,
    pub condition: String,
}

/// A validated family with its section, spread set and stated verdicts.
pub struct FamilyInstance<T> {
    pub spec: FamilySpec,
    pub section: SectionPair<T>,
    pub spread: SpreadFamily<T>,
    pub expected: ExpectedVerdicts,
    pub branches: Vec<BranchInfo>,
    chart: ChartFn<T>,
    subst: Option<SubstFn<T>>,
}

impl<T> fmt::Debug for FamilyInstance<T> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("FamilyInstance")
            .field("spec", &self.spec)
            .field("branches", &self.branches)
            .finish()
    }
}

pub fn instantiate<T: Real>(spec: &FamilySpec) -> Result<FamilyInstance<T>> {
    validate(spec).map_err(QfError::Violations)?;
    let model = families::build::<T>(spec);
    let name = spec.id.as_str();
    let params = spec.params_vec();
    let section = match model.section {
        Some(s) => s.renamed(name, params),
        None => {
            let (chart, subst) = (model.chart.clone(), model.subst.clone().expect("implicit family"));
            SectionPair::new(name, params, move |r, t| families::ray_solve(&chart, &subst, r, t))
        }
    };
    let branches = model
        .branches
        .iter()
        .zip(&model.conditions)
        .map(|(b, c)| BranchInfo {
            name: b.name.clone(),
            params: b.param_names.clone(),
            condition: c.to_string(),
        })
        .collect();
    Ok(FamilyInstance {
        spec: spec.clone(),
        section,
        spread: SpreadFamily::new(name, model.branches),
        expected: spec.expected(),
        branches,
        chart: model.chart,
        subst: model.subst,
    })
}

/// One point of an export grid.
#[derive(Clone, Debug, Serialize)]
pub struct GridRow {
    pub r: f64,
    pub t: f64,
    pub a: f64,
    pub b: f64,
    pub branch: usize,
    pub native: Vec<f64>,
    pub m: [[f64; 2]; 2],
}

impl<T: Real> FamilyInstance<T> {
    /// Native spread parameters (branch, values) of the element `x`.
    pub fn native_params(&self, x: Vec2<T>) -> Result<(usize, Vec<T>)> {
        (self.chart)(x)
    }

    /// The substitution formulas at native parameters, for implicit families.
    pub fn substitution(&self, branch: usize, native: &[T]) -> Option<Substitution<T>> {
        self.subst.as_ref().and_then(|s| s(branch, native))
    }

    pub fn is_implicit(&self) -> bool {
        self.subst.is_some()
    }

    /// Spread matrix with first column `x`, straight from the spread formulas.
    pub fn spread_matrix(&self, x: Vec2<T>) -> Result<crate::linalg::Mat2<T>> {
        let (b, p) = self.native_params(x)?;
        (self.spread.branches[b].eval)(&p).ok_or_else(|| QfError::InvalidSection {
            u: f64::NAN,
            t: f64::NAN,
            reason: format!("chart left the domain of branch {}", self.spread.branches[b].name),
        })
    }

    /// Rows over n_r log-spaced radii in [1/2, 2] times n_t angles.
    pub fn grid(&self, n_r: usize, n_t: usize) -> Result<Vec<GridRow>> {
        let rs: Vec<T> = if n_r == 1 { vec![T::one()] } else { logspace(lit(0.5), lit(2.0), n_r) };
        let ts: Vec<T> = uniform_angles(n_t);
        let mut rows = Vec::with_capacity(n_r * n_t);
        for &r in &rs {
            for &t in &ts {
                let (a, b) = self.section.eval(r, t)?;
                let x = element_of(&self.section, PolarParam::new(r, t))?;
                let (br, p) = self.native_params(x)?;
                let m = self.spread_matrix(x)?;
                rows.push(GridRow {
                    r: to_f64(r),
                    t: to_f64(t),
                    a: to_f64(a),
                    b: to_f64(b),
                    branch: br,
                    native: p.iter().map(|&v| to_f64(v)).collect(),
                    m: m.to_f64(),
                });
            }
        }
        Ok(rows)
    }

    /// Spread sample tagged with native parameters, one element per grid row.
    pub fn export(&self, n_r: usize, n_t: usize) -> Result<SpreadSample> {
        let rows = self.grid(n_r, n_t)?;
        let params: Vec<NamedParam> = self
            .spec
            .params_vec()
            .into_iter()
            .map(|(name, value)| NamedParam { name, value })
            .collect();
        let name = match self.spec.f {
            Some(f) => format!("{}[f={}]", self.spec.id, f.name()),
            None => self.spec.id.to_string(),
        };
        Ok(SpreadSample {
            name,
            params,
            elements: rows
                .into_iter()
                .map(|row| {
                    let mut p = vec![row.branch as f64];
                    p.extend(row.native);
                    SpreadElement { p, m: row.m }
                })
                .collect(),
            includes_vertical: false,
        })
    }
}

#[cfg(test)]
mod tests;
