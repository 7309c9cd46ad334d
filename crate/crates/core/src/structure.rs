//! Structural predicates: kernel, decomposability, quasi-simplicity,
//! SO2-containment, ellipticity of the compact factor, normality.

use std::collections::BTreeMap;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{QfError, Result};
use crate::linalg::{rotation, Mat2};
use crate::section::{matrix_from_values, NumericPolicy, QuasifieldLoop, SectionPair};
use crate::scalar::{lit, to_f64, Real, Tolerance};

/// A grid point where a tested identity is worst.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Witness {
    pub test: String,
    pub r: f64,
    pub t: f64,
    pub k: u8,
    pub lhs: f64,
    pub rhs: f64,
    pub residual: f64,
}

/// Verdict of one predicate plus its maximal-residual point.
#[derive(Clone, Debug, Serialize)]
pub struct PredicateOutcome {
    pub holds: bool,
    pub witness: Option<Witness>,
}

/// Tracks the worst scaled residual among identity checks.
struct Worst {
    test: &'static str,
    best: Option<(f64, Witness)>,
    ok: bool,
}

impl Worst {
    fn new(test: &'static str) -> Self {
        Self { test, best: None, ok: true }
    }

    fn check<T: Real>(&mut self, tol: &Tolerance<T>, r: T, t: T, k: u8, lhs: T, rhs: T) {
        let scaled = to_f64(tol.scaled(lhs, rhs));
        let scaled = if scaled.is_nan() { f64::INFINITY } else { scaled };
        if scaled > 1.0 {
            self.ok = false;
        }
        if self.best.as_ref().map_or(true, |(s, _)| scaled > *s) {
            self.best = Some((
                scaled,
                Witness {
                    test: self.test.to_string(),
                    r: to_f64(r),
                    t: to_f64(t),
                    k,
                    lhs: to_f64(lhs),
                    rhs: to_f64(rhs),
                    residual: to_f64((lhs - rhs).abs()),
                },
            ));
        }
    }

    fn merge(mut self, other: Worst) -> Worst {
        self.ok &= other.ok;
        if let Some((s, w)) = other.best {
            if self.best.as_ref().map_or(true, |(b, _)| s > *b) {
                self.best = Some((s, w));
            }
        }
        self
    }

    fn outcome(self) -> PredicateOutcome {
        PredicateOutcome {
            holds: self.ok,
            witness: self.best.map(|(_, w)| w),
        }
    }
}

/// Section values on the policy grid, at t and t + pi, plus the r = 1 row
/// and the kernel angles 0 and pi.
pub struct SectionTable<T> {
    pub r: Vec<T>,
    pub t: Vec<T>,
    /// a[k][i][j] = a(r_i, t_j + k pi)
    pub a: [Vec<Vec<T>>; 2],
    pub b: [Vec<Vec<T>>; 2],
    /// a(1, t_j + k pi)
    pub a1: [Vec<T>; 2],
    pub b1: [Vec<T>; 2],
    /// a(r_i, k pi)
    pub ak: [Vec<T>; 2],
    pub bk: [Vec<T>; 2],
}

impl<T: Real> SectionTable<T> {
    pub fn build(s: &SectionPair<T>, policy: &NumericPolicy<T>) -> Result<Self> {
        policy.validate()?;
        let pi = T::PI();
        let shifts = [T::zero(), pi];
        let row = |r: T, k: usize| -> Result<(Vec<T>, Vec<T>)> {
            let mut a = Vec::with_capacity(policy.t_grid.len());
            let mut b = Vec::with_capacity(policy.t_grid.len());
            for &t in &policy.t_grid {
                let (x, y) = s.eval(r, t + shifts[k])?;
                a.push(x);
                b.push(y);
            }
            Ok((a, b))
        };
        let mut rows: Vec<(usize, Option<usize>)> = Vec::new();
        for k in 0..2 {
            rows.push((k, None));
            for i in 0..policy.u_grid.len() {
                rows.push((k, Some(i)));
            }
        }
        let computed: Vec<Result<(Vec<T>, Vec<T>)>> = rows
            .par_iter()
            .map(|&(k, i)| row(i.map_or(T::one(), |i| policy.u_grid[i]), k))
            .collect();
        let mut a: [Vec<Vec<T>>; 2] = [Vec::new(), Vec::new()];
        let mut b: [Vec<Vec<T>>; 2] = [Vec::new(), Vec::new()];
        let mut a1: [Vec<T>; 2] = [Vec::new(), Vec::new()];
        let mut b1: [Vec<T>; 2] = [Vec::new(), Vec::new()];
        for (&(k, i), res) in rows.iter().zip(computed) {
            let (ra, rb) = res?;
            match i {
                None => {
                    a1[k] = ra;
                    b1[k] = rb;
                }
                Some(_) => {
                    a[k].push(ra);
                    b[k].push(rb);
                }
            }
        }
        let mut ak: [Vec<T>; 2] = [Vec::new(), Vec::new()];
        let mut bk: [Vec<T>; 2] = [Vec::new(), Vec::new()];
        for k in 0..2 {
            for &r in &policy.u_grid {
                let (x, y) = s.eval(r, shifts[k])?;
                ak[k].push(x);
                bk[k].push(y);
            }
        }
        Ok(Self {
            r: policy.u_grid.clone(),
            t: policy.t_grid.clone(),
            a,
            b,
            a1,
            b1,
            ak,
            bk,
        })
    }

    fn theta(&self, j: usize, k: usize) -> T {
        self.t[j] + T::PI() * lit(k as f64)
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct KernelEntry {
    pub k: u8,
    pub r: f64,
    /// r cos(k pi) a(r, k pi)
    pub value: f64,
    pub matrix: [[f64; 2]; 2],
}

#[derive(Clone, Debug, Serialize)]
pub struct KernelSample {
    pub entries: Vec<KernelEntry>,
    pub diagonal: bool,
    pub witness: Option<Witness>,
}

/// Left translations of the kernel elements (t = 0 and t = pi).
pub fn kernel_translations<T: Real>(
    s: &SectionPair<T>,
    r_grid: &[T],
    policy: &NumericPolicy<T>,
) -> Result<KernelSample> {
    let mut ak = [Vec::new(), Vec::new()];
    let mut bk = [Vec::new(), Vec::new()];
    for k in 0..2 {
        for &r in r_grid {
            let (a, b) = s.eval(r, T::PI() * lit(k as f64))?;
            ak[k].push(a);
            bk[k].push(b);
        }
    }
    kernel_from_values(r_grid, &ak, &bk, policy)
}

fn kernel_from_values<T: Real>(
    r_grid: &[T],
    ak: &[Vec<T>; 2],
    bk: &[Vec<T>; 2],
    policy: &NumericPolicy<T>,
) -> Result<KernelSample> {
    let tol = policy.identity_tolerance();
    let mut entries = Vec::new();
    let mut worst = Worst::new("kernel_diagonal");
    for k in 0..2 {
        let t = T::PI() * lit(k as f64);
        let sign = if k == 0 { T::one() } else { -T::one() };
        for (i, &r) in r_grid.iter().enumerate() {
            let (a, b) = (ak[k][i], bk[k][i]);
            let m = matrix_from_values(r, t, a, b);
            // rotation(k pi) = cos(k pi) I exactly
            let m = Mat2::new(m.m11, m.m12, T::zero(), m.m22);
            entries.push(KernelEntry {
                k: k as u8,
                r: to_f64(r),
                value: to_f64(sign * r * a),
                matrix: m.to_f64(),
            });
            worst.check(&tol, r, t, k as u8, a, T::one());
            worst.check(&tol, r, t, k as u8, b, T::zero());
        }
    }
    for k in 0..2 {
        let f: Vec<f64> = r_grid
            .iter()
            .zip(&ak[k])
            .map(|(&r, &a)| to_f64(r * a))
            .collect();
        let inc = f.windows(2).all(|w| w[1] > w[0]);
        let dec = f.windows(2).all(|w| w[1] < w[0]);
        if !(inc || dec) {
            return Err(QfError::InvalidSection {
                u: f64::NAN,
                t: if k == 0 { 0.0 } else { std::f64::consts::PI },
                reason: format!("kernel map f{} is not strictly monotone", k + 1),
            });
        }
    }
    let out = worst.outcome();
    Ok(KernelSample {
        entries,
        diagonal: out.holds,
        witness: out.witness,
    })
}

fn decomposable_on<T: Real>(tab: &SectionTable<T>, policy: &NumericPolicy<T>) -> PredicateOutcome {
    let tol = policy.identity_tolerance();
    (0..2usize)
        .into_par_iter()
        .flat_map(|k| (0..tab.r.len()).into_par_iter().map(move |i| (k, i)))
        .map(|(k, i)| {
            let mut wa = Worst::new("decomposable_a");
            let mut wb = Worst::new("decomposable_b");
            let r = tab.r[i];
            let (ark, brk) = (tab.ak[k][i], tab.bk[k][i]);
            for j in 0..tab.t.len() {
                let th = tab.theta(j, k);
                let (a, b) = (tab.a[k][i][j], tab.b[k][i][j]);
                let (a1, b1) = (tab.a1[k][j], tab.b1[k][j]);
                wa.check(&tol, r, th, k as u8, a, a1 * ark);
                wb.check(&tol, r, th, k as u8, b, a1 * brk + b1 / ark);
            }
            (wa, wb)
        })
        .reduce(
            || (Worst::new("decomposable_a"), Worst::new("decomposable_b")),
            |x, y| (x.0.merge(y.0), x.1.merge(y.1)),
        )
        .into_pair_outcome()
}

trait PairOutcome {
    fn into_pair_outcome(self) -> PredicateOutcome;
}

impl PairOutcome for (Worst, Worst) {
    fn into_pair_outcome(self) -> PredicateOutcome {
        let (a, b) = (self.0.outcome(), self.1.outcome());
        let holds = a.holds && b.holds;
        // report the identity that fails, preferring the larger residual
        let witness = match (a.holds, b.holds) {
            (true, false) => b.witness,
            (false, true) => a.witness,
            _ => {
                let ra = a.witness.as_ref().map_or(0.0, |w| w.residual);
                let rb = b.witness.as_ref().map_or(0.0, |w| w.residual);
                if rb > ra {
                    b.witness
                } else {
                    a.witness
                }
            }
        };
        PredicateOutcome { holds, witness }
    }
}

/// Verdict of the quasi-simplicity test.
#[derive(Clone, Debug, Serialize)]
pub struct QuasiSimpleOutcome {
    pub quasi_simple: bool,
    /// false for the group case a = 1, b = 0
    pub proper: bool,
    pub witness: Option<Witness>,
    pub proper_witness: Option<Witness>,
}

fn quasi_simple_on<T: Real>(tab: &SectionTable<T>, policy: &NumericPolicy<T>) -> QuasiSimpleOutcome {
    let tol = policy.identity_tolerance();
    let mut normal = Worst::new("normal_subloop");
    let mut group = Worst::new("group");
    for k in 0..2 {
        let t = T::PI() * lit(k as f64);
        for (i, &r) in tab.r.iter().enumerate() {
            normal.check(&tol, r, t, k as u8, tab.ak[k][i], T::one());
            normal.check(&tol, r, t, k as u8, tab.bk[k][i], T::zero());
            for j in 0..tab.t.len() {
                let th = tab.theta(j, k);
                normal.check(&tol, r, th, k as u8, tab.a[k][i][j], tab.a1[k][j]);
                normal.check(&tol, r, th, k as u8, tab.b[k][i][j], tab.b1[k][j]);
                group.check(&tol, r, th, k as u8, tab.a[k][i][j], T::one());
                group.check(&tol, r, th, k as u8, tab.b[k][i][j], T::zero());
            }
        }
    }
    let normal = normal.outcome();
    let group = group.outcome();
    QuasiSimpleOutcome {
        quasi_simple: !normal.holds,
        proper: !group.holds,
        witness: normal.witness,
        proper_witness: group.witness,
    }
}

fn so2_on<T: Real>(tab: &SectionTable<T>, policy: &NumericPolicy<T>) -> PredicateOutcome {
    let tol = policy.identity_tolerance();
    let mut w = Worst::new("so2_t_independence");
    for k in 0..2 {
        for (i, &r) in tab.r.iter().enumerate() {
            for j in 0..tab.t.len() {
                let th = tab.theta(j, k);
                w.check(&tol, r, th, k as u8, tab.a[k][i][j], tab.ak[0][i]);
                w.check(&tol, r, th, k as u8, tab.b[k][i][j], tab.bk[0][i]);
            }
        }
    }
    let mut out = w.outcome();
    let f: Vec<T> = tab.r.iter().zip(&tab.ak[0]).map(|(&r, &a)| r * a).collect();
    let mono = f.windows(2).all(|x| x[1] > x[0]) || f.windows(2).all(|x| x[1] < x[0]);
    if !mono {
        out.holds = false;
        if let Some(i) = f.windows(2).position(|x| x[1] <= x[0]) {
            out.witness = Some(Witness {
                test: "so2_monotone".into(),
                r: to_f64(tab.r[i + 1]),
                t: 0.0,
                k: 0,
                lhs: to_f64(f[i + 1]),
                rhs: to_f64(f[i]),
                residual: to_f64((f[i + 1] - f[i]).abs()),
            });
        }
    }
    out
}

fn normality_on<T: Real>(tab: &SectionTable<T>, policy: &NumericPolicy<T>) -> PredicateOutcome {
    let tol = policy.identity_tolerance();
    let mut w = Worst::new("t_normal");
    let quarter = rotation(T::FRAC_PI_2());
    for k in 0..2 {
        for j in 0..tab.t.len() {
            let th = tab.theta(j, k);
            w.check(&tol, T::one(), th, k as u8, tab.a1[k][j], T::one());
            for (i, &r) in tab.r.iter().enumerate() {
                let (a, b) = (tab.a[k][i][j], tab.b[k][i][j]);
                w.check(&tol, r, th, k as u8, b, T::zero());
                // conjugating a rotation must give a rotation
                let m = matrix_from_values(r, th, a, b);
                let c = m * quarter * m.inverse().unwrap_or_else(Mat2::zero);
                let dev = (c.m11 - c.m22).abs() + (c.m12 + c.m21).abs();
                w.check(&tol, r, th, k as u8, dev, T::zero());
            }
        }
    }
    w.outcome()
}

/// Result of the ellipticity scan of the compact factor at a fixed u.
#[derive(Clone, Debug, Serialize)]
pub struct EllipticityReport {
    pub u: f64,
    pub ok: bool,
    /// max over the grid of |cos t (a(1,t) + 1/a(1,t)) - sin t b(u,t)|
    pub max_value: f64,
    /// grid angles off the k pi bands where the value is within 1e-9 of 2
    pub boundary: Vec<f64>,
    pub violations: Vec<Witness>,
    /// which two-sided cross-check was applied
    pub cross_check: String,
    pub cross_check_ok: bool,
}

/// Width of the equality band around t = k pi.
pub const GUARD_BAND: f64 = 1e-6;

fn near_k_pi(t: f64) -> bool {
    let pi = std::f64::consts::PI;
    let m = t.rem_euclid(pi);
    m <= GUARD_BAND || pi - m <= GUARD_BAND
}

/// Checks |cos t (a(1,t) + a(1,t)^-1) - sin t b(u,t)| <= 2 with equality only
/// near t = k pi, for a section evaluated at scale `u`.
pub fn t_ellipticity_check<T: Real>(
    s: &SectionPair<T>,
    u: T,
    policy: &NumericPolicy<T>,
) -> Result<EllipticityReport> {
    let mut a1 = Vec::new();
    let mut bu = Vec::new();
    for &t in &policy.t_grid {
        a1.push(s.a(T::one(), t)?);
        bu.push(s.b(u, t)?);
    }
    Ok(ellipticity_from_values(u, &policy.t_grid, &a1, &bu, policy))
}

fn ellipticity_from_values<T: Real>(
    u: T,
    ts: &[T],
    a1: &[T],
    bu: &[T],
    policy: &NumericPolicy<T>,
) -> EllipticityReport {
    let two = lit::<T>(2.0);
    let margin = lit::<T>(1e-9);
    let tol = policy.identity_tolerance();
    let b_zero = bu.iter().all(|&b| b.abs() <= tol.atol);
    let mut max_value = T::zero();
    let mut boundary = Vec::new();
    let mut violations = Vec::new();
    let mut cross_ok = true;
    for (j, &t) in ts.iter().enumerate() {
        let (sin, cos) = t.sin_cos();
        let (a, b) = (a1[j], bu[j]);
        let v = (cos * (a + a.recip()) - sin * b).abs();
        max_value = max_value.max(v);
        let in_band = near_k_pi(to_f64(t));
        if v > two + margin {
            violations.push(Witness {
                test: "ellipticity".into(),
                r: to_f64(u),
                t: to_f64(t),
                k: 0,
                lhs: to_f64(v),
                rhs: 2.0,
                residual: to_f64(v - two),
            });
        } else if !in_band && v >= two - margin {
            boundary.push(to_f64(t));
        }
        if in_band {
            continue;
        }
        if b_zero {
            if cos != T::zero() {
                let lo = (T::one() - sin.abs()) / cos.abs();
                let hi = (T::one() + sin.abs()) / cos.abs();
                if a < lo - margin || a > hi + margin {
                    cross_ok = false;
                }
            }
        } else if sin != T::zero() {
            let c = (a + a.recip()) * cos;
            let (l, h) = ((c - two) / sin, (c + two) / sin);
            let (lo, hi) = if sin > T::zero() { (l, h) } else { (h, l) };
            if !(b > lo - margin && b < hi + margin) {
                cross_ok = false;
            }
        }
    }
    EllipticityReport {
        u: to_f64(u),
        ok: violations.is_empty() && boundary.is_empty(),
        max_value: to_f64(max_value),
        boundary,
        violations,
        cross_check: if b_zero { "a-bounds (b = 0)" } else { "b-bounds (b != 0)" }.into(),
        cross_check_ok: cross_ok,
    }
}

pub fn is_decomposable<T: Real>(s: &SectionPair<T>, policy: &NumericPolicy<T>) -> Result<PredicateOutcome> {
    Ok(decomposable_on(&SectionTable::build(s, policy)?, policy))
}

pub fn is_quasi_simple<T: Real>(s: &SectionPair<T>, policy: &NumericPolicy<T>) -> Result<QuasiSimpleOutcome> {
    Ok(quasi_simple_on(&SectionTable::build(s, policy)?, policy))
}

pub fn contains_so2<T: Real>(s: &SectionPair<T>, policy: &NumericPolicy<T>) -> Result<PredicateOutcome> {
    Ok(so2_on(&SectionTable::build(s, policy)?, policy))
}

pub fn t_normality_check<T: Real>(s: &SectionPair<T>, policy: &NumericPolicy<T>) -> Result<PredicateOutcome> {
    Ok(normality_on(&SectionTable::build(s, policy)?, policy))
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Verdicts {
    pub kernel_is_diagonal: bool,
    pub decomposable: bool,
    pub quasi_simple: bool,
    pub proper: bool,
    pub contains_so2: bool,
    pub t_all_elliptic: bool,
    pub t_normal: bool,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct ClassificationReport {
    pub family: String,
    pub params: BTreeMap<String, f64>,
    pub verdicts: Verdicts,
    pub witnesses: Vec<Witness>,
}

/// Runs every predicate on one shared grid table and enforces the
/// implications between them.
pub fn classify<T: Real>(l: &QuasifieldLoop<T>) -> Result<ClassificationReport> {
    let s = &l.section;
    let policy = &l.policy;
    let tab = SectionTable::build(s, policy)?;
    let kernel = kernel_from_values(&tab.r, &tab.ak, &tab.bk, policy)?;
    let dec = decomposable_on(&tab, policy);
    let qs = quasi_simple_on(&tab, policy);
    let so2 = so2_on(&tab, policy);
    let normal = normality_on(&tab, policy);
    let ell = ellipticity_from_values(T::one(), &tab.t, &tab.a1[0], &tab.b1[0], policy);

    let verdicts = Verdicts {
        kernel_is_diagonal: kernel.diagonal,
        decomposable: dec.holds,
        quasi_simple: qs.quasi_simple,
        proper: qs.proper,
        contains_so2: so2.holds,
        t_all_elliptic: ell.ok,
        t_normal: normal.holds,
    };
    let mut witnesses = Vec::new();
    let mut push = |holds: bool, w: Option<Witness>| {
        if !holds {
            if let Some(w) = w {
                witnesses.push(w);
            }
        }
    };
    push(verdicts.kernel_is_diagonal, kernel.witness);
    push(verdicts.decomposable, dec.witness);
    // the normal-subloop identities hold, so the witness carries their largest residual
    push(verdicts.quasi_simple, qs.witness);
    push(verdicts.proper, qs.proper_witness);
    push(verdicts.contains_so2, so2.witness);
    push(verdicts.t_normal, normal.witness);
    if !ell.ok {
        witnesses.extend(ell.violations.iter().cloned());
        for &t in &ell.boundary {
            witnesses.push(Witness {
                test: "ellipticity_boundary".into(),
                r: 1.0,
                t,
                k: 0,
                lhs: 2.0,
                rhs: 2.0,
                residual: 0.0,
            });
        }
    }

    let v = &verdicts;
    let mut broken = Vec::new();
    if !v.quasi_simple && !v.decomposable {
        broken.push("not quasi-simple but not decomposable");
    }
    if v.contains_so2 && !v.decomposable {
        broken.push("contains SO2 but not decomposable");
    }
    if v.t_normal != !v.proper {
        broken.push("T normal disagrees with the group test");
    }
    if !v.proper && !(v.decomposable && v.contains_so2 && v.kernel_is_diagonal) {
        broken.push("group case without decomposable/SO2/diagonal kernel");
    }
    if !broken.is_empty() {
        return Err(QfError::Inconsistent(broken.join("; ")));
    }
    Ok(ClassificationReport {
        family: s.name().to_string(),
        params: s.params().iter().cloned().collect(),
        verdicts,
        witnesses,
    })
}
