//! Spread sets: the axioms (M1)/(M2), normalization, the loop coordinatized
//! by a spread, and conversion of sampled spreads back into sections.

use std::sync::Arc;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{QfError, Result};
use crate::linalg::{decompose_gl2plus, rotation, Mat2, Vec2};
use crate::roots::levenberg_marquardt;
use crate::scalar::{lit, normalize_angle, to_f64, Real};
use crate::section::{matrix_from_values, SectionPair};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct NamedParam {
    pub name: String,
    pub value: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SpreadElement {
    pub p: Vec<f64>,
    pub m: [[f64; 2]; 2],
}

impl SpreadElement {
    pub fn matrix(&self) -> Mat2<f64> {
        Mat2::from_rows(self.m)
    }
}

/// Finite parameter-tagged sample of a spread set.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SpreadSample {
    pub name: String,
    #[serde(default)]
    pub params: Vec<NamedParam>,
    pub elements: Vec<SpreadElement>,
    #[serde(default)]
    pub includes_vertical: bool,
}

impl SpreadSample {
    pub fn from_json(s: &str) -> Result<Self> {
        let sample: SpreadSample =
            serde_json::from_str(s).map_err(|e| QfError::Input(format!("spread JSON: {e}")))?;
        sample.check()?;
        Ok(sample)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("spread sample serializes")
    }

    pub fn check(&self) -> Result<()> {
        for (i, e) in self.elements.iter().enumerate() {
            if !e.matrix().is_finite() || e.p.iter().any(|v| !v.is_finite()) {
                return Err(QfError::Input(format!("element {i} is not finite")));
            }
        }
        let mut tags: Vec<&Vec<f64>> = self.elements.iter().map(|e| &e.p).collect();
        tags.sort_by(|a, b| a.partial_cmp(b).unwrap_or(std::cmp::Ordering::Equal));
        if tags.windows(2).any(|w| w[0] == w[1]) {
            return Err(QfError::Input("parameter tags must be unique".into()));
        }
        Ok(())
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct M1Violation {
    pub i: usize,
    pub j: usize,
    pub p_i: Vec<f64>,
    pub p_j: Vec<f64>,
    pub det: f64,
}

#[derive(Clone, Debug, Serialize)]
pub struct M1Report {
    pub pairs: usize,
    pub min_abs_det: f64,
    pub violations: Vec<M1Violation>,
}

impl M1Report {
    pub fn passed(&self) -> bool {
        self.violations.is_empty()
    }
}

/// |det(w_i - w_j)| > atol for every pair.
pub fn check_m1(sample: &SpreadSample, atol: f64) -> Result<M1Report> {
    let n = sample.elements.len();
    if n < 2 {
        return Err(QfError::Input("check_m1 needs at least two elements".into()));
    }
    let mats: Vec<Mat2<f64>> = sample.elements.iter().map(|e| e.matrix()).collect();
    let per_row: Vec<(f64, Vec<M1Violation>)> = (0..n)
        .into_par_iter()
        .map(|i| {
            let mut min = f64::INFINITY;
            let mut bad = Vec::new();
            for j in i + 1..n {
                let d = (mats[i] - mats[j]).det();
                min = min.min(d.abs());
                if !(d.abs() > atol) {
                    bad.push(M1Violation {
                        i,
                        j,
                        p_i: sample.elements[i].p.clone(),
                        p_j: sample.elements[j].p.clone(),
                        det: d,
                    });
                }
            }
            (min, bad)
        })
        .collect();
    let mut min_abs_det = f64::INFINITY;
    let mut violations = Vec::new();
    for (m, b) in per_row {
        min_abs_det = min_abs_det.min(m);
        violations.extend(b);
    }
    Ok(M1Report {
        pairs: n * (n - 1) / 2,
        min_abs_det,
        violations,
    })
}

/// (w - w0)(w1 - w0)^{-1} for every element; w0 -> 0, w1 -> I.
pub fn normalize_spread(sample: &SpreadSample, w0_tag: &[f64], w1_tag: &[f64]) -> Result<SpreadSample> {
    let find = |tag: &[f64]| {
        sample
            .elements
            .iter()
            .find(|e| e.p == tag)
            .map(|e| e.matrix())
            .ok_or_else(|| QfError::Input(format!("no element tagged {tag:?}")))
    };
    let w0 = find(w0_tag)?;
    let w1 = find(w1_tag)?;
    let inv = (w1 - w0)
        .inverse()
        .ok_or_else(|| QfError::Domain("w1 - w0 is singular".into()))?;
    let elements = sample
        .elements
        .iter()
        .map(|e| SpreadElement {
            p: e.p.clone(),
            m: ((e.matrix() - w0) * inv).rows(),
        })
        .collect();
    Ok(SpreadSample {
        name: sample.name.clone(),
        params: sample.params.clone(),
        elements,
        includes_vertical: sample.includes_vertical,
    })
}

pub type BranchFn<T> = Arc<dyn Fn(&[T]) -> Option<Mat2<T>> + Send + Sync>;

/// One smooth piece of a spread family; `eval` returns None off its domain.
#[derive(Clone)]
pub struct SpreadBranch<T> {
    pub name: String,
    pub param_names: Vec<String>,
    /// Box used to seed parameter searches.
    pub seed_box: Vec<(f64, f64)>,
    pub eval: BranchFn<T>,
}

impl<T: Real> SpreadBranch<T> {
    pub fn new(
        name: impl Into<String>,
        param_names: &[&str],
        seed_box: Vec<(f64, f64)>,
        eval: impl Fn(&[T]) -> Option<Mat2<T>> + Send + Sync + 'static,
    ) -> Self {
        assert_eq!(param_names.len(), seed_box.len());
        Self {
            name: name.into(),
            param_names: param_names.iter().map(|s| s.to_string()).collect(),
            seed_box,
            eval: Arc::new(eval),
        }
    }
}

/// Parametrized spread set (without the vertical component).
#[derive(Clone)]
pub struct SpreadFamily<T> {
    pub name: String,
    pub branches: Vec<SpreadBranch<T>>,
}

impl<T: Real> std::fmt::Debug for SpreadFamily<T> {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        let names: Vec<&str> = self.branches.iter().map(|b| b.name.as_str()).collect();
        f.debug_struct("SpreadFamily")
            .field("name", &self.name)
            .field("branches", &names)
            .finish()
    }
}

/// Parameters located by a search, with the branch they belong to.
#[derive(Clone, Debug)]
pub struct ParamHit<T> {
    pub branch: usize,
    pub params: Vec<T>,
    pub matrix: Mat2<T>,
    pub residual: T,
}

impl<T: Real> SpreadFamily<T> {
    pub fn new(name: impl Into<String>, branches: Vec<SpreadBranch<T>>) -> Self {
        Self {
            name: name.into(),
            branches,
        }
    }

    /// Finds parameters with omega(x) = w by multistart Levenberg-Marquardt
    /// from a coarse grid over each branch's seed box. Returns the best hit;
    /// callers compare its residual against their tolerance.
    pub fn solve_image(&self, x: Vec2<T>, w: Vec2<T>, rel_tol: T) -> Option<ParamHit<T>> {
        let ftol = rel_tol * (T::one() + w.norm());
        let mut best: Option<ParamHit<T>> = None;
        for (bi, br) in self.branches.iter().enumerate() {
            let f = |p: &[T]| -> Option<[T; 2]> {
                let m = (br.eval)(p)?;
                let v = m.apply(x) - w;
                if v.is_finite() {
                    Some([v.x, v.y])
                } else {
                    None
                }
            };
            let per_dim: usize = if br.seed_box.len() == 1 { 24 } else { 10 };
            let mut seeds: Vec<(T, Vec<T>)> = Vec::new();
            let n = br.seed_box.len();
            let total = per_dim.pow(n as u32);
            for idx in 0..total {
                let mut p = Vec::with_capacity(n);
                let mut rest = idx;
                for &(lo, hi) in &br.seed_box {
                    let k = rest % per_dim;
                    rest /= per_dim;
                    p.push(lit::<T>(lo + (hi - lo) * (k as f64 + 0.5) / per_dim as f64));
                }
                if let Some(r) = f(&p) {
                    seeds.push((r[0].hypot(r[1]), p));
                }
            }
            seeds.sort_by(|a, b| a.0.partial_cmp(&b.0).unwrap_or(std::cmp::Ordering::Equal));
            for (_, seed) in seeds.iter().take(12) {
                let Some(sol) = levenberg_marquardt(&f, seed, ftol * lit(1e-3), 200) else {
                    continue;
                };
                let Some(m) = (br.eval)(&sol.x) else { continue };
                let hit = ParamHit {
                    branch: bi,
                    params: sol.x,
                    matrix: m,
                    residual: sol.residual,
                };
                let better = best.as_ref().map_or(true, |b| hit.residual < b.residual);
                if better {
                    best = Some(hit);
                }
                if best.as_ref().is_some_and(|b| b.residual <= ftol) {
                    return best;
                }
            }
        }
        best
    }

    pub fn loop_from_spread(&self, e: Vec2<T>) -> Result<SpreadLoop<'_, T>> {
        if e.is_zero() {
            return Err(QfError::Domain("e must be nonzero".into()));
        }
        Ok(SpreadLoop { family: self, e })
    }

    /// Sample over the given parameter points of one branch.
    pub fn sample(&self, branch: usize, points: &[Vec<T>], params: Vec<NamedParam>) -> SpreadSample {
        let br = &self.branches[branch];
        let elements = points
            .iter()
            .filter_map(|p| {
                (br.eval)(p).map(|m| SpreadElement {
                    p: p.iter().map(|&v| to_f64(v)).collect(),
                    m: m.to_f64(),
                })
            })
            .collect();
        SpreadSample {
            name: self.name.clone(),
            params,
            elements,
            includes_vertical: false,
        }
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct M2Report {
    pub targets: usize,
    pub covered: usize,
    pub coverage: f64,
    /// (x, w, best residual)
    pub uncovered: Vec<([f64; 2], [f64; 2], f64)>,
}

/// Sampled surjectivity of omega -> omega(x).
pub fn check_m2<T: Real>(
    family: &SpreadFamily<T>,
    xs: &[Vec2<T>],
    targets: &[Vec2<T>],
    rel_tol: T,
) -> Result<M2Report> {
    if xs.iter().any(|x| x.is_zero()) {
        return Err(QfError::Domain("x samples must be nonzero".into()));
    }
    let jobs: Vec<(Vec2<T>, Vec2<T>)> = xs
        .iter()
        .flat_map(|&x| targets.iter().map(move |&w| (x, w)))
        .collect();
    let results: Vec<Option<([f64; 2], [f64; 2], f64)>> = jobs
        .par_iter()
        .map(|&(x, w)| {
            let tol = rel_tol * (T::one() + w.norm());
            let hit = family.solve_image(x, w, rel_tol);
            match hit {
                Some(h) if h.residual <= tol => None,
                Some(h) => Some((x.to_f64(), w.to_f64(), to_f64(h.residual))),
                None => Some((x.to_f64(), w.to_f64(), f64::INFINITY)),
            }
        })
        .collect();
    let uncovered: Vec<_> = results.into_iter().flatten().collect();
    let total = jobs.len();
    let covered = total - uncovered.len();
    Ok(M2Report {
        targets: total,
        covered,
        coverage: if total == 0 { 1.0 } else { covered as f64 / total as f64 },
        uncovered,
    })
}

/// Multiplication m o x = (phi_e^{-1}(m))(x) of the loop coordinatized by a spread.
pub struct SpreadLoop<'a, T> {
    family: &'a SpreadFamily<T>,
    e: Vec2<T>,
}

impl<'a, T: Real> SpreadLoop<'a, T> {
    /// The unique spread element with omega(e) = m.
    pub fn translation(&self, m: Vec2<T>) -> Result<Mat2<T>> {
        let tol = lit::<T>(1e-13);
        match self.family.solve_image(self.e, m, tol) {
            Some(h) if h.residual <= lit::<T>(1e-11) * (T::one() + m.norm()) => Ok(h.matrix),
            Some(h) => Err(QfError::NoConvergence {
                what: format!("spread parameter search in {}", self.family.name),
                residual: to_f64(h.residual),
            }),
            None => Err(QfError::NoConvergence {
                what: format!("spread parameter search in {}", self.family.name),
                residual: f64::INFINITY,
            }),
        }
    }

    pub fn multiply(&self, m: Vec2<T>, x: Vec2<T>) -> Result<Vec2<T>> {
        Ok(self.translation(m)?.apply(x))
    }
}

/// Both factorizations of one section value.
#[derive(Clone, Copy, Debug)]
pub struct SigmaConversion<T> {
    /// rotation(t) diag(r a, 1/(r a)) [[1, b/a], [0, r^2]]
    pub sigma_prime: Mat2<T>,
    /// rotation(t) (r I) [[a, b], [0, 1/a]]
    pub sigma: Mat2<T>,
    pub discrepancy: T,
}

pub fn sigma_prime_to_sigma<T: Real>(r: T, t: T, a: T, b: T) -> Result<SigmaConversion<T>> {
    if !(r > T::zero()) || !(a > T::zero()) {
        return Err(QfError::Domain("sigma conversion needs r > 0 and a > 0".into()));
    }
    let ra = r * a;
    let sp = rotation(t)
        * Mat2::new(ra, T::zero(), T::zero(), ra.recip())
        * Mat2::new(T::one(), b / a, T::zero(), r * r);
    let s = matrix_from_values(r, t, a, b);
    Ok(SigmaConversion {
        sigma_prime: sp,
        sigma: s,
        discrepancy: sp.max_abs_diff(&s),
    })
}

fn cluster(values: &mut Vec<f64>, tol: f64) -> Vec<f64> {
    values.sort_by(|a, b| a.partial_cmp(b).unwrap());
    let mut out: Vec<f64> = Vec::new();
    for &v in values.iter() {
        if out.last().map_or(true, |&l| v - l > tol) {
            out.push(v);
        }
    }
    out
}

/// Rebuilds a section from a sample whose matrices lie on a tensor grid in
/// (ln u, t): bilinear in ln u and t (periodic), constant beyond the u range.
pub fn section_from_sample(sample: &SpreadSample) -> Result<SectionPair<f64>> {
    let mut pts = Vec::new();
    for e in &sample.elements {
        let m = e.matrix();
        if m.max_abs() == 0.0 {
            continue;
        }
        let c = decompose_gl2plus(&m)?;
        pts.push((c.u.ln(), c.t, c.k, c.l));
    }
    let mut lu: Vec<f64> = pts.iter().map(|p| p.0).collect();
    let mut ts: Vec<f64> = pts.iter().map(|p| p.1).collect();
    let lu = cluster(&mut lu, 1e-9);
    let ts = cluster(&mut ts, 1e-9);
    if lu.len() < 2 || ts.len() < 2 || lu.len() * ts.len() != pts.len() {
        return Err(QfError::Input(format!(
            "sample is not a tensor grid in (u, t): {} points, {} u values, {} t values",
            pts.len(),
            lu.len(),
            ts.len()
        )));
    }
    let nu = lu.len();
    let nt = ts.len();
    let mut a = vec![f64::NAN; nu * nt];
    let mut b = vec![f64::NAN; nu * nt];
    let locate = |g: &[f64], v: f64| g.iter().position(|&x| (x - v).abs() <= 1e-9);
    for p in &pts {
        let (Some(i), Some(j)) = (locate(&lu, p.0), locate(&ts, p.1)) else {
            return Err(QfError::Input("grid lookup failed".into()));
        };
        a[i * nt + j] = p.2;
        b[i * nt + j] = p.3;
    }
    if a.iter().any(|v| v.is_nan()) {
        return Err(QfError::Input("sample grid has holes".into()));
    }
    let params = sample.params.iter().map(|p| (p.name.clone(), p.value)).collect();
    let grid = Arc::new((lu, ts, a, b));
    Ok(SectionPair::new(sample.name.clone(), params, move |u: f64, t: f64| {
        let (lu, ts, a, b) = &*grid;
        let x = u.ln().clamp(lu[0], lu[nu - 1]);
        let i = lu.partition_point(|&v| v <= x).clamp(1, nu - 1) - 1;
        let wu = ((x - lu[i]) / (lu[i + 1] - lu[i])).clamp(0.0, 1.0);
        let t = normalize_angle(t);
        // periodic neighbour in t
        let j1 = ts.partition_point(|&v| v <= t);
        let (j0, j1, t0, t1) = if j1 == 0 {
            (nt - 1, 0, ts[nt - 1] - std::f64::consts::TAU, ts[0])
        } else if j1 == nt {
            (nt - 1, 0, ts[nt - 1], ts[0] + std::f64::consts::TAU)
        } else {
            (j1 - 1, j1, ts[j1 - 1], ts[j1])
        };
        let wt = if t1 > t0 { (t - t0) / (t1 - t0) } else { 0.0 };
        let at = |g: &Vec<f64>, i: usize| g[i * nt + j0] * (1.0 - wt) + g[i * nt + j1] * wt;
        let va = at(a, i) * (1.0 - wu) + at(a, i + 1) * wu;
        let vb = at(b, i) * (1.0 - wu) + at(b, i + 1) * wu;
        Ok((va, vb))
    }))
}
