//! Loops given by a section (a(u,t), b(u,t)) of GL2+ over G/H.
//!
//! The left translation of the element with polar parameter (u, t) is
//! `u * rotation(t) * triangular(a(u,t), b(u,t))`.

use std::cell::RefCell;
use std::fmt;
use std::sync::Arc;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::error::{QfError, Result};
use crate::linalg::{rotation, Mat2, Vec2};
use crate::numerics::logspace;
use crate::roots::{brent, expand_bracket};
use crate::scalar::{angle_diff, lit, normalize_angle, to_f64, Real, Tolerance};

pub type SectionFn<T> = Arc<dyn Fn(T, T) -> Result<(T, T)> + Send + Sync>;

/// The pair (a, b) with a name and parameter record.
#[derive(Clone)]
pub struct SectionPair<T> {
    name: String,
    params: Vec<(String, f64)>,
    f: SectionFn<T>,
}

impl<T> fmt::Debug for SectionPair<T> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("SectionPair")
            .field("name", &self.name)
            .field("params", &self.params)
            .finish()
    }
}

impl<T: Real> SectionPair<T> {
    pub fn new(
        name: impl Into<String>,
        params: Vec<(String, f64)>,
        f: impl Fn(T, T) -> Result<(T, T)> + Send + Sync + 'static,
    ) -> Self {
        Self {
            name: name.into(),
            params,
            f: Arc::new(f),
        }
    }

    /// Section from two plain closures.
    pub fn from_fns(
        name: impl Into<String>,
        a: impl Fn(T, T) -> T + Send + Sync + 'static,
        b: impl Fn(T, T) -> T + Send + Sync + 'static,
    ) -> Self {
        Self::new(name, Vec::new(), move |u, t| Ok((a(u, t), b(u, t))))
    }

    /// a = 1, b = 0: the multiplicative group of the complex numbers.
    pub fn complex() -> Self {
        Self::from_fns("complex", |_, _| T::one(), |_, _| T::zero())
    }

    /// Same evaluator under another name and parameter record.
    pub fn renamed(self, name: impl Into<String>, params: Vec<(String, f64)>) -> Self {
        Self {
            name: name.into(),
            params,
            f: self.f,
        }
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn params(&self) -> &[(String, f64)] {
        &self.params
    }

    /// (a(u,t), b(u,t)) with t reduced to [0, 2pi).
    pub fn eval(&self, u: T, t: T) -> Result<(T, T)> {
        if !(u > T::zero()) || !u.is_finite() || !t.is_finite() {
            return Err(QfError::Domain(format!(
                "section needs u > 0 and finite t, got ({}, {})",
                to_f64(u),
                to_f64(t)
            )));
        }
        let t = normalize_angle(t);
        let (a, b) = (self.f)(u, t)?;
        if !(a > T::zero()) || !a.is_finite() || !b.is_finite() {
            return Err(QfError::InvalidSection {
                u: to_f64(u),
                t: to_f64(t),
                reason: format!("a = {}, b = {}", to_f64(a), to_f64(b)),
            });
        }
        Ok((a, b))
    }

    pub fn a(&self, u: T, t: T) -> Result<T> {
        Ok(self.eval(u, t)?.0)
    }

    pub fn b(&self, u: T, t: T) -> Result<T> {
        Ok(self.eval(u, t)?.1)
    }
}

/// Grids, tolerances and solver budgets.
#[derive(Clone, Debug, Serialize)]
pub struct NumericPolicy<T> {
    pub u_grid: Vec<T>,
    pub t_grid: Vec<T>,
    pub atol: T,
    pub rtol: T,
    /// Relative tolerance for structural identities.
    pub identity_tol: T,
    pub max_newton_iters: usize,
    pub bracket_subdivisions: usize,
}

impl<T: Real> Default for NumericPolicy<T> {
    fn default() -> Self {
        Self {
            u_grid: logspace(lit(0.125), lit(8.0), 33),
            t_grid: uniform_angles(256),
            atol: lit(1e-12),
            rtol: lit(1e-10),
            identity_tol: lit(1e-9),
            max_newton_iters: 200,
            bracket_subdivisions: 64,
        }
    }
}

impl<T: Real> NumericPolicy<T> {
    pub fn tolerance(&self) -> Tolerance<T> {
        Tolerance::new(self.atol, self.rtol)
    }

    pub fn identity_tolerance(&self) -> Tolerance<T> {
        Tolerance::new(self.identity_tol, self.identity_tol)
    }

    pub fn validate(&self) -> Result<()> {
        let sorted = |g: &[T]| g.windows(2).all(|w| w[0] < w[1]);
        if self.u_grid.is_empty() || self.t_grid.is_empty() {
            return Err(QfError::Domain("empty grid".into()));
        }
        if !sorted(&self.u_grid) || !sorted(&self.t_grid) {
            return Err(QfError::Domain("grids must be strictly increasing".into()));
        }
        if self.u_grid[0] <= T::zero() {
            return Err(QfError::Domain("u grid must be positive".into()));
        }
        if !(self.atol > T::zero() && self.rtol > T::zero() && self.identity_tol > T::zero()) {
            return Err(QfError::Domain("tolerances must be positive".into()));
        }
        Ok(())
    }
}

/// n uniform angles 2 pi j / n, j = 0..n.
pub fn uniform_angles<T: Real>(n: usize) -> Vec<T> {
    (0..n)
        .map(|j| T::TAU() * lit(j as f64) / lit(n as f64))
        .collect()
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct PolarParam<T> {
    pub r: T,
    pub t: T,
}

impl<T: Real> PolarParam<T> {
    pub fn new(r: T, t: T) -> Self {
        Self { r, t: normalize_angle(t) }
    }
}

pub fn section_matrix<T: Real>(s: &SectionPair<T>, p: PolarParam<T>) -> Result<Mat2<T>> {
    let (a, b) = s.eval(p.r, p.t)?;
    Ok(matrix_from_values(p.r, p.t, a, b))
}

/// u * rotation(t) * [[a, b], [0, 1/a]]
pub fn matrix_from_values<T: Real>(u: T, t: T, a: T, b: T) -> Mat2<T> {
    (rotation(t) * Mat2::new(a, b, T::zero(), a.recip())).scale(u)
}

pub fn element_of<T: Real>(s: &SectionPair<T>, p: PolarParam<T>) -> Result<Vec2<T>> {
    let a = s.a(p.r, p.t)?;
    let (sin, cos) = p.t.sin_cos();
    Ok(Vec2::new(p.r * cos * a, -p.r * sin * a))
}

/// Inverts `element_of`. The direction of an element fixes t exactly, leaving
/// the scalar equation r a(r, t) = |v|.
pub fn polar_of<T: Real>(
    s: &SectionPair<T>,
    v: Vec2<T>,
    policy: &NumericPolicy<T>,
) -> Result<PolarParam<T>> {
    if v.is_zero() || !v.is_finite() {
        return Err(QfError::Domain("polar_of needs a finite nonzero vector".into()));
    }
    let t = normalize_angle(-v.arg());
    let target = v.norm().ln();
    let err = RefCell::new(None);
    let g = |x: T| match s.a(x.exp(), t) {
        Ok(a) => x + a.ln() - target,
        Err(e) => {
            err.borrow_mut().get_or_insert(e);
            T::nan()
        }
    };
    let solved = expand_bracket(g, target, lit(0.5), 60)
        .and_then(|(lo, hi, flo, fhi)| {
            if lo == hi {
                Ok(lo)
            } else {
                brent(g, lo, hi, flo, fhi, policy.max_newton_iters)
            }
        });
    if let Some(e) = err.borrow_mut().take() {
        return Err(e);
    }
    let r = solved?.exp();
    let p = PolarParam { r, t };
    let back = element_of(s, p)?;
    let res = back.dist(v);
    if res > lit::<T>(1e3) * T::epsilon() * v.norm() + policy.atol {
        return Err(QfError::NoConvergence {
            what: "polar_of".into(),
            residual: to_f64(res),
        });
    }
    Ok(p)
}

#[derive(Clone, Debug, Serialize)]
pub struct LoopSectionReport {
    pub ok: bool,
    /// (u, t, offending value)
    pub witnesses: Vec<(f64, f64, f64)>,
}

/// a(1,0) = 1, b(1,0) = 0, and b(u,0) = 0 on the policy grid.
pub fn is_loop_section<T: Real>(s: &SectionPair<T>, policy: &NumericPolicy<T>) -> LoopSectionReport {
    let tol = policy.identity_tolerance();
    let mut witnesses = Vec::new();
    match s.eval(T::one(), T::zero()) {
        Ok((a, b)) => {
            if !tol.close(a, T::one()) {
                witnesses.push((1.0, 0.0, to_f64(a)));
            }
            if !tol.close(b, T::zero()) {
                witnesses.push((1.0, 0.0, to_f64(b)));
            }
        }
        Err(_) => witnesses.push((1.0, 0.0, f64::NAN)),
    }
    for &u in &policy.u_grid {
        if u == T::one() {
            continue;
        }
        match s.eval(u, T::zero()) {
            Ok((a, b)) => {
                if !(b.abs() <= tol.bound(a, b)) {
                    witnesses.push((to_f64(u), 0.0, to_f64(b)));
                }
            }
            Err(_) => witnesses.push((to_f64(u), 0.0, f64::NAN)),
        }
    }
    LoopSectionReport {
        ok: witnesses.is_empty(),
        witnesses,
    }
}

/// A section together with its numeric policy.
#[derive(Clone, Debug)]
pub struct QuasifieldLoop<T> {
    pub section: SectionPair<T>,
    pub policy: NumericPolicy<T>,
}

#[derive(Clone, Debug, Serialize)]
pub struct SharpTransitivityFailure {
    pub q: [f64; 2],
    pub w: [f64; 2],
    pub reason: String,
    pub residual: f64,
}

#[derive(Clone, Debug, Serialize)]
pub struct SharpTransitivityReport {
    pub samples: usize,
    pub failures: Vec<SharpTransitivityFailure>,
    pub max_residual: f64,
}

impl SharpTransitivityReport {
    pub fn passed(&self) -> bool {
        self.failures.is_empty()
    }
}

/// Root of the inner angle equation for a fixed u.
struct AngleRoots<T> {
    roots: Vec<T>,
}

impl<T: Real> QuasifieldLoop<T> {
    /// Builds the loop, rejecting sections with M(1,0) != I.
    ///
    /// `b(u,0) = 0` for u != 1 is not required here; it only decides whether
    /// the compact subquasigroups through (u,0) are loops.
    pub fn new(section: SectionPair<T>, policy: NumericPolicy<T>) -> Result<Self> {
        policy.validate()?;
        let (a, b) = section.eval(T::one(), T::zero())?;
        let tol = policy.identity_tolerance();
        if !tol.close(a, T::one()) || !tol.close(b, T::zero()) {
            let v = if tol.close(a, T::one()) { b } else { a };
            return Err(QfError::InvalidSection {
                u: 1.0,
                t: 0.0,
                reason: format!("(1,0) is not the identity (value {})", to_f64(v)),
            });
        }
        Ok(Self { section, policy })
    }

    pub fn identity() -> Vec2<T> {
        Vec2::e1()
    }

    pub fn polar_of(&self, v: Vec2<T>) -> Result<PolarParam<T>> {
        polar_of(&self.section, v, &self.policy)
    }

    pub fn element_of(&self, p: PolarParam<T>) -> Result<Vec2<T>> {
        element_of(&self.section, p)
    }

    pub fn section_matrix(&self, p: PolarParam<T>) -> Result<Mat2<T>> {
        section_matrix(&self.section, p)
    }

    /// Left translation of p.
    pub fn translation(&self, p: Vec2<T>) -> Result<Mat2<T>> {
        self.section_matrix(self.polar_of(p)?)
    }

    pub fn multiply(&self, p: Vec2<T>, q: Vec2<T>) -> Result<Vec2<T>> {
        Ok(self.translation(p)?.apply(q))
    }

    /// z with p * z = w.
    pub fn left_divide(&self, p: Vec2<T>, w: Vec2<T>) -> Result<Vec2<T>> {
        self.translation(p)?
            .solve(w)
            .ok_or_else(|| QfError::Domain("singular left translation".into()))
    }

    /// p with p * q = w.
    pub fn right_divide(&self, q: Vec2<T>, w: Vec2<T>) -> Result<Vec2<T>> {
        Ok(self.right_divide_with_residual(q, w)?.0)
    }

    /// As `right_divide`, also returning |p*q - w|.
    pub fn right_divide_with_residual(&self, q: Vec2<T>, w: Vec2<T>) -> Result<(Vec2<T>, T)> {
        let (u, t) = self.right_divide_polar(q, w)?;
        let p = self.element_of(PolarParam::new(u, t))?;
        let res = self.multiply(p, q)?.dist(w);
        Ok((p, res))
    }

    fn direction_mismatch(&self, u: T, t: T, q: Vec2<T>, target: T) -> Result<T> {
        let (a, b) = self.section.eval(u, t)?;
        let mq = matrix_from_values(u, t, a, b).apply(q);
        Ok(angle_diff(mq.arg(), target))
    }

    /// All t in [0, 2pi) with M_{u,t} q on the ray through w, found by an
    /// n-point scan plus Brent refinement.
    fn angle_roots(&self, u: T, q: Vec2<T>, target: T, n: usize) -> Result<AngleRoots<T>> {
        let pi = T::PI();
        let half = pi / lit(2.0);
        let ts: Vec<T> = uniform_angles(n);
        let mut hs = Vec::with_capacity(n);
        for &t in &ts {
            hs.push(self.direction_mismatch(u, t, q, target)?);
        }
        let mut roots: Vec<T> = Vec::new();
        for i in 0..n {
            let j = (i + 1) % n;
            let (h0, h1) = (hs[i], hs[j]);
            if h0 == T::zero() {
                roots.push(ts[i]);
                continue;
            }
            if (h0 > T::zero()) == (h1 > T::zero()) || h1 == T::zero() {
                continue;
            }
            if h0.abs() > half || h1.abs() > half {
                // the +-pi wrap, not a root
                continue;
            }
            let t0 = ts[i];
            let t1 = if j == 0 { T::TAU() } else { ts[j] };
            let mut err = None;
            let f = |t: T| match self.direction_mismatch(u, t, q, target) {
                Ok(v) => v,
                Err(e) => {
                    err.get_or_insert(e);
                    T::nan()
                }
            };
            let root = brent(f, t0, t1, h0, h1, self.policy.max_newton_iters);
            if let Some(e) = err {
                return Err(e);
            }
            roots.push(normalize_angle(root?));
        }
        Ok(AngleRoots { roots })
    }

    fn unique_angle_root(&self, u: T, q: Vec2<T>, target: T, n: usize) -> Result<T> {
        let found = self.angle_roots(u, q, target, n)?;
        match found.roots.len() {
            1 => Ok(found.roots[0]),
            0 => Err(QfError::NoConvergence {
                what: format!("right_divide angle search at u = {}", to_f64(u)),
                residual: f64::NAN,
            }),
            k => Err(QfError::SharpTransitivity {
                what: format!("angle at u = {}", to_f64(u)),
                candidates: k,
            }),
        }
    }

    /// Local refinement of the angle root near a previous solution.
    fn local_angle_root(&self, u: T, q: Vec2<T>, target: T, t_prev: T) -> Result<T> {
        let step = lit::<T>(0.02);
        let pi = T::PI();
        let half = pi / lit(2.0);
        let h0 = self.direction_mismatch(u, t_prev, q, target)?;
        if h0 == T::zero() {
            return Ok(t_prev);
        }
        if h0.abs() > half {
            return Err(QfError::NoConvergence {
                what: "local angle bracket".into(),
                residual: to_f64(h0),
            });
        }
        let mut err = None;
        let f = |t: T| match self.direction_mismatch(u, t, q, target) {
            Ok(v) => v,
            Err(e) => {
                err.get_or_insert(e);
                T::nan()
            }
        };
        let (a, b, fa, fb) = expand_bracket(f, t_prev, step, 6)?;
        if err.is_some() || fa.abs() > half || fb.abs() > half {
            return Err(QfError::NoConvergence {
                what: "local angle bracket".into(),
                residual: to_f64(h0),
            });
        }
        let mut err2 = None;
        let f2 = |t: T| match self.direction_mismatch(u, t, q, target) {
            Ok(v) => v,
            Err(e) => {
                err2.get_or_insert(e);
                T::nan()
            }
        };
        let r = brent(f2, a, b, fa, fb, self.policy.max_newton_iters)?;
        if let Some(e) = err2 {
            return Err(e);
        }
        Ok(normalize_angle(r))
    }

    /// Polar parameter (u, t) of w / q. The determinant law det M = u^2 makes
    /// |M q| a one-dimensional function of u once the angle is matched.
    pub fn right_divide_polar(&self, q: Vec2<T>, w: Vec2<T>) -> Result<(T, T)> {
        if q.is_zero() || w.is_zero() || !q.is_finite() || !w.is_finite() {
            return Err(QfError::Domain("right_divide needs nonzero finite vectors".into()));
        }
        let n = self.policy.bracket_subdivisions.max(8);
        let target = w.arg();
        let lw = w.norm().ln();
        let last_t: RefCell<Option<T>> = RefCell::new(None);
        let err: RefCell<Option<QfError>> = RefCell::new(None);
        let angle_at = |u: T| -> Result<T> {
            let prev = *last_t.borrow();
            let t = match prev {
                Some(tp) => self
                    .local_angle_root(u, q, target, tp)
                    .or_else(|_| self.unique_angle_root(u, q, target, n))?,
                None => self.unique_angle_root(u, q, target, n)?,
            };
            *last_t.borrow_mut() = Some(t);
            Ok(t)
        };
        let g = |x: T| -> T {
            let u = x.exp();
            let r = angle_at(u).and_then(|t| {
                let (a, b) = self.section.eval(u, t)?;
                Ok(matrix_from_values(u, t, a, b).apply(q).norm().ln() - lw)
            });
            match r {
                Ok(v) => v,
                Err(e) => {
                    err.borrow_mut().get_or_insert(e);
                    T::nan()
                }
            }
        };
        let x0 = lw - q.norm().ln();
        let bracket = expand_bracket(g, x0, lit(0.5), 60);
        if let Some(e) = err.borrow_mut().take() {
            return Err(e);
        }
        let (lo, hi, flo, fhi) = bracket?;
        let x = if lo == hi {
            lo
        } else {
            let r = brent(g, lo, hi, flo, fhi, self.policy.max_newton_iters);
            if let Some(e) = err.borrow_mut().take() {
                return Err(e);
            }
            r?
        };
        let u = x.exp();
        // uniqueness of the angle at the solution
        let t = self.unique_angle_root(u, q, target, n)?;
        Ok((u, t))
    }

    /// Samples random (q, w) pairs and checks that w / q exists, is accurate,
    /// and that a 256-point angle scan finds no second solution.
    pub fn verify_sharp_transitivity(&self, n_samples: usize, seed: u64) -> SharpTransitivityReport {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let pairs: Vec<(Vec2<T>, Vec2<T>)> = (0..n_samples)
            .map(|_| (random_vec(&mut rng), random_vec(&mut rng)))
            .collect();
        let mut failures = Vec::new();
        let mut max_residual = 0.0f64;
        for (q, w) in pairs {
            let fail = |reason: String, residual: f64| SharpTransitivityFailure {
                q: q.to_f64(),
                w: w.to_f64(),
                reason,
                residual,
            };
            match self.right_divide_polar(q, w) {
                Ok((u, _)) => {
                    let p = match self.right_divide_with_residual(q, w) {
                        Ok((_, res)) => res,
                        Err(e) => {
                            failures.push(fail(e.to_string(), f64::NAN));
                            continue;
                        }
                    };
                    let rel = to_f64(p) / to_f64(w.norm());
                    max_residual = max_residual.max(rel);
                    if !(rel <= 1e-8) {
                        failures.push(fail("residual above 1e-8".into(), rel));
                        continue;
                    }
                    match self.angle_roots(u, q, w.arg(), 256) {
                        Ok(r) if r.roots.len() == 1 => {}
                        Ok(r) => failures.push(fail(
                            format!("{} angle solutions at u = {}", r.roots.len(), to_f64(u)),
                            rel,
                        )),
                        Err(e) => failures.push(fail(e.to_string(), rel)),
                    }
                }
                Err(e) => failures.push(fail(e.to_string(), f64::NAN)),
            }
        }
        SharpTransitivityReport {
            samples: n_samples,
            failures,
            max_residual,
        }
    }
}

/// Uniform vector in [-2, 2]^2 with norm at least 0.1.
pub fn random_vec<T: Real>(rng: &mut impl Rng) -> Vec2<T> {
    loop {
        let x: f64 = rng.gen_range(-2.0..2.0);
        let y: f64 = rng.gen_range(-2.0..2.0);
        if x.hypot(y) >= 0.1 {
            return Vec2::new(lit(x), lit(y));
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;
    use std::f64::consts::{FRAC_PI_2, PI};

    fn complex_loop() -> QuasifieldLoop<f64> {
        QuasifieldLoop::new(SectionPair::complex(), NumericPolicy::default()).unwrap()
    }

    fn wavy() -> SectionPair<f64> {
        // b(u,0) = 0, not t-independent; valid by the exponential band
        SectionPair::from_fns(
            "wavy",
            |_, t: f64| 1.0 + 0.2 * t.sin(),
            |u: f64, t: f64| 0.1 * u.ln() * t.sin(),
        )
    }

    #[test]
    fn section_matrix_examples() {
        let s = SectionPair::<f64>::complex();
        assert_eq!(section_matrix(&s, PolarParam::new(1.0, 0.0)).unwrap(), Mat2::identity());
        let m = section_matrix(&s, PolarParam::new(1.0, FRAC_PI_2)).unwrap();
        assert!(m.approx_eq(&Mat2::new(0.0, 1.0, -1.0, 0.0), &Tolerance::default()));
        let m = section_matrix(&wavy(), PolarParam::new(3.2, 2.1)).unwrap();
        assert!(Tolerance::default().close(m.det(), 3.2 * 3.2));
    }

    #[test]
    fn invalid_a_is_rejected() {
        let s = SectionPair::from_fns("bad", |_, _| -1.0, |_, _| 0.0);
        assert!(matches!(
            section_matrix(&s, PolarParam::new(1.0, 0.3)),
            Err(QfError::InvalidSection { .. })
        ));
    }

    #[test]
    fn element_examples() {
        let s = SectionPair::<f64>::complex();
        assert_eq!(element_of(&s, PolarParam::new(1.0, 0.0)).unwrap(), Vec2::e1());
        let e = element_of(&s, PolarParam::new(1.0, 1.5 * PI)).unwrap();
        assert!(e.dist(Vec2::e2()) < 1e-15);
        let p = PolarParam::new(1.7, 4.0);
        let w = wavy();
        let lhs = element_of(&w, p).unwrap();
        let rhs = section_matrix(&w, p).unwrap().apply(Vec2::e1());
        assert!(lhs.dist(rhs) < 1e-14);
    }

    #[test]
    fn polar_examples() {
        let pol = NumericPolicy::default();
        let s = SectionPair::<f64>::complex();
        let p = polar_of(&s, Vec2::e1(), &pol).unwrap();
        assert!((p.r - 1.0).abs() < 1e-15 && p.t == 0.0);
        let p = polar_of(&s, Vec2::e2(), &pol).unwrap();
        assert!((p.r - 1.0).abs() < 1e-14 && (p.t - 1.5 * PI).abs() < 1e-14);
        assert!(polar_of(&s, Vec2::zero(), &pol).is_err());
    }

    #[test]
    fn loop_section_examples() {
        let pol = NumericPolicy::default();
        assert!(is_loop_section(&SectionPair::<f64>::complex(), &pol).ok);
        let bad = SectionPair::from_fns("shifted", |_, _| 1.0, |_, _| 0.1);
        let rep = is_loop_section(&bad, &pol);
        assert!(!rep.ok);
        assert!(rep.witnesses.iter().any(|w| w.0 == 1.0));
        assert!(QuasifieldLoop::new(bad, pol).is_err());
    }

    #[test]
    fn complex_products() {
        let l = complex_loop();
        let ii = l.multiply(Vec2::e2(), Vec2::e2()).unwrap();
        assert!(ii.dist(Vec2::new(-1.0, 0.0)) < 1e-15);
        let z = l.left_divide(Vec2::e2(), Vec2::new(-1.0, 0.0)).unwrap();
        assert!(z.dist(Vec2::e2()) < 1e-15);
        let p = l.right_divide(Vec2::e2(), Vec2::new(-1.0, 0.0)).unwrap();
        assert!(p.dist(Vec2::e2()) < 1e-14, "{p:?}");
        let q = Vec2::new(5.0, -2.0);
        assert_eq!(l.multiply(Vec2::e1(), q).unwrap(), q);
        let p = l.right_divide(q, q).unwrap();
        assert!(p.dist(Vec2::e1()) < 1e-14);
    }

    #[test]
    fn sharp_transitivity_complex_and_wavy() {
        let rep = complex_loop().verify_sharp_transitivity(100, 0);
        assert!(rep.passed(), "{:?}", rep.failures);
        let l = QuasifieldLoop::new(wavy(), NumericPolicy::default()).unwrap();
        let rep = l.verify_sharp_transitivity(30, 1);
        assert!(rep.passed(), "{:?}", rep.failures);
    }

    #[test]
    fn corrupted_section_is_caught() {
        // a = e^{3 sin t} leaves the band e^{-t} < a < e^t near t = 0, so the
        // direction of M_{u,t} q can turn back and the angle equation has
        // several solutions.
        let s = SectionPair::from_fns("corrupted", |_, t: f64| (3.0 * t.sin()).exp(), |_, _| 0.0);
        let l = QuasifieldLoop::new(s, NumericPolicy::default()).unwrap();
        let rep = l.verify_sharp_transitivity(100, 0);
        assert!(!rep.passed());
        assert!(rep.failures.iter().any(|f| f.reason.contains("solution") || f.reason.contains("candidate")));
    }

    #[test]
    fn f32_complex_multiplication() {
        let l = QuasifieldLoop::<f32>::new(SectionPair::complex(), NumericPolicy::default()).unwrap();
        let ii = l.multiply(Vec2::e2(), Vec2::e2()).unwrap();
        assert!(ii.dist(Vec2::new(-1.0, 0.0)) < 1e-6);
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(64))]

        #[test]
        fn identity_laws_and_distributivity(px in -3.0f64..3.0, py in -3.0f64..3.0,
                                            qx in -3.0f64..3.0, qy in -3.0f64..3.0,
                                            rx in -3.0f64..3.0, ry in -3.0f64..3.0) {
            let p = Vec2::new(px, py);
            prop_assume!(p.norm() > 1e-2);
            let q = Vec2::new(qx, qy);
            let r = Vec2::new(rx, ry);
            let l = QuasifieldLoop::new(wavy(), NumericPolicy::default()).unwrap();
            let e = Vec2::e1();
            prop_assert!(l.multiply(e, q).unwrap().dist(q) <= 1e-12 * (1.0 + q.norm()));
            prop_assert!(l.multiply(p, e).unwrap().dist(p) <= 1e-12 * (1.0 + p.norm()));
            let lhs = l.multiply(p, q + r).unwrap();
            let rhs = l.multiply(p, q).unwrap() + l.multiply(p, r).unwrap();
            prop_assert!(lhs.dist(rhs) <= 1e-12 * (1.0 + lhs.norm()));
            let w = q + Vec2::new(0.5, 0.0);
            prop_assume!(w.norm() > 1e-2);
            let z = l.left_divide(p, w).unwrap();
            prop_assert!(l.multiply(p, z).unwrap().dist(w) <= 1e-10 * (1.0 + w.norm()));
        }

        #[test]
        fn polar_round_trip(r in 0.05f64..20.0, t in 0.0f64..6.283) {
            let s = wavy();
            let pol = NumericPolicy::default();
            let p = PolarParam::new(r, t);
            let back = polar_of(&s, element_of(&s, p).unwrap(), &pol).unwrap();
            prop_assert!((back.r - r).abs() <= 1e-12 * r);
            prop_assert!(angle_diff(back.t, p.t).abs() <= 1e-12);
        }
    }
}
