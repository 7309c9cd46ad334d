//! Differentiable compact loops: the C1 inequalities, the construction of
//! a_u from R, the lower bound on b_u, and the exponential band.

use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::error::{QfError, Result};
use crate::numerics::{cumulative_simpson, derivative, linspace, simpson};
use crate::scalar::{lit, to_f64, Real};
use crate::section::SectionPair;

/// Strict inequalities within this margin are reported as boundary.
pub const BOUNDARY_MARGIN: f64 = 1e-9;
/// Default number of panels on [0, 2pi] (h = 2pi/4096).
pub const DEFAULT_POINTS: usize = 4096;

type ScalarFn<T> = Arc<dyn Fn(T) -> T + Send + Sync>;

/// (a_u, b_u) on [0, 2pi].
#[derive(Clone)]
pub struct CompactLoopProfile<T> {
    pub a_u: ScalarFn<T>,
    pub b_u: ScalarFn<T>,
    pub u_tag: T,
    pub description: String,
}

impl<T: Real> std::fmt::Debug for CompactLoopProfile<T> {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("CompactLoopProfile")
            .field("u_tag", &self.u_tag)
            .field("description", &self.description)
            .finish()
    }
}

impl<T: Real> CompactLoopProfile<T> {
    pub fn new(
        description: impl Into<String>,
        a_u: impl Fn(T) -> T + Send + Sync + 'static,
        b_u: impl Fn(T) -> T + Send + Sync + 'static,
    ) -> Self {
        Self {
            a_u: Arc::new(a_u),
            b_u: Arc::new(b_u),
            u_tag: T::one(),
            description: description.into(),
        }
    }

    /// a_u(t) = a(u,t)/a(u,0), b_u(t) = b(u,t).
    pub fn from_section(s: &SectionPair<T>, u: T) -> Result<Self> {
        let a0 = s.a(u, T::zero())?;
        let sa = s.clone();
        let sb = s.clone();
        // probe once so evaluation errors surface here
        s.eval(u, T::PI())?;
        Ok(Self {
            a_u: Arc::new(move |t| sa.a(u, t).map(|a| a / a0).unwrap_or(T::nan())),
            b_u: Arc::new(move |t| sb.b(u, t).unwrap_or(T::nan())),
            u_tag: u,
            description: format!("{} at u = {}", s.name(), to_f64(u)),
        })
    }

    /// Linear interpolation of sampled (t, a, b) arrays.
    pub fn from_samples(data: &ProfileSamples) -> Result<Self> {
        data.check()?;
        let ta: Arc<Vec<f64>> = Arc::new(data.t.clone());
        let tb = ta.clone();
        let av = data.a.clone();
        let bv = data.b.clone();
        Ok(Self {
            a_u: Arc::new(move |t| lit(interp(&ta, &av, to_f64(t)))),
            b_u: Arc::new(move |t| lit(interp(&tb, &bv, to_f64(t)))),
            u_tag: T::one(),
            description: "sampled profile".into(),
        })
    }

    /// Normalization and periodic endpoints: a(0) = a(2pi) = 1, b(0) = b(2pi) = 0.
    pub fn check_endpoints(&self, tol: T) -> Result<()> {
        let tau = T::TAU();
        let vals = [
            ((self.a_u)(T::zero()), T::one(), "a_u(0)"),
            ((self.a_u)(tau), T::one(), "a_u(2pi)"),
            ((self.b_u)(T::zero()), T::zero(), "b_u(0)"),
            ((self.b_u)(tau), T::zero(), "b_u(2pi)"),
        ];
        for (v, want, what) in vals {
            if !((v - want).abs() <= tol) {
                return Err(QfError::InvalidProfile(format!(
                    "{what} = {} (expected {})",
                    to_f64(v),
                    to_f64(want)
                )));
            }
        }
        Ok(())
    }
}

/// Sampled profile as read from JSON.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct ProfileSamples {
    pub t: Vec<f64>,
    pub a: Vec<f64>,
    pub b: Vec<f64>,
}

impl ProfileSamples {
    fn check(&self) -> Result<()> {
        let n = self.t.len();
        if n < 2 || self.a.len() != n || self.b.len() != n {
            return Err(QfError::Input("profile arrays must have equal length >= 2".into()));
        }
        if !self.t.windows(2).all(|w| w[0] < w[1]) {
            return Err(QfError::Input("profile t must be strictly increasing".into()));
        }
        if self.a.iter().chain(&self.b).chain(&self.t).any(|v| !v.is_finite()) {
            return Err(QfError::Input("profile contains non-finite values".into()));
        }
        if self.a.iter().any(|&a| a <= 0.0) {
            return Err(QfError::Input("profile a must be positive".into()));
        }
        Ok(())
    }
}

fn interp(t: &[f64], y: &[f64], x: f64) -> f64 {
    let n = t.len();
    if x <= t[0] {
        return y[0];
    }
    if x >= t[n - 1] {
        return y[n - 1];
    }
    let i = t.partition_point(|&s| s <= x) - 1;
    let w = (x - t[i]) / (t[i + 1] - t[i]);
    y[i] * (1.0 - w) + y[i + 1] * w
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Verdict {
    Pass,
    Boundary,
    Fail,
}

fn verdict_of(min_margin: f64) -> Verdict {
    if min_margin > BOUNDARY_MARGIN {
        Verdict::Pass
    } else if min_margin >= -BOUNDARY_MARGIN {
        Verdict::Boundary
    } else {
        Verdict::Fail
    }
}

/// Grid point of an inequality scan; margin > 0 means the strict inequality holds.
#[derive(Clone, Debug, Serialize)]
pub struct MarginPoint {
    pub t: f64,
    pub margin: f64,
}

#[derive(Clone, Debug, Serialize)]
pub struct C1Report {
    pub verdict: Verdict,
    pub min_margin: f64,
    pub min_margin_t: f64,
    /// 1 - abar'(0)^2 - bbar'(0)
    pub initial_margin: f64,
    pub violations: Vec<MarginPoint>,
    pub boundary_points: usize,
    pub unchecked_hypotheses: Vec<String>,
}

fn sample<T: Real>(f: &ScalarFn<T>, ts: &[T]) -> Result<Vec<T>> {
    let v: Vec<T> = ts.iter().map(|&t| f(t)).collect();
    if v.iter().any(|x| !x.is_finite()) {
        return Err(QfError::InvalidProfile("profile is not finite on the grid".into()));
    }
    Ok(v)
}

/// With abar = 1/a_u (normalized) and bbar = -b_u checks
/// abar'^2 + bbar abar' + bbar' abar - abar^2 < 0 and bbar'(0) < 1 - abar'(0)^2.
pub fn c1_inequality_check<T: Real>(p: &CompactLoopProfile<T>, n_points: usize) -> Result<C1Report> {
    let n = n_points.max(8);
    let ts = linspace(T::zero(), T::TAU(), n);
    let h = ts[1] - ts[0];
    let a = sample(&p.a_u, &ts)?;
    let b = sample(&p.b_u, &ts)?;
    if a.iter().any(|&x| !(x > T::zero())) {
        return Err(QfError::InvalidProfile("a_u must be positive".into()));
    }
    let a0 = a[0];
    let abar: Vec<T> = a.iter().map(|&x| a0 / x).collect();
    let bbar: Vec<T> = b.iter().map(|&x| -x).collect();
    let da = derivative(&abar, h)?;
    let db = derivative(&bbar, h)?;
    let mut min_margin = f64::INFINITY;
    let mut min_t = 0.0;
    let mut violations = Vec::new();
    let mut boundary_points = 0;
    for i in 0..ts.len() {
        let lhs = da[i] * da[i] + bbar[i] * da[i] + db[i] * abar[i] - abar[i] * abar[i];
        let m = -to_f64(lhs);
        if m < min_margin {
            min_margin = m;
            min_t = to_f64(ts[i]);
        }
        match verdict_of(m) {
            Verdict::Fail => violations.push(MarginPoint { t: to_f64(ts[i]), margin: m }),
            Verdict::Boundary => boundary_points += 1,
            Verdict::Pass => {}
        }
    }
    let initial_margin = to_f64(T::one() - da[0] * da[0] - db[0]);
    let verdict = match (verdict_of(min_margin), verdict_of(initial_margin)) {
        (Verdict::Fail, _) | (_, Verdict::Fail) => Verdict::Fail,
        (Verdict::Boundary, _) | (_, Verdict::Boundary) => Verdict::Boundary,
        _ => Verdict::Pass,
    };
    Ok(C1Report {
        verdict,
        min_margin,
        min_margin_t: min_t,
        initial_margin,
        violations,
        boundary_points,
        unchecked_hypotheses: vec!["Fourier series of R lies in the admissible class".into()],
    })
}

/// User-supplied continuous R on [0, 2pi].
#[derive(Clone)]
pub struct RFunction<T> {
    pub r: ScalarFn<T>,
    pub description: String,
}

impl<T: Real> RFunction<T> {
    pub fn new(description: impl Into<String>, r: impl Fn(T) -> T + Send + Sync + 'static) -> Self {
        Self {
            r: Arc::new(r),
            description: description.into(),
        }
    }
}

/// 1/a_u(t) = e^t (1 - int_0^t R(s) e^{-s} ds), integrated by composite
/// Simpson with `quadrature_n` panels per 2pi.
pub fn inverse_a_from_r<T: Real>(r: &RFunction<T>, t: T, quadrature_n: usize) -> T {
    let panels = ((quadrature_n as f64) * to_f64(t) / std::f64::consts::TAU).ceil() as usize;
    let rf = r.r.clone();
    let integral = simpson(move |s: T| rf(s) * (-s).exp(), T::zero(), t, panels.max(2));
    t.exp() * (T::one() - integral)
}

pub fn compact_loop_from_r<T: Real>(r: &RFunction<T>, quadrature_n: usize) -> Result<CompactLoopProfile<T>> {
    if quadrature_n < 64 {
        return Err(QfError::Domain("quadrature_n must be at least 64".into()));
    }
    let check = linspace(T::zero(), T::TAU(), 1024);
    for &t in &check {
        let v = inverse_a_from_r(r, t, quadrature_n);
        if !(v > T::zero()) {
            return Err(QfError::InvalidProfile(format!(
                "1/a_u = {} at t = {} for R = {}",
                to_f64(v),
                to_f64(t),
                r.description
            )));
        }
    }
    let end = inverse_a_from_r(r, T::TAU(), quadrature_n);
    if !((end - T::one()).abs() <= lit(1e-6)) {
        return Err(QfError::InvalidProfile(format!(
            "a_u(2pi) = {} is not 1 for R = {}",
            to_f64(end.recip()),
            r.description
        )));
    }
    let rc = r.clone();
    Ok(CompactLoopProfile {
        a_u: Arc::new(move |t| inverse_a_from_r(&rc, t, quadrature_n).recip()),
        b_u: Arc::new(|_| T::zero()),
        u_tag: T::one(),
        description: format!("a_u from R = {}", r.description),
    })
}

#[derive(Clone, Debug, Serialize)]
pub struct BoundReport {
    pub verdict: Verdict,
    pub min_margin: f64,
    pub min_margin_t: f64,
    pub violations: Vec<MarginPoint>,
}

/// b_u(t) > -a_u(t) int_0^t (a_u^2 - a_u'^2)/a_u^4 ds on (0, 2pi).
pub fn b_bound_check<T: Real>(p: &CompactLoopProfile<T>, quadrature_n: usize) -> Result<BoundReport> {
    let n = quadrature_n.max(8);
    let ts = linspace(T::zero(), T::TAU(), n);
    let h = ts[1] - ts[0];
    let a = sample(&p.a_u, &ts)?;
    let b = sample(&p.b_u, &ts)?;
    let da = derivative(&a, h)?;
    let integrand: Vec<T> = a
        .iter()
        .zip(&da)
        .map(|(&x, &d)| (x * x - d * d) / (x * x * x * x))
        .collect();
    let integral = cumulative_simpson(&integrand, h);
    let mut min_margin = f64::INFINITY;
    let mut min_t = 0.0;
    let mut violations = Vec::new();
    for i in 1..ts.len() - 1 {
        let m = to_f64(b[i] + a[i] * integral[i]);
        if m < min_margin {
            min_margin = m;
            min_t = to_f64(ts[i]);
        }
        if m < -BOUNDARY_MARGIN {
            violations.push(MarginPoint { t: to_f64(ts[i]), margin: m });
        }
    }
    Ok(BoundReport {
        verdict: verdict_of(min_margin),
        min_margin,
        min_margin_t: min_t,
        violations,
    })
}

/// e^{-t} < a_u(t)/a_u(0) < e^t on (0, 2pi), for profiles with b_u = 0.
pub fn exp_band_check<T: Real>(p: &CompactLoopProfile<T>, n_points: usize) -> Result<BoundReport> {
    let n = n_points.max(8);
    let ts = linspace(T::zero(), T::TAU(), n);
    let a = sample(&p.a_u, &ts)?;
    let b = sample(&p.b_u, &ts)?;
    if b.iter().any(|x| x.abs() > lit(BOUNDARY_MARGIN)) {
        return Err(QfError::Domain("exp_band_check needs b_u = 0".into()));
    }
    let a0 = a[0];
    let mut min_margin = f64::INFINITY;
    let mut min_t = 0.0;
    let mut violations = Vec::new();
    for i in 1..ts.len() - 1 {
        let ratio = a[i] / a0;
        let t = ts[i];
        // margin in log space: distance of ln(ratio) to the nearer band edge
        let m = to_f64(t - ratio.ln().abs());
        if m < min_margin {
            min_margin = m;
            min_t = to_f64(t);
        }
        if m < -BOUNDARY_MARGIN {
            violations.push(MarginPoint { t: to_f64(t), margin: m });
        }
    }
    Ok(BoundReport {
        verdict: verdict_of(min_margin),
        min_margin,
        min_margin_t: min_t,
        violations,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::TAU;

    fn trivial() -> CompactLoopProfile<f64> {
        CompactLoopProfile::new("trivial", |_| 1.0, |_| 0.0)
    }

    #[test]
    fn trivial_profile_passes() {
        let r = c1_inequality_check(&trivial(), DEFAULT_POINTS).unwrap();
        assert_eq!(r.verdict, Verdict::Pass);
        assert!((r.min_margin - 1.0).abs() < 1e-12);
        assert_eq!(b_bound_check(&trivial(), DEFAULT_POINTS).unwrap().verdict, Verdict::Pass);
        assert_eq!(exp_band_check(&trivial(), DEFAULT_POINTS).unwrap().verdict, Verdict::Pass);
        trivial().check_endpoints(1e-12).unwrap();
    }

    #[test]
    fn b_equal_minus_t_is_boundary() {
        let p = CompactLoopProfile::new("b=-t", |_| 1.0, |t: f64| -t);
        let r = c1_inequality_check(&p, DEFAULT_POINTS).unwrap();
        assert_eq!(r.verdict, Verdict::Boundary);
        assert!(r.min_margin.abs() <= 1e-9 && r.initial_margin.abs() <= 1e-9);
        let b = b_bound_check(&p, DEFAULT_POINTS).unwrap();
        assert_eq!(b.verdict, Verdict::Boundary);
    }

    #[test]
    fn exponential_profile_matches_analytic_sign() {
        // abar = e^{t/2}, bbar = 0: lhs = -0.75 e^t, a_u = e^{-t/2}
        let p = CompactLoopProfile::new("exp", |t: f64| (-0.5 * t).exp(), |_| 0.0);
        let r = c1_inequality_check(&p, DEFAULT_POINTS).unwrap();
        assert_eq!(r.verdict, Verdict::Pass);
        assert!((r.min_margin - 0.75).abs() < 1e-5, "{}", r.min_margin);
    }

    #[test]
    fn sine_b_bound() {
        let p = CompactLoopProfile::new("sin", |_| 1.0, |t: f64| t.sin());
        let r = b_bound_check(&p, DEFAULT_POINTS).unwrap();
        assert_eq!(r.verdict, Verdict::Pass);
    }

    #[test]
    fn r_equal_one_gives_trivial_a() {
        let rf = RFunction::new("1", |_: f64| 1.0);
        let p = compact_loop_from_r(&rf, 4096).unwrap();
        for i in 0..=64 {
            let t = TAU * i as f64 / 64.0;
            assert!(((p.a_u)(t) - 1.0).abs() < 1e-10);
        }
    }

    #[test]
    fn r_equal_zero_is_rejected() {
        let rf = RFunction::new("0", |_: f64| 0.0);
        assert!(matches!(compact_loop_from_r(&rf, 512), Err(QfError::InvalidProfile(_))));
        assert!(compact_loop_from_r(&RFunction::new("1", |_: f64| 1.0), 32).is_err());
    }

    #[test]
    fn periodic_r_gives_closed_form() {
        // R = 1 + e (cos s - sin s)  =>  1/a_u = 1 - e sin t
        let eps = 0.3;
        let rf = RFunction::new("wave", move |s: f64| 1.0 + eps * (s.cos() - s.sin()));
        let p = compact_loop_from_r(&rf, 4096).unwrap();
        for i in 0..=50 {
            let t = TAU * i as f64 / 50.0;
            assert!(((p.a_u)(t) - 1.0 / (1.0 - eps * t.sin())).abs() < 1e-9);
        }
        let c1 = c1_inequality_check(&p, DEFAULT_POINTS).unwrap();
        assert_eq!(c1.verdict, Verdict::Pass);
    }

    #[test]
    fn quadrature_against_antiderivative() {
        // int_0^t e^s cos s e^{-s} ds = sin t
        let rf = RFunction::new("e^s cos s", |s: f64| s.exp() * s.cos());
        for i in 1..=20 {
            let t = TAU * i as f64 / 20.0;
            let v = inverse_a_from_r(&rf, t, 512);
            let exact = t.exp() * (1.0 - t.sin());
            assert!((v - exact).abs() <= 1e-8 * t.exp(), "t={t}");
        }
    }

    #[test]
    fn exp_band_edges() {
        let p = CompactLoopProfile::new("e^t", |t: f64| t.exp(), |_| 0.0);
        let r = exp_band_check(&p, 1024).unwrap();
        assert_ne!(r.verdict, Verdict::Pass);
        let w = 2.0;
        let p11a = CompactLoopProfile::new(
            "p11a",
            move |t: f64| {
                if t > std::f64::consts::PI {
                    1.0 / (t.cos().powi(2) + t.sin().powi(2) / w).sqrt()
                } else {
                    1.0
                }
            },
            |_| 0.0,
        );
        assert_eq!(exp_band_check(&p11a, 4096).unwrap().verdict, Verdict::Pass);
    }

    #[test]
    fn sampled_profile_interpolates() {
        let t: Vec<f64> = (0..=256).map(|i| TAU * i as f64 / 256.0).collect();
        let data = ProfileSamples {
            a: vec![1.0; t.len()],
            b: t.iter().map(|x| -x).collect(),
            t,
        };
        let p = CompactLoopProfile::<f64>::from_samples(&data).unwrap();
        assert!(((p.b_u)(1.0) + 1.0).abs() < 1e-12);
        let r = c1_inequality_check(&p, DEFAULT_POINTS).unwrap();
        assert_eq!(r.verdict, Verdict::Boundary);
    }
}
