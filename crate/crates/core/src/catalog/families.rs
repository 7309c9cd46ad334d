//! Per-family formulas: spread branches in native parameters, the chart from
//! an element (first column) back to native parameters, and either a closed
//! form section or the substitution formulas (r cos t, r sin t, a, b).

use std::f64::consts::PI;
use std::sync::Arc;

use crate::error::{QfError, Result};
use crate::linalg::{Mat2, Vec2};
use crate::roots::{brent, expand_bracket, solve_scalar};
use crate::scalar::{lit, to_f64, Real};
use crate::section::SectionPair;
use crate::spread::SpreadBranch;

use super::{FamilyId, FamilySpec, MonotoneFn};

/// Values of the substitution formulas at one native parameter point.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Substitution<T> {
    pub rcos: T,
    pub rsin: T,
    pub a: T,
    pub b: T,
}

pub type ChartFn<T> = Arc<dyn Fn(Vec2<T>) -> Result<(usize, Vec<T>)> + Send + Sync>;
pub type SubstFn<T> = Arc<dyn Fn(usize, &[T]) -> Option<Substitution<T>> + Send + Sync>;

pub(crate) struct Model<T> {
    pub branches: Vec<SpreadBranch<T>>,
    pub conditions: Vec<&'static str>,
    pub chart: ChartFn<T>,
    pub subst: Option<SubstFn<T>>,
    /// closed-form section; None means "solve through `subst`"
    pub section: Option<SectionPair<T>>,
}

fn chart<T: Real>(f: impl Fn(Vec2<T>) -> Result<(usize, Vec<T>)> + Send + Sync + 'static) -> ChartFn<T> {
    Arc::new(f)
}

fn subst<T: Real>(f: impl Fn(usize, &[T]) -> Option<Substitution<T>> + Send + Sync + 'static) -> SubstFn<T> {
    Arc::new(f)
}

fn nonzero<T: Real>(x: Vec2<T>) -> Result<()> {
    if x.is_zero() || !x.is_finite() {
        Err(QfError::Domain("chart needs a finite nonzero element".into()))
    } else {
        Ok(())
    }
}

fn finite<T: Real>(s: Substitution<T>) -> Option<Substitution<T>> {
    let ok = s.rcos.is_finite() && s.rsin.is_finite() && s.a.is_finite() && s.b.is_finite() && s.a > T::zero();
    ok.then_some(s)
}

/// x ln|x| with the removable singularity at 0 filled in.
fn xlnx<T: Real>(x: T) -> T {
    if x == T::zero() {
        T::zero()
    } else {
        x * x.abs().ln()
    }
}

/// x (ln|x|)^2, also 0 at 0.
fn xln2x<T: Real>(x: T) -> T {
    if x == T::zero() {
        T::zero()
    } else {
        let l = x.abs().ln();
        x * l * l
    }
}

/// rotation(-phi) in the section's convention: [[cos, -sin], [sin, cos]].
fn turn<T: Real>(phi: T) -> Mat2<T> {
    let (s, c) = phi.sin_cos();
    Mat2::new(c, -s, s, c)
}

/// Evaluates (a, b) at (r, t) by finding the element rho (cos t, -sin t)
/// whose substituted radius is r.
pub(crate) fn ray_solve<T: Real>(chart: &ChartFn<T>, subst: &SubstFn<T>, r: T, t: T) -> Result<(T, T)> {
    let (mut sin, mut cos) = t.sin_cos();
    // fl(k pi) leaves sin at rounding level; several families are only Holder there
    let snap = lit::<T>(4.0) * T::epsilon() * (T::one() + t.abs());
    if sin.abs() <= snap {
        sin = T::zero();
        cos = cos.signum();
    }
    let dir = Vec2::new(cos, -sin);
    let eval = |rho: T| -> Option<Substitution<T>> {
        let (b, p) = chart(dir.scale(rho)).ok()?;
        subst(b, &p)
    };
    let target = r.ln();
    let g = |x: T| match eval(x.exp()) {
        Some(s) => s.rcos.hypot(s.rsin).ln() - target,
        None => T::nan(),
    };
    let (lo, hi, flo, fhi) = expand_bracket(g, target, lit(0.25), 80)?;
    let x = if lo == hi { lo } else { brent(g, lo, hi, flo, fhi, 200)? };
    let s = eval(x.exp()).ok_or_else(|| QfError::NoConvergence {
        what: "substitution inversion".into(),
        residual: f64::INFINITY,
    })?;
    let res = (s.rcos.hypot(s.rsin) - r).abs() / r;
    // infinite slope in rho: a sign change within a few ulps pins the root
    let pinned = || {
        let h = lit::<T>(4.0) * T::epsilon() * (T::one() + x.abs());
        let (l, u) = (g(x - h), g(x + h));
        l.is_finite() && u.is_finite() && (l <= T::zero()) != (u <= T::zero())
    };
    if !(res <= lit(1e-10)) && !pinned() {
        return Err(QfError::NoConvergence {
            what: format!("substitution inversion at r={}, t={}", to_f64(r), to_f64(t)),
            residual: to_f64(res),
        });
    }
    Ok((s.a, s.b))
}

pub(crate) fn build<T: Real>(spec: &FamilySpec) -> Model<T> {
    let g = |n: &str| -> T { lit(spec.param(n)) };
    match spec.id {
        FamilyId::Complex => complex(),
        FamilyId::P11a => p11a(g("w")),
        FamilyId::P11b => p11b(),
        FamilyId::P11c => p11c_like(false),
        FamilyId::P12a => p11c_like(true),
        FamilyId::P12b => p12b(g("gamma")),
        FamilyId::P13a => p13a(g("s"), g("w"), g("z"), g("p"), g("q")),
        FamilyId::P13b => p13b(g("w"), g("z"), g("p"), g("q")),
        FamilyId::P13c => p13c(g("k"), g("w"), g("z"), g("p"), g("q")),
        FamilyId::P14 => p14(g("w"), g("z"), g("p"), g("q")),
        FamilyId::P16a => p16a(g("w"), g("c")),
        FamilyId::P16b => p16b(g("d")),
        FamilyId::RemarkF => remark_f(spec.f.unwrap_or(MonotoneFn::Cubic)),
        FamilyId::P17a => p17a(g("p"), g("q"), g("c"), g("d")),
        FamilyId::P17b => p17b(spec.param("m"), spec.param("n"), g("c"), g("d")),
    }
}

fn ab<T: Real>(a: T, b: T) -> Result<(T, T)> {
    Ok((a, b))
}

fn complex<T: Real>() -> Model<T> {
    Model {
        branches: vec![SpreadBranch::new("all", &["x", "y"], vec![(-3.0, 3.0), (-3.0, 3.0)], |p: &[T]| {
            Some(Mat2::new(p[0], -p[1], p[1], p[0]))
        })],
        conditions: vec!["(x, y) in R^2"],
        chart: chart(|x: Vec2<T>| Ok((0, vec![x.x, x.y]))),
        subst: None,
        section: Some(SectionPair::new("complex", vec![], |_, _| ab(T::one(), T::zero()))),
    }
}

fn p11a<T: Real>(w: T) -> Model<T> {
    let a1 = move |t: T| -> (T, T) {
        let (s, c) = t.sin_cos();
        if s < T::zero() {
            let a = (c * c + s * s / w).sqrt().recip();
            (a, a * (T::one() - w) / w * s * c)
        } else {
            (T::one(), T::zero())
        }
    };
    Model {
        branches: vec![
            SpreadBranch::new("v > 0", &["s", "v"], vec![(-3.0, 3.0), (0.0, 3.0)], move |p: &[T]| {
                (p[1] > T::zero()).then(|| Mat2::new(p[0], -p[1] / w, p[1], p[0]))
            }),
            SpreadBranch::new("v <= 0", &["s", "v"], vec![(-3.0, 3.0), (-3.0, 0.0)], |p: &[T]| {
                (p[1] <= T::zero()).then(|| Mat2::new(p[0], -p[1], p[1], p[0]))
            }),
        ],
        conditions: vec!["v > 0", "v <= 0"],
        chart: chart(|x: Vec2<T>| Ok((if x.y > T::zero() { 0 } else { 1 }, vec![x.x, x.y]))),
        subst: None,
        section: Some(SectionPair::new("P11a", vec![], move |_, t| {
            let (a, b) = a1(t);
            ab(a, b)
        })),
    }
}

fn p11b<T: Real>() -> Model<T> {
    let three = lit::<T>(3.0);
    let four = lit::<T>(4.0);
    let upper = move |al: T, be: T| al >= -three * be * be / four;
    Model {
        branches: vec![
            SpreadBranch::new(
                "alpha >= -3 beta^2/4",
                &["alpha", "beta"],
                vec![(-4.0, 4.0), (-3.0, 3.0)],
                move |p: &[T]| {
                    let (al, be) = (p[0], p[1]);
                    upper(al, be).then(|| Mat2::new(al, -al * be - be * be * be, be, al + be * be))
                },
            ),
            SpreadBranch::new(
                "alpha < -3 beta^2/4",
                &["alpha", "beta"],
                vec![(-6.0, 0.0), (-3.0, 3.0)],
                move |p: &[T]| {
                    let (al, be) = (p[0], p[1]);
                    (!upper(al, be)).then(|| {
                        Mat2::new(al, al * be / three, be, al / lit(9.0) + be * be / three)
                    })
                },
            ),
        ],
        conditions: vec!["alpha >= -3 beta^2/4", "alpha < -3 beta^2/4"],
        chart: chart(move |x: Vec2<T>| {
            nonzero(x)?;
            Ok((if upper(x.x, x.y) { 0 } else { 1 }, vec![x.x, x.y]))
        }),
        subst: Some(subst(move |br, p: &[T]| {
            let (al, be) = (p[0], p[1]);
            let n = al.hypot(be);
            let s = if br == 0 {
                let d = al + be * be;
                Substitution {
                    rcos: al * d / n,
                    rsin: -be * d / n,
                    a: n / d,
                    b: be * (T::one() - al) / n,
                }
            } else {
                let q = al.abs() / n;
                Substitution {
                    rcos: al / three * q,
                    rsin: -be / three * q,
                    a: three * n / al.abs(),
                    b: be * n / al.abs() + be * al / (three * al.abs() * n),
                }
            };
            finite(s)
        })),
        section: None,
    }
}

/// P11c (`shifted` = false) and P12a (`shifted` = true): element (v, s).
fn p11c_like<T: Real>(shifted: bool) -> Model<T> {
    let three = lit::<T>(3.0);
    let extra = if shifted { T::one() } else { T::zero() };
    Model {
        branches: vec![SpreadBranch::new("all", &["s", "v"], vec![(-3.0, 3.0), (-4.0, 4.0)], move |p: &[T]| {
            let (s, v) = (p[0], p[1]);
            Some(Mat2::new(v, -s * s * s / three - extra * s, s, s * s + v))
        })],
        conditions: vec!["(s, v) in R^2"],
        chart: chart(|x: Vec2<T>| {
            nonzero(x)?;
            Ok((0, vec![x.y, x.x]))
        }),
        subst: Some(subst(move |_, p: &[T]| {
            let (s, v) = (p[0], p[1]);
            let s2 = s * s;
            let d = s2 * s2 / three + s2 * v + v * v + extra * s2;
            let m = s2 + v * v;
            let num = if shifted {
                s2 * s - s2 * s * v / three
            } else {
                -s2 * s * v / three + s2 * s + s * v
            };
            let k = (d / m).sqrt();
            finite(Substitution {
                rcos: v * k,
                rsin: -s * k,
                a: (m / d).sqrt(),
                b: num / (d * m).sqrt(),
            })
        })),
        section: None,
    }
}

fn p12b<T: Real>(gamma: T) -> Model<T> {
    let two = lit::<T>(2.0);
    Model {
        branches: vec![SpreadBranch::new("all", &["u", "v"], vec![(-5.0, 5.0), (-5.0, 5.0)], move |p: &[T]| {
            let (u, v) = (p[0], p[1]);
            let (su, cu) = u.sin_cos();
            Some(Mat2::new(
                v - gamma * su,
                u + gamma * (cu - T::one()),
                gamma * (cu - T::one()) - u,
                v + gamma * su,
            ))
        })],
        conditions: vec!["(u, v) in R^2"],
        chart: chart(move |x: Vec2<T>| {
            nonzero(x)?;
            // gamma (cos u - 1) - u is strictly decreasing for |gamma| <= 1
            let u = solve_scalar(|u: T| gamma * (u.cos() - T::one()) - u - x.y, -x.y, T::one(), 200)?;
            Ok((0, vec![u, x.x + gamma * u.sin()]))
        }),
        subst: Some(subst(move |_, p: &[T]| {
            let (u, v) = (p[0], p[1]);
            let (su, cu) = u.sin_cos();
            let g2 = gamma * gamma;
            let n = v * v + u * u + two * g2 * (T::one() - cu) - two * v * gamma * su - two * gamma * u * cu
                + two * gamma * u;
            let d = v * v + u * u - two * g2 + two * g2 * cu;
            let k = (d / n).sqrt();
            finite(Substitution {
                rcos: (v - gamma * su) * k,
                rsin: (u - gamma * (cu - T::one())) * k,
                a: (n / d).sqrt(),
                b: (-two * u * gamma * su + two * v * gamma * cu - two * v * gamma) / (n.sqrt() * d.sqrt()),
            })
        })),
        section: None,
    }
}

fn p13a<T: Real>(s: T, w: T, z: T, p: T, q: T) -> Model<T> {
    let e = (T::one() + s).recip();
    let e_lo = (T::one() - s) * e;
    let e_hi = (lit::<T>(2.0) + s) * e;
    let two_e = e + e;
    Model {
        branches: vec![
            SpreadBranch::new("beta >= 0", &["alpha", "beta"], vec![(-4.0, 4.0), (0.0, 6.0)], move |x: &[T]| {
                let (al, be) = (x[0], x[1]);
                (be >= T::zero()).then(|| Mat2::new(al, w * be.powf(e_lo), be, z * be.powf(e) + al))
            }),
            SpreadBranch::new("beta < 0", &["alpha", "beta"], vec![(-4.0, 4.0), (-6.0, 0.0)], move |x: &[T]| {
                let (al, be) = (x[0], x[1]);
                let mb = -be;
                (be < T::zero()).then(|| Mat2::new(al, p * mb.powf(e_lo), be, q * mb.powf(e) + al))
            }),
        ],
        conditions: vec!["beta >= 0", "beta < 0"],
        chart: chart(|x: Vec2<T>| {
            nonzero(x)?;
            Ok((if x.y >= T::zero() { 0 } else { 1 }, vec![x.x, x.y]))
        }),
        subst: Some(subst(move |br, x: &[T]| {
            let (al, be) = (x[0], x[1]);
            let m = al * al + be * be;
            let (d, num) = if br == 0 {
                let d = al * al + z * al * be.powf(e) - w * be.powf(two_e);
                (d, w * al * be.powf(e_lo) + al * be + z * be.powf(e_hi))
            } else {
                let mb = -be;
                let d = al * al + q * al * mb.powf(e) + p * mb.powf(two_e);
                (d, p * al * mb.powf(e_lo) + al * be - q * mb.powf(e_hi))
            };
            let k = (d / m).sqrt();
            finite(Substitution {
                rcos: al * k,
                rsin: -be * k,
                a: (m / d).sqrt(),
                b: num / (m.sqrt() * d.sqrt()),
            })
        })),
        section: None,
    }
}

fn p13b<T: Real>(w: T, z: T, p: T, q: T) -> Model<T> {
    let two = lit::<T>(2.0);
    Model {
        branches: vec![
            SpreadBranch::new("beta >= 0", &["alpha", "beta"], vec![(-4.0, 4.0), (0.0, 4.0)], move |x: &[T]| {
                let (al, be) = (x[0], x[1]);
                (be >= T::zero()).then(|| {
                    let (bl, bl2) = (xlnx(be), xln2x(be));
                    Mat2::new(al, w * be - z * bl - bl2, be, al + z * be + two * bl)
                })
            }),
            SpreadBranch::new("beta < 0", &["alpha", "beta"], vec![(-4.0, 4.0), (-4.0, 0.0)], move |x: &[T]| {
                let (al, be) = (x[0], x[1]);
                (be < T::zero()).then(|| {
                    let (bl, bl2) = (xlnx(be), xln2x(be));
                    Mat2::new(al, -p * be - bl2 + q * bl, be, -q * be + al + two * bl)
                })
            }),
        ],
        conditions: vec!["beta >= 0", "beta < 0"],
        chart: chart(|x: Vec2<T>| {
            nonzero(x)?;
            Ok((if x.y >= T::zero() { 0 } else { 1 }, vec![x.x, x.y]))
        }),
        subst: Some(subst(move |br, x: &[T]| {
            let (al, be) = (x[0], x[1]);
            // bl = beta ln|beta|, bl2 = beta ln^2|beta|
            let (bl, bl2) = (xlnx(be), xln2x(be));
            let m = al * al + be * be;
            let (d, num) = if br == 0 {
                let d = al * al + z * al * be - w * be * be + two * al * bl + z * be * bl + bl * bl;
                let num = (w + T::one()) * al * be + z * be * be - z * al * bl - al * bl2 + two * be * bl;
                (d, num)
            } else {
                let d = al * al - q * al * be + p * be * be + two * al * bl - q * be * bl + bl * bl;
                let num = (T::one() - p) * al * be - q * be * be + two * be * bl + q * al * bl - al * bl2;
                (d, num)
            };
            let k = (d / m).sqrt();
            finite(Substitution {
                rcos: al * k,
                rsin: -be * k,
                a: (m / d).sqrt(),
                b: num / (m.sqrt() * d.sqrt()),
            })
        })),
        section: None,
    }
}

fn p13c<T: Real>(k: T, w: T, z: T, p: T, q: T) -> Model<T> {
    let two = lit::<T>(2.0);
    let one = T::one();
    // second entries of the element direction on the two branches (positive)
    let q_pos = move |l: T| {
        let (s, c) = l.sin_cos();
        c * c - z * s * c - w * s * s
    };
    let q_neg = move |l: T| {
        let (s, c) = l.sin_cos();
        c * c + q * s * c + p * s * s
    };
    let m_pos = move |l: T, u: T| {
        let (s, c) = l.sin_cos();
        let be = (k * l).exp();
        Mat2::new(
            u - (w + one) * s * c + z * s * s,
            w * c * c - z * s * c - s * s,
            c * c - z * s * c - w * s * s,
            z * c * c + (w + one) * s * c + u,
        )
        .scale(be)
    };
    let m_neg = move |l: T, u: T| {
        let (s, c) = l.sin_cos();
        let be = -(k * l).exp();
        Mat2::new(
            (p - one) * s * c - q * s * s - u,
            q * s * c - p * c * c - s * s,
            c * c + q * s * c + p * s * s,
            (one - p) * s * c - q * c * c - u,
        )
        .scale(be)
    };
    let lbox = (-3.0 / to_f64(k).abs(), 2.0 / to_f64(k).abs());
    Model {
        branches: vec![
            SpreadBranch::new("beta > 0", &["l", "u"], vec![lbox, (-12.0, 12.0)], move |x: &[T]| {
                Some(m_pos(x[0], x[1]))
            }),
            SpreadBranch::new("beta < 0", &["l", "u"], vec![lbox, (-12.0, 12.0)], move |x: &[T]| {
                Some(m_neg(x[0], x[1]))
            }),
            SpreadBranch::new("beta I", &["beta"], vec![(-4.0, 4.0)], |x: &[T]| {
                (x[0] != T::zero()).then(|| Mat2::scalar(x[0]))
            }),
        ],
        conditions: vec!["beta > 0, l = ln(beta)/k", "beta < 0, l = ln(-beta)/k", "beta I, beta != 0"],
        chart: chart(move |x: Vec2<T>| {
            nonzero(x)?;
            if x.y == T::zero() {
                return Ok((2, vec![x.x]));
            }
            let (pos, qf): (bool, &dyn Fn(T) -> T) = if x.y > T::zero() { (true, &q_pos) } else { (false, &q_neg) };
            let target = x.y.abs().ln();
            // ln|x2| = k l + ln Q(l), solved for L = k l
            let big_l = solve_scalar(|bl: T| bl + qf(bl / k).ln() - target, target, T::one(), 200)?;
            let l = big_l / k;
            let (s, c) = l.sin_cos();
            let be = big_l.exp();
            let u = if pos {
                x.x / be + (w + one) * s * c - z * s * s
            } else {
                (p - one) * s * c - q * s * s + x.x / be
            };
            Ok((if pos { 0 } else { 1 }, vec![l, u]))
        }),
        subst: Some(subst(move |br, x: &[T]| {
            if br == 2 {
                return finite(Substitution {
                    rcos: x[0],
                    rsin: T::zero(),
                    a: one,
                    b: T::zero(),
                });
            }
            let (l, u) = (x[0], x[1]);
            let (s, c) = l.sin_cos();
            let be = if br == 0 { (k * l).exp() } else { -(k * l).exp() };
            let (n, d, num, e1, e2) = if br == 0 {
                let n = u * u + s * s * (w * w + two * z * u + z * z) + c * c
                    - (two * u * w + two * u + two * z) * s * c;
                let d = u * u + u * z - w;
                let num = c * c * (two * u * w + two * u + two * z) + s * c * (one - w * w - z * z - two * u * z)
                    - (u + z + u * w);
                let e1 = be * (u - (w + one) * s * c + z * s * s);
                let e2 = be * (w * s * s + z * s * c - c * c);
                (n, d, num, e1, e2)
            } else {
                let n = u * u + s * s * (q * q + two * q * u + p * p) + c * c
                    + (two * u + two * q - two * u * p) * s * c;
                let d = u * u + u * q + p;
                let num = s * c * (one - two * u * q - p * p - q * q)
                    + s * s * (two * q + two * u - two * u * p)
                    + (u * p - q - u);
                let e1 = be * ((p - one) * s * c - q * s * s - u);
                let e2 = -be * (c * c + q * s * c + p * s * s);
                (n, d, num, e1, e2)
            };
            let kk = (d / n).sqrt();
            finite(Substitution {
                rcos: e1 * kk,
                rsin: e2 * kk,
                a: (n / d).sqrt(),
                b: num / (n * d).sqrt(),
            })
        })),
        section: None,
    }
}

fn p14<T: Real>(w: T, z: T, p: T, q: T) -> Model<T> {
    let (one, two, three) = (T::one(), lit::<T>(2.0), lit::<T>(3.0));
    let six = lit::<T>(6.0);
    let h_of = move |al: T, be: T| al + be * be / two;
    let m = move |al: T, be: T| -> Mat2<T> {
        let h = h_of(al, be);
        if h >= T::zero() {
            Mat2::new(
                al,
                -p / q * al + p / q * h.powf(lit(1.5)) + (one - q) / q * be * h - be * be * be / (three * q),
                be,
                -p / q * be + be * be / (two * q) + h,
            )
        } else {
            Mat2::new(
                al,
                -p / q * al + w / q * (-h).powf(lit(1.5)) + (z + one) / q * be * h - be * be * be / (three * q),
                be,
                -p / q * be + be * be / (two * q) - z / q * h,
            )
        }
    };
    Model {
        branches: vec![
            SpreadBranch::new(
                "alpha >= -beta^2/2",
                &["alpha", "beta"],
                vec![(-4.0, 4.0), (-3.0, 3.0)],
                move |x: &[T]| (h_of(x[0], x[1]) >= T::zero()).then(|| m(x[0], x[1])),
            ),
            SpreadBranch::new(
                "alpha < -beta^2/2",
                &["alpha", "beta"],
                vec![(-6.0, 0.0), (-3.0, 3.0)],
                move |x: &[T]| (h_of(x[0], x[1]) < T::zero()).then(|| m(x[0], x[1])),
            ),
        ],
        conditions: vec!["alpha >= -beta^2/2", "alpha < -beta^2/2"],
        chart: chart(move |x: Vec2<T>| {
            nonzero(x)?;
            Ok((if h_of(x.x, x.y) >= T::zero() { 0 } else { 1 }, vec![x.x, x.y]))
        }),
        subst: Some(subst(move |br, x: &[T]| {
            let (al, be) = (x[0], x[1]);
            let h = h_of(al, be);
            let n2 = al * al + be * be;
            let b3 = be * be * be;
            let (d, num) = if br == 0 {
                let h32 = h.powf(lit(1.5));
                let d = al * be * be / (two * q) + be * be * be * be / (three * q) + h * (al + (q - one) / q * be * be)
                    - p * be / q * h32;
                let num = p / q * al * h32 - p / q * n2 + (one - q) / q * be * al * al + al * b3 / (six * q)
                    - b3 * al / two
                    + b3 / (two * q)
                    + b3 / two
                    + al * be;
                (d, num)
            } else {
                let h32 = (-h).powf(lit(1.5));
                let d = al * be * be / (two * q) + be * be * be * be / (three * q)
                    - h * (al * z / q + (z + one) * be * be / q)
                    - w * be / q * h32;
                let num = w / q * al * h32 - p / q * n2 + ((z + one) / q * al * be - z * be / q) * h
                    - al * b3 / (three * q)
                    + b3 / (two * q);
                (d, num)
            };
            let n = n2.sqrt();
            let k = d.sqrt() / n;
            finite(Substitution {
                rcos: al * k,
                rsin: -be * k,
                a: n / d.sqrt(),
                b: num / (n * d.sqrt()),
            })
        })),
        section: None,
    }
}

fn p16a<T: Real>(w: T, c: T) -> Model<T> {
    let one = T::one();
    let ex = (one - w) / (one + w);
    Model {
        branches: vec![SpreadBranch::new(
            "s > 0",
            &["s", "phi"],
            vec![(0.05, 4.0), (-PI, PI)],
            move |x: &[T]| {
                let s = x[0];
                (s > T::zero()).then(|| {
                    let sw = s.powf(w);
                    turn(x[1]) * Mat2::new(s, c * (sw - s), T::zero(), sw)
                })
            },
        )],
        conditions: vec!["s > 0, phi in R"],
        chart: chart(|x: Vec2<T>| {
            nonzero(x)?;
            Ok((0, vec![x.norm(), x.arg()]))
        }),
        subst: None,
        section: Some(SectionPair::new("P16a", vec![], move |r: T, _: T| {
            ab(r.powf(ex), c * (r.powf(-ex) - r.powf(ex)))
        })),
    }
}

fn p16b<T: Real>(d: T) -> Model<T> {
    Model {
        branches: vec![SpreadBranch::new(
            "all",
            &["s", "phi"],
            vec![(-3.0, 2.0), (-PI, PI)],
            move |x: &[T]| {
                let es = x[0].exp();
                Some(turn(x[1]) * Mat2::new(es, es * x[0] / d, T::zero(), es))
            },
        )],
        conditions: vec!["(s, phi) in R^2"],
        chart: chart(|x: Vec2<T>| {
            nonzero(x)?;
            Ok((0, vec![x.norm().ln(), x.arg()]))
        }),
        subst: None,
        section: Some(SectionPair::new("P16b", vec![], move |r: T, _: T| ab(T::one(), r.ln() / d))),
    }
}

fn remark_f<T: Real>(f: MonotoneFn) -> Model<T> {
    let f1: T = f.eval(T::one());
    Model {
        branches: vec![SpreadBranch::new(
            "u > 0",
            &["u", "phi"],
            vec![(0.05, 4.0), (-PI, PI)],
            move |x: &[T]| {
                let u = x[0];
                (u > T::zero()).then(|| turn(x[1]) * Mat2::new(u, T::zero(), T::zero(), f.eval(u) / f1))
            },
        )],
        conditions: vec!["u > 0, phi in [0, 2 pi)"],
        chart: chart(|x: Vec2<T>| {
            nonzero(x)?;
            Ok((0, vec![x.norm(), x.arg()]))
        }),
        subst: None,
        section: Some(SectionPair::new("RemarkF", vec![], move |r: T, _: T| {
            // r^2 = u f(u) / f(1), solved for ln u
            let target = lit::<T>(2.0) * r.ln() + f1.ln();
            let lu = solve_scalar(|x: T| x + f.eval(x.exp()).ln() - target, r.ln(), lit(0.5), 200)?;
            let u = lu.exp();
            ab((u * f1 / f.eval(u)).sqrt(), T::zero())
        })),
    }
}

/// Continuous argument of P (cos x, sin x), P = [[1, c], [0, d]].
fn arg_p<T: Real>(c: T, d: T, x: T) -> T {
    let eps = if d > T::zero() { T::one() } else { -T::one() };
    let (s, co) = x.sin_cos();
    let v = Vec2::new((eps * x).cos(), (eps * x).sin());
    let pv = Vec2::new(co + c * s, d * s);
    eps * x + v.cross(pv).atan2(v.dot(pv))
}

fn p17a<T: Real>(p: T, q: T, c: T, d: T) -> Model<T> {
    let (one, two) = (T::one(), lit::<T>(2.0));
    let e = (q * T::PI()).exp();
    // (alpha, beta, gamma, delta) of the spread
    let abgd = move |s: T, t: T| {
        let ex = (q * t - p * s).exp();
        let (ss, cs) = s.sin_cos();
        let (st, ct) = t.sin_cos();
        (
            ex * (cs * ct + c * st * cs + d * st * ss),
            ex * (d * cs * st - ss * ct - c * ss * st),
            ex * (d * ct * ss - st * cs + c * ct * cs),
            ex * (d * ct * cs + st * ss - c * ct * ss),
        )
    };
    let tbox = (-4.0, 5.0);
    Model {
        branches: vec![SpreadBranch::new("all", &["s", "t"], vec![(-PI, PI), tbox], move |x: &[T]| {
            let (al, be, ga, de) = abgd(x[0], x[1]);
            let k = (one + e).recip();
            Some(Mat2::new(
                (al + e) * k,
                (ga - c * al) / d * k,
                be * k,
                (de - c * be + d * e) / d * k,
            ))
        })],
        conditions: vec!["(s, t) in R^2"],
        chart: chart(move |x: Vec2<T>| {
            let z = Vec2::new((one + e) * x.x - e, (one + e) * x.y);
            if z.is_zero() || !z.is_finite() {
                return Err(QfError::Domain("element E/(1+E) (1, 0) is the limit X -> -inf".into()));
            }
            let th = z.arg();
            let lz = z.norm().ln();
            let g = |t: T| {
                let (st, ct) = t.sin_cos();
                q * t - p * (arg_p(c, d, t) - th) + (ct + c * st).hypot(d * st).ln() - lz
            };
            let t = solve_scalar(g, T::zero(), T::one(), 200)?;
            Ok((0, vec![arg_p(c, d, t) - th, t]))
        }),
        subst: Some(subst(move |_, x: &[T]| {
            let (s, t) = (x[0], x[1]);
            let xx = q * t - p * s;
            let ex = xx.exp();
            let e2x = (two * xx).exp();
            let (ss, cs) = s.sin_cos();
            let (st, ct) = t.sin_cos();
            let c2d2 = c * c + one + d * d;
            let dd = e2x * ((ct + c * st).powi(2) + d * d * st * st)
                + e * e
                + two * ex * e * (cs * ct + c * cs * st + d * ss * st);
            let den = d * e2x + d * e * e + ex * e * (two * d * cs * ct + c2d2 * ss * st);
            let a = (d * dd / den).sqrt();
            let num = e2x * ((d * d - one - c * c) * ct * st - c * c2d2 * st * st)
                + ex * e * ((d * d - one - c * c) * cs * st - two * c * d * ss * st);
            let b = d.signum() * num / (a * den.abs());
            let (al, be, _, _) = abgd(s, t);
            finite(Substitution {
                rcos: (al + e) / (one + e) / a,
                rsin: -be / (one + e) / a,
                a,
                b,
            })
        })),
        section: None,
    }
}

fn p17b<T: Real>(m: f64, n: f64, c: T, d: T) -> Model<T> {
    let (mt, nt): (T, T) = (lit(m), lit(n));
    let one = T::one();
    let a11_12 = move |t: T| -> (T, T, T, T) {
        let (sn, cn) = (nt * t).sin_cos();
        let (sm, cm) = (mt * t).sin_cos();
        (
            cn * cm + c * sn * cm + d * sn * sm,
            d * sn * cm - cn * sm - c * sn * sm,
            d * cn * sm - sn * cm + c * cn * cm,
            d * cn * cm + sn * sm - c * cn * sm,
        )
    };
    let big_a = move |t: T| {
        let (sn, cn) = (nt * t).sin_cos();
        (cn + c * sn).hypot(d * sn)
    };
    let b_of = move |t: T| {
        let (sn, cn) = (nt * t).sin_cos();
        (sn * cn * (d * d - one - c * c) - c * sn * sn * (d * d + one + c * c)) / (d * big_a(t))
    };
    let slope = if d > T::zero() { nt - mt } else { -nt - mt };
    // spread angle t whose first column points along angle th
    let angle = move |th: T| -> Result<T> {
        let psi = |t: T| arg_p(c, d, nt * t) - mt * t - th;
        solve_scalar(psi, th / slope, lit(0.5), 200)
    };
    Model {
        branches: vec![SpreadBranch::new(
            "s >= 0",
            &["s", "t"],
            vec![(0.05, 4.0), (0.0, 2.0 * PI)],
            move |x: &[T]| {
                let (s, t) = (x[0], x[1]);
                (s >= T::zero()).then(|| {
                    let (a11, a12, a21, a22) = a11_12(t);
                    Mat2::new(a11, (-c * a11 + a21) / d, a12, (-c * a12 + a22) / d).scale(s)
                })
            },
        )],
        conditions: vec!["s >= 0, t in R"],
        chart: chart(move |x: Vec2<T>| {
            nonzero(x)?;
            let t = angle(x.arg())?;
            let (a11, a12, _, _) = a11_12(t);
            Ok((0, vec![x.norm() / a11.hypot(a12), t]))
        }),
        subst: None,
        section: Some(SectionPair::new("P17b", vec![], move |_: T, u: T| {
            let t = angle(-u)?;
            ab(big_a(t), b_of(t))
        })),
    }
}

impl MonotoneFn {
    pub fn eval<T: Real>(&self, u: T) -> T {
        match *self {
            MonotoneFn::Cubic => u + u * u * u,
            MonotoneFn::Power(w) => u.powf(lit(w)),
            MonotoneFn::Expm1 => u.exp_m1(),
        }
    }
}
