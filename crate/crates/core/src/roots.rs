//! Scalar bracketing solvers and a small Levenberg-Marquardt for 1-2 unknowns.

use crate::error::{QfError, Result};
use crate::scalar::{lit, to_f64, Real};

/// Brent's method on a sign-changing bracket [a, b].
pub fn brent<T: Real>(
    mut f: impl FnMut(T) -> T,
    a: T,
    b: T,
    fa: T,
    fb: T,
    max_iter: usize,
) -> Result<T> {
    let two = lit::<T>(2.0);
    let eps = T::epsilon();
    let (mut a, mut b, mut fa, mut fb) = (a, b, fa, fb);
    if fa == T::zero() {
        return Ok(a);
    }
    if fb == T::zero() {
        return Ok(b);
    }
    if (fa > T::zero()) == (fb > T::zero()) {
        return Err(QfError::NoConvergence {
            what: "brent: no sign change in bracket".into(),
            residual: to_f64(fa.abs().min(fb.abs())),
        });
    }
    let (mut c, mut fc) = (a, fa);
    let mut d = b - a;
    let mut e = d;
    for _ in 0..max_iter {
        if (fb > T::zero()) == (fc > T::zero()) {
            c = a;
            fc = fa;
            d = b - a;
            e = d;
        }
        if fc.abs() < fb.abs() {
            a = b;
            b = c;
            c = a;
            fa = fb;
            fb = fc;
            fc = fa;
        }
        let tol = two * eps * b.abs() + T::min_positive_value();
        let m = (c - b) / two;
        if m.abs() <= tol || fb == T::zero() {
            return Ok(b);
        }
        if e.abs() >= tol && fa.abs() > fb.abs() {
            let s = fb / fa;
            let (mut p, mut q);
            if a == c {
                p = two * m * s;
                q = T::one() - s;
            } else {
                let qq = fa / fc;
                let r = fb / fc;
                p = s * (two * m * qq * (qq - r) - (b - a) * (r - T::one()));
                q = (qq - T::one()) * (r - T::one()) * (s - T::one());
            }
            if p > T::zero() {
                q = -q;
            } else {
                p = -p;
            }
            let three = lit::<T>(3.0);
            if two * p < (three * m * q - (tol * q).abs()).min((e * q).abs()) {
                e = d;
                d = p / q;
            } else {
                d = m;
                e = m;
            }
        } else {
            d = m;
            e = m;
        }
        a = b;
        fa = fb;
        b = if d.abs() > tol {
            b + d
        } else if m > T::zero() {
            b + tol
        } else {
            b - tol
        };
        fb = f(b);
        if !fb.is_finite() {
            return Err(QfError::NoConvergence {
                what: "brent: non-finite function value".into(),
                residual: f64::INFINITY,
            });
        }
    }
    Err(QfError::NoConvergence {
        what: "brent".into(),
        residual: to_f64(fb.abs()),
    })
}

/// Expands symmetrically around `x0` (step doubling) until f changes sign.
/// Returns (a, b, f(a), f(b)).
pub fn expand_bracket<T: Real>(
    mut f: impl FnMut(T) -> T,
    x0: T,
    step: T,
    max_expansions: usize,
) -> Result<(T, T, T, T)> {
    let f0 = f(x0);
    if !f0.is_finite() {
        return Err(QfError::NoConvergence {
            what: "bracket: non-finite start value".into(),
            residual: f64::INFINITY,
        });
    }
    if f0 == T::zero() {
        return Ok((x0, x0, f0, f0));
    }
    let (mut lo, mut flo, mut hi, mut fhi) = (x0, f0, x0, f0);
    let mut h = step;
    let mut best = f0.abs();
    for _ in 0..max_expansions {
        let xr = hi + h;
        let fr = f(xr);
        if fr.is_finite() {
            best = best.min(fr.abs());
            if (fr > T::zero()) != (fhi > T::zero()) || fr == T::zero() {
                return Ok((hi, xr, fhi, fr));
            }
            hi = xr;
            fhi = fr;
        }
        let xl = lo - h;
        let fl = f(xl);
        if fl.is_finite() {
            best = best.min(fl.abs());
            if (fl > T::zero()) != (flo > T::zero()) || fl == T::zero() {
                return Ok((xl, lo, fl, flo));
            }
            lo = xl;
            flo = fl;
        }
        h = h * lit(2.0);
    }
    Err(QfError::NoConvergence {
        what: "bracket expansion".into(),
        residual: to_f64(best),
    })
}

/// Bracket expansion followed by Brent.
pub fn solve_scalar<T: Real>(
    mut f: impl FnMut(T) -> T,
    x0: T,
    step: T,
    max_iter: usize,
) -> Result<T> {
    let (a, b, fa, fb) = expand_bracket(&mut f, x0, step, 64)?;
    if a == b {
        return Ok(a);
    }
    brent(f, a, b, fa, fb, max_iter)
}

/// Outcome of a Levenberg-Marquardt run.
#[derive(Clone, Debug)]
pub struct LmSolution<T> {
    pub x: Vec<T>,
    pub residual: T,
    pub iterations: usize,
}

fn sq_norm<T: Real>(r: &[T; 2]) -> T {
    r[0] * r[0] + r[1] * r[1]
}

/// Minimizes |F(x)| for F: R^n -> R^2 (n = 1 or 2) with a finite-difference
/// Jacobian. `f` returns None outside its domain.
pub fn levenberg_marquardt<T: Real>(
    f: &impl Fn(&[T]) -> Option<[T; 2]>,
    x0: &[T],
    ftol: T,
    max_iter: usize,
) -> Option<LmSolution<T>> {
    let n = x0.len();
    assert!(n == 1 || n == 2, "levenberg_marquardt supports 1 or 2 unknowns");
    let mut x = x0.to_vec();
    let mut r = f(&x)?;
    let mut cost = sq_norm(&r);
    let mut mu = lit::<T>(1e-3);
    let hstep = T::epsilon().cbrt();
    for it in 0..max_iter {
        if cost.sqrt() <= ftol {
            return Some(LmSolution { x, residual: cost.sqrt(), iterations: it });
        }
        let mut jac = [[T::zero(); 2]; 2];
        for j in 0..n {
            let h = hstep * x[j].abs().max(T::one());
            let mut xp = x.clone();
            let mut xm = x.clone();
            xp[j] = x[j] + h;
            xm[j] = x[j] - h;
            let col = match (f(&xp), f(&xm)) {
                (Some(p), Some(m)) => [(p[0] - m[0]) / (h + h), (p[1] - m[1]) / (h + h)],
                (Some(p), None) => [(p[0] - r[0]) / h, (p[1] - r[1]) / h],
                (None, Some(m)) => [(r[0] - m[0]) / h, (r[1] - m[1]) / h],
                (None, None) => return None,
            };
            jac[0][j] = col[0];
            jac[1][j] = col[1];
        }
        // normal equations (J^T J + mu diag) d = -J^T r
        let mut a = [[T::zero(); 2]; 2];
        let mut g = [T::zero(); 2];
        for i in 0..n {
            for j in 0..n {
                a[i][j] = jac[0][i] * jac[0][j] + jac[1][i] * jac[1][j];
            }
            g[i] = jac[0][i] * r[0] + jac[1][i] * r[1];
        }
        let mut improved = false;
        for _ in 0..40 {
            let mut m = a;
            for i in 0..n {
                m[i][i] = a[i][i] * (T::one() + mu) + mu * lit(1e-30);
            }
            let d = if n == 1 {
                if m[0][0] == T::zero() {
                    break;
                }
                vec![-g[0] / m[0][0]]
            } else {
                let det = m[0][0] * m[1][1] - m[0][1] * m[1][0];
                if det == T::zero() || !det.is_finite() {
                    mu = mu * lit(10.0);
                    continue;
                }
                vec![
                    -(m[1][1] * g[0] - m[0][1] * g[1]) / det,
                    -(m[0][0] * g[1] - m[1][0] * g[0]) / det,
                ]
            };
            let xn: Vec<T> = x.iter().zip(&d).map(|(a, b)| *a + *b).collect();
            if let Some(rn) = f(&xn) {
                let cn = sq_norm(&rn);
                if cn.is_finite() && cn < cost {
                    let stalled = xn
                        .iter()
                        .zip(&x)
                        .all(|(a, b)| (*a - *b).abs() <= T::epsilon() * b.abs().max(T::one()));
                    x = xn;
                    r = rn;
                    cost = cn;
                    mu = (mu * lit(0.2)).max(lit(1e-12));
                    improved = !stalled;
                    break;
                }
            }
            mu = mu * lit(8.0);
            if mu > lit(1e16) {
                break;
            }
        }
        if !improved {
            return Some(LmSolution { x, residual: cost.sqrt(), iterations: it });
        }
    }
    Some(LmSolution { x, residual: cost.sqrt(), iterations: max_iter })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn brent_finds_cubic_root() {
        let f = |x: f64| x * x * x - 2.0;
        let r = brent(f, 0.0, 2.0, f(0.0), f(2.0), 100).unwrap();
        assert!((r - 2f64.cbrt()).abs() < 1e-15);
    }

    #[test]
    fn brent_rejects_bad_bracket() {
        let f = |x: f64| x * x + 1.0;
        assert!(brent(f, -1.0, 1.0, f(-1.0), f(1.0), 100).is_err());
    }

    #[test]
    fn bracket_expands_outwards() {
        let r = solve_scalar(|x: f64| x - 1000.0, 0.0, 1.0, 200).unwrap();
        assert!((r - 1000.0).abs() < 1e-10);
        let r = solve_scalar(|x: f64| (-x).exp() - 2.0, 3.0, 0.5, 200).unwrap();
        assert!((r + 2f64.ln()).abs() < 1e-14);
    }

    #[test]
    fn lm_solves_square_system() {
        let f = |x: &[f64]| Some([x[0] * x[0] - x[1] - 1.0, x[0] + x[1] - 5.0]);
        let s = levenberg_marquardt(&f, &[1.0, 1.0], 1e-13, 200).unwrap();
        assert!(s.residual < 1e-13, "{:?}", s);
        let x = s.x;
        assert!((x[0] * x[0] - x[1] - 1.0).abs() < 1e-12);
    }

    #[test]
    fn lm_one_unknown_least_squares() {
        let f = |x: &[f64]| Some([x[0] - 2.0, 0.0]);
        let s = levenberg_marquardt(&f, &[10.0], 1e-14, 100).unwrap();
        assert!((s.x[0] - 2.0).abs() < 1e-12);
    }

    #[test]
    fn lm_respects_domain() {
        // domain x > 0, root at x = 0.5
        let f = |x: &[f64]| if x[0] > 0.0 { Some([x[0].ln() + 2f64.ln(), 0.0]) } else { None };
        let s = levenberg_marquardt(&f, &[3.0], 1e-14, 200).unwrap();
        assert!((s.x[0] - 0.5).abs() < 1e-12);
    }
}
