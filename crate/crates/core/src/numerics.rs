//! Quadrature and finite differences on uniform grids.

use crate::error::{QfError, Result};
use crate::scalar::{lit, Real};

/// Composite Simpson rule with `n` subintervals (rounded up to even).
pub fn simpson<T: Real>(f: impl Fn(T) -> T, a: T, b: T, n: usize) -> T {
    let n = (n.max(2) + 1) & !1;
    let h = (b - a) / lit(n as f64);
    let mut odd = T::zero();
    let mut even = T::zero();
    for i in 1..n {
        let x = a + h * lit(i as f64);
        if i % 2 == 1 {
            odd = odd + f(x);
        } else {
            even = even + f(x);
        }
    }
    h / lit(3.0) * (f(a) + f(b) + lit::<T>(4.0) * odd + lit::<T>(2.0) * even)
}

/// Running integral of uniformly sampled data, I[0] = 0.
/// Even nodes use Simpson, odd nodes add a one-panel quadratic correction.
pub fn cumulative_simpson<T: Real>(y: &[T], h: T) -> Vec<T> {
    let n = y.len();
    let mut out = vec![T::zero(); n];
    if n < 2 {
        return out;
    }
    if n == 2 {
        out[1] = h * (y[0] + y[1]) / lit(2.0);
        return out;
    }
    let mut acc = T::zero();
    let mut i = 0;
    while i + 2 < n {
        let (f0, f1, f2) = (y[i], y[i + 1], y[i + 2]);
        out[i + 1] = acc + h * (lit::<T>(5.0) * f0 + lit::<T>(8.0) * f1 - f2) / lit(12.0);
        acc = acc + h * (f0 + lit::<T>(4.0) * f1 + f2) / lit(3.0);
        out[i + 2] = acc;
        i += 2;
    }
    if i + 1 < n {
        // odd number of panels: last panel from the quadratic through the final three nodes
        let (f0, f1, f2) = (y[n - 3], y[n - 2], y[n - 1]);
        out[n - 1] = out[n - 2] + h * (-f0 + lit::<T>(8.0) * f1 + lit::<T>(5.0) * f2) / lit(12.0);
    }
    out
}

/// Central differences, second-order one-sided at both ends.
pub fn derivative<T: Real>(y: &[T], h: T) -> Result<Vec<T>> {
    let n = y.len();
    if n < 3 {
        return Err(QfError::GridTooCoarse(format!("{n} samples")));
    }
    let two_h = h + h;
    let mut d = vec![T::zero(); n];
    d[0] = (lit::<T>(-3.0) * y[0] + lit::<T>(4.0) * y[1] - y[2]) / two_h;
    d[n - 1] = (lit::<T>(3.0) * y[n - 1] - lit::<T>(4.0) * y[n - 2] + y[n - 3]) / two_h;
    for i in 1..n - 1 {
        d[i] = (y[i + 1] - y[i - 1]) / two_h;
    }
    if d.iter().any(|v| !v.is_finite()) {
        return Err(QfError::GridTooCoarse("non-finite derivative estimate".into()));
    }
    Ok(d)
}

/// n+1 uniform nodes on [a, b].
pub fn linspace<T: Real>(a: T, b: T, n: usize) -> Vec<T> {
    let h = (b - a) / lit(n as f64);
    (0..=n).map(|i| a + h * lit(i as f64)).collect()
}

/// `n` log-spaced points on [a, b] (n >= 2).
pub fn logspace<T: Real>(a: T, b: T, n: usize) -> Vec<T> {
    let (la, lb) = (a.ln(), b.ln());
    (0..n)
        .map(|i| (la + (lb - la) * lit(i as f64) / lit((n - 1) as f64)).exp())
        .collect()
}
