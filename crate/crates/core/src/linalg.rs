//! 2x2 real linear algebra and the rotation/triangular decomposition of GL2+.

use std::ops::{Add, Mul, Neg, Sub};

use serde::{Deserialize, Serialize};

use crate::error::{QfError, Result};
use crate::scalar::{normalize_angle, to_f64, Real, Tolerance};

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Vec2<T> {
    pub x: T,
    pub y: T,
}

impl<T: Real> Vec2<T> {
    pub fn new(x: T, y: T) -> Self {
        Self { x, y }
    }

    pub fn e1() -> Self {
        Self::new(T::one(), T::zero())
    }

    pub fn e2() -> Self {
        Self::new(T::zero(), T::one())
    }

    pub fn zero() -> Self {
        Self::new(T::zero(), T::zero())
    }

    pub fn norm(self) -> T {
        self.x.hypot(self.y)
    }

    pub fn scale(self, s: T) -> Self {
        Self::new(self.x * s, self.y * s)
    }

    pub fn dot(self, o: Self) -> T {
        self.x * o.x + self.y * o.y
    }

    pub fn cross(self, o: Self) -> T {
        self.x * o.y - self.y * o.x
    }

    /// atan2(y, x) in (-pi, pi].
    pub fn arg(self) -> T {
        self.y.atan2(self.x)
    }

    pub fn is_zero(self) -> bool {
        self.x == T::zero() && self.y == T::zero()
    }

    pub fn is_finite(self) -> bool {
        self.x.is_finite() && self.y.is_finite()
    }

    pub fn dist(self, o: Self) -> T {
        (self - o).norm()
    }

    pub fn to_f64(self) -> [f64; 2] {
        [to_f64(self.x), to_f64(self.y)]
    }
}

impl<T: Real> Add for Vec2<T> {
    type Output = Self;
    fn add(self, o: Self) -> Self {
        Self::new(self.x + o.x, self.y + o.y)
    }
}

impl<T: Real> Sub for Vec2<T> {
    type Output = Self;
    fn sub(self, o: Self) -> Self {
        Self::new(self.x - o.x, self.y - o.y)
    }
}

impl<T: Real> Neg for Vec2<T> {
    type Output = Self;
    fn neg(self) -> Self {
        Self::new(-self.x, -self.y)
    }
}

/// Row-major 2x2 matrix [[m11, m12], [m21, m22]].
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Mat2<T> {
    pub m11: T,
    pub m12: T,
    pub m21: T,
    pub m22: T,
}

impl<T: Real> Mat2<T> {
    pub fn new(m11: T, m12: T, m21: T, m22: T) -> Self {
        Self { m11, m12, m21, m22 }
    }

    pub fn identity() -> Self {
        Self::scalar(T::one())
    }

    pub fn zero() -> Self {
        Self::scalar(T::zero())
    }

    pub fn scalar(s: T) -> Self {
        Self::new(s, T::zero(), T::zero(), s)
    }

    pub fn from_rows(r: [[T; 2]; 2]) -> Self {
        Self::new(r[0][0], r[0][1], r[1][0], r[1][1])
    }

    pub fn rows(&self) -> [[T; 2]; 2] {
        [[self.m11, self.m12], [self.m21, self.m22]]
    }

    pub fn det(&self) -> T {
        self.m11 * self.m22 - self.m12 * self.m21
    }

    pub fn trace(&self) -> T {
        self.m11 + self.m22
    }

    pub fn first_column(&self) -> Vec2<T> {
        Vec2::new(self.m11, self.m21)
    }

    pub fn apply(&self, v: Vec2<T>) -> Vec2<T> {
        Vec2::new(
            self.m11 * v.x + self.m12 * v.y,
            self.m21 * v.x + self.m22 * v.y,
        )
    }

    pub fn scale(&self, s: T) -> Self {
        Self::new(self.m11 * s, self.m12 * s, self.m21 * s, self.m22 * s)
    }

    pub fn inverse(&self) -> Option<Self> {
        let d = self.det();
        if d == T::zero() || !d.is_finite() {
            return None;
        }
        Some(Self::new(self.m22 / d, -self.m12 / d, -self.m21 / d, self.m11 / d))
    }

    /// Solves self * z = w by Cramer's rule.
    pub fn solve(&self, w: Vec2<T>) -> Option<Vec2<T>> {
        let d = self.det();
        if d == T::zero() || !d.is_finite() {
            return None;
        }
        Some(Vec2::new(
            (self.m22 * w.x - self.m12 * w.y) / d,
            (self.m11 * w.y - self.m21 * w.x) / d,
        ))
    }

    pub fn max_abs(&self) -> T {
        self.m11
            .abs()
            .max(self.m12.abs())
            .max(self.m21.abs())
            .max(self.m22.abs())
    }

    pub fn max_abs_diff(&self, o: &Self) -> T {
        (*self - *o).max_abs()
    }

    pub fn is_finite(&self) -> bool {
        self.m11.is_finite() && self.m12.is_finite() && self.m21.is_finite() && self.m22.is_finite()
    }

    pub fn approx_eq(&self, o: &Self, tol: &Tolerance<T>) -> bool {
        let scale = self.max_abs().max(o.max_abs());
        self.max_abs_diff(o) <= tol.atol + tol.rtol * scale
    }

    pub fn to_f64(&self) -> [[f64; 2]; 2] {
        [
            [to_f64(self.m11), to_f64(self.m12)],
            [to_f64(self.m21), to_f64(self.m22)],
        ]
    }
}

impl<T: Real> Add for Mat2<T> {
    type Output = Self;
    fn add(self, o: Self) -> Self {
        Self::new(self.m11 + o.m11, self.m12 + o.m12, self.m21 + o.m21, self.m22 + o.m22)
    }
}

impl<T: Real> Sub for Mat2<T> {
    type Output = Self;
    fn sub(self, o: Self) -> Self {
        Self::new(self.m11 - o.m11, self.m12 - o.m12, self.m21 - o.m21, self.m22 - o.m22)
    }
}

impl<T: Real> Mul for Mat2<T> {
    type Output = Self;
    fn mul(self, o: Self) -> Self {
        Self::new(
            self.m11 * o.m11 + self.m12 * o.m21,
            self.m11 * o.m12 + self.m12 * o.m22,
            self.m21 * o.m11 + self.m22 * o.m21,
            self.m21 * o.m12 + self.m22 * o.m22,
        )
    }
}

impl<T: Real> Mul<Vec2<T>> for Mat2<T> {
    type Output = Vec2<T>;
    fn mul(self, v: Vec2<T>) -> Vec2<T> {
        self.apply(v)
    }
}

/// Coordinates (u, t, k, l) of g = u * rotation(t) * triangular(k, l).
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct GroupCoords<T> {
    pub u: T,
    pub t: T,
    pub k: T,
    pub l: T,
}

/// [[cos t, sin t], [-sin t, cos t]]
pub fn rotation<T: Real>(t: T) -> Mat2<T> {
    let (s, c) = t.sin_cos();
    Mat2::new(c, s, -s, c)
}

/// [[k, l], [0, 1/k]]
pub fn triangular<T: Real>(k: T, l: T) -> Result<Mat2<T>> {
    if !(k > T::zero()) || !k.is_finite() || !l.is_finite() {
        return Err(QfError::Domain(format!(
            "triangular needs k > 0, got k = {}",
            to_f64(k)
        )));
    }
    Ok(Mat2::new(k, l, T::zero(), k.recip()))
}

pub fn compose<T: Real>(c: &GroupCoords<T>) -> Result<Mat2<T>> {
    Ok((rotation(c.t) * triangular(c.k, c.l)?).scale(c.u))
}

pub fn decompose_gl2plus<T: Real>(g: &Mat2<T>) -> Result<GroupCoords<T>> {
    let det = g.det();
    if !(det > T::zero()) || !g.is_finite() {
        return Err(QfError::NotInGroup { det: to_f64(det) });
    }
    let u = det.sqrt();
    let h = g.scale(u.recip());
    // first column of rotation(t)*triangular(k,l) is k*(cos t, -sin t)
    let t = normalize_angle((-h.m21).atan2(h.m11));
    let tri = rotation(-t) * h;
    let k = h.m11.hypot(h.m21);
    Ok(GroupCoords { u, t, k, l: tri.m12 })
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;
    use std::f64::consts::{FRAC_PI_2, PI};

    fn close(a: f64, b: f64) -> bool {
        Tolerance::default().close(a, b)
    }

    #[test]
    fn rotation_examples() {
        assert_eq!(rotation(0.0), Mat2::identity());
        let q = rotation(FRAC_PI_2);
        assert!(q.approx_eq(&Mat2::new(0.0, 1.0, -1.0, 0.0), &Tolerance::default()));
        let p = rotation(0.7) * rotation(-0.7);
        assert!(p.approx_eq(&Mat2::identity(), &Tolerance::default()));
    }

    #[test]
    fn triangular_examples() {
        assert_eq!(triangular(1.0, 0.0).unwrap(), Mat2::identity());
        assert_eq!(triangular(2.0, 3.0).unwrap(), Mat2::new(2.0, 3.0, 0.0, 0.5));
        assert!(close(triangular(0.3, -5.0).unwrap().det(), 1.0));
        assert!(triangular(0.0, 1.0).is_err());
        assert!(triangular(-1.0, 1.0).is_err());
    }

    #[test]
    fn decompose_examples() {
        let c = decompose_gl2plus(&Mat2::<f64>::identity()).unwrap();
        assert_eq!((c.u, c.t, c.k, c.l), (1.0, 0.0, 1.0, 0.0));
        let c = decompose_gl2plus(&Mat2::new(0.0, 2.0, -2.0, 0.0)).unwrap();
        assert!(close(c.u, 2.0) && close(c.t, FRAC_PI_2) && close(c.k, 1.0) && c.l.abs() < 1e-15);
        assert!(decompose_gl2plus(&Mat2::new(1.0, 0.0, 0.0, -1.0)).is_err());
        assert!(decompose_gl2plus(&Mat2::<f64>::zero()).is_err());
    }

    #[test]
    fn decompose_rotation_by_pi() {
        let c = decompose_gl2plus(&Mat2::scalar(-3.0)).unwrap();
        assert!(close(c.u, 3.0) && close(c.t, PI) && close(c.k, 1.0));
    }

    #[test]
    fn works_in_f32() {
        let g = Mat2::<f32>::new(1.5, -0.25, 0.5, 2.0);
        let c = decompose_gl2plus(&g).unwrap();
        let back = compose(&c).unwrap();
        assert!(back.max_abs_diff(&g) < 1e-5);
    }

    proptest! {
        #[test]
        fn round_trip(u in 0.01f64..100.0, t in 0.0f64..6.28, k in 0.05f64..20.0, l in -20.0f64..20.0) {
            let g = compose(&GroupCoords { u, t, k, l }).unwrap();
            prop_assert!(close(g.det(), u * u));
            let c = decompose_gl2plus(&g).unwrap();
            let back = compose(&c).unwrap();
            prop_assert!(back.approx_eq(&g, &Tolerance::default()));
            prop_assert!(close(c.u, u) && close(c.k, k));
            prop_assert!(crate::scalar::angle_diff(c.t, t).abs() < 1e-10);
            prop_assert!((c.l - l).abs() <= 1e-10 * (1.0 + l.abs() + k + 1.0 / k));
        }

        #[test]
        fn random_matrix_recomposes(a in -5.0f64..5.0, b in -5.0f64..5.0, c in -5.0f64..5.0, d in -5.0f64..5.0) {
            let g = Mat2::new(a, b, c, d);
            prop_assume!(g.det() > 1e-3);
            let back = compose(&decompose_gl2plus(&g).unwrap()).unwrap();
            prop_assert!(back.approx_eq(&g, &Tolerance::new(1e-12, 1e-11)));
        }
    }
}
