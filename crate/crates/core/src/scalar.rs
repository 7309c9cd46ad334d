use std::fmt::{Debug, Display};

use num_traits::{Float, FloatConst, FromPrimitive, ToPrimitive};

/// Floating scalar the whole library is generic over.
pub trait Real:
    Float + FloatConst + FromPrimitive + ToPrimitive + Debug + Display + Send + Sync + 'static
{
}

impl Real for f32 {}
impl Real for f64 {}

/// Converts an f64 literal into `T`.
#[inline]
pub fn lit<T: Real>(x: f64) -> T {
    T::from_f64(x).expect("literal representable")
}

#[inline]
pub fn to_f64<T: Real>(x: T) -> f64 {
    x.to_f64().unwrap_or(f64::NAN)
}

/// Combined absolute/relative comparison: |a-b| <= atol + rtol*max(|a|,|b|).
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Tolerance<T> {
    pub atol: T,
    pub rtol: T,
}

impl<T: Real> Tolerance<T> {
    pub fn new(atol: T, rtol: T) -> Self {
        Self { atol, rtol }
    }

    pub fn bound(&self, a: T, b: T) -> T {
        self.atol + self.rtol * a.abs().max(b.abs())
    }

    pub fn close(&self, a: T, b: T) -> bool {
        (a - b).abs() <= self.bound(a, b)
    }

    /// Residual scaled so that values <= 1 count as equal.
    pub fn scaled(&self, a: T, b: T) -> T {
        (a - b).abs() / self.bound(a, b)
    }
}

impl<T: Real> Default for Tolerance<T> {
    fn default() -> Self {
        Self {
            atol: lit(1e-12),
            rtol: lit(1e-10),
        }
    }
}

/// Reduces an angle to [0, 2pi); values that round up to 2pi map to 0.
pub fn normalize_angle<T: Real>(t: T) -> T {
    let tau = T::TAU();
    let mut r = t % tau;
    if r < T::zero() {
        r = r + tau;
    }
    if r >= tau {
        r = T::zero();
    }
    r
}

/// Signed difference a-b reduced to (-pi, pi].
pub fn angle_diff<T: Real>(a: T, b: T) -> T {
    let pi = T::PI();
    let d = normalize_angle(a - b);
    if d > pi {
        d - T::TAU()
    } else {
        d
    }
}
