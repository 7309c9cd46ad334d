//! Two-dimensional locally compact quasifields realized as sharply
//! transitive sections (a(u,t), b(u,t)) in the connected component of GL2(R),
//! their multiplicative loops, spread sets, structural predicates and a
//! catalog of the known translation-plane families.
//!
//! Everything numeric is generic over [`Real`] (f32 or f64); the `*64`
//! aliases below fix f64.

pub mod catalog;
pub mod differentiable;
pub mod error;
pub mod linalg;
pub mod numerics;
pub mod roots;
pub mod scalar;
pub mod section;
pub mod spread;
pub mod structure;

pub use error::{QfError, Result};
pub use linalg::{compose, decompose_gl2plus, rotation, triangular, GroupCoords, Mat2, Vec2};
pub use scalar::{Real, Tolerance};
pub use section::{NumericPolicy, PolarParam, QuasifieldLoop, SectionPair};

pub type Vec2f64 = Vec2<f64>;
pub type Mat2f64 = Mat2<f64>;
pub type GroupCoords64 = GroupCoords<f64>;
pub type Section64 = SectionPair<f64>;
pub type Loop64 = QuasifieldLoop<f64>;
pub type Policy64 = NumericPolicy<f64>;
pub type SpreadFamily64 = spread::SpreadFamily<f64>;
pub type Profile64 = differentiable::CompactLoopProfile<f64>;
pub type FamilyInstance64 = catalog::FamilyInstance<f64>;

