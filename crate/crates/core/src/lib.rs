// `!(x > 0.0)` also rejects NaN
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod bundled;
pub mod catalog;
pub mod error;
pub mod expr;
pub mod files;
pub mod geometry;
pub mod mc;
pub mod measure;
pub mod model;
pub mod multiparam;
pub mod numat;
pub mod qfi;
pub mod quad;
pub mod sld;

pub use error::{Error, ErrorClass, Result};
pub use model::{DensityMatrix, DerivativeMode, FamilyKind, ParamPoint, StateFamily};
