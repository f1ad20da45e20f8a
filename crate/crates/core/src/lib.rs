//! Exact floating-point building blocks and lazily evaluated expansion
//! arithmetic.
//!
//! The crate is organised bottom-up:
//!
//! - [`fmodel`]: a bounded float model for any radix and precision, with exact
//!   rounding in four modes.
//! - [`float`]: the [`FloatArith`] backend trait, implemented by the model and
//!   by hardware `f64`.
//! - [`eft`]: error-free transformations (TwoSum, Fast2Sum, TwoProduct).
//! - [`expansion`]: expansions, pseudo-expansions and renormalization.
//! - [`toolset`]: stream building blocks (merge queue, three-input summation,
//!   product generator).
//! - [`arith`]: streaming addition, multiplication and division.
//! - [`oracle`]: exact reference computations and exhaustive theorem sweeps.
//! - [`eval`]: expression evaluation to a requested accuracy and determinant
//!   sign predicates.

pub mod arith;
pub mod eft;
pub mod error;
pub mod eval;
pub mod expansion;
pub mod float;
pub mod fmodel;
pub mod oracle;
pub mod small;
pub mod text;
pub mod toolset;

pub use error::{Error, Result};
pub use expansion::{Expansion, PseudoExpansion};
pub use float::{Binary64, FloatArith};
pub use fmodel::{BFloat, GenericFormat, RoundingMode};
pub use num_bigint::BigInt;
pub use num_rational::BigRational;
pub use small::{SmallBinary, SmallFloat};
