//! Exact and Monte Carlo numerics for noise sensitivity on finite product spaces.
//!
//! The crate covers chaos decompositions, influences and noise covariances of
//! tabulated functions, the hypercontractivity constants behind covariance
//! bounds, the Modified Tribes family in closed form, and a transfer-matrix
//! simulator for the critical 2D directed polymer.
//!
//! ```
//! use std::sync::Arc;
//! use nsens::prob::{FiniteLaw, ProductSpace, TabulatedFunction};
//!
//! let space = Arc::new(ProductSpace::iid(FiniteLaw::rademacher(), 3).unwrap());
//! let maj = TabulatedFunction::from_fn(space, |x| (x[0] + x[1] + x[2]).signum()).unwrap();
//! let spec = nsens::chaos::variance_spectrum(&maj).unwrap();
//! assert!((spec.norms_sq[1] - 0.75).abs() < 1e-12);
//! ```

pub mod binom;
pub mod bounds;
pub mod chaos;
pub mod counterexample;
pub mod error;
pub mod influence;
pub mod noise;
pub mod polymer;
pub mod prob;
pub mod rng;
pub mod tribes;

pub use error::{Error, ErrorClass, Result};

#[cfg(doctest)]
pub mod book {
    #[doc = include_str!("../../../book/src/intro.md")]
    pub mod intro {}
    #[doc = include_str!("../../../book/src/spaces.md")]
    pub mod spaces {}
    #[doc = include_str!("../../../book/src/chaos.md")]
    pub mod chaos {}
    #[doc = include_str!("../../../book/src/influence.md")]
    pub mod influence {}
    #[doc = include_str!("../../../book/src/noise.md")]
    pub mod noise {}
    #[doc = include_str!("../../../book/src/bounds.md")]
    pub mod bounds {}
    #[doc = include_str!("../../../book/src/tribes.md")]
    pub mod tribes {}
    #[doc = include_str!("../../../book/src/polymer.md")]
    pub mod polymer {}
    #[doc = include_str!("../../../book/src/cli.md")]
    pub mod cli {}
}
