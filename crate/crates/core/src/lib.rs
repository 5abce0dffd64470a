//! Chern-Simons machinery on flat tori.
//!
//! Fields are analytic expressions evaluated as exact 2-jets, so every
//! exterior derivative is exact and local identities can be checked
//! pointwise to rounding error. Integrals use the rectangle rule on
//! uniform periodic grids with compensated summation in a fixed order.

pub mod error;
pub mod field;
pub mod flat;
pub mod forms;
pub mod gauge;
pub mod group_field;
pub mod identity;
pub mod jet;
pub mod lie;
pub mod quad;
pub mod random;
pub mod scenario;
pub mod sum;

pub use error::{Error, Result};

#[cfg(doctest)]
mod guide {
    #[doc = include_str!("../../../book/src/overview.md")]
    struct Overview;
    #[doc = include_str!("../../../book/src/lie.md")]
    struct Lie;
    #[doc = include_str!("../../../book/src/forms.md")]
    struct Forms;
    #[doc = include_str!("../../../book/src/degree.md")]
    struct Degree;
    #[doc = include_str!("../../../book/src/chern_simons.md")]
    struct ChernSimons;
    #[doc = include_str!("../../../book/src/flat.md")]
    struct Flat;
    #[doc = include_str!("../../../book/src/scenarios.md")]
    struct Scenarios;
}
