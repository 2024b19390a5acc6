//! Spatial polynomial vector fields with normally hyperbolic invariant tori.
//!
//! - [`polyalg`]: exact sparse polynomials over the rationals.
//! - [`vfields`]: planar and spatial fields, the lift, the guiding field.
//! - [`odeint`]: Dormand-Prince integration, events, variational equations.
//! - [`cycles`]: limit cycles by Newton on a return map, Floquet multipliers.
//! - [`tori`]: invariant curves of section maps and their normal rates.
//! - [`doubling`]: the squaring pullback, octants, degree and count tables.

// `!(x > 0.0)` is deliberate throughout: NaN has to fail those checks.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod cycles;
pub mod doubling;
pub mod odeint;
pub mod polyalg;
pub mod tori;
pub mod vfields;

#[cfg(doctest)]
mod book {
    #[doc = include_str!("../../../book/src/introduction.md")]
    mod introduction {}
    #[doc = include_str!("../../../book/src/polynomials.md")]
    mod polynomials {}
    #[doc = include_str!("../../../book/src/lifting.md")]
    mod lifting {}
    #[doc = include_str!("../../../book/src/integration.md")]
    mod integration {}
    #[doc = include_str!("../../../book/src/cycles.md")]
    mod cycles {}
    #[doc = include_str!("../../../book/src/tori.md")]
    mod tori {}
    #[doc = include_str!("../../../book/src/doubling.md")]
    mod doubling {}
    #[doc = include_str!("../../../book/src/cli.md")]
    mod cli {}
}
