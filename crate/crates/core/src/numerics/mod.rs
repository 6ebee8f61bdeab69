//! Special functions, fading expectations and scalar solvers shared by the
//! higher layers.

mod quadrature;
mod solve;
mod special;

pub use quadrature::{
    expect_over_fading, expect_over_fading_above, expect_over_fading_split, gauss_laguerre, QuadratureScheme,
    QuadratureSpec,
};
pub use solve::{bisect_root, golden_minimize, Bracketed, Minimum};
pub use special::{gaussian_q, gaussian_q_inv, q_inv_derivatives, Probability};
