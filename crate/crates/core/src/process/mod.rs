//! Independent-increment process models: G-Brownian kernels, tabulated
//! kernels and their continuity moduli.

mod gspec;
mod model;
mod quadrature;

pub use gspec::{g_function, GSpec};
pub use model::{
    gbm_step_kernel, refinement_battery, refinement_gap, FiniteKernelModel, GBrownianModel, ProcessModel,
    SharedModel, ShiftedModel,
};
pub use quadrature::{gauss_hermite, normal_abs_moment, QuadratureSpec};
