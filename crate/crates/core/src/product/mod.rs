//! The dyadic product construction `Ê^n` of two independent-increment
//! processes, evaluated by backward recursion on lattice value grids.

mod engine;
mod functional;
mod independence;
mod marginal;
mod numerics;
pub mod stencil;

pub use engine::{
    concatenate_blocks, evaluate_en, increment_value_grid, predict_cost, ExpectationReport, Plan,
};
pub use functional::CylinderFunctional;
pub use independence::{
    check_grid_independence, step1_increment_expect, GridIndependenceEntry, GridIndependenceReport,
};
pub use marginal::marginal_en;
pub use numerics::{NestingOrder, NumericsSpec};
