//! Sublinear expectations represented as maxima over finite families of
//! finitely supported laws.

mod asymmetry;
mod checks;
mod functional;
mod law;

pub use asymmetry::{
    demo_independence_asymmetry, point_table_function, AsymmetryOutcome, Direction, SearchSpace, Witness,
};
pub use checks::{
    check_domination, check_identically_distributed, check_independence, DistributionReport,
    DominationReport, IndependenceEntry, IndependenceReport, EXACT_TOL,
};
pub use functional::{distribution, RandomVector, SublinearFunctional, TestFunction};
pub use law::{DiscreteLaw, ScenarioFamily};
