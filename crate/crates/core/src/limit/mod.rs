//! Behaviour of `Ê^n` as the level grows: convergence scans, tightness,
//! non-dyadic times and order effects.

mod extension;
mod order;
mod scan;
mod tightness;

pub use extension::{
    compare_extensions, dyadic_approximants, extend_to_time, extension_bound, Extension, ExtensionComparison,
};
pub use order::{moment_bound_check, order_sensitivity, MomentBound, OrderSensitivity};
pub use scan::{
    convergence_scan, extrapolate, numerics_fingerprint, ConvergenceScan, Extrapolation, ScanCriteria,
};
pub use tightness::{cutoff, tightness_bound, TightnessCertificate};
