//! Tent-transformed rank-1 lattice rules in weighted half-period cosine
//! spaces: worst-case integration errors, component-by-component
//! construction, and approximation on weighted hyperbolic crosses.

// `!(x > 0.0)` is used on purpose so that NaN is rejected too.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod approx;
pub mod cbc;
pub mod error;
pub mod fit;
pub mod hypercross;
pub mod lattice;
pub mod spaces;
pub mod special;
pub mod wce;

/// Schema tag written into every JSON artifact.
pub const SCHEMA: &str = "latcosine/1";

pub use approx::{
    aliasing_bound_equality, approx_error_bound_formula, approximate, empirical_l2_error, exact_l2_error,
    wce_upper_bound, ApproxBound, ApproxResult, CoefficientMap,
};
pub use cbc::{cbc_construct, CbcConfig, CbcResult, Criterion, Engine};
pub use error::{Error, Result};
pub use fit::{loglog_fit, PowerFit};
pub use hypercross::{cardinality_bound, enumerate_h, IndexBound, IndexSet};
pub use lattice::{lattice_points, tent, tented_lattice_points, GeneratingVector, PointKind, PointSet, Shift};
pub use spaces::{kernel_eval, r_weight, KernelKind, KernelSpec, SpaceConfig, SpaceParams, WeightSpec};
pub use wce::{
    cbc_error_bound, wce_cosine_tented, wce_kernel_form, wce_korobov_dual, wce_rms_shifted, RmsReport, WceMethod,
    WceReport,
};
