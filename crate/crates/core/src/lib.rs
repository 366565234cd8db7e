//! Numerical cross-checks of `β(C_φ) = exp(−1 / cap[φ(D)])` for composition
//! operators on weighted analytic Hilbert spaces of the unit disk.
//!
//! The left side comes from singular values of truncated operator matrices
//! ([`operator`]); the right side from Green capacities computed in
//! [`capacity`] by closed forms, a boundary equilibrium solver, and a
//! Dirichlet-energy grid. [`harness`] ties the two together.

// `!(x < 1.0)` is used on purpose: it also rejects NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod capacity;
pub mod harness;
pub mod operator;
mod quad;
pub mod series;
pub mod symbols;
pub mod weights;

pub use capacity::{
    cap_dirichlet_grid, cap_euclid_disk, cap_ph_disk, cap_segment, closed_form, discretize,
    green_kernel, solve_equilibrium, CapacityEstimate, CapacityMethod, CompactSetSpec,
};
pub use harness::{
    emit_report, parse_config, run_suite, run_verification, ExperimentConfig, ReportFormat,
    VerificationReport,
};
pub use operator::{
    approximation_numbers, assemble_matrix, beta_for_symbol, cd_beta, clifford_dabkowski,
    estimate_beta, truncation_tail_bound, BetaEstimate, CompositionMatrix, SingularSpectrum,
};
pub use series::{series_pow, PowerSeries};
pub use symbols::{image_disk, pseudo_hyperbolic, space_norm, sup_norm, Primitive, Symbol};
pub use weights::{check_siz_bounds, coef_weights, CoefWeights, WeightSpec};
