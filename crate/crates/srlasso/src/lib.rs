//! Off-grid sparse spike recovery with the super-resolved Lasso.
//!
//! The crate provides measurement operators with analytic derivatives, a group-Lasso
//! solver with duality-gap stopping, the SR-Lasso design and measure recovery, dual
//! certificate diagnostics, the continuous basis pursuit baseline, and the MMD metric.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod cbp;
pub mod certificates;
pub mod error;
pub mod kernel;
mod linalg;
pub mod metrics;
pub mod operators;
pub mod solver;
pub mod sr;
pub mod types;

pub use cbp::{build_cbp_design, cbp_certificate, solve_cbp, CbpCertificate, CbpDesign, CbpSolution, IchReport};
pub use certificates::{
    certificate_diagnostics, column_singular_values, delta_min, eta_coefficients, f0_eval, g_function, ic_check,
    k_functions, minimal_norm_certificate, nullspace_condition_check, solve_derived_sign, thm_g_condition_check,
    CertificateDiagnostics, DualCertificate, EtaCertificate, GFunction, IcReport, Jet, KFunctions, NullspaceReport,
    SrCertificate, ThmGReport,
};
pub use error::{Error, Result};
pub use kernel::{dirichlet_kernel, gaussian_kernel, TranslationInvariantKernel};
pub use metrics::{laplace_kernel, loss_kernel_mmd_identity_check, mmd_distance};
pub use operators::{
    forward, fourier_lowpass_1d, gauss_laplace_3d, gauss_laplace_separable, gaussian_sampling_1d,
    normalized_derivative, uniform_samples, MeasurementOperator,
};
pub use solver::{
    block_soft_threshold, kkt_residual, lambda_max, operator_norm, solve_group_lasso, DesignMatrix, SolveResult,
};
pub use sr::{
    build_sr_design, lasso_design, lasso_measure, recover_measure, solve_lasso_baseline, solve_sr_lasso,
    taylor_remainder_bound, Recovery, SrDesign,
};
pub use types::{group_sign, group_support, mixed_norm, Atom, DiscreteMeasure, Grid, GroupedVector, SolverConfig};
