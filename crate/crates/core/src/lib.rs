//! Hyperuniform point processes in boxes: limiting covariance kernels,
//! exact finite-window identities, samplers and Monte Carlo estimators.

// NaN-rejecting checks are written as negated comparisons on purpose.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod beta;
pub mod error;
pub mod estimators;
pub mod exec;
pub mod geometry;
pub mod limit;
pub mod powersum;
pub mod quadrature;
pub mod rng;
pub mod sampler;
pub mod special;
pub mod stats;
pub mod theory;

pub use beta::{make_model, BetaModel, Displacement, MixtureLaw, ModelDescriptor, Orientation, UserDensity};
pub use estimators::{
    coarse_grained_path, cumulant_report, estimate_cov_curve, estimate_variance_growth, fit_rv_exponent, CovCurve,
    CumulantReport, RVFit, RunOptions, VarianceRow, VarianceTable,
};
pub use error::{Error, Result};
pub use exec::Exec;
pub use geometry::{interiors_overlap, overlap_volume, shared_face_measure};
pub use limit::{fbm_cov, increment_cov, sample_limit_field, LimitKernel};
pub use theory::{
    cov_finite, cov_finite_1d, cov_finite_2d, cov_integrable, cov_rv_1d, cov_rv_2d, finite_ratio, var_finite,
    var_finite_1d, var_finite_2d, var_slope_integrable, RV2DParams,
};
pub use rng::SeedSpec;
pub use sampler::{
    sample_counts, sample_points, BoxLayout, ProcessDescriptor, ProcessKind, ProcessSpec, SampleOptions, Window,
};
