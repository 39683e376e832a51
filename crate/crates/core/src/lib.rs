//! Local polynomial regression with exact analysis-of-variance
//! decompositions, coefficients of determination, and F-tests for the
//! overall significance of a nonparametric fit.
//!
//! The local decomposition splits the kernel-weighted total sum of squares
//! at each point into explained and residual parts that add up exactly.
//! Integrating those pointwise quantities against the kernel density
//! estimate yields a global ANOVA whose residual and explained parts are
//! quadratic forms in a smoothing matrix, giving well-defined degrees of
//! freedom and an F-test. A varying-coefficient extension covers models
//! with several covariates whose effects change along an index variable.

pub mod data;
pub mod error;
pub mod global_anova;
pub mod inference;
pub mod kernel;
pub mod linalg;
pub mod local_anova;
pub mod lpfit;
pub mod quad;
pub mod rng;
pub mod simulate;
pub mod vcm;

pub use data::{Dataset, FitConfig, GridSpec};
pub use error::{Error, Result};
pub use global_anova::{
    anova_curve, global_anova, hstar, hstar_trace, AnovaCurve, GlobalAnova, HStar, SstConvention,
};
pub use inference::{f_cdf, f_test, AnovaTable, FTestResult, FVariant};
pub use kernel::{kernel_info, Kernel, KernelInfo};
pub use local_anova::{local_anova, local_anova_at, local_r2, LocalAnova};
pub use lpfit::{curve, kde, local_fit, Curve, LocalFit};
pub use rng::{derive_seed, Rng};
pub use simulate::{
    generate, power_study, rsq_study, rsq_suite, Family, Generator, PowerRow, RsqStudy, RsqSuite,
    ScaledFamily, StudyResult,
};
pub use vcm::{vcm_global, vcm_hstar, vcm_hstar_trace, vcm_local_fit, VcmDataset, VcmFit};
