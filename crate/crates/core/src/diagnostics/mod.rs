//! Fourth-moment diagnostics for sequences of multiple integrals:
//! moment identities, the carré du champ, trend verdicts, multivariate
//! covariances, Monte Carlo normality and report rendering.

pub mod families;
pub mod moments;
pub mod multivariate;
pub mod normality;
pub mod render;
pub mod sequence;

pub use families::{embed_disjoint, family_by_name, KernelFamily};
pub use moments::{
    contraction_norms, fourth_moment, gamma, gamma_single, h_norm_sequence, second_moment,
    var_gamma, var_gamma_isometry, FourthMomentParts,
};
pub use multivariate::{
    covariance, diagnose_multivariate, MultivariateDiagnostics, MultivariateReport,
};
pub use normality::{ks_distance_normal, mc_normality};
pub use sequence::{
    diagnose_kernel, diagnose_sequence, Condition, DiagnoseOptions, DiagnosticsReport,
    SequenceDiagnostics, Verdict,
};
