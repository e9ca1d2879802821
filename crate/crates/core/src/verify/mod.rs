//! Per-instance certificates and empirical constant estimates.

mod certify;
mod estimate;
mod instance;
mod report;

pub use certify::{certify, certify_random, random_inputs, run_suite, run_suite_with};
pub use estimate::{
    consistency_check, corpus_digest, estimate_constant, standard_corpus, ConsistencyRow, ConstantEstimate,
    EstimateArgs, EstimateKind,
};
pub use instance::{CertInputs, InstanceGenerator};
pub use report::{CertificateReport, Check, CheckStatus, TheoremId, CHECK_TOL};
