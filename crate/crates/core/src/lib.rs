//! Numerical certification of strong log-convexity and verification of
//! Hermite–Hadamard type inequality chains for user-defined functions.

pub mod certify;
pub mod chains;
pub mod cli;
pub(crate) mod dd;
pub mod expr;
pub mod harness;
pub mod means;
pub mod quadrature;

pub use certify::{
    check_modulus, convex_defect, estimate_modulus, log_defect, CertificateStatus, CertifyError, ConvexityKind,
    ModulusCertificate, ModulusCheck, Triple,
};
pub use chains::{
    bracket, classical_hh_terms, closed_form_j, dragomir_mond_chain, max_feasible_c, theorem1_chain, theorem2_bound,
    ChainError, ChainKind, ChainOptions, ChainReport, ChainTerm, FeasibleModulus, Theorem2Form, Theorem2Report,
};
pub use expr::{evaluate, parse, EvalError, Expression, ParseError};
pub use harness::{generate_case, sweep, CaseSpec, Family, Outcome, SweepConfig, SweepReport};
pub use means::{arithmetic_mean, geometric_mean, logarithmic_mean, MeanError};
pub use quadrature::{integrate, integrate_expr, mean_integral, QuadError, QuadratureOptions, QuadratureResult};
