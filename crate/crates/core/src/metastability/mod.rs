//! Conductance, drift and minorization certificates, assumption checks and
//! ratio diagnostics.

pub mod assumptions;
pub mod conductance;
pub mod drift;
pub mod minorization;
pub mod partition;
pub mod ratios;

pub use assumptions::{
    check_assumptions_1, check_assumptions_2, conductance_sweep, AssumptionReport, AuditOptions,
    Clause, ClauseRecord, Relation, Verdict,
};
pub use conductance::{conductance_mc, conductance_quadrature, ConductanceValue, Method};
pub use drift::{
    drift_check, drift_violation, expected_lyapunov, DriftCertificate, DriftProblem, DEFAULT_ALPHAS,
};
pub use minorization::{centered_interval, minorization_check, MinorizationCertificate};
pub use partition::{Mode, Partition};
pub use ratios::{metastability_ratios, RatioDiagnostics};
