//! # metastable-core
//!
//! Random-walk Metropolis on the two-mode Gaussian mixture
//! `pi_sigma = N(-1, sigma^2)/2 + N(1, sigma^2)/2`, and the tools to study
//! how slowly it moves between the modes as `sigma` shrinks:
//!
//! - [`target`]: log-space densities, exact interval masses and exact sampling.
//! - [`kernel`]: the Metropolis kernel, its restriction to a set, paths,
//!   hitting times and trace chains.
//! - [`discretize`]: a reversible grid approximation of a kernel, with
//!   spectral gap and threshold conductance.
//! - [`metastability`]: conductance by quadrature and Monte Carlo, drift and
//!   minorization certificates, and the assumption checks.
//!
//! ## Example
//!
//! ```
//! use metastable_core::{conductance_quadrature, IntervalUnion, RwmKernel};
//!
//! let kernel = RwmKernel::mixture(0.5).unwrap();
//! let phi = conductance_quadrature(&kernel, &IntervalUnion::below(0.0), 1e-9).unwrap();
//! assert!((phi.phi - 0.0529).abs() < 1e-3);
//! ```
//!
//! Random numbers come from counter-addressed ChaCha streams
//! ([`rng::StreamId`]), so Monte-Carlo results do not depend on the number of
//! worker threads.

pub mod discretize;
pub mod error;
pub mod estimate;
pub mod interval;
pub mod kernel;
pub mod metastability;
pub mod quadrature;
pub mod rng;
pub mod special;
pub mod target;

pub use discretize::{
    build_grid_kernel, cheeger_check, spectral_gap, spectral_gap_with_tolerance,
    threshold_conductance, CheegerVerdict, DiscreteKernel, Grid, GridOptions, SpectrumResult,
    ThresholdCut, EIGEN_TOLERANCE,
};
pub use error::{Error, Result};
pub use estimate::Estimate;
pub use interval::{Interval, IntervalUnion};
pub use kernel::{
    exit_distribution, hitting_time, replicate, simulate, trace_chain, ExitTally, HittingResult,
    MarkovKernel, RestrictedKernel, RwmKernel, State, Trajectory,
};
pub use metastability::{
    check_assumptions_1, check_assumptions_2, conductance_mc, conductance_quadrature, drift_check,
    metastability_ratios, minorization_check, AssumptionReport, AuditOptions, ConductanceValue,
    DriftCertificate, Method, MinorizationCertificate, Partition, RatioDiagnostics, Verdict,
};
pub use quadrature::{Integral, Integrator};
pub use rng::{RandomStream, StreamId};
pub use target::{GaussianMixture, Target};
