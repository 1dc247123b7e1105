//! Numerical laboratory for Riesz potentials, maximal and sharp functions,
//! elliptic and parabolic Morrey norms, and heat-kernel trace operators on
//! uniform grids, together with a harness that estimates the constants of
//! the associated inequalities empirically.

pub mod error;
pub mod fft;
pub mod grid;
pub mod heat;
pub mod morrey;
pub mod profiles;
pub mod singular;
pub mod harness;
pub mod suite;

pub use error::{Error, Result};
pub use grid::{
    ball_average_norm, gradient, hessian, lp_norm, time_derivative, CapMode, GridFunction, GridSpec,
    RadiusSet, Region, SingularNode, SpaceTimeFunction, SpaceTimeGridSpec,
};

pub use harness::{CaseResult, Exclusion, Provenance, SweepResult, VerificationReport, INEQUALITY_IDS};
pub use suite::{parse_config, run_suite, SuiteConfig};
