//! Numerical verification: integration, sampling falsifiers, decrease
//! checks, the empirical `α` search and disturbance simulation.
//!
//! Everything here samples. A report without witnesses says that no
//! violation was found among the tested points, never that a property holds.

pub mod alpha_star;
pub mod decrease;
pub mod falsify;
pub mod iss;
pub mod ode;
pub mod sampling;

pub use alpha_star::{
    check_batch, estimate_alpha_star, seed_batch, AlphaSearch, AlphaStarReport, BatchOutcome,
    InitialCondition,
};
pub use decrease::{
    attach_certificate, certificate_logs, check_decrease_along, check_decrease_grid,
    check_iss_gated_decrease,
};
pub use falsify::{falsify_assumption1, falsify_assumption2};
pub use iss::{simulate_iss, IssReport};
pub use ode::{integrate, solve, InputSignal, IntegratorStats, OdeOptions, Sampling, Trajectory};
pub use sampling::{halton, sample_points, SampleGrid, SamplePoint, TauSampling};
