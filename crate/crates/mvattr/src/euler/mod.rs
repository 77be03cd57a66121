//! Implicit time stepping for the spectral flow, treated as a set-valued map.
//!
//! One step solves `u + k nu A u + k B(u,u) = w + k f` for `u`. For small `k`
//! the solution is unique, but nothing in the scheme guarantees that in
//! general, so [`step_solve`] returns every solution its starts can find and
//! callers choose how to continue. [`calibrate`] measures the absorbing-set
//! geometry that tells us which step sizes are safe and where uniqueness is
//! certain.

mod calibrate;
mod iterate;
mod newton;
mod solve;
mod step;

pub use calibrate::{
    calibrate, CalibratedConstants, CalibrationError, CalibrationOptions, CalibrationReport,
};
pub use iterate::{drive, iterate, iterate_records, BranchPolicy, IterateError, StepRecord, Trajectory};
pub use solve::{
    step_solve, SolutionSet, SolveError, StartFailureKind, StartRecipe, StartReport, StartStatus,
    StepConfig,
};
pub use step::{energy_identity_rel, energy_identity_residual, step_residual};
