use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use thiserror::Error;

use crate::spectral::{ForcingField, SpectralOps, SpectralVelocity};

use super::solve::{step_solve, SolutionSet, SolveError, StepConfig};
use super::step::energy_identity_rel;

/// How a trajectory picks its continuation when a step has several solutions.
///
/// The choice only matters when the solution set is not a singleton; in the
/// uniqueness regime every policy produces the same orbit.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum BranchPolicy {
    /// Follow the branch closest to the previous state.
    Nearest,
    /// Follow the branch with the largest phase-space norm.
    MaxEnergy,
    /// Pick uniformly at random from a stream keyed by `(seed, step)`.
    Seeded(u64),
}

/// Per-step summary of an orbit, sized for CSV output rather than replay.
#[derive(Clone, Copy, Debug)]
pub struct StepRecord {
    pub step: u64,
    pub time: f64,
    pub h_norm: f64,
    pub v_norm: f64,
    /// Number of distinct solutions the step solve produced.
    pub branches: usize,
    /// Relative energy-identity defect of the branch that was followed.
    pub energy_residual: f64,
}

#[derive(Clone, Debug)]
pub struct Trajectory {
    pub records: Vec<StepRecord>,
    pub last: SpectralVelocity,
}

#[derive(Debug, Error)]
pub enum IterateError {
    #[error("step {step}: {source}")]
    Step {
        step: u64,
        #[source]
        source: SolveError,
    },
}

fn select_branch(policy: BranchPolicy, w: &SpectralVelocity, set: &SolutionSet, step: u64) -> usize {
    debug_assert!(!set.branches.is_empty());
    match policy {
        BranchPolicy::Nearest => {
            let mut best = 0;
            let mut best_d = f64::INFINITY;
            for (i, b) in set.branches.iter().enumerate() {
                let d = b.minus(w).h_norm();
                if d < best_d {
                    best_d = d;
                    best = i;
                }
            }
            best
        }
        BranchPolicy::MaxEnergy => {
            let mut best = 0;
            let mut best_n = f64::NEG_INFINITY;
            for (i, b) in set.branches.iter().enumerate() {
                let n = b.h_norm();
                if n > best_n {
                    best_n = n;
                    best = i;
                }
            }
            best
        }
        BranchPolicy::Seeded(seed) => {
            let mut rng = ChaCha8Rng::seed_from_u64(seed ^ step.wrapping_mul(0x9e37_79b9_7f4a_7c15));
            rng.random_range(0..set.branches.len())
        }
    }
}

/// Runs `n_steps` implicit steps from `u0`, invoking `visit` after each one
/// with the step index (1-based), time, the followed state, and the full
/// solution set. Returns the final state.
pub fn drive<V>(
    ops: &mut SpectralOps,
    k: f64,
    nu: f64,
    f: &ForcingField,
    u0: &SpectralVelocity,
    n_steps: u64,
    cfg: &StepConfig,
    policy: BranchPolicy,
    mut visit: V,
) -> Result<SpectralVelocity, IterateError>
where
    V: FnMut(u64, f64, &SpectralVelocity, &SolutionSet),
{
    let mut u = u0.clone();
    for step in 1..=n_steps {
        let set = step_solve(ops, k, nu, &u, f, step, cfg)
            .map_err(|source| IterateError::Step { step, source })?;
        let chosen = select_branch(policy, &u, &set, step);
        let next = set.branches[chosen].clone();
        let time = step as f64 * k;
        visit(step, time, &next, &set);
        u = next;
    }
    Ok(u)
}

/// `drive` without a visitor; returns only the final state.
pub fn iterate(
    ops: &mut SpectralOps,
    k: f64,
    nu: f64,
    f: &ForcingField,
    u0: &SpectralVelocity,
    n_steps: u64,
    cfg: &StepConfig,
    policy: BranchPolicy,
) -> Result<SpectralVelocity, IterateError> {
    drive(ops, k, nu, f, u0, n_steps, cfg, policy, |_, _, _, _| {})
}

/// `drive` that also collects one `StepRecord` per step.
pub fn iterate_records(
    ops: &mut SpectralOps,
    k: f64,
    nu: f64,
    f: &ForcingField,
    u0: &SpectralVelocity,
    n_steps: u64,
    cfg: &StepConfig,
    policy: BranchPolicy,
) -> Result<Trajectory, IterateError> {
    let mut records = Vec::with_capacity(n_steps as usize);
    let mut prev = u0.clone();
    let last = drive(ops, k, nu, f, u0, n_steps, cfg, policy, |step, time, u, set| {
        records.push(StepRecord {
            step,
            time,
            h_norm: u.h_norm(),
            v_norm: u.v_norm(),
            branches: set.branches.len(),
            energy_residual: energy_identity_rel(k, nu, u, &prev, f),
        });
        prev = u.clone();
    })?;
    Ok(Trajectory { records, last })
}
