use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use thiserror::Error;

use crate::spectral::{ForcingField, SpectralOps, SpectralVelocity};

use super::newton::{newton_solve, FailureKind, NewtonOptions};
use super::step::{energy_identity_rel, semi_implicit_predictor};

/// Initial guess recipes for the per-step nonlinear solve. Running several and
/// merging the outcomes is how the solver samples the solution set instead of
/// assuming it is a singleton.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum StartRecipe {
    /// Start from the previous velocity itself.
    Previous,
    /// One linearly implicit step: `(I + k nu A)^icit{-1} (w + k f - k B(w,w))`.
    SemiImplicit,
    /// Start from rest.
    Zero,
    /// `w + scale |w| zeta` with `zeta` a unit random field drawn from a
    /// stream keyed by `(perturb_seed, step_index, tag)`.
    Perturb { scale: f64, tag: u32 },
}

impl StartRecipe {
    pub fn default_starts() -> Vec<StartRecipe> {
        vec![
            StartRecipe::Previous,
            StartRecipe::SemiImplicit,
            StartRecipe::Zero,
            StartRecipe::Perturb { scale: 0.05, tag: 0 },
            StartRecipe::Perturb { scale: -0.05, tag: 1 },
            StartRecipe::Perturb { scale: 0.05, tag: 2 },
            StartRecipe::Perturb { scale: -0.05, tag: 3 },
            StartRecipe::Perturb { scale: 0.05, tag: 4 },
        ]
    }
}

#[derive(Clone, Debug)]
pub struct StepConfig {
    pub max_iters: usize,
    /// Residual tolerance relative to `max(|w|, k |f|)`; absolute when both
    /// vanish.
    pub residual_tol: f64,
    pub linear_tol: f64,
    pub max_linear_iters: usize,
    pub shrink: f64,
    /// Branches closer than this in the phase-space norm are merged.
    pub dedup_tol: f64,
    /// Relative energy-identity defect allowed on an accepted solution.
    pub energy_tol: f64,
    pub starts: Vec<StartRecipe>,
    pub perturb_seed: u64,
}

impl Default for StepConfig {
    fn default() -> Self {
        StepConfig {
            max_iters: 60,
            residual_tol: 1e-13,
            linear_tol: 1e-3,
            max_linear_iters: 50,
            shrink: 0.5,
            dedup_tol: 1e-8,
            energy_tol: 1e-9,
            starts: StartRecipe::default_starts(),
            perturb_seed: 0x5eed,
        }
    }
}

#[derive(Clone, Copy, Debug)]
pub enum StartStatus {
    /// Converged and merged into `SolutionSet::branches[branch]`.
    Converged { branch: usize, residual: f64, iters: usize },
    Failed { kind: StartFailureKind, residual: f64, iters: usize },
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum StartFailureKind {
    MaxIters,
    LineSearchStalled,
    NonFinite,
}

impl From<FailureKind> for StartFailureKind {
    fn from(k: FailureKind) -> Self {
        match k {
            FailureKind::MaxIters => StartFailureKind::MaxIters,
            FailureKind::LineSearchStalled => StartFailureKind::LineSearchStalled,
            FailureKind::NonFinite => StartFailureKind::NonFinite,
        }
    }
}

#[derive(Clone, Copy, Debug)]
pub struct StartReport {
    pub recipe: StartRecipe,
    pub status: StartStatus,
}

/// All step solutions found from the configured starts, deduplicated in start
/// order. `branches` is never empty on success and `reports` records what each
/// start did, so a caller can audit multiplicity claims.
#[derive(Clone, Debug)]
pub struct SolutionSet {
    pub branches: Vec<SpectralVelocity>,
    pub reports: Vec<StartReport>,
}

impl SolutionSet {
    pub fn is_singleton(&self) -> bool {
        self.branches.len() == 1
    }

    /// Largest pairwise phase-space distance between branches; zero for a
    /// singleton.
    pub fn spread(&self) -> f64 {
        let mut worst = 0.0f64;
        for i in 0..self.branches.len() {
            for j in (i + 1)..self.branches.len() {
                worst = worst.max(self.branches[i].minus(&self.branches[j]).h_norm());
            }
        }
        worst
    }
}

#[derive(Debug, Error)]
pub enum SolveError {
    #[error("no start converged at step {step_index} (best residual {best_residual:.3e})")]
    AllStartsFailed { step_index: u64, best_residual: f64 },
    #[error(
        "energy identity defect {rel:.3e} exceeds {tol:.3e} on an accepted solution at step {step_index}"
    )]
    EnergyIdentity { step_index: u64, rel: f64, tol: f64 },
}

fn mix_seed(base: u64, step_index: u64, tag: u32) -> u64 {
    // SplitMix64 finalizer over the xored inputs; cheap and well mixed.
    let mut z = base
        ^ step_index.wrapping_mul(0x9e37_79b9_7f4a_7c15)
        ^ u64::from(tag).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

fn initial_guess(
    ops: &mut SpectralOps,
    recipe: StartRecipe,
    k: f64,
    nu: f64,
    w: &SpectralVelocity,
    f: &ForcingField,
    step_index: u64,
    perturb_seed: u64,
) -> SpectralVelocity {
    match recipe {
        StartRecipe::Previous => w.clone(),
        StartRecipe::SemiImplicit => semi_implicit_predictor(ops, k, nu, w, f),
        StartRecipe::Zero => SpectralVelocity::zero(w.grid()),
        StartRecipe::Perturb { scale, tag } => {
            let mut rng = ChaCha8Rng::seed_from_u64(mix_seed(perturb_seed, step_index, tag));
            let mut zeta = SpectralVelocity::random(w.grid(), &mut rng, 1.0);
            let zn = zeta.h_norm();
            if zn > 0.0 {
                zeta.scale(1.0 / zn);
            }
            let mut u0 = w.clone();
            u0.axpy(scale * w.h_norm(), &zeta);
            u0
        }
    }
}

/// Solves one implicit step `u + k nu A u + k B(u,u) = w + k f` from every
/// configured start and returns the set of distinct solutions.
///
/// Every accepted solution is checked against the discrete energy identity;
/// a violation is an error, not a warning, because downstream estimates
/// assume it holds on each branch.
pub fn step_solve(
    ops: &mut SpectralOps,
    k: f64,
    nu: f64,
    w: &SpectralVelocity,
    f: &ForcingField,
    step_index: u64,
    cfg: &StepConfig,
) -> Result<SolutionSet, SolveError> {
    let scale = w.h_norm().max(k * f.h_norm());
    let tol_abs = if scale > 0.0 { cfg.residual_tol * scale } else { cfg.residual_tol };
    let opts = NewtonOptions {
        max_iters: cfg.max_iters,
        tol_abs,
        linear_tol: cfg.linear_tol,
        max_linear_iters: cfg.max_linear_iters,
        shrink: cfg.shrink,
    };

    let mut branches: Vec<SpectralVelocity> = Vec::new();
    let mut reports: Vec<StartReport> = Vec::with_capacity(cfg.starts.len());
    let mut best_residual = f64::INFINITY;

    for &recipe in &cfg.starts {
        let u0 = initial_guess(ops, recipe, k, nu, w, f, step_index, cfg.perturb_seed);
        match newton_solve(ops, k, nu, w, f, u0, &opts) {
            Ok(out) => {
                let rel = energy_identity_rel(k, nu, &out.u, w, f);
                if rel > cfg.energy_tol {
                    return Err(SolveError::EnergyIdentity {
                        step_index,
                        rel,
                        tol: cfg.energy_tol,
                    });
                }
                let branch = match branches
                    .iter()
                    .position(|b| b.minus(&out.u).h_norm() <= cfg.dedup_tol)
                {
                    Some(i) => i,
                    None => {
                        branches.push(out.u);
                        branches.len() - 1
                    }
                };
                reports.push(StartReport {
                    recipe,
                    status: StartStatus::Converged {
                        branch,
                        residual: out.residual,
                        iters: out.iters,
                    },
                });
            }
            Err(fail) => {
                best_residual = best_residual.min(fail.residual);
                reports.push(StartReport {
                    recipe,
                    status: StartStatus::Failed {
                        kind: fail.kind.into(),
                        residual: fail.residual,
                        iters: fail.iters,
                    },
                });
            }
        }
    }

    if branches.is_empty() {
        return Err(SolveError::AllStartsFailed { step_index, best_residual });
    }
    Ok(SolutionSet { branches, reports })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::spectral::{ForcingMode, Grid};
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn shear(g: Grid, amp: f64) -> SpectralVelocity {
        SpectralVelocity::forcing(g, &[ForcingMode { mode: [0, 1], amplitude: [amp, 0.0] }])
            .unwrap()
    }

    #[test]
    fn all_default_starts_agree_on_mild_data() {
        let g = Grid::new(16).unwrap();
        let mut ops = SpectralOps::new(g);
        let w = shear(g, 0.5);
        let f = SpectralVelocity::zero(g);
        let cfg = StepConfig::default();
        let set = step_solve(&mut ops, 0.1, 1.0, &w, &f, 7, &cfg).unwrap();
        assert!(set.is_singleton(), "expected a singleton, got {} branches", set.branches.len());
        assert_eq!(set.reports.len(), cfg.starts.len());
        for r in &set.reports {
            assert!(matches!(r.status, StartStatus::Converged { branch: 0, .. }));
        }
        let exact = shear(g, 0.5 / 1.1);
        assert!(set.branches[0].minus(&exact).h_norm() <= 1e-12);
    }

    #[test]
    fn perturb_guess_is_reproducible_and_tag_dependent() {
        let g = Grid::new(16).unwrap();
        let mut ops = SpectralOps::new(g);
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let w = SpectralVelocity::random(g, &mut rng, 2.0);
        let f = SpectralVelocity::zero(g);
        let a = initial_guess(
            &mut ops,
            StartRecipe::Perturb { scale: 0.05, tag: 2 },
            0.1,
            1.0,
            &w,
            &f,
            11,
            0x5eed,
        );
        let b = initial_guess(
            &mut ops,
            StartRecipe::Perturb { scale: 0.05, tag: 2 },
            0.1,
            1.0,
            &w,
            &f,
            11,
            0x5eed,
        );
        let c = initial_guess(
            &mut ops,
            StartRecipe::Perturb { scale: 0.05, tag: 3 },
            0.1,
            1.0,
            &w,
            &f,
            11,
            0x5eed,
        );
        assert_eq!(a.minus(&b).h_norm(), 0.0);
        assert!(a.minus(&c).h_norm() > 0.0);
        // The perturbation has the advertised relative size.
        let rel = a.minus(&w).h_norm() / w.h_norm();
        assert!((rel - 0.05).abs() <= 1e-12);
    }

    #[test]
    fn zero_data_yields_zero_solution() {
        let g = Grid::new(8).unwrap();
        let mut ops = SpectralOps::new(g);
        let w = SpectralVelocity::zero(g);
        let f = SpectralVelocity::zero(g);
        let set = step_solve(&mut ops, 0.1, 1.0, &w, &f, 0, &StepConfig::default()).unwrap();
        assert!(set.is_singleton());
        assert_eq!(set.branches[0].h_norm(), 0.0);
    }

    #[test]
    fn spread_reports_pairwise_distance() {
        let g = Grid::new(8).unwrap();
        let set = SolutionSet {
            branches: vec![shear(g, 1.0), shear(g, 1.5)],
            reports: vec![],
        };
        assert!((set.spread() - 0.5).abs() <= 1e-15);
    }
}
