use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::spectral::{ForcingField, ForcingMode, SpectralOps, SpectralVelocity, LAMBDA_1};

use super::iterate::{drive, BranchPolicy, IterateError};
use super::solve::{StartRecipe, StepConfig};

/// Measured absorbing-set geometry for one `(grid, nu, forcing)` triple.
///
/// Everything downstream (admissible step sizes, sampling windows, distance
/// budgets) is phrased in terms of these numbers, so they are serialized and
/// reloaded rather than re-measured per run.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct CalibratedConstants {
    pub n: usize,
    pub nu: f64,
    pub forcing: Vec<ForcingMode>,
    pub f_h_norm: f64,
    pub f_dual_norm: f64,
    /// Radius of the phase-space absorbing ball (tail sup times a margin).
    pub r0: f64,
    /// With zero forcing the absorbing radius shrinks with the tail window;
    /// the stored `r0` is then just the margin at the measured horizon.
    pub r0_arbitrarily_small: bool,
    /// Enstrophy level reached within one time unit from the absorbing ball.
    pub r_star: f64,
    /// Enstrophy growth table: orbits from `v_norm <= q_radii[i]` stay below
    /// `q_values[i]`. Values are cummax-ed so the table is monotone.
    pub q_radii: Vec<f64>,
    pub q_values: Vec<f64>,
    /// Entry-time table: from `h_norm <= t0_radii[i]`, orbits are inside the
    /// absorbing ball for all times past `t0_values[i]`.
    pub t0_radii: Vec<f64>,
    pub t0_values: Vec<f64>,
    pub kappa0: f64,
    pub c_kappa: f64,
    /// Admissible step bound at enstrophy level `r_star`.
    pub kappa1: f64,
    /// Uniform enstrophy bound past the entering time.
    pub r1: f64,
    /// Step bound under which the per-step solution set is a singleton on the
    /// absorbing region.
    pub kappa2: f64,
    /// Increment-sum constant: summed squared step increments over a window
    /// of `m` steps stay below `c_increment * (k * m + 1)`.
    pub c_increment: f64,
}

fn table_lookup(radii: &[f64], values: &[f64], r: f64) -> f64 {
    debug_assert_eq!(radii.len(), values.len());
    debug_assert!(!radii.is_empty());
    if r <= radii[0] {
        return values[0];
    }
    for i in 1..radii.len() {
        if r <= radii[i] {
            let t = (r - radii[i - 1]) / (radii[i] - radii[i - 1]);
            return values[i - 1] + t * (values[i] - values[i - 1]);
        }
    }
    let last = radii.len() - 1;
    // Proportional growth beyond the measured range keeps q_of(r) >= r.
    values[last] * (r / radii[last])
}

impl CalibratedConstants {
    /// Enstrophy bound for orbits started at enstrophy level `r`.
    pub fn q_of(&self, r: f64) -> f64 {
        table_lookup(&self.q_radii, &self.q_values, r).max(r)
    }

    /// Time after which orbits from the `r`-ball sit inside the absorbing
    /// ball permanently. Logarithmic growth is used beyond the table.
    pub fn t0_of(&self, r: f64) -> f64 {
        let last = self.t0_radii.len() - 1;
        if r <= self.t0_radii[last] {
            return table_lookup(&self.t0_radii, &self.t0_values, r);
        }
        // Exponential decay toward the ball means entry times grow like
        // log r; the factor 2 pads the asymptotic rate 2 / (nu lambda_1).
        self.t0_values[last]
            + 2.0 * (2.0 / (self.nu * LAMBDA_1)) * (r / self.t0_radii[last]).ln()
    }

    /// Admissible step bound at enstrophy level `r`.
    pub fn kappa_star(&self, r: f64) -> f64 {
        self.kappa0.min(1.0 / self.q_of(r)).min(self.c_kappa)
    }

    /// Step bound that makes the implicit step a contraction, hence single
    /// valued, for data at enstrophy level `r`.
    pub fn uniqueness_threshold(&self, r: f64) -> f64 {
        let q = self.q_of(r);
        self.kappa_star(r).min(self.kappa_star(q)).min(self.nu / (2.0 * q * q))
    }

    /// Time to reach the uniform enstrophy ball from the `r`-ball: entry into
    /// the absorbing ball plus one smoothing window.
    pub fn t1_of(&self, r: f64) -> f64 {
        self.t0_of(r) + 1.0 + 2.0 * self.kappa1
    }

    pub fn validate(&self) -> Result<(), CalibrationError> {
        let fail = |msg: String| Err(CalibrationError::Invalid(msg));
        if self.q_radii.len() != self.q_values.len() || self.q_radii.is_empty() {
            return fail("q table is empty or ragged".into());
        }
        if self.t0_radii.len() != self.t0_values.len() || self.t0_radii.is_empty() {
            return fail("t0 table is empty or ragged".into());
        }
        for w in self.q_radii.windows(2) {
            if w[1] <= w[0] {
                return fail("q radii are not increasing".into());
            }
        }
        for w in self.t0_radii.windows(2) {
            if w[1] <= w[0] {
                return fail("t0 radii are not increasing".into());
            }
        }
        for w in self.q_values.windows(2) {
            if w[1] < w[0] {
                return fail("q values are not monotone".into());
            }
        }
        for w in self.t0_values.windows(2) {
            if w[1] < w[0] {
                return fail("t0 values are not monotone".into());
            }
        }
        for (r, q) in self.q_radii.iter().zip(&self.q_values) {
            if !(q.is_finite() && q >= r) {
                return fail(format!("q value {q} below radius {r}"));
            }
        }
        let scalars = [
            ("nu", self.nu),
            ("r0", self.r0),
            ("r_star", self.r_star),
            ("kappa1", self.kappa1),
            ("r1", self.r1),
            ("kappa2", self.kappa2),
            ("c_increment", self.c_increment),
        ];
        for (name, v) in scalars {
            if !(v.is_finite() && v > 0.0) {
                return fail(format!("{name} = {v} is not a positive finite number"));
            }
        }
        if self.r1 < self.r_star {
            return fail("r1 below r_star contradicts q_of >= id".into());
        }
        if self.kappa2 > self.kappa1 {
            return fail("kappa2 exceeds kappa1".into());
        }
        Ok(())
    }
}

#[derive(Clone, Debug)]
pub struct CalibrationOptions {
    /// Phase-space radii for the energy-decay ensemble and the entry table.
    pub h_radii: Vec<f64>,
    /// Step sizes the ensembles probe.
    pub k_probe: Vec<f64>,
    /// Random initial fields per (radius, k) pair.
    pub seeds: u64,
    /// Ensemble integration horizon in time units.
    pub horizon: f64,
    /// Trailing fraction of the horizon treated as the statistical tail.
    pub tail: f64,
    /// Multiplier applied to measured sups before they become bounds.
    pub safety: f64,
    /// Margin on the measured tail sup when fixing the absorbing radius.
    pub r0_margin: f64,
    /// A priori cap on admissible steps.
    pub kappa0: f64,
    /// Cap tied to the constants in the trilinear estimates.
    pub c_kappa: f64,
    pub verify_trajectories: u64,
    pub verify_steps: u64,
    pub verify_k: f64,
    pub seed: u64,
    pub step: StepConfig,
}

impl Default for CalibrationOptions {
    fn default() -> Self {
        CalibrationOptions {
            h_radii: vec![0.25, 0.5, 1.0, 2.0],
            k_probe: vec![0.2, 0.1, 0.05],
            seeds: 2,
            horizon: 24.0,
            tail: 0.25,
            safety: 2.0,
            r0_margin: 1.05,
            kappa0: 0.5,
            c_kappa: 1.0,
            verify_trajectories: 20,
            verify_steps: 4000,
            verify_k: 0.05,
            seed: 0xca1b,
            step: StepConfig {
                starts: vec![StartRecipe::Previous, StartRecipe::SemiImplicit],
                ..StepConfig::default()
            },
        }
    }
}

impl CalibrationOptions {
    fn validate(&self) -> Result<(), CalibrationError> {
        let bad = |msg: &str| Err(CalibrationError::BadOptions(msg.into()));
        if self.h_radii.is_empty() || self.h_radii.windows(2).any(|w| w[1] <= w[0]) {
            return bad("h_radii must be a nonempty increasing list");
        }
        if self.h_radii[0] <= 0.0 {
            return bad("h_radii must be positive");
        }
        if self.k_probe.is_empty() || self.k_probe.iter().any(|&k| k <= 0.0) {
            return bad("k_probe must be a nonempty list of positive steps");
        }
        if self.seeds == 0 {
            return bad("at least one seed per ensemble cell is required");
        }
        if !(self.horizon > 0.0 && self.tail > 0.0 && self.tail < 1.0) {
            return bad("horizon must be positive and tail a fraction in (0, 1)");
        }
        if self.safety < 1.0 || self.r0_margin < 1.0 {
            return bad("safety and r0_margin must be at least 1");
        }
        if !(self.kappa0 > 0.0 && self.c_kappa > 0.0 && self.verify_k > 0.0) {
            return bad("kappa0, c_kappa and verify_k must be positive");
        }
        Ok(())
    }
}

/// Constants plus a human-readable line per calibration phase.
#[derive(Clone, Debug)]
pub struct CalibrationReport {
    pub constants: CalibratedConstants,
    pub phases: Vec<String>,
}

#[derive(Debug, Error)]
pub enum CalibrationError {
    #[error("bad calibration options: {0}")]
    BadOptions(String),
    #[error(
        "{kind} energy bound failed (radius {radius}, k {k}, seed {seed}, step {step}): \
         {lhs:.6e} > {rhs:.6e}"
    )]
    EnergyBound {
        kind: &'static str,
        radius: f64,
        k: f64,
        seed: u64,
        step: usize,
        lhs: f64,
        rhs: f64,
    },
    #[error("orbit from radius {radius} (k {k}, seed {seed}) never settled in the absorbing ball")]
    NoEntry { radius: f64, k: f64, seed: u64 },
    #[error("no iterate reached enstrophy level r_star within {budget} steps (k {k}, seed {seed})")]
    SmoothingWindow { k: f64, seed: u64, budget: u64 },
    #[error(
        "entering bound failed on verification trajectory {trajectory} at step {step}: \
         enstrophy {v_norm:.6e} > {r1:.6e}"
    )]
    Entering { trajectory: u64, step: u64, v_norm: f64, r1: f64 },
    #[error(
        "absorption failed on verification trajectory {trajectory} at step {step}: \
         enstrophy {v_norm:.6e} > {r1:.6e}"
    )]
    Absorb { trajectory: u64, step: u64, v_norm: f64, r1: f64 },
    #[error("constants failed validation: {0}")]
    Invalid(String),
    #[error(transparent)]
    Iterate(#[from] IterateError),
}

fn mix(parts: &[u64]) -> u64 {
    let mut z = 0x9e37_79b9_7f4a_7c15u64;
    for &p in parts {
        z ^= p.wrapping_add(0x9e37_79b9_7f4a_7c15).wrapping_add(z << 6) ^ (z >> 2);
        z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
        z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
        z ^= z >> 31;
    }
    z
}

enum Target {
    H(f64),
    V(f64),
}

fn random_at(grid: crate::spectral::Grid, seed: u64, target: Target) -> SpectralVelocity {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut u = SpectralVelocity::random(grid, &mut rng, 2.0);
    let (cur, want) = match target {
        Target::H(r) => (u.h_norm(), r),
        Target::V(r) => (u.v_norm(), r),
    };
    assert!(cur > 0.0, "random field degenerated to zero");
    u.scale(want / cur);
    u
}

struct Trace {
    h: Vec<f64>,
    v: Vec<f64>,
    incr_sq: Vec<f64>,
}

fn run_trace(
    ops: &mut SpectralOps,
    k: f64,
    nu: f64,
    f: &ForcingField,
    u0: &SpectralVelocity,
    n_steps: u64,
    cfg: &StepConfig,
) -> Result<Trace, IterateError> {
    let mut h = Vec::with_capacity(n_steps as usize + 1);
    let mut v = Vec::with_capacity(n_steps as usize + 1);
    let mut incr_sq = Vec::with_capacity(n_steps as usize);
    h.push(u0.h_norm());
    v.push(u0.v_norm());
    let mut prev = u0.clone();
    drive(ops, k, nu, f, u0, n_steps, cfg, BranchPolicy::Nearest, |_, _, u, _| {
        h.push(u.h_norm());
        v.push(u.v_norm());
        let d = u.minus(&prev).h_norm();
        incr_sq.push(d * d);
        prev = u.clone();
    })?;
    Ok(Trace { h, v, incr_sq })
}

/// Measures the absorbing-set constants for `(grid, nu, f)` from scratch.
///
/// Every inequality the written constants rely on is re-checked on the
/// ensembles as it is measured; a violation aborts calibration rather than
/// producing constants that merely look plausible.
pub fn calibrate(
    ops: &mut SpectralOps,
    nu: f64,
    f: &ForcingField,
    forcing_modes: &[ForcingMode],
    opts: &CalibrationOptions,
) -> Result<CalibrationReport, CalibrationError> {
    opts.validate()?;
    let grid = f.grid();
    let mut phases = Vec::new();

    let f_h = f.h_norm();
    let f_dual = f.dual_norm();
    phases.push(format!(
        "phase 1: forcing |f| = {f_h:.6e}, dual norm = {f_dual:.6e}, nu = {nu:.6e}"
    ));

    // Phase 2: energy-decay ensemble in the phase-space norm. The two bounds
    // checked here are exact consequences of the per-step energy identity,
    // so a failure means the solver (not the flow) is broken.
    let mut traces: Vec<(usize, f64, u64, Trace)> = Vec::new();
    for (ri, &radius) in opts.h_radii.iter().enumerate() {
        for &k in &opts.k_probe {
            for s in 0..opts.seeds {
                let u0 = random_at(grid, mix(&[opts.seed, 2, ri as u64, k.to_bits(), s]), Target::H(radius));
                let n_steps = (opts.horizon / k).ceil() as u64;
                let tr = run_trace(ops, k, nu, f, &u0, n_steps, &opts.step)?;
                let rho_sq = f_dual * f_dual / (nu * nu * LAMBDA_1);
                let mut dissip = 0.0;
                for step in 1..tr.h.len() {
                    let decay = (1.0 + k * nu * LAMBDA_1).powi(-(step as i32));
                    let lhs = tr.h[step] * tr.h[step];
                    let rhs = decay * radius * radius + rho_sq;
                    if lhs > rhs + 1e-7 * (1.0 + rhs) {
                        return Err(CalibrationError::EnergyBound {
                            kind: "pointwise",
                            radius,
                            k,
                            seed: s,
                            step,
                            lhs,
                            rhs,
                        });
                    }
                    dissip += k * nu * tr.v[step] * tr.v[step];
                    let tele_lhs = lhs + dissip;
                    let tele_rhs =
                        radius * radius + step as f64 * k * f_dual * f_dual / nu;
                    if tele_lhs > tele_rhs + 1e-7 * (1.0 + tele_rhs) {
                        return Err(CalibrationError::EnergyBound {
                            kind: "telescoped",
                            radius,
                            k,
                            seed: s,
                            step,
                            lhs: tele_lhs,
                            rhs: tele_rhs,
                        });
                    }
                }
                traces.push((ri, k, s, tr));
            }
        }
    }
    let tail_start = opts.horizon * (1.0 - opts.tail);
    let mut tail_sup = 0.0f64;
    for (_, k, _, tr) in &traces {
        for (step, h) in tr.h.iter().enumerate() {
            if step as f64 * k >= tail_start {
                tail_sup = tail_sup.max(*h);
            }
        }
    }
    let r0 = opts.r0_margin * tail_sup;
    let r0_arbitrarily_small = f_dual == 0.0;
    phases.push(format!(
        "phase 2: {} orbits checked, tail sup = {tail_sup:.6e}, r0 = {r0:.6e}",
        traces.len()
    ));

    // Entry-time table: first step index after which the orbit stays inside
    // the absorbing ball. Measured per radius, then monotonized.
    let mut t0_values = vec![0.0f64; opts.h_radii.len()];
    for (ri, k, s, tr) in &traces {
        let mut entry: Option<usize> = None;
        for (step, h) in tr.h.iter().enumerate() {
            if *h <= r0 {
                entry.get_or_insert(step);
            } else {
                entry = None;
            }
        }
        match entry {
            Some(step) => {
                let t = step as f64 * k;
                if t > t0_values[*ri] {
                    t0_values[*ri] = t;
                }
            }
            None => {
                return Err(CalibrationError::NoEntry {
                    radius: opts.h_radii[*ri],
                    k: *k,
                    seed: *s,
                })
            }
        }
    }
    for i in 1..t0_values.len() {
        t0_values[i] = t0_values[i].max(t0_values[i - 1]);
    }
    phases.push(format!("phase 3: entry times {t0_values:?} at radii {:?}", opts.h_radii));

    // Phase 4: smoothing. From just inside the absorbing ball, some iterate
    // must reach enstrophy r_star within floor(1/k) + 1 steps.
    let r_star = (r0 * r0 / nu + f_h * f_h / (nu * nu)).sqrt();
    let mut ell_worst = 0u64;
    for &k in &opts.k_probe {
        let budget = (1.0 / k).floor() as u64 + 1;
        for s in 0..opts.seeds {
            let u0 = random_at(grid, mix(&[opts.seed, 4, k.to_bits(), s]), Target::H(0.999 * r0));
            let tr = run_trace(ops, k, nu, f, &u0, budget, &opts.step)?;
            match (1..tr.v.len()).find(|&j| tr.v[j] <= r_star) {
                Some(j) => ell_worst = ell_worst.max(j as u64),
                None => return Err(CalibrationError::SmoothingWindow { k, seed: s, budget }),
            }
        }
    }
    phases.push(format!(
        "phase 4: r_star = {r_star:.6e}, worst smoothing index = {ell_worst}"
    ));

    // Phase 5: enstrophy growth table. Orbits started at enstrophy level R
    // are tracked over the horizon; the bound is a safety multiple of the
    // measured sup, never below R, and monotone by construction.
    let mut q_radii: Vec<f64> = opts.h_radii.clone();
    if q_radii.iter().all(|&r| (r - r_star).abs() > 1e-12) {
        q_radii.push(r_star);
    }
    q_radii.sort_by(|a, b| a.partial_cmp(b).unwrap());
    let mut q_values = Vec::with_capacity(q_radii.len());
    for (ri, &radius) in q_radii.iter().enumerate() {
        let mut sup = 0.0f64;
        for &k in &opts.k_probe {
            for s in 0..opts.seeds {
                let u0 = random_at(grid, mix(&[opts.seed, 5, ri as u64, k.to_bits(), s]), Target::V(radius));
                let n_steps = (opts.horizon / k).ceil() as u64;
                let tr = run_trace(ops, k, nu, f, &u0, n_steps, &opts.step)?;
                for v in &tr.v {
                    sup = sup.max(*v);
                }
            }
        }
        q_values.push(radius.max(opts.safety * sup));
    }
    for i in 1..q_values.len() {
        q_values[i] = q_values[i].max(q_values[i - 1]);
    }
    phases.push(format!("phase 5: q table {q_values:?} at radii {q_radii:?}"));

    // Phase 6: increment sums. The whole-run sum of squared increments grows
    // at most linearly in elapsed time; double the worst measured slope.
    let mut incr_ratio = 0.0f64;
    for (_, k, _, tr) in &traces {
        let total: f64 = tr.incr_sq.iter().sum();
        incr_ratio = incr_ratio.max(total / (k * tr.incr_sq.len() as f64 + 1.0));
    }
    let c_increment = 2.0 * incr_ratio.max(f64::MIN_POSITIVE);
    phases.push(format!("phase 6: c_increment = {c_increment:.6e}"));

    let constants = {
        let mut c = CalibratedConstants {
            n: grid.n(),
            nu,
            forcing: forcing_modes.to_vec(),
            f_h_norm: f_h,
            f_dual_norm: f_dual,
            r0,
            r0_arbitrarily_small,
            r_star,
            q_radii,
            q_values,
            t0_radii: opts.h_radii.clone(),
            t0_values,
            kappa0: opts.kappa0,
            c_kappa: opts.c_kappa,
            kappa1: 0.0,
            r1: 0.0,
            kappa2: 0.0,
            c_increment,
        };
        c.kappa1 = c.kappa_star(c.r_star);
        c.r1 = c.q_of(c.r_star);
        c.kappa2 = c.uniqueness_threshold(c.r_star);
        c
    };
    phases.push(format!(
        "phase 7: kappa1 = {:.6e}, r1 = {:.6e}, kappa2 = {:.6e}",
        constants.kappa1, constants.r1, constants.kappa2
    ));

    // Phase 8: verification. Long orbits from the absorbing ball must obey
    // the entering bound (enstrophy below r1 once t >= 1 + 2 kappa1) and
    // stay below r1 after first reaching r_star. Zero violations allowed.
    let k_v = opts.verify_k.min(constants.kappa1);
    let entering_time = 1.0 + 2.0 * constants.kappa1;
    let slack = 1.0 + 1e-9;
    for t in 0..opts.verify_trajectories {
        let radius = r0 * (t + 1) as f64 / opts.verify_trajectories as f64;
        let u0 = random_at(grid, mix(&[opts.seed, 8, t]), Target::H(radius));
        let tr = run_trace(ops, k_v, nu, f, &u0, opts.verify_steps, &opts.step)?;
        let mut smoothed = false;
        for (step, v) in tr.v.iter().enumerate() {
            if step as f64 * k_v >= entering_time && *v > constants.r1 * slack {
                return Err(CalibrationError::Entering {
                    trajectory: t,
                    step: step as u64,
                    v_norm: *v,
                    r1: constants.r1,
                });
            }
            if smoothed && *v > constants.r1 * slack {
                return Err(CalibrationError::Absorb {
                    trajectory: t,
                    step: step as u64,
                    v_norm: *v,
                    r1: constants.r1,
                });
            }
            if *v <= r_star {
                smoothed = true;
            }
        }
    }
    phases.push(format!(
        "phase 8: {} orbits x {} steps at k = {k_v:.3e} satisfied entering and absorption",
        opts.verify_trajectories, opts.verify_steps
    ));

    constants.validate()?;
    Ok(CalibrationReport { constants, phases })
}
