use crate::spectral::{ForcingField, SpectralOps, SpectralVelocity};

/// Residual of the implicit step equation,
/// `F(u) = u + k nu A u + k B(u,u) - w - k f`.
pub(crate) fn residual_field(
    ops: &mut SpectralOps,
    k: f64,
    nu: f64,
    u: &SpectralVelocity,
    w: &SpectralVelocity,
    f: &ForcingField,
) -> SpectralVelocity {
    let mut r = ops.nonlinear_term(u, u);
    r.scale(k);
    r.axpy(1.0, u);
    r.axpy(k * nu, &u.stokes_apply());
    r.axpy(-1.0, w);
    r.axpy(-k, f);
    r
}

/// Dual norm of the step residual; zero exactly at solutions.
pub fn step_residual(
    ops: &mut SpectralOps,
    k: f64,
    nu: f64,
    u: &SpectralVelocity,
    w: &SpectralVelocity,
    f: &ForcingField,
) -> f64 {
    residual_field(ops, k, nu, u, w, f).dual_norm()
}

/// Absolute defect of the per-step energy identity
/// `|u|^2 - |w|^2 + |u - w|^2 + 2 k nu ||u||^2 - 2 k (f, u) = 0`,
/// which exact solutions satisfy because `b(u,u,u) = 0`.
pub fn energy_identity_residual(
    u: &SpectralVelocity,
    w: &SpectralVelocity,
    k: f64,
    nu: f64,
    f: &ForcingField,
) -> f64 {
    let lhs = u.h_norm_sq() - w.h_norm_sq()
        + u.minus(w).h_norm_sq()
        + 2.0 * k * nu * u.v_norm_sq()
        - 2.0 * k * f.inner_h(u);
    lhs.abs()
}

/// Same defect relative to `max(|u|^2, |w|^2)`; falls back to the absolute
/// value when both states vanish.
pub fn energy_identity_rel(
    u: &SpectralVelocity,
    w: &SpectralVelocity,
    k: f64,
    nu: f64,
    f: &ForcingField,
) -> f64 {
    let abs = energy_identity_residual(u, w, k, nu, f);
    let denom = u.h_norm_sq().max(w.h_norm_sq());
    if denom > 0.0 {
        abs / denom
    } else {
        abs
    }
}

/// One linearly implicit substep, `(I + k nu A) u = w + k f - k B(w,w)`;
/// cheap and accurate enough to serve as a Newton start.
pub(crate) fn semi_implicit_predictor(
    ops: &mut SpectralOps,
    k: f64,
    nu: f64,
    w: &SpectralVelocity,
    f: &ForcingField,
) -> SpectralVelocity {
    let mut rhs = ops.nonlinear_term(w, w);
    rhs.scale(-k);
    rhs.axpy(1.0, w);
    rhs.axpy(k, f);
    rhs.scale_by_symbol(|k2| 1.0 / (1.0 + k * nu * k2));
    rhs
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::spectral::{ForcingMode, Grid, SpectralVelocity};
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn setup() -> (Grid, SpectralOps) {
        let g = Grid::new(16).unwrap();
        (g, SpectralOps::new(g))
    }

    /// Pure shear makes the step linear: u = w / (1 + k nu) solves it exactly.
    #[test]
    fn shear_step_solution_has_tiny_residual() {
        let (g, mut ops) = setup();
        let w = SpectralVelocity::forcing(g, &[ForcingMode { mode: [0, 1], amplitude: [1.0, 0.0] }])
            .unwrap();
        let f = SpectralVelocity::zero(g);
        let (k, nu) = (0.1, 1.0);
        let u = w.scaled(1.0 / (1.0 + k * nu));
        assert!(step_residual(&mut ops, k, nu, &u, &w, &f) <= 1e-12);
        assert!(energy_identity_rel(&u, &w, k, nu, &f) <= 1e-12);
    }

    #[test]
    fn zero_data_gives_zero_residuals() {
        let (g, mut ops) = setup();
        let z = SpectralVelocity::zero(g);
        assert_eq!(step_residual(&mut ops, 0.1, 1.0, &z, &z, &z), 0.0);
        assert_eq!(energy_identity_residual(&z, &z, 0.1, 1.0, &z), 0.0);
    }

    /// Residual at u = w is k-scaled: F(w) = k(nu A w + B(w,w) - f).
    #[test]
    fn residual_at_previous_state_scales_with_k() {
        let (g, mut ops) = setup();
        let mut rng = ChaCha8Rng::seed_from_u64(21);
        let w = SpectralVelocity::random(g, &mut rng, 2.0);
        let f = SpectralVelocity::zero(g);
        let r1 = step_residual(&mut ops, 0.1, 1.0, &w, &w, &f);
        let r2 = step_residual(&mut ops, 0.05, 1.0, &w, &w, &f);
        assert!((r1 - 2.0 * r2).abs() <= 1e-12 * r1.max(1.0));
    }

    #[test]
    fn predictor_solves_linearized_step() {
        let (g, mut ops) = setup();
        let mut rng = ChaCha8Rng::seed_from_u64(22);
        let w = SpectralVelocity::random(g, &mut rng, 2.0);
        let f = SpectralVelocity::forcing(g, &[ForcingMode { mode: [0, 1], amplitude: [0.1, 0.0] }])
            .unwrap();
        let (k, nu) = (0.05, 1.0);
        let u = semi_implicit_predictor(&mut ops, k, nu, &w, &f);
        // (I + k nu A) u + k B(w,w) - w - k f = 0 by construction.
        let mut r = ops.nonlinear_term(&w, &w);
        r.scale(k);
        r.axpy(1.0, &u);
        r.axpy(k * nu, &u.stokes_apply());
        r.axpy(-1.0, &w);
        r.axpy(-k, &f);
        assert!(r.h_norm() <= 1e-13 * w.h_norm().max(1.0));
    }
}
