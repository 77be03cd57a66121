use num_complex::Complex;
use rand::Rng;
use serde::{Deserialize, Serialize};

use super::grid::Grid;
use super::SpectralError;

/// Smallest eigenvalue of the Stokes operator on the mean-free torus
/// (integer wavevectors, so the first shell is `|xi|^2 = 1`).
pub const LAMBDA_1: f64 = 1.0;

/// H, V and dual norms of one field, all derived from the same coefficients:
/// `h^2 = sum |u_hat|^2`, `v^2 = sum |xi|^2 |u_hat|^2`,
/// `dual^2 = sum |u_hat|^2 / |xi|^2`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct NormTriple {
    pub h: f64,
    pub v: f64,
    pub dual: f64,
}

/// Mean-free velocity field on the torus, stored as Fourier coefficients on
/// the full FFT grid (two components, row-major over `xi_1` then `xi_2`).
///
/// Coefficients are scaled so Parseval reads `|u|^2 = sum |u_hat(xi)|^2`
/// exactly, and a single trig mode of physical amplitude `a` has H-norm `a`
/// (`u_hat = sqrt(2) *` classical Fourier coefficient). Valid fields are
/// Hermitian-symmetric, divergence-free, mean-free, and zero outside the
/// dealias band; every constructor and operation here preserves that.
#[derive(Clone, Debug)]
pub struct SpectralVelocity {
    grid: Grid,
    coeffs: [Vec<Complex<f64>>; 2],
}

/// Body force; same representation and invariants as a velocity field.
pub type ForcingField = SpectralVelocity;

/// One forcing entry: physical field `amplitude * sin(mode . x)` per
/// component. `mode . amplitude = 0` keeps the force divergence-free.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ForcingMode {
    pub mode: [i64; 2],
    pub amplitude: [f64; 2],
}

impl SpectralVelocity {
    pub fn zero(grid: Grid) -> Self {
        let len = grid.len();
        SpectralVelocity {
            grid,
            coeffs: [vec![Complex::default(); len], vec![Complex::default(); len]],
        }
    }

    /// Builds `sum_j amplitude_j * sin(mode_j . x)`.
    pub fn forcing(grid: Grid, modes: &[ForcingMode]) -> Result<ForcingField, SpectralError> {
        let mut f = SpectralVelocity::zero(grid);
        for fm in modes {
            let [m1, m2] = fm.mode;
            if m1 == 0 && m2 == 0 {
                return Err(SpectralError::ForcingMeanMode);
            }
            if !grid.retained(m1, m2) {
                return Err(SpectralError::ForcingOutsideBand { mode: fm.mode });
            }
            let dot = m1 as f64 * fm.amplitude[0] + m2 as f64 * fm.amplitude[1];
            let scale = (fm.amplitude[0].abs() + fm.amplitude[1].abs()).max(1.0);
            if dot.abs() > 1e-12 * scale {
                return Err(SpectralError::ForcingNotDivergenceFree { mode: fm.mode });
            }
            // a*sin(m.x) has classical coefficients -+ i a/2 at +-m.
            for (c, &a) in fm.amplitude.iter().enumerate() {
                let half = Complex::new(0.0, -a / std::f64::consts::SQRT_2);
                let off = grid.offset(m1, m2);
                let off_neg = grid.offset(-m1, -m2);
                f.coeffs[c][off] += half;
                f.coeffs[c][off_neg] += half.conj();
            }
        }
        Ok(f)
    }

    /// Seeded dense random field: every retained mode pair gets an amplitude
    /// damped by `(1 + |xi|^2)^(-decay/2)`, then the result is projected.
    /// Draw order is fixed by storage order, so equal seeds give equal fields.
    pub fn random(grid: Grid, rng: &mut impl Rng, decay: f64) -> Self {
        let mut u = SpectralVelocity::zero(grid);
        let k = grid.cutoff();
        for xi1 in 0..=k {
            for xi2 in -k..=k {
                // Canonical half-space; the mirror mode is the conjugate.
                if xi1 == 0 && xi2 <= 0 {
                    continue;
                }
                let damp = (1.0 + (xi1 * xi1 + xi2 * xi2) as f64).powf(-decay / 2.0);
                let off = grid.offset(xi1, xi2);
                let off_neg = grid.offset(-xi1, -xi2);
                for c in 0..2 {
                    let z = Complex::new(
                        rng.random_range(-1.0..1.0),
                        rng.random_range(-1.0..1.0),
                    ) * damp;
                    u.coeffs[c][off] = z;
                    u.coeffs[c][off_neg] = z.conj();
                }
            }
        }
        u.leray_project();
        u
    }

    pub fn grid(&self) -> Grid {
        self.grid
    }

    pub fn coeff(&self, component: usize, xi1: i64, xi2: i64) -> Complex<f64> {
        self.coeffs[component][self.grid.offset(xi1, xi2)]
    }

    /// Raw coefficient write; the caller owns restoring Hermitian symmetry
    /// and divergence-freeness afterwards.
    pub fn set_coeff(&mut self, component: usize, xi1: i64, xi2: i64, value: Complex<f64>) {
        let off = self.grid.offset(xi1, xi2);
        self.coeffs[component][off] = value;
    }

    pub(crate) fn component(&self, c: usize) -> &[Complex<f64>] {
        &self.coeffs[c]
    }

    pub(crate) fn component_mut(&mut self, c: usize) -> &mut [Complex<f64>] {
        &mut self.coeffs[c]
    }

    // ----- linear structure -----

    /// `self += a * x`.
    pub fn axpy(&mut self, a: f64, x: &Self) {
        debug_assert_eq!(self.grid, x.grid);
        for c in 0..2 {
            for (s, v) in self.coeffs[c].iter_mut().zip(&x.coeffs[c]) {
                *s += a * v;
            }
        }
    }

    pub fn scale(&mut self, a: f64) {
        for c in 0..2 {
            for s in self.coeffs[c].iter_mut() {
                *s *= a;
            }
        }
    }

    pub fn scaled(&self, a: f64) -> Self {
        let mut out = self.clone();
        out.scale(a);
        out
    }

    pub fn minus(&self, other: &Self) -> Self {
        let mut out = self.clone();
        out.axpy(-1.0, other);
        out
    }

    pub fn plus(&self, other: &Self) -> Self {
        let mut out = self.clone();
        out.axpy(1.0, other);
        out
    }

    // ----- inner products and norms -----

    /// Real L2 pairing; real-valued for Hermitian fields.
    pub fn inner_h(&self, other: &Self) -> f64 {
        debug_assert_eq!(self.grid, other.grid);
        let mut acc = 0.0;
        for c in 0..2 {
            for (a, b) in self.coeffs[c].iter().zip(&other.coeffs[c]) {
                acc += a.re * b.re + a.im * b.im;
            }
        }
        acc
    }

    pub fn h_norm_sq(&self) -> f64 {
        self.inner_h(self)
    }

    pub fn h_norm(&self) -> f64 {
        self.h_norm_sq().sqrt()
    }

    pub fn v_norm_sq(&self) -> f64 {
        self.weighted_norm_sq(|k2| k2)
    }

    pub fn v_norm(&self) -> f64 {
        self.v_norm_sq().sqrt()
    }

    pub fn dual_norm_sq(&self) -> f64 {
        self.weighted_norm_sq(|k2| if k2 > 0.0 { 1.0 / k2 } else { 0.0 })
    }

    pub fn dual_norm(&self) -> f64 {
        self.dual_norm_sq().sqrt()
    }

    pub fn norms(&self) -> NormTriple {
        NormTriple {
            h: self.h_norm(),
            v: self.v_norm(),
            dual: self.dual_norm(),
        }
    }

    fn weighted_norm_sq(&self, weight: impl Fn(f64) -> f64) -> f64 {
        let n = self.grid.n();
        let mut acc = 0.0;
        for i1 in 0..n {
            let xi1 = self.grid.wavenumber(i1);
            for i2 in 0..n {
                let xi2 = self.grid.wavenumber(i2);
                let k2 = (xi1 * xi1 + xi2 * xi2) as f64;
                let w = weight(k2);
                let off = i1 * n + i2;
                acc += w * (self.coeffs[0][off].norm_sqr() + self.coeffs[1][off].norm_sqr());
            }
        }
        acc
    }

    // ----- structure-preserving operations -----

    /// Removes the gradient part mode by mode and zeroes the mean.
    pub fn leray_project(&mut self) {
        let n = self.grid.n();
        for i1 in 0..n {
            let xi1 = self.grid.wavenumber(i1) as f64;
            for i2 in 0..n {
                let xi2 = self.grid.wavenumber(i2) as f64;
                let k2 = xi1 * xi1 + xi2 * xi2;
                let off = i1 * n + i2;
                if k2 == 0.0 {
                    self.coeffs[0][off] = Complex::default();
                    self.coeffs[1][off] = Complex::default();
                } else {
                    let div = (xi1 * self.coeffs[0][off] + xi2 * self.coeffs[1][off]) / k2;
                    self.coeffs[0][off] -= xi1 * div;
                    self.coeffs[1][off] -= xi2 * div;
                }
            }
        }
        self.dealias();
    }

    /// Multiplies each mode by `|xi|^2`.
    pub fn stokes_apply(&self) -> Self {
        let mut out = self.clone();
        let n = self.grid.n();
        for i1 in 0..n {
            let xi1 = self.grid.wavenumber(i1) as f64;
            for i2 in 0..n {
                let xi2 = self.grid.wavenumber(i2) as f64;
                let k2 = xi1 * xi1 + xi2 * xi2;
                let off = i1 * n + i2;
                out.coeffs[0][off] *= k2;
                out.coeffs[1][off] *= k2;
            }
        }
        out
    }

    /// Multiplies each mode by `symbol(|xi|^2)`; the diagonal calculus shared
    /// by resolvents and preconditioners.
    pub fn scale_by_symbol(&mut self, symbol: impl Fn(f64) -> f64) {
        let n = self.grid.n();
        for i1 in 0..n {
            let xi1 = self.grid.wavenumber(i1) as f64;
            for i2 in 0..n {
                let xi2 = self.grid.wavenumber(i2) as f64;
                let s = symbol(xi1 * xi1 + xi2 * xi2);
                let off = i1 * n + i2;
                self.coeffs[0][off] *= s;
                self.coeffs[1][off] *= s;
            }
        }
    }

    /// Zeroes everything outside the retained band (2/3 rule).
    pub fn dealias(&mut self) {
        let n = self.grid.n();
        for i1 in 0..n {
            let xi1 = self.grid.wavenumber(i1);
            for i2 in 0..n {
                let xi2 = self.grid.wavenumber(i2);
                if !self.grid.retained(xi1, xi2) {
                    let off = i1 * n + i2;
                    self.coeffs[0][off] = Complex::default();
                    self.coeffs[1][off] = Complex::default();
                }
            }
        }
    }

    // ----- validity diagnostics -----

    /// Largest `|xi . u_hat(xi)|` over retained modes.
    pub fn divergence_defect(&self) -> f64 {
        let mut worst: f64 = 0.0;
        for (xi1, xi2) in self.grid.retained_modes() {
            let off = self.grid.offset(xi1, xi2);
            let d = xi1 as f64 * self.coeffs[0][off] + xi2 as f64 * self.coeffs[1][off];
            worst = worst.max(d.norm());
        }
        worst
    }

    /// Largest `|u_hat(-xi) - conj(u_hat(xi))|` over retained modes.
    pub fn hermitian_defect(&self) -> f64 {
        let mut worst: f64 = 0.0;
        for (xi1, xi2) in self.grid.retained_modes() {
            for c in 0..2 {
                let a = self.coeffs[c][self.grid.offset(xi1, xi2)];
                let b = self.coeffs[c][self.grid.offset(-xi1, -xi2)];
                worst = worst.max((b - a.conj()).norm());
            }
        }
        worst
    }

    /// Largest coefficient magnitude outside the retained band.
    pub fn masked_defect(&self) -> f64 {
        let n = self.grid.n();
        let mut worst: f64 = 0.0;
        for i1 in 0..n {
            let xi1 = self.grid.wavenumber(i1);
            for i2 in 0..n {
                let xi2 = self.grid.wavenumber(i2);
                if !self.grid.retained(xi1, xi2) {
                    let off = i1 * n + i2;
                    worst = worst
                        .max(self.coeffs[0][off].norm())
                        .max(self.coeffs[1][off].norm());
                }
            }
        }
        worst
    }

    pub fn mean_mode_abs(&self) -> f64 {
        let off = self.grid.offset(0, 0);
        self.coeffs[0][off].norm().max(self.coeffs[1][off].norm())
    }

    pub fn is_finite(&self) -> bool {
        self.coeffs
            .iter()
            .all(|c| c.iter().all(|z| z.re.is_finite() && z.im.is_finite()))
    }

    // ----- flat embeddings -----

    /// Flattens retained coefficients to a real vector whose Euclidean norm
    /// equals the H-norm. Order: storage order over modes, then
    /// `re, im` of component 0, `re, im` of component 1.
    pub fn flatten_h(&self) -> Vec<f64> {
        self.flatten_weighted(|_| 1.0)
    }

    /// Same layout, weighted by `|xi|`, so Euclidean distance is V-distance.
    pub fn flatten_v(&self) -> Vec<f64> {
        self.flatten_weighted(|k2| k2.sqrt())
    }

    fn flatten_weighted(&self, weight: impl Fn(f64) -> f64) -> Vec<f64> {
        let mut out = Vec::with_capacity(4 * self.grid.retained_len());
        for (xi1, xi2) in self.grid.retained_modes() {
            let w = weight((xi1 * xi1 + xi2 * xi2) as f64);
            let off = self.grid.offset(xi1, xi2);
            for c in 0..2 {
                out.push(w * self.coeffs[c][off].re);
                out.push(w * self.coeffs[c][off].im);
            }
        }
        out
    }

    /// Inverse of [`flatten_h`](Self::flatten_h).
    pub fn unflatten_h(grid: Grid, flat: &[f64]) -> Result<Self, SpectralError> {
        if flat.len() != 4 * grid.retained_len() {
            return Err(SpectralError::FlatLengthMismatch {
                expected: 4 * grid.retained_len(),
                got: flat.len(),
            });
        }
        let mut u = SpectralVelocity::zero(grid);
        let mut it = flat.iter();
        for (xi1, xi2) in grid.retained_modes() {
            let off = grid.offset(xi1, xi2);
            for c in 0..2 {
                let re = *it.next().unwrap();
                let im = *it.next().unwrap();
                u.coeffs[c][off] = Complex::new(re, im);
            }
        }
        Ok(u)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn grid() -> Grid {
        Grid::new(16).unwrap()
    }

    /// Unit-amplitude shear (sin y, 0): eigenvalue-1 mode, so all three
    /// norms coincide and equal the physical amplitude.
    #[test]
    fn shear_norms_match_amplitude() {
        let f = SpectralVelocity::forcing(
            grid(),
            &[ForcingMode { mode: [0, 1], amplitude: [1.0, 0.0] }],
        )
        .unwrap();
        let t = f.norms();
        assert!((t.h - 1.0).abs() < 1e-14, "h = {}", t.h);
        assert!((t.v - 1.0).abs() < 1e-14);
        assert!((t.dual - 1.0).abs() < 1e-14);
    }

    #[test]
    fn forcing_rejects_non_solenoidal_modes() {
        let bad = SpectralVelocity::forcing(
            grid(),
            &[ForcingMode { mode: [0, 1], amplitude: [0.0, 1.0] }],
        );
        assert!(bad.is_err());
        let mean = SpectralVelocity::forcing(
            grid(),
            &[ForcingMode { mode: [0, 0], amplitude: [1.0, 0.0] }],
        );
        assert!(mean.is_err());
    }

    #[test]
    fn random_fields_satisfy_structure_invariants() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        for _ in 0..20 {
            let u = SpectralVelocity::random(grid(), &mut rng, 2.0);
            let scale = u.h_norm().max(1.0);
            assert!(u.divergence_defect() <= 1e-12 * scale);
            assert!(u.hermitian_defect() <= 1e-12 * scale);
            assert_eq!(u.masked_defect(), 0.0);
            assert_eq!(u.mean_mode_abs(), 0.0);
        }
    }

    #[test]
    fn poincare_inequality_on_random_fields() {
        let mut rng = ChaCha8Rng::seed_from_u64(8);
        for _ in 0..20 {
            let u = SpectralVelocity::random(grid(), &mut rng, 1.0);
            assert!(u.v_norm_sq() + 1e-15 >= LAMBDA_1 * u.h_norm_sq());
            assert!(u.h_norm_sq() + 1e-15 >= u.dual_norm_sq());
        }
    }

    #[test]
    fn gradient_field_projects_to_zero() {
        // v = grad(sin x) = (cos x, 0): classical coefficients 1/2 at +-(1,0).
        let g = grid();
        let mut v = SpectralVelocity::zero(g);
        let half = Complex::new(1.0 / std::f64::consts::SQRT_2, 0.0);
        v.set_coeff(0, 1, 0, half);
        v.set_coeff(0, -1, 0, half);
        v.leray_project();
        assert!(v.h_norm() < 1e-15);
    }

    #[test]
    fn leray_is_idempotent() {
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        let mut u = SpectralVelocity::random(grid(), &mut rng, 1.5);
        // Pollute with a gradient component, then project twice.
        u.set_coeff(0, 2, 0, Complex::new(0.3, -0.1));
        u.set_coeff(0, -2, 0, Complex::new(0.3, 0.1));
        let mut once = u.clone();
        once.leray_project();
        let mut twice = once.clone();
        twice.leray_project();
        assert!(twice.minus(&once).h_norm() <= 1e-15 * once.h_norm().max(1.0));
    }

    #[test]
    fn stokes_scales_eigenmode() {
        // Mode (2,1): |xi|^2 = 5.
        let g = grid();
        let mut u = SpectralVelocity::zero(g);
        let z = Complex::new(0.2, 0.4);
        // Divergence-free direction for (2,1) is (1,-2)/sqrt(5).
        let dir = [1.0 / 5.0f64.sqrt(), -2.0 / 5.0f64.sqrt()];
        for c in 0..2 {
            u.set_coeff(c, 2, 1, z * dir[c]);
            u.set_coeff(c, -2, -1, z.conj() * dir[c]);
        }
        let au = u.stokes_apply();
        assert!(au.minus(&u.scaled(5.0)).h_norm() < 1e-14);
    }

    #[test]
    fn flatten_h_preserves_norm_and_roundtrips() {
        let mut rng = ChaCha8Rng::seed_from_u64(10);
        let u = SpectralVelocity::random(grid(), &mut rng, 1.0);
        let flat = u.flatten_h();
        let norm: f64 = flat.iter().map(|x| x * x).sum::<f64>().sqrt();
        assert!((norm - u.h_norm()).abs() < 1e-12 * u.h_norm().max(1.0));
        let back = SpectralVelocity::unflatten_h(grid(), &flat).unwrap();
        assert!(back.minus(&u).h_norm() < 1e-15);
    }
}
