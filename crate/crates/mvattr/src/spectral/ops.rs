use num_complex::Complex;

use super::fft::Fft2;
use super::field::{NormTriple, SpectralVelocity};
use super::grid::Grid;

/// Spectral multiplier applied before an inverse transform.
#[derive(Clone, Copy)]
enum Mul {
    One,
    /// `i * xi_1` (x-derivative).
    Dx,
    /// `i * xi_2` (y-derivative).
    Dy,
}

/// Transform context for one grid: FFT plans plus scratch, so repeated
/// nonlinear-term evaluations don't replan. One instance per worker; the
/// scratch is not shared across threads.
pub struct SpectralOps {
    grid: Grid,
    fft: Fft2,
    cwork: Vec<Complex<f64>>,
}

/// Physical-space samples of `u` and its gradient, cached once per Newton
/// iterate so each Jacobian application only transforms the direction field.
pub struct ConvectionCtx {
    u_phys: [Vec<f64>; 2],
    grad_u: [[Vec<f64>; 2]; 2],
}

impl SpectralOps {
    pub fn new(grid: Grid) -> Self {
        SpectralOps {
            grid,
            fft: Fft2::new(grid.n()),
            cwork: vec![Complex::default(); grid.len()],
        }
    }

    pub fn grid(&self) -> Grid {
        self.grid
    }

    /// `P[(u . grad) v]`, evaluated pseudo-spectrally with the 2/3-rule mask
    /// and Leray projection applied to the result. For band-limited inputs
    /// the masked product is alias-free, i.e. it equals the truncated
    /// convolution exactly (up to roundoff).
    pub fn nonlinear_term(
        &mut self,
        u: &SpectralVelocity,
        v: &SpectralVelocity,
    ) -> SpectralVelocity {
        debug_assert_eq!(u.grid(), self.grid);
        debug_assert_eq!(v.grid(), self.grid);
        let u1 = self.to_physical(u, 0, Mul::One);
        let u2 = self.to_physical(u, 1, Mul::One);
        let mut prod = [Vec::new(), Vec::new()];
        for (c, out) in prod.iter_mut().enumerate() {
            let dx = self.to_physical(v, c, Mul::Dx);
            let dy = self.to_physical(v, c, Mul::Dy);
            *out = (0..dx.len()).map(|j| u1[j] * dx[j] + u2[j] * dy[j]).collect();
        }
        self.from_physical(&prod[0], &prod[1])
    }

    /// `b(u, v, w) = (P[(u . grad) v], w)`.
    pub fn trilinear(
        &mut self,
        u: &SpectralVelocity,
        v: &SpectralVelocity,
        w: &SpectralVelocity,
    ) -> f64 {
        self.nonlinear_term(u, v).inner_h(w)
    }

    /// Caches physical samples of `u` and `grad u`.
    pub fn convection_ctx(&mut self, u: &SpectralVelocity) -> ConvectionCtx {
        ConvectionCtx {
            u_phys: [self.to_physical(u, 0, Mul::One), self.to_physical(u, 1, Mul::One)],
            grad_u: [
                [self.to_physical(u, 0, Mul::Dx), self.to_physical(u, 0, Mul::Dy)],
                [self.to_physical(u, 1, Mul::Dx), self.to_physical(u, 1, Mul::Dy)],
            ],
        }
    }

    /// `P[(u . grad) v + (v . grad) u]` with `u` taken from the cache; this is
    /// the derivative of `u -> P[(u . grad) u]` in direction `v`.
    pub fn convection_derivative(
        &mut self,
        ctx: &ConvectionCtx,
        v: &SpectralVelocity,
    ) -> SpectralVelocity {
        let v1 = self.to_physical(v, 0, Mul::One);
        let v2 = self.to_physical(v, 1, Mul::One);
        let mut prod = [Vec::new(), Vec::new()];
        for (c, out) in prod.iter_mut().enumerate() {
            let dxv = self.to_physical(v, c, Mul::Dx);
            let dyv = self.to_physical(v, c, Mul::Dy);
            let dxu = &ctx.grad_u[c][0];
            let dyu = &ctx.grad_u[c][1];
            let (u1, u2) = (&ctx.u_phys[0], &ctx.u_phys[1]);
            *out = (0..dxv.len())
                .map(|j| u1[j] * dxv[j] + u2[j] * dyv[j] + v1[j] * dxu[j] + v2[j] * dyu[j])
                .collect();
        }
        self.from_physical(&prod[0], &prod[1])
    }

    fn to_physical(&mut self, u: &SpectralVelocity, comp: usize, mul: Mul) -> Vec<f64> {
        let n = self.grid.n();
        let inv_sqrt2 = 1.0 / std::f64::consts::SQRT_2;
        let src = u.component(comp);
        for i1 in 0..n {
            let xi1 = self.grid.wavenumber(i1) as f64;
            for i2 in 0..n {
                let xi2 = self.grid.wavenumber(i2) as f64;
                let off = i1 * n + i2;
                let m = match mul {
                    Mul::One => Complex::new(inv_sqrt2, 0.0),
                    Mul::Dx => Complex::new(0.0, xi1 * inv_sqrt2),
                    Mul::Dy => Complex::new(0.0, xi2 * inv_sqrt2),
                };
                self.cwork[off] = m * src[off];
            }
        }
        self.fft.inverse2d(&mut self.cwork);
        self.cwork.iter().map(|z| z.re).collect()
    }

    /// Forward transform of a real two-component field, then mask + project.
    fn from_physical(&mut self, w1: &[f64], w2: &[f64]) -> SpectralVelocity {
        let scale = std::f64::consts::SQRT_2 / self.grid.len() as f64;
        let mut out = SpectralVelocity::zero(self.grid);
        for (c, w) in [w1, w2].into_iter().enumerate() {
            for (dst, &x) in self.cwork.iter_mut().zip(w) {
                *dst = Complex::new(x, 0.0);
            }
            self.fft.forward2d(&mut self.cwork);
            for (dst, z) in out.component_mut(c).iter_mut().zip(&self.cwork) {
                *dst = scale * z;
            }
        }
        out.leray_project();
        out
    }
}

/// Out-of-place Leray projection.
pub fn leray_project(u: &SpectralVelocity) -> SpectralVelocity {
    let mut out = u.clone();
    out.leray_project();
    out
}

/// `A u` (spectral multiplication by `|xi|^2`).
pub fn stokes_apply(u: &SpectralVelocity) -> SpectralVelocity {
    u.stokes_apply()
}

/// H, V and dual norms in one pass.
pub fn norms(u: &SpectralVelocity) -> NormTriple {
    u.norms()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::spectral::field::ForcingMode;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    /// Independent O(N^4) truncated convolution of `(u . grad) v`, summing
    /// over retained mode pairs directly, then projecting. Shares nothing
    /// with the pseudo-spectral path but the coefficient convention.
    fn convolution_oracle(u: &SpectralVelocity, v: &SpectralVelocity) -> SpectralVelocity {
        let g = u.grid();
        let inv_sqrt2 = 1.0 / std::f64::consts::SQRT_2;
        let mut out = SpectralVelocity::zero(g);
        for (xi1, xi2) in g.retained_modes() {
            for c in 0..2 {
                let mut acc = Complex::default();
                for (e1, e2) in g.retained_modes() {
                    let (z1, z2) = (xi1 - e1, xi2 - e2);
                    if !g.retained(z1, z2) {
                        continue;
                    }
                    let udotz = u.coeff(0, e1, e2) * z1 as f64 + u.coeff(1, e1, e2) * z2 as f64;
                    acc += Complex::new(0.0, 1.0) * udotz * v.coeff(c, z1, z2);
                }
                out.set_coeff(c, xi1, xi2, acc * inv_sqrt2);
            }
        }
        out.leray_project();
        out
    }

    fn random_pair(seed: u64) -> (SpectralVelocity, SpectralVelocity, SpectralOps) {
        let g = Grid::new(8).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let u = SpectralVelocity::random(g, &mut rng, 1.0);
        let v = SpectralVelocity::random(g, &mut rng, 1.0);
        (u, v, SpectralOps::new(g))
    }

    #[test]
    fn pseudo_spectral_matches_convolution_oracle() {
        for seed in 0..10 {
            let (u, v, mut ops) = random_pair(seed);
            let fast = ops.nonlinear_term(&u, &v);
            let slow = convolution_oracle(&u, &v);
            let scale = slow.h_norm().max(1.0);
            assert!(
                fast.minus(&slow).h_norm() <= 1e-12 * scale,
                "seed {seed}: defect {}",
                fast.minus(&slow).h_norm() / scale
            );
        }
    }

    #[test]
    fn nonlinear_term_output_is_valid_field() {
        let (u, v, mut ops) = random_pair(42);
        let b = ops.nonlinear_term(&u, &v);
        let scale = b.h_norm().max(1.0);
        assert!(b.divergence_defect() <= 1e-12 * scale);
        assert!(b.hermitian_defect() <= 1e-12 * scale);
        assert_eq!(b.masked_defect(), 0.0);
    }

    /// b(u, v, v) = 0: the convective term does no work against its own
    /// transported field.
    #[test]
    fn trilinear_antisymmetry_diagonal() {
        for seed in 100..110 {
            let (u, v, mut ops) = random_pair(seed);
            let scale = u.h_norm() * v.v_norm() * v.h_norm();
            assert!(ops.trilinear(&u, &v, &v).abs() <= 1e-12 * scale.max(1.0));
        }
    }

    #[test]
    fn trilinear_skew_symmetry() {
        let g = Grid::new(16).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let mut ops = SpectralOps::new(g);
        for _ in 0..5 {
            let u = SpectralVelocity::random(g, &mut rng, 1.0);
            let v = SpectralVelocity::random(g, &mut rng, 1.0);
            let w = SpectralVelocity::random(g, &mut rng, 1.0);
            let a = ops.trilinear(&u, &v, &w);
            let b = ops.trilinear(&u, &w, &v);
            let scale = (a.abs() + b.abs()).max(1.0);
            assert!((a + b).abs() <= 1e-12 * scale);
        }
    }

    /// Parallel shears advect nothing into each other.
    #[test]
    fn trilinear_orthogonal_shears() {
        let g = Grid::new(16).unwrap();
        let u = SpectralVelocity::forcing(g, &[ForcingMode { mode: [0, 1], amplitude: [1.0, 0.0] }])
            .unwrap();
        let mut v = SpectralVelocity::zero(g);
        // (cos y, 0): classical coefficients 1/2 at +-(0,1).
        let half = Complex::new(1.0 / std::f64::consts::SQRT_2, 0.0);
        v.set_coeff(0, 0, 1, half);
        v.set_coeff(0, 0, -1, half);
        let mut ops = SpectralOps::new(g);
        assert!(ops.trilinear(&u, &v, &u).abs() < 1e-14);
    }

    /// The interpolation inequality |b| <= C |u|^1/2 ||u||^1/2 ||v|| |w|^1/2 ||w||^1/2
    /// with the empirically calibrated constant.
    #[test]
    fn trilinear_interpolation_bound() {
        let g = Grid::new(16).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let mut ops = SpectralOps::new(g);
        let mut worst: f64 = 0.0;
        for _ in 0..200 {
            let u = SpectralVelocity::random(g, &mut rng, 0.8);
            let v = SpectralVelocity::random(g, &mut rng, 0.8);
            let w = SpectralVelocity::random(g, &mut rng, 0.8);
            let b = ops.trilinear(&u, &v, &w).abs();
            let bound = u.h_norm().sqrt()
                * u.v_norm().sqrt()
                * v.v_norm()
                * w.h_norm().sqrt()
                * w.v_norm().sqrt();
            worst = worst.max(b / bound);
        }
        assert!(
            worst <= crate::spectral::C_TRILINEAR,
            "measured trilinear ratio {worst}"
        );
    }

    /// Jacobian convection term is the sum of the two one-sided terms.
    #[test]
    fn convection_derivative_matches_sum() {
        let (u, v, mut ops) = random_pair(7);
        let lhs = {
            let ctx = ops.convection_ctx(&u);
            ops.convection_derivative(&ctx, &v)
        };
        let rhs = ops.nonlinear_term(&u, &v).plus(&ops.nonlinear_term(&v, &u));
        assert!(lhs.minus(&rhs).h_norm() <= 1e-13 * rhs.h_norm().max(1.0));
    }
}
