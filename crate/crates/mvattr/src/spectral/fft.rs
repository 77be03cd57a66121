use std::sync::Arc;

use num_complex::Complex;
use rustfft::{Fft, FftPlanner};

/// Planned 2D transforms for one grid size, with reusable scratch space.
/// Neither direction applies normalization; callers own the convention.
pub(crate) struct Fft2 {
    n: usize,
    forward: Arc<dyn Fft<f64>>,
    inverse: Arc<dyn Fft<f64>>,
    scratch: Vec<Complex<f64>>,
    transposed: Vec<Complex<f64>>,
}

impl Fft2 {
    pub fn new(n: usize) -> Self {
        let mut planner = FftPlanner::new();
        let forward = planner.plan_fft_forward(n);
        let inverse = planner.plan_fft_inverse(n);
        let scratch_len = forward
            .get_inplace_scratch_len()
            .max(inverse.get_inplace_scratch_len());
        Fft2 {
            n,
            forward,
            inverse,
            scratch: vec![Complex::default(); scratch_len],
            transposed: vec![Complex::default(); n * n],
        }
    }

    pub fn forward2d(&mut self, data: &mut [Complex<f64>]) {
        self.both_axes(data, true);
    }

    pub fn inverse2d(&mut self, data: &mut [Complex<f64>]) {
        self.both_axes(data, false);
    }

    fn both_axes(&mut self, data: &mut [Complex<f64>], fwd: bool) {
        assert_eq!(data.len(), self.n * self.n);
        let plan = if fwd { &self.forward } else { &self.inverse };
        // Rows are contiguous; columns go through a transpose.
        plan.process_with_scratch(data, &mut self.scratch);
        transpose_square(data, &mut self.transposed, self.n);
        plan.process_with_scratch(&mut self.transposed, &mut self.scratch);
        transpose_square(&self.transposed, data, self.n);
    }
}

fn transpose_square(src: &[Complex<f64>], dst: &mut [Complex<f64>], n: usize) {
    for i in 0..n {
        for j in 0..n {
            dst[j * n + i] = src[i * n + j];
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    /// Forward of a single exponential mode concentrates on one bin.
    #[test]
    fn forward_of_pure_mode() {
        let n = 8;
        let mut fft = Fft2::new(n);
        let (k1, k2) = (2usize, 5usize);
        let mut data: Vec<Complex<f64>> = (0..n * n)
            .map(|p| {
                let (i, j) = (p / n, p % n);
                let phase =
                    2.0 * std::f64::consts::PI * (k1 * i + k2 * j) as f64 / n as f64;
                Complex::new(phase.cos(), phase.sin())
            })
            .collect();
        fft.forward2d(&mut data);
        for p in 0..n * n {
            let expect = if p == k1 * n + k2 { (n * n) as f64 } else { 0.0 };
            assert!(
                (data[p] - Complex::new(expect, 0.0)).norm() < 1e-10,
                "bin {p}: {:?}",
                data[p]
            );
        }
    }

    #[test]
    fn roundtrip_is_identity_up_to_n_squared() {
        let n = 16;
        let mut fft = Fft2::new(n);
        let orig: Vec<Complex<f64>> = (0..n * n)
            .map(|p| Complex::new((p as f64).sin(), (p as f64 * 0.7).cos()))
            .collect();
        let mut data = orig.clone();
        fft.forward2d(&mut data);
        fft.inverse2d(&mut data);
        let scale = (n * n) as f64;
        for (a, b) in data.iter().zip(&orig) {
            assert!((a / scale - b).norm() < 1e-12);
        }
    }
}
