use serde::{Deserialize, Serialize};

use super::SpectralError;

/// Wavevector bookkeeping for an `n x n` collocation grid on `[0, 2pi)^2`.
///
/// Coefficients live on the full FFT grid in standard layout (index `i`
/// carries wavenumber `i` for `i <= n/2` and `i - n` above). The retained
/// Galerkin band is `max(|xi_1|, |xi_2|) <= cutoff()` with
/// `cutoff = floor(n/3)`; for every supported `n` this satisfies
/// `3*cutoff < n`, so pseudo-spectral products of band-limited fields are
/// alias-free on the band.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Grid {
    n: usize,
}

impl Grid {
    /// Grid sizes are powers of two between 8 and 64.
    pub fn new(n: usize) -> Result<Self, SpectralError> {
        if !(8..=64).contains(&n) || !n.is_power_of_two() {
            return Err(SpectralError::BadGridSize { n });
        }
        Ok(Grid { n })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    /// Number of stored coefficients per component.
    pub fn len(&self) -> usize {
        self.n * self.n
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    /// Dealias cutoff of the 2/3 rule.
    pub fn cutoff(&self) -> i64 {
        (self.n / 3) as i64
    }

    /// Wavenumber carried by storage index `i`.
    pub fn wavenumber(&self, i: usize) -> i64 {
        debug_assert!(i < self.n);
        if i <= self.n / 2 {
            i as i64
        } else {
            i as i64 - self.n as i64
        }
    }

    /// Storage index carrying wavenumber `xi` (must fit the grid).
    pub fn index_of(&self, xi: i64) -> usize {
        debug_assert!(xi.unsigned_abs() as usize <= self.n / 2);
        if xi >= 0 {
            xi as usize
        } else {
            (xi + self.n as i64) as usize
        }
    }

    /// Flat offset of mode `(xi1, xi2)`, row-major over `xi1` then `xi2`.
    pub fn offset(&self, xi1: i64, xi2: i64) -> usize {
        self.index_of(xi1) * self.n + self.index_of(xi2)
    }

    pub fn retained(&self, xi1: i64, xi2: i64) -> bool {
        let k = self.cutoff();
        xi1.abs() <= k && xi2.abs() <= k
    }

    /// Retained modes in storage order (the order used by flat embeddings
    /// and snapshots must stay in sync with this).
    pub fn modes(&self) -> impl Iterator<Item = (i64, i64)> + '_ {
        let n = self.n;
        (0..n).flat_map(move |i1| (0..n).map(move |i2| (self.wavenumber(i1), self.wavenumber(i2))))
    }

    /// Retained modes only, storage order.
    pub fn retained_modes(&self) -> impl Iterator<Item = (i64, i64)> + '_ {
        self.modes().filter(|&(a, b)| self.retained(a, b))
    }

    /// Number of retained modes.
    pub fn retained_len(&self) -> usize {
        let k = (2 * self.cutoff() + 1) as usize;
        k * k
    }
}
