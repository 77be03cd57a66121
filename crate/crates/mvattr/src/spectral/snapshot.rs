use base64::engine::general_purpose::STANDARD as B64;
use base64::Engine;
use num_complex::Complex;
use serde::{Deserialize, Serialize};

use super::field::SpectralVelocity;
use super::grid::Grid;
use super::SpectralError;

/// Identifies the coefficient convention of serialized fields; readers must
/// reject anything else rather than silently rescale.
pub const NORMALIZATION_TAG: &str = "amp-parseval-v1";

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SnapshotMeta {
    pub n: usize,
    pub nu: f64,
    pub time: f64,
}

#[derive(Serialize, Deserialize)]
struct SnapshotDoc {
    version: u32,
    n: usize,
    nu: f64,
    time: f64,
    normalization: String,
    /// Base64 of little-endian f64 quadruplets `re0, im0, re1, im1`,
    /// row-major over `xi_1` then `xi_2` on the full FFT grid.
    data: String,
}

/// Serializes one field to a single-line JSON document.
pub fn write_snapshot(u: &SpectralVelocity, nu: f64, time: f64) -> String {
    let n = u.grid().n();
    let mut bytes = Vec::with_capacity(n * n * 4 * 8);
    for i1 in 0..n {
        for i2 in 0..n {
            let (xi1, xi2) = (u.grid().wavenumber(i1), u.grid().wavenumber(i2));
            for c in 0..2 {
                let z = u.coeff(c, xi1, xi2);
                bytes.extend_from_slice(&z.re.to_le_bytes());
                bytes.extend_from_slice(&z.im.to_le_bytes());
            }
        }
    }
    let doc = SnapshotDoc {
        version: 1,
        n,
        nu,
        time,
        normalization: NORMALIZATION_TAG.to_string(),
        data: B64.encode(bytes),
    };
    serde_json::to_string(&doc).expect("snapshot serialization cannot fail")
}

pub fn read_snapshot(text: &str) -> Result<(SpectralVelocity, SnapshotMeta), SpectralError> {
    let doc: SnapshotDoc =
        serde_json::from_str(text).map_err(|e| SpectralError::Snapshot(e.to_string()))?;
    if doc.version != 1 {
        return Err(SpectralError::Snapshot(format!(
            "unsupported snapshot version {}",
            doc.version
        )));
    }
    if doc.normalization != NORMALIZATION_TAG {
        return Err(SpectralError::Snapshot(format!(
            "normalization tag {:?} does not match {NORMALIZATION_TAG:?}",
            doc.normalization
        )));
    }
    let grid = Grid::new(doc.n)?;
    let bytes = B64
        .decode(doc.data.as_bytes())
        .map_err(|e| SpectralError::Snapshot(format!("base64: {e}")))?;
    let expected = doc.n * doc.n * 4 * 8;
    if bytes.len() != expected {
        return Err(SpectralError::Snapshot(format!(
            "coefficient block is {} bytes, expected {expected}",
            bytes.len()
        )));
    }
    let mut u = SpectralVelocity::zero(grid);
    let mut chunks = bytes.chunks_exact(8);
    let mut next = || {
        let c = chunks.next().expect("length checked above");
        f64::from_le_bytes(c.try_into().expect("8-byte chunk"))
    };
    for i1 in 0..doc.n {
        for i2 in 0..doc.n {
            let (xi1, xi2) = (grid.wavenumber(i1), grid.wavenumber(i2));
            for c in 0..2 {
                let z = Complex::new(next(), next());
                u.set_coeff(c, xi1, xi2, z);
            }
        }
    }
    if !u.is_finite() {
        return Err(SpectralError::Snapshot("non-finite coefficients".into()));
    }
    Ok((
        u,
        SnapshotMeta {
            n: doc.n,
            nu: doc.nu,
            time: doc.time,
        },
    ))
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn roundtrip_is_bitwise() {
        let g = Grid::new(16).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let u = SpectralVelocity::random(g, &mut rng, 1.0);
        let text = write_snapshot(&u, 0.5, 2.25);
        let (back, meta) = read_snapshot(&text).unwrap();
        assert_eq!(meta, SnapshotMeta { n: 16, nu: 0.5, time: 2.25 });
        // to_le_bytes/from_le_bytes roundtrip exactly.
        assert_eq!(back.minus(&u).h_norm(), 0.0);
    }

    #[test]
    fn rejects_wrong_normalization() {
        let g = Grid::new(8).unwrap();
        let u = SpectralVelocity::zero(g);
        let text = write_snapshot(&u, 1.0, 0.0).replace(NORMALIZATION_TAG, "other-tag");
        assert!(read_snapshot(&text).is_err());
    }

    #[test]
    fn rejects_truncated_payload() {
        let g = Grid::new(8).unwrap();
        let u = SpectralVelocity::zero(g);
        let text = write_snapshot(&u, 1.0, 0.0);
        let doc: serde_json::Value = serde_json::from_str(&text).unwrap();
        let data = doc["data"].as_str().unwrap();
        let truncated = text.replace(data, &data[..data.len() / 2]);
        assert!(read_snapshot(&truncated).is_err());
    }
}
