use super::boxes::BoxCollection;
use super::map::CellMapping;
use super::MvdsError;

/// Omega-limit covering of a positively invariant collection.
///
/// Iterates `next = image(cur) intersect cur` to its fixed point. Each sweep
/// removes cells that the dynamics cannot return to, so the sequence is
/// decreasing and stabilizes after at most `start.len()` sweeps; `max_sweeps`
/// only guards against a misconfigured mapping.
pub fn omega_limit(
    map: &CellMapping,
    start: &BoxCollection,
    max_sweeps: usize,
) -> Result<BoxCollection, MvdsError> {
    let first = map.image(start)?;
    if !first.is_subset(start) {
        return Err(MvdsError::NotPositivelyInvariant);
    }
    let mut cur = start.clone();
    for _ in 0..max_sweeps {
        let next = map.image(&cur)?.intersect(&cur)?;
        if next == cur {
            return Ok(cur);
        }
        cur = next;
    }
    Err(MvdsError::NoConvergence { sweeps: max_sweeps })
}
