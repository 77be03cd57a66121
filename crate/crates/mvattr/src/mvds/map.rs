use std::collections::BTreeSet;

use super::boxes::{BoxCollection, Geometry};
use super::cloud::{hausdorff_semidist, MetricTag, PointCloud};
use super::MvdsError;

/// One selection of a set-valued map together with an expansion bound.
///
/// The cell image of a branch is built from the image of the cell center
/// padded by `expansion` times the cell half-width, so any Lipschitz bound
/// for the branch works as `expansion` and the covering stays rigorous.
pub struct Branch {
    func: Box<dyn Fn(&[f64]) -> Vec<f64> + Send + Sync>,
    expansion: f64,
}

impl Branch {
    pub fn new(
        func: impl Fn(&[f64]) -> Vec<f64> + Send + Sync + 'static,
        expansion: f64,
    ) -> Branch {
        assert!(expansion.is_finite() && expansion >= 0.0, "expansion must be a finite bound");
        Branch { func: Box::new(func), expansion }
    }

    pub fn eval(&self, x: &[f64]) -> Vec<f64> {
        (self.func)(x)
    }

    pub fn expansion(&self) -> f64 {
        self.expansion
    }
}

/// A set-valued map acting on box collections, one branch per selection.
pub struct CellMapping {
    branches: Vec<Branch>,
}

impl CellMapping {
    pub fn new(branches: Vec<Branch>) -> CellMapping {
        assert!(!branches.is_empty(), "a mapping needs at least one branch");
        CellMapping { branches }
    }

    pub fn branches(&self) -> &[Branch] {
        &self.branches
    }

    /// Cells overlapping the padded branch images of the center of `cell`.
    /// Intervals are treated right-open, matching the cell convention, and a
    /// zero-width interval marks exactly the cell containing its point.
    pub fn cell_image(&self, geom: &Geometry, cell: &[i64]) -> BTreeSet<Vec<i64>> {
        let center = geom.cell_center(cell);
        let half = 0.5 * geom.resolution();
        let mut out = BTreeSet::new();
        for branch in &self.branches {
            let y = branch.eval(&center);
            debug_assert_eq!(y.len(), geom.dim());
            let r = branch.expansion * half;
            let ranges: Vec<(i64, i64)> = y
                .iter()
                .zip(geom.origin())
                .map(|(&yc, &o)| {
                    let lo = yc - r;
                    let hi = yc + r;
                    let first = ((lo - o) / geom.resolution()).floor() as i64;
                    let last = if hi > lo {
                        (((hi - o) / geom.resolution()).ceil() as i64 - 1).max(first)
                    } else {
                        first
                    };
                    (first, last)
                })
                .collect();
            push_product(&ranges, &mut out);
        }
        out
    }

    /// Image of a collection: the union of all cell images. Errs when the
    /// image pokes outside the domain, because a truncated covering would
    /// silently drop dynamics.
    pub fn image(&self, set: &BoxCollection) -> Result<BoxCollection, MvdsError> {
        let geom = set.geometry().clone();
        let mut cells = BTreeSet::new();
        for cell in set.cells() {
            cells.extend(self.cell_image(&geom, cell));
        }
        if cells.iter().any(|c| !geom.contains_cell(c)) {
            return Err(MvdsError::ImageEscapesDomain);
        }
        BoxCollection::from_cells(geom, cells)
    }
}

fn push_product(ranges: &[(i64, i64)], out: &mut BTreeSet<Vec<i64>>) {
    let mut cur = Vec::with_capacity(ranges.len());
    fn rec(ranges: &[(i64, i64)], cur: &mut Vec<i64>, out: &mut BTreeSet<Vec<i64>>) {
        match ranges.split_first() {
            None => {
                out.insert(cur.clone());
            }
            Some((&(a, b), rest)) => {
                for i in a..=b {
                    cur.push(i);
                    rec(rest, cur, out);
                    cur.pop();
                }
            }
        }
    }
    rec(ranges, &mut cur, out);
}

fn compositions(
    branches: &[&dyn Fn(&[f64]) -> Vec<f64>],
    x: &[f64],
    depth: usize,
    cap: usize,
    out: &mut Vec<Vec<f64>>,
) {
    if out.len() >= cap {
        return;
    }
    if depth == 0 {
        out.push(x.to_vec());
        return;
    }
    for b in branches {
        compositions(branches, &b(x), depth - 1, cap, out);
        if out.len() >= cap {
            return;
        }
    }
}

/// Checks the composition law of a set-valued map at a point: applying all
/// branch sequences of length `n + m` must reach the same states as applying
/// length-`m` sequences first and length-`n` sequences after. Enumeration is
/// depth-first in branch order and truncated at `cap` states on both sides,
/// which preserves the correspondence between the two enumerations.
///
/// Returns the symmetric point-set discrepancy, which is zero (exactly, in
/// floating point) when the law holds.
pub fn semigroup_property_check(
    branches: &[&dyn Fn(&[f64]) -> Vec<f64>],
    x: &[f64],
    n: usize,
    m: usize,
    cap: usize,
) -> Result<f64, MvdsError> {
    if branches.is_empty() || cap == 0 {
        return Err(MvdsError::BadBudget);
    }
    let mut joint = Vec::new();
    compositions(branches, x, n + m, cap, &mut joint);

    let mut staged = Vec::new();
    let mut inner = Vec::new();
    compositions(branches, x, m, cap, &mut inner);
    for y in &inner {
        compositions(branches, y, n, cap, &mut staged);
        if staged.len() >= cap {
            break;
        }
    }
    staged.truncate(cap);

    let a = PointCloud::from_points(x.len(), MetricTag::Euclidean, joint)?;
    let b = PointCloud::from_points(x.len(), MetricTag::Euclidean, staged)?;
    Ok(hausdorff_semidist(&a, &b)?.max(hausdorff_semidist(&b, &a)?))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn line(cells: usize) -> Geometry {
        Geometry::new(vec![-1.0], 2.0 / cells as f64, vec![cells]).unwrap()
    }

    #[test]
    fn identity_branch_maps_each_cell_to_itself() {
        let g = line(1 << 10);
        let map = CellMapping::new(vec![Branch::new(|x| x.to_vec(), 1.0)]);
        for &i in &[0i64, 1, 511, 512, 1023] {
            let img = map.cell_image(&g, &[i]);
            assert_eq!(img.into_iter().collect::<Vec<_>>(), vec![vec![i]]);
        }
    }

    #[test]
    fn zero_width_image_marks_one_cell() {
        let g = line(4);
        // Constant map onto a cell boundary; the point lands in the upper cell.
        let map = CellMapping::new(vec![Branch::new(|_| vec![0.0], 0.0)]);
        let img = map.cell_image(&g, &[0]);
        assert_eq!(img.into_iter().collect::<Vec<_>>(), vec![vec![2]]);
    }

    #[test]
    fn contraction_image_shrinks_collections() {
        let g = line(64);
        let map = CellMapping::new(vec![Branch::new(|x| vec![0.5 * x[0]], 0.5)]);
        let full = BoxCollection::full(g);
        let img = map.image(&full).unwrap();
        assert!(img.is_subset(&full));
        assert!(img.len() < full.len());
        // The image covers [-0.5, 0.5], i.e. half the cells.
        assert_eq!(img.len(), 32);
    }

    #[test]
    fn escaping_image_is_an_error() {
        let g = line(4);
        let map = CellMapping::new(vec![Branch::new(|x| vec![x[0] + 1.5], 1.0)]);
        let full = BoxCollection::full(g);
        assert_eq!(map.image(&full).unwrap_err(), MvdsError::ImageEscapesDomain);
    }

    #[test]
    fn two_dimensional_products_mark_rectangles() {
        let g = Geometry::new(vec![0.0, 0.0], 0.25, vec![8, 8]).unwrap();
        let map = CellMapping::new(vec![Branch::new(|x| vec![x[0], x[1]], 3.0)]);
        // Expansion 3 with half-width 0.125 pads by 0.375: a 3x3 block +
        // right-open trimming on the upper edges.
        let img = map.cell_image(&g, &[4, 4]);
        assert_eq!(img.len(), 16);
        assert!(img.contains(&vec![3, 3]) && img.contains(&vec![6, 6]));
    }

    #[test]
    fn semigroup_law_holds_exactly_for_affine_branches() {
        let half: &dyn Fn(&[f64]) -> Vec<f64> = &|x| vec![0.5 * x[0] - 0.5];
        let other: &dyn Fn(&[f64]) -> Vec<f64> = &|x| vec![0.5 * x[0] + 0.5];
        let d = semigroup_property_check(&[half, other], &[0.3], 3, 2, 1 << 12).unwrap();
        assert_eq!(d, 0.0);
        // Capped enumeration still matches because both sides truncate the
        // same depth-first order.
        let d = semigroup_property_check(&[half, other], &[0.3], 4, 3, 20).unwrap();
        assert_eq!(d, 0.0);
    }

    #[test]
    fn semigroup_check_flags_a_broken_law() {
        // A "composition" that depends on how time is split cannot pass: we
        // fake it by comparing n+m steps of f with m steps of g then n of f.
        let f: &dyn Fn(&[f64]) -> Vec<f64> = &|x| vec![0.5 * x[0] + 1.0];
        let g: &dyn Fn(&[f64]) -> Vec<f64> = &|x| vec![0.5 * x[0] - 1.0];
        let mut joint = Vec::new();
        compositions(&[f], &[0.0], 3, 10, &mut joint);
        let mut staged = Vec::new();
        let mut inner = Vec::new();
        compositions(&[g], &[0.0], 1, 10, &mut inner);
        compositions(&[f], &inner[0], 2, 10, &mut staged);
        let a = PointCloud::from_points(1, MetricTag::Euclidean, joint).unwrap();
        let b = PointCloud::from_points(1, MetricTag::Euclidean, staged).unwrap();
        let d = hausdorff_semidist(&a, &b).unwrap();
        assert!(d > 0.1);
    }
}
