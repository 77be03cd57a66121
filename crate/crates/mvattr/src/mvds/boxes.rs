use std::collections::BTreeSet;

use serde::{Deserialize, Serialize};

use super::MvdsError;

/// A uniform axis-aligned grid of half-open cells
/// `[origin + i*res, origin + (i+1)*res)` covering a box-shaped domain.
///
/// `resolution` is the full side length of a cell, identical on every axis.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Geometry {
    origin: Vec<f64>,
    resolution: f64,
    cells_per_axis: Vec<usize>,
}

impl Geometry {
    pub fn new(
        origin: Vec<f64>,
        resolution: f64,
        cells_per_axis: Vec<usize>,
    ) -> Result<Geometry, MvdsError> {
        if !(resolution.is_finite() && resolution > 0.0) {
            return Err(MvdsError::BadGeometry(format!(
                "resolution {resolution} must be positive and finite"
            )));
        }
        if origin.is_empty() || origin.len() != cells_per_axis.len() {
            return Err(MvdsError::BadGeometry(
                "origin and cells_per_axis must agree on a positive dimension".into(),
            ));
        }
        if origin.iter().any(|o| !o.is_finite()) {
            return Err(MvdsError::BadGeometry("origin must be finite".into()));
        }
        if cells_per_axis.iter().any(|&c| c == 0) {
            return Err(MvdsError::BadGeometry("every axis needs at least one cell".into()));
        }
        Ok(Geometry { origin, resolution, cells_per_axis })
    }

    pub fn dim(&self) -> usize {
        self.origin.len()
    }

    pub fn resolution(&self) -> f64 {
        self.resolution
    }

    pub fn origin(&self) -> &[f64] {
        &self.origin
    }

    pub fn cells_per_axis(&self) -> &[usize] {
        &self.cells_per_axis
    }

    pub fn contains_cell(&self, cell: &[i64]) -> bool {
        cell.len() == self.dim()
            && cell
                .iter()
                .zip(&self.cells_per_axis)
                .all(|(&i, &n)| i >= 0 && (i as usize) < n)
    }

    pub fn cell_low(&self, cell: &[i64]) -> Vec<f64> {
        cell.iter()
            .zip(&self.origin)
            .map(|(&i, &o)| o + i as f64 * self.resolution)
            .collect()
    }

    pub fn cell_center(&self, cell: &[i64]) -> Vec<f64> {
        cell.iter()
            .zip(&self.origin)
            .map(|(&i, &o)| o + (i as f64 + 0.5) * self.resolution)
            .collect()
    }

    /// Cell containing `point`, or `None` if the point is outside the domain.
    pub fn cell_of(&self, point: &[f64]) -> Option<Vec<i64>> {
        if point.len() != self.dim() {
            return None;
        }
        let mut cell = Vec::with_capacity(self.dim());
        for ((&x, &o), &n) in point.iter().zip(&self.origin).zip(&self.cells_per_axis) {
            let i = ((x - o) / self.resolution).floor();
            if i < 0.0 || i >= n as f64 {
                return None;
            }
            cell.push(i as i64);
        }
        Some(cell)
    }

    pub fn total_cells(&self) -> usize {
        self.cells_per_axis.iter().product()
    }
}

/// A finite union of grid cells, ordered for deterministic iteration.
#[derive(Clone, Debug, PartialEq)]
pub struct BoxCollection {
    geom: Geometry,
    cells: BTreeSet<Vec<i64>>,
}

impl BoxCollection {
    pub fn empty(geom: Geometry) -> BoxCollection {
        BoxCollection { geom, cells: BTreeSet::new() }
    }

    /// Every cell of the domain.
    pub fn full(geom: Geometry) -> BoxCollection {
        let mut cells = BTreeSet::new();
        let dim = geom.dim();
        let mut cur = vec![0i64; dim];
        'outer: loop {
            cells.insert(cur.clone());
            for axis in (0..dim).rev() {
                cur[axis] += 1;
                if (cur[axis] as usize) < geom.cells_per_axis()[axis] {
                    continue 'outer;
                }
                cur[axis] = 0;
            }
            break;
        }
        BoxCollection { geom, cells }
    }

    /// Marks the cell containing each point.
    pub fn from_points(geom: Geometry, points: &[Vec<f64>]) -> Result<BoxCollection, MvdsError> {
        let mut out = BoxCollection::empty(geom);
        for p in points {
            let cell = out
                .geom
                .cell_of(p)
                .ok_or_else(|| MvdsError::PointOutsideDomain { point: p.clone() })?;
            out.cells.insert(cell);
        }
        Ok(out)
    }

    pub(crate) fn from_cells(
        geom: Geometry,
        cells: BTreeSet<Vec<i64>>,
    ) -> Result<BoxCollection, MvdsError> {
        if let Some(cell) = cells.iter().find(|c| !geom.contains_cell(c)) {
            return Err(MvdsError::CellOutsideDomain { cell: cell.clone() });
        }
        Ok(BoxCollection { geom, cells })
    }

    pub fn geometry(&self) -> &Geometry {
        &self.geom
    }

    pub fn insert(&mut self, cell: Vec<i64>) -> Result<(), MvdsError> {
        if !self.geom.contains_cell(&cell) {
            return Err(MvdsError::CellOutsideDomain { cell });
        }
        self.cells.insert(cell);
        Ok(())
    }

    pub fn contains(&self, cell: &[i64]) -> bool {
        self.cells.contains(cell)
    }

    pub fn len(&self) -> usize {
        self.cells.len()
    }

    pub fn is_empty(&self) -> bool {
        self.cells.is_empty()
    }

    pub fn cells(&self) -> impl Iterator<Item = &Vec<i64>> {
        self.cells.iter()
    }

    pub fn intersect(&self, other: &BoxCollection) -> Result<BoxCollection, MvdsError> {
        if self.geom != other.geom {
            return Err(MvdsError::GeometryMismatch);
        }
        Ok(BoxCollection {
            geom: self.geom.clone(),
            cells: self.cells.intersection(&other.cells).cloned().collect(),
        })
    }

    pub fn union(&self, other: &BoxCollection) -> Result<BoxCollection, MvdsError> {
        if self.geom != other.geom {
            return Err(MvdsError::GeometryMismatch);
        }
        Ok(BoxCollection {
            geom: self.geom.clone(),
            cells: self.cells.union(&other.cells).cloned().collect(),
        })
    }

    pub fn is_subset(&self, other: &BoxCollection) -> bool {
        self.geom == other.geom && self.cells.is_subset(&other.cells)
    }

    /// Cell centers in lexicographic cell order.
    pub fn centers(&self) -> Vec<Vec<f64>> {
        self.cells.iter().map(|c| self.geom.cell_center(c)).collect()
    }

    /// Per-axis extent of the union of cells (cell count times resolution).
    pub fn bounding_extent(&self) -> Option<Vec<f64>> {
        if self.cells.is_empty() {
            return None;
        }
        let dim = self.geom.dim();
        let mut lo = vec![i64::MAX; dim];
        let mut hi = vec![i64::MIN; dim];
        for cell in &self.cells {
            for a in 0..dim {
                lo[a] = lo[a].min(cell[a]);
                hi[a] = hi[a].max(cell[a]);
            }
        }
        Some(
            (0..dim)
                .map(|a| (hi[a] - lo[a] + 1) as f64 * self.geom.resolution())
                .collect(),
        )
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn line(cells: usize) -> Geometry {
        Geometry::new(vec![-1.0], 2.0 / cells as f64, vec![cells]).unwrap()
    }

    #[test]
    fn geometry_validates_inputs() {
        assert!(Geometry::new(vec![0.0], 0.0, vec![4]).is_err());
        assert!(Geometry::new(vec![0.0, 0.0], 0.5, vec![4]).is_err());
        assert!(Geometry::new(vec![], 0.5, vec![]).is_err());
        assert!(Geometry::new(vec![0.0], 0.5, vec![0]).is_err());
    }

    #[test]
    fn cells_are_half_open() {
        let g = line(4);
        assert_eq!(g.cell_of(&[-1.0]), Some(vec![0]));
        assert_eq!(g.cell_of(&[-0.5]), Some(vec![1]));
        assert_eq!(g.cell_of(&[0.5 - 1e-12]), Some(vec![2]));
        assert_eq!(g.cell_of(&[1.0]), None);
        assert_eq!(g.cell_of(&[-1.1]), None);
    }

    #[test]
    fn centers_and_lows_are_consistent() {
        let g = line(4);
        assert_eq!(g.cell_low(&[1]), vec![-0.5]);
        assert_eq!(g.cell_center(&[1]), vec![-0.25]);
        let c = BoxCollection::from_points(g, &[vec![-0.3], vec![0.7]]).unwrap();
        assert_eq!(c.centers(), vec![vec![-0.25], vec![0.75]]);
    }

    #[test]
    fn set_algebra_respects_geometry() {
        let g = line(4);
        let a = BoxCollection::from_points(g.clone(), &[vec![-0.9], vec![0.1]]).unwrap();
        let b = BoxCollection::from_points(g.clone(), &[vec![0.1], vec![0.9]]).unwrap();
        let i = a.intersect(&b).unwrap();
        assert_eq!(i.len(), 1);
        assert!(i.contains(&[2]));
        let u = a.union(&b).unwrap();
        assert_eq!(u.len(), 3);
        assert!(i.is_subset(&a) && i.is_subset(&b));
        assert!(a.is_subset(&u) && b.is_subset(&u));

        let other = line(8);
        let c = BoxCollection::empty(other);
        assert_eq!(a.intersect(&c), Err(MvdsError::GeometryMismatch));
        assert!(!c.is_subset(&a));
    }

    #[test]
    fn full_covers_the_domain() {
        let g = Geometry::new(vec![0.0, 0.0], 0.5, vec![3, 2]).unwrap();
        let f = BoxCollection::full(g.clone());
        assert_eq!(f.len(), 6);
        assert_eq!(f.len(), g.total_cells());
        assert!(f.contains(&[2, 1]));
        assert!(!f.contains(&[3, 0]));
    }

    #[test]
    fn extent_counts_cells_per_axis() {
        let g = line(8);
        let c = BoxCollection::from_points(g, &[vec![-0.2], vec![0.2]]).unwrap();
        let e = c.bounding_extent().unwrap();
        assert!((e[0] - 0.5).abs() < 1e-15);
    }

    #[test]
    fn out_of_domain_cells_are_rejected() {
        let g = line(4);
        let mut c = BoxCollection::empty(g);
        assert!(c.insert(vec![3]).is_ok());
        assert!(matches!(c.insert(vec![4]), Err(MvdsError::CellOutsideDomain { .. })));
        assert!(matches!(c.insert(vec![-1]), Err(MvdsError::CellOutsideDomain { .. })));
    }
}
