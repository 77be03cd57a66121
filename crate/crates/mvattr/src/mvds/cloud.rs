use serde::{Deserialize, Serialize};

use super::MvdsError;

/// Which norm the stored coordinates were computed in. The tag is
/// provenance: coordinates are always plain Euclidean in the embedding, the
/// embedding itself is what realizes the norm.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum MetricTag {
    H,
    V,
    Euclidean,
}

/// A finite set of points in a fixed-dimension embedding.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct PointCloud {
    pub dim: usize,
    pub metric: MetricTag,
    pub points: Vec<Vec<f64>>,
}

impl PointCloud {
    pub fn new(dim: usize, metric: MetricTag) -> PointCloud {
        PointCloud { dim, metric, points: Vec::new() }
    }

    pub fn from_points(
        dim: usize,
        metric: MetricTag,
        points: Vec<Vec<f64>>,
    ) -> Result<PointCloud, MvdsError> {
        if let Some(p) = points.iter().find(|p| p.len() != dim) {
            return Err(MvdsError::DimensionMismatch { expected: dim, got: p.len() });
        }
        Ok(PointCloud { dim, metric, points })
    }

    pub fn push(&mut self, p: Vec<f64>) -> Result<(), MvdsError> {
        if p.len() != self.dim {
            return Err(MvdsError::DimensionMismatch { expected: self.dim, got: p.len() });
        }
        self.points.push(p);
        Ok(())
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }
}

fn dist_sq(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum()
}

/// Asymmetric Hausdorff distance `sup_{a in A} inf_{b in B} |a - b|`.
///
/// Plain double loop over squared distances; the square root is taken once
/// at the end. Small clouds only, by design.
pub fn hausdorff_semidist(a: &PointCloud, b: &PointCloud) -> Result<f64, MvdsError> {
    if a.dim != b.dim {
        return Err(MvdsError::DimensionMismatch { expected: a.dim, got: b.dim });
    }
    if a.is_empty() || b.is_empty() {
        return Err(MvdsError::EmptyCloud);
    }
    let mut sup_sq = 0.0f64;
    for p in &a.points {
        let mut inf_sq = f64::INFINITY;
        for q in &b.points {
            inf_sq = inf_sq.min(dist_sq(p, q));
        }
        sup_sq = sup_sq.max(inf_sq);
    }
    Ok(sup_sq.sqrt())
}

/// Symmetric Hausdorff distance.
pub fn hausdorff_dist(a: &PointCloud, b: &PointCloud) -> Result<f64, MvdsError> {
    Ok(hausdorff_semidist(a, b)?.max(hausdorff_semidist(b, a)?))
}

/// Diameter of the worst cluster after greedy farthest-point partition into
/// `budget` clusters. Greedy selection starts from the first point and
/// breaks ties toward the lower index, so the result is deterministic. The
/// value is within a factor two of the best possible `budget`-covering.
pub fn covering_diameter(cloud: &PointCloud, budget: usize) -> Result<f64, MvdsError> {
    if budget == 0 {
        return Err(MvdsError::BadBudget);
    }
    if cloud.is_empty() {
        return Err(MvdsError::EmptyCloud);
    }
    let pts = &cloud.points;
    let mut centers = vec![0usize];
    let mut near_sq: Vec<f64> = pts.iter().map(|p| dist_sq(p, &pts[0])).collect();
    while centers.len() < budget.min(pts.len()) {
        let mut best = 0usize;
        let mut best_d = -1.0;
        for (i, &d) in near_sq.iter().enumerate() {
            if d > best_d {
                best_d = d;
                best = i;
            }
        }
        if best_d == 0.0 {
            break; // every point already coincides with a center
        }
        centers.push(best);
        for (i, d) in near_sq.iter_mut().enumerate() {
            *d = d.min(dist_sq(&pts[i], &pts[best]));
        }
    }

    // Assign to the nearest center (ties toward the earlier center), then
    // take the exact diameter of the worst cluster.
    let mut owner = vec![0usize; pts.len()];
    for (i, p) in pts.iter().enumerate() {
        let mut best = 0usize;
        let mut best_d = f64::INFINITY;
        for (ci, &c) in centers.iter().enumerate() {
            let d = dist_sq(p, &pts[c]);
            if d < best_d {
                best_d = d;
                best = ci;
            }
        }
        owner[i] = best;
    }
    let mut worst_sq = 0.0f64;
    for ci in 0..centers.len() {
        let members: Vec<usize> = (0..pts.len()).filter(|&i| owner[i] == ci).collect();
        for (a, &i) in members.iter().enumerate() {
            for &j in &members[a + 1..] {
                worst_sq = worst_sq.max(dist_sq(&pts[i], &pts[j]));
            }
        }
    }
    Ok(worst_sq.sqrt())
}
