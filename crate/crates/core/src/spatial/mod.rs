//! Spatial indexing: kd-trees with ball range search, nearest-point search,
//! dual-tree all-nearest-neighbors and farthest-pair queries, plus the
//! union-find used to mark subtrees that belong to a single cluster.

mod kdtree;
mod query;
mod union_find;

pub use kdtree::{KdTree, NodeId, DEFAULT_LEAF_CAPACITY, NO_MARK};
pub(crate) use query::nearest_point_skipping;
pub use query::{
    all_nearest_neighbors, ball_overlaps_box, farthest_pair_distance, mark_uniform_clusters,
    nearest_point, range_visit, range_visit_marked, range_visit_seq, MarkedHit,
};
pub use union_find::UnionFind;

use crate::{Error, Result};

/// `n` points in `d` dimensions, stored row-major.
///
/// Point indices `0..n` are the identity of the points for the whole run.
#[derive(Debug, Clone, PartialEq)]
pub struct PointSet {
    dim: usize,
    coords: Vec<f64>,
}

impl PointSet {
    pub fn new(dim: usize, coords: Vec<f64>) -> Result<Self> {
        if dim == 0 {
            return Err(Error::invalid("dimension must be at least 1"));
        }
        if coords.is_empty() {
            return Err(Error::invalid("point set is empty"));
        }
        if !coords.len().is_multiple_of(dim) {
            return Err(Error::invalid(format!(
                "{} coordinates do not split into rows of {dim}",
                coords.len()
            )));
        }
        if let Some(pos) = coords.iter().position(|c| !c.is_finite()) {
            return Err(Error::invalid(format!(
                "non-finite coordinate in point {}",
                pos / dim
            )));
        }
        Ok(PointSet { dim, coords })
    }

    pub fn from_rows<R: AsRef<[f64]>>(rows: &[R]) -> Result<Self> {
        let dim = rows.first().map(|r| r.as_ref().len()).unwrap_or(0);
        let mut coords = Vec::with_capacity(rows.len() * dim);
        for (i, r) in rows.iter().enumerate() {
            if r.as_ref().len() != dim {
                return Err(Error::invalid(format!("row {i} has the wrong width")));
            }
            coords.extend_from_slice(r.as_ref());
        }
        PointSet::new(dim, coords)
    }

    #[inline]
    pub fn len(&self) -> usize {
        self.coords.len() / self.dim
    }

    #[inline]
    pub fn is_empty(&self) -> bool {
        self.coords.is_empty()
    }

    #[inline]
    pub fn dim(&self) -> usize {
        self.dim
    }

    #[inline]
    pub fn point(&self, i: usize) -> &[f64] {
        &self.coords[i * self.dim..(i + 1) * self.dim]
    }

    pub fn coords(&self) -> &[f64] {
        &self.coords
    }

    pub fn iter(&self) -> impl ExactSizeIterator<Item = &[f64]> + '_ {
        self.coords.chunks_exact(self.dim)
    }

    /// Largest absolute coordinate; used to scale floating-point slack.
    pub fn magnitude(&self) -> f64 {
        self.coords.iter().fold(0.0f64, |m, c| m.max(c.abs()))
    }
}

/// A closed ball.
#[derive(Debug, Clone, PartialEq)]
pub struct Ball {
    pub center: Vec<f64>,
    pub radius: f64,
}

impl Ball {
    pub fn new(center: Vec<f64>, radius: f64) -> Result<Self> {
        if radius.is_nan() || radius < 0.0 {
            return Err(Error::invalid("ball radius must be nonnegative"));
        }
        Ok(Ball { center, radius })
    }

    pub fn contains(&self, p: &[f64]) -> bool {
        squared_distance(&self.center, p) <= self.radius * self.radius
    }
}

/// Axis-aligned box, `lower[k] <= upper[k]`.
#[derive(Debug, Clone, PartialEq)]
pub struct BoundingBox {
    pub lower: Vec<f64>,
    pub upper: Vec<f64>,
}

impl BoundingBox {
    pub fn new(lower: Vec<f64>, upper: Vec<f64>) -> Result<Self> {
        if lower.len() != upper.len()
            || lower
                .iter()
                .zip(&upper)
                .any(|(l, u)| l.is_nan() || u.is_nan() || l > u)
        {
            return Err(Error::invalid(
                "box needs lower <= upper in every dimension",
            ));
        }
        Ok(BoundingBox { lower, upper })
    }

    pub fn of_points<'a>(mut points: impl Iterator<Item = &'a [f64]>) -> Option<Self> {
        let first = points.next()?;
        let mut lower = first.to_vec();
        let mut upper = first.to_vec();
        for p in points {
            for k in 0..p.len() {
                lower[k] = lower[k].min(p[k]);
                upper[k] = upper[k].max(p[k]);
            }
        }
        Some(BoundingBox { lower, upper })
    }

    pub fn contains(&self, p: &[f64]) -> bool {
        p.iter()
            .zip(self.lower.iter().zip(&self.upper))
            .all(|(x, (l, u))| l <= x && x <= u)
    }

    /// Squared distance from `p` to the nearest point of the box.
    pub fn min_squared_distance(&self, p: &[f64]) -> f64 {
        point_box_min_sq(p, &self.lower, &self.upper)
    }
}

#[inline]
pub fn squared_distance(a: &[f64], b: &[f64]) -> f64 {
    a.iter()
        .zip(b)
        .map(|(x, y)| {
            let t = x - y;
            t * t
        })
        .sum()
}

#[inline]
pub fn distance(a: &[f64], b: &[f64]) -> f64 {
    squared_distance(a, b).sqrt()
}

#[inline]
pub(crate) fn point_box_min_sq(p: &[f64], lower: &[f64], upper: &[f64]) -> f64 {
    let mut s = 0.0;
    for k in 0..p.len() {
        let t = if p[k] < lower[k] {
            lower[k] - p[k]
        } else if p[k] > upper[k] {
            p[k] - upper[k]
        } else {
            0.0
        };
        s += t * t;
    }
    s
}
