use crate::linkage::{
    avg1_distance, avg2_distance, complete_distance, merged_centroid, merged_variance,
    ward_distance,
};
use crate::spatial::{farthest_pair_distance, KdTree, PointSet, DEFAULT_LEAF_CAPACITY};
use crate::Linkage;
use std::sync::atomic::{AtomicU64, Ordering};
use std::sync::OnceLock;

// Complete linkage switches from a pair scan to the dual-tree farthest-pair
// query above this many point pairs.
const COMPLETE_BRUTE_PAIRS: usize = 4096;

/// Per-cluster data indexed by slot. A cluster lives in the slot of its
/// smallest point index; merging keeps the smaller slot.
pub(crate) struct Clusters<'p> {
    points: &'p PointSet,
    kind: Linkage,
    dim: usize,
    size: Vec<u32>,
    centroid: Vec<f64>,
    variance: Vec<f64>,
    // Sorted member lists; kept only where distances need the points.
    members: Vec<Vec<u32>>,
    trees: Vec<OnceLock<KdTree>>,
    pub(crate) point_evals: AtomicU64,
}

impl<'p> Clusters<'p> {
    pub(crate) fn new(points: &'p PointSet, kind: Linkage) -> Self {
        let n = points.len();
        let needs_members = matches!(kind, Linkage::Complete | Linkage::Avg1);
        Clusters {
            points,
            kind,
            dim: points.dim(),
            size: vec![1; n],
            centroid: points.coords().to_vec(),
            variance: vec![0.0; n],
            members: if needs_members {
                (0..n as u32).map(|i| vec![i]).collect()
            } else {
                Vec::new()
            },
            trees: if kind == Linkage::Complete {
                (0..n).map(|_| OnceLock::new()).collect()
            } else {
                Vec::new()
            },
            point_evals: AtomicU64::new(0),
        }
    }

    #[inline]
    pub(crate) fn size(&self, s: u32) -> usize {
        self.size[s as usize] as usize
    }

    #[inline]
    pub(crate) fn centroid(&self, s: u32) -> &[f64] {
        let s = s as usize;
        &self.centroid[s * self.dim..(s + 1) * self.dim]
    }

    #[cfg(test)]
    pub(crate) fn members(&self, s: u32) -> Option<&[u32]> {
        self.members.get(s as usize).map(Vec::as_slice)
    }

    fn tree(&self, s: u32) -> &KdTree {
        self.trees[s as usize].get_or_init(|| {
            KdTree::from_subset(
                self.points,
                &self.members[s as usize],
                DEFAULT_LEAF_CAPACITY,
            )
            .expect("clusters are nonempty")
        })
    }

    /// Distance between two live clusters. Arguments are put in slot order
    /// first so the value does not depend on which side asks.
    pub(crate) fn distance(&self, a: u32, b: u32) -> f64 {
        let (a, b) = (a.min(b), a.max(b));
        let (na, nb) = (self.size(a), self.size(b));
        match self.kind {
            Linkage::Ward => {
                ward_distance(na as f64, self.centroid(a), nb as f64, self.centroid(b))
            }
            Linkage::Avg2 => avg2_distance(
                na as f64,
                self.centroid(a),
                self.variance[a as usize],
                nb as f64,
                self.centroid(b),
                self.variance[b as usize],
            ),
            Linkage::Avg1 => {
                self.point_evals
                    .fetch_add((na * nb) as u64, Ordering::Relaxed);
                avg1_distance(
                    self.points,
                    &self.members[a as usize],
                    &self.members[b as usize],
                )
            }
            Linkage::Complete => {
                if na * nb <= COMPLETE_BRUTE_PAIRS {
                    self.point_evals
                        .fetch_add((na * nb) as u64, Ordering::Relaxed);
                    complete_distance(
                        self.points,
                        &self.members[a as usize],
                        &self.members[b as usize],
                    )
                } else {
                    farthest_pair_distance(self.tree(a), self.tree(b))
                        .expect("trees share a dimension")
                }
            }
        }
    }

    /// Merges slot `b` into slot `a` (`a < b`).
    pub(crate) fn merge(&mut self, a: u32, b: u32) {
        debug_assert!(a < b);
        let (ai, bi) = (a as usize, b as usize);
        let (na, nb) = (self.size[ai] as f64, self.size[bi] as f64);
        let c = merged_centroid(na, self.centroid(a), nb, self.centroid(b));
        let v = merged_variance(
            na,
            self.centroid(a),
            self.variance[ai],
            nb,
            self.centroid(b),
            self.variance[bi],
            &c,
        );
        self.centroid[ai * self.dim..(ai + 1) * self.dim].copy_from_slice(&c);
        self.variance[ai] = v;
        self.size[ai] += self.size[bi];
        if !self.members.is_empty() {
            let mb = std::mem::take(&mut self.members[bi]);
            let ma = std::mem::take(&mut self.members[ai]);
            self.members[ai] = merge_sorted(ma, mb);
        }
        if !self.trees.is_empty() {
            self.trees[ai] = OnceLock::new();
            self.trees[bi] = OnceLock::new();
        }
    }
}

fn merge_sorted(a: Vec<u32>, b: Vec<u32>) -> Vec<u32> {
    let mut out = Vec::with_capacity(a.len() + b.len());
    let (mut i, mut j) = (0, 0);
    while i < a.len() && j < b.len() {
        if a[i] < b[j] {
            out.push(a[i]);
            i += 1;
        } else {
            out.push(b[j]);
            j += 1;
        }
    }
    out.extend_from_slice(&a[i..]);
    out.extend_from_slice(&b[j..]);
    out
}
