use super::kdtree::{KdTree, NodeId, NO_MARK};
use super::{point_box_min_sq, squared_distance, Ball, BoundingBox, PointSet, UnionFind};
use crate::atomic::{MaxF64, MinCell};
use crate::{Error, Result};
use rayon::prelude::*;
use std::sync::atomic::{AtomicU64, Ordering};

// Subtrees at least this large fork their children onto separate tasks.
const PAR_VISIT: usize = 2048;
const PAR_DUAL: usize = 1024;

/// Closed overlap test: true iff the box comes within `ball.radius` of the
/// center.
pub fn ball_overlaps_box(ball: &Ball, bbox: &BoundingBox) -> bool {
    point_box_min_sq(&ball.center, &bbox.lower, &bbox.upper) <= ball.radius * ball.radius
}

#[inline]
fn node_overlaps(tree: &KdTree, node: NodeId, center: &[f64], r2: f64) -> bool {
    point_box_min_sq(center, tree.lower(node), tree.upper(node)) <= r2
}

/// Calls `visitor` once for every item inside the closed ball. Subtrees whose
/// boxes miss the ball are skipped and large subtrees are searched on
/// parallel tasks, so the visitor must tolerate concurrent calls.
pub fn range_visit<F>(tree: &KdTree, ball: &Ball, visitor: &F)
where
    F: Fn(u32, &[f64]) + Sync,
{
    let r2 = ball.radius * ball.radius;
    visit_par(tree, tree.root(), &ball.center, r2, visitor);
}

fn visit_par<F>(tree: &KdTree, node: NodeId, center: &[f64], r2: f64, visitor: &F)
where
    F: Fn(u32, &[f64]) + Sync,
{
    if !node_overlaps(tree, node, center, r2) {
        return;
    }
    match tree.children(node) {
        None => {
            for (id, p) in tree.items(node) {
                if squared_distance(center, p) <= r2 {
                    visitor(id, p);
                }
            }
        }
        Some((l, r)) if tree.size(node) >= PAR_VISIT => {
            rayon::join(
                || visit_par(tree, l, center, r2, visitor),
                || visit_par(tree, r, center, r2, visitor),
            );
        }
        Some((l, r)) => {
            visit_par(tree, l, center, r2, visitor);
            visit_par(tree, r, center, r2, visitor);
        }
    }
}

/// Sequential variant of [`range_visit`] for callers that already run one
/// search per task.
pub fn range_visit_seq<F>(tree: &KdTree, center: &[f64], radius: f64, mut visitor: F)
where
    F: FnMut(u32, &[f64]),
{
    let r2 = radius * radius;
    visit_seq(tree, tree.root(), center, r2, &mut visitor);
}

fn visit_seq<F>(tree: &KdTree, node: NodeId, center: &[f64], r2: f64, visitor: &mut F)
where
    F: FnMut(u32, &[f64]),
{
    if !node_overlaps(tree, node, center, r2) {
        return;
    }
    match tree.children(node) {
        None => {
            for (id, p) in tree.items(node) {
                if squared_distance(center, p) <= r2 {
                    visitor(id, p);
                }
            }
        }
        Some((l, r)) => {
            visit_seq(tree, l, center, r2, visitor);
            visit_seq(tree, r, center, r2, visitor);
        }
    }
}

/// What [`range_visit_marked`] reports.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum MarkedHit<'a> {
    /// A subtree overlapping the ball whose items all belong to `cluster`.
    /// `count` is the subtree size, an upper bound on its items in the ball.
    Subtree { cluster: u32, count: usize },
    /// An unmarked leaf item inside the ball.
    Item { id: u32, coords: &'a [f64] },
}

/// Ball search that stops at cluster-marked subtrees instead of descending
/// into them. Every item in the ball is accounted for exactly once, either
/// individually or as part of a marked subtree.
pub fn range_visit_marked<'t, F>(tree: &'t KdTree, center: &[f64], radius: f64, mut visitor: F)
where
    F: FnMut(MarkedHit<'t>),
{
    let r2 = radius * radius;
    visit_marked(tree, tree.root(), center, r2, &mut visitor);
}

fn visit_marked<'t, F>(tree: &'t KdTree, node: NodeId, center: &[f64], r2: f64, visitor: &mut F)
where
    F: FnMut(MarkedHit<'t>),
{
    if !node_overlaps(tree, node, center, r2) {
        return;
    }
    if let Some(cluster) = tree.mark(node) {
        visitor(MarkedHit::Subtree {
            cluster,
            count: tree.size(node),
        });
        return;
    }
    match tree.children(node) {
        None => {
            for (id, p) in tree.items(node) {
                if squared_distance(center, p) <= r2 {
                    visitor(MarkedHit::Item { id, coords: p });
                }
            }
        }
        Some((l, r)) => {
            visit_marked(tree, l, center, r2, visitor);
            visit_marked(tree, r, center, r2, visitor);
        }
    }
}

/// Nearest non-excluded item to `query`; ties go to the smaller id.
pub fn nearest_point<E>(tree: &KdTree, query: &[f64], exclude: E) -> Result<(u32, f64)>
where
    E: Fn(u32) -> bool,
{
    nearest_point_skipping(tree, query, exclude, |_| false)
}

/// [`nearest_point`] that also prunes whole subtrees for which `skip_node`
/// holds (used to jump over subtrees marked with the query's own cluster).
pub(crate) fn nearest_point_skipping<E, S>(
    tree: &KdTree,
    query: &[f64],
    exclude: E,
    skip_node: S,
) -> Result<(u32, f64)>
where
    E: Fn(u32) -> bool,
    S: Fn(NodeId) -> bool,
{
    let mut best = (f64::INFINITY, u32::MAX);
    nn_rec(tree, tree.root(), query, &exclude, &skip_node, &mut best);
    if best.1 == u32::MAX {
        return Err(Error::NoCandidate);
    }
    Ok((best.1, best.0.sqrt()))
}

fn nn_rec<E, S>(
    tree: &KdTree,
    node: NodeId,
    q: &[f64],
    exclude: &E,
    skip: &S,
    best: &mut (f64, u32),
) where
    E: Fn(u32) -> bool,
    S: Fn(NodeId) -> bool,
{
    if skip(node) {
        return;
    }
    match tree.children(node) {
        None => {
            for (id, p) in tree.items(node) {
                if exclude(id) {
                    continue;
                }
                let d2 = squared_distance(q, p);
                if d2 < best.0 || (d2 == best.0 && id < best.1) {
                    *best = (d2, id);
                }
            }
        }
        Some((l, r)) => {
            let dl = point_box_min_sq(q, tree.lower(l), tree.upper(l));
            let dr = point_box_min_sq(q, tree.lower(r), tree.upper(r));
            let order = if dr < dl {
                [(r, dr), (l, dl)]
            } else {
                [(l, dl), (r, dr)]
            };
            for (c, dc) in order {
                if dc <= best.0 {
                    nn_rec(tree, c, q, exclude, skip, best);
                }
            }
        }
    }
}

#[inline]
fn box_box_min_sq(a: &KdTree, na: NodeId, b: &KdTree, nb: NodeId) -> f64 {
    let (al, au, bl, bu) = (a.lower(na), a.upper(na), b.lower(nb), b.upper(nb));
    let mut s = 0.0;
    for k in 0..al.len() {
        let gap = (al[k] - bu[k]).max(bl[k] - au[k]).max(0.0);
        s += gap * gap;
    }
    s
}

#[inline]
fn box_box_max_sq(a: &KdTree, na: NodeId, b: &KdTree, nb: NodeId) -> f64 {
    let (al, au, bl, bu) = (a.lower(na), a.upper(na), b.lower(nb), b.upper(nb));
    let mut s = 0.0;
    for k in 0..al.len() {
        let span = (au[k] - bl[k]).abs().max((bu[k] - al[k]).abs());
        s += span * span;
    }
    s
}

/// For every point, its nearest other point and the Euclidean distance to it
/// (ties go to the smaller id). Runs a parallel dual-tree traversal.
pub fn all_nearest_neighbors(points: &PointSet) -> Result<Vec<(u32, f64)>> {
    if points.len() < 2 {
        return Err(Error::invalid(
            "all-nearest-neighbors needs at least two points",
        ));
    }
    let tree = KdTree::from_points(points, super::DEFAULT_LEAF_CAPACITY)?;
    let best: Vec<MinCell> = (0..points.len()).map(|_| MinCell::new()).collect();
    let bound: Vec<AtomicU64> = (0..tree.node_count())
        .map(|_| AtomicU64::new(f64::INFINITY.to_bits()))
        .collect();
    let ctx = AnnCtx {
        tree: &tree,
        best: &best,
        bound: &bound,
    };
    ctx.dual(tree.root(), tree.root());
    Ok(best
        .iter()
        .map(|c| {
            let (d2, id) = c.get().expect("every point has a neighbor when n >= 2");
            (id, d2.sqrt())
        })
        .collect())
}

struct AnnCtx<'a> {
    tree: &'a KdTree,
    best: &'a [MinCell],
    // Per query node: the largest current best squared distance of any point
    // beneath it. Only the task that owns the query node writes it.
    bound: &'a [AtomicU64],
}

impl AnnCtx<'_> {
    #[inline]
    fn bound(&self, n: NodeId) -> f64 {
        f64::from_bits(self.bound[n].load(Ordering::Acquire))
    }

    #[inline]
    fn set_bound(&self, n: NodeId, v: f64) {
        self.bound[n].store(v.to_bits(), Ordering::Release);
    }

    fn dual(&self, q: NodeId, r: NodeId) {
        let t = self.tree;
        if box_box_min_sq(t, q, t, r) > self.bound(q) {
            return;
        }
        match (t.children(q), t.children(r)) {
            (None, None) => {
                for (qi, qp) in t.items(q) {
                    let cell = &self.best[qi as usize];
                    for (ri, rp) in t.items(r) {
                        if qi != ri {
                            cell.write_min(squared_distance(qp, rp), ri);
                        }
                    }
                }
                let b = t
                    .node_ids(q)
                    .iter()
                    .map(|&i| {
                        self.best[i as usize]
                            .get()
                            .map_or(f64::INFINITY, |(d, _)| d)
                    })
                    .fold(0.0f64, f64::max);
                self.set_bound(q, b);
            }
            (None, Some((r1, r2))) => {
                for rc in self.closer_first(q, r1, r2) {
                    self.dual(q, rc);
                }
            }
            (Some((q1, q2)), None) => {
                self.fork(q, || self.dual(q1, r), || self.dual(q2, r));
                self.set_bound(q, self.bound(q1).max(self.bound(q2)));
            }
            (Some((q1, q2)), Some((r1, r2))) => {
                self.fork(
                    q,
                    || {
                        for rc in self.closer_first(q1, r1, r2) {
                            self.dual(q1, rc);
                        }
                    },
                    || {
                        for rc in self.closer_first(q2, r1, r2) {
                            self.dual(q2, rc);
                        }
                    },
                );
                self.set_bound(q, self.bound(q1).max(self.bound(q2)));
            }
        }
    }

    fn closer_first(&self, q: NodeId, r1: NodeId, r2: NodeId) -> [NodeId; 2] {
        let t = self.tree;
        if box_box_min_sq(t, q, t, r2) < box_box_min_sq(t, q, t, r1) {
            [r2, r1]
        } else {
            [r1, r2]
        }
    }

    fn fork(&self, q: NodeId, a: impl FnOnce() + Send, b: impl FnOnce() + Send) {
        if self.tree.size(q) >= PAR_DUAL {
            rayon::join(a, b);
        } else {
            a();
            b();
        }
    }
}

/// Largest distance between a point of `a` and a point of `b`, found by a
/// dual-tree traversal that drops node pairs whose farthest possible
/// distance cannot beat the best pair seen so far.
pub fn farthest_pair_distance(a: &KdTree, b: &KdTree) -> Result<f64> {
    if a.is_empty() || b.is_empty() {
        return Err(Error::invalid("farthest pair needs two nonempty trees"));
    }
    if a.dim() != b.dim() {
        return Err(Error::invalid("trees have different dimensions"));
    }
    let dim = a.dim();
    let seed = squared_distance(
        &a.node_coords(a.root())[..dim],
        &b.node_coords(b.root())[..dim],
    );
    let best = MaxF64::new(seed);
    farthest_rec(a, a.root(), b, b.root(), &best);
    Ok(best.get().sqrt())
}

fn farthest_rec(a: &KdTree, na: NodeId, b: &KdTree, nb: NodeId, best: &MaxF64) {
    if box_box_max_sq(a, na, b, nb) <= best.get() {
        return;
    }
    let split_a = match (a.children(na), b.children(nb)) {
        (None, None) => {
            let mut local = best.get();
            for (_, pa) in a.items(na) {
                for (_, pb) in b.items(nb) {
                    local = local.max(squared_distance(pa, pb));
                }
            }
            best.write_max(local);
            return;
        }
        (Some(_), None) => true,
        (None, Some(_)) => false,
        (Some(_), Some(_)) => a.size(na) >= b.size(nb),
    };
    let parallel = a.size(na) + b.size(nb) >= 2 * PAR_DUAL;
    if split_a {
        let (c1, c2) = a.children(na).unwrap();
        let [c1, c2] = farther_first(c1, c2, |c| box_box_max_sq(a, c, b, nb));
        if parallel {
            rayon::join(
                || farthest_rec(a, c1, b, nb, best),
                || farthest_rec(a, c2, b, nb, best),
            );
        } else {
            farthest_rec(a, c1, b, nb, best);
            farthest_rec(a, c2, b, nb, best);
        }
    } else {
        let (c1, c2) = b.children(nb).unwrap();
        let [c1, c2] = farther_first(c1, c2, |c| box_box_max_sq(a, na, b, c));
        if parallel {
            rayon::join(
                || farthest_rec(a, na, b, c1, best),
                || farthest_rec(a, na, b, c2, best),
            );
        } else {
            farthest_rec(a, na, b, c1, best);
            farthest_rec(a, na, b, c2, best);
        }
    }
}

fn farther_first(c1: NodeId, c2: NodeId, key: impl Fn(NodeId) -> f64) -> [NodeId; 2] {
    if key(c2) > key(c1) {
        [c2, c1]
    } else {
        [c1, c2]
    }
}

/// Marks every node with the cluster shared by all of its items, or clears
/// the mark when the items span several clusters. Item ids must be point
/// indices covered by `uf`.
pub fn mark_uniform_clusters(tree: &mut KdTree, uf: &UnionFind) {
    let leaf_marks: Vec<(NodeId, u32)> = (0..tree.node_count())
        .into_par_iter()
        .filter(|&n| tree.is_leaf(n))
        .map(|n| {
            let ids = tree.node_ids(n);
            let first = uf.find(ids[0]);
            let uniform = ids[1..].iter().all(|&p| uf.find(p) == first);
            (n, if uniform { first } else { NO_MARK })
        })
        .collect();
    let children: Vec<Option<(NodeId, NodeId)>> =
        (0..tree.node_count()).map(|n| tree.children(n)).collect();
    let marks = tree.marks_mut();
    for (n, m) in leaf_marks {
        marks[n] = m;
    }
    // Pre-order layout: children always have larger indices than parents.
    for n in (0..marks.len()).rev() {
        if let Some((l, r)) = children[n] {
            marks[n] = if marks[l] == marks[r] {
                marks[l]
            } else {
                NO_MARK
            };
        }
    }
}
