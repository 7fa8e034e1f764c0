use super::{BoundingBox, PointSet};
use crate::{Error, Result};

pub const DEFAULT_LEAF_CAPACITY: usize = 16;

/// Marker for a node whose points span more than one cluster.
pub const NO_MARK: u32 = u32::MAX;

/// Index of a node inside a [`KdTree`]; the root is node 0.
pub type NodeId = usize;

// Subtrees at least this large are built on separate tasks.
const PAR_BUILD: usize = 4096;

#[derive(Debug, Clone, Copy)]
struct Node {
    start: u32,
    end: u32,
    // Offset from this node to its right child; 0 marks a leaf. The left
    // child always immediately follows its parent.
    right: u32,
}

/// A kd-tree over items that carry an id and a coordinate vector.
///
/// Nodes are laid out in pre-order. Each node stores the tight bounding box
/// of its items and a cluster mark refreshed by
/// [`mark_uniform_clusters`](super::mark_uniform_clusters). The tree is never
/// edited after construction apart from the marks.
#[derive(Debug, Clone)]
pub struct KdTree {
    dim: usize,
    leaf_capacity: usize,
    ids: Vec<u32>,
    coords: Vec<f64>,
    nodes: Vec<Node>,
    bounds: Vec<f64>,
    marks: Vec<u32>,
}

impl KdTree {
    /// Builds a tree over `coords` (row-major, `dim` wide) whose rows carry
    /// the given `ids`.
    ///
    /// Internal nodes split at the median of the dimension with the widest
    /// extent. The result depends only on the input order.
    pub fn build(dim: usize, coords: &[f64], ids: &[u32], leaf_capacity: usize) -> Result<Self> {
        if dim == 0 {
            return Err(Error::invalid("dimension must be at least 1"));
        }
        if leaf_capacity == 0 {
            return Err(Error::invalid("leaf capacity must be positive"));
        }
        let n = ids.len();
        if n == 0 {
            return Err(Error::invalid("cannot build a kd-tree over no points"));
        }
        if coords.len() != n * dim {
            return Err(Error::invalid("coordinate count does not match id count"));
        }
        if n > u32::MAX as usize {
            return Err(Error::invalid("too many points"));
        }

        let total = node_count(n, leaf_capacity);
        let mut nodes = vec![
            Node {
                start: 0,
                end: 0,
                right: 0
            };
            total
        ];
        let mut bounds = vec![0.0; total * 2 * dim];
        let mut perm: Vec<u32> = (0..n as u32).collect();
        build_rec(
            &Ctx {
                dim,
                cap: leaf_capacity,
                src: coords,
            },
            &mut perm,
            0,
            &mut nodes,
            &mut bounds,
        );

        let mut tree_ids = Vec::with_capacity(n);
        let mut tree_coords = Vec::with_capacity(n * dim);
        for &p in &perm {
            let p = p as usize;
            tree_ids.push(ids[p]);
            tree_coords.extend_from_slice(&coords[p * dim..(p + 1) * dim]);
        }

        Ok(KdTree {
            dim,
            leaf_capacity,
            ids: tree_ids,
            coords: tree_coords,
            nodes,
            bounds,
            marks: vec![NO_MARK; total],
        })
    }

    /// Tree over every point of the set, with the point indices as ids.
    pub fn from_points(points: &PointSet, leaf_capacity: usize) -> Result<Self> {
        let ids: Vec<u32> = (0..points.len() as u32).collect();
        KdTree::build(points.dim(), points.coords(), &ids, leaf_capacity)
    }

    /// Tree over a subset of points, keeping their point indices as ids.
    pub fn from_subset(points: &PointSet, members: &[u32], leaf_capacity: usize) -> Result<Self> {
        let dim = points.dim();
        let mut coords = Vec::with_capacity(members.len() * dim);
        for &m in members {
            coords.extend_from_slice(points.point(m as usize));
        }
        KdTree::build(dim, &coords, members, leaf_capacity)
    }

    #[inline]
    pub fn len(&self) -> usize {
        self.ids.len()
    }

    #[inline]
    pub fn is_empty(&self) -> bool {
        self.ids.is_empty()
    }

    #[inline]
    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn leaf_capacity(&self) -> usize {
        self.leaf_capacity
    }

    pub fn node_count(&self) -> usize {
        self.nodes.len()
    }

    #[inline]
    pub fn root(&self) -> NodeId {
        0
    }

    #[inline]
    pub fn is_leaf(&self, node: NodeId) -> bool {
        self.nodes[node].right == 0
    }

    #[inline]
    pub fn children(&self, node: NodeId) -> Option<(NodeId, NodeId)> {
        let r = self.nodes[node].right as usize;
        (r != 0).then_some((node + 1, node + r))
    }

    /// Number of items beneath `node`.
    #[inline]
    pub fn size(&self, node: NodeId) -> usize {
        let n = self.nodes[node];
        (n.end - n.start) as usize
    }

    #[inline]
    pub fn lower(&self, node: NodeId) -> &[f64] {
        let o = node * 2 * self.dim;
        &self.bounds[o..o + self.dim]
    }

    #[inline]
    pub fn upper(&self, node: NodeId) -> &[f64] {
        let o = node * 2 * self.dim + self.dim;
        &self.bounds[o..o + self.dim]
    }

    pub fn bounding_box(&self, node: NodeId) -> BoundingBox {
        BoundingBox {
            lower: self.lower(node).to_vec(),
            upper: self.upper(node).to_vec(),
        }
    }

    /// Ids of the items beneath `node`, in tree order.
    #[inline]
    pub fn node_ids(&self, node: NodeId) -> &[u32] {
        let n = self.nodes[node];
        &self.ids[n.start as usize..n.end as usize]
    }

    /// Coordinates of the items beneath `node`, row-major in tree order.
    #[inline]
    pub fn node_coords(&self, node: NodeId) -> &[f64] {
        let n = self.nodes[node];
        &self.coords[n.start as usize * self.dim..n.end as usize * self.dim]
    }

    pub fn items(&self, node: NodeId) -> impl Iterator<Item = (u32, &[f64])> + '_ {
        self.node_ids(node)
            .iter()
            .copied()
            .zip(self.node_coords(node).chunks_exact(self.dim))
    }

    /// All ids in leaf order (a permutation of the input ids).
    pub fn leaf_order(&self) -> &[u32] {
        &self.ids
    }

    /// The cluster every item beneath `node` belongs to, if there is one.
    #[inline]
    pub fn mark(&self, node: NodeId) -> Option<u32> {
        let m = self.marks[node];
        (m != NO_MARK).then_some(m)
    }

    pub(crate) fn marks_mut(&mut self) -> &mut [u32] {
        &mut self.marks
    }
}

struct Ctx<'a> {
    dim: usize,
    cap: usize,
    src: &'a [f64],
}

fn node_count(m: usize, cap: usize) -> usize {
    if m <= cap {
        1
    } else {
        1 + node_count(m / 2, cap) + node_count(m - m / 2, cap)
    }
}

fn build_rec(
    ctx: &Ctx<'_>,
    perm: &mut [u32],
    start: usize,
    nodes: &mut [Node],
    bounds: &mut [f64],
) {
    let dim = ctx.dim;
    let m = perm.len();
    {
        let (lo, rest) = bounds.split_at_mut(dim);
        let hi = &mut rest[..dim];
        let first = perm[0] as usize * dim;
        lo.copy_from_slice(&ctx.src[first..first + dim]);
        hi.copy_from_slice(&ctx.src[first..first + dim]);
        for &p in &perm[1..] {
            let row = &ctx.src[p as usize * dim..(p as usize + 1) * dim];
            for k in 0..dim {
                lo[k] = lo[k].min(row[k]);
                hi[k] = hi[k].max(row[k]);
            }
        }
    }

    if m <= ctx.cap {
        nodes[0] = Node {
            start: start as u32,
            end: (start + m) as u32,
            right: 0,
        };
        return;
    }

    let split = (0..dim)
        .max_by(|&a, &b| {
            let ea = bounds[dim + a] - bounds[a];
            let eb = bounds[dim + b] - bounds[b];
            // Prefer the lower dimension on equal extent.
            ea.total_cmp(&eb).then(b.cmp(&a))
        })
        .unwrap_or(0);
    let mid = m / 2;
    perm.select_nth_unstable_by(mid, |&a, &b| {
        ctx.src[a as usize * dim + split]
            .total_cmp(&ctx.src[b as usize * dim + split])
            .then(a.cmp(&b))
    });

    let left_nodes = node_count(mid, ctx.cap);
    nodes[0] = Node {
        start: start as u32,
        end: (start + m) as u32,
        right: (1 + left_nodes) as u32,
    };
    let (_, rest) = nodes.split_at_mut(1);
    let (left_n, right_n) = rest.split_at_mut(left_nodes);
    let (_, rest_b) = bounds.split_at_mut(2 * dim);
    let (left_b, right_b) = rest_b.split_at_mut(left_nodes * 2 * dim);
    let (left_p, right_p) = perm.split_at_mut(mid);

    if m >= PAR_BUILD {
        rayon::join(
            || build_rec(ctx, left_p, start, left_n, left_b),
            || build_rec(ctx, right_p, start + mid, right_n, right_b),
        );
    } else {
        build_rec(ctx, left_p, start, left_n, left_b);
        build_rec(ctx, right_p, start + mid, right_n, right_b);
    }
}
