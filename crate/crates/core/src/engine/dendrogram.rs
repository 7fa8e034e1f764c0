use crate::{Error, Result};
use std::cmp::Ordering;
use std::collections::BinaryHeap;
use std::fmt::Write as _;

/// One internal node. Children are node ids: leaves are `0..n`, internal
/// nodes are `n..2n-1` in row order. `left < right` always.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Merge {
    pub left: u32,
    pub right: u32,
    pub height: f64,
    pub size: u32,
}

/// A binary merge tree over `n` leaves, stored as `n - 1` rows.
///
/// Trees built by [`Dendrogram::from_merges`] are in canonical order: rows
/// ascend by `(height, smaller child, larger child)` among rows whose
/// children are already placed, and internal ids follow row order.
#[derive(Debug, Clone, PartialEq)]
pub struct Dendrogram {
    n: usize,
    merges: Vec<Merge>,
}

struct Ready {
    height: f64,
    lo: u32,
    hi: u32,
    raw: usize,
}

impl PartialEq for Ready {
    fn eq(&self, other: &Self) -> bool {
        self.cmp(other) == Ordering::Equal
    }
}
impl Eq for Ready {}
impl PartialOrd for Ready {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}
impl Ord for Ready {
    // Reversed so the max-heap pops the smallest key.
    fn cmp(&self, other: &Self) -> Ordering {
        other
            .height
            .total_cmp(&self.height)
            .then(other.lo.cmp(&self.lo))
            .then(other.hi.cmp(&self.hi))
            .then(other.raw.cmp(&self.raw))
    }
}

impl Dendrogram {
    /// Builds the canonical tree from merges given in creation order, where
    /// merge `r` creates node `n + r`.
    pub fn from_merges(n: usize, raw: &[(u32, u32, f64)]) -> Result<Self> {
        if n == 0 {
            return Err(Error::invalid("a dendrogram needs at least one leaf"));
        }
        if raw.len() != n - 1 {
            return Err(Error::invalid(format!(
                "{} leaves need {} merges, got {}",
                n,
                n - 1,
                raw.len()
            )));
        }
        let total = 2 * n - 1;
        let mut used = vec![false; total];
        let mut parent_of = vec![usize::MAX; raw.len()];
        let mut waiting = vec![0u8; raw.len()];
        for (r, &(a, b, h)) in raw.iter().enumerate() {
            if !h.is_finite() || h < 0.0 {
                return Err(Error::invalid(format!("merge {r} has height {h}")));
            }
            for c in [a, b] {
                let c = c as usize;
                if c >= n + r || used[c] || a == b {
                    return Err(Error::invalid(format!("merge {r} has a bad child {c}")));
                }
                used[c] = true;
                if c >= n {
                    parent_of[c - n] = r;
                    waiting[r] += 1;
                }
            }
        }

        let mut label = vec![u32::MAX; raw.len()];
        let mut size = vec![0u32; raw.len()];
        let final_id = |c: u32, label: &[u32]| {
            if (c as usize) < n {
                c
            } else {
                label[c as usize - n]
            }
        };
        let mut heap = BinaryHeap::new();
        let push = |heap: &mut BinaryHeap<Ready>, r: usize, label: &[u32]| {
            let (a, b, h) = raw[r];
            let (x, y) = (final_id(a, label), final_id(b, label));
            heap.push(Ready {
                height: h,
                lo: x.min(y),
                hi: x.max(y),
                raw: r,
            });
        };
        for (r, &w) in waiting.iter().enumerate() {
            if w == 0 {
                push(&mut heap, r, &label);
            }
        }
        let mut merges = Vec::with_capacity(raw.len());
        while let Some(top) = heap.pop() {
            let r = top.raw;
            let (a, b, _) = raw[r];
            let child_size = |c: u32, size: &[u32]| {
                if (c as usize) < n {
                    1
                } else {
                    size[c as usize - n]
                }
            };
            size[r] = child_size(a, &size) + child_size(b, &size);
            label[r] = (n + merges.len()) as u32;
            merges.push(Merge {
                left: top.lo,
                right: top.hi,
                height: top.height,
                size: size[r],
            });
            let p = parent_of[r];
            if p != usize::MAX {
                waiting[p] -= 1;
                if waiting[p] == 0 {
                    push(&mut heap, p, &label);
                }
            }
        }
        Ok(Dendrogram { n, merges })
    }

    /// Wraps rows that are already numbered, checking that they form a
    /// valid tree.
    pub fn from_rows(n: usize, merges: Vec<Merge>) -> Result<Self> {
        let d = Dendrogram { n, merges };
        d.validate()?;
        Ok(d)
    }

    pub fn n_leaves(&self) -> usize {
        self.n
    }

    pub fn merges(&self) -> &[Merge] {
        &self.merges
    }

    pub fn heights(&self) -> Vec<f64> {
        self.merges.iter().map(|m| m.height).collect()
    }

    /// Checks ids, child uniqueness and sizes.
    pub fn validate(&self) -> Result<()> {
        let n = self.n;
        if n == 0 || self.merges.len() != n - 1 {
            return Err(Error::invalid(
                "row count must be one less than the leaf count",
            ));
        }
        let mut used = vec![false; 2 * n - 1];
        let mut size = vec![1u32; 2 * n - 1];
        for (r, m) in self.merges.iter().enumerate() {
            for c in [m.left, m.right] {
                let c = c as usize;
                if c >= n + r || used[c] {
                    return Err(Error::invalid(format!(
                        "row {r}: child {c} is unknown or reused"
                    )));
                }
                used[c] = true;
            }
            if m.left == m.right {
                return Err(Error::invalid(format!(
                    "row {r}: a node cannot merge with itself"
                )));
            }
            if !m.height.is_finite() || m.height < 0.0 {
                return Err(Error::invalid(format!("row {r}: bad height {}", m.height)));
            }
            let s = size[m.left as usize] + size[m.right as usize];
            if s != m.size {
                return Err(Error::invalid(format!(
                    "row {r}: size {} should be {s}",
                    m.size
                )));
            }
            size[n + r] = s;
        }
        Ok(())
    }

    /// True when no row is lower than either of its internal children.
    pub fn is_monotone(&self) -> bool {
        let n = self.n;
        self.merges.iter().all(|m| {
            [m.left, m.right]
                .iter()
                .all(|&c| (c as usize) < n || self.merges[c as usize - n].height <= m.height)
        })
    }

    /// Rows as `left right height size` lines. Heights use the shortest
    /// decimal form that parses back to the same value.
    pub fn to_text(&self) -> String {
        let mut s = String::with_capacity(self.merges.len() * 32);
        for m in &self.merges {
            let _ = writeln!(s, "{} {} {} {}", m.left, m.right, m.height, m.size);
        }
        s
    }

    /// Parses [`Dendrogram::to_text`] output. An empty text is a lone leaf.
    pub fn parse(text: &str) -> Result<Self> {
        let mut merges = Vec::new();
        for (i, line) in text.lines().enumerate() {
            let line = line.trim();
            if line.is_empty() {
                continue;
            }
            let bad = |message: String| Error::Parse {
                line: i + 1,
                message,
            };
            let f: Vec<&str> = line.split_whitespace().collect();
            if f.len() != 4 {
                return Err(bad(format!("expected 4 fields, found {}", f.len())));
            }
            let id = |s: &str| s.parse::<u32>().map_err(|e| bad(format!("'{s}': {e}")));
            let height = f[2]
                .parse::<f64>()
                .map_err(|e| bad(format!("'{}': {e}", f[2])))?;
            merges.push(Merge {
                left: id(f[0])?,
                right: id(f[1])?,
                height,
                size: id(f[3])?,
            });
        }
        let n = merges.len() + 1;
        Dendrogram::from_rows(n, merges)
    }

    /// Flat clustering into `k` groups obtained by undoing the `k - 1`
    /// highest rows. Labels are numbered by first appearance.
    pub fn cut(&self, k: usize) -> Result<Vec<u32>> {
        let n = self.n;
        if k == 0 || k > n {
            return Err(Error::invalid(format!(
                "cannot cut {n} leaves into {k} groups"
            )));
        }
        let mut order: Vec<usize> = (0..self.merges.len()).collect();
        order.sort_by(|&a, &b| {
            self.merges[a]
                .height
                .total_cmp(&self.merges[b].height)
                .then(a.cmp(&b))
        });
        let mut parent: Vec<usize> = (0..2 * n - 1).collect();
        fn find(p: &mut [usize], mut x: usize) -> usize {
            while p[x] != x {
                p[x] = p[p[x]];
                x = p[x];
            }
            x
        }
        // Every node joins its row's node; the kept rows are the lowest.
        for &r in order.iter().take(n - k) {
            let m = self.merges[r];
            let node = n + r;
            for c in [m.left as usize, m.right as usize] {
                let rc = find(&mut parent, c);
                parent[rc] = node;
            }
        }
        let mut labels = vec![u32::MAX; n];
        let mut names = std::collections::HashMap::new();
        for (leaf, slot) in labels.iter_mut().enumerate() {
            let root = find(&mut parent, leaf);
            let next = names.len() as u32;
            *slot = *names.entry(root).or_insert(next);
        }
        Ok(labels)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn line_tree() -> Dendrogram {
        // Points 0,1,4,6 under complete linkage, created in an odd order.
        Dendrogram::from_merges(4, &[(3, 2, 2.0), (1, 0, 1.0), (4, 5, 6.0)]).unwrap()
    }

    #[test]
    fn canonical_order_and_relabeling() {
        let d = line_tree();
        let rows: Vec<(u32, u32, f64, u32)> = d
            .merges()
            .iter()
            .map(|m| (m.left, m.right, m.height, m.size))
            .collect();
        assert_eq!(rows, vec![(0, 1, 1.0, 2), (2, 3, 2.0, 2), (4, 5, 6.0, 4)]);
        assert!(d.is_monotone());
        assert_eq!(d.to_text(), "0 1 1 2\n2 3 2 2\n4 5 6 4\n");
    }

    #[test]
    fn text_round_trip() {
        let d = Dendrogram::from_merges(3, &[(0, 1, 0.1 + 0.2), (2, 3, 40.5f64.sqrt())]).unwrap();
        let back = Dendrogram::parse(&d.to_text()).unwrap();
        assert_eq!(back, d);
        assert_eq!(Dendrogram::parse("").unwrap().n_leaves(), 1);
    }

    #[test]
    fn rejects_bad_rows() {
        assert!(Dendrogram::parse("0 1 1 3\n").is_err());
        assert!(Dendrogram::parse("0 0 1 2\n").is_err());
        assert!(Dendrogram::parse("0 1 1 2\n0 2 2 3\n").is_err());
        assert!(Dendrogram::parse("0 5 1 2\n").is_err());
        assert!(matches!(
            Dendrogram::parse("0 1 x 2\n"),
            Err(Error::Parse { line: 1, .. })
        ));
        assert!(Dendrogram::from_merges(3, &[(0, 1, 1.0)]).is_err());
        assert!(Dendrogram::from_merges(2, &[(0, 1, f64::NAN)]).is_err());
    }

    #[test]
    fn cuts() {
        let d = line_tree();
        assert_eq!(d.cut(1).unwrap(), vec![0, 0, 0, 0]);
        assert_eq!(d.cut(2).unwrap(), vec![0, 0, 1, 1]);
        assert_eq!(d.cut(4).unwrap(), vec![0, 1, 2, 3]);
        assert!(d.cut(5).is_err());
    }

    #[test]
    fn single_leaf() {
        let d = Dendrogram::from_merges(1, &[]).unwrap();
        assert!(d.merges().is_empty());
        assert_eq!(d.to_text(), "");
    }
}
