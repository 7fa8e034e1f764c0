//! Brute-force reference clustering and dendrogram comparison.
//!
//! Nothing here is fast. Every cluster distance is recomputed from the
//! member points, so the results are independent of the engine's
//! incremental statistics, caches and spatial pruning.

use crate::engine::dendrogram::Dendrogram;
use crate::spatial::{distance, squared_distance, PointSet};
use crate::{Error, Linkage, Result};

/// Largest input the reference clustering accepts.
pub const ORACLE_MAX_POINTS: usize = 4096;

fn brute_centroid(points: &PointSet, members: &[u32]) -> Vec<f64> {
    let mut c = vec![0.0; points.dim()];
    for &m in members {
        for (x, y) in c.iter_mut().zip(points.point(m as usize)) {
            *x += y;
        }
    }
    let n = members.len() as f64;
    c.iter_mut().for_each(|x| *x /= n);
    c
}

fn brute_variance(points: &PointSet, members: &[u32]) -> f64 {
    let c = brute_centroid(points, members);
    members
        .iter()
        .map(|&m| squared_distance(points.point(m as usize), &c))
        .sum()
}

/// Cluster distance straight from the definitions: pair scans for
/// complete, avg-1 and avg-2, recomputed centroids for Ward.
pub fn definitional_distance(kind: Linkage, points: &PointSet, a: &[u32], b: &[u32]) -> f64 {
    let pairs = || {
        a.iter().flat_map(move |&x| {
            b.iter()
                .map(move |&y| (points.point(x as usize), points.point(y as usize)))
        })
    };
    let count = (a.len() * b.len()) as f64;
    match kind {
        Linkage::Complete => pairs().map(|(p, q)| distance(p, q)).fold(0.0, f64::max),
        Linkage::Avg1 => pairs().map(|(p, q)| distance(p, q)).sum::<f64>() / count,
        Linkage::Avg2 => pairs().map(|(p, q)| squared_distance(p, q)).sum::<f64>() / count,
        Linkage::Ward => {
            let (na, nb) = (a.len() as f64, b.len() as f64);
            let gap = squared_distance(&brute_centroid(points, a), &brute_centroid(points, b));
            (2.0 * na * nb / (na + nb) * gap).sqrt()
        }
    }
}

/// Ward distance as the square root of twice the variance increase.
pub fn ward_variance_form(points: &PointSet, a: &[u32], b: &[u32]) -> f64 {
    let ab: Vec<u32> = a.iter().chain(b).copied().collect();
    let inc = brute_variance(points, &ab) - brute_variance(points, a) - brute_variance(points, b);
    (2.0 * inc).max(0.0).sqrt()
}

/// Generic agglomerative clustering: repeatedly merge the globally closest
/// pair of clusters, ties broken by the smaller `(i, j)` cluster ids.
pub fn naive_hac(points: &PointSet, kind: Linkage) -> Result<Dendrogram> {
    let n = points.len();
    if n == 0 {
        return Err(Error::invalid("no points to cluster"));
    }
    if n > ORACLE_MAX_POINTS {
        return Err(Error::Refused(format!(
            "the reference clustering handles at most {ORACLE_MAX_POINTS} points, got {n}"
        )));
    }
    let mut members: Vec<Vec<u32>> = (0..n as u32).map(|i| vec![i]).collect();
    let mut node: Vec<u32> = (0..n as u32).collect();
    let mut alive = vec![true; n];
    let mut dist = vec![f64::INFINITY; n * n];
    for i in 0..n {
        for j in i + 1..n {
            let d = definitional_distance(kind, points, &members[i], &members[j]);
            dist[i * n + j] = d;
            dist[j * n + i] = d;
        }
    }
    // Row minimum as (distance, column).
    let row_min = |dist: &[f64], alive: &[bool], i: usize| -> (f64, usize) {
        let mut best = (f64::INFINITY, usize::MAX);
        for j in 0..n {
            if j != i && alive[j] && dist[i * n + j] < best.0 {
                best = (dist[i * n + j], j);
            }
        }
        best
    };
    let mut rows: Vec<(f64, usize)> = (0..n).map(|i| row_min(&dist, &alive, i)).collect();

    let mut raw = Vec::with_capacity(n - 1);
    for step in 0..n - 1 {
        let mut best = (f64::INFINITY, usize::MAX, usize::MAX);
        for i in 0..n {
            if !alive[i] || rows[i].1 == usize::MAX {
                continue;
            }
            let (d, j) = rows[i];
            let cand = (d, i.min(j), i.max(j));
            if cand.0 < best.0 || (cand.0 == best.0 && (cand.1, cand.2) < (best.1, best.2)) {
                best = cand;
            }
        }
        let (h, a, b) = best;
        if a == usize::MAX {
            return Err(Error::Internal("no pair left to merge".into()));
        }
        raw.push((node[a], node[b], h));
        node[a] = (n + step) as u32;
        let mb = std::mem::take(&mut members[b]);
        members[a].extend(mb);
        members[a].sort_unstable();
        alive[b] = false;
        for c in 0..n {
            if alive[c] && c != a {
                let d = definitional_distance(kind, points, &members[a], &members[c]);
                dist[a * n + c] = d;
                dist[c * n + a] = d;
            }
        }
        for c in 0..n {
            if !alive[c] {
                continue;
            }
            let (d, j) = rows[c];
            if c == a || j == a || j == b {
                rows[c] = row_min(&dist, &alive, c);
            } else if dist[c * n + a] < d || (dist[c * n + a] == d && a < j) {
                rows[c] = (dist[c * n + a], a);
            }
        }
    }
    Dendrogram::from_merges(n, &raw)
}

/// Symmetric matrix of the heights at which pairs of leaves first join.
#[derive(Debug, Clone, PartialEq)]
pub struct CopheneticMatrix {
    n: usize,
    data: Vec<f64>,
}

impl CopheneticMatrix {
    pub fn n(&self) -> usize {
        self.n
    }

    pub fn get(&self, p: usize, q: usize) -> f64 {
        self.data[p * self.n + q]
    }
}

pub fn cophenetic(d: &Dendrogram) -> CopheneticMatrix {
    let n = d.n_leaves();
    let mut data = vec![0.0; n * n];
    let mut leaves: Vec<Vec<u32>> = (0..n as u32).map(|i| vec![i]).collect();
    leaves.resize(2 * n - 1, Vec::new());
    for (r, m) in d.merges().iter().enumerate() {
        let l = std::mem::take(&mut leaves[m.left as usize]);
        let rr = std::mem::take(&mut leaves[m.right as usize]);
        for &p in &l {
            for &q in &rr {
                data[p as usize * n + q as usize] = m.height;
                data[q as usize * n + p as usize] = m.height;
            }
        }
        let mut joined = l;
        joined.extend(rr);
        leaves[n + r] = joined;
    }
    CopheneticMatrix { n, data }
}

/// Result of comparing two cophenetic matrices.
#[derive(Debug, Clone, PartialEq)]
pub struct Comparison {
    pub tolerance: f64,
    pub max_relative_deviation: f64,
    /// First `(p, q, left, right)` in row-major order beyond tolerance.
    pub first_mismatch: Option<(usize, usize, f64, f64)>,
}

impl Comparison {
    pub fn passed(&self) -> bool {
        self.first_mismatch.is_none()
    }
}

pub fn relative_deviation(a: f64, b: f64) -> f64 {
    let m = a.abs().max(b.abs());
    if m == 0.0 {
        0.0
    } else {
        (a - b).abs() / m
    }
}

pub fn compare_cophenetic(
    a: &CopheneticMatrix,
    b: &CopheneticMatrix,
    tolerance: f64,
) -> Result<Comparison> {
    if a.n != b.n {
        return Err(Error::invalid(format!(
            "matrices cover {} and {} leaves",
            a.n, b.n
        )));
    }
    let mut out = Comparison {
        tolerance,
        max_relative_deviation: 0.0,
        first_mismatch: None,
    };
    for p in 0..a.n {
        for q in p + 1..a.n {
            let (x, y) = (a.get(p, q), b.get(p, q));
            let dev = relative_deviation(x, y);
            out.max_relative_deviation = out.max_relative_deviation.max(dev);
            if dev > tolerance && out.first_mismatch.is_none() {
                out.first_mismatch = Some((p, q, x, y));
            }
        }
    }
    Ok(out)
}

/// Compares two dendrograms over the same leaves by cophenetic matrix.
pub fn compare_dendrograms(a: &Dendrogram, b: &Dendrogram, tolerance: f64) -> Result<Comparison> {
    compare_cophenetic(&cophenetic(a), &cophenetic(b), tolerance)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn line_complete() {
        let p = PointSet::new(1, vec![0.0, 1.0, 4.0, 6.0]).unwrap();
        let d = naive_hac(&p, Linkage::Complete).unwrap();
        assert_eq!(d.heights(), vec![1.0, 2.0, 6.0]);
        let c = cophenetic(&d);
        assert_eq!(c.get(0, 1), 1.0);
        assert_eq!(c.get(2, 3), 2.0);
        for (p, q) in [(0, 2), (0, 3), (1, 2), (1, 3)] {
            assert_eq!(c.get(p, q), 6.0);
            assert_eq!(c.get(q, p), 6.0);
        }
        assert_eq!(c.get(2, 2), 0.0);
    }

    #[test]
    fn line_ward() {
        let p = PointSet::new(1, vec![0.0, 1.0, 4.0, 6.0]).unwrap();
        let h = naive_hac(&p, Linkage::Ward).unwrap().heights();
        assert_eq!(&h[..2], &[1.0, 2.0]);
        assert!((h[2] - 40.5f64.sqrt()).abs() < 1e-12);
    }

    #[test]
    fn two_points() {
        let p = PointSet::from_rows(&[[0.0, 0.0], [3.0, 4.0]]).unwrap();
        let d = naive_hac(&p, Linkage::Avg1).unwrap();
        assert_eq!(d.heights(), vec![5.0]);
        assert_eq!(cophenetic(&d).get(1, 0), 5.0);
    }

    #[test]
    fn permuting_input_permutes_matrix() {
        let xs = [0.3, 5.1, 2.2, 9.7, 4.4, 7.0];
        let perm = [3, 0, 5, 1, 4, 2];
        let a = PointSet::new(1, xs.to_vec()).unwrap();
        let b = PointSet::new(1, perm.iter().map(|&i| xs[i]).collect()).unwrap();
        for kind in Linkage::ALL {
            let ca = cophenetic(&naive_hac(&a, kind).unwrap());
            let cb = cophenetic(&naive_hac(&b, kind).unwrap());
            for p in 0..6 {
                for q in 0..6 {
                    // Sums run in a different order after relabeling.
                    let (x, y) = (cb.get(p, q), ca.get(perm[p], perm[q]));
                    assert!(relative_deviation(x, y) < 1e-14, "{kind}: {x} vs {y}");
                }
            }
        }
    }

    #[test]
    fn comparison_reports_first_mismatch() {
        let p = PointSet::new(1, vec![0.0, 1.0, 4.0, 6.0]).unwrap();
        let good = naive_hac(&p, Linkage::Complete).unwrap();
        let bad = Dendrogram::parse("0 1 1 2\n2 3 2.5 2\n4 5 6 4\n").unwrap();
        assert!(compare_dendrograms(&good, &good, 1e-9).unwrap().passed());
        let cmp = compare_dendrograms(&good, &bad, 1e-9).unwrap();
        assert_eq!(cmp.first_mismatch, Some((2, 3, 2.0, 2.5)));
        assert!((cmp.max_relative_deviation - 0.2).abs() < 1e-15);
    }

    #[test]
    fn refuses_large_inputs() {
        let p = PointSet::new(1, (0..5000).map(f64::from).collect()).unwrap();
        assert!(matches!(
            naive_hac(&p, Linkage::Ward),
            Err(Error::Refused(_))
        ));
    }
}
