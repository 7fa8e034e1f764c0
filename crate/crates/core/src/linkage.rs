//! Linkage criteria: cluster distances, merge statistics, Lance-Williams
//! updates and the search radii that bound nearest-neighbor searches.

use crate::spatial::{distance, squared_distance, PointSet};
use crate::{Error, Result};
use std::collections::HashSet;
use std::fmt;
use std::str::FromStr;

/// Supported linkage criteria. All four are reducible.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Linkage {
    /// Farthest pair of points.
    Complete,
    /// Square root of twice the variance increase.
    Ward,
    /// Mean pairwise Euclidean distance.
    Avg1,
    /// Mean pairwise squared Euclidean distance.
    Avg2,
}

impl Linkage {
    pub const ALL: [Linkage; 4] = [
        Linkage::Complete,
        Linkage::Ward,
        Linkage::Avg1,
        Linkage::Avg2,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Linkage::Complete => "comp",
            Linkage::Ward => "ward",
            Linkage::Avg1 => "avg1",
            Linkage::Avg2 => "avg2",
        }
    }

    /// Cache size used when none is given: distance caching only pays off
    /// where a single distance costs `|A||B|` point distances.
    pub fn default_cache_size(self) -> usize {
        match self {
            Linkage::Avg1 => 64,
            _ => 0,
        }
    }

    /// Whether distances are computed from sufficient statistics alone.
    pub fn is_constant_time(self) -> bool {
        matches!(self, Linkage::Ward | Linkage::Avg2)
    }
}

impl fmt::Display for Linkage {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Linkage {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "comp" | "complete" => Ok(Linkage::Complete),
            "ward" => Ok(Linkage::Ward),
            "avg1" | "average" => Ok(Linkage::Avg1),
            "avg2" => Ok(Linkage::Avg2),
            other => Err(Error::invalid(format!(
                "unknown linkage '{other}' (expected comp, ward, avg1 or avg2)"
            ))),
        }
    }
}

/// Size, centroid and variance of a cluster. `variance` is the sum of
/// squared deviations from the centroid, not their mean.
#[derive(Debug, Clone, PartialEq)]
pub struct ClusterStats {
    pub size: usize,
    pub centroid: Vec<f64>,
    pub variance: f64,
}

impl ClusterStats {
    pub fn singleton(point: &[f64]) -> Self {
        ClusterStats {
            size: 1,
            centroid: point.to_vec(),
            variance: 0.0,
        }
    }

    /// Statistics recomputed directly from the member points.
    pub fn from_members(points: &PointSet, members: &[u32]) -> Result<Self> {
        if members.is_empty() {
            return Err(Error::invalid("cluster has no members"));
        }
        let d = points.dim();
        let mut centroid = vec![0.0; d];
        for &m in members {
            for (c, x) in centroid.iter_mut().zip(points.point(m as usize)) {
                *c += x;
            }
        }
        let n = members.len() as f64;
        centroid.iter_mut().for_each(|c| *c /= n);
        let variance = members
            .iter()
            .map(|&m| squared_distance(points.point(m as usize), &centroid))
            .sum();
        Ok(ClusterStats {
            size: members.len(),
            centroid,
            variance,
        })
    }
}

/// Statistics of `A ∪ B` from those of `A` and `B`.
///
/// The variance decomposes exactly as
/// `Var(A) + Var(B) + |A|·‖x̄_A − x̄_AB‖² + |B|·‖x̄_B − x̄_AB‖²`.
pub fn merge_stats(a: &ClusterStats, b: &ClusterStats) -> ClusterStats {
    let size = a.size + b.size;
    let (na, nb) = (a.size as f64, b.size as f64);
    let centroid = merged_centroid(na, &a.centroid, nb, &b.centroid);
    let variance = merged_variance(
        na,
        &a.centroid,
        a.variance,
        nb,
        &b.centroid,
        b.variance,
        &centroid,
    );
    ClusterStats {
        size,
        centroid,
        variance,
    }
}

pub(crate) fn merged_centroid(na: f64, ca: &[f64], nb: f64, cb: &[f64]) -> Vec<f64> {
    let n = na + nb;
    ca.iter()
        .zip(cb)
        .map(|(x, y)| (na * x + nb * y) / n)
        .collect()
}

pub(crate) fn merged_variance(
    na: f64,
    ca: &[f64],
    va: f64,
    nb: f64,
    cb: &[f64],
    vb: f64,
    merged: &[f64],
) -> f64 {
    (va + vb) + (na * squared_distance(ca, merged) + nb * squared_distance(cb, merged))
}

/// A cluster as seen by [`cluster_distance`]: its member point indices and
/// its statistics.
#[derive(Debug, Clone, Copy)]
pub struct ClusterRef<'a> {
    pub members: &'a [u32],
    pub stats: &'a ClusterStats,
}

/// Distance between two disjoint nonempty clusters under `kind`.
///
/// Ward and avg-2 use the statistics only; complete and avg-1 visit all
/// member pairs.
pub fn cluster_distance(
    kind: Linkage,
    a: ClusterRef<'_>,
    b: ClusterRef<'_>,
    points: &PointSet,
) -> Result<f64> {
    if a.members.is_empty() || b.members.is_empty() {
        return Err(Error::invalid("clusters must be nonempty"));
    }
    let (small, large) = if a.members.len() <= b.members.len() {
        (a.members, b.members)
    } else {
        (b.members, a.members)
    };
    let seen: HashSet<u32> = small.iter().copied().collect();
    if large.iter().any(|m| seen.contains(m)) {
        return Err(Error::invalid("clusters overlap"));
    }
    Ok(match kind {
        Linkage::Complete => complete_distance(points, a.members, b.members),
        Linkage::Avg1 => avg1_distance(points, a.members, b.members),
        Linkage::Ward => ward_distance(
            a.stats.size as f64,
            &a.stats.centroid,
            b.stats.size as f64,
            &b.stats.centroid,
        ),
        Linkage::Avg2 => avg2_distance(
            a.stats.size as f64,
            &a.stats.centroid,
            a.stats.variance,
            b.stats.size as f64,
            &b.stats.centroid,
            b.stats.variance,
        ),
    })
}

#[inline]
pub(crate) fn ward_distance(na: f64, ca: &[f64], nb: f64, cb: &[f64]) -> f64 {
    (2.0 * na * nb / (na + nb) * squared_distance(ca, cb)).sqrt()
}

#[inline]
pub(crate) fn avg2_distance(na: f64, ca: &[f64], va: f64, nb: f64, cb: &[f64], vb: f64) -> f64 {
    squared_distance(ca, cb) + (va / na + vb / nb)
}

/// Mean pairwise Euclidean distance. The cluster holding the smaller point
/// index is always the outer loop, so the result is symmetric bit for bit.
pub(crate) fn avg1_distance(points: &PointSet, a: &[u32], b: &[u32]) -> f64 {
    let (outer, inner) = if a.iter().min() <= b.iter().min() {
        (a, b)
    } else {
        (b, a)
    };
    let mut sum = 0.0;
    for &x in outer {
        let px = points.point(x as usize);
        for &y in inner {
            sum += distance(px, points.point(y as usize));
        }
    }
    sum / (a.len() as f64 * b.len() as f64)
}

pub(crate) fn complete_distance(points: &PointSet, a: &[u32], b: &[u32]) -> f64 {
    let mut best = 0.0f64;
    for &x in a {
        let px = points.point(x as usize);
        for &y in b {
            best = best.max(squared_distance(px, points.point(y as usize)));
        }
    }
    best.sqrt()
}

/// Lance-Williams coefficients for merging `A` and `B` and measuring the
/// result against `C`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LwCoefficients {
    pub a1: f64,
    pub a2: f64,
    pub b: f64,
    pub c: f64,
}

pub fn lw_coefficients(kind: Linkage, sizes: (usize, usize, usize)) -> LwCoefficients {
    let (na, nb, nc) = (sizes.0 as f64, sizes.1 as f64, sizes.2 as f64);
    match kind {
        Linkage::Complete => LwCoefficients {
            a1: 0.5,
            a2: 0.5,
            b: 0.0,
            c: 0.5,
        },
        Linkage::Ward => {
            let t = na + nb + nc;
            LwCoefficients {
                a1: (na + nc) / t,
                a2: (nb + nc) / t,
                b: -nc / t,
                c: 0.0,
            }
        }
        Linkage::Avg1 | Linkage::Avg2 => LwCoefficients {
            a1: na / (na + nb),
            a2: nb / (na + nb),
            b: 0.0,
            c: 0.0,
        },
    }
}

/// `Δ(A ∪ B, C)` from `Δ(A, C)`, `Δ(B, C)` and `Δ(A, B)`.
///
/// Ward distances are squared before combining and the square root of the
/// combination is returned. For complete linkage the coefficients reduce to
/// `max(Δ(A, C), Δ(B, C))`, which is evaluated directly so no rounding is
/// introduced.
pub fn lance_williams(
    kind: Linkage,
    d_ac: f64,
    d_bc: f64,
    d_ab: f64,
    sizes: (usize, usize, usize),
) -> f64 {
    let k = lw_coefficients(kind, sizes);
    match kind {
        Linkage::Complete => d_ac.max(d_bc),
        Linkage::Ward => (k.a1 * d_ac * d_ac + k.a2 * d_bc * d_bc + k.b * d_ab * d_ab)
            .max(0.0)
            .sqrt(),
        Linkage::Avg1 | Linkage::Avg2 => {
            k.a1 * d_ac + k.a2 * d_bc + k.b * d_ab + k.c * (d_ac - d_bc).abs()
        }
    }
}

/// Radius of the centroid ball that must contain the nearest neighbor of a
/// cluster of `cluster_size` points, given that some cluster lies at
/// distance `beta` and the smallest live cluster has `n_min` points.
pub fn search_radius(kind: Linkage, beta: f64, cluster_size: usize, n_min: usize) -> f64 {
    match kind {
        Linkage::Complete | Linkage::Avg1 => beta,
        Linkage::Avg2 => beta.sqrt(),
        Linkage::Ward => {
            let (c, m) = (cluster_size as f64, n_min as f64);
            beta * ((c + m) / (2.0 * m * c)).sqrt()
        }
    }
}

/// Checks the reducibility implication on one instance: if `Δ(A, B)` is
/// smaller than both `Δ(A, C)` and `Δ(B, C)`, then `Δ(A ∪ B, C)` exceeds
/// `Δ(A, B)`. Instances where the premise fails hold vacuously.
pub fn reducibility_holds(
    kind: Linkage,
    a: &[u32],
    b: &[u32],
    c: &[u32],
    points: &PointSet,
) -> Result<bool> {
    let sa = ClusterStats::from_members(points, a)?;
    let sb = ClusterStats::from_members(points, b)?;
    let sc = ClusterStats::from_members(points, c)?;
    let r = |m, s| ClusterRef {
        members: m,
        stats: s,
    };
    let d_ab = cluster_distance(kind, r(a, &sa), r(b, &sb), points)?;
    let d_ac = cluster_distance(kind, r(a, &sa), r(c, &sc), points)?;
    let d_bc = cluster_distance(kind, r(b, &sb), r(c, &sc), points)?;
    if !(d_ab < d_ac && d_ab < d_bc) {
        return Ok(true);
    }
    let ab: Vec<u32> = a.iter().chain(b).copied().collect();
    let sab = merge_stats(&sa, &sb);
    let d_abc = cluster_distance(kind, r(&ab, &sab), r(c, &sc), points)?;
    Ok(d_ab < d_abc)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::oracle::definitional_distance;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn rel(a: f64, b: f64) -> f64 {
        let m = a.abs().max(b.abs());
        if m == 0.0 {
            0.0
        } else {
            (a - b).abs() / m
        }
    }

    fn dist(kind: Linkage, pts: &PointSet, a: &[u32], b: &[u32]) -> f64 {
        let sa = ClusterStats::from_members(pts, a).unwrap();
        let sb = ClusterStats::from_members(pts, b).unwrap();
        cluster_distance(
            kind,
            ClusterRef {
                members: a,
                stats: &sa,
            },
            ClusterRef {
                members: b,
                stats: &sb,
            },
            pts,
        )
        .unwrap()
    }

    #[test]
    fn parse_names() {
        for k in Linkage::ALL {
            assert_eq!(k.name().parse::<Linkage>().unwrap(), k);
        }
        assert!("single".parse::<Linkage>().is_err());
        assert_eq!(Linkage::Avg1.default_cache_size(), 64);
        assert_eq!(Linkage::Ward.default_cache_size(), 0);
    }

    #[test]
    fn singleton_pair_distances() {
        let pts = PointSet::from_rows(&[[0.0, 0.0], [3.0, 4.0]]).unwrap();
        assert_eq!(dist(Linkage::Complete, &pts, &[0], &[1]), 5.0);
        assert_eq!(dist(Linkage::Avg1, &pts, &[0], &[1]), 5.0);
        assert_eq!(dist(Linkage::Ward, &pts, &[0], &[1]), 5.0);
        assert_eq!(dist(Linkage::Avg2, &pts, &[0], &[1]), 25.0);
    }

    #[test]
    fn two_against_one() {
        let pts = PointSet::from_rows(&[[0.0, 0.0], [2.0, 0.0], [5.0, 0.0]]).unwrap();
        assert_eq!(dist(Linkage::Complete, &pts, &[0, 1], &[2]), 5.0);
        assert_eq!(dist(Linkage::Avg1, &pts, &[0, 1], &[2]), 4.0);
        assert_eq!(dist(Linkage::Avg2, &pts, &[0, 1], &[2]), 17.0);
        let ward = dist(Linkage::Ward, &pts, &[0, 1], &[2]);
        assert!(rel(ward, (64.0f64 / 3.0).sqrt()) < 1e-15);
        // Variance form: Var(A∪B) = 4+0+9 - 3·(7/3)²... computed directly.
        let v = |m: &[u32]| ClusterStats::from_members(&pts, m).unwrap().variance;
        let var_form = (2.0 * (v(&[0, 1, 2]) - v(&[0, 1]) - v(&[2]))).sqrt();
        assert!(rel(ward, var_form) < 1e-12);
    }

    #[test]
    fn overlapping_clusters_rejected() {
        let pts = PointSet::from_rows(&[[0.0], [1.0]]).unwrap();
        let s = ClusterStats::from_members(&pts, &[0, 1]).unwrap();
        let r = ClusterRef {
            members: &[0, 1],
            stats: &s,
        };
        assert!(cluster_distance(Linkage::Avg1, r, r, &pts).is_err());
    }

    #[test]
    fn merge_stats_examples() {
        let m = merge_stats(
            &ClusterStats::singleton(&[0.0, 0.0]),
            &ClusterStats::singleton(&[2.0, 0.0]),
        );
        assert_eq!(
            (m.size, m.centroid.clone(), m.variance),
            (2, vec![1.0, 0.0], 2.0)
        );

        let m2 = merge_stats(&m, &ClusterStats::singleton(&[4.0, 0.0]));
        assert_eq!(
            (m2.size, m2.centroid.clone(), m2.variance),
            (3, vec![2.0, 0.0], 8.0)
        );

        let coincident = ClusterStats::singleton(&[1.0, 0.0]);
        let m3 = merge_stats(&m, &coincident);
        assert_eq!(m3.variance, m.variance);
    }

    #[test]
    fn merge_stats_matches_recomputation() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        for _ in 0..200 {
            let d = rng.random_range(1..6);
            let n = rng.random_range(2..64);
            let coords = (0..n * d)
                .map(|_| rng.random_range(-100.0..100.0))
                .collect();
            let pts = PointSet::new(d, coords).unwrap();
            let split = rng.random_range(1..n) as u32;
            let a: Vec<u32> = (0..split).collect();
            let b: Vec<u32> = (split..n as u32).collect();
            let all: Vec<u32> = (0..n as u32).collect();
            let merged = merge_stats(
                &ClusterStats::from_members(&pts, &a).unwrap(),
                &ClusterStats::from_members(&pts, &b).unwrap(),
            );
            let direct = ClusterStats::from_members(&pts, &all).unwrap();
            assert_eq!(merged.size, direct.size);
            assert!(rel(merged.variance, direct.variance) < 1e-9);
            for (x, y) in merged.centroid.iter().zip(&direct.centroid) {
                assert!((x - y).abs() <= 1e-9 * (1.0 + y.abs()));
            }
        }
    }

    #[test]
    fn lance_williams_examples() {
        assert_eq!(
            lance_williams(Linkage::Complete, 5.0, 3.0, 2.0, (1, 1, 1)),
            5.0
        );
        let c = lw_coefficients(Linkage::Complete, (1, 1, 1));
        assert_eq!(c.a1 * 5.0 + c.a2 * 3.0 + c.b * 2.0 + c.c * 2.0, 5.0);
        assert_eq!(lance_williams(Linkage::Avg1, 5.0, 3.0, 2.0, (1, 1, 1)), 4.0);
        let w = lance_williams(Linkage::Ward, 5.0, 3.0, 2.0, (1, 1, 1));
        assert!(rel(w, (64.0f64 / 3.0).sqrt()) < 1e-15);
    }

    #[test]
    fn lance_williams_matches_direct() {
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        for kind in Linkage::ALL {
            for _ in 0..300 {
                let d = rng.random_range(1..4);
                let n = rng.random_range(3..40);
                let coords = (0..n * d).map(|_| rng.random_range(-10.0..10.0)).collect();
                let pts = PointSet::new(d, coords).unwrap();
                let i = rng.random_range(1..n - 1) as u32;
                let j = rng.random_range(i + 1..n as u32);
                let a: Vec<u32> = (0..i).collect();
                let b: Vec<u32> = (i..j).collect();
                let c: Vec<u32> = (j..n as u32).collect();
                let ab: Vec<u32> = (0..j).collect();
                let lw = lance_williams(
                    kind,
                    dist(kind, &pts, &a, &c),
                    dist(kind, &pts, &b, &c),
                    dist(kind, &pts, &a, &b),
                    (a.len(), b.len(), c.len()),
                );
                let direct = definitional_distance(kind, &pts, &ab, &c);
                assert!(rel(lw, direct) < 1e-9, "{kind}: {lw} vs {direct}");
            }
        }
    }

    #[test]
    fn radius_examples() {
        assert_eq!(search_radius(Linkage::Avg2, 9.0, 5, 1), 3.0);
        assert_eq!(search_radius(Linkage::Complete, 2.5, 5, 1), 2.5);
        assert_eq!(search_radius(Linkage::Avg1, 2.5, 5, 1), 2.5);
        let expected = 3.0 * (6.0f64 / 16.0).sqrt();
        assert!(rel(search_radius(Linkage::Ward, 3.0, 4, 2), expected) < 1e-15);
        assert!((search_radius(Linkage::Ward, 3.0, 4, 2) - 1.8371).abs() < 1e-4);
        assert_eq!(search_radius(Linkage::Ward, 7.0, 1, 1), 7.0);
    }

    #[test]
    fn reducibility_examples() {
        let line = PointSet::new(1, vec![0.0, 1.0, 5.0]).unwrap();
        for kind in Linkage::ALL {
            assert!(reducibility_holds(kind, &[0], &[1], &[2], &line).unwrap());
        }
        let dup = PointSet::new(2, vec![1.0, 1.0, 1.0, 1.0, 4.0, 5.0]).unwrap();
        for kind in Linkage::ALL {
            assert!(reducibility_holds(kind, &[0], &[1], &[2], &dup).unwrap());
        }
    }

    #[test]
    fn one_sided_premise_is_not_enough_for_average() {
        // Δ(A,B) = 1 < Δ(A,C) = 1.1 but Δ(B,C) = 0.1: merging A and B
        // lands at 0.6 from C, closer than A was to B.
        let pts = PointSet::new(1, vec![0.0, 1.0, 1.1]).unwrap();
        let merged = dist(Linkage::Avg1, &pts, &[0, 1], &[2]);
        assert!(merged < 1.0);
        assert!(reducibility_holds(Linkage::Avg1, &[0], &[1], &[2], &pts).unwrap());
    }
}
