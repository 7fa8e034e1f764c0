//! Exit criteria. Each criterion prints one PASS/FAIL line; the process
//! exits nonzero if any criterion fails.
//!
//! `cargo test --test acceptance -- 3 7` runs only criteria 3 and 7.

use chainhac::cache::{DistanceCache, MergeContext, MergeRecord};
use chainhac::cli::datasets::{gen_gaussian_disc, gen_uniform};
use chainhac::linkage::{
    cluster_distance, lance_williams, merge_stats, reducibility_holds, search_radius, ClusterRef,
};
use chainhac::oracle::{
    compare_dendrograms, definitional_distance, naive_hac, relative_deviation, ward_variance_form,
};
use chainhac::spatial::{distance, squared_distance};
use chainhac::{run, ClusterStats, Dendrogram, Linkage, PointSet, RunOptions};
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use std::collections::HashMap;
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::time::{Duration, Instant};

const REL_TOL: f64 = 1e-9;

type Outcome = (bool, String);
type Criterion = (u32, &'static str, fn() -> Outcome);

fn random_points(rng: &mut ChaCha8Rng, n: usize, d: usize, side: f64) -> PointSet {
    let coords = (0..n * d).map(|_| rng.random_range(0.0..side)).collect();
    PointSet::new(d, coords).unwrap()
}

/// Splits `0..n` into `k` nonempty groups at random.
fn random_partition(rng: &mut ChaCha8Rng, n: usize, k: usize) -> Vec<Vec<u32>> {
    let mut ids: Vec<u32> = (0..n as u32).collect();
    ids.shuffle(rng);
    let mut groups: Vec<Vec<u32>> = ids[..k].iter().map(|&i| vec![i]).collect();
    for &i in &ids[k..] {
        let g = rng.random_range(0..k);
        groups[g].push(i);
    }
    for g in &mut groups {
        g.sort_unstable();
    }
    groups
}

fn stats_of(points: &PointSet, groups: &[Vec<u32>]) -> Vec<ClusterStats> {
    groups
        .iter()
        .map(|g| ClusterStats::from_members(points, g).unwrap())
        .collect()
}

fn dist(
    kind: Linkage,
    points: &PointSet,
    a: &[u32],
    sa: &ClusterStats,
    b: &[u32],
    sb: &ClusterStats,
) -> f64 {
    let ra = ClusterRef {
        members: a,
        stats: sa,
    };
    let rb = ClusterRef {
        members: b,
        stats: sb,
    };
    cluster_distance(kind, ra, rb, points).unwrap()
}

fn c1_oracle_equivalence() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    let mut worst = 0.0f64;
    let mut failures = Vec::new();
    let mut comparisons = 0;
    for inst in 0..200 {
        let n = [16, 64, 256][inst % 3];
        let d = [2, 3, 5][(inst / 3) % 3];
        let pts = random_points(&mut rng, n, d, 100.0);
        for kind in Linkage::ALL {
            let reference = naive_hac(&pts, kind).unwrap();
            for s in [0, 64] {
                let out = run(&pts, &RunOptions::new(kind).cache_size(s)).unwrap();
                let cmp = compare_dendrograms(&out.dendrogram, &reference, REL_TOL).unwrap();
                worst = worst.max(cmp.max_relative_deviation);
                comparisons += 1;
                if !cmp.passed() && failures.len() < 3 {
                    failures.push(format!("instance {inst} n={n} d={d} {kind} s={s}"));
                }
            }
        }
    }
    (
        failures.is_empty(),
        format!(
            "{comparisons} comparisons, max relative deviation {worst:.2e}, failures {failures:?}"
        ),
    )
}

struct LineContext {
    points: PointSet,
    members: HashMap<u32, Vec<u32>>,
    merged: HashMap<u32, (u32, u32, f64)>,
}

impl MergeContext for LineContext {
    fn size(&self, node: u32) -> usize {
        self.members[&node].len()
    }
    fn merged_into(&self, node: u32) -> Option<(u32, u32, f64)> {
        self.merged.get(&node).copied()
    }
    fn distance(&self, a: u32, b: u32) -> f64 {
        definitional_distance(
            Linkage::Avg1,
            &self.points,
            &self.members[&a],
            &self.members[&b],
        )
    }
}

fn c2_fixtures() -> Outcome {
    let line = PointSet::new(1, vec![0.0, 1.0, 4.0, 6.0]).unwrap();
    let comp = run(&line, &RunOptions::new(Linkage::Complete))
        .unwrap()
        .dendrogram
        .heights();
    let ward = run(&line, &RunOptions::new(Linkage::Ward))
        .unwrap()
        .dendrogram
        .heights();
    let comp_ok = comp == vec![1.0, 2.0, 6.0];
    let ward_ok = ward == vec![1.0, 2.0, 40.5f64.sqrt()];

    // {0, 2} and {10, 13} merge in one round; only Δ({2}, {10}) is cached.
    let ctx = LineContext {
        points: PointSet::new(1, vec![0.0, 2.0, 10.0, 13.0]).unwrap(),
        members: (0..4u32)
            .map(|i| (i, vec![i]))
            .chain([(4, vec![0, 1]), (5, vec![2, 3])])
            .collect(),
        merged: [
            (0, (1, 4, 2.0)),
            (1, (0, 4, 2.0)),
            (2, (3, 5, 3.0)),
            (3, (2, 5, 3.0)),
        ]
        .into(),
    };
    let mut cache = DistanceCache::new(8, 7);
    cache.try_cache(0, 1, 2.0);
    cache.try_cache(2, 3, 3.0);
    cache.try_cache(1, 2, 8.0);
    cache.commit();
    let recs = [
        MergeRecord {
            left: 0,
            right: 1,
            parent: 4,
            height: 2.0,
        },
        MergeRecord {
            left: 2,
            right: 3,
            parent: 5,
            height: 3.0,
        },
    ];
    cache.update_cached_dists(&recs, Linkage::Avg1, &ctx);
    let cached = cache.get_cached(4, 5).unwrap();
    let direct = ctx.distance(4, 5);
    let cache_ok = cached == Some(10.5) && direct == 10.5;
    (
        comp_ok && ward_ok && cache_ok,
        format!("comp {comp:?}, ward {ward:?}, cached {cached:?} vs direct {direct}"),
    )
}

fn c3_ball_containment() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let mut summary = Vec::new();
    let mut ok = true;
    for kind in Linkage::ALL {
        let (mut checked, mut violations) = (0usize, 0usize);
        for _ in 0..10_000 {
            let d = [2, 3, 5][rng.random_range(0..3)];
            let n = rng.random_range(4..40);
            let k = rng.random_range(2..=n.min(12));
            let pts = random_points(&mut rng, n, d, 10.0);
            let groups = random_partition(&mut rng, n, k);
            let stats = stats_of(&pts, &groups);
            let n_min = groups.iter().map(Vec::len).min().unwrap();
            let i = rng.random_range(0..k);
            let deltas: Vec<f64> = (0..k)
                .map(|b| {
                    if b == i {
                        f64::INFINITY
                    } else {
                        dist(kind, &pts, &groups[i], &stats[i], &groups[b], &stats[b])
                    }
                })
                .collect();
            // β is the distance to some other cluster, sometimes the nearest.
            let beta = if rng.random_bool(0.3) {
                deltas.iter().copied().fold(f64::INFINITY, f64::min)
            } else {
                let mut other = rng.random_range(0..k - 1);
                if other >= i {
                    other += 1;
                }
                deltas[other]
            };
            let r = search_radius(kind, beta, groups[i].len(), n_min);
            // Slack for rounding in the distance evaluations only.
            let limit = r * (1.0 + 1e-12) + 1e-12;
            let center = &stats[i].centroid;
            for b in (0..k).filter(|&b| b != i && deltas[b] <= beta) {
                checked += 1;
                let inside = match kind {
                    Linkage::Complete => groups[b]
                        .iter()
                        .all(|&p| distance(pts.point(p as usize), center) <= limit),
                    _ => distance(&stats[b].centroid, center) <= limit,
                };
                if !inside {
                    violations += 1;
                }
            }
        }
        ok &= violations == 0;
        summary.push(format!("{kind}: {violations}/{checked}"));
    }
    (
        ok,
        format!(
            "violations per clusters within beta: {}",
            summary.join(", ")
        ),
    )
}

/// Three disjoint random clusters.
fn random_triple(rng: &mut ChaCha8Rng) -> (PointSet, [Vec<u32>; 3]) {
    let d = [2, 3, 5][rng.random_range(0..3)];
    let sizes = [
        rng.random_range(1..8),
        rng.random_range(1..8),
        rng.random_range(1..8),
    ];
    let n: usize = sizes.iter().sum();
    let pts = random_points(rng, n, d, 10.0);
    let mut ids: Vec<u32> = (0..n as u32).collect();
    ids.shuffle(rng);
    let mut it = ids.into_iter();
    let mut take = |k: usize| {
        let mut v: Vec<u32> = it.by_ref().take(k).collect();
        v.sort_unstable();
        v
    };
    let a = take(sizes[0]);
    let b = take(sizes[1]);
    let c = take(sizes[2]);
    (pts, [a, b, c])
}

fn c4_lance_williams() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    let mut summary = Vec::new();
    let mut ok = true;
    for kind in Linkage::ALL {
        let (mut worst, mut bad) = (0.0f64, 0);
        for _ in 0..10_000 {
            let (pts, [a, b, c]) = random_triple(&mut rng);
            let s = stats_of(&pts, &[a.clone(), b.clone(), c.clone()]);
            let d_ac = dist(kind, &pts, &a, &s[0], &c, &s[2]);
            let d_bc = dist(kind, &pts, &b, &s[1], &c, &s[2]);
            let d_ab = dist(kind, &pts, &a, &s[0], &b, &s[1]);
            let lw = lance_williams(kind, d_ac, d_bc, d_ab, (a.len(), b.len(), c.len()));
            let mut ab: Vec<u32> = a.iter().chain(&b).copied().collect();
            ab.sort_unstable();
            let sab = ClusterStats::from_members(&pts, &ab).unwrap();
            let direct = dist(kind, &pts, &ab, &sab, &c, &s[2]);
            let dev = relative_deviation(lw, direct);
            worst = worst.max(dev);
            if dev > REL_TOL {
                bad += 1;
            }
        }
        ok &= bad == 0;
        summary.push(format!("{kind}: {bad} bad, max {worst:.1e}"));
    }
    (ok, summary.join(", "))
}

fn brute_variance(pts: &PointSet, members: &[u32]) -> f64 {
    let d = pts.dim();
    let mut c = vec![0.0; d];
    for &m in members {
        for (x, y) in c.iter_mut().zip(pts.point(m as usize)) {
            *x += y;
        }
    }
    c.iter_mut().for_each(|x| *x /= members.len() as f64);
    members
        .iter()
        .map(|&m| squared_distance(pts.point(m as usize), &c))
        .sum()
}

fn c5_identities() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let (mut avg2, mut ward, mut var) = (0.0f64, 0.0f64, 0.0f64);
    for _ in 0..1000 {
        let (pts, [a, b, _]) = random_triple(&mut rng);
        let sa = ClusterStats::from_members(&pts, &a).unwrap();
        let sb = ClusterStats::from_members(&pts, &b).unwrap();
        avg2 = avg2.max(relative_deviation(
            dist(Linkage::Avg2, &pts, &a, &sa, &b, &sb),
            definitional_distance(Linkage::Avg2, &pts, &a, &b),
        ));
        ward = ward.max(relative_deviation(
            definitional_distance(Linkage::Ward, &pts, &a, &b),
            ward_variance_form(&pts, &a, &b),
        ));
        let merged = merge_stats(&sa, &sb);
        let ab: Vec<u32> = a.iter().chain(&b).copied().collect();
        var = var.max(relative_deviation(
            merged.variance,
            brute_variance(&pts, &ab),
        ));
    }
    (
        avg2 <= REL_TOL && ward <= REL_TOL && var <= REL_TOL,
        format!("max relative deviation: avg2 stats {avg2:.1e}, ward forms {ward:.1e}, merged variance {var:.1e}"),
    )
}

fn c6_reducibility() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(6);
    let mut summary = Vec::new();
    let mut ok = true;
    for kind in Linkage::ALL {
        let violations = (0..2000)
            .filter(|_| {
                let (pts, [a, b, c]) = random_triple(&mut rng);
                !reducibility_holds(kind, &a, &b, &c, &pts).unwrap()
            })
            .count();
        ok &= violations == 0;
        summary.push(format!("{kind}: {violations}"));
    }
    (
        ok,
        format!("violations over 2000 triples: {}", summary.join(", ")),
    )
}

fn same_dendrogram(a: &Dendrogram, b: &Dendrogram) -> bool {
    a.merges() == b.merges()
}

fn c7_determinism() -> Outcome {
    let mut mismatches = Vec::new();
    for inst in 0..20u64 {
        let pts = gen_uniform(10_000, 2, 700 + inst).unwrap();
        for kind in Linkage::ALL {
            let base = run(&pts, &RunOptions::new(kind).threads(1))
                .unwrap()
                .dendrogram;
            for t in [2, 8] {
                let other = run(&pts, &RunOptions::new(kind).threads(t))
                    .unwrap()
                    .dendrogram;
                if !same_dendrogram(&base, &other) {
                    mismatches.push(format!("instance {inst} {kind} threads {t}"));
                }
            }
        }
    }
    (
        mismatches.is_empty(),
        format!("20 instances x 4 linkages x threads {{1,2,8}}, mismatches {mismatches:?}"),
    )
}

/// Peak resident set size of this process, from procfs.
fn peak_rss_bytes() -> Option<u64> {
    let status = std::fs::read_to_string("/proc/self/status").ok()?;
    let line = status.lines().find(|l| l.starts_with("VmHWM:"))?;
    let kb: u64 = line.split_whitespace().nth(1)?.parse().ok()?;
    Some(kb * 1024)
}

fn c8_linear_memory() -> Outcome {
    const LIMIT: u64 = 2 << 30;
    let pts = gen_uniform(1_000_000, 2, 8).unwrap();
    let start = Instant::now();
    let out = run(&pts, &RunOptions::new(Linkage::Ward).cache_size(0));
    let elapsed = start.elapsed();
    let peak = peak_rss_bytes();
    match (out, peak) {
        (Ok(out), Some(peak)) => {
            let valid =
                out.dendrogram.validate().is_ok() && out.dendrogram.merges().len() == 999_999;
            (
                valid && peak <= LIMIT && elapsed < Duration::from_secs(600),
                format!(
                    "{} rounds in {:.1}s, peak RSS {:.0} MiB (limit 2048 MiB)",
                    out.stats.round_count(),
                    elapsed.as_secs_f64(),
                    peak as f64 / (1 << 20) as f64
                ),
            )
        }
        (Err(e), _) => (false, format!("run failed: {e}")),
        (_, None) => (false, "peak RSS unavailable (no /proc/self/status)".into()),
    }
}

fn min_seconds(pts: &PointSet, kind: Linkage, threads: usize) -> f64 {
    (0..3)
        .map(|_| {
            let t = Instant::now();
            run(pts, &RunOptions::new(kind).threads(threads)).unwrap();
            t.elapsed().as_secs_f64()
        })
        .fold(f64::INFINITY, f64::min)
}

fn c9_speedup() -> Outcome {
    let cores = std::thread::available_parallelism().map_or(1, |n| n.get());
    let pts = gen_uniform(100_000, 2, 9).unwrap();
    let mut ok = true;
    let mut summary = Vec::new();
    for kind in [Linkage::Ward, Linkage::Avg2] {
        let t1 = min_seconds(&pts, kind, 1);
        let t8 = min_seconds(&pts, kind, 8);
        let speedup = t1 / t8;
        ok &= speedup >= 2.5;
        summary.push(format!("{kind} {t1:.3}s/{t8:.3}s = {speedup:.2}x"));
    }
    (
        ok,
        format!(
            "need >= 2.50x on 8 threads ({cores} hardware threads available): {}",
            summary.join(", ")
        ),
    )
}

fn c10_range_and_cache() -> Outcome {
    let pts = gen_uniform(30_000, 2, 10).unwrap();
    let n = pts.len() as f64;
    let exhaustive = n * (n - 1.0) / 2.0;
    let d0 = run(&pts, &RunOptions::new(Linkage::Avg1).cache_size(0))
        .unwrap()
        .stats
        .cluster_distances;
    let d64 = run(&pts, &RunOptions::new(Linkage::Avg1).cache_size(64))
        .unwrap()
        .stats
        .cluster_distances;
    let frac = d0 as f64 / exhaustive;
    (
        frac <= 0.20 && d64 < d0,
        format!(
            "D(s=0) = {d0} ({:.3}% of n(n-1)/2), D(s=64) = {d64}",
            100.0 * frac
        ),
    )
}

fn c11_dedup() -> Outcome {
    let mut total = 0u64;
    let mut computed = 0u64;
    let mut runs = 0;
    for seed in 0..4u64 {
        for (label, pts) in [
            ("uniform", gen_uniform(2000, 2, 1100 + seed).unwrap()),
            ("gaussian", gen_gaussian_disc(2000, 2, 1100 + seed).unwrap()),
        ] {
            for kind in Linkage::ALL {
                for s in [16, 64] {
                    let opts = RunOptions::new(kind)
                        .cache_size(s)
                        .threads(8)
                        .audit_pairs(true);
                    let out = run(&pts, &opts).unwrap();
                    let dup = out.stats.duplicate_computations.expect("audit enabled");
                    if dup > 0 {
                        eprintln!(
                            "  {label} seed {seed} {kind} s={s}: {dup} duplicate computations"
                        );
                    }
                    total += dup;
                    computed += out.stats.cluster_distances;
                    runs += 1;
                }
            }
        }
    }
    (
        total == 0,
        format!("{runs} audited runs on 8 threads, {computed} distance evaluations, {total} repeated pairs within a round"),
    )
}

fn main() {
    let criteria: [Criterion; 11] = [
        (1, "oracle equivalence", c1_oracle_equivalence),
        (2, "derived fixtures", c2_fixtures),
        (3, "ball containment", c3_ball_containment),
        (4, "lance-williams consistency", c4_lance_williams),
        (5, "distance identities", c5_identities),
        (6, "reducibility", c6_reducibility),
        (7, "determinism across threads", c7_determinism),
        (8, "linear memory at 1e6 points", c8_linear_memory),
        (9, "parallel speedup", c9_speedup),
        (10, "range query and cache benefit", c10_range_and_cache),
        (11, "pair deduplication", c11_dedup),
    ];
    let only: Vec<u32> = std::env::args()
        .skip(1)
        .filter_map(|a| a.parse().ok())
        .collect();
    let mut failed = Vec::new();
    for (id, name, f) in criteria {
        if !only.is_empty() && !only.contains(&id) {
            continue;
        }
        let start = Instant::now();
        let (ok, detail) = match catch_unwind(AssertUnwindSafe(f)) {
            Ok(r) => r,
            Err(e) => {
                let msg = e
                    .downcast_ref::<String>()
                    .cloned()
                    .or_else(|| e.downcast_ref::<&str>().map(|s| s.to_string()))
                    .unwrap_or_default();
                (false, format!("panicked: {msg}"))
            }
        };
        let verdict = if ok { "PASS" } else { "FAIL" };
        println!(
            "{verdict} [{id:>2}] {name} ({:.1}s): {detail}",
            start.elapsed().as_secs_f64()
        );
        if !ok {
            failed.push(id);
        }
    }
    if failed.is_empty() {
        println!("acceptance: all criteria passed");
    } else {
        println!("acceptance: failed criteria {failed:?}");
        std::process::exit(1);
    }
}
