//! The round-based nearest-neighbor-chain driver.
//!
//! Every round has three phases. Clusters at the end of a chain (terminals)
//! find their nearest neighbor with a ball search, all chains are extended
//! by one link, and every reciprocal nearest-neighbor pair is merged. Links
//! into merged clusters are cut and their owners become terminals again.

mod clusters;
pub mod dendrogram;
pub mod stats;

use crate::atomic::MinCell;
use crate::cache::{DistanceCache, MergeContext, MergeRecord, Reservation};
use crate::linkage::search_radius;
use crate::spatial::{
    all_nearest_neighbors, mark_uniform_clusters, nearest_point, nearest_point_skipping,
    range_visit_marked, range_visit_seq, squared_distance, KdTree, MarkedHit, PointSet, UnionFind,
    DEFAULT_LEAF_CAPACITY,
};
use crate::{Error, Linkage, Result};
use clusters::Clusters;
use dendrogram::Dendrogram;
use rayon::prelude::*;
use stats::{RoundStats, RunStats, Stopwatch};
use std::collections::HashMap;
use std::sync::atomic::{AtomicU64, Ordering};
use std::sync::Mutex;

const NONE: u32 = u32::MAX;

/// Settings for [`run`].
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RunOptions {
    pub linkage: Linkage,
    /// Entries per cluster cache table; 0 disables caching.
    pub cache_size: usize,
    /// Worker threads; `None` uses the global pool.
    pub threads: Option<usize>,
    /// Count pairs whose distance is computed more than once in a round.
    pub audit_pairs: bool,
}

impl RunOptions {
    pub fn new(linkage: Linkage) -> Self {
        RunOptions {
            linkage,
            cache_size: linkage.default_cache_size(),
            threads: None,
            audit_pairs: false,
        }
    }

    pub fn cache_size(mut self, s: usize) -> Self {
        self.cache_size = s;
        self
    }

    pub fn threads(mut self, t: usize) -> Self {
        self.threads = Some(t);
        self
    }

    pub fn audit_pairs(mut self, on: bool) -> Self {
        self.audit_pairs = on;
        self
    }
}

#[derive(Debug, Clone)]
pub struct RunOutput {
    pub dendrogram: Dendrogram,
    pub stats: RunStats,
}

/// When an observer is called during a round.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RoundEvent {
    /// Chains were just extended; [`RoundView::nearest`] is current.
    NeighborsFound,
    /// Merges and cache updates are done.
    Finished,
}

/// Clusters hierarchically and returns the dendrogram with run counters.
pub fn run(points: &PointSet, opts: &RunOptions) -> Result<RunOutput> {
    run_observed(points, opts, &mut |_: &RoundView<'_>| {})
}

/// [`run`] with a callback that can inspect the engine state twice per
/// round. Meant for testing and diagnostics.
pub fn run_observed(
    points: &PointSet,
    opts: &RunOptions,
    observer: &mut (dyn FnMut(&RoundView<'_>) + Send),
) -> Result<RunOutput> {
    match opts.threads {
        Some(0) => Err(Error::invalid("thread count must be at least 1")),
        Some(t) => {
            let pool = rayon::ThreadPoolBuilder::new()
                .num_threads(t)
                .build()
                .map_err(|e| Error::Internal(format!("thread pool: {e}")))?;
            pool.install(|| Engine::new(points, opts)?.run(observer))
        }
        None => Engine::new(points, opts)?.run(observer),
    }
}

/// Read-only access to the engine between phases.
pub struct RoundView<'a> {
    engine: &'a Engine<'a>,
    event: RoundEvent,
    round: usize,
    terminals: &'a [u32],
}

impl<'a> RoundView<'a> {
    pub fn event(&self) -> RoundEvent {
        self.event
    }

    /// 1-based round number.
    pub fn round(&self) -> usize {
        self.round
    }

    /// Live cluster ids (each the smallest point index in its cluster).
    pub fn active(&self) -> &[u32] {
        &self.engine.active
    }

    /// Clusters that searched for a neighbor this round.
    pub fn terminals(&self) -> &[u32] {
        self.terminals
    }

    pub fn cluster_size(&self, c: u32) -> usize {
        self.engine.clusters.size(c)
    }

    pub fn centroid(&self, c: u32) -> &[f64] {
        self.engine.clusters.centroid(c)
    }

    pub fn smallest_cluster(&self) -> usize {
        self.engine.n_min
    }

    /// Chain successor and the distance to it.
    pub fn nearest(&self, c: u32) -> Option<(u32, f64)> {
        let s = self.engine.succ[c as usize];
        (s != NONE).then(|| (s, self.engine.succ_d[c as usize]))
    }

    /// Direct distance between two live clusters.
    pub fn distance(&self, a: u32, b: u32) -> f64 {
        self.engine.clusters.distance(a, b)
    }

    /// Member points of every live cluster, keyed by cluster id.
    pub fn memberships(&self) -> HashMap<u32, Vec<u32>> {
        let e = self.engine;
        let n = e.points.len();
        let mut parent: Vec<u32> = (0..(2 * n - 1) as u32).collect();
        for (r, &(a, b, _)) in e.raw.iter().enumerate() {
            parent[a as usize] = (n + r) as u32;
            parent[b as usize] = (n + r) as u32;
        }
        let mut out: HashMap<u32, Vec<u32>> = HashMap::new();
        for p in 0..n as u32 {
            let mut x = p;
            while parent[x as usize] != x {
                x = parent[x as usize];
            }
            let slot = e.node_slot[x as usize];
            out.entry(slot).or_default().push(p);
        }
        out
    }

    /// Published cache entries of a live cluster, as `(cluster, distance)`
    /// pairs for clusters that are still alive.
    pub fn cache_entries(&self, c: u32) -> Vec<(u32, f64)> {
        let e = self.engine;
        e.cache
            .entries(e.node[c as usize])
            .into_iter()
            .filter(|&(node, _)| e.node_alive[node as usize])
            .map(|(node, d)| (e.node_slot[node as usize], d))
            .collect()
    }

    /// Entries in cache tables, stale ones included.
    pub fn cache_len(&self, c: u32) -> usize {
        let e = self.engine;
        e.cache.table(e.node[c as usize]).map_or(0, |t| t.len())
    }

    /// Whether a cache entry refers to a cluster that no longer exists.
    pub fn has_stale_cache_entries(&self, c: u32) -> bool {
        let e = self.engine;
        e.cache
            .entries(e.node[c as usize])
            .iter()
            .any(|&(node, _)| !e.node_alive[node as usize])
    }
}

enum Seed {
    Known(u32, u32, f64),
    Pending(u32, u32),
}

struct Engine<'p> {
    points: &'p PointSet,
    kind: Linkage,
    clusters: Clusters<'p>,
    cache: DistanceCache,
    // Per slot.
    node: Vec<u32>,
    alive: Vec<bool>,
    touched: Vec<bool>,
    succ: Vec<u32>,
    succ_d: Vec<f64>,
    pred: Vec<MinCell>,
    cand: Vec<MinCell>,
    // Per dendrogram node.
    node_slot: Vec<u32>,
    node_alive: Vec<bool>,
    active: Vec<u32>,
    n_min: usize,
    uf: Option<UnionFind>,
    point_tree: Option<KdTree>,
    centroid_tree: Option<KdTree>,
    pad: f64,
    raw: Vec<(u32, u32, f64)>,
    stats: RunStats,
    cluster_evals: AtomicU64,
    hits: AtomicU64,
    audit: Option<Mutex<HashMap<(u32, u32), u32>>>,
}

impl<'p> Engine<'p> {
    fn new(points: &'p PointSet, opts: &RunOptions) -> Result<Self> {
        let n = points.len();
        if n == 0 {
            return Err(Error::invalid("no points to cluster"));
        }
        if n > (u32::MAX / 2) as usize {
            return Err(Error::invalid("too many points"));
        }
        let kind = opts.linkage;
        let nodes = 2 * n - 1;
        let mut stats = RunStats::new(
            n,
            points.dim(),
            kind,
            opts.cache_size,
            rayon::current_num_threads(),
        );
        if opts.audit_pairs {
            stats.duplicate_computations = Some(0);
        }
        Ok(Engine {
            points,
            kind,
            clusters: Clusters::new(points, kind),
            cache: DistanceCache::new(opts.cache_size, nodes),
            node: (0..n as u32).collect(),
            alive: vec![true; n],
            touched: vec![false; n],
            succ: vec![NONE; n],
            succ_d: vec![f64::INFINITY; n],
            pred: (0..n).map(|_| MinCell::new()).collect(),
            cand: (0..n).map(|_| MinCell::new()).collect(),
            node_slot: (0..n as u32)
                .chain(std::iter::repeat_n(NONE, n - 1))
                .collect(),
            node_alive: (0..nodes).map(|i| i < n).collect(),
            active: (0..n as u32).collect(),
            n_min: 1,
            uf: None,
            point_tree: None,
            centroid_tree: None,
            pad: 1e-12 * (1.0 + points.magnitude()),
            raw: Vec::with_capacity(n - 1),
            stats,
            cluster_evals: AtomicU64::new(0),
            hits: AtomicU64::new(0),
            audit: opts.audit_pairs.then(|| Mutex::new(HashMap::new())),
        })
    }

    fn run(mut self, observer: &mut (dyn FnMut(&RoundView<'_>) + Send)) -> Result<RunOutput> {
        let n = self.points.len();
        if n == 1 {
            return Ok(RunOutput {
                dendrogram: Dendrogram::from_merges(1, &[])?,
                stats: self.stats,
            });
        }

        let t = Stopwatch::start();
        self.first_round_candidates()?;
        if self.kind == Linkage::Complete {
            self.uf = Some(UnionFind::new(n));
            self.point_tree = Some(KdTree::from_points(self.points, DEFAULT_LEAF_CAPACITY)?);
        }
        self.stats.timings.init += t.elapsed();

        let mut first = true;
        let mut reset_once = false;
        while self.active.len() > 1 {
            let t = Stopwatch::start();
            let terminals: Vec<u32> = self
                .active
                .iter()
                .copied()
                .filter(|&c| self.succ[c as usize] == NONE)
                .collect();
            if !first {
                self.find_nearest_neighbors(&terminals)?;
            }
            first = false;
            self.grow_chains(&terminals)?;
            self.stats.timings.nn += t.elapsed();
            let round = self.stats.rounds.len() + 1;
            observer(&RoundView {
                engine: &self,
                event: RoundEvent::NeighborsFound,
                round,
                terminals: &terminals,
            });

            let t = Stopwatch::start();
            let pairs = self.detect_rnn_pairs(&terminals);
            self.stats.rounds.push(RoundStats {
                terminals: terminals.len(),
                active: self.active.len(),
                merges: pairs.len(),
            });
            if pairs.is_empty() {
                // Only reachable through inconsistent rounding between two
                // evaluations of one distance; restart every chain once.
                if reset_once {
                    return Err(Error::Internal(
                        "a round produced no reciprocal pair".into(),
                    ));
                }
                reset_once = true;
                for &c in &self.active {
                    self.succ[c as usize] = NONE;
                    self.pred[c as usize].clear();
                    self.cand[c as usize].clear();
                }
                self.stats.timings.merge += t.elapsed();
                continue;
            }
            let records = self.record_merges(&pairs);
            self.stats.timings.merge += t.elapsed();

            let t = Stopwatch::start();
            self.apply_merges(&pairs, &records)?;
            self.refresh_index()?;
            self.stats.timings.update += t.elapsed();
            observer(&RoundView {
                engine: &self,
                event: RoundEvent::Finished,
                round,
                terminals: &terminals,
            });
        }

        self.stats.cluster_distances = self.cluster_evals.load(Ordering::Relaxed);
        self.stats.point_distances = self.clusters.point_evals.load(Ordering::Relaxed);
        self.stats.cache_hits = self.hits.load(Ordering::Relaxed);
        let dendrogram = Dendrogram::from_merges(n, &self.raw)?;
        Ok(RunOutput {
            dendrogram,
            stats: self.stats,
        })
    }

    /// Round one: every cluster is a point, so all linkages reduce to the
    /// point distance (squared for avg-2) and one all-nearest-neighbors pass
    /// answers every terminal.
    fn first_round_candidates(&mut self) -> Result<()> {
        let ann = all_nearest_neighbors(self.points)?;
        let avg2 = self.kind == Linkage::Avg2;
        ann.par_iter().enumerate().for_each(|(i, &(j, d))| {
            let d = if avg2 {
                squared_distance(self.points.point(i), self.points.point(j as usize))
            } else {
                d
            };
            self.cand[i].write_min(d, j);
            self.cache.try_cache(i as u32, j, d);
        });
        self.cluster_evals
            .fetch_add(ann.len() as u64, Ordering::Relaxed);
        self.commit_cache()
    }

    fn compute(&self, a: u32, b: u32) -> f64 {
        self.cluster_evals.fetch_add(1, Ordering::Relaxed);
        if let Some(audit) = &self.audit {
            let key = (self.node[a.min(b) as usize], self.node[a.max(b) as usize]);
            *audit.lock().expect("audit lock").entry(key).or_insert(0) += 1;
        }
        self.clusters.distance(a, b)
    }

    /// Nearest other cluster by centroid, or by nearest foreign point for
    /// complete linkage.
    fn nearby_cluster(&self, i: u32) -> Result<u32> {
        let q = self.clusters.centroid(i);
        match (&self.point_tree, &self.uf, &self.centroid_tree) {
            (Some(tree), Some(uf), _) => {
                let (p, _) = nearest_point_skipping(
                    tree,
                    q,
                    |p| uf.find(p) == i,
                    |node| tree.mark(node) == Some(i),
                )?;
                Ok(uf.find(p))
            }
            (_, _, Some(tree)) => Ok(nearest_point(tree, q, |c| c == i)?.0),
            _ => Err(Error::Internal("no spatial index for the round".into())),
        }
    }

    fn beta_seed(&self, i: u32) -> Result<Seed> {
        if let Some((d, p)) = self.pred[i as usize].get() {
            return Ok(Seed::Known(i, p, d));
        }
        let c = self.nearby_cluster(i)?;
        if !self.cache.is_enabled() {
            return Ok(Seed::Known(i, c, self.compute(i, c)));
        }
        let (ni, nc) = (self.node[i as usize], self.node[c as usize]);
        if let Some(d) = self.cache.get_cached(ni, nc)? {
            self.hits.fetch_add(1, Ordering::Relaxed);
            return Ok(Seed::Known(i, c, d));
        }
        Ok(match self.cache.reserve(ni, nc)? {
            Reservation::Won(t) => {
                let d = self.compute(i, c);
                self.cache.publish(t, d);
                Seed::Known(i, c, d)
            }
            // The winner is another terminal in this same pass; its value
            // is read back once the pass is over.
            Reservation::Lost => Seed::Pending(i, c),
            Reservation::Unavailable => Seed::Known(i, c, self.compute(i, c)),
        })
    }

    /// Searches the ball around each terminal and leaves the nearest
    /// neighbor of every terminal in `cand`.
    fn find_nearest_neighbors(&mut self, terminals: &[u32]) -> Result<()> {
        self.active
            .par_iter()
            .for_each(|&c| self.cand[c as usize].clear());
        if let Some(a) = &mut self.audit {
            a.get_mut().expect("audit lock").clear();
        }

        let this = &*self;
        let seeds: Vec<Seed> = terminals
            .par_iter()
            .map(|&i| this.beta_seed(i))
            .collect::<Result<_>>()?;
        let seeds: Vec<(u32, u32, f64)> = seeds
            .into_par_iter()
            .map(|s| match s {
                Seed::Known(i, c, d) => Ok((i, c, d)),
                Seed::Pending(i, c) => {
                    let (ni, nc) = (this.node[i as usize], this.node[c as usize]);
                    match this.cache.get_cached(ni, nc)? {
                        Some(d) => {
                            this.hits.fetch_add(1, Ordering::Relaxed);
                            Ok((i, c, d))
                        }
                        None => Err(Error::Internal(format!(
                            "reserved pair ({i}, {c}) was never published"
                        ))),
                    }
                }
            })
            .collect::<Result<_>>()?;
        for &(i, c, d) in &seeds {
            this.cand[i as usize].write_min(d, c);
            this.cand[c as usize].write_min(d, i);
        }

        seeds.par_iter().for_each(|&(i, c, beta)| {
            let r = search_radius(this.kind, beta, this.clusters.size(i), this.n_min);
            let r = r * (1.0 + 1e-9) + this.pad;
            let center = this.clusters.centroid(i);
            match (&this.point_tree, &this.uf, &this.centroid_tree) {
                (Some(tree), Some(uf), _) => {
                    let mut counts: HashMap<u32, usize> = HashMap::new();
                    range_visit_marked(tree, center, r, |hit| {
                        let (cl, add) = match hit {
                            MarkedHit::Subtree { cluster, count } => (cluster, count),
                            MarkedHit::Item { id, .. } => (uf.find(id), 1),
                        };
                        if cl == i || cl == c {
                            return;
                        }
                        let seen = counts.entry(cl).or_insert(0);
                        *seen += add;
                        if *seen == this.clusters.size(cl) {
                            this.update_nearest_neighbor(i, cl);
                        }
                    });
                }
                (_, _, Some(tree)) => {
                    range_visit_seq(tree, center, r, |j, _| {
                        if j != i && j != c {
                            this.update_nearest_neighbor(i, j);
                        }
                    });
                }
                _ => unreachable!("index is built before the first search"),
            }
        });

        if let Some(a) = &mut self.audit {
            let dup = a
                .get_mut()
                .expect("audit lock")
                .values()
                .filter(|&&k| k > 1)
                .count() as u64;
            *self.stats.duplicate_computations.get_or_insert(0) += dup;
        }
        self.commit_cache()
    }

    fn commit_cache(&mut self) -> Result<()> {
        match self.cache.commit() {
            0 => Ok(()),
            k => Err(Error::Internal(format!(
                "{k} reserved distances were never published"
            ))),
        }
    }

    /// Gets `Δ(i, j)` from the caches or computes it, then offers it to
    /// both candidate entries. A caller that loses the reservation for the
    /// pair leaves both writes to the winner.
    fn update_nearest_neighbor(&self, i: u32, j: u32) {
        let d = if self.cache.is_enabled() {
            let (ni, nj) = (self.node[i as usize], self.node[j as usize]);
            match self.cache.get_cached(ni, nj) {
                Ok(Some(d)) => {
                    self.hits.fetch_add(1, Ordering::Relaxed);
                    d
                }
                _ => match self.cache.reserve(ni, nj) {
                    Ok(Reservation::Won(t)) => {
                        let d = self.compute(i, j);
                        self.cache.publish(t, d);
                        d
                    }
                    Ok(Reservation::Lost) => return,
                    _ => self.compute(i, j),
                },
            }
        } else {
            self.compute(i, j)
        };
        self.cand[i as usize].write_min(d, j);
        self.cand[j as usize].write_min(d, i);
    }

    fn grow_chains(&mut self, terminals: &[u32]) -> Result<()> {
        for &i in terminals {
            let (d, j) = self.cand[i as usize]
                .get()
                .ok_or_else(|| Error::Internal(format!("cluster {i} found no neighbor")))?;
            self.succ[i as usize] = j;
            self.succ_d[i as usize] = d;
        }
        let this = &*self;
        terminals.par_iter().for_each(|&i| {
            let (j, d) = (this.succ[i as usize], this.succ_d[i as usize]);
            this.pred[j as usize].write_min(d, i);
        });
        Ok(())
    }

    /// Reciprocal pairs `(lo, hi, height)`, sorted. Only pairs with a
    /// terminal end can be new, so only terminals are checked.
    fn detect_rnn_pairs(&self, terminals: &[u32]) -> Vec<(u32, u32, f64)> {
        let mut pairs: Vec<(u32, u32, f64)> = terminals
            .par_iter()
            .filter_map(|&i| {
                let j = self.succ[i as usize];
                (self.succ[j as usize] == i).then(|| {
                    let d = self.succ_d[i as usize].min(self.succ_d[j as usize]);
                    (i.min(j), i.max(j), d)
                })
            })
            .collect();
        pairs.sort_unstable_by_key(|p| (p.0, p.1));
        pairs.dedup_by_key(|p| (p.0, p.1));
        pairs
    }

    fn record_merges(&mut self, pairs: &[(u32, u32, f64)]) -> Vec<MergeRecord> {
        let n = self.points.len() as u32;
        pairs
            .iter()
            .map(|&(lo, hi, h)| {
                let parent = n + self.raw.len() as u32;
                let rec = MergeRecord {
                    left: self.node[lo as usize],
                    right: self.node[hi as usize],
                    parent,
                    height: h,
                };
                self.raw.push((rec.left, rec.right, h));
                rec
            })
            .collect()
    }

    fn apply_merges(&mut self, pairs: &[(u32, u32, f64)], records: &[MergeRecord]) -> Result<()> {
        for &(lo, hi, _) in pairs {
            if self.touched[lo as usize] || self.touched[hi as usize] {
                return Err(Error::Internal(format!(
                    "pair ({lo}, {hi}) overlaps another merge"
                )));
            }
            self.touched[lo as usize] = true;
            self.touched[hi as usize] = true;
        }

        if self.cache.is_enabled() {
            let ctx = EngineMergeContext::new(self, records);
            let computed = self.cache.update_cached_dists(records, self.kind, &ctx);
            self.stats.cache_update_distances += computed;
            self.commit_cache()?;
        }

        let mut dead_nodes = Vec::with_capacity(2 * pairs.len());
        for (&(lo, hi, _), rec) in pairs.iter().zip(records) {
            self.clusters.merge(lo, hi);
            if let Some(uf) = &mut self.uf {
                uf.union(lo, hi);
            }
            dead_nodes.extend([rec.left, rec.right]);
            self.node_alive[rec.left as usize] = false;
            self.node_alive[rec.right as usize] = false;
            self.node_alive[rec.parent as usize] = true;
            self.node_slot[rec.parent as usize] = lo;
            self.node[lo as usize] = rec.parent;
            self.alive[hi as usize] = false;
        }
        let alive = &self.alive;
        self.active.retain(|&c| alive[c as usize]);

        for &c in &self.active {
            let ci = c as usize;
            if self.touched[ci] {
                self.succ[ci] = NONE;
                self.pred[ci].clear();
                continue;
            }
            let s = self.succ[ci];
            if s != NONE && self.touched[s as usize] {
                self.succ[ci] = NONE;
            }
            if let Some((_, p)) = self.pred[ci].get() {
                if self.touched[p as usize] {
                    self.pred[ci].clear();
                }
            }
        }
        for &(lo, hi, _) in pairs {
            self.touched[lo as usize] = false;
            self.touched[hi as usize] = false;
        }

        if self.cache.is_enabled() {
            let alive_nodes: Vec<u32> =
                self.active.iter().map(|&c| self.node[c as usize]).collect();
            let node_alive = &self.node_alive;
            self.cache
                .retire(&dead_nodes, &alive_nodes, &|x| node_alive[x as usize]);
        }
        Ok(())
    }

    fn refresh_index(&mut self) -> Result<()> {
        self.n_min = self
            .active
            .iter()
            .map(|&c| self.clusters.size(c))
            .min()
            .unwrap_or(1);
        if self.active.len() < 2 {
            return Ok(());
        }
        match (&mut self.point_tree, &self.uf) {
            (Some(tree), Some(uf)) => mark_uniform_clusters(tree, uf),
            _ => {
                let dim = self.points.dim();
                let mut coords = Vec::with_capacity(self.active.len() * dim);
                for &c in &self.active {
                    coords.extend_from_slice(self.clusters.centroid(c));
                }
                self.centroid_tree = Some(KdTree::build(
                    dim,
                    &coords,
                    &self.active,
                    DEFAULT_LEAF_CAPACITY,
                )?);
            }
        }
        Ok(())
    }
}

/// The engine's clusters as they were before this round's merges, seen
/// through dendrogram node ids.
struct EngineMergeContext<'e, 'p> {
    engine: &'e Engine<'p>,
    merged: HashMap<u32, (u32, u32, f64)>,
}

impl<'e, 'p> EngineMergeContext<'e, 'p> {
    fn new(engine: &'e Engine<'p>, records: &[MergeRecord]) -> Self {
        let mut merged = HashMap::with_capacity(2 * records.len());
        for r in records {
            merged.insert(r.left, (r.right, r.parent, r.height));
            merged.insert(r.right, (r.left, r.parent, r.height));
        }
        EngineMergeContext { engine, merged }
    }

    fn slot(&self, node: u32) -> u32 {
        self.engine.node_slot[node as usize]
    }
}

impl MergeContext for EngineMergeContext<'_, '_> {
    fn size(&self, node: u32) -> usize {
        self.engine.clusters.size(self.slot(node))
    }

    fn merged_into(&self, node: u32) -> Option<(u32, u32, f64)> {
        self.merged.get(&node).copied()
    }

    fn distance(&self, a: u32, b: u32) -> f64 {
        self.engine.clusters.distance(self.slot(a), self.slot(b))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn heights(points: &PointSet, kind: Linkage) -> Vec<f64> {
        run(points, &RunOptions::new(kind))
            .unwrap()
            .dendrogram
            .heights()
    }

    #[test]
    fn single_point() {
        let p = PointSet::new(2, vec![1.0, 2.0]).unwrap();
        let out = run(&p, &RunOptions::new(Linkage::Ward)).unwrap();
        assert!(out.dendrogram.merges().is_empty());
        assert_eq!(out.stats.round_count(), 0);
    }

    #[test]
    fn two_points_every_kind() {
        let p = PointSet::from_rows(&[[0.0, 0.0], [3.0, 4.0]]).unwrap();
        for kind in Linkage::ALL {
            let want = if kind == Linkage::Avg2 { 25.0 } else { 5.0 };
            assert_eq!(heights(&p, kind), vec![want]);
        }
    }

    #[test]
    fn line_example() {
        let p = PointSet::new(1, vec![0.0, 1.0, 4.0, 6.0]).unwrap();
        assert_eq!(heights(&p, Linkage::Complete), vec![1.0, 2.0, 6.0]);
        let w = heights(&p, Linkage::Ward);
        assert_eq!(&w[..2], &[1.0, 2.0]);
        assert!((w[2] - 40.5f64.sqrt()).abs() < 1e-12);
    }

    #[test]
    fn rejects_zero_threads() {
        let p = PointSet::new(1, vec![0.0, 1.0]).unwrap();
        assert!(run(&p, &RunOptions::new(Linkage::Ward).threads(0)).is_err());
    }
}
