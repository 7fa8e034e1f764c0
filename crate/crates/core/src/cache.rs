//! Bounded per-cluster distance caches.
//!
//! Every live cluster may own a small open-addressing table mapping a
//! neighbor cluster id to the distance between the two. Tables are keyed by
//! dendrogram node id, so a merged cluster never aliases the clusters it was
//! built from. A pair is looked up in the table of its smaller id first, then
//! in the table of its larger id.
//!
//! Distances produced during a parallel phase are not written to the tables
//! directly. They go to an unbounded claim map, where exactly one caller can
//! reserve a pair, and [`DistanceCache::commit`] moves them into the tables
//! once the phase is over. Each table takes its new entries nearest first,
//! so what a full table keeps does not depend on thread timing.
use crate::linkage::{lance_williams, Linkage};
use crate::{Error, Result};
use rayon::prelude::*;
use std::collections::hash_map::Entry;
use std::collections::HashMap;
use std::sync::atomic::{AtomicU32, AtomicU64, AtomicUsize, Ordering};
use std::sync::{Mutex, OnceLock};

const CLAIM_SHARDS: usize = 64;

// Pair -> distance, `None` while reserved and not yet published.
type ClaimShard = Mutex<HashMap<(u32, u32), Option<f64>>>;

const EMPTY_KEY: u32 = u32::MAX;

// Slot value states. Real distances are never NaN, so NaN payloads are free
// to use as markers.
const CLAIMING: u64 = u64::MAX;
const PENDING: u64 = u64::MAX - 1;
const TOMBSTONE: u64 = u64::MAX - 2;

#[derive(Debug, Clone, Copy, PartialEq)]
enum Lookup {
    Missing,
    Pending,
    Value(f64),
}

#[derive(Debug, Clone, Copy, PartialEq)]
enum Claim {
    Claimed(usize),
    Exists,
    Full,
}

/// A concurrent map from neighbor id to distance holding at most
/// `capacity` entries. Keys can be inserted once and are never overwritten.
#[derive(Debug)]
pub struct CacheTable {
    keys: Box<[AtomicU32]>,
    values: Box<[AtomicU64]>,
    capacity: usize,
    len: AtomicUsize,
}

impl CacheTable {
    pub fn new(capacity: usize) -> Self {
        let slots = (2 * capacity.max(1)).next_power_of_two();
        CacheTable {
            keys: (0..slots).map(|_| AtomicU32::new(EMPTY_KEY)).collect(),
            values: (0..slots).map(|_| AtomicU64::new(CLAIMING)).collect(),
            capacity,
            len: AtomicUsize::new(0),
        }
    }

    pub fn capacity(&self) -> usize {
        self.capacity
    }

    /// Entries stored, pending reservations included.
    pub fn len(&self) -> usize {
        self.len.load(Ordering::Acquire)
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    #[inline]
    fn home(&self, key: u32) -> usize {
        let h = (key as u64).wrapping_mul(0x9E37_79B9_7F4A_7C15);
        (h >> 32) as usize & (self.keys.len() - 1)
    }

    fn read_value(&self, slot: usize) -> u64 {
        loop {
            let v = self.values[slot].load(Ordering::Acquire);
            if v != CLAIMING {
                return v;
            }
            // Another thread is between taking the slot and checking the
            // capacity; that takes a handful of instructions.
            std::hint::spin_loop();
            std::thread::yield_now();
        }
    }

    fn lookup(&self, key: u32) -> Lookup {
        let mask = self.keys.len() - 1;
        let mut slot = self.home(key);
        for _ in 0..self.keys.len() {
            let k = self.keys[slot].load(Ordering::Acquire);
            if k == EMPTY_KEY {
                return Lookup::Missing;
            }
            if k == key {
                return match self.read_value(slot) {
                    TOMBSTONE => Lookup::Missing,
                    PENDING => Lookup::Pending,
                    bits => Lookup::Value(f64::from_bits(bits)),
                };
            }
            slot = (slot + 1) & mask;
        }
        Lookup::Missing
    }

    /// Takes a slot for `key` whose value starts out pending.
    fn claim(&self, key: u32) -> Claim {
        let mask = self.keys.len() - 1;
        let mut slot = self.home(key);
        for _ in 0..self.keys.len() {
            match self.keys[slot].compare_exchange(
                EMPTY_KEY,
                key,
                Ordering::AcqRel,
                Ordering::Acquire,
            ) {
                Ok(_) => {
                    let counted = self
                        .len
                        .fetch_update(Ordering::AcqRel, Ordering::Acquire, |l| {
                            (l < self.capacity).then_some(l + 1)
                        })
                        .is_ok();
                    return if counted {
                        self.values[slot].store(PENDING, Ordering::Release);
                        Claim::Claimed(slot)
                    } else {
                        self.values[slot].store(TOMBSTONE, Ordering::Release);
                        Claim::Full
                    };
                }
                Err(k) if k == key => {
                    return match self.read_value(slot) {
                        TOMBSTONE => Claim::Full,
                        _ => Claim::Exists,
                    };
                }
                Err(_) => slot = (slot + 1) & mask,
            }
        }
        Claim::Full
    }

    fn publish(&self, slot: usize, d: f64) {
        debug_assert!(d >= 0.0);
        self.values[slot].store((d + 0.0).to_bits(), Ordering::Release);
    }

    /// Published distance for `key`, if any.
    pub fn get(&self, key: u32) -> Option<f64> {
        match self.lookup(key) {
            Lookup::Value(d) => Some(d),
            _ => None,
        }
    }

    /// Inserts `key -> d` unless the key is present or the table is full.
    pub fn insert(&self, key: u32, d: f64) -> bool {
        match self.claim(key) {
            Claim::Claimed(slot) => {
                self.publish(slot, d);
                true
            }
            _ => false,
        }
    }

    /// Published entries in slot order.
    pub fn entries(&self) -> Vec<(u32, f64)> {
        let mut out = Vec::with_capacity(self.len());
        for slot in 0..self.keys.len() {
            let k = self.keys[slot].load(Ordering::Acquire);
            if k == EMPTY_KEY {
                continue;
            }
            let v = self.values[slot].load(Ordering::Acquire);
            if v < TOMBSTONE {
                out.push((k, f64::from_bits(v)));
            }
        }
        out
    }

    /// Rebuilds the table keeping only entries whose key passes `keep`.
    /// Pending entries and tombstones are dropped.
    fn compact(&mut self, keep: impl Fn(u32) -> bool) {
        let kept: Vec<(u32, f64)> = self
            .entries()
            .into_iter()
            .filter(|&(k, _)| keep(k))
            .collect();
        for k in self.keys.iter_mut() {
            *k.get_mut() = EMPTY_KEY;
        }
        for v in self.values.iter_mut() {
            *v.get_mut() = CLAIMING;
        }
        *self.len.get_mut() = 0;
        for (k, d) in kept {
            self.insert(k, d);
        }
    }
}

/// Proof of a won reservation; hand it back to [`DistanceCache::publish`].
#[derive(Debug)]
#[must_use]
pub struct Ticket {
    lo: u32,
    hi: u32,
}

impl Ticket {
    /// The reserved pair, smaller id first.
    pub fn pair(&self) -> (u32, u32) {
        (self.lo, self.hi)
    }
}

/// Outcome of [`DistanceCache::reserve`].
#[derive(Debug)]
pub enum Reservation {
    /// This caller owns the pair and must compute and publish it.
    Won(Ticket),
    /// Someone else reserved or stored the pair first.
    Lost,
    /// Caching is disabled.
    Unavailable,
}

/// One merge performed in a round, in dendrogram node ids.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MergeRecord {
    pub left: u32,
    pub right: u32,
    pub parent: u32,
    pub height: f64,
}

/// What the post-merge cache update needs to know about the clusters as
/// they were before the round's merges were applied.
pub trait MergeContext: Sync {
    fn size(&self, node: u32) -> usize;
    /// For a cluster merged this round: its partner, the new cluster and the
    /// merge height.
    fn merged_into(&self, node: u32) -> Option<(u32, u32, f64)>;
    /// Direct distance between two clusters that existed before the merges.
    fn distance(&self, a: u32, b: u32) -> f64;
}

/// All cache tables of a run, indexed by dendrogram node id.
#[derive(Debug)]
pub struct DistanceCache {
    capacity: usize,
    tables: Vec<OnceLock<CacheTable>>,
    claims: Vec<ClaimShard>,
}

impl DistanceCache {
    /// Caches with `capacity` entries per cluster for up to `max_nodes`
    /// dendrogram nodes. Capacity 0 disables caching.
    pub fn new(capacity: usize, max_nodes: usize) -> Self {
        let tables = if capacity == 0 {
            Vec::new()
        } else {
            (0..max_nodes).map(|_| OnceLock::new()).collect()
        };
        DistanceCache {
            capacity,
            tables,
            claims: (0..CLAIM_SHARDS)
                .map(|_| Mutex::new(HashMap::new()))
                .collect(),
        }
    }

    pub fn capacity(&self) -> usize {
        self.capacity
    }

    pub fn is_enabled(&self) -> bool {
        self.capacity > 0
    }

    pub fn table(&self, node: u32) -> Option<&CacheTable> {
        self.tables.get(node as usize)?.get()
    }

    fn table_or_create(&self, node: u32) -> &CacheTable {
        self.tables[node as usize].get_or_init(|| CacheTable::new(self.capacity))
    }

    fn check_pair(&self, i: u32, j: u32) -> Result<()> {
        if i == j {
            return Err(Error::invalid(format!(
                "cache lookup of cluster {i} against itself"
            )));
        }
        let limit = self.tables.len() as u32;
        if self.is_enabled() && (i >= limit || j >= limit) {
            return Err(Error::invalid(format!(
                "cluster id out of range in pair ({i}, {j})"
            )));
        }
        Ok(())
    }

    fn shard(
        &self,
        lo: u32,
        hi: u32,
    ) -> std::sync::MutexGuard<'_, HashMap<(u32, u32), Option<f64>>> {
        let h = ((lo as u64) << 32 | hi as u64).wrapping_mul(0x9E37_79B9_7F4A_7C15);
        self.claims[(h >> 58) as usize % CLAIM_SHARDS]
            .lock()
            .expect("claim shard poisoned")
    }

    /// Cached distance between `i` and `j`: the table of the smaller id,
    /// then the table of the larger id, then values published since the
    /// last commit.
    pub fn get_cached(&self, i: u32, j: u32) -> Result<Option<f64>> {
        self.check_pair(i, j)?;
        if !self.is_enabled() {
            return Ok(None);
        }
        let (lo, hi) = (i.min(j), i.max(j));
        let hit = self
            .table(lo)
            .and_then(|t| t.get(hi))
            .or_else(|| self.table(hi).and_then(|t| t.get(lo)));
        Ok(hit.or_else(|| self.shard(lo, hi).get(&(lo, hi)).copied().flatten()))
    }

    /// Offers `d` for both tables at the next commit.
    pub fn try_cache(&self, i: u32, j: u32, d: f64) {
        if !self.is_enabled() || i == j {
            return;
        }
        let (lo, hi) = (i.min(j), i.max(j));
        if let Entry::Vacant(e) = self.shard(lo, hi).entry((lo, hi)) {
            e.insert(Some(d));
        }
    }

    /// Reserves the pair for the caller unless it is already cached or
    /// reserved. Succeeds for exactly one caller per pair between commits.
    pub fn reserve(&self, i: u32, j: u32) -> Result<Reservation> {
        self.check_pair(i, j)?;
        if !self.is_enabled() {
            return Ok(Reservation::Unavailable);
        }
        let (lo, hi) = (i.min(j), i.max(j));
        if self.table(lo).and_then(|t| t.get(hi)).is_some()
            || self.table(hi).and_then(|t| t.get(lo)).is_some()
        {
            return Ok(Reservation::Lost);
        }
        Ok(match self.shard(lo, hi).entry((lo, hi)) {
            Entry::Vacant(e) => {
                e.insert(None);
                Reservation::Won(Ticket { lo, hi })
            }
            Entry::Occupied(_) => Reservation::Lost,
        })
    }

    /// Fills in a won reservation.
    pub fn publish(&self, ticket: Ticket, d: f64) {
        debug_assert!(d >= 0.0);
        self.shard(ticket.lo, ticket.hi)
            .insert((ticket.lo, ticket.hi), Some(d));
    }

    /// Moves published values into the tables of both clusters of each
    /// pair, nearest first and then by neighbor id, and forgets all claims.
    /// Returns the number of reservations that were never published.
    pub fn commit(&mut self) -> usize {
        let mut unpublished = 0;
        let mut staged: Vec<(u32, f64, u32)> = Vec::new();
        for shard in &mut self.claims {
            for ((lo, hi), d) in shard.get_mut().expect("claim shard poisoned").drain() {
                match d {
                    Some(d) => staged.extend([(lo, d, hi), (hi, d, lo)]),
                    None => unpublished += 1,
                }
            }
        }
        staged.par_sort_unstable_by(|a, b| {
            a.0.cmp(&b.0).then(a.1.total_cmp(&b.1)).then(a.2.cmp(&b.2))
        });
        let this = &*self;
        staged.par_chunk_by(|a, b| a.0 == b.0).for_each(|run| {
            let table = this.table_or_create(run[0].0);
            for &(_, d, key) in run {
                if table.len() == table.capacity() {
                    break;
                }
                table.insert(key, d);
            }
        });
        unpublished
    }

    /// Published entries of one cluster's table.
    pub fn entries(&self, node: u32) -> Vec<(u32, f64)> {
        self.table(node)
            .map(CacheTable::entries)
            .unwrap_or_default()
    }

    /// Carries cached distances across a round of merges.
    ///
    /// For every entry `Δ(C, ℓ)` in the tables of a merged pair `C ∈ {i, j}`
    /// the distance from the new cluster `k` to `ℓ`'s current cluster `g` is
    /// derived with the Lance-Williams recurrence and offered to the tables of
    /// `k` and `g` for the next commit. When `ℓ` itself merged this round the recurrence is
    /// applied twice, once per side. Component distances missing from the
    /// caches are computed directly through `ctx`, so every stored value is
    /// exact up to rounding. Returns the number of direct computations.
    pub fn update_cached_dists<C: MergeContext>(
        &self,
        merges: &[MergeRecord],
        kind: Linkage,
        ctx: &C,
    ) -> u64 {
        if !self.is_enabled() {
            return 0;
        }
        merges
            .par_iter()
            .map(|m| self.update_one(m, kind, ctx))
            .sum()
    }

    fn update_one<C: MergeContext>(&self, m: &MergeRecord, kind: Linkage, ctx: &C) -> u64 {
        let (i, j, k) = (m.left, m.right, m.parent);
        let mut computed = 0u64;
        let mut known = |a: u32, b: u32| -> f64 {
            match self.get_cached(a, b) {
                Ok(Some(d)) => d,
                _ => {
                    computed += 1;
                    ctx.distance(a, b)
                }
            }
        };

        let mut neighbors: Vec<u32> = self
            .entries(i)
            .into_iter()
            .chain(self.entries(j))
            .map(|(l, _)| l)
            .filter(|&l| l != i && l != j)
            .collect();
        neighbors.sort_unstable();
        neighbors.dedup();

        let (si, sj) = (ctx.size(i), ctx.size(j));
        for l in neighbors {
            let merged = ctx.merged_into(l);
            let g = merged.map_or(l, |(_, parent, _)| parent);
            let ticket = match self.reserve(k, g) {
                Ok(Reservation::Won(t)) => t,
                _ => continue,
            };
            let to_k = |x: u32, known: &mut dyn FnMut(u32, u32) -> f64| {
                lance_williams(
                    kind,
                    known(i, x),
                    known(j, x),
                    m.height,
                    (si, sj, ctx.size(x)),
                )
            };
            let d = match merged {
                None => to_k(l, &mut known),
                // Both sides merged. The inner step always runs over the
                // smaller new cluster, so either merge gets the same bits.
                Some((partner, _, h)) if k < g => {
                    let d_l = to_k(l, &mut known);
                    let d_p = to_k(partner, &mut known);
                    lance_williams(kind, d_l, d_p, h, (ctx.size(l), ctx.size(partner), si + sj))
                }
                Some((partner, _, h)) => {
                    let (sl, sp) = (ctx.size(l), ctx.size(partner));
                    let mut to_g = |y: u32| {
                        lance_williams(
                            kind,
                            known(l, y),
                            known(partner, y),
                            h,
                            (sl, sp, ctx.size(y)),
                        )
                    };
                    let d_i = to_g(i);
                    let d_j = to_g(j);
                    lance_williams(kind, d_i, d_j, m.height, (si, sj, sl + sp))
                }
            };
            self.publish(ticket, d);
        }
        computed
    }

    /// Drops the tables of `dead` clusters and removes entries pointing at
    /// clusters that are no longer alive from the tables of `alive` ones.
    /// Call after [`DistanceCache::commit`].
    pub fn retire(&mut self, dead: &[u32], alive: &[u32], is_alive: &(dyn Fn(u32) -> bool + Sync)) {
        if !self.is_enabled() {
            return;
        }
        for &d in dead {
            self.tables[d as usize].take();
        }
        let mut owned: Vec<(u32, CacheTable)> = alive
            .iter()
            .filter_map(|&a| self.tables[a as usize].take().map(|t| (a, t)))
            .collect();
        owned.par_iter_mut().for_each(|(_, t)| t.compact(is_alive));
        for (a, t) in owned {
            let _ = self.tables[a as usize].set(t);
        }
    }
}
