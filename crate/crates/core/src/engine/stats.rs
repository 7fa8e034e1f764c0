use crate::Linkage;
use std::fmt::Write as _;
use std::time::Duration;

/// Wall-clock timer. Reads zero on `wasm32-unknown-unknown`, which has no
/// clock without JS glue.
#[derive(Debug, Clone, Copy)]
pub(crate) struct Stopwatch {
    #[cfg(not(all(target_arch = "wasm32", target_os = "unknown")))]
    start: std::time::Instant,
}

impl Stopwatch {
    pub(crate) fn start() -> Self {
        Stopwatch {
            #[cfg(not(all(target_arch = "wasm32", target_os = "unknown")))]
            start: std::time::Instant::now(),
        }
    }

    pub(crate) fn elapsed(&self) -> Duration {
        #[cfg(not(all(target_arch = "wasm32", target_os = "unknown")))]
        return self.start.elapsed();
        #[cfg(all(target_arch = "wasm32", target_os = "unknown"))]
        Duration::ZERO
    }
}

/// Sizes seen at the start of one round.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct RoundStats {
    /// Clusters whose nearest neighbor had to be searched (`|Z_i|`).
    pub terminals: usize,
    /// Live clusters (`|A_i|`).
    pub active: usize,
    /// Pairs merged at the end of the round.
    pub merges: usize,
}

/// Wall time per phase. `init` covers input indexing and the first
/// all-nearest-neighbors pass; `update` covers cache propagation and
/// spatial index refreshes between rounds.
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct PhaseTimings {
    pub init: Duration,
    pub nn: Duration,
    pub merge: Duration,
    pub update: Duration,
}

impl PhaseTimings {
    pub fn total(&self) -> Duration {
        self.init + self.nn + self.merge + self.update
    }
}

/// Counters collected by one run.
#[derive(Debug, Clone, PartialEq)]
pub struct RunStats {
    pub n: usize,
    pub dim: usize,
    pub linkage: Linkage,
    pub cache_size: usize,
    pub threads: usize,
    pub rounds: Vec<RoundStats>,
    /// Cluster-distance evaluations during nearest-neighbor search (`D`).
    pub cluster_distances: u64,
    /// Point-to-point distance evaluations inside those cluster distances.
    pub point_distances: u64,
    /// Lookups answered from the caches.
    pub cache_hits: u64,
    /// Direct cluster-distance evaluations made while updating caches.
    pub cache_update_distances: u64,
    /// Pairs computed more than once within a round, when auditing.
    pub duplicate_computations: Option<u64>,
    pub timings: PhaseTimings,
}

impl RunStats {
    pub(crate) fn new(
        n: usize,
        dim: usize,
        linkage: Linkage,
        cache_size: usize,
        threads: usize,
    ) -> Self {
        RunStats {
            n,
            dim,
            linkage,
            cache_size,
            threads,
            rounds: Vec::new(),
            cluster_distances: 0,
            point_distances: 0,
            cache_hits: 0,
            cache_update_distances: 0,
            duplicate_computations: None,
            timings: PhaseTimings::default(),
        }
    }

    pub fn round_count(&self) -> usize {
        self.rounds.len()
    }

    pub fn peak_active(&self) -> usize {
        self.rounds.iter().map(|r| r.active).max().unwrap_or(self.n)
    }

    /// `M = Σ |A_i| (|Z_i| + log2 |A_i|)`.
    pub fn work_m(&self) -> f64 {
        self.rounds
            .iter()
            .map(|r| {
                let a = r.active as f64;
                a * (r.terminals as f64 + a.log2())
            })
            .sum()
    }

    /// Line-oriented `key value` pairs followed by a per-round table.
    pub fn report(&self) -> String {
        let mut s = String::new();
        let secs = |d: Duration| d.as_secs_f64();
        let _ = writeln!(s, "n {}", self.n);
        let _ = writeln!(s, "dims {}", self.dim);
        let _ = writeln!(s, "linkage {}", self.linkage);
        let _ = writeln!(s, "cache_size {}", self.cache_size);
        let _ = writeln!(s, "threads {}", self.threads);
        let _ = writeln!(s, "rounds {}", self.round_count());
        let _ = writeln!(s, "peak_active {}", self.peak_active());
        let _ = writeln!(s, "work_m {}", self.work_m());
        let _ = writeln!(s, "cluster_distances {}", self.cluster_distances);
        let _ = writeln!(s, "point_distances {}", self.point_distances);
        let _ = writeln!(s, "cache_hits {}", self.cache_hits);
        let _ = writeln!(s, "cache_update_distances {}", self.cache_update_distances);
        if let Some(d) = self.duplicate_computations {
            let _ = writeln!(s, "duplicate_computations {d}");
        }
        let _ = writeln!(s, "time_init {:.6}", secs(self.timings.init));
        let _ = writeln!(s, "time_nn {:.6}", secs(self.timings.nn));
        let _ = writeln!(s, "time_merge {:.6}", secs(self.timings.merge));
        let _ = writeln!(s, "time_update {:.6}", secs(self.timings.update));
        let _ = writeln!(s, "time_total {:.6}", secs(self.timings.total()));
        let _ = writeln!(s, "round terminals active merges");
        for (i, r) in self.rounds.iter().enumerate() {
            let _ = writeln!(s, "{} {} {} {}", i + 1, r.terminals, r.active, r.merges);
        }
        s
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn work_counts_rounds() {
        let mut st = RunStats::new(4, 1, Linkage::Ward, 0, 1);
        st.rounds.push(RoundStats {
            terminals: 4,
            active: 4,
            merges: 2,
        });
        st.rounds.push(RoundStats {
            terminals: 2,
            active: 2,
            merges: 1,
        });
        assert_eq!(st.work_m(), 4.0 * 6.0 + 2.0 * 3.0);
        assert_eq!(st.peak_active(), 4);
        let r = st.report();
        assert!(r.contains("rounds 2\n"));
        assert!(r.lines().last().unwrap() == "2 2 2 1");
    }
}
