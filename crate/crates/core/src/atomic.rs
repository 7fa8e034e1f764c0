//! Priority-write cells.
//!
//! A [`MinCell`] keeps the smallest `(distance, id)` pair ever written to it
//! under the lexicographic order, so concurrent writers commute and the final
//! value does not depend on scheduling.

use portable_atomic::AtomicU128;
use std::sync::atomic::{AtomicU64, Ordering};

const EMPTY: u128 = u128::MAX;

#[inline]
fn pack(distance: f64, id: u32) -> u128 {
    debug_assert!(distance >= 0.0, "distances must be nonnegative");
    // -0.0 has its sign bit set and would sort last; +0.0 does not.
    let bits = (distance + 0.0).to_bits() as u128;
    (bits << 64) | id as u128
}

#[inline]
fn unpack(raw: u128) -> Option<(f64, u32)> {
    if raw == EMPTY {
        None
    } else {
        Some((f64::from_bits((raw >> 64) as u64), raw as u32))
    }
}

/// Lock-free `WriteMin` over `(distance, id)` pairs.
///
/// Nonnegative `f64` bit patterns order like the values they encode, so the
/// pair packs into one 128-bit word whose integer order is the lexicographic
/// order on `(distance, id)`.
#[derive(Debug)]
pub struct MinCell(AtomicU128);

impl Default for MinCell {
    fn default() -> Self {
        Self::new()
    }
}

impl MinCell {
    pub const fn new() -> Self {
        MinCell(AtomicU128::new(EMPTY))
    }

    /// Returns true when this write lowered the stored pair.
    #[inline]
    pub fn write_min(&self, distance: f64, id: u32) -> bool {
        let v = pack(distance, id);
        self.0.fetch_min(v, Ordering::AcqRel) > v
    }

    #[inline]
    pub fn get(&self) -> Option<(f64, u32)> {
        unpack(self.0.load(Ordering::Acquire))
    }

    #[inline]
    pub fn clear(&self) {
        self.0.store(EMPTY, Ordering::Release);
    }
}

impl Clone for MinCell {
    fn clone(&self) -> Self {
        MinCell(AtomicU128::new(self.0.load(Ordering::Acquire)))
    }
}

/// Lock-free `WriteMax` over nonnegative reals.
#[derive(Debug, Default)]
pub struct MaxF64(AtomicU64);

impl MaxF64 {
    pub fn new(initial: f64) -> Self {
        MaxF64(AtomicU64::new((initial + 0.0).to_bits()))
    }

    #[inline]
    pub fn write_max(&self, value: f64) {
        self.0.fetch_max((value + 0.0).to_bits(), Ordering::AcqRel);
    }

    #[inline]
    pub fn get(&self) -> f64 {
        f64::from_bits(self.0.load(Ordering::Acquire))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rayon::prelude::*;

    #[test]
    fn smaller_distance_wins() {
        let c = MinCell::new();
        assert_eq!(c.get(), None);
        c.write_min(2.0, 3);
        c.write_min(1.5, 9);
        c.write_min(2.0, 1);
        assert_eq!(c.get(), Some((1.5, 9)));
    }

    #[test]
    fn ties_prefer_smaller_id() {
        let c = MinCell::new();
        c.write_min(2.0, 3);
        c.write_min(2.0, 1);
        assert_eq!(c.get(), Some((2.0, 1)));
    }

    #[test]
    fn negative_zero_is_normalized() {
        let c = MinCell::new();
        c.write_min(1.0, 0);
        c.write_min(-0.0, 5);
        assert_eq!(c.get(), Some((0.0, 5)));
    }

    #[test]
    fn concurrent_writes_commute() {
        let c = MinCell::new();
        (0..10_000u32).into_par_iter().for_each(|i| {
            c.write_min(((i * 7919) % 10_007) as f64 + 1.0, i);
        });
        assert_eq!(c.get(), Some((1.0, 0)));
    }

    #[test]
    fn write_max_keeps_largest() {
        let m = MaxF64::new(0.0);
        (0..1000)
            .into_par_iter()
            .for_each(|i| m.write_max(i as f64));
        assert_eq!(m.get(), 999.0);
    }
}
