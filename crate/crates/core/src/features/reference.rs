use alloc::collections::BTreeMap;
use alloc::vec::Vec;
use core::cell::RefCell;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::mst_length;
use crate::math::derive_seed;

/// Fixed seed of the uniform reference draws, independent of any run seed.
pub const REFERENCE_SEED: u64 = 0x4D53_545F_5245_4631;

/// Expected MST length of `n` uniform points in a crop box.
///
/// Euclidean length is homogeneous of degree one, so implementations only
/// provide the unit-box value (half extent 1) and the box scaling is exact.
pub trait MstReference {
    fn unit_length(&self, n: usize) -> f64;

    fn expected_length(&self, n: usize, half_extent: f64) -> f64 {
        half_extent * self.unit_length(n)
    }
}

impl<R: MstReference + ?Sized> MstReference for &R {
    fn unit_length(&self, n: usize) -> f64 {
        (**self).unit_length(n)
    }
}

/// Seeded Monte-Carlo estimate, averaged over `reps` independent draws.
///
/// Draw `r` uses the same random stream for every `n`, so the `n`-point set
/// is a prefix of the `(n+1)`-point set. That correlation keeps the estimate
/// increasing in `n` despite the small rep count.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct MonteCarloReference {
    pub reps: usize,
    pub seed: u64,
}

impl Default for MonteCarloReference {
    fn default() -> Self {
        MonteCarloReference { reps: 16, seed: REFERENCE_SEED }
    }
}

impl MonteCarloReference {
    pub fn with_reps(reps: usize) -> Self {
        MonteCarloReference { reps, ..Default::default() }
    }
}

impl MstReference for MonteCarloReference {
    fn unit_length(&self, n: usize) -> f64 {
        if n < 2 || self.reps == 0 {
            return 0.0;
        }
        let mut pts: Vec<[f64; 3]> = Vec::with_capacity(n);
        let mut total = 0.0;
        for rep in 0..self.reps {
            let mut rng = ChaCha8Rng::seed_from_u64(derive_seed(self.seed, rep as u64));
            pts.clear();
            pts.extend(
                (0..n).map(|_| {
                    [rng.random_range(-1.0..=1.0), rng.random_range(-1.0..=1.0), rng.random_range(-1.0..=1.0)]
                }),
            );
            total += mst_length(&pts).unwrap_or(0.0);
        }
        total / self.reps as f64
    }
}

/// Single-threaded memo over another reference.
#[derive(Debug, Default)]
pub struct CachedReference<R> {
    inner: R,
    cache: RefCell<BTreeMap<usize, f64>>,
}

impl<R: MstReference> CachedReference<R> {
    pub fn new(inner: R) -> Self {
        CachedReference { inner, cache: RefCell::new(BTreeMap::new()) }
    }

    pub fn len(&self) -> usize {
        self.cache.borrow().len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }
}

impl<R: MstReference> MstReference for CachedReference<R> {
    fn unit_length(&self, n: usize) -> f64 {
        if let Some(&v) = self.cache.borrow().get(&n) {
            return v;
        }
        let v = self.inner.unit_length(n);
        self.cache.borrow_mut().insert(n, v);
        v
    }
}
