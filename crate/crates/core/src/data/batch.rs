use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};

/// Endless stream of index batches over `n` samples. Each epoch is a fresh
/// seeded permutation; the last batch of an epoch may be short so that every
/// sample appears exactly once per epoch.
#[derive(Debug, Clone)]
pub struct BatchIterator {
    batch: usize,
    rng: ChaCha8Rng,
    order: Vec<usize>,
    pos: usize,
    epoch: usize,
}

impl BatchIterator {
    pub fn new(n: usize, batch: usize, seed: u64) -> Result<Self> {
        if n == 0 {
            return Err(Error::Data("cannot batch an empty dataset".into()));
        }
        if batch == 0 {
            return Err(Error::Spec("batch size must be at least 1".into()));
        }
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut order: Vec<usize> = (0..n).collect();
        order.shuffle(&mut rng);
        Ok(BatchIterator { batch, rng, order, pos: 0, epoch: 0 })
    }

    /// Epochs completed so far.
    pub fn epoch(&self) -> usize {
        self.epoch
    }

    pub fn next_batch(&mut self) -> Vec<usize> {
        if self.pos == self.order.len() {
            self.order.shuffle(&mut self.rng);
            self.pos = 0;
            self.epoch += 1;
        }
        let end = (self.pos + self.batch).min(self.order.len());
        let out = self.order[self.pos..end].to_vec();
        self.pos = end;
        out
    }
}

impl Iterator for BatchIterator {
    type Item = Vec<usize>;

    fn next(&mut self) -> Option<Vec<usize>> {
        Some(self.next_batch())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn epoch(it: &mut BatchIterator, n: usize) -> Vec<usize> {
        let mut seen = vec![];
        while seen.len() < n {
            seen.extend(it.next_batch());
        }
        seen
    }

    #[test]
    fn reproducible() {
        let a: Vec<_> = BatchIterator::new(10, 2, 7).unwrap().take(12).collect();
        let b: Vec<_> = BatchIterator::new(10, 2, 7).unwrap().take(12).collect();
        assert_eq!(a, b);
    }

    #[test]
    fn each_once_per_epoch() {
        let mut it = BatchIterator::new(7, 2, 1).unwrap();
        for _ in 0..3 {
            let mut e = epoch(&mut it, 7);
            e.sort();
            assert_eq!(e, (0..7).collect::<Vec<_>>());
        }
        assert_eq!(it.epoch(), 2);
    }

    #[test]
    fn seeds_differ() {
        let a = epoch(&mut BatchIterator::new(12, 2, 1).unwrap(), 12);
        let b = epoch(&mut BatchIterator::new(12, 2, 2).unwrap(), 12);
        assert_ne!(a, b);
    }

    #[test]
    fn empty() {
        assert!(BatchIterator::new(0, 2, 0).is_err());
    }
}
