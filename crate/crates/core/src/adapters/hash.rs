use alloc::vec;
use alloc::vec::Vec;

use super::SequentialSet;

pub const BUCKETS: usize = 1000;

/// Hash set with a fixed array of 1000 buckets.
#[derive(Clone, Debug)]
pub struct HashSet1000 {
    buckets: Vec<Vec<u64>>,
    len: usize,
}

impl Default for HashSet1000 {
    fn default() -> Self {
        Self {
            buckets: vec![Vec::new(); BUCKETS],
            len: 0,
        }
    }
}

impl HashSet1000 {
    #[inline]
    fn bucket(key: u64) -> usize {
        (key % BUCKETS as u64) as usize
    }
}

impl SequentialSet for HashSet1000 {
    fn insert(&mut self, key: u64) -> bool {
        let b = &mut self.buckets[Self::bucket(key)];
        if b.contains(&key) {
            return false;
        }
        b.push(key);
        self.len += 1;
        true
    }

    fn erase(&mut self, key: u64) -> bool {
        let b = &mut self.buckets[Self::bucket(key)];
        match b.iter().position(|&k| k == key) {
            Some(i) => {
                b.swap_remove(i);
                self.len -= 1;
                true
            }
            None => false,
        }
    }

    fn find(&self, key: u64) -> bool {
        self.buckets[Self::bucket(key)].contains(&key)
    }

    fn len(&self) -> usize {
        self.len
    }

    fn keys(&self) -> Vec<u64> {
        let mut out: Vec<u64> = self.buckets.iter().flatten().copied().collect();
        out.sort_unstable();
        out
    }
}
