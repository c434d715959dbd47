//! Dense set of `u32` ids with O(1) insert, remove and uniform sampling.

use rand::Rng;

const ABSENT: u32 = u32::MAX;

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct IndexedSet {
    items: Vec<u32>,
    /// Position of each id in `items`, or `ABSENT`.
    slots: Vec<u32>,
}

impl IndexedSet {
    /// Empty set accepting ids in `0..universe`.
    pub fn new(universe: usize) -> Self {
        assert!(universe < ABSENT as usize, "universe too large for u32 ids");
        Self {
            items: Vec::new(),
            slots: vec![ABSENT; universe],
        }
    }

    pub fn len(&self) -> usize {
        self.items.len()
    }

    pub fn is_empty(&self) -> bool {
        self.items.is_empty()
    }

    pub fn contains(&self, id: u32) -> bool {
        self.slots[id as usize] != ABSENT
    }

    /// Returns `false` if `id` was already present.
    pub fn insert(&mut self, id: u32) -> bool {
        let slot = &mut self.slots[id as usize];
        if *slot != ABSENT {
            return false;
        }
        *slot = self.items.len() as u32;
        self.items.push(id);
        true
    }

    /// Swap-remove. Returns `false` if `id` was absent.
    pub fn remove(&mut self, id: u32) -> bool {
        let pos = self.slots[id as usize];
        if pos == ABSENT {
            return false;
        }
        let last = self.items.pop().expect("slot points into items");
        if last != id {
            self.items[pos as usize] = last;
            self.slots[last as usize] = pos;
        }
        self.slots[id as usize] = ABSENT;
        true
    }

    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> Option<u32> {
        if self.items.is_empty() {
            None
        } else {
            Some(self.items[rng.random_range(0..self.items.len())])
        }
    }

    pub fn iter(&self) -> impl Iterator<Item = u32> + '_ {
        self.items.iter().copied()
    }
}
