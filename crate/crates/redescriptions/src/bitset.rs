//! Fixed-width bitsets over object positions.
//!
//! Every set of objects in the miner is a subset of one universe whose size
//! is fixed at load time, so all operations work on equal-length sets and
//! keep the unused tail bits of the last block zero.

const BITS: usize = u64::BITS as usize;

#[derive(Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct BitSet {
    len: usize,
    blocks: Vec<u64>,
}

impl BitSet {
    /// The empty set over a universe of `len` positions.
    pub fn new(len: usize) -> Self {
        BitSet {
            len,
            blocks: vec![0; len.div_ceil(BITS)],
        }
    }

    /// The full set {0, .., len-1}.
    pub fn full(len: usize) -> Self {
        let mut s = BitSet {
            len,
            blocks: vec![!0u64; len.div_ceil(BITS)],
        };
        s.mask_tail();
        s
    }

    pub fn from_positions<I: IntoIterator<Item = usize>>(len: usize, positions: I) -> Self {
        let mut s = BitSet::new(len);
        for p in positions {
            s.insert(p);
        }
        s
    }

    fn mask_tail(&mut self) {
        let used = self.len % BITS;
        if used != 0 {
            if let Some(last) = self.blocks.last_mut() {
                *last &= (1u64 << used) - 1;
            }
        }
    }

    pub fn len(&self) -> usize {
        self.len
    }

    pub fn insert(&mut self, pos: usize) {
        assert!(pos < self.len, "position {pos} out of range {}", self.len);
        self.blocks[pos / BITS] |= 1 << (pos % BITS);
    }

    pub fn remove(&mut self, pos: usize) {
        assert!(pos < self.len);
        self.blocks[pos / BITS] &= !(1 << (pos % BITS));
    }

    pub fn contains(&self, pos: usize) -> bool {
        pos < self.len && self.blocks[pos / BITS] & (1 << (pos % BITS)) != 0
    }

    pub fn count(&self) -> usize {
        self.blocks.iter().map(|b| b.count_ones() as usize).sum()
    }

    pub fn is_empty(&self) -> bool {
        self.blocks.iter().all(|&b| b == 0)
    }

    pub fn is_full(&self) -> bool {
        self.count() == self.len
    }

    /// True if the set is neither empty nor the whole universe.
    pub fn is_proper_nonempty(&self) -> bool {
        let c = self.count();
        c >= 1 && c < self.len
    }

    pub fn and(&self, other: &BitSet) -> BitSet {
        self.zip_with(other, |a, b| a & b)
    }

    pub fn or(&self, other: &BitSet) -> BitSet {
        self.zip_with(other, |a, b| a | b)
    }

    /// Set difference `self - other`.
    pub fn and_not(&self, other: &BitSet) -> BitSet {
        self.zip_with(other, |a, b| a & !b)
    }

    pub fn not(&self) -> BitSet {
        let mut s = BitSet {
            len: self.len,
            blocks: self.blocks.iter().map(|b| !b).collect(),
        };
        s.mask_tail();
        s
    }

    pub fn and_with(&mut self, other: &BitSet) {
        debug_assert_eq!(self.len, other.len);
        for (a, b) in self.blocks.iter_mut().zip(&other.blocks) {
            *a &= b;
        }
    }

    pub fn or_with(&mut self, other: &BitSet) {
        debug_assert_eq!(self.len, other.len);
        for (a, b) in self.blocks.iter_mut().zip(&other.blocks) {
            *a |= b;
        }
    }

    /// |self ∩ other| without allocating.
    pub fn intersect_count(&self, other: &BitSet) -> usize {
        debug_assert_eq!(self.len, other.len);
        self.blocks
            .iter()
            .zip(&other.blocks)
            .map(|(a, b)| (a & b).count_ones() as usize)
            .sum()
    }

    /// |self ∪ other| without allocating.
    pub fn union_count(&self, other: &BitSet) -> usize {
        debug_assert_eq!(self.len, other.len);
        self.blocks
            .iter()
            .zip(&other.blocks)
            .map(|(a, b)| (a | b).count_ones() as usize)
            .sum()
    }

    pub fn is_subset_of(&self, other: &BitSet) -> bool {
        debug_assert_eq!(self.len, other.len);
        self.blocks.iter().zip(&other.blocks).all(|(a, b)| a & !b == 0)
    }

    pub fn iter(&self) -> impl Iterator<Item = usize> + '_ {
        self.blocks.iter().enumerate().flat_map(|(bi, &block)| {
            let mut b = block;
            std::iter::from_fn(move || {
                if b == 0 {
                    None
                } else {
                    let tz = b.trailing_zeros() as usize;
                    b &= b - 1;
                    Some(bi * BITS + tz)
                }
            })
        })
    }

    fn zip_with(&self, other: &BitSet, f: impl Fn(u64, u64) -> u64) -> BitSet {
        debug_assert_eq!(self.len, other.len, "bitsets from different universes");
        BitSet {
            len: self.len,
            blocks: self
                .blocks
                .iter()
                .zip(&other.blocks)
                .map(|(&a, &b)| f(a, b))
                .collect(),
        }
    }
}

impl std::fmt::Debug for BitSet {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_set().entries(self.iter()).finish()
    }
}
