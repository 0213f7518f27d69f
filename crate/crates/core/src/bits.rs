//! Fixed-length bit sets for fault bitmaps and write masks.

/// A fixed-length sequence of bits, one per frame byte.
///
/// Used both as a fault bitmap (set bit = faulty/disabled byte) and as a
/// write-control mask (set bit = byte written).
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Bitmap {
    len: usize,
    words: Vec<u64>,
}

impl Bitmap {
    /// All-clear bitmap of `len` bits.
    pub fn new(len: usize) -> Self {
        Bitmap {
            len,
            words: vec![0; len.div_ceil(64)],
        }
    }

    pub fn len(&self) -> usize {
        self.len
    }

    pub fn is_empty(&self) -> bool {
        self.len == 0
    }

    pub fn get(&self, idx: usize) -> bool {
        assert!(idx < self.len, "bit index {idx} out of range {}", self.len);
        self.words[idx / 64] >> (idx % 64) & 1 == 1
    }

    pub fn set(&mut self, idx: usize, value: bool) {
        assert!(idx < self.len, "bit index {idx} out of range {}", self.len);
        let mask = 1u64 << (idx % 64);
        if value {
            self.words[idx / 64] |= mask;
        } else {
            self.words[idx / 64] &= !mask;
        }
    }

    /// Number of set bits.
    pub fn count_ones(&self) -> usize {
        self.words.iter().map(|w| w.count_ones() as usize).sum()
    }

    /// Number of clear bits.
    pub fn count_zeros(&self) -> usize {
        self.len - self.count_ones()
    }

    /// True if no bit is set in both bitmaps.
    pub fn is_disjoint(&self, other: &Bitmap) -> bool {
        assert_eq!(self.len, other.len);
        self.words
            .iter()
            .zip(&other.words)
            .all(|(a, b)| a & b == 0)
    }

    /// Indices of set bits in ascending order.
    pub fn iter_ones(&self) -> impl Iterator<Item = usize> + '_ {
        (0..self.len).filter(move |&i| self.get(i))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn set_get_count() {
        let mut b = Bitmap::new(72);
        assert_eq!(b.count_ones(), 0);
        b.set(0, true);
        b.set(71, true);
        b.set(64, true);
        assert!(b.get(0) && b.get(64) && b.get(71));
        assert!(!b.get(1));
        assert_eq!(b.count_ones(), 3);
        assert_eq!(b.count_zeros(), 69);
        b.set(64, false);
        assert_eq!(b.count_ones(), 2);
        assert_eq!(b.iter_ones().collect::<Vec<_>>(), vec![0, 71]);
    }

    #[test]
    fn disjointness() {
        let mut a = Bitmap::new(10);
        let mut b = Bitmap::new(10);
        a.set(3, true);
        b.set(4, true);
        assert!(a.is_disjoint(&b));
        b.set(3, true);
        assert!(!a.is_disjoint(&b));
    }

    #[test]
    #[should_panic]
    fn out_of_range_panics() {
        let b = Bitmap::new(8);
        b.get(8);
    }
}
