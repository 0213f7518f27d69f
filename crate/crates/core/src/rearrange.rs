//! Intra-frame wear leveling.
//!
//! On a write, the ECC-extended block is laid out over the healthy bytes of
//! the frame starting at a rotating offset: byte `i` lands on the `(i+1)`-th
//! healthy position found scanning circularly from the start offset. The
//! rotation source is one global counter for the whole cache, bumped on
//! every block write, so consecutive writes to the same frame touch
//! different bytes.

use thiserror::Error;

use crate::bits::Bitmap;

#[derive(Debug, Error, PartialEq, Eq)]
pub enum RearrangeError {
    #[error("block of {needed} bytes exceeds the {healthy} healthy bytes of the frame")]
    CapacityExceeded { needed: usize, healthy: usize },
}

/// A block laid out over a frame: byte values plus the write-control mask.
/// Values are significant only where the mask is set.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RearrangedBlock {
    pub values: Vec<u8>,
    pub mask: Bitmap,
}

/// Monotone write counter that supplies the rotating start offset.
#[derive(Debug, Clone)]
pub struct GlobalCounter {
    value: u64,
    stride: u64,
}

impl GlobalCounter {
    /// `stride` must be odd so every offset of an even-sized frame is visited.
    pub fn new(stride: u64) -> Self {
        assert!(stride % 2 == 1, "stride must be odd");
        GlobalCounter { value: 0, stride }
    }

    pub fn value(&self) -> u64 {
        self.value
    }

    /// Current start offset for a frame of `frame_len` bytes; advances the
    /// counter.
    pub fn next_start(&mut self, frame_len: usize) -> usize {
        let start = (self.value % frame_len as u64) as usize;
        self.value += self.stride;
        start
    }
}

impl Default for GlobalCounter {
    fn default() -> Self {
        GlobalCounter::new(1)
    }
}

/// Positions, in placement order, that a block of `len` bytes occupies when
/// scanning circularly from `start` and skipping faulty bytes.
pub fn placement(
    bitmap: &Bitmap,
    start: usize,
    len: usize,
) -> Result<Vec<usize>, RearrangeError> {
    let frame_len = bitmap.len();
    assert!(start < frame_len, "start offset out of range");
    let healthy = bitmap.count_zeros();
    if len > healthy {
        return Err(RearrangeError::CapacityExceeded {
            needed: len,
            healthy,
        });
    }
    let mut positions = Vec::with_capacity(len);
    for i in 0..frame_len {
        if positions.len() == len {
            break;
        }
        let pos = (start + i) % frame_len;
        if !bitmap.get(pos) {
            positions.push(pos);
        }
    }
    Ok(positions)
}

/// Lay out `ecb` over the healthy bytes of a frame from `start`.
pub fn rearrange(
    ecb: &[u8],
    bitmap: &Bitmap,
    start: usize,
) -> Result<RearrangedBlock, RearrangeError> {
    let positions = placement(bitmap, start, ecb.len())?;
    let mut values = vec![0u8; bitmap.len()];
    let mut mask = Bitmap::new(bitmap.len());
    for (&pos, &byte) in positions.iter().zip(ecb) {
        values[pos] = byte;
        mask.set(pos, true);
    }
    debug_assert!(mask.is_disjoint(bitmap));
    Ok(RearrangedBlock { values, mask })
}

/// Inverse of [`rearrange`]: recover `len` block bytes from frame contents.
pub fn derange(
    frame_bytes: &[u8],
    bitmap: &Bitmap,
    start: usize,
    len: usize,
) -> Result<Vec<u8>, RearrangeError> {
    assert_eq!(frame_bytes.len(), bitmap.len());
    let positions = placement(bitmap, start, len)?;
    Ok(positions.iter().map(|&p| frame_bytes[p]).collect())
}
