//! Base-delta-immediate block compression.
//!
//! A block is carved into fixed-width segments; each segment is stored as a
//! narrow delta against either an implicit zero base or one explicit base
//! (the first segment that is not representable as a zero-base delta).
//! Which base each segment used is kept in [`CompressedBlock::base_select`],
//! which travels with the encoding tag as metadata: the payload alone cannot
//! disambiguate the two bases.

use thiserror::Error;

/// Compression encoding classes, in probe order.
///
/// The order doubles as the precedence used by [`BdiCodec::compress`]: the
/// all-zero and repeated-value classes first, then base-delta classes by
/// ascending payload size.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Encoding {
    Zeros,
    Repeat,
    B8D1,
    B4D1,
    B8D2,
    B2D1,
    B4D2,
    B8D4,
    Uncompressed,
}

/// All encodings in compression precedence order.
pub const ENCODINGS: [Encoding; 9] = [
    Encoding::Zeros,
    Encoding::Repeat,
    Encoding::B8D1,
    Encoding::B4D1,
    Encoding::B8D2,
    Encoding::B2D1,
    Encoding::B4D2,
    Encoding::B8D4,
    Encoding::Uncompressed,
];

impl Encoding {
    /// `(base_bytes, delta_bytes)` for the base-delta classes.
    pub fn base_delta_params(self) -> Option<(usize, usize)> {
        match self {
            Encoding::B8D1 => Some((8, 1)),
            Encoding::B4D1 => Some((4, 1)),
            Encoding::B8D2 => Some((8, 2)),
            Encoding::B2D1 => Some((2, 1)),
            Encoding::B4D2 => Some((4, 2)),
            Encoding::B8D4 => Some((8, 4)),
            _ => None,
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            Encoding::Zeros => "zeros",
            Encoding::Repeat => "repeat",
            Encoding::B8D1 => "b8d1",
            Encoding::B4D1 => "b4d1",
            Encoding::B8D2 => "b8d2",
            Encoding::B2D1 => "b2d1",
            Encoding::B4D2 => "b4d2",
            Encoding::B8D4 => "b8d4",
            Encoding::Uncompressed => "uncompressed",
        }
    }
}

/// A compressed cache block: encoding tag, payload, and per-segment base
/// selection bits (bit i set = segment i is a delta against the explicit
/// base). The selection bits are metadata and do not occupy payload bytes.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CompressedBlock {
    pub encoding: Encoding,
    pub payload: Vec<u8>,
    pub base_select: u128,
}

#[derive(Debug, Error, PartialEq, Eq)]
pub enum CodecError {
    #[error("unsupported block size {0} (power of two in 32..=256 required)")]
    UnsupportedBlockSize(usize),
    #[error("payload length {got} does not match class {encoding:?} (expected {expected})")]
    PayloadLength {
        encoding: Encoding,
        expected: usize,
        got: usize,
    },
}

/// Block compressor/decompressor for a fixed block size.
#[derive(Debug, Clone)]
pub struct BdiCodec {
    block_size: usize,
}

impl BdiCodec {
    pub fn new(block_size: usize) -> Result<Self, CodecError> {
        if !block_size.is_power_of_two() || !(32..=256).contains(&block_size) {
            return Err(CodecError::UnsupportedBlockSize(block_size));
        }
        Ok(BdiCodec { block_size })
    }

    pub fn block_size(&self) -> usize {
        self.block_size
    }

    /// Payload size in bytes of an encoding class at this block size.
    pub fn class_size(&self, encoding: Encoding) -> usize {
        match encoding {
            Encoding::Zeros => 1,
            Encoding::Repeat => 8,
            Encoding::Uncompressed => self.block_size,
            e => {
                let (k, d) = e.base_delta_params().unwrap();
                k + (self.block_size / k) * d
            }
        }
    }

    /// Size in bytes of the class a stored block belongs to.
    pub fn compressed_size(&self, cb: &CompressedBlock) -> usize {
        self.class_size(cb.encoding)
    }

    /// Compress a block, probing the classes in precedence order.
    ///
    /// Pure and total: the uncompressed class always succeeds.
    pub fn compress(&self, block: &[u8]) -> CompressedBlock {
        assert_eq!(block.len(), self.block_size, "block size mismatch");
        for encoding in ENCODINGS {
            if let Some(cb) = self.try_encode(encoding, block) {
                return cb;
            }
        }
        unreachable!("uncompressed encoding always succeeds")
    }

    /// Exact inverse of [`compress`](Self::compress).
    pub fn decompress(&self, cb: &CompressedBlock) -> Result<Vec<u8>, CodecError> {
        let expected = self.class_size(cb.encoding);
        if cb.payload.len() != expected {
            return Err(CodecError::PayloadLength {
                encoding: cb.encoding,
                expected,
                got: cb.payload.len(),
            });
        }
        Ok(match cb.encoding {
            Encoding::Zeros => vec![0; self.block_size],
            Encoding::Repeat => {
                let mut out = Vec::with_capacity(self.block_size);
                while out.len() < self.block_size {
                    out.extend_from_slice(&cb.payload);
                }
                out
            }
            Encoding::Uncompressed => cb.payload.clone(),
            e => {
                let (k, d) = e.base_delta_params().unwrap();
                self.decode_base_delta(cb, k, d)
            }
        })
    }

    fn try_encode(&self, encoding: Encoding, block: &[u8]) -> Option<CompressedBlock> {
        match encoding {
            Encoding::Zeros => block.iter().all(|&b| b == 0).then(|| CompressedBlock {
                encoding,
                payload: vec![0],
                base_select: 0,
            }),
            Encoding::Repeat => {
                let first = &block[..8];
                block.chunks_exact(8).all(|c| c == first).then(|| CompressedBlock {
                    encoding,
                    payload: first.to_vec(),
                    base_select: 0,
                })
            }
            Encoding::Uncompressed => Some(CompressedBlock {
                encoding,
                payload: block.to_vec(),
                base_select: 0,
            }),
            e => {
                let (k, d) = e.base_delta_params().unwrap();
                self.encode_base_delta(e, block, k, d)
            }
        }
    }

    fn encode_base_delta(
        &self,
        encoding: Encoding,
        block: &[u8],
        k: usize,
        d: usize,
    ) -> Option<CompressedBlock> {
        let segs: Vec<u64> = block.chunks_exact(k).map(read_le).collect();
        // Explicit base: first segment not representable as a zero-base delta.
        let base = segs.iter().copied().find(|&s| !fits_signed(sext(s, k), d));
        let mut payload = Vec::with_capacity(self.class_size(encoding));
        payload.extend_from_slice(&base.unwrap_or(0).to_le_bytes()[..k]);
        let mut select = 0u128;
        for (i, &seg) in segs.iter().enumerate() {
            let delta = if fits_signed(sext(seg, k), d) {
                seg
            } else {
                let diff = seg.wrapping_sub(base.unwrap()) & width_mask(k);
                if !fits_signed(sext(diff, k), d) {
                    return None;
                }
                select |= 1 << i;
                diff
            };
            payload.extend_from_slice(&delta.to_le_bytes()[..d]);
        }
        Some(CompressedBlock {
            encoding,
            payload,
            base_select: select,
        })
    }

    fn decode_base_delta(&self, cb: &CompressedBlock, k: usize, d: usize) -> Vec<u8> {
        let base = read_le(&cb.payload[..k]);
        let mut out = Vec::with_capacity(self.block_size);
        for (i, chunk) in cb.payload[k..].chunks_exact(d).enumerate() {
            let delta = sext(read_le(chunk), d) as u64;
            let seg = if cb.base_select >> i & 1 == 1 {
                base.wrapping_add(delta)
            } else {
                delta
            } & width_mask(k);
            out.extend_from_slice(&seg.to_le_bytes()[..k]);
        }
        out
    }
}

fn read_le(bytes: &[u8]) -> u64 {
    let mut buf = [0u8; 8];
    buf[..bytes.len()].copy_from_slice(bytes);
    u64::from_le_bytes(buf)
}

/// Value of `v`'s low `bytes` bytes as a sign-extended i64.
fn sext(v: u64, bytes: usize) -> i64 {
    let shift = 64 - 8 * bytes as u32;
    ((v << shift) as i64) >> shift
}

/// True if `x` is representable as a `bytes`-byte two's complement value.
fn fits_signed(x: i64, bytes: usize) -> bool {
    let shift = 64 - 8 * bytes as u32;
    (x << shift) >> shift == x
}

fn width_mask(bytes: usize) -> u64 {
    if bytes == 8 {
        u64::MAX
    } else {
        (1u64 << (8 * bytes)) - 1
    }
}
