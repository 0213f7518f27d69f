//! Statistical write endurance: per-byte remaining-write budgets, failure
//! events, and the policy-specific effect of a byte failure.

use std::fs::File;
use std::io::{self, BufReader, BufWriter, Read, Write};
use std::path::Path;

use rand::prelude::*;
use rand_chacha::ChaCha12Rng;
use rand_distr::Normal;
use thiserror::Error;

use crate::cache::{FrameState, Policy, MIN_ECB_LEN};
use crate::scalar::Real;

const SNAPSHOT_MAGIC: &[u8; 8] = b"NVLLCRW1";

/// Normal endurance model: each byte's maximum write count is drawn from
/// N(mu, sigma), truncated below at one write and rounded to an integer.
#[derive(Debug, Clone, PartialEq)]
pub struct EnduranceModel {
    pub mu: f64,
    pub sigma: f64,
    pub seed: u64,
}

impl EnduranceModel {
    pub fn new(mu: f64, sigma: f64, seed: u64) -> Self {
        assert!(mu > 0.0, "mu must be positive");
        assert!(sigma >= 0.0, "sigma must be non-negative");
        EnduranceModel { mu, sigma, seed }
    }
}

/// Location of one degradable byte.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct ByteCoord {
    pub set: usize,
    pub way: usize,
    pub byte: usize,
}

/// A byte exhausted its write budget.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct FailureEvent {
    pub coord: ByteCoord,
}

#[derive(Debug, Error)]
pub enum SnapshotError {
    #[error("i/o error: {0}")]
    Io(#[from] io::Error),
    #[error("bad snapshot magic")]
    BadMagic,
    #[error("snapshot geometry {0}x{1}x{2} does not match expectation")]
    GeometryMismatch(u32, u32, u32),
}

/// Remaining-write budgets for every degradable byte of the cache.
///
/// Budgets start as positive integers; the forecaster applies fractional
/// decrements, so entries are stored as scalars. A remapped byte (FD+6
/// spare) holds an infinite budget; an entry of zero means the byte is
/// faulty.
#[derive(Debug, Clone)]
pub struct RwMap<F: Real> {
    sets: usize,
    ways: usize,
    frame_len: usize,
    seed: u64,
    remaining: Vec<F>,
    decrements: u64,
}

impl<F: Real> RwMap<F> {
    /// Draw every byte's budget from the model, reproducibly from its seed.
    pub fn init(sets: usize, ways: usize, frame_len: usize, model: &EnduranceModel) -> Self {
        let mut rng = ChaCha12Rng::seed_from_u64(model.seed);
        let dist = Normal::new(model.mu, model.sigma).expect("valid normal parameters");
        let remaining = (0..sets * ways * frame_len)
            .map(|_| F::from_f64_lossy(dist.sample(&mut rng).round().max(1.0)))
            .collect();
        RwMap {
            sets,
            ways,
            frame_len,
            seed: model.seed,
            remaining,
            decrements: 0,
        }
    }

    pub fn from_values(
        sets: usize,
        ways: usize,
        frame_len: usize,
        seed: u64,
        values: Vec<F>,
    ) -> Self {
        assert_eq!(values.len(), sets * ways * frame_len);
        RwMap {
            sets,
            ways,
            frame_len,
            seed,
            remaining: values,
            decrements: 0,
        }
    }

    pub fn dims(&self) -> (usize, usize, usize) {
        (self.sets, self.ways, self.frame_len)
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn len(&self) -> usize {
        self.remaining.len()
    }

    pub fn is_empty(&self) -> bool {
        self.remaining.is_empty()
    }

    fn idx(&self, c: ByteCoord) -> usize {
        debug_assert!(c.set < self.sets && c.way < self.ways && c.byte < self.frame_len);
        (c.set * self.ways + c.way) * self.frame_len + c.byte
    }

    pub fn coord_of(&self, idx: usize) -> ByteCoord {
        ByteCoord {
            set: idx / (self.ways * self.frame_len),
            way: idx / self.frame_len % self.ways,
            byte: idx % self.frame_len,
        }
    }

    pub fn remaining(&self, c: ByteCoord) -> F {
        self.remaining[self.idx(c)]
    }

    pub fn remaining_at(&self, idx: usize) -> F {
        self.remaining[idx]
    }

    pub fn set_remaining_at(&mut self, idx: usize, v: F) {
        self.remaining[idx] = v;
    }

    /// Total decrements applied through [`record_write`](Self::record_write).
    pub fn total_decrements(&self) -> u64 {
        self.decrements
    }

    /// Account one write to a byte. Returns the failure event when the
    /// budget is exhausted by this write.
    ///
    /// Writing a byte whose budget is already spent is a placement-safety
    /// violation in the caller and panics.
    pub fn record_write(&mut self, c: ByteCoord) -> Option<FailureEvent> {
        let i = self.idx(c);
        let before = self.remaining[i];
        assert!(before > F::zero(), "write to a dead byte at {c:?}");
        self.decrements += 1;
        let after = before - F::one();
        if after <= F::zero() {
            self.remaining[i] = F::zero();
            Some(FailureEvent { coord: c })
        } else {
            self.remaining[i] = after;
            None
        }
    }

    /// Force a byte's budget to zero (fault injection and read-detected
    /// failures).
    pub fn mark_failed(&mut self, c: ByteCoord) {
        let i = self.idx(c);
        self.remaining[i] = F::zero();
    }

    /// Byte remapped to an unwearing spare: it never fails again.
    pub fn mark_remapped(&mut self, c: ByteCoord) {
        let i = self.idx(c);
        self.remaining[i] = F::infinity();
    }

    /// Write the map as a flat binary array with a small header.
    pub fn save(&self, path: &Path) -> Result<(), SnapshotError> {
        let mut w = BufWriter::new(File::create(path)?);
        w.write_all(SNAPSHOT_MAGIC)?;
        w.write_all(&(self.sets as u32).to_le_bytes())?;
        w.write_all(&(self.ways as u32).to_le_bytes())?;
        w.write_all(&(self.frame_len as u32).to_le_bytes())?;
        w.write_all(&self.seed.to_le_bytes())?;
        for &v in &self.remaining {
            w.write_all(&v.to_f64_lossy().to_le_bytes())?;
        }
        w.flush()?;
        Ok(())
    }

    /// Read a map saved with [`save`](Self::save).
    pub fn load(path: &Path) -> Result<Self, SnapshotError> {
        let mut r = BufReader::new(File::open(path)?);
        let mut header = [0u8; 28];
        r.read_exact(&mut header)?;
        if &header[..8] != SNAPSHOT_MAGIC {
            return Err(SnapshotError::BadMagic);
        }
        let sets = u32::from_le_bytes(header[8..12].try_into().unwrap()) as usize;
        let ways = u32::from_le_bytes(header[12..16].try_into().unwrap()) as usize;
        let frame_len = u32::from_le_bytes(header[16..20].try_into().unwrap()) as usize;
        let seed = u64::from_le_bytes(header[20..28].try_into().unwrap());
        let count = sets * ways * frame_len;
        let mut remaining = Vec::with_capacity(count);
        let mut buf = [0u8; 8];
        for _ in 0..count {
            r.read_exact(&mut buf)?;
            remaining.push(F::from_f64_lossy(f64::from_le_bytes(buf)));
        }
        Ok(RwMap {
            sets,
            ways,
            frame_len,
            seed,
            remaining,
            decrements: 0,
        })
    }
}

/// What a disabling policy did with a byte failure.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum DisablingEffect {
    /// The byte is marked faulty in the frame bitmap; the frame stays alive.
    ByteDisabled,
    /// The byte was remapped to a spare (FD+6); capacity is unchanged.
    ByteRemapped,
    /// The whole frame is out of service.
    FrameDisabled,
}

impl DisablingEffect {
    pub fn name(self) -> &'static str {
        match self {
            DisablingEffect::ByteDisabled => "byte_disabled",
            DisablingEffect::ByteRemapped => "byte_remapped",
            DisablingEffect::FrameDisabled => "frame_disabled",
        }
    }
}

/// Apply a byte-failure event to its frame under the given policy.
///
/// Frame-disabling kills the frame on the first failure. FD+6 remaps the
/// first six failed bytes to unwearing spares and disables the frame on the
/// seventh. Byte disabling marks the byte faulty and keeps the frame alive
/// while it can still host the smallest ECC-extended block.
pub fn apply_failure<F: Real>(
    policy: Policy,
    frame: &mut FrameState,
    coord: ByteCoord,
    rw: &mut RwMap<F>,
) -> DisablingEffect {
    match policy {
        Policy::FrameDisable => {
            frame.alive = false;
            DisablingEffect::FrameDisabled
        }
        Policy::FrameDisableEcp6 => {
            if frame.ecp_remaining > 0 {
                frame.ecp_remaining -= 1;
                rw.mark_remapped(coord);
                DisablingEffect::ByteRemapped
            } else {
                frame.alive = false;
                DisablingEffect::FrameDisabled
            }
        }
        Policy::Compressed => {
            frame.bitmap.set(coord.byte, true);
            if frame.bitmap.count_zeros() < MIN_ECB_LEN {
                frame.alive = false;
                DisablingEffect::FrameDisabled
            } else {
                DisablingEffect::ByteDisabled
            }
        }
    }
}
