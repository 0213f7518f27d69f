//! Synthetic access traces and trace file I/O.
//!
//! The binary format is little-endian: a 16-byte header (8-byte magic,
//! u32 version, u32 reserved), then one record per event: a kind byte
//! (0 = read, 1 = write) and an 8-byte block-aligned address, followed by 64
//! payload bytes for writes. A plain-text CSV import
//! (`kind,address_hex,payload_hex`) is accepted for hand-written traces.

use std::fs::File;
use std::io::{self, BufRead, BufReader, BufWriter, Read, Write};
use std::path::Path;

use rand::prelude::*;
use rand_chacha::ChaCha12Rng;
use rand_distr::Zipf;
use thiserror::Error;

const MAGIC: &[u8; 8] = b"NVLLCTRC";
const VERSION: u32 = 1;
/// The on-disk record format stores fixed 64-byte write payloads.
pub const FILE_BLOCK_SIZE: usize = 64;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum AccessKind {
    Read,
    Write,
}

/// One trace event. `payload` is present exactly for writes.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TraceEvent {
    pub kind: AccessKind,
    pub address: u64,
    pub payload: Option<Vec<u8>>,
}

#[derive(Debug, Error)]
pub enum TraceError {
    #[error("i/o error: {0}")]
    Io(#[from] io::Error),
    #[error("bad magic bytes (not a trace file)")]
    BadMagic,
    #[error("unsupported trace version {0}")]
    BadVersion(u32),
    #[error("truncated record at byte offset {offset}")]
    Truncated { offset: u64 },
    #[error("malformed record at byte offset {offset}: {reason}")]
    BadRecord { offset: u64, reason: String },
    #[error("csv parse error at line {line}: {reason}")]
    CsvParse { line: usize, reason: String },
    #[error("invalid trace spec: {0}")]
    InvalidSpec(String),
}

/// Address selection model for synthetic traces.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum AddressModel {
    Uniform,
    Zipf { s: f64 },
    Strided { stride_blocks: u64 },
}

/// Mixture weights over write payload patterns. Weights must sum to 1.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ValueMix {
    pub zeros: f64,
    pub repeated: f64,
    pub small_delta: f64,
    pub random: f64,
}

impl ValueMix {
    pub fn sum(&self) -> f64 {
        self.zeros + self.repeated + self.small_delta + self.random
    }
}

/// Parameters of a synthetic trace, deterministic from `seed`.
#[derive(Debug, Clone, PartialEq)]
pub struct TraceSpec {
    pub length: usize,
    pub write_fraction: f64,
    pub address_model: AddressModel,
    pub footprint_bytes: u64,
    pub value_model: ValueMix,
    pub block_size: usize,
    pub seed: u64,
}

impl TraceSpec {
    pub fn validate(&self) -> Result<(), TraceError> {
        if !(0.0..=1.0).contains(&self.write_fraction) {
            return Err(TraceError::InvalidSpec(format!(
                "write_fraction {} outside [0,1]",
                self.write_fraction
            )));
        }
        if (self.value_model.sum() - 1.0).abs() > 1e-9 {
            return Err(TraceError::InvalidSpec(format!(
                "value model weights sum to {}, expected 1",
                self.value_model.sum()
            )));
        }
        let w = self.value_model;
        if w.zeros < 0.0 || w.repeated < 0.0 || w.small_delta < 0.0 || w.random < 0.0 {
            return Err(TraceError::InvalidSpec("negative value weight".into()));
        }
        if self.footprint_bytes < self.block_size as u64 {
            return Err(TraceError::InvalidSpec(format!(
                "footprint {} smaller than one block",
                self.footprint_bytes
            )));
        }
        if let AddressModel::Zipf { s } = self.address_model {
            if s <= 0.0 {
                return Err(TraceError::InvalidSpec(format!("zipf exponent {s} must be > 0")));
            }
        }
        if self.length == 0 {
            return Ok(()); // empty traces are valid
        }
        Ok(())
    }

    /// Iterator over the trace events. Each call restarts from the seed, so
    /// successive passes are identical.
    pub fn events(&self) -> TraceGenerator {
        TraceGenerator::new(self.clone())
    }

    pub fn collect(&self) -> Vec<TraceEvent> {
        self.events().collect()
    }
}

/// Streaming generator for a [`TraceSpec`].
pub struct TraceGenerator {
    spec: TraceSpec,
    rng: ChaCha12Rng,
    emitted: usize,
    stride_pos: u64,
}

impl TraceGenerator {
    fn new(spec: TraceSpec) -> Self {
        let rng = ChaCha12Rng::seed_from_u64(spec.seed);
        TraceGenerator {
            spec,
            rng,
            emitted: 0,
            stride_pos: 0,
        }
    }

    fn next_address(&mut self) -> u64 {
        let blocks = (self.spec.footprint_bytes / self.spec.block_size as u64).max(1);
        let idx = match self.spec.address_model {
            AddressModel::Uniform => self.rng.gen_range(0..blocks),
            AddressModel::Zipf { s } => {
                let z = Zipf::new(blocks, s).expect("validated zipf parameters");
                (z.sample(&mut self.rng) as u64 - 1).min(blocks - 1)
            }
            AddressModel::Strided { stride_blocks } => {
                let idx = self.stride_pos % blocks;
                self.stride_pos = self.stride_pos.wrapping_add(stride_blocks.max(1));
                idx
            }
        };
        idx * self.spec.block_size as u64
    }

    fn next_payload(&mut self) -> Vec<u8> {
        let bs = self.spec.block_size;
        let w = self.spec.value_model;
        let x: f64 = self.rng.gen();
        if x < w.zeros {
            vec![0; bs]
        } else if x < w.zeros + w.repeated {
            let v: u64 = self.rng.gen();
            let mut block = Vec::with_capacity(bs);
            while block.len() < bs {
                block.extend_from_slice(&v.to_le_bytes());
            }
            block
        } else if x < w.zeros + w.repeated + w.small_delta {
            // Segments within +-60 of one base: pairwise differences fit a
            // signed byte, so the block lands in b8d1 or better.
            let base: u64 = self.rng.gen();
            let mut block = Vec::with_capacity(bs);
            for _ in 0..bs / 8 {
                let d: i64 = self.rng.gen_range(-60..=60);
                block.extend_from_slice(&base.wrapping_add(d as u64).to_le_bytes());
            }
            block
        } else {
            let mut block = vec![0u8; bs];
            self.rng.fill_bytes(&mut block);
            block
        }
    }
}

impl Iterator for TraceGenerator {
    type Item = TraceEvent;

    fn next(&mut self) -> Option<TraceEvent> {
        if self.emitted >= self.spec.length {
            return None;
        }
        self.emitted += 1;
        let is_write = self.rng.gen_bool(self.spec.write_fraction);
        let address = self.next_address();
        let payload = is_write.then(|| self.next_payload());
        Some(TraceEvent {
            kind: if is_write { AccessKind::Write } else { AccessKind::Read },
            address,
            payload,
        })
    }
}

/// Write a trace in the binary format.
pub fn write_trace(path: &Path, events: impl IntoIterator<Item = TraceEvent>) -> Result<u64, TraceError> {
    let mut w = BufWriter::new(File::create(path)?);
    w.write_all(MAGIC)?;
    w.write_all(&VERSION.to_le_bytes())?;
    w.write_all(&0u32.to_le_bytes())?;
    let mut count = 0u64;
    for ev in events {
        let kind = match ev.kind {
            AccessKind::Read => 0u8,
            AccessKind::Write => 1u8,
        };
        w.write_all(&[kind])?;
        w.write_all(&ev.address.to_le_bytes())?;
        if let Some(payload) = &ev.payload {
            assert_eq!(payload.len(), FILE_BLOCK_SIZE, "file format stores 64-byte payloads");
            w.write_all(payload)?;
        }
        count += 1;
    }
    w.flush()?;
    Ok(count)
}

/// Read a binary trace fully into memory.
pub fn read_trace(path: &Path) -> Result<Vec<TraceEvent>, TraceError> {
    let mut r = BufReader::new(File::open(path)?);
    let mut header = [0u8; 16];
    r.read_exact(&mut header).map_err(|_| TraceError::Truncated { offset: 0 })?;
    if &header[..8] != MAGIC {
        return Err(TraceError::BadMagic);
    }
    let version = u32::from_le_bytes(header[8..12].try_into().unwrap());
    if version != VERSION {
        return Err(TraceError::BadVersion(version));
    }
    let mut events = Vec::new();
    let mut offset = 16u64;
    loop {
        let mut kind_byte = [0u8; 1];
        match r.read(&mut kind_byte)? {
            0 => break,
            1 => {}
            _ => unreachable!(),
        }
        let mut addr = [0u8; 8];
        r.read_exact(&mut addr)
            .map_err(|_| TraceError::Truncated { offset })?;
        let address = u64::from_le_bytes(addr);
        let event = match kind_byte[0] {
            0 => TraceEvent {
                kind: AccessKind::Read,
                address,
                payload: None,
            },
            1 => {
                let mut payload = vec![0u8; FILE_BLOCK_SIZE];
                r.read_exact(&mut payload)
                    .map_err(|_| TraceError::Truncated { offset })?;
                TraceEvent {
                    kind: AccessKind::Write,
                    address,
                    payload: Some(payload),
                }
            }
            k => {
                return Err(TraceError::BadRecord {
                    offset,
                    reason: format!("unknown kind byte {k}"),
                })
            }
        };
        offset += 9 + event.payload.as_ref().map_or(0, |p| p.len() as u64);
        events.push(event);
    }
    Ok(events)
}

/// Import a hand-written CSV trace: `kind,address_hex,payload_hex` with an
/// optional header row. Kind is `R`/`W` (case-insensitive, `read`/`write`
/// also accepted); the payload column is empty for reads.
pub fn read_trace_csv(path: &Path) -> Result<Vec<TraceEvent>, TraceError> {
    let reader = BufReader::new(File::open(path)?);
    let mut events = Vec::new();
    for (i, line) in reader.lines().enumerate() {
        let line_no = i + 1;
        let line = line?;
        let trimmed = line.trim();
        if trimmed.is_empty() {
            continue;
        }
        if i == 0 && trimmed.to_ascii_lowercase().starts_with("kind") {
            continue;
        }
        let fields: Vec<&str> = trimmed.split(',').map(str::trim).collect();
        if fields.len() != 3 {
            return Err(TraceError::CsvParse {
                line: line_no,
                reason: format!("expected 3 fields, found {}", fields.len()),
            });
        }
        let kind = match fields[0].to_ascii_lowercase().as_str() {
            "r" | "read" => AccessKind::Read,
            "w" | "write" => AccessKind::Write,
            other => {
                return Err(TraceError::CsvParse {
                    line: line_no,
                    reason: format!("unknown kind {other:?}"),
                })
            }
        };
        let addr_str = fields[1].trim_start_matches("0x").trim_start_matches("0X");
        let address = u64::from_str_radix(addr_str, 16).map_err(|e| TraceError::CsvParse {
            line: line_no,
            reason: format!("bad address: {e}"),
        })?;
        let payload = match (kind, fields[2]) {
            (AccessKind::Read, "") => None,
            (AccessKind::Read, _) => {
                return Err(TraceError::CsvParse {
                    line: line_no,
                    reason: "read row carries a payload".into(),
                })
            }
            (AccessKind::Write, hex) => Some(parse_hex(hex).map_err(|reason| {
                TraceError::CsvParse {
                    line: line_no,
                    reason,
                }
            })?),
        };
        if let Some(p) = &payload {
            if p.len() != FILE_BLOCK_SIZE {
                return Err(TraceError::CsvParse {
                    line: line_no,
                    reason: format!("payload is {} bytes, expected {FILE_BLOCK_SIZE}", p.len()),
                });
            }
        }
        events.push(TraceEvent {
            kind,
            address,
            payload,
        });
    }
    Ok(events)
}

fn parse_hex(hex: &str) -> Result<Vec<u8>, String> {
    if hex.len() % 2 != 0 {
        return Err("odd number of hex digits".into());
    }
    (0..hex.len())
        .step_by(2)
        .map(|i| u8::from_str_radix(&hex[i..i + 2], 16).map_err(|e| e.to_string()))
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::compress::{BdiCodec, Encoding};

    fn spec(value_model: ValueMix, seed: u64) -> TraceSpec {
        TraceSpec {
            length: 1000,
            write_fraction: 0.5,
            address_model: AddressModel::Uniform,
            footprint_bytes: 1 << 20,
            value_model,
            block_size: 64,
            seed,
        }
    }

    const ALL_ZEROS: ValueMix = ValueMix {
        zeros: 1.0,
        repeated: 0.0,
        small_delta: 0.0,
        random: 0.0,
    };
    const ALL_RANDOM: ValueMix = ValueMix {
        zeros: 0.0,
        repeated: 0.0,
        small_delta: 0.0,
        random: 1.0,
    };

    #[test]
    fn zero_value_model_compresses_to_zeros_class() {
        let codec = BdiCodec::new(64).unwrap();
        for ev in spec(ALL_ZEROS, 3).events() {
            if let Some(p) = ev.payload {
                assert_eq!(codec.compress(&p).encoding, Encoding::Zeros);
            }
        }
    }

    #[test]
    fn random_value_model_is_almost_never_compressible() {
        let codec = BdiCodec::new(64).unwrap();
        let mut s = spec(ALL_RANDOM, 4);
        s.length = 10_000;
        s.write_fraction = 1.0;
        let (mut total, mut uncompressed) = (0u64, 0u64);
        for ev in s.events() {
            let p = ev.payload.unwrap();
            total += 1;
            if codec.compress(&p).encoding == Encoding::Uncompressed {
                uncompressed += 1;
            }
        }
        assert!(uncompressed as f64 / total as f64 >= 0.99);
    }

    #[test]
    fn small_delta_blocks_fit_b8d1_or_better() {
        let codec = BdiCodec::new(64).unwrap();
        let mix = ValueMix {
            zeros: 0.0,
            repeated: 0.0,
            small_delta: 1.0,
            random: 0.0,
        };
        for ev in spec(mix, 5).events() {
            if let Some(p) = ev.payload {
                let e = codec.compress(&p).encoding;
                assert!(codec.class_size(e) <= codec.class_size(Encoding::B8D1), "{e:?}");
            }
        }
    }

    #[test]
    fn generation_is_deterministic() {
        let s = spec(ALL_RANDOM, 42);
        assert_eq!(s.collect(), s.collect());
    }

    #[test]
    fn addresses_are_block_aligned_and_in_footprint() {
        let mut s = spec(ALL_ZEROS, 9);
        s.address_model = AddressModel::Zipf { s: 0.9 };
        s.footprint_bytes = 4096;
        for ev in s.events() {
            assert_eq!(ev.address % 64, 0);
            assert!(ev.address < 4096);
        }
    }

    #[test]
    fn write_fraction_within_binomial_bounds() {
        let mut s = spec(ALL_ZEROS, 11);
        s.length = 10_000;
        s.write_fraction = 0.3;
        let writes = s.events().filter(|e| e.kind == AccessKind::Write).count() as f64;
        let (n, p) = (10_000f64, 0.3f64);
        let sigma = (n * p * (1.0 - p)).sqrt();
        assert!((writes - n * p).abs() <= 2.0 * sigma, "writes {writes}");
    }

    #[test]
    fn binary_roundtrip_is_lossless() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("t.trace");
        let events = spec(ALL_RANDOM, 7).collect();
        write_trace(&path, events.iter().cloned()).unwrap();
        assert_eq!(read_trace(&path).unwrap(), events);
    }

    #[test]
    fn empty_trace_roundtrips() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("empty.trace");
        write_trace(&path, std::iter::empty()).unwrap();
        assert!(read_trace(&path).unwrap().is_empty());
    }

    #[test]
    fn truncated_file_reports_offset() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("trunc.trace");
        let events = spec(ALL_RANDOM, 8).collect();
        write_trace(&path, events.iter().cloned()).unwrap();
        let bytes = std::fs::read(&path).unwrap();
        std::fs::write(&path, &bytes[..bytes.len() - 3]).unwrap();
        match read_trace(&path) {
            Err(TraceError::Truncated { offset }) => assert!(offset > 16),
            other => panic!("expected truncation error, got {other:?}"),
        }
    }

    #[test]
    fn bad_magic_is_rejected() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("junk.trace");
        std::fs::write(&path, b"not a trace file").unwrap();
        assert!(matches!(read_trace(&path), Err(TraceError::BadMagic)));
    }

    #[test]
    fn csv_import_parses_reads_and_writes() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("t.csv");
        let payload = "ab".repeat(64);
        std::fs::write(
            &path,
            format!("kind,address_hex,payload_hex\nR,0x40,\nW,80,{payload}\n"),
        )
        .unwrap();
        let events = read_trace_csv(&path).unwrap();
        assert_eq!(events.len(), 2);
        assert_eq!(events[0].kind, AccessKind::Read);
        assert_eq!(events[0].address, 0x40);
        assert_eq!(events[1].kind, AccessKind::Write);
        assert_eq!(events[1].address, 0x80);
        assert_eq!(events[1].payload.as_ref().unwrap()[0], 0xAB);
    }

    #[test]
    fn csv_errors_carry_line_numbers() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("bad.csv");
        std::fs::write(&path, "R,0x40,\nX,1,\n").unwrap();
        match read_trace_csv(&path) {
            Err(TraceError::CsvParse { line, .. }) => assert_eq!(line, 2),
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn invalid_specs_name_the_problem() {
        let mut s = spec(ALL_ZEROS, 1);
        s.value_model.zeros = 0.5;
        let err = s.validate().unwrap_err();
        assert!(err.to_string().contains("weights sum"));
        let mut s = spec(ALL_ZEROS, 1);
        s.footprint_bytes = 32;
        assert!(s.validate().is_err());
    }
}
