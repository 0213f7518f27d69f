//! SECDED protection over compressed blocks.
//!
//! One extended-Hamming (72,64) check group per 64-bit data word: 7 Hamming
//! parity bits plus an overall parity bit, stored as one check byte per
//! (started) word. Short payloads are zero-padded to a word boundary for
//! check computation only; the padding is never stored.

/// Hamming code positions run 1..=71; parity bits sit at the powers of two,
/// data bits at the remaining 64 positions.
const CODE_POSITIONS: usize = 71;

/// For each parity bit k (0..7, covering position bit 2^k), the mask of data
/// bit indices that participate.
const DATA_MASKS: [u64; 7] = build_data_masks();

/// Position (1..=71) of each data bit index.
const DATA_POSITIONS: [u8; 64] = build_data_positions();

/// Inverse of `DATA_POSITIONS`: position -> data bit index, 0xFF for parity
/// positions.
const POSITION_TO_DATA: [u8; CODE_POSITIONS + 1] = build_position_to_data();

const fn build_data_masks() -> [u64; 7] {
    let mut masks = [0u64; 7];
    let mut pos = 1usize;
    let mut j = 0usize;
    while pos <= CODE_POSITIONS {
        if !pos.is_power_of_two() {
            let mut k = 0;
            while k < 7 {
                if pos & (1 << k) != 0 {
                    masks[k] |= 1 << j;
                }
                k += 1;
            }
            j += 1;
        }
        pos += 1;
    }
    masks
}

const fn build_data_positions() -> [u8; 64] {
    let mut table = [0u8; 64];
    let mut pos = 1usize;
    let mut j = 0usize;
    while pos <= CODE_POSITIONS {
        if !pos.is_power_of_two() {
            table[j] = pos as u8;
            j += 1;
        }
        pos += 1;
    }
    table
}

const fn build_position_to_data() -> [u8; CODE_POSITIONS + 1] {
    let mut table = [0xFFu8; CODE_POSITIONS + 1];
    let mut j = 0usize;
    while j < 64 {
        table[DATA_POSITIONS[j] as usize] = j as u8;
        j += 1;
    }
    table
}

/// Outcome of decoding a (possibly corrupted) codeword.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum DecodeStatus {
    Clean,
    /// One flipped bit was corrected; carries the global bit position within
    /// the block's codeword space (72 bits per word: data bits 0..64, check
    /// bits 64..72).
    CorrectedSingle(usize),
    Uncorrectable,
}

/// A payload plus its per-word SECDED check bytes.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct EccBlock {
    pub data: Vec<u8>,
    pub check: Vec<u8>,
}

impl EccBlock {
    pub fn total_len(&self) -> usize {
        self.data.len() + self.check.len()
    }

    /// Flat byte layout used for frame storage: data bytes then check bytes.
    pub fn to_bytes(&self) -> Vec<u8> {
        let mut out = Vec::with_capacity(self.total_len());
        out.extend_from_slice(&self.data);
        out.extend_from_slice(&self.check);
        out
    }

    pub fn from_bytes(bytes: &[u8], data_len: usize) -> EccBlock {
        assert_eq!(bytes.len(), data_len + check_len(data_len));
        EccBlock {
            data: bytes[..data_len].to_vec(),
            check: bytes[data_len..].to_vec(),
        }
    }
}

/// Number of check bytes covering `data_len` payload bytes (one per started
/// 64-bit word).
pub fn check_len(data_len: usize) -> usize {
    data_len.div_ceil(8)
}

/// Compute SECDED check bytes for a payload.
pub fn secded_encode(data: &[u8]) -> EccBlock {
    assert!(!data.is_empty(), "empty payload");
    let check = data.chunks(8).map(|w| encode_word(word_value(w))).collect();
    EccBlock {
        data: data.to_vec(),
        check,
    }
}

/// Decode a possibly corrupted block.
///
/// Zero flipped bits decode `Clean`; exactly one flipped bit anywhere in a
/// codeword is corrected; two flipped bits in one codeword report
/// `Uncorrectable` (never silently wrong data). Corrections in several words
/// are all applied; the reported position is the first.
pub fn secded_decode(ecb: &EccBlock) -> (Vec<u8>, DecodeStatus) {
    assert_eq!(ecb.check.len(), check_len(ecb.data.len()));
    let mut out = ecb.data.clone();
    let mut status = DecodeStatus::Clean;
    for (w, chunk) in ecb.data.chunks(8).enumerate() {
        let decoded = decode_word(word_value(chunk), ecb.check[w]);
        match decoded {
            WordDecode::Clean => {}
            WordDecode::Corrected { data, bit } => {
                // A "correction" inside the zero padding of a short final
                // word cannot come from a single flip of a stored bit.
                if bit < 64 && bit / 8 >= chunk.len() {
                    return (ecb.data.clone(), DecodeStatus::Uncorrectable);
                }
                let bytes = data.to_le_bytes();
                out[w * 8..w * 8 + chunk.len()].copy_from_slice(&bytes[..chunk.len()]);
                if status == DecodeStatus::Clean {
                    status = DecodeStatus::CorrectedSingle(w * 72 + bit);
                }
            }
            WordDecode::Uncorrectable => return (ecb.data.clone(), DecodeStatus::Uncorrectable),
        }
    }
    (out, status)
}

/// Map a corrected global bit position to the index of the ECB byte that
/// contains it (flat layout: data bytes then check bytes).
pub fn corrected_byte_index(bit: usize, data_len: usize) -> usize {
    let word = bit / 72;
    let local = bit % 72;
    if local < 64 {
        word * 8 + local / 8
    } else {
        data_len + word
    }
}

fn word_value(chunk: &[u8]) -> u64 {
    let mut buf = [0u8; 8];
    buf[..chunk.len()].copy_from_slice(chunk);
    u64::from_le_bytes(buf)
}

fn parity64(v: u64) -> u8 {
    (v.count_ones() & 1) as u8
}

/// Check byte for one 64-bit word: bits 0..7 are the Hamming parities for
/// positions 1,2,4,...,64; bit 7 is the overall parity of the codeword.
pub fn encode_word(data: u64) -> u8 {
    let mut check = 0u8;
    for (k, mask) in DATA_MASKS.iter().enumerate() {
        check |= parity64(data & mask) << k;
    }
    let overall = parity64(data) ^ parity64((check & 0x7F) as u64);
    check | (overall << 7)
}

enum WordDecode {
    Clean,
    Corrected { data: u64, bit: usize },
    Uncorrectable,
}

fn decode_word(data: u64, check: u8) -> WordDecode {
    let mut syndrome = 0usize;
    for (k, mask) in DATA_MASKS.iter().enumerate() {
        let p = parity64(data & mask) ^ (check >> k & 1);
        syndrome |= (p as usize) << k;
    }
    let total = parity64(data) ^ parity64(check as u64);
    match (syndrome, total) {
        (0, 0) => WordDecode::Clean,
        (s, 1) => {
            // Odd number of flips: assume one and locate it.
            if s == 0 {
                // The overall parity bit itself flipped.
                WordDecode::Corrected { data, bit: 64 + 7 }
            } else if s.is_power_of_two() {
                WordDecode::Corrected {
                    data,
                    bit: 64 + s.trailing_zeros() as usize,
                }
            } else if s <= CODE_POSITIONS {
                let j = POSITION_TO_DATA[s] as usize;
                WordDecode::Corrected {
                    data: data ^ (1 << j),
                    bit: j,
                }
            } else {
                WordDecode::Uncorrectable
            }
        }
        // Even flip count with a nonzero syndrome: double error.
        (_, 0) => WordDecode::Uncorrectable,
        _ => unreachable!(),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn zero_word_has_zero_check_byte() {
        assert_eq!(encode_word(0), 0);
        let ecb = secded_encode(&[0u8; 8]);
        assert_eq!(ecb.check, vec![0]);
    }

    #[test]
    fn one_byte_payload_gets_one_check_byte() {
        let ecb = secded_encode(&[0xA5]);
        assert_eq!(ecb.check.len(), 1);
        assert_eq!(ecb.total_len(), 2);
        let (data, status) = secded_decode(&ecb);
        assert_eq!(data, vec![0xA5]);
        assert_eq!(status, DecodeStatus::Clean);
    }

    #[test]
    fn clean_roundtrip_multiword() {
        let payload: Vec<u8> = (0..34).map(|i| (i * 37 + 11) as u8).collect();
        let ecb = secded_encode(&payload);
        assert_eq!(ecb.check.len(), 5);
        let (data, status) = secded_decode(&ecb);
        assert_eq!(data, payload);
        assert_eq!(status, DecodeStatus::Clean);
    }

    #[test]
    fn every_single_flip_is_corrected() {
        let word = 0xC3A5_5A3C_0F69_1E87u64;
        let ecb = secded_encode(&word.to_le_bytes());
        for bit in 0..72 {
            let mut corrupted = ecb.clone();
            flip(&mut corrupted, 0, bit);
            let (data, status) = secded_decode(&corrupted);
            assert_eq!(data, word.to_le_bytes().to_vec(), "bit {bit}");
            assert_eq!(status, DecodeStatus::CorrectedSingle(bit), "bit {bit}");
        }
    }

    #[test]
    fn double_flips_are_detected_not_corrected() {
        let word = 0x0123_4567_89AB_CDEFu64;
        let ecb = secded_encode(&word.to_le_bytes());
        for (a, b) in [(0, 1), (0, 71), (63, 64), (64, 71), (13, 57)] {
            let mut corrupted = ecb.clone();
            flip(&mut corrupted, 0, a);
            flip(&mut corrupted, 0, b);
            let (_, status) = secded_decode(&corrupted);
            assert_eq!(status, DecodeStatus::Uncorrectable, "bits {a},{b}");
        }
    }

    #[test]
    fn flip_in_second_word_reports_offset_position() {
        let payload: Vec<u8> = (0..16).collect();
        let ecb = secded_encode(&payload);
        let mut corrupted = ecb.clone();
        flip(&mut corrupted, 1, 3);
        let (data, status) = secded_decode(&corrupted);
        assert_eq!(data, payload);
        assert_eq!(status, DecodeStatus::CorrectedSingle(72 + 3));
    }

    #[test]
    fn flip_into_padding_is_uncorrectable() {
        // 1-byte payload: data bits 8..64 of the word are padding and do not
        // exist in storage; a syndrome pointing there is a multi-flip artifact.
        let ecb = secded_encode(&[0x5A]);
        let mut corrupted = ecb.clone();
        // Three check-bit flips forge syndrome 13 = position of data bit 8,
        // which lies in the padding byte.
        corrupted.check[0] ^= 1 << 0;
        corrupted.check[0] ^= 1 << 2;
        corrupted.check[0] ^= 1 << 3;
        let (_, status) = secded_decode(&corrupted);
        assert_eq!(status, DecodeStatus::Uncorrectable);
    }

    #[test]
    fn corrected_byte_index_maps_data_and_check_bits() {
        // data bit 13 of word 1 -> data byte 8 + 1
        assert_eq!(corrected_byte_index(72 + 13, 16), 9);
        // check bit of word 0 -> first check byte (index = data_len)
        assert_eq!(corrected_byte_index(64, 16), 16);
        assert_eq!(corrected_byte_index(72 + 71, 16), 17);
    }

    /// Flip a stored bit: bits 0..64 in the data word, 64..72 in the check byte.
    fn flip(ecb: &mut EccBlock, word: usize, bit: usize) {
        if bit < 64 {
            ecb.data[word * 8 + bit / 8] ^= 1 << (bit % 8);
        } else {
            ecb.check[word] ^= 1 << (bit - 64);
        }
    }
}
