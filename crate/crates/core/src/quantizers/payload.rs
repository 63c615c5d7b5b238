//! Bit-exact payload wire format.
//!
//! ```text
//! offset  size  field
//! 0       4     magic "DSC1"
//! 4       1     version (1)
//! 5       1     mode: 0 = DSC, 1 = NDSC, 2 = dithered gain-shape
//! 6       4     n   (u32 LE)
//! 10      4     N   (u32 LE)
//! 14      1     b, bits per embedding coordinate (1..=32)
//! 15      1     gain encoding: 0 = 32-bit float, k in 1..=32 = k-bit dithered index
//! 16      1     frame kind
//! 17      8     frame seed (u64 LE)
//! 25      g     gain: f32 LE (g = 4) or the dithered index in ⌈k/8⌉ bytes LE
//! 25+g    ⌈N·b/8⌉  body: N level indices of b bits each
//! ```
//!
//! The body is a little-endian bit stream: index `i` occupies stream bits
//! `i·b .. i·b + b`, least significant bit first, and stream bit `k` is bit
//! `k % 8` of byte `k / 8`. Unused padding bits in the last byte (and in the
//! dithered gain field) must be zero, so every accepted byte string
//! re-serializes to itself.

use crate::error::{Error, Result};
use crate::frames::{FrameDescriptor, FrameKind};

pub const MAGIC: [u8; 4] = *b"DSC1";
pub const VERSION: u8 = 1;
pub const HEADER_LEN: usize = 25;
pub const MAX_BITS_PER_COORD: u8 = 32;
pub const MAX_GAIN_BITS: u8 = 32;
/// Sanity cap on `N` so a hostile header cannot request huge allocations.
pub const MAX_EMBEDDING_DIM: usize = 1 << 24;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum CodingMode {
    Dsc,
    Ndsc,
    Dithered,
}

impl CodingMode {
    pub fn code(self) -> u8 {
        match self {
            CodingMode::Dsc => 0,
            CodingMode::Ndsc => 1,
            CodingMode::Dithered => 2,
        }
    }

    pub fn from_code(code: u8) -> Option<Self> {
        match code {
            0 => Some(CodingMode::Dsc),
            1 => Some(CodingMode::Ndsc),
            2 => Some(CodingMode::Dithered),
            _ => None,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum GainEncoding {
    Exact32,
    Dithered { bits: u8 },
}

impl GainEncoding {
    pub fn code(self) -> u8 {
        match self {
            GainEncoding::Exact32 => 0,
            GainEncoding::Dithered { bits } => bits,
        }
    }

    pub fn from_code(code: u8) -> Option<Self> {
        match code {
            0 => Some(GainEncoding::Exact32),
            1..=MAX_GAIN_BITS => Some(GainEncoding::Dithered { bits: code }),
            _ => None,
        }
    }

    /// Bits charged to the budget for the gain.
    pub fn bits(self) -> u64 {
        match self {
            GainEncoding::Exact32 => 32,
            GainEncoding::Dithered { bits } => bits as u64,
        }
    }

    fn field_len(self) -> usize {
        match self {
            GainEncoding::Exact32 => 4,
            GainEncoding::Dithered { bits } => (bits as usize).div_ceil(8),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum GainField {
    Exact(f32),
    Dithered(u64),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct PayloadHeader {
    pub frame: FrameDescriptor,
    pub mode: CodingMode,
    pub bits_per_coord: u8,
    pub gain_encoding: GainEncoding,
}

#[derive(Debug, Clone, PartialEq)]
pub struct QuantizedPayload {
    pub header: PayloadHeader,
    pub gain: GainField,
    pub indices: Vec<u32>,
}

impl QuantizedPayload {
    pub fn body_bits(&self) -> u64 {
        self.header.frame.big_n as u64 * self.header.bits_per_coord as u64
    }

    pub fn gain_bits(&self) -> u64 {
        self.header.gain_encoding.bits()
    }

    /// Bits charged to the channel: body plus gain. The header is agreed
    /// configuration and is not charged.
    pub fn total_bits(&self) -> u64 {
        self.body_bits() + self.gain_bits()
    }

    pub fn body_len(&self) -> usize {
        (self.body_bits() as usize).div_ceil(8)
    }

    /// Internal consistency: index count, index range, gain field shape.
    pub fn validate(&self) -> Result<()> {
        let h = &self.header;
        if h.bits_per_coord == 0 || h.bits_per_coord > MAX_BITS_PER_COORD {
            return Err(Error::CorruptPayload(format!("bits per coordinate {}", h.bits_per_coord)));
        }
        if self.indices.len() != h.frame.big_n {
            return Err(Error::CorruptPayload(format!(
                "{} indices for N={}",
                self.indices.len(),
                h.frame.big_n
            )));
        }
        let limit = 1u64 << h.bits_per_coord;
        if let Some(bad) = self.indices.iter().find(|&&i| i as u64 >= limit) {
            return Err(Error::CorruptPayload(format!("index {bad} >= 2^{}", h.bits_per_coord)));
        }
        match (h.gain_encoding, self.gain) {
            (GainEncoding::Exact32, GainField::Exact(g)) => {
                if !g.is_finite() {
                    return Err(Error::CorruptPayload("non-finite gain".into()));
                }
            }
            (GainEncoding::Dithered { bits }, GainField::Dithered(idx)) => {
                if idx >= 1u64 << bits {
                    return Err(Error::CorruptPayload(format!("gain index {idx} >= 2^{bits}")));
                }
            }
            _ => return Err(Error::CorruptPayload("gain field does not match gain encoding".into())),
        }
        Ok(())
    }

    pub fn to_bytes(&self) -> Result<Vec<u8>> {
        self.validate()?;
        let h = &self.header;
        if h.frame.n > u32::MAX as usize || h.frame.big_n > u32::MAX as usize {
            return Err(Error::CorruptPayload("dimension does not fit in u32".into()));
        }
        let mut out = Vec::with_capacity(HEADER_LEN + 8 + self.body_len());
        out.extend_from_slice(&MAGIC);
        out.push(VERSION);
        out.push(h.mode.code());
        out.extend_from_slice(&(h.frame.n as u32).to_le_bytes());
        out.extend_from_slice(&(h.frame.big_n as u32).to_le_bytes());
        out.push(h.bits_per_coord);
        out.push(h.gain_encoding.code());
        out.push(h.frame.kind.code());
        out.extend_from_slice(&h.frame.seed.to_le_bytes());
        match self.gain {
            GainField::Exact(g) => out.extend_from_slice(&g.to_le_bytes()),
            GainField::Dithered(idx) => {
                let len = h.gain_encoding.field_len();
                out.extend_from_slice(&idx.to_le_bytes()[..len]);
            }
        }
        out.extend_from_slice(&pack_indices(&self.indices, h.bits_per_coord));
        Ok(out)
    }

    pub fn from_bytes(bytes: &[u8]) -> Result<Self> {
        if bytes.len() < HEADER_LEN {
            return Err(Error::CorruptPayload(format!("truncated header: {} bytes", bytes.len())));
        }
        if bytes[0..4] != MAGIC {
            return Err(Error::CorruptPayload("bad magic".into()));
        }
        if bytes[4] != VERSION {
            return Err(Error::CorruptPayload(format!("unsupported version {}", bytes[4])));
        }
        let mode = CodingMode::from_code(bytes[5])
            .ok_or_else(|| Error::CorruptPayload(format!("unknown mode {}", bytes[5])))?;
        let n = u32::from_le_bytes(bytes[6..10].try_into().unwrap()) as usize;
        let big_n = u32::from_le_bytes(bytes[10..14].try_into().unwrap()) as usize;
        let bits = bytes[14];
        let gain_encoding = GainEncoding::from_code(bytes[15])
            .ok_or_else(|| Error::CorruptPayload(format!("unknown gain encoding {}", bytes[15])))?;
        let kind = FrameKind::from_code(bytes[16])
            .ok_or_else(|| Error::CorruptPayload(format!("unknown frame kind {}", bytes[16])))?;
        let seed = u64::from_le_bytes(bytes[17..25].try_into().unwrap());
        if n == 0 || big_n < n || big_n > MAX_EMBEDDING_DIM {
            return Err(Error::CorruptPayload(format!("bad dimensions n={n}, N={big_n}")));
        }
        if bits == 0 || bits > MAX_BITS_PER_COORD {
            return Err(Error::CorruptPayload(format!("bits per coordinate {bits}")));
        }
        let (mode_ok, gain_ok) = match mode {
            CodingMode::Dithered => (true, matches!(gain_encoding, GainEncoding::Dithered { .. })),
            _ => (true, true),
        };
        if !(mode_ok && gain_ok) {
            return Err(Error::CorruptPayload("dithered mode requires a dithered gain".into()));
        }

        let mut pos = HEADER_LEN;
        let glen = gain_encoding.field_len();
        let gbytes = bytes
            .get(pos..pos + glen)
            .ok_or_else(|| Error::CorruptPayload("truncated gain field".into()))?;
        let gain = match gain_encoding {
            GainEncoding::Exact32 => GainField::Exact(f32::from_le_bytes(gbytes.try_into().unwrap())),
            GainEncoding::Dithered { bits: gb } => {
                let mut buf = [0u8; 8];
                buf[..glen].copy_from_slice(gbytes);
                let idx = u64::from_le_bytes(buf);
                if idx >> gb != 0 {
                    return Err(Error::CorruptPayload("non-zero padding in gain field".into()));
                }
                GainField::Dithered(idx)
            }
        };
        pos += glen;

        let body_bits = big_n as u64 * bits as u64;
        let body_len = (body_bits as usize).div_ceil(8);
        let body = &bytes[pos..];
        if body.len() != body_len {
            return Err(Error::CorruptPayload(format!(
                "body is {} bytes, expected {body_len}",
                body.len()
            )));
        }
        let pad = (body_len * 8) as u64 - body_bits;
        if pad > 0 && body[body_len - 1] >> (8 - pad) != 0 {
            return Err(Error::CorruptPayload("non-zero padding bits".into()));
        }
        let indices = unpack_indices(body, big_n, bits);
        let payload = QuantizedPayload {
            header: PayloadHeader {
                frame: FrameDescriptor { kind, n, big_n, seed },
                mode,
                bits_per_coord: bits,
                gain_encoding,
            },
            gain,
            indices,
        };
        payload.validate()?;
        Ok(payload)
    }
}

/// Pack `b`-bit values into a little-endian bit stream.
pub fn pack_indices(indices: &[u32], bits: u8) -> Vec<u8> {
    let total = indices.len() * bits as usize;
    let mut out = vec![0u8; total.div_ceil(8)];
    let mut acc: u64 = 0;
    let mut filled = 0u32;
    let mut pos = 0usize;
    for &v in indices {
        acc |= (v as u64) << filled;
        filled += bits as u32;
        while filled >= 8 {
            out[pos] = acc as u8;
            pos += 1;
            acc >>= 8;
            filled -= 8;
        }
    }
    if filled > 0 {
        out[pos] = acc as u8;
    }
    out
}

/// Inverse of [`pack_indices`]; reads exactly `count` values.
pub fn unpack_indices(bytes: &[u8], count: usize, bits: u8) -> Vec<u32> {
    let mask: u64 = if bits == 64 { u64::MAX } else { (1u64 << bits) - 1 };
    let mut out = Vec::with_capacity(count);
    let mut acc: u64 = 0;
    let mut filled = 0u32;
    let mut iter = bytes.iter();
    for _ in 0..count {
        while filled < bits as u32 {
            let byte = *iter.next().unwrap_or(&0) as u64;
            acc |= byte << filled;
            filled += 8;
        }
        out.push((acc & mask) as u32);
        acc >>= bits;
        filled -= bits as u32;
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn sample(bits: u8, big_n: usize, gain: GainEncoding) -> QuantizedPayload {
        let limit = 1u64 << bits;
        QuantizedPayload {
            header: PayloadHeader {
                frame: FrameDescriptor { kind: FrameKind::RandomizedHadamard, n: 3, big_n, seed: 0xDEAD_BEEF },
                mode: CodingMode::Ndsc,
                bits_per_coord: bits,
                gain_encoding: gain,
            },
            gain: match gain {
                GainEncoding::Exact32 => GainField::Exact(1.5),
                GainEncoding::Dithered { bits } => GainField::Dithered((1u64 << bits) - 1),
            },
            indices: (0..big_n as u64).map(|i| ((i * 7 + 3) % limit) as u32).collect(),
        }
    }

    #[test]
    fn header_layout() {
        let p = sample(3, 4, GainEncoding::Exact32);
        let bytes = p.to_bytes().unwrap();
        assert_eq!(&bytes[0..4], b"DSC1");
        assert_eq!(bytes[4], 1);
        assert_eq!(bytes[5], 1);
        assert_eq!(&bytes[6..10], &3u32.to_le_bytes());
        assert_eq!(&bytes[10..14], &4u32.to_le_bytes());
        assert_eq!(bytes[14], 3);
        assert_eq!(bytes[15], 0);
        assert_eq!(bytes[16], FrameKind::RandomizedHadamard.code());
        assert_eq!(&bytes[17..25], &0xDEAD_BEEFu64.to_le_bytes());
        assert_eq!(&bytes[25..29], &1.5f32.to_le_bytes());
        // 4 indices x 3 bits = 12 bits → 2 bytes.
        assert_eq!(bytes.len(), 29 + 2);
    }

    #[test]
    fn bit_order_is_lsb_first() {
        // 1-bit values 1,0,1,1 → 0b1101; 3-bit values 5, 2 → 101 then 010 → 0b010101.
        assert_eq!(pack_indices(&[1, 0, 1, 1], 1), vec![0b1101]);
        assert_eq!(pack_indices(&[5, 2], 3), vec![0b010_101]);
        assert_eq!(unpack_indices(&[0b010_101], 2, 3), vec![5, 2]);
        let wide = pack_indices(&[u32::MAX, 1], 32);
        assert_eq!(wide, vec![255, 255, 255, 255, 1, 0, 0, 0]);
    }

    #[test]
    fn rejects_malformed() {
        let bytes = sample(3, 4, GainEncoding::Exact32).to_bytes().unwrap();
        let mut bad = bytes.clone();
        bad[0] = b'X';
        assert!(QuantizedPayload::from_bytes(&bad).is_err());
        assert!(QuantizedPayload::from_bytes(&bytes[..bytes.len() - 1]).is_err());
        let mut long = bytes.clone();
        long.push(0);
        assert!(QuantizedPayload::from_bytes(&long).is_err());
        let mut pad = bytes.clone();
        *pad.last_mut().unwrap() |= 0x80;
        assert!(QuantizedPayload::from_bytes(&pad).is_err());
        let mut version = bytes.clone();
        version[4] = 2;
        assert!(QuantizedPayload::from_bytes(&version).is_err());
        let mut nbits = bytes;
        nbits[14] = 0;
        assert!(QuantizedPayload::from_bytes(&nbits).is_err());
    }

    #[test]
    fn index_out_of_range_is_corrupt() {
        let mut p = sample(2, 4, GainEncoding::Exact32);
        p.indices[0] = 4;
        assert!(matches!(p.validate(), Err(Error::CorruptPayload(_))));
        assert!(p.to_bytes().is_err());
    }

    #[test]
    fn body_length_matches_bit_count() {
        for bits in 1..=32u8 {
            for big_n in [1usize, 3, 8, 13] {
                let p = sample(bits, big_n.max(3), GainEncoding::Dithered { bits: 11 });
                let bytes = p.to_bytes().unwrap();
                assert_eq!(bytes.len(), HEADER_LEN + 2 + (big_n.max(3) * bits as usize).div_ceil(8));
            }
        }
    }

    proptest! {
        #[test]
        fn roundtrip(bits in 1u8..=32, big_n in 3usize..70, gain_bits in 0u8..=32, seed in any::<u64>(), raw in proptest::collection::vec(any::<u32>(), 70)) {
            let gain_encoding = GainEncoding::from_code(gain_bits).unwrap();
            let mask = if bits == 32 { u32::MAX } else { (1u32 << bits) - 1 };
            let p = QuantizedPayload {
                header: PayloadHeader {
                    frame: FrameDescriptor { kind: FrameKind::RandomOrthonormal, n: 3, big_n, seed },
                    mode: CodingMode::Dsc,
                    bits_per_coord: bits,
                    gain_encoding,
                },
                gain: match gain_encoding {
                    GainEncoding::Exact32 => GainField::Exact(f32::from_bits(raw[0] & 0x3fff_ffff)),
                    GainEncoding::Dithered { bits } => GainField::Dithered(raw[1] as u64 & ((1u64 << bits) - 1)),
                },
                indices: raw[..big_n].iter().map(|v| v & mask).collect(),
            };
            let bytes = p.to_bytes().unwrap();
            let back = QuantizedPayload::from_bytes(&bytes).unwrap();
            prop_assert_eq!(&back, &p);
            prop_assert_eq!(back.to_bytes().unwrap(), bytes);
        }

        #[test]
        fn arbitrary_bytes_never_panic(bytes in proptest::collection::vec(any::<u8>(), 0..64)) {
            if let Ok(p) = QuantizedPayload::from_bytes(&bytes) {
                prop_assert_eq!(p.to_bytes().unwrap(), bytes);
            }
        }
    }
}
