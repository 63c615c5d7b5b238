//! Unbiased dithered quantizers and the gain-shape coder.
//!
//! A `k`-bit dithered quantizer on `[lo, hi]` uses the `2^k` equally spaced
//! points `lo + j·(hi − lo)/(2^k − 1)`, endpoints included. A value between
//! neighbours `u_j ≤ v ≤ u_{j+1}` is sent to `u_{j+1}` with probability
//! `(v − u_j)/(u_{j+1} − u_j)` and to `u_j` otherwise, so `E[Q(v)] = v`.
//! Values on a grid point are reproduced exactly.

use rand::RngCore;

use crate::embeddings::democratic_lp;
use crate::error::{Error, Result};
use crate::frames::{Frame, KashinParams};
use crate::linalg::{inf_norm, l2_norm};
use crate::rng::uniform;

use super::payload::{CodingMode, GainEncoding, GainField, PayloadHeader, QuantizedPayload, MAX_GAIN_BITS};
use super::{bits_per_coordinate, check_header, RANGE_SLACK};

fn check_bits(bits: u8) -> Result<u64> {
    if bits == 0 || bits > MAX_GAIN_BITS {
        return Err(Error::BudgetTooSmall(format!("dithered quantizer needs 1..=32 bits, got {bits}")));
    }
    Ok((1u64 << bits) - 1)
}

/// `pos` in `[0, cells]`, measured in grid steps.
fn dither_index<R: RngCore + ?Sized>(pos: f64, cells: u64, rng: &mut R) -> u64 {
    let pos = pos.clamp(0.0, cells as f64);
    let j = (pos.floor() as u64).min(cells - 1);
    let frac = pos - j as f64;
    // One uniform per value, drawn even when `frac` is 0, keeps streams aligned.
    j + u64::from(uniform(rng) < frac)
}

/// Dithered index of `v ∈ [0, max]` on a `bits`-bit grid.
pub fn gain_quantize_dithered<R: RngCore + ?Sized>(v: f64, bits: u8, max: f64, rng: &mut R) -> Result<u64> {
    let cells = check_bits(bits)?;
    if !(max > 0.0) || !max.is_finite() {
        return Err(Error::OutOfRange(format!("gain range must be positive, got {max}")));
    }
    if !(v >= 0.0 && v <= max * (1.0 + RANGE_SLACK)) {
        return Err(Error::OutOfRange(format!("gain {v} outside [0, {max}]")));
    }
    Ok(dither_index(v / max * cells as f64, cells, rng))
}

pub fn gain_dequantize(index: u64, bits: u8, max: f64) -> Result<f64> {
    let cells = check_bits(bits)?;
    if index > cells {
        return Err(Error::CorruptPayload(format!("gain index {index} >= 2^{bits}")));
    }
    if index == cells {
        return Ok(max);
    }
    Ok(max * index as f64 / cells as f64)
}

/// Coordinate-wise dithered quantization of `x ∈ [−level, level]^N`.
pub fn cuq_encode<R: RngCore + ?Sized>(x: &[f64], level: f64, bits: u8, rng: &mut R) -> Result<Vec<u32>> {
    let cells = check_bits(bits)?;
    if !(level > 0.0) || !level.is_finite() {
        return Err(Error::OutOfRange(format!("CUQ level must be positive, got {level}")));
    }
    let limit = level * (1.0 + RANGE_SLACK);
    x.iter()
        .map(|&v| {
            if !(v.abs() <= limit) {
                return Err(Error::OutOfRange(format!("|{v}| > {level}")));
            }
            let pos = (v + level) / (2.0 * level) * cells as f64;
            Ok(dither_index(pos, cells, rng) as u32)
        })
        .collect()
}

pub fn cuq_decode(indices: &[u32], level: f64, bits: u8) -> Result<Vec<f64>> {
    let cells = check_bits(bits)?;
    let step = 2.0 * level / cells as f64;
    indices
        .iter()
        .map(|&i| {
            let i = i as u64;
            if i > cells {
                Err(Error::CorruptPayload(format!("index {i} >= 2^{bits}")))
            } else if i == cells {
                Ok(level)
            } else {
                Ok(-level + i as f64 * step)
            }
        })
        .collect()
}

/// Gain-shape coder `Q(y) = Q_G(‖y‖₂) · S · Q_CUQ(x)` where `x` is the
/// democratic embedding of `y/‖y‖₂`.
///
/// The gain range `[0, gain_max]` and the shape range `[−level, level]` with
/// `level = K_u/√N` are shared by both ends and are not transmitted. The
/// decoded vector has norm at most `gain_max · K_u` and is unbiased.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GainShapeCoder {
    pub bits_per_coord: u8,
    pub gain_bits: u8,
    pub gain_max: f64,
    pub level: f64,
}

impl GainShapeCoder {
    pub fn new(frame: &Frame, rate: f64, gain_max: f64, gain_bits: u8, params: &KashinParams) -> Result<Self> {
        check_bits(gain_bits)?;
        if !(gain_max > 0.0) || !gain_max.is_finite() {
            return Err(Error::OutOfRange(format!("gain range must be positive, got {gain_max}")));
        }
        Ok(GainShapeCoder {
            bits_per_coord: bits_per_coordinate(frame.n(), frame.big_n(), rate)?,
            gain_bits,
            gain_max,
            level: params.k_upper / (frame.big_n() as f64).sqrt(),
        })
    }

    /// Bits on the wire per message: body plus gain.
    pub fn message_bits(&self, frame: &Frame) -> u64 {
        frame.big_n() as u64 * self.bits_per_coord as u64 + self.gain_bits as u64
    }

    pub fn encode<R: RngCore + ?Sized>(&self, frame: &Frame, y: &[f64], rng: &mut R) -> Result<QuantizedPayload> {
        if y.len() != frame.n() {
            return Err(Error::DimensionMismatch { expected: frame.n(), got: y.len() });
        }
        let norm = l2_norm(y);
        if !(norm <= self.gain_max * (1.0 + RANGE_SLACK)) {
            return Err(Error::OutOfRange(format!("‖y‖₂ = {norm} > {}", self.gain_max)));
        }
        let gain = gain_quantize_dithered(norm.min(self.gain_max), self.gain_bits, self.gain_max, rng)?;
        let shape = if norm == 0.0 {
            vec![0.0; frame.big_n()]
        } else {
            let unit: Vec<f64> = y.iter().map(|v| v / norm).collect();
            let x = democratic_lp(frame, &unit)?.coefficients;
            let peak = inf_norm(&x);
            if peak > self.level * (1.0 + 1e-9) {
                return Err(Error::OutOfRange(format!(
                    "embedding peak {peak} exceeds shape range {}; K_u is too small for this frame",
                    self.level
                )));
            }
            x.into_iter().map(|v| v.clamp(-self.level, self.level)).collect()
        };
        let indices = cuq_encode(&shape, self.level, self.bits_per_coord, rng)?;
        Ok(QuantizedPayload {
            header: PayloadHeader {
                frame: frame.descriptor(),
                mode: CodingMode::Dithered,
                bits_per_coord: self.bits_per_coord,
                gain_encoding: GainEncoding::Dithered { bits: self.gain_bits },
            },
            gain: GainField::Dithered(gain),
            indices,
        })
    }

    pub fn decode(&self, frame: &Frame, payload: &QuantizedPayload) -> Result<Vec<f64>> {
        check_header(frame, payload)?;
        let h = &payload.header;
        if h.mode != CodingMode::Dithered
            || h.bits_per_coord != self.bits_per_coord
            || h.gain_encoding != (GainEncoding::Dithered { bits: self.gain_bits })
        {
            return Err(Error::HeaderMismatch(format!("payload header {h:?} does not match coder {self:?}")));
        }
        let GainField::Dithered(idx) = payload.gain else { unreachable!() };
        let gain = gain_dequantize(idx, self.gain_bits, self.gain_max)?;
        let mut shape = cuq_decode(&payload.indices, self.level, self.bits_per_coord)?;
        shape.iter_mut().for_each(|v| *v *= gain);
        frame.apply(&shape)
    }
}

pub fn gain_shape_quantize<R: RngCore + ?Sized>(
    frame: &Frame,
    y: &[f64],
    rate: f64,
    gain_max: f64,
    gain_bits: u8,
    params: &KashinParams,
    rng: &mut R,
) -> Result<QuantizedPayload> {
    GainShapeCoder::new(frame, rate, gain_max, gain_bits, params)?.encode(frame, y, rng)
}

pub fn gain_shape_decode(
    frame: &Frame,
    payload: &QuantizedPayload,
    gain_max: f64,
    params: &KashinParams,
) -> Result<Vec<f64>> {
    let h = &payload.header;
    let GainEncoding::Dithered { bits } = h.gain_encoding else {
        return Err(Error::HeaderMismatch("gain-shape payload needs a dithered gain".into()));
    };
    let coder = GainShapeCoder {
        bits_per_coord: h.bits_per_coord,
        gain_bits: bits,
        gain_max,
        level: params.k_upper / (frame.big_n() as f64).sqrt(),
    };
    coder.decode(frame, payload)
}
