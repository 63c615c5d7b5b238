//! Fixed-length source coding under a budget of `R` bits per dimension.
//!
//! * [`ScalarQuantizerSpec`]: the midpoint uniform quantizer on `[-1, 1]`.
//! * [`dsc_encode`] / [`dsc_decode`]: embed, ℓ∞-normalize, quantize each
//!   embedding coordinate with `⌊nR/N⌋` bits, and transmit the gain.
//! * [`dither`]: unbiased dithered gain and coordinate quantizers and the
//!   gain-shape coder built from them.
//! * [`bounds`]: closed-form error and covering-efficiency constants.
//! * [`payload`]: the bit-exact wire format.

pub mod bounds;
pub mod dither;
pub mod payload;

pub use bounds::{covering_efficiency, prop1_bound, scalar_covering_efficiency, CoveringReport, ErrorConstant};
pub use dither::{
    cuq_decode, cuq_encode, gain_dequantize, gain_quantize_dithered, gain_shape_decode, gain_shape_quantize,
    GainShapeCoder,
};
pub use payload::{CodingMode, GainEncoding, GainField, PayloadHeader, QuantizedPayload};

use crate::embeddings::{embed, Embedding, EmbeddingMode};
use crate::error::{Error, Result};
use crate::frames::Frame;

/// Slack allowed on `‖x‖∞ ≤ 1` to absorb normalization round-off.
pub const RANGE_SLACK: f64 = 1e-12;

/// Uniform quantizer with `M = 2^b` cells on `[-1, 1]`, reconstructing at
/// cell midpoints `v_i = −1 + (2i + 1)Δ/2`, `i = 0..M`, `Δ = 2/M`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct ScalarQuantizerSpec {
    bits: u8,
}

impl ScalarQuantizerSpec {
    pub fn new(bits: u8) -> Result<Self> {
        if bits == 0 || bits > payload::MAX_BITS_PER_COORD {
            return Err(Error::BudgetTooSmall(format!("bits per coordinate must be in 1..=32, got {bits}")));
        }
        Ok(ScalarQuantizerSpec { bits })
    }

    pub fn bits(&self) -> u8 {
        self.bits
    }

    pub fn levels(&self) -> u64 {
        1u64 << self.bits
    }

    pub fn resolution(&self) -> f64 {
        2.0 / self.levels() as f64
    }

    pub fn grid_value(&self, index: u32) -> f64 {
        -1.0 + (2.0 * index as f64 + 1.0) * self.resolution() / 2.0
    }

    /// Nearest grid index; exact midpoints between cells go to the lower index.
    pub fn quantize_one(&self, x: f64) -> Result<u32> {
        if !(x.abs() <= 1.0 + RANGE_SLACK) {
            return Err(Error::OutOfRange(format!("|{x}| > 1")));
        }
        // Distance to grid point i is |t − i|·Δ with t below; ties at t = i + ½.
        let t = (x + 1.0) / self.resolution() - 0.5;
        let idx = (t - 0.5).ceil().clamp(0.0, (self.levels() - 1) as f64);
        Ok(idx as u32)
    }
}

pub fn uniform_quantize(x: &[f64], spec: ScalarQuantizerSpec) -> Result<Vec<u32>> {
    x.iter().map(|&v| spec.quantize_one(v)).collect()
}

pub fn uniform_dequantize(indices: &[u32], spec: ScalarQuantizerSpec) -> Result<Vec<f64>> {
    indices
        .iter()
        .map(|&i| {
            if i as u64 >= spec.levels() {
                Err(Error::CorruptPayload(format!("index {i} >= 2^{}", spec.bits)))
            } else {
                Ok(spec.grid_value(i))
            }
        })
        .collect()
}

/// Worst-case error `‖x − Q(x)‖₂ ≤ (Δ/2)·√N` of the scalar quantizer on `B∞(1)`.
pub fn scalar_error_bound(spec: ScalarQuantizerSpec, dim: usize) -> f64 {
    spec.resolution() / 2.0 * (dim as f64).sqrt()
}

/// `b = ⌊nR/N⌋`, capped at 32. Leftover `nR − bN` bits are not used.
pub fn bits_per_coordinate(n: usize, big_n: usize, rate: f64) -> Result<u8> {
    if !(rate > 0.0) || !rate.is_finite() {
        return Err(Error::BudgetTooSmall(format!("rate must be positive, got {rate}")));
    }
    let b = (n as f64 * rate / big_n as f64 + 1e-9).floor();
    if b < 1.0 {
        return Err(Error::BudgetTooSmall(format!(
            "n·R/N = {}·{rate}/{big_n} < 1 bit per coordinate",
            n
        )));
    }
    Ok(b.min(payload::MAX_BITS_PER_COORD as f64) as u8)
}

/// Budget `⌊nR⌋` for the payload body.
pub fn body_budget(n: usize, rate: f64) -> u64 {
    (n as f64 * rate + 1e-9).floor() as u64
}

/// Democratic (`mode = Democratic`) or near-democratic source coding of `y`.
///
/// The gain is `‖x‖∞` of the embedding, sent as a 32-bit float. Use
/// [`dsc_encode_with_gain`] to send the gain through a dithered quantizer.
pub fn dsc_encode(frame: &Frame, y: &[f64], rate: f64, mode: EmbeddingMode) -> Result<QuantizedPayload> {
    Ok(dsc_encode_inner(frame, y, rate, mode)?.0)
}

fn dsc_encode_inner(frame: &Frame, y: &[f64], rate: f64, mode: EmbeddingMode) -> Result<(QuantizedPayload, f64)> {
    bits_per_coordinate(frame.n(), frame.big_n(), rate)?;
    let emb = embed(frame, y, mode)?;
    Ok((quantize_embedding(frame, &emb, rate)?, emb.gain))
}

/// Quantize an already computed embedding at rate `R` with an Exact32 gain.
/// Lets callers sweep rates without re-solving the embedding.
pub fn quantize_embedding(frame: &Frame, emb: &Embedding, rate: f64) -> Result<QuantizedPayload> {
    if emb.coefficients.len() != frame.big_n() {
        return Err(Error::DimensionMismatch { expected: frame.big_n(), got: emb.coefficients.len() });
    }
    let b = bits_per_coordinate(frame.n(), frame.big_n(), rate)?;
    let spec = ScalarQuantizerSpec::new(b)?;
    let gain = emb.gain;
    let indices = if gain == 0.0 {
        vec![0; frame.big_n()]
    } else {
        let normalized: Vec<f64> = emb.coefficients.iter().map(|c| c / gain).collect();
        uniform_quantize(&normalized, spec)?
    };
    Ok(QuantizedPayload {
        header: PayloadHeader {
            frame: frame.descriptor(),
            mode: coding_mode(emb.mode),
            bits_per_coord: b,
            gain_encoding: GainEncoding::Exact32,
        },
        gain: GainField::Exact(gain as f32),
        indices,
    })
}

/// As [`dsc_encode`], with the gain sent as a `gain_bits`-bit dithered index
/// on `[0, gain_max]` (unbiased; `gain_max` is shared out of band).
pub fn dsc_encode_with_gain<R: rand::RngCore + ?Sized>(
    frame: &Frame,
    y: &[f64],
    rate: f64,
    mode: EmbeddingMode,
    gain_bits: u8,
    gain_max: f64,
    rng: &mut R,
) -> Result<QuantizedPayload> {
    let (mut p, emb_gain) = dsc_encode_inner(frame, y, rate, mode)?;
    p.gain = GainField::Dithered(gain_quantize_dithered(emb_gain, gain_bits, gain_max, rng)?);
    p.header.gain_encoding = GainEncoding::Dithered { bits: gain_bits };
    Ok(p)
}

fn coding_mode(mode: EmbeddingMode) -> CodingMode {
    match mode {
        EmbeddingMode::Democratic => CodingMode::Dsc,
        EmbeddingMode::NearDemocratic => CodingMode::Ndsc,
    }
}

pub(crate) fn check_header(frame: &Frame, payload: &QuantizedPayload) -> Result<()> {
    let d = frame.descriptor();
    if payload.header.frame != d {
        return Err(Error::HeaderMismatch(format!("payload frame {:?}, decoder frame {:?}", payload.header.frame, d)));
    }
    payload.validate()
}

/// `D(v) = g · S · (v_{i_1}, …, v_{i_N})`.
///
/// `gain_max` is required only for dithered gain encodings.
pub fn dsc_decode(frame: &Frame, payload: &QuantizedPayload, gain_max: Option<f64>) -> Result<Vec<f64>> {
    check_header(frame, payload)?;
    if payload.header.mode == CodingMode::Dithered {
        return Err(Error::HeaderMismatch("gain-shape payload passed to the DSC decoder".into()));
    }
    let spec = ScalarQuantizerSpec::new(payload.header.bits_per_coord)?;
    let gain = match payload.gain {
        GainField::Exact(g) => g as f64,
        GainField::Dithered(idx) => {
            let GainEncoding::Dithered { bits } = payload.header.gain_encoding else { unreachable!() };
            let max = gain_max.ok_or_else(|| Error::CorruptPayload("dithered gain needs gain_max".into()))?;
            gain_dequantize(idx, bits, max)?
        }
    };
    let mut x = uniform_dequantize(&payload.indices, spec)?;
    x.iter_mut().for_each(|v| *v *= gain);
    frame.apply(&x)
}
