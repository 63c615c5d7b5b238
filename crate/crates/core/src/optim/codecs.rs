//! Worker-side encoders paired with their server-side decoders.

use crate::compressors::{compress, democratic_wrap, CompressorSpec};
use crate::embeddings::EmbeddingMode;
use crate::error::Result;
use crate::frames::{Frame, KashinParams};
use crate::harness::channel::BitChannel;
use crate::quantizers::{
    body_budget, bits_per_coordinate, dsc_decode, dsc_encode, dsc_encode_with_gain, GainShapeCoder,
    QuantizedPayload,
};
use crate::rng::{self, Rng};

/// Compress a gradient at the worker, push it through the channel, and
/// return what the server reconstructs. The worker sees the same value.
pub trait GradientCodec {
    fn name(&self) -> String;
    /// Bits per message the channel allows.
    fn budget(&self) -> u64;
    fn transmit(&mut self, iteration: usize, g: &[f64], channel: &mut BitChannel) -> Result<Vec<f64>>;
}

/// How the DSC gain `‖x‖∞` is sent.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum GainCoding {
    Exact32,
    /// `bits`-bit dithered index on `[0, max]`.
    Dithered { bits: u8, max: f64 },
}

impl GainCoding {
    pub fn bits(&self) -> u64 {
        match self {
            GainCoding::Exact32 => 32,
            GainCoding::Dithered { bits, .. } => *bits as u64,
        }
    }
}

/// DSC (democratic) or NDSC (near-democratic) coding, serialized on the wire.
pub struct DscCodec<'a> {
    frame: &'a Frame,
    rate: f64,
    mode: EmbeddingMode,
    gain: GainCoding,
    rng: Rng,
}

impl<'a> DscCodec<'a> {
    pub fn new(frame: &'a Frame, rate: f64, mode: EmbeddingMode, gain: GainCoding, seed: u64) -> Result<Self> {
        bits_per_coordinate(frame.n(), frame.big_n(), rate)?;
        Ok(DscCodec { frame, rate, mode, gain, rng: rng::seeded(seed) })
    }
}

impl GradientCodec for DscCodec<'_> {
    fn name(&self) -> String {
        let mode = match self.mode {
            EmbeddingMode::Democratic => "dsc",
            EmbeddingMode::NearDemocratic => "ndsc",
        };
        format!("{mode}-{}", self.frame.kind().name())
    }

    fn budget(&self) -> u64 {
        body_budget(self.frame.n(), self.rate) + self.gain.bits()
    }

    fn transmit(&mut self, iteration: usize, g: &[f64], channel: &mut BitChannel) -> Result<Vec<f64>> {
        let (payload, max) = match self.gain {
            GainCoding::Exact32 => (dsc_encode(self.frame, g, self.rate, self.mode)?, None),
            GainCoding::Dithered { bits, max } => (
                dsc_encode_with_gain(self.frame, g, self.rate, self.mode, bits, max, &mut self.rng)?,
                Some(max),
            ),
        };
        let bytes = channel.send(iteration, &payload)?;
        dsc_decode(self.frame, &QuantizedPayload::from_bytes(&bytes)?, max)
    }
}

/// Dithered gain-shape coder: unbiased, with output norm at most `B·K_u`.
pub struct GainShapeCodec<'a> {
    frame: &'a Frame,
    coder: GainShapeCoder,
    rate: f64,
    rng: Rng,
}

impl<'a> GainShapeCodec<'a> {
    pub fn new(
        frame: &'a Frame,
        rate: f64,
        gain_max: f64,
        gain_bits: u8,
        params: &KashinParams,
        seed: u64,
    ) -> Result<Self> {
        let coder = GainShapeCoder::new(frame, rate, gain_max, gain_bits, params)?;
        Ok(GainShapeCodec { frame, coder, rate, rng: rng::seeded(seed) })
    }

    pub fn coder(&self) -> &GainShapeCoder {
        &self.coder
    }
}

impl GradientCodec for GainShapeCodec<'_> {
    fn name(&self) -> String {
        format!("gain-shape-{}", self.frame.kind().name())
    }

    fn budget(&self) -> u64 {
        body_budget(self.frame.n(), self.rate) + self.coder.gain_bits as u64
    }

    fn transmit(&mut self, iteration: usize, g: &[f64], channel: &mut BitChannel) -> Result<Vec<f64>> {
        let payload = self.coder.encode(self.frame, g, &mut self.rng)?;
        let bytes = channel.send(iteration, &payload)?;
        self.coder.decode(self.frame, &QuantizedPayload::from_bytes(&bytes)?)
    }
}

/// A generic compressor, optionally applied to a (near-)democratic embedding.
///
/// The channel is charged value and gain bits. Support indices are not
/// charged: random supports come from randomness shared by both ends, and
/// top-k supports are reported by [`crate::compressors::BitCost`] but left
/// out of the matched budget.
pub struct CompressorCodec<'a> {
    spec: CompressorSpec,
    embedding: Option<(&'a Frame, EmbeddingMode)>,
    budget: u64,
    rng: Rng,
}

impl<'a> CompressorCodec<'a> {
    pub fn new(spec: CompressorSpec, embedding: Option<(&'a Frame, EmbeddingMode)>, budget: u64, seed: u64) -> Self {
        CompressorCodec { spec, embedding, budget, rng: rng::seeded(seed) }
    }
}

impl GradientCodec for CompressorCodec<'_> {
    fn name(&self) -> String {
        let base = match self.spec {
            CompressorSpec::RandomSparsify { .. } => "random-sparsify",
            CompressorSpec::TopK { .. } => "topk",
            CompressorSpec::Sign { .. } => "sign",
            CompressorSpec::StandardDither { .. } => "standard-dither",
        };
        match self.embedding {
            None => base.to_string(),
            Some((f, EmbeddingMode::NearDemocratic)) => format!("nd-{}+{base}", f.kind().name()),
            Some((f, EmbeddingMode::Democratic)) => format!("dem-{}+{base}", f.kind().name()),
        }
    }

    fn budget(&self) -> u64 {
        self.budget
    }

    fn transmit(&mut self, iteration: usize, g: &[f64], channel: &mut BitChannel) -> Result<Vec<f64>> {
        let out = match self.embedding {
            None => compress(&self.spec, g, &mut self.rng)?,
            Some((frame, mode)) => democratic_wrap(frame, &self.spec, g, mode, &mut self.rng)?,
        };
        channel.charge(iteration, out.bits.value_bits + out.bits.gain_bits)?;
        Ok(out.output)
    }
}
