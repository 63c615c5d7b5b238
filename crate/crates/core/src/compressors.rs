//! Generic gradient compressors and the embed-then-compress wrapper.
//!
//! Each compressor returns its output in the decoded domain together with an
//! exact [`BitCost`]. [`democratic_wrap`] embeds `y` in a frame, compresses
//! the embedding, and decodes with `S`. When the compressor preserves signs
//! and never exceeds the peak magnitude of its input (see
//! [`CompressorSpec::preserves_sign_and_peak`]) the wrapped error satisfies
//! `E‖S C(x) − y‖₂² ≤ γ²‖y‖₂²` with `γ = √N ·` [`dynamic_range_bound`].

use num_bigint::BigUint;
use rand::RngCore;
use serde::{Deserialize, Serialize};

use crate::embeddings::{dynamic_range_bound, embed, EmbeddingMode};
use crate::error::{Error, Result};
use crate::frames::{Frame, KashinParams};
use crate::linalg::{inf_norm, l2_norm};
use crate::quantizers::ScalarQuantizerSpec;
use crate::rng::{sample_without_replacement, uniform};

/// Compressor description as it appears in configuration files, e.g.
/// `{ type = "topk", k = 64 }`.
///
/// Sparsifiers send kept values as 32-bit floats unless `value_bits` is set,
/// in which case kept values are divided by their peak magnitude (sent as a
/// 32-bit float) and coded with the midpoint uniform quantizer of that many
/// bits. One value bit yields `±peak/2`, which keeps signs and never exceeds
/// the peak.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case", deny_unknown_fields)]
pub enum CompressorSpec {
    RandomSparsify {
        k: usize,
        #[serde(default)]
        rescale: bool,
        #[serde(default)]
        value_bits: Option<u8>,
    },
    #[serde(rename = "topk")]
    TopK {
        k: usize,
        #[serde(default)]
        value_bits: Option<u8>,
    },
    Sign {
        #[serde(default = "unit_scale")]
        scale: f64,
    },
    StandardDither { levels: u32 },
}

fn unit_scale() -> f64 {
    1.0
}

/// Exact transmitted bits, split by purpose.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize)]
pub struct BitCost {
    pub value_bits: u64,
    pub index_bits: u64,
    pub gain_bits: u64,
}

impl BitCost {
    pub fn total(&self) -> u64 {
        self.value_bits + self.index_bits + self.gain_bits
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Compressed {
    pub output: Vec<f64>,
    pub bits: BitCost,
}

impl CompressorSpec {
    pub fn validate(&self, dim: usize) -> Result<()> {
        let check_value_bits = |vb: Option<u8>| match vb {
            Some(b) if b == 0 || b > 32 => Err(Error::InvalidSpec(format!("value_bits must be in 1..=32, got {b}"))),
            _ => Ok(()),
        };
        match *self {
            CompressorSpec::RandomSparsify { k, value_bits, .. } | CompressorSpec::TopK { k, value_bits } => {
                if k == 0 || k > dim {
                    return Err(Error::InvalidSpec(format!("k = {k} must lie in 1..={dim}")));
                }
                check_value_bits(value_bits)
            }
            CompressorSpec::Sign { scale } => {
                if !(scale > 0.0) || !scale.is_finite() {
                    return Err(Error::InvalidSpec(format!("sign scale must be positive, got {scale}")));
                }
                Ok(())
            }
            CompressorSpec::StandardDither { levels } => {
                if levels == 0 {
                    return Err(Error::InvalidSpec("standard dithering needs at least one level".into()));
                }
                Ok(())
            }
        }
    }

    /// Whether every output coordinate satisfies `0 ≤ C(x)_j·sign(x_j) ≤ ‖x‖∞`.
    pub fn preserves_sign_and_peak(&self) -> bool {
        matches!(self, CompressorSpec::TopK { .. } | CompressorSpec::RandomSparsify { rescale: false, .. })
    }

    /// Whether `E[C(x)] = x`.
    pub fn is_unbiased(&self) -> bool {
        matches!(
            self,
            CompressorSpec::RandomSparsify { rescale: true, value_bits: None, .. } | CompressorSpec::StandardDither { .. }
        )
    }

    /// Transmitted bits for a `dim`-dimensional input.
    pub fn bit_cost(&self, dim: usize) -> Result<BitCost> {
        self.validate(dim)?;
        Ok(match *self {
            CompressorSpec::RandomSparsify { k, value_bits, .. } | CompressorSpec::TopK { k, value_bits } => {
                let (per_value, gain) = match value_bits {
                    None => (32, 0),
                    Some(b) => (b as u64, 32),
                };
                BitCost {
                    value_bits: k as u64 * per_value,
                    index_bits: subset_index_bits(dim, k),
                    gain_bits: gain,
                }
            }
            CompressorSpec::Sign { .. } => BitCost { value_bits: dim as u64, ..BitCost::default() },
            CompressorSpec::StandardDither { levels } => BitCost {
                value_bits: dim as u64 * (ceil_log2(levels as u64 + 1) + 1),
                index_bits: 0,
                gain_bits: 32,
            },
        })
    }
}

fn ceil_log2(v: u64) -> u64 {
    if v <= 1 {
        0
    } else {
        64 - (v - 1).leading_zeros() as u64
    }
}

/// `⌈log₂ C(m, k)⌉`, computed exactly.
pub fn subset_index_bits(m: usize, k: usize) -> u64 {
    let k = k.min(m - k);
    let mut c = BigUint::from(1u32);
    for i in 0..k {
        c *= BigUint::from(m - i);
        c /= BigUint::from(i + 1);
    }
    if c <= BigUint::from(1u32) {
        0
    } else {
        (c - 1u32).bits()
    }
}

/// Apply `spec` to `x`.
pub fn compress<R: RngCore + ?Sized>(spec: &CompressorSpec, x: &[f64], rng: &mut R) -> Result<Compressed> {
    let m = x.len();
    let bits = spec.bit_cost(m)?;
    let output = match *spec {
        CompressorSpec::RandomSparsify { k, rescale, value_bits } => {
            let keep = sample_without_replacement(rng, m, k);
            let factor = if rescale { m as f64 / k as f64 } else { 1.0 };
            let mut out = vec![0.0; m];
            let vals = code_values(keep.iter().map(|&i| x[i]).collect(), value_bits)?;
            for (&i, v) in keep.iter().zip(vals) {
                out[i] = v * factor;
            }
            out
        }
        CompressorSpec::TopK { k, value_bits } => {
            let keep = top_k_indices(x, k);
            let mut out = vec![0.0; m];
            let vals = code_values(keep.iter().map(|&i| x[i]).collect(), value_bits)?;
            for (&i, v) in keep.iter().zip(vals) {
                out[i] = v;
            }
            out
        }
        CompressorSpec::Sign { scale } => x.iter().map(|&v| if v < 0.0 { -scale } else { scale }).collect(),
        CompressorSpec::StandardDither { levels } => {
            let norm = l2_norm(x) as f32 as f64;
            let s = levels as f64;
            x.iter()
                .map(|&v| {
                    if norm == 0.0 {
                        return 0.0;
                    }
                    let r = (v.abs() / norm * s).min(s);
                    let lo = r.floor();
                    let level = lo + f64::from(uniform(rng) < r - lo);
                    v.signum() * norm * level / s
                })
                .collect()
        }
    };
    Ok(Compressed { output, bits })
}

/// Indices of the `k` largest magnitudes, ties to the lower index, ascending.
pub fn top_k_indices(x: &[f64], k: usize) -> Vec<usize> {
    let mut order: Vec<usize> = (0..x.len()).collect();
    order.sort_by(|&a, &b| x[b].abs().total_cmp(&x[a].abs()).then(a.cmp(&b)));
    let mut keep = order[..k].to_vec();
    keep.sort_unstable();
    keep
}

/// Nearest f32 no larger in magnitude, so coded values never exceed the peak.
fn f32_toward_zero(v: f64) -> f64 {
    let f = v as f32;
    if f.is_finite() && f != 0.0 && (f as f64).abs() > v.abs() {
        f32::from_bits(f.to_bits() - 1) as f64
    } else {
        f as f64
    }
}

fn code_values(vals: Vec<f64>, value_bits: Option<u8>) -> Result<Vec<f64>> {
    let Some(b) = value_bits else {
        return Ok(vals.into_iter().map(f32_toward_zero).collect());
    };
    let peak = f32_toward_zero(inf_norm(&vals));
    if peak == 0.0 {
        return Ok(vec![0.0; vals.len()]);
    }
    let q = ScalarQuantizerSpec::new(b)?;
    vals.iter()
        .map(|v| Ok(peak * q.grid_value(q.quantize_one((v / peak).clamp(-1.0, 1.0))?)))
        .collect()
}

/// Embed `y`, compress the embedding with `spec`, and decode with `S`.
pub fn democratic_wrap<R: RngCore + ?Sized>(
    frame: &Frame,
    spec: &CompressorSpec,
    y: &[f64],
    mode: EmbeddingMode,
    rng: &mut R,
) -> Result<Compressed> {
    let x = embed(frame, y, mode)?.coefficients;
    let c = compress(spec, &x, rng)?;
    Ok(Compressed { output: frame.apply(&c.output)?, bits: c.bits })
}

/// `γ` in the wrapped error bound: `K_u` (democratic), `2√ln(2N)` (near-democratic
/// Hadamard) or `2√(λ ln(2N))` (near-democratic orthonormal).
pub fn wrap_error_factor(frame: &Frame, mode: EmbeddingMode, params: Option<&KashinParams>) -> Result<f64> {
    Ok(dynamic_range_bound(frame, mode, params)? * (frame.big_n() as f64).sqrt())
}
