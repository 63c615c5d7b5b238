//! TOML experiment configurations.
//!
//! ```toml
//! seed = 7
//! output = "map.csv"
//!
//! [experiment]
//! kind = "compression_map"
//! dim = 256
//! rates = [1, 2, 4, 8]
//! ```
//!
//! Every field except `kind` has a desk-scale default.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use super::datasets::DatasetSource;
use crate::compressors::CompressorSpec;
use crate::error::{Error, Result};
use crate::frames::FrameKind;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    /// Base seed; every cell derives its own stream from it.
    #[serde(default)]
    pub seed: u64,
    /// CSV destination. Relative paths resolve against the config file.
    #[serde(default)]
    pub output: Option<PathBuf>,
    pub experiment: Experiment,
}

impl ExperimentConfig {
    pub fn from_toml(text: &str) -> Result<Self> {
        let cfg: ExperimentConfig = toml::from_str(text).map_err(|e| Error::Config(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    /// Read and validate a config file; a relative `output` is resolved
    /// against the file's directory.
    pub fn load(path: &Path) -> Result<Self> {
        let mut cfg = Self::from_toml(&std::fs::read_to_string(path)?)?;
        if let (Some(out), Some(dir)) = (cfg.output.as_mut(), path.parent()) {
            if out.is_relative() {
                *out = dir.join(&*out);
            }
        }
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<()> {
        self.experiment.validate()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Experiment {
    CompressionMap(CompressionMapConfig),
    #[serde(rename = "rate_vs_r")]
    RateVsR(RateVsRConfig),
    Wallclock(WallclockConfig),
    SparsifiedGd(SparsifiedGdConfig),
    Svm(SvmConfig),
}

impl Experiment {
    pub fn name(&self) -> &'static str {
        match self {
            Experiment::CompressionMap(_) => "compression_map",
            Experiment::RateVsR(_) => "rate_vs_r",
            Experiment::Wallclock(_) => "wallclock",
            Experiment::SparsifiedGd(_) => "sparsified_gd",
            Experiment::Svm(_) => "svm",
        }
    }

    pub fn validate(&self) -> Result<()> {
        match self {
            Experiment::CompressionMap(c) => {
                positive("dim", c.dim)?;
                positive("realizations", c.realizations)?;
                rates(&c.rates)?;
                nonempty("schemes", &c.schemes)?;
                at_least_one("kashin_aspect", c.kashin_aspect)
            }
            Experiment::RateVsR(c) => {
                positive("dim", c.dim)?;
                if c.samples < c.dim {
                    return Err(Error::Config(format!(
                        "samples ({}) must be at least dim ({}) for a strongly convex problem",
                        c.samples, c.dim
                    )));
                }
                positive("seeds", c.seeds)?;
                rates(&c.rates)?;
                nonempty("methods", &c.methods)?;
                at_least_one("dsc_aspect", c.dsc_aspect)?;
                step_scale(c.step_scale)
            }
            Experiment::Wallclock(c) => {
                nonempty("dims", &c.dims)?;
                if c.dims.contains(&0) {
                    return Err(Error::Config("dims must be positive".into()));
                }
                positive("repetitions", c.repetitions)
            }
            Experiment::SparsifiedGd(c) => {
                positive("iterations", c.iterations)?;
                positive("seeds", c.seeds)?;
                if !(c.keep_fraction > 0.0 && c.keep_fraction <= 1.0) {
                    return Err(Error::Config(format!("keep_fraction {} outside (0, 1]", c.keep_fraction)));
                }
                if !(c.reg_fraction >= 0.0) || !c.reg_fraction.is_finite() {
                    return Err(Error::Config(format!("reg_fraction {}", c.reg_fraction)));
                }
                if !(1..=32).contains(&c.value_bits) {
                    return Err(Error::Config(format!("value_bits {} outside 1..=32", c.value_bits)));
                }
                step_scale(c.step_scale)
            }
            Experiment::Svm(c) => {
                positive("iterations", c.iterations)?;
                positive("seeds", c.seeds)?;
                positive("batch", c.batch)?;
                positive("record_every", c.record_every)?;
                nonempty("methods", &c.methods)?;
                if !(c.rate > 0.0) || !c.rate.is_finite() {
                    return Err(Error::Config(format!("rate {}", c.rate)));
                }
                if !(c.half_width > 0.0) || !c.half_width.is_finite() {
                    return Err(Error::Config(format!("half_width {}", c.half_width)));
                }
                Ok(())
            }
        }
    }
}

fn positive(name: &str, v: usize) -> Result<()> {
    if v == 0 {
        return Err(Error::Config(format!("{name} must be positive")));
    }
    Ok(())
}

fn nonempty<T>(name: &str, v: &[T]) -> Result<()> {
    if v.is_empty() {
        return Err(Error::Config(format!("{name} must not be empty")));
    }
    Ok(())
}

fn rates(v: &[f64]) -> Result<()> {
    nonempty("rates", v)?;
    if let Some(r) = v.iter().find(|r| !(**r > 0.0) || !r.is_finite()) {
        return Err(Error::Config(format!("rate {r} must be positive")));
    }
    Ok(())
}

fn at_least_one(name: &str, v: f64) -> Result<()> {
    if !(v >= 1.0) || !v.is_finite() {
        return Err(Error::Config(format!("{name} {v} must be at least 1")));
    }
    Ok(())
}

fn step_scale(v: f64) -> Result<()> {
    if !(v > 0.0 && v <= 1.0) {
        return Err(Error::Config(format!("step_scale {v} outside (0, 1]")));
    }
    Ok(())
}

/// Coding schemes compared on heavy-tailed vectors.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Scheme {
    /// Standard dithering with `2^(R−1) − 1` levels (sign plus level index).
    Sd,
    /// Largest `k` with `32k + ⌈log₂ C(n,k)⌉ ≤ nR`.
    Topk,
    /// Democratic coding with a random orthonormal frame of aspect `kashin_aspect`.
    Kashin,
    /// Near-democratic coding, randomized Hadamard frame, `N = 2^⌈log₂ n⌉`.
    Ndh,
    /// Near-democratic coding, square random orthonormal frame.
    Ndo,
    /// Scalar quantization of the ℓ∞-normalized vector itself.
    Scalar,
}

impl Scheme {
    pub fn name(self) -> &'static str {
        match self {
            Scheme::Sd => "sd",
            Scheme::Topk => "topk",
            Scheme::Kashin => "kashin",
            Scheme::Ndh => "ndh",
            Scheme::Ndo => "ndo",
            Scheme::Scalar => "scalar",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct CompressionMapConfig {
    pub dim: usize,
    pub realizations: usize,
    pub rates: Vec<f64>,
    pub schemes: Vec<Scheme>,
    pub kashin_aspect: f64,
}

impl Default for CompressionMapConfig {
    fn default() -> Self {
        CompressionMapConfig {
            dim: 256,
            realizations: 50,
            rates: vec![1.0, 2.0, 3.0, 4.0, 6.0, 8.0],
            schemes: vec![Scheme::Sd, Scheme::Topk, Scheme::Kashin, Scheme::Ndh, Scheme::Ndo],
            kashin_aspect: 2.0,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum GdMethod {
    Unquantized,
    /// DGD-DEF over the identity frame.
    Scalar,
    /// DGD-DEF with democratic coding, orthonormal frame of aspect `dsc_aspect`.
    Dsc,
    /// DGD-DEF with near-democratic coding, square orthonormal frame.
    Ndsc,
    /// DGD-DEF with near-democratic coding, randomized Hadamard frame.
    NdscHadamard,
}

impl GdMethod {
    pub fn name(self) -> &'static str {
        match self {
            GdMethod::Unquantized => "unquantized",
            GdMethod::Scalar => "scalar",
            GdMethod::Dsc => "dsc",
            GdMethod::Ndsc => "ndsc",
            GdMethod::NdscHadamard => "ndsc_hadamard",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RateVsRConfig {
    pub dim: usize,
    /// Rows of the heavy-tailed design matrix.
    pub samples: usize,
    pub seeds: usize,
    pub rates: Vec<f64>,
    pub methods: Vec<GdMethod>,
    /// Fixed horizon; by default `T` is chosen so that `σ^T ≈ 1e-6`.
    pub iterations: Option<usize>,
    /// Step as a fraction of `2/(L+μ)`.
    pub step_scale: f64,
    pub dsc_aspect: f64,
}

impl Default for RateVsRConfig {
    fn default() -> Self {
        RateVsRConfig {
            dim: 116,
            samples: 232,
            seeds: 3,
            rates: vec![1.0, 2.0, 3.0, 4.0, 6.0, 8.0, 10.0, 12.0],
            methods: vec![GdMethod::Unquantized, GdMethod::Scalar, GdMethod::Dsc, GdMethod::Ndsc],
            iterations: None,
            step_scale: 1.0,
            dsc_aspect: 2.0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct WallclockConfig {
    pub dims: Vec<usize>,
    pub repetitions: usize,
    pub warmup: usize,
    pub frame: FrameKind,
}

impl Default for WallclockConfig {
    fn default() -> Self {
        WallclockConfig {
            dims: vec![16, 32, 64, 128, 256],
            repetitions: 10,
            warmup: 1,
            frame: FrameKind::RandomizedHadamard,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SparsifiedGdConfig {
    pub data: DatasetSource,
    /// Ridge weight as a fraction of `λ_max(AᵀA)`.
    pub reg_fraction: f64,
    /// Fraction of embedding coordinates kept by random sparsification.
    pub keep_fraction: f64,
    /// Bits per kept value.
    pub value_bits: u8,
    pub iterations: usize,
    pub seeds: usize,
    /// Step as a fraction of `2/(L+μ)`.
    pub step_scale: f64,
    /// Frame used by the wrapped pipeline (square, near-democratic).
    pub frame: FrameKind,
}

impl Default for SparsifiedGdConfig {
    fn default() -> Self {
        SparsifiedGdConfig {
            data: DatasetSource::GaussianCubed { samples: 128, dim: 64, seed: 0 },
            reg_fraction: 0.1,
            keep_fraction: 0.5,
            value_bits: 1,
            iterations: 300,
            seeds: 5,
            step_scale: 1.0,
            frame: FrameKind::RandomOrthonormal,
        }
    }
}

/// A gradient transport compared in the SVM experiment.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case", deny_unknown_fields)]
pub enum SvmMethod {
    /// No bit budget.
    Unquantized,
    /// DQ-PSGD with the gain-shape quantizer at its own rate.
    DqPsgd {
        rate: f64,
        #[serde(default = "two")]
        aspect: f64,
        #[serde(default = "eight")]
        gain_bits: u8,
    },
    /// A compressor at the shared budget, optionally applied to the
    /// near-democratic embedding in a square frame of the given kind.
    Compressed {
        compressor: CompressorSpec,
        #[serde(default)]
        embed: Option<FrameKind>,
    },
}

fn two() -> f64 {
    2.0
}

fn eight() -> u8 {
    8
}

impl SvmMethod {
    pub fn name(&self) -> String {
        match self {
            SvmMethod::Unquantized => "unquantized".into(),
            SvmMethod::DqPsgd { rate, .. } => format!("dq_psgd_r{rate}"),
            SvmMethod::Compressed { compressor, embed } => {
                let base = match compressor {
                    CompressorSpec::RandomSparsify { k, value_bits, .. } => {
                        format!("random_sparsify_k{k}_b{}", value_bits.map_or(32, |b| b))
                    }
                    CompressorSpec::TopK { k, value_bits } => format!("topk_k{k}_b{}", value_bits.map_or(32, |b| b)),
                    CompressorSpec::Sign { .. } => "sign".into(),
                    CompressorSpec::StandardDither { levels } => format!("standard_dither_s{levels}"),
                };
                match embed {
                    None => base,
                    Some(kind) => format!("nd_{}+{base}", kind.name()),
                }
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SvmConfig {
    pub data: DatasetSource,
    pub iterations: usize,
    pub seeds: usize,
    /// Shared budget `⌊nR⌋` value bits (plus a 32-bit gain) for compressed methods.
    pub rate: f64,
    pub batch: usize,
    /// The feasible set is `[−half_width, half_width]^n`.
    pub half_width: f64,
    pub record_every: usize,
    pub methods: Vec<SvmMethod>,
}

impl Default for SvmConfig {
    fn default() -> Self {
        let sparsify = CompressorSpec::RandomSparsify { k: 15, rescale: false, value_bits: Some(1) };
        let topk = CompressorSpec::TopK { k: 3, value_bits: Some(5) };
        SvmConfig {
            data: DatasetSource::GaussianClasses { samples: 100, dim: 30, mean_norm: 3.0, seed: 0 },
            iterations: 2000,
            seeds: 10,
            rate: 0.5,
            batch: 10,
            half_width: 1.0,
            record_every: 10,
            methods: vec![
                SvmMethod::Unquantized,
                SvmMethod::Compressed { compressor: sparsify, embed: None },
                SvmMethod::Compressed { compressor: sparsify, embed: Some(FrameKind::RandomOrthonormal) },
                SvmMethod::Compressed { compressor: topk, embed: None },
                SvmMethod::Compressed { compressor: topk, embed: Some(FrameKind::RandomOrthonormal) },
            ],
        }
    }
}
