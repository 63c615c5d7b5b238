//! `democode`: embed, quantize and compress vectors from files, run the
//! optimizers, execute experiment configs and evaluate the bound formulas.
//!
//! Exit status is 0 on success, 1 on a usage error and 2 on a runtime error.

use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};
use democode::compressors::{compress, democratic_wrap, CompressorSpec};
use democode::embeddings::{democratic_iterative, embed, iterative_params, EmbeddingMode};
use democode::frames::{frame_kashin_params, kashin_frame, Frame, FrameKind};
use democode::harness::{format_vector, parse_csv_dataset, parse_vector, run_config, to_csv, ExperimentConfig};
use democode::harness::datasets::gaussian_classes;
use democode::optim::bounds::{prop2_bound, prop4_bound, thm1_lower};
use democode::optim::{
    dgd_def, dq_psgd, random_least_squares, scalar_dqgd_baseline, unquantized_gd, Domain, GainCoding, GdConfig,
    HingeSvm, Oracle, PsgdConfig, RunReport, SmoothObjective,
};
use democode::quantizers::bounds::{covering_efficiency, prop1_bound, ErrorConstant};
use democode::quantizers::dither::{gain_shape_decode, gain_shape_quantize};
use democode::quantizers::payload::{CodingMode, QuantizedPayload};
use democode::quantizers::{dsc_decode, dsc_encode, dsc_encode_with_gain};
use democode::rng::stream::{CODER, DATA, FRAME};
use democode::rng::{self, derive_seed};

#[derive(Parser)]
#[command(name = "democode", version, about = "Democratic embeddings for bit-budgeted quantization")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Embed a vector in a frame and report the gain.
    Embed(EmbedArgs),
    /// Source-code a vector into a `.dsc` payload.
    Quantize(QuantizeArgs),
    /// Decode a `.dsc` payload.
    Dequantize(DequantizeArgs),
    /// Apply a sparsifying or dithering compressor, optionally in a frame.
    Compress(CompressArgs),
    /// Run an optimizer and write its per-iteration report as CSV.
    Optimize(OptimizeArgs),
    /// Run an experiment config and write its CSV.
    Bench(BenchArgs),
    /// Evaluate a closed-form bound.
    Bounds(BoundsArgs),
}

#[derive(Clone, Copy, ValueEnum)]
enum EmbedMode {
    /// ℓ∞-minimal embedding by linear programming.
    Dem,
    /// ℓ∞-reducing truncate-and-project iteration.
    DemIter,
    /// ℓ₂-minimal embedding.
    Near,
}

#[derive(Clone, Copy, ValueEnum)]
enum QuantMode {
    Dsc,
    Ndsc,
    GainShape,
}

#[derive(Clone, Copy, ValueEnum)]
enum Algo {
    DgdDef,
    DqPsgd,
    Gd,
    Scalar,
}

#[derive(Clone, Copy, ValueEnum)]
enum CodeMode {
    Dem,
    Near,
}

impl From<CodeMode> for EmbeddingMode {
    fn from(m: CodeMode) -> Self {
        match m {
            CodeMode::Dem => EmbeddingMode::Democratic,
            CodeMode::Near => EmbeddingMode::NearDemocratic,
        }
    }
}

#[derive(Clone, Copy, ValueEnum)]
enum Which {
    Thm1,
    Prop1,
    Prop2,
    Prop4,
    Lemma4,
}

fn frame_kind(s: &str) -> Result<FrameKind, String> {
    s.parse().map_err(|e: democode::Error| e.to_string())
}

#[derive(clap::Args)]
struct FrameArgs {
    #[arg(long, value_parser = frame_kind, default_value = "hadamard")]
    frame: FrameKind,
    /// Source dimension; defaults to the input length.
    #[arg(long)]
    n: Option<usize>,
    /// Embedding dimension.
    #[arg(long = "N")]
    big_n: usize,
    /// Seeds the frame draw.
    #[arg(long)]
    seed: u64,
}

impl FrameArgs {
    fn build(&self, len: usize) -> Result<Frame, CliError> {
        let n = self.n.unwrap_or(len);
        Ok(Frame::build(self.frame, n, self.big_n, self.seed)?)
    }
}

#[derive(clap::Args)]
struct EmbedArgs {
    #[command(flatten)]
    frame: FrameArgs,
    #[arg(long, value_enum, default_value = "near")]
    mode: EmbedMode,
    /// Iterations of the `dem-iter` mode.
    #[arg(long, default_value_t = 30)]
    iters: usize,
    #[arg(long = "in")]
    input: PathBuf,
    /// Coefficients are written here; stdout otherwise.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(clap::Args)]
struct QuantizeArgs {
    #[command(flatten)]
    frame: FrameArgs,
    #[arg(long)]
    rate: f64,
    #[arg(long, value_enum, default_value = "ndsc")]
    mode: QuantMode,
    /// Send the gain as a dithered index of this many bits instead of an f32.
    #[arg(long)]
    gain_bits: Option<u8>,
    /// Upper end of the gain range for dithered gains.
    #[arg(long)]
    gain_max: Option<f64>,
    #[arg(long = "in")]
    input: PathBuf,
    /// Payload file (`.dsc`).
    #[arg(long)]
    out: PathBuf,
    /// Also write the decoded vector here.
    #[arg(long)]
    decoded: Option<PathBuf>,
}

#[derive(clap::Args)]
struct DequantizeArgs {
    #[arg(long = "in")]
    input: PathBuf,
    /// Gain range shared out of band; required for dithered gains.
    #[arg(long)]
    gain_max: Option<f64>,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(clap::Args)]
struct CompressArgs {
    /// Compressor as JSON, e.g. `{"type":"topk","k":3,"value_bits":5}`.
    #[arg(long)]
    spec: String,
    /// Compress in this frame's embedding domain.
    #[arg(long, value_parser = frame_kind)]
    embed: Option<FrameKind>,
    /// Embedding dimension when `--embed` is given; defaults to the input length.
    #[arg(long = "N")]
    big_n: Option<usize>,
    #[arg(long, value_enum, default_value = "near")]
    mode: CodeMode,
    #[arg(long)]
    seed: u64,
    #[arg(long = "in")]
    input: PathBuf,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(clap::Args)]
struct OptimizeArgs {
    #[arg(long, value_enum)]
    algo: Algo,
    /// CSV dataset with the target (or ±1 label) in the last column.
    #[arg(long)]
    data: Option<PathBuf>,
    /// Synthetic sample count when no `--data` is given.
    #[arg(long, default_value_t = 232)]
    samples: usize,
    /// Synthetic dimension when no `--data` is given.
    #[arg(long, default_value_t = 116)]
    dim: usize,
    /// Synthetic least squares with cubed-Gaussian design.
    #[arg(long)]
    heavy_tailed: bool,
    /// Class-mean norm of the synthetic SVM data.
    #[arg(long, default_value_t = 3.0)]
    mean_norm: f64,
    #[arg(long)]
    rate: Option<f64>,
    #[arg(long, value_parser = frame_kind, default_value = "orthonormal")]
    frame: FrameKind,
    /// Embedding dimension; defaults to twice the problem dimension.
    #[arg(long = "N")]
    big_n: Option<usize>,
    #[arg(long, value_enum, default_value = "near")]
    mode: CodeMode,
    #[arg(long)]
    iterations: usize,
    /// Defaults to 2/(L+μ) for smooth runs and D/(B·K_u·√T) for DQ-PSGD.
    #[arg(long)]
    step: Option<f64>,
    #[arg(long, default_value_t = 8)]
    gain_bits: u8,
    /// Half-width of the box domain of DQ-PSGD.
    #[arg(long, default_value_t = 1.0)]
    half_width: f64,
    /// Minibatch size of the stochastic subgradient; exact subgradients otherwise.
    #[arg(long)]
    batch: Option<usize>,
    #[arg(long)]
    seed: u64,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(clap::Args)]
struct BenchArgs {
    #[arg(long)]
    config: PathBuf,
    /// Overrides the config's `output`; stdout when neither is set.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(clap::Args)]
struct BoundsArgs {
    #[arg(long, value_enum)]
    which: Which,
    #[arg(long)]
    sigma: Option<f64>,
    #[arg(long)]
    rate: Option<f64>,
    /// Aspect ratio N/n.
    #[arg(long)]
    lambda: Option<f64>,
    /// Upper Kashin constant; selects the democratic formula.
    #[arg(long)]
    k_upper: Option<f64>,
    /// Embedding dimension; selects the near-democratic formula.
    #[arg(long = "N")]
    big_n: Option<usize>,
    #[arg(long, value_parser = frame_kind, default_value = "hadamard")]
    frame: FrameKind,
    #[arg(long)]
    nu: Option<f64>,
    #[arg(long)]
    beta: Option<f64>,
    #[arg(long)]
    alpha: Option<f64>,
    /// Smoothness constant.
    #[arg(long)]
    l: Option<f64>,
    /// Iteration count.
    #[arg(long)]
    t: Option<usize>,
    /// Initial distance (prop2) or domain diameter (prop4).
    #[arg(long)]
    d: Option<f64>,
    /// Subgradient norm bound.
    #[arg(long)]
    b: Option<f64>,
}

enum CliError {
    Usage(String),
    Runtime(String),
}

impl From<democode::Error> for CliError {
    fn from(e: democode::Error) -> Self {
        CliError::Runtime(e.to_string())
    }
}

fn io_err(path: &Path, e: std::io::Error) -> CliError {
    CliError::Runtime(format!("{}: {e}", path.display()))
}

fn need<T>(v: Option<T>, flag: &str, which: &str) -> Result<T, CliError> {
    v.ok_or_else(|| CliError::Usage(format!("{flag} is required for --which {which}")))
}

fn read_text(path: &Path) -> Result<String, CliError> {
    fs::read_to_string(path).map_err(|e| io_err(path, e))
}

fn read_vector(path: &Path) -> Result<Vec<f64>, CliError> {
    parse_vector(&read_text(path)?).map_err(|e| CliError::Runtime(format!("{}: {e}", path.display())))
}

fn emit(path: Option<&Path>, text: &str) -> Result<(), CliError> {
    match path {
        Some(p) => fs::write(p, text).map_err(|e| io_err(p, e)),
        None => {
            print!("{text}");
            Ok(())
        }
    }
}

fn run_embed(a: &EmbedArgs) -> Result<(), CliError> {
    let y = read_vector(&a.input)?;
    let frame = a.frame.build(y.len())?;
    let emb = match a.mode {
        EmbedMode::Dem => embed(&frame, &y, EmbeddingMode::Democratic)?,
        EmbedMode::Near => embed(&frame, &y, EmbeddingMode::NearDemocratic)?,
        EmbedMode::DemIter => {
            let params = iterative_params(&frame, derive_seed(a.frame.seed, &[FRAME]))?;
            democratic_iterative(&frame, &y, &params, a.iters)?
        }
    };
    emit(a.out.as_deref(), &format_vector(&emb.coefficients))?;
    eprintln!("gain {:?}", emb.gain);
    eprintln!("residual {:?}", emb.residual);
    Ok(())
}

fn run_quantize(a: &QuantizeArgs) -> Result<(), CliError> {
    let y = read_vector(&a.input)?;
    let frame = a.frame.build(y.len())?;
    let mut coder_rng = rng::seeded(derive_seed(a.frame.seed, &[CODER]));
    let payload = match (a.mode, a.gain_bits) {
        (QuantMode::GainShape, bits) => {
            let bits = bits.ok_or_else(|| CliError::Usage("--gain-bits is required for --mode gain-shape".into()))?;
            let max = a.gain_max.ok_or_else(|| CliError::Usage("--gain-max is required for --mode gain-shape".into()))?;
            let params = frame_kashin_params(&frame)?;
            gain_shape_quantize(&frame, &y, a.rate, max, bits, &params, &mut coder_rng)?
        }
        (m, None) => dsc_encode(&frame, &y, a.rate, code_mode(m))?,
        (m, Some(bits)) => {
            let max = a.gain_max.ok_or_else(|| CliError::Usage("--gain-max is required with --gain-bits".into()))?;
            dsc_encode_with_gain(&frame, &y, a.rate, code_mode(m), bits, max, &mut coder_rng)?
        }
    };
    let bytes = payload.to_bytes()?;
    fs::write(&a.out, &bytes).map_err(|e| io_err(&a.out, e))?;
    if let Some(path) = &a.decoded {
        let decoded = decode_payload(&QuantizedPayload::from_bytes(&bytes)?, a.gain_max)?;
        emit(Some(path), &format_vector(&decoded))?;
    }
    println!("bits {}", payload.total_bits());
    Ok(())
}

fn code_mode(m: QuantMode) -> EmbeddingMode {
    match m {
        QuantMode::Dsc => EmbeddingMode::Democratic,
        _ => EmbeddingMode::NearDemocratic,
    }
}

/// The frame is rebuilt from the header; gain-shape payloads use the
/// Kashin constants derived from the frame seed, as the encoder does.
fn decode_payload(payload: &QuantizedPayload, gain_max: Option<f64>) -> Result<Vec<f64>, CliError> {
    let frame = payload.header.frame.build()?;
    if payload.header.mode == CodingMode::Dithered {
        let max = gain_max.ok_or_else(|| CliError::Usage("--gain-max is required for gain-shape payloads".into()))?;
        let params = frame_kashin_params(&frame)?;
        Ok(gain_shape_decode(&frame, payload, max, &params)?)
    } else {
        Ok(dsc_decode(&frame, payload, gain_max)?)
    }
}

fn run_dequantize(a: &DequantizeArgs) -> Result<(), CliError> {
    let bytes = fs::read(&a.input).map_err(|e| io_err(&a.input, e))?;
    let payload = QuantizedPayload::from_bytes(&bytes)?;
    emit(a.out.as_deref(), &format_vector(&decode_payload(&payload, a.gain_max)?))
}

fn run_compress(a: &CompressArgs) -> Result<(), CliError> {
    let spec: CompressorSpec =
        serde_json::from_str(&a.spec).map_err(|e| CliError::Usage(format!("--spec: {e}")))?;
    let y = read_vector(&a.input)?;
    let mut coder_rng = rng::seeded(derive_seed(a.seed, &[CODER]));
    let out = match a.embed {
        Some(kind) => {
            let frame = Frame::build(kind, y.len(), a.big_n.unwrap_or(y.len()), derive_seed(a.seed, &[FRAME]))?;
            democratic_wrap(&frame, &spec, &y, a.mode.into(), &mut coder_rng)?
        }
        None => compress(&spec, &y, &mut coder_rng)?,
    };
    emit(a.out.as_deref(), &format_vector(&out.output))?;
    eprintln!("bits {}", out.bits.total());
    Ok(())
}

fn smooth_objective(a: &OptimizeArgs, data_seed: u64) -> Result<SmoothObjective, CliError> {
    match &a.data {
        Some(path) => {
            let d = parse_csv_dataset(&read_text(path)?)?;
            Ok(SmoothObjective::least_squares(d.points, d.labels)?)
        }
        None => Ok(random_least_squares(a.samples, a.dim, a.heavy_tailed, data_seed)?),
    }
}

fn run_optimize(a: &OptimizeArgs) -> Result<(), CliError> {
    let data_seed = derive_seed(a.seed, &[DATA]);
    let frame_seed = derive_seed(a.seed, &[FRAME]);
    let coder_seed = derive_seed(a.seed, &[CODER]);
    let rate = || a.rate.ok_or_else(|| CliError::Usage("--rate is required for this --algo".into()));
    let report: RunReport = match a.algo {
        Algo::Gd | Algo::Scalar | Algo::DgdDef => {
            let obj = smooth_objective(a, data_seed)?;
            let mut cfg = GdConfig::new(a.step.unwrap_or_else(|| obj.max_step()), a.iterations);
            cfg.seed = coder_seed;
            match a.algo {
                Algo::Gd => unquantized_gd(&obj, &cfg)?,
                Algo::Scalar => scalar_dqgd_baseline(&obj, rate()?, &cfg)?,
                _ => {
                    let n = obj.dim();
                    let frame = Frame::build(a.frame, n, a.big_n.unwrap_or(2 * n), frame_seed)?;
                    dgd_def(&obj, &frame, rate()?, a.mode.into(), GainCoding::Exact32, &cfg)?
                }
            }
        }
        Algo::DqPsgd => {
            let d = match &a.data {
                Some(path) => parse_csv_dataset(&read_text(path)?)?,
                None => gaussian_classes(a.samples, a.dim, a.mean_norm, data_seed)?,
            };
            let obj = HingeSvm::new(d.points, d.labels)?;
            let n = obj.dim();
            let domain = Domain::cube(n, a.half_width);
            let (frame, params) = kashin_frame(a.frame, n, a.big_n.unwrap_or(2 * n), frame_seed)?;
            let mut cfg = PsgdConfig::new(a.iterations);
            cfg.seed = coder_seed;
            cfg.oracle = a.batch.map_or(Oracle::Exact, |batch| Oracle::Stochastic { batch });
            dq_psgd(&obj, &frame, rate()?, &domain, &params, a.gain_bits, a.step, &cfg)?
        }
    };
    emit(a.out.as_deref(), &to_csv(&report.records)?)?;
    eprintln!("method {} step {:?} diverged {}", report.method, report.step, report.diverged);
    Ok(())
}

fn run_bench(a: &BenchArgs) -> Result<(), CliError> {
    let cfg = ExperimentConfig::load(&a.config)?;
    let csv = run_config(&cfg)?;
    emit(a.out.as_deref().or(cfg.output.as_deref()), &csv)
}

fn error_constant(a: &BoundsArgs, which: &str) -> Result<ErrorConstant, CliError> {
    match (a.k_upper, a.big_n) {
        (Some(k_upper), None) => Ok(ErrorConstant::Democratic { k_upper }),
        (None, Some(big_n)) => Ok(match a.frame {
            FrameKind::RandomizedHadamard | FrameKind::Identity => ErrorConstant::NearDemocraticHadamard { big_n },
            FrameKind::RandomOrthonormal | FrameKind::SubGaussian => {
                ErrorConstant::NearDemocraticOrthonormal { big_n }
            }
        }),
        _ => Err(CliError::Usage(format!("exactly one of --k-upper or --N is required for --which {which}"))),
    }
}

fn run_bounds(a: &BoundsArgs) -> Result<(), CliError> {
    let value = match a.which {
        Which::Thm1 => thm1_lower(need(a.sigma, "--sigma", "thm1")?, need(a.rate, "--rate", "thm1")?),
        Which::Prop1 => prop1_bound(
            need(a.rate, "--rate", "prop1")?,
            need(a.lambda, "--lambda", "prop1")?,
            error_constant(a, "prop1")?,
        ),
        Which::Lemma4 => {
            covering_efficiency(
                need(a.rate, "--rate", "lemma4")?,
                need(a.lambda, "--lambda", "lemma4")?,
                error_constant(a, "lemma4")?,
            )
            .rho
        }
        Which::Prop2 => prop2_bound(
            need(a.nu, "--nu", "prop2")?,
            need(a.beta, "--beta", "prop2")?,
            need(a.alpha, "--alpha", "prop2")?,
            need(a.l, "--l", "prop2")?,
            need(a.t, "--t", "prop2")?,
            need(a.d, "--d", "prop2")?,
        ),
        Which::Prop4 => prop4_bound(
            need(a.k_upper, "--k-upper", "prop4")?,
            need(a.d, "--d", "prop4")?,
            need(a.b, "--b", "prop4")?,
            need(a.t, "--t", "prop4")?,
        ),
    };
    println!("{value:?}");
    Ok(())
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    let result = match &cli.command {
        Command::Embed(a) => run_embed(a),
        Command::Quantize(a) => run_quantize(a),
        Command::Dequantize(a) => run_dequantize(a),
        Command::Compress(a) => run_compress(a),
        Command::Optimize(a) => run_optimize(a),
        Command::Bench(a) => run_bench(a),
        Command::Bounds(a) => run_bounds(a),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(CliError::Usage(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(1)
        }
        Err(CliError::Runtime(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(2)
        }
    }
}
