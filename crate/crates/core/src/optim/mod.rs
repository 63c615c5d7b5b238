//! Distributed first-order methods under a bit budget.
//!
//! A single worker computes (sub)gradients and sends them through a
//! [`BitChannel`] to the server, which owns the iterate.
//!
//! * [`dgd_def`]: gradient descent with quantized gradients and error feedback
//!   for smooth, strongly convex objectives. Starting from `x̂_0` and
//!   `e_{−1} = 0`, each step computes
//!   `z_t = x̂_t + α e_{t−1}`, `u_t = ∇f(z_t) − e_{t−1}`, `q_t = D(E(u_t))`,
//!   `e_t = q_t − u_t` and `x̂_{t+1} = x̂_t − α q_t`.
//!   Unrolling shows `z_t` is exactly the unquantized GD trajectory and
//!   `x̂_t = z_t − α e_{t−1}`; [`error_feedback_deviation`] checks this.
//! * [`dq_psgd`]: projected stochastic subgradient descent with an unbiased
//!   gain-shape quantizer, returning the averaged iterate.
//! * Baselines: [`unquantized_gd`], [`scalar_dqgd_baseline`] (identity frame),
//!   [`compressed_gd`] and [`projected_subgradient`] with any codec.

pub mod bounds;
pub mod codecs;
pub mod objectives;

pub use bounds::{lemma5_radius, nu, prop2_bound, prop4_bound, sigma, thm1_lower};
pub use codecs::{CompressorCodec, DscCodec, GainCoding, GainShapeCodec, GradientCodec};
pub use objectives::{random_least_squares, Domain, HingeSvm, SmoothObjective};

use serde::{Deserialize, Serialize};

use crate::embeddings::EmbeddingMode;
use crate::error::{Error, Result};
use crate::frames::{Frame, FrameKind, KashinParams};
use crate::harness::channel::{BitChannel, LedgerEntry};
use crate::linalg::{distance, l2_norm};
use crate::rng::{self, derive_seed};

/// A run is declared divergent once `‖x̂_t − x*‖` exceeds this multiple of
/// the initial distance; the empirical rate is then clipped at 1.
pub const DIVERGENCE_FACTOR: f64 = 1e8;

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct IterationRecord {
    pub iteration: usize,
    /// `‖x̂_t − x*‖₂`; NaN when no minimizer is known.
    pub distance: f64,
    /// Objective at `x̂_t` (smooth runs) or at the running average (subgradient runs).
    pub objective: f64,
    /// `objective − f*`; NaN when `f*` is not supplied.
    pub gap: f64,
    /// Bits sent to produce this iterate.
    pub bits: u64,
    /// `‖u‖₂` of the vector handed to the coder.
    pub input_norm: f64,
    /// Training misclassification rate; NaN for regression.
    pub classification_error: f64,
}

#[derive(Debug, Clone)]
pub struct RunReport {
    pub method: String,
    pub step: f64,
    /// Record 0 describes the starting point.
    pub records: Vec<IterationRecord>,
    /// `x̂_0, …` for smooth runs; `x̂_1, …` for projected runs.
    pub iterates: Vec<Vec<f64>>,
    /// Gradient access points `z_t` (error-feedback runs only).
    pub access_points: Vec<Vec<f64>>,
    /// Quantization errors `e_t` (error-feedback runs only).
    pub feedback: Vec<Vec<f64>>,
    /// Final iterate (smooth) or averaged iterate (projected).
    pub output: Vec<f64>,
    pub iterations: usize,
    pub diverged: bool,
    pub budget: u64,
    pub ledger: Vec<LedgerEntry>,
}

impl RunReport {
    pub fn initial_distance(&self) -> f64 {
        self.records[0].distance
    }

    pub fn final_distance(&self) -> f64 {
        self.records.last().unwrap().distance
    }

    pub fn final_gap(&self) -> f64 {
        self.records.last().unwrap().gap
    }

    /// `(‖x̂_T − x*‖/‖x̂_0 − x*‖)^(1/T)`, clipped at 1.
    pub fn empirical_rate(&self) -> f64 {
        let d0 = self.initial_distance();
        let dt = self.final_distance();
        if self.diverged || !dt.is_finite() {
            return 1.0;
        }
        if d0 == 0.0 || self.iterations == 0 {
            return 0.0;
        }
        (dt / d0).powf(1.0 / self.iterations as f64).min(1.0)
    }

    pub fn max_bits(&self) -> u64 {
        self.records.iter().map(|r| r.bits).max().unwrap_or(0)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct GdConfig {
    pub step: f64,
    pub iterations: usize,
    /// Defaults to the origin.
    pub start: Option<Vec<f64>>,
    /// Seeds any dithering inside the coder.
    pub seed: u64,
}

impl GdConfig {
    pub fn new(step: f64, iterations: usize) -> Self {
        GdConfig { step, iterations, start: None, seed: 0 }
    }
}

fn check_smooth(obj: &SmoothObjective, cfg: &GdConfig, need_strong: bool) -> Result<Vec<f64>> {
    if need_strong && !(obj.strong_convexity() > 0.0) {
        return Err(Error::InvalidObjective("error feedback analysis needs μ > 0".into()));
    }
    let max = obj.max_step();
    if !(cfg.step > 0.0 && cfg.step <= max * (1.0 + 1e-12)) {
        return Err(Error::InvalidStepSize(format!("step {} outside (0, 2/(L+μ)] = (0, {max}]", cfg.step)));
    }
    let start = cfg.start.clone().unwrap_or_else(|| vec![0.0; obj.dim()]);
    if start.len() != obj.dim() {
        return Err(Error::DimensionMismatch { expected: obj.dim(), got: start.len() });
    }
    Ok(start)
}

fn smooth_record(obj: &SmoothObjective, t: usize, x: &[f64], bits: u64, input_norm: f64, f_star: f64) -> IterationRecord {
    let objective = obj.value(x);
    IterationRecord {
        iteration: t,
        distance: distance(x, obj.minimizer()),
        objective,
        gap: objective - f_star,
        bits,
        input_norm,
        classification_error: f64::NAN,
    }
}

fn diverging(record: &IterationRecord, d0: f64) -> bool {
    !record.distance.is_finite() || record.distance > DIVERGENCE_FACTOR * d0.max(f64::MIN_POSITIVE)
}

/// Gradient descent with a quantized channel. With `feedback` the worker
/// runs the error-feedback recursion; without it the server simply steps
/// along the decoded gradient.
fn quantized_gd(
    obj: &SmoothObjective,
    codec: &mut dyn GradientCodec,
    cfg: &GdConfig,
    feedback: bool,
) -> Result<RunReport> {
    let mut x = check_smooth(obj, cfg, feedback)?;
    let alpha = cfg.step;
    let n = obj.dim();
    let f_star = obj.value(obj.minimizer());
    let mut channel = BitChannel::new(codec.budget());
    let mut e = vec![0.0; n];
    let mut records = vec![smooth_record(obj, 0, &x, 0, f64::NAN, f_star)];
    let d0 = records[0].distance;
    let mut iterates = vec![x.clone()];
    let mut access_points = Vec::new();
    let mut errors = Vec::new();
    let mut diverged = false;

    for t in 0..cfg.iterations {
        let z: Vec<f64> = if feedback { x.iter().zip(&e).map(|(xi, ei)| xi + alpha * ei).collect() } else { x.clone() };
        let grad = obj.gradient(&z);
        let u: Vec<f64> = if feedback { grad.iter().zip(&e).map(|(g, ei)| g - ei).collect() } else { grad };
        let q = codec.transmit(t, &u, &mut channel)?;
        let bits = channel.ledger().last().map_or(0, |l| l.bits);
        if feedback {
            e = q.iter().zip(&u).map(|(qi, ui)| qi - ui).collect();
            access_points.push(z);
            errors.push(e.clone());
        }
        x.iter_mut().zip(&q).for_each(|(xi, qi)| *xi -= alpha * qi);
        let rec = smooth_record(obj, t + 1, &x, bits, l2_norm(&u), f_star);
        records.push(rec);
        iterates.push(x.clone());
        if diverging(&rec, d0) {
            diverged = true;
            break;
        }
    }
    Ok(RunReport {
        method: codec.name(),
        step: alpha,
        records,
        iterates,
        access_points,
        feedback: errors,
        output: x,
        iterations: cfg.iterations,
        diverged,
        budget: channel.budget(),
        ledger: channel.ledger().to_vec(),
    })
}

/// DGD-DEF with an arbitrary codec.
pub fn dgd_def_with(obj: &SmoothObjective, codec: &mut dyn GradientCodec, cfg: &GdConfig) -> Result<RunReport> {
    quantized_gd(obj, codec, cfg, true)
}

/// DGD-DEF with DSC (`Democratic`) or NDSC (`NearDemocratic`) coding.
pub fn dgd_def(
    obj: &SmoothObjective,
    frame: &Frame,
    rate: f64,
    mode: EmbeddingMode,
    gain: GainCoding,
    cfg: &GdConfig,
) -> Result<RunReport> {
    let mut codec = DscCodec::new(frame, rate, mode, gain, derive_seed(cfg.seed, &[0xDEF]))?;
    dgd_def_with(obj, &mut codec, cfg)
}

/// DGD-DEF over the identity frame: coordinate-wise scalar quantization of
/// the ℓ∞-normalized gradient.
pub fn scalar_dqgd_baseline(obj: &SmoothObjective, rate: f64, cfg: &GdConfig) -> Result<RunReport> {
    let frame = Frame::build(FrameKind::Identity, obj.dim(), obj.dim(), 0)?;
    let mut report = dgd_def(obj, &frame, rate, EmbeddingMode::NearDemocratic, GainCoding::Exact32, cfg)?;
    report.method = "scalar".into();
    Ok(report)
}

/// Gradient descent on a compressed gradient, without error feedback.
pub fn compressed_gd(obj: &SmoothObjective, codec: &mut dyn GradientCodec, cfg: &GdConfig) -> Result<RunReport> {
    quantized_gd(obj, codec, cfg, false)
}

/// Plain gradient descent.
pub fn unquantized_gd(obj: &SmoothObjective, cfg: &GdConfig) -> Result<RunReport> {
    let mut x = check_smooth(obj, cfg, false)?;
    let f_star = obj.value(obj.minimizer());
    let mut records = vec![smooth_record(obj, 0, &x, 0, f64::NAN, f_star)];
    let d0 = records[0].distance;
    let mut iterates = vec![x.clone()];
    let mut diverged = false;
    for t in 0..cfg.iterations {
        let g = obj.gradient(&x);
        x.iter_mut().zip(&g).for_each(|(xi, gi)| *xi -= cfg.step * gi);
        let rec = smooth_record(obj, t + 1, &x, 0, l2_norm(&g), f_star);
        records.push(rec);
        iterates.push(x.clone());
        if diverging(&rec, d0) {
            diverged = true;
            break;
        }
    }
    Ok(RunReport {
        method: "unquantized".into(),
        step: cfg.step,
        records,
        iterates,
        access_points: Vec::new(),
        feedback: Vec::new(),
        output: x,
        iterations: cfg.iterations,
        diverged,
        budget: u64::MAX,
        ledger: Vec::new(),
    })
}

/// Largest deviation from the error-feedback identities
/// `z_t = x_t` and `x̂_t = x_t − α e_{t−1}`, where `x_{t+1} = x_t − α∇f(z_t)`
/// is recomputed from the recorded access points.
pub fn error_feedback_deviation(obj: &SmoothObjective, report: &RunReport) -> f64 {
    let alpha = report.step;
    let mut x = report.iterates[0].clone();
    let mut worst = 0.0f64;
    for (t, z) in report.access_points.iter().enumerate() {
        worst = worst.max(distance(z, &x));
        let g = obj.gradient(z);
        x.iter_mut().zip(&g).for_each(|(xi, gi)| *xi -= alpha * gi);
        let predicted: Vec<f64> = x.iter().zip(&report.feedback[t]).map(|(xi, ei)| xi - alpha * ei).collect();
        worst = worst.max(distance(&predicted, &report.iterates[t + 1]));
    }
    worst
}

/// Subgradient oracle for [`HingeSvm`].
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum Oracle {
    Exact,
    Stochastic { batch: usize },
}

#[derive(Debug, Clone, PartialEq)]
pub struct PsgdConfig {
    pub iterations: usize,
    pub oracle: Oracle,
    /// Defaults to the domain center.
    pub start: Option<Vec<f64>>,
    pub seed: u64,
    /// Optimal value used to report gaps.
    pub f_star: Option<f64>,
}

impl PsgdConfig {
    pub fn new(iterations: usize) -> Self {
        PsgdConfig { iterations, oracle: Oracle::Exact, start: None, seed: 0, f_star: None }
    }
}

/// Projected subgradient method `x̂_{t+1} = Γ(x̂_t − η q_t)` returning the
/// average of `x̂_1, …, x̂_T`. `q_t` is the raw subgradient without a codec.
pub fn projected_subgradient(
    obj: &HingeSvm,
    domain: &Domain,
    mut codec: Option<&mut dyn GradientCodec>,
    step: f64,
    cfg: &PsgdConfig,
) -> Result<RunReport> {
    let n = obj.dim();
    domain.validate(n)?;
    if !(step >= 0.0) || !step.is_finite() {
        return Err(Error::InvalidStepSize(format!("step {step}")));
    }
    if let Oracle::Stochastic { batch: 0 } = cfg.oracle {
        return Err(Error::InvalidObjective("stochastic oracle needs batch >= 1".into()));
    }
    let start = cfg.start.clone().unwrap_or_else(|| domain.center());
    let mut x = domain.project(&start)?;
    let mut oracle_rng = rng::seeded(derive_seed(cfg.seed, &[0x0AC1E]));
    let mut channel = BitChannel::new(codec.as_ref().map_or(u64::MAX, |c| c.budget()));
    let f_star = cfg.f_star.unwrap_or(f64::NAN);
    let mut sum = vec![0.0; n];
    let mut records = Vec::with_capacity(cfg.iterations + 1);
    let mut iterates = Vec::with_capacity(cfg.iterations);
    let record = |t: usize, avg: &[f64], bits: u64, input_norm: f64| {
        let objective = obj.value(avg);
        IterationRecord {
            iteration: t,
            distance: f64::NAN,
            objective,
            gap: objective - f_star,
            bits,
            input_norm,
            classification_error: obj.classification_error(avg),
        }
    };
    records.push(record(0, &x, 0, f64::NAN));

    for t in 1..=cfg.iterations {
        sum.iter_mut().zip(&x).for_each(|(s, v)| *s += v);
        iterates.push(x.clone());
        let g = match cfg.oracle {
            Oracle::Exact => obj.subgradient(&x),
            Oracle::Stochastic { batch } => obj.stochastic_subgradient(&x, batch, &mut oracle_rng),
        };
        let (q, bits) = match codec.as_deref_mut() {
            Some(c) => {
                let q = c.transmit(t - 1, &g, &mut channel)?;
                (q, channel.ledger().last().map_or(0, |l| l.bits))
            }
            None => (g.clone(), 0),
        };
        let avg: Vec<f64> = sum.iter().map(|s| s / t as f64).collect();
        records.push(record(t, &avg, bits, l2_norm(&g)));
        let stepped: Vec<f64> = x.iter().zip(&q).map(|(xi, qi)| xi - step * qi).collect();
        x = domain.project(&stepped)?;
    }
    let output = if cfg.iterations == 0 { x } else { sum.iter().map(|s| s / cfg.iterations as f64).collect() };
    Ok(RunReport {
        method: codec.map_or_else(|| "unquantized".to_string(), |c| c.name()),
        step,
        records,
        iterates,
        access_points: Vec::new(),
        feedback: Vec::new(),
        output,
        iterations: cfg.iterations,
        diverged: false,
        budget: channel.budget(),
        ledger: channel.ledger().to_vec(),
    })
}

/// Step `D/(α√T)` for a coder whose output norm is at most `α`.
pub fn default_psgd_step(diameter: f64, output_bound: f64, iterations: usize) -> f64 {
    let root_t = (iterations.max(1) as f64).sqrt();
    if output_bound > 0.0 {
        diameter / (output_bound * root_t)
    } else {
        diameter / root_t
    }
}

/// DQ-PSGD: projected subgradient descent with the dithered gain-shape
/// quantizer (gain range `[0, B]`, shape range `K_u/√N`) and step
/// `D/(B·K_u·√T)` unless `step` is given.
pub fn dq_psgd(
    obj: &HingeSvm,
    frame: &Frame,
    rate: f64,
    domain: &Domain,
    params: &KashinParams,
    gain_bits: u8,
    step: Option<f64>,
    cfg: &PsgdConfig,
) -> Result<RunReport> {
    domain.validate(obj.dim())?;
    let b = obj.subgradient_bound();
    let gain_max = if b > 0.0 { b } else { 1.0 };
    let mut codec = GainShapeCodec::new(frame, rate, gain_max, gain_bits, params, derive_seed(cfg.seed, &[0xD0]))?;
    let step = step.unwrap_or_else(|| default_psgd_step(domain.diameter(), b * params.k_upper, cfg.iterations));
    let mut report = projected_subgradient(obj, domain, Some(&mut codec), step, cfg)?;
    report.method = "dq-psgd".into();
    Ok(report)
}
