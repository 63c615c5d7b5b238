//! Democratic (ℓ∞-minimal) and near-democratic (ℓ₂-minimal) embeddings.
//!
//! Given a frame `S ∈ R^{n×N}` and `y ∈ R^n`, an embedding is any `x ∈ R^N`
//! with `S x = y`. The democratic embedding minimizes `‖x‖∞` and is found by
//! linear programming (or approximately by truncate-and-project iterations).
//! The near-democratic embedding minimizes `‖x‖₂`, which for a Parseval frame
//! is simply `Sᵀ y`.

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::frames::{estimate_up_eta, kashin_constants, Frame, FrameKind, KashinParams, DEFAULT_ETA_TRIALS};
use crate::lp::{self, SimplexOptions, StandardLp};
use crate::linalg::{inf_norm, l2_norm};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EmbeddingMode {
    Democratic,
    NearDemocratic,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Embedding {
    pub coefficients: Vec<f64>,
    /// `‖coefficients‖∞`.
    pub gain: f64,
    pub source_dim: usize,
    pub mode: EmbeddingMode,
    /// `‖y − S x‖₂` actually achieved.
    pub residual: f64,
}

impl Embedding {
    fn new(frame: &Frame, y: &[f64], coefficients: Vec<f64>, mode: EmbeddingMode) -> Result<Self> {
        let sx = frame.apply(&coefficients)?;
        let residual = l2_norm(&y.iter().zip(&sx).map(|(a, b)| a - b).collect::<Vec<_>>());
        Ok(Embedding {
            gain: inf_norm(&coefficients),
            coefficients,
            source_dim: y.len(),
            mode,
            residual,
        })
    }
}

/// Closed-form ℓ₂-minimal embedding `Sᵀ(SSᵀ)⁻¹y`; `Sᵀy` for Parseval kinds.
pub fn near_democratic(frame: &Frame, y: &[f64]) -> Result<Embedding> {
    if y.len() != frame.n() {
        return Err(Error::DimensionMismatch { expected: frame.n(), got: y.len() });
    }
    let x = if frame.is_exact_parseval() {
        frame.apply_adjoint(y)?
    } else {
        let s = frame.to_dense();
        let gram = &s * s.transpose();
        let chol = gram.cholesky().ok_or(Error::SingularGram)?;
        let w = chol.solve(&DVector::from_column_slice(y));
        frame.apply_adjoint(w.as_slice())?
    };
    Embedding::new(frame, y, x, EmbeddingMode::NearDemocratic)
}

/// Exact democratic embedding: `min t  s.t.  S x = y, −t ≤ x_i ≤ t`.
///
/// Posed in standard form with `x = p − t·1`, `p + s = 2t·1`, `p, s, t ≥ 0`,
/// which leaves the `s` columns as a ready-made partial basis.
pub fn democratic_lp(frame: &Frame, y: &[f64]) -> Result<Embedding> {
    let n = frame.n();
    let big_n = frame.big_n();
    if y.len() != n {
        return Err(Error::DimensionMismatch { expected: n, got: y.len() });
    }
    if y.iter().all(|&v| v == 0.0) {
        return Embedding::new(frame, y, vec![0.0; big_n], EmbeddingMode::Democratic);
    }
    let s = frame.to_dense();
    let rows = n + big_n;
    let cols = 2 * big_n + 1;
    let t_col = 2 * big_n;
    let mut a = DMatrix::zeros(rows, cols);
    for i in 0..n {
        let mut row_sum = 0.0;
        for j in 0..big_n {
            a[(i, j)] = s[(i, j)];
            row_sum += s[(i, j)];
        }
        a[(i, t_col)] = -row_sum;
    }
    for j in 0..big_n {
        let r = n + j;
        a[(r, j)] = 1.0;
        a[(r, big_n + j)] = 1.0;
        a[(r, t_col)] = -2.0;
    }
    let mut b = vec![0.0; rows];
    b[..n].copy_from_slice(y);
    let mut c = vec![0.0; cols];
    c[t_col] = 1.0;
    let sol = lp::solve(&StandardLp { a, b, c }, SimplexOptions::default())?;
    let t = sol.x[t_col];
    let x: Vec<f64> = sol.x[..big_n].iter().map(|p| p - t).collect();
    Embedding::new(frame, y, x, EmbeddingMode::Democratic)
}

/// Slack on the per-step contraction check of [`democratic_iterative`].
pub const CONTRACTION_SLACK: f64 = 0.05;

/// Approximate democratic (Kashin) embedding by truncate-and-project steps.
///
/// Each step takes `u = Sᵀr`, clips every coordinate to magnitude
/// `‖r‖₂/√(δN)`, accumulates the clipped vector into `x` and subtracts its
/// image from the residual. With valid UP parameters the residual shrinks by
/// at least `η` per step.
pub fn democratic_iterative(frame: &Frame, y: &[f64], params: &KashinParams, iters: usize) -> Result<Embedding> {
    if y.len() != frame.n() {
        return Err(Error::DimensionMismatch { expected: frame.n(), got: y.len() });
    }
    if !(params.frame_lower > params.eta * params.frame_upper.sqrt()) {
        return Err(Error::InvalidUp(format!(
            "A={} <= eta*sqrt(B)={}",
            params.frame_lower,
            params.eta * params.frame_upper.sqrt()
        )));
    }
    if iters == 0 {
        return Err(Error::InvalidDimensions("need at least one iteration".into()));
    }
    let big_n = frame.big_n();
    let sparse_count = params.delta * big_n as f64;
    let limit = params.eta + CONTRACTION_SLACK;
    let y_norm = l2_norm(y);
    let mut x = vec![0.0; big_n];
    let mut r = y.to_vec();
    let mut r_norm = y_norm;
    for step in 0..iters {
        if r_norm <= f64::EPSILON * y_norm || r_norm == 0.0 {
            break;
        }
        let level = r_norm / sparse_count.sqrt();
        let u = frame.apply_adjoint(&r)?;
        let clipped: Vec<f64> = u.iter().map(|&v| v.clamp(-level, level)).collect();
        for (xi, ci) in x.iter_mut().zip(&clipped) {
            *xi += ci;
        }
        let image = frame.apply(&clipped)?;
        for (ri, si) in r.iter_mut().zip(&image) {
            *ri -= si;
        }
        let next = l2_norm(&r);
        let ratio = next / r_norm;
        if ratio > limit {
            return Err(Error::NonContracting { step, ratio, limit });
        }
        r_norm = next;
    }
    Embedding::new(frame, y, x, EmbeddingMode::Democratic)
}

/// Sparsity fraction used by [`iterative_params`]. Larger `δ` truncates
/// harder and lands closer to the LP optimum, at a slower residual decay.
pub const ITERATIVE_DELTA: f64 = 0.75;

/// UP parameters for [`democratic_iterative`]: `η` estimated at
/// [`ITERATIVE_DELTA`] with the default trial count, without inflation.
pub fn iterative_params(frame: &Frame, seed: u64) -> Result<KashinParams> {
    let eta = estimate_up_eta(frame, ITERATIVE_DELTA, DEFAULT_ETA_TRIALS, seed)?;
    kashin_constants(eta, ITERATIVE_DELTA, 1.0, 1.0)
}

/// Embed with the solver matching `mode` (the LP for democratic).
pub fn embed(frame: &Frame, y: &[f64], mode: EmbeddingMode) -> Result<Embedding> {
    match mode {
        EmbeddingMode::Democratic => democratic_lp(frame, y),
        EmbeddingMode::NearDemocratic => near_democratic(frame, y),
    }
}

/// Multiplier `c` in `‖x‖∞ ≤ c·‖y‖₂` for the given embedding mode and frame.
///
/// Democratic: `K_u/√N`. Near-democratic: `2√(λ ln(2N)/N)` for random
/// orthonormal (and other dense) frames, `2√(ln(2N)/N)` for randomized
/// Hadamard and identity frames. Logarithms are natural.
pub fn dynamic_range_bound(frame: &Frame, mode: EmbeddingMode, params: Option<&KashinParams>) -> Result<f64> {
    let big_n = frame.big_n() as f64;
    match mode {
        EmbeddingMode::Democratic => {
            let p = params.ok_or(Error::MissingParams)?;
            Ok(p.k_upper / big_n.sqrt())
        }
        EmbeddingMode::NearDemocratic => {
            let log_term = (2.0 * big_n).ln() / big_n;
            Ok(match frame.kind() {
                FrameKind::RandomizedHadamard | FrameKind::Identity => 2.0 * log_term.sqrt(),
                FrameKind::RandomOrthonormal | FrameKind::SubGaussian => {
                    2.0 * (frame.aspect_ratio() * log_term).sqrt()
                }
            })
        }
    }
}
