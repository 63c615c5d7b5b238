//! Parseval frames `S ∈ R^{n×N}` and their Kashin constants.
//!
//! Three random constructions are supported plus the identity baseline:
//!
//! * `RandomOrthonormal`: the orthogonal polar factor `U Vᵀ` of an `N×N`
//!   Gaussian matrix, restricted to `n` uniformly sampled rows.
//! * `RandomizedHadamard`: `S = P D H` with `H` the normalized Sylvester
//!   Hadamard matrix, `D` a random sign diagonal and `P` a row sampler. It is
//!   stored as signs plus row indices and applied with a fast Walsh–Hadamard
//!   transform, never as a dense matrix.
//! * `SubGaussian`: i.i.d. `N(0, 1/N)` entries; only approximately Parseval.
//! * `Identity`: `n = N`, `S = I`.
//!
//! A frame is fully determined by its [`FrameDescriptor`], which is what gets
//! transmitted in payload headers.

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::rng;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FrameKind {
    #[serde(alias = "orthonormal")]
    RandomOrthonormal,
    #[serde(alias = "hadamard")]
    RandomizedHadamard,
    #[serde(alias = "subgaussian")]
    SubGaussian,
    Identity,
}

impl FrameKind {
    pub fn code(self) -> u8 {
        match self {
            FrameKind::RandomOrthonormal => 0,
            FrameKind::RandomizedHadamard => 1,
            FrameKind::SubGaussian => 2,
            FrameKind::Identity => 3,
        }
    }

    pub fn from_code(code: u8) -> Option<Self> {
        Some(match code {
            0 => FrameKind::RandomOrthonormal,
            1 => FrameKind::RandomizedHadamard,
            2 => FrameKind::SubGaussian,
            3 => FrameKind::Identity,
            _ => return None,
        })
    }

    /// Whether `S Sᵀ = I` holds exactly (up to round-off) for this kind.
    pub fn is_exact_parseval(self) -> bool {
        !matches!(self, FrameKind::SubGaussian)
    }

    pub fn name(self) -> &'static str {
        match self {
            FrameKind::RandomOrthonormal => "orthonormal",
            FrameKind::RandomizedHadamard => "hadamard",
            FrameKind::SubGaussian => "subgaussian",
            FrameKind::Identity => "identity",
        }
    }
}

impl std::str::FromStr for FrameKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "orthonormal" | "random_orthonormal" | "ortho" => Ok(FrameKind::RandomOrthonormal),
            "hadamard" | "randomized_hadamard" => Ok(FrameKind::RandomizedHadamard),
            "subgaussian" | "sub_gaussian" | "gaussian" => Ok(FrameKind::SubGaussian),
            "identity" | "none" => Ok(FrameKind::Identity),
            other => Err(Error::Parse(format!("unknown frame kind `{other}`"))),
        }
    }
}

/// Everything needed to rebuild a frame bit-for-bit.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct FrameDescriptor {
    pub kind: FrameKind,
    pub n: usize,
    #[serde(rename = "N")]
    pub big_n: usize,
    pub seed: u64,
}

impl FrameDescriptor {
    pub fn build(&self) -> Result<Frame> {
        Frame::build(self.kind, self.n, self.big_n, self.seed)
    }
}

#[derive(Debug, Clone)]
enum Repr {
    Dense(DMatrix<f64>),
    Hadamard { signs: Vec<f64>, rows: Vec<usize> },
    Identity,
}

/// An immutable `n×N` analysis operator.
#[derive(Debug, Clone)]
pub struct Frame {
    desc: FrameDescriptor,
    repr: Repr,
}

impl Frame {
    pub fn build(kind: FrameKind, n: usize, big_n: usize, seed: u64) -> Result<Frame> {
        if n == 0 || big_n < n {
            return Err(Error::InvalidDimensions(format!(
                "need 1 <= n <= N, got n={n}, N={big_n}"
            )));
        }
        let desc = FrameDescriptor { kind, n, big_n, seed };
        let mut rng = rng::seeded(seed);
        let repr = match kind {
            FrameKind::Identity => {
                if n != big_n {
                    return Err(Error::InvalidDimensions(format!(
                        "identity frame needs n = N, got n={n}, N={big_n}"
                    )));
                }
                Repr::Identity
            }
            FrameKind::RandomizedHadamard => {
                if !big_n.is_power_of_two() {
                    return Err(Error::InvalidDimensions(format!(
                        "Hadamard frame needs N a power of two, got {big_n}"
                    )));
                }
                let signs = (0..big_n).map(|_| rng::rademacher(&mut rng)).collect();
                let rows = rng::sample_without_replacement(&mut rng, big_n, n);
                Repr::Hadamard { signs, rows }
            }
            FrameKind::RandomOrthonormal => {
                let gauss = DMatrix::from_vec(big_n, big_n, rng::normal_vec(&mut rng, big_n * big_n));
                let svd = gauss.svd(true, true);
                let (u, v_t) = match (svd.u, svd.v_t) {
                    (Some(u), Some(v_t)) => (u, v_t),
                    _ => return Err(Error::SolverFailure("SVD did not converge".into())),
                };
                let orth = u * v_t;
                let rows = rng::sample_without_replacement(&mut rng, big_n, n);
                Repr::Dense(orth.select_rows(rows.iter()))
            }
            FrameKind::SubGaussian => {
                let scale = 1.0 / (big_n as f64).sqrt();
                let data: Vec<f64> = rng::normal_vec(&mut rng, n * big_n)
                    .into_iter()
                    .map(|v| v * scale)
                    .collect();
                Repr::Dense(DMatrix::from_vec(n, big_n, data))
            }
        };
        Ok(Frame { desc, repr })
    }

    /// Randomized Hadamard frame from explicit signs and sampled rows.
    pub fn hadamard_from_parts(signs: Vec<f64>, mut rows: Vec<usize>) -> Result<Frame> {
        let big_n = signs.len();
        if !big_n.is_power_of_two() {
            return Err(Error::InvalidDimensions(format!("N={big_n} is not a power of two")));
        }
        if signs.iter().any(|s| s.abs() != 1.0) {
            return Err(Error::InvalidDimensions("signs must be +-1".into()));
        }
        rows.sort_unstable();
        rows.dedup();
        if rows.is_empty() || rows.iter().any(|&r| r >= big_n) {
            return Err(Error::InvalidDimensions("row indices out of range".into()));
        }
        let desc = FrameDescriptor {
            kind: FrameKind::RandomizedHadamard,
            n: rows.len(),
            big_n,
            seed: 0,
        };
        Ok(Frame { desc, repr: Repr::Hadamard { signs, rows } })
    }

    /// A dense frame from an explicit matrix. The descriptor records the
    /// kind given, but the frame cannot be rebuilt from it.
    pub fn from_matrix(kind: FrameKind, matrix: DMatrix<f64>) -> Result<Frame> {
        let (n, big_n) = matrix.shape();
        if n == 0 || big_n < n {
            return Err(Error::InvalidDimensions(format!("matrix is {n}x{big_n}")));
        }
        let desc = FrameDescriptor { kind, n, big_n, seed: 0 };
        Ok(Frame { desc, repr: Repr::Dense(matrix) })
    }

    pub fn descriptor(&self) -> FrameDescriptor {
        self.desc
    }
    pub fn kind(&self) -> FrameKind {
        self.desc.kind
    }
    pub fn n(&self) -> usize {
        self.desc.n
    }
    pub fn big_n(&self) -> usize {
        self.desc.big_n
    }
    pub fn seed(&self) -> u64 {
        self.desc.seed
    }
    pub fn aspect_ratio(&self) -> f64 {
        self.desc.big_n as f64 / self.desc.n as f64
    }
    pub fn is_exact_parseval(&self) -> bool {
        self.desc.kind.is_exact_parseval()
    }

    /// `S x` for `x ∈ R^N`.
    pub fn apply(&self, x: &[f64]) -> Result<Vec<f64>> {
        check_len(self.big_n(), x.len())?;
        Ok(match &self.repr {
            Repr::Identity => x.to_vec(),
            Repr::Dense(m) => dense_mul(m, x),
            Repr::Hadamard { signs, rows } => {
                // S x = P D H x
                let mut buf = x.to_vec();
                fwht_normalized(&mut buf);
                rows.iter().map(|&r| signs[r] * buf[r]).collect()
            }
        })
    }

    /// `Sᵀ y` for `y ∈ R^n`.
    pub fn apply_adjoint(&self, y: &[f64]) -> Result<Vec<f64>> {
        check_len(self.n(), y.len())?;
        Ok(match &self.repr {
            Repr::Identity => y.to_vec(),
            Repr::Dense(m) => dense_mul_transpose(m, y),
            Repr::Hadamard { signs, rows } => {
                // Sᵀ y = H D Pᵀ y
                let mut buf = vec![0.0; self.big_n()];
                for (&r, &v) in rows.iter().zip(y) {
                    buf[r] = signs[r] * v;
                }
                fwht_normalized(&mut buf);
                buf
            }
        })
    }

    /// Materialize `S` as a dense matrix. Used by the LP solver and tests.
    pub fn to_dense(&self) -> DMatrix<f64> {
        match &self.repr {
            Repr::Identity => DMatrix::identity(self.n(), self.n()),
            Repr::Dense(m) => m.clone(),
            Repr::Hadamard { signs, rows } => {
                let big_n = self.big_n();
                let scale = 1.0 / (big_n as f64).sqrt();
                DMatrix::from_fn(rows.len(), big_n, |i, j| {
                    let r = rows[i];
                    let parity = (r & j).count_ones() & 1;
                    let h = if parity == 0 { scale } else { -scale };
                    signs[r] * h
                })
            }
        }
    }

    /// `max |S Sᵀ − I|`.
    pub fn parseval_defect(&self) -> f64 {
        let s = self.to_dense();
        let gram = &s * s.transpose();
        let n = self.n();
        let mut worst = 0.0f64;
        for i in 0..n {
            for j in 0..n {
                let target = if i == j { 1.0 } else { 0.0 };
                worst = worst.max((gram[(i, j)] - target).abs());
            }
        }
        worst
    }
}

fn check_len(expected: usize, got: usize) -> Result<()> {
    if expected != got {
        return Err(Error::DimensionMismatch { expected, got });
    }
    Ok(())
}

fn dense_mul(m: &DMatrix<f64>, x: &[f64]) -> Vec<f64> {
    let (rows, cols) = m.shape();
    let mut out = vec![0.0; rows];
    // Column-major storage: accumulate column by column.
    for j in 0..cols {
        let xj = x[j];
        if xj == 0.0 {
            continue;
        }
        let col = m.column(j);
        for (o, &a) in out.iter_mut().zip(col.iter()) {
            *o += a * xj;
        }
    }
    out
}

fn dense_mul_transpose(m: &DMatrix<f64>, y: &[f64]) -> Vec<f64> {
    (0..m.ncols())
        .map(|j| m.column(j).iter().zip(y).map(|(a, b)| a * b).sum())
        .collect()
}

/// In-place unnormalized fast Walsh–Hadamard transform (Sylvester ordering).
/// `data.len()` must be a power of two.
pub fn fwht(data: &mut [f64]) {
    let n = data.len();
    debug_assert!(n.is_power_of_two());
    let mut half = 1;
    while half < n {
        for block in data.chunks_exact_mut(2 * half) {
            let (lo, hi) = block.split_at_mut(half);
            for (a, b) in lo.iter_mut().zip(hi.iter_mut()) {
                let (s, d) = (*a + *b, *a - *b);
                *a = s;
                *b = d;
            }
        }
        half *= 2;
    }
}

/// Orthonormal Walsh–Hadamard transform: `fwht` scaled by `1/√N`.
pub fn fwht_normalized(data: &mut [f64]) {
    fwht(data);
    let scale = 1.0 / (data.len() as f64).sqrt();
    for v in data.iter_mut() {
        *v *= scale;
    }
}

/// Lower/upper Kashin constants together with the uncertainty-principle
/// parameters they were derived from.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct KashinParams {
    pub eta: f64,
    pub delta: f64,
    pub frame_lower: f64,
    pub frame_upper: f64,
    pub k_upper: f64,
    pub k_lower: f64,
}

/// `K_l = 1/√B`, `K_u = η / ((A − η√B)·√δ)`.
pub fn kashin_constants(eta: f64, delta: f64, lower: f64, upper: f64) -> Result<KashinParams> {
    if !(eta > 0.0) || !eta.is_finite() {
        return Err(Error::InvalidUp(format!("eta must be positive, got {eta}")));
    }
    if !(delta > 0.0 && delta < 1.0) {
        return Err(Error::InvalidDelta(format!("delta must lie in (0, 1), got {delta}")));
    }
    if !(lower > 0.0 && lower <= upper && upper.is_finite()) {
        return Err(Error::InvalidUp(format!("frame bounds need 0 < A <= B, got A={lower}, B={upper}")));
    }
    let gap = lower - eta * upper.sqrt();
    if !(gap > 0.0) {
        return Err(Error::InvalidUp(format!("A={lower}, eta*sqrt(B)={}", eta * upper.sqrt())));
    }
    Ok(KashinParams {
        eta,
        delta,
        frame_lower: lower,
        frame_upper: upper,
        k_upper: eta / (gap * delta.sqrt()),
        k_lower: 1.0 / upper.sqrt(),
    })
}

/// Monte-Carlo lower estimate of the UP parameter `η`: the largest `‖S x‖₂`
/// over `trials` random unit vectors with `⌊δN⌋` non-zeros.
pub fn estimate_up_eta(frame: &Frame, delta: f64, trials: usize, seed: u64) -> Result<f64> {
    let big_n = frame.big_n();
    let support = (delta * big_n as f64).floor() as usize;
    if !(delta > 0.0 && delta < 1.0) || support < 1 {
        return Err(Error::InvalidDelta(format!(
            "delta={delta} with N={big_n} gives {support} non-zeros"
        )));
    }
    if trials == 0 {
        return Err(Error::InvalidDelta("need at least one trial".into()));
    }
    let mut rng = rng::seeded(seed);
    let mut best = 0.0f64;
    let mut x = vec![0.0; big_n];
    for _ in 0..trials {
        x.iter_mut().for_each(|v| *v = 0.0);
        let idx = rng::sample_without_replacement(&mut rng, big_n, support);
        let vals = rng::normal_vec(&mut rng, support);
        let norm = vals.iter().map(|v| v * v).sum::<f64>().sqrt();
        if norm == 0.0 {
            continue;
        }
        for (&i, v) in idx.iter().zip(&vals) {
            x[i] = v / norm;
        }
        let sx = frame.apply(&x)?;
        best = best.max(sx.iter().map(|v| v * v).sum::<f64>().sqrt());
    }
    Ok(best)
}

/// Default Monte-Carlo settings used when no UP parameters are supplied.
pub const DEFAULT_ETA_TRIALS: usize = 200;
pub const DEFAULT_ETA_MARGIN: f64 = 1.1;

/// Kashin constants for a Parseval frame with `δ = 1/(2λ)`, `η` estimated
/// from [`DEFAULT_ETA_TRIALS`] draws and inflated by [`DEFAULT_ETA_MARGIN`].
pub fn default_kashin_params(frame: &Frame, seed: u64) -> Result<KashinParams> {
    let delta = 1.0 / (2.0 * frame.aspect_ratio());
    let eta = estimate_up_eta(frame, delta, DEFAULT_ETA_TRIALS, seed)?;
    kashin_constants(eta * DEFAULT_ETA_MARGIN, delta, 1.0, 1.0)
}

/// [`default_kashin_params`] with the trial seed derived from the frame
/// seed, so a decoder holding only the frame descriptor can recompute them.
/// The trials must not reuse the frame seed itself: the same ChaCha stream
/// would then draw the test vectors in lockstep with the frame entries.
pub fn frame_kashin_params(frame: &Frame) -> Result<KashinParams> {
    default_kashin_params(frame, rng::derive_seed(frame.seed(), &[0xE7A]))
}

/// Redraws allowed by [`kashin_frame`].
pub const MAX_KASHIN_REDRAWS: u64 = 16;

/// A frame whose [`frame_kashin_params`] are valid. Random frames satisfy the
/// uncertainty principle only with high probability; a draw whose estimate
/// fails is replaced by one seeded from `(seed, attempt)`. The first attempt
/// uses `seed` unchanged.
pub fn kashin_frame(kind: FrameKind, n: usize, big_n: usize, seed: u64) -> Result<(Frame, KashinParams)> {
    let mut last = None;
    for attempt in 0..MAX_KASHIN_REDRAWS {
        let s = if attempt == 0 { seed } else { rng::derive_seed(seed, &[attempt]) };
        let frame = Frame::build(kind, n, big_n, s)?;
        match frame_kashin_params(&frame) {
            Ok(p) => return Ok((frame, p)),
            Err(e @ Error::InvalidUp(_)) => last = Some(e),
            Err(e) => return Err(e),
        }
    }
    Err(last.expect("at least one attempt"))
}
