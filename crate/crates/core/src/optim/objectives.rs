//! Objectives, oracles and feasible sets.

use nalgebra::{DMatrix, DVector};
use rand::RngCore;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{dot, l2_norm};
use crate::lp::{self, SimplexOptions, StandardLp};
use crate::rng::{self, index_below};

/// `f(x) = ½‖Ax − b‖₂² + (μ_r/2)‖x‖₂²`.
#[derive(Debug, Clone)]
pub struct SmoothObjective {
    a: DMatrix<f64>,
    b: DVector<f64>,
    reg: f64,
    hessian: DMatrix<f64>,
    atb: DVector<f64>,
    smoothness: f64,
    strong_convexity: f64,
    minimizer: Vec<f64>,
}

impl SmoothObjective {
    pub fn least_squares(a: DMatrix<f64>, b: Vec<f64>) -> Result<Self> {
        Self::ridge(a, b, 0.0)
    }

    pub fn ridge(a: DMatrix<f64>, b: Vec<f64>, reg: f64) -> Result<Self> {
        if a.nrows() != b.len() || a.ncols() == 0 {
            return Err(Error::InvalidObjective(format!(
                "A is {}x{} but b has {} entries",
                a.nrows(),
                a.ncols(),
                b.len()
            )));
        }
        if !(reg >= 0.0) || !reg.is_finite() || a.iter().chain(&b).any(|v| !v.is_finite()) {
            return Err(Error::InvalidObjective("non-finite data or negative regularization".into()));
        }
        let n = a.ncols();
        let b = DVector::from_vec(b);
        let hessian = a.transpose() * &a + DMatrix::identity(n, n) * reg;
        let atb = a.transpose() * &b;
        let eig = hessian.clone().symmetric_eigen();
        let smoothness = eig.eigenvalues.max();
        let strong_convexity = eig.eigenvalues.min().max(0.0);
        let minimizer = if strong_convexity > 1e-12 * smoothness {
            hessian
                .clone()
                .cholesky()
                .ok_or_else(|| Error::InvalidObjective("Hessian is not positive definite".into()))?
                .solve(&atb)
        } else {
            hessian
                .clone()
                .pseudo_inverse(1e-12 * smoothness.max(1e-300))
                .map_err(|e| Error::InvalidObjective(e.into()))?
                * &atb
        };
        Ok(SmoothObjective {
            a,
            b,
            reg,
            hessian,
            atb,
            smoothness,
            strong_convexity,
            minimizer: minimizer.as_slice().to_vec(),
        })
    }

    pub fn dim(&self) -> usize {
        self.a.ncols()
    }

    pub fn matrix(&self) -> &DMatrix<f64> {
        &self.a
    }

    pub fn regularization(&self) -> f64 {
        self.reg
    }

    /// `L = λ_max(AᵀA) + μ_r`.
    pub fn smoothness(&self) -> f64 {
        self.smoothness
    }

    /// `μ = λ_min(AᵀA) + μ_r`.
    pub fn strong_convexity(&self) -> f64 {
        self.strong_convexity
    }

    pub fn minimizer(&self) -> &[f64] {
        &self.minimizer
    }

    pub fn value(&self, x: &[f64]) -> f64 {
        let x = DVector::from_column_slice(x);
        let r = &self.a * &x - &self.b;
        0.5 * r.norm_squared() + 0.5 * self.reg * x.norm_squared()
    }

    pub fn gradient(&self, x: &[f64]) -> Vec<f64> {
        let g = &self.hessian * DVector::from_column_slice(x) - &self.atb;
        g.as_slice().to_vec()
    }

    /// Largest step `2/(L + μ)` covered by the linear-rate analysis.
    pub fn max_step(&self) -> f64 {
        2.0 / (self.smoothness + self.strong_convexity)
    }
}

/// Random least-squares instance with `m×n` design and standard normal `b`.
/// With `heavy_tailed` the entries of `A` are cubes of standard normals.
pub fn random_least_squares(m: usize, n: usize, heavy_tailed: bool, seed: u64) -> Result<SmoothObjective> {
    let mut r = rng::seeded(seed);
    let entries = if heavy_tailed { rng::gaussian_cubed(&mut r, m * n) } else { rng::normal_vec(&mut r, m * n) };
    let a = DMatrix::from_vec(m, n, entries);
    let b = rng::normal_vec(&mut r, m);
    SmoothObjective::least_squares(a, b)
}

/// Average hinge loss `f(x) = (1/m) Σ max(0, 1 − b_i a_iᵀx)`.
#[derive(Debug, Clone)]
pub struct HingeSvm {
    points: DMatrix<f64>,
    labels: Vec<f64>,
    bound: f64,
}

impl HingeSvm {
    /// `points` holds one sample per row; labels must be ±1.
    pub fn new(points: DMatrix<f64>, labels: Vec<f64>) -> Result<Self> {
        if points.nrows() != labels.len() || points.nrows() == 0 || points.ncols() == 0 {
            return Err(Error::InvalidObjective(format!(
                "{} samples but {} labels",
                points.nrows(),
                labels.len()
            )));
        }
        if labels.iter().any(|&l| l != 1.0 && l != -1.0) {
            return Err(Error::InvalidObjective("labels must be +1 or -1".into()));
        }
        if points.iter().any(|v| !v.is_finite()) {
            return Err(Error::InvalidObjective("non-finite sample".into()));
        }
        let bound = points.row_iter().map(|r| r.norm()).fold(0.0, f64::max);
        Ok(HingeSvm { points, labels, bound })
    }

    pub fn dim(&self) -> usize {
        self.points.ncols()
    }

    pub fn samples(&self) -> usize {
        self.points.nrows()
    }

    pub fn points(&self) -> &DMatrix<f64> {
        &self.points
    }

    pub fn labels(&self) -> &[f64] {
        &self.labels
    }

    /// `B = max_i ‖a_i‖₂`, a bound on every (sub)gradient the oracles return.
    pub fn subgradient_bound(&self) -> f64 {
        self.bound
    }

    fn margin(&self, i: usize, x: &[f64]) -> f64 {
        self.labels[i] * self.points.row(i).iter().zip(x).map(|(a, b)| a * b).sum::<f64>()
    }

    pub fn value(&self, x: &[f64]) -> f64 {
        let m = self.samples();
        (0..m).map(|i| (1.0 - self.margin(i, x)).max(0.0)).sum::<f64>() / m as f64
    }

    /// Per-sample subgradient: `−b_i a_i` where the hinge is active, and `0`
    /// on the flat side and exactly at the kink.
    pub fn sample_subgradient(&self, i: usize, x: &[f64], out: &mut [f64]) {
        if 1.0 - self.margin(i, x) > 0.0 {
            for (o, a) in out.iter_mut().zip(self.points.row(i).iter()) {
                *o -= self.labels[i] * a;
            }
        }
    }

    pub fn subgradient(&self, x: &[f64]) -> Vec<f64> {
        let m = self.samples();
        let mut g = vec![0.0; self.dim()];
        for i in 0..m {
            self.sample_subgradient(i, x, &mut g);
        }
        g.iter_mut().for_each(|v| *v /= m as f64);
        g
    }

    /// Mean of `batch` per-sample subgradients drawn uniformly with replacement.
    pub fn stochastic_subgradient<R: RngCore + ?Sized>(&self, x: &[f64], batch: usize, rng: &mut R) -> Vec<f64> {
        let mut g = vec![0.0; self.dim()];
        for _ in 0..batch {
            let i = index_below(rng, self.samples());
            self.sample_subgradient(i, x, &mut g);
        }
        g.iter_mut().for_each(|v| *v /= batch as f64);
        g
    }

    /// Fraction of samples with `b_i a_iᵀx ≤ 0`.
    pub fn classification_error(&self, x: &[f64]) -> f64 {
        let m = self.samples();
        (0..m).filter(|&i| self.margin(i, x) <= 0.0).count() as f64 / m as f64
    }

    /// Exact `min f` over the box `[lo, hi]` by linear programming.
    ///
    /// With `x = lo + w`: minimize `(1/m)Σξ_i` subject to
    /// `ξ_i + b_i a_iᵀw − p_i = 1 − b_i a_iᵀlo`, `w + s = hi − lo`, all
    /// variables non-negative.
    pub fn optimal_value_box(&self, lo: &[f64], hi: &[f64]) -> Result<(f64, Vec<f64>)> {
        let (m, n) = (self.samples(), self.dim());
        Domain::Box { lo: lo.to_vec(), hi: hi.to_vec() }.validate(n)?;
        // Columns: w (n) | s (n) | ξ (m) | p (m).
        let cols = 2 * n + 2 * m;
        let mut a = DMatrix::zeros(n + m, cols);
        let mut b = vec![0.0; n + m];
        let mut c = vec![0.0; cols];
        for j in 0..n {
            a[(j, j)] = 1.0;
            a[(j, n + j)] = 1.0;
            b[j] = hi[j] - lo[j];
        }
        for i in 0..m {
            let row = n + i;
            for j in 0..n {
                a[(row, j)] = self.labels[i] * self.points[(i, j)];
            }
            a[(row, 2 * n + i)] = 1.0;
            a[(row, 2 * n + m + i)] = -1.0;
            b[row] = 1.0 - self.margin(i, lo);
            c[2 * n + i] = 1.0 / m as f64;
        }
        let sol = lp::solve(&StandardLp { a, b, c }, SimplexOptions::default())?;
        let x: Vec<f64> = (0..n).map(|j| (lo[j] + sol.x[j]).clamp(lo[j], hi[j])).collect();
        Ok((self.value(&x), x))
    }
}

/// Closed convex feasible set for projected methods.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum Domain {
    Ball { center: Vec<f64>, radius: f64 },
    Box { lo: Vec<f64>, hi: Vec<f64> },
}

impl Domain {
    pub fn ball(dim: usize, radius: f64) -> Self {
        Domain::Ball { center: vec![0.0; dim], radius }
    }

    pub fn cube(dim: usize, half_width: f64) -> Self {
        Domain::Box { lo: vec![-half_width; dim], hi: vec![half_width; dim] }
    }

    pub fn validate(&self, dim: usize) -> Result<()> {
        match self {
            Domain::Ball { center, radius } => {
                if center.len() != dim {
                    return Err(Error::InvalidDomain(format!("ball center has {} coordinates, expected {dim}", center.len())));
                }
                if !(*radius >= 0.0) || !radius.is_finite() || center.iter().any(|v| !v.is_finite()) {
                    return Err(Error::InvalidDomain(format!("bad ball radius {radius}")));
                }
            }
            Domain::Box { lo, hi } => {
                if lo.len() != dim || hi.len() != dim {
                    return Err(Error::InvalidDomain(format!("box bounds have {}/{} coordinates, expected {dim}", lo.len(), hi.len())));
                }
                if lo.iter().zip(hi).any(|(l, h)| !(l <= h) || !l.is_finite() || !h.is_finite()) {
                    return Err(Error::InvalidDomain("box needs finite lo <= hi".into()));
                }
            }
        }
        Ok(())
    }

    pub fn dim(&self) -> usize {
        match self {
            Domain::Ball { center, .. } => center.len(),
            Domain::Box { lo, .. } => lo.len(),
        }
    }

    /// Euclidean projection.
    pub fn project(&self, x: &[f64]) -> Result<Vec<f64>> {
        self.validate(x.len())?;
        Ok(match self {
            Domain::Ball { center, radius } => {
                let d: Vec<f64> = x.iter().zip(center).map(|(a, c)| a - c).collect();
                let norm = l2_norm(&d);
                if norm <= *radius {
                    x.to_vec()
                } else {
                    center.iter().zip(&d).map(|(c, v)| c + v * (radius / norm)).collect()
                }
            }
            Domain::Box { lo, hi } => x.iter().zip(lo.iter().zip(hi)).map(|(v, (l, h))| v.clamp(*l, *h)).collect(),
        })
    }

    pub fn diameter(&self) -> f64 {
        match self {
            Domain::Ball { radius, .. } => 2.0 * radius,
            Domain::Box { lo, hi } => {
                let d: Vec<f64> = lo.iter().zip(hi).map(|(l, h)| h - l).collect();
                dot(&d, &d).sqrt()
            }
        }
    }

    pub fn center(&self) -> Vec<f64> {
        match self {
            Domain::Ball { center, .. } => center.clone(),
            Domain::Box { lo, hi } => lo.iter().zip(hi).map(|(l, h)| 0.5 * (l + h)).collect(),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::distance;

    #[test]
    fn least_squares_minimizer_has_zero_gradient() {
        let obj = random_least_squares(40, 16, false, 3).unwrap();
        assert!(l2_norm(&obj.gradient(obj.minimizer())) < 1e-8);
        assert!(obj.smoothness() >= obj.strong_convexity() && obj.strong_convexity() > 0.0);
        let x = vec![0.1; 16];
        let g = obj.gradient(&x);
        // Directional derivative against a central difference.
        let h = 1e-6;
        let xp: Vec<f64> = x.iter().map(|v| v + h).collect();
        let xm: Vec<f64> = x.iter().map(|v| v - h).collect();
        let fd = (obj.value(&xp) - obj.value(&xm)) / (2.0 * h);
        assert!((fd - g.iter().sum::<f64>()).abs() < 1e-4 * fd.abs().max(1.0));
    }

    #[test]
    fn ridge_shifts_spectrum() {
        let a = DMatrix::from_row_slice(2, 2, &[2.0, 0.0, 0.0, 1.0]);
        let obj = SmoothObjective::ridge(a, vec![2.0, 1.0], 0.5).unwrap();
        assert!((obj.smoothness() - 4.5).abs() < 1e-12);
        assert!((obj.strong_convexity() - 1.5).abs() < 1e-12);
        // (AᵀA + 0.5 I) x = Aᵀb = (4, 1) → x = (4/4.5, 1/1.5).
        assert!(distance(obj.minimizer(), &[4.0 / 4.5, 1.0 / 1.5]) < 1e-12);
    }

    #[test]
    fn rank_deficient_least_squares_has_mu_zero() {
        let a = DMatrix::from_row_slice(1, 2, &[1.0, 1.0]);
        let obj = SmoothObjective::least_squares(a, vec![2.0]).unwrap();
        assert_eq!(obj.strong_convexity(), 0.0);
        assert!(distance(obj.minimizer(), &[1.0, 1.0]) < 1e-9);
        assert!(SmoothObjective::least_squares(DMatrix::zeros(2, 2), vec![1.0]).is_err());
    }

    fn toy_svm() -> HingeSvm {
        let pts = DMatrix::from_row_slice(3, 2, &[1.0, 0.0, 0.0, 2.0, -1.0, -1.0]);
        HingeSvm::new(pts, vec![1.0, 1.0, -1.0]).unwrap()
    }

    #[test]
    fn hinge_values_and_subgradients() {
        let svm = toy_svm();
        assert_eq!(svm.value(&[0.0, 0.0]), 1.0);
        assert_eq!(svm.subgradient(&[0.0, 0.0]), vec![-2.0 / 3.0, -1.0]);
        // x = (1, 0): sample 0 sits exactly on the kink and contributes 0.
        let g = svm.subgradient(&[1.0, 0.0]);
        assert_eq!(g, vec![0.0, -2.0 / 3.0]);
        assert_eq!(svm.subgradient_bound(), 2.0);
        assert_eq!(svm.classification_error(&[0.0, 0.0]), 1.0);
        assert_eq!(svm.classification_error(&[1.0, 1.0]), 0.0);
        assert!(HingeSvm::new(DMatrix::zeros(1, 1), vec![0.5]).is_err());
    }

    #[test]
    fn full_batch_mean_equals_subgradient() {
        let svm = toy_svm();
        let x = [0.3, -0.2];
        let mut mean = vec![0.0; 2];
        for i in 0..3 {
            svm.sample_subgradient(i, &x, &mut mean);
        }
        mean.iter_mut().for_each(|v| *v /= 3.0);
        assert_eq!(mean, svm.subgradient(&x));
    }

    #[test]
    fn box_optimum_by_lp() {
        let svm = toy_svm();
        let (f, x) = svm.optimal_value_box(&[-2.0, -2.0], &[2.0, 2.0]).unwrap();
        // Separable with margin: x = (1, 0.5) gives zero loss.
        assert!(f.abs() < 1e-9, "{f} at {x:?}");
        let (f, x) = svm.optimal_value_box(&[0.0, 0.0], &[0.25, 0.25]).unwrap();
        // Optimum at the upper corner: losses 0.75, 0.5, 0.5.
        assert!((f - 1.75 / 3.0).abs() < 1e-9, "{f} at {x:?}");
    }

    #[test]
    fn projections() {
        let ball = Domain::ball(2, 1.0);
        assert!(distance(&ball.project(&[3.0, 4.0]).unwrap(), &[0.6, 0.8]) < 1e-15);
        assert_eq!(ball.project(&[0.3, 0.4]).unwrap(), vec![0.3, 0.4]);
        assert_eq!(ball.diameter(), 2.0);
        let bx = Domain::Box { lo: vec![0.0; 3], hi: vec![1.0; 3] };
        assert_eq!(bx.project(&[-1.0, 0.5, 2.0]).unwrap(), vec![0.0, 0.5, 1.0]);
        assert!((bx.diameter() - 3f64.sqrt()).abs() < 1e-15);
        assert!(matches!(bx.project(&[1.0]), Err(Error::InvalidDomain(_))));
        let bad = Domain::Box { lo: vec![1.0], hi: vec![0.0] };
        assert!(bad.validate(1).is_err());
        assert!(Domain::Ball { center: vec![0.0], radius: -1.0 }.validate(1).is_err());
    }
}
