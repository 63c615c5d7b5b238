//! Closed-form rates and envelopes used to annotate runs.

/// Worst-case linear rate of unquantized GD at step `2/(L+μ)`: `(L−μ)/(L+μ)`.
pub fn sigma(l: f64, mu: f64) -> f64 {
    (l - mu) / (l + mu)
}

/// `ν = √(1 − α*·L·μ·α)` with `α* = 2/(L+μ)`; equals [`sigma`] at `α = α*`.
pub fn nu(alpha: f64, l: f64, mu: f64) -> f64 {
    let star = 2.0 / (l + mu);
    (1.0 - star * l * mu * alpha).max(0.0).sqrt()
}

/// Minimax lower bound `max{σ, 2^(−R)}` on the rate at `R` bits per dimension.
pub fn thm1_lower(sigma: f64, rate: f64) -> f64 {
    sigma.max((-rate).exp2())
}

/// Tolerance under which `ν` and `β` are treated as equal in [`prop2_bound`].
pub const RATE_TIE_TOL: f64 = 1e-12;

/// Envelope on `‖x̂_T − x*‖₂` for DGD-DEF with a coder of normalized error `β`:
/// `max{ν,β}^T·(1 + βαL/|β−ν|)·D`, or `ν^T·(1 + αLT)·D` when `β = ν`.
pub fn prop2_bound(nu: f64, beta: f64, alpha: f64, l: f64, t: usize, d: f64) -> f64 {
    let t_f = t as f64;
    if (beta - nu).abs() <= RATE_TIE_TOL {
        nu.powf(t_f) * (1.0 + alpha * l * t_f) * d
    } else {
        nu.max(beta).powf(t_f) * (1.0 + beta * alpha * l / (beta - nu).abs()) * d
    }
}

/// Radius `r_t = L·D·Σ_{j=0}^{t} ν^j β^(t−j)` bounding the coder input `‖u_t‖₂`.
pub fn lemma5_radius(l: f64, d: f64, nu: f64, beta: f64, t: usize) -> f64 {
    let sum: f64 = (0..=t).map(|j| nu.powi(j as i32) * beta.powi((t - j) as i32)).sum();
    l * d * sum
}

/// Expected suboptimality envelope `K_u·D·B/√T` for DQ-PSGD.
pub fn prop4_bound(k_upper: f64, d: f64, b: f64, t: usize) -> f64 {
    k_upper * d * b / (t as f64).sqrt()
}
