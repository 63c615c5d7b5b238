//! Worst-case error and covering-efficiency constants for DSC and NDSC.
//!
//! All logarithms are natural.

use serde::Serialize;

use crate::embeddings::EmbeddingMode;
use crate::error::{Error, Result};
use crate::frames::{Frame, FrameKind, KashinParams};

/// Frame-dependent constant entering the error bounds.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum ErrorConstant {
    /// Democratic coding: the upper Kashin constant `K_u`.
    Democratic { k_upper: f64 },
    /// Near-democratic coding with a randomized Hadamard frame: `√ln(2N)`.
    NearDemocraticHadamard { big_n: usize },
    /// Near-democratic coding with a random orthonormal frame: `√(λ ln(2N))`.
    NearDemocraticOrthonormal { big_n: usize },
}

impl ErrorConstant {
    pub fn for_frame(frame: &Frame, mode: EmbeddingMode, params: Option<&KashinParams>) -> Result<Self> {
        Ok(match mode {
            EmbeddingMode::Democratic => ErrorConstant::Democratic {
                k_upper: params.ok_or(Error::MissingParams)?.k_upper,
            },
            EmbeddingMode::NearDemocratic => match frame.kind() {
                FrameKind::RandomizedHadamard | FrameKind::Identity => {
                    ErrorConstant::NearDemocraticHadamard { big_n: frame.big_n() }
                }
                FrameKind::RandomOrthonormal | FrameKind::SubGaussian => {
                    ErrorConstant::NearDemocraticOrthonormal { big_n: frame.big_n() }
                }
            },
        })
    }

    /// `(log₂ of the leading power-of-two factor, multiplier)`.
    fn parts(self, lambda: f64) -> (f64, f64) {
        match self {
            ErrorConstant::Democratic { k_upper } => (1.0, k_upper),
            ErrorConstant::NearDemocraticHadamard { big_n } => (2.0, (2.0 * big_n as f64).ln().sqrt()),
            ErrorConstant::NearDemocraticOrthonormal { big_n } => {
                (2.0, (lambda * (2.0 * big_n as f64).ln()).sqrt())
            }
        }
    }
}

/// Normalized worst-case error `β` of DSC/NDSC at rate `R` and aspect ratio `λ`:
/// `2^(1−R/λ)·K_u` (democratic) or `2^(2−R/λ)·√ln(2N)` (near-democratic,
/// with an extra `λ` under the root for orthonormal frames).
pub fn prop1_bound(rate: f64, lambda: f64, constant: ErrorConstant) -> f64 {
    let (p, c) = constant.parts(lambda);
    (p - rate / lambda).exp2() * c
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct CoveringReport {
    pub rate: f64,
    pub aspect: f64,
    pub k_upper: Option<f64>,
    pub big_n: Option<usize>,
    pub rho: f64,
}

/// Covering efficiency `2^(1+R(1−1/λ))·K_u` (democratic) or
/// `2^(2+R(1−1/λ))·√ln(2N)` (near-democratic).
pub fn covering_efficiency(rate: f64, lambda: f64, constant: ErrorConstant) -> CoveringReport {
    let (p, c) = constant.parts(lambda);
    let rho = (p + rate * (1.0 - 1.0 / lambda)).exp2() * c;
    let (k_upper, big_n) = match constant {
        ErrorConstant::Democratic { k_upper } => (Some(k_upper), None),
        ErrorConstant::NearDemocraticHadamard { big_n } | ErrorConstant::NearDemocraticOrthonormal { big_n } => {
            (None, Some(big_n))
        }
    };
    CoveringReport { rate, aspect: lambda, k_upper, big_n, rho }
}

/// Covering efficiency of the plain uniform scalar quantizer in `n` dimensions.
pub fn scalar_covering_efficiency(n: usize) -> f64 {
    (n as f64).sqrt()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn prop1_values() {
        assert_eq!(prop1_bound(4.0, 1.0, ErrorConstant::Democratic { k_upper: 2.0 }), 0.25);
        let nd = prop1_bound(4.0, 1.0, ErrorConstant::NearDemocraticHadamard { big_n: 128 });
        assert!((nd - 0.25 * 256f64.ln().sqrt()).abs() < 1e-15);
        assert!((nd - 0.588_705).abs() < 1e-6);
        let ortho = prop1_bound(4.0, 1.0, ErrorConstant::NearDemocraticOrthonormal { big_n: 128 });
        assert_eq!(nd, ortho);
        let ortho2 = prop1_bound(4.0, 2.0, ErrorConstant::NearDemocraticOrthonormal { big_n: 128 });
        let had2 = prop1_bound(4.0, 2.0, ErrorConstant::NearDemocraticHadamard { big_n: 128 });
        assert!((ortho2 / had2 - 2f64.sqrt()).abs() < 1e-12);
        assert!(prop1_bound(200.0, 1.0, ErrorConstant::Democratic { k_upper: 2.0 }) < 1e-50);
    }

    #[test]
    fn covering_values() {
        for r in [0.5, 1.0, 7.0] {
            let rep = covering_efficiency(r, 1.0, ErrorConstant::Democratic { k_upper: 2.0 });
            assert_eq!(rep.rho, 4.0);
            assert_eq!(rep.k_upper, Some(2.0));
        }
        let nd = covering_efficiency(3.0, 1.0, ErrorConstant::NearDemocraticHadamard { big_n: 8 });
        assert!((nd.rho - 4.0 * 16f64.ln().sqrt()).abs() < 1e-12);
        assert!((nd.rho - 6.6604).abs() < 1e-3);
        assert_eq!(nd.big_n, Some(8));
        assert_eq!(scalar_covering_efficiency(16), 4.0);
    }
}
