//! Parameter bookkeeping: the exponents of the source and target Morrey
//! spaces, the derived scaling exponents σ_j and σ, and admissibility checks.

use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

const HOLDER_TOL: f64 = 1e-12;
const SHARPNESS_TOL: f64 = 1e-12;

/// Exponents of an m-linear estimate
/// `∏ L^{q_j,λ_j}(|x|^α, |x|^{q_j γ_j / q}) → L^{q,λ}(|x|^α, |x|^γ)` on ℍⁿ.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ParamSet {
    pub m: usize,
    pub n: usize,
    pub q: f64,
    pub q_list: Vec<f64>,
    pub lambda: f64,
    pub lambda_list: Vec<f64>,
    pub gamma_list: Vec<f64>,
    pub alpha: f64,
}

/// Scaling exponents. `sigma_list[j]` is the power of the j-th extremizer,
/// `sigma` the power of the output; both kernels are integrable exactly when
/// `Σ σ_j < 0` and `Q + σ_j > 0`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ExponentSet {
    pub q_dim: usize,
    pub sigma_list: Vec<f64>,
    pub sigma: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub enum Violation {
    ZeroLinearity,
    ZeroDimension,
    LengthMismatch { field: &'static str, expected: usize, found: usize },
    NonFinite { field: &'static str },
    TargetExponentBelowOne { q: f64 },
    SourceExponentNotAboveOne { j: usize, q_j: f64 },
    HolderRelation { inv_q: f64, sum_inv_qj: f64 },
    LambdaNotNegative { lambda: f64 },
    LambdaBelowRange { lambda: f64, min: f64 },
    LambdaJOutOfRange { j: usize, lambda_j: f64, min: f64 },
    LambdaJNotInterior { j: usize, lambda_j: f64 },
    SharpnessRelation { j: usize, q_lambda: f64, qj_lambdaj: f64 },
    AlphaNotAboveMinusQ { alpha: f64, q_dim: usize },
    SigmaNotNegative { sigma: f64 },
    SigmaSumNotNegative { sum: f64 },
    LocalIntegrability { j: usize, q_plus_sigma_j: f64 },
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        use Violation::*;
        match self {
            ZeroLinearity => write!(f, "m must be at least 1"),
            ZeroDimension => write!(f, "n must be at least 1"),
            LengthMismatch { field, expected, found } => {
                write!(f, "{field} must have m = {expected} entries, found {found}")
            }
            NonFinite { field } => write!(f, "{field} must be finite"),
            TargetExponentBelowOne { q } => write!(f, "q must be >= 1 (q = {q})"),
            SourceExponentNotAboveOne { j, q_j } => write!(f, "q_{j} must be > 1 (q_{j} = {q_j})"),
            HolderRelation { inv_q, sum_inv_qj } => {
                write!(f, "1/q = {inv_q} must equal sum 1/q_j = {sum_inv_qj}")
            }
            LambdaNotNegative { lambda } => write!(f, "λ must be negative (λ = {lambda})"),
            LambdaBelowRange { lambda, min } => write!(f, "λ must be >= -1/q = {min} (λ = {lambda})"),
            LambdaJOutOfRange { j, lambda_j, min } => {
                write!(f, "λ_{j} must lie in [{min}, 0) (λ_{j} = {lambda_j})")
            }
            LambdaJNotInterior { j, lambda_j } => {
                write!(f, "λ_{j} must lie strictly inside (-1/q_{j}, 0) for sharpness (λ_{j} = {lambda_j})")
            }
            SharpnessRelation { j, q_lambda, qj_lambdaj } => {
                write!(f, "sharpness needs qλ = q_jλ_j: qλ = {q_lambda}, q_{j}λ_{j} = {qj_lambdaj}")
            }
            AlphaNotAboveMinusQ { alpha, q_dim } => {
                write!(f, "α must be > -Q = -{q_dim} (α = {alpha})")
            }
            SigmaNotNegative { sigma } => write!(f, "σ must be negative (σ = {sigma})"),
            SigmaSumNotNegative { sum } => write!(f, "sum of σ_j must be negative (sum = {sum})"),
            LocalIntegrability { j, q_plus_sigma_j } => {
                write!(f, "Q + σ_{j} must be positive (Q + σ_{j} = {q_plus_sigma_j})")
            }
        }
    }
}

impl ParamSet {
    /// Builds a parameter set satisfying `1/q = Σ 1/q_j` and `qλ = q_jλ_j`.
    pub fn sharp(n: usize, q_list: Vec<f64>, lambda: f64, gamma_list: Vec<f64>, alpha: f64) -> Self {
        let q = 1.0 / q_list.iter().map(|qj| 1.0 / qj).sum::<f64>();
        let lambda_list = q_list.iter().map(|qj| q * lambda / qj).collect();
        Self { m: q_list.len(), n, q, q_list, lambda, lambda_list, gamma_list, alpha }
    }

    pub fn q_dim(&self) -> usize {
        2 * self.n + 2
    }

    pub fn gamma_total(&self) -> f64 {
        self.gamma_list.iter().sum()
    }

    /// σ_j = Qλ_j − γ_j/q + α(λ_j + 1/q_j), σ = Qλ − γ/q + α(λ + 1/q).
    pub fn derive_exponents(&self) -> ExponentSet {
        let qd = self.q_dim() as f64;
        let sigma_list = self
            .lambda_list
            .iter()
            .zip(&self.q_list)
            .zip(&self.gamma_list)
            .map(|((lj, qj), gj)| qd * lj - gj / self.q + self.alpha * (lj + 1.0 / qj))
            .collect();
        let sigma = qd * self.lambda - self.gamma_total() / self.q
            + self.alpha * (self.lambda + 1.0 / self.q);
        ExponentSet { q_dim: self.q_dim(), sigma_list, sigma }
    }

    /// Weight exponent of the j-th source space, `q_j γ_j / q`.
    pub fn source_weight_exponent(&self, j: usize) -> f64 {
        self.q_list[j] * self.gamma_list[j] / self.q
    }

    pub fn violations(&self, strict_sharpness: bool) -> Vec<Violation> {
        use Violation::*;
        let mut v = Vec::new();
        if self.m == 0 {
            v.push(ZeroLinearity);
        }
        if self.n == 0 {
            v.push(ZeroDimension);
        }
        for (field, len) in [
            ("q_list", self.q_list.len()),
            ("lambda_list", self.lambda_list.len()),
            ("gamma_list", self.gamma_list.len()),
        ] {
            if len != self.m {
                v.push(LengthMismatch { field, expected: self.m, found: len });
            }
        }
        let scalars = [("q", self.q), ("lambda", self.lambda), ("alpha", self.alpha)];
        for (field, x) in scalars {
            if !x.is_finite() {
                v.push(NonFinite { field });
            }
        }
        for (field, list) in [
            ("q_list", &self.q_list),
            ("lambda_list", &self.lambda_list),
            ("gamma_list", &self.gamma_list),
        ] {
            if list.iter().any(|x| !x.is_finite()) {
                v.push(NonFinite { field });
            }
        }
        if !v.is_empty() {
            return v;
        }

        let qd = self.q_dim();
        if self.q < 1.0 {
            v.push(TargetExponentBelowOne { q: self.q });
        }
        for (j, &qj) in self.q_list.iter().enumerate() {
            if qj <= 1.0 {
                v.push(SourceExponentNotAboveOne { j: j + 1, q_j: qj });
            }
        }
        let inv_q = 1.0 / self.q;
        let sum_inv: f64 = self.q_list.iter().map(|qj| 1.0 / qj).sum();
        if (inv_q - sum_inv).abs() > HOLDER_TOL {
            v.push(HolderRelation { inv_q, sum_inv_qj: sum_inv });
        }
        if self.lambda >= 0.0 {
            v.push(LambdaNotNegative { lambda: self.lambda });
        } else if self.lambda < -inv_q {
            v.push(LambdaBelowRange { lambda: self.lambda, min: -inv_q });
        }
        for (j, (&lj, &qj)) in self.lambda_list.iter().zip(&self.q_list).enumerate() {
            let min = -1.0 / qj;
            if !(lj >= min && lj < 0.0) {
                v.push(LambdaJOutOfRange { j: j + 1, lambda_j: lj, min });
            } else if strict_sharpness && lj <= min {
                v.push(LambdaJNotInterior { j: j + 1, lambda_j: lj });
            }
            if strict_sharpness {
                let (a, b) = (self.q * self.lambda, qj * lj);
                if (a - b).abs() > SHARPNESS_TOL * (1.0 + a.abs()) {
                    v.push(SharpnessRelation { j: j + 1, q_lambda: a, qj_lambdaj: b });
                }
            }
        }
        if self.alpha <= -(qd as f64) {
            v.push(AlphaNotAboveMinusQ { alpha: self.alpha, q_dim: qd });
        }
        let e = self.derive_exponents();
        v.extend(e.violations());
        v
    }

    pub fn validate(&self, strict_sharpness: bool) -> Result<()> {
        let v = self.violations(strict_sharpness);
        if v.is_empty() {
            Ok(())
        } else {
            Err(Error::Validation(v))
        }
    }
}

impl ExponentSet {
    /// Exponents given directly; `sigma` is set to `Σ σ_j`.
    pub fn from_sigmas(q_dim: usize, sigma_list: Vec<f64>) -> Self {
        let sigma = sigma_list.iter().sum();
        Self { q_dim, sigma_list, sigma }
    }

    pub fn m(&self) -> usize {
        self.sigma_list.len()
    }

    pub fn q(&self) -> f64 {
        self.q_dim as f64
    }

    pub fn sigma_sum(&self) -> f64 {
        self.sigma_list.iter().sum()
    }

    pub fn violations(&self) -> Vec<Violation> {
        let mut v = Vec::new();
        if self.sigma >= 0.0 {
            v.push(Violation::SigmaNotNegative { sigma: self.sigma });
        }
        let sum = self.sigma_sum();
        // only reported separately when it disagrees with σ
        if sum >= 0.0 && self.sigma < 0.0 {
            v.push(Violation::SigmaSumNotNegative { sum });
        }
        for (j, s) in self.sigma_list.iter().enumerate() {
            let a = self.q() + s;
            if a <= 0.0 {
                v.push(Violation::LocalIntegrability { j: j + 1, q_plus_sigma_j: a });
            }
        }
        v
    }

    pub fn is_admissible(&self) -> bool {
        self.violations().is_empty()
    }

    pub fn check_admissible(&self) -> Result<()> {
        let v = self.violations();
        if v.is_empty() {
            Ok(())
        } else {
            Err(Error::Domain(
                v.iter().map(|x| x.to_string()).collect::<Vec<_>>().join("; "),
            ))
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn close(a: f64, b: f64) -> bool {
        (a - b).abs() < 1e-12
    }

    #[test]
    fn exponent_examples() {
        let p = ParamSet::sharp(1, vec![2.0], -0.5, vec![0.0], 0.0);
        let e = p.derive_exponents();
        assert!(close(e.sigma_list[0], -2.0) && close(e.sigma, -2.0));

        let p = ParamSet::sharp(1, vec![2.0], -0.25, vec![0.0], 0.0);
        let e = p.derive_exponents();
        assert!(close(e.sigma_list[0], -1.0) && close(e.sigma, -1.0));

        let p = ParamSet::sharp(1, vec![4.0, 4.0], -0.25, vec![0.0, 0.0], 0.0);
        assert!(close(p.q, 2.0));
        assert!(close(p.lambda_list[0], -0.125));
        let e = p.derive_exponents();
        assert!(close(e.sigma_list[0], -0.5) && close(e.sigma_list[1], -0.5));
        assert!(close(e.sigma, -1.0) && close(e.sigma_sum(), e.sigma));
        assert!(p.validate(true).is_ok());
    }

    #[test]
    fn rejects_zero_lambda() {
        let mut p = ParamSet::sharp(1, vec![2.0], -0.25, vec![0.0], 0.0);
        p.lambda = 0.0;
        let v = p.violations(false);
        assert!(v.iter().any(|x| matches!(x, Violation::LambdaNotNegative { .. })));
        assert!(v[0].to_string().contains("λ must be negative"));
    }

    #[test]
    fn rejects_alpha_at_minus_q() {
        let p = ParamSet::sharp(1, vec![2.0], -0.25, vec![0.0], -4.0);
        let v = p.violations(false);
        assert!(v.iter().any(|x| matches!(x, Violation::AlphaNotAboveMinusQ { .. })));
    }

    #[test]
    fn structural_problems_do_not_panic() {
        let p = ParamSet {
            m: 2,
            n: 1,
            q: 2.0,
            q_list: vec![4.0],
            lambda: -0.25,
            lambda_list: vec![],
            gamma_list: vec![0.0, f64::NAN],
            alpha: 0.0,
        };
        let v = p.violations(true);
        assert!(v.len() >= 3);
    }

    #[test]
    fn strict_sharpness_checks_relation() {
        let mut p = ParamSet::sharp(1, vec![4.0, 4.0], -0.25, vec![0.0, 0.0], 0.0);
        p.lambda_list = vec![-0.1, -0.15];
        assert!(p.validate(false).is_ok());
        let v = p.violations(true);
        assert!(v.iter().any(|x| matches!(x, Violation::SharpnessRelation { j: 1, .. })));
    }

    #[test]
    fn json_round_trip() {
        let p = ParamSet::sharp(2, vec![3.0, 6.0], -0.3, vec![0.2, -0.1], 0.5);
        let s = serde_json::to_string(&p).unwrap();
        assert!(s.contains("\"lambda_list\""));
        let back: ParamSet = serde_json::from_str(&s).unwrap();
        assert_eq!(back, p);
    }
}
