//! Closed forms of the sharp constants and their reconciliation with the
//! numerical oracles.
//!
//! Convention: with `σ_j`, `σ` as derived in [`crate::params`],
//!
//! `A_m = m Q ω^m / ((−σ) ∏ (Q + σ_i))`,
//! `B_m = Ω^m ∏ Γ(1 + σ_i/Q) · Γ(−σ/Q) / Γ(m)`.
//!
//! Both are positive exactly on the admissible set and agree with direct
//! evaluation of the defining integrals.

use std::f64::consts::PI;
use std::time::Instant;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::hgroup::GroupParams;
use crate::params::ExponentSet;
use crate::quad::oracle::{hilbert_constant_oracle, hlp_constant_oracle};
use crate::quad::QuadratureSpec;
use crate::report::VerificationReport;
use crate::specfun::{beta, log_gamma};
use crate::OperatorKind;

pub const HLP_NOTE: &str = "A_m = mQ w^m / ((-sigma) prod(Q + sigma_i)), sigma_i = Q lambda_i - gamma_i/q + alpha(lambda_i + 1/q_i), \
sigma = sum sigma_i < 0";
pub const HILBERT_NOTE: &str = "B_m = Omega^m prod Gamma(1 + sigma_i/Q) Gamma(-sigma/Q) / Gamma(m), with sigma < 0 and \
Q + sigma_i > 0";

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SharpConstant {
    pub kind: OperatorKind,
    pub value: f64,
    pub convention_note: String,
}

fn check(e: &ExponentSet, gp: &GroupParams) -> Result<()> {
    if e.q_dim != gp.q_dim {
        return Err(Error::InvalidInput(format!("exponents use Q = {} but the group has Q = {}", e.q_dim, gp.q_dim)));
    }
    if e.m() == 0 {
        return Err(Error::InvalidInput("at least one factor is required".into()));
    }
    e.check_admissible()
}

pub fn hlp_closed_form(e: &ExponentSet, gp: &GroupParams) -> Result<SharpConstant> {
    check(e, gp)?;
    let q = gp.q();
    let m = e.m() as f64;
    let log_den = (-e.sigma).ln() + e.sigma_list.iter().map(|s| (q + s).ln()).sum::<f64>();
    let value = ((m * q).ln() + m * gp.sphere_constant.ln() - log_den).exp();
    finite(OperatorKind::Hlp, value, HLP_NOTE)
}

pub fn hilbert_closed_form(e: &ExponentSet, gp: &GroupParams) -> Result<SharpConstant> {
    check(e, gp)?;
    if e.m() >= 170 {
        return Err(Error::Overflow(format!("B_m is not supported for m = {}", e.m())));
    }
    let q = gp.q();
    let m = e.m() as f64;
    let mut log_v = m * gp.ball_volume.ln() + log_gamma(-e.sigma / q)? - log_gamma(m)?;
    for s in &e.sigma_list {
        log_v += log_gamma(1.0 + s / q)?;
    }
    finite(OperatorKind::Hilbert, log_v.exp(), HILBERT_NOTE)
}

fn finite(kind: OperatorKind, value: f64, note: &str) -> Result<SharpConstant> {
    if !value.is_finite() || value <= 0.0 {
        return Err(Error::Overflow(format!("{kind} constant is not representable ({value})")));
    }
    Ok(SharpConstant { kind, value, convention_note: note.into() })
}

pub fn closed_form(kind: OperatorKind, e: &ExponentSet, gp: &GroupParams) -> Result<SharpConstant> {
    match kind {
        OperatorKind::Hlp => hlp_closed_form(e, gp),
        OperatorKind::Hilbert => hilbert_closed_form(e, gp),
    }
}

pub fn oracle(kind: OperatorKind, e: &ExponentSet, gp: &GroupParams, spec: &QuadratureSpec) -> Result<f64> {
    match kind {
        OperatorKind::Hlp => hlp_constant_oracle(e, gp, spec),
        OperatorKind::Hilbert => hilbert_constant_oracle(e, gp, spec),
    }
}

/// `I = ∫ ∏ t_j^{b_j−1} (1 + Σ t_j)^{−s} dt` by peeling one Beta factor per
/// variable: `I = ∏_k B(b_k, s_k − b_k)` with `s_m = s`, `s_{k−1} = s_k − b_k`.
pub fn beta_recursion_im(shapes: &[f64], outer_power: f64) -> Result<f64> {
    let mut s = outer_power;
    let mut v = 1.0;
    for &b in shapes.iter().rev() {
        if !(b > 0.0) || !(s - b > 0.0) {
            return Err(Error::Domain(format!("Beta arguments ({b}, {}) must be positive", s - b)));
        }
        v *= beta(b, s - b)?;
        s -= b;
    }
    Ok(v)
}

/// The same integral as `∏ Γ(b_j) · Γ(s − Σ b_j) / Γ(s)`.
pub fn gamma_product_im(shapes: &[f64], outer_power: f64) -> Result<f64> {
    let rest = outer_power - shapes.iter().sum::<f64>();
    if shapes.iter().any(|b| !(*b > 0.0)) || !(rest > 0.0) {
        return Err(Error::Domain("Gamma arguments must be positive".into()));
    }
    let mut log_v = log_gamma(rest)? - log_gamma(outer_power)?;
    for b in shapes {
        log_v += log_gamma(*b)?;
    }
    Ok(log_v.exp())
}

/// Shapes `b_j = 1 + σ_j/Q` of the Hilbert constant.
pub fn hilbert_shapes(e: &ExponentSet) -> Vec<f64> {
    e.sigma_list.iter().map(|s| 1.0 + s / e.q()).collect()
}

/// One-dimensional norms `q²/(q−1)` and `π / sin(π/q)`.
pub fn classical_anchors(q: f64) -> Result<(f64, f64)> {
    if !(q > 1.0) || !q.is_finite() {
        return Err(Error::Domain(format!("classical anchors need q > 1, got {q}")));
    }
    Ok((q * q / (q - 1.0), PI / (PI / q).sin()))
}

/// Closed form against its oracle.
pub fn reconcile(kind: OperatorKind, e: &ExponentSet, gp: &GroupParams, spec: &QuadratureSpec, tolerance: f64) -> Result<VerificationReport> {
    let start = Instant::now();
    let c = closed_form(kind, e, gp)?;
    let o = oracle(kind, e, gp, spec)?;
    let label = format!("{kind} constant, n={}, sigma_j={:?}", gp.n, e.sigma_list);
    Ok(VerificationReport::compare(label, c.value, o, tolerance).with_note(c.convention_note).timed(start))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::hgroup::ball_volume_constant;
    use crate::params::ParamSet;

    fn rel(a: f64, b: f64) -> f64 {
        (a - b).abs() / b.abs()
    }

    fn es(s: &[f64]) -> ExponentSet {
        ExponentSet::from_sigmas(4, s.to_vec())
    }

    #[test]
    fn single_factor_values() {
        let gp = ball_volume_constant(1).unwrap();
        let pi2 = PI * PI;
        assert!(rel(hlp_closed_form(&es(&[-2.0]), &gp).unwrap().value, 2.0 * pi2) < 1e-14);
        assert!(rel(hlp_closed_form(&es(&[-1.0]), &gp).unwrap().value, 8.0 * pi2 / 3.0) < 1e-14);
        assert!(rel(hilbert_closed_form(&es(&[-2.0]), &gp).unwrap().value, PI * pi2 / 2.0) < 1e-13);
        assert!(rel(hilbert_closed_form(&es(&[-1.0]), &gp).unwrap().value, PI * pi2 * 2f64.sqrt() / 2.0) < 1e-13);
    }

    #[test]
    fn two_factor_values() {
        let gp = ball_volume_constant(1).unwrap();
        let w = gp.sphere_constant;
        let a = hlp_closed_form(&es(&[-0.5, -0.5]), &gp).unwrap().value;
        assert!(rel(a, 8.0 * w * w / 12.25) < 1e-14);
        assert!(rel(a, 254.4564010684145) < 1e-12);
        let b = hilbert_closed_form(&es(&[-0.5, -0.5]), &gp).unwrap().value;
        assert!(rel(b, 104.83263451183662) < 1e-12);
    }

    #[test]
    fn recursion_matches_gamma_product() {
        let r = beta_recursion_im(&[0.875, 0.875], 2.0).unwrap();
        let direct = beta(0.875, 1.125).unwrap() * beta(0.875, 0.25).unwrap();
        assert!(rel(r, direct) < 1e-14);
        assert!(rel(r, gamma_product_im(&[0.875, 0.875], 2.0).unwrap()) < 1e-12);
        assert!(matches!(beta_recursion_im(&[1.5, 1.0], 2.0), Err(Error::Domain(_))));
        assert!(matches!(beta_recursion_im(&[-0.5], 1.0), Err(Error::Domain(_))));
    }

    #[test]
    fn anchors() {
        let (h, b) = classical_anchors(2.0).unwrap();
        assert!((h - 4.0).abs() < 1e-15 && rel(b, PI) < 1e-15);
        let (h, b) = classical_anchors(3.0).unwrap();
        assert!((h - 4.5).abs() < 1e-15 && rel(b, 2.0 * PI / 3f64.sqrt()) < 1e-15);
        let (h, _) = classical_anchors(1e8).unwrap();
        assert!(rel(h / 1e8, 1.0) < 1e-7);
        assert!(classical_anchors(1.0).is_err());
    }

    #[test]
    fn anchor_consistency() {
        let gp = ball_volume_constant(1).unwrap();
        for q in [1.5, 2.0, 3.0, 5.0] {
            let e = ParamSet::sharp(1, vec![q], -1.0 / q, vec![0.0], 0.0).derive_exponents();
            let (h, b) = classical_anchors(q).unwrap();
            assert!(rel(hlp_closed_form(&e, &gp).unwrap().value, gp.ball_volume * h) < 1e-10);
            assert!(rel(hilbert_closed_form(&e, &gp).unwrap().value, gp.ball_volume * b) < 1e-10);
        }
    }

    #[test]
    fn inadmissible_is_domain_error() {
        let gp = ball_volume_constant(1).unwrap();
        assert!(matches!(hlp_closed_form(&es(&[0.5]), &gp), Err(Error::Domain(_))));
        assert!(matches!(hilbert_closed_form(&es(&[-5.0]), &gp), Err(Error::Domain(_))));
    }

    #[test]
    fn monotone_in_single_exponent() {
        let gp = ball_volume_constant(1).unwrap();
        let mut prev = f64::INFINITY;
        for k in 1..40 {
            let s = -0.05 * k as f64; // walks from near 0 towards −Q/2
            let a = hlp_closed_form(&es(&[s]), &gp).unwrap().value;
            assert!(a < prev);
            prev = a;
        }
    }
}
