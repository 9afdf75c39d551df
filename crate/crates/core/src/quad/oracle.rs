//! Numerical oracles for the sharp constants. Neither oracle calls the Gamma
//! or Beta functions; every one-dimensional integral is either an elementary
//! power integral or is computed by quadrature.

use super::line::integrate;
use super::QuadratureSpec;
use crate::error::{Error, Result};
use crate::hgroup::GroupParams;
use crate::params::ExponentSet;
use crate::profile::power_integral;

const MAX_M: usize = 4;

fn check_shape(e: &ExponentSet, gp: &GroupParams, spec: &QuadratureSpec) -> Result<()> {
    spec.validate()?;
    if e.m() == 0 || e.m() > MAX_M {
        return Err(Error::InvalidInput(format!("tensor quadrature supports 1 <= m <= {MAX_M}, got m = {}", e.m())));
    }
    if e.q_dim != gp.q_dim {
        return Err(Error::InvalidInput(format!(
            "exponents were derived for Q = {} but the group has Q = {}",
            e.q_dim, gp.q_dim
        )));
    }
    if e.sigma_list.iter().any(|s| !s.is_finite()) {
        return Err(Error::InvalidInput("exponents must be finite".into()));
    }
    Ok(())
}

/// The pieces `E_0, E_1, …, E_m` of
/// `ω^m ∫ ∏ r_j^{σ_j+Q−1} / max(1, r_1^Q, …, r_m^Q)^m dr`.
///
/// `E_0` is the unit cube, where the kernel is 1. On `E_k` the radius `r_k`
/// exceeds 1 and every other radius, so the inner integrals are elementary
/// and one radial integral in `r_k` is left for quadrature.
pub fn hlp_region_terms(e: &ExponentSet, gp: &GroupParams, spec: &QuadratureSpec) -> Result<Vec<f64>> {
    check_shape(e, gp, spec)?;
    let q = gp.q();
    let m = e.m();
    let a: Vec<f64> = e.sigma_list.iter().map(|s| q + s).collect();
    let w = gp.sphere_constant.powi(m as i32);
    // ∫_0^1 r^{a_j − 1} dr
    let unit: Vec<f64> = a.iter().map(|aj| power_integral(aj - 1.0, 0.0, 1.0)).collect::<Result<_>>()?;
    let mut terms = Vec::with_capacity(m + 1);
    terms.push(w * unit.iter().product::<f64>());
    for k in 0..m {
        let others: Vec<f64> = (0..m).filter(|&j| j != k).map(|j| a[j]).collect();
        let outer = a[k] - 1.0 - m as f64 * q;
        let g = |r: f64| {
            // r^{outer} ∏ r^{a_j}/a_j, multiplied piece by piece
            let mut v = r.powf(outer);
            for aj in &others {
                v *= r.powf(*aj) / aj;
            }
            v
        };
        let residual = integrate(&g, 1.0, f64::INFINITY, &[], 1.0, spec)?.value;
        terms.push(w * residual);
    }
    Ok(terms)
}

pub fn hlp_constant_oracle(e: &ExponentSet, gp: &GroupParams, spec: &QuadratureSpec) -> Result<f64> {
    Ok(hlp_region_terms(e, gp, spec)?.iter().sum())
}

/// `∫_0^∞ u^{b−1} (1+u)^{−s} du` by quadrature.
///
/// Split at `u = 1`; `v = u^b` on `[0, 1]` and `v = u^{−(s−b)}` on `[1, ∞)`
/// turn both halves into `(1/c) ∫_0^1 (1 + v^{1/c})^{−s} dv` with bounded
/// integrands, `c = b` and `c = s − b`.
pub fn beta_type_integral(b: f64, s: f64, spec: &QuadratureSpec) -> Result<f64> {
    if !(b > 0.0) || !(s - b > 0.0) {
        return Err(Error::Divergence(format!("shape {b} with outer power {s} is not integrable")));
    }
    let half = |c: f64| -> Result<f64> {
        let g = |v: f64| (-s * (v.powf(1.0 / c)).ln_1p()).exp();
        Ok(integrate(&g, 0.0, 1.0, &[], 1.0, spec)?.value / c)
    };
    Ok(half(b)? + half(s - b)?)
}

/// `B(a, b) = ∫_0^∞ u^{a−1}(1+u)^{−a−b} du` by quadrature.
pub fn beta_integral_numeric(a: f64, b: f64, spec: &QuadratureSpec) -> Result<f64> {
    beta_type_integral(a, a + b, spec)
}

/// `ω^m ∫ ∏ r_j^{σ_j+Q−1} / (1 + Σ r_j^Q)^m dr`.
///
/// With `t_j = r_j^Q` the integral is `Ω^m ∫ ∏ t_j^{b_j−1} (1 + Σ t_j)^{−m} dt`,
/// `b_j = 1 + σ_j/Q`. Integrating out the last variable against
/// `c = 1 + Σ_{j<k} t_j` gives `c^{b_k − s_k} J(b_k, s_k)`, so the whole
/// integral is `∏_k J(b_k, s_k)` with `s_m = m` and `s_{k−1} = s_k − b_k`.
pub fn hilbert_constant_oracle(e: &ExponentSet, gp: &GroupParams, spec: &QuadratureSpec) -> Result<f64> {
    check_shape(e, gp, spec)?;
    let q = gp.q();
    let m = e.m();
    let mut s = m as f64;
    let mut product = 1.0;
    for k in (0..m).rev() {
        let b = 1.0 + e.sigma_list[k] / q;
        if !(b > 0.0) || !(s - b > 0.0) {
            return Err(Error::Divergence(format!(
                "inner integral with shape {b} and outer power {s} diverges"
            )));
        }
        product *= beta_type_integral(b, s, spec)?;
        s -= b;
    }
    Ok(gp.ball_volume.powi(m as i32) * product)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::hgroup::ball_volume_constant;
    use std::f64::consts::PI;

    fn rel(a: f64, b: f64) -> f64 {
        (a - b).abs() / b.abs()
    }

    fn es(n: usize, s: &[f64]) -> ExponentSet {
        ExponentSet::from_sigmas(2 * n + 2, s.to_vec())
    }

    #[test]
    fn hlp_single_variable() {
        let gp = ball_volume_constant(1).unwrap();
        let spec = QuadratureSpec::default();
        let v = hlp_constant_oracle(&es(1, &[-2.0]), &gp, &spec).unwrap();
        assert!(rel(v, 2.0 * PI * PI) < 1e-10, "{v}");
        let v = hlp_constant_oracle(&es(1, &[-1.0]), &gp, &spec).unwrap();
        assert!(rel(v, 2.0 * PI * PI * 4.0 / 3.0) < 1e-10, "{v}");
    }

    #[test]
    fn hlp_two_variables_frozen() {
        let gp = ball_volume_constant(1).unwrap();
        let v = hlp_constant_oracle(&es(1, &[-0.5, -0.5]), &gp, &QuadratureSpec::default()).unwrap();
        assert!(rel(v, 254.4564010684145) < 1e-9, "{v}");
    }

    #[test]
    fn hilbert_single_variable() {
        let gp = ball_volume_constant(1).unwrap();
        let spec = QuadratureSpec::default();
        let v = hilbert_constant_oracle(&es(1, &[-2.0]), &gp, &spec).unwrap();
        assert!(rel(v, PI.powi(3) / 2.0) < 1e-10, "{v}");
        let v = hilbert_constant_oracle(&es(1, &[-1.0]), &gp, &spec).unwrap();
        assert!(rel(v, PI.powi(3) * 2f64.sqrt() / 2.0) < 1e-10, "{v}");
    }

    #[test]
    fn hilbert_two_variables_frozen() {
        let gp = ball_volume_constant(1).unwrap();
        let v = hilbert_constant_oracle(&es(1, &[-0.5, -0.5]), &gp, &QuadratureSpec::default()).unwrap();
        assert!(rel(v, 104.83263451183662) < 1e-9, "{v}");
    }

    #[test]
    fn inadmissible_exponents_diverge() {
        let gp = ball_volume_constant(1).unwrap();
        let spec = QuadratureSpec::default();
        assert!(matches!(hlp_constant_oracle(&es(1, &[0.5]), &gp, &spec), Err(Error::Divergence(_))));
        assert!(matches!(hlp_constant_oracle(&es(1, &[-4.5]), &gp, &spec), Err(Error::Divergence(_))));
        assert!(matches!(hilbert_constant_oracle(&es(1, &[0.5]), &gp, &spec), Err(Error::Divergence(_))));
        assert!(matches!(hilbert_constant_oracle(&es(1, &[-4.5]), &gp, &spec), Err(Error::Divergence(_))));
        assert!(hlp_constant_oracle(&es(1, &[-1.0; 5]), &gp, &spec).is_err());
    }

    #[test]
    fn region_terms_are_symmetric() {
        let gp = ball_volume_constant(2).unwrap();
        let t = hlp_region_terms(&es(2, &[-1.0, -2.5, -1.0]), &gp, &QuadratureSpec::default()).unwrap();
        assert!(t.iter().all(|x| *x > 0.0));
        assert!(rel(t[1], t[3]) < 1e-12);
    }

    #[test]
    fn beta_by_quadrature() {
        let spec = QuadratureSpec::default();
        assert!(rel(beta_integral_numeric(0.5, 0.5, &spec).unwrap(), PI) < 1e-10);
        assert!(rel(beta_integral_numeric(2.0, 3.0, &spec).unwrap(), 1.0 / 12.0) < 1e-10);
    }
}
