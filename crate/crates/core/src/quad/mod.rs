//! Integration engine: radial reduction, 1-D quadrature, constant oracles and
//! Monte Carlo over Heisenberg balls.

pub mod double_exp;
pub mod gauss;
pub mod line;
pub mod mc;
pub mod oracle;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::hgroup::GroupParams;
use crate::profile::RadialProfile;

pub use line::{integrate, Estimate};
pub use mc::{mc_ball_integral, McEstimate, McSpec};
pub use oracle::{hilbert_constant_oracle, hlp_constant_oracle, hlp_region_terms};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Scheme {
    GaussLegendreComposite,
    DoubleExponential,
}

/// Map used for `[s, ∞)` tails: `r = s t/(1−t)` or `r = s e^v`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum InfinityTransform {
    Rational,
    Exp,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct QuadratureSpec {
    pub scheme: Scheme,
    pub panels: usize,
    pub nodes_per_panel: usize,
    pub infinity_transform: InfinityTransform,
    pub rel_target: f64,
}

impl Default for QuadratureSpec {
    fn default() -> Self {
        Self {
            scheme: Scheme::GaussLegendreComposite,
            panels: 4,
            nodes_per_panel: 16,
            infinity_transform: InfinityTransform::Rational,
            rel_target: 1e-12,
        }
    }
}

impl QuadratureSpec {
    pub fn with_rel_target(mut self, rel_target: f64) -> Self {
        self.rel_target = rel_target;
        self
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.rel_target > 0.0 && self.rel_target <= 1e-2) {
            return Err(Error::InvalidInput(format!("rel_target {} must lie in (0, 1e-2]", self.rel_target)));
        }
        if self.panels == 0 {
            return Err(Error::InvalidInput("panels must be positive".into()));
        }
        if self.nodes_per_panel == 0 || self.nodes_per_panel > 128 {
            return Err(Error::InvalidInput("nodes_per_panel must lie in 1..=128".into()));
        }
        Ok(())
    }
}

/// `∫_{ℍⁿ} F(|y|_h) dy = ω_Q ∫_0^∞ F(r) r^{Q−1} dr`, computed numerically.
pub fn radial_integral(f: &RadialProfile, gp: &GroupParams, spec: &QuadratureSpec) -> Result<f64> {
    spec.validate()?;
    if f.is_zero() {
        return Ok(0.0);
    }
    let qm1 = gp.q() - 1.0;
    let g = |r: f64| f.eval(r) * r.powf(qm1);
    Ok(gp.sphere_constant * integrate(&g, 0.0, f64::INFINITY, &f.breakpoints(), 1.0, spec)?.value)
}

/// Same reduction for an arbitrary radial function given as a closure.
pub fn radial_integral_fn<F>(f: F, breakpoints: &[f64], gp: &GroupParams, spec: &QuadratureSpec) -> Result<f64>
where
    F: Fn(f64) -> f64 + Sync,
{
    spec.validate()?;
    let qm1 = gp.q() - 1.0;
    let g = |r: f64| {
        let v = f(r);
        if v == 0.0 {
            0.0
        } else {
            v * r.powf(qm1)
        }
    };
    Ok(gp.sphere_constant * integrate(&g, 0.0, f64::INFINITY, breakpoints, 1.0, spec)?.value)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::hgroup::ball_volume_constant;
    use std::f64::consts::PI;

    fn rel(a: f64, b: f64) -> f64 {
        (a - b).abs() / b.abs()
    }

    #[test]
    fn gaussian_type_integral() {
        let gp = ball_volume_constant(1).unwrap();
        for spec in [
            QuadratureSpec::default(),
            QuadratureSpec { scheme: Scheme::DoubleExponential, ..Default::default() },
            QuadratureSpec { infinity_transform: InfinityTransform::Exp, ..Default::default() },
        ] {
            let v = radial_integral_fn(|r: f64| (-r.powi(4)).exp(), &[], &gp, &spec).unwrap();
            assert!(rel(v, PI * PI / 2.0) < 1e-10, "{v} {spec:?}");
        }
    }

    #[test]
    fn max_kernel_integral() {
        let gp = ball_volume_constant(1).unwrap();
        let v = radial_integral_fn(|r: f64| r.powi(-2) / r.powi(4).max(1.0), &[1.0], &gp, &QuadratureSpec::default()).unwrap();
        assert!(rel(v, 2.0 * PI * PI) < 1e-11, "{v}");
    }

    #[test]
    fn zero_profile() {
        let gp = ball_volume_constant(2).unwrap();
        assert_eq!(radial_integral(&RadialProfile::zero(), &gp, &QuadratureSpec::default()).unwrap(), 0.0);
    }

    #[test]
    fn divergent_tail_and_origin() {
        let gp = ball_volume_constant(1).unwrap();
        let spec = QuadratureSpec::default();
        let tail = radial_integral_fn(|r: f64| 1.0 / (1.0 + r.powi(4)), &[], &gp, &spec);
        assert!(matches!(tail, Err(Error::Divergence(_))), "{tail:?}");
        let origin = radial_integral_fn(|r: f64| r.powi(-5) * (-r).exp(), &[], &gp, &spec);
        assert!(matches!(origin, Err(Error::Divergence(_))), "{origin:?}");
        let pure = radial_integral(&RadialProfile::power(-2.0), &gp, &spec);
        assert!(matches!(pure, Err(Error::Divergence(_))), "{pure:?}");
    }

    #[test]
    fn truncated_power_matches_closed_form() {
        let gp = ball_volume_constant(1).unwrap();
        let f = RadialProfile::truncated_power(-2.5, 0.5, 3.0).unwrap();
        let v = radial_integral(&f, &gp, &QuadratureSpec::default()).unwrap();
        let exact = gp.sphere_constant * (3f64.powf(1.5) - 0.5f64.powf(1.5)) / 1.5;
        assert!(rel(v, exact) < 1e-12, "{v} {exact}");
    }

    #[test]
    fn rel_target_range() {
        assert!(QuadratureSpec::default().with_rel_target(0.5).validate().is_err());
        assert!(QuadratureSpec::default().with_rel_target(0.0).validate().is_err());
        assert!(QuadratureSpec::default().with_rel_target(1e-2).validate().is_ok());
    }
}
