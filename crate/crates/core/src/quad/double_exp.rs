//! Double-exponential (tanh-sinh / exp-sinh) quadrature.
//!
//! Nodes near an endpoint are generated from their distance to that endpoint,
//! so integrable power singularities are sampled down to ~1e−300 without
//! cancellation.

use std::f64::consts::FRAC_PI_2;

use super::line::Estimate;
use super::InfinityTransform;
use crate::error::{Error, Result};

const MAX_LEVEL: usize = 10;
const T_MAX: f64 = 6.5;

/// `∫_a^b f` for finite `a < b`.
pub fn tanh_sinh<F: Fn(f64) -> f64>(f: &F, a: f64, b: f64, tol: f64) -> Result<Estimate> {
    let width = b - a;
    // node at parameter t: returns (x, weight) with x computed from the nearer endpoint
    let node = |t: f64| -> Option<(f64, f64)> {
        let u = FRAC_PI_2 * t.sinh();
        let cosh_u = u.cosh();
        let w = 0.5 * width * FRAC_PI_2 * t.cosh() / (cosh_u * cosh_u);
        let x = if t < 0.0 {
            let d = width / (1.0 + (-2.0 * u).exp());
            if d <= 0.0 {
                return None;
            }
            a + d
        } else {
            let d = width / (1.0 + (2.0 * u).exp());
            if d <= 0.0 {
                return None;
            }
            b - d
        };
        if x <= a || x >= b || !w.is_finite() || w == 0.0 {
            return None;
        }
        Some((x, w))
    };
    run_levels(f, node, tol, "finite interval")
}

/// `∫_lo^∞ f` using either `r = lo + s x/(1−x)` on tanh-sinh nodes or the
/// exp-sinh map `r = lo + s exp(π/2 sinh t)`.
pub fn semi_infinite<F: Fn(f64) -> f64>(f: &F, lo: f64, s: f64, map: InfinityTransform, tol: f64) -> Result<Estimate> {
    match map {
        InfinityTransform::Rational => {
            let node = |t: f64| -> Option<(f64, f64)> {
                let u = FRAC_PI_2 * t.sinh();
                let cosh_u = u.cosh();
                let w = 0.5 * FRAC_PI_2 * t.cosh() / (cosh_u * cosh_u);
                // x ∈ (0,1) and its complement c = 1 − x, both from the near end
                let (x, c) = if t < 0.0 {
                    let x = 1.0 / (1.0 + (-2.0 * u).exp());
                    (x, 1.0 - x)
                } else {
                    let c = 1.0 / (1.0 + (2.0 * u).exp());
                    (1.0 - c, c)
                };
                if x <= 0.0 || c <= 0.0 || !w.is_finite() || w == 0.0 {
                    return None;
                }
                let r = lo + s * x / c;
                if !r.is_finite() || r <= lo {
                    return None;
                }
                Some((r, w * s / (c * c)))
            };
            run_levels(f, node, tol, "semi-infinite interval")
        }
        InfinityTransform::Exp => {
            let node = |t: f64| -> Option<(f64, f64)> {
                let e = (FRAC_PI_2 * t.sinh()).exp();
                let r = lo + s * e;
                let w = s * e * FRAC_PI_2 * t.cosh();
                if !r.is_finite() || r <= lo || !w.is_finite() || w == 0.0 {
                    return None;
                }
                Some((r, w))
            };
            run_levels(f, node, tol, "semi-infinite interval")
        }
    }
}

fn run_levels<F, N>(f: &F, node: N, tol: f64, what: &str) -> Result<Estimate>
where
    F: Fn(f64) -> f64,
    N: Fn(f64) -> Option<(f64, f64)>,
{
    let mut h = 0.5;
    let mut sum = 0.0;
    let mut evals = 0usize;
    // level 0: all nodes k h
    let add = |t: f64, sum: &mut f64, evals: &mut usize| -> Result<()> {
        if let Some((x, w)) = node(t) {
            let fx = f(x);
            *evals += 1;
            if fx == 0.0 {
                return Ok(());
            }
            let v = fx * w;
            if !v.is_finite() {
                return Err(Error::Divergence(format!("integrand not finite near {x:e} on {what}")));
            }
            *sum += v;
        }
        Ok(())
    };
    let kmax = (T_MAX / h) as i64;
    for k in -kmax..=kmax {
        add(k as f64 * h, &mut sum, &mut evals)?;
    }
    let mut estimate = sum * h;
    let mut history = vec![estimate];
    for _level in 1..=MAX_LEVEL {
        h *= 0.5;
        let kmax = (T_MAX / h) as i64;
        let mut k = -kmax + if kmax % 2 == 0 { 1 } else { 0 };
        while k <= kmax {
            add(k as f64 * h, &mut sum, &mut evals)?;
            k += 2;
        }
        let next = sum * h;
        let diff = (next - estimate).abs();
        estimate = next;
        history.push(estimate);
        if diff <= tol * estimate.abs() || (diff == 0.0) {
            return Ok(Estimate { value: estimate, abs_err: diff, evals });
        }
    }
    let n = history.len();
    let growing = n >= 3
        && history[n - 1].abs() > 1.05 * history[n - 2].abs()
        && history[n - 2].abs() > 1.05 * history[n - 3].abs();
    if growing {
        Err(Error::Divergence(format!("estimates keep growing on {what}")))
    } else {
        Err(Error::NotConverged(format!("tanh-sinh did not reach {tol:e} on {what}")))
    }
}
