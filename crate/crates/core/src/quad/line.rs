//! One-dimensional integration on subsets of `[0, ∞)`.
//!
//! The Gauss–Legendre scheme covers the domain with geometric blocks
//! `[s·2^k, s·2^{k+1}]`, each integrated adaptively. Sweeps toward the origin
//! and toward infinity stop once blocks are negligible or once successive
//! block ratios settle, in which case the remaining geometric tail is summed
//! in closed form (exact for power-law ends). Ratios settling at or above one
//! are reported as divergence.

use rayon::prelude::*;

use super::double_exp;
use super::gauss::GaussLegendre;
use super::{InfinityTransform, QuadratureSpec, Scheme};
use crate::error::{Error, Result};

/// Value, absolute error estimate and number of integrand evaluations.
#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct Estimate {
    pub value: f64,
    pub abs_err: f64,
    pub evals: usize,
}

impl Estimate {
    fn add(self, o: Estimate) -> Estimate {
        Estimate { value: self.value + o.value, abs_err: self.abs_err + o.abs_err, evals: self.evals + o.evals }
    }
}

const BLOCK_RATIO: f64 = 2.0;
const MIN_BLOCKS: usize = 4;
const MAX_BLOCKS: usize = 960;
const GROWTH_BLOCKS: usize = 40;
const MAX_DEPTH: u32 = 18;

/// `∫_a^b f(r) dr` with `0 ≤ a < b ≤ ∞`. `breakpoints` are radii where `f`
/// is not smooth; `scale` is a typical length used to split `[0, ∞)`.
pub fn integrate<F>(f: &F, a: f64, b: f64, breakpoints: &[f64], scale: f64, spec: &QuadratureSpec) -> Result<Estimate>
where
    F: Fn(f64) -> f64 + Sync,
{
    if !(a >= 0.0) || !(b > a) {
        if b == a {
            return Ok(Estimate::default());
        }
        return Err(Error::InvalidInput(format!("integration range [{a}, {b}] must satisfy 0 <= a < b")));
    }
    let scale = if scale > 0.0 && scale.is_finite() { scale } else { 1.0 };
    let mut pts: Vec<f64> = breakpoints.iter().copied().filter(|p| *p > a && *p < b && p.is_finite()).collect();
    if pts.is_empty() && a == 0.0 && b.is_infinite() {
        pts.push(scale);
    }
    pts.sort_by(|x, y| x.partial_cmp(y).unwrap());
    pts.dedup();
    let mut edges = Vec::with_capacity(pts.len() + 2);
    edges.push(a);
    edges.extend(pts);
    edges.push(b);

    let segments: Vec<(f64, f64)> = edges.windows(2).map(|w| (w[0], w[1])).collect();
    let last = segments.len() - 1;

    // interior finite segments are independent
    let interior: Vec<Result<Estimate>> = segments
        .par_iter()
        .enumerate()
        .filter(|(i, (lo, _))| !(*i == 0 && *lo == 0.0) && !(*i == last && b.is_infinite()))
        .map(|(_, &(lo, hi))| finite_segment(f, lo, hi, spec))
        .collect();
    let mut total = Estimate::default();
    for r in interior {
        total = total.add(r?);
    }
    if segments[0].0 == 0.0 {
        let hi = segments[0].1;
        if hi.is_infinite() {
            unreachable!("[0, inf) is always split");
        }
        total = total.add(toward_zero(f, hi, total.value, spec)?);
    }
    if b.is_infinite() {
        let lo = segments[last].0;
        total = total.add(toward_infinity(f, lo, scale, total.value, spec)?);
    }
    Ok(total)
}

fn finite_segment<F: Fn(f64) -> f64>(f: &F, lo: f64, hi: f64, spec: &QuadratureSpec) -> Result<Estimate> {
    match spec.scheme {
        Scheme::DoubleExponential => double_exp::tanh_sinh(f, lo, hi, spec.rel_target),
        Scheme::GaussLegendreComposite => {
            let gl = GaussLegendre::cached(spec.nodes_per_panel);
            let tol = spec.rel_target;
            let mut total = Estimate::default();
            // geometric panels when the segment spans several octaves
            let octaves = (hi / lo).log2();
            if lo > 0.0 && octaves > 1.0 {
                let k = (octaves.ceil() as usize).max(spec.panels);
                let ratio = (hi / lo).powf(1.0 / k as f64);
                let mut x0 = lo;
                for i in 0..k {
                    let x1 = if i + 1 == k { hi } else { x0 * ratio };
                    total = total.add(log_block(f, x0, x1, gl, tol)?);
                    x0 = x1;
                }
            } else {
                let k = spec.panels.max(1);
                let h = (hi - lo) / k as f64;
                for i in 0..k {
                    let x0 = lo + h * i as f64;
                    let x1 = if i + 1 == k { hi } else { x0 + h };
                    total = total.add(adaptive(f, x0, x1, gl, tol, MAX_DEPTH)?);
                }
            }
            Ok(total)
        }
    }
}

/// Adaptive bisection: accept a panel when one rule agrees with the sum over
/// its two halves.
pub(crate) fn adaptive<F: Fn(f64) -> f64>(f: &F, a: f64, b: f64, gl: &GaussLegendre, tol: f64, depth: u32) -> Result<Estimate> {
    let whole = gl.integrate(f, a, b);
    let mid = 0.5 * (a + b);
    let left = gl.integrate(f, a, mid);
    let right = gl.integrate(f, mid, b);
    let split = left + right;
    let evals = 3 * gl.len();
    if !split.is_finite() {
        return Err(Error::Divergence(format!("integrand is not finite on [{a}, {b}]")));
    }
    let diff = (whole - split).abs();
    if diff <= tol * split.abs() || diff < 1e-300 || depth == 0 || mid <= a || mid >= b {
        if depth == 0 && diff > tol.sqrt() * split.abs() {
            return Err(Error::NotConverged(format!("panel [{a}, {b}] did not settle (diff {diff:e})")));
        }
        return Ok(Estimate { value: split, abs_err: diff, evals });
    }
    let l = adaptive(f, a, mid, gl, tol, depth - 1)?;
    let r = adaptive(f, mid, b, gl, tol, depth - 1)?;
    Ok(l.add(r).add(Estimate { value: 0.0, abs_err: 0.0, evals }))
}

/// Block integrated in `v = ln r`.
fn log_block<F: Fn(f64) -> f64>(f: &F, lo: f64, hi: f64, gl: &GaussLegendre, tol: f64) -> Result<Estimate> {
    let g = |v: f64| {
        let r = v.exp();
        f(r) * r
    };
    adaptive(&g, lo.ln(), hi.ln(), gl, tol, MAX_DEPTH)
}

/// Block under the map `r = s t / (1 − t)`, integrated in the complement
/// `c = 1 − t = s / (s + r)` so that nodes near `t = 1` keep full precision.
fn rational_block<F: Fn(f64) -> f64>(f: &F, lo: f64, hi: f64, s: f64, gl: &GaussLegendre, tol: f64) -> Result<Estimate> {
    let g = |c: f64| {
        let v = f(s * (1.0 - c) / c);
        if v == 0.0 {
            0.0
        } else {
            v * s / (c * c)
        }
    };
    adaptive(&g, s / (s + hi), s / (s + lo), gl, tol, MAX_DEPTH)
}

/// Running state of a geometric block sweep.
struct Sweep {
    sum: f64,
    err: f64,
    evals: usize,
    prev: Option<f64>,
    prev_ratio: Option<f64>,
    prev_tail: Option<f64>,
    growth: usize,
    reference: f64,
    tol: f64,
}

enum Step {
    Continue,
    Done,
}

impl Sweep {
    fn new(reference: f64, tol: f64) -> Self {
        Self { sum: 0.0, err: 0.0, evals: 0, prev: None, prev_ratio: None, prev_tail: None, growth: 0, reference, tol }
    }

    fn push(&mut self, k: usize, block: Estimate, where_: &str) -> Result<Step> {
        let b = block.value;
        self.sum += b;
        self.err += block.abs_err;
        self.evals += block.evals;
        if !self.sum.is_finite() {
            return Err(Error::Divergence(format!("integral grows without bound {where_}")));
        }
        let scale = self.sum.abs().max(self.reference.abs());
        let ratio = match self.prev {
            Some(p) if p != 0.0 => Some(b / p),
            _ => None,
        };
        self.prev = Some(b);
        if let Some(r) = ratio {
            if r >= 1.0 && b.abs() > self.tol * scale {
                self.growth += 1;
            } else {
                self.growth = 0;
            }
        }
        if self.growth >= GROWTH_BLOCKS {
            return Err(Error::Divergence(format!("panel-to-panel growth {where_}")));
        }
        if k + 1 < MIN_BLOCKS {
            self.prev_ratio = ratio;
            return Ok(Step::Continue);
        }
        if b.abs() <= 1e-3 * self.tol * scale {
            self.err += b.abs();
            return Ok(Step::Done);
        }
        let mut step = Step::Continue;
        if let (Some(r), Some(pr)) = (ratio, self.prev_ratio) {
            let settled = (r - pr).abs() <= 1e-9 * r.abs().max(1e-300);
            if settled && r >= 1.0 - 1e-12 {
                return Err(Error::Divergence(format!(
                    "panel-to-panel ratio settled at {r:.6} {where_}"
                )));
            }
            if r > 0.0 && r < 1.0 {
                let tail = b * r / (1.0 - r);
                if let Some(pt) = self.prev_tail {
                    let tail_err = (tail - pt).abs();
                    if settled || tail_err <= 0.1 * self.tol * (self.sum + tail).abs() {
                        self.sum += tail;
                        self.err += tail_err;
                        step = Step::Done;
                    }
                }
                self.prev_tail = Some(tail);
            } else {
                self.prev_tail = None;
            }
        }
        self.prev_ratio = ratio;
        Ok(step)
    }

    fn finish(self) -> Estimate {
        Estimate { value: self.sum, abs_err: self.err, evals: self.evals }
    }

    fn exhausted(self, where_: &str) -> Error {
        let growing = match (self.prev_ratio, self.prev) {
            (Some(r), _) => r >= 1.0,
            _ => false,
        };
        if growing {
            Error::Divergence(format!("blocks stopped decaying {where_}"))
        } else {
            Error::NotConverged(format!("block sweep exhausted {where_}"))
        }
    }
}

/// `∫_0^hi f`, sweeping blocks `[hi 2^{−k−1}, hi 2^{−k}]`.
fn toward_zero<F: Fn(f64) -> f64>(f: &F, hi: f64, reference: f64, spec: &QuadratureSpec) -> Result<Estimate> {
    if spec.scheme == Scheme::DoubleExponential {
        return double_exp::tanh_sinh(f, 0.0, hi, spec.rel_target);
    }
    let gl = GaussLegendre::cached(spec.nodes_per_panel);
    let mut sweep = Sweep::new(reference, spec.rel_target);
    let mut upper = hi;
    for k in 0..MAX_BLOCKS {
        let lower = upper / BLOCK_RATIO;
        if lower < 1e-290 {
            break;
        }
        let block = log_block(f, lower, upper, gl, spec.rel_target)?;
        if let Step::Done = sweep.push(k, block, "toward the origin")? {
            return Ok(sweep.finish());
        }
        upper = lower;
    }
    Err(sweep.exhausted("toward the origin"))
}

/// `∫_lo^∞ f`, sweeping blocks `[lo 2^k, lo 2^{k+1}]` (blocks start at `scale` when `lo = 0`).
fn toward_infinity<F: Fn(f64) -> f64>(f: &F, lo: f64, scale: f64, reference: f64, spec: &QuadratureSpec) -> Result<Estimate> {
    let s = if lo > 0.0 { lo } else { scale };
    if spec.scheme == Scheme::DoubleExponential {
        return double_exp::semi_infinite(f, lo, s, spec.infinity_transform, spec.rel_target);
    }
    let gl = GaussLegendre::cached(spec.nodes_per_panel);
    let mut sweep = Sweep::new(reference, spec.rel_target);
    let mut lower = lo;
    let mut upper = if lo > 0.0 { lo * BLOCK_RATIO } else { scale };
    for k in 0..MAX_BLOCKS {
        if upper > 1e290 {
            break;
        }
        let block = match spec.infinity_transform {
            InfinityTransform::Rational => rational_block(f, lower, upper, s, gl, spec.rel_target)?,
            InfinityTransform::Exp => {
                if lower == 0.0 {
                    adaptive(f, 0.0, upper, gl, spec.rel_target, MAX_DEPTH)?
                } else {
                    log_block(f, lower, upper, gl, spec.rel_target)?
                }
            }
        };
        if let Step::Done = sweep.push(k, block, "toward infinity")? {
            return Ok(sweep.finish());
        }
        lower = upper;
        upper *= BLOCK_RATIO;
    }
    Err(sweep.exhausted("toward infinity"))
}
