//! Two-power-weighted Morrey norms on a grid of balls.
//!
//! A cell `(a, R)` has value `w_1(B)^{−(λ+1/q)} (∫_B |f|^q w_2)^{1/q}` with
//! `w_1 = |x|_h^α`, `w_2 = |x|_h^{γ_w}`, `B = B(a, R)`. The norm estimate is
//! the largest cell value, which bounds the supremum from below.
//!
//! Origin-centred cells are exact (radial antiderivatives). Off-centre cells
//! of radial data average exact chord integrals over random directions; the
//! direction stream of a cell depends only on its direction and on `|a|/R`,
//! so coupled dilations of a grid reuse the same samples and scale cell by
//! cell.

use std::time::Instant;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::constants::closed_form;
use crate::error::{Error, Result};
use crate::hgroup::{dilate, hnorm, GroupParams, HPoint};
use crate::operators::{apply_tabulated, extremizer_profile};
use crate::params::ParamSet;
use crate::profile::{Antiderivative, RadialProfile};
use crate::quad::mc::{mc_ball_integral_stream, mc_radial_ball_integrals, RadialFn};
use crate::quad::{McSpec, QuadratureSpec};
use crate::report::VerificationReport;
use crate::OperatorKind;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct MorreySpaceSpec {
    pub q: f64,
    pub lambda: f64,
    pub alpha: f64,
    pub gamma_w: f64,
}

impl MorreySpaceSpec {
    pub fn validate(&self, gp: &GroupParams) -> Result<()> {
        let mut bad = Vec::new();
        if !(self.q >= 1.0) || !self.q.is_finite() {
            bad.push(format!("q = {} must be at least 1", self.q));
        }
        if !(self.lambda >= -1.0 / self.q && self.lambda < 0.0) {
            bad.push(format!("λ = {} must lie in [-1/q, 0)", self.lambda));
        }
        if !(self.alpha > -gp.q()) {
            bad.push(format!("α = {} must exceed -Q", self.alpha));
        }
        if !(self.gamma_w > -gp.q()) {
            bad.push(format!("γ_w = {} must exceed -Q", self.gamma_w));
        }
        if bad.is_empty() {
            Ok(())
        } else {
            Err(Error::InvalidInput(bad.join("; ")))
        }
    }

    /// Dilation exponent `Qλ − γ_w/q + α(λ + 1/q)`.
    pub fn dilation_exponent(&self, gp: &GroupParams) -> f64 {
        gp.q() * self.lambda - self.gamma_w / self.q + self.alpha * (self.lambda + 1.0 / self.q)
    }

    /// Target space `L^{q,λ}(|x|^α, |x|^γ)`, `γ = Σ γ_j`.
    pub fn target(p: &ParamSet) -> Self {
        Self { q: p.q, lambda: p.lambda, alpha: p.alpha, gamma_w: p.gamma_total() }
    }

    /// Source space of factor `j` (0-based): `L^{q_j,λ_j}(|x|^α, |x|^{q_j γ_j / q})`.
    pub fn source(p: &ParamSet, j: usize) -> Self {
        Self { q: p.q_list[j], lambda: p.lambda_list[j], alpha: p.alpha, gamma_w: p.source_weight_exponent(j) }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BallGrid {
    pub center_radii: Vec<f64>,
    pub center_directions: Vec<HPoint>,
    pub radii: Vec<f64>,
}

impl BallGrid {
    /// Centre norms {0, 1/4, 1, 4}, directions `e_1` and the vertical axis,
    /// 17 radii log-spaced over `[1e−2, 1e2]`.
    pub fn default_for(n: usize) -> Result<Self> {
        Ok(Self {
            center_radii: vec![0.0, 0.25, 1.0, 4.0],
            center_directions: vec![HPoint::axis(n, 0)?, HPoint::axis(n, 2 * n)?],
            radii: (0..17).map(|i| 10f64.powf(-2.0 + 0.25 * i as f64)).collect(),
        })
    }

    pub fn validate(&self, gp: &GroupParams) -> Result<()> {
        if self.radii.is_empty() || self.radii.iter().any(|r| !(*r > 0.0) || !r.is_finite()) {
            return Err(Error::InvalidInput("grid radii must be positive and finite".into()));
        }
        if self.radii.windows(2).any(|w| !(w[1] > w[0])) {
            return Err(Error::InvalidInput("grid radii must be sorted ascending".into()));
        }
        if !self.center_radii.contains(&0.0) || self.center_radii.iter().any(|c| !(*c >= 0.0) || !c.is_finite()) {
            return Err(Error::InvalidInput("centre norms must be nonnegative and include 0".into()));
        }
        for d in &self.center_directions {
            if d.n() != gp.n || (hnorm(d) - 1.0).abs() > 1e-12 {
                return Err(Error::InvalidInput("centre directions must be unit points of the group".into()));
            }
        }
        Ok(())
    }

    /// Grid with every centre norm and radius multiplied by `t`.
    pub fn scaled(&self, t: f64) -> Self {
        Self {
            center_radii: self.center_radii.iter().map(|c| c * t).collect(),
            center_directions: self.center_directions.clone(),
            radii: self.radii.iter().map(|r| r * t).collect(),
        }
    }

    /// Cells in grid order: centre norm, then direction, then radius. The
    /// origin appears once per radius.
    pub fn cells(&self, n: usize) -> Result<Vec<Cell>> {
        let mut out = Vec::new();
        for &c in &self.center_radii {
            let dirs: Vec<Option<usize>> =
                if c == 0.0 { vec![None] } else { (0..self.center_directions.len()).map(Some).collect() };
            for d in dirs {
                let center = match d {
                    None => HPoint::origin(n),
                    Some(i) => dilate(c, &self.center_directions[i])?,
                };
                for &r in &self.radii {
                    let stream = match d {
                        None => 0,
                        Some(i) => cell_stream(&self.center_directions[i], c / r),
                    };
                    out.push(Cell { center: center.clone(), center_radius: c, direction: d, radius: r, stream });
                }
            }
        }
        Ok(out)
    }
}

#[derive(Clone, Debug)]
pub struct Cell {
    pub center: HPoint,
    pub center_radius: f64,
    pub direction: Option<usize>,
    pub radius: f64,
    stream: u64,
}

/// Stream id from the direction and the shape ratio `|a|/R`, rounded so that
/// scaled grids map to the same id.
fn cell_stream(dir: &HPoint, ratio: f64) -> u64 {
    let key = format!("{:?}|{:.9e}", dir.coords(), ratio);
    // FNV-1a
    let mut h: u64 = 0xcbf2_9ce4_8422_2325;
    for b in key.bytes() {
        h ^= b as u64;
        h = h.wrapping_mul(0x0100_0000_01b3);
    }
    (h & 0x0000_7fff_ffff_ffff) | 1
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CellValue {
    pub center_radius: f64,
    pub direction: Option<usize>,
    pub radius: f64,
    pub value: f64,
    pub stderr: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MorreyEstimate {
    pub value: f64,
    pub argmax_center_radius: f64,
    #[serde(rename = "argmax_R")]
    pub argmax_r: f64,
    pub stderr: f64,
    pub cells: usize,
}

impl MorreyEstimate {
    fn from_cells(cells: &[CellValue]) -> Self {
        let mut best = &cells[0];
        for c in cells {
            if c.value > best.value {
                best = c;
            }
        }
        Self {
            value: best.value,
            argmax_center_radius: best.center_radius,
            argmax_r: best.radius,
            stderr: best.stderr,
            cells: cells.len(),
        }
    }
}

fn combine(space: &MorreySpaceSpec, w: (f64, f64), i: (f64, f64)) -> (f64, f64) {
    let (wv, wse) = w;
    let (iv, ise) = i;
    if iv <= 0.0 {
        return (0.0, 0.0);
    }
    let a = space.lambda + 1.0 / space.q;
    let value = wv.powf(-a) * iv.powf(1.0 / space.q);
    let rel = ((a * wse / wv).powi(2) + (ise / (space.q * iv)).powi(2)).sqrt();
    (value, value * rel)
}

fn cell_error(cell: &Cell, e: Error) -> Error {
    let msg = format!("cell |a| = {}, R = {}: {e}", cell.center_radius, cell.radius);
    match e {
        Error::Divergence(_) => Error::Divergence(msg),
        Error::Sampling(_) => Error::Sampling(msg),
        other => other,
    }
}

fn weight_antiderivative(space: &MorreySpaceSpec, gp: &GroupParams) -> Result<Antiderivative> {
    RadialProfile::power(0.0).antiderivative(1.0, space.alpha + gp.q() - 1.0)
}

/// Every cell value of a radial profile.
pub fn morrey_cells(f: &RadialProfile, space: &MorreySpaceSpec, grid: &BallGrid, gp: &GroupParams, mc: &McSpec) -> Result<Vec<CellValue>> {
    space.validate(gp)?;
    grid.validate(gp)?;
    mc.validate()?;
    let cells = grid.cells(gp.n)?;
    let aw = weight_antiderivative(space, gp)?;
    let af = f.antiderivative(space.q, space.gamma_w + gp.q() - 1.0)?;
    let zero = f.is_zero();
    let w = gp.sphere_constant;
    cells
        .par_iter()
        .map(|cell| {
            let r = cell.radius;
            let (wm, im) = if cell.direction.is_none() {
                let wv = w * aw.between(0.0, r).map_err(|e| cell_error(cell, e))?;
                let iv = if zero { 0.0 } else { w * af.between(0.0, r).map_err(|e| cell_error(cell, e))? };
                ((wv, 0.0), (iv, 0.0))
            } else {
                let gw = |lo: f64, hi: f64| aw.between(lo, hi);
                let gf = |lo: f64, hi: f64| if zero { Ok(0.0) } else { af.between(lo, hi) };
                let est = mc_radial_ball_integrals(&[&gw as &RadialFn, &gf as &RadialFn], &cell.center, r, gp, mc, cell.stream)
                    .map_err(|e| cell_error(cell, e))?;
                ((est[0].estimate, est[0].stderr), (est[1].estimate, est[1].stderr))
            };
            let (value, stderr) = combine(space, wm, im);
            Ok(CellValue { center_radius: cell.center_radius, direction: cell.direction, radius: r, value, stderr })
        })
        .collect()
}

pub fn morrey_norm(f: &RadialProfile, space: &MorreySpaceSpec, grid: &BallGrid, gp: &GroupParams, mc: &McSpec) -> Result<MorreyEstimate> {
    Ok(MorreyEstimate::from_cells(&morrey_cells(f, space, grid, gp, mc)?))
}

/// Cell values of an arbitrary function; `∫_B |f|^q w_2` is sampled from a
/// bounding box of each ball.
pub fn morrey_cells_mc<F>(f: &F, space: &MorreySpaceSpec, grid: &BallGrid, gp: &GroupParams, mc: &McSpec) -> Result<Vec<CellValue>>
where
    F: Fn(&HPoint) -> f64 + Sync,
{
    space.validate(gp)?;
    grid.validate(gp)?;
    mc.validate()?;
    let cells = grid.cells(gp.n)?;
    let aw = weight_antiderivative(space, gp)?;
    let w = gp.sphere_constant;
    let g = |x: &HPoint| {
        let v = f(x).abs().powf(space.q);
        if v == 0.0 || space.gamma_w == 0.0 {
            v
        } else {
            v * hnorm(x).powf(space.gamma_w)
        }
    };
    cells
        .iter()
        .enumerate()
        .map(|(idx, cell)| {
            let r = cell.radius;
            let wm = if cell.direction.is_none() {
                (w * aw.between(0.0, r)?, 0.0)
            } else {
                let gw = |lo: f64, hi: f64| aw.between(lo, hi);
                let e = mc_radial_ball_integrals(&[&gw as &RadialFn], &cell.center, r, gp, mc, cell.stream)?[0];
                (e.estimate, e.stderr)
            };
            let i = mc_ball_integral_stream(&g, &cell.center, r, gp, mc, 1 << 40 | idx as u64)
                .map_err(|e| cell_error(cell, e))?;
            let (value, stderr) = combine(space, wm, (i.estimate, i.stderr));
            Ok(CellValue { center_radius: cell.center_radius, direction: cell.direction, radius: r, value, stderr })
        })
        .collect()
}

pub fn morrey_norm_mc<F>(f: &F, space: &MorreySpaceSpec, grid: &BallGrid, gp: &GroupParams, mc: &McSpec) -> Result<MorreyEstimate>
where
    F: Fn(&HPoint) -> f64 + Sync,
{
    Ok(MorreyEstimate::from_cells(&morrey_cells_mc(f, space, grid, gp, mc)?))
}

/// Compares the norm of `r ↦ F(t r)` on the grid scaled by `1/t` with
/// `t^{Qλ − γ_w/q + α(λ+1/q)}` times the norm of `F`, cell by cell.
pub fn verify_dilation(f: &RadialProfile, t_radius: f64, space: &MorreySpaceSpec, grid: &BallGrid, gp: &GroupParams, mc: &McSpec) -> Result<VerificationReport> {
    Ok(verify_dilations(f, &[t_radius], space, grid, gp, mc)?.remove(0))
}

/// [`verify_dilation`] for several factors sharing one evaluation of `F`.
pub fn verify_dilations(f: &RadialProfile, t_radii: &[f64], space: &MorreySpaceSpec, grid: &BallGrid, gp: &GroupParams, mc: &McSpec) -> Result<Vec<VerificationReport>> {
    const TOL: f64 = 1e-10;
    let start = Instant::now();
    let base = morrey_cells(f, space, grid, gp, mc)?;
    let nb = MorreyEstimate::from_cells(&base);
    let exponent = space.dilation_exponent(gp);
    let mut out = Vec::with_capacity(t_radii.len());
    for &t in t_radii {
        let factor = t.powf(exponent);
        let scaled = morrey_cells(&f.dilated(t)?, space, &grid.scaled(1.0 / t), gp, mc)?;
        let mut worst: f64 = 0.0;
        for (b, s) in base.iter().zip(&scaled) {
            let expect = factor * b.value;
            let dev = if expect == 0.0 { s.value.abs() } else { (s.value - expect).abs() / expect.abs() };
            worst = worst.max(dev);
        }
        let ns = MorreyEstimate::from_cells(&scaled);
        let mut report = VerificationReport::compare(format!("dilation t={t}"), factor * nb.value, ns.value, TOL)
            .with_note(format!("exponent Q*lambda - gamma_w/q + alpha*(lambda + 1/q) = {exponent}; rel_err is the worst cell"))
            .with_seed(mc.seed);
        report.rel_err = report.rel_err.max(worst);
        report.passed = report.passed && report.rel_err <= TOL;
        out.push(report.timed(start));
    }
    Ok(out)
}

/// Knots for tabulating an operator output around a truncation window.
pub fn output_knots(r_min: f64, r_max: f64, per_decade: usize) -> Vec<f64> {
    let lo = (r_min / 100.0).log10();
    let hi = (r_max * 100.0).log10();
    let count = ((hi - lo) * per_decade as f64).ceil() as usize + 1;
    let mut k: Vec<f64> = (0..count).map(|i| 10f64.powf(lo + (hi - lo) * i as f64 / (count - 1) as f64)).collect();
    k.push(r_min);
    k.push(r_max);
    k.sort_by(|a, b| a.partial_cmp(b).unwrap());
    k.dedup_by(|a, b| (*a - *b).abs() <= 1e-12 * b.abs());
    k
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct SharpnessOutcome {
    pub report: VerificationReport,
    pub ratio: f64,
    pub constant: f64,
    pub target_norm: MorreyEstimate,
    pub source_norms: Vec<MorreyEstimate>,
}

impl SharpnessOutcome {
    pub fn ratio_over_constant(&self) -> f64 {
        self.ratio / self.constant
    }
}

/// Upper slack allowed above the closed-form constant.
pub const SHARPNESS_UPPER_SLACK: f64 = 1e-3;
/// Lower bracket for `ratio / constant`.
pub const SHARPNESS_LOWER: f64 = 0.9;

/// `‖T(f_1,…,f_m)‖ / ∏ ‖f_j‖` for truncated extremizers `f_j`.
pub fn sharpness_ratio(
    kind: OperatorKind,
    p: &ParamSet,
    truncation: (f64, f64),
    grid: &BallGrid,
    gp: &GroupParams,
    spec: &QuadratureSpec,
    mc: &McSpec,
) -> Result<SharpnessOutcome> {
    let start = Instant::now();
    p.validate(true)?;
    if gp.n != p.n {
        return Err(Error::InvalidInput(format!("parameters are for n = {} but the group has n = {}", p.n, gp.n)));
    }
    let e = p.derive_exponents();
    let constant = closed_form(kind, &e, gp)?;
    let profiles: Vec<RadialProfile> =
        (1..=p.m).map(|j| extremizer_profile(&e, j, Some(truncation))).collect::<Result<_>>()?;
    let mut source_norms = Vec::with_capacity(p.m);
    for (j, f) in profiles.iter().enumerate() {
        source_norms.push(morrey_norm(f, &MorreySpaceSpec::source(p, j), grid, gp, mc)?);
    }
    let out = apply_tabulated(kind, &profiles, &output_knots(truncation.0, truncation.1, 64), gp, spec)?;
    let target_norm = morrey_norm(&out, &MorreySpaceSpec::target(p), grid, gp, mc)?;
    let denom: f64 = source_norms.iter().map(|s| s.value).product();
    let ratio = target_norm.value / denom;
    let mut report = VerificationReport::compare(
        format!("{kind} sharpness, truncation ({:e}, {:e})", truncation.0, truncation.1),
        constant.value,
        ratio,
        1.0 - SHARPNESS_LOWER,
    )
    .with_note("ratio of grid lower bounds of the Morrey norms; not a certified bound on the operator norm")
    .with_seed(mc.seed);
    report.passed &= ratio <= constant.value * (1.0 + SHARPNESS_UPPER_SLACK);
    Ok(SharpnessOutcome { report: report.timed(start), ratio, constant: constant.value, target_norm, source_norms })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::hgroup::ball_volume_constant;
    use std::f64::consts::PI;

    fn space() -> MorreySpaceSpec {
        MorreySpaceSpec { q: 2.0, lambda: -0.25, alpha: 0.0, gamma_w: 0.0 }
    }

    fn small_mc() -> McSpec {
        McSpec { samples: 2000, seed: 17, shards: 2 }
    }

    #[test]
    fn origin_cell_example() {
        let gp = ball_volume_constant(1).unwrap();
        let grid = BallGrid { center_radii: vec![0.0], center_directions: vec![], radii: vec![0.1, 1.0, 30.0] };
        let cells = morrey_cells(&RadialProfile::power(-1.0), &space(), &grid, &gp, &small_mc()).unwrap();
        let expect = 2f64.sqrt() * (PI * PI / 2.0).powf(0.25);
        for c in cells {
            assert!((c.value - expect).abs() < 1e-13 * expect, "{c:?}");
        }
    }

    #[test]
    fn plain_lq_norm_when_prefactor_vanishes() {
        let gp = ball_volume_constant(1).unwrap();
        let s = MorreySpaceSpec { q: 3.0, lambda: -1.0 / 3.0, alpha: 0.0, gamma_w: 0.0 };
        let grid = BallGrid { center_radii: vec![0.0], center_directions: vec![], radii: vec![0.5, 1.0, 2.0] };
        let f = RadialProfile::TruncatedPower { coef: 1.0, exponent: 0.0, r_min: 1e-300, r_max: 1.0 };
        let est = morrey_norm(&f, &s, &grid, &gp, &small_mc()).unwrap();
        assert!((est.value - gp.ball_volume.powf(1.0 / 3.0)).abs() < 1e-12, "{est:?} {}", gp.ball_volume.powf(1.0 / 3.0));
    }

    #[test]
    fn zero_profile() {
        let gp = ball_volume_constant(1).unwrap();
        let est = morrey_norm(&RadialProfile::zero(), &space(), &BallGrid::default_for(1).unwrap(), &gp, &small_mc()).unwrap();
        assert_eq!(est.value, 0.0);
    }

    #[test]
    fn dilation_is_exact() {
        let gp = ball_volume_constant(1).unwrap();
        let grid = BallGrid::default_for(1).unwrap();
        for t in [1.0, 2.0, 0.5] {
            let r = verify_dilation(&RadialProfile::power(-1.0), t, &space(), &grid, &gp, &small_mc()).unwrap();
            assert!(r.passed, "{r:?}");
            assert!((r.closed_form / r.oracle - 1.0).abs() < 1e-10);
        }
    }

    #[test]
    fn homogeneous_in_scalar_multiples() {
        let gp = ball_volume_constant(1).unwrap();
        let grid = BallGrid::default_for(1).unwrap();
        let f = RadialProfile::truncated_power(-1.5, 0.1, 5.0).unwrap();
        let a = morrey_norm(&f, &space(), &grid, &gp, &small_mc()).unwrap();
        let b = morrey_norm(&f.scaled(3.0).unwrap(), &space(), &grid, &gp, &small_mc()).unwrap();
        assert!((b.value - 3.0 * a.value).abs() < 1e-12 * b.value);
    }

    #[test]
    fn grid_validation() {
        let gp = ball_volume_constant(1).unwrap();
        let mut g = BallGrid::default_for(1).unwrap();
        g.radii.reverse();
        assert!(g.validate(&gp).is_err());
        let g = BallGrid { center_radii: vec![1.0], center_directions: vec![], radii: vec![1.0] };
        assert!(g.validate(&gp).is_err());
    }

    #[test]
    fn cell_streams_survive_scaling() {
        let g = BallGrid::default_for(1).unwrap();
        let a: Vec<u64> = g.cells(1).unwrap().iter().map(|c| c.stream).collect();
        let b: Vec<u64> = g.scaled(0.1).cells(1).unwrap().iter().map(|c| c.stream).collect();
        assert_eq!(a, b);
    }
}
