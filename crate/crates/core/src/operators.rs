//! The m-linear Hardy–Littlewood–Pólya and Hilbert operators on radial data,
//! their power extremizers, and radialization by sphere averaging.
//!
//! For radial inputs the output depends on `ρ = |x|_h` only. Writing
//! `M_j(r) = ∫_0^r F_j(t) t^{Q−1} dt`, the max kernel splits by which radius
//! is largest:
//!
//! `P(ρ) = ω^m [ ρ^{−Qm} ∏ M_j(ρ) + Σ_k ∫_ρ^∞ F_k(r) r^{Q−1−Qm} ∏_{j≠k} M_j(r) dr ]`.
//!
//! The sum kernel uses `A^{−m} = Γ(m)^{−1} ∫_0^∞ s^{m−1} e^{−sA} ds`, which
//! factorizes over the inputs:
//!
//! `P*(ρ) = ω^m / Γ(m) ∫_0^∞ s^{m−1} e^{−ρ^Q s} ∏ L_j(s) ds`,
//! `L_j(s) = ∫_0^∞ F_j(r) r^{Q−1} e^{−s r^Q} dr`.
//!
//! The outer integral is a trapezoid sum in `ln s` on a fixed lattice, so the
//! Laplace values are shared between all evaluation radii.

use std::collections::HashMap;
use std::sync::Mutex;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::hgroup::{dilate_unchecked, sample_unit_sphere, GroupParams, HPoint};
use crate::params::ExponentSet;
use crate::profile::{Antiderivative, RadialProfile, Tabulated};
use crate::quad::mc::shard_rng;
use crate::quad::{integrate, McEstimate, McSpec, QuadratureSpec};
use crate::specfun::gamma;
use crate::OperatorKind;

const MAX_M: usize = 4;
/// Lattice step in `ln s`.
const LAPLACE_STEP: f64 = 0.125;
const MAX_LATTICE_TERMS: usize = 40_000;

/// Operator with its inputs preprocessed for repeated evaluation.
pub struct Prepared<'a> {
    kind: OperatorKind,
    profiles: &'a [RadialProfile],
    gp: GroupParams,
    spec: QuadratureSpec,
    masses: Vec<Antiderivative>,
    breakpoints: Vec<f64>,
    laplace: Mutex<HashMap<i64, f64>>,
}

impl<'a> Prepared<'a> {
    pub fn new(kind: OperatorKind, profiles: &'a [RadialProfile], gp: &GroupParams, spec: &QuadratureSpec) -> Result<Self> {
        spec.validate()?;
        let m = profiles.len();
        if m == 0 || m > MAX_M {
            return Err(Error::InvalidInput(format!("operators take 1..={MAX_M} inputs, got {m}")));
        }
        let q = gp.q();
        let masses = match kind {
            OperatorKind::Hlp => profiles.iter().map(|p| p.antiderivative(1.0, q - 1.0)).collect::<Result<_>>()?,
            OperatorKind::Hilbert => Vec::new(),
        };
        let mut breakpoints: Vec<f64> = profiles.iter().flat_map(|p| p.breakpoints()).collect();
        breakpoints.sort_by(|a, b| a.partial_cmp(b).unwrap());
        breakpoints.dedup();
        Ok(Self { kind, profiles, gp: *gp, spec: *spec, masses, breakpoints, laplace: Mutex::new(HashMap::new()) })
    }

    pub fn value(&self, rho: f64) -> Result<f64> {
        if !(rho > 0.0) || !rho.is_finite() {
            return Err(Error::InvalidInput(format!("x_radius must be positive, got {rho}")));
        }
        if self.profiles.iter().any(|p| p.is_zero()) {
            return Ok(0.0);
        }
        match self.kind {
            OperatorKind::Hlp => self.hlp(rho),
            OperatorKind::Hilbert => self.hilbert(rho),
        }
    }

    fn mass(&self, j: usize, r: f64) -> Result<f64> {
        self.masses[j].between(0.0, r)
    }

    fn hlp(&self, rho: f64) -> Result<f64> {
        let q = self.gp.q();
        let m = self.profiles.len();
        let mf = m as f64;
        let inner: Vec<f64> = (0..m).map(|j| self.mass(j, rho)).collect::<Result<_>>()?;
        let mut total = rho.powf(-q * mf) * inner.iter().product::<f64>();
        let bps: Vec<f64> = self.breakpoints.iter().copied().filter(|b| *b > rho).collect();
        for k in 0..m {
            let g = |r: f64| {
                let fk = self.profiles[k].eval(r);
                if fk == 0.0 {
                    return 0.0;
                }
                let mut v = fk * r.powf(q - 1.0 - q * mf);
                for j in (0..m).filter(|&j| j != k) {
                    v *= self.mass(j, r).unwrap_or(f64::NAN);
                }
                v
            };
            total += integrate(&g, rho, f64::INFINITY, &bps, rho, &self.spec)?.value;
        }
        Ok(self.gp.sphere_constant.powi(m as i32) * total)
    }

    /// `L_j(e^{v_k})` for all inputs, multiplied together.
    fn laplace_product(&self, k: i64) -> Result<f64> {
        if let Some(v) = self.laplace.lock().unwrap().get(&k) {
            return Ok(*v);
        }
        let s = (k as f64 * LAPLACE_STEP).exp();
        let mut prod = 1.0;
        for p in self.profiles {
            prod *= laplace_transform(p, s, &self.gp, &self.spec)?;
        }
        self.laplace.lock().unwrap().insert(k, prod);
        Ok(prod)
    }

    fn hilbert(&self, rho: f64) -> Result<f64> {
        let q = self.gp.q();
        let m = self.profiles.len();
        let rq = rho.powf(q);
        let h = LAPLACE_STEP;
        let term = |k: i64| -> Result<f64> {
            let v = k as f64 * h;
            let s = v.exp();
            let decay = -rq * s;
            if decay < -745.0 {
                return Ok(0.0);
            }
            Ok((m as f64 * v + decay).exp() * self.laplace_product(k)?)
        };
        // start near the peak of e^{−ρ^Q s}
        let k0 = (-(rq.ln()) / h).round() as i64;
        let mut sum = term(k0)?;
        // upward: super-exponential decay
        let mut k = k0 + 1;
        loop {
            let t = term(k)?;
            sum += t;
            if t <= 1e-18 * sum.abs() && k > k0 + 8 && (sum > 0.0 || k > k0 + 400) {
                break;
            }
            k += 1;
            if (k - k0) as usize > MAX_LATTICE_TERMS {
                return Err(Error::NotConverged("Laplace sum does not decay for large s".into()));
            }
        }
        // downward: geometric once the small-s behaviour is a power
        let mut k = k0 - 1;
        let mut prev: Option<f64> = None;
        let mut prev_ratio: Option<f64> = None;
        loop {
            let t = term(k)?;
            if !t.is_finite() {
                return Err(Error::Divergence("operator integral is not finite near the origin".into()));
            }
            sum += t;
            if t <= 1e-18 * sum.abs() && k < k0 - 8 && sum > 0.0 {
                break;
            }
            if let Some(p) = prev {
                if p > 0.0 {
                    let r = t / p;
                    if let Some(pr) = prev_ratio {
                        let settled = (r - pr).abs() <= 1e-10 * r.abs();
                        if settled && r >= 1.0 {
                            return Err(Error::Divergence("operator integral diverges at small s".into()));
                        }
                        if settled {
                            sum += t * r / (1.0 - r);
                            break;
                        }
                    }
                    prev_ratio = Some(r);
                }
            }
            prev = Some(t);
            k -= 1;
            if (k0 - k) as usize > MAX_LATTICE_TERMS {
                return Err(Error::Divergence("Laplace sum does not decay for small s".into()));
            }
        }
        let norm = self.gp.sphere_constant.powi(m as i32) / gamma(m as f64)?;
        Ok(norm * h * sum)
    }
}

/// ∫_0^∞ f(r) r^{Q−1} e^{−s r^Q} dr.
fn laplace_transform(p: &RadialProfile, s: f64, gp: &GroupParams, spec: &QuadratureSpec) -> Result<f64> {
    let q = gp.q();
    if let RadialProfile::Power { coef, exponent } = p {
        let b = (exponent + q) / q;
        if b <= 0.0 {
            return Err(Error::Divergence(format!("input r^{exponent} is not integrable at the origin")));
        }
        return Ok(coef * gamma(b)? / (q * s.powf(b)));
    }
    let g = |r: f64| {
        let f = p.eval(r);
        if f == 0.0 {
            return 0.0;
        }
        let e = s * r.powf(q);
        if e > 745.0 {
            0.0
        } else {
            f * r.powf(q - 1.0) * (-e).exp()
        }
    };
    let scale = s.powf(-1.0 / q);
    let mut bps = p.breakpoints();
    bps.push(scale);
    Ok(integrate(&g, 0.0, f64::INFINITY, &bps, scale, spec)?.value)
}

/// Value of the operator at any point with `|x|_h = x_radius`.
pub fn apply(kind: OperatorKind, profiles: &[RadialProfile], x_radius: f64, gp: &GroupParams, spec: &QuadratureSpec) -> Result<f64> {
    Prepared::new(kind, profiles, gp, spec)?.value(x_radius)
}

/// The operator output tabulated on `knots` (log-log interpolated, extended
/// as powers to 0 and ∞).
pub fn apply_tabulated(kind: OperatorKind, profiles: &[RadialProfile], knots: &[f64], gp: &GroupParams, spec: &QuadratureSpec) -> Result<RadialProfile> {
    let prep = Prepared::new(kind, profiles, gp, spec)?;
    let values: Vec<f64> = knots.iter().map(|r| prep.value(*r)).collect::<Result<_>>()?;
    Ok(RadialProfile::Tabulated(Tabulated::with_cutoffs(knots.to_vec(), values, 0.0, f64::INFINITY)?))
}

/// `|x|_h^{σ_j}`, optionally restricted to `r_min ≤ |x|_h ≤ r_max`. `j` is 1-based.
pub fn extremizer_profile(e: &ExponentSet, j: usize, truncation: Option<(f64, f64)>) -> Result<RadialProfile> {
    if j == 0 || j > e.m() {
        return Err(Error::InvalidInput(format!("factor index {j} is outside 1..={}", e.m())));
    }
    let s = e.sigma_list[j - 1];
    match truncation {
        None => Ok(RadialProfile::power(s)),
        Some((lo, hi)) => RadialProfile::truncated_power(s, lo, hi),
    }
}

/// Sphere-averaged profile with the Monte Carlo standard error at each knot.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct Radialization {
    pub profile: RadialProfile,
    pub stderr: Vec<f64>,
}

pub const RADIAL_KNOTS: usize = 600;
pub const RADIAL_RANGE: (f64, f64) = (1e-3, 40.0);

pub fn log_knots(lo: f64, hi: f64, count: usize) -> Vec<f64> {
    let (a, b) = (lo.ln(), hi.ln());
    (0..count).map(|i| (a + (b - a) * i as f64 / (count - 1) as f64).exp()).collect()
}

/// `g(r) = (1/ω) ∫_{|ξ|_h=1} f(δ_r ξ) dξ` on the default knots.
pub fn radialize<F>(f: &F, gp: &GroupParams, mc: &McSpec) -> Result<Radialization>
where
    F: Fn(&HPoint) -> f64 + Sync,
{
    radialize_on(f, &log_knots(RADIAL_RANGE.0, RADIAL_RANGE.1, RADIAL_KNOTS), gp, mc)
}

/// As [`radialize`] on the given knots. All knots share the same sphere
/// samples, so the profile is smooth in `r`.
pub fn radialize_on<F>(f: &F, knots: &[f64], gp: &GroupParams, mc: &McSpec) -> Result<Radialization>
where
    F: Fn(&HPoint) -> f64 + Sync,
{
    mc.validate()?;
    let n = gp.n;
    let k = mc.shards.min(mc.samples);
    let sizes: Vec<usize> = (0..k).map(|i| mc.samples / k + usize::from(i < mc.samples % k)).collect();
    let parts: Vec<Result<(Vec<f64>, Vec<f64>)>> = sizes
        .par_iter()
        .enumerate()
        .map(|(shard, &len)| {
            let mut rng = shard_rng(mc.seed, 1, shard);
            let mut sum = vec![0.0; knots.len()];
            let mut sumsq = vec![0.0; knots.len()];
            for _ in 0..len {
                let xi = sample_unit_sphere(&mut rng, n);
                for (i, r) in knots.iter().enumerate() {
                    let v = f(&dilate_unchecked(*r, &xi));
                    if !v.is_finite() {
                        return Err(Error::Sampling(format!("function is not finite at radius {r}")));
                    }
                    sum[i] += v;
                    sumsq[i] += v * v;
                }
            }
            Ok((sum, sumsq))
        })
        .collect();
    let mut sum = vec![0.0; knots.len()];
    let mut sumsq = vec![0.0; knots.len()];
    for p in parts {
        let (s, s2) = p?;
        for i in 0..knots.len() {
            sum[i] += s[i];
            sumsq[i] += s2[i];
        }
    }
    let nf = mc.samples as f64;
    let mut values = Vec::with_capacity(knots.len());
    let mut stderr = Vec::with_capacity(knots.len());
    for i in 0..knots.len() {
        let mean = sum[i] / nf;
        let var = (sumsq[i] / nf - mean * mean).max(0.0) * nf / (nf - 1.0);
        if mean < 0.0 {
            return Err(Error::InvalidInput("radialization expects a nonnegative function".into()));
        }
        values.push(mean);
        stderr.push((var / nf).sqrt());
    }
    if values.iter().all(|v| *v == 0.0) {
        return Ok(Radialization { profile: RadialProfile::zero(), stderr });
    }
    let profile = RadialProfile::Tabulated(Tabulated::with_cutoffs(knots.to_vec(), values, 0.0, f64::INFINITY)?);
    Ok(Radialization { profile, stderr })
}

/// Monte Carlo value of the operator on arbitrary (not necessarily radial)
/// inputs at the point `x_radius · e_1`.
///
/// Each `y_j = δ_{r_j} ξ_j` with `r_j ~ Gamma(Q, 1)` and `ξ_j` on the unit
/// sphere, i.e. density `e^{−|y|_h} / (ω Γ(Q))` on ℍⁿ.
pub fn apply_mc(kind: OperatorKind, fs: &[&(dyn Fn(&HPoint) -> f64 + Sync)], x_radius: f64, gp: &GroupParams, mc: &McSpec) -> Result<McEstimate> {
    mc.validate()?;
    let m = fs.len();
    if m == 0 || m > MAX_M {
        return Err(Error::InvalidInput(format!("operators take 1..={MAX_M} inputs, got {m}")));
    }
    if !(x_radius > 0.0) || !x_radius.is_finite() {
        return Err(Error::InvalidInput(format!("x_radius must be positive, got {x_radius}")));
    }
    let q = gp.q();
    let qd = gp.q_dim;
    let inv_density = gp.sphere_constant * gamma(q)?;
    let rq = x_radius.powf(q);
    let k = mc.shards.min(mc.samples);
    let sizes: Vec<usize> = (0..k).map(|i| mc.samples / k + usize::from(i < mc.samples % k)).collect();
    let parts: Vec<(f64, f64)> = sizes
        .par_iter()
        .enumerate()
        .map(|(shard, &len)| {
            use rand::Rng;
            let mut rng = shard_rng(mc.seed, 2, shard);
            let (mut s1, mut s2) = (0.0, 0.0);
            for _ in 0..len {
                let mut weight = 1.0;
                let mut kmax = rq;
                let mut ksum = rq;
                for f in fs {
                    let r: f64 = -(0..qd).map(|_| (1.0 - rng.random::<f64>()).ln()).sum::<f64>();
                    let xi = sample_unit_sphere(&mut rng, gp.n);
                    let y = dilate_unchecked(r, &xi);
                    weight *= f(&y) * inv_density * r.exp();
                    let rq_j = r.powf(q);
                    kmax = kmax.max(rq_j);
                    ksum += rq_j;
                }
                let kernel = match kind {
                    OperatorKind::Hlp => kmax.powi(-(m as i32)),
                    OperatorKind::Hilbert => ksum.powi(-(m as i32)),
                };
                let v = weight * kernel;
                s1 += v;
                s2 += v * v;
            }
            (s1, s2)
        })
        .collect();
    let (mut s1, mut s2) = (0.0, 0.0);
    for (a, b) in parts {
        s1 += a;
        s2 += b;
    }
    let nf = mc.samples as f64;
    let mean = s1 / nf;
    let var = (s2 / nf - mean * mean).max(0.0) * nf / (nf - 1.0);
    Ok(McEstimate { estimate: mean, stderr: (var / nf).sqrt(), samples: mc.samples, accepted: mc.samples })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::constants::{hilbert_closed_form, hlp_closed_form};
    use crate::hgroup::{ball_volume_constant, hnorm};
    use std::f64::consts::PI;

    fn rel(a: f64, b: f64) -> f64 {
        (a - b).abs() / b.abs()
    }

    #[test]
    fn hlp_single_power() {
        let gp = ball_volume_constant(1).unwrap();
        let spec = QuadratureSpec::default();
        let p = [RadialProfile::power(-2.0)];
        assert!(rel(apply(OperatorKind::Hlp, &p, 1.0, &gp, &spec).unwrap(), 2.0 * PI * PI) < 1e-10);
        assert!(rel(apply(OperatorKind::Hlp, &p, 2.0, &gp, &spec).unwrap(), PI * PI / 2.0) < 1e-10);
    }

    #[test]
    fn extremizer_gives_constant() {
        let gp = ball_volume_constant(1).unwrap();
        let spec = QuadratureSpec::default();
        for s in [vec![-2.0], vec![-1.0], vec![-0.5, -0.5], vec![-0.3, -1.1, -0.4]] {
            let e = ExponentSet::from_sigmas(4, s.clone());
            let ps: Vec<_> = (1..=e.m()).map(|j| extremizer_profile(&e, j, None).unwrap()).collect();
            let a = apply(OperatorKind::Hlp, &ps, 1.0, &gp, &spec).unwrap();
            assert!(rel(a, hlp_closed_form(&e, &gp).unwrap().value) < 1e-8, "{s:?} {a}");
            let b = apply(OperatorKind::Hilbert, &ps, 1.0, &gp, &spec).unwrap();
            assert!(rel(b, hilbert_closed_form(&e, &gp).unwrap().value) < 1e-8, "{s:?} {b}");
        }
    }

    #[test]
    fn zero_input() {
        let gp = ball_volume_constant(1).unwrap();
        let p = [RadialProfile::zero(), RadialProfile::power(-1.0)];
        for kind in [OperatorKind::Hlp, OperatorKind::Hilbert] {
            assert_eq!(apply(kind, &p, 1.0, &gp, &QuadratureSpec::default()).unwrap(), 0.0);
        }
    }

    #[test]
    fn truncated_inputs_bracketed_by_kernels() {
        let gp = ball_volume_constant(2).unwrap();
        let spec = QuadratureSpec::default();
        let p = [
            RadialProfile::truncated_power(-1.0, 0.1, 10.0).unwrap(),
            RadialProfile::truncated_power(-2.0, 0.5, 3.0).unwrap(),
        ];
        for rho in [0.05, 0.7, 2.0, 20.0] {
            let a = apply(OperatorKind::Hlp, &p, rho, &gp, &spec).unwrap();
            let b = apply(OperatorKind::Hilbert, &p, rho, &gp, &spec).unwrap();
            assert!(b <= a * (1.0 + 1e-9) && b >= a / 9.0 * (1.0 - 1e-9), "{rho}: {a} {b}");
        }
    }

    #[test]
    fn hilbert_truncated_single_input_direct() {
        // m = 1: ω ∫ r^{σ+Q−1} / (ρ^Q + r^Q) dr by direct quadrature
        let gp = ball_volume_constant(1).unwrap();
        let spec = QuadratureSpec::default();
        let p = [RadialProfile::truncated_power(-1.0, 0.2, 5.0).unwrap()];
        let rho: f64 = 0.8;
        let g = |r: f64| r.powf(2.0) / (rho.powi(4) + r.powi(4));
        let direct = gp.sphere_constant * integrate(&g, 0.2, 5.0, &[], 1.0, &spec).unwrap().value;
        let v = apply(OperatorKind::Hilbert, &p, rho, &gp, &spec).unwrap();
        assert!(rel(v, direct) < 1e-9, "{v} {direct}");
    }

    #[test]
    fn divergent_inputs() {
        let gp = ball_volume_constant(1).unwrap();
        let spec = QuadratureSpec::default();
        let p = [RadialProfile::power(0.5)];
        assert!(matches!(apply(OperatorKind::Hlp, &p, 1.0, &gp, &spec), Err(Error::Divergence(_))));
        assert!(matches!(apply(OperatorKind::Hilbert, &p, 1.0, &gp, &spec), Err(Error::Divergence(_))));
        let p = [RadialProfile::power(-4.5)];
        assert!(apply(OperatorKind::Hlp, &p, 1.0, &gp, &spec).is_err());
        assert!(apply(OperatorKind::Hilbert, &p, 1.0, &gp, &spec).is_err());
    }

    #[test]
    fn extremizer_indexing() {
        let e = ExponentSet::from_sigmas(4, vec![-1.0]);
        assert_eq!(extremizer_profile(&e, 1, None).unwrap(), RadialProfile::power(-1.0));
        assert_eq!(
            extremizer_profile(&e, 1, Some((1e-3, 1e3))).unwrap(),
            RadialProfile::truncated_power(-1.0, 1e-3, 1e3).unwrap()
        );
        assert!(extremizer_profile(&e, 2, None).is_err());
        assert!(extremizer_profile(&e, 0, None).is_err());
    }

    #[test]
    fn radialize_examples() {
        let gp = ball_volume_constant(1).unwrap();
        let mc = McSpec { samples: 4000, seed: 5, shards: 4 };
        let knots = log_knots(0.01, 10.0, 25);
        let rad = radialize_on(&|x: &HPoint| (-hnorm(x)).exp(), &knots, &gp, &mc).unwrap();
        for (i, r) in knots.iter().enumerate() {
            assert!(rel(rad.profile.eval(*r), (-r).exp()) < 1e-12);
            assert!(rad.stderr[i] < 1e-6 * (-r).exp());
        }
        let half = |x: &HPoint| if x.coords()[0] > 0.0 { 1.0 / hnorm(x) } else { 0.0 };
        let rad = radialize_on(&half, &knots, &gp, &mc).unwrap();
        for (i, r) in knots.iter().enumerate() {
            assert!((rad.profile.eval(*r) - 0.5 / r).abs() <= 3.0 * rad.stderr[i], "{r}");
        }
        let zero = radialize_on(&|_: &HPoint| 0.0, &knots, &gp, &mc).unwrap();
        assert!(zero.profile.is_zero());
    }

    #[test]
    fn mc_matches_quadrature_for_radial_inputs() {
        let gp = ball_volume_constant(1).unwrap();
        let f = |x: &HPoint| (-hnorm(x)).exp();
        let prof = radialize_on(&f, &log_knots(1e-3, 60.0, 400), &gp, &McSpec { samples: 1000, seed: 1, shards: 1 }).unwrap().profile;
        let mc = McSpec { samples: 100_000, seed: 3, shards: 4 };
        for kind in [OperatorKind::Hlp, OperatorKind::Hilbert] {
            let exact = apply(kind, &[prof.clone()], 0.7, &gp, &QuadratureSpec::default()).unwrap();
            let est = apply_mc(kind, &[&f], 0.7, &gp, &mc).unwrap();
            assert!((est.estimate - exact).abs() < 4.0 * est.stderr + 1e-4 * exact, "{kind}: {est:?} {exact}");
        }
    }
}
