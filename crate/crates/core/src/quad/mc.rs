//! Monte Carlo integration over Heisenberg balls.
//!
//! Every shard draws from its own ChaCha stream keyed by `(seed, stream, shard)`
//! and shard results are combined in shard order, so estimates are
//! bit-reproducible regardless of thread scheduling.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::hgroup::{box_volume, group_mul, hdist, sample_box, sample_unit_sphere, GroupParams, HPoint};

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct McSpec {
    pub samples: usize,
    pub seed: u64,
    pub shards: usize,
}

impl Default for McSpec {
    fn default() -> Self {
        Self { samples: 20_000, seed: 0x5eed_2024, shards: 16 }
    }
}

impl McSpec {
    pub fn validate(&self) -> Result<()> {
        if self.samples < 1000 {
            return Err(Error::InvalidInput(format!("samples = {} must be at least 1000", self.samples)));
        }
        if self.shards == 0 {
            return Err(Error::InvalidInput("shards must be positive".into()));
        }
        Ok(())
    }

    fn shard_sizes(&self) -> Vec<usize> {
        let k = self.shards.min(self.samples);
        (0..k).map(|i| self.samples / k + usize::from(i < self.samples % k)).collect()
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct McEstimate {
    pub estimate: f64,
    pub stderr: f64,
    pub samples: usize,
    pub accepted: usize,
}

/// Generator for one shard; `stream` separates independent uses of the same seed.
pub fn shard_rng(seed: u64, stream: u64, shard: usize) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream((stream << 16) | shard as u64);
    rng
}

#[derive(Clone, Copy, Default)]
struct Moments {
    n: usize,
    hits: usize,
    sum: f64,
    sumsq: f64,
}

impl Moments {
    fn push(&mut self, v: f64) {
        self.n += 1;
        self.sum += v;
        self.sumsq += v * v;
    }

    fn merge(self, o: Moments) -> Moments {
        Moments { n: self.n + o.n, hits: self.hits + o.hits, sum: self.sum + o.sum, sumsq: self.sumsq + o.sumsq }
    }

    /// Mean and standard error of the mean, both multiplied by `scale`.
    fn finish(self, scale: f64) -> (f64, f64) {
        let n = self.n as f64;
        let mean = self.sum / n;
        let var = ((self.sumsq / n - mean * mean).max(0.0)) * n / (n - 1.0).max(1.0);
        (scale * mean, scale * (var / n).sqrt())
    }
}

fn run_shards<F>(mc: &McSpec, stream: u64, body: F) -> Result<Moments>
where
    F: Fn(&mut ChaCha8Rng, usize) -> Result<Moments> + Sync,
{
    let sizes = mc.shard_sizes();
    let parts: Vec<Result<Moments>> = sizes
        .par_iter()
        .enumerate()
        .map(|(i, &len)| body(&mut shard_rng(mc.seed, stream, i), len))
        .collect();
    let mut total = Moments::default();
    for p in parts {
        total = total.merge(p?);
    }
    Ok(total)
}

/// `∫_{B(center, radius)} f dx` by uniform sampling of a bounding box.
///
/// Points `y = center ∘ z` with `z` uniform in `[−R, R]^{2n} × [−R², R²]`
/// cover the ball (left translation preserves Lebesgue measure); membership is
/// decided by `hdist(y, center) < R`.
pub fn mc_ball_integral<F>(f: &F, center: &HPoint, radius: f64, gp: &GroupParams, mc: &McSpec) -> Result<McEstimate>
where
    F: Fn(&HPoint) -> f64 + Sync,
{
    mc_ball_integral_stream(f, center, radius, gp, mc, 0)
}

/// As [`mc_ball_integral`] with an explicit RNG stream index.
pub fn mc_ball_integral_stream<F>(
    f: &F,
    center: &HPoint,
    radius: f64,
    gp: &GroupParams,
    mc: &McSpec,
    stream: u64,
) -> Result<McEstimate>
where
    F: Fn(&HPoint) -> f64 + Sync,
{
    mc.validate()?;
    check_ball(center, radius, gp)?;
    let n = gp.n;
    let m = run_shards(mc, stream, |rng, len| {
        let mut acc = Moments::default();
        for _ in 0..len {
            let z = sample_box(rng, n, radius);
            let y = group_mul(center, &z)?;
            if hdist(&y, center)? < radius {
                acc.hits += 1;
                let v = f(&y);
                if !v.is_finite() {
                    return Err(Error::Sampling(format!("integrand is not finite at {:?}", y.coords())));
                }
                acc.push(v);
            } else {
                acc.push(0.0);
            }
        }
        Ok(acc)
    })?;
    if (m.hits as f64) < 1e-4 * m.n as f64 {
        return Err(Error::Sampling(format!("acceptance ratio {} / {} is below 1e-4", m.hits, m.n)));
    }
    let (estimate, stderr) = m.finish(box_volume(n, radius));
    Ok(McEstimate { estimate, stderr, samples: m.n, accepted: m.hits })
}

fn check_ball(center: &HPoint, radius: f64, gp: &GroupParams) -> Result<()> {
    if center.n() != gp.n {
        return Err(Error::InvalidInput(format!("center lives in H^{} but the group is H^{}", center.n(), gp.n)));
    }
    if !(radius > 0.0) || !radius.is_finite() {
        return Err(Error::InvalidInput(format!("ball radius must be positive, got {radius}")));
    }
    Ok(())
}

/// Radii `r` (as disjoint sorted intervals) for which `δ_r ξ ∈ B(a, R)`.
///
/// Membership is the sign of the quartic
/// `P(r) = |r ξ_h − a_h|⁴ + (ξ_v r² + c r − a_v)² − R⁴`,
/// `c = 2 Σ_j (a_j ξ_{n+j} − a_{n+j} ξ_j)`. Roots are isolated through the
/// roots of the derivatives and refined by bisection on the factored form.
pub fn ray_intervals(xi: &HPoint, a: &HPoint, radius: f64) -> Vec<(f64, f64)> {
    let n = xi.n();
    let (x, y) = (xi.coords(), a.coords());
    let c: f64 = 2.0 * (0..n).map(|j| y[j] * x[n + j] - y[n + j] * x[j]).sum::<f64>();
    let xv = xi.vertical();
    let av = a.vertical();
    let r4 = radius.powi(4);
    let eval = |r: f64| -> f64 {
        let h: f64 = (0..2 * n).map(|i| (r * x[i] - y[i]).powi(2)).sum();
        let v = xv * r * r + c * r - av;
        h * h + v * v - r4
    };
    // expanded coefficients, lowest degree first
    let pa = xi.horizontal_sq();
    let pb = -2.0 * (0..2 * n).map(|i| x[i] * y[i]).sum::<f64>();
    let pc = a.horizontal_sq();
    let sq = |p: f64, q: f64, s: f64| [s * s, 2.0 * q * s, q * q + 2.0 * p * s, 2.0 * p * q, p * p];
    let h2 = sq(pa, pb, pc);
    let v2 = sq(xv, c, -av);
    let mut coef: Vec<f64> = (0..5).map(|i| h2[i] + v2[i]).collect();
    coef[0] -= r4;

    let hi = crate::hgroup::hnorm(a) + radius;
    let roots = poly_roots(&coef, 0.0, hi, &eval);
    let mut pts = vec![0.0];
    pts.extend(roots);
    pts.push(hi);
    let mut out: Vec<(f64, f64)> = Vec::new();
    for w in pts.windows(2) {
        let (lo, up) = (w[0], w[1]);
        if up <= lo {
            continue;
        }
        if eval(0.5 * (lo + up)) < 0.0 {
            match out.last_mut() {
                Some(last) if last.1 == lo => last.1 = up,
                _ => out.push((lo, up)),
            }
        }
    }
    out
}

fn poly_eval(c: &[f64], r: f64) -> f64 {
    c.iter().rev().fold(0.0, |acc, k| acc * r + k)
}

/// Sign changes of the polynomial on `[lo, hi]`; `eval` is used for the final refinement.
fn poly_roots(c: &[f64], lo: f64, hi: f64, eval: &dyn Fn(f64) -> f64) -> Vec<f64> {
    let mut c = c.to_vec();
    while c.len() > 1 && *c.last().unwrap() == 0.0 {
        c.pop();
    }
    if c.len() <= 1 {
        return Vec::new();
    }
    let deriv: Vec<f64> = c.iter().enumerate().skip(1).map(|(i, k)| i as f64 * k).collect();
    let crit = if deriv.len() > 1 { poly_roots(&deriv, lo, hi, &|r| poly_eval(&deriv, r)) } else { Vec::new() };
    let mut pts = vec![lo];
    pts.extend(crit);
    pts.push(hi);
    let mut roots = Vec::new();
    for w in pts.windows(2) {
        let (mut a, mut b) = (w[0], w[1]);
        let (fa, fb) = (eval(a), eval(b));
        if fa == 0.0 {
            roots.push(a);
            continue;
        }
        if fa.signum() == fb.signum() || b <= a {
            continue;
        }
        let sa = fa.signum();
        for _ in 0..200 {
            let mid = 0.5 * (a + b);
            if mid <= a || mid >= b {
                break;
            }
            let fm = eval(mid);
            if fm == 0.0 {
                a = mid;
                b = mid;
                break;
            }
            if fm.signum() == sa {
                a = mid;
            } else {
                b = mid;
            }
        }
        roots.push(0.5 * (a + b));
    }
    roots.sort_by(|x, y| x.partial_cmp(y).unwrap());
    roots.dedup();
    roots
}

/// `∫_{B(center, radius)} F(|x|_h) dx` for a radial `F`, given
/// `radial(lo, hi) = ∫_lo^hi F(r) r^{Q−1} dr`.
///
/// Each sample is a direction `ξ` on the unit sphere; the exact radial
/// integral over the chord `{r : δ_r ξ ∈ B}` is averaged and multiplied by
/// the sphere constant. Singularities of `F` at the origin are integrated
/// exactly along each ray, so the variance stays bounded.
pub fn mc_radial_ball_integral<G>(
    radial: &G,
    center: &HPoint,
    radius: f64,
    gp: &GroupParams,
    mc: &McSpec,
    stream: u64,
) -> Result<McEstimate>
where
    G: Fn(f64, f64) -> Result<f64> + Sync,
{
    Ok(mc_radial_ball_integrals(&[radial as &RadialFn], center, radius, gp, mc, stream)?[0])
}

pub type RadialFn<'a> = dyn Fn(f64, f64) -> Result<f64> + Sync + 'a;

/// Several radial integrals over the same ball from the same directions.
pub fn mc_radial_ball_integrals(
    radials: &[&RadialFn],
    center: &HPoint,
    radius: f64,
    gp: &GroupParams,
    mc: &McSpec,
    stream: u64,
) -> Result<Vec<McEstimate>> {
    mc.validate()?;
    check_ball(center, radius, gp)?;
    let n = gp.n;
    let k = radials.len();
    let sizes = mc.shard_sizes();
    let parts: Vec<Result<Vec<Moments>>> = sizes
        .par_iter()
        .enumerate()
        .map(|(shard, &len)| {
            let mut rng = shard_rng(mc.seed, stream, shard);
            let mut acc = vec![Moments::default(); k];
            let mut v = vec![0.0; k];
            for _ in 0..len {
                let xi = sample_unit_sphere(&mut rng, n);
                v.iter_mut().for_each(|x| *x = 0.0);
                for (lo, hi) in ray_intervals(&xi, center, radius) {
                    for (i, g) in radials.iter().enumerate() {
                        v[i] += g(lo, hi)?;
                    }
                }
                for i in 0..k {
                    if !v[i].is_finite() {
                        return Err(Error::Sampling("ray contribution is not finite".into()));
                    }
                    if v[i] != 0.0 {
                        acc[i].hits += 1;
                    }
                    acc[i].push(v[i]);
                }
            }
            Ok(acc)
        })
        .collect();
    let mut total = vec![Moments::default(); k];
    for p in parts {
        for (t, m) in total.iter_mut().zip(p?) {
            *t = t.merge(m);
        }
    }
    Ok(total
        .into_iter()
        .map(|m| {
            let (estimate, stderr) = m.finish(gp.sphere_constant);
            McEstimate { estimate, stderr, samples: m.n, accepted: m.hits }
        })
        .collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::hgroup::{ball_volume_constant, dilate, hnorm};
    use rand::Rng;
    use std::f64::consts::PI;

    fn spec(samples: usize, seed: u64) -> McSpec {
        McSpec { samples, seed, shards: 8 }
    }

    #[test]
    fn unit_ball_volume() {
        let gp = ball_volume_constant(1).unwrap();
        let est = mc_ball_integral(&|_: &HPoint| 1.0, &HPoint::origin(1), 1.0, &gp, &spec(200_000, 1)).unwrap();
        assert!((est.estimate - PI * PI / 2.0).abs() < 3.0 * est.stderr, "{est:?}");
        let est = mc_ball_integral(&|_: &HPoint| 1.0, &HPoint::origin(1), 2.0, &gp, &spec(200_000, 2)).unwrap();
        assert!((est.estimate - 16.0 * PI * PI / 2.0).abs() < 3.0 * est.stderr, "{est:?}");
    }

    #[test]
    fn zero_integrand() {
        let gp = ball_volume_constant(1).unwrap();
        let est = mc_ball_integral(&|_: &HPoint| 0.0, &HPoint::origin(1), 1.0, &gp, &spec(1000, 3)).unwrap();
        assert_eq!((est.estimate, est.stderr), (0.0, 0.0));
    }

    #[test]
    fn reproducible_and_rejects_small_budgets() {
        let gp = ball_volume_constant(1).unwrap();
        let c = HPoint::new(1, vec![0.3, -0.2, 0.5]).unwrap();
        let f = |x: &HPoint| hnorm(x);
        let a = mc_ball_integral(&f, &c, 1.0, &gp, &spec(5000, 9)).unwrap();
        let b = mc_ball_integral(&f, &c, 1.0, &gp, &spec(5000, 9)).unwrap();
        assert_eq!(a, b);
        assert!(mc_ball_integral(&f, &c, 1.0, &gp, &spec(999, 9)).is_err());
    }

    #[test]
    fn ray_intervals_match_membership() {
        let mut rng = shard_rng(7, 0, 0);
        for n in 1..=2 {
            for _ in 0..200 {
                let xi = sample_unit_sphere(&mut rng, n);
                let a = crate::hgroup::sample_box(&mut rng, n, 1.5);
                let radius = 0.2 + rng.random::<f64>();
                let iv = ray_intervals(&xi, &a, radius);
                for k in 0..400 {
                    let r = (k as f64 + 0.5) / 400.0 * (hnorm(&a) + radius);
                    let inside = hdist(&dilate(r, &xi).unwrap(), &a).unwrap() < radius;
                    let listed = iv.iter().any(|&(lo, hi)| r > lo && r < hi);
                    let near = iv.iter().any(|&(lo, hi)| (r - lo).abs() < 1e-9 || (r - hi).abs() < 1e-9);
                    assert!(inside == listed || near, "r={r} intervals={iv:?}");
                }
            }
        }
    }

    #[test]
    fn ray_estimator_volume() {
        let gp = ball_volume_constant(1).unwrap();
        let qm1 = gp.q() - 1.0;
        let vol = |lo: f64, hi: f64| Ok((hi.powf(qm1 + 1.0) - lo.powf(qm1 + 1.0)) / (qm1 + 1.0));
        for (norm, radius) in [(0.0f64, 1.0), (1.0, 0.5), (5.0, 2.0)] {
            let c = if norm == 0.0 { HPoint::origin(1) } else { dilate(norm, &HPoint::axis(1, 0).unwrap()).unwrap() };
            let est = mc_radial_ball_integral(&vol, &c, radius, &gp, &spec(40_000, 11), 0).unwrap();
            let exact = gp.ball_measure(radius);
            assert!((est.estimate - exact).abs() < 3.0 * est.stderr + 1e-9 * exact, "{norm} {radius} {est:?} {exact}");
        }
    }
}
