//! Heisenberg group ℍⁿ realised on ℝ^{2n+1}: group law, dilations, the
//! Korányi-type homogeneous norm and the left-invariant distance it induces.
//!
//! Coordinates are a flat vector; indices `0..2n` are horizontal and index
//! `2n` is the vertical (central) coordinate.

use std::f64::consts::PI;
use std::time::Instant;

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::report::VerificationReport;
use crate::specfun::gamma;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct HPoint {
    n: usize,
    coords: Vec<f64>,
}

impl HPoint {
    pub fn new(n: usize, coords: Vec<f64>) -> Result<Self> {
        if n == 0 {
            return Err(Error::InvalidInput("group dimension n must be at least 1".into()));
        }
        if coords.len() != 2 * n + 1 {
            return Err(Error::InvalidInput(format!(
                "point in H^{n} needs {} coordinates, got {}",
                2 * n + 1,
                coords.len()
            )));
        }
        if coords.iter().any(|c| !c.is_finite()) {
            return Err(Error::InvalidInput("coordinates must be finite".into()));
        }
        Ok(Self { n, coords })
    }

    pub fn origin(n: usize) -> Self {
        Self { n, coords: vec![0.0; 2 * n + 1] }
    }

    /// Unit vector along coordinate `axis` (norm 1 for every axis).
    pub fn axis(n: usize, axis: usize) -> Result<Self> {
        let mut p = Self::origin(n);
        if axis > 2 * n {
            return Err(Error::InvalidInput(format!("axis {axis} out of range for H^{n}")));
        }
        p.coords[axis] = 1.0;
        Ok(p)
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn coords(&self) -> &[f64] {
        &self.coords
    }

    pub fn horizontal(&self) -> &[f64] {
        &self.coords[..2 * self.n]
    }

    pub fn vertical(&self) -> f64 {
        self.coords[2 * self.n]
    }

    /// Squared Euclidean length of the horizontal part.
    pub fn horizontal_sq(&self) -> f64 {
        self.horizontal().iter().map(|c| c * c).sum()
    }

    fn check_same(&self, other: &Self) -> Result<()> {
        if self.n != other.n {
            return Err(Error::InvalidInput(format!(
                "dimension mismatch: H^{} vs H^{}",
                self.n, other.n
            )));
        }
        Ok(())
    }
}

/// Group law. The vertical coordinate picks up `2 Σ_j (y_j x_{n+j} − x_j y_{n+j})`.
pub fn group_mul(x: &HPoint, y: &HPoint) -> Result<HPoint> {
    x.check_same(y)?;
    let n = x.n;
    let (xc, yc) = (&x.coords, &y.coords);
    let mut out: Vec<f64> = xc.iter().zip(yc).map(|(a, b)| a + b).collect();
    let twist: f64 = (0..n).map(|j| yc[j] * xc[n + j] - xc[j] * yc[n + j]).sum();
    out[2 * n] += 2.0 * twist;
    Ok(HPoint { n, coords: out })
}

pub fn group_inv(x: &HPoint) -> HPoint {
    HPoint { n: x.n, coords: x.coords.iter().map(|c| -c).collect() }
}

/// Anisotropic dilation δ_r: horizontal coordinates scale by `r`, the vertical one by `r²`.
pub fn dilate(r: f64, x: &HPoint) -> Result<HPoint> {
    if !(r > 0.0) || !r.is_finite() {
        return Err(Error::InvalidInput(format!("dilation factor must be positive, got {r}")));
    }
    Ok(dilate_unchecked(r, x))
}

pub(crate) fn dilate_unchecked(r: f64, x: &HPoint) -> HPoint {
    let n = x.n;
    let mut coords: Vec<f64> = x.coords.iter().map(|c| c * r).collect();
    coords[2 * n] = x.coords[2 * n] * r * r;
    HPoint { n, coords }
}

/// Homogeneous norm `[(Σ_{i≤2n} x_i²)² + x_{2n+1}²]^{1/4}`.
pub fn hnorm(x: &HPoint) -> f64 {
    x.horizontal_sq().hypot(x.vertical()).sqrt()
}

pub fn hdist(p: &HPoint, q: &HPoint) -> Result<f64> {
    Ok(hnorm(&group_mul(&group_inv(q), p)?))
}

/// Dimension data of ℍⁿ.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct GroupParams {
    pub n: usize,
    /// Homogeneous dimension `Q = 2n + 2`.
    pub q_dim: usize,
    /// Lebesgue volume of the unit ball `{|x|_h < 1}`.
    pub ball_volume: f64,
    /// Polar constant `Q · ball_volume`, so that ∫ F(|x|_h) dx = ω ∫ F(r) r^{Q−1} dr.
    pub sphere_constant: f64,
}

impl GroupParams {
    pub fn q(&self) -> f64 {
        self.q_dim as f64
    }

    /// `|B(x, r)| = Ω_Q r^Q`.
    pub fn ball_measure(&self, r: f64) -> f64 {
        self.ball_volume * r.powi(self.q_dim as i32)
    }
}

/// Unit-ball volume `Ω_Q = π^{n+1/2} Γ(n/2) / ((n+1) Γ(n) Γ((n+1)/2))` and `ω_Q = Q Ω_Q`.
///
/// This is the volume of `{(|z|²)² + t² < 1}`: slicing in `t` gives
/// `2 ∫_{|z|<1} √(1−|z|⁴) dz`, which reduces to a Beta integral.
pub fn ball_volume_constant(n: usize) -> Result<GroupParams> {
    if n == 0 {
        return Err(Error::InvalidInput("group dimension n must be at least 1".into()));
    }
    let nf = n as f64;
    let omega_ball = PI.powf(nf + 0.5) * gamma(nf / 2.0)?
        / ((nf + 1.0) * gamma(nf)? * gamma((nf + 1.0) / 2.0)?);
    let q_dim = 2 * n + 2;
    Ok(GroupParams {
        n,
        q_dim,
        ball_volume: omega_ball,
        sphere_constant: q_dim as f64 * omega_ball,
    })
}

/// Uniform point of the box `[−r, r]^{2n} × [−r², r²]`, which contains `B(0, r)`.
pub fn sample_box<R: Rng + ?Sized>(rng: &mut R, n: usize, r: f64) -> HPoint {
    let mut coords = Vec::with_capacity(2 * n + 1);
    for _ in 0..2 * n {
        coords.push(r * (2.0 * rng.random::<f64>() - 1.0));
    }
    coords.push(r * r * (2.0 * rng.random::<f64>() - 1.0));
    HPoint { n, coords }
}

pub fn box_volume(n: usize, r: f64) -> f64 {
    2f64.powi(2 * n as i32 + 1) * r.powi(2 * n as i32 + 2)
}

/// Point on the unit sphere `{|ξ|_h = 1}` distributed by the polar surface
/// measure: a uniform point of the unit ball, pushed to the sphere along its
/// dilation orbit. Under `x = δ_r ξ` Lebesgue measure factors as
/// `r^{Q−1} dr dσ(ξ)`, so the projected point is σ-distributed and independent
/// of the radius it came from.
pub fn sample_unit_sphere<R: Rng + ?Sized>(rng: &mut R, n: usize) -> HPoint {
    loop {
        let z = sample_box(rng, n, 1.0);
        let r = hnorm(&z);
        if r < 1.0 && r > 1e-6 {
            return dilate_unchecked(1.0 / r, &z);
        }
    }
}

/// Coordinate tolerance for the group axioms.
pub const AXIOM_TOL: f64 = 1e-10;
/// Relative tolerance for `|δ_r x| = r|x|`.
pub const HOMOGENEITY_TOL: f64 = 1e-12;

fn random_point<R: Rng + ?Sized>(rng: &mut R, n: usize) -> HPoint {
    HPoint { n, coords: (0..2 * n + 1).map(|_| rng.random_range(-10.0..10.0)).collect() }
}

fn max_coord_gap(a: &HPoint, b: &HPoint) -> f64 {
    a.coords.iter().zip(&b.coords).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max)
}

/// Group axioms, norm homogeneity, left-invariance and the triangle
/// inequality on `samples` random triples with coordinates in `[−10, 10]`.
/// One record per property; `rel_err` holds the worst deviation seen.
pub fn axiom_reports(n: usize, samples: usize, seed: u64) -> Result<Vec<VerificationReport>> {
    use rand::SeedableRng;
    if n == 0 {
        return Err(Error::InvalidInput("group dimension n must be at least 1".into()));
    }
    let start = Instant::now();
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
    let e = HPoint::origin(n);
    let mut worst = [0.0f64; 6];
    for _ in 0..samples {
        let (x, y, z) = (random_point(&mut rng, n), random_point(&mut rng, n), random_point(&mut rng, n));
        let lhs = group_mul(&group_mul(&x, &y)?, &z)?;
        let rhs = group_mul(&x, &group_mul(&y, &z)?)?;
        worst[0] = worst[0].max(max_coord_gap(&lhs, &rhs));
        worst[1] = worst[1].max(max_coord_gap(&group_mul(&x, &e)?, &x)).max(max_coord_gap(&group_mul(&e, &x)?, &x));
        worst[2] = worst[2]
            .max(max_coord_gap(&group_mul(&x, &group_inv(&x))?, &e))
            .max(max_coord_gap(&group_mul(&group_inv(&x), &x)?, &e));
        let r = 10f64.powf(rng.random_range(-3.0..3.0));
        let nx = hnorm(&x);
        if nx > 0.0 {
            worst[3] = worst[3].max((hnorm(&dilate(r, &x)?) - r * nx).abs() / (r * nx));
        }
        let d0 = hdist(&x, &y)?;
        let d1 = hdist(&group_mul(&z, &x)?, &group_mul(&z, &y)?)?;
        worst[4] = worst[4].max((d0 - d1).abs());
        let excess = hdist(&x, &z)? - hdist(&x, &y)? - hdist(&y, &z)?;
        let scale = hdist(&x, &y)? + hdist(&y, &z)?;
        if scale > 0.0 {
            worst[5] = worst[5].max(excess / scale);
        }
    }
    let names = [
        ("associativity", AXIOM_TOL),
        ("identity", AXIOM_TOL),
        ("inverse", AXIOM_TOL),
        ("norm homogeneity", HOMOGENEITY_TOL),
        ("left invariance", AXIOM_TOL),
        ("triangle inequality", HOMOGENEITY_TOL),
    ];
    Ok(names
        .iter()
        .zip(worst)
        .map(|(&(name, tol), w)| {
            let mut r = VerificationReport::flag(format!("H^{n} {name}, {samples} samples"), w <= tol, tol);
            r.abs_err = w;
            r.rel_err = w;
            r.with_seed(seed).timed(start)
        })
        .collect())
}
