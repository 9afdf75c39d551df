//! Radial profiles `F(r)`, `r = |x|_h`, and exact power-moment integrals
//! `∫ |F(r)|^p r^c dr` over radial intervals.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::quad::gauss::GaussLegendre;

/// A radial function. Power kinds carry a nonnegative coefficient so that
/// dilations and scalar multiples stay in the same family.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum RadialProfile {
    Power { coef: f64, exponent: f64 },
    TruncatedPower { coef: f64, exponent: f64, r_min: f64, r_max: f64 },
    Tabulated(Tabulated),
}

/// Knot/value table interpolated linearly in log-log space between knots.
/// Outside the knots the end segments are continued as powers down to
/// `lower_cutoff` and up to `upper_cutoff`; the profile is zero beyond them.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Tabulated {
    knots: Vec<f64>,
    values: Vec<f64>,
    lower_cutoff: f64,
    upper_cutoff: f64,
}

/// One piece of a profile: `v0 · (r/r0)^exponent` on `[lo, hi]`, or a
/// linear segment through a zero value. Anchoring at a knot keeps steep
/// pieces between tiny values finite.
#[derive(Clone, Copy, Debug)]
enum Piece {
    Power { lo: f64, hi: f64, r0: f64, v0: f64, exponent: f64 },
    Linear { lo: f64, hi: f64, v_lo: f64, v_hi: f64 },
}

impl Tabulated {
    pub fn new(knots: Vec<f64>, values: Vec<f64>) -> Result<Self> {
        let lo = *knots.first().unwrap_or(&0.0);
        let hi = *knots.last().unwrap_or(&0.0);
        Self::with_cutoffs(knots, values, lo, hi)
    }

    pub fn with_cutoffs(
        knots: Vec<f64>,
        values: Vec<f64>,
        lower_cutoff: f64,
        upper_cutoff: f64,
    ) -> Result<Self> {
        if knots.len() < 2 || knots.len() != values.len() {
            return Err(Error::InvalidInput(
                "tabulated profile needs at least two knots and one value per knot".into(),
            ));
        }
        if knots[0] <= 0.0 || knots.windows(2).any(|w| !(w[1] > w[0])) {
            return Err(Error::InvalidInput("knots must be positive and strictly increasing".into()));
        }
        if values.iter().any(|v| !(*v >= 0.0) || !v.is_finite()) {
            return Err(Error::InvalidInput("tabulated values must be finite and nonnegative".into()));
        }
        if !(lower_cutoff >= 0.0 && lower_cutoff <= knots[0]) || !(upper_cutoff >= knots[knots.len() - 1]) {
            return Err(Error::InvalidInput("cutoffs must enclose the knot range".into()));
        }
        Ok(Self { knots, values, lower_cutoff, upper_cutoff })
    }

    pub fn knots(&self) -> &[f64] {
        &self.knots
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn cutoffs(&self) -> (f64, f64) {
        (self.lower_cutoff, self.upper_cutoff)
    }

    fn segment(&self, i: usize, lo: f64, hi: f64) -> Piece {
        let (k0, k1) = (self.knots[i], self.knots[i + 1]);
        let (v0, v1) = (self.values[i], self.values[i + 1]);
        if v0 > 0.0 && v1 > 0.0 {
            let p = (v1 / v0).ln() / (k1 / k0).ln();
            Piece::Power { lo, hi, r0: k0, v0, exponent: p }
        } else {
            let slope = (v1 - v0) / (k1 - k0);
            Piece::Linear { lo, hi, v_lo: v0 + slope * (lo - k0), v_hi: v0 + slope * (hi - k0) }
        }
    }

    /// End-segment continuation: power if both end values are positive,
    /// otherwise constant.
    fn extension(&self, at_start: bool, lo: f64, hi: f64) -> Piece {
        let last = self.knots.len() - 1;
        let (i, anchor) = if at_start { (0, 0) } else { (last - 1, last) };
        match self.segment(i, lo, hi) {
            Piece::Power { r0, v0, exponent, .. } => Piece::Power { lo, hi, r0, v0, exponent },
            Piece::Linear { .. } => {
                let v = self.values[anchor];
                Piece::Power { lo, hi, r0: 1.0, v0: v, exponent: 0.0 }
            }
        }
    }

    fn pieces(&self) -> Vec<Piece> {
        let mut out = Vec::with_capacity(self.knots.len() + 1);
        let last = self.knots.len() - 1;
        if self.lower_cutoff < self.knots[0] {
            out.push(self.extension(true, self.lower_cutoff, self.knots[0]));
        }
        for i in 0..last {
            out.push(self.segment(i, self.knots[i], self.knots[i + 1]));
        }
        if self.upper_cutoff > self.knots[last] {
            out.push(self.extension(false, self.knots[last], self.upper_cutoff));
        }
        out
    }

    fn eval(&self, r: f64) -> f64 {
        if !(r >= self.lower_cutoff && r <= self.upper_cutoff) || r <= 0.0 {
            return 0.0;
        }
        let last = self.knots.len() - 1;
        let piece = if r < self.knots[0] {
            self.extension(true, self.lower_cutoff, self.knots[0])
        } else if r > self.knots[last] {
            self.extension(false, self.knots[last], self.upper_cutoff)
        } else {
            let i = match self.knots.binary_search_by(|k| k.partial_cmp(&r).unwrap()) {
                Ok(i) => return self.values[i],
                Err(i) => i - 1,
            };
            self.segment(i, self.knots[i], self.knots[i + 1])
        };
        piece.eval(r)
    }
}

impl Piece {
    fn eval(&self, r: f64) -> f64 {
        match *self {
            Piece::Power { r0, v0, exponent, .. } => {
                if v0 == 0.0 {
                    0.0
                } else {
                    v0 * (r / r0).powf(exponent)
                }
            }
            Piece::Linear { lo, hi, v_lo, v_hi } => v_lo + (v_hi - v_lo) * (r - lo) / (hi - lo),
        }
    }

    fn bounds(&self) -> (f64, f64) {
        match *self {
            Piece::Power { lo, hi, .. } | Piece::Linear { lo, hi, .. } => (lo, hi),
        }
    }

    /// `∫_a^b |piece|^p r^c dr` for `[a, b] ⊆ [lo, hi]`.
    fn moment(&self, p: f64, c: f64, a: f64, b: f64) -> Result<f64> {
        match *self {
            Piece::Power { r0, v0, exponent, .. } => {
                if v0 == 0.0 {
                    return Ok(0.0);
                }
                // r = r0 u
                Ok(v0.abs().powf(p) * r0.powf(c + 1.0) * power_integral(exponent * p + c, a / r0, b / r0)?)
            }
            Piece::Linear { .. } => {
                if b <= a {
                    return Ok(0.0);
                }
                if a == 0.0 && c <= -1.0 {
                    return Err(Error::Divergence(format!(
                        "r^{c} is not integrable at the origin"
                    )));
                }
                let gl = GaussLegendre::cached(24);
                Ok(gl.integrate(|r| self.eval(r).abs().powf(p) * r.powf(c), a, b))
            }
        }
    }
}

/// `∫_a^b r^e dr` for `0 ≤ a ≤ b ≤ ∞`, with divergence reported at either end.
pub fn power_integral(e: f64, a: f64, b: f64) -> Result<f64> {
    if b <= a {
        return Ok(0.0);
    }
    let k = e + 1.0;
    if a == 0.0 && k <= 0.0 {
        return Err(Error::Divergence(format!("r^{e} is not integrable at the origin")));
    }
    if b.is_infinite() && k >= 0.0 {
        return Err(Error::Divergence(format!("r^{e} is not integrable at infinity")));
    }
    if b.is_infinite() {
        return Ok(-a.powf(k) / k);
    }
    if a == 0.0 {
        return Ok(b.powf(k) / k);
    }
    let l = (b / a).ln();
    if (k * l).abs() < 1e-300 {
        return Ok(l);
    }
    // a^k (e^{k ln(b/a)} − 1) / k keeps precision when k is small
    let v = a.powf(k) * (k * l).exp_m1() / k;
    if v.is_finite() && (v != 0.0 || k * l < 0.0) {
        return Ok(v);
    }
    Ok(b.powf(k) / k - a.powf(k) / k)
}

impl RadialProfile {
    pub fn power(exponent: f64) -> Self {
        RadialProfile::Power { coef: 1.0, exponent }
    }

    pub fn truncated_power(exponent: f64, r_min: f64, r_max: f64) -> Result<Self> {
        if !(r_min > 0.0 && r_min < r_max) {
            return Err(Error::InvalidInput(format!(
                "truncation needs 0 < r_min < r_max, got ({r_min}, {r_max})"
            )));
        }
        Ok(RadialProfile::TruncatedPower { coef: 1.0, exponent, r_min, r_max })
    }

    pub fn zero() -> Self {
        RadialProfile::Power { coef: 0.0, exponent: 0.0 }
    }

    pub fn eval(&self, r: f64) -> f64 {
        match self {
            RadialProfile::Power { coef, exponent } => {
                if *coef == 0.0 {
                    0.0
                } else {
                    coef * r.powf(*exponent)
                }
            }
            RadialProfile::TruncatedPower { coef, exponent, r_min, r_max } => {
                if r >= *r_min && r <= *r_max {
                    coef * r.powf(*exponent)
                } else {
                    0.0
                }
            }
            RadialProfile::Tabulated(t) => t.eval(r),
        }
    }

    pub fn is_zero(&self) -> bool {
        match self {
            RadialProfile::Power { coef, .. } | RadialProfile::TruncatedPower { coef, .. } => *coef == 0.0,
            RadialProfile::Tabulated(t) => t.values.iter().all(|v| *v == 0.0),
        }
    }

    /// Radii where the profile or its derivative may jump.
    pub fn breakpoints(&self) -> Vec<f64> {
        match self {
            RadialProfile::Power { .. } => vec![],
            RadialProfile::TruncatedPower { r_min, r_max, .. } => vec![*r_min, *r_max],
            RadialProfile::Tabulated(t) => {
                let mut b = Vec::with_capacity(t.knots.len() + 2);
                if t.lower_cutoff > 0.0 {
                    b.push(t.lower_cutoff);
                }
                b.extend_from_slice(&t.knots);
                if t.upper_cutoff.is_finite() && t.upper_cutoff > t.knots[t.knots.len() - 1] {
                    b.push(t.upper_cutoff);
                }
                b
            }
        }
    }

    /// `c · F`.
    pub fn scaled(&self, c: f64) -> Result<Self> {
        if !(c >= 0.0) || !c.is_finite() {
            return Err(Error::InvalidInput(format!("scale factor must be nonnegative, got {c}")));
        }
        Ok(match self {
            RadialProfile::Power { coef, exponent } => {
                RadialProfile::Power { coef: coef * c, exponent: *exponent }
            }
            RadialProfile::TruncatedPower { coef, exponent, r_min, r_max } => {
                RadialProfile::TruncatedPower { coef: coef * c, exponent: *exponent, r_min: *r_min, r_max: *r_max }
            }
            RadialProfile::Tabulated(t) => RadialProfile::Tabulated(Tabulated {
                values: t.values.iter().map(|v| v * c).collect(),
                ..t.clone()
            }),
        })
    }

    /// The profile of `x ↦ f(δ_t x)`, i.e. `r ↦ F(t r)`.
    pub fn dilated(&self, t: f64) -> Result<Self> {
        if !(t > 0.0) || !t.is_finite() {
            return Err(Error::InvalidInput(format!("dilation factor must be positive, got {t}")));
        }
        Ok(match self {
            RadialProfile::Power { coef, exponent } => {
                RadialProfile::Power { coef: coef * t.powf(*exponent), exponent: *exponent }
            }
            RadialProfile::TruncatedPower { coef, exponent, r_min, r_max } => RadialProfile::TruncatedPower {
                coef: coef * t.powf(*exponent),
                exponent: *exponent,
                r_min: r_min / t,
                r_max: r_max / t,
            },
            RadialProfile::Tabulated(tab) => RadialProfile::Tabulated(Tabulated {
                knots: tab.knots.iter().map(|k| k / t).collect(),
                values: tab.values.clone(),
                lower_cutoff: tab.lower_cutoff / t,
                upper_cutoff: tab.upper_cutoff / t,
            }),
        })
    }

    fn pieces(&self) -> Vec<Piece> {
        match self {
            RadialProfile::Power { coef, exponent } => {
                vec![Piece::Power { lo: 0.0, hi: f64::INFINITY, r0: 1.0, v0: *coef, exponent: *exponent }]
            }
            RadialProfile::TruncatedPower { coef, exponent, r_min, r_max } => {
                vec![Piece::Power { lo: *r_min, hi: *r_max, r0: 1.0, v0: *coef, exponent: *exponent }]
            }
            RadialProfile::Tabulated(t) => t.pieces(),
        }
    }

    /// `∫_a^b |F(r)|^p r^c dr`, exact up to rounding on power pieces.
    pub fn moment(&self, p: f64, c: f64, a: f64, b: f64) -> Result<f64> {
        if b <= a || self.is_zero() {
            return Ok(0.0);
        }
        let mut total = 0.0;
        for piece in self.pieces() {
            let (lo, hi) = piece.bounds();
            let (x, y) = (a.max(lo), b.min(hi));
            if y > x {
                total += piece.moment(p, c, x, y)?;
            }
        }
        Ok(total)
    }

    /// Prepared antiderivative of `|F|^p r^c`, cheap to evaluate repeatedly.
    pub fn antiderivative(&self, p: f64, c: f64) -> Result<Antiderivative> {
        Antiderivative::new(self, p, c)
    }
}

/// Antiderivative `A` with `A(b) − A(a) = ∫_a^b |F|^p r^c dr`.
///
/// Pure powers use the closed form `r^{k}/k` (or `ln r`), which is finite at
/// every positive radius even when the moment diverges at 0 or ∞; piecewise
/// profiles are anchored at the origin with prefix sums over the pieces.
#[derive(Clone, Debug)]
pub struct Antiderivative {
    kind: AntiKind,
}

#[derive(Clone, Debug)]
enum AntiKind {
    Zero,
    Power { scale: f64, k: f64 },
    Pieces { starts: Vec<f64>, prefix: Vec<f64>, pieces: Vec<Piece>, p: f64, c: f64 },
}

impl Antiderivative {
    fn new(profile: &RadialProfile, p: f64, c: f64) -> Result<Self> {
        if profile.is_zero() {
            return Ok(Self { kind: AntiKind::Zero });
        }
        if let RadialProfile::Power { coef, exponent } = profile {
            return Ok(Self {
                kind: AntiKind::Power { scale: coef.abs().powf(p), k: exponent * p + c + 1.0 },
            });
        }
        let pieces = profile.pieces();
        let mut starts = Vec::with_capacity(pieces.len());
        let mut prefix = Vec::with_capacity(pieces.len() + 1);
        let mut acc = 0.0;
        prefix.push(0.0);
        for piece in &pieces {
            let (lo, hi) = piece.bounds();
            starts.push(lo);
            acc += piece.moment(p, c, lo, hi)?;
            prefix.push(acc);
        }
        Ok(Self { kind: AntiKind::Pieces { starts, prefix, pieces, p, c } })
    }

    pub fn at(&self, r: f64) -> Result<f64> {
        match &self.kind {
            AntiKind::Zero => Ok(0.0),
            AntiKind::Power { scale, k } => {
                if *k == 0.0 {
                    if r == 0.0 || r.is_infinite() {
                        return Err(Error::Divergence("logarithmic moment diverges".into()));
                    }
                    return Ok(scale * r.ln());
                }
                if (r == 0.0 && *k < 0.0) || (r.is_infinite() && *k > 0.0) {
                    return Err(Error::Divergence(format!(
                        "power moment with exponent {} diverges at r = {r}",
                        k - 1.0
                    )));
                }
                Ok(scale * r.powf(*k) / k)
            }
            AntiKind::Pieces { starts, prefix, pieces, p, c } => {
                let idx = starts.partition_point(|s| *s <= r);
                if idx == 0 {
                    return Ok(0.0);
                }
                let i = idx - 1;
                let (lo, hi) = pieces[i].bounds();
                if r >= hi {
                    return Ok(prefix[i + 1]);
                }
                Ok(prefix[i] + pieces[i].moment(*p, *c, lo, r)?)
            }
        }
    }

    pub fn between(&self, a: f64, b: f64) -> Result<f64> {
        if b <= a {
            return Ok(0.0);
        }
        Ok(self.at(b)? - self.at(a)?)
    }
}
