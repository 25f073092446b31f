//! One-dimensional convex envelopes of `x²`, `sin` and `cos` on intervals.
//!
//! Envelopes are expressed in the shifted argument `x = θ − a`; the shift `a`
//! is kept on each envelope for bookkeeping only.

mod tangent;

pub use tangent::{
    boundary_tangency_points, build_tangent_envelope, detect_curvature_change, tangency_root,
    CurvatureReport, CurvatureSign,
};

use std::f64::consts::{FRAC_PI_2, PI, TAU};
use std::io::Write;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Slack below which a point is still considered inside an envelope.
pub const CONTAINMENT_TOL: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum TrigKind {
    Sin,
    Cos,
}

impl TrigKind {
    pub fn eval(self, x: f64) -> f64 {
        match self {
            TrigKind::Sin => x.sin(),
            TrigKind::Cos => x.cos(),
        }
    }

    pub fn derivative(self, x: f64) -> f64 {
        match self {
            TrigKind::Sin => x.cos(),
            TrigKind::Cos => -x.sin(),
        }
    }

    pub fn second_derivative(self, x: f64) -> f64 {
        -self.eval(x)
    }

    /// Exact range of the function over `[lo, hi]`.
    pub fn range(self, lo: f64, hi: f64) -> (f64, f64) {
        let (peak, trough) = match self {
            TrigKind::Sin => (FRAC_PI_2, -FRAC_PI_2),
            TrigKind::Cos => (0.0, PI),
        };
        let (a, b) = (self.eval(lo), self.eval(hi));
        let max = if hits_periodic(lo, hi, peak) { 1.0 } else { a.max(b) };
        let min = if hits_periodic(lo, hi, trough) { -1.0 } else { a.min(b) };
        (min, max)
    }

    pub fn name(self) -> &'static str {
        match self {
            TrigKind::Sin => "sin",
            TrigKind::Cos => "cos",
        }
    }
}

fn hits_periodic(lo: f64, hi: f64, base: f64) -> bool {
    let k = ((lo - base) / TAU).ceil();
    base + k * TAU <= hi
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Side {
    Upper,
    Lower,
}

/// Half-plane `y ≤ slope·(x − anchor) + offset` (upper) or `≥` (lower).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LinearBound {
    pub slope: f64,
    pub offset: f64,
    pub anchor: f64,
    pub sense: Side,
}

impl LinearBound {
    pub fn tangent(kind: TrigKind, anchor: f64, sense: Side) -> Self {
        LinearBound { slope: kind.derivative(anchor), offset: kind.eval(anchor), anchor, sense }
    }

    /// Line through `(lo, f(lo))` and `(hi, f(hi))`, anchored at `lo`.
    pub fn chord(kind: TrigKind, lo: f64, hi: f64, sense: Side) -> Self {
        let slope = (kind.eval(hi) - kind.eval(lo)) / (hi - lo);
        LinearBound { slope, offset: kind.eval(lo), anchor: lo, sense }
    }

    pub fn value(&self, x: f64) -> f64 {
        self.slope * (x - self.anchor) + self.offset
    }

    /// Nonnegative when `(x, y)` satisfies the half-plane.
    pub fn slack(&self, x: f64, y: f64) -> f64 {
        match self.sense {
            Side::Upper => self.value(x) - y,
            Side::Lower => y - self.value(x),
        }
    }
}

/// Concave upper side `y ≤ 1 − k·x²`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct QuadraticUpper {
    pub curvature: f64,
}

impl QuadraticUpper {
    pub fn value(&self, x: f64) -> f64 {
        1.0 - self.curvature * x * x
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrigEnvelope {
    pub kind: TrigKind,
    pub shift: f64,
    pub lo: f64,
    pub hi: f64,
    pub upper_bounds: Vec<LinearBound>,
    pub lower_bounds: Vec<LinearBound>,
    pub quadratic_upper: Option<QuadraticUpper>,
}

impl TrigEnvelope {
    pub fn upper_at(&self, x: f64) -> f64 {
        let lines = self.upper_bounds.iter().map(|b| b.value(x));
        let quad = self.quadratic_upper.iter().map(|q| q.value(x));
        lines.chain(quad).fold(f64::INFINITY, f64::min)
    }

    pub fn lower_at(&self, x: f64) -> f64 {
        self.lower_bounds.iter().map(|b| b.value(x)).fold(f64::NEG_INFINITY, f64::max)
    }

    /// Smallest slack over all sides at `(x, y)`.
    pub fn slack(&self, x: f64, y: f64) -> Result<f64> {
        let tol = 1e-12 * (1.0 + x.abs());
        if x < self.lo - tol || x > self.hi + tol {
            return Err(Error::invalid(format!(
                "x = {x} outside envelope interval [{}, {}]",
                self.lo, self.hi
            )));
        }
        Ok((self.upper_at(x) - y).min(y - self.lower_at(x)))
    }

    pub fn bounds(&self) -> impl Iterator<Item = &LinearBound> {
        self.upper_bounds.iter().chain(&self.lower_bounds)
    }
}

/// True when `(x, y)` satisfies every side of the envelope.
pub fn envelope_contains(env: &TrigEnvelope, x: f64, y: f64) -> Result<bool> {
    Ok(env.slack(x, y)? >= -CONTAINMENT_TOL)
}

/// Envelope of `x²` on `[x_lo, x_hi]`: `y ≥ x²` and the secant above.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SquareEnvelope {
    pub x_lo: f64,
    pub x_hi: f64,
}

impl SquareEnvelope {
    pub fn upper_slope(&self) -> f64 {
        self.x_lo + self.x_hi
    }

    pub fn upper_intercept(&self) -> f64 {
        -self.x_lo * self.x_hi
    }

    pub fn upper_at(&self, x: f64) -> f64 {
        self.upper_slope() * x + self.upper_intercept()
    }

    pub fn contains(&self, x: f64, y: f64) -> bool {
        y >= x * x - CONTAINMENT_TOL && y <= self.upper_at(x) + CONTAINMENT_TOL
    }
}

pub fn classic_square_envelope(x_lo: f64, x_hi: f64) -> Result<SquareEnvelope> {
    if !(x_lo < x_hi) {
        return Err(Error::invalid(format!("square envelope needs x_lo < x_hi, got [{x_lo}, {x_hi}]")));
    }
    Ok(SquareEnvelope { x_lo, x_hi })
}

/// Classical sine/cosine envelopes, valid for intervals inside `[−π/2, π/2]`.
///
/// The sine envelope also carries the tangent at `±x^m/2` on the side left
/// open by the sign-conditional chord; that line is valid for every interval
/// in the admissible range.
pub fn classic_trig_envelopes(kind: TrigKind, x_lo: f64, x_hi: f64) -> Result<TrigEnvelope> {
    if !(x_lo < x_hi) {
        return Err(Error::invalid(format!("empty interval [{x_lo}, {x_hi}]")));
    }
    let limit = FRAC_PI_2 + 1e-12;
    if x_lo < -limit || x_hi > limit {
        return Err(Error::invalid(format!(
            "interval [{x_lo}, {x_hi}] leaves [-π/2, π/2]; use tangent envelopes instead"
        )));
    }
    let xm = x_lo.abs().max(x_hi.abs());
    let mut env = TrigEnvelope {
        kind,
        shift: 0.0,
        lo: x_lo,
        hi: x_hi,
        upper_bounds: Vec::new(),
        lower_bounds: Vec::new(),
        quadratic_upper: None,
    };
    match kind {
        TrigKind::Sin => {
            let half = xm / 2.0;
            let upper_tangent = LinearBound::tangent(kind, half, Side::Upper);
            let lower_tangent = LinearBound::tangent(kind, -half, Side::Lower);
            if x_lo < 0.0 && x_hi > 0.0 {
                env.upper_bounds.push(upper_tangent);
                env.lower_bounds.push(lower_tangent);
            } else if x_lo >= 0.0 {
                env.upper_bounds.push(upper_tangent);
                env.lower_bounds.push(LinearBound::chord(kind, x_lo, x_hi, Side::Lower));
            } else {
                env.upper_bounds.push(LinearBound::chord(kind, x_lo, x_hi, Side::Upper));
                env.lower_bounds.push(lower_tangent);
            }
        }
        TrigKind::Cos => {
            env.quadratic_upper = Some(QuadraticUpper { curvature: (1.0 - xm.cos()) / (xm * xm) });
            env.lower_bounds.push(LinearBound::chord(kind, x_lo, x_hi, Side::Lower));
        }
    }
    Ok(env)
}

/// Writes envelopes as CSV rows `(kind, a, L, U, side, slope, offset, anchor)`.
/// A quadratic upper side is written with `side = quadratic` and its curvature
/// in the slope column.
pub fn write_envelope_csv<W: Write>(envs: &[TrigEnvelope], mut out: W) -> std::io::Result<()> {
    writeln!(out, "kind,a,L,U,side,slope,offset,anchor")?;
    for env in envs {
        let head = format!("{},{},{},{}", env.kind.name(), env.shift, env.lo, env.hi);
        for b in env.bounds() {
            let side = match b.sense {
                Side::Upper => "upper",
                Side::Lower => "lower",
            };
            writeln!(out, "{head},{side},{},{},{}", b.slope, b.offset, b.anchor)?;
        }
        if let Some(q) = env.quadratic_upper {
            writeln!(out, "{head},quadratic,{},1,0", q.curvature)?;
        }
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn deg(x: f64) -> f64 {
        x.to_radians()
    }

    #[test]
    fn square_envelope_examples() {
        let env = classic_square_envelope(0.9, 1.1).unwrap();
        assert!((env.upper_at(1.0) - 1.01).abs() < 1e-15);
        assert!((env.upper_at(0.9) - 0.81).abs() < 1e-15);
        assert!((env.upper_at(1.1) - 1.21).abs() < 1e-15);
        assert!(classic_square_envelope(1.0, 1.0).is_err());
    }

    #[test]
    fn classic_cos_examples() {
        let env = classic_trig_envelopes(TrigKind::Cos, deg(-40.0), deg(40.0)).unwrap();
        assert_eq!(env.upper_at(0.0), 1.0);
        let chord = env.lower_bounds[0];
        assert!(chord.slope.abs() < 1e-15);
        assert!((chord.offset - deg(40.0).cos()).abs() < 1e-15);
        for k in 0..=100 {
            let x = deg(-40.0) + deg(80.0) * k as f64 / 100.0;
            assert!(envelope_contains(&env, x, x.cos()).unwrap());
        }
    }

    #[test]
    fn classic_sin_positive_interval_has_chord() {
        let env = classic_trig_envelopes(TrigKind::Sin, 0.1, 0.5).unwrap();
        let chord = env.lower_bounds[0];
        assert!((chord.value(0.1) - 0.1f64.sin()).abs() < 1e-15);
        assert!((chord.value(0.5) - 0.5f64.sin()).abs() < 1e-15);
        assert!(classic_trig_envelopes(TrigKind::Sin, -2.0, 0.5).is_err());
    }

    #[test]
    fn classic_sin_encloses_on_sampled_intervals() {
        let intervals = [(-1.5, 1.5), (-0.2, 1.4), (-1.5, 0.1), (0.0, 1.0), (-1.0, 0.0), (0.3, 1.5), (-1.5, -0.4)];
        for (lo, hi) in intervals {
            let env = classic_trig_envelopes(TrigKind::Sin, lo, hi).unwrap();
            for k in 0..=1000 {
                let x: f64 = lo + (hi - lo) * k as f64 / 1000.0;
                assert!(env.slack(x, x.sin()).unwrap() >= -1e-12, "sin [{lo},{hi}] at {x}");
            }
        }
    }

    #[test]
    fn containment_checks_interval_and_height() {
        let env = classic_trig_envelopes(TrigKind::Cos, -1.0, 1.0).unwrap();
        assert!(!envelope_contains(&env, 0.3, 0.3f64.cos() + 10.0).unwrap());
        assert!(envelope_contains(&env, 0.0, 1.0f64.cos()).unwrap());
        assert!(env.slack(1.5, 0.0).is_err());
    }

    #[test]
    fn range_covers_interior_extrema() {
        assert_eq!(TrigKind::Cos.range(deg(-60.0), deg(60.0)), (deg(60.0).cos(), 1.0));
        let (lo, hi) = TrigKind::Sin.range(deg(10.0), deg(30.0));
        assert!((lo - deg(10.0).sin()).abs() < 1e-15 && (hi - 0.5).abs() < 1e-15);
        assert_eq!(TrigKind::Cos.range(2.0, 4.0).0, -1.0);
        assert_eq!(TrigKind::Sin.range(-2.0, -1.0).0, -1.0);
        assert_eq!(TrigKind::Sin.range(-7.0, -4.0).1, 1.0);
    }

    #[test]
    fn csv_dump_lists_every_side() {
        let env = classic_trig_envelopes(TrigKind::Cos, -0.5, 0.5).unwrap();
        let mut buf = Vec::new();
        write_envelope_csv(&[env], &mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        assert_eq!(text.lines().count(), 3);
        assert!(text.lines().nth(2).unwrap().contains("quadratic"));
    }
}
