//! Polytope envelopes for `V_l·V_m·cos(·)` and `V_l·V_m·sin(·)`.
//!
//! The unit-circle arc traced by `(cos x, sin x)` over a shifted argument
//! interval is enclosed in a polygon whose vertices are the two arc endpoints
//! and the intersections of tangents at consecutive segment ends. Lifting the
//! polygon by the voltage box gives the extreme points of the λ representation
//! used by the LRQC relaxation. The classical trilinear boxes of the QC
//! relaxation and the hull metrics used for rotation selection live here too.

mod hull;

pub use hull::{hull_2d, hull_area_2d, hull_volume_3d};

use std::f64::consts::PI;
use std::io::Write;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Vertex of the arc polygon.
///
/// `theta` is the nominal angle coordinate in the unshifted frame. An apex
/// stands for the whole segment it closes, so it also carries the segment's
/// angle span `[theta_lo, theta_hi]`; endpoints have a zero-width span.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ArcVertex {
    pub theta: f64,
    pub theta_lo: f64,
    pub theta_hi: f64,
    pub c: f64,
    pub s: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ArcPolytope {
    pub shift: f64,
    pub lo: f64,
    pub hi: f64,
    pub vertices: Vec<ArcVertex>,
}

impl ArcPolytope {
    /// Smallest half-plane slack of `(c, s)` against the polygon edges.
    pub fn polygon_slack(&self, c: f64, s: f64) -> f64 {
        let n = self.vertices.len();
        (0..n)
            .map(|i| {
                let (p, q) = (self.vertices[i], self.vertices[(i + 1) % n]);
                let (ex, ey) = (q.c - p.c, q.s - p.s);
                (ex * (s - p.s) - ey * (c - p.c)) / ex.hypot(ey)
            })
            .fold(f64::INFINITY, f64::min)
    }

    pub fn area(&self) -> f64 {
        hull_area_2d(&self.vertices.iter().map(|v| (v.c, v.s)).collect::<Vec<_>>())
    }
}

/// Extreme point of the lifted set `[V_f] × [V_t] × polygon`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LiftedExtremePoint {
    pub v_from: f64,
    pub v_to: f64,
    pub theta: f64,
    pub theta_lo: f64,
    pub theta_hi: f64,
    pub c: f64,
    pub s: f64,
}

impl LiftedExtremePoint {
    pub fn product(&self) -> f64 {
        self.v_from * self.v_to
    }
}

/// Corner of a `[V_f] × [V_t] × [w]` box.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BoxCorner {
    pub v_from: f64,
    pub v_to: f64,
    pub w: f64,
}

impl BoxCorner {
    pub fn product(&self) -> f64 {
        self.v_from * self.v_to * self.w
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct HullMetrics {
    pub area_2d: f64,
    /// `area_2d` divided by the area of the `[−1, 1]²` box.
    pub area_2d_normalized: f64,
    pub volume_3d: f64,
}

/// Voltage magnitude bounds at both branch ends.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct VoltageBox {
    pub from_lo: f64,
    pub from_hi: f64,
    pub to_lo: f64,
    pub to_hi: f64,
}

impl VoltageBox {
    pub fn unit() -> Self {
        VoltageBox { from_lo: 1.0, from_hi: 1.0, to_lo: 1.0, to_hi: 1.0 }
    }

    /// `[0.9, 1.1]` at both ends.
    pub fn typical() -> Self {
        VoltageBox { from_lo: 0.9, from_hi: 1.1, to_lo: 0.9, to_hi: 1.1 }
    }

    fn validate(&self) -> Result<()> {
        let ok = |lo: f64, hi: f64| lo > 0.0 && lo <= hi && hi.is_finite();
        if ok(self.from_lo, self.from_hi) && ok(self.to_lo, self.to_hi) {
            Ok(())
        } else {
            Err(Error::invalid(format!("invalid voltage box {self:?}")))
        }
    }

    fn from_values(&self) -> Vec<f64> {
        distinct(self.from_lo, self.from_hi)
    }

    fn to_values(&self) -> Vec<f64> {
        distinct(self.to_lo, self.to_hi)
    }
}

fn distinct(lo: f64, hi: f64) -> Vec<f64> {
    if lo == hi {
        vec![lo]
    } else {
        vec![lo, hi]
    }
}

/// Intersection of the unit-circle tangents at `t1` and `t2`.
pub fn circle_tangent_intersection(t1: f64, t2: f64) -> Result<(f64, f64)> {
    let width = t2 - t1;
    if !(width > 0.0 && width < PI) {
        return Err(Error::invalid(format!("tangent intersection needs 0 < t2 − t1 < π, got {width}")));
    }
    let (m, h) = (0.5 * (t1 + t2), 0.5 * width);
    Ok((m.cos() / h.cos(), m.sin() / h.cos()))
}

/// Arc polygon over the shifted interval `[lo, hi]` with `n_seg` segments.
pub fn arc_extreme_points(a: f64, lo: f64, hi: f64, n_seg: usize) -> Result<ArcPolytope> {
    if n_seg == 0 {
        return Err(Error::invalid("n_seg must be at least 1"));
    }
    if !(hi - lo > 0.0 && hi - lo <= PI + 1e-12) {
        return Err(Error::invalid(format!("arc interval [{lo}, {hi}] must have length in (0, π]")));
    }
    let at = |i: usize| if i == n_seg { hi } else { lo + (hi - lo) * i as f64 / n_seg as f64 };
    let endpoint = |t: f64| ArcVertex { theta: t + a, theta_lo: t + a, theta_hi: t + a, c: t.cos(), s: t.sin() };
    let mut vertices = Vec::with_capacity(n_seg + 2);
    vertices.push(endpoint(lo));
    for i in 1..=n_seg {
        let (t1, t2) = (at(i - 1), at(i));
        let (c, s) = circle_tangent_intersection(t1, t2)?;
        vertices.push(ArcVertex { theta: 0.5 * (t1 + t2) + a, theta_lo: t1 + a, theta_hi: t2 + a, c, s });
    }
    vertices.push(endpoint(hi));
    Ok(ArcPolytope { shift: a, lo, hi, vertices })
}

/// Cartesian product of the distinct voltage corners with the arc vertices.
pub fn lift_by_voltage_box(poly: &ArcPolytope, vbox: &VoltageBox) -> Result<Vec<LiftedExtremePoint>> {
    vbox.validate()?;
    let mut out = Vec::new();
    for &vf in &vbox.from_values() {
        for &vt in &vbox.to_values() {
            for v in &poly.vertices {
                out.push(LiftedExtremePoint {
                    v_from: vf,
                    v_to: vt,
                    theta: v.theta,
                    theta_lo: v.theta_lo,
                    theta_hi: v.theta_hi,
                    c: v.c,
                    s: v.s,
                });
            }
        }
    }
    Ok(out)
}

/// Replaces every apex by two copies whose angles bracket what its arc
/// points need. On a segment of width `h`, writing an arc point as a convex
/// combination of the two endpoints and the apex forces the apex angle
/// through every value in `mid ± (tan(h/2) − h/2)`, so those are the copies.
/// Zero-span points are kept as they are.
pub fn split_theta_spans(points: &[LiftedExtremePoint]) -> Vec<LiftedExtremePoint> {
    let mut out = Vec::with_capacity(2 * points.len());
    for p in points {
        let h = p.theta_hi - p.theta_lo;
        if h > 0.0 {
            let mid = 0.5 * (p.theta_lo + p.theta_hi);
            let half = (0.5 * h).tan() - 0.5 * h;
            out.push(LiftedExtremePoint { theta: mid - half, ..*p });
            out.push(LiftedExtremePoint { theta: mid + half, ..*p });
        } else {
            out.push(*p);
        }
    }
    out
}

/// The eight corners of `[V_f] × [V_t] × [w_lo, w_hi]`; consecutive pairs
/// share a voltage corner.
pub fn box_trilinear_points(vbox: &VoltageBox, w_lo: f64, w_hi: f64) -> Result<[BoxCorner; 8]> {
    vbox.validate()?;
    if !(w_lo <= w_hi) {
        return Err(Error::invalid(format!("trilinear box needs w_lo ≤ w_hi, got [{w_lo}, {w_hi}]")));
    }
    let mut out = [BoxCorner { v_from: 0.0, v_to: 0.0, w: 0.0 }; 8];
    let mut k = 0;
    for vf in [vbox.from_lo, vbox.from_hi] {
        for vt in [vbox.to_lo, vbox.to_hi] {
            for w in [w_lo, w_hi] {
                out[k] = BoxCorner { v_from: vf, v_to: vt, w };
                k += 1;
            }
        }
    }
    Ok(out)
}

/// Points `(V_f·V_t·c, V_f·V_t·s, V_f·V_t·c·s)` of every lifted vertex.
pub fn product_space_points(lifted: &[LiftedExtremePoint]) -> Vec<[f64; 3]> {
    lifted
        .iter()
        .map(|p| {
            let vv = p.product();
            [vv * p.c, vv * p.s, vv * p.c * p.s]
        })
        .collect()
}

/// Hull volume of the arc polygon lifted by `vbox` in product space.
pub fn product_hull_volume(a: f64, lo: f64, hi: f64, n_seg: usize, vbox: &VoltageBox) -> Result<f64> {
    let poly = arc_extreme_points(a, lo, hi, n_seg)?;
    Ok(hull_volume_3d(&product_space_points(&lift_by_voltage_box(&poly, vbox)?)))
}

/// Area and volume metrics of the arc envelope over the typical
/// `[0.9, 1.1]²` voltage box.
pub fn sincos_envelope_metrics(a: f64, lo: f64, hi: f64, n_seg: usize) -> Result<HullMetrics> {
    sincos_envelope_metrics_in(a, lo, hi, n_seg, &VoltageBox::typical())
}

/// Area of the `(c, s)` polygon and product-space hull volume over `vbox`.
pub fn sincos_envelope_metrics_in(a: f64, lo: f64, hi: f64, n_seg: usize, vbox: &VoltageBox) -> Result<HullMetrics> {
    let poly = arc_extreme_points(a, lo, hi, n_seg)?;
    let area = poly.area();
    Ok(HullMetrics {
        area_2d: area,
        area_2d_normalized: area / 4.0,
        volume_3d: product_hull_volume(a, lo, hi, n_seg, vbox)?,
    })
}

/// Writes lifted extreme points as CSV rows `(branch, k, v_from, v_to, theta, c, s)`.
pub fn write_polytope_csv<W: Write>(blocks: &[(String, Vec<LiftedExtremePoint>)], mut out: W) -> std::io::Result<()> {
    writeln!(out, "branch,k,v_from,v_to,theta,c,s")?;
    for (branch, points) in blocks {
        for (k, p) in points.iter().enumerate() {
            writeln!(out, "{branch},{k},{},{},{},{},{}", p.v_from, p.v_to, p.theta, p.c, p.s)?;
        }
    }
    Ok(())
}
