use std::f64::consts::{FRAC_PI_2, PI};

use serde::{Deserialize, Serialize};

use super::{LinearBound, Side, TrigEnvelope, TrigKind};
use crate::error::{Error, Result};

const DEGENERATE_WIDTH: f64 = 1e-8;
const BISECTION_WIDTH: f64 = 1e-3;
const NEWTON_RESIDUAL: f64 = 1e-12;
const NEWTON_MAX_ITER: usize = 50;
const ENDPOINT_MARGIN: f64 = 1e-6;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum CurvatureSign {
    Positive,
    Negative,
    None,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CurvatureReport {
    pub kind: TrigKind,
    pub shift: f64,
    pub lo: f64,
    pub hi: f64,
    pub changes: bool,
    pub inflection: Option<f64>,
    pub sign_when_constant: CurvatureSign,
    /// Stationary points of the function minus its chord, in `[lo, hi]`.
    pub z_set: Vec<f64>,
}

fn check_interval(lo: f64, hi: f64) -> Result<()> {
    if !(lo.is_finite() && hi.is_finite() && lo < hi) {
        return Err(Error::invalid(format!("empty interval [{lo}, {hi}]")));
    }
    if hi - lo > PI + 1e-12 {
        return Err(Error::invalid(format!("interval [{lo}, {hi}] spans more than π")));
    }
    Ok(())
}

fn inflection_inside(kind: TrigKind, lo: f64, hi: f64) -> Option<f64> {
    let base = match kind {
        TrigKind::Sin => 0.0,
        TrigKind::Cos => FRAC_PI_2,
    };
    let mut p = base + PI * ((lo - base) / PI).ceil();
    if p <= lo {
        p += PI;
    }
    (p < hi).then_some(p)
}

fn sign_of(v: f64) -> CurvatureSign {
    if v > 0.0 {
        CurvatureSign::Positive
    } else if v < 0.0 {
        CurvatureSign::Negative
    } else {
        CurvatureSign::None
    }
}

fn chord_stationary_points(kind: TrigKind, lo: f64, hi: f64) -> Vec<f64> {
    let slope = (kind.eval(hi) - kind.eval(lo)) / (hi - lo);
    let mut out = Vec::new();
    if slope.abs() > 1.0 {
        return out;
    }
    let k_lo = (lo / PI).floor() as i64 - 2;
    let k_hi = (hi / PI).ceil() as i64 + 2;
    for k in k_lo..=k_hi {
        let kf = k as f64;
        let candidates = match kind {
            TrigKind::Sin => {
                let r = slope.acos();
                [r + 2.0 * PI * kf, -r + 2.0 * PI * kf]
            }
            TrigKind::Cos => {
                let r = (-slope).asin();
                let sign = if k.rem_euclid(2) == 0 { 1.0 } else { -1.0 };
                [sign * r + PI * kf, f64::NAN]
            }
        };
        out.extend(candidates.into_iter().filter(|z| *z >= lo && *z <= hi));
    }
    out.sort_by(f64::total_cmp);
    out.dedup_by(|a, b| (*a - *b).abs() < 1e-14);
    out
}

/// Classifies the curvature of `kind` over the shifted argument interval.
pub fn detect_curvature_change(kind: TrigKind, a: f64, lo: f64, hi: f64) -> Result<CurvatureReport> {
    check_interval(lo, hi)?;
    let inflection = inflection_inside(kind, lo, hi);
    let sign_when_constant = match inflection {
        Some(_) => CurvatureSign::None,
        None => sign_of(kind.second_derivative(0.5 * (lo + hi))),
    };
    Ok(CurvatureReport {
        kind,
        shift: a,
        lo,
        hi,
        changes: inflection.is_some(),
        inflection,
        sign_when_constant,
        z_set: chord_stationary_points(kind, lo, hi),
    })
}

/// Root in `[search_lo, search_hi]` of `G(t) = f(t) + f'(t)(e − t) − f(e)`,
/// i.e. the tangency point of a tangent line through the curve point at `e`.
/// Returns `None` when `G` keeps one sign on the bracket.
pub fn tangency_root(kind: TrigKind, search_lo: f64, search_hi: f64, endpoint: f64) -> Result<Option<f64>> {
    let fe = kind.eval(endpoint);
    let g = |t: f64| kind.eval(t) + kind.derivative(t) * (endpoint - t) - fe;
    let dg = |t: f64| kind.second_derivative(t) * (endpoint - t);
    let (mut lo, mut hi) = (search_lo, search_hi);
    let (mut g_lo, g_hi) = (g(lo), g(hi));
    if g_lo == 0.0 {
        return Ok(Some(lo));
    }
    if g_hi == 0.0 {
        return Ok(Some(hi));
    }
    if g_lo.signum() == g_hi.signum() {
        return Ok(None);
    }
    while hi - lo > BISECTION_WIDTH {
        let mid = 0.5 * (lo + hi);
        let g_mid = g(mid);
        if g_mid.signum() == g_lo.signum() {
            lo = mid;
            g_lo = g_mid;
        } else {
            hi = mid;
        }
    }
    let mut t = 0.5 * (lo + hi);
    for _ in 0..NEWTON_MAX_ITER {
        let gt = g(t);
        if gt.abs() <= NEWTON_RESIDUAL {
            return Ok(Some(t));
        }
        if gt.signum() == g_lo.signum() {
            lo = t;
        } else {
            hi = t;
        }
        let slope = dg(t);
        let step = if slope != 0.0 { t - gt / slope } else { f64::NAN };
        t = if step > lo && step < hi { step } else { 0.5 * (lo + hi) };
        if hi - lo <= f64::EPSILON * (1.0 + t.abs()) {
            return Ok(Some(t));
        }
    }
    let residual = g(t);
    if residual.abs() <= 1e-10 {
        return Ok(Some(t));
    }
    Err(Error::Numerical(format!(
        "tangency root for {} through {endpoint} did not converge in [{search_lo}, {search_hi}]: residual {residual:e}",
        kind.name()
    )))
}

/// Tangency points whose tangents pass through the curve at the opposite end.
///
/// `R_lo` lies left of the inflection and its tangent meets the curve at `hi`;
/// `R_hi` lies right of it and its tangent meets the curve at `lo`.
pub fn boundary_tangency_points(kind: TrigKind, a: f64, lo: f64, hi: f64) -> Result<(f64, f64)> {
    let report = detect_curvature_change(kind, a, lo, hi)?;
    let p = report
        .inflection
        .ok_or_else(|| Error::invalid(format!("{} has constant curvature on [{lo}, {hi}]", kind.name())))?;
    let not_bracketed = |side: &str| {
        Error::Numerical(format!(
            "{side} tangency root not bracketed for {} on [{lo}, {hi}] (inflection {p})",
            kind.name()
        ))
    };
    let r_lo = tangency_root(kind, lo, p.min(hi - ENDPOINT_MARGIN), hi)?.ok_or_else(|| not_bracketed("lower"))?;
    let r_hi = tangency_root(kind, p.max(lo + ENDPOINT_MARGIN), hi, lo)?.ok_or_else(|| not_bracketed("upper"))?;
    Ok((r_lo, r_hi))
}

fn anchors(lo: f64, hi: f64, n: usize) -> Vec<f64> {
    if n == 1 {
        return vec![0.5 * (lo + hi)];
    }
    (0..n).map(|i| lo + (hi - lo) * i as f64 / (n - 1) as f64).collect()
}

fn tangents(kind: TrigKind, points: &[f64], extra: Option<f64>, sense: Side) -> Vec<LinearBound> {
    let mut pts: Vec<f64> = points.to_vec();
    if let Some(e) = extra {
        if pts.iter().all(|p| (p - e).abs() > 1e-15) {
            pts.push(e);
        }
    }
    pts.sort_by(f64::total_cmp);
    pts.into_iter().map(|t| LinearBound::tangent(kind, t, sense)).collect()
}

/// Polyhedral envelope from equally spaced tangent lines and chords.
pub fn build_tangent_envelope(kind: TrigKind, a: f64, lo: f64, hi: f64, n_tan: usize) -> Result<TrigEnvelope> {
    if n_tan == 0 {
        return Err(Error::invalid("n_tan must be at least 1"));
    }
    let mut env = TrigEnvelope {
        kind,
        shift: a,
        lo,
        hi,
        upper_bounds: Vec::new(),
        lower_bounds: Vec::new(),
        quadratic_upper: None,
    };
    if lo < hi && hi - lo < DEGENERATE_WIDTH {
        let (f_lo, f_hi) = (kind.eval(lo), kind.eval(hi));
        let flat = |offset: f64, sense| LinearBound { slope: 0.0, offset, anchor: lo, sense };
        env.upper_bounds.push(flat(f_lo.max(f_hi) + 1e-12, Side::Upper));
        env.lower_bounds.push(flat(f_lo.min(f_hi) - 1e-12, Side::Lower));
        return Ok(env);
    }
    let report = detect_curvature_change(kind, a, lo, hi)?;
    let Some(p) = report.inflection else {
        let points = anchors(lo, hi, n_tan);
        match report.sign_when_constant {
            CurvatureSign::Negative => {
                env.upper_bounds = tangents(kind, &points, None, Side::Upper);
                env.lower_bounds.push(LinearBound::chord(kind, lo, hi, Side::Lower));
            }
            CurvatureSign::Positive => {
                env.lower_bounds = tangents(kind, &points, None, Side::Lower);
                env.upper_bounds.push(LinearBound::chord(kind, lo, hi, Side::Upper));
            }
            CurvatureSign::None => {
                env.upper_bounds.push(LinearBound::chord(kind, lo, hi, Side::Upper));
                env.lower_bounds.push(LinearBound::chord(kind, lo, hi, Side::Lower));
            }
        }
        return Ok(env);
    };

    let left_sense = if kind.second_derivative(0.5 * (lo + p)) > 0.0 { Side::Lower } else { Side::Upper };
    let right_sense = match left_sense {
        Side::Lower => Side::Upper,
        Side::Upper => Side::Lower,
    };
    let left = match tangency_root(kind, lo, p.min(hi - ENDPOINT_MARGIN), hi)? {
        Some(r) => tangents(kind, &anchors(lo, r, n_tan), Some(r), left_sense),
        None => vec![LinearBound::chord(kind, lo, hi, left_sense)],
    };
    let right = match tangency_root(kind, p.max(lo + ENDPOINT_MARGIN), hi, lo)? {
        Some(r) => tangents(kind, &anchors(r, hi, n_tan), Some(r), right_sense),
        None => vec![LinearBound::chord(kind, lo, hi, right_sense)],
    };
    for (bounds, sense) in [(left, left_sense), (right, right_sense)] {
        match sense {
            Side::Upper => env.upper_bounds.extend(bounds),
            Side::Lower => env.lower_bounds.extend(bounds),
        }
    }
    Ok(env)
}
