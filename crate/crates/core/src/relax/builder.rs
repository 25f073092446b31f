use std::time::{Duration, Instant};

use serde::{Deserialize, Serialize};

use super::model::{ConicModel, LinExpr, RowSense, VarId};
use super::solver::{SolveStatus, SolverAdapter};
use crate::error::{Error, Result};
use crate::netmodel::{effective_argument_shift, BranchRecord, NetworkCase};
use crate::prodenv::{
    arc_extreme_points, box_trilinear_points, lift_by_voltage_box, split_theta_spans, BoxCorner, LiftedExtremePoint,
    VoltageBox,
};
use crate::rotation::PsiAssignment;
use crate::trigenv::{build_tangent_envelope, classic_trig_envelopes, Side, TrigEnvelope, TrigKind};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum RelaxationKind {
    Qc,
    Rqc,
    Lrqc,
}

impl RelaxationKind {
    pub fn name(self) -> &'static str {
        match self {
            RelaxationKind::Qc => "qc",
            RelaxationKind::Rqc => "rqc",
            RelaxationKind::Lrqc => "lrqc",
        }
    }
}

/// How the angle coordinate of an arc-polygon apex enters the λ block.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ThetaCoupling {
    /// The apex angle may range over the interval its arc points require
    /// (see [`split_theta_spans`]).
    Interval,
    /// The apex is pinned to its segment's midpoint angle. Tighter, but cuts
    /// off arc points away from the midpoint, so the result is not a valid
    /// relaxation.
    Midpoint,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BuildOptions {
    /// Tangent lines per admissible sub-interval (RQC and LRQC).
    pub n_tan: usize,
    /// Arc segments of the LRQC polygon.
    pub n_seg: usize,
    pub theta_coupling: ThetaCoupling,
    /// Link squared current magnitude and from-side flow with a rotated cone.
    pub current_magnitude: bool,
    /// Add `wr² + wi² ≤ w_f·w_t` per branch.
    pub voltage_product_cuts: bool,
    /// Add the angle-difference tangent rows on `(wr, wi)` and the lifted
    /// nonlinear cuts that couple them with `w_f`, `w_t`.
    pub angle_difference_cuts: bool,
    /// Also envelope the to-side argument `θ + δ + ψ − σ` of RQC and LRQC
    /// branches in its own frame, tied to the from-side one through the
    /// shared rectangular products.
    pub reverse_frame: bool,
}

impl Default for BuildOptions {
    fn default() -> Self {
        BuildOptions {
            n_tan: 5,
            n_seg: 5,
            theta_coupling: ThetaCoupling::Interval,
            current_magnitude: true,
            voltage_product_cuts: false,
            angle_difference_cuts: false,
            reverse_frame: true,
        }
    }
}

/// Coefficients on `(w_f, w_t, wr, wi)` of the branch flows, where
/// `wr + j·wi = V_f·V_t·e^{j(θ_f − θ_t)}`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FlowCoefficients {
    pub p_from: [f64; 4],
    pub q_from: [f64; 4],
    pub p_to: [f64; 4],
    pub q_to: [f64; 4],
    /// Squared from-side current magnitude.
    pub current_from: [f64; 4],
}

pub fn flow_coefficients(br: &BranchRecord) -> FlowCoefficients {
    let (g, b, tau) = (br.series_g, br.series_b, br.tap_ratio);
    let bp = b + 0.5 * br.charging_b;
    let (cs, sn) = (br.phase_shift.cos(), br.phase_shift.sin());
    let alpha = g * cs - b * sn;
    let beta = -(g * sn + b * cs);
    let gamma = g * cs + b * sn;
    let eta = g * sn - b * cs;
    let t2 = tau * tau;
    let rho = g * alpha - bp * beta;
    let kappa = g * beta + bp * alpha;
    FlowCoefficients {
        p_from: [g / t2, 0.0, -alpha / tau, beta / tau],
        q_from: [-bp / t2, 0.0, -beta / tau, -alpha / tau],
        p_to: [0.0, g, -gamma / tau, -eta / tau],
        q_to: [0.0, -bp, -eta / tau, gamma / tau],
        current_from: [
            (g * g + bp * bp) / (t2 * t2),
            (g * g + b * b) / t2,
            -2.0 * rho / (t2 * tau),
            2.0 * kappa / (t2 * tau),
        ],
    }
}

fn combine(coef: &[f64; 4], parts: [&LinExpr; 4]) -> LinExpr {
    let mut out = LinExpr::zero();
    for (c, e) in coef.iter().zip(parts) {
        out = out + e.clone() * *c;
    }
    out
}

fn eval4(coef: &[f64; 4], vals: [f64; 4]) -> f64 {
    coef.iter().zip(vals).map(|(c, v)| c * v).sum()
}

/// Lifted terms of one argument frame `x = θ_lm − a` of a branch.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LiftedFrame {
    pub shift: f64,
    /// Lifted `cos x` and `sin x`.
    pub trig_cos: VarId,
    pub trig_sin: VarId,
    /// Lifted `V_f·V_t·cos x` and `V_f·V_t·sin x`.
    pub prod_cos: VarId,
    pub prod_sin: VarId,
    /// Convex-combination weights of the product envelope.
    pub weights: Vec<VarId>,
}

/// Variables of one branch.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BranchVars {
    pub angle_diff: VarId,
    /// The from-side frame first, then the to-side frame when built.
    pub frames: Vec<LiftedFrame>,
    pub p_from: VarId,
    pub q_from: VarId,
    pub p_to: VarId,
    pub q_to: VarId,
    pub current: Option<VarId>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModelIndex {
    pub v: Vec<VarId>,
    pub w: Vec<VarId>,
    pub theta: Vec<VarId>,
    pub pg: Vec<VarId>,
    pub qg: Vec<VarId>,
    pub cost: Vec<Option<VarId>>,
    pub branches: Vec<BranchVars>,
}

/// A built relaxation with handles to its physical variables.
#[derive(Debug, Clone)]
pub struct RelaxModel {
    pub kind: RelaxationKind,
    pub model: ConicModel,
    pub index: ModelIndex,
    pub build_time: Duration,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RelaxSolution {
    pub kind: RelaxationKind,
    pub status: SolveStatus,
    pub raw_status: String,
    /// Objective lower bound in $/h, present when optimal.
    pub bound: Option<f64>,
    pub primal: Vec<f64>,
    pub build_time: Duration,
    pub solve_time: Duration,
}

impl RelaxSolution {
    pub fn value(&self, v: VarId) -> f64 {
        self.primal[v.0]
    }
}

pub fn build_qc(case: &NetworkCase, options: &BuildOptions) -> Result<RelaxModel> {
    build(case, RelaxationKind::Qc, &|_| 0.0, options)
}

pub fn build_rqc(case: &NetworkCase, psi: f64, options: &BuildOptions) -> Result<RelaxModel> {
    build(case, RelaxationKind::Rqc, &|_| psi, options)
}

pub fn build_lrqc(
    case: &NetworkCase,
    psi: &PsiAssignment,
    n_seg: usize,
    n_tan: usize,
    options: &BuildOptions,
) -> Result<RelaxModel> {
    let options = BuildOptions { n_seg, n_tan, ..*options };
    build(case, RelaxationKind::Lrqc, &|bus| psi.psi(bus), &options)
}

pub fn solve_relaxation(model: &RelaxModel, adapter: &dyn SolverAdapter) -> Result<RelaxSolution> {
    if !model.model.cones.is_empty() && !adapter.supports_soc() {
        return Err(Error::Solver(format!("adapter {} cannot handle cone constraints", adapter.name())));
    }
    let out = adapter.solve(&model.model)?;
    Ok(RelaxSolution {
        kind: model.kind,
        status: out.status,
        raw_status: out.raw_status,
        bound: (out.status == SolveStatus::Optimal).then_some(out.objective),
        primal: out.primal,
        build_time: model.build_time,
        solve_time: out.wall_time,
    })
}

fn build(case: &NetworkCase, kind: RelaxationKind, psi_of: &dyn Fn(usize) -> f64, opts: &BuildOptions) -> Result<RelaxModel> {
    let started = Instant::now();
    if opts.n_tan == 0 || opts.n_seg == 0 {
        return Err(Error::Build("n_tan and n_seg must be at least 1".into()));
    }
    let mut m = ConicModel::new();
    let n_bus = case.buses.len();
    let mut index = ModelIndex {
        v: Vec::with_capacity(n_bus),
        w: Vec::with_capacity(n_bus),
        theta: Vec::with_capacity(n_bus),
        pg: Vec::new(),
        qg: Vec::new(),
        cost: Vec::new(),
        branches: Vec::new(),
    };

    for bus in &case.buses {
        let id = bus.id;
        let (lo, hi) = (bus.v_min, bus.v_max);
        if !(lo > 0.0 && lo <= hi) {
            return Err(Error::Build(format!("bus {id} has voltage bounds [{lo}, {hi}]")));
        }
        let v = m.add_var(format!("V[{id}]"), lo, hi);
        let w = m.add_var(format!("w[{id}]"), lo * lo, hi * hi);
        let theta = if bus.is_reference { m.add_var(format!("theta[{id}]"), 0.0, 0.0) } else { m.add_free(format!("theta[{id}]")) };
        m.add_soc(format!("sq_lower[{id}]"), vec![v * 2.0, w - 1.0], w + 1.0);
        if lo < hi {
            m.add_linear(format!("sq_upper[{id}]"), w - v * (lo + hi), RowSense::Le, -lo * hi);
        }
        index.v.push(v);
        index.w.push(w);
        index.theta.push(theta);
    }

    let mut objective = LinExpr::zero();
    for (k, gen) in case.generators.iter().enumerate() {
        let pg = m.add_var(format!("Pg[{k}]"), gen.p_min, gen.p_max);
        let qg = m.add_var(format!("Qg[{k}]"), gen.q_min, gen.q_max);
        let cost = if gen.c2 > 0.0 {
            let t = m.add_var(format!("cost[{k}]"), 0.0, f64::INFINITY);
            m.add_soc(format!("cost_epi[{k}]"), vec![pg * (2.0 * gen.c2.sqrt()), t - 1.0], t + 1.0);
            objective = objective + t;
            Some(t)
        } else {
            None
        };
        objective = objective + pg * gen.c1 + gen.c0;
        index.pg.push(pg);
        index.qg.push(qg);
        index.cost.push(cost);
    }

    for (k, br) in case.branches.iter().enumerate() {
        let vars = add_branch(&mut m, case, &index, k, br, kind, psi_of, opts)?;
        index.branches.push(vars);
    }

    for (i, bus) in case.buses.iter().enumerate() {
        let (pd, qd) = case.load(bus.id);
        let mut p = LinExpr::zero();
        let mut q = LinExpr::zero();
        for (g, gen) in case.generators.iter().enumerate() {
            if gen.bus == bus.id {
                p.add_term(index.pg[g], 1.0);
                q.add_term(index.qg[g], 1.0);
            }
        }
        p.add_term(index.w[i], -bus.shunt_g);
        q.add_term(index.w[i], bus.shunt_b);
        for (br, vars) in case.branches.iter().zip(&index.branches) {
            if br.from_bus == bus.id {
                p.add_term(vars.p_from, -1.0);
                q.add_term(vars.q_from, -1.0);
            }
            if br.to_bus == bus.id {
                p.add_term(vars.p_to, -1.0);
                q.add_term(vars.q_to, -1.0);
            }
        }
        m.add_linear(format!("p_balance[{}]", bus.id), p, RowSense::Eq, pd);
        m.add_linear(format!("q_balance[{}]", bus.id), q, RowSense::Eq, qd);
    }

    m.set_objective(objective);
    m.validate()?;
    Ok(RelaxModel { kind, model: m, index, build_time: started.elapsed() })
}

#[allow(clippy::too_many_arguments)]
fn add_branch(
    m: &mut ConicModel,
    case: &NetworkCase,
    index: &ModelIndex,
    k: usize,
    br: &BranchRecord,
    kind: RelaxationKind,
    psi_of: &dyn Fn(usize) -> f64,
    opts: &BuildOptions,
) -> Result<BranchVars> {
    let f = case.bus_index(br.from_bus).ok_or_else(|| Error::Build(format!("branch {k}: unknown bus")))?;
    let t = case.bus_index(br.to_bus).ok_or_else(|| Error::Build(format!("branch {k}: unknown bus")))?;
    let td = m.add_var(format!("theta_diff[{k}]"), br.theta_min, br.theta_max);
    m.add_linear(format!("theta_diff_def[{k}]"), td - index.theta[f] + index.theta[t] * 1.0, RowSense::Eq, 0.0);

    let (bf, bt) = (&case.buses[f], &case.buses[t]);
    let vbox = VoltageBox { from_lo: bf.v_min, from_hi: bf.v_max, to_lo: bt.v_min, to_hi: bt.v_max };
    let ctx = FrameContext { k, kind, br, td, vf: index.v[f], vt: index.v[t], vbox, opts };

    // The from-side flows carry `θ − (δ + ψ + σ)`, the to-side ones `θ + δ + ψ − σ`.
    let mut shifts = match kind {
        RelaxationKind::Qc => vec![0.0],
        _ => vec![effective_argument_shift(br, psi_of(br.from_bus))?],
    };
    if kind != RelaxationKind::Qc && opts.reverse_frame {
        shifts.push(2.0 * br.phase_shift - shifts[0]);
    }
    let mut frames = Vec::with_capacity(shifts.len());
    for (j, &a) in shifts.iter().enumerate() {
        frames.push(add_frame(m, &ctx, if j == 0 { "" } else { "rev_" }, a)?);
    }
    let derotate = |fr: &LiftedFrame| {
        let (ca, sa) = (fr.shift.cos(), fr.shift.sin());
        (fr.prod_cos * ca - fr.prod_sin * sa, fr.prod_cos * sa + fr.prod_sin * ca)
    };
    let (wr, wi) = derotate(&frames[0]);
    for fr in &frames[1..] {
        let (wr2, wi2) = derotate(fr);
        m.add_linear(format!("frame_wr[{k}]"), wr.clone() - wr2, RowSense::Eq, 0.0);
        m.add_linear(format!("frame_wi[{k}]"), wi.clone() - wi2, RowSense::Eq, 0.0);
    }

    let wf: LinExpr = index.w[f].into();
    let wt: LinExpr = index.w[t].into();
    let coef = flow_coefficients(br);
    let parts = [&wf, &wt, &wr, &wi];
    let p_from = m.add_free(format!("P_from[{k}]"));
    let q_from = m.add_free(format!("Q_from[{k}]"));
    let p_to = m.add_free(format!("P_to[{k}]"));
    let q_to = m.add_free(format!("Q_to[{k}]"));
    for (var, c, name) in [
        (p_from, &coef.p_from, "p_from_def"),
        (q_from, &coef.q_from, "q_from_def"),
        (p_to, &coef.p_to, "p_to_def"),
        (q_to, &coef.q_to, "q_to_def"),
    ] {
        m.add_linear(format!("{name}[{k}]"), var - combine(c, parts), RowSense::Eq, 0.0);
    }
    if let Some(s) = br.s_max {
        m.add_soc(format!("s_from[{k}]"), vec![p_from.into(), q_from.into()], LinExpr::constant(s));
        m.add_soc(format!("s_to[{k}]"), vec![p_to.into(), q_to.into()], LinExpr::constant(s));
    }
    let current = if opts.current_magnitude {
        let l = m.add_var(format!("current[{k}]"), 0.0, f64::INFINITY);
        m.add_linear(format!("current_def[{k}]"), l - combine(&coef.current_from, parts), RowSense::Eq, 0.0);
        m.add_rotated_soc(format!("current_link[{k}]"), vec![p_from.into(), q_from.into()], wf.clone(), l.into());
        Some(l)
    } else {
        None
    };
    if opts.voltage_product_cuts {
        m.add_rotated_soc(format!("w_product[{k}]"), vec![wr.clone(), wi.clone()], wf.clone(), wt.clone());
    }
    if opts.angle_difference_cuts {
        add_angle_difference_cuts(m, k, br, &vbox, [&wf, &wt, &wr, &wi]);
    }

    Ok(BranchVars { angle_diff: td, frames, p_from, q_from, p_to, q_to, current })
}

struct FrameContext<'a> {
    k: usize,
    kind: RelaxationKind,
    br: &'a BranchRecord,
    td: VarId,
    vf: VarId,
    vt: VarId,
    vbox: VoltageBox,
    opts: &'a BuildOptions,
}

/// Trigonometric envelopes and the product envelope of the frame `θ − a`.
fn add_frame(m: &mut ConicModel, ctx: &FrameContext, tag: &str, a: f64) -> Result<LiftedFrame> {
    let FrameContext { k, kind, br, td, vf, vt, vbox, opts } = *ctx;
    let (lo, hi) = (br.theta_min - a, br.theta_max - a);
    let wrap = |e: Error| Error::Build(format!("branch {k}: {e}"));
    let (env_cos, env_sin) = match kind {
        RelaxationKind::Qc => (
            classic_trig_envelopes(TrigKind::Cos, lo, hi).map_err(wrap)?,
            classic_trig_envelopes(TrigKind::Sin, lo, hi).map_err(wrap)?,
        ),
        _ => (
            build_tangent_envelope(TrigKind::Cos, a, lo, hi, opts.n_tan).map_err(wrap)?,
            build_tangent_envelope(TrigKind::Sin, a, lo, hi, opts.n_tan).map_err(wrap)?,
        ),
    };

    let (cos_lo, cos_hi) = TrigKind::Cos.range(lo, hi);
    let (sin_lo, sin_hi) = TrigKind::Sin.range(lo, hi);
    let trig_cos = m.add_var(format!("{tag}C[{k}]"), cos_lo, cos_hi);
    let trig_sin = m.add_var(format!("{tag}S[{k}]"), sin_lo, sin_hi);
    add_envelope_rows(m, &format!("{tag}cos_env[{k}]"), &env_cos, trig_cos, td, a);
    add_envelope_rows(m, &format!("{tag}sin_env[{k}]"), &env_sin, trig_sin, td, a);

    let vv_max = vbox.from_hi * vbox.to_hi;
    let prod_cos = m.add_var(format!("{tag}cw[{k}]"), -vv_max, vv_max);
    let prod_sin = m.add_var(format!("{tag}sw[{k}]"), -vv_max, vv_max);

    let weights = match kind {
        RelaxationKind::Qc | RelaxationKind::Rqc => {
            let mu_pts = box_trilinear_points(&vbox, cos_lo, cos_hi)?;
            let gamma_pts = box_trilinear_points(&vbox, sin_lo, sin_hi)?;
            let mu = add_trilinear_block(m, &format!("{tag}mu[{k}]"), &mu_pts, vf, vt, trig_cos, prod_cos);
            let gamma = add_trilinear_block(m, &format!("{tag}gamma[{k}]"), &gamma_pts, vf, vt, trig_sin, prod_sin);
            let mut link = LinExpr::zero();
            for j in 0..8 {
                let vv = mu_pts[j].v_from * mu_pts[j].v_to;
                link.add_term(mu[j], vv).add_term(gamma[j], -vv);
            }
            m.add_linear(format!("{tag}link[{k}]"), link, RowSense::Eq, 0.0);
            mu.into_iter().chain(gamma).collect()
        }
        RelaxationKind::Lrqc => {
            let poly = arc_extreme_points(a, lo, hi, opts.n_seg).map_err(wrap)?;
            let lifted = lift_by_voltage_box(&poly, &vbox)?;
            let points = match opts.theta_coupling {
                ThetaCoupling::Interval => split_theta_spans(&lifted),
                ThetaCoupling::Midpoint => lifted,
            };
            let lambda: Vec<VarId> =
                (0..points.len()).map(|j| m.add_var(format!("{tag}lambda[{k}.{j}]"), 0.0, f64::INFINITY)).collect();
            let coords: [(&str, VarId, fn(&LiftedExtremePoint) -> f64); 7] = [
                ("vf", vf, |p| p.v_from),
                ("vt", vt, |p| p.v_to),
                ("theta", td, |p| p.theta),
                ("C", trig_cos, |p| p.c),
                ("S", trig_sin, |p| p.s),
                ("cw", prod_cos, |p| p.product() * p.c),
                ("sw", prod_sin, |p| p.product() * p.s),
            ];
            let mut sum = LinExpr::zero();
            for &l in &lambda {
                sum.add_term(l, 1.0);
            }
            m.add_linear(format!("{tag}lambda_sum[{k}]"), sum, RowSense::Eq, 1.0);
            for (name, target, coord) in coords {
                let mut row = LinExpr::term(target, -1.0);
                for (p, &l) in points.iter().zip(&lambda) {
                    row.add_term(l, coord(p));
                }
                m.add_linear(format!("{tag}lambda_{name}[{k}]"), row, RowSense::Eq, 0.0);
            }
            lambda
        }
    };
    Ok(LiftedFrame { shift: a, trig_cos, trig_sin, prod_cos, prod_sin, weights })
}

/// `tan θ̲·wr ≤ wi ≤ tan θ̄·wr` and the two lifted nonlinear cuts over the
/// voltage box and angle interval.
fn add_angle_difference_cuts(m: &mut ConicModel, k: usize, br: &BranchRecord, vbox: &VoltageBox, [wf, wt, wr, wi]: [&LinExpr; 4]) {
    let (tl, tu) = (br.theta_min, br.theta_max);
    m.add_linear(format!("angle_tan_hi[{k}]"), wi.clone() - wr.clone() * tu.tan(), RowSense::Le, 0.0);
    m.add_linear(format!("angle_tan_lo[{k}]"), wi.clone() - wr.clone() * tl.tan(), RowSense::Ge, 0.0);
    let (vfl, vfu, vtl, vtu) = (vbox.from_lo, vbox.from_hi, vbox.to_lo, vbox.to_hi);
    let (sf, st) = (vfl + vfu, vtl + vtu);
    let (phi, d) = (0.5 * (tu + tl), 0.5 * (tu - tl));
    let proj = (wr.clone() * phi.cos() + wi.clone() * phi.sin()) * (sf * st);
    let spread = vfl * vtl - vfu * vtu;
    m.add_linear(
        format!("lnc_hi[{k}]"),
        proj.clone() - wf.clone() * (vtu * d.cos() * st) - wt.clone() * (vfu * d.cos() * sf),
        RowSense::Ge,
        vfu * vtu * d.cos() * spread,
    );
    m.add_linear(
        format!("lnc_lo[{k}]"),
        proj - wf.clone() * (vtl * d.cos() * st) - wt.clone() * (vfl * d.cos() * sf),
        RowSense::Ge,
        -vfl * vtl * d.cos() * spread,
    );
}

/// Rows `y ≤/≥ slope·(x − anchor) + offset` with `x = td − a`.
fn add_envelope_rows(m: &mut ConicModel, name: &str, env: &TrigEnvelope, y: VarId, td: VarId, a: f64) {
    for (i, b) in env.bounds().enumerate() {
        let sense = match b.sense {
            Side::Upper => RowSense::Le,
            Side::Lower => RowSense::Ge,
        };
        m.add_linear(format!("{name}.{i}"), y - td * b.slope, sense, b.offset - b.slope * (b.anchor + a));
    }
    if let Some(q) = env.quadratic_upper {
        let x = td - a;
        m.add_soc(format!("{name}.quad"), vec![x * (2.0 * q.curvature.sqrt()), y.into()], LinExpr::constant(2.0) - y);
    }
}

fn add_trilinear_block(
    m: &mut ConicModel,
    name: &str,
    corners: &[BoxCorner; 8],
    vf: VarId,
    vt: VarId,
    trig: VarId,
    prod: VarId,
) -> Vec<VarId> {
    let weights: Vec<VarId> = (0..8).map(|j| m.add_var(format!("{name}.{j}"), 0.0, f64::INFINITY)).collect();
    let mut sum = LinExpr::zero();
    for &w in &weights {
        sum.add_term(w, 1.0);
    }
    m.add_linear(format!("{name}.sum"), sum, RowSense::Eq, 1.0);
    let coords: [(VarId, fn(&BoxCorner) -> f64, &str); 4] = [
        (vf, |c| c.v_from, "vf"),
        (vt, |c| c.v_to, "vt"),
        (trig, |c| c.w, "trig"),
        (prod, BoxCorner::product, "prod"),
    ];
    for (target, coord, label) in coords {
        let mut row = LinExpr::term(target, -1.0);
        for (c, &w) in corners.iter().zip(&weights) {
            row.add_term(w, coord(c));
        }
        m.add_linear(format!("{name}.{label}"), row, RowSense::Eq, 0.0);
    }
    weights
}

impl RelaxModel {
    /// Values every non-weight variable takes at an AC operating point given
    /// by voltage magnitudes, angles and generator dispatch (per-unit, in
    /// bus and generator order).
    pub fn operating_point_values(
        &self,
        case: &NetworkCase,
        vm: &[f64],
        va: &[f64],
        pg: &[f64],
        qg: &[f64],
    ) -> Vec<(VarId, f64)> {
        let idx = &self.index;
        let mut out = Vec::new();
        for i in 0..case.buses.len() {
            out.push((idx.v[i], vm[i]));
            out.push((idx.w[i], vm[i] * vm[i]));
            out.push((idx.theta[i], va[i]));
        }
        for (g, gen) in case.generators.iter().enumerate() {
            out.push((idx.pg[g], pg[g]));
            out.push((idx.qg[g], qg[g]));
            if let Some(t) = idx.cost[g] {
                out.push((t, gen.c2 * pg[g] * pg[g]));
            }
        }
        for (br, vars) in case.branches.iter().zip(&idx.branches) {
            let f = case.bus_index(br.from_bus).unwrap();
            let t = case.bus_index(br.to_bus).unwrap();
            let td = va[f] - va[t];
            let vv = vm[f] * vm[t];
            out.push((vars.angle_diff, td));
            for fr in &vars.frames {
                let x = td - fr.shift;
                out.push((fr.trig_cos, x.cos()));
                out.push((fr.trig_sin, x.sin()));
                out.push((fr.prod_cos, vv * x.cos()));
                out.push((fr.prod_sin, vv * x.sin()));
            }
            let vals = [vm[f] * vm[f], vm[t] * vm[t], vv * td.cos(), vv * td.sin()];
            let coef = flow_coefficients(br);
            out.push((vars.p_from, eval4(&coef.p_from, vals)));
            out.push((vars.q_from, eval4(&coef.q_from, vals)));
            out.push((vars.p_to, eval4(&coef.p_to, vals)));
            out.push((vars.q_to, eval4(&coef.q_to, vals)));
            if let Some(l) = vars.current {
                out.push((l, eval4(&coef.current_from, vals)));
            }
        }
        out
    }

    /// Copy of the model with the given variables fixed.
    pub fn restricted(&self, values: &[(VarId, f64)]) -> ConicModel {
        let mut m = self.model.clone();
        for &(v, x) in values {
            m.fix(v, x);
        }
        m
    }
}
