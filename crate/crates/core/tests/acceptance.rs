//! Acceptance suite. Every test prints one `PASS`/`FAIL` line for its
//! criterion (written past the harness capture so it shows in plain
//! `cargo test` output), followed by indented detail lines.

mod common;

use std::f64::consts::{FRAC_PI_2, PI};
use std::io::Write;
use std::sync::OnceLock;
use std::time::{Duration, Instant};

use common::{branch_power, load_case, two_bus};
use num_complex::Complex64;
use opfrelax::netmodel::{reference_gap, NetworkCase, ReferenceObjectives};
use opfrelax::prodenv::{
    arc_extreme_points, lift_by_voltage_box, sincos_envelope_metrics, split_theta_spans, VoltageBox,
};
use opfrelax::relax::*;
use opfrelax::rotation::{fixed_psi, rotated_branch_flows, select_bus_rotation_angles};
use opfrelax::trigenv::{boundary_tangency_points, build_tangent_envelope, TrigKind};
use rand::rngs::StdRng;
use rand::{RngExt, SeedableRng};
use rayon::prelude::*;

const BENCH_CASES: [&str; 4] = ["case3_lmbd", "case14_ieee", "case30_ieee", "case39_epri"];
const QC_GAP: [f64; 4] = [0.97, 0.11, 18.67, 0.54];
const LRQC_GAP: [f64; 4] = [0.26, 0.09, 9.08, 0.50];
const RQC_PSI_DEG: [f64; 4] = [11.0, -23.0, -25.0, 0.0];
const QC_TOL: f64 = 0.30;
const LRQC_TOL: f64 = 0.50;
const TIME_LIMIT: Duration = Duration::from_secs(30);

const PSI_DAGGER_DEG: f64 = -85.0;
const PSI_DAGGER_GAP: f64 = 0.27;
const PSI_DAGGER_TOL: f64 = 0.30;

const DOMINANCE_SLACK: f64 = 0.05;

const NSEG: [usize; 4] = [3, 5, 10, 20];
const NSEG_GAP: [f64; 4] = [16.48, 12.06, 8.46, 7.89];
const NSEG_TOL: f64 = 1.0;

const BOUND_REL_TOL: f64 = 1e-6;

fn report(pass: bool, criterion: &str, details: &[String]) {
    let mut out = std::io::stdout().lock();
    let tag = if pass { "PASS" } else { "FAIL" };
    writeln!(out, "[acceptance] {tag} {criterion}").unwrap();
    for d in details {
        writeln!(out, "[acceptance]      {d}").unwrap();
    }
    out.flush().unwrap();
}

fn finish(pass: bool, criterion: &str, details: Vec<String>) {
    report(pass, criterion, &details);
    assert!(pass, "{criterion}\n{}", details.join("\n"));
}

/// One solved relaxation of a reference case.
#[derive(Clone, Copy)]
struct Solved {
    bound: f64,
    gap: f64,
    elapsed: Duration,
}

fn solve(case: &NetworkCase, reference: f64, build: impl FnOnce(&NetworkCase) -> RelaxModel) -> Solved {
    let started = Instant::now();
    let model = build(case);
    let sol = solve_relaxation(&model, &ClarabelAdapter::default()).unwrap();
    assert_eq!(sol.status, SolveStatus::Optimal, "{}: {:?} ended with {}", case.name, model.kind, sol.raw_status);
    let bound = sol.bound.unwrap();
    Solved { bound, gap: reference_gap(bound, reference).unwrap(), elapsed: started.elapsed() }
}

struct CaseRun {
    name: &'static str,
    reference: f64,
    qc: Solved,
    rqc: Solved,
    lrqc: Solved,
    lrqc_dagger: Solved,
}

fn bench_runs() -> &'static [CaseRun] {
    static RUNS: OnceLock<Vec<CaseRun>> = OnceLock::new();
    RUNS.get_or_init(|| {
        let refs = ReferenceObjectives::embedded();
        BENCH_CASES
            .par_iter()
            .enumerate()
            .map(|(i, &name)| {
                let case = load_case(name);
                let reference = refs.get(name).unwrap();
                let o = BuildOptions::default();
                let qc = solve(&case, reference, |c| build_qc(c, &o).unwrap());
                let rqc = solve(&case, reference, |c| build_rqc(c, RQC_PSI_DEG[i].to_radians(), &o).unwrap());
                let lrqc = solve(&case, reference, |c| {
                    let (psi, _) = select_bus_rotation_angles(c, 1f64.to_radians(), o.n_seg).unwrap();
                    build_lrqc(c, &psi, 5, 5, &o).unwrap()
                });
                let dagger = fixed_psi(PSI_DAGGER_DEG.to_radians(), &case);
                let lrqc_dagger = solve(&case, reference, |c| build_lrqc(c, &dagger, 5, 5, &o).unwrap());
                CaseRun { name, reference, qc, rqc, lrqc, lrqc_dagger }
            })
            .collect()
    })
}

fn nseg_runs() -> &'static [(usize, Solved)] {
    static RUNS: OnceLock<Vec<(usize, Solved)>> = OnceLock::new();
    RUNS.get_or_init(|| {
        let case = load_case("case30_ieee");
        let reference = ReferenceObjectives::embedded().get("case30_ieee").unwrap();
        let psi = fixed_psi(PSI_DAGGER_DEG.to_radians(), &case);
        let o = BuildOptions::default();
        NSEG.par_iter().map(|&n| (n, solve(&case, reference, |c| build_lrqc(c, &psi, n, 5, &o).unwrap()))).collect()
    })
}

#[test]
fn criterion_1_published_gaps() {
    let mut pass = true;
    let mut details = Vec::new();
    for (i, run) in bench_runs().iter().enumerate() {
        let qc_ok = (run.qc.gap - QC_GAP[i]).abs() <= QC_TOL;
        let lrqc_ok = (run.lrqc.gap - LRQC_GAP[i]).abs() <= LRQC_TOL;
        let time_ok = run.qc.elapsed < TIME_LIMIT && run.lrqc.elapsed < TIME_LIMIT;
        pass &= qc_ok && lrqc_ok && time_ok;
        details.push(format!(
            "{:<12} QC {:.3}% (target {:.2}±{QC_TOL}) {}  LRQC {:.3}% (target {:.2}±{LRQC_TOL}) {}  time {:.2}s/{:.2}s {}",
            run.name,
            run.qc.gap,
            QC_GAP[i],
            ok(qc_ok),
            run.lrqc.gap,
            LRQC_GAP[i],
            ok(lrqc_ok),
            run.qc.elapsed.as_secs_f64(),
            run.lrqc.elapsed.as_secs_f64(),
            ok(time_ok),
        ));
    }
    finish(pass, "1 published QC and LRQC gaps", details);
}

fn ok(b: bool) -> &'static str {
    if b {
        "ok"
    } else {
        "MISS"
    }
}

#[test]
fn criterion_2_fixed_psi_dagger() {
    let run = &bench_runs()[0];
    let pass = (run.lrqc_dagger.gap - PSI_DAGGER_GAP).abs() <= PSI_DAGGER_TOL;
    finish(
        pass,
        "2 case3_lmbd LRQC at constant ψ = −85°",
        vec![format!("gap {:.3}% (target {PSI_DAGGER_GAP}±{PSI_DAGGER_TOL})", run.lrqc_dagger.gap)],
    );
}

#[test]
fn criterion_3_dominance() {
    let mut pass = true;
    let mut details = Vec::new();
    for run in &bench_runs()[..3] {
        let holds = run.lrqc.gap <= run.rqc.gap + DOMINANCE_SLACK && run.rqc.gap <= run.qc.gap + DOMINANCE_SLACK;
        pass &= holds;
        details.push(format!(
            "{:<12} LRQC {:.3}% ≤ RQC {:.3}% ≤ QC {:.3}% (+{DOMINANCE_SLACK}) {}",
            run.name,
            run.lrqc.gap,
            run.rqc.gap,
            run.qc.gap,
            ok(holds)
        ));
    }
    finish(pass, "3 relaxation dominance", details);
}

#[test]
fn criterion_4_segment_study() {
    let runs = nseg_runs();
    let mut details = Vec::new();
    let mut pass = true;
    for (k, (n, s)) in runs.iter().enumerate() {
        let close = (s.gap - NSEG_GAP[k]).abs() <= NSEG_TOL;
        pass &= close;
        details.push(format!("case30_ieee n_seg={n:<2} gap {:.3}% (target {:.2}±{NSEG_TOL}) {}", s.gap, NSEG_GAP[k], ok(close)));
    }
    let monotone = runs.windows(2).all(|w| w[1].1.gap <= w[0].1.gap + 1e-6 * w[0].1.gap.abs().max(1.0));
    pass &= monotone;
    details.push(format!("gaps non-increasing {}", ok(monotone)));

    let area = |n| sincos_envelope_metrics(0.0, -PI / 3.0, PI / 3.0, n).unwrap().area_2d;
    let decreasing = (3..6).all(|n| area(n + 1) < area(n));
    let diminishing = (area(12) - area(22)).abs() < (area(3) - area(6)).abs();
    pass &= decreasing && diminishing;
    details.push(format!(
        "area metric 3..6: {:?} strictly decreasing {}; |Δ12→22| {:.2e} < |Δ3→6| {:.2e} {}",
        (3..=6).map(|n| format!("{:.5}", area(n))).collect::<Vec<_>>(),
        ok(decreasing),
        (area(12) - area(22)).abs(),
        (area(3) - area(6)).abs(),
        ok(diminishing)
    ));
    details.push("published area values are matched in trend only; their normalization is not defined".into());
    finish(pass, "4 n_seg study on case30_ieee", details);
}

fn envelope_enclosure() -> (usize, f64) {
    (0..10_000u64)
        .into_par_iter()
        .map(|seed| {
            let mut rng = StdRng::seed_from_u64(seed);
            let kind = if rng.random_bool(0.5) { TrigKind::Cos } else { TrigKind::Sin };
            let a = rng.random_range(-PI..PI);
            let lo = rng.random_range(-2.0 * PI..2.0 * PI);
            let hi = lo + rng.random_range(1e-4..PI);
            let n_tan = rng.random_range(1..12usize);
            let env = build_tangent_envelope(kind, a, lo, hi, n_tan).unwrap();
            let mut worst = f64::INFINITY;
            let mut violations = 0;
            for _ in 0..1000 {
                let x = rng.random_range(lo..=hi);
                let slack = env.slack(x, kind.eval(x)).unwrap();
                worst = worst.min(slack);
                violations += usize::from(slack < -1e-9);
            }
            (violations, worst)
        })
        .reduce(|| (0, f64::INFINITY), |a, b| (a.0 + b.0, a.1.min(b.1)))
}

/// Random branches; each θ sample and voltage pair must lie in the hull of
/// the lifted extreme points used by the LRQC block.
fn lifted_containment() -> (usize, usize) {
    let solver = ClarabelAdapter::default();
    let jobs: Vec<(u64, usize)> = (0..20u64).flat_map(|b| [1, 5, 12].map(|n| (b, n))).collect();
    jobs.par_iter()
        .map(|&(branch, n_seg)| {
            let mut rng = StdRng::seed_from_u64(1000 + branch);
            let a = rng.random_range(-PI..PI);
            let t_lo = rng.random_range(-FRAC_PI_2..0.0);
            let t_hi = rng.random_range(0.05..FRAC_PI_2);
            let vbox = VoltageBox {
                from_lo: rng.random_range(0.85..1.0),
                from_hi: rng.random_range(1.0..1.15),
                to_lo: rng.random_range(0.85..1.0),
                to_hi: rng.random_range(1.0..1.15),
            };
            let poly = arc_extreme_points(a, t_lo - a, t_hi - a, n_seg).unwrap();
            let points = split_theta_spans(&lift_by_voltage_box(&poly, &vbox).unwrap());
            let extreme: Vec<Vec<f64>> = points
                .iter()
                .map(|p| vec![p.v_from, p.v_to, p.theta, p.c, p.s, p.product() * p.c, p.product() * p.s])
                .collect();
            let mut failures = 0;
            for _ in 0..200 {
                let theta = rng.random_range(t_lo..=t_hi);
                let vf = rng.random_range(vbox.from_lo..=vbox.from_hi);
                let vt = rng.random_range(vbox.to_lo..=vbox.to_hi);
                let x = theta - a;
                let q = [vf, vt, theta, x.cos(), x.sin(), vf * vt * x.cos(), vf * vt * x.sin()];
                failures += usize::from(!membership_feasibility(&q, &extreme, &solver).unwrap());
            }
            (failures, 200)
        })
        .reduce(|| (0, 0), |a, b| (a.0 + b.0, a.1 + b.1))
}

fn rotation_residual() -> f64 {
    let p = two_bus();
    let br = &p.case.branches[0];
    let (vf, vt) = (Complex64::from_polar(p.vm[0], p.va[0]), Complex64::from_polar(p.vm[1], p.va[1]));
    let (sf, st) = branch_power(br, vf, vt);
    let mut rng = StdRng::seed_from_u64(7);
    let mut worst = 0.0f64;
    for _ in 0..50 {
        let psi = rng.random_range(-PI..PI);
        let rot = Complex64::from_polar(1.0, -psi);
        let (ef, et) = (sf * rot, st * rot);
        let got = rotated_branch_flows(br, p.vm[0], p.vm[1], p.va[0] - p.va[1], psi).unwrap();
        for (g, e) in got.iter().zip([ef.re, ef.im, et.re, et.im]) {
            worst = worst.max((g - e).abs());
        }
    }
    worst
}

#[test]
fn criterion_5_property_suites() {
    let mut details = Vec::new();
    let mut pass = true;

    let (violations, worst) = envelope_enclosure();
    pass &= violations == 0;
    details.push(format!("envelope enclosure: {violations} violations in 10^7 samples, worst slack {worst:.2e} {}", ok(violations == 0)));

    let (failures, total) = lifted_containment();
    pass &= failures == 0;
    details.push(format!("arc/product containment: {failures} of {total} samples outside {}", ok(failures == 0)));

    for deg in [30.0f64, 90.0, 150.0] {
        let d = deg.to_radians();
        let area = arc_extreme_points(0.0, 0.0, d, 200).unwrap().area();
        let exact = 0.5 * (d - d.sin());
        let close = (area - exact).abs() <= 1e-3;
        pass &= close;
        details.push(format!("hull area Δ={deg}°: {area:.6} vs {exact:.6} {}", ok(close)));
    }

    let residual = rotation_residual();
    let exact = residual <= 1e-10;
    pass &= exact;
    details.push(format!("rotated flows at a solved 2-bus point, 50 ψ: max residual {residual:.2e} {}", ok(exact)));

    let mut valid = true;
    for run in bench_runs() {
        for s in [run.qc, run.rqc, run.lrqc, run.lrqc_dagger] {
            valid &= s.bound <= run.reference * (1.0 + BOUND_REL_TOL);
        }
    }
    for (_, s) in nseg_runs() {
        valid &= s.bound <= 8208.52 * (1.0 + BOUND_REL_TOL);
    }
    pass &= valid;
    details.push(format!("lower-bound validity over {} solves {}", bench_runs().len() * 4 + nseg_runs().len(), ok(valid)));

    finish(pass, "5 property suites", details);
}

/// Intervals where the far endpoint is too close to the inflection have no
/// tangency root inside them; the envelope then falls back to the chord.
/// Those are counted and checked for enclosure but do not count toward the
/// 100 tangency instances.
#[test]
fn criterion_6_boundary_tangency() {
    let mut rng = StdRng::seed_from_u64(99);
    let mut worst_touch = 0.0f64;
    let mut worst_slack = f64::INFINITY;
    let (mut checked, mut fallback) = (0, 0);
    while checked < 100 {
        let kind = if rng.random_bool(0.5) { TrigKind::Cos } else { TrigKind::Sin };
        let base = match kind {
            TrigKind::Sin => 0.0,
            TrigKind::Cos => FRAC_PI_2,
        };
        let p = base + PI * f64::from(rng.random_range(-2..=2i32));
        let left = rng.random_range(0.02..PI - 0.04);
        let (lo, hi) = (p - left, p + rng.random_range(0.02..PI - left - 0.01));
        match boundary_tangency_points(kind, 0.0, lo, hi) {
            Ok((r_lo, r_hi)) => {
                let through = |r: f64, e: f64| (kind.eval(r) + kind.derivative(r) * (e - r) - kind.eval(e)).abs();
                worst_touch = worst_touch.max(through(r_lo, hi)).max(through(r_hi, lo));
                checked += 1;
            }
            Err(_) => fallback += 1,
        }
        let env = build_tangent_envelope(kind, 0.0, lo, hi, 5).unwrap();
        for k in 0..=500 {
            let x = lo + (hi - lo) * f64::from(k) / 500.0;
            worst_slack = worst_slack.min(env.slack(x, kind.eval(x)).unwrap());
        }
    }
    let pass = worst_touch <= 1e-9 && worst_slack >= -1e-9;
    finish(
        pass,
        "6 boundary tangency",
        vec![format!(
            "{checked} intervals: worst tangent miss {worst_touch:.2e}; worst envelope slack {worst_slack:.2e} \
             (including {fallback} chord-fallback intervals)"
        )],
    );
}
