//! Small networks with AC operating points found by a brute-force power-flow
//! solve, shared by the integration tests.
#![allow(dead_code)]

use std::collections::BTreeMap;
use std::path::PathBuf;

use num_complex::Complex64;
use opfrelax::netmodel::{parse_matpower_case, BranchRecord, BusRecord, GeneratorRecord, NetworkCase};

pub fn case_path(name: &str) -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../../cases").join(format!("pglib_opf_{name}.m"))
}

pub fn load_case(name: &str) -> NetworkCase {
    let text = std::fs::read_to_string(case_path(name)).unwrap_or_else(|e| panic!("{name}: {e}"));
    parse_matpower_case(&text).unwrap()
}

/// Complex power leaving each end of a branch, from the Π-model admittances.
pub fn branch_power(br: &BranchRecord, vf: Complex64, vt: Complex64) -> (Complex64, Complex64) {
    let y = Complex64::new(br.series_g, br.series_b);
    let n = Complex64::from_polar(br.tap_ratio, br.phase_shift);
    let ytt = y + Complex64::new(0.0, br.charging_b / 2.0);
    let yff = ytt / (br.tap_ratio * br.tap_ratio);
    let i_f = yff * vf - y / n.conj() * vt;
    let i_t = -y / n * vf + ytt * vt;
    (vf * i_f.conj(), vt * i_t.conj())
}

#[derive(Clone, Copy, PartialEq)]
pub enum BusType {
    Slack,
    Pv,
    Pq,
}

/// Operating point of a small network.
pub struct AcPoint {
    pub case: NetworkCase,
    pub vm: Vec<f64>,
    pub va: Vec<f64>,
    pub pg: Vec<f64>,
    pub qg: Vec<f64>,
}

impl AcPoint {
    pub fn cost(&self) -> f64 {
        self.case.generation_cost(&self.pg)
    }
}

fn injections(buses: &[BusRecord], branches: &[BranchRecord], vm: &[f64], va: &[f64]) -> Vec<Complex64> {
    let pos = |id: usize| buses.iter().position(|b| b.id == id).unwrap();
    let v: Vec<Complex64> = vm.iter().zip(va).map(|(&m, &a)| Complex64::from_polar(m, a)).collect();
    let mut s: Vec<Complex64> =
        buses.iter().zip(&v).map(|(b, vi)| Complex64::new(b.shunt_g, -b.shunt_b) * vi.norm_sqr()).collect();
    for br in branches {
        let (f, t) = (pos(br.from_bus), pos(br.to_bus));
        let (sf, st) = branch_power(br, v[f], v[t]);
        s[f] += sf;
        s[t] += st;
    }
    s
}

/// Solves the power flow: slack buses fix (|V|, θ), PV buses fix |V| and P,
/// PQ buses fix P and Q. A coarse grid scan seeds a finite-difference Newton
/// iteration. `target[i]` is the required net injection at bus `i`, and
/// `vm` carries the fixed magnitudes.
fn solve_power_flow(
    buses: &[BusRecord],
    branches: &[BranchRecord],
    types: &[BusType],
    target: &[Complex64],
    vm0: &[f64],
) -> (Vec<f64>, Vec<f64>) {
    let mut unknowns: Vec<(usize, bool)> = Vec::new();
    for (i, ty) in types.iter().enumerate() {
        match ty {
            BusType::Slack => {}
            BusType::Pv => unknowns.push((i, false)),
            BusType::Pq => {
                unknowns.push((i, false));
                unknowns.push((i, true));
            }
        }
    }
    let unpack = |x: &[f64]| {
        let (mut vm, mut va) = (vm0.to_vec(), vec![0.0; buses.len()]);
        for (&(i, is_mag), &xi) in unknowns.iter().zip(x) {
            if is_mag {
                vm[i] = xi;
            } else {
                va[i] = xi;
            }
        }
        (vm, va)
    };
    let residual = |x: &[f64]| {
        let (vm, va) = unpack(x);
        let s = injections(buses, branches, &vm, &va);
        let mut r = Vec::new();
        for (i, ty) in types.iter().enumerate() {
            match ty {
                BusType::Slack => {}
                BusType::Pv => r.push(s[i].re - target[i].re),
                BusType::Pq => {
                    r.push(s[i].re - target[i].re);
                    r.push(s[i].im - target[i].im);
                }
            }
        }
        r
    };
    let norm = |r: &[f64]| r.iter().map(|v| v * v).sum::<f64>();

    let grid = |is_mag: bool| -> Vec<f64> {
        if is_mag {
            (0..=8).map(|k| 0.9 + 0.025 * k as f64).collect()
        } else {
            (0..=12).map(|k| -0.3 + 0.05 * k as f64).collect()
        }
    };
    let dim = unknowns.len();
    let mut best = vec![0.0; dim];
    let mut best_norm = f64::INFINITY;
    let mut idx = vec![0usize; dim];
    let axes: Vec<Vec<f64>> = unknowns.iter().map(|&(_, m)| grid(m)).collect();
    loop {
        let x: Vec<f64> = idx.iter().zip(&axes).map(|(&k, ax)| ax[k]).collect();
        let n = norm(&residual(&x));
        if n < best_norm {
            best_norm = n;
            best = x;
        }
        let mut d = 0;
        while d < dim {
            idx[d] += 1;
            if idx[d] < axes[d].len() {
                break;
            }
            idx[d] = 0;
            d += 1;
        }
        if d == dim {
            break;
        }
    }

    let mut x = best;
    for _ in 0..50 {
        let r = residual(&x);
        if norm(&r).sqrt() < 1e-14 {
            break;
        }
        let h = 1e-7;
        let mut jac = vec![vec![0.0; dim]; dim];
        for j in 0..dim {
            let mut xp = x.clone();
            xp[j] += h;
            let rp = residual(&xp);
            for i in 0..dim {
                jac[i][j] = (rp[i] - r[i]) / h;
            }
        }
        let step = gauss_solve(jac, r);
        for j in 0..dim {
            x[j] -= step[j];
        }
    }
    let r = residual(&x);
    assert!(norm(&r).sqrt() < 1e-12, "power flow did not converge: {r:?}");
    unpack(&x)
}

fn gauss_solve(mut a: Vec<Vec<f64>>, mut b: Vec<f64>) -> Vec<f64> {
    let n = b.len();
    for c in 0..n {
        let p = (c..n).max_by(|&i, &j| a[i][c].abs().total_cmp(&a[j][c].abs())).unwrap();
        a.swap(c, p);
        b.swap(c, p);
        for r in c + 1..n {
            let f = a[r][c] / a[c][c];
            for k in c..n {
                a[r][k] -= f * a[c][k];
            }
            b[r] -= f * b[c];
        }
    }
    let mut x = vec![0.0; n];
    for c in (0..n).rev() {
        let s: f64 = (c + 1..n).map(|k| a[c][k] * x[k]).sum();
        x[c] = (b[c] - s) / a[c][c];
    }
    x
}

pub fn line(from: usize, to: usize, r: f64, x: f64, b: f64) -> BranchRecord {
    let z = r * r + x * x;
    BranchRecord {
        from_bus: from,
        to_bus: to,
        series_g: r / z,
        series_b: -x / z,
        charging_b: b,
        tap_ratio: 1.0,
        phase_shift: 0.0,
        s_max: None,
        theta_min: -30f64.to_radians(),
        theta_max: 30f64.to_radians(),
    }
}

pub fn bus(id: usize, shunt_b: f64, reference: bool) -> BusRecord {
    BusRecord { id, shunt_g: 0.0, shunt_b, v_min: 0.9, v_max: 1.1, is_reference: reference }
}

pub fn generator(bus: usize, c2: f64, c1: f64) -> GeneratorRecord {
    GeneratorRecord { bus, p_min: 0.0, p_max: 5.0, q_min: -5.0, q_max: 5.0, c2, c1, c0: 10.0, in_service: true }
}

/// Solves the flow, then dispatches generators to close the balance at the
/// slack and PV buses.
pub fn operating_point(
    buses: Vec<BusRecord>,
    branches: Vec<BranchRecord>,
    gens: Vec<GeneratorRecord>,
    types: &[BusType],
    vm_fixed: &[f64],
    pv_gen_p: &BTreeMap<usize, f64>,
    loads: BTreeMap<usize, (f64, f64)>,
) -> AcPoint {
    let target: Vec<Complex64> = buses
        .iter()
        .map(|b| {
            let (pd, qd) = loads.get(&b.id).copied().unwrap_or((0.0, 0.0));
            Complex64::new(pv_gen_p.get(&b.id).copied().unwrap_or(0.0) - pd, -qd)
        })
        .collect();
    let (vm, va) = solve_power_flow(&buses, &branches, types, &target, vm_fixed);
    let s = injections(&buses, &branches, &vm, &va);
    let mut pg = Vec::new();
    let mut qg = Vec::new();
    for g in &gens {
        let i = buses.iter().position(|b| b.id == g.bus).unwrap();
        let (pd, qd) = loads.get(&g.bus).copied().unwrap_or((0.0, 0.0));
        pg.push(s[i].re + pd);
        qg.push(s[i].im + qd);
    }
    let case = NetworkCase::new("fixture", 100.0, buses, gens, branches, loads).unwrap();
    AcPoint { case, vm, va, pg, qg }
}

pub fn two_bus() -> AcPoint {
    let buses = vec![bus(1, 0.0, true), bus(2, 0.0, false)];
    let branches = vec![line(1, 2, 0.02, 0.1, 0.04)];
    let gens = vec![generator(1, 120.0, 2000.0)];
    let loads = BTreeMap::from([(2, (0.8, 0.3))]);
    operating_point(buses, branches, gens, &[BusType::Slack, BusType::Pq], &[1.02, 1.0], &BTreeMap::new(), loads)
}

/// Meshed three-bus network with a phase-shifting transformer, a bus shunt
/// and two generators.
pub fn three_bus() -> AcPoint {
    let buses = vec![bus(1, 0.0, true), bus(2, 0.0, false), bus(3, 0.05, false)];
    let mut xf = line(1, 3, 0.01, 0.08, 0.0);
    xf.tap_ratio = 0.98;
    xf.phase_shift = 0.05;
    let branches = vec![line(1, 2, 0.02, 0.12, 0.05), line(2, 3, 0.03, 0.15, 0.04), xf];
    let gens = vec![generator(1, 100.0, 2200.0), generator(2, 60.0, 2600.0)];
    let loads = BTreeMap::from([(2, (0.2, 0.05)), (3, (0.9, 0.25))]);
    operating_point(
        buses,
        branches,
        gens,
        &[BusType::Slack, BusType::Pv, BusType::Pq],
        &[1.02, 1.0, 1.0],
        &BTreeMap::from([(2, 0.6)]),
        loads,
    )
}
