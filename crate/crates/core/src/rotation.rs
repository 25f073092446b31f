//! Rotated power-flow frames and the per-bus rotation-angle heuristic.
//!
//! Dividing a bus's complex powers by `e^{jψ}` rotates every trigonometric
//! argument of the branches leaving that bus by `ψ`. The heuristic picks,
//! for each bus, the `ψ` that minimises the summed product-space hull
//! volume of the arc envelopes of its outgoing branches.

use std::collections::BTreeMap;
use std::fs;
use std::path::Path;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::netmodel::{branch_polar_admittance, BranchRecord, NetworkCase};
use crate::prodenv::{product_hull_volume, VoltageBox};

/// Constant per-bus angle used when no sweep is available, in radians.
pub const FALLBACK_PSI: f64 = -85.0 * std::f64::consts::PI / 180.0;

/// Rotates a complex power `p + jq` by `e^{−jψ}`.
pub fn rotate_pq(p: f64, q: f64, psi: f64) -> (f64, f64) {
    let (s, c) = psi.sin_cos();
    (p * c + q * s, -p * s + q * c)
}

/// Rotated flows `(P̃_f, Q̃_f, P̃_t, Q̃_t)` of a branch, both ends divided by
/// the from-bus rotation `e^{jψ}`. `theta` is `θ_f − θ_t`.
pub fn rotated_branch_flows(br: &BranchRecord, vm_from: f64, vm_to: f64, theta: f64, psi: f64) -> Result<[f64; 4]> {
    let (y, delta) = branch_polar_admittance(br)?;
    let (tau, sigma, half_bc) = (br.tap_ratio, br.phase_shift, 0.5 * br.charging_b);
    let a = delta + psi;
    let shunt_re = y * a.cos() - half_bc * psi.sin();
    let shunt_im = -(y * a.sin() + half_bc * psi.cos());
    let vv = y * vm_from * vm_to / tau;
    let wf = vm_from * vm_from / (tau * tau);
    let wt = vm_to * vm_to;
    let fwd = theta - delta - sigma - psi;
    let rev = theta + delta - sigma + psi;
    Ok([
        shunt_re * wf - vv * fwd.cos(),
        shunt_im * wf - vv * fwd.sin(),
        shunt_re * wt - vv * rev.cos(),
        shunt_im * wt + vv * rev.sin(),
    ])
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum PsiMode {
    Zero,
    Fixed,
    PerBus,
}

/// Rotation angle of every bus, in radians.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PsiAssignment {
    pub mode: PsiMode,
    pub values: BTreeMap<usize, f64>,
}

impl PsiAssignment {
    pub fn zero(case: &NetworkCase) -> Self {
        PsiAssignment { mode: PsiMode::Zero, ..fixed_psi(0.0, case) }
    }

    /// Angle of a bus; buses without an entry are unrotated.
    pub fn psi(&self, bus: usize) -> f64 {
        self.values.get(&bus).copied().unwrap_or(0.0)
    }
}

/// The same angle at every bus.
pub fn fixed_psi(value: f64, case: &NetworkCase) -> PsiAssignment {
    PsiAssignment { mode: PsiMode::Fixed, values: case.buses.iter().map(|b| (b.id, value)).collect() }
}

/// Volume curve of one bus over the candidate grid.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepResult {
    pub bus: usize,
    pub grid: Vec<f64>,
    /// Summed hull volume per candidate; empty for buses with no outgoing branch.
    pub volumes: Vec<f64>,
    pub argmin: f64,
}

/// Candidate angles from −90° to 90° inclusive.
pub fn sweep_grid(step: f64) -> Result<Vec<f64>> {
    if !(step > 0.0 && step.is_finite()) {
        return Err(Error::invalid(format!("sweep step must be positive, got {step}")));
    }
    let half = std::f64::consts::FRAC_PI_2;
    let n = ((2.0 * half) / step + 1e-9).floor() as usize;
    Ok((0..=n).map(|k| -half + k as f64 * step).collect())
}

/// Persisted per-branch volume curves, keyed by everything the curve depends on.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct VolumeCache {
    entries: BTreeMap<String, Vec<f64>>,
}

impl VolumeCache {
    pub fn load(path: &Path) -> Result<Self> {
        if !path.exists() {
            return Ok(VolumeCache::default());
        }
        Ok(serde_json::from_str(&fs::read_to_string(path)?)?)
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        if let Some(dir) = path.parent() {
            fs::create_dir_all(dir)?;
        }
        fs::write(path, serde_json::to_string(self)?)?;
        Ok(())
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }
}

fn branch_key(br: &BranchRecord, vbox: &VoltageBox, step: f64, n_seg: usize) -> String {
    format!(
        "{:e}|{:e}|{:e}|{:e}|{:e}|{:e}|{:e}|{:e}|{:e}|{:e}|{n_seg}",
        br.series_g,
        br.series_b,
        br.phase_shift,
        br.theta_min,
        br.theta_max,
        vbox.from_lo,
        vbox.from_hi,
        vbox.to_lo,
        vbox.to_hi,
        step
    )
}

fn branch_curve(br: &BranchRecord, vbox: &VoltageBox, grid: &[f64], n_seg: usize) -> Result<Vec<f64>> {
    let (_, delta) = branch_polar_admittance(br)?;
    grid.iter()
        .map(|&psi| {
            let a = delta + psi + br.phase_shift;
            product_hull_volume(a, br.theta_min - a, br.theta_max - a, n_seg, vbox)
        })
        .collect()
}

/// Per-bus sweep of the rotation angle (see [`select_bus_rotation_angles_cached`]).
pub fn select_bus_rotation_angles(case: &NetworkCase, step: f64, n_seg: usize) -> Result<(PsiAssignment, Vec<SweepResult>)> {
    select_bus_rotation_angles_cached(case, step, n_seg, &mut VolumeCache::default())
}

/// Sweeps `ψ` over [`sweep_grid`] at every bus and keeps the angle whose
/// outgoing branches have the smallest summed hull volume. Near-ties (within
/// a relative 1e−12) go to the smallest `|ψ|`, then the smallest `ψ`. Buses
/// with no outgoing branch get [`FALLBACK_PSI`].
pub fn select_bus_rotation_angles_cached(
    case: &NetworkCase,
    step: f64,
    n_seg: usize,
    cache: &mut VolumeCache,
) -> Result<(PsiAssignment, Vec<SweepResult>)> {
    if n_seg == 0 {
        return Err(Error::invalid("n_seg must be at least 1"));
    }
    let grid = sweep_grid(step)?;
    let jobs: Vec<(String, &BranchRecord, VoltageBox)> = case
        .branches
        .iter()
        .map(|br| {
            let (f, t) = (case.bus(br.from_bus).unwrap(), case.bus(br.to_bus).unwrap());
            let vbox = VoltageBox { from_lo: f.v_min, from_hi: f.v_max, to_lo: t.v_min, to_hi: t.v_max };
            (branch_key(br, &vbox, step, n_seg), br, vbox)
        })
        .collect();
    let missing: Vec<&(String, &BranchRecord, VoltageBox)> =
        jobs.iter().filter(|(key, _, _)| !cache.entries.contains_key(key)).collect();
    let computed: Vec<(String, Vec<f64>)> = missing
        .par_iter()
        .map(|(key, br, vbox)| Ok((key.clone(), branch_curve(br, vbox, &grid, n_seg)?)))
        .collect::<Result<_>>()?;
    cache.entries.extend(computed);

    let mut values = BTreeMap::new();
    let mut sweeps = Vec::with_capacity(case.buses.len());
    for bus in &case.buses {
        let mut volumes: Option<Vec<f64>> = None;
        for (key, br, _) in &jobs {
            if br.from_bus != bus.id {
                continue;
            }
            let curve = &cache.entries[key];
            match volumes.as_mut() {
                Some(acc) => acc.iter_mut().zip(curve).for_each(|(a, v)| *a += v),
                None => volumes = Some(curve.clone()),
            }
        }
        let (volumes, argmin) = match volumes {
            Some(v) => {
                let best = argmin_with_ties(&grid, &v);
                (v, best)
            }
            None => (Vec::new(), FALLBACK_PSI),
        };
        values.insert(bus.id, argmin);
        sweeps.push(SweepResult { bus: bus.id, grid: grid.clone(), volumes, argmin });
    }
    Ok((PsiAssignment { mode: PsiMode::PerBus, values }, sweeps))
}

fn argmin_with_ties(grid: &[f64], volumes: &[f64]) -> f64 {
    let min = volumes.iter().copied().fold(f64::INFINITY, f64::min);
    let tol = 1e-12 * (1.0 + min.abs());
    grid.iter()
        .zip(volumes)
        .filter(|(_, &v)| v <= min + tol)
        .map(|(&psi, _)| psi)
        .min_by(|a, b| a.abs().total_cmp(&b.abs()).then(a.total_cmp(b)))
        .unwrap_or(FALLBACK_PSI)
}
