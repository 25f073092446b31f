//! Network data model: buses, generators, Π-model branches and loads in
//! per-unit, plus reference AC objectives for gap reporting.

mod matpower;
mod reference;

pub use matpower::{parse_matpower_case, parse_matpower_case_with, ParseOptions};
pub use reference::{canonical_case_name, ReferenceObjectives};

use std::collections::{BTreeMap, HashMap, VecDeque};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BusRecord {
    pub id: usize,
    pub shunt_g: f64,
    pub shunt_b: f64,
    pub v_min: f64,
    pub v_max: f64,
    pub is_reference: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GeneratorRecord {
    pub bus: usize,
    pub p_min: f64,
    pub p_max: f64,
    pub q_min: f64,
    pub q_max: f64,
    /// $/h per pu².
    pub c2: f64,
    /// $/h per pu.
    pub c1: f64,
    pub c0: f64,
    pub in_service: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BranchRecord {
    pub from_bus: usize,
    pub to_bus: usize,
    pub series_g: f64,
    pub series_b: f64,
    /// Total line-charging susceptance.
    pub charging_b: f64,
    pub tap_ratio: f64,
    /// Phase shift in radians.
    pub phase_shift: f64,
    /// Apparent-power limit in pu; `None` means unlimited.
    pub s_max: Option<f64>,
    pub theta_min: f64,
    pub theta_max: f64,
}

/// Complete per-unit network description.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct NetworkCase {
    pub name: String,
    pub base_mva: f64,
    pub buses: Vec<BusRecord>,
    pub generators: Vec<GeneratorRecord>,
    pub branches: Vec<BranchRecord>,
    /// Aggregated per-unit (P_d, Q_d) keyed by bus id.
    pub loads: BTreeMap<usize, (f64, f64)>,
    #[serde(skip)]
    positions: HashMap<usize, usize>,
}

impl NetworkCase {
    /// Assembles a case and checks its structural invariants.
    pub fn new(
        name: impl Into<String>,
        base_mva: f64,
        buses: Vec<BusRecord>,
        generators: Vec<GeneratorRecord>,
        branches: Vec<BranchRecord>,
        loads: BTreeMap<usize, (f64, f64)>,
    ) -> Result<Self> {
        let mut case = NetworkCase {
            name: name.into(),
            base_mva,
            buses,
            generators,
            branches,
            loads,
            positions: HashMap::new(),
        };
        case.index_buses()?;
        case.validate()?;
        Ok(case)
    }

    fn index_buses(&mut self) -> Result<()> {
        self.positions.clear();
        for (pos, bus) in self.buses.iter().enumerate() {
            if self.positions.insert(bus.id, pos).is_some() {
                return Err(Error::validation(format!("duplicate bus id {}", bus.id)));
            }
        }
        Ok(())
    }

    fn validate(&self) -> Result<()> {
        if !(self.base_mva > 0.0) {
            return Err(Error::validation("baseMVA must be positive"));
        }
        if self.buses.is_empty() {
            return Err(Error::validation("case has no buses"));
        }
        for bus in &self.buses {
            if !(bus.v_min > 0.0 && bus.v_min <= bus.v_max) {
                return Err(Error::validation(format!(
                    "bus {}: voltage bounds [{}, {}] invalid",
                    bus.id, bus.v_min, bus.v_max
                )));
            }
        }
        match self.buses.iter().filter(|b| b.is_reference).count() {
            0 => return Err(Error::validation("missing reference bus")),
            1 => {}
            n => return Err(Error::validation(format!("{n} reference buses, expected one"))),
        }
        for gen in &self.generators {
            if !self.positions.contains_key(&gen.bus) {
                return Err(Error::validation(format!("generator at unknown bus {}", gen.bus)));
            }
            if gen.p_min > gen.p_max || gen.q_min > gen.q_max {
                return Err(Error::validation(format!(
                    "generator at bus {} has inverted limits",
                    gen.bus
                )));
            }
            if gen.c2 < 0.0 {
                return Err(Error::validation(format!(
                    "generator at bus {} has negative quadratic cost",
                    gen.bus
                )));
            }
        }
        for (k, br) in self.branches.iter().enumerate() {
            for end in [br.from_bus, br.to_bus] {
                if !self.positions.contains_key(&end) {
                    return Err(Error::validation(format!("branch {k} references unknown bus {end}")));
                }
            }
            if br.series_g == 0.0 && br.series_b == 0.0 {
                return Err(Error::validation(format!("branch {k} has zero series admittance")));
            }
            if !(br.theta_min < br.theta_max) {
                return Err(Error::validation(format!("branch {k} has empty angle interval")));
            }
            if br.theta_min < -std::f64::consts::FRAC_PI_2 - 1e-12
                || br.theta_max > std::f64::consts::FRAC_PI_2 + 1e-12
            {
                return Err(Error::validation(format!("branch {k} angle bounds exceed ±90°")));
            }
            if let Some(s) = br.s_max {
                if !(s > 0.0) {
                    return Err(Error::validation(format!("branch {k} has nonpositive rating")));
                }
            }
            if !(br.tap_ratio > 0.0) {
                return Err(Error::validation(format!("branch {k} has nonpositive tap ratio")));
            }
        }
        for bus in self.loads.keys() {
            if !self.positions.contains_key(bus) {
                return Err(Error::validation(format!("load at unknown bus {bus}")));
            }
        }
        self.check_connected()
    }

    fn check_connected(&self) -> Result<()> {
        let n = self.buses.len();
        let mut adjacency = vec![Vec::new(); n];
        for br in &self.branches {
            let (f, t) = (self.positions[&br.from_bus], self.positions[&br.to_bus]);
            adjacency[f].push(t);
            adjacency[t].push(f);
        }
        let mut seen = vec![false; n];
        let mut queue = VecDeque::from([0usize]);
        seen[0] = true;
        while let Some(u) = queue.pop_front() {
            for &v in &adjacency[u] {
                if !seen[v] {
                    seen[v] = true;
                    queue.push_back(v);
                }
            }
        }
        match seen.iter().position(|s| !s) {
            Some(p) => Err(Error::validation(format!(
                "network is disconnected: bus {} unreachable",
                self.buses[p].id
            ))),
            None => Ok(()),
        }
    }

    /// Position of a bus id in `buses`.
    pub fn bus_index(&self, id: usize) -> Option<usize> {
        self.positions.get(&id).copied()
    }

    pub fn reference_bus(&self) -> &BusRecord {
        self.buses
            .iter()
            .find(|b| b.is_reference)
            .expect("validated case has a reference bus")
    }

    pub fn bus(&self, id: usize) -> Option<&BusRecord> {
        self.bus_index(id).map(|p| &self.buses[p])
    }

    /// Per-unit load at a bus, zero when absent.
    pub fn load(&self, id: usize) -> (f64, f64) {
        self.loads.get(&id).copied().unwrap_or((0.0, 0.0))
    }

    /// Load at a bus in MW / MVAr.
    pub fn load_physical(&self, id: usize) -> (f64, f64) {
        let (p, q) = self.load(id);
        (p * self.base_mva, q * self.base_mva)
    }

    /// Generation cost in $/h for per-unit outputs.
    pub fn generation_cost(&self, p_gen: &[f64]) -> f64 {
        self.generators
            .iter()
            .zip(p_gen)
            .map(|(g, &p)| g.c2 * p * p + g.c1 * p + g.c0)
            .sum()
    }
}

/// Polar form `Y·e^{jδ}` of a branch's series admittance `g + jb`.
pub fn branch_polar_admittance(branch: &BranchRecord) -> Result<(f64, f64)> {
    let (g, b) = (branch.series_g, branch.series_b);
    if g == 0.0 && b == 0.0 {
        return Err(Error::invalid("zero series admittance has no polar form"));
    }
    Ok((g.hypot(b), b.atan2(g)))
}

/// Total argument shift `a = δ + ψ + σ` applied to a branch's trigonometric terms.
pub fn effective_argument_shift(branch: &BranchRecord, psi_from: f64) -> Result<f64> {
    let (_, delta) = branch_polar_admittance(branch)?;
    Ok(delta + psi_from + branch.phase_shift)
}

/// Optimality gap in percent of a lower bound against a reference objective.
pub fn reference_gap(bound: f64, reference: f64) -> Result<f64> {
    if !(reference > 0.0) {
        return Err(Error::invalid(format!("reference objective {reference} must be positive")));
    }
    Ok(100.0 * (reference - bound) / reference)
}
