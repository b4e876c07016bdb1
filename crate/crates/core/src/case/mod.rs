//! Network data model: buses, lines, generators and the static parameters
//! shared by the flow, dispatch and search layers.
//!
//! Power quantities are MW throughout. Reactances are per-unit on
//! [`CaseData::base_mva`]; since distribution factors are dimensionless the
//! per-unit base never leaks into flows or dispatch.

mod file;
pub mod fixtures;
pub mod matpower;
pub mod rts79;

use serde::{Deserialize, Serialize};

use crate::error::{Error, IslandPartition, Result};

pub use file::{load_case, parse_case, save_case, to_toml_string};

/// Default relay threshold multiplier when a line does not carry its own.
pub const DEFAULT_RELAY_THRESHOLD: f64 = 1.2;
/// Default per-step failure probability of a conventional unit.
pub const DEFAULT_GEN_FAIL_PROB: f64 = 1e-3;
/// Shedding cost relative to the most expensive generator.
pub const DEFAULT_SHED_COST_FACTOR: f64 = 100.0;

// Small per-bus cost increments that keep the dispatch optimum unique when
// several buses share the same unit mix.
const BUS_COST_TIE_BREAK: f64 = 1e-4;
const SHED_COST_TIE_BREAK: f64 = 1e-3;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Bus {
    pub id: usize,
    pub is_reference: bool,
    /// Load at the system peak hour (MW).
    pub base_load: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Line {
    pub id: usize,
    pub from_bus: usize,
    pub to_bus: usize,
    /// Series reactance (p.u.).
    pub reactance: f64,
    /// Long-term flow limit `L^b` (MW).
    pub flow_limit: f64,
    /// Relay trips when `|flow| > relay_threshold * flow_limit`.
    pub relay_threshold: f64,
    /// Per-step failure probability at or below the long-term limit.
    pub base_fail_prob: f64,
}

impl Line {
    /// Branch susceptance `1 / x`.
    pub fn susceptance(&self) -> f64 {
        1.0 / self.reactance
    }

    pub fn trip_level(&self) -> f64 {
        self.relay_threshold * self.flow_limit
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum GenKind {
    Conventional,
    Wind,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Generator {
    pub id: usize,
    pub bus: usize,
    /// Installed capacity (MW). For wind units the scenario supplies the
    /// available output instead.
    pub p_max: f64,
    /// Marginal cost (currency/MWh).
    pub cost: f64,
    /// Per-step random failure probability. Ignored for wind units.
    pub fail_prob: f64,
    pub kind: GenKind,
}

impl Generator {
    pub fn is_wind(&self) -> bool {
        self.kind == GenKind::Wind
    }

    /// Failure probability used by the path search.
    pub fn search_fail_prob(&self) -> f64 {
        match self.kind {
            GenKind::Conventional => self.fail_prob,
            GenKind::Wind => 0.0,
        }
    }
}

/// Validated, immutable network description.
#[derive(Debug, Clone, PartialEq)]
pub struct CaseData {
    pub name: String,
    pub base_mva: f64,
    pub buses: Vec<Bus>,
    pub lines: Vec<Line>,
    pub generators: Vec<Generator>,
    /// Per-bus load-shedding cost `c_d`.
    pub shed_cost: Vec<f64>,
    /// System peak load (MW); bus loads scale with it.
    pub peak_load: f64,
}

impl CaseData {
    /// Assemble and validate a case. When `shed_cost` is `None` the default
    /// of 100 x the highest generation cost is used.
    pub fn new(
        name: impl Into<String>,
        base_mva: f64,
        buses: Vec<Bus>,
        lines: Vec<Line>,
        generators: Vec<Generator>,
        shed_cost: Option<Vec<f64>>,
        peak_load: Option<f64>,
    ) -> Result<Self> {
        let peak_load = peak_load.unwrap_or_else(|| buses.iter().map(|b| b.base_load).sum());
        let shed_cost = match shed_cost {
            Some(c) => c,
            None => default_shed_cost(buses.len(), &generators),
        };
        let case = CaseData {
            name: name.into(),
            base_mva,
            buses,
            lines,
            generators,
            shed_cost,
            peak_load,
        };
        case.validate()?;
        Ok(case)
    }

    pub fn n_buses(&self) -> usize {
        self.buses.len()
    }

    pub fn n_lines(&self) -> usize {
        self.lines.len()
    }

    pub fn n_generators(&self) -> usize {
        self.generators.len()
    }

    /// Zero-based index of the reference bus.
    pub fn reference_index(&self) -> usize {
        self.buses
            .iter()
            .position(|b| b.is_reference)
            .expect("validated case has a reference bus")
    }

    pub fn line(&self, id: usize) -> Result<&Line> {
        id.checked_sub(1)
            .and_then(|i| self.lines.get(i))
            .ok_or(Error::UnknownId { kind: "line", id })
    }

    pub fn generator(&self, id: usize) -> Result<&Generator> {
        id.checked_sub(1)
            .and_then(|i| self.generators.get(i))
            .ok_or(Error::UnknownId {
                kind: "generator",
                id,
            })
    }

    /// Column of the node-branch incidence matrix for `line_id`: +1 at the
    /// sending bus, -1 at the receiving bus.
    pub fn incidence_column(&self, line_id: usize) -> Result<Vec<f64>> {
        let line = self.line(line_id)?;
        let mut col = vec![0.0; self.n_buses()];
        col[line.from_bus - 1] = 1.0;
        col[line.to_bus - 1] = -1.0;
        Ok(col)
    }

    /// Full N x K incidence matrix, column k for line k+1.
    pub fn incidence_matrix(&self) -> nalgebra::DMatrix<f64> {
        let mut m = nalgebra::DMatrix::zeros(self.n_buses(), self.n_lines());
        for (k, line) in self.lines.iter().enumerate() {
            m[(line.from_bus - 1, k)] = 1.0;
            m[(line.to_bus - 1, k)] = -1.0;
        }
        m
    }

    pub fn total_base_load(&self) -> f64 {
        self.buses.iter().map(|b| b.base_load).sum()
    }

    /// Installed capacity of all units (MW).
    pub fn total_capacity(&self) -> f64 {
        self.generators.iter().map(|g| g.p_max).sum()
    }

    pub fn max_generation_cost(&self) -> f64 {
        self.generators.iter().map(|g| g.cost).fold(0.0, f64::max)
    }

    /// Per-bus generation cost `c_p`: the capacity-weighted average cost of
    /// the units at each bus (zero for buses without units). Buses that would
    /// tie get small increasing increments so the dispatch optimum is unique.
    pub fn bus_costs(&self) -> Vec<f64> {
        let n = self.n_buses();
        let mut weighted = vec![0.0; n];
        let mut cap = vec![0.0; n];
        for g in &self.generators {
            weighted[g.bus - 1] += g.cost * g.p_max;
            cap[g.bus - 1] += g.p_max;
        }
        let avg: Vec<f64> = (0..n)
            .map(|i| if cap[i] > 0.0 { weighted[i] / cap[i] } else { 0.0 })
            .collect();
        break_ties(&avg, BUS_COST_TIE_BREAK)
    }

    /// Connected components of the subgraph of in-service lines.
    pub fn islands(&self, line_state: &[bool]) -> IslandPartition {
        let n = self.n_buses();
        let mut parent: Vec<usize> = (0..n).collect();
        fn find(p: &mut [usize], mut x: usize) -> usize {
            while p[x] != x {
                p[x] = p[p[x]];
                x = p[x];
            }
            x
        }
        for (line, &up) in self.lines.iter().zip(line_state) {
            if up {
                let a = find(&mut parent, line.from_bus - 1);
                let b = find(&mut parent, line.to_bus - 1);
                if a != b {
                    parent[a.max(b)] = a.min(b);
                }
            }
        }
        let mut roots: Vec<usize> = Vec::new();
        let mut islands: Vec<Vec<usize>> = Vec::new();
        for bus in 0..n {
            let r = find(&mut parent, bus);
            match roots.iter().position(|&x| x == r) {
                Some(i) => islands[i].push(bus + 1),
                None => {
                    roots.push(r);
                    islands.push(vec![bus + 1]);
                }
            }
        }
        IslandPartition { islands }
    }

    pub fn is_connected(&self, line_state: &[bool]) -> bool {
        self.islands(line_state).islands.len() == 1
    }

    fn validate(&self) -> Result<()> {
        let n = self.buses.len();
        if n == 0 {
            return Err(Error::Validation("case has no buses".into()));
        }
        for (i, b) in self.buses.iter().enumerate() {
            if b.id != i + 1 {
                return Err(Error::Validation(format!(
                    "bus ids must be dense 1..N in order; found {} at position {}",
                    b.id,
                    i + 1
                )));
            }
            if !(b.base_load >= 0.0) || !b.base_load.is_finite() {
                return Err(Error::Validation(format!("bus {} has invalid load", b.id)));
            }
        }
        let n_ref = self.buses.iter().filter(|b| b.is_reference).count();
        if n_ref != 1 {
            return Err(Error::Validation(format!(
                "exactly one reference bus required, found {n_ref}"
            )));
        }
        for (i, l) in self.lines.iter().enumerate() {
            if l.id != i + 1 {
                return Err(Error::Validation(format!(
                    "line ids must be dense 1..K in order; found {} at position {}",
                    l.id,
                    i + 1
                )));
            }
            let bus_ok = |b: usize| b >= 1 && b <= n;
            if !bus_ok(l.from_bus) || !bus_ok(l.to_bus) {
                return Err(Error::Validation(format!("line {} references unknown bus", l.id)));
            }
            if l.from_bus == l.to_bus {
                return Err(Error::Validation(format!("line {} is a self-loop", l.id)));
            }
            if !(l.reactance > 0.0) {
                return Err(Error::Validation(format!(
                    "line {} has nonpositive reactance",
                    l.id
                )));
            }
            if !(l.flow_limit > 0.0) {
                return Err(Error::Validation(format!("line {} has nonpositive limit", l.id)));
            }
            if !(l.relay_threshold > 1.0) {
                return Err(Error::Validation(format!(
                    "line {} relay threshold must exceed 1",
                    l.id
                )));
            }
            if !(0.0..=1.0).contains(&l.base_fail_prob) {
                return Err(Error::Validation(format!(
                    "line {} failure probability outside [0, 1]",
                    l.id
                )));
            }
        }
        for (i, g) in self.generators.iter().enumerate() {
            if g.id != i + 1 {
                return Err(Error::Validation(format!(
                    "generator ids must be dense 1..G in order; found {} at position {}",
                    g.id,
                    i + 1
                )));
            }
            if g.bus < 1 || g.bus > n {
                return Err(Error::Validation(format!(
                    "generator {} references unknown bus {}",
                    g.id, g.bus
                )));
            }
            if !(g.p_max >= 0.0) {
                return Err(Error::Validation(format!("generator {} has negative p_max", g.id)));
            }
            if !(0.0..=1.0).contains(&g.fail_prob) {
                return Err(Error::Validation(format!(
                    "generator {} failure probability outside [0, 1]",
                    g.id
                )));
            }
        }
        if self.shed_cost.len() != n {
            return Err(Error::Validation(format!(
                "shed_cost has {} entries for {} buses",
                self.shed_cost.len(),
                n
            )));
        }
        let max_cp = self.bus_costs().into_iter().fold(0.0, f64::max);
        if let Some(c) = self.shed_cost.iter().find(|&&c| !(c > max_cp)) {
            return Err(Error::Validation(format!(
                "shed cost {c} does not exceed the highest generation cost {max_cp}"
            )));
        }
        if !(self.peak_load >= 0.0) {
            return Err(Error::Validation("peak load must be nonnegative".into()));
        }
        if !self.is_connected(&vec![true; self.lines.len()]) {
            return Err(Error::Validation(format!(
                "network is disconnected: {:?}",
                self.islands(&vec![true; self.lines.len()]).islands
            )));
        }
        Ok(())
    }

    /// Copy of this case with all bus loads scaled so that the peak becomes
    /// `peak_load`.
    pub fn with_peak_load(&self, peak_load: f64) -> Self {
        let mut c = self.clone();
        c.peak_load = peak_load;
        c
    }
}

fn default_shed_cost(n_buses: usize, generators: &[Generator]) -> Vec<f64> {
    let max_cost = generators.iter().map(|g| g.cost).fold(0.0, f64::max);
    let base = (DEFAULT_SHED_COST_FACTOR * max_cost).max(1000.0);
    break_ties(&vec![base; n_buses], SHED_COST_TIE_BREAK)
}

/// Add `step * j` to the j-th member (in index order) of every group of
/// equal values.
fn break_ties(values: &[f64], step: f64) -> Vec<f64> {
    let mut order: Vec<usize> = (0..values.len()).collect();
    order.sort_by(|&a, &b| values[a].total_cmp(&values[b]).then(a.cmp(&b)));
    let mut out = values.to_vec();
    let mut run = 0usize;
    for w in 1..order.len() {
        if values[order[w]] == values[order[w - 1]] {
            run += 1;
            out[order[w]] += step * run as f64;
        } else {
            run = 0;
        }
    }
    out
}
