//! TOML case files.
//!
//! ```toml
//! name = "three-bus"
//! base_mva = 100.0
//! peak_load = 150.0          # optional, defaults to the sum of bus loads
//! shed_cost = [1e4, 1e4, 1e4] # optional, defaults to 100 x max unit cost
//!
//! [defaults]                 # optional
//! relay_threshold = 1.2
//! gen_fail_prob = 1e-3
//!
//! [[bus]]
//! id = 1
//! reference = true
//! load = 0.0
//!
//! [[line]]
//! id = 1
//! from = 1
//! to = 2
//! reactance = 0.1            # p.u.
//! limit = 100.0              # MW
//! relay_threshold = 1.2      # optional
//! fail_prob = 1e-5           # optional, default 0
//!
//! [[generator]]
//! id = 1
//! bus = 1
//! p_max = 200.0
//! cost = 10.0
//! fail_prob = 1e-3           # optional
//! kind = "conventional"      # or "wind"
//! ```

use std::path::Path;

use serde::{Deserialize, Serialize};

use super::{
    Bus, CaseData, GenKind, Generator, Line, DEFAULT_GEN_FAIL_PROB, DEFAULT_RELAY_THRESHOLD,
};
use crate::error::{Error, Result};

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct CaseFile {
    name: String,
    #[serde(default = "default_base_mva")]
    base_mva: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    peak_load: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    shed_cost: Option<Vec<f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    defaults: Option<Defaults>,
    #[serde(rename = "bus")]
    buses: Vec<BusRecord>,
    #[serde(rename = "line", default)]
    lines: Vec<LineRecord>,
    #[serde(rename = "generator", default)]
    generators: Vec<GenRecord>,
}

fn default_base_mva() -> f64 {
    100.0
}

#[derive(Debug, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct Defaults {
    relay_threshold: Option<f64>,
    gen_fail_prob: Option<f64>,
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct BusRecord {
    id: usize,
    #[serde(default)]
    reference: bool,
    #[serde(default)]
    load: f64,
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct LineRecord {
    id: usize,
    from: usize,
    to: usize,
    reactance: f64,
    limit: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    relay_threshold: Option<f64>,
    #[serde(default)]
    fail_prob: f64,
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct GenRecord {
    id: usize,
    bus: usize,
    p_max: f64,
    cost: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    fail_prob: Option<f64>,
    #[serde(default = "default_kind")]
    kind: GenKind,
}

fn default_kind() -> GenKind {
    GenKind::Conventional
}

/// Read and validate a TOML case file.
pub fn load_case(path: impl AsRef<Path>) -> Result<CaseData> {
    let path = path.as_ref();
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    parse_case(&text)
}

pub fn parse_case(text: &str) -> Result<CaseData> {
    let file: CaseFile = toml::from_str(text).map_err(|e| Error::Parse(e.to_string()))?;
    let defaults = file.defaults.unwrap_or_default();
    let beta = defaults.relay_threshold.unwrap_or(DEFAULT_RELAY_THRESHOLD);
    let gen_p = defaults.gen_fail_prob.unwrap_or(DEFAULT_GEN_FAIL_PROB);

    let mut ids: Vec<usize> = file.buses.iter().map(|b| b.id).collect();
    ids.sort_unstable();
    if ids.windows(2).any(|w| w[0] == w[1]) {
        return Err(Error::Validation("duplicate bus id".into()));
    }
    let buses = file
        .buses
        .into_iter()
        .map(|b| Bus {
            id: b.id,
            is_reference: b.reference,
            base_load: b.load,
        })
        .collect();
    let lines = file
        .lines
        .into_iter()
        .map(|l| Line {
            id: l.id,
            from_bus: l.from,
            to_bus: l.to,
            reactance: l.reactance,
            flow_limit: l.limit,
            relay_threshold: l.relay_threshold.unwrap_or(beta),
            base_fail_prob: l.fail_prob,
        })
        .collect();
    let generators = file
        .generators
        .into_iter()
        .map(|g| Generator {
            id: g.id,
            bus: g.bus,
            p_max: g.p_max,
            cost: g.cost,
            fail_prob: match g.kind {
                GenKind::Wind => g.fail_prob.unwrap_or(0.0),
                GenKind::Conventional => g.fail_prob.unwrap_or(gen_p),
            },
            kind: g.kind,
        })
        .collect();
    CaseData::new(
        file.name,
        file.base_mva,
        buses,
        lines,
        generators,
        file.shed_cost,
        file.peak_load,
    )
}

/// Serialize with every field explicit so that a reload reproduces the
/// case exactly.
pub fn to_toml_string(case: &CaseData) -> String {
    let file = CaseFile {
        name: case.name.clone(),
        base_mva: case.base_mva,
        peak_load: Some(case.peak_load),
        shed_cost: Some(case.shed_cost.clone()),
        defaults: None,
        buses: case
            .buses
            .iter()
            .map(|b| BusRecord {
                id: b.id,
                reference: b.is_reference,
                load: b.base_load,
            })
            .collect(),
        lines: case
            .lines
            .iter()
            .map(|l| LineRecord {
                id: l.id,
                from: l.from_bus,
                to: l.to_bus,
                reactance: l.reactance,
                limit: l.flow_limit,
                relay_threshold: Some(l.relay_threshold),
                fail_prob: l.base_fail_prob,
            })
            .collect(),
        generators: case
            .generators
            .iter()
            .map(|g| GenRecord {
                id: g.id,
                bus: g.bus,
                p_max: g.p_max,
                cost: g.cost,
                fail_prob: Some(g.fail_prob),
                kind: g.kind,
            })
            .collect(),
    };
    toml::to_string(&file).expect("case serializes")
}

pub fn save_case(case: &CaseData, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    std::fs::write(path, to_toml_string(case)).map_err(|e| Error::io(path, e))
}
